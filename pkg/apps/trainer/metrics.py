"""
Prometheus metrics for training and evaluation runs.

Defines and registers all metrics on a custom CollectorRegistry so that
test runs in the same process do not conflict with one another. The
registry is *not* the global default; ``write_metrics()`` dumps it in the
text exposition format at the end of a run.

Metrics exposed:
  - loqa_iterations_total             counter   (env)
  - loqa_replay_pushes_total          counter
  - loqa_league_episodes_total        counter   (opponent)
  - loqa_iteration_duration_seconds   histogram (env)
"""

from __future__ import annotations

from pathlib import Path

from prometheus_client import CollectorRegistry, Counter, Histogram, write_to_textfile

# ── Isolated registry ──────────────────────────────────────────────────────────
REGISTRY: CollectorRegistry = CollectorRegistry()

# ── Metrics ───────────────────────────────────────────────────────────────────
ITERATIONS_TOTAL: Counter = Counter(
    "loqa_iterations_total",
    "Training iterations completed.",
    ["env"],
    registry=REGISTRY,
)

REPLAY_PUSHES_TOTAL: Counter = Counter(
    "loqa_replay_pushes_total",
    "Actor snapshots pushed to the agent replay buffer.",
    registry=REGISTRY,
)

LEAGUE_EPISODES_TOTAL: Counter = Counter(
    "loqa_league_episodes_total",
    "Evaluation episodes played, per opponent kind.",
    ["opponent"],
    registry=REGISTRY,
)

ITERATION_DURATION_SECONDS: Histogram = Histogram(
    "loqa_iteration_duration_seconds",
    "Wall-clock duration of one training iteration.",
    ["env"],
    buckets=(0.01, 0.05, 0.1, 0.25, 0.5, 1.0, 2.5, 5.0, 10.0, 30.0),
    registry=REGISTRY,
)


def write_metrics(path: Path) -> Path:
    """Write the registry to ``path`` in Prometheus text format."""
    path.parent.mkdir(parents=True, exist_ok=True)
    write_to_textfile(str(path), REGISTRY)
    return path
