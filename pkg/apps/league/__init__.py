"""League evaluation: fixed reference strategies, checkpoint players and threshold verdicts."""

from apps.league.fixed import (
    FixedKind,
    FixedPlayer,
    UnsupportedPolicyError,
    fixed_policy_action,
    fixed_policy_probs,
    get_fixed_player,
)
from apps.league.league import (
    LEAGUE_COLUMNS,
    LeagueReport,
    LeagueRow,
    play_match,
    run_league,
)
from apps.league.players import CheckpointPlayer, EnvMismatchError, Player
from apps.league.thresholds import (
    NOT_REACHED,
    THRESHOLDS,
    Crossing,
    Evaluation,
    Level,
    ThresholdSpec,
    evaluate_thresholds,
    threshold_check,
    time_to_threshold,
)

__all__ = [
    "LEAGUE_COLUMNS",
    "NOT_REACHED",
    "THRESHOLDS",
    "CheckpointPlayer",
    "Crossing",
    "EnvMismatchError",
    "Evaluation",
    "FixedKind",
    "FixedPlayer",
    "LeagueReport",
    "LeagueRow",
    "Level",
    "Player",
    "ThresholdSpec",
    "UnsupportedPolicyError",
    "evaluate_thresholds",
    "fixed_policy_action",
    "fixed_policy_probs",
    "get_fixed_player",
    "play_match",
    "run_league",
    "threshold_check",
    "time_to_threshold",
]
