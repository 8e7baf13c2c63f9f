"""Tests for fixed strategies, checkpoint players and league evaluation."""

from __future__ import annotations

import csv
import dataclasses
import io
from pathlib import Path

import numpy as np
import pytest

from apps.envs import CoinGame, IteratedPrisonersDilemma, coin_encode
from apps.envs.models import CoinColor, CoinState, IpdTag, Move
from apps.league import (
    LEAGUE_COLUMNS,
    CheckpointPlayer,
    EnvMismatchError,
    FixedKind,
    FixedPlayer,
    LeagueReport,
    Player,
    UnsupportedPolicyError,
    fixed_policy_action,
    fixed_policy_probs,
    get_fixed_player,
    run_league,
)
from apps.trainer import TrainConfig, train
from apps.trainer.persist import save_state

def test_ipd_fixed_strategies() -> None:
    obs = np.eye(5)
    assert fixed_policy_action("AC", obs, "ipd").tolist() == [0] * 5
    assert fixed_policy_action("AD", obs, "ipd").tolist() == [1] * 5
    np.testing.assert_array_equal(fixed_policy_probs("Random", obs, "ipd"), np.full((5, 2), 0.5))


def test_tit_for_tat_copies_the_opponents_last_move() -> None:
    tags = [IpdTag.START, IpdTag.CC, IpdTag.CD, IpdTag.DC, IpdTag.DD]
    actions = fixed_policy_action(FixedKind.TFT, np.eye(5)[tags], "ipd")
    assert actions.tolist() == [0, 0, 1, 0, 1]


def _coin_obs(coin: tuple[int, int], color: CoinColor) -> np.ndarray:
    state = CoinState(
        grid_size=3,
        pos1=np.array([[0, 0]]),
        pos2=np.array([[2, 2]]),
        coin_pos=np.array([coin]),
        coin_color=np.array([color]),
        prev_actions=np.full((1, 2), -1),
    )
    return coin_encode(state, 0)


def test_coin_defector_takes_any_coin() -> None:
    assert fixed_policy_action("AD", _coin_obs((0, 1), CoinColor.BLUE), "coin")[0] == Move.RIGHT
    assert fixed_policy_action("AD", _coin_obs((1, 0), CoinColor.RED), "coin")[0] == Move.DOWN


def test_coin_cooperator_chases_only_its_own_coin() -> None:
    assert fixed_policy_action("AC", _coin_obs((0, 1), CoinColor.RED), "coin")[0] == Move.RIGHT


def test_coin_cooperator_steps_around_the_other_coin() -> None:
    # Coin to the right; moving left keeps the distance without landing on it.
    action = fixed_policy_action("AC", _coin_obs((0, 1), CoinColor.BLUE), "coin")[0]
    assert action == Move.LEFT


def test_coin_random_is_uniform() -> None:
    probs = fixed_policy_probs("Random", _coin_obs((1, 1), CoinColor.RED), "coin")
    np.testing.assert_array_equal(probs, [[0.25] * 4])


def test_tit_for_tat_is_ipd_only() -> None:
    with pytest.raises(UnsupportedPolicyError) as exc_info:
        get_fixed_player("TFT", "coin")
    assert (exc_info.value.kind, exc_info.value.env) == ("TFT", "coin")


def test_unknown_fixed_policy() -> None:
    with pytest.raises(ValueError, match="Available"):
        get_fixed_player("Grim", "ipd")


def test_fixed_player_satisfies_protocol() -> None:
    player = get_fixed_player("AD", "ipd")
    assert isinstance(player, Player)
    assert player.name == "AD"


def _ipd_league(ipd_env: IteratedPrisonersDilemma, opponents: tuple[str, ...]) -> LeagueReport:
    entrants = [FixedPlayer(FixedKind(k), "ipd") for k in ("AC", "AD", "TFT")]
    return run_league(entrants, ipd_env, opponents=opponents, episodes=5, master_seed=1)


def test_ipd_league_matches_payoff_streams(ipd_env: IteratedPrisonersDilemma) -> None:
    report = _ipd_league(ipd_env, ("AC", "AD", "self"))
    assert report.row("AC", "AC").mean_reward == -1.0
    assert report.row("AC", "AD").mean_reward == -3.0
    assert report.row("AD", "AC").mean_reward == 0.0
    assert report.row("AD", "AD").mean_reward == -2.0
    assert report.row("AD", "self").mean_reward == -2.0
    assert report.row("TFT", "AC").mean_reward == -1.0
    assert report.row("TFT", "AD").mean_reward == pytest.approx((-3.0 + 3 * -2.0) / 4)
    assert report.row("TFT", "self").mean_reward == -1.0
    assert report.row("AC", "AD").stderr == 0.0
    assert report.row("AC", "AD").normalized_mean is None


def test_other_seeds_pools_every_other_entrant(ipd_env: IteratedPrisonersDilemma) -> None:
    report = _ipd_league(ipd_env, ("other_seeds",))
    row = report.row("AC", "other_seeds")
    assert row.episodes == 10
    assert row.mean_reward == pytest.approx((-3.0 + -1.0) / 2)


def test_aggregate_rows_average_over_entrants(ipd_env: IteratedPrisonersDilemma) -> None:
    report = _ipd_league(ipd_env, ("AD",))
    agg = report.row("all", "AD")
    assert agg.mean_reward == pytest.approx((-3.0 - 2.0 - 2.25) / 3)
    assert agg.episodes == 5


def test_league_csv_is_deterministic(tmp_path: Path, ipd_env: IteratedPrisonersDilemma) -> None:
    first = _ipd_league(ipd_env, ("Random", "AD"))
    second = _ipd_league(ipd_env, ("Random", "AD"))
    assert first.to_csv() == second.to_csv()
    path = first.write_csv(tmp_path / "league" / "league.csv")
    rows = list(csv.reader(io.StringIO(path.read_text())))
    assert tuple(rows[0]) == LEAGUE_COLUMNS
    assert len(rows) == 1 + 3 * 2 + 2


def test_league_rejects_bad_arguments(ipd_env: IteratedPrisonersDilemma) -> None:
    entrants = [FixedPlayer(FixedKind.AC, "ipd")]
    with pytest.raises(ValueError, match="episodes"):
        run_league(entrants, ipd_env, episodes=0)
    with pytest.raises(ValueError, match="Available"):
        run_league(entrants, ipd_env, opponents=("Grim",))
    with pytest.raises(UnsupportedPolicyError):
        run_league([FixedPlayer(FixedKind.AC, "coin")], CoinGame(), opponents=("TFT",))


def test_coin_cooperators_share_the_coins() -> None:
    env = CoinGame(grid_size=3, game_length=50)
    report = run_league([FixedPlayer(FixedKind.AC, "coin")], env, opponents=("self",))
    row = report.row("AC", "self")
    assert 0.25 <= row.mean_reward <= 0.45
    assert row.normalized_mean == pytest.approx(2 * row.mean_reward)


@pytest.fixture()
def coin_checkpoints(tmp_path: Path, coin_config: TrainConfig) -> list[Path]:
    paths = []
    for seed in (42, 43):
        result = train(dataclasses.replace(coin_config, seed=seed, iterations=1))
        paths.extend(save_state(result.state, tmp_path / f"seed{seed}"))
    return paths


def test_checkpoint_players_in_a_coin_league(
    coin_checkpoints: list[Path], coin_env: CoinGame
) -> None:
    entrants = [CheckpointPlayer.from_path(p, coin_env) for p in coin_checkpoints]
    assert [e.name for e in entrants] == ["seed42", "seed43"]
    report = run_league(entrants, coin_env, opponents=("AD", "self", "other_seeds"), episodes=4)
    assert len(report.rows) == 2 * 3 + 3
    row = report.row("seed43", "other_seeds")
    assert row.episodes == 4
    assert row.normalized_mean == pytest.approx(2 * row.mean_reward)


def test_checkpoint_from_another_environment(coin_checkpoints: list[Path]) -> None:
    player = CheckpointPlayer.from_path(coin_checkpoints[0])
    with pytest.raises(EnvMismatchError) as exc_info:
        player.ensure_env(CoinGame(grid_size=4, game_length=4))
    assert (exc_info.value.expected, exc_info.value.got) == ("coin:4", "coin:3")
    with pytest.raises(EnvMismatchError):
        run_league([player], IteratedPrisonersDilemma(game_length=4), opponents=("AD",))
