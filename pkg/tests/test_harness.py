import csv
import json
import math
from dataclasses import replace

import numpy as np
import pytest

from pidtune.harness import compare as cmp
from pidtune.harness import config as cfgmod
from pidtune.harness import oracle as orc
from pidtune.harness import runner
from pidtune.harness.cli import main, parse_seeds
from pidtune.pid import PidParams


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# --- config ------------------------------------------------------------------------


def test_case1_defaults():
    c = cfgmod.build()
    assert (c.actor_lr, c.critic_lr, c.warmup, c.batch_size, c.horizon) == (0.02, 0.0005, 70, 40, 200)
    assert (c.gamma, c.rho_new, c.beta, c.inv_beta_increment, c.sigma2, c.noise_decay) == (
        0.99, 0.006, 2.0, 0.005, 0.05, 0.005,
    )
    assert c.episode_config().state_dim == 30
    assert c.episode_config().action_box == ((0, 15), (0, 15), (0, 10))


def test_library_defaults_match_config_defaults():
    from dataclasses import fields

    from pidtune.agent import AgentConfig, Schedules

    c = cfgmod.build()
    for cls in (AgentConfig, Schedules):
        for f in fields(cls):
            assert getattr(c, f.name) == getattr(cls(), f.name), f.name


def test_case2_preset():
    c = cfgmod.build(overrides={"preset": "case2"})
    assert (c.critic_lr, c.warmup, c.inv_beta_increment, c.sigma2, c.noise_decay) == (0.008, 100, 0.0001, 0.08, 0.0045)
    assert c.episode_config().action_box == ((0, 20), (0, 20), (0, 20))
    assert c.actor_lr == 0.02 and c.batch_size == 40


def test_file_then_cli_precedence(tmp_path):
    p = tmp_path / "a.cfg"
    p.write_text("# comment\npreset = case2\nwarmup = 30   # trailing\nseed = 4\n")
    c = cfgmod.load(p, {"seed": 9})
    assert (c.preset, c.warmup, c.seed, c.critic_lr) == ("case2", 30, 9, 0.008)


@pytest.mark.parametrize(
    "text, line",
    [
        ("seed = 1\nwarmpu = 70\n", 2),
        ("seed = 1\n\nbatch_size = x\n", 3),
        ("just words\n", 1),
        ("seed = 1\nseed = 2\n", 2),
        ("seed = 1\nbatch_size = 0\n", 2),
        ("preset = case9\n", 1),
    ],
)
def test_bad_config_reports_line(tmp_path, text, line):
    p = tmp_path / "bad.cfg"
    p.write_text(text)
    with pytest.raises(cfgmod.ConfigError) as info:
        cfgmod.load(p)
    assert info.value.line == line
    assert f"bad.cfg:{line}:" in str(info.value)


def test_cli_config_error_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text("budget = 3\nnot_a_key = 1\n")
    assert main(["run", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
    assert "bad.cfg:2:" in capsys.readouterr().err


def test_dump_round_trips():
    c = cfgmod.build(overrides={"preset": "case2", "hidden": (8, 4), "reward_scale": 1 / 3})
    assert cfgmod.build(cfgmod.parse_text(cfgmod.dump(c))) == c


def test_value_syntax():
    assert cfgmod.parse_text("reward_scale = auto\n")["reward_scale"][0] is None
    parsed = cfgmod.parse_text("reward_scale = 1/11250\nhidden = 32, 16\nnormalize_state = off\n")
    assert parsed["reward_scale"][0] == 1 / 11250
    assert parsed["hidden"][0] == (32, 16)
    assert parsed["normalize_state"][0] is False


def test_seed_lists():
    assert parse_seeds("0-4") == [0, 1, 2, 3, 4]
    assert parse_seeds("1,3,7") == [1, 3, 7]
    with pytest.raises(ValueError):
        parse_seeds("1,1")


# --- run ---------------------------------------------------------------------------


def quick(**kw):
    base = dict(budget=50, warmup=45, hidden=(16, 16), updates_per_interaction=2)
    base.update(kw)
    return cfgmod.build(overrides=base)


def test_actions_inside_case1_ranges(tmp_path):
    runner.run(quick(budget=60, seed=2), tmp_path)
    rows = read_csv(tmp_path / "actions.csv")
    assert len(rows) == 60
    for r in rows:
        assert 0 <= float(r["kp"]) <= 15
        assert 0.05 <= float(r["tau_i"]) <= 15
        assert 0 <= float(r["tau_d"]) <= 10


def test_zero_budget(tmp_path):
    assert main(["run", "--budget", "0", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "learning_curve.csv").read_text().strip() == ",".join(runner.CURVE_COLUMNS)
    assert len(read_csv(tmp_path / "final_trajectory.csv")) == 200


def test_same_seed_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert main(["run", "--budget", "50", "--seed", "5", "--set", "warmup=45",
                     "--set", "hidden=16,16", "--out", str(tmp_path / name)]) == 0
    for f in ("learning_curve.csv", "actions.csv", "final_trajectory.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_different_seeds_differ(tmp_path):
    runner.run(quick(seed=0, budget=5), tmp_path / "a")
    runner.run(quick(seed=1, budget=5), tmp_path / "b")
    assert (tmp_path / "a" / "actions.csv").read_bytes() != (tmp_path / "b" / "actions.csv").read_bytes()


def test_csv_floats_round_trip(tmp_path):
    art = runner.run(quick(), tmp_path)
    rows = read_csv(tmp_path / "learning_curve.csv")
    assert list(rows[0]) == list(runner.CURVE_COLUMNS)
    assert len(rows) == len(art.records) == 50
    for rec, row in zip(art.records, rows):
        for col in ("kp", "tau_i", "tau_d", "reward", "critic_loss_1", "actor_objective", "beta", "sigma2"):
            a, b = getattr(rec, col), float(row[col])
            assert (math.isnan(a) and math.isnan(b)) or a == b
        assert row["stage"] == rec.stage and int(row["interaction"]) == rec.interaction
    traj = read_csv(tmp_path / "final_trajectory.csv")
    assert np.array_equal([float(r["y"]) for r in traj], art.trajectory.y)
    assert list(traj[0]) == ["t", "y", "u", "y_sp"]


def test_summary_record(tmp_path):
    art = runner.run(quick(save_networks=True), tmp_path)
    s = json.loads((tmp_path / "summary.json").read_text())
    assert s["interactions"] == 50 and s["failure"] is None
    assert s["final_params"]["kp"] == art.final_params.kp
    assert s["config"]["seed"] == 0 and s["wall_clock_s"] > 0
    from pidtune import nn

    assert nn.load(tmp_path / "networks" / "actor.txt").checksum() == art.networks["actor"].checksum()


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_numerical_failure_exit_code(tmp_path, capsys):
    code = main(["run", "--budget", "60", "--set", "critic_lr=1e300", "--set", "hidden=8",
                 "--set", "updates_per_interaction=1", "--out", str(tmp_path)])
    assert code == 3
    err = capsys.readouterr().err
    assert "interaction" in err
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["failure"]["interaction"] >= 39
    assert len(read_csv(tmp_path / "learning_curve.csv")) == summary["failure"]["interaction"]


def test_plateau_stop_is_opt_in():
    assert len(runner.execute(quick(budget=30)).records) == 30
    art = runner.execute(quick(budget=30, plateau_window=5, plateau_tol=1e9))
    assert art.stopped_on_plateau and len(art.records) == 10
    assert runner.plateaued([1, 1, 1, 1], 2, 0.0) and not runner.plateaued([1, 1, 1, 2], 2, 0.4)


def test_pool_matches_serial(tmp_path):
    cfgs = [quick(budget=42, seed=s) for s in (0, 1)]
    runner.run_many(cfgs, [tmp_path / "s0", tmp_path / "s1"], workers=1)
    runner.run_many(cfgs, [tmp_path / "p0", tmp_path / "p1"], workers=2)
    for s in ("0", "1"):
        assert (tmp_path / f"s{s}" / "learning_curve.csv").read_bytes() == (
            tmp_path / f"p{s}" / "learning_curve.csv"
        ).read_bytes()


def test_multi_seed_cli_layout(tmp_path):
    assert main(["run", "--budget", "3", "--seeds", "0-2", "--algo", "td3", "--out", str(tmp_path)]) == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["seed_0", "seed_1", "seed_2"]
    assert json.loads((tmp_path / "seed_2" / "summary.json").read_text())["config"]["seed"] == 2


# --- oracle ------------------------------------------------------------------------


def test_zero_gain_axis_gives_do_nothing_floor(episode):
    res = orc.run_oracle(cfgmod.build(overrides={"kp_max": 0.0}), 5)
    assert res.best_reward == pytest.approx(-11250.0, abs=1e-9)
    assert res.best_reward == episode.do_nothing_reward


def test_finer_grid_never_worse():
    c = cfgmod.build()
    assert orc.run_oracle(c, 20).best_reward >= orc.run_oracle(c, 2).best_reward
    res = orc.run_oracle(c, 7)
    assert res.best_reward >= res.coarse_reward


def test_oracle_matches_scalar_episode(plant, episode):
    from pidtune.env import episode_reward, run_episode

    res = orc.run_oracle(cfgmod.build(), 6)
    assert episode_reward(run_episode(plant, res.best, episode), episode) == pytest.approx(res.best_reward, rel=1e-9)


def test_oracle_order_independent(plant, episode):
    pts = orc.grid(orc.axes(episode.action_box, 6))
    r = orc.evaluate(plant, episode, pts)
    perm = np.random.default_rng(0).permutation(len(pts))
    r_perm = orc.evaluate(plant, episode, pts[perm])
    assert np.array_equal(r_perm, r[perm])
    assert np.array_equal(pts[orc.argbest(pts, r)], pts[perm][orc.argbest(pts[perm], r_perm)])
    tied = np.array([[2.0, 1, 1], [1.0, 5, 5], [1.0, 2, 9]])
    assert orc.argbest(tied, np.zeros(3)) == 2


def test_oracle_floors_tau_i_and_writes_csv(tmp_path):
    res = orc.run_oracle(cfgmod.build(), 3, tmp_path, workers=2)
    rows = read_csv(tmp_path / "oracle.csv")
    assert list(rows[0]) == ["kp", "tau_i", "tau_d", "reward"]
    assert len(rows) == len(res.cells) >= 27
    assert min(float(r["tau_i"]) for r in rows) == 0.05


def test_oracle_rejects_tiny_resolution():
    with pytest.raises(ValueError):
        orc.run_oracle(cfgmod.build(), 1)


# --- compare -----------------------------------------------------------------------


@pytest.fixture(scope="module")
def run_sets(tmp_path_factory):
    root = tmp_path_factory.mktemp("runs")
    for algo in ("emtd3", "td3"):
        cfgs = [quick(budget=45, warmup=40, algorithm=algo, seed=s) for s in (0, 1)]
        runner.run_many(cfgs, [root / algo / f"seed_{s}" for s in (0, 1)])
    return root


def test_identical_sides_zero_deltas(run_sets):
    runs = cmp.discover(run_sets / "emtd3")
    rep = cmp.compare_runs(runs, runs)
    for row in rep.rows:
        v = row.values
        assert v[3] == 0.0 and v[-1] == 0


def test_do_nothing_threshold_hit_at_once(run_sets):
    rep = cmp.compare_runs(cmp.discover(run_sets / "emtd3"), cmp.discover(run_sets / "td3"), -11250.0)
    for row in rep.rows:
        assert row.to_threshold_a == 1 and row.to_threshold_b == 1


def test_compare_outputs(run_sets, tmp_path, capsys):
    assert main(["compare", "--a", str(run_sets / "emtd3"), "--b", str(run_sets / "td3"), "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "compare.csv")
    assert [r["seed"] for r in rows] == ["0", "1"]
    assert list(rows[0]) == list(cmp.COMPARE_COLUMNS)
    curve = read_csv(run_sets / "td3" / "seed_1" / "learning_curve.csv")
    assert float(rows[1]["final_mean_b"]) == pytest.approx(np.mean([float(r["reward"]) for r in curve[-10:]]))
    assert "emtd3" in capsys.readouterr().out
    assert (tmp_path / "compare.txt").exists()


def test_mismatched_preset_exit_code(run_sets, tmp_path):
    runner.run(replace(quick(budget=45, preset="case2"), seed=0), tmp_path / "c2")
    assert main(["compare", "--a", str(run_sets / "emtd3"), "--b", str(tmp_path / "c2"), "--out", str(tmp_path)]) == 2


def test_mismatched_budget_exit_code(run_sets, tmp_path):
    runner.run(quick(budget=44, warmup=40, algorithm="td3"), tmp_path / "short")
    assert main(["compare", "--a", str(run_sets / "emtd3" / "seed_0"), "--b", str(tmp_path / "short"),
                 "--out", str(tmp_path)]) == 2


def test_cell_count():
    box = ((0.0, 15.0), (0.0, 15.0), (0.0, 10.0))
    p = np.array([[0, 0.05, 0], [2.9, 2.9, 1.9], [3.1, 0, 0], [15, 15, 10], [14, 14, 9]])
    assert cmp.occupied_cells(p, box) == 3
    corners = np.array([[x, y, z] for x in (0, 15) for y in (0, 15) for z in (0, 10)], dtype=float)
    assert cmp.occupied_cells(corners, box) == 8


def test_threshold_and_smoothing():
    r = np.array([-5.0, -3.0, -1.0, -4.0])
    assert cmp.interactions_to_threshold(r, -3.0) == 2
    assert cmp.interactions_to_threshold(r, 0.0) is None
    assert np.allclose(cmp.trailing_mean(np.arange(5.0), 2), [0, 0.5, 1.5, 2.5, 3.5])
    assert cmp.final_mean(np.arange(20.0)) == 14.5
