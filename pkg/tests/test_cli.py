import json
import subprocess
import sys

import pytest

from uncoopsched.assignment import SetCoverInstance, dumps_problem, reduce_set_cover, set_cover_to_dict
from uncoopsched.cli import main, parse_grid
from uncoopsched.core import NetworkConfig, NetworkTopology, four_user_config, save_config, two_user_config

YES = SetCoverInstance(("e1", "e2"), (frozenset({"e1"}), frozenset({"e2"}), frozenset({"e1", "e2"})), 1)
NO = SetCoverInstance(("e1", "e2"), (frozenset({"e1"}), frozenset({"e2"})), 1)


def body(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# uncoopsched ")
    return lines[1:]


class TestBounds:
    def test_half(self, tmp_path):
        out = tmp_path / "b.csv"
        assert main(["bounds", "--grid", "0.5", "--out", str(out)]) == 0
        assert body(out) == ["lambda,mu_lb,p_star,sigma_star,y_star,mu_ub", "0.5,0.125,0.5,-4,2,0.2"]

    def test_third(self, tmp_path):
        out = tmp_path / "b.csv"
        assert main(["bounds", "--grid", "1/3", "--out", str(out)]) == 0
        row = body(out)[1].split(",")
        assert row[0] == "0.333333333333" and row[1] == "0.333333333333"

    def test_empty_grid(self, tmp_path):
        out = tmp_path / "b.csv"
        assert main(["bounds", "--grid", "", "--out", str(out)]) == 0
        assert body(out) == ["lambda,mu_lb,p_star,sigma_star,y_star,mu_ub"]

    def test_range_grid(self):
        assert parse_grid("0.1:0.3:0.1") == [0.1, 0.2, 0.3]
        assert len(parse_grid("0.01:0.99:0.01")) == 99

    def test_bad_grid(self, tmp_path):
        assert main(["bounds", "--grid", "0.5:0.1:0", "--out", str(tmp_path / "x")]) == 2
        assert main(["bounds", "--grid", "1.5", "--out", str(tmp_path / "x")]) == 2

    def test_unwritable_output(self, tmp_path):
        assert main(["bounds", "--grid", "0.5", "--out", str(tmp_path / "no" / "b.csv")]) == 1


class TestSimulate:
    def run(self, tmp_path, cfg, *extra):
        path = tmp_path / "cfg.json"
        save_config(cfg, path)
        out = tmp_path / "sim.csv"
        code = main(["simulate", "--config", str(path), "--out", str(out), *extra])
        return code, out

    def test_outputs(self, tmp_path):
        code, out = self.run(tmp_path, four_user_config(0.25, horizon=20_000), "--policy", "lqf")
        assert code == 0
        lines = body(out)
        assert lines[0] == "slot,sum_backlog,backlog_1,backlog_2,backlog_3,backlog_4,cum_collisions"
        assert len(lines) == 21
        summary_text = (tmp_path / "sim.summary.json").read_text()
        assert summary_text.splitlines()[0] == out.read_text().splitlines()[0]
        summary = json.loads(summary_text.split("\n", 1)[1])
        assert summary["policy"] == "lqf" and summary["horizon"] == 20_000
        assert "max_backlog_growth" in summary and "collision_fraction" in summary

    def test_byte_identical(self, tmp_path):
        cfg = four_user_config(0.28, horizon=30_000, seed=5)
        _, out = self.run(tmp_path, cfg, "--policy", "priority")
        first = out.read_bytes(), (tmp_path / "sim.summary.json").read_bytes()
        _, out = self.run(tmp_path, cfg, "--policy", "priority")
        assert (out.read_bytes(), (tmp_path / "sim.summary.json").read_bytes()) == first

    def test_seed_in_header(self, tmp_path):
        _, out = self.run(tmp_path, two_user_config(0.2, 0.1, horizon=1000), "--policy", "pi_lb", "--seed", "42")
        assert out.read_text().splitlines()[0].endswith("seed=42")

    def test_horizon_zero(self, tmp_path):
        code, _ = self.run(tmp_path, two_user_config(0.2, 0.1), "--policy", "pi_lb", "--horizon", "0")
        assert code == 2

    def test_invalid_config(self, tmp_path, capsys):
        cfg = NetworkConfig(NetworkTopology(1, 1, ((),)), (0.2,), (0.2,))
        code, _ = self.run(tmp_path, cfg, "--policy", "lqf")
        assert code == 2
        assert "access set empty for user 1" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "nope.json"), "--policy", "lqf",
                     "--out", str(tmp_path / "o.csv")]) == 1


class TestRegion:
    def test_two_user(self, tmp_path):
        path = tmp_path / "cfg.json"
        save_config(two_user_config(0.5), path)
        out = tmp_path / "r.csv"
        assert main(["region", "--config", str(path), "--axis", "a1,u1", "--step", "0.25", "--out", str(out)]) == 0
        lines = body(out)
        assert lines[0] == "rate_1,urate_1,sufficient,necessary"
        assert "0.25,0.25,true,true" in lines
        assert "0.5,0.5,false,false" in lines

    def test_four_user_symmetric(self, tmp_path):
        path = tmp_path / "cfg.json"
        save_config(four_user_config(0.0), path)
        out = tmp_path / "r.csv"
        assert main(["region", "--config", str(path), "--axis", "1,2,3,4", "--step", "0.01",
                     "--symmetric", "--upper", "0.5", "--out", str(out)]) == 0
        lines = body(out)
        assert lines[0] == "rate_1,rate_2,rate_3,rate_4,sufficient,necessary"
        assert "0.3,0.3,0.3,0.3,true,true" in lines
        assert lines[lines.index("0.3,0.3,0.3,0.3,true,true") + 1].startswith("0.31,0.31,0.31,0.31,false")

    def test_step_too_large(self, tmp_path):
        path = tmp_path / "cfg.json"
        save_config(two_user_config(0.5), path)
        assert main(["region", "--config", str(path), "--axis", "1", "--step", "0.6",
                     "--out", str(tmp_path / "r.csv")]) == 2


class TestAssign:
    def write(self, tmp_path, problem):
        path = tmp_path / "p.json"
        path.write_text(dumps_problem(problem))
        return path

    def report(self, out):
        return json.loads(out.read_text().split("\n", 1)[1])

    def test_yes(self, tmp_path):
        path = self.write(tmp_path, reduce_set_cover(YES))
        out = tmp_path / "a.json"
        assert main(["assign", "--problem", str(path), "--out", str(out)]) == 0
        rep = self.report(out)
        assert rep["feasible"] is True
        assert sorted(rep["assignment"].values()) == [1, 2, 3]

    def test_no_via_set_cover_file(self, tmp_path):
        path = tmp_path / "sc.json"
        path.write_text(json.dumps({"set_cover": set_cover_to_dict(NO)}))
        out = tmp_path / "a.json"
        assert main(["assign", "--problem", str(path), "--out", str(out)]) == 0
        assert self.report(out)["feasible"] is False

    def test_greedy(self, tmp_path):
        path = self.write(tmp_path, reduce_set_cover(YES))
        out = tmp_path / "a.json"
        assert main(["assign", "--problem", str(path), "--mode", "greedy", "--out", str(out)]) == 0
        assert self.report(out)["feasible"] is True

    def test_size_guard(self, tmp_path):
        subsets = tuple(frozenset({"e"}) for _ in range(20))
        path = self.write(tmp_path, reduce_set_cover(SetCoverInstance(("e",), subsets, 1)))
        assert main(["assign", "--problem", str(path), "--out", str(tmp_path / "a.json")]) == 3

    def test_byte_identical(self, tmp_path):
        path = self.write(tmp_path, reduce_set_cover(YES))
        out = tmp_path / "a.json"
        main(["assign", "--problem", str(path), "--out", str(out)])
        first = out.read_bytes()
        main(["assign", "--problem", str(path), "--out", str(out)])
        assert out.read_bytes() == first


def test_module_entry_point(tmp_path):
    out = tmp_path / "b.csv"
    proc = subprocess.run([sys.executable, "-m", "uncoopsched", "bounds", "--grid", "0.5", "--out", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert out.read_text().splitlines()[-1] == "0.5,0.125,0.5,-4,2,0.2"


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["simulate"])
    assert exc.value.code == 2
