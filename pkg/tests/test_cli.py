"""Scenario parsing, CLI subcommands, CSV round-trips, exit codes."""

from __future__ import annotations

import json

import numpy as np
import pytest

from seirvax import ImmuneFeedback, Saturated, ScenarioError
from seirvax.cli import main, read_trajectory_csv, write_trajectory_csv
from seirvax.scenario import build_law, load_scenario

P1_BLOCK = """\
[params]
N = 1000
mu = 0.01
omega = 0.02
beta = 0.9
sigma = 0.2
gamma = 0.2
"""

INITIAL_BLOCK = """\
[initial]
S = 700
E = 200
I = 100
R = 0
"""

LAW_BLOCK = """\
[law]
name = immune_feedback
g = 0.0
g1 = 0.03
"""

INTEGRATOR_BLOCK = """\
[integrator]
t_end = 400
dt = 0.01
sampling_stride = 100
"""


def write_scenario(path, *, params=P1_BLOCK, initial=INITIAL_BLOCK,
                   law=LAW_BLOCK, integrator=INTEGRATOR_BLOCK, extra=""):
    path.write_text("\n".join((params, initial, law, integrator, extra)))
    return str(path)


class TestScenarioParsing:
    def test_happy_path(self, tmp_path):
        sc = load_scenario(write_scenario(
            tmp_path / "s.ini",
            extra="[checks]\nconservation = on\n\n[outputs]\ncsv = out.csv\n"))
        assert sc.params.N == 1000.0
        assert sc.law == ImmuneFeedback(0.0, 0.03)
        assert sc.config.t_end == 400.0
        assert "conservation" in sc.checks
        assert sc.outputs == {"csv": "out.csv"}

    def test_initial_sum_mismatch_rejected(self, tmp_path):
        bad = INITIAL_BLOCK.replace("S = 700", "S = 500")
        with pytest.raises(ScenarioError, match="sums to"):
            load_scenario(write_scenario(tmp_path / "s.ini", initial=bad))

    def test_unknown_law_rejected(self, tmp_path):
        with pytest.raises(ScenarioError, match="unknown law"):
            load_scenario(write_scenario(
                tmp_path / "s.ini", law="[law]\nname = magic\n"))

    def test_missing_gain_rejected(self, tmp_path):
        with pytest.raises(ScenarioError, match="needs gain"):
            load_scenario(write_scenario(
                tmp_path / "s.ini", law="[law]\nname = immune_feedback\ng = 0\n"))

    def test_bad_number_diagnosed(self, tmp_path):
        with pytest.raises(ScenarioError, match="not a number"):
            load_scenario(write_scenario(
                tmp_path / "s.ini",
                params=P1_BLOCK.replace("mu = 0.01", "mu = fast")))

    def test_structural_error_carries_line_info(self, tmp_path):
        path = tmp_path / "s.ini"
        path.write_text("[params\nN = 1000\n")
        with pytest.raises(ScenarioError, match="line"):
            load_scenario(str(path))

    def test_missing_section(self, tmp_path):
        path = tmp_path / "s.ini"
        path.write_text(P1_BLOCK)
        with pytest.raises(ScenarioError, match=r"missing section \[initial\]"):
            load_scenario(str(path))

    def test_clip_wraps_in_saturation(self, tmp_path):
        sc = load_scenario(write_scenario(
            tmp_path / "s.ini",
            law="[law]\nname = immune_feedback\ng = 0.0\ng1 = 0.03\n"
                "clip_lo = 0\nclip_hi = 1\n"))
        assert sc.law == Saturated(ImmuneFeedback(0.0, 0.03), 0.0, 1.0)

    def test_build_law_rejects_extras(self):
        with pytest.raises(ScenarioError, match="unknown gain"):
            build_law("zero", {"g": 1.0})


class TestSimulate:
    def test_theorem3_scenario_passes(self, tmp_path, capsys):
        # g = 0, g1 = mu+omega: full immunization; final R near N.
        path = write_scenario(
            tmp_path / "s.ini",
            extra="[checks]\nconservation = on\nidentities = on\n"
                  "asymptotics = on\n\n[outputs]\ncsv = t.csv\nsvg = t.svg\n"
                  "report = t.txt\n")
        code = main(["simulate", path, "--out-dir", str(tmp_path)])
        out = capsys.readouterr().out
        assert code == 0
        assert "overall: PASS" in out
        data = read_trajectory_csv(tmp_path / "t.csv")
        assert abs(data["R"][-1] - 1000.0) <= 1e-3 * 1000.0
        assert (tmp_path / "t.svg").read_text().startswith("<svg")
        assert "overall: PASS" in (tmp_path / "t.txt").read_text()

    def test_invalid_initial_exits_one(self, tmp_path, capsys):
        path = write_scenario(tmp_path / "s.ini",
                              initial=INITIAL_BLOCK.replace("S = 700", "S = 1"))
        code = main(["simulate", path])
        assert code == 1
        assert "sums to" in capsys.readouterr().err

    def test_failing_required_gain_exits_one(self, tmp_path, capsys):
        path = write_scenario(
            tmp_path / "s.ini",
            law="[law]\nname = susceptible_linear\ng = -0.5\n")
        code = main(["simulate", path])
        assert code == 1
        assert "g >= 0" in capsys.readouterr().err

    def test_check_failure_exits_two(self, tmp_path, capsys):
        # V in [0, 1] fails for this law (limit V = 3), exit code 2.
        path = write_scenario(
            tmp_path / "s.ini",
            law="[law]\nname = susceptible_linear\ng = 0.1\n",
            extra="[checks]\npositivity = on\n")
        code = main(["simulate", path, "--out-dir", str(tmp_path)])
        assert code == 2
        assert "FAIL" in capsys.readouterr().out

    def test_overrides(self, tmp_path, capsys):
        path = write_scenario(
            tmp_path / "s.ini",
            extra="[outputs]\ncsv = t.csv\n")
        code = main(["simulate", path, "--out-dir", str(tmp_path),
                     "--t-end", "2", "--dt", "0.5"])
        assert code == 0
        data = read_trajectory_csv(tmp_path / "t.csv")
        assert data["t"][-1] == pytest.approx(2.0)
        assert len(data["t"]) == 2  # stride 100 > 4 steps: start + final only


class TestCsvRoundTrip:
    def test_full_precision(self, tmp_path, p1, mixed_state):
        from seirvax import IntegratorConfig, ZeroVax, integrate
        tr = integrate(mixed_state, p1, ZeroVax(),
                       IntegratorConfig(t_end=3.0, dt=0.01, sampling_stride=7))
        path = tmp_path / "t.csv"
        write_trajectory_csv(path, tr)
        data = read_trajectory_csv(path)
        for name, col in (("t", tr.t), ("S", tr.S), ("E", tr.E), ("I", tr.I),
                          ("R", tr.R), ("V", tr.V), ("u", tr.u)):
            assert np.array_equal(data[name], col)

    def test_header_mismatch_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,S,E,I,R,V,u\n0,1,2,3,4,5,6\n")
        with pytest.raises(ScenarioError, match="header"):
            read_trajectory_csv(path)


class TestVerify:
    @pytest.fixture
    def run_artifacts(self, tmp_path):
        path = write_scenario(
            tmp_path / "s.ini",
            extra="[checks]\nconservation = on\nidentities = off\n\n"
                  "[outputs]\ncsv = t.csv\n")
        assert main(["simulate", path, "--out-dir", str(tmp_path)]) == 0
        return tmp_path / "t.csv", path

    def test_round_trip_outcomes(self, run_artifacts, capsys):
        csv_path, scenario_path = run_artifacts
        code = main(["verify", str(csv_path), scenario_path])
        assert code == 0
        assert "overall: PASS" in capsys.readouterr().out

    def test_tampered_column_fails_conservation(self, run_artifacts, capsys):
        csv_path, scenario_path = run_artifacts
        lines = csv_path.read_text().splitlines()
        parts = lines[3].split(",")
        parts[4] = repr(float(parts[4]) + 1.0)   # R column
        lines[3] = ",".join(parts)
        csv_path.write_text("\n".join(lines) + "\n")
        code = main(["verify", str(csv_path), scenario_path])
        assert code == 2
        assert "FAIL  conservation" in capsys.readouterr().out

    def test_non_monotone_time_exits_one(self, run_artifacts, capsys):
        csv_path, scenario_path = run_artifacts
        lines = csv_path.read_text().splitlines()
        lines[2], lines[3] = lines[3], lines[2]
        csv_path.write_text("\n".join(lines) + "\n")
        code = main(["verify", str(csv_path), scenario_path])
        assert code == 1
        assert "strictly increasing" in capsys.readouterr().err

    def test_header_mismatch_exits_one(self, run_artifacts, capsys):
        csv_path, scenario_path = run_artifacts
        text = csv_path.read_text().replace("t,S,E,I,R,V,u", "t,S,E,I,R,V")
        csv_path.write_text(text)
        assert main(["verify", str(csv_path), scenario_path]) == 1


class TestEquilibriaCommand:
    def test_p1_report(self, tmp_path, capsys):
        out_json = tmp_path / "eq.json"
        code = main(["equilibria", "--json", str(out_json)])
        out = capsys.readouterr().out
        assert code == 0
        assert "endemic: S=245.000000" in out
        assert "disease_free" in out
        payload = json.loads(out_json.read_text())
        assert payload["endemic_exists"]
        kinds = [e["kind"] for e in payload["equilibria"]]
        assert kinds == ["disease_free", "endemic"]

    def test_no_endemic_branch(self, capsys):
        code = main(["equilibria", "--beta", "0.2"])
        out = capsys.readouterr().out
        assert code == 0
        assert "no endemic equilibrium" in out

    def test_sigma_neq_gamma_exits_one(self, capsys):
        code = main(["equilibria", "--gamma", "0.25"])
        assert code == 1
        assert "sigma == gamma" in capsys.readouterr().err

    def test_mu_zero_special_branch(self, capsys):
        code = main(["equilibria", "--mu", "0"])
        out = capsys.readouterr().out
        assert code == 0
        assert "mu_zero_special" in out


class TestZerodynCommand:
    def test_disease_free_start_constant(self, tmp_path, capsys):
        code = main(["zerodyn", "--z2", "1000", "--z3", "0", "--z4", "0",
                     "--t-end", "100", "--out-dir", str(tmp_path)])
        out = capsys.readouterr().out
        assert code == 0
        assert "PASS  sum conservation" in out
        header = (tmp_path / "zerodyn.csv").read_text().splitlines()[0]
        assert header == "t,z2,z3,z4,sum"

    def test_random_population_start_passes(self, tmp_path, capsys):
        code = main(["zerodyn", "--z2", "300", "--z3", "400", "--z4", "300",
                     "--t-end", "1000", "--out-dir", str(tmp_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "PASS  sum conservation" in out
        assert "PASS  boundedness" in out

    def test_off_population_start_fails_conservation(self, tmp_path, capsys):
        # sum != N: the flow pulls the sum toward N, reported honestly.
        code = main(["zerodyn", "--z2", "100", "--z3", "100", "--z4", "100",
                     "--t-end", "200", "--out-dir", str(tmp_path)])
        assert code == 2
        assert "FAIL  sum conservation" in capsys.readouterr().out

    def test_negative_start_exits_one(self, tmp_path, capsys):
        code = main(["zerodyn", "--z2", "-1", "--z3", "0", "--z4", "0",
                     "--out-dir", str(tmp_path)])
        assert code == 1


def test_adaptive_scenario_runs(tmp_path, capsys):
    path = write_scenario(
        tmp_path / "s.ini",
        integrator="[integrator]\nt_end = 50\ndt = 0.01\nadaptive = on\n"
                   "rel_tol = 1e-9\nabs_tol = 1e-9\n",
        extra="[checks]\nconservation = on\n\n[outputs]\ncsv = t.csv\n")
    code = main(["simulate", path, "--out-dir", str(tmp_path)])
    assert code == 0
    data = read_trajectory_csv(tmp_path / "t.csv")
    assert data["t"][-1] == pytest.approx(50.0, abs=1e-9)


def test_scenario_policy_and_output_zeroing(tmp_path):
    path = write_scenario(
        tmp_path / "s.ini",
        initial=INITIAL_BLOCK.replace("R = 0", "R = 0").replace("S = 700", "S = 700"),
        law="[law]\nname = output_zeroing\n",
        integrator="[integrator]\nt_end = 5\ndt = 0.01\n"
                   "positivity_policy = project\n")
    sc = load_scenario(path)
    from seirvax import OutputZeroing
    assert sc.law == OutputZeroing()
    assert sc.config.positivity_policy == "project"
