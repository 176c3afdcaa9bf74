"""CLI subcommands: flags, exit codes, deterministic output."""

import json

import pytest

from seqnorm.cli import main
from seqnorm.runner import load_plan


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture(scope="module")
def known_plan_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("plans") / "known.json"
    code = main([
        "design", "--kind", "known", "--alpha", "0.05", "--beta", "0.05",
        "--epsilon", "0.5", "--gamma", "0", "--sigma", "1",
        "--rho", "1", "--tau", "3", "--calibrate", "--out", str(path),
    ])
    assert code == 0
    return path


@pytest.fixture(scope="module")
def unknown_plan_file(tmp_path_factory):
    # fixed zeta keeps this cheap; certification still runs
    path = tmp_path_factory.mktemp("plans") / "unknown.json"
    code = main([
        "design", "--kind", "unknown", "--alpha", "0.05", "--beta", "0.05",
        "--epsilon", "0.5", "--gamma", "0",
        "--rho", "1", "--tau", "3", "--zeta", "0.3333",
        "--cell-budget", "64", "--out", str(path),
    ])
    assert code == 0
    return path


class TestDesign:
    def test_calibrated_known_is_certified(self, known_plan_file):
        plan = load_plan(known_plan_file)
        assert plan.kind == "known"
        assert plan.certified is True

    def test_zeta_anchor_certifies_after_verification(self, tmp_path, capsys):
        out = tmp_path / "plan.json"
        code, stdout, _ = run_cli([
            "design", "--kind", "known", "--alpha", "0.05", "--beta", "0.05",
            "--epsilon", "0.5", "--gamma", "0", "--sigma", "1",
            "--rho", "1", "--tau", "3", "--zeta", str(1 / 3), "--out", str(out),
        ], capsys)
        assert code == 0
        assert load_plan(out).certified is True
        assert "certified   true" in stdout

    def test_missing_sigma_is_usage_error(self, tmp_path, capsys):
        code, _, err = run_cli([
            "design", "--kind", "known", "--alpha", "0.05", "--beta", "0.05",
            "--epsilon", "0.5", "--gamma", "0",
            "--rho", "1", "--tau", "3", "--calibrate", "--out", str(tmp_path / "p.json"),
        ], capsys)
        assert code == 2
        assert "--sigma" in err

    def test_zeta_and_calibrate_mutually_exclusive(self, tmp_path, capsys):
        base = [
            "design", "--kind", "known", "--alpha", "0.05", "--beta", "0.05",
            "--epsilon", "0.5", "--gamma", "0", "--sigma", "1",
            "--rho", "1", "--tau", "3", "--out", str(tmp_path / "p.json"),
        ]
        assert run_cli(base, capsys)[0] == 2
        assert run_cli(base + ["--zeta", "0.3", "--calibrate"], capsys)[0] == 2

    def test_unknown_plan_has_no_sigma_key(self, unknown_plan_file):
        data = json.loads(unknown_plan_file.read_text())
        assert "sigma" not in data
        assert data["kind"] == "unknown"


class TestOc:
    def test_csv_shape_and_zone_rows(self, known_plan_file, capsys):
        code, out, _ = run_cli([
            "oc", str(known_plan_file),
            "--theta-min", "-1", "--theta-max", "1", "--points", "5",
        ], capsys)
        assert code == 0
        lines = out.strip().split("\n")
        assert lines[0] == "theta,oc_lower,oc_upper"
        assert len(lines) == 6
        by_theta = {row.split(",")[0]: row for row in lines[1:]}
        assert by_theta["0.0"] == "0.0,,"
        lo = float(by_theta["-0.5"].split(",")[1])
        assert lo >= 1 - 0.05  # certified plan at the zone edge

    def test_symmetric_grid_mirrors(self, known_plan_file, capsys):
        code, out, _ = run_cli([
            "oc", str(known_plan_file),
            "--theta-min", "-1.5", "--theta-max", "1.5", "--points", "7",
        ], capsys)
        rows = [line.split(",") for line in out.strip().split("\n")[1:]]
        table = {float(r[0]): r for r in rows}
        for theta in (0.5, 1.0, 1.5):
            hi = float(table[theta][2])
            lo = float(table[-theta][1])
            assert lo == pytest.approx(1.0 - hi, abs=1e-9)

    def test_mu_units(self, known_plan_file, capsys):
        code, out, _ = run_cli([
            "oc", str(known_plan_file), "--mu-units",
            "--theta-min", "-1", "--theta-max", "1", "--points", "3",
        ], capsys)
        assert code == 0
        assert out.startswith("theta,oc_lower,oc_upper\n")

    def test_mu_units_rejected_for_unknown(self, unknown_plan_file, capsys):
        code, _, err = run_cli([
            "oc", str(unknown_plan_file), "--mu-units",
            "--theta-min", "-1", "--theta-max", "1", "--points", "3",
        ], capsys)
        assert code == 2
        assert "sigma" in err

    def test_unreadable_plan(self, tmp_path, capsys):
        code, _, err = run_cli([
            "oc", str(tmp_path / "missing.json"),
            "--theta-min", "-1", "--theta-max", "1", "--points", "3",
        ], capsys)
        assert code == 1


class TestAsn:
    def test_excludes_final_stage(self, known_plan_file, capsys):
        plan = load_plan(known_plan_file)
        code, out, _ = run_cli([
            "asn", str(known_plan_file), "--theta", "-0.5", "--theta", "0.5",
        ], capsys)
        assert code == 0
        lines = out.strip().split("\n")
        header = lines[0].split(",")
        assert header[0] == "theta"
        assert len(header) - 1 == plan.num_stages - 1
        for row in lines[1:]:
            for cell in row.split(",")[1:]:
                assert 0.0 <= float(cell) <= 1.0


class TestSimulateCmd:
    def test_json_report(self, known_plan_file, capsys):
        code, out, _ = run_cli([
            "simulate", str(known_plan_file),
            "--mu", "-0.5", "--reps", "20000", "--seed", "7",
        ], capsys)
        assert code == 0
        report = json.loads(out)
        assert report["replications"] == 20000
        assert report["accept_rate"] + report["reject_rate"] == pytest.approx(1.0)
        assert sum(report["stage_histogram"]) == 20000

    def test_sigma_required_for_unknown(self, unknown_plan_file, capsys):
        code, _, err = run_cli([
            "simulate", str(unknown_plan_file),
            "--mu", "-0.5", "--reps", "100", "--seed", "7",
        ], capsys)
        assert code == 2
        code, out, _ = run_cli([
            "simulate", str(unknown_plan_file), "--sigma", "1.0",
            "--mu", "-0.5", "--reps", "100", "--seed", "7",
        ], capsys)
        assert code == 0


class TestRun:
    def test_accept_path_and_exit_codes(self, known_plan_file, tmp_path, capsys):
        session = tmp_path / "session.json"
        data = tmp_path / "data.csv"
        data.write_text("-5.0\n-5.0\n-5.0\n-5.0\n-5.0\n")
        code, out, _ = run_cli([
            "run", str(known_plan_file), "--session", str(session), "--data", str(data),
        ], capsys)
        assert code == 0
        assert out.startswith("Accepted at stage")

    def test_need_more_then_terminal(self, known_plan_file, tmp_path, capsys):
        session = tmp_path / "session.json"
        d1 = tmp_path / "d1.csv"
        d1.write_text("0.5\n-0.3\n")
        code, out, _ = run_cli([
            "run", str(known_plan_file), "--session", str(session), "--data", str(d1),
        ], capsys)
        assert code == 4
        assert out.startswith("NeedMore")
        d2 = tmp_path / "d2.csv"
        d2.write_text("9.0\n9.0\n9.0\n9.0\n9.0\n9.0\n9.0\n9.0\n9.0\n9.0\n9.0\n9.0\n9.0\n9.0\n9.0\n")
        code, out, _ = run_cli([
            "run", str(known_plan_file), "--session", str(session), "--data", str(d2),
        ], capsys)
        assert code == 3
        assert out.startswith("Rejected")

    def test_two_invocations_equal_one_combined(self, known_plan_file, tmp_path, capsys):
        rows = ["0.4", "-0.2", "1.3", "0.8", "-0.6", "0.1", "0.9", "1.1", "0.2",
                "-0.4", "0.6", "1.0", "0.3", "0.5", "-0.1", "0.7", "1.2"]
        split = tmp_path / "split.json"
        one = tmp_path / "one.json"
        (tmp_path / "p1.csv").write_text("\n".join(rows[:6]) + "\n")
        (tmp_path / "p2.csv").write_text("\n".join(rows[6:]) + "\n")
        (tmp_path / "all.csv").write_text("\n".join(rows) + "\n")
        code1, _, _ = run_cli([
            "run", str(known_plan_file), "--session", str(split),
            "--data", str(tmp_path / "p1.csv"),
        ], capsys)
        if code1 == 4:
            run_cli([
                "run", str(known_plan_file), "--session", str(split),
                "--data", str(tmp_path / "p2.csv"),
            ], capsys)
        run_cli([
            "run", str(known_plan_file), "--session", str(one),
            "--data", str(tmp_path / "all.csv"),
        ], capsys)
        a = json.loads(split.read_text())
        b = json.loads(one.read_text())
        assert a["status"] == b["status"]
        assert a["history"] == b["history"]

    def test_malformed_csv_names_line(self, known_plan_file, tmp_path, capsys):
        data = tmp_path / "bad.csv"
        data.write_text("0.5\nnot-a-number\n")
        code, _, err = run_cli([
            "run", str(known_plan_file), "--session", str(tmp_path / "s.json"),
            "--data", str(data),
        ], capsys)
        assert code == 2
        assert "line 2" in err

    def test_tampered_session_exits_one(self, known_plan_file, tmp_path, capsys):
        session = tmp_path / "session.json"
        data = tmp_path / "data.csv"
        data.write_text("-5.0\n" * 5)
        run_cli([
            "run", str(known_plan_file), "--session", str(session), "--data", str(data),
        ], capsys)
        payload = json.loads(session.read_text())
        payload["history"][0]["statistic"] = payload["history"][0]["statistic"] + 1e-6
        session.write_text(json.dumps(payload))
        more = tmp_path / "more.csv"
        more.write_text("0.0\n")
        code, _, err = run_cli([
            "run", str(known_plan_file), "--session", str(session), "--data", str(more),
        ], capsys)
        assert code == 1

    def test_uncertified_plan_refused_without_flag(self, tmp_path, capsys):
        plan_path = tmp_path / "uncert.json"
        code = main([
            "design", "--kind", "known", "--alpha", "0.05", "--beta", "0.05",
            "--epsilon", "0.5", "--gamma", "0", "--sigma", "1",
            "--rho", "1", "--tau", "3", "--zeta", "0.99", "--out", str(plan_path),
        ])
        capsys.readouterr()
        assert code == 0
        from seqnorm.runner import load_plan as lp

        assert lp(plan_path).certified is False
        data = tmp_path / "d.csv"
        data.write_text("0.1\n")
        code, _, err = run_cli([
            "run", str(plan_path), "--session", str(tmp_path / "s.json"),
            "--data", str(data),
        ], capsys)
        assert code == 1
        code, out, _ = run_cli([
            "run", str(plan_path), "--session", str(tmp_path / "s.json"),
            "--data", str(data), "--allow-uncertified",
        ], capsys)
        assert code == 4


class TestDeterminism:
    def test_design_twice_byte_identical(self, tmp_path, capsys):
        args = [
            "design", "--kind", "known", "--alpha", "0.05", "--beta", "0.05",
            "--epsilon", "0.5", "--gamma", "0", "--sigma", "1",
            "--rho", "1", "--tau", "3", "--calibrate",
        ]
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        run_cli(args + ["--out", str(p1)], capsys)
        run_cli(args + ["--out", str(p2)], capsys)
        assert p1.read_bytes() == p2.read_bytes()

    def test_oc_and_simulate_twice_byte_identical(self, known_plan_file, tmp_path, capsys):
        oc1, oc2 = tmp_path / "oc1.csv", tmp_path / "oc2.csv"
        for out in (oc1, oc2):
            run_cli([
                "oc", str(known_plan_file), "--theta-min", "-1", "--theta-max", "1",
                "--points", "9", "--out", str(out),
            ], capsys)
        assert oc1.read_bytes() == oc2.read_bytes()
        s1, s2 = tmp_path / "s1.json", tmp_path / "s2.json"
        for out in (s1, s2):
            run_cli([
                "simulate", str(known_plan_file), "--mu", "-0.5",
                "--reps", "20000", "--seed", "11", "--out", str(out),
            ], capsys)
        assert s1.read_bytes() == s2.read_bytes()
