"""End-to-end command-line behavior: exit codes, reports, config handling."""

import subprocess
import sys

import pytest

from pssurf.cli import main, parse_grid, read_config
from pssurf.catalog import ConstraintError
from pssurf.solutions import SolutionGrid, sg_kink


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


# ------------------------------------------------------------- helpers


def test_parse_grid_five_fields():
    assert parse_grid("-3:3:-3:3:0.02") == (-3.0, -3.0, 0.02, 0.02, 301, 301)


def test_parse_grid_six_fields():
    x0, t0, hx, ht, nx, nt = parse_grid("0:1:0:2:0.5:0.25")
    assert (hx, ht, nx, nt) == (0.5, 0.25, 3, 9)


@pytest.mark.parametrize("bad", ["1:2:3", "0:1:0:1:0", "a:b:c:d:e",
                                 "1:0:0:1:0.1", "0:1:1:0:0.1"])
def test_parse_grid_rejects(bad):
    with pytest.raises(ConstraintError):
        parse_grid(bad)


def test_read_config_sections(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("tol = 1e-8   # comment\n"
                 "[params]\n"
                 "eta = 1.5\n"
                 "[immerse]\n"
                 "grid = -1:1:-1:1:0.1\n")
    sections = read_config(str(p))
    assert sections[""]["tol"] == "1e-8"
    assert sections["params"]["eta"] == "1.5"
    assert sections["immerse"]["grid"] == "-1:1:-1:1:0.1"


def test_read_config_bad_line(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("just words\n")
    with pytest.raises(ConstraintError):
        read_config(str(p))


# -------------------------------------------------------------- verify


def test_verify_eta_family(capsys):
    code, out = run(capsys, "verify", "--family", "sg-eta", "--eta", "1.5")
    assert code == 0
    assert "result: PASS" in out


def test_verify_reports_each_residual(capsys):
    code, out = run(capsys, "verify", "--family", "sg-basic")
    assert code == 0
    for tag in ("R1 mod equation", "R2 mod equation", "R3 mod equation",
                "off shell", "Delta12 nonzero"):
        assert tag in out


def test_verify_exponential_family_no_immersion(capsys):
    code, out = run(capsys, "verify", "--family", "hyp-ii", "--gamma", "2",
                    "--delta", "1", "--nu", "1", "--beta", "1", "--B", "1",
                    "--eta", "1")
    assert code == 0
    assert "immersion closed-form: none" in out
    assert "result: PASS" in out


def test_verify_inconsistent_amplitude_pins(capsys):
    # A is pinned by B, gamma, delta; an off relation is a constraint error
    code, out = run(capsys, "verify", "--family", "hyp-ii", "--gamma", "2",
                    "--delta", "1", "--nu", "1", "--beta", "1", "--A", "2",
                    "--B", "1", "--eta", "1")
    assert code == 2
    assert "constraint violation" in out


def test_verify_negative_alpha_noted(capsys):
    code, out = run(capsys, "verify", "--family", "hyp-i", "--A", "1",
                    "--B", "2", "--Q", "0", "--eta", "1")
    assert code == 0
    assert "alpha = 1/(A^2 - B^2) < 0" in out
    assert "result: PASS" in out


def test_verify_unknown_family(capsys):
    code, out = run(capsys, "verify", "--family", "nope")
    assert code == 2
    assert "unknown family" in out


def test_verify_missing_family(capsys):
    code, out = run(capsys, "verify")
    assert code == 2


def test_verify_zero_eta_rejected(capsys):
    code, out = run(capsys, "verify", "--family", "sg-eta", "--eta", "0")
    assert code == 2
    assert "constraint violation" in out


def test_verify_report_deterministic(capsys, tmp_path):
    r1, r2 = tmp_path / "a.txt", tmp_path / "b.txt"
    for r in (r1, r2):
        code, _ = run(capsys, "verify", "--family", "sg-eta", "--eta", "1.5",
                      "--seed", "77", "--report", str(r))
        assert code == 0
    assert r1.read_bytes() == r2.read_bytes()


# ------------------------------------------------------------ obstruct


def test_obstruct_universal_family(capsys):
    code, out = run(capsys, "obstruct", "--family", "hyp-iii-lambda",
                    "--l", "3", "--gamma-im", "1", "--lambda", "0.5",
                    "--eta", "1")
    assert code == 0
    assert "UniversalFamily" in out
    # the requested strip constant shows up in the emitted coefficients
    assert "l*exp" in out or "3" in out


def test_obstruct_inconsistent(capsys):
    code, out = run(capsys, "obstruct", "--family", "hyp-ii-gamma1")
    assert code == 0
    assert "Inconsistent" in out


def test_obstruct_zero_jet_family(capsys):
    code, out = run(capsys, "obstruct", "--family", "hyp-i-qa")
    assert code == 0
    assert "ZeroJetFamily" in out


def test_obstruct_high_order_unsupported(capsys):
    code, out = run(capsys, "obstruct", "--family", "sg-basic",
                    "--order", "2")
    assert code == 2
    assert "order 0 and 1" in out


def test_obstruct_exit_zero_for_any_verdict(capsys):
    for fam in ("hyp-iii-zero", "evo-hlnonzero", "hyp-iii-xi-tau"):
        code, out = run(capsys, "obstruct", "--family", fam)
        assert code == 0, fam


def test_gamma_and_gamma_im_are_distinct(capsys):
    # gamma is an equation constant that this family does not have;
    # gamma-im is the immersion constant and is always legal
    code, out = run(capsys, "obstruct", "--family", "hyp-iii-lambda",
                    "--gamma", "1")
    assert code == 2
    assert "unknown parameter" in out
    code, out = run(capsys, "obstruct", "--family", "hyp-iii-lambda",
                    "--gamma-im", "0.8")
    assert code == 0


def test_obstruct_report_written(capsys, tmp_path):
    rp = tmp_path / "trace.txt"
    code, _ = run(capsys, "obstruct", "--family", "hyp-ii",
                  "--report", str(rp))
    assert code == 0
    assert "Inconsistent" in rp.read_text()


# ------------------------------------------------------------- immerse


def test_immerse_small_kink(capsys, tmp_path):
    out_path = tmp_path / "patch.obj"
    code, out = run(capsys, "immerse", "--family", "sg-basic",
                    "--solution", "kink", "--a", "1",
                    "--grid", "-1:1:-1:1:0.05", "--out", str(out_path),
                    "--k-tol", "0.05", "--metric-tol", "0.05")
    assert code == 0
    assert "result: PASS" in out
    assert out_path.exists()
    assert (tmp_path / "patch.diag.txt").exists()


def test_immerse_missing_out(capsys):
    code, out = run(capsys, "immerse", "--family", "sg-basic",
                    "--solution", "kink", "--grid", "-1:1:-1:1:0.1")
    assert code == 2
    assert "missing output path" in out


def test_immerse_invalid_strip(capsys, tmp_path):
    code, out = run(capsys, "immerse", "--family", "evo-hlzero",
                    "--solution", "kink", "--grid", "-1:1:-1:1:0.1",
                    "--l", "1", "--gamma-im", "1", "--eta", "1",
                    "--lambda", "1", "--out", str(tmp_path / "x.obj"))
    assert code == 2
    assert "constraint violation" in out


def test_immerse_no_closed_form(capsys, tmp_path):
    code, out = run(capsys, "immerse", "--family", "hyp-iii-zero",
                    "--solution", "kink", "--grid", "-1:1:-1:1:0.1",
                    "--out", str(tmp_path / "x.obj"))
    assert code == 2
    assert "no closed-form immersion" in out


def test_immerse_tight_tolerance_fails(capsys, tmp_path):
    code, out = run(capsys, "immerse", "--family", "sg-basic",
                    "--solution", "kink", "--grid", "-1:1:-1:1:0.1",
                    "--out", str(tmp_path / "x.obj"),
                    "--metric-tol", "1e-12")
    assert code == 1
    assert "result: FAIL" in out


def test_immerse_unknown_solution(capsys, tmp_path):
    code, out = run(capsys, "immerse", "--family", "sg-basic",
                    "--solution", "wave?", "--grid", "-1:1:-1:1:0.1",
                    "--out", str(tmp_path / "x.obj"))
    assert code == 2
    assert "unknown solution" in out


def test_immerse_bad_grid(capsys, tmp_path):
    code, out = run(capsys, "immerse", "--family", "sg-basic",
                    "--solution", "kink", "--grid", "1:2:3",
                    "--out", str(tmp_path / "x.obj"))
    assert code == 2


def test_immerse_from_stored_grid(capsys, tmp_path):
    grid = SolutionGrid.from_solution(sg_kink(1.0), -1.0, -1.0,
                                      0.05, 0.05, 41, 41)
    src = tmp_path / "kink.csv"
    grid.to_csv(str(src))
    code, out = run(capsys, "immerse", "--family", "sg-basic",
                    "--solution", str(src), "--out", str(tmp_path / "k.obj"),
                    "--k-tol", "0.05", "--metric-tol", "0.05")
    assert code == 0
    assert "result: PASS" in out


# -------------------------------------------------------------- config


def test_config_file_supplies_params(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("[params]\neta = 1.5\n")
    code, out = run(capsys, "verify", "--family", "sg-eta",
                    "--config", str(cfg))
    assert code == 0
    assert "eta=1.5" in out


def test_flags_override_config(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("[params]\neta = 0\n")   # would be rejected on its own
    code, out = run(capsys, "verify", "--family", "sg-eta",
                    "--config", str(cfg), "--eta", "1.5")
    assert code == 0


def test_config_env_var(capsys, tmp_path, monkeypatch):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("family = sg-eta\n[params]\neta = 1.2\n")
    monkeypatch.setenv("PSSURF_CONFIG", str(cfg))
    code, out = run(capsys, "verify")
    assert code == 0
    assert "sg-eta" in out


def test_config_command_section(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("[obstruct]\nfamily = hyp-ii-gamma1\n")
    code, out = run(capsys, "obstruct", "--config", str(cfg))
    assert code == 0
    assert "Inconsistent" in out


def test_config_unknown_key_rejected(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("eta = 1.5\n")   # parameters must live in [params]
    code, out = run(capsys, "verify", "--family", "sg-eta",
                    "--config", str(cfg))
    assert code == 2
    assert "[params]" in out


def test_missing_config_file(capsys):
    code, out = run(capsys, "verify", "--family", "sg-basic",
                    "--config", "/does/not/exist.cfg")
    assert code == 2


# ------------------------------------------------------- console script


def test_console_script_entry():
    proc = subprocess.run([sys.executable, "-m", "pssurf.cli", "verify",
                           "--family", "sg-basic"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "result: PASS" in proc.stdout
