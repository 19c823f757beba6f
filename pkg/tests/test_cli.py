import pytest

from equilib import corpus
from equilib.cli import EXIT_ERROR, EXIT_MISMATCH, EXIT_OK, main, parse_expected
from equilib.errors import ParseError


@pytest.fixture
def files(tmp_path):
    def make(inst):
        d = corpus.write(inst, tmp_path / inst.name)
        paths = {k: d / f for k, f in corpus.FILES.items()}
        return {k: str(p) if p.exists() else None for k, p in paths.items()}
    return make


def args_for(f, *extra):
    out = [f["model"], f["empinfo"], *extra]
    if f["options"]:
        out += ["--opt", f["options"]]
    return out


def test_solve_writes_machine_readable_output(files, tmp_path, capsys):
    f = files(corpus.nep_oligopoly())
    out = tmp_path / "sol.txt"
    assert main(["solve", *args_for(f), "--out", str(out)]) == EXIT_OK
    assert "agent 1 (max)" in capsys.readouterr().out
    lines = out.read_text().splitlines()
    assert lines[0] == "status = Solved"
    keys = [ln.split(" = ")[0] for ln in lines[3:]]
    assert keys[:5] == [f"q({i})" for i in range(1, 6)]
    assert "obj(5)" in keys
    values = dict(ln.split(" = ") for ln in lines)
    assert float(values["q(1)"]) == pytest.approx(36.933, abs=1e-3)


def test_check_pass_and_mismatch(files, capsys):
    f = files(corpus.gnep_outrata())
    assert main(["check", *args_for(f, f["expected"])]) == EXIT_OK
    bad = corpus.gnep_outrata()
    bad = corpus.Instance("bad", bad.model, bad.empinfo, bad.options, "x(1) = 9 tol=1e-4\n")
    g = files(bad)
    assert main(["check", *args_for(g, g["expected"])]) == EXIT_MISMATCH
    assert "FAIL x(1)" in capsys.readouterr().out


def test_check_expected_error(files, capsys):
    f = files(corpus.err_shared_equ())
    assert main(["check", *args_for(f, f["expected"])]) == EXIT_OK
    assert "PASS" in capsys.readouterr().out


def test_check_wrong_error_is_a_mismatch(files):
    inst = corpus.err_shared_equ()
    inst = corpus.Instance("wrong", inst.model, inst.empinfo, inst.options, "error = MissingOwnership\n")
    f = files(inst)
    assert main(["check", *args_for(f, f["expected"])]) == EXIT_MISMATCH


def test_pipeline_error_exit_code(files, capsys):
    f = files(corpus.err_missing_ownership())
    assert main(["solve", *args_for(f)]) == EXIT_ERROR
    assert "MissingOwnership" in capsys.readouterr().err


def test_missing_file(capsys):
    assert main(["solve", "/nonexistent.mdl", "/nonexistent.emp"]) == EXIT_ERROR


def test_stats_all_strategies(files, capsys):
    f = files(corpus.luna_oligopoly(10))
    assert main(["stats", *args_for(f), "--all-strategies"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "AmbiguousReplication" in out
    switching = next(ln for ln in out.splitlines() if ln.startswith("Switching"))
    assert switching.split()[1] == "18"


def test_unsolved_exit_code(files, tmp_path):
    inst = corpus.nep_oligopoly()
    f = files(corpus.Instance("lim", inst.model, inst.empinfo, "iterlim 1\n", ""))
    assert main(["solve", *args_for(f)]) == EXIT_ERROR


def test_parse_expected():
    e = parse_expected("# comment\ndefault_tol = 1e-3\nx(1) = 2\ny = 3 tol=0.5\n")
    assert e.entries == (("x(1)", 2.0, 1e-3), ("y", 3.0, 0.5))
    assert parse_expected("error = MultipleOwnership").error == "MultipleOwnership"
    with pytest.raises(ParseError):
        parse_expected("x(1) = two")
    with pytest.raises(ParseError):
        parse_expected("just words")


def test_solve_strategy_override(files, tmp_path):
    f = files(corpus.impl_bounds(4.0))
    out = tmp_path / "sol.txt"
    assert main(["solve", *args_for(f), "--strategy", "Substitution", "--out", str(out)]) == EXIT_OK
    assert out.read_text().splitlines()[0] == "status = Solved"
