"""Command-line behavior: exit codes, formats, modes."""

import json
import subprocess
import sys

import pytest

from aspcheck.cli import main

from _support import FIXTURES, fixture_text

INCOME_FACTS = ('income("Acme ASP",1500000000).\n'
                'income("Yoyodyne YAML",1500000000).\n')


@pytest.fixture
def income_spec(tmp_path):
    path = tmp_path / "income.yaml"
    path.write_text(fixture_text("income.yaml"))
    return str(path)


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestValidate:
    def test_income_overflow_exit_1(self, income_spec, tmp_path, capsys):
        facts = write(tmp_path, "incomes.lp", INCOME_FACTS)
        assert main(["validate", income_spec, facts]) == 1
        out = capsys.readouterr().out
        assert "sum-pos" in out
        assert "3000000000" in out

    def test_valid_corpus_exit_0(self, tmp_path, capsys):
        spec = write(tmp_path, "bday.yaml", fixture_text("bday.yaml"))
        facts = write(tmp_path, "ok.lp", "bday(sofia, date(2019,6,25)).")
        assert main(["validate", spec, facts]) == 0
        assert capsys.readouterr().out.strip() == "valid"

    def test_spec_flag_instead_of_positional(self, income_spec, tmp_path):
        facts = write(tmp_path, "ok.lp", 'income("A", 3).')
        assert main(["validate", "--spec", income_spec, facts]) == 0

    def test_reserved_field_name_exit_2(self, tmp_path, capsys):
        spec = write(tmp_path, "broken.yaml", "pred:\n    valasp: Integer\n")
        facts = write(tmp_path, "x.lp", "pred(1).")
        assert main(["validate", spec, facts]) == 2
        assert "reserved" in capsys.readouterr().err

    def test_unreadable_path_exit_3(self, income_spec, tmp_path):
        assert main(["validate", income_spec, str(tmp_path / "absent.lp")]) == 3

    def test_undecodable_file_exit_3(self, income_spec, tmp_path):
        path = tmp_path / "binary.lp"
        path.write_bytes(b"\xff\xfe\x00junk")
        assert main(["validate", income_spec, str(path)]) == 3

    def test_malformed_facts_exit_1(self, income_spec, tmp_path, capsys):
        facts = write(tmp_path, "bad.lp", "income(\n")
        assert main(["validate", income_spec, facts]) == 1
        assert "invalid input" in capsys.readouterr().err

    def test_stdin_dash(self, income_spec, monkeypatch, capsys):
        import io

        monkeypatch.setattr(sys, "stdin", io.StringIO(INCOME_FACTS))
        assert main(["validate", income_spec, "-"]) == 1

    def test_multiple_files_concatenate_in_order(self, income_spec, tmp_path):
        first = write(tmp_path, "a.lp", 'income("A", 1500000000).')
        second = write(tmp_path, "b.lp", 'income("B", 1500000000).')
        assert main(["validate", income_spec, first, second]) == 1

    def test_rules_in_input_are_evaluated(self, income_spec, tmp_path):
        program = write(tmp_path, "derive.lp",
                        'seed(1).\nincome("Derived", -1) :- seed(1).')
        assert main(["validate", income_spec, program]) == 1

    def test_all_errors_collects(self, income_spec, tmp_path, capsys):
        facts = write(tmp_path, "bad.lp", 'income("A", -1). income("B", -2).')
        assert main(["validate", "--all-errors", income_spec, facts]) == 1
        out = capsys.readouterr().out
        assert out.count("min:") == 2

    def test_valid_only_flag_accepted(self, income_spec, tmp_path):
        facts = write(tmp_path, "ok.lp", 'income("A", 3).')
        assert main(["validate", "--valid-only", income_spec, facts]) == 0

    def test_jsonl_format(self, income_spec, tmp_path, capsys):
        facts = write(tmp_path, "incomes.lp", INCOME_FACTS)
        assert main(["validate", "--format", "jsonl", income_spec, facts]) == 1
        line = capsys.readouterr().out.strip()
        record = json.loads(line)
        assert record["rule"] == "sum-pos"
        assert record["symbol"] == "income"

    def test_structured_output_is_byte_identical(self, income_spec, tmp_path, capsys):
        facts = write(tmp_path, "incomes.lp", INCOME_FACTS)
        main(["validate", "--format", "jsonl", income_spec, facts])
        first = capsys.readouterr().out
        main(["validate", "--format", "jsonl", income_spec, facts])
        second = capsys.readouterr().out
        assert first == second

    def test_exit_codes_are_reproducible(self, income_spec, tmp_path):
        facts = write(tmp_path, "incomes.lp", INCOME_FACTS)
        codes = {main(["validate", income_spec, facts]) for _ in range(3)}
        assert codes == {1}


class TestBridgeMode:
    def test_bridge_with_stub_grounder(self, income_spec, tmp_path, capsys):
        facts = write(tmp_path, "incomes.lp", INCOME_FACTS)
        cmd = f"{sys.executable} -c \"import sys; sys.stdout.write(sys.stdin.read())\""
        assert main(["validate", "--mode", "bridge", "--grounder-cmd", cmd,
                     income_spec, facts]) == 1
        assert "sum-pos" in capsys.readouterr().out

    def test_bridge_without_grounder_exit_3(self, income_spec, tmp_path,
                                            monkeypatch, capsys):
        monkeypatch.delenv("ASPCHECK_GROUNDER", raising=False)
        facts = write(tmp_path, "ok.lp", 'income("A", 3).')
        assert main(["validate", "--mode", "bridge", income_spec, facts]) == 3

    def test_failing_grounder_exit_3(self, income_spec, tmp_path):
        facts = write(tmp_path, "ok.lp", 'income("A", 3).')
        cmd = f"{sys.executable} -c \"import sys; sys.exit(7)\""
        assert main(["validate", "--mode", "bridge", "--grounder-cmd", cmd,
                     income_spec, facts]) == 3

    def test_grounder_from_environment(self, income_spec, tmp_path, monkeypatch):
        facts = write(tmp_path, "ok.lp", 'income("A", 3).')
        monkeypatch.setenv(
            "ASPCHECK_GROUNDER",
            f"{sys.executable} -c \"import sys; sys.stdout.write(sys.stdin.read())\"")
        assert main(["validate", "--mode", "bridge", income_spec, facts]) == 0


class TestCompile:
    def test_income_constraint_written(self, income_spec, tmp_path, capsys):
        out = tmp_path / "out.lp"
        assert main(["compile", income_spec, str(out)]) == 0
        assert ":- income(X1,X2), @valasp_validate_income(income(X1,X2)) != 1." \
            in out.read_text()

    def test_bday_two_constraints(self, tmp_path):
        spec = write(tmp_path, "bday.yaml", fixture_text("bday.yaml"))
        out = tmp_path / "out.lp"
        assert main(["compile", spec, str(out)]) == 0
        constraints = [l for l in out.read_text().splitlines() if l.startswith(":-")]
        assert len(constraints) == 2

    def test_stdout_dash(self, income_spec, capsys):
        assert main(["compile", income_spec, "-"]) == 0
        assert "@valasp_validate_income" in capsys.readouterr().out

    def test_unreadable_spec_exit_3(self, tmp_path):
        assert main(["compile", str(tmp_path / "absent.yaml"), "-"]) == 3

    def test_broken_spec_exit_2(self, tmp_path):
        spec = write(tmp_path, "broken.yaml", "p:\n    a: nowhere\n")
        assert main(["compile", spec, str(tmp_path / "out.lp")]) == 2


class TestCheck:
    @pytest.mark.parametrize("name", sorted(p.name for p in FIXTURES.glob("*.yaml")))
    def test_every_fixture_spec_is_clean(self, name, tmp_path):
        spec = write(tmp_path, name, fixture_text(name))
        assert main(["check", spec]) == 0

    def test_cyclic_reference_exit_2(self, tmp_path, capsys):
        spec = write(tmp_path, "cycle.yaml", "date:\n    inner: date\n")
        assert main(["check", spec]) == 2
        assert "cyclic" in capsys.readouterr().out

    def test_unknown_facet_exit_2(self, tmp_path, capsys):
        spec = write(tmp_path, "facet.yaml",
                     "p:\n    a:\n        type: Integer\n        'sum*': Integer\n")
        assert main(["check", spec]) == 2
        assert "sum*" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    spec = tmp_path / "income.yaml"
    spec.write_text(fixture_text("income.yaml"))
    facts = tmp_path / "ok.lp"
    facts.write_text('income("A", 3).')
    proc = subprocess.run(
        [sys.executable, "-m", "aspcheck.cli", "validate", str(spec), str(facts)],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip() == "valid"
