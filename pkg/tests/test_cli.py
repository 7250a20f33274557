import csv
import io
import json
import re

import pytest

from spurcheck import cli


def run(argv, capsys):
    code = cli.run(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_no_args_prints_help(capsys):
    code, out, _ = run([], capsys)
    assert code == 0
    assert "usage: spurcheck" in out and "audit-sim" in out


def test_documented_example_parses(fixture_dir):
    cfg = cli.parse_args(["audit-sim", "--class", "rw_drift", "--count", "1000", "--seed", "42",
                          "--target", str(fixture_dir / "tightness.csv"),
                          "--fixtures", str(fixture_dir)])
    assert cfg.command == "audit-sim"
    assert cfg.options["cls"] == "rw_drift" and cfg.count == 1000 and cfg.seed == 42
    assert cfg.paths["target"].endswith("tightness.csv")
    assert cfg.overrides["exact_cutoff"] == 9


@pytest.mark.parametrize("argv", [
    ["audit-sim", "--alpha", "1.5"],
    ["audit-sim", "--count", "0"],
    ["audit-sim", "--bogus"],
    ["audit-sim", "--seed", "-1"],
    ["audit-catalog", "--min-overlap", "2"],
    ["ingest-check", "--span", "0"],
    ["audit-sim", "--param", "wobble=1"],
    ["audit-sim", "--class", "rw_drift", "--param", "slope_low=1"],
    ["table1", "--predictor", "x=nodataset"],
    ["frobnicate"],
])
def test_usage_errors_exit_2_with_one_line(argv, capsys, fixture_dir):
    code, out, err = run(argv + ["--fixtures", str(fixture_dir)] if argv[0] != "frobnicate" else argv, capsys)
    assert code == 2
    assert out == ""
    assert len(err.strip().splitlines()) == 1 and err.startswith("spurcheck: error:")


def test_missing_input_path_is_usage_error(capsys, tmp_path):
    code, _, err = run(["table1", "--fixtures", str(tmp_path)], capsys)
    assert code == 2 and "not found" in err


def test_fixture_directory_from_environment(monkeypatch, fixture_dir, tmp_path):
    monkeypatch.setenv(cli.FIXTURES_ENV, str(fixture_dir))
    monkeypatch.chdir(tmp_path)
    cfg = cli.parse_args(["table1"])
    assert cfg.paths["study"] == str(fixture_dir / "study.csv")


def test_config_file_and_flag_precedence(tmp_path, fixture_dir):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"count": 50, "class": "rw_plain", "alpha": 0.01, "mode": "raw"}))
    base = ["audit-sim", "--config", str(conf), "--fixtures", str(fixture_dir)]
    cfg = cli.parse_args(base)
    assert (cfg.count, cfg.options["cls"], cfg.alpha, cfg.mode) == (50, "rw_plain", 0.01, "raw")
    cfg = cli.parse_args(base + ["--count", "7", "--alpha", "0.05"])
    assert (cfg.count, cfg.alpha, cfg.options["cls"]) == (7, 0.05, "rw_plain")


@pytest.mark.parametrize("content", ['{"count": 0}', '{"nope": 1}', '[1]', "{bad", '{"mode": "x"}'])
def test_bad_config_is_usage_error(tmp_path, capsys, content, fixture_dir):
    conf = tmp_path / "c.json"
    conf.write_text(content)
    code, _, err = run(["audit-sim", "--config", str(conf), "--fixtures", str(fixture_dir)], capsys)
    assert code == 2 and len(err.strip().splitlines()) == 1


def _help(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.build_parser().parse_args(argv + ["--help"])
    assert exc.value.code == 0
    return capsys.readouterr().out


@pytest.mark.parametrize("command", cli.COMMANDS)
def test_help_and_parser_flags_agree(command, capsys):
    text = _help([command], capsys)
    shown = set(re.findall(r"(?<![\w-])(--[a-z][a-z-]*)", text)) - {"--help"}
    sub = cli._subparser(cli.build_parser(), command)
    accepted = {o for a in sub._actions for o in a.option_strings if o.startswith("--")} - {"--help"}
    assert shown == accepted
    # every option with a value lists its default
    for a in sub._actions:
        if a.option_strings and a.help and a.default not in (None, False, []) and a.dest != "help":
            assert "(default:" in text


def test_every_flag_is_accepted(fixture_dir, tmp_path):
    values = {
        "--config": None, "--fixtures": str(fixture_dir), "--format": "csv", "--out": "-",
        "--count": "3", "--seed": "1", "--length": "50", "--start-year": "1900",
        "--param": "noise_scale=2", "--target": str(fixture_dir / "tightness.csv"),
        "--study": str(fixture_dir / "study.csv"), "--mode": "raw",
        "--with-catalog": str(fixture_dir / "owid"), "--min-overlap": "12",
        "--alpha": "0.01", "--exact-cutoff": "7", "--workers": "1", "--results": "r.csv",
        "--catalog": str(fixture_dir / "owid"), "--sweep": "s.json",
        "--predictor": "x=population/Uganda", "--control-seed": "3", "--trace": "t.jsonl",
        "--smooth": "s.csv", "--span": "0.5", "--class": "all",
    }
    flags = {"--verbose", "--no-control"}
    for command in cli.COMMANDS:
        sub = cli._subparser(cli.build_parser(), command)
        for a in sub._actions:
            opt = next((o for o in a.option_strings if o.startswith("--")), None)
            if opt in (None, "--help", "--config"):
                continue
            argv = [command, "--fixtures", str(fixture_dir)]
            argv += [opt] if opt in flags else [opt, values[opt]]
            assert cli.parse_args(argv).command == command


def test_audit_sim_reports_deterministic(tmp_path, fixture_dir, capsys):
    outs = []
    for workers in ("1", "2", "1"):
        path = tmp_path / f"r{len(outs)}.json"
        code, _, _ = run(["audit-sim", "--class", "rw_drift", "--count", "60", "--seed", "9",
                          "--format", "json", "--workers", workers, "--out", str(path),
                          "--fixtures", str(fixture_dir)], capsys)
        assert code == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] == outs[2]
    rows = json.loads(outs[0])["rows"]
    assert [(r["label"], r["mode"]) for r in rows] == [("rw_drift", "raw"), ("rw_drift", "ols_residual")]


def test_audit_sim_white_noise_rate(fixture_dir, capsys):
    code, out, _ = run(["audit-sim", "--class", "white_noise", "--count", "1000", "--seed", "42",
                        "--mode", "raw", "--fixtures", str(fixture_dir)], capsys)
    assert code == 0
    (row,) = list(csv.DictReader(io.StringIO(out)))
    assert 0.03 <= float(row["pct_significant"]) <= 0.07


def test_audit_sim_results_dump(tmp_path, fixture_dir, capsys):
    res = tmp_path / "res.csv"
    code, out, _ = run(["audit-sim", "--class", "rw_plain", "--count", "15", "--mode", "raw",
                        "--results", str(res), "--with-catalog", str(fixture_dir / "owid"),
                        "--fixtures", str(fixture_dir)], capsys)
    assert code == 0
    assert [r["label"] for r in csv.DictReader(io.StringIO(out))] == ["rw_plain", "catalog"]
    lines = res.read_text().splitlines()
    assert lines[0] == "label,mode,id,tau,p_two_sided"
    assert len(lines) == 1 + 15 + 127


def test_audit_catalog_and_sweep(tmp_path, fixture_dir, capsys):
    sweep = tmp_path / "sweep.json"
    code, out, _ = run(["audit-catalog", "--mode", "both", "--sweep", str(sweep),
                        "--fixtures", str(fixture_dir)], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["label"] for r in rows if r["label"] == "ALL"] == ["ALL", "ALL"]
    assert json.loads(sweep.read_text())["n_series"] > 0


def test_table1_and_runtime_failure(fixture_dir, capsys, caplog):
    code, out, _ = run(["table1", "--fixtures", str(fixture_dir)], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 8 * (1 + len(cli.TABLE1_PREDICTORS))
    code, out, err = run(["table1", "--predictor", "x=population/Atlantis",
                          "--fixtures", str(fixture_dir)], capsys)
    assert code == 1 and "Atlantis" in caplog.text and out == ""


def test_dynreg_reports_failures_and_exits_0(tmp_path, fixture_dir, capsys, caplog):
    text = (fixture_dir / "study.csv").read_text().splitlines()
    header = text[0].split(",")
    col = header.index("profanity")
    rows = [text[0]]
    for line in text[1:]:
        cells = line.split(",")
        if 1960 <= int(cells[0]) <= 1980:
            cells[col] = ""
        rows.append(",".join(cells))
    study = tmp_path / "study.csv"
    study.write_text("\n".join(rows) + "\n")
    trace = tmp_path / "trace.jsonl"
    code, out, err = run(["dynreg", "--study", str(study), "--trace", str(trace), "--format", "json",
                          "--fixtures", str(fixture_dir)], capsys)
    assert code == 0
    doc = json.loads(out)
    bad = [r for r in doc["rows"] if r["error"]]
    assert [r["measure"] for r in bad] == ["profanity"]
    assert "profanity" in caplog.text
    assert len(doc["rows"]) == 14
    recs = [json.loads(l) for l in trace.read_text().splitlines()]
    assert {"measure", "order", "aicc", "converged"} <= set(recs[0])


def test_ingest_check_and_simulate(tmp_path, fixture_dir, capsys):
    smooth = tmp_path / "smooth.csv"
    code, out, _ = run(["ingest-check", "--smooth", str(smooth), "--fixtures", str(fixture_dir)], capsys)
    assert code == 0
    manifest = json.loads(out)
    assert manifest["datasets"]["fixed-landline-telephone-subscriptions"]["entities"] == 115
    assert manifest["study"]["tightness"]["observations"] == 201
    assert smooth.read_text().startswith("measure,year,value,smoothed\n")

    sim = tmp_path / "sim.csv"
    code, _, _ = run(["simulate", "--class", "rw_plain", "--count", "3", "--length", "20",
                      "--out", str(sim)], capsys)
    assert code == 0
    from spurcheck.ingest import DUMP_SCHEMA, load_catalog

    with open(sim) as fh:
        assert len(load_catalog(fh, DUMP_SCHEMA)) == 3
