import csv
import json

import pytest

from bbpsim.cli import bundled, main, model_rows, sweep_from_dict
from bbpsim.netsim.config import ConfigError
from bbpsim.netsim.trace import SCHEMAS, check_csv

TINY = {"n_nodes": 30, "n_t": 30, "run_blocks": 3, "topology": {"attach_m": 4}}


def write(path, data):
    path.write_text(json.dumps(data))
    return str(path)


def rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_run_writes_trace_and_report(tmp_path, capsys):
    cfg = write(tmp_path / "s.json", TINY)
    out = tmp_path / "out"
    assert main(["run", "--config", cfg, "--out", str(out)]) == 0
    for name in SCHEMAS:
        check_csv(out / name)
    assert check_csv(out / "blocks.csv") == 3
    assert len(rows(out / "report.csv")) == 1
    assert "p90 ms" in capsys.readouterr().out


def test_run_twice_identical_and_echo_reproduces(tmp_path):
    cfg = write(tmp_path / "s.json", {**TINY, "protocol": "bhp"})
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert main(["run", "--config", cfg, "--out", str(a), "--quiet"]) == 0
    assert main(["run", "--config", cfg, "--out", str(b), "--quiet"]) == 0
    echo = str(a / "effective_config.json")
    assert main(["run", "--config", echo, "--out", str(c), "--quiet"]) == 0
    for name in SCHEMAS:
        assert (a / name).read_bytes() == (b / name).read_bytes() == (c / name).read_bytes()


def test_seed_override(tmp_path):
    cfg = write(tmp_path / "s.json", TINY)
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o"), "--seed", "7",
                 "--quiet"]) == 0
    assert json.loads((tmp_path / "o" / "effective_config.json").read_text())["seed"] == 7
    assert rows(tmp_path / "o" / "report.csv")[0]["seed"] == "7"


def test_quiet_prints_nothing(tmp_path, capsys):
    cfg = write(tmp_path / "s.json", TINY)
    main(["run", "--config", cfg, "--out", str(tmp_path / "o"), "--quiet"])
    assert capsys.readouterr().out == ""


def test_missing_config_exit_1_names_path(tmp_path, capsys):
    missing = tmp_path / "absent.json"
    assert main(["run", "--config", str(missing), "--out", str(tmp_path / "o")]) == 1
    assert "absent.json" in capsys.readouterr().err


def test_bad_key_exit_1_names_key(tmp_path, capsys):
    cfg = write(tmp_path / "s.json", {**TINY, "workload": {"late_fraction": 2}})
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
    assert "workload.late_fraction" in capsys.readouterr().err


def test_runtime_failure_exit_2(tmp_path, capsys):
    cfg = write(tmp_path / "s.json", {**TINY, "delta_ms": 1e12})
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "runtime error" in capsys.readouterr().err


def test_bundled_default_scenario_runs(tmp_path):
    # the bundled scenario is the full-size default; shorten it through an override file
    data = json.loads(open(bundled("default_scenario.json")).read())
    data.update(run_blocks=2)
    cfg = write(tmp_path / "s.json", data)
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o"), "--quiet"]) == 0
    assert check_csv(tmp_path / "o" / "blocks.csv") == 2


def sweep_cfg(tmp_path, protocols=("bbp", "cbp"), n_t=(20, 30), seeds=(1, 2), **extra):
    return write(tmp_path / "sw.json", {"scenario": TINY, "sweep": {
        "protocols": list(protocols), "n_t": list(n_t), "seeds": list(seeds), **extra}})


def test_sweep_one_row_per_cell_in_order(tmp_path):
    cfg = sweep_cfg(tmp_path)
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "o"), "--quiet"]) == 0
    got = [(r["protocol"], r["n_t"], r["seed"]) for r in rows(tmp_path / "o" / "report.csv")]
    assert got == [(p, str(n), str(s)) for p in ("bbp", "cbp") for n in (20, 30)
                   for s in (1, 2)]


def test_sweep_parallel_matches_serial(tmp_path):
    cfg = sweep_cfg(tmp_path, protocols=("lbp", "bbp"), n_t=(20,), seeds=(1, 2))
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "s"), "--quiet"]) == 0
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "p"), "--jobs", "2",
                 "--quiet"]) == 0
    assert (tmp_path / "s" / "report.csv").read_bytes() == \
        (tmp_path / "p" / "report.csv").read_bytes()


def test_degenerate_sweep_equals_run(tmp_path):
    cfg = sweep_cfg(tmp_path, protocols=("cbp",), n_t=(30,), seeds=(1,))
    run_cfg = write(tmp_path / "r.json", {**TINY, "protocol": "cbp"})
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "s"), "--quiet"]) == 0
    assert main(["run", "--config", run_cfg, "--out", str(tmp_path / "r"), "--quiet"]) == 0
    assert (tmp_path / "s" / "report.csv").read_bytes() == \
        (tmp_path / "r" / "report.csv").read_bytes()


def test_sweep_failed_cell_recorded_and_exit_2(tmp_path):
    cfg = write(tmp_path / "sw.json", {"scenario": {**TINY, "delta_ms": 1e12}, "sweep": {
        "protocols": ["lbp", "bbp"], "n_t": [20], "seeds": [1]}})
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "o"), "--quiet"]) == 2
    status = {r["protocol"]: r["status"] for r in rows(tmp_path / "o" / "report.csv")}
    assert status["lbp"] == "ok"
    assert status["bbp"].startswith("error: SimulationError")


def test_sweep_traces_option(tmp_path):
    cfg = sweep_cfg(tmp_path, protocols=("lbp",), n_t=(20,), seeds=(3,))
    main(["sweep", "--config", cfg, "--out", str(tmp_path / "o"), "--traces", "--quiet"])
    check_csv(tmp_path / "o" / "cells" / "lbp_nt20_seed3" / "blocks.csv")


def test_bundled_sweep_has_sixty_cells():
    data = json.loads(open(bundled("sweep_default.json")).read())
    assert len(sweep_from_dict(data).cells()) == 60


@pytest.mark.parametrize("sweep, key", [
    ({"protocols": [], "n_t": [1], "seeds": [1]}, "sweep.protocols"),
    ({"protocols": ["bbp"], "n_t": [], "seeds": [1]}, "sweep.n_t"),
    ({"protocols": ["bbp"], "n_t": [1], "seeds": [1, 2], "max_cells": 1}, "sweep.max_cells"),
    ({"protocols": ["bbp"], "n_t": [1], "seeds": [1], "extra": 1}, "sweep.extra"),
])
def test_sweep_validation(sweep, key):
    with pytest.raises(ConfigError) as e:
        sweep_from_dict({"sweep": sweep})
    assert e.value.key == key


def test_model_fork_anchor_row(tmp_path, capsys):
    cfg = write(tmp_path / "m.json", {"params": {"t_g": 14000}, "t_l": 851, "protocols": []})
    assert main(["model", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    (row,) = rows(tmp_path / "o" / "model.csv")
    assert float(row["fork_probability"]) == pytest.approx(0.0590, abs=0.0005)


def test_model_gamma_out_of_range_exit_1(tmp_path, capsys):
    cfg = write(tmp_path / "m.json", {"params": {"gamma": 1.5}})
    assert main(["model", "--config", cfg]) == 1
    assert "gamma" in capsys.readouterr().err


def test_model_missing_symbol_exit_1(tmp_path, capsys):
    data = json.loads(open(bundled("model_params.json")).read())
    del data["params"]["t_c"]
    cfg = write(tmp_path / "m.json", data)
    assert main(["model", "--config", cfg]) == 1
    assert "t_c" in capsys.readouterr().err


def test_model_default_grid_all_protocols(capsys):
    assert main(["model"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 6 and "lbp_ms" in out[0]


def test_bbp_column_constant_without_reads():
    data = json.loads(open(bundled("model_params.json")).read())
    data["params"].update(t_r=0.0, gamma=0.0, n_u=0)
    header, table = model_rows(data)
    col = header.index("bbp_ms")
    assert len({r[col] for r in table}) == 1


def test_validate_config_kinds(tmp_path, capsys):
    assert main(["validate-config", "--config", str(bundled("default_scenario.json"))]) == 0
    assert main(["validate-config", "--config", str(bundled("sweep_default.json"))]) == 0
    assert main(["validate-config", "--config", str(bundled("model_params.json"))]) == 0
    out = capsys.readouterr().out
    assert "ok: scenario" in out and "60 cells" in out and "ok: model" in out
    bad = write(tmp_path / "b.json", {"n_nodes": 1})
    assert main(["validate-config", "--config", bad]) == 1


def test_validate_config_bad_json(tmp_path, capsys):
    p = tmp_path / "b.json"
    p.write_text("{not json")
    assert main(["validate-config", "--config", str(p)]) == 1
    assert "invalid JSON" in capsys.readouterr().err
