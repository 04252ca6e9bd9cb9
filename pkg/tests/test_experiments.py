import json

import numpy as np
import pytest

from nlrd.errors import ConfigError
from nlrd.experiments import suites
from nlrd.experiments.cli import main
from nlrd.experiments.config import parse_config
from nlrd.experiments.runner import OutputDir, map_replicas, run_replicas
from nlrd.core import ModelParams

BASE = {"schema_version": 1, "params": {"alpha": 1.5, "beta": 2.0, "D": 60.0}}


def cfg(**kw):
    doc = json.loads(json.dumps(BASE))
    for k, v in kw.items():
        if k == "params":
            doc["params"].update(v)
        else:
            doc[k] = v
    return doc


def write(tmp_path, doc, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def run_cli(tmp_path, capsys, *args):
    code = main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


# config

def test_config_defaults():
    c = parse_config(cfg())
    assert c.replicas == 1 and c.checkpoint_Ns == [0] and c.master_seed == 12345
    assert c.params.zeta == 0.5


@pytest.mark.parametrize("doc,msg", [
    (cfg(replica=3), "unknown key"),
    (cfg(params={"alhpa": 2.0}), "unknown key"),
    ({**cfg(), "schema_version": 2}, "schema_version"),
    (cfg(checkpoint_Ns=[10, 5]), "increasing"),
    (cfg(replicas=0), ">= 1"),
    (cfg(probes=[70.0]), "outside"),
    (cfg(probes=[[1.0, 2.0]]), "coordinate"),
    (cfg(params={"beta": 0.5}), "invalid params"),
    (cfg(engine="gpu"), "engine"),
])
def test_config_errors(doc, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config(doc)


def test_geometric_checkpoints():
    c = parse_config(cfg(checkpoint_Ns={"n_max": 1000, "per_decade": 1}))
    assert c.checkpoint_Ns == [1, 10, 100, 1000]


# runner

def test_map_replicas_keeps_order():
    assert map_replicas(lambda r: r * r, range(20), threads=4) == [r * r for r in range(20)]


def test_threads_do_not_change_results():
    p = ModelParams(1.5, 2.0, 10.0, 1)
    a = run_replicas(p, 1, 6, [50], [[2.0]], threads=1)
    b = run_replicas(p, 1, 6, [50], [[2.0]], threads=3)
    assert [r.checkpoints[0].h_at_origin for r in a] == [r.checkpoints[0].h_at_origin for r in b]


def test_output_dir_abort_leaves_nothing(tmp_path):
    with pytest.raises(RuntimeError):
        with OutputDir(tmp_path / "o") as out:
            out.write_text("a.csv", "x\n")
            raise RuntimeError("boom")
    assert list((tmp_path / "o").iterdir()) == []


# CLI

def test_simulate_zero_checkpoint(tmp_path, capsys):
    code, _, _ = run_cli(tmp_path, capsys, "simulate", "--config", write(tmp_path, cfg()),
                         "--out", str(tmp_path / "o"))
    assert code == 0
    lines = (tmp_path / "o" / "checkpoints.csv").read_text().splitlines()
    assert len(lines) == 2
    assert [float(x) for x in lines[1].split(",")[:6]] == [0.0] * 6


def test_simulate_is_byte_identical(tmp_path, capsys):
    c = write(tmp_path, cfg(replicas=3, checkpoint_Ns=[0, 10, 100], probes=[15.0],
                            params={"model": "min", "grid_per_dim": 512}))
    for k in (1, 2):
        assert main(["simulate", "--config", c, "--out", str(tmp_path / f"o{k}"), "--seed", "9"]) == 0
    for name in ("checkpoints.csv", "deposition_log.csv"):
        assert (tmp_path / "o1" / name).read_bytes() == (tmp_path / "o2" / name).read_bytes()
    a = json.loads((tmp_path / "o1" / "manifest.json").read_text())
    b = json.loads((tmp_path / "o2" / "manifest.json").read_text())
    a.pop("wall_time"), b.pop("wall_time")
    assert a == b and a["master_seed"] == 9


def test_coupled_rand_and_min_mass(tmp_path, capsys):
    sums = []
    for model in ("rand", "min"):
        c = write(tmp_path, cfg(checkpoint_Ns=[4], params={"model": model, "grid_per_dim": 4096}),
                  f"{model}.json")
        assert main(["simulate", "--config", c, "--out", str(tmp_path / model)]) == 0
        sums.append(json.loads((tmp_path / model / "manifest.json").read_text())["grid_sums"][0])
    assert abs(sums[0] - sums[1]) <= 2 / 4096 * sums[0]


def test_invalid_input_exit_code_and_json(tmp_path, capsys):
    c = write(tmp_path, cfg(bogus=1))
    code, _, err = run_cli(tmp_path, capsys, "simulate", "--config", c, "--out", str(tmp_path / "o"))
    assert code == 2
    assert json.loads(err.strip())["error"] == "ConfigError"
    assert not (tmp_path / "o" / "checkpoints.csv").exists()
    code, _, err = run_cli(tmp_path, capsys, "speed")
    assert code == 2 and "config" in json.loads(err.strip())["message"]


def test_unknown_subcommand_exits_2(capsys):
    with pytest.raises(SystemExit) as e:
        main(["frobnicate"])
    assert e.value.code == 2


def test_fluct_rejects_origin_only_probes(tmp_path, capsys):
    c = write(tmp_path, cfg(replicas=5, checkpoint_Ns=[100], probes=[0.0]))
    code, _, err = run_cli(tmp_path, capsys, "fluct", "--config", c, "--out", str(tmp_path / "o"))
    assert code == 2 and "probe" in err


def test_speed_ballistic(tmp_path, capsys):
    c = write(tmp_path, cfg(replicas=20, checkpoint_Ns=[1000, 3000, 10000]))
    code, _, _ = run_cli(tmp_path, capsys, "speed", "--config", c, "--out", str(tmp_path / "o"))
    m = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert code == 0 and m["regime"] == "zeta<1"
    assert {r["test"] for r in m["results"]} == {"speed_exponent", "ballistic_speed"}


def test_fluct_gaussian(tmp_path, capsys):
    c = write(tmp_path, cfg(replicas=300, checkpoint_Ns=[2000], probes=[15.0]))
    code, _, _ = run_cli(tmp_path, capsys, "fluct", "--config", c, "--out", str(tmp_path / "o"))
    m = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert code == 0 and m["results"][0]["test"] == "gaussian_fluct"


def test_phase_sweep_flags_boundary(tmp_path, capsys):
    doc = cfg(replicas=20, checkpoint_Ns=[100, 300, 1000], params={"D": 2.0},
              phase={"alpha_grid": [1.5, 2.0], "beta_grid": [2.0]})
    run_cli(tmp_path, capsys, "phase", "--config", write(tmp_path, doc), "--out", str(tmp_path / "o"))
    rows = (tmp_path / "o" / "phase.csv").read_text().splitlines()
    assert rows[0].startswith("alpha,beta,zeta,kappa,predicted_region")
    assert len(rows) == 3
    assert ",C," in rows[1]
    assert "boundary" in rows[2] and "skipped" in rows[2]


def test_limits_stable_series(tmp_path, capsys):
    doc = cfg(params={"alpha": 4.0}, limits={"law": "stable_series", "n_samples": 10000, "tol": 1e-6})
    code, _, _ = run_cli(tmp_path, capsys, "limits", "--config", write(tmp_path, doc),
                         "--out", str(tmp_path / "o"))
    m = json.loads((tmp_path / "o" / "manifest.json").read_text())["results"][0]
    assert code == 0 and m["all_finite"] and m["tail_bound"] <= 1e-6
    assert len((tmp_path / "o" / "limits.csv").read_text().splitlines()) == 10001


def test_limits_mu_d_origin(tmp_path, capsys):
    doc = cfg(params={"alpha": 3.0, "D": 2.0}, probes=[0.0],
              limits={"law": "mu_d", "n_samples": 20, "tol": 0.01})
    run_cli(tmp_path, capsys, "limits", "--config", write(tmp_path, doc), "--out", str(tmp_path / "o"))
    vals = [float(r.split(",")[-1]) for r in (tmp_path / "o" / "limits.csv").read_text().splitlines()[1:]]
    assert vals == [0.0] * 20


def test_limits_mu_stellar_mean(tmp_path, capsys):
    doc = cfg(params={"alpha": 4.0, "D": 3.0, "d": 2, "model": "stellar"}, probes=[[0.75, 0.75]],
              limits={"law": "mu_stellar", "n_samples": 300, "tol": 0.01})
    run_cli(tmp_path, capsys, "limits", "--config", write(tmp_path, doc), "--out", str(tmp_path / "o"))
    m = json.loads((tmp_path / "o" / "manifest.json").read_text())["results"][0]
    mean, se = np.array(m["mean"]), np.array(m["se"])
    assert np.all(np.abs(mean) <= 3 * se)


def test_conjecture_min_is_report_only(tmp_path, capsys):
    doc = cfg(replicas=5, checkpoint_Ns=[50, 100, 200], probes=[2.5],
              params={"D": 10.0, "model": "min", "grid_per_dim": 256})
    code, _, _ = run_cli(tmp_path, capsys, "conjecture-min", "--config", write(tmp_path, doc),
                         "--out", str(tmp_path / "o"))
    rep = json.loads((tmp_path / "o" / "conjecture_min.json").read_text())
    assert code == 0 and "pass" not in rep
    assert "fluct_exponent" in rep and "max_abs_f" in rep and rep["note"]


def test_conjecture_min_heavy_reports_ks(tmp_path, capsys):
    doc = cfg(replicas=5, checkpoint_Ns=[100], probes=[0.5],
              params={"alpha": 3.0, "D": 2.0, "model": "min", "grid_per_dim": 256})
    run_cli(tmp_path, capsys, "conjecture-min", "--config", write(tmp_path, doc),
            "--out", str(tmp_path / "o"))
    rep = json.loads((tmp_path / "o" / "conjecture_min.json").read_text())
    assert len(rep["ks_vs_mu_d"]) == 1


def test_suite_selection():
    assert suites.resolve_suite("appendixD") == [11]
    assert suites.resolve_suite("all") == list(range(1, 14))
    assert suites.resolve_suite("1,phase_diagram") == [1, 12]
    with pytest.raises(KeyError):
        suites.resolve_suite("nope")


def test_validate_filtered_and_repeatable(tmp_path, capsys):
    for k in (1, 2):
        code, out, _ = run_cli(tmp_path, capsys, "validate", "--suite", "properties",
                               "--out", str(tmp_path / f"v{k}"))
        assert code == 0 and "criterion 13" in out and "criterion 12" not in out
    a = json.loads((tmp_path / "v1" / "manifest.json").read_text())
    b = json.loads((tmp_path / "v2" / "manifest.json").read_text())
    for m in (a, b):
        m.pop("wall_time")
        for r in m["results"]:
            r.pop("wall_time")
    assert a == b and a["suite"] == [13] and a["all_passed"]


def test_calibrate_only_for_validate(tmp_path, capsys):
    code, _, err = run_cli(tmp_path, capsys, "simulate", "--calibrate",
                           "--config", write(tmp_path, cfg()), "--out", str(tmp_path / "o"))
    assert code == 2 and "calibrate" in err


def test_calibration_file_has_provenance():
    cal = suites.load_calibration()
    for entry in list(cal["criteria"].values()) + list(cal["commands"].values()):
        assert entry["provenance"].split(":")[0] in ("analytic", "pilot")
