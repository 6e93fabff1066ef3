"""Run configuration, ground-state persistence and the command line."""
import csv
import io
import json
import os

import numpy as np
import pytest

from choquard_lab.cli_io import (
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VERDICT,
    SCHEMA_VERSION,
    MissingArtifactError,
    RunConfig,
    _atomic_write,
    artifact_path,
    cache_key,
    groundstate_from_dict,
    groundstate_to_dict,
    load_groundstate,
    main,
    obtain_groundstate,
    save_groundstate,
)
from choquard_lab.errors import InputDomainError, StructuralError

SMALL = dict(n=1024, r_max=40.0)


@pytest.fixture(scope="module")
def seeded_cache(tmp_path_factory, gs):
    """Cache directory holding the session ground state under the default key."""
    cache = tmp_path_factory.mktemp("cache")
    save_groundstate(gs, artifact_path(RunConfig(cache_dir=cache)))
    return cache


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


# -- RunConfig -------------------------------------------------------------


@pytest.mark.parametrize(
    "kwargs",
    [dict(a=0.0), dict(a=-1.0), dict(a=float("nan")), dict(n=10), dict(n=100.5), dict(r_min=2.0, r_max=1.0),
     dict(tol_beta=0.0), dict(tol_zero=-1.0), dict(output_format="xml")],
)
def test_invalid_configuration(kwargs):
    with pytest.raises(InputDomainError):
        RunConfig(**kwargs)


def test_spectral_commands_need_a_fine_grid():
    with pytest.raises(InputDomainError):
        RunConfig(n=128).require_spectral()
    RunConfig(n=256).require_spectral()


def test_cache_directory_from_environment(monkeypatch, tmp_path):
    monkeypatch.setenv("CHOQUARD_CACHE", str(tmp_path))
    assert RunConfig.from_env().cache_dir == tmp_path
    assert RunConfig.from_env(cache_dir=tmp_path / "x").cache_dir == tmp_path / "x"
    monkeypatch.delenv("CHOQUARD_CACHE")
    assert RunConfig.from_env(a=None).a == 1.0


def test_cache_key_depends_on_solver_inputs_only(tmp_path):
    base = RunConfig(cache_dir=tmp_path)
    assert cache_key(base) == cache_key(RunConfig(cache_dir=tmp_path / "other", output_format="csv", tol_zero=1e-3))
    keys = {cache_key(RunConfig(**kw)) for kw in (dict(), dict(n=2048), dict(a=2.0), dict(r_max=100.0), dict(tol_beta=1e-12))}
    assert len(keys) == 5


# -- persistence -----------------------------------------------------------


def test_round_trip_is_exact(gs, tmp_path):
    path = tmp_path / "gs.json"
    save_groundstate(gs, path)
    back = load_groundstate(path)
    for name in ("u", "w", "du", "w_ode"):
        assert np.array_equal(getattr(back, name).values, getattr(gs, name).values)
    assert np.array_equal(back.grid.nodes, gs.grid.nodes)
    assert (back.a, back.M, back.u0, back.beta_star) == (gs.a, gs.M, gs.u0, gs.beta_star)


def test_unknown_schema_version_rejected(gs):
    doc = groundstate_to_dict(gs)
    doc["version"] = SCHEMA_VERSION + 1
    with pytest.raises(StructuralError):
        groundstate_from_dict(doc)


def test_truncated_arrays_rejected(gs):
    doc = groundstate_to_dict(gs)
    doc["u"] = doc["u"][:-1]
    with pytest.raises(StructuralError):
        groundstate_from_dict(doc)


def test_atomic_write_leaves_no_temporaries(tmp_path):
    target = tmp_path / "sub" / "file.txt"
    _atomic_write(target, "one\n")
    _atomic_write(target, "two\n")
    assert target.read_text() == "two\n"
    assert os.listdir(target.parent) == ["file.txt"]


def test_solve_then_cache_hit_is_byte_identical(tmp_path):
    config = RunConfig(cache_dir=tmp_path, **SMALL)
    gs1, path, hit1 = obtain_groundstate(config)
    first = path.read_bytes()
    gs2, path2, hit2 = obtain_groundstate(config)
    assert (hit1, hit2) == (False, True) and path2 == path
    assert path.read_bytes() == first
    assert np.array_equal(gs1.u.values, gs2.u.values)
    assert gs1.mu is not None and gs1.mu > 0


def test_missing_artifact_without_solve(tmp_path):
    with pytest.raises(MissingArtifactError):
        obtain_groundstate(RunConfig(cache_dir=tmp_path), solve=False)


def test_corrupted_cache_file_is_recomputed(tmp_path):
    config = RunConfig(cache_dir=tmp_path, **SMALL)
    gs, path, _ = obtain_groundstate(config)
    doc = json.loads(path.read_text())
    doc["u"] = [2 * x for x in doc["u"]]  # breaks the residual certificate
    path.write_text(json.dumps(doc))
    with pytest.raises(MissingArtifactError):
        obtain_groundstate(config, solve=False)
    fixed, _, hit = obtain_groundstate(config)
    assert not hit and np.array_equal(fixed.u.values, gs.u.values)
    path.write_text("{not json")
    assert obtain_groundstate(config)[2] is False


# -- command line ----------------------------------------------------------


def test_solve_command_reports_cache_hit(seeded_cache, gs, capsys):
    code, out, _ = run(["solve", "--cache", str(seeded_cache)], capsys)
    doc = json.loads(out)
    assert code == EXIT_OK and doc["cache_hit"] is True
    assert doc["M"] == gs.M and doc["residual_certificate"] <= 1e-6


def test_solve_command_csv(seeded_cache, gs, capsys):
    code, out, _ = run(["solve", "--cache", str(seeded_cache), "--format", "csv"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert code == EXIT_OK and rows[0] == ["r", "u", "w"] and len(rows) == gs.grid.n + 1
    assert float(rows[1][1]) == gs.u.values[0]


def test_asymptotics_command(seeded_cache, gs, capsys):
    code, out, _ = run(["asymptotics", "--cache", str(seeded_cache)], capsys)
    doc = json.loads(out)
    assert code == EXIT_OK
    assert doc["mu"] > 0 and doc["drift"] <= 2e-2
    assert doc["rough_rate_target"] == pytest.approx(-np.sqrt(gs.M), rel=1e-15)
    assert doc["identity_check"]["max_relative_gap"] <= 1e-10


def test_asymptotics_csv_to_file(seeded_cache, tmp_path, capsys):
    out_file = tmp_path / "env.csv"
    code, out, _ = run(["asymptotics", "--cache", str(seeded_cache), "--format", "csv", "--out", str(out_file)], capsys)
    assert code == EXIT_OK and out == ""
    rows = list(csv.reader(out_file.open()))
    assert rows[0] == ["r", "u", "envelope", "ratio"]
    ratios = np.array([float(x[3]) for x in rows[1:]])
    assert np.all(ratios > 0)


def test_spectrum_command(seeded_cache, capsys):
    code, out, _ = run(["spectrum", "--cache", str(seeded_cache)], capsys)
    doc = json.loads(out)
    assert code == EXIT_OK and doc["verdict"] == "NONDEGENERATE"
    assert doc["kernel_dim_estimate"]["1"] == 1


def test_spectrum_csv_columns(seeded_cache, capsys):
    code, out, _ = run(["spectrum", "--cache", str(seeded_cache), "--format", "csv"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["r", "psi0_k0", "psi0_k1", "psi0_k2", "psi0_k3"]
    k1 = np.array([float(x[2]) for x in rows[1:]])
    assert k1[np.argmax(np.abs(k1))] > 0


def test_spectrum_negative_control_exits_with_verdict(seeded_cache, capsys):
    code, out, err = run(["spectrum", "--cache", str(seeded_cache), "--corrupt", "0.05"], capsys)
    assert code == EXIT_VERDICT
    assert json.loads(out)["verdict"] == "FAILURE" and "i_zero_mode" in err


def test_multipole_command(capsys):
    code, out, _ = run(["multipole-test", "--samples", "200", "--seed", "5"], capsys)
    doc = json.loads(out)
    assert code == EXIT_OK and doc["violations"] == 0 and doc["samples"] == 200


@pytest.mark.parametrize(
    "argv",
    [["bogus"], ["solve", "--a", "-1"], ["solve", "--n", "8"], ["spectrum", "--n", "128"], ["solve", "--format", "xml"]],
)
def test_usage_errors(argv, tmp_path, capsys):
    code, _, err = run(argv + ["--cache", str(tmp_path)], capsys)
    assert code == EXIT_USAGE and err


def test_missing_artifact_exit_code(tmp_path, capsys):
    code, _, err = run(["asymptotics", "--cache", str(tmp_path)], capsys)
    assert code == EXIT_USAGE and "solve" in err


def test_numerical_failure_exit_code(tmp_path, capsys):
    # a window beyond the representable decay of u has no trusted nodes
    code, _, err = run(["asymptotics", "--solve", "--cache", str(tmp_path), "--n", "1024", "--rmax", "400"], capsys)
    assert code == EXIT_NUMERICAL and "numerical failure" in err
