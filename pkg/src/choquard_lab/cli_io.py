"""Command-line entry points, run configuration and the ground-state cache.

Commands::

    choquard-lab solve          compute (or fetch) the ground state
    choquard-lab asymptotics    decay fit, rough rate, special-function identity
    choquard-lab spectrum       sector spectra and the nondegeneracy verdict
    choquard-lab multipole-test truncated multipole series against ln|x - y|

Ground states are cached as JSON under a content key built from everything
that determines the computation.  Cached files are revalidated (residual
certificate) on every load and recomputed when they fail.

Exit codes: 0 success or verdict pass, 1 verdict fail, 2 usage or input
error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import asymptotics, groundstate, spectral
from .errors import ChoquardError, InputDomainError, StructuralError
from .groundstate import GroundState
from .radial_core import RadialProfile, make_log_grid

__all__ = [
    "SCHEMA_VERSION",
    "CERTIFICATE_TOL",
    "RunConfig",
    "MissingArtifactError",
    "cache_key",
    "artifact_path",
    "groundstate_to_dict",
    "groundstate_from_dict",
    "save_groundstate",
    "load_groundstate",
    "obtain_groundstate",
    "cmd_solve",
    "cmd_asymptotics",
    "cmd_spectrum",
    "cmd_multipole_test",
    "main",
]

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
CERTIFICATE_TOL = 1e-6
DEFAULT_CACHE = Path.home() / ".cache" / "choquard-lab"

EXIT_OK = 0
EXIT_VERDICT = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


class MissingArtifactError(ChoquardError):
    """No cached ground state for the configuration and solving was not requested."""


@dataclass(frozen=True)
class RunConfig:
    """Everything a command needs; validated on construction."""

    a: float = 1.0
    n: int = 4096
    r_min: float = 1e-6
    r_max: float = 110.0
    tol_beta: float = 1e-13
    tol_zero: float | None = None
    cache_dir: Path = DEFAULT_CACHE
    output_format: str = "json"

    def __post_init__(self):
        object.__setattr__(self, "cache_dir", Path(self.cache_dir))
        for name in ("a", "r_min", "r_max", "tol_beta"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise InputDomainError(f"{name} must be a positive finite number, got {value!r}")
        if self.tol_zero is not None and not (math.isfinite(self.tol_zero) and self.tol_zero > 0):
            raise InputDomainError(f"tol_zero must be positive, got {self.tol_zero!r}")
        if int(self.n) != self.n or self.n < 16:
            raise InputDomainError(f"n must be an integer >= 16, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if not self.r_min < self.r_max:
            raise InputDomainError(f"need r_min < r_max, got {self.r_min} >= {self.r_max}")
        if self.output_format not in ("json", "csv"):
            raise InputDomainError(f"output format must be json or csv, got {self.output_format!r}")

    def require_spectral(self):
        if self.n < 256:
            raise InputDomainError(f"spectral commands need n >= 256, got {self.n}")

    @classmethod
    def from_env(cls, **overrides):
        """Defaults with ``cache_dir`` taken from ``CHOQUARD_CACHE`` when set."""
        env = os.environ.get("CHOQUARD_CACHE")
        if env and overrides.get("cache_dir") is None:
            overrides["cache_dir"] = Path(env)
        overrides = {k: v for k, v in overrides.items() if v is not None}
        return cls(**overrides)


# ---------------------------------------------------------------------------
# persistence


def cache_key(config):
    """Hex digest of the quantities that determine the ground state."""
    payload = {
        "version": SCHEMA_VERSION,
        "a": float(config.a).hex(),
        "n": config.n,
        "r_min": float(config.r_min).hex(),
        "r_max": float(config.r_max).hex(),
        "tol_beta": float(config.tol_beta).hex(),
    }
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:20]


def artifact_path(config):
    return config.cache_dir / f"groundstate-{cache_key(config)}.json"


def _floats(values):
    return [float(x) for x in values]


def groundstate_to_dict(gs):
    """JSON-ready document; floats survive the round trip exactly."""
    grid = gs.grid
    return {
        "version": SCHEMA_VERSION,
        "a": gs.a,
        "M": gs.M,
        "mu": gs.mu,
        "u0": gs.u0,
        "beta_star": gs.beta_star,
        "lambda_scale": gs.lambda_scale,
        "grid": {"r_min": grid.r_min, "r_max": grid.r_max, "n": grid.n},
        "u": _floats(gs.u.values),
        "w": _floats(gs.w.values),
        "du": _floats(gs.du.values),
        "w_ode": _floats(gs.w_ode.values),
        "meta": {k: v for k, v in gs.meta.items() if isinstance(v, (int, float, str, bool))},
    }


def groundstate_from_dict(doc):
    """Inverse of :func:`groundstate_to_dict`; rejects unknown schema versions."""
    version = doc.get("version")
    if not isinstance(version, int) or version != SCHEMA_VERSION:
        raise StructuralError(f"unsupported ground-state schema version {version!r}")
    g = doc["grid"]
    grid = make_log_grid(g["r_min"], g["r_max"], g["n"])
    arrays = {}
    for name in ("u", "w", "du", "w_ode"):
        values = np.asarray(doc[name], dtype=float)
        if values.shape != (grid.n,):
            raise StructuralError(f"field {name!r} has {values.size} values, grid has {grid.n}")
        arrays[name] = RadialProfile(grid, values)
    return GroundState(
        a=float(doc["a"]),
        M=float(doc["M"]),
        mu=None if doc.get("mu") is None else float(doc["mu"]),
        u0=float(doc["u0"]),
        beta_star=float(doc["beta_star"]),
        lambda_scale=float(doc["lambda_scale"]),
        meta=dict(doc.get("meta", {})),
        **arrays,
    )


def _atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_groundstate(gs, path):
    _atomic_write(path, json.dumps(groundstate_to_dict(gs), indent=1) + "\n")


def load_groundstate(path):
    with Path(path).open() as fh:
        return groundstate_from_dict(json.load(fh))


def _revalidated(gs):
    """True when the stored state still passes its residual certificate."""
    try:
        cert = groundstate.residual_certificate(gs)
    except ChoquardError:
        return False
    return bool(np.isfinite(cert) and cert <= CERTIFICATE_TOL and np.all(gs.u.values > 0))


def _solve(config):
    grid = make_log_grid(config.r_min, config.r_max, config.n)
    gs = groundstate.find_groundstate(config.a, grid, tol_beta=config.tol_beta)
    try:
        mu, _ = asymptotics.fit_mu(gs)
    except ChoquardError:
        mu = None
    return replace(gs, mu=mu)


def obtain_groundstate(config, solve=True):
    """Cached ground state for ``config``: ``(gs, path, cache_hit)``.

    A cached file that cannot be read or fails revalidation is recomputed
    (when ``solve``) and overwritten.
    """
    path = artifact_path(config)
    if path.exists():
        try:
            gs = load_groundstate(path)
        except (OSError, ValueError, KeyError, TypeError) as exc:
            log.warning("unreadable cache file %s (%s)", path, exc)
        else:
            if _revalidated(gs):
                return gs, path, True
            log.warning("cached ground state %s fails revalidation; recomputing", path)
    if not solve:
        raise MissingArtifactError(
            f"no valid ground state cached at {path}; run `choquard-lab solve` with the same "
            "--a/--n/--rmax/--cache options first, or pass --solve"
        )
    gs = _solve(config)
    save_groundstate(gs, path)
    return gs, path, False


# ---------------------------------------------------------------------------
# commands; each returns (exit_code, document, csv_rows)


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([f"{x:.17g}" for x in row])
    return buf.getvalue()


def cmd_solve(config):
    gs, path, hit = obtain_groundstate(config, solve=True)
    doc = {
        "artifact": str(path),
        "cache_hit": hit,
        "a": gs.a,
        "M": gs.M,
        "mu": gs.mu,
        "u0": gs.u0,
        "beta_star": gs.beta_star,
        "lambda_scale": gs.lambda_scale,
        "residual_certificate": groundstate.residual_certificate(gs),
    }
    rows = _csv_text(["r", "u", "w"], zip(gs.r, gs.u.values, gs.w.values))
    return EXIT_OK, doc, rows


def cmd_asymptotics(config, solve=False):
    gs, path, _ = obtain_groundstate(config, solve=solve)
    mu, drift = asymptotics.fit_mu(gs)
    r_rate, rates = asymptotics.rough_rate_profile(gs)
    worst, gaps = asymptotics.identity_check()
    mask = asymptotics.trusted_window(gs)
    r = gs.r[mask]
    u = gs.u.values[mask]
    env = asymptotics.DecayEnvelope(gs.a, gs.M)
    log_env = asymptotics.log_decay_envelope(r, env)
    doc = {
        "artifact": str(path),
        "a": gs.a,
        "M": gs.M,
        "mu": mu,
        "drift": drift,
        "rough_rate": float(rates[-1]),
        "rough_rate_target": -math.sqrt(gs.M),
        "window": [float(r[0]), float(r[-1])],
        "identity_check": {"max_relative_gap": worst, "gaps": {repr(k): v for k, v in gaps.items()}},
    }
    # the envelope itself underflows deep in the window; ratio is formed in logs
    rows = _csv_text(
        ["r", "u", "envelope", "ratio"],
        zip(r, u, np.exp(log_env), np.exp(np.log(u) - log_env)),
    )
    return EXIT_OK, doc, rows


def cmd_spectrum(config, solve=False, corrupt=0.0):
    config.require_spectral()
    gs, path, _ = obtain_groundstate(config, solve=solve)
    if corrupt:
        gs = spectral.corrupt_groundstate(gs, corrupt)
    report = spectral.verify_nondegeneracy(gs, tol_zero=config.tol_zero)
    doc = {"artifact": str(path), "a": gs.a, "corrupt": corrupt, **report.to_dict()}
    psi = [report.ground_vectors[k] for k in (0, 1, 2, 3)]
    rows = _csv_text(["r", "psi0_k0", "psi0_k1", "psi0_k2", "psi0_k3"], zip(report.r, *psi))
    code = EXIT_OK if report.verdict is spectral.SpectralVerdict.NONDEGENERATE else EXIT_VERDICT
    return code, doc, rows


def cmd_multipole_test(config, samples=2000, seed=0):
    sweep = spectral.multipole_sweep(samples=samples, seed=seed)
    doc = {"k_max": 40, "rho_max": 0.9, "seed": seed, **sweep.to_dict()}
    rows = _csv_text(["samples", "violations", "worst_excess", "max_error"],
                     [(sweep.samples, sweep.violations, sweep.worst_excess, sweep.max_error)])
    return (EXIT_OK if sweep.passed else EXIT_VERDICT), doc, rows


# ---------------------------------------------------------------------------
# argument parsing


def _parser():
    p = argparse.ArgumentParser(prog="choquard-lab", description=__doc__.split("\n\n")[0])
    p.add_argument("command", choices=["solve", "asymptotics", "spectrum", "multipole-test"])
    p.add_argument("--a", type=float, help="frequency a > 0 (default 1)")
    p.add_argument("--n", type=int, help="grid nodes (default 4096)")
    p.add_argument("--rmin", type=float, help="first grid radius (default 1e-6)")
    p.add_argument("--rmax", type=float, help="last grid radius (default 110)")
    p.add_argument("--tol-beta", type=float, help="shooting bracket width (default 1e-13)")
    p.add_argument("--tol-zero", type=float, help="zero-eigenvalue tolerance (default: from refinement drift)")
    p.add_argument("--cache", type=Path, help="cache directory (default $CHOQUARD_CACHE or ~/.cache/choquard-lab)")
    p.add_argument("--format", choices=["json", "csv"], help="report format (default json)")
    p.add_argument("--out", type=Path, help="write the report here instead of stdout")
    p.add_argument("--solve", action="store_true", help="compute the ground state if it is not cached")
    p.add_argument("--corrupt", type=float, default=0.0, help="debug: perturb u by (1 + c e^-r) before the spectrum")
    p.add_argument("--samples", type=int, default=2000, help="multipole-test sample count")
    p.add_argument("--seed", type=int, default=0, help="multipole-test random seed")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors itself
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = RunConfig.from_env(
            a=args.a,
            n=args.n,
            r_min=args.rmin,
            r_max=args.rmax,
            tol_beta=args.tol_beta,
            tol_zero=args.tol_zero,
            cache_dir=args.cache,
            output_format=args.format,
        )
        if args.command == "solve":
            code, doc, rows = cmd_solve(config)
        elif args.command == "asymptotics":
            code, doc, rows = cmd_asymptotics(config, solve=args.solve)
        elif args.command == "spectrum":
            code, doc, rows = cmd_spectrum(config, solve=args.solve, corrupt=args.corrupt)
        else:
            code, doc, rows = cmd_multipole_test(config, samples=args.samples, seed=args.seed)
    except (InputDomainError, MissingArtifactError) as exc:
        print(f"choquard-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ChoquardError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"choquard-lab: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    text = rows if config.output_format == "csv" else json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.out:
        _atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    if code == EXIT_VERDICT and "failed" in doc:
        print(f"choquard-lab: verdict FAILURE on {', '.join(doc['failed'])}", file=sys.stderr)
    return code
