"""Geometric radial grids, quadrature in the measure r dr, and shell potentials.

All grids are geometric: ``r_i = r_min * exp(i * h)``.  In the variable
``t = ln r`` the nodes are uniform, ``r dr = r**2 dt`` and the radial
Laplacian becomes ``(1/r**2) d^2/dt^2``, so every operation here works on
uniform ``t`` samples.  Quadrature is fourth order (piecewise cubic
interpolation in ``t``); the disc ``[0, r_min]`` is added assuming the
integrand is flat there, which is accurate to ``O(r_min**4)`` for even
profiles.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputDomainError, StructuralError

__all__ = [
    "RadialGrid",
    "RadialProfile",
    "make_log_grid",
    "integrate_radial",
    "cumulative_radial",
    "shell_potential",
    "exterior_potential",
    "potential_tail_bound",
    "tail_bound_profile",
]

# Coefficients of the cubic-interpolation rule on one interval [t_j, t_{j+1}],
# in units of h/24.
_INTERIOR = np.array([-1.0, 13.0, 13.0, -1.0])
_EDGE = np.array([9.0, 19.0, -5.0, 1.0])


def _end_corrected_coefficients(n):
    """Node coefficients (units of h) reproducing the sum of the interval rule."""
    c = np.ones(n)
    head = np.array([8.0, 31.0, 20.0, 25.0]) / 24.0
    c[:4] = head
    c[-4:] = head[::-1]
    return c


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Geometric node set on ``(0, r_max]`` with weights for ``r dr``.

    Attributes
    ----------
    nodes : ndarray
        ``r_1 < ... < r_n``, geometrically spaced.
    weights : ndarray
        ``sum(weights * f(nodes))`` approximates ``int_0^r_max f(r) r dr``.
    r_max : float
        Last node.
    """

    nodes: np.ndarray
    weights: np.ndarray
    r_max: float
    log_step: float = field(repr=False)

    @property
    def n(self):
        return self.nodes.size

    @property
    def r_min(self):
        return float(self.nodes[0])

    @property
    def t(self):
        """Nodes in the logarithmic variable ``t = ln r``."""
        return np.log(self.nodes)

    def key(self):
        return (float(self.nodes[0]), float(self.r_max), int(self.n))

    def same_as(self, other):
        return self is other or (
            self.n == other.n
            and np.array_equal(self.nodes, other.nodes)
        )

    def subgrid(self, r_lo=None, r_hi=None, stride=1):
        """Geometric subgrid keeping every ``stride``-th node inside ``[r_lo, r_hi]``.

        No interpolation is involved: the kept nodes are nodes of ``self``.
        Returns the subgrid and the integer indices of the kept nodes.
        """
        lo = 0 if r_lo is None else int(np.searchsorted(self.nodes, r_lo * (1 - 1e-12)))
        hi = self.n if r_hi is None else int(np.searchsorted(self.nodes, r_hi * (1 + 1e-12), side="right"))
        idx = np.arange(lo, hi, int(stride))
        if idx.size < 16:
            raise InputDomainError("subgrid would have fewer than 16 nodes")
        return _grid_from_nodes(self.nodes[idx], self.log_step * stride), idx


def _grid_from_nodes(nodes, h):
    nodes = np.asarray(nodes, dtype=float)
    weights = h * nodes**2 * _end_corrected_coefficients(nodes.size)
    weights[0] += 0.5 * nodes[0] ** 2
    return RadialGrid(nodes=nodes, weights=weights, r_max=float(nodes[-1]), log_step=float(h))


def make_log_grid(r_min, r_max, n):
    """Geometric grid from ``r_min`` to ``r_max`` with ``n`` nodes."""
    r_min = float(r_min)
    r_max = float(r_max)
    if not (np.isfinite(r_min) and np.isfinite(r_max)):
        raise InputDomainError("grid bounds must be finite")
    if not 0.0 < r_min < r_max:
        raise InputDomainError(f"need 0 < r_min < r_max, got r_min={r_min}, r_max={r_max}")
    if int(n) != n or n < 16:
        raise InputDomainError(f"need an integer n >= 16, got {n}")
    n = int(n)
    h = np.log(r_max / r_min) / (n - 1)
    nodes = r_min * np.exp(h * np.arange(n))
    nodes[-1] = r_max
    return _grid_from_nodes(nodes, h)


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """A real or complex function sampled on a :class:`RadialGrid`."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.dtype.kind not in "fc":
            values = values.astype(float)
        if values.shape != self.grid.nodes.shape:
            raise StructuralError(
                f"profile has {values.shape} values, grid has {self.grid.n} nodes"
            )
        if not np.all(np.isfinite(values)):
            raise InputDomainError("profile values must be finite")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def r(self):
        return self.grid.nodes

    @property
    def is_complex(self):
        return self.values.dtype.kind == "c"

    def with_values(self, values):
        return RadialProfile(self.grid, values)

    def to_csv(self, path):
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            if self.is_complex:
                writer.writerow(["r", "value", "value_im"])
                for r, v in zip(self.r, self.values):
                    writer.writerow([f"{r:.17g}", f"{v.real:.17g}", f"{v.imag:.17g}"])
            else:
                writer.writerow(["r", "value"])
                for r, v in zip(self.r, self.values):
                    writer.writerow([f"{r:.17g}", f"{v:.17g}"])

    @classmethod
    def from_csv(cls, path, grid):
        with Path(path).open(newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        data = np.array([[float(x) for x in row] for row in body])
        if data.shape[0] != grid.n or not np.allclose(data[:, 0], grid.nodes, rtol=1e-15, atol=0):
            raise StructuralError("CSV radii do not match the grid")
        if "value_im" in header:
            return cls(grid, data[:, 1] + 1j * data[:, 2])
        return cls(grid, data[:, 1])


def _check_profile(f):
    if not isinstance(f, RadialProfile):
        raise StructuralError("expected a RadialProfile")
    return f.values


def integrate_radial(f):
    """``int_0^r_max f(r) r dr`` by the grid weights."""
    values = _check_profile(f)
    return np.dot(f.grid.weights, values)


def cumulative_radial(f):
    """Running integrals ``C_i = int_0^{r_i} f(s) s ds`` (fourth order)."""
    values = _check_profile(f)
    grid = f.grid
    g = values * grid.nodes**2
    return _cumulative_t(g, grid.log_step) + 0.5 * grid.nodes[0] ** 2 * values[0]


def _cumulative_t(g, h):
    """Cumulative integral of uniform samples ``g`` in ``t`` (starts at 0)."""
    n = g.shape[-1]
    seg = np.empty(g.shape[:-1] + (n - 1,), dtype=np.result_type(g, float))
    seg[..., 1:-1] = (
        _INTERIOR[0] * g[..., :-3]
        + _INTERIOR[1] * g[..., 1:-2]
        + _INTERIOR[2] * g[..., 2:-1]
        + _INTERIOR[3] * g[..., 3:]
    )
    seg[..., 0] = g[..., :4] @ _EDGE
    seg[..., -1] = g[..., :-5:-1] @ _EDGE
    out = np.zeros(g.shape, dtype=seg.dtype)
    out[..., 1:] = np.cumsum(seg, axis=-1) * (h / 24.0)
    return out


def _require_nonnegative(density):
    values = _check_profile(density)
    if np.iscomplexobj(values):
        raise InputDomainError("density must be real")
    if np.any(values < 0):
        raise InputDomainError("density must be nonnegative")
    return values


def shell_potential(density):
    """Radial log potential ``w(r) = int_0^R rho(s) s ln(1/max(r, s)) ds``.

    The kernel has a kink at ``s = r``; the integral is split there into
    ``-ln r * int_0^r rho s ds`` and ``int_r^R rho s ln(1/s) ds``, both
    evaluated with the same fourth-order cumulative rule.
    """
    _require_nonnegative(density)
    grid = density.grid
    inner = cumulative_radial(density)
    weighted = RadialProfile(grid, -density.values * grid.t)
    c = cumulative_radial(weighted)
    outer = c[-1] - c
    return RadialProfile(grid, -grid.t * inner + outer)


def exterior_potential(density, r):
    """Log potential at ``r >= r_max``, where the whole mass is interior."""
    _require_nonnegative(density)
    r = np.asarray(r, dtype=float)
    if np.any(r < density.grid.r_max * (1 - 1e-14)):
        raise InputDomainError("exterior_potential needs r >= r_max")
    return -np.log(r) * integrate_radial(density)


def tail_bound_profile(density):
    """``int_{r_i}^R ln(s/r_i) rho(s) s ds`` at every node."""
    values = np.abs(_check_profile(density))
    grid = density.grid
    prof = RadialProfile(grid, values)
    b = cumulative_radial(prof)
    a = cumulative_radial(RadialProfile(grid, values * grid.t))
    out = (a[-1] - a) - grid.t * (b[-1] - b)
    return np.maximum(out, 0.0)


def potential_tail_bound(density, r):
    """Bound on ``|w(r) + m ln r|`` from the mass outside radius ``r``.

    Returns ``int_r^R ln(s/r) rho(s) s ds``.  Off-node radii use cubic
    interpolation of the running integrals in ``t``.
    """
    values = np.abs(_check_profile(density))
    grid = density.grid
    r = float(r)
    if not grid.nodes[0] * (1 - 1e-14) <= r <= grid.r_max * (1 + 1e-14):
        raise InputDomainError(f"r={r} outside grid range [{grid.nodes[0]}, {grid.r_max}]")
    prof = RadialProfile(grid, values)
    b = cumulative_radial(prof)
    a = cumulative_radial(RadialProfile(grid, values * grid.t))
    t = np.log(r)
    j = np.searchsorted(grid.t, t)
    if j < grid.n and abs(grid.t[j] - t) < 1e-13:
        aj, bj = a[j], b[j]
    else:
        from scipy.interpolate import CubicSpline

        lo = max(0, j - 3)
        hi = min(grid.n, j + 3)
        aj = CubicSpline(grid.t[lo:hi], a[lo:hi])(t)
        bj = CubicSpline(grid.t[lo:hi], b[lo:hi])(t)
    return float(max((a[-1] - aj) - t * (b[-1] - bj), 0.0))
