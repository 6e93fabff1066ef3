"""Angular sectors of the linearized operator and a nondegeneracy certificate.

Writing ``phi = psi(r) e^{ik theta}`` the linearization at the ground state
splits into the radial operators

    L_k psi = -psi'' - psi'/r + (a + k^2/r^2 - w) psi
              - (u/|k|) int_0^inf u(s) psi(s) (min(r,s)/max(r,s))^|k| s ds,   k != 0,
    L_0 psi = -psi'' - psi'/r + (a - w) psi
              + 2u int_0^inf u(s) psi(s) ln max(r, s) s ds.

Discretization
--------------
Everything lives on a stride subgrid of the ground-state grid, cropped to
``[r_lo, r_hi]``: no interpolation of ``u`` or ``w`` is ever needed.  In
``t = ln r`` the Laplacian is ``r**-2 d^2/dt^2``; we use the symmetric
five-point second difference and the node weights ``omega = h r**2`` for
``r dr``.  The operator is assembled as a symmetric quadratic form ``F``
with a diagonal mass ``D``; ``A = D^-1 F`` acts on nodal values and
``D^(-1/2) F D^(-1/2)`` is the symmetric matrix handed to the eigensolver.

The nonlocal kernels have a kink on the diagonal.  The quadrature is split
there and each half gets fourth-order Gregory end weights, which gives the
symmetric correction ``c(|i - j|) = 3/4, 7/6, 23/24`` for ``|i-j| = 0, 1, 2``
and 1 beyond.

Left boundary: the stencil is closed by an even mirror about
``rho = r_0 e^(-h/2)``, and the disc ``r < rho`` is represented by its exact
energy and lumped mass for the regular behaviour ``psi ~ r^|k|`` (see
``_discretize``); this is what lets ``r_lo`` stay moderate, which in turn
keeps the matrix norm ``~ 1/(h r_lo)^2`` and its roundoff small.  Right
boundary: Dirichlet, placed where ``u`` has fallen by ``SPECTRAL_DEPTH``.
The stencil closures act only on the two nodes next to each end, and
pointwise identity checks skip those nodes.  The disc also enters every
nonlocal integral through node 0; modelling ``psi`` as regular but
otherwise frozen below ``rho`` costs a relative ``O(r_lo**4)`` in them.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import InputDomainError, SingularityError, StructuralError
from .fd import d1_t, second_difference_matrix
from .groundstate import GroundState
from .radial_core import RadialProfile, integrate_radial

__all__ = [
    "multipole_log",
    "multipole_tail_bound",
    "kernel_K_k",
    "MultipoleSweep",
    "multipole_sweep",
    "SectorOperator",
    "spectral_grid",
    "assemble_L_k",
    "assemble_L_0",
    "L0Split",
    "split_L_0",
    "zeta_identity_check",
    "w_prime_check",
    "lhat0_u_check",
    "l1_uprime_check",
    "EigenResult",
    "eigensolve",
    "quadratic_form_Q_k",
    "GrowthVerdict",
    "VolterraState",
    "volterra_solve_Lhat0",
    "SpectralVerdict",
    "SpectralReport",
    "verify_nondegeneracy",
    "corrupt_groundstate",
]

SPECTRAL_R_LO = 1e-2
SPECTRAL_DEPTH = 1e-24
BOUNDARY_NODES = 2


# ---------------------------------------------------------------------------
# multipole expansion and kernels


def multipole_log(r, theta, s, eta, K):
    """``ln |x - y|`` for ``x = r e^{i theta}``, ``y = s e^{i eta}``, truncated at order ``K``.

    ``ln max(r, s) - sum_{m=1}^K (min/max)^m cos(m (theta - eta)) / m``.
    """
    r, s, K = float(r), float(s), int(K)
    if r < 0 or s < 0:
        raise InputDomainError("radii must be nonnegative")
    if K < 0:
        raise InputDomainError("K must be nonnegative")
    if r == s and math.cos(theta - eta) == 1.0:
        raise SingularityError("coincident points")
    big, small = max(r, s), min(r, s)
    if big == 0.0:
        raise SingularityError("coincident points at the origin")
    rho = small / big
    m = np.arange(1, K + 1)
    series = np.sum(rho**m * np.cos(m * (theta - eta)) / m) if K else 0.0
    return math.log(big) - float(series)


def multipole_tail_bound(r, s, K):
    """Geometric bound ``rho^(K+1) / ((K+1)(1 - rho))`` on the truncation error."""
    rho = min(r, s) / max(r, s)
    if rho >= 1.0:
        return math.inf
    return rho ** (K + 1) / ((K + 1) * (1.0 - rho))


@dataclass(frozen=True)
class MultipoleSweep:
    """Truncated expansion against ``ln |x - y|`` over random configurations."""

    samples: int
    violations: int
    worst_excess: float  # max(error - bound), <= 0 when every sample is inside its bound
    max_error: float
    passed: bool

    def to_dict(self):
        return {
            "samples": self.samples,
            "violations": self.violations,
            "worst_excess": self.worst_excess,
            "max_error": self.max_error,
            "passed": self.passed,
        }


def multipole_sweep(samples=2000, k_max=40, rho_max=0.9, seed=0):
    """Check the geometric tail bound on random ``(r, s, dtheta, K)``.

    Radii are drawn log-uniformly on ``[1e-3, 1e3]`` subject to
    ``min/max <= rho_max``; ``K`` is uniform on ``0..k_max``.  The direct
    value ``ln |x - y|`` comes from ``math.hypot``; an allowance of
    ``64 eps (1 + |ln max|)`` covers rounding of both evaluations.
    """
    rng = np.random.default_rng(seed)
    violations = 0
    worst = -math.inf
    max_err = 0.0
    eps = np.finfo(float).eps
    for _ in range(int(samples)):
        big = 10.0 ** rng.uniform(-3, 3)
        ratio = rng.uniform(0.0, rho_max)
        small = big * ratio
        r, s = (big, small) if rng.random() < 0.5 else (small, big)
        theta, eta = rng.uniform(0.0, 2.0 * math.pi, size=2)
        K = int(rng.integers(0, k_max + 1))
        direct = math.log(math.hypot(r * math.cos(theta) - s * math.cos(eta), r * math.sin(theta) - s * math.sin(eta)))
        err = abs(multipole_log(r, theta, s, eta, K) - direct)
        bound = multipole_tail_bound(r, s, K) + 64 * eps * (1.0 + abs(math.log(big)))
        max_err = max(max_err, err)
        worst = max(worst, err - bound)
        violations += bool(err > bound)
    return MultipoleSweep(int(samples), int(violations), float(worst), float(max_err), bool(violations == 0))


def kernel_K_k(gs, r, s, k):
    """``(1/|k|) u(r) u(s) (min/max)^|k| r s`` for radii that are grid nodes of ``gs``."""
    k = int(k)
    if k == 0:
        raise StructuralError("k = 0 has a logarithmic kernel; use assemble_L_0")
    nodes = gs.r
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    ir = np.searchsorted(nodes, r * (1 - 1e-12))
    js = np.searchsorted(nodes, s * (1 - 1e-12))
    if np.any(ir >= nodes.size) or np.any(js >= nodes.size) or not (
        np.allclose(nodes[ir], r, rtol=1e-12, atol=0) and np.allclose(nodes[js], s, rtol=1e-12, atol=0)
    ):
        raise InputDomainError("kernel_K_k is evaluated on grid nodes only")
    u = gs.u.values
    rho = np.minimum(r, s) / np.maximum(r, s)
    out = u[ir] * u[js] * rho ** abs(k) * r * s / abs(k)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# assembly


def _gregory_split(n):
    """Symmetric kink-split correction ``c(|i - j|)``."""
    c = np.ones((n, n))
    d = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
    c[d == 0] = 0.75
    c[d == 1] = 7.0 / 6.0
    c[d == 2] = 23.0 / 24.0
    return c


@dataclass(frozen=True, eq=False)
class SectorOperator:
    """Sector ``k`` of the linearization, symmetrized in the ``r dr`` product.

    ``matrix = D^(1/2) A D^(-1/2)`` where ``A`` acts on nodal values and
    ``D = diag(weights)`` is the lumped ``r dr`` mass.  ``u``, ``w`` and ``du`` are the ground-state
    samples on the operator's nodes.
    """

    k: int
    grid: object
    matrix: np.ndarray
    weights: np.ndarray
    a: float
    u: np.ndarray
    w: np.ndarray
    du: np.ndarray
    index: np.ndarray = field(repr=False)

    @property
    def r(self):
        return self.grid.nodes

    @property
    def n(self):
        return self.grid.n

    def symmetry_defect(self):
        A = self.matrix
        return float(np.linalg.norm(A - A.T) / np.linalg.norm(A))

    def to_symmetric(self, psi):
        return np.sqrt(self.weights) * psi

    def from_symmetric(self, phi):
        return phi / np.sqrt(self.weights)

    def apply(self, psi):
        """``A psi`` on nodal values (the unsymmetrized operator)."""
        sw = np.sqrt(self.weights)
        return (self.matrix @ (sw * psi)) / sw


def spectral_grid(gs, stride=1, r_lo=SPECTRAL_R_LO, depth=SPECTRAL_DEPTH):
    """Stride subgrid of ``gs.grid`` on ``[r_lo, r_hi]``, ``u(r_hi) = depth u0``."""
    u = gs.u.values
    below = np.flatnonzero(u < depth * u[0])
    r_hi = gs.r[below[0]] if below.size else gs.r[-1]
    return gs.grid.subgrid(r_lo, r_hi, stride)


@dataclass(frozen=True, eq=False)
class _Discretization:
    grid: object
    index: np.ndarray
    u: np.ndarray
    w: np.ndarray
    du: np.ndarray
    omega: np.ndarray  # node weights h r^2 ...
    mass: np.ndarray  # ... with the disc [0, rho] lumped into node 0
    rho: float
    disc: float  # lumped disc weight, mass[0] - omega[0]
    local_form: np.ndarray


def _discretize(gs, k, stride, r_lo):
    """Local part of the quadratic form of ``L_k`` on the spectral grid.

    The stencil's even mirror covers ``t >= t_0 - h/2``, i.e. ``r >= rho``.
    On the disc ``r < rho`` the sector-``k`` solution behaves like
    ``psi(r_0) (r/r_0)^|k|``; its Dirichlet-plus-centrifugal energy
    ``|k| psi(rho)^2`` is added to the form and its mass
    ``rho^2/(2|k|+2) psi_0^2`` is lumped into node 0.
    """
    grid, idx = spectral_grid(gs, stride, r_lo)
    r = grid.nodes
    h = grid.log_step
    k = abs(int(k))
    u = gs.u.values[idx]
    w = gs.w.values[idx]
    du = gs.du.values[idx]
    omega, mass, rho, disc, F = _local_form(grid, gs.a, w, k)
    return _Discretization(grid, idx, u, w, du, omega, mass, rho, disc, F)


def _local_form(grid, a, w, k):
    r = grid.nodes
    h = grid.log_step
    omega = h * r**2
    rho = r[0] * math.exp(-0.5 * h)
    disc = rho**2 / (2 * k + 2)
    mass = omega.copy()
    mass[0] += disc
    F = -h * second_difference_matrix(grid.n, h, left="neumann")
    F[np.diag_indices(grid.n)] += omega * (a + k * k / r**2 - w)
    F[0, 0] += k * math.exp(-k * h) + disc * (a - w[0])
    return omega, mass, rho, disc, F


def _kernel_weights(kern, omega, disc):
    """Quadrature weights of a double integral with kernel ``kern``.

    Nodes get ``omega_i omega_j`` times the kink-split correction; the disc
    ``r < rho`` is a smooth lumped weight and gets no correction.
    """
    W = kern * _gregory_split(omega.size) * np.outer(omega, omega)
    W[0, :] += disc * omega * kern[0, :]
    W[:, 0] += disc * omega * kern[:, 0]
    W[0, 0] += disc * disc * kern[0, 0]
    return W


def _symmetric(form, mass):
    sw = np.sqrt(mass)
    S = form / sw[:, None] / sw[None, :]
    return 0.5 * (S + S.T)


def assemble_L_k(gs, k, stride=1, r_lo=SPECTRAL_R_LO):
    """Dense symmetric matrix of ``L_k``, ``k != 0``."""
    if not isinstance(gs, GroundState):
        raise StructuralError("assemble_L_k needs a GroundState")
    k = int(k)
    if k == 0:
        raise StructuralError("k = 0 goes through assemble_L_0")
    ak = abs(k)
    d = _discretize(gs, ak, stride, r_lo)
    t = d.grid.t
    kern = np.exp(-ak * np.abs(np.subtract.outer(t, t))) / ak
    form = d.local_form - np.outer(d.u, d.u) * _kernel_weights(kern, d.omega, d.disc)
    return SectorOperator(k, d.grid, _symmetric(form, d.mass), d.mass, gs.a, d.u, d.w, d.du, d.index)


@dataclass(frozen=True, eq=False)
class L0Split:
    """``L_0 = Lhat_0 + R`` on nodal values (not symmetrized).

    ``R_ij = 2 u_i v_j`` is of rank one, ``v_j = u_j ln(r_j) omega_j`` plus
    the disc moment ``int_0^rho s ln s ds`` in column 0.  ``Lhat_0`` holds
    the local part, the Volterra kernel ``ln(r/s)`` for ``s < r``, the
    near-diagonal Gregory band and the disc column
    ``int_0^rho s ln(r/s) ds``.
    """

    full: np.ndarray
    lhat: np.ndarray
    rank_one: np.ndarray

    def recombination_defect(self):
        return float(np.max(np.abs(self.full - (self.lhat + self.rank_one))) / np.max(np.abs(self.full)))


def _l0_pieces(gs, stride, r_lo):
    """Quadratic forms of ``L_0``, ``Lhat_0`` and ``R`` (each assembled separately).

    ``ln max(r, s) = ln(r/s)_+ + ln s`` splits the kernel.  Nodes carry the
    kink-split weights of ``_kernel_weights``; the part of the ``ln s``
    weight that is not rank one (the Gregory band ``(c - 1) t_j``) stays
    in ``Lhat_0``.  Disc points ``s < rho`` have the moment
    ``(2/rho^2) int_0^rho s ln s ds = ln rho - 1/2``.
    """
    d = _discretize(gs, 0, stride, r_lo)
    t = d.grid.t
    n = d.grid.n
    c = _gregory_split(n)
    u, omega, disc = d.u, d.omega, d.disc
    tau = math.log(d.rho) - 0.5
    uu = 2.0 * np.outer(u, u)
    full = d.local_form + uu * _kernel_weights(np.maximum.outer(t, t), omega, disc)
    oo = np.outer(omega, omega)
    lhat = oo * (c * np.maximum(np.subtract.outer(t, t), 0.0) + (c - 1.0) * t[None, :])
    lhat[:, 0] += disc * omega * (t - tau)
    lhat[0, 0] += disc * disc * (t[0] - tau)
    lhat = d.local_form + uu * lhat
    v = omega * t
    v[0] += disc * tau
    rank_one = 2.0 * np.outer(u * d.mass, u * v)
    return d, full, L0Split(full / d.mass[:, None], lhat / d.mass[:, None], rank_one / d.mass[:, None])


def assemble_L_0(gs, stride=1, r_lo=SPECTRAL_R_LO):
    """Dense symmetric matrix of ``L_0`` (kernel ``ln max(r, s)``)."""
    if not isinstance(gs, GroundState):
        raise StructuralError("assemble_L_0 needs a GroundState")
    d, form, _ = _l0_pieces(gs, stride, r_lo)
    return SectorOperator(0, d.grid, _symmetric(form, d.mass), d.mass, gs.a, d.u, d.w, d.du, d.index)


def split_L_0(gs, stride=1, r_lo=SPECTRAL_R_LO):
    """The Volterra/rank-one decomposition of the assembled ``L_0``."""
    return _l0_pieces(gs, stride, r_lo)[2]


# ---------------------------------------------------------------------------
# structural identities


def _interior(n):
    sel = np.zeros(n, dtype=bool)
    sel[BOUNDARY_NODES:-BOUNDARY_NODES] = True
    return sel


@dataclass(frozen=True)
class IdentityReport:
    """Relative sup-norm discrepancy of an identity, and an optional scalar."""

    name: str
    discrepancy: float
    scalar: float | None = None
    detail: dict = field(default_factory=dict)


def zeta_identity_check(gs, stride=1, r_lo=SPECTRAL_R_LO, use_zeta=True):
    """``Lhat_0 zeta = -2 (a + int u^2 s ln s ds) u`` with ``zeta = 2u + r u'``.

    With ``use_zeta=False`` the left side is applied to ``2u`` instead, which
    must *not* satisfy the identity.
    """
    d, _, split = _l0_pieces(gs, stride, r_lo)
    grid, u = d.grid, d.u
    r = grid.nodes
    zeta = 2 * u + r * d.du if use_zeta else 2 * u
    lhs = split.lhat @ zeta
    moment = integrate_radial(RadialProfile(gs.grid, gs.u.values**2 * gs.grid.t))
    c = gs.a + moment
    rhs = -2.0 * c * u
    sel = _interior(grid.n)
    disc = float(np.max(np.abs(lhs - rhs)[sel]) / np.max(np.abs(rhs)))
    contradiction = moment - 0.5 * gs.M
    return IdentityReport(
        "zeta",
        disc,
        scalar=float(c),
        detail={"moment": float(moment), "contradiction_value": float(contradiction)},
    )


def lhat0_u_check(gs, stride=1, r_lo=SPECTRAL_R_LO):
    """Matrix ``Lhat_0 u`` against ``2u int_0^r u^2 s ln(r/s) ds`` from radial quadrature."""
    d, _, split = _l0_pieces(gs, stride, r_lo)
    grid, idx, u = d.grid, d.index, d.u
    lhs = split.lhat @ u
    full = gs.grid
    dens = RadialProfile(full, gs.u.values**2)
    from .radial_core import cumulative_radial

    inner = cumulative_radial(dens)
    moment = cumulative_radial(RadialProfile(full, gs.u.values**2 * full.t))
    direct_full = 2 * gs.u.values * (full.t * inner - moment)
    rhs = direct_full[idx]
    sel = _interior(grid.n)
    return IdentityReport("lhat0_u", float(np.max(np.abs(lhs - rhs)[sel]) / np.max(np.abs(rhs))))


def w_prime_check(gs, window=(0.55, 0.80)):
    """Finite-difference ``w'`` against ``-(1/r) int_0^r u^2 s ds``.

    Relative sup-norm over the far-field window (interior nodes only), plus
    the whole-grid value in ``detail``.
    """
    from .radial_core import cumulative_radial

    grid = gs.grid
    r = grid.nodes
    fd = d1_t(gs.w.values, grid.log_step) / r
    integral = -cumulative_radial(RadialProfile(grid, gs.u.values**2)) / r
    err = np.abs(fd - integral)
    sel = _interior(grid.n)
    win = sel & (r >= window[0] * r[-1]) & (r <= window[1] * r[-1])
    disc_win = float(np.max(err[win] / np.abs(integral[win])))
    disc_all = float(np.max(err[sel]) / np.max(np.abs(integral[sel])))
    return IdentityReport("w_prime", disc_win, detail={"global": disc_all, "far_limit": float(-gs.M / r[-1])})


def l1_uprime_check(gs, stride=1, r_lo=SPECTRAL_R_LO):
    """``sup |L_1 u'| / sup |u'|`` on interior nodes."""
    op = assemble_L_k(gs, 1, stride, r_lo)
    res = op.apply(op.du)
    sel = _interior(op.n)
    return IdentityReport("L1_uprime", float(np.max(np.abs(res[sel])) / np.max(np.abs(op.du))))


# ---------------------------------------------------------------------------
# eigenpairs and quadratic forms


@dataclass(frozen=True, eq=False)
class EigenResult:
    """Lowest eigenpairs; ``vectors[:, j]`` are nodal values with unit ``r dr`` norm.

    ``residuals`` are ``|A y - lam y|`` for the unit symmetric-frame vectors
    and ``floors`` the rounding level ``eps | |A| |y| |`` they are compared with.
    """

    k: int
    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    verified: np.ndarray
    floors: np.ndarray

    @property
    def flagged(self):
        return np.flatnonzero(~self.verified)


def eigensolve(op, m=5, tol=1e-8):
    """``m`` lowest eigenpairs of a :class:`SectorOperator`.

    Dense symmetric diagonalization, then one step of shifted inverse
    iteration per pair, with two sweeps of iterative refinement of the
    linear solve.  The reported eigenvalue is the Rayleigh quotient of the
    refined vector ``y``: the dense eigenvalues carry an absolute error of
    order ``eps ||A||``, which the near-origin entries ``~ (h r_0)^-2`` make
    large, whereas the Rayleigh quotient is accurate to the square of the
    residual.  A pair is flagged unless ``|A y - lam y| <= max(tol, 8 floor)``
    (``|y| = 1``) and ``y`` agrees with the dense eigenvector, where
    ``floor = eps | |A| |y| |`` is the residual that rounding ``y`` to double
    precision already produces.
    """
    m = int(m)
    if not 1 <= m <= op.n:
        raise InputDomainError(f"need 1 <= m <= {op.n}")
    A = op.matrix
    vals, vecs = sla.eigh(A, subset_by_index=[0, m - 1])
    values = np.empty(m)
    refined = np.empty_like(vecs)
    residuals = np.empty(m)
    floors = np.empty(m)
    verified = np.zeros(m, dtype=bool)
    eye = np.eye(op.n)
    absA = np.abs(A)
    for j in range(m):
        lam = vals[j]
        B = A - (lam - 1e-9 * max(1.0, abs(lam))) * eye
        with warnings.catch_warnings():
            # the shifted matrix is singular to working precision by design
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            lu = sla.lu_factor(B)
            x = vecs[:, j]
            y = sla.lu_solve(lu, x)
            for _ in range(2):
                y += sla.lu_solve(lu, x - B @ y)
        y /= np.linalg.norm(y)
        if y @ vecs[:, j] < 0:
            y = -y
        values[j] = y @ A @ y
        residuals[j] = np.linalg.norm(A @ y - values[j] * y)
        floors[j] = np.finfo(float).eps * np.linalg.norm(absA @ np.abs(y))
        bound = max(tol, 8.0 * floors[j])
        verified[j] = np.isfinite(residuals[j]) and residuals[j] <= bound and abs(y @ vecs[:, j] - 1.0) <= 1e-6
        refined[:, j] = y
    order = np.argsort(values)
    psi = refined[:, order] / np.sqrt(op.weights)[:, None]
    return EigenResult(op.k, values[order], psi, residuals[order], verified[order], floors[order])


def quadratic_form_Q_k(op, psi):
    """``Q_k(psi)`` for a nodal ``psi`` (real or complex) on the operator grid.

    ``int (|psi'|^2 + (a + k^2/r^2 - w)|psi|^2) r dr - Re int int psi(r) conj(psi(s)) K(r, s)``
    assembled term by term: the derivative part is the summation-by-parts
    energy of the five-point stencil (plus the disc energy below ``r_0``),
    so that ``Q_k`` of an eigenvector equals its eigenvalue.  ``psi`` is
    normalized internally; returns ``(Q, norm)``.
    """
    psi = np.asarray(psi)
    if psi.shape != op.r.shape:
        raise StructuralError("psi does not live on the operator grid")
    k = abs(op.k)
    omega, mass, _, disc, F = _local_form(op.grid, op.a, op.w, k)
    norm = math.sqrt(float(np.sum(mass * np.abs(psi) ** 2)))
    if norm == 0:
        raise InputDomainError("psi must be nonzero")
    psi = psi / norm
    local = float(np.real(np.conj(psi) @ (F @ psi)))
    t = op.grid.t
    if k == 0:
        kern = -2.0 * np.maximum.outer(t, t)
    else:
        kern = np.exp(-k * np.abs(np.subtract.outer(t, t))) / k
    W = np.outer(op.u, op.u) * _kernel_weights(kern, omega, disc)
    nonlocal_ = float(np.real(np.conj(psi) @ (W @ psi)))
    return local - nonlocal_, norm


# ---------------------------------------------------------------------------
# Volterra problem


class GrowthVerdict(enum.Enum):
    GROWTH_CONFIRMED = "GROWTH_CONFIRMED"
    NO_GROWTH = "NO_GROWTH"
    TRIVIAL = "TRIVIAL"


@dataclass(frozen=True, eq=False)
class VolterraState:
    """Forward solution of ``Lhat_0 psi = 0`` on the ground-state grid.

    ``I = int_0^r u psi s ln(r/s) ds`` and ``J = int_0^r u psi s ds``.
    ``log_c_measured`` is ``ln min ln(eta/eta0) / G`` beyond ``r_monotone``
    with ``eta = psi/u`` and ``G = int_1^r ds / (s u^2)``; ``log_comparison``
    is ``ln(|psi| / (u exp(c G)))`` for that ``c``.
    """

    r: np.ndarray
    psi: np.ndarray
    dpsi: np.ndarray
    I: np.ndarray
    J: np.ndarray
    verdict: GrowthVerdict
    r_truncated: float
    r_monotone: float
    log_c_measured: float
    log_comparison: np.ndarray = field(repr=False)

    @property
    def c_measured(self):
        """The growth constant itself (underflows to 0.0 when ``G`` is huge)."""
        return math.exp(self.log_c_measured) if math.isfinite(self.log_c_measured) else float("nan")


OVERFLOW_PSI = 1e250


def volterra_solve_Lhat0(gs, psi0=1.0):
    """March ``psi'' + psi'/r = (a - w) psi + 2 u I`` outward from ``r_min``.

    In ``t``: ``psi_tt = r^2 ((a - w) psi + 2 u I)``, ``I_t = J``,
    ``J_t = u psi r^2``.  RK4 with step ``2h`` so that the midpoint stage
    falls on a grid node and ``u``, ``w`` are never interpolated.  The march
    stops when ``|psi|`` exceeds ``1e250``.
    """
    grid = gs.grid
    t = grid.t
    h2 = 2.0 * grid.log_step
    r2 = grid.nodes**2
    u = gs.u.values
    v = gs.a - gs.w.values
    npts = (grid.n - 1) // 2 + 1
    state = np.zeros((npts, 4))
    state[0] = (float(psi0), 0.0, 0.0, 0.0)

    def f(i, y):
        psi, dpsi, I, J = y
        return np.array((dpsi, r2[i] * (v[i] * psi + 2 * u[i] * I), J, u[i] * psi * r2[i]))

    last = npts - 1
    for m in range(npts - 1):
        i = 2 * m
        y = state[m]
        k1 = f(i, y)
        k2 = f(i + 1, y + 0.5 * h2 * k1)
        k3 = f(i + 1, y + 0.5 * h2 * k2)
        k4 = f(i + 2, y + h2 * k3)
        state[m + 1] = y + h2 / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if abs(state[m + 1, 0]) > OVERFLOW_PSI or not np.all(np.isfinite(state[m + 1])):
            last = m + 1
            break
    state = state[: last + 1]
    idx = 2 * np.arange(last + 1)
    r = grid.nodes[idx]
    psi = state[:, 0]
    if psi0 == 0:
        return VolterraState(r, psi, state[:, 1] / r, state[:, 2], state[:, 3], GrowthVerdict.TRIVIAL,
                             float(r[-1]), float("nan"), float("nan"), np.full(r.size, np.nan))
    apsi = np.abs(psi)
    inc = np.diff(apsi) > 0
    bad = np.flatnonzero(~inc)
    j_mono = bad[-1] + 1 if bad.size else 0
    grew = apsi[-1] >= 1e6 * abs(psi0) and j_mono < apsi.size - 10
    verdict = GrowthVerdict.GROWTH_CONFIRMED if grew else GrowthVerdict.NO_GROWTH
    log_c, log_cmp = _growth_constant(r, psi, u[idx], psi0, j_mono)
    return VolterraState(r, psi, state[:, 1] / r, state[:, 2], state[:, 3], verdict,
                         float(r[-1]), float(r[j_mono]), log_c, log_cmp)


def _growth_constant(r, psi, u, psi0, j0):
    """Growth constant and comparison ratio, all in logarithms.

    ``c = min ln(eta/eta0) / G`` over ``r > max(1, r[j0])`` with
    ``G = int_1^r ds / (s u^2)``.  ``G`` grows like ``u^-2`` while
    ``ln eta`` only grows like ``ln G``, so ``c`` is positive but tiny; it
    is returned as ``ln c``.  The comparison ratio
    ``ln(|psi| / (u exp(c G)))`` is returned on every node (``nan`` where
    undefined).
    """
    log_cmp = np.full(r.size, np.nan)
    sel = (r > 1.0) & (np.arange(r.size) >= j0) & (u > 0)
    if np.count_nonzero(sel) < 3:
        return float("nan"), log_cmp
    rr, uu, pp = r[sel], u[sel], psi[sel]
    log_eta = np.log(np.abs(pp)) - np.log(uu)
    log_ratio = log_eta - math.log(abs(psi0 / u[0]))
    # ln G with G = int_1^r dt / u^2: trapezoid from t = 0 in logs
    t1 = np.concatenate(([0.0], np.log(rr)))
    lg = -2.0 * np.log(np.concatenate(([np.interp(1.0, r, u)], uu)))
    seg = np.logaddexp(lg[:-1], lg[1:]) + np.log(0.5 * np.diff(t1))
    logG = np.logaddexp.accumulate(seg)
    # "eventually": beyond the last node where eta has not yet exceeded eta0
    below = np.flatnonzero(log_ratio <= 0)
    start = below[-1] + 1 if below.size else 0
    if start >= log_ratio.size:
        return float("nan"), log_cmp
    log_c = float(np.min(np.log(log_ratio[start:]) - logG[start:]))
    log_cmp[sel] = log_eta - np.exp(log_c + logG)
    return log_c, log_cmp


# ---------------------------------------------------------------------------
# certificate


class SpectralVerdict(enum.Enum):
    NONDEGENERATE = "NONDEGENERATE"
    FAILURE = "FAILURE"


@dataclass(frozen=True, eq=False)
class SpectralReport:
    """Low spectra per sector and the nondegeneracy verdict.

    ``eigenvalues`` maps ``k`` in ``{0, +-1, +-2, +-3}`` to ascending arrays;
    ``L_{-k}`` and ``L_k`` coincide by construction.
    """

    eigenvalues: dict
    refined: dict
    alignment: float
    kernel_dim_estimate: dict
    tol_zero: float
    drift: float
    margins: dict
    margin_drift: dict
    clauses: dict
    verdict: SpectralVerdict
    flagged: dict
    failed: list
    r: np.ndarray = field(repr=False, default=None)
    ground_vectors: dict = field(repr=False, default_factory=dict)

    def to_dict(self):
        return {
            "verdict": self.verdict.value,
            "eigenvalues": {str(k): v.tolist() for k, v in self.eigenvalues.items()},
            "eigenvalues_refined": {str(k): v.tolist() for k, v in self.refined.items()},
            "alignment": self.alignment,
            "kernel_dim_estimate": {str(k): v for k, v in self.kernel_dim_estimate.items()},
            "tol_zero": self.tol_zero,
            "drift": self.drift,
            "margins": self.margins,
            "margin_drift": self.margin_drift,
            "clauses": self.clauses,
            "flagged_pairs": {str(k): v for k, v in self.flagged.items()},
            "failed": self.failed,
        }


def _sector_spectra(gs, stride, m):
    out = {}
    vecs = {}
    for k in (0, 1, 2, 3):
        op = assemble_L_0(gs, stride) if k == 0 else assemble_L_k(gs, k, stride)
        res = eigensolve(op, m)
        out[k] = res
        vecs[k] = op
    return out, vecs


def verify_nondegeneracy(gs, m=5, base_stride=2, tol_zero=None):
    """Certify that the kernel of the linearization is spanned by translations.

    Sectors ``k = 0..3`` are solved on the stride-``base_stride`` subgrid and
    again on the stride-``base_stride // 2`` subgrid (``n -> 2n``).  The
    drift of ``lam_0(L_1)`` sets ``tol_zero = max(1e-4, 50 drift)`` unless
    given.  Clauses:

    (i)   ``|lam_0(L_1)| <= tol_zero``;
    (ii)  ``lam_1(L_1) - lam_0(L_1) >= 10 tol_zero``;
    (iii) alignment of the ``L_1`` ground state with ``u'`` is at least 0.999;
    (iv)  ``min |spec L_0| >= 10 tol_zero``;
    (v)   ``lam_0(L_3) > lam_0(L_2) > lam_0(L_1)``.
    """
    if base_stride < 2 or base_stride % 2:
        raise InputDomainError("base_stride must be even so that the refinement halves it")
    coarse, ops = _sector_spectra(gs, base_stride, m)
    fine, fine_ops = _sector_spectra(gs, base_stride // 2, m)
    lam = {k: res.values for k, res in coarse.items()}
    lam_fine = {k: res.values for k, res in fine.items()}
    drift = abs(lam[1][0] - lam_fine[1][0])
    if tol_zero is None:
        tol_zero = max(1e-4, 50.0 * drift)

    op1 = fine_ops[1]
    psi0 = fine[1].vectors[:, 0]
    du = op1.du
    w = op1.weights
    alignment = abs(np.sum(w * psi0 * du)) / math.sqrt(np.sum(w * psi0**2) * np.sum(w * du**2))

    use = lam_fine
    margins = {"L2-L1": float(use[2][0] - use[1][0]), "L3-L2": float(use[3][0] - use[2][0])}
    coarse_margins = {"L2-L1": float(lam[2][0] - lam[1][0]), "L3-L2": float(lam[3][0] - lam[2][0])}
    margin_drift = {
        key: abs(margins[key] - coarse_margins[key]) / abs(margins[key]) if margins[key] else math.inf
        for key in margins
    }
    min_l0 = float(np.min(np.abs(use[0])))
    clauses = {
        "i_zero_mode": bool(abs(use[1][0]) <= tol_zero),
        "ii_simple": bool(use[1][1] - use[1][0] >= 10 * tol_zero),
        "iii_alignment": bool(alignment >= 0.999),
        "iv_L0_invertible": bool(min_l0 >= 10 * tol_zero),
        "v_monotone": bool(use[2][0] > use[1][0] and use[3][0] > use[2][0]),
    }
    failed = [name for name, ok in clauses.items() if not ok]
    verdict = SpectralVerdict.FAILURE if failed else SpectralVerdict.NONDEGENERATE
    eig = {}
    ref = {}
    kdim = {}
    for k in (0, 1, 2, 3):
        for kk in ({k, -k}):
            eig[kk] = use[k]
            ref[kk] = lam[k]
            kdim[kk] = int(np.sum(np.abs(use[k]) <= tol_zero))
    flagged = {k: res.flagged.tolist() for k, res in fine.items() if res.flagged.size}
    return SpectralReport(
        eigenvalues=dict(sorted(eig.items())),
        refined=dict(sorted(ref.items())),
        alignment=float(alignment),
        kernel_dim_estimate=dict(sorted(kdim.items())),
        tol_zero=float(tol_zero),
        drift=float(drift),
        margins=margins,
        margin_drift=margin_drift,
        clauses=clauses,
        verdict=verdict,
        flagged=flagged,
        failed=failed,
        r=fine_ops[1].r,
        ground_vectors={k: _sign_normalized(fine[k].vectors[:, 0]) for k in (0, 1, 2, 3)},
    )


def _sign_normalized(psi):
    """Fix the global sign so that the largest-magnitude entry is positive."""
    return psi if psi[np.argmax(np.abs(psi))] > 0 else -psi


def corrupt_groundstate(gs, amplitude=0.05):
    """Negative control: ``u -> u (1 + amplitude e^{-r})`` with ``w`` and ``u'`` recomputed consistently."""
    from dataclasses import replace

    from .radial_core import shell_potential

    r = gs.r
    factor = 1.0 + amplitude * np.exp(-r)
    u = gs.u.values * factor
    du = gs.du.values * factor - gs.u.values * amplitude * np.exp(-r)
    w = shell_potential(RadialProfile(gs.grid, u**2))
    return replace(
        gs,
        u=gs.u.with_values(u),
        du=gs.du.with_values(du),
        w=w,
        meta={**gs.meta, "corrupted": amplitude},
    )
