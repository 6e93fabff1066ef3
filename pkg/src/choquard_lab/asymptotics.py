"""Far-field decay of the ground state and comparison functions.

The ground state decays like

    u(r) ~ mu r^(-1/2) (ln r)^(-1/4) exp(-int sqrt(a + M ln s) ds),

and with the substitution ``s = e^(-a/M) sigma`` the exponent becomes
``sqrt(M) e^(-a/M) int_1^(e^(a/M) r) sqrt(ln sigma) d sigma``, which has a closed
form in terms of Dawson's integral.  All envelope arithmetic is carried out on
logarithms; only ratios are ever exponentiated.

Comparison functions come in two flavours: the rough family
``exp(-tau r sqrt(ln r))`` and the refined WKB family with an algebraic
correction ``(1 - tau / r**beta)``.  For each, the operator
``-w'' - w'/r + V w`` is evaluated with exact derivatives and its sign is
reported.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import InputDomainError, WindowError
from .fd import d1_t
from .radial_core import RadialProfile, _cumulative_t

__all__ = [
    "sqrtlog_integral",
    "sqrtlog_integral_closed",
    "dawson",
    "erfi",
    "identity_check",
    "DecayEnvelope",
    "log_decay_envelope",
    "decay_envelope",
    "trusted_window",
    "fit_mu",
    "rough_rate",
    "rough_rate_profile",
    "SignVerdict",
    "SignReport",
    "ComparisonKind",
    "ComparisonFunction",
    "rough_subsuper_check",
    "refined_subsuper",
    "ratio_decay_exponent",
    "anchored_bracket_check",
]

UNDERFLOW_FLOOR = 1e-280
TRUSTED_WINDOW = (0.55, 0.80)
IDENTITY_LAMBDAS = (2.0, math.e, 10.0, 1e2, 1e4)


# ---------------------------------------------------------------------------
# special functions


def sqrtlog_integral(lam):
    """``int_1^lam sqrt(ln s) ds`` by adaptive quadrature.

    With ``s = exp(y**2)`` the integrand becomes the smooth ``2 y**2 e^(y**2)``
    on ``[0, sqrt(ln lam)]``.
    """
    lam = float(lam)
    if not lam >= 1.0:
        raise InputDomainError(f"need lam >= 1, got {lam}")
    if lam == 1.0:
        return 0.0
    top = math.sqrt(math.log(lam))
    val, _ = quad(lambda y: 2.0 * y * y * math.exp(y * y), 0.0, top, epsabs=1e-12, epsrel=1e-13, limit=200)
    return val


_SERIES_TERMS = 200
_ASYMPTOTIC_TERMS = 40
_SWITCH = 6.5


def dawson(x):
    """Dawson's integral ``F(x) = exp(-x**2) int_0^x exp(t**2) dt``.

    Power series of positive terms, ``sum x^(2n+1) / (n! (2n+1))``, times
    ``exp(-x**2)`` for ``|x| <= 6.5``; the asymptotic series
    ``sum (2n-1)!! / (2^(n+1) x^(2n+1))`` beyond, where its smallest term is
    far below double precision.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InputDomainError("dawson needs finite arguments")
    ax = np.abs(x)
    out = np.empty_like(ax)

    small = ax <= _SWITCH
    if small.any():
        xs = ax[small]
        x2 = xs * xs
        term = xs.copy()
        acc = xs.copy()
        for n in range(1, _SERIES_TERMS):
            term = term * x2 / n
            add = term / (2 * n + 1)
            acc = acc + add
            if np.all(add <= 1e-17 * acc):
                break
        out[small] = np.exp(-x2) * acc

    big = ~small
    if big.any():
        xb = ax[big]
        inv = 1.0 / (2.0 * xb * xb)
        term = np.ones_like(xb)
        acc = np.ones_like(xb)
        for n in range(1, _ASYMPTOTIC_TERMS):
            term = term * (2 * n - 1) * inv
            acc = acc + term
        out[big] = acc / (2.0 * xb)

    out = np.copysign(out, x)
    return out if out.ndim else float(out)


def erfi(x):
    """Imaginary error function ``(2/sqrt(pi)) exp(x**2) F(x)``.

    Raises ``OverflowError`` where the result exceeds the double range.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x * x > 709.0):
        raise OverflowError("erfi overflows double precision for |x| > ~26.6")
    out = 2.0 / math.sqrt(math.pi) * np.exp(x * x) * dawson(x)
    return out if np.ndim(out) else float(out)


def sqrtlog_integral_closed(lam):
    """``lam sqrt(ln lam) - (sqrt(pi)/2) erfi(sqrt(ln lam))``.

    Evaluated as ``lam (sqrt(L) - F(sqrt(L)))`` with ``L = ln lam``, which is
    the same expression with ``exp(L) = lam`` cancelled; it neither overflows
    nor cancels for large ``lam``.
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(~(lam >= 1.0)):
        raise InputDomainError("need lam >= 1")
    root = np.sqrt(np.log(lam))
    out = lam * (root - dawson(root))
    return out if out.ndim else float(out)


def identity_check(lams=IDENTITY_LAMBDAS):
    """Largest relative gap between quadrature and closed form, and each gap."""
    gaps = {}
    for lam in lams:
        q = sqrtlog_integral(lam)
        c = sqrtlog_integral_closed(lam)
        gaps[float(lam)] = abs(q - c) / abs(q)
    return max(gaps.values()), gaps


# ---------------------------------------------------------------------------
# envelope and fits


@dataclass(frozen=True)
class DecayEnvelope:
    """Leading-order far-field profile; ``mu=None`` means the unit prefactor."""

    a: float
    M: float
    mu: float | None = None

    def __post_init__(self):
        if not (self.a > 0 and self.M > 0):
            raise InputDomainError("envelope needs a > 0 and M > 0")
        if self.mu is not None and not self.mu > 0:
            raise InputDomainError("mu must be positive")


def log_decay_envelope(r, env):
    """Natural logarithm of :func:`decay_envelope`."""
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 1.0)):
        raise InputDomainError("the envelope is defined for r > 1")
    shift = math.exp(env.a / env.M)
    phase = math.sqrt(env.M) / shift * sqrtlog_integral_closed(shift * r)
    mu = 1.0 if env.mu is None else env.mu
    out = math.log(mu) - 0.5 * np.log(r) - 0.25 * np.log(np.log(r)) - phase
    return out if out.ndim else float(out)


def decay_envelope(r, env):
    """``mu r^(-1/2) (ln r)^(-1/4) exp(-sqrt(M) e^(-a/M) int_1^(e^(a/M) r) sqrt(ln s) ds)``."""
    out = np.exp(log_decay_envelope(r, env))
    return out if np.ndim(out) else float(out)


def trusted_window(gs, window=TRUSTED_WINDOW, floor=UNDERFLOW_FLOOR):
    """Boolean node mask of the far-field window where ``u`` is representable."""
    r = gs.r
    u = gs.u.values
    mask = (r >= window[0] * r[-1]) & (r <= window[1] * r[-1]) & (u > floor) & (r > 1.0)
    if not mask.any():
        raise WindowError(
            f"trusted window {window} x r_max is empty (u below {floor:g}); use a smaller r_max"
        )
    return mask


def fit_mu(gs, window=TRUSTED_WINDOW):
    """Prefactor ``mu`` and the drift of ``u / envelope`` over the trusted window.

    ``mu`` is the geometric mean of the ratio; the drift is the largest
    relative deviation of the ratio from ``mu``.
    """
    mask = trusted_window(gs, window)
    env = DecayEnvelope(gs.a, gs.M)
    log_ratio = np.log(gs.u.values[mask]) - log_decay_envelope(gs.r[mask], env)
    log_mu = float(np.mean(log_ratio))
    drift = float(np.max(np.abs(np.expm1(log_ratio - log_mu))))
    return math.exp(log_mu), drift


def rough_rate_profile(gs, window=TRUSTED_WINDOW):
    """Radii and ``ln u / (r sqrt(ln r))`` across the trusted window."""
    mask = trusted_window(gs, window)
    r = gs.r[mask]
    return r, np.log(gs.u.values[mask]) / (r * np.sqrt(np.log(r)))


def rough_rate(gs, window=TRUSTED_WINDOW):
    """``ln u / (r sqrt(ln r))`` at the outer edge of the trusted window."""
    _, rate = rough_rate_profile(gs, window)
    return float(rate[-1])


# ---------------------------------------------------------------------------
# comparison functions


class SignVerdict(enum.Enum):
    SUB = "SUB"  # -Lap W + V W <= 0
    SUPER = "SUPER"  # -Lap W + V W >= 0
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True, eq=False)
class SignReport:
    """Sign of ``(-Lap W + V W) / W`` on the nodes beyond ``R``.

    ``r_uniform`` is the smallest node beyond which the sign never changes;
    ``verdict`` is that sign, or INCONCLUSIVE when the construction carries
    no sign information (critical parameter, vanishing correction).
    """

    verdict: SignVerdict
    r_uniform: float
    observed: SignVerdict
    r: np.ndarray
    ratio: np.ndarray
    note: str = ""


def _sign_report(r, ratio, inconclusive_reason=""):
    sgn = np.sign(ratio)
    last = sgn[-1]
    change = np.flatnonzero(sgn != last)
    k = change[-1] + 1 if change.size else 0
    observed = SignVerdict.SUPER if last > 0 else SignVerdict.SUB
    if last == 0:
        observed = SignVerdict.INCONCLUSIVE
    verdict = SignVerdict.INCONCLUSIVE if inconclusive_reason else observed
    return SignReport(
        verdict=verdict,
        r_uniform=float(r[k]),
        observed=observed,
        r=r,
        ratio=ratio,
        note=inconclusive_reason,
    )


def _tail_nodes(V, R):
    if not isinstance(V, RadialProfile):
        raise InputDomainError("V must be a RadialProfile")
    if not R > 1.0:
        raise InputDomainError("comparison functions need R > 1")
    r = V.grid.nodes
    sel = r > R
    if np.count_nonzero(sel) < 4:
        raise InputDomainError(f"fewer than four nodes beyond R={R}")
    dV = d1_t(V.values, V.grid.log_step) / r
    return r[sel], V.values[sel], dV[sel], V.grid.log_step


def rough_subsuper_check(tau, V, R, critical_rtol=1e-6):
    """Sign of ``-Lap W_tau + V W_tau`` for ``W_tau = exp(-tau r sqrt(ln r))``.

    The growth rate ``lam = lim V / ln r`` is estimated as ``r V'`` at the
    last node.  When ``tau**2`` matches it to ``critical_rtol`` the leading
    term cancels and the verdict is INCONCLUSIVE, whatever the observed sign.
    """
    tau = float(tau)
    r, v, dv, _ = _tail_nodes(V, R)
    L = np.log(r)
    sq = np.sqrt(L)
    p = -tau * (sq + 0.5 / sq)  # w'/w
    pp = -tau * (0.5 / (r * sq) - 0.25 / (r * sq**3))  # (w'/w)'
    ratio = -(p * p + pp) - p / r + v
    lam_est = float(r[-1] * dv[-1])
    reason = ""
    if abs(tau * tau - lam_est) <= critical_rtol * abs(lam_est):
        reason = f"tau**2 = {tau * tau:.6g} matches the growth rate {lam_est:.6g}"
    return _sign_report(r, ratio, reason)


class ComparisonKind(enum.Enum):
    ROUGH_SUB = "ROUGH_SUB"
    ROUGH_SUPER = "ROUGH_SUPER"
    REFINED_SUB_MINUS = "REFINED_SUB_MINUS"
    REFINED_SUPER_MINUS = "REFINED_SUPER_MINUS"
    REFINED_SUB_PLUS = "REFINED_SUB_PLUS"
    REFINED_SUPER_PLUS = "REFINED_SUPER_PLUS"


@dataclass(frozen=True, eq=False)
class ComparisonFunction:
    """Refined comparison function on the nodes beyond ``R`` (stored as a log)."""

    kind: ComparisonKind | None
    tau: float
    beta: float
    R: float
    sign: int
    r: np.ndarray
    log_values: np.ndarray

    @property
    def values(self):
        return np.exp(self.log_values)


def _refined_kind(sign, tau):
    if tau == 0:
        return None
    sub = (sign < 0) == (tau < 0)
    if sign < 0:
        return ComparisonKind.REFINED_SUB_MINUS if sub else ComparisonKind.REFINED_SUPER_MINUS
    return ComparisonKind.REFINED_SUB_PLUS if sub else ComparisonKind.REFINED_SUPER_PLUS


def _sign_value(sign):
    if sign in ("+", 1, +1.0):
        return 1
    if sign in ("-", -1, -1.0):
        return -1
    raise InputDomainError(f"sign must be '+' or '-', got {sign!r}")


def refined_subsuper(tau, sign, beta, V, R):
    """WKB comparison function ``w_{tau,sign}`` and the sign of its residual.

    ``w = exp(sign int_R^r sqrt(V)) r^(-1/2) (ln r)^(-1/4) (1 - tau r^-beta)``.
    The residual ratio uses the exact logarithmic derivative
    ``p = sign sqrt(V) - 1/(2r) - 1/(4 r ln r) + beta tau / (r^(beta+1) - tau r)``,
    ``(-Lap w + V w)/w = V - p**2 - p' - p/r``, with ``V'`` from fourth-order
    differences of the sampled potential.

    To leading order the ratio is
    ``-sign sqrt(V) (V'/(2V) - 1/(2 r ln r) + 2 beta tau / (r^(beta+1) - tau r))``,
    so ``tau`` with the same sign as ``sign`` gives a subsolution and the
    opposite sign a supersolution (once the hypothesis on ``V'/V`` makes the
    first two terms negligible).
    """
    s = _sign_value(sign)
    tau = float(tau)
    beta = float(beta)
    if not 0.0 < beta <= 1.0:
        raise InputDomainError("beta must lie in (0, 1]")
    r, v, dv, h = _tail_nodes(V, R)
    if np.any(v <= 0):
        raise InputDomainError("V must be positive beyond R")
    corr = 1.0 - tau * r**-beta
    if np.any(corr <= 0):
        raise InputDomainError("1 - tau / r**beta must stay positive beyond R")
    root = np.sqrt(v)
    L = np.log(r)
    phase = _cumulative_t(root * r, h)  # int_{r_0}^r sqrt(V) ds
    log_w = s * phase - 0.5 * np.log(r) - 0.25 * np.log(L) + np.log(corr)

    den = r ** (beta + 1) - tau * r
    p = s * root - 0.5 / r - 0.25 / (r * L) + beta * tau / den
    dp = (
        s * dv / (2.0 * root)
        + 0.5 / r**2
        + 0.25 / (r**2 * L)
        + 0.25 / (r**2 * L**2)
        - beta * tau * ((beta + 1) * r**beta - tau) / den**2
    )
    ratio = v - (p * p + dp) - p / r
    func = ComparisonFunction(
        kind=_refined_kind(s, tau),
        tau=tau,
        beta=beta,
        R=float(R),
        sign=s,
        r=r,
        log_values=log_w,
    )
    reason = "tau = 0 removes the correction that carries the sign" if tau == 0 else ""
    return func, _sign_report(r, ratio, reason)


def ratio_decay_exponent(V, R, beta=1.0, sign="-"):
    """Fitted ``k`` in ``overline/underline - 1 ~ C r**-k`` beyond ``R``.

    ``underline = w_{+sign, sign}`` and ``overline = w_{-sign, sign}``; the
    fit is least squares in log-log coordinates.
    """
    s = _sign_value(sign)
    under, _ = refined_subsuper(s, s, beta, V, R)
    over, _ = refined_subsuper(-s, s, beta, V, R)
    gap = np.expm1(over.log_values - under.log_values)
    slope, _ = np.polyfit(np.log(over.r), np.log(np.abs(gap)), 1)
    return float(-slope)


@dataclass(frozen=True, eq=False)
class BracketCheck:
    """Comparison of anchored ``u`` with anchored refined sub/supersolutions."""

    holds: bool
    r_anchor: float
    lower_margin: float  # min ln(u_n) - ln(under_n), should be >= 0
    upper_margin: float  # min ln(over_n) - ln(u_n), should be >= 0
    under_report: SignReport
    over_report: SignReport


def anchored_bracket_check(gs, beta=1.0, window=TRUSTED_WINDOW, slack=1e-9):
    """``under(s)/under(r0) <= u(s)/u(r0) <= over(s)/over(r0)`` on the window.

    ``r0`` is the inner edge of the trusted window and ``V = a - w`` the
    potential seen by ``u``.  ``slack`` absorbs the discretization error of
    ``ln u`` (relative).
    """
    mask = trusted_window(gs, window)
    r_win = gs.r[mask]
    r0 = float(r_win[0])
    V = RadialProfile(gs.grid, gs.a - gs.w.values)
    R = float(gs.r[np.flatnonzero(mask)[0] - 1])
    under, rep_u = refined_subsuper(-1.0, "-", beta, V, R)
    over, rep_o = refined_subsuper(1.0, "-", beta, V, R)
    k = np.searchsorted(under.r, r_win)
    lu = np.log(gs.u.values[mask])
    lu = lu - lu[0]
    lw_under = under.log_values[k] - under.log_values[k[0]]
    lw_over = over.log_values[k] - over.log_values[k[0]]
    # the anchor node itself is zero by construction
    lower = float(np.min((lu - lw_under)[1:]))
    upper = float(np.min((lw_over - lu)[1:]))
    holds = lower >= -slack and upper >= -slack
    return BracketCheck(holds, r0, lower, upper, rep_u, rep_o)
