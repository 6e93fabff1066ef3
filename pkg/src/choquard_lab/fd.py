"""Fourth-order finite differences on uniform ``t = ln r`` samples."""
from __future__ import annotations

import numpy as np


def d1_t(f, h):
    """First derivative in ``t``; one-sided fourth-order stencils at the ends."""
    f = np.asarray(f)
    out = np.empty_like(f, dtype=np.result_type(f, float))
    out[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    s = f[:5]
    out[0] = (-25 * s[0] + 48 * s[1] - 36 * s[2] + 16 * s[3] - 3 * s[4]) / (12 * h)
    out[1] = (-3 * s[0] - 10 * s[1] + 18 * s[2] - 6 * s[3] + s[4]) / (12 * h)
    e = f[-5:][::-1]
    out[-1] = -(-25 * e[0] + 48 * e[1] - 36 * e[2] + 16 * e[3] - 3 * e[4]) / (12 * h)
    out[-2] = -(-3 * e[0] - 10 * e[1] + 18 * e[2] - 6 * e[3] + e[4]) / (12 * h)
    return out


def d2_t(f, h):
    """Second derivative in ``t``; one-sided stencils at the ends."""
    f = np.asarray(f)
    out = np.empty_like(f, dtype=np.result_type(f, float))
    out[2:-2] = (-f[:-4] + 16 * f[1:-3] - 30 * f[2:-2] + 16 * f[3:-1] - f[4:]) / (12 * h * h)
    s = f[:6]
    out[0] = (45 * s[0] - 154 * s[1] + 214 * s[2] - 156 * s[3] + 61 * s[4] - 10 * s[5]) / (12 * h * h)
    out[1] = (10 * s[0] - 15 * s[1] - 4 * s[2] + 14 * s[3] - 6 * s[4] + s[5]) / (12 * h * h)
    e = f[-6:][::-1]
    out[-1] = (45 * e[0] - 154 * e[1] + 214 * e[2] - 156 * e[3] + 61 * e[4] - 10 * e[5]) / (12 * h * h)
    out[-2] = (10 * e[0] - 15 * e[1] - 4 * e[2] + 14 * e[3] - 6 * e[4] + e[5]) / (12 * h * h)
    return out


def second_difference_matrix(n, h, left="dirichlet"):
    """Symmetric matrix of the centred five-point ``d^2/dt^2``.

    Ghost values are zero on the right.  On the left they are zero
    (``"dirichlet"``) or mirrored about ``t_0 - h/2`` (``"neumann"``), which
    keeps the matrix symmetric.
    """
    main = np.full(n, -30.0)
    T = np.diag(main) + np.diag(np.full(n - 1, 16.0), 1) + np.diag(np.full(n - 1, 16.0), -1)
    T += np.diag(np.full(n - 2, -1.0), 2) + np.diag(np.full(n - 2, -1.0), -2)
    if left == "neumann":
        # psi_{-1} = psi_0, psi_{-2} = psi_1
        T[0, 0] += 16.0
        T[0, 1] += -1.0
        T[1, 0] += -1.0
    elif left != "dirichlet":
        raise ValueError(f"unknown boundary condition {left!r}")
    return T / (12.0 * h * h)


def weighted_sup(values, r):
    """``max |v| r^2/(1 + r^2)``: sup-norm with the near-origin roundoff damped.

    Second differences near ``r_min`` lose all digits to cancellation; the
    weight equals the change of variable ``d^2/dr^2 -> r^-2 d^2/dt^2`` there
    and is 1 for ``r >> 1``.
    """
    r = np.asarray(r)
    return float(np.max(np.abs(values) * r**2 / (1.0 + r**2)))
