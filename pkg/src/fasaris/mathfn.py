"""Special functions and densities used by the outage formulas.

Everything here is vectorised over numpy arrays and returns a Python float
when every input is a scalar.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "Tolerance",
    "DEFAULT_TOL",
    "bessel_i",
    "bessel_i_scaled",
    "marcum_q1",
    "gaussian_q",
    "psi",
    "psi_inv",
    "ncx2_scaled_pdf",
    "ncchi_scaled_pdf",
    "rician_pdf",
    "rician_cdf",
]


@dataclass(frozen=True)
class Tolerance:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_terms: int = 10_000

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")


DEFAULT_TOL = Tolerance()

# rescale threshold for the backward Bessel recurrence
_BIG = 1e200
# |a - b| beyond which exp(-(a - b)^2 / 2) < 1e-31
_FAR = 12.0
_SMALL_T_TERMS = 24


def _result(value, *inputs):
    if all(np.ndim(v) == 0 for v in inputs):
        return float(value)
    return value


def _check_order(nu):
    if np.any(np.asarray(nu) < 0) or np.any(np.asarray(nu) != np.floor(nu)):
        raise ValueError("Bessel order must be a non-negative integer")


def bessel_i(nu, x):
    """Modified Bessel function of the first kind, I_nu(x), for x >= 0.

    Raises OverflowError where the unscaled value is not representable; use
    :func:`bessel_i_scaled` there.
    """
    _check_order(nu)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("x must be non-negative")
    # ive * exp(x) rather than iv: iv returns nan for subnormal x
    with np.errstate(over="ignore"):
        v = special.ive(nu, x) * np.exp(x)
    if np.any(np.isinf(v)):
        raise OverflowError("I_nu(x) overflows; use bessel_i_scaled")
    return _result(v, nu, x)


def bessel_i_scaled(nu, x):
    """Exponentially scaled companion exp(-x) * I_nu(x)."""
    _check_order(nu)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("x must be non-negative")
    return _result(special.ive(nu, x), nu, x)


def _miller_terms(t, tol):
    # I_k(t)/I_0(t) ~ exp(-k^2 / 2t); start the recurrence where that is far
    # below double precision
    return np.ceil(25.0 + 9.0 * np.sqrt(t) + 2.0 * np.log1p(t)).astype(int)


def _bessel_ratio_direct(r, t):
    """Same sums as :func:`_bessel_ratio_series` for t <= 1, term by term.

    I_k(t) / I_0(t) < (t/2)^k / k!, so 24 terms reach double precision.
    """
    k = np.arange(_SMALL_T_TERMS)[:, None]
    terms = r ** k * special.ive(k, t) / special.ive(0, t)
    return terms.sum(axis=0), terms[1:].sum(axis=0)


def _bessel_ratio_series(r, t, n_start):
    """Return (sum_{k>=0} r^k I_k(t), sum_{k>=1} r^k I_k(t)) divided by I_0(t).

    Miller's backward recurrence for the Bessel ratios, accumulated with a
    Horner scheme in the same downward sweep.  All arrays share ``n_start``.
    """
    i_next = np.zeros_like(t)
    i_cur = np.full_like(t, 1e-30)
    horner = i_cur.copy()
    inv_t = 1.0 / t
    for k in range(n_start, 0, -1):
        i_prev = i_next + 2.0 * k * inv_t * i_cur
        i_next, i_cur = i_cur, i_prev
        horner_1 = horner
        horner = i_cur + r * horner
        big = i_cur > _BIG
        if big.any():
            scale = np.where(big, 1.0 / _BIG, 1.0)
            i_cur *= scale
            i_next *= scale
            horner *= scale
            horner_1 = horner_1 * scale
    # i_cur is now proportional to I_0; horner_1 to sum_{k>=1} r^{k-1} I_k
    full = horner / i_cur
    tail = r * horner_1 / i_cur
    return full, tail


def marcum_q1(a, b, tol: Tolerance = DEFAULT_TOL):
    """First-order Marcum Q-function Q1(a, b) for a, b >= 0.

    Uses the Neumann series in scaled Bessel functions.  For a < b the series
    for Q1 itself is summed; for a >= b the series for 1 - Q1 is summed, so the
    small quantity is always the one computed directly.
    """
    a_arr, b_arr = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    if np.any(a_arr < 0) or np.any(b_arr < 0):
        raise ValueError("Marcum Q1 arguments must be non-negative")
    a_flat = a_arr.ravel()
    b_flat = b_arr.ravel()
    out = np.empty(a_flat.shape)

    t = a_flat * b_flat
    zero = t == 0.0
    out[zero] = np.exp(-0.5 * b_flat[zero] ** 2)

    # both tails are bounded by exp(-(a - b)^2 / 2) because sum_k ive(k, t) <= 1,
    # so far from the transition the answer is exactly 0 or 1 to double precision
    gap = a_flat - b_flat
    far = ~zero & (np.abs(gap) > _FAR)
    out[far] = (gap[far] > 0).astype(float)

    idx = np.flatnonzero(~zero & ~far)
    if idx.size:
        n_need = _miller_terms(t[idx], tol)
        if n_need.max() > tol.max_terms:
            raise ArithmeticError(
                f"Marcum Q1 series needs {n_need.max()} terms (> max_terms={tol.max_terms})"
            )
        # bucket by recurrence depth so small arguments stay cheap
        bucket = np.where(t[idx] <= 1.0, 0, np.ceil(np.log2(n_need))).astype(int)
        for bk in np.unique(bucket):
            sel = idx[bucket == bk]
            aa, bb, tt = a_flat[sel], b_flat[sel], t[sel]
            lower = aa < bb
            r = np.where(lower, aa / np.where(lower, bb, 1.0), bb / np.where(lower, 1.0, aa))
            if tt.max() <= 1.0:
                full, tail = _bessel_ratio_direct(r, tt)
            else:
                full, tail = _bessel_ratio_series(r, tt, int(2**bk))
            weight = np.exp(-0.5 * (aa - bb) ** 2) * special.ive(0, tt)
            out[sel] = np.where(lower, weight * full, 1.0 - weight * tail)
    np.clip(out, 0.0, 1.0, out=out)
    return _result(out.reshape(a_arr.shape), a, b)


def gaussian_q(x):
    """Standard normal tail probability P[Z > x]."""
    x = np.asarray(x, dtype=float)
    return _result(0.5 * special.erfc(x / np.sqrt(2.0)), x)


def psi(t):
    """I_1(t) / (t I_0(t)) for t > 0."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("psi is defined for t > 0 only")
    return _result(special.ive(1, t) / (t * special.ive(0, t)), t)


def psi_inv(y: float, width: float = 1e-12) -> float:
    """Inverse of :func:`psi` on (0, 1/2) by bisection."""
    y = float(y)
    if not 0.0 < y < 0.5:
        raise ValueError("psi_inv requires 0 < y < 0.5")
    lo, hi = 1e-8, max(4.0, 2.0 / y)
    while psi(hi) > y:  # pragma: no cover - bracket is always wide enough
        hi *= 2.0
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if psi(mid) > y:
            lo = mid
        else:
            hi = mid
        if mid in (lo, hi) and hi - lo <= np.spacing(hi) * 4:
            break
    return 0.5 * (lo + hi)


# below this Bessel argument two series terms are exact to double precision
_SMALL_BESSEL_ARG = 1e-4


def _check_density_args(x, scale, dof, noncentrality):
    if np.any(np.asarray(x) < 0):
        raise ValueError("x must be non-negative")
    if not scale > 0:
        raise ValueError("scale must be positive")
    if dof < 2 or dof % 2:
        raise ValueError("dof must be an even positive integer")
    if noncentrality < 0:
        raise ValueError("noncentrality must be non-negative")


def ncx2_scaled_pdf(x, scale: float, dof: int, noncentrality: float):
    """Density of ``scale * Y`` with Y non-central chi-squared(dof, noncentrality)."""
    _check_density_args(x, scale, dof, noncentrality)
    x = np.asarray(x, dtype=float)
    y = x / scale
    nu = dof // 2 - 1
    lam = float(noncentrality)
    if lam == 0.0:
        logp = nu * np.log(np.where(y > 0, y, 1.0)) - 0.5 * y - (nu + 1) * np.log(2.0) - special.gammaln(nu + 1)
        p = np.where((y > 0) | (nu == 0), np.exp(logp), 0.0)
    else:
        ys = np.where(y > 0, y, 1.0)
        z = np.sqrt(lam * ys)
        # for tiny lam the power overflows while ive underflows; the leading
        # Bessel series terms give the product with lam cancelled
        lead = np.exp(nu * np.log(0.5 * ys) - special.gammaln(nu + 1) - 0.5 * (ys + lam))
        with np.errstate(over="ignore", invalid="ignore"):
            logp = -0.5 * (np.sqrt(ys) - np.sqrt(lam)) ** 2 + 0.5 * nu * np.log(ys / lam)
            full = np.exp(logp) * special.ive(nu, z)
        p = 0.5 * np.where(z < _SMALL_BESSEL_ARG, lead * (1 + z * z / (4 * (nu + 1))), full)
        at0 = 0.5 * np.exp(-0.5 * lam) if nu == 0 else 0.0
        p = np.where(y > 0, p, at0)
    return _result(p / scale, x)


def ncchi_scaled_pdf(x, scale: float, dof: int, noncentrality: float):
    """Density of ``scale * Z`` with Z non-central chi(dof, noncentrality).

    ``noncentrality`` is the norm of the mean vector (chi convention), so
    Z**2 is non-central chi-squared with non-centrality ``noncentrality**2``.
    """
    _check_density_args(x, scale, dof, noncentrality)
    x = np.asarray(x, dtype=float)
    z = x / scale
    nu = dof // 2 - 1
    lam = float(noncentrality)
    if lam == 0.0:
        zs = np.where(z > 0, z, 1.0)
        logp = (dof - 1) * np.log(zs) - 0.5 * zs**2 - nu * np.log(2.0) - special.gammaln(nu + 1)
        p = np.where(z > 0, np.exp(logp), 0.0)
    else:
        zs = np.where(z > 0, z, 1.0)
        arg = lam * zs
        lead = np.exp((dof - 1) * np.log(zs) - nu * np.log(2.0) - special.gammaln(nu + 1) - 0.5 * (zs**2 + lam**2))
        with np.errstate(over="ignore", invalid="ignore"):
            logp = -0.5 * (zs - lam) ** 2 + np.log(zs) + nu * np.log(zs / lam)
            full = np.exp(logp) * special.ive(nu, arg)
        p = np.where(arg < _SMALL_BESSEL_ARG, lead * (1 + arg * arg / (4 * (nu + 1))), full)
        p = np.where(z > 0, p, 0.0)
    return _result(p / scale, x)


def rician_pdf(r, nu: float, sigma: float):
    """Rice density with line-of-sight amplitude ``nu`` and per-component std ``sigma``."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("r must be non-negative")
    if not sigma > 0 or nu < 0:
        raise ValueError("need sigma > 0 and nu >= 0")
    s2 = sigma * sigma
    p = r / s2 * np.exp(-((r - nu) ** 2) / (2.0 * s2)) * special.ive(0, r * nu / s2)
    return _result(p, r)


def rician_cdf(r, nu: float, sigma: float, tol: Tolerance = DEFAULT_TOL):
    """Rice CDF, 1 - Q1(nu/sigma, r/sigma)."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("r must be non-negative")
    if not sigma > 0 or nu < 0:
        raise ValueError("need sigma > 0 and nu >= 0")
    return _result(1.0 - np.asarray(marcum_q1(nu / sigma, r / sigma, tol)), r)
