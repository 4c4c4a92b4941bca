"""Hot numeric kernels.

``tail_integral`` and ``solve_matched_threshold`` come in a numba and a
pure-numpy flavour and dispatch on ``_accel.USE_NUMBA``; both variants stay
importable so they can be compared in tests and in ``benchmarks/``. The
Monte Carlo helpers are plain numpy.

Notation: ``a`` is a ``(points, interferers)`` array of ``(r/d_i)**alpha``
factors and ``nz`` the per-point noise coefficient ``(r/R)**alpha * sigma2/P``.
"""
import math

import numpy as np

from ._accel import USE_NUMBA, njit

TAIL_EPS = 1e-12
QUAD_RTOL = 1e-8
QUAD_ATOL = 1e-14

# Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15).
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])

_GL_X, _GL_W = np.polynomial.legendre.leggauss(15)
_PANEL_WIDTH = 0.25
_STACK = 512


# --------------------------------------------------------------------------
# t-integral  \int_{t0}^\infty prod_i 1/(1 + (e^t - 1) a_i) dt
# --------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _tail_integrand(a, t):
    s = math.expm1(t)
    p = 1.0
    for k in range(a.shape[0]):
        p /= 1.0 + s * a[k]
    return p


@njit(cache=True, nogil=True)
def _tail_limit_one(a, eps):
    """Smallest t we can prove has integrand <= eps (inf when all a_i == 0)."""
    amax = 0.0
    logsum = 0.0
    npos = 0
    for k in range(a.shape[0]):
        if a[k] > 0.0:
            npos += 1
            logsum += math.log(a[k])
            if a[k] > amax:
                amax = a[k]
    if npos == 0:
        return math.inf
    s1 = 1.0 / (eps * amax)
    s2 = math.exp((-math.log(eps) - logsum) / npos)
    return math.log1p(min(s1, s2))


@njit(cache=True, nogil=True)
def _gk15(a, lo, hi, xgk, wgk, wg):
    c = 0.5 * (lo + hi)
    h = 0.5 * (hi - lo)
    fc = _tail_integrand(a, c)
    resk = fc * wgk[7]
    resg = fc * wg[3]
    for j in range(7):
        x = h * xgk[j]
        fsum = _tail_integrand(a, c - x) + _tail_integrand(a, c + x)
        resk += wgk[j] * fsum
        if j % 2 == 1:
            resg += wg[j // 2] * fsum
    return resk * h, abs((resk - resg) * h)


@njit(cache=True, nogil=True)
def _tail_one(a, t0, rtol, atol, eps, xgk, wgk, wg):
    t1 = _tail_limit_one(a, eps)
    if not math.isfinite(t1):
        return math.inf, 0
    if t1 <= t0:
        t1 = t0 + 1.0
    span = t1 - t0
    lo_stack = np.empty(_STACK)
    hi_stack = np.empty(_STACK)
    nseg = 8
    top = 0
    for i in range(nseg):
        lo_stack[top] = t0 + span * i / nseg
        hi_stack[top] = t0 + span * (i + 1) / nseg
        top += 1
    total = 0.0
    failed = 0
    while top > 0:
        top -= 1
        lo = lo_stack[top]
        hi = hi_stack[top]
        val, err = _gk15(a, lo, hi, xgk, wgk, wg)
        tol = max(rtol * abs(val), atol * (hi - lo) / span)
        if err <= tol or top + 2 >= _STACK or (hi - lo) < 1e-10 * span:
            if err > tol:
                failed += 1
            total += val
        else:
            mid = 0.5 * (lo + hi)
            lo_stack[top] = lo
            hi_stack[top] = mid
            lo_stack[top + 1] = mid
            hi_stack[top + 1] = hi
            top += 2
    return total, failed


@njit(cache=True, nogil=True)
def _tail_integral_nb(a, t0, rtol, atol, eps, xgk, wgk, wg):
    n = a.shape[0]
    out = np.empty(n)
    failed = 0
    for p in range(n):
        v, f = _tail_one(a[p], t0[p], rtol, atol, eps, xgk, wgk, wg)
        out[p] = v
        failed += f
    return out, failed


def tail_integral_numba(a, t0, rtol=QUAD_RTOL, atol=QUAD_ATOL, eps=TAIL_EPS):
    """Adaptive Gauss-Kronrod per point. Returns ``(values, n_unconverged_panels)``."""
    a = np.ascontiguousarray(a, dtype=float)
    t0 = np.ascontiguousarray(np.broadcast_to(t0, a.shape[:1]), dtype=float)
    return _tail_integral_nb(a, t0, rtol, atol, eps, _XGK, _WGK, _WG)


def _tail_limit_numpy(a, eps):
    pos = a > 0
    amax = a.max(axis=1)
    npos = pos.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        logsum = np.where(pos, np.log(np.where(pos, a, 1.0)), 0.0).sum(axis=1)
        s1 = 1.0 / (eps * amax)
        s2 = np.exp((-np.log(eps) - logsum) / npos)
    t1 = np.log1p(np.minimum(s1, s2))
    return np.where(npos > 0, t1, np.inf)


def tail_integral_numpy(a, t0, rtol=QUAD_RTOL, atol=QUAD_ATOL, eps=TAIL_EPS):
    """Composite 15-point Gauss-Legendre on panels no wider than 0.25 in t.

    Not adaptive; the integrand is analytic in t and decays at most like
    ``exp(-n t)`` so the fixed panel rule is far below ``rtol`` already.
    ``rtol``/``atol`` are accepted for signature parity.
    """
    a = np.asarray(a, dtype=float)
    t0 = np.broadcast_to(np.asarray(t0, dtype=float), a.shape[:1])
    t1 = _tail_limit_numpy(a, eps)
    out = np.full(a.shape[0], np.inf)
    ok = np.isfinite(t1)
    if not ok.any():
        return out, 0
    aa, lo = a[ok], t0[ok]
    hi = np.where(t1[ok] <= lo, lo + 1.0, t1[ok])
    span = hi - lo
    m = max(1, int(np.ceil(span.max() / _PANEL_WIDTH)))
    width = span / m
    acc = np.zeros(aa.shape[0])
    half = 0.5 * width[:, None]
    with np.errstate(over="ignore"):
        for k in range(m):
            centre = lo + (k + 0.5) * width
            t = centre[:, None] + half * _GL_X[None, :]
            s = np.expm1(t)
            f = 1.0 / np.prod(1.0 + s[:, :, None] * aa[:, None, :], axis=2)
            acc += (f * _GL_W[None, :]).sum(axis=1) * half[:, 0]
    out[ok] = acc
    return out, 0


# --------------------------------------------------------------------------
# matched threshold: x >= lower with exp(-x nz) / prod(1 + x a_i) == target
# --------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _log_cp(a, nz, x):
    v = -x * nz
    for k in range(a.shape[0]):
        v -= math.log1p(x * a[k])
    return v


@njit(cache=True, nogil=True)
def _log_cp_slope(a, nz, x):
    # d/du log CP(e^u) at x = e^u
    s = nz
    for k in range(a.shape[0]):
        s += a[k] / (1.0 + x * a[k])
    return -x * s


@njit(cache=True, nogil=True)
def _matched_nb(a, nz, target, lower, rtol):
    n = a.shape[0]
    out = np.empty(n)
    for p in range(n):
        lt = math.log(target[p])
        lo = lower[p]
        if _log_cp(a[p], nz[p], lo) - lt <= 0.0:
            out[p] = lo
            continue
        hi = 2.0 * lo
        it = 0
        while _log_cp(a[p], nz[p], hi) - lt > 0.0 and it < 2000:
            lo = hi
            hi *= 2.0
            it += 1
        if it >= 2000:
            out[p] = math.nan
            continue
        # safeguarded Newton in u = log x; the bracket [lo, hi] always holds the root
        x = math.sqrt(lo * hi)
        for _ in range(200):
            f = _log_cp(a[p], nz[p], x) - lt
            if f > 0.0:
                lo = x
            else:
                hi = x
            slope = _log_cp_slope(a[p], nz[p], x)
            xn = x * math.exp(-f / slope) if slope < 0.0 else -1.0
            if not (lo < xn < hi):
                xn = math.sqrt(lo * hi)
            if abs(xn - x) <= rtol * x or hi - lo <= rtol * lo:
                x = xn
                break
            x = xn
        out[p] = x
    return out


def solve_matched_threshold_numba(a, nz, target, lower, rtol=1e-14):
    a = np.ascontiguousarray(a, dtype=float)
    shape = a.shape[:1]
    nz = np.ascontiguousarray(np.broadcast_to(nz, shape), dtype=float)
    target = np.ascontiguousarray(np.broadcast_to(target, shape), dtype=float)
    lower = np.ascontiguousarray(np.broadcast_to(lower, shape), dtype=float)
    return _matched_nb(a, nz, target, lower, rtol)


def solve_matched_threshold_numpy(a, nz, target, lower, rtol=1e-14):
    a = np.asarray(a, dtype=float)
    shape = a.shape[:1]
    nz = np.broadcast_to(np.asarray(nz, float), shape)
    lt = np.log(np.broadcast_to(np.asarray(target, float), shape))
    lo = np.array(np.broadcast_to(np.asarray(lower, float), shape))

    def excess(x):
        return -x * nz - np.log1p(x[:, None] * a).sum(axis=1) - lt

    done = excess(lo) <= 0.0
    out = np.where(done, lo, np.nan)
    hi = 2.0 * lo
    active = ~done
    for _ in range(2000):
        pos = active & (excess(hi) > 0.0)
        if not pos.any():
            break
        lo = np.where(pos, hi, lo)
        hi = np.where(pos, 2.0 * hi, hi)
    else:
        active &= excess(hi) <= 0.0
    for _ in range(200):
        mid = np.sqrt(lo * hi)
        up = excess(mid) > 0.0
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)
        if np.all((hi - lo)[active] <= rtol * lo[active]):
            break
    out[active] = np.sqrt(lo * hi)[active]
    return out


# --------------------------------------------------------------------------
# Monte Carlo helpers: whole-array numpy expressions. Loop versions under
# numba measured no faster (ufunc SIMD / BLAS matmul), so there is one path.
# --------------------------------------------------------------------------

def path_loss(r, theta, bs, alpha):
    """``(r / d_i)^alpha`` for users at ``(r, theta)`` and sites ``bs``."""
    r = np.asarray(r, float)
    x = (r * np.cos(theta))[:, None]
    y = (r * np.sin(theta))[:, None]
    d = np.hypot(x - bs[None, :, 0], y - bs[None, :, 1])
    return (r[:, None] / d) ** alpha


def sinr(g, h, a, nz):
    """``g / (sum_i h_i a_i + nz)`` per sample; ``inf`` without interference or noise."""
    denom = np.einsum("ij,ij->i", h, a) + nz
    with np.errstate(divide="ignore"):
        return np.where(denom > 0, g / np.where(denom > 0, denom, 1.0), np.inf)


def tdl_band_powers(taps, phasors):
    """``|taps @ phasors|**2`` for complex ``taps`` (n, L) and ``phasors`` (L, m)."""
    return np.abs(np.asarray(taps) @ phasors) ** 2


if USE_NUMBA:
    tail_integral = tail_integral_numba
    solve_matched_threshold = solve_matched_threshold_numba
else:
    tail_integral = tail_integral_numpy
    solve_matched_threshold = solve_matched_threshold_numpy
