"""Optimal SINR classification thresholds for coverage and rate."""
from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize

from . import analytics as an
from .errors import SolverError
from .fading import FULLY_CORRELATED, INDEPENDENT
from .units import db_to_linear, linear_to_db

CLOSED_FORM = "closed_form"
KKT_ROOT = "kkt_root"
GRID_REFINE = "grid_refine"

TPRIME_XTOL_DB = 1e-3
TDOUBLE_GRID = (-10.0, 10.0, 0.1)
# low reference target used to locate T'' where the S_th >= T constraint is slack
TDOUBLE_REFERENCE_DB = -10.0


@dataclass(frozen=True)
class ThresholdSolution:
    s_opt: float
    objective_value: float
    method: str
    residual: float = 0.0
    set_valued: bool = False
    unconstrained_db: float | None = None

    @property
    def s_opt_db(self):
        return float(linear_to_db(self.s_opt))


def _mode_kind(mode):
    return getattr(mode, "kind", mode)


def optimal_coverage_threshold(params, mode=INDEPENDENT, quad=None):
    """``S_th = T`` in both regimes.

    Independent: unique maximiser. Fully correlated: every ``S_th >= T``
    achieves the FR3 coverage; ``T`` is returned as the representative and
    ``set_valued`` is raised.
    """
    kind = _mode_kind(mode)
    at_t = replace(params, threshold=params.target_sinr)
    value = an.average_coverage(at_t, "ffr", kind, quad)
    return ThresholdSolution(
        s_opt=params.target_sinr,
        objective_value=value,
        method=CLOSED_FORM,
        set_valued=kind == FULLY_CORRELATED,
    )


def _kkt_factors(params, quad, exact_k):
    ps = an.spatial_points(params.interference_limited(), quad)
    floor = params.target_sinr if exact_k else 0.0
    k = an.rate_integral(ps.a3, floor) / 3.0
    return ps, k


def kkt_residual(params, s_th, quad=None, exact_k=False, _cache=None):
    """Derivative of the FFR rate w.r.t. ``S_th`` (for ``S_th > T``), up to a
    positive factor, using ``K(r)`` (or ``K(T, r)`` when ``exact_k``).

    Positive means raising the threshold still increases the rate.
    """
    ps, k = _cache if _cache is not None else _kkt_factors(params, quad, exact_k)
    s = float(s_th)
    sa = s * ps.a1
    # sum_i a_i prod_{j != i}(1 + s a_j) / prod_j(1 + s a_j)^2
    weight = (ps.a1 / (1.0 + sa)).sum(axis=1) * np.exp(-np.log1p(sa).sum(axis=1))
    return ps.average((k - np.log1p(s)) * weight)


def solve_tprime(params, quad=None, exact_k=False, xtol_db=TPRIME_XTOL_DB, max_expansions=1):
    """Root ``T'`` of the KKT residual (in dB, bracketed around ``T``)."""
    cache = _kkt_factors(params, quad, exact_k)

    def f(db):
        return kkt_residual(params, db_to_linear(db), _cache=cache)

    centre = float(params.target_db)
    half = 10.0
    tried = []
    for _ in range(max_expansions + 1):
        lo, hi = centre - half, centre + half
        flo, fhi = f(lo), f(hi)
        tried.append((lo, hi, flo, fhi))
        if np.sign(flo) != np.sign(fhi):
            break
        half *= 2.0
    else:
        raise SolverError(
            "KKT residual has no sign change",
            {"brackets_db": [(a, b) for a, b, _, _ in tried],
             "residuals": [(fa, fb) for _, _, fa, fb in tried]},
        )
    root_db, info = optimize.brentq(f, lo, hi, xtol=xtol_db, full_output=True)
    s = db_to_linear(root_db)
    return ThresholdSolution(
        s_opt=s,
        objective_value=an.rate_ffr(replace(params, threshold=max(s, params.target_sinr)), INDEPENDENT, quad),
        method=KKT_ROOT,
        residual=float(f(root_db)),
        unconstrained_db=float(root_db),
    )


def _golden_max(fn, lo, hi, tol):
    res = optimize.minimize_scalar(lambda x: -fn(x), bounds=(lo, hi), method="bounded",
                                   options={"xatol": tol})
    return float(res.x), float(-res.fun)


def maximize_rate_over_threshold(params, mode, grid_db=TDOUBLE_GRID, quad=None, refine_tol_db=1e-3):
    """Argmax over ``S_th`` of the FFR rate: coarse grid then bounded golden-section refinement.

    Returns ``(s_db, rate, grid_values, grid_db_points)``.
    """
    start, stop, step = grid_db
    pts = np.round(np.arange(start, stop + step / 2, step), 10)
    vals = np.array([an.rate_ffr(params.with_threshold_db(s), mode, quad) for s in pts])
    i = int(np.argmax(vals))
    lo = pts[max(i - 1, 0)]
    hi = pts[min(i + 1, pts.size - 1)]
    if hi > lo:
        s_db, best = _golden_max(lambda s: an.rate_ffr(params.with_threshold_db(s), mode, quad),
                                 lo, hi, refine_tol_db)
        if best < vals[i]:
            s_db, best = float(pts[i]), float(vals[i])
    else:
        s_db, best = float(pts[i]), float(vals[i])
    return s_db, best, vals, pts


def solve_tdoubleprime(params, quad=None, grid_db=TDOUBLE_GRID, reference_target_db=TDOUBLE_REFERENCE_DB):
    """``T''``: rate-maximising threshold with fully correlated sub-bands.

    Located numerically at a low reference target so the ``S_th >= T``
    constraint is inactive.
    """
    ref = params.with_target_db(min(reference_target_db, grid_db[0]))
    s_db, best, vals, pts = maximize_rate_over_threshold(ref, FULLY_CORRELATED, grid_db, quad)
    if s_db <= grid_db[0] + 1e-9 or s_db >= grid_db[1] - 1e-9:
        raise SolverError("T'' maximiser sits on the search boundary",
                          {"s_db": s_db, "grid_db": grid_db})
    return ThresholdSolution(s_opt=db_to_linear(s_db), objective_value=best,
                             method=GRID_REFINE, unconstrained_db=s_db)


def optimal_rate_threshold(params, mode=INDEPENDENT, quad=None):
    """``S_opt,R = max(T, T')`` (independent) or ``max(T, T'')`` (fully correlated)."""
    kind = _mode_kind(mode)
    if kind == INDEPENDENT:
        inner = solve_tprime(params, quad)
    elif kind == FULLY_CORRELATED:
        inner = solve_tdoubleprime(params, quad)
    else:
        raise ValueError(f"no rate-optimal threshold for mode {kind!r}")
    s = max(params.target_sinr, inner.s_opt)
    value = an.rate_ffr(replace(params, threshold=s), kind, quad)
    method = inner.method if s == inner.s_opt else CLOSED_FORM
    return ThresholdSolution(s_opt=s, objective_value=value, method=method,
                             residual=inner.residual, unconstrained_db=inner.unconstrained_db)


def centre_user_fraction(params, s_th, quad=None):
    """Share of users whose reuse-1 SIR exceeds ``s_th`` (spatial average)."""
    ps = an.spatial_points(params.interference_limited(), quad)
    return ps.average(an.cp1(ps, float(s_th)))


def rate_gain(params, mode, s_th, quad=None):
    """Relative FFR rate gain over reuse-1 at target ``params.target_sinr``."""
    ffr = an.rate_ffr(replace(params, threshold=float(s_th)), mode, quad)
    fr1 = an.rate_fr1(params, quad)
    return ffr / fr1 - 1.0


def threshold_table_row(alpha, R=an.DEFAULT_RADIUS, quad=None):
    """One row of the threshold/gain summary for path-loss exponent ``alpha``.

    Gains follow the convention target = T' (independent) or T'' (correlated)
    with the threshold at its rate optimum.
    """
    base = an.SystemParams.from_db(alpha=alpha, target_db=0.0, R=R)
    tp = solve_tprime(base, quad)
    tpp = solve_tdoubleprime(base, quad)
    p_ind = replace(base, target_sinr=tp.s_opt)
    p_cor = replace(base, target_sinr=tpp.s_opt)
    return {
        "alpha": float(alpha),
        "t_prime_db": tp.s_opt_db,
        "t_doubleprime_db": tpp.s_opt_db,
        "centre_fraction": centre_user_fraction(base, tp.s_opt, quad),
        "gain_independent_pct": 100.0 * rate_gain(p_ind, INDEPENDENT, tp.s_opt, quad),
        "gain_correlated_pct": 100.0 * rate_gain(p_cor, FULLY_CORRELATED, tpp.s_opt, quad),
        "kkt_residual": tp.residual,
    }
