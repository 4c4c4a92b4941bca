"""Closed-form coverage probabilities and normalised average rates.

Every per-point quantity is a product of ``1/(1 + x (r/d_i)^alpha)`` factors
(Exp(1) fading), optionally times ``exp(-x (r/R)^alpha sigma2/P)``. Rates use

    F(a, c) = int_0^inf prod_i 1/(1 + max(e^t - 1, c) a_i) dt
            = ln(1+c) prod_i 1/(1 + c a_i) + int_{ln(1+c)}^inf prod_i 1/(1 + (e^t-1) a_i) dt

whose tail is evaluated by :func:`ffrplan.kernels.tail_integral`.
Spatial averages use Gauss-Legendre nodes in ``r`` (weighted by the uniform
in-disc pdf ``2r/R^2``) times a periodic trapezoid over one symmetry sector
in ``theta``.
"""
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import NumericalError, ParameterError
from .fading import FULLY_CORRELATED, INDEPENDENT, CorrelationMode
from .geometry import NetworkLayout, UserPosition, build_layout, path_loss_ratios
from .units import db_to_linear, linear_to_db

DEFAULT_RADIUS = 577.0
DEFAULT_ALPHA = 3.0


@dataclass(frozen=True)
class SystemParams:
    """Link-budget parameters. SINR quantities are linear ratios."""

    alpha: float = DEFAULT_ALPHA
    target_sinr: float = 1.0
    threshold: float = 1.0
    noise_over_power: float = 0.0
    layout: NetworkLayout = field(default_factory=lambda: build_layout(DEFAULT_RADIUS))
    min_radius: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.alpha) or self.alpha < 2:
            raise ParameterError(f"path-loss exponent must be >= 2, got {self.alpha}")
        if not self.target_sinr > 0:
            raise ParameterError(f"target SINR must be > 0, got {self.target_sinr}")
        if not self.threshold > 0:
            raise ParameterError(f"SINR threshold must be > 0, got {self.threshold}")
        if not self.noise_over_power >= 0:
            raise ParameterError("noise-to-power ratio must be >= 0")
        if not 0 <= self.min_radius < self.layout.cell_radius:
            raise ParameterError("min_radius must lie in [0, R)")

    @classmethod
    def from_db(cls, alpha=DEFAULT_ALPHA, target_db=0.0, threshold_db=None,
                noise_over_power=0.0, R=DEFAULT_RADIUS, min_radius=0.0, layout=None):
        if threshold_db is None:
            threshold_db = target_db
        return cls(
            alpha=float(alpha),
            target_sinr=db_to_linear(target_db),
            threshold=db_to_linear(threshold_db),
            noise_over_power=float(noise_over_power),
            layout=build_layout(R) if layout is None else layout,
            min_radius=float(min_radius),
        )

    @property
    def target_db(self):
        return linear_to_db(self.target_sinr)

    @property
    def threshold_db(self):
        return linear_to_db(self.threshold)

    @property
    def cell_radius(self):
        return self.layout.cell_radius

    def with_target_db(self, db):
        return replace(self, target_sinr=db_to_linear(db))

    def with_threshold_db(self, db):
        return replace(self, threshold=db_to_linear(db))

    def interference_limited(self):
        return replace(self, noise_over_power=0.0)


@dataclass(frozen=True)
class RadialPdf:
    """Uniform user density on the annulus ``min_radius < r <= R``."""

    R: float
    min_radius: float = 0.0

    def __post_init__(self):
        if self.R <= 0 or not 0 <= self.min_radius < self.R:
            raise ParameterError("need 0 <= min_radius < R")

    def pdf(self, r):
        r = np.asarray(r, float)
        inside = (r > self.min_radius) & (r <= self.R)
        return np.where(inside, 2 * r / (self.R**2 - self.min_radius**2), 0.0)

    def sample(self, u):
        """Inverse-CDF transform of uniforms ``u`` in [0, 1)."""
        r0 = self.min_radius
        return np.sqrt(r0**2 + np.asarray(u) * (self.R**2 - r0**2))

    def nodes(self, n):
        """Gauss-Legendre nodes on (min_radius, R) with pdf-weighted weights."""
        x, w = np.polynomial.legendre.leggauss(n)
        half = 0.5 * (self.R - self.min_radius)
        r = self.min_radius + half * (x + 1)
        return r, w * half * self.pdf(r)


@dataclass(frozen=True)
class Quadrature:
    n_r: int = 64
    n_theta: int = 16


DEFAULT_QUADRATURE = Quadrature()


@dataclass(frozen=True, eq=False)
class PointSet:
    """Evaluation points with their FR1/FR3 path-loss factors and weights."""

    r: np.ndarray
    theta: np.ndarray
    weights: np.ndarray
    a1: np.ndarray
    a3: np.ndarray
    nz: np.ndarray

    def average(self, values):
        return float(np.dot(self.weights, values))

    def without_noise(self):
        return replace(self, nz=np.zeros_like(self.nz))


def point_set(params, r, theta, weights=None):
    r = np.atleast_1d(np.asarray(r, float))
    theta = np.broadcast_to(np.asarray(theta, float), r.shape)
    lay = params.layout
    a1 = path_loss_ratios(lay, r, theta, params.alpha, "fr1")
    a3 = path_loss_ratios(lay, r, theta, params.alpha, "fr3")
    nz = (r / lay.cell_radius) ** params.alpha * params.noise_over_power
    if weights is None:
        weights = np.full(r.shape, 1.0 / r.size)
    return PointSet(r, np.asarray(theta), np.asarray(weights, float), a1, a3, nz)


def user_points(params, user):
    user.check_inside(params.layout)
    return point_set(params, [user.r], [user.theta])


def theta_nodes(layout, n_theta):
    return np.arange(n_theta) * (layout.sector / n_theta)


@lru_cache(maxsize=64)
def _spatial_points(params, n_r, n_theta):
    pdf = RadialPdf(params.cell_radius, params.min_radius)
    r, wr = pdf.nodes(n_r)
    th = theta_nodes(params.layout, n_theta)
    rr, tt = np.meshgrid(r, th, indexing="ij")
    w = np.repeat(wr, n_theta) / n_theta
    return point_set(params, rr.ravel(), tt.ravel(), w)


def spatial_points(params, quad=None):
    quad = quad or DEFAULT_QUADRATURE
    return _spatial_points(params, quad.n_r, quad.n_theta)


def ring_points(params, r, n_theta=None):
    """Points on the circle of radius ``r`` for theta-averaged per-distance curves."""
    n_theta = n_theta or DEFAULT_QUADRATURE.n_theta
    th = theta_nodes(params.layout, n_theta)
    return point_set(params, np.full(n_theta, float(r)), th)


# --------------------------------------------------------------------------
# per-point building blocks (vectorised over a PointSet)
# --------------------------------------------------------------------------

def cp_products(a, nz, x):
    """``exp(-x nz) / prod(1 + x a_i)``: coverage at target ``x`` under Exp(1) fading."""
    x = np.asarray(x, float)
    xa = x[..., None] * a if x.ndim else x * a
    return np.exp(-x * nz - np.log1p(xa).sum(axis=-1))


def cp1(ps, x):
    return cp_products(ps.a1, ps.nz, x)


def cp3(ps, x):
    return cp_products(ps.a3, ps.nz, x)


def matched_threshold(ps, s_th):
    """Per-point FR3 threshold with ``CP3(shat) == CP1(s_th)``."""
    target = cp1(ps, s_th)
    lower = np.full(target.shape, float(s_th))
    shat = kernels.solve_matched_threshold(ps.a3, ps.nz, target, lower)
    if np.any(~np.isfinite(shat)):
        bad = int(np.flatnonzero(~np.isfinite(shat))[0])
        raise NumericalError(
            "matched FR3 threshold did not bracket",
            {"s_th": float(s_th), "r": float(ps.r[bad]), "theta": float(ps.theta[bad]),
             "cp1_target": float(target[bad])},
        )
    return shat


def rate_integral(a, floor):
    """``F(a, floor)`` per point; ``floor`` scalar or per-point array (no noise)."""
    floor = np.broadcast_to(np.asarray(floor, float), a.shape[:1])
    t0 = np.log1p(floor)
    head = t0 * cp_products(a, 0.0, floor)
    tail, failed = kernels.tail_integral(a, t0)
    if failed:
        raise NumericalError(
            "t-integral did not reach tolerance",
            {"unconverged_panels": int(failed), "rtol": kernels.QUAD_RTOL},
        )
    return head + tail


def _mode_kind(mode):
    kind = mode.kind if isinstance(mode, CorrelationMode) else str(mode)
    if kind not in (INDEPENDENT, FULLY_CORRELATED):
        raise ParameterError(
            f"analytic expressions exist only for independent/correlated modes, got {kind!r}"
        )
    return kind


def ffr_coverage_points(ps, T, S, mode):
    kind = _mode_kind(mode)
    centre = cp1(ps, max(T, S))
    c3 = cp3(ps, T)
    if kind == INDEPENDENT:
        return centre + c3 - c3 * cp1(ps, S)
    shat = matched_threshold(ps, S)
    return centre + c3 - cp3(ps, np.maximum(shat, T))


def ffr_edge_joint_points(ps, T, S, mode):
    """``P[edge user covered, eta < S]`` per point."""
    kind = _mode_kind(mode)
    c3 = cp3(ps, T)
    if kind == INDEPENDENT:
        return c3 * (1.0 - cp1(ps, S))
    return c3 - cp3(ps, np.maximum(matched_threshold(ps, S), T))


def ffr_rate_points(ps, T, S, mode):
    """Centre and (unweighted) edge rate terms per point; total = centre + edge/3."""
    kind = _mode_kind(mode)
    ps = ps.without_noise()
    centre = rate_integral(ps.a1, max(T, S))
    fr3 = rate_integral(ps.a3, T)
    if kind == INDEPENDENT:
        edge = (1.0 - cp1(ps, S)) * fr3
    else:
        shat = matched_threshold(ps, S)
        edge = fr3 - rate_integral(ps.a3, np.maximum(shat, T))
    return centre, edge


# --------------------------------------------------------------------------
# public API: single user position
# --------------------------------------------------------------------------

def _one(x):
    return float(np.asarray(x).reshape(-1)[0])


def coverage_fr1(params, user, target=None):
    T = params.target_sinr if target is None else float(target)
    return _one(cp1(user_points(params, user), T))


def coverage_fr3(params, user, target=None):
    T = params.target_sinr if target is None else float(target)
    return _one(cp3(user_points(params, user), T))


def coverage_ffr_centre(params, user):
    """``P[eta > T | eta > S_th]``."""
    ps = user_points(params, user)
    T, S = params.target_sinr, params.threshold
    return _one(cp1(ps, max(T, S)) / cp1(ps, S))


def coverage_ffr_edge(params, user, mode=INDEPENDENT):
    """``P[eta_hat > T | eta < S_th]``; ``nan`` when nobody is classified edge."""
    ps = user_points(params, user)
    T, S = params.target_sinr, params.threshold
    p_edge = 1.0 - cp1(ps, S)
    joint = ffr_edge_joint_points(ps, T, S, mode)
    with np.errstate(invalid="ignore", divide="ignore"):
        return _one(np.where(p_edge > 0, joint / p_edge, np.nan))


def coverage_ffr(params, user, mode=INDEPENDENT):
    ps = user_points(params, user)
    return _one(ffr_coverage_points(ps, params.target_sinr, params.threshold, mode))


def shat_threshold(params, user):
    """FR3-domain threshold matching the FR1 edge probability at this position."""
    return _one(matched_threshold(user_points(params, user), params.threshold))


def k_factor(params, user, exact=True):
    """One third of the FR3 normalised rate at this position.

    ``exact=False`` drops the target from the ``max`` (the small-T
    approximation used by the rate-optimal threshold equation).
    """
    ps = user_points(params, user).without_noise()
    floor = params.target_sinr if exact else 0.0
    return _one(rate_integral(ps.a3, floor)) / 3.0


# --------------------------------------------------------------------------
# public API: spatial averages
# --------------------------------------------------------------------------

def _rate_params(params):
    if params.noise_over_power != 0:
        warnings.warn(
            "rate expressions are interference-limited; noise_over_power is ignored",
            stacklevel=3,
        )
    return params.interference_limited()


def average_coverage(params, quantity="ffr", mode=INDEPENDENT, quad=None):
    """Spatially averaged coverage: ``quantity`` in {fr1, fr3, ffr}."""
    ps = spatial_points(params, quad)
    T, S = params.target_sinr, params.threshold
    if quantity == "fr1":
        vals = cp1(ps, T)
    elif quantity == "fr3":
        vals = cp3(ps, T)
    elif quantity == "ffr":
        vals = ffr_coverage_points(ps, T, S, mode)
    else:
        raise ParameterError(f"unknown coverage quantity {quantity!r}")
    return ps.average(vals)


def rate_fr1(params, quad=None):
    """Normalised average rate of reuse-1 (nats/s/Hz)."""
    ps = spatial_points(_rate_params(params), quad)
    return ps.average(rate_integral(ps.a1, params.target_sinr))


def rate_fr3(params, quad=None, bandwidth_fraction=1.0):
    """Normalised average rate of reuse-3.

    With ``bandwidth_fraction=1`` this is the per-sub-band rate (same
    normalisation as :func:`rate_fr1`); pass ``1/3`` to charge the reuse
    bandwidth penalty.
    """
    ps = spatial_points(_rate_params(params), quad)
    return bandwidth_fraction * ps.average(rate_integral(ps.a3, params.target_sinr))


def rate_ffr(params, mode=INDEPENDENT, quad=None):
    ps = spatial_points(_rate_params(params), quad)
    centre, edge = ffr_rate_points(ps, params.target_sinr, params.threshold, mode)
    return ps.average(centre + edge / 3.0)


def rate_ffr_terms(params, mode=INDEPENDENT, quad=None):
    """``(centre_term, edge_term)`` of the FFR rate; edge already carries the 1/3."""
    ps = spatial_points(_rate_params(params), quad)
    centre, edge = ffr_rate_points(ps, params.target_sinr, params.threshold, mode)
    return ps.average(centre), ps.average(edge) / 3.0


def coverage_curves(params, r_values, mode=INDEPENDENT, n_theta=None):
    """Theta-averaged coverage curves versus distance.

    Returns a dict of arrays: ``r``, ``fr1``, ``fr3``, ``ffr_centre``,
    ``ffr_edge``, ``ffr`` and ``edge_fraction``. Conditional centre/edge
    coverages are ratios of theta-averaged joint and marginal probabilities.
    """
    T, S = params.target_sinr, params.threshold
    out = {k: [] for k in ("fr1", "fr3", "ffr_centre", "ffr_edge", "ffr", "edge_fraction")}
    for r in np.asarray(r_values, float):
        UserPosition(r).check_inside(params.layout)
        ps = ring_points(params, r, n_theta)
        p_centre = ps.average(cp1(ps, S))
        centre_joint = ps.average(cp1(ps, max(T, S)))
        edge_joint = ps.average(ffr_edge_joint_points(ps, T, S, mode))
        out["fr1"].append(ps.average(cp1(ps, T)))
        out["fr3"].append(ps.average(cp3(ps, T)))
        out["ffr_centre"].append(centre_joint / p_centre if p_centre > 0 else np.nan)
        out["ffr_edge"].append(edge_joint / (1 - p_centre) if p_centre < 1 else np.nan)
        out["ffr"].append(centre_joint + edge_joint)
        out["edge_fraction"].append(1.0 - p_centre)
    res = {k: np.array(v) for k, v in out.items()}
    res["r"] = np.asarray(r_values, float)
    return res
