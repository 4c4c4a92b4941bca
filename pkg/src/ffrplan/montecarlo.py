"""Seeded Monte Carlo estimators for every coverage and rate quantity.

Samples are split over ``n_streams`` Philox substreams keyed by
``(seed, stream_id)``. Each stream reduces to ``(count, mean, M2)`` and the
streams are merged in stream order, so the thread count never changes a
result bit.
"""
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import analytics as an
from . import kernels
from .errors import ParameterError
from .fading import FULLY_CORRELATED, INDEPENDENT, TAPPED_DELAY_LINE, CorrelationMode, draw_powers

DEFAULT_SEED = 20140501
DEFAULT_STREAMS = 16
CHUNK = 1 << 16

EDGE_RULE_SINR = "sinr"
EDGE_RULE_MATCHED = "matched"

QUANTITIES = (
    "cov_fr1", "cov_fr3", "cov_ffr",
    "rate_fr1", "rate_fr3", "rate_ffr",
    "edge", "fr3_below_shat",
)
_COL = {q: i for i, q in enumerate(QUANTITIES)}


def make_stream(seed, stream_id, lane=0):
    """Counter-based generator for ``(seed, stream_id, lane)``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream_id), int(lane)))
    return np.random.Generator(np.random.Philox(ss))


def default_threads():
    try:
        return max(1, int(os.environ.get("FFR_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Estimate:
    value: float
    std_error: float
    n_samples: int

    def z_score(self, reference):
        if self.std_error == 0:
            return 0.0 if self.value == reference else math.copysign(math.inf, self.value - reference)
        return (self.value - reference) / self.std_error

    @property
    def resolution(self):
        """Smallest step of a sample mean of 0/1 indicators."""
        return 1.0 / self.n_samples

    def tolerance(self, n_se=3.0):
        # the resolution term keeps zero-variance estimates (all samples equal) comparable
        return n_se * self.std_error + self.resolution

    def agrees(self, reference, n_se=3.0):
        return abs(self.value - reference) <= self.tolerance(n_se)


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo run description.

    ``radius``/``theta`` pin the user position; ``None`` samples it (area
    uniform in the cell for ``radius``, uniform angle for ``theta``).
    ``edge_rule="matched"`` classifies the edge term on the FR3 SINR against
    the matched threshold, which is what the fully-correlated analytic
    expressions describe.
    """

    params: an.SystemParams = field(default_factory=an.SystemParams)
    mode: CorrelationMode = field(default_factory=CorrelationMode.independent)
    n_samples: int = 10**6
    seed: int = DEFAULT_SEED
    n_streams: int = DEFAULT_STREAMS
    threads: int = 1
    radius: float | None = None
    theta: float | None = None
    edge_rule: str = EDGE_RULE_SINR

    def __post_init__(self):
        if isinstance(self.mode, str):
            object.__setattr__(self, "mode", CorrelationMode.parse(self.mode))
        if self.n_samples < 1:
            raise ParameterError("n_samples must be >= 1")
        if self.n_streams < 1:
            raise ParameterError("n_streams must be >= 1")
        if self.edge_rule not in (EDGE_RULE_SINR, EDGE_RULE_MATCHED):
            raise ParameterError(f"unknown edge rule {self.edge_rule!r}")
        if self.radius is not None and not 0 <= self.radius <= self.params.cell_radius:
            raise ParameterError("radius must lie inside the cell")


def _positions(cfg, rng, n):
    p = cfg.params
    if cfg.radius is None:
        r = an.RadialPdf(p.cell_radius, p.min_radius).sample(rng.random(n))
    else:
        r = np.full(n, float(cfg.radius))
    if cfg.theta is None:
        theta = rng.random(n) * (2 * np.pi)
    else:
        theta = np.full(n, float(cfg.theta))
    return r, theta


def sample_block(cfg, rng, rng_edge, n):
    """Per-sample contributions, shape ``(n, len(QUANTITIES))``."""
    p = cfg.params
    lay = p.layout
    T, S = p.target_sinr, p.threshold
    r, theta = _positions(cfg, rng, n)
    a1 = kernels.path_loss(r, theta, lay.fr1_interferers, p.alpha)
    idx3 = lay.fr3_index
    a3 = np.ascontiguousarray(a1[:, idx3])
    nz = (r / lay.cell_radius) ** p.alpha * p.noise_over_power
    g, g_hat, h, h_hat = draw_powers(cfg.mode, a1.shape[1], rng, n, rng_edge)

    eta = kernels.sinr(g, h, a1, nz)
    eta3 = kernels.sinr(g, np.ascontiguousarray(h[:, idx3]), a3, nz)
    eta_hat = kernels.sinr(g_hat, np.ascontiguousarray(h_hat[:, idx3]), a3, nz)

    centre = eta >= S
    need_shat = cfg.edge_rule == EDGE_RULE_MATCHED
    if need_shat:
        target = an.cp_products(a1, nz, S)
        shat = kernels.solve_matched_threshold(a3, nz, target, np.full(n, S))
        edge = eta_hat < shat
        below_shat = eta3 < shat
    else:
        edge = ~centre
        below_shat = np.zeros(n, dtype=bool)

    with np.errstate(invalid="ignore"):
        ln1 = np.log1p(eta)
        ln3 = np.log1p(eta3)
        lnh = np.log1p(eta_hat)
    cov_centre = centre & (eta > T)
    cov_edge = edge & (eta_hat > T)

    out = np.empty((n, len(QUANTITIES)))
    out[:, _COL["cov_fr1"]] = eta > T
    out[:, _COL["cov_fr3"]] = eta3 > T
    out[:, _COL["cov_ffr"]] = cov_centre.astype(float) + cov_edge
    out[:, _COL["rate_fr1"]] = np.where(eta > T, ln1, 0.0)
    out[:, _COL["rate_fr3"]] = np.where(eta3 > T, ln3, 0.0)
    out[:, _COL["rate_ffr"]] = np.where(cov_centre, ln1, 0.0) + np.where(cov_edge, lnh, 0.0) / 3.0
    out[:, _COL["edge"]] = edge
    out[:, _COL["fr3_below_shat"]] = below_shat
    return out


def _stream_moments(cfg, stream_id, n):
    rng = make_stream(cfg.seed, stream_id, 0)
    rng_edge = make_stream(cfg.seed, stream_id, 1)
    count = 0
    mean = np.zeros(len(QUANTITIES))
    m2 = np.zeros(len(QUANTITIES))
    done = 0
    while done < n:
        m = min(CHUNK, n - done)
        x = sample_block(cfg, rng, rng_edge, m)
        cm = x.mean(axis=0)
        cm2 = ((x - cm) ** 2).sum(axis=0)
        count, mean, m2 = _merge(count, mean, m2, m, cm, cm2)
        done += m
    return count, mean, m2


def _merge(na, ma, m2a, nb, mb, m2b):
    if na == 0:
        return nb, mb, m2b
    n = na + nb
    delta = mb - ma
    mean = ma + delta * (nb / n)
    m2 = m2a + m2b + delta**2 * (na * nb / n)
    return n, mean, m2


def _stream_sizes(n, k):
    base, extra = divmod(n, k)
    return [base + (1 if i < extra else 0) for i in range(k)]


def simulate(cfg):
    """All quantities at once: ``{name: Estimate}``."""
    sizes = _stream_sizes(cfg.n_samples, cfg.n_streams)
    jobs = [(i, s) for i, s in enumerate(sizes) if s > 0]
    threads = max(1, int(cfg.threads))
    if threads == 1:
        parts = [_stream_moments(cfg, i, s) for i, s in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda job: _stream_moments(cfg, *job), jobs))
    count, mean, m2 = 0, None, None
    for c, mu, q in parts:
        count, mean, m2 = _merge(count, mean, m2, c, mu, q)
    var = m2 / (count - 1) if count > 1 else np.zeros_like(m2)
    se = np.sqrt(np.maximum(var, 0.0) / count)
    return {q: Estimate(float(mean[i]), float(se[i]), int(count)) for i, q in enumerate(QUANTITIES)}


def simulate_coverage(cfg, quantity="ffr"):
    key = {"fr1": "cov_fr1", "fr3": "cov_fr3", "ffr": "cov_ffr"}.get(str(quantity).lower())
    if key is None:
        raise ParameterError(f"unknown coverage quantity {quantity!r}")
    return simulate(cfg)[key]


def simulate_rate(cfg, scheme="ffr"):
    if cfg.params.noise_over_power != 0:
        raise ParameterError("rate simulation assumes an interference-limited system")
    key = {"fr1": "rate_fr1", "fr3": "rate_fr3", "ffr": "rate_ffr"}.get(str(scheme).lower())
    if key is None:
        raise ParameterError(f"unknown rate scheme {scheme!r}")
    return simulate(cfg)[key]


def edge_fraction_vs_distance(cfg, r_grid):
    """``[(r, Estimate of P[eta < S_th])]`` with the angle sampled uniformly."""
    out = []
    for r in r_grid:
        est = simulate(replace(cfg, radius=float(r), theta=None, edge_rule=EDGE_RULE_SINR))
        out.append((float(r), est["edge"]))
    return out


def simulate_tdl_ffr_coverage(cfg, r_grid, n_theta=None):
    """FFR coverage versus distance with tapped-delay-line sub-band fading.

    The threshold is pinned to ``S_th = T``. Each row carries the Monte Carlo
    estimate plus the independent (upper) and fully-correlated (lower)
    analytic curves at the same distance.
    """
    if cfg.mode.kind != TAPPED_DELAY_LINE:
        raise ParameterError("simulate_tdl_ffr_coverage needs a tapped-delay-line mode")
    params = replace(cfg.params, threshold=cfg.params.target_sinr)
    cfg = replace(cfg, params=params, edge_rule=EDGE_RULE_SINR, theta=None)
    r_grid = np.asarray(r_grid, float)
    upper = an.coverage_curves(params, r_grid, INDEPENDENT, n_theta)["ffr"]
    lower = an.coverage_curves(params, r_grid, FULLY_CORRELATED, n_theta)["ffr"]
    rows = []
    for r, hi, lo in zip(r_grid, upper, lower):
        est = simulate(replace(cfg, radius=float(r)))["cov_ffr"]
        rows.append({"r": float(r), "estimate": est, "independent": float(hi), "correlated": float(lo)})
    return rows
