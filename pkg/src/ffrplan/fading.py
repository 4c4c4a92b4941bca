"""Fading-power generators for the three sub-band correlation regimes.

``g``/``h`` are the serving/interfering powers on the cell-centre band F0 and
``g_hat``/``h_hat`` the powers seen after a user is moved to its edge band.
Independent and fully correlated regimes draw Exp(1) powers directly; the
tapped-delay-line regime builds one multipath realisation per link and
evaluates ``|H(f)|^2`` on a representative subcarrier of each band.
"""
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .errors import ConfigurationError, ParameterError

INDEPENDENT = "independent"
FULLY_CORRELATED = "correlated"
TAPPED_DELAY_LINE = "tdl"

LTE_BANDWIDTH_HZ = 5e6
LTE_SAMPLING_HZ = 7.68e6
LTE_FFT_SIZE = 512
LTE_USED_SUBCARRIERS = 300


@dataclass(frozen=True)
class ChannelProfile:
    name: str
    delays_ns: tuple
    powers_db: tuple
    sampling_rate: float = LTE_SAMPLING_HZ
    fft_size: int = LTE_FFT_SIZE
    bandwidth: float = LTE_BANDWIDTH_HZ

    def __post_init__(self):
        object.__setattr__(self, "delays_ns", tuple(float(x) for x in self.delays_ns))
        object.__setattr__(self, "powers_db", tuple(float(x) for x in self.powers_db))
        d = np.asarray(self.delays_ns)
        if d.size == 0:
            raise ConfigurationError(f"profile {self.name!r} has no taps")
        if d.size != len(self.powers_db):
            raise ConfigurationError(
                f"profile {self.name!r}: {d.size} delays but {len(self.powers_db)} powers"
            )
        if d[0] != 0.0 or np.any(np.diff(d) <= 0):
            raise ConfigurationError(
                f"profile {self.name!r}: delays must start at 0 and strictly increase"
            )
        if not np.all(np.isfinite(self.powers_db)):
            raise ConfigurationError(f"profile {self.name!r}: non-finite tap power")
        if self.sampling_rate <= 0 or self.fft_size <= 0:
            raise ConfigurationError("sampling rate and FFT size must be positive")
        if d[-1] * 1e-9 >= self.fft_size / self.sampling_rate:
            raise ConfigurationError(
                f"profile {self.name!r}: delay spread exceeds one OFDM symbol"
            )

    @property
    def linear_powers(self):
        p = 10.0 ** (np.asarray(self.powers_db) / 10.0)
        return p / p.sum()

    @property
    def delay_samples(self):
        """Tap delays rounded to the nearest sampling instant."""
        return np.rint(np.asarray(self.delays_ns) * 1e-9 * self.sampling_rate).astype(int)

    @property
    def subcarrier_spacing(self):
        return self.sampling_rate / self.fft_size

    def discrete_taps(self):
        """(sample_delays, powers) with taps that round onto the same sample merged."""
        n = self.delay_samples
        p = self.linear_powers
        uniq = np.unique(n)
        merged = np.array([p[n == k].sum() for k in uniq])
        return uniq, merged

    def to_dict(self):
        return {
            "name": self.name,
            "delays_ns": list(self.delays_ns),
            "powers_db": list(self.powers_db),
        }

    @classmethod
    def from_dict(cls, doc):
        try:
            return cls(
                name=str(doc["name"]),
                delays_ns=doc["delays_ns"],
                powers_db=doc["powers_db"],
                sampling_rate=float(doc.get("sampling_rate_hz", LTE_SAMPLING_HZ)),
                fft_size=int(doc.get("fft_size", LTE_FFT_SIZE)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"bad channel profile document: {exc}") from exc


def load_profile(path):
    with open(Path(path), encoding="utf-8") as fh:
        return ChannelProfile.from_dict(json.load(fh))


PED_A = ChannelProfile("pedA", (0, 110, 190, 410), (0.0, -9.7, -19.2, -22.8))
VEH_A = ChannelProfile(
    "vehA", (0, 310, 710, 1090, 1730, 2510), (0.0, -1.0, -9.0, -10.0, -15.0, -20.0)
)
BUILTIN_PROFILES = {"peda": PED_A, "veha": VEH_A}


def get_profile(name):
    key = str(name).lower().replace("-", "").replace("_", "")
    if key in BUILTIN_PROFILES:
        return BUILTIN_PROFILES[key]
    path = Path(name)
    if path.suffix == ".json" and path.exists():
        return load_profile(path)
    raise ConfigurationError(f"unknown channel profile {name!r}")


@dataclass(frozen=True)
class SubbandPlan:
    """Subcarrier indices (relative to DC) of the centre band and three edge bands.

    Default: 300 used subcarriers ``-150..-1, 1..150``; F0 is the lower half,
    F1/F2/F3 split the upper half into 50-subcarrier blocks.
    """

    centre_band: tuple = tuple(range(-150, 0))
    edge_bands: tuple = (tuple(range(1, 51)), tuple(range(51, 101)), tuple(range(101, 151)))
    fft_size: int = LTE_FFT_SIZE
    used_subcarriers: int = LTE_USED_SUBCARRIERS
    serving_edge_band: int = 0
    centre_subcarrier: int | None = None
    edge_subcarrier: int | None = None

    def __post_init__(self):
        bands = [set(self.centre_band)] + [set(b) for b in self.edge_bands]
        if len(self.edge_bands) != 3:
            raise ConfigurationError("exactly three edge bands are required")
        if any(len(b) == 0 for b in bands):
            raise ConfigurationError("sub-bands must be non-empty")
        if len({len(b) for b in self.edge_bands}) != 1:
            raise ConfigurationError("edge bands F1/F2/F3 must have equal size")
        seen = set()
        for b in bands:
            if seen & b:
                raise ConfigurationError("sub-bands overlap")
            seen |= b
        half = self.used_subcarriers // 2
        if any(k == 0 or abs(k) > half for k in seen):
            raise ConfigurationError("sub-band uses DC or an unused subcarrier")
        if not 0 <= self.serving_edge_band < 3:
            raise ConfigurationError("serving_edge_band must be 0, 1 or 2")
        if self.centre_subcarrier is not None and self.centre_subcarrier not in bands[0]:
            raise ConfigurationError("centre_subcarrier is not inside F0")
        edge = bands[1 + self.serving_edge_band]
        if self.edge_subcarrier is not None and self.edge_subcarrier not in edge:
            raise ConfigurationError("edge_subcarrier is not inside the serving edge band")

    @staticmethod
    def _middle(band):
        band = sorted(band)
        return band[len(band) // 2]

    @property
    def representative_subcarriers(self):
        """(F0 subcarrier, serving edge-band subcarrier); band centres by default."""
        k0 = self.centre_subcarrier
        if k0 is None:
            k0 = self._middle(self.centre_band)
        k1 = self.edge_subcarrier
        if k1 is None:
            k1 = self._middle(self.edge_bands[self.serving_edge_band])
        return int(k0), int(k1)


DEFAULT_PLAN = SubbandPlan()


@dataclass(frozen=True)
class CorrelationMode:
    kind: str = INDEPENDENT
    profile: ChannelProfile | None = None
    plan: SubbandPlan = field(default=DEFAULT_PLAN)

    def __post_init__(self):
        if self.kind not in (INDEPENDENT, FULLY_CORRELATED, TAPPED_DELAY_LINE):
            raise ConfigurationError(f"unknown correlation mode {self.kind!r}")
        if (self.kind == TAPPED_DELAY_LINE) != (self.profile is not None):
            raise ConfigurationError("a channel profile is required for (and only for) TDL mode")

    @classmethod
    def independent(cls):
        return cls(INDEPENDENT)

    @classmethod
    def fully_correlated(cls):
        return cls(FULLY_CORRELATED)

    @classmethod
    def tapped_delay_line(cls, profile, plan=DEFAULT_PLAN):
        if isinstance(profile, str):
            profile = get_profile(profile)
        return cls(TAPPED_DELAY_LINE, profile, plan)

    @classmethod
    def parse(cls, text):
        key = str(text).lower()
        if key in ("independent", "ind", "uncorrelated"):
            return cls.independent()
        if key in ("correlated", "fully_correlated", "fullycorrelated", "cor"):
            return cls.fully_correlated()
        return cls.tapped_delay_line(get_profile(text))

    @property
    def label(self):
        return self.profile.name if self.kind == TAPPED_DELAY_LINE else self.kind

    def tap_phasors(self):
        """``exp(-j 2 pi k n_l / N)`` for the (F0, edge) representative subcarriers."""
        delays, _ = self.profile.discrete_taps()
        ks = np.array(self.plan.representative_subcarriers)
        n_fft = self.profile.fft_size
        return np.exp(-2j * np.pi * np.outer(delays, ks) / n_fft)


def subband_correlation(profile, f1, f2):
    """Correlation coefficient of ``|H(f1)|^2`` and ``|H(f2)|^2`` under Rayleigh taps.

    For jointly circular Gaussian ``H`` the power correlation equals
    ``|sum_l p_l exp(-j 2 pi (f1 - f2) tau_l)|^2`` with the discretised delays.
    Frequencies are offsets from the carrier in Hz.
    """
    lim = profile.bandwidth / 2
    for f in (f1, f2):
        if not np.isfinite(f) or abs(f) > lim:
            raise ParameterError(f"frequency offset {f} Hz outside +/-{lim} Hz")
    delays, powers = profile.discrete_taps()
    tau = delays / profile.sampling_rate
    rho = np.sum(powers * np.exp(-2j * np.pi * (f1 - f2) * tau))
    return float(min(1.0, abs(rho) ** 2))


def draw_powers(mode, n_interferers, rng, size=None, rng_edge=None):
    """Draw ``(g, g_hat, h, h_hat)``.

    ``g``/``g_hat`` have shape ``size`` (scalar draw when ``size`` is None),
    ``h``/``h_hat`` shape ``size + (n_interferers,)``. In independent mode the
    edge-band powers come from ``rng_edge`` when given so centre-band draws are
    identical across modes for the same stream.
    """
    if n_interferers < 0:
        raise ParameterError("n_interferers must be >= 0")
    shape = () if size is None else tuple(np.atleast_1d(size))
    if mode.kind == TAPPED_DELAY_LINE:
        return _draw_tdl(mode, n_interferers, rng, shape)
    g = rng.standard_exponential(shape)
    h = rng.standard_exponential(shape + (n_interferers,))
    if mode.kind == FULLY_CORRELATED:
        return g, g, h, h
    src = rng if rng_edge is None else rng_edge
    g_hat = src.standard_exponential(shape)
    h_hat = src.standard_exponential(shape + (n_interferers,))
    return g, g_hat, h, h_hat


def _draw_tdl(mode, n_interferers, rng, shape):
    _, powers = mode.profile.discrete_taps()
    n_links = n_interferers + 1
    count = int(np.prod(shape, dtype=int)) * n_links
    scale = np.sqrt(powers / 2.0)
    taps = (rng.standard_normal((count, powers.size)) + 1j * rng.standard_normal((count, powers.size))) * scale
    band = kernels.tdl_band_powers(taps, mode.tap_phasors())
    band = band.reshape(shape + (n_links, 2))
    g = band[..., 0, 0]
    g_hat = band[..., 0, 1]
    h = band[..., 1:, 0]
    h_hat = band[..., 1:, 1]
    return g, g_hat, h, h_hat
