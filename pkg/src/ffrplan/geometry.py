"""Two-tier hexagonal layout and user-to-interferer distances.

The serving base station sits at the origin. Neighbouring sites lie on a
triangular lattice with inter-site distance ``2R`` where ``R`` is the cell
inradius. The reuse-1 interferer set is every site of the first two tiers
(18 sites); the reuse-3 co-channel set is the six second-tier "corner" sites
at ``2*sqrt(3)*R``.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

FR1 = "fr1"
FR3 = "fr3"

_SQRT3 = np.sqrt(3.0)


@dataclass(frozen=True, eq=False)
class NetworkLayout:
    cell_radius: float
    fr1_interferers: np.ndarray = field(repr=False)
    fr3_interferers: np.ndarray = field(repr=False)
    # rotational symmetry order; spatial averages only integrate one sector
    symmetry_order: int = 6

    @property
    def sector(self):
        return 2 * np.pi / self.symmetry_order

    def interferers(self, which):
        which = _check_set(which)
        return self.fr1_interferers if which == FR1 else self.fr3_interferers

    @property
    def fr3_index(self):
        """Positions of the FR3 sites inside ``fr1_interferers``."""
        d = np.linalg.norm(
            self.fr1_interferers[:, None, :] - self.fr3_interferers[None, :, :], axis=-1
        )
        return np.argmin(d, axis=0)


@dataclass(frozen=True)
class UserPosition:
    r: float
    theta: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.r) or self.r < 0:
            raise ParameterError(f"user radius must be >= 0, got {self.r}")
        if not np.isfinite(self.theta):
            raise ParameterError("user angle must be finite")

    @property
    def xy(self):
        return np.array([self.r * np.cos(self.theta), self.r * np.sin(self.theta)])

    def check_inside(self, layout):
        # small slack so r == R computed in floating point is accepted
        if self.r > layout.cell_radius * (1 + 1e-12):
            raise ParameterError(
                f"user radius {self.r} exceeds cell radius {layout.cell_radius}"
            )


def _check_set(which):
    which = str(which).lower()
    if which not in (FR1, FR3):
        raise ParameterError(f"interferer set must be 'fr1' or 'fr3', got {which!r}")
    return which


def _lattice_sites(R, max_ring):
    """All lattice sites within ``max_ring`` hops, sorted by (distance, angle)."""
    a1 = np.array([2 * R, 0.0])
    a2 = np.array([R, _SQRT3 * R])
    pts = []
    for i in range(-max_ring, max_ring + 1):
        for j in range(-max_ring, max_ring + 1):
            # hex distance on the axial grid
            if max(abs(i), abs(j), abs(i + j)) > max_ring or (i == 0 and j == 0):
                continue
            pts.append(i * a1 + j * a2)
    pts = np.array(pts)
    dist = np.round(np.hypot(pts[:, 0], pts[:, 1]) / R, 9)
    ang = np.round(np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2 * np.pi), 9)
    order = np.lexsort((ang, dist))
    return pts[order]


def build_layout(R):
    """Serving cell at the origin plus its two tiers of neighbours."""
    R = float(R)
    if not np.isfinite(R) or R <= 0:
        raise ParameterError(f"cell radius must be positive, got {R}")
    sites = _lattice_sites(R, 2)
    d = np.hypot(sites[:, 0], sites[:, 1])
    fr3 = sites[np.isclose(d, 2 * _SQRT3 * R)]
    return NetworkLayout(
        cell_radius=R,
        fr1_interferers=sites.copy(),
        fr3_interferers=fr3.copy(),
    )


def custom_layout(R, fr1_interferers, fr3_interferers):
    """Layout from explicit coordinates; used for reduced/degenerate test setups."""
    R = float(R)
    if R <= 0:
        raise ParameterError(f"cell radius must be positive, got {R}")
    fr1 = np.atleast_2d(np.asarray(fr1_interferers, dtype=float)).reshape(-1, 2)
    fr3 = np.atleast_2d(np.asarray(fr3_interferers, dtype=float)).reshape(-1, 2)
    for pts in (fr1, fr3):
        if pts.size and np.any(np.hypot(pts[:, 0], pts[:, 1]) <= R):
            raise ParameterError("interferers must lie outside the serving cell")
    return NetworkLayout(cell_radius=R, fr1_interferers=fr1, fr3_interferers=fr3, symmetry_order=1)


def interferer_distances(layout, user, which=FR1):
    user.check_inside(layout)
    pts = layout.interferers(which)
    return np.hypot(pts[:, 0] - user.xy[0], pts[:, 1] - user.xy[1])


def distances(layout, r, theta, which=FR1):
    """Vectorised distances, shape ``broadcast(r, theta).shape + (n_interferers,)``."""
    r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
    pts = layout.interferers(which)
    x = (r * np.cos(theta))[..., None]
    y = (r * np.sin(theta))[..., None]
    return np.hypot(x - pts[:, 0], y - pts[:, 1])


def path_loss_ratios(layout, r, theta, alpha, which=FR1):
    """``(r / d_i) ** alpha`` i.e. the ``r^alpha d_i^-alpha`` factor of every link."""
    r_arr = np.asarray(r, float)
    d = distances(layout, r_arr, theta, which)
    rb = np.broadcast_to(r_arr, d.shape[:-1])[..., None]
    return (rb / d) ** alpha
