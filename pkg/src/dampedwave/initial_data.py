"""Initial positions built as finite sums of radial mollifier bumps.

A bump of amplitude a, radius R at center c takes the value
a * exp(1 - R**2 / (R**2 - |y - c|**2)) inside its ball and 0 outside, so the
peak value is exactly a and every derivative vanishes on the support boundary.
First through third derivatives are closed-form; integrals are per-bump
tensor Gauss-Legendre with a doubling refinement check.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .geometry import ConvexPolytope, hull_of_balls
from .quadrature import ball_nodes, clipped_ball_nodes, with_refinement

__all__ = [
    "SmoothBump",
    "InitialDatum",
    "make_datum",
    "load_datum",
    "integrate_f",
    "sobolev_sup_estimate",
    "unit_ball_mass",
]

Array = np.ndarray

DEFAULT_ORDER = 64


def _as_batch(x: Union[Array, Sequence[float], float], dimension: int) -> Tuple[Array, bool]:
    pts = np.asarray(x, dtype=float)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
        return pts, True
    if pts.ndim == 1:
        if dimension == 1 and pts.size != 1:
            return pts[:, None], False
        return pts[None, :], True
    return pts, False


@dataclass(frozen=True)
class SmoothBump:
    """One radial bump; center is stored as a tuple so the datum is hashable."""
    center: Tuple[float, ...]
    radius: float
    amplitude: float

    def __post_init__(self) -> None:
        if self.radius <= 0.0:
            raise ValueError("bump radius must be positive")
        if self.amplitude < 0.0:
            raise ValueError("bump amplitude must be non-negative")

    @property
    def center_array(self) -> Array:
        return np.asarray(self.center, dtype=float)

    def _shape(self, pts: Array) -> Tuple[Array, Array, Array]:
        offset = pts - self.center_array[None, :]
        w = (offset * offset).sum(axis=1)
        r2 = self.radius * self.radius
        gap = r2 - w
        inside = gap > 1e-12 * r2
        return offset, gap, inside

    def value(self, pts: Array) -> Array:
        offset, gap, inside = self._shape(pts)
        out = np.zeros(pts.shape[0])
        r2 = self.radius * self.radius
        out[inside] = self.amplitude * np.e * np.exp(-r2 / gap[inside])
        return out

    def _g_derivatives(self, gap: Array, inside: Array,
                       top: int) -> List[Array]:
        """g, g', g'', g''' of g(w) = a*e*exp(-R^2/(R^2 - w)) on the inside mask."""
        r2 = self.radius * self.radius
        g = self.amplitude * np.e * np.exp(-r2 / gap[inside])
        inv = 1.0 / gap[inside]
        out = [g]
        if top >= 1:
            out.append(-g * r2 * inv * inv)
        if top >= 2:
            out.append(g * (r2 * r2 * inv**4 - 2.0 * r2 * inv**3))
        if top >= 3:
            out.append(g * (-(r2**3) * inv**6 + 6.0 * r2 * r2 * inv**5
                            - 6.0 * r2 * inv**4))
        return out

    def gradient(self, pts: Array) -> Array:
        offset, gap, inside = self._shape(pts)
        out = np.zeros_like(pts)
        if np.any(inside):
            _, g1 = self._g_derivatives(gap, inside, 1)
            out[inside] = 2.0 * g1[:, None] * offset[inside]
        return out

    def dir2(self, pts: Array, omega: Array) -> Array:
        """(omega . grad)^2 of the bump."""
        offset, gap, inside = self._shape(pts)
        out = np.zeros(pts.shape[0])
        if np.any(inside):
            _, g1, g2 = self._g_derivatives(gap, inside, 2)
            along = offset[inside] @ np.asarray(omega, dtype=float)
            out[inside] = 2.0 * g1 + 4.0 * g2 * along * along
        return out

    def dir3(self, pts: Array, omega: Array, zeta: Array) -> Array:
        """Third derivative D^3 f[omega, omega, zeta]; zeta may vary per point."""
        offset, gap, inside = self._shape(pts)
        out = np.zeros(pts.shape[0])
        if np.any(inside):
            _, g1, g2, g3 = self._g_derivatives(gap, inside, 3)
            omega = np.asarray(omega, dtype=float)
            zeta = np.asarray(zeta, dtype=float)
            if zeta.ndim == 2:
                a_ze = (offset[inside] * zeta[inside]).sum(axis=1)
                om_ze = zeta[inside] @ omega
            else:
                a_ze = offset[inside] @ zeta
                om_ze = float(omega @ zeta)
            a_om = offset[inside] @ omega
            out[inside] = (4.0 * g2 * a_ze + 8.0 * g3 * a_ze * a_om * a_om
                           + 8.0 * g2 * om_ze * a_om)
        return out

    def hvp(self, pts: Array, vecs: Array) -> Array:
        """Hessian-vector products H(y) v(y); vecs is (n,) or one row per point."""
        offset, gap, inside = self._shape(pts)
        out = np.zeros_like(pts)
        if np.any(inside):
            _, g1, g2 = self._g_derivatives(gap, inside, 2)
            vecs = np.asarray(vecs, dtype=float)
            v = vecs[inside] if vecs.ndim == 2 else vecs[None, :]
            d = offset[inside]
            along = (d * v).sum(axis=1)
            out[inside] = 2.0 * g1[:, None] * v + 4.0 * (g2 * along)[:, None] * d
        return out

    def mass(self, dimension: int) -> float:
        return self.amplitude * self.radius**dimension * unit_ball_mass(dimension)


@lru_cache(maxsize=None)
def unit_ball_mass(dimension: int) -> float:
    """Integral of the unit-amplitude, unit-radius bump over its ball."""
    surface = 2.0 * math.pi ** (dimension / 2.0) / math.gamma(dimension / 2.0)

    def evaluate(order: int) -> Tuple[float, float]:
        from .quadrature import interval_nodes
        r, w = interval_nodes(0.0, 1.0, order)
        prof = np.zeros_like(r)
        gap = 1.0 - r * r
        ok = gap > 1e-12
        prof[ok] = np.e * np.exp(-1.0 / gap[ok])
        val = surface * float(w @ (prof * r ** (dimension - 1)))
        return val, abs(val)

    return float(with_refinement(evaluate, 128, rtol=1e-12, label="unit bump mass"))


class InitialDatum:
    """Immutable bump sum with derived geometry and integral metadata."""

    def __init__(self, bumps: Sequence[SmoothBump], dimension: int,
                 hull: Optional[ConvexPolytope]) -> None:
        if not bumps:
            raise ValueError("datum needs at least one bump")
        if not any(b.amplitude > 0.0 for b in bumps):
            raise ValueError("datum needs at least one positive amplitude")
        for b in bumps:
            if len(b.center) != dimension:
                raise ValueError(
                    f"bump center {b.center} does not match dimension {dimension}")
        self.bumps: Tuple[SmoothBump, ...] = tuple(bumps)
        self.dimension = int(dimension)
        self.hull = hull

        centers = np.array([b.center for b in self.bumps], dtype=float)
        radii = np.array([b.radius for b in self.bumps])
        pair_span = (np.linalg.norm(centers[:, None, :] - centers[None, :, :], axis=2)
                     + radii[:, None] + radii[None, :])
        self.diameter = float(pair_span.max())

        largest = int(np.argmax(radii))
        self.inradius = float(radii[largest])
        self.incenter = centers[largest].copy()

        self.bump_masses = np.array([b.mass(dimension) for b in self.bumps])
        self.mass = float(self.bump_masses.sum())
        # Each bump is radially symmetric, so its first moment sits at its center.
        self.centroid = (self.bump_masses @ centers) / self.mass
        # Clipped quadrature reaches dimension three; higher dimensions only
        # ever use the radial principal-part path and never this integral.
        self.inscribed_ball_mass = (self._half_inball_mass()
                                    if dimension <= 3 else float("nan"))

    def _half_inball_mass(self) -> float:
        def evaluate(order: int) -> Tuple[float, float]:
            total = 0.0
            for bump in self.bumps:
                pts, _, w, _ = clipped_ball_nodes(
                    self.incenter, 0.5 * self.inradius,
                    bump.center_array, bump.radius, order)
                if pts.shape[0]:
                    total += float(w @ bump.value(pts))
            return total, max(abs(total), 1e-30)

        return float(with_refinement(evaluate, DEFAULT_ORDER, rtol=1e-6,
                                     label="inscribed ball mass"))

    def value(self, x: Union[Array, float]) -> Union[Array, float]:
        pts, single = _as_batch(x, self.dimension)
        out = np.zeros(pts.shape[0])
        for bump in self.bumps:
            out += bump.value(pts)
        return float(out[0]) if single else out

    def gradient(self, x: Union[Array, float]) -> Array:
        pts, single = _as_batch(x, self.dimension)
        out = np.zeros_like(pts)
        for bump in self.bumps:
            out += bump.gradient(pts)
        return out[0] if single else out

    def dir2(self, x: Union[Array, float], omega: Array) -> Union[Array, float]:
        pts, single = _as_batch(x, self.dimension)
        out = np.zeros(pts.shape[0])
        for bump in self.bumps:
            out += bump.dir2(pts, omega)
        return float(out[0]) if single else out

    def dir3(self, x: Union[Array, float], omega: Array,
             zeta: Array) -> Union[Array, float]:
        pts, single = _as_batch(x, self.dimension)
        out = np.zeros(pts.shape[0])
        for bump in self.bumps:
            out += bump.dir3(pts, omega, zeta)
        return float(out[0]) if single else out

    def hvp(self, x: Union[Array, float], vecs: Array) -> Array:
        pts, single = _as_batch(x, self.dimension)
        out = np.zeros_like(pts)
        for bump in self.bumps:
            out += bump.hvp(pts, vecs)
        return out[0] if single else out

    def hessian(self, x: Union[Array, float]) -> Array:
        pts, single = _as_batch(x, self.dimension)
        n = self.dimension
        out = np.zeros((pts.shape[0], n, n))
        eye = np.eye(n)
        for bump in self.bumps:
            offset, gap, inside = bump._shape(pts)
            if np.any(inside):
                _, g1, g2 = bump._g_derivatives(gap, inside, 2)
                d = offset[inside]
                out[inside] += (2.0 * g1[:, None, None] * eye[None, :, :]
                                + 4.0 * g2[:, None, None] * d[:, :, None] * d[:, None, :])
        return out[0] if single else out

    def sup_norm(self) -> float:
        return sobolev_sup_estimate(self, 0)

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "bumps": [{"center": list(b.center), "radius": b.radius,
                       "amplitude": b.amplitude} for b in self.bumps],
        }


def make_datum(bumps: Sequence[SmoothBump], dimension: int) -> InitialDatum:
    """Build a datum; the hull is constructed for dimensions up to three."""
    hull = None
    if dimension in (1, 2, 3):
        centers = np.array([b.center for b in bumps], dtype=float)
        radii = [b.radius for b in bumps]
        hull = hull_of_balls(centers, radii, dimension)
    return InitialDatum(bumps, dimension, hull)


def load_datum(source: Union[str, Path, dict]) -> InitialDatum:
    """Datum from a JSON document {"dimension": n, "bumps": [...]}."""
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as handle:
            spec = json.load(handle)
    else:
        spec = source
    try:
        dimension = int(spec["dimension"])
        raw_bumps = spec["bumps"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"datum document needs 'dimension' and 'bumps': {exc}") from exc
    if dimension not in (1, 2, 3):
        raise ValueError(f"dimension must be 1, 2, or 3, got {dimension}")
    if not isinstance(raw_bumps, list) or not raw_bumps:
        raise ValueError("'bumps' must be a non-empty list")
    bumps = []
    for i, raw in enumerate(raw_bumps):
        try:
            center = raw["center"]
            if np.isscalar(center):
                center = [center]
            center = tuple(float(v) for v in center)
            bumps.append(SmoothBump(center=center, radius=float(raw["radius"]),
                                    amplitude=float(raw["amplitude"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"bump {i} is malformed: {exc}") from exc
        if len(center) != dimension:
            raise ValueError(f"bump {i} center has {len(center)} coordinates, "
                             f"expected {dimension}")
    return make_datum(bumps, dimension)


def integrate_f(datum: InitialDatum, weight: Optional[Callable[[Array], Array]] = None,
                order: int = DEFAULT_ORDER, rtol: float = 1e-6) -> Union[float, Array]:
    """Integral of f times a smooth weight over the support, per-bump rules.

    The weight receives node points of shape (m, n) and may return scalars
    (m,) or vectors (m, k). A doubling refinement check guards convergence;
    symmetric cancellations are measured against the absolute node mass.
    """

    def evaluate(o: int) -> Tuple[Union[float, Array], float]:
        total = None
        absmass = 0.0
        for bump in datum.bumps:
            pts, w = ball_nodes(bump.center_array, bump.radius,
                                datum.dimension, o)
            fw = w * bump.value(pts)
            if weight is None:
                values = np.ones(pts.shape[0])
            else:
                values = np.asarray(weight(pts), dtype=float)
            contrib = np.tensordot(fw, values, axes=(0, 0))
            total = contrib if total is None else total + contrib
            absmass = max(absmass, float(np.max(np.abs(fw) @ np.abs(
                values if values.ndim > 1 else values[:, None]))))
        scale = max(float(np.max(np.abs(total))), 1e-8 * absmass, 1e-300)
        return total, scale

    result = with_refinement(evaluate, order, rtol=rtol, label="datum integral")
    if np.ndim(result) == 0:
        return float(result)
    return result


_PROFILE_GRID = 4001


@lru_cache(maxsize=None)
def _unit_profile_derivative_sups() -> Tuple[float, ...]:
    """Sup of |d^k/dr^k| of the unit bump profile for k = 0..4.

    Orders up to two come from the closed forms; three and four from central
    differences on a dense grid, which is plenty for a diagnostic estimate.
    """
    r = np.linspace(0.0, 1.0, _PROFILE_GRID)
    gap = 1.0 - r * r
    ok = gap > 1e-12
    prof = np.zeros_like(r)
    prof[ok] = np.e * np.exp(-1.0 / gap[ok])
    g1 = np.zeros_like(r)
    g2 = np.zeros_like(r)
    g1[ok] = -prof[ok] / gap[ok] ** 2
    g2[ok] = prof[ok] * (1.0 / gap[ok] ** 4 - 2.0 / gap[ok] ** 3)
    first = 2.0 * r * g1
    second = 2.0 * g1 + 4.0 * r * r * g2
    h = r[1] - r[0]
    third = np.gradient(second, h, edge_order=2)
    fourth = np.gradient(third, h, edge_order=2)
    return (
        float(np.max(np.abs(prof))),
        float(np.max(np.abs(first))),
        float(np.max(np.abs(second))),
        float(np.max(np.abs(third))),
        float(np.max(np.abs(fourth))),
    )


def sobolev_sup_estimate(datum: InitialDatum, order: int) -> float:
    """Estimate of the W^{order,inf} norm; diagnostic only, not a certificate.

    Order zero is the exact peak for non-overlapping bumps; higher orders use
    radial-profile derivative sups scaled by amplitude / radius^k and carry a
    10 percent safety factor.
    """
    if order < 0 or order > 4:
        raise ValueError("derivative order must be between 0 and 4")
    sups = _unit_profile_derivative_sups()
    peak = max(b.amplitude for b in datum.bumps)
    if order == 0:
        return peak
    level = peak
    for k in range(1, order + 1):
        level = max(level, 1.1 * max(b.amplitude * sups[k] / b.radius**k
                                     for b in datum.bumps))
    return level
