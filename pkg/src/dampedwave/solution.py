"""Closed-form evaluation of the damped wave field u, split into a diffusive
principal part and an exponentially damped wave remainder.

For initial state (f, -f) the solution in dimensions one to three is a kernel
integral over B_t(x) (the principal part) plus sphere or wave-weighted ball
integrals of f and grad f (the remainder). Everything is evaluated through
the overflow-free scaled kernels; the only exponential ever formed is
exp(-t/2) multiplying polynomially sized quantities.

Gradients and second directional derivatives are the displayed derivative
formulas: one kernel order higher inside the ball integral, plus boundary
sphere terms (odd dimensions) or wave-weighted moment terms (even dimensions,
where the radial kernel derivative carries a 1/sqrt(t^2 - r^2) factor).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np

from .geometry import fibonacci_sphere
from .initial_data import InitialDatum, SmoothBump
from .kernels import kernel_at_zero, kernel_deriv_at_zero, kernel_ktilde_scaled
from .quadrature import (ball_nodes, clipped_ball_nodes, gauss_legendre,
                         interval_nodes, sphere_cap_nodes, with_refinement)

__all__ = [
    "DimensionConstants",
    "FieldSample",
    "dimension_constants",
    "eval_u",
    "eval_grad_u",
    "eval_dir2_u",
    "eval_principal_general_n",
    "heat_eval",
    "error_decay_diagnostic",
    "wave_factor",
]

Array = np.ndarray

DEFAULT_ORDER = 64


@dataclass(frozen=True)
class DimensionConstants:
    """Normalization constants and kernel order for one spatial dimension."""
    n: int
    parity: str
    ell: int
    gamma: float
    c: float


def dimension_constants(n: int) -> DimensionConstants:
    if n % 2 == 1:
        gamma = 2.0 ** (-(3 * n - 1) / 2.0) * math.pi ** (-(n - 1) / 2.0)
        return DimensionConstants(n, "odd", (n - 1) // 2, gamma, gamma * 2.0 ** (n - 1))
    gamma = 2.0 ** (-(3 * n - 2) / 2.0) * math.pi ** (-n / 2.0)
    return DimensionConstants(n, "even", n // 2, gamma, gamma * 2.0 ** (n - 2))


def wave_factor(t: float) -> float:
    """exp(-t/2); underflows to zero for very large t, which is the point."""
    return math.exp(-0.5 * t) if t < 1400.0 else 0.0


@dataclass(frozen=True)
class FieldSample:
    x: Array
    t: float
    value: float
    principal: float
    wave_remainder: float
    gradient: Optional[Array] = None
    dir2: Optional[Dict[Tuple[float, ...], float]] = None


def _as_point(x: Union[Array, float], dimension: int) -> Array:
    pt = np.atleast_1d(np.asarray(x, dtype=float))
    if pt.size != dimension:
        raise ValueError(f"point has {pt.size} coordinates, expected {dimension}")
    return pt


def _bump_nodes(datum: InitialDatum, x: Array, t: float,
                order: int) -> Iterable[Tuple[SmoothBump, Array, Array, Array, Array]]:
    for bump in datum.bumps:
        pts, rad, w, rim = clipped_ball_nodes(x, t, bump.center_array,
                                              bump.radius, order)
        if pts.shape[0]:
            yield bump, pts, rad, w, rim


def _sphere_terms(datum: InitialDatum, x: Array, t: float,
                  order: int) -> Iterable[Tuple[SmoothBump, Array, Array, Array]]:
    """Per-bump cap nodes on the radius-t sphere: (bump, points, dirs, w)."""
    for bump in datum.bumps:
        dirs, w = sphere_cap_nodes(x, t, bump.center_array, bump.radius, order)
        if dirs.shape[0]:
            yield bump, x[None, :] + t * dirs, dirs, w


def _field_parts(datum: InitialDatum, x: Array, t: float,
                 order: int) -> Tuple[float, float, float]:
    """(principal, wave_raw, scale): wave_raw omits the exp(-t/2) factor."""
    dc = dimension_constants(datum.dimension)
    quarter_gamma = 0.25 * dc.gamma
    principal = 0.0
    absacc = 0.0
    v_plain = 0.0
    v_rate = 0.0
    for bump, pts, rad, w, rim in _bump_nodes(datum, x, t, order):
        kern = kernel_ktilde_scaled(dc.parity, dc.ell, rad, t)
        fv = bump.value(pts)
        contrib = w * kern * fv
        principal += quarter_gamma * float(contrib.sum())
        absacc += quarter_gamma * float(np.abs(contrib).sum())
        if datum.dimension == 2:
            wave_w = w * fv / rim
            v_plain += float(wave_w.sum())
            v_rate += float((w / rim) @ (((pts - x) * bump.gradient(pts)).sum(axis=1)))

    n = datum.dimension
    if n == 1:
        wave_raw = 0.5 * (datum.value(x + t) + datum.value(x - t))
    elif n == 2:
        v_plain /= t * t
        v_rate /= t ** 3
        wave_raw = dc.gamma * ((0.25 * t * t - t + 2.0) * v_plain + 2.0 * t * v_rate)
    elif n == 3:
        mean_f = 0.0
        mean_df = 0.0
        for bump, pts, dirs, w in _sphere_terms(datum, x, t, order):
            mean_f += float(w @ bump.value(pts))
            mean_df += float(w @ (dirs * bump.gradient(pts)).sum(axis=1))
        wave_raw = dc.gamma * ((0.5 * t * t - 2.0 * t + 4.0) * mean_f
                               + 4.0 * t * mean_df)
    else:
        raise ValueError(f"full field evaluation supports dimensions 1-3, got {n}")
    scale = max(abs(principal), abs(wave_raw) * wave_factor(t), 1e-9 * absacc, 1e-300)
    return principal, wave_raw, scale


def eval_u(datum: InitialDatum, x: Union[Array, float], t: float,
           order: int = DEFAULT_ORDER, check: bool = False) -> FieldSample:
    """Field sample at (x, t); value = principal + wave_remainder exactly."""
    if t <= 0.0:
        raise ValueError("t must be positive")
    pt = _as_point(x, datum.dimension)
    if check:
        def evaluate(o: int) -> Tuple[Array, float]:
            p, wraw, scale = _field_parts(datum, pt, t, o)
            return np.array([p, wraw * wave_factor(t)]), scale
        principal, wave = with_refinement(evaluate, order, label="field value")
        principal, wave = float(principal), float(wave)
    else:
        p, wraw, _ = _field_parts(datum, pt, t, order)
        principal, wave = p, wraw * wave_factor(t)
    return FieldSample(x=pt, t=t, value=principal + wave, principal=principal,
                       wave_remainder=wave)


def _grad_parts(datum: InitialDatum, x: Array, t: float,
                order: int) -> Tuple[Array, Array, float]:
    """(principal gradient, raw wave gradient, scale)."""
    dc = dimension_constants(datum.dimension)
    n = datum.dimension
    damp = wave_factor(t)
    grad_p = np.zeros(n)
    absacc = 0.0
    if dc.parity == "even":
        beta1 = (t * kernel_deriv_at_zero("even", dc.ell + 1)
                 - 2.0 * kernel_deriv_at_zero("even", dc.ell))
    a_w = np.zeros(n)
    b_w = np.zeros(n)
    for bump, pts, rad, w, rim in _bump_nodes(datum, x, t, order):
        kern = kernel_ktilde_scaled(dc.parity, dc.ell + 1, rad, t)
        fv = bump.value(pts)
        moment = (x[None, :] - pts)
        core = (w * kern * fv) @ moment
        grad_p += -(dc.gamma / 16.0) * core
        absacc += (dc.gamma / 16.0) * float(np.abs(w * kern * fv) @ np.abs(moment).max(axis=1))
        if dc.parity == "even":
            s = 0.5 * t * rim
            grad_p += -(dc.gamma / 16.0) * damp * beta1 * ((w * fv / s) @ moment)
        if n == 2:
            gradf = bump.gradient(pts)
            a_w += (w / rim) @ gradf
            b_w += (w / rim) @ bump.hvp(pts, pts - x)
    if dc.parity == "odd":
        # Boundary sphere term; the even-family kernel vanishes at s = 0.
        coef = (t * kernel_at_zero("odd", dc.ell + 1)
                - 2.0 * kernel_at_zero("odd", dc.ell))
        if n == 1:
            boundary = (datum.value(x + t) - datum.value(x - t)) * np.ones(1)
        else:
            boundary = np.zeros(n)
            for bump, pts, dirs, w in _sphere_terms(datum, x, t, order):
                boundary += (w * bump.value(pts)) @ dirs
            boundary *= t ** (n - 1)
        grad_p += 0.25 * dc.gamma * damp * coef * boundary

    if n == 1:
        grad_w = 0.5 * (datum.gradient(x + t) + datum.gradient(x - t))
    elif n == 2:
        a_w /= t * t
        b_w /= t ** 3
        grad_w = dc.gamma * ((0.25 * t * t - t + 2.0) * a_w + 2.0 * t * b_w)
    else:
        mean_grad = np.zeros(3)
        mean_hvp = np.zeros(3)
        for bump, pts, dirs, w in _sphere_terms(datum, x, t, order):
            mean_grad += w @ bump.gradient(pts)
            mean_hvp += w @ bump.hvp(pts, dirs)
        grad_w = dc.gamma * ((0.5 * t * t - 2.0 * t + 4.0) * mean_grad
                             + 4.0 * t * mean_hvp)
    scale = max(float(np.max(np.abs(grad_p))), damp * float(np.max(np.abs(grad_w))),
                1e-9 * absacc, 1e-300)
    return grad_p, grad_w, scale


def eval_grad_u(datum: InitialDatum, x: Union[Array, float], t: float,
                order: int = DEFAULT_ORDER, check: bool = False) -> Array:
    if t <= 0.0:
        raise ValueError("t must be positive")
    pt = _as_point(x, datum.dimension)
    if check:
        def evaluate(o: int) -> Tuple[Array, float]:
            gp, gw, scale = _grad_parts(datum, pt, t, o)
            return gp + wave_factor(t) * gw, scale
        return np.asarray(with_refinement(evaluate, order, label="field gradient"),
                          dtype=float)
    gp, gw, _ = _grad_parts(datum, pt, t, order)
    return gp + wave_factor(t) * gw


def _dir2_parts(datum: InitialDatum, x: Array, t: float, omega: Array,
                order: int) -> Tuple[float, float, float]:
    dc = dimension_constants(datum.dimension)
    n = datum.dimension
    damp = wave_factor(t)
    val_p = 0.0
    absacc = 0.0
    if dc.parity == "even":
        beta2 = (t * kernel_deriv_at_zero("even", dc.ell + 2)
                 - 2.0 * kernel_deriv_at_zero("even", dc.ell + 1))
        beta1 = (t * kernel_deriv_at_zero("even", dc.ell + 1)
                 - 2.0 * kernel_deriv_at_zero("even", dc.ell))
    a_w = 0.0
    b_w = 0.0
    for bump, pts, rad, w, rim in _bump_nodes(datum, x, t, order):
        fv = bump.value(pts)
        along = (x[None, :] - pts) @ omega
        k2 = kernel_ktilde_scaled(dc.parity, dc.ell + 2, rad, t)
        k1 = kernel_ktilde_scaled(dc.parity, dc.ell + 1, rad, t)
        term = (dc.gamma / 64.0) * float((w * fv * k2) @ (along * along))
        term -= (dc.gamma / 16.0) * float((w * fv * k1).sum())
        absacc += (dc.gamma / 64.0) * float(np.abs(w * fv * k2) @ (along * along))
        absacc += (dc.gamma / 16.0) * float(np.abs(w * fv * k1).sum())
        if dc.parity == "even":
            s = 0.5 * t * rim
            term += (dc.gamma / 64.0) * damp * beta2 * float(
                (w * fv / s) @ (along * along))
            term += -(dc.gamma / 16.0) * damp * beta1 * float(
                (w / s) @ (along * (bump.gradient(pts) @ omega)))
        val_p += term
        if n == 2:
            zeta = (pts - x) / t
            a_w += float((w / rim) @ bump.dir2(pts, omega))
            b_w += float((w / rim) @ bump.dir3(pts, omega, zeta))
    if dc.parity == "odd":
        coef1 = (t * kernel_at_zero("odd", dc.ell + 1)
                 - 2.0 * kernel_at_zero("odd", dc.ell))
        coef2 = (t * kernel_at_zero("odd", dc.ell + 2)
                 - 2.0 * kernel_at_zero("odd", dc.ell + 1))
        if n == 1:
            sq = datum.value(x + t) + datum.value(x - t)
            mixed = float(datum.gradient(x + t)[0] - datum.gradient(x - t)[0])
            val_p += (dc.gamma / 16.0) * damp * coef2 * t * sq
            val_p += 0.25 * dc.gamma * damp * coef1 * mixed
        else:
            sq = 0.0
            mixed = 0.0
            for bump, pts, dirs, w in _sphere_terms(datum, x, t, order):
                proj = dirs @ omega
                sq += float((w * proj * proj) @ bump.value(pts))
                mixed += float((w * proj) @ (bump.gradient(pts) @ omega))
            val_p += (dc.gamma / 16.0) * damp * coef2 * t ** n * sq
            val_p += 0.25 * dc.gamma * damp * coef1 * t ** (n - 1) * mixed

    if n == 1:
        wave_raw = 0.5 * (datum.dir2(x + t, omega) + datum.dir2(x - t, omega))
    elif n == 2:
        a_w /= t * t
        b_w /= t * t
        wave_raw = dc.gamma * ((0.25 * t * t - t + 2.0) * a_w + 2.0 * t * b_w)
    else:
        mean_d2 = 0.0
        mean_d3 = 0.0
        for bump, pts, dirs, w in _sphere_terms(datum, x, t, order):
            mean_d2 += float(w @ bump.dir2(pts, omega))
            mean_d3 += float(w @ bump.dir3(pts, omega, dirs))
        wave_raw = dc.gamma * ((0.5 * t * t - 2.0 * t + 4.0) * mean_d2
                               + 4.0 * t * mean_d3)
    scale = max(abs(val_p), damp * abs(wave_raw), 1e-9 * absacc, 1e-300)
    return val_p, wave_raw, scale


def eval_dir2_u(datum: InitialDatum, x: Union[Array, float], t: float,
                omega: Array, order: int = DEFAULT_ORDER,
                check: bool = False) -> float:
    """(omega . grad)^2 u at (x, t) for a unit direction omega."""
    if t <= 0.0:
        raise ValueError("t must be positive")
    pt = _as_point(x, datum.dimension)
    om = np.atleast_1d(np.asarray(omega, dtype=float))
    norm = float(np.linalg.norm(om))
    if abs(norm - 1.0) > 1e-12:
        om = om / norm
    if check:
        def evaluate(o: int) -> Tuple[float, float]:
            vp, wraw, scale = _dir2_parts(datum, pt, t, om, o)
            return vp + wave_factor(t) * wraw, scale
        return float(with_refinement(evaluate, order, label="directional second derivative"))
    vp, wraw, _ = _dir2_parts(datum, pt, t, om, order)
    return vp + wave_factor(t) * wraw


def _bump_profile(bump: SmoothBump, rho: Array) -> Array:
    r2 = bump.radius * bump.radius
    gap = r2 - rho * rho
    ok = gap > 1e-12 * r2
    out = np.zeros_like(rho)
    out[ok] = bump.amplitude * np.e * np.exp(-r2 / gap[ok])
    return out


def eval_principal_general_n(datum: InitialDatum, x: Union[Array, float], t: float,
                             order: int = DEFAULT_ORDER,
                             check: bool = False) -> float:
    """Principal part alone, valid in any spatial dimension.

    For a single radial bump in dimension two and up the ball integral
    collapses to a radial/angular double quadrature around the bump center.
    Multi-bump data and dimension one delegate to the full evaluator, which
    only reaches dimension three.
    """
    pt = _as_point(x, datum.dimension)
    n = datum.dimension
    if len(datum.bumps) != 1 or n == 1:
        if n > 3:
            raise ValueError("dimensions above three support a single radial bump only")
        if check:
            def evaluate_low(o: int) -> Tuple[float, float]:
                p, _, scale = _field_parts(datum, pt, t, o)
                return p, scale
            return float(with_refinement(evaluate_low, order, label="principal value"))
        return _field_parts(datum, pt, t, order)[0]
    bump = datum.bumps[0]
    dc = dimension_constants(n)
    center = bump.center_array
    dist = float(np.linalg.norm(pt - center))
    sphere_nm2 = 2.0 * math.pi ** ((n - 1) / 2.0) / math.gamma((n - 1) / 2.0)

    def evaluate(o: int) -> Tuple[float, float]:
        r_lo = max(dist - bump.radius, 0.0)
        r_hi = min(dist + bump.radius, t)
        if r_hi <= r_lo:
            return 0.0, 1e-300
        phi, wphi = interval_nodes(math.asin(min(r_lo / t, 1.0)),
                                   math.asin(min(r_hi / t, 1.0)), o)
        rad = t * np.sin(phi)
        jac = t * np.cos(phi) * rad ** (n - 1)
        kern = kernel_ktilde_scaled(dc.parity, dc.ell, rad, t)
        if dist < 1e-14:
            shell = 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)
            mean = shell * _bump_profile(bump, rad)
        else:
            base, wbase = gauss_legendre(o)
            cos_cut = (bump.radius ** 2 - dist * dist - rad * rad) / (2.0 * dist * rad)
            theta_lo = np.arccos(np.clip(cos_cut, -1.0, 1.0))
            half = 0.5 * (math.pi - theta_lo)
            theta = theta_lo[:, None] + half[:, None] * (base[None, :] + 1.0)
            wtheta = half[:, None] * wbase[None, :]
            rho = np.sqrt(np.maximum(
                dist * dist + rad[:, None] ** 2
                + 2.0 * dist * rad[:, None] * np.cos(theta), 0.0))
            mean = sphere_nm2 * (wtheta * np.sin(theta) ** (n - 2)
                                 * _bump_profile(bump, rho)).sum(axis=1)
        integral = float((wphi * jac * kern) @ mean)
        val = 0.25 * dc.gamma * integral
        ref = 0.25 * dc.gamma * float((wphi * jac * np.abs(kern)) @ np.abs(mean))
        return val, max(abs(val), 1e-9 * ref, 1e-300)

    if check:
        return float(with_refinement(evaluate, order, label="general-n principal"))
    return evaluate(order)[0]


def heat_eval(datum: InitialDatum, x: Union[Array, float], t: float,
              order: int = DEFAULT_ORDER, check: bool = False) -> float:
    """Gaussian-kernel smoothing of the datum at time t."""
    if t <= 0.0:
        raise ValueError("t must be positive")
    pt = _as_point(x, datum.dimension)
    n = datum.dimension
    norm = (4.0 * math.pi * t) ** (-n / 2.0)

    def evaluate(o: int) -> Tuple[float, float]:
        total = 0.0
        for bump in datum.bumps:
            pts, w = ball_nodes(bump.center_array, bump.radius, n, o)
            gap = pts - pt[None, :]
            kern = np.exp(-(gap * gap).sum(axis=1) / (4.0 * t))
            total += norm * float((w * kern) @ bump.value(pts))
        return total, max(abs(total), 1e-300)

    if check:
        return float(with_refinement(evaluate, order, label="heat value"))
    return evaluate(order)[0]


def _diagnostic_points(datum: InitialDatum, t: float) -> Array:
    """Rays from the centroid: a coarse cone fill plus a fine light-cone shell."""
    n = datum.dimension
    if n == 1:
        dirs = np.array([[1.0], [-1.0]])
    elif n == 2:
        ang = np.arange(8) * (math.pi / 4.0)
        dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    else:
        dirs = fibonacci_sphere(8)
    span = datum.diameter + 2.0
    radii = np.concatenate([
        np.linspace(0.0, span, 10),
        np.clip(t + np.linspace(-span, span, 15), 0.0, None),
    ])
    pts = (datum.centroid[None, None, :]
           + radii[None, :, None] * dirs[:, None, :]).reshape(-1, n)
    return np.unique(pts, axis=0)


def error_decay_diagnostic(datum: InitialDatum, t_values: List[float],
                           gradient: bool = False,
                           order: int = 32) -> List[Tuple[float, float]]:
    """Sup over a cone-adapted grid of the normalized wave remainder.

    Reported quantity: sup |E(u)| * exp(t/2) * (1+t)^(-n), computed from the
    raw (un-damped) wave part so no large exponentials are ever formed. With
    gradient=True the same for |grad E(u)| and exponent n + 1.
    """
    n = datum.dimension
    rows: List[Tuple[float, float]] = []
    for t in t_values:
        top = 0.0
        for pt in _diagnostic_points(datum, t):
            if gradient:
                _, raw, _ = _grad_parts(datum, pt, t, order)
                mag = float(np.max(np.abs(raw)))
                top = max(top, mag / (1.0 + t) ** (n + 1))
            else:
                _, raw, _ = _field_parts(datum, pt, t, order)
                top = max(top, abs(raw) / (1.0 + t) ** n)
        rows.append((t, top))
    return rows
