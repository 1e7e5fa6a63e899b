"""Magnetic fields, their Landau-gauge potentials, fluxes and scalar potentials.

Field profiles are radial and supported in the ball of radius ``c``:

* ``"zero"``: no field;
* ``"disk"``: ``B0`` on the open disk ``|z| < c``;
* ``"bump"``: ``B0 exp(1 - 1/(1 - r^2/c^2))``, smooth.

The Landau gauge is ``A(x, y) = (-int_0^y B(x, t) dt, 0)``, which vanishes
identically for ``|x| >= c``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .geometry import StripSpec, rotate_point, signed_distance, signed_line_distance, slice_scan, curve_samples

__all__ = [
    "QuadratureError",
    "FieldSpec",
    "Profile1D",
    "adaptive_simpson",
    "field_eval",
    "landau_potential",
    "landau_potential_adaptive",
    "flux",
    "potential_eval",
    "rotated_potential_A",
    "rotated_potential_V",
    "variation_norm",
    "square_well",
    "trapezoid_well",
    "smooth_well",
]

FIELD_KINDS = ("zero", "disk", "bump")
PROFILE_KINDS = ("square", "table", "smooth")


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class FieldSpec:
    kind: str = "zero"
    B0: float = 0.0
    c: float = 1.0

    def __post_init__(self):
        if self.kind not in FIELD_KINDS:
            raise ValueError(f"unknown field kind {self.kind!r}; expected one of {FIELD_KINDS}")
        if not self.c > 0:
            raise ValueError("field support radius must be positive")

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or self.B0 == 0.0

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        if self.is_zero:
            return out
        inside = r < self.c
        if self.kind == "disk":
            out[inside] = self.B0
        else:
            s = 1.0 - (r[inside] / self.c) ** 2
            out[inside] = self.B0 * np.exp(1.0 - 1.0 / s)
        return out


def field_eval(field: FieldSpec, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = field.radial(np.hypot(x, y))
    return float(out) if out.ndim == 0 else out


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-10, max_depth: int = 60):
    """Adaptive Simpson quadrature of a scalar function with Richardson correction."""
    if a == b:
        return 0.0

    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = simpson(fa, fm, fb, a, b)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    total = 0.0
    while stack:
        a, b, fa, fm, fb, whole, eps, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        diff = left + right - whole
        if abs(diff) <= 15.0 * eps or abs(b - a) < 1e-15:
            total += left + right + diff / 15.0
        elif depth >= max_depth:
            raise QuadratureError(f"adaptive Simpson did not converge on [{a}, {b}]")
        else:
            stack.append((a, m, fa, flm, fm, left, eps / 2.0, depth + 1))
            stack.append((m, b, fm, frm, fb, right, eps / 2.0, depth + 1))
    return total


@lru_cache(maxsize=None)
def _gauss(n):
    return np.polynomial.legendre.leggauss(n)


def _column_integral(field: FieldSpec, x, y, nodes: int = 24, panels: int = 4):
    """``int_0^y B(x, t) dt`` for arrays ``x``, ``y`` (same shape)."""
    out = np.zeros(np.broadcast(x, y).shape)
    if field.is_zero:
        return out
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    s = np.sqrt(np.maximum(field.c**2 - x * x, 0.0))
    top = np.clip(y, -s, s)
    if field.kind == "disk":
        return field.B0 * top
    live = top != 0.0
    if not live.any():
        return out
    xl = x[live]
    tl = top[live]
    g, w = _gauss(nodes)
    total = np.zeros_like(tl)
    for p in range(panels):
        lo = tl * p / panels
        hi = tl * (p + 1) / panels
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        t = mid[:, None] + half[:, None] * g[None, :]
        r = np.hypot(xl[:, None], t)
        total += half * (field.radial(r) @ w)
    out[live] = total
    return out


def landau_potential(field: FieldSpec, x, y):
    """Landau-gauge vector potential ``(A_x, A_y)`` with ``A_y = 0``.

    The disk profile is integrated in closed form, the bump profile with a
    composite Gauss-Legendre rule on the part of the column inside the
    support.
    """
    ax = -_column_integral(field, x, y)
    return ax, np.zeros_like(ax)


def landau_potential_adaptive(field: FieldSpec, x: float, y: float, tol: float = 1e-10):
    """Pointwise Landau potential by adaptive Simpson quadrature (reference route)."""
    if field.is_zero or abs(x) >= field.c:
        return 0.0, 0.0
    s = math.sqrt(field.c**2 - x * x)
    top = min(max(y, -s), s)
    val = adaptive_simpson(lambda t: float(field.radial(math.hypot(x, t))), 0.0, top, tol)
    return -val, 0.0


def flux(field: FieldSpec, r: float, radial_nodes: int = 32, radial_panels: int = 16, angular: int = 64) -> float:
    """Flux through the ball of radius ``r`` divided by ``2 pi``.

    Polar product rule: composite Gauss-Legendre in the radius with a panel
    break at ``c``, trapezoid in the angle.
    """
    if r < 0:
        raise ValueError("radius must be non-negative")
    if field.is_zero or r == 0:
        return 0.0
    g, w = _gauss(radial_nodes)
    breaks = [0.0, min(r, field.c)]
    if r > field.c:
        breaks.append(r)
    theta = 2 * np.pi * np.arange(angular) / angular
    ct, st = np.cos(theta), np.sin(theta)
    total = 0.0
    for lo_, hi_ in zip(breaks[:-1], breaks[1:]):
        edges = np.linspace(lo_, hi_, radial_panels + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            rr = 0.5 * (hi + lo) + 0.5 * (hi - lo) * g
            vals = field_eval(field, rr[:, None] * ct[None, :], rr[:, None] * st[None, :])
            ang = vals.mean(axis=1) * 2 * np.pi
            total += 0.5 * (hi - lo) * np.sum(w * ang * rr)
    return total / (2 * np.pi)


@dataclass(frozen=True)
class Profile1D:
    """Non-negative transverse profile supported in ``[-a, a]`` before scaling.

    ``kind="square"`` is ``V0`` on ``(-a, a)``; ``kind="table"`` interpolates
    the ``(z, v)`` breakpoints linearly and is zero outside them;
    ``kind="smooth"`` is ``V0 exp(1 - 1/(1 - z^2/a^2))`` on ``(-a, a)``.  The scaled
    profile actually used is ``(1/eps) V(z/eps)``, supported in
    ``[-eps a, eps a]``.
    """

    kind: str = "square"
    V0: float = 1.0
    a: float = 1.0
    eps: float = 1.0
    breakpoints: tuple = ()

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}; expected one of {PROFILE_KINDS}")
        if not (self.a > 0 and self.eps > 0):
            raise ValueError("profile half-width and eps must be positive")
        if self.V0 < 0:
            raise ValueError("profile depth must be non-negative")
        if self.kind == "table":
            bp = np.asarray(self.breakpoints, dtype=float)
            if bp.ndim != 2 or bp.shape[1] != 2 or bp.shape[0] < 2:
                raise ValueError("table profile needs at least two (z, v) breakpoints")
            if np.any(np.diff(bp[:, 0]) <= 0):
                raise ValueError("breakpoint abscissas must be strictly increasing")
            if bp[0, 0] < -self.a - 1e-12 or bp[-1, 0] > self.a + 1e-12:
                raise ValueError("breakpoints must lie in [-a, a]")
            if np.any(bp[:, 1] < 0):
                raise ValueError("profile values must be non-negative")
        if self.peak == 0:
            raise ValueError("profile must not vanish identically")

    @property
    def half_width(self) -> float:
        return self.eps * self.a

    @property
    def peak(self) -> float:
        if self.kind in ("square", "smooth"):
            return self.V0 / self.eps
        return float(np.max(np.asarray(self.breakpoints, float)[:, 1])) * self.V0 / self.eps

    def scaled(self, factor: float) -> "Profile1D":
        return Profile1D(self.kind, self.V0 * factor, self.a, self.eps, self.breakpoints)

    def with_eps(self, eps: float) -> "Profile1D":
        return Profile1D(self.kind, self.V0, self.a, eps, self.breakpoints)

    def _base(self, s):
        if self.kind == "square":
            return np.where(np.abs(s) < self.a, self.V0, 0.0)
        if self.kind == "smooth":
            s = np.asarray(s, dtype=float)
            out = np.zeros_like(s)
            inside = np.abs(s) < self.a
            g = 1.0 - (s[inside] / self.a) ** 2
            out[inside] = self.V0 * np.exp(1.0 - 1.0 / g)
            return out
        bp = np.asarray(self.breakpoints, dtype=float)
        return self.V0 * np.interp(s, bp[:, 0], bp[:, 1], left=0.0, right=0.0)

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        return self._base(z / self.eps) / self.eps

    def antiderivative(self, z):
        """``int_{-inf}^z`` of the scaled profile; closed form except for the smooth kind."""
        s = np.asarray(z, dtype=float) / self.eps
        if self.kind == "square":
            return self.V0 * np.clip(s + self.a, 0.0, 2 * self.a)
        if self.kind == "smooth":
            return self._smooth_primitive(np.clip(s, -self.a, self.a))
        bp = np.asarray(self.breakpoints, dtype=float)
        zs, vs = bp[:, 0], bp[:, 1] * self.V0
        seg = np.concatenate([[0.0], np.cumsum(0.5 * (vs[1:] + vs[:-1]) * np.diff(zs))])
        sc = np.clip(s, zs[0], zs[-1])
        i = np.clip(np.searchsorted(zs, sc, side="right") - 1, 0, len(zs) - 2)
        dz = sc - zs[i]
        slope = (vs[i + 1] - vs[i]) / (zs[i + 1] - zs[i])
        return seg[i] + vs[i] * dz + 0.5 * slope * dz * dz

    def _smooth_primitive(self, t, panels: int = 8, nodes: int = 24):
        # composite Gauss-Legendre on [-a, t]; integrand is flat at -a
        t = np.asarray(t, dtype=float)
        g, w = _gauss(nodes)
        total = np.zeros_like(t)
        span = t + self.a
        for p in range(panels):
            lo = -self.a + span * p / panels
            half = 0.5 * span / panels
            pts = (lo + half)[..., None] + half[..., None] * g
            total = total + half * (self._base(pts) @ w)
        return total

    def cell_average(self, z, width: float):
        return (self.antiderivative(np.asarray(z) + 0.5 * width)
                - self.antiderivative(np.asarray(z) - 0.5 * width)) / width

    def integral(self) -> float:
        return float(self.antiderivative(np.inf))


def square_well(V0: float, a: float, eps: float = 1.0) -> Profile1D:
    return Profile1D("square", V0, a, eps)


def smooth_well(V0: float, a: float, eps: float = 1.0) -> Profile1D:
    return Profile1D("smooth", V0, a, eps)


def trapezoid_well(V0: float, a: float, eps: float = 1.0, plateau: float = 0.5) -> Profile1D:
    """``V0`` on ``|z| <= plateau a`` falling linearly to zero at ``|z| = a``."""
    bp = ((-a, 0.0), (-plateau * a, 1.0), (plateau * a, 1.0), (a, 0.0))
    return Profile1D("table", V0, a, eps, bp)


def potential_eval(profile: Profile1D, strip: StripSpec, x, y):
    """``V(x, y) = V~(u(x, y))`` with ``u`` the signed distance to the curve."""
    return profile(signed_distance(x, y, strip.curve))


def rotated_potential_A(field: FieldSpec, k: float, x, y):
    """Vector potential of the rotated problem: the pull-back of the Landau
    gauge under the rotation by ``atan(k)``."""
    alpha = math.atan(k)
    X, Y = rotate_point(x, y, alpha)
    ax, _ = landau_potential(field, X, Y)
    return ax * math.cos(alpha), -ax * math.sin(alpha)


def rotated_potential_V(profile: Profile1D, strip: StripSpec, x, y):
    """``V`` composed with the rotation; supported on the rotated-back strip."""
    X, Y = rotate_point(x, y, strip.curve.alpha)
    return potential_eval(profile, strip, X, Y)


def variation_norm(profile: Profile1D, strip: StripSpec, reference: str = "vertical",
                   spacing: float | None = None, return_argmax: bool = False):
    """Sup over the strip of ``|V~(u) - V~(ref)|``.

    ``reference="vertical"`` compares with ``V~(y)``, ``"line_k"`` with
    ``V~`` of the signed distance to the asymptotic line.  Samples are the
    points of the lattice ``spacing * Z^2`` inside the strip over the region
    where the curve can differ from its asymptote, plus the curve itself at
    the lattice abscissas, so halving ``spacing`` refines the sample set.
    """
    if reference not in ("vertical", "line_k"):
        raise ValueError(f"unknown reference {reference!r}")
    curve = strip.curve
    a = strip.a
    h = spacing if spacing is not None else a / 64.0
    if not h > 0:
        raise ValueError("sampling spacing must be positive")
    if not curve.is_deformed:
        if reference == "line_k" or curve.k == 0.0:
            return (0.0, (0.0, 0.0)) if return_argmax else 0.0
    span = (curve.rho + a) if curve.is_deformed else curve.c
    xs = h * np.arange(math.floor(-span / h), math.ceil(span / h) + 1)
    px, py = curve_samples(curve, -span - a, span + a, min(h, a / 8))
    scan = slice_scan(px, py, a, xs)
    X, Y = [], []
    for x0, iv in zip(xs, scan.intervals):
        for lo, hi in iv:
            js = np.arange(math.ceil(lo / h), math.floor(hi / h) + 1)
            ys = h * js
            ys = ys[(ys > lo) & (ys < hi)]
            X.append(np.full(ys.size, x0))
            Y.append(ys)
    X.append(xs)
    Y.append(curve(xs))
    X = np.concatenate(X)
    Y = np.concatenate(Y)
    u = signed_distance(X, Y, curve)
    inside = np.abs(u) < a
    X, Y, u = X[inside], Y[inside], u[inside]
    ref = Y if reference == "vertical" else signed_line_distance(X, Y, curve.k)
    diff = np.abs(profile(u) - profile(ref))
    if diff.size == 0:
        return (0.0, (0.0, 0.0)) if return_argmax else 0.0
    i = int(np.argmax(diff))
    if return_argmax:
        return float(diff[i]), (float(X[i]), float(Y[i]))
    return float(diff[i])
