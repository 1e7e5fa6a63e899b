"""Curves, strips and the slice widths that enter the smallness condition.

The curve is the graph ``y = k x + b(x)`` where the deformation ``b`` is a
closed-form bump supported in ``[-rho, rho]``.  The strip of half-width ``a``
is the open set of points at distance ``< a`` from the curve, i.e. the union
of the open disks of radius ``a`` centred on the curve.  That description is
what the slice scanners use; the signed distance is what the potential uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GeometryError",
    "CurveSpec",
    "StripSpec",
    "SliceScan",
    "curve_eval",
    "signed_distance",
    "line_distance",
    "signed_line_distance",
    "in_strip",
    "rotate_point",
    "slice_scan",
    "slice_width_delta",
    "slice_width_delta_k",
    "curve_samples",
]

DEFORMATIONS = ("none", "bump", "raised_cosine")

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class GeometryError(RuntimeError):
    """Raised when a distance refinement fails to produce a finite answer."""


@dataclass(frozen=True)
class CurveSpec:
    """Graph of ``k x + b(x)`` with ``b`` a bump of height ``d`` on ``[-rho, rho]``.

    ``deformation`` is one of ``"none"``, ``"bump"`` (``d exp(1 - 1/(1-t^2))``,
    smooth) or ``"raised_cosine"`` (``d ((1 + cos(pi t))/2)^2``, twice
    differentiable), with ``t = x / rho``.  The deformed part must sit inside
    the ball of radius ``c``.
    """

    k: float = 0.0
    deformation: str = "none"
    d: float = 0.0
    rho: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if self.deformation not in DEFORMATIONS:
            raise ValueError(f"unknown deformation {self.deformation!r}; expected one of {DEFORMATIONS}")
        if not (self.rho > 0 and self.c > 0):
            raise ValueError("rho and c must be positive")
        if self.rho > self.c:
            raise ValueError(f"invariant rho <= c violated (rho={self.rho}, c={self.c})")
        if self.is_deformed:
            xs = np.linspace(-self.rho, self.rho, 4001)[1:-1]
            b = self._bump(xs)[0]
            moved = b != 0.0
            r2 = xs[moved] ** 2 + (self.k * xs[moved] + b[moved]) ** 2
            if r2.size and r2.max() > self.c ** 2 * (1 + 1e-12):
                raise ValueError(
                    "deformed part of the curve leaves the ball B(0, c); "
                    f"max radius {math.sqrt(r2.max()):.6g} > c={self.c}"
                )

    @property
    def is_deformed(self) -> bool:
        return self.deformation != "none" and self.d != 0.0

    @property
    def alpha(self) -> float:
        """Angle between the asymptotic line and the x axis."""
        return math.atan(self.k)

    def _bump(self, x):
        """Deformation and its first two x-derivatives."""
        x = np.asarray(x, dtype=float)
        b = np.zeros_like(x)
        db = np.zeros_like(x)
        ddb = np.zeros_like(x)
        if not self.is_deformed:
            return b, db, ddb
        t = x / self.rho
        inside = np.abs(t) < 1.0
        ti = t[inside]
        if self.deformation == "bump":
            g = 1.0 - ti * ti
            f = np.exp(1.0 - 1.0 / g)
            u = -2.0 * ti / g**2
            du = -2.0 / g**2 - 8.0 * ti * ti / g**3
            vals, d1, d2 = f, f * u, f * (u * u + du)
        else:
            q = 0.5 * (1.0 + np.cos(np.pi * ti))
            dq = -0.5 * np.pi * np.sin(np.pi * ti)
            ddq = -0.5 * np.pi**2 * np.cos(np.pi * ti)
            vals, d1, d2 = q * q, 2 * q * dq, 2 * dq * dq + 2 * q * ddq
        b[inside] = self.d * vals
        db[inside] = self.d * d1 / self.rho
        ddb[inside] = self.d * d2 / self.rho**2
        return b, db, ddb

    def deformation_at(self, x):
        return self._bump(x)[0]

    def __call__(self, x):
        return self.k * np.asarray(x, dtype=float) + self._bump(x)[0]

    def slope(self, x):
        return self.k + self._bump(x)[1]

    def curvature_term(self, x):
        return self._bump(x)[2]


@dataclass(frozen=True)
class StripSpec:
    curve: CurveSpec
    a: float

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"strip half-width must be positive, got {self.a}")


def curve_eval(curve: CurveSpec, x):
    """Height of the curve above ``x``; equals ``k x`` once ``|x| >= rho``."""
    out = curve(x)
    return float(out) if np.ndim(out) == 0 else out


def line_distance(x, y, k: float):
    """Unsigned distance from ``(x, y)`` to the line ``y = k x``."""
    return np.abs(signed_line_distance(x, y, k))


def signed_line_distance(x, y, k: float):
    return (np.asarray(y, dtype=float) - k * np.asarray(x, dtype=float)) / math.sqrt(1.0 + k * k)


def rotate_point(x, y, alpha: float, inverse: bool = False):
    """Apply the rotation ``(x cos a - y sin a, x sin a + y cos a)`` or its inverse."""
    c, s = math.cos(alpha), math.sin(alpha)
    if inverse:
        s = -s
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return x * c - y * s, x * s + y * c


def _arc_sq_dist(curve, x, y, t):
    dy = y - curve(t)
    dx = x - t
    return dx * dx + dy * dy


def signed_distance(x, y, curve: CurveSpec, samples: int = 2048, tol: float = 1e-12, chunk: int = 4096):
    """Signed distance from points to the curve, positive above it.

    The two straight tails are handled in closed form.  On the deformed arc a
    uniform parameter scan picks a bracket which golden-section search then
    shrinks below ``tol``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    shape = x.shape
    xf = x.ravel()
    yf = y.ravel()
    k = curve.k
    if not curve.is_deformed:
        return signed_line_distance(xf, yf, k).reshape(shape)

    rho = curve.rho
    foot = (xf + k * yf) / (1.0 + k * k)
    xl = np.minimum(foot, -rho)
    xr = np.maximum(foot, rho)
    dl = (xf - xl) ** 2 + (yf - k * xl) ** 2
    dr = (xf - xr) ** 2 + (yf - k * xr) ** 2
    best = np.where(dl <= dr, dl, dr)
    best_t = np.where(dl <= dr, xl, xr)

    ts = np.linspace(-rho, rho, samples + 1)
    ys = curve(ts)
    # points whose distance to the arc's bounding box exceeds the tail distance cannot improve
    gx = np.maximum(np.maximum(-rho - xf, xf - rho), 0.0)
    gy = np.maximum(np.maximum(ys.min() - yf, yf - ys.max()), 0.0)
    cand = np.nonzero(gx * gx + gy * gy < best)[0]
    step = ts[1] - ts[0]
    n_iter = max(1, int(math.ceil(math.log(tol / (2 * step)) / math.log(_GOLDEN))))
    for start in range(0, cand.size, chunk):
        idx = cand[start:start + chunk]
        px = xf[idx][:, None]
        py = yf[idx][:, None]
        d2 = (px - ts[None, :]) ** 2 + (py - ys[None, :]) ** 2
        j = np.argmin(d2, axis=1)
        lo = ts[np.maximum(j - 1, 0)]
        hi = ts[np.minimum(j + 1, samples)]
        px = px[:, 0]
        py = py[:, 0]
        m1 = hi - _GOLDEN * (hi - lo)
        m2 = lo + _GOLDEN * (hi - lo)
        f1 = _arc_sq_dist(curve, px, py, m1)
        f2 = _arc_sq_dist(curve, px, py, m2)
        for _ in range(n_iter):
            left = f1 < f2
            hi = np.where(left, m2, hi)
            lo = np.where(left, lo, m1)
            new_m1 = hi - _GOLDEN * (hi - lo)
            new_m2 = lo + _GOLDEN * (hi - lo)
            # reuse the surviving interior point
            m2_next = np.where(left, m1, new_m2)
            m1_next = np.where(left, new_m1, m2)
            f2_next = np.where(left, f1, np.nan)
            f1_next = np.where(left, np.nan, f2)
            m1, m2 = m1_next, m2_next
            need1 = np.isnan(f1_next)
            need2 = np.isnan(f2_next)
            if need1.any():
                f1_next[need1] = _arc_sq_dist(curve, px[need1], py[need1], m1[need1])
            if need2.any():
                f2_next[need2] = _arc_sq_dist(curve, px[need2], py[need2], m2[need2])
            f1, f2 = f1_next, f2_next
        tm = 0.5 * (lo + hi)
        fm = _arc_sq_dist(curve, px, py, tm)
        if not np.all(np.isfinite(fm)):
            bad = np.nonzero(~np.isfinite(fm))[0][0]
            raise GeometryError(
                f"distance refinement failed at point ({px[bad]}, {py[bad]}); "
                f"sampled bracket [{lo[bad]}, {hi[bad]}]"
            )
        better = fm < best[idx]
        best[idx[better]] = fm[better]
        best_t[idx[better]] = tm[better]

    slope = curve.slope(best_t)
    side = (yf - curve(best_t)) - slope * (xf - best_t)
    u = np.sqrt(best)
    u = np.where(side < 0, -u, u)
    return u.reshape(shape)


def in_strip(x, y, strip: StripSpec):
    return np.abs(signed_distance(x, y, strip.curve)) < strip.a


@dataclass
class SliceScan:
    """Cross-sections of a strip along a family of parallel lines.

    ``intervals[i]`` holds the disjoint ``(lo, hi)`` pieces of slice ``i`` in the
    coordinate running along the slicing line; ``lower``/``upper`` are their
    extreme ends (the bounding curves of the strip over the scan window).
    """

    x0: np.ndarray
    intervals: list = field(repr=False)
    widths: np.ndarray = field(repr=False)
    lower: np.ndarray = field(repr=False)
    upper: np.ndarray = field(repr=False)

    @property
    def delta(self) -> float:
        return float(self.widths.max()) if self.widths.size else 0.0


def _merge(lo, hi):
    order = np.argsort(lo, kind="stable")
    lo = lo[order]
    hi = np.maximum.accumulate(hi[order])
    starts = np.ones(lo.size, dtype=bool)
    starts[1:] = lo[1:] > hi[:-1]
    first = np.nonzero(starts)[0]
    last = np.append(first[1:] - 1, lo.size - 1)
    return np.column_stack([lo[first], hi[last]])


def _scan(px, py, a, x0s):
    intervals, widths, lower, upper = [], [], [], []
    order = np.argsort(px)
    px = px[order]
    py = py[order]
    for x0 in x0s:
        i0, i1 = np.searchsorted(px, [x0 - a, x0 + a])
        dx = px[i0:i1] - x0
        w = np.sqrt(np.maximum(a * a - dx * dx, 0.0))
        keep = w > 0
        if not keep.any():
            intervals.append(np.empty((0, 2)))
            widths.append(0.0)
            lower.append(np.nan)
            upper.append(np.nan)
            continue
        cy = py[i0:i1][keep]
        merged = _merge(cy - w[keep], cy + w[keep])
        intervals.append(merged)
        widths.append(float(np.sum(merged[:, 1] - merged[:, 0])))
        lower.append(float(merged[0, 0]))
        upper.append(float(merged[-1, 1]))
    return SliceScan(np.asarray(x0s, dtype=float), intervals, np.asarray(widths),
                     np.asarray(lower), np.asarray(upper))


def curve_samples(curve: CurveSpec, x_lo: float, x_hi: float, spacing: float):
    """Points on the curve over ``[x_lo, x_hi]`` no further apart than ``spacing``."""
    xs = np.linspace(x_lo, x_hi, 2001)
    steep = float(np.max(np.abs(curve.slope(xs))))
    n = int(math.ceil((x_hi - x_lo) * math.sqrt(1.0 + steep**2) / spacing)) + 1
    xs = np.linspace(x_lo, x_hi, max(n, 2))
    return xs, curve(xs)


def slice_scan(px, py, a: float, x0s):
    """Vertical slices ``{x = x0}`` of the union of open disks of radius ``a``
    centred at the points ``(px, py)``.

    Works for any sampled curve, in particular rotated copies that are no
    longer graphs over the x axis.
    """
    return _scan(np.asarray(px, dtype=float), np.asarray(py, dtype=float), a, np.asarray(x0s, dtype=float))


def _x0_grid(c, resolution):
    n = max(int(math.ceil(2 * c / resolution)), 2)
    return np.linspace(-c, c, n + 1)[1:-1]


def slice_width_delta(strip: StripSpec, resolution: float | None = None) -> SliceScan:
    """Maximal length of the vertical cross-sections over ``x0`` in ``(-c, c)``."""
    a = strip.a
    c = strip.curve.c
    res = resolution if resolution is not None else 1e-3 * a
    if not res > 0:
        raise ValueError("scan resolution must be positive")
    px, py = curve_samples(strip.curve, -c - 2 * a, c + 2 * a, res)
    return _scan(px, py, a, _x0_grid(c, res))


def slice_width_delta_k(strip: StripSpec, resolution: float | None = None) -> SliceScan:
    """Same as :func:`slice_width_delta` with slicing lines orthogonal to the
    asymptotic line, through its points ``(x0, k x0)``, ``x0`` in ``(-c, c)``.

    Interval coordinates are measured along the normal of that line.
    """
    curve = strip.curve
    a = strip.a
    c = curve.c
    res = resolution if resolution is not None else 1e-3 * a
    if not res > 0:
        raise ValueError("scan resolution must be positive")
    alpha = curve.alpha
    s = math.sqrt(1.0 + curve.k**2)
    reach = c * s + 2 * a
    px, py = curve_samples(curve, -reach, reach, res)
    # coordinates along / across the asymptotic line
    along = (px + curve.k * py) / s
    across = (py - curve.k * px) / s
    x0s = _x0_grid(c, res)
    scan = _scan(along, across, a, x0s * s)
    scan.x0 = x0s
    return scan
