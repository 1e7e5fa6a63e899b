"""The transverse operator ``-d^2/dx^2 - V~`` on a truncated interval.

Its ground-state energy is the spectral threshold of the planar problem and
its (positive) ground state is the weight used in the emptiness argument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal, solve_banded

from .fields import Profile1D

__all__ = [
    "ConvergenceError",
    "TridiagonalSystem",
    "GroundState1D",
    "Threshold",
    "SobolevCheck",
    "assemble_h",
    "ground_state",
    "threshold",
    "sobolev_sup_check",
]


class ConvergenceError(RuntimeError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace or []


@dataclass(frozen=True)
class TridiagonalSystem:
    diag: np.ndarray
    off: np.ndarray
    nodes: np.ndarray
    spacing: float
    L: float
    n: int


@dataclass
class GroundState1D:
    L: float
    n: int
    spacing: float
    e: float
    f: np.ndarray = field(repr=False)
    nodes: np.ndarray = field(repr=False)
    residual: float = 0.0

    def __call__(self, y):
        """Ground state at arbitrary abscissas (linear interpolation, zero outside)."""
        xs = np.concatenate([[-self.L], self.nodes, [self.L]])
        fs = np.concatenate([[0.0], self.f, [0.0]])
        return np.interp(y, xs, fs, left=0.0, right=0.0)


def assemble_h(profile: Profile1D | None, L: float, n: int, sampler: str = "cell",
               subdivisions: int | None = None) -> TridiagonalSystem:
    """Three-point discretization on ``(-L, L)`` with Dirichlet ends.

    The interior nodes are ``-L + i * 2L/n``, ``i = 1..n-1``.  With
    ``sampler="cell"`` the potential at a node is its average over the
    node's cell, which keeps the scheme second order across jumps of the
    profile; the average is exact unless ``subdivisions`` asks for the
    midpoint rule on that many sub-cells (the rule the planar assembly
    uses).  ``"point"`` samples the profile at the node.  ``profile=None``
    is the free operator.
    """
    if n < 2:
        raise ValueError(f"need n >= 2 subintervals, got {n}")
    if profile is not None and L <= profile.half_width:
        raise ValueError(f"truncation L={L} does not contain the profile support [-{profile.half_width}, {profile.half_width}]")
    dx = 2.0 * L / n
    nodes = -L + dx * np.arange(1, n)
    if sampler not in ("cell", "point"):
        raise ValueError(f"unknown sampler {sampler!r}")
    if profile is None:
        v = np.zeros(n - 1)
    elif sampler == "cell" and subdivisions:
        offs = dx * ((np.arange(subdivisions) + 0.5) / subdivisions - 0.5)
        v = np.mean([profile(nodes + o) for o in offs], axis=0)
    elif sampler == "cell":
        v = profile.cell_average(nodes, dx)
    else:
        v = profile(nodes)
    diag = 2.0 / dx**2 - v
    off = np.full(n - 2, -1.0 / dx**2)
    return TridiagonalSystem(diag, off, nodes, dx, L, n)


def ground_state(system: TridiagonalSystem, tol: float = 1e-12, max_iter: int = 20) -> GroundState1D:
    """Lowest eigenpair, with the eigenvector taken strictly positive.

    The eigenvalue comes from Sturm-sequence bisection.  The vector comes from
    inverse iteration with a shift just below it: the shifted matrix is then a
    positive definite M-matrix, its inverse is entrywise positive, and so is
    every iterate.
    """
    d, o, dx = system.diag, system.off, system.spacing
    m = d.size
    if m == 1:
        f = np.ones(1) / math.sqrt(dx)
        return GroundState1D(system.L, system.n, dx, float(d[0]), f, system.nodes, 0.0)
    e = float(eigh_tridiagonal(d, o, eigvals_only=True, select="i", select_range=(0, 0))[0])
    scale = float(np.max(np.abs(d)) + 2 * np.max(np.abs(o)))
    sigma = e - 64.0 * np.finfo(float).eps * scale
    ab = np.zeros((3, m))
    ab[0, 1:] = o
    ab[1] = d - sigma
    ab[2, :-1] = o
    v = np.ones(m)
    trace = []
    for it in range(max_iter):
        v = solve_banded((1, 1), ab, v)
        v /= np.linalg.norm(v)
        tv = d * v
        tv[1:] += o * v[:-1]
        tv[:-1] += o * v[1:]
        rq = float(v @ tv)
        res = float(np.linalg.norm(tv - rq * v))
        trace.append((it, rq, res))
        if res <= tol * scale:
            break
    else:
        raise ConvergenceError(f"inverse iteration stalled at residual {res:.3e}", trace)
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    f = v / math.sqrt(dx)
    if not np.all(f > 0):
        raise ConvergenceError("ground state is not strictly positive", trace)
    return GroundState1D(system.L, system.n, dx, e, f, system.nodes, res)


@dataclass
class Threshold:
    """Converged threshold estimate and the refinement record behind it."""

    e: float
    ground: GroundState1D = field(repr=False)
    trace: list = field(default_factory=list, repr=False)
    converged: bool = True

    @property
    def decay_length(self) -> float:
        return 1.0 / math.sqrt(-self.e) if self.e < 0 else math.inf


def _aligned(profile: Profile1D, L: float, n: int):
    # put the profile's end points (and its quarter points) exactly on nodes
    a = profile.half_width
    target = 2.0 * L / n
    m = 8 * max(1, math.ceil(2 * a / (8 * target)))
    dx = 2 * a / m
    steps = math.ceil(L / dx - 1e-9)
    return steps * dx, 2 * steps


def threshold(profile: Profile1D, L: float | None = None, n: int = 4096, tol: float = 1e-9,
              max_n: int = 2**21, sampler: str = "cell") -> Threshold:
    """Threshold ``e`` on the whole line by refinement and truncation doubling.

    The grid is halved until two successive Richardson extrapolants
    ``(4 e(dx/2) - e(dx)) / 3`` agree to ``tol``; then ``L`` is doubled at the
    same spacing until the extrapolant stops moving.
    """
    if L is None:
        L = 20.0 * max(profile.half_width, 1.0)
    L, n = _aligned(profile, L, n)
    trace = []

    def solve(L, n):
        gs = ground_state(assemble_h(profile, L, n, sampler))
        return gs

    def refine(L, n):
        prev = solve(L, n)
        trace.append(dict(L=L, n=n, e=prev.e, extrapolated=None))
        prev_r = None
        while True:
            n2 = 2 * n
            if n2 > max_n:
                return prev, prev_r, n, False
            cur = solve(L, n2)
            r = (4.0 * cur.e - prev.e) / 3.0
            trace.append(dict(L=L, n=n2, e=cur.e, extrapolated=r))
            n = n2
            if prev_r is not None and abs(r - prev_r) < tol:
                return cur, r, n, True
            prev, prev_r = cur, r

    n0 = n
    gs, r, _, ok = refine(L, n0)
    scale = 1
    while ok:
        gs2, r2, _, ok2 = refine(2 * scale * L, 2 * scale * n0)
        if not ok2:
            ok = False
            break
        done = abs(r2 - r) < tol
        gs, r, scale = gs2, r2, 2 * scale
        if done:
            break
    if r is None:
        r = gs.e
    return Threshold(float(r), gs, trace, ok)


@dataclass(frozen=True)
class SobolevCheck:
    lhs: float
    rhs: float
    holds: bool


def sobolev_sup_check(g, spacing: float, slack: float = 1e-9) -> SobolevCheck:
    """Check ``|g(x)|^2 <= 2|I| int |g'|^2 + (2/|I|) int |g|^2`` on sampled data.

    ``g`` holds uniformly spaced samples covering the whole interval ``I``.
    Derivatives are one-sided differences, integrals use the trapezoid rule.
    """
    g = np.asarray(g)
    if g.size < 3:
        raise ValueError("need at least three samples")
    length = spacing * (g.size - 1)
    mod2 = np.abs(g) ** 2
    int_g2 = spacing * (mod2.sum() - 0.5 * (mod2[0] + mod2[-1]))
    int_dg2 = float(np.sum(np.abs(np.diff(g)) ** 2) / spacing)
    lhs = float(mod2.max())
    rhs = 2.0 * length * int_dg2 + 2.0 / length * int_g2
    return SobolevCheck(lhs, float(rhs), lhs <= rhs * (1.0 + slack))
