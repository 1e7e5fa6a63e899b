"""Gauge-covariant finite differences for ``(i grad + A)^2 - V`` in the plane.

Unknowns live on the nodes of a uniform lattice of spacing ``h``.  Every
lattice edge ``p -> q`` carries the Peierls phase ``theta = int_p^q A . dl``
and the discrete operator is

    (H psi)_j = h^-2 sum_{k ~ j} (psi_j - exp(-i theta_{j->k}) psi_k) - V_j psi_j.

With Dirichlet truncation the missing neighbours count as zeros, so the
diagonal is always ``4/h^2 - V_j``.  With the natural boundary a missing
neighbour removes its hop and its share of the diagonal, which makes the
constants the kernel of the field-free operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .fields import FieldSpec, Profile1D, landau_potential, potential_eval, rotated_potential_A, rotated_potential_V
from .geometry import StripSpec

__all__ = [
    "GridError",
    "Grid2D",
    "GaugeField",
    "SmoothChi",
    "SparseHermitian",
    "peierls_phase",
    "edge_phases",
    "assemble_H",
    "gauge_transform",
    "plaquette_flux_sum",
    "rectangle_loop",
    "strip_potential",
    "rotated_strip_potential",
    "write_coo",
    "read_coo",
]

_GL3_NODES = np.array([-math.sqrt(0.6), 0.0, math.sqrt(0.6)])
_GL3_WEIGHTS = np.array([5.0, 8.0, 5.0]) / 9.0


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Grid2D:
    """Uniform lattice on ``[x_lo, x_hi] x [y_lo, y_hi]`` with spacing ``h``.

    Dirichlet grids carry unknowns on the interior lattice points only;
    natural grids on all of them.  A mask keeps the points with
    ``|z| < mask_radius`` (``mask_shape="disk"``) or
    ``|x| + |y| < mask_radius`` (``"diamond"``) strictly.
    """

    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float
    h: float
    boundary: str = "dirichlet"
    mask_radius: float | None = None
    mask_shape: str = "disk"

    def __post_init__(self):
        problems = []
        if not self.h > 0:
            problems.append(f"spacing h must be positive, got {self.h}")
        if self.boundary not in ("dirichlet", "natural"):
            problems.append(f"boundary must be 'dirichlet' or 'natural', got {self.boundary!r}")
        if not (self.x_hi > self.x_lo and self.y_hi > self.y_lo):
            problems.append("bounds must satisfy x_lo < x_hi and y_lo < y_hi")
        if self.mask_radius is not None and not self.mask_radius > 0:
            problems.append("mask radius must be positive")
        if self.mask_shape not in ("disk", "diamond"):
            problems.append(f"mask shape must be 'disk' or 'diamond', got {self.mask_shape!r}")
        if not problems:
            for name, lo, hi in (("x", self.x_lo, self.x_hi), ("y", self.y_lo, self.y_hi)):
                r = (hi - lo) / self.h
                if abs(r - round(r)) > 1e-9 * max(1.0, abs(r)):
                    problems.append(f"{name}-extent {hi - lo} is not an integer multiple of h={self.h}")
        if problems:
            raise GridError("; ".join(problems))
        if self.active().sum() == 0:
            raise GridError("grid has no active nodes (mask excludes everything)")

    @classmethod
    def square(cls, half: float, h: float, **kw) -> "Grid2D":
        return cls(-half, half, -half, half, h, **kw)

    @classmethod
    def disk(cls, radius: float, h: float, boundary: str = "natural") -> "Grid2D":
        """Bounding square of the disk, rounded out to whole cells, with the mask on."""
        n = math.ceil(radius / h)
        return cls(-n * h, n * h, -n * h, n * h, h, boundary, radius)

    @classmethod
    def diamond(cls, radius: float, h: float, boundary: str = "dirichlet") -> "Grid2D":
        """Square ``|x| + |y| < radius``; with ``radius`` a multiple of ``h`` its
        edges pass through lattice points."""
        n = math.ceil(radius / h - 1e-9)
        return cls(-n * h, n * h, -n * h, n * h, h, boundary, radius, "diamond")

    @property
    def nx(self) -> int:
        return int(round((self.x_hi - self.x_lo) / self.h))

    @property
    def ny(self) -> int:
        return int(round((self.y_hi - self.y_lo) / self.h))

    def lattice(self):
        """All lattice coordinates as 1D arrays ``xs`` (length nx+1), ``ys``."""
        xs = self.x_lo + self.h * np.arange(self.nx + 1)
        ys = self.y_lo + self.h * np.arange(self.ny + 1)
        return xs, ys

    def active(self) -> np.ndarray:
        """Boolean array of shape ``(nx+1, ny+1)``: which lattice points are unknowns."""
        xs, ys = self.lattice()
        act = np.ones((xs.size, ys.size), dtype=bool)
        if self.boundary == "dirichlet":
            act[0, :] = act[-1, :] = False
            act[:, 0] = act[:, -1] = False
        if self.mask_radius is not None:
            X, Y = np.meshgrid(xs, ys, indexing="ij")
            if self.mask_shape == "disk":
                act &= X * X + Y * Y < self.mask_radius**2
            else:
                act &= np.abs(X) + np.abs(Y) < self.mask_radius * (1 - 1e-12)
        return act

    def nodes(self):
        """Coordinates ``(x, y)`` of the unknowns, ordered x-major."""
        xs, ys = self.lattice()
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        act = self.active()
        return X[act], Y[act]

    def index_map(self) -> np.ndarray:
        """Lattice array holding each unknown's index, ``-1`` where inactive."""
        act = self.active()
        idx = np.full(act.shape, -1, dtype=np.int64)
        idx[act] = np.arange(int(act.sum()))
        return idx

    @property
    def size(self) -> int:
        return int(self.active().sum())

    def refined(self, factor: int = 2) -> "Grid2D":
        return Grid2D(self.x_lo, self.x_hi, self.y_lo, self.y_hi, self.h / factor, self.boundary,
                      self.mask_radius, self.mask_shape)

    def to_array(self, values) -> np.ndarray:
        """Scatter node values onto the lattice (NaN at inactive points)."""
        act = self.active()
        out = np.full(act.shape, np.nan, dtype=np.asarray(values).dtype if np.iscomplexobj(values) else float)
        out[act] = values
        return out


PotentialFn = Callable[[np.ndarray, np.ndarray], tuple]


@dataclass(frozen=True)
class SmoothChi:
    """Random smooth gauge function ``sum_j a_j cos(k_j . z + phi_j)``."""

    amplitudes: tuple
    wavevectors: tuple
    phases: tuple

    @classmethod
    def random(cls, seed: int = 0, terms: int = 4, scale: float = 1.0, max_wavenumber: float = 1.0):
        rng = np.random.default_rng(seed)
        amps = rng.normal(0.0, scale, terms)
        kv = rng.uniform(-max_wavenumber, max_wavenumber, (terms, 2))
        ph = rng.uniform(0.0, 2 * np.pi, terms)
        return cls(tuple(amps), tuple(map(tuple, kv)), tuple(ph))

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape)
        for a, (kx, ky), p in zip(self.amplitudes, self.wavevectors, self.phases):
            out = out + a * np.cos(kx * x + ky * y + p)
        return out

    def gradient(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        gx = np.zeros(np.broadcast(x, y).shape)
        gy = np.zeros_like(gx)
        for a, (kx, ky), p in zip(self.amplitudes, self.wavevectors, self.phases):
            s = -a * np.sin(kx * x + ky * y + p)
            gx = gx + kx * s
            gy = gy + ky * s
        return gx, gy


@dataclass(frozen=True)
class _ChiSum:
    first: Callable
    second: Callable

    def __call__(self, x, y):
        return self.first(x, y) + self.second(x, y)

    def gradient(self, x, y):
        ax, ay = self.first.gradient(x, y)
        bx, by = self.second.gradient(x, y)
        return ax + bx, ay + by


@dataclass(frozen=True)
class GaugeField:
    """Vector potential ``A = A_0 + grad chi``.

    ``A_0`` is a callable ``(x, y) -> (A_x, A_y)`` (or ``None`` for zero) and
    is integrated along edges by 3-point Gauss quadrature; the gradient part
    contributes exactly ``chi(q) - chi(p)``.
    """

    potential: PotentialFn | None = None
    chi: Callable | None = None
    label: str = "zero"
    field: FieldSpec | None = None

    @classmethod
    def zero(cls) -> "GaugeField":
        return cls()

    @classmethod
    def landau(cls, field: FieldSpec) -> "GaugeField":
        if field.is_zero:
            return cls(label="landau", field=field)
        return cls(lambda x, y: landau_potential(field, x, y), None, "landau", field)

    @classmethod
    def rotated(cls, field: FieldSpec, k: float) -> "GaugeField":
        if field.is_zero:
            return cls(label=f"rotated(k={k})", field=field)
        return cls(lambda x, y: rotated_potential_A(field, k, x, y), None, f"rotated(k={k})", field)

    @classmethod
    def constant(cls, ax: float, ay: float) -> "GaugeField":
        def pot(x, y):
            shape = np.broadcast(np.asarray(x), np.asarray(y)).shape
            return np.full(shape, float(ax)), np.full(shape, float(ay))
        return cls(pot, None, f"constant({ax}, {ay})")

    @classmethod
    def from_callable(cls, potential: PotentialFn, label: str = "custom") -> "GaugeField":
        return cls(potential, None, label)

    def with_gradient(self, chi: Callable) -> "GaugeField":
        """Add ``grad chi``; ``chi`` needs a ``gradient`` method for pointwise use."""
        if self.chi is not None:
            chi = _ChiSum(self.chi, chi)
        return GaugeField(self.potential, chi, self.label + "+grad", self.field)

    @property
    def is_zero(self) -> bool:
        return self.potential is None and self.chi is None

    def __call__(self, x, y):
        """``A`` at points; the gradient part needs ``chi.gradient``."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.potential is None:
            ax = np.zeros(np.broadcast(x, y).shape)
            ay = np.zeros_like(ax)
        else:
            ax, ay = self.potential(x, y)
            ax, ay = np.asarray(ax, float), np.asarray(ay, float)
        if self.chi is not None:
            gx, gy = self.chi.gradient(x, y)
            ax, ay = ax + gx, ay + gy
        return ax, ay


def edge_phases(gauge: GaugeField, px, py, qx, qy) -> np.ndarray:
    """Peierls phases ``int_p^q A . dl`` for arrays of edges."""
    px, py, qx, qy = (np.asarray(v, dtype=float) for v in (px, py, qx, qy))
    theta = np.zeros(np.broadcast(px, py, qx, qy).shape)
    if gauge.potential is not None:
        dx, dy = qx - px, qy - py
        mx, my = 0.5 * (px + qx), 0.5 * (py + qy)
        for t, w in zip(_GL3_NODES, _GL3_WEIGHTS):
            ax, ay = gauge.potential(mx + 0.5 * t * dx, my + 0.5 * t * dy)
            theta = theta + 0.5 * w * (ax * dx + ay * dy)
    if gauge.chi is not None:
        theta = theta + gauge.chi(qx, qy) - gauge.chi(px, py)
    return theta


def peierls_phase(gauge: GaugeField, p, q) -> float:
    """Phase of the single edge from point ``p`` to point ``q``."""
    return float(edge_phases(gauge, p[0], p[1], q[0], q[1]))


@dataclass(frozen=True)
class SparseHermitian:
    """Assembled operator; ``matrix`` is CSR and equals its conjugate transpose."""

    matrix: sp.csr_matrix = field(repr=False)
    grid: Grid2D | None = None
    is_real: bool = False

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def hermitian_defect(self) -> float:
        """Largest ``|M - M^*|`` entry; exactly 0 for assembled operators."""
        D = self.matrix - self.matrix.conj().T
        return float(abs(D).max()) if D.nnz else 0.0

    def __matmul__(self, v):
        return self.matrix @ v

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def strip_potential(profile: Profile1D, strip: StripSpec) -> Callable:
    """``V(x, y) = V~(u(x, y))`` as a sampler callable."""
    return lambda x, y: potential_eval(profile, strip, x, y)


def rotated_strip_potential(profile: Profile1D, strip: StripSpec) -> Callable:
    return lambda x, y: rotated_potential_V(profile, strip, x, y)


def _sample_potential(grid: Grid2D, potential, sampler: str, sub: int):
    x, y = grid.nodes()
    if potential is None:
        return np.zeros(x.size)
    if not callable(potential):
        v = np.asarray(potential, dtype=float)
        if v.shape != x.shape:
            raise GridError(f"potential array has shape {v.shape}, expected {x.shape}")
        return v
    if sampler == "point":
        return np.asarray(potential(x, y), dtype=float)
    if sampler == "cell":
        # midpoint rule on a sub x sub partition of the node's cell
        offs = grid.h * ((np.arange(sub) + 0.5) / sub - 0.5)
        acc = np.zeros(x.size)
        for ox in offs:
            for oy in offs:
                acc += potential(x + ox, y + oy)
        return acc / sub**2
    raise ValueError(f"unknown sampler {sampler!r}")


def assemble_H(grid: Grid2D, gauge: GaugeField | None = None, potential=None,
               sampler: str = "point", cell_subdivisions: int = 4) -> SparseHermitian:
    """Assemble the discrete magnetic Schrodinger operator.

    Parameters
    ----------
    grid : Grid2D
    gauge : GaugeField, optional
        Zero field when omitted; the result is then real symmetric.
    potential : callable or array, optional
        ``V`` as a callable of ``(x, y)`` or as values on the unknowns.
    sampler : {"point", "cell"}
        Node value of a callable potential, or its average over the node's
        cell (``cell_subdivisions`` squared midpoint samples).
    """
    gauge = gauge or GaugeField.zero()
    h = grid.h
    idx = grid.index_map()
    xs, ys = grid.lattice()
    n = grid.size
    V = _sample_potential(grid, potential, sampler, cell_subdivisions)
    real = gauge.is_zero

    rows, cols, vals = [], [], []
    degree = np.zeros(n)
    for di, dj in ((1, 0), (0, 1)):
        a = idx[: idx.shape[0] - di, : idx.shape[1] - dj]
        b = idx[di:, dj:]
        both = (a >= 0) & (b >= 0)
        ia, ib = a[both], b[both]
        if grid.boundary == "natural":
            np.add.at(degree, ia, 1.0)
            np.add.at(degree, ib, 1.0)
        if real:
            w = np.full(ia.size, -1.0 / h**2)
        else:
            I, J = np.nonzero(both)
            px, py = xs[I], ys[J]
            qx, qy = xs[I + di], ys[J + dj]
            theta = edge_phases(gauge, px, py, qx, qy)
            w = -np.exp(-1j * theta) / h**2
        rows.append(ia)
        cols.append(ib)
        vals.append(w)
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    w = np.concatenate(vals)
    if grid.boundary == "dirichlet":
        diag = 4.0 / h**2 - V
    else:
        diag = degree / h**2 - V
    dtype = float if real else complex
    all_r = np.concatenate([r, c, np.arange(n)])
    all_c = np.concatenate([c, r, np.arange(n)])
    all_v = np.concatenate([w, np.conj(w), diag]).astype(dtype)
    M = sp.csr_matrix((all_v, (all_r, all_c)), shape=(n, n))
    M.sort_indices()
    return SparseHermitian(M, grid, real)


def gauge_transform(M: SparseHermitian, chi_values) -> SparseHermitian:
    """``M'_{jk} = exp(i chi_j) M_{jk} exp(-i chi_k)`` for node samples ``chi``."""
    chi = np.asarray(chi_values, dtype=float)
    if chi.shape != (M.dim,):
        raise ValueError(f"need {M.dim} gauge samples, got shape {chi.shape}")
    if not np.all(np.isfinite(chi)):
        raise ValueError("gauge samples must be finite")
    A = M.matrix.tocoo()
    phase = np.exp(1j * (chi[A.row] - chi[A.col]))
    B = sp.csr_matrix((A.data * phase, (A.row, A.col)), shape=A.shape)
    B.sort_indices()
    return SparseHermitian(B, M.grid, False)


def rectangle_loop(grid: Grid2D, x0: float, x1: float, y0: float, y1: float) -> np.ndarray:
    """Counter-clockwise closed path of lattice points around a lattice rectangle."""
    h = grid.h

    def snap(v, lo):
        k = (v - lo) / h
        if abs(k - round(k)) > 1e-9 * max(1.0, abs(k)):
            raise GridError(f"corner coordinate {v} is not on the lattice")
        return lo + round(k) * h

    x0, x1 = snap(x0, grid.x_lo), snap(x1, grid.x_lo)
    y0, y1 = snap(y0, grid.y_lo), snap(y1, grid.y_lo)
    if not (x1 > x0 and y1 > y0):
        raise GridError("rectangle must have positive extent")
    nx = int(round((x1 - x0) / h))
    ny = int(round((y1 - y0) / h))
    bottom = np.column_stack([x0 + h * np.arange(nx), np.full(nx, y0)])
    right = np.column_stack([np.full(ny, x1), y0 + h * np.arange(ny)])
    top = np.column_stack([x1 - h * np.arange(nx), np.full(nx, y1)])
    left = np.column_stack([np.full(ny, x0), y1 - h * np.arange(ny)])
    return np.vstack([bottom, right, top, left, [[x0, y0]]])


def plaquette_flux_sum(gauge: GaugeField, loop, h: float | None = None) -> float:
    """Sum of Peierls phases around a closed lattice path.

    By Stokes this is the lattice counterpart of ``int int B`` over the
    enclosed region (counter-clockwise orientation gives a positive sign).
    Each segment must be axis-aligned; long segments are split into steps
    of ``h`` when ``h`` is given.
    """
    pts = np.asarray(loop, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 4:
        raise ValueError("loop must be a sequence of at least four (x, y) points")
    scale = max(1.0, float(np.max(np.abs(pts))))
    if np.max(np.abs(pts[0] - pts[-1])) > 1e-12 * scale:
        raise ValueError("loop is not closed: first and last points differ")
    p, q = pts[:-1], pts[1:]
    d = q - p
    if np.any((np.abs(d[:, 0]) > 1e-12 * scale) & (np.abs(d[:, 1]) > 1e-12 * scale)):
        raise ValueError("loop segments must be axis-aligned lattice edges")
    if h is not None:
        steps = np.maximum(1, np.round(np.abs(d).sum(axis=1) / h).astype(int))
        if np.any(steps > 1):
            P, Q = [], []
            for a, b, s in zip(p, q, steps):
                t = np.arange(s + 1)[:, None] / s
                seg = a[None, :] + t * (b - a)[None, :]
                P.append(seg[:-1])
                Q.append(seg[1:])
            p, q = np.vstack(P), np.vstack(Q)
    return float(np.sum(edge_phases(gauge, p[:, 0], p[:, 1], q[:, 0], q[:, 1])))


def write_coo(M: SparseHermitian, path) -> None:
    """Dump the matrix as text lines ``row col re im`` (zero-based)."""
    A = M.matrix.tocoo()
    data = np.asarray(A.data, dtype=complex)
    table = np.column_stack([A.row, A.col, data.real, data.imag])
    np.savetxt(path, table, fmt=["%d", "%d", "%.17g", "%.17g"],
               header=f"{M.dim} {M.dim} {A.nnz}", comments="# ")


def read_coo(path) -> sp.csr_matrix:
    with open(path) as fh:
        header = fh.readline().lstrip("#").split()
    n = int(header[0])
    t = np.loadtxt(path, ndmin=2)
    if t.size == 0:
        return sp.csr_matrix((n, n), dtype=complex)
    return sp.csr_matrix((t[:, 2] + 1j * t[:, 3], (t[:, 0].astype(int), t[:, 1].astype(int))), shape=(n, n))
