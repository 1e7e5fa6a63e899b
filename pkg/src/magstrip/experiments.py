"""Numerical studies built on the 1D threshold and the planar assembly.

Every study returns a plain dataclass record; :meth:`to_record` turns it
into JSON-ready data for the command line front end.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .assembly2d import GaugeField, Grid2D, assemble_H, rotated_strip_potential, strip_potential
from .eigensolve import lowest_eigenpairs
from .fields import FieldSpec, Profile1D, flux, variation_norm
from .geometry import StripSpec, slice_width_delta, slice_width_delta_k
from .spectra1d import ConvergenceError, Threshold, assemble_h, ground_state, threshold

__all__ = [
    "cutoff",
    "WeylProbe",
    "WeylResult",
    "weyl_residual",
    "ScanRow",
    "SpectralVerdict",
    "threshold_scan",
    "hardy_estimate",
    "HardyEstimate",
    "TheoremCertificate",
    "certificate",
    "weaken_until_certified",
    "RotationCheck",
    "rotation_equivalence",
    "EpsilonRow",
    "epsilon_scan",
    "ball_radius",
    "log_slope",
]

log = logging.getLogger(__name__)

HARDY_ZERO = 1e-10


def _record(obj):
    def clean(v):
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [clean(x) for x in v]
        if isinstance(v, np.ndarray):
            return clean(v.tolist())
        if isinstance(v, (np.floating, np.integer)):
            return v.item()
        if isinstance(v, float) and not math.isfinite(v):
            return None
        return v
    return clean(asdict(obj))


def cutoff(t):
    """Smooth bump on ``(1, 2)`` with peak value 1 at ``t = 3/2``."""
    t = np.asarray(t, dtype=float)
    s = 2.0 * t - 3.0
    out = np.zeros_like(t)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


def log_slope(xs, ys) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)[0])


# --------------------------------------------------------------------------- Weyl

@dataclass
class WeylProbe:
    """``psi(x, y) = k^{-1/2} f(y) exp(i p x) cutoff(x / k)`` on a grid."""

    p: float
    k: float
    e: float
    ground: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError("cutoff index k must be positive")

    @property
    def support(self):
        return (self.k, 2.0 * self.k)

    @property
    def eigenvalue(self) -> float:
        return self.e + self.p**2

    def sample(self, grid: Grid2D) -> np.ndarray:
        x, _ = grid.nodes()
        act = grid.active()
        # ground holds f on the grid's y lattice
        fy = np.broadcast_to(self.ground[None, :], act.shape)[act]
        return fy * np.exp(1j * self.p * x) * cutoff(x / self.k) / math.sqrt(self.k)


@dataclass
class WeylResult:
    k: float
    p: float
    eigenvalue: float
    residual: float
    residual_no_field: float | None
    grid_size: int

    def to_record(self):
        return _record(self)


def _transverse_ground(profile: Profile1D, grid: Grid2D, sampler: str, sub: int):
    ny = grid.ny
    Y = 0.5 * (grid.y_hi - grid.y_lo)
    if abs(grid.y_lo + Y) > 1e-12 * max(1.0, Y):
        raise ValueError("transverse ground state needs a grid symmetric in y")
    sys_ = assemble_h(profile, Y, ny, sampler, sub if sampler == "cell" else None)
    gs = ground_state(sys_)
    f = np.zeros(ny + 1)
    f[1:-1] = gs.f
    return gs.e, f


def weyl_residual(profile: Profile1D, strip: StripSpec, field_: FieldSpec, p: float, k: float,
                  h: float = 0.1, transverse: float | None = None, compare_no_field: bool = True,
                  sampler: str = "point", cell_subdivisions: int = 4) -> WeylResult:
    """Relative residual ``||H psi - (e_h + p^2) psi|| / ||psi||`` of the probe.

    The grid spans ``x`` in ``[-(c + 1), 2k + 1]`` so that the field region
    is part of the assembled operator; ``e_h`` and ``f`` are the ground pair
    of the transverse operator on the grid's own ``y`` lattice.
    """
    curve = strip.curve
    if curve.k != 0.0:
        raise ValueError("the probe is built for a horizontal asymptote (k = 0)")
    c = max(curve.c, field_.c)
    if not k > c:
        raise ValueError(f"need k > c (k={k}, c={c}) so that the probe avoids the field")
    Y = transverse if transverse is not None else 10.0 * max(profile.half_width, 1.0)
    ny = 2 * math.ceil(Y / h)
    Y = 0.5 * ny * h
    x_lo = -h * math.ceil((c + 1.0) / h)
    x_hi = h * math.ceil((2.0 * k + 1.0) / h)
    grid = Grid2D(x_lo, x_hi, -Y, Y, h)
    if not (grid.x_lo < k and grid.x_hi > 2 * k):
        raise ValueError("probe support exceeds the grid")
    e_h, f = _transverse_ground(profile, grid, sampler, cell_subdivisions)
    probe = WeylProbe(p, k, e_h, f)
    psi = probe.sample(grid)
    V = strip_potential(profile, strip)

    def residual(gauge):
        M = assemble_H(grid, gauge, V, sampler, cell_subdivisions)
        r = M.matrix @ psi - probe.eigenvalue * psi
        return float(np.linalg.norm(r) / np.linalg.norm(psi))

    res = residual(GaugeField.landau(field_))
    res0 = residual(GaugeField.zero()) if compare_no_field else None
    return WeylResult(float(k), float(p), probe.eigenvalue, res, res0, grid.size)


# --------------------------------------------------------------------------- scans

@dataclass
class ScanRow:
    L: float
    Y: float
    h: float
    lambda_min: float
    e_1d: float
    gap: float
    residual: float
    converged: bool


@dataclass
class SpectralVerdict:
    e: float
    e_converged: bool
    e_grid: float
    margin: float
    rows: list
    verdict: str
    reason: str = ""

    def to_record(self):
        return _record(self)

    def csv_rows(self):
        return [dict(L=r.L, h=r.h, lambda_min=r.lambda_min, e_1d=r.e_1d, gap=r.gap,
                     verdict=self.verdict) for r in self.rows]


def _box(T):
    if isinstance(T, (tuple, list)):
        return float(T[0]), float(T[1])
    return float(T), float(T)


def _classify(e, margin, finest_two, stable_tol):
    if any(not r.converged for r in finest_two):
        return "inconclusive", "an eigensolve did not reach its residual target"
    below = [r.lambda_min < e - margin for r in finest_two]
    if all(below):
        a, b = finest_two
        if abs(a.lambda_min - b.lambda_min) <= max(margin, stable_tol * abs(b.gap)):
            return "bound-state", "lambda_min below e - margin at the two finest truncations with a stable gap"
        return "inconclusive", "lambda_min below e - margin but the gap moves between truncations"
    if not any(below):
        return "none-detected", "lambda_min >= e - margin at the two finest truncations"
    return "inconclusive", "the two finest truncations disagree"


def threshold_scan(profile: Profile1D, strip: StripSpec, field_: FieldSpec, truncations, h: float,
                   sampler: str = "cell", cell_subdivisions: int = 4, tol: float = 1e-10,
                   max_iter: int = 300, seed: int = 0, stable_tol: float = 0.1,
                   e_threshold: Threshold | None = None) -> SpectralVerdict:
    """Lowest eigenvalue of the truncated problem against the threshold ``e``.

    ``truncations`` lists box half-sizes ``T`` (square ``[-T, T]^2``) or
    pairs ``(L, Y)`` for ``[-L, L] x [-Y, Y]``, in increasing order; each
    half-size must be a multiple of ``h``.  The margin is
    ``max(5 |e_h - e|, 1e-4 |e|)`` where ``e_h`` is the 1D threshold
    discretized on the same ``y`` lattice with the same sampler.
    """
    boxes = [_box(T) for T in truncations]
    if len(boxes) < 2:
        raise ValueError("need at least two truncations")
    if any(b1[0] < b0[0] or b1[1] < b0[1] for b0, b1 in zip(boxes, boxes[1:])):
        raise ValueError("truncations must be increasing")
    th = e_threshold if e_threshold is not None else threshold(profile)
    e = th.e
    V = strip_potential(profile, strip)
    gauge = GaugeField.landau(field_)
    rows = []
    e_grid = None
    for L, Y in boxes:
        t0 = time.perf_counter()
        grid = Grid2D(-L, L, -Y, Y, h)
        M = assemble_H(grid, gauge, V, sampler, cell_subdivisions)
        try:
            res = lowest_eigenpairs(M, 1, tol=tol, max_iter=max_iter, seed=seed)[0]
        except (np.linalg.LinAlgError, RuntimeError) as exc:  # pragma: no cover - defensive
            log.warning("eigensolve failed on box (%g, %g): %s", L, Y, exc)
            rows.append(ScanRow(L, Y, h, math.nan, e, math.nan, math.nan, False))
            continue
        e_grid = _transverse_ground(profile, grid, sampler, cell_subdivisions)[0]
        rows.append(ScanRow(L, Y, h, res.eigenvalue, e, res.eigenvalue - e, res.residual, res.converged))
        log.info("box %gx%g h=%g: lambda_min=%.10g (e=%.10g, residual %.2e, %.1f s)", L, Y, h, res.eigenvalue, e,
                 res.residual, time.perf_counter() - t0)
    margin = max(5.0 * abs(e_grid - e), 1e-4 * abs(e)) if e_grid is not None else math.nan
    if not th.converged:
        verdict, reason = "inconclusive", "the 1D threshold did not converge"
    elif e_grid is None:
        verdict, reason = "inconclusive", "no eigensolve succeeded"
    else:
        verdict, reason = _classify(e, margin, rows[-2:], stable_tol)
    return SpectralVerdict(e, th.converged, e_grid if e_grid is not None else math.nan, margin, rows, verdict,
                           reason)


# --------------------------------------------------------------------------- Hardy

@dataclass
class HardyEstimate:
    M: float
    raw: float
    tau: float
    h: float
    nodes: int
    residual: float
    converged: bool

    def to_record(self):
        return _record(self)


def hardy_estimate(field_: FieldSpec, tau: float, h: float, tol: float = 1e-10, seed: int = 0,
                   max_iter: int = 300) -> HardyEstimate:
    """Lowest eigenvalue of the natural-boundary magnetic Laplacian on ``|z| < tau``.

    Values at or below ``1e-10`` are reported as 0; the raw eigenvalue is
    kept alongside.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    grid = Grid2D.disk(tau, h, boundary="natural")
    M = assemble_H(grid, GaugeField.landau(field_))
    r = lowest_eigenpairs(M, 1, tol=tol, seed=seed, max_iter=max_iter)[0]
    if not r.converged:
        raise ConvergenceError(f"Hardy eigensolve stalled at residual {r.residual:.3e}")
    value = r.eigenvalue if r.eigenvalue > HARDY_ZERO else 0.0
    return HardyEstimate(value, r.eigenvalue, tau, h, grid.size, r.residual, r.converged)


# --------------------------------------------------------------------------- certificate

def ball_radius(strip: StripSpec, margin: float = 0.1) -> float:
    """Radius of a ball around the origin holding the strip's part over the
    deformation and its part inside ``B(0, c)``, enlarged by ``margin``."""
    curve = strip.curve
    r = curve.c
    if curve.is_deformed:
        xs = np.linspace(-curve.rho, curve.rho, 2001)
        r = max(r, float(np.max(np.hypot(xs, curve(xs)))) + strip.a)
    return (1.0 + margin) * r


@dataclass
class TheoremCertificate:
    reference: str
    delta: float
    variation: float
    flux_radii: list
    flux_values: list
    tau: float
    beta_g: float
    M: float
    C: float
    bound: float
    verdict: bool
    e: float
    errors: list = field(default_factory=list)

    def to_record(self):
        return _record(self)


def certificate(profile: Profile1D, strip: StripSpec, field_: FieldSpec, reference: str = "vertical",
                hardy_h: float | None = None, delta_resolution: float | None = None,
                variation_spacing: float | None = None, flux_samples: int = 8,
                e_threshold: Threshold | None = None, hardy: HardyEstimate | None = None) -> TheoremCertificate:
    """Evaluate the sufficient condition ``variation <= C / delta``.

    ``reference="vertical"`` compares the potential with the profile of
    ``y`` and uses vertical slices; ``"line_k"`` compares with the profile of
    the distance to the asymptotic line and slices orthogonally to it.  A
    true verdict predicts an empty discrete spectrum; a false one predicts
    nothing.
    """
    errors = []
    curve = strip.curve
    nan = math.nan

    def attempt(label, fn, default=nan):
        try:
            return fn()
        except Exception as exc:  # noqa: BLE001 - collected and reported together
            errors.append(f"{label}: {type(exc).__name__}: {exc}")
            return default

    if reference not in ("vertical", "line_k"):
        raise ValueError(f"unknown reference {reference!r}")
    scan_fn = slice_width_delta if reference == "vertical" else slice_width_delta_k
    delta = attempt("delta", lambda: scan_fn(strip, delta_resolution).delta)
    var = attempt("variation", lambda: variation_norm(profile, strip, reference, variation_spacing))
    radii = list(np.linspace(0.0, field_.c, flux_samples + 2)[1:-1])
    fluxes = [attempt("flux", lambda r=r: flux(field_, r)) for r in radii]
    tau = ball_radius(strip)
    th = e_threshold if e_threshold is not None else attempt("threshold", lambda: threshold(profile), None)
    e = th.e if th is not None else nan

    def beta():
        ys = np.linspace(-tau, tau, 2001)
        return float(np.min(th.ground(ys) ** 2))
    beta_g = attempt("beta_g", beta) if th is not None else nan
    if hardy is None:
        hh = hardy_h if hardy_h is not None else tau / 40.0
        hardy = attempt("hardy", lambda: hardy_estimate(field_, tau, hh), None)
    M = hardy.M if hardy is not None else nan
    c = max(curve.c, field_.c)
    if errors or not (tau > c):
        if not tau > c:
            errors.append(f"tau={tau} does not exceed c={c}")
        C = nan
    else:
        C = min(M * math.sqrt(tau**2 - c**2) / 2.0, 1.0 / (8.0 * tau))
    bound = C / delta if (math.isfinite(C) and delta > 0) else nan
    verdict = bool(math.isfinite(bound) and var <= bound)
    return TheoremCertificate(reference, float(delta), float(var), radii, fluxes, float(tau), float(beta_g),
                              float(M), float(C), float(bound), verdict, float(e), errors)


def weaken_until_certified(profile: Profile1D, strip: StripSpec, field_: FieldSpec, reference: str = "vertical",
                           factor: float = 0.5, max_steps: int = 60, **kw):
    """Scale the profile depth by ``factor`` until the certificate holds.

    Returns the weakened profile, its certificate and the number of steps.
    The Hardy estimate does not depend on the profile and is computed once.
    """
    cert = certificate(profile, strip, field_, reference, **kw)
    if cert.errors:
        raise RuntimeError("certificate ingredients failed: " + "; ".join(cert.errors))
    hardy = HardyEstimate(cert.M, cert.M, cert.tau, math.nan, 0, 0.0, True)
    kw = {k: v for k, v in kw.items() if k not in ("hardy", "e_threshold")}
    steps = 0
    while not cert.verdict:
        if not cert.C > 0:
            raise RuntimeError("certificate constant is zero; weakening the profile cannot help")
        if steps >= max_steps:
            raise RuntimeError(f"certificate still false after {steps} weakenings")
        profile = profile.scaled(factor)
        steps += 1
        cert = certificate(profile, strip, field_, reference, hardy=hardy, **kw)
    return profile, cert, steps


# --------------------------------------------------------------------------- rotation

@dataclass
class RotationCheck:
    k: float
    spacings: list
    eigen_H: list
    eigen_H0: list
    discrepancies: list
    ratios: list
    truncation: str

    @property
    def max_discrepancy(self) -> list:
        return [max(d) for d in self.discrepancies]

    def to_record(self):
        return _record(self)


def _rotation_grids(k: float, half: float, h: float):
    if k == 0.0:
        g = Grid2D.square(half, h)
        return g, g, "square"
    if abs(k) == 1.0:
        # the rotated square is the diamond |x|+|y| < half sqrt2; with the
        # diamond's spacing h/sqrt2 its edges run through lattice points
        g0 = Grid2D.square(half, h)
        n = int(round(half / h))
        hd = h / math.sqrt(2.0)
        return g0, Grid2D.diamond(2 * n * hd, hd), "square/diamond"
    g = Grid2D.disk(half, h, boundary="dirichlet")
    return g, g, "disk"


def rotation_equivalence(profile: Profile1D, strip: StripSpec, field_: FieldSpec, spacings, half: float = 3.0,
                         m: int = 3, tol: float = 1e-12, seed: int = 0) -> RotationCheck:
    """Lowest ``m`` eigenvalues of the problem over the tilted curve against
    those of the rotated problem, for each spacing.

    The rotated problem is assembled on ``[-half, half]^2``.  For slope
    ``+-1`` the original problem uses the exactly rotated box (a diamond);
    for slope 0 both use the same square; otherwise both use the disk of
    radius ``half``, which rotation preserves but the lattice only
    approximates.
    """
    k = strip.curve.k
    for h in spacings:
        if abs(half / h - round(half / h)) > 1e-9 * half / h:
            raise ValueError(f"half={half} is not a multiple of the spacing {h}")
    eH, e0, disc, ratios = [], [], [], []
    label = ""
    for h in spacings:
        g0, gH, label = _rotation_grids(k, half, h)
        M0 = assemble_H(g0, GaugeField.rotated(field_, k), rotated_strip_potential(profile, strip))
        MH = assemble_H(gH, GaugeField.landau(field_), strip_potential(profile, strip))
        r0 = lowest_eigenpairs(M0, m, tol=tol, seed=seed)
        rH = lowest_eigenpairs(MH, m, tol=tol, seed=seed)
        if not all(r.converged for r in r0 + rH):
            raise ConvergenceError(f"rotation check eigensolve did not converge at h={h}")
        a = [r.eigenvalue for r in rH]
        b = [r.eigenvalue for r in r0]
        eH.append(a)
        e0.append(b)
        disc.append([abs(x - y) / max(abs(x), 1e-300) for x, y in zip(a, b)])
    for d0, d1 in zip(disc, disc[1:]):
        ratios.append([x / y if y > 0 else math.inf for x, y in zip(d0, d1)])
    return RotationCheck(k, list(spacings), eH, e0, disc, ratios, label)


# --------------------------------------------------------------------------- epsilon family

@dataclass
class EpsilonRow:
    eps: float
    e: float
    verdict_no_field: str
    lambda_no_field: float
    verdict_field: str | None
    lambda_field: float | None
    error: str = ""


def epsilon_scan(base: Profile1D, curve_strip: StripSpec, field_: FieldSpec, eps_list, truncations, h: float,
                 with_field: bool = True, workers: int = 1, **kw) -> list:
    """Verdicts for the family ``(1/eps) V(./eps)`` with and without the field.

    The strip half-width follows the profile support.  Failures at one ``eps``
    are recorded in its row and do not stop the scan.  ``workers > 1`` runs
    the ``eps`` points on a thread pool; row order is unchanged.
    """
    eps_list = list(eps_list)
    if any(e <= 0 for e in eps_list):
        raise ValueError("eps values must be positive")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps values must be decreasing")

    def one(eps):
        prof = base.with_eps(eps)
        strip = StripSpec(curve_strip.curve, prof.half_width)
        try:
            th = threshold(prof)
            v0 = threshold_scan(prof, strip, FieldSpec("zero", 0.0, field_.c), truncations, h, e_threshold=th, **kw)
            row = EpsilonRow(eps, th.e, v0.verdict, v0.rows[-1].lambda_min, None, None)
            if with_field and not field_.is_zero:
                v1 = threshold_scan(prof, strip, field_, truncations, h, e_threshold=th, **kw)
                row.verdict_field = v1.verdict
                row.lambda_field = v1.rows[-1].lambda_min
        except Exception as exc:  # noqa: BLE001 - isolate per-eps failures
            row = EpsilonRow(eps, math.nan, "inconclusive", math.nan, None, None, f"{type(exc).__name__}: {exc}")
        return row

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, eps_list))
    return [one(eps) for eps in eps_list]
