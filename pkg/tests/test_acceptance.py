"""Acceptance criteria, one test each; every test logs a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -s``.
"""

import math
import time

import numpy as np
import pytest
import scipy.sparse as sp

from conftest import ACCEPTANCE_LINES
from magstrip.assembly2d import (
    GaugeField,
    Grid2D,
    SmoothChi,
    assemble_H,
    gauge_transform,
    plaquette_flux_sum,
    rectangle_loop,
    strip_potential,
)
from magstrip.eigensolve import gershgorin_radius, lowest_eigenpairs
from magstrip.experiments import (
    hardy_estimate,
    log_slope,
    rotation_equivalence,
    threshold_scan,
    weaken_until_certified,
    weyl_residual,
)
from magstrip.fields import FieldSpec, flux, smooth_well, square_well, trapezoid_well
from magstrip.geometry import CurveSpec, StripSpec
from magstrip.spectra1d import threshold
from test_assembly2d import consistency_errors
from test_eigensolve import dirichlet_laplacian, random_hermitian
from test_spectra1d import square_well_energy

BUMP_CURVE = CurveSpec(0.0, "bump", 1.0, 1.0, 1.2)


def report(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_threshold_1d():
    oracle = square_well_energy(4.0, 1.0)
    t0 = time.perf_counter()
    result = threshold(square_well(4.0, 1.0))
    elapsed = time.perf_counter() - t0
    err = abs(result.e - oracle)
    report(1, result.converged and err <= 1e-6 and elapsed < 5.0,
           f"|e - oracle| = {err:.2e} (<= 1e-6), {elapsed:.2f} s (< 5 s)")


def test_criterion_02_consistency():
    errors = consistency_errors([32, 64, 128, 256])
    ratios = errors[:-1] / errors[1:]
    ok = bool(np.all((ratios >= 3.5) & (ratios <= 4.5)))
    report(2, ok, "error ratios " + ", ".join(f"{r:.3f}" for r in ratios) + " (in [3.5, 4.5])")


def test_criterion_03_gauge_invariance():
    grid = Grid2D.square(4.0, 8.0 / 128)
    gauge = GaugeField.landau(FieldSpec("disk", 1.0, 1.0))
    chi = SmoothChi.random(3)
    V = lambda x, y: 2.0 * np.exp(-(x * x + y * y))
    transformed = gauge_transform(assemble_H(grid, gauge, V), chi(*grid.nodes()))
    regauged = assemble_H(grid, gauge.with_gradient(chi), V)
    a = np.array([r.eigenvalue for r in lowest_eigenpairs(transformed, 5, tol=1e-12)])
    b = np.array([r.eigenvalue for r in lowest_eigenpairs(regauged, 5, tol=1e-12)])
    rel = float(np.max(np.abs(a - b) / np.abs(a)))
    report(3, rel <= 1e-10, f"max relative eigenvalue difference {rel:.2e} (<= 1e-10), grid {grid.nx}x{grid.ny}")


def test_criterion_04_weyl_quasimode():
    strip = StripSpec(BUMP_CURVE, 1.0)
    field_ = FieldSpec("disk", 1.0, 1.2)
    ks = [8.0, 16.0, 32.0, 64.0]
    results = [weyl_residual(trapezoid_well(4.0, 1.0), strip, field_, 1.0, k, h=0.1) for k in ks]
    slope = log_slope(ks, [r.residual for r in results])
    diff = max(abs(r.residual - r.residual_no_field) for r in results)
    report(4, -1.2 <= slope <= -0.8 and diff <= 1e-12,
           f"slope {slope:.4f} (in [-1.2, -0.8]), max |r_B - r_0| = {diff:.1e} (<= 1e-12)")


def test_criterion_05_straight_strip_no_bound_state():
    v = threshold_scan(trapezoid_well(4.0, 1.0), StripSpec(CurveSpec(), 1.0), FieldSpec(),
                       [(4, 5), (8, 5), (16, 5), (24, 5)], 0.05)
    gaps = [r.gap for r in v.rows]
    above = all(r.lambda_min >= v.e - 1e-3 for r in v.rows)
    decreasing = all(b < a for a, b in zip(gaps, gaps[1:]))
    ok = above and decreasing and gaps[-1] <= 5e-3 and all(r.converged for r in v.rows)
    report(5, ok, "gaps " + ", ".join(f"{g:.5f}" for g in gaps)
           + f" (decreasing, last <= 5e-3, all >= -1e-3), verdict {v.verdict}")


@pytest.fixture(scope="module")
def weak_profile_and_certificate():
    return weaken_until_certified(trapezoid_well(4.0, 1.0, 0.25), StripSpec(BUMP_CURVE, 0.25),
                                  FieldSpec("disk", 1.0, 1.2))


def test_criterion_06_geometric_bound_state():
    profile = trapezoid_well(4.0, 1.0, 0.25)
    t0 = time.perf_counter()
    v = threshold_scan(profile, StripSpec(BUMP_CURVE, profile.half_width), FieldSpec(), [3.0, 4.5, 6.0], 0.04)
    elapsed = time.perf_counter() - t0
    finest = v.rows[-1]
    size = f"{round(2 * finest.L / finest.h)}x{round(2 * finest.Y / finest.h)}"
    ok = v.verdict == "bound-state" and elapsed < 300
    report(6, ok, f"verdict {v.verdict}, lambda_min "
           + ", ".join(f"{r.lambda_min:.4f}" for r in v.rows)
           + f" vs e - margin = {v.e - v.margin:.4f}, finest grid {size}, {elapsed:.0f} s (< 300 s)")


def test_criterion_07_field_destroys_state(weak_profile_and_certificate):
    profile, cert, steps = weak_profile_and_certificate
    v = threshold_scan(profile, StripSpec(BUMP_CURVE, profile.half_width), FieldSpec("disk", 1.0, 1.2),
                       [3.0, 4.5, 6.0], 0.04)
    ok = cert.verdict and v.verdict == "none-detected" and flux(FieldSpec("disk", 1.0, 1.2), 1.2) != 0.0
    report(7, ok, f"certificate {cert.verdict} after {steps} halvings (variation {cert.variation:.3e} <= "
           f"C/delta {cert.bound:.3e}), scan verdict {v.verdict}, lambda_min {v.rows[-1].lambda_min:.4f} vs "
           f"e {v.e:.2e}")


def test_criterion_08_rotation_equivalence():
    profile = smooth_well(2.0, 1.0, 0.6)
    strip = StripSpec(CurveSpec(1.0, "bump", 0.5, 1.5, 2.5), profile.half_width)
    check = rotation_equivalence(profile, strip, FieldSpec("disk", 1.0, 2.5), [0.1, 0.05, 0.025], half=3.0, m=3)
    ratios = [r for level in check.ratios for r in level]
    ok = all(3.0 <= r <= 5.0 for r in ratios)
    report(8, ok, f"truncation {check.truncation}, ratios " + ", ".join(f"{r:.2f}" for r in ratios)
           + " (in [3, 5])")


def test_criterion_09_hardy_estimate():
    zero = hardy_estimate(FieldSpec(), 2.0, 0.25)
    disk = FieldSpec("disk", 1.0, 1.0)
    values = [hardy_estimate(disk, 2.0, h, tol=1e-12).M for h in (0.125, 0.0625, 0.03125)]
    two_digits = {float(f"{m:.2g}") for m in values}
    coarse = hardy_estimate(disk, 2.0, 0.25, tol=1e-12)
    dense = np.linalg.eigvalsh(assemble_H(Grid2D.disk(2.0, 0.25), GaugeField.landau(disk)).matrix.toarray())[0]
    dense_err = abs(coarse.M - dense)
    ok = zero.M <= 1e-10 and min(values) > 0 and len(two_digits) == 1 and dense_err <= 1e-8
    report(9, ok, f"M(B=0) = {zero.M:.1e}, M = " + ", ".join(f"{m:.5f}" for m in values)
           + f" (same to 2 digits), coarse vs dense {dense_err:.1e} (<= 1e-8)")


def test_criterion_10_flux():
    disk = FieldSpec("disk", 1.0, 1.0)
    closed = abs(flux(disk, 1.0) - 0.5)
    gauge = GaugeField.landau(disk)
    errors = []
    for n in (64, 128, 256, 512):
        grid = Grid2D.square(2.0, 4.0 / n)
        loop = rectangle_loop(grid, -1.5, 1.5, -1.5, 1.5)
        errors.append(abs(plaquette_flux_sum(gauge, loop, grid.h) - 2 * math.pi * flux(disk, 1.0)))
    ratios = [a / b for a, b in zip(errors, errors[1:])]
    ok = closed <= 1e-8 and all(3.5 <= r <= 4.5 for r in ratios)
    report(10, ok, f"|Phi(1) - 0.5| = {closed:.1e} (<= 1e-8), circulation errors "
           + ", ".join(f"{e:.2e}" for e in errors) + ", ratios " + ", ".join(f"{r:.2f}" for r in ratios)
           + " (target about 4)")


def eigensolver_corpus():
    """Matrices of dimension <= 200: random Hermitian, Laplacians and small magnetic assemblies."""
    corpus = {f"random_{n}": random_hermitian(n, n) for n in (5, 20, 64, 127, 200)}
    corpus["laplacian_14x14"] = dirichlet_laplacian(14, 1.0 / 15)
    strip = StripSpec(BUMP_CURVE, 1.0)
    V = strip_potential(trapezoid_well(4.0, 1.0), strip)
    corpus["square_disk_field"] = assemble_H(Grid2D.square(1.5, 0.25), GaugeField.landau(FieldSpec("disk", 1.0, 1.0)),
                                             V).matrix
    corpus["disk_natural_bump_field"] = assemble_H(Grid2D.disk(2.0, 0.25),
                                                   GaugeField.landau(FieldSpec("bump", 2.0, 1.0))).matrix
    corpus["regauged_square"] = assemble_H(
        Grid2D.square(2.0, 0.4),
        GaugeField.landau(FieldSpec("bump", 1.5, 1.0)).with_gradient(SmoothChi.random(1)), V).matrix
    return corpus


def test_criterion_11_eigensolver_corpus():
    worst_value, worst_residual, count = 0.0, 0.0, 0
    for name, H in eigensolver_corpus().items():
        dense_H = H.toarray() if sp.issparse(H) else H
        assert dense_H.shape[0] <= 200, name
        m = min(6, dense_H.shape[0])
        tol = 1e-12
        res = lowest_eigenpairs(H, m, tol=tol)
        exact = np.linalg.eigvalsh(dense_H)[:m]
        G = gershgorin_radius(dense_H)
        for r, w in zip(res, exact):
            worst_value = max(worst_value, abs(r.eigenvalue - w))
            residual = np.linalg.norm(dense_H @ r.vector - r.eigenvalue * r.vector)
            worst_residual = max(worst_residual, residual / (tol * G))
            ok_cert = r.converged and residual <= tol * G * 1.01
            if not ok_cert:
                worst_residual = math.inf
            count += 1
    ok = worst_value <= 1e-10 and worst_residual <= 1.01
    report(11, ok, f"{count} eigenpairs, max |lambda - dense| = {worst_value:.1e} (<= 1e-10), "
           f"max residual / (tol * G) = {worst_residual:.2f} (<= 1)")
