import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from magstrip.eigensolve import count_below, gershgorin_lower, gershgorin_radius, lowest_eigenpairs


def jacobi_eigenvalues(H: np.ndarray, tol: float = 1e-14, max_sweeps: int = 50) -> np.ndarray:
    """Cyclic Jacobi on the real symmetric embedding ``[[Re, -Im], [Im, Re]]``.

    Every eigenvalue of ``H`` appears twice in the embedding.
    """
    H = np.asarray(H)
    A = np.block([[H.real, -H.imag], [H.imag, H.real]]).astype(float)
    n = A.shape[0]
    scale = np.linalg.norm(A)
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                Ap, Aq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap, Aq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
    else:
        raise RuntimeError("Jacobi sweeps did not converge")
    return np.sort(np.diag(A))[::2]


def random_hermitian(n, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (X + X.conj().T)


def dirichlet_laplacian(N, h):
    main = 2.0 * np.ones(N) / h**2
    off = -np.ones(N - 1) / h**2
    T = sp.diags([off, main, off], [-1, 0, 1])
    I = sp.identity(N)
    return (sp.kron(T, I) + sp.kron(I, T)).tocsr()


def test_jacobi_oracle_against_numpy():
    H = random_hermitian(12, 1)
    assert np.allclose(jacobi_eigenvalues(H), np.linalg.eigvalsh(H), atol=1e-12)


def test_diagonal_example():
    res = lowest_eigenpairs(sp.diags([3.0, 1.0, 2.0]), m=1)
    assert res[0].eigenvalue == pytest.approx(1.0, abs=1e-14)
    assert res[0].converged


def test_laplacian_closed_form():
    N = 15
    h = 1.0 / (N + 1)
    M = dirichlet_laplacian(N, h)
    res = lowest_eigenpairs(M, m=4, tol=1e-12)
    lam = sorted(
        4 / h**2 * (math.sin(i * math.pi * h / 2) ** 2 + math.sin(j * math.pi * h / 2) ** 2)
        for i in range(1, N + 1) for j in range(1, N + 1)
    )[:4]
    assert [r.eigenvalue for r in res] == pytest.approx(lam, rel=1e-12)


def test_random_hermitian_matches_jacobi():
    H = random_hermitian(60, 7)
    reference = jacobi_eigenvalues(H)
    res = lowest_eigenpairs(sp.csr_matrix(H), m=5, tol=1e-12)
    assert np.allclose([r.eigenvalue for r in res], reference[:5], atol=1e-10)
    G = gershgorin_radius(H)
    for r in res:
        assert r.converged
        assert np.linalg.norm(H @ r.vector - r.eigenvalue * r.vector) <= 1e-12 * G * 1.01
        assert np.linalg.norm(r.vector) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("shift", ["auto", None, -50.0])
def test_shift_modes_agree(shift):
    H = random_hermitian(40, 3)
    res = lowest_eigenpairs(H, m=3, shift=shift, tol=1e-11, max_iter=600)
    assert np.allclose([r.eigenvalue for r in res], np.linalg.eigvalsh(H)[:3], atol=1e-9)


@given(st.integers(0, 10_000), st.integers(2, 30), st.integers(1, 4))
def test_residual_certificate_property(seed, n, m):
    H = random_hermitian(n, seed)
    res = lowest_eigenpairs(H, m=m, seed=seed)
    G = gershgorin_radius(H)
    exact = np.linalg.eigvalsh(H)
    for j, r in enumerate(res):
        assert r.converged
        assert np.linalg.norm(H @ r.vector - r.eigenvalue * r.vector) <= 1e-10 * G * 1.01
        assert r.eigenvalue == pytest.approx(exact[j], abs=1e-8 * max(G, 1))


def test_deterministic_for_seed():
    H = random_hermitian(50, 11)
    a = lowest_eigenpairs(H, m=2, seed=5)
    b = lowest_eigenpairs(H, m=2, seed=5)
    assert [r.eigenvalue for r in a] == [r.eigenvalue for r in b]


def test_unconverged_flagged():
    H = random_hermitian(80, 2)
    res = lowest_eigenpairs(H, m=3, shift=None, max_iter=1, tol=1e-14, basis_size=6)
    assert not all(r.converged for r in res)


def test_gershgorin_bounds():
    H = random_hermitian(30, 4)
    w = np.linalg.eigvalsh(H)
    assert gershgorin_lower(H) <= w[0]
    assert gershgorin_radius(H) >= np.max(np.abs(w))


def test_count_below_examples():
    assert count_below(sp.diags([-2.0, -1.0, 5.0]), 0.0) == 2
    N = 10
    h = 1.0 / (N + 1)
    M = dirichlet_laplacian(N, h)
    assert count_below(M, 1.0) == 0


def test_count_below_deep_well_matches_dense():
    N = 14
    h = 4.0 / (N + 1)
    xs = -2.0 + h * np.arange(1, N + 1)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    V = 12.0 * np.exp(-(X**2 + Y**2))
    M = dirichlet_laplacian(N, h) - sp.diags(V.ravel())
    dense = np.linalg.eigvalsh(M.toarray())
    for threshold in (-8.0, -4.0, 0.0, 2.0):
        assert count_below(M, threshold) == int(np.sum(dense < threshold))


def test_bad_arguments():
    with pytest.raises(ValueError):
        lowest_eigenpairs(np.ones((2, 3)))
    with pytest.raises(ValueError):
        lowest_eigenpairs(np.eye(3), m=0)
