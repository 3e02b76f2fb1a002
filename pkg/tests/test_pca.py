import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import ortho_group

from bioclust.pca import PcaModel, jacobi_eigh, pca_fit, pca_transform


def random_matrix(seed):
    rng = np.random.default_rng(seed)
    n, d = int(rng.integers(10, 60)), int(rng.integers(2, 10))
    # random per-column scales so eigenvalues are spread out
    return rng.normal(size=(n, d)) * rng.uniform(0.1, 5, size=d) + rng.normal(size=d)


def test_single_direction():
    X = np.zeros((20, 3))
    X[:, 0] = np.linspace(-3, 5, 20)
    m = pca_fit(X, 2)
    assert m.explained_variance_ratio[0] == pytest.approx(1.0, abs=1e-12)
    assert m.explained_variance_ratio[1] == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(m.components[0], [1, 0, 0], atol=1e-12)


def test_axis_gaussian_ratios():
    X = np.random.default_rng(0).multivariate_normal([0, 0], [[2, 0], [0, 1]], size=10_000)
    m = pca_fit(X, 2)
    assert m.explained_variance_ratio == pytest.approx([2 / 3, 1 / 3], abs=0.02)
    assert abs(m.components[0, 0]) > 0.99 and abs(m.components[1, 1]) > 0.99


def test_sign_convention():
    m = pca_fit(random_matrix(3), 2)
    for row in m.components:
        assert row[np.argmax(np.abs(row))] > 0


def test_argument_checks():
    with pytest.raises(ValueError):
        pca_fit(np.zeros((1, 3)))
    with pytest.raises(ValueError):
        pca_fit(np.zeros((5, 3)), 4)
    with pytest.raises(ValueError):
        pca_fit(np.zeros((5, 3)), 0)
    with pytest.raises(ValueError):
        pca_transform(pca_fit(random_matrix(1), 1), np.zeros((2, 99)))


def test_transform_of_means_is_zero():
    m = pca_fit(random_matrix(2), 2)
    assert np.allclose(pca_transform(m, m.column_means), 0, atol=1e-12)


def test_model_round_trip():
    m = pca_fit(random_matrix(4), 2)
    back = PcaModel.from_dict(m.to_dict())
    assert np.array_equal(back.components, m.components)
    assert np.array_equal(back.column_means, m.column_means)


def test_jacobi_against_numpy():
    A = np.random.default_rng(5).normal(size=(9, 9))
    A = A @ A.T
    values, vectors = jacobi_eigh(A)
    assert np.allclose(np.sort(values), np.linalg.eigvalsh(A), rtol=1e-10, atol=1e-10)
    assert np.allclose(A @ vectors, vectors * values, atol=1e-9)
    with pytest.raises(ValueError):
        jacobi_eigh(np.array([[1.0, 2.0], [0.0, 1.0]]))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_model_invariants(seed):
    X = random_matrix(seed)
    d = X.shape[1]
    m = pca_fit(X, d)
    V = m.components
    assert np.allclose(V @ V.T, np.eye(d), atol=1e-9)
    assert np.all(m.explained_variance >= 0)
    assert np.all(np.diff(m.explained_variance) <= 1e-12)
    assert np.all((m.explained_variance_ratio >= 0) & (m.explained_variance_ratio <= 1))
    assert m.explained_variance_ratio.sum() == pytest.approx(1.0, abs=1e-9)
    # eigenvalues agree with an independent solver
    ref = np.linalg.eigvalsh(np.cov(X, rowvar=False))[::-1]
    assert np.allclose(m.explained_variance, ref, rtol=1e-9, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_score_variance_equals_eigenvalue(seed):
    X = random_matrix(seed)
    m = pca_fit(X, 2)
    scores = pca_transform(m, X)
    assert np.allclose(scores.var(0, ddof=1), m.explained_variance, atol=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_transform_matches_explicit_projection(seed):
    X = random_matrix(seed)
    m = pca_fit(X, 2)
    Xc = X - X.mean(0)
    P = m.components.T @ m.components  # projector onto the component subspace
    proj = Xc @ P
    scores = pca_transform(m, X)
    i, j = np.triu_indices(len(X), 1)
    assert np.allclose(np.linalg.norm(scores[i] - scores[j], axis=1),
                       np.linalg.norm(proj[i] - proj[j], axis=1), atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_rotation_equivariance(seed):
    X = random_matrix(seed)
    Q = ortho_group.rvs(X.shape[1], random_state=np.random.default_rng(seed))
    a, b = pca_fit(X, 2), pca_fit(X @ Q, 2)
    assert np.allclose(a.explained_variance_ratio, b.explained_variance_ratio, atol=1e-9)
    # rotated components agree up to sign when the top eigenvalues are distinct
    ev = pca_fit(X, X.shape[1]).explained_variance
    if np.all(np.abs(np.diff(ev[:3])) > 1e-6 * ev[0]):
        dots = np.abs(np.sum((a.components @ Q) * b.components, axis=1))
        assert np.allclose(dots, 1, atol=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_rank_p_optimality(seed, p):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(int(rng.integers(8, 20)), 4)) * [3, 2, 1, 0.5]
    n = X.shape[0]
    full = pca_fit(X, 4)
    m = pca_fit(X, p)
    Xc = X - X.mean(0)
    V = m.components.T
    err = np.sum((Xc - Xc @ V @ V.T) ** 2)
    # covariance uses 1/(n-1), so the residual is (n-1) times the discarded eigenvalues
    assert err == pytest.approx((n - 1) * full.explained_variance[p:].sum(), abs=1e-6)
    for _ in range(50):
        W, _ = np.linalg.qr(rng.normal(size=(4, p)))
        assert np.sum((Xc - Xc @ W @ W.T) ** 2) >= err - 1e-9
