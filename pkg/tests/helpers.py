import numpy as np
from scipy.stats import ortho_group


def kronecker_pencil(eps, rng, mix=True):
    """``s E - A`` equivalent to ``blockdiag(L_eps_1, ..., L_eps_k)``.

    ``L_e`` is the e x (e+1) block ``s [I 0] - [0 I]``. Random orthogonal
    transforms hide the structure unless ``mix`` is False.
    """
    r = sum(eps)
    c = r + len(eps)
    E = np.zeros((r, c))
    A = np.zeros((r, c))
    i = j = 0
    for e in eps:
        E[i:i + e, j:j + e] += np.eye(e)
        A[i:i + e, j + 1:j + e + 1] += np.eye(e)
        i += e
        j += e + 1
    if mix:
        U = ortho_group.rvs(r, random_state=rng) if r > 1 else np.ones((1, 1))
        V = ortho_group.rvs(c, random_state=rng) if c > 1 else np.ones((1, 1))
        # a non-orthogonal row transform keeps the structure but tests conditioning
        S = np.diag(rng.uniform(0.5, 2.0, r)) if r else np.zeros((0, 0))
        E, A = U @ S @ E @ V, U @ S @ A @ V
    return E, A


def random_pencil(rng):
    """A random r x c pencil (r <= c) from one of several families."""
    kind = rng.integers(3)
    if kind == 0:
        eps = list(rng.integers(0, 5, size=rng.integers(1, 4)))
        if sum(eps) == 0:
            eps[0] = 1
        return kronecker_pencil(eps, rng)
    r = int(rng.integers(1, 8))
    c = int(r + rng.integers(1, 4))
    A = rng.normal(size=(r, c))
    if kind == 1:
        return rng.normal(size=(r, c)), A
    k = int(rng.integers(0, r + 1))
    E = rng.normal(size=(r, k)) @ rng.normal(size=(k, c))
    return E, A


def check_staircase(E0, A0, sc, orth_tol=1e-12, rec_tol=1e-10):
    r, c = E0.shape
    assert np.linalg.norm(sc.Q.T @ sc.Q - np.eye(r)) < orth_tol
    assert np.linalg.norm(sc.Z.T @ sc.Z - np.eye(c)) < orth_tol
    scale = max(np.linalg.norm(E0), np.linalg.norm(A0), 1.0)
    assert np.linalg.norm(sc.Q @ sc.E1 @ sc.Z.T - E0) < rec_tol * scale
    assert np.linalg.norm(sc.Q @ sc.A1 @ sc.Z.T - A0) < rec_tol * scale
    assert sum(sc.block_rows) == r and sum(sc.block_cols) == c
    for i in range(sc.n_blocks):
        ri, ci = sc.block_rows[i], sc.block_cols[i]
        assert ri <= ci
        if i + 1 < sc.n_blocks:
            assert sc.block_cols[i + 1] <= ri
        for j in range(i + 1):
            assert np.all(sc.E_block(i, j) == 0.0)
        for j in range(i):
            assert np.all(sc.A_block(i, j) == 0.0)
        if ri:
            Aii = sc.A_block(i, i)
            assert np.all(Aii[:, ri:] == 0.0)
            assert np.all(np.tril(Aii[:, :ri], -1) == 0.0)
            assert np.all(np.abs(np.diag(Aii)) > sc.threshold)
