"""Shared linear-algebra services: SPD factorization with reusable factors,
symmetric generalized eigensolver, bordered (constrained singular) solves and
thin SVD.

All routines are deterministic for identical inputs. Eigenvector signs are
fixed so that the largest-magnitude entry of each vector is positive.
"""

import numpy as np
import scipy.linalg as la
import scipy.sparse as sps
import scipy.sparse.linalg as spsla

__all__ = [
    "FactorizationError",
    "EigenSolverError",
    "ConsistencyError",
    "SpdFactor",
    "factor_spd",
    "eig_gsym",
    "solve_bordered",
    "svd_thin",
]

# Below this size dense solvers are used throughout; desk-scale models stay
# well under it.
DENSE_EIG_LIMIT = 3000


class FactorizationError(Exception):
    """Raised when a matrix expected to be SPD is indefinite or singular."""

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class EigenSolverError(Exception):
    """Raised when the generalized eigensolver fails to converge."""


class ConsistencyError(Exception):
    """Raised when a singular system's right-hand side violates solvability."""

    def __init__(self, message, nullspace_component=None):
        super().__init__(message)
        self.nullspace_component = nullspace_component


def _as_square_array(A):
    if sps.issparse(A):
        if A.shape[0] != A.shape[1]:
            raise ValueError("matrix must be square")
        return A.tocsc(), True
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    return A, False


class SpdFactor:
    """Reusable factorization of a symmetric positive definite matrix.

    Sparse inputs are factorized by SuperLU without partial pivoting, which
    preserves the symmetric ordering and exposes negative pivots; dense
    inputs use a Cholesky factorization.
    """

    def __init__(self, A):
        A, is_sparse = _as_square_array(A)
        self.shape = A.shape
        if is_sparse:
            # diag_pivot_thresh=0 keeps the pivot order symmetric so that a
            # non-positive diagonal of U flags indefiniteness.
            try:
                lu = spsla.splu(
                    A,
                    diag_pivot_thresh=0.0,
                    permc_spec="MMD_AT_PLUS_A",
                    options={"SymmetricMode": True},
                )
            except RuntimeError as exc:
                raise FactorizationError(f"sparse factorization failed: {exc}") from exc
            diag = lu.U.diagonal()
            bad = np.flatnonzero(diag <= 0.0)
            if bad.size:
                raise FactorizationError(
                    f"matrix is not positive definite (pivot {bad[0]} is "
                    f"{diag[bad[0]]:.3e})",
                    pivot=int(bad[0]),
                )
            self._solve = lu.solve
        else:
            try:
                c, low = la.cho_factor(A, check_finite=False)
            except la.LinAlgError as exc:
                pivot = _cho_pivot_from_message(str(exc))
                raise FactorizationError(
                    f"matrix is not positive definite: {exc}", pivot=pivot
                ) from exc
            self._solve = lambda b: la.cho_solve((c, low), b, check_finite=False)

    def solve(self, rhs):
        """Solve A x = rhs for one vector or a matrix of right-hand sides."""
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape[0] != self.shape[0]:
            raise ValueError("right-hand side has wrong length")
        return self._solve(rhs)


def _cho_pivot_from_message(message):
    # scipy reports "N-th leading minor ... is not positive definite"
    for token in message.split():
        head = token.split("-")[0]
        if head.isdigit():
            return int(head) - 1
    return None


def factor_spd(A):
    """Factorize a symmetric positive definite matrix for repeated solves."""
    return SpdFactor(A)


def eig_gsym(K, M, k):
    """Lowest k eigenpairs of the symmetric generalized problem K φ = ω² M φ.

    Parameters
    ----------
    K, M : array or sparse matrix
        Symmetric positive (semi-)definite stiffness and SPD mass matrix.
    k : int
        Number of eigenpairs requested, 1 <= k <= N.

    Returns
    -------
    omega2 : ndarray, shape (k,)
        Squared angular eigenfrequencies in ascending order.
    phi : ndarray, shape (N, k)
        M-normalized eigenvectors, φ_iᵀ M φ_j = δ_ij.  The largest-magnitude
        entry of each vector is positive.
    """
    n = K.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= {n}, got {k}")
    if n <= DENSE_EIG_LIMIT:
        Kd = K.toarray() if sps.issparse(K) else np.asarray(K, dtype=float)
        Md = M.toarray() if sps.issparse(M) else np.asarray(M, dtype=float)
        Kd = 0.5 * (Kd + Kd.T)
        Md = 0.5 * (Md + Md.T)
        try:
            omega2, phi = la.eigh(Kd, Md, subset_by_index=[0, k - 1])
        except la.LinAlgError as exc:
            raise EigenSolverError(f"dense generalized eigensolver failed: {exc}") from exc
    else:
        try:
            omega2, phi = spsla.eigsh(
                sps.csc_matrix(K), k=k, M=sps.csc_matrix(M), sigma=0.0, which="LM"
            )
        except spsla.ArpackNoConvergence as exc:
            raise EigenSolverError(f"shift-invert iteration did not converge: {exc}") from exc
        order = np.argsort(omega2)
        omega2, phi = omega2[order], phi[:, order]

    # enforce M-normalization and the deterministic sign convention
    Mphi = M @ phi
    norms = np.sqrt(np.einsum("ij,ij->j", phi, Mphi))
    phi = phi / norms
    idx = np.argmax(np.abs(phi), axis=0)
    signs = np.sign(phi[idx, np.arange(k)])
    signs[signs == 0] = 1.0
    phi = phi * signs
    return omega2, phi


def solve_bordered(A, b, rhs, nullspace=None, consistency_tol=1e-8):
    """Solve a singular symmetric system subject to a one-dim constraint.

    Solves the augmented system ``[[A, b], [bᵀ, 0]] · [x; λ] = [rhs; 0]`` so
    that the returned x satisfies A x = rhs and bᵀ x = 0.  The system is
    solvable only if rhs is orthogonal to the nullspace of A; the nullspace
    direction defaults to b itself.

    Raises
    ------
    ConsistencyError
        If the nullspace component of rhs exceeds ``consistency_tol`` in a
        relative sense.
    """
    b = np.asarray(b, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    null = b if nullspace is None else np.asarray(nullspace, dtype=float)
    rhs_norm = np.linalg.norm(rhs)
    if rhs_norm > 0:
        comp = abs(null @ rhs) / (np.linalg.norm(null) * rhs_norm)
        if comp > consistency_tol:
            raise ConsistencyError(
                "right-hand side is not orthogonal to the nullspace "
                f"(relative component {comp:.3e})",
                nullspace_component=comp,
            )
    n = A.shape[0]
    if sps.issparse(A):
        col = sps.csc_matrix(b.reshape(-1, 1))
        aug = sps.bmat([[A, col], [col.T, None]], format="csc")
        sol = spsla.splu(aug).solve(np.concatenate([rhs, [0.0]]))
    else:
        aug = np.zeros((n + 1, n + 1))
        aug[:n, :n] = A
        aug[:n, n] = b
        aug[n, :n] = b
        sol = la.solve(aug, np.concatenate([rhs, [0.0]]), assume_a="sym")
    x = sol[:n]
    res = np.linalg.norm(A @ x - rhs)
    if rhs_norm > 0 and res > 1e-6 * rhs_norm:
        raise ConsistencyError(
            f"bordered solve residual {res:.3e} exceeds 1e-6·‖rhs‖; "
            "the bordering vector may not span the nullspace"
        )
    return x


def svd_thin(R):
    """Thin SVD, R = U Σ Vᵀ with singular values in descending order."""
    R = np.asarray(R, dtype=float)
    if not np.all(np.isfinite(R)):
        raise ValueError("input contains non-finite entries")
    U, s, Vt = np.linalg.svd(R, full_matrices=False)
    return U, s, Vt.T
