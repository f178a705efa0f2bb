"""Error quantification and the modal/quadratic-amplitude coupling
diagnostic.

The global error of a reduced run is the mass-weighted relative trajectory
error over all saved steps,

    sqrt(sum_t du(t)ᵀ M du(t)) / sqrt(sum_t u_ref(t)ᵀ M u_ref(t)),

and the coupling diagnostic compares the reconstructed amplitudes of the
quadratic-derivative columns against the products of the reconstructed
modal amplitudes.
"""

from dataclasses import dataclass, field

import numpy as np

from .basis import pair_list

__all__ = [
    "ErrorReport",
    "gre_m",
    "gre_m_trajectories",
    "reconstruct_amplitudes",
    "coupling_report",
]


@dataclass
class ErrorReport:
    """Per-method, per-mode-count table of global relative errors.

    cells maps (method, n_modes) to either a float (the error) or the string
    "diverged"; reduced_dofs maps the same key to the reduced dof count.
    """

    scenario: str
    dt: float
    t_end: float
    cells: dict = field(default_factory=dict)
    reduced_dofs: dict = field(default_factory=dict)

    def set(self, method, n_modes, value, reduced_dofs):
        self.cells[(method, n_modes)] = value
        self.reduced_dofs[(method, n_modes)] = reduced_dofs

    def methods(self):
        return sorted({m for m, _ in self.cells})

    def mode_counts(self):
        return sorted({n for _, n in self.cells})

    def to_csv(self, stream):
        methods = self.methods()
        stream.write("n_modes," + ",".join(methods) + "\n")
        stream.write(
            "# cells hold GRE_M (mass-weighted relative trajectory error) or 'diverged';"
            " reduced dof counts follow in parentheses\n"
        )
        for n in self.mode_counts():
            row = [str(n)]
            for m in methods:
                key = (m, n)
                if key not in self.cells:
                    row.append("")
                    continue
                val = self.cells[key]
                dofs = self.reduced_dofs[key]
                cell = val if isinstance(val, str) else f"{val:.6e}"
                row.append(f"{cell} ({dofs})")
            stream.write(",".join(row) + "\n")


def gre_m(u_test, u_ref, M):
    """Mass-weighted relative trajectory error of sampled displacement rows.

    Both inputs are (n_times, N) arrays on identical save-time grids; the sum
    runs over all rows including t = 0.
    """
    u_test = np.asarray(u_test, dtype=float)
    u_ref = np.asarray(u_ref, dtype=float)
    if u_test.shape != u_ref.shape:
        raise ValueError(f"trajectory shapes differ: {u_test.shape} vs {u_ref.shape}")
    du = u_test - u_ref
    num = np.einsum("ti,ti->", du, (M @ du.T).T)
    den = np.einsum("ti,ti->", u_ref, (M @ u_ref.T).T)
    if den <= 0.0:
        raise ValueError("reference trajectory has zero mass-weighted energy")
    return float(np.sqrt(num) / np.sqrt(den))


def gre_m_trajectories(test, ref, system_test, system_ref, M, grid_tol=1e-12):
    """GRE_M between two trajectories, lifting reduced states to full space."""
    if test.times.shape != ref.times.shape or np.any(
        np.abs(test.times - ref.times) > grid_tol
    ):
        raise ValueError("save-time grids do not match")
    u_test = np.array([system_test.lift(z) for z in test.states])
    u_ref = np.array([system_ref.lift(z) for z in ref.states])
    return gre_m(u_test, u_ref, M)


def reconstruct_amplitudes(u_history, V, theta, M, rank_tol=1e-10):
    """M-weighted least-squares amplitudes of modes and derivative columns.

    Projects each displacement sample onto the stacked raw columns
    [v_1 .. v_n, θ_11, θ_12, .., θ_nn] and returns (q, q_pairs, pairs) with
    q of shape (n_times, n) and q_pairs of shape (n_times, n_pairs).
    """
    u_history = np.atleast_2d(np.asarray(u_history, dtype=float))
    V = np.asarray(V, dtype=float)
    n = V.shape[1]
    R = np.hstack([V, theta.columns])
    MR = M @ R
    # solve in column-normalized variables for conditioning; the projection
    # itself is scale-equivariant
    scales = np.sqrt(np.einsum("ij,ij->j", R, MR))
    if np.any(scales == 0.0):
        raise ValueError("stacked basis contains a zero column")
    G = (R.T @ MR) / scales[:, None] / scales[None, :]
    # eigenvalues of the Gram matrix are squared singular values of the
    # normalized stack; rank_tol acts on the singular-value ratio
    w, Q = np.linalg.eigh(G)
    if w[0] < rank_tol**2 * w[-1]:
        bad = np.flatnonzero(np.abs(Q[:, 0]) > 0.5 * np.abs(Q[:, 0]).max())
        raise ValueError(
            "stacked basis is numerically rank deficient; dependent columns "
            f"involve indices {bad.tolist()} (0..{n - 1} are modes)"
        )
    rhs = (MR.T @ u_history.T) / scales[:, None]
    coeffs = (np.linalg.solve(G, rhs) / scales[:, None]).T
    return coeffs[:, :n], coeffs[:, n:], pair_list(n)


def coupling_report(q, q_pairs, pairs, floor_scale=1e-12):
    """Normalized discrepancy between derivative amplitudes and the products
    of modal amplitudes the quadratic map would impose.

    For each pair (i, j) the expected amplitude is q_i q_j (i < j) or
    q_i²/2 (i = j); the discrepancy is ||q_ij - c_ij|| / (||q_ij|| + ||c_ij||
    + floor).  The summary score is the energy-weighted mean over pairs.
    """
    q = np.asarray(q, dtype=float)
    q_pairs = np.asarray(q_pairs, dtype=float)
    floor = floor_scale * max(np.sqrt(np.mean(q**2)), np.finfo(float).tiny)
    per_pair = {}
    weights = []
    scores = []
    for col, (i, j) in enumerate(pairs):
        expected = 0.5 * q[:, i] ** 2 if i == j else q[:, i] * q[:, j]
        actual = q_pairs[:, col]
        denom = np.linalg.norm(actual) + np.linalg.norm(expected) + floor
        d = float(np.linalg.norm(actual - expected) / denom)
        w = float(np.linalg.norm(actual) ** 2 + np.linalg.norm(expected) ** 2)
        per_pair[(i, j)] = d
        weights.append(w)
        scores.append(d)
    weights = np.asarray(weights)
    scores = np.asarray(scores)
    total = weights.sum()
    summary = float(scores.mean()) if total == 0 else float((weights * scores).sum() / total)
    return per_pair, summary
