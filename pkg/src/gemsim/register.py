"""Two path qubits: basis, beam splitters, branch projectors and Pauli observables.

Basis ordering is lexicographic in (a, b): |00>, |01>, |10>, |11>, where
``a`` is the arm of the first mass and ``b`` the arm of the second.
"""
import numpy as np

BRANCHES = ((0, 0), (0, 1), (1, 0), (1, 1))

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def branch_index(a: int, b: int) -> int:
    if a not in (0, 1) or b not in (0, 1):
        raise ValueError(f"path labels must be 0 or 1, got ({a}, {b})")
    return 2 * a + b


def path_projector(a: int) -> np.ndarray:
    """(id + sigma_z)/2 for arm 0, (id - sigma_z)/2 for arm 1."""
    if a not in (0, 1):
        raise ValueError(f"path label must be 0 or 1, got {a}")
    sign = 1 if a == 0 else -1
    return (I2 + sign * Z) / 2


def projector(a: int, b: int) -> np.ndarray:
    return np.kron(path_projector(a), path_projector(b))


def beamsplitter_prepare() -> np.ndarray:
    """Both masses in (|0> + |1>)/sqrt(2)."""
    return np.full(4, 0.5, dtype=complex)


def branch_phase_state(phases) -> np.ndarray:
    """(1/2) sum_ab e^{i phi_ab} |ab> for four phases in basis order."""
    return 0.5 * np.exp(1j * np.asarray(phases, dtype=float))


def witness_operator() -> np.ndarray:
    return np.kron(X, Z) + np.kron(Z, X)


def to_density(state) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if state.shape == (4,):
        return np.outer(state, state.conj())
    if state.shape == (4, 4):
        return state
    raise ValueError(f"expected a 4-vector or 4x4 matrix, got shape {state.shape}")


def final_beamsplitter(state) -> np.ndarray:
    """Recombine both interferometers (H x H); the output diagonal holds detector probabilities."""
    rho = to_density(state)
    hh = np.kron(HADAMARD, HADAMARD)
    return hh @ rho @ hh.conj().T


def single_qubit_state(rho: np.ndarray, mass: int) -> np.ndarray:
    """Reduced 2x2 state of mass 1 or mass 2."""
    r = np.asarray(rho).reshape(2, 2, 2, 2)
    if mass == 1:
        return np.einsum("ajbj->ab", r)
    if mass == 2:
        return np.einsum("jajb->ab", r)
    raise ValueError(f"mass must be 1 or 2, got {mass}")


def marginals(rho_out: np.ndarray) -> tuple:
    """((p0, p1) of mass 1, (p0, p1) of mass 2) from a post-beam-splitter density."""
    p = np.real(np.diag(rho_out)).reshape(2, 2)
    m1 = p.sum(axis=1)
    m2 = p.sum(axis=0)
    return (float(m1[0]), float(m1[1])), (float(m2[0]), float(m2[1]))


def reduced_density(amps, gram) -> np.ndarray:
    """Two-qubit state after tracing out a field that carries state |chi_ab> in branch ab.

    ``gram[i, j]`` is <chi_i|chi_j>, so rho_ij = c_i c_j^* <chi_j|chi_i>.
    """
    amps = np.asarray(amps, dtype=complex)
    gram = np.asarray(gram, dtype=complex)
    return np.outer(amps, amps.conj()) * gram.T
