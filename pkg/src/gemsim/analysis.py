"""Entanglement and interference diagnostics for the masses' two-qubit state, and the theory verdict."""
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from . import register

log = logging.getLogger(__name__)

NEGATIVE_EIG_PROJECT = 1e-10
NEGATIVE_EIG_REJECT = 1e-6


class NonPhysicalDensity(ValueError):
    pass


def check_density(rho, tol: float = 1e-8) -> np.ndarray:
    """Validate a 4x4 density matrix, projecting away small negative eigenvalues.

    Eigenvalues in (-1e-6, -1e-10) are clipped and the trace renormalised
    (the projection distance is logged). Anything further from physical
    raises :class:`NonPhysicalDensity`.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise NonPhysicalDensity(f"expected a 4x4 matrix, got {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise NonPhysicalDensity("density matrix has non-finite entries")
    herm_err = np.max(np.abs(rho - rho.conj().T))
    if herm_err > tol:
        raise NonPhysicalDensity(f"not Hermitian (max deviation {herm_err:.3e})")
    tr = np.trace(rho).real
    if abs(tr - 1) > tol:
        raise NonPhysicalDensity(f"trace {tr:.12g} != 1")
    rho = 0.5 * (rho + rho.conj().T)
    evals, evecs = np.linalg.eigh(rho)
    if evals[0] < -NEGATIVE_EIG_REJECT:
        raise NonPhysicalDensity(f"eigenvalue {evals[0]:.3e} is negative")
    if evals[0] < -NEGATIVE_EIG_PROJECT:
        clipped = np.clip(evals, 0, None)
        clipped /= clipped.sum()
        projected = (evecs * clipped) @ evecs.conj().T
        log.warning("projected density onto PSD cone, distance %.3e",
                    np.linalg.norm(projected - rho))
        rho = projected
    return rho


def partial_transpose(rho) -> np.ndarray:
    """Transpose on the second qubit."""
    return np.asarray(rho).reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)


def negativity(rho) -> float:
    rho = check_density(rho)
    evals = np.linalg.eigvalsh(partial_transpose(rho))
    return float(-np.sum(evals[evals < 0]))


def concurrence(rho) -> float:
    """Wootters concurrence."""
    rho = check_density(rho)
    yy = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))
    rho_tilde = yy @ rho.conj() @ yy
    # abs guards tiny negative round-off before the square root
    lam = np.sqrt(np.abs(np.sort(np.linalg.eigvals(rho @ rho_tilde).real)))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def witness_expectation(rho) -> float:
    """<X1 Z2 + Z1 X2>; exceeds 1 only on entangled states."""
    rho = check_density(rho)
    return float(np.real(np.trace(rho @ register.witness_operator())))


def entropies(rho):
    """(von Neumann entropy in bits, linear entropy 1 - Tr rho^2)."""
    rho = check_density(rho)
    evals = np.clip(np.linalg.eigvalsh(rho), 0, None)
    nz = evals[evals > 0]
    s = float(-np.sum(nz * np.log2(nz))) + 0.0
    s_lin = float(1.0 - np.real(np.trace(rho @ rho)))
    return s, s_lin


def trace_distance(rho, sigma) -> float:
    diff = np.asarray(rho) - np.asarray(sigma)
    diff = 0.5 * (diff + diff.conj().T)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff))))


@dataclass(frozen=True)
class EntanglementReport:
    negativity: float
    concurrence: float
    von_neumann_entropy: float
    linear_entropy: float
    witness_value: float

    @classmethod
    def of(cls, rho) -> "EntanglementReport":
        rho = check_density(rho)
        s, s_lin = entropies(rho)
        return cls(negativity(rho), concurrence(rho), s, s_lin, witness_expectation(rho))


def _bloch(theta, phi):
    return np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])


def _product_witness(angles):
    # for |n1> (x) |n2>, <X1 Z2 + Z1 X2> = x1 z2 + z1 x2
    n1 = _bloch(angles[0], angles[1])
    n2 = _bloch(angles[2], angles[3])
    return n1[0] * n2[2] + n1[2] * n2[0]


def separable_bound_check(grid_points: int = 9, tol: float = 1e-6):
    """Largest witness value over product states, by grid search then local refinement.

    Returns
    -------
    bound : float
    bloch_vectors : tuple of two arrays
        The maximising Bloch vectors of mass 1 and mass 2.
    """
    thetas = np.linspace(0, math.pi, grid_points)
    phis = np.linspace(0, 2 * math.pi, 2 * grid_points - 1)[:-1]
    starts = sorted(itertools.product(thetas, phis, thetas, phis),
                    key=lambda a: -_product_witness(a))[:5]
    best = None
    for x0 in starts:
        res = minimize(lambda a: -_product_witness(a), np.array(x0), method="BFGS",
                       options={"gtol": 1e-12})
        if best is None or res.fun < best.fun:
            best = res
    bound = -float(best.fun)
    if not np.isfinite(bound) or abs(bound - 1.0) > tol:
        raise ArithmeticError(f"separable bound search did not converge to 1 (got {bound:.12g})")
    return bound, (_bloch(best.x[0], best.x[1]), _bloch(best.x[2], best.x[3]))


def interference_probabilities(phi11: float, tol: float = 1e-9):
    """(p0, p1) for either mass when only the 11 branch carries phase phi11.

    The closed form 1/2 (1 + cos^2(phi11/2)) is checked against the Born
    rule on the recombined state before being returned.
    """
    p0 = 0.5 * (1 + math.cos(phi11 / 2) ** 2)
    rho_out = register.final_beamsplitter(register.branch_phase_state([0, 0, 0, phi11]))
    (born0, _), (born0_2, _) = register.marginals(rho_out)
    if abs(born0 - p0) > tol or abs(born0_2 - p0) > tol:
        raise ArithmeticError(f"closed form p0={p0} disagrees with Born rule {born0}, {born0_2}")
    return p0, 1 - p0


THEORY_TAGS = (
    "quantum-linearized",
    "semiclassical-einstein",
    "semiclassical-hamiltonian-average",
    "collapse-penrose",
    "induced-gravity",
)


@dataclass(frozen=True)
class PredictionRecord:
    tag: str
    reduced_state: Optional[np.ndarray]
    phases: dict
    entangling: bool
    notes: str
    metadata: dict = None

    def __post_init__(self):
        if self.tag not in THEORY_TAGS:
            raise ValueError(f"unknown theory tag {self.tag!r}")

    @property
    def negativity(self) -> Optional[float]:
        return None if self.reduced_state is None else negativity(self.reduced_state)

    @property
    def witness(self) -> Optional[float]:
        return None if self.reduced_state is None else witness_expectation(self.reduced_state)


def make_record(tag, rho, phases, notes, threshold: float = 1e-10, metadata=None) -> PredictionRecord:
    """Build a record whose ``entangling`` flag is derived from the state, never asserted."""
    entangling = False if rho is None else negativity(rho) > threshold
    return PredictionRecord(tag, rho, phases, entangling, notes, metadata or {})


@dataclass(frozen=True)
class Verdict:
    witness_value: float
    entangled: bool
    consistent_theories: tuple
    inconsistent_theories: tuple


def verdict(observed_witness: float, predictions, margin: float = 1e-6,
            match_tol: float = 1e-2) -> Verdict:
    """Which theory classes survive an observed witness value.

    A value at or below the separable bound 1 (+ margin) rules nothing out.
    Above it, every theory predicting no entanglement is ruled out, and a
    theory predicting entanglement survives only if its predicted witness
    matches the observation within ``match_tol``.
    """
    by_tag = {p.tag: p for p in predictions}
    missing = [t for t in THEORY_TAGS if t not in by_tag]
    if missing:
        raise ValueError(f"predictions missing theory tags: {missing}")
    entangled = observed_witness > 1 + margin
    consistent, inconsistent = [], []
    for tag in THEORY_TAGS:
        rec = by_tag[tag]
        if not entangled:
            ok = True
        elif not rec.entangling:
            ok = False
        else:
            ok = rec.witness is not None and abs(rec.witness - observed_witness) <= match_tol
        (consistent if ok else inconsistent).append(tag)
    return Verdict(observed_witness, entangled, tuple(consistent), tuple(inconsistent))
