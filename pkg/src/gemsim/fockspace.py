"""
Truncated single-mode boson algebra.

Coherent states, displacement and number-rotation operators in the number
basis |0>, ..., |n_max>, together with the closed-form coherent overlap.
The truncated objects double as a brute-force oracle for the analytic
branch-coherent calculations elsewhere in the package.
"""
import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

TOL_TRUNC = 1e-10
TOL_UNITARY = 1e-8
PROTECTED_MARGIN = 10


class CutoffTooSmall(ValueError):
    """Raised when a number-basis cutoff cannot represent a state faithfully."""

    def __init__(self, message, deficit):
        super().__init__(message)
        self.deficit = deficit


def _amplitude(value) -> complex:
    z = complex(value)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"mode amplitude must be finite, got {value!r}")
    return z


def default_cutoff(alpha_peak) -> int:
    """Cutoff keeping the Poisson tail below ~1e-12 for labels up to ``alpha_peak``."""
    r = abs(alpha_peak)
    return int(math.ceil(r * r + 8.0 * r + 15.0))


@dataclass(frozen=True)
class FockVector:
    coeffs: np.ndarray

    @property
    def n_max(self) -> int:
        return len(self.coeffs) - 1

    @property
    def norm_deficit(self) -> float:
        return 1.0 - float(np.vdot(self.coeffs, self.coeffs).real)

    def inner(self, other: "FockVector") -> complex:
        """<self|other>."""
        if other.n_max != self.n_max:
            raise ValueError(f"cutoff mismatch: {self.n_max} vs {other.n_max}")
        return complex(np.vdot(self.coeffs, other.coeffs))

    def expectation(self, op: "ModeOperator") -> complex:
        return self.inner(apply(op, self))


@dataclass(frozen=True)
class ModeOperator:
    matrix: np.ndarray
    kind: str = "custom"

    @property
    def n_max(self) -> int:
        return self.matrix.shape[0] - 1

    def dagger(self) -> "ModeOperator":
        return ModeOperator(self.matrix.conj().T, self.kind)

    def __matmul__(self, other: "ModeOperator") -> "ModeOperator":
        if other.n_max != self.n_max:
            raise ValueError(f"cutoff mismatch: {self.n_max} vs {other.n_max}")
        kind = self.kind if self.kind == other.kind else "custom"
        return ModeOperator(self.matrix @ other.matrix, kind)

    def unitarity_defect(self, margin: int = PROTECTED_MARGIN) -> float:
        """Max-abs deviation of U^dagger U from identity on levels 0..n_max-margin."""
        p = max(self.n_max - margin, 0) + 1
        block = self.matrix[:, :p]
        gram = block.conj().T @ block
        return float(np.max(np.abs(gram - np.eye(p))))


def coherent_coeffs(alpha, n_max: int, tol_trunc: float = TOL_TRUNC) -> FockVector:
    """Number-basis expansion of the coherent state |alpha>.

    Coefficients are e^{-|alpha|^2/2} alpha^n / sqrt(n!), built by recursion
    so no factorial is formed explicitly.

    Raises
    ------
    CutoffTooSmall
        If the probability mass above ``n_max`` exceeds ``tol_trunc``.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    alpha = _amplitude(alpha)
    coeffs = np.empty(n_max + 1, dtype=complex)
    coeffs[0] = math.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, n_max + 1):
        coeffs[n] = coeffs[n - 1] * alpha / math.sqrt(n)
    vec = FockVector(coeffs)
    deficit = vec.norm_deficit
    if deficit > tol_trunc:
        raise CutoffTooSmall(
            f"n_max={n_max} too small for |alpha|={abs(alpha):.6g}: norm deficit {deficit:.3e}",
            deficit,
        )
    return vec


def fock_state(n: int, n_max: int) -> FockVector:
    coeffs = np.zeros(n_max + 1, dtype=complex)
    coeffs[n] = 1.0
    return FockVector(coeffs)


def annihilation(n_max: int) -> ModeOperator:
    return ModeOperator(np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), k=1).astype(complex), "ladder")


def creation(n_max: int) -> ModeOperator:
    return annihilation(n_max).dagger()


def number_operator(n_max: int) -> ModeOperator:
    return ModeOperator(np.diag(np.arange(n_max + 1, dtype=float)).astype(complex), "number")


def displacement_margin(beta, n_max: int) -> int:
    """Levels kept out of the unitarity check: D(beta)|n> spreads over ~2|beta| sqrt(n) levels."""
    r = abs(beta)
    return max(PROTECTED_MARGIN, int(math.ceil(r * r + 6.0 * r * math.sqrt(n_max + 1))))


def displacement_matrix(beta, n_max: int, tol_unitary: float = TOL_UNITARY,
                        margin: int = None) -> ModeOperator:
    """Displacement operator D(beta) = exp(beta a^dagger - beta^* a) truncated at ``n_max``.

    The generator is exponentiated on a space of twice the requested
    dimension and then cut back, so matrix elements on the protected
    levels are those of the untruncated operator. The leakage out of the
    kept block shows up as a unitarity defect, which is what the cutoff
    check measures. By default the check covers levels up to
    ``n_max - displacement_margin(beta, n_max)`` (at least level 0).
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    beta = _amplitude(beta)
    big = 2 * n_max + 1
    a = annihilation(big).matrix
    gen = beta * a.conj().T - beta.conjugate() * a
    full = expm(gen)
    op = ModeOperator(full[: n_max + 1, : n_max + 1], "displacement")
    if margin is None:
        margin = displacement_margin(beta, n_max)
    defect = op.unitarity_defect(margin)
    if defect > tol_unitary:
        raise CutoffTooSmall(
            f"n_max={n_max} too small for |beta|={abs(beta):.6g}: unitarity defect {defect:.3e}",
            defect,
        )
    return op


def rotation_matrix(theta: float, n_max: int) -> ModeOperator:
    """exp(i theta a^dagger a); maps |alpha> to |alpha e^{i theta}> with no extra phase."""
    n = np.arange(n_max + 1)
    return ModeOperator(np.diag(np.exp(1j * theta * n)), "rotation")


def overlap(alpha, beta) -> complex:
    """Closed-form <alpha|beta> for coherent states."""
    alpha = _amplitude(alpha)
    beta = _amplitude(beta)
    return cmath.exp(-0.5 * abs(alpha) ** 2 - 0.5 * abs(beta) ** 2 + alpha.conjugate() * beta)


def log_overlap(alpha, beta):
    """Logarithm of the coherent overlap; vectorised over numpy arrays."""
    alpha = np.asarray(alpha)
    beta = np.asarray(beta)
    return -0.5 * np.abs(alpha) ** 2 - 0.5 * np.abs(beta) ** 2 + np.conj(alpha) * beta


def apply(op: ModeOperator, v: FockVector) -> FockVector:
    if op.n_max != v.n_max:
        raise ValueError(f"dimension mismatch: operator n_max={op.n_max}, vector n_max={v.n_max}")
    return FockVector(op.matrix @ v.coeffs)
