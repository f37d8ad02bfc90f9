"""
Three-step entangling protocol U1^dagger U2 U1 on two path qubits and one field mode.

U1 = sum_ab P_ab (x) D(i sqrt(xi_ab)) displaces the field conditionally on the
branch, U2 = exp(i w a^dagger a) rotates it, and U1^dagger undoes the
displacement. Two backends are provided:

* an exact analytic one, where every branch stays a coherent state and the
  Weyl phases of composed displacements are tracked in the branch amplitude;
* a truncated-Fock one that builds the full state vector and applies the
  three operators as matrices. It is the brute-force oracle for the first.

The protocol only ever uses (mass projector) x (field operator) and pure
field operators; the two masses never couple directly.
"""
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import fockspace, register
from .config import ExperimentConfig


class NonElasticWarning(UserWarning):
    """The field labels still differ between branches, so phases are not pure branch phases."""

    def __init__(self, message, spread):
        super().__init__(message)
        self.spread = spread


@dataclass(frozen=True)
class GateParams:
    alpha0: complex
    xi: np.ndarray          # four non-negative shifts, basis order
    w: float
    phi_target: np.ndarray  # four phases, basis order

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        if xi.shape != (4,) or np.any(xi < 0) or not np.all(np.isfinite(xi)):
            raise ValueError(f"xi must be four finite non-negative numbers, got {self.xi!r}")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "phi_target", np.asarray(self.phi_target, dtype=float))
        object.__setattr__(self, "alpha0", complex(self.alpha0))

    @property
    def shifts(self) -> np.ndarray:
        """Complex displacement i sqrt(xi_ab) applied by U1 in each branch."""
        return 1j * np.sqrt(self.xi)

    @classmethod
    def from_phases(cls, alpha0, phi, scale: float) -> "GateParams":
        """xi_ab = phi_ab * scale and w = 1/scale, so that w xi_ab = phi_ab."""
        phi = np.asarray(phi, dtype=float)
        if scale <= 0:
            raise ValueError("scale must be positive")
        return cls(alpha0=alpha0, xi=phi * scale, w=1.0 / scale, phi_target=phi)


@dataclass(frozen=True)
class BranchState:
    """Four branch amplitudes c_ab, each tied to a product of coherent field states.

    ``labels`` has shape (4, n_modes). Any phase accumulated by a branch is
    folded into its amplitude.
    """

    amps: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex)
        labels = np.asarray(self.labels, dtype=complex)
        if labels.ndim == 1:
            labels = labels[:, None]
        if amps.shape != (4,) or labels.shape[0] != 4:
            raise ValueError("a branch state has exactly four branches")
        object.__setattr__(self, "amps", amps)
        object.__setattr__(self, "labels", labels)

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))

    def gram(self) -> np.ndarray:
        """gram[i, j] = <chi_i|chi_j>, the product of per-mode coherent overlaps."""
        li = self.labels[:, None, :]
        lj = self.labels[None, :, :]
        return np.exp(np.sum(fockspace.log_overlap(li, lj), axis=-1))

    def reduced_density(self) -> np.ndarray:
        return register.reduced_density(self.amps, self.gram())

    def label_spread(self) -> float:
        diffs = self.labels[:, None, :] - self.labels[None, :, :]
        return float(np.max(np.sqrt(np.sum(np.abs(diffs) ** 2, axis=-1))))


def initial_state(alpha0) -> BranchState:
    """State right after the first beam splitters, field in |alpha0>."""
    return BranchState(register.beamsplitter_prepare(), np.full((4, 1), complex(alpha0)))


def _displace(state: BranchState, shifts) -> BranchState:
    # D(beta)|gamma> = exp(i Im(beta gamma^*)) |gamma + beta>
    shifts = np.asarray(shifts, dtype=complex)[:, None]
    weyl = np.sum(np.imag(shifts * np.conj(state.labels)), axis=1)
    return BranchState(state.amps * np.exp(1j * weyl), state.labels + shifts)


def apply_U1(state: BranchState, params: GateParams, dagger: bool = False) -> BranchState:
    shifts = params.shifts
    return _displace(state, -shifts if dagger else shifts)


def apply_U2(state: BranchState, w: float) -> BranchState:
    """Rotate every field label by e^{iw}; the coherent rotation law adds no phase."""
    return BranchState(state.amps, state.labels * np.exp(1j * w))


def run_protocol(params: GateParams):
    """Exact U1^dagger U2 U1 |phi_0>; returns the final BranchState and the masses' reduced state."""
    state = initial_state(params.alpha0)
    state = apply_U1(state, params)
    state = apply_U2(state, params.w)
    state = apply_U1(state, params, dagger=True)
    return state, state.reduced_density()


def visited_peak(params: GateParams) -> float:
    """Largest coherent-label magnitude the protocol passes through."""
    state = initial_state(params.alpha0)
    peak = np.max(np.abs(state.labels))
    for step in (lambda s: apply_U1(s, params),
                 lambda s: apply_U2(s, params.w),
                 lambda s: apply_U1(s, params, dagger=True)):
        state = step(state)
        peak = max(peak, np.max(np.abs(state.labels)))
    return float(peak)


def run_protocol_numeric(params: GateParams, n_max: int = None, tol_trunc: float = fockspace.TOL_TRUNC,
                         tol_norm: float = 1e-9, return_norms: bool = False):
    """Brute-force protocol on the (4 x (n_max+1))-dimensional truncated space.

    Raises
    ------
    fockspace.CutoffTooSmall
        If the initial coherent state, a displacement, or the final norm
        does not fit under ``n_max``.
    """
    if n_max is None:
        n_max = fockspace.default_cutoff(visited_peak(params))
    field0 = fockspace.coherent_coeffs(params.alpha0, n_max, tol_trunc)
    psi = np.outer(register.beamsplitter_prepare(), field0.coeffs)
    # cutoff adequacy is audited on the evolving state's norm, not per matrix
    forward = [fockspace.displacement_matrix(s, n_max, tol_unitary=math.inf).matrix for s in params.shifts]
    backward = [fockspace.displacement_matrix(-s, n_max, tol_unitary=math.inf).matrix for s in params.shifts]
    rotation = fockspace.rotation_matrix(params.w, n_max).matrix

    norms = [float(np.vdot(psi, psi).real)]
    psi = np.stack([forward[i] @ psi[i] for i in range(4)])
    norms.append(float(np.vdot(psi, psi).real))
    psi = psi @ rotation.T
    norms.append(float(np.vdot(psi, psi).real))
    psi = np.stack([backward[i] @ psi[i] for i in range(4)])
    norms.append(float(np.vdot(psi, psi).real))

    deficit = 1.0 - min(norms)
    if deficit > tol_norm:
        raise fockspace.CutoffTooSmall(
            f"n_max={n_max} loses norm {deficit:.3e} during the protocol", deficit)
    rho = psi @ psi.conj().T
    return (rho, norms) if return_norms else rho


def field_mass_entanglement(state: BranchState) -> float:
    """Linear entropy 1 - Tr(rho^2) of the masses' reduced state."""
    rho = state.reduced_density()
    return float(1.0 - np.real(np.trace(rho @ rho)))


def branch_phases(final: BranchState, tol: float = 1e-9) -> np.ndarray:
    """Relative phases arg(c_ab / c_00) in (-pi, pi].

    Warns with :class:`NonElasticWarning` when the field labels differ by
    more than ``tol`` across branches, because then the masses are still
    entangled with the field and the phases are not the whole story.
    """
    spread = final.label_spread()
    if spread > tol:
        warnings.warn(NonElasticWarning(
            f"field not returned to a common state: max label spread {spread:.3e}", spread),
            stacklevel=2)
    rel = final.amps * np.conj(final.amps[0])
    phases = np.angle(rel)
    # np.angle returns -pi for the negative real axis; fold into (-pi, pi]
    return np.where(phases <= -math.pi, phases + 2 * math.pi, phases)


def newtonian_phase_rates(config: ExperimentConfig) -> np.ndarray:
    """G m^2 / (hbar d_ab) for each branch; zero for non-interacting pairs."""
    k = config.constants
    m = config.mass_kg
    return np.array([k.G * m * m / (k.hbar * d) for d in config.distances])


def newtonian_phases(config: ExperimentConfig) -> np.ndarray:
    """phi_ab from both the G m^2/(hbar d) and the (m/m_P)^2 c/d forms, checked against each other."""
    k = config.constants
    m, t = config.mass_kg, config.interaction_time_s
    if m <= 0:
        raise ValueError("mass must be positive")
    if t < 0:
        raise ValueError("interaction time must be non-negative")
    if any(d <= 0 for d in config.distances):
        raise ValueError("branch distances must be positive")
    direct = newtonian_phase_rates(config) * t
    planck = np.array([config.planck_ratio_sq * k.c / d * t for d in config.distances])
    scale = np.maximum(np.abs(direct), np.finfo(float).tiny)
    mismatch = np.max(np.abs(direct - planck) / scale)
    if mismatch > 1e-12:
        raise ArithmeticError(f"Planck-mass identity violated: relative mismatch {mismatch:.3e}")
    return direct


def split_scale(config: ExperimentConfig, phi: np.ndarray, split: str = None) -> float:
    """Scale s with xi_ab = s phi_ab, w = 1/s.

    * ``large-alpha``: s = |alpha0|^2, so w |alpha0| -> 0 and the rotation
      acts as a phase on the displaced branch.
    * ``physical``: max xi_ab equals (m/m_P)^2.
    * ``unit``: max xi_ab equals 0.5, small enough for the Fock backend.
    """
    split = split or config.field.split
    phi_max = float(np.max(np.abs(phi))) if len(phi) else 0.0
    if split == "large-alpha":
        r2 = abs(config.alpha0) ** 2
        if r2 < 1.0:
            raise ValueError("large-alpha split needs |alpha0| >= 1")
        return r2
    if phi_max == 0.0:
        return 1.0
    if split == "physical":
        return config.planck_ratio_sq / phi_max
    if split == "unit":
        return 0.5 / phi_max
    raise ValueError(f"unknown split {split!r}")


def newtonian_params(config: ExperimentConfig, split: str = None) -> GateParams:
    phi = newtonian_phases(config)
    return GateParams.from_phases(config.alpha0, phi, split_scale(config, phi, split))


def large_alpha_params(alpha0, phi) -> GateParams:
    return GateParams.from_phases(alpha0, phi, abs(alpha0) ** 2)


def ideal_final_state(phi) -> np.ndarray:
    """(1/2) sum_ab e^{i phi_ab}|ab>, the masses' state when the field has returned elastically."""
    return register.branch_phase_state(phi)
