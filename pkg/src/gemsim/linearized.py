"""
Multimode linearized-gravity field coupled to two static masses.

Per mode the Hamiltonian is (in units of hbar)

    H_k = omega_k a^dagger a - (lambda_k a^dagger + lambda_k^* a),
    lambda_k = g_k (e^{-i k.x_1} + e^{-i k.x_2}),

a linearly driven oscillator with the closed-form solution

    |vac> -> e^{i theta_k(t)} |beta_k(t)>,
    beta_k  = (lambda_k / omega_k)(1 - e^{-i omega_k t}),
    theta_k = (|lambda_k|^2 / omega_k)(t - sin(omega_k t) / omega_k).

Modes are labelled by wavevector; the angular part of each k-shell is
averaged analytically, so e^{i k.r} becomes sinc(k r) and a shell of radius
k carries V k^2 dk / (2 pi^2) modes. Summing the position-dependent part of
theta over shells reproduces the Newtonian phase G m^2 t / (hbar d).
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import register
from .config import Constants, ExperimentConfig, GridParams


class RegulatorExtrapolationError(ArithmeticError):
    pass


def _fsum(values) -> float:
    # exactly rounded, so the result does not depend on summation order
    return math.fsum(np.asarray(values, dtype=float).ravel())


def _sinc(x):
    return np.sinc(np.asarray(x) / np.pi)


@dataclass(frozen=True)
class ModeGrid:
    """Radial shells of field modes.

    ``weight`` counts the modes in each shell: V k^2 dk / (2 pi^2) times a
    smooth UV taper exp(-k / k_soft).
    """

    k: np.ndarray
    weight: np.ndarray
    volume: float
    c: float = Constants.c

    def __post_init__(self):
        k = np.asarray(self.k, dtype=float)
        weight = np.asarray(self.weight, dtype=float)
        if k.ndim != 1 or k.shape != weight.shape or len(k) == 0:
            raise ValueError("k and weight must be matching 1-D arrays")
        if np.any(k <= 0) or np.any(np.diff(k) <= 0):
            raise ValueError("k must be positive and strictly increasing")
        if np.any(weight <= 0):
            raise ValueError("weights must be positive")
        if self.volume <= 0:
            raise ValueError("volume must be positive")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "weight", weight)

    @property
    def omega(self) -> np.ndarray:
        return self.c * self.k

    def __len__(self):
        return len(self.k)


def build_grid(separations, params: GridParams = GridParams(), c: float = Constants.c) -> ModeGrid:
    """Midpoint grid in k with an exponential taper at k_soft = uv_factor / d_min.

    The spacing is kept below pi / d_max so sinc(k d) is never aliased for
    any separation in ``separations``; ``params.n_modes`` is a lower bound.
    """
    finite = [float(d) for d in separations if d is not None and math.isfinite(d)]
    if not finite or min(finite) <= 0:
        raise ValueError("need at least one positive finite separation")
    d_min, d_max = min(finite), max(finite)
    k_soft = params.uv_factor / d_min
    k_hard = params.taper_span * k_soft
    n = max(int(params.n_modes), math.ceil(k_hard * d_max / math.pi))
    dk = k_hard / n
    k = (np.arange(n) + 0.5) * dk
    weight = params.volume_m3 * k ** 2 * dk / (2 * math.pi ** 2) * np.exp(-k / k_soft)
    return ModeGrid(k, weight, params.volume_m3, c)


def coupling_g(k, m: float, volume: float, constants: Constants = Constants()):
    """g_k = m c sqrt(2 pi G / (hbar omega_k V)) in rad/s, omega_k = c k."""
    k = np.asarray(k, dtype=float)
    if np.any(k <= 0) or m <= 0 or volume <= 0:
        raise ValueError("k, m and volume must be positive")
    omega = constants.c * k
    return m * constants.c * np.sqrt(2 * math.pi * constants.G / (constants.hbar * omega * volume))


def driven_mode(lam: complex, omega: float, t: float):
    """Exact (displacement, phase) of a driven oscillator started in vacuum."""
    beta = lam / omega * (1 - np.exp(-1j * omega * t))
    theta = abs(lam) ** 2 / omega * (t - math.sin(omega * t) / omega)
    return complex(beta), float(theta)


def driven_mode_numeric(lam: complex, omega: float, t: float, n_max: int = 60):
    """Brute-force counterpart of :func:`driven_mode` by diagonalising the truncated H."""
    a = np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), k=1).astype(complex)
    ad = a.conj().T
    h = omega * ad @ a - (lam * ad + np.conj(lam) * a)
    evals, evecs = np.linalg.eigh(h)
    psi = evecs @ (np.exp(-1j * evals * t) * evecs[0].conj())
    beta = complex(np.vdot(psi, a @ psi))
    # e^{i theta}|beta> has <0|psi> = e^{i theta} e^{-|beta|^2/2}
    theta = float(np.angle(psi[0]))
    return beta, theta


def _secular_factor(omega, t):
    # t - sin(omega t)/omega, evaluated without cancellation at small omega t
    x = omega * t
    small = np.abs(x) < 1e-3
    safe = np.where(small, 1.0, x)
    return np.where(small, t * x ** 2 / 6 * (1 - x ** 2 / 20), t - np.sin(safe) / np.where(small, 1.0, omega))


def position_dependent_rate(d: float, m: float, grid: ModeGrid, constants: Constants = Constants()) -> float:
    """Mode sum of 2 g_k^2 sinc(k d) / omega_k in rad/s; tends to G m^2 / (hbar d)."""
    if d <= 0:
        raise ValueError("separation must be positive")
    if math.isinf(d):
        return 0.0
    g = coupling_g(grid.k, m, grid.volume, constants)
    return _fsum(grid.weight * 2 * g ** 2 / grid.omega * _sinc(grid.k * d))


def position_dependent_phase(d: float, m: float, grid: ModeGrid, t: float,
                             constants: Constants = Constants()) -> float:
    """Secular phase accumulated by a pair at separation ``d`` after time ``t``."""
    if d <= 0:
        raise ValueError("separation must be positive")
    if math.isinf(d):
        return 0.0
    g = coupling_g(grid.k, m, grid.volume, constants)
    return _fsum(grid.weight * 2 * g ** 2 / grid.omega * _sinc(grid.k * d) * _secular_factor(grid.omega, t))


def self_energy_rate(m: float, grid: ModeGrid, constants: Constants = Constants()) -> float:
    """Position-independent part of the secular rate, common to every branch."""
    g = coupling_g(grid.k, m, grid.volume, constants)
    return _fsum(grid.weight * 2 * g ** 2 / grid.omega)


def regulated_sinc_integral(d: float, eps: float) -> float:
    """int_0^inf sinc(k d) e^{-eps k} dk by adaptive quadrature."""
    k_split = math.pi / d
    head, _ = integrate.quad(lambda k: _sinc(k * d) * math.exp(-eps * k), 0.0, k_split,
                             epsabs=0.0, epsrel=1e-13, limit=200)
    k_end = k_split + 60.0 / eps
    # QAWO handles the sin(k d) oscillation in the tail
    tail, _ = integrate.quad(lambda k: math.exp(-eps * k) / (k * d), k_split, k_end,
                             weight="sin", wvar=d, epsabs=0.0, epsrel=1e-13, limit=2000)
    return head + tail


def richardson_sinc_integral(d: float, h: float = None) -> float:
    """int_0^inf sinc(k d) dk from regulators eps in {4h, 2h, h}, extrapolated to eps = 0."""
    h = h if h is not None else 1e-3 * d
    i4, i2, i1 = (regulated_sinc_integral(d, f * h) for f in (4, 2, 1))
    r2 = 2 * i2 - i4
    r1 = 2 * i1 - i2
    return (4 * r1 - r2) / 3


def continuum_rate(d: float, m: float, constants: Constants = Constants(), rtol: float = 1e-4,
                   return_quadrature: bool = False):
    """G m^2 / (hbar d), cross-checked against (2 G m^2 / (pi hbar)) int_0^inf sinc(k d) dk."""
    if d <= 0 or m <= 0:
        raise ValueError("separation and mass must be positive")
    closed = constants.G * m * m / (constants.hbar * d)
    quad = 2 * constants.G * m * m / (math.pi * constants.hbar) * richardson_sinc_integral(d)
    if abs(quad - closed) > rtol * closed:
        raise RegulatorExtrapolationError(
            f"quadrature {quad:.10e} vs closed form {closed:.10e} at d={d}")
    return (closed, quad) if return_quadrature else closed


@dataclass(frozen=True)
class MassConfiguration:
    """Two masses of equal mass; sites are (mass, arm) with mass in {1, 2}."""

    m: float
    distances: tuple            # d_ab in basis order; inf for non-interacting pairs
    arm_separations: tuple      # intra-interferometer separation of mass 1 and mass 2

    @classmethod
    def from_config(cls, config: ExperimentConfig) -> "MassConfiguration":
        return cls(config.mass_kg, config.distances, config.arm_pair)

    def site_distance(self, p, q) -> float:
        (mp, ap), (mq, aq) = p, q
        if mp == mq:
            return 0.0 if ap == aq else self.arm_separations[mp - 1]
        a, b = (ap, aq) if mp == 1 else (aq, ap)
        return self.distances[2 * a + b]

    def separations(self):
        return [d for d in tuple(self.distances) + tuple(self.arm_separations) if math.isfinite(d)]


def _source_correlations(cfg: MassConfiguration, k: np.ndarray) -> np.ndarray:
    """Angle-averaged <S_i^* S_j>(k) for branch sources S_ab = e^{-ik.x_1a} + e^{-ik.x_2b}."""
    sites = [((1, a), (2, b)) for a, b in register.BRANCHES]
    out = np.empty((4, 4, len(k)))
    for i in range(4):
        for j in range(i, 4):
            total = np.zeros(len(k))
            for p in sites[i]:
                for q in sites[j]:
                    r = cfg.site_distance(p, q)
                    if r == 0.0:
                        total += 1.0
                    elif math.isfinite(r):
                        total += _sinc(k * r)
            out[i, j] = out[j, i] = total
    return out


@dataclass(frozen=True)
class PolaronSolution:
    phases: np.ndarray          # position-dependent secular phase per branch (rad)
    self_phase: float           # position-independent phase, identical in every branch (rad)
    gram: np.ndarray            # <chi_i|chi_j> of the multimode field states
    mean_quanta: np.ndarray     # sum_k |beta_k|^2 per branch
    displacement_sq: np.ndarray  # angle-averaged |beta_k|^2, shape (4, n_modes)


def polaron_solution(cfg: MassConfiguration, grid: ModeGrid, t: float,
                     constants: Constants = Constants()) -> PolaronSolution:
    """Exact field state of each branch after time ``t`` with both masses held still."""
    if t < 0:
        raise ValueError("time must be non-negative")
    omega = grid.omega
    g2 = coupling_g(grid.k, cfg.m, grid.volume, constants) ** 2
    corr = _source_correlations(cfg, grid.k)
    secular = _secular_factor(omega, t)
    # |beta_k|^2 = |f_k|^2 |S|^2 with |f_k|^2 = (g/omega)^2 |1 - e^{-i omega t}|^2
    f2 = g2 / omega ** 2 * 2 * (1 - np.cos(omega * t))
    wf2 = grid.weight * f2

    phases = np.empty(4)
    mean = np.empty(4)
    log_gram = np.empty((4, 4))
    for i in range(4):
        # diagonal correlation is 2 + 2 sinc(k d_i); only the sinc part depends on position
        phases[i] = _fsum(grid.weight * g2 / omega * (corr[i, i] - 2.0) * secular)
        mean[i] = _fsum(wf2 * corr[i, i])
        for j in range(4):
            # angle-averaged Im(beta_j^* beta_i) vanishes, so the overlap is real
            log_gram[i, j] = _fsum(wf2 * (corr[i, j] - 0.5 * corr[i, i] - 0.5 * corr[j, j]))
    self_phase = _fsum(grid.weight * g2 / omega * 2.0 * secular)
    return PolaronSolution(phases, self_phase, np.exp(log_gram), mean, f2[None, :] * corr[np.arange(4), np.arange(4)])


@dataclass(frozen=True)
class PolaronBranches:
    amps: np.ndarray
    gram: np.ndarray

    def reduced_density(self) -> np.ndarray:
        return register.reduced_density(self.amps, self.gram)


def evolve_branches(config: ExperimentConfig, grid: ModeGrid = None, t: float = None):
    """Joint masses+field state after ``t`` and the masses' reduced density.

    The common self-energy phase is dropped as a global phase.
    """
    cfg = MassConfiguration.from_config(config)
    if grid is None:
        grid = build_grid(cfg.separations(), config.field.grid, config.constants.c)
    t = config.interaction_time_s if t is None else t
    sol = polaron_solution(cfg, grid, t, config.constants)
    state = PolaronBranches(0.5 * np.exp(1j * sol.phases), sol.gram)
    return state, state.reduced_density()


def residual_entanglement(config: ExperimentConfig, grid: ModeGrid = None, t: float = None) -> float:
    """Field-mass linear entropy 1 - Tr(rho^2) left in the masses after ``t``."""
    _, rho = evolve_branches(config, grid, t)
    return float(1.0 - np.real(np.trace(rho @ rho)))
