"""
Experiment orchestration: single runs, rival-theory comparison, sweeps and audits.

Everything here returns plain dicts/lists with a fixed key order so the CLI
can serialise them byte-for-byte reproducibly.
"""
import math
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import analysis, fockspace, gatemodel, linearized, register, rivals
from .config import BRANCH_KEYS, ConfigError, ExperimentConfig, set_path


class SweepSpecError(ValueError):
    pass


def _matrix(rho) -> dict:
    rho = np.asarray(rho)
    return {"re": rho.real.tolist(), "im": rho.imag.tolist()}


def _by_branch(values) -> dict:
    return {k: float(v) for k, v in zip(BRANCH_KEYS, values)}


def _relative(phases) -> np.ndarray:
    phases = np.asarray(phases, dtype=float)
    return phases - phases[0]


def entangling_phase(phases) -> float:
    """phi_00 + phi_11 - phi_01 - phi_10; zero mod 2 pi means no entanglement."""
    p = np.asarray(phases, dtype=float)
    return float(p[0] + p[3] - p[1] - p[2])


def _entanglement_block(rho) -> dict:
    rep = analysis.EntanglementReport.of(rho)
    return {
        "negativity": rep.negativity,
        "concurrence": rep.concurrence,
        "von_neumann_entropy_bits": rep.von_neumann_entropy,
        "linear_entropy": rep.linear_entropy,
        "witness": rep.witness_value,
    }


def _interference_block(rho) -> dict:
    (p0, p1), (q0, q1) = register.marginals(register.final_beamsplitter(rho))
    return {"mass1_p0": p0, "mass1_p1": p1, "mass2_p0": q0, "mass2_p1": q1}


def gate_model_diagnostic(config: ExperimentConfig) -> dict:
    """Exact U1^dagger U2 U1 run for the Newtonian phases, compared with the elastic ideal."""
    params = gatemodel.newtonian_params(config)
    after_u1 = gatemodel.apply_U1(gatemodel.initial_state(params.alpha0), params)
    final, rho = gatemodel.run_protocol(params)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", gatemodel.NonElasticWarning)
        realized = gatemodel.branch_phases(final, config.tolerances.elastic)
    ideal = register.to_density(gatemodel.ideal_final_state(params.phi_target))
    return {
        "split": config.field.split,
        "alpha0": [params.alpha0.real, params.alpha0.imag],
        "w_rad": params.w,
        "xi": _by_branch(params.xi),
        "xi_planck_reading": config.planck_ratio_sq,
        "realized_phases_rad": _by_branch(realized),
        "label_spread": final.label_spread(),
        "elastic": final.label_spread() <= config.tolerances.elastic,
        "linear_entropy_after_u1": gatemodel.field_mass_entanglement(after_u1),
        "linear_entropy_final": gatemodel.field_mass_entanglement(final),
        "trace_distance_to_ideal": analysis.trace_distance(rho, ideal),
    }


def quantum_state(config: ExperimentConfig):
    """(reduced density, branch phases, extra report blocks) under linearized quantum gravity."""
    if config.field.mode == "single-mode":
        phases = gatemodel.newtonian_phases(config)
        rho = register.to_density(gatemodel.ideal_final_state(phases))
        return rho, phases, {"gate_model": gate_model_diagnostic(config)}
    cfg = linearized.MassConfiguration.from_config(config)
    grid = linearized.build_grid(cfg.separations(), config.field.grid, config.constants.c)
    sol = linearized.polaron_solution(cfg, grid, config.interaction_time_s, config.constants)
    state = linearized.PolaronBranches(0.5 * np.exp(1j * sol.phases), sol.gram)
    rho = state.reduced_density()
    extra = {"multimode": {
        "n_modes": len(grid),
        "k_max_per_m": float(grid.k[-1]),
        "self_energy_phase_rad": sol.self_phase,
        "mean_quanta": _by_branch(sol.mean_quanta),
        "residual_linear_entropy": float(1.0 - np.real(np.trace(rho @ rho))),
    }}
    return rho, sol.phases, extra


def run(config: ExperimentConfig) -> dict:
    rho, phases, extra = quantum_state(config)
    rho = analysis.check_density(rho)
    k = config.constants
    report = {
        "model": config.field.mode,
        "config": config.to_dict(),
        "planck_mass_kg": k.planck_mass,
        "planck_ratio_sq": config.planck_ratio_sq,
        "newtonian_rates_rad_per_s": _by_branch(gatemodel.newtonian_phase_rates(config)),
        "phases_rad": _by_branch(phases),
        "entangling_phase_rad": entangling_phase(phases),
        "reduced_density": _matrix(rho),
        "entanglement": _entanglement_block(rho),
        "interference": _interference_block(rho),
        "penrose_time_s": rivals.penrose_time(config.mass_kg, config.arm_separation_m, k),
    }
    report.update(extra)
    return report


def quantum_prediction(config: ExperimentConfig) -> analysis.PredictionRecord:
    rho, phases, _ = quantum_state(config)
    rel = _relative(phases)
    return analysis.make_record(
        "quantum-linearized", rho, {f"phi_{k}_rad": float(v) for k, v in zip(BRANCH_KEYS, rel)},
        "quantized linear field mediates a controlled phase; entangling unless "
        "phi00 + phi11 - phi01 - phi10 = 0 mod 2 pi",
        config.tolerances.negativity)


def predictions(config: ExperimentConfig) -> list:
    grid = None
    if any(math.isfinite(d) for d in config.distances):
        cfg = linearized.MassConfiguration.from_config(config)
        grid = linearized.build_grid(cfg.separations(), config.field.grid, config.constants.c)
    if grid is not None:
        averaged = rivals.hamiltonian_average_evolve(config, grid)
    else:
        # no interacting pair: the averaged Hamiltonian produces no phases
        averaged = analysis.make_record(
            "semiclassical-hamiltonian-average", register.to_density(register.branch_phase_state([0] * 4)),
            {f"phi_{k}_rad": 0.0 for k in BRANCH_KEYS}, "no interacting pairs",
            config.tolerances.negativity)
    return [
        quantum_prediction(config),
        rivals.semiclassical_evolve(config),
        averaged,
        rivals.collapse_evolve(config),
        rivals.induced_gravity_note(),
    ]


COMPARE_COLUMNS = ("tag", "phi_00_rad", "phi_01_rad", "phi_10_rad", "phi_11_rad",
                   "negativity", "witness", "entangling")


def compare(config: ExperimentConfig, observed_witness: float = None) -> dict:
    records = predictions(config)
    rows = []
    for rec in records:
        row = {"tag": rec.tag}
        for key in COMPARE_COLUMNS[1:5]:
            row[key] = rec.phases.get(key)
        row["negativity"] = rec.negativity
        row["witness"] = rec.witness
        row["entangling"] = int(rec.entangling)
        row["notes"] = rec.notes
        if rec.metadata:
            row["metadata"] = rec.metadata
        rows.append(row)
    out = {"config": config.to_dict(), "rows": rows}
    if observed_witness is not None:
        v = analysis.verdict(observed_witness, records, config.tolerances.witness_margin,
                             config.tolerances.witness_match)
        out["verdict"] = {
            "observed_witness": v.witness_value,
            "entangled": v.entangled,
            "consistent": list(v.consistent_theories),
            "inconsistent": list(v.inconsistent_theories),
        }
    return out


SWEEP_COLUMNS = ("interaction_time_s", "phi_11_rad", "entangling_phase_rad", "mass1_p0", "mass1_p1",
                 "witness", "negativity", "concurrence", "linear_entropy")
OBSERVABLES = ("interaction_time_s", "mass_kg", "phi_00_rad", "phi_01_rad", "phi_10_rad", "phi_11_rad",
               "entangling_phase_rad", "mass1_p0", "mass1_p1", "mass2_p0", "mass2_p1", "witness",
               "negativity", "concurrence", "linear_entropy", "von_neumann_entropy_bits",
               "penrose_time_s")
DERIVED_PARAMETERS = ("phi11_rad",)


def parse_sweep_spec(spec) -> tuple:
    """(parameter path, values, columns) from a sweep spec mapping."""
    if not isinstance(spec, dict):
        raise SweepSpecError("sweep spec must be an object")
    path = spec.get("parameter")
    if not isinstance(path, str) or not path:
        raise SweepSpecError("sweep.parameter must be a non-empty string")
    if "values" in spec:
        values = spec["values"]
        if not isinstance(values, list):
            raise SweepSpecError("sweep.values must be a list")
    elif "range" in spec:
        r = spec["range"]
        try:
            start, stop, num = float(r["start"]), float(r["stop"]), int(r["num"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SweepSpecError(f"sweep.range needs start, stop, num: {exc}") from None
        scale = r.get("scale", "linear")
        if scale == "linear":
            values = np.linspace(start, stop, num).tolist()
        elif scale == "log":
            if start <= 0 or stop <= 0:
                raise SweepSpecError("log range needs positive endpoints")
            values = np.geomspace(start, stop, num).tolist()
        else:
            raise SweepSpecError(f"sweep.range.scale must be linear or log, got {scale!r}")
    else:
        raise SweepSpecError("sweep spec needs values or range")
    if not values:
        raise SweepSpecError("sweep value list is empty")
    if any(isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) for v in values):
        raise SweepSpecError("sweep values must be finite numbers")
    columns = spec.get("columns", list(SWEEP_COLUMNS))
    unknown = [c for c in columns if c not in OBSERVABLES]
    if unknown or not columns:
        raise SweepSpecError(f"unknown sweep columns {unknown}; available: {list(OBSERVABLES)}")
    return path, [float(v) for v in values], list(columns)


def _column_name(path: str) -> str:
    return path.replace(".", "_")


def config_at(raw: dict, path: str, value: float) -> ExperimentConfig:
    if path == "phi11_rad":
        base = ExperimentConfig.from_dict(raw)
        d11 = base.distance(1, 1)
        if not math.isfinite(d11):
            raise ConfigError("branch_distances_m.11", "phi11_rad sweeps need a finite d11")
        rate = gatemodel.newtonian_phase_rates(base)[3]
        if value < 0:
            raise ConfigError("sweep.values", "phi11_rad must be >= 0")
        return base.with_time(value / rate)
    return ExperimentConfig.from_dict(set_path(raw, path, value))


def evaluate_point(raw: dict, path: str, value: float, columns) -> dict:
    config = config_at(raw, path, value)
    rho, phases, _ = quantum_state(config)
    rho = analysis.check_density(rho)
    obs = {
        "interaction_time_s": config.interaction_time_s,
        "mass_kg": config.mass_kg,
        "entangling_phase_rad": entangling_phase(phases),
        "penrose_time_s": rivals.penrose_time(config.mass_kg, config.arm_separation_m, config.constants),
    }
    obs.update({f"phi_{k}_rad": float(v) for k, v in zip(BRANCH_KEYS, phases)})
    obs.update(_interference_block(rho))
    obs.update(_entanglement_block(rho))
    row = {_column_name(path): value}
    row.update({c: obs[c] for c in columns})
    return row


def _evaluate_star(args):
    return evaluate_point(*args)


def sweep(raw: dict, spec, workers: int = 1) -> list:
    """One row per value, in the order given, regardless of ``workers``."""
    path, values, columns = parse_sweep_spec(spec)
    # validate every point before computing anything
    for v in values:
        config_at(raw, path, v)
    jobs = [(raw, path, v, columns) for v in values]
    if workers <= 1 or len(jobs) == 1:
        return [_evaluate_star(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_evaluate_star, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


# --- audits -----------------------------------------------------------------

def _audit(name, delta, tolerance, detail=None, error=None) -> dict:
    passed = error is None and delta is not None and math.isfinite(delta) and delta <= tolerance
    out = {"name": name, "delta": delta, "tolerance": tolerance, "passed": passed}
    if detail:
        out["detail"] = detail
    if error:
        out["error"] = error
    return out


def audit_backends(n_max: int = None) -> dict:
    worst = 0.0
    try:
        for alpha in (0.0, 1.0, 2.0):
            for xi in (0.1, 0.25, 0.5):
                for w in (0.5, 1.0, 2.0):
                    params = gatemodel.GateParams(alpha, [0, 0, 0, xi], w, [0, 0, 0, w * xi])
                    _, exact = gatemodel.run_protocol(params)
                    numeric = gatemodel.run_protocol_numeric(params, n_max)
                    worst = max(worst, analysis.trace_distance(exact, numeric))
    except fockspace.CutoffTooSmall as exc:
        return _audit("backend_equivalence", exc.deficit, 1e-6, error=f"cutoff-too-small: {exc}")
    return _audit("backend_equivalence", worst, 1e-6, "max trace distance over 27 (alpha, xi11, w) points")


def audit_overlap(n_max: int = None) -> dict:
    worst = 0.0
    try:
        for alpha in (0.0, 1.0, 2.0):
            for xi in (0.1, 0.5, 1.0):
                beta = alpha + 1j * math.sqrt(xi)
                n = n_max if n_max is not None else fockspace.default_cutoff(abs(alpha) + abs(beta))
                num = fockspace.coherent_coeffs(alpha, n).inner(fockspace.coherent_coeffs(beta, n))
                worst = max(worst, abs(abs(num) ** 2 - math.exp(-xi)))
    except fockspace.CutoffTooSmall as exc:
        return _audit("overlap_law", exc.deficit, 1e-9, error=f"cutoff-too-small: {exc}")
    return _audit("overlap_law", worst, 1e-9, "|<a|a+i sqrt(xi)>|^2 vs exp(-xi), truncated numerics")


def audit_polaron(n_max: int = None) -> dict:
    n = 60 if n_max is None else n_max
    lam, omega = 0.4 + 0.3j, 1.0
    worst = 0.0
    for x in np.linspace(0.0, 20.0, 41):
        b_exact, th_exact = linearized.driven_mode(lam, omega, x)
        b_num, th_num = linearized.driven_mode_numeric(lam, omega, x, n)
        dth = abs((th_num - th_exact + math.pi) % (2 * math.pi) - math.pi)
        worst = max(worst, abs(b_num - b_exact), dth)
    return _audit("polaron_vs_diagonalization", worst, 1e-7,
                  f"omega t in [0, 20], n_max={n}, max of displacement and phase error")


def audit_quadrature(config: ExperimentConfig) -> dict:
    seps = sorted({d for d in config.distances if math.isfinite(d)} | {1e-5, 1e-4, 1e-3})
    worst = 0.0
    for d in seps:
        try:
            closed, quad = linearized.continuum_rate(d, config.mass_kg, config.constants, rtol=math.inf,
                                                     return_quadrature=True)
        except ArithmeticError as exc:
            return _audit("quadrature_vs_closed_form", None, 1e-4, error=str(exc))
        worst = max(worst, abs(quad - closed) / closed)
    anchor = abs(linearized.richardson_sinc_integral(1.0) - math.pi / 2)
    return [
        _audit("quadrature_vs_closed_form", worst, 1e-4, f"separations {seps} m"),
        _audit("sinc_integral_anchor", anchor, 1e-6, "int_0^inf sin(x)/x dx = pi/2"),
    ]


def audit_grid(config: ExperimentConfig) -> dict:
    cfg = linearized.MassConfiguration.from_config(config)
    grid = linearized.build_grid(cfg.separations(), config.field.grid, config.constants.c)
    worst = 0.0
    for d in cfg.separations():
        rate = linearized.position_dependent_rate(d, config.mass_kg, grid, config.constants)
        closed = config.constants.G * config.mass_kg ** 2 / (config.constants.hbar * d)
        worst = max(worst, abs(rate / closed - 1))
    return _audit("grid_vs_continuum", worst, 1e-2, f"{len(grid)} modes")


def audit_separable_bound() -> dict:
    try:
        bound, _ = analysis.separable_bound_check(tol=math.inf)
    except ArithmeticError as exc:
        return _audit("separable_bound", None, 1e-6, error=str(exc))
    return _audit("separable_bound", abs(bound - 1.0), 1e-6, "max witness over product states")


def oracle(config: ExperimentConfig, n_max: int = None) -> dict:
    audits = [audit_backends(n_max), audit_overlap(n_max), audit_polaron(n_max)]
    audits += audit_quadrature(config)
    audits += [audit_grid(config), audit_separable_bound()]
    return {"passed": all(a["passed"] for a in audits), "audits": audits}
