"""Experiment runner: every experiment turns a resolved config into CSV tables."""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Sequence

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .disorder import EnsembleSpec, disordered_spectrum_sweep, ensemble_gap_statistics
from .dynamics import (OBSERVABLES, SweepSchedule, atom_excited, basis_state, fidelity, propagate_sweep,
                       static_trajectory)
from .edge import (analytic_amplitudes, effective_couplings, find_theta_g_equal, subspace_roots)
from .errors import DomainError, ParameterError
from .lattice import (AtomParams, BasisLayout, ChainParams, DisorderRealization, build_full_hamiltonian,
                      build_ssh_hamiltonian, inversion_operator)
from .spectral import eigendecompose

PI = math.pi
TRAJECTORY_HEADER = ("t", "theta") + OBSERVABLES


@dataclass
class Table:
    header: Sequence[str]
    rows: List[tuple] = field(default_factory=list)


@dataclass
class Result:
    tables: Dict[str, Table] = field(default_factory=dict)
    documents: Dict[str, str] = field(default_factory=dict)
    summary: Dict[str, object] = field(default_factory=dict)
    seeds: List[int] = field(default_factory=list)


def format_value(x) -> str:
    """Shortest round-trip text; floats below 1e-4 in magnitude come out in scientific notation."""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    text = repr(x)
    if math.isfinite(x) and abs(x) < 1e-4 and "e" not in text:
        text = format(x, ".1e")  # signed zero
    return text


def _chain(cfg: ExperimentConfig, theta: float = 0.5 * PI) -> ChainParams:
    return ChainParams(cfg["chain.n_cells"], cfg["chain.j"], theta, cfg["chain.omega_o"])


def _atom(cfg: ExperimentConfig, site=None, delta=None) -> AtomParams:
    return AtomParams(cfg["atom.delta"] if delta is None else delta, cfg["atom.g"],
                      cfg["atom.site"] if site is None else site, cfg["atom.sublattice"])


def _check_site(cfg, site):
    if not 1 <= site <= cfg["chain.n_cells"]:
        raise ParameterError(f"atom.site={site} outside [1, {cfg['chain.n_cells']}]")


def _spectrum_rows(key, spec, spectrum: Table, vectors: Table):
    for k, e in enumerate(spec.eigenvalues):
        spectrum.rows.append((key, k, e))
        for b, amp in enumerate(spec.eigenvectors[:, k]):
            vectors.rows.append((key, k, b, amp))


def run_spectrum_vs_theta(cfg: ExperimentConfig) -> Result:
    spectrum = Table(("theta", "eigen_index", "eigenvalue"))
    vectors = Table(("theta", "eigen_index", "basis_index", "amplitude"))
    with_atom = cfg["with_atom"]
    if with_atom:
        _check_site(cfg, cfg["atom.site"])
    mirror = inversion_operator(cfg["chain.n_cells"])
    for theta in cfg.grid("theta_grid_pi") * PI:
        chain = _chain(cfg, theta)
        if with_atom:
            spec = eigendecompose(build_full_hamiltonian(chain, _atom(cfg)))
        else:
            spec = eigendecompose(build_ssh_hamiltonian(chain), symmetry=mirror)
        _spectrum_rows(theta, spec, spectrum, vectors)
    return Result({"spectrum.csv": spectrum, "eigenvectors.csv": vectors})


def run_detuning_spectrum(cfg: ExperimentConfig) -> Result:
    _check_site(cfg, cfg["atom.site"])
    chain = _chain(cfg, cfg["theta_pi"] * PI)
    spectrum = Table(("delta", "eigen_index", "eigenvalue"))
    for delta in cfg.grid("delta_grid"):
        spec = eigendecompose(build_full_hamiltonian(chain, _atom(cfg, delta=delta)))
        spectrum.rows += [(delta, k, e) for k, e in enumerate(spec.eigenvalues)]
    spec = eigendecompose(build_full_hamiltonian(chain, _atom(cfg)))
    vectors = Table(("theta", "eigen_index", "basis_index", "amplitude"))
    _spectrum_rows(chain.theta, spec, Table(()), vectors)
    return Result({"detuning_spectrum.csv": spectrum, "eigenvectors.csv": vectors})


def _trajectory_table(trajs) -> Table:
    table = Table(TRAJECTORY_HEADER)
    for traj in trajs:
        table.rows += list(traj.rows())
    return table


def run_rabi_evolution(cfg: ExperimentConfig) -> Result:
    _check_site(cfg, cfg["atom.site"])
    chain = _chain(cfg, cfg["theta_pi"] * PI)
    times = np.linspace(0.0, cfg["t_max"], cfg["n_times"])
    traj = static_trajectory(chain, _atom(cfg), atom_excited(chain), times)
    edge = traj.observables["psiL_pop"] + traj.observables["psiR_pop"]
    return Result({"trajectory.csv": _trajectory_table([traj])},
                  summary={"peak_edge_population": float(np.nanmax(edge)) if np.isfinite(edge).any() else None,
                           "min_atom_population": float(traj.observables["atom_pop"].min())})


def run_effective_model_sweep(cfg: ExperimentConfig) -> Result:
    effective = Table(("theta", "p_or_q", "sublattice", "G", "G_L", "G_R",
                       "lambda_minus", "lambda_0", "lambda_plus"))
    states = Table(("theta", "p_or_q", "sublattice", "state", "atom_pop", "left_pop", "right_pop"))
    sub = cfg["atom.sublattice"]
    for p in cfg["p_values"]:
        _check_site(cfg, p)
    for theta in cfg.grid("theta_grid_pi") * PI:
        chain = _chain(cfg, theta)
        for p in cfg["p_values"]:
            model = effective_couplings(chain, _atom(cfg, site=p))
            roots = subspace_roots(model)
            effective.rows.append((theta, p, sub, model.g_cross, model.g_left, model.g_right, *roots.eigenvalues))
            for name, vec in zip(("phi_minus", "phi_0", "phi_plus"), roots.eigenvectors.T):
                states.rows.append((theta, p, sub, name, *(vec ** 2)))
    return Result({"effective_model.csv": effective, "subspace_states.csv": states})


def _schedule(cfg: ExperimentConfig, omega: float) -> SweepSchedule:
    return SweepSchedule(omega, cfg["sweep.theta_start_pi"] * PI, cfg["sweep.theta_end_pi"] * PI,
                         cfg["sweep.dt"], cfg["sweep.max_samples"])


def _target_index(cfg: ExperimentConfig) -> int:
    layout = BasisLayout(cfg["chain.n_cells"])
    return layout.leftmost if cfg["target"] == "leftmost" else layout.rightmost


def run_adiabatic_transfer(cfg: ExperimentConfig) -> Result:
    _check_site(cfg, cfg["atom.site"])
    chain = _chain(cfg, cfg["sweep.theta_start_pi"] * PI)
    traj = propagate_sweep(chain, _atom(cfg), _schedule(cfg, cfg["sweep.omega_rate"]), atom_excited(chain))
    final = traj.final_state
    target = basis_state(final.shape[0], _target_index(cfg))
    obs = {k: float(v[-1]) for k, v in traj.observables.items()}
    return Result({"trajectory.csv": _trajectory_table([traj])},
                  summary={"fidelity": fidelity(final / np.linalg.norm(final), target), "final": obs})


def _fidelity_job(cfg, p, omega):
    chain = _chain(cfg, cfg["sweep.theta_start_pi"] * PI)
    traj = propagate_sweep(chain, _atom(cfg, site=p), _schedule(cfg, omega), atom_excited(chain))
    final = traj.final_state / np.linalg.norm(traj.final_state)
    return fidelity(final, basis_state(final.shape[0], _target_index(cfg)))


def run_fidelity_vs_p(cfg: ExperimentConfig) -> Result:
    for p in cfg["p_values"]:
        _check_site(cfg, p)
    jobs = [(p, om) for p in cfg["p_values"] for om in cfg["omega_values"]]
    if cfg["jobs"] > 1:
        with ThreadPoolExecutor(cfg["jobs"]) as pool:
            fids = list(pool.map(lambda j: _fidelity_job(cfg, *j), jobs))
    else:
        fids = [_fidelity_job(cfg, *j) for j in jobs]
    table = Table(("p", "omega_rate", "fidelity"), [(p, om, f) for (p, om), f in zip(jobs, fids)])
    return Result({"fidelity.csv": table})


def run_nonadiabatic_transfer(cfg: ExperimentConfig) -> Result:
    _check_site(cfg, cfg["atom.site"])
    if cfg["atom.sublattice"] != "B":
        raise ParameterError("nonadiabatic_transfer uses the closed form for atom.sublattice=B")
    atom = _atom(cfg)
    thetas = [t * PI for t in cfg["thetas_pi"]]
    summary = {}
    if cfg["include_g_equal"]:
        theta_eq = find_theta_g_equal(_chain(cfg), atom)
        if theta_eq is None:
            raise DomainError(f"no angle with |G| = |G_R| for atom.site={atom.site_index}")
        thetas.append(theta_eq)
        summary["theta_g_equal"] = theta_eq
    trajs = []
    analytic = Table(("t", "theta", "atom_pop", "psiL_pop", "psiR_pop"))
    for theta in thetas:
        chain = _chain(cfg, theta)
        model = effective_couplings(chain, atom)
        omega = math.hypot(model.g_cross, model.g_right)
        if omega == 0.0:
            raise DomainError(f"G = G_R = 0 at theta={theta / PI:.6g} pi")
        times = np.linspace(0.0, cfg["periods"] * 2 * PI / omega, cfg["n_times"])
        trajs.append(static_trajectory(chain, atom, atom_excited(chain), times))
        for t in times:
            analytic.rows.append((t, theta, *analytic_amplitudes(model, t).populations()))
    return Result({"trajectory.csv": _trajectory_table(trajs), "analytic.csv": analytic}, summary=summary)


def run_disorder_sweep(cfg: ExperimentConfig) -> Result:
    _check_site(cfg, cfg["atom.site"])
    chain = _chain(cfg)
    atom = _atom(cfg)
    thetas = cfg.grid("theta_grid_pi") * PI
    xi, channel, seed = cfg["disorder.xi"], cfg["disorder.channel"], cfg["disorder.seed"]
    ens = EnsembleSpec(cfg["disorder.n_realizations"], xi, channel, seed, tuple(thetas))
    fixed: DisorderRealization = ens.realization(chain, 0)
    sweep = disordered_spectrum_sweep(chain, atom, fixed, thetas)
    clean = disordered_spectrum_sweep(chain, atom, DisorderRealization.zeros(chain.n_cells), thetas)

    spectrum = Table(("theta", "eigen_index", "eigenvalue"))
    clean_spectrum = Table(("theta", "eigen_index", "eigenvalue"))
    gap = Table(("theta", "gap_state_index", "basis_index", "probability"))
    for i, theta in enumerate(thetas):
        spectrum.rows += [(theta, k, e) for k, e in enumerate(sweep.eigenvalues[i])]
        clean_spectrum.rows += [(theta, k, e) for k, e in enumerate(clean.eigenvalues[i])]
        for s in range(sweep.gap_probabilities.shape[1]):
            gap.rows += [(theta, s, b, pr) for b, pr in enumerate(sweep.gap_probabilities[i, s])]

    stats = ensemble_gap_statistics(ens, chain, atom)
    ensemble = Table(("theta", "xi", "channel", "realization", "gap_state_index", "energy", "end_weight"))
    for r in range(ens.n_realizations):
        for i, theta in enumerate(thetas):
            for s in range(stats.energies.shape[2]):
                ensemble.rows.append((theta, xi, channel, r, s, stats.energies[r, i, s], stats.end_weights[r, i, s]))
    agg = Table(("theta", "xi", "channel", "gap_state_index", "energy_mean", "energy_std_population",
                 "end_weight_mean", "end_weight_std_population"))
    for i, theta in enumerate(thetas):
        for s in range(stats.energies.shape[2]):
            agg.rows.append((theta, xi, channel, s, stats.energy_mean[i, s], stats.energy_std[i, s],
                             stats.end_weight_mean[i, s], stats.end_weight_std[i, s]))
    return Result(
        {"spectrum.csv": spectrum, "clean_spectrum.csv": clean_spectrum, "gap_states.csv": gap,
         "ensemble.csv": ensemble, "ensemble_stats.csv": agg},
        documents={"realization.json": fixed.to_json()},
        seeds=[seed + k for k in range(ens.n_realizations)],
    )


RUNNERS: Dict[str, Callable[[ExperimentConfig], Result]] = {
    "spectrum_vs_theta": run_spectrum_vs_theta,
    "detuning_spectrum": run_detuning_spectrum,
    "rabi_evolution": run_rabi_evolution,
    "effective_model_sweep": run_effective_model_sweep,
    "adiabatic_transfer": run_adiabatic_transfer,
    "fidelity_vs_p": run_fidelity_vs_p,
    "nonadiabatic_transfer": run_nonadiabatic_transfer,
    "disorder_sweep": run_disorder_sweep,
}


def render_csv(table: Table) -> str:
    lines = [",".join(table.header)]
    lines += [",".join(format_value(x) for x in row) for row in table.rows]
    return "\n".join(lines) + "\n"


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run_experiment(cfg: ExperimentConfig) -> Dict[str, Path]:
    """Compute everything in memory, then write the files and ``manifest.json``."""
    if cfg.experiment is None:
        raise ParameterError("no experiment selected")
    if cfg.out_dir is None:
        raise ParameterError("no output directory given")
    start = time.perf_counter()
    result = RUNNERS[cfg.experiment](cfg)
    wall = time.perf_counter() - start

    texts = {name: render_csv(t) for name, t in result.tables.items()}
    texts.update(result.documents)
    out = {}
    for name, text in texts.items():
        out[name] = cfg.out_dir / name
        write_atomic(out[name], text)
    manifest = {
        "experiment": cfg.experiment,
        "version": __version__,
        "config": cfg.resolved(),
        "units": {"angles_in_config": "pi", "theta_column": "radians", "energy": "J", "time": "1/J"},
        "seeds": result.seeds,
        "summary": result.summary,
        "files": {name: hashlib.sha256(text.encode()).hexdigest() for name, text in sorted(texts.items())},
        "wall_time_s": wall,
    }
    out["manifest.json"] = cfg.out_dir / "manifest.json"
    write_atomic(out["manifest.json"], json.dumps(manifest, indent=2, default=float) + "\n")
    return out
