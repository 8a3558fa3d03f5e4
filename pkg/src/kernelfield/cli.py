"""Batch front-end: simulate the diffusion plant, learn the weight-transition
model, analyze placements, run the observer, and close the control loop.

    kernel-field <simulate|learn|check|observe|control|placement>
                 --config <path> [--out <dir>] [--seed <int>] [--force]

Every command is a pure function of (config file, input files, seed): CSV
outputs are byte-identical across reruns.  Each delimited output gets a
rendered figure next to it unless [output] plots = false.  The log level
comes from KERNEL_FIELD_LOG (error, info, debug).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import plots
from .config import ExperimentConfig, load_config
from .controller import ActuatorSet, control_operator, solve_lqr, tracking_command, with_reference
from .errors import (
    ConfigError,
    FilterError,
    InputError,
    NumericalError,
    OutputExistsError,
    PlacementError,
    SynthesisError,
    UncontrollableError,
)
from .field_sim import Grid1D, cfl_limit, diffusion_step, ingest_grid_csv, write_trajectory_csv
from .kernels import is_l_shaded, is_shaded, kernel_matrix
from .model_io import (
    load_model,
    read_points_csv,
    save_model,
    write_points_csv,
    write_weights_csv,
    read_weights_csv,
)
from .observer import LinearModel, ObserverConfig, observer_init, observer_predict, observer_step
from .rkhs import Dictionary, SampleSet, bandwidth_grid_search, infer_weights, sparsify_dictionary
from .sysid import is_observable, learn_transition, propose_placement, spectral_summary

log = logging.getLogger("kernelfield")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


# ---------------------------------------------------------------------------
# shared plumbing
# ---------------------------------------------------------------------------

def _require(cfg: ExperimentConfig, attr, key):
    value = getattr(cfg, attr)
    if value is None:
        raise ConfigError(f"this command requires {key} in the config")
    return value


def _grid_axis(cfg: ExperimentConfig):
    n = cfg.sim_grid_points
    x = np.linspace(cfg.domain_min, cfg.domain_max, n)
    dx = (cfg.domain_max - cfg.domain_min) / (n - 1)
    return x, dx


def _resolve_dt(cfg: ExperimentConfig, dx):
    limit = cfl_limit(cfg.sim_diffusivity, dx)
    if cfg.sim_dt is None:
        return limit
    if cfg.sim_dt > limit * (1 + 1e-12):
        raise ConfigError(
            f"[simulation] dt {cfg.sim_dt:g} violates the stability bound {limit:g}"
        )
    return cfg.sim_dt


def _uniform_locations(cfg: ExperimentConfig, count, margin):
    span = cfg.domain_max - cfg.domain_min
    lo = cfg.domain_min + margin * span
    hi = cfg.domain_max - margin * span
    return np.linspace(lo, hi, count)


def _build_dictionary(cfg: ExperimentConfig) -> Dictionary:
    if cfg.dict_source == "uniform":
        centers = _uniform_locations(cfg, cfg.dict_size, cfg.dict_margin)
        if cfg.kernel_spec.input_dim != 1:
            raise ConfigError("[dictionary] source=uniform requires input_dim = 1")
        return Dictionary(centers, cfg.kernel_spec)
    if cfg.dict_source == "file":
        return Dictionary(read_points_csv(cfg.dict_file), cfg.kernel_spec)
    candidates = read_points_csv(cfg.sparsify_candidates_file)
    return sparsify_dictionary(candidates, cfg.kernel_spec, cfg.sparsify_budget, cfg.sparsify_nu)


def _resolve_actuators(cfg: ExperimentConfig, dictionary, A=None):
    if cfg.actuator_mode == "uniform":
        if cfg.actuator_count < 1:
            raise UncontrollableError("no actuators configured (actuator_count = 0)")
        return _uniform_locations(cfg, cfg.actuator_count, cfg.placement_margin)[:, None]
    if cfg.actuator_mode == "file":
        pts = read_points_csv(cfg.actuator_file)
        if pts.shape[0] < 1:
            raise UncontrollableError("no actuators configured (empty actuator_file)")
        return pts
    if A is None:
        raise ConfigError("[placement] actuator_mode=propose needs a learned model")
    cands = _uniform_locations(cfg, cfg.placement_candidates, cfg.placement_margin)
    res = propose_placement(dictionary, A, cands, "actuation",
                            max_tries=cfg.placement_max_tries, seed=cfg.seed)
    return res.locations


def _resolve_sensors(cfg: ExperimentConfig, dictionary, actuators=None, A=None):
    if cfg.sensor_mode == "actuators":
        if actuators is None:
            actuators = _resolve_actuators(cfg, dictionary, A)
        return np.asarray(actuators)
    if cfg.sensor_mode == "uniform":
        return _uniform_locations(cfg, cfg.sensor_count, cfg.placement_margin)[:, None]
    if cfg.sensor_mode == "file":
        return read_points_csv(cfg.sensor_file)
    if A is None:
        raise ConfigError("[placement] sensor_mode=propose needs a learned model")
    cands = _uniform_locations(cfg, cfg.placement_candidates, cfg.placement_margin)
    res = propose_placement(dictionary, A, cands, "sensing",
                            max_tries=cfg.placement_max_tries, seed=cfg.seed)
    return res.locations


def _initial_values(cfg: ExperimentConfig, preset, preset_file, x):
    span = cfg.domain_max - cfg.domain_min
    xn = (x - cfg.domain_min) / span
    if preset == "sine":
        return np.sin(np.pi * xn)
    if preset == "bump":
        return np.exp(-((xn - 0.5) ** 2) / (2 * 0.15**2))
    if preset == "zero":
        return np.zeros_like(x)
    sets = ingest_grid_csv(preset_file)
    if not sets:
        raise ConfigError(f"initial_file {preset_file} holds no samples")
    first = sets[0]
    if first.locations.shape[1] != 1:
        raise ConfigError("initial_file must hold 1-D samples")
    locs = first.locations.ravel()
    order = np.argsort(locs)
    return np.interp(x, locs[order], first.values[order])


def _prepare_outputs(cfg: ExperimentConfig, force, names):
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    paths = {name: cfg.out_dir / name for name in names}
    for p in paths.values():
        if p.exists() and not force:
            raise OutputExistsError(f"refusing to overwrite {p}; pass --force")
    return paths


def _write_csv(path, header, rows, config_hash):
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_hash={config_hash}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def _cell(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _write_metadata(path, cfg: ExperimentConfig, command, extra=None):
    doc = {
        "command": command,
        "config_hash": cfg.config_hash,
        "seed": cfg.seed,
        "config_file": str(cfg.path),
    }
    doc.update(extra or {})
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _infer_trajectory(dictionary, sample_sets, ridge):
    W = np.empty((dictionary.size, len(sample_sets)))
    times = []
    for j, ss in enumerate(sample_sets):
        W[:, j] = infer_weights(dictionary, ss, ridge)
        times.append(0 if ss.time is None else int(ss.time))
    return times, W


def _excitation_field(kernel_grid, rng, std, n_weights):
    if std <= 0:
        return None
    return kernel_grid @ (std * rng.standard_normal(n_weights))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_simulate(cfg: ExperimentConfig, force=False):
    """Run the diffusion plant and dump the recorded trajectory."""
    if cfg.kernel_spec.input_dim != 1:
        raise ConfigError("simulate requires input_dim = 1")
    x, dx = _grid_axis(cfg)
    dt = _resolve_dt(cfg, dx)
    paths = _prepare_outputs(cfg, force, ["trajectory.csv", "simulate_metadata.json",
                                          "simulate_fields.png"])
    rng = np.random.default_rng(cfg.seed)
    values = _initial_values(cfg, cfg.sim_initial, cfg.sim_initial_file, x)
    if cfg.sim_boundary == "dirichlet_zero":
        values = values.copy()
        values[0] = values[-1] = 0.0
    grid = Grid1D(values, dx, cfg.sim_boundary, origin=cfg.domain_min)

    kernel_grid = None
    dictionary = None
    if cfg.sim_excitation_std > 0:
        dictionary = _build_dictionary(cfg)
        kernel_grid = kernel_matrix(cfg.kernel_spec, x[:, None], dictionary.centers)

    # excitation arrives as a source impulse on the last substep, so each
    # recorded transition is exactly (free evolution) + (injected field)
    snapshots = [grid.values]
    for _ in range(cfg.sim_steps):
        forcing = None
        if kernel_grid is not None:
            field = _excitation_field(kernel_grid, rng, cfg.sim_excitation_std, dictionary.size)
            forcing = field / dt
        for sub in range(cfg.sim_substeps):
            last = sub == cfg.sim_substeps - 1
            grid = diffusion_step(grid, cfg.sim_diffusivity, dt,
                                  forcing if last else None)
        snapshots.append(grid.values)

    trajectory = [Grid1D(v, dx, cfg.sim_boundary, origin=cfg.domain_min) for v in snapshots]
    write_trajectory_csv(paths["trajectory.csv"], trajectory,
                         header_comment=f"config_hash={cfg.config_hash}")
    _write_metadata(paths["simulate_metadata.json"], cfg, "simulate", {
        "grid_points": cfg.sim_grid_points,
        "dt": dt,
        "substeps": cfg.sim_substeps,
        "steps": cfg.sim_steps,
        "boundary": cfg.sim_boundary,
        "excitation_std": cfg.sim_excitation_std,
    })
    if cfg.plots:
        plots.plot_field_evolution(x, snapshots, paths["simulate_fields.png"],
                                   title="diffusion trajectory", config_hash=cfg.config_hash)
    log.info("simulate: %d recorded steps -> %s", cfg.sim_steps, paths["trajectory.csv"])
    return paths


def cmd_learn(cfg: ExperimentConfig, force=False):
    """Infer per-step weights from sampled data and fit the transition model."""
    data_path = _require(cfg, "file_data", "[files] data")
    sample_sets = ingest_grid_csv(data_path)
    if len(sample_sets) < 2:
        raise InputError(
            f"need at least 2 time steps to learn a transition, got {len(sample_sets)}"
        )
    paths = _prepare_outputs(cfg, force, ["model.json", "weights.csv",
                                          "learn_metadata.json", "learn_spectrum.png"])
    dictionary = _build_dictionary(cfg)
    if cfg.bandwidth_grid:
        best, errs = bandwidth_grid_search(cfg.kernel_spec, cfg.bandwidth_grid,
                                           dictionary.centers, sample_sets, cfg.learn_ridge)
        log.info("learn: bandwidth grid search picked %g (errors %s)", best,
                 ["%.3g" % e for e in errs])
        dictionary = Dictionary(dictionary.centers,
                                type(cfg.kernel_spec)(cfg.kernel_spec.family, best,
                                                      cfg.kernel_spec.period,
                                                      cfg.kernel_spec.input_dim))
    times, W = _infer_trajectory(dictionary, sample_sets, cfg.learn_ridge)
    model = learn_transition(W)
    provenance = {
        "config_hash": cfg.config_hash,
        "seed": cfg.seed,
        "substeps": cfg.sim_substeps,
        "n_snapshots": W.shape[1],
        "bandwidth": dictionary.spec.bandwidth,
    }
    save_model(paths["model.json"], dictionary, model, provenance)
    write_weights_csv(paths["weights.csv"], times, W,
                      header_comment=f"config_hash={cfg.config_hash}")
    summary = spectral_summary(model.A, cfg.check_cluster_tol)
    _write_metadata(paths["learn_metadata.json"], cfg, "learn", {
        "n_snapshots": W.shape[1],
        "dictionary_size": dictionary.size,
        "spectral_radius": float(np.max(np.abs(summary.eigenvalues))),
        "cyclic_index": summary.cyclic_index,
    })
    if cfg.plots:
        plots.plot_spectrum(summary.eigenvalues, paths["learn_spectrum.png"],
                            cyclic_index=summary.cyclic_index, config_hash=cfg.config_hash)
    log.info("learn: %d snapshots -> model %s", W.shape[1], paths["model.json"])
    return paths


def cmd_check(cfg: ExperimentConfig, force=False):
    """Report the model spectrum and the rank certificates of a placement."""
    model_path = _require(cfg, "file_model", "[files] model")
    dictionary, model, _ = load_model(model_path)
    paths = _prepare_outputs(cfg, force, ["check_report.json", "check_spectrum.png"])
    summary = spectral_summary(model.A, cfg.check_cluster_tol)
    M = dictionary.size
    report = {
        "config_hash": cfg.config_hash,
        "seed": cfg.seed,
        "dictionary_size": M,
        "cyclic_index": summary.cyclic_index,
        "full_rank_distinct": summary.full_rank_distinct,
        "eigenvalues": [[float(e.real), float(e.imag)] for e in summary.eigenvalues],
        "required_rank": M,
    }
    n_sensors = cfg.sensor_count if cfg.sensor_mode == "uniform" else None
    try:
        sensors = _resolve_sensors(cfg, dictionary, A=model.A)
    except UncontrollableError:
        sensors = np.empty((0, dictionary.spec.input_dim))
    if cfg.sensor_mode == "uniform" and cfg.sensor_count == 0:
        sensors = np.empty((0, dictionary.spec.input_dim))
    if sensors.shape[0] == 0:
        report.update({
            "n_sensors": 0, "shaded": False, "row_sum_nonzero": False,
            "l_shaded": False, "observable": False, "rank": 0,
        })
    else:
        K = kernel_matrix(dictionary.spec, sensors, dictionary.centers)
        shaded = is_shaded(K)
        rep = is_observable(model.A, K, np.arange(M), cfg.check_rank_tol)
        l = summary.cyclic_index
        l_ok = K.shape[0] >= l and is_l_shaded(K, l)
        report.update({
            "n_sensors": int(sensors.shape[0]),
            "sensors": sensors.tolist(),
            "shaded": shaded.shaded,
            "row_sum_nonzero": shaded.row_sum_nonzero,
            "l_shaded": bool(l_ok),
            "observable": rep.observable,
            "rank": rep.rank,
        })
    with open(paths["check_report.json"], "w") as fh:
        json.dump(report, fh, indent=1, sort_keys=True)
        fh.write("\n")
    if cfg.plots:
        plots.plot_spectrum(summary.eigenvalues, paths["check_spectrum.png"],
                            cyclic_index=summary.cyclic_index, config_hash=cfg.config_hash)
    print(json.dumps({k: report[k] for k in
                      ("cyclic_index", "full_rank_distinct", "shaded", "observable", "rank")},
                     sort_keys=True))
    log.info("check: cyclic index %d, observable=%s (rank %d/%d)",
             summary.cyclic_index, report["observable"], report["rank"], M)
    return paths


def cmd_observe(cfg: ExperimentConfig, force=False):
    """Run the Kalman observer over a sampled data stream."""
    model_path = _require(cfg, "file_model", "[files] model")
    data_path = _require(cfg, "file_data", "[files] data")
    dictionary, model, _ = load_model(model_path)
    sample_sets = ingest_grid_csv(data_path)
    paths = _prepare_outputs(cfg, force, ["observe_trace.csv", "observe_metadata.json",
                                          "observe_trace.png"])
    M = dictionary.size

    truth = None
    if cfg.file_truth is not None:
        t_times, t_W = read_weights_csv(cfg.file_truth)
        if t_W.shape[0] != M:
            raise InputError(
                f"truth weights have {t_W.shape[0]} rows, dictionary has {M} centers"
            )
        truth = {t: t_W[:, j] for j, t in enumerate(t_times)}

    rows = []
    meta = {"n_steps": len(sample_sets), "truth_available": truth is not None}
    if sample_sets:
        locations = sample_sets[0].locations
        for ss in sample_sets[1:]:
            if not np.array_equal(ss.locations, locations):
                raise InputError("observe requires identical sample locations at every step")
        K = kernel_matrix(dictionary.spec, locations, dictionary.centers)
        rep = is_observable(model.A, K, np.arange(M), cfg.check_rank_tol)
        meta.update({"n_sensors": int(locations.shape[0]),
                     "observable": rep.observable, "rank": rep.rank})
        if not rep.observable:
            log.warning("observe: placement unobservable (rank %d < %d); proceeding",
                        rep.rank, M)
        Q_obs = model.Q + cfg.obs_process_noise_floor * np.eye(M)
        ocfg = ObserverConfig(
            model=LinearModel(model.A, Q_obs),
            measurement_matrix=K,
            measurement_noise=cfg.obs_measurement_noise * np.eye(locations.shape[0]),
            initial_estimate=np.zeros(M),
            initial_covariance=cfg.obs_initial_covariance * np.eye(M),
        )
        state = observer_init(ocfg)
        prev_t = None
        for ss in sample_sets:
            t = 0 if ss.time is None else int(ss.time)
            if prev_t is not None:
                for _ in range(t - prev_t - 1):
                    state = observer_predict(state)
            state = observer_step(state, ss.values)
            prev_t = t
            if truth is not None and t in truth:
                err = float(np.linalg.norm(state.estimate - truth[t]))
            else:
                err = float(np.linalg.norm(ss.values - K @ state.estimate))
            rows.append((t, err, float(np.trace(state.covariance))))
    _write_csv(paths["observe_trace.csv"], ["step", "error_norm", "trace_P"],
               rows, cfg.config_hash)
    _write_metadata(paths["observe_metadata.json"], cfg, "observe", meta)
    if cfg.plots and rows:
        arr = np.asarray(rows, dtype=float)
        plots.plot_estimation_trace(arr[:, 0], arr[:, 1], arr[:, 2],
                                    paths["observe_trace.png"], config_hash=cfg.config_hash)
    log.info("observe: %d steps -> %s", len(rows), paths["observe_trace.csv"])
    return paths


def _reference_weights(cfg: ExperimentConfig, dictionary, model, B, rng):
    """Weight-space reference: projected from a sample file, or a steady state
    reachable through the actuators (seeded channel pattern, scaled so the
    reference field peaks at reference_scale)."""
    M = dictionary.size
    if cfg.ctl_reference == "file":
        sets = ingest_grid_csv(cfg.file_reference)
        if not sets:
            raise InputError(f"reference file {cfg.file_reference} holds no samples")
        locs = np.vstack([ss.locations for ss in sets])
        vals = np.concatenate([ss.values for ss in sets])
        return infer_weights(dictionary, SampleSet(locs, vals), cfg.learn_ridge)
    # sine taper over channels keeps the held field away from the plant
    # boundary, where a zero-boundary plant cannot hold arbitrary values
    n_u = B.shape[1]
    taper = np.sin(np.pi * (np.arange(n_u) + 1) / (n_u + 1))
    u_hold = rng.standard_normal(n_u) * taper
    eye_minus_A = np.eye(M) - model.A
    try:
        w_raw = np.linalg.solve(eye_minus_A, B @ u_hold)
    except np.linalg.LinAlgError:
        raise SynthesisError("I - A is singular; cannot build a reachable reference") from None
    x, _ = _grid_axis(cfg)
    field = kernel_matrix(dictionary.spec, x[:, None], dictionary.centers) @ w_raw
    peak = float(np.max(np.abs(field)))
    if peak <= 0:
        raise SynthesisError("reachable reference degenerated to zero")
    return w_raw * (cfg.ctl_reference_scale / peak)


def cmd_control(cfg: ExperimentConfig, force=False):
    """Close the loop: diffusion plant + Kalman observer + LQR tracking."""
    model_path = _require(cfg, "file_model", "[files] model")
    dictionary, model, provenance = load_model(model_path)
    if dictionary.spec.input_dim != 1:
        raise ConfigError("control requires a 1-D model")
    if provenance.get("substeps") not in (None, cfg.sim_substeps):
        log.warning("control: model learned at substeps=%s, config says %d",
                    provenance.get("substeps"), cfg.sim_substeps)
    paths = _prepare_outputs(cfg, force, ["control_trace.csv", "control_metadata.json",
                                          "control_fields.png", "control_error.png"])
    rng = np.random.default_rng(cfg.seed)
    M = dictionary.size
    A = model.A

    actuator_locs = _resolve_actuators(cfg, dictionary, A=A)
    actuators = ActuatorSet(actuator_locs)
    sensors = _resolve_sensors(cfg, dictionary, actuators=actuator_locs, A=A)
    B = control_operator(dictionary, actuators)
    K_sens = kernel_matrix(dictionary.spec, sensors, dictionary.centers)

    gains = solve_lqr(A, B, cfg.ctl_q_cost * np.eye(M), cfg.ctl_r_cost * np.eye(actuators.size),
                      max_iter=cfg.ctl_riccati_max_iter, tol=cfg.ctl_riccati_tol)
    w_ref = _reference_weights(cfg, dictionary, model, B, rng)
    gains = with_reference(gains, A, B, w_ref, use_feedforward=cfg.ctl_feedforward)

    x, dx = _grid_axis(cfg)
    dt = _resolve_dt(cfg, dx)
    kernel_grid = kernel_matrix(dictionary.spec, x[:, None], dictionary.centers)
    f_ref = kernel_grid @ w_ref

    Q_obs = model.Q + cfg.obs_process_noise_floor * np.eye(M)
    ocfg = ObserverConfig(
        model=LinearModel(A, Q_obs),
        measurement_matrix=K_sens,
        measurement_noise=cfg.obs_measurement_noise * np.eye(K_sens.shape[0]),
        initial_estimate=np.zeros(M),
        initial_covariance=cfg.obs_initial_covariance * np.eye(M),
    )
    state = observer_init(ocfg)

    values = _initial_values(cfg, cfg.ctl_initial, cfg.ctl_initial_file, x)
    if cfg.sim_boundary == "dirichlet_zero":
        values = values.copy()
        values[0] = values[-1] = 0.0
    grid = Grid1D(values, dx, cfg.sim_boundary, origin=cfg.domain_min)
    sensor_x = np.asarray(sensors, dtype=float).ravel()

    residual = gains.feedforward_residual
    snapshots = [grid.values]
    rows = [(0, float(np.max(np.abs(grid.values - f_ref))),
             float(np.linalg.norm(state.estimate - w_ref)), 0.0, residual)]
    control_effect = None
    for k in range(cfg.ctl_steps):
        y = np.interp(sensor_x, x, grid.values)
        if cfg.ctl_measurement_noise_std > 0:
            y = y + cfg.ctl_measurement_noise_std * rng.standard_normal(y.shape[0])
        state = observer_step(state, y, control_increment=control_effect)
        u = tracking_command(gains, state.estimate)
        weight_push = B @ u
        # source impulse on the last substep: the realized field increment is
        # exactly the modeled one, matching w_next = A w + B u
        forcing = (kernel_grid @ weight_push) / dt
        for sub in range(cfg.sim_substeps):
            last = sub == cfg.sim_substeps - 1
            grid = diffusion_step(grid, cfg.sim_diffusivity, dt,
                                  forcing if last else None)
        control_effect = weight_push
        snapshots.append(grid.values)
        rows.append((k + 1, float(np.max(np.abs(grid.values - f_ref))),
                     float(np.linalg.norm(state.estimate - w_ref)),
                     float(np.linalg.norm(u)), residual))

    _write_csv(paths["control_trace.csv"],
               ["step", "field_error_max", "weight_error", "control_norm", "residual"],
               rows, cfg.config_hash)
    err0 = rows[0][1]
    errN = rows[-1][1]
    _write_metadata(paths["control_metadata.json"], cfg, "control", {
        "n_actuators": actuators.size,
        "n_sensors": int(K_sens.shape[0]),
        "closed_loop_radius": gains.closed_loop_radius,
        "feedforward_residual": residual,
        "feedforward": cfg.ctl_feedforward,
        "riccati_iterations": gains.iterations,
        "initial_error": err0,
        "final_error": errN,
        "final_ratio": errN / err0 if err0 > 0 else 0.0,
    })
    if cfg.plots:
        plots.plot_field_evolution(x, snapshots, paths["control_fields.png"],
                                   title="controlled field", reference=f_ref,
                                   config_hash=cfg.config_hash)
        arr = np.asarray(rows, dtype=float)
        plots.plot_error_trace(arr[:, 0], arr[:, 1], paths["control_error.png"],
                               title="field tracking error", config_hash=cfg.config_hash)
    log.info("control: error %.4g -> %.4g over %d steps", err0, errN, cfg.ctl_steps)
    return paths


def cmd_placement(cfg: ExperimentConfig, force=False):
    """Search sensor and actuator placements for a learned model."""
    model_path = _require(cfg, "file_model", "[files] model")
    dictionary, model, _ = load_model(model_path)
    paths = _prepare_outputs(cfg, force, ["sensors.csv", "actuators.csv",
                                          "placement_report.json", "placement.png"])
    cands = _uniform_locations(cfg, cfg.placement_candidates, cfg.placement_margin)
    report = {"config_hash": cfg.config_hash, "seed": cfg.seed}
    results = {}
    for mode, out_name in [("sensing", "sensors.csv"), ("actuation", "actuators.csv")]:
        res = propose_placement(dictionary, model.A, cands, mode,
                                max_tries=cfg.placement_max_tries, seed=cfg.seed)
        write_points_csv(paths[out_name], res.locations,
                         header_comment=f"config_hash={cfg.config_hash}")
        cert = res.certificate
        report[mode] = {
            "count": res.count,
            "cyclic_index": cert.cyclic_index,
            "rank": cert.rank,
            "required_rank": cert.required_rank,
            "draws": cert.draws,
        }
        results[mode] = res
    with open(paths["placement_report.json"], "w") as fh:
        json.dump(report, fh, indent=1, sort_keys=True)
        fh.write("\n")
    if cfg.plots:
        plots.plot_placement((cfg.domain_min, cfg.domain_max), dictionary.centers,
                             results["sensing"].locations, paths["placement.png"],
                             mode="sensing", config_hash=cfg.config_hash)
    print(json.dumps(report, sort_keys=True))
    log.info("placement: sensing count %d, actuation count %d",
             results["sensing"].count, results["actuation"].count)
    return paths


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

_COMMANDS = {
    "simulate": cmd_simulate,
    "learn": cmd_learn,
    "check": cmd_check,
    "observe": cmd_observe,
    "control": cmd_control,
    "placement": cmd_placement,
}


def _setup_logging():
    level = os.environ.get("KERNEL_FIELD_LOG", "info").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(
        level=levels.get(level, logging.INFO),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="kernel-field",
        description="Kernel-expansion field modeling, estimation, and control.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__.splitlines()[0] if fn.__doc__ else None)
        p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--force", action="store_true", help="overwrite existing outputs")
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed_override=args.seed, out_override=args.out)
        _COMMANDS[args.command](cfg, force=args.force)
    except (UncontrollableError, SynthesisError, FilterError, PlacementError,
            NumericalError) as exc:
        log.error("%s", exc)
        return EXIT_NUMERIC
    except (ConfigError, InputError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
