"""Experiment configuration: flat key = value text with [sections], parsed
into a validated dataclass.  Unknown keys are rejected so typos fail fast."""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .kernels import FAMILIES, KernelSpec
from .field_sim import BOUNDARIES

_INITIAL_PRESETS = ("sine", "bump", "zero", "file")
_DICT_SOURCES = ("uniform", "file", "sparsify")
_ACT_MODES = ("uniform", "file", "propose")
_SENSOR_MODES = ("actuators", "uniform", "file", "propose")
_REFERENCE_KINDS = ("file", "reachable")

_KNOWN_KEYS = {
    "kernel": {"family", "bandwidth", "period", "input_dim", "bandwidth_grid"},
    "domain": {"min", "max"},
    "dictionary": {"source", "size", "margin", "file", "candidates_file", "budget", "nu"},
    "placement": {
        "actuator_mode", "actuator_count", "actuator_file",
        "sensor_mode", "sensor_count", "sensor_file",
        "margin", "candidate_count", "max_tries",
    },
    "simulation": {
        "grid_points", "diffusivity", "boundary", "dt", "substeps", "steps",
        "initial", "initial_file", "excitation_std",
    },
    "learning": {"ridge"},
    "observer": {"measurement_noise", "initial_covariance", "process_noise_floor"},
    "control": {
        "steps", "q_cost", "r_cost", "riccati_tol", "riccati_max_iter",
        "feedforward", "reference", "reference_scale", "measurement_noise_std",
        "initial", "initial_file",
    },
    "analysis": {"cluster_tol", "rank_tol"},
    "files": {"data", "model", "reference", "truth"},
    "output": {"directory", "plots"},
    "seeds": {"master"},
}


@dataclass
class ExperimentConfig:
    """All tunables of the pipeline, resolved and validated."""

    kernel_spec: KernelSpec
    bandwidth_grid: list | None

    domain_min: float
    domain_max: float

    dict_source: str
    dict_size: int
    dict_margin: float
    dict_file: Path | None
    sparsify_candidates_file: Path | None
    sparsify_budget: int
    sparsify_nu: float

    actuator_mode: str
    actuator_count: int
    actuator_file: Path | None
    sensor_mode: str
    sensor_count: int
    sensor_file: Path | None
    placement_margin: float
    placement_candidates: int
    placement_max_tries: int

    sim_grid_points: int
    sim_diffusivity: float
    sim_boundary: str
    sim_dt: float | None
    sim_substeps: int
    sim_steps: int
    sim_initial: str
    sim_initial_file: Path | None
    sim_excitation_std: float

    learn_ridge: float | None

    obs_measurement_noise: float
    obs_initial_covariance: float
    obs_process_noise_floor: float

    ctl_steps: int
    ctl_q_cost: float
    ctl_r_cost: float
    ctl_riccati_tol: float
    ctl_riccati_max_iter: int
    ctl_feedforward: bool
    ctl_reference: str
    ctl_reference_scale: float
    ctl_measurement_noise_std: float
    ctl_initial: str
    ctl_initial_file: Path | None

    check_cluster_tol: float | None
    check_rank_tol: float | None

    file_data: Path | None
    file_model: Path | None
    file_reference: Path | None
    file_truth: Path | None

    out_dir: Path
    plots: bool
    seed: int
    config_hash: str
    path: Path


def _get(parser, section, key, default=None):
    if parser.has_option(section, key):
        val = parser.get(section, key).strip()
        return val if val != "" else default
    return default


def _float(raw, section, key, default, minimum=None, allow_auto=False):
    if raw is None:
        return default
    if allow_auto and raw == "auto":
        return None
    try:
        val = float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected a number, got {raw!r}") from None
    if minimum is not None and val < minimum:
        raise ConfigError(f"[{section}] {key}: must be >= {minimum}, got {val}")
    return val


def _int(raw, section, key, default, minimum=None):
    if raw is None:
        return default
    try:
        val = int(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected an integer, got {raw!r}") from None
    if minimum is not None and val < minimum:
        raise ConfigError(f"[{section}] {key}: must be >= {minimum}, got {val}")
    return val


def _bool(raw, section, key, default):
    if raw is None:
        return default
    low = raw.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"[{section}] {key}: expected true/false, got {raw!r}")


def _choice(raw, section, key, choices, default):
    if raw is None:
        return default
    if raw not in choices:
        raise ConfigError(f"[{section}] {key}: expected one of {choices}, got {raw!r}")
    return raw


def _path(raw, base: Path):
    if raw is None:
        return None
    p = Path(raw)
    return p if p.is_absolute() else (base / p)


def config_hash_of(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def load_config(path, seed_override=None, out_override=None) -> ExperimentConfig:
    """Parse and validate a configuration file.

    seed_override / out_override implement the --seed and --out CLI flags.
    Referenced input files must exist at load time.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for section in parser.sections():
        if section not in _KNOWN_KEYS:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key in parser.options(section):
            if key not in _KNOWN_KEYS[section]:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
    base = path.parent

    family = _choice(_get(parser, "kernel", "family"), "kernel", "family", FAMILIES, "gaussian")
    bandwidth = _float(_get(parser, "kernel", "bandwidth"), "kernel", "bandwidth", 0.05)
    period = _float(_get(parser, "kernel", "period"), "kernel", "period", None)
    input_dim = _int(_get(parser, "kernel", "input_dim"), "kernel", "input_dim", 1, minimum=1)
    try:
        spec = KernelSpec(family, bandwidth, period, input_dim)
    except Exception as exc:
        raise ConfigError(f"[kernel]: {exc}") from None
    grid_raw = _get(parser, "kernel", "bandwidth_grid")
    bandwidth_grid = None
    if grid_raw:
        try:
            bandwidth_grid = [float(s) for s in grid_raw.split(",")]
        except ValueError:
            raise ConfigError(f"[kernel] bandwidth_grid: bad list {grid_raw!r}") from None
        if any(s <= 0 for s in bandwidth_grid):
            raise ConfigError("[kernel] bandwidth_grid: bandwidths must be positive")

    domain_min = _float(_get(parser, "domain", "min"), "domain", "min", 0.0)
    domain_max = _float(_get(parser, "domain", "max"), "domain", "max", 1.0)
    if domain_max <= domain_min:
        raise ConfigError("[domain]: max must exceed min")

    dict_source = _choice(_get(parser, "dictionary", "source"), "dictionary", "source", _DICT_SOURCES, "uniform")
    dict_size = _int(_get(parser, "dictionary", "size"), "dictionary", "size", 25, minimum=1)
    dict_margin = _float(_get(parser, "dictionary", "margin"), "dictionary", "margin", 0.04, minimum=0.0)
    dict_file = _path(_get(parser, "dictionary", "file"), base)
    cand_file = _path(_get(parser, "dictionary", "candidates_file"), base)
    budget = _int(_get(parser, "dictionary", "budget"), "dictionary", "budget", 50, minimum=1)
    nu = _float(_get(parser, "dictionary", "nu"), "dictionary", "nu", 1e-4, minimum=0.0)

    actuator_mode = _choice(_get(parser, "placement", "actuator_mode"), "placement", "actuator_mode", _ACT_MODES, "uniform")
    actuator_count = _int(_get(parser, "placement", "actuator_count"), "placement", "actuator_count", 13, minimum=0)
    actuator_file = _path(_get(parser, "placement", "actuator_file"), base)
    sensor_mode = _choice(_get(parser, "placement", "sensor_mode"), "placement", "sensor_mode", _SENSOR_MODES, "actuators")
    sensor_count = _int(_get(parser, "placement", "sensor_count"), "placement", "sensor_count", 13, minimum=0)
    sensor_file = _path(_get(parser, "placement", "sensor_file"), base)
    placement_margin = _float(_get(parser, "placement", "margin"), "placement", "margin", 0.04, minimum=0.0)
    placement_candidates = _int(_get(parser, "placement", "candidate_count"), "placement", "candidate_count", 50, minimum=1)
    placement_max_tries = _int(_get(parser, "placement", "max_tries"), "placement", "max_tries", 100, minimum=1)

    grid_points = _int(_get(parser, "simulation", "grid_points"), "simulation", "grid_points", 101, minimum=3)
    diffusivity = _float(_get(parser, "simulation", "diffusivity"), "simulation", "diffusivity", 0.25)
    if diffusivity <= 0:
        raise ConfigError("[simulation] diffusivity must be positive")
    boundary = _choice(_get(parser, "simulation", "boundary"), "simulation", "boundary", BOUNDARIES, "dirichlet_zero")
    sim_dt = _float(_get(parser, "simulation", "dt"), "simulation", "dt", None, allow_auto=True)
    if sim_dt is not None and sim_dt <= 0:
        raise ConfigError("[simulation] dt must be positive or auto")
    substeps = _int(_get(parser, "simulation", "substeps"), "simulation", "substeps", 20, minimum=1)
    sim_steps = _int(_get(parser, "simulation", "steps"), "simulation", "steps", 600, minimum=0)
    sim_initial = _choice(_get(parser, "simulation", "initial"), "simulation", "initial", _INITIAL_PRESETS, "sine")
    sim_initial_file = _path(_get(parser, "simulation", "initial_file"), base)
    excitation_std = _float(_get(parser, "simulation", "excitation_std"), "simulation", "excitation_std", 0.0, minimum=0.0)

    learn_ridge = _float(_get(parser, "learning", "ridge"), "learning", "ridge", None, minimum=0.0, allow_auto=True)

    obs_noise = _float(_get(parser, "observer", "measurement_noise"), "observer", "measurement_noise", 1e-10)
    if obs_noise <= 0:
        raise ConfigError("[observer] measurement_noise must be positive")
    obs_p0 = _float(_get(parser, "observer", "initial_covariance"), "observer", "initial_covariance", 1.0, minimum=0.0)
    obs_floor = _float(_get(parser, "observer", "process_noise_floor"), "observer", "process_noise_floor", 0.0, minimum=0.0)

    ctl_steps = _int(_get(parser, "control", "steps"), "control", "steps", 100, minimum=1)
    q_cost = _float(_get(parser, "control", "q_cost"), "control", "q_cost", 1.0, minimum=0.0)
    r_cost = _float(_get(parser, "control", "r_cost"), "control", "r_cost", 0.1)
    if r_cost <= 0:
        raise ConfigError("[control] r_cost must be positive")
    riccati_tol = _float(_get(parser, "control", "riccati_tol"), "control", "riccati_tol", 1e-12)
    if riccati_tol <= 0:
        raise ConfigError("[control] riccati_tol must be positive")
    riccati_max_iter = _int(_get(parser, "control", "riccati_max_iter"), "control", "riccati_max_iter", 200000, minimum=1)
    feedforward = _bool(_get(parser, "control", "feedforward"), "control", "feedforward", True)
    reference = _choice(_get(parser, "control", "reference"), "control", "reference", _REFERENCE_KINDS, "reachable")
    reference_scale = _float(_get(parser, "control", "reference_scale"), "control", "reference_scale", 0.5)
    ctl_meas_std = _float(_get(parser, "control", "measurement_noise_std"), "control", "measurement_noise_std", 0.0, minimum=0.0)
    ctl_initial = _choice(_get(parser, "control", "initial"), "control", "initial", _INITIAL_PRESETS, "sine")
    ctl_initial_file = _path(_get(parser, "control", "initial_file"), base)

    cluster_tol = _float(_get(parser, "analysis", "cluster_tol"), "analysis", "cluster_tol", None, minimum=0.0, allow_auto=True)
    rank_tol = _float(_get(parser, "analysis", "rank_tol"), "analysis", "rank_tol", None, minimum=0.0, allow_auto=True)

    file_data = _path(_get(parser, "files", "data"), base)
    file_model = _path(_get(parser, "files", "model"), base)
    file_reference = _path(_get(parser, "files", "reference"), base)
    file_truth = _path(_get(parser, "files", "truth"), base)

    out_dir = Path(out_override) if out_override else (_path(_get(parser, "output", "directory"), base) or base / "out")
    plots = _bool(_get(parser, "output", "plots"), "output", "plots", True)
    seed = seed_override if seed_override is not None else _int(_get(parser, "seeds", "master"), "seeds", "master", 0)

    for name, p in [
        ("dictionary file", dict_file),
        ("dictionary candidates_file", cand_file),
        ("placement actuator_file", actuator_file),
        ("placement sensor_file", sensor_file),
        ("simulation initial_file", sim_initial_file),
        ("control initial_file", ctl_initial_file),
        ("files data", file_data),
        ("files model", file_model),
        ("files reference", file_reference),
        ("files truth", file_truth),
    ]:
        if p is not None and not Path(p).is_file():
            raise ConfigError(f"{name} does not exist: {p}")

    if dict_source == "file" and dict_file is None:
        raise ConfigError("[dictionary] source=file requires file=")
    if dict_source == "sparsify" and cand_file is None:
        raise ConfigError("[dictionary] source=sparsify requires candidates_file=")
    if actuator_mode == "file" and actuator_file is None:
        raise ConfigError("[placement] actuator_mode=file requires actuator_file=")
    if sensor_mode == "file" and sensor_file is None:
        raise ConfigError("[placement] sensor_mode=file requires sensor_file=")
    for which, preset, f in [
        ("simulation", sim_initial, sim_initial_file),
        ("control", ctl_initial, ctl_initial_file),
    ]:
        if preset == "file" and f is None:
            raise ConfigError(f"[{which}] initial=file requires initial_file=")
    if reference == "file" and file_reference is None:
        raise ConfigError("[control] reference=file requires [files] reference=")

    return ExperimentConfig(
        kernel_spec=spec,
        bandwidth_grid=bandwidth_grid,
        domain_min=domain_min,
        domain_max=domain_max,
        dict_source=dict_source,
        dict_size=dict_size,
        dict_margin=dict_margin,
        dict_file=dict_file,
        sparsify_candidates_file=cand_file,
        sparsify_budget=budget,
        sparsify_nu=nu,
        actuator_mode=actuator_mode,
        actuator_count=actuator_count,
        actuator_file=actuator_file,
        sensor_mode=sensor_mode,
        sensor_count=sensor_count,
        sensor_file=sensor_file,
        placement_margin=placement_margin,
        placement_candidates=placement_candidates,
        placement_max_tries=placement_max_tries,
        sim_grid_points=grid_points,
        sim_diffusivity=diffusivity,
        sim_boundary=boundary,
        sim_dt=sim_dt,
        sim_substeps=substeps,
        sim_steps=sim_steps,
        sim_initial=sim_initial,
        sim_initial_file=sim_initial_file,
        sim_excitation_std=excitation_std,
        learn_ridge=learn_ridge,
        obs_measurement_noise=obs_noise,
        obs_initial_covariance=obs_p0,
        obs_process_noise_floor=obs_floor,
        ctl_steps=ctl_steps,
        ctl_q_cost=q_cost,
        ctl_r_cost=r_cost,
        ctl_riccati_tol=riccati_tol,
        ctl_riccati_max_iter=riccati_max_iter,
        ctl_feedforward=feedforward,
        ctl_reference=reference,
        ctl_reference_scale=reference_scale,
        ctl_measurement_noise_std=ctl_meas_std,
        ctl_initial=ctl_initial,
        ctl_initial_file=ctl_initial_file,
        check_cluster_tol=cluster_tol,
        check_rank_tol=rank_tol,
        file_data=file_data,
        file_model=file_model,
        file_reference=file_reference,
        file_truth=file_truth,
        out_dir=out_dir,
        plots=plots,
        seed=int(seed),
        config_hash=config_hash_of(path),
        path=path,
    )
