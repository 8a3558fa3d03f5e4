import json
import math

import numpy as np
import pytest

from kernelfield import (
    Dictionary,
    KernelSpec,
    generate_synthetic_field_data,
    write_grid_csv,
)
from kernelfield.cli import main
from kernelfield.model_io import load_model, save_model, write_points_csv
from kernelfield.sysid import LinearModel


TRAIN_INI = """
[kernel]
family = gaussian
bandwidth = 0.05

[dictionary]
source = uniform
size = 25
margin = 0.04

[simulation]
grid_points = 101
diffusivity = 0.25
substeps = 20
steps = 600
initial = zero
excitation_std = 0.1

[output]
directory = {out}

[seeds]
master = 0
"""

LEARN_INI = """
[kernel]
family = gaussian
bandwidth = 0.05

[dictionary]
source = uniform
size = 25
margin = 0.04

[simulation]
substeps = 20

[files]
data = {data}

[output]
directory = {out}
"""

CONTROL_INI = """
[kernel]
family = gaussian
bandwidth = 0.05

[dictionary]
source = uniform
size = 25
margin = 0.04

[placement]
actuator_mode = uniform
actuator_count = 13
sensor_mode = actuators
margin = 0.04

[simulation]
grid_points = 101
diffusivity = 0.25
substeps = 20

[control]
steps = 100
reference = {reference}
initial = {initial}
{extra}

[observer]
measurement_noise = 1e-10

[files]
model = {model}
{files_extra}

[output]
directory = {out}

[seeds]
master = 0
"""


@pytest.fixture(scope="session")
def pipeline(tmp_path_factory):
    """Shared simulate -> learn run used by the control/check/observe tests."""
    root = tmp_path_factory.mktemp("pipeline")
    train_cfg = root / "train.ini"
    train_cfg.write_text(TRAIN_INI.format(out=root / "sim"))
    assert main(["simulate", "--config", str(train_cfg)]) == 0
    learn_cfg = root / "learn.ini"
    learn_cfg.write_text(LEARN_INI.format(data=root / "sim" / "trajectory.csv",
                                          out=root / "learn"))
    assert main(["learn", "--config", str(learn_cfg)]) == 0
    return root


def read_trace(path):
    return np.loadtxt(path, delimiter=",", skiprows=2)


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def test_simulate_zero_steps_single_state(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[simulation]\nsteps = 0\ngrid_points = 11\n"
                   f"[output]\ndirectory = {tmp_path/'out'}\n")
    assert main(["simulate", "--config", str(cfg)]) == 0
    lines = (tmp_path / "out" / "trajectory.csv").read_text().splitlines()
    assert lines[1] == "step,x,value"
    assert len(lines) == 2 + 11  # one recorded state


def test_simulate_deterministic_and_force(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[simulation]\nsteps = 5\ngrid_points = 21\nexcitation_std = 0.1\n"
                   "[dictionary]\nsize = 5\n"
                   f"[output]\ndirectory = {tmp_path/'out'}\n[seeds]\nmaster = 3\n")
    assert main(["simulate", "--config", str(cfg)]) == 0
    first = (tmp_path / "out" / "trajectory.csv").read_bytes()
    assert main(["simulate", "--config", str(cfg)]) == 4  # refuses overwrite
    assert main(["simulate", "--config", str(cfg), "--force"]) == 0
    assert (tmp_path / "out" / "trajectory.csv").read_bytes() == first


def test_simulate_sine_decay_matches_analytic(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[simulation]\ngrid_points = 201\ndiffusivity = 0.25\n"
                   "substeps = 50\nsteps = 20\ninitial = sine\n"
                   f"[output]\ndirectory = {tmp_path/'out'}\n")
    assert main(["simulate", "--config", str(cfg)]) == 0
    rows = read_trace(tmp_path / "out" / "trajectory.csv")
    meta = json.loads((tmp_path / "out" / "simulate_metadata.json").read_text())
    dt = meta["dt"]
    t_final = 20 * 50 * dt
    last = rows[rows[:, 0] == 20]
    analytic = np.sin(np.pi * last[:, 1]) * math.exp(-0.25 * math.pi**2 * t_final)
    assert np.max(np.abs(last[:, 2] - analytic)) < 1e-3


def test_simulate_embeds_config_hash(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[simulation]\nsteps = 1\ngrid_points = 11\n"
                   f"[output]\ndirectory = {tmp_path/'out'}\n")
    assert main(["simulate", "--config", str(cfg)]) == 0
    first_line = (tmp_path / "out" / "trajectory.csv").read_text().splitlines()[0]
    assert first_line.startswith("# config_hash=")
    meta = json.loads((tmp_path / "out" / "simulate_metadata.json").read_text())
    assert first_line.endswith(meta["config_hash"])


# ---------------------------------------------------------------------------
# learn
# ---------------------------------------------------------------------------

def synthetic_learn_setup(tmp_path, noise=0.0, steps=20):
    rng = np.random.default_rng(4)
    centers = np.array([0.1, 0.4, 0.7, 1.0])
    spec = KernelSpec("gaussian", 0.3)
    d = Dictionary(centers, spec)
    A_true = 0.9 * np.linalg.qr(rng.standard_normal((4, 4)))[0]
    data = generate_synthetic_field_data(
        d, A_true, rng.standard_normal(4), steps=steps, n_sensors=0,
        noise_std=noise, seed=11, sensor_locations=centers,
    )
    data_path = tmp_path / "data.csv"
    write_grid_csv(data_path, data.sample_sets)
    centers_path = tmp_path / "centers.csv"
    write_points_csv(centers_path, centers)
    cfg = tmp_path / "learn.ini"
    cfg.write_text(
        "[kernel]\nfamily = gaussian\nbandwidth = 0.3\n"
        f"[dictionary]\nsource = file\nfile = {centers_path}\n"
        "[learning]\nridge = 0\n"
        f"[files]\ndata = {data_path}\n"
        f"[output]\ndirectory = {tmp_path/'out'}\n"
    )
    return cfg, A_true, tmp_path / "out"


def test_learn_recovers_known_transition(tmp_path):
    cfg, A_true, out = synthetic_learn_setup(tmp_path)
    assert main(["learn", "--config", str(cfg)]) == 0
    _, model, prov = load_model(out / "model.json")
    assert np.linalg.norm(model.A - A_true, "fro") < 1e-6
    assert "config_hash" in prov


def test_learn_model_reload_exact(tmp_path):
    cfg, _, out = synthetic_learn_setup(tmp_path)
    assert main(["learn", "--config", str(cfg)]) == 0
    d1, m1, _ = load_model(out / "model.json")
    resaved = tmp_path / "resaved.json"
    save_model(resaved, d1, m1)
    d2, m2, _ = load_model(resaved)
    assert np.array_equal(m1.A, m2.A)
    assert np.array_equal(m1.Q, m2.Q)
    assert np.array_equal(d1.centers, d2.centers)


def test_learn_single_step_errors(tmp_path):
    data_path = tmp_path / "one.csv"
    data_path.write_text("t,x,value\n0,0.1,1.0\n0,0.5,0.5\n")
    cfg = tmp_path / "c.ini"
    cfg.write_text(f"[files]\ndata = {data_path}\n"
                   f"[output]\ndirectory = {tmp_path/'out'}\n")
    assert main(["learn", "--config", str(cfg)]) == 2


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------

def write_model(tmp_path, A, centers=None, bandwidth=1.0):
    M = A.shape[0]
    if centers is None:
        centers = np.linspace(0.0, 1.0, M)
    d = Dictionary(centers, KernelSpec("gaussian", bandwidth))
    path = tmp_path / "model.json"
    save_model(path, d, LinearModel(A, np.zeros((M, M))))
    return path


def test_check_identity_cyclic_index(tmp_path):
    model = write_model(tmp_path, np.eye(3))
    cfg = tmp_path / "c.ini"
    cfg.write_text(f"[files]\nmodel = {model}\n"
                   "[placement]\nsensor_mode = uniform\nsensor_count = 2\n"
                   f"[output]\ndirectory = {tmp_path/'out'}\n")
    assert main(["check", "--config", str(cfg)]) == 0
    report = json.loads((tmp_path / "out" / "check_report.json").read_text())
    assert report["cyclic_index"] == 3
    assert not report["observable"]


def test_check_single_sensor_distinct_model(tmp_path):
    model = write_model(tmp_path, np.diag([0.9, 0.6, 0.3]))
    cfg = tmp_path / "c.ini"
    cfg.write_text(f"[files]\nmodel = {model}\n"
                   "[placement]\nsensor_mode = uniform\nsensor_count = 1\n"
                   f"[output]\ndirectory = {tmp_path/'out'}\n")
    assert main(["check", "--config", str(cfg)]) == 0
    report = json.loads((tmp_path / "out" / "check_report.json").read_text())
    assert report["observable"] and report["rank"] == 3
    assert report["shaded"]


def test_check_zero_sensors_reports_unobservable(tmp_path):
    model = write_model(tmp_path, np.diag([0.9, 0.6]))
    cfg = tmp_path / "c.ini"
    cfg.write_text(f"[files]\nmodel = {model}\n"
                   "[placement]\nsensor_mode = uniform\nsensor_count = 0\n"
                   f"[output]\ndirectory = {tmp_path/'out'}\n")
    assert main(["check", "--config", str(cfg)]) == 0  # analysis, not failure
    report = json.loads((tmp_path / "out" / "check_report.json").read_text())
    assert report["n_sensors"] == 0
    assert not report["observable"] and report["rank"] == 0


# ---------------------------------------------------------------------------
# observe
# ---------------------------------------------------------------------------

def test_observe_converges_on_synthetic_stream(tmp_path):
    rng = np.random.default_rng(6)
    centers = np.linspace(0.0, 1.0, 5)
    d = Dictionary(centers, KernelSpec("gaussian", 0.4))
    A_true = 0.85 * np.linalg.qr(rng.standard_normal((5, 5)))[0]
    w0 = rng.standard_normal(5)
    data = generate_synthetic_field_data(
        d, A_true, w0, steps=60, n_sensors=4, noise_std=0.0, seed=2,
    )
    data_path = tmp_path / "data.csv"
    write_grid_csv(data_path, data.sample_sets)
    from kernelfield.model_io import write_weights_csv
    truth_path = tmp_path / "truth.csv"
    write_weights_csv(truth_path, data.times, data.weights)
    model_path = tmp_path / "model.json"
    save_model(model_path, d, LinearModel(A_true, np.zeros((5, 5))))
    cfg = tmp_path / "c.ini"
    cfg.write_text("[kernel]\nbandwidth = 0.4\n"
                   "[observer]\nmeasurement_noise = 1e-12\n"
                   f"[files]\nmodel = {model_path}\ndata = {data_path}\ntruth = {truth_path}\n"
                   f"[output]\ndirectory = {tmp_path/'out'}\n")
    assert main(["observe", "--config", str(cfg)]) == 0
    rows = read_trace(tmp_path / "out" / "observe_trace.csv")
    assert rows[-1, 1] < 1e-6 * max(rows[0, 1], 1.0)


def test_observe_trace_columns_exact(pipeline):
    trace = pipeline / "obs" / "observe_trace.csv"
    cfg = pipeline / "observe.ini"
    cfg.write_text("[kernel]\nbandwidth = 0.05\n"
                   "[dictionary]\nsize = 25\nmargin = 0.04\n"
                   f"[files]\nmodel = {pipeline/'learn'/'model.json'}\n"
                   f"data = {pipeline/'sim'/'trajectory.csv'}\n"
                   f"[output]\ndirectory = {pipeline/'obs'}\n")
    assert main(["observe", "--config", str(cfg)]) == 0
    lines = trace.read_text().splitlines()
    assert lines[1] == "step,error_norm,trace_P"


def test_observe_fills_time_gaps_with_prediction(tmp_path):
    rng = np.random.default_rng(7)
    centers = np.linspace(0.0, 1.0, 4)
    d = Dictionary(centers, KernelSpec("gaussian", 0.4))
    A_true = 0.8 * np.linalg.qr(rng.standard_normal((4, 4)))[0]
    data = generate_synthetic_field_data(
        d, A_true, rng.standard_normal(4), steps=10, n_sensors=3, noise_std=0.0, seed=3,
    )
    kept = [ss for ss in data.sample_sets if ss.time not in (3, 4, 7)]
    data_path = tmp_path / "gappy.csv"
    write_grid_csv(data_path, kept)
    model_path = tmp_path / "model.json"
    save_model(model_path, d, LinearModel(A_true, np.zeros((4, 4))))
    cfg = tmp_path / "c.ini"
    cfg.write_text("[kernel]\nbandwidth = 0.4\n"
                   f"[files]\nmodel = {model_path}\ndata = {data_path}\n"
                   f"[output]\ndirectory = {tmp_path/'out'}\n")
    assert main(["observe", "--config", str(cfg)]) == 0
    rows = read_trace(tmp_path / "out" / "observe_trace.csv")
    assert list(rows[:, 0].astype(int)) == [t for t in range(11) if t not in (3, 4, 7)]
    assert rows[-1, 1] < 1e-6  # still locks on despite the gaps


def test_observe_empty_data(tmp_path):
    model = write_model(tmp_path, np.diag([0.9, 0.6]))
    data_path = tmp_path / "empty.csv"
    data_path.write_text("t,x,value\n")
    cfg = tmp_path / "c.ini"
    cfg.write_text(f"[files]\nmodel = {model}\ndata = {data_path}\n"
                   f"[output]\ndirectory = {tmp_path/'out'}\n")
    assert main(["observe", "--config", str(cfg)]) == 0
    lines = (tmp_path / "out" / "observe_trace.csv").read_text().splitlines()
    assert lines[1] == "step,error_norm,trace_P"
    assert len(lines) == 2


# ---------------------------------------------------------------------------
# control
# ---------------------------------------------------------------------------

def test_control_reachable_reference_converges(pipeline):
    cfg = pipeline / "control.ini"
    cfg.write_text(CONTROL_INI.format(
        reference="reachable", initial="sine", extra="reference_scale = 0.5",
        model=pipeline / "learn" / "model.json", files_extra="",
        out=pipeline / "ctl",
    ))
    assert main(["control", "--config", str(cfg)]) == 0
    meta = json.loads((pipeline / "ctl" / "control_metadata.json").read_text())
    assert meta["final_ratio"] < 0.05
    assert (pipeline / "ctl" / "control_fields.png").exists()
    assert (pipeline / "ctl" / "control_error.png").exists()


def test_control_reference_equal_initial_stays_in_band(pipeline, tmp_path):
    # start the plant at the projection of a bump and ask it to hold the bump
    x = np.linspace(0, 1, 101)
    bump = np.exp(-((x - 0.5) ** 2) / (2 * 0.15**2))
    ref_path = tmp_path / "ref.csv"
    from kernelfield.rkhs import SampleSet
    write_grid_csv(ref_path, [SampleSet(x, bump, time=0)])
    cfg = pipeline / "control_hold.ini"
    cfg.write_text(CONTROL_INI.format(
        reference="file", initial="bump", extra="",
        model=pipeline / "learn" / "model.json",
        files_extra=f"reference = {ref_path}",
        out=pipeline / "ctl_hold",
    ))
    assert main(["control", "--config", str(cfg)]) == 0
    rows = read_trace(pipeline / "ctl_hold" / "control_trace.csv")
    band = 0.05 * np.max(np.abs(bump))
    assert np.max(rows[:, 1]) < band


def test_control_zero_actuators_synthesis_error(pipeline):
    cfg = pipeline / "control_zero.ini"
    cfg.write_text(CONTROL_INI.format(
        reference="reachable", initial="sine", extra="",
        model=pipeline / "learn" / "model.json", files_extra="",
        out=pipeline / "ctl_zero",
    ).replace("actuator_count = 13", "actuator_count = 0"))
    assert main(["control", "--config", str(cfg)]) == 3


def test_control_deterministic(pipeline):
    cfg = pipeline / "control_det.ini"
    cfg.write_text(CONTROL_INI.format(
        reference="reachable", initial="sine", extra="",
        model=pipeline / "learn" / "model.json", files_extra="",
        out=pipeline / "ctl_det",
    ))
    assert main(["control", "--config", str(cfg)]) == 0
    first = (pipeline / "ctl_det" / "control_trace.csv").read_bytes()
    assert main(["control", "--config", str(cfg), "--force"]) == 0
    assert (pipeline / "ctl_det" / "control_trace.csv").read_bytes() == first


# ---------------------------------------------------------------------------
# placement command
# ---------------------------------------------------------------------------

def test_placement_command_reports_counts(tmp_path):
    model = write_model(tmp_path, np.diag([0.9, 0.7, 0.5, 0.3]), bandwidth=1.0)
    cfg = tmp_path / "c.ini"
    cfg.write_text("[kernel]\nbandwidth = 1.0\n"
                   f"[files]\nmodel = {model}\n"
                   "[placement]\ncandidate_count = 30\n"
                   f"[output]\ndirectory = {tmp_path/'out'}\n")
    assert main(["placement", "--config", str(cfg)]) == 0
    report = json.loads((tmp_path / "out" / "placement_report.json").read_text())
    assert report["sensing"]["count"] >= 1
    assert report["actuation"]["count"] >= 1
    assert (tmp_path / "out" / "sensors.csv").exists()
    assert (tmp_path / "out" / "actuators.csv").exists()
