import numpy as np
import pytest

from kernelfield import Dictionary, KernelSpec, LinearModel, SchemaError
from kernelfield.model_io import (
    load_model,
    read_points_csv,
    read_weights_csv,
    save_model,
    write_points_csv,
    write_weights_csv,
)


def test_model_roundtrip_exact(tmp_path):
    rng = np.random.default_rng(0)
    spec = KernelSpec("periodic", 0.73, period=1.31, input_dim=2)
    centers = rng.uniform(0, 1, size=(6, 2))
    d = Dictionary(centers, spec)
    A = rng.standard_normal((6, 6))
    Qh = rng.standard_normal((6, 6))
    model = LinearModel(A, Qh @ Qh.T)
    path = tmp_path / "model.json"
    save_model(path, d, model, {"config_hash": "deadbeef", "seed": 7})
    d2, m2, prov = load_model(path)
    assert np.array_equal(d2.centers, d.centers)
    assert np.array_equal(m2.A, model.A)
    assert np.array_equal(m2.Q, model.Q)
    assert d2.spec == spec
    assert prov == {"config_hash": "deadbeef", "seed": 7}


def test_model_rejects_foreign_json(tmp_path):
    path = tmp_path / "other.json"
    path.write_text('{"format": "something-else"}')
    with pytest.raises(SchemaError):
        load_model(path)


def test_weights_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    W = rng.standard_normal((4, 7))
    times = list(range(7))
    path = tmp_path / "w.csv"
    write_weights_csv(path, times, W, header_comment="config_hash=x")
    t2, W2 = read_weights_csv(path)
    assert t2 == times
    assert np.array_equal(W2, W)


def test_points_roundtrip(tmp_path):
    rng = np.random.default_rng(2)
    pts = rng.uniform(-1, 1, size=(5, 2))
    path = tmp_path / "pts.csv"
    write_points_csv(path, pts)
    back = read_points_csv(path)
    assert np.array_equal(back, pts)
