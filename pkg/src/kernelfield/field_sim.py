"""Ground-truth generators: explicit finite-difference diffusion on a 1-D
grid, synthetic weight-dynamics datasets, and delimited sample-file I/O."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InputError, ParseError, SchemaError
from .kernels import kernel_matrix
from .rkhs import Dictionary, SampleSet

BOUNDARIES = ("dirichlet_zero", "neumann_zero")


@dataclass(frozen=True)
class Grid1D:
    """Uniform 1-D grid carrying the field values u_i at x = origin + i dx."""

    values: np.ndarray
    dx: float
    boundary: str = "dirichlet_zero"
    origin: float = 0.0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).ravel()
        if vals.shape[0] < 3:
            raise InputError(f"grid needs at least 3 points, got {vals.shape[0]}")
        if not np.all(np.isfinite(vals)):
            raise InputError("grid values must be finite")
        if not np.isfinite(self.dx) or self.dx <= 0:
            raise InputError(f"grid spacing must be positive, got {self.dx}")
        if self.boundary not in BOUNDARIES:
            raise InputError(
                f"unknown boundary {self.boundary!r}; choose from {BOUNDARIES}"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def n_points(self) -> int:
        return self.values.shape[0]

    def positions(self) -> np.ndarray:
        return self.origin + self.dx * np.arange(self.n_points)


def cfl_limit(b: float, dx: float) -> float:
    """Largest stable time step for the explicit scheme: 0.5 dx^2 / b."""
    return 0.5 * dx * dx / b


def diffusion_step(grid: Grid1D, b: float, dt: float, forcing=None) -> Grid1D:
    """One explicit step of u_t = b u_xx + forcing.

    Interior update u_i += r (u_{i+1} - 2 u_i + u_{i-1}) + dt f_i with
    r = b dt / dx^2, which must not exceed 0.5; the error message names the
    admissible dt.  Boundaries: dirichlet_zero pins the endpoints to zero,
    neumann_zero mirrors the neighbor (zero flux).
    """
    if not np.isfinite(b) or b <= 0:
        raise InputError(f"diffusivity must be positive, got {b}")
    if not np.isfinite(dt) or dt <= 0:
        raise InputError(f"dt must be positive, got {dt}")
    r = b * dt / (grid.dx * grid.dx)
    if r > 0.5 + 1e-12:
        raise InputError(
            f"CFL violation: b dt / dx^2 = {r:.6g} > 0.5; use dt <= {cfl_limit(b, grid.dx):.6g}"
        )
    u = grid.values
    n = grid.n_points
    if forcing is None:
        f = np.zeros(n)
    else:
        f = np.asarray(forcing, dtype=float).ravel()
        if f.shape[0] != n:
            raise InputError(f"forcing length {f.shape[0]} does not match grid size {n}")
        if not np.all(np.isfinite(f)):
            raise InputError("forcing must be finite")
    new = u.copy()
    new[1:-1] = u[1:-1] + r * (u[2:] - 2.0 * u[1:-1] + u[:-2]) + dt * f[1:-1]
    if grid.boundary == "dirichlet_zero":
        new[0] = 0.0
        new[-1] = 0.0
    else:  # neumann_zero: ghost nodes mirror the interior neighbor
        new[0] = u[0] + 2.0 * r * (u[1] - u[0]) + dt * f[0]
        new[-1] = u[-1] + 2.0 * r * (u[-2] - u[-1]) + dt * f[-1]
    return Grid1D(new, grid.dx, grid.boundary, grid.origin)


def simulate_diffusion(initial: Grid1D, b: float, dt: float, steps: int, controls=None):
    """Iterate diffusion_step and record every state (steps + 1 grids).

    controls, when given, is a per-step sequence of forcing vectors sampled
    on the grid (shape (steps, n)).
    """
    steps = int(steps)
    if steps < 0:
        raise InputError(f"steps must be nonnegative, got {steps}")
    if controls is not None:
        controls = np.asarray(controls, dtype=float)
        if controls.ndim == 1:
            controls = controls[None, :]
        if controls.shape[0] != steps or (steps > 0 and controls.shape[1] != initial.n_points):
            raise InputError(
                f"controls shape {controls.shape} does not match ({steps}, {initial.n_points})"
            )
    trajectory = [initial]
    grid = initial
    for k in range(steps):
        forcing = None if controls is None else controls[k]
        grid = diffusion_step(grid, b, dt, forcing)
        trajectory.append(grid)
    return trajectory


@dataclass(frozen=True)
class SyntheticDataset:
    """Seeded synthetic spatiotemporal dataset with its generating truth."""

    times: tuple
    sample_sets: tuple
    dictionary: Dictionary
    transition: np.ndarray
    weights: np.ndarray
    sensor_locations: np.ndarray
    noise_std: float
    process_noise_std: float
    seed: int


def generate_synthetic_field_data(
    dictionary: Dictionary,
    A_true,
    w_0,
    steps: int,
    n_sensors: int,
    noise_std: float,
    seed: int,
    process_noise_std: float = 0.0,
    sensor_locations=None,
) -> SyntheticDataset:
    """Simulate w_{k+1} = A w_k + eta_k and sample the field at fixed sensors.

    Sensors default to a seeded uniform draw over the bounding box of the
    dictionary centers; measurement noise (noise_std) and process noise
    (process_noise_std) are seeded i.i.d. Gaussians.  Identical arguments
    produce identical datasets.
    """
    A = np.asarray(A_true, dtype=float)
    M = dictionary.size
    if A.shape != (M, M):
        raise InputError(f"A shape {A.shape} does not match dictionary size {M}")
    radius = float(np.max(np.abs(np.linalg.eigvals(A)))) if A.size else 0.0
    if radius > 1.05:
        raise InputError(
            f"spectral radius {radius:.4f} > 1.05 would blow up the trajectory"
        )
    w = np.asarray(w_0, dtype=float).ravel()
    if w.shape[0] != M:
        raise InputError(f"w_0 length {w.shape[0]} does not match dictionary size {M}")
    steps = int(steps)
    if steps < 0:
        raise InputError("steps must be nonnegative")
    if noise_std < 0 or process_noise_std < 0:
        raise InputError("noise levels must be nonnegative")

    rng = np.random.default_rng(seed)
    d = dictionary.spec.input_dim
    if sensor_locations is None:
        lo = dictionary.centers.min(axis=0)
        hi = dictionary.centers.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        sensors = lo + span * rng.random((int(n_sensors), d))
    else:
        sensors = np.asarray(sensor_locations, dtype=float)
        if sensors.ndim == 1:
            sensors = sensors[:, None]
    if sensors.shape[0] < 1:
        raise InputError("need at least one sensor")
    K = kernel_matrix(dictionary.spec, sensors, dictionary.centers)

    T = steps + 1
    W = np.empty((M, T))
    W[:, 0] = w
    for k in range(steps):
        eta = process_noise_std * rng.standard_normal(M) if process_noise_std > 0 else 0.0
        W[:, k + 1] = A @ W[:, k] + eta
    sample_sets = []
    for k in range(T):
        zeta = noise_std * rng.standard_normal(sensors.shape[0]) if noise_std > 0 else 0.0
        values = K @ W[:, k] + zeta
        sample_sets.append(SampleSet(sensors, values, time=k))
    return SyntheticDataset(
        times=tuple(range(T)),
        sample_sets=tuple(sample_sets),
        dictionary=dictionary,
        transition=A,
        weights=W,
        sensor_locations=sensors,
        noise_std=float(noise_std),
        process_noise_std=float(process_noise_std),
        seed=int(seed),
    )


def _format_float(v: float) -> str:
    return repr(float(v))


def write_grid_csv(path, sample_sets, header_comment=None):
    """Write time-indexed samples as delimited text: t,x[,y],value rows."""
    sample_sets = list(sample_sets)
    dim = sample_sets[0].locations.shape[1] if sample_sets else 1
    coord_names = ["x", "y", "z"][:dim] if dim <= 3 else [f"x{i}" for i in range(dim)]
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["t", *coord_names, "value"])
        for ss in sample_sets:
            t = 0 if ss.time is None else int(ss.time)
            for loc, val in zip(ss.locations, ss.values):
                writer.writerow([t, *(_format_float(c) for c in loc), _format_float(val)])


def ingest_grid_csv(path):
    """Parse a t,x[,y],value file into per-time SampleSets (sorted by t).

    Lines starting with '#' are comments.  The first column may be named
    t or step; every coordinate column between it and value sets the input
    dimension.  Raises ParseError with the line number on malformed rows and
    SchemaError on inconsistent dimensions.
    """
    groups: dict[int, list] = {}
    dim = None
    with open(path, newline="") as fh:
        header = None
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            cells = [c.strip() for c in line.split(",")]
            if header is None:
                header = cells
                if len(header) < 3 or header[0] not in ("t", "step") or header[-1] != "value":
                    raise SchemaError(
                        f"expected header 't,x[,y],value', got {','.join(header)!r}"
                    )
                dim = len(header) - 2
                continue
            if len(cells) != dim + 2:
                raise ParseError(
                    f"expected {dim + 2} fields, got {len(cells)}", line=lineno
                )
            try:
                t = int(cells[0])
                coords = [float(c) for c in cells[1:-1]]
                value = float(cells[-1])
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from None
            if t < 0:
                raise ParseError(f"negative time index {t}", line=lineno)
            if not all(np.isfinite(c) for c in coords) or not np.isfinite(value):
                raise ParseError("non-finite entry", line=lineno)
            groups.setdefault(t, []).append((coords, value))
    if header is None:
        raise SchemaError(f"{path}: empty file, expected a 't,x[,y],value' header")
    out = []
    for t in sorted(groups):
        rows = groups[t]
        locs = np.array([r[0] for r in rows])
        vals = np.array([r[1] for r in rows])
        out.append(SampleSet(locs, vals, time=t))
    return out


def write_trajectory_csv(path, trajectory, header_comment=None):
    """Dump a grid trajectory as step,x,value rows."""
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["step", "x", "value"])
        for k, grid in enumerate(trajectory):
            xs = grid.positions()
            for x, v in zip(xs, grid.values):
                writer.writerow([k, _format_float(x), _format_float(v)])
