"""
Importance sampling control from the linear Kolmogorov backward equation.

For d = 1 the value function v solves, backward from v(T, x) = |G(x)|,

    v_t + b(x, k1(t, x)) v_x + 0.5 sigma^2(x, k2(t, x)) v_xx = 0

with the interaction means taken against one offline empirical law.  The
control is zeta = sigma * d/dx log v, clipped to [-clip, clip].

Scheme: backward Euler in reverse time, central second differences,
upwinded first differences and reflecting (zero-gradient) boundaries.  The
matrix is an M-matrix with unit row sums, so constants are reproduced and
the discrete maximum principle holds.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd
from scipy.linalg import solve_banded

from .errors import ConfigurationError, KBESolverError, UnsupportedDimensionError
from .models import ModelSpec, Observable
from .particle_system import EmpiricalLaw, kernel_means

logger = logging.getLogger(__name__)

CONTROL_FILE_TAG = "mimc-control v1"


@dataclass(frozen=True)
class GridSpec:
    x_min: float = -8.0
    x_max: float = 8.0
    n_cells: int = 800
    n_tsteps: int = 200

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ConfigurationError(f"grid needs x_min < x_max, got [{self.x_min}, {self.x_max}]")
        if self.n_cells < 8:
            raise ConfigurationError(f"grid needs at least 8 cells, got {self.n_cells}")
        if self.n_tsteps < 1:
            raise ConfigurationError(f"grid needs at least one time step, got {self.n_tsteps}")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_cells + 1)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells


@dataclass(frozen=True)
class ValueField:
    """v(t_k, x_i) on the (n_tsteps + 1) x (n_cells + 1) grid"""
    values: np.ndarray
    grid: GridSpec
    horizon: float

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.grid.n_tsteps + 1)


@dataclass(frozen=True)
class ControlField:
    """
    Nodal control values zeta[k, i] with bilinear interpolation

    ``value_field`` is kept when the control came from a KBE solve; it is
    None for synthetic controls.
    """
    grid: GridSpec
    horizon: float
    zeta: np.ndarray
    clip: float
    value_field: Optional[ValueField] = None

    def __call__(self, t: float, x: np.ndarray) -> np.ndarray:
        return eval_control(self, t, x)


def _law_index(law: EmpiricalLaw, t: float) -> int:
    return int(np.clip(np.rint(t / law.dt), 0, law.N))


def _coefficients(model: ModelSpec, law: EmpiricalLaw, t: float, x: np.ndarray):
    """Drift and diffusion at the nodes, xi frozen at its mean"""
    states = x[:, None]
    k1, k2 = kernel_means(model, states, law.states[_law_index(law, t)])
    param = np.full(x.shape, model.param_mean) if model.has_params else None
    b = model.drift(states, k1, param)[:, 0]
    sig = model.diffusion(states, k2)[:, 0, 0]
    return b, sig


def solve_kbe(model: ModelSpec, law: EmpiricalLaw, grid: GridSpec, observable: Observable,
              floor: float = 1e-12) -> ValueField:
    """Backward solve of the linear KBE with terminal data |G|"""
    if model.dim != 1:
        raise UnsupportedDimensionError(f"control PDE is solved for d=1 only, model has d={model.dim}")

    x = grid.x
    dx = grid.dx
    dt = model.horizon / grid.n_tsteps
    n = x.size

    values = np.empty((grid.n_tsteps + 1, n))
    values[-1] = np.abs(observable(x[:, None]))
    if not np.all(np.isfinite(values[-1])):
        raise KBESolverError("terminal data |G| is not finite on the grid")

    for k in range(grid.n_tsteps - 1, -1, -1):
        b, sig = _coefficients(model, law, k * dt, x)
        a = 0.5 * sig ** 2
        diff = dt * a / dx ** 2
        up = dt * np.maximum(b, 0.0) / dx
        down = dt * np.maximum(-b, 0.0) / dx

        lower = -(diff + down)
        upper = -(diff + up)
        diag = 1.0 + 2.0 * diff + up + down
        # zero-gradient ghost nodes fold the outside neighbour back inside
        upper[0] += lower[0]
        lower[-1] += upper[-1]

        banded = np.zeros((3, n))
        banded[0, 1:] = upper[:-1]
        banded[1] = diag
        banded[2, :-1] = lower[1:]
        try:
            v = solve_banded((1, 1), banded, values[k + 1])
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise KBESolverError(f"tridiagonal solve failed at step {k}: {exc}") from exc

        if not np.all(np.isfinite(v)):
            raise KBESolverError(f"non-finite value field at step {k}")
        scale = max(float(np.max(np.abs(v))), 1.0)
        if np.min(v) < -1e-8 * scale:
            raise KBESolverError(f"value field negative ({np.min(v):.3e}) at step {k}")
        values[k] = np.maximum(v, floor)

    values[-1] = np.maximum(values[-1], floor)
    logger.info(
        f"KBE solved on {n} nodes x {grid.n_tsteps} steps: "
        f"v(0, .) in [{values[0].min():.3e}, {values[0].max():.3e}]"
    )
    return ValueField(values=values, grid=grid, horizon=model.horizon)


def log_gradient(values: np.ndarray, dx: float) -> np.ndarray:
    """d/dx log v along the last axis (central inside, one-sided at the ends)"""
    return np.gradient(np.log(values), dx, axis=-1)


def control_from_value(v: ValueField, model: ModelSpec, law: EmpiricalLaw, clip: float = 10.0) -> ControlField:
    if clip <= 0:
        raise ConfigurationError(f"control clip must be positive, got {clip}")
    x = v.grid.x
    grad = log_gradient(v.values, v.grid.dx)
    zeta = np.empty_like(grad)
    for k, t in enumerate(v.times):
        _, sig = _coefficients(model, law, t, x)
        zeta[k] = sig * grad[k]
    zeta = np.clip(zeta, -clip, clip)
    return ControlField(grid=v.grid, horizon=v.horizon, zeta=zeta, clip=float(clip), value_field=v)


def constant_control(value: float, horizon: float, grid: Optional[GridSpec] = None,
                     clip: Optional[float] = None) -> ControlField:
    grid = grid or GridSpec(n_cells=8, n_tsteps=1)
    clip = abs(value) if clip is None else clip
    zeta = np.full((grid.n_tsteps + 1, grid.n_cells + 1), float(value))
    return ControlField(grid=grid, horizon=float(horizon), zeta=zeta, clip=max(float(clip), 1e-300))


def eval_control(field: ControlField, t: float, x) -> np.ndarray:
    """Bilinear interpolation in (t, x); x is clamped to the grid"""
    grid = field.grid
    x = np.asarray(x, dtype=float)

    tk = np.clip(t / field.horizon * grid.n_tsteps, 0.0, grid.n_tsteps)
    k0 = min(int(np.floor(tk)), grid.n_tsteps - 1)
    wt = tk - k0

    xs = np.clip(x, grid.x_min, grid.x_max)
    xi = (xs - grid.x_min) / grid.dx
    i0 = np.clip(np.floor(xi).astype(int), 0, grid.n_cells - 1)
    wx = xi - i0

    z = field.zeta
    lo = (1.0 - wx) * z[k0, i0] + wx * z[k0, i0 + 1]
    hi = (1.0 - wx) * z[k0 + 1, i0] + wx * z[k0 + 1, i0 + 1]
    return (1.0 - wt) * lo + wt * hi


# =============================================================================
# SERIALIZATION
# =============================================================================

def save_control(field: ControlField, path: Union[str, Path], provenance: Optional[str] = None) -> Path:
    """
    Versioned CSV: one grid header line, then value and control rows

        # mimc-control v1 x_min=.. x_max=.. n_cells=.. n_tsteps=.. horizon=.. clip=..
        kind,t_index,x_0,...,x_n
    """
    path = Path(path)
    grid = field.grid
    header = (
        f"# {CONTROL_FILE_TAG} x_min={grid.x_min!r} x_max={grid.x_max!r} n_cells={grid.n_cells} "
        f"n_tsteps={grid.n_tsteps} horizon={field.horizon!r} clip={field.clip!r}"
    )
    columns = [f"x_{i}" for i in range(grid.n_cells + 1)]
    blocks = []
    if field.value_field is not None:
        blocks.append(("value", field.value_field.values))
    blocks.append(("control", field.zeta))
    frames = []
    for kind, arr in blocks:
        df = pd.DataFrame(arr, columns=columns)
        df.insert(0, "t_index", np.arange(arr.shape[0]))
        df.insert(0, "kind", kind)
        frames.append(df)

    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        if provenance:
            fh.write(provenance + "\n")
        pd.concat(frames, ignore_index=True).to_csv(fh, index=False, float_format="%.17g")
    logger.info(f"Wrote control field to {path}")
    return path


def load_control(path: Union[str, Path]) -> ControlField:
    path = Path(path)
    with open(path) as fh:
        first = fh.readline().strip()
    if not first.startswith(f"# {CONTROL_FILE_TAG}"):
        raise ConfigurationError(f"{path} is not a control file ({CONTROL_FILE_TAG} header missing)")
    fields = dict(item.split("=", 1) for item in first[len(f"# {CONTROL_FILE_TAG}"):].split())
    grid = GridSpec(
        x_min=float(fields["x_min"]),
        x_max=float(fields["x_max"]),
        n_cells=int(fields["n_cells"]),
        n_tsteps=int(fields["n_tsteps"]),
    )
    horizon = float(fields["horizon"])
    clip = float(fields["clip"])

    df = pd.read_csv(path, comment="#")
    data_cols = [f"x_{i}" for i in range(grid.n_cells + 1)]
    zeta = df[df["kind"] == "control"].sort_values("t_index")[data_cols].to_numpy(dtype=float)
    value_rows = df[df["kind"] == "value"].sort_values("t_index")[data_cols].to_numpy(dtype=float)
    value_field = ValueField(value_rows, grid, horizon) if len(value_rows) else None
    if zeta.shape != (grid.n_tsteps + 1, grid.n_cells + 1):
        raise ConfigurationError(f"{path}: control block has shape {zeta.shape}, header disagrees")
    return ControlField(grid=grid, horizon=horizon, zeta=zeta, clip=clip, value_field=value_field)
