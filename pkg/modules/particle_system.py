"""
Euler-Maruyama simulation of the interacting P-particle system.

The full trajectory is kept: decoupled paths read the empirical law at
every grid time t_n = n T / N.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np
import pandas as pd

from .errors import ConfigurationError, SimulationDivergedError
from .models import ModelSpec
from .randomness import NoiseBundle, coarsen_increments

logger = logging.getLogger(__name__)

LAW_COLUMNS = ("step", "time", "particle", "component", "value")


@dataclass(frozen=True)
class EmpiricalLaw:
    """Particle positions states[n, p, :] at t_n = n * horizon / N"""
    states: np.ndarray
    P: int
    N: int
    horizon: float

    @property
    def dt(self) -> float:
        return self.horizon / self.N

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.N + 1)

    def slice_at(self, t: float) -> np.ndarray:
        """Law slice at the grid time nearest to t"""
        n = int(np.clip(np.rint(t / self.dt), 0, self.N))
        return self.states[n]


def interaction_mean(kernel: Callable, x, law_slice: np.ndarray) -> np.ndarray:
    """(1/P) sum_j kernel(x, X_j) for every state in x (trailing axis d)"""
    x = np.asarray(x, dtype=float)
    law_slice = np.asarray(law_slice, dtype=float)
    if law_slice.ndim == 1:
        law_slice = law_slice[:, None]
    if x.ndim == 0:
        x = x.reshape(1)
    values = kernel(x[..., None, :], law_slice)
    return np.mean(values, axis=-1)


def kernel_means(model: ModelSpec, x: np.ndarray, law_slice: np.ndarray, fast: bool = True):
    """Both interaction means (k1, k2) of states x against one law slice"""
    if fast and model.kernel1_mean is not None:
        k1 = model.kernel1_mean(x, law_slice)
    else:
        k1 = interaction_mean(model.kernel1, x, law_slice)
    if fast and model.kernel2_mean is not None:
        k2 = model.kernel2_mean(x, law_slice)
    else:
        k2 = interaction_mean(model.kernel2, x, law_slice)
    return k1, k2


def apply_diffusion(sig: np.ndarray, dw: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,...j->...i", sig, dw)


def law_cost(P: int, N: int, gamma1: float = 1.0, gamma2: float = 1.0) -> float:
    """Work units of one law realization, N^g2 P^(1+g1)"""
    return float(N) ** gamma2 * float(P) ** (1.0 + gamma1)


def simulate_law(model: ModelSpec, bundle: NoiseBundle, P: int, N: int,
                 fast: bool = True) -> EmpiricalLaw:
    """
    Simulate the particle system on N uniform steps using the first P
    particles of the bundle

    Self-interaction (j = p) is part of every kernel mean.
    """
    if bundle.P < P:
        raise ConfigurationError(f"bundle holds {bundle.P} particles, {P} requested")
    if bundle.n_fine % N:
        raise ConfigurationError(f"bundle resolution {bundle.n_fine} is not a multiple of N={N}")

    incs = bundle.wiener_incs[:P]
    if bundle.n_fine != N:
        incs = coarsen_increments(incs, bundle.n_fine // N, axis=1)
    params = bundle.params[:P] if bundle.has_params else None

    dt = model.horizon / N
    states = np.empty((N + 1, P, model.dim))
    x = np.array(bundle.initials[:P], dtype=float)
    states[0] = x

    for n in range(N):
        k1, k2 = kernel_means(model, x, x, fast=fast)
        x = x + model.drift(x, k1, params) * dt + apply_diffusion(model.diffusion(x, k2), incs[:, n, :])
        if not np.all(np.isfinite(x)):
            raise SimulationDivergedError("particle system diverged", step=n + 1)
        states[n + 1] = x

    return EmpiricalLaw(states=states, P=P, N=N, horizon=model.horizon)


def dump_law(law: EmpiricalLaw, path: Union[str, Path], header: Optional[str] = None) -> Path:
    """Write a law trajectory as long-format CSV (step, time, particle, component, value)"""
    path = Path(path)
    steps, particles, components = np.meshgrid(
        np.arange(law.N + 1), np.arange(law.P), np.arange(law.states.shape[2]), indexing="ij"
    )
    df = pd.DataFrame(
        dict(zip(LAW_COLUMNS, (steps.ravel(), law.times[steps.ravel()], particles.ravel(),
                               components.ravel(), law.states.ravel())))
    )
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(header + "\n")
        df.to_csv(fh, index=False, float_format="%.17g")
    logger.info(f"Wrote law trajectory ({law.N + 1} x {law.P}) to {path}")
    return path
