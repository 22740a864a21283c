"""
Decoupled MV-SDE: the law is frozen to one EmpiricalLaw realization and
paths are driven by independent noise, optionally under an importance
sampling drift shift zeta(t, x) with its likelihood weight.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .control import ControlField
from .errors import ConfigurationError, SimulationDivergedError
from .models import ModelSpec
from .particle_system import EmpiricalLaw, apply_diffusion, kernel_means
from .randomness import PathNoise, coarsen_increments


@dataclass(frozen=True)
class PathResult:
    """Batch of M paths: terminal [M, d], likelihood [M], control_energy [M]"""
    terminal: np.ndarray
    likelihood: np.ndarray
    control_energy: np.ndarray


def simulate_decoupled(model: ModelSpec, law: EmpiricalLaw, control: Optional[ControlField],
                       noise: PathNoise, N: int, fast: bool = True) -> PathResult:
    """
    Euler-Maruyama for the controlled decoupled process

        X(t+dt) = X + [b(X, k1) + sigma(X, k2) zeta(t, X)] dt + sigma(X, k2) dW
        log L  += -0.5 dt |zeta|^2 - <dW, zeta>

    with zeta evaluated at the start of each step.  Without a control the
    likelihood is exactly 1.
    """
    if law.N != N:
        raise ConfigurationError(f"law has N={law.N}, path asked for N={N}")
    if noise.n_fine % N:
        raise ConfigurationError(f"path noise resolution {noise.n_fine} is not a multiple of N={N}")

    incs = noise.wiener_incs
    if noise.n_fine != N:
        incs = coarsen_increments(incs, noise.n_fine // N, axis=1)
    params = noise.param if noise.has_params else None

    dt = model.horizon / N
    x = np.array(noise.initial, dtype=float)
    log_lik = np.zeros(noise.M)
    energy = np.zeros(noise.M)

    for n in range(N):
        dw = incs[:, n, :]
        k1, k2 = kernel_means(model, x, law.states[n], fast=fast)
        sig = model.diffusion(x, k2)
        drift = model.drift(x, k1, params)
        if control is not None:
            zeta = control(n * dt, x)
            drift = drift + apply_diffusion(sig, zeta)
            zz = np.sum(zeta * zeta, axis=-1)
            log_lik += -0.5 * dt * zz - np.sum(dw * zeta, axis=-1)
            energy += zz * dt
        x = x + drift * dt + apply_diffusion(sig, dw)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(log_lik))):
            raise SimulationDivergedError("decoupled path diverged", step=n + 1)

    likelihood = np.exp(log_lik)
    if not np.all(np.isfinite(likelihood)):
        raise SimulationDivergedError("likelihood overflow", step=N)
    return PathResult(terminal=x, likelihood=likelihood, control_energy=energy)
