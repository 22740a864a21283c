"""
Model family for McKean-Vlasov SDEs with pairwise interaction kernels.

A ModelSpec bundles the coefficient functions of

    dX = b(X, E[k1(X, Y)], xi) dt + sigma(X, E[k2(X, Y)]) dW

together with the initial law and the optional per-path parameter law.
All callables operate on arrays with a trailing state axis of length d and
are built from module-level functions (via functools.partial) so that a
ModelSpec pickles cleanly into joblib workers.

Kuramoto instance:
    b(x, k1, xi) = xi + coupling * k1,   k1(x, y) = sin(x - y)
    sigma constant, k2 == 0
"""

from dataclasses import dataclass
from functools import partial
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError

ArrayFn = Callable[..., np.ndarray]


@dataclass(frozen=True)
class ModelSpec:
    """
    Immutable description of an MV-SDE model

    Shapes (``...`` is any batch shape):
        drift(x[..., d], k1[...], param[...] | None) -> [..., d]
        diffusion(x[..., d], k2[...]) -> [..., d, d]
        kernel1/kernel2(x[..., d], y[..., d]) -> [...]
        init_sampler(rng, n) -> [n, d]
        param_sampler(rng, n) -> [n]          (optional)
        kernel1_mean/kernel2_mean(x[..., d], law_slice[P, d]) -> [...]
            optional O(P) shortcuts for the interaction means
    """
    dim: int
    horizon: float
    drift: ArrayFn
    diffusion: ArrayFn
    kernel1: ArrayFn
    kernel2: ArrayFn
    init_sampler: ArrayFn
    param_sampler: Optional[ArrayFn] = None
    param_mean: float = 0.0
    kernel1_mean: Optional[ArrayFn] = None
    kernel2_mean: Optional[ArrayFn] = None
    name: str = "custom"

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigurationError(f"model dimension must be >= 1, got {self.dim}")
        if not (self.horizon > 0 and np.isfinite(self.horizon)):
            raise ConfigurationError(f"horizon must be positive and finite, got {self.horizon}")

    @property
    def has_params(self) -> bool:
        return self.param_sampler is not None


@dataclass(frozen=True)
class Observable:
    """Scalar observable G of the terminal state"""
    fn: ArrayFn
    sign_constant: bool = True
    name: str = "custom"

    def __call__(self, x: np.ndarray) -> np.ndarray:
        """Evaluate G on states with a trailing axis of length d"""
        return self.fn(x)


# =============================================================================
# KURAMOTO COEFFICIENTS
# =============================================================================

def _kuramoto_drift(x, k1, param, coupling):
    out = coupling * np.asarray(k1)[..., None] * np.ones_like(x)
    if param is not None:
        out = out + np.asarray(param)[..., None]
    return out


def _constant_diffusion(x, k2, sigma):
    d = x.shape[-1]
    return np.broadcast_to(sigma * np.eye(d), x.shape[:-1] + (d, d))


def _sine_kernel(x, y):
    return np.sin(x[..., 0] - y[..., 0])


def _zero_kernel(x, y):
    return np.zeros(np.broadcast_shapes(x.shape, y.shape)[:-1])


def _sine_kernel_mean(x, law_slice):
    # mean_q sin(x - y_q) = sin(x) mean cos(y) - cos(x) mean sin(y)
    c = np.mean(np.cos(law_slice[:, 0]))
    s = np.mean(np.sin(law_slice[:, 0]))
    return np.sin(x[..., 0]) * c - np.cos(x[..., 0]) * s


def _zero_kernel_mean(x, law_slice):
    return np.zeros(x.shape[:-1])


def _normal_initials(rng, n, mean, sd, dim):
    return mean + sd * rng.standard_normal((n, dim))


def _uniform_params(rng, n, halfwidth):
    return rng.uniform(-halfwidth, halfwidth, size=n)


def make_kuramoto(sigma: float, horizon: float, init_mean: float, init_sd: float,
                  xi_halfwidth: float, coupling: float = 1.0) -> ModelSpec:
    """
    Fully connected Kuramoto oscillators with additive noise

    Args:
        sigma: constant diffusion coefficient
        horizon: final time T
        init_mean, init_sd: normal initial law (sd, not variance)
        xi_halfwidth: natural frequencies xi ~ U(-h, h); 0 switches xi off
        coupling: multiplier of the interaction mean (0 removes interaction)
    """
    if sigma < 0 or init_sd < 0 or xi_halfwidth < 0:
        raise ConfigurationError(
            f"sigma, init_sd and xi_halfwidth must be >= 0 "
            f"(got {sigma}, {init_sd}, {xi_halfwidth})"
        )

    if coupling == 0:
        kernel1, kernel1_mean = _zero_kernel, _zero_kernel_mean
    else:
        kernel1, kernel1_mean = _sine_kernel, _sine_kernel_mean

    return ModelSpec(
        dim=1,
        horizon=float(horizon),
        drift=partial(_kuramoto_drift, coupling=float(coupling)),
        diffusion=partial(_constant_diffusion, sigma=float(sigma)),
        kernel1=kernel1,
        kernel2=_zero_kernel,
        init_sampler=partial(_normal_initials, mean=float(init_mean), sd=float(init_sd), dim=1),
        param_sampler=partial(_uniform_params, halfwidth=float(xi_halfwidth)) if xi_halfwidth > 0 else None,
        param_mean=0.0,
        kernel1_mean=kernel1_mean,
        kernel2_mean=_zero_kernel_mean,
        name="kuramoto",
    )


# =============================================================================
# OBSERVABLES
# =============================================================================

def mollified_indicator(x, K: float):
    """Smooth step 0.5 * (1 + tanh(3 (x - K)))"""
    return 0.5 * (1.0 + np.tanh(3.0 * (np.asarray(x, dtype=float) - K)))


def _mollified_terminal(x, K):
    return mollified_indicator(x[..., 0], K)


def _constant_terminal(x, value):
    return np.full(x.shape[:-1], value, dtype=float)


def make_mollified_observable(K: float) -> Observable:
    return Observable(fn=partial(_mollified_terminal, K=float(K)), sign_constant=True,
                      name=f"mollified_indicator(K={K})")


def constant_observable(value: float = 1.0) -> Observable:
    return Observable(fn=partial(_constant_terminal, value=float(value)), sign_constant=True,
                      name=f"constant({value})")
