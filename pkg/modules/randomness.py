"""
Keyed random streams for the particle-system noise (omega) and the
decoupled-path noise (omega tilde).

Every draw goes through a StreamKey.  The key is hashed into a numpy
SeedSequence whose spawn key carries (role, alpha, iteration, m1, m2), and
the stream itself is the counter-based Philox generator.  Two identical keys
give bit-identical draws; any differing field gives an independent stream,
so outer samples can be generated in any order on any number of workers.
"""

from dataclasses import dataclass, replace
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from .errors import HierarchyError
from .models import ModelSpec


class StreamRole(Enum):
    OUTER_LAW = 1
    INNER_PATH = 2
    PILOT = 3
    CONTROL_LAW = 4


@dataclass(frozen=True)
class StreamKey:
    master_seed: int
    alpha: Tuple[int, int] = (0, 0)
    m1: int = 0
    m2: Optional[int] = None
    role: StreamRole = StreamRole.OUTER_LAW
    iteration: int = 0

    def generator(self) -> np.random.Generator:
        spawn_key = (
            self.role.value,
            int(self.alpha[0]),
            int(self.alpha[1]),
            int(self.iteration),
            int(self.m1),
            0 if self.m2 is None else int(self.m2) + 1,
        )
        seq = np.random.SeedSequence(entropy=int(self.master_seed) % 2**64, spawn_key=spawn_key)
        return np.random.Generator(np.random.Philox(seq))

    def child(self, **changes) -> "StreamKey":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {
            "master_seed": int(self.master_seed),
            "alpha": [int(self.alpha[0]), int(self.alpha[1])],
            "m1": int(self.m1),
            "m2": self.m2,
            "role": self.role.name,
            "iteration": int(self.iteration),
        }


# =============================================================================
# INCREMENT COARSENING
# =============================================================================

def coarsen_increments(incs, factor: int, axis: int = 0) -> np.ndarray:
    """
    Sum consecutive blocks of ``factor`` increments along ``axis``

    output[k] = incs[k*factor] + ... + incs[(k+1)*factor - 1]
    """
    incs = np.asarray(incs, dtype=float)
    if factor < 1:
        raise HierarchyError(f"coarsening factor must be >= 1, got {factor}")
    if factor == 1:
        return incs.copy()
    axis = axis % incs.ndim
    n = incs.shape[axis]
    if n % factor:
        raise HierarchyError(f"cannot coarsen {n} increments by factor {factor}")
    shape = incs.shape[:axis] + (n // factor, factor) + incs.shape[axis + 1:]
    return incs.reshape(shape).sum(axis=axis + 1)


def coarsen_levels(incs, tau: int, n_target: int, axis: int = 0) -> np.ndarray:
    """
    Coarsen to ``n_target`` increments by repeated factor-tau steps

    Going through every intermediate level keeps the result bit-identical
    to what a coarser sample in the same hierarchy would see.
    """
    incs = np.asarray(incs, dtype=float)
    axis = axis % incs.ndim
    while incs.shape[axis] > n_target:
        incs = coarsen_increments(incs, tau, axis=axis)
    if incs.shape[axis] != n_target:
        raise HierarchyError(f"{n_target} steps is not a tau-power coarsening (tau={tau})")
    return incs


# =============================================================================
# NOISE CONTAINERS
# =============================================================================

@dataclass(frozen=True)
class NoiseBundle:
    """Randomness for P particles: increments [P, n_fine, d], initials [P, d], params [P] or empty"""
    wiener_incs: np.ndarray
    initials: np.ndarray
    params: np.ndarray

    @property
    def P(self) -> int:
        return self.wiener_incs.shape[0]

    @property
    def n_fine(self) -> int:
        return self.wiener_incs.shape[1]

    @property
    def has_params(self) -> bool:
        return self.params.size > 0

    def coarsened(self, factor: int) -> "NoiseBundle":
        return NoiseBundle(coarsen_increments(self.wiener_incs, factor, axis=1), self.initials, self.params)

    def restricted(self, P: int, n_target: int, tau: int) -> "NoiseBundle":
        """First P particles, increments coarsened level by level to n_target"""
        if P > self.P:
            raise HierarchyError(f"bundle holds {self.P} particles, {P} requested")
        incs = coarsen_levels(self.wiener_incs[:P], tau, n_target, axis=1)
        params = self.params[:P] if self.has_params else self.params
        return NoiseBundle(np.ascontiguousarray(incs), np.ascontiguousarray(self.initials[:P]), params)


@dataclass(frozen=True)
class PathNoise:
    """Randomness for M decoupled paths: increments [M, n_fine, d], initial [M, d], param [M] or empty"""
    wiener_incs: np.ndarray
    initial: np.ndarray
    param: np.ndarray

    @property
    def M(self) -> int:
        return self.wiener_incs.shape[0]

    @property
    def n_fine(self) -> int:
        return self.wiener_incs.shape[1]

    @property
    def has_params(self) -> bool:
        return self.param.size > 0

    def coarsened(self, factor: int) -> "PathNoise":
        return PathNoise(coarsen_increments(self.wiener_incs, factor, axis=1), self.initial, self.param)

    def restricted(self, n_target: int, tau: int) -> "PathNoise":
        return PathNoise(coarsen_levels(self.wiener_incs, tau, n_target, axis=1), self.initial, self.param)


def _draw(rng: np.random.Generator, model: ModelSpec, n: int, n_fine: int):
    initials = np.asarray(model.init_sampler(rng, n), dtype=float).reshape(n, model.dim)
    if model.has_params:
        params = np.asarray(model.param_sampler(rng, n), dtype=float).reshape(n)
    else:
        params = np.empty(0)
    scale = np.sqrt(model.horizon / n_fine)
    incs = scale * rng.standard_normal((n, n_fine, model.dim))
    return incs, initials, params


def draw_bundle(key: StreamKey, model: ModelSpec, P: int, n_fine: int) -> NoiseBundle:
    """Particle-system randomness, a pure function of the key"""
    if P < 1 or n_fine < 1:
        raise HierarchyError(f"need P >= 1 and n_fine >= 1, got P={P}, n_fine={n_fine}")
    incs, initials, params = _draw(key.generator(), model, P, n_fine)
    return NoiseBundle(incs, initials, params)


def draw_paths(key: StreamKey, model: ModelSpec, M: int, n_fine: int) -> PathNoise:
    """Randomness for a batch of M decoupled paths"""
    if M < 1 or n_fine < 1:
        raise HierarchyError(f"need M >= 1 and n_fine >= 1, got M={M}, n_fine={n_fine}")
    incs, initial, param = _draw(key.generator(), model, M, n_fine)
    return PathNoise(incs, initial, param)


def split_groups(bundle: NoiseBundle, tau: int) -> List[NoiseBundle]:
    """Contiguous split of the particles into tau equally sized groups"""
    if tau < 1 or bundle.P % tau:
        raise HierarchyError(f"cannot split {bundle.P} particles into {tau} groups")
    size = bundle.P // tau
    groups = []
    for a in range(tau):
        sl = slice(a * size, (a + 1) * size)
        params = bundle.params[sl] if bundle.has_params else bundle.params
        groups.append(NoiseBundle(
            np.ascontiguousarray(bundle.wiener_incs[sl]),
            np.ascontiguousarray(bundle.initials[sl]),
            params,
        ))
    return groups
