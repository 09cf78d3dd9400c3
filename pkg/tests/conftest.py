"""Shared fixtures: seeded planes, kernels, and warmed JIT kernels."""

import numpy as np
import pytest

from percolor.contrast import ContrastVariant, Regularizer
from percolor.image import ChannelPlane
from percolor.kernel import KernelSpec, build_kernel
from percolor.solver import r_field_exact


def random_plane(rng, height, width, lo=0.15, hi=0.95) -> ChannelPlane:
    return ChannelPlane(rng.uniform(lo, hi, size=(height, width)))


@pytest.fixture(scope="session")
def rng_factory():
    def make(seed: int) -> np.random.Generator:
        return np.random.default_rng(seed)

    return make


@pytest.fixture(scope="session")
def kernel_8x8():
    return build_kernel(KernelSpec(), 8, 8)


@pytest.fixture(scope="session", autouse=True)
def warm_jit():
    """Compile the hot inner loops once so timings in tests stay honest."""
    plane = ChannelPlane(np.linspace(0.2, 0.8, 16).reshape(4, 4))
    k = build_kernel(KernelSpec(), 4, 4)
    for kind in ("id", "log", "michelson"):
        r_field_exact(plane, k, ContrastVariant(kind), Regularizer("arctan", 0.05))
    yield
