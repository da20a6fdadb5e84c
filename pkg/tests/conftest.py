import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qsis.averaging import box_kernel
from qsis.domain import MixedExponents, build_axis, make_product_domain
from qsis.harness import ExperimentConfig, SpaceSpec, build_context
from qsis.sampling import make_density
from qsis.space import (
    analyze_space, build_space, make_bspline_generators, make_shift_system, shift_extent,
)

ROOT = Path(__file__).resolve().parents[1]
REF_CONFIG = ROOT / "configs" / "ref.json"


def reference_space(r=1, num_points=128, shift_seed=0, order=1, scale=0.5, jitter=0.25):
    ax = (build_axis("interval", -0.5, 1.5, num_points),) * 2
    dom = make_product_domain(ax, ((0, 1), (0, 1)), ((-0.25, 0.25), (-0.25, 0.25)))
    gens = make_bspline_generators(order, scale, r)
    sh = make_shift_system(0.5, 0.5, jitter, shift_seed,
                           shift_extent(dom, gens, 0, 0.5), shift_extent(dom, gens, 1, 0.5))
    return build_space(dom, gens, sh)


@pytest.fixture(scope="session")
def e22():
    return MixedExponents(2, 2)


@pytest.fixture(scope="session")
def ref_space():
    return reference_space()


@pytest.fixture(scope="session")
def ref_space_r2():
    return reference_space(r=2)


@pytest.fixture(scope="session")
def ref_analysis(ref_space, e22):
    return analyze_space(ref_space, e22)


@pytest.fixture(scope="session")
def ref_kernel(ref_space):
    return box_kernel(ref_space.domain.W)


@pytest.fixture(scope="session")
def uniform_rho(ref_space):
    return make_density(ref_space.domain.K)


@pytest.fixture(scope="session")
def ref_ctx():
    return build_context(ExperimentConfig())


@pytest.fixture(scope="session")
def ref_ctx_r2():
    return build_context(ExperimentConfig(space=SpaceSpec(r=2)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
