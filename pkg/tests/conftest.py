from fractions import Fraction

import numpy as np
import pytest

from repdim.builders import InterpolationData, preset_interpolation, interpolation_system, takagi_system
from repdim.conditions import transitivity
from repdim.core import BaseBranch, FiberBranch, build_system

F = Fraction
ONE = ((F(1),),)


@pytest.fixture(scope="session")
def takagi():
    return takagi_system(2, F(3, 4))


@pytest.fixture(scope="session")
def t1():
    return preset_interpolation("T1")


@pytest.fixture(scope="session")
def t2():
    return preset_interpolation("T2")


@pytest.fixture(scope="session")
def beta32():
    return takagi_system(F(3, 2), F(3, 4))


def diagonal_system(ratios=(F(3, 2), F(4, 3))):
    """Doubling base, uncoupled fibers with a common fixed point at 0."""
    cells = [((F(0), F(1, 2)),), ((F(1, 2), F(1)),)]
    bases = [BaseBranch(0, F(2), ONE, (F(0),)), BaseBranch(1, F(2), ONE, (F(-1),))]
    fibers = [FiberBranch(r, ONE, ((F(0),),), (F(0),)) for r in ratios]
    return build_system(1, 1, cells, bases, fibers)


@pytest.fixture(scope="session")
def diagonal():
    return diagonal_system()


def random_interpolation(rng, n_branches=3):
    """Random fractal interpolation system on a rational grid; Markov by construction."""
    for _ in range(1000):
        cuts = sorted(rng.choice(np.arange(1, 12), size=n_branches - 1, replace=False))
        xs = [F(0)] + [F(int(c), 12) for c in cuts] + [F(1)]
        ys = [F(int(v), 6) for v in rng.integers(-6, 7, size=n_branches + 1)]
        nodes = list(zip(xs, ys))
        assign, lams = [], []
        for i in range(n_branches):
            k = int(rng.integers(0, n_branches))
            l = int(rng.integers(k + 1, n_branches + 1))
            ratio = (xs[l] - xs[k]) / (xs[i + 1] - xs[i])
            if ratio <= F(11, 10):
                break
            assign.append((k, l))
            lams.append(1 + (ratio - 1) * F(int(rng.integers(2, 9)), 10))
        else:
            system = interpolation_system(InterpolationData.create(nodes, assign, lams))
            if transitivity(system)["holds"]:
                return system
    raise RuntimeError("no admissible random system found")
