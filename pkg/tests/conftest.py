import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from wfvar.circular import kepler_circular, make_circular_ehbc, refine_circular
from wfvar.minkowski import FourVector
from wfvar.trajectory import BoundaryData, Trajectory


def make_static_pair(d=3.0, t2_end=33.0, n=121):
    """Two charges at rest at spatial distance d with canonical EHBC markers:
    the variable window of each particle has length t2_end - d."""
    ts1 = np.linspace(0.0, t2_end + d, n)
    ts2 = np.linspace(-d, t2_end, n)
    tr1 = Trajectory(ts1, np.tile([d, 0.0, 0.0], (n, 1)), np.zeros((n, 3)),
                     particle=1, mass=1.0)
    tr2 = Trajectory(ts2, np.zeros((n, 3)), np.zeros((n, 3)), particle=2, mass=1824.0)
    bd = BoundaryData(
        o_a=FourVector(0.0, d, 0.0, 0.0),
        l_b=FourVector(t2_end, 0.0, 0.0, 0.0),
        t_oa=0.0, t1_end=t2_end - d, lambda1_plus=t2_end + d,
        lambda2_minus=-d, lambda2_plus=d, t2_end=t2_end,
        history1=tr1.segment(t2_end - d, t2_end + d),
        history2=tr2.segment(-d, d),
    )
    return (tr1, tr2), bd


@pytest.fixture(scope="session")
def static_system():
    return make_static_pair()


@pytest.fixture(scope="session")
def kepler100():
    spec, _ = kepler_circular(100.0)
    pair, bd = make_circular_ehbc(spec, arc=2 * np.pi)
    return spec, pair, bd


@pytest.fixture(scope="session")
def refined100():
    spec, _ = kepler_circular(100.0)
    ref = refine_circular(spec)
    pair, bd = make_circular_ehbc(ref, arc=2 * np.pi)
    return ref, pair, bd


@pytest.fixture(scope="session")
def hessian100(refined100):
    from wfvar.second_variation import assemble_hessian

    _, pair, bd = refined100
    return assemble_hessian(pair, bd, n_gauss=4)
