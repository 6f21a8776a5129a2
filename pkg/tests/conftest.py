import math

import numpy as np
import pytest

from dgmeanfield.set_functions import CutGraph, FlidModel, ModularFunction

# Reference values computed independently with 30-digit mpmath arithmetic.
SIGMA1 = 0.7310585786300049          # sigma(1)
SOFTPLUS1 = 1.3132616875182228       # ln(1 + e)
LN2 = math.log(2.0)
EDGE_LOGZ = 1.743668380628679        # ln(3 + e)
EDGE_LOGZ_BETA2 = 2.340752953913131   # ln(3 + e^2)
EDGE_DRDG_X = (0.6512355650510315, 0.34271115960575527)
EDGE_DRDG_VALUE = 1.7175457056416281
EDGE_SUBDG_X = (0.7310585786300049, 0.3249624726231763)
EDGE_SUBDG_VALUE = 1.706248681059424
EDGE_CA_X = (0.6590460684, 0.3409539316)
EDGE_CA_VALUE = 1.7176740973
EDGE_UPPER = 2.006408868078168
EDGE_PA_EXACT = -1.1465838073442272
EDGE_PA_X = (0.8439469994, 0.1560530006)
EDGE_PA_ELBO = 2.2906260885
EDGE_PA_BOUND = -1.7221916476


@pytest.fixture
def edge():
    """Directed single edge 0 -> 1 with unit weight."""
    return CutGraph(2, [(0, 1, 1.0)], directed=True)


@pytest.fixture
def flid2():
    """n=2, D=1 FLID with W=[[1],[2]] and u'=0."""
    return FlidModel([[1.0], [2.0]], [1.0, 2.0])


@pytest.fixture
def zero3():
    return ModularFunction(np.zeros(3))


def trap_cut(c=20.0, b=5.0):
    """Four-node directed cut with a poor coordinate-ascent fixed point."""
    return CutGraph(4, [(0, 1, c), (1, 2, c), (2, 3, c), (2, 1, b * c)], directed=True)


def pytest_terminal_summary(terminalreporter):
    acceptance = __import__("sys").modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(acceptance.RESULTS):
        terminalreporter.write_line(acceptance.format_line(k))
