import numpy as np
import pytest

from sparsemud import BitVector, Signal, SparseCode


def make_code(num_users, num_chips, entries, **kw):
    return SparseCode.from_entries(num_users, num_chips, entries, **kw)


def make_signal(values):
    return Signal(y=np.asarray(values, dtype=np.int64), erased=())


def make_bits(values):
    return BitVector(values=np.asarray(values, dtype=np.int8))


@pytest.fixture
def hand_code():
    # chip0 = {u0:+1}; chip1 = {u0:+1, u1:+1}; chip2 = {u1:+1, u2:-1}
    return make_code(3, 3, [(0, 0, 1), (1, 0, 1), (1, 1, 1), (2, 1, 1), (2, 2, -1)])


@pytest.fixture
def hand_signal():
    # transmit of b = (+1, +1, -1) over hand_code
    return make_signal([1, 2, 2])


@pytest.fixture
def stall_code():
    # chip0 = {u0:+1, u1:+1, u2:+1} y=1; chip1 = {u0:+1, u1:-1} y=0:
    # no initial unit clauses, outcome hinges on the first assignment of u0
    return make_code(3, 2, [(0, 0, 1), (0, 1, 1), (0, 2, 1), (1, 0, 1), (1, 1, -1)])


@pytest.fixture
def stall_signal():
    return make_signal([1, 0])
