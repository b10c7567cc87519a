import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def dyadic_points(gen, n, m, scale=8.0, bits=20):
    """Random points snapped to a dyadic grid.

    Coordinates are multiples of 2^-bits with magnitude <= scale, so
    adding an integer translation (or any multiple of 2^-bits with a
    few spare mantissa bits) is exact in float64.  Bit-identity claims
    about translation invariance are only well-posed on such inputs.
    """
    raw = gen.uniform(-scale, scale, size=(n, m))
    return np.round(raw * 2.0**bits) / 2.0**bits


def random_orthogonal(gen, m):
    q, r = np.linalg.qr(gen.standard_normal((m, m)))
    return q * np.sign(np.diag(r))
