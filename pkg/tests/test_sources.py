import math

import numpy as np
import pytest

from qpol.rng import RandomStream
from qpol.sources import (
    FixedBeta,
    PairSourceSpec,
    SingleSourceSpec,
    UniformBeta,
    emit_pair,
    emit_pair_batch,
    emit_photon,
    emit_photon_batch,
)
from qpol.stokes import StokesS


@pytest.mark.parametrize("beta, expected", [(0.0, (1, 1, 0, 0)), (math.pi / 2, (1, -1, 0, 0))])
def test_fixed_beta(beta, expected):
    s = emit_photon(SingleSourceSpec(FixedBeta(beta)), RandomStream(0))
    assert (s.s0, s.s1, s.s2, s.s3) == pytest.approx(expected, abs=1e-12)


def test_uniform_beta_is_symmetric():
    states = emit_photon_batch(SingleSourceSpec(), RandomStream(40, (0, 0)), 100_000)
    assert states[:, 1].mean() == pytest.approx(0.0, abs=0.01)
    assert np.mean(states[:, 1] > 0) == pytest.approx(0.5, abs=0.005)


def test_emissions_are_pure_states():
    states = emit_photon_batch(SingleSourceSpec(amplitude=1.3, delta=0.4), RandomStream(1), 1000)
    norm = np.sqrt((states[:, 1:] ** 2).sum(axis=1))
    np.testing.assert_allclose(norm, states[:, 0], rtol=1e-12)


def test_photon_scalar_matches_batch():
    one, many = RandomStream(3, (0, 1)), RandomStream(3, (0, 1))
    scalar = [emit_photon(SingleSourceSpec(), one).as_array() for _ in range(200)]
    np.testing.assert_allclose(scalar, emit_photon_batch(SingleSourceSpec(), many, 200), atol=1e-15)


class ZeroStream:
    def uniform(self, size=None):
        return 0.0 if size is None else np.zeros(size)


def test_coupled_pair_with_zero_angle():
    a, b = emit_pair(PairSourceSpec(coupled=True), ZeroStream())
    assert a == b == StokesS(1, 1, 0, 0)


def test_coupled_pairs_share_s1_exactly():
    a, b = emit_pair_batch(PairSourceSpec(coupled=True), RandomStream(5), 50_000)
    assert np.array_equal(a[:, 1], b[:, 1])
    rng = RandomStream(5)
    for _ in range(200):
        x, y = emit_pair(PairSourceSpec(), rng)
        assert x.s1 == y.s1


def test_uncoupled_signs_uncorrelated():
    a, b = emit_pair_batch(PairSourceSpec(coupled=False), RandomStream(6, (0, 0)), 100_000)
    corr = np.mean(np.sign(a[:, 1]) * np.sign(b[:, 1]))
    assert corr == pytest.approx(0.0, abs=0.01)


@pytest.mark.parametrize("coupled", [True, False])
def test_pair_scalar_matches_batch_and_replays(coupled):
    spec = PairSourceSpec(coupled=coupled)
    one, many = RandomStream(8, (2, 0)), RandomStream(8, (2, 0))
    scalar = [emit_pair(spec, one) for _ in range(300)]
    a, b = emit_pair_batch(spec, many, 300)
    np.testing.assert_allclose([x.as_array() for x, _ in scalar], a, atol=1e-15)
    np.testing.assert_allclose([y.as_array() for _, y in scalar], b, atol=1e-15)
    replay = RandomStream(8, (2, 0))
    assert [emit_pair(spec, replay) for _ in range(300)] == scalar


def test_spec_validation():
    with pytest.raises(ValueError):
        SingleSourceSpec(UniformBeta(), amplitude=0.0)
    with pytest.raises(ValueError):
        PairSourceSpec(amplitude=-1.0)
