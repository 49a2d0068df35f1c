import math

import numpy as np
import pytest

from tcgpucb.acquisition import (
    IndexParams,
    beta_schedule,
    reward_index,
    satisfying_estimate,
    satisfying_index,
)
from tcgpucb.errors import ValidationError


def params(zeta=0.5, delta=0.05, M=50):
    return IndexParams(zeta=zeta, delta=delta, M=M)


def test_zeta_endpoints_rejected():
    for bad in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(ValidationError):
            params(zeta=bad)


def test_beta_reference_value():
    assert beta_schedule(params(), 10) == pytest.approx(25.41, abs=0.01)


def test_beta_strictly_increasing():
    p = params(M=20, delta=0.1)
    betas = [beta_schedule(p, t) for t in range(1, 1001)]
    assert all(b2 > b1 for b1, b2 in zip(betas, betas[1:]))


def test_beta_doubling_adds_4log2():
    p = params()
    for t in (1, 7, 64):
        assert beta_schedule(p, 2 * t) - beta_schedule(p, t) == pytest.approx(4 * math.log(2), abs=1e-12)


def test_reward_index_values():
    p = params(zeta=0.5)
    assert reward_index(p, 0.2, 0.0, 4.0) == pytest.approx(0.2)
    assert reward_index(p, 0.2, 0.1, 4.0) == pytest.approx(0.6)
    assert reward_index(params(zeta=0.25), 0.2, 0.1, 4.0) == pytest.approx(0.2 + 0.2 / 0.75, abs=1e-12)


def test_satisfying_index_values():
    assert satisfying_index(params(zeta=0.25), 0.2, 0.0, 4.0) == pytest.approx(0.2)
    assert satisfying_index(params(zeta=0.25), 0.2, 0.1, 4.0) == pytest.approx(1.0)


def test_width_limits_as_zeta_grows():
    # satisfying width approaches sqrt(beta)*sigma while reward width blows up
    beta, sigma = 4.0, 0.1
    sat_09 = satisfying_index(params(zeta=0.9), 0.0, sigma, beta)
    sat_05 = satisfying_index(params(zeta=0.5), 0.0, sigma, beta)
    rew_09 = reward_index(params(zeta=0.9), 0.0, sigma, beta)
    rew_05 = reward_index(params(zeta=0.5), 0.0, sigma, beta)
    assert sat_09 < sat_05
    assert rew_09 > rew_05
    assert sat_09 == pytest.approx(math.sqrt(beta) * sigma / 0.9)


def test_indices_coincide_at_half():
    p = params(zeta=0.5)
    for mu, sig in [(0.0, 0.3), (1.2, 0.01), (-0.4, 1.0)]:
        assert reward_index(p, mu, sig, 7.0) == pytest.approx(satisfying_index(p, mu, sig, 7.0))


def test_monotone_in_sigma_and_mu():
    p = params(zeta=0.3)
    sigmas = np.linspace(0, 2, 50)
    rew = [reward_index(p, 0.1, s, 9.0) for s in sigmas]
    sat = [satisfying_index(p, 0.1, s, 9.0) for s in sigmas]
    assert all(b >= a for a, b in zip(rew, rew[1:]))
    assert all(b >= a for a, b in zip(sat, sat[1:]))
    mus = np.linspace(-1, 1, 50)
    rew_mu = [reward_index(p, m, 0.5, 9.0) for m in mus]
    assert all(b > a for a, b in zip(rew_mu, rew_mu[1:]))


def test_satisfying_estimate_direction():
    p = params(zeta=0.5)
    up = satisfying_estimate(p, 0.2, 0.1, 4.0, direction=+1)
    down = satisfying_estimate(p, 0.2, 0.1, 4.0, direction=-1)
    assert up == pytest.approx(satisfying_index(p, 0.2, 0.1, 4.0))
    assert down == pytest.approx(0.2 - (up - 0.2))


def test_vectorized_inputs():
    p = params()
    mu = np.array([0.1, 0.2])
    sig = np.array([0.0, 0.1])
    out = reward_index(p, mu, sig, 4.0)
    np.testing.assert_allclose(out, [0.1, 0.6])
