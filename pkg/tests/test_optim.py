import numpy as np
import pytest

from fisheripm import nn
from fisheripm.errors import ConfigError, NonFiniteGradient
from fisheripm.optim import AdamState, AlmState, adam_step, lambda_step


def _params(n=1):
    return nn.Params(np.zeros(n), nn.build_layout([("w", (n,), "v")]))


def test_first_step_magnitude_is_lr():
    p = _params()
    st = AdamState.for_params(p, lr=1e-3)
    new, _ = adam_step(st, p, np.array([0.37]))
    assert abs(abs(new.flat[0]) - 1e-3) < 1e-6 * 1e-3


def test_maximize_flips_direction():
    p = _params()
    st = AdamState.for_params(p)
    assert adam_step(st, p, np.array([1.0]), maximize=True)[0].flat[0] > 0
    assert adam_step(st, p, np.array([1.0]))[0].flat[0] < 0


def test_zero_gradient_keeps_params():
    p = _params(3)
    p.flat[:] = [1.0, 2.0, 3.0]
    st = AdamState.for_params(p)
    for _ in range(50):
        p, st = adam_step(st, p, np.zeros(3))
    assert p.flat.tolist() == [1.0, 2.0, 3.0]
    assert np.all(st.u >= 0) and st.t == 50


def test_deterministic_trajectory():
    def run():
        p = _params(4)
        st = AdamState.for_params(p)
        rng = np.random.default_rng(0)
        for _ in range(20):
            p, st = adam_step(st, p, rng.normal(size=4))
        return p.flat
    assert np.array_equal(run(), run())


def test_mask_freezes_entries():
    p = _params(2)
    st = AdamState.for_params(p)
    new, st2 = adam_step(st, p, np.array([1.0, 1.0]), mask=np.array([True, False]))
    assert new.flat[1] == 0.0 and st2.m[1] == 0.0 and new.flat[0] != 0.0


def test_nonfinite_and_incongruent_gradients():
    p = _params(2)
    st = AdamState.for_params(p)
    with pytest.raises(NonFiniteGradient):
        adam_step(st, p, np.array([np.nan, 0.0]))
    with pytest.raises(ConfigError):
        adam_step(st, p, np.zeros(3))


def test_lambda_step_examples():
    assert lambda_step(AlmState(0.0, 0.1), 1.0).lam == 0.0
    assert lambda_step(AlmState(0.0, 0.1), 1.5).lam == pytest.approx(0.05)
    alm = AlmState(0.0, 0.1)
    lams = []
    for _ in range(5):
        alm = lambda_step(alm, 0.4)
        lams.append(alm.lam)
    assert all(a > b for a, b in zip(lams, lams[1:]))


@pytest.mark.parametrize("omega", [0.2, 0.99, 1.01, 3.0])
def test_lambda_increases_iff_constraint_exceeded(omega):
    new = lambda_step(AlmState(0.3, 0.01), omega)
    assert (new.lam > 0.3) == (omega > 1.0)


def test_rho_must_be_positive():
    with pytest.raises(ConfigError):
        AlmState(0.0, 0.0)
