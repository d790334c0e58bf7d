import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cxbench import rfgen as R
from cxbench.data import DegenerateInputError


def test_psk_points():
    np.testing.assert_allclose(R.CONSTELLATIONS["QPSK"], [1, 1j, -1, -1j], atol=1e-15)
    np.testing.assert_allclose(R.CONSTELLATIONS["BPSK"], [1, -1], atol=1e-15)
    assert R.CONSTELLATIONS["8PSK"][1] == pytest.approx(np.exp(1j * np.pi / 4))


@pytest.mark.parametrize("mod,size", [("QAM16", 16), ("QAM32", 32), ("QAM64", 64), ("8PSK", 8)])
def test_constellations_have_unit_mean_power(mod, size):
    pts = R.CONSTELLATIONS[mod]
    assert len(pts) == size == len(set(np.round(pts, 9)))
    assert np.mean(np.abs(pts) ** 2) == pytest.approx(1.0, abs=1e-12)


def test_qam16_levels():
    # levels +-1, +-3 scaled by 1/sqrt(10)
    lv = np.unique(np.round(R.CONSTELLATIONS["QAM16"].real * math.sqrt(10), 9))
    np.testing.assert_allclose(lv, [-3, -1, 1, 3])


def test_awgn_variance_matches_snr():
    rng = np.random.default_rng(0)
    noise = R.add_awgn(np.zeros(200_000, complex), 0.0, rng)
    assert np.var(noise) == pytest.approx(1.0, rel=0.02)
    noise = R.add_awgn(np.zeros(200_000, complex), 10.0, rng)
    assert np.var(noise) == pytest.approx(0.1, rel=0.02)
    assert np.var(noise.real) == pytest.approx(np.var(noise.imag), rel=0.05)


@given(st.integers(0, 1000))
def test_normalization_modes(seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((3, 1, 16)) + 1j * rng.standard_normal((3, 1, 16))
    np.testing.assert_allclose(np.mean(np.abs(R.normalize(x, "unit_power")) ** 2, axis=-1), 1.0)
    np.testing.assert_allclose(np.abs(R.normalize(x, "unit_magnitude")), 1.0)


def test_normalize_rejects_zero_sequence():
    with pytest.raises(DegenerateInputError):
        R.normalize(np.zeros((1, 1, 4), complex), "unit_power")
    with pytest.raises(ValueError):
        R.normalize(np.ones(4, complex), "peak")


@given(st.floats(0, 2 * np.pi), st.floats(0, 2 * np.pi))
def test_rotation_composes(a, b):
    x = np.array([1 + 2j, -0.5j])
    np.testing.assert_allclose(R.rotate(R.rotate(x, a), b), R.rotate(x, a + b), atol=1e-12)
    np.testing.assert_allclose(np.abs(R.rotate(x, a)), np.abs(x))


def test_condition_validation():
    with pytest.raises(ValueError):
        R.RfCondition("ofdm")
    with pytest.raises(ValueError):
        R.RfCondition("psk_only", snr_db=30.0)
    with pytest.raises(ValueError):
        R.RfCondition("psk_only", rotation="sometimes")
    c = R.RfCondition("unit_mag_mixed")
    assert c.normalization == "unit_magnitude" and len(c.classes) == 5


def test_dataset_deterministic_and_balanced():
    a = R.make_dataset(R.RfCondition("qam_only", seed=3), (16, 4, 4))
    b = R.make_dataset(R.RfCondition("qam_only", seed=3), (16, 4, 4))
    c = R.make_dataset(R.RfCondition("qam_only", seed=4), (16, 4, 4))
    assert a.train.x.tobytes() == b.train.x.tobytes()
    assert a.train.x.tobytes() != c.train.x.tobytes()
    np.testing.assert_array_equal(a.train.class_counts(), [16, 16, 16])
    assert a.train.x.shape == (48, 1, 128)
    assert len(set(a.train.index) | set(a.val.index) | set(a.test.index)) == 48 + 12 + 12


def test_psk_magnitude_carries_no_class_information():
    s = R.make_dataset(R.RfCondition("psk_only", seed=0), (64, 4, 4))
    means = [np.mean(np.abs(s.train.x[s.train.y == k])) for k in range(3)]
    assert max(means) - min(means) < 0.01


def test_rotation_tasks_share_samples_with_psk_only():
    base = R.make_dataset(R.RfCondition("psk_only", seed=1), (8, 4, 4))
    fixed = R.make_dataset(R.RfCondition("fixed_rotation_psk", seed=1), (8, 4, 4))
    aug = R.make_dataset(R.RfCondition("rotation_aug_psk", seed=1), (8, 4, 4))
    np.testing.assert_array_equal(fixed.train.x, base.train.x)
    np.testing.assert_allclose(fixed.test.x, base.test.x * np.exp(1j * R.FIXED_PHI))
    np.testing.assert_allclose(aug.test.x, fixed.test.x)
    np.testing.assert_allclose(np.abs(aug.train.x), np.abs(base.train.x))
    assert not np.allclose(aug.train.x, base.train.x)


def test_replication_cycles_snr_grid():
    s = R.make_dataset(R.RfCondition("awgn_replication", seed=0), (16, 8, 8))
    snr = s.train.meta["snr_db"]
    assert sorted(set(snr)) == sorted(R.SNR_GRID)
    assert np.all(np.bincount(np.searchsorted(sorted(R.SNR_GRID), snr)) == 6)
