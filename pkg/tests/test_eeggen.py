import numpy as np
import pytest

from cxbench import eeggen as E


def _circ_mean(a):
    return np.angle(np.mean(np.exp(1j * a)))


@pytest.mark.parametrize("label", range(4))
def test_phase_locking_lag(label):
    rng = np.random.default_rng(label)
    s = E.gen_phase_locking(label, rng)
    lag = _circ_mean(np.angle(s.channels[1]) - np.angle(s.channels[0]))
    assert abs(np.angle(np.exp(1j * (lag - E.LAGS[label])))) < 0.2
    assert s.channels.shape == (4, E.T)


@pytest.mark.parametrize("label", range(4))
def test_amplitude_event_peaks_on_labelled_channel(label):
    rng = np.random.default_rng(10 + label)
    s = E.gen_amplitude_event(label, rng)
    peaks = np.abs(s.channels).max(axis=1)
    assert np.argmax(peaks) == label


def test_pac_envelope_follows_slow_phase():
    cfg = E.EegConfig(task="pac", phase_walk=0.0)
    for label in range(4):
        s = E.gen_pac(label, np.random.default_rng(label), cfg)
        slow = np.angle(s.channels[0])
        env = np.abs(s.channels[1])
        # envelope is maximal where slow phase + offset ~ 0
        best = np.angle(np.exp(1j * (slow[np.argmax(env)] + E.LAGS[label])))
        assert abs(best) < 0.4


def test_reference_shift_and_aug():
    rng = np.random.default_rng(0)
    s = E.gen_phase_locking(0, rng)
    r = E.reference_shift(s, 0.7)
    np.testing.assert_allclose(r.channels, s.channels * np.exp(0.7j))
    x = np.ones((5, 4, 8), complex)
    aug = E.reference_aug(x, rng)
    np.testing.assert_allclose(np.abs(aug), 1.0)
    # common mode: every channel of a sample shares the rotation
    assert np.allclose(np.angle(aug[:, 0]), np.angle(aug[:, 3]))


def test_datasets():
    small = (8, 4, 4)
    base = E.make_eeg_dataset(E.EegConfig("phase_locking", seed=1), small)
    shift = E.make_eeg_dataset(E.EegConfig("reference_shift", seed=1), small)
    np.testing.assert_array_equal(shift.train.x, base.train.x)
    np.testing.assert_allclose(shift.test.x, base.test.x * np.exp(1j * np.pi / 3))
    assert base.train.x.shape == (32, 4, 64)
    np.testing.assert_array_equal(base.train.class_counts(), [8, 8, 8, 8])
    with pytest.raises(ValueError):
        E.EegConfig(task="sleep_staging")
