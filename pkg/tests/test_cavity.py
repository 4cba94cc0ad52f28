import math

import numpy as np
import pytest

from cqad.cavity import (
    DEFAULT_R_MIN,
    comb,
    device_mode_set,
    fp_anchor,
    fp_fsr,
    fp_mode_set,
    fsr,
    leakage_linewidth,
    ring_fsr,
    ring_mode_set,
    round_trip_retention,
)
from cqad.core import ValidationError
from cqad.wave import bragg_frequency

import devices as dev


def test_fsr_values():
    assert fsr(3840, 300e-6) == pytest.approx(6.4e6, rel=1e-15)
    assert fsr(3600, 300e-6) == pytest.approx(6.0e6, rel=1e-15)
    assert fsr(4050, 4050 / 7.1e6, "ring") == pytest.approx(7.1e6, rel=1e-15)


def test_fsr_rejects_bad_input():
    for args in ((0, 1e-3), (3840, -1e-3)):
        with pytest.raises(ValueError):
            fsr(*args)
    with pytest.raises(ValueError):
        fsr(3840, 1e-3, "spiral")


def test_ring_with_double_length_matches_fp():
    assert fsr(3840, 2 * 300e-6, "ring") == fsr(3840, 300e-6, "fp")


def test_comb_is_exact():
    f = comb(5.34e9, 6.4e6, (5.1e9, 5.4e9))
    steps = np.diff(f)
    assert np.max(np.abs(steps - 6.4e6)) < 1e-6
    assert f[0] >= 5.1e9 and f[-1] <= 5.4e9
    with pytest.raises(ValueError):
        comb(5.34e9, 6.4e6, (5.4e9, 5.1e9))


def test_fp_anchor_defaults_to_bragg_frequency():
    spec = dev.fp_spec()
    assert fp_anchor(spec) == pytest.approx(bragg_frequency(spec.left_mirror, spec.material))
    assert fp_anchor(dev.fp_spec(anchor_frequency=5.3e9)) == 5.3e9


def test_fp_modes_follow_comb():
    spec = dev.fp_spec()
    ms = fp_mode_set(spec, (5.18e9, 5.30e9))
    assert len(ms) == 19
    f = ms.frequencies
    assert np.max(np.abs(np.diff(f) - fp_fsr(spec))) < 1e-5


def test_fp_linewidth_from_intrinsic_q_near_5_27_ghz():
    ms = fp_mode_set(dev.fp_spec(), (5.26e9, 5.275e9))
    m = min(ms, key=lambda m: abs(m.frequency - 5.27e9))
    assert m.linewidth == pytest.approx(2.40e6, rel=0.01)


def test_perfect_mirrors_leave_intrinsic_width():
    ideal = dev.fp_spec(
        left_mirror=dev.fp_mirror(strip_count=2000),
        right_mirror=dev.fp_mirror(strip_count=2000),
    )
    ms = fp_mode_set(ideal, (5.30e9, 5.36e9))
    np.testing.assert_allclose(ms.linewidths, ms.frequencies / dev.FP_Q, rtol=1e-12)


def test_intrinsic_loss_is_additive():
    band = (5.0e9, 5.3e9)
    with_q = fp_mode_set(dev.fp_spec(), band)
    without = fp_mode_set(dev.fp_spec(intrinsic_q=None), band)
    np.testing.assert_allclose(
        with_q.linewidths - without.linewidths, with_q.frequencies / dev.FP_Q, rtol=1e-9
    )


def test_leaky_modes_flagged_not_dropped():
    spec = dev.fp_spec()
    ms = fp_mode_set(spec, (4.95e9, 5.30e9))
    rt = round_trip_retention(ms.frequencies, spec)
    flags = np.array([m.lossy for m in ms])
    np.testing.assert_array_equal(flags, rt < DEFAULT_R_MIN)
    assert flags.any() and not flags.all()


def test_leakage_linewidth_formula():
    assert leakage_linewidth(1.0, 6.4e6) == 0.0
    assert leakage_linewidth(math.exp(-1), 6.4e6) == pytest.approx(6.4e6 / (2 * math.pi))
    assert np.isfinite(leakage_linewidth(0.0, 6.4e6))


def test_retention_table_matches_direct():
    spec = dev.fp_spec()
    f = np.linspace(5.2e9, 5.3e9, 37)
    np.testing.assert_allclose(round_trip_retention(f, spec, grid=0.1e6), round_trip_retention(f, spec), atol=1e-4)


def test_lossless_mirrors_without_q_are_rejected():
    ideal = dev.fp_spec(
        left_mirror=dev.fp_mirror(strip_count=4000),
        right_mirror=dev.fp_mirror(strip_count=4000),
        intrinsic_q=None,
    )
    with pytest.raises(ValueError):
        fp_mode_set(ideal, (5.33e9, 5.35e9))


def test_invalid_spec_rejected():
    with pytest.raises(ValidationError):
        fp_mode_set(dev.fp_spec(mirror_separation=-1.0), (5.2e9, 5.3e9))


def test_ring_modes_uniform():
    ms = ring_mode_set(dev.ring_spec(), (3.80e9, 3.95e9))
    assert np.all(ms.couplings == 0.36e6)
    np.testing.assert_allclose(ms.linewidths, ms.frequencies / 1.7e3, rtol=1e-15)
    on = ring_mode_set(dev.ring_spec(), (3.866e9, 3.868e9))
    assert len(on) == 1
    assert on.linewidths[0] == pytest.approx(2.275e6, rel=1e-3)


def test_ring_band_narrower_than_fsr():
    assert len(ring_mode_set(dev.ring_spec(), (3.8700e9, 3.8701e9))) == 0
    assert len(ring_mode_set(dev.ring_spec(), (3.8669e9, 3.8671e9))) == 1


def test_ring_fsr_from_circumference():
    assert ring_fsr(dev.ring_spec()) == pytest.approx(7.1e6, rel=1e-15)


def test_device_mode_set_padding():
    spec = dev.ring_spec()
    band = (3.86e9, 3.87e9)
    assert len(device_mode_set(spec, band, 5)) == len(ring_mode_set(spec, band)) + 10
    with pytest.raises(TypeError):
        device_mode_set(object(), band)
