import math

import mpmath as mp
import numpy as np
import pytest

from isacsim.array import ArrayConfig, BeamDesign
from isacsim.channel import (C, achievable_rate, dbm_to_watts, echo_snr, path_loss,
                             reflection_coeff, watts_to_dbm, wavelength)

mp.mp.dps = 40


def test_unit_conversions():
    assert dbm_to_watts(30.0) == pytest.approx(1.0)
    assert dbm_to_watts(-80.0) == pytest.approx(1e-11)
    assert watts_to_dbm(1e-3) == pytest.approx(0.0)


def test_wavelength_and_resolution():
    assert wavelength(30e9) == pytest.approx(0.01)
    assert C / (2 * 400e6) == 0.375


@pytest.mark.parametrize("d", [1.0, 12.5, 39.9, 120.0])
def test_path_loss_against_mpmath(d):
    lam = 0.01
    ref = mp.mpf(lam) / (4 * mp.pi * mp.power(mp.mpf(d), mp.mpf("0.95")))
    assert path_loss(d, lam, 0.95) == pytest.approx(float(ref), rel=1e-13)


@pytest.mark.parametrize("d", [5.0, 40.0])
def test_reflection_against_mpmath(d):
    lam, rcs = 0.01, 1.0
    ref = mp.mpf(lam) * mp.sqrt(rcs) / (mp.power(4 * mp.pi, 1.5) * d * d)
    assert reflection_coeff(d, rcs, lam=lam) == pytest.approx(float(ref), rel=1e-13)


def test_vectorised_losses():
    d = np.array([10.0, 20.0])
    assert path_loss(d, 0.01).shape == (2,)
    assert reflection_coeff(d).shape == (2,)
    with pytest.raises(ValueError):
        path_loss(0.0, 0.01)
    with pytest.raises(ValueError):
        reflection_coeff(-1.0)


def test_single_point_budget():
    # full 8x8 beam at ~40 m, 1 W, -80 dBm noise
    d = 40.0
    w = BeamDesign(-0.17, -1.31, 8, 8, ArrayConfig(8, 8, 1.0))
    alpha = path_loss(d, 0.01, 0.95)
    r = achievable_rate(alpha, -0.17, -1.31, w, 1e-11)
    ref = mp.log(1 + mp.mpf(alpha) ** 2 * 64 / mp.mpf("1e-11"), 2)
    assert r == pytest.approx(float(ref), rel=1e-12)
    assert r == pytest.approx(11.8, abs=0.15)


def test_echo_snr_scales_with_gain():
    cfg = ArrayConfig(8, 8, 1.0)
    wide = BeamDesign(0.0, 0.0, 1, 1, cfg)
    narrow = BeamDesign(0.0, 0.0, 8, 8, cfg)
    assert echo_snr(1e-3, 0.0, 0.0, narrow, 1e-11) == pytest.approx(
        64 * echo_snr(1e-3, 0.0, 0.0, wide, 1e-11))
    with pytest.raises(ValueError):
        echo_snr(1e-3, 0.0, 0.0, wide, 0.0)
    with pytest.raises(ValueError):
        achievable_rate(1e-3, 0.0, 0.0, wide, -1.0)


def test_rate_nonnegative():
    w = BeamDesign(0.0, 0.0, 8, 8, ArrayConfig(8, 8, 1.0))
    r = achievable_rate(1e-6, np.linspace(-1, 1, 50), np.zeros(50), w, 1e-11)
    assert np.all(r >= 0)
    assert math.isfinite(float(r.max()))
