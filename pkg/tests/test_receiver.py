import math

import numpy as np
import pytest

from circle_mimo import (
    ArrayGeometry,
    ChannelProfile,
    DegenerateChannelError,
    NoiseModel,
    achieved_sinr,
    array_response,
    build_family,
    combine,
    decompose_combined,
    desired_gain,
    estimated_sinr,
    exact_sinr,
    interference_gain,
    inverse_channel,
    make_frame,
    per_device_max_se,
    receive,
    sample_channel,
    sinr_bound,
    sum_se_achieved,
    sum_se_max,
    transmit,
)
from conftest import los_channel, random_channel_vector

GEOM16 = ArrayGeometry(n_antennas=16, carrier_freq_hz=100e9)


class TestInverseChannel:
    def test_scalar(self):
        np.testing.assert_allclose(inverse_channel(np.array([2.0 + 0j])), [0.5])

    def test_unit_modulus_self_inverse(self):
        a = array_response(GEOM16, 0.9)
        np.testing.assert_allclose(inverse_channel(a), a, atol=1e-12)

    def test_definitional_identity(self):
        rng = np.random.default_rng(0)
        h = random_channel_vector(rng, 10)
        left = inverse_channel(h) @ np.diag(h.conj())
        np.testing.assert_allclose(left, np.ones(10), atol=1e-12)

    def test_degenerate_rejected(self):
        with pytest.raises(DegenerateChannelError):
            inverse_channel(np.array([1.0, 0.0, 2.0]))
        with pytest.raises(DegenerateChannelError):
            inverse_channel(np.array([1.0, 1e-13, 2.0]))


class TestCombiningGains:
    def test_desired_gain_is_n_any_channel(self, family16):
        rng = np.random.default_rng(1)
        for _ in range(50):
            h = random_channel_vector(rng, 16)
            k = int(rng.integers(1, 17))
            assert abs(desired_gain(h, family16, k) - 16) < 1e-9 * 16

    def test_interference_gain_is_zero_any_channel(self, family16):
        rng = np.random.default_rng(2)
        for _ in range(50):
            h = random_channel_vector(rng, 16)
            k, k2 = rng.choice(np.arange(1, 17), size=2, replace=False)
            assert abs(interference_gain(h, family16, int(k), int(k2))) < 1e-9 * 16

    def test_holds_for_nlos_heavy_channels(self, family16):
        prof = ChannelProfile(nlos_var=2.0, n_nlos=6)
        rng = np.random.default_rng(3)
        for _ in range(20):
            h = sample_channel(GEOM16, 1, rng, prof).h[0]
            assert abs(desired_gain(h, family16, 5) - 16) < 1e-9 * 16
            assert abs(interference_gain(h, family16, 5, 11)) < 1e-9 * 16

    def test_two_antenna_hand_computation(self):
        # h = [1, i]: inverse is [1, i], gain 1*1 + i*(-i) = 2, cross term 0
        fam = build_family(2)
        h = np.array([1.0, 1.0j])
        assert abs(desired_gain(h, fam, 1) - 2.0) < 1e-12
        assert abs(interference_gain(h, fam, 1, 2)) < 1e-12

    def test_same_index_rejected(self, family16):
        with pytest.raises(ValueError):
            interference_gain(np.ones(16), family16, 3, 3)


class TestCombine:
    def test_full_csir_noiseless_recovers_symbols(self, family16, precoders16):
        rng = np.random.default_rng(4)
        prof = ChannelProfile(nlos_var=0.3, n_nlos=3)
        noise = NoiseModel(variance=0.0, tx_power=2.5)
        ch = sample_channel(GEOM16, 1, rng, prof)
        frame = make_frame(16, "qpsk", rng)
        block = receive(ch, transmit(precoders16, frame), noise, rng)
        for k in range(1, 15):
            d = combine(ch.h[0], family16, k, block)
            want = math.sqrt(2.5 * 16) * frame.symbols[k - 1]
            assert abs(d - want) <= 1e-9 * abs(want)

    def test_single_antenna_identity(self):
        # y = sqrt(p_t) h^* s for the 1x1 system; combining undoes the channel
        fam = build_family(1)
        h = np.array([0.3 - 0.8j])
        s = 0.7 + 0.1j
        y = np.array([math.sqrt(2.0) * h[0].conj() * s])
        assert abs(combine(h, fam, 1, y) - math.sqrt(2.0) * s) < 1e-12

    def test_mismatched_channel_leaves_residual(self, family16, precoders16):
        rng = np.random.default_rng(5)
        noise = NoiseModel(variance=0.0, tx_power=1.0)
        ch = los_channel(GEOM16, 1.0 + 0.3j, 0.8)
        frame = make_frame(16, "gaussian", rng)
        block = receive(ch, transmit(precoders16, frame), noise, rng)
        wrong = los_channel(GEOM16, 1.0 + 0.3j, 1.3).h[0]
        d = combine(wrong, family16, 3, block)
        want = math.sqrt(16) * frame.symbols[2]
        assert abs(d - want) > 1e-3


class TestDecomposition:
    def test_reconstitutes_combined_value(self, family16, precoders16):
        rng = np.random.default_rng(6)
        noise = NoiseModel(variance=0.4, tx_power=1.7)
        ch = sample_channel(GEOM16, 1, rng, ChannelProfile(nlos_var=0.2, n_nlos=2))
        frame = make_frame(16, "gaussian", rng)
        block = receive(ch, transmit(precoders16, frame), noise, rng)
        h_hat = los_channel(GEOM16, 0.9, 0.4).h[0]
        out = decompose_combined(
            h_hat, ch.h[0], family16, 7, frame.symbols, noise, block.noise_realization
        )
        direct = combine(h_hat, family16, 7, block)
        assert abs(out.value - direct) < 1e-9 * max(1.0, abs(direct))

    def test_true_channel_gain_and_zero_interference(self, family16):
        rng = np.random.default_rng(7)
        h = random_channel_vector(rng, 16)
        frame = make_frame(16, "gaussian", rng)
        out = decompose_combined(h, h, family16, 2, frame.symbols, NoiseModel(1.0, 1.0))
        assert abs(out.desired_gain - 16) < 1e-9 * 16
        others = np.delete(np.abs(out.interference_terms), 1)
        assert np.max(others) < 1e-9 * 16


class TestSinr:
    def test_exact_and_bound_frozen_example(self):
        h = np.array([1.0, 2.0])
        noise = NoiseModel(variance=1.0, tx_power=1.0)
        assert exact_sinr(h, noise).sinr == pytest.approx(1.6, rel=1e-12)
        assert sinr_bound(h, noise).sinr == pytest.approx(2.5, rel=1e-12)

    def test_pure_los_equality(self):
        noise = NoiseModel(variance=0.7, tx_power=1.3)
        h = (0.8 - 0.6j) * array_response(GEOM16, 1.1)
        e = exact_sinr(h, noise).sinr
        b = sinr_bound(h, noise).sinr
        want = 1.3 * abs(0.8 - 0.6j) ** 2 / 0.7
        assert e == pytest.approx(want, rel=1e-12)
        assert e == pytest.approx(b, rel=1e-12)

    def test_bound_dominates(self):
        rng = np.random.default_rng(8)
        noise = NoiseModel(variance=0.5, tx_power=2.0)
        for _ in range(200):
            h = random_channel_vector(rng, 12)
            assert exact_sinr(h, noise).sinr <= sinr_bound(h, noise).sinr * (1 + 1e-12)

    def test_homogeneity(self):
        h = np.array([0.5, 1.0 + 1.0j, -2.0j])
        noise = NoiseModel(variance=0.9, tx_power=1.0)
        c = 1.7 - 0.4j
        assert exact_sinr(c * h, noise).sinr == pytest.approx(
            abs(c) ** 2 * exact_sinr(h, noise).sinr, rel=1e-12
        )
        assert sinr_bound(c * h, noise).sinr == pytest.approx(
            abs(c) ** 2 * sinr_bound(h, noise).sinr, rel=1e-12
        )

    def test_zero_noise_rejected(self):
        with pytest.raises(ValueError):
            exact_sinr(np.ones(4), NoiseModel(variance=0.0, tx_power=1.0))
        with pytest.raises(ValueError):
            sinr_bound(np.ones(4), NoiseModel(variance=0.0, tx_power=1.0))

    def test_se_bits_consistency(self):
        rep = exact_sinr(np.array([1.0, 2.0]), NoiseModel(1.0, 1.0))
        assert rep.se_bits == pytest.approx(math.log2(1.0 + rep.sinr))


class TestEstimatedSinr:
    def test_noiseless_full_csir_hits_sentinel(self, family16, precoders16):
        rng = np.random.default_rng(9)
        noise = NoiseModel(variance=0.0, tx_power=1.0)
        ch = los_channel(GEOM16, 0.6 + 0.2j, 0.9)
        frame = make_frame(16, "gaussian", rng)
        block = receive(ch, transmit(precoders16, frame), noise, rng)
        rep = estimated_sinr(ch.h[0], family16, block, frame.pilot2, noise)
        assert rep.sinr > 1e20  # residual is pure roundoff
        assert rep.se_bits <= math.log2(1.0 + 1e30)

    def test_wrong_angle_scores_below_truth(self, family16, precoders16):
        rng = np.random.default_rng(10)
        noise = NoiseModel(variance=0.0, tx_power=1.0)
        ch = los_channel(GEOM16, 1.0, 0.7)
        frame = make_frame(16, "gaussian", rng)
        block = receive(ch, transmit(precoders16, frame), noise, rng)
        truth = estimated_sinr(ch.h[0], family16, block, frame.pilot2, noise)
        wrong = estimated_sinr(
            los_channel(GEOM16, 1.0, 1.5).h[0], family16, block, frame.pilot2, noise
        )
        assert wrong.sinr < truth.sinr

    def test_low_snr_order_of_magnitude(self, family16, precoders16):
        # heavily noise-limited: the single-shot estimate scatters around the
        # exact SINR, its median stays within a small factor
        rng = np.random.default_rng(11)
        noise = NoiseModel(variance=10.0, tx_power=0.1)
        ratios = []
        for _ in range(1000):
            ch = sample_channel(GEOM16, 1, rng, ChannelProfile())
            frame = make_frame(16, "gaussian", rng)
            block = receive(ch, transmit(precoders16, frame), noise, rng)
            est = estimated_sinr(ch.h[0], family16, block, frame.pilot2, noise).sinr
            ratios.append(est / exact_sinr(ch.h[0], noise).sinr)
        med = float(np.median(ratios))
        assert 0.5 < med < 3.0


class TestAchievedSinr:
    def test_reduces_to_exact_with_true_channel(self, family16):
        rng = np.random.default_rng(12)
        noise = NoiseModel(variance=0.3, tx_power=1.1)
        h = random_channel_vector(rng, 16)
        got = achieved_sinr(h, h, family16, 4, noise).sinr
        assert got == pytest.approx(exact_sinr(h, noise).sinr, rel=1e-9)

    def test_gain_scale_invariance(self, family16):
        rng = np.random.default_rng(13)
        noise = NoiseModel(variance=0.2, tx_power=1.0)
        h = los_channel(GEOM16, 0.5 + 0.5j, 1.0).h[0]
        h_hat = los_channel(GEOM16, 1.0, 1.02).h[0]
        base = achieved_sinr(h_hat, h, family16, 3, noise).sinr
        for c in (2.0, -1.0j, 0.3 + 0.4j):
            got = achieved_sinr(c * h_hat, h, family16, 3, noise).sinr
            assert got == pytest.approx(base, rel=1e-9)

    def test_grid_maximum_at_matching_sine(self, family16):
        # the exact SINR over a candidate-angle grid peaks exactly where the
        # sine matches the true departure angle (both aliases included)
        noise = NoiseModel(variance=0.05, tx_power=1.0)
        theta = 0.6
        ch = los_channel(GEOM16, 0.9 - 0.1j, theta)
        grid = np.linspace(-math.pi, math.pi, 721, endpoint=False)
        grid = np.concatenate([grid, [theta, math.pi - theta]])
        scores = np.array(
            [
                achieved_sinr(
                    1.0 * array_response(GEOM16, phi), ch.h[0], family16, 5, noise
                ).sinr
                for phi in grid
            ]
        )
        best = np.max(scores)
        matching = np.abs(np.sin(grid) - math.sin(theta)) < 1e-12
        assert np.all(scores[matching] == pytest.approx(best, rel=1e-9))
        assert np.all(scores[~matching] < best * (1 - 1e-9))


class TestSumSe:
    NOISE = NoiseModel(variance=1.0, tx_power=1.0)

    def test_single_device_narrowband_frozen(self):
        geom = ArrayGeometry(n_antennas=4, carrier_freq_hz=1e9)
        # p_t ||h||^2 / (N sigma^2) = 1  ->  R = 1 bit
        h = np.full((1, 1, 4), 1.0, dtype=complex)
        assert sum_se_max(h, self.NOISE, geom) == pytest.approx(1.0)

    def test_wideband_prefactor_and_form(self):
        geom = ArrayGeometry(
            n_antennas=4, carrier_freq_hz=1e9, bandwidth_hz=1e8, n_subcarriers=2, cp_len=3
        )
        h = np.ones((1, 2, 4), dtype=complex)
        want = (math.log2(1 + 4.0) * 2) / (2 + 3)
        assert sum_se_max(h, self.NOISE, geom) == pytest.approx(want)

    def test_combining_bound_divides_by_n(self):
        geom = ArrayGeometry(
            n_antennas=4, carrier_freq_hz=1e9, bandwidth_hz=1e8, n_subcarriers=2, cp_len=3
        )
        h = np.ones((1, 2, 4), dtype=complex)
        want = (math.log2(1 + 1.0) * 2) / (2 + 3)
        assert sum_se_max(h, self.NOISE, geom, kind="combining-bound") == pytest.approx(want)

    def test_monotone_in_channel_power(self):
        geom = ArrayGeometry(n_antennas=8, carrier_freq_hz=1e9)
        rng = np.random.default_rng(14)
        h = np.stack([random_channel_vector(rng, 8) for _ in range(3)])[:, None, :]
        assert sum_se_max(2.0 * h, self.NOISE, geom) > sum_se_max(h, self.NOISE, geom)

    def test_achieved_matches_bound_for_pure_los_true_csir(self, family16):
        geom = GEOM16
        rng = np.random.default_rng(15)
        chans = np.stack(
            [los_channel(geom, 0.5 + rng.standard_normal() * 0.2, rng.uniform(0, 2 * math.pi)).h
             for _ in range(4)]
        )
        noise = NoiseModel(variance=0.1, tx_power=1.0)
        achieved = sum_se_achieved(chans, chans, family16, noise, geom)
        bound = sum_se_max(chans, noise, geom, kind="narrowband-bound")
        assert achieved == pytest.approx(bound, rel=1e-9)

    def test_full_csir_within_two_percent_of_bound_at_10db(self, family16):
        # equal-modulus channels: the combining scheme meets its own bound
        geom = ArrayGeometry(n_antennas=32, carrier_freq_hz=100e9)
        fam32 = build_family(32)
        rng = np.random.default_rng(16)
        noise = NoiseModel(variance=0.1, tx_power=1.0)
        tot_a = tot_b = 0.0
        for _ in range(200):
            chans = np.stack(
                [los_channel(geom, (rng.standard_normal() + 1j * rng.standard_normal()) / math.sqrt(2),
                             rng.uniform(0, 2 * math.pi)).h for _ in range(30)]
            )
            tot_a += sum_se_achieved(chans, chans, fam32, noise, geom)
            tot_b += sum_se_max(chans, noise, geom, kind="narrowband-bound")
        assert tot_a / tot_b > 0.98

    def test_narrowband_kind_requires_single_subcarrier(self):
        geom = ArrayGeometry(
            n_antennas=4, carrier_freq_hz=1e9, bandwidth_hz=1e8, n_subcarriers=2
        )
        with pytest.raises(ValueError):
            per_device_max_se(np.ones((1, 2, 4), complex), self.NOISE, geom, "narrowband-bound")
