import numpy as np
import pytest

from hkf.beats import (
    BeatBoundaries,
    HeartbeatTensor,
    MultiChannelSignal,
    NoiseSpec,
    add_gaussian_noise,
    mse_db,
    read_onsets,
    read_signal_csv,
    reassemble_signal,
    segment_beats,
    write_signal_csv,
)
from hkf.errors import DataError

from oracles import interp_linear_reference, mse_db_reference


def make_signal(samples):
    return MultiChannelSignal(samples=np.asarray(samples, dtype=float))


class TestSegmentation:
    def test_exact_period_is_copied_without_resampling(self, rng):
        samples = rng.standard_normal((2, 200))
        tensor = segment_beats(
            make_signal(samples), BeatBoundaries.from_onsets([0, 100, 200]), 100
        )
        assert tensor.beats.shape == (2, 2, 100)
        np.testing.assert_array_equal(tensor.beats[0], samples[:, :100])
        np.testing.assert_array_equal(tensor.beats[1], samples[:, 100:])

    def test_short_beat_matches_reference_interpolation(self, rng):
        samples = rng.standard_normal((1, 80))
        tensor = segment_beats(
            make_signal(samples), BeatBoundaries.from_onsets([0, 80]), 100
        )
        expected = interp_linear_reference(samples[0], 100)
        np.testing.assert_allclose(tensor.beats[0, 0], expected, atol=1e-12)
        assert tensor.original_lengths[0] == 80

    def test_trailing_partial_interval_is_discarded(self, rng):
        samples = rng.standard_normal((1, 150))
        tensor = segment_beats(
            make_signal(samples), BeatBoundaries.from_onsets([0, 100]), 100
        )
        assert tensor.num_beats == 1
        np.testing.assert_array_equal(tensor.beats[0, 0], samples[0, :100])

    def test_period_mode_synthesizes_onsets(self, rng):
        samples = rng.standard_normal((1, 200))
        by_period = segment_beats(make_signal(samples), BeatBoundaries.from_period(50), 50)
        by_onsets = segment_beats(
            make_signal(samples), BeatBoundaries.from_onsets([0, 50, 100, 150, 200]), 50
        )
        np.testing.assert_array_equal(by_period.beats, by_onsets.beats)

    def test_fewer_than_two_onsets_rejected(self, rng):
        signal = make_signal(rng.standard_normal((1, 50)))
        with pytest.raises(DataError, match="insufficient beats"):
            segment_beats(signal, BeatBoundaries.from_onsets([0]), 10)

    def test_out_of_range_onset_rejected(self, rng):
        signal = make_signal(rng.standard_normal((1, 50)))
        with pytest.raises(DataError, match="invalid boundaries"):
            segment_beats(signal, BeatBoundaries.from_onsets([0, 60]), 10)


class TestReassembly:
    def test_round_trip_is_identity_when_gaps_equal_beat_length(self, rng):
        samples = rng.standard_normal((2, 300))
        tensor = segment_beats(make_signal(samples), BeatBoundaries.from_period(100), 100)
        restored = reassemble_signal(tensor)
        np.testing.assert_array_equal(restored.samples, samples)

    def test_resampled_round_trip_matches_composed_interpolations(self, rng):
        samples = rng.standard_normal((1, 80))
        tensor = segment_beats(make_signal(samples), BeatBoundaries.from_onsets([0, 80]), 100)
        restored = reassemble_signal(tensor)
        expected = interp_linear_reference(interp_linear_reference(samples[0], 100), 80)
        np.testing.assert_allclose(restored.samples[0], expected, atol=1e-12)

    def test_single_beat_keeps_original_length(self, rng):
        tensor = HeartbeatTensor(beats=rng.standard_normal((1, 2, 60)))
        assert reassemble_signal(tensor).num_samples == 60


class TestNoiseInjection:
    @pytest.mark.parametrize("snr_db, expected_var", [(0.0, 1.0), (20.0, 0.01)])
    def test_noise_variance_follows_snr(self, snr_db, expected_var):
        rng = np.random.default_rng(5)
        beats = np.sign(rng.standard_normal((40, 1, 2500)))  # unit mean square
        tensor = HeartbeatTensor(beats=beats)
        noisy = add_gaussian_noise(tensor, NoiseSpec(snr_db=snr_db, seed=11))
        injected = noisy.beats - tensor.beats
        assert np.var(injected) == pytest.approx(expected_var, rel=0.05)

    def test_same_seed_is_bit_identical(self, rng):
        tensor = HeartbeatTensor(beats=rng.standard_normal((3, 2, 50)))
        spec = NoiseSpec(snr_db=5.0, seed=99)
        first = add_gaussian_noise(tensor, spec)
        second = add_gaussian_noise(tensor, spec)
        np.testing.assert_array_equal(first.beats, second.beats)

    def test_zero_power_channel_rejected(self):
        tensor = HeartbeatTensor(beats=np.zeros((2, 1, 10)))
        with pytest.raises(DataError, match="degenerate channel"):
            add_gaussian_noise(tensor, NoiseSpec(snr_db=0.0))

    def test_empirical_snr_converges(self, rng):
        # N*m*T = 2*10^5 samples: injected SNR within 0.2 dB of the target
        beats = rng.standard_normal((100, 2, 1000))
        tensor = HeartbeatTensor(beats=beats)
        noisy = add_gaussian_noise(tensor, NoiseSpec(snr_db=7.0, seed=1))
        injected = noisy.beats - beats
        per_channel_snr = 10 * np.log10(
            np.mean(beats**2, axis=(0, 2)) / np.mean(injected**2, axis=(0, 2))
        )
        assert np.all(np.abs(per_channel_snr - 7.0) < 0.2)

    def test_shape_preserved(self, rng):
        tensor = HeartbeatTensor(beats=rng.standard_normal((4, 3, 17)))
        noisy = add_gaussian_noise(tensor, NoiseSpec(snr_db=3.0, seed=2))
        assert noisy.beats.shape == tensor.beats.shape


class TestMseDb:
    def test_constant_error(self):
        truth = HeartbeatTensor(beats=np.zeros((2, 2, 25)))
        estimate = truth.with_beats(np.full((2, 2, 25), 0.1))
        assert mse_db(estimate, truth) == pytest.approx(-20.0, abs=1e-12)

    def test_identical_tensors_hit_floor(self, rng):
        tensor = HeartbeatTensor(beats=rng.standard_normal((3, 1, 30)))
        assert mse_db(tensor, tensor) == -120.0

    def test_matches_extended_precision_reference(self, rng):
        a = HeartbeatTensor(beats=rng.standard_normal((5, 2, 40)))
        b = HeartbeatTensor(beats=rng.standard_normal((5, 2, 40)))
        assert mse_db(a, b) == pytest.approx(mse_db_reference(a.beats, b.beats), abs=1e-10)

    def test_symmetry(self, rng):
        a = HeartbeatTensor(beats=rng.standard_normal((4, 2, 20)))
        b = HeartbeatTensor(beats=rng.standard_normal((4, 2, 20)))
        assert mse_db(a, b) == mse_db(b, a)

    def test_shape_mismatch_rejected(self, rng):
        a = HeartbeatTensor(beats=rng.standard_normal((4, 2, 20)))
        b = HeartbeatTensor(beats=rng.standard_normal((4, 2, 21)))
        with pytest.raises(DataError, match="dimension error"):
            mse_db(a, b)


class TestCsvRoundTrips:
    def test_signal_csv_round_trip(self, tmp_path, rng):
        signal = MultiChannelSignal(
            samples=rng.standard_normal((3, 40)), channel_names=("a", "b", "c")
        )
        path = tmp_path / "signal.csv"
        write_signal_csv(signal, path)
        loaded = read_signal_csv(path)
        np.testing.assert_array_equal(loaded.samples, signal.samples)
        assert loaded.channel_names == signal.channel_names

    def test_onsets_file(self, tmp_path):
        path = tmp_path / "onsets.txt"
        path.write_text("0\n100\n200\n")
        bounds = read_onsets(path)
        np.testing.assert_array_equal(bounds.resolve(200), [0, 100, 200])

    def test_malformed_signal_csv(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1.0,2.0\n3.0\n")
        with pytest.raises(DataError, match="invalid signal file"):
            read_signal_csv(path)
