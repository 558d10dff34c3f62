"""Filters, ICA blink removal, epoching, spectra, and the motor classifier."""

import numpy as np
import pytest

from gemmind.errors import AnalysisError, ContractError
from gemmind.dsp import (
    EpochSet,
    FilterSpec,
    bandpass_filter,
    extract_epochs,
    grand_average,
    mi_classify,
    mi_train,
    mirror_channels,
    psd_peak_score,
    remove_blink_component,
    welch_psd,
    welch_psd_signal,
)
from gemmind.dsp.filters import bandpass_signal
from gemmind.synth import SynthConfig, synthesize_recording
from gemmind.synth.generator import MultichannelRecording
from gemmind.timeline.events import MarkerEvent

RATE = 256.0


def mono_recording(x, rate=RATE, label="Pz"):
    return MultichannelRecording(np.asarray(x, dtype=float)[:, None], 0, rate, (label,))


def fit_amplitude(x, freq, rate):
    """Least-squares amplitude of a sinusoid at ``freq`` (oracle)."""
    t = np.arange(len(x)) / rate
    design = np.column_stack([np.sin(2 * np.pi * freq * t),
                              np.cos(2 * np.pi * freq * t)])
    coef, *_ = np.linalg.lstsq(design, x, rcond=None)
    return float(np.hypot(*coef))


def make_target_events(n, spacing=1.3, start=3.0, task="rsvp"):
    return [MarkerEvent(round((start + spacing * k) * 1e9), "game", "stimulus_onset",
                        {"task": task, "is_target": True}) for k in range(n)]


class TestBandpass:
    def _tone(self, freq, duration=20.0):
        t = np.arange(round(duration * RATE)) / RATE
        return np.sin(2 * np.pi * freq * t)

    def test_passband_gain_at_11hz(self):
        out = bandpass_signal(self._tone(11.0), RATE)
        amp = fit_amplitude(out[512:-512], 11.0, RATE)
        assert 0.95 <= amp <= 1.05

    def test_stopband_at_low_edge(self):
        out = bandpass_signal(self._tone(0.2, duration=60.0), RATE)
        amp = fit_amplitude(out[2048:-2048], 0.2, RATE)
        assert amp <= 0.1

    def test_stopband_attenuation_at_55hz(self):
        out = bandpass_signal(self._tone(55.0), RATE)
        amp = fit_amplitude(out[512:-512], 55.0, RATE)
        assert 20 * np.log10(1.0 / max(amp, 1e-12)) >= 20.0

    def test_zero_in_zero_out(self):
        out = bandpass_signal(np.zeros(4096), RATE)
        assert np.allclose(out, 0.0)

    def test_no_group_delay_shift(self):
        t = np.arange(round(20.0 * RATE)) / RATE
        bump = 5.0 * np.exp(-0.5 * ((t - 10.0) / 0.05) ** 2)
        out = bandpass_signal(bump, RATE)
        assert abs(int(np.argmax(out)) - int(np.argmax(bump))) < 1

    def test_invalid_spec_rejected(self):
        with pytest.raises(ContractError):
            bandpass_signal(np.zeros(100), RATE, FilterSpec(low_cut=40, high_cut=1))
        with pytest.raises(ContractError):
            bandpass_signal(np.zeros(100), RATE, FilterSpec(high_cut=200.0))

    def test_filter_then_epoch_commutes_on_interior(self):
        cfg = SynthConfig(seed=5, include_blinks=False)
        events = make_target_events(3, spacing=2.0, start=20.0)
        rec = synthesize_recording(events, cfg, duration_s=60.0)
        whole = bandpass_filter(rec)
        epochs_a = extract_epochs(whole, events, baseline=None)
        pad = round(8.0 * RATE)
        epochs_b = []
        for e in events:
            i0 = round(e.t_ns / 1e9 * RATE) - 51
            seg = rec.data[i0 - pad:i0 + 256 + pad]
            filt = bandpass_signal(seg.T, RATE).T
            epochs_b.append(filt[pad:pad + 256])
        assert np.allclose(epochs_a.data, np.stack(epochs_b), atol=1e-6)


class TestBlinkRemoval:
    def _paired_recordings(self, seed=9, duration=120.0, with_p300=True):
        events = make_target_events(60, spacing=1.4) if with_p300 else []
        quiet = synthesize_recording(events, SynthConfig(seed=seed, include_blinks=False),
                                     duration_s=duration)
        blinky = synthesize_recording(events, SynthConfig(seed=seed, include_blinks=True),
                                      duration_s=duration)
        return bandpass_filter(quiet), bandpass_filter(blinky), events

    def test_blink_variance_drops_and_p300_survives(self):
        quiet, blinky, events = self._paired_recordings()
        cleaned, idx = remove_blink_component(blinky)
        blink_before = blinky.channel("Fp1") - quiet.channel("Fp1")
        blink_after = cleaned.channel("Fp1") - quiet.channel("Fp1")
        reduction = 1.0 - blink_after.var() / blink_before.var()
        assert reduction >= 0.8

        def p300_amp(rec):
            epochs = extract_epochs(rec, events)
            mean, _ = grand_average(epochs, "stimulus_onset")
            pz = mean[:, epochs.channel_index("Pz")]
            window = (epochs.times >= 0.3) & (epochs.times <= 0.45)
            return pz[window].max()

        before, after = p300_amp(blinky), p300_amp(cleaned)
        assert abs(after - before) / before <= 0.10

    def test_blink_free_data_loses_little_variance(self):
        quiet, _, _ = self._paired_recordings(seed=17, with_p300=False)
        cleaned, _ = remove_blink_component(quiet)
        total_before = quiet.data.var(axis=0).sum()
        total_after = cleaned.data.var(axis=0).sum()
        assert abs(total_after - total_before) / total_before <= 0.10

    def test_short_recordings_rejected(self):
        rec = synthesize_recording([], SynthConfig(seed=0), duration_s=10.0)
        with pytest.raises(AnalysisError):
            remove_blink_component(rec)


class TestEpochs:
    def test_constant_channel_baselines_to_zero(self):
        data = np.full((2560, 1), 7.0)
        rec = MultichannelRecording(data, 0, RATE, ("Pz",))
        events = [MarkerEvent(round(4.0e9), "eeg", "stimulus_onset", {})]
        epochs = extract_epochs(rec, events)
        assert np.allclose(epochs.data, 0.0, atol=1e-12)

    def test_edge_event_excluded_and_counted(self):
        rec = mono_recording(np.zeros(2560))
        events = [MarkerEvent(0, "eeg", "stimulus_onset", {}),
                  MarkerEvent(round(5.0e9), "eeg", "stimulus_onset", {})]
        epochs = extract_epochs(rec, events)
        assert epochs.excluded == 1
        assert epochs.n_epochs == 1

    def test_window_sample_count(self):
        rec = mono_recording(np.random.default_rng(0).normal(size=30000))
        events = [MarkerEvent(round((1.0 + 0.25 * k) * 1e9), "eeg", "stimulus_onset", {})
                  for k in range(100)]
        epochs = extract_epochs(rec, events, window=(-0.2, 0.8))
        assert epochs.data.shape == (100, 256, 1)

    def test_baseline_mean_within_tolerance(self):
        rng = np.random.default_rng(1)
        rec = mono_recording(rng.normal(scale=30.0, size=30000))
        events = [MarkerEvent(round((2.0 + 0.5 * k) * 1e9), "eeg", "stimulus_onset", {})
                  for k in range(50)]
        epochs = extract_epochs(rec, events)
        mask = (epochs.times >= -0.2) & (epochs.times <= 0.0)
        means = epochs.data[:, mask, :].mean(axis=1)
        assert np.abs(means).max() <= 1e-9

    def test_all_events_outside_is_an_error(self):
        rec = mono_recording(np.zeros(256))
        with pytest.raises(AnalysisError):
            extract_epochs(rec, [MarkerEvent(round(99e9), "eeg", "stimulus_onset", {})])


class TestGrandAverage:
    def _epochs(self, data, labels):
        data = np.asarray(data, dtype=float)
        return EpochSet(data=data, times=np.arange(data.shape[1]) / RATE,
                        labels=labels, channel_labels=("Pz",), sample_rate=RATE,
                        baseline=None)

    def test_opposite_epochs_average_to_zero(self):
        x = np.random.default_rng(0).normal(size=(1, 64, 1))
        epochs = self._epochs(np.concatenate([x, -x]), ["a", "a"])
        mean, _ = grand_average(epochs, "a")
        assert np.allclose(mean, 0.0)

    def test_identical_epochs_have_zero_se(self):
        x = np.random.default_rng(1).normal(size=(1, 64, 1))
        epochs = self._epochs(np.repeat(x, 5, axis=0), ["a"] * 5)
        _, se = grand_average(epochs, "a")
        assert np.allclose(se, 0.0)

    def test_single_epoch_condition_is_an_error(self):
        epochs = self._epochs(np.zeros((2, 8, 1)), ["a", "b"])
        with pytest.raises(AnalysisError):
            grand_average(epochs, "a")

    def test_planted_p300_peaks_in_window(self):
        cfg = SynthConfig(seed=23, include_blinks=False)
        events = make_target_events(120, spacing=1.3)
        rec = bandpass_filter(synthesize_recording(events, cfg,
                                                   duration_s=3.0 + 1.3 * 120 + 2.0))
        epochs = extract_epochs(rec, events)
        mean, se = grand_average(epochs, "stimulus_onset")
        pz = mean[:, epochs.channel_index("Pz")]
        peak_t = epochs.times[int(np.argmax(pz))]
        assert 0.3 <= peak_t <= 0.45
        assert se.shape == mean.shape


class TestWelch:
    def test_unit_tone_peaks_at_its_bin_and_integrates_to_half(self):
        t = np.arange(round(30.0 * RATE)) / RATE
        psd = welch_psd_signal(np.sin(2 * np.pi * 11.0 * t), RATE)
        assert psd.frequencies[int(np.argmax(psd.power))] == pytest.approx(11.0)
        total = psd.power.sum() * psd.resolution
        assert total == pytest.approx(0.5, rel=0.05)
        assert psd.resolution == pytest.approx(0.5)

    def test_white_noise_halves_agree_within_3db(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=60 * int(RATE))
        half = len(x) // 2
        p1 = welch_psd_signal(x[:half], RATE)
        p2 = welch_psd_signal(x[half:], RATE)
        band = (p1.frequencies > 1) & (p1.frequencies < 100)
        db = np.abs(10 * np.log10(p1.power[band] / p2.power[band]))
        assert db.mean() <= 3.0

    def test_dc_concentrates_at_zero(self):
        psd = welch_psd_signal(np.full(4096, 3.0), RATE)
        assert int(np.argmax(psd.power)) == 0

    def test_nonnegative_and_shift_invariant(self):
        rng = np.random.default_rng(11)
        x = rng.normal(size=40 * int(RATE))
        p1 = welch_psd_signal(x, RATE)
        p2 = welch_psd_signal(np.roll(x, 1000), RATE)
        assert (p1.power >= 0).all()
        band = (p1.frequencies > 1) & (p1.frequencies < 100)
        db = np.abs(10 * np.log10(p1.power[band] / p2.power[band]))
        assert db.mean() <= 3.0

    def test_short_input_rejected(self):
        with pytest.raises(AnalysisError):
            welch_psd_signal(np.zeros(100), RATE)

    def test_recording_channel_access(self):
        rec = synthesize_recording([], SynthConfig(seed=2, include_blinks=False), 10.0)
        psd = welch_psd(rec, "O2")
        assert psd.frequencies[-1] == pytest.approx(RATE / 2)


def ssvep_psd(freq, seed=3, n_trials=12):
    """Average flash-locked EEG across trials, then PSD (group analysis)."""
    from gemmind.minigames.ssvep import build_ssvep_trial
    import random
    trial = build_ssvep_trial(random.Random(seed), 60.0, freq)
    spacing = 6.337  # spreads 10 Hz alpha phase across trials
    events = [MarkerEvent(round((2.0 + spacing * k) * 1e9), "game", "minigame_start",
                          {"task": "ssvep", "target_box": trial.target_box,
                           "flash_duration": trial.flash_duration,
                           "toggle_times": list(trial.toggle_times)})
              for k in range(n_trials)]
    cfg = SynthConfig(seed=seed, include_blinks=False)
    rec = synthesize_recording(events, cfg, duration_s=2.0 + spacing * n_trials + 6.0)
    o2 = rec.channel("O2")
    seg_len = round(4.0 * RATE)
    segments = [o2[round(e.t_ns / 1e9 * RATE):][:seg_len] for e in events]
    return welch_psd_signal(np.mean(segments, axis=0), RATE)


class TestPeakScore:
    def test_planted_frequency_flags(self):
        psd = ssvep_psd(9)
        flag, prominence = psd_peak_score(psd, 9.0)
        assert flag and prominence >= 6.0

    def test_off_target_control_does_not_flag(self):
        psd = ssvep_psd(9)
        flag, _ = psd_peak_score(psd, 10.0)
        assert not flag

    def test_harmonic_flags_for_7hz(self):
        psd = ssvep_psd(7)
        flag, _ = psd_peak_score(psd, 14.0)
        assert flag

    def test_target_outside_grid_rejected(self):
        psd = ssvep_psd(9)
        with pytest.raises(AnalysisError):
            psd_peak_score(psd, 500.0)


def mi_calibration(seed, n_epochs, gap_s=1.5):
    events = []
    t = 3.0
    for i in range(n_epochs):
        events.append(MarkerEvent(round(t * 1e9), "game", "mi_window",
                                  {"side": "left" if i % 2 == 0 else "right",
                                   "duration_s": 1.0}))
        t += gap_s
    cfg = SynthConfig(seed=seed, include_blinks=False)
    rec = bandpass_filter(synthesize_recording(events, cfg, duration_s=t + 2.0))
    return extract_epochs(rec, events, window=(0.0, 1.0), baseline=None,
                          label_fn=lambda e: e.payload["side"])


class TestMotorModel:
    def test_training_accuracy_on_planted_erd(self):
        model = mi_train(mi_calibration(101, 200))
        assert model.training_accuracy >= 0.90

    def test_shuffled_labels_near_chance(self):
        import random
        epochs = mi_calibration(55, 200)
        rng = random.Random(0)
        shuffled = list(epochs.labels)
        rng.shuffle(shuffled)
        epochs.labels = shuffled
        model = mi_train(epochs)
        assert 0.40 <= model.training_accuracy <= 0.60

    def test_identical_class_means_reduce_to_bias_sign(self):
        epochs = mi_calibration(77, 60)
        epochs.labels = ["left" if i < 30 else "right" for i in range(60)]
        epochs.data = np.concatenate([epochs.data[:30], epochs.data[:30]])
        model = mi_train(epochs)
        # Mirror augmentation forces bias ~0 and weights from noise only.
        assert abs(model.bias) < 1e-6

    def test_suppressed_c3_classifies_right(self):
        epochs = mi_calibration(101, 200)
        model = mi_train(epochs)
        right_epochs = epochs.select("right")
        correct = sum(mi_classify(model, ep)[0] == "right" for ep in right_epochs)
        assert correct / len(right_epochs) >= 0.85

    def test_mirrored_window_flips_label(self):
        epochs = mi_calibration(101, 100)
        model = mi_train(epochs)
        for ep in epochs.data[:40]:
            label, margin = mi_classify(model, ep)
            flipped, _ = mi_classify(model, mirror_channels(ep, epochs.channel_labels))
            assert flipped != label
            assert margin > 0

    def test_background_windows_near_chance(self):
        model = mi_train(mi_calibration(101, 200))
        cfg = SynthConfig(seed=404, include_blinks=False)
        rec = bandpass_filter(synthesize_recording([], cfg, duration_s=510.0))
        lefts = sum(mi_classify(model, rec.data[k * 256:(k + 1) * 256])[0] == "left"
                    for k in range(500))
        assert 0.45 <= lefts / 500 <= 0.55

    def test_wrong_window_length_rejected(self):
        model = mi_train(mi_calibration(101, 60))
        with pytest.raises(ContractError):
            mi_classify(model, np.zeros((100, 20)))

    def test_too_few_epochs_rejected(self):
        with pytest.raises(AnalysisError):
            mi_train(mi_calibration(101, 20))


class TestErrpContrast:
    def test_contrast_extrema_land_in_windows(self):
        events = []
        t = 2.0
        for k in range(40):
            t_ns = round(t * 1e9)
            events.append(MarkerEvent(t_ns, "game", "injection", {}))
            events.append(MarkerEvent(t_ns + 700_000_000, "game", "cheat_report",
                                      {"valid": True, "injection_t_ns": t_ns}))
            t += 2.1
        for k in range(120):
            events.append(MarkerEvent(round((t + 1.6 * k) * 1e9), "game", "match", {}))
        duration = t + 1.6 * 120 + 2.0
        cfg = SynthConfig(seed=31, include_blinks=False)
        rec = bandpass_filter(synthesize_recording(events, cfg, duration_s=duration))
        epochs = extract_epochs(rec, [e for e in events if e.kind in ("injection", "match")])
        caught_mean, _ = grand_average(epochs, "injection")
        match_mean, _ = grand_average(epochs, "match")
        fz = epochs.channel_index("Fz")
        cz = epochs.channel_index("Cz")
        contrast = ((caught_mean[:, fz] + caught_mean[:, cz]) / 2
                    - (match_mean[:, fz] + match_mean[:, cz]) / 2)
        times = epochs.times

        def window(center):
            return (times >= center - 0.025) & (times <= center + 0.025)

        assert contrast[window(0.287)].min() < 0
        assert contrast[window(0.486)].min() < 0
        assert contrast[window(0.367)].max() > 0
