"""Oracles for synthesis, resampling, the telephone channel, and corpus I/O.

Spectral assertions use plain rFFT magnitudes as the independent oracle;
alignment assertions compare against directly synthesized references.
"""
from __future__ import annotations

import numpy as np
import pytest

from bweda import signals as sig
from bweda.errors import PairingError, RateError, ValidationError, WavFormatError


def flat_spec(f0: float = 100.0, harmonics: tuple[float, ...] = (1.0, 0.0), noise: float = 0.0):
    return sig.SyntheticSpeakerSpec(
        speaker_id="spkT",
        f0_hz=f0,
        harmonic_amplitudes=harmonics,
        envelope_params=(1.0,),
        noise_mix=noise,
        seed=7,
    )


def spectrum_hz(x: np.ndarray, rate: int) -> tuple[np.ndarray, np.ndarray]:
    mags = np.abs(np.fft.rfft(x))
    freqs = np.fft.rfftfreq(x.size, d=1.0 / rate)
    return freqs, mags


class TestSynthWideMic:
    def test_one_second_is_exactly_16000_samples(self) -> None:
        w = sig.synth_wide_mic(flat_spec(), 1.0, utterance_seed=3)
        assert len(w) == 16000
        assert w.sample_rate == 16000

    def test_deterministic_given_seeds(self) -> None:
        a = sig.synth_wide_mic(flat_spec(), 0.5, utterance_seed=11)
        b = sig.synth_wide_mic(flat_spec(), 0.5, utterance_seed=11)
        np.testing.assert_array_equal(a.samples, b.samples)
        c = sig.synth_wide_mic(flat_spec(), 0.5, utterance_seed=12)
        assert not np.array_equal(a.samples, c.samples)

    def test_zero_amplitudes_and_zero_noise_give_exact_silence(self) -> None:
        spec = flat_spec(harmonics=(0.0, 0.0), noise=0.0)
        w = sig.synth_wide_mic(spec, 1.0, utterance_seed=5)
        assert np.all(w.samples == 0.0)

    def test_single_harmonic_peaks_at_f0_bin(self) -> None:
        # One listed harmonic at 100 Hz with flat envelope: the strongest
        # rFFT bin of a 1 s render must sit at 100 Hz (1 Hz resolution).
        w = sig.synth_wide_mic(flat_spec(f0=100.0), 1.0, utterance_seed=2)
        freqs, mags = spectrum_hz(w.samples, 16000)
        assert freqs[int(np.argmax(mags))] == pytest.approx(100.0, abs=1.0)

    def test_peak_normalized(self) -> None:
        w = sig.synth_wide_mic(flat_spec(noise=0.02), 1.0, utterance_seed=9)
        assert np.max(np.abs(w.samples)) == pytest.approx(0.9, abs=1e-12)

    def test_rejects_nonpositive_duration(self) -> None:
        with pytest.raises(ValidationError):
            sig.synth_wide_mic(flat_spec(), 0.0, utterance_seed=1)


class TestSpeakerSpecValidation:
    def test_f0_range_enforced(self) -> None:
        with pytest.raises(ValidationError):
            flat_spec(f0=60.0)
        with pytest.raises(ValidationError):
            flat_spec(f0=400.0)

    def test_noise_mix_range_enforced(self) -> None:
        with pytest.raises(ValidationError):
            sig.SyntheticSpeakerSpec("s", 100.0, (1.0,), (1.0,), noise_mix=0.5, seed=0)

    def test_from_seed_deterministic_and_distinct(self) -> None:
        a = sig.SyntheticSpeakerSpec.from_seed("x", 42)
        b = sig.SyntheticSpeakerSpec.from_seed("x", 42)
        assert a == b
        c = sig.SyntheticSpeakerSpec.from_seed("x", 43)
        assert a.f0_hz != c.f0_hz


class TestResampling:
    def test_downsample_matches_direct_synthesis_of_1khz_sine(self) -> None:
        t16 = np.arange(16000) / 16000.0
        tone16 = sig.Waveform(0.5 * np.sin(2 * np.pi * 1000.0 * t16), 16000)
        down = sig.lowpass_downsample(tone16)
        assert down.sample_rate == 8000
        assert len(down) == 8000
        t8 = np.arange(8000) / 8000.0
        ref = 0.5 * np.sin(2 * np.pi * 1000.0 * t8)
        body = slice(100, -100)
        err = np.mean((down.samples[body] - ref[body]) ** 2)
        assert err / np.mean(ref[body] ** 2) < 0.01

    def test_downsample_length_is_ceil_half(self) -> None:
        w = sig.Waveform(np.zeros(16001), 16000)
        assert len(sig.lowpass_downsample(w)) == 8001

    def test_upsample_length_doubles(self) -> None:
        w = sig.Waveform(np.random.default_rng(0).normal(size=4000), 8000)
        assert len(sig.upsample(w)) == 8000
        assert sig.upsample(w).sample_rate == 16000

    def test_round_trip_on_bandlimited_signal_is_near_identity(self) -> None:
        t16 = np.arange(16000) / 16000.0
        tone = sig.Waveform(0.4 * np.sin(2 * np.pi * 1000.0 * t16), 16000)
        back = sig.upsample(sig.lowpass_downsample(tone))
        assert len(back) == len(tone)
        body = slice(200, -200)
        rel = np.mean((back.samples[body] - tone.samples[body]) ** 2) / np.mean(
            tone.samples[body] ** 2
        )
        assert rel < 0.01

    def test_upsample_adds_no_energy_above_4k(self) -> None:
        # past the interpolation filter's transition band, images are gone
        rng = np.random.default_rng(3)
        w = sig.Waveform(rng.normal(size=8000), 8000)
        up = sig.upsample(w)
        freqs, mags = spectrum_hz(up.samples, 16000)
        high = mags[freqs >= 4500.0]
        low = mags[(freqs > 100.0) & (freqs < 3500.0)]
        assert high.max() < 0.01 * low.max()

    def test_rate_guards(self) -> None:
        with pytest.raises(RateError):
            sig.lowpass_downsample(sig.Waveform(np.zeros(100) + 0.1, 8000))
        with pytest.raises(RateError):
            sig.upsample(sig.Waveform(np.zeros(100) + 0.1, 16000))

    def test_to_model_rate(self) -> None:
        w8 = sig.Waveform(np.random.default_rng(1).normal(size=800), 8000)
        assert sig.to_model_rate(w8).sample_rate == 16000
        w16 = sig.Waveform(np.zeros(200) + 0.5, 16000)
        assert sig.to_model_rate(w16) is w16


class TestTelephoneChannel:
    def test_zero_in_zero_out(self) -> None:
        w = sig.Waveform(np.zeros(8000), 8000)
        out = sig.telephone_channel(w, channel_seed=1)
        assert np.all(out.samples == 0.0)

    def test_stopband_tone_is_crushed(self) -> None:
        t = np.arange(8000) / 8000.0
        tone = sig.Waveform(0.5 * np.sin(2 * np.pi * 100.0 * t), 8000)
        out = sig.telephone_channel(tone, channel_seed=2)
        ratio = np.sum(out.samples**2) / np.sum(tone.samples**2)
        assert 10.0 * np.log10(ratio) < -25.0

    def test_passband_tone_keeps_its_peak(self) -> None:
        t = np.arange(8000) / 8000.0
        tone = sig.Waveform(0.3 * np.sin(2 * np.pi * 1000.0 * t), 8000)
        out = sig.telephone_channel(tone, channel_seed=3)
        freqs, mags = spectrum_hz(out.samples, 8000)
        assert freqs[int(np.argmax(mags))] == pytest.approx(1000.0, abs=2.0)

    def test_noise_stage_can_be_disabled(self) -> None:
        cfg = sig.TelephoneChannelConfig(snr_db=None)
        t = np.arange(8000) / 8000.0
        tone = sig.Waveform(0.3 * np.sin(2 * np.pi * 1000.0 * t), 8000)
        a = sig.telephone_channel(tone, channel_seed=4, config=cfg)
        b = sig.telephone_channel(tone, channel_seed=99, config=cfg)
        np.testing.assert_array_equal(a.samples, b.samples)

    def test_length_preserved_and_deterministic(self) -> None:
        rng = np.random.default_rng(8)
        w = sig.Waveform(0.2 * rng.normal(size=4321), 8000)
        a = sig.telephone_channel(w, channel_seed=7)
        b = sig.telephone_channel(w, channel_seed=7)
        assert len(a) == 4321
        np.testing.assert_array_equal(a.samples, b.samples)


@pytest.fixture(scope="module")
def corpus() -> sig.ThreeDomainCorpus:
    return sig.build_three_domain_corpus(4, 3, master_seed=123, duration_s=0.25)


class TestCorpus:

    def test_sizes_and_rates(self, corpus: sig.ThreeDomainCorpus) -> None:
        assert len(corpus.narrow_tel) == 12
        assert len(corpus.narrow_mic) == 12
        assert len(corpus.wide_mic) == 12
        assert all(u.waveform.sample_rate == 8000 for u in corpus.narrow_tel.utterances)
        assert all(u.waveform.sample_rate == 8000 for u in corpus.narrow_mic.utterances)
        assert all(u.waveform.sample_rate == 16000 for u in corpus.wide_mic.utterances)

    def test_telephone_speakers_disjoint_from_microphone_speakers(
        self, corpus: sig.ThreeDomainCorpus
    ) -> None:
        assert not set(corpus.narrow_tel.speakers) & set(corpus.wide_mic.speakers)

    def test_pairing_is_a_bijection_with_matching_speakers(
        self, corpus: sig.ThreeDomainCorpus
    ) -> None:
        assert corpus.narrow_mic.paired_with is corpus.wide_mic
        narrow_keys = corpus.narrow_mic.by_pairing_key()
        wide_keys = corpus.wide_mic.by_pairing_key()
        assert set(narrow_keys) == set(wide_keys)
        assert len(narrow_keys) == 12

    def test_narrow_mic_is_decimated_wide_mic(self, corpus: sig.ThreeDomainCorpus) -> None:
        wide = corpus.wide_mic.by_pairing_key()
        for key, narrow_utt in corpus.narrow_mic.by_pairing_key().items():
            expected = sig.lowpass_downsample(wide[key].waveform)
            np.testing.assert_array_equal(narrow_utt.waveform.samples, expected.samples)

    def test_bit_identical_rebuild(self, corpus: sig.ThreeDomainCorpus) -> None:
        again = sig.build_three_domain_corpus(4, 3, master_seed=123, duration_s=0.25)
        for first, second in zip(corpus.wide_mic.utterances, again.wide_mic.utterances):
            np.testing.assert_array_equal(first.waveform.samples, second.waveform.samples)
        for first, second in zip(corpus.narrow_tel.utterances, again.narrow_tel.utterances):
            np.testing.assert_array_equal(first.waveform.samples, second.waveform.samples)

    def test_different_master_seed_changes_content(self, corpus: sig.ThreeDomainCorpus) -> None:
        other = sig.build_three_domain_corpus(4, 3, master_seed=124, duration_s=0.25)
        assert not np.array_equal(
            corpus.wide_mic.utterances[0].waveform.samples,
            other.wide_mic.utterances[0].waveform.samples,
        )

    def test_split_for_eval_preserves_pairing_and_disjointness(
        self, corpus: sig.ThreeDomainCorpus
    ) -> None:
        train, hold = sig.split_for_eval(corpus, 0.34)
        assert len(train.wide_mic) + len(hold.wide_mic) == 12
        train_ids = {u.utterance_id for u in train.wide_mic.utterances}
        hold_ids = {u.utterance_id for u in hold.wide_mic.utterances}
        assert not train_ids & hold_ids
        assert hold.narrow_mic.paired_with is hold.wide_mic
        for speaker in corpus.wide_mic.speakers:
            held = [u for u in hold.wide_mic.utterances if u.speaker_id == speaker]
            assert len(held) == 1

    def test_mixed_domain_corpus_rejected(self, corpus: sig.ThreeDomainCorpus) -> None:
        mixed = corpus.narrow_tel.utterances[:1] + corpus.narrow_mic.utterances[:1]
        with pytest.raises(ValidationError):
            sig.DomainCorpus(sig.Domain.NARROW_TEL, mixed)

    def test_pairing_error_on_mismatched_sets(self, corpus: sig.ThreeDomainCorpus) -> None:
        partial = sig.DomainCorpus(sig.Domain.WIDE_MIC, corpus.wide_mic.utterances[:6])
        full = sig.DomainCorpus(sig.Domain.NARROW_MIC, corpus.narrow_mic.utterances)
        with pytest.raises(PairingError):
            sig.pair_corpora(full, partial)


class TestWavIO:
    def test_round_trip_error_below_quantization_step(self, tmp_path) -> None:
        rng = np.random.default_rng(5)
        original = sig.Waveform(np.clip(rng.normal(0, 0.3, size=2048), -1, 1), 16000)
        path = tmp_path / "x.wav"
        sig.write_wav(path, original)
        loaded = sig.read_wav(path)
        assert loaded.sample_rate == 16000
        assert np.max(np.abs(loaded.samples - original.samples)) <= 2.0**-15

    def test_write_is_byte_deterministic(self, tmp_path) -> None:
        w = sig.Waveform(np.sin(np.linspace(0, 20, 1000)) * 0.7, 8000)
        sig.write_wav(tmp_path / "a.wav", w)
        sig.write_wav(tmp_path / "b.wav", w)
        assert (tmp_path / "a.wav").read_bytes() == (tmp_path / "b.wav").read_bytes()

    def test_clipping_warns(self, tmp_path) -> None:
        w = sig.Waveform(np.array([0.0, 1.5, -2.0]), 8000)
        with pytest.warns(RuntimeWarning, match="clipping"):
            sig.write_wav(tmp_path / "c.wav", w)
        loaded = sig.read_wav(tmp_path / "c.wav")
        assert np.max(np.abs(loaded.samples)) <= 1.0

    def test_read_rejects_non_wav(self, tmp_path) -> None:
        bad = tmp_path / "bad.wav"
        bad.write_bytes(b"this is not a wav file at all")
        with pytest.raises(WavFormatError):
            sig.read_wav(bad)


class TestCorpusManifest:
    def test_two_speakers_one_utt_writes_six_wavs_plus_manifest(self, tmp_path) -> None:
        corpus = sig.build_three_domain_corpus(2, 1, master_seed=9, duration_s=0.25)
        manifest = sig.save_corpus(corpus, tmp_path)
        wavs = sorted(tmp_path.rglob("*.wav"))
        assert len(wavs) == 6
        assert manifest.name == "manifest.json"
        assert manifest.is_file()

    def test_round_trip_preserves_structure_and_samples_within_quantization(
        self, tmp_path
    ) -> None:
        corpus = sig.build_three_domain_corpus(2, 2, master_seed=10, duration_s=0.25)
        sig.save_corpus(corpus, tmp_path)
        loaded = sig.load_corpus(tmp_path)
        assert loaded.narrow_mic.paired_with is loaded.wide_mic
        assert [u.utterance_id for u in loaded.wide_mic.utterances] == [
            u.utterance_id for u in corpus.wide_mic.utterances
        ]
        for orig, back in zip(corpus.wide_mic.utterances, loaded.wide_mic.utterances):
            assert np.max(np.abs(orig.waveform.samples - back.waveform.samples)) <= 2.0**-15
            assert orig.pairing_key == back.pairing_key

    def test_missing_manifest_raises(self, tmp_path) -> None:
        with pytest.raises(ValidationError):
            sig.load_corpus(tmp_path)
