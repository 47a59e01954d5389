"""Waveform types, resampling, channel simulation, and the synthetic corpus.

Three speech domains appear throughout the package:

* ``narrow_tel``  -- narrowband telephone speech at 8 kHz (bandpassed,
  compressed, noisy), from its own speaker population.
* ``narrow_mic``  -- narrowband microphone speech at 8 kHz, obtained by
  lowpass-filtering and decimating the wideband recordings, so every
  utterance has an exactly aligned wideband counterpart.
* ``wide_mic``    -- wideband microphone speech at 16 kHz.

All model-facing code views signals at 16 kHz (``MODEL_SAMPLE_RATE``);
narrowband utterances are interpolated up on the way in. Synthesis and
channel simulation are fully deterministic given their integer seeds: the
same arguments always produce bit-identical sample arrays.
"""
from __future__ import annotations

import json
import warnings
import wave
import zlib
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.signal import firwin, firwin2

from .errors import InputTooShortError, PairingError, RateError, ValidationError, WavFormatError

MODEL_SAMPLE_RATE = 16000
NARROW_SAMPLE_RATE = 8000
SUPPORTED_RATES = (8000, 16000)

_SEED_MASK = 0xFFFF_FFFF_FFFF_FFFF


class Domain(str, Enum):
    """The three speech domains handled by the package."""

    NARROW_TEL = "narrow_tel"
    NARROW_MIC = "narrow_mic"
    WIDE_MIC = "wide_mic"

    @property
    def native_rate(self) -> int:
        return MODEL_SAMPLE_RATE if self is Domain.WIDE_MIC else NARROW_SAMPLE_RATE


@dataclass(frozen=True)
class Waveform:
    """A mono float64 signal at 8 or 16 kHz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValidationError(f"waveform must be 1-D, got shape {samples.shape}")
        if samples.size == 0:
            raise ValidationError("waveform must not be empty")
        if not np.all(np.isfinite(samples)):
            raise ValidationError("waveform contains non-finite samples")
        if self.sample_rate not in SUPPORTED_RATES:
            raise RateError(f"unsupported sample rate {self.sample_rate}, expected one of {SUPPORTED_RATES}")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class Utterance:
    """One utterance with identity metadata.

    ``pairing_key`` is shared between a narrowband-microphone utterance and
    its wideband counterpart (and is carried through derived corpora); it is
    ``None`` for unpaired data such as telephone speech.
    """

    utterance_id: str
    speaker_id: str
    domain: Domain
    waveform: Waveform
    pairing_key: str | None = None

    def __post_init__(self) -> None:
        if not self.utterance_id:
            raise ValidationError("utterance_id must be non-empty")
        if not self.speaker_id:
            raise ValidationError("speaker_id must be non-empty")


@dataclass
class DomainCorpus:
    """A set of utterances that all belong to one domain.

    Corpora produced by :func:`build_three_domain_corpus` store waveforms at
    the domain's native rate; derived corpora (for example, mapped training
    sources) may hold 16 kHz views instead. ``paired_with`` links the
    narrowband-microphone corpus to the wideband corpus once
    :func:`pair_corpora` has verified a one-to-one pairing.
    """

    domain: Domain
    utterances: tuple[Utterance, ...]
    paired_with: "DomainCorpus | None" = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.utterances = tuple(self.utterances)
        if not self.utterances:
            raise ValidationError(f"corpus for {self.domain.value} has no utterances")
        ids = [u.utterance_id for u in self.utterances]
        if len(set(ids)) != len(ids):
            raise ValidationError(f"duplicate utterance ids in {self.domain.value} corpus")
        for utt in self.utterances:
            if utt.domain is not self.domain:
                raise ValidationError(
                    f"utterance {utt.utterance_id} tagged {utt.domain.value},"
                    f" corpus is {self.domain.value}"
                )
    def __len__(self) -> int:
        return len(self.utterances)

    @property
    def speakers(self) -> tuple[str, ...]:
        return tuple(sorted({u.speaker_id for u in self.utterances}))

    def by_pairing_key(self) -> dict[str, Utterance]:
        """Index keyed utterances by pairing key.

        Derived training pools may repeat a key (two renditions pairing to
        the same wideband target); such corpora cannot be indexed this way.
        """
        index: dict[str, Utterance] = {}
        for utt in self.utterances:
            if utt.pairing_key is None:
                continue
            if utt.pairing_key in index:
                raise PairingError(
                    f"pairing key {utt.pairing_key} appears more than once in the"
                    f" {self.domain.value} corpus; cannot build a unique index"
                )
            index[utt.pairing_key] = utt
        return index


def pair_corpora(narrow: DomainCorpus, wide: DomainCorpus) -> None:
    """Verify a one-to-one pairing between two corpora and link them.

    Every pairing key must appear exactly once on each side, with matching
    speaker ids. Raises :class:`PairingError` otherwise.
    """
    narrow_keys = narrow.by_pairing_key()
    wide_keys = wide.by_pairing_key()
    if len(narrow_keys) != len(narrow.utterances) or len(wide_keys) != len(wide.utterances):
        raise PairingError("pairing requires every utterance to carry a pairing key")
    if set(narrow_keys) != set(wide_keys):
        missing = set(narrow_keys) ^ set(wide_keys)
        raise PairingError(f"pairing keys do not match one-to-one; unmatched: {sorted(missing)[:5]}")
    for key, utt in narrow_keys.items():
        if utt.speaker_id != wide_keys[key].speaker_id:
            raise PairingError(f"pairing key {key} joins different speakers")
    narrow.paired_with = wide
    wide.paired_with = narrow


@dataclass(frozen=True)
class ThreeDomainCorpus:
    """The telephone, narrow-microphone, and wide-microphone corpora together."""

    narrow_tel: DomainCorpus
    narrow_mic: DomainCorpus
    wide_mic: DomainCorpus

    def corpus(self, domain: Domain) -> DomainCorpus:
        return {
            Domain.NARROW_TEL: self.narrow_tel,
            Domain.NARROW_MIC: self.narrow_mic,
            Domain.WIDE_MIC: self.wide_mic,
        }[domain]


# ---------------------------------------------------------------------------
# synthetic speakers
# ---------------------------------------------------------------------------

_ENVELOPE_CONTROL_HZ = (0.0, 500.0, 1000.0, 2000.0, 3000.0, 4000.0, 5500.0, 7000.0, 8000.0)
_ENVELOPE_NUMTAPS = 33


@dataclass(frozen=True)
class SyntheticSpeakerSpec:
    """Deterministic recipe for one synthetic speaker's voice.

    ``harmonic_amplitudes`` gives the first harmonics' strengths; harmonics
    beyond the list continue from its last entry with a 1/k rolloff, so a
    trailing zero silences everything above the listed ones. ``envelope_params``
    are FIR taps applied to the harmonic source, shaping a per-speaker
    spectral envelope across the full 0-8 kHz band.
    """

    speaker_id: str
    f0_hz: float
    harmonic_amplitudes: tuple[float, ...]
    envelope_params: tuple[float, ...]
    noise_mix: float
    seed: int

    def __post_init__(self) -> None:
        if not 80.0 <= self.f0_hz <= 300.0:
            raise ValidationError(f"f0_hz {self.f0_hz} outside [80, 300]")
        if not self.harmonic_amplitudes:
            raise ValidationError("harmonic_amplitudes must be non-empty")
        amps = tuple(float(a) for a in self.harmonic_amplitudes)
        if any(not np.isfinite(a) or a < 0 for a in amps):
            raise ValidationError("harmonic amplitudes must be finite and non-negative")
        if not self.envelope_params:
            raise ValidationError("envelope_params must be non-empty")
        env = tuple(float(t) for t in self.envelope_params)
        if any(not np.isfinite(t) for t in env):
            raise ValidationError("envelope taps must be finite")
        if not 0.0 <= self.noise_mix <= 0.3:
            raise ValidationError(f"noise_mix {self.noise_mix} outside [0, 0.3]")
        object.__setattr__(self, "harmonic_amplitudes", amps)
        object.__setattr__(self, "envelope_params", env)

    @classmethod
    def from_seed(cls, speaker_id: str, seed: int) -> "SyntheticSpeakerSpec":
        """Draw a speaker voice deterministically from a seed."""
        rng = np.random.default_rng(seed & _SEED_MASK)
        f0 = float(rng.uniform(110.0, 280.0))
        n_listed = int(rng.integers(4, 9))
        amps = [float(rng.uniform(0.6, 1.0))]
        for _ in range(n_listed - 1):
            amps.append(amps[-1] * float(rng.uniform(0.55, 0.95)))
        gains = rng.uniform(0.35, 1.0, size=len(_ENVELOPE_CONTROL_HZ))
        taps = firwin2(_ENVELOPE_NUMTAPS, _ENVELOPE_CONTROL_HZ, gains, fs=MODEL_SAMPLE_RATE)
        noise_mix = float(rng.uniform(0.01, 0.05))
        return cls(
            speaker_id=speaker_id,
            f0_hz=f0,
            harmonic_amplitudes=tuple(amps),
            envelope_params=tuple(float(t) for t in taps),
            noise_mix=noise_mix,
            seed=int(seed),
        )


def synth_wide_mic(spec: SyntheticSpeakerSpec, duration_s: float, utterance_seed: int) -> Waveform:
    """Render one wideband (16 kHz) utterance for a synthetic speaker.

    The voice is a harmonic comb at the speaker's f0 with slight vibrato and
    tremolo, filtered by the speaker's spectral envelope, plus broadband
    noise at ``noise_mix``. Per-utterance randomness (harmonic phases,
    modulation rates, noise) comes only from ``(spec.seed, utterance_seed)``.
    The output is peak-normalized to 0.9; an all-zero render (zero amplitudes
    and zero noise) stays exactly zero.
    """
    if duration_s <= 0:
        raise ValidationError(f"duration_s must be positive, got {duration_s}")
    n = int(round(duration_s * MODEL_SAMPLE_RATE))
    if n < 1:
        raise ValidationError("duration too short for even one sample")
    rng = np.random.default_rng(
        np.random.SeedSequence((spec.seed & _SEED_MASK, utterance_seed & _SEED_MASK))
    )
    n_harm = max(1, int(7600.0 // spec.f0_hz))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=n_harm)
    vib_rate = float(rng.uniform(4.0, 7.0))
    vib_phase = float(rng.uniform(0.0, 2.0 * np.pi))
    trem_rate = float(rng.uniform(2.0, 6.0))
    trem_phase = float(rng.uniform(0.0, 2.0 * np.pi))
    t = np.arange(n) / MODEL_SAMPLE_RATE

    f_inst = spec.f0_hz * (1.0 + 0.003 * np.sin(2.0 * np.pi * vib_rate * t + vib_phase))
    base_phase = 2.0 * np.pi * np.cumsum(f_inst) / MODEL_SAMPLE_RATE

    listed = np.asarray(spec.harmonic_amplitudes)
    k = np.arange(1, n_harm + 1)
    amps = np.where(
        k <= listed.size,
        listed[np.minimum(k - 1, listed.size - 1)],
        listed[-1] * (listed.size / k),
    )
    source = (amps[:, None] * np.sin(np.outer(k, base_phase) + phases[:, None])).sum(axis=0)
    shaped = np.convolve(source, np.asarray(spec.envelope_params), mode="same")
    tremolo = 1.0 + 0.1 * np.sin(2.0 * np.pi * trem_rate * t + trem_phase)
    signal = shaped * tremolo + spec.noise_mix * rng.standard_normal(n)

    peak = np.max(np.abs(signal))
    if peak > 0.0:
        signal = signal * (0.9 / peak)
    return Waveform(signal, MODEL_SAMPLE_RATE)


# ---------------------------------------------------------------------------
# rate conversion
# ---------------------------------------------------------------------------

_RESAMPLE_NUMTAPS = 127
_RESAMPLE_CUTOFF_HZ = 3800.0
_resample_taps = firwin(_RESAMPLE_NUMTAPS, _RESAMPLE_CUTOFF_HZ, fs=MODEL_SAMPLE_RATE)


def _zero_phase_filter(x: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Linear-phase FIR with reflect padding and group-delay compensation.

    Output sample i depends on input samples centered at i, so filtered
    signals stay sample-aligned with their inputs.
    """
    half = (taps.size - 1) // 2
    if x.size <= half:
        raise InputTooShortError(f"signal of {x.size} samples too short for {taps.size}-tap filter")
    padded = np.pad(x, half, mode="reflect")
    return np.convolve(padded, taps, mode="valid")


def lowpass_downsample(w: Waveform) -> Waveform:
    """16 kHz -> 8 kHz: lowpass below Nyquist, then keep every other sample.

    The anti-alias filter is zero-phase (group-delay compensated), so
    ``lowpass_downsample(c)`` stays time-aligned with ``c``: output sample i
    corresponds to input sample 2i. Output length is ``ceil(len(w) / 2)``.
    """
    if w.sample_rate != MODEL_SAMPLE_RATE:
        raise RateError(f"lowpass_downsample expects {MODEL_SAMPLE_RATE} Hz input, got {w.sample_rate}")
    filtered = _zero_phase_filter(w.samples, _resample_taps)
    return Waveform(filtered[0::2], NARROW_SAMPLE_RATE)


def upsample(w: Waveform) -> Waveform:
    """8 kHz -> 16 kHz by zero-stuffing and gain-compensated lowpass.

    Output sample 2i reconstructs input sample i (zero-phase filtering), so
    round trips through :func:`lowpass_downsample` stay aligned. Output
    length is exactly ``2 * len(w)``. No energy is synthesized above the
    original Nyquist; this is the naive bandwidth-extension baseline.
    """
    if w.sample_rate != NARROW_SAMPLE_RATE:
        raise RateError(f"upsample expects {NARROW_SAMPLE_RATE} Hz input, got {w.sample_rate}")
    stuffed = np.zeros(2 * w.samples.size)
    stuffed[0::2] = w.samples
    return Waveform(_zero_phase_filter(stuffed, 2.0 * _resample_taps), MODEL_SAMPLE_RATE)


def to_model_rate(w: Waveform) -> Waveform:
    """View any supported waveform at the 16 kHz model rate."""
    return w if w.sample_rate == MODEL_SAMPLE_RATE else upsample(w)


# ---------------------------------------------------------------------------
# telephone channel
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TelephoneChannelConfig:
    """Telephone channel simulation: bandpass, soft compression, noise.

    ``snr_db`` of ``None`` disables the additive noise stage entirely.
    """

    low_cut_hz: float = 300.0
    high_cut_hz: float = 3400.0
    numtaps: int = 201
    compression_drive: float = 2.0
    snr_db: float | None = 30.0

    def __post_init__(self) -> None:
        if not 0.0 < self.low_cut_hz < self.high_cut_hz < NARROW_SAMPLE_RATE / 2:
            raise ValidationError(
                f"band ({self.low_cut_hz}, {self.high_cut_hz}) must satisfy 0 < low < high < Nyquist"
            )
        if self.numtaps < 3 or self.numtaps % 2 == 0:
            raise ValidationError(f"numtaps must be odd and >= 3, got {self.numtaps}")
        if self.compression_drive <= 0:
            raise ValidationError("compression_drive must be positive")

    def bandpass_taps(self) -> np.ndarray:
        return firwin(
            self.numtaps,
            [self.low_cut_hz, self.high_cut_hz],
            pass_zero=False,
            fs=NARROW_SAMPLE_RATE,
        )


def telephone_channel(
    w: Waveform, channel_seed: int, config: TelephoneChannelConfig | None = None
) -> Waveform:
    """Apply a telephone-style channel to an 8 kHz signal.

    Stages: zero-phase bandpass, memoryless soft compression
    ``tanh(drive * x) / drive``, then white noise at ``snr_db`` relative to
    the compressed signal power. Length is preserved; a zero input stays
    exactly zero (no noise is added to silence). Deterministic given
    ``channel_seed``.
    """
    cfg = config if config is not None else TelephoneChannelConfig()
    if w.sample_rate != NARROW_SAMPLE_RATE:
        raise RateError(f"telephone_channel expects {NARROW_SAMPLE_RATE} Hz input, got {w.sample_rate}")
    y = _zero_phase_filter(w.samples, cfg.bandpass_taps())
    y = np.tanh(cfg.compression_drive * y) / cfg.compression_drive
    if cfg.snr_db is not None:
        power = float(np.mean(y * y))
        if power > 0.0:
            sigma = np.sqrt(power * 10.0 ** (-cfg.snr_db / 10.0))
            noise = np.random.default_rng(channel_seed & _SEED_MASK).standard_normal(y.size)
            y = y + sigma * noise
    return Waveform(y, NARROW_SAMPLE_RATE)


# ---------------------------------------------------------------------------
# corpus construction
# ---------------------------------------------------------------------------


def _derive_seed(master_seed: int, label: str, *indices: int) -> int:
    """A stable 64-bit seed for one (label, indices) role under a master seed.

    Derivations are independent of the order in which corpus items are
    generated; adding speakers or utterances never changes existing ones.
    """
    entropy = (master_seed & _SEED_MASK, zlib.crc32(label.encode("ascii"))) + tuple(
        i & _SEED_MASK for i in indices
    )
    return int(np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)[0])


def build_three_domain_corpus(
    n_speakers: int,
    utts_per_speaker: int,
    master_seed: int,
    duration_s: float = 1.0,
    telephone: TelephoneChannelConfig | None = None,
) -> ThreeDomainCorpus:
    """Generate the paired wideband/narrowband corpora plus telephone speech.

    ``n_speakers`` microphone speakers produce the wideband corpus; each
    wideband utterance is decimated to make its paired narrowband twin. A
    further ``n_speakers`` distinct speakers (disjoint ids) produce the
    telephone corpus, which carries no pairing keys. Bit-identical for
    identical arguments.
    """
    if n_speakers < 1 or utts_per_speaker < 1:
        raise ValidationError("need at least one speaker and one utterance per speaker")
    tel_cfg = telephone if telephone is not None else TelephoneChannelConfig()

    wide_utts: list[Utterance] = []
    narrow_utts: list[Utterance] = []
    for i in range(n_speakers):
        speaker = f"spk{i:03d}"
        spec = SyntheticSpeakerSpec.from_seed(speaker, _derive_seed(master_seed, "mic_speaker", i))
        for u in range(utts_per_speaker):
            wide = synth_wide_mic(spec, duration_s, _derive_seed(master_seed, "mic_utt", i, u))
            key = f"{speaker}_u{u:02d}"
            wide_utts.append(
                Utterance(f"C_{key}", speaker, Domain.WIDE_MIC, wide, pairing_key=key)
            )
            narrow_utts.append(
                Utterance(
                    f"B_{key}", speaker, Domain.NARROW_MIC, lowpass_downsample(wide), pairing_key=key
                )
            )

    tel_utts: list[Utterance] = []
    for j in range(n_speakers, 2 * n_speakers):
        speaker = f"spk{j:03d}"
        spec = SyntheticSpeakerSpec.from_seed(speaker, _derive_seed(master_seed, "tel_speaker", j))
        for u in range(utts_per_speaker):
            wide = synth_wide_mic(spec, duration_s, _derive_seed(master_seed, "tel_utt", j, u))
            tel = telephone_channel(
                lowpass_downsample(wide), _derive_seed(master_seed, "tel_chan", j, u), tel_cfg
            )
            tel_utts.append(Utterance(f"A_{speaker}_u{u:02d}", speaker, Domain.NARROW_TEL, tel))

    narrow_corpus = DomainCorpus(Domain.NARROW_MIC, tuple(narrow_utts))
    wide_corpus = DomainCorpus(Domain.WIDE_MIC, tuple(wide_utts))
    pair_corpora(narrow_corpus, wide_corpus)
    tel_corpus = DomainCorpus(Domain.NARROW_TEL, tuple(tel_utts))
    return ThreeDomainCorpus(tel_corpus, narrow_corpus, wide_corpus)


def split_for_eval(
    corpus: ThreeDomainCorpus, holdout_fraction: float
) -> tuple[ThreeDomainCorpus, ThreeDomainCorpus]:
    """Split every domain into train/holdout portions, per speaker.

    The last ``round(holdout_fraction * count)`` utterances of each speaker
    (by utterance id order, at least one) are held out. The paired corpora
    are split on the same pairing keys, so pairing survives on both sides.
    """
    if not 0.0 < holdout_fraction < 1.0:
        raise ValidationError(f"holdout_fraction must be in (0, 1), got {holdout_fraction}")

    def split_one(corpus_in: DomainCorpus) -> tuple[list[Utterance], list[Utterance]]:
        train: list[Utterance] = []
        hold: list[Utterance] = []
        by_speaker: dict[str, list[Utterance]] = {}
        for utt in corpus_in.utterances:
            by_speaker.setdefault(utt.speaker_id, []).append(utt)
        for speaker in sorted(by_speaker):
            utts = sorted(by_speaker[speaker], key=lambda u: u.utterance_id)
            n_hold = min(len(utts) - 1, max(1, round(holdout_fraction * len(utts))))
            if n_hold < 1:
                raise ValidationError(
                    f"speaker {speaker} has too few utterances ({len(utts)}) to split"
                )
            train.extend(utts[:-n_hold])
            hold.extend(utts[-n_hold:])
        return train, hold

    tel_train, tel_hold = split_one(corpus.narrow_tel)
    mic_train, mic_hold = split_one(corpus.narrow_mic)
    wide_train, wide_hold = split_one(corpus.wide_mic)

    def bundle(tel: list[Utterance], mic: list[Utterance], wide: list[Utterance]) -> ThreeDomainCorpus:
        mic_corpus = DomainCorpus(Domain.NARROW_MIC, tuple(mic))
        wide_corpus = DomainCorpus(Domain.WIDE_MIC, tuple(wide))
        pair_corpora(mic_corpus, wide_corpus)
        return ThreeDomainCorpus(DomainCorpus(Domain.NARROW_TEL, tuple(tel)), mic_corpus, wide_corpus)

    return bundle(tel_train, mic_train, wide_train), bundle(tel_hold, mic_hold, wide_hold)


# ---------------------------------------------------------------------------
# WAV files and corpus manifests
# ---------------------------------------------------------------------------

_PCM_SCALE = 32767.0


def write_wav(path: str | Path, w: Waveform) -> None:
    """Write 16-bit PCM mono. Warns and clips if samples exceed [-1, 1].

    Byte-deterministic: the same waveform always produces the same file.
    Quantization error is at most half a step (below 2**-15).
    """
    samples = w.samples
    peak = float(np.max(np.abs(samples)))
    if peak > 1.0:
        warnings.warn(
            f"waveform peak {peak:.4f} exceeds 1.0; clipping on write", RuntimeWarning, stacklevel=2
        )
        samples = np.clip(samples, -1.0, 1.0)
    quantized = np.round(samples * _PCM_SCALE).astype("<i2")
    with wave.open(str(path), "wb") as handle:
        handle.setnchannels(1)
        handle.setsampwidth(2)
        handle.setframerate(w.sample_rate)
        handle.writeframes(quantized.tobytes())


def read_wav(path: str | Path) -> Waveform:
    """Read 16-bit PCM mono WAV at a supported rate."""
    try:
        with wave.open(str(path), "rb") as handle:
            channels = handle.getnchannels()
            width = handle.getsampwidth()
            rate = handle.getframerate()
            frames = handle.readframes(handle.getnframes())
    except (wave.Error, EOFError) as exc:
        raise WavFormatError(f"{path}: not a readable WAV file: {exc}") from exc
    if channels != 1:
        raise WavFormatError(f"{path}: expected mono, got {channels} channels")
    if width != 2:
        raise WavFormatError(f"{path}: expected 16-bit samples, got {8 * width}-bit")
    samples = np.frombuffer(frames, dtype="<i2").astype(np.float64) / _PCM_SCALE
    return Waveform(samples, rate)


MANIFEST_NAME = "manifest.json"
_MANIFEST_VERSION = 1


def save_corpus(corpus: ThreeDomainCorpus, directory: str | Path) -> Path:
    """Write all utterances as WAV files plus a JSON manifest; returns manifest path."""
    root = Path(directory)
    entries: dict[str, list[dict]] = {}
    for domain_corpus in (corpus.narrow_tel, corpus.narrow_mic, corpus.wide_mic):
        domain = domain_corpus.domain
        subdir = root / domain.value
        subdir.mkdir(parents=True, exist_ok=True)
        rows = []
        for utt in domain_corpus.utterances:
            rel = f"{domain.value}/{utt.utterance_id}.wav"
            write_wav(root / rel, utt.waveform)
            rows.append(
                {
                    "utterance_id": utt.utterance_id,
                    "speaker_id": utt.speaker_id,
                    "pairing_key": utt.pairing_key,
                    "path": rel,
                }
            )
        entries[domain.value] = rows
    manifest = {"format_version": _MANIFEST_VERSION, "domains": entries}
    manifest_path = root / MANIFEST_NAME
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest_path


def load_corpus(directory: str | Path) -> ThreeDomainCorpus:
    """Load a corpus previously written by :func:`save_corpus`."""
    root = Path(directory)
    manifest_path = root / MANIFEST_NAME
    if not manifest_path.is_file():
        raise ValidationError(f"no {MANIFEST_NAME} under {root}")
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("format_version") != _MANIFEST_VERSION:
        raise ValidationError(
            f"{manifest_path}: unsupported manifest version {manifest.get('format_version')!r}"
        )

    def load_domain(domain: Domain) -> DomainCorpus:
        rows = manifest["domains"].get(domain.value)
        if not rows:
            raise ValidationError(f"{manifest_path}: no utterances for domain {domain.value}")
        utts = []
        for row in rows:
            wav = read_wav(root / row["path"])
            if wav.sample_rate != domain.native_rate:
                raise RateError(
                    f"{row['path']}: rate {wav.sample_rate} does not match"
                    f" {domain.value} native rate {domain.native_rate}"
                )
            utts.append(
                Utterance(row["utterance_id"], row["speaker_id"], domain, wav, row.get("pairing_key"))
            )
        return DomainCorpus(domain, tuple(utts))

    tel = load_domain(Domain.NARROW_TEL)
    mic = load_domain(Domain.NARROW_MIC)
    wide = load_domain(Domain.WIDE_MIC)
    pair_corpora(mic, wide)
    return ThreeDomainCorpus(tel, mic, wide)


def retag_utterance(utt: Utterance, domain: Domain, id_prefix: str = "") -> Utterance:
    """Copy an utterance under a new domain tag (and optional id prefix).

    Used when assembling derived training pools whose members originate in
    other domains; speaker id and pairing key pass through unchanged.
    """
    return replace(utt, domain=domain, utterance_id=id_prefix + utt.utterance_id)
