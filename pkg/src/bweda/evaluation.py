"""Quality and identity metrics for mapped speech.

Four measurements cover the two things a mapping can get wrong:

* :func:`log_spectral_distance` -- spectral fidelity against a reference
  (bandwidth extension quality).
* :func:`domain_discriminability` -- how separable two utterance sets remain
  for a simple trained classifier, reported as an AUC where 0.5 means
  indistinguishable (domain adaptation quality).
* :func:`compute_eer` / :func:`compute_min_dcf` -- speaker verification
  error rates over a trial list, measuring whether mappings preserve
  speaker identity.

Everything here is deterministic: classifier train/test splits derive from
an explicit seed plus the content being split, so results never depend on
argument order or call history.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .errors import ValidationError
from .signals import MODEL_SAMPLE_RATE, DomainCorpus, Utterance, Waveform, to_model_rate

FRAME_SIZE = 512
HOP_SIZE = 256
N_BANDS = 24
_SPECTRUM_FLOOR = 1e-8
_RIDGE_ALPHA = 1e-3

DEFAULT_P_TARGET = 0.05


# ---------------------------------------------------------------------------
# spectral distance
# ---------------------------------------------------------------------------


def _frame_magnitudes(x: np.ndarray) -> np.ndarray:
    """Hann-windowed rFFT magnitudes, one row per frame."""
    if x.size < FRAME_SIZE:
        raise ValidationError(
            f"signal of {x.size} samples too short for {FRAME_SIZE}-sample frames"
        )
    n_frames = 1 + (x.size - FRAME_SIZE) // HOP_SIZE
    window = np.hanning(FRAME_SIZE)
    starts = np.arange(n_frames) * HOP_SIZE
    frames = x[starts[:, None] + np.arange(FRAME_SIZE)[None, :]] * window
    return np.abs(np.fft.rfft(frames, axis=1))


def log_spectral_distance(x: np.ndarray | Waveform, y: np.ndarray | Waveform) -> float:
    """Mean log-spectral distance in dB between two aligned signals.

    Frames of 512 samples with hop 256 under a Hann window; per frame, the
    root-mean-square difference of the floored 20*log10 magnitude spectra;
    averaged over frames. Identical signals give exactly 0; a global gain of
    2 gives 20*log10(2), about 6.02 dB.
    """
    xs = x.samples if isinstance(x, Waveform) else np.asarray(x, dtype=np.float64)
    ys = y.samples if isinstance(y, Waveform) else np.asarray(y, dtype=np.float64)
    if xs.shape != ys.shape:
        raise ValidationError(f"signals must be aligned: shapes {xs.shape} vs {ys.shape}")
    log_x = 20.0 * np.log10(np.maximum(_frame_magnitudes(xs), _SPECTRUM_FLOOR))
    log_y = 20.0 * np.log10(np.maximum(_frame_magnitudes(ys), _SPECTRUM_FLOOR))
    per_frame = np.sqrt(np.mean((log_x - log_y) ** 2, axis=1))
    return float(np.mean(per_frame))


# ---------------------------------------------------------------------------
# utterance embeddings
# ---------------------------------------------------------------------------


def _mel_filterbank() -> np.ndarray:
    """Triangular filters (N_BANDS x bins) spaced on the mel scale over 0-8 kHz."""

    def to_mel(f: np.ndarray | float) -> np.ndarray | float:
        return 2595.0 * np.log10(1.0 + np.asarray(f) / 700.0)

    def from_mel(m: np.ndarray) -> np.ndarray:
        return 700.0 * (10.0 ** (m / 2595.0) - 1.0)

    edges = from_mel(np.linspace(to_mel(0.0), to_mel(MODEL_SAMPLE_RATE / 2.0), N_BANDS + 2))
    bins = np.fft.rfftfreq(FRAME_SIZE, d=1.0 / MODEL_SAMPLE_RATE)
    bank = np.zeros((N_BANDS, bins.size))
    for b in range(N_BANDS):
        lo, mid, hi = edges[b], edges[b + 1], edges[b + 2]
        rising = (bins - lo) / max(mid - lo, 1e-9)
        falling = (hi - bins) / max(hi - mid, 1e-9)
        bank[b] = np.clip(np.minimum(rising, falling), 0.0, None)
    return bank


_MEL_BANK = _mel_filterbank()


def embed_utterance(w: Waveform) -> np.ndarray:
    """A 24-dimensional band-energy voice print.

    Log mel-band energies of the 16 kHz view, averaged over time and
    mean/variance normalized, so the embedding captures spectral shape
    rather than level. Same-speaker utterances land close in cosine
    similarity; wideband and narrowband renderings of different content
    separate clearly.
    """
    samples = to_model_rate(w).samples
    power = _frame_magnitudes(samples) ** 2
    band_energy = power @ _MEL_BANK.T
    log_bands = np.log(np.maximum(band_energy, _SPECTRUM_FLOOR))
    vec = log_bands.mean(axis=0)
    std = float(np.std(vec))
    return (vec - vec.mean()) / max(std, 1e-12)


def embed_corpus(corpus: DomainCorpus | list[Utterance]) -> np.ndarray:
    utterances = corpus.utterances if isinstance(corpus, DomainCorpus) else tuple(corpus)
    if not utterances:
        raise ValidationError("cannot embed an empty utterance collection")
    return np.stack([embed_utterance(u.waveform) for u in utterances])


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    denom = float(np.linalg.norm(a) * np.linalg.norm(b))
    if denom == 0.0:
        return 0.0
    return float(np.dot(a, b) / denom)


# ---------------------------------------------------------------------------
# verification trials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Trial:
    enroll_id: str
    test_id: str
    is_target: bool


@dataclass(frozen=True)
class TrialList:
    """Speaker verification trials over a set of utterances."""

    trials: tuple[Trial, ...]

    def __post_init__(self) -> None:
        if not self.trials:
            raise ValidationError("trial list must not be empty")
        object.__setattr__(self, "trials", tuple(self.trials))

    @property
    def n_targets(self) -> int:
        return sum(1 for t in self.trials if t.is_target)

    @property
    def n_nontargets(self) -> int:
        return len(self.trials) - self.n_targets

    def save(self, path: str | Path) -> None:
        lines = [
            f"{t.enroll_id} {t.test_id} {'target' if t.is_target else 'nontarget'}"
            for t in self.trials
        ]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "TrialList":
        trials = []
        for line_no, line in enumerate(Path(path).read_text().splitlines(), start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 3 or parts[2] not in ("target", "nontarget"):
                raise ValidationError(f"{path}:{line_no}: malformed trial line {line!r}")
            trials.append(Trial(parts[0], parts[1], parts[2] == "target"))
        return cls(tuple(trials))


def build_trial_list(utterances: list[Utterance] | DomainCorpus) -> TrialList:
    """All unordered utterance pairs; a trial is a target iff speakers match."""
    utts = utterances.utterances if isinstance(utterances, DomainCorpus) else tuple(utterances)
    utts = sorted(utts, key=lambda u: u.utterance_id)
    if len(utts) < 2:
        raise ValidationError("need at least two utterances to build trials")
    trials = []
    for i in range(len(utts)):
        for j in range(i + 1, len(utts)):
            trials.append(
                Trial(
                    utts[i].utterance_id,
                    utts[j].utterance_id,
                    utts[i].speaker_id == utts[j].speaker_id,
                )
            )
    return TrialList(tuple(trials))


def score_trials(embeddings: dict[str, np.ndarray], trial_list: TrialList) -> np.ndarray:
    """Cosine scores for each trial, in trial order."""
    scores = np.empty(len(trial_list.trials))
    for i, trial in enumerate(trial_list.trials):
        try:
            scores[i] = cosine_similarity(embeddings[trial.enroll_id], embeddings[trial.test_id])
        except KeyError as exc:
            raise ValidationError(f"trial references unknown utterance {exc}") from exc
    return scores


# ---------------------------------------------------------------------------
# detection error rates
# ---------------------------------------------------------------------------


def _split_scores(
    scores: np.ndarray, labels: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValidationError("scores and labels must be aligned 1-D arrays")
    targets = scores[labels]
    nontargets = scores[~labels]
    if targets.size == 0 or nontargets.size == 0:
        raise ValidationError("need at least one target and one nontarget trial")
    return targets, nontargets


def _threshold_grid(targets: np.ndarray, nontargets: np.ndarray) -> np.ndarray:
    """-inf, midpoints between adjacent distinct scores, +inf."""
    combined = np.unique(np.concatenate([targets, nontargets]))
    mids = (combined[:-1] + combined[1:]) / 2.0
    return np.concatenate(([-np.inf], mids, [np.inf]))


def _rates_at(
    thresholds: np.ndarray, targets: np.ndarray, nontargets: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """FAR and FRR per threshold under the rule: accept iff score >= threshold."""
    tgt = np.sort(targets)
    non = np.sort(nontargets)
    far = 1.0 - np.searchsorted(non, thresholds, side="left") / non.size
    frr = np.searchsorted(tgt, thresholds, side="left") / tgt.size
    return far, frr


def compute_eer(scores: np.ndarray, labels: np.ndarray) -> float:
    """Equal error rate in percent (0 to 100).

    The decision rule is accept iff score >= threshold, swept over midpoints
    between adjacent distinct scores plus the two infinities. Where no grid
    point makes FAR equal FRR exactly, the crossing is linearly interpolated
    between the neighboring grid points. Depends only on score ranks, so any
    strictly increasing transform of the scores leaves it unchanged.
    """
    targets, nontargets = _split_scores(scores, labels)
    thresholds = _threshold_grid(targets, nontargets)
    far, frr = _rates_at(thresholds, targets, nontargets)
    diff = far - frr
    cross = int(np.argmax(diff <= 0.0))
    if diff[cross] == 0.0:
        return float(100.0 * (far[cross] + frr[cross]) / 2.0)
    prev = cross - 1
    alpha = diff[prev] / (diff[prev] - diff[cross])
    far_star = far[prev] + alpha * (far[cross] - far[prev])
    frr_star = frr[prev] + alpha * (frr[cross] - frr[prev])
    return float(100.0 * (far_star + frr_star) / 2.0)


def compute_min_dcf(
    scores: np.ndarray,
    labels: np.ndarray,
    p_target: float = DEFAULT_P_TARGET,
    c_miss: float = 1.0,
    c_fa: float = 1.0,
) -> float:
    """Minimum normalized detection cost over the same threshold grid.

    ``DCF(t) = p_target * c_miss * FRR(t) + (1 - p_target) * c_fa * FAR(t)``,
    normalized by the best trivial system ``min(p_target * c_miss,
    (1 - p_target) * c_fa)``; the reject-everything threshold caps the result
    at 1 (up to rounding).
    """
    if not 0.0 < p_target < 1.0:
        raise ValidationError(f"p_target must be in (0, 1), got {p_target}")
    targets, nontargets = _split_scores(scores, labels)
    thresholds = _threshold_grid(targets, nontargets)
    far, frr = _rates_at(thresholds, targets, nontargets)
    dcf = p_target * c_miss * frr + (1.0 - p_target) * c_fa * far
    return float(dcf.min() / min(p_target * c_miss, (1.0 - p_target) * c_fa))


# ---------------------------------------------------------------------------
# domain discriminability
# ---------------------------------------------------------------------------


def _content_permutation(rows: np.ndarray, seed: int) -> np.ndarray:
    """A permutation derived from the seed and the rows themselves.

    Tying the shuffle to content (not argument position) makes the
    train/test split invariant under swapping the two sides, which is what
    gives the exact AUC(x, y) + AUC(y, x) = 1 symmetry.
    """
    digest = zlib.crc32(np.ascontiguousarray(rows).tobytes())
    rng = np.random.default_rng(np.random.SeedSequence((seed & 0xFFFF_FFFF_FFFF_FFFF, digest)))
    return rng.permutation(rows.shape[0])


def mann_whitney_auc(pos_scores: np.ndarray, neg_scores: np.ndarray) -> float:
    """Mann-Whitney AUC with half credit for ties.

    The probability a random positive outscores a random negative. Swapping
    the roles of the two score sets gives exactly one minus the result.
    """
    pos_scores = np.asarray(pos_scores, dtype=np.float64)
    neg_scores = np.asarray(neg_scores, dtype=np.float64)
    if pos_scores.size == 0 or neg_scores.size == 0:
        raise ValidationError("both score sets must be non-empty")
    combined = np.concatenate([pos_scores, neg_scores])
    ranks = rankdata(combined, method="average")
    n_pos, n_neg = pos_scores.size, neg_scores.size
    rank_sum = float(ranks[:n_pos].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def domain_discriminability(
    x: np.ndarray | DomainCorpus | list[Utterance],
    y: np.ndarray | DomainCorpus | list[Utterance],
    seed: int = 0,
) -> float:
    """How well a simple classifier separates two utterance sets: test AUC.

    Each side is embedded (if not already an embedding matrix) and split in
    half into train/test; a ridge regression to +1/-1 labels is fit on the
    train halves and scored on the held-out halves. The returned value is
    the Mann-Whitney AUC of the classifier's test scores: 0.5 means the two
    sets are indistinguishable to this probe, 1.0 means perfectly separable.

    Splits and the training row order derive from the seed plus the content
    of each side, never from argument position, so the measurement is
    bit-exactly symmetric in its arguments.
    """
    x_emb = x if isinstance(x, np.ndarray) else embed_corpus(x)
    y_emb = y if isinstance(y, np.ndarray) else embed_corpus(y)
    if x_emb.ndim != 2 or y_emb.ndim != 2 or x_emb.shape[1] != y_emb.shape[1]:
        raise ValidationError(
            f"embedding matrices must share a feature dimension: {x_emb.shape} vs {y_emb.shape}"
        )
    if x_emb.shape[0] < 4 or y_emb.shape[0] < 4:
        raise ValidationError("need at least 4 utterances per side to split train/test")

    def split(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        perm = _content_permutation(rows, seed)
        half = rows.shape[0] // 2
        return rows[perm[:half]], rows[perm[half:]]

    x_train, x_test = split(x_emb)
    y_train, y_test = split(y_emb)

    def augment(rows: np.ndarray) -> np.ndarray:
        return np.hstack([rows, np.ones((rows.shape[0], 1))])

    # content-ordered blocks keep the float arithmetic identical under swap
    sides = [
        (zlib.crc32(np.ascontiguousarray(x_emb).tobytes()), x_train, 1.0),
        (zlib.crc32(np.ascontiguousarray(y_emb).tobytes()), y_train, -1.0),
    ]
    sides.sort(key=lambda side: side[0])
    design = augment(np.vstack([sides[0][1], sides[1][1]]))
    labels = np.concatenate(
        [np.full(sides[0][1].shape[0], sides[0][2]), np.full(sides[1][1].shape[0], sides[1][2])]
    )
    gram = design.T @ design + _RIDGE_ALPHA * np.eye(design.shape[1])
    weights = np.linalg.solve(gram, design.T @ labels)

    return mann_whitney_auc(augment(x_test) @ weights, augment(y_test) @ weights)


# ---------------------------------------------------------------------------
# report container
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EvalReport:
    """One system's evaluation numbers, with free-form metadata."""

    lsd_db: float
    domain_auc: float
    eer_percent: float
    min_dcf: float
    metadata: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "lsd_db": self.lsd_db,
            "domain_auc": self.domain_auc,
            "eer_percent": self.eer_percent,
            "min_dcf": self.min_dcf,
            "metadata": self.metadata,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "EvalReport":
        return cls(
            lsd_db=float(data["lsd_db"]),
            domain_auc=float(data["domain_auc"]),
            eer_percent=float(data["eer_percent"]),
            min_dcf=float(data["min_dcf"]),
            metadata=dict(data.get("metadata", {})),
        )
