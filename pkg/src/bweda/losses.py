"""Adversarial training objectives for waveform mappings.

Least-squares adversarial targets are used throughout: a discriminator is
trained toward score 1 on real signals and 0 on generated ones, and a
generator is trained to push its outputs' scores toward 1. Multi-period
discriminators return one score per period; adversarial terms average the
squared errors over periods.

Reconstruction penalties are per-utterance norms averaged over the batch:

* supervised loss   -- Euclidean norm ``||target - mapped||_2`` per utterance
  (an optional switch squares it into a mean-squared-error form),
* cycle loss        -- L1 norms of both round trips, ``a -> ab -> ba`` and
  ``b -> ba -> ab``,
* identity loss     -- L1 norms of each generator applied to its own target
  domain.

The norm is taken over the whole utterance without length normalization, so
loss values scale with segment length.

Four composite objectives assemble these pieces. Each returns a
:class:`LossBreakdown` exposing the unweighted component values, the exact
weighted composition of every optimized party's total, and the parameter
leaves per party. Generator totals see discriminators through frozen
(gradient-less) parameters, and discriminator totals see generated signals
as detached constants, so each party's gradient touches only its own
parameters.

The two joint objectives couple a domain-adaptation pair (A<->B) with a
bandwidth-extension stage (B->C) and add tie terms that push the composed
``A -> B -> C`` chain (and, in the doubly cyclic variant, the reverse chain
``C -> B -> A`` plus three long-range cycle penalties) toward the wideband
discriminator's real class, which is what makes the two stages train as one
system rather than as independent pieces.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from . import autodiff as ad
from .errors import BatchError, PairingError, ValidationError

ScoreFn = Callable[[ad.Tensor], "list[ad.Tensor] | ad.Tensor"]
MapFn = Callable[[ad.Tensor], ad.Tensor]


class WaveformMapper(Protocol):
    """What composite objectives need from a generator."""

    def parameter_node(self, trainable: bool = True) -> ad.Tensor: ...

    def apply(self, params: ad.Tensor, x: ad.Tensor) -> ad.Tensor: ...


class WaveformScorer(Protocol):
    """What composite objectives need from a discriminator."""

    def parameter_node(self, trainable: bool = True) -> ad.Tensor: ...

    def scores(self, params: ad.Tensor, x: ad.Tensor) -> list[ad.Tensor]: ...


@dataclass(frozen=True)
class LossWeights:
    """Weights of the reconstruction terms relative to the adversarial ones."""

    lambda_sup: float = 0.1
    lambda_cyc: float = 10.0
    lambda_id: float = 5.0
    sup_use_mse: bool = False

    def __post_init__(self) -> None:
        for name in ("lambda_sup", "lambda_cyc", "lambda_id"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ValidationError(f"{name} must be finite and non-negative, got {value}")


def _as_batch(x: object, name: str) -> ad.Tensor:
    tensor = ad.as_tensor(x)
    if len(tensor.shape) != 2:
        raise BatchError(f"{name} must be (batch, time), got shape {tensor.shape}")
    if tensor.shape[0] < 1 or tensor.shape[1] < 1:
        raise BatchError(f"{name} must be non-empty, got shape {tensor.shape}")
    if not np.all(np.isfinite(tensor.data)):
        raise BatchError(f"{name} contains non-finite values")
    return tensor


def _as_paired(src: object, tgt: object, src_name: str, tgt_name: str) -> tuple[ad.Tensor, ad.Tensor]:
    a = _as_batch(src, src_name)
    b = _as_batch(tgt, tgt_name)
    if a.shape != b.shape:
        raise PairingError(
            f"paired batches must align row by row: {src_name} is {a.shape}, {tgt_name} is {b.shape}"
        )
    return a, b


def _score_list(score_fn: ScoreFn, x: ad.Tensor) -> list[ad.Tensor]:
    scores = score_fn(x)
    return [scores] if isinstance(scores, ad.Tensor) else list(scores)


def _mse_toward(scores: list[ad.Tensor], target: float) -> ad.Tensor:
    """Mean over periods of the per-period mean squared error to ``target``."""
    terms = [ad.tmean(ad.square(ad.sub(s, target))) for s in scores]
    return ad.add_scalars(terms) / len(terms) if len(terms) > 1 else terms[0]


def _l1_per_utterance(diff: ad.Tensor) -> ad.Tensor:
    """Batch mean of the per-utterance L1 norm (sum of absolute samples)."""
    return ad.tmean(ad.sum_axes(ad.absolute(diff), (1,)))


def _l2_per_utterance(diff: ad.Tensor) -> ad.Tensor:
    """Batch mean of the per-utterance Euclidean norm (unsquared)."""
    return ad.tmean(ad.sqrt(ad.sum_axes(ad.square(diff), (1,))))


def _mse_per_sample(diff: ad.Tensor) -> ad.Tensor:
    return ad.tmean(ad.square(diff))


# ---------------------------------------------------------------------------
# elementary losses
# ---------------------------------------------------------------------------


def adv_loss_D(score_fn: ScoreFn, real_batch: object, fake_batch: object) -> ad.Tensor:
    """Discriminator loss: real scores toward 1, fake scores toward 0.

    The fake batch is treated as a constant: no gradient flows back into
    whatever produced it.
    """
    real = _as_batch(real_batch, "real_batch")
    fake = _as_batch(fake_batch, "fake_batch").detach()
    real_term = _mse_toward(_score_list(score_fn, real), 1.0)
    fake_term = _mse_toward(_score_list(score_fn, fake), 0.0)
    return ad.add(real_term, fake_term)


def adv_loss_G(score_fn: ScoreFn, fake_batch: object) -> ad.Tensor:
    """Generator's adversarial loss: fake scores pushed toward 1."""
    fake = _as_batch(fake_batch, "fake_batch")
    return _mse_toward(_score_list(score_fn, fake), 1.0)


def sup_loss(map_fn: MapFn, src_batch: object, tgt_batch: object, use_mse: bool = False) -> ad.Tensor:
    """Supervised regression loss on aligned pairs.

    Default form: batch mean of the per-utterance Euclidean norm of the
    residual. With ``use_mse`` the residual's per-sample mean square is used
    instead.
    """
    src, tgt = _as_paired(src_batch, tgt_batch, "src_batch", "tgt_batch")
    diff = ad.sub(tgt, map_fn(src))
    return _mse_per_sample(diff) if use_mse else _l2_per_utterance(diff)


def cycle_loss(map_ab: MapFn, map_ba: MapFn, a_batch: object, b_batch: object) -> ad.Tensor:
    """Round-trip consistency: ``||a - ba(ab(a))||_1 + ||b - ab(ba(b))||_1``."""
    a = _as_batch(a_batch, "a_batch")
    b = _as_batch(b_batch, "b_batch")
    forward = _l1_per_utterance(ad.sub(a, map_ba(map_ab(a))))
    backward = _l1_per_utterance(ad.sub(b, map_ab(map_ba(b))))
    return ad.add(forward, backward)


def identity_loss(map_ab: MapFn, map_ba: MapFn, a_batch: object, b_batch: object) -> ad.Tensor:
    """Fixed-point penalty: each generator should leave its own target domain alone."""
    a = _as_batch(a_batch, "a_batch")
    b = _as_batch(b_batch, "b_batch")
    return ad.add(
        _l1_per_utterance(ad.sub(b, map_ab(b))),
        _l1_per_utterance(ad.sub(a, map_ba(a))),
    )


# ---------------------------------------------------------------------------
# breakdown bookkeeping
# ---------------------------------------------------------------------------


@dataclass
class LossBreakdown:
    """One objective evaluation, decomposed.

    ``components`` holds unweighted scalar tensors by name; ``composition``
    lists, for every optimized party, the ``(component, weight)`` terms whose
    weighted sum is that party's total; ``parties`` maps each party to its
    parameter leaves (model role -> tensor); ``totals`` holds the assembled
    scalar totals, built strictly in composition order.
    """

    components: dict[str, ad.Tensor]
    composition: dict[str, tuple[tuple[str, float], ...]]
    parties: dict[str, dict[str, ad.Tensor]]
    totals: dict[str, ad.Tensor]

    @classmethod
    def build(
        cls,
        components: dict[str, ad.Tensor],
        composition: dict[str, tuple[tuple[str, float], ...]],
        parties: dict[str, dict[str, ad.Tensor]],
    ) -> "LossBreakdown":
        totals: dict[str, ad.Tensor] = {}
        for party, terms in composition.items():
            pieces = [
                components[name] if weight == 1.0 else ad.mul(components[name], float(weight))
                for name, weight in terms
            ]
            totals[party] = ad.add_scalars(pieces)
        return cls(components=components, composition=composition, parties=parties, totals=totals)

    def component_values(self) -> dict[str, float]:
        return {name: tensor.item() for name, tensor in self.components.items()}

    def total_values(self) -> dict[str, float]:
        return {party: tensor.item() for party, tensor in self.totals.items()}

    def to_scalars(self) -> dict:
        return {"components": self.component_values(), "totals": self.total_values()}


# ---------------------------------------------------------------------------
# composite objectives
# ---------------------------------------------------------------------------


def _bind(mapper: WaveformMapper, params: ad.Tensor) -> MapFn:
    return lambda x: mapper.apply(params, x)


def _bind_scores(scorer: WaveformScorer, params: ad.Tensor) -> ScoreFn:
    return lambda x: scorer.scores(params, x)


def cgan_objective(
    g: WaveformMapper,
    d: WaveformScorer,
    src_batch: object,
    tgt_batch: object,
    weights: LossWeights = LossWeights(),
) -> LossBreakdown:
    """Supervised adversarial mapping on aligned pairs.

    Generator total: adversarial term plus ``lambda_sup`` times the
    supervised residual norm. Discriminator total: its adversarial term.
    """
    src, tgt = _as_paired(src_batch, tgt_batch, "src_batch", "tgt_batch")
    pg = g.parameter_node(True)
    pd = d.parameter_node(True)
    pd_frozen = d.parameter_node(False)

    fake = g.apply(pg, src)
    diff = ad.sub(tgt, fake)
    sup = _mse_per_sample(diff) if weights.sup_use_mse else _l2_per_utterance(diff)
    adv_g = _mse_toward(d.scores(pd_frozen, fake), 1.0)
    adv_d = ad.add(
        _mse_toward(d.scores(pd, tgt), 1.0),
        _mse_toward(d.scores(pd, fake.detach()), 0.0),
    )
    return LossBreakdown.build(
        components={"adv_g": adv_g, "sup": sup, "adv_d": adv_d},
        composition={
            "generators": (("adv_g", 1.0), ("sup", weights.lambda_sup)),
            "disc": (("adv_d", 1.0),),
        },
        parties={"generators": {"g": pg}, "disc": {"d": pd}},
    )


def _cyclegan_components(
    g_fwd: WaveformMapper,
    g_bwd: WaveformMapper,
    d_src: WaveformScorer,
    d_tgt: WaveformScorer,
    src: ad.Tensor,
    tgt: ad.Tensor,
    pg_fwd: ad.Tensor,
    pg_bwd: ad.Tensor,
    pd_src: ad.Tensor,
    pd_tgt: ad.Tensor,
) -> tuple[dict[str, ad.Tensor], dict[str, ad.Tensor]]:
    """Shared machinery for the unpaired objective.

    Returns the component dict plus the live fake tensors (for reuse by tie
    terms in joint objectives).
    """
    pd_src_frozen = d_src.parameter_node(False)
    pd_tgt_frozen = d_tgt.parameter_node(False)

    fake_tgt = g_fwd.apply(pg_fwd, src)
    fake_src = g_bwd.apply(pg_bwd, tgt)

    adv_g_fwd = _mse_toward(d_tgt.scores(pd_tgt_frozen, fake_tgt), 1.0)
    adv_g_bwd = _mse_toward(d_src.scores(pd_src_frozen, fake_src), 1.0)

    cyc = ad.add(
        _l1_per_utterance(ad.sub(src, g_bwd.apply(pg_bwd, fake_tgt))),
        _l1_per_utterance(ad.sub(tgt, g_fwd.apply(pg_fwd, fake_src))),
    )
    ident = ad.add(
        _l1_per_utterance(ad.sub(tgt, g_fwd.apply(pg_fwd, tgt))),
        _l1_per_utterance(ad.sub(src, g_bwd.apply(pg_bwd, src))),
    )
    adv_d_src = ad.add(
        _mse_toward(d_src.scores(pd_src, src), 1.0),
        _mse_toward(d_src.scores(pd_src, fake_src.detach()), 0.0),
    )
    adv_d_tgt = ad.add(
        _mse_toward(d_tgt.scores(pd_tgt, tgt), 1.0),
        _mse_toward(d_tgt.scores(pd_tgt, fake_tgt.detach()), 0.0),
    )
    components = {
        "adv_g_fwd": adv_g_fwd,
        "adv_g_bwd": adv_g_bwd,
        "cycle": cyc,
        "identity": ident,
        "adv_d_src": adv_d_src,
        "adv_d_tgt": adv_d_tgt,
    }
    return components, {"fake_tgt": fake_tgt, "fake_src": fake_src}


def cyclegan_objective(
    g_fwd: WaveformMapper,
    g_bwd: WaveformMapper,
    d_src: WaveformScorer,
    d_tgt: WaveformScorer,
    src_batch: object,
    tgt_batch: object,
    weights: LossWeights = LossWeights(),
) -> LossBreakdown:
    """Unpaired bidirectional mapping with cycle and identity penalties.

    Generator total: both adversarial terms plus ``lambda_cyc`` times the
    cycle loss and ``lambda_id`` times the identity loss. Each discriminator
    total: its own adversarial term.
    """
    src = _as_batch(src_batch, "src_batch")
    tgt = _as_batch(tgt_batch, "tgt_batch")
    pg_fwd = g_fwd.parameter_node(True)
    pg_bwd = g_bwd.parameter_node(True)
    pd_src = d_src.parameter_node(True)
    pd_tgt = d_tgt.parameter_node(True)
    components, _ = _cyclegan_components(
        g_fwd, g_bwd, d_src, d_tgt, src, tgt, pg_fwd, pg_bwd, pd_src, pd_tgt
    )
    return LossBreakdown.build(
        components=components,
        composition={
            "generators": (
                ("adv_g_fwd", 1.0),
                ("adv_g_bwd", 1.0),
                ("cycle", weights.lambda_cyc),
                ("identity", weights.lambda_id),
            ),
            "disc_src": (("adv_d_src", 1.0),),
            "disc_tgt": (("adv_d_tgt", 1.0),),
        },
        parties={
            "generators": {"g_fwd": pg_fwd, "g_bwd": pg_bwd},
            "disc_src": {"d_src": pd_src},
            "disc_tgt": {"d_tgt": pd_tgt},
        },
    )


def joint_cgan_objective(
    g_ab: WaveformMapper,
    g_ba: WaveformMapper,
    g_bc: WaveformMapper,
    d_a: WaveformScorer,
    d_b: WaveformScorer,
    d_c: WaveformScorer,
    a_batch: object,
    b_batch: object,
    paired_b_batch: object,
    paired_c_batch: object,
    weights: LossWeights = LossWeights(),
) -> LossBreakdown:
    """Domain adaptation (A<->B, unpaired) plus supervised extension (B->C).

    On top of the two stand-alone objectives, a tie term scores the composed
    chain ``g_bc(g_ab(a))`` against the wideband discriminator: the
    generators prefer chains the discriminator accepts, and ``d_c``
    additionally learns to reject them. Removing the tie terms leaves
    exactly the sum of the stand-alone objectives.
    """
    a = _as_batch(a_batch, "a_batch")
    b = _as_batch(b_batch, "b_batch")
    b_paired, c_paired = _as_paired(paired_b_batch, paired_c_batch, "paired_b_batch", "paired_c_batch")

    pg_ab = g_ab.parameter_node(True)
    pg_ba = g_ba.parameter_node(True)
    pg_bc = g_bc.parameter_node(True)
    pd_a = d_a.parameter_node(True)
    pd_b = d_b.parameter_node(True)
    pd_c = d_c.parameter_node(True)
    pd_c_frozen = d_c.parameter_node(False)

    ab_components, ab_fakes = _cyclegan_components(
        g_ab, g_ba, d_a, d_b, a, b, pg_ab, pg_ba, pd_a, pd_b
    )

    fake_c = g_bc.apply(pg_bc, b_paired)
    diff = ad.sub(c_paired, fake_c)
    sup = _mse_per_sample(diff) if weights.sup_use_mse else _l2_per_utterance(diff)
    bc_adv_g = _mse_toward(d_c.scores(pd_c_frozen, fake_c), 1.0)
    bc_adv_d = ad.add(
        _mse_toward(d_c.scores(pd_c, c_paired), 1.0),
        _mse_toward(d_c.scores(pd_c, fake_c.detach()), 0.0),
    )

    chained = g_bc.apply(pg_bc, ab_fakes["fake_tgt"])
    tie_adv_g = _mse_toward(d_c.scores(pd_c_frozen, chained), 1.0)
    tie_adv_d = _mse_toward(d_c.scores(pd_c, chained.detach()), 0.0)

    components = {f"ab.{name}": tensor for name, tensor in ab_components.items()}
    components.update(
        {
            "bc.adv_g": bc_adv_g,
            "bc.sup": sup,
            "bc.adv_d": bc_adv_d,
            "tie.adv_g": tie_adv_g,
            "tie.adv_d": tie_adv_d,
        }
    )
    return LossBreakdown.build(
        components=components,
        composition={
            "generators": (
                ("ab.adv_g_fwd", 1.0),
                ("ab.adv_g_bwd", 1.0),
                ("ab.cycle", weights.lambda_cyc),
                ("ab.identity", weights.lambda_id),
                ("bc.adv_g", 1.0),
                ("bc.sup", weights.lambda_sup),
                ("tie.adv_g", 1.0),
            ),
            "disc_a": (("ab.adv_d_src", 1.0),),
            "disc_b": (("ab.adv_d_tgt", 1.0),),
            "disc_c": (("bc.adv_d", 1.0), ("tie.adv_d", 1.0)),
        },
        parties={
            "generators": {"g_ab": pg_ab, "g_ba": pg_ba, "g_bc": pg_bc},
            "disc_a": {"d_a": pd_a},
            "disc_b": {"d_b": pd_b},
            "disc_c": {"d_c": pd_c},
        },
    )


def joint_cyclegan_objective(
    g_ab: WaveformMapper,
    g_ba: WaveformMapper,
    g_bc: WaveformMapper,
    g_cb: WaveformMapper,
    d_a: WaveformScorer,
    d_b: WaveformScorer,
    d_c: WaveformScorer,
    a_batch: object,
    b_batch: object,
    c_batch: object,
    weights: LossWeights = LossWeights(),
) -> LossBreakdown:
    """Two chained unpaired objectives (A<->B and B<->C) tied in both directions.

    Beyond the two stand-alone cycle objectives, the composed chains
    ``g_bc(g_ab(a))`` and ``g_ba(g_cb(c))`` are scored against ``d_c`` and
    ``d_a`` respectively (with matching fake-side discriminator terms), and
    three long-range cycle penalties close the loops: the mid-domain
    consistency of both chains, and full returns ``a -> ... -> a`` and
    ``c -> ... -> c`` through all four generators.
    """
    a = _as_batch(a_batch, "a_batch")
    b = _as_batch(b_batch, "b_batch")
    c = _as_batch(c_batch, "c_batch")

    pg_ab = g_ab.parameter_node(True)
    pg_ba = g_ba.parameter_node(True)
    pg_bc = g_bc.parameter_node(True)
    pg_cb = g_cb.parameter_node(True)
    pd_a = d_a.parameter_node(True)
    pd_b = d_b.parameter_node(True)
    pd_c = d_c.parameter_node(True)
    pd_a_frozen = d_a.parameter_node(False)
    pd_c_frozen = d_c.parameter_node(False)

    ab_components, ab_fakes = _cyclegan_components(
        g_ab, g_ba, d_a, d_b, a, b, pg_ab, pg_ba, pd_a, pd_b
    )
    bc_components, bc_fakes = _cyclegan_components(
        g_bc, g_cb, d_b, d_c, b, c, pg_bc, pg_cb, pd_b, pd_c
    )

    # chain A -> B -> C and its continuations
    fake_b_from_a = ab_fakes["fake_tgt"]
    chain_ac = g_bc.apply(pg_bc, fake_b_from_a)
    back_to_b = g_cb.apply(pg_cb, chain_ac)
    back_to_a = g_ba.apply(pg_ba, back_to_b)
    tie_adv_g_ac = _mse_toward(d_c.scores(pd_c_frozen, chain_ac), 1.0)
    tie_adv_d_c = _mse_toward(d_c.scores(pd_c, chain_ac.detach()), 0.0)

    # chain C -> B -> A and its continuations
    fake_b_from_c = bc_fakes["fake_src"]
    chain_ca = g_ba.apply(pg_ba, fake_b_from_c)
    back_to_b2 = g_ab.apply(pg_ab, chain_ca)
    back_to_c = g_bc.apply(pg_bc, back_to_b2)
    tie_adv_g_ca = _mse_toward(d_a.scores(pd_a_frozen, chain_ca), 1.0)
    tie_adv_d_a = _mse_toward(d_a.scores(pd_a, chain_ca.detach()), 0.0)

    cycle_mid = ad.add(
        _l1_per_utterance(ad.sub(fake_b_from_a, back_to_b)),
        _l1_per_utterance(ad.sub(fake_b_from_c, back_to_b2)),
    )
    cycle_a = _l1_per_utterance(ad.sub(a, back_to_a))
    cycle_c = _l1_per_utterance(ad.sub(c, back_to_c))

    components = {f"ab.{name}": tensor for name, tensor in ab_components.items()}
    components.update({f"bc.{name}": tensor for name, tensor in bc_components.items()})
    components.update(
        {
            "tie.adv_g_ac": tie_adv_g_ac,
            "tie.adv_g_ca": tie_adv_g_ca,
            "tie.adv_d_c": tie_adv_d_c,
            "tie.adv_d_a": tie_adv_d_a,
            "tie.cycle_mid": cycle_mid,
            "tie.cycle_a": cycle_a,
            "tie.cycle_c": cycle_c,
        }
    )
    return LossBreakdown.build(
        components=components,
        composition={
            "generators": (
                ("ab.adv_g_fwd", 1.0),
                ("ab.adv_g_bwd", 1.0),
                ("ab.cycle", weights.lambda_cyc),
                ("ab.identity", weights.lambda_id),
                ("bc.adv_g_fwd", 1.0),
                ("bc.adv_g_bwd", 1.0),
                ("bc.cycle", weights.lambda_cyc),
                ("bc.identity", weights.lambda_id),
                ("tie.adv_g_ac", 1.0),
                ("tie.adv_g_ca", 1.0),
                ("tie.cycle_mid", weights.lambda_cyc),
                ("tie.cycle_a", weights.lambda_cyc),
                ("tie.cycle_c", weights.lambda_cyc),
            ),
            "disc_a": (("ab.adv_d_src", 1.0), ("tie.adv_d_a", 1.0)),
            "disc_b": (("ab.adv_d_tgt", 1.0), ("bc.adv_d_src", 1.0)),
            "disc_c": (("bc.adv_d_tgt", 1.0), ("tie.adv_d_c", 1.0)),
        },
        parties={
            "generators": {"g_ab": pg_ab, "g_ba": pg_ba, "g_bc": pg_bc, "g_cb": pg_cb},
            "disc_a": {"d_a": pd_a},
            "disc_b": {"d_b": pd_b},
            "disc_c": {"d_c": pd_c},
        },
    )
