"""Tiny stand-ins and fixtures shared by the loss and trainer tests.

Stub mappers/scorers implement the same parameter-node/apply protocol as the
real models but carry no parameters, so loss values can be pinned by hand.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from bweda import autodiff as ad
from bweda import models as md
from bweda.signals import Domain


class StubMapper:
    """A fixed waveform map with an empty parameter vector."""

    def __init__(self, fn: Callable[[ad.Tensor], ad.Tensor]) -> None:
        self._fn = fn

    def parameter_node(self, trainable: bool = True) -> ad.Tensor:
        return ad.Tensor(np.zeros(0), requires_grad=trainable)

    def apply(self, params: ad.Tensor, x: ad.Tensor) -> ad.Tensor:
        return self._fn(x)


class StubScorer:
    """A fixed scoring rule with an empty parameter vector."""

    def __init__(self, fn: Callable[[ad.Tensor], "list[ad.Tensor] | ad.Tensor"]) -> None:
        self._fn = fn

    def parameter_node(self, trainable: bool = True) -> ad.Tensor:
        return ad.Tensor(np.zeros(0), requires_grad=trainable)

    def scores(self, params: ad.Tensor, x: ad.Tensor) -> list[ad.Tensor]:
        out = self._fn(x)
        return [out] if isinstance(out, ad.Tensor) else list(out)


def identity_mapper() -> StubMapper:
    return StubMapper(lambda x: x)


def scale_mapper(factor: float) -> StubMapper:
    return StubMapper(lambda x: ad.mul(x, factor))


def const_scorer(value: float) -> StubScorer:
    return StubScorer(lambda x: ad.Tensor(np.full(x.shape[0], value)))


def mean_scorer() -> StubScorer:
    """Scores each batch element by its sample mean (keeps gradients flowing)."""
    return StubScorer(lambda x: ad.mean_axes(x, (1,)))


TINY_GEN = md.GeneratorConfig(n_blocks=1, channels=3, kernel_size=3, dilation_schedule=(1,))
TINY_DISC = md.DiscriminatorConfig(periods=(2,), initial_channels=2)


def tiny_generator(seed: int, source: Domain = Domain.NARROW_TEL, target: Domain = Domain.NARROW_MIC) -> md.MappingModel:
    cfg = md.GeneratorConfig(
        n_blocks=1, channels=3, kernel_size=3, dilation_schedule=(1,), parameter_seed=seed
    )
    return md.MappingModel(cfg, source, target)


def tiny_discriminator(seed: int, domain: Domain = Domain.NARROW_MIC, periods: tuple[int, ...] = (2,)) -> md.ScoreModel:
    cfg = md.DiscriminatorConfig(periods=periods, initial_channels=2, parameter_seed=seed)
    return md.ScoreModel(cfg, domain)
