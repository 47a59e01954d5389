"""Finite-difference verification of the hand-written backward pass.

The whole framework rides on one reverse-mode tape, so this demo puts it on
trial: evaluate the supervised adversarial objective, backprop each party's
total, then re-derive a sample of the same derivatives by central
differences and compare. Central differences on smooth float64 graphs are
good to about 1e-8 relative, so agreement at 1e-6 means the analytic
gradients are right, not merely plausible.

Run from the repository root:

    python3 demos/03_gradient_check.py
"""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from bweda import (
    DiscriminatorConfig,
    Domain,
    GeneratorConfig,
    MappingModel,
    ScoreModel,
    cgan_objective,
)
from bweda.autodiff import backward

GEN = GeneratorConfig(n_blocks=1, channels=2, kernel_size=3, dilation_schedule=(1,))
DISC = DiscriminatorConfig(periods=(2,), initial_channels=2)
EPS = 1e-5


def main() -> None:
    rng = np.random.default_rng(11)
    g = MappingModel(replace(GEN, parameter_seed=1), Domain.NARROW_MIC, Domain.WIDE_MIC)
    d = ScoreModel(replace(DISC, parameter_seed=2), Domain.WIDE_MIC)
    src = rng.normal(size=(2, 48))
    tgt = rng.normal(size=(2, 48))

    print(f"generator: {g.param_count} parameters, discriminator: {d.param_count}")

    # Analytic gradients: one objective evaluation, one backward per party.
    bd = cgan_objective(g, d, src, tgt)
    backward(bd.totals["generators"])
    grad_g = bd.parties["generators"]["g"].grad.copy()
    bd = cgan_objective(g, d, src, tgt)
    backward(bd.totals["disc"])
    grad_d = bd.parties["disc"]["d"].grad.copy()

    def loss_at(model: MappingModel | ScoreModel, params: np.ndarray, party: str) -> float:
        saved = model.parameters
        model.parameters = params
        try:
            return cgan_objective(g, d, src, tgt).totals[party].item()
        finally:
            model.parameters = saved

    def check(model, grad: np.ndarray, party: str, label: str) -> float:
        # Central differences on a random sample of coordinates.
        idx = rng.choice(model.param_count, size=min(20, model.param_count), replace=False)
        worst = 0.0
        for i in idx:
            p = model.parameters.copy()
            p[i] += EPS
            up = loss_at(model, p, party)
            p[i] -= 2 * EPS
            down = loss_at(model, p, party)
            fd = (up - down) / (2 * EPS)
            rel = abs(fd - grad[i]) / max(abs(fd), abs(grad[i]), 1e-12)
            worst = max(worst, rel)
        print(f"{label}: checked {len(idx)} coordinates, worst relative error {worst:.2e}")
        return worst

    w1 = check(g, grad_g, "generators", "d(total_G)/d(generator params)")
    w2 = check(d, grad_d, "disc", "d(total_D)/d(discriminator params)")

    print()
    if max(w1, w2) < 1e-6:
        print("Analytic and numeric gradients agree to better than 1e-6.")
    else:
        print("MISMATCH: the tape disagrees with finite differences.")

    # The same machinery behind a single op: d/dx of tanh(x) at a point.
    from bweda import autodiff as ad

    x = ad.Tensor(np.array([[0.3, -1.2]]), requires_grad=True)
    y = ad.tsum(ad.tanh(x))
    backward(y)
    exact = 1.0 - np.tanh(x.data) ** 2
    print(f"single-op sanity: grad tanh {x.grad.round(6).tolist()}"
          f" vs 1-tanh^2 {exact.round(6).tolist()}")


if __name__ == "__main__":
    main()
