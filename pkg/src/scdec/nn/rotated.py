"""Four-fold rotational weight sharing.

A rotated net carries a quarter-size independent parameter set that is copied
into four hidden-node groups, one per lattice rotation.  The sharing scheme
makes the network exactly equivariant: rotating the input syndrome by 90
degrees swaps the X and Z outputs.

With ``pi = rot_anc`` (ancilla permutation of one rotation) and group index
``g`` in 0..3:

    w1[g*m1 + j, i]           = w1_base[j, pi^-g(i)]
    w2[g*m2 + j, g'*m1 + j']  = w2_base[j, ((g' - g) mod 4)*m1 + j']
    wout[o, g*m2 + j]         = wout_base[sigma^g(o), j]

where sigma swaps the two outputs; biases are copied per group and the
output bias is a single shared scalar.
"""

from __future__ import annotations

import numpy as np

from ..lattice import Layout, build_layout
from .config import BaseWeights, NetworkConfig, Weights


def _anc_perms(layout: Layout):
    """(perm^g, perm^-g) index arrays for g = 0..3."""
    fwd = [np.array(layout.rot_anc_power(g), dtype=np.intp) for g in range(4)]
    inv = [np.array(layout.rot_anc_power((4 - g) % 4), dtype=np.intp) for g in range(4)]
    return fwd, inv


def expand_rotated(cfg: NetworkConfig, base: BaseWeights,
                   layout: Layout | None = None) -> Weights:
    """Expand quarter-size weights into the full shared parameter set."""
    if not cfg.rotated:
        raise ValueError("config is not rotated")
    base.validate(cfg)
    layout = layout or build_layout(cfg.d)
    m1 = cfg.n1 // 4
    _, inv = _anc_perms(layout)

    w1 = np.vstack([base.w1[:, inv[g]] for g in range(4)])
    b1 = np.tile(base.b1, 4)
    w2 = np.vstack([
        np.hstack([base.w2[:, ((gp - g) % 4) * m1:(((gp - g) % 4) + 1) * m1]
                   for gp in range(4)])
        for g in range(4)
    ])
    b2 = np.tile(base.b2, 4)
    wout = np.hstack([base.wout if g % 2 == 0 else base.wout[::-1] for g in range(4)])
    bout = np.full(2, base.bout[0], dtype=np.float64)
    return Weights(w1, b1, w2, b2, wout, bout)


def reduce_rotated_grads(cfg: NetworkConfig, grads: Weights,
                         layout: Layout | None = None) -> BaseWeights:
    """Pull full-parameter gradients back onto the shared base parameters.

    This is the exact transpose of :func:`expand_rotated`: each base entry
    accumulates the gradients of its four copies.
    """
    layout = layout or build_layout(cfg.d)
    m1, m2 = cfg.n1 // 4, cfg.n2 // 4
    fwd, _ = _anc_perms(layout)

    gw1 = np.zeros((m1, cfg.n_in))
    gb1 = np.zeros(m1)
    gw2 = np.zeros((m2, cfg.n1))
    gb2 = np.zeros(m2)
    gwout = np.zeros((2, m2))
    for g in range(4):
        gw1 += grads.w1[g * m1:(g + 1) * m1][:, fwd[g]]
        gb1 += grads.b1[g * m1:(g + 1) * m1]
        block2 = grads.w2[g * m2:(g + 1) * m2]
        for gp in range(4):
            rel = (gp - g) % 4
            gw2[:, rel * m1:(rel + 1) * m1] += block2[:, gp * m1:(gp + 1) * m1]
        gb2 += grads.b2[g * m2:(g + 1) * m2]
        blocko = grads.wout[:, g * m2:(g + 1) * m2]
        gwout += blocko if g % 2 == 0 else blocko[::-1]
    gbout = np.array([grads.bout.sum()])
    return BaseWeights(gw1, gb1, gw2, gb2, gwout, gbout)
