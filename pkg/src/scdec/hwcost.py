"""Structural cost model of the fully parallel combinatorial network.

Counts are dimensionless gate-level structure, not calibrated delay, area or
power: partial-product bits of the two's complement multipliers, full-adder
equivalents of the carry-save reduction tree, carry-save stage depth on the
critical path, and a total single-bit operation count.  Input-layer nodes
multiply by 1-bit inputs, so their multipliers degenerate to AND gates;
output nodes need only the sign of their sum and carry no nonlinearity; the
quadratic transfer is costed as a ``(b-1) x (b-1)`` squaring multiplier.
"""

from __future__ import annotations

from dataclasses import dataclass

from .nn.config import NetworkConfig

KIND_INPUT = "input-layer"
KIND_HIDDEN = "hidden"
KIND_OUTPUT = "output"


@dataclass(frozen=True)
class CostReport:
    pp_bits: int
    fa_count: int
    tree_depth: int
    bitops: int
    layers: tuple = ()

    def __add__(self, other: "CostReport") -> "CostReport":
        return CostReport(
            self.pp_bits + other.pp_bits,
            self.fa_count + other.fa_count,
            self.tree_depth + other.tree_depth,
            self.bitops + other.bitops,
        )

    def scaled(self, n: int) -> "CostReport":
        """Cost of ``n`` identical parallel nodes (depth does not add up)."""
        return CostReport(self.pp_bits * n, self.fa_count * n,
                          self.tree_depth, self.bitops * n)

    def to_dict(self) -> dict:
        out = {"pp_bits": self.pp_bits, "fa_count": self.fa_count,
               "tree_depth": self.tree_depth, "bitops": self.bitops}
        if self.layers:
            out["layers"] = [dict(name=n, **r.to_dict()) for n, r in self.layers]
        return out


def csa_stages(terms: int) -> int:
    """Carry-save stages to reduce ``terms`` addends to two.

    Each stage maps groups of 3 rows to 2 (the ceil(log_3/2) recurrence);
    two or fewer rows need no stage.
    """
    if terms < 1:
        raise ValueError("term count must be positive")
    stages = 0
    while terms > 2:
        terms = 2 * (terms // 3) + terms % 3
        stages += 1
    return stages


def _tree_cost(rows: int, acc_width: int):
    """(fa_count, depth) of a carry-save tree over ``rows`` partial rows.

    Every 3:2 compression removes one row at the cost of one row of full
    adders, so reducing to two rows takes ``rows - 2`` full-adder rows of the
    accumulator width.
    """
    return max(rows - 2, 0) * acc_width, csa_stages(rows)


def node_cost(m: int, b: int, fn: str, kind: str) -> CostReport:
    """Structural cost of one ``m``-input node at ``b`` data bits."""
    if m < 1 or b < 1:
        raise ValueError("node needs m >= 1 inputs and b >= 1 bits")
    if kind not in (KIND_INPUT, KIND_HIDDEN, KIND_OUTPUT):
        raise ValueError(f"unknown node kind {kind!r}")
    if fn == "tanh" and kind != KIND_OUTPUT:
        raise ValueError("no hardware model for the tanh transfer")

    acc_width = 2 * b + max(m - 1, 1).bit_length()
    if kind == KIND_INPUT:
        # 1-bit inputs: multiplier rows collapse to ANDs of the b-bit weight
        pp = m * b
        rows = m
    else:
        pp = m * b * b
        rows = m * b
    fa, depth = _tree_cost(rows, acc_width)
    bitops = pp + 2 * fa + 2 * acc_width  # +carry-propagate of the final two rows

    if kind != KIND_OUTPUT:
        if fn == "sqnl":
            sq = max(b - 1, 1)
            pp_sq = sq * sq
            fa_sq, depth_sq = _tree_cost(sq, 2 * sq)
            pp += pp_sq
            fa += fa_sq
            depth += depth_sq + 1  # squaring tree plus the shift-add/sub stage
            bitops += pp_sq + 2 * fa_sq + 2 * b
        elif fn == "relu":
            depth += 1  # sign mux
            bitops += b

    return CostReport(pp, fa, depth, bitops)


def network_cost(cfg: NetworkConfig) -> CostReport:
    """Whole-network totals with a per-layer breakdown.

    Totals are exact sums of the node reports; the network tree depth is the
    critical path, i.e. the sum of the per-layer depths.
    """
    b = cfg.quant.bits if cfg.quant is not None else 9
    layers = (
        ("hidden1", node_cost(cfg.n_in, b, cfg.transfer, KIND_INPUT).scaled(cfg.n1)),
        ("hidden2", node_cost(cfg.n1, b, cfg.transfer, KIND_HIDDEN).scaled(cfg.n2)),
        ("output", node_cost(cfg.n2, b, cfg.transfer, KIND_OUTPUT).scaled(2)),
    )
    total = layers[0][1] + layers[1][1] + layers[2][1]
    return CostReport(total.pp_bits, total.fa_count,
                      sum(r.tree_depth for _, r in layers), total.bitops, layers)


def optimal_distance_report(entries, budgets, eps_grid):
    """Best code distance per cost budget and physical error rate.

    ``entries`` are ``(distance, cost, fit)`` triples, one per evaluated
    decoder configuration, with ``fit`` the fitted error-rate model.  For
    each budget, only configurations with ``cost <= budget`` compete; the
    winner at each physical rate is the one with the lowest modelled
    logical rate.  Returns rows ``(budget, eps_p, distance, eps_l)``;
    budgets with no affordable configuration yield no rows.
    """
    from .eval import model_eps_l

    rows = []
    for budget in budgets:
        affordable = [(d, fit) for d, cost, fit in entries if cost <= budget]
        for eps in eps_grid:
            best = None
            for d, fit in affordable:
                el = float(model_eps_l(fit, eps))
                if best is None or el < best[1]:
                    best = (d, el)
            if best is not None:
                rows.append((budget, float(eps), best[0], best[1]))
    return rows


def pareto_front(points):
    """Non-dominated subset of ``(cost, performance)`` pairs.

    A point is dominated when another has cost <= and performance >= with at
    least one strict inequality; input order is preserved in the output and
    exact duplicates survive together.
    """
    pts = list(points)
    if not pts:
        raise ValueError("need at least one point")
    keep = []
    for i, (ci, pi) in enumerate(pts):
        dominated = any(
            (cj <= ci and pj >= pi) and (cj < ci or pj > pi)
            for j, (cj, pj) in enumerate(pts) if j != i
        )
        if not dominated:
            keep.append((ci, pi))
    return keep
