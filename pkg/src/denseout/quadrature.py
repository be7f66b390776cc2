"""Clenshaw-Curtis quadrature, single-segment and composite.

The single-segment rule on [-1, 1] uses the Chebyshev points
``cos(k*pi/M)`` and the classical cosine-sum weight formula, evaluated by
direct summation (desk scale makes an FFT pointless and the direct form is
easy to audit).  The composite rule splits [0, T] into unit-ish segments,
maps the single-segment rule onto each, and merges the shared endpoint
nodes so every node appears once.

All weights are strictly positive, the weights of a composite rule sum to
T, and the per-segment squared-weight sum obeys the 36(M+1)/M^2 bound that
the shot-count analysis leans on.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

MAX_NODES = 512

__all__ = [
    "QuadratureRule",
    "cc_single",
    "composite",
    "composite_with_points",
    "apply_rule",
    "weight_sq_norm",
    "export_csv",
]


@dataclass(frozen=True)
class QuadratureRule:
    """Composite quadrature rule over [0, T] with per-segment structure."""

    nodes: np.ndarray          # ascending, nodes[0] == 0, nodes[-1] == T
    weights: np.ndarray        # strictly positive, sums to T
    n_t: int                   # total node count after endpoint merging
    segments: int              # number of equal-length segments I
    points_per_segment: int    # even M; each segment carries M+1 Chebyshev points
    segment_length: float      # Delta t = T / I

    @property
    def horizon(self) -> float:
        return float(self.nodes[-1])


def cc_single(M: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the (M+1)-point Clenshaw-Curtis rule on [-1, 1].

    Nodes are ``cos(k*pi/M)`` for k = 0..M (descending).  Weights come from
    the direct double sum

        w_k = ((2 - d_{k,0} - d_{k,M}) / M)
              * sum_{l=0}^{M/2} (2 - d_{l,0} - d_{l,M/2}) * cos(2*l*k*pi/M) / (1 - 4*l^2)

    which integrates every polynomial of degree <= M exactly; the weights
    sum to 2 and are strictly positive for every even M.
    """
    if M < 2 or M % 2 != 0:
        raise ValueError(f"M must be a positive even integer >= 2, got {M}")
    k = np.arange(M + 1)
    nodes = np.cos(k * np.pi / M)
    l = np.arange(M // 2 + 1)
    cl = 2.0 - (l == 0) - (l == M // 2)
    # T_{2l}(cos(k pi / M)) = cos(2 l k pi / M)
    cheb = np.cos(2.0 * np.outer(l, k) * np.pi / M)
    inner = (cl / (1.0 - 4.0 * l**2)) @ cheb
    ck = 2.0 - (k == 0) - (k == M)
    weights = (ck / M) * inner
    return nodes, weights


def composite(T: float, eps: float, c: float = 1.0) -> QuadratureRule:
    """Composite Clenshaw-Curtis rule over [0, T] resolving tolerance eps.

    [0, T] is split into I = ceil(T) segments of length Delta t = T/I <= 1,
    each carrying M + 1 points with M = 2 * ceil(c * log2(1/eps)).  Shared
    segment endpoints are merged (weights summed), so n_t = I*M + 1.
    """
    if T <= 0:
        raise ValueError(f"horizon T must be positive, got {T}")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    M = 2 * max(1, math.ceil(c * math.log2(1.0 / eps)))
    segments = math.ceil(T)
    return composite_with_points(T, M, segments=segments)


def composite_with_points(T: float, M: int, segments: int | None = None) -> QuadratureRule:
    """Composite rule with an explicitly chosen per-segment point count."""
    if T <= 0:
        raise ValueError(f"horizon T must be positive, got {T}")
    segments = math.ceil(T) if segments is None else segments
    if segments * M + 1 > MAX_NODES:
        raise ValueError(
            f"rule would need {segments * M + 1} nodes; the desk-scale cap "
            f"is {MAX_NODES} (coarsen eps or shorten the horizon)"
        )
    dt = T / segments
    x, w = cc_single(M)
    # ascending within each segment
    x = x[::-1]
    w = w[::-1]
    nodes: list[float] = []
    weights: list[float] = []
    for i in range(segments):
        left = i * dt
        seg_nodes = left + (x + 1.0) * (dt / 2.0)
        seg_weights = w * (dt / 2.0)
        if i == 0:
            nodes.extend(seg_nodes)
            weights.extend(seg_weights)
        else:
            # shared endpoint: fold its weight into the node already present
            weights[-1] += seg_weights[0]
            nodes.extend(seg_nodes[1:])
            weights.extend(seg_weights[1:])
    nodes_arr = np.asarray(nodes)
    nodes_arr[-1] = T  # guard against roundoff at the right endpoint
    return QuadratureRule(
        nodes=nodes_arr,
        weights=np.asarray(weights),
        n_t=len(nodes),
        segments=segments,
        points_per_segment=M,
        segment_length=dt,
    )


def apply_rule(rule: QuadratureRule, samples: np.ndarray) -> float:
    """Weighted sum sum_k w_k f_k for samples taken at the rule's nodes."""
    samples = np.asarray(samples)
    if samples.shape != rule.weights.shape:
        raise ValueError(
            f"expected {rule.n_t} samples, got {samples.shape[0] if samples.ndim else 0}"
        )
    return float(rule.weights @ samples)


def weight_sq_norm(rule: QuadratureRule) -> float:
    return float(np.sum(rule.weights**2))


def export_csv(rule: QuadratureRule, path: str) -> None:
    """Dump (node, weight) rows for debugging."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node", "weight"])
        for t, w in zip(rule.nodes, rule.weights):
            writer.writerow([repr(float(t)), repr(float(w))])
