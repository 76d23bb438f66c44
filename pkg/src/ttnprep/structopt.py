"""Structural optimization of tree tensor networks.

A local reconnection contracts the two degree-3 tensors adjacent to a
bond into a 4-leg blob, splits the blob along each of the three leg
pairings, and keeps the pairing with the least entanglement entropy
across the new bond (entropy measured after truncating to the working
rank and renormalizing). Ties go to the incumbent pairing. Sweeping
reconnections over all bonds performs nearest-neighbor-interchange moves
on the underlying leaf-labeled tree, so repeated sweeps can reach any
tree topology on the same leaves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import svd

from .errors import ParameterError
from .ttn import Edge, TreeTensorNetwork

PAIRING_NAMES = ("ab|cd", "ac|bd", "ad|bc")
_PERMS = ((0, 1, 2, 3), (0, 2, 1, 3), (0, 3, 1, 2))
TIE_TOL = 1e-10


@dataclass(frozen=True)
class ReconnectionChoice:
    """Outcome of one local reconnection attempt."""

    edge: int
    entropies: tuple[float, float, float]
    chosen: int
    accepted: bool
    step_fidelity: float
    pairings: tuple[str, str, str] = PAIRING_NAMES

    def __post_init__(self):
        if self.entropies[self.chosen] > min(self.entropies) + 1e-9:
            raise ParameterError("chosen pairing does not minimize entropy")


def _pairing_entropy(s: np.ndarray, chi: int) -> float:
    s2 = s[:chi] ** 2
    total = s2.sum()
    if total <= 0.0:
        return 0.0
    p = s2[s2 > 0] / total
    return float(-(p * np.log(p)).sum())


def local_reconnect(net: TreeTensorNetwork, e: int, chi: int,
                    tie_tol: float = TIE_TOL) -> ReconnectionChoice | None:
    """Try the three pairings of the 4 outward legs around bond e.

    Returns None (and changes nothing) unless both endpoints have degree
    3 and the center sits on one of them. On a change of pairing, or when
    the incumbent bond exceeds chi, the blob is re-split with rank at
    most chi, the kept weight renormalized, the center left on the far
    endpoint, and any discarded mass recorded in the ledger.
    """
    ed = net.edges[e]
    if ed.is_phys:
        raise ParameterError("reconnection needs a bond edge")
    u, v = ed.nodes
    if net.center not in (u, v):
        raise ParameterError("center must sit on an endpoint of the bond")
    legs_u = [x for x in net.axes[u] if x != e]
    legs_v = [x for x in net.axes[v] if x != e]
    if len(legs_u) != 2 or len(legs_v) != 2:
        return None

    t = np.tensordot(net.tensors[u], net.tensors[v],
                     axes=(net.axes[u].index(e), net.axes[v].index(e)))
    # axes now (a, b, c, d) = u's outward legs then v's
    entropies = []
    for perm in _PERMS:
        tp = np.transpose(t, perm)
        mat = tp.reshape(tp.shape[0] * tp.shape[1], -1)
        s = svd(mat, compute_uv=False)
        entropies.append(_pairing_entropy(s, chi))
    chosen = int(np.argmin(entropies))
    if entropies[0] <= entropies[chosen] + tie_tol:
        chosen = 0
    accepted = chosen != 0
    if not accepted and net.edge_dim(e) <= chi:
        return ReconnectionChoice(e, tuple(entropies), chosen, False, 1.0)

    perm = _PERMS[chosen]
    tp = np.transpose(t, perm)
    d0, d1, d2, d3 = tp.shape
    uu, s, vh = svd(tp.reshape(d0 * d1, d2 * d3), full_matrices=False)
    positive = max(1, int((s > 1e-14 * s[0]).sum()))
    r = min(chi, positive)
    s2 = s * s
    f = float(s2[:r].sum() / s2.sum())
    skeep = s[:r] / math.sqrt(float(s2[:r].sum()))

    legs = legs_u + legs_v
    new_u = [legs[perm[0]], legs[perm[1]]]
    new_v = [legs[perm[2]], legs[perm[3]]]
    net.tensors[u] = uu[:, :r].reshape(d0, d1, r)
    net.tensors[v] = np.transpose(
        (skeep[:, None] * vh[:r]).reshape(r, d2, d3), (1, 2, 0))
    net.axes[u] = new_u + [e]
    net.axes[v] = new_v + [e]
    for leg in new_u:
        _reattach(net, leg, u, (u, v))
    for leg in new_v:
        _reattach(net, leg, v, (u, v))
    net.center = v
    if f < 1.0 - 1e-15:
        net.ledger.record(e, f)
    return ReconnectionChoice(e, tuple(entropies), chosen, accepted, f)


def _reattach(net: TreeTensorNetwork, e: int, node: int,
              pair: tuple[int, int]) -> None:
    """Point leg e at `node`; its far endpoint (outside the reconnected
    pair) is preserved."""
    ed = net.edges[e]
    if ed.is_phys:
        net.edges[e] = Edge((node,), ed.label)
        return
    a, b = ed.nodes
    other = a if a not in pair else b
    net.edges[e] = Edge((node, other))


def optimize_structure(net: TreeTensorNetwork, chi: int,
                       max_sweeps: int = 6, tie_tol: float = TIE_TOL,
                       ) -> tuple[TreeTensorNetwork, dict]:
    """Sweep local reconnections over all bonds until a sweep accepts no
    change (or max_sweeps). The net is modified in place and returned
    with its report: per-sweep counts and every reconnection choice."""
    if max_sweeps < 1:
        raise ParameterError("max_sweeps must be >= 1")
    if net.center is None:
        net.canonicalize(next(iter(net.tensors)))
    bond_ids = sorted(e for e, ed in net.edges.items() if not ed.is_phys)
    sweeps = []
    choices: list[ReconnectionChoice] = []
    for sweep in range(max_sweeps):
        accepted = 0
        skipped = 0
        for e in bond_ids:
            u, _ = net.edges[e].nodes
            net.move_center(u)
            rc = local_reconnect(net, e, chi, tie_tol)
            if rc is None:
                skipped += 1
                continue
            choices.append(rc)
            if rc.accepted:
                accepted += 1
        sweeps.append({"sweep": sweep, "attempts": len(bond_ids) - skipped,
                       "skipped": skipped, "accepted": accepted})
        if accepted == 0:
            break
    net.validate()
    report = {"sweeps": sweeps, "accepted_total":
              sum(s["accepted"] for s in sweeps), "choices": choices}
    return net, report
