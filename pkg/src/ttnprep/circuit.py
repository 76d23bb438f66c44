"""Circuit synthesis from canonical tree tensor networks.

A canonical network maps directly onto a state-preparation circuit: the
center tensor becomes a preparation placement acting on fresh qubits and
every other tensor an isometry placement consuming the qubits that carry
its parent bond.  Bonds are padded to powers of two, with missing
isometry columns filled by Gram-Schmidt completion, and a placement with
p input and q output qubits is priced at 2**(p+q) CNOTs.  Depth is the
largest root-to-leaf cost sum.

The inverse discrete Fourier transform that turns frequency amplitudes
into grid amplitudes enters in one of two ways: absorbed into the
network as a chain of copy/phase tensors and recompressed, or appended
to the coefficient circuit as one symbolic placement per dimension.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Sequence

import numpy as np
import scipy.linalg

from .errors import (CircuitValidityError, ParameterError, ShapeError)
from .fourier import inverse_dft_embedding_matrix
from .ttn import Edge, TreeTensorNetwork

ISOMETRY_TOL = 1e-10


def _qubits_for(dim: int) -> int:
    # number of wires carrying an index of size dim, after padding
    return (dim - 1).bit_length()


# -- inverse-DFT network -----------------------------------------------------


@dataclass(frozen=True)
class QftTtn:
    """Inverse-DFT network for one dimension: a copy-tensor spine of bond
    dimension 2**m with one phase tensor per output qubit.

    phases[j] has shape (2**(j+1), 2) with entries exp(2j*pi*k*l/2**(j+1)),
    rows indexed by the wavenumber residue k mod 2**(j+1).  Contracted
    against a stored wavenumber index the network reproduces the columns
    of the inverse-DFT embedding matrix.
    """

    n: int
    m: int
    phases: tuple

    @property
    def copy_bond(self) -> int:
        return 1 << self.m

    def chain_tensors(self) -> list[np.ndarray]:
        """Tensors ready to graft onto a frequency leg, one per output
        qubit, emitted least-significant bit first.

        The spine bond after step t carries the wavenumber residue mod
        2**(n-t-1), so bond dimensions shrink from 2**m toward 1.
        """
        M = 1 << self.m
        ks = np.arange(M)
        ks = np.where(ks < M // 2, ks, ks - M) % (1 << self.n)
        vals = ks
        tensors = []
        for t in range(self.n):
            j = self.n - t - 1          # phase-tensor index at this step
            mod_out = 1 << j
            out_vals = np.unique(vals % mod_out)
            pos = {v: i for i, v in enumerate(out_vals)}
            a = self.phases[j]
            T = np.zeros((len(vals), 2, len(out_vals)), dtype=complex)
            for i, v in enumerate(vals):
                T[i, :, pos[v % mod_out]] = a[v % (mod_out * 2)] / np.sqrt(2)
            tensors.append(T)
            vals = out_vals
        tensors[-1] = tensors[-1][:, :, 0]
        return tensors

    def qubit_labels(self, dim_label: Hashable) -> list:
        # chain emission order is LSB first; qubit j carries weight 2**(n-1-j)
        return [(dim_label, j) for j in range(self.n - 1, -1, -1)]

    def matrix(self) -> np.ndarray:
        """Dense (2**n, 2**m) contraction: stored wavenumber -> grid bits."""
        ts = self.chain_tensors()
        acc = ts[0] if len(ts) > 1 else ts[0][:, :, None]
        for T in ts[1:-1]:
            acc = np.einsum("s...a,alb->s...lb", acc, T)
        if len(ts) > 1:
            acc = np.einsum("s...a,al->s...l", acc, ts[-1])
        else:
            acc = acc[:, :, 0]
        n = self.n
        # accumulated bit axes run LSB..MSB; flatten as a big-endian integer
        acc = acc.transpose([0] + list(range(n, 0, -1)))
        return acc.reshape(1 << self.m, 1 << n).T


def build_qft_ttn(n: int, m: int) -> QftTtn:
    if not 1 <= m <= n:
        raise ParameterError(f"need 1 <= m <= n, got m={m}, n={n}")
    phases = []
    for j in range(n):
        size = 1 << (j + 1)
        k = np.arange(size)[:, None]
        l = np.arange(2)[None, :]
        phases.append(np.exp(2j * np.pi * k * l / size))
    return QftTtn(n, m, tuple(phases))


def compose_and_compress(coeff_net: TreeTensorNetwork, qft: QftTtn,
                         chi: int, tol: float = 1e-12) -> TreeTensorNetwork:
    """Graft one inverse-DFT chain per dimension and recompress.

    chi caps the cross-dimension coefficient bonds; the qubit-level sweep
    never caps below the frequency-leg dimension 2**m, so the inverse-DFT
    stage itself is limited only by the rank tolerance.  All truncation
    fidelities are appended to the returned network's ledger.
    """
    net = coeff_net.copy()
    M = qft.copy_bond
    for lab, e in net.phys_edges().items():
        if net.edge_dim(e) != M:
            raise ShapeError(
                f"leg {lab!r} has dimension {net.edge_dim(e)}, expected {M}")
    root = min(net.tensors)
    net.canonicalize(root)
    net.truncate(chi=chi, tol=tol)
    for d in sorted(net.labels()):
        net.attach_chain(d, qft.chain_tensors(), qft.qubit_labels(d))
    net.canonicalize(root)
    net.truncate(chi=max(chi, M), tol=tol)
    return net


# -- frequency-leg splitting -------------------------------------------------


def qubitize(net: TreeTensorNetwork) -> TreeTensorNetwork:
    """Split every 2**m-dimensional physical leg into m qubit legs.

    Label d becomes labels (d, 0) .. (d, m-1), big-endian, on the same
    tensor; the network geometry and canonical center are unchanged.
    """
    work = net.copy()
    nxt = max(work.edges) + 1
    for lab, e in sorted(work.phys_edges().items()):
        u = work.edges[e].nodes[0]
        i = work.axes[u].index(e)
        M = work.tensors[u].shape[i]
        m = M.bit_length() - 1
        if M != (1 << m) or m < 1:
            raise ShapeError(f"leg {lab!r} dimension {M} is not a power of two")
        shape = work.tensors[u].shape
        work.tensors[u] = work.tensors[u].reshape(
            shape[:i] + (2,) * m + shape[i + 1:])
        del work.edges[e]
        ids = []
        for j in range(m):
            work.edges[nxt] = Edge((u,), (lab, j))
            ids.append(nxt)
            nxt += 1
        work.axes[u][i:i + 1] = ids
    work.validate()
    return work


# -- circuit data model ------------------------------------------------------


@dataclass(eq=False)
class Placement:
    """One isometry applied to `targets`: the first in_qubits wires hold
    the input index (big-endian), all targets hold the output index."""

    targets: tuple
    in_qubits: int
    matrix: np.ndarray
    kind: str = "isometry"          # "prep" | "isometry" | "qft"

    @property
    def out_qubits(self) -> int:
        return len(self.targets)

    @property
    def cnots(self) -> int:
        if self.kind == "qft":
            q = self.out_qubits
            return q * (q - 1) // 2
        return 1 << (self.in_qubits + self.out_qubits)

    @property
    def depth_cost(self) -> int:
        return self.out_qubits if self.kind == "qft" else self.cnots

    def validate(self) -> None:
        p, q = self.in_qubits, self.out_qubits
        if len(set(self.targets)) != q:
            raise CircuitValidityError(f"duplicate targets {self.targets}")
        if not 0 <= p <= q:
            raise CircuitValidityError(f"invalid input count {p} of {q}")
        if self.matrix.shape != (1 << q, 1 << p):
            raise CircuitValidityError(
                f"matrix shape {self.matrix.shape} does not match "
                f"{q} outputs, {p} inputs")
        g = self.matrix.conj().T @ self.matrix
        if np.max(np.abs(g - np.eye(1 << p))) > ISOMETRY_TOL:
            raise CircuitValidityError("placement matrix is not an isometry")


@dataclass
class CostReport:
    """CNOT and depth totals under the 2**(p+q) pricing rule.

    cnot_count covers preparation and isometry placements; inverse-DFT
    placements are priced separately in qft_cnots so comparisons can
    exclude the Fourier stage common to every method.
    """

    cnot_count: int
    depth: int
    qft_cnots: int = 0
    breakdown: list = field(default_factory=list)

    @property
    def total_cnots(self) -> int:
        return self.cnot_count + self.qft_cnots

    def to_dict(self) -> dict:
        return {"cnot_count": self.cnot_count, "depth": self.depth,
                "qft_cnots": self.qft_cnots, "breakdown": self.breakdown}

    @classmethod
    def from_dict(cls, d: dict) -> "CostReport":
        return cls(d["cnot_count"], d["depth"], d.get("qft_cnots", 0),
                   list(d.get("breakdown", [])))


@dataclass(eq=False)
class QuantumCircuit:
    qubits: int
    placements: list
    labels: tuple                   # labels[w] is carried by wire w at the end
    cost: CostReport

    def validate(self) -> None:
        for plc in self.placements:
            plc.validate()
            for t in plc.targets:
                if not 0 <= t < self.qubits:
                    raise CircuitValidityError(f"target {t} out of range")

    def to_dict(self) -> dict:
        pls = []
        for plc in self.placements:
            flat = [[float(z.real), float(z.imag)]
                    for z in plc.matrix.ravel()]
            pls.append({"targets": [int(t) for t in plc.targets],
                        "in_qubits": int(plc.in_qubits),
                        "kind": plc.kind, "matrix": flat})
        return {"qubits": int(self.qubits),
                "labels": [_wire_label_json(l) for l in self.labels],
                "placements": pls,
                "metrics": self.cost.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "QuantumCircuit":
        pls = []
        for pd in d["placements"]:
            q = len(pd["targets"])
            p = pd["in_qubits"]
            flat = np.array(pd["matrix"], dtype=float)
            mat = (flat[:, 0] + 1j * flat[:, 1]).reshape(1 << q, 1 << p)
            pls.append(Placement(tuple(pd["targets"]), p, mat,
                                 pd.get("kind", "isometry")))
        labels = tuple(_wire_label_from_json(l) for l in d["labels"])
        return cls(d["qubits"], pls, labels,
                   CostReport.from_dict(d["metrics"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path: str | Path) -> "QuantumCircuit":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _wire_label_json(label):
    if isinstance(label, tuple):
        return {"pair": [_wire_label_json(x) for x in label]}
    return label


def _wire_label_from_json(obj):
    if isinstance(obj, dict):
        return tuple(_wire_label_from_json(x) for x in obj["pair"])
    return obj


# -- synthesis ---------------------------------------------------------------


def _complete_isometry(mat: np.ndarray, valid: int) -> np.ndarray:
    """Fill columns valid.. with an orthonormal completion of the first
    `valid` columns, which must already be orthonormal."""
    rows, cols = mat.shape
    if valid == cols:
        return mat
    if valid == 0:
        out = np.zeros((rows, cols), dtype=complex)
        out[:cols, :] = np.eye(cols)
        return out
    q_full = scipy.linalg.qr(mat[:, :valid], mode="full")[0]
    out = mat.copy()
    out[:, valid:] = q_full[:, valid:cols]
    return out


def synthesize(net: TreeTensorNetwork) -> tuple[QuantumCircuit, CostReport]:
    """Emit the canonical network as an ordered list of placements.

    Wires are numbered so that wire w finally carries the w-th smallest
    physical label; the statevector of the simulated circuit then matches
    contract_to_vector on the same network.
    """
    work = net.copy()
    if work.center is None:
        work.canonicalize(min(work.tensors))
    work.normalize()
    for e, ed in work.edges.items():
        if ed.is_phys and work.edge_dim(e) != 2:
            raise ShapeError(
                f"physical leg {ed.label!r} has dimension "
                f"{work.edge_dim(e)}, expected a qubit")
    root = work.center
    order, parent_edge = work._bfs_order(root)
    children: dict[int, list[int]] = {u: [] for u in order}
    for u in order:
        pe = parent_edge[u]
        if pe is not None:
            children[work.edges[pe].other(u)].append(u)

    next_wire = 0
    bond_wires: dict[int, list[int]] = {}
    wire_label: dict[int, Hashable] = {}
    placements = []
    breakdown = []
    node_cost = {}
    for u in order:
        t = work.tensors[u]
        ax = work.axes[u]
        pe = parent_edge[u]
        if pe is None:
            p = 0
            in_wires: list[int] = []
            t2 = t[None, ...]
            out_edges = list(ax)
        else:
            pi = ax.index(pe)
            p = _qubits_for(t.shape[pi])
            in_wires = bond_wires[pe]
            t2 = np.moveaxis(t, pi, 0)
            out_edges = ax[:pi] + ax[pi + 1:]
        groups = [(e2, d, _qubits_for(d))
                  for e2, d in zip(out_edges, t2.shape[1:])]
        q = sum(b for _, _, b in groups)
        if p > q:
            raise ShapeError(f"node {u}: bond wider than its outputs")
        targets = list(in_wires)
        while len(targets) < q:
            targets.append(next_wire)
            next_wire += 1
        pos = 0
        for e2, d, b in groups:
            ws = targets[pos:pos + b]
            pos += b
            if work.edges[e2].is_phys:
                wire_label[ws[0]] = work.edges[e2].label
            else:
                bond_wires[e2] = ws
        pad = np.zeros([1 << p] + [1 << b for _, _, b in groups],
                       dtype=complex)
        pad[tuple(slice(0, s) for s in t2.shape)] = t2
        mat = pad.reshape(1 << p, -1).T
        mat = _complete_isometry(mat, t2.shape[0])
        kind = "prep" if pe is None else "isometry"
        placements.append(Placement(tuple(targets), p, mat, kind))
        node_cost[u] = 1 << (p + q)
        breakdown.append({"node": int(u), "p": int(p), "q": int(q),
                          "cnots": node_cost[u],
                          "targets": [int(w) for w in targets]})

    depth_below: dict[int, int] = {}
    for u in reversed(order):
        depth_below[u] = node_cost[u] + max(
            (depth_below[c] for c in children[u]), default=0)

    labs = sorted(wire_label.values())
    if len(labs) != next_wire:
        raise ShapeError("wire bookkeeping lost a physical leg")
    perm = {w: i for i, (_, w) in
            enumerate(sorted((lab, w) for w, lab in wire_label.items()))}
    placements = [Placement(tuple(perm[w] for w in plc.targets),
                            plc.in_qubits, plc.matrix, plc.kind)
                  for plc in placements]
    for row in breakdown:
        row["targets"] = [perm[w] for w in row["targets"]]
    cost = CostReport(sum(node_cost.values()), depth_below[root],
                      qft_cnots=0, breakdown=breakdown)
    circ = QuantumCircuit(len(labs), placements, tuple(labs), cost)
    circ.validate()
    return circ, cost


def with_inverse_dft(circ: QuantumCircuit, n: int) -> QuantumCircuit:
    """Append one symbolic inverse-DFT placement per dimension.

    Wires labeled (d, 0..m-1) are consumed and n-m fresh wires appended;
    the placement is priced at n(n-1)/2 CNOTs and depth n, kept apart
    from the coefficient-circuit totals.
    """
    by_dim: dict[Hashable, dict[int, int]] = {}
    for w, lab in enumerate(circ.labels):
        if not (isinstance(lab, tuple) and len(lab) == 2):
            raise ShapeError(f"wire label {lab!r} is not (dimension, bit)")
        by_dim.setdefault(lab[0], {})[lab[1]] = w
    placements = list(circ.placements)
    breakdown = list(circ.cost.breakdown)
    wire_label = dict(enumerate(circ.labels))
    next_wire = circ.qubits
    qft_cnots = 0
    for d in sorted(by_dim):
        js = by_dim[d]
        m = len(js)
        if sorted(js) != list(range(m)):
            raise ShapeError(f"dimension {d!r} wires are not bits 0..{m - 1}")
        if m > n:
            raise ParameterError(f"dimension {d!r} already has {m} > n={n} bits")
        targets = [js[j] for j in range(m)]
        targets += list(range(next_wire, next_wire + n - m))
        next_wire += n - m
        plc = Placement(tuple(targets), m,
                        inverse_dft_embedding_matrix(n, m), kind="qft")
        placements.append(plc)
        qft_cnots += plc.cnots
        breakdown.append({"kind": "qft", "p": int(m), "q": int(n),
                          "cnots": plc.cnots,
                          "targets": [int(w) for w in targets]})
        for j, w in enumerate(targets):
            wire_label[w] = (d, j)
    labs = sorted(wire_label.values())
    perm = {w: i for i, (_, w) in
            enumerate(sorted((lab, w) for w, lab in wire_label.items()))}
    placements = [Placement(tuple(perm[w] for w in plc.targets),
                            plc.in_qubits, plc.matrix, plc.kind)
                  for plc in placements]
    for row in breakdown:
        row["targets"] = [perm[w] for w in row["targets"]]
    cost = CostReport(circ.cost.cnot_count, circ.cost.depth + n,
                      circ.cost.qft_cnots + qft_cnots, breakdown)
    out = QuantumCircuit(len(labs), placements, tuple(labs), cost)
    out.validate()
    return out


def fsl_baseline_cost(D: int, n: int, m: int) -> CostReport:
    """Brute-force reference: prepare all 2**(m*D) coefficient amplitudes
    in one placement, then one inverse DFT per dimension."""
    if min(D, n, m) < 1:
        raise ParameterError("D, n, m must be positive")
    prep = 1 << (m * D)
    qft = (m * D) * (m * D - 1) // 2
    breakdown = [{"kind": "prep", "p": 0, "q": m * D, "cnots": prep},
                 {"kind": "qft", "wires": m * D, "cnots": qft}]
    return CostReport(prep, prep + n, qft_cnots=qft, breakdown=breakdown)
