"""Tensor cross interpolation on tree topologies.

The interpolation is held as pivot PAIRS per bond: for bond e = (u, v),
J[(e, u)] lists multi-indices of the labels on u's side and J[(e, v)]
equally many on v's side, so every pivot block P_e = f(J_u x J_v) is
square. Node tensors are T_u = f over the product of FAR-side pivots of
each leg, and the network is T with P_e^{-1} inserted on every bond,
which reproduces f exactly on all pivot crosses.

Pivots start at the all-zero multi-index and are refined by alternating
half-sweeps: each bond re-selects its near-side rows by maxvol over the
candidate product of the adjacent far-side pivots, and grows its rank by
residual-guided sampling of far-side extension columns. Ranks only grow
while the sampled interpolation residual stays above tolerance, and the
pivot state with the best probe residual is the one returned, so the
reported per-sweep residual history is nonincreasing.

Evaluation cost per bond visit is O(M chi^2) black-box entries (M = leg
dimension), all deduplicated through the evaluation cache.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg
from scipy.linalg import lu_factor, solve

from .errors import (ParameterError, PivotDegeneracyError, RankError)
from .topology import TreeTopology
from .ttn import TreeTensorNetwork

MAXVOL_DELTA = 1e-2


@dataclass
class BlackBoxTensor:
    """Pointwise tensor access with caching and an evaluation counter.

    fn maps an (batch, L) int index array to a (batch,) value array;
    dims are the axis sizes in label-sorted order. evals counts unique
    indices ever evaluated, max_abs tracks the largest magnitude seen.
    """

    dims: tuple[int, ...]
    fn: Callable[[np.ndarray], np.ndarray]
    evals: int = 0
    max_abs: float = 0.0
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        if any(d < 1 for d in self.dims):
            raise ParameterError("axis dimensions must be >= 1")
        self._flat_ok = math.prod(self.dims) < (1 << 62)

    def _keys(self, idx: np.ndarray) -> np.ndarray:
        if self._flat_ok:
            return np.ravel_multi_index(idx.T, self.dims)
        return np.array([row.tobytes() for row in idx])

    def __call__(self, idx: np.ndarray) -> np.ndarray:
        idx = np.atleast_2d(np.asarray(idx, dtype=np.int64))
        if idx.shape[1] != len(self.dims):
            raise ParameterError("index width does not match arity")
        if np.any(idx < 0) or np.any(idx >= np.array(self.dims)):
            raise ParameterError("index out of range")
        keys = self._keys(idx)
        uniq, inverse = np.unique(keys, return_inverse=True)
        vals = np.empty(len(uniq), dtype=complex)
        missing = []
        for i, k in enumerate(uniq):
            v = self._cache.get(k)
            if v is None:
                missing.append(i)
            else:
                vals[i] = v
        if missing:
            # recover one representative row per missing unique key
            first_pos = np.zeros(len(uniq), dtype=int)
            order = np.argsort(inverse, kind="stable")
            seen_u, first_idx = np.unique(inverse[order], return_index=True)
            first_pos[seen_u] = order[first_idx]
            miss_rows = idx[first_pos[missing]]
            new_vals = np.asarray(self.fn(miss_rows), dtype=complex)
            if new_vals.shape != (len(missing),):
                raise ParameterError("black box returned wrong batch shape")
            for i, k_i in enumerate(missing):
                self._cache[uniq[k_i]] = new_vals[i]
                vals[k_i] = new_vals[i]
            self.evals += len(missing)
            if new_vals.size:
                self.max_abs = max(self.max_abs,
                                   float(np.abs(new_vals).max()))
        return vals[inverse]

    @classmethod
    def from_fourier(cls, evaluator) -> "BlackBoxTensor":
        grid = evaluator.grid
        return cls(dims=(grid.M,) * grid.dim,
                   fn=lambda idx: evaluator.eval_indices(idx))


def maxvol(a: np.ndarray, delta: float = MAXVOL_DELTA,
           max_iter: int = 200) -> np.ndarray:
    """Rows of a (tall, full-column-rank) matrix forming a dominant
    square submatrix: all entries of a @ a[rows]^{-1} have magnitude
    <= 1 + delta. Partial-pivot LU initialization, then greedy swaps."""
    a = np.asarray(a)
    r, c = a.shape
    if r < c:
        raise ParameterError("maxvol needs at least as many rows as columns")
    if c == 0:
        return np.array([], dtype=int)
    with warnings.catch_warnings():
        # singular candidates are caught by the rank check below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        _, piv = lu_factor(a.copy())
    perm = np.arange(r)
    for i, p in enumerate(piv):
        perm[i], perm[p] = perm[p], perm[i]
    sel = perm[:c].copy()
    sub = a[sel]
    sv = np.linalg.svd(sub, compute_uv=False)
    if sv[-1] <= 1e-13 * max(sv[0], 1e-300):
        raise RankError("candidate matrix is rank deficient")
    coef = solve(sub.T, a.T).T
    for _ in range(max_iter):
        i, j = np.unravel_index(np.argmax(np.abs(coef)), coef.shape)
        if abs(coef[i, j]) <= 1.0 + delta:
            break
        ej = np.zeros(c)
        ej[j] = 1.0
        coef = coef - np.outer(coef[:, j], coef[i, :] - ej) / coef[i, j]
        sel[j] = i
    return sel


def _probe_indices(rng: np.random.Generator, dims: tuple[int, ...],
                   count: int) -> np.ndarray:
    """Random full indices, mixing uniform draws with draws biased toward
    low indices (wrapping negatives), where seeded pivots live."""
    L = len(dims)
    out = np.empty((count, L), dtype=np.int64)
    for i, d in enumerate(dims):
        uniform = rng.integers(0, d, size=count)
        offs = rng.geometric(0.4, size=count) - 1
        signs = rng.choice((1, -1), size=count)
        biased = (offs * signs) % d
        pick = rng.random(count) < 0.5
        out[:, i] = np.where(pick, uniform, biased)
    return out


class _PivotState:
    """Per-bond pivot pairs plus the bookkeeping to assemble tensors."""

    def __init__(self, topo: TreeTopology, dims: dict):
        self.topo = topo
        self.labels = topo.labels()
        self.col = {lab: i for i, lab in enumerate(self.labels)}
        self.dims = dims
        self.adj = topo.adjacency()
        # legs_of[u]: axis descriptors, bonds first (topo order), phys last
        leaves_at: dict[int, list] = {}
        for u, lab, _ in topo.leaves:
            leaves_at.setdefault(u, []).append(lab)
        self.legs_of = {}
        for u in sorted(topo.nodes()):
            legs = [("bond", b) for b in topo.bonds if u in b]
            legs += [("phys", lab) for lab in sorted(leaves_at.get(u, []))]
            self.legs_of[u] = legs
        # side columns per (bond, endpoint): labels on that endpoint's side
        self.side_cols = {}
        for bond, left, right in topo.bipartitions():
            u, v = bond
            self.side_cols[(bond, u)] = np.array(
                [self.col[lab] for lab in sorted(left)], dtype=int)
            self.side_cols[(bond, v)] = np.array(
                [self.col[lab] for lab in sorted(right)], dtype=int)
        # all-zero seed pivot on every side
        self.pivots = {key: np.zeros((1, len(cols)), dtype=np.int64)
                       for key, cols in self.side_cols.items()}

    def rank(self, bond) -> int:
        return len(self.pivots[(bond, bond[0])])

    def far_parts(self, u: int, skip=None):
        """(columns, pivot rows) per leg of u except `skip`, in axis order.
        For a bond leg the far side is the other endpoint's side."""
        parts = []
        for kind, key in self.legs_of[u]:
            if (kind, key) == skip:
                continue
            if kind == "bond":
                v = key[1] if key[0] == u else key[0]
                parts.append((self.side_cols[(key, v)],
                              self.pivots[(key, v)]))
            else:
                d = self.dims[key]
                parts.append((np.array([self.col[key]]),
                              np.arange(d, dtype=np.int64)[:, None]))
        return parts

    def snapshot(self) -> dict:
        return {k: v.copy() for k, v in self.pivots.items()}

    def restore(self, snap: dict) -> None:
        self.pivots = {k: v.copy() for k, v in snap.items()}


def _product_rows(parts, L: int) -> tuple[np.ndarray, tuple[int, ...]]:
    """Cartesian product of pivot blocks into full (rows, L) index arrays;
    row-major over the parts, so a reshape to the part sizes is aligned."""
    sizes = tuple(len(p) for _, p in parts)
    total = int(np.prod(sizes)) if sizes else 1
    rows = np.zeros((total, L), dtype=np.int64)
    if sizes:
        grids = np.meshgrid(*[np.arange(s) for s in sizes], indexing="ij")
        for (cols, piv), g in zip(parts, grids):
            rows[:, cols] = piv[g.ravel()]
    return rows, sizes


def _merge(rows_a: np.ndarray, cols_a, rows_b: np.ndarray, cols_b,
           L: int) -> np.ndarray:
    """All pairings of rows_a (on cols_a) with rows_b (on cols_b)."""
    na, nb = len(rows_a), len(rows_b)
    out = np.zeros((na * nb, L), dtype=np.int64)
    out[:, cols_a] = np.repeat(rows_a, nb, axis=0)
    out[:, cols_b] = np.tile(rows_b, (na, 1))
    return out


def tci_build(f: BlackBoxTensor, topo: TreeTopology, chi: int,
              sweeps: int = 8, tol: float = 1e-10, seed: int = 0,
              kick: int = 4, probes: int = 1000,
              ) -> tuple[TreeTensorNetwork, dict]:
    """Interpolate the black box on the given tree topology with bond
    ranks grown adaptively up to chi.

    Returns the assembled network (exact on all pivot crosses, not yet
    canonical) and an info dict with the unique-evaluation count, the
    per-sweep best probe residuals, and the final pivots.
    """
    if chi < 1:
        raise ParameterError("chi must be >= 1")
    if sweeps < 1:
        raise ParameterError("sweeps must be >= 1")
    labels = topo.labels()
    dims_map = topo.leaf_dims()
    if tuple(dims_map[lab] for lab in labels) != tuple(f.dims):
        raise ParameterError("topology leaf dims do not match the black box")
    L = len(labels)
    rng = np.random.default_rng(seed)

    if not topo.bonds:
        # single-tensor topology: evaluate everything
        state = _PivotState(topo, dims_map)
        net = _assemble(f, state)
        return net, {"evals": f.evals, "residuals": [0.0],
                     "converged": True, "sweeps_run": 0,
                     "pivots": state.snapshot()}

    state = _PivotState(topo, dims_map)
    probe_set = _probe_indices(rng, f.dims, probes)
    probe_vals = f(probe_set)

    root = sorted(topo.nodes())[0]
    dfs: list[tuple[int, int, tuple[int, int]]] = []
    stack = [root]
    seen = {root}
    while stack:
        u = stack.pop()
        for v in state.adj[u]:
            if v in seen:
                continue
            seen.add(v)
            bond = (u, v) if (u, v) in topo.bonds else (v, u)
            dfs.append((u, v, bond))
            stack.append(v)

    residual_hist: list[float] = []
    best = (math.inf, state.snapshot())
    converged = False
    sweeps_run = 0
    for sweep in range(sweeps):
        sweeps_run = sweep + 1
        for u, v, bond in dfs:  # forward: refresh the root-facing side
            _update_side(f, state, bond, u, v, chi, tol, kick, rng)
        for u, v, bond in reversed(dfs):  # backward: refresh the far side
            _update_side(f, state, bond, v, u, chi, tol, kick, rng)
        net = _assemble(f, state)
        resid = float(np.max(np.abs(net.evaluate(probe_set) - probe_vals)))
        if resid < best[0]:
            best = (resid, state.snapshot())
        residual_hist.append(best[0])
        scale = max(f.max_abs, 1e-300)
        if best[0] <= tol * scale:
            converged = True
            break
    state.restore(best[1])
    net = _assemble(f, state)
    info = {"evals": f.evals, "residuals": residual_hist,
            "converged": converged, "sweeps_run": sweeps_run,
            "pivots": state.snapshot(),
            "bond_dims": {b: state.rank(b) for b in topo.bonds}}
    return net, info


def _update_side(f: BlackBoxTensor, state: _PivotState, bond, u: int, v: int,
                 chi: int, tol: float, kick: int,
                 rng: np.random.Generator) -> None:
    """Re-select the u-side pivots of `bond` by maxvol over the candidate
    product of u's other legs, then try residual-guided rank growth."""
    L = len(state.labels)
    cols_u = state.side_cols[(bond, u)]
    cols_v = state.side_cols[(bond, v)]
    parts = state.far_parts(u, skip=("bond", bond))
    cand, _ = _product_rows(parts, L)
    cand_u = cand[:, cols_u]  # u-side portion of each candidate
    piv_v = state.pivots[(bond, v)]
    r = len(piv_v)

    full = _merge(cand_u, cols_u, piv_v, cols_v, L)
    b = f(full).reshape(len(cand_u), r)

    # rank reveal: shrink the pair if the candidate block cannot support r
    sv = np.linalg.svd(b, compute_uv=False) if min(b.shape) else np.array([])
    scale = max(f.max_abs, 1e-300)
    rank = int((sv > max(1e-14 * scale, 1e-300)).sum())
    if rank == 0:
        # degenerate block: keep a single best-magnitude pivot
        i = int(np.argmax(np.abs(b[:, 0]))) if b.size else 0
        state.pivots[(bond, u)] = cand_u[i:i + 1]
        state.pivots[(bond, v)] = piv_v[:1]
        return
    if rank < r:
        uu, ss, vh = np.linalg.svd(b, full_matrices=False)
        rows = maxvol(uu[:, :rank])
        colsel = maxvol(vh[:rank].conj().T)
        state.pivots[(bond, u)] = cand_u[rows]
        state.pivots[(bond, v)] = piv_v[colsel]
        piv_v = state.pivots[(bond, v)]
        b = b[:, colsel]
        r = rank
    else:
        rows = maxvol(np.linalg.qr(b)[0])
        state.pivots[(bond, u)] = cand_u[rows]

    # growth: sample far-side extension columns, add the worst-interpolated
    # (row, column) pair while the residual stays above tolerance
    budget = max(2, chi // 4)
    while r < chi and r < len(cand_u) and budget > 0:
        budget -= 1
        ext = _sample_side(state, bond, v, kick, rng)
        ext = _dedupe_against(ext, state.pivots[(bond, v)])
        if not len(ext):
            break
        cfull = _merge(cand_u, cols_u, ext, cols_v, L)
        c = f(cfull).reshape(len(cand_u), len(ext))
        rows_now = _locate_rows(cand_u, state.pivots[(bond, u)])
        p_now = b[rows_now]
        try:
            proj = b @ solve(p_now, c[rows_now])
        except np.linalg.LinAlgError as exc:
            raise PivotDegeneracyError("singular pivot block during growth") \
                from exc
        resid = np.abs(c - proj)
        i, j = np.unravel_index(np.argmax(resid), resid.shape)
        if resid[i, j] <= tol * scale:
            break
        state.pivots[(bond, v)] = np.vstack([state.pivots[(bond, v)],
                                             ext[j:j + 1]])
        b = np.hstack([b, c[:, j:j + 1]])
        r += 1
        rows = maxvol(np.linalg.qr(b)[0])
        state.pivots[(bond, u)] = cand_u[rows]


def _locate_rows(cand_u: np.ndarray, chosen: np.ndarray) -> np.ndarray:
    """Positions of each chosen pivot row inside the candidate block."""
    view = {row.tobytes(): i for i, row in enumerate(np.ascontiguousarray(cand_u))}
    return np.array([view[np.ascontiguousarray(row).tobytes()]
                     for row in chosen], dtype=int)


def _dedupe_against(ext: np.ndarray, existing: np.ndarray) -> np.ndarray:
    have = {np.ascontiguousarray(r).tobytes() for r in existing}
    keep = [i for i, r in enumerate(np.ascontiguousarray(ext))
            if r.tobytes() not in have]
    # also drop duplicates inside ext itself
    out = []
    seen = set(have)
    for i in keep:
        key = np.ascontiguousarray(ext[i]).tobytes()
        if key not in seen:
            seen.add(key)
            out.append(i)
    return ext[out]


def _sample_side(state: _PivotState, bond, v: int, count: int,
                 rng: np.random.Generator) -> np.ndarray:
    """Random v-side assignments nested in the current far pivots: each
    sample combines one random pivot per far leg of v with random physical
    indices; half the samples redraw every physical column low-biased."""
    cols_v = state.side_cols[(bond, v)]
    parts = state.far_parts(v, skip=("bond", bond))
    out = np.zeros((count, len(state.labels)), dtype=np.int64)
    for cols, piv in parts:
        picks = rng.integers(0, len(piv), size=count)
        out[:, cols] = piv[picks]
    # low-biased redraw of physical columns on half the samples
    for kind, key in state.legs_of[v]:
        if kind != "phys":
            continue
        c = state.col[key]
        d = state.dims[key]
        offs = (rng.geometric(0.4, size=count) - 1) * rng.choice((1, -1),
                                                                 size=count)
        redraw = rng.random(count) < 0.5
        out[redraw, c] = offs[redraw] % d
    full = out[:, cols_v]
    # a quarter of the samples leave the nested family entirely; a side
    # whose node carries only bonds could otherwise never grow, since all
    # its nested combinations start out at the shared seed pivot
    wild = rng.random(count) < 0.25
    if wild.any():
        nw = int(wild.sum())
        draw = np.empty((nw, len(cols_v)), dtype=np.int64)
        for i, c in enumerate(cols_v):
            d = state.dims[state.labels[c]]
            uniform = rng.integers(0, d, size=nw)
            offs = (rng.geometric(0.4, size=nw) - 1) * rng.choice(
                (1, -1), size=nw)
            pick = rng.random(nw) < 0.5
            draw[:, i] = np.where(pick, uniform, offs % d)
        full[wild] = draw
    return full


def _assemble(f: BlackBoxTensor, state: _PivotState) -> TreeTensorNetwork:
    """Evaluate node tensors over far-side pivots and absorb P_e^{-1}
    into the child side of every bond (rooted at the smallest node id)."""
    topo = state.topo
    L = len(state.labels)
    root = sorted(topo.nodes())[0]
    tensors = {}
    axis_order = {}
    for u in sorted(topo.nodes()):
        parts = state.far_parts(u, skip=None)
        rows, sizes = _product_rows(parts, L)
        tensors[u] = f(rows).reshape(sizes if sizes else (1,))
        if not state.legs_of[u]:
            raise ParameterError("node with no legs")
        axis_order[u] = list(state.legs_of[u])

    # walk from the root; child w of parent p via bond: transform w's
    # parent axis by P^{-1} so it enumerates w-side pivots
    seen = {root}
    queue = [root]
    while queue:
        p = queue.pop()
        for w in state.adj[p]:
            if w in seen:
                continue
            seen.add(w)
            bond = (p, w) if (p, w) in topo.bonds else (w, p)
            piv_u = state.pivots[(bond, w)]
            piv_v = state.pivots[(bond, p)]
            cols_u = state.side_cols[(bond, w)]
            cols_v = state.side_cols[(bond, p)]
            pmat = f(_merge(piv_u, cols_u, piv_v, cols_v, L)).reshape(
                len(piv_u), len(piv_v))
            axis = axis_order[w].index(("bond", bond))
            t = tensors[w]
            tm = np.moveaxis(t, axis, -1)
            shape = tm.shape
            try:
                # rows of tm run over far pivots J_v; right-multiply by
                # P^{-1} so the axis pairs with the parent's J_u axis
                tm = solve(pmat.T, tm.reshape(-1, shape[-1]).T).T
            except np.linalg.LinAlgError as exc:
                raise PivotDegeneracyError(
                    "singular pivot block in assembly") from exc
            tensors[w] = np.moveaxis(tm.reshape(shape), -1, axis)
            queue.append(w)

    axis_desc = {u: [(k, tuple(v) if k == "bond" else v) for k, v in ao]
                 for u, ao in axis_order.items()}
    return TreeTensorNetwork.from_topology(topo, tensors, axis_desc)
