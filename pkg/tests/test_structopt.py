"""Entropy-guided reconnection moves and the sweep driver."""

import math

import numpy as np
import pytest

from ttnprep import (ParameterError, ReconnectionChoice, TreeTopology,
                     local_reconnect, make_covariance, optimize_structure)
from ttnprep.structopt import PAIRING_NAMES
from ttnprep.fourier import FourierEvaluator, GridSpec, dense_coeff_tensor
from ttnprep.topology import canonical_leaf_tree, caterpillar_leaf_tree
from ttnprep.ttn import from_dense

PAIRED_01_23 = ((0, 4), (1, 4), (2, 5), (3, 5), (4, 5))
PAIRED_02_13 = ((0, 4), (2, 4), (1, 5), (3, 5), (4, 5))


def _bell_pairs_net(edges=PAIRED_01_23):
    # Bell(0,2) x Bell(1,3)
    t = np.zeros((2, 2, 2, 2))
    for p in range(2):
        for q in range(2):
            t[p, q, p, q] = 0.5
    topo = TreeTopology.from_leaf_tree(edges, 4, 2)
    return from_dense(t, topo)


def test_pairing_names_fixed_order():
    assert PAIRING_NAMES == ("ab|cd", "ac|bd", "ad|bc")


def test_reconnection_choice_must_pick_minimum():
    with pytest.raises(ParameterError):
        ReconnectionChoice(edge=0, entropies=(0.5, 0.1, 0.9), chosen=0,
                           accepted=True, step_fidelity=1.0)


def test_bell_pairs_reconnect_to_zero_entropy():
    net = _bell_pairs_net()
    before = net.contract_to_vector()
    e = net.bond_between(4, 5)
    net.canonicalize(4)
    choice = local_reconnect(net, e, chi=4)
    assert choice is not None
    assert choice.accepted
    ent = np.asarray(choice.entropies)
    assert choice.chosen == int(np.argmin(ent))
    np.testing.assert_allclose(ent.min(), 0.0, atol=1e-10)
    np.testing.assert_allclose(ent.max(), 2 * math.log(2), atol=1e-10)
    assert choice.step_fidelity == pytest.approx(1.0, abs=1e-12)
    # the new shape separates the Bell partners
    edges, labels = net.leaf_tree()
    assert canonical_leaf_tree(edges, labels) == \
        canonical_leaf_tree(PAIRED_02_13, {i: i for i in range(4)})
    np.testing.assert_allclose(net.contract_to_vector(), before, atol=1e-8)


def test_product_state_tie_keeps_incumbent():
    rng = np.random.default_rng(6)
    vecs = [rng.normal(size=2) for _ in range(4)]
    t = np.einsum("a,b,c,d->abcd", *vecs)
    t /= np.linalg.norm(t)
    topo = TreeTopology.from_leaf_tree(PAIRED_01_23, 4, 2)
    net = from_dense(t, topo)
    e = net.bond_between(4, 5)
    net.canonicalize(4)
    choice = local_reconnect(net, e, chi=4)
    assert choice is not None
    assert not choice.accepted
    np.testing.assert_allclose(choice.entropies, 0.0, atol=1e-10)
    edges, labels = net.leaf_tree()
    assert canonical_leaf_tree(edges, labels) == \
        canonical_leaf_tree(PAIRED_01_23, {i: i for i in range(4)})


def test_local_reconnect_skips_leaf_bonds():
    net = _bell_pairs_net()
    net.canonicalize(0)
    e = net.bond_between(0, 4)  # leaf side has no second outward leg
    assert local_reconnect(net, e, chi=4) is None


def _chain_coeff_net(edges, dim=4, rho=0.5, m=3, chi=6):
    cov = make_covariance("chain", dim, rho=rho)
    ev = FourierEvaluator(GridSpec(dim, 6, 20.0, m), cov)
    dense = dense_coeff_tensor(ev)
    topo = TreeTopology.from_leaf_tree(edges, dim, 2 ** m)
    net = from_dense(dense, topo)
    net.truncate(chi=chi)
    return net


def test_chain_in_natural_order_accepts_nothing():
    net = _chain_coeff_net(caterpillar_leaf_tree(4))
    net2, report = optimize_structure(net, chi=6)
    assert report["accepted_total"] == 0
    edges, labels = net2.leaf_tree()
    assert canonical_leaf_tree(edges, labels) == canonical_leaf_tree(
        caterpillar_leaf_tree(4), {i: i for i in range(4)})


def test_chain_recovers_from_bad_pairing():
    net = _chain_coeff_net(PAIRED_02_13)
    net2, report = optimize_structure(net, chi=6)
    assert report["accepted_total"] >= 1
    edges, labels = net2.leaf_tree()
    assert canonical_leaf_tree(edges, labels) == canonical_leaf_tree(
        caterpillar_leaf_tree(4), {i: i for i in range(4)})


def test_optimize_preserves_state_when_chi_ample():
    rng = np.random.default_rng(21)
    t = rng.normal(size=(2,) * 5) + 1j * rng.normal(size=(2,) * 5)
    t /= np.linalg.norm(t)
    topo = TreeTopology.from_leaf_tree(caterpillar_leaf_tree(5), 5, 2)
    net = from_dense(t, topo)
    before = net.contract_to_vector()
    net2, report = optimize_structure(net, chi=8)
    np.testing.assert_allclose(net2.contract_to_vector(), before, atol=1e-8)
    assert net2.ledger.product >= 1 - 1e-12


def test_optimize_report_shape():
    net = _chain_coeff_net(PAIRED_02_13)
    _, report = optimize_structure(net, chi=6, max_sweeps=3)
    assert len(report["sweeps"]) <= 3
    for row in report["sweeps"]:
        assert set(row) >= {"sweep", "attempts", "skipped", "accepted"}
    assert report["accepted_total"] == sum(
        r["accepted"] for r in report["sweeps"])
    for choice in report["choices"]:
        assert isinstance(choice, ReconnectionChoice)
