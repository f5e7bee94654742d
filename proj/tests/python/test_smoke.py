import math

import numpy as np
import pytest

import ipglab


@pytest.fixture(scope="module")
def inst():
    return ipglab.build_instance(m1=2, m2=1, block_dim=5, eps=0.1, lip_f=1.0)


def test_instance_dimensions(inst):
    assert inst.m == 6
    assert inst.dim_x == 30
    assert inst.dim_n == 15
    assert inst.dim_nbar == 10
    assert inst.rows_m == [2, 4]
    assert inst.rows_mc == [1, 3, 5]
    assert inst.beta > ipglab.beta_lower_bound(2, 1, 5, 0.1, 1.0)


def test_scalar_pieces():
    assert ipglab.psi(0.0) == 0.0
    assert ipglab.psi_prime(-1.0) == 0.0
    assert ipglab.phi(0.0) == pytest.approx(2 * math.pi)
    assert ipglab.phi_prime(0.0) == 4.0


def test_smooth_oracles(inst):
    x = np.zeros(30)
    val = inst.f0_value(x)
    expected = -600 * math.pi**2 * 0.01 * (1 - math.exp(-1))
    assert val == pytest.approx(expected, rel=1e-12)
    g = inst.f0_grad(x)
    assert g.shape == (30,)
    # Only the first coordinate of each block is active at the origin.
    for i in range(6):
        block = g[5 * i : 5 * (i + 1)]
        assert block[0] != 0.0
        assert np.all(block[1:] == 0.0)


def test_chain_operator_roundtrip(inst):
    x = np.arange(30, dtype=float)
    hx = inst.op_h.apply(x)
    assert hx.shape == (25,)
    back = inst.op_h.apply_transpose(hx)
    assert back.shape == (30,)
    # Adjoint identity.
    y = np.linspace(-1, 1, 25)
    assert inst.op_h.apply(x) @ y == pytest.approx(x @ inst.op_h.apply_transpose(y), rel=1e-12)


def test_spectra():
    eigs = ipglab.full_chain_gram_eigs(6, 1.0)
    assert len(eigs) == 5
    assert eigs[0] == pytest.approx(144 * math.sin(math.pi / 12) ** 2)
    assert ipglab.stacked_condition_number(6) == pytest.approx(2 + math.sqrt(3))


def test_prox_kit():
    assert ipglab.prox_weighted_l1(np.array([2.0]), 0.5)[0] == pytest.approx(1.5)
    out = ipglab.prox_pairwise_l1(np.array([3.0, 1.0]), 0.5, [1], 2, 1)
    assert out[0] == pytest.approx(2.5)
    assert out[1] == pytest.approx(1.5)
    assert ipglab.project_linf_ball(np.array([3.0, -0.2]), 1.0)[0] == 1.0


def test_solve_and_audits(inst):
    res = ipglab.solve(inst, eps=0.1, tau=2.0, sigma=1.0)
    assert res.certified
    assert res.outer_iters <= res.k_eps
    rep = res.report
    assert rep["certified"]
    assert all(v <= 0.1 for v in rep["residuals"].values())

    ap = ipglab.audit_ap(inst, res.x, 0.2)
    assert ap["certified"]

    rec = ipglab.near_stationary_recovery(inst, res, 1e-8, eps=0.1, tau=2.0, sigma=1.0)
    assert np.linalg.norm(res.x - rec["x_bar"]) <= 0.1 / 12


def test_span_episode(inst):
    ep = ipglab.lower_bound_episode(inst, model="a2", t_cap=200, seed=7)
    assert not ep["censored"]
    act = ep["activation_t"]
    for j in range(2, 6):
        assert act[j - 1] >= 2 + 6 * (j - 2) // 6

    replay = ipglab.run_ipg_tracked(inst, outer_iters=2)
    assert replay["entries"] == 3


def test_error_mapping():
    with pytest.raises(ValueError):
        ipglab.build_instance(m1=3, m2=1, block_dim=5, eps=0.1, lip_f=1.0)
