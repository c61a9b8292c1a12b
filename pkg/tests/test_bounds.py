import itertools

import numpy as np
import pytest

from rmfsc import bounds, fsc, transforms


GE = fsc.gilbert_elliott(0.1, 0.3, 0.01, 0.2)
GE_PHI = np.array([[0.9, 0.1], [0.3, 0.7]])


def test_total_variation():
    assert bounds.total_variation([1, 0], [0, 1]) == 1.0
    assert bounds.total_variation([0.5, 0.5], [0.5, 0.5]) == 0.0


# ---------------------------------------------------------------------------
# Doeblin contraction


def test_doeblin_uniform_rows_contract_to_zero():
    p = np.full((3, 3), 1 / 3)
    rep = bounds.doeblin_check(p, 1 / 3, trials=200, rng=np.random.default_rng(0))
    assert rep.passed
    assert all(row.exact == pytest.approx(0.0, abs=1e-15) for row in rep.rows)


def test_doeblin_ge_pairs():
    rep = bounds.doeblin_check(GE_PHI, 0.1, trials=10_000, rng=np.random.default_rng(1))
    assert rep.passed
    # contraction factor 1 - 2*0.1 = 0.8 appears in every certificate
    basis = [r for r in rep.rows if r.params["pair"].startswith("basis")]
    assert basis[0].certificate == pytest.approx(0.8 * 2.0, abs=1e-12)


def test_doeblin_equal_distributions_contract_to_zero():
    x = np.array([0.3, 0.7])
    assert np.abs(x @ GE_PHI - x @ GE_PHI).sum() == 0.0
    assert 0.8 * np.abs(x - x).sum() == 0.0


def test_doeblin_rejects_bad_minorization():
    with pytest.raises(ValueError):
        bounds.doeblin_check(GE_PHI, 0.2, trials=1, rng=np.random.default_rng(0))


# ---------------------------------------------------------------------------
# mixing decay


def test_mixing_decay_t0_row():
    rep = bounds.mixing_decay(GE_PHI, 0)
    assert rep.rows[0].certificate == 1.0
    assert rep.rows[0].exact <= 1.0


def test_mixing_decay_uniform_rows_exact_zero():
    rep = bounds.mixing_decay(np.full((2, 2), 0.5), 5)
    for row in rep.rows[1:]:
        assert row.exact == pytest.approx(0.0, abs=1e-15)
    assert rep.passed


def test_mixing_decay_two_state_closed_form():
    # 2-state chains contract exactly by the second eigenvalue 1 - p - w
    for p, w in [(0.1, 0.3), (0.5, 0.5), (0.7, 0.9), (0.05, 0.9)]:
        phi = np.array([[1 - p, p], [w, 1 - w]])
        pi = fsc.stationary(phi)
        lam = abs(1 - p - w)
        base = max(
            bounds.total_variation(np.eye(2)[s], pi) for s in range(2)
        )
        rep = bounds.mixing_decay(phi, 60)
        assert rep.passed
        for row in rep.rows:
            t = row.params["t"]
            assert row.exact == pytest.approx(base * lam**t, abs=1e-10)


def test_mixing_decay_rejects_periodic():
    with pytest.raises(fsc.NotPrimitiveError):
        bounds.mixing_decay(np.array([[0.0, 1.0], [1.0, 0.0]]), 5)


# ---------------------------------------------------------------------------
# decimated-chain joint TV


def test_decimated_chain_n1_zero():
    rep = bounds.decimated_chain_tv(GE_PHI, big_t=3, n=1)
    assert rep.rows[0].exact == pytest.approx(0.0, abs=1e-15)
    assert rep.passed


def test_decimated_chain_uniform_rows_zero():
    rep = bounds.decimated_chain_tv(np.full((2, 2), 0.5), big_t=1, n=3)
    assert rep.rows[0].exact == pytest.approx(0.0, abs=1e-14)


def test_decimated_chain_matches_explicit_enumeration():
    big_t, n = 5, 3
    rep = bounds.decimated_chain_tv(GE_PHI, big_t, n)
    pi = fsc.stationary(GE_PHI)
    q_t = np.linalg.matrix_power(GE_PHI, big_t)
    # oracle: loop over every state tuple
    tv = 0.0
    for tup in itertools.product(range(2), repeat=n):
        joint = pi[tup[0]]
        for a, b in zip(tup, tup[1:]):
            joint *= q_t[a, b]
        prod = np.prod([pi[s] for s in tup])
        tv += abs(joint - prod)
    tv *= 0.5
    assert rep.rows[0].exact == pytest.approx(tv, abs=1e-14)
    assert rep.rows[0].certificate == pytest.approx(2 * 0.8**big_t, abs=1e-12)
    assert rep.passed


def test_decimated_chain_grid():
    for big_t in range(1, 9):
        for n in (2, 3):
            assert bounds.decimated_chain_tv(GE_PHI, big_t, n).passed


# ---------------------------------------------------------------------------
# blocked/decimated channel TV (the full coupling chain)


def test_blocked_tv_single_state_zero():
    rep = bounds.blocked_decimated_tv(fsc.bsc(0.3), b=1, d=2, n=3)
    for row in rep.rows:
        assert row.exact == pytest.approx(0.0, abs=1e-14)
    assert rep.passed


def test_blocked_tv_n1_zero():
    rep = bounds.blocked_decimated_tv(GE, b=2, d=2, n=1)
    for row in rep.rows:
        assert row.exact == pytest.approx(0.0, abs=1e-14)


def test_blocked_tv_ge_decay_and_ordering():
    per_d = {}
    for d in (1, 2, 3, 4):
        rep = bounds.blocked_decimated_tv(GE, b=1, d=d, n=2)
        assert rep.passed
        for row in rep.rows:
            assert row.exact <= row.coupling + 1e-12
            assert row.coupling <= row.certificate + 1e-12
        per_d[d] = {row.params["x"]: row.exact for row in rep.rows}
    for x in per_d[1]:
        assert per_d[4][x] <= per_d[1][x] + 1e-12


def test_blocked_tv_sampled_inputs():
    rep = bounds.blocked_decimated_tv(
        GE, b=2, d=2, n=2, x_mode="sample", sample_k=5, rng=np.random.default_rng(0)
    )
    assert len(rep.rows) == 5
    assert rep.passed


def test_blocked_tv_rejects_unknown_mode():
    with pytest.raises(ValueError):
        bounds.blocked_decimated_tv(GE, 1, 1, 2, x_mode="weird")


def test_bound_row_margin_ordering():
    row = bounds.BoundRow(params={}, exact=0.1, coupling=0.2, certificate=0.5)
    assert row.margin == pytest.approx(0.1)
    assert row.passed
    bad = bounds.BoundRow(params={}, exact=0.3, coupling=0.2, certificate=0.5)
    assert not bad.passed
