import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import (complement_projector, cvec, dense_flex_channel, dense_flex_received,
                     numerical_rank)
from uplink_isac.projection import (FlexProjector, RankDeficientWaveform,
                                    apply_flex_channel, apply_flex_channel_adjoint,
                                    apply_flex_to_received, build_projectors, condition_number,
                                    effective_rank, identity_pair, pinv_flex)
from uplink_isac.signal_model import SystemConfig, gen_radar_waveform


def crand(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def waveform(mt, L, p_r=1.0):
    return gen_radar_waveform(SystemConfig(mt=mt, mr=max(mt, 1), k_users=1, snapshots=L,
                                           p_r=p_r))


def test_projector_invariants():
    x = waveform(4, 16)
    pr = build_projectors(x)
    for p in (pr.p_perp, pr.p_par):
        assert np.allclose(p, p.conj().T, atol=1e-12)
        assert np.linalg.norm(p @ p - p) < 1e-10
    assert np.allclose(pr.p_perp + pr.p_par, np.eye(16))
    assert np.linalg.norm(pr.p_perp @ x.T) < 1e-10
    assert np.isclose(np.trace(pr.p_perp).real, 12)
    assert np.isclose(np.trace(pr.p_par).real, 4)


def test_orthogonal_closed_form():
    x = waveform(3, 10, p_r=2.0)
    gamma = 2.0 * 10 / 3
    assert np.allclose(build_projectors(x).p_par, x.T @ x.conj() / gamma, atol=1e-12)


def test_projector_matches_svd_oracle(rng):
    x = crand(rng, 3, 9)
    assert np.allclose(build_projectors(x).p_perp, complement_projector(x), atol=1e-10)


def test_rank_deficient_rejected(rng):
    x = crand(rng, 1, 6)
    with pytest.raises(RankDeficientWaveform):
        build_projectors(np.vstack([x, 2 * x]))


def test_flex_spectrum_and_endpoints():
    pr = build_projectors(waveform(4, 16))
    for rho in (0.0, 0.25, 0.5, 1.0):
        fp = FlexProjector(pr, rho)
        ev = np.sort(np.linalg.eigvalsh(fp.p_fp))
        expect = np.sort([1.0] * 12 + [rho] * 4)
        assert np.allclose(ev, expect, atol=1e-8)
        assert np.isclose(np.linalg.norm(fp.p_fp) ** 2, 16 - (1 - rho ** 2) * 4, atol=1e-10)
    assert np.array_equal(FlexProjector(pr, 1.0).p_fp, np.eye(16))
    assert np.array_equal(FlexProjector(pr, 0.0).p_fp, pr.p_perp)
    with pytest.raises(ValueError):
        FlexProjector(pr, 1.5)


def test_apply_received_examples(rng):
    pr = build_projectors(waveform(2, 8))
    y = crand(rng, 3, 8)
    assert np.allclose(apply_flex_to_received(FlexProjector(pr, 1.0), y), cvec(y))
    h_r = crand(rng, 3, 2)
    echo = h_r @ waveform(2, 8)
    assert np.linalg.norm(apply_flex_to_received(FlexProjector(pr, 0.0), echo)) < 1e-10
    with pytest.raises(ValueError):
        apply_flex_to_received(FlexProjector(pr, 0.5), crand(rng, 3, 7))


def test_apply_received_dense(rng):
    pr = build_projectors(crand(rng, 1, 4))
    fp = FlexProjector(pr, 0.5)
    y = crand(rng, 2, 4)
    assert np.allclose(apply_flex_to_received(fp, y), dense_flex_received(fp.p_fp, 2) @ cvec(y),
                       atol=1e-10)


def test_apply_channel_examples(rng):
    pr = build_projectors(crand(rng, 1, 4))
    h = crand(rng, 2, 2)
    x = crand(rng, 2, 4)
    assert np.allclose(apply_flex_channel(FlexProjector(pr, 1.0), h, cvec(x)), cvec(h @ x))
    fp = FlexProjector(pr, 0.3)
    assert np.allclose(apply_flex_channel(fp, h, cvec(x)),
                       dense_flex_channel(fp.p_fp, h) @ cvec(x), atol=1e-10)
    assert not np.any(apply_flex_channel(fp, h, np.zeros(8, complex)))
    with pytest.raises(ValueError):
        apply_flex_channel(fp, h, np.zeros(7, complex))


@settings(max_examples=60, deadline=None)
@given(L=st.integers(2, 6), mr=st.integers(1, 3), k=st.integers(1, 3),
       mt_frac=st.floats(0, 1), rho=st.floats(0, 1), seed=st.integers(0, 2 ** 31))
def test_structured_matches_dense(L, mr, k, mt_frac, rho, seed):
    rng = np.random.default_rng(seed)
    mt = max(1, min(L - 1, int(round(mt_frac * (L - 1)))))
    pr = build_projectors(crand(rng, mt, L))
    fp = FlexProjector(pr, rho)
    h = crand(rng, mr, k)
    x = crand(rng, k * L)
    y = crand(rng, mr, L)
    r = crand(rng, mr * L)
    g = dense_flex_channel(fp.p_fp, h)
    assert np.allclose(apply_flex_channel(fp, h, x), g @ x, atol=1e-10)
    assert np.allclose(apply_flex_to_received(fp, y),
                       dense_flex_received(fp.p_fp, mr) @ cvec(y), atol=1e-10)
    assert np.allclose(apply_flex_channel_adjoint(fp, h, r), g.conj().T @ r, atol=1e-10)


def test_condition_number_law(rng):
    pr = build_projectors(crand(rng, 1, 4))
    for _ in range(20):
        h = crand(rng, 3, 2)
        ch = np.linalg.cond(h)
        for rho in (0.1, 0.5, 1.0):
            fp = FlexProjector(pr, rho)
            dense = np.linalg.cond(dense_flex_channel(fp.p_fp, h))
            assert abs(condition_number(fp, h) - dense) <= 1e-6 * dense
            assert np.isclose(condition_number(fp, h), ch / rho)
    assert condition_number(FlexProjector(pr, 0.0), h) == np.inf
    vals = [condition_number(FlexProjector(pr, r), h) for r in (0.5, 0.1, 0.01, 0.001)]
    assert np.all(np.diff(vals) > 0)


def test_effective_rank(rng):
    assert effective_rank(np.zeros((4, 16)), np.zeros((8, 8)), 16) == 96
    x = crand(rng, 1, 4)
    h = crand(rng, 3, 2)
    g = dense_flex_channel(build_projectors(x).p_perp, h)
    assert effective_rank(x, h, 4) == 6 == numerical_rank(g)
    assert effective_rank(np.zeros((0, 5)), h, 5) == 10


def test_rank_law_small_instances(rng):
    for L in range(2, 9):
        for mt in range(1, min(3, L - 1) + 1):
            for k in range(1, 4):
                x = crand(rng, mt, L)
                h = crand(rng, k + 1, k)
                g = dense_flex_channel(build_projectors(x).p_perp, h)
                assert numerical_rank(g) == effective_rank(x, h, L) == (L - mt) * k


def test_identity_pair():
    pr = identity_pair(5)
    assert np.array_equal(pr.p_perp, np.eye(5)) and not np.any(pr.p_par)


@pytest.mark.parametrize("rho", [0.0, 0.2, 0.5, 1.0])
def test_pinv_penrose(rho, rng):
    pr = build_projectors(crand(rng, 2, 6))
    fp = FlexProjector(pr, rho)
    a, b = fp.p_fp, pinv_flex(fp)
    assert np.allclose(a @ b @ a, a, atol=1e-10)
    assert np.allclose(b @ a @ b, b, atol=1e-10)
    assert np.allclose((a @ b).conj().T, a @ b, atol=1e-10)
    assert np.allclose((b @ a).conj().T, b @ a, atol=1e-10)
    assert np.allclose(b, np.linalg.pinv(a), atol=1e-8)


def test_pinv_endpoints(rng):
    pr = build_projectors(crand(rng, 2, 6))
    assert np.array_equal(pinv_flex(FlexProjector(pr, 1.0)), np.eye(6))
    p0 = pinv_flex(FlexProjector(pr, 0.0))
    assert np.allclose(p0, pr.p_perp)
    assert np.isclose(np.linalg.norm(p0) ** 2, 4)
