import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uplink_isac.signal_model import (SystemConfig, complex_to_real, constellation,
                                      gen_comm_channel, gen_radar_waveform, gen_symbols,
                                      gen_target_response, nearest_indices,
                                      quantize_to_alphabet, real_embedding, real_to_complex,
                                      synthesize_frame, synthesize_subblocks, to_real_problem,
                                      unvec, vec)


def test_config_validation():
    with pytest.raises(ValueError):
        SystemConfig(mt=4, snapshots=4)
    with pytest.raises(ValueError):
        SystemConfig(mr=4, k_users=5)
    with pytest.raises(ValueError):
        SystemConfig(sigma2=0.0)
    assert SystemConfig().replace(sigma2=0.1).sigma2 == 0.1


@pytest.mark.parametrize("name", ["qam4", "psk4"])
def test_constellation_properties(name):
    c = constellation(name)
    assert np.isclose(np.mean(np.abs(c.points) ** 2), 1.0)
    d = np.abs(c.points[:, None] - c.points[None, :])
    assert np.isclose(c.d_min, d[~np.eye(4, dtype=bool)].min())
    assert np.isclose(c.d_min, np.sqrt(2))
    s = 1 / np.sqrt(2)
    assert np.allclose(c.hull_bounds, (-s, s))
    # Gray: nearest neighbours differ in exactly one bit
    bits = c.bits(np.arange(4))
    for i in range(4):
        for j in range(4):
            if np.isclose(d[i, j], c.d_min):
                assert np.sum(bits[i] != bits[j]) == 1


def test_comm_channel_power(ref_cfg):
    rng = np.random.default_rng(0)
    p = [np.linalg.norm(gen_comm_channel(ref_cfg, 0.0, rng)) ** 2 for _ in range(10_000)]
    assert 0.98 <= np.mean(p) / (ref_cfg.k_users * ref_cfg.mr) <= 1.02


def test_comm_channel_correlation(ref_cfg):
    rng = np.random.default_rng(1)
    hs = np.array([gen_comm_channel(ref_cfg, 0.3, rng) for _ in range(10_000)])
    lag1 = np.mean(hs[:, :-1, :] * hs[:, 1:, :].conj())
    assert abs(lag1.real - 0.3) < 0.02
    p = np.mean(np.sum(np.abs(hs) ** 2, axis=(1, 2)))
    assert abs(p / (ref_cfg.k_users * ref_cfg.mr) - 1) < 0.02


def test_comm_channel_scalar():
    cfg = SystemConfig(mt=1, mr=1, k_users=1, snapshots=2)
    rng = np.random.default_rng(2)
    v = [gen_comm_channel(cfg, 0.0, rng)[0, 0] for _ in range(100_000)]
    assert abs(np.var(v) - 1.0) < 0.02


def test_radar_waveform(ref_cfg):
    x = gen_radar_waveform(ref_cfg)
    assert np.allclose(x @ x.conj().T, 4 * np.eye(4), atol=1e-10)
    assert np.linalg.matrix_rank(x) == 4
    x1 = gen_radar_waveform(SystemConfig(mt=1, mr=1, k_users=1, snapshots=2, p_r=2.0))
    assert np.isclose(np.linalg.norm(x1) ** 2, 4.0)


def test_target_response_power(ref_cfg):
    rng = np.random.default_rng(3)
    x = gen_radar_waveform(ref_cfg)
    p = [np.linalg.norm(gen_target_response(ref_cfg, 1.0, rng) @ x) ** 2 / 16
         for _ in range(10_000)]
    assert 0.97 <= np.mean(p) <= 1.03
    assert not np.any(gen_target_response(ref_cfg, 0.0, rng))
    with pytest.raises(ValueError):
        gen_target_response(ref_cfg.replace(p_r=0.0), 1.0, rng)


def test_symbols(ref_cfg, qam4):
    rng = np.random.default_rng(4)
    x = gen_symbols(ref_cfg, qam4, rng)
    assert np.allclose(np.abs(x), 1.0)
    cfg = SystemConfig(mt=1, mr=4, k_users=4, snapshots=25_000)
    x = gen_symbols(cfg, qam4, rng)
    cov = x @ x.conj().T / cfg.snapshots
    assert np.allclose(np.diag(cov), 1.0)
    assert np.max(np.abs(cov - np.diag(np.diag(cov)))) < 0.02


def test_frame_reconstruction(ref_cfg, qam4):
    fr = synthesize_frame(ref_cfg, qam4, 0.0, 1.0, np.random.default_rng(5))
    recon = fr.h_c @ fr.x_c + fr.h_r @ fr.x_r + fr.noise
    assert np.linalg.norm(recon - fr.y) <= 1e-12 * np.linalg.norm(fr.y)
    assert np.all(np.isin(fr.x_c, qam4.points))


def test_frame_noise_power(ref_cfg, qam4):
    rng = np.random.default_rng(6)
    p = [np.linalg.norm(synthesize_frame(ref_cfg, qam4, 0.0, 0.0, rng).noise) ** 2
         for _ in range(10_000)]
    assert abs(np.mean(p) / (16 * 8) / ref_cfg.sigma2 - 1) < 0.02


def test_interference_free_limit(qam4):
    cfg = SystemConfig(sigma2=1e-30)
    fr = synthesize_frame(cfg, qam4, 0.0, 0.0, np.random.default_rng(7))
    assert np.allclose(fr.y, fr.h_c @ fr.x_c, atol=1e-12)


def test_generators_deterministic(ref_cfg, qam4):
    a = synthesize_frame(ref_cfg, qam4, 0.3, 1.0, np.random.default_rng(8))
    b = synthesize_frame(ref_cfg, qam4, 0.3, 1.0, np.random.default_rng(8))
    assert np.array_equal(a.y, b.y) and np.array_equal(a.x_c, b.x_c)


def test_subblocks_share_channels(qam4):
    cfg = SystemConfig(snapshots=20)
    frames = synthesize_subblocks(cfg, qam4, 0.0, 1.0, np.random.default_rng(9), 3)
    assert all(np.array_equal(f.h_c, frames[0].h_c) for f in frames)
    assert all(np.array_equal(f.h_r, frames[0].h_r) for f in frames)
    assert not np.array_equal(frames[0].x_c, frames[1].x_c)


def test_vec_unvec_roundtrip(rng):
    m = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
    assert np.array_equal(unvec(vec(m), 3), m)
    assert np.array_equal(vec(m)[:3], m[:, 0])


def test_to_real_problem_definition():
    p = to_real_problem(np.array([1 + 2j]), lambda x: x, (1, 1, 1))
    assert np.array_equal(p.y_bar, [1.0, 2.0])


def test_real_embedding_isometry(rng):
    for _ in range(1000):
        L, K, Mr = rng.integers(1, 4, size=3)
        g = rng.standard_normal((L * Mr, L * K)) + 1j * rng.standard_normal((L * Mr, L * K))
        y = rng.standard_normal(L * Mr) + 1j * rng.standard_normal(L * Mr)
        x = rng.standard_normal(L * K) + 1j * rng.standard_normal(L * K)
        prob = to_real_problem(y, lambda v: g @ v, (L, K, Mr))
        xb = complex_to_real(x)
        lhs = np.linalg.norm(prob.y_bar - prob.g_bar_apply(xb))
        assert abs(lhs - np.linalg.norm(y - g @ x)) < 1e-10
        assert np.allclose(real_embedding(g) @ xb, prob.g_bar_apply(xb))


def test_real_problem_pure_real_input():
    x = np.array([1.0, -2.0, 0.5])
    xb = complex_to_real(x.astype(complex))
    assert not np.any(xb[3:])
    assert np.array_equal(real_to_complex(xb), x)


def test_real_problem_dimension_mismatch():
    with pytest.raises(ValueError):
        to_real_problem(np.zeros(5, complex), lambda v: v, (2, 2, 2))


def test_quantize_examples(qam4):
    s = 1 / np.sqrt(2)
    soft = complex_to_real(np.array([(0.9 - 0.8j) * s]))
    assert np.isclose(quantize_to_alphabet(soft, qam4, 1)[0, 0], (1 - 1j) * s)
    for p in qam4.points:
        assert quantize_to_alphabet(complex_to_real(np.array([p])), qam4, 1)[0, 0] == p
    zero = quantize_to_alphabet(np.zeros(2), qam4, 1)[0, 0]
    assert zero == qam4.points[0]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=8, max_size=8))
def test_quantize_idempotent(vals):
    c = constellation("qam4")
    q1 = quantize_to_alphabet(np.array(vals), c, 2)
    q2 = quantize_to_alphabet(complex_to_real(vec(q1)), c, 2)
    assert np.array_equal(q1, q2)


def test_nearest_indices_scaled(qam4):
    pts = 3.0 * qam4.points
    assert np.array_equal(nearest_indices(pts, qam4, 3.0), np.arange(4))
