import numpy as np
import pytest

from oracles import cvec, dense_radar_operator
from uplink_isac.detectors import HomotopyConfig
from uplink_isac.projection import build_projectors
from uplink_isac.receivers import (BlockOutput, ReceiverKind, block_receive, dfp_receive,
                                   estimate_target_response, fp_receive, joint_residual,
                                   oracle_receive, pdfp_configs, pdfp_receive,
                                   projection_receive, receive, sic_receive)
from uplink_isac.signal_model import SystemConfig, synthesize_frame, synthesize_subblocks

CFG = HomotopyConfig()


def crand(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture
def frame(ref_cfg, qam4):
    return synthesize_frame(ref_cfg, qam4, 0.0, 1.0, np.random.default_rng(21))


def test_endpoints_unify(frame, qam4):
    a = fp_receive(frame, qam4, 1.0, CFG)
    b = sic_receive(frame, qam4, CFG)
    assert np.array_equal(a.x_hat, b.x_hat)
    c = fp_receive(frame, qam4, 0.0, CFG)
    d = projection_receive(frame, qam4, CFG)
    assert np.array_equal(c.x_hat, d.x_hat)
    assert np.allclose(a.h_hat, b.h_hat) and np.allclose(c.h_hat, d.h_hat)


def test_ls_estimate_matches_dense(frame):
    x_hat = frame.x_c
    mr = frame.cfg.mr
    a_r = dense_radar_operator(frame.x_r, mr)
    ref = np.linalg.lstsq(a_r, cvec(frame.y - frame.h_c @ x_hat), rcond=None)[0]
    got = estimate_target_response(frame.x_r, frame.y, frame.h_c, x_hat)
    assert np.allclose(cvec(got), ref, atol=1e-10)


def test_ls_estimate_noiseless_exact(ref_cfg, qam4):
    fr = synthesize_frame(ref_cfg.replace(sigma2=1e-30), qam4, 0.0, 1.0,
                          np.random.default_rng(22))
    assert np.allclose(oracle_receive(fr).h_hat, fr.h_r, atol=1e-12)


def test_oracle_symbols_error_is_noise_only(frame):
    out = oracle_receive(frame)
    x_r = frame.x_r
    ref = frame.noise @ x_r.conj().T @ np.linalg.inv(x_r @ x_r.conj().T)
    assert np.allclose(out.h_hat - frame.h_r, ref, atol=1e-10)


def test_residual_identity(frame, qam4):
    out = dfp_receive(frame, qam4, CFG)
    p_perp = build_projectors(frame.x_r).p_perp
    r = (frame.y - frame.h_c @ out.x_hat) @ p_perp.T
    assert np.isclose(out.residual, np.linalg.norm(r) ** 2, rtol=1e-10)


def test_ls_minimises_residual(frame, rng):
    out = oracle_receive(frame)
    for _ in range(20):
        h = out.h_hat + 1e-3 * crand(rng, *out.h_hat.shape)
        assert joint_residual(frame.y, frame.h_c, out.x_hat, frame.x_r, h) > out.residual


def test_pdfp_picks_min_residual(qam4):
    cfg = SystemConfig(sigma2=0.3)
    for f in range(5):
        fr = synthesize_frame(cfg, qam4, 0.0, 3.0, np.random.default_rng([23, f]))
        eps = (0.05, 0.3, 0.7)
        res = [dfp_receive(fr, qam4, CFG.replace(epsilon=e)).residual for e in eps]
        out = pdfp_receive(fr, qam4, pdfp_configs(CFG, eps))
        assert out.residual == min(res)
        assert out.branch == int(np.argmin(res))


def test_pdfp_identical_branches(frame, qam4):
    out = pdfp_receive(frame, qam4, [CFG, CFG])
    single = dfp_receive(frame, qam4, CFG)
    assert out.branch == 0 and np.array_equal(out.x_hat, single.x_hat)


def test_pdfp_all_fail(frame, qam4):
    bad = CFG.replace(mu0=np.inf)
    with pytest.raises(RuntimeError):
        pdfp_receive(frame, qam4, [bad, bad])


def test_receiver_kind_parse():
    assert ReceiverKind.parse("sic").tag == "sic"
    assert ReceiverKind.parse("fp:0.3").rho == 0.3
    assert ReceiverKind.parse("pdfp").epsilons == (0.05, 0.5)
    assert ReceiverKind.parse("pdfp:0.1,0.2").label == "pdfp:0.1,0.2"
    k = ReceiverKind.parse("block:20,4")
    assert (k.sub_len, k.n_sub, k.label) == (20, 4, "block:20,4")
    for bad in ("fp:1.5", "pdfp:0.1,0.1", "pdfp:0.1", "foo"):
        with pytest.raises(ValueError):
            ReceiverKind.parse(bad)


def test_dispatch(frame, qam4):
    assert np.array_equal(receive(ReceiverKind("dfp"), frame, qam4, CFG).x_hat,
                          dfp_receive(frame, qam4, CFG).x_hat)
    with pytest.raises(ValueError):
        receive(ReceiverKind.parse("block:20,4"), frame, qam4, CFG)


def test_block_single_subblock_is_dfp(qam4):
    cfg = SystemConfig(snapshots=20)
    frames = synthesize_subblocks(cfg, qam4, 0.0, 1.0, np.random.default_rng(24), 1)
    out = block_receive(frames, qam4, CFG, n_sub=1, mode="dfp")
    ref = dfp_receive(frames[0], qam4, CFG)
    assert np.array_equal(out.sub_outputs[0].x_hat, ref.x_hat)
    assert np.allclose(out.h_hat, ref.h_hat)


def test_block_perfect_prior(qam4):
    cfg = SystemConfig(snapshots=20, sigma2=1e-6)
    frames = synthesize_subblocks(cfg, qam4, 0.0, 10.0, np.random.default_rng(25), 4)
    h_r = frames[0].h_r
    out = block_receive(frames, qam4, CFG, n_sub=2, mode="fp", rho=1.0,
                        prior_hook=lambda i: h_r)
    for sub, fr in zip(out.sub_outputs, frames):
        assert np.array_equal(sub.x_hat, fr.x_c)
    assert len(out.block_estimates) == 2
    assert np.linalg.norm(out.h_hat - h_r) < 1e-2 * np.linalg.norm(h_r)


def test_block_combined_estimate_oracle_symbols(qam4):
    cfg = SystemConfig(snapshots=20, sigma2=1e-30)
    frames = synthesize_subblocks(cfg, qam4, 0.0, 1.0, np.random.default_rng(26), 3)
    out = block_receive(frames, qam4, CFG, n_sub=3, mode="pdfp")
    assert isinstance(out, BlockOutput)
    assert np.allclose(out.h_hat, frames[0].h_r, atol=1e-8)


def test_block_validation(qam4):
    frames = synthesize_subblocks(SystemConfig(snapshots=20), qam4, 0.0, 1.0,
                                  np.random.default_rng(27), 3)
    with pytest.raises(ValueError):
        block_receive(frames, qam4, CFG, n_sub=2)
    with pytest.raises(ValueError):
        block_receive(frames, qam4, CFG, n_sub=3, mode="nope")
