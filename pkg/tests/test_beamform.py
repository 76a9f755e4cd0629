"""Tests for pencil assembly, filter updates, the metric, and run()."""
import numpy as np
import pytest

from icbeam.beamform import (
    ALGORITHMS,
    AlgoOptions,
    FilterBank,
    QFPair,
    RunTrace,
    build_QF,
    metric,
    receiver_update,
    run,
)
from icbeam.errors import DimensionMismatch, NonFinite
from icbeam.network import NetworkConfig, named_stream, reciprocal, sample_channel_set
from icbeam.numerics import orthonormal_columns, phase_normalize


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def make_cfg(K=3, M=2, N=2, D=1, snr_db=20.0, sigma2=0.1):
    return NetworkConfig.from_snr_db(K=K, M=M, N=N, D=(D,) * K, snr_db=snr_db, sigma2=sigma2)


def random_filters(cfg, seed):
    rng = named_stream(seed, "filters")
    v = [orthonormal_columns(rng, cfg.M, d) for d in cfg.D]
    u = [orthonormal_columns(rng, cfg.N, d) for d in cfg.D]
    return v, u


def quotient_direct(h, v_list, u_list, cfg, k, d, sigma2_eff):
    """Scalar-by-scalar evaluation of the objective, no matrix pencils."""
    u = u_list[k][:, d]
    unorm2 = float(np.vdot(u, u).real)
    own = abs(np.vdot(u, h[k, k] @ v_list[k][:, d])) ** 2
    total = 0.0
    sum_d = 0
    for j in range(cfg.K):
        for m in range(v_list[j].shape[1]):
            total += abs(np.vdot(u, h[k, j] @ v_list[j][:, m])) ** 2
            sum_d += 1
    mu1 = cfg.P * own + cfg.P * sigma2_eff * unorm2
    mu2 = cfg.P * total - cfg.P * own + (cfg.P * sigma2_eff * (sum_d - 1) + cfg.N0) * unorm2
    return mu1 / mu2


class TestBuildQF:
    def test_single_user_denominator_collapses(self):
        cfg = make_cfg(K=1, M=2, N=2, sigma2=0.0)
        h = crandn(np.random.default_rng(0), 1, 1, 2, 2)
        v, _ = random_filters(cfg, 1)
        pair = build_QF(0, 0, h, v, cfg, sigma2_eff=0.0)
        np.testing.assert_allclose(pair.F, cfg.N0 * np.eye(2), atol=1e-12 * cfg.P)
        q_col = h[0, 0] @ v[0][:, 0]
        np.testing.assert_allclose(pair.Q, cfg.P * np.outer(q_col, q_col.conj()), atol=1e-10)

    def test_identity_coefficient_arithmetic(self):
        # With zero channels only the identity terms survive.
        cfg = NetworkConfig(K=2, M=2, N=2, D=(1, 1), P=1.0, N0=1.5, sigma2=0.1)
        h = np.zeros((2, 2, 2, 2), dtype=complex)
        v, _ = random_filters(cfg, 2)
        pair = build_QF(0, 0, h, v, cfg, sigma2_eff=0.1)
        np.testing.assert_allclose(pair.F, (0.1 * (2 - 1) + 1.5) * np.eye(2), atol=1e-15)
        np.testing.assert_allclose(pair.Q, 0.1 * np.eye(2), atol=1e-15)

    def test_matches_direct_objective(self):
        cfg = make_cfg()
        h = sample_channel_set(cfg, named_stream(3, "channels")).H
        v, u = random_filters(cfg, 3)
        for k in range(3):
            pair = build_QF(k, 0, h, v, cfg, sigma2_eff=cfg.sigma2)
            col = u[k][:, 0]
            got = float((col.conj() @ pair.Q @ col).real / (col.conj() @ pair.F @ col).real)
            want = quotient_direct(h, v, u, cfg, k, 0, cfg.sigma2)
            assert got == pytest.approx(want, rel=1e-12)

    def test_exactly_hermitian(self):
        cfg = make_cfg()
        h = sample_channel_set(cfg, named_stream(4, "channels")).H
        v, _ = random_filters(cfg, 4)
        pair = build_QF(1, 0, h, v, cfg, sigma2_eff=0.05)
        assert np.array_equal(pair.Q, pair.Q.conj().T)
        assert np.array_equal(pair.F, pair.F.conj().T)

    def test_index_validation(self):
        cfg = make_cfg()
        h = sample_channel_set(cfg, named_stream(5, "channels")).H
        v, _ = random_filters(cfg, 5)
        with pytest.raises(IndexError):
            build_QF(3, 0, h, v, cfg, 0.1)
        with pytest.raises(IndexError):
            build_QF(0, 1, h, v, cfg, 0.1)

    def test_dimension_validation(self):
        cfg = make_cfg()
        h = sample_channel_set(cfg, named_stream(6, "channels")).H
        bad_v = [np.ones((3, 1), dtype=complex) / np.sqrt(3)] * 3  # rows != M
        with pytest.raises(DimensionMismatch):
            build_QF(0, 0, h, bad_v, cfg, 0.1)


class TestReceiverUpdate:
    def test_single_user_is_mrc(self):
        cfg = make_cfg(K=1, M=2, N=3, sigma2=0.0)
        h = crandn(np.random.default_rng(7), 1, 1, 3, 2)
        v, _ = random_filters(cfg, 7)
        (u,) = receiver_update(h, v, cfg, sigma2_eff=0.0)
        want = h[0, 0] @ v[0][:, 0]
        want = phase_normalize(want / np.linalg.norm(want))
        np.testing.assert_allclose(u[:, 0], want, atol=1e-10)

    def test_single_user_error_variance_inert(self):
        # K=1, D=1: the error variance only shifts both matrices by
        # isotropic terms, so the chosen direction is unchanged.
        h = crandn(np.random.default_rng(8), 1, 1, 3, 2)
        cfg0 = make_cfg(K=1, M=2, N=3, sigma2=0.0)
        cfg1 = make_cfg(K=1, M=2, N=3, sigma2=0.3)
        v, _ = random_filters(cfg0, 8)
        (u0,) = receiver_update(h, v, cfg0, sigma2_eff=0.0)
        (u1,) = receiver_update(h, v, cfg1, sigma2_eff=0.3)
        np.testing.assert_allclose(u0, u1, atol=1e-10)

    def test_beats_random_search(self):
        cfg = make_cfg(K=2, M=2, N=2, sigma2=0.1)
        h = sample_channel_set(cfg, named_stream(9, "channels")).H
        v, _ = random_filters(cfg, 9)
        u = receiver_update(h, v, cfg, sigma2_eff=cfg.sigma2)
        rng = np.random.default_rng(99)
        for k in range(2):
            pair = build_QF(k, 0, h, v, cfg, sigma2_eff=cfg.sigma2)
            col = u[k][:, 0]
            best = float((col.conj() @ pair.Q @ col).real / (col.conj() @ pair.F @ col).real)
            w = crandn(rng, 2, 10_000)
            w = w / np.linalg.norm(w, axis=0)
            quot = np.einsum("ij,ik,kj->j", w.conj(), pair.Q, w).real / np.einsum(
                "ij,ik,kj->j", w.conj(), pair.F, w
            ).real
            assert np.max(quot) <= best + 1e-9

    def test_unit_norm_columns(self):
        cfg = make_cfg(K=2, M=4, N=3, D=2, sigma2=0.1)
        h = sample_channel_set(cfg, named_stream(10, "channels")).H
        v, _ = random_filters(cfg, 10)
        for uk in receiver_update(h, v, cfg, sigma2_eff=0.1):
            np.testing.assert_allclose(np.linalg.norm(uk, axis=0), 1.0, atol=1e-12)


class TestMetric:
    def test_equals_eigenvalue_sum_after_update(self):
        from icbeam.numerics import leading_generalized_eigvec

        cfg = make_cfg()
        h = sample_channel_set(cfg, named_stream(11, "channels")).H
        v, _ = random_filters(cfg, 11)
        u = receiver_update(h, v, cfg, sigma2_eff=cfg.sigma2)
        want = 0.0
        for k in range(cfg.K):
            pair = build_QF(k, 0, h, v, cfg, sigma2_eff=cfg.sigma2)
            want += leading_generalized_eigvec(pair.Q, pair.F).value
        got = metric(h, v, u, cfg, sigma2_eff=cfg.sigma2)
        assert got == pytest.approx(want, rel=1e-10)

    def test_single_user_closed_form(self):
        cfg = make_cfg(K=1, M=2, N=2, sigma2=0.0)
        h = crandn(np.random.default_rng(12), 1, 1, 2, 2)
        v, _ = random_filters(cfg, 12)
        u = receiver_update(h, v, cfg, sigma2_eff=0.0)
        want = cfg.P * np.linalg.norm(h[0, 0] @ v[0][:, 0]) ** 2 / cfg.N0
        assert metric(h, v, u, cfg, 0.0) == pytest.approx(want, rel=1e-10)

    def test_column_scaling_invariance(self):
        cfg = make_cfg()
        h = sample_channel_set(cfg, named_stream(13, "channels")).H
        v, u = random_filters(cfg, 13)
        base = metric(h, v, u, cfg, 0.1)
        scaled = [uk * (0.3 - 2.1j) for uk in u]
        assert metric(h, v, scaled, cfg, 0.1) == pytest.approx(base, rel=1e-12)

    @pytest.mark.xfail(
        strict=True,
        reason="role-swap invariance of the summed per-stream quotient metric does not "
        "hold numerically (the per-stream denominators regroup interference received "
        "vs caused); kept as written for the record",
    )
    def test_swap_invariance(self):
        cfg = make_cfg()
        h = sample_channel_set(cfg, named_stream(14, "channels")).H
        v, _ = random_filters(cfg, 14)
        u = receiver_update(h, v, cfg, sigma2_eff=cfg.sigma2)
        fwd = metric(h, v, u, cfg, cfg.sigma2)
        h_rev = reciprocal(h).H_rev
        rev = metric(h_rev, u, v, cfg, cfg.sigma2)
        assert rev == pytest.approx(fwd, rel=1e-9)


class TestRun:
    def test_single_user_finds_dominant_singular_pair(self):
        cfg = make_cfg(K=1, M=3, N=3, snr_db=10.0, sigma2=0.1)
        h = crandn(np.random.default_rng(15), 1, 1, 3, 3)
        opts = AlgoOptions(max_alternations=200, rel_tol=1e-12)
        bank, trace = run(h, cfg, opts, named_stream(15, "filters"))
        assert trace.converged
        svd_u, svd_s, svd_vh = np.linalg.svd(h[0, 0])
        # Alignment up to phase with the top singular vectors.
        assert abs(np.vdot(bank.V[0][:, 0], svd_vh[0].conj())) == pytest.approx(1.0, abs=1e-6)
        assert abs(np.vdot(bank.U[0][:, 0], svd_u[:, 0])) == pytest.approx(1.0, abs=1e-6)
        want = (cfg.P * svd_s[0] ** 2 + cfg.P * cfg.sigma2) / cfg.N0
        assert trace.metric_values[-1] == pytest.approx(want, rel=1e-9)

    def test_single_user_well_separated_converges_fast(self):
        rng = np.random.default_rng(16)
        basis_l = np.linalg.qr(crandn(rng, 3, 3))[0]
        basis_r = np.linalg.qr(crandn(rng, 3, 3))[0]
        h = (basis_l @ np.diag([3.0, 0.03, 0.01]) @ basis_r.conj().T)[None, None]
        cfg = make_cfg(K=1, M=3, N=3, snr_db=10.0, sigma2=0.1)
        _, trace = run(h, cfg, AlgoOptions(), named_stream(16, "filters"))
        assert trace.converged and trace.iterations_run <= 5

    def test_zero_error_variance_matches_max_sinr_bitwise(self):
        cfg = make_cfg(K=3, M=2, N=2, sigma2=0.0)
        h = sample_channel_set(cfg, named_stream(17, "channels")).H
        bank_p, trace_p = run(h, cfg, AlgoOptions(algorithm="proposed"), named_stream(17, "filters"))
        bank_m, trace_m = run(h, cfg, AlgoOptions(algorithm="max_sinr"), named_stream(17, "filters"))
        assert trace_p.metric_values == trace_m.metric_values
        for a, b in zip(bank_p.V + bank_p.U, bank_m.V + bank_m.U):
            assert np.array_equal(a, b)

    def test_trace_length_contract(self):
        cfg = make_cfg()
        h = sample_channel_set(cfg, named_stream(18, "channels")).H
        _, trace = run(h, cfg, AlgoOptions(max_alternations=1), named_stream(18, "filters"))
        assert len(trace.metric_values) == 3
        assert trace.iterations_run == 1
        _, trace = run(h, cfg, AlgoOptions(max_alternations=7, rel_tol=0.0), named_stream(18, "filters"))
        assert len(trace.metric_values) == 2 * trace.iterations_run + 1

    def test_metric_rises_overall(self):
        cfg = make_cfg()
        h = sample_channel_set(cfg, named_stream(19, "channels")).H
        _, trace = run(h, cfg, AlgoOptions(), named_stream(19, "filters"))
        values = trace.metric_values
        assert values[-1] > values[0]
        assert max(values) <= values[-1] * 1.5  # settles near its peak

    def test_unit_norms_and_shapes(self):
        cfg = make_cfg(K=2, M=4, N=3, D=2, snr_db=15.0, sigma2=0.1)
        h = sample_channel_set(cfg, named_stream(20, "channels")).H
        for algo in ALGORITHMS:
            bank, _ = run(h, cfg, AlgoOptions(algorithm=algo), named_stream(20, "filters"))
            for j in range(2):
                assert bank.V[j].shape == (4, 2) and bank.U[j].shape == (3, 2)
                np.testing.assert_allclose(np.linalg.norm(bank.V[j], axis=0), 1.0, atol=1e-12)
                np.testing.assert_allclose(np.linalg.norm(bank.U[j], axis=0), 1.0, atol=1e-12)

    def test_scale_invariance_of_updates(self):
        cfg = make_cfg()
        h = sample_channel_set(cfg, named_stream(21, "channels")).H
        scaled = NetworkConfig(K=cfg.K, M=cfg.M, N=cfg.N, D=cfg.D, P=7.3 * cfg.P, N0=7.3 * cfg.N0, sigma2=cfg.sigma2)
        bank_a, _ = run(h, cfg, AlgoOptions(max_alternations=10, rel_tol=0.0), named_stream(21, "filters"))
        bank_b, _ = run(h, scaled, AlgoOptions(max_alternations=10, rel_tol=0.0), named_stream(21, "filters"))
        for a, b in zip(bank_a.V + bank_a.U, bank_b.V + bank_b.U):
            np.testing.assert_allclose(a, b, atol=1e-8)

    def test_min_leakage_aligns_interference(self):
        # One stream per user with K = M + N - 1: interference can be
        # aligned perfectly, so the leakage baseline drives it to zero.
        cfg = make_cfg(K=3, M=2, N=2, sigma2=0.0)
        h = sample_channel_set(cfg, named_stream(22, "channels")).H
        opts = AlgoOptions(algorithm="min_leakage", max_alternations=400, rel_tol=0.0)
        bank, _ = run(h, cfg, opts, named_stream(22, "filters"))
        leak = 0.0
        for k in range(3):
            for j in range(3):
                if j == k:
                    continue
                leak += cfg.P * np.linalg.norm(bank.U[k].conj().T @ h[k, j] @ bank.V[j]) ** 2
        assert leak < 1e-6

    def test_determinism(self):
        cfg = make_cfg()
        h = sample_channel_set(cfg, named_stream(23, "channels")).H
        a = run(h, cfg, AlgoOptions(), named_stream(23, "filters"))
        b = run(h, cfg, AlgoOptions(), named_stream(23, "filters"))
        assert a[1].metric_values == b[1].metric_values
        for x, y in zip(a[0].V + a[0].U, b[0].V + b[0].U):
            assert np.array_equal(x, y)

    def test_shape_validation(self):
        cfg = make_cfg()
        with pytest.raises(DimensionMismatch):
            run(np.zeros((2, 2, 2, 2), dtype=complex), cfg, AlgoOptions(), named_stream(0, "filters"))


class TestOptionValidation:
    def test_bad_algorithm(self):
        with pytest.raises(ValueError):
            AlgoOptions(algorithm="gradient")

    def test_bad_counts(self):
        with pytest.raises(ValueError):
            AlgoOptions(max_alternations=0)
        with pytest.raises(ValueError):
            AlgoOptions(rel_tol=-1.0)
