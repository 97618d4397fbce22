import numpy as np
import pytest

from qmetroinfo import channel, infomeasure as im, optimal_extraction as oe, qcore
from qmetroinfo.exceptions import UnsupportedConfigurationError, ValidationError


def x_basis_povm() -> qcore.Povm:
    s = 1 / np.sqrt(2)
    return qcore.Povm.projective(np.array([[s, s], [s, -s]], dtype=complex))


def ramsey_strategy() -> im.Strategy:
    s = 1 / np.sqrt(2)
    return im.Strategy(initial=np.array([s, s], dtype=complex), povm=x_basis_povm())


def trine_povm() -> qcore.Povm:
    angles = 2 * np.pi * np.arange(3) / 3
    u = np.stack([np.cos(angles / 2), np.sin(angles / 2)], axis=0).astype(complex)
    return qcore.Povm.from_vectors(np.sqrt(2 / 3) * u)


def discrete_prior(points):
    points = np.asarray(points, dtype=float)
    return im.DiscretePrior(points, np.full(points.size, 1 / points.size))


def random_strategy(dim, m, rng) -> im.Strategy:
    psi = qcore.haar_state(dim, rng)
    b = qcore.haar_unitary(m, rng)[:dim, :]
    return im.Strategy(initial=psi, povm=qcore.Povm.from_vectors(b))


def expm_h(h, t):
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * t * w)[None, :]) @ v.conj().T


def mi_of_frame(ctx, psi, vmat, m_out):
    """Information from raw frame blocks, with no completeness assumption."""
    from scipy.special import xlogy

    w = vmat[0::m_out, :]
    a = ctx.amplitudes(psi) @ w.conj()
    p = np.abs(a) ** 2
    pm = ctx.wq @ p
    return float(ctx.wq @ xlogy(p, p).sum(axis=1) - xlogy(pm, pm).sum())


class TestDilation:
    def test_projective_basis_gives_copy_unitary(self):
        povm = qcore.Povm.projective(np.eye(2))
        v, vmat = oe.dilate_povm(povm)
        assert np.all(np.isin(np.round(np.abs(v), 12), [0.0, 1.0]))
        # statistics reproduced
        rng = np.random.default_rng(0)
        psi = qcore.haar_state(2, rng)
        comp = np.kron(psi, np.array([1.0, 0.0]))
        for m in range(2):
            got = abs(vmat[:, m].conj() @ comp) ** 2
            want = float(np.real(psi.conj() @ povm.elements[m] @ psi))
            assert got == pytest.approx(want, abs=1e-12)

    def test_trine_statistics_preserved(self):
        povm = trine_povm()
        v, vmat = oe.dilate_povm(povm)
        rng = np.random.default_rng(1)
        for _ in range(5):
            a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            rho = a @ a.conj().T
            rho = rho / np.real(np.trace(rho))
            comp = np.kron(rho, np.diag([1.0, 0.0, 0.0]).astype(complex))
            for m in range(3):
                got = float(np.real(vmat[:, m].conj() @ comp @ vmat[:, m]))
                want = float(np.real(np.trace(povm.elements[m] @ rho)))
                assert got == pytest.approx(want, abs=1e-12)

    def test_dilation_unitary_consistency(self):
        # V maps v_m to the labeled targets and acts isometrically on the
        # auxiliary reference sector
        povm = trine_povm()
        v, vmat = oe.dilate_povm(povm)
        w = povm.rank_one_vectors()
        lam = np.linalg.norm(w, axis=0) ** 2
        u = w / np.sqrt(lam)[None, :]
        for m in range(3):
            target = np.zeros(6, dtype=complex)
            target[m::3] = u[:, m]
            np.testing.assert_allclose(v @ vmat[:, m], target, atol=1e-12)

    def test_random_rank_one_isometry_defect(self):
        rng = np.random.default_rng(2)
        b = qcore.haar_unitary(4, rng)[:2, :]
        povm = qcore.Povm.from_vectors(b)
        v, vmat = oe.dilate_povm(povm)
        assert qcore.spectral_norm(v.conj().T @ v - np.eye(8)) < 1e-10
        # restriction to the auxiliary reference sector is an isometry
        sector = np.zeros((8, 2), dtype=complex)
        sector[0::4, 0] = [1, 0]
        sector[0::4, 1] = [0, 1]
        restricted = v @ sector
        np.testing.assert_allclose(
            restricted.conj().T @ restricted, np.eye(2), atol=1e-10
        )

    def test_frame_blocks_recover_the_vectors(self):
        rng = np.random.default_rng(3)
        b = qcore.haar_unitary(3, rng)[:2, :]
        vmat = oe.dilation_vectors(qcore.Povm.from_vectors(b))
        np.testing.assert_allclose(vmat[0::3, :], b, atol=1e-13)
        np.testing.assert_allclose(vmat.conj().T @ vmat, np.eye(3), atol=1e-12)

    def test_rejects_non_rank_one(self):
        povm = qcore.Povm(np.stack([np.eye(2) / 2, np.eye(2) / 2]))
        with pytest.raises(UnsupportedConfigurationError):
            oe.dilate_povm(povm)


class TestResiduals:
    def test_identity_channel_povm_residual_zero(self):
        ch = channel.identity_channel(2)
        prior = discrete_prior([0.0, 1.0, 2.0])
        quad = im.build_quadrature(prior)
        res = oe.povm_condition_residual(ramsey_strategy(), ch, prior, quad, 1)
        assert res.shape == (2, 2)
        assert res.max() < 1e-14

    def test_identity_channel_state_residual_zero(self):
        ch = channel.identity_channel(2)
        prior = discrete_prior([0.0, 1.0, 2.0])
        quad = im.build_quadrature(prior)
        res = oe.state_condition_residual(ramsey_strategy(), ch, prior, quad, 1)
        assert res.shape == (1,)
        assert res.max() < 1e-14

    def test_residual_matrix_is_symmetric_with_zero_diagonal(self):
        rng = np.random.default_rng(5)
        ch = channel.qubit_phase()
        prior = discrete_prior([0.0, 2.0, 4.0])
        quad = im.build_quadrature(prior)
        strat = random_strategy(2, 3, rng)
        res = oe.povm_condition_residual(strat, ch, prior, quad, 1)
        np.testing.assert_allclose(res, res.T, atol=1e-12)
        assert np.all(np.diag(res) == 0)

    def test_converged_optimum_has_small_residuals(self):
        ch = channel.qubit_phase()
        prior = discrete_prior([0.0, 2 * np.pi / 3, 4 * np.pi / 3])
        quad = im.build_quadrature(prior)
        rep = oe.optimize_strategy(ch, prior, quad, 1, 2,
                                   oe.OptimizeOptions(restarts=6, seed=1))
        assert rep.converged
        assert rep.povm_residual < 1e-6
        assert rep.state_residual < 1e-6

    def test_random_strategy_is_generically_non_stationary(self):
        rng = np.random.default_rng(6)
        ch = channel.qubit_phase()
        prior = discrete_prior([0.0, 2 * np.pi / 3, 4 * np.pi / 3])
        quad = im.build_quadrature(prior)
        strat = random_strategy(2, 2, rng)
        res = oe.povm_condition_residual(strat, ch, prior, quad, 1)
        assert res.max() > 1e-3
        # non-optimality witness: some other strategy carries more information
        mi0 = im.mutual_information(strat, ch, prior, quad, 1)
        better = max(
            im.mutual_information(random_strategy(2, 2, rng), ch, prior, quad, 1)
            for _ in range(50)
        )
        assert better > mi0

    def test_generator_eigenstate_is_a_critical_point_yet_improvable(self):
        # With the initial state an eigenstate of the generator, p(m|phi) is
        # parameter independent, so every stationarity integrand vanishes:
        # the residuals are exactly zero although the information (zero) is
        # far from optimal.  The conditions are necessary, not sufficient.
        ch = channel.qubit_phase()
        prior = discrete_prior([0.0, np.pi])
        quad = im.build_quadrature(prior)
        strat = im.Strategy(initial=np.array([1.0, 0.0], dtype=complex), povm=x_basis_povm())
        res_state = oe.state_condition_residual(strat, ch, prior, quad, 1)
        res_povm = oe.povm_condition_residual(strat, ch, prior, quad, 1)
        assert res_state.max() < 1e-12
        assert res_povm.max() < 1e-12
        mi0 = im.mutual_information(strat, ch, prior, quad, 1)
        assert abs(mi0) < 1e-12
        # grid search over equatorial states shows the information improves
        best = 0.0
        for theta in np.linspace(0, np.pi, 41):
            psi = np.array([np.cos(theta / 2), np.sin(theta / 2)], dtype=complex)
            best = max(best, im.mutual_information(
                im.Strategy(initial=psi, povm=x_basis_povm()), ch, prior, quad, 1))
        assert best > mi0 + 0.5

    def test_dead_outcome_rows_are_zero(self):
        ch = channel.qubit_phase()
        prior = discrete_prior([0.0, 1.0])
        quad = im.build_quadrature(prior)
        w = np.zeros((2, 3), dtype=complex)
        w[:, :2] = np.eye(2)
        strat = im.Strategy(initial=np.array([1, 0], dtype=complex),
                            povm=qcore.Povm.from_vectors(w))
        res = oe.povm_condition_residual(strat, ch, prior, quad, 1)
        assert np.all(res[2, :] == 0) and np.all(res[:, 2] == 0)

    def test_requires_rank_one(self):
        ch = channel.qubit_phase()
        prior = discrete_prior([0.0, 1.0])
        quad = im.build_quadrature(prior)
        strat = im.Strategy(initial=np.array([1, 0], dtype=complex),
                            povm=qcore.Povm(np.stack([np.eye(2) / 2, np.eye(2) / 2])))
        with pytest.raises(UnsupportedConfigurationError):
            oe.povm_condition_residual(strat, ch, prior, quad, 1)


class TestGradient:
    def test_identity_channel_gradients_vanish(self):
        ch = channel.identity_channel(2)
        prior = discrete_prior([0.0, 1.0])
        quad = im.build_quadrature(prior)
        gi, gm = oe.mi_gradient(ramsey_strategy(), ch, prior, quad, 1)
        assert qcore.spectral_norm(gi) < 1e-14
        assert qcore.spectral_norm(gm) < 1e-14

    def test_gradients_are_hermitian(self):
        rng = np.random.default_rng(7)
        ch = channel.ParamChannel(qcore.random_hermitian(2, rng))
        prior = discrete_prior(rng.uniform(0, 2 * np.pi, 3))
        quad = im.build_quadrature(prior)
        strat = random_strategy(2, 3, rng)
        gi, gm = oe.mi_gradient(strat, ch, prior, quad, 1)
        assert qcore.spectral_norm(gi - gi.conj().T) < 1e-10
        assert qcore.spectral_norm(gm - gm.conj().T) < 1e-10

    @pytest.mark.parametrize("seed", range(8))
    def test_directional_derivative_matches_central_differences(self, seed):
        rng = np.random.default_rng(800 + seed)
        ch = channel.ParamChannel(qcore.random_hermitian(2, rng))
        prior = discrete_prior(rng.uniform(0, 2 * np.pi, 3))
        quad = im.build_quadrature(prior)
        strat = random_strategy(2, 2, rng)
        gi, gm = oe.mi_gradient(strat, ch, prior, quad, 1)
        ctx = oe._EvalContext(ch, prior, quad, 1)
        vmat = oe.dilation_vectors(strat.povm)
        g = qcore.random_hermitian(2, rng)
        h = qcore.random_hermitian(4, rng)
        analytic = float(np.real(np.trace(gi @ g) + np.trace(gm @ h)))
        eps = 1e-5
        up = mi_of_frame(ctx, expm_h(g, eps) @ strat.initial, expm_h(h, eps) @ vmat, 2)
        dn = mi_of_frame(ctx, expm_h(g, -eps) @ strat.initial, expm_h(h, -eps) @ vmat, 2)
        fd = (up - dn) / (2 * eps)
        assert abs(analytic - fd) <= 1e-6 * max(abs(analytic), abs(fd), 1e-3)

    def test_gradient_small_at_converged_optimum(self):
        ch = channel.qubit_phase()
        prior = discrete_prior([0.0, np.pi])
        quad = im.build_quadrature(prior)
        rep = oe.optimize_strategy(ch, prior, quad, 1, 2,
                                   oe.OptimizeOptions(restarts=4, seed=2))
        gi, gm = oe.mi_gradient(rep.strategy, ch, prior, quad, 1)
        vmat = oe.dilation_vectors(rep.strategy.povm)
        projected = vmat.conj().T @ gm @ vmat
        assert qcore.spectral_norm(gi) < 1e-6
        assert qcore.spectral_norm(projected) < 1e-6

    @pytest.mark.parametrize("seed", range(6))
    def test_residuals_bounded_by_gradient_norm(self, seed):
        # the stationarity conditions restate gradient vanishing: measured
        # proportionality constant stays below 10 on this test set
        rng = np.random.default_rng(900 + seed)
        ch = channel.ParamChannel(qcore.random_hermitian(2, rng))
        prior = discrete_prior(rng.uniform(0, 2 * np.pi, 3))
        quad = im.build_quadrature(prior)
        m = int(rng.integers(2, 4))
        strat = random_strategy(2, m, rng)
        gi, gm = oe.mi_gradient(strat, ch, prior, quad, 1)
        grad_norm = np.sqrt(
            np.linalg.norm(gi) ** 2 + np.linalg.norm(gm) ** 2
        )
        res4 = oe.povm_condition_residual(strat, ch, prior, quad, 1).max()
        res5 = oe.state_condition_residual(strat, ch, prior, quad, 1).max()
        assert max(res4, res5) <= 10.0 * grad_norm


class TestOrthogonality:
    def test_projective_zero(self):
        assert oe.orthogonality_check(qcore.Povm.projective(np.eye(3))) == pytest.approx(0.0, abs=1e-14)

    def test_trine_value(self):
        assert oe.orthogonality_check(trine_povm()) == pytest.approx(2 / 9, abs=1e-12)

    def test_optimizer_output_at_square_outcome_count(self):
        ch = channel.qubit_phase()
        prior = discrete_prior([0.0, 2 * np.pi / 3, 4 * np.pi / 3])
        quad = im.build_quadrature(prior)
        rep = oe.optimize_strategy(ch, prior, quad, 1, 2,
                                   oe.OptimizeOptions(restarts=4, seed=4))
        assert rep.orthogonality_defect < 1e-6


class TestOptimizer:
    def test_identity_channel_converges_immediately(self):
        ch = channel.identity_channel(2)
        prior = discrete_prior([0.0, 1.0])
        quad = im.build_quadrature(prior)
        rep = oe.optimize_strategy(ch, prior, quad, 1, 2,
                                   oe.OptimizeOptions(restarts=2, seed=0))
        assert rep.converged
        assert rep.iterations == 0
        assert abs(rep.mi) < 1e-12

    def test_two_point_prior_reaches_perfect_discrimination(self):
        ch = channel.qubit_phase()
        prior = discrete_prior([0.0, np.pi])
        quad = im.build_quadrature(prior)
        rep = oe.optimize_strategy(ch, prior, quad, 1, 2,
                                   oe.OptimizeOptions(restarts=8, seed=5))
        assert rep.mi >= np.log(2) - 1e-9
        assert rep.converged
        assert rep.orthogonality_defect < 1e-6

    def test_beats_random_search_on_three_point_prior(self):
        ch = channel.qubit_phase()
        prior = discrete_prior([0.0, 2 * np.pi / 3, 4 * np.pi / 3])
        quad = im.build_quadrature(prior)
        rep = oe.optimize_strategy(ch, prior, quad, 1, 2,
                                   oe.OptimizeOptions(restarts=8, seed=6))
        rng = np.random.default_rng(123)
        ctx = oe._EvalContext(ch, prior, quad, 1)
        best = max(
            oe._mi_from(ctx, ctx.amplitudes(qcore.haar_state(2, rng))
                        @ qcore.haar_unitary(2, rng).conj())
            for _ in range(2000)
        )
        assert rep.mi >= best - 1e-4

    def test_monotone_ascent_trace(self):
        ch = channel.qubit_phase()
        prior = discrete_prior([0.0, 2 * np.pi / 3, 4 * np.pi / 3])
        quad = im.build_quadrature(prior)
        ctx = oe._EvalContext(ch, prior, quad, 1)
        trace: list = []
        oe._run_restart(ctx, 2, oe.OptimizeOptions(restarts=1, seed=9), 9, trace=trace)
        assert len(trace) > 2
        diffs = np.diff(np.asarray(trace))
        assert np.all(diffs >= -1e-12)

    def test_report_merge_is_deterministic(self):
        ch = channel.qubit_phase()
        prior = discrete_prior([0.0, np.pi])
        quad = im.build_quadrature(prior)
        opts = oe.OptimizeOptions(restarts=4, seed=13)
        r1 = oe.optimize_strategy(ch, prior, quad, 1, 2, opts)
        r2 = oe.optimize_strategy(ch, prior, quad, 1, 2, opts)
        assert r1.best_seed == r2.best_seed
        assert r1.mi == r2.mi
        np.testing.assert_array_equal(r1.strategy.initial, r2.strategy.initial)

    def test_threaded_restarts_match_sequential(self):
        ch = channel.qubit_phase()
        prior = discrete_prior([0.0, np.pi])
        quad = im.build_quadrature(prior)
        opts = oe.OptimizeOptions(restarts=4, seed=13)
        r1 = oe.optimize_strategy(ch, prior, quad, 1, 2, opts)
        r2 = oe.optimize_strategy(ch, prior, quad, 1, 2, opts, threads=4)
        assert r1.best_seed == r2.best_seed
        assert r1.mi == pytest.approx(r2.mi, abs=0)

    def test_overcomplete_measurement_supported(self):
        ch = channel.qubit_phase()
        prior = discrete_prior([0.0, 2 * np.pi / 3, 4 * np.pi / 3])
        quad = im.build_quadrature(prior)
        rep = oe.optimize_strategy(ch, prior, quad, 1, 3,
                                   oe.OptimizeOptions(restarts=4, seed=3))
        assert rep.strategy.povm.outcome_count == 3
        assert rep.mi > 0.3
        # with more outcomes than dimensions the elements cannot all be independent
        assert rep.povm_linearly_independent in (True, False)

    def test_rejects_too_few_outcomes(self):
        ch = channel.qubit_phase()
        prior = discrete_prior([0.0, np.pi])
        quad = im.build_quadrature(prior)
        with pytest.raises(UnsupportedConfigurationError):
            oe.optimize_strategy(ch, prior, quad, 2, 2)

    def test_options_validation(self):
        with pytest.raises(ValidationError):
            oe.OptimizeOptions(restarts=0)
        with pytest.raises(ValidationError):
            oe.OptimizeOptions(residual_tol=1e-12)
        with pytest.raises(ValidationError):
            oe.OptimizeOptions(armijo_shrink=1.5)


class TestInvariances:
    def test_global_phase_and_outcome_permutation(self):
        rng = np.random.default_rng(21)
        ch = channel.qubit_phase()
        prior = discrete_prior([0.0, 2.0, 4.0])
        quad = im.build_quadrature(prior)
        strat = random_strategy(2, 3, rng)
        mi0 = im.mutual_information(strat, ch, prior, quad, 1)
        res0 = oe.povm_condition_residual(strat, ch, prior, quad, 1)
        s0 = oe.state_condition_residual(strat, ch, prior, quad, 1)

        phased = im.Strategy(initial=np.exp(0.83j) * strat.initial, povm=strat.povm)
        assert abs(im.mutual_information(phased, ch, prior, quad, 1) - mi0) < 1e-10
        np.testing.assert_allclose(
            oe.povm_condition_residual(phased, ch, prior, quad, 1), res0, atol=1e-10
        )
        np.testing.assert_allclose(
            oe.state_condition_residual(phased, ch, prior, quad, 1), s0, atol=1e-10
        )

        perm = [2, 0, 1]
        permuted = im.Strategy(
            initial=strat.initial, povm=qcore.Povm(strat.povm.elements[perm])
        )
        assert abs(im.mutual_information(permuted, ch, prior, quad, 1) - mi0) < 1e-10
        np.testing.assert_allclose(
            oe.povm_condition_residual(permuted, ch, prior, quad, 1),
            res0[np.ix_(perm, perm)],
            atol=1e-10,
        )
