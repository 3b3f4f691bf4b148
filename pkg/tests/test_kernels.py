import numpy as np
import pytest

from pulse_squeeze.charfun import char_of_state, propagate_char
from pulse_squeeze.decomposition import decompose_output_mode, pullback_rows
from pulse_squeeze.grids import DegenerateModeError, inner_product
from pulse_squeeze.kernels import (
    BogoliubovKernels,
    apply_to_mode,
    compose,
    ideal_squeezer_kernels,
    identity_kernels,
    load_kernels,
    pullback_output_mode,
    renormalize_symplectic,
    save_kernels,
    verify_symplectic,
)
from pulse_squeeze.states import coherent_state

from conftest import random_mode


class TestIdentity:
    def test_transports_any_mode(self, grid, u_mode):
        k = identity_kernels(grid)
        fu, gu = apply_to_mode(k, u_mode)
        assert np.allclose(fu, u_mode.amplitudes)
        assert np.abs(gu).max() == 0.0
        pb = pullback_output_mode(k, u_mode)
        assert pb.zeta == pytest.approx(1.0, abs=1e-12)
        assert pb.xi == 0.0
        assert np.allclose(pb.f.amplitudes, u_mode.amplitudes)

    def test_symplectic_exact(self, grid):
        rep = verify_symplectic(identity_kernels(grid))
        assert rep.commutator_residual == 0.0
        assert rep.pairing_residual == 0.0

    def test_left_identity_of_compose(self, grid, opo_kernels):
        composed = compose(identity_kernels(grid), opo_kernels)
        scale = np.abs(opo_kernels.F).max()
        assert np.abs(composed.F - opo_kernels.F).max() < 1e-12 * scale
        assert np.abs(composed.G - opo_kernels.G).max() < 1e-12 * scale


class TestIdealSqueezer:
    def test_zero_squeeze_is_identity(self, grid, u_mode):
        k = ideal_squeezer_kernels(grid, u_mode, 0.0)
        ident = identity_kernels(grid)
        assert np.allclose(k.F, ident.F)
        assert np.allclose(k.G, ident.G)

    def test_seeded_coefficients(self, grid, u_mode):
        k = ideal_squeezer_kernels(grid, u_mode, 1.0)
        pb = pullback_output_mode(k, u_mode)
        assert pb.zeta == pytest.approx(np.cosh(1.0), abs=1e-9)
        assert pb.xi == pytest.approx(np.sinh(1.0), abs=1e-9)
        assert abs(inner_product(pb.f, u_mode)) == pytest.approx(1.0, abs=1e-10)
        assert abs(inner_product(pb.g, u_mode)) == pytest.approx(1.0, abs=1e-10)

    def test_vacuum_mean_photon_number(self, grid, u_mode):
        # <a^dag a> of the seeded mode after squeezing vacuum is sinh^2(r)
        k = ideal_squeezer_kernels(grid, u_mode, 1.0)
        dt = grid.dt
        vac = dt * (k.G @ k.G.conj().T)
        occupation = np.real(np.trace(vac)) * dt
        assert occupation == pytest.approx(np.sinh(1.0) ** 2, rel=1e-9)

    def test_orthogonal_modes_pass_through(self, grid, u_mode):
        rng = np.random.default_rng(0)
        from pulse_squeeze.grids import orthogonal_complement

        w, _ = orthogonal_complement(random_mode(grid, rng), [u_mode])
        k = ideal_squeezer_kernels(grid, u_mode, 1.3)
        pb = pullback_output_mode(k, w)
        assert pb.zeta == pytest.approx(1.0, abs=1e-9)
        assert pb.xi == 0.0


class TestCompose:
    def test_squeeze_parameters_add(self, grid, u_mode):
        k1 = ideal_squeezer_kernels(grid, u_mode, 0.6)
        k2 = ideal_squeezer_kernels(grid, u_mode, 0.9)
        pb = pullback_output_mode(compose(k2, k1), u_mode)
        assert pb.zeta == pytest.approx(np.cosh(1.5), abs=1e-9)
        assert pb.xi == pytest.approx(np.sinh(1.5), abs=1e-9)

    def test_associativity(self, grid, u_mode, opo_kernels):
        a = opo_kernels
        b = ideal_squeezer_kernels(grid, u_mode, 0.5)
        c = identity_kernels(grid)
        lhs = compose(a, compose(b, c))
        rhs = compose(compose(a, b), c)
        scale = np.abs(lhs.F).max()
        assert np.abs(lhs.F - rhs.F).max() < 1e-8 * scale
        assert np.abs(lhs.G - rhs.G).max() < 1e-8 * scale

    def test_residuals_bounded_under_composition(self, grid, u_mode, opo_kernels):
        b = ideal_squeezer_kernels(grid, u_mode, 0.7)
        ra = verify_symplectic(opo_kernels).max_residual
        rb = verify_symplectic(b).max_residual
        rc = verify_symplectic(compose(opo_kernels, b)).max_residual
        assert rc <= ra + rb + 1e-8

    def test_state_level_two_stage_oracle(self, grid, u_mode, opo_kernels):
        """chi through compose(X, Y) equals chi chained through Y then X."""
        x = opo_kernels
        y = ideal_squeezer_kernels(grid, u_mode, 0.4)
        rng = np.random.default_rng(7)
        v = random_mode(grid, rng, envelope_center=2.0)
        state = coherent_state(1.2, 40)
        chi_u = char_of_state(state)

        d_tot = decompose_output_mode(compose(x, y), u_mode, v)
        chi_single = propagate_char(d_tot, chi_u)

        # stage 1: v through x over an intermediate orthonormal family
        family_x, P1, Q1 = pullback_rows(x, [v], u_mode)
        # stage 2: each intermediate mode through y over the final family
        family_y, P2, Q2 = pullback_rows(y, family_x, u_mode)

        def chi_two_stage(beta):
            beta = np.asarray(beta, dtype=complex)
            mus = [
                beta * np.conj(P1[0, e]) - np.conj(beta) * Q1[0, e]
                for e in range(len(family_x))
            ]
            out = np.ones_like(beta)
            for g in range(len(family_y)):
                nu = np.zeros_like(beta)
                for j, mu in enumerate(mus):
                    nu = nu + mu * np.conj(P2[j, g]) - np.conj(mu) * Q2[j, g]
                if g == 0:
                    out = out * chi_u(nu)
                else:
                    out = out * np.exp(-0.5 * np.abs(nu) ** 2)
            return out

        pts = rng.normal(size=40).view(complex) * 1.5
        assert np.abs(chi_single(pts) - chi_two_stage(pts)).max() < 1e-8


class TestVerifySymplectic:
    def test_squeezer_analytic(self, grid, u_mode):
        rep = verify_symplectic(ideal_squeezer_kernels(grid, u_mode, 2.0))
        assert rep.max_residual < 1e-10

    def test_detects_corruption(self, grid, opo_kernels):
        clean = verify_symplectic(opo_kernels).max_residual
        F = opo_kernels.F.copy()
        F[0, 1] += 0.1
        bad = BogoliubovKernels(grid, F, opo_kernels.G)
        residual = verify_symplectic(bad).max_residual
        assert residual > 1e-4
        assert residual > 1e3 * clean

    def test_dispersive_kernels_unitary(self, grid):
        from pulse_squeeze.devices import GaussianPump, OpoParams, build_opo

        k = build_opo(OpoParams(0.4, 1.0, GaussianPump(0.0, 0.0, 0.5)), grid)
        assert np.abs(k.G).max() == 0.0
        dt = grid.dt
        delta = np.eye(grid.n_points) / dt
        residual = np.linalg.norm(dt * (k.F @ k.F.conj().T) - delta)
        assert residual / np.linalg.norm(delta) < 1e-6


class TestPullback:
    def test_commutator_identity_for_device(self, grid, opo_kernels):
        rng = np.random.default_rng(8)
        for _ in range(20):
            v = random_mode(grid, rng, envelope_center=rng.uniform(-2, 6))
            pb = pullback_output_mode(opo_kernels, v)
            assert pb.zeta**2 - pb.xi**2 == pytest.approx(1.0, abs=1e-6)

    def test_phases_carried_by_modes(self, grid, u_mode, opo_kernels):
        rng = np.random.default_rng(9)
        v = random_mode(grid, rng)
        pb = pullback_output_mode(opo_kernels, v)
        assert pb.zeta > 0
        assert pb.xi >= 0
        assert pb.f.norm == pytest.approx(1.0, abs=1e-10)
        if pb.g is not None:
            assert pb.g.norm == pytest.approx(1.0, abs=1e-10)

    def test_zero_zeta_rejected(self, grid, u_mode):
        n = grid.n_points
        bad = BogoliubovKernels(grid, np.zeros((n, n)), np.zeros((n, n)))
        with pytest.raises(DegenerateModeError):
            pullback_output_mode(bad, u_mode)


def test_serialization_round_trip(tmp_path, opo_kernels):
    path = tmp_path / "kernels.npz"
    save_kernels(path, opo_kernels)
    loaded = load_kernels(path)
    assert loaded.grid == opo_kernels.grid
    assert np.array_equal(loaded.F, opo_kernels.F)
    assert np.array_equal(loaded.G, opo_kernels.G)


def test_renormalize_restores_commutator(grid, opo_kernels):
    rng = np.random.default_rng(10)
    drift = 1e-4 * rng.normal(size=opo_kernels.F.shape) / grid.dt
    drifted = BogoliubovKernels(grid, opo_kernels.F * (1 + 1e-4) + drift * 0, opo_kernels.G)
    assert verify_symplectic(drifted).commutator_residual > 1e-5
    fixed = renormalize_symplectic(drifted)
    assert verify_symplectic(fixed).commutator_residual < 1e-12
