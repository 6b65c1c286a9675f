import numpy as np
import pytest

from pndislo import solver, symbols
from pndislo.moduli import (derive_parallel, derive_perp, from_isotropic,
                            perp_from_parameters)

ISO = from_isotropic(1.0, 0.25)
DP = derive_perp(ISO)
DPAR = derive_parallel(ISO)
DP2 = perp_from_parameters(1.0, 0.25, 2.0)


def test_potential_well_conditions_enforced():
    with pytest.raises(ValueError):
        # W(1) != 0
        solver.Potential("bad", 1.0, lambda u: u * u + 1.0,
                         lambda u: 2 * u, lambda u: 2.0 + 0 * u)
    with pytest.raises(ValueError):
        # negative inside (-1, 1)
        solver.Potential("bad", 1.0, lambda u: u * u - 1.0,
                         lambda u: 2 * u, lambda u: 2.0 + 0 * u)
    with pytest.raises(ValueError):
        # W''(1) <= 0
        solver.Potential("bad", 1.0, lambda u: (1 - u * u) ** 3,
                         lambda u: -6 * u * (1 - u * u) ** 2,
                         lambda u: -6 * (1 - u * u) ** 2
                         + 24 * u * u * (1 - u * u))


def test_cosine_potential_shape():
    pot = solver.Potential.cosine(2.0)
    assert pot(0.0) == pytest.approx(4.0 / np.pi ** 2, rel=1e-14)
    assert pot.dw(0.5) == pytest.approx(-2.0 / np.pi, rel=1e-14)
    assert pot.d2w(1.0) == pytest.approx(2.0, rel=1e-14)


def test_custom_potential_from_table():
    # node spacing 0.02 puts the wells at exact interpolation nodes
    u = np.linspace(-1.2, 1.2, 121)
    pot = solver.Potential.custom(u, 0.25 * (1 - u * u) ** 2)
    assert pot(0.3) == pytest.approx(0.25 * (1 - 0.09) ** 2, abs=1e-6)


def test_symbol_at_direction_matches_symbols():
    assert solver.symbol_at_direction("I", DP2, 0.0) == pytest.approx(
        float(symbols.symbol_case1(DP2, 1.0, 0.0)), rel=1e-15)
    th = np.pi / 4
    assert solver.symbol_at_direction("II", DP2, th) == pytest.approx(
        float(symbols.symbol_case2(DP2, np.cos(th), np.sin(th))), rel=1e-15)
    with pytest.raises(ValueError):
        solver.symbol_at_direction("X", DP2, 0.0)


def test_arctan_oracle_is_exact_fixed_point():
    # cosine potential with amplitude m(e): psi = (2/pi) arctan(x) exactly
    sol = solver.solve_profile("II", DP, X=100.0, N=2048)
    assert sol.residual <= 1e-12
    assert np.max(np.abs(sol.psi - (2 / np.pi) * np.arctan(sol.x))) <= 1e-10
    assert sol.m_e == pytest.approx(2.0, rel=1e-14)   # 2 mu q k3^2/(q k3^2)
    assert sol.in_region is True


def test_solver_recovers_from_shifted_start():
    x = -100.0 + (np.arange(2048) + 0.5) * (200.0 / 2048)
    v0 = (2 / np.pi) * (np.arctan(x - 7.3) - np.arctan(x))
    sol = solver.solve_profile("II", DP, X=100.0, N=2048, v0=v0)
    assert sol.residual <= 1e-10
    assert np.max(np.abs(sol.psi - (2 / np.pi) * np.arctan(sol.x))) <= 1e-8


def test_quartic_profile_centered_and_odd():
    pot = solver.Potential.quartic(1.0)
    sol = solver.solve_profile("II", DP, potential=pot, X=100.0, N=2048)
    assert sol.residual <= 1e-10
    # odd about the cell center on the reflection-symmetric grid
    assert np.max(np.abs(sol.psi + sol.psi[::-1])) <= 1e-9
    assert np.max(np.abs(sol.psi)) < 1.0
    # strictly monotone in the bulk (boundary wrap layer excluded)
    bulk = np.abs(sol.x) <= 0.9 * sol.X
    assert np.all(np.diff(sol.psi[bulk.nonzero()[0]]) > 0.0)


def test_gradient_flow_agrees_with_newton():
    pot = solver.Potential.quartic(1.0)
    a = solver.solve_profile("II", DP, potential=pot, X=50.0, N=1024,
                             method="newton")
    b = solver.solve_profile("II", DP, potential=pot, X=50.0, N=1024,
                             method="gradient-flow")
    assert np.max(np.abs(a.psi - b.psi)) <= 1e-7


def test_cosine_oracle_monotone_everywhere():
    sol = solver.solve_profile("I", DP2, X=100.0, N=2048)
    assert np.all(np.diff(sol.psi) > 0.0)


def test_anisotropic_direction():
    sol = solver.solve_profile("I", DP2, theta=np.pi / 4, X=100.0, N=2048)
    assert sol.residual <= 1e-10
    e = np.cos(np.pi / 4)
    assert sol.m_e == pytest.approx(
        float(symbols.symbol_case1(DP2, e, e)), rel=1e-14)


def test_case3_profile():
    sol = solver.solve_profile("III", DPAR, X=100.0, N=2048)
    assert sol.residual <= 1e-12
    assert sol.m_e == pytest.approx(DPAR.eta1, rel=1e-14)  # e = (1, 0)
    assert sol.in_region is True


def test_solver_error_carries_history():
    with pytest.raises(solver.SolverError) as exc:
        solver.solve_profile("II", DP, potential=solver.Potential.quartic(),
                             X=50.0, N=1024, method="gradient-flow",
                             max_iter=3, tol_solve=1e-12)
    assert len(exc.value.history) > 0


def test_solver_input_validation():
    with pytest.raises(ValueError):
        solver.solve_profile("II", DP, theta=2.0)
    with pytest.raises(ValueError):
        solver.solve_profile("II", DP, method="bogus")


def test_stability_translation_mode_near_zero():
    sol = solver.solve_profile("II", DP, X=100.0, N=2048)
    vals = solver.check_stability(sol, n_eig=4)
    assert vals.shape == (4,)
    assert np.all(np.diff(vals) >= -1e-12)
    # discrete translation eigenvalue: zero up to the domain truncation
    assert abs(sol.lambda_min) <= 2e-4
    assert vals[1] > 0.5       # the rest of the spectrum is well separated
    assert abs(solver.rayleigh_translation(sol)) <= 2e-4


def test_reconstruct_2d_residual_small():
    sol = solver.solve_profile("II", DP, X=100.0, N=2048)
    fld, res = solver.reconstruct_2d(sol, n1=128, n2=128)
    assert res <= 1e-10
    assert fld.shape == (128, 128)
    # the slice along x1 reproduces the 1D profile shape
    mid = fld.values[:, 0]
    assert np.max(np.abs(np.diff(mid[32:96]) < 0)) == 0


def test_reconstruct_2d_rotated_direction():
    sol = solver.solve_profile("II", DP, theta=0.3, X=100.0, N=2048)
    _, res = solver.reconstruct_2d(sol, n1=128, n2=128)
    assert res <= 1e-6
