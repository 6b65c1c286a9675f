import json
import math

import numpy as np
import pytest

from pndislo import extension
from pndislo.moduli import (ElasticConstants, from_isotropic,
                            perp_from_parameters, perp_to_constants)
from pndislo.nonlocal_ops import GridField2D

ISO = from_isotropic(1.0, 0.25)
ANISO = ElasticConstants(3.0, 1.0, 2.5, 1.2, 0.8)   # complex parallel roots
# anisotropic material satisfying the perpendicular-case special condition
# (delta = C66/C44 = 2)
PERP2 = perp_to_constants(perp_from_parameters(1.0, 0.25, 2.0))

MATERIALS = [("perp", ISO, 0.7, -1.2), ("perp", ISO, 1.0, 0.0),
             ("parallel", ISO, 0.5, 0.5), ("parallel", ANISO, 1.3, 0.4),
             ("perp", PERP2, 0.9, 1.1)]


@pytest.mark.parametrize("orientation,ec,k1,k2", MATERIALS)
def test_propagator_identity_at_zero(orientation, ec, k1, k2):
    sys = extension.build_halfspace(orientation, ec, k1, k2)
    assert np.max(np.abs(sys.bplus(0.0) - np.eye(3))) <= 1e-12
    assert np.max(np.abs(sys.bminus(0.0) - np.eye(3))) <= 1e-12


@pytest.mark.parametrize("orientation,ec,k1,k2", MATERIALS)
def test_conjugate_reflection_identity(orientation, ec, k1, k2):
    # the growing-mode propagator at -x equals the complex conjugate of the
    # decaying-mode propagator at +x (real-coefficient ODE)
    sys = extension.build_halfspace(orientation, ec, k1, k2)
    for xn in (0.4, 1.7):
        assert np.max(np.abs(sys.bminus(-xn) - np.conj(sys.bplus(xn)))) \
            <= 1e-12


def test_propagator_decays():
    sys = extension.build_halfspace("perp", ISO, 1.0, 0.5)
    n1 = np.linalg.norm(sys.bplus(1.0))
    n4 = np.linalg.norm(sys.bplus(4.0))
    assert n4 < n1 < np.linalg.norm(sys.bplus(0.0)) + 1e-12
    # asymptotic slope matches the smallest decay rate; the generalized-mode
    # polynomial prefactor contributes O(1/x), so compare deep and correct
    # for the x e^(-rx) factor by fitting log(norm/x)
    xs = np.array([20.0, 24.0, 28.0])
    ln = np.log([np.linalg.norm(sys.bplus(x)) / x for x in xs])
    slope = -np.polyfit(xs, ln, 1)[0]
    r_min = float(np.min(np.abs(sys.eigvals.real)))
    assert slope == pytest.approx(r_min, rel=1e-2)


def test_build_halfspace_validation():
    with pytest.raises(ValueError):
        extension.build_halfspace("perp", ISO, 0.0, 0.0)
    with pytest.raises(ValueError):
        extension.build_halfspace("perp",
                                  ElasticConstants(3, 5, 3, 1, 1), 1.0, 0.0)
    with pytest.raises(ValueError):
        extension.build_halfspace("sideways", ISO, 1.0, 0.0)


def _single_mode_field(orientation="perp", ec=None, m=2, n=16,
                       L=2 * np.pi, x_max=4.0, h=0.1):
    ec = ISO if ec is None else ec

    def f(x, y):
        return np.cos(m * x) + 0.0 * y

    ua = GridField2D.from_function(L, L, n, n, f)
    ub = GridField2D.from_function(L, L, n, n, lambda x, y: 0.0 * x * y)
    steps = int(round(x_max / h))
    xn = np.concatenate([-h * np.arange(1, steps + 1)[::-1],
                         h * np.arange(0, steps + 1)])
    return extension.extend(orientation, ec, ua, ub, xn)


def test_extension_interior_residual_small():
    fld = _single_mode_field()
    assert extension.interior_residual(fld) <= 1e-6


def test_extension_boundary_values_match():
    fld = _single_mode_field()
    i0 = np.nonzero(fld.x_normal == 0.0)[0][0]
    a, b = fld.slip_axes()
    assert fld.u[0, i0] == pytest.approx(
        np.cos(2 * a)[:, None] * np.ones_like(b)[None, :], abs=1e-12)


def test_extension_decay_rate():
    # mode along the second slip axis: u1 decouples and decays at exactly
    # r1 = sqrt(k3^2/delta) without a polynomial prefactor
    ec = PERP2
    fld = _single_mode_field(
        orientation="perp", ec=ec, m=2, x_max=4.0)
    # vary along axis b instead: rebuild with the cosine on the second axis
    n, L = 16, 2 * np.pi
    ua = GridField2D.from_function(L, L, n, n,
                                   lambda x, y: np.cos(2 * y) + 0.0 * x)
    ub = GridField2D.from_function(L, L, n, n, lambda x, y: 0.0 * x * y)
    fld = extension.extend("perp", ec, ua, ub, fld.x_normal)
    deep = fld.x_normal > 2.0
    amp = np.max(np.abs(fld.u[0][deep]), axis=(1, 2))
    rate = -np.polyfit(fld.x_normal[deep], np.log(amp), 1)[0]
    assert rate == pytest.approx(np.sqrt(2.0), rel=1e-10)   # k3^2/delta = 2


def test_extension_mirror_symmetry():
    # u(-x) = J u(+x) with J = diag(-1, 1, -1) for the "perp" orientation
    fld = _single_mode_field()
    xs = fld.x_normal
    J = np.diag([-1.0, 1.0, -1.0])
    for xv in (0.5, 1.5):
        ip = np.nonzero(np.isclose(xs, xv))[0][0]
        im = np.nonzero(np.isclose(xs, -xv))[0][0]
        mirrored = np.einsum("ab,bij->aij", J, fld.u[:, ip])
        assert fld.u[:, im] == pytest.approx(mirrored, abs=1e-12)


def test_normal_closure_zeroes_plane_stress():
    # sigma_nn(0+) = 0 at the mode level, machine precision
    c11, c13, c33, c44, c66 = ISO.astuple()
    for k1, k3 in [(2.0, 0.0), (0.0, 2.0), (1.0, -1.5)]:
        sys = extension.build_halfspace("perp", ISO, k1, k3)
        ua, ub = 1.0 + 0.4j, -0.3 + 0.0j
        u2 = extension.normal_closure(sys, ISO, ua, ub)
        D = sys.dbplus0()
        u = np.array([ua, u2, ub])
        s22 = ((c11 - 2 * c66) * 1j * k1 * ua + c13 * 1j * k3 * ub
               + c11 * (D[1] @ u))
        assert abs(s22) <= 1e-12 * max(abs(c11 * (D[1] @ u)), 1.0)


def test_energy_density_nonnegative():
    # density = (1/2) eps : C : eps >= 0 by positive definiteness, for any
    # (even FD-approximate) strain field
    fld = _single_mode_field()
    _, stress, density = extension.stress_strain(fld)
    scale = float(np.max(np.abs(stress)))
    assert np.min(density) >= -1e-12 * scale


def test_stress_strain_uniaxial_oracle():
    # linear displacement u1 = s x1 on a non-periodic check is not available
    # on the slip grid, so probe the constitutive table directly through a
    # uniform normal gradient: u2 = s * x2 ("perp": normal axis is x2)
    s = 1e-3
    n, nn = 16, 21
    xn = np.linspace(-1.0, 1.0, nn)
    u = np.zeros((3, nn, n, n))
    u[1] = s * xn[:, None, None]
    fld = extension.Field3D("perp", 2 * np.pi, 2 * np.pi, xn, u, ec=ISO)
    strain, stress, density = extension.stress_strain(fld)
    c11, c13, c12 = ISO.c11, ISO.c13, ISO.c11 - 2 * ISO.c66
    mid = slice(2, nn - 2)
    assert strain[1, 1, mid] == pytest.approx(s * np.ones((nn - 4, n, n)),
                                              rel=1e-10)
    assert stress[1, 1, mid] == pytest.approx(c11 * s, rel=1e-10)
    assert stress[0, 0, mid] == pytest.approx(c12 * s, rel=1e-10)
    assert stress[2, 2, mid] == pytest.approx(c13 * s, rel=1e-10)
    assert density[mid] == pytest.approx(0.5 * c11 * s * s, rel=1e-10)


def test_stress_strain_rigid_translation_is_stress_free():
    u = np.ones((3, 11, 16, 16)) * np.array([0.3, -1.0, 2.0])[:, None,
                                                              None, None]
    fld = extension.Field3D("parallel", 1.0, 1.0,
                            np.linspace(-0.5, 0.5, 11), u, ec=ISO)
    _, stress, density = extension.stress_strain(fld)
    assert np.max(np.abs(stress)) <= 1e-12
    assert np.max(np.abs(density)) <= 1e-15


def test_parallel_orientation_extension():
    fld = _single_mode_field(orientation="parallel", ec=ANISO)
    assert extension.interior_residual(fld) <= 1e-4
    # jump convention for "parallel": J = diag(-1, -1, 1)
    xs = fld.x_normal
    ip = np.nonzero(np.isclose(xs, 1.0))[0][0]
    im = np.nonzero(np.isclose(xs, -1.0))[0][0]
    J = np.diag([-1.0, -1.0, 1.0])
    assert fld.u[:, im] == pytest.approx(
        np.einsum("ab,bij->aij", J, fld.u[:, ip]), abs=1e-10)


def test_extend_rejects_mismatched_boundaries():
    ua = GridField2D.from_function(1.0, 1.0, 16, 16, lambda x, y: x * 0)
    ub = GridField2D.from_function(1.0, 1.0, 32, 32, lambda x, y: x * 0)
    with pytest.raises(ValueError):
        extension.extend("perp", ISO, ua, ub, np.linspace(-1, 1, 21))


def test_field3d_tofile_round_trip(tmp_path):
    fld = _single_mode_field(x_max=1.0)
    pb, ph = tmp_path / "f.bin", tmp_path / "f.json"
    fld.tofile(pb, ph)
    header = json.loads(ph.read_text())
    assert header["dims"] == list(fld.u.shape)
    assert header["component_order"] == ["u1", "u2", "u3"]
    raw = np.fromfile(pb, dtype="<f8").reshape(fld.u.shape)
    assert raw == pytest.approx(fld.u, abs=0.0)
