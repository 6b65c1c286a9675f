"""Kernel-positivity parameter regions and region scans.

Case I and II live in the (nu, delta) plane inside the ellipticity strip
0 < delta < 4, 1 - 2/delta < nu < 1/2; case III is a condition on the ratio
eta1/eta2 of the parallel-case coefficients.  Membership predicates use
strict inequalities; scans carry a third "boundary" state for cells adjacent
to a membership change so downstream comparisons can exclude the ambiguous
band.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .moduli import (ElasticConstants, derive_parallel, perp_from_parameters,
                     validate)


def in_ellipticity_strip(nu: float, delta: float) -> bool:
    return 0.0 < delta < 4.0 and 1.0 - 2.0 / delta < nu < 0.5


def in_region_case1(nu: float, delta: float) -> bool:
    """Closed-form positivity region of the case-I composite kernel."""
    if not in_ellipticity_strip(nu, delta):
        return False
    rd = math.sqrt(delta)
    lower = max(1.0 - 2.0 / delta,
                0.5 * rd * (2.0 * delta - 3.0)
                / (2.0 * delta * rd - 2.0 * rd + 1.0))
    upper = 2.0 / (4.0 - delta + math.sqrt(delta * delta + 8.0))
    return lower < nu < upper


def smallest_positive_root_rtilde(q: float):
    """Smallest positive real root of the membership quartic at parameter q.

    The quartic (descending powers) is
        -8(q-1) x^4 + (13 q^2 + 14 q - 11) x^3 + 2 q (q^2 - 18 q + 1) x^2
        + q^2 (-11 q^2 + 14 q + 13) x + 8 (q - 1) q^3.
    Roots come from the companion matrix; each real root is sharpened by
    bisection to 1e-12.  Returns None if no strictly positive real root.
    """
    if not 0.5 < q < 1.0:
        raise ValueError("r~ is defined for q in (1/2, 1)")
    coeffs = [-8.0 * (-1.0 + q),
              (-11.0 + 14.0 * q + 13.0 * q * q),
              2.0 * q * (1.0 - 18.0 * q + q * q),
              q * q * (13.0 + 14.0 * q - 11.0 * q * q),
              8.0 * (-1.0 + q) * q ** 3]
    roots = np.roots(coeffs)
    real = sorted(r.real for r in roots
                  if abs(r.imag) <= 1e-9 * (1.0 + abs(r)) and r.real > 1e-14)
    if not real:
        return None

    def f(x):
        return (((coeffs[0] * x + coeffs[1]) * x + coeffs[2]) * x
                + coeffs[3]) * x + coeffs[4]

    x = real[0]
    # bisection refinement on a bracket around the companion-matrix root
    lo, hi = x * (1.0 - 1e-6) - 1e-12, x * (1.0 + 1e-6) + 1e-12
    flo, fhi = f(lo), f(hi)
    if flo * fhi <= 0.0:
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            fm = f(mid)
            if fm == 0.0:
                lo = hi = mid
                break
            if flo * fm <= 0.0:
                hi, fhi = mid, fm
            else:
                lo, flo = mid, fm
            if hi - lo <= 1e-12 * max(1.0, abs(mid)):
                break
        x = 0.5 * (lo + hi)
    return float(x)


def _case2_conditions(p: float, q: float):
    """The three closed-form sign expressions; the third is active only on
    the branches where an interior critical angle exists (p <= 3q/4 or
    p >= 4q/3; vacuous on the band in between and singular at p = q)."""
    e1 = 2.0 * (2.0 * p * q - 2.0 * p + q) / q ** 2
    e2 = 2.0 * (p - 2.0 * q + 2.0) / p
    e3 = None
    if p != q and (p <= 0.75 * q or p >= 4.0 * q / 3.0):
        s = (p * p + q * q) ** 1.5
        e3 = ((q - 1.0) * (p ** 3 + q ** 3 + s)
              + 4.0 * (1.0 - p) * p * q * q) / (2.0 * p * (q - p) * q * q)
    return e1, e2, e3


def in_region_case2(nu: float, delta: float) -> bool:
    """Closed-form positivity region of the case-II kernel."""
    if not in_ellipticity_strip(nu, delta):
        return False
    p = delta * (2.0 * (1.0 - nu) - delta * (1.0 - 2.0 * nu))
    q = 1.0 - nu
    if p <= 0.0:
        return False
    e1, e2, e3 = _case2_conditions(p, q)
    if e1 <= 0.0 or e2 <= 0.0:
        return False
    return e3 is None or e3 > 0.0


def in_region_case3(ec: ElasticConstants) -> bool:
    """eta2 > 0 and 2/3 < eta1/eta2 < 3/2, strict."""
    if not validate(ec).valid:
        return False
    dpar = derive_parallel(ec)
    if dpar.eta2 <= 0.0:
        return False
    ratio = dpar.eta1 / dpar.eta2
    return 2.0 / 3.0 < ratio < 1.5


@dataclass
class RegionScan:
    """Row-major grid scan: closed-form membership, boundary flag, and the
    numeric kernel minimum over the unit circle per admissible cell."""

    region: str
    axis_names: tuple
    axis1: np.ndarray
    axis2: np.ndarray
    member: np.ndarray = field(repr=False)     # bool, shape (n1, n2)
    boundary: np.ndarray = field(repr=False)   # bool, shape (n1, n2)
    kmin: np.ndarray = field(repr=False)       # float (nan if inadmissible)

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("axis1,axis2,member,boundary,kmin\n")
            for i, a in enumerate(self.axis1):
                for j, b in enumerate(self.axis2):
                    fh.write(f"{a:.17g},{b:.17g},{int(self.member[i, j])},"
                             f"{int(self.boundary[i, j])},"
                             f"{self.kmin[i, j]:.17g}\n")


def _grid_kernel_min(kf, n_theta: int = 512) -> float:
    th = np.linspace(0.0, np.pi, n_theta, endpoint=False) + 0.5 * np.pi / n_theta
    return float(np.min(kf(np.cos(th), np.sin(th))))


def scan(region: str, axis1, axis2, mu: float = 1.0,
         n_theta: int = 512) -> RegionScan:
    """Scan a parameter grid; axes are (nu, delta) for cases I/II and
    (c11-like slice parameters) are not supported here beyond the ratio test
    for case III, which scans (mu_iso, nu_iso) of the isotropic embedding.

    Boundary cells are those whose closed-form membership differs from any
    of their 8 neighbors (one-cell ambiguous band).
    """
    axis1 = np.asarray(axis1, dtype=float)
    axis2 = np.asarray(axis2, dtype=float)
    if axis1.size < 2 or axis2.size < 2:
        raise ValueError("scan needs at least 2 cells per axis")
    n1, n2 = axis1.size, axis2.size
    member = np.zeros((n1, n2), dtype=bool)
    kmin = np.full((n1, n2), np.nan)

    for i, a in enumerate(axis1):
        for j, b in enumerate(axis2):
            if region in ("I", "II"):
                nu, delta = a, b
                if not in_ellipticity_strip(nu, delta):
                    continue
                member[i, j] = (in_region_case1(nu, delta) if region == "I"
                                else in_region_case2(nu, delta))
                dp = perp_from_parameters(mu, nu, delta)
                kf = (kernels.kernel_case1(dp) if region == "I"
                      else kernels.kernel_case2(dp))
                kmin[i, j] = _grid_kernel_min(kf, n_theta)
            elif region == "III":
                from .moduli import from_isotropic
                try:
                    ec = from_isotropic(a, b)
                except ValueError:
                    continue
                if not validate(ec).valid:
                    continue
                member[i, j] = in_region_case3(ec)
                kf = kernels.kernel_case3(derive_parallel(ec))
                kmin[i, j] = _grid_kernel_min(kf, n_theta)
            else:
                raise ValueError(f"unknown region {region!r}")

    admissible = np.isfinite(kmin)
    boundary = np.zeros_like(member)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == dj == 0:
                continue
            shifted = np.roll(np.roll(member, di, 0), dj, 1)
            adm_sh = np.roll(np.roll(admissible, di, 0), dj, 1)
            diff = (member != shifted) | (admissible != adm_sh)
            # roll wraps around; mask the wrapped edges
            if di == 1:
                diff[0, :] = False
            if di == -1:
                diff[-1, :] = False
            if dj == 1:
                diff[:, 0] = False
            if dj == -1:
                diff[:, -1] = False
            boundary |= diff
    axis_names = ("nu", "delta") if region in ("I", "II") else ("mu", "nu")
    return RegionScan(region=region, axis_names=axis_names, axis1=axis1,
                      axis2=axis2, member=member, boundary=boundary, kmin=kmin)
