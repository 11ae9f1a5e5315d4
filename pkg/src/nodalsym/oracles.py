"""Closed-form reference values: Bessel zeros, disk and rectangle spectra,
and a test-function upper bound for the second Neumann eigenvalue of the wheel."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

_SERIES_LIMIT = 12.0
_SCAN_STEP = 0.1


class BracketNotFound(RuntimeError):
    pass


def _series(k: int, x: float) -> float:
    half = 0.5 * x
    term = half**k / math.factorial(k)
    if term == 0.0:  # underflow for tiny x
        return 0.0
    terms = [term]
    q = -half * half
    m = 0
    while True:
        m += 1
        term *= q / (m * (m + k))
        terms.append(term)
        if abs(term) <= 1e-17 * abs(terms[0]) and m > half:
            break
    return math.fsum(terms)


def _miller(k: int, x: float) -> float:
    start = 2 * ((max(k, int(x)) + 20 + int(math.sqrt(40 * max(k, x)))) // 2)
    jp1, j = 0.0, 1e-30
    norm = 0.0
    want = 0.0
    for n in range(start, 0, -1):
        jm1 = 2.0 * n / x * j - jp1
        jp1, j = j, jm1
        if n - 1 == k:
            want = j
        if (n - 1) % 2 == 0 and n - 1 > 0:
            norm += 2.0 * j
        if abs(j) > 1e250:
            j *= 1e-250
            jp1 *= 1e-250
            norm *= 1e-250
            want *= 1e-250
    norm += j  # J_0 term
    return want / norm


def bessel_j(k: int, x: float) -> float:
    """Bessel function of the first kind ``J_k(x)`` for integer ``k >= 0``, ``x >= 0``."""
    if k < 0 or x < 0:
        raise ValueError("bessel_j needs k >= 0 and x >= 0")
    if x == 0.0:
        return 1.0 if k == 0 else 0.0
    if x <= max(_SERIES_LIMIT, 2 * k):
        return _series(k, x)
    return _miller(k, x)


def bessel_jp(k: int, x: float) -> float:
    """``J_k'(x) = (J_{k-1}(x) - J_{k+1}(x)) / 2``, with ``J_0' = -J_1``."""
    if k == 0:
        return -bessel_j(1, x)
    return 0.5 * (bessel_j(k - 1, x) - bessel_j(k + 1, x))


def _bisect(f, lo: float, hi: float, flo: float) -> float:
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bessel_deriv_zeros(k: int, x_max: float) -> list[float]:
    """All zeros of ``J_k'`` in ``(0, x_max)``, plus 0 for ``k = 0`` (the constant mode)."""
    f = lambda x: bessel_jp(k, x)  # noqa: E731
    out = [0.0] if k == 0 else []
    x0 = _SCAN_STEP
    f0 = f(x0)
    while x0 < x_max:
        x1 = x0 + _SCAN_STEP
        f1 = f(x1)
        if f0 == 0.0:
            out.append(x0)
        elif f0 * f1 < 0:
            out.append(_bisect(f, x0, x1, f0))
        x0, f0 = x1, f1
    return out


def bessel_deriv_zero(k: int, m: int, x_max: float = 100.0) -> float:
    """The ``m``-th zero ``j'_{k,m}`` of ``J_k'``, using ``j'_{0,1} = 0``."""
    if k < 0 or m < 1:
        raise ValueError("need k >= 0 and m >= 1")
    if k == 0 and m == 1:
        return 0.0
    f = lambda x: bessel_jp(k, x)  # noqa: E731
    found = 1 if k == 0 else 0
    x0 = _SCAN_STEP
    f0 = f(x0)
    while x0 < x_max:
        x1 = x0 + _SCAN_STEP
        f1 = f(x1)
        if f0 * f1 < 0 or f0 == 0.0:
            found += 1
            if found == m:
                return x0 if f0 == 0.0 else _bisect(f, x0, x1, f0)
        x0, f0 = x1, f1
    raise BracketNotFound(f"j'_{{{k},{m}}} not bracketed below x={x_max}")


@dataclass(frozen=True)
class DiskMode:
    k: int
    m: int
    zero: float
    mu: float

    @property
    def multiplicity(self) -> int:
        return 1 if self.k == 0 else 2

    @property
    def parity(self) -> str:
        # rotation by pi multiplies e^{ik theta} by (-1)^k
        return "even" if self.k % 2 == 0 else "odd"


def disk_spectrum(radius: float, count: int) -> list[DiskMode]:
    """Lowest ``count`` Neumann eigenvalues of a disk, repeated by multiplicity."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    x_max = 8.0
    while True:
        modes = []
        k = 0
        while True:
            zs = bessel_deriv_zeros(k, x_max)
            if not zs:
                break
            modes += [DiskMode(k, m + 1, z, (z / radius) ** 2) for m, z in enumerate(zs)]
            k += 1
        if sum(md.multiplicity for md in modes) >= count:
            break
        x_max *= 1.5
    modes.sort(key=lambda md: (md.mu, md.k))
    out = []
    for md in modes:
        out += [md] * md.multiplicity
    return out[:count]


class RectangleMode(NamedTuple):
    mu: float
    parity: str
    m: int
    n: int


def rectangle_spectrum(a: float, b: float, count: int) -> list[RectangleMode]:
    """Lowest ``count`` Neumann eigenvalues of ``(-a, a) x (-b, b)``.

    Modes are ``cos``/``sin`` products with ``mu = (m pi / 2a)^2 + (n pi / 2b)^2``;
    the mode is even under ``x -> -x`` iff ``m + n`` is even.
    """
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    # the count smallest modes all have m, n <= count
    modes = [
        RectangleMode((m * math.pi / (2 * a)) ** 2 + (n * math.pi / (2 * b)) ** 2,
                      "even" if (m + n) % 2 == 0 else "odd", m, n)
        for m in range(count + 1)
        for n in range(count + 1)
    ]
    modes.sort(key=lambda md: (md.mu, md.m, md.n))
    return modes[:count]


@dataclass(frozen=True)
class Step1Bound:
    r1: float
    r2: float
    r3: float
    eps: float
    hub_level: float
    tire_level: float
    numerator: float
    denominator: float

    @property
    def value(self) -> float:
        return self.numerator / self.denominator


def step1_upper_bound(r1: float, r2: float, r3: float, eps: float) -> Step1Bound:
    """Rayleigh quotient of the hub/tire step function on the wheel.

    The test function equals ``1/|hub|`` on the hub, ``-1/|tire|`` on the
    tire and interpolates linearly in ``r`` across both passages (total
    opening angle ``4 eps``). All passage integrals are evaluated exactly
    and the mean is removed, so the result bounds ``mu_2`` from above.
    """
    if not 0 < r1 < r2 < r3:
        raise ValueError("need 0 < r1 < r2 < r3")
    if not 0 < eps < math.pi / 4:
        raise ValueError("need 0 < eps < pi/4")
    hub = math.pi * r1**2
    tire = math.pi * (r3**2 - r2**2)
    c_hub, c_tire = 1.0 / hub, 1.0 / tire
    slope = -(c_hub + c_tire) / (r2 - r1)
    offset = c_hub - slope * r1
    width = 4.0 * eps

    def moment(p):
        return (r2**p - r1**p) / p

    grad2 = width * slope**2 * moment(2)
    int_phi = width * (offset * moment(2) + slope * moment(3))
    int_phi2 = c_hub**2 * hub + c_tire**2 * tire + width * (
        offset**2 * moment(2) + 2 * offset * slope * moment(3) + slope**2 * moment(4))
    area = hub + tire + width * moment(2)
    return Step1Bound(r1, r2, r3, eps, c_hub, c_tire, grad2, int_phi2 - int_phi**2 / area)


def bound_grid(r1: float, r2: float, r3: float, eps_values) -> np.ndarray:
    return np.array([step1_upper_bound(r1, r2, r3, e).value for e in eps_values])
