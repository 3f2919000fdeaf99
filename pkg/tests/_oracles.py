"""Independent numerical oracles for the test suite.

Everything here is deliberately self-contained: Bessel functions come from
their power series and zeros from bisection, so eigenvalue checks never
share code with the solvers (or with scipy.special).
"""

import math


def bessel_j_series(nu: int, x: float, terms: int = 60) -> float:
    """J_nu(x) for integer nu >= 0 by the ascending power series."""
    half = 0.5 * x
    term = half ** nu / math.factorial(nu)
    total = term
    for k in range(1, terms):
        term *= -(half * half) / (k * (k + nu))
        total += term
    return total


def _bisect(f, lo, hi, iters=200):
    flo = f(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bessel_zero(nu: int, n: int) -> float:
    """n-th positive zero of J_nu, located by scanning + bisection."""
    f = lambda x: bessel_j_series(nu, x)
    found = []
    x = 0.05
    step = 0.05
    prev = f(x)
    while len(found) < n:
        x += step
        cur = f(x)
        if (cur > 0) != (prev > 0):
            found.append(_bisect(f, x - step, x))
        prev = cur
        if x > 200:
            raise RuntimeError("zero scan ran away")
    return found[n - 1]


def spherical_bessel_zero(l: int, n: int) -> float:
    """n-th positive zero of the spherical function j_l via its series.

    j_l(x) = sqrt(pi/(2x)) J_{l+1/2}(x); the series is rebuilt with gamma
    factors so no half-integer factorials are needed.
    """

    def j_l(x):
        half = 0.5 * x
        # J_{l+1/2}(x) series with Gamma(k + l + 3/2)
        total = 0.0
        term = half ** (l + 0.5) / math.gamma(l + 1.5)
        total = term
        for k in range(1, 80):
            term *= -(half * half) / (k * (k + l + 0.5))
            total += term
        return math.sqrt(math.pi / (2 * x)) * total

    found = []
    x = 0.05
    step = 0.05
    prev = j_l(x)
    while len(found) < n:
        x += step
        cur = j_l(x)
        if (cur > 0) != (prev > 0):
            found.append(_bisect(j_l, x - step, x))
        prev = cur
        if x > 200:
            raise RuntimeError("zero scan ran away")
    return found[n - 1]


def harmonic_multiplicity(k: int, m: int) -> int:
    """Dimension of degree-k spherical harmonics on S^{m-1} by the
    homogeneous-polynomial count C(m+k-1, k) - C(m+k-3, k-2)."""
    def comb(n, r):
        if r < 0 or n < 0 or r > n:
            return 0
        return math.comb(n, r)

    return comb(m + k - 1, k) - comb(m + k - 3, k - 2)


def second_derivative(f, x: float, h: float = 1e-4) -> float:
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)


def first_derivative(f, x: float, h: float = 1e-5) -> float:
    return (f(x + h) - f(x - h)) / (2.0 * h)
