"""Special functions and exact coefficients of the inversion ODEs.

Combinatorial quantities are returned as :class:`fractions.Fraction` (or
plain ``int``) so that identities can be checked with zero tolerance;
floating point only enters in the evaluators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Mapping

import numpy as np

Rational = Fraction


def binom(a: int, b: int, convention: str = "zero") -> int:
    """Binomial coefficient for integer arguments.

    Parameters
    ----------
    a, b : int
    convention : {"zero", "extended"}
        ``"zero"``: C(a, b) = 0 whenever b < 0 or b > a (or a < 0).
        ``"extended"``: the standard continuation to negative upper index,
        C(a, b) = (-1)^b C(b-a-1, b) for a < 0 <= b and
        C(a, b) = (-1)^(a-b) C(-b-1, a-b) for b <= a < 0; zero otherwise.
        The two agree whenever a >= 0.
    """
    if convention == "extended" and a < 0:
        if b >= 0:
            return (-1) ** b * math.comb(b - a - 1, b)
        if b <= a:
            return (-1) ** (a - b) * math.comb(-b - 1, a - b)
        return 0
    if convention not in ("zero", "extended"):
        raise ValueError(f"unknown binomial convention {convention!r}")
    if b < 0 or a < 0 or b > a:
        return 0
    return math.comb(a, b)


def surface_area(m: int) -> float:
    """Surface area of the unit sphere S^m in R^(m+1)."""
    if m < 0:
        raise ValueError(f"sphere dimension must be >= 0, got {m}")
    return 2.0 * math.pi ** ((m + 1) / 2) / math.gamma((m + 1) / 2)


def _check_odd_dim(n: int):
    if n < 3 or n % 2 == 0:
        raise ValueError(f"dimension must be an odd integer >= 3, got {n}")


# --------------------------------------------------------------------------
# Gegenbauer polynomials and spherical harmonics


def gegenbauer(q: int, lam: float, x):
    """C_q^lam(x) from the three-term recurrence."""
    if q < 0:
        raise ValueError("degree must be >= 0")
    if lam <= 0:
        raise ValueError(f"Gegenbauer parameter must be positive, got {lam}")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if q == 0:
        return prev if prev.ndim else float(prev)
    cur = 2.0 * lam * x
    for j in range(2, q + 1):
        prev, cur = cur, (2.0 * x * (j + lam - 1) * cur - (j + 2 * lam - 2) * prev) / j
    return cur if cur.ndim else float(cur)


def gegenbauer_at_one(q: int, n: int) -> Fraction:
    """C_q^{(n-2)/2}(1) = (n-3+q)! / ((n-3)! q!) as an exact rational."""
    _check_odd_dim(n)
    if q < 0:
        raise ValueError("degree must be >= 0")
    return Fraction(math.factorial(n - 3 + q), math.factorial(n - 3) * math.factorial(q))


def harmonic_count(q: int, n: int) -> int:
    """Dimension of the degree-q spherical harmonics on S^(n-1)."""
    _check_odd_dim(n)
    if q < 0:
        raise ValueError("degree must be >= 0")
    if q == 0:
        return 1
    num = (2 * q + n - 2) * math.factorial(n + q - 3)
    den = math.factorial(q) * math.factorial(n - 2)
    return num // den


def _normalized_legendre(q: int, m: int, x):
    """sqrt((2q+1)/(4 pi) (q-m)!/(q+m)!) P_q^m(x), without Condon-Shortley phase."""
    x = np.asarray(x, dtype=float)
    somx2 = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    # seed P_m^m with the normalisation folded in to keep magnitudes moderate
    pmm = np.full_like(x, math.sqrt(1.0 / (4 * math.pi)))
    for i in range(1, m + 1):
        pmm = pmm * math.sqrt((2 * i + 1) / (2 * i)) * somx2
    if q == m:
        return pmm
    pmm1 = math.sqrt(2 * m + 3) * x * pmm
    if q == m + 1:
        return pmm1
    for ll in range(m + 2, q + 1):
        a = math.sqrt((4 * ll * ll - 1) / (ll * ll - m * m))
        b = math.sqrt(((ll - 1) ** 2 - m * m) / (4 * (ll - 1) ** 2 - 1))
        pmm, pmm1 = pmm1, a * (x * pmm1 - b * pmm)
    return pmm1


def real_sph_harm(q: int, s: int, theta, phi):
    """Real orthonormal spherical harmonic Y_{q,s} on S^2.

    ``theta`` is the polar angle, ``phi`` the azimuth. The index
    s = 1..2q+1 maps to the order m = s - 1 - q: negative m use sin(|m| phi),
    m = 0 is zonal, positive m use cos(m phi). So Y_{1,2} is proportional
    to cos(theta).
    """
    if q < 0:
        raise ValueError("degree must be >= 0")
    if not 1 <= s <= 2 * q + 1:
        raise ValueError(f"index s={s} out of range 1..{2 * q + 1} for degree {q}")
    m = s - 1 - q
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    plm = _normalized_legendre(q, abs(m), np.cos(theta))
    if m == 0:
        out = plm * np.ones_like(phi)
    elif m > 0:
        out = math.sqrt(2.0) * plm * np.cos(m * phi)
    else:
        out = math.sqrt(2.0) * plm * np.sin(-m * phi)
    return out if np.ndim(out) else float(out)


def mode_indices(q_max: int) -> list[tuple[int, int]]:
    """All (q, s) pairs on S^2 with q <= q_max, in canonical order."""
    return [(q, s) for q in range(q_max + 1) for s in range(1, 2 * q + 2)]


# --------------------------------------------------------------------------
# the D = t^{-1} d/dt calculus


def d_weights(r: int) -> list[Fraction]:
    """Weights w_{r,j}, j = 1..r, with D^r f = sum_j w_{r,j} f^(j)(t) / t^(2r-j)."""
    if r < 1:
        raise ValueError(f"D power must be >= 1, got {r}")
    out = []
    for j in range(1, r + 1):
        num = (-1) ** (r - j) * math.factorial(2 * r - 1 - j)
        den = 2 ** (r - j) * math.factorial(r - j) * math.factorial(j - 1)
        out.append(Fraction(num, den))
    return out


def tl_terms(l: int, p: int) -> list[tuple[Fraction, int, int]]:
    """Expansion of D^l {(1-t)^(p+1) / t} as (coefficient, power of 1-t, power of 1/t)."""
    if l < 0 or p < 0:
        raise ValueError("l and p must be >= 0")
    terms = []
    for s in range(l + 1):
        coef = (-1) ** l * math.factorial(l) * Fraction(binom(p + 1, l - s) * binom(l + s, s), 2**s)
        if coef:
            terms.append((coef, p - l + s + 1, l + s + 1))
    return terms


def coeff_E(n: int, m: int, l: int) -> Fraction:
    """Closed form E_{n,m,l} = (l-1)!/(2^(n-m) m!) C(l+1, n+2) C(l-1+n-m, n-m)."""
    if l < 1 or not 0 <= m <= n:
        raise ValueError(f"need l >= 1 and 0 <= m <= n, got n={n}, m={m}, l={l}")
    return Fraction(
        math.factorial(l - 1) * binom(l + 1, n + 2) * binom(l - 1 + n - m, n - m),
        2 ** (n - m) * math.factorial(m),
    )


def coeff_E_sum(n: int, m: int, l: int) -> Fraction:
    """E_{n,m,l} from the Leibniz-rule double sum before the Abel-Aigner step (m >= 1)."""
    if m < 1 or l < 1 or n < m:
        raise ValueError(f"need 1 <= m <= n and l >= 1, got n={n}, m={m}, l={l}")
    total = Fraction(0)
    for p in range(m, n + 1):
        total += Fraction(
            math.factorial(l - 1) * math.factorial(2 * p - 1 - m)
            * binom(l + 1, l - 1 - n) * binom(l - 1 + n - 2 * p, n - p),
            math.factorial(p) * 2 ** (n - m) * math.factorial(p - m) * math.factorial(m - 1),
        )
    return total


def inner_sum_check(k: int, l: int, convention: str = "zero") -> tuple[int, int]:
    """Both sides of the inner-sum identity that collapses the j-sum.

    LHS = sum_{j=0}^{k-l} 2^(k-j) (2j)! (k-j)! / j! C(k-1+j, k-1-j),
    RHS = 2^l (2k-l)! / (k-l)!.

    For k >= 1 every binomial has a non-negative upper index, so the
    convention is irrelevant. At k = l = 0 the single term is C(-1, -1):
    0 under the zero convention (identity fails), 1 under the extended one
    (identity holds).
    """
    if not 0 <= l <= k:
        raise ValueError(f"need 0 <= l <= k, got k={k}, l={l}")
    lhs = Fraction(0)
    for j in range(k - l + 1):
        lhs += Fraction(
            2 ** (k - j) * math.factorial(2 * j) * math.factorial(k - j),
            math.factorial(j),
        ) * binom(k - 1 + j, k - 1 - j, convention)
    rhs = Fraction(2**l * math.factorial(2 * k - l), math.factorial(k - l))
    return lhs, rhs


# --------------------------------------------------------------------------
# inversion ODE coefficients


@dataclass(frozen=True)
class CoeffTable:
    """Exact coefficients c(m, n, l) of the order-K inversion ODE.

    The coefficient of the m-th derivative (evaluated at 1 - t) is
    ``prefactor * sum_{n,l} c(m,n,l) (1-t)^(n+1) / t^(l+n-m)``.
    """

    K: int
    terms: Mapping[tuple[int, int, int], Fraction]

    def __getitem__(self, key):
        return self.terms[key]

    def laurent(self, m: int, prefactor: Fraction = Fraction(1)) -> dict[tuple[int, int], Fraction]:
        """Coefficient of y^(m) as {(power of 1-t, power of 1/t): value}."""
        out: dict[tuple[int, int], Fraction] = {}
        for (mm, n, l), c in self.terms.items():
            if mm == m:
                key = (n + 1, l + n - m)
                out[key] = out.get(key, Fraction(0)) + prefactor * c
        return {k: v for k, v in out.items() if v}

    def to_dict(self, q: int | None = None, k: int | None = None) -> dict:
        data = {
            "K": self.K,
            "prefactor_radial": _frac_json(radial_prefactor(self.K)),
            "entries": [
                {"m": m, "n": n, "l": l, "num": c.numerator, "den": c.denominator}
                for (m, n, l), c in sorted(self.terms.items())
            ],
        }
        if q is not None and k is not None:
            data["prefactor_mode"] = {"q": q, "k": k, **_frac_json(mode_prefactor(q, k))}
        return data


def _frac_json(x: Fraction) -> dict:
    return {"num": x.numerator, "den": x.denominator}


@lru_cache(maxsize=None)
def ode_coeffs(K: int) -> CoeffTable:
    """Exact ODE coefficients 2^(l+m-n) (2K-l)!/((K-l)! m!) C(l+1,n+1) C(l+n-m,n-m)."""
    if K < 0:
        raise ValueError(f"ODE order must be >= 0, got {K}")
    terms = {}
    for m in range(K + 1):
        for n in range(m, K + 1):
            for l in range(n, K + 1):
                val = Fraction(2) ** (l + m - n) * Fraction(
                    math.factorial(2 * K - l) * binom(l + 1, n + 1) * binom(l + n - m, n - m),
                    math.factorial(K - l) * math.factorial(m),
                )
                terms[(m, n, l)] = val
    return CoeffTable(K, terms)


def radial_prefactor(k: int) -> Fraction:
    """(-1)^k k! 4^k for the radial equation of order k = (n-3)/2."""
    return Fraction((-1) ** k * math.factorial(k) * 4**k)


def mode_prefactor(q: int, k: int) -> Fraction:
    """(-1)^(q+k) k! / 2^q for the (q, s) mode equation."""
    return Fraction((-1) ** (q + k) * math.factorial(k), 2**q)


def ode_coeff_eval(table: CoeffTable, m: int, t, prefactor=Fraction(1)):
    """a_m(t) = prefactor * sum_{n=m}^K sum_{l=n}^K c(m,n,l) (1-t)^(n+1) / t^(l+n-m).

    Rational ``t`` and ``prefactor`` give an exact Fraction; floats or arrays
    give floating point.
    """
    if not 0 <= m <= table.K:
        raise ValueError(f"derivative index {m} outside 0..{table.K}")
    exact = isinstance(t, (Fraction, int)) and isinstance(prefactor, (Fraction, int))
    if exact:
        if not 0 < t < 1:
            raise ValueError("t must lie in (0, 1)")
        total = Fraction(0)
        for (pw1, pwt), c in table.laurent(m).items():
            total += c * (1 - t) ** pw1 / Fraction(t) ** pwt
        return prefactor * total
    tt = np.asarray(t, dtype=float)
    if np.any(tt <= 0) or np.any(tt >= 1):
        raise ValueError("t must lie in (0, 1)")
    total = np.zeros_like(tt)
    for (pw1, pwt), c in table.laurent(m).items():
        total = total + float(c) * (1 - tt) ** pw1 / tt**pwt
    out = float(prefactor) * total
    return out if np.ndim(out) else float(out)
