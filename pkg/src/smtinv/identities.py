"""Identity checks behind the inversion formula.

Two suites:

* an exact suite over rationals (coefficient closed forms, the
  inner-sum collapse, the Laurent form of the ODE coefficients);
* a numeric suite that evaluates the moments
  G_{i,j}(t) = int_{1-t}^1 u f(u) Q(t,u)^i (u^2 + 1 - t^2)^j du
  for a Gaussian profile and checks the differential relations between
  them, with D = t^{-1} d/dt.

First-order relations use double-precision quadrature and a five-point
finite difference; identities involving higher powers of D are evaluated
in extended precision with :mod:`mpmath`, where finite differences of
order four are still well conditioned.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import mpmath

from .forward import g_moments
from .phantoms import gaussian
from .specfun import (
    coeff_E,
    coeff_E_sum,
    d_weights,
    gegenbauer,
    gegenbauer_at_one,
    inner_sum_check,
    mode_prefactor,
    ode_coeff_eval,
    ode_coeffs,
    radial_prefactor,
    tl_terms,
)

FD_STEP = 1e-4
FD_TOL = 1e-5
MP_TOL = 1e-4
MP_DPS = 20
T_SAMPLES = (0.3, 0.45, 0.6, 0.75)


@dataclass
class IdentityCheck:
    suite: str
    identity: str
    index: dict
    lhs: str
    rhs: str
    error: float
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _exact(identity: str, index: dict, lhs, rhs) -> IdentityCheck:
    return IdentityCheck("exact", identity, index, str(lhs), str(rhs),
                         float(abs(Fraction(lhs) - Fraction(rhs))), 0.0, lhs == rhs)


def _numeric(suite: str, identity: str, index: dict, lhs, rhs, tol: float) -> IdentityCheck:
    lhs, rhs = float(lhs), float(rhs)
    scale = max(abs(lhs), abs(rhs))
    err = abs(lhs - rhs) / scale if scale > 0 else 0.0
    return IdentityCheck(suite, identity, index, repr(lhs), repr(rhs), err, tol, err <= tol)


# --------------------------------------------------------------------------
# exact suite


def abel_aigner_checks(max_l: int) -> list[IdentityCheck]:
    """Closed form of E_{n,m,l} against its defining double sum, 1 <= m <= n <= l <= max_l."""
    out = []
    for l in range(1, max_l + 1):
        for n in range(1, l + 1):
            for m in range(1, n + 1):
                out.append(_exact("abel-aigner", {"n": n, "m": m, "l": l},
                                  coeff_E_sum(n, m, l), coeff_E(n, m, l)))
    return out


def inner_sum_checks(max_k: int, min_k: int = 0, convention: str = "extended") -> list[IdentityCheck]:
    """Inner-sum collapse for min_k <= k <= max_k and 0 <= l <= k.

    The default extended binomial convention coincides with the zero
    convention for every k >= 1 and is what makes the k = 0 case hold;
    under the zero convention the (k, l) = (0, 0) case fails (0 vs 1).
    """
    out = []
    name = "inner-sum" if convention == "extended" else f"inner-sum[{convention}]"
    for k in range(min_k, max_k + 1):
        for l in range(k + 1):
            lhs, rhs = inner_sum_check(k, l, convention)
            out.append(_exact(name, {"k": k, "l": l}, lhs, rhs))
    return out


def p0l_checks(max_l: int) -> list[IdentityCheck]:
    """P_{0,l} assembled from E_{n,0,l} equals D^(l-1){(1-t)^(l+1)/t}, as Laurent polynomials."""
    out = []
    for l in range(1, max_l + 1):
        from_e: dict[tuple[int, int], Fraction] = {}
        for n in range(l):
            c = coeff_E(n, 0, l)
            if c:
                key = (n + 2, n + l)
                from_e[key] = from_e.get(key, Fraction(0)) + c
        from_t: dict[tuple[int, int], Fraction] = {}
        for c, p1, pt in tl_terms(l - 1, l):
            from_t[(p1, pt)] = from_t.get((p1, pt), Fraction(0)) + c
        # the lemma carries a factor (-1)^(l-1) in front of P_{0,l}
        from_t = {key: (-1) ** (l - 1) * v for key, v in from_t.items() if v}
        from_e = {key: v for key, v in from_e.items() if v}
        out.append(IdentityCheck("exact", "P0l-laurent", {"l": l}, _laurent_str(from_e),
                                 _laurent_str(from_t), 0.0 if from_e == from_t else 1.0, 0.0,
                                 from_e == from_t))
    return out


def _laurent_str(terms: dict) -> str:
    return " + ".join(f"({v})(1-t)^{a}/t^{b}" for (a, b), v in sorted(terms.items())) or "0"


def leading_coefficient_checks(max_K: int, t: Fraction = Fraction(2, 5)) -> list[IdentityCheck]:
    """a_K(t) = prefactor 2^K (1-t)^(K+1) / t^K exactly, radial prefactor."""
    out = []
    for K in range(max_K + 1):
        pref = radial_prefactor(K)
        lhs = ode_coeff_eval(ode_coeffs(K), K, t, pref)
        rhs = pref * 2**K * (1 - t) ** (K + 1) / t**K
        out.append(_exact("leading-coefficient", {"K": K, "t": str(t)}, lhs, rhs))
    return out


def prefactor_checks(max_k: int) -> list[IdentityCheck]:
    """At q = 0 the two prefactors differ exactly by the 4^k in the radial h scaling."""
    return [
        _exact("prefactor-q0", {"k": k}, radial_prefactor(k), mode_prefactor(0, k) * 4**k)
        for k in range(max_k + 1)
    ]


def gegenbauer_checks(max_q: int) -> list[IdentityCheck]:
    out = []
    for n in (3, 5, 7):
        for q in range(max_q + 1):
            out.append(_numeric("numeric", "gegenbauer-at-one", {"q": q, "n": n},
                                gegenbauer(q, (n - 2) / 2, 1.0), gegenbauer_at_one(q, n), 1e-10))
    return out


def exact_suite(max_k: int = 8, max_q: int = 2) -> list[IdentityCheck]:
    """All zero-tolerance checks up to index ``max_k`` (and ODE order max_k + max_q)."""
    checks = []
    checks += abel_aigner_checks(max_k)
    checks += inner_sum_checks(max_k)
    checks += inner_sum_checks(max_k, min_k=1, convention="zero")
    checks += p0l_checks(min(max_k, 6))
    checks += leading_coefficient_checks(max_k + max_q)
    checks += prefactor_checks(max_k)
    return checks


# --------------------------------------------------------------------------
# numeric suite, double precision


def _fd1(func, t: float, h: float = FD_STEP) -> float:
    """Five-point central first derivative."""
    return (func(t - 2 * h) - 8 * func(t - h) + 8 * func(t + h) - func(t + 2 * h)) / (12 * h)


def relation_checks(max_index: int, f=None, t_values=T_SAMPLES) -> list[IdentityCheck]:
    """The first-order relations between G_{i,j} for indices up to ``max_index``."""
    if max_index < 1:
        return []
    f = gaussian() if f is None else f

    def G(i, j):
        return lambda t: float(g_moments(i, j, f, t))

    def DG(i, j, t):
        return _fd1(G(i, j), t) / t

    def T(j, t):
        return (1 - t) ** (j + 1) * float(f(1 - t)) / t

    out = []
    for t in t_values:
        out.append(_numeric("numeric", "dG00", {"t": t}, _fd1(G(0, 0), t),
                            (1 - t) * float(f(1 - t)), FD_TOL))
        for i in range(1, max_index + 1):
            out.append(_numeric("numeric", "DGi0", {"i": i, "t": t}, DG(i, 0, t),
                                4 * i * G(i - 1, 1)(t), FD_TOL))
            for j in range(1, max_index + 1):
                rhs = 4 * i * G(i - 1, j + 1)(t) - 2 * j * G(i, j - 1)(t)
                out.append(_numeric("numeric", "DGij", {"i": i, "j": j, "t": t},
                                    DG(i, j, t), rhs, FD_TOL))
        for j in range(1, max_index + 1):
            rhs = 2**j * T(j, t) - 2 * j * G(0, j - 1)(t)
            out.append(_numeric("numeric", "DG0j", {"j": j, "t": t}, DG(0, j, t), rhs, FD_TOL))
    return out


# --------------------------------------------------------------------------
# numeric suite, extended precision


class _MpGaussianMoments:
    """G_{i,j}(t) for a Gaussian profile evaluated with mpmath quadrature."""

    def __init__(self, center=0.5, width=0.05, amplitude=0.5):
        self.c = mpmath.mpf(center)
        self.w = mpmath.mpf(width)
        self.a = mpmath.mpf(amplitude)
        self._cache: dict = {}

    def f(self, u):
        return self.a * mpmath.exp(-((u - self.c) ** 2) / (2 * self.w**2))

    def G(self, i: int, j: int, t):
        key = (i, j, t, mpmath.mp.prec)
        if key not in self._cache:
            self._cache[key] = self._G(i, j, t)
        return self._cache[key]

    def _G(self, i: int, j: int, t):
        lo = 1 - t
        pts = [lo] + [p for p in (self.c - 4 * self.w, self.c, self.c + 4 * self.w)
                      if lo < p < 1] + [mpmath.mpf(1)]

        def integrand(u):
            q = ((1 + t) ** 2 - u * u) * (u * u - (1 - t) ** 2)
            return u * self.f(u) * q**i * (u * u + 1 - t * t) ** j

        return mpmath.quad(integrand, pts, method="gauss-legendre")

    def DG(self, r: int, i: int, j: int, t):
        """D^r G_{i,j} at t via the weighted-derivative expansion."""
        if r == 0:
            return self.G(i, j, t)
        ders = list(mpmath.diffs(lambda s: self.G(i, j, s), t, r))
        return sum(mpmath.mpf(w.numerator) / w.denominator * ders[jj] / t ** (2 * r - jj)
                   for jj, w in enumerate(d_weights(r), start=1))


def lemma_gmr_checks(max_r: int, max_m: int, t_values=(0.45, 0.6)) -> list[IdentityCheck]:
    """sum_l 2^(2l) r!/(l!(r-2l)!) (m+r)!/(m+r-l)! D^(r-2l) G_{m+r-l,0} = 4^r (m+1)...(m+r) G_{m,r}."""
    out = []
    with mpmath.workdps(MP_DPS):
        mom = _MpGaussianMoments()
        for t in t_values:
            tt = mpmath.mpf(t)
            for r in range(1, max_r + 1):
                for m in range(max_m + 1):
                    lhs = mpmath.mpf(0)
                    for l in range(r // 2 + 1):
                        c = Fraction(4**l * math.factorial(r) * math.factorial(m + r),
                                     math.factorial(l) * math.factorial(r - 2 * l)
                                     * math.factorial(m + r - l))
                        lhs += int(c) * mom.DG(r - 2 * l, m + r - l, 0, tt)
                    rhs = 4**r * math.prod(range(m + 1, m + r + 1)) * mom.G(m, r, tt)
                    out.append(_numeric("numeric", "lemma-Gmr", {"r": r, "m": m, "t": t},
                                        lhs, rhs, MP_TOL))
    return out


def d2k_theorem_checks(max_k: int, t_values=(0.45, 0.6)) -> list[IdentityCheck]:
    """D^(2k) h_k = k! 4^k sum_j (-1)^j (k-1+j)!/((k-1-j)! j!) D^(k-j) G_{0,k-j}."""
    out = []
    with mpmath.workdps(MP_DPS):
        mom = _MpGaussianMoments()
        for t in t_values:
            tt = mpmath.mpf(t)
            for k in range(1, max_k + 1):
                lhs = mom.DG(2 * k, k, 0, tt)
                rhs = mpmath.mpf(0)
                for j in range(k):
                    c = (-1) ** j * math.factorial(k - 1 + j) // (
                        math.factorial(k - 1 - j) * math.factorial(j))
                    rhs += c * mom.DG(k - j, 0, k - j, tt)
                rhs *= math.factorial(k) * 4**k
                out.append(_numeric("numeric", "D2k-hk", {"k": k, "t": t}, lhs, rhs, MP_TOL))
    return out


def numeric_suite(max_k: int = 2, max_q: int = 2) -> list[IdentityCheck]:
    """Relations up to index max_k + 1, the G_{m,r} lemma for r <= max_k + 1 and
    m <= max_k, the D^(2k) h_k theorem for k <= max_k. Empty for max_k = 0."""
    if max_k < 1:
        return []
    checks = relation_checks(max_k + 1)
    checks += lemma_gmr_checks(max_k + 1, max_k)
    checks += d2k_theorem_checks(max_k)
    checks += gegenbauer_checks(max_q)
    return checks


def summarize(checks: list[IdentityCheck]) -> dict:
    by_identity: dict[str, dict] = {}
    for c in checks:
        entry = by_identity.setdefault(c.identity, {"count": 0, "failed": 0, "max_error": 0.0})
        entry["count"] += 1
        entry["failed"] += int(not c.passed)
        entry["max_error"] = max(entry["max_error"], c.error)
    return {
        "passed": all(c.passed for c in checks),
        "count": len(checks),
        "identities": by_identity,
        "checks": [c.to_dict() for c in checks],
    }

