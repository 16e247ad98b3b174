"""Exact sparse power series in s, t0, t1, ... with Laurent coefficients in u.

Every coefficient is a :class:`fractions.Fraction`, so all arithmetic is
exact.  The ring carries a rational grading with

    deg u = 0,    deg s = 2/3,    deg t_n = (2n + 1)/3.

To keep degree bookkeeping integral we store the *tripled* degree

    deg3(monomial) = 2*s_exp + sum_n (2n + 1) * t_exps[n]

which is a nonnegative integer.  A :class:`GradedSeries` is a finite map
from monomials to nonzero coefficients together with a truncation bound
``max_deg3``; every operation silently drops monomials above the bound,
and binary operations take the minimum of the two bounds.

Only u may carry negative exponents; s and the t variables are ordinary
power-series variables.

Series values are immutable after construction and safe to share between
threads; all operations are pure functions of their inputs.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Tuple, Union

Scalar = Union[int, Fraction]

__all__ = [
    "Monomial",
    "GradedSeries",
    "exp_series",
    "log1p_series",
    "serialize_series",
    "parse_series",
]


class Monomial:
    """One exponent vector: u^{u_exp} s^{s_exp} prod_n t_n^{e_n}.

    ``t_exps`` is a tuple of (index, exponent) pairs sorted by index with
    all exponents positive.  Monomials are immutable and hashable; the
    tripled degree is precomputed.
    """

    __slots__ = ("u_exp", "s_exp", "t_exps", "deg3", "_hash")

    def __init__(self, u_exp: int = 0, s_exp: int = 0,
                 t_exps: Iterable[Tuple[int, int]] = ()):
        t = tuple(sorted((n, e) for n, e in t_exps if e != 0))
        if s_exp < 0:
            raise ValueError("s exponent must be nonnegative")
        for n, e in t:
            if n < 0 or e < 0:
                raise ValueError(f"bad t factor t{n}^{e}")
        self.u_exp = u_exp
        self.s_exp = s_exp
        self.t_exps = t
        self.deg3 = 2 * s_exp + sum((2 * n + 1) * e for n, e in t)
        self._hash = hash((u_exp, s_exp, t))

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, Monomial)
                and self.u_exp == other.u_exp
                and self.s_exp == other.s_exp
                and self.t_exps == other.t_exps)

    def sort_key(self) -> tuple:
        """Canonical order: (deg3, u_exp, s_exp, lexicographic t_exps)."""
        return (self.deg3, self.u_exp, self.s_exp, self.t_exps)

    def mul(self, other: "Monomial") -> "Monomial":
        """Product of monomials; exponents add componentwise."""
        if not other.t_exps:
            t = self.t_exps
        elif not self.t_exps:
            t = other.t_exps
        else:
            merged = dict(self.t_exps)
            for n, e in other.t_exps:
                merged[n] = merged.get(n, 0) + e
            t = tuple(sorted(merged.items()))
        return _raw_monomial(self.u_exp + other.u_exp,
                             self.s_exp + other.s_exp, t)

    def shift_u(self, delta: int) -> "Monomial":
        return _raw_monomial(self.u_exp + delta, self.s_exp, self.t_exps)

    def shift_t(self, n: int, delta: int) -> "Monomial":
        """Add ``delta`` to the exponent of t_n (the result must stay >= 0)."""
        cur = dict(self.t_exps)
        new = cur.get(n, 0) + delta
        if new < 0:
            raise ValueError(f"t{n} exponent would become negative")
        if new == 0:
            cur.pop(n, None)
        else:
            cur[n] = new
        return _raw_monomial(self.u_exp, self.s_exp, tuple(sorted(cur.items())))

    def t_degree(self) -> int:
        """Total number of t factors counted with multiplicity."""
        return sum(e for _, e in self.t_exps)

    def __repr__(self) -> str:
        return f"Monomial({_format_factors(self) or '1'})"


def _raw_monomial(u_exp: int, s_exp: int,
                  t_exps: Tuple[Tuple[int, int], ...]) -> Monomial:
    # Fast path: trusts that t_exps is sorted with positive exponents.
    m = Monomial.__new__(Monomial)
    m.u_exp = u_exp
    m.s_exp = s_exp
    m.t_exps = t_exps
    m.deg3 = 2 * s_exp + sum((2 * n + 1) * e for n, e in t_exps)
    m._hash = hash((u_exp, s_exp, t_exps))
    return m


_UNIT = Monomial()


class GradedSeries:
    """A truncated series: finite map monomial -> nonzero Fraction.

    ``max_deg3`` is the truncation bound; the stored support never
    contains a monomial with deg3 above it, and zero coefficients are
    purged on construction so that the support is semantically meaningful.
    """

    __slots__ = ("_terms", "max_deg3")

    def __init__(self, terms: Mapping[Monomial, Scalar], max_deg3: int):
        if max_deg3 < 0:
            raise ValueError("max_deg3 must be nonnegative")
        kept = {}
        for mon, coeff in terms.items():
            if mon.deg3 > max_deg3 or coeff == 0:
                continue
            kept[mon] = coeff if isinstance(coeff, Fraction) else Fraction(coeff)
        self._terms = kept
        self.max_deg3 = max_deg3

    # -- constructors ------------------------------------------------

    @classmethod
    def zero(cls, max_deg3: int) -> "GradedSeries":
        return cls({}, max_deg3)

    @classmethod
    def one(cls, max_deg3: int) -> "GradedSeries":
        return cls({_UNIT: Fraction(1)}, max_deg3)

    @classmethod
    def term(cls, coeff: Scalar, monomial: Monomial, max_deg3: int) -> "GradedSeries":
        return cls({monomial: coeff}, max_deg3)

    # -- inspection --------------------------------------------------

    def items(self):
        return self._terms.items()

    def sorted_items(self) -> Iterator[Tuple[Monomial, Fraction]]:
        for mon in sorted(self._terms, key=Monomial.sort_key):
            yield mon, self._terms[mon]

    def coefficient(self, monomial: Monomial) -> Fraction:
        return self._terms.get(monomial, Fraction(0))

    def constant_term(self) -> Fraction:
        return self._terms.get(_UNIT, Fraction(0))

    def is_zero(self) -> bool:
        return not self._terms

    def support_size(self) -> int:
        return len(self._terms)

    def degrees(self) -> set:
        """The set of tripled degrees present in the support."""
        return {mon.deg3 for mon in self._terms}

    def __len__(self) -> int:
        return len(self._terms)

    def __eq__(self, other: object) -> bool:
        # Equality of content; the truncation bound is metadata.
        if isinstance(other, GradedSeries):
            return self._terms == other._terms
        return NotImplemented

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        body = " + ".join(
            f"{c}*{_format_factors(m) or '1'}" for m, c in list(self.sorted_items())[:6]
        )
        if len(self._terms) > 6:
            body += f" + ... ({len(self._terms)} terms)"
        return f"GradedSeries({body or '0'}, max_deg3={self.max_deg3})"

    # -- ring operations ----------------------------------------------

    def __add__(self, other: "GradedSeries") -> "GradedSeries":
        if not isinstance(other, GradedSeries):
            return NotImplemented
        bound = min(self.max_deg3, other.max_deg3)
        out = dict(self._terms)
        for mon, coeff in other._terms.items():
            cur = out.get(mon)
            if cur is None:
                out[mon] = coeff
            else:
                s = cur + coeff
                if s:
                    out[mon] = s
                else:
                    del out[mon]
        return _raw_series(
            {m: c for m, c in out.items() if m.deg3 <= bound}, bound)

    def __sub__(self, other: "GradedSeries") -> "GradedSeries":
        return self + (-other)

    def __neg__(self) -> "GradedSeries":
        return _raw_series({m: -c for m, c in self._terms.items()}, self.max_deg3)

    def __mul__(self, other):
        if isinstance(other, GradedSeries):
            return self._mul_series(other)
        return self.scaled(other)

    def __rmul__(self, other):
        return self.scaled(other)

    def __truediv__(self, scalar: Scalar) -> "GradedSeries":
        return self.scaled(Fraction(1, 1) / Fraction(scalar))

    def scaled(self, scalar: Scalar) -> "GradedSeries":
        c = scalar if isinstance(scalar, Fraction) else Fraction(scalar)
        if c == 0:
            return GradedSeries.zero(self.max_deg3)
        return _raw_series({m: c * v for m, v in self._terms.items()},
                           self.max_deg3)

    def _mul_series(self, other: "GradedSeries") -> "GradedSeries":
        bound = min(self.max_deg3, other.max_deg3)
        if len(other._terms) < len(self._terms):
            self, other = other, self
        right = sorted(other._terms.items(), key=lambda kv: kv[0].deg3)
        out: dict = {}
        for mon_a, ca in self._terms.items():
            room = bound - mon_a.deg3
            if room < 0:
                continue
            for mon_b, cb in right:
                if mon_b.deg3 > room:
                    break
                mon = mon_a.mul(mon_b)
                prod = ca * cb
                cur = out.get(mon)
                if cur is None:
                    out[mon] = prod
                else:
                    s = cur + prod
                    if s:
                        out[mon] = s
                    else:
                        del out[mon]
        return _raw_series(out, bound)

    def mul_monomial(self, monomial: Monomial, coeff: Scalar = 1) -> "GradedSeries":
        """Multiply the whole series by ``coeff * monomial``."""
        out = {}
        bound = self.max_deg3
        c0 = coeff if isinstance(coeff, Fraction) else Fraction(coeff)
        if c0 == 0:
            return GradedSeries.zero(bound)
        for mon, c in self._terms.items():
            new = mon.mul(monomial)
            if new.deg3 <= bound:
                out[new] = c * c0
        return _raw_series(out, bound)

    def mul_u_power(self, p: int) -> "GradedSeries":
        """Shift every monomial's u exponent by ``p`` (deg3 unchanged)."""
        if p == 0:
            return self
        return _raw_series(
            {m.shift_u(p): c for m, c in self._terms.items()}, self.max_deg3)

    # -- derivations ---------------------------------------------------

    def derivative_t(self, n: int) -> "GradedSeries":
        """Formal partial derivative in t_n; the zero operator for n < 0."""
        if n < 0:
            return GradedSeries.zero(self.max_deg3)
        out = {}
        for mon, c in self._terms.items():
            for idx, e in mon.t_exps:
                if idx == n:
                    out[mon.shift_t(n, -1)] = c * e
                    break
        return _raw_series(out, self.max_deg3)

    def derivative_s(self, order: int = 1) -> "GradedSeries":
        """``order``-fold formal derivative in s; order 0 is the identity."""
        if order < 0:
            raise ValueError("derivative order must be nonnegative")
        if order == 0:
            return self
        out = {}
        for mon, c in self._terms.items():
            b = mon.s_exp
            if b < order:
                continue
            fall = 1
            for i in range(order):
                fall *= b - i
            out[_raw_monomial(mon.u_exp, b - order, mon.t_exps)] = c * fall
        return _raw_series(out, self.max_deg3)

    # -- grading -------------------------------------------------------

    def component(self, deg3: int) -> "GradedSeries":
        """The homogeneous slice of tripled degree ``deg3``."""
        if deg3 < 0:
            raise ValueError("deg3 must be nonnegative")
        return _raw_series(
            {m: c for m, c in self._terms.items() if m.deg3 == deg3},
            self.max_deg3)

    def euler_deg3(self) -> "GradedSeries":
        """Scale each monomial by its tripled degree (thrice the Euler field)."""
        return _raw_series(
            {m: c * m.deg3 for m, c in self._terms.items() if m.deg3 != 0},
            self.max_deg3)

    def is_homogeneous(self, deg3: int) -> bool:
        return all(m.deg3 == deg3 for m in self._terms)

    def truncated(self, max_deg3: int) -> "GradedSeries":
        """Copy with a (usually lower) truncation bound."""
        if max_deg3 < 0:
            return GradedSeries.zero(0)
        return GradedSeries(self._terms, max_deg3)

    def t_free_part(self) -> "GradedSeries":
        """The sub-series of monomials containing no t factors (t = 0)."""
        return _raw_series(
            {m: c for m, c in self._terms.items() if not m.t_exps},
            self.max_deg3)


def _raw_series(terms: dict, max_deg3: int) -> GradedSeries:
    # Fast path: trusts that terms has no zeros and respects the bound.
    s = GradedSeries.__new__(GradedSeries)
    s._terms = terms
    s.max_deg3 = max_deg3
    return s


def _slices_by_degree(series: GradedSeries) -> dict:
    by_deg: dict = {}
    for mon, c in series.items():
        by_deg.setdefault(mon.deg3, {})[mon] = c
    return by_deg


def _convolve_into(acc: dict, left: dict, right: dict, weight: Fraction) -> None:
    for mon_a, ca in left.items():
        wa = ca * weight
        for mon_b, cb in right.items():
            mon = mon_a.mul(mon_b)
            cur = acc.get(mon)
            if cur is None:
                acc[mon] = wa * cb
            else:
                s = cur + wa * cb
                if s:
                    acc[mon] = s
                else:
                    del acc[mon]


def exp_series(f: GradedSeries) -> GradedSeries:
    """Formal exponential of a series with vanishing degree-0 part.

    Computed degree by degree from the grading identity
    ``D * exp(f)_D = sum_{E=1..D} E * f_E * exp(f)_{D-E}``, which keeps
    every coefficient exact.
    """
    if not f.component(0).is_zero():
        raise ValueError(
            "exp_series requires a zero degree-0 part, got "
            f"{f.component(0)!r}")
    bound = f.max_deg3
    f_by = _slices_by_degree(f)
    out_by = {0: {_UNIT: Fraction(1)}}
    for deg in range(1, bound + 1):
        acc: dict = {}
        for e_deg, f_slice in f_by.items():
            prev = out_by.get(deg - e_deg)
            if prev:
                _convolve_into(acc, f_slice, prev, Fraction(e_deg))
        if acc:
            out_by[deg] = {m: c / deg for m, c in acc.items()}
    total: dict = {}
    for chunk in out_by.values():
        total.update(chunk)
    return _raw_series(total, bound)


def log1p_series(z: GradedSeries) -> GradedSeries:
    """Formal logarithm of a series with degree-0 part exactly 1.

    Inverse of :func:`exp_series` through the truncation bound; uses the
    degree recursion ``F_D = z_D - (1/D) sum_{E=1..D-1} E * F_E * z_{D-E}``.
    """
    c0 = z.component(0)
    if not (c0.support_size() == 1 and c0.constant_term() == 1):
        raise ValueError(
            "log1p_series requires the degree-0 part to equal 1, got "
            f"{c0!r}")
    bound = z.max_deg3
    z_by = _slices_by_degree(z)
    out_by: dict = {}
    for deg in range(1, bound + 1):
        acc: dict = dict(z_by.get(deg, {}))
        for e_deg, f_slice in out_by.items():
            z_slice = z_by.get(deg - e_deg)
            if z_slice and deg - e_deg > 0:
                _convolve_into(acc, f_slice, z_slice, Fraction(-e_deg, deg))
        acc = {m: c for m, c in acc.items() if c}
        if acc:
            out_by[deg] = acc
    total: dict = {}
    for chunk in out_by.values():
        total.update(chunk)
    return _raw_series(total, bound)


# -- canonical text form ------------------------------------------------
#
# One term per line: "coeff * u^a s^b t0^e0 t5^e5 ...".  The coefficient
# is p/q in lowest terms with q omitted when 1; factors with exponent 0
# are omitted and "^1" is shortened to the bare factor name; lines are
# sorted in canonical monomial order.  The zero series is the empty file.


def _format_factors(mon: Monomial) -> str:
    parts = []
    if mon.u_exp:
        parts.append(f"u^{mon.u_exp}" if mon.u_exp != 1 else "u")
    if mon.s_exp:
        parts.append(f"s^{mon.s_exp}" if mon.s_exp != 1 else "s")
    for n, e in mon.t_exps:
        parts.append(f"t{n}^{e}" if e != 1 else f"t{n}")
    return " ".join(parts)


def serialize_series(series: GradedSeries) -> str:
    lines = []
    for mon, coeff in series.sorted_items():
        factors = _format_factors(mon)
        lines.append(f"{coeff} * {factors}" if factors else str(coeff))
    return "".join(line + "\n" for line in lines)


def _parse_factor(token: str) -> Tuple[str, int, int]:
    name, _, exp_text = token.partition("^")
    exp = int(exp_text) if exp_text else 1
    if name == "u":
        return ("u", 0, exp)
    if name == "s":
        return ("s", 0, exp)
    if name.startswith("t") and name[1:].isdigit():
        return ("t", int(name[1:]), exp)
    raise ValueError(f"unrecognized factor {token!r}")


def parse_series(text: str, max_deg3: int = None) -> GradedSeries:
    """Parse the canonical text form back into a series.

    ``max_deg3`` defaults to the largest degree present so that
    ``parse_series(serialize_series(x))`` reproduces the support of ``x``.
    """
    terms = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        coeff_text, star, factor_text = line.partition(" * ")
        try:
            coeff = Fraction(coeff_text.strip())
            u_exp, s_exp, t_exps = 0, 0, {}
            if star:
                for token in factor_text.split():
                    kind, idx, exp = _parse_factor(token)
                    if kind == "u":
                        u_exp += exp
                    elif kind == "s":
                        s_exp += exp
                    else:
                        t_exps[idx] = t_exps.get(idx, 0) + exp
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"line {lineno}: cannot parse {line!r}: {exc}") from None
        mon = Monomial(u_exp, s_exp, tuple(t_exps.items()))
        if mon in terms:
            raise ValueError(f"line {lineno}: duplicate monomial {mon!r}")
        terms[mon] = coeff
    if max_deg3 is None:
        max_deg3 = max((m.deg3 for m in terms), default=0)
    return GradedSeries(terms, max_deg3)
