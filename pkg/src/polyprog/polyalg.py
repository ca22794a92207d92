"""Exact sparse multivariate integer polynomials and arithmetic modulo primes.

A :class:`MultiPoly` maps exponent tuples to non-zero integer coefficients.
Terms are kept in graded lexicographic order so that printing, hashing and
equality are deterministic.  Modular work (gcd, coprimality) goes through a
dense recursive representation over ``F_p``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ArgumentError

NEG_INFINITY = -math.inf

Exponent = tuple[int, ...]


def _grlex_key(exp: Exponent):
    return (sum(exp), exp)


class MultiPoly:
    """Immutable polynomial in ``nvars`` indeterminates with integer coefficients."""

    __slots__ = ("nvars", "_terms", "_hash")

    def __init__(self, nvars: int, terms: Mapping[Exponent, int] | None = None):
        if nvars < 0:
            raise ArgumentError("nvars must be non-negative")
        clean: dict[Exponent, int] = {}
        for exp, c in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != nvars:
                raise ArgumentError(f"exponent {exp} does not have length {nvars}")
            if any(e < 0 for e in exp):
                raise ArgumentError(f"negative exponent in {exp}")
            c = int(c)
            if c:
                clean[exp] = clean.get(exp, 0) + c
                if clean[exp] == 0:
                    del clean[exp]
        self.nvars = nvars
        self._terms = dict(sorted(clean.items(), key=lambda kv: _grlex_key(kv[0]), reverse=True))
        self._hash = None

    # constructors
    @classmethod
    def zero(cls, nvars: int) -> "MultiPoly":
        return cls(nvars)

    @classmethod
    def const(cls, nvars: int, c: int) -> "MultiPoly":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def var(cls, nvars: int, i: int) -> "MultiPoly":
        if not 0 <= i < nvars:
            raise ArgumentError(f"variable index {i} out of range for {nvars} variables")
        exp = [0] * nvars
        exp[i] = 1
        return cls(nvars, {tuple(exp): 1})

    @classmethod
    def from_coeffs(cls, coeffs: Sequence[int], nvars: int = 1, var: int = 0) -> "MultiPoly":
        """Univariate constructor: ``coeffs[k]`` is the coefficient of ``x_var^k``."""
        terms = {}
        for k, c in enumerate(coeffs):
            exp = [0] * nvars
            exp[var] = k
            terms[tuple(exp)] = c
        return cls(nvars, terms)

    # basic views
    @property
    def terms(self) -> dict[Exponent, int]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(sum(e) == 0 for e in self._terms)

    def constant_term(self) -> int:
        return self._terms.get((0,) * self.nvars, 0)

    def total_degree(self):
        if not self._terms:
            return NEG_INFINITY
        return max(sum(e) for e in self._terms)

    def degree_in(self, i: int):
        if not self._terms:
            return NEG_INFINITY
        return max(e[i] for e in self._terms)

    def variables(self) -> list[int]:
        """Indices of variables that actually occur."""
        return [i for i in range(self.nvars) if any(e[i] for e in self._terms)]

    def coeffs_in(self, i: int) -> dict[int, "MultiPoly"]:
        """Split ``P = sum_k C_k x_i^k``; each ``C_k`` keeps ``nvars`` with ``x_i`` absent."""
        out: dict[int, dict] = {}
        for exp, c in self._terms.items():
            k = exp[i]
            rest = exp[:i] + (0,) + exp[i + 1:]
            out.setdefault(k, {})[rest] = c
        return {k: MultiPoly(self.nvars, t) for k, t in sorted(out.items())}

    def content(self) -> int:
        g = 0
        for c in self._terms.values():
            g = math.gcd(g, c)
        return g

    # arithmetic
    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if other.nvars != self.nvars:
                raise ArgumentError(f"nvars mismatch: {self.nvars} vs {other.nvars}")
            return other
        if isinstance(other, (int, np.integer)):
            return MultiPoly.const(self.nvars, int(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        t = dict(self._terms)
        for e, c in other._terms.items():
            t[e] = t.get(e, 0) + c
        return MultiPoly(self.nvars, t)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(self.nvars, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        t: dict[Exponent, int] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                t[e] = t.get(e, 0) + c1 * c2
        return MultiPoly(self.nvars, t)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ArgumentError("negative powers are not polynomials")
        result = MultiPoly.const(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, (int, np.integer)):
            other = MultiPoly.const(self.nvars, int(other))
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.nvars == other.nvars and self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, tuple(self._terms.items())))
        return self._hash

    def exact_div_int(self, d: int) -> "MultiPoly":
        if d == 0:
            raise ZeroDivisionError("division by zero")
        for c in self._terms.values():
            if c % d:
                raise ArgumentError(f"coefficient {c} not divisible by {d}")
        return MultiPoly(self.nvars, {e: c // d for e, c in self._terms.items()})

    # composition and evaluation
    def substitute(self, mapping: Mapping[int, "MultiPoly"] | Sequence["MultiPoly"], nvars: int | None = None) -> "MultiPoly":
        """Compose: replace ``x_i`` by ``mapping[i]``.

        With a dict, unmapped variables must keep their meaning, so every image
        must share this polynomial's ``nvars``.  With a full sequence the images
        may live in a different ring of ``nvars`` variables.
        """
        if isinstance(mapping, Mapping):
            images = []
            for i in range(self.nvars):
                img = mapping.get(i)
                if img is None:
                    img = MultiPoly.var(self.nvars, i)
                images.append(img)
        else:
            images = list(mapping)
            if len(images) != self.nvars:
                raise ArgumentError("substitution sequence must give one image per variable")
        if nvars is None:
            nvars = images[0].nvars if images else 0
        for img in images:
            if img.nvars != nvars:
                raise ArgumentError("substitution images disagree on nvars")
        powers: dict[tuple[int, int], MultiPoly] = {}

        def pw(i, k):
            key = (i, k)
            if key not in powers:
                powers[key] = images[i] ** k
            return powers[key]

        result = MultiPoly.zero(nvars)
        for exp, c in self._terms.items():
            term = MultiPoly.const(nvars, c)
            for i, k in enumerate(exp):
                if k:
                    term = term * pw(i, k)
            result = result + term
        return result

    def evaluate(self, point: Sequence[int]) -> int:
        if len(point) != self.nvars:
            raise ArgumentError("point has wrong dimension")
        total = 0
        for exp, c in self._terms.items():
            v = c
            for x, k in zip(point, exp):
                if k:
                    v *= x ** k
            total += v
        return total

    def evaluate_mod_grid(self, p: int, axes: Sequence[np.ndarray]) -> np.ndarray:
        """Values mod ``p`` on the product grid ``axes[0] x ... x axes[D-1]``.

        Axes hold residues in ``[0, p)``; the result has shape
        ``tuple(len(a) for a in axes)``.  Intermediate products stay below
        ``p**2`` so int64 is safe for any ``p < 3e9``.
        """
        shape = tuple(len(a) for a in axes)
        out = np.zeros(shape, dtype=np.int64)
        pows: dict[tuple[int, int], np.ndarray] = {}
        for exp, c in self._terms.items():
            term = np.full(shape, c % p, dtype=np.int64)
            for i, k in enumerate(exp):
                if not k:
                    continue
                key = (i, k)
                if key not in pows:
                    base = np.asarray(axes[i], dtype=np.int64) % p
                    acc = np.ones_like(base)
                    for _ in range(k):
                        acc = (acc * base) % p
                    pows[key] = acc
                bshape = [1] * len(shape)
                bshape[i] = shape[i]
                term = (term * pows[key].reshape(bshape)) % p
            out = (out + term) % p
        return out

    def embed(self, nvars: int, positions: Sequence[int]) -> "MultiPoly":
        """Re-index into a ring of ``nvars`` variables, sending ``x_i`` to ``x_{positions[i]}``."""
        if len(positions) != self.nvars:
            raise ArgumentError("positions must list one target per variable")
        t = {}
        for exp, c in self._terms.items():
            new = [0] * nvars
            for i, k in enumerate(exp):
                new[positions[i]] += k
            t[tuple(new)] = c
        return MultiPoly(nvars, t)

    # printing
    def to_str(self, names: Sequence[str] | None = None) -> str:
        if names is None:
            names = default_names(self.nvars)
        if not self._terms:
            return "0"
        parts = []
        for exp, c in self._terms.items():
            mono = "*".join(
                (names[i] if k == 1 else f"{names[i]}^{k}") for i, k in enumerate(exp) if k
            )
            mag = abs(c)
            if not mono:
                body = str(mag)
            elif mag == 1:
                body = mono
            else:
                body = f"{mag}*{mono}"
            sign = "-" if c < 0 else "+"
            parts.append((sign, body))
        first_sign, first = parts[0]
        text = ("-" if first_sign == "-" else "") + first
        for sign, body in parts[1:]:
            text += f" {sign} {body}"
        return text

    def __str__(self):
        return self.to_str()

    def __repr__(self):
        return f"MultiPoly({self.nvars}, {self.to_str()!r})"


def default_names(nvars: int) -> list[str]:
    if nvars == 1:
        return ["x"]
    return [f"x{i + 1}" for i in range(nvars)]


def total_degree(P: MultiPoly):
    return P.total_degree()


def degree_in(P: MultiPoly, i: int):
    return P.degree_in(i)


def poly_arith(kind: str, P: MultiPoly, Q) -> MultiPoly:
    """Dispatch ``Add``, ``Sub``, ``Mul`` or ``Substitute`` (``Q`` is then a map)."""
    kind = kind.lower()
    if kind == "substitute":
        return P.substitute(Q)
    if not isinstance(Q, MultiPoly):
        raise ArgumentError("second operand must be a MultiPoly")
    if P.nvars != Q.nvars:
        raise ArgumentError(f"nvars mismatch: {P.nvars} vs {Q.nvars}")
    if kind == "add":
        return P + Q
    if kind == "sub":
        return P - Q
    if kind == "mul":
        return P * Q
    raise ArgumentError(f"unknown operation {kind!r}")


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\*\*|[-+*^()]))")


def parse_poly(text: str, names: Sequence[str] | None = None) -> MultiPoly:
    """Parse an integer polynomial such as ``"3*m^2 - 2m + 1"``.

    ``names`` fixes the variable order; when omitted the identifiers found in
    the text are sorted (``x1 < x2 < ...`` sorts naturally for single digits).
    Juxtaposition means multiplication and ``**`` is accepted for ``^``.
    """
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if not mt or mt.end() == pos:
            raise ArgumentError(f"cannot parse polynomial near {text[pos:]!r}")
        num, ident, op = mt.groups()
        if num is not None:
            tokens.append(("num", int(num)))
        elif ident is not None:
            tokens.append(("id", ident))
        else:
            tokens.append(("op", "^" if op == "**" else op))
        pos = mt.end()
    if not tokens:
        raise ArgumentError("empty polynomial")
    if names is None:
        names = sorted({v for k, v in tokens if k == "id"}, key=_natural_key) or ["x"]
    names = list(names)
    index = {n: i for i, n in enumerate(names)}
    nv = len(names)
    i = 0

    def peek():
        return tokens[i] if i < len(tokens) else (None, None)

    def take():
        nonlocal i
        tok = peek()
        i += 1
        return tok

    def expr():
        left = term()
        while peek() in (("op", "+"), ("op", "-")):
            _, op = take()
            right = term()
            left = left + right if op == "+" else left - right
        return left

    def starts_atom(tok):
        kind, val = tok
        return kind in ("num", "id") or tok == ("op", "(")

    def term():
        left = unary()
        while True:
            tok = peek()
            if tok == ("op", "*"):
                take()
                left = left * unary()
            elif tok[0] is not None and starts_atom(tok):
                left = left * power()
            else:
                return left

    def unary():
        tok = peek()
        if tok == ("op", "-"):
            take()
            return -unary()
        if tok == ("op", "+"):
            take()
            return unary()
        return power()

    def power():
        base = atom()
        if peek() == ("op", "^"):
            take()
            kind, val = take()
            if kind != "num":
                raise ArgumentError("exponent must be a non-negative integer literal")
            base = base ** val
        return base

    def atom():
        kind, val = take()
        if kind == "num":
            return MultiPoly.const(nv, val)
        if kind == "id":
            if val not in index:
                raise ArgumentError(f"unknown variable {val!r}; expected one of {names}")
            return MultiPoly.var(nv, index[val])
        if (kind, val) == ("op", "("):
            inner = expr()
            if take() != ("op", ")"):
                raise ArgumentError("unbalanced parentheses")
            return inner
        raise ArgumentError(f"unexpected token {val!r}")

    result = expr()
    if i != len(tokens):
        raise ArgumentError(f"trailing input in polynomial {text!r}")
    return result


def _natural_key(name: str):
    m = re.match(r"([A-Za-z_]+)(\d*)$", name)
    if m:
        return (m.group(1), int(m.group(2)) if m.group(2) else -1)
    return (name, -1)


def parse_family(text: str, names: Sequence[str] = ("m",)) -> list[MultiPoly]:
    """Split on newlines or semicolons and parse each non-empty entry."""
    entries = [e.strip() for e in re.split(r"[;\n]", text)]
    entries = [e for e in entries if e and not e.startswith("#")]
    return [parse_poly(e, names) for e in entries]


# ---------------------------------------------------------------------------
# modular reduction


@dataclass(frozen=True)
class ModPoly:
    p: int
    body: MultiPoly

    def is_zero(self) -> bool:
        return self.body.is_zero()

    def __str__(self):
        return f"{self.body} (mod {self.p})"


def reduce_mod_p(P: MultiPoly, p: int) -> ModPoly:
    if p < 2:
        raise ArgumentError(f"modulus must be a prime >= 2, got {p}")
    return ModPoly(p, MultiPoly(P.nvars, {e: c % p for e, c in P.items()}))


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


# ---------------------------------------------------------------------------
# resultants


def _det(matrix: list[list[MultiPoly]], nvars: int) -> MultiPoly:
    """Division-free determinant by dynamic programming over column subsets."""
    n = len(matrix)
    if n == 0:
        return MultiPoly.const(nvars, 1)
    dp: dict[int, MultiPoly] = {0: MultiPoly.const(nvars, 1)}
    for r in range(n):
        nxt: dict[int, MultiPoly] = {}
        for mask, val in dp.items():
            if val.is_zero():
                continue
            for j in range(n):
                if mask >> j & 1:
                    continue
                entry = matrix[r][j]
                if entry.is_zero():
                    continue
                above = bin(mask >> (j + 1)).count("1")
                contrib = val * entry
                if above % 2:
                    contrib = -contrib
                key = mask | (1 << j)
                nxt[key] = nxt[key] + contrib if key in nxt else contrib
        dp = nxt
    return dp.get((1 << n) - 1, MultiPoly.zero(nvars))


def sylvester_matrix(P: MultiPoly, Q: MultiPoly, var: int, dP: int, dQ: int) -> list[list[MultiPoly]]:
    """Rows ``P, xP, ..., x^(dQ-1)P, Q, ..., x^(dP-1)Q`` in the basis ``1..x^(dP+dQ-1)``."""
    nv = P.nvars
    size = dP + dQ
    zero = MultiPoly.zero(nv)
    pc = P.coeffs_in(var)
    qc = Q.coeffs_in(var)
    rows = []
    for shift in range(dQ):
        row = [zero] * size
        for k, c in pc.items():
            row[k + shift] = c
        rows.append(row)
    for shift in range(dP):
        row = [zero] * size
        for k, c in qc.items():
            row[k + shift] = c
        rows.append(row)
    return rows


def resultant(P: MultiPoly, Q: MultiPoly, var: int, dP: int, dQ: int) -> MultiPoly:
    """Sylvester resultant ``Res_{dP,dQ}`` of ``P`` and ``Q`` in variable ``var``."""
    if P.nvars != Q.nvars:
        raise ArgumentError("nvars mismatch")
    if not 0 <= var < P.nvars:
        raise ArgumentError(f"variable index {var} out of range")
    if dP < 1 or dQ < 1:
        raise ArgumentError("degree bounds must be at least 1")
    if P.degree_in(var) > dP or Q.degree_in(var) > dQ:
        raise ArgumentError(
            f"degree bound violated: deg P = {P.degree_in(var)} (bound {dP}), "
            f"deg Q = {Q.degree_in(var)} (bound {dQ})"
        )
    return _det(sylvester_matrix(P, Q, var, dP, dQ), P.nvars)


# ---------------------------------------------------------------------------
# recursive dense polynomials over F_p
#
# Level 0 is an int in [0, p).  Level k is a list of level k-1 coefficients in
# the main variable x_{k-1}, with no trailing zeros; the empty list is zero.


def _to_rec(terms: Mapping[Exponent, int], k: int, p: int):
    if k == 0:
        return sum(terms.values()) % p
    groups: dict[int, dict] = {}
    for exp, c in terms.items():
        groups.setdefault(exp[k - 1], {})[exp[: k - 1]] = c
    if not groups:
        return []
    top = max(groups)
    out = [_to_rec(groups.get(i, {}), k - 1, p) for i in range(top + 1)]
    return _trim(out, k)


def _is_zero(a, k) -> bool:
    return a == 0 if k == 0 else not a


def _trim(a, k):
    while a and _is_zero(a[-1], k - 1):
        a.pop()
    return a


def _zero(k):
    return 0 if k == 0 else []


def _one(k):
    return 1 if k == 0 else [_one(k - 1)]


def _add(a, b, k, p):
    if k == 0:
        return (a + b) % p
    n = max(len(a), len(b))
    z = _zero(k - 1)
    out = [_add(a[i] if i < len(a) else z, b[i] if i < len(b) else z, k - 1, p) for i in range(n)]
    return _trim(out, k)


def _neg(a, k, p):
    if k == 0:
        return (-a) % p
    return [_neg(c, k - 1, p) for c in a]


def _sub(a, b, k, p):
    return _add(a, _neg(b, k, p), k, p)


def _mul(a, b, k, p):
    if k == 0:
        return (a * b) % p
    if not a or not b:
        return []
    out = [_zero(k - 1) for _ in range(len(a) + len(b) - 1)]
    for i, ai in enumerate(a):
        if _is_zero(ai, k - 1):
            continue
        for j, bj in enumerate(b):
            if _is_zero(bj, k - 1):
                continue
            out[i + j] = _add(out[i + j], _mul(ai, bj, k - 1, p), k - 1, p)
    return _trim(out, k)


def _scale(a, c, k, p):
    """Multiply a level-k polynomial by a level k-1 element."""
    return _trim([_mul(x, c, k - 1, p) for x in a], k)


def _shift(a, s, k):
    return [_zero(k - 1)] * s + list(a)


def _divexact(a, b, k, p):
    """Quotient ``a / b`` assuming exact divisibility; raises otherwise."""
    if k == 0:
        if b == 0:
            raise ZeroDivisionError("division by zero in F_p")
        return (a * pow(b, -1, p)) % p
    if not b:
        raise ZeroDivisionError("division by zero polynomial")
    r = list(a)
    q = [_zero(k - 1)] * max(len(r) - len(b) + 1, 0)
    lb = b[-1]
    while r and len(r) >= len(b):
        s = len(r) - len(b)
        c = _divexact(r[-1], lb, k - 1, p)
        q[s] = c
        r = _sub(r, _shift(_scale(b, c, k, p), s, k), k, p)
    if r:
        raise ArithmeticError("inexact division")
    return _trim(q, k)


def _prem(a, b, k, p):
    """Pseudo-remainder of ``a`` by ``b`` in the main variable (level k >= 1)."""
    r = list(a)
    lb = b[-1]
    while r and len(r) >= len(b):
        s = len(r) - len(b)
        lr = r[-1]
        r = _sub(_scale(r, lb, k, p), _shift(_scale(b, lr, k, p), s, k), k, p)
    return r


def _content(a, k, p):
    g = _zero(k - 1)
    for c in a:
        g = _gcd(g, c, k - 1, p)
        if _is_unit(g, k - 1):
            break
    return g


def _primitive(a, k, p):
    if not a:
        return a
    c = _content(a, k, p)
    return _trim([_divexact(x, c, k - 1, p) for x in a], k)


def _is_unit(a, k) -> bool:
    if k == 0:
        return a != 0
    return len(a) == 1 and _is_unit(a[0], k - 1)


def _gcd(a, b, k, p):
    if k == 0:
        return 1 if (a or b) else 0
    if not a:
        return list(b)
    if not b:
        return list(a)
    if k == 1:
        while b:
            # univariate Euclid over the field
            r = list(a)
            inv = pow(b[-1], -1, p)
            while r and len(r) >= len(b):
                s = len(r) - len(b)
                c = (r[-1] * inv) % p
                r = _sub(r, _shift(_scale(b, c, 1, p), s, 1), 1, p)
            a, b = b, r
        inv = pow(a[-1], -1, p)
        return [(x * inv) % p for x in a]
    ca, cb = _content(a, k, p), _content(b, k, p)
    c = _gcd(ca, cb, k - 1, p)
    a = _trim([_divexact(x, ca, k - 1, p) for x in a], k)
    b = _trim([_divexact(x, cb, k - 1, p) for x in b], k)
    if len(a) < len(b):
        a, b = b, a
    while b:
        r = _prem(a, b, k, p)
        a, b = b, _primitive(r, k, p)
    a = _primitive(a, k, p)
    return _scale(a, c, k, p)


def _rec_degree_total(a, k) -> int:
    """Total degree of a recursive polynomial (-1 for zero)."""
    if k == 0:
        return 0 if a else -1
    best = -1
    for i, c in enumerate(a):
        d = _rec_degree_total(c, k - 1)
        if d >= 0:
            best = max(best, d + i)
    return best


def _rec_to_terms(a, k) -> dict[Exponent, int]:
    if k == 0:
        return {(): a} if a else {}
    out = {}
    for i, c in enumerate(a):
        for exp, v in _rec_to_terms(c, k - 1).items():
            out[exp + (i,)] = v
    return out


def gcd_mod_p(P: MultiPoly, Q: MultiPoly, p: int) -> MultiPoly:
    """A gcd of ``P`` and ``Q`` in ``F_p[x_1..x_D]`` (unique up to a unit)."""
    if P.nvars != Q.nvars:
        raise ArgumentError("nvars mismatch")
    k = P.nvars
    g = _gcd(_to_rec(P.terms, k, p), _to_rec(Q.terms, k, p), k, p)
    if k == 0:
        return MultiPoly.const(0, g)
    return MultiPoly(k, _rec_to_terms(g, k))


def _coprime_reduced(P: MultiPoly, Q: MultiPoly, p: int) -> bool:
    k = P.nvars
    a = _to_rec(P.terms, k, p)
    b = _to_rec(Q.terms, k, p)
    return _is_unit(_gcd(a, b, k, p), k)


def coprime_mod_p(P: MultiPoly, Q: MultiPoly, p: int) -> bool:
    """True iff ``P`` and ``Q`` share no non-unit factor modulo ``p``."""
    if P.nvars != Q.nvars:
        raise ArgumentError("nvars mismatch")
    if reduce_mod_p(P, p).is_zero() or reduce_mod_p(Q, p).is_zero():
        raise ArgumentError(f"polynomial vanishes identically mod {p}; classify the prime as terrible first")
    return _coprime_reduced(P, Q, p)


def jointly_coprime_mod_p(polys: Sequence[MultiPoly], p: int) -> bool:
    """True iff the whole family has no common non-unit factor modulo ``p``."""
    if not polys:
        raise ArgumentError("empty family")
    k = polys[0].nvars
    g = _zero(k)
    for P in polys:
        if P.nvars != k:
            raise ArgumentError("nvars mismatch")
        g = _gcd(g, _to_rec(P.terms, k, p), k, p)
        if _is_unit(g, k):
            return True
    return _is_unit(g, k)


def pairwise_coprime_mod_p(polys: Sequence[MultiPoly], p: int) -> tuple[bool, tuple[int, int] | None]:
    """Pairwise coprimality with the first failing index pair as witness."""
    for i, j in combinations(range(len(polys)), 2):
        if not _coprime_reduced(polys[i], polys[j], p):
            return False, (i, j)
    return True, None


# ---------------------------------------------------------------------------
# prime classification

GOOD = "Good"
BAD_NOT_TERRIBLE = "BadNotTerrible"
TERRIBLE = "Terrible"


@dataclass(frozen=True)
class PrimeClass:
    tag: str
    witness: str

    @property
    def is_good(self) -> bool:
        return self.tag == GOOD

    @property
    def is_bad(self) -> bool:
        return self.tag != GOOD

    @property
    def is_terrible(self) -> bool:
        return self.tag == TERRIBLE


def linear_split(P: MultiPoly, var: int, p: int) -> tuple[MultiPoly, MultiPoly] | None:
    """Return ``(P1, P0)`` with ``P = P1*x_var + P0 (mod p)``, or None if not of that degree."""
    red = reduce_mod_p(P, p).body
    if red.degree_in(var) != 1:
        return None
    cs = red.coeffs_in(var)
    P1 = cs.get(1, MultiPoly.zero(P.nvars))
    P0 = cs.get(0, MultiPoly.zero(P.nvars))
    # P1 carries exponent 0 in x_var by construction of coeffs_in
    return P1, P0


def linear_witness(P: MultiPoly, p: int) -> int | None:
    """Smallest variable index in which ``P mod p`` is linear with coprime coefficients."""
    for i in range(P.nvars):
        split = linear_split(P, i, p)
        if split is None:
            continue
        P1, P0 = split
        if P1.is_zero():
            continue
        if _coprime_reduced(P1, P0, p):
            return i
    return None


def classify_prime(p: int, polys: Sequence[MultiPoly]) -> PrimeClass:
    if not polys:
        raise ArgumentError("classify_prime needs at least one polynomial")
    if p < 2:
        raise ArgumentError(f"modulus must be a prime >= 2, got {p}")
    for j, P in enumerate(polys):
        if reduce_mod_p(P, p).is_zero():
            return PrimeClass(TERRIBLE, f"P_{j + 1} = {P} vanishes identically mod {p}")
    ok, pair = pairwise_coprime_mod_p(polys, p)
    if not ok:
        i, j = pair
        return PrimeClass(BAD_NOT_TERRIBLE, f"P_{i + 1} and P_{j + 1} share a common factor mod {p}")
    chosen = []
    for j, P in enumerate(polys):
        i = linear_witness(P, p)
        if i is None:
            return PrimeClass(
                BAD_NOT_TERRIBLE,
                f"P_{j + 1} = {P} is not linear with coprime coefficients in any variable mod {p}",
            )
        chosen.append(f"P_{j + 1} linear in x{i + 1}")
    return PrimeClass(GOOD, "pairwise coprime; " + ", ".join(chosen))


def bad_primes(polys: Sequence[MultiPoly], primes: Iterable[int]) -> dict[int, PrimeClass]:
    """Classification of every non-good prime in ``primes``."""
    out = {}
    for p in primes:
        cls = classify_prime(p, polys)
        if not cls.is_good:
            out[p] = cls
    return out
