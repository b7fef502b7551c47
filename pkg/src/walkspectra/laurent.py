"""Laurent polynomials in z = (z_1, ..., z_d) and polynomials in zeta over them.

The characteristic polynomial ``det(zeta - U(z))`` of an operator symbol lives
in this ring. Coefficients are complex floats; after every ring operation
terms with modulus below ``PRUNE_EPS`` are dropped so that round-off dust does
not accumulate as spurious monomials.
"""
from __future__ import annotations

from functools import reduce
from typing import Mapping, Sequence

import numpy as np

from .exceptions import DimensionMismatchError
from .lattice import PeriodicOperator

__all__ = [
    "PRUNE_EPS",
    "LaurentPoly",
    "ZetaPoly",
    "SymbolMatrix",
    "laurent_add",
    "laurent_mul",
    "laurent_eval",
    "zeta_eval",
    "symbol_matrix",
    "char_poly",
    "divide_by_root",
    "resultant_zeta",
    "discriminant",
]

PRUNE_EPS = 1e-13


def _check_nonzero(z: np.ndarray):
    if np.any(z == 0):
        raise ValueError("Laurent polynomial evaluated outside its domain (zero coordinate)")


class LaurentPoly:
    """Immutable Laurent polynomial ``sum_e c_e z^e`` with ``e`` in Z^d."""

    __slots__ = ("_d", "_terms")

    def __init__(self, d: int, terms: Mapping | None = None, prune: float = PRUNE_EPS):
        if d < 1:
            raise ValueError("number of variables must be positive")
        clean = {}
        for e, c in (terms or {}).items():
            e = (int(e),) if np.isscalar(e) else tuple(int(x) for x in e)
            if len(e) != d:
                raise DimensionMismatchError(f"exponent {e} does not have length {d}")
            c = complex(c)
            clean[e] = clean.get(e, 0j) + c
        self._d = d
        self._terms = {e: c for e, c in sorted(clean.items()) if abs(c) >= prune}

    @classmethod
    def constant(cls, d: int, c) -> "LaurentPoly":
        return cls(d, {(0,) * d: c})

    @classmethod
    def monomial(cls, exponent, c=1.0) -> "LaurentPoly":
        e = (int(exponent),) if np.isscalar(exponent) else tuple(exponent)
        return cls(len(e), {e: c})

    @classmethod
    def variable(cls, d: int, axis: int, power: int = 1) -> "LaurentPoly":
        e = [0] * d
        e[axis] = power
        return cls(d, {tuple(e): 1.0})

    @property
    def d(self) -> int:
        return self._d

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    def coeff(self, exponent) -> complex:
        e = (int(exponent),) if np.isscalar(exponent) else tuple(exponent)
        return self._terms.get(e, 0j)

    def exponent_range(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-variable minimum and maximum exponent."""
        if not self._terms:
            z = np.zeros(self._d, dtype=np.int64)
            return z, z
        exps = np.array(list(self._terms), dtype=np.int64)
        return exps.min(axis=0), exps.max(axis=0)

    def _coerce(self, other) -> "LaurentPoly":
        if isinstance(other, LaurentPoly):
            if other._d != self._d:
                raise DimensionMismatchError(
                    f"Laurent polynomials in {self._d} and {other._d} variables")
            return other
        if np.isscalar(other):
            return LaurentPoly.constant(self._d, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self._terms)
        for e, c in other._terms.items():
            terms[e] = terms.get(e, 0j) + c
        return LaurentPoly(self._d, terms)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly(self._d, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if np.isscalar(other):
            return LaurentPoly(self._d, {e: c * other for e, c in self._terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms: dict = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, 0j) + c1 * c2
        return LaurentPoly(self._d, terms)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return self * (1.0 / scalar)

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers of Laurent polynomials are not supported")
        out = LaurentPoly.constant(self._d, 1.0)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if np.isscalar(other):
            other = LaurentPoly.constant(self._d, other)
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return self._d == other._d and self._terms == other._terms

    def __hash__(self):
        return hash((self._d, tuple(self._terms.items())))

    def allclose(self, other, atol: float = 1e-12) -> bool:
        """Coefficientwise comparison within ``atol``."""
        diff = self - other
        return diff.max_abs_coeff() <= atol

    def derivative(self, axis: int = 0) -> "LaurentPoly":
        """Partial derivative in ``z_axis``."""
        terms = {}
        for e, c in self._terms.items():
            if e[axis] == 0:
                continue
            e2 = list(e)
            e2[axis] -= 1
            terms[tuple(e2)] = c * e[axis]
        return LaurentPoly(self._d, terms)

    def __call__(self, z):
        return laurent_eval(self, z)

    def __repr__(self):
        if not self._terms:
            return "LaurentPoly(0)"
        parts = []
        for e, c in self._terms.items():
            mono = "*".join(f"z{i + 1}^{p}" for i, p in enumerate(e) if p)
            parts.append(f"({c:.6g})" + (f"*{mono}" if mono else ""))
        return "LaurentPoly(" + " + ".join(parts) + ")"


def laurent_add(a: LaurentPoly, b: LaurentPoly) -> LaurentPoly:
    return a + b


def laurent_mul(a: LaurentPoly, b: LaurentPoly) -> LaurentPoly:
    return a * b


def _as_points(z, d: int) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if d == 1 and (z.ndim == 0 or z.shape[-1] != 1):
        z = z[..., None]
    if z.shape[-1] != d:
        raise DimensionMismatchError(f"points have {z.shape[-1]} coordinates, expected {d}")
    return z


def laurent_eval(p: LaurentPoly, z):
    """Evaluate ``p`` at ``z`` of shape ``(..., d)`` (scalar allowed for d=1)."""
    pts = _as_points(z, p.d)
    _check_nonzero(pts)
    out = np.zeros(pts.shape[:-1], dtype=complex)
    for e, c in p._terms.items():
        mono = np.ones(pts.shape[:-1], dtype=complex)
        for j, k in enumerate(e):
            if k:
                mono = mono * pts[..., j] ** k
        out = out + c * mono
    return out[()] if out.ndim == 0 else out


class ZetaPoly:
    """Polynomial ``sum_k p_k zeta^(n-k)`` with Laurent-polynomial coefficients.

    ``coeffs[0]`` is the leading coefficient.
    """

    __slots__ = ("_coeffs", "_d")

    def __init__(self, coeffs: Sequence, d: int | None = None):
        coeffs = list(coeffs)
        if d is None:
            d = next((c.d for c in coeffs if isinstance(c, LaurentPoly)), None)
        if d is None:
            raise ValueError("cannot infer number of variables; pass d")
        conv = []
        for c in coeffs:
            if isinstance(c, LaurentPoly):
                if c.d != d:
                    raise DimensionMismatchError("coefficients in different numbers of variables")
                conv.append(c)
            else:
                conv.append(LaurentPoly.constant(d, c))
        while len(conv) > 1 and conv[0].is_zero():
            conv.pop(0)
        if not conv:
            conv = [LaurentPoly(d)]
        self._coeffs = tuple(conv)
        self._d = d

    @property
    def coeffs(self) -> tuple[LaurentPoly, ...]:
        return self._coeffs

    @property
    def d(self) -> int:
        return self._d

    @property
    def degree(self) -> int:
        return len(self._coeffs) - 1

    def is_zero(self) -> bool:
        return self.degree == 0 and self._coeffs[0].is_zero()

    def is_monic(self, atol: float = PRUNE_EPS) -> bool:
        return self._coeffs[0].allclose(LaurentPoly.constant(self._d, 1.0), atol=atol)

    def _coerce(self, other) -> "ZetaPoly":
        if isinstance(other, ZetaPoly):
            if other._d != self._d:
                raise DimensionMismatchError("ZetaPoly in different numbers of variables")
            return other
        if isinstance(other, LaurentPoly) or np.isscalar(other):
            return ZetaPoly([other], d=self._d)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        n = max(self.degree, other.degree)
        a = [LaurentPoly(self._d)] * (n - self.degree) + list(self._coeffs)
        b = [LaurentPoly(self._d)] * (n - other.degree) + list(other._coeffs)
        return ZetaPoly([x + y for x, y in zip(a, b)], d=self._d)

    __radd__ = __add__

    def __neg__(self):
        return ZetaPoly([-c for c in self._coeffs], d=self._d)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, LaurentPoly) or np.isscalar(other):
            return ZetaPoly([c * other for c in self._coeffs], d=self._d)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = [LaurentPoly(self._d)] * (self.degree + other.degree + 1)
        for i, a in enumerate(self._coeffs):
            for j, b in enumerate(other._coeffs):
                out[i + j] = out[i + j] + a * b
        return ZetaPoly(out, d=self._d)

    __rmul__ = __mul__

    @classmethod
    def linear_factor(cls, root, d: int) -> "ZetaPoly":
        """``zeta - root``."""
        return cls([1.0, -root], d=d)

    def derivative(self) -> "ZetaPoly":
        """Derivative in ``zeta``."""
        n = self.degree
        if n == 0:
            return ZetaPoly([LaurentPoly(self._d)], d=self._d)
        return ZetaPoly([c * (n - k) for k, c in enumerate(self._coeffs[:-1])], d=self._d)

    def z_derivative(self, axis: int = 0) -> "ZetaPoly":
        """Partial derivative of every coefficient in ``z_axis``."""
        return ZetaPoly([c.derivative(axis) for c in self._coeffs], d=self._d)

    def at_zeta(self, zeta) -> LaurentPoly:
        """Substitute a complex number for ``zeta`` (Horner)."""
        acc = LaurentPoly(self._d)
        for c in self._coeffs:
            acc = acc * zeta + c
        return acc

    def allclose(self, other: "ZetaPoly", atol: float = 1e-12) -> bool:
        diff = self - other
        return all(c.max_abs_coeff() <= atol for c in diff.coeffs)

    def max_coeff_error(self, other: "ZetaPoly") -> float:
        diff = self - other
        return max(c.max_abs_coeff() for c in diff.coeffs)

    def __call__(self, zeta, z):
        return zeta_eval(self, zeta, z)

    def __repr__(self):
        return f"ZetaPoly(degree={self.degree}, coeffs={list(self._coeffs)})"


def zeta_eval(f: ZetaPoly, zeta, z):
    """Evaluate ``f(zeta, z)`` by Horner's rule in ``zeta``; broadcasts."""
    zeta = np.asarray(zeta, dtype=complex)
    vals = [laurent_eval(c, z) for c in f.coeffs]
    acc = np.zeros(np.broadcast_shapes(zeta.shape, np.shape(vals[0])), dtype=complex)
    for v in vals:
        acc = acc * zeta + v
    return acc[()] if acc.ndim == 0 else acc


class SymbolMatrix:
    """Square matrix of Laurent polynomials."""

    def __init__(self, entries: Sequence[Sequence[LaurentPoly]]):
        rows = [list(r) for r in entries]
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            raise ValueError("symbol matrix must be square and nonempty")
        d = rows[0][0].d
        if any(e.d != d for r in rows for e in r):
            raise DimensionMismatchError("entries in different numbers of variables")
        self._rows = tuple(tuple(r) for r in rows)
        self._d = d

    @classmethod
    def identity(cls, n: int, d: int, scale=1.0) -> "SymbolMatrix":
        zero = LaurentPoly(d)
        one = LaurentPoly.constant(d, scale)
        return cls([[one if i == j else zero for j in range(n)] for i in range(n)])

    @property
    def size(self) -> int:
        return len(self._rows)

    @property
    def d(self) -> int:
        return self._d

    def __getitem__(self, ij) -> LaurentPoly:
        i, j = ij
        return self._rows[i][j]

    def __matmul__(self, other: "SymbolMatrix") -> "SymbolMatrix":
        n = self.size
        zero = LaurentPoly(self._d)
        out = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = zero
                for k in range(n):
                    a, b = self._rows[i][k], other._rows[k][j]
                    if not a.is_zero() and not b.is_zero():
                        acc = acc + a * b
                row.append(acc)
            out.append(row)
        return SymbolMatrix(out)

    def __add__(self, other: "SymbolMatrix") -> "SymbolMatrix":
        return SymbolMatrix([[a + b for a, b in zip(r1, r2)]
                             for r1, r2 in zip(self._rows, other._rows)])

    def trace(self) -> LaurentPoly:
        return reduce(lambda a, b: a + b, (self._rows[i][i] for i in range(self.size)))

    def evaluate(self, z) -> np.ndarray:
        """Numeric matrix at points ``z``; shape ``(..., n, n)``."""
        vals = [[laurent_eval(e, z) for e in r] for r in self._rows]
        arr = np.array(vals, dtype=complex)
        return np.moveaxis(arr, (0, 1), (-2, -1))


def symbol_matrix(op: PeriodicOperator) -> SymbolMatrix:
    """Entry ``(i, j)`` is ``sum_a C(a)_ij z^a``."""
    D, d = op.D, op.d
    entries = [[LaurentPoly(d, {a: C[i, j] for a, C in op.steps.items()})
                for j in range(D)] for i in range(D)]
    return SymbolMatrix(entries)


def _scalar_diag(c: LaurentPoly, n: int) -> SymbolMatrix:
    zero = LaurentPoly(c.d)
    return SymbolMatrix([[c if i == j else zero for j in range(n)] for i in range(n)])


def char_poly(sym: SymbolMatrix) -> ZetaPoly:
    """``det(zeta I - A)`` by the Faddeev-LeVerrier recursion over the Laurent ring.

    ``M_0 = 0``, ``M_k = A M_{k-1} + c_{n-k+1} I``,
    ``c_{n-k} = -tr(A M_k) / k``; only integer divisions occur.
    """
    if not isinstance(sym, SymbolMatrix):
        sym = SymbolMatrix(sym)
    n, d = sym.size, sym.d
    coeffs = [LaurentPoly.constant(d, 1.0)]
    M = SymbolMatrix.identity(n, d, 0.0)
    for k in range(1, n + 1):
        M = (sym @ M) + _scalar_diag(coeffs[-1], n)
        coeffs.append(-(sym @ M).trace() / k)
    return ZetaPoly(coeffs, d=d)


def divide_by_root(f: ZetaPoly, root) -> tuple[ZetaPoly, LaurentPoly]:
    """Synthetic division ``f = (zeta - root) q + r``.

    Uses ``q_0 = p_0``, ``q_k = p_k + root q_{k-1}``; the remainder equals
    ``f(root, z)`` and is a Laurent polynomial.
    """
    if f.degree < 1:
        raise ValueError("cannot divide a constant polynomial by a linear factor")
    p = f.coeffs
    q = [p[0]]
    for k in range(1, f.degree):
        q.append(p[k] + q[-1] * root)
    r = p[-1] + q[-1] * root
    return ZetaPoly(q, d=f.d), r


def _sylvester(f: ZetaPoly, g: ZetaPoly) -> list[list[LaurentPoly]]:
    m, n = f.degree, g.degree
    size = m + n
    zero = LaurentPoly(f.d)
    rows = []
    for i in range(n):
        rows.append([zero] * i + list(f.coeffs) + [zero] * (size - m - 1 - i))
    for i in range(m):
        rows.append([zero] * i + list(g.coeffs) + [zero] * (size - n - 1 - i))
    return rows


def _laplace_det(rows: list[list[LaurentPoly]]) -> LaurentPoly:
    """Cofactor expansion along rows, memoized on the set of used columns."""
    n = len(rows)
    d = rows[0][0].d
    memo: dict[int, LaurentPoly] = {}

    def minor(used: int) -> LaurentPoly:
        # row index equals the number of columns already used
        if used in memo:
            return memo[used]
        r = bin(used).count("1")
        if r == n:
            return LaurentPoly.constant(d, 1.0)
        acc = LaurentPoly(d)
        sign = 1.0
        for c in range(n):
            if used >> c & 1:
                continue
            entry = rows[r][c]
            if not entry.is_zero():
                sub = minor(used | (1 << c))
                if not sub.is_zero():
                    acc = acc + entry * sub * sign
            sign = -sign
        memo[used] = acc
        return acc

    return minor(0)


def resultant_zeta(f: ZetaPoly, g: ZetaPoly) -> LaurentPoly:
    """Sylvester resultant in ``zeta``.

    Convention: for monic ``f``, ``res(f, g) = prod_i g(alpha_i)`` over the
    roots ``alpha_i`` of ``f``; for two monic linear factors
    ``res(zeta - a, zeta - b) = a - b``.
    """
    if f.is_zero() or g.is_zero():
        raise ValueError("resultant of the zero polynomial is undefined")
    if f.degree < 1 or g.degree < 1:
        raise ValueError("resultant needs both degrees >= 1")
    if f.d != g.d:
        raise DimensionMismatchError("resultant of polynomials over different rings")
    return _laplace_det(_sylvester(f, g))


def discriminant(f: ZetaPoly) -> LaurentPoly:
    """Discriminant of a monic polynomial in ``zeta``.

    Normalized as ``(-1)^(n(n-1)/2) res(f, f')`` so that
    ``zeta^2 + b zeta + c`` gives ``b^2 - 4c``.
    """
    if f.degree < 2:
        raise ValueError("discriminant needs degree >= 2")
    if not f.is_monic():
        raise ValueError("discriminant is defined here for monic polynomials only")
    n = f.degree
    res = resultant_zeta(f, f.derivative())
    return res * (-1.0) ** (n * (n - 1) // 2)
