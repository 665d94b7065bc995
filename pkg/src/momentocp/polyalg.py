"""Sparse multivariate polynomials over the joint variable vector (t, z_1..z_N, u_1..u_m).

Monomials are exponent tuples of length 1 + N + m, slot 0 being time,
slots 1..N the state modes and slots N+1..N+m the controls.  The
enumeration order is graded lexicographic: monomials are sorted by total
degree, ties broken with the earliest variable carrying the largest
exponent first.  This order is fixed once so that moment-matrix indexing
and file exports are reproducible.
"""

from __future__ import annotations

import itertools
from math import comb

import numpy as np

_INT64_MAX = 2**63 - 1


def monomial_count(nvars: int, degree: int) -> int:
    """Number of monomials in `nvars` variables of total degree <= `degree`.

    Equals C(nvars + degree, degree).  Raises OverflowError instead of
    wrapping when the count exceeds the 64-bit range used for array
    indexing downstream.
    """
    if nvars < 1:
        raise ValueError("nvars must be positive")
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    n = comb(nvars + degree, degree)
    if n > _INT64_MAX:
        raise OverflowError(f"monomial count C({nvars + degree},{degree}) exceeds int64")
    return n


def _count_eq(nvars: int, degree: int) -> int:
    # monomials of total degree exactly `degree`
    if nvars == 0:
        return 1 if degree == 0 else 0
    return comb(nvars + degree - 1, degree)


def rank(exponents) -> int:
    """Graded-lex rank of an exponent tuple, starting at 0 for the constant."""
    exponents = tuple(exponents)
    n = len(exponents)
    d = sum(exponents)
    r = 0 if d == 0 else monomial_count(n, d - 1)
    rem = d
    for i in range(n - 1):
        for a in range(exponents[i] + 1, rem + 1):
            r += _count_eq(n - i - 1, rem - a)
        rem -= exponents[i]
    return r


def unrank(index: int, nvars: int) -> tuple:
    """Inverse of :func:`rank`: the exponent tuple at a graded-lex position."""
    if index < 0:
        raise ValueError("index must be nonnegative")
    d = 0
    while monomial_count(nvars, d) <= index:
        d += 1
    rel = index - (monomial_count(nvars, d - 1) if d > 0 else 0)
    out = [0] * nvars
    rem = d
    for i in range(nvars - 1):
        for a in range(rem, -1, -1):
            c = _count_eq(nvars - i - 1, rem - a)
            if rel < c:
                out[i] = a
                rem -= a
                break
            rel -= c
    out[-1] = rem
    return tuple(out)


def basis(nvars: int, degree: int) -> list:
    """All exponent tuples of degree <= `degree` in graded-lex order."""
    out = []
    for d in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(nvars), d):
            e = [0] * nvars
            for i in combo:
                e[i] += 1
            out.append(tuple(e))
    return out


class Polynomial:
    """Immutable sparse polynomial in (t, z_1..z_N, u_1..u_m).

    Terms map exponent tuples to float coefficients; exact zeros are never
    stored.  All arithmetic returns new polynomials.
    """

    __slots__ = ("terms", "n_modes", "n_controls")

    def __init__(self, terms: dict, n_modes: int, n_controls: int):
        nv = 1 + n_modes + n_controls
        clean = {}
        for e, c in terms.items():
            e = tuple(int(x) for x in e)
            if len(e) != nv:
                raise ValueError(f"exponent tuple {e} has wrong arity (expected {nv})")
            if any(x < 0 for x in e):
                raise ValueError(f"negative exponent in {e}")
            c = float(c)
            if c != 0.0:
                clean[e] = c
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "n_modes", int(n_modes))
        object.__setattr__(self, "n_controls", int(n_controls))

    def __setattr__(self, *a):
        raise AttributeError("Polynomial is immutable")

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, n_modes: int, n_controls: int) -> "Polynomial":
        return cls({}, n_modes, n_controls)

    @classmethod
    def constant(cls, value: float, n_modes: int, n_controls: int) -> "Polynomial":
        nv = 1 + n_modes + n_controls
        return cls({(0,) * nv: value}, n_modes, n_controls)

    @classmethod
    def variable(cls, slot: int, n_modes: int, n_controls: int) -> "Polynomial":
        nv = 1 + n_modes + n_controls
        e = [0] * nv
        e[slot] = 1
        return cls({tuple(e): 1.0}, n_modes, n_controls)

    @classmethod
    def t(cls, n_modes: int, n_controls: int) -> "Polynomial":
        return cls.variable(0, n_modes, n_controls)

    @classmethod
    def z(cls, k: int, n_modes: int, n_controls: int) -> "Polynomial":
        """State variable z_k, 1-based."""
        if not 1 <= k <= n_modes:
            raise ValueError(f"z index {k} out of range 1..{n_modes}")
        return cls.variable(k, n_modes, n_controls)

    @classmethod
    def u(cls, i: int, n_modes: int, n_controls: int) -> "Polynomial":
        """Control variable u_i, 1-based."""
        if not 1 <= i <= n_controls:
            raise ValueError(f"u index {i} out of range 1..{n_controls}")
        return cls.variable(n_modes + i, n_modes, n_controls)

    # -- structure ----------------------------------------------------------

    @property
    def nvars(self) -> int:
        return 1 + self.n_modes + self.n_controls

    def degree(self) -> int:
        if not self.terms:
            return 0
        return max(sum(e) for e in self.terms)

    def mentions_control(self) -> bool:
        off = 1 + self.n_modes
        return any(any(e[off:]) for e in self.terms)

    def mentions_state(self) -> bool:
        return any(any(e[1 : 1 + self.n_modes]) for e in self.terms)

    def _same_space(self, other: "Polynomial"):
        if (self.n_modes, self.n_controls) != (other.n_modes, other.n_controls):
            raise ValueError("polynomial arities differ")

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = Polynomial.constant(other, self.n_modes, self.n_controls)
        self._same_space(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0.0) + c
        return Polynomial(out, self.n_modes, self.n_controls)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial({e: -c for e, c in self.terms.items()}, self.n_modes, self.n_controls)

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            other = Polynomial.constant(other, self.n_modes, self.n_controls)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Polynomial(
                {e: c * other for e, c in self.terms.items()}, self.n_modes, self.n_controls
            )
        self._same_space(other)
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0.0) + c1 * c2
        return Polynomial(out, self.n_modes, self.n_controls)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        out = Polynomial.constant(1.0, self.n_modes, self.n_controls)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return (
            self.terms == other.terms
            and self.n_modes == other.n_modes
            and self.n_controls == other.n_controls
        )

    def __hash__(self):
        return hash((frozenset(self.terms.items()), self.n_modes, self.n_controls))

    def __repr__(self):
        if not self.terms:
            return "0"
        names = (
            ["t"]
            + [f"z{k}" for k in range(1, self.n_modes + 1)]
            + [f"u{i}" for i in range(1, self.n_controls + 1)]
        )
        parts = []
        for e in sorted(self.terms, key=lambda e: (sum(e), tuple(-x for x in e))):
            c = self.terms[e]
            mono = "*".join(
                n if p == 1 else f"{n}^{p}" for n, p in zip(names, e) if p > 0
            )
            parts.append(f"{c:g}" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)

    # -- calculus ------------------------------------------------------------

    def diff(self, slot: int) -> "Polynomial":
        out = {}
        for e, c in self.terms.items():
            p = e[slot]
            if p > 0:
                e2 = list(e)
                e2[slot] = p - 1
                e2 = tuple(e2)
                out[e2] = out.get(e2, 0.0) + c * p
        return Polynomial(out, self.n_modes, self.n_controls)

    def eval(self, point) -> float:
        point = np.asarray(point, dtype=float)
        if point.shape != (self.nvars,):
            raise ValueError(f"point has length {point.size}, expected {self.nvars}")
        total = 0.0
        for e, c in self.terms.items():
            v = c
            for x, p in zip(point, e):
                if p:
                    v *= x**p
            total += v
        return total

    def subst_affine(self, offsets, halves) -> "Polynomial":
        """Substitute x_i -> offsets[i] + halves[i] * x_i for every variable."""
        offsets = np.asarray(offsets, dtype=float)
        halves = np.asarray(halves, dtype=float)
        if offsets.shape != (self.nvars,) or halves.shape != (self.nvars,):
            raise ValueError("affine map arity mismatch")
        out = Polynomial.zero(self.n_modes, self.n_controls)
        for e, c in self.terms.items():
            term = Polynomial.constant(c, self.n_modes, self.n_controls)
            for slot, p in enumerate(e):
                if p:
                    lin = Polynomial(
                        {
                            tuple(0 for _ in range(self.nvars)): offsets[slot],
                            tuple(1 if s == slot else 0 for s in range(self.nvars)): halves[slot],
                        },
                        self.n_modes,
                        self.n_controls,
                    )
                    term = term * lin**p
            out = out + term
        return out

    def embed(self, n_modes: int, n_controls: int) -> "Polynomial":
        """Re-embed into a larger variable space, keeping slot semantics."""
        if n_modes < self.n_modes or n_controls < self.n_controls:
            raise ValueError("cannot shrink variable space")
        out = {}
        for e, c in self.terms.items():
            t_ = e[:1]
            zs = e[1 : 1 + self.n_modes] + (0,) * (n_modes - self.n_modes)
            us = e[1 + self.n_modes :] + (0,) * (n_controls - self.n_controls)
            out[t_ + zs + us] = c
        return Polynomial(out, n_modes, n_controls)


def poly_eval(p: Polynomial, point) -> float:
    """Evaluate `p` at a point (t, z_1..z_N, u_1..u_m)."""
    return p.eval(point)


class LinearFunctional:
    """The Riesz functional of a truncated moment sequence.

    Maps a polynomial theta to sum_gamma theta_gamma * y_gamma, where y is
    indexed by graded-lex rank over `nvars` variables up to `degree`.
    """

    def __init__(self, values, nvars: int, degree: int):
        values = np.asarray(values, dtype=float)
        expected = monomial_count(nvars, degree)
        if values.shape != (expected,):
            raise ValueError(f"moment vector has length {values.size}, expected {expected}")
        self.values = values
        self.nvars = nvars
        self.degree = degree

    def on_exponents(self, terms: dict) -> float:
        total = 0.0
        for e, c in terms.items():
            if sum(e) > self.degree:
                raise ValueError(f"monomial {e} exceeds truncation degree {self.degree}")
            total += c * self.values[rank(e)]
        return total

    def __call__(self, p: Polynomial) -> float:
        if p.nvars != self.nvars:
            raise ValueError("polynomial arity does not match moment sequence")
        return self.on_exponents(p.terms)


def lie_derivative(g: Polynomial, A, B, const=None, t_rate: float = 1.0) -> Polynomial:
    """Generator of affine dynamics applied to a state-time polynomial.

    Computes t_rate * dg/dt + sum_k f_k * dg/dz_k for
    f_k = const_k + sum_j A[k,j] z_j + sum_i B[k,i] u_i.  `g` must not
    mention control variables.
    """
    if g.mentions_control():
        raise ValueError("test function mentions a control variable")
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    N = g.n_modes
    m = g.n_controls
    if A.shape != (N, N) or B.shape != (N, m):
        raise ValueError("dynamics shape mismatch")
    if const is None:
        const = np.zeros(N)
    const = np.asarray(const, dtype=float)

    out = g.diff(0) * t_rate
    for k in range(N):
        dg = g.diff(1 + k)
        if not dg.terms:
            continue
        fk = Polynomial.constant(const[k], N, m)
        for j in range(N):
            if A[k, j]:
                fk = fk + A[k, j] * Polynomial.z(j + 1, N, m)
        for i in range(m):
            if B[k, i]:
                fk = fk + B[k, i] * Polynomial.u(i + 1, N, m)
        out = out + fk * dg
    return out


def liouville_apply(g: Polynomial, sys) -> Polynomial:
    """Apply the transport generator of a modal system to a test polynomial.

    Returns dg/dt + sum_k (lambda z + b u)_k dg/dz_k for the realified
    block-diagonal dynamics of `sys`.  The result lives in the same
    (t, z, u) space and never exceeds deg(g) because the dynamics are
    affine.
    """
    if g.n_modes != sys.n_states or g.n_controls != sys.m:
        raise ValueError("polynomial arity does not match system")
    return lie_derivative(g, sys.dynamics_matrix(), sys.b)
