"""Exact multivariate polynomial arithmetic and vector calculus.

This is the discretization-free oracle used to verify differential
identities: with rational coefficients every derivative, product and
cancellation is exact, so a residual that prints as zero *is* the zero
polynomial.

A polynomial is a map from exponent multi-indices (tuples of
nonnegative ints, one entry per variable) to coefficients.  Zero
coefficients are never stored, which makes the representation
canonical.  Coefficients may be `fractions.Fraction` (exact path) or
floats (approximate path); mixing follows Python's numeric coercion.
"""

from __future__ import annotations

from fractions import Fraction

DEFAULT_MAX_DEGREE = 8


class DegreeOverflowError(ArithmeticError):
    """Result degree would exceed the configured cap."""


class Poly:
    """Multivariate polynomial in `dim` variables.

    Parameters
    ----------
    terms : dict
        Exponent tuple -> coefficient.  Zero coefficients are dropped.
    dim : int
        Number of variables.
    max_degree : int
        Total-degree cap; arithmetic producing higher degree raises
        `DegreeOverflowError`.
    """

    __slots__ = ("terms", "dim", "max_degree")

    def __init__(self, terms: dict | None = None, dim: int = 3,
                 max_degree: int = DEFAULT_MAX_DEGREE):
        clean = {}
        for expo, coeff in (terms or {}).items():
            if len(expo) != dim:
                raise ValueError(f"exponent {expo} has wrong arity for dim={dim}")
            if coeff != 0:
                clean[tuple(expo)] = coeff
        self.terms = clean
        self.dim = dim
        self.max_degree = max_degree
        if self.degree() > max_degree:
            raise DegreeOverflowError(
                f"degree {self.degree()} exceeds cap {max_degree}")

    # -- constructors ------------------------------------------------

    @classmethod
    def constant(cls, value, dim: int = 3, max_degree: int = DEFAULT_MAX_DEGREE) -> "Poly":
        return cls({(0,) * dim: value}, dim, max_degree)

    @classmethod
    def variable(cls, axis: int, dim: int = 3, max_degree: int = DEFAULT_MAX_DEGREE) -> "Poly":
        expo = [0] * dim
        expo[axis] = 1
        return cls({tuple(expo): Fraction(1)}, dim, max_degree)

    # -- queries -----------------------------------------------------

    def degree(self) -> int:
        """Total degree; the zero polynomial has degree 0 by convention."""
        if not self.terms:
            return 0
        return max(sum(e) for e in self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        if not isinstance(other, Poly):
            return NotImplemented
        return self.dim == other.dim and self.terms == other.terms

    def __hash__(self):
        return hash((self.dim, frozenset(self.terms.items())))

    # -- arithmetic --------------------------------------------------

    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.dim != self.dim:
                raise ValueError("dimension mismatch")
            return other
        return Poly.constant(other, self.dim, self.max_degree)

    def __add__(self, other) -> "Poly":
        other = self._coerce(other)
        terms = dict(self.terms)
        for expo, coeff in other.terms.items():
            terms[expo] = terms.get(expo, 0) + coeff
        return Poly(terms, self.dim, max(self.max_degree, other.max_degree))

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly({e: -c for e, c in self.terms.items()}, self.dim, self.max_degree)

    def __sub__(self, other) -> "Poly":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Poly":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Poly":
        other = self._coerce(other)
        cap = max(self.max_degree, other.max_degree)
        terms: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                expo = tuple(a + b for a, b in zip(e1, e2))
                terms[expo] = terms.get(expo, 0) + c1 * c2
        return Poly(terms, self.dim, cap)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Poly":
        if not isinstance(n, int) or n < 0:
            raise ValueError("exponent must be a nonnegative integer")
        out = Poly.constant(Fraction(1), self.dim, self.max_degree)
        for _ in range(n):
            out = out * self
        return out

    # -- calculus ----------------------------------------------------

    def diff(self, axis: int) -> "Poly":
        """Exact partial derivative along `axis`."""
        if not 0 <= axis < self.dim:
            raise IndexError(f"axis {axis} out of range for dim={self.dim}")
        terms = {}
        for expo, coeff in self.terms.items():
            k = expo[axis]
            if k == 0:
                continue
            new = list(expo)
            new[axis] = k - 1
            terms[tuple(new)] = terms.get(tuple(new), 0) + coeff * k
        return Poly(terms, self.dim, self.max_degree)

    def evaluate(self, point) -> float | Fraction:
        """Evaluate at a point, exactly when coefficients and point are rational.

        Grouped evaluation reuses integer powers of each coordinate so
        rational inputs stay rational throughout.
        """
        if len(point) != self.dim:
            raise ValueError("point dimension mismatch")
        # Precompute coordinate powers up to the degree actually used.
        max_pow = [0] * self.dim
        for expo in self.terms:
            for i, e in enumerate(expo):
                max_pow[i] = max(max_pow[i], e)
        powers = []
        for i, x in enumerate(point):
            col = [1]
            for _ in range(max_pow[i]):
                col.append(col[-1] * x)
            powers.append(col)
        total = 0
        for expo, coeff in self.terms.items():
            val = coeff
            for i, e in enumerate(expo):
                if e:
                    val = val * powers[i][e]
            total = total + val
        return total

    def to_float(self) -> "Poly":
        return Poly({e: float(c) for e, c in self.terms.items()},
                    self.dim, self.max_degree)

    def coefficient_scale(self) -> float:
        """Largest absolute coefficient, 0 for the zero polynomial."""
        if not self.terms:
            return 0.0
        return max(abs(float(c)) for c in self.terms.values())

    def __repr__(self):
        if not self.terms:
            return "Poly(0)"
        names = "xyzw"[: self.dim] if self.dim <= 4 else None
        parts = []
        for expo in sorted(self.terms, key=lambda e: (sum(e), e), reverse=True):
            coeff = self.terms[expo]
            mono = "*".join(
                (f"{names[i]}" if names else f"x{i}") + (f"^{e}" if e > 1 else "")
                for i, e in enumerate(expo) if e > 0
            )
            parts.append(f"{coeff}" + (f"*{mono}" if mono else ""))
        return "Poly(" + " + ".join(parts) + ")"


class PolyVec:
    """Vector whose components are polynomials sharing one variable set."""

    __slots__ = ("components",)

    def __init__(self, components):
        components = tuple(components)
        if not components:
            raise ValueError("empty vector")
        dim = components[0].dim
        if any(c.dim != dim for c in components):
            raise ValueError("components disagree on dimension")
        self.components = components

    @property
    def dim(self) -> int:
        return self.components[0].dim

    def __len__(self):
        return len(self.components)

    def __getitem__(self, i) -> Poly:
        return self.components[i]

    def __add__(self, other: "PolyVec") -> "PolyVec":
        return PolyVec(tuple(a + b for a, b in zip(self.components, other.components)))

    def __sub__(self, other: "PolyVec") -> "PolyVec":
        return PolyVec(tuple(a - b for a, b in zip(self.components, other.components)))

    def __mul__(self, scalar) -> "PolyVec":
        return PolyVec(tuple(c * scalar for c in self.components))

    __rmul__ = __mul__

    def __neg__(self) -> "PolyVec":
        return PolyVec(tuple(-c for c in self.components))

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components)

    def dot(self, other: "PolyVec") -> Poly:
        out = self.components[0] * other.components[0]
        for a, b in zip(self.components[1:], other.components[1:]):
            out = out + a * b
        return out

    def evaluate(self, point):
        return [c.evaluate(point) for c in self.components]

    def to_float(self) -> "PolyVec":
        return PolyVec(tuple(c.to_float() for c in self.components))

    def __repr__(self):
        return f"PolyVec({list(self.components)!r})"


# -- vector calculus ------------------------------------------------------


def grad(f: Poly) -> PolyVec:
    """Gradient of a scalar polynomial."""
    return PolyVec(tuple(f.diff(i) for i in range(f.dim)))


def div(u: PolyVec) -> Poly:
    """Divergence of a vector field with len(u) == number of variables."""
    if len(u) != u.dim:
        raise ValueError("divergence needs one component per variable")
    out = u[0].diff(0)
    for i in range(1, len(u)):
        out = out + u[i].diff(i)
    return out


def curl(u: PolyVec) -> PolyVec:
    """Curl of a 3-vector field; undefined (raises) outside dim 3."""
    if u.dim != 3 or len(u) != 3:
        raise ValueError("curl requires a 3-component field in 3 variables")
    return PolyVec((
        u[2].diff(1) - u[1].diff(2),
        u[0].diff(2) - u[2].diff(0),
        u[1].diff(0) - u[0].diff(1),
    ))


def laplacian(f: Poly) -> Poly:
    out = f.diff(0).diff(0)
    for i in range(1, f.dim):
        out = out + f.diff(i).diff(i)
    return out


def laplacian_vec(u: PolyVec) -> PolyVec:
    return PolyVec(tuple(laplacian(c) for c in u.components))


def sym_grad(u: PolyVec):
    """Symmetric gradient e[u] = (grad u + grad u^T)/2 as a nested tuple."""
    if len(u) != u.dim:
        raise ValueError("sym_grad needs one component per variable")
    d = u.dim
    half = Fraction(1, 2)
    return tuple(
        tuple((u[p].diff(q) + u[q].diff(p)) * half for q in range(d))
        for p in range(d)
    )


def mat_vec(matrix, v: PolyVec) -> PolyVec:
    """Product of a nested-tuple polynomial matrix with a PolyVec."""
    return PolyVec(tuple(
        sum((row[j] * v[j] for j in range(1, len(row))), row[0] * v[0])
        for row in matrix
    ))


def div_matrix(matrix) -> PolyVec:
    """Row-wise divergence of a polynomial matrix field."""
    rows = []
    for row in matrix:
        out = row[0].diff(0)
        for q in range(1, len(row)):
            out = out + row[q].diff(q)
        rows.append(out)
    return PolyVec(tuple(rows))


def cross(a: PolyVec, b: PolyVec) -> PolyVec:
    if len(a) != 3 or len(b) != 3:
        raise ValueError("cross product requires 3-vectors")
    return PolyVec((
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ))


def random_poly(rng, dim: int = 3, degree: int = 2, max_degree: int = DEFAULT_MAX_DEGREE,
                coeff_range: int = 4) -> Poly:
    """Random polynomial with small integer (Fraction) coefficients."""
    terms = {}
    for expo in _exponents_up_to(dim, degree):
        c = int(rng.integers(-coeff_range, coeff_range + 1))
        if c:
            terms[expo] = Fraction(c)
    return Poly(terms, dim, max_degree)


def random_poly_vec(rng, dim: int = 3, degree: int = 2,
                    max_degree: int = DEFAULT_MAX_DEGREE) -> PolyVec:
    return PolyVec(tuple(random_poly(rng, dim, degree, max_degree) for _ in range(dim)))


def _exponents_up_to(dim: int, degree: int):
    if dim == 0:
        yield ()
        return
    for total in range(degree + 1):
        yield from _exponents_exact(dim, total)


def _exponents_exact(dim: int, total: int):
    if dim == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in _exponents_exact(dim - 1, total - head):
            yield (head,) + tail
