"""Finite-dimensional real algebras with an anti-involution.

Every algebra stores elements as real coefficient vectors in a fixed basis.
The involution is a signed basis permutation in each instance, so applying
it twice is exact.
"""

from __future__ import annotations

import re

import numpy as np

EPS = 1e-9
INV_RATIO = 1e-12
EIG_CUTOFF = 1e-9


class NotInvertible(ArithmeticError):
    pass


class NotSymmetric(ValueError):
    pass


class NotHermitianInstance(ValueError):
    pass


class Algebra:
    dim = 1

    def mul(self, x, y):
        raise NotImplementedError

    def conj(self, x):
        raise NotImplementedError

    def one_coeffs(self):
        raise NotImplementedError

    def rank_bound(self):
        raise NotImplementedError

    def sym_signature(self, x):
        raise NotImplementedError

    def hermitian(self):
        return True

    def tag(self):
        raise NotImplementedError

    def __repr__(self):
        return f"Algebra({self.tag()})"

    def __eq__(self, other):
        return isinstance(other, Algebra) and self.tag() == other.tag()

    def __hash__(self):
        return hash(self.tag())

    # element constructors

    def __call__(self, value):
        if isinstance(value, AlgebraElement):
            return value
        if np.isscalar(value):
            return AlgebraElement(self, float(value) * self.one_coeffs())
        arr = np.asarray(value, dtype=float)
        return AlgebraElement(self, arr.reshape(-1))

    def one(self):
        return AlgebraElement(self, self.one_coeffs())

    def zero(self):
        return AlgebraElement(self, np.zeros(self.dim))

    def basis(self):
        return [AlgebraElement(self, row) for row in np.eye(self.dim)]

    def random(self, rng, scale=1.0):
        return AlgebraElement(self, rng.normal(scale=scale, size=self.dim))

    def random_unit(self, rng):
        # shifted away from the singular locus so products stay well conditioned
        while True:
            x = self.random(rng) + self.one() * 2.0
            if condition(x) < 1e4:
                return x

    def random_symmetric(self, rng):
        x = self.random(rng)
        return (x + x.sigma()) * 0.5

    def random_symmetric_unit(self, rng):
        while True:
            x = self.random_symmetric(rng)
            if condition(x) < 1e4:
                return x

    def random_positive(self, rng):
        # squares of symmetric units
        s = self.random_symmetric_unit(rng)
        return s * s

    def left_matrix(self, x):
        return np.column_stack([self.mul(x, e) for e in np.eye(self.dim)])


class Reals(Algebra):
    dim = 1

    def mul(self, x, y):
        return x * y

    def conj(self, x):
        return x.copy()

    def one_coeffs(self):
        return np.ones(1)

    def rank_bound(self):
        return 1

    def sym_signature(self, x):
        return _sign(x[0])

    def tag(self):
        return "R"

    def left_matrix(self, x):
        return np.array([[x[0]]])


class Complexes(Algebra):
    dim = 2

    def mul(self, x, y):
        return np.array([x[0] * y[0] - x[1] * y[1], x[0] * y[1] + x[1] * y[0]])

    def conj(self, x):
        return np.array([x[0], -x[1]])

    def one_coeffs(self):
        return np.array([1.0, 0.0])

    def rank_bound(self):
        return 1

    def sym_signature(self, x):
        return _sign(x[0])

    def tag(self):
        return "C"

    def left_matrix(self, x):
        return np.array([[x[0], -x[1]], [x[1], x[0]]])


class Quaternions(Algebra):
    dim = 4

    def mul(self, x, y):
        a1, b1, c1, d1 = x
        a2, b2, c2, d2 = y
        return np.array([
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
        ])

    def conj(self, x):
        return np.array([x[0], -x[1], -x[2], -x[3]])

    def one_coeffs(self):
        return np.array([1.0, 0.0, 0.0, 0.0])

    def rank_bound(self):
        return 1

    def sym_signature(self, x):
        return _sign(x[0])

    def tag(self):
        return "H"

    def left_matrix(self, x):
        a, b, c, d = x
        return np.array([[a, -b, -c, -d], [b, a, -d, c], [c, d, a, -b], [d, -c, b, a]])


class MatrixAlgebra(Algebra):
    def __init__(self, n):
        if n < 1:
            raise ValueError("matrix size must be positive")
        self.n = n
        self.dim = n * n
        self._eye = np.eye(n).reshape(1, n, 1, n)

    def mul(self, x, y):
        n = self.n
        return (x.reshape(n, n) @ y.reshape(n, n)).reshape(-1)

    def conj(self, x):
        n = self.n
        return x.reshape(n, n).T.reshape(-1).copy()

    def one_coeffs(self):
        return np.eye(self.n).reshape(-1)

    def rank_bound(self):
        return self.n

    def sym_signature(self, x):
        m = x.reshape(self.n, self.n)
        eig = np.linalg.eigvalsh((m + m.T) / 2)
        return int(np.sum(eig > EIG_CUTOFF) - np.sum(eig < -EIG_CUTOFF))

    def tag(self):
        return f"M{self.n}"

    def left_matrix(self, x):
        # row-major coefficients: vec(XY) = (X kron I) vec(Y)
        n = self.n
        return (x.reshape(n, 1, n, 1) * self._eye).reshape(n * n, n * n)

    def __call__(self, value):
        if isinstance(value, AlgebraElement) or np.isscalar(value):
            return super().__call__(value)
        arr = np.asarray(value, dtype=float)
        return AlgebraElement(self, arr.reshape(-1))


class DirectSum(Algebra):
    def __init__(self, parts):
        flat = []
        for p in parts:
            flat.extend(p.parts if isinstance(p, DirectSum) else [p])
        if len(flat) < 2:
            raise ValueError("a direct sum needs at least two summands")
        self.parts = flat
        self.dim = sum(p.dim for p in flat)
        self._cuts = np.cumsum([0] + [p.dim for p in flat])

    def _split(self, x):
        return [x[a:b] for a, b in zip(self._cuts[:-1], self._cuts[1:])]

    def mul(self, x, y):
        return np.concatenate([p.mul(a, b) for p, a, b in zip(self.parts, self._split(x), self._split(y))])

    def conj(self, x):
        return np.concatenate([p.conj(a) for p, a in zip(self.parts, self._split(x))])

    def one_coeffs(self):
        return np.concatenate([p.one_coeffs() for p in self.parts])

    def rank_bound(self):
        return sum(p.rank_bound() for p in self.parts)

    def sym_signature(self, x):
        return sum(p.sym_signature(a) for p, a in zip(self.parts, self._split(x)))

    def hermitian(self):
        return all(p.hermitian() for p in self.parts)

    def tag(self):
        return "+".join(p.tag() for p in self.parts)

    def left_matrix(self, x):
        out = np.zeros((self.dim, self.dim))
        for p, a, lo, hi in zip(self.parts, self._split(x), self._cuts[:-1], self._cuts[1:]):
            out[lo:hi, lo:hi] = p.left_matrix(a)
        return out


def _sign(v):
    if abs(v) < EIG_CUTOFF:
        return 0
    return 1 if v > 0 else -1


_SIMPLE = {"R": Reals, "REALS": Reals, "C": Complexes, "COMPLEXES": Complexes,
           "H": Quaternions, "QUATERNIONS": Quaternions}


def parse_algebra(tag):
    """Build an algebra from a tag such as ``R``, ``H``, ``M3`` or ``R+M2``."""
    if isinstance(tag, Algebra):
        return tag
    tag = tag.strip()
    if "+" in tag:
        return DirectSum([parse_algebra(t) for t in tag.split("+")])
    key = tag.upper()
    if key in _SIMPLE:
        return _SIMPLE[key]()
    m = re.fullmatch(r"M(?:AT)?\(?(\d+)\)?", key)
    if m:
        return MatrixAlgebra(int(m.group(1)))
    raise ValueError(f"unknown algebra tag {tag!r}")


class AlgebraElement:
    __slots__ = ("alg", "c")

    def __init__(self, alg, coeffs):
        self.alg = alg
        c = np.array(coeffs, dtype=float)
        if c.shape != (alg.dim,):
            raise ValueError(f"expected {alg.dim} coefficients, got shape {c.shape}")
        c.flags.writeable = False
        self.c = c

    def _wrap(self, c):
        return AlgebraElement(self.alg, c)

    def _coerce(self, other):
        if isinstance(other, AlgebraElement):
            return other.c
        return float(other) * self.alg.one_coeffs()

    def __add__(self, other):
        return self._wrap(self.c + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self._wrap(self.c - self._coerce(other))

    def __rsub__(self, other):
        return self._wrap(self._coerce(other) - self.c)

    def __neg__(self):
        return self._wrap(-self.c)

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            return self._wrap(self.alg.mul(self.c, other.c))
        return self._wrap(self.c * float(other))

    def __rmul__(self, other):
        return self._wrap(self.c * float(other))

    def sigma(self):
        return self._wrap(self.alg.conj(self.c))

    def inv(self):
        return try_inverse(self)

    def norm(self):
        return float(np.max(np.abs(self.c))) if self.c.size else 0.0

    def close(self, other, eps=EPS):
        return float(np.max(np.abs(self.c - self._coerce(other)))) <= eps

    def is_symmetric(self, eps=EPS):
        return self.close(self.sigma(), eps)

    def to_json(self):
        return {"algebra": self.alg.tag(), "coeffs": [float(v) for v in self.c]}

    def __repr__(self):
        vals = ", ".join(f"{v:.6g}" for v in self.c)
        return f"{self.alg.tag()}[{vals}]"


def element_from_json(data, alg=None):
    if isinstance(data, dict):
        alg = parse_algebra(data.get("algebra", alg.tag() if alg else "R"))
        return AlgebraElement(alg, np.asarray(data["coeffs"], dtype=float).reshape(-1))
    if alg is None:
        raise ValueError("bare element data needs an algebra")
    return alg(data)


def sigma(x):
    return x.sigma()


def condition(x):
    s = np.linalg.svd(x.alg.left_matrix(x.c), compute_uv=False)
    return np.inf if s[-1] == 0 else s[0] / s[-1]


def try_inverse(x):
    """Two-sided inverse, or NotInvertible when left multiplication is singular."""
    lm = x.alg.left_matrix(x.c)
    s = np.linalg.svd(lm, compute_uv=False)
    if s[0] == 0 or s[-1] < INV_RATIO * s[0]:
        raise NotInvertible(f"{x!r} is not a unit")
    return AlgebraElement(x.alg, np.linalg.solve(lm, x.alg.one_coeffs()))


def is_unit(x):
    try:
        try_inverse(x)
    except NotInvertible:
        return False
    return True


def is_hermitian_instance(alg):
    return alg.hermitian()


def signature(x, eps=EPS):
    if not x.alg.hermitian():
        raise NotHermitianInstance(x.alg.tag())
    if not x.is_symmetric(eps):
        raise NotSymmetric(repr(x))
    return x.alg.sym_signature(x.c)


def is_positive(x, eps=EPS):
    if not x.alg.hermitian():
        raise NotHermitianInstance(x.alg.tag())
    if not x.is_symmetric(eps):
        return False
    return x.alg.sym_signature(x.c) == x.alg.rank_bound()


INSTANCES = ("R", "C", "H", "M2", "M3", "R+M2")


class Mat2:
    """A 2x2 matrix over an algebra, acting on column vectors by left multiplication."""

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a, b, c, d):
        self.a, self.b, self.c, self.d = a, b, c, d

    @classmethod
    def identity(cls, alg):
        return cls(alg.one(), alg.zero(), alg.zero(), alg.one())

    @classmethod
    def from_rows(cls, alg, rows):
        (a, b), (c, d) = rows
        return cls(alg(a), alg(b), alg(c), alg(d))

    @property
    def alg(self):
        return self.a.alg

    def entries(self):
        return (self.a, self.b, self.c, self.d)

    def __mul__(self, other):
        if isinstance(other, Mat2):
            return Mat2(self.a * other.a + self.b * other.c, self.a * other.b + self.b * other.d,
                        self.c * other.a + self.d * other.c, self.c * other.b + self.d * other.d)
        if isinstance(other, tuple):
            x, y = other
            return (self.a * x + self.b * y, self.c * x + self.d * y)
        return Mat2(*(e * other for e in self.entries()))

    def __add__(self, other):
        return Mat2(*(x + y for x, y in zip(self.entries(), other.entries())))

    def __neg__(self):
        return Mat2(-self.a, -self.b, -self.c, -self.d)

    def real_form(self):
        L = self.alg.left_matrix
        return np.block([[L(self.a.c), L(self.b.c)], [L(self.c.c), L(self.d.c)]])

    def inv(self):
        alg = self.alg
        big = self.real_form()
        s = np.linalg.svd(big, compute_uv=False)
        if s[0] == 0 or s[-1] < INV_RATIO * s[0]:
            raise NotInvertible("2x2 matrix is not invertible")
        one, n = alg.one_coeffs(), alg.dim
        rhs = np.zeros((2 * n, 2))
        rhs[:n, 0] = one
        rhs[n:, 1] = one
        sol = np.linalg.solve(big, rhs)
        return Mat2(AlgebraElement(alg, sol[:n, 0]), AlgebraElement(alg, sol[:n, 1]),
                    AlgebraElement(alg, sol[n:, 0]), AlgebraElement(alg, sol[n:, 1]))

    def sigma_t(self):
        return Mat2(self.a.sigma(), self.c.sigma(), self.b.sigma(), self.d.sigma())

    def close(self, other, eps=EPS):
        return all(x.close(y, eps) for x, y in zip(self.entries(), other.entries()))

    def residual(self, other):
        return max((x - y).norm() for x, y in zip(self.entries(), other.entries()))

    def is_upper_triangular(self, eps=EPS):
        return self.c.norm() < eps

    def to_json(self):
        return [[self.a.to_json()["coeffs"], self.b.to_json()["coeffs"]],
                [self.c.to_json()["coeffs"], self.d.to_json()["coeffs"]]]

    def __repr__(self):
        return f"Mat2({self.a!r}, {self.b!r}; {self.c!r}, {self.d!r})"


def columns(v, w):
    """The matrix whose columns are the vectors v and w of A^2."""
    return Mat2(v[0], w[0], v[1], w[1])


def vec_close(v, w, eps=EPS):
    return v[0].close(w[0], eps) and v[1].close(w[1], eps)
