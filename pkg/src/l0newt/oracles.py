"""Objective oracles behind a uniform interface: value, gradient, and
restricted Hessian on an index set.

Two concrete objectives are provided: penalized least squares for
sensing-style recovery (dense or factored operator), and a
complementarity merit function for sparse LCPs. A power-iteration
estimator supplies the smoothness constant used to pick the prox step.
"""

import abc

import numpy as np

from .core import DimensionMismatchError, IndexSet, as_vector

__all__ = [
    "RestrictedHessian",
    "DenseRestrictedHessian",
    "GramRestrictedHessian",
    "OperatorRestrictedHessian",
    "ObjectiveOracle",
    "LeastSquaresOracle",
    "NcpLcpOracle",
    "ncp_phi",
    "ncp_phi_derivs",
    "estimate_lipschitz",
]


class RestrictedHessian(abc.ABC):
    """Symmetric linear map for the T-by-T principal block of the
    objective Hessian at a point."""

    def __init__(self, index_set: IndexSet):
        self.index_set = index_set

    @property
    def dim(self) -> int:
        return len(self.index_set)

    @abc.abstractmethod
    def apply(self, v: np.ndarray) -> np.ndarray:
        """Matrix-vector product with the restricted Hessian."""

    @abc.abstractmethod
    def dense(self) -> np.ndarray:
        """Materialize the block as a dense (dim x dim) array."""


class DenseRestrictedHessian(RestrictedHessian):
    def __init__(self, index_set: IndexSet, matrix: np.ndarray):
        super().__init__(index_set)
        self._matrix = matrix

    def apply(self, v):
        return self._matrix @ v

    def dense(self):
        return self._matrix


class GramRestrictedHessian(RestrictedHessian):
    """Gram block cols^T cols held in factored form (cols is the
    m x dim column slice of the forward operator)."""

    def __init__(self, index_set: IndexSet, cols: np.ndarray):
        super().__init__(index_set)
        self._cols = cols

    @property
    def columns(self) -> np.ndarray:
        return self._cols

    def apply(self, v):
        return self._cols.T @ (self._cols @ v)

    def dense(self):
        return self._cols.T @ self._cols


class OperatorRestrictedHessian(RestrictedHessian):
    """Matrix-free block used when the index set is too large to
    materialize; ``dense`` applies to identity columns and is only
    meant for testing."""

    def __init__(self, index_set: IndexSet, apply_fn):
        super().__init__(index_set)
        self._apply_fn = apply_fn

    def apply(self, v):
        return self._apply_fn(np.asarray(v, dtype=float))

    def dense(self):
        eye = np.eye(self.dim)
        return np.column_stack([self.apply(eye[:, j]) for j in range(self.dim)])


class ObjectiveOracle(abc.ABC):
    """Twice-differentiable objective exposed through value / gradient /
    restricted-Hessian calls; the solver has no other contact with a
    problem. Oracles are immutable after construction."""

    n: int

    @abc.abstractmethod
    def value(self, x) -> float: ...

    @abc.abstractmethod
    def gradient(self, x) -> np.ndarray: ...

    def value_and_gradient(self, x):
        return self.value(x), self.gradient(x)

    @abc.abstractmethod
    def sub_hessian(self, x, t_set: IndexSet) -> RestrictedHessian: ...


def _embedded_gram_apply(matvec, rmatvec, n, idx0):
    """Restricted Gram apply via the full operator: embed v on T, apply
    A then A^T, slice back. Avoids materializing wide column blocks."""

    def apply_fn(v):
        e = np.zeros(n)
        e[idx0] = v
        return rmatvec(matvec(e))[idx0]

    return apply_fn


class LeastSquaresOracle(ObjectiveOracle):
    """f(x) = 0.5 * ||A x - y||^2 with A either a dense matrix or the
    factored product A = B C applied without materialization.

    The restricted Hessian is the Gram block of the selected columns and
    does not depend on x; columns are materialized only while the index
    set stays at or below ``dense_cutoff``.
    """

    def __init__(self, a, y, dense_cutoff: int = 2000):
        a = np.asarray(a, dtype=float)
        if a.ndim != 2:
            raise DimensionMismatchError("sensing matrix must be 2-D")
        self._a = a
        self._b = None
        self._c = None
        self.n = a.shape[1]
        self.m = a.shape[0]
        self.y = as_vector(y, "y")
        if self.y.shape[0] != a.shape[0]:
            raise DimensionMismatchError(
                f"y has length {self.y.shape[0]}, expected {a.shape[0]}"
            )
        self.dense_cutoff = dense_cutoff

    @classmethod
    def from_factors(cls, b, c, y, dense_cutoff: int = 2000):
        """Build the oracle for A = B C (B: n x m, C: m x n) without
        forming the n x n product; m is the inner dimension."""
        b = np.asarray(b, dtype=float)
        c = np.asarray(c, dtype=float)
        if b.ndim != 2 or c.ndim != 2 or b.shape[1] != c.shape[0]:
            raise DimensionMismatchError(
                f"incompatible factor shapes {b.shape} and {c.shape}"
            )
        obj = cls.__new__(cls)
        obj._a = None
        obj._b = b
        obj._c = c
        obj.n = c.shape[1]
        obj.m = b.shape[1]
        obj.y = as_vector(y, "y")
        if obj.y.shape[0] != b.shape[0]:
            raise DimensionMismatchError(
                f"y has length {obj.y.shape[0]}, expected {b.shape[0]}"
            )
        obj.dense_cutoff = dense_cutoff
        return obj

    @property
    def is_factored(self) -> bool:
        return self._a is None

    def _matvec(self, x):
        if self._a is not None:
            return self._a @ x
        return self._b @ (self._c @ x)

    def _rmatvec(self, r):
        if self._a is not None:
            return self._a.T @ r
        return self._c.T @ (self._b.T @ r)

    def residual(self, x) -> np.ndarray:
        x = as_vector(x, "x")
        if x.shape[0] != self.n:
            raise DimensionMismatchError(f"x has length {x.shape[0]}, expected {self.n}")
        return self._matvec(x) - self.y

    def value(self, x) -> float:
        r = self.residual(x)
        return 0.5 * float(r @ r)

    def gradient(self, x) -> np.ndarray:
        return self._rmatvec(self.residual(x))

    def value_and_gradient(self, x):
        r = self.residual(x)
        return 0.5 * float(r @ r), self._rmatvec(r)

    def columns(self, t_set: IndexSet) -> np.ndarray:
        """Materialized column slice of the forward operator on T."""
        idx0 = t_set.zero_based
        if self._a is not None:
            return self._a[:, idx0]
        return self._b @ self._c[:, idx0]

    def sub_hessian(self, x, t_set: IndexSet) -> RestrictedHessian:
        if t_set.ambient_n != self.n:
            raise DimensionMismatchError(
                f"index set ambient_n {t_set.ambient_n} does not match n={self.n}"
            )
        if len(t_set) <= self.dense_cutoff:
            return GramRestrictedHessian(t_set, self.columns(t_set))
        apply_fn = _embedded_gram_apply(
            self._matvec, self._rmatvec, self.n, t_set.zero_based
        )
        return OperatorRestrictedHessian(t_set, apply_fn)


def ncp_phi(a, b):
    """Complementarity penalty phi(a, b) = a+^2 b+^2 + (-a)+^2 + (-b)+^2.

    Nonnegative, and zero exactly when a >= 0, b >= 0 and a*b = 0.
    Elementwise over broadcast arrays; scalars in, scalar out.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ap = np.maximum(a, 0.0)
    bp = np.maximum(b, 0.0)
    am = np.maximum(-a, 0.0)
    bm = np.maximum(-b, 0.0)
    out = ap * ap * bp * bp + am * am + bm * bm
    return float(out) if out.ndim == 0 else out


def ncp_phi_derivs(a, b):
    """First and second partials (da, db, daa, dab, dbb) of ``ncp_phi``.

    phi is C^1 everywhere but only piecewise C^2; at the kinks a == 0 or
    b == 0 the one-sided rule d2(x+^2) = 2 * 1[x > 0] is used, giving a
    deterministic generalized Hessian element.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ap = np.maximum(a, 0.0)
    bp = np.maximum(b, 0.0)
    am = np.maximum(-a, 0.0)
    bm = np.maximum(-b, 0.0)
    da = 2.0 * ap * bp * bp - 2.0 * am
    db = 2.0 * ap * ap * bp - 2.0 * bm
    daa = 2.0 * bp * bp * (a > 0) + 2.0 * (a < 0)
    dab = 4.0 * ap * bp
    dbb = 2.0 * ap * ap * (b > 0) + 2.0 * (b < 0)
    if da.ndim == 0:
        return float(da), float(db), float(daa), float(dab), float(dbb)
    return da, db, daa, dab, dbb


class NcpLcpOracle(ObjectiveOracle):
    """Merit function f(x) = sum_i phi(x_i, (M x + q)_i) whose zeros are
    exactly the solutions of the linear complementarity problem
    x >= 0, M x + q >= 0, <x, M x + q> = 0."""

    def __init__(self, m_matrix, q, dense_cutoff: int = 2000):
        m_matrix = np.asarray(m_matrix, dtype=float)
        if m_matrix.ndim != 2 or m_matrix.shape[0] != m_matrix.shape[1]:
            raise DimensionMismatchError("M must be a square matrix")
        self.m_matrix = m_matrix
        self.q = as_vector(q, "q")
        if self.q.shape[0] != m_matrix.shape[0]:
            raise DimensionMismatchError(
                f"q has length {self.q.shape[0]}, expected {m_matrix.shape[0]}"
            )
        self.n = m_matrix.shape[0]
        self.dense_cutoff = dense_cutoff

    def _slack(self, x):
        x = as_vector(x, "x")
        if x.shape[0] != self.n:
            raise DimensionMismatchError(f"x has length {x.shape[0]}, expected {self.n}")
        return self.m_matrix @ x + self.q

    def value(self, x) -> float:
        x = as_vector(x, "x")
        return float(np.sum(ncp_phi(x, self._slack(x))))

    def gradient(self, x) -> np.ndarray:
        x = as_vector(x, "x")
        da, db, *_ = ncp_phi_derivs(x, self._slack(x))
        return da + self.m_matrix.T @ db

    def value_and_gradient(self, x):
        x = as_vector(x, "x")
        b = self._slack(x)
        val = float(np.sum(ncp_phi(x, b)))
        da, db, *_ = ncp_phi_derivs(x, b)
        return val, da + self.m_matrix.T @ db

    def sub_hessian(self, x, t_set: IndexSet) -> RestrictedHessian:
        if t_set.ambient_n != self.n:
            raise DimensionMismatchError(
                f"index set ambient_n {t_set.ambient_n} does not match n={self.n}"
            )
        x = as_vector(x, "x")
        _, _, daa, dab, dbb = ncp_phi_derivs(x, self._slack(x))
        idx0 = t_set.zero_based
        k = len(t_set)
        # chain rule: diag(daa) + diag(dab) M + M^T diag(dab) + M^T diag(dbb) M,
        # restricted to T x T; the sandwich term sums over all rows of M but
        # only rows with a nonzero second slack derivative contribute.
        active = np.flatnonzero(dbb)
        if k <= self.dense_cutoff:
            m_tt = self.m_matrix[np.ix_(idx0, idx0)]
            cross = dab[idx0, None] * m_tt
            block = cross + cross.T
            if active.size:
                rows = self.m_matrix[np.ix_(active, idx0)]
                block += rows.T @ (dbb[active, None] * rows)
            block[np.arange(k), np.arange(k)] += daa[idx0]
            return DenseRestrictedHessian(t_set, block)
        m_tt = self.m_matrix if k == self.n else self.m_matrix[np.ix_(idx0, idx0)]
        rows = self.m_matrix[active] if k == self.n else self.m_matrix[np.ix_(active, idx0)]
        dbb_act = dbb[active]
        daa_t = daa[idx0]
        dab_t = dab[idx0]

        def apply_fn(v):
            out = daa_t * v + dab_t * (m_tt @ v) + m_tt.T @ (dab_t * v)
            if rows.size:
                out = out + rows.T @ (dbb_act * (rows @ v))
            return out

        return OperatorRestrictedHessian(t_set, apply_fn)


def estimate_lipschitz(
    oracle: ObjectiveOracle,
    x_ref=None,
    iters: int = 50,
    seed: int = 0,
    floor: float = 1e-12,
) -> float:
    """Power-iteration estimate of the spectral norm of the full-space
    Hessian at ``x_ref`` (default: the origin).

    Deterministic for a fixed seed; the Rayleigh-quotient estimate never
    exceeds the true largest eigenvalue and converges to it as ``iters``
    grows. A zero operator returns ``floor``.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    if x_ref is None:
        x_ref = np.zeros(oracle.n)
    hess = oracle.sub_hessian(x_ref, IndexSet.full(oracle.n))
    rng = np.random.Generator(np.random.Philox(seed))
    v = rng.standard_normal(oracle.n)
    v /= np.linalg.norm(v)
    estimate = floor
    for _ in range(iters):
        w = hess.apply(v)
        norm_w = float(np.linalg.norm(w))
        if norm_w <= floor:
            return floor
        estimate = abs(float(v @ w))
        v = w / norm_w
    return max(estimate, floor)
