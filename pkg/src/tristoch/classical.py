"""Stochastic tensors acting on probability vectors.

A tensor ``a`` of order ``m`` and dimension ``N`` is an ``ndarray`` of shape
``(N,) * m``. Axis 0 is the output index, axes ``1..m-1`` take the inputs,
so the binary product of two vectors reads ``r_i = sum_jk a[i, j, k] p_j q_k``.
All index sets are 0-based tuples sorted ascending.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from tristoch.numkit import TOL, DimensionError, ValidationError


class NotReducingError(ValidationError):
    """A subset passed as reducing set violates the vanishing condition."""

    def __init__(self, message: str, deviation: float):
        super().__init__(message)
        self.deviation = deviation


class NoIdentityError(ValidationError):
    """The tensor has no identity element, so inverses are undefined."""


# --------------------------------------------------------------------------
# validation


def as_prob_vector(p, n: int | None = None, tol: float = TOL) -> np.ndarray:
    """Return ``p`` as a float vector after checking it lies in the simplex."""
    v = np.asarray(p, dtype=float)
    if v.ndim != 1:
        raise DimensionError(f"probability vector must be 1-d, got shape {v.shape}")
    if n is not None and v.shape[0] != n:
        raise DimensionError(f"expected length {n}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValidationError("probability vector has non-finite entries")
    if v.size == 0 or v.min() < -tol:
        raise ValidationError("probability vector has negative entries")
    if abs(v.sum() - 1.0) > tol:
        raise ValidationError(f"probability vector sums to {v.sum()!r}, not 1")
    return v


def as_tensor(a) -> np.ndarray:
    """Return ``a`` as a float cubic array of order >= 2."""
    t = np.asarray(a, dtype=float)
    if t.ndim < 2:
        raise DimensionError("a stochastic tensor needs order >= 2")
    if len(set(t.shape)) != 1:
        raise DimensionError(f"tensor must be cubic, got shape {t.shape}")
    return t


def uniform_vector(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def marginal_deviations(a: np.ndarray) -> np.ndarray:
    """Max deviation from 1 of the sums along each axis."""
    t = as_tensor(a)
    return np.array([np.max(np.abs(t.sum(axis=k) - 1.0)) for k in range(t.ndim)])


@dataclass(frozen=True)
class TensorReport:
    """Structural summary of a nonnegative tensor.

    Attributes:
        order: number of indices ``m``.
        dim: range ``N`` of every index.
        axis_deviation: per axis, max |sum over that axis - 1|.
        min_entry: smallest entry.
        stochastic_axes: axes whose sums equal 1 within tolerance.
        is_permutation: all axes stochastic and every entry is 0 or 1.
    """

    order: int
    dim: int
    axis_deviation: tuple[float, ...]
    min_entry: float
    stochastic_axes: tuple[int, ...]
    is_permutation: bool
    tol: float = field(default=TOL, repr=False)

    @property
    def nonnegative(self) -> bool:
        return self.min_entry >= -self.tol

    @property
    def m_stochastic(self) -> bool:
        return self.nonnegative and len(self.stochastic_axes) == self.order

    @property
    def classification(self) -> str:
        if not self.nonnegative:
            return "not stochastic (negative entries)"
        if self.m_stochastic:
            name = {2: "bistochastic", 3: "tristochastic"}.get(self.order, f"{self.order}-stochastic")
            return name + (", permutation" if self.is_permutation else "")
        if self.stochastic_axes:
            axes = ",".join(str(k + 1) for k in self.stochastic_axes)
            return f"stochastic along axes {axes}"
        return "not stochastic"


def validate(a, tol: float = TOL) -> TensorReport:
    """Report marginal sums, sign and permutation structure of ``a``."""
    t = as_tensor(a)
    dev = marginal_deviations(t)
    axes = tuple(int(k) for k in np.flatnonzero(dev <= tol))
    binary = bool(np.all((np.abs(t) <= tol) | (np.abs(t - 1.0) <= tol)))
    return TensorReport(
        order=t.ndim,
        dim=t.shape[0],
        axis_deviation=tuple(float(x) for x in dev),
        min_entry=float(t.min()),
        stochastic_axes=axes,
        is_permutation=binary and len(axes) == t.ndim,
        tol=tol,
    )


def is_m_stochastic(a, tol: float = TOL) -> bool:
    return validate(a, tol).m_stochastic


def _require_output_stochastic(t: np.ndarray, tol: float) -> None:
    if t.min() < -tol or np.max(np.abs(t.sum(axis=0) - 1.0)) > tol:
        raise ValidationError("tensor is not stochastic along its output axis")


# --------------------------------------------------------------------------
# products


def apply_m(a, args: Sequence, tol: float = TOL) -> np.ndarray:
    """Contract the input axes of ``a`` with ``m - 1`` probability vectors."""
    t = as_tensor(a)
    if len(args) != t.ndim - 1:
        raise DimensionError(f"order-{t.ndim} tensor takes {t.ndim - 1} arguments, got {len(args)}")
    _require_output_stochastic(t, tol)
    out = t
    for p in reversed(args):
        out = out @ as_prob_vector(p, t.shape[0], tol)
    return out


def convolve(a, p, q, tol: float = TOL) -> np.ndarray:
    """Binary product ``p *_A q`` of an order-3 tensor."""
    t = as_tensor(a)
    if t.ndim != 3:
        raise DimensionError("convolve needs an order-3 tensor")
    return apply_m(t, [p, q], tol)


def is_commutative(a, tol: float = TOL) -> bool:
    """True iff the tensor is symmetric in its two input indices."""
    t = as_tensor(a)
    if t.ndim != 3:
        raise DimensionError("commutativity is defined for order-3 tensors")
    return bool(np.max(np.abs(t - t.transpose(0, 2, 1))) <= tol)


def associativity_defect(a) -> float:
    """Max over (a, j, k, l) of |sum_i A[a,i,l] A[i,j,k] - sum_i A[a,j,i] A[i,k,l]|."""
    t = as_tensor(a)
    if t.ndim != 3:
        raise DimensionError("associativity is defined for order-3 tensors")
    left = np.einsum("ail,ijk->ajkl", t, t)
    right = np.einsum("aji,ikl->ajkl", t, t)
    return float(np.max(np.abs(left - right)))


def is_associative(a, tol: float = TOL) -> bool:
    return associativity_defect(a) <= tol


# --------------------------------------------------------------------------
# permutation-averaged product


PERM_AVERAGE_MAX_N = 7


def _perm_matrices(n: int):
    if n > PERM_AVERAGE_MAX_N:
        raise ValidationError(f"permutation average needs N <= {PERM_AVERAGE_MAX_N}, got {n}")
    for sigma in itertools.permutations(range(n)):
        p = np.zeros((n, n))
        p[list(sigma), range(n)] = 1.0
        yield p


def perm_average_convolve(r, p, q, tol: float = TOL) -> np.ndarray:
    """(1/(N-1)!) sum over permutations of (p . P r) P^{-1} q."""
    r = as_prob_vector(r, tol=tol)
    n = r.size
    p = as_prob_vector(p, n, tol)
    q = as_prob_vector(q, n, tol)
    out = np.zeros(n)
    for pm in _perm_matrices(n):
        out += (p @ (pm @ r)) * (pm.T @ q)
    return out / math.factorial(n - 1)


def perm_average_tensor(r, tol: float = TOL) -> np.ndarray:
    """Order-3 tensor whose product equals :func:`perm_average_convolve` for ``r``."""
    r = as_prob_vector(r, tol=tol)
    n = r.size
    a = np.zeros((n, n, n))
    for pm in _perm_matrices(n):
        a += np.einsum("j,ik->ijk", pm @ r, pm.T)
    return a / math.factorial(n - 1)


# --------------------------------------------------------------------------
# reducibility


REDUCING_MAX_N = 20


def reducing_deviation(a, subset: Sequence[int]) -> float:
    """Largest entry ``A[i1, i2, ...]`` with ``i1`` in the subset and the rest outside."""
    t = as_tensor(a)
    n = t.shape[0]
    inside = sorted(set(int(i) for i in subset))
    outside = [i for i in range(n) if i not in inside]
    if not inside or not outside:
        return 0.0
    block = t[np.ix_(inside, *([outside] * (t.ndim - 1)))]
    return float(np.max(np.abs(block)))


def _search_reducing(t: np.ndarray, prune: bool, tol: float) -> list[tuple[int, ...]]:
    n, m = t.shape[0], t.ndim
    if n > REDUCING_MAX_N:
        raise ValidationError(f"reducing-set search is exhaustive and needs N <= {REDUCING_MAX_N}")
    kmin = math.ceil(n / 2) if (prune and m >= 3) else 1
    found = []
    for k in range(max(kmin, 1), n):
        for subset in itertools.combinations(range(n), k):
            if reducing_deviation(t, subset) <= tol:
                found.append(subset)
    return sorted(found)


def find_reducing_sets(a, prune: bool = True, tol: float = TOL) -> list[tuple[int, ...]]:
    """All proper nonempty index sets ``I`` with ``A[I, not I, ..., not I] = 0``.

    Args:
        a: m-stochastic tensor.
        prune: skip sets smaller than N/2, which cannot be reducing for m >= 3.
        tol: entries with magnitude <= tol count as zero.

    Returns:
        Reducing sets as sorted tuples, ordered lexicographically.
    """
    t = as_tensor(a)
    if not is_m_stochastic(t, tol):
        raise ValidationError("reducing sets are defined for m-stochastic tensors")
    return _search_reducing(t, prune, tol)


def truncate(a, subset: Sequence[int], tol: float = TOL) -> np.ndarray:
    """Restrict ``a`` to the indices outside a reducing set."""
    t = as_tensor(a)
    n = t.shape[0]
    inside = sorted(set(int(i) for i in subset))
    if any(i < 0 or i >= n for i in inside):
        raise DimensionError(f"index set {inside} out of range for N={n}")
    if len(inside) == n:
        raise ValidationError("cannot truncate every index")
    dev = reducing_deviation(t, inside)
    if dev > tol:
        raise NotReducingError(f"{tuple(inside)} is not reducing (entry {dev:.3e} must vanish)", dev)
    outside = [i for i in range(n) if i not in inside]
    return t[np.ix_(*([outside] * t.ndim))].copy()


# --------------------------------------------------------------------------
# eigenvectors and fixed points


@dataclass(frozen=True)
class ProbEigenvector:
    vector: np.ndarray
    eigenvalue: float
    reducing_set: tuple[int, ...]


def eigenvector_for_set(n: int, subset: Sequence[int]) -> np.ndarray:
    """Uniform vector on the complement of ``subset``."""
    p = np.ones(n)
    p[list(subset)] = 0.0
    return p / p.sum()


def probability_eigenvectors(a, tol: float = TOL) -> list[ProbEigenvector]:
    """Every eigenvector of ``a`` inside the simplex, starting with the uniform one.

    Raises:
        ValidationError: for order-2 tensors (plain matrices), or non m-stochastic input.
    """
    t = as_tensor(a)
    if t.ndim < 3:
        raise ValidationError("probability eigenvectors are characterized for order m >= 3 only")
    sets = find_reducing_sets(t, tol=tol)
    n = t.shape[0]
    out = [ProbEigenvector(uniform_vector(n), 1.0, ())]
    out += [ProbEigenvector(eigenvector_for_set(n, s), 1.0, s) for s in sets]
    return out


def boundary_decomposition(q, tol: float = TOL) -> tuple[float, np.ndarray]:
    """Split ``q = alpha e + (1 - alpha) p0`` with ``p0`` on the simplex boundary."""
    q = as_prob_vector(q, tol=tol)
    n = q.size
    alpha = float(min(1.0, max(0.0, n * q.min())))
    if alpha >= 1.0 - 1e-15:
        p0 = np.zeros(n)
        p0[0] = 1.0
        return 1.0, p0
    p0 = (q - alpha / n) / (1.0 - alpha)
    p0 = np.clip(p0, 0.0, None)
    return alpha, p0 / p0.sum()


def _power_factor(alpha: float, m: int, step: int) -> float:
    """(1 - alpha) ** ((m - 1) ** step), computed without overflow."""
    if alpha >= 1.0:
        return 0.0
    expo = float(m - 1) ** step
    return float(math.exp(expo * math.log1p(-alpha))) if alpha > 0 else 1.0


@dataclass
class FixedPointResult:
    """Outcome of iterating ``q -> A[q, ..., q]``.

    Attributes:
        state: last iterate.
        iterations: number of map applications performed.
        converged: whether the step size fell below the tolerance.
        residuals: ``||q^(n) - e||_2^2`` for n = 0..iterations.
        predicted: the closed-form value of the same quantity, when a boundary
            decomposition was supplied; otherwise ``None``.
    """

    state: np.ndarray
    iterations: int
    converged: bool
    residuals: list[float]
    predicted: list[float] | None = None

    def law_deviation(self, floor: float = 1e-14) -> float:
        """Max |residual - predicted| over steps where both exceed ``floor``."""
        if self.predicted is None:
            raise ValueError("no boundary decomposition was supplied")
        devs = [abs(r - p) for r, p in zip(self.residuals, self.predicted) if max(r, p) > floor]
        return max(devs, default=0.0)


def fixed_point_iterate(
    a,
    q0,
    max_iter: int = 100,
    tol: float = 1e-12,
    alpha: float | None = None,
    p0=None,
) -> FixedPointResult:
    """Iterate ``q -> A[q, ..., q]`` from ``q0``.

    If ``alpha`` and ``p0`` with ``q0 = alpha e + (1 - alpha) p0`` are given, the
    boundary sequence ``p^(n)`` is iterated alongside and the predicted
    ``(1-alpha)^(2 (m-1)^n) (||p^(n)||^2 - 1/N)`` is recorded for each step.
    """
    t = as_tensor(a)
    _require_output_stochastic(t, TOL)
    n, m = t.shape[0], t.ndim
    q = as_prob_vector(q0, n)
    e = uniform_vector(n)
    track = alpha is not None and p0 is not None
    if track:
        p = as_prob_vector(p0, n)
        if np.max(np.abs(alpha * e + (1 - alpha) * p - q)) > 1e-12:
            raise ValidationError("q0 != alpha e + (1 - alpha) p0")
    def step(v):
        # the exact map preserves the sum; renormalizing stops rounding drift
        # from compounding through the (m-1)-fold product
        w = _self_apply(t, v)
        return w / w.sum()

    residuals = [float(np.sum((q - e) ** 2))]
    predicted = [_power_factor(alpha, m, 0) ** 2 * (float(p @ p) - 1.0 / n)] if track else None
    converged = False
    it = 0
    while it < max_iter:
        nq = step(q)
        it += 1
        delta = float(np.sum(np.abs(nq - q)))
        q = nq
        residuals.append(float(np.sum((q - e) ** 2)))
        if track:
            p = step(p)
            predicted.append(_power_factor(alpha, m, it) ** 2 * (float(p @ p) - 1.0 / n))
        if delta <= tol:
            converged = True
            break
    return FixedPointResult(q, it, converged, residuals, predicted)


def _self_apply(t: np.ndarray, v: np.ndarray) -> np.ndarray:
    out = t
    for _ in range(t.ndim - 1):
        out = out @ v
    return out


def batch_self_apply(a, qs: np.ndarray) -> np.ndarray:
    """Apply ``q -> A[q, ..., q]`` to each row of ``qs``."""
    t = as_tensor(a)
    out = np.einsum("...j,bj->b...", t, qs)
    for _ in range(t.ndim - 2):
        out = np.einsum("b...j,bj->b...", out, qs)
    return out


# --------------------------------------------------------------------------
# identity and inverse


def identity_index(a, tol: float = TOL) -> int | None:
    """Index ``k`` with ``A[:, :, k] = A[:, k, :] = I``, or ``None``."""
    t = as_tensor(a)
    if t.ndim != 3:
        raise DimensionError("identity is defined for order-3 tensors")
    eye = np.eye(t.shape[0])
    for k in range(t.shape[0]):
        if np.max(np.abs(t[:, :, k] - eye)) <= tol and np.max(np.abs(t[:, k, :] - eye)) <= tol:
            return k
    return None


def find_identity(a, tol: float = TOL) -> np.ndarray | None:
    """The identity vector of the product, if one exists (it is unique)."""
    k = identity_index(a, tol)
    if k is None:
        return None
    v = np.zeros(as_tensor(a).shape[0])
    v[k] = 1.0
    return v


def find_inverse(a, p, tol: float = TOL) -> np.ndarray | None:
    """The inverse of ``p`` with respect to the identity of ``a``.

    Returns ``None`` if ``p`` is not a basis vector or has no partner.

    Raises:
        NoIdentityError: if the product has no identity at all.
    """
    t = as_tensor(a)
    k = identity_index(t, tol)
    if k is None:
        raise NoIdentityError("tensor has no identity, inverses are undefined")
    n = t.shape[0]
    p = as_prob_vector(p, n, tol)
    mi = int(np.argmax(p))
    if abs(p[mi] - 1.0) > tol:
        return None
    for ni in range(n):
        if abs(t[k, mi, ni] - 1.0) <= tol and abs(t[k, ni, mi] - 1.0) <= tol:
            q = np.zeros(n)
            q[ni] = 1.0
            return q
    return None
