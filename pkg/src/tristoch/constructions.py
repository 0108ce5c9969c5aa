"""Named tensors and random generators used by tests, the CLI and experiments.

Permutation tensors are built from the addition table of Z_N: the tensor
``group_tensor(n, m)[i, j2, ..., jm] = [i == j2 + ... + jm mod n]`` is m-stochastic
and 0/1-valued. Independent relabelings of its axes (isotopes) give further
permutation tensors, and convex mixtures of those give tristochastic tensors.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from tristoch.classical import as_prob_vector, as_tensor
from tristoch.numkit import DimensionError, ValidationError


def group_tensor(n: int, m: int = 3) -> np.ndarray:
    """Addition table of Z_n as an order-``m`` permutation tensor; ``e_0`` is its identity."""
    if n < 1 or m < 2:
        raise DimensionError("need n >= 1 and m >= 2")
    grids = np.indices((n,) * m)
    return (grids[0] % n == grids[1:].sum(axis=0) % n).astype(float)


def cyclic_tensor(n: int) -> np.ndarray:
    """Order-3 cyclic tensor ``A[i, j, k] = [i == j + k mod n]``, slices ``A[:, :, k] = P^k``."""
    return group_tensor(n, 3)


def t2() -> np.ndarray:
    """The N=2 permutation tensor with slices (I, P_2) along the output index."""
    return group_tensor(2, 3)


def t3() -> np.ndarray:
    """The N=3 permutation tensor with slices (I, P_3, P_3^2) along the output index.

    ``T3[k, i, j] = [j == i + k mod 3]``.
    """
    k, i, j = np.indices((3, 3, 3))
    return (j % 3 == (i + k) % 3).astype(float)


def circulant_tensor(r) -> np.ndarray:
    """``A[i, j, k] = r[(i - j - k) mod N]`` for a probability vector ``r``."""
    r = as_prob_vector(r)
    n = r.size
    i, j, k = np.indices((n, n, n))
    return r[(i - j - k) % n]


def uniform_tensor(n: int, m: int = 3) -> np.ndarray:
    """All entries ``1/N``, the only constant m-stochastic tensor."""
    return np.full((n,) * m, 1.0 / n)


def qubit_family(x: float) -> np.ndarray:
    """The N=2 tristochastic family interpolating between T2 (x=1) and its flip (x=0)."""
    if not 0.0 <= x <= 1.0:
        raise ValidationError(f"x must lie in [0, 1], got {x}")
    return x * t2() + (1.0 - x) * (1.0 - t2())


def relabel(a, perms: Sequence[Sequence[int]]) -> np.ndarray:
    """Tensor ``B`` with ``B[p0[i0], p1[i1], ...] = A[i0, i1, ...]``."""
    t = as_tensor(a)
    if len(perms) != t.ndim:
        raise DimensionError("need one permutation per axis")
    out = np.empty_like(t)
    out[np.ix_(*[np.asarray(p, dtype=int) for p in perms])] = t
    return out


def random_permutation_tensor(n: int, rng: np.random.Generator, m: int = 3) -> np.ndarray:
    """Random isotope of the Z_n addition table."""
    return relabel(group_tensor(n, m), [rng.permutation(n) for _ in range(m)])


def random_tristochastic(
    n: int, rng: np.random.Generator, m: int = 3, components: int | None = None
) -> np.ndarray:
    """Dirichlet-weighted mixture of random permutation tensors."""
    k = components if components is not None else n + 1
    w = rng.dirichlet(np.ones(k))
    return sum(wi * random_permutation_tensor(n, rng, m) for wi in w)


def _divisors_up_to_half(n: int) -> list[int]:
    return [d for d in range(1, n // 2 + 1) if n % d == 0]


def _perm_preserving(n: int, subset: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Random permutation of range(n) mapping ``subset`` onto itself."""
    perm = np.arange(n)
    inside = np.asarray(subset)
    outside = np.setdiff1d(perm, inside)
    perm[inside] = rng.permutation(inside)
    perm[outside] = rng.permutation(outside)
    return perm


def random_reducible(
    n: int, rng: np.random.Generator, m: int = 3, components: int = 3
) -> tuple[np.ndarray, tuple[int, ...]]:
    """Random reducible m-stochastic tensor and one reducing set it is built around.

    The Z_n table restricted to a subgroup H of order d <= n/2 keeps H closed,
    so the complement of H is reducing. Mixing relabelings that fix H setwise
    preserves this, and a final simultaneous relabeling of all axes moves the
    reducing set to a random position.
    """
    if n < 2:
        raise DimensionError("a reducible tensor needs n >= 2")
    d = int(rng.choice(_divisors_up_to_half(n)))
    sub = np.arange(0, n, n // d)
    base = group_tensor(n, m)
    w = rng.dirichlet(np.ones(components))
    a = sum(wi * relabel(base, [_perm_preserving(n, sub, rng) for _ in range(m)]) for wi in w)
    g = rng.permutation(n)
    a = relabel(a, [g] * m)
    reducing = tuple(sorted(int(g[i]) for i in np.setdiff1d(np.arange(n), sub)))
    return a, reducing
