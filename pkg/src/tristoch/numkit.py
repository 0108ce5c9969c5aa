"""Dense complex linear algebra shared by the rest of the package.

Multi-indices flatten row-major with subsystem 0 slowest, i.e. for dims
``[d0, d1, d2]`` the basis vector ``|i0 i1 i2>`` sits at
``(i0 * d1 + i1) * d2 + i2``. This matches ``np.kron`` and ``ndarray.reshape``.

Default tolerances can be overridden process-wide through the
``TRISTOCH_TOL`` environment variable (applies to ``TOL_HERM``, ``TOL_PSD``
and ``TOL``); every function also accepts an explicit ``tol`` argument.
"""

from __future__ import annotations

import math
import os
import string
from functools import reduce
from typing import Iterable, Sequence

import numpy as np


def _env_tol(default: float) -> float:
    raw = os.environ.get("TRISTOCH_TOL")
    if raw is None:
        return default
    try:
        return float(raw)
    except ValueError:
        return default


TOL = _env_tol(1e-9)
TOL_HERM = _env_tol(1e-9)
TOL_PSD = _env_tol(1e-9)
TOL_RECON = 1e-10


class ValidationError(ValueError):
    """An input violates a structural requirement (stochasticity, positivity, ...)."""


class DimensionError(ValueError):
    """Shapes of the operands are incompatible."""


def kron(*ops: np.ndarray) -> np.ndarray:
    """Tensor product of any number of matrices or vectors, left factor slowest."""
    if not ops:
        return np.ones((1, 1), dtype=complex)
    return reduce(np.kron, ops)


def _check_shape(m: np.ndarray, dims: Sequence[int]) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    if math.prod(dims) != m.shape[0]:
        raise DimensionError(f"subsystem dims {list(dims)} do not match side {m.shape[0]}")


def partial_trace(m: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    Args:
        m: square matrix on the space with local dimensions ``dims``.
        dims: local dimensions, subsystem 0 first.
        keep: indices of subsystems to retain; their relative order is preserved.

    Returns:
        Matrix on the kept subsystems. Keeping nothing returns a 1x1 matrix
        holding the full trace.
    """
    m = np.asarray(m)
    dims = [int(d) for d in dims]
    _check_shape(m, dims)
    keep = sorted(set(int(k) for k in keep))
    n = len(dims)
    if any(k < 0 or k >= n for k in keep):
        raise DimensionError(f"keep={keep} out of range for {n} subsystems")
    letters = string.ascii_letters
    if 2 * n > len(letters):
        raise DimensionError("too many subsystems")
    row = list(letters[:n])
    col = list(letters[n : 2 * n])
    for k in range(n):
        if k not in keep:
            col[k] = row[k]
    out = "".join(row[k] for k in keep) + "".join(col[k] for k in keep)
    t = np.einsum("".join(row) + "".join(col) + "->" + out, m.reshape(dims + dims))
    side = math.prod(dims[k] for k in keep)
    return t.reshape(side, side)


def hermiticity_defect(m: np.ndarray) -> float:
    m = np.asarray(m)
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def herm_eig(m: np.ndarray, tol: float = TOL_HERM) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix with eigenvalues sorted descending.

    Raises:
        ValidationError: if ``m`` deviates from Hermitian by more than ``tol``.
    """
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    defect = hermiticity_defect(m)
    if defect > tol:
        raise ValidationError(f"matrix is not Hermitian (defect {defect:.3e})")
    h = (m + m.conj().T) / 2
    w, v = np.linalg.eigh(h)
    order = np.argsort(w)[::-1]
    return w[order], v[:, order]


def shannon_entropy(p: np.ndarray) -> float:
    """Entropy in nats of a nonnegative weight vector, with 0 ln 0 = 0."""
    p = np.asarray(p, dtype=float)
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def von_neumann_entropy(m: np.ndarray, tol: float = TOL_PSD) -> float:
    """-Tr m ln m in nats for a density matrix."""
    w, _ = herm_eig(m, tol=tol)
    if w.size and w[-1] < -tol:
        raise ValidationError(f"matrix has negative eigenvalue {w[-1]:.3e}")
    tr = float(np.sum(w))
    if abs(tr - 1.0) > max(tol, 1e-9) * max(1, len(w)):
        raise ValidationError(f"trace {tr} differs from 1")
    return shannon_entropy(np.clip(w, 0.0, None))


def is_psd(m: np.ndarray, tol: float = TOL_PSD) -> bool:
    if hermiticity_defect(m) > tol:
        return False
    return bool(np.linalg.eigvalsh((m + np.conj(m).T) / 2)[0] >= -tol)


def is_unitary(u: np.ndarray, tol: float = 1e-10) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol)


def basis_vector(n: int, i: int) -> np.ndarray:
    v = np.zeros(n)
    v[i] = 1.0
    return v


def projector(columns: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto the span of orthonormal ``columns``."""
    c = np.asarray(columns, dtype=complex)
    if c.ndim == 1:
        c = c[:, None]
    return c @ c.conj().T


def orthogonal_complement(columns: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (as columns) of the complement of span(columns)."""
    c = np.asarray(columns, dtype=complex)
    if c.ndim == 1:
        c = c[:, None]
    n = c.shape[0]
    if c.shape[1] == 0:
        return np.eye(n, dtype=complex)
    u, s, _ = np.linalg.svd(c, full_matrices=True)
    rank = int(np.sum(s > tol))
    return u[:, rank:]


# Random objects. Each takes a numpy Generator so callers control the stream.


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_isometry(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """``rows x cols`` matrix with orthonormal columns (rows >= cols)."""
    if rows < cols:
        raise DimensionError("an isometry needs rows >= cols")
    return random_unitary(rows, rng)[:, :cols]


def haar_state(n: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Haar-random pure state(s) from normalized complex Gaussians."""
    shape = (n,) if size is None else (size, n)
    z = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    return z / np.linalg.norm(z, axis=-1, keepdims=True)


def random_density(n: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density matrix from a Ginibre matrix (Hilbert-Schmidt measure for full rank)."""
    k = n if rank is None else rank
    g = rng.normal(size=(n, k)) + 1j * rng.normal(size=(n, k))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
