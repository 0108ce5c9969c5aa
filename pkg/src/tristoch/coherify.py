"""Coherifications of stochastic tensors and coherence measures of channels.

A coherification of an m-stochastic tensor ``A`` is a channel whose dynamical
matrix has ``A`` (flattened row-major) as its diagonal. For a permutation
tensor ``T`` of order 3 the Kraus operators of an optimal coherification are
fixed by N unitary blocks ``B^j``:

    K_i[j, c_n] = B^j[i, n]

where ``c_n`` is the n-th nonzero column (ascending) of row ``j`` of ``T``
reshaped to ``N x N^2``. Columns of ``B^j`` are the vectors ``|B^j_n>``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from tristoch.classical import apply_m, as_tensor, validate
from tristoch.numkit import (
    TOL,
    DimensionError,
    ValidationError,
    herm_eig,
    is_unitary,
    kron,
    random_isometry,
    shannon_entropy,
)
from tristoch.qchannel import (
    DynamicalMatrix,
    apply_kraus,
    apply_linear,
    as_dynamical,
    kraus_to_choi,
)

SCHEMES = ("identity", "fourier", "mub")


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % p for p in range(2, int(n**0.5) + 1))


@dataclass(frozen=True)
class BlockBasisFamily:
    """N blocks, each an N x N unitary (or k x N isometry) whose columns form a basis."""

    dim: int
    blocks: tuple[np.ndarray, ...]
    scheme: str = "custom"

    def __post_init__(self):
        blocks = tuple(np.asarray(b, dtype=complex) for b in self.blocks)
        if len(blocks) != self.dim:
            raise DimensionError(f"need {self.dim} blocks, got {len(blocks)}")
        rows = {b.shape[0] for b in blocks}
        if len(rows) != 1 or any(b.shape[1] != self.dim for b in blocks):
            raise DimensionError("blocks must share a shape k x N")
        for k, b in enumerate(blocks):
            if np.max(np.abs(b.conj().T @ b - np.eye(self.dim))) > 1e-9:
                raise ValidationError(f"block {k} does not have orthonormal columns")
        object.__setattr__(self, "blocks", blocks)

    @property
    def kraus_count(self) -> int:
        return self.blocks[0].shape[0]


def fourier_matrix(n: int) -> np.ndarray:
    j = np.arange(n)
    return np.exp(2j * np.pi * np.outer(j, j) / n) / np.sqrt(n)


def mub_blocks(n: int) -> list[np.ndarray]:
    """Computational basis plus N-1 further mutually unbiased bases, N prime.

    For N=2 the second block is the Hadamard matrix. For odd prime N block k
    has columns ``|v_b>_j = omega^((k-1) j^2 + b j) / sqrt(N)``.
    """
    if not is_prime(n):
        raise ValidationError(f"the mub scheme needs prime N, got {n}")
    if n == 2:
        return [np.eye(2, dtype=complex), np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)]
    omega = np.exp(2j * np.pi / n)
    j = np.arange(n)[:, None]
    b = np.arange(n)[None, :]
    out = [np.eye(n, dtype=complex)]
    for k in range(1, n):
        out.append(omega ** (((k - 1) * j * j + b * j) % n) / np.sqrt(n))
    return out


def default_blocks(n: int, scheme: str | None = None) -> BlockBasisFamily:
    """Block family for :func:`coherify_permutation`; the first block is always I.

    Args:
        n: dimension.
        scheme: ``identity``, ``fourier`` or ``mub``. ``None`` picks ``mub`` for
            prime N and ``fourier`` otherwise.
    """
    if scheme is None:
        scheme = "mub" if is_prime(n) else "fourier"
    if scheme == "identity":
        blocks = [np.eye(n, dtype=complex)] * n
    elif scheme == "fourier":
        blocks = [np.eye(n, dtype=complex)] + [fourier_matrix(n)] * (n - 1)
    elif scheme == "mub":
        blocks = mub_blocks(n)
    else:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    return BlockBasisFamily(n, tuple(blocks), scheme)


def random_blocks(n: int, rng: np.random.Generator, kraus_count: int | None = None) -> BlockBasisFamily:
    """Haar-random blocks; ``kraus_count > n`` gives isometries (more Kraus operators)."""
    k = kraus_count if kraus_count is not None else n
    return BlockBasisFamily(n, tuple(random_isometry(k, n, rng) for _ in range(n)), "random")


# --------------------------------------------------------------------------
# coherifications


def coherify_diagonal(a, tol: float = TOL) -> DynamicalMatrix:
    """Diagonal dynamical matrix carrying the tensor entries."""
    t = as_tensor(a)
    if t.min() < -tol or np.max(np.abs(t.sum(axis=0) - 1.0)) > tol:
        raise ValidationError("tensor must be nonnegative and stochastic along its output axis")
    return DynamicalMatrix(np.diag(t.reshape(-1)).astype(complex), t.shape[0])


def permutation_support(t: np.ndarray) -> list[np.ndarray]:
    """For each output row j, the ascending input columns where ``T[j]`` is 1."""
    n = t.shape[0]
    flat = t.reshape(n, -1)
    return [np.flatnonzero(flat[j] > 0.5) for j in range(n)]


def coherify_permutation(t, blocks: BlockBasisFamily | None = None, tol: float = TOL):
    """Coherification of an order-3 permutation tensor from a block family.

    Returns:
        ``(kraus, D)``: the list of Kraus operators (as many as block rows) and
        the dynamical matrix.
    """
    t = as_tensor(t)
    rep = validate(t, tol)
    if t.ndim != 3 or not rep.is_permutation:
        raise ValidationError("coherify_permutation needs an order-3 permutation tensor")
    n = t.shape[0]
    if blocks is None:
        blocks = default_blocks(n)
    if blocks.dim != n:
        raise DimensionError(f"block family has dimension {blocks.dim}, tensor has {n}")
    support = permutation_support(t)
    k = blocks.kraus_count
    ops = [np.zeros((n, n * n), dtype=complex) for _ in range(k)]
    for j, cols in enumerate(support):
        for i in range(k):
            ops[i][j, cols] = blocks.blocks[j][i, :]
    return ops, kraus_to_choi(ops)


def coherify_qubit_tristochastic(x: float, u: np.ndarray | None = None, v: np.ndarray | None = None):
    """Two-Kraus coherification of the N=2 tristochastic tensor family ``A(x)``.

    Each Kraus operator is ``[[a, b, c, d], [e, f, g, h]]`` (entries indexed by
    the Kraus label). With orthonormal bases ``{a~, d~}`` (computational),
    ``{b~, c~} = v``, ``{e~, h~} = u {a~, d~}`` and ``{f~, g~} = -u {b~, c~}``:
    ``a, d, f, g`` carry weight ``sqrt(x)`` and ``b, c, e, h`` weight ``sqrt(1-x)``.

    Args:
        x: mixing parameter in [0, 1]; x = 1 gives the permutation tensor T2.
        u: 2x2 unitary linking the bases; defaults to the Hadamard matrix.
        v: 2x2 unitary giving ``{b~, c~}``; defaults to the identity.

    Returns:
        ``(kraus, D)``.
    """
    if not 0.0 <= x <= 1.0:
        raise ValidationError(f"x must lie in [0, 1], got {x}")
    u = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2) if u is None else np.asarray(u, dtype=complex)
    v = np.eye(2, dtype=complex) if v is None else np.asarray(v, dtype=complex)
    if not (is_unitary(u) and is_unitary(v)):
        raise ValidationError("u and v must be unitary")
    sx, sy = np.sqrt(x), np.sqrt(1.0 - x)
    a_t, d_t = np.eye(2, dtype=complex)
    b_t, c_t = v[:, 0], v[:, 1]
    a, d = sx * a_t, sx * d_t
    e, h = sy * (u @ a_t), sy * (u @ d_t)
    b, c = sy * b_t, sy * c_t
    f, g = -sx * (u @ b_t), -sx * (u @ c_t)
    ops = [np.array([[a[i], b[i], c[i], d[i]], [e[i], f[i], g[i], h[i]]]) for i in range(2)]
    return ops, kraus_to_choi(ops)


def qubit_c2_closed_form(x: float) -> float:
    return (1.0 + 2.0 * x - 2.0 * x * x) / 4.0


def qubit_entropic_closed_form(x: float, sign: float = -1.0) -> float:
    """``-x ln(x/4) - (1-x) ln((1-x)/4) + sign * ln 2``.

    ``sign = -1`` is the value implied by S(diag) - S(rho) for this family;
    ``sign = +1`` is the variant with the opposite sign on the last term.
    """
    s = 0.0
    for p in (x, 1.0 - x):
        if p > 0:
            s -= p * np.log(p / 4.0)
    return float(s + sign * np.log(2.0))


# --------------------------------------------------------------------------
# measures


def jamiolkowski_state(d) -> np.ndarray:
    """``rho_Phi = D / N^(m-1)``, a unit-trace state for any trace preserving channel."""
    dm = as_dynamical(d)
    return dm.matrix / dm.n ** (dm.m - 1)


def channel_purity(d) -> float:
    """``Tr[rho_Phi^2]``."""
    dm = as_dynamical(d)
    return float(np.sum(np.abs(dm.matrix) ** 2) / dm.n ** (2 * (dm.m - 1)))


def c2_coherence(d) -> float:
    """Off-diagonal squared mass of ``rho_Phi``."""
    dm = as_dynamical(d)
    mat = dm.matrix
    off = np.sum(np.abs(mat) ** 2) - np.sum(np.abs(np.diag(mat)) ** 2)
    return float(off / dm.n ** (2 * (dm.m - 1)))


def entropic_coherence(d) -> float:
    """``S(diag(rho_Phi)) - S(rho_Phi)`` in nats; nonnegative for every state."""
    rho = jamiolkowski_state(d)
    w, _ = herm_eig(rho)
    return shannon_entropy(np.real(np.diag(rho))) - shannon_entropy(np.clip(w, 0.0, None))


@dataclass(frozen=True)
class CoherenceReport:
    c2: float
    entropic: float
    purity: float
    choi_spectrum: tuple[float, ...]

    def as_dict(self) -> dict:
        return {
            "c2": self.c2,
            "entropic": self.entropic,
            "purity": self.purity,
            "choi_spectrum": list(self.choi_spectrum),
        }


def coherence_report(d) -> CoherenceReport:
    """All coherence figures of a channel; the spectrum is that of ``rho_Phi``."""
    w, _ = herm_eig(jamiolkowski_state(d))
    return CoherenceReport(
        c2=c2_coherence(d),
        entropic=entropic_coherence(d),
        purity=channel_purity(d),
        choi_spectrum=tuple(float(x) for x in w),
    )


# --------------------------------------------------------------------------
# diagonal dependence


def _same_diagonal_pair(n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Two density matrices with equal diagonals and independent off-diagonals."""
    p = rng.dirichlet(np.ones(n))
    root = np.sqrt(p)
    out = []
    for _ in range(2):
        g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        c = g @ g.conj().T
        s = 1.0 / np.sqrt(np.real(np.diag(c)))
        corr = c * np.outer(s, s)
        out.append(corr * np.outer(root, root))
    return out[0], out[1]


def diagonal_dependence_check(
    channel, trials: int = 100, seed: int = 0, tol: float = 1e-11, n: int | None = None
) -> bool:
    """Check that output diagonals depend only on input diagonals.

    ``channel`` is either a Kraus list or a dynamical matrix. Over ``trials``
    random input tuples, inputs sharing diagonals must produce outputs with equal
    diagonals, and these must match the tensor on the Choi diagonal applied to
    the input diagonals.
    """
    if isinstance(channel, (list, tuple)):
        ops = [np.asarray(k, dtype=complex) for k in channel]
        n = ops[0].shape[0]
        m = int(round(np.log(ops[0].shape[1]) / np.log(n))) + 1
        diag = np.real(np.diag(kraus_to_choi(ops, tol=1e-8).matrix))
        act = lambda x: apply_kraus(ops, x)  # noqa: E731
    else:
        dm = as_dynamical(channel, n)
        n, m = dm.n, dm.m
        diag = np.real(np.diag(dm.matrix))
        act = lambda x: apply_linear(dm, x)  # noqa: E731
    tensor = diag.reshape([n] * m)
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        pairs = [_same_diagonal_pair(n, rng) for _ in range(m - 1)]
        first = np.real(np.diag(act(kron(*[p[0] for p in pairs]))))
        second = np.real(np.diag(act(kron(*[p[1] for p in pairs]))))
        expected = tensor
        for p in reversed(pairs):
            expected = expected @ np.real(np.diag(p[0]))
        if np.max(np.abs(first - second)) > tol or np.max(np.abs(first - expected)) > tol:
            return False
    return True


def classical_action(t, inputs: Sequence[np.ndarray]) -> np.ndarray:
    """Tensor action on the diagonals of the given density matrices."""
    return apply_m(t, [np.real(np.diag(r)) for r in inputs])
