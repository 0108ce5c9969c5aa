"""Multi-input quantum channels in dynamical-matrix (Choi), Kraus and unitary form.

A channel taking ``m - 1`` states of dimension ``N`` to one state of dimension
``N`` is stored as its dynamical matrix ``D`` of side ``N**m``. Subsystem 0 is
the output, so that

    Phi[rho_1, ..., rho_{m-1}] = Tr_{1..m-1}[D (I ⊗ rho_1^T ⊗ ... ⊗ rho_{m-1}^T)]

and, for Kraus operators ``K_i`` of shape ``N x N**(m-1)`` acting as
``X -> sum_i K_i X K_i^dagger``,

    D[(a, c), (b, d)] = sum_i K_i[a, c] conj(K_i[b, d]).

Kraus operators are therefore the row-major reshapes of the eigenvectors of D.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from tristoch.numkit import (
    TOL,
    TOL_PSD,
    TOL_RECON,
    DimensionError,
    ValidationError,
    herm_eig,
    hermiticity_defect,
    is_psd,
    kron,
    orthogonal_complement,
    partial_trace,
    projector,
    random_isometry,
)

KRAUS_RANK_CUTOFF = 1e-10


class CompletenessError(ValidationError):
    """Kraus operators do not satisfy sum K^dagger K = I."""

    def __init__(self, message: str, defect: float):
        super().__init__(message)
        self.defect = defect


class IdentityNotVerifiedError(ValidationError):
    """A candidate identity state failed verification."""


# --------------------------------------------------------------------------
# containers


@dataclass(frozen=True)
class DynamicalMatrix:
    """Dynamical matrix of a channel from ``m - 1`` inputs of dimension ``n``."""

    matrix: np.ndarray
    n: int

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimensionError(f"dynamical matrix must be square, got {mat.shape}")
        m = _log_int(mat.shape[0], self.n)
        if m is None or m < 2:
            raise DimensionError(f"side {mat.shape[0]} is not a power N**m of N={self.n} with m >= 2")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def m(self) -> int:
        return _log_int(self.matrix.shape[0], self.n)

    @property
    def dims(self) -> list[int]:
        return [self.n] * self.m

    def tensor(self) -> np.ndarray:
        """View with one axis per row subsystem followed by one per column subsystem."""
        return self.matrix.reshape(self.dims * 2)


def _log_int(side: int, n: int) -> int | None:
    if n < 1:
        return None
    if n == 1:
        return 2 if side == 1 else None
    m = round(math.log(side) / math.log(n))
    return m if n**m == side else None


def as_dynamical(d, n: int | None = None) -> DynamicalMatrix:
    """Coerce an array (or DynamicalMatrix) to DynamicalMatrix.

    Without ``n`` a bare array is taken to describe a binary channel (side N**3).
    """
    if isinstance(d, DynamicalMatrix):
        if n is not None and n != d.n:
            raise DimensionError(f"expected local dimension {n}, got {d.n}")
        return d
    mat = np.asarray(d)
    if n is None:
        side = mat.shape[0]
        n = round(side ** (1 / 3))
        if n**3 != side:
            raise DimensionError(f"cannot infer N from side {side}; pass n explicitly")
    return DynamicalMatrix(mat, n)


def as_density(rho, n: int | None = None, tol: float = TOL) -> np.ndarray:
    """Validate a density matrix (Hermitian, PSD, unit trace)."""
    r = np.asarray(rho, dtype=complex)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise DimensionError(f"density matrix must be square, got {r.shape}")
    if n is not None and r.shape[0] != n:
        raise DimensionError(f"expected dimension {n}, got {r.shape[0]}")
    if not is_psd(r, tol):
        raise ValidationError("density matrix is not Hermitian positive semidefinite")
    if abs(np.trace(r) - 1.0) > tol:
        raise ValidationError(f"density matrix has trace {np.trace(r).real!r}")
    return r


def maximally_mixed(n: int) -> np.ndarray:
    return np.eye(n, dtype=complex) / n


# --------------------------------------------------------------------------
# structural checks


def marginal(d, k: int) -> np.ndarray:
    """Partial trace of D over subsystem ``k`` (0 = output)."""
    dm = as_dynamical(d)
    keep = [j for j in range(dm.m) if j != k]
    return partial_trace(dm.matrix, dm.dims, keep)


def marginal_defects(d) -> list[float]:
    """For each subsystem k, max |Tr_k D - I|."""
    dm = as_dynamical(d)
    eye = np.eye(dm.n ** (dm.m - 1))
    return [float(np.max(np.abs(marginal(dm, k) - eye))) for k in range(dm.m)]


def is_channel(d, tol: float = TOL) -> bool:
    """Positive semidefinite with Tr_out D = I."""
    dm = as_dynamical(d)
    return is_psd(dm.matrix, tol) and marginal_defects(dm)[0] <= tol


def is_m_stochastic(d, tol: float = TOL) -> bool:
    """Channel whose partial trace over every subsystem is the identity."""
    dm = as_dynamical(d)
    return is_psd(dm.matrix, tol) and max(marginal_defects(dm)) <= tol


def _require_channel(dm: DynamicalMatrix, tol: float) -> None:
    if not is_channel(dm, tol):
        raise ValidationError("dynamical matrix does not describe a channel (PSD, Tr_out D = I)")


# --------------------------------------------------------------------------
# action


def apply_linear(d, x: np.ndarray) -> np.ndarray:
    """Action of the channel on an arbitrary joint input operator ``x`` (no validation)."""
    dm = as_dynamical(d)
    n, k = dm.n, dm.n ** (dm.m - 1)
    d4 = dm.matrix.reshape(n, k, n, k)
    return np.einsum("acbd,cd->ab", d4, x)


def apply_m_channel(d, args: Sequence, tol: float = TOL, validate: bool = True) -> np.ndarray:
    """Output state for the product input ``args[0] ⊗ ... ⊗ args[m-2]``."""
    dm = as_dynamical(d)
    if len(args) != dm.m - 1:
        raise DimensionError(f"channel takes {dm.m - 1} inputs, got {len(args)}")
    if validate:
        _require_channel(dm, tol)
        args = [as_density(r, dm.n, tol) for r in args]
    else:
        args = [np.asarray(r, dtype=complex) for r in args]
        if any(r.shape != (dm.n, dm.n) for r in args):
            raise DimensionError("input dimension mismatch")
    return apply_linear(dm, kron(*args))


def quantum_convolve(d, rho, sigma, tol: float = TOL, validate: bool = True) -> np.ndarray:
    """Binary product ``rho *_D sigma``."""
    dm = as_dynamical(d)
    if dm.m != 3:
        raise DimensionError("quantum_convolve needs a binary channel (m = 3)")
    return apply_m_channel(dm, [rho, sigma], tol, validate)


def choi_from_map(fn: Callable[[np.ndarray], np.ndarray], n: int, m: int = 3) -> DynamicalMatrix:
    """Dynamical matrix of a linear map given on joint input operators.

    ``D[(a, c), (b, d)] = fn(E_cd)[a, b]`` with ``E_cd`` the matrix units.
    """
    k = n ** (m - 1)
    d = np.zeros((n, k, n, k), dtype=complex)
    for c in range(k):
        for e in range(k):
            unit = np.zeros((k, k), dtype=complex)
            unit[c, e] = 1.0
            d[:, c, :, e] = fn(unit)
    return DynamicalMatrix(d.reshape(n * k, n * k), n)


# --------------------------------------------------------------------------
# representations


def kraus_completeness_defect(ops: Sequence[np.ndarray]) -> float:
    ops = [np.asarray(k, dtype=complex) for k in ops]
    s = sum(k.conj().T @ k for k in ops)
    return float(np.max(np.abs(s - np.eye(s.shape[0]))))


def _check_kraus_shapes(ops: Sequence[np.ndarray]) -> tuple[int, int]:
    if len(ops) == 0:
        raise ValidationError("empty Kraus set")
    shapes = {np.shape(k) for k in ops}
    if len(shapes) != 1:
        raise DimensionError(f"Kraus operators have mixed shapes {shapes}")
    n, cols = shapes.pop()
    if _log_int(cols, n) is None:
        raise DimensionError(f"Kraus shape {(n, cols)} is not N x N**(m-1)")
    return n, cols


def kraus_to_choi(ops: Sequence[np.ndarray], tol: float = TOL) -> DynamicalMatrix:
    """Dynamical matrix from Kraus operators of shape ``N x N**(m-1)``.

    Raises:
        CompletenessError: if ``sum K^dagger K`` deviates from identity by more than ``tol``.
    """
    n, cols = _check_kraus_shapes(ops)
    defect = kraus_completeness_defect(ops)
    if defect > tol:
        raise CompletenessError(f"Kraus completeness violated by {defect:.3e}", defect)
    vecs = np.array([np.asarray(k, dtype=complex).reshape(-1) for k in ops])
    return DynamicalMatrix(vecs.T @ vecs.conj(), n)


def choi_to_kraus(d, tol: float = TOL_PSD, cutoff: float = KRAUS_RANK_CUTOFF) -> list[np.ndarray]:
    """Minimal Kraus set from the eigen-decomposition of D.

    Eigenvalues below ``cutoff * lambda_max`` are discarded, so the number of
    operators equals the numerical rank.
    """
    dm = as_dynamical(d)
    w, v = herm_eig(dm.matrix, tol)
    if w[-1] < -tol:
        raise ValidationError(f"dynamical matrix is not PSD (eigenvalue {w[-1]:.3e})")
    keep = w > cutoff * max(w[0], 0.0)
    cols = dm.n ** (dm.m - 1)
    return [np.sqrt(lam) * v[:, i].reshape(dm.n, cols) for i, lam in zip(np.flatnonzero(keep), w[keep])]


def apply_kraus(ops: Sequence[np.ndarray], x: np.ndarray) -> np.ndarray:
    return sum(k @ x @ k.conj().T for k in ops)


def kraus_to_unitary(ops: Sequence[np.ndarray], tol: float = TOL_RECON) -> np.ndarray:
    """Unitary ``U = sum_i K_i ⊗ |i>`` for a binary channel with exactly N Kraus operators.

    Row ``(a, i)`` of U is row ``a`` of ``K_i``, so that
    ``Tr_2[U (rho ⊗ sigma) U^dagger]`` reproduces the channel.
    """
    n, cols = _check_kraus_shapes(ops)
    if cols != n * n:
        raise DimensionError("kraus_to_unitary handles binary channels (N x N^2 operators)")
    if len(ops) != n:
        raise ValidationError(f"need exactly N={n} Kraus operators, got {len(ops)}")
    u = np.stack([np.asarray(k, dtype=complex) for k in ops], axis=1).reshape(n * n, n * n)
    err = float(np.max(np.abs(u.conj().T @ u - np.eye(n * n))))
    if err > tol:
        raise ValidationError(f"resulting matrix is not unitary (defect {err:.3e})")
    return u


def unitary_to_kraus(u: np.ndarray, n: int) -> list[np.ndarray]:
    """Inverse of :func:`kraus_to_unitary`."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (n * n, n * n):
        raise DimensionError(f"expected a {n * n}x{n * n} unitary")
    return [u.reshape(n, n, n * n)[:, i, :] for i in range(n)]


def stinespring_apply(u: np.ndarray, rho: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """``Tr_2[U (rho ⊗ sigma) U^dagger]``."""
    n = rho.shape[0]
    out = u @ kron(rho, sigma) @ u.conj().T
    return partial_trace(out, [n, n], keep=[0])


@dataclass(frozen=True)
class BlockStructure:
    """Column permutation bringing ``U`` to block-diagonal form.

    ``u[:, column_order]`` equals ``block_diag(*blocks)``.
    """

    column_order: np.ndarray
    blocks: list[np.ndarray]

    def permutation_matrix(self) -> np.ndarray:
        """``P`` with ``U P^T`` block diagonal."""
        k = len(self.column_order)
        p = np.zeros((k, k))
        p[np.arange(k), self.column_order] = 1.0
        return p


def block_structure(u: np.ndarray, n: int, tol: float = 1e-10) -> BlockStructure:
    """Find the N x N diagonal blocks of ``U`` after a column permutation."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (n * n, n * n):
        raise DimensionError(f"expected side {n * n}")
    weights = np.abs(u.reshape(n, n, n * n)) ** 2
    owner = np.argmax(weights.sum(axis=1), axis=0)
    order = np.argsort(owner, kind="stable")
    if np.any(np.bincount(owner, minlength=n) != n):
        raise ValidationError("columns do not split evenly into N blocks")
    permuted = u[:, order]
    blocks = []
    for k in range(n):
        rows = slice(k * n, (k + 1) * n)
        blk = permuted[rows, rows]
        rest = permuted[rows].copy()
        rest[:, rows] = 0
        if np.max(np.abs(rest), initial=0.0) > tol:
            raise ValidationError("matrix is not block diagonal after column permutation")
        if np.max(np.abs(blk.conj().T @ blk - np.eye(n))) > tol:
            raise ValidationError(f"block {k} is not unitary")
        blocks.append(blk)
    return BlockStructure(order, blocks)


def random_kraus(n: int, rng: np.random.Generator, m: int = 3, rank: int | None = None) -> list[np.ndarray]:
    """Kraus operators cut from a random isometry of shape ``(rank*N) x N**(m-1)``."""
    cols = n ** (m - 1)
    r = rank if rank is not None else cols
    if r * n < cols:
        raise DimensionError(f"rank {r} too small for a trace preserving map")
    v = random_isometry(r * n, cols, rng)
    return [v[i * n : (i + 1) * n] for i in range(r)]


def random_channel(n: int, rng: np.random.Generator, m: int = 3, rank: int | None = None) -> DynamicalMatrix:
    return kraus_to_choi(random_kraus(n, rng, m, rank))


def compose_binary(ops: Sequence[np.ndarray], inner: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Kraus set of ``(rho_1, rest) -> Phi(rho_1, Psi(rest))``.

    ``ops`` are the N x N^2 operators of the binary ``Phi`` and ``inner`` those of
    ``Psi`` acting on the remaining inputs.
    """
    n = ops[0].shape[0]
    eye = np.eye(n)
    return [k @ np.kron(eye, j) for k in ops for j in inner]


def conjugate_kraus(ops: Sequence[np.ndarray], w: np.ndarray) -> list[np.ndarray]:
    """Kraus set of the channel rotated by ``w`` on every subsystem.

    ``K -> W K (W^dagger ⊗ ... ⊗ W^dagger)``, so the new channel maps
    ``W rho W^dagger`` inputs to ``W Phi(rho) W^dagger``.
    """
    n, cols = ops[0].shape
    m = _log_int(cols, n) + 1
    wd = kron(*([w.conj().T] * (m - 1)))
    return [w @ k @ wd for k in ops]


def weyl_operators(n: int) -> list[np.ndarray]:
    """The N^2 clock-and-shift operators X^a Z^b."""
    omega = np.exp(2j * np.pi / n)
    shift = np.roll(np.eye(n), 1, axis=0)
    clock = np.diag(omega ** np.arange(n))
    return [np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b) for a in range(n) for b in range(n)]


def weyl_tristochastic_kraus(theta_state: np.ndarray) -> list[np.ndarray]:
    """Kraus set of ``Phi(rho, sigma) = (1/N) sum_g Tr[rho W_g t W_g^dagger] W_g sigma W_g^dagger``.

    The sum runs over the Weyl operators and ``t`` is a fixed density matrix; the
    channel is tristochastic for every choice of ``t``.
    """
    t = as_density(theta_state)
    n = t.shape[0]
    lam, vec = herm_eig(t)
    ops = []
    for wg in weyl_operators(n):
        for li, vi in zip(lam, vec.T):
            if li <= 1e-15:
                continue
            bra = (wg @ vi).conj()  # <t| W_g^dagger as a row vector
            ops.append(np.sqrt(li / n) * np.kron(bra[None, :], wg))
    return ops


# --------------------------------------------------------------------------
# fixed points


@dataclass
class ChannelFixedPoint:
    """Outcome of iterating ``sigma -> Phi[sigma, ..., sigma]``.

    Attributes:
        state: final iterate.
        iterations: number of channel applications.
        converged: whether the Frobenius step fell below the tolerance.
        distances: ``||sigma^(n) - I/N||_2`` for n = 0..iterations.
        law_deviation: when requested, the largest Frobenius gap between
            ``sigma^(n)`` and ``(1 - c_n) I/N + c_n rho^(n)`` with
            ``c_n = (1 - alpha)^((m-1)^n)``.
    """

    state: np.ndarray
    iterations: int
    converged: bool
    distances: list[float]
    law_deviation: float | None = None


def _decay_factor(alpha: float, m: int, step: int) -> float:
    """(1 - alpha) ** ((m - 1) ** step) without overflow."""
    if alpha >= 1.0:
        return 0.0
    if alpha <= 0.0:
        return 1.0
    return math.exp(float(m - 1) ** step * math.log1p(-alpha))


def _self_apply(dm: DynamicalMatrix, s: np.ndarray) -> np.ndarray:
    """One step of the self-convolution, renormalized to unit trace against rounding drift."""
    out = apply_linear(dm, kron(*([s] * (dm.m - 1))))
    return out / np.trace(out)


def channel_fixed_point_iterate(
    d, rho0, max_iter: int = 60, tol: float = 1e-12, check_law: bool = False
) -> ChannelFixedPoint:
    """Iterate the channel on copies of its own output starting at ``rho0``."""
    dm = as_dynamical(d)
    _require_channel(dm, TOL)
    s = as_density(rho0, dm.n)
    rho_star = maximally_mixed(dm.n)
    dists = [float(np.linalg.norm(s - rho_star))]
    law = None
    if check_law:
        lam_min = float(np.linalg.eigvalsh(s)[0])
        alpha = min(1.0, max(0.0, dm.n * lam_min))
        bnd = (s - alpha * rho_star) / (1 - alpha) if alpha < 1 else np.diag(np.eye(dm.n)[0]).astype(complex)
        law = 0.0
    converged = False
    it = 0
    while it < max_iter:
        ns = _self_apply(dm, s)
        it += 1
        step = float(np.linalg.norm(ns - s))
        s = ns
        dists.append(float(np.linalg.norm(s - rho_star)))
        if check_law:
            bnd = _self_apply(dm, bnd)
            c = _decay_factor(alpha, dm.m, it)
            law = max(law, float(np.linalg.norm(s - ((1 - c) * rho_star + c * bnd))))
        if step <= tol:
            converged = True
            break
    return ChannelFixedPoint(s, it, converged, dists, law)


def fixed_point_residual(d, rho) -> float:
    """``||Phi[rho, ..., rho] - rho||_2``."""
    dm = as_dynamical(d)
    r = np.asarray(rho, dtype=complex)
    return float(np.linalg.norm(_self_apply(dm, r) - r))


# --------------------------------------------------------------------------
# reducibility


def _orthonormal_columns(v, n: int, tol: float = 1e-9) -> np.ndarray:
    c = np.asarray(v, dtype=complex)
    if c.ndim == 1:
        c = c[:, None]
    if c.shape[0] != n:
        raise DimensionError(f"basis vectors must have length {n}")
    if c.shape[1] == 0:
        raise ValidationError("empty subspace basis")
    if np.max(np.abs(c.conj().T @ c - np.eye(c.shape[1]))) > tol:
        raise ValidationError("subspace basis is not orthonormal")
    return c


def eigenstate_from_reducing_subspace(v_perp) -> np.ndarray:
    """Maximally mixed state on the span of the orthonormal columns ``v_perp``."""
    c = np.asarray(v_perp, dtype=complex)
    c = _orthonormal_columns(c, c.shape[0])
    return projector(c) / c.shape[1]


def reducing_value(d, v) -> float:
    """``Tr[D (P_V ⊗ P_perp^T ⊗ ... ⊗ P_perp^T)]``.

    This is ``Tr[P_V Phi[P_perp, ..., P_perp]]``, the weight the channel sends
    into V when every input lives in the orthogonal complement. It vanishes iff
    the pure-state reducibility condition holds, because all terms are nonnegative.
    """
    dm = as_dynamical(d)
    c = _orthonormal_columns(v, dm.n)
    pv = projector(c)
    pp = projector(orthogonal_complement(c))
    op = kron(pv, *([pp.T] * (dm.m - 1)))
    return float(np.real(np.trace(dm.matrix @ op)))


def channel_reducing_check(d, v, tol: float = TOL) -> bool:
    """Whether the proper subspace spanned by ``v`` is reducing."""
    dm = as_dynamical(d)
    c = _orthonormal_columns(v, dm.n)
    if c.shape[1] >= dm.n:
        raise ValidationError("a reducing subspace must be proper")
    return reducing_value(dm, c) <= tol


def find_coordinate_reducing_subspaces(d, tol: float = TOL) -> list[tuple[int, ...]]:
    """Index sets I whose coordinate subspaces span(e_i, i in I) are reducing."""
    from tristoch.classical import _search_reducing

    dm = as_dynamical(d)
    diag = np.real(np.diag(dm.matrix)).reshape([dm.n] * dm.m)
    return _search_reducing(diag, prune=False, tol=tol)


# --------------------------------------------------------------------------
# identity and inverse


def _probe_inputs(n: int, inputs: str) -> list[np.ndarray]:
    if inputs == "full":
        units = []
        for i in range(n):
            for j in range(n):
                e = np.zeros((n, n), dtype=complex)
                e[i, j] = 1.0
                units.append(e)
        return units
    if inputs == "diagonal":
        return [np.diag(np.eye(n)[i]).astype(complex) for i in range(n)]
    raise ValueError(f"inputs must be 'full' or 'diagonal', got {inputs!r}")


def identity_defect(d, rho, inputs: str = "full") -> float:
    """Max over probe inputs X of ``|rho * X - X|`` and ``|X * rho - X|``.

    ``inputs="full"`` probes all matrix units, which by linearity covers every
    input state. ``inputs="diagonal"`` probes only the diagonal units, i.e. the
    classical restriction of the channel.
    """
    dm = as_dynamical(d)
    if dm.m != 3:
        raise DimensionError("identity is defined for binary channels")
    r = np.asarray(rho, dtype=complex)
    worst = 0.0
    for x in _probe_inputs(dm.n, inputs):
        left = apply_linear(dm, np.kron(r, x))
        right = apply_linear(dm, np.kron(x, r))
        worst = max(worst, float(np.max(np.abs(left - x))), float(np.max(np.abs(right - x))))
    return worst


def purity(rho) -> float:
    r = np.asarray(rho, dtype=complex)
    return float(np.real(np.trace(r @ r)))


def identity_choi(n: int) -> np.ndarray:
    """Dynamical matrix of the identity channel, ``D[(a, c), (b, d)] = δ_ac δ_bd``."""
    v = np.eye(n).reshape(-1)
    return np.outer(v, v).astype(complex)


def identity_marginal_readings(d, rho) -> dict[str, np.ndarray]:
    """Two readings of the projected-marginal condition for an identity candidate.

    Returns the sandwiched partial traces over the last input for the projector
    ``P`` onto ``rho`` and for its transpose ``P^T``, together with the dynamical
    matrices of the two one-input channels ``X -> Phi[X, rho]`` and
    ``X -> Phi[rho, X]``. For a pure ``rho`` the ``P^T`` reading equals the
    dynamical matrix of ``X -> Phi[X, rho]`` exactly, whatever the channel; the
    ``P`` reading does so only when ``rho`` is real.
    """
    dm = as_dynamical(d)
    n = dm.n
    r = np.asarray(rho, dtype=complex)
    w, v = herm_eig(r)
    p = projector(v[:, 0])
    eye = np.eye(n)
    out = {}
    for name, q in (("P", p), ("P_transpose", p.T)):
        s3 = kron(eye, eye, q)
        s2 = kron(eye, q, eye)
        out[f"{name}_slot3"] = partial_trace(s3 @ dm.matrix @ s3, dm.dims, keep=[0, 1])
        out[f"{name}_slot2"] = partial_trace(s2 @ dm.matrix @ s2, dm.dims, keep=[0, 2])
    out["channel_slot3"] = choi_from_map(lambda x: apply_linear(dm, np.kron(x, r)), n, 2).matrix
    out["channel_slot2"] = choi_from_map(lambda x: apply_linear(dm, np.kron(r, x)), n, 2).matrix
    return out


def verify_identity(d, rho, inputs: str = "full", tol: float = TOL) -> bool:
    """Whether ``rho`` acts as a two-sided identity of the binary channel.

    When the identity holds, the candidate must also be pure; this is checked
    as an internal consistency condition.
    """
    dm = as_dynamical(d)
    _require_channel(dm, tol)
    r = as_density(rho, dm.n, tol)
    ok = identity_defect(dm, r, inputs) <= tol
    if ok and inputs == "full" and abs(purity(r) - 1.0) > 1e-6:
        raise AssertionError("verified identity is not pure")
    return ok


def inverse_projector_traces(d, identity, rho, sigma) -> tuple[float, float]:
    """``Tr[(P_I ⊗ P_rho ⊗ P_sigma) D (P_I ⊗ P_rho ⊗ P_sigma)]`` and the swapped version.

    Input projectors enter transposed, matching the transposes in the channel action.
    """
    dm = as_dynamical(d)

    def top(x):
        _, v = herm_eig(np.asarray(x, dtype=complex))
        return projector(v[:, 0])

    pi, pr, ps = top(identity), top(rho), top(sigma)
    vals = []
    for a, b in ((pr, ps), (ps, pr)):
        s = kron(pi, a.T, b.T)
        vals.append(float(np.real(np.trace(s @ dm.matrix @ s))))
    return vals[0], vals[1]


def verify_inverse(d, rho, sigma, identity, inputs: str = "full", tol: float = TOL) -> bool:
    """Whether ``rho * sigma = sigma * rho = identity``.

    Raises:
        IdentityNotVerifiedError: if ``identity`` fails :func:`verify_identity`.
    """
    dm = as_dynamical(d)
    if not verify_identity(dm, identity, inputs, tol):
        raise IdentityNotVerifiedError("the supplied identity state is not an identity of the channel")
    r = as_density(rho, dm.n, tol)
    s = as_density(sigma, dm.n, tol)
    e = as_density(identity, dm.n, tol)
    ok = (
        np.max(np.abs(quantum_convolve(dm, r, s, tol) - e)) <= tol
        and np.max(np.abs(quantum_convolve(dm, s, r, tol) - e)) <= tol
    )
    if ok and abs(purity(r) - 1.0) <= 1e-6 and abs(purity(s) - 1.0) <= 1e-6:
        t1, t2 = inverse_projector_traces(dm, e, r, s)
        if abs(t1 - 1.0) > 1e-6 or abs(t2 - 1.0) > 1e-6:
            raise AssertionError("inverse pair violates the projector-trace condition")
    return bool(ok)


def hermitian_defect(d) -> float:
    return hermiticity_defect(as_dynamical(d).matrix)
