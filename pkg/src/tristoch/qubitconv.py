"""The two-qubit convolution gate family U4(alpha, theta, phi).

Basis order is |00>, |01>, |10>, |11> with wire 0 the first tensor factor. The
convolution channel is ``Tr_2[U4 (rho x sigma) U4^dagger]``; its Kraus pair is
the first two and last two rows of U4 with the second-wire index pulled out.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from tristoch.numkit import (
    DimensionError,
    ValidationError,
    is_unitary,
    kron,
    partial_trace,
    von_neumann_entropy,
)
from tristoch.qchannel import apply_kraus, unitary_to_kraus

TWO_PI = 2.0 * math.pi
I2 = np.eye(2, dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (X, Y, Z)
P0 = np.diag([1.0, 0.0]).astype(complex)
P1 = np.diag([0.0, 1.0]).astype(complex)


# --------------------------------------------------------------------------
# parameters and the gate


@dataclass(frozen=True)
class ConvParams:
    """Phases of U4. ``normalized()`` maps theta into (-pi, pi] and alpha, phi into [0, 2pi).

    Shifting theta by 2pi flips the sign of the last two rows of U4, so each such
    shift is absorbed by adding pi to alpha.
    """

    alpha: float = 0.0
    theta: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "theta", "phi"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")

    def normalized(self) -> "ConvParams":
        turns = math.floor((math.pi - self.theta) / TWO_PI)
        theta = self.theta + TWO_PI * turns
        alpha = self.alpha - math.pi * turns
        return ConvParams(alpha % TWO_PI, theta, self.phi % TWO_PI)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.alpha, self.theta, self.phi)


def _params(p) -> ConvParams:
    if isinstance(p, ConvParams):
        return p
    return ConvParams(*map(float, p))


def u4(p) -> np.ndarray:
    """The 4x4 convolution unitary for parameters ``(alpha, theta, phi)``."""
    p = _params(p)
    c, s = math.cos(p.theta / 2), math.sin(p.theta / 2)
    ea, eb = np.exp(1j * p.alpha), np.exp(1j * (p.alpha + p.phi))
    return np.array(
        [
            [1, 0, 0, 0],
            [0, 0, 0, 1],
            [0, ea * c, ea * s, 0],
            [0, eb * s, -eb * c, 0],
        ],
        dtype=complex,
    )


def qubit_kraus(p) -> list[np.ndarray]:
    """The two 2x4 Kraus operators of the convolution channel."""
    return unitary_to_kraus(u4(p), 2)


def convolve_qubits(p, rho: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """``Tr_2[U4 (rho x sigma) U4^dagger]``."""
    u = u4(p)
    return partial_trace(u @ kron(rho, sigma) @ u.conj().T, (2, 2), [0])


# --------------------------------------------------------------------------
# circuits

GATE_NAMES = ("H", "CNOT", "Z", "X", "CZ", "CX", "PHASE")
_SINGLE = {"H", "Z", "X"}
_CONTROLLED = {"CNOT", "CZ", "CX"}
_PARAMETRIZED = {"Z", "X", "CZ", "CX", "PHASE"}


@dataclass(frozen=True)
class Gate:
    """One gate. ``wires`` is ``(target,)`` or ``(control, target)``; PHASE uses no wires."""

    name: str
    wires: tuple[int, ...] = ()
    param: float | None = None

    def __post_init__(self):
        if self.name not in GATE_NAMES:
            raise ValidationError(f"unknown gate {self.name!r}")
        object.__setattr__(self, "wires", tuple(int(w) for w in self.wires))
        need = 1 if self.name in _SINGLE else 2 if self.name in _CONTROLLED else 0
        if len(self.wires) != need or any(w not in (0, 1) for w in self.wires):
            raise ValidationError(f"gate {self.name} needs {need} wire(s) from {{0, 1}}, got {self.wires}")
        if need == 2 and self.wires[0] == self.wires[1]:
            raise ValidationError("control and target must differ")
        if (self.name in _PARAMETRIZED) != (self.param is not None):
            raise ValidationError(f"gate {self.name} parameter mismatch")


def z_gate(a: float) -> np.ndarray:
    """``|0><0| + e^{ia} |1><1|``."""
    return np.diag([1.0, np.exp(1j * a)])


def x_gate(a: float) -> np.ndarray:
    """``|+><+| + e^{ia} |-><-|``."""
    return H @ z_gate(a) @ H


def _on_wire(op: np.ndarray, wire: int) -> np.ndarray:
    return kron(op, I2) if wire == 0 else kron(I2, op)


def _controlled(op: np.ndarray, control: int, target: int) -> np.ndarray:
    if control == 0:
        return kron(P0, I2) + kron(P1, op)
    return kron(I2, P0) + kron(op, P1)


def gate_matrix(g: Gate) -> np.ndarray:
    if g.name == "PHASE":
        return np.exp(1j * g.param) * np.eye(4)
    if g.name in _SINGLE:
        op = H if g.name == "H" else z_gate(g.param) if g.name == "Z" else x_gate(g.param)
        return _on_wire(op, g.wires[0])
    op = X if g.name == "CNOT" else z_gate(g.param) if g.name == "CZ" else x_gate(g.param)
    return _controlled(op, *g.wires)


def circuit_to_unitary(circuit: Iterable[Gate]) -> np.ndarray:
    """Product of gate matrices, first gate applied first."""
    u = np.eye(4, dtype=complex)
    for g in circuit:
        u = gate_matrix(g) @ u
    return u


def decompose_u4(p) -> list[Gate]:
    """U4 as Hadamards, CNOTs and the controlled phase block Lambda(alpha, theta, phi)."""
    p = _params(p)
    prefix = [Gate("H", (0,)), Gate("H", (1,)), Gate("CNOT", (0, 1))] * 2
    lam = [
        Gate("Z", (0,), p.alpha - p.theta / 2),
        Gate("CZ", (0, 1), math.pi / 2),
        Gate("CX", (0, 1), p.theta),
        Gate("CZ", (0, 1), p.phi + math.pi / 2),
    ]
    return prefix + lam


def factored_u4_circuit(p, exact: bool = True) -> list[Gate]:
    """U4 as local phases around the theta-only gate U4(0, theta, 0).

    With ``exact=True`` the phases are chosen so the product equals U4 up to a
    global phase: ``Z(-phi/2)`` on both wires, then U4(0, theta, 0), then
    ``Z(alpha + phi/2)`` on wire 0 and ``Z(phi)`` on wire 1. With ``exact=False``
    the ``Z(phi)`` on wire 1 is dropped; the result differs from U4 as a gate but
    gives the same convolution channel after tracing out wire 1.
    """
    p = _params(p)
    pre = [Gate("Z", (0,), -p.phi / 2), Gate("Z", (1,), -p.phi / 2)]
    post = [Gate("Z", (0,), p.alpha + p.phi / 2)]
    if exact:
        post.append(Gate("Z", (1,), p.phi))
    return pre + decompose_u4(ConvParams(0.0, p.theta, 0.0)) + post


def phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    """``min_phi max|a - e^{i phi} b|``, with phi aligned by ``arg Tr(b^dagger a)``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    ov = np.trace(b.conj().T @ a)
    ph = ov / abs(ov) if abs(ov) > 1e-300 else 1.0
    return float(np.max(np.abs(a - ph * b)))


# --------------------------------------------------------------------------
# circuit text formats


def circuit_to_text(circuit: Iterable[Gate]) -> str:
    """One gate per line: ``NAME wire[,wire] [param]``; PHASE uses ``-`` for wires."""
    lines = []
    for g in circuit:
        wires = ",".join(str(w) for w in g.wires) or "-"
        parts = [g.name, wires] + ([repr(float(g.param))] if g.param is not None else [])
        lines.append(" ".join(parts))
    return "\n".join(lines) + ("\n" if lines else "")


def circuit_from_text(text: str) -> list[Gate]:
    out = []
    for num, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise ValueError(f"line {num}: expected 'NAME wires [param]'")
        wires = () if parts[1] == "-" else tuple(int(w) for w in parts[1].split(","))
        param = float(parts[2]) if len(parts) == 3 else None
        out.append(Gate(parts[0].upper(), wires, param))
    return out


def circuit_to_qasm(circuit: Iterable[Gate]) -> str:
    """OpenQASM 3 text using h, cx, p, cp and gphase; CX(a) becomes h, cp(a), h."""
    lines = ["OPENQASM 3.0;", 'include "stdgates.inc";', "qubit[2] q;"]
    for g in circuit:
        w = [f"q[{i}]" for i in g.wires]
        a = repr(float(g.param)) if g.param is not None else None
        if g.name == "H":
            lines.append(f"h {w[0]};")
        elif g.name == "CNOT":
            lines.append(f"cx {w[0]}, {w[1]};")
        elif g.name == "Z":
            lines.append(f"p({a}) {w[0]};")
        elif g.name == "X":
            lines += [f"h {w[0]};", f"p({a}) {w[0]};", f"h {w[0]};"]
        elif g.name == "CZ":
            lines.append(f"cp({a}) {w[0]}, {w[1]};")
        elif g.name == "CX":
            lines += [f"h {w[1]};", f"cp({a}) {w[0]}, {w[1]};", f"h {w[1]};"]
        elif g.name == "PHASE":
            lines.append(f"gphase({a});")
    return "\n".join(lines) + "\n"


_QASM_STMT = re.compile(r"^(\w+)(?:\(([^)]*)\))?\s*(.*)$")


def circuit_from_qasm(text: str) -> list[Gate]:
    """Parse the subset written by :func:`circuit_to_qasm`."""
    out = []
    for raw in text.split(";"):
        stmt = raw.split("//", 1)[0].strip()
        if not stmt or stmt.startswith(("OPENQASM", "include", "qubit")):
            continue
        m = _QASM_STMT.match(stmt)
        if not m:
            raise ValueError(f"cannot parse statement {stmt!r}")
        name, arg, rest = m.groups()
        wires = tuple(int(x) for x in re.findall(r"q\[(\d+)\]", rest))
        param = float(arg) if arg else None
        mapping = {"h": "H", "cx": "CNOT", "p": "Z", "cp": "CZ", "gphase": "PHASE"}
        if name not in mapping:
            raise ValueError(f"unsupported gate {name!r}")
        out.append(Gate(mapping[name], wires, param))
    return out


# --------------------------------------------------------------------------
# named gates


def swap(n: int = 2) -> np.ndarray:
    s = np.zeros((n * n, n * n))
    for i in range(n):
        for j in range(n):
            s[j * n + i, i * n + j] = 1.0
    return s


CNOT = circuit_to_unitary([Gate("CNOT", (0, 1))])
CNOT_REV = circuit_to_unitary([Gate("CNOT", (1, 0))])
# DCNOT_A: |ab> -> |b, a xor b>;  DCNOT_B: |ab> -> |a xor b, a>
DCNOT_A = CNOT_REV @ CNOT
DCNOT_B = CNOT @ CNOT_REV


def named_gates() -> dict[str, np.ndarray]:
    s = swap(2)
    return {
        "DCNOT(|ab>->|b,a^b>)": DCNOT_A,
        "DCNOT(|ab>->|a^b,a>)": DCNOT_B,
        "SWAP*CNOT": s @ CNOT,
        "SWAP*CNOT(rev)": s @ CNOT_REV,
        "CNOT*DCNOT(|ab>->|b,a^b>)": CNOT @ DCNOT_A,
        "CNOT*DCNOT(|ab>->|a^b,a>)": CNOT @ DCNOT_B,
        "CNOT(rev)*DCNOT(|ab>->|b,a^b>)": CNOT_REV @ DCNOT_A,
        "CNOT(rev)*DCNOT(|ab>->|a^b,a>)": CNOT_REV @ DCNOT_B,
    }


def identify_special_gates(points: Sequence[tuple[float, float, float]] | None = None, tol: float = 1e-10):
    """For each parameter triple and each reading of its argument order, list matching named gates.

    Returns a list of dicts ``{"point", "order", "params", "matches"}`` where
    ``order`` names which slot is read as alpha, theta, phi.
    """
    if points is None:
        points = [(0.0, 0.0, math.pi / 2), (0.0, math.pi, 0.0), (0.0, 0.0, math.pi)]
    gates = named_gates()
    out = []
    for pt in points:
        for order in itertools.permutations(range(3)):
            params = ConvParams(pt[order[0]], pt[order[1]], pt[order[2]])
            u = u4(params)
            matches = [name for name, g in gates.items() if phase_distance(u, g) <= tol]
            labels = ("alpha", "theta", "phi")
            out.append(
                {
                    "point": tuple(pt),
                    "order": ",".join(f"{labels[i]}<-arg{order[i] + 1}" for i in range(3)),
                    "params": params.as_tuple(),
                    "matches": matches,
                }
            )
    return out


# --------------------------------------------------------------------------
# entangling power and gate typicality


def _require_bipartite_unitary(u: np.ndarray) -> int:
    u = np.asarray(u)
    n = int(round(math.sqrt(u.shape[0])))
    if u.ndim != 2 or u.shape[0] != u.shape[1] or n * n != u.shape[0]:
        raise DimensionError("expected an N^2 x N^2 matrix")
    if not is_unitary(u):
        raise ValidationError("matrix is not unitary")
    return n


def operator_entanglement(u: np.ndarray) -> float:
    """``1 - sum (lambda_i^2 / N^2)^2`` over operator-Schmidt coefficients of U."""
    n = _require_bipartite_unitary(u)
    realigned = np.asarray(u).reshape(n, n, n, n).transpose(0, 2, 1, 3).reshape(n * n, n * n)
    sv = np.linalg.svd(realigned, compute_uv=False)
    p = sv**2 / n**2
    return float(1.0 - np.sum(p**2))


def entangling_power(u: np.ndarray) -> float:
    """``(E(U) + E(SU) - E(S)) / E(S)``, normalized to [0, 1]."""
    n = _require_bipartite_unitary(u)
    s = swap(n)
    es = operator_entanglement(s)
    return (operator_entanglement(u) + operator_entanglement(s @ u) - es) / es


def gate_typicality(u: np.ndarray) -> float:
    """``(E(U) - E(US) + E(S)) / (2 E(S))``; 0 for local gates and 1 for SWAP."""
    n = _require_bipartite_unitary(u)
    s = swap(n)
    es = operator_entanglement(s)
    return (operator_entanglement(u) - operator_entanglement(u @ s) + es) / (2.0 * es)


def _linear_entropy_batch(u: np.ndarray, n: int, rng: np.random.Generator, k: int) -> np.ndarray:
    def states():
        g = rng.normal(size=(k, n)) + 1j * rng.normal(size=(k, n))
        return g / np.linalg.norm(g, axis=1, keepdims=True)

    a, b = states(), states()
    psi = np.einsum("ki,kj->kij", a, b).reshape(k, n * n)
    out = (psi @ np.asarray(u).T).reshape(k, n, n)
    rho_a = np.einsum("kij,klj->kil", out, out.conj())
    return 1.0 - np.real(np.einsum("kij,kji->k", rho_a, rho_a))


def mc_entangling_power(
    u: np.ndarray, samples: int = 100_000, seed: int = 0, chunk: int = 20_000
) -> tuple[float, float]:
    """Monte Carlo entangling power over Haar product inputs: ``(mean, stderr)``.

    Samples are split into chunks with independent child seeds, so the result
    depends only on ``(samples, seed, chunk)``.
    """
    if samples <= 0:
        raise ValueError("samples must be positive")
    n = _require_bipartite_unitary(u)
    sizes = [chunk] * (samples // chunk) + ([samples % chunk] if samples % chunk else [])
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    values = np.concatenate(
        [_linear_entropy_batch(u, n, np.random.default_rng(c), k) for c, k in zip(children, sizes)]
    )
    scale = (n + 1) / (n - 1)
    values = scale * values
    stderr = float(values.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return float(values.mean()), stderr


def typicality_closed_form(theta: float, swapped: bool = False) -> float:
    """Gate typicality of U4 as a function of theta alone.

    ``g_t(U4) = (3 + cos theta) / 6``. With ``swapped=True`` this returns
    ``g_t(U4 S) = (3 - cos theta) / 6``, the value for the gate with its two
    inputs exchanged.
    """
    sign = -1.0 if swapped else 1.0
    return (3.0 + sign * math.cos(theta)) / 6.0


def plane_data(thetas: Iterable[float], alpha: float = 0.0, phi: float = 0.0) -> list[tuple[float, float, float]]:
    """Rows ``(theta, e_p, g_t)`` for a theta sweep."""
    rows = []
    for t in thetas:
        u = u4(ConvParams(alpha, t, phi))
        rows.append((float(t), entangling_power(u), gate_typicality(u)))
    return rows


# --------------------------------------------------------------------------
# Bloch geometry


def bloch_vector(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    return np.array([np.real(np.trace(rho @ p)) for p in PAULI])


def from_bloch(r: Sequence[float]) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return 0.5 * (I2 + sum(ri * p for ri, p in zip(r, PAULI)))


def affine_rank(points: np.ndarray, tol: float = 1e-9) -> int:
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        return 0
    sv = np.linalg.svd(pts - pts.mean(axis=0), compute_uv=False)
    return int(np.sum(sv > tol))


# --------------------------------------------------------------------------
# correlated noise mitigation


@dataclass(frozen=True)
class NoiseVector:
    """Collective rotation vector ``r``: axis ``r / |r|`` and angle ``pi |r|``."""

    r: tuple[float, float, float]
    norm: float = field(init=False)

    def __post_init__(self):
        r = tuple(float(x) for x in self.r)
        if len(r) != 3 or not all(math.isfinite(x) for x in r):
            raise ValidationError("noise vector needs three finite components")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "norm", math.sqrt(sum(x * x for x in r)))

    @property
    def direction(self) -> np.ndarray:
        if self.norm == 0.0:
            raise ValidationError("zero noise vector has no direction")
        return np.asarray(self.r) / self.norm

    @property
    def w(self) -> float:
        """``1 - rhat_3^2``; taken as 0 for the zero vector."""
        return 0.0 if self.norm == 0.0 else 1.0 - self.direction[2] ** 2


def noise_rotation(r: NoiseVector) -> np.ndarray:
    """``cos(pi|r|/2) I + i sin(pi|r|/2) (rhat . sigma)``; identity for r = 0."""
    if r.norm == 0.0:
        return I2.copy()
    n = r.direction
    half = math.pi * r.norm / 2
    return math.cos(half) * I2 + 1j * math.sin(half) * sum(ni * p for ni, p in zip(n, PAULI))


def _as_pure(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if psi.shape != (2,):
        raise DimensionError("psi must be a 2-vector")
    if abs(np.linalg.norm(psi) - 1.0) > 1e-9:
        raise ValidationError("psi must be normalized")
    return psi


def mitigation_channel(p, r: NoiseVector, rho: np.ndarray) -> np.ndarray:
    """Encode with ancilla |0>, undergo R(r) x R(r), decode, trace out the ancilla.

    The composite map is ``W = U4 (R x R) U4^dagger`` acting on ``rho x |0><0|``.
    """
    u = u4(p)
    rr = noise_rotation(r)
    w = u @ kron(rr, rr) @ u.conj().T
    out = w @ kron(np.asarray(rho, dtype=complex), P0) @ w.conj().T
    return partial_trace(out, (2, 2), [0])


def mitigation_pipeline(p, r: NoiseVector, psi) -> float:
    """Fidelity ``<psi| Phi(|psi><psi|) |psi>`` of the encoded noisy round trip."""
    psi = _as_pure(psi)
    out = mitigation_channel(p, r, np.outer(psi, psi.conj()))
    return float(np.real(psi.conj() @ out @ psi))


def mitigation_closed_form(theta: float, r: NoiseVector, basis_state: int) -> float:
    """Closed-form fidelities for the basis inputs |0> and |1>."""
    w = r.w
    r3sq = 1.0 - w
    x = math.pi * r.norm
    if basis_state == 0:
        return w**2 * math.sin(x / 2) ** 4 + 0.25 * (w * math.cos(x) + r3sq + 1.0) ** 2
    if basis_state == 1:
        return 1.0 - 0.5 * w * (math.sin(theta) + 1.0) * (r3sq * (math.cos(x) - 1.0) ** 2 + math.sin(x) ** 2)
    raise ValueError("basis_state must be 0 or 1")


# --------------------------------------------------------------------------
# exploratory: entropy growth under repeated convolution


def entropy_sweep(
    thetas: Iterable[float], steps: int = 10, trials: int = 20, seed: int = 0
) -> list[tuple[float, float]]:
    """Mean von Neumann entropy after ``steps`` self-convolutions from random pure states.

    Exploratory only: ``rho_{k+1} = Phi(rho_k, rho_k)``, averaged over ``trials``
    starts that are shared across all theta values.
    """
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(trials, 2)) + 1j * rng.normal(size=(trials, 2))
    starts = [np.outer(v, v.conj()) / np.vdot(v, v).real for v in g]
    rows = []
    for t in thetas:
        ops = qubit_kraus(ConvParams(0.0, t, 0.0))
        total = 0.0
        for rho in starts:
            for _ in range(steps):
                rho = apply_kraus(ops, kron(rho, rho))
            total += von_neumann_entropy(0.5 * (rho + rho.conj().T))
        rows.append((float(t), total / trials))
    return rows
