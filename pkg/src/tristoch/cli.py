"""Command-line front end: ``tristoch <group> <command> ...``.

Exit codes: 0 success, 2 domain or validation error, 3 input/output or parse error.
The environment variable ``TRISTOCH_TOL`` overrides the default tolerance.
Indices in human-facing output are 1-based; JSON vectors are plain arrays.
"""

from __future__ import annotations

import argparse
import csv
import io as _stdio
import math
import os
import sys
from typing import Any, Callable

import numpy as np

from tristoch import __version__
from tristoch import classical, coherify, constructions, qchannel, qubitconv
from tristoch import io as tio
from tristoch.numkit import TOL, DimensionError, ValidationError

DEFAULT_SEED = 20240601
TOL_ENV = "TRISTOCH_TOL"
EXIT_OK, EXIT_DOMAIN, EXIT_IO = 0, 2, 3


class DomainFailure(Exception):
    """A check requested on the command line did not hold."""


# --------------------------------------------------------------------------
# output


def _jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        if np.iscomplexobj(x):
            return tio.matrix_to_json(x) if x.ndim == 2 else {"re": x.real.tolist(), "im": x.imag.tolist()}
        return x.tolist()
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def _fmt_scalar(v: Any) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt_scalar(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}: {_fmt_scalar(x)}" for k, x in v.items()) + "}"
    return str(v)


def emit(args, result: dict, rows: list[dict] | None = None, out=None) -> None:
    """Write ``result`` (and optional ``rows``) in the requested format."""
    out = out or sys.stdout
    fmt = args.format
    data = _jsonable(result)
    if fmt == "json":
        payload = dict(data)
        if rows is not None:
            payload["rows"] = _jsonable(rows)
        out.write(tio.dumps(payload))
    elif fmt == "csv":
        buf = _stdio.StringIO()
        if rows is not None:
            w = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({k: _fmt_scalar(v) for k, v in _jsonable(r).items()})
            for k, v in data.items():
                sys.stderr.write(f"# {k}={_fmt_scalar(v)}\n")
        else:
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["key", "value"])
            for k, v in data.items():
                w.writerow([k, _fmt_scalar(v)])
        out.write(buf.getvalue())
    else:
        width = max((len(k) for k in data), default=0)
        for k, v in data.items():
            out.write(f"{k.ljust(width)}  {_fmt_scalar(v)}\n")
        if rows is not None:
            keys = list(rows[0].keys())
            out.write("\t".join(keys) + "\n")
            for r in _jsonable(rows):
                out.write("\t".join(_fmt_scalar(r[k]) for k in keys) + "\n")


def _write_json(path: str | None, obj: dict) -> None:
    if path is None:
        return
    try:
        with open(path, "w") as fh:
            fh.write(tio.dumps(obj))
    except OSError as exc:
        raise tio.FormatError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _one_based(idx) -> list[int]:
    return [int(i) + 1 for i in idx]


def _parse_set(text: str) -> list[int]:
    try:
        vals = [int(x) - 1 for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise tio.FormatError(f"index set must be comma-separated integers, got {text!r}") from exc
    if any(v < 0 for v in vals):
        raise ValidationError("indices are 1-based and must be positive")
    return vals


# --------------------------------------------------------------------------
# tensor commands


def _load_tensor(path: str) -> np.ndarray:
    return tio.tensor_from_json(tio.load_json(path))


def cmd_tensor_check(args) -> int:
    t = _load_tensor(args.file)
    rep = classical.validate(t, args.tol)
    emit(
        args,
        {
            "classification": rep.classification,
            "order": rep.order,
            "dim": rep.dim,
            "stochastic_axes": _one_based(rep.stochastic_axes),
            "axis_deviation": list(rep.axis_deviation),
            "min_entry": rep.min_entry,
            "permutation": rep.is_permutation,
            "commutative": classical.is_commutative(t, args.tol) if t.ndim == 3 else None,
            "associative": classical.is_associative(t, args.tol) if t.ndim == 3 else None,
        },
    )
    return EXIT_OK


def cmd_tensor_eigenvectors(args) -> int:
    t = _load_tensor(args.file)
    vecs = classical.probability_eigenvectors(t, args.tol)
    rows = [
        {"vector": v.vector, "eigenvalue": v.eigenvalue, "reducing_set": _one_based(v.reducing_set)}
        for v in vecs
    ]
    emit(args, {"count": len(rows)}, rows)
    return EXIT_OK


def cmd_tensor_identity(args) -> int:
    t = _load_tensor(args.file)
    k = classical.identity_index(t, args.tol)
    result = {"identity_index": None if k is None else k + 1}
    result["identity"] = None if k is None else classical.find_identity(t, args.tol)
    emit(args, result)
    return EXIT_OK


def cmd_tensor_inverse(args) -> int:
    t = _load_tensor(args.file)
    n = t.shape[0]
    if args.index is not None:
        if not 1 <= args.index <= n:
            raise ValidationError(f"index must lie in 1..{n}")
        p = np.eye(n)[args.index - 1]
    else:
        p = tio.vector_from_json(tio.load_json(args.vector))
    q = classical.find_inverse(t, p, args.tol)
    result = {"input": p, "inverse": q}
    result["inverse_index"] = None if q is None else int(np.argmax(q)) + 1
    emit(args, result)
    return EXIT_OK


def cmd_tensor_reduce(args) -> int:
    t = _load_tensor(args.file)
    if args.set is None:
        sets = classical.find_reducing_sets(t, prune=not args.no_prune, tol=args.tol)
        emit(args, {"reducing_sets": [_one_based(s) for s in sets], "count": len(sets)})
        return EXIT_OK
    subset = _parse_set(args.set)
    sub = classical.truncate(t, subset, args.tol)
    _write_json(args.output, tio.tensor_to_json(sub))
    emit(
        args,
        {
            "removed": _one_based(subset),
            "dim": sub.shape[0],
            "classification": classical.validate(sub, args.tol).classification,
            "tensor": sub,
        },
    )
    return EXIT_OK


def cmd_tensor_make(args) -> int:
    rng = np.random.default_rng(args.seed)
    kind = args.kind
    extra: dict[str, Any] = {}
    if kind == "t2":
        t = constructions.t2()
    elif kind == "t3":
        t = constructions.t3()
    elif kind == "cyclic":
        t = constructions.group_tensor(args.n, args.m)
    elif kind == "uniform":
        t = constructions.uniform_tensor(args.n, args.m)
    elif kind == "qubit-family":
        t = constructions.qubit_family(args.x)
    elif kind == "random":
        t = constructions.random_tristochastic(args.n, rng, args.m)
        extra["seed"] = args.seed
    elif kind == "permutation":
        t = constructions.random_permutation_tensor(args.n, rng, args.m)
        extra["seed"] = args.seed
    else:
        t, red = constructions.random_reducible(args.n, rng, args.m)
        extra.update(seed=args.seed, reducing_set=_one_based(red))
    doc = tio.tensor_to_json(t)
    if args.output:
        _write_json(args.output, doc)
        emit(args, {"written": args.output, **extra})
    else:
        emit(args, {**doc, **extra})
    return EXIT_OK


# --------------------------------------------------------------------------
# convolution


def _load_channel(path: str) -> qchannel.DynamicalMatrix:
    obj = tio.load_json(path)
    if isinstance(obj, dict) and "entries" in obj:
        return coherify.coherify_diagonal(tio.tensor_from_json(obj))
    if isinstance(obj, dict) and "ops" in obj:
        return qchannel.kraus_to_choi(tio.kraus_from_json(obj))
    return tio.dynamical_from_json(obj)


def cmd_convolve_classical(args) -> int:
    t = _load_tensor(args.tensor)
    vecs = [tio.vector_from_json(tio.load_json(f)) for f in args.inputs]
    out = classical.apply_m(t, vecs, args.tol)
    _write_json(args.output, tio.vector_to_json(out))
    emit(args, {"result": out})
    return EXIT_OK


def cmd_convolve_quantum(args) -> int:
    d = _load_channel(args.channel)
    states = [tio.matrix_from_json(tio.load_json(f)) for f in args.inputs]
    out = qchannel.apply_m_channel(d, states, args.tol)
    result: dict[str, Any] = {"result": out}
    if args.check_diagonal:
        tensor = np.real(np.diag(d.matrix)).reshape(d.dims)
        expected = classical.apply_m(tensor, [np.real(np.diag(s)) for s in states], args.tol)
        dev = float(np.max(np.abs(np.real(np.diag(out)) - expected)))
        result.update(diagonal_expected=expected, diagonal_deviation=dev)
        if dev > args.tol:
            emit(args, result)
            raise DomainFailure(f"output diagonal differs from the classical product by {dev:.3e}")
    _write_json(args.output, tio.matrix_to_json(out))
    emit(args, result)
    return EXIT_OK


# --------------------------------------------------------------------------
# coherification


def cmd_coherify(args) -> int:
    t = _load_tensor(args.file)
    if args.scheme == "diagonal":
        d = coherify.coherify_diagonal(t, args.tol)
        ops = qchannel.choi_to_kraus(d)
        blocks = None
    else:
        if args.blocks:
            blocks = tio.blocks_from_json(tio.load_json(args.blocks))
        else:
            blocks = coherify.default_blocks(t.shape[0], args.scheme)
        ops, d = coherify.coherify_permutation(t, blocks, args.tol)
    report = coherify.coherence_report(d)
    result = {
        "scheme": blocks.scheme if blocks is not None else "diagonal",
        **report.as_dict(),
        "m_stochastic": qchannel.is_m_stochastic(d, args.tol),
        "kraus_count": len(ops),
    }
    if args.output:
        _write_json(args.output, {"choi": tio.dynamical_to_json(d), "kraus": tio.kraus_to_json(ops)})
    if args.full:
        result.update(choi=tio.dynamical_to_json(d), kraus=tio.kraus_to_json(ops))
    emit(args, result)
    return EXIT_OK


# --------------------------------------------------------------------------
# qubit convolution gate


def _conv_params(args) -> qubitconv.ConvParams:
    return qubitconv.ConvParams(args.alpha, args.theta, args.phi)


def cmd_qubit_u4(args) -> int:
    p = _conv_params(args)
    u = qubitconv.u4(p)
    emit(args, {"params": p.as_tuple(), "normalized": p.normalized().as_tuple(), "u4": u})
    return EXIT_OK


def cmd_qubit_circuit(args) -> int:
    p = _conv_params(args)
    gates = qubitconv.factored_u4_circuit(p) if args.factored else qubitconv.decompose_u4(p)
    dist = qubitconv.phase_distance(qubitconv.circuit_to_unitary(gates), qubitconv.u4(p))
    if args.format == "qasm":
        sys.stdout.write(qubitconv.circuit_to_qasm(gates))
    elif args.format == "text":
        sys.stdout.write(qubitconv.circuit_to_text(gates))
    else:
        emit(
            args,
            {
                "gates": [{"name": g.name, "wires": list(g.wires), "param": g.param} for g in gates],
                "phase_distance": dist,
            },
        )
    return EXIT_OK


def cmd_qubit_metrics(args) -> int:
    p = _conv_params(args)
    u = qubitconv.u4(p)
    result = {
        "params": p.as_tuple(),
        "operator_entanglement": qubitconv.operator_entanglement(u),
        "e_p": qubitconv.entangling_power(u),
        "g_t": qubitconv.gate_typicality(u),
        "g_t_closed_form": qubitconv.typicality_closed_form(p.theta),
        "g_t_swapped_inputs": qubitconv.gate_typicality(u @ qubitconv.swap(2)),
    }
    if args.mc_samples:
        mean, err = qubitconv.mc_entangling_power(u, args.mc_samples, args.seed)
        result.update(e_p_mc=mean, e_p_mc_stderr=err, seed=args.seed)
    emit(args, result)
    return EXIT_OK


def cmd_qubit_mitigate(args) -> int:
    p = _conv_params(args)
    rng = np.random.default_rng(args.seed)
    psi = np.eye(2)[args.state]
    rows = []
    for _ in range(args.trials):
        direction = rng.normal(size=3)
        r = qubitconv.NoiseVector(direction / np.linalg.norm(direction) * rng.uniform(0.0, args.max_norm))
        f = qubitconv.mitigation_pipeline(p, r, psi)
        cf = qubitconv.mitigation_closed_form(p.theta, r, args.state)
        rows.append({"r1": r.r[0], "r2": r.r[1], "r3": r.r[2], "fidelity": f, "closed_form": cf})
    fids = np.array([r["fidelity"] for r in rows])
    dev = max(abs(r["fidelity"] - r["closed_form"]) for r in rows) if rows else 0.0
    summary = {
        "seed": args.seed,
        "state": args.state,
        "trials": args.trials,
        "min_fidelity": float(fids.min()) if rows else None,
        "mean_fidelity": float(fids.mean()) if rows else None,
        "max_closed_form_deviation": float(dev),
    }
    emit(args, summary, rows if args.rows or args.format == "csv" else None)
    return EXIT_OK


def cmd_qubit_plane(args) -> int:
    thetas = np.linspace(-math.pi, math.pi, args.points)
    rows = [
        {"theta": t, "e_p": ep, "g_t": gt}
        for t, ep, gt in qubitconv.plane_data(thetas, args.alpha, args.phi)
    ]
    if args.format == "json":
        emit(args, {"points": args.points}, rows)
    else:
        # CSV is the natural format here; table mode prints the same rows
        buf = _stdio.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["theta", "e_p", "g_t"])
        for r in rows:
            w.writerow([repr(float(r["theta"])), repr(r["e_p"]), repr(r["g_t"])])
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_qubit_entropy_sweep(args) -> int:
    thetas = np.linspace(-math.pi, math.pi, args.points)
    rows = [
        {"theta": t, "mean_entropy": s}
        for t, s in qubitconv.entropy_sweep(thetas, args.steps, args.trials, args.seed)
    ]
    emit(args, {"seed": args.seed, "steps": args.steps, "trials": args.trials}, rows)
    return EXIT_OK


def cmd_qubit_gates(args) -> int:
    found = [r for r in qubitconv.identify_special_gates() if r["matches"]]
    emit(args, {"matches": found})
    return EXIT_OK


def cmd_qubit_family(args) -> int:
    ops, d = coherify.coherify_qubit_tristochastic(args.x)
    direct = coherify.entropic_coherence(d)
    result = {
        "x": args.x,
        "c2": coherify.c2_coherence(d),
        "c2_closed_form": coherify.qubit_c2_closed_form(args.x),
        "entropic": direct,
        "entropic_closed_form_minus_ln2": coherify.qubit_entropic_closed_form(args.x, -1.0),
        "entropic_closed_form_plus_ln2": coherify.qubit_entropic_closed_form(args.x, +1.0),
        "note": (
            "direct S(diag) - S(rho) matches the closed form with -ln 2; "
            "the +ln 2 variant exceeds it by 2 ln 2"
        ),
    }
    emit(args, result)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def _default_tol() -> float:
    raw = os.environ.get(TOL_ENV)
    if raw is None:
        return TOL
    try:
        tol = float(raw)
    except ValueError:
        tol = -1.0
    if not (math.isfinite(tol) and tol > 0):
        sys.stderr.write(f"error: {TOL_ENV} must be a positive number, got {raw!r}\n")
        raise SystemExit(EXIT_DOMAIN)
    return tol


def _common(sub_default: bool) -> argparse.ArgumentParser:
    """Options accepted both before and after the subcommand."""
    sup = argparse.SUPPRESS if sub_default else None
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=sup if sub_default else DEFAULT_SEED,
                   help=f"RNG seed (default {DEFAULT_SEED})")
    p.add_argument("--tol", type=float, default=sup if sub_default else _default_tol(),
                   help=f"numerical tolerance (default {TOL}, or ${TOL_ENV})")
    p.add_argument("--format", choices=["json", "table", "csv", "text", "qasm"],
                   default=sup if sub_default else "json", help="output format")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tristoch",
        description="Stochastic tensors, convolution channels and the two-qubit convolution gate.",
        parents=[_common(False)],
    )
    parser.add_argument("--version", action="version", version=f"tristoch {__version__}")
    common = _common(True)
    groups = parser.add_subparsers(dest="group", required=True)

    def leaf(sub, name: str, fn: Callable, help_: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=fn)
        return p

    # tensor
    g = groups.add_parser("tensor", help="classical tensor operations")
    sub = g.add_subparsers(dest="command", required=True)
    for name, fn, h in (
        ("check", cmd_tensor_check, "classify stochasticity"),
        ("eigenvectors", cmd_tensor_eigenvectors, "list probability eigenvectors"),
        ("identity", cmd_tensor_identity, "find the identity vector"),
    ):
        leaf(sub, name, fn, h).add_argument("file")
    p = leaf(sub, "inverse", cmd_tensor_inverse, "inverse of a basis vector")
    p.add_argument("file")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--index", type=int, help="1-based basis vector index")
    src.add_argument("--vector", help="vector JSON file")
    p = leaf(sub, "reduce", cmd_tensor_reduce, "list reducing sets or truncate by one")
    p.add_argument("file")
    p.add_argument("--set", help="comma-separated 1-based indices to remove")
    p.add_argument("--no-prune", action="store_true", help="search all subset sizes")
    p.add_argument("-o", "--output")
    p = leaf(sub, "make", cmd_tensor_make, "write a named or random tensor")
    p.add_argument("kind", choices=["t2", "t3", "cyclic", "uniform", "qubit-family", "random", "permutation", "reducible"])
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--x", type=float, default=0.5)
    p.add_argument("-o", "--output")

    # convolve
    g = groups.add_parser("convolve", help="apply a tensor or channel")
    sub = g.add_subparsers(dest="command", required=True)
    p = leaf(sub, "classical", cmd_convolve_classical, "product of probability vectors")
    p.add_argument("tensor")
    p.add_argument("inputs", nargs="+", help="vector JSON files, one per input slot")
    p.add_argument("-o", "--output")
    p = leaf(sub, "quantum", cmd_convolve_quantum, "product of density matrices")
    p.add_argument("channel", help="dynamical matrix, Kraus set or tensor JSON (tensor = diagonal channel)")
    p.add_argument("inputs", nargs="+", help="density matrix JSON files")
    p.add_argument("--check-diagonal", action="store_true",
                   help="compare the output diagonal with the classical product of input diagonals")
    p.add_argument("-o", "--output")

    # coherify
    p = groups.add_parser("coherify", parents=[common], help="coherify a tensor")
    p.set_defaults(func=cmd_coherify)
    p.add_argument("file")
    p.add_argument("--scheme", choices=["mub", "fourier", "identity", "diagonal"], default=None)
    p.add_argument("--blocks", help="block family JSON (overrides --scheme)")
    p.add_argument("--full", action="store_true", help="include D and Kraus operators in the output")
    p.add_argument("-o", "--output", help="write D and Kraus operators as JSON")

    # qubit
    g = groups.add_parser("qubit", help="two-qubit convolution gate")
    sub = g.add_subparsers(dest="command", required=True)

    def with_params(p):
        p.add_argument("--alpha", type=float, default=0.0)
        p.add_argument("--theta", type=float, default=math.pi / 2)
        p.add_argument("--phi", type=float, default=0.0)
        return p

    with_params(leaf(sub, "u4", cmd_qubit_u4, "print the U4 matrix"))
    p = with_params(leaf(sub, "circuit", cmd_qubit_circuit, "gate decomposition"))
    p.add_argument("--factored", action="store_true", help="local phases around U4(0, theta, 0)")
    p = with_params(leaf(sub, "metrics", cmd_qubit_metrics, "entangling power and gate typicality"))
    p.add_argument("--mc-samples", type=int, default=0)
    p = with_params(leaf(sub, "mitigate", cmd_qubit_mitigate, "noise-mitigation fidelities"))
    p.add_argument("--state", type=int, choices=[0, 1], default=1)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--max-norm", type=float, default=1.0)
    p.add_argument("--rows", action="store_true", help="include one row per trial")
    p = leaf(sub, "plane", cmd_qubit_plane, "theta sweep of (e_p, g_t) as CSV")
    p.add_argument("--points", type=int, default=73)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--phi", type=float, default=0.0)
    p = leaf(sub, "entropy-sweep", cmd_qubit_entropy_sweep, "exploratory entropy growth per theta")
    p.add_argument("--points", type=int, default=13)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--trials", type=int, default=20)
    leaf(sub, "gates", cmd_qubit_gates, "named gates inside the family")
    p = leaf(sub, "family", cmd_qubit_family, "coherence of the qubit tristochastic family")
    p.add_argument("--x", type=float, required=True)
    return parser


_FORMATS = {"qubit circuit": {"json", "table", "csv", "text", "qasm"}}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    key = f"{args.group} {getattr(args, 'command', '')}".strip()
    allowed = _FORMATS.get(key, {"json", "table", "csv"})
    if args.format not in allowed:
        parser.error(f"--format {args.format} is not available for '{key}'")
    if not (math.isfinite(args.tol) and args.tol > 0):
        parser.error("--tol must be a positive number")
    try:
        return args.func(args)
    except (tio.FormatError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_IO
    except (ValidationError, DimensionError, DomainFailure, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
