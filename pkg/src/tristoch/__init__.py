"""Stochastic tensors, their quantum coherifications and qubit convolution gates.

Subsystem and tensor indices are 0-based and flatten row-major with the first
subsystem varying slowest. For a dynamical (Choi) matrix on ``N**m`` the first
subsystem is the output and subsystems ``2..m`` are the inputs, so that::

    D[(a, c), (b, d)] = sum_i K_i[a, c] * conj(K_i[b, d])

with ``a, b`` output indices and ``c, d`` flattened input multi-indices.
"""

__version__ = "0.1.0"

from tristoch.numkit import (  # noqa: E402
    DimensionError,
    ValidationError,
    herm_eig,
    kron,
    partial_trace,
    von_neumann_entropy,
)

__all__ = [
    "DimensionError",
    "ValidationError",
    "herm_eig",
    "kron",
    "partial_trace",
    "von_neumann_entropy",
    "__version__",
]
