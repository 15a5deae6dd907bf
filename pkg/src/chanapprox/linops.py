"""Dense Hermitian operators on finite-dimensional spaces and their entropies.

Operators are plain ``numpy`` arrays.  Functions taking a "trace-class
operator" accept any square array that is Hermitian and positive
semidefinite up to :data:`HERM_TOL` / :data:`PSD_TOL` and has trace at most
one; inputs are Hermitized and tiny negative eigenvalues are clipped.

All logarithms are natural (nats).  An infinite value is always the float
``math.inf``, never an overflow.
"""

from __future__ import annotations

import json
import math
from typing import Sequence

import numpy as np

HERM_TOL = 1e-10
PSD_TOL = 1e-10
TRACE_TOL = 1e-10
EIG_CUTOFF = 1e-12
SUPPORT_TOL = 1e-8


class InvalidOperatorError(ValueError):
    """Raised when an array is not an admissible (sub)normalized operator."""


def hermitize(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    return 0.5 * (A + A.conj().T)


def as_operator(A, *, normalized: bool = False) -> np.ndarray:
    """Validate ``A`` as an element of T_1 (or of the state space if ``normalized``).

    Returns the Hermitized copy.  Raises :class:`InvalidOperatorError` on a
    non-square, non-Hermitian, non-PSD or over-unit-trace input.
    """
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise InvalidOperatorError(f"expected a nonempty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidOperatorError("operator has non-finite entries")
    if np.max(np.abs(A - A.conj().T)) > HERM_TOL:
        raise InvalidOperatorError("operator is not Hermitian")
    A = hermitize(A)
    lam = np.linalg.eigvalsh(A)
    if lam[0] < -PSD_TOL:
        raise InvalidOperatorError(f"operator has negative eigenvalue {lam[0]:.3e}")
    tr = float(np.trace(A).real)
    if tr > 1 + TRACE_TOL:
        raise InvalidOperatorError(f"operator trace {tr:.12g} exceeds 1")
    if normalized and abs(tr - 1) > TRACE_TOL:
        raise InvalidOperatorError(f"state must have unit trace, got {tr:.12g}")
    return A


def as_state(rho) -> np.ndarray:
    return as_operator(rho, normalized=True)


def eigvals(A: np.ndarray) -> np.ndarray:
    """Eigenvalues of a Hermitian PSD matrix, ascending, clipped at zero."""
    return np.clip(np.linalg.eigvalsh(hermitize(A)), 0.0, None)


def _check_unit_interval(x: float) -> float:
    x = float(x)
    if not (-TRACE_TOL <= x <= 1 + TRACE_TOL):
        raise ValueError(f"argument {x!r} outside [0, 1]")
    return min(max(x, 0.0), 1.0)


def _eta_array(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    mask = x > 0
    out[mask] = -x[mask] * np.log(x[mask])
    return out


def eta(x: float) -> float:
    """``-x log x`` on [0, 1] with ``eta(0) = 0``."""
    x = _check_unit_interval(x)
    return 0.0 if x == 0.0 else -x * math.log(x)


def h2(x: float) -> float:
    """Binary entropy ``eta(x) + eta(1 - x)``."""
    x = _check_unit_interval(x)
    return eta(x) + eta(1.0 - x)


def spectrum_entropy(lam) -> float:
    """``-sum lam log lam`` of a nonnegative vector, with 0 log 0 = 0."""
    lam = np.asarray(lam, dtype=float)
    lam = lam[lam > EIG_CUTOFF]
    return float(-np.sum(lam * np.log(lam)))


def entropy_S(A) -> float:
    """Extended von Neumann entropy ``S(A) = -Tr A log A``."""
    return spectrum_entropy(eigvals(as_operator(A)))


def entropy_H(A) -> float:
    """``H(A) = S(A) - eta(Tr A)``; coincides with ``S`` on states."""
    A = as_operator(A)
    lam = eigvals(A)
    return spectrum_entropy(lam) - eta(min(float(lam.sum()), 1.0))


def _support_log(A: np.ndarray):
    lam, U = np.linalg.eigh(hermitize(A))
    keep = lam > EIG_CUTOFF
    return lam, U, keep


def relative_entropy(A, B) -> float:
    """``H(A||B) = Tr(A log A - A log B + B - A)`` for operators in T_1.

    Returns ``math.inf`` when the support of ``A`` is not contained in the
    support of ``B`` (supports use the :data:`EIG_CUTOFF` eigenvalue cutoff).
    """
    A = as_operator(A)
    B = as_operator(B)
    if A.shape != B.shape:
        raise ValueError(f"dimension mismatch: {A.shape} vs {B.shape}")
    la, Ua, ka = _support_log(A)
    lb, Ub, kb = _support_log(B)
    Ua_s = Ua[:, ka]
    # part of supp A outside supp B
    leak = Ua_s - Ub[:, kb] @ (Ub[:, kb].conj().T @ Ua_s)
    if Ua_s.size and np.max(np.linalg.norm(leak, axis=0)) > SUPPORT_TOL:
        return math.inf
    la_s = la[ka]
    log_b = (Ub[:, kb] * np.log(lb[kb])) @ Ub[:, kb].conj().T
    # <i| log B |i> in the eigenbasis of A
    diag_logb = np.einsum("ai,ab,bi->i", Ua_s.conj(), log_b, Ua_s).real
    val = float(np.sum(la_s * np.log(la_s)) - np.sum(la_s * diag_logb)
                + np.trace(B).real - np.trace(A).real)
    return max(val, 0.0)


def truncated_entropy(A, n: int) -> float:
    """Entropy of the ``n`` largest eigenvalues, renormalized and rescaled.

    ``-sum_{i<=n} l_i log l_i + s log s`` with ``s`` the sum of the top-``n``
    eigenvalues; equals ``s * H(l_1/s, ..., l_n/s)``.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"truncation order must be a positive integer, got {n!r}")
    lam = np.sort(eigvals(as_operator(A)))[::-1][: int(n)]
    s = float(lam.sum())
    if s <= 0:
        return 0.0
    return max(spectrum_entropy(lam) + s * math.log(s), 0.0)


def partial_trace(C, dims: Sequence[int], keep: str = "first") -> np.ndarray:
    """Partial trace of an operator on ``C^dA (x) C^dB``.

    ``keep="first"`` traces out the second factor and vice versa.
    """
    C = np.asarray(C, dtype=complex)
    dA, dB = (int(d) for d in dims)
    if C.shape != (dA * dB, dA * dB):
        raise ValueError(f"operator of shape {C.shape} does not match dims {dA}x{dB}")
    T = C.reshape(dA, dB, dA, dB)
    if keep == "first":
        return np.einsum("ikjk->ij", T)
    if keep == "second":
        return np.einsum("kikj->ij", T)
    raise ValueError(f"keep must be 'first' or 'second', got {keep!r}")


def tensor(*ops) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return out


def trace_distance(A, B) -> float:
    """Trace norm ``||A - B||_1`` (no factor 1/2)."""
    D = np.asarray(A, dtype=complex) - np.asarray(B, dtype=complex)
    return float(np.sum(np.linalg.svd(D, compute_uv=False)))


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())


def max_mixed(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex) / dim


def random_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return projector(v / np.linalg.norm(v))


def random_state(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density matrix from the induced (Ginibre) measure."""
    rank = dim if rank is None else rank
    G = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = G @ G.conj().T
    return hermitize(rho / np.trace(rho).real)


def operator_to_json(A) -> dict:
    A = np.asarray(A, dtype=complex)
    return {"dim": int(A.shape[0]), "re": A.real.tolist(), "im": A.imag.tolist()}


def operator_from_json(obj, *, validate: bool = True, normalized: bool = False) -> np.ndarray:
    if isinstance(obj, str):
        obj = json.loads(obj)
    try:
        dim = int(obj["dim"])
        A = np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj.get("im", np.zeros((dim, dim))), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidOperatorError(f"malformed operator JSON: {exc}") from exc
    if A.shape != (dim, dim):
        raise InvalidOperatorError(f"declared dim {dim} does not match entries of shape {A.shape}")
    if validate:
        return as_operator(A, normalized=normalized)
    return A
