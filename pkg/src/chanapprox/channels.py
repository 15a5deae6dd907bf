"""Quantum operations in Kraus form.

A :class:`QuantumOperation` stores its Kraus family as one stacked array of
shape ``(K, dim_out, dim_in)``.  Kraus lists are never canonicalized; two
operations are compared through their action on the matrix units ``|i><j|``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .linops import (
    as_operator,
    hermitize,
    ket,
    max_mixed,
    operator_from_json,
    partial_trace,
    projector,
    random_pure_state,
    trace_distance,
)

KRAUS_TOL = 1e-9


class Validity(str, Enum):
    CHANNEL = "channel"
    STRICT = "strict-operation"
    INVALID = "invalid"


@dataclass(frozen=True, eq=False)
class QuantumOperation:
    """CP trace-nonincreasing map ``rho -> sum_k V_k rho V_k^dag``."""

    kraus: np.ndarray

    def __post_init__(self):
        K = np.asarray(self.kraus, dtype=complex)
        if K.ndim == 2:
            K = K[None]
        if K.ndim != 3 or K.shape[0] == 0:
            raise ValueError(f"Kraus family must have shape (K, dout, din), got {K.shape}")
        K = K.copy()
        K.setflags(write=False)
        object.__setattr__(self, "kraus", K)

    @property
    def dim_in(self) -> int:
        return self.kraus.shape[2]

    @property
    def dim_out(self) -> int:
        return self.kraus.shape[1]

    @property
    def n_kraus(self) -> int:
        return self.kraus.shape[0]

    def kraus_sum(self) -> np.ndarray:
        """``K = sum_k V_k^dag V_k``."""
        return hermitize(np.einsum("kai,kaj->ij", self.kraus.conj(), self.kraus))

    def dual(self, X) -> np.ndarray:
        """Heisenberg-picture map ``X -> sum_k V_k^dag X V_k``."""
        X = np.asarray(X, dtype=complex)
        return np.einsum("kai,ab,kbj->ij", self.kraus.conj(), X, self.kraus)

    def __call__(self, A) -> np.ndarray:
        return apply(self, A)

    def to_json(self) -> dict:
        return {
            "dimIn": self.dim_in,
            "dimOut": self.dim_out,
            "kraus": [_matrix_to_json(V) for V in self.kraus],
        }

    @classmethod
    def from_json(cls, obj) -> "QuantumOperation":
        if isinstance(obj, str):
            obj = json.loads(obj)
        din, dout = int(obj["dimIn"]), int(obj["dimOut"])
        mats = []
        for item in obj["kraus"]:
            V = np.asarray(item["re"], dtype=float) + 1j * np.asarray(item["im"], dtype=float)
            if V.shape != (dout, din):
                raise ValueError(f"Kraus operator of shape {V.shape}, expected {(dout, din)}")
            mats.append(V)
        op = cls(np.stack(mats))
        if validate(op) is Validity.INVALID:
            raise ValueError("Kraus family violates sum V^dag V <= I")
        return op


def _matrix_to_json(V: np.ndarray) -> dict:
    # Kraus operators may be rectangular; "dim" records (rows, cols).
    return {"dim": list(V.shape), "re": V.real.tolist(), "im": V.imag.tolist()}


@dataclass(frozen=True, eq=False)
class StinespringDilation:
    """Isometry ``V: C^din -> C^dout (x) C^denv`` with ``Phi = Tr_env V . V^dag``."""

    V: np.ndarray
    dim_out: int
    dim_env: int

    @property
    def dim_in(self) -> int:
        return self.V.shape[1]

    def apply_full(self, rho) -> np.ndarray:
        return self.V @ np.asarray(rho, dtype=complex) @ self.V.conj().T


def apply(phi: QuantumOperation, A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.shape != (phi.dim_in, phi.dim_in):
        raise ValueError(f"input of shape {A.shape} does not match dim_in={phi.dim_in}")
    return hermitize(np.einsum("kai,ij,kbj->ab", phi.kraus, A, phi.kraus.conj()))


def validate(phi: QuantumOperation) -> Validity:
    K = phi.kraus_sum()
    lam = np.linalg.eigvalsh(K)
    if lam[-1] > 1 + KRAUS_TOL:
        return Validity.INVALID
    if trace_distance(K, np.eye(phi.dim_in)) <= KRAUS_TOL:
        return Validity.CHANNEL
    return Validity.STRICT


def is_channel(phi: QuantumOperation) -> bool:
    return validate(phi) is Validity.CHANNEL


def _require_valid(phi: QuantumOperation) -> None:
    if validate(phi) is Validity.INVALID:
        raise ValueError("invalid quantum operation: sum V^dag V exceeds identity")


def truncate_output(phi: QuantumOperation, P) -> QuantumOperation:
    """Compress the output by a projector: ``rho -> P Phi(rho) P``."""
    P = np.asarray(P, dtype=complex)
    if P.shape != (phi.dim_out, phi.dim_out):
        raise ValueError(f"projector of shape {P.shape} does not act on dim_out={phi.dim_out}")
    if np.max(np.abs(P - P.conj().T)) > KRAUS_TOL or trace_distance(P @ P, P) > KRAUS_TOL:
        raise ValueError("truncation operator is not an orthogonal projector")
    return QuantumOperation(np.einsum("ab,kbi->kai", P, phi.kraus))


def basis_projector(dim: int, n: int) -> np.ndarray:
    """Projector onto the first ``n`` computational basis vectors."""
    P = np.zeros((dim, dim), dtype=complex)
    P[np.arange(n), np.arange(n)] = 1.0
    return P


def stinespring(phi: QuantumOperation) -> StinespringDilation:
    """``V = sum_k V_k (x) |k>``, environment dimension = number of Kraus operators."""
    _require_valid(phi)
    K, dout, din = phi.kraus.shape
    # row index (a, k) -> a*K + k
    V = np.transpose(phi.kraus, (1, 0, 2)).reshape(dout * K, din)
    return StinespringDilation(V=V, dim_out=dout, dim_env=K)


def complementary(phi: QuantumOperation) -> QuantumOperation:
    """Complementary map ``rho -> Tr_out V rho V^dag`` into the environment."""
    dil = stinespring(phi)
    # Kraus operator for output index a: <a| (x) I_env applied to V
    W = dil.V.reshape(dil.dim_out, dil.dim_env, dil.dim_in)
    return QuantumOperation(W)


def tensor_op(phi: QuantumOperation, psi: QuantumOperation) -> QuantumOperation:
    kr = np.einsum("kab,lcd->klacbd", phi.kraus, psi.kraus)
    K = phi.n_kraus * psi.n_kraus
    return QuantumOperation(kr.reshape(K, phi.dim_out * psi.dim_out, phi.dim_in * psi.dim_in))


def compose(outer: QuantumOperation, inner: QuantumOperation) -> QuantumOperation:
    """``outer o inner``: apply ``inner`` first."""
    if outer.dim_in != inner.dim_out:
        raise ValueError(f"cannot compose: outer expects {outer.dim_in}, inner gives {inner.dim_out}")
    kr = np.einsum("lab,kbc->lkac", outer.kraus, inner.kraus)
    return QuantumOperation(kr.reshape(-1, outer.dim_out, inner.dim_in))


def matrix_units(dim: int) -> Iterable[tuple[int, int, np.ndarray]]:
    for i in range(dim):
        for j in range(dim):
            E = np.zeros((dim, dim), dtype=complex)
            E[i, j] = 1.0
            yield i, j, E


def action_distance(phi: QuantumOperation, psi: QuantumOperation) -> float:
    """Max over matrix units ``|i><j|`` of ``||Phi(|i><j|) - Psi(|i><j|)||_1``."""
    if (phi.dim_in, phi.dim_out) != (psi.dim_in, psi.dim_out):
        raise ValueError("operations act between different spaces")
    return max(
        trace_distance(_apply_raw(phi, E), _apply_raw(psi, E)) for _, _, E in matrix_units(phi.dim_in)
    )


def _apply_raw(phi: QuantumOperation, X: np.ndarray) -> np.ndarray:
    # no Hermitization: matrix units are not Hermitian
    return np.einsum("kai,ij,kbj->ab", phi.kraus, X, phi.kraus.conj())


def default_sample(dim: int, n_random: int = 8, seed: int = 0) -> list[np.ndarray]:
    """Curated probe states: basis states, maximally mixed, seeded random pure states."""
    rng = np.random.default_rng(seed)
    states = [projector(ket(i, dim)) for i in range(dim)]
    states.append(max_mixed(dim))
    states.extend(random_pure_state(dim, rng) for _ in range(n_random))
    return states


def strong_distance(phi: QuantumOperation, psi: QuantumOperation, sample: Sequence | None = None) -> float:
    """Sample surrogate ``max_rho ||Phi(rho) - Psi(rho)||_1`` of the strong-convergence metric.

    Always a lower bound on the uniform distance ``sup_rho ||Phi(rho) - Psi(rho)||_1``.
    """
    if sample is None:
        sample = default_sample(phi.dim_in)
    sample = list(sample)
    if not sample:
        raise ValueError("strong_distance needs a nonempty sample of states")
    return max(trace_distance(apply(phi, rho), apply(psi, rho)) for rho in sample)


# ---------------------------------------------------------------------------
# factories


def identity(dim: int) -> QuantumOperation:
    return QuantumOperation(np.eye(dim, dtype=complex)[None])


def zero_operation(dim_in: int, dim_out: int | None = None) -> QuantumOperation:
    dim_out = dim_in if dim_out is None else dim_out
    return QuantumOperation(np.zeros((1, dim_out, dim_in), dtype=complex))


def completely_depolarizing(dim: int) -> QuantumOperation:
    """``rho -> Tr(rho) I/d`` via the rank-one Kraus family ``|i><j|/sqrt(d)``."""
    kr = np.zeros((dim * dim, dim, dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            kr[i * dim + j, i, j] = 1 / np.sqrt(dim)
    return QuantumOperation(kr)


def depolarizing(p: float, dim: int = 2) -> QuantumOperation:
    """``rho -> (1-p) rho + p Tr(rho) I/d``."""
    if not 0 <= p <= 1:
        raise ValueError(f"depolarizing parameter {p} outside [0, 1]")
    full = completely_depolarizing(dim).kraus * np.sqrt(p)
    return QuantumOperation(np.concatenate([np.sqrt(1 - p) * np.eye(dim)[None], full]))


def amplitude_damping(gamma: float) -> QuantumOperation:
    if not 0 <= gamma <= 1:
        raise ValueError(f"damping parameter {gamma} outside [0, 1]")
    K0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=complex)
    K1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex)
    return QuantumOperation(np.stack([K0, K1]))


def dephasing(p: float) -> QuantumOperation:
    """Qubit phase flip ``rho -> (1-p) rho + p Z rho Z``."""
    if not 0 <= p <= 1:
        raise ValueError(f"dephasing parameter {p} outside [0, 1]")
    Z = np.diag([1.0, -1.0]).astype(complex)
    return QuantumOperation(np.stack([np.sqrt(1 - p) * np.eye(2), np.sqrt(p) * Z]))


def measure_prepare(pairs: Sequence[tuple[np.ndarray, np.ndarray]]) -> QuantumOperation:
    """Measure-and-prepare channel ``rho -> sum_m Tr(M_m rho) sigma_m``.

    ``pairs`` holds (POVM element, output state).  The Kraus family is
    ``sqrt(s_a) |a><b| sqrt(M_m)`` built from spectral decompositions, so
    every Kraus operator has rank one.
    """
    mats = []
    for M, sigma in pairs:
        M = hermitize(M)
        sigma = as_operator(sigma, normalized=True)
        mu, B = np.linalg.eigh(M)
        s, A = np.linalg.eigh(sigma)
        for b in range(len(mu)):
            if mu[b] <= 1e-14:
                continue
            for a in range(len(s)):
                if s[a] <= 1e-14:
                    continue
                mats.append(np.sqrt(s[a] * mu[b]) * np.outer(A[:, a], B[:, b].conj()))
    op = QuantumOperation(np.stack(mats))
    if not is_channel(op):
        raise ValueError("POVM elements do not sum to the identity")
    return op


def random_isometry(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    G = rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))
    Q, R = np.linalg.qr(G)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_channel(dim_in: int, dim_out: int, n_kraus: int, rng: np.random.Generator) -> QuantumOperation:
    if dim_out * n_kraus < dim_in:
        raise ValueError(f"{n_kraus} Kraus operators of shape {dim_out}x{dim_in} cannot form a channel")
    V = random_isometry(dim_out * n_kraus, dim_in, rng)
    return QuantumOperation(V.reshape(dim_out, n_kraus, dim_in).transpose(1, 0, 2))


def random_operation(dim_in: int, dim_out: int, n_kraus: int, rng: np.random.Generator) -> QuantumOperation:
    """Random strict operation: a random channel followed by a random contraction."""
    phi = random_channel(dim_in, dim_out, n_kraus, rng)
    s = rng.uniform(0.2, 1.0, size=dim_in)
    W = random_isometry(dim_in, dim_in, rng)
    C = W @ np.diag(np.sqrt(s)) @ W.conj().T
    return QuantumOperation(np.einsum("kai,ij->kaj", phi.kraus, C))


def random_measure_prepare(dim_in: int, dim_out: int, n_outcomes: int, rng: np.random.Generator) -> QuantumOperation:
    """Measure-and-prepare channel with a random rank-one POVM and random pure outputs."""
    V = random_isometry(n_outcomes, dim_in, rng)
    pairs = [(np.outer(V[m].conj(), V[m]), random_pure_state(dim_out, rng)) for m in range(n_outcomes)]
    return measure_prepare(pairs)


def partial_trace_channel(dims: Sequence[int], keep: str = "first") -> QuantumOperation:
    """``Tr_K`` (``keep="first"``) or ``Tr_H`` as a channel in Kraus form."""
    dA, dB = dims
    if keep == "first":
        kr = [np.kron(np.eye(dA), ket(k, dB).conj()[None, :]) for k in range(dB)]
    elif keep == "second":
        kr = [np.kron(ket(k, dA).conj()[None, :], np.eye(dB)) for k in range(dA)]
    else:
        raise ValueError(f"keep must be 'first' or 'second', got {keep!r}")
    return QuantumOperation(np.stack(kr))


def truncation_channel(dim: int, n: int) -> QuantumOperation:
    """``rho -> P_n rho P_n + (1 - Tr P_n rho) P_n / n`` with ``P_n`` the first ``n`` basis vectors."""
    if not 1 <= n <= dim:
        raise ValueError(f"truncation rank {n} outside 1..{dim}")
    mats = [basis_projector(dim, n)]
    for a in range(n):
        for b in range(n, dim):
            E = np.zeros((dim, dim), dtype=complex)
            E[a, b] = 1 / np.sqrt(n)
            mats.append(E)
    return QuantumOperation(np.stack(mats))


def operation_from_spec(spec: str, dim: int = 2) -> QuantumOperation:
    """Build an operation from a CLI factory identifier such as ``depolarizing:0.3``.

    Recognized ids: ``identity``, ``depolarizing:p``, ``amplitude-damping:g``,
    ``dephasing:p``, ``completely-depolarizing``, ``random:seed:kraus``,
    ``measure-prepare:seed:outcomes`` and a path to an operation JSON file.
    """
    name, *args = spec.split(":")
    if name == "identity":
        return identity(dim)
    if name == "completely-depolarizing":
        return completely_depolarizing(dim)
    if name == "depolarizing":
        return depolarizing(float(args[0]), dim)
    if name == "amplitude-damping":
        return amplitude_damping(float(args[0]))
    if name == "dephasing":
        return dephasing(float(args[0]))
    if name == "random":
        seed = int(args[0]) if args else 0
        k = int(args[1]) if len(args) > 1 else 2
        return random_channel(dim, dim, k, np.random.default_rng(seed))
    if name == "measure-prepare":
        seed = int(args[0]) if args else 0
        m = int(args[1]) if len(args) > 1 else dim + 1
        return random_measure_prepare(dim, dim, m, np.random.default_rng(seed))
    with open(spec) as fh:
        obj = json.load(fh)
    if "measure-prepare" in obj:
        pairs = [(operator_from_json(M, validate=False), operator_from_json(s, normalized=True))
                 for M, s in obj["measure-prepare"]]
        return measure_prepare(pairs)
    return QuantumOperation.from_json(obj)


__all__ = [
    "QuantumOperation",
    "StinespringDilation",
    "Validity",
    "action_distance",
    "amplitude_damping",
    "apply",
    "basis_projector",
    "complementary",
    "completely_depolarizing",
    "compose",
    "default_sample",
    "dephasing",
    "depolarizing",
    "identity",
    "is_channel",
    "measure_prepare",
    "operation_from_spec",
    "partial_trace",
    "partial_trace_channel",
    "random_channel",
    "random_measure_prepare",
    "random_operation",
    "stinespring",
    "strong_distance",
    "tensor_op",
    "truncate_output",
    "truncation_channel",
    "validate",
    "zero_operation",
]
