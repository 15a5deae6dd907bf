"""Generalized Choi-Jamiolkowski correspondence with a full-rank reference state.

For a full-rank state ``sigma = sum_i l_i |u_i><u_i|`` on the reference space
``K`` and the input computational basis ``|e_i>``, the purification is
``|Omega> = sum_i sqrt(l_i) |e_i> (x) |u_i>`` and an operation ``Phi`` maps to

    A_Phi = (Phi (x) Id)(|Omega><Omega|)
          = sum_ij sqrt(l_i l_j) Phi(|e_i><e_j|) (x) |u_i><u_j|.

Choi operators are stored in computational coordinates of ``H' (x) K``; the
eigenbasis of ``sigma`` is recorded alongside so files are unambiguous.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .channels import QuantumOperation, _apply_raw, matrix_units
from .linops import (
    as_operator,
    as_state,
    hermitize,
    operator_from_json,
    operator_to_json,
    partial_trace,
)

FULL_RANK_FLOOR = 1e-8
SPECTRAL_CUTOFF = 1e-12
MEMBERSHIP_TOL = 1e-9


class MembershipError(ValueError):
    """The operator is not the image of a trace-nonincreasing CP map."""


@dataclass(frozen=True, eq=False)
class ReferenceState:
    sigma: np.ndarray
    lambdas: np.ndarray
    basis: np.ndarray
    omega: np.ndarray

    @classmethod
    def from_state(cls, sigma) -> "ReferenceState":
        sigma = as_state(sigma)
        lam, U = np.linalg.eigh(sigma)
        order = np.argsort(-lam, kind="stable")
        lam, U = lam[order], U[:, order]
        if lam[-1] < FULL_RANK_FLOOR:
            raise ValueError(
                f"reference state is not full rank: smallest eigenvalue {lam[-1]:.3e} < {FULL_RANK_FLOOR}"
            )
        d = len(lam)
        omega = np.einsum("i,ai,bi->ab", np.sqrt(lam), np.eye(d), U).reshape(d * d)
        return cls(sigma=sigma, lambdas=lam, basis=U, omega=omega)

    @classmethod
    def maximally_mixed(cls, dim: int) -> "ReferenceState":
        return cls.from_state(np.eye(dim) / dim)

    @property
    def dim(self) -> int:
        return len(self.lambdas)


@dataclass(frozen=True, eq=False)
class ChoiOperator:
    A: np.ndarray
    ref: ReferenceState
    dim_out: int

    def reduced(self) -> np.ndarray:
        """``Tr_{H'} A`` as an operator on the reference space."""
        return partial_trace(self.A, (self.dim_out, self.ref.dim), keep="second")

    def to_json(self) -> dict:
        return {
            "A": operator_to_json(self.A),
            "sigma": operator_to_json(self.ref.sigma),
            "basis": operator_to_json(self.ref.basis),
        }

    @classmethod
    def from_json(cls, obj) -> "ChoiOperator":
        if isinstance(obj, str):
            obj = json.loads(obj)
        sigma = operator_from_json(obj["sigma"], normalized=True)
        ref = ReferenceState.from_state(sigma)
        if "basis" in obj:
            # phases of recorded eigenvectors are kept when they diagonalize sigma
            U = operator_from_json(obj["basis"], validate=False)
            if np.allclose(U.conj().T @ sigma @ U, np.diag(ref.lambdas), atol=1e-9):
                d = ref.dim
                omega = np.einsum("i,ai,bi->ab", np.sqrt(ref.lambdas), np.eye(d), U).reshape(d * d)
                ref = ReferenceState(sigma=sigma, lambdas=ref.lambdas, basis=U, omega=omega)
        A = operator_from_json(obj["A"])
        dk = ref.dim
        if A.shape[0] % dk:
            raise ValueError(f"Choi operator dimension {A.shape[0]} not divisible by reference dim {dk}")
        return cls(A=A, ref=ref, dim_out=A.shape[0] // dk)


def choi_of(phi: QuantumOperation, ref: ReferenceState) -> ChoiOperator:
    """``A_Phi = (Phi (x) Id)(|Omega><Omega|)``, assembled blockwise from ``Phi(|e_i><e_j|)``."""
    if phi.dim_in != ref.dim:
        raise ValueError(f"operation input dim {phi.dim_in} != reference dim {ref.dim}")
    d, dout = ref.dim, phi.dim_out
    sq = np.sqrt(ref.lambdas)
    U = ref.basis
    A = np.zeros((dout * d, dout * d), dtype=complex)
    for i, j, E in matrix_units(d):
        uij = np.outer(U[:, i], U[:, j].conj())
        A += sq[i] * sq[j] * np.kron(_apply_raw(phi, E), uij)
    return ChoiOperator(A=hermitize(A), ref=ref, dim_out=dout)


@dataclass(frozen=True)
class Membership:
    member: bool
    witness: float

    def __bool__(self) -> bool:
        return self.member


def rescaled_gram(reduced, ref: ReferenceState) -> np.ndarray:
    """``M_ij = <u_i|B|u_j> / sqrt(l_i l_j)`` for an operator ``B`` on the reference space."""
    U = ref.basis
    B = U.conj().T @ np.asarray(reduced, dtype=complex) @ U
    sq = np.sqrt(ref.lambdas)
    return hermitize(B / np.outer(sq, sq))


def t_sigma_membership(A, ref: ReferenceState, dim_out: int | None = None) -> Membership:
    """Test ``Tr_{H'} A`` against ``M <= I``; the witness is the largest eigenvalue of ``M``.

    ``A`` may be an operator on the reference space itself or a
    :class:`ChoiOperator` / array on ``H' (x) K``.
    """
    if isinstance(A, ChoiOperator):
        B = A.reduced()
    else:
        A = np.asarray(A, dtype=complex)
        dk = ref.dim
        if A.shape == (dk, dk) and dim_out is None:
            B = A
        else:
            if A.shape[0] % dk:
                raise ValueError(f"operator dimension {A.shape[0]} incompatible with reference dim {dk}")
            B = partial_trace(A, (A.shape[0] // dk, dk), keep="second")
    top = float(np.linalg.eigvalsh(rescaled_gram(B, ref))[-1])
    return Membership(member=top <= 1 + MEMBERSHIP_TOL, witness=top)


def kraus_from_choi(choi: ChoiOperator) -> QuantumOperation:
    """Inverse of :func:`choi_of`.

    Spectrally decomposes ``A = sum_k p_k |psi_k><psi_k|``, expands
    ``psi_k = sum c^k_{ti} |t> (x) |u_i>`` and sets
    ``V_k |e_i> = sqrt(p_k / l_i) sum_t c^k_{ti} |t>``.
    """
    ref = choi.ref
    A = as_operator(choi.A)
    check = t_sigma_membership(choi, ref)
    if not check:
        raise MembershipError(f"Choi operator violates the T(sigma) bound: max eigenvalue {check.witness:.6g}")
    d, dout = ref.dim, choi.dim_out
    # change the reference factor into the sigma eigenbasis
    W = np.kron(np.eye(dout), ref.basis)
    A_eig = W.conj().T @ A @ W
    p, vecs = np.linalg.eigh(hermitize(A_eig))
    keep = p > SPECTRAL_CUTOFF
    if not np.any(keep):
        return QuantumOperation(np.zeros((1, dout, d), dtype=complex))
    p, vecs = p[keep][::-1], vecs[:, keep][:, ::-1]
    c = vecs.T.reshape(-1, dout, d)  # c[k, t, i]
    kraus = np.sqrt(p)[:, None, None] * c / np.sqrt(ref.lambdas)[None, None, :]
    return QuantumOperation(kraus)


def truncation_tail_bound(A, ref: ReferenceState, n: int) -> tuple[float, float]:
    """Both sides of ``Tr A (I - P_n) <= sum_{i>n} l_i`` for ``A`` in T(sigma).

    ``P_n`` projects onto the ``n`` leading eigenvectors of ``sigma``.  A
    Choi operator is reduced to the reference space first.
    """
    if isinstance(A, ChoiOperator):
        A = A.reduced()
    A = np.asarray(A, dtype=complex)
    if A.shape != (ref.dim, ref.dim):
        raise ValueError(f"operator of shape {A.shape} does not act on the reference space")
    if not 0 <= n <= ref.dim:
        raise ValueError(f"n={n} outside 0..{ref.dim}")
    U = ref.basis[:, n:]
    lhs = float(np.trace(U.conj().T @ A @ U).real)
    rhs = float(np.sum(ref.lambdas[n:]))
    return lhs, rhs


def product_tail_bound(C, dims, P, Q) -> tuple[float, float]:
    """Both sides of ``Tr (P (x) Q) C >= Tr C - Tr (I-P) C_H - Tr (I-Q) C_K``."""
    C = as_operator(C)
    dA, dB = dims
    CH = partial_trace(C, dims, keep="first")
    CK = partial_trace(C, dims, keep="second")
    lhs = float(np.trace(np.kron(P, Q) @ C).real)
    rhs = float(np.trace(C).real - np.trace((np.eye(dA) - P) @ CH).real - np.trace((np.eye(dB) - Q) @ CK).real)
    return lhs, rhs


def roundtrip_residual(phi: QuantumOperation, ref: ReferenceState) -> float:
    """Max matrix-unit action gap between ``Phi`` and ``kraus_from_choi(choi_of(Phi))``."""
    from .channels import action_distance

    return action_distance(kraus_from_choi(choi_of(phi, ref)), phi)


def random_member(dim_out: int, ref: ReferenceState, rng: np.random.Generator) -> ChoiOperator:
    """Choi operator of a random strict operation (always a member)."""
    from .channels import random_operation

    return choi_of(random_operation(ref.dim, dim_out, 2, rng), ref)
