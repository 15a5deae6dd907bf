"""Constrained chi-capacity, amplification factors, EB tests and additivity gaps.

Capacities are computed for channels only.  An ensemble is represented by
unnormalized vectors ``v_j`` with weights ``|v_j|^2 / m``, ``m = sum |v_j|^2``;
because ``H`` is homogeneous the Holevo quantity becomes

    chi = (H(sum_j Phi(v_j v_j^dag)) - sum_j H(Phi(v_j v_j^dag))) / m,

which is scale invariant and smooth away from rank drops of the outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.optimize import minimize, nnls

from .channels import (
    QuantumOperation,
    apply,
    is_channel,
    tensor_op,
)
from .choi import ReferenceState, choi_of
from .linops import as_state, hermitize, partial_trace, tensor, trace_distance
from .roof import (
    LOG_FLOOR,
    ChiResult,
    Ensemble,
    OptimizerConfig,
    _outputs,
    _pullback,
    barycenter,
    chi_function,
    holevo_chi,
)

FEASIBILITY_TOL = 1e-8
PPT_TOL = 1e-12
RANK_ONE_TOL = 1e-10


def _require_channel(phi: QuantumOperation) -> None:
    if not is_channel(phi):
        raise ValueError("operation is not a channel")


# ---------------------------------------------------------------------------
# constraint sets


@dataclass(frozen=True, eq=False)
class ConstraintSet:
    """Either the convex hull of finitely many states or an energy ball ``Tr H rho <= h``."""

    kind: str
    states: np.ndarray | None = None
    H: np.ndarray | None = None
    h: float | None = None

    def __post_init__(self):
        if self.kind == "hull":
            S = np.asarray(self.states, dtype=complex)
            if S.ndim != 3 or len(S) == 0:
                raise ValueError("hull constraint needs a nonempty list of states")
            object.__setattr__(self, "states", np.stack([as_state(s) for s in S]))
        elif self.kind == "energy":
            H = hermitize(self.H)
            lo = float(np.linalg.eigvalsh(H)[0])
            if lo < -1e-12:
                raise ValueError("energy operator must be positive semidefinite")
            if self.h is None or self.h < lo - 1e-12:
                raise ValueError(f"energy bound {self.h} below ground energy {lo}")
            object.__setattr__(self, "H", H)
            object.__setattr__(self, "h", float(self.h))
        else:
            raise ValueError(f"unknown constraint kind {self.kind!r}")

    @classmethod
    def hull(cls, states) -> "ConstraintSet":
        return cls(kind="hull", states=np.asarray(states, dtype=complex))

    @property
    def dim(self) -> int:
        return self.states.shape[1] if self.kind == "hull" else self.H.shape[0]

    def residual(self, rho) -> float:
        """Distance-type violation of ``rho`` (0 for members up to roundoff)."""
        rho = np.asarray(rho, dtype=complex)
        if self.kind == "energy":
            return max(float(np.trace(self.H @ rho).real) - self.h, 0.0)
        # least squares over the simplex, normalization enforced by a heavy row
        A = np.stack([np.concatenate([s.real.ravel(), s.imag.ravel()]) for s in self.states], axis=1)
        b = np.concatenate([rho.real.ravel(), rho.imag.ravel()])
        big = 1e4
        A = np.vstack([A, big * np.ones((1, A.shape[1]))])
        b = np.concatenate([b, [big]])
        w, _ = nnls(A, b)
        w = w / w.sum()
        return trace_distance(np.einsum("a,aij->ij", w, self.states), rho)

    def contains(self, rho, tol: float = FEASIBILITY_TOL) -> bool:
        return self.residual(rho) <= tol

    def to_json(self) -> dict:
        if self.kind == "energy":
            return {"kind": "energy", "H": np.real(np.diag(self.H)).tolist()
                    if np.allclose(self.H, np.diag(np.diag(self.H))) else self.H.real.tolist(),
                    "h": self.h}
        return {"kind": "hull", "n_states": len(self.states)}


def energy_ball(H, h: float, dim: int | None = None) -> ConstraintSet:
    """``{rho : Tr H rho <= h}``; a 1-d ``H`` is read as a diagonal."""
    H = np.asarray(H, dtype=complex)
    if H.ndim == 1:
        H = np.diag(H)
    if dim is not None and H.shape != (dim, dim):
        raise ValueError(f"energy operator of shape {H.shape} does not match dim {dim}")
    return ConstraintSet(kind="energy", H=H, h=h)


def unconstrained(dim: int) -> ConstraintSet:
    """All states, as an energy ball with an inactive bound."""
    return energy_ball(np.ones(dim), 1.0)


# ---------------------------------------------------------------------------
# chi-capacity


@dataclass(frozen=True, eq=False)
class CapacityResult:
    value: float
    ensemble: Ensemble
    omega: np.ndarray
    pinsker_slack: float
    spread: float
    restarts: int
    converged: bool
    values: tuple = field(default=(), repr=False)

    def to_json(self) -> dict:
        from .linops import operator_to_json

        return {
            "value": self.value,
            "spread": self.spread,
            "restarts": self.restarts,
            "converged": self.converged,
            "pinsker_slack": self.pinsker_slack,
            "omega": operator_to_json(self.omega),
            "ensemble": self.ensemble.to_json(),
        }


class _ChiObjective:
    """``chi`` and its gradient with respect to ``conj(v_j)`` for a channel."""

    def __init__(self, phi: QuantumOperation):
        self.phi = phi

    @staticmethod
    def _gamma(X):
        lam, Q = np.linalg.eigh(X)
        lam = np.clip(lam, 0.0, None)
        t = lam.sum(axis=-1)
        loglam = np.log(np.clip(lam, LOG_FLOOR, None))
        logt = np.log(np.clip(t, LOG_FLOOR, None))
        Hval = -np.where(lam > 0, lam * loglam, 0.0).sum(axis=-1) + np.where(t > 0, t * logt, 0.0)
        gam = -(loglam - logt[..., None])
        G = np.einsum("...ac,...c,...bc->...ab", Q, gam, Q.conj())
        return Hval, G

    def __call__(self, vecs):
        W, X = _outputs(self.phi.kraus, vecs)
        m = float(np.sum(np.abs(vecs) ** 2))
        Hj, Gj = self._gamma(X)
        Hbar, Gbar = self._gamma(X.sum(axis=0))
        num = Hbar - float(Hj.sum())
        chi = num / m
        grad = _pullback(self.phi.kraus, Gbar[None] - Gj, W) / m - (chi / m) * vecs
        return chi, grad


def _split(x, n, d):
    h = n * d
    return (x[:h] + 1j * x[h:2 * h]).reshape(n, d)


def _join(V):
    return np.concatenate([V.real.ravel(), V.imag.ravel()])


def _energy_feasible(e: Ensemble, A: ConstraintSet) -> Ensemble:
    """Blend in the ground state if roundoff left the barycenter just above the bound."""
    E = float(np.trace(A.H @ barycenter(e)).real)
    if E <= A.h + 1e-12 * max(1.0, abs(A.h)):
        return e
    lam, U = np.linalg.eigh(A.H)
    if E - lam[0] <= 0:
        return e
    s = min((E - A.h) / (E - lam[0]) * (1 + 1e-9), 1.0)
    g = np.outer(U[:, 0], U[:, 0].conj())
    return Ensemble(weights=np.append((1 - s) * e.weights, s), states=np.concatenate([e.states, g[None]]),
                    pure=e.pure)


def _capacity_energy(phi, A, n, config, initial):
    d = phi.dim_in
    obj = _ChiObjective(phi)
    H = A.H

    def fun(x):
        v, g = obj(_split(x, n, d))
        return -v, -2 * _join(g)

    def con(x):
        V = _split(x, n, d)
        m = float(np.sum(np.abs(V) ** 2))
        return np.array([A.h - float(np.einsum("ja,ab,jb->", V.conj(), H, V).real) / m])

    def con_jac(x):
        V = _split(x, n, d)
        m = float(np.sum(np.abs(V) ** 2))
        E = float(np.einsum("ja,ab,jb->", V.conj(), H, V).real)
        g = V @ H.T / m - (E / m ** 2) * V
        return -2 * _join(g)[None, :]

    lam, U = np.linalg.eigh(H)
    ground_energy, ground = float(lam[0]), U[:, 0]
    if A.h <= ground_energy + 1e-12 * max(1.0, abs(ground_energy)):
        return _capacity_face(phi, U[:, lam <= ground_energy + 1e-10 * max(1.0, abs(ground_energy))],
                              n, config, initial)
    starts = []
    for e in initial:
        V = e.vectors()
        starts.append(_join(np.vstack([V, 1e-3 * np.ones((n - len(V), d))])))
    for rng in _rngs(config):
        V = rng.normal(size=(n, d)) + 1j * rng.normal(size=(n, d))
        # pull the random start inside the ball by mixing in the ground state
        V = V / np.linalg.norm(V)
        e0 = float(np.einsum("ja,ab,jb->", V.conj(), H, V).real)
        if e0 > A.h + 1e-12 * max(1.0, abs(A.h)):
            s = (e0 - A.h) / (e0 - ground_energy)
            V = np.vstack([np.sqrt(1 - s) * V[:-1] / np.linalg.norm(V[:-1]), np.sqrt(s) * ground[None]])
        starts.append(_join(V))
    # a bound at or above the top energy is inactive and only confuses SLSQP
    cons = [{"type": "ineq", "fun": con, "jac": con_jac}] if A.h < lam[-1] else []
    out = []
    for x0 in starts:
        res = minimize(fun, x0, jac=True, method="SLSQP", constraints=cons,
                       options={"maxiter": config.maxiter, "ftol": 1e-14})
        x = res.x if np.all(np.isfinite(res.x)) else x0
        e = _energy_feasible(Ensemble.from_vectors(_split(x, n, d)), A)
        out.append((holevo_chi(phi, e, check=False), e))
    return out


def _capacity_face(phi, G, n, config, initial):
    """Degenerate ball: members live in the ground space spanned by the columns of ``G``."""
    g = G.shape[1]
    obj = _ChiObjective(phi)

    def fun(x):
        v, grad = obj(_split(x, n, g) @ G.T)
        return -v, -2 * _join(grad @ G.conj())

    starts = [_join(np.vstack([e.vectors() @ G.conj(), 1e-3 * np.ones((n - len(e), g))])) for e in initial]
    starts += [_join(rng.normal(size=(n, g)) + 1j * rng.normal(size=(n, g))) for rng in _rngs(config)]
    out = []
    for x0 in starts:
        res = minimize(fun, x0, jac=True, method="L-BFGS-B", options={"maxiter": config.maxiter})
        e = Ensemble.from_vectors(_split(res.x, n, g) @ G.T)
        out.append((holevo_chi(phi, e, check=False), e))
    return out


def _capacity_hull(phi, A, n, config, initial):
    d = phi.dim_in
    k = len(A.states)
    obj = _ChiObjective(phi)

    def vectors(x):
        theta = x[:k]
        w = np.exp(theta - theta.max())
        w = w / w.sum()
        rho = np.einsum("a,aij->ij", w, A.states)
        lam, Q = np.linalg.eigh(hermitize(rho))
        root = (Q * np.sqrt(np.clip(lam, 0.0, None))) @ Q.conj().T
        Z = _split(x[k:], n, d)
        s, P = np.linalg.eigh(Z.conj().T @ Z)
        U = Z @ (P / np.sqrt(s)) @ P.conj().T
        return U @ root.T

    def fun(x):
        return -obj(vectors(x))[0]

    starts = [np.concatenate([np.zeros(k), rng.normal(size=2 * n * d)]) for rng in _rngs(config)]
    out = []
    for x0 in starts:
        res = minimize(fun, x0, method="L-BFGS-B", options={"maxiter": config.maxiter})
        e = Ensemble.from_vectors(vectors(res.x))
        out.append((holevo_chi(phi, e, check=False), e))
    for e in initial:
        out.append((holevo_chi(phi, e, check=False), e))
    return out


def _rngs(config: OptimizerConfig):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(config.seed).spawn(config.restarts)]


def chi_capacity(phi: QuantumOperation, A: ConstraintSet, n_members: int | None = None,
                 config: OptimizerConfig | None = None, initial: Sequence[Ensemble] = ()) -> CapacityResult:
    """Maximize the Holevo quantity over ensembles whose barycenter lies in ``A``.

    ``n_members`` defaults to ``dim_in**2``.  ``initial`` ensembles (which
    must be feasible) are added as warm starts, so enlarging the constraint
    set and passing the previous witness gives a monotone sequence.
    """
    _require_channel(phi)
    config = config or OptimizerConfig()
    if A.dim != phi.dim_in:
        raise ValueError(f"constraint dim {A.dim} != channel input dim {phi.dim_in}")
    for e in initial:
        if not A.contains(barycenter(e)):
            raise ValueError("initial ensemble is not feasible for the constraint")
    n = n_members or config.n_members or phi.dim_in ** 2
    n = max([n, *(len(e) for e in initial)])
    runs = (_capacity_energy if A.kind == "energy" else _capacity_hull)(phi, A, n, config, initial)
    vals = np.array([r[0] for r in runs])
    best = int(np.argmax(vals))
    value, e = runs[best]
    if not A.contains(barycenter(e)):
        raise RuntimeError("capacity witness left the constraint set")
    omega = apply(phi, barycenter(e))
    close = int(np.sum(vals >= value - config.tol))
    return CapacityResult(value=float(value), ensemble=e, omega=omega,
                          pinsker_slack=float(value - holevo_chi(phi, e)),
                          spread=float(vals.max() - vals.min()), restarts=len(runs),
                          converged=close >= 2, values=tuple(vals.tolist()))


def output_average(phi: QuantumOperation, e: Ensemble) -> np.ndarray:
    return apply(phi, barycenter(e))


def pinsker_certificate(phi: QuantumOperation, A: ConstraintSet, e: Ensemble, c_value: float) -> float:
    """``c_value - chi_Phi(e)``: bounds ``1/2 |avg-out(e) - Omega|_1^2`` when ``c_value`` is the capacity."""
    _require_channel(phi)
    if not A.contains(barycenter(e)):
        raise ValueError("ensemble barycenter is outside the constraint set")
    return float(c_value - holevo_chi(phi, e))


# ---------------------------------------------------------------------------
# energy amplification


def amplification_factor(phi: QuantumOperation, H, Hp) -> float:
    """``sup_rho Tr H' Phi(rho) / Tr H rho``, the top eigenvalue of ``H^{-1/2} Phi^*(H') H^{-1/2}``."""
    _require_channel(phi)
    H = hermitize(np.diag(H) if np.ndim(H) == 1 else H)
    Hp = hermitize(np.diag(Hp) if np.ndim(Hp) == 1 else Hp)
    if H.shape != (phi.dim_in,) * 2 or Hp.shape != (phi.dim_out,) * 2:
        raise ValueError("Hamiltonian dimensions do not match the channel")
    lam, U = np.linalg.eigh(H)
    if lam[0] <= 1e-12 * max(lam[-1], 1.0):
        raise ValueError("input Hamiltonian is singular")
    R = (U / np.sqrt(lam)) @ U.conj().T
    return float(np.linalg.eigvalsh(hermitize(R @ phi.dual(Hp) @ R))[-1])


def energy_ratio(phi: QuantumOperation, H, Hp, rho) -> float:
    H = np.diag(H) if np.ndim(H) == 1 else np.asarray(H)
    Hp = np.diag(Hp) if np.ndim(Hp) == 1 else np.asarray(Hp)
    return float(np.trace(Hp @ apply(phi, rho)).real / np.trace(H @ rho).real)


# ---------------------------------------------------------------------------
# entanglement breaking


class EBVerdict(str, Enum):
    EB = "EB"
    NOT_EB = "not-EB"
    UNKNOWN = "unknown"


def partial_transpose(C, dims, which: str = "second") -> np.ndarray:
    dA, dB = dims
    T = np.asarray(C, dtype=complex).reshape(dA, dB, dA, dB)
    T = T.transpose(0, 3, 2, 1) if which == "second" else T.transpose(2, 1, 0, 3)
    return T.reshape(dA * dB, dA * dB)


def has_rank_one_kraus(phi: QuantumOperation) -> bool:
    for V in phi.kraus:
        s = np.linalg.svd(V, compute_uv=False)
        if len(s) > 1 and s[1] > RANK_ONE_TOL * max(s[0], 1.0):
            return False
    return True


def is_entanglement_breaking(phi: QuantumOperation) -> EBVerdict:
    _require_channel(phi)
    if has_rank_one_kraus(phi):
        return EBVerdict.EB
    J = choi_of(phi, ReferenceState.maximally_mixed(phi.dim_in)).A
    ppt = float(np.linalg.eigvalsh(partial_transpose(J, (phi.dim_out, phi.dim_in)))[0]) >= -PPT_TOL
    if not ppt:
        return EBVerdict.NOT_EB
    if phi.dim_in * phi.dim_out <= 6:
        return EBVerdict.EB
    return EBVerdict.UNKNOWN


# ---------------------------------------------------------------------------
# additivity


@dataclass(frozen=True, eq=False)
class AdditivityResult:
    gap: float
    joint: ChiResult
    first: ChiResult
    second: ChiResult

    @property
    def spreads(self) -> tuple[float, float, float]:
        return (self.joint.roof.spread, self.first.roof.spread, self.second.roof.spread)

    def to_json(self) -> dict:
        return {
            "gap": self.gap,
            "chi_joint": self.joint.value,
            "chi_first": self.first.value,
            "chi_second": self.second.value,
            "spreads": list(self.spreads),
        }


def product_ensemble(e1: Ensemble, e2: Ensemble) -> Ensemble:
    w = np.outer(e1.weights, e2.weights).ravel()
    states = np.stack([np.kron(a, b) for a in e1.states for b in e2.states])
    return Ensemble(weights=w, states=states, pure=e1.pure and e2.pure)


def additivity_gap(phi: QuantumOperation, psi: QuantumOperation, omega, n_members: int | None = None,
                   config: OptimizerConfig | None = None, cross_check: bool = False) -> AdditivityResult:
    """``chi_{Phi (x) Psi}(omega) - chi_Phi(omega_H) - chi_Psi(omega_K)``.

    The joint roof is warm-started from the product of the marginal
    witnesses, so at product inputs the gap cannot fall below zero by more
    than roundoff.
    """
    _require_channel(phi)
    _require_channel(psi)
    config = config or OptimizerConfig()
    dims = (phi.dim_in, psi.dim_in)
    omega = as_state(omega)
    if omega.shape[0] != dims[0] * dims[1]:
        raise ValueError(f"state of dim {omega.shape[0]} does not match {dims[0]}x{dims[1]}")
    wH = partial_trace(omega, dims, keep="first")
    wK = partial_trace(omega, dims, keep="second")
    c1 = chi_function(phi, wH, None, config, direct=cross_check)
    c2 = chi_function(psi, wK, None, config, direct=cross_check)
    initial = []
    if trace_distance(omega, tensor(wH, wK)) <= 1e-10:
        initial.append(product_ensemble(c1.witness, c2.witness))
    n = n_members
    if initial and n is None:
        r = int(np.linalg.matrix_rank(omega, tol=1e-10))
        n = max(r * r, len(initial[0]))
    joint = chi_function(tensor_op(phi, psi), omega, n, config, initial, direct=cross_check)
    return AdditivityResult(gap=joint.value - c1.value - c2.value, joint=joint, first=c1, second=c2)


__all__ = [
    "AdditivityResult",
    "CapacityResult",
    "ConstraintSet",
    "EBVerdict",
    "additivity_gap",
    "amplification_factor",
    "chi_capacity",
    "energy_ball",
    "energy_ratio",
    "has_rank_one_kraus",
    "is_entanglement_breaking",
    "output_average",
    "partial_transpose",
    "pinsker_certificate",
    "product_ensemble",
    "unconstrained",
]
