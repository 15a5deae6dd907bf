"""Ensembles, the Holevo quantity and convex-roof optimization.

Pure-state ensembles of a fixed state ``rho = sum_i l_i |e_i><e_i|`` (rank
``r``) are parameterized through the Schrodinger-HJW correspondence: every
``N``-member pure decomposition comes from an ``N x r`` isometry ``U`` via
the unnormalized vectors ``psi_j = sum_i U_ji sqrt(l_i) |e_i>``.  The
optimizer works on an unconstrained complex ``N x r`` matrix ``Z`` mapped to
its polar factor ``U = Z (Z^dag Z)^{-1/2}``.

Roof objectives are handled through their degree-one homogeneous extension
``g(psi) = |psi|^2 f(psi psi^dag / |psi|^2)``, so the ensemble average is
``sum_j g(psi_j)``.  Built-in functionals provide analytic gradients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .channels import QuantumOperation, apply, is_channel, partial_trace_channel
from .linops import (
    EIG_CUTOFF,
    as_state,
    eta,
    hermitize,
    operator_to_json,
    partial_trace,
    spectrum_entropy,
)

WEIGHT_FLOOR = 1e-10
LOG_FLOOR = 1e-300
CHI_IDENTITY_TOL = 1e-8
SANDWICH_TOL = 1e-9


class ConsistencyError(RuntimeError):
    """Two routes to the same quantity disagree beyond tolerance."""


# ---------------------------------------------------------------------------
# ensembles


@dataclass(frozen=True, eq=False)
class Ensemble:
    weights: np.ndarray
    states: np.ndarray
    pure: bool = False

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        S = np.asarray(self.states, dtype=complex)
        if S.ndim != 3 or S.shape[0] != w.size or S.shape[1] != S.shape[2]:
            raise ValueError("ensemble needs one square state per weight")
        if np.any(w < -1e-12) or abs(w.sum() - 1) > 1e-10:
            raise ValueError("ensemble weights must be a probability vector")
        if self.pure:
            top = np.linalg.eigvalsh(S)[:, -1]
            if np.any(top < 1 - 1e-9):
                raise ValueError("ensemble flagged pure has a mixed member")
        object.__setattr__(self, "weights", np.clip(w, 0.0, None))
        object.__setattr__(self, "states", S)

    @classmethod
    def from_vectors(cls, vecs) -> "Ensemble":
        """Pure ensemble from unnormalized vectors whose outer products sum to the barycenter."""
        vecs = np.asarray(vecs, dtype=complex)
        p = np.sum(np.abs(vecs) ** 2, axis=1)
        keep = p > WEIGHT_FLOOR * p.sum()
        vecs, p = vecs[keep], p[keep]
        unit = vecs / np.sqrt(p)[:, None]
        states = np.einsum("ja,jb->jab", unit, unit.conj())
        return cls(weights=p / p.sum(), states=states, pure=True)

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def __len__(self) -> int:
        return len(self.weights)

    def to_json(self) -> dict:
        return {"weights": self.weights.tolist(), "states": [operator_to_json(s) for s in self.states]}

    def vectors(self) -> np.ndarray:
        """Unnormalized vectors ``sqrt(p_j) psi_j`` of a pure ensemble."""
        if not self.pure:
            raise ValueError("only pure ensembles have vector form")
        lam, U = np.linalg.eigh(self.states)
        return np.sqrt(self.weights)[:, None] * U[:, :, -1]


def barycenter(e: Ensemble) -> np.ndarray:
    return hermitize(np.einsum("j,jab->ab", e.weights, e.states))


def _pseudo_log(A: np.ndarray) -> np.ndarray:
    lam, U = np.linalg.eigh(hermitize(A))
    logs = np.where(lam > EIG_CUTOFF, np.log(np.clip(lam, LOG_FLOOR, None)), 0.0)
    return (U * logs) @ U.conj().T


def _dominated_relative_entropy(A: np.ndarray, B: np.ndarray) -> float:
    """``H(A||B)`` when ``c A <= B`` for some ``c > 0`` (ensemble members vs their average)."""
    la, Ua = np.linalg.eigh(hermitize(A))
    lb, Ub = np.linalg.eigh(hermitize(B))
    logb = np.log(np.clip(lb, LOG_FLOOR, None))
    overlap = np.abs(Ua.conj().T @ Ub) ** 2  # |<a|b>|^2
    la_pos = np.clip(la, 0.0, None)
    a_log_a = -spectrum_entropy(la_pos)
    cross = float(np.sum(la_pos[:, None] * overlap * logb[None, :] * (lb[None, :] > 0)))
    return max(a_log_a - cross + float(lb.sum() - la_pos.sum()), 0.0)


def _S_raw(A) -> float:
    return spectrum_entropy(np.linalg.eigvalsh(hermitize(A)))


def holevo_chi(phi: QuantumOperation, e: Ensemble, check: bool = True) -> float:
    """``sum_i p_i H(Phi(rho_i) || Phi(rho_bar))``.

    With ``check`` the identity ``S_Phi(rho_bar) - sum_i p_i S_Phi(rho_i)``
    is evaluated as well and a :class:`ConsistencyError` raised if the two
    disagree by more than ``1e-8``.
    """
    if e.dim != phi.dim_in:
        raise ValueError(f"ensemble dim {e.dim} != operation input dim {phi.dim_in}")
    outs = [apply(phi, s) for s in e.states]
    avg = hermitize(sum(p * o for p, o in zip(e.weights, outs)))
    direct = sum(p * _dominated_relative_entropy(o, avg) for p, o in zip(e.weights, outs) if p > 0)
    if check:
        ident = _S_raw(avg) - sum(p * _S_raw(o) for p, o in zip(e.weights, outs))
        if abs(direct - ident) > CHI_IDENTITY_TOL:
            raise ConsistencyError(f"Holevo quantity routes disagree: {direct!r} vs {ident!r}")
    return float(direct)


# ---------------------------------------------------------------------------
# pure-state functionals (homogeneous extension + Wirtinger gradient)


class PureFunctional:
    """Functional on pure states evaluated on unnormalized vectors.

    ``evaluate(vecs)`` returns ``g(psi_j)`` for each row and, if available,
    ``dg/d conj(psi_j)``; gradients are ``None`` for value-only functionals.
    """

    dim: int
    has_gradient = True

    def evaluate(self, vecs: np.ndarray):
        raise NotImplementedError

    def __call__(self, rho) -> float:
        rho = as_state(rho)
        lam, U = np.linalg.eigh(rho)
        vecs = (U * np.sqrt(np.clip(lam, 0, None))).T
        vals, _ = self.evaluate(vecs)
        return float(np.sum(vals))


def _outputs(kraus: np.ndarray, vecs: np.ndarray):
    W = np.einsum("kab,jb->jka", kraus, vecs)
    X = np.einsum("jka,jkc->jac", W, W.conj())
    return W, X


def _pullback(kraus: np.ndarray, G: np.ndarray, W: np.ndarray) -> np.ndarray:
    """``Phi^*(G_j) psi_j`` for every row, given ``W_jk = V_k psi_j``."""
    GW = np.einsum("jac,jkc->jka", G, W)
    return np.einsum("kab,jka->jb", kraus.conj(), GW)


class OutputEntropy(PureFunctional):
    """``H_Phi`` (``kind="H"``) or ``S_Phi`` (``kind="S"``) on pure inputs."""

    def __init__(self, phi: QuantumOperation, kind: str = "S"):
        if kind not in ("H", "S"):
            raise ValueError(f"kind must be 'H' or 'S', got {kind!r}")
        self.phi = phi
        self.kind = kind
        self.dim = phi.dim_in
        self._K = phi.kraus_sum()
        self._channel = is_channel(phi)

    def evaluate(self, vecs):
        W, X = _outputs(self.phi.kraus, vecs)
        lam, Q = np.linalg.eigh(X)
        lam = np.clip(lam, 0.0, None)
        t = lam.sum(axis=1)
        loglam = np.log(np.clip(lam, LOG_FLOOR, None))
        logt = np.log(np.clip(t, LOG_FLOOR, None))
        xlogx = np.where(lam > 0, lam * loglam, 0.0).sum(axis=1)
        vals = -xlogx + np.where(t > 0, t * logt, 0.0)
        gam = -(loglam - logt[:, None])
        gam[t <= 0] = 0.0
        G = np.einsum("jac,jc,jbc->jab", Q, gam, Q.conj())
        grads = _pullback(self.phi.kraus, G, W)
        if self.kind == "S" and not self._channel:
            p = np.sum(np.abs(vecs) ** 2, axis=1)
            Kv = vecs @ self._K.T
            ok = (t > 0) & (p > 0)
            ratio = np.where(ok, t / np.where(p > 0, p, 1.0), 1.0)
            logratio = np.where(ok, np.log(np.where(ok, 1 / ratio, 1.0)), 0.0)
            vals = vals + np.where(ok, t * logratio, 0.0)
            grads = grads + (logratio - 1.0)[:, None] * Kv * ok[:, None] + (ratio * ok)[:, None] * vecs
        return vals, grads


class TruncatedOutputEntropy(PureFunctional):
    """``H^n_Phi``: entropy of the ``n`` leading output eigenvalues, renormalized."""

    def __init__(self, phi: QuantumOperation, n: int):
        if n < 1:
            raise ValueError(f"truncation order must be >= 1, got {n}")
        self.phi = phi
        self.n = int(n)
        self.dim = phi.dim_in

    def evaluate(self, vecs):
        W, X = _outputs(self.phi.kraus, vecs)
        lam, Q = np.linalg.eigh(X)
        lam = np.clip(lam, 0.0, None)
        top = np.zeros_like(lam, dtype=bool)
        top[:, -min(self.n, lam.shape[1]):] = True
        lt = np.where(top, lam, 0.0)
        s = lt.sum(axis=1)
        loglam = np.log(np.clip(lam, LOG_FLOOR, None))
        logs = np.log(np.clip(s, LOG_FLOOR, None))
        vals = -np.where(lt > 0, lt * loglam, 0.0).sum(axis=1) + np.where(s > 0, s * logs, 0.0)
        gam = np.where(top, -(loglam - logs[:, None]), 0.0)
        gam[s <= 0] = 0.0
        G = np.einsum("jac,jc,jbc->jab", Q, gam, Q.conj())
        return np.clip(vals, 0.0, None), _pullback(self.phi.kraus, G, W)


class ChiTerm(PureFunctional):
    """``p H(Phi(psi psi^dag / p) || Omega)`` for a fixed output average ``Omega``."""

    def __init__(self, phi: QuantumOperation, omega: np.ndarray):
        self.phi = phi
        self.dim = phi.dim_in
        self.omega = hermitize(omega)
        self._log_omega = _pseudo_log(self.omega)
        self._tr_omega = float(np.trace(self.omega).real)

    def evaluate(self, vecs):
        W, X = _outputs(self.phi.kraus, vecs)
        lam, Q = np.linalg.eigh(X)
        lam = np.clip(lam, 0.0, None)
        t = lam.sum(axis=1)
        p = np.sum(np.abs(vecs) ** 2, axis=1)
        loglam = np.log(np.clip(lam, LOG_FLOOR, None))
        logp = np.log(np.clip(p, LOG_FLOOR, None))
        xlogx = np.where(lam > 0, lam * loglam, 0.0).sum(axis=1)
        x_logomega = np.einsum("jab,ba->j", X, self._log_omega).real
        vals = xlogx - t * logp - x_logomega + p * self._tr_omega - t
        G = np.einsum("jac,jc,jbc->jab", Q, loglam - logp[:, None], Q.conj()) - self._log_omega[None]
        grads = _pullback(self.phi.kraus, G, W)
        ratio = np.where(p > 0, t / np.where(p > 0, p, 1.0), 0.0)
        grads = grads + (self._tr_omega - ratio)[:, None] * vecs
        return vals, grads


class CallableFunctional(PureFunctional):
    """Wraps an arbitrary ``f(state) -> float``; gradients are left to finite differences."""

    has_gradient = False

    def __init__(self, f: Callable[[np.ndarray], float], dim: int):
        self.f = f
        self.dim = dim

    def evaluate(self, vecs):
        p = np.sum(np.abs(vecs) ** 2, axis=1)
        vals = np.zeros(len(p))
        for j, (v, pj) in enumerate(zip(vecs, p)):
            if pj > 0:
                u = v / math.sqrt(pj)
                fv = float(self.f(np.outer(u, u.conj())))
                vals[j] = pj * fv
        return vals, None


# ---------------------------------------------------------------------------
# parameterization


@dataclass(frozen=True, eq=False)
class HJWMap:
    """Map from a real parameter vector to the pure ensembles of a fixed state."""

    rho: np.ndarray
    n_members: int
    lambdas: np.ndarray
    eigvecs: np.ndarray

    @classmethod
    def for_state(cls, rho, n_members: int | None = None) -> "HJWMap":
        rho = as_state(rho)
        lam, E = np.linalg.eigh(rho)
        keep = lam > EIG_CUTOFF
        lam, E = lam[keep][::-1], E[:, keep][:, ::-1]
        r = len(lam)
        N = r * r if n_members is None else int(n_members)
        if N < r:
            raise ValueError(f"ensemble size {N} is below the rank {r} of the state")
        return cls(rho=rho, n_members=N, lambdas=lam, eigvecs=E)

    @property
    def rank(self) -> int:
        return len(self.lambdas)

    @property
    def n_params(self) -> int:
        return 2 * self.n_members * self.rank

    def _z(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.size != self.n_params:
            raise ValueError(f"expected {self.n_params} parameters, got {x.size}")
        h = x.size // 2
        return (x[:h] + 1j * x[h:]).reshape(self.n_members, self.rank)

    def vectors(self, x) -> np.ndarray:
        Z = self._z(x)
        s, Q = np.linalg.eigh(Z.conj().T @ Z)
        R = (Q / np.sqrt(s)) @ Q.conj().T
        U = Z @ R
        # row j: psi_j = sum_i U_ji sqrt(l_i) e_i
        return (U * np.sqrt(self.lambdas)) @ self.eigvecs.T

    def ensemble(self, x) -> Ensemble:
        return Ensemble.from_vectors(self.vectors(x))

    def value_and_grad(self, functional: PureFunctional, x):
        Z = self._z(x)
        s, Q = np.linalg.eigh(Z.conj().T @ Z)
        rs = np.sqrt(s)
        R = (Q / rs) @ Q.conj().T
        U = Z @ R
        D = np.sqrt(self.lambdas)
        vecs = (U * D) @ self.eigvecs.T
        vals, g_vec = functional.evaluate(vecs)
        value = float(np.sum(vals))
        if g_vec is None:
            return value, None
        G_U = (g_vec @ self.eigvecs.conj()) * D
        B_hat = Q.conj().T @ (Z.conj().T @ G_U) @ Q
        # divided differences of s -> s^{-1/2}
        dd = -1.0 / (np.outer(rs, rs) * (rs[:, None] + rs[None, :]))
        C = Q @ (B_hat * dd) @ Q.conj().T
        G_Z = G_U @ R + Z @ (C + C.conj().T)
        grad = 2 * np.concatenate([G_Z.real.ravel(), G_Z.imag.ravel()])
        return value, grad

    def params_for(self, e: Ensemble) -> np.ndarray:
        """Parameters reproducing a given pure ensemble of ``rho`` (zero-padded to ``n_members``)."""
        vecs = e.vectors()
        if len(vecs) > self.n_members:
            raise ValueError(f"ensemble has {len(vecs)} members, map allows {self.n_members}")
        coeff = vecs @ self.eigvecs.conj() / np.sqrt(self.lambdas)  # U_ji
        Z = np.zeros((self.n_members, self.rank), dtype=complex)
        Z[: len(coeff)] = coeff
        return np.concatenate([Z.real.ravel(), Z.imag.ravel()])

    def random_params(self, rng: np.random.Generator) -> np.ndarray:
        return rng.normal(size=self.n_params)


def ensemble_from_params(rho, n_members: int, params) -> Ensemble:
    return HJWMap.for_state(rho, n_members).ensemble(params)


# ---------------------------------------------------------------------------
# optimizer


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 32
    tol: float = 1e-6
    maxiter: int = 3000
    seed: int = 0
    n_members: int | None = None


@dataclass(frozen=True, eq=False)
class RoofResult:
    value: float
    ensemble: Ensemble
    restarts: int
    converged: bool
    spread: float
    values: tuple = field(default=(), repr=False)

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "spread": self.spread,
            "restarts": self.restarts,
            "converged": self.converged,
            "ensemble": self.ensemble.to_json(),
        }


def _seeds(config: OptimizerConfig, n: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(config.seed).spawn(n)]


def _optimize(hmap: HJWMap, functional: PureFunctional, config: OptimizerConfig,
              sign: float = 1.0, initial: Sequence[Ensemble] = ()) -> RoofResult:
    """Multi-start L-BFGS over the HJW parameters; ``sign=-1`` maximizes."""
    if hmap.rank == 1:
        e = hmap.ensemble(np.ones(hmap.n_params))
        v = float(np.sum(functional.evaluate(e.vectors())[0]))
        return RoofResult(value=v, ensemble=e, restarts=1, converged=True, spread=0.0, values=(v,))

    if functional.has_gradient:
        def fun(x):
            v, g = hmap.value_and_grad(functional, x)
            return sign * v, sign * g
        jac = True
    else:
        def fun(x):
            return sign * hmap.value_and_grad(functional, x)[0]
        jac = None

    starts = [hmap.params_for(e) for e in initial]
    starts += [hmap.random_params(rng) for rng in _seeds(config, config.restarts)]
    results = []
    for x0 in starts:
        v0 = hmap.value_and_grad(functional, x0)[0]
        if not math.isfinite(v0):
            # an infinite objective gives the optimizer nothing to follow
            results.append((v0, x0, False))
            continue
        res = minimize(fun, x0, jac=jac, method="L-BFGS-B",
                       options={"maxiter": config.maxiter, "ftol": 1e-15, "gtol": 1e-10,
                                "maxcor": 30})
        results.append((float(res.fun) * sign, res.x, bool(res.success)))
    vals = np.array([r[0] for r in results])
    best = int(np.argmin(sign * vals))
    best_val, best_x, _ = results[best]
    if not math.isfinite(best_val):
        e = hmap.ensemble(best_x)
        return RoofResult(value=best_val, ensemble=e, restarts=len(results), converged=False,
                          spread=math.nan, values=tuple(vals.tolist()))
    finite = vals[np.isfinite(vals)]
    close = np.sum(np.abs(finite - best_val) <= config.tol)
    converged = bool(close >= 2 or (len(results) == 1 and results[0][2]))
    e = hmap.ensemble(best_x)
    # report the value of the (pruned) witness itself
    value = float(np.sum(functional.evaluate(e.vectors())[0]))
    return RoofResult(value=value, ensemble=e, restarts=len(results), converged=converged,
                      spread=float(finite.max() - finite.min()), values=tuple(vals.tolist()))


def _as_functional(f, dim: int) -> PureFunctional:
    if isinstance(f, PureFunctional):
        return f
    if callable(f):
        return CallableFunctional(f, dim)
    raise TypeError(f"cannot use {f!r} as a state functional")


def convex_roof(f, rho, n_members: int | None = None, config: OptimizerConfig | None = None,
                initial: Sequence[Ensemble] = ()) -> RoofResult:
    """Minimize ``sum_j p_j f(psi_j)`` over pure ensembles ``{p_j, psi_j}`` of ``rho``.

    ``f`` is a :class:`PureFunctional` or any callable on density matrices.
    ``n_members`` defaults to ``config.n_members`` and then to ``rank(rho)**2``.
    ``initial`` ensembles are used as extra warm starts.
    """
    config = config or OptimizerConfig()
    rho = as_state(rho)
    func = _as_functional(f, rho.shape[0])
    hmap = HJWMap.for_state(rho, n_members if n_members is not None else config.n_members)
    return _optimize(hmap, func, config, initial=initial)


@dataclass(frozen=True, eq=False)
class OutputRoofs:
    H: RoofResult
    S: RoofResult
    trace_out: float


def co_output_entropy(phi: QuantumOperation, rho, n_members: int | None = None,
                      config: OptimizerConfig | None = None, initial: Sequence[Ensemble] = ()) -> OutputRoofs:
    """Convex roofs of ``H_Phi`` and ``S_Phi`` at ``rho``.

    Each roof is also evaluated at the other's witness, which makes the
    returned pair satisfy ``co H <= co S <= co H + eta(Tr Phi(rho))``.
    """
    config = config or OptimizerConfig()
    rho = as_state(rho)
    fH, fS = OutputEntropy(phi, "H"), OutputEntropy(phi, "S")
    rH = convex_roof(fH, rho, n_members, config, initial)
    if is_channel(phi):
        rS = rH
    else:
        rS = convex_roof(fS, rho, n_members, config, initial)
        rH = _cross(rH, fH, rS.ensemble)
        rS = _cross(rS, fS, rH.ensemble)
    t = float(np.trace(apply(phi, rho)).real)
    slack_low = rS.value - rH.value
    slack_high = rH.value + eta(min(max(t, 0.0), 1.0)) - rS.value
    if slack_low < -SANDWICH_TOL or slack_high < -SANDWICH_TOL:
        raise ConsistencyError(f"roof sandwich violated: coH={rH.value!r} coS={rS.value!r} Tr={t!r}")
    return OutputRoofs(H=rH, S=rS, trace_out=t)


def _cross(result: RoofResult, func: PureFunctional, other: Ensemble) -> RoofResult:
    v = float(np.sum(func.evaluate(other.vectors())[0]))
    if v < result.value:
        return replace(result, value=v, ensemble=other)
    return result


@dataclass(frozen=True, eq=False)
class ChiResult:
    value: float
    direct: float
    gap: float
    output_entropy: float
    roof: RoofResult
    direct_result: RoofResult | None

    @property
    def witness(self) -> Ensemble:
        return self.roof.ensemble

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "direct": self.direct,
            "gap": self.gap,
            "output_entropy": self.output_entropy,
            "roof": self.roof.to_json(),
        }


def chi_function(phi: QuantumOperation, rho, n_members: int | None = None,
                 config: OptimizerConfig | None = None, initial: Sequence[Ensemble] = (),
                 direct: bool = True, independent: bool = False) -> ChiResult:
    """``chi_Phi(rho)`` through ``S_Phi(rho) - co S_Phi(rho)``, cross-checked by direct maximization.

    The direct route maximizes the relative-entropy form of the Holevo
    quantity over the same ensemble parameterization with its own seeds.
    It is also warm-started from the roof witness unless ``independent``
    is set.  With ``direct=False`` it is skipped and ``direct``/``gap``
    are NaN.
    """
    config = config or OptimizerConfig()
    rho = as_state(rho)
    out = apply(phi, rho)
    S_out = _S_raw(out)
    roofs = co_output_entropy(phi, rho, n_members, config, initial)
    identity_value = S_out - roofs.S.value
    if not direct:
        return ChiResult(value=float(identity_value), direct=math.nan, gap=math.nan,
                         output_entropy=S_out, roof=roofs.S, direct_result=None)
    hmap = HJWMap.for_state(rho, n_members if n_members is not None else config.n_members)
    direct_cfg = replace(config, seed=config.seed + 0x5EED)
    best = _optimize(hmap, ChiTerm(phi, out), direct_cfg, sign=-1.0,
                     initial=[] if independent else [roofs.S.ensemble, *initial])
    return ChiResult(value=float(identity_value), direct=best.value,
                     gap=abs(best.value - identity_value), output_entropy=S_out,
                     roof=roofs.S, direct_result=best)


def truncated_roof(phi: QuantumOperation, rho, n: int, n_members: int | None = None,
                   config: OptimizerConfig | None = None, initial: Sequence[Ensemble] = ()) -> RoofResult:
    """Roof of the truncated output entropy ``H^n_Phi`` over pure ensembles of ``rho``."""
    if n < 1:
        raise ValueError(f"truncation order must be >= 1, got {n}")
    return convex_roof(TruncatedOutputEntropy(phi, n), rho, n_members, config, initial)


def entanglement_of_formation(omega, dims: Sequence[int], n_members: int | None = None,
                              config: OptimizerConfig | None = None) -> RoofResult:
    """Roof of ``S(Tr_K .)`` at a bipartite state on ``C^dA (x) C^dB``."""
    dA, dB = dims
    omega = as_state(omega)
    if omega.shape[0] != dA * dB:
        raise ValueError(f"state of dim {omega.shape[0]} does not match {dA}x{dB}")
    theta = partial_trace_channel((dA, dB), keep="first")
    return convex_roof(OutputEntropy(theta, "H"), omega, n_members, config)


_YY = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))


def concurrence(omega) -> float:
    omega = as_state(omega)
    if omega.shape != (4, 4):
        raise ValueError("concurrence is defined here for two-qubit states only")
    tilde = _YY @ omega.conj() @ _YY
    ev = np.linalg.eigvals(omega @ tilde)
    r = np.sort(np.sqrt(np.clip(ev.real, 0.0, None)))[::-1]
    return max(0.0, float(r[0] - r[1] - r[2] - r[3]))


def wootters_eof(omega) -> float:
    """Closed-form two-qubit entanglement of formation (nats) from the concurrence."""
    C = concurrence(omega)
    x = (1 + math.sqrt(max(1 - C * C, 0.0))) / 2
    return eta(x) + eta(1 - x)


def reduced_states(omega, dims) -> tuple[np.ndarray, np.ndarray]:
    return partial_trace(omega, dims, keep="first"), partial_trace(omega, dims, keep="second")
