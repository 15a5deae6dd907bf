"""Independent brute-force oracles for the test suite.

Nothing here calls the optimizer.  Ensembles are drawn directly on the
Bloch ball (qubits) or from random isometries, and values are computed with
plain eigenvalue sums.
"""

from __future__ import annotations

import numpy as np

PAULI = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]])


def xlogx_entropy(lam) -> np.ndarray:
    lam = np.clip(np.asarray(lam, dtype=float), 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(lam > 1e-15, -lam * np.log(lam), 0.0)
    return t.sum(axis=-1)


def bloch(rho) -> np.ndarray:
    return np.real(np.einsum("kab,ba->k", PAULI, rho))


def pure_from_bloch(n) -> np.ndarray:
    """Density matrices of unit Bloch vectors, shape (..., 2, 2)."""
    n = np.asarray(n, dtype=float)
    return 0.5 * (np.eye(2) + np.einsum("...k,kab->...ab", n, PAULI))


def output_entropy(kraus, states) -> np.ndarray:
    """``S(sum_k V_k rho V_k^dag)`` for a stack of states."""
    out = np.einsum("kab,nbc,kdc->nad", kraus, states, kraus.conj())
    return xlogx_entropy(np.linalg.eigvalsh(out))


def _unit(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _exit_point(r, direction):
    """Points where the rays ``r + s d`` (s > 0) leave the unit ball, and the lengths s."""
    b = direction @ r
    s = -b + np.sqrt(b * b - (r @ r - 1))
    return r + s[:, None] * direction, s


def qubit_roof_search(kraus, rho, draws: int, rng) -> float:
    """Minimum of ``sum p_j S(Phi(psi_j))`` over random pure decompositions of a qubit state.

    Half of the draws are two-member decompositions along random chords
    through the Bloch vector; the other half are three-member decompositions
    built from two random sphere points and a third exit point.
    """
    r = bloch(rho)
    n2 = draws // 2
    chords = _chord_values(kraus, r, _unit(rng, n2))
    triangles = _triangle_values(kraus, r, rng, draws - n2)
    return float(min(chords.min(), triangles.min()))


def _chord_values(kraus, r, d):
    a, sa = _exit_point(r, d)
    b, sb = _exit_point(r, -d)
    # r = (sb a + sa b) / (sa + sb)
    wa = sb / (sa + sb)
    return wa * output_entropy(kraus, pure_from_bloch(a)) + (1 - wa) * output_entropy(kraus, pure_from_bloch(b))


def _triangle_values(kraus, r, rng, n):
    a, b = _unit(rng, n), _unit(rng, n)
    t = rng.uniform(size=n)
    q = (1 - t)[:, None] * a + t[:, None] * b
    d = r - q
    nd = np.linalg.norm(d, axis=1)
    ok = nd > 1e-12
    a, b, t, d, nd = a[ok], b[ok], t[ok], d[ok], nd[ok]
    c, s = _exit_point(r, d / nd[:, None])
    # r = lam q + (1 - lam) c
    lam = s / (s + nd)
    return (lam * (1 - t) * output_entropy(kraus, pure_from_bloch(a))
            + lam * t * output_entropy(kraus, pure_from_bloch(b))
            + (1 - lam) * output_entropy(kraus, pure_from_bloch(c)))


def chi_search(kraus, rho, draws: int, rng) -> float:
    """``S(Phi(rho)) - roof`` from :func:`qubit_roof_search`."""
    S_out = float(output_entropy(kraus, rho[None])[0])
    return S_out - qubit_roof_search(kraus, rho, draws, rng)


def capacity_search(kraus, draws: int, rng) -> float:
    """Max Holevo quantity over random two-member qubit ensembles (pure members, free weights)."""
    a, b = _unit(rng, draws), _unit(rng, draws)
    p = rng.uniform(size=draws)
    Pa, Pb = pure_from_bloch(a), pure_from_bloch(b)
    Sa, Sb = output_entropy(kraus, Pa), output_entropy(kraus, Pb)
    avg = p[:, None, None] * Pa + (1 - p)[:, None, None] * Pb
    Savg = output_entropy(kraus, avg)
    return float(np.max(Savg - p * Sa - (1 - p) * Sb))


def wootters_eof_oracle(rho) -> float:
    """Two-qubit entanglement of formation (nats) from the concurrence."""
    yy = np.kron(PAULI[1], PAULI[1])
    R = rho @ yy @ rho.conj() @ yy
    ev = np.sort(np.sqrt(np.clip(np.linalg.eigvals(R).real, 0, None)))[::-1]
    C = max(0.0, ev[0] - ev[1] - ev[2] - ev[3])
    x = (1 + np.sqrt(1 - C * C)) / 2
    return float(xlogx_entropy([x, 1 - x]))
