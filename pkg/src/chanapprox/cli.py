"""Command-line front end: ``chanapprox <subcommand> [options]``.

Every report is a JSON object holding the command manifest, the package
version and the result.  Floats are rounded to 12 significant digits so
that reruns of one manifest compare equal as text.

Exit codes: 0 ok, 1 usage error, 2 validation failure, 3 property violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Callable

import numpy as np

from . import __version__
from .capacity import (
    ConstraintSet,
    additivity_gap,
    amplification_factor,
    chi_capacity,
    energy_ball,
    is_entanglement_breaking,
    unconstrained,
)
from .channels import (
    QuantumOperation,
    basis_projector,
    complementary,
    default_sample,
    operation_from_spec,
    random_measure_prepare,
    random_operation,
    strong_distance,
    truncate_output,
    validate,
)
from .choi import (
    ChoiOperator,
    MembershipError,
    ReferenceState,
    choi_of,
    kraus_from_choi,
    product_tail_bound,
    roundtrip_residual,
    t_sigma_membership,
    truncation_tail_bound,
)
from .linops import (
    InvalidOperatorError,
    as_state,
    entropy_H,
    entropy_S,
    eta,
    h2,
    max_mixed,
    operator_from_json,
    partial_trace,
    random_state,
    relative_entropy,
    trace_distance,
    truncated_entropy,
)
from .roof import (
    ConsistencyError,
    OptimizerConfig,
    chi_function,
    co_output_entropy,
    entanglement_of_formation,
    truncated_roof,
    wootters_eof,
)

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_VIOLATION = 0, 1, 2, 3
FUZZ_TOL = 1e-9
SPREAD_TOL = 1e-3
LN2 = math.log(2)

DEFAULTS = {
    "seed": 0,
    "dim": 2,
    "restarts": 32,
    "tol": 1e-6,
    "bits": False,
    "out": None,
    "format": "json",
    "members": None,
}


class PropertyViolation(RuntimeError):
    """An asserted inequality or monotonicity property failed."""


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# input helpers


def parse_state(spec: str, dim: int, seed: int = 0) -> np.ndarray:
    """State from ``mixed``, ``pure:i``, ``random[:seed[:rank]]``, ``bell``, ``diag:a,b,..`` or a JSON file."""
    name, *args = spec.split(":")
    if name == "mixed":
        return max_mixed(dim)
    if name == "pure":
        i = int(args[0]) if args else 0
        rho = np.zeros((dim, dim), dtype=complex)
        rho[i, i] = 1
        return rho
    if name == "random":
        s = int(args[0]) if args else seed
        rank = int(args[1]) if len(args) > 1 else None
        return random_state(dim, np.random.default_rng(s), rank=rank)
    if name == "bell":
        v = np.zeros(4, dtype=complex)
        v[0] = v[3] = 1 / math.sqrt(2)
        return np.outer(v, v.conj())
    if name == "diag":
        return as_state(np.diag([float(x) for x in args[0].split(",")]))
    with open(spec) as fh:
        return operator_from_json(json.load(fh), normalized=True)


def parse_floats(text: str) -> np.ndarray:
    return np.array([float(x) for x in text.split(",")])


def read_config(path: str) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment, keys mirror long flags."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _coerce(key: str, value):
    if not isinstance(value, str):
        return value
    if key in ("seed", "dim", "restarts", "members", "n", "cases", "n_max"):
        return int(value)
    if key in ("tol", "h"):
        return float(value)
    if key == "bits":
        return value.lower() in ("1", "true", "yes", "on")
    return value


# ---------------------------------------------------------------------------
# report formatting


def round_sig(x, digits: int = 12):
    """Recursively round floats to ``digits`` significant digits; inf/nan become strings."""
    if isinstance(x, dict):
        return {k: round_sig(v, digits) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [round_sig(v, digits) for v in x]
    if isinstance(x, np.ndarray):
        return round_sig(x.tolist(), digits)
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if x == 0:
            return 0.0
        return float(f"{x:.{digits}g}")
    return x


def render(report: dict, fmt: str) -> str:
    report = round_sig(report)
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True)
    rows = report["result"].get("rows")
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    else:
        w = csv.writer(buf)
        w.writerow(["key", "value"])
        for k, v in sorted(report["result"].items()):
            if not isinstance(v, (dict, list)):
                w.writerow([k, v])
    return buf.getvalue()


class Units:
    def __init__(self, bits: bool):
        self.bits = bits
        self.name = "bits" if bits else "nats"

    def __call__(self, x: float) -> float:
        return x / LN2 if self.bits else x


# ---------------------------------------------------------------------------
# runners; each takes the merged option dict and returns a result dict


def _config(opts) -> OptimizerConfig:
    return OptimizerConfig(restarts=opts["restarts"], tol=opts["tol"], seed=opts["seed"],
                           n_members=opts["members"])


def _channel(opts, key="channel", dim=None) -> QuantumOperation:
    return operation_from_spec(opts[key], dim or opts["dim"])


def run_entropy(opts) -> dict:
    u = Units(opts["bits"])
    A = parse_state(opts["state"], opts["dim"], opts["seed"]) if opts.get("state") else None
    if A is None:
        A = np.diag(parse_floats(opts["diag"]))
    out = {"S": u(entropy_S(A)), "H": u(entropy_H(A)), "trace": float(np.trace(A).real),
           "eigenvalues": np.sort(np.linalg.eigvalsh(A))[::-1]}
    if opts.get("n"):
        out["Hn"] = u(truncated_entropy(A, opts["n"]))
    return out


def _reference(opts, dim) -> ReferenceState:
    spec = opts.get("sigma") or "mixed"
    return ReferenceState.from_state(parse_state(spec, dim, opts["seed"]))


def run_choi(opts) -> dict:
    mode = opts.get("mode") or "roundtrip"
    if mode == "inverse":
        with open(opts["choi"]) as fh:
            C = ChoiOperator.from_json(json.load(fh))
        phi = kraus_from_choi(C)
        return {"operation": phi.to_json(), "validity": validate(phi).value}
    phi = _channel(opts)
    ref = _reference(opts, phi.dim_in)
    C = choi_of(phi, ref)
    member = t_sigma_membership(C, ref)
    out = {"validity": validate(phi).value, "member": member.member, "witness": member.witness}
    if mode == "forward":
        out["choi"] = C.to_json()
    elif mode == "roundtrip":
        out["roundtrip_residual"] = roundtrip_residual(phi, ref)
        out["rebuilt_kraus"] = kraus_from_choi(C).n_kraus
    elif mode != "membership":
        raise UsageError(f"unknown choi mode {mode!r}")
    return out


def run_roof(opts) -> dict:
    u = Units(opts["bits"])
    phi = _channel(opts)
    rho = parse_state(opts["state"], phi.dim_in, opts["seed"])
    r = co_output_entropy(phi, rho, None, _config(opts))
    return {"coH": u(r.H.value), "coS": u(r.S.value), "trace_out": r.trace_out,
            "spread": u(max(r.H.spread, r.S.spread)), "converged": r.S.converged,
            "roof": r.S.to_json()}


def run_chi(opts) -> dict:
    u = Units(opts["bits"])
    phi = _channel(opts)
    rho = parse_state(opts["state"], phi.dim_in, opts["seed"])
    r = chi_function(phi, rho, None, _config(opts))
    return {"chi": u(r.value), "chi_direct": u(r.direct), "gap": u(r.gap),
            "output_entropy": u(r.output_entropy), "spread": u(r.roof.spread),
            "witness": r.witness.to_json()}


def run_eof(opts) -> dict:
    u = Units(opts["bits"])
    dims = tuple(int(x) for x in (opts.get("dims") or "2,2").split(","))
    omega = parse_state(opts["state"], dims[0] * dims[1], opts["seed"])
    r = entanglement_of_formation(omega, dims, None, _config(opts))
    out = {"eof": u(r.value), "spread": u(r.spread), "roof": r.to_json()}
    if dims == (2, 2):
        out["wootters"] = u(wootters_eof(omega))
    return out


def run_troof(opts) -> dict:
    u = Units(opts["bits"])
    phi = _channel(opts)
    rho = parse_state(opts["state"], phi.dim_in, opts["seed"])
    r = truncated_roof(phi, rho, opts["n"], None, _config(opts))
    return {"n": opts["n"], "value": u(r.value), "spread": u(r.spread), "roof": r.to_json()}


def _constraint(opts, dim) -> ConstraintSet:
    if opts.get("hull"):
        return ConstraintSet.hull([parse_state(s, dim, opts["seed"]) for s in opts["hull"].split(",")])
    if opts.get("energy"):
        H = parse_floats(opts["energy"])
        if len(H) != dim:
            raise UsageError(f"energy diagonal has {len(H)} entries, channel input dim is {dim}")
        return energy_ball(H, opts["h"] if opts.get("h") is not None else float(H.max()))
    return unconstrained(dim)


def run_capacity(opts) -> dict:
    u = Units(opts["bits"])
    phi = _channel(opts)
    A = _constraint(opts, phi.dim_in)
    r = chi_capacity(phi, A, None, _config(opts))
    out = r.to_json()
    out["value"] = u(r.value)
    out["spread"] = u(r.spread)
    out["constraint"] = A.to_json()
    return out


def run_additivity(opts) -> dict:
    u = Units(opts["bits"])
    if opts["channel"].startswith("complementary-mp"):
        _, *args = opts["channel"].split(":")
        seed = int(args[0]) if args else opts["seed"]
        phi = complementary(random_measure_prepare(opts["dim"], 2, 2, np.random.default_rng(seed)))
    else:
        phi = _channel(opts)
    psi = _channel(opts, "channel2")
    rho = parse_state(opts["state"], phi.dim_in * psi.dim_in, opts["seed"])
    r = additivity_gap(phi, psi, rho, None, _config(opts))
    return {"gap": u(r.gap), "chi_joint": u(r.joint.value), "chi_first": u(r.first.value),
            "chi_second": u(r.second.value), "spreads": [u(s) for s in r.spreads]}


def run_eb_test(opts) -> dict:
    phi = _channel(opts)
    return {"verdict": is_entanglement_breaking(phi).value}


def run_amp_factor(opts) -> dict:
    phi = _channel(opts)
    H = parse_floats(opts["H"])
    Hp = parse_floats(opts["Hp"]) if opts.get("Hp") else H
    k = amplification_factor(phi, H, Hp)
    out = {"factor": k}
    if opts.get("k") is not None:
        out["member"] = k <= float(opts["k"])
    return out


def _sequence(phi: QuantumOperation, scheme: str, n: int) -> QuantumOperation:
    N = phi.dim_out
    if scheme == "A":
        return truncate_output(phi, basis_projector(N, n))
    if scheme == "B":
        return QuantumOperation(math.sqrt(n / N) * phi.kraus)
    raise UsageError(f"unknown scheme {scheme!r}")


def run_converge(opts) -> dict:
    """Rows ``(n, coH, coS, chi, Hn_roof, strong_distance)`` for ``n = 1..dim_out``.

    Rows are computed from the top down: the witness found for ``n + 1``
    seeds the search for ``n``.  Both the truncated roofs and the roofs of
    the truncated operations decrease pointwise with ``n``, so the
    sequences come out monotone whenever the optimizer finds the roofs.
    """
    u = Units(opts["bits"])
    phi = _channel(opts)
    rho = parse_state(opts["state"], phi.dim_in, opts["seed"])
    scheme = opts.get("scheme") or "A"
    cfg = _config(opts)
    N = phi.dim_out
    sample = default_sample(phi.dim_in, seed=opts["seed"])
    full = co_output_entropy(phi, rho, None, cfg)
    rows, warm_roof, warm_trunc = [], [full.H.ensemble], [full.H.ensemble]
    for n in range(N, 0, -1):
        phi_n = _sequence(phi, scheme, n)
        roofs = co_output_entropy(phi_n, rho, None, cfg, warm_roof)
        chi = chi_function(phi_n, rho, None, cfg, [roofs.S.ensemble], direct=False)
        trunc = truncated_roof(phi, rho, n, None, cfg, warm_trunc)
        warm_roof, warm_trunc = [roofs.H.ensemble, roofs.S.ensemble], [trunc.ensemble]
        rows.append({"n": n, "coH": roofs.H.value, "coS": roofs.S.value, "chi": chi.value,
                     "Hn_roof": trunc.value, "strong_distance": strong_distance(phi_n, phi, sample),
                     "spread": max(roofs.H.spread, trunc.spread)})
    rows.reverse()
    checks = _converge_checks(rows, full.H.value)
    for row in rows:
        for key in ("coH", "coS", "chi", "Hn_roof", "spread"):
            row[key] = u(row[key])
    return {"rows": rows, "scheme": scheme, "coH_full": u(full.H.value), "checks": checks}


def _converge_checks(rows, coH_full) -> dict:
    coH = [r["coH"] for r in rows]
    hn = [r["Hn_roof"] for r in rows]
    drop = max([0.0] + [a - b for a, b in zip(coH, coH[1:])] + [a - b for a, b in zip(hn, hn[1:])])
    return {
        "max_decrease": drop,
        "terminal_gap_coH": abs(coH[-1] - coH_full),
        "terminal_gap_Hn": abs(hn[-1] - coH_full),
        "terminal_distance": rows[-1]["strong_distance"],
    }


# ---------------------------------------------------------------------------
# inequality fuzz suite


def _random_pair(rng, d):
    """Random ``A <= B`` in T_1."""
    tB = rng.uniform(0.05, 1.0)
    tA = rng.uniform(0.0, 1.0) * tB
    A = tA * random_state(d, rng, rank=int(rng.integers(1, d + 1)))
    R = (tB - tA) * random_state(d, rng, rank=int(rng.integers(1, d + 1)))
    return A, A + R


def _fuzz_homogeneity(rng, d):
    A = rng.uniform(0.05, 1.0) * random_state(d, rng)
    lam = rng.uniform(0, 1)
    return abs(entropy_H(lam * A) - lam * entropy_H(A))


def _fuzz_sandwich(rng, d):
    A, B = _random_pair(rng, d)
    tA, tB = float(np.trace(A).real), float(np.trace(B).real)
    lo = entropy_H(A) + entropy_H(B - A)
    hi = lo + tB * h2(min(tA / tB, 1.0))
    HB = entropy_H(B)
    return max(lo - HB, HB - hi, 0.0)


def _fuzz_subadditivity(rng, d):
    dA = int(rng.integers(2, d + 1))
    dB = int(rng.integers(2, 4))
    C = rng.uniform(0.05, 1.0) * random_state(dA * dB, rng, rank=int(rng.integers(1, dA * dB + 1)))
    rhs = (entropy_S(partial_trace(C, (dA, dB), "first")) + entropy_S(partial_trace(C, (dA, dB), "second"))
           - eta(float(np.trace(C).real)))
    return max(entropy_S(C) - rhs, 0.0)


def _fuzz_roof_sandwich(rng, d):
    phi = truncate_output(random_operation(d, d, 2, rng), basis_projector(d, int(rng.integers(1, d + 1))))
    rho = random_state(d, rng)
    cfg = OptimizerConfig(restarts=1, maxiter=40, seed=int(rng.integers(2 ** 31)))
    try:
        r = co_output_entropy(phi, rho, d, cfg)
    except ConsistencyError:
        return math.inf
    t = min(max(r.trace_out, 0.0), 1.0)
    return max(r.H.value - r.S.value, r.S.value - r.H.value - eta(t), 0.0)


def _fuzz_lemma2(rng, d):
    k = int(rng.integers(2, 5))
    pi = rng.dirichlet(np.ones(k)) * 0.9 + 0.1 / k
    pairs = [_random_pair(rng, d) for _ in range(k)]
    A = sum(p * a for p, (a, _) in zip(pi, pairs))
    B = sum(p * b for p, (_, b) in zip(pi, pairs))
    lhs = sum(p * relative_entropy(a, A) for p, (a, _) in zip(pi, pairs))
    tA, tB = float(np.trace(A).real), float(np.trace(B).real)
    rhs = sum(p * relative_entropy(b, B) for p, (_, b) in zip(pi, pairs)) + eta(tA) + tB * h2(min(tA / tB, 1.0))
    return max(lhs - rhs, 0.0)


def _fuzz_pinsker(rng, d):
    rho, omega = random_state(d, rng), random_state(d, rng)
    if rng.uniform() < 0.3:
        omega = 0.5 * (rho + omega)
    return max(0.5 * trace_distance(rho, omega) ** 2 - relative_entropy(rho, omega), 0.0)


def _fuzz_choi_tail(rng, d):
    sigma = random_state(d, rng)
    ref = ReferenceState.from_state(sigma)
    dout = int(rng.integers(2, 4))
    C = choi_of(random_operation(d, dout, -(-d // dout) + 1, rng), ref)
    lhs, rhs = truncation_tail_bound(C, ref, int(rng.integers(0, d + 1)))
    return max(lhs - rhs, 0.0)


def _fuzz_product_tail(rng, d):
    dA, dB = d, int(rng.integers(2, 4))
    C = rng.uniform(0.05, 1.0) * random_state(dA * dB, rng)
    P = basis_projector(dA, int(rng.integers(0, dA + 1)))
    Q = basis_projector(dB, int(rng.integers(0, dB + 1)))
    lhs, rhs = product_tail_bound(C, (dA, dB), P, Q)
    return max(rhs - lhs, 0.0)


FUZZ_CHECKS: dict[str, Callable] = {
    "homogeneity": _fuzz_homogeneity,
    "sandwich": _fuzz_sandwich,
    "subadditivity": _fuzz_subadditivity,
    "roof_sandwich": _fuzz_roof_sandwich,
    "ensemble_relative_entropy": _fuzz_lemma2,
    "pinsker": _fuzz_pinsker,
    "choi_tail": _fuzz_choi_tail,
    "product_tail": _fuzz_product_tail,
}


def run_fuzz(opts) -> dict:
    cases = int(opts.get("cases") or 1000)
    lo, hi = (int(x) for x in (opts.get("dims") or "2-6").split("-"))
    names = opts["checks"].split(",") if opts.get("checks") else list(FUZZ_CHECKS)
    unknown = set(names) - set(FUZZ_CHECKS)
    if unknown:
        raise UsageError(f"unknown fuzz checks: {sorted(unknown)}")
    seeds = np.random.SeedSequence(opts["seed"]).spawn(len(names))
    out = {}
    for name, ss in zip(names, seeds):
        rng = np.random.default_rng(ss)
        worst, per_dim = 0.0, {}
        for i in range(cases):
            d = lo + i % (hi - lo + 1)
            v = float(FUZZ_CHECKS[name](rng, d))
            worst = max(worst, v)
            per_dim[d] = max(per_dim.get(d, 0.0), v)
        out[name] = {"cases": cases, "max_violation": worst,
                     "per_dim": {str(k): v for k, v in sorted(per_dim.items())}}
    return {"checks": out, "tolerance": FUZZ_TOL}


# ---------------------------------------------------------------------------
# argument parsing


RUNNERS = {
    "entropy": run_entropy,
    "choi": run_choi,
    "roof": run_roof,
    "chi": run_chi,
    "eof": run_eof,
    "troof": run_troof,
    "capacity": run_capacity,
    "additivity": run_additivity,
    "eb-test": run_eb_test,
    "amp-factor": run_amp_factor,
    "converge": run_converge,
    "fuzz": run_fuzz,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _global_flags(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--seed", type=int, default=S, help="master seed (default 0)")
    p.add_argument("--dim", type=int, default=S, help="input dimension for factory channels (default 2)")
    p.add_argument("--restarts", type=int, default=S, help="optimizer restarts (default 32)")
    p.add_argument("--tol", type=float, default=S, help="restart agreement tolerance (default 1e-6)")
    p.add_argument("--members", type=int, default=S, help="ensemble size (default rank**2)")
    p.add_argument("--bits", action="store_true", default=S, help="report entropic values in bits")
    p.add_argument("--out", default=S, help="write the report here instead of stdout")
    p.add_argument("--format", choices=["json", "csv"], default=S)
    p.add_argument("--config", default=S, help="flat key = value file; command-line flags win")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    _global_flags(common)
    parser = _Parser(prog="chanapprox", description=__doc__.splitlines()[0], parents=[common])
    parser.add_argument("--version", action="version", version=f"chanapprox {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    S = argparse.SUPPRESS

    def add(name, help_):
        return sub.add_parser(name, help=help_, parents=[common])

    p = add("entropy", "entropies of an operator")
    p.add_argument("--state", default=S)
    p.add_argument("--diag", default=S, help="comma-separated diagonal")
    p.add_argument("--n", type=int, default=S, help="also report the top-n truncated entropy")

    p = add("choi", "generalized Choi operator: forward, inverse, membership, roundtrip")
    p.add_argument("--channel", default=S)
    p.add_argument("--sigma", default=S, help="reference state spec (default mixed)")
    p.add_argument("--mode", choices=["forward", "inverse", "membership", "roundtrip"], default=S)
    p.add_argument("--choi", default=S, help="Choi operator JSON for --mode inverse")

    for name, help_ in (("roof", "convex roofs of H and S output entropies"),
                        ("chi", "chi-function at a state"),
                        ("troof", "roof of the truncated output entropy")):
        p = add(name, help_)
        p.add_argument("--channel", default=S)
        p.add_argument("--state", default=S)
        if name == "troof":
            p.add_argument("--n", type=int, default=S)

    p = add("eof", "entanglement of formation")
    p.add_argument("--state", default=S)
    p.add_argument("--dims", default=S, help="bipartition, e.g. 2,2")

    p = add("capacity", "constrained chi-capacity")
    p.add_argument("--channel", default=S)
    p.add_argument("--energy", default=S, help="diagonal of the input Hamiltonian")
    p.add_argument("--h", type=float, default=S, help="energy bound")
    p.add_argument("--hull", default=S, help="comma-separated state specs spanning the constraint")

    p = add("additivity", "chi-function additivity gap on a bipartite input")
    p.add_argument("--channel", default=S, help="first channel, or complementary-mp[:seed]")
    p.add_argument("--channel2", default=S)
    p.add_argument("--state", default=S)

    p = add("eb-test", "entanglement-breaking test")
    p.add_argument("--channel", default=S)

    p = add("amp-factor", "energy amplification factor")
    p.add_argument("--channel", default=S)
    p.add_argument("--H", default=S, help="diagonal of the input Hamiltonian")
    p.add_argument("--Hp", default=S, help="diagonal of the output Hamiltonian (default H)")
    p.add_argument("--k", type=float, default=S, help="report membership for this factor bound")

    p = add("converge", "truncation convergence table")
    p.add_argument("--channel", default=S)
    p.add_argument("--state", default=S)
    p.add_argument("--scheme", choices=["A", "B"], default=S)

    p = add("fuzz", "inequality fuzz suite")
    p.add_argument("--cases", type=int, default=S)
    p.add_argument("--dims", default=S, help="dimension range, e.g. 2-6")
    p.add_argument("--checks", default=S, help="comma-separated subset of checks")
    return parser


COMMAND_DEFAULTS = {
    "channel": "identity",
    "channel2": "random:1:2",
    "state": "mixed",
    "n": None,
}


def merge_options(args: argparse.Namespace) -> dict:
    given = vars(args).copy()
    cfg = read_config(given.pop("config")) if "config" in given else {}
    opts = {**DEFAULTS, **COMMAND_DEFAULTS, **cfg, **given}
    if args.command == "eof" and "state" not in given and "state" not in cfg:
        opts["state"] = "bell"
    if args.command == "entropy" and "diag" in given and "state" not in given:
        opts["state"] = None
    return {k: _coerce(k, v) for k, v in opts.items()}


def manifest(opts: dict) -> dict:
    skip = {"out", "format"}
    return {k: v for k, v in sorted(opts.items()) if k not in skip and v is not None}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits on --help, --version and bad flags
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    if not args.command:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        opts = merge_options(args)
        if args.command == "troof" and not opts.get("n"):
            raise UsageError("troof needs --n")
        if args.command == "amp-factor" and not opts.get("H"):
            raise UsageError("amp-factor needs --H")
        result = RUNNERS[args.command](opts)
    except UsageError as exc:
        print(f"chanapprox: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConsistencyError, PropertyViolation) as exc:
        print(f"chanapprox: property violation: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except (InvalidOperatorError, MembershipError, ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"chanapprox: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    report = {"command": args.command, "version": __version__, "manifest": manifest(opts),
              "units": Units(opts["bits"]).name, "result": result}
    text = render(report, opts["format"])
    if opts["out"]:
        with open(opts["out"], "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    return _status(args.command, result)


def _status(command: str, result: dict) -> int:
    if command == "fuzz":
        bad = [k for k, v in result["checks"].items() if not v["max_violation"] <= FUZZ_TOL]
        if bad:
            print(f"chanapprox: property violation in {', '.join(bad)}", file=sys.stderr)
            return EXIT_VIOLATION
    if command == "converge":
        c = result["checks"]
        if max(c["max_decrease"], c["terminal_gap_coH"], c["terminal_gap_Hn"]) > SPREAD_TOL:
            print("chanapprox: convergence property violated", file=sys.stderr)
            return EXIT_VIOLATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
