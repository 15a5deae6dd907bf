"""End-to-end acceptance checks; each test prints one PASS/FAIL line."""

import io
import json
import math
import subprocess
import sys
import time
from contextlib import redirect_stdout

import numpy as np
from scipy.optimize import minimize

from chanapprox import capacity as C
from chanapprox import channels as ch
from chanapprox import choi
from chanapprox import cli
from chanapprox import linops as L
from chanapprox import roof as R

import oracles
from conftest import record_acceptance

DIMS = (2, 3, 4, 5, 6)


def _entangled(omega) -> bool:
    return np.linalg.eigvalsh(C.partial_transpose(omega, (2, 2)))[0] < -1e-6


def test_choi_roundtrip():
    t0 = time.perf_counter()
    worst = 0.0
    rng = np.random.default_rng(101)
    for din in DIMS:
        refs = [choi.ReferenceState.maximally_mixed(din)]
        for dout in DIMS:
            for i in range(200):
                if i % 2:
                    sigma = L.random_state(din, rng)
                    ref = choi.ReferenceState.from_state(sigma)
                else:
                    ref = refs[0]
                k = int(rng.integers(1, 5))
                phi = ch.random_operation(din, dout, max(k, -(-din // dout)), rng)
                worst = max(worst, choi.roundtrip_residual(phi, ref))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 60
    record_acceptance(1, ok, f"Choi roundtrip: max residual {worst:.2e} over 10000 operations, {elapsed:.1f}s")
    assert ok


def test_inequality_fuzz():
    t0 = time.perf_counter()
    opts = {**cli.DEFAULTS, **cli.COMMAND_DEFAULTS, "cases": 1000, "dims": "2-6", "checks": None, "seed": 2024}
    res = cli.run_fuzz(opts)["checks"]
    elapsed = time.perf_counter() - t0
    worst = max(v["max_violation"] for v in res.values())
    ok = worst <= 1e-9 and elapsed < 120 and all(v["cases"] >= 1000 for v in res.values())
    record_acceptance(2, ok, f"inequality fuzz: {len(res)} checks x 1000 cases, max violation {worst:.2e}, "
                             f"{elapsed:.1f}s")
    assert ok


def test_roof_vs_oracle():
    t0 = time.perf_counter()
    diffs, above = [], []
    for i in range(20):
        rng = np.random.default_rng(1000 + i)
        phi = ch.random_channel(2, 2, int(rng.integers(2, 5)), rng)
        rho = L.random_state(2, rng)
        val = R.co_output_entropy(phi, rho, config=R.OptimizerConfig(restarts=8)).S.value
        oracle = oracles.qubit_roof_search(phi.kraus, rho, 100_000, np.random.default_rng(i))
        diffs.append(abs(val - oracle))
        above.append(val - oracle)
    elapsed = time.perf_counter() - t0
    ok = max(diffs) <= 1e-3 and max(above) <= 1e-9 and elapsed < 300
    record_acceptance(3, ok, f"roof vs random search: max |diff| {max(diffs):.2e}, max excess {max(above):.2e}, "
                             f"{elapsed:.1f}s")
    assert ok


def test_eof_vs_wootters():
    t0 = time.perf_counter()
    rng = np.random.default_rng(404)
    states = [L.random_state(4, rng, rank=1 + i % 4) for i in range(50)]
    states.append(L.projector([1, 0, 0, 1]) / 2)
    states += [np.kron(L.random_pure_state(2, rng), L.random_pure_state(2, rng)) for _ in range(5)]
    cfg = R.OptimizerConfig(restarts=8)
    errs = [abs(R.entanglement_of_formation(s, (2, 2), config=cfg).value - oracles.wootters_eof_oracle(s))
            for s in states]
    bell = R.entanglement_of_formation(states[50], (2, 2), config=cfg).value
    elapsed = time.perf_counter() - t0
    ok = max(errs) <= 1e-3 and abs(bell - math.log(2)) <= 1e-3 and max(errs[51:]) <= 1e-3 and elapsed < 300
    record_acceptance(4, ok, f"EoF vs concurrence formula: max |diff| {max(errs):.2e} on {len(states)} states, "
                             f"Bell {bell:.6f}, {elapsed:.1f}s")
    assert ok


def test_chi_identity():
    t0 = time.perf_counter()
    worst = 0.0
    cfg = R.OptimizerConfig(restarts=8)
    for i in range(20):
        rng = np.random.default_rng(500 + i)
        phi = ch.random_channel(2, 2, int(rng.integers(2, 5)), rng)
        for _ in range(10):
            r = R.chi_function(phi, L.random_state(2, rng), config=cfg, independent=True)
            worst = max(worst, abs(r.gap))
    elapsed = time.perf_counter() - t0
    ok = worst <= 2e-3
    record_acceptance(5, ok, f"chi direct (cold starts) vs S - coS: max |diff| {worst:.2e} over 200 cases, {elapsed:.1f}s")
    assert ok


def test_convergence_scheme_a():
    t0 = time.perf_counter()
    drops, gaps = [], []
    for i in range(5):
        opts = {**cli.DEFAULTS, **cli.COMMAND_DEFAULTS, "channel": f"random:{600 + i}:3", "dim": 3,
                "state": f"random:{700 + i}", "restarts": 8, "scheme": "A"}
        res = cli.run_converge(opts)
        c = res["checks"]
        drops.append(c["max_decrease"])
        gaps.append(max(c["terminal_gap_coH"], c["terminal_gap_Hn"]))
    elapsed = time.perf_counter() - t0
    ok = max(drops) <= 1e-3 and max(gaps) <= 1e-3
    record_acceptance(6, ok, f"truncation sequences: max decrease {max(drops):.2e}, terminal gap {max(gaps):.2e}, "
                             f"{elapsed:.1f}s")
    assert ok


def test_capacity_anchors():
    t0 = time.perf_counter()
    cfg = R.OptimizerConfig(restarts=8)
    dep = C.chi_capacity(ch.completely_depolarizing(2), C.unconstrained(2), config=cfg).value
    ident = C.chi_capacity(ch.identity(2), C.unconstrained(2), config=cfg).value
    phi = ch.random_channel(3, 3, 2, np.random.default_rng(77))
    H = np.array([0.0, 1.0, 2.0])
    values, spreads, init = [], [], []
    for h in np.linspace(0.0, 2.0, 9):
        r = C.chi_capacity(phi, C.energy_ball(H, h), config=cfg, initial=init)
        values.append(r.value)
        spreads.append(r.spread)
        init = [r.ensemble]
    drop = max([0.0] + [a - b for a, b in zip(values, values[1:])])
    elapsed = time.perf_counter() - t0
    ok = abs(dep) <= 1e-6 and abs(ident - math.log(2)) <= 1e-3 and drop <= 1e-6
    record_acceptance(7, ok, f"capacity: depolarizing {dep:.1e}, identity {ident:.6f}, energy sweep max decrease "
                             f"{drop:.1e} over {len(values)} bounds, {elapsed:.1f}s")
    assert ok


def test_additivity_gap():
    t0 = time.perf_counter()
    cfg = R.OptimizerConfig(restarts=8)
    upper, lower, n_ent = -np.inf, np.inf, 0
    for i in range(5):
        phi = ch.complementary(ch.random_measure_prepare(2, 2, 2, np.random.default_rng(800 + i)))
        for j in range(5):
            rng = np.random.default_rng(900 + 10 * i + j)
            psi = ch.random_channel(2, 2, int(rng.integers(2, 4)), rng)
            count = 0
            while count < 10:
                omega = L.random_state(4, rng, rank=int(rng.integers(1, 3)))
                if not _entangled(omega):
                    continue
                upper = max(upper, C.additivity_gap(phi, psi, omega, config=cfg).gap)
                count += 1
            n_ent += count
            prod = np.kron(L.random_state(2, rng), L.random_state(2, rng))
            lower = min(lower, C.additivity_gap(phi, psi, prod, config=cfg).gap)
    elapsed = time.perf_counter() - t0
    ok = upper <= 2e-3 and lower >= -2e-3 and elapsed < 900
    record_acceptance(8, ok, f"additivity: max gap {upper:.2e} over {n_ent} entangled inputs, min product gap "
                             f"{lower:.2e}, {elapsed:.1f}s")
    assert ok


def _ratio(phi, H, Hp, angles):
    th, ph = angles
    v = np.array([math.cos(th / 2), np.exp(1j * ph) * math.sin(th / 2)])
    rho = np.outer(v, v.conj())
    return float(np.trace(Hp @ ch.apply(phi, rho)).real / np.trace(H @ rho).real)


def test_amplification_factor():
    worst_gap, worst_excess = 0.0, -np.inf
    for i in range(20):
        rng = np.random.default_rng(1100 + i)
        phi = ch.random_channel(2, 2, int(rng.integers(1, 4)), rng)
        M = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        H = M @ M.conj().T + 0.2 * np.eye(2)
        Hp = np.diag(rng.uniform(0.0, 3.0, size=2))
        k = C.amplification_factor(phi, H, Hp)
        th = np.arccos(rng.uniform(-1, 1, size=10_000))
        ph = rng.uniform(0, 2 * np.pi, size=10_000)
        samples = np.array([_ratio(phi, H, Hp, a) for a in zip(th, ph)])
        best = int(np.argmax(samples))
        refined = minimize(lambda a: -_ratio(phi, H, Hp, a), [th[best], ph[best]], method="Nelder-Mead",
                           options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
        sup = max(samples.max(), -refined.fun)
        worst_excess = max(worst_excess, sup - k)
        worst_gap = max(worst_gap, abs(k - sup))
    ok = worst_excess <= 1e-9 and worst_gap <= 1e-6
    record_acceptance(9, ok, f"amplification factor: max |formula - sampled sup| {worst_gap:.2e}, "
                             f"max sample excess {worst_excess:.2e}")
    assert ok


def _cli_text(argv):
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = cli.main(list(argv))
    assert code == 0
    return buf.getvalue()


def test_reproducibility():
    runs = [
        ("roof", "--channel", "random:3:3", "--state", "random:4", "--restarts", "4", "--seed", "5"),
        ("chi", "--channel", "amplitude-damping:0.3", "--state", "random:2", "--restarts", "4"),
        ("capacity", "--channel", "random:8:2", "--dim", "3", "--energy", "0,1,2", "--h", "0.7",
         "--restarts", "4"),
        ("additivity", "--channel", "complementary-mp:1", "--state", "random:3:2", "--restarts", "4"),
        ("converge", "--channel", "random:9:2", "--dim", "3", "--restarts", "3", "--format", "csv"),
        ("fuzz", "--cases", "30", "--seed", "3"),
    ]
    same = [_cli_text(a) == _cli_text(a) for a in runs]
    proc = [subprocess.run([sys.executable, "-m", "chanapprox", *runs[0]], capture_output=True, text=True).stdout
            for _ in range(2)]
    same.append(proc[0] == proc[1] == _cli_text(runs[0]))
    values = json.loads(proc[0])["result"]
    ok = all(same) and math.isfinite(values["coS"])
    record_acceptance(10, ok, f"reproducibility: {sum(same)}/{len(same)} reruns textually identical "
                              f"(values at 12 significant digits)")
    assert ok
