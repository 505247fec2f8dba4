"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` (the lines are repeated in the
terminal summary) or ``python tests/test_acceptance.py``.
"""
import math
import time
from itertools import combinations

import numpy as np
import pytest

from specfinder.cli import main as cli_main
from specfinder.conditional import (
    PULSE,
    STATED_PREFACTOR,
    ConversionParams,
    commutator_generator,
    conditional_target,
    h_double,
    literal_identity_lhs,
    pair_conditional_step,
    resolve_conventions,
)
from specfinder.document import dump_document
from specfinder.hamiltonian import PairHamiltonian, random_hamiltonian, reconstruct_from_shares, spread_bound, to_dense
from specfinder.pauli import NON_IDENTITY, basis_state, expm_i, hermitian_eig, spectral_norm
from specfinder.pulses import decoupling_schedule, simulate_schedule, symbolic_average
from specfinder.qpe import (
    PEConfig,
    decode_energy,
    density_of_states,
    dos_oracle,
    gap_report,
    initial_density,
    run_qpe,
    tail_probability_check,
    total_variation,
)
from specfinder.verify import inversion_distance, loglog_slope

RESULTS = {}


def record(key, title, passed, detail, elapsed, limit):
    ok = bool(passed) and elapsed < limit
    line = f"[{key}] {'PASS' if ok else 'FAIL'} {title}: {detail}; {elapsed:.2f}s (limit {limit:g}s)"
    RESULTS[key] = line
    print(line)
    return ok


def test_criterion_1_oracle_sanity():
    t0 = time.perf_counter()
    H = PairHamiltonian.from_terms(2, [(0, "z", 1.0), (1, "z", 1.0)], [(0, 1, "x", "x", 1.0)])
    w, _ = hermitian_eig(to_dense(H))
    err = float(np.max(np.abs(w - [-math.sqrt(5), -1.0, 1.0, math.sqrt(5)])))
    ok = record("C1", "oracle sanity", err < 1e-9, f"max eigenvalue error {err:.2e} (tol 1e-9)", time.perf_counter() - t0, 1)
    assert ok


def test_criterion_2_decoupling_completeness():
    t0 = time.perf_counter()
    H = random_hamiltonian(3, 2)
    T = 0.5
    exact_zero, monotone, worst = True, True, []
    for size in range(4):
        for M in combinations(range(3), size):
            s = decoupling_schedule(3, M, T)
            avg = symbolic_average(s, H)
            for q in M:
                exact_zero &= bool(np.all(avg.r[q] == 0.0) and np.all(avg.J[q] == 0.0) and np.all(avg.J[:, q] == 0.0))
            ideal = expm_i(to_dense(avg), T)
            d = [spectral_norm(simulate_schedule(s, H, sl) - ideal) for sl in (8, 16, 32, 64)]
            # a single-segment schedule is exact; its distances sit at round-off
            monotone &= all(b < a or b < 1e-12 for a, b in zip(d, d[1:]))
            worst.append(d[-1])
    ok = record(
        "C2",
        "decoupling completeness",
        exact_zero and monotone,
        f"8 subsets, exact zeros={exact_zero}, monotone over slices 8..64={monotone}, max distance at 64 slices {max(worst):.2e}",
        time.perf_counter() - t0,
        30,
    )
    assert ok


def test_criterion_3_sum_identity():
    t0 = time.perf_counter()
    worst = 0.0
    for n in (3, 4):
        for seed in range(5):
            H = random_hamiltonian(n, seed)
            worst = max(worst, float(np.linalg.norm(to_dense(reconstruct_from_shares(H)) - to_dense(H))))
    ok = record("C3", "sum identity", worst < 1e-12, f"10 instances, max dense residual {worst:.2e} (tol 1e-12)", time.perf_counter() - t0, 5)
    assert ok


def _random_terms(count, seed):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        j, k = sorted(rng.choice(3, size=2, replace=False))
        a, b = rng.integers(0, 3, size=2)
        term = (int(j), int(k), NON_IDENTITY[a], NON_IDENTITY[b])
        if term not in out:
            out.append(term)
    return out


EPS = (0.08, 0.04, 0.02)


def test_criterion_4_commutator_identity_stated_prefactor():
    """Literal form: the summed commutators equal 2 H'' (x) sigma_z, and the step error against exp(-i 2 H'' (x) sigma_z eps^2) is O(eps^3)."""
    t0 = time.perf_counter()
    H = random_hamiltonian(3, 7)
    terms = _random_terms(5, 2024)
    residual = 0.0
    for term in terms:
        target = conditional_target(h_double(H, *term), 3)
        residual = max(residual, float(np.linalg.norm(literal_identity_lhs(H, *term) - STATED_PREFACTOR * target)))
    slopes = []
    for term in terms:
        target = conditional_target(h_double(H, *term), 3)
        errs = [spectral_norm(pair_conditional_step(H, *term, ConversionParams(e)) - expm_i(STATED_PREFACTOR * target, e**2)) for e in EPS]
        slopes.append(loglog_slope(EPS, errs))
    slope_ok = all(2.5 <= s <= 3.5 for s in slopes)
    ok = record(
        "C4",
        "commutator identity (prefactor 2) and eps^3 scaling",
        residual < 1e-9 and slope_ok,
        f"max identity residual {residual:.3f} (tol 1e-9), slopes {[round(s, 3) for s in slopes]} (need [2.5, 3.5])",
        time.perf_counter() - t0,
        60,
    )
    assert ok


def test_criterion_4r_commutator_identity_resolved_prefactor():
    """Same checks with the prefactor measured by the build-time self-test."""
    t0 = time.perf_counter()
    conv = resolve_conventions()
    H = random_hamiltonian(3, 7)
    terms = _random_terms(5, 2024)
    residual = 0.0
    slopes = []
    for term in terms:
        target = conditional_target(h_double(H, *term), 3)
        lhs = commutator_generator(H, *term, conv.u_first, conv.coupling_sign)
        residual = max(residual, float(np.linalg.norm(lhs - conv.prefactor * target)))
        errs = [spectral_norm(pair_conditional_step(H, *term, ConversionParams(e)) - expm_i(conv.prefactor * target, e**2)) for e in EPS]
        slopes.append(loglog_slope(EPS, errs))
    pulse_errs = [
        spectral_norm(pair_conditional_step(H, *terms[0], ConversionParams(e, mode=PULSE)) - expm_i(conv.prefactor * conditional_target(h_double(H, *terms[0]), 3), e**2))
        for e in EPS
    ]
    slopes.append(loglog_slope(EPS, pulse_errs))
    ok = record(
        "C4R",
        f"commutator identity (resolved prefactor {conv.prefactor:g}) and eps^3 scaling",
        residual < 1e-9 and all(2.5 <= s <= 3.5 for s in slopes),
        f"max identity residual {residual:.2e}, slopes ideal x5 + pulse x1 {[round(s, 3) for s in slopes]}",
        time.perf_counter() - t0,
        60,
    )
    assert ok


def test_criterion_5_inversion_convergence():
    t0 = time.perf_counter()
    H = random_hamiltonian(3, 7)
    term = (0, 1, NON_IDENTITY[0], NON_IDENTITY[2])
    ps = (4, 8, 16, 32)
    d = [inversion_distance(H, term, 0.2, p) for p in ps]
    ratios = [b / a for a, b in zip(d, d[1:])]
    ok = record(
        "C5",
        "inversion convergence",
        all(r <= 0.5 for r in ratios),
        f"distances {[f'{x:.2e}' for x in d]}, ratios {[round(r, 3) for r in ratios]} (need <= 0.5)",
        time.perf_counter() - t0,
        60,
    )
    assert ok


def test_criterion_6_qpe_correctness():
    t0 = time.perf_counter()
    H = random_hamiltonian(3, 7)
    w, v = hermitian_eig(to_dense(H))
    cfg = PEConfig.from_delta(7, spread_bound(H))
    decode_err = max(abs(decode_energy(run_qpe(H, v[:, i], cfg).mode(), cfg) - w[i]) for i in range(8))
    tails = {e: max(tail_probability_check(H, v[:, i], cfg, e)[0] for i in range(8)) for e in (2, 4, 8)}
    bound_e2 = tail_probability_check(H, v[:, 0], cfg, 2)[1]
    tails_ok = all(tails[e] <= 1 / (2 * e - 2) for e in tails) and bound_e2 == 0.5
    ok = record(
        "C6",
        "QPE correctness",
        decode_err <= cfg.resolution and tails_ok,
        f"max decode error {decode_err:.4f} <= resolution {cfg.resolution:.4f}; max tails {{{', '.join(f'{e}: {t:.4f}' for e, t in tails.items())}}}; bound(e=2)={bound_e2}",
        time.perf_counter() - t0,
        60,
    )
    assert ok


def test_criterion_7_pulse_vs_ideal():
    t0 = time.perf_counter()
    H = PairHamiltonian.from_terms(2, [], [(0, 1, "x", "z", 1.0)])
    decreasing = True
    parts = []
    for label, init in (("|00>", basis_state("00")), ("mixed", initial_density(H))):
        ideal = run_qpe(H, init, PEConfig.from_delta(3, spread_bound(H))).probabilities
        tv = []
        for eps in (0.1, 0.05):
            cfg = PEConfig.from_delta(3, spread_bound(H), mode=PULSE, params=ConversionParams(eps, mode=PULSE))
            tv.append(total_variation(run_qpe(H, init, cfg).probabilities, ideal))
        decreasing &= tv[1] < tv[0]
        parts.append(f"{label}: TV {tv[0]:.2e} -> {tv[1]:.2e}")
    ok = record("C7", "pulse-level vs ideal QPE", decreasing, "; ".join(parts) + " (eps 0.1 -> 0.05)", time.perf_counter() - t0, 300)
    assert ok


def gapped_instance():
    base = random_hamiltonian(4, 11, 0.2)
    r = base.r.copy()
    r[0, 2] = 4.0
    return PairHamiltonian(4, r, base.J)


def test_criterion_8_dos():
    t0 = time.perf_counter()
    H = random_hamiltonian(4, 3)
    cfg = PEConfig.from_delta(6, spread_bound(H), shots=4096, seed=0)
    exact = density_of_states(H, cfg, exact=True)
    tv_exact = total_variation(exact.probabilities, dos_oracle(H, cfg))
    sampled = density_of_states(H, cfg, exact=False)
    tv_sampled = total_variation(sampled.probabilities, exact.probabilities)
    G = gapped_instance()
    w, _ = hermitian_eig(to_dense(G))
    i = int(np.argmax(np.diff(w)))
    mid = 0.5 * (w[i] + w[i + 1])
    gaps = gap_report(density_of_states(G, PEConfig.from_delta(8, spread_bound(G))), 1e-3)
    bracket = any(lo <= mid <= hi for lo, hi in gaps)
    ok = record(
        "C8",
        "density of states",
        tv_exact < 1e-9 and tv_sampled < 4 / math.sqrt(4096) and bracket,
        f"exact TV {tv_exact:.1e} (tol 1e-9), sampled TV {tv_sampled:.4f} (tol {4 / 64:.4f}), gap midpoint {mid:.4f} in {[(round(a, 3), round(b, 3)) for a, b in gaps]}",
        time.perf_counter() - t0,
        60,
    )
    assert ok


def test_criterion_9_cli_determinism(tmp_path):
    t0 = time.perf_counter()
    doc = tmp_path / "h.json"
    doc.write_text(dump_document(random_hamiltonian(3, 5)))
    gap = tmp_path / "g.json"
    gap.write_text(dump_document(gapped_instance()))
    runs = {
        "random": lambda out: ["random", "--n", "3", "--seed", "5", "--out", str(out / "h.json")],
        "spectrum": lambda out: ["spectrum", str(doc), "--m", "6", "--seed", "4", "--out-dir", str(out)],
        "spectrum-pulse": lambda out: ["spectrum", str(doc), "--m", "2", "--mode", "pulse", "--epsilon", "0.1", "--p", "2", "--slices", "1", "--init", "basis:011", "--out-dir", str(out)],
        "dos": lambda out: ["dos", str(gap), "--m", "7", "--seed", "4", "--out-dir", str(out)],
        "dos-exact": lambda out: ["dos", str(gap), "--m", "7", "--exact", "--out-dir", str(out)],
        "verify": lambda out: ["verify", "--random", "3", "7", "--out", str(out / "report.json")],
        "compile-schedule": lambda out: ["compile-schedule", str(doc), "--invert", "0,2,y,z", "--p", "4", "--out-dir", str(out)],
    }
    same = {}
    for name, build in runs.items():
        outputs = []
        for rep in range(2):
            out = tmp_path / f"{name}-{rep}"
            out.mkdir()
            code = cli_main(build(out))
            assert code == 0, name
            outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
        same[name] = outputs[0] == outputs[1] and len(outputs[0]) > 0
    ok = record("C9", "CLI determinism", all(same.values()), ", ".join(f"{k}={'same' if v else 'DIFFERENT'}" for k, v in same.items()), time.perf_counter() - t0, 300)
    assert ok


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
