"""End-to-end acceptance criteria.

Each test records one PASS/FAIL line; the lines are printed in the pytest
terminal summary under "acceptance criteria".
"""
import math

import numpy as np
import pytest

from ffrplan import analytics as an
from ffrplan import cli
from ffrplan import montecarlo as mc
from ffrplan import optimizer as opt
from ffrplan.fading import CorrelationMode
from ffrplan.geometry import UserPosition

R = an.DEFAULT_RADIUS
IND, COR = "independent", "correlated"

TABLE = {
    # alpha: (T', T'', centre share %, gain independent %, gain correlated %)
    2.0: (-2.3, -2.5, 50, 31.6, 16.65),
    2.5: (-0.5, -0.6, 53, 26.2, 15.2),
    3.0: (1.0, 1.0, 56, 22.2, 13.9),
    3.5: (2.3, 2.3, 59, 19.4, 13.0),
    4.0: (3.5, 3.5, 62, 17.5, 12.4),
}


def record(lines, key, ok, title, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {title} | {detail}"
    lines[key] = line
    print(line)
    return ok


def params(alpha=3.0, t_db=0.0, s_db=None, **kw):
    return an.SystemParams.from_db(alpha=alpha, target_db=t_db, threshold_db=s_db, **kw)


# ----------------------------------------------------------------------- 1

def test_criterion_1_threshold_table(table_rows, acceptance_lines):
    bad, parts = [], []
    for a, (tp, tpp, frac, _, _) in TABLE.items():
        row = table_rows[a]
        checks = {
            "T'": (row["t_prime_db"], tp, 0.3),
            "T''": (row["t_doubleprime_db"], tpp, 0.3),
            "centre%": (100 * row["centre_fraction"], frac, 2.0),
        }
        for name, (got, want, tol) in checks.items():
            if abs(got - want) > tol:
                bad.append(f"a={a} {name} {got:.2f} vs {want}")
        parts.append(f"a={a}: T'={row['t_prime_db']:.2f} T''={row['t_doubleprime_db']:.2f} "
                     f"centre={100 * row['centre_fraction']:.1f}%")
    ok = record(acceptance_lines, 1, not bad, "thresholds and centre-user share",
                "; ".join(parts) + (" || out of tolerance: " + ", ".join(bad) if bad else ""))
    assert ok, bad


# ----------------------------------------------------------------------- 2

def test_criterion_2_rate_gains(table_rows, acceptance_lines):
    bad, parts = [], []
    for a, (_, _, _, g_ind, g_cor) in TABLE.items():
        row = table_rows[a]
        gi, gc = row["gain_independent_pct"], row["gain_correlated_pct"]
        if abs(gi - g_ind) > 2.0:
            bad.append(f"a={a} independent {gi:.2f} vs {g_ind}")
        if abs(gc - g_cor) > 2.0:
            bad.append(f"a={a} correlated {gc:.2f} vs {g_cor}")
        parts.append(f"a={a}: {gi:.2f}%/{gc:.2f}%")
    ok = record(acceptance_lines, 2, not bad, "FFR rate gain over reuse-1 (independent/correlated)",
                "; ".join(parts) + (" || " + ", ".join(bad) if bad else ""))
    assert ok, bad


# ----------------------------------------------------------------------- 3, 4

GRID_ALPHAS = (2.5, 3.0, 4.0)
GRID_TARGETS = (-3.0, 0.0, 3.0, 6.0)
GRID_RADII = (0.2, 0.5, 0.8)
GRID_ANGLES = (0.0, math.pi / 7)


def _grid():
    for a in GRID_ALPHAS:
        for t in GRID_TARGETS:
            for r in GRID_RADII:
                for th in GRID_ANGLES:
                    yield a, t, UserPosition(r * R, th)


def test_criterion_3_target_threshold_maximises_coverage(acceptance_lines):
    bad, n, margin = [], 0, math.inf
    for a, t, u in _grid():
        at_t = params(a, t, t)
        best = an.coverage_ffr(at_t, u, IND)
        fr3 = an.coverage_fr3(at_t, u)
        n += 1
        if not best > fr3:
            bad.append((a, t, u.r, "fr3"))
        margin = min(margin, best - fr3)
        for off in (-6, -3, -1, 1, 3, 6):
            other = an.coverage_ffr(params(a, t, t + off), u, IND)
            n += 1
            margin = min(margin, best - other)
            if not best > other:
                bad.append((a, t, u.r, off))
    ok = record(acceptance_lines, 3, not bad, "S_th=T maximises independent FFR coverage",
                f"{n} strict comparisons, smallest margin {margin:.3e}, violations {len(bad)}")
    assert ok, bad[:5]


def test_criterion_4_correlated_identity(acceptance_lines):
    worst = 0.0
    for a, t, u in _grid():
        for off in (0.0, 1.0, 3.0, 6.0):
            p = params(a, t, t + off)
            worst = max(worst, abs(an.coverage_ffr(p, u, COR) - an.coverage_fr3(p, u)))
    ok = record(acceptance_lines, 4, worst <= 1e-9, "correlated FFR coverage equals FR3 for S_th >= T",
                f"max deviation {worst:.2e} (tolerance 1e-9)")
    assert ok


# ----------------------------------------------------------------------- 5

# (alpha, T dB, S_th dB, noise/P, mode, pinned (r/R, theta) or None)
ORACLE_POINTS = [
    (3.0, 0.0, 0.0, 0.0, IND, None),
    (3.0, 0.0, 1.0, 0.0, IND, None),
    (2.5, -3.0, -5.0, 0.0, IND, None),
    (4.0, 3.0, 6.0, 0.0, IND, None),
    (2.0, -2.0, -2.0, 0.0, IND, None),
    (3.0, 0.0, 0.0, 0.1, IND, None),
    (3.0, 0.0, 2.0, 0.0, IND, (0.5, 0.3)),
    (3.0, 0.0, 0.0, 0.0, COR, None),
    (3.0, 0.0, 1.0, 0.0, COR, None),
    (2.5, 0.0, -3.0, 0.0, COR, None),
    (4.0, 3.0, 3.0, 0.0, COR, None),
    (3.0, -3.0, -6.0, 0.0, COR, None),
    (3.0, 0.0, -2.0, 0.1, COR, None),
    (3.0, 0.0, -1.0, 0.0, COR, (0.8, 0.0)),
]


def _analytic_refs(p, mode, pinned):
    T, S = p.target_sinr, p.threshold
    if pinned is None:
        ps = an.spatial_points(p)
        refs = {
            "cov_fr1": an.average_coverage(p, "fr1"),
            "cov_fr3": an.average_coverage(p, "fr3"),
            "cov_ffr": an.average_coverage(p, "ffr", mode),
            "edge": 1.0 - ps.average(an.cp1(ps, S)),
        }
        if p.noise_over_power == 0:
            refs.update({
                "rate_fr1": an.rate_fr1(p),
                "rate_fr3": an.rate_fr3(p),
                "rate_ffr": an.rate_ffr(p, mode),
            })
        if mode == COR:
            refs["fr3_below_shat"] = refs["edge"]
        return refs
    u = UserPosition(pinned[0] * R, pinned[1])
    refs = {
        "cov_fr1": an.coverage_fr1(p, u),
        "cov_fr3": an.coverage_fr3(p, u),
        "cov_ffr": an.coverage_ffr(p, u, mode),
        "edge": 1.0 - an.coverage_fr1(p, u, target=S),
    }
    if mode == COR:
        refs["fr3_below_shat"] = refs["edge"]
    return refs


def test_criterion_5_oracle_matrix(acceptance_lines):
    failures, n_checks, worst = [], 0, 0.0
    for alpha, t, s, noise, mode, pinned in ORACLE_POINTS:
        p = params(alpha, t, s, noise_over_power=noise)
        rule = mc.EDGE_RULE_MATCHED if mode == COR else mc.EDGE_RULE_SINR
        kw = {} if pinned is None else {"radius": pinned[0] * R, "theta": pinned[1]}
        est = mc.simulate(mc.SimConfig(params=p, mode=mode, n_samples=10**6, edge_rule=rule, **kw))
        for name, ref in _analytic_refs(p, mode, pinned).items():
            n_checks += 1
            z = est[name].z_score(ref)
            worst = max(worst, abs(z))
            if not est[name].agrees(ref):
                failures.append(f"{mode} a={alpha} T={t} S={s} nz={noise} {pinned} {name} z={z:.2f}")
    modes = {m for *_, m, _ in ORACLE_POINTS}
    ok = record(acceptance_lines, 5, not failures and len(ORACLE_POINTS) >= 12 and modes == {IND, COR},
                "analytic vs Monte Carlo (1e6 samples, 3 SE)",
                f"{len(ORACLE_POINTS)} points, {n_checks} checks, max |z| = {worst:.2f}"
                + (" || " + "; ".join(failures) if failures else ""))
    assert ok, failures


# ----------------------------------------------------------------------- 6

def test_criterion_6_tdl_bounding(acceptance_lines):
    r_grid = R * np.arange(1, 11) / 10
    base = params(3.0, 0.0)
    curves = {}
    for name in ("pedA", "vehA"):
        cfg = mc.SimConfig(params=base, mode=CorrelationMode.tapped_delay_line(name), n_samples=5 * 10**5)
        curves[name] = mc.simulate_tdl_ffr_coverage(cfg, r_grid)
    bad = []
    for name, rows in curves.items():
        for row in rows:
            e = row["estimate"]
            tol = e.tolerance(3.0)
            if e.value > row["independent"] + tol or e.value < row["correlated"] - tol:
                bad.append(f"{name} r={row['r']:.0f}")
    for ped, veh in zip(curves["pedA"], curves["vehA"]):
        pe, ve = ped["estimate"], veh["estimate"]
        if ve.value < pe.value - (3.0 * math.hypot(pe.std_error, ve.std_error) + pe.resolution):
            bad.append(f"vehA<pedA r={ped['r']:.0f}")
    edge = {k: v[-1]["estimate"].value for k, v in curves.items()}
    ok = record(acceptance_lines, 6, not bad, "TDL FFR coverage between analytic extremes, vehA >= pedA",
                f"10 radii x 2 profiles at 5e5 samples; cell edge: correlated {curves['pedA'][-1]['correlated']:.4f} "
                f"pedA {edge['pedA']:.4f} vehA {edge['vehA']:.4f} independent {curves['pedA'][-1]['independent']:.4f}"
                + (" || " + ", ".join(bad) if bad else ""))
    assert ok, bad


# ----------------------------------------------------------------------- 7

def test_criterion_7_rate_maximisers(acceptance_lines):
    grid = np.arange(-5.0, 6.0001, 0.25)
    expect = {0.0: 1.0, 1.0: 1.0, 2.0: 2.0}
    found, bad = {}, []
    for t, want in expect.items():
        p = params(3.0, t)
        vals = [an.rate_ffr(p.with_threshold_db(s), IND) for s in grid]
        found[t] = float(grid[int(np.argmax(vals))])
        tol = 0.25 if t == 0.0 else 1e-9
        if abs(found[t] - want) > tol:
            bad.append(t)
    ok = record(acceptance_lines, 7, not bad, "independent rate sweep maximisers at alpha=3",
                ", ".join(f"T={t:g} dB -> S_th={found[t]:g} dB" for t in expect))
    assert ok, found


# ----------------------------------------------------------------------- 8

def test_criterion_8_k_approximation(acceptance_lines):
    gaps = []
    for t in (-10.0, -3.0, 0.0, 1.0, 2.0):
        p = params(3.0, t)
        for frac in (0.3, 0.6, 0.9):
            u = UserPosition(frac * R, 0.0)
            k_exact = an.k_factor(p, u, exact=True)
            k_apx = an.k_factor(p, u, exact=False)
            gaps.append(abs(k_exact - k_apx) / k_apx)
    base = params(3.0, 0.0)
    approx = opt.solve_tprime(base)
    at_tprime = base.with_target_db(approx.s_opt_db)
    exact = opt.solve_tprime(at_tprime, exact_k=True)
    shift = abs(exact.s_opt_db - approx.s_opt_db)
    ok = record(acceptance_lines, 8, shift < 0.3, "K(T,r) ~ K(r) approximation",
                f"max relative gap {max(gaps):.4f} over T<=2 dB, r in {{0.3,0.6,0.9}}R; "
                f"T' approx {approx.s_opt_db:.3f} dB, exact-K {exact.s_opt_db:.3f} dB, shift {shift:.3f} dB")
    assert ok


# ----------------------------------------------------------------------- 9

SIM_COMMANDS = [
    ["simulate", "--check", "all", "--samples", "1e5", "--seed", "42"],
    ["simulate", "--channel", "vehA", "--r-steps", "4", "--samples", "5e4", "--seed", "7"],
    ["simulate", "--mode", "correlated", "--samples", "1e5"],
]


def test_criterion_9_determinism(tmp_path, acceptance_lines):
    bad = []
    for i, argv in enumerate(SIM_COMMANDS):
        blobs = set()
        for threads in ("1", "2", "4", "1"):
            out = tmp_path / f"c{i}_t{threads}.csv"
            code = cli.main(argv + ["--threads", threads, "-o", str(out)])
            summary = out.parent / (out.name + ".summary.json")
            blobs.add((code, out.read_bytes(), summary.read_bytes()))
        if len(blobs) != 1:
            bad.append(" ".join(argv))
    ok = record(acceptance_lines, 9, not bad, "simulate output byte-identical across runs and --threads",
                f"{len(SIM_COMMANDS)} commands x threads 1/2/4/1" + (" || " + "; ".join(bad) if bad else ""))
    assert ok, bad
