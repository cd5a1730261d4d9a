"""Acceptance criteria, one test each, at the stated tolerances.

Every test prints a PASS/FAIL line (collected again in the terminal summary)
before asserting, so a failing criterion still reports its measured numbers.
"""
import math
import time
from pathlib import Path

import numpy as np

from fbmcurrent import cli, frac_ops
from fbmcurrent.chaos import kernel_pairing, multi_indices, taylor_reconstruct, truncated_kernel_pairing
from fbmcurrent.current import CurrentSpec, Rule, divergence_probe, gamma_identity_check, membership, s_current_truncated
from fbmcurrent.frac_ops import duality_residual, eta
from fbmcurrent.functions import HermiteSeries, Indicator, sample_on_grid
from fbmcurrent.gaussian import fbm_covariance, sample_fbm_paths
from fbmcurrent.numerics import cauchy_taylor_coefficients
from fbmcurrent.stransform import (
    DonskerSpec,
    TestFunction,
    donsker_functional,
    donsker_s,
    growth_bound_check,
    mc_donsker_s,
)

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_01_norm_identity(acceptance):
    frac_ops._eta_inner.cache_clear()
    frac_ops._k_constant.cache_clear()
    start = time.perf_counter()
    worst = 0.0
    for h in (0.1, 0.3, 0.5, 0.7, 0.9):
        for t in (0.5, 1.0, 2.0):
            worst = max(worst, abs(eta(h, t).norm2() / t ** (2 * h) - 1.0))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-5 and elapsed <= 30
    acceptance(1, "norm identity |eta_t|^2 = t^2H", ok, "max rel err %.2e over 15 cases, %.2f s" % (worst, elapsed))
    assert ok


def _duality_corpus():
    g = sample_on_grid(HermiteSeries((0.4, 0.2), 0.5), -3.0, 4.0, 0.125)
    return [
        (HermiteSeries((1.0,)), HermiteSeries((0.0, 1.0))),
        (HermiteSeries((0.5, -0.3, 0.2), 0.4, 0.8), Indicator(0.0, 1.0)),
        (Indicator(-1.0, 0.5), Indicator(0.0, 2.0)),
        (Indicator(0.3, 0.9, 2.0), HermiteSeries((0.1, 0.0, 0.0, 0.3), -0.2, 1.3)),
        (HermiteSeries((0.0, 0.0, 1.0), 1.0, 0.5), HermiteSeries((1.0, 0.5), -0.5, 1.5)),
        (Indicator(-0.5, 0.5), HermiteSeries((0.0, 0.0, 0.0, 1.0))),
        (HermiteSeries((0.2, 0.7), 2.0, 0.7), Indicator(-2.0, -1.0)),
        (g, Indicator(0.0, 1.5)),
        (Indicator(1.0, 3.0, -0.5), g),
    ]


def test_02_duality(acceptance):
    start = time.perf_counter()
    corpus = _duality_corpus()
    worst = {}
    for h in (0.1, 0.3, 0.5, 0.7, 0.9):
        worst[h] = max(duality_residual(h, f1, f2) for f1, f2 in corpus)
    elapsed = time.perf_counter() - start
    ok = max(worst.values()) <= 1e-5 and elapsed <= 60
    detail = ", ".join("H=%.1f %.1e" % kv for kv in worst.items())
    acceptance(2, "duality of M_- and M_+", ok, "max residual per H: %s; %.1f s" % (detail, elapsed))
    assert ok


MC_CASES = [
    ((0.5,), 0.3, 1.0, TestFunction.hermite([[0.3, 0.1]], 0.2), 1.0),
    ((0.0,), 0.7, 1.0, TestFunction.hermite([[0.3, 0.1]], 0.2), 1.0),
    ((-0.4,), 0.5, 2.0, TestFunction.hermite([[0.2, 0.0, 0.1]], -0.3, 1.2), 1.5),
    ((0.3,), 0.2, 0.5, TestFunction.hermite([[0.4]]), 0.5),
    ((0.3, -0.2), 0.6, 1.0, TestFunction.hermite([[0.3, 0.1], [0.1, -0.2]], 0.2), 1.0),
    ((0.0, 0.4), 0.4, 1.5, TestFunction.hermite([[0.2, 0.05], [0.15, 0.0, 0.1]], 0.5, 0.8), 0.8),
]


def test_03_monte_carlo_donsker(acceptance):
    start = time.perf_counter()
    zs = []
    for k, (x, h, t, phi, z) in enumerate(MC_CASES):
        spec = DonskerSpec(x, h, t)
        est, se = mc_donsker_s(spec, z, phi, 1_000_000, seed=20240611 + k)
        exact = complex(donsker_s(spec, z, phi))
        zs.append(abs(est - exact) / se)
    elapsed = time.perf_counter() - start
    ok = max(zs) <= 3.0 and elapsed <= 300
    acceptance(3, "Donsker S-transform vs Monte Carlo", ok,
               "|MC - closed form| / SE = %s (d=2 in the last two); %.1f s"
               % (" ".join("%.2f" % v for v in zs), elapsed))
    assert ok


def test_04_growth_bound(acceptance):
    t_grid = np.linspace(0.05, 2.0, 20)
    # 10 real z and 10 on a ray off the real axis, where the exponent can grow
    z_grid = np.concatenate([np.linspace(-3.0, 3.0, 10), np.linspace(-3.0, 3.0, 10) * np.exp(0.4j)])
    cases = [((0.4,), 0.3, TestFunction.hermite([[0.5, 0.2]])),
             ((0.0,), 0.8, TestFunction.hermite([[1.0]], 0.5)),
             ((0.2, -0.7), 0.5, TestFunction.hermite([[0.4], [0.3, 0.3]]))]
    worst, violations, constants_ok = 0.0, 0, True
    for x, h, phi in cases:
        for t in t_grid:
            spec = DonskerSpec(x, h, t)
            u = donsker_functional(spec)
            constants_ok &= math.isclose(u.K1, (2 * math.pi * t ** (2 * h)) ** (-len(x) / 2), rel_tol=1e-15)
            constants_ok &= u.K2 == 1.0 and u.norm_id == "L2"
            rep = growth_bound_check(u, phi, z_grid)
            violations += sum(r > 1.0 for r in rep.ratios)
            worst = max(worst, rep.max_ratio)
    ok = violations == 0 and constants_ok
    acceptance(4, "growth bound K1=(2 pi t^2H)^(-d/2), K2=1", ok,
               "%d violations on 3 x 20x20 (z,t) grids, max |S|/bound %.3f" % (violations, worst))
    assert ok


GAMMA_CASES = [((1.0,), 0.5, 1, 1.0), ((1.0, 0.0), 0.3, 2, 2.0), ((0.5, 0.5, 0.5), 0.2, 3, 1.0),
               ((2.0,), 0.45, 1, 3.0), ((0.3, 0.1), 0.7, 2, 0.5), ((1.5, 0.0, 0.0, 0.0), 0.1, 4, 5.0)]


def test_05_gamma_identity(acceptance):
    res = [gamma_identity_check(*c) for c in GAMMA_CASES]
    worst = max(r.residual for r in res)
    ok = worst < 1e-8 and not any(r.both_negligible for r in res)
    acceptance(5, "incomplete-gamma identity, shape (Hd-1)/(2H)", ok,
               "residuals %s (first: H=1/2, d=1 anchor)" % " ".join("%.1e" % r.residual for r in res))
    assert ok


TRUTH_TABLE = [
    # (x, H, d, N) -> (member, rule, slack)
    (((1, 0, 0), 0.4, 3, None), (True, Rule.NONZERO_X, 0.1)),
    (((1,), 0.5, 1, None), (True, Rule.NONZERO_X, 0.0)),
    (((0.3, 0.4), 0.7, 2, None), (False, Rule.OUTSIDE_SCOPE, -0.2)),
    (((0,), 0.9, 1, None), (True, Rule.COR_D1, 0.1)),
    (((0,), 0.2, 1, None), (True, Rule.COR_D1, 0.8)),
    (((0, 0), 0.4, 2, None), (True, Rule.COR_SMALL_HD, 0.2)),
    (((0, 0), 0.5, 2, None), (False, Rule.COR_SMALL_HD, 0.0)),
    (((0, 0, 0), 0.5, 3, None), (False, Rule.COR_SMALL_HD, -0.5)),
    (((0, 0), 0.6, 2, 1), (True, Rule.THM_TRUNC, 0.6)),
    (((0, 0), 0.75, 2, 1), (False, Rule.THM_TRUNC, 0.0)),
    (((0, 0, 0), 0.9, 3, 1), (False, Rule.THM_TRUNC, -1.5)),
    (((0, 0, 0), 0.9, 3, 10), (True, Rule.THM_TRUNC, 0.3)),
]


def test_06_membership_truth_table(acceptance):
    start = time.perf_counter()
    wrong = []
    for (x, h, d, N), (member, rule, slack) in TRUTH_TABLE:
        v = membership(x, h, d, N)
        sign_ok = np.sign(v.inequality_slack) == np.sign(slack) if slack != 0 else v.inequality_slack == 0.0
        if v.member is not member or v.rule is not rule or not sign_ok \
                or not math.isclose(v.inequality_slack, slack, abs_tol=1e-12):
            wrong.append((x, h, d, N, v))
    elapsed = time.perf_counter() - start
    ok = not wrong and elapsed < 0.5
    acceptance(6, "membership truth table", ok, "%d/12 verdicts exact incl. 3 zero-slack boundaries, %.1f ms%s"
               % (12 - len(wrong), 1e3 * elapsed, "; wrong: %s" % wrong if wrong else ""))
    assert ok


def test_07_divergence_probes(acceptance):
    cuts = 2.0 ** -np.arange(1, 30)
    phi = TestFunction.hermite([[0.3, 0.1], [0.2, 0.0, 0.1]], 0.1, 0.9)
    log_env = divergence_probe(CurrentSpec((0.0, 0.0), 0.5, 1.0), cuts)
    log_int = divergence_probe(CurrentSpec((0.0, 0.0), 0.5, 1.0), cuts, mode="integrand", phi=phi)
    pow_env = divergence_probe(CurrentSpec((0.0, 0.0), 0.6, 1.0), cuts)
    pow_int = divergence_probe(CurrentSpec((0.0, 0.0), 0.6, 1.0), cuts, mode="integrand", phi=phi)
    plateau = divergence_probe(CurrentSpec((0.0, 0.0), 0.6, 1.0, truncation=1), cuts)
    checks = [abs(log_env.log_slope - 1.0), abs(log_int.log_slope - 1.0),
              abs(pow_env.fitted_exponent / -0.2 - 1.0), abs(pow_int.fitted_exponent / -0.2 - 1.0)]
    ok = max(checks) <= 0.02 and plateau.converges and math.isclose(plateau.fitted_exponent, 0.6, rel_tol=0.02)
    acceptance(7, "divergence probes at the membership boundary", ok,
               "log slope %.4f / %.4f (envelope/integrand), eps exponent %.4f / %.4f vs -0.2, "
               "truncated plateau exponent %.4f vs 0.6"
               % (log_env.log_slope, log_int.log_slope, pow_env.fitted_exponent, pow_int.fitted_exponent,
                  plateau.fitted_exponent))
    assert ok


def _is_truncated_support(m, i, N):
    r = list(m)
    if r[i - 1] == 0:
        return False
    r[i - 1] -= 1
    return all(v % 2 == 0 for v in r) and sum(r) // 2 >= N


def test_08_chaos_reconstruction(acceptance):
    phi1 = TestFunction.hermite([[0.2]])
    rep = taylor_reconstruct(CurrentSpec((0.8,), 0.4, 1.0), phi1, 12)
    # truncated case: zero pattern and Cauchy-coefficient oracle through order 7
    spec = CurrentSpec((0.0, 0.0), 0.6, 1.0, i=1, truncation=1)
    phi2 = TestFunction.hermite([[0.3, 0.1], [0.2, 0.0, 0.1]], 0.1, 0.9)
    coeffs = cauchy_taylor_coefficients(lambda z: s_current_truncated(spec, z, phi2), 1.0, 8).as_array()
    pattern_ok, worst = True, 0.0
    for k in range(8):
        total = 0.0
        for m in multi_indices(2, k):
            p = truncated_kernel_pairing(spec, m, phi2)
            pattern_ok &= p.exact_zero != _is_truncated_support(m, 1, 1)
            total += p.value
        worst = max(worst, abs(total - coeffs[k]))
    # the untruncated order-0 pairing and Xi_0
    first = kernel_pairing(CurrentSpec((0.8,), 0.4, 1.0), (0,), phi1)
    ok = rep.final_error < 1e-8 and pattern_ok and worst <= 1e-6 and first.value == 0.0
    acceptance(8, "chaos reconstruction", ok,
               "d=1 error at order 12 %.1e; truncated zero pattern %s, max |sum pairings - coefficient| %.1e"
               % (rep.final_error, "exact" if pattern_ok else "WRONG", worst))
    assert ok


def test_09_fbm_sampler(acceptance):
    start = time.perf_counter()
    worst = {}
    for method in ("dense", "circulant"):
        for h in (0.3, 0.7):
            batch = sample_fbm_paths(h, 1.0, 9, 100_000, seed=7, method=method)
            x = batch.paths[:, 1:, 0]  # the 8 grid points after t = 0
            t = batch.times[1:]
            emp = x.T @ x / x.shape[0]
            exact = fbm_covariance(h, t[:, None], t[None, :])
            se = np.sqrt((exact ** 2 + np.outer(np.diag(exact), np.diag(exact))) / x.shape[0])
            worst[(method, h)] = float(np.max(np.abs(emp - exact) / se))
    elapsed = time.perf_counter() - start
    ok = max(worst.values()) <= 3.0 and elapsed <= 120
    acceptance(9, "fBm sample covariance", ok, "max |emp - exact| / SE: %s; %.1f s"
               % (", ".join("%s H=%.1f %.2f" % (m, h, v) for (m, h), v in worst.items()), elapsed))
    assert ok


def _bodies(directory):
    return {p.name: p.read_bytes() for p in sorted(Path(directory).glob("*.csv"))}


def test_10_cli_determinism(acceptance, tmp_path):
    differing = []
    n = 0
    for cfg in sorted(CONFIGS.glob("*.ini")):
        sub = cfg.stem.split("_")[0]
        sub = "chaos-reconstruct" if sub == "chaos-truncated" else sub
        a, b = tmp_path / cfg.stem / "a", tmp_path / cfg.stem / "b"
        assert cli.run([sub, "--config", str(cfg), "--out", str(a)]) == 0
        assert cli.run([sub, "--config", str(cfg), "--out", str(b)]) == 0
        ba, bb = _bodies(a), _bodies(b)
        n += len(ba)
        if ba != bb or not ba:
            differing.append(cfg.name)
    ok = not differing
    acceptance(10, "CLI determinism", ok, "%d CSV files from %d configs byte-identical on re-run%s"
               % (n, len(list(CONFIGS.glob("*.ini"))), "; differing: %s" % differing if differing else ""))
    assert ok
