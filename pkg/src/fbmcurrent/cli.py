"""Config-driven runner: ``fbmcurrent <subcommand> --config FILE [--out DIR] [--seed N]``.

A config is an INI file with one section named after the subcommand and an
optional ``[run]`` section (``seed``, ``out``). Values follow three rules:

* commas separate sweep values (``H = 0.3, 0.5, 0.7``); sweeps are expanded
  as a cartesian product in the order the keys are declared below;
* whitespace separates vector components (``x = 0.3 -0.2``); a single
  value v stands for (v, 0, ..., 0), so ``x = 0`` is the origin in any
  dimension;
* test functions are written ``phi = 0.2*h0 0.1*h1 | 0.05*h2``: terms
  ``c*hk`` add c times the k-th Hermite function, ``|`` separates
  components, and ``center``/``scale`` set the common frame.

Exit status: 0 success, 2 invalid input, 3 convergence failure (the CSV is
still written, failing rows carry the partial value and a status flag).
"""
from __future__ import annotations

import argparse
import configparser
import itertools
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import chaos, current, gaussian, stransform
from .errors import ConvergenceError, PreconditionError
from .frac_ops import HurstParam
from .reports import write_csv, write_manifest

EXIT_OK, EXIT_INVALID, EXIT_CONVERGENCE = 0, 2, 3


class ConfigError(ValueError):
    pass


# --- value parsing ------------------------------------------------------------------

def _split_sweep(raw: str):
    parts = [p.strip() for p in raw.split(",")]
    if any(not p for p in parts):
        raise ConfigError("empty entry in list %r" % raw)
    return parts


def _float(s: str) -> float:
    try:
        v = float(s)
    except ValueError:
        raise ConfigError("not a number: %r" % s) from None
    if not math.isfinite(v):
        raise ConfigError("not a finite number: %r" % s)
    return v


def _int(s: str) -> int:
    try:
        return int(s)
    except ValueError:
        raise ConfigError("not an integer: %r" % s) from None


def _opt_int(s: str):
    return None if s.lower() in ("none", "-") else _int(s)


def _complex(s: str) -> complex:
    try:
        return complex(s.replace(" ", ""))
    except ValueError:
        raise ConfigError("not a complex number: %r" % s) from None


def _vector(s: str) -> tuple:
    return tuple(_float(v) for v in s.split())


def _bool(s: str) -> bool:
    v = s.lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError("not a boolean: %r" % s)


def _str(s: str) -> str:
    return s


def _phi_text(s: str):
    """'0.2*h0 0.1*h1 | 0.05*h2' -> [[0.2, 0.1], [0, 0, 0.05]]."""
    comps = []
    for comp in s.split("|"):
        coeffs: dict[int, float] = {}
        terms = comp.split()
        if not terms:
            raise ConfigError("empty test-function component in %r" % s)
        for term in terms:
            if term in ("0", "0.0"):
                coeffs.setdefault(0, 0.0)
                continue
            try:
                c, h = term.split("*")
                if not h.startswith("h"):
                    raise ValueError
                k = int(h[1:])
            except ValueError:
                raise ConfigError("bad test-function term %r (expected c*hk)" % term) from None
            if k < 0:
                raise ConfigError("Hermite index must be >= 0 in %r" % term)
            coeffs[k] = coeffs.get(k, 0.0) + _float(c)
        vec = [0.0] * (max(coeffs) + 1)
        for k, c in coeffs.items():
            vec[k] = c
        comps.append(tuple(vec))
    return tuple(comps)


# key -> (parser, default, sweepable)
_COMMON_PHI = {
    "phi": (_phi_text, "0.2*h0", False),
    "center": (_float, "0", False),
    "scale": (_float, "1", False),
}

SCHEMA = {
    "membership": {
        "H": (_float, None, True), "d": (_int, "1", True), "x": (_vector, "0", True), "N": (_opt_int, "none", True),
    },
    "stransform": {
        "H": (_float, None, True), "t": (_float, "1", True), "x": (_vector, "0", True),
        "N": (_opt_int, "none", True), "z": (_complex, "1", True), **_COMMON_PHI,
    },
    "current": {
        "H": (_float, None, True), "T": (_float, "1", True), "x": (_vector, "0", True), "i": (_int, "1", True),
        "N": (_opt_int, "none", True), "z": (_complex, "1", True), **_COMMON_PHI,
    },
    "chaos-reconstruct": {
        "H": (_float, None, True), "T": (_float, "1", True), "x": (_vector, "0", True), "i": (_int, "1", True),
        "N": (_opt_int, "none", True), "max_order": (_int, "8", False), **_COMMON_PHI,
    },
    "mc-verify": {
        "H": (_float, None, True), "t": (_float, "1", True), "x": (_vector, "0", True),
        "z": (_float, "1", True), "n_samples": (_int, "100000", False), **_COMMON_PHI,
    },
    "gamma-check": {
        "H": (_float, None, True), "d": (_int, "1", True), "x": (_vector, "1", True), "T": (_float, "1", True),
    },
    "fbm-sample": {
        "H": (_float, None, True), "T": (_float, "1", False), "n_steps": (_int, "9", False),
        "n_paths": (_int, "1000", False), "d": (_int, "1", False), "method": (_str, "auto", False),
        "write_paths": (_bool, "true", False),
    },
    "divergence-probe": {
        "H": (_float, None, True), "d": (_int, "2", True), "N": (_opt_int, "none", True),
        "T": (_float, "1", False), "eps0": (_float, "0.1", False), "ratio": (_float, "0.5", False),
        "levels": (_int, "12", False), "mode": (_str, "envelope", False), "z": (_float, "1", False),
        **_COMMON_PHI,
    },
}

RUN_KEYS = {"seed", "out"}


def load_config(path, subcommand: str):
    """Parse ``path`` into (params, run) with sweeps as lists; unknown keys raise."""
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"),
                                   inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as e:
        raise ConfigError("cannot read config: %s" % e) from None
    except configparser.Error as e:
        raise ConfigError("cannot parse config: %s" % e) from None
    extra = set(cp.sections()) - {subcommand, "run"}
    if extra:
        raise ConfigError("unknown section(s) %s for subcommand %s" % (sorted(extra), subcommand))
    if subcommand not in cp:
        raise ConfigError("config has no [%s] section" % subcommand)
    schema = SCHEMA[subcommand]
    raw = dict(cp[subcommand])
    unknown = set(raw) - set(schema)
    if unknown:
        raise ConfigError("unknown key(s) %s in [%s]" % (sorted(unknown), subcommand))
    params = {}
    for key, (conv, default, sweep) in schema.items():
        text = raw.get(key, default)
        if text is None:
            raise ConfigError("missing required key %r in [%s]" % (key, subcommand))
        parts = _split_sweep(text) if sweep else [text.strip()]
        params[key] = [conv(p) for p in parts]
    run = dict(cp["run"]) if "run" in cp else {}
    unknown = set(run) - RUN_KEYS
    if unknown:
        raise ConfigError("unknown key(s) %s in [run]" % sorted(unknown))
    return params, run


def _grid(params, keys):
    for combo in itertools.product(*(params[k] for k in keys)):
        yield dict(zip(keys, combo))


def _expand_x(x: tuple, d: int) -> tuple:
    if len(x) == d:
        return x
    if len(x) == 1:
        return x + (0.0,) * (d - 1)
    raise ConfigError("x has %d components, expected %d" % (len(x), d))


def _make_phi(params, d: int) -> stransform.TestFunction:
    comps = params["phi"][0]
    if len(comps) == 1 and d > 1:
        comps = comps * d
    if len(comps) != d:
        raise ConfigError("phi has %d components, expected %d" % (len(comps), d))
    return stransform.TestFunction.hermite(comps, params["center"][0], params["scale"][0])


def _check_h(params):
    for h in params["H"]:
        HurstParam(h)


# --- subcommands ---------------------------------------------------------------------

def cmd_membership(params, out, seed, flags):
    cols = ["H", "d", "x", "N", "member", "rule", "slack"]
    rows = []
    for g in _grid(params, ["H", "d", "x", "N"]):
        x = _expand_x(g["x"], g["d"])
        v = current.membership(x, g["H"], g["d"], g["N"])
        rows.append([g["H"], g["d"], x, g["N"], v.member, v.rule.value, v.inequality_slack])
    return [write_csv(out / "membership.csv", cols, rows, ["H", "d", "x", "N"])]


def cmd_stransform(params, out, seed, flags):
    cols = ["H", "t", "x", "N", "z_re", "z_im", "value_re", "value_im", "K1", "K2", "bound_ratio", "within_bound"]
    rows = []
    for g in _grid(params, ["H", "t", "x", "N", "z"]):
        x = g["x"]
        phi = _make_phi(params, len(x))
        spec = stransform.DonskerSpec(x, g["H"], g["t"], g["N"])
        u = stransform.donsker_functional(spec)
        val = complex(u(g["z"], phi))
        rep = stransform.growth_bound_check(u, phi, [g["z"]])
        rows.append([g["H"], g["t"], x, g["N"], g["z"].real, g["z"].imag, val.real, val.imag, u.K1, u.K2,
                     rep.max_ratio, rep.passed])
    return [write_csv(out / "stransform.csv", cols, rows, ["H", "t", "x", "N", "z_re", "z_im"])]


def _current_spec(g, params):
    # the dimension comes from x, or from phi when x is a single value
    d = len(g["x"]) if len(g["x"]) > 1 else len(params["phi"][0])
    x = _expand_x(g["x"], d)
    spec = current.CurrentSpec(x, g["H"], g["T"], g["i"], g["N"])
    v = current.membership(spec.x, spec.h, spec.d, spec.truncation)
    if not v.member:
        raise PreconditionError("H=%g, x=%s, N=%s: not a Hida distribution (rule %s, slack %s)"
                                % (g["H"], x, g["N"], v.rule.value, v.inequality_slack))
    return spec, v


def cmd_current(params, out, seed, flags):
    cols = ["H", "T", "x", "i", "N", "z_re", "z_im", "value_re", "value_im", "error_estimate", "rule", "slack",
            "status"]
    keys = ["H", "T", "x", "i", "N", "z"]
    specs = [(g, *_current_spec(g, params)) for g in _grid(params, keys)]
    rows = []
    for g, spec, v in specs:
        phi = _make_phi(params, spec.d)
        fn = current.s_current if spec.truncation is None else current.s_current_truncated
        status = "ok"
        try:
            val, err = fn(spec, g["z"], phi, return_error=True)
        except ConvergenceError as e:
            val, err, status = complex(np.ravel(e.partial)[0]), float(np.max(e.error)), "convergence_failure"
            flags.append("current: convergence failure at %s" % (g,))
        rows.append([g["H"], g["T"], spec.x, g["i"], g["N"], g["z"].real, g["z"].imag, val.real, val.imag, err,
                     v.rule.value, v.inequality_slack, status])
    return [write_csv(out / "current.csv", cols, rows, ["H", "T", "x", "i", "N", "z_re", "z_im"])]


def cmd_chaos(params, out, seed, flags):
    pcols = ["H", "T", "x", "i", "N", "index", "total_order", "value", "error_estimate", "exact_zero"]
    rcols = ["H", "T", "x", "i", "N", "order", "partial_sum", "closed_form_re", "closed_form_im", "abs_error"]
    prow, rrow = [], []
    max_order = params["max_order"][0]
    if max_order < 0:
        raise ConfigError("max_order must be >= 0")
    for g in _grid(params, ["H", "T", "x", "i", "N"]):
        spec, _ = _current_spec(g, params)
        phi = _make_phi(params, spec.d)
        rep = chaos.taylor_reconstruct(spec, phi, max_order)
        key = [g["H"], g["T"], spec.x, g["i"], g["N"]]
        for p in rep.pairings:
            prow.append(key + [p.index.entries, p.index.total, p.value, p.error, p.exact_zero])
        for k, s, e in zip(rep.orders, rep.partial_sums, rep.errors):
            rrow.append(key + [k, s, rep.closed_form.real, rep.closed_form.imag, e])
    keys = ["H", "T", "x", "i", "N"]
    return [write_csv(out / "chaos_pairings.csv", pcols, prow, keys),
            write_csv(out / "chaos_reconstruction.csv", rcols, rrow, keys + ["order"])]


def _case_seed(seed: int, k: int) -> int:
    return int(np.random.SeedSequence([seed, k]).generate_state(1, np.uint64)[0])


def cmd_mc_verify(params, out, seed, flags):
    cols = ["H", "t", "x", "z", "closed_form", "mc_estimate", "std_error", "z_score", "within_3se", "case_seed"]
    rows = []
    for k, g in enumerate(_grid(params, ["H", "t", "x", "z"])):
        x = g["x"]
        phi = _make_phi(params, len(x))
        spec = stransform.DonskerSpec(x, g["H"], g["t"])
        exact = complex(stransform.donsker_s(spec, g["z"], phi)).real
        cs = _case_seed(seed, k)
        est, se = stransform.mc_donsker_s(spec, g["z"], phi, params["n_samples"][0], cs)
        zs = (est.real - exact) / se
        rows.append([g["H"], g["t"], x, g["z"], exact, est.real, se, zs, abs(zs) <= 3.0, cs])
    return [write_csv(out / "mc_verify.csv", cols, rows, ["H", "t", "x", "z"])]


def cmd_gamma_check(params, out, seed, flags):
    cols = ["H", "d", "x_norm", "T", "lhs", "rhs", "residual", "both_negligible", "shape", "printed_shape",
            "printed_rhs"]
    rows = []
    for g in _grid(params, ["H", "d", "x", "T"]):
        x = np.asarray(g["x"])
        if len(x) not in (1, g["d"]):
            raise ConfigError("x has %d components, expected 1 (a norm) or %d" % (len(x), g["d"]))
        r = current.gamma_identity_check(x, g["H"], g["d"], g["T"])
        rows.append([g["H"], g["d"], float(np.linalg.norm(x)), g["T"], r.lhs, r.rhs, r.residual, r.both_negligible,
                     r.shape_parameter, r.printed_shape_parameter, r.printed_rhs])
    return [write_csv(out / "gamma_check.csv", cols, rows, ["H", "d", "x_norm", "T"])]


def cmd_fbm_sample(params, out, seed, flags):
    method = params["method"][0]
    if method not in ("auto", "dense", "circulant"):
        raise ConfigError("method must be auto, dense or circulant")
    files = []
    ccols = ["H", "s", "t", "sample_cov", "exact_cov", "std_error", "z_score"]
    crow = []
    for k, h in enumerate(params["H"]):
        b = gaussian.sample_fbm_paths(h, params["T"][0], params["n_steps"][0], params["n_paths"][0],
                                      params["d"][0], _case_seed(seed, k), None if method == "auto" else method)
        if b.fallback:
            flags.append("fbm-sample: circulant embedding not PSD for H=%g, dense fallback used" % h)
        if params["write_paths"][0]:
            files.append(write_csv(out / ("fbm_paths_H%g.csv" % h), ["path_id", "step", "t", "component", "value"],
                                   b.rows()))
        t = b.times[1:]
        X = b.paths[:, 1:, :]
        n = X.shape[0] * X.shape[2]
        S = np.einsum("pkj,plj->kl", X, X) / n
        C = gaussian.fbm_covariance(h, t[:, None], t[None, :])
        se = np.sqrt((np.diag(C)[:, None] * np.diag(C)[None, :] + C ** 2) / n)
        for a in range(len(t)):
            for c in range(a, len(t)):
                crow.append([h, t[a], t[c], S[a, c], C[a, c], se[a, c], (S[a, c] - C[a, c]) / se[a, c]])
    files.append(write_csv(out / "fbm_covariance.csv", ccols, crow, ["H", "s", "t"]))
    return files


def cmd_divergence(params, out, seed, flags):
    pcols = ["H", "d", "N", "k", "cutoff", "integral"]
    scols = ["H", "d", "N", "mode", "predicted_exponent", "fitted_exponent", "log_slope", "converges"]
    prow, srow = [], []
    T = params["T"][0]
    r = params["ratio"][0]
    if not 0 < r < 1:
        raise ConfigError("ratio must be in (0, 1)")
    eps = params["eps0"][0] * r ** np.arange(params["levels"][0])
    mode = params["mode"][0]
    for g in _grid(params, ["H", "d", "N"]):
        spec = current.CurrentSpec((0.0,) * g["d"], g["H"], T, 1, g["N"])
        phi = _make_phi(params, g["d"]) if mode == "integrand" else None
        rep = current.divergence_probe(spec, eps, mode=mode, phi=phi, z=params["z"][0])
        for k, (e, v) in enumerate(zip(rep.cutoffs, rep.integrals)):
            prow.append([g["H"], g["d"], g["N"], k, e, v])
        srow.append([g["H"], g["d"], g["N"], mode, rep.predicted_exponent, rep.fitted_exponent, rep.log_slope,
                     rep.converges])
    return [write_csv(out / "divergence_probe.csv", pcols, prow, ["H", "d", "N", "k"]),
            write_csv(out / "divergence_summary.csv", scols, srow, ["H", "d", "N"])]


COMMANDS = {
    "membership": cmd_membership,
    "stransform": cmd_stransform,
    "current": cmd_current,
    "chaos-reconstruct": cmd_chaos,
    "mc-verify": cmd_mc_verify,
    "gamma-check": cmd_gamma_check,
    "fbm-sample": cmd_fbm_sample,
    "divergence-probe": cmd_divergence,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fbmcurrent", description=__doc__.split("\n")[0])
    p.add_argument("subcommand", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="INI file with a section named after the subcommand")
    p.add_argument("--out", help="output directory (default: [run] out, else ./out/<subcommand>)")
    p.add_argument("--seed", help="unsigned 64-bit seed overriding [run] seed")
    return p


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INVALID
    start = time.perf_counter()
    try:
        params, runsec = load_config(args.config, args.subcommand)
        _check_h(params)
        seed_text = args.seed if args.seed is not None else runsec.get("seed", "0")
        seed = _int(seed_text)
        if not 0 <= seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        out = Path(args.out or runsec.get("out") or Path("out") / args.subcommand)
        out.mkdir(parents=True, exist_ok=True)
        flags: list[str] = []
        files = COMMANDS[args.subcommand](params, out, seed, flags)
    except (ConfigError, PreconditionError) as e:
        print("error: %s" % e, file=sys.stderr)
        return EXIT_INVALID
    except ConvergenceError as e:
        print("convergence failure: %s" % e, file=sys.stderr)
        return EXIT_CONVERGENCE
    status = "convergence_failure" if flags and any("convergence" in f for f in flags) else "ok"
    inputs = {k: [v if not isinstance(v, complex) else str(v) for v in vals] for k, vals in params.items()}
    write_manifest(out, subcommand=args.subcommand, config_path=args.config, inputs=inputs, seed=seed,
                   wall_time=time.perf_counter() - start, files=files, status=status, flags=flags)
    for f in files:
        print(f)
    return EXIT_CONVERGENCE if status != "ok" else EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
