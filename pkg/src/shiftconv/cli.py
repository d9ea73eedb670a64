"""Command-line front end: one subcommand per operation, reproducible output.

Parameter resolution order is command-line flag, then ``--config`` file, then
(for ``workers`` and ``cache_dir`` only) the environment, then defaults.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable

import numpy as np

from . import acceptance, circle, coefficients, expsums, optimizer, spectral, voronoi
from .arith import DomainError, is_prime, primes_up_to
from .parallel import default_workers, parallel_map
from .report import SumReport, jsonable, rows_to_csv

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RANGE = 0, 1, 2, 3
COMMON = {"format": "text", "seed": 0, "workers": 1, "cache_dir": None}


@dataclass
class Param:
    name: str
    type: Callable[[str], Any]
    default: Any
    help: str = ""


def _int_list(text: str) -> list[int]:
    return [int(float(t)) for t in str(text).split(",") if t.strip()]


def _float_list(text: str) -> list[float]:
    return [float(t) for t in str(text).split(",") if t.strip()]


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    return str(text).lower() in ("1", "true", "yes", "on")


def _optional_float(text):
    return None if text in (None, "", "None", "null") else float(text)


@dataclass
class Output:
    rows: list[dict]
    reports: list[SumReport]
    text: list[str]
    # text lines already summarize every report (text format only)
    text_covers_reports: bool = False


# -- subcommands ----------------------------------------------------------------
# Each takes the resolved config dict and returns an Output.


def cmd_kloosterman(cfg) -> Output:
    m, n, c = cfg["m"], cfg["n"], cfg["c"]
    v = expsums.kloosterman(m, n, c)
    bound = expsums.weil_bound(c) * math.sqrt(c)
    row = {"m": m, "n": n, "c": c, "value": v.value, "abs": abs(v.value), "normalized": abs(v.value) / math.sqrt(c),
           "weil_bound": bound}
    text = [f"S({m},{n};{c}) = {v.value.real:.12g} {v.value.imag:+.3g}i   |S|/sqrt(c) = {row['normalized']:.6f}"]
    return Output([row], [], text)


def cmd_baby_sums(cfg) -> Output:
    c = cfg["c"]
    if cfg["kind"] == "S":
        d = cfg["d"]
        v = expsums.baby_s(cfg["h"], cfg["n"], cfg["m"], c, d)
        label = f"S_baby(h={cfg['h']}, n={cfg['n']}, m={cfg['m']}; c={c}, d={d})"
    elif cfg["kind"] == "T":
        v = expsums.baby_t(cfg["a"], cfg["b"], cfg["m"], c)
        label = f"T(a={cfg['a']}, b={cfg['b']}, m={cfg['m']}; c={c})"
    else:
        raise DomainError(f"kind must be S or T, got {cfg['kind']!r}")
    return Output([{"kind": cfg["kind"], "value": v.value, "terms": v.term_count}], [],
                  [f"{label} = {v.value.real:.12g} {v.value.imag:+.12g}i"])


def _sweep_item(item):
    which, x, y, exhaustive, samples, seed = item
    sweep = expsums.s_factorization_sweep if which == "S" else expsums.t_multiplicativity_sweep
    return which, x, y, exhaustive, sweep(x, y, exhaustive, samples=samples, seed=seed).value


def cmd_verify_identities(cfg) -> Output:
    items = [
        (which, x, y, x * y <= cfg["exhaustive_max"], cfg["samples"], cfg["seed"])
        for x, y in expsums.coprime_splittings(cfg["max_modulus"])
        for which in ("S", "T")
    ]
    results = parallel_map(_sweep_item, items, cfg["workers"])
    rows = [{"identity": w, "first": x, "second": y, "exhaustive": e, "max_rel_err": err} for w, x, y, e, err in results]
    reports = []
    for which, name in (("S", "s_factorization"), ("T", "t_multiplicativity")):
        worst = max(r["max_rel_err"] for r in rows if r["identity"] == which)
        reports.append(SumReport(name, worst, bound=expsums.IDENTITY_RTOL, ratio=worst / expsums.IDENTITY_RTOL,
                                 passed=worst <= expsums.IDENTITY_RTOL,
                                 params={"max_modulus": cfg["max_modulus"], "sweeps": len(rows) // 2}))
    return Output(rows, reports, [])


def cmd_correlation(cfg) -> Output:
    primes = [p for p in range(cfg["p_min"], cfg["p_max"] + 1) if is_prime(p) and (not cfg["mod3"] or p % 3 == 2)]
    if not primes:
        raise DomainError("no primes in the requested range")
    r = expsums.correlation_sweep(primes, cfg["tuples"], cfg["seed"])
    return Output(r.details["per_prime"], [r], [])


def cmd_exponent_pair(cfg) -> Output:
    q = cfg["q"]
    trace = expsums.KloostermanTrace(q)
    if cfg["trace"] == "t-correlation":
        trace = expsums.TCorrelationTrace(q, 0, 1, 1, 1)
    elif cfg["trace"] != "kloosterman":
        raise DomainError(f"unknown trace {cfg['trace']!r}")
    delta = cfg["delta"]
    rng = expsums._rng(cfg["seed"], q, delta)
    weights = np.exp(2j * np.pi * rng.random(delta))
    interval = range(cfg["start"], cfg["start"] + cfg["length"])
    reports = []
    for pair in (expsums.TRIVIAL_PAIR, *expsums.KNOWN_PAIRS):
        r = expsums.exponent_pair_measurement(trace, interval, weights, pair)
        r.name = f"exponent_pair({pair.kappa}, {pair.lambda_}, {pair.nu}, {pair.mu})"
        reports.append(r)
    return Output([], reports, [])


def cmd_ft_modp(cfg) -> Output:
    p = cfg["p"]
    rng = expsums._rng(cfg["seed"], 3, p)
    rows = []
    for i in range(cfg["functions"]):
        f = rng.standard_normal(p) + 1j * rng.standard_normal(p)
        F = expsums.fourier_transform_modp(f, p)
        FF = expsums.fourier_transform_modp(F, p)
        scale = float(np.linalg.norm(f))
        rows.append({
            "p": p, "function": i,
            "involution_err": float(np.max(np.abs(FF - f[(-np.arange(p)) % p])) / scale),
            "plancherel_err": abs(float(np.linalg.norm(F)) ** 2 - scale**2) / scale**2,
        })
    worst = max(max(r["involution_err"], r["plancherel_err"]) for r in rows)
    rep = SumReport("ft_modp", worst, bound=1e-9, ratio=worst / 1e-9, passed=worst <= 1e-9, params={"p": p})
    return Output(rows, [rep], [])


def _moduli(cfg) -> circle.ModuliSet:
    return circle.build_moduli_set(cfg["Q"], cfg["eta"], cfg["mode"], delta=cfg["delta"])


def cmd_jutila(cfg) -> Output:
    ms = _moduli(cfg)
    if cfg["export"]:
        with open(cfg["export"], "w") as fh:
            fh.write(ms.to_text())
    rep = circle.variance(ms)
    if not ms.empty:
        rep.details["integral"] = circle.eval_I(ms).integral()
    return Output([], [rep], [])


def cmd_dstar(cfg) -> Output:
    X = cfg["X"]
    delta = cfg["delta"] if cfg["delta"] is not None else 1.0 / X
    Q = cfg["Q"] if cfg["Q"] is not None else X ** (6 / 11)
    ms = circle.build_moduli_set(Q, cfg["eta"], cfg["mode"], delta=delta)
    if ms.empty:
        raise DomainError("moduli set is empty; raise eta or use --mode all-squarefree")
    gl3, gl2 = _streams(cfg, 3 * X)
    rep = circle.approximation_gap(cfg["h"], X, ms, gl3, gl2)
    return Output([], [rep], [])


def cmd_coeffs(cfg) -> Output:
    s = coefficients.build_stream(cfg["kind"], cfg["N"], cfg["cache_dir"])
    head = min(cfg["head"], len(s))
    rows = [{"n": n, "value": s[n]} for n in range(1, head + 1)]
    ladder = [N for N in cfg["ladder"] if N <= len(s)] or [len(s)]
    rep = coefficients.second_moment_check(s, ladder)
    return Output(rows, [rep], [])


def _streams(cfg, N):
    N = int(math.ceil(N))
    return (coefficients.build_stream(coefficients.SYM2, N, cfg["cache_dir"]),
            coefficients.build_stream(coefficients.GL2, N, cfg["cache_dir"]))


def cmd_shifted_conv(cfg) -> Output:
    X = cfg["X"]
    gl3, gl2 = _streams(cfg, 3 * X)
    spec = spectral.shifted_conv_all(X, gl3, gl2)
    lo = cfg["h_min"] if cfg["h_min"] is not None else -int(X)
    hi = cfg["h_max"] if cfg["h_max"] is not None else int(X)
    rows = []
    for h in range(lo, hi + 1):
        v = spec.at(h)
        row = {"h": h, "re": v.real, "im": v.imag, "abs": abs(v)}
        if cfg["direct"]:
            row["direct_re"] = spectral.shifted_conv_direct(h, X, gl3, gl2).real
        rows.append(row)
    rep = SumReport("shift_energy", spec.energy() / X**2, params={"X": X}, details={"h_range": [lo, hi]})
    return Output(rows, [rep], [])


def cmd_parseval(cfg) -> Output:
    reports = []
    for X in cfg["X"]:
        gl3, gl2 = _streams(cfg, 3 * X)
        reports.append(spectral.parseval_check(X, gl3, gl2))
    return Output([], reports, [])


def cmd_wilton(cfg) -> Output:
    gl3, gl2 = _streams(cfg, 3 * max(cfg["X"]))
    return Output([], [spectral.wilton_miller(X, gl3, gl2) for X in cfg["X"]], [])


def cmd_voronoi(cfg) -> Output:
    Ys = cfg["Y"]
    reports = []
    if cfg["q"] is not None:
        cases = [voronoi.VoronoiTestCase(cfg["a"], cfg["q"], Y) for Y in Ys]
        N = math.ceil(max(max(c.truncation for c in cases), 2 * max(Ys) + 1))
        gl2 = coefficients.build_stream(coefficients.GL2, N, cfg["cache_dir"])
        rows = [voronoi.voronoi_check(c, gl2) for c in cases]
        worst = max(r["rel_err"] for r in rows)
        reports.append(SumReport("voronoi_case", worst, bound=1e-4, ratio=worst / 1e-4,
                                 passed=worst <= 1e-4 and not any(r["warn"] for r in rows),
                                 params={"a": cfg["a"], "q": cfg["q"], "Y": Ys}))
    else:
        N = math.ceil(max(voronoi.default_truncation(cfg["q_max"], min(Ys)), 2 * max(Ys) + 1))
        gl2 = coefficients.build_stream(coefficients.GL2, N, cfg["cache_dir"])
        sweep = voronoi.voronoi_sweep(gl2, cfg["q_max"], Ys)
        rows = sweep.details.pop("rows")
        reports.append(sweep)
    if cfg["decay"]:
        dec = voronoi.transform_decay_check(float(max(Ys)))
        reports.append(dec)
    return Output(rows, reports, [])


def cmd_optimize(cfg) -> Output:
    r = optimizer.paper_pipeline(delta={"X": Fraction(cfg["delta_exponent"])}, q_lower=Fraction(cfg["q_lower"]))
    d = r.to_dict()
    text = list(r.trace) + [
        f"D = {optimizer.show_form(r.D)}",
        f"Q = {optimizer.show_form(r.Q)}",
        f"exponent {r.exponent}",
    ]
    rep = SumReport("exponent_pipeline", str(r.exponent), passed=r.constraint_ok,
                    params={"delta_exponent": cfg["delta_exponent"], "q_lower": cfg["q_lower"]},
                    details={"D": d["D"], "Q": d["Q"]})
    return Output([], [rep], text)


def cmd_suite(cfg) -> Output:
    ctx = acceptance.Context(quick=cfg["quick"], seed=cfg["seed"], workers=cfg["workers"], cache_dir=cfg["cache_dir"])
    only = cfg["only"] or None
    echo = (lambda line: print(line, file=sys.stderr)) if cfg["format"] != "text" else None
    results = acceptance.run_all(ctx, only, echo)
    reports = [
        SumReport(f"criterion_{r.number}", r.summary, passed=r.passed, params={"name": r.name},
                  details={"elapsed": r.elapsed})
        for r in results
    ]
    text = [r.line for r in results]
    return Output([], reports, text, text_covers_reports=True)


COMMANDS: dict[str, tuple[Callable, list[Param], str]] = {
    "kloosterman": (cmd_kloosterman, [
        Param("m", int, 1), Param("n", int, 1), Param("c", int, 7)],
        "one Kloosterman sum S(m,n;c)"),
    "baby-sums": (cmd_baby_sums, [
        Param("kind", str, "S", "S or T"), Param("h", int, 1), Param("n", int, 1), Param("m", int, 1),
        Param("a", int, 0), Param("b", int, 1), Param("c", int, 15), Param("d", int, 3)],
        "the two auxiliary complete sums"),
    "verify-identities": (cmd_verify_identities, [
        Param("max_modulus", int, 300), Param("exhaustive_max", int, 60), Param("samples", int, 100)],
        "factorization and twisted multiplicativity sweeps"),
    "correlation": (cmd_correlation, [
        Param("p_min", int, 51), Param("p_max", int, 500), Param("tuples", int, 20),
        Param("mod3", _bool, True, "keep only p = 2 mod 3")],
        "T-correlation dichotomy over a prime range"),
    "exponent-pair": (cmd_exponent_pair, [
        Param("q", int, 1001), Param("start", int, 0), Param("length", int, 400), Param("delta", int, 7),
        Param("trace", str, "kloosterman", "kloosterman or t-correlation")],
        "incomplete sums against exponent-pair bounds"),
    "ft-modp": (cmd_ft_modp, [Param("p", int, 97), Param("functions", int, 10)],
                "Fourier involution and Plancherel modulo p"),
    "jutila": (cmd_jutila, [
        Param("Q", float, 200.0), Param("eta", float, 0.5), Param("mode", str, circle.ALL_SQUAREFREE),
        Param("delta", _optional_float, None, "default Q^-3/2"), Param("export", str, "", "write moduli to file")],
        "exact variance of the approximation kernel"),
    "dstar": (cmd_dstar, [
        Param("h", int, 1), Param("X", float, 2000.0), Param("Q", _optional_float, None, "default X^(6/11)"),
        Param("eta", float, 0.5), Param("mode", str, circle.ALL_SQUAREFREE),
        Param("delta", _optional_float, None, "default 1/X")],
        "circle-method approximation of one shifted sum"),
    "coeffs": (cmd_coeffs, [
        Param("kind", str, coefficients.GL2), Param("N", int, 10_000), Param("head", int, 20),
        Param("ladder", _int_list, [1000, 10_000], "comma list")],
        "coefficient streams and second moments"),
    "shifted-conv": (cmd_shifted_conv, [
        Param("X", float, 1024.0), Param("h_min", lambda s: None if s in (None, "None") else int(s), None),
        Param("h_max", lambda s: None if s in (None, "None") else int(s), None),
        Param("direct", _bool, False, "also evaluate each shift directly")],
        "all shifted convolution sums at one scale"),
    "parseval": (cmd_parseval, [Param("X", _float_list, [4096.0, 8192.0], "comma list")],
                 "Parseval check for the shift spectrum"),
    "wilton": (cmd_wilton, [Param("X", _float_list, [1000.0, 10_000.0], "comma list")],
               "resonance sup constants"),
    "voronoi": (cmd_voronoi, [
        Param("q_max", int, 10), Param("Y", _float_list, [500.0, 1000.0], "comma list"),
        Param("a", int, 1), Param("q", lambda s: None if s in (None, "None") else int(s), None, "single case"),
        Param("decay", _bool, True, "also fit the transform decay")],
        "Voronoi identity checks"),
    "optimize": (cmd_optimize, [
        Param("paper_pipeline", _bool, True, "run the two-step exponent optimization"),
        Param("delta_exponent", Fraction, Fraction(-1), "Delta = X^this"),
        Param("q_lower", Fraction, Fraction(1, 2), "require Q >> X^this")],
        "exact exponent optimization"),
    "suite": (cmd_suite, [
        Param("quick", _bool, False, "lighter configuration"), Param("only", _int_list, [], "comma list of criteria")],
        "the acceptance battery"),
}

TEXT_ROW_LIMIT = 60


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json", "text"), default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--workers", type=int, default=None)
    common.add_argument("--cache-dir", dest="cache_dir", default=None)
    common.add_argument("--config", default=None, help="key=value lines or a JSON header from an earlier run")
    parser = argparse.ArgumentParser(prog="shiftconv", description="Shifted convolution sums and their ingredients.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, params, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        for prm in params:
            flag = "--" + prm.name.replace("_", "-")
            if prm.type is _bool:
                p.add_argument(flag, dest=prm.name, nargs="?", const="true", default=None,
                               metavar="BOOL", help=prm.help)
            else:
                p.add_argument(flag, dest=prm.name, default=None, help=prm.help or f"default {prm.default}")
    return parser


def read_config(path: str) -> dict:
    with open(path) as fh:
        text = fh.read()
    stripped = text.strip()
    if stripped.startswith("{"):
        first = stripped.splitlines()[0]
        obj = json.loads(first)
        return dict(obj.get("config", obj))
    out = {}
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("# config "):
            return dict(json.loads(line[len("# config "):]))
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def resolve(args: argparse.Namespace) -> dict:
    _, params, _ = COMMANDS[args.command]
    file_cfg = read_config(args.config) if args.config else {}
    cfg: dict[str, Any] = {"command": args.command}
    env = {"workers": os.environ.get("SHIFTCONV_WORKERS"), "cache_dir": os.environ.get("SHIFTCONV_CACHE_DIR")}
    for key, default in COMMON.items():
        value = getattr(args, key)
        if value is None:
            value = file_cfg.get(key)
        if value is None and key in env:
            value = env[key]
        if value is None:
            value = default
        cfg[key] = value
    cfg["seed"] = int(cfg["seed"])
    cfg["workers"] = max(1, int(cfg["workers"])) if cfg["workers"] is not None else default_workers()
    if cfg["format"] not in ("csv", "json", "text"):
        raise DomainError(f"unknown format {cfg['format']!r}")
    for prm in params:
        value = getattr(args, prm.name)
        if value is None:
            value = file_cfg.get(prm.name)
        cfg[prm.name] = prm.default if value is None else (value if _already(value, prm) else prm.type(value))
    return cfg


def _already(value, prm: Param) -> bool:
    # values coming back from a JSON header are already typed
    if isinstance(value, list):
        return True
    if isinstance(value, bool) or value is None:
        return True
    return isinstance(value, (int, float)) and prm.type in (int, float, _optional_float)


def render(cfg: dict, out: Output) -> str:
    fmt = cfg["format"]
    conf = jsonable(cfg)
    if fmt == "json":
        lines = [json.dumps({"config": conf})]
        lines += [json.dumps({"report": r.to_dict()}) for r in out.reports]
        lines += [json.dumps({"row": jsonable(row)}) for row in out.rows]
        return "\n".join(lines) + "\n"
    if fmt == "csv":
        head = "# config " + json.dumps(conf) + "\n"
        body = rows_to_csv(out.rows) if out.rows else ""
        rep = rows_to_csv([r.to_dict() for r in out.reports]) if out.reports else ""
        return head + body + ("\n" if body and rep else "") + rep
    lines = ["# config " + json.dumps(conf)]
    lines += out.text
    if not out.text_covers_reports:
        lines += [_report_line(r) for r in out.reports]
    if out.rows and not out.text:
        if len(out.rows) > TEXT_ROW_LIMIT:
            lines.append(f"({len(out.rows)} rows; use --format csv or json for the full table)")
        else:
            lines.append(_table(out.rows))
    return "\n".join(lines) + "\n"


def _report_line(r: SumReport) -> str:
    value = r.value
    if isinstance(value, float):
        value = f"{value:.6g}"
    elif isinstance(value, dict):
        value = ", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in value.items())
    extra = ""
    if r.bound is not None:
        extra += f"  bound={r.bound:.6g}"
    if r.ratio is not None:
        extra += f"  ratio={r.ratio:.4g}"
    return f"[{r.status}] {r.name}: {value}{extra}"


def _table(rows: list[dict]) -> str:
    flat = [{k: _cell(v) for k, v in row.items()} for row in rows]
    cols = list(flat[0])
    width = {c: max(len(c), *(len(r.get(c, "")) for r in flat)) for c in cols}
    lines = ["  ".join(c.rjust(width[c]) for c in cols)]
    lines += ["  ".join(r.get(c, "").rjust(width[c]) for c in cols) for r in flat]
    return "\n".join(lines)


def _cell(v) -> str:
    if isinstance(v, complex):
        return f"{v.real:.10g}{v.imag:+.3g}i"
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def exit_status(out: Output) -> int:
    return EXIT_FAIL if any(r.passed is False for r in out.reports) else EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        handler = COMMANDS[args.command][0]
        out = handler(cfg)
    except (DomainError, ZeroDivisionError, OverflowError) as exc:
        print(f"shiftconv: {exc}", file=sys.stderr)
        return EXIT_RANGE
    except ValueError as exc:
        # malformed numeric flag values are usage errors
        parser.print_usage(sys.stderr)
        print(f"shiftconv: {exc}", file=sys.stderr)
        return EXIT_USAGE
    sys.stdout.write(render(cfg, out))
    return exit_status(out)


if __name__ == "__main__":
    raise SystemExit(main())
