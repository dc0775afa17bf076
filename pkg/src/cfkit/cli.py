"""Command-line driver: ``cfkit region | figure | simulate | check | replay``.

Every command writes its outputs plus ``manifest.json`` into ``--out``.
Outputs carry no timestamps, so reruns with the same arguments are
byte-identical; only the manifest records wall-clock times.

Exit codes: 0 success, 1 a configured assertion failed, 2 invalid input,
3 enumeration budget exceeded.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import channel as ch
from . import optimize as op
from . import region as rg
from . import simulate as sm
from .gf import field_new

EXIT_ASSERT, EXIT_INPUT, EXIT_BUDGET = 1, 2, 3


class InputError(ValueError):
    """Invalid command-line or file input."""


def fmt(x: float) -> str:
    return f"{x:.12g}"


def _round(obj):
    """Floats to 12 significant digits, recursively."""
    if isinstance(obj, float) or isinstance(obj, np.floating):
        x = float(obj)
        return x if not math.isfinite(x) else float(fmt(x))
    if isinstance(obj, dict):
        return {str(k): _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist())
    return obj


def dumps(obj) -> str:
    return json.dumps(_round(obj), indent=2, sort_keys=True) + "\n"


def write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(fmt(float(v)) for v in r))
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def parse_ints(text: str, what: str) -> tuple:
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError:
        raise InputError(f"{what}: expected comma-separated integers, got {text!r}") from None


def parse_floats(text: str, what: str) -> tuple:
    try:
        return tuple(float(t) for t in text.split(","))
    except ValueError:
        raise InputError(f"{what}: expected comma-separated numbers, got {text!r}") from None


def parse_pmf_token(tok: str, size: int | None) -> np.ndarray:
    """``bern:p``, ``ternary:p``, ``uniform`` or slash-separated probabilities."""
    t = tok.strip()
    try:
        if t.startswith("bern:"):
            p = float(t[5:])
            if not 0 <= p <= 1:
                raise ValueError
            pm = np.array([1 - p, p])
        elif t.startswith("ternary:"):
            p = float(t[8:])
            if not 0 <= p <= 1:
                raise ValueError
            pm = np.array([(1 - p) / 2, p, (1 - p) / 2])
        elif t == "uniform":
            if size is None:
                raise ValueError
            pm = np.full(size, 1.0 / size)
        else:
            pm = np.array([float(x) for x in t.split("/")])
            if np.any(pm < 0) or abs(pm.sum() - 1) > 1e-9:
                raise ValueError
            pm = pm / pm.sum()
    except ValueError:
        raise InputError(f"malformed pmf token {tok!r}") from None
    if size is not None and pm.size != size:
        raise InputError(f"pmf token {tok!r} has {pm.size} entries, expected {size}")
    return pm


def parse_pmfs(text: str, size: int | None, K: int = 2) -> list:
    toks = text.split(",")
    if len(toks) == 1:
        toks = toks * K
    if len(toks) != K:
        raise InputError(f"expected {K} pmf tokens, got {len(toks)}")
    return [parse_pmf_token(t, size) for t in toks]


def load_channel(path: str):
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InputError(f"cannot read channel file {path!r}: {e.strerror}") from None
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from None
    try:
        return ch.channel_from_json(d)
    except (KeyError, ValueError, TypeError) as e:
        raise InputError(f"{path}: invalid channel spec: {e}") from None


def get_channel(args):
    if getattr(args, "channel", None):
        return load_channel(args.channel)
    name = args.builtin
    if name == "sym_gaussian":
        return ch.builtin(name, P=power_of(args))
    try:
        return ch.builtin(name)
    except ValueError as e:
        raise InputError(str(e)) from None


def power_of(args) -> float:
    if getattr(args, "power", None) is not None:
        return float(args.power)
    if getattr(args, "snr", None) is not None:
        return op.db_to_power(float(args.snr))
    return 1.0


def default_map(q: int, pmf, P: float) -> np.ndarray:
    """Centered equally spaced levels scaled to power ``P`` under ``pmf``."""
    lv = 2.0 * np.arange(q) - (q - 1)
    e = float(np.dot(pmf, lv**2))
    return lv * math.sqrt(P / e) if e > 0 else lv


# ---------------------------------------------------------------------------
# manifest
# ---------------------------------------------------------------------------


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def write_manifest(out: Path, argv, args, files, started: str, code: int = 0) -> None:
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")}
    digests = {f: hashlib.sha256((out / f).read_bytes()).hexdigest() for f in sorted(files)}
    man = {
        "command": args.command,
        "argv": list(argv),
        "config": config,
        "version": __version__,
        "seed": config.get("seed"),
        "exit_code": code,
        "timestamps": {"started": started, "finished": _now()},
        "outputs": digests,
    }
    (out / "manifest.json").write_text(json.dumps(man, indent=2, sort_keys=True, default=str) + "\n")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_region(args, out: Path) -> tuple:
    thm = "cor1" if args.cor1 else args.thm
    chan = get_channel(args)
    a = parse_ints(args.a, "--a")
    info = {"theorem": thm, "a": list(a)}
    if thm == "cor1":
        if not isinstance(chan, ch.GaussianMac):
            raise InputError("cor1 needs a Gaussian channel")
        beta = parse_floats(args.beta, "--beta")
        P = chan.power[0] if chan.power[0] == chan.power[1] else chan.power
        region = rg.region_cor1(chan.h, P, beta, a)
        info.update(beta=list(beta), power=list(chan.power), h=list(chan.h))
    elif thm in ("thm1", "thm4"):
        q = args.q
        try:
            f = field_new(q)
        except ValueError as e:
            raise InputError(str(e)) from None
        pmfs = parse_pmfs(args.pmf or "uniform", q)
        if isinstance(chan, ch.GaussianMac):
            maps = [default_map(q, p, P) for p, P in zip(pmfs, chan.power)]
            quant = ch.OutputQuantizer.for_levels(np.add.outer(chan.h[0] * maps[0], chan.h[1] * maps[1]).ravel())
        else:
            maps, quant = None, None
            if chan.inputs != (q, q):
                raise InputError(f"channel inputs {chan.inputs} do not match q={q}")
        if thm == "thm1":
            region = rg.region_thm1(chan, pmfs, a, f, maps, quant)
        else:
            if not args.a2:
                raise InputError("thm4 needs --a2")
            a2 = parse_ints(args.a2, "--a2")
            model = rg.model_from_mac(chan, pmfs, maps, f, quant)
            if len(model.supports[0]) < q or len(model.supports[1]) < q:
                raise InputError("thm4 needs full-support pmfs")
            try:
                region = rg.region_thm4(model, a, a2)
            except ValueError as e:
                raise InputError(str(e)) from None
            info["a2"] = list(a2)
        info.update(q=q, pmfs=[p.tolist() for p in pmfs])
    elif thm == "thm2":
        support = np.array(parse_ints(args.support, "--support"))
        pmfs = parse_pmfs(args.pmf or "uniform", support.size)
        if isinstance(chan, ch.GaussianMac):
            maps = []
            for p, P in zip(pmfs, chan.power):
                e = float(np.dot(p, support.astype(float) ** 2))
                maps.append(support * math.sqrt(P / e))
            quant = ch.OutputQuantizer.for_levels(np.add.outer(chan.h[0] * maps[0], chan.h[1] * maps[1]).ravel())
        else:
            maps, quant = [np.arange(support.size)] * 2, None
        region, plan = rg.region_thm2(chan, [support, support], pmfs, maps, a, args.prime, quant)
        info.update(support=support.tolist(), pmfs=[p.tolist() for p in pmfs], prime=plan.q)
    else:
        raise InputError(f"unknown theorem {thm!r}")
    doc = {"info": info, "region": region.to_json()}
    (out / "region.json").write_text(dumps(doc))
    (out / "vertices.csv").write_text(rg.vertices_csv(region))
    s, y = rg.max_sum_rate(region), rg.max_symmetric_rate(region)
    print(f"max_sum_rate {fmt(s)}")
    print(f"max_symmetric_rate {fmt(y)}")
    return ["region.json", "vertices.csv"], 0


def cmd_figure(args, out: Path) -> tuple:
    name = args.name
    if name == "fig4":
        snrs = op.fig4_grid(args.points)
        rows = op.optimize_sum_rate(snrs, op.fig4_row)
        write_csv(out / "fig4.csv", op.FIG4_COLUMNS, [[r[c] for c in op.FIG4_COLUMNS] for r in rows])
        return ["fig4.csv"], 0
    if name == "fig5":
        snrs = op.fig5_grid(args.points)
        spec = op.SearchSpec(family="ternary", step=args.step)
        rows = op.optimize_sum_rate(snrs, lambda s: op.fig5_row(s, spec))
        cols = ("snr_db", "cor1", "thm2", "iid")
        write_csv(out / "fig5.csv", cols, [[r[c] for c in cols] for r in rows])
        write_csv(out / "fig5_params.csv", ("snr_db", "p", "rate"), [[r["snr_db"], r["p"], r["thm2"]] for r in rows])
        return ["fig5.csv", "fig5_params.csv"], 0
    if name == "fig7":
        regs = rg.example4_regions(args.P1, args.P2, math.sqrt(args.h2) if args.h2 else math.sqrt(2.0))
        files = []
        for scheme, d in regs.items():
            for part in ("rx1", "rx2", "hull"):
                fn = f"fig7_{scheme}_{part}.csv"
                (out / fn).write_text(rg.vertices_csv(d[part]))
                files.append(fn)
        return files, 0
    raise InputError(f"unknown figure {name!r}")


def cmd_simulate(args, out: Path) -> tuple:
    chan = get_channel(args)
    if not isinstance(chan, ch.DiscreteMac):
        raise InputError("simulation needs a discrete channel over field inputs")
    q = args.q
    try:
        field_new(q)
    except ValueError as e:
        raise InputError(str(e)) from None
    pmfs = parse_pmfs(args.pmf or "uniform", q)
    rates = parse_floats(args.rates, "--rates")
    if args.aux == "auto":
        aux = tuple(sm.auto_aux_rate(p, q, args.aux_margin) for p in pmfs)
    else:
        aux = parse_floats(args.aux, "--aux")
    a = parse_ints(args.a, "--a")
    a2 = parse_ints(args.a2, "--a2") if args.a2 else None
    cfg = sm.SimConfig.snapped(
        args.n, q, rates, aux, pmfs, chan, a=a, a2=a2, eps=args.eps, eps_prime=args.eps_prime,
        trials=args.trials, seed=args.seed, budget=args.budget,
    )
    res = sm.run_trials(cfg)
    point = {"rates": list(cfg.rates), "aux_rates": list(cfg.aux_rates), **res}
    checks = {}
    if args.expect_max_error is not None:
        checks["max_error"] = res["wilson_hi"] <= args.expect_max_error
    if args.expect_min_error is not None:
        checks["min_error"] = res["wilson_lo"] >= args.expect_min_error
    doc = {"config": cfg.to_json(), "points": [point], "assertions": checks}
    (out / "simulate.json").write_text(dumps(doc))
    print(f"error_rate {fmt(res['error_rate'])} wilson [{fmt(res['wilson_lo'])}, {fmt(res['wilson_hi'])}]")
    return ["simulate.json"], 0 if all(checks.values()) else EXIT_ASSERT


def cmd_check(args, out: Path) -> tuple:
    if args.what != "lemmas":
        raise InputError(f"unknown check {args.what!r}")
    rep = sm.lemma_checks(seed=args.seed, samples=args.samples, alpha=args.alpha)
    (out / "lemmas.json").write_text(dumps(rep))
    for c in rep["checks"]:
        print(f"{'PASS' if c['passed'] else 'FAIL'} {c['name']} p={fmt(c['pvalue'])}")
    return ["lemmas.json"], 0 if rep["all_passed"] else EXIT_ASSERT


def cmd_replay(args, out: Path) -> tuple:
    """Re-run the command recorded in a manifest and compare output digests.

    Succeeds when every output is byte-identical and the exit code matches
    the recorded one.
    """
    man = json.loads(Path(args.manifest).read_text())
    argv = list(man["argv"])
    if "--out" in argv:
        i = argv.index("--out")
        argv[i + 1] = str(out)
    else:
        argv += ["--out", str(out)]
    code = main(argv)
    same = {}
    for f, digest in man["outputs"].items():
        p = out / f
        same[f] = p.exists() and hashlib.sha256(p.read_bytes()).hexdigest() == digest
    for f, ok in same.items():
        print(f"{'same' if ok else 'DIFFERENT'} {f}")
    ok = all(same.values()) and code == man.get("exit_code", 0)
    return None, 0 if ok else EXIT_ASSERT


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cfkit", description="Compute-forward rate regions, figures and simulations.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, channel=True):
        sp.add_argument("--out", default=".", help="output directory")
        if channel:
            sp.add_argument("--builtin", default="bmm", help="bmm | sym_gaussian")
            sp.add_argument("--channel", help="channel JSON file (overrides --builtin)")

    r = sub.add_parser("region", help="rate region JSON and vertex CSV")
    common(r)
    r.add_argument("--thm", default="thm1", choices=["thm1", "thm2", "thm4", "cor1"])
    r.add_argument("--cor1", action="store_true", help="shorthand for --thm cor1")
    r.add_argument("--q", type=int, default=2)
    r.add_argument("--pmf", help="comma-separated per-user tokens: bern:p, ternary:p, uniform or p0/p1/...")
    r.add_argument("--a", default="1,1")
    r.add_argument("--a2")
    r.add_argument("--snr", type=float, help="SNR in dB for Gaussian channels")
    r.add_argument("--power", type=float)
    r.add_argument("--beta", default="1,1")
    r.add_argument("--support", default="-3,-1,1,3", help="integer alphabet for thm2")
    r.add_argument("--prime", type=int, help="field order for thm2 (default: smallest valid prime)")
    r.set_defaults(func=cmd_region)

    f = sub.add_parser("figure", help="figure data series as CSV")
    common(f, channel=False)
    f.add_argument("name", choices=["fig4", "fig5", "fig7"])
    f.add_argument("--points", type=int, default=40)
    f.add_argument("--step", type=float, default=1e-3, help="fig5 pmf-parameter grid step")
    f.add_argument("--P1", type=float, default=25.0)
    f.add_argument("--P2", type=float, default=18.0)
    f.add_argument("--h2", type=float, default=2.0, help="squared cross gain at receiver 1")
    f.set_defaults(func=cmd_figure)

    s = sub.add_parser("simulate", help="Monte-Carlo error rate of the nested linear code")
    common(s)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--q", type=int, default=2)
    s.add_argument("--rates", required=True)
    s.add_argument("--aux", default="auto")
    s.add_argument("--aux-margin", type=float, default=0.1)
    s.add_argument("--pmf")
    s.add_argument("--a", default="1,1")
    s.add_argument("--a2")
    s.add_argument("--eps", type=float, default=0.2)
    s.add_argument("--eps-prime", type=float, default=0.1)
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--budget", type=int, default=sm.DEFAULT_BUDGET)
    s.add_argument("--expect-max-error", type=float)
    s.add_argument("--expect-min-error", type=float)
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("check", help="statistical checks of the code ensemble")
    common(c, channel=False)
    c.add_argument("what", choices=["lemmas"])
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--samples", type=int, default=100_000)
    c.add_argument("--alpha", type=float, default=0.01)
    c.set_defaults(func=cmd_check)

    rp = sub.add_parser("replay", help="re-run a manifest and compare outputs")
    common(rp, channel=False)
    rp.add_argument("manifest")
    rp.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    started = _now()
    try:
        files, code = args.func(args, out)
    except sm.BudgetError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    if files is not None:
        write_manifest(out, argv, args, files, started, code)
    return code


if __name__ == "__main__":
    sys.exit(main())
