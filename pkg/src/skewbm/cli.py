"""Command line front end.

Exit codes: 0 success, 1 failed validation, 2 bad flags, 3 domain or
configuration error, 4 quadrature or root-finding failure.
"""

from __future__ import annotations

import argparse
import io
import math
import sys
from typing import Iterable, List, Sequence

import numpy as np

from .errors import ConfigError, ConvergenceError, DomainError

SCHEMA_VERSION = "1.0"
SCHEMA_COMMANDS = ("price", "smile", "density", "simulate", "validate", "approx")
EXIT_VALIDATION = 1
EXIT_DOMAIN = 3
EXIT_CONVERGENCE = 4


# ---------------------------------------------------------------------------
# serialisation


def fmt_float(x: float) -> str:
    if isinstance(x, (bool, np.bool_)):
        raise TypeError("bool is not a float")
    x = float(x)
    if not math.isfinite(x):
        return "null"
    return "%.17g" % x


def _json(obj, indent: int = 0) -> str:
    pad = "  " * (indent + 1)
    end = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj)
    if isinstance(obj, str):
        import json

        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_json(str(k))}: {_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_json(v, indent + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _json(v, indent + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps_json(obj) -> str:
    """JSON text with floats written to 17 significant digits."""
    return _json(obj) + "\n"


def dumps_csv(columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, str):
                cells.append(v)
            elif isinstance(v, (bool, np.bool_)):
                cells.append("true" if v else "false")
            elif isinstance(v, (int, np.integer)):
                cells.append(str(int(v)))
            else:
                cells.append(fmt_float(v))
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def load_schema(command: str) -> dict:
    """JSON schema shipped for ``command``'s JSON output."""
    import json
    from importlib import resources

    if command not in SCHEMA_COMMANDS:
        raise DomainError(f"no schema for {command!r}")
    return json.loads(resources.files("skewbm").joinpath("schemas", f"{command}.json").read_text(encoding="utf-8"))


def _emit(text: str, path: str | None):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# parsing helpers


def parse_grid(text: str) -> List[float]:
    """``a:b:step`` (inclusive of ``b`` up to rounding) or ``x1,x2,...``."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"grid must be start:stop:step, got {text!r}")
        try:
            a, b, h = (float(s) for s in parts)
        except ValueError:
            raise argparse.ArgumentTypeError(f"non-numeric grid {text!r}") from None
        if not h > 0 or b < a:
            raise argparse.ArgumentTypeError("grid needs step > 0 and stop >= start")
        count = int(math.floor((b - a) / h + 1e-9)) + 1
        return [a + i * h for i in range(count)]
    try:
        vals = [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"non-numeric list {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def strike_grid(text: str) -> List[float]:
    """:func:`parse_grid` restricted to positive, nondecreasing strikes."""
    vals = parse_grid(text)
    if any(k <= 0 for k in vals):
        raise argparse.ArgumentTypeError("strikes must be positive")
    if any(b < a for a, b in zip(vals, vals[1:])):
        raise argparse.ArgumentTypeError("strike grid must be sorted")
    return vals


def _positive(text: str) -> float:
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not (math.isfinite(val) and val > 0):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return val


def _pos_int(text: str) -> int:
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if val < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return val


def _model_args(p):
    p.add_argument("--sigma1", type=_positive, required=True, help="volatility at and above the barrier")
    p.add_argument("--sigma2", type=_positive, required=True, help="volatility below the barrier")
    p.add_argument("--barrier", type=_positive, default=1.0,
                   help="barrier level S*; prices are computed for S0/S*, K/S* and scaled back")


def _output_args(p, default="json"):
    p.add_argument("--format", choices=("json", "csv"), default=default)
    p.add_argument("--output", "-o", default=None, help="output file (default stdout)")


def _mc_args(p, paths=1_000_000, steps=2000):
    from .skew_walk_sim import default_workers

    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--paths", type=_pos_int, default=paths)
    p.add_argument("--steps", type=_pos_int, default=steps, help="walk steps per unit time")
    p.add_argument("--workers", type=_pos_int, default=None,
                   help="threads (default from SKEWBM_WORKERS, else 1)")
    p.set_defaults(_default_workers=default_workers)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skewbm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("price", help="price one European option")
    _model_args(p)
    p.add_argument("--alpha1", type=float, default=None, help="displacement above the barrier (displaced engine)")
    p.add_argument("--s0", type=_positive, required=True)
    p.add_argument("--strike", type=_positive, required=True)
    p.add_argument("--t", type=_positive, required=True)
    p.add_argument("--kind", choices=("call", "put"), default="call")
    p.add_argument("--engine", choices=("exact", "generic", "mc", "bs_approx", "bs_approx_adjusted", "displaced"),
                   default="exact")
    _mc_args(p)
    _output_args(p)

    p = sub.add_parser("smile", help="implied volatility across strikes")
    _model_args(p)
    p.add_argument("--s0", type=_positive, default=1.0)
    p.add_argument("--t", type=_positive, required=True)
    p.add_argument("--strikes", type=strike_grid, required=True, help="start:stop:step or comma list")
    p.add_argument("--engine", choices=("exact", "bs_approx", "bs_approx_adjusted"), default="exact")
    _output_args(p, default="csv")

    p = sub.add_parser("density", help="evaluate a joint density on a grid")
    p.add_argument("--which", choices=("psi", "phi", "phi_occupation", "trivariate"), default="psi")
    p.add_argument("--p", type=float, required=True, help="skew parameter in (0, 1)")
    p.add_argument("--t", type=_positive, required=True, help="horizon T")
    p.add_argument("--m1", type=float, default=0.0)
    p.add_argument("--m2", type=float, default=0.0)
    p.add_argument("--tau", type=parse_grid, default=None, help="grid for the last zero time")
    p.add_argument("--v", type=parse_grid, default=None, help="grid for V (psi, phi) or U (phi_occupation, trivariate)")
    p.add_argument("--x", type=parse_grid, required=True)
    p.add_argument("--l", type=parse_grid, required=True)
    _output_args(p, default="csv")

    p = sub.add_parser("simulate", help="simulate skew random walk functionals")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--t", type=_positive, default=1.0)
    p.add_argument("--m1", type=float, default=0.0)
    p.add_argument("--m2", type=float, default=0.0)
    p.add_argument("--zero-correction", action="store_true")
    p.add_argument("--summary", action="store_true", help="emit means and standard errors instead of paths")
    _mc_args(p, paths=10_000)
    _output_args(p, default="csv")

    p = sub.add_parser("validate", help="run the analytic-versus-oracle checks")
    p.add_argument("--quick", action="store_true", help="smaller Monte Carlo samples")
    _mc_args(p, paths=400_000)
    _output_args(p, default="csv")

    p = sub.add_parser("approx", help="Black-Scholes approximation and its adjustment")
    _model_args(p)
    p.add_argument("--strike", type=_positive, required=True)
    p.add_argument("--t", type=_positive, required=True)
    _output_args(p)
    return parser


def _workers(args) -> int:
    return args.workers if args.workers is not None else args._default_workers()


def _header(command: str) -> dict:
    return {"schema_version": SCHEMA_VERSION, "command": command}


# ---------------------------------------------------------------------------
# subcommands


def cmd_price(args) -> str:
    from .exact_pricer import OptionSpec, generic_quadrature_price, price
    from .lvm_map import TwoValuedVol

    H = args.barrier
    spec = OptionSpec(args.s0 / H, args.strike / H, args.t, args.kind)
    vol = TwoValuedVol(args.sigma1, args.sigma2)
    se = None
    if args.engine == "exact":
        res = price(spec, vol)
        value, method, err = res.price, res.method, res.err_estimate
    elif args.engine == "generic":
        res = generic_quadrature_price(spec, vol)
        value, method, err = res.price, res.method, res.err_estimate
    elif args.engine == "mc":
        from .skew_walk_sim import lvm_walk_config, mc_price

        cfg = lvm_walk_config(vol, args.t, n=args.steps, paths=args.paths, seed=args.seed, workers=_workers(args))
        value, se = mc_price(spec, vol, cfg)
        method, err = "monte_carlo", 3.0 * se
    elif args.engine == "displaced":
        from .displaced_pricer import DisplacedParams, displaced_knock_in_call

        if args.kind != "call":
            raise DomainError("the displaced engine prices calls only")
        res = displaced_knock_in_call(spec.S0, spec.K, spec.T, DisplacedParams(args.sigma1, args.sigma2, args.alpha1 or 0.0))
        value, method, err = res.price, res.method, res.err_estimate
    else:
        from .bs_approx import adjusted_prices

        ap = adjusted_prices(spec.K, spec.T, vol, S0=spec.S0)
        adjusted = args.engine == "bs_approx_adjusted"
        if args.kind == "call":
            value = ap.call_adjusted if adjusted else ap.call_raw
        else:
            value = ap.put_adjusted if adjusted else ap.put_raw
        method, err = args.engine, 0.0
    out = _header("price")
    out.update({
        "s0": args.s0, "strike": args.strike, "t": args.t, "kind": args.kind,
        "sigma1": args.sigma1, "sigma2": args.sigma2, "barrier": H, "engine": args.engine,
        "price": value * H, "method": method, "err_estimate": err * H,
    })
    if se is not None:
        out["std_error"] = se * H
    if args.format == "csv":
        cols = [k for k in out if k not in ("schema_version", "command")]
        return dumps_csv(cols, [[out[c] for c in cols]])
    return dumps_json(out)


def cmd_smile(args) -> str:
    from .exact_pricer import smile
    from .lvm_map import TwoValuedVol

    H = args.barrier
    vol = TwoValuedVol(args.sigma1, args.sigma2)
    strikes = [k / H for k in args.strikes]
    rows = smile(strikes, args.s0 / H, args.t, vol, engine=args.engine)
    table = [(k * H, pr * H, iv, args.engine) for k, pr, iv in rows]
    if args.format == "csv":
        return dumps_csv(["strike", "price", "implied_vol", "engine"], table)
    out = _header("smile")
    out.update({"s0": args.s0, "t": args.t, "sigma1": args.sigma1, "sigma2": args.sigma2, "barrier": H,
                "engine": args.engine,
                "rows": [{"strike": k, "price": pr, "implied_vol": iv} for k, pr, iv, _ in table]})
    return dumps_json(out)


def cmd_density(args) -> str:
    from . import sbm_density as sd

    params = sd.SkewParams(args.p, args.m1, args.m2, args.t)
    rows = []
    if args.which == "trivariate":
        if args.v is None:
            raise DomainError("--v (occupation U grid) is required")
        cols = ["u", "x", "l", "value"]
        for u in args.v:
            for x in args.x:
                for l in args.l:
                    rows.append((u, x, l, sd.trivariate_rho(u, x, l, args.p, args.t)))
    else:
        if args.tau is None or args.v is None:
            raise DomainError("--tau and --v grids are required")
        second = "u" if args.which == "phi_occupation" else "v"
        cols = ["tau", second, "x", "l", "value"]
        for t in args.tau:
            for v in args.v:
                for x in args.x:
                    for l in args.l:
                        if args.which == "psi":
                            val = sd.psi(t, v, x, l, args.p, args.t)
                        elif args.which == "phi":
                            val = sd.phi(t, v, x, l, params)
                        else:
                            val = sd.phi_occupation(t, v, x, l, params)
                        rows.append((t, v, x, l, val))
    if args.format == "csv":
        return dumps_csv(cols, rows)
    out = _header("density")
    out.update({"which": args.which, "p": args.p, "t": args.t, "m1": args.m1, "m2": args.m2,
                "columns": cols, "rows": [list(r) for r in rows]})
    return dumps_json(out)


def cmd_simulate(args) -> str:
    from .skew_walk_sim import WalkConfig, simulate_all

    cfg = WalkConfig(n=args.steps, T=args.t, p=args.p, m1=args.m1, m2=args.m2, seed=args.seed,
                     paths=args.paths, workers=_workers(args), zero_correction=args.zero_correction)
    f = simulate_all(cfg)
    names = ("tau", "v", "u", "l", "x_T")
    arrays = [f.tau, f.v, f.u, f.l, f.x_T]
    if args.summary:
        stats = {nm: {"mean": float(np.mean(a)), "std_error": float(np.std(a, ddof=1) / math.sqrt(len(a)))}
                 for nm, a in zip(names, arrays)}
        if args.format == "csv":
            return dumps_csv(["functional", "mean", "std_error"],
                             [(nm, s["mean"], s["std_error"]) for nm, s in stats.items()])
        out = _header("simulate")
        out.update({"config": _cfg_dict(cfg), "summary": stats})
        return dumps_json(out)
    if args.format == "csv":
        return dumps_csv(list(names), zip(*arrays))
    out = _header("simulate")
    out.update({"config": _cfg_dict(cfg), "paths": {nm: a.tolist() for nm, a in zip(names, arrays)}})
    return dumps_json(out)


def _cfg_dict(cfg) -> dict:
    return {"n": cfg.n, "T": cfg.T, "p": cfg.p, "m1": cfg.m1, "m2": cfg.m2, "seed": cfg.seed,
            "paths": cfg.paths, "workers": cfg.workers, "zero_correction": cfg.zero_correction}


def cmd_validate(args) -> tuple:
    from .validation import run_checks

    paths = min(args.paths, 100_000) if args.quick else args.paths
    results = run_checks(paths=paths, n=args.steps, seed=args.seed, workers=_workers(args))
    ok = all(r.passed for r in results)
    if args.format == "csv":
        text = dumps_csv(["check", "passed", "value", "reference", "tolerance", "seconds"],
                         [(r.name, r.passed, r.value, r.reference, r.tolerance, r.seconds) for r in results])
    else:
        out = _header("validate")
        out.update({"passed": ok, "checks": [r.as_dict() for r in results]})
        text = dumps_json(out)
    return text, (0 if ok else EXIT_VALIDATION)


def cmd_approx(args) -> str:
    from .bs_approx import adjusted_prices
    from .lvm_map import TwoValuedVol

    H = args.barrier
    ap = adjusted_prices(args.strike / H, args.t, TwoValuedVol(args.sigma1, args.sigma2))
    out = _header("approx")
    out.update({"strike": args.strike, "t": args.t, "sigma1": args.sigma1, "sigma2": args.sigma2, "barrier": H,
                "call_raw": ap.call_raw * H, "put_raw": ap.put_raw * H,
                "call_adjusted": ap.call_adjusted * H, "put_adjusted": ap.put_adjusted * H,
                "a_cl": ap.a_cl, "a_pt": ap.a_pt})
    if args.format == "csv":
        cols = [k for k in out if k not in ("schema_version", "command")]
        return dumps_csv(cols, [[out[c] for c in cols]])
    return dumps_json(out)


COMMANDS = {
    "price": cmd_price,
    "smile": cmd_smile,
    "density": cmd_density,
    "simulate": cmd_simulate,
    "validate": cmd_validate,
    "approx": cmd_approx,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = COMMANDS[args.command](args)
    except (DomainError, ConfigError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DOMAIN
    except ConvergenceError as exc:
        sys.stderr.write(f"error: {exc} (best estimate {exc.value!r}, error {exc.err_estimate!r})\n")
        return EXIT_CONVERGENCE
    code = 0
    if isinstance(result, tuple):
        result, code = result
    _emit(result, args.output)
    return code


if __name__ == "__main__":
    sys.exit(main())
