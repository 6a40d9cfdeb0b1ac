"""Command-line front end.

Exit status: 0 success, 1 numerical non-convergence (best-found result is
still written), 2 usage or input error.

Sweep CSV columns, in order::

    gbar_db,scheme,n_codes,n_power_levels,masa,p_no_tx,c_ora,c_opra,converged
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

from . import __version__
from .baselines import art_two_region, capacity_opra
from .design import DesignSpec, design, rounded_result
from .fading import Rayleigh, db_to_linear
from .policy import (
    PolicyFormatError,
    PowerKind,
    load_policy,
    metrics,
    policy_to_dict,
)
from .sim import SimConfig, simulate

SWEEP_COLUMNS = [
    "gbar_db", "scheme", "n_codes", "n_power_levels",
    "masa", "p_no_tx", "c_ora", "c_opra", "converged",
]
DESIGN_SCHEMES = ("constant", "discrete", "continuous")
ALL_SCHEMES = DESIGN_SCHEMES + ("c-ora", "c-opra", "art2")

EXIT_OK, EXIT_NONCONVERGED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def parse_gbar_db(text: str) -> list[float]:
    """``"10"``, ``"0,5,10"`` or an inclusive range ``"start:stop:step"``."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3:
                raise UsageError(f"range must be start:stop:step, got {text!r}")
            start, stop, step = parts
            if not step > 0:
                raise UsageError(f"range step must be > 0, got {step}")
            n = math.floor((stop - start) / step + 1e-9) + 1
            values = [round(start + i * step, 9) for i in range(max(n, 0))]
        else:
            values = [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"cannot parse --gbar-db {text!r}") from None
    if not values:
        raise UsageError(f"--gbar-db {text!r} is empty")
    return values


def _int_list(text: str, flag: str) -> list[int]:
    try:
        values = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"{flag} expects integers, got {text!r}") from None
    if not values or min(values) < 1:
        raise UsageError(f"{flag} values must be >= 1, got {text!r}")
    return values


def _k_list(text: str | None) -> list[float] | None:
    if text is None:
        return None
    out = []
    for p in text.split(","):
        p = p.strip().lower()
        if p in ("inf", "infinity", "∞"):
            out.append(math.inf)
            continue
        try:
            k = int(p)
        except ValueError:
            raise UsageError(f"-K expects integers or 'inf', got {text!r}") from None
        if k < 1:
            raise UsageError(f"-K values must be >= 1, got {k}")
        out.append(k)
    return out


def _schemes(values: list[str] | None, default: list[str]) -> list[str]:
    out = []
    for v in values or default:
        for s in v.split(","):
            s = s.strip()
            if s not in ALL_SCHEMES:
                raise UsageError(f"unknown scheme {s!r}; choose from {', '.join(ALL_SCHEMES)}")
            out.append(s)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="acmlink",
        description="Design and evaluate rate/power link-adaptation schemes for block fading.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, schemes_help):
        p.add_argument("--scheme", action="append", help=schemes_help)
        p.add_argument("-N", dest="n_codes", default="1", help="number of codes (comma list in sweep)")
        p.add_argument("-K", dest="n_power_levels", default=None,
                       help="power levels per code, integer or 'inf' (comma list in sweep)")
        p.add_argument("--gbar-db", required=True, help="average SNR in dB")
        p.add_argument("--outage-cap", type=float, default=None,
                       help="upper bound on the probability of no transmission")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--restarts", type=int, default=8, help="optimizer restarts")
        p.add_argument("--out", default="-", help="output file ('-' for stdout)")

    p = sub.add_parser("design", help="optimize one scheme, write its policy as JSON")
    common(p, "constant | discrete | continuous")
    p.add_argument("--format", choices=["json", "csv"], default="json")

    p = sub.add_parser("sweep", help="tabulate schemes over a range of average SNR")
    common(p, "any of " + ", ".join(ALL_SCHEMES) + " (repeat or comma-separate)")
    p.add_argument("--format", choices=["json", "csv"], default="csv")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")

    p = sub.add_parser("simulate", help="Monte-Carlo check of a policy file or inline design")
    p.add_argument("--policy", help="policy JSON written by 'design'")
    common(p, "inline design when no --policy is given")
    p.set_defaults(gbar_db=None)
    for action in p._actions:
        if action.dest == "gbar_db":
            action.required = False
    p.add_argument("--blocks", type=int, default=1_000_000)
    p.add_argument("--format", choices=["json", "csv"], default="json")

    p = sub.add_parser("compare", help="side-by-side throughput and outage of schemes")
    common(p, "two schemes (repeat or comma-separate); 'art2' alone compares against constant")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    return parser


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _design_spec(scheme: str, n: int, k, args) -> DesignSpec:
    try:
        return DesignSpec(
            PowerKind(scheme), n, k, outage_cap=args.outage_cap,
            restarts=args.restarts, seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _single(values: list, flag: str):
    if len(values) != 1:
        raise UsageError(f"{flag} takes a single value here")
    return values[0]


def _k_for(scheme: str, ks: list | None) -> list:
    if scheme == "constant":
        if ks not in (None, [1]):
            raise UsageError("constant power uses exactly one power level (K = 1)")
        return [None]
    if scheme == "continuous":
        if ks not in (None, [math.inf]):
            raise UsageError("continuous power uses K = inf")
        return [None]
    if ks is None:
        raise UsageError("discrete power needs -K")
    if math.inf in ks:
        raise UsageError("discrete power needs a finite -K")
    return ks


def _k_label(k) -> str:
    return "inf" if k == math.inf else str(int(k))


def _emit(text: str, out: str) -> None:
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def design_document(result, model, outage_cap: float | None = None) -> dict:
    """Design output: the policy schema plus masa, lambda and solver diagnostics.

    The reported metrics are those of the policy as serialized, so reading it
    back reproduces them exactly.
    """
    result = rounded_result(result, model, outage_cap)
    policy = result.policy
    doc = policy_to_dict(policy, model)
    doc.update({
        "n_codes": policy.n_codes,
        "n_power_levels": _k_label(
            math.inf if policy.kind is PowerKind.CONTINUOUS else policy.n_power_levels
        ),
        "masa": doc["ase"],
        "lambda": result.lam,
        "avg_power": metrics(policy, model).avg_power,
        "solver": result.report.as_dict(),
    })
    return doc


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_design(args) -> int:
    if args.format != "json":
        raise UsageError("design writes JSON only")
    scheme = _single(_schemes(args.scheme, ["constant"]), "--scheme")
    if scheme not in DESIGN_SCHEMES:
        raise UsageError(f"design needs one of {', '.join(DESIGN_SCHEMES)}, got {scheme!r}")
    n = _single(_int_list(args.n_codes, "-N"), "-N")
    k = _single(_k_for(scheme, _k_list(args.n_power_levels)), "-K")
    gbar_db = _single(parse_gbar_db(args.gbar_db), "--gbar-db")
    model = Rayleigh(db_to_linear(gbar_db))
    result = design(_design_spec(scheme, n, k, args), model)
    _emit(_dumps(design_document(result, model, args.outage_cap)), args.out)
    return EXIT_OK if result.converged else EXIT_NONCONVERGED


@dataclass(frozen=True)
class _Point:
    gbar_db: float
    scheme: str
    n_codes: int | None
    k: float | None
    outage_cap: float | None
    restarts: int
    seed: int


@lru_cache(maxsize=None)
def _capacities(gbar_db: float):
    return capacity_opra(Rayleigh(db_to_linear(gbar_db)))


def _sweep_row(pt: _Point) -> dict:
    model = Rayleigh(db_to_linear(pt.gbar_db))
    cap = _capacities(pt.gbar_db)
    row = {
        "gbar_db": f"{pt.gbar_db:.6f}",
        "scheme": pt.scheme,
        "n_codes": "" if pt.n_codes is None else pt.n_codes,
        "n_power_levels": "" if pt.k is None else _k_label(pt.k),
        "c_ora": cap.c_ora,
        "c_opra": cap.c_opra,
    }
    try:
        if pt.scheme == "c-ora":
            row.update(masa=cap.c_ora, p_no_tx=0.0, converged=True)
        elif pt.scheme == "c-opra":
            row.update(masa=cap.c_opra, p_no_tx=float(model.cdf(cap.gamma_cut)), converged=True)
        elif pt.scheme == "art2":
            art = art_two_region(model, restarts=pt.restarts, seed=pt.seed)
            row.update(masa=art.art, p_no_tx=0.0, converged=art.report.converged)
        else:
            spec = DesignSpec(PowerKind(pt.scheme), pt.n_codes, pt.k,
                              outage_cap=pt.outage_cap, restarts=pt.restarts, seed=pt.seed)
            res = design(spec, model)
            row.update(masa=res.masa, p_no_tx=res.metrics.p_no_tx, converged=res.converged)
    except Exception as exc:  # noqa: BLE001 - a failed point is flagged, not fatal
        row.update(masa="", p_no_tx="", converged=False, error=str(exc))
    return row


def sweep_points(args) -> list[_Point]:
    schemes = _schemes(args.scheme, ["constant"])
    ns = _int_list(args.n_codes, "-N")
    ks = _k_list(args.n_power_levels)
    grid = parse_gbar_db(args.gbar_db)
    points = []
    for scheme in schemes:
        if scheme in ("c-ora", "c-opra"):
            combos = [(None, None)]
        elif scheme == "art2":
            combos = [(2, 1)]
        else:
            k_values = _k_for(scheme, ks)
            combos = [
                (n, 1 if scheme == "constant" else (math.inf if scheme == "continuous" else k))
                for n in ns for k in k_values
            ]
        for n, k in combos:
            for g in grid:
                points.append(_Point(g, scheme, n, k, args.outage_cap, args.restarts, args.seed))
    return points


def _format_cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def cmd_sweep(args) -> int:
    points = sweep_points(args)
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_row, points))
    else:
        rows = [_sweep_row(p) for p in points]
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            writer.writerow([_format_cell(row[c]) for c in SWEEP_COLUMNS])
        _emit(buf.getvalue(), args.out)
    else:
        _emit(_dumps(rows), args.out)
    return EXIT_OK if all(r["converged"] for r in rows) else EXIT_NONCONVERGED


def cmd_simulate(args) -> int:
    if args.format != "json":
        raise UsageError("simulate writes JSON only")
    if args.blocks < 1:
        raise UsageError("--blocks must be >= 1")
    status = EXIT_OK
    if args.policy:
        try:
            with open(args.policy, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read policy file: {exc}") from None
        try:
            policy, model = load_policy(text)
        except PolicyFormatError as exc:
            raise UsageError(f"{args.policy}: {exc}") from None
    else:
        if args.gbar_db is None:
            raise UsageError("simulate needs --policy or an inline design (--scheme, -N, -K, --gbar-db)")
        scheme = _single(_schemes(args.scheme, ["constant"]), "--scheme")
        if scheme not in DESIGN_SCHEMES:
            raise UsageError(f"inline design needs one of {', '.join(DESIGN_SCHEMES)}")
        n = _single(_int_list(args.n_codes, "-N"), "-N")
        k = _single(_k_for(scheme, _k_list(args.n_power_levels)), "-K")
        model = Rayleigh(db_to_linear(_single(parse_gbar_db(args.gbar_db), "--gbar-db")))
        result = design(_design_spec(scheme, n, k, args), model)
        policy = rounded_result(result, model, args.outage_cap).policy
        status = EXIT_OK if result.converged else EXIT_NONCONVERGED
    m = metrics(policy, model)
    report = simulate(SimConfig(policy, model, args.blocks, args.seed))
    doc = {
        "policy": policy_to_dict(policy, model),
        "analytic": {"ase": m.ase, "avg_power": m.avg_power, "p_no_tx": m.p_no_tx},
        "simulation": {**report.as_dict(), "seed": args.seed},
    }
    _emit(_dumps(doc), args.out)
    return status


def _compare_row(scheme: str, n: int, k, model, args) -> tuple[dict, bool]:
    gbar_db = model.gbar_db
    if scheme == "art2":
        art = art_two_region(model, restarts=args.restarts, seed=args.seed)
        return {
            "scheme": "art2", "n_codes": 2, "n_power_levels": "1",
            "throughput": art.art, "p_no_tx": 0.0, "p_outage": art.p_outage,
            "zero_outage": False,
        }, art.report.converged
    if scheme in ("c-ora", "c-opra"):
        cap = _capacities(round(gbar_db, 9))
        if scheme == "c-ora":
            return {"scheme": scheme, "n_codes": None, "n_power_levels": None,
                    "throughput": cap.c_ora, "p_no_tx": 0.0, "p_outage": 0.0,
                    "zero_outage": True}, True
        return {"scheme": scheme, "n_codes": None, "n_power_levels": None,
                "throughput": cap.c_opra, "p_no_tx": float(model.cdf(cap.gamma_cut)),
                "p_outage": 0.0, "zero_outage": True}, True
    kk = _single(_k_for(scheme, k), "-K")
    res = design(_design_spec(scheme, n, kk, args), model)
    k_out = math.inf if scheme == "continuous" else (1 if scheme == "constant" else kk)
    return {
        "scheme": scheme, "n_codes": n, "n_power_levels": _k_label(k_out),
        "throughput": res.masa, "p_no_tx": res.metrics.p_no_tx, "p_outage": 0.0,
        "zero_outage": True,
    }, res.converged


def cmd_compare(args) -> int:
    if args.format != "json":
        raise UsageError("compare writes JSON only")
    schemes = _schemes(args.scheme, [])
    if schemes == ["art2"]:
        schemes = ["constant", "art2"]
    if len(schemes) != 2:
        raise UsageError("compare needs two schemes, or 'art2' alone")
    n = _single(_int_list(args.n_codes, "-N"), "-N")
    ks = _k_list(args.n_power_levels)
    model = Rayleigh(db_to_linear(_single(parse_gbar_db(args.gbar_db), "--gbar-db")))
    rows, ok = [], True
    for scheme in schemes:
        k = ks if scheme == "discrete" else None
        row, conv = _compare_row(scheme, n, k, model, args)
        rows.append(row)
        ok &= conv
    base, other = rows
    doc = {
        "gbar_db": round(model.gbar_db, 6),
        "rows": rows,
        "delta": {
            key: other[key] - base[key] for key in ("throughput", "p_no_tx", "p_outage")
        },
    }
    _emit(_dumps(doc), args.out)
    return EXIT_OK if ok else EXIT_NONCONVERGED


COMMANDS = {
    "design": cmd_design,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.error(str(exc))  # exits with status 2
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
