"""Command-line front end: ``mpec {sweep,verify,curve,census}``.

Exit codes: 0 success, 1 runtime failure or verification violation,
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import random
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

log = logging.getLogger("mpec")


class UsageError(Exception):
    pass


def _load_config(args):
    from .harness import ConfigError, SimConfig

    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError("config must be a JSON object")
    # flag > file > default
    for key in ("seed", "mode", "workers"):
        v = getattr(args, key, None)
        if v is not None:
            data[key] = v
    if getattr(args, "decoder", None):
        data["decoder"] = args.decoder
        data["decoders"] = [args.decoder]
    try:
        return SimConfig.from_dict(data)
    except ConfigError as exc:
        raise UsageError(str(exc)) from None


def cmd_sweep(args) -> int:
    from .harness import run_manifest, run_sweep, tallies_to_csv

    config = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc)
    tallies = run_sweep(config)
    csv_path = out / "results.csv"
    csv_path.write_text(tallies_to_csv(tallies))
    manifest = run_manifest(config, {"csv": str(csv_path)}, started)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True))
    print(f"wrote {len(tallies)} rows to {csv_path}")
    return 0


def cmd_verify(args) -> int:
    from . import verifier

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report_path = out / f"verify-{args.suite}.json"
    if args.suite == "boxcases":
        rep = verifier.enumerate_box_cases(args.max_weight, max_match=args.max_match)
        report = json.loads(rep.to_json())
        ok = rep.ok
        print(rep.summary())
    elif args.suite == "golden":
        cases = {}
        ok = True
        for cid in verifier.GOLDEN:
            res = verifier.replay_golden_case(cid)
            ok &= res.ok
            cases[cid] = {"expected": res.expected, "physical": res.physical,
                          "abstract": res.abstract, "ok": res.ok, "traces": res.traces}
            print(f"{cid}: {'ok' if res.ok else 'MISMATCH'} physical={res.physical}")
        report = {"cases": cases}
    else:
        rng = random.Random(args.seed if args.seed is not None else 0)
        failures = []
        for n in range(args.schedules):
            sched = verifier.random_schedule(args.chain_length, rng)
            res = verifier.chain_success_check(sched, rng)
            if not res.ok:
                failures.append({"schedule": sched, "box": res.failed_box, "reason": res.reason})
        ok = not failures
        report = {"chain_length": args.chain_length, "schedules": args.schedules,
                  "failures": failures}
        print(f"{args.schedules} chains of {args.chain_length} boxes: {len(failures)} failure(s)")
    report_path.write_text(json.dumps(report, indent=1, sort_keys=True))
    if not ok:
        print(f"violations found, report: {report_path}", file=sys.stderr)
        return 1
    return 0


def cmd_curve(args) -> int:
    import csv
    import io

    from .harness import combine_polynomial, read_rate_table

    try:
        table = read_rate_table(Path(args.rtable).read_text())
    except (OSError, KeyError, ValueError) as exc:
        raise UsageError(f"cannot read r-table {args.rtable}: {exc}") from None
    if not table:
        raise UsageError("r-table has no fixed-weight rows")
    N = args.census
    if N is None:
        from .circuit import build_level2_cnot_exrec

        N = build_level2_cnot_exrec().census
    if not 0 < args.p_min <= args.p_max <= 1:
        raise UsageError("need 0 < p-min <= p-max <= 1")
    ps = np.geomspace(args.p_min, args.p_max, args.points)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["decoder", "p", "p2", "lower", "upper"])
    for dec in sorted(table):
        for p in ps:
            try:
                pt = combine_polynomial(table[dec], N, float(p), args.truncation)
            except KeyError as exc:
                raise UsageError(f"{dec}: {exc.args[0]}") from None
            w.writerow([dec, f"{p:.6g}", f"{pt.p2:.12g}", f"{pt.lower:.12g}", f"{pt.upper:.12g}"])
    if args.out:
        Path(args.out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return 0


def cmd_census(args) -> int:
    from .circuit import BUILDER_VERSION, REFERENCE_LOCATION_COUNT, build_level2_cnot_exrec, location_census

    c = build_level2_cnot_exrec()
    report = {
        "census": location_census(c),
        "qubits": c.qubit_count,
        "reference_total": REFERENCE_LOCATION_COUNT,
        "ratio_to_reference": c.census / REFERENCE_LOCATION_COUNT,
        "builder_version": BUILDER_VERSION,
        "circuit_hash": c.content_hash,
    }
    text = json.dumps(report, indent=1)
    if args.out:
        Path(args.out).write_text(text)
        if args.dump_circuit:
            Path(args.out).with_suffix(".circuit.json").write_text(json.dumps(c.to_json()))
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mpec", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sweep", help="Monte Carlo sweep over p or i")
    sp.add_argument("--config")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--decoder", choices=("standard", "mpec"))
    sp.add_argument("--mode", choices=("direct", "fixed"))
    sp.add_argument("--workers", type=int)
    sp.add_argument("--out", default="results")
    sp.set_defaults(func=cmd_sweep)

    vp = sub.add_parser("verify", help="fault-tolerance suites")
    vp.add_argument("suite", choices=("boxcases", "golden", "chain"))
    vp.add_argument("--out", default="results")
    vp.add_argument("--seed", type=int)
    vp.add_argument("--max-weight", type=int, default=4)
    vp.add_argument("--max-match", type=int, default=3, help="largest flag match searched")
    vp.add_argument("--chain-length", type=int, default=100)
    vp.add_argument("--schedules", type=int, default=1000)
    vp.set_defaults(func=cmd_verify)

    cp = sub.add_parser("curve", help="failure polynomial from an r-table")
    cp.add_argument("rtable")
    cp.add_argument("--p-min", type=float, default=1e-6)
    cp.add_argument("--p-max", type=float, default=1e-3)
    cp.add_argument("--points", type=int, default=25)
    cp.add_argument("--truncation", type=int, default=12)
    cp.add_argument("--census", type=int)
    cp.add_argument("--out")
    cp.set_defaults(func=cmd_curve)

    kp = sub.add_parser("census", help="location counts of the exRec circuit")
    kp.add_argument("--out")
    kp.add_argument("--dump-circuit", action="store_true")
    kp.set_defaults(func=cmd_census)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"mpec: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        log.exception("command failed")
        print(f"mpec: failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
