"""Command-line entry point.

Exit codes: 0 for any successful determination (a witness, a certified
distinctness, a count, or an experiment whose checks all match), 1 when an
experiment check mismatches, 2 for usage errors and malformed input.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Sequence

from . import __version__
from .autos import AutError, PhiP, RingInduced, parse_aut
from .matgroups import GroupError, GroupTag, parse_matrix, truncated_borel
from .rings import LaurentRing, PolyRing, RingError, parse_ring
from .spectra import (
    REGISTRY,
    SCHEMA_VERSION,
    SpectraError,
    checksum,
    make_config,
    read_config,
    run_experiment,
    write_report,
)
from .twisted import TwistedError, additive_class_data, brute_force_reidemeister, decide

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE = 0, 1, 2

# experiment parameters exposed as flags on ``verify``
PARAM_FLAGS = {
    "q": int,
    "p": int,
    "D": int,
    "n": int,
    "i_max": int,
    "samples": int,
    "support": int,
    "n_max": int,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _common(suppress: bool) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    default = argparse.SUPPRESS if suppress else None
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS if suppress else 0, help="RNG seed (default 0)")
    p.add_argument("--json", action="store_true", default=argparse.SUPPRESS if suppress else False,
                   help="print a JSON document instead of text")
    p.add_argument("--out", default=default, help="also write the JSON document to this path")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="reidemeister", description=__doc__.splitlines()[0], parents=[_common(False)])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _common(True)

    v = sub.add_parser("verify", parents=[common], help="run a named experiment and check its claims")
    v.add_argument("experiment", choices=sorted(REGISTRY))
    v.add_argument("--config", help="TOML config; flags win over its values")
    for name, typ in PARAM_FLAGS.items():
        v.add_argument(f"--{name.replace('_', '-')}", dest=f"param_{name}", type=typ, default=None)

    c = sub.add_parser("classes", parents=[common], help="twisted classes of an additive automorphism on a window")
    c.add_argument("--ring", required=True, help="poly:<field> or laurent:<field>")
    c.add_argument("--aut", required=True, help="ring:... or phiP:... acting on U_2")
    c.add_argument("--window", type=int, required=True, help="degree bound D (support [-D, D] for Laurent)")

    t = sub.add_parser("twisted", parents=[common], help="decide whether b and b' are twisted conjugate")
    t.add_argument("--ring", required=True)
    t.add_argument("--aut", required=True)
    t.add_argument("--b", required=True, help="matrix text, e.g. (1,0;0,t)")
    t.add_argument("--bprime", required=True)
    t.add_argument("--window", type=int, default=None)

    o = sub.add_parser("oracle", parents=[common], help="brute-force Reidemeister number on a truncated group")
    o.add_argument("--group", required=True, help="TAG:n:D:field, e.g. Borel:2:1:fq:3")
    o.add_argument("--aut", required=True)

    r = sub.add_parser("report", parents=[common], help="run the experiment described by a TOML config")
    r.add_argument("--config", required=True)
    return parser


# ---------------------------------------------------------------------------
# Subcommands


def _envelope(command: str, inputs: dict, result: dict, seed: int, elapsed: float) -> dict:
    body = {"command": command, "config": {**inputs, "seed": seed}, "result": result}
    return {
        "schema_version": SCHEMA_VERSION,
        "library_version": __version__,
        **body,
        "checksum": checksum(body),
        "timing": {"wall_seconds": round(elapsed, 3)},
    }


def cmd_verify(args) -> tuple[dict, int, str]:
    params, seed, out = {}, args.seed, args.out
    if args.config:
        cfg = read_config(args.config)
        if cfg.name != args.experiment:
            raise UsageError(f"config names {cfg.name!r}, not {args.experiment!r}")
        params, out = dict(cfg.params), out or cfg.out
        if "seed" not in args.explicit:
            seed = cfg.seed
    for name in PARAM_FLAGS:
        val = getattr(args, f"param_{name}")
        if val is not None:
            params[name] = val
    config = make_config(args.experiment, params, seed, out)
    return _run_config(config)


def cmd_report(args) -> tuple[dict, int, str]:
    config = read_config(args.config)
    if "seed" in args.explicit:
        config.seed = args.seed
    if args.out:
        config.out = args.out
    return _run_config(config)


def _run_config(config) -> tuple[dict, int, str]:
    report = run_experiment(config)
    doc = report.to_json()
    if config.out:
        write_report(report, config.out)
    lines = [f"{config.name}: {'all checks match' if report.all_match else 'MISMATCH'}"]
    for c in report.checks:
        lines.append(f"  [{'ok' if c.match else 'FAIL'}] {c.name}: expected {c.expected}, computed {c.computed}")
    return doc, EXIT_OK if report.all_match else EXIT_MISMATCH, "\n".join(lines)


def _additive_map(psi):
    if isinstance(psi, RingInduced):
        return psi.alpha
    if isinstance(psi, PhiP):
        return psi.additive_map
    raise UsageError(f"{psi.describe()} is not an additive automorphism of U_2")


def cmd_classes(args) -> tuple[dict, int, str]:
    t0 = time.perf_counter()
    R = parse_ring(args.ring)
    if not isinstance(R, (PolyRing, LaurentRing)):
        raise UsageError("classes needs a polynomial or Laurent ring over a finite field")
    if args.window < 0:
        raise UsageError("window must be non-negative")
    psi = parse_aut(args.aut, R, 2, GroupTag.UNIPOTENT)
    data = additive_class_data(_additive_map(psi), R, args.window)
    result = {"count": data.count, "corank": data.corank, "labels": data.labels()}
    inputs = {"ring": R.spec(), "aut": psi.describe(), "window": args.window}
    doc = _envelope("classes", inputs, result, args.seed, time.perf_counter() - t0)
    text = f"{data.count} twisted classes on the window (corank {data.corank})"
    return doc, EXIT_OK, text


def cmd_twisted(args) -> tuple[dict, int, str]:
    t0 = time.perf_counter()
    R = parse_ring(args.ring)
    b_probe = parse_matrix(args.b, R, GroupTag.BOREL)
    psi = parse_aut(args.aut, R, b_probe.n, GroupTag.UNIPOTENT)
    tag = GroupTag(psi.tag)
    b = parse_matrix(args.b, R, tag)
    bp = parse_matrix(args.bprime, R, tag)
    report = decide(b, bp, psi, args.window)
    result = report.to_json()
    inputs = {"ring": R.spec(), "aut": psi.describe(), "b": b.to_text(), "bprime": bp.to_text()}
    doc = _envelope("twisted", inputs, result, args.seed, time.perf_counter() - t0)
    if report.verdict == "witness":
        text = f"twisted conjugate: g = {report.witness} satisfies g b psi(g)^-1 = b'"
    else:
        text = f"distinct ({report.obstruction.get('kind')} obstruction)"
    return doc, EXIT_OK, text


def parse_group_spec(text: str):
    """``TAG:n:D:field`` for the truncated group over field[t], entries of degree <= D."""
    parts = text.split(":", 3)
    if len(parts) != 4:
        raise UsageError(f"group spec {text!r} is not TAG:n:D:field")
    tag_s, n_s, d_s, field_s = parts
    try:
        tag = GroupTag(tag_s)
        n, D = int(n_s), int(d_s)
    except ValueError as exc:
        raise UsageError(f"bad group spec {text!r}: {exc}") from exc
    F = parse_ring(field_s)
    return truncated_borel(F, D, n, tag, cap=10**4), PolyRing(F), n, tag


def cmd_oracle(args) -> tuple[dict, int, str]:
    t0 = time.perf_counter()
    G, R, n, tag = parse_group_spec(args.group)
    psi = parse_aut(args.aut, R, n, tag)
    count, reps = brute_force_reidemeister(G, psi)
    result = {"count": count, "order": len(G), "representatives": [g.to_text() for g in reps[:50]]}
    inputs = {"group": G.name, "aut": psi.describe()}
    doc = _envelope("oracle", inputs, result, args.seed, time.perf_counter() - t0)
    return doc, EXIT_OK, f"R = {count} on {G.name} of order {len(G)}"


COMMANDS = {
    "verify": cmd_verify,
    "classes": cmd_classes,
    "twisted": cmd_twisted,
    "oracle": cmd_oracle,
    "report": cmd_report,
}


def _explicit_flags(argv: Sequence[str]) -> set[str]:
    return {a[2:].split("=", 1)[0] for a in argv if a.startswith("--")}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.explicit = _explicit_flags(argv)
    try:
        doc, code, text = COMMANDS[args.command](args)
    except (UsageError, SpectraError, RingError, GroupError, AutError, TwistedError) as exc:
        print(f"reidemeister: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.out and args.command not in ("verify", "report"):
        try:
            Path(args.out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        except OSError as exc:
            print(f"reidemeister: error: {exc}", file=sys.stderr)
            return EXIT_USAGE
    if args.json:
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        print(text)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
