"""Command-line front end.

Three subcommands: `verify` runs the check ladder over one entry or the
whole catalog, `flow` integrates one Hamiltonian flow and writes a CSV with
the conserved columns, `list` prints a one-line inventory per entry.  Exit
codes: 0 verified, 1 verification failure, 2 usage or load error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .expr import TRIALS, Rat, SingularPointError, subst
from .flow import canonical_start, export_csv, hamiltonian_vector_field, integrate
from .harness import (
    ENV_CATALOG,
    CatalogError,
    CatalogEntry,
    MUTATIONS,
    VerifyConfig,
    apply_mutations,
    emit_report,
    entry_path,
    list_entry_paths,
    load_entry,
    verify_all,
    verify_entry,
)
from .liealg import default_assignments
from .symplectic import canonical_field

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bisym",
        description="Verify catalog entries of bracket-compatible pairs and "
                    "integrate their conserved flows.",
        epilog=f"The {ENV_CATALOG} environment variable overrides the catalog directory.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run the check ladder")
    v.add_argument("--entry", metavar="ID", help="verify a single entry by id")
    v.add_argument("--all", action="store_true", help="verify every catalog entry")
    v.add_argument("--seed", type=int, default=0, help="seed for the randomized checks")
    v.add_argument("--trials", type=int, default=TRIALS,
                   help="sample points per randomized check")
    v.add_argument("--tol", type=float, default=1e-6,
                   help="conservation drift tolerance for the flow checks")
    v.add_argument("--mutate", action="append", default=[], metavar="FLAG",
                   choices=sorted(MUTATIONS),
                   help="corrupt the entry before verifying (repeatable); "
                        "flags: " + ", ".join(sorted(MUTATIONS)))
    v.add_argument("--format", choices=("json", "text"), default="text",
                   help="report serialization")
    v.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")

    f = sub.add_parser("flow", help="integrate one Hamiltonian flow to CSV")
    f.add_argument("--entry", metavar="ID", required=True)
    f.add_argument("--hamiltonian", metavar="NAME", required=True,
                   help="S1..Sn / I1, I2 on the group side, St1..Stn / It1, It2 "
                        "on the dual side")
    f.add_argument("--t", type=float, default=1.0, help="integration horizon")
    f.add_argument("--dt", type=float, default=1e-3, help="step size")
    f.add_argument("--out", metavar="CSV", required=True)

    sub.add_parser("list", help="inventory of the catalog")
    return parser


def _resolve_entry(token: str) -> CatalogEntry:
    path = Path(token)
    if path.suffix == ".json" and path.is_file():
        return load_entry(path)
    return load_entry(entry_path(token))


def _write_payload(payload: bytes, out: str | None) -> None:
    if out is None:
        sys.stdout.write(payload.decode("utf-8"))
    else:
        Path(out).write_bytes(payload)


def _cmd_verify(args) -> int:
    if bool(args.entry) == bool(args.all):
        print("verify: exactly one of --entry or --all is required", file=sys.stderr)
        return 2
    if args.mutate and args.all:
        print("verify: --mutate applies to a single --entry", file=sys.stderr)
        return 2
    config = VerifyConfig(seed=args.seed, trials=args.trials, drift_tol=args.tol)

    if args.all:
        summary = verify_all(config=config)
        _write_payload(emit_report(summary, args.format), args.out)
        if summary.load_errors:
            return 2
        return 0 if summary.ok else 1

    try:
        entry = apply_mutations(_resolve_entry(args.entry), args.mutate)
    except CatalogError as exc:
        print(f"verify: {exc}", file=sys.stderr)
        return 2
    report = verify_entry(entry, config)
    _write_payload(emit_report(report, args.format), args.out)
    return 0 if report.ok else 1


def _hamiltonian_table(entry: CatalogEntry) -> dict[str, tuple[str, object]]:
    table: dict[str, tuple[str, object]] = {}
    for k in range(entry.dim):
        table[f"S{k + 1}"] = ("group", entry.S_chart[k])
        table[f"St{k + 1}"] = ("dual_group", entry.St_chart[k])
    for prefix, side, inv in (("I", "group", entry.inv_g), ("It", "dual_group", entry.inv_gt)):
        if inv is not None:
            for k, e in enumerate(inv):
                table[f"{prefix}{k + 1}"] = (side, e)
    return table


def _cmd_flow(args) -> int:
    try:
        entry = _resolve_entry(args.entry)
    except CatalogError as exc:
        print(f"flow: {exc}", file=sys.stderr)
        return 2
    table = _hamiltonian_table(entry)
    if args.hamiltonian not in table:
        known = ", ".join(sorted(table))
        print(f"flow: unknown hamiltonian '{args.hamiltonian}' (known: {known})",
              file=sys.stderr)
        return 2
    side, H_raw = table[args.hamiltonian]

    env0 = default_assignments(entry.params, count=1, seed=0)[0]
    smap = {k: Rat(v) for k, v in env0.items()}
    coords = entry.coords["chart" if side == "group" else "dual_chart"]
    columns = [
        (name, subst(expr, smap))
        for name, (table_side, expr) in sorted(table.items())
        if table_side == side
    ]
    H = subst(H_raw, smap)

    try:
        x0 = canonical_start(coords, [H] + [e for _, e in columns])
        field = hamiltonian_vector_field(canonical_field(coords), H)
        traj = integrate(coords, field, x0, args.dt, args.t)
    except (ValueError, SingularPointError) as exc:
        print(f"flow: {exc}", file=sys.stderr)
        return 2
    export_csv(args.out, coords, traj, invariants=columns)
    if env0:
        fixed = ", ".join(f"{k}={v}" for k, v in env0.items())
        print(f"parameters fixed at {fixed}")
    print(f"wrote {args.out}: {len(traj.times)} samples to t={traj.final_time:g}")
    if not traj.reached(args.t):
        print(f"flow: stopped early at t={traj.final_time:g} (singular step)",
              file=sys.stderr)
        return 1
    return 0


def _cmd_list(args) -> int:
    unreadable = 0
    for path in list_entry_paths():
        try:
            entry = load_entry(path)
        except CatalogError as exc:
            print(f"{path.name}: unreadable: {exc}", file=sys.stderr)
            unreadable += 1
            continue
        params = ", ".join(p.name for p in entry.parameters)
        blocks = [
            label
            for label, present in (
                ("classical", entry.rt is not None or entry.r is not None),
                ("acting", entry.rept is not None),
                ("invariants", entry.inv_g is not None),
                ("chart-map", entry.zmap is not None),
            )
            if present
        ]
        print(f"{entry.entry_id}  dim {entry.dim}  params [{params}]  "
              + (" ".join(blocks) if blocks else "tables-only"))
    return 2 if unreadable else 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        if code in (None, 0):
            return 0
        return 2
    handlers = {"verify": _cmd_verify, "flow": _cmd_flow, "list": _cmd_list}
    return handlers[args.command](args)


if __name__ == "__main__":
    raise SystemExit(main())
