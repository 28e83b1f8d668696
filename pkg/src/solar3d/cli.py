"""Command-line entry point: ``solar3d {simulate,validate,baseline,search,compare}``.

Exit codes: 0 success, 2 guard or parse failure, 1 usage or internal error.

Runs are configured by one JSON file with optional ``site``, ``optics``,
``sim`` and ``guard`` sections, plus ``--set section.key=value`` overrides.
Unknown keys are rejected.  ``guard.box`` is a ``[x, y, z]`` list and
``site.date`` an ISO date string.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

from .baselines import FAMILIES, BaselineError, family_param_types, make_baseline
from .geom import BoundingBox, GeometryError, serialize_geometry
from .guards import GuardConfig, validate_text
from .optics import OpticsConfig
from .search import (
    ExternalProposer,
    LedgerWriter,
    builtin_propose,
    run_search,
    write_meta,
)
from .sim import SimConfig, export_lightcurve, simulate_day
from .solar import Site

log = logging.getLogger("solar3d")

EXIT_OK, EXIT_ERROR, EXIT_INVALID = 0, 1, 2

# 5x the 20 m x 20 m footprint of the default box
DEFAULT_AREA_CAP = 2000.0


class UsageError(Exception):
    pass


_SIM_KEYS = ("step_minutes", "subcell_area", "shadow_eps", "secondary_bounce", "brute_force", "threads")


@dataclass
class RunConfig:
    site: dict = field(default_factory=dict)
    optics: dict = field(default_factory=dict)
    sim: dict = field(default_factory=dict)
    guard: dict = field(default_factory=dict)

    _allowed = {
        "site": {f.name for f in fields(Site)},
        "optics": {f.name for f in fields(OpticsConfig)},
        "sim": set(_SIM_KEYS),
        "guard": {f.name for f in fields(GuardConfig)},
    }

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        if not isinstance(doc, dict):
            raise UsageError("config must be a JSON object")
        extra = set(doc) - set(cls._allowed)
        if extra:
            raise UsageError(f"unknown config section(s): {', '.join(sorted(extra))}")
        cfg = cls()
        for section, body in doc.items():
            if not isinstance(body, dict):
                raise UsageError(f"section {section!r} must be an object")
            for key, value in body.items():
                cfg.set(f"{section}.{key}", value)
        return cfg

    def set(self, dotted: str, value) -> None:
        section, _, key = dotted.partition(".")
        if section not in self._allowed or key not in self._allowed[section]:
            raise UsageError(f"unknown config key {dotted!r}")
        getattr(self, section)[key] = value

    def site_cfg(self) -> Site:
        return Site(**self.site)

    def sim_cfg(self) -> SimConfig:
        return SimConfig(site=self.site_cfg(), optics=OpticsConfig(**self.optics), **self.sim)

    def guard_cfg(self) -> GuardConfig:
        g = dict(self.guard)
        g.setdefault("area_cap", DEFAULT_AREA_CAP)
        if "box" in g:
            g["box"] = BoundingBox(*g["box"])
        return GuardConfig(**g)

    def to_dict(self) -> dict:
        return {"site": dict(self.site), "optics": dict(self.optics), "sim": dict(self.sim),
                "guard": dict(self.guard)}


def _parse_value(text: str):
    """JSON literal when it parses (numbers, true/false, lists), else the raw string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config(path: str | None, overrides: list[str] | None = None, threads: int | None = None,
                brute_force: bool = False) -> RunConfig:
    if path:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as e:
            raise UsageError(f"cannot read config: {e}") from None
        except json.JSONDecodeError as e:
            raise UsageError(f"config is not valid JSON: {e}") from None
        cfg = RunConfig.from_dict(doc)
    else:
        cfg = RunConfig()
    for item in overrides or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects key=value, got {item!r}")
        cfg.set(key.strip(), _parse_value(value))
    if threads is not None:
        cfg.set("sim.threads", threads)
    if brute_force:
        cfg.set("sim.brute_force", True)
    return cfg


def _read_geometry(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read geometry: {e}") from None


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False)


# --- commands --------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = load_config(args.config, args.set, args.threads, args.brute_force)
    sim_cfg, guard_cfg = cfg.sim_cfg(), cfg.guard_cfg()
    mesh, rep = validate_text(_read_geometry(args.geometry), guard_cfg)
    if mesh is None or not rep.ok:
        print(_dump(rep.to_dict()), file=sys.stderr)
        return EXIT_INVALID
    result = simulate_day(mesh, sim_cfg)
    if args.lightcurve:
        Path(args.lightcurve).write_text(export_lightcurve(result), encoding="utf-8")
    if args.out == "csv":
        sys.stdout.write(export_lightcurve(result))
    else:
        print(_dump(result.to_dict()))
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = load_config(args.config, args.set)
    _, rep = validate_text(_read_geometry(args.geometry), cfg.guard_cfg())
    print(_dump(rep.to_dict()))
    return EXIT_OK if rep.ok else EXIT_INVALID


def _parse_params(name: str, items: list[str]) -> dict:
    types = family_param_types(name)
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or key not in types:
            raise UsageError(f"bad --param {item!r}; {name} takes {', '.join(types)}")
        typ = types[key]
        if typ is bool:
            if value.lower() not in ("true", "false", "1", "0"):
                raise UsageError(f"--param {key} expects true/false")
            out[key] = value.lower() in ("true", "1")
        else:
            try:
                out[key] = typ(value)
            except ValueError:
                raise UsageError(f"--param {key} expects {typ.__name__}") from None
    return out


def cmd_baseline(args) -> int:
    if args.name not in FAMILIES:
        raise UsageError(f"unknown baseline {args.name!r}; choose from {', '.join(FAMILIES)}")
    params = _parse_params(args.name, args.param)
    box = BoundingBox(*args.box) if args.box else BoundingBox()
    sys.stdout.write(serialize_geometry(make_baseline(args.name, box=box, **params)))
    return EXIT_OK


def cmd_search(args) -> int:
    cfg = load_config(args.config, args.set, args.threads, args.brute_force)
    sim_cfg, guard_cfg = cfg.sim_cfg(), cfg.guard_cfg()
    if args.budget < 1:
        raise UsageError("--budget must be >= 1")
    if args.proposer == "builtin":
        proposer, closer = builtin_propose, None
    elif args.proposer.startswith("exec:") and args.proposer[5:].strip():
        try:
            proposer = ExternalProposer(args.proposer[5:], timeout=args.timeout)
        except OSError as e:
            raise UsageError(f"cannot start proposer: {e}") from None
        closer = proposer.close
    else:
        raise UsageError("--proposer must be 'builtin' or 'exec:<command>'")

    writer = LedgerWriter(args.ledger) if args.ledger else None
    try:
        ledger = run_search(proposer, args.budget, sim_cfg, guard_cfg, seed=args.seed,
                            clock=None if args.no_timestamps else time.time,
                            on_record=writer)
    finally:
        if writer:
            writer.close()
        if closer:
            closer()
    if args.ledger:
        write_meta(args.ledger, ledger, proposer=args.proposer, budget=args.budget, config=cfg.to_dict())
    if args.best_out and ledger.best_proposal is not None:
        Path(args.best_out).write_text(ledger.best_proposal.geometry, encoding="utf-8")
    best = ledger.best
    summary = {
        "n": len(ledger), "aborted": ledger.aborted, "seed": ledger.seed,
        "config_digest": ledger.config_digest,
        "best_i": best.i if best else None, "best_score_wh": best.score_wh if best else None,
        "best_family": ledger.best_proposal.family if ledger.best_proposal else None,
        "best_params": ledger.best_proposal.params if ledger.best_proposal else None,
    }
    print(_dump(summary))
    return EXIT_ERROR if ledger.aborted else EXIT_OK


def cmd_compare(args) -> int:
    cfg = load_config(args.config, args.set, args.threads, args.brute_force)
    sim_cfg, guard_cfg = cfg.sim_cfg(), cfg.guard_cfg()
    rows = []
    for path in args.geometry:
        mesh, rep = validate_text(_read_geometry(path), guard_cfg)
        if mesh is None or not rep.ok:
            rows.append({"file": path, "valid": False, "rule": rep.first_failure,
                         "peak_w": None, "energy_wh": None, "ratio": None})
            continue
        res = simulate_day(mesh, sim_cfg)
        rows.append({"file": path, "valid": True, "rule": None, "peak_w": res.peak_w,
                     "energy_wh": res.energy_wh, "ratio": None})
    ref = rows[0]["energy_wh"] if rows and rows[0]["valid"] else None
    for r in rows:
        if r["valid"] and ref:
            r["ratio"] = r["energy_wh"] / ref
    if args.json:
        print(_dump(rows))
    else:
        width = max(len("file"), *(len(r["file"]) for r in rows))
        print(f"{'file':<{width}}  {'peak_W':>12}  {'energy_Wh':>14}  {'ratio':>8}")
        for r in rows:
            if not r["valid"]:
                print(f"{r['file']:<{width}}  {'INVALID':>12}  {r['rule'] or '':>14}  {'':>8}")
                continue
            ratio = f"{r['ratio']:.4f}" if r["ratio"] is not None else "n/a"
            print(f"{r['file']:<{width}}  {r['peak_w']:12.2f}  {r['energy_wh']:14.2f}  {ratio:>8}")
    return EXIT_OK if all(r["valid"] for r in rows) else EXIT_INVALID


# --- parser ----------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="solar3d", description="Daily-energy simulator and search harness for 3D PV geometry.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def config_opts(sp, physics=True):
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE")
        if physics:
            sp.add_argument("--threads", type=int)
            sp.add_argument("--brute-force", action="store_true", help="use the brute-force occlusion oracle")

    sp = sub.add_parser("simulate", help="daily energy of one geometry")
    sp.add_argument("geometry", help="geometry text file, or - for stdin")
    config_opts(sp)
    sp.add_argument("--out", choices=("json", "csv"), default="json")
    sp.add_argument("--lightcurve", metavar="CSV")
    sp.add_argument("--json", action="store_true", help="accepted for symmetry; JSON is the default")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("validate", help="run the guards only")
    sp.add_argument("geometry")
    config_opts(sp, physics=False)
    sp.add_argument("--json", action="store_true", help="accepted for symmetry; output is always JSON")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("baseline", help="emit a baseline geometry")
    sp.add_argument("name")
    sp.add_argument("--param", action="append", default=[], metavar="K=V")
    sp.add_argument("--box", type=float, nargs=3, metavar=("X", "Y", "Z"))
    sp.set_defaults(func=cmd_baseline)

    sp = sub.add_parser("search", help="budgeted propose-and-score loop")
    config_opts(sp)
    sp.add_argument("--proposer", default="builtin", help="builtin or exec:<command>")
    sp.add_argument("--budget", type=int, default=200)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--ledger", metavar="JSONL")
    sp.add_argument("--timeout", type=float, default=120.0, help="external proposer timeout, s")
    sp.add_argument("--best-out", metavar="FILE", help="write the best geometry here")
    sp.add_argument("--no-timestamps", action="store_true", help="null ts fields for byte-stable ledgers")
    sp.add_argument("--json", action="store_true", help="accepted for symmetry; output is always JSON")
    sp.set_defaults(func=cmd_search)

    sp = sub.add_parser("compare", help="tabulate several geometries")
    sp.add_argument("geometry", nargs="+")
    config_opts(sp)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_compare)
    return p


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(f"solar3d: {e}", file=sys.stderr)
        return EXIT_ERROR
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, BaselineError, GeometryError) as e:
        print(f"solar3d: {e}", file=sys.stderr)
        return EXIT_ERROR
    except (TypeError, ValueError) as e:
        # bad config values surface from the dataclass constructors
        print(f"solar3d: invalid configuration: {e}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as e:  # noqa: BLE001 - exit-code contract
        log.exception("internal error")
        print(f"solar3d: internal error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
