"""Scenario-driven command-line front end.

A scenario is a YAML key-value tree naming an action (preset or explicit
generator matrices) and exactly one probe, plus optional seeds, tolerance
overrides and output settings.  Reports are written as canonical JSON
(floats at 12 significant digits, sorted keys, byte-stable for a fixed seed)
together with per-probe CSV tables and gnuplot-ready data files.

Exit codes: 0 = ran, all coherence assertions held; 2 = ran, but an internal
mathematical cross-check failed; 1 = input or runtime error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import time

import numpy as np
import yaml

from . import __version__
from .actions import PRESET_TABLE, ActionSpec, foliation_codim, preset
from .errors import CoherenceError, ScenarioError, SrfLabError
from .geometry import DEFAULT_TOL, AmbientSpace, ToleranceProfile
from .quotient import (
    EXPLOSION_LIMIT_TOL,
    POLARITY_BRACKET_TOL,
    conjugate_witness_search,
    crossing_continuity_probe,
    crossing_number,
    explosion_probe,
    horizontal_conjugate_test,
    infinitesimal_polarity,
    make_horizontal_geodesic,
    polarity_test,
    random_horizontal_geodesic,
    bounded_curvature_conditions,
)

PROBES = ("polarity", "explosion", "crossing", "conjugate", "continuity", "full")
OUT_DIR_ENV = "SRFLAB_OUT_DIR"
DEFAULT_RADII = (1.0, 0.5, 0.25, 0.125, 0.0625)


@dataclasses.dataclass(frozen=True)
class Scenario:
    action_label: str
    action: ActionSpec
    probe: str
    params: dict
    seed: int = 0
    grid: int = 2048
    profile: ToleranceProfile = DEFAULT_TOL
    out_dir: str | None = None
    out_format: str = "both"

    def echo(self) -> dict:
        return {
            "action": self.action_label,
            "probe": self.probe,
            "params": _plain(self.params),
            "seed": self.seed,
            "grid": self.grid,
        }


@dataclasses.dataclass
class Report:
    scenario: dict
    verdicts: dict
    tables: dict
    tolerances: dict
    thresholds: dict
    version: str
    wall_time_s: float = 0.0

    def to_json(self) -> str:
        # Wall time is intentionally left out so reports are byte-identical
        # across reruns with the same seed; it is logged to stdout instead.
        payload = {
            "scenario": _plain(self.scenario),
            "verdicts": _plain(self.verdicts),
            "tables": _plain(self.tables),
            "tolerances": _plain(self.tolerances),
            "thresholds": _plain(self.thresholds),
            "version": self.version,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _plain(obj):
    """Recursively convert to JSON-friendly values with 12-digit floats."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(f"{float(obj):.12g}")
    if isinstance(obj, (np.integer, int, bool)) or obj is None or isinstance(obj, str):
        return int(obj) if isinstance(obj, np.integer) else obj
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    return str(obj)


# ---------------------------------------------------------------------------
# Scenario parsing
# ---------------------------------------------------------------------------

def _build_action(node) -> tuple[str, ActionSpec]:
    if isinstance(node, str):
        return node, preset(node)
    if isinstance(node, dict):
        try:
            dim = int(node["dimension"])
            curvature = float(node.get("curvature", 0.0))
            gens = [np.asarray(g, dtype=float) for g in node.get("generators", [])]
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"malformed explicit action block: {exc}") from exc
        for i, g in enumerate(gens):
            norm = np.linalg.norm(g)
            skew = np.linalg.norm(g + g.T)
            if norm > 0 and skew > 1e-11 * norm:
                raise ScenarioError(
                    f"generator {i} is not skew-symmetric: |A + A^T| / |A| = {skew / norm:.3e}")
        try:
            action = ActionSpec(AmbientSpace(dim, curvature), tuple(gens),
                                name=node.get("name"))
        except SrfLabError as exc:
            raise ScenarioError(str(exc)) from exc
        return node.get("name", "custom"), action
    raise ScenarioError("action must be a preset name or an explicit matrix block")


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a YAML scenario document."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"scenario is not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a mapping")
    if "probe" not in doc:
        raise ScenarioError("scenario is missing the probe block")
    probe = str(doc["probe"])
    if probe not in PROBES:
        raise ScenarioError(f"unknown probe {probe!r}; expected one of {PROBES}")
    if "action" not in doc:
        raise ScenarioError("scenario is missing the action block")
    label, action = _build_action(doc["action"])

    tol_kwargs = dict(doc.get("tolerances", {}) or {})
    try:
        profile = dataclasses.replace(DEFAULT_TOL, **{k: float(v) for k, v in tol_kwargs.items()})
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"bad tolerance override: {exc}") from exc

    reserved = {"action", "probe", "seed", "grid", "tolerances", "out_dir", "format"}
    params = {k: v for k, v in doc.items() if k not in reserved}

    scenario = Scenario(
        action_label=label,
        action=action,
        probe=probe,
        params=params,
        seed=int(doc.get("seed", 0)),
        grid=int(doc.get("grid", 2048)),
        profile=profile,
        out_dir=doc.get("out_dir"),
        out_format=str(doc.get("format", "both")),
    )
    if probe == "explosion" and foliation_codim(action, profile) < 2:
        raise ScenarioError(
            "explosion probe requires quotient cohomogeneity >= 2; "
            f"action {label!r} has cohomogeneity {foliation_codim(action, profile)}")
    if scenario.out_format not in ("json", "csv", "both"):
        raise ScenarioError(f"unknown format {scenario.out_format!r}")
    return scenario


# ---------------------------------------------------------------------------
# Probe dispatch
# ---------------------------------------------------------------------------

def _probe_direction(scenario: Scenario):
    action = scenario.action
    if "direction" in scenario.params:
        v = np.asarray(scenario.params["direction"], dtype=float)
        return v / np.linalg.norm(v)
    rng = np.random.default_rng(scenario.seed)
    from .actions import leaf_dimension, regular_dimension
    reg = regular_dimension(action, scenario.profile)
    for _ in range(100):
        v = rng.standard_normal(action.space.dimension)
        v /= np.linalg.norm(v)
        if leaf_dimension(action, v, scenario.profile) == reg:
            return v
    raise ScenarioError("could not find a regular probe direction")


def _run_polarity(sc: Scenario):
    verdict = polarity_test(sc.action, sc.profile,
                            n_points=int(sc.params.get('points', 64)),
                            seed=sc.seed,
                            use_fast_path=bool(sc.params.get('use_fast_path', True)))
    verdicts = {"polarity": verdict.verdict, "max_obstruction": verdict.max_obstruction}
    tables = {}
    if verdict.witness is not None:
        point, (xv, yv), norm = verdict.witness
        tables["witness"] = [{"point": point, "X": xv, "Y": yv, "obstruction": norm}]
    if "slice_point" in sc.params:
        inner = infinitesimal_polarity(sc.action, np.asarray(sc.params["slice_point"], dtype=float),
                                       sc.profile, seed=sc.seed)
        verdicts["slice_polarity"] = inner.verdict
    return verdicts, tables, None


def _run_explosion(sc: Scenario):
    point = np.asarray(sc.params.get("point", np.zeros(sc.action.space.dimension)), dtype=float)
    radii = [float(r) for r in sc.params.get("radii", DEFAULT_RADII)]
    probe = explosion_probe(sc.action, point, _probe_direction(sc), radii,
                            sc.profile, n_samples=int(sc.params.get('planes', 256)),
                            seed=sc.seed)
    verdicts = {"verdict": probe.verdict, "fitted_limit": probe.fitted_limit}
    rows = [{"r": r, "kappa_bar": k, "kappa_r2": p} for r, k, p in probe.rows]
    gnuplot = [(r, p) for r, _, p in probe.rows]
    return verdicts, {"explosion": rows}, gnuplot


def _run_crossing(sc: Scenario):
    if "base" in sc.params:
        geo = make_horizontal_geodesic(
            sc.action, np.asarray(sc.params["base"], dtype=float),
            np.asarray(sc.params["direction"], dtype=float),
            tuple(sc.params.get("interval", (0.0, 2.0))), sc.profile)
        geos = [geo]
    else:
        rng = np.random.default_rng(sc.seed)
        geos = [random_horizontal_geodesic(sc.action, rng,
                                           float(sc.params.get('length', 2.0)), sc.profile)
                for _ in range(int(sc.params.get('count', 8)))]
    rows = []
    for i, geo in enumerate(geos):
        rec = crossing_number(sc.action, geo, sc.profile, sc.grid)
        rows.append({"geodesic": i, "total": rec.total,
                     "events": [[t, c] for t, c in rec.events]})
    verdicts = {"totals": [row["total"] for row in rows]}
    return verdicts, {"crossing": rows}, None


def _run_conjugate(sc: Scenario):
    rows = []
    if sc.params.get("search"):
        hit = conjugate_witness_search(sc.action, int(sc.params.get('count', 64)),
                                       sc.seed, float(sc.params.get('length', 2.0)),
                                       sc.profile, sc.grid)
        if hit is None:
            verdicts = {"witness_found": False}
        else:
            geo, rep = hit
            verdicts = {"witness_found": True,
                        "base": _plain(geo.base), "direction": _plain(geo.direction),
                        "ind_lambda": rep.ind_lambda, "ind_w": rep.ind_w}
        return verdicts, {}, None
    rng = np.random.default_rng(sc.seed)
    any_conjugate = False
    for i in range(int(sc.params.get('count', 16))):
        geo = random_horizontal_geodesic(sc.action, rng,
                                         float(sc.params.get('length', 2.0)), sc.profile)
        rep = horizontal_conjugate_test(sc.action, geo, sc.profile, sc.grid)
        any_conjugate = any_conjugate or rep.has_conjugate
        rows.append({"geodesic": i, "has_conjugate": rep.has_conjugate,
                     "ind_lambda": rep.ind_lambda, "ind_w": rep.ind_w,
                     "regular_start_identity": rep.regular_start_identity})
    verdicts = {"any_conjugate": any_conjugate}
    return verdicts, {"conjugate": rows}, None


def _run_continuity(sc: Scenario):
    if "start" in sc.params:
        start = tuple(np.asarray(a, dtype=float) for a in sc.params["start"])
        end = tuple(np.asarray(a, dtype=float) for a in sc.params["end"])
    else:
        rng = np.random.default_rng(sc.seed)
        length = float(sc.params.get('length', 2.0))
        g0 = random_horizontal_geodesic(sc.action, rng, length, sc.profile)
        g1 = random_horizontal_geodesic(sc.action, rng, length, sc.profile)
        start, end = (g0.base, g0.direction), (g1.base, g1.direction)
    rep = crossing_continuity_probe(
        sc.action, start, end, int(sc.params.get('steps', 16)),
        tuple(sc.params.get("interval", (0.0, 2.0))), sc.profile, sc.grid,
        polarity_seed=sc.seed)
    verdicts = {"verdict": rep.verdict, "jumps": [list(j) for j in rep.jumps]}
    rows = [{"s": s, "crossing_number": c} for s, c in rep.rows]
    return verdicts, {"continuity": rows}, [(s, c) for s, c in rep.rows]


def _run_full(sc: Scenario):
    conditions = bounded_curvature_conditions(sc.action, DEFAULT_RADII, sc.profile, sc.seed)
    probe = conditions.pop("probe", None)
    verdicts = {"curvature_conditions": conditions,
                "conditions_agree": len({conditions[k] for k in
                                         ("kappa_bounded", "product_to_zero", "slice_polar")}) == 1}
    tables = {}
    if probe is not None:
        tables["explosion"] = [{"r": r, "kappa_bar": k, "kappa_r2": p}
                               for r, k, p in probe.rows]
    pol = polarity_test(sc.action, sc.profile, seed=sc.seed)
    verdicts["polarity"] = pol.verdict
    return verdicts, tables, None


_DISPATCH = {
    "polarity": _run_polarity,
    "explosion": _run_explosion,
    "crossing": _run_crossing,
    "conjugate": _run_conjugate,
    "continuity": _run_continuity,
    "full": _run_full,
}


def run_scenario(scenario: Scenario) -> Report:
    """Execute the scenario's probe and assemble the report."""
    start = time.perf_counter()
    verdicts, tables, gnuplot = _DISPATCH[scenario.probe](scenario)
    report = Report(
        scenario=scenario.echo(),
        verdicts=verdicts,
        tables=tables,
        tolerances=dataclasses.asdict(scenario.profile),
        thresholds={
            "explosion_limit_tol": EXPLOSION_LIMIT_TOL,
            "polarity_bracket_tol": POLARITY_BRACKET_TOL,
        },
        version=__version__,
        wall_time_s=time.perf_counter() - start,
    )
    report._gnuplot = gnuplot  # noqa: SLF001 - internal handoff to the writer
    return report


def write_report(report: Report, scenario: Scenario, out_dir: str) -> list:
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if scenario.out_format in ("json", "both"):
        path = os.path.join(out_dir, "report.json")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
        written.append(path)
    if scenario.out_format in ("csv", "both"):
        for name, rows in report.tables.items():
            if not rows:
                continue
            path = os.path.join(out_dir, f"{name}.csv")
            plain_rows = [_plain(r) for r in rows]
            fieldnames = list(plain_rows[0].keys())
            with open(path, "w", newline="", encoding="utf-8") as fh:
                writer = csv.DictWriter(fh, fieldnames=fieldnames)
                writer.writeheader()
                for row in plain_rows:
                    writer.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v
                                     for k, v in row.items()})
            written.append(path)
    gnuplot = getattr(report, "_gnuplot", None)
    if gnuplot:
        path = os.path.join(out_dir, f"{scenario.probe}.dat")
        with open(path, "w", encoding="utf-8") as fh:
            for xval, yval in gnuplot:
                fh.write(f"{xval:.12g} {yval:.12g}\n")
        written.append(path)
    return written


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _add_common(parser):
    parser.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    parser.add_argument("--tol-rank", type=float, default=None,
                        help="override the relative rank cutoff")
    parser.add_argument("--grid", type=int, default=2048,
                        help="scan grid density (default 2048)")
    parser.add_argument("--out-dir", default=None,
                        help=f"output directory (default ${OUT_DIR_ENV} or ./srflab-out)")
    parser.add_argument("--format", choices=("json", "csv", "both"), default="both")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="srflab",
        description="Quotient-geometry probes for linear isometric group actions.")
    sub = parser.add_subparsers(dest="command", required=True)

    for probe in PROBES:
        p = sub.add_parser(probe, help=f"run the {probe} probe on an action")
        p.add_argument("action", help="preset name, e.g. hopf or torus-std(2)")
        if probe == "explosion":
            p.add_argument("--radii", type=float, nargs="+", default=list(DEFAULT_RADII))
        if probe in ("crossing", "conjugate", "continuity"):
            p.add_argument("--count", type=int, default=16)
            p.add_argument("--length", type=float, default=2.0)
        if probe == "conjugate":
            p.add_argument("--search", action="store_true",
                           help="search for a conjugate-point witness")
        _add_common(p)

    p = sub.add_parser("run", help="run a YAML scenario file")
    p.add_argument("scenario_file")
    _add_common(p)

    sub.add_parser("presets", help="list the preset registry")
    return parser


def _scenario_from_args(args) -> Scenario:
    if args.command == "run":
        with open(args.scenario_file, encoding="utf-8") as fh:
            text = fh.read()
        scenario = parse_scenario(text)
    else:
        doc = {"action": args.action, "probe": args.command}
        if getattr(args, "radii", None):
            doc["radii"] = args.radii
        if hasattr(args, "count"):
            doc["count"] = args.count
            doc["length"] = args.length
        if getattr(args, "search", False):
            doc["search"] = True
        scenario = parse_scenario(yaml.safe_dump(doc))
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.grid is not None:
        overrides["grid"] = args.grid
    if args.out_dir is not None:
        overrides["out_dir"] = args.out_dir
    if args.format is not None:
        overrides["out_format"] = args.format
    if args.tol_rank is not None:
        overrides["profile"] = dataclasses.replace(scenario.profile,
                                                   rank_rel_tol=args.tol_rank)
    return dataclasses.replace(scenario, **overrides)


def _print_presets():
    print(f"{'name':<22} {'dim':>4}  expected classification")
    for name, dim, expected in PRESET_TABLE:
        print(f"{name:<22} {dim:>4}  {expected}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "presets":
        _print_presets()
        return 0
    try:
        scenario = _scenario_from_args(args)
        report = run_scenario(scenario)
    except CoherenceError as exc:
        print(f"coherence assertion failed: {exc}", file=sys.stderr)
        return 2
    except (SrfLabError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out_dir = scenario.out_dir or os.environ.get(OUT_DIR_ENV, "srflab-out")
    written = write_report(report, scenario, out_dir)
    print(json.dumps(_plain(report.verdicts), sort_keys=True))
    print(f"wall time: {report.wall_time_s:.3f} s")
    for path in written:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
