"""Command-line scenario runner.

    rotodeg run example51 --analyses decomposition,twist,locate
    rotodeg run rigid_rotation --analyses decomposition --regions ball:0,0,2 ball:5,3,1
    rotodeg check rotodeg_out

Exit codes: 0 when every verification holds and every degree is certified,
1 otherwise, 2 for unusable input (an error JSON is printed to stdout).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from pathlib import Path

from . import __version__
from .boundary import Ball, GeneralizedAnnulus, annulus
from .degree import (BoundaryEvaluator, IntegerGrazingWarning, annulus_consistency, brouwer_deg_fT, check_twist,
                     dee_degree, sigma_set, verify_decomposition)
from .errors import RotodegError
from .flow import DEFAULT_CONFIG, IntegratorConfig, evolve, lift_trajectory, trajectory_csv
from .linear import LinearSystem, asymptotic_radius, is_hamiltonian, maslov_index
from .locate import find_all_report
from .report import EXIT_USAGE, SCHEMA, dumps, error_report, exit_status, failures
from .svg import render_snapshot
from .vectorfield import SCENARIOS, ScenarioSpec, build_scenario

ANALYSES = ("degree", "dee", "sigma", "decomposition", "twist", "locate", "maslov", "asymptotic_radius")
FORMATS = ("json", "csv", "svg")

DEFAULT_REGIONS = {
    "rigid_rotation": ["ball:0,0,2", "ball:5,3,1", "annulus:1,2"],
    "example51": ["ball:0,0,1", "ball:0,0,4", "annulus:1,4"],
    "linear_system": ["ball:0,0,1", "ball:3,0,1"],
    "duffing_superlinear": ["ball:0,0,1", "annulus:1,5"],
    "asymlin_hamiltonian": ["ball:0,0,0.1", "annulus:0.1,20"],
    "expansive_spiral": ["ball:0,0,1", "ball:0,0,3", "annulus:1,3"],
    "perturbed_linear": ["ball:0,0,1", "ball:2,2,0.5"],
}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    scenario: ScenarioSpec
    analyses: list
    regions: list
    output_dir: Path
    formats: list
    region_specs: list = dc_field(default_factory=list)
    trajectory: tuple | None = None
    integrator: IntegratorConfig = DEFAULT_CONFIG


def parse_region(text: str):
    """``ball:cx,cy,r`` or ``annulus:r_in,r_out`` (origin-centred)."""
    kind, sep, rest = text.partition(":")
    try:
        nums = [float(v) for v in rest.split(",")] if sep else []
    except ValueError:
        raise UsageError(f"malformed region {text!r}") from None
    if kind == "ball" and len(nums) == 3:
        if not nums[2] > 0:
            raise UsageError(f"ball radius must be positive in {text!r}")
        return Ball((nums[0], nums[1]), nums[2])
    if kind == "annulus" and len(nums) == 2:
        if not 0 < nums[0] < nums[1]:
            raise UsageError(f"annulus needs 0 < r_in < r_out in {text!r}")
        return annulus(nums[0], nums[1])
    raise UsageError(f"malformed region {text!r}; expected ball:cx,cy,r or annulus:r_in,r_out")


def _split_list(values):
    out = []
    for v in values or ():
        out += [s for s in v.split(",") if s] if not v.startswith(("ball:", "annulus:")) else [v]
    return out


def _regions_arg(values):
    # region specs contain commas themselves, so split only on whitespace / repeated flags
    out = []
    for v in values or ():
        out += v.split()
    return out


def _load_scenario(arg, params):
    p = Path(arg)
    if arg.lstrip().startswith("{"):
        spec = ScenarioSpec.from_json(arg)
    elif p.suffix == ".json" and p.exists():
        spec = ScenarioSpec.from_json(p.read_text())
    else:
        spec = ScenarioSpec(arg, {})
    extra = ScenarioSpec.from_pairs(spec.name, params).params
    return ScenarioSpec(spec.name, {**spec.params, **extra})


def build_config(ns) -> RunConfig:
    scenario = _load_scenario(ns.scenario, ns.param)
    analyses = _split_list(ns.analyses) or ["decomposition", "twist"]
    bad = [a for a in analyses if a not in ANALYSES]
    if bad:
        raise UsageError(f"unknown analyses {bad}; choose from {list(ANALYSES)}")
    formats = _split_list(ns.formats) or ["json"]
    bad = [f for f in formats if f not in FORMATS]
    if bad:
        raise UsageError(f"unknown formats {bad}; choose from {list(FORMATS)}")
    specs = _regions_arg(ns.regions) if ns.regions is not None else DEFAULT_REGIONS.get(scenario.name, [])
    regions = [parse_region(s) for s in specs]
    traj = None
    if ns.trajectory:
        try:
            x, y = (float(v) for v in ns.trajectory.split(","))
        except ValueError:
            raise UsageError(f"--trajectory expects x,y, got {ns.trajectory!r}") from None
        traj = (x, y)
    cfg = DEFAULT_CONFIG
    if ns.method or ns.step:
        cfg = IntegratorConfig(method=ns.method or cfg.method, step_h=ns.step or cfg.step_h)
    return RunConfig(scenario, sorted(set(analyses), key=ANALYSES.index), regions, Path(ns.out),
                     formats, specs, traj, cfg)


# ---------------------------------------------------------------------------
# analyses; each returns a list of JSON-ready dicts


def _annuli(rc):
    return [r for r in rc.regions if isinstance(r, GeneralizedAnnulus)]


def _guard(fn):
    def run(field, rc, ev, region):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", IntegerGrazingWarning)
                return fn(field, rc, ev, region)
        except RotodegError as exc:
            return {"region": region.spec() if region is not None else None,
                    "error": {"type": type(exc).__name__, "message": str(exc)}}
    return run


@_guard
def _a_degree(field, rc, ev, region):
    return brouwer_deg_fT(field, region, rc.integrator, evaluator=ev).to_json()


@_guard
def _a_sigma(field, rc, ev, region):
    return {"region": region.spec(), **sigma_set(field, region, rc.integrator, evaluator=ev).to_json()}


@_guard
def _a_dee(field, rc, ev, region):
    summ = sigma_set(field, region, rc.integrator, evaluator=ev)
    idx = sorted(set(summ.sigma_possible) | {0})
    return {"region": region.spec(), "sigma": list(summ.sigma),
            "values": [dee_degree(field, region, i, rc.integrator, evaluator=ev).to_json() for i in idx]}


@_guard
def _a_decomposition(field, rc, ev, region):
    return verify_decomposition(field, region, rc.integrator, evaluator=ev).to_json()


@_guard
def _a_twist(field, rc, ev, region):
    tw = check_twist(field, region, rc.integrator, evaluator=ev)
    idx = sorted(set(tw.sigma_in.sigma_possible) | set(tw.sigma_out.sigma_possible))
    cons = [annulus_consistency(field, region, i, rc.integrator, evaluator=ev).to_json() for i in idx]
    return {"region": region.spec(), **tw.to_json(), "annulus_consistency": cons}


def _a_locate(field, rc, ev, region, sink):
    try:
        rep = find_all_report(field, region, rc.integrator, strict=False, evaluator=ev)
    except RotodegError as exc:
        return {"region": region.spec(), "error": {"type": type(exc).__name__, "message": str(exc)}}
    sink[region.spec()] = rep
    out = {"region": region.spec(), **rep.to_json()}
    out["bookkeeping_ok"] = {"ok": all(t.bookkeeping_ok() for t in rep.trees.values())}
    return out


def _linear_parts(field):
    for which, m in (("zero", field.lin_zero), ("infinity", field.lin_inf)):
        if m is not None:
            yield which, LinearSystem(m, field.period, False, field.breakpoints)


def _a_maslov(field, rc):
    out = []
    for which, sys_ in _linear_parts(field):
        if not is_hamiltonian(sys_):
            out.append({"linearization": which, "skipped": "not Hamiltonian"})
            continue
        try:
            out.append({"linearization": which, **maslov_index(sys_, rc.integrator).to_json()})
        except RotodegError as exc:
            out.append({"linearization": which, "error": {"type": type(exc).__name__, "message": str(exc)}})
    return out


def _a_asymptotic(field, rc):
    out = []
    for which, _ in _linear_parts(field):
        try:
            out.append(asymptotic_radius(field, which, rc.integrator).to_json())
        except RotodegError as exc:
            out.append({"op": f"asymptotic_radius[{which}]",
                        "error": {"type": type(exc).__name__, "message": str(exc)},
                        "trace": getattr(exc, "trace", [])})
    return out


def _threads():
    try:
        n = int(os.environ.get("ROTODEG_THREADS", "0"))
    except ValueError:
        n = 0
    return max(1, n) if n else max(1, min(8, os.cpu_count() or 1))


def run(rc: RunConfig) -> tuple[int, dict]:
    """Execute every analysis, write the artifacts and return ``(exit_status, summary)``."""
    field = build_scenario(rc.scenario)
    ev = BoundaryEvaluator(field, rc.integrator)
    rc.output_dir.mkdir(parents=True, exist_ok=True)
    located = {}
    plain = {"degree": _a_degree, "sigma": _a_sigma, "dee": _a_dee, "decomposition": _a_decomposition}
    t0 = time.perf_counter()
    jobs = {}
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        for a in rc.analyses:
            if a in plain:
                jobs[a] = [pool.submit(plain[a], field, rc, ev, r) for r in rc.regions]
            elif a == "twist":
                jobs[a] = [pool.submit(_a_twist, field, rc, ev, r) for r in _annuli(rc)]
            elif a == "locate":
                jobs[a] = [pool.submit(_a_locate, field, rc, ev, r, located) for r in _annuli(rc)]
            elif a == "maslov":
                jobs[a] = [pool.submit(_a_maslov, field, rc)]
            elif a == "asymptotic_radius":
                jobs[a] = [pool.submit(_a_asymptotic, field, rc)]
        results = {}
        for a in sorted(jobs):
            res = [j.result() for j in jobs[a]]
            if a in ("maslov", "asymptotic_radius"):
                res = res[0]
            results[a] = res
    elapsed = time.perf_counter() - t0
    header = {"schema": SCHEMA, "scenario": rc.scenario.to_dict(), "regions": rc.region_specs}
    for a in sorted(results):
        if "json" in rc.formats:
            (rc.output_dir / f"{a}.json").write_text(dumps({**header, "analysis": a, "results": results[a]}))
    orbits = [o.to_json() for spec in sorted(located) for o in located[spec].orbits]
    if "locate" in results:
        (rc.output_dir / "orbits.json").write_text(dumps(orbits))
        if "csv" in rc.formats:
            for spec in sorted(located):
                for key, tree in located[spec].trees.items():
                    tag = "_".join(str(k) for k in key) if isinstance(key, tuple) else f"i{key}"
                    name = f"cells_{spec.replace(':', '_').replace(',', '_')}_{tag}.csv"
                    (rc.output_dir / name).write_text(tree.to_csv())
    if rc.trajectory is not None:
        lifted = lift_trajectory(evolve(field, rc.trajectory, cfg=rc.integrator), rc.integrator)
        (rc.output_dir / "trajectory.csv").write_text(trajectory_csv(lifted))
    if "svg" in rc.formats:
        drawable = [r for r in rc.regions if isinstance(r, Ball) or r.outer_ball is not None]
        for which in ("f_T", "F_T_chart"):
            render_snapshot(field, drawable, which, rc.output_dir / f"snapshot_{which}.svg", rc.integrator, ev)
    status = exit_status(results)
    summary = {**header, "analyses": sorted(results), "exit_status": status, "failures": failures(results),
               "orbits": orbits if "locate" in results else None, "integrations": ev.integrations,
               "elapsed_s": round(elapsed, 3), "version": __version__}
    (rc.output_dir / "report.json").write_text(dumps({**summary, "results": results}))
    return status, summary


def check(directory) -> int:
    """Recompute the exit status from the per-analysis JSON files of a previous run."""
    d = Path(directory)
    files = sorted(p for p in d.glob("*.json") if p.name not in ("report.json", "orbits.json"))
    if not files:
        raise UsageError(f"no analysis reports in {d}")
    return exit_status({p.stem: json.loads(p.read_text())["results"] for p in files})


def make_parser():
    p = argparse.ArgumentParser(prog="rotodeg", description="Rotation numbers and degrees of planar period maps.")
    p.add_argument("--version", action="version", version=f"rotodeg {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run analyses on a scenario")
    r.add_argument("scenario", help=f"scenario name ({', '.join(SCENARIOS)}), JSON text or .json file")
    r.add_argument("--param", action="append", default=[], metavar="K=V")
    r.add_argument("--analyses", action="append", metavar="A,B", help=f"from {', '.join(ANALYSES)}")
    r.add_argument("--regions", nargs="*", action="extend", metavar="SPEC",
                   help="ball:cx,cy,r or annulus:r_in,r_out")
    r.add_argument("--out", default="rotodeg_out")
    r.add_argument("--formats", action="append", metavar="F,G", help="json, csv, svg")
    r.add_argument("--trajectory", metavar="X,Y", help="also write the lifted trajectory from X,Y")
    r.add_argument("--method", choices=("rk4_fixed", "rk45_adaptive"))
    r.add_argument("--step", type=float)
    c = sub.add_parser("check", help="recompute the exit status of saved reports")
    c.add_argument("directory")
    sub.add_parser("scenarios", help="list built-in scenarios")
    return p


def main(argv=None) -> int:
    parser = make_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code not in (0, None):
            print(json.dumps(error_report("UsageError", "could not parse arguments")))
            return EXIT_USAGE
        return 0
    try:
        if ns.command == "scenarios":
            for name in SCENARIOS:
                print(name)
            return 0
        if ns.command == "check":
            status = check(ns.directory)
            print(json.dumps({"schema": SCHEMA, "exit_status": status}))
            return status
        rc = build_config(ns)
        build_scenario(rc.scenario)  # validates parameters before any work starts
    except (UsageError, RotodegError, ValueError, OSError) as exc:
        print(json.dumps(error_report(type(exc).__name__, str(exc))))
        return EXIT_USAGE
    status, summary = run(rc)
    print(dumps({k: summary[k] for k in ("schema", "scenario", "analyses", "exit_status", "failures", "elapsed_s")}),
          end="")
    return status


if __name__ == "__main__":
    sys.exit(main())
