"""Command-line front end.

    vortwave laminar    --config run.yaml --out out/
    vortwave dispersion --config run.yaml
    vortwave bifurcate  --config run.yaml
    vortwave continue   --config run.yaml [--resume state.json] [--both-half-branches]
    vortwave check      state.json

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 admissibility refusal.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import continuation as cont
from . import diagnostics, io, spectral
from .laminar import G, SpectrumAssumptionError, dispersion, find_bifurcation, solve_laminar
from .operator import AdmissibilityError, flattened_bernoulli_gap, physical_oracle, residual
from .vorticity import VorticityModel

log = logging.getLogger("vortwave")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_REFUSED = 0, 2, 3, 4

LAMINAR_COLUMNS = ["lambda", "m", "psi_y_min", "psi_y_max", "critical_layer_count"]
DISPERSION_COLUMNS = ["k", "mu", "lambda", "d", "d_lambda", "in_dirichlet_spectrum"]
ROOT_COLUMNS = ["k", "lambda", "d_lambda", "multiplicity", "kernel_modes"]
BRANCH_COLUMNS = ["s", "lambda", "q", "wave_height", "min_K", "greatest_height_margin", "bed_clearance",
                  "newton_iterations", "verdict_so_far"]


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass
class RunConfig:
    g: float = G
    h: float = 1.0
    L: float = 2 * math.pi
    vorticity: dict = field(default_factory=lambda: {"kind": "zero"})
    N: int = 32
    M: int = 128
    tolerance: float = 1e-11
    max_newton: int = 12
    shooting_M: int = 512
    laminar: dict = field(default_factory=dict)
    dispersion: dict = field(default_factory=dict)
    bifurcate: dict = field(default_factory=dict)
    continuation: dict = field(default_factory=dict)
    out: str = "out"

    @property
    def model(self) -> VorticityModel:
        return VorticityModel.from_dict(self.vorticity)


def _number(section: dict, key: str, path: str, default, positive=False, integer=False):
    if key not in section:
        return default
    v = section[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}", "must be a number")
    if integer and not float(v).is_integer():
        raise ConfigError(f"{path}.{key}", "must be an integer")
    if not math.isfinite(v):
        raise ConfigError(f"{path}.{key}", "must be finite")
    if positive and v <= 0:
        raise ConfigError(f"{path}.{key}", "must be > 0")
    return int(v) if integer else float(v)


def _section(doc: dict, key: str) -> dict:
    sec = doc.get(key, {})
    if sec is None:
        return {}
    if not isinstance(sec, dict):
        raise ConfigError(key, "must be a mapping")
    return sec


KNOWN_SECTIONS = {"physical", "vorticity", "numerics", "laminar", "dispersion", "bifurcate", "continue", "output"}


def parse_config(doc: dict) -> RunConfig:
    unknown = set(doc) - KNOWN_SECTIONS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown section")
    phys = _section(doc, "physical")
    num = _section(doc, "numerics")
    cfg = RunConfig(
        g=_number(phys, "g", "physical", G, positive=True),
        h=_number(phys, "h", "physical", 1.0, positive=True),
        L=_number(phys, "L", "physical", 2 * math.pi, positive=True),
        N=_number(num, "N", "numerics", 32, positive=True, integer=True),
        M=_number(num, "M", "numerics", 128, positive=True, integer=True),
        tolerance=_number(num, "tolerance", "numerics", 1e-11, positive=True),
        max_newton=_number(num, "max_newton", "numerics", 12, positive=True, integer=True),
        shooting_M=_number(num, "shooting_M", "numerics", 512, positive=True, integer=True),
        laminar=_section(doc, "laminar"),
        dispersion=_section(doc, "dispersion"),
        bifurcate=_section(doc, "bifurcate"),
        continuation=_section(doc, "continue"),
        out=str(_section(doc, "output").get("dir", "out")),
    )
    vort = doc.get("vorticity", {"kind": "zero"})
    if not isinstance(vort, dict):
        raise ConfigError("vorticity", "must be a mapping")
    try:
        VorticityModel.from_dict(vort)
    except KeyError as exc:
        raise ConfigError("vorticity.kind" if "kind" in str(exc) else f"vorticity.{exc.args[0]}",
                          f"invalid or missing ({exc})") from None
    except (ValueError, TypeError) as exc:
        raise ConfigError("vorticity", str(exc)) from None
    cfg.vorticity = dict(vort)
    if cfg.M < 8:
        raise ConfigError("numerics.M", "must be at least 8")
    return cfg


def _lambda_grid(section: dict, path: str) -> np.ndarray:
    if "lambdas" in section:
        vals = section["lambdas"]
        if not isinstance(vals, list) or not vals:
            raise ConfigError(f"{path}.lambdas", "must be a non-empty list")
        lams = np.array([_number({"v": v}, "v", f"{path}.lambdas", 0.0) for v in vals])
    else:
        lo = _number(section, "lambda_min", path, 0.5)
        hi = _number(section, "lambda_max", path, 5.0)
        n = _number(section, "count", path, 10, positive=True, integer=True)
        lams = np.linspace(lo, hi, n)
    if np.any(lams == 0):
        raise ConfigError(f"{path}.lambdas", "lambda = 0 is excluded")
    return lams


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, columns, rows) -> Path:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(columns)
        for r in rows:
            wr.writerow([_fmt(v) for v in r])
    return path


def _write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(type(o).__name__)


# Subcommands --------------------------------------------------------------------------------------


def cmd_laminar(cfg: RunConfig, out: Path) -> int:
    model = cfg.model
    rows = []
    for lam in _lambda_grid(cfg.laminar, "laminar"):
        flow = solve_laminar(model, float(lam), cfg.h, cfg.shooting_M)
        rows.append([float(lam), flow.m, float(np.min(flow.psi_y)), float(np.max(flow.psi_y)),
                     flow.critical_layer_count()])
    write_csv(out / "laminar.csv", LAMINAR_COLUMNS, rows)
    return EXIT_OK


def _modes(section: dict, path: str) -> list[int]:
    ks = section.get("k", [1])
    if isinstance(ks, int) and not isinstance(ks, bool):
        ks = [ks]
    if not isinstance(ks, list) or not ks or not all(isinstance(k, int) and not isinstance(k, bool) and k >= 1 for k in ks):
        raise ConfigError(f"{path}.k", "must be a positive integer or a list of them")
    return ks


def _bracket(section: dict, path: str):
    br = section.get("bracket")
    if br is None:
        return None
    if not (isinstance(br, list) and len(br) == 2 and all(isinstance(v, (int, float)) for v in br)):
        raise ConfigError(f"{path}.bracket", "must be a list [lo, hi]")
    if br[0] * br[1] <= 0 or br[0] == br[1]:
        raise ConfigError(f"{path}.bracket", "must exclude lambda = 0")
    return float(br[0]), float(br[1])


def cmd_dispersion(cfg: RunConfig, out: Path) -> int:
    model = cfg.model
    sec = cfg.dispersion
    nu = 2 * math.pi / cfg.L
    rows = []
    ks = _modes(sec, "dispersion")
    for k in ks:
        mu = -(k * nu) ** 2
        for lam in _lambda_grid(sec, "dispersion"):
            r = dispersion(model, float(lam), mu, cfg.h, cfg.g, cfg.shooting_M)
            rows.append([k, mu, float(lam), r.d, r.d_lambda, r.in_dirichlet_spectrum])
    write_csv(out / "dispersion.csv", DISPERSION_COLUMNS, rows)
    br = _bracket(sec, "dispersion")
    if br is not None:
        _write_roots(cfg, model, ks, br, out / "dispersion_roots.csv")
    return EXIT_OK


def _write_roots(cfg, model, ks, br, path):
    rows = []
    for k in ks:
        for bp in find_bifurcation(model, cfg.h, cfg.L, k, br, cfg.g, M=cfg.shooting_M):
            rows.append([k, bp.lam, bp.d_lambda, bp.multiplicity, " ".join(map(str, bp.kernel_modes))])
    write_csv(path, ROOT_COLUMNS, rows)
    return rows


def cmd_bifurcate(cfg: RunConfig, out: Path) -> int:
    sec = cfg.bifurcate
    br = _bracket(sec, "bifurcate") or (0.1, 10.0)
    rows = _write_roots(cfg, cfg.model, _modes(sec, "bifurcate"), br, out / "bifurcations.csv")
    if not rows:
        log.error("no bifurcation point in bracket %s", br)
        return EXIT_REFUSED
    return EXIT_OK


def continuation_config(cfg: RunConfig, both: bool = False) -> cont.ContinuationConfig:
    sec = dict(cfg.continuation)
    kw = {}
    float_keys = ["initial_step", "min_step", "max_step", "lambda_max", "holder_max", "vorticity_max",
                  "vorticity_p", "trivial_w", "height_margin_min", "min_K_min", "bed_clearance_min", "tail_limit",
                  "cond_max"]
    for key in float_keys:
        if key in sec:
            kw[key] = _number(sec, key, "continue", None)
    for key in ("max_points", "fast_iterations", "slow_iterations"):
        if key in sec:
            kw[key] = _number(sec, key, "continue", None, positive=True, integer=True)
    for key in ("height_margin_relative", "check_nodal"):
        if key in sec:
            if not isinstance(sec[key], bool):
                raise ConfigError(f"continue.{key}", "must be true or false")
            kw[key] = sec[key]
    kw["both_half_branches"] = both or bool(sec.get("both_half_branches", False))
    try:
        return cont.ContinuationConfig(tolerance=cfg.tolerance, max_newton=cfg.max_newton,
                                       resolution=(cfg.N, cfg.M), **kw)
    except ValueError as exc:
        raise ConfigError("continue", str(exc)) from None


def _branch_rows(points):
    return [[p.s, p.monitors["lambda"], p.monitors["q"], p.monitors["wave_height"], p.monitors["min_K"],
             p.monitors["greatest_height_margin"], p.monitors["bed_clearance"], p.newton_iterations,
             p.verdict_so_far] for p in points]


def _write_branch(result: cont.BranchResult, out: Path, tag: str, every: int) -> dict:
    pts = result.points
    write_csv(out / f"branch{tag}.csv", BRANCH_COLUMNS, _branch_rows(pts))
    prof_dir = out / f"profiles{tag}"
    prof_dir.mkdir(exist_ok=True)
    snaps = []
    for i, p in enumerate(pts):
        if i % every and i != len(pts) - 1:
            continue
        curve = spectral.surface_curve(p.state.w, p.state.disc.h, 256)
        curve[:, 1] += p.state.disc.h
        name = f"profile_{i:04d}.csv"
        write_csv(prof_dir / name, ["X", "Y"], curve.tolist())
        rep = diagnostics.wave_report(p.state, result.lam0, result.branch)
        snaps.append({"index": i, "s": p.s, "file": f"profiles{tag}/{name}", "monitors": p.monitors,
                      "report": rep.to_dict()})
    if pts:
        io.save_state(pts[-1].state, out / f"last_state{tag}.json",
                      {"lam0": result.lam0, "k0": result.k0, "branch": result.branch, **(result.resume or {})})
    return {
        "branch": result.branch,
        "lam0": result.lam0,
        "k0": result.k0,
        "verdict": result.verdict,
        "verdict_text": result.verdict_text,
        "message": result.message,
        "points": len(pts),
        "snapshots": snaps,
    }


def cmd_continue(cfg: RunConfig, out: Path, resume: str | None = None, both: bool = False) -> int:
    model = cfg.model
    sec = cfg.continuation
    ccfg = continuation_config(cfg, both)
    every = _number(sec, "snapshot_every", "continue", 10, positive=True, integer=True)
    resume_data = None
    if resume is not None:
        state, extra = io.load_state(resume)
        if not extra or "tangent" not in extra:
            raise io.SchemaError("state file has no continuation data", 0, "continuation")
        lam0, k0 = float(extra["lam0"]), int(extra["k0"])
        resume_data = extra
        branches = [int(extra.get("branch", 1))]
        ccfg = replace(ccfg, resolution=(state.disc.N, state.disc.M))
        model = state.model
        cfg.L, cfg.h, cfg.g = state.disc.L, state.disc.h, state.disc.g
    else:
        k0 = _modes(sec, "continue")[0]
        if "lambda0" in sec:
            lam0 = _number(sec, "lambda0", "continue", None)
        else:
            br = _bracket(sec, "continue") or (0.1, 10.0)
            roots = find_bifurcation(model, cfg.h, cfg.L, k0, br, cfg.g, M=cfg.shooting_M)
            if not roots:
                log.error("no bifurcation point for mode %d in %s", k0, br)
                return EXIT_REFUSED
            lam0 = roots[0].lam
        branches = [1, -1] if ccfg.both_half_branches else [1]
    summary = {"lam0": lam0, "k0": k0, "vorticity": model.to_dict(),
               "resolution": [ccfg.resolution[0], ccfg.resolution[1]], "branches": []}
    code = EXIT_OK
    for b in branches:
        tag = "" if b == 1 else "_minus"
        done = []
        try:
            result = cont.continue_branch(model, lam0, k0, ccfg, cfg.L, cfg.h, cfg.g, branch=b,
                                          resume=resume_data, callback=done.append)
        except Exception:
            if done:
                io.save_state(done[-1].state, out / f"last_state{tag}.json",
                              {"lam0": lam0, "k0": k0, "branch": b, "s": done[-1].s})
            raise
        summary["branches"].append(_write_branch(result, out, tag, every))
        if result.verdict in ("stalled", "nodal_failure"):
            code = EXIT_NUMERIC
    summary["verdict"] = summary["branches"][0]["verdict"]
    _write_json(out / "summary.json", summary)
    return code


def cmd_check(path: str, out: Path | None = None) -> int:
    state, extra = io.load_state(path)
    rows = []
    adm = state.admissible
    rows.append(("admissible", "yes" if adm else "NO", ""))
    if not adm:
        for k, v in state.margins.items():
            rows.append((k, f"{v:.3e}", ""))
        _print_table(rows)
        return EXIT_REFUSED
    F = residual(state)
    rows.append(("|F|_inf", f"{np.max(np.abs(F)):.3e}", ""))
    rows.append(("flattened Bernoulli gap", f"{flattened_bernoulli_gap(state):.3e}", ""))
    orc = physical_oracle(state)
    rows.append(("map injective", "yes" if orc.injective else "NO", ""))
    for k, v in orc.residuals().items():
        rows.append((f"oracle {k}", f"{v:.3e}", ""))
    lam0 = float(extra["lam0"]) if extra and "lam0" in extra else state.lam
    branch = int(extra.get("branch", 1)) if extra else 1
    rep = diagnostics.wave_report(state, lam0, branch)
    nod = rep.nodal
    rows.append(("nodal", "flat" if nod.flat else ("pass" if nod.nodal_ok else "FAIL"), ",".join(nod.failures())))
    rows.append(("f positive", "yes" if rep.f_positive else "no", f"{rep.margins['f']:.3e}"))
    rows.append(("unidirectional", "yes" if rep.unidirectional else "no", f"{rep.margins['unidirectional']:.3e}"))
    rows.append(("overhang free", "yes" if rep.overhang_free else "no", f"{rep.margins['overhang']:.3e}"))
    _print_table(rows)
    return EXIT_OK


def _print_table(rows):
    width = max(len(r[0]) for r in rows)
    for name, val, note in rows:
        print(f"{name:<{width}}  {val:<10} {note}".rstrip())


# Entry point -------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vortwave", description="Steady periodic water waves with vorticity.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("laminar", "dispersion", "bifurcate", "continue"):
        s = sub.add_parser(name)
        s.add_argument("--config", required=name != "continue")
        s.add_argument("--out")
        s.add_argument("--resolution", help="N,M")
        if name == "continue":
            s.add_argument("--resume")
            s.add_argument("--both-half-branches", action="store_true")
    c = sub.add_parser("check")
    c.add_argument("state", nargs="?")
    c.add_argument("--state", dest="state_opt")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _parse_resolution(text: str) -> tuple[int, int]:
    try:
        n, m = (int(v) for v in text.split(","))
    except ValueError:
        raise ConfigError("--resolution", "expected N,M") from None
    if n < 1 or m < 8:
        raise ConfigError("--resolution", "need N >= 1 and M >= 8")
    return n, m


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "check":
            path = args.state or args.state_opt
            if path is None:
                raise ConfigError("state", "a state file is required")
            return cmd_check(path)
        doc = io.load_config(args.config) if args.config else {}
        cfg = parse_config(doc)
        if args.resolution:
            cfg.N, cfg.M = _parse_resolution(args.resolution)
        out = Path(args.out or cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "laminar":
            return cmd_laminar(cfg, out)
        if args.command == "dispersion":
            return cmd_dispersion(cfg, out)
        if args.command == "bifurcate":
            return cmd_bifurcate(cfg, out)
        return cmd_continue(cfg, out, args.resume, args.both_half_branches)
    except (ConfigError, io.SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (AdmissibilityError, cont.BifurcationError) as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except (ArithmeticError, SpectrumAssumptionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
