"""Config-driven pipeline: build a solution, transform it, verify, trace,
integrate energies and export.

The CLI is a thin wrapper around :func:`run_config`.
"""
from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Mapping

import jsonschema

from . import expr as expr_mod
from .calculus import ScalarField, VectorField, scalar_constant
from .coords import ChartError, make_builtin_chart
from .equilibria import (EquilibriumError, FluxFunctionPair, LineLabels, PotentialSolution, add_polar_component,
                         caseB_build, conformal_force_free, ellipsoid_labels, ellipsoid_vacuum, glue_jet,
                         harmonic_conjugate, prolate_labels, prolate_vacuum, spherical_force_free, spherical_labels,
                         winding_extension)
from .equilibria.labels import coordinate_labels
from .export import atomic_write, grid_csv, sample_grid, to_json, vtk_structured_grid
from .report import GridSpec, ResidualReport
from .tracer import surface_drift, trace_line
from .transforms import EquilibriumState, LineLabelFunction, TransformError, bogoyavlenskij, mhd_to_cgl
from .verify import (QuadratureSpec, energy_gradient_check, energy_shell, force_free_alpha,
                     potential_system_residuals, residual_cgl, residual_mhd_dynamic, residual_mhd_static,
                     residual_vacuum)

log = logging.getLogger("magsurf")

DEFAULT_DRIFT = 1e-6


class ConfigError(ValueError):
    """The configuration is invalid (exit status 2)."""


def load_schema() -> dict:
    return json.loads(resources.files("magsurf").joinpath("schema.json").read_text(encoding="utf-8"))


def validate_config(cfg: Any) -> dict:
    try:
        jsonschema.validate(cfg, load_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from None
    return cfg


def load_config(path: str | os.PathLike) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return validate_config(cfg)


# -- solution families -----------------------------------------------------------

@dataclass
class Built:
    """A constructed field with everything downstream stages need."""

    B: VectorField
    P: ScalarField
    labels: LineLabels | None
    box: tuple
    kind: str
    solution: PotentialSolution | None = None
    extras: dict = field(default_factory=dict)


def _w_pair(params: Mapping, c1_default: str, c2_default: str) -> FluxFunctionPair:
    e1 = expr_mod.parse(params.get("C1", c1_default))
    e2 = expr_mod.parse(params.get("C2", c2_default))
    for e in (e1, e2):
        if not e.names <= {"w"}:
            raise ConfigError(f"flux function {e.source!r} may only use w")
    return FluxFunctionPair(lambda w: e1(w=w), lambda w: e2(w=w), name=f"({e1.source}, {e2.source})")


def _fam_ellipsoid(p, chart_cfg):
    b, c = float(p.get("b", 7.0)), float(p.get("c", 10.0))
    sol = ellipsoid_vacuum(b, c, float(p.get("A1", 0.0)), float(p.get("B1", 0.01)), float(p.get("A2", 0.0)),
                           float(p.get("B2", 1 / 30)), y_sign=int(p.get("y_sign", 1)), z_sign=int(p.get("z_sign", 1)))
    d = 0.02 * (c - b)
    box = ((b + d, c - d), (-b + d, b - d), (1.05 * c, 1.4 * c))
    return Built(sol.B, sol.P(), ellipsoid_labels(sol), box, "vacuum", sol)


def _fam_prolate(p, chart_cfg):
    a = float(p.get("a", 2.0))
    sol = prolate_vacuum(a, float(p.get("M0", 1.0)), float(p.get("eta0", 0.3)))
    D = float(p.get("D", 0.0))
    eta0 = float(p.get("eta0", 0.3))
    box = ((eta0 + 0.05, eta0 + 2.0), (0.1, math.pi - 0.1), (0.0, 2 * math.pi))
    B = add_polar_component(sol, D, box=box) if D else sol.B
    return Built(B, sol.P(), prolate_labels(sol, D), box, "vacuum", sol, {"D": D})


def _fam_prolate_glued(p, chart_cfg):
    a = float(p.get("a", 2.0))
    sol = prolate_vacuum(a, float(p.get("M0", 1.0)), float(p.get("eta0", 0.3)))
    L = float(p.get("L", 1000.0 * a))
    B = glue_jet(sol, L, float(p.get("D", 0.0)))
    box = ((a, 10 * a), (0.5 * a, 10 * a), (5 * a, 50 * a))
    return Built(B, scalar_constant(B.chart, 0.0), None, box, "vacuum", None, {"L": L})


def _fam_spherical(p, chart_cfg):
    pair = _w_pair(p, "sin(w^2)", "cos(w^2)")
    sol = spherical_force_free(pair)
    box = ((0.3, math.pi - 0.3), (0.0, 2 * math.pi), (0.5, 3.0))
    return Built(sol.B, sol.P(), spherical_labels(sol), box, "force_free", sol)


def _chart(chart_cfg, default: str):
    cfg = chart_cfg or {"name": default}
    try:
        return make_builtin_chart(cfg["name"], cfg.get("params"))
    except ChartError as exc:
        raise ConfigError(str(exc)) from None


def _fam_caseB(p, chart_cfg):
    ch = _chart(chart_cfg, "conformal_identity")
    pair = _w_pair(p, "cos(w)", "sin(w)")
    modes = [tuple(map(float, m)) for m in p.get("modes", [[1.0, 1.0]])]
    box = ch.default_box(margin=0.1)
    sol = caseB_build(ch, modes, int(p.get("tau", 1)), int(p.get("variant", 1)), pair, box=box)
    return Built(sol.B, sol.P(), coordinate_labels(ch), box, "force_free", sol)


def _fam_conformal_ff(p, chart_cfg):
    ch = _chart(chart_cfg, "conformal_identity")
    pair = _w_pair(p, "cos(w)", "sin(w)")
    box = ch.default_box(margin=0.1)
    cf = conformal_force_free(ch, pair, float(p.get("D", 0.0)), box=box)
    return Built(cf.B, scalar_constant(ch, 0.0), cf.labels, box, "force_free" if cf.D == 0 else "field", None)


def _fam_elliptic_winding(p, chart_cfg):
    from .equilibria.families import elliptic_cylinder_example

    a = float(p.get("a", 1.0))
    phi, K = elliptic_cylinder_example(a)
    box = ((0.2, 1.5), (-3.0, 3.0), (0.0, 1.0))
    if p.get("conjugate", "closed_form") == "numerical":
        K = harmonic_conjugate(phi, box=box)
    wf = winding_extension(phi, K, C=float(p.get("C", 0.0)), box=box)
    labels = LineLabels(phi.chart, ("K",), lambda u, v, w: (K(u, v, w),), "K")
    return Built(wf.B, wf.pressure, labels, box, "static", None, {"phi": phi, "K": K})


def _fam_elliptic_planar(p, chart_cfg):
    from .calculus import grad
    from .equilibria.families import elliptic_cylinder_example

    phi, K = elliptic_cylinder_example(float(p.get("a", 1.0)))
    box = ((0.2, 1.5), (-3.0, 3.0), (0.0, 1.0))
    labels = LineLabels(phi.chart, ("K", "w"), lambda u, v, w: (K(u, v, w), w), "w")
    return Built(grad(phi), scalar_constant(phi.chart, 0.0), labels, box, "vacuum", None)


FAMILIES: dict[str, Callable[[Mapping, Mapping | None], Built]] = {
    "ellipsoid_vacuum": _fam_ellipsoid,
    "prolate_vacuum": _fam_prolate,
    "prolate_glued": _fam_prolate_glued,
    "spherical_force_free": _fam_spherical,
    "caseB": _fam_caseB,
    "conformal_force_free": _fam_conformal_ff,
    "elliptic_cylinder_winding": _fam_elliptic_winding,
    "elliptic_cylinder_planar": _fam_elliptic_planar,
}


def build_solution(cfg: Mapping) -> Built:
    sol_cfg = cfg.get("solution")
    if sol_cfg is None:
        raise ConfigError("config has no solution section")
    fam = sol_cfg["family"]
    if fam not in FAMILIES:
        raise ConfigError(f"unknown solution family {fam!r}; choose from {sorted(FAMILIES)}")
    try:
        built = FAMILIES[fam](sol_cfg.get("params", {}), cfg.get("chart"))
    except (EquilibriumError, ChartError, expr_mod.ExpressionError, TypeError) as exc:
        raise ConfigError(f"cannot build {fam!r}: {exc}") from None
    if "box" in sol_cfg:
        built.box = tuple(tuple(map(float, b)) for b in sol_cfg["box"])
    return built


# -- transforms ------------------------------------------------------------------

def label_function(source, labels: LineLabels | None, name: str) -> LineLabelFunction:
    e = expr_mod.parse(source)
    if not e.names:
        return LineLabelFunction.constant(float(e()), name)
    allowed = set(labels.names) if labels is not None else set()
    bad = e.names - allowed
    if bad:
        raise ConfigError(f"{name} = {e.source!r} uses {sorted(bad)}, which are not line labels; "
                          f"available labels: {sorted(allowed)}")
    return LineLabelFunction(lambda **kw: e(**kw), labels, f"{name}={e.source}")


def build_state(cfg: Mapping, built: Built) -> EquilibriumState:
    st = cfg.get("state", {})
    ch = built.B.chart
    P0 = float(st.get("P0", 0.0))
    P = built.P + P0 if P0 else built.P
    rho = label_function(st.get("rho", 1.0), built.labels, "rho").field(ch)
    state = EquilibriumState.static(built.B, P, rho, name=cfg.get("name", "seed"))
    for i, t in enumerate(cfg.get("transforms", [])):
        box = built.box
        try:
            if t["type"] == "bogoyavlenskij":
                m = label_function(t["m"], built.labels, "m")
                n = label_function(t["n"], built.labels, "n")
                a = label_function(t.get("a", 1.0), built.labels, "a")
                state = bogoyavlenskij(state, m, n, a, t.get("C"), box=box)
            else:
                f = label_function(t["f"], built.labels, "f")
                g = label_function(t.get("g", 1.0), built.labels, "g")
                state = mhd_to_cgl(state, f, g, t["C0"], t.get("C1", 0.0), box=box)
        except TransformError as exc:
            raise ConfigError(f"transforms/{i}: {exc}") from None
    return state


# -- tasks -----------------------------------------------------------------------

def _grid(cfg_grid: Mapping | None, built: Built, n_override: int | None, default_n: int = 32) -> GridSpec:
    g = dict(cfg_grid or {})
    box = tuple(tuple(map(float, b)) for b in g.get("box", built.box))
    n = n_override or int(g.get("n", default_n))
    return GridSpec(box, n, g.get("eps"))


def _suites(requested, built: Built, state: EquilibriumState) -> list[str]:
    out = []
    for s in requested:
        if s == "auto":
            if state.kind == "cgl":
                out.append("cgl")
            elif state.kind == "mhd_dynamic":
                out.append("dynamic")
            elif built.kind == "vacuum":
                out.append("vacuum")
            elif built.kind == "force_free":
                out.append("force_free")
            else:
                out.append("static")
        else:
            out.append(s)
    return out


def _run_suite(name: str, built: Built, state: EquilibriumState, grid: GridSpec, tol: float) -> ResidualReport:
    if name == "vacuum":
        return residual_vacuum(built.B, grid, tolerance=tol)
    if name == "static":
        return residual_mhd_static(built.B, built.P, grid, tolerance=tol)
    if name == "force_free":
        return force_free_alpha(built.B, grid, tolerance=tol)[1]
    if name == "potential":
        if built.solution is None:
            raise ConfigError("the potential suite needs a potential-based family")
        return potential_system_residuals(built.solution, grid, tolerance=tol)
    if name == "energy_gradient":
        return energy_gradient_check(built.B, built.P, grid, tolerance=tol)
    if name == "dynamic":
        if state.kind == "cgl":
            raise ConfigError("the dynamic suite needs an MHD state; use cgl")
        return residual_mhd_dynamic(state, grid, tolerance=tol)
    if name == "cgl":
        if state.kind != "cgl":
            raise ConfigError("the cgl suite needs a mhd_to_cgl transform")
        return residual_cgl(state, grid, tolerance=tol)
    raise ConfigError(f"unknown suite {name!r}")


def _label_for(built: Built, label: str | None):
    if label is None or label in ("u", "v", "w"):
        return label or "w"
    if built.labels is None or label not in built.labels.names:
        raise ConfigError(f"unknown trace label {label!r}")
    return built.labels.field(label)


@dataclass
class RunResult:
    status: int
    artifacts: list[Path]
    summary: dict


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("MAGSURF_WORKERS", "1")))
    except ValueError:
        return 1


def run_config(cfg: Mapping, out_dir: str | os.PathLike, *, grid_n: int | None = None,
               tolerance: float | None = None) -> RunResult:
    """Execute every task in ``cfg``; return exit status 0 (all verdicts pass) or 1."""
    validate_config(cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = cfg.get("name", "run")
    tasks: list[tuple[str, Callable[[], tuple[bool, dict, dict[str, str]]]]] = []

    if "solution" not in cfg:
        if any(k in cfg for k in ("transforms", "verify", "trace", "energy", "export")):
            raise ConfigError("tasks need a solution section")
        atomic_write(out / f"{name}_summary.json", to_json({"name": name, "status": "pass", "tasks": {}}))
        return RunResult(0, [out / f"{name}_summary.json"], {"name": name, "status": "pass", "tasks": {}})

    built = build_solution(cfg)
    state = build_state(cfg, built)
    ver = cfg.get("verify")
    if ver is not None:
        tol = tolerance or float(ver.get("tolerance", 1e-6 if not cfg.get("transforms") else 1e-5))
        grid = _grid(ver.get("grid"), built, grid_n)
        for suite in _suites(ver.get("suites", ["auto"]), built, state):
            def job(suite=suite, grid=grid, tol=tol):
                rep = _run_suite(suite, built, state, grid, tol)
                return rep.passed, rep.to_dict(), {f"{name}_verify_{suite}.json": rep.to_json()}
            tasks.append((f"verify_{suite}", job))

    for i, tr in enumerate(cfg.get("trace", [])):
        label = _label_for(built, tr.get("label"))

        def job(i=i, tr=tr, label=label):
            pl = trace_line(built.B, tuple(tr["start"]), float(tr["length"]), n_out=int(tr.get("n_out", 201)),
                            rtol=float(tr.get("rtol", 1e-9)))
            drift = surface_drift(pl, label)
            lim = float(tr.get("max_drift", DEFAULT_DRIFT))
            info = {"status": pl.status, "length": pl.length, "drift": drift, "max_drift": lim,
                    "verdict": "pass" if drift <= lim else "fail"}
            files = {f"{name}_trace_{i}.csv": pl.to_csv(), f"{name}_trace_{i}.json": pl.to_json()}
            return drift <= lim, info, files
        tasks.append((f"trace_{i}", job))

    for i, en in enumerate(cfg.get("energy", [])):
        def job(i=i, en=en):
            uv = en.get("uv_box", [list(b) for b in built.box[:2]])
            q = QuadratureSpec((tuple(uv[0]), tuple(uv[1]), (en["w1"], en["w2"])), int(en.get("n", 16)),
                               int(en.get("levels", 3)))
            res = energy_shell(built.B, float(en["w1"]), float(en["w2"]), q)
            info = res.to_dict()
            ok = True
            if "expect" in en:
                ok = res.converged == (en["expect"] == "finite")
                info["expect"] = en["expect"]
            info["verdict"] = "pass" if ok else "fail"
            return ok, info, {f"{name}_energy_{i}.json": to_json(info)}
        tasks.append((f"energy_{i}", job))

    exp = cfg.get("export")
    if exp:
        def job(exp=exp):
            grid = _grid(exp.get("grid"), built, grid_n, default_n=16)
            vecs = {"B": state.B}
            if state.kind != "mhd_static":
                vecs["V"] = state.V
            sc = {"rho": state.rho}
            if state.kind == "cgl":
                sc.update(p_perp=state.p_perp, p_par=state.p_par)
            else:
                sc["P"] = state.P
            data = sample_grid(grid, vecs, sc)
            files = {}
            if exp.get("vtk", True):
                files[f"{name}_grid.vtk"] = vtk_structured_grid(data, name)
            if exp.get("csv", False):
                files[f"{name}_grid.csv"] = grid_csv(data)
            return True, {"points": int(data.valid.sum()), "files": sorted(files)}, files
        tasks.append(("export", job))

    def guarded(item):
        label, fn = item
        try:
            return label, fn()
        except ConfigError:
            raise
        except (EquilibriumError, TransformError, ValueError, RuntimeError) as exc:
            log.error("task %s failed: %s", label, exc)
            return label, (False, {"error": str(exc), "verdict": "fail"}, {})

    nw = _workers()
    if nw > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(nw) as ex:
            results = list(ex.map(guarded, tasks))
    else:
        results = [guarded(t) for t in tasks]

    artifacts: list[Path] = []
    summary: dict[str, Any] = {"name": name, "tasks": {}}
    ok_all = True
    for label, (ok, info, files) in results:
        ok_all &= bool(ok)
        summary["tasks"][label] = info if not isinstance(info, dict) or "equations" not in info else {
            "verdict": info["verdict"], "max_abs": max((e["max_abs"] for e in info["equations"]), default=0.0)}
        for fname, text in files.items():
            artifacts.append(atomic_write(out / fname, text))
    summary["status"] = "pass" if ok_all else "fail"
    artifacts.append(atomic_write(out / f"{name}_summary.json", to_json(summary)))
    return RunResult(0 if ok_all else 1, artifacts, summary)
