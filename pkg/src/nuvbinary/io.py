"""Scenario files (YAML), reports (JSON) and CSV exports."""

from __future__ import annotations

import csv
import datetime as _dt
import json
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .model import ConfigurationError, Levels, LtiModel, Scenario, Target

SOLVER_KEYS = ("s2", "method", "max_iters", "tol_convergence", "tol_binary", "variance_floor")
_TOP_KEYS = {"name", "model", "target", "levels", "solver"}


def _section(doc, key, required=True):
    value = doc.get(key)
    if value is None:
        if required:
            raise ConfigurationError(f"{key}: missing section")
        return {}
    if not isinstance(value, dict):
        raise ConfigurationError(f"{key}: expected a mapping")
    return value


def _unknown(section, allowed, prefix):
    extra = sorted(set(section) - set(allowed))
    if extra:
        raise ConfigurationError(f"{prefix}.{extra[0]}: unknown field")


def scenario_from_dict(doc) -> Scenario:
    if not isinstance(doc, dict):
        raise ConfigurationError("scenario: top level must be a mapping")
    _unknown(doc, _TOP_KEYS, "scenario")
    m = _section(doc, "model")
    _unknown(m, ("A", "B", "C", "d", "x0"), "model")
    for key in ("A", "B", "C"):
        if key not in m:
            raise ConfigurationError(f"model.{key}: missing")
    model = LtiModel(m["A"], m["B"], m["C"], m.get("d"), m.get("x0"))
    t = _section(doc, "target")
    _unknown(t, ("ybreve", "weights"), "target")
    if "ybreve" not in t:
        raise ConfigurationError("target.ybreve: missing")
    target = Target(t["ybreve"], t.get("weights"))
    lv = _section(doc, "levels", required=False)
    _unknown(lv, ("a", "b"), "levels")
    levels = Levels(lv.get("a", 0.0), lv.get("b", 1.0))
    solver = _section(doc, "solver", required=False)
    _unknown(solver, SOLVER_KEYS, "solver")
    return Scenario(model, target, levels, name=str(doc.get("name", "scenario")), **solver)


def scenario_to_dict(sc: Scenario) -> dict:
    m = sc.model
    yb = sc.target.ybreve
    # single-output targets are stored as a flat list
    yb = yb[:, 0] if yb.shape[1] == 1 else yb
    return {
        "name": sc.name,
        "model": {"A": m.A.tolist(), "B": m.B.tolist(), "C": m.C.tolist(),
                  "d": m.d.tolist(), "x0": m.x0.tolist()},
        "target": {"ybreve": yb.tolist(), "weights": sc.target.weights.tolist()},
        "levels": {"a": sc.levels.a, "b": sc.levels.b},
        "solver": {k: getattr(sc, k) for k in SOLVER_KEYS},
    }


def bundled_names():
    pkg = resources.files("nuvbinary") / "data"
    return sorted(p.name[:-len(".scenario")] for p in pkg.iterdir()
                  if p.name.endswith(".scenario"))


def load_scenario(path_or_name) -> Scenario:
    """Read a scenario file; a bare bundled name such as ``"dac"`` also works."""
    path = Path(path_or_name)
    if not path.exists() and str(path_or_name) in bundled_names():
        text = (resources.files("nuvbinary") / "data" / f"{path_or_name}.scenario").read_text()
    else:
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigurationError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path}: invalid YAML ({exc})") from None
    return scenario_from_dict(doc)


def save_scenario(sc: Scenario, path, header=None):
    lines = [f"# {line}".rstrip() for line in (header or "").splitlines()]
    body = yaml.safe_dump(scenario_to_dict(sc), sort_keys=False, default_flow_style=None, width=100)
    Path(path).write_text("\n".join(lines + [body]) if lines else body)


def save_report(report, path, scenario=None, timestamp=True, extra=None):
    doc = report.to_dict()
    if scenario is not None:
        doc["scenario"] = scenario.name
        doc["K"] = scenario.horizon
    if extra:
        doc.update(extra)
    if timestamp:
        doc["created"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _fmt(x):
    return repr(float(x))


def write_trajectory_csv(report, scenario: Scenario, path):
    L = scenario.model.n_outputs
    w = scenario.target.weights
    header = (["k", "u_k"] + [f"y_k_{l + 1}" for l in range(L)]
              + [f"ybreve_k_{l + 1}" for l in range(L)] + ["w_k"])
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        for k in range(scenario.horizon):
            yb = [_fmt(v) if w[k] > 0 else "" for v in scenario.target.ybreve[k]]
            out.writerow([k + 1, _fmt(report.u[k])] + [_fmt(v) for v in report.y[k]] + yb
                         + [_fmt(w[k])])


def write_trace_csv(report, path):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["iteration", "evidence_or_objective", "binary_residual", "max_delta_u"])
        for i, (t, r, d) in enumerate(zip(report.trace, report.residual_trace,
                                          report.delta_trace), start=1):
            out.writerow([i, _fmt(t), _fmt(r), "" if not np.isfinite(d) else _fmt(d)])


def write_characteristic_csv(points, path):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["method", "s2", "mu", "x_hat", "converged", "binary_flag"])
        for p in points:
            out.writerow([p.method, _fmt(p.s2), _fmt(p.mu), _fmt(p.x_hat), int(p.converged),
                          int(p.binary)])


def write_comparison_csv(rows, path):
    """``rows`` are ``(instance_id, Comparison)`` pairs."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["instance", "K", "cost_opt", "cost_ikie", "ratio_or_gap", "hamming",
                      "ikie_iterations", "binary_flag"])
        for inst, c in rows:
            out.writerow([inst, c.K, _fmt(c.cost_opt), _fmt(c.cost_ikie), _fmt(c.ratio_or_gap),
                          c.hamming, c.iterations, int(c.binary)])
