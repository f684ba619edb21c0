"""Deterministic suite runner over all modules, with JSON/CSV report emit.

A suite config is a single JSON file:

    {
      "seed": 20240817,
      "output_dir": "runs/default",
      "cases": [
        {"id": "...", "mode": "verify" | "scan" | "flow",
         "check": "<check name>", "params": {...}, "expect": "<verdict>"},
        ...
      ]
    }

The seed fully determines every sample point: each case draws from
numpy's PCG64 seeded with a stable hash of (seed, case id), so two runs
with an equal config produce byte-identical reports.  Case failures are
recorded, never raised; the CLI exit code is 0 exactly when every case
met its expected verdict.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import platform
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path

import numpy as np

from . import __version__
from .energyflow import (
    ConformalChange,
    conformal_energy_delta,
    grid_pairing_stats,
    grid_variation_duality_residual,
    parallel_energy,
    random_unit_field,
    unit_flow_torus,
    yano_integral,
)
from .fields import (
    Conformal,
    KillingRotation,
    Normalized,
    ParallelTorus,
    QuadraticGradient,
    Scaled,
    UnitAngleField,
    random_trig_field,
)
from .geometry import (
    ConformalTorus,
    FlatTorus,
    RoundSphere,
    product_sine_scalar,
    random_trig_scalar,
    zero_scalar,
)
from .kkmetrics import (
    KKMetricSpec,
    ScalarProfile,
    constant_profile,
    exponential_profile,
    koszul_residuals,
    power_profile,
    presets,
    shifted_profile,
    validate,
)
from .profiles import (
    FEASIBLE,
    Obstruction,
    ProfileProblem,
    closed_form_B,
    construct_B_from_C,
    enlarged_metric,
    obstruction_check,
    peak_norm_sq,
    profile_ode_residual,
)
from .quadrature import sphere_quadrature, torus_quadrature
from .tension import (
    conformal_defect,
    constant_norm_condition,
    evaluate_residuals,
    surface_identity_residual,
    tension,
    unit_section_residual,
)


class ConfigError(ValueError):
    """Config did not parse or validate; the message names the offending key."""


# ---------------------------------------------------------------------------
# config parsing

def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ConfigError(f"{context}: missing required key '{key}'")
    return mapping[key]


def parse_manifold(cfg: dict, context: str = "manifold"):
    kind = _require(cfg, "kind", context)
    if kind == "sphere":
        return RoundSphere(int(_require(cfg, "dim", context)))
    if kind == "flat_torus":
        periods = tuple(cfg.get("periods", (2 * math.pi, 2 * math.pi)))
        return FlatTorus(periods)
    if kind == "conformal_torus":
        ucfg = _require(cfg, "u", context)
        ukind = _require(ucfg, "kind", f"{context}.u")
        if ukind == "product_sine":
            periods = tuple(cfg.get("periods", (2 * math.pi, 2 * math.pi)))
            u = product_sine_scalar(float(_require(ucfg, "amplitude", f"{context}.u")),
                                    int(ucfg.get("kx", 1)), int(ucfg.get("ky", 1)),
                                    periods)
            return ConformalTorus(u, periods)
        if ukind == "zero":
            return ConformalTorus(zero_scalar(), tuple(cfg.get("periods", (2 * math.pi, 2 * math.pi))))
        raise ConfigError(f"{context}.u: unknown scalar kind '{ukind}'")
    raise ConfigError(f"{context}: unknown manifold kind '{kind}'")


def parse_field(cfg: dict, context: str = "field"):
    kind = _require(cfg, "kind", context)
    if kind == "conformal":
        return Conformal(tuple(float(c) for c in _require(cfg, "a", context)))
    if kind == "quadratic":
        eigs = tuple((float(v), int(mult)) for v, mult in _require(cfg, "eigs", context))
        return QuadraticGradient(eigs)
    if kind == "killing":
        return KillingRotation(tuple(float(t) for t in _require(cfg, "thetas", context)),
                               int(_require(cfg, "ambient_dim", context)))
    if kind == "parallel":
        v = _require(cfg, "v", context)
        return ParallelTorus((float(v[0]), float(v[1])))
    if kind == "normalized":
        return Normalized(parse_field(_require(cfg, "inner", context), f"{context}.inner"))
    if kind == "scaled":
        return Scaled(parse_field(_require(cfg, "inner", context), f"{context}.inner"),
                      float(_require(cfg, "factor", context)))
    raise ConfigError(f"{context}: unknown field kind '{kind}'")


def parse_profile(cfg, context: str = "profile") -> ScalarProfile:
    if isinstance(cfg, (int, float)):
        return constant_profile(float(cfg))
    form = _require(cfg, "form", context)
    if form == "const":
        return constant_profile(float(_require(cfg, "value", context)))
    if form == "exp":
        return exponential_profile(float(cfg.get("K", 1.0)), float(_require(cfg, "rate", context)))
    if form == "power":
        return power_profile(float(cfg.get("K", 1.0)), float(_require(cfg, "const", context)),
                             float(_require(cfg, "slope", context)),
                             float(_require(cfg, "exponent", context)))
    raise ConfigError(f"{context}: unknown profile form '{form}'")


def field_peak_norm_sq(fld) -> float:
    """Attained sup of |sigma|^2 for catalog fields, for default horizons."""
    if isinstance(fld, Conformal):
        return float(fld.a_vec @ fld.a_vec)
    if isinstance(fld, QuadraticGradient):
        gap = max(v for v, _ in fld.eigs) - min(v for v, _ in fld.eigs)
        return gap * gap / 4.0
    if isinstance(fld, KillingRotation):
        return max((t * t for t in fld.thetas), default=0.0)
    if isinstance(fld, ParallelTorus):
        return float(fld.v[0] ** 2 + fld.v[1] ** 2)
    if isinstance(fld, Scaled):
        return fld.factor ** 2 * field_peak_norm_sq(fld.inner)
    if isinstance(fld, Normalized):
        return 1.0
    return 1.0


def parse_metric(cfg: dict, context: str = "metric", fld=None) -> KKMetricSpec:
    default_t_max = 4.0 if fld is None else 1.0 + field_peak_norm_sq(fld)
    t_max = float(cfg.get("t_max", default_t_max))
    if "preset" in cfg:
        name = cfg["preset"]
        params = {k: v for k, v in cfg.items() if k not in ("preset", "t_max")}
        return presets(name, t_max=t_max, **params)
    if "closed_form" in cfg:
        fam_cfg = dict(cfg["closed_form"])
        family = fam_cfg.pop("family", None)
        if family is None:
            raise ConfigError(f"{context}.closed_form: missing required key 'family'")
        B = closed_form_B(family, **fam_cfg)
        if isinstance(B, Obstruction):
            raise ConfigError(f"{context}.closed_form: family parameters are "
                              f"obstructed ({B.describe()})")
        C = parse_profile(cfg.get("C", 0.0), f"{context}.C")
        if "A0" in cfg and cfg["A0"] is not None:
            return enlarged_metric(B, float(cfg["A0"]), t_max,
                                   name=cfg.get("name", f"{family}+A0"))
        return KKMetricSpec(constant_profile(1.0), B, C, t_max,
                            cfg.get("name", family))
    if "B" in cfg:
        B = parse_profile(cfg["B"], f"{context}.B")
        C = parse_profile(cfg.get("C", 0.0), f"{context}.C")
        if "A0" in cfg and cfg["A0"] is not None:
            A = shifted_profile(B, float(cfg["A0"]))
        else:
            A = parse_profile(cfg.get("A", 1.0), f"{context}.A")
        return KKMetricSpec(A, B, C, t_max, cfg.get("name", "kk"))
    raise ConfigError(f"{context}: need one of 'preset', 'closed_form' or 'B'")


def case_rng(seed: int, case_id: str) -> np.random.Generator:
    digest = hashlib.sha256(f"{seed}:{case_id}".encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "big"))


# ---------------------------------------------------------------------------
# results

@dataclass
class CaseResult:
    case_id: str
    check: str
    mode: str
    verdict: str
    expected: str
    passed: bool
    metrics: dict
    artifacts: dict = dataclass_field(default_factory=dict)


@dataclass
class Report:
    seed: int
    cases: list[CaseResult]
    environment: dict

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.cases)


# ---------------------------------------------------------------------------
# checks

def _metric_list(params, context, fld=None):
    out = []
    for i, mc in enumerate(params["metrics"]):
        out.append(parse_metric(mc, f"{context}.metrics[{i}]", fld))
    return out


def _check_koszul(params, rng, context):
    m = parse_manifold(params["manifold"], f"{context}.manifold")
    tol = float(params.get("tol", 1e-6))
    samples = int(params.get("samples", 50))
    worst_c, worst_t = 0.0, 0.0
    for spec in _metric_list(params, context):
        c, t = koszul_residuals(m, spec, rng, samples=samples)
        worst_c, worst_t = max(worst_c, c), max(worst_t, t)
    verdict = "pass" if max(worst_c, worst_t) < tol else "fail"
    return verdict, {"max_compatibility": worst_c, "max_torsion": worst_t, "tol": tol}, {}


def _check_tension_residuals(params, rng, context):
    m = parse_manifold(params["manifold"], f"{context}.manifold")
    fld = parse_field(params["field"], f"{context}.field")
    spec = parse_metric(params["metric"], f"{context}.metric", fld)
    vrep = validate(spec)
    if not vrep.passed:
        return "invalid metric", {"validation": vrep.summary()}, {}
    tol = float(params.get("tol", 1e-8))
    pts = m.random_points(rng, int(params.get("samples", 100)))
    rep = evaluate_residuals(m, spec, fld, pts, tol=tol)
    metrics = {
        "max_norm_G": rep.max_norm_G, "max_vertical": rep.max_vertical,
        "max_unit": rep.max_unit, "mean_vertical": rep.mean_vertical,
        "samples": rep.sample_count, "tol": tol,
    }
    verdict = rep.verdict
    floor = params.get("require_horizontal_above")
    if floor is not None:
        worst_h = 0.0
        for p in pts:
            res = tension(m, spec, fld, p)
            worst_h = max(worst_h, m.norm(p, res.horizontal))
        metrics["max_horizontal"] = worst_h
        if worst_h <= float(floor):
            verdict = f"horizontal below {floor:g}"
    return verdict, metrics, {}


def _check_residual_floor(params, rng, context):
    """Sweep of metric specs; verdict 'obstructed' if no spec gets close to 0."""
    m = parse_manifold(params["manifold"], f"{context}.manifold")
    fld = parse_field(params["field"], f"{context}.field")
    floor = float(params.get("floor", 1e-6))
    pts = m.random_points(rng, int(params.get("samples", 100)))
    best = math.inf
    for spec in _metric_list(params, context, fld):
        rep = evaluate_residuals(m, spec, fld, pts)
        best = min(best, rep.max_vertical)
    verdict = "obstructed" if best > floor else "harmonic candidate found"
    return verdict, {"min_max_vertical": best, "floor": floor,
                     "specs": len(params["metrics"])}, {}


def _check_obstruction(params, rng, context):
    spec = parse_metric(params["metric"], f"{context}.metric") if "metric" in params else None
    out = obstruction_check(params["case"], params.get("params", {}), spec)
    if out == FEASIBLE:
        return "feasible", {}, {}
    margin_floor = float(params.get("margin_floor", 1e-6))
    verdict = "obstructed" if out.margin > margin_floor else "margin too small"
    return verdict, {"witness_point": out.witness_point,
                     "witness_value": out.witness_value,
                     "margin": out.margin}, {"inequality": out.inequality}


def _conformal_spec_sweep(rng, count: int) -> list[KKMetricSpec]:
    """Deterministic family of validated specs with A = 1 for rigidity sweeps."""
    specs = [presets("sasaki"), presets("cheeger-gromoll"),
             presets("g_mr", m=2, r=0.0), presets("g_mr", m=1, r=0.5),
             presets("g_mr", m=3, r=1.0)]
    while len(specs) < count:
        rate = -float(rng.uniform(0.1, 1.5))
        K = float(rng.uniform(0.5, 2.0))
        crate = -float(rng.uniform(0.1, 1.0))
        cK = float(rng.uniform(0.0, 0.5))
        spec = KKMetricSpec(constant_profile(1.0), exponential_profile(K, rate),
                            exponential_profile(cK, crate) if cK > 1e-9 else constant_profile(0.0),
                            4.0, f"sweep{len(specs)}")
        if validate(spec).passed:
            specs.append(spec)
    return specs[:count]


def _check_conformal_defect(params, rng, context):
    m = parse_manifold(params["manifold"], f"{context}.manifold")
    a = np.array(params.get("a", [0.0] * (m.ambient_dim - 1) + [1.0]), dtype=float)
    fld = Conformal(tuple(a))
    a_sq = float(a @ a)
    tol = float(params.get("tol", 1e-10))
    count = int(params.get("spec_count", 20))
    specs = _conformal_spec_sweep(rng, count)
    # points on the equator lam = 0
    n_pts = int(params.get("samples", 10))
    worst_gap = 0.0
    min_defect = math.inf
    for spec in specs:
        want = spec.B.value(a_sq) + a_sq * spec.C.value(a_sq)
        min_defect = min(min_defect, want)
        for _ in range(n_pts):
            v = rng.normal(size=m.ambient_dim)
            v = v - (v @ a) * a / a_sq
            p = v / np.linalg.norm(v)
            got = conformal_defect(m, spec, fld, p)
            worst_gap = max(worst_gap, abs(got - want))
    verdict = "obstructed" if worst_gap < tol and min_defect > 0 else "identity failed"
    return verdict, {"max_identity_gap": worst_gap, "min_defect": min_defect,
                     "specs": len(specs), "tol": tol}, {}


def sample_duality_pair(m, spec, rng, max_mode: int = 1, amplitude: float = 0.8,
                        min_pairing_fraction: float = 0.3):
    """Random (field, variation) pair whose duality pairing does not cancel.

    Pairs with |int <tau, V>| below min_pairing_fraction of the absolute
    integrand make the relative residual a 0/0 and are resampled.
    """
    for _ in range(64):
        fld = random_trig_field(rng, max_mode=max_mode, amplitude=amplitude)
        var = random_trig_field(rng, max_mode=max_mode, amplitude=amplitude)
        pairing, pairing_abs = grid_pairing_stats(m, spec, fld, var, 16)
        if abs(pairing) >= min_pairing_fraction * max(pairing_abs, 1e-300):
            return fld, var
    raise RuntimeError("could not sample a non-degenerate duality pair")


def _check_grid_duality(params, rng, context):
    m = parse_manifold(params.get("manifold", {"kind": "flat_torus"}), f"{context}.manifold")
    spec = parse_metric(params.get("metric", {"preset": "sasaki"}), f"{context}.metric")
    pairs = int(params.get("pairs", 10))
    n_coarse = int(params.get("coarse", 32))
    n_fine = int(params.get("fine", 64))
    tol = float(params.get("tol", 1e-3))
    max_mode = int(params.get("max_mode", 1))
    worst_coarse = 0.0
    worst_ratio = 0.0
    for _ in range(pairs):
        fld, var = sample_duality_pair(m, spec, rng, max_mode=max_mode)
        rc = grid_variation_duality_residual(m, spec, fld, var, n_coarse)
        rf = grid_variation_duality_residual(m, spec, fld, var, n_fine)
        worst_coarse = max(worst_coarse, rc)
        worst_ratio = max(worst_ratio, rf / max(rc, 1e-300))
    verdict = "pass" if worst_coarse < tol and worst_ratio <= 0.5 else "fail"
    return verdict, {"max_coarse_residual": worst_coarse,
                     "max_fine_to_coarse_ratio": worst_ratio,
                     "pairs": pairs, "tol": tol}, {}


def _check_surface_identity(params, rng, context):
    m = parse_manifold(params["manifold"], f"{context}.manifold")
    tol = float(params.get("tol", 1e-5))
    samples = int(params.get("samples", 200))
    worst = 0.0
    for p in m.random_points(rng, samples):
        angle = float(rng.uniform(0.0, 2 * math.pi))
        worst = max(worst, surface_identity_residual(m, p, angle))
    return ("pass" if worst < tol else "fail"), {"max_residual": worst, "tol": tol,
                                                 "samples": samples}, {}


def _check_yano(params, rng, context):
    m = parse_manifold(params["manifold"], f"{context}.manifold")
    fld = parse_field(params["field"], f"{context}.field")
    if m.kind == "sphere":
        quad = sphere_quadrature(m)
    else:
        quad = torus_quadrature(m, int(params.get("resolution", 32)))
    tol_factor = float(params.get("tol_factor", 1e-6))
    val = yano_integral(m, fld, quad)
    bound = tol_factor * quad.volume
    return ("pass" if abs(val) < bound else "fail"), {
        "integral": val, "bound": bound, "volume": quad.volume,
        "quadrature": quad.label}, {}


def _check_unit_section(params, rng, context):
    m = parse_manifold(params["manifold"], f"{context}.manifold")
    fld = parse_field(params["field"], f"{context}.field")
    tol = float(params.get("tol", 1e-5))
    worst = 0.0
    count = 0
    target = int(params.get("samples", 50))
    for _ in range(20 * target):
        if count >= target:
            break
        p = m.random_points(rng, 1)[0]
        try:
            r = unit_section_residual(m, fld, p)
        except ValueError:
            continue  # zero of a normalized field's denominator: excluded
        worst = max(worst, m.norm(p, r))
        count += 1
    if count < target:
        return "degenerate field", {"samples": count}, {}
    return ("pass" if worst < tol else "fail"), {"max_residual": worst, "tol": tol,
                                                 "samples": target}, {}


def _check_flow(params, rng, context):
    m = parse_manifold(params["manifold"], f"{context}.manifold")
    spec = parse_metric(params.get("metric", {"B": {"form": "exp", "rate": -1.0}}),
                        f"{context}.metric")
    n = int(params.get("resolution", 64))
    inits = int(params.get("inits", 5))
    target = float(params.get("target_residual", 1e-4))
    energy_tol = float(params.get("energy_tol", 1e-3))
    histories = []
    worst_res = 0.0
    worst_energy_gap = 0.0
    converged = True
    ref = parallel_energy(m, spec, n) if m.kind == "flat_torus" else None
    for k in range(inits):
        init = random_unit_field(m, n, rng)
        out = unit_flow_torus(m, spec, init, target_residual=target)
        converged = converged and out.converged
        worst_res = max(worst_res, out.final_residual)
        histories.append((f"init{k}", out.energies, out.residuals))
        if ref is not None:
            worst_energy_gap = max(worst_energy_gap, abs(out.final_energy - ref) / ref)
    metrics = {"max_final_residual": worst_res, "target": target,
               "resolution": n, "inits": inits}
    verdict = "pass" if converged else "fail"
    if ref is not None:
        metrics["max_energy_gap_rel"] = worst_energy_gap
        metrics["parallel_energy"] = ref
        if worst_energy_gap > energy_tol:
            verdict = "fail"
    artifacts = {"history": histories}
    return verdict, metrics, artifacts


def _check_energy_delta(params, rng, context):
    m = parse_manifold(params.get("manifold", {"kind": "flat_torus"}), f"{context}.manifold")
    ucfg = params.get("u", {"kind": "product_sine", "amplitude": 0.3})
    if ucfg["kind"] != "product_sine":
        raise ConfigError(f"{context}.u: unknown scalar kind '{ucfg['kind']}'")
    u = product_sine_scalar(float(ucfg.get("amplitude", 0.3)),
                            int(ucfg.get("kx", 1)), int(ucfg.get("ky", 1)), m.periods)
    spec = parse_metric(params.get("metric", {"B": {"form": "exp", "rate": -1.0}}),
                        f"{context}.metric")
    sections = int(params.get("sections", 5))
    n = int(params.get("resolution", 48))
    tol = float(params.get("tol", 1e-6))
    change = ConformalChange(u)
    measured = []
    worst_gap = 0.0
    for _ in range(sections):
        fld = UnitAngleField(random_trig_scalar(rng, max_mode=2, amplitude=1.0, periods=m.periods))
        got, want = conformal_energy_delta(m, change, fld, spec, n=n)
        measured.append(got)
        worst_gap = max(worst_gap, abs(got - want) / max(abs(want), 1e-12))
    spread = (max(measured) - min(measured)) / max(abs(max(measured, key=abs)), 1e-12)
    verdict = "pass" if worst_gap < tol and spread < tol else "fail"
    return verdict, {"max_relative_gap": worst_gap, "section_spread_rel": spread,
                     "sections": sections, "tol": tol}, {}


def _check_constant_norm(params, rng, context):
    tol = float(params.get("tol", 1e-12))
    worst = 0.0
    for i, entry in enumerate(params["conditions"]):
        B = parse_profile(entry["B"], f"{context}.conditions[{i}].B")
        k = float(entry["k"])
        worst = max(worst, abs(constant_norm_condition(B, k)))
    return ("pass" if worst < tol else "fail"), {"max_condition": worst, "tol": tol,
                                                 "count": len(params["conditions"])}, {}


def _check_profile_ode(params, rng, context):
    family = params["family"]
    fam_params = dict(params.get("params", {}))
    C = parse_profile(params.get("C", 0.0), f"{context}.C")
    t_peak = peak_norm_sq(family, **fam_params)
    problem = ProfileProblem(family, fam_params, C, t_peak)
    B = construct_B_from_C(problem, t_max=float(params.get("t_max", t_peak + 1.0)))
    residual = profile_ode_residual(problem, B)
    spec = KKMetricSpec(constant_profile(1.0), B, C,
                        float(params.get("t_max", t_peak + 1.0)), f"{family}-ode")
    vrep = validate(spec)
    table = [(t, B.value(t), B.derivative(t))
             for t in np.linspace(0.0, spec.t_max, int(params.get("table_points", 101)))]
    verdict = "pass" if residual < 1e-8 and vrep.passed else "fail"
    return verdict, {"ode_residual": residual, "min_B": vrep.min_B,
                     "t_peak": t_peak}, {"profile_table": table}


CHECKS = {
    "koszul": _check_koszul,
    "tension_residuals": _check_tension_residuals,
    "residual_floor": _check_residual_floor,
    "obstruction": _check_obstruction,
    "conformal_defect": _check_conformal_defect,
    "grid_duality": _check_grid_duality,
    "surface_identity": _check_surface_identity,
    "yano": _check_yano,
    "unit_section": _check_unit_section,
    "flow": _check_flow,
    "energy_delta": _check_energy_delta,
    "constant_norm": _check_constant_norm,
    "profile_ode": _check_profile_ode,
}


# ---------------------------------------------------------------------------
# runner

def load_config(path: str | Path) -> dict:
    path = Path(path)
    try:
        cfg = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    if "cases" not in cfg:
        raise ConfigError(f"{path}: missing required key 'cases'")
    seen = set()
    for i, case in enumerate(cfg["cases"]):
        for key in ("id", "check"):
            if key not in case:
                raise ConfigError(f"cases[{i}]: missing required key '{key}'")
        if case["check"] not in CHECKS:
            raise ConfigError(f"cases[{i}] ('{case['id']}'): unknown check "
                              f"'{case['check']}'")
        if case["id"] in seen:
            raise ConfigError(f"cases[{i}]: duplicate case id '{case['id']}'")
        seen.add(case["id"])
    return cfg


def run_suite(cfg: dict, seed: int | None = None,
              modes: tuple[str, ...] = ("verify", "scan", "flow")) -> Report:
    """Evaluate every case in the requested modes; failures never abort."""
    seed = int(cfg.get("seed", 0)) if seed is None else int(seed)
    results = []
    for case in cfg["cases"]:
        mode = case.get("mode", "verify")
        if mode not in modes:
            continue
        cid = case["id"]
        check = case["check"]
        expected = case.get("expect", "pass")
        rng = case_rng(seed, cid)
        try:
            verdict, metrics, artifacts = CHECKS[check](case.get("params", {}), rng,
                                                        f"case '{cid}'")
        except ConfigError:
            raise
        except Exception as exc:  # recorded, never aborts the suite
            verdict = f"error: {type(exc).__name__}: {exc}"
            metrics, artifacts = {}, {}
        results.append(CaseResult(
            case_id=cid, check=check, mode=mode, verdict=verdict,
            expected=expected, passed=(verdict == expected),
            metrics=metrics, artifacts=artifacts))
    results.sort(key=lambda c: c.case_id)
    env = {
        "package": f"kkfields {__version__}",
        "numpy": np.__version__,
        "python": platform.python_version(),
        "rng": "numpy PCG64, per-case seed = sha256(seed:case_id)[:8]",
    }
    return Report(seed=seed, cases=results, environment=env)


# ---------------------------------------------------------------------------
# emitters: stable key order, floats as 17-significant-digit decimals

def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    raise TypeError(f"cannot format {type(x)}")


def _json_value(x, indent: int) -> str:
    pad = " " * indent
    if x is None:
        return "null"
    if isinstance(x, str):
        return json.dumps(x)
    if isinstance(x, (bool, int, float, np.integer, np.floating)):
        return _fmt(x)
    if isinstance(x, (list, tuple, np.ndarray)):
        items = [_json_value(v, indent + 2) for v in x]
        if not items:
            return "[]"
        inner = (",\n" + pad + "  ").join(items)
        return "[\n" + pad + "  " + inner + "\n" + pad + "]"
    if isinstance(x, dict):
        keys = sorted(x.keys())
        if not keys:
            return "{}"
        rows = [f"{json.dumps(k)}: {_json_value(x[k], indent + 2)}" for k in keys]
        inner = (",\n" + pad + "  ").join(rows)
        return "{\n" + pad + "  " + inner + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(x)}")


def report_to_dict(report: Report) -> dict:
    return {
        "seed": report.seed,
        "environment": report.environment,
        "cases": [
            {
                "id": c.case_id, "check": c.check, "mode": c.mode,
                "verdict": c.verdict, "expected": c.expected, "passed": c.passed,
                "metrics": c.metrics,
                "notes": {k: v for k, v in c.artifacts.items() if isinstance(v, str)},
            }
            for c in report.cases
        ],
    }


def emit_json(report: Report) -> str:
    return _json_value(report_to_dict(report), 0) + "\n"


CSV_COLUMNS = ("case_id", "check", "mode", "expected", "verdict", "passed", "metrics")


def emit_csv(report: Report) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for c in report.cases:
        metrics = ";".join(f"{k}={_fmt(v) if not isinstance(v, str) else v}"
                           for k, v in sorted(c.metrics.items()))
        writer.writerow([c.case_id, c.check, c.mode, c.expected, c.verdict,
                         "true" if c.passed else "false", metrics])
    return buf.getvalue()


def emit(report: Report, out_dir: str | Path, formats: tuple[str, ...] = ("json", "csv")) -> list[Path]:
    """Write report files plus per-case artifacts (flow histories, profiles)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if "json" in formats:
        path = out_dir / "report.json"
        path.write_text(emit_json(report))
        written.append(path)
    if "csv" in formats:
        path = out_dir / "report.csv"
        path.write_text(emit_csv(report))
        written.append(path)
    for c in report.cases:
        if "history" in c.artifacts:
            for name, energies, residuals in c.artifacts["history"]:
                path = out_dir / f"{c.case_id}_{name}_history.csv"
                with path.open("w", newline="") as fh:
                    w = csv.writer(fh, lineterminator="\n")
                    w.writerow(["iteration", "energy", "residual"])
                    for i, (e, r) in enumerate(zip(energies, residuals)):
                        w.writerow([i, _fmt(float(e)), _fmt(float(r))])
                written.append(path)
        if "profile_table" in c.artifacts:
            path = out_dir / f"{c.case_id}_profile.csv"
            with path.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["t", "B", "dB"])
                for t, b, db in c.artifacts["profile_table"]:
                    w.writerow([_fmt(float(t)), _fmt(float(b)), _fmt(float(db))])
            written.append(path)
    return written
