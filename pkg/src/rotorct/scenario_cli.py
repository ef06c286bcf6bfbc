"""Scenario configs, unit conversion and the ``rotorct`` command line.

A scenario is one JSON object.  Physical inputs carry their SI unit in the
key name (``L_bar_m``, ``U_bar_mps``) and the rotation rate is given either
directly as ``k`` or through a ``units`` block, never both::

    {
      "mode": "classify",
      "k": 0.5,
      "field": {"kind": "affine", "A": [[0.5, 0.0], [0.0, 0.5]]},
      "grid": {"nx": 8, "ny": 8, "x": [-1, 1], "y": [-1, 1]}
    }

Every artifact goes to ``--out`` (default ``out``): ``report.json`` plus the
mode's CSV series, each written to a temp file and renamed into place.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import flowmap, kinetic, period, spectral_ode, threshold
from .errors import ConfigInvalid, RotorCTError
from .fields import Domain, FieldSpec, TrigMode, grad_analysis, sample_field
from .io import write_csv, write_json

MODES = ("classify", "integrate", "period", "flowmap", "kinetic-check", "kinetic-run", "units")

# ---------------------------------------------------------------------------
# units


@dataclass(frozen=True)
class UnitsReport:
    epsilon: float
    L_bar_m: float
    U_bar_mps: float
    k: float
    Omega_rad_per_s: float
    time_scale_s: float
    inertial_period_scaled: float
    inertial_period_s: float
    inertial_period_hours: float

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def units_convert(epsilon: float, L_bar: float, U_bar: float) -> UnitsReport:
    """Rossby number and scales to ``k``, ``Omega`` and the inertial period.

    Examples
    --------
    >>> round(units_convert(0.5, 1.0, 1.0).inertial_period_scaled, 12)
    3.141592653593
    """
    Omega, k = period.rossby_to_rotation(epsilon, L_bar, U_bar)
    T_bar = math.pi / k
    T = period.physical_period(T_bar, L_bar, U_bar)
    return UnitsReport(epsilon=epsilon, L_bar_m=L_bar, U_bar_mps=U_bar, k=k,
                       Omega_rad_per_s=Omega, time_scale_s=L_bar / U_bar,
                       inertial_period_scaled=T_bar, inertial_period_s=T,
                       inertial_period_hours=T / 3600.0)


@dataclass(frozen=True)
class UnitsPreset:
    epsilon: float
    L_bar_m: float
    U_bar_mps: float
    reference_hours: float
    status: str          # "reproduced" | "discrepancy" | "excluded"
    note: str


UNIT_PRESETS: dict[str, UnitsPreset] = {
    "gulf_stream": UnitsPreset(
        0.07, 1.0e5, 1.0, 11.7, "discrepancy",
        "pi/Omega evaluates to 12.22 hr; the quoted 11.7 hr does not follow from these "
        "parameters and is kept only as a recorded discrepancy"),
    "weather": UnitsPreset(
        0.14, 1.0e6, 20.0, 12.2, "reproduced",
        "same Omega as gulf_stream; 12.22 hr agrees with the quoted 12.2 hr"),
    "earth_core": UnitsPreset(
        2.0e-7, 3.0e6, 1.0e-3, 11.95, "excluded",
        "pi/Omega evaluates to about 1.05 hr, not the quoted 11.95 hr; the figure cannot be "
        "reproduced from the listed parameters and is excluded from validation"),
    "jupiter": UnitsPreset(
        0.015, 1.0e7, 1.0e-3, 5.13, "excluded",
        "pi/Omega evaluates to about 30 years, not the quoted 5.13 hr; the figure cannot be "
        "reproduced from the listed parameters and is excluded from validation"),
}


def preset_table() -> dict:
    out = {}
    for name, p in UNIT_PRESETS.items():
        rep = units_convert(p.epsilon, p.L_bar_m, p.U_bar_mps)
        out[name] = {"epsilon": p.epsilon, "L_bar_m": p.L_bar_m, "U_bar_mps": p.U_bar_mps,
                     "computed_hours": rep.inertial_period_hours,
                     "reference_hours": p.reference_hours, "status": p.status, "note": p.note}
    return out


# ---------------------------------------------------------------------------
# config schema


@dataclass(frozen=True)
class UnitsSpec:
    epsilon: float
    L_bar_m: float
    U_bar_mps: float
    preset: Optional[str] = None


@dataclass(frozen=True)
class IntegrateOptions:
    alpha: tuple[float, float] = (0.0, 0.0)
    t_end: Optional[float] = None      # default 10 pi / k
    rs_track: bool = False


@dataclass(frozen=True)
class PeriodOptions:
    theta0: tuple[float, ...] = tuple(round(0.1 * i, 10) for i in range(1, 11))
    tol: float = 1e-12
    alpha: Optional[tuple[float, float]] = None   # with a field: period of the data there


@dataclass(frozen=True)
class FlowmapOptions:
    alpha: tuple[float, float] = (0.0, 0.0)
    t_end: Optional[float] = None      # default one period pi / k
    n_samples: int = 201


@dataclass(frozen=True)
class KineticCheckOptions:
    rho: float = 1.0
    U: tuple[float, float] = (0.0, 0.0)
    temperature: float = 1.0
    N: int = 128


@dataclass(eq=False)
class ScenarioConfig:
    mode: str
    k: Optional[float] = None
    units: Optional[UnitsSpec] = None
    field: Optional[FieldSpec] = None
    grid: threshold.Lattice = dc_field(default_factory=threshold.Lattice)
    solver: spectral_ode.SolverConfig = dc_field(default_factory=spectral_ode.SolverConfig)
    integrate: Optional[IntegrateOptions] = None
    period: Optional[PeriodOptions] = None
    flowmap: Optional[FlowmapOptions] = None
    kinetic: Optional[kinetic.BGKConfig] = None
    kinetic_check: Optional[KineticCheckOptions] = None
    seed: Optional[int] = None

    @property
    def k_value(self) -> float:
        if self.k is not None:
            return self.k
        return 1.0 / (2.0 * self.units.epsilon)

    def to_dict(self) -> dict:
        return _config_to_dict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def __eq__(self, other) -> bool:
        return isinstance(other, ScenarioConfig) and self.to_dict() == other.to_dict()


_TOP_KEYS = {"mode", "k", "units", "field", "grid", "solver", "integrate", "period",
             "flowmap", "kinetic", "kinetic_check", "seed"}
_REQUIRED = {
    "classify": ("field",),
    "integrate": ("field", "integrate"),
    "flowmap": ("field", "flowmap"),
    "period": ("period",),
    "kinetic-check": ("kinetic_check",),
    "kinetic-run": ("kinetic",),
    "units": ("units",),
}


class _Reader:
    """Typed access to a JSON object with the key path kept for diagnostics."""

    def __init__(self, obj, path: str):
        if not isinstance(obj, dict):
            raise ConfigInvalid("expected an object", where=path or "<root>")
        self.obj, self.path = obj, path

    def where(self, key) -> str:
        return f"{self.path}.{key}" if self.path else str(key)

    def reject_unknown(self, allowed):
        for key in self.obj:
            if key not in allowed:
                raise ConfigInvalid(f"unknown key (allowed: {', '.join(sorted(allowed))})",
                                    where=self.where(key))

    def has(self, key) -> bool:
        return key in self.obj and self.obj[key] is not None

    def sub(self, key) -> "_Reader":
        return _Reader(self.obj[key], self.where(key))

    def number(self, key, default=None, positive=False, required=False) -> Optional[float]:
        if not self.has(key):
            if required:
                raise ConfigInvalid("required", where=self.where(key))
            return default
        v = self.obj[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigInvalid(f"expected a finite number, got {v!r}", where=self.where(key))
        if positive and not v > 0:
            raise ConfigInvalid(f"must be positive, got {v!r}", where=self.where(key))
        return float(v)

    def integer(self, key, default=None, minimum=None) -> Optional[int]:
        if not self.has(key):
            return default
        v = self.obj[key]
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigInvalid(f"expected an integer, got {v!r}", where=self.where(key))
        if minimum is not None and v < minimum:
            raise ConfigInvalid(f"must be >= {minimum}, got {v}", where=self.where(key))
        return v

    def boolean(self, key, default=False) -> bool:
        if not self.has(key):
            return default
        v = self.obj[key]
        if not isinstance(v, bool):
            raise ConfigInvalid(f"expected true/false, got {v!r}", where=self.where(key))
        return v

    def string(self, key, default=None, choices=None) -> Optional[str]:
        if not self.has(key):
            return default
        v = self.obj[key]
        if not isinstance(v, str) or (choices is not None and v not in choices):
            hint = f" (one of {', '.join(choices)})" if choices else ""
            raise ConfigInvalid(f"invalid value {v!r}{hint}", where=self.where(key))
        return v

    def vector(self, key, n: int, default=None) -> Optional[tuple]:
        if not self.has(key):
            return default
        v = self.obj[key]
        if not isinstance(v, list) or len(v) != n:
            raise ConfigInvalid(f"expected a list of {n} numbers", where=self.where(key))
        out = []
        for i, x in enumerate(v):
            if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
                raise ConfigInvalid(f"expected a finite number, got {x!r}", where=f"{self.where(key)}[{i}]")
            out.append(float(x))
        return tuple(out)

    def numbers(self, key, default=None) -> Optional[tuple]:
        if not self.has(key):
            return default
        v = self.obj[key]
        if not isinstance(v, list) or not v:
            raise ConfigInvalid("expected a nonempty list of numbers", where=self.where(key))
        return self.vector(key, len(v))


def _parse_domain(r: _Reader, kind: str) -> Domain:
    if not r.has("domain"):
        return (Domain(x=(-math.inf, math.inf), y=(-math.inf, math.inf)) if kind == "affine"
                else Domain(periodic=True))
    d = r.sub("domain")
    d.reject_unknown({"x", "y", "periodic"})
    x = d.vector("x", 2, (0.0, 2 * math.pi))
    y = d.vector("y", 2, (0.0, 2 * math.pi))
    for name, (lo, hi) in (("x", x), ("y", y)):
        if not lo < hi:
            raise ConfigInvalid("lower bound must be below upper bound", where=d.where(name))
    return Domain(x=x, y=y, periodic=d.boolean("periodic", kind == "trig_poly"))


def _parse_field(r: _Reader, seed: Optional[int]) -> FieldSpec:
    r.reject_unknown({"kind", "A", "b", "modes", "cutoff", "seed", "amplitude", "domain"})
    kind = r.string("kind", choices=("affine", "trig_poly"))
    if kind is None:
        raise ConfigInvalid("required", where=r.where("kind"))
    domain = _parse_domain(r, kind)
    if kind == "affine":
        if not r.has("A"):
            raise ConfigInvalid("required for an affine field", where=r.where("A"))
        rows = r.obj["A"]
        if not isinstance(rows, list) or len(rows) != 2:
            raise ConfigInvalid("expected a 2x2 nested list", where=r.where("A"))
        A = [_Reader({f"A[{i}]": row}, r.path).vector(f"A[{i}]", 2) for i, row in enumerate(rows)]
        b = r.vector("b", 2, (0.0, 0.0))
        return FieldSpec("affine", A=np.array(A), b=np.array(b), domain=domain)
    modes = []
    if r.has("modes"):
        if not isinstance(r.obj["modes"], list):
            raise ConfigInvalid("expected a list of modes", where=r.where("modes"))
        for i, m in enumerate(r.obj["modes"]):
            mr = _Reader(m, f"{r.where('modes')}[{i}]")
            mr.reject_unknown({"component", "m", "n", "cos", "sin"})
            comp = mr.integer("component", 0, minimum=0)
            if comp > 1:
                raise ConfigInvalid("must be 0 (u) or 1 (v)", where=mr.where("component"))
            modes.append(TrigMode(comp, mr.integer("m", 0), mr.integer("n", 0),
                                  mr.number("cos", 0.0), mr.number("sin", 0.0)))
    fseed = r.integer("seed", None, minimum=0)
    if fseed is None and not modes:
        fseed = seed
    cutoff = r.integer("cutoff", None, minimum=1)
    if not modes and (fseed is None or cutoff is None):
        raise ConfigInvalid("trig_poly needs explicit modes, or cutoff plus a seed", where=r.path)
    return FieldSpec("trig_poly", modes=tuple(modes), cutoff=cutoff, seed=fseed,
                     amplitude=r.number("amplitude", 1.0), domain=domain)


def _dataclass_from(r: _Reader, cls, casts: dict):
    names = {f.name for f in dataclasses.fields(cls)}
    r.reject_unknown(names)
    kwargs = {}
    for name, cast in casts.items():
        if r.has(name):
            kwargs[name] = cast(r, name)
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(str(exc), where=r.path) from None


def _num(r, key):
    return r.number(key)


def _pos(r, key):
    return r.number(key, positive=True)


def _int1(r, key):
    return r.integer(key, minimum=1)


def _vec2(r, key):
    return r.vector(key, 2)


def parse_config(obj: dict, mode: Optional[str] = None, seed: Optional[int] = None) -> ScenarioConfig:
    """Validate a decoded JSON object and build a :class:`ScenarioConfig`.

    ``mode`` and ``seed`` (from the command line) override the file; a mode
    that contradicts the file's is an error.
    """
    r = _Reader(obj, "")
    r.reject_unknown(_TOP_KEYS)
    file_mode = r.string("mode", choices=MODES)
    if mode is not None and file_mode is not None and mode != file_mode:
        raise ConfigInvalid(f"file says {file_mode!r} but {mode!r} was requested", where="mode")
    mode = mode or file_mode
    if mode is None:
        raise ConfigInvalid("required", where="mode")
    if mode not in MODES:
        raise ConfigInvalid(f"unknown mode {mode!r}", where="mode")
    if seed is None:
        seed = r.integer("seed", None, minimum=0)
    elif not 0 <= seed < 2 ** 64:
        raise ConfigInvalid("seed must be an unsigned 64-bit integer", where="seed")

    has_k, has_units = r.has("k"), r.has("units")
    if has_k == has_units:
        raise ConfigInvalid("give exactly one of 'k' or 'units'", where="k")
    for key in _REQUIRED[mode]:
        if not r.has(key):
            raise ConfigInvalid(f"required for mode {mode!r}", where=key)

    k = r.number("k", positive=False) if has_k else None
    if k is not None and (k < 0 or (k == 0 and mode not in ("integrate", "classify", "kinetic-check"))):
        raise ConfigInvalid("must be positive" if k <= 0 else "invalid", where="k")
    units = None
    if has_units:
        u = r.sub("units")
        u.reject_unknown({"epsilon", "L_bar_m", "U_bar_mps", "preset"})
        preset = u.string("preset", None, choices=tuple(UNIT_PRESETS))
        p = UNIT_PRESETS.get(preset)
        units = UnitsSpec(
            epsilon=u.number("epsilon", p and p.epsilon, positive=True, required=p is None),
            L_bar_m=u.number("L_bar_m", p and p.L_bar_m, positive=True, required=p is None),
            U_bar_mps=u.number("U_bar_mps", p and p.U_bar_mps, positive=True, required=p is None),
            preset=preset)

    field_spec = _parse_field(r.sub("field"), seed) if r.has("field") else None
    grid = (_dataclass_from(r.sub("grid"), threshold.Lattice,
                            {"nx": _int1, "ny": _int1, "refine": _int1, "x": _vec2, "y": _vec2})
            if r.has("grid") else threshold.Lattice())
    solver = (_dataclass_from(r.sub("solver"), spectral_ode.SolverConfig,
                              {"rel_tol": _pos, "abs_tol": _pos, "dt_init": _pos, "dt_min": _pos,
                               "blowup_bound": _pos, "max_steps": _int1})
              if r.has("solver") else spectral_ode.SolverConfig())
    integ = (_dataclass_from(r.sub("integrate"), IntegrateOptions,
                             {"alpha": _vec2, "t_end": _pos,
                              "rs_track": lambda rr, kk: rr.boolean(kk)})
             if r.has("integrate") else None)
    per = None
    if r.has("period"):
        per = _dataclass_from(r.sub("period"), PeriodOptions,
                              {"theta0": lambda rr, kk: rr.numbers(kk), "tol": _pos,
                               "alpha": _vec2})
        for i, th in enumerate(per.theta0):
            if not 0.0 < th <= 1.0:
                raise ConfigInvalid("theta0 values must lie in (0, 1]", where=f"period.theta0[{i}]")
    fm = (_dataclass_from(r.sub("flowmap"), FlowmapOptions,
                          {"alpha": _vec2, "t_end": _pos, "n_samples": _int1})
          if r.has("flowmap") else None)
    kc = None
    if r.has("kinetic_check"):
        kc = _dataclass_from(r.sub("kinetic_check"), KineticCheckOptions,
                             {"rho": _pos, "U": _vec2, "temperature": _pos, "N": _int1})
    kin = None
    if r.has("kinetic"):
        kr = r.sub("kinetic")
        if "k" in kr.obj:
            raise ConfigInvalid("set the rotation through the top-level 'k' or 'units'",
                                where=kr.where("k"))
        casts = {n: _num for n in ("rho_amp", "U_amp")}
        casts.update({n: _pos for n in ("L", "temperature", "tau_relax", "t_end", "cfl", "rho_mean")})
        casts.update({"Nx": _int1, "Nv": _int1, "U_mean": _vec2,
                      "rotation": lambda rr, kk: rr.string(kk, choices=("spline", "bilinear"))})
        kin = _dataclass_from(kr, kinetic.BGKConfig, casts)
        if max(kin.Nx, kin.Nv) > 64:
            raise ConfigInvalid("resolution above 64^2 x 64^2 is outside the desk budget",
                                where="kinetic.Nx" if kin.Nx > 64 else "kinetic.Nv")

    cfg = ScenarioConfig(mode=mode, k=k, units=units, field=field_spec, grid=grid, solver=solver,
                         integrate=integ, period=per, flowmap=fm, kinetic=kin, kinetic_check=kc,
                         seed=seed)
    if cfg.kinetic is not None:
        cfg.kinetic = dataclasses.replace(cfg.kinetic, k=cfg.k_value)
    return cfg


def load_config(path, mode: Optional[str] = None, seed: Optional[int] = None) -> ScenarioConfig:
    """Read a JSON scenario file; syntax errors report their line number."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config: {exc.strerror}", where=str(path)) from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(exc.msg, where=f"{path}:{exc.lineno}:{exc.colno}") from None
    return parse_config(obj, mode=mode, seed=seed)


def _field_to_dict(spec: FieldSpec) -> dict:
    out: dict[str, Any] = {"kind": spec.kind}
    dom = spec.domain
    if all(math.isfinite(v) for v in dom.x + dom.y):
        out["domain"] = {"x": list(dom.x), "y": list(dom.y), "periodic": dom.periodic}
    if spec.kind == "affine":
        out["A"] = spec.A.tolist()
        out["b"] = spec.b.tolist()
    else:
        out["modes"] = [dataclasses.asdict(m) for m in spec.modes]
        out["amplitude"] = spec.amplitude
        if spec.cutoff is not None:
            out["cutoff"] = spec.cutoff
        if spec.seed is not None:
            out["seed"] = spec.seed
    return out


def _plain(obj) -> dict:
    d = dataclasses.asdict(obj)
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items() if v is not None}


def _config_to_dict(cfg: ScenarioConfig) -> dict:
    out: dict[str, Any] = {"mode": cfg.mode, "grid": _plain(cfg.grid), "solver": _plain(cfg.solver)}
    if cfg.k is not None:
        out["k"] = cfg.k
    if cfg.units is not None:
        out["units"] = _plain(cfg.units)
    if cfg.field is not None:
        out["field"] = _field_to_dict(cfg.field)
    for name in ("integrate", "period", "flowmap", "kinetic_check"):
        sub = getattr(cfg, name)
        if sub is not None:
            out[name] = _plain(sub)
    if cfg.kinetic is not None:
        kin = _plain(cfg.kinetic)
        kin.pop("k", None)
        out["kinetic"] = kin
    if cfg.seed is not None:
        out["seed"] = cfg.seed
    return out


# ---------------------------------------------------------------------------
# scenario runners: each returns (report dict, {csv name: (header, rows)}, exit code)


def _k_block(cfg: ScenarioConfig) -> dict:
    out = {"k": cfg.k_value}
    if cfg.units is not None:
        out["units"] = units_convert(cfg.units.epsilon, cfg.units.L_bar_m, cfg.units.U_bar_mps).to_dict()
    return out


def _classify_grid(cfg: ScenarioConfig) -> threshold.Lattice:
    g = cfg.grid
    dom = cfg.field.domain
    if not all(math.isfinite(v) for v in dom.x + dom.y):
        g = dataclasses.replace(g, x=g.x or (-1.0, 1.0), y=g.y or (-1.0, 1.0))
    return g


def _gradient_block(g) -> dict:
    return {"omega": g.omega, "curl": g.curl, "d": g.d, "gap2": g.gap2, "det": g.det,
            "phi": g.phi, "r": g.r, "s": g.s}


def run_classify(cfg: ScenarioConfig, fail_on_supercritical: bool = False):
    k = cfg.k_value
    grid = _classify_grid(cfg)
    rep = threshold.classify_field(cfg.field, k, grid)
    counts = {v.value: 0 for v in threshold.Verdict}
    for r in rep.reports:
        counts[r.verdict.value] += 1
    worst = rep.reports[rep.argmin]
    report = {
        "mode": "classify", **_k_block(cfg),
        "verdict": rep.verdict.value,
        "min_i0": rep.min_i0,
        "argmin_alpha": list(rep.points[rep.argmin]),
        "margin_tol": worst.margin_tol,
        "n_points": len(rep.reports),
        "counts": counts,
        "worst_point": {"omega0": worst.omega0, "curl0": -worst.omega0, "d0": worst.d0,
                        "gap2_0": worst.gap2_0},
        "vorticity_convention": "omega = u_y - v_x; curl = v_x - u_y = -omega",
    }
    rows = [r.csv_row() for r in rep.reports]
    code = 0
    if fail_on_supercritical and rep.verdict is not threshold.Verdict.SUBCRITICAL:
        code = 2
    return report, {"classify.csv": (threshold.ThresholdReport.CSV_HEADER, rows)}, code


def run_integrate(cfg: ScenarioConfig, fail_on_supercritical: bool = False):
    k = cfg.k_value
    opts = cfg.integrate
    _, G = sample_field(cfg.field, np.array(opts.alpha))
    g = grad_analysis(G, k)
    t_end = opts.t_end if opts.t_end is not None else (10.0 * math.pi / k if k > 0 else 10.0)
    if k > 0:
        traj = spectral_ode.integrate(spectral_ode.SpectralState.from_gradient(g), k, t_end, cfg.solver)
    else:
        traj = spectral_ode.integrate_omega((g.omega, g.d, g.gap2), k, t_end, cfg.solver)
    tr = threshold.threshold_report(g, alpha=opts.alpha)
    report = {"mode": "integrate", **_k_block(cfg), "alpha": list(opts.alpha),
              "initial_gradient": _gradient_block(g), "verdict": tr.verdict.value, "i0": tr.i0,
              "t_end": t_end, "trajectory": traj.summary()}
    if k > 0:
        t_star = flowmap.first_singularity(g.omega, g.d, g.det, k)
        report["first_singularity"] = t_star
        if traj.blowup is not None and t_star is not None:
            lo, hi = traj.blowup
            report["bracket_contains_singularity"] = bool(lo <= t_star <= hi)
        if traj.blowup is None:
            report["empirical_period"] = spectral_ode.empirical_period(traj)
        if opts.rs_track:
            track = spectral_ode.antisymmetric_pair(traj, g.r, g.s, k)
            report["rs_max_rel_discrepancy"] = track.max_rel_discrepancy
    code = 2 if fail_on_supercritical and tr.verdict is not threshold.Verdict.SUBCRITICAL else 0
    return report, {"trajectory.csv": (spectral_ode.Trajectory.CSV_HEADER, list(traj.csv_rows()))}, code


def run_period(cfg: ScenarioConfig, fail_on_supercritical: bool = False):
    k = cfg.k_value
    opts = cfg.period
    rows = list(period.sweep_rows(opts.theta0, k, opts.tol))
    ratios = [float(r[3]) for r in rows]
    report = {"mode": "period", **_k_block(cfg), "theta0": list(opts.theta0),
              "inertial_period": math.pi / k,
              "max_abs_ratio_minus_one": max(abs(x - 1.0) for x in ratios)}
    if cfg.field is not None:
        report["data_period"] = _data_period(cfg, opts.alpha or (0.0, 0.0))
    return report, {"period.csv": (period.SWEEP_HEADER, rows)}, 0


def _data_period(cfg: ScenarioConfig, alpha) -> dict:
    """Period at one point from both eccentricity formulas.

    The one-dimensional formula applies only to ``y``-independent data.
    """
    k = cfg.k_value
    _, G = sample_field(cfg.field, np.array(alpha))
    g = grad_analysis(G, k)
    tr = threshold.threshold_report(g, alpha=alpha)
    out = {"alpha": list(alpha), "verdict": tr.verdict.value, "i0": tr.i0, "theta0": tr.theta0,
           "T_bar": None, "theta0_1d": None, "T_bar_1d": None}
    if tr.theta0 is not None:
        out["T_bar"] = period.period_quadrature(tr.theta0, k, cfg.period.tol).T_bar
    if G[0, 1] == 0.0 and G[1, 1] == 0.0:
        r1 = threshold.threshold_1d(G[0, 0], G[1, 0], k)
        out["theta0_1d"] = r1.theta0_1d
        if r1.theta0_1d is not None and r1.theta0_1d > 0:
            out["T_bar_1d"] = period.period_quadrature(r1.theta0_1d, k, cfg.period.tol).T_bar
    return out


def run_flowmap(cfg: ScenarioConfig, fail_on_supercritical: bool = False):
    k = cfg.k_value
    opts = cfg.flowmap
    alpha = np.array(opts.alpha)
    U0, G = sample_field(cfg.field, alpha)
    g = grad_analysis(G, k)
    t_end = opts.t_end if opts.t_end is not None else math.pi / k
    times = np.linspace(0.0, t_end, opts.n_samples)
    path = flowmap.flow_path(alpha, U0, G, k, times)
    t_star = flowmap.first_singularity(g.omega, g.d, g.det, k)
    tr = threshold.threshold_report(g, alpha=opts.alpha)
    expect_singular = tr.verdict is not threshold.Verdict.SUBCRITICAL
    report = {"mode": "flowmap", **_k_block(cfg), "alpha": list(opts.alpha), "U0": U0.tolist(),
              "initial_gradient": _gradient_block(g),
              "orbit": flowmap.orbit_descriptor(alpha, U0, k).to_dict(),
              "first_singularity": t_star, "verdict": tr.verdict.value, "i0": tr.i0,
              "verdict_matches_singularity": bool((t_star is not None) == expect_singular),
              "min_det_scaled": float(path["det_scaled"].min())}
    rows = [[repr(float(t)), repr(float(x[0])), repr(float(x[1])), repr(float(u[0])),
             repr(float(u[1])), repr(float(dt))]
            for t, x, u, dt in zip(path["t"], path["X"], path["U"], path["det_scaled"])]
    code = 2 if fail_on_supercritical and expect_singular else 0
    return report, {"path.csv": (flowmap.PATH_HEADER, rows)}, code


def run_kinetic_check(cfg: ScenarioConfig, fail_on_supercritical: bool = False):
    k = cfg.k_value
    o = cfg.kinetic_check
    U = np.array(o.U)
    grid = kinetic.VelocityGrid.around(U, o.temperature, o.N)
    f = kinetic.sample_maxwellian(grid, o.rho, U, o.temperature)
    ms = kinetic.moments(f, grid)
    x1, x2 = grid.mesh
    internal = float(np.sum(((x1 - U[0]) ** 2 + (x2 - U[1]) ** 2) * f) * grid.cell_area)
    fm = kinetic.forcing_moments(f, grid, k)
    expected = -2.0 * k * o.rho * (np.array([[0.0, 1.0], [-1.0, 0.0]]) @ U)
    full = kinetic.closure_fluxes(o.rho, U, o.temperature)
    half = kinetic.closure_fluxes(o.rho, U, 0.5 * o.temperature)
    dev_full = float(np.linalg.norm(full.deviation["F_m"]))
    dev_half = float(np.linalg.norm(half.deviation["F_m"]))
    report = {
        "mode": "kinetic-check", **_k_block(cfg),
        "grid": {"center": list(grid.center), "R": grid.R, "N": grid.N},
        "rho": ms.rho, "rho_rel_error": abs(ms.rho - o.rho) / o.rho,
        "m": ms.m.tolist(), "m_abs_error": float(np.abs(ms.m - o.rho * U).max()),
        "internal_energy_x2": internal, "internal_rel_error": abs(internal - o.rho * o.temperature)
        / (o.rho * o.temperature),
        "forcing": {"mass": fm[0], "momentum": np.asarray(fm[1]).tolist(), "energy": fm[2],
                    "expected_momentum": expected.tolist(),
                    "momentum_abs_error": float(np.abs(np.asarray(fm[1]) - expected).max())},
        "closure_deviation_F_m": dev_full,
        "closure_deviation_ratio_half_T": dev_half / dev_full if dev_full > 0 else math.nan,
    }
    return report, {}, 0


def run_kinetic(cfg: ScenarioConfig, fail_on_supercritical: bool = False, out_dir: Path | None = None):
    kc = cfg.kinetic
    state, diag = kinetic.bgk_run(kc)
    report = {"mode": "kinetic-run", **_k_block(cfg), "config": kc.to_dict(),
              "velocity_grid": {"R": state.vgrid.R, "N": state.vgrid.N}, "dt": state.dt,
              "diagnostics": diag.summary()}
    if out_dir is not None:
        kinetic.write_snapshot(state, out_dir / "moments_final")
        report["snapshot"] = "moments_final.bin"
    return report, {"diagnostics.csv": (kinetic.DIAG_HEADER, list(diag.rows()))}, 0


def run_units(cfg: ScenarioConfig, fail_on_supercritical: bool = False):
    u = cfg.units
    rep = units_convert(u.epsilon, u.L_bar_m, u.U_bar_mps)
    report = {"mode": "units", **rep.to_dict(), "presets": preset_table()}
    if u.preset is not None:
        p = UNIT_PRESETS[u.preset]
        report["preset"] = {"name": u.preset, "reference_hours": p.reference_hours,
                            "status": p.status, "note": p.note}
    rows = [[name, repr(v["epsilon"]), repr(v["L_bar_m"]), repr(v["U_bar_mps"]),
             repr(v["computed_hours"]), repr(v["reference_hours"]), v["status"]]
            for name, v in report["presets"].items()]
    header = ("preset", "epsilon", "L_bar_m", "U_bar_mps", "computed_hours", "reference_hours", "status")
    return report, {"units_presets.csv": (header, rows)}, 0


_RUNNERS = {"classify": run_classify, "integrate": run_integrate, "period": run_period,
            "flowmap": run_flowmap, "kinetic-check": run_kinetic_check, "units": run_units}


def run_scenario(cfg: ScenarioConfig, out_dir, fail_on_supercritical: bool = False) -> int:
    """Run one scenario and write its artifacts; returns the exit status."""
    out_dir = Path(out_dir)
    if cfg.mode == "kinetic-run":
        report, tables, code = run_kinetic(cfg, out_dir=out_dir)
    else:
        report, tables, code = _RUNNERS[cfg.mode](cfg, fail_on_supercritical)
    report["config"] = cfg.to_dict() if cfg.mode != "kinetic-run" else report["config"]
    report["artifacts"] = sorted(tables)
    for name, (header, rows) in tables.items():
        write_csv(out_dir / name, header, rows)
    write_json(out_dir / "report.json", report)
    return code


# ---------------------------------------------------------------------------
# command line


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rotorct", description=(
        "Critical thresholds, gradient dynamics, flow maps and kinetic runs "
        "for the rotating pressureless Euler model."))
    p.add_argument("mode", choices=MODES)
    p.add_argument("--config", required=True, help="scenario JSON file")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed for random fields")
    p.add_argument("--fail-on-supercritical", action="store_true",
                   help="exit 2 when the data is supercritical or marginal")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, mode=args.mode, seed=args.seed)
        return run_scenario(cfg, args.out, args.fail_on_supercritical)
    except ConfigInvalid as exc:
        print(f"rotorct: invalid config: {exc}", file=sys.stderr)
        return 1
    except (RotorCTError, ValueError, OSError) as exc:
        print(f"rotorct: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
