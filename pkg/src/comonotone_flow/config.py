"""Experiment configuration files (YAML).

Layout::

    operator:     {kind: linear|affine, matrix: [[...]], offset: [...], rho, eta}
    schedule:     {kind: power, q, t0}
    dynamics:     {system: DS|TDS, gamma, delta, alpha, beta}
    initial:      {x0: [...], v0: [...]}
    integration:  {tf, rel_tol, abs_tol, max_step, initial_step, samples}
    reference:    {x_star: [...]}                 # optional
    diagnostics:  {rate_window, hypothesis_points}  # optional
    output:       {directory, formats}

Scalars may be written as fractions in quotes, e.g. ``delta: "4/3"``.
Unknown keys are rejected.
"""

from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .dynamics import SystemKind
from .errors import ConfigError, FlowError
from .integrator import IntegratorConfig
from .operators import OperatorSpec
from .schedules import DynamicsParams, TikhonovSchedule

SECTIONS = {
    "operator": {"kind", "matrix", "offset", "rho", "eta"},
    "schedule": {"kind", "q", "t0"},
    "dynamics": {"system", "gamma", "delta", "alpha", "beta"},
    "initial": {"x0", "v0"},
    "integration": {"tf", "rel_tol", "abs_tol", "max_step", "initial_step", "samples"},
    "reference": {"x_star"},
    "diagnostics": {"rate_window", "hypothesis_points"},
    "output": {"directory", "formats"},
}
REQUIRED = ("operator", "schedule", "dynamics", "initial", "integration")
FORMATS = {"csv", "json"}


def _num(value, key):
    if isinstance(value, bool):
        raise ConfigError(f"{key}: expected a number, got a boolean", key)
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(Fraction(value.strip()))
        except (ValueError, ZeroDivisionError):
            pass
        try:
            return float(value)
        except ValueError:
            pass
    raise ConfigError(f"{key}: expected a number, got {value!r}", key)


def _vec(value, key):
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(f"{key}: expected a non-empty list of numbers", key)
    return np.array([_num(v, f"{key}[{i}]") for i, v in enumerate(value)])


def _mat(value, key):
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(f"{key}: expected a list of rows", key)
    rows = [_vec(r, f"{key}[{i}]") for i, r in enumerate(value)]
    n = len(rows)
    if any(r.size != n for r in rows):
        raise ConfigError(f"{key}: matrix must be square", key)
    return np.vstack(rows)


@dataclass
class ExperimentConfig:
    operator: OperatorSpec
    schedule: TikhonovSchedule
    params: DynamicsParams
    system: SystemKind
    x0: np.ndarray
    v0: np.ndarray
    tf: float
    integrator: IntegratorConfig
    samples: int = 400
    x_star: Optional[np.ndarray] = None
    rate_window: float = 0.5
    hypothesis_points: int = 200
    output_dir: str = "output"
    formats: tuple = ("csv", "json")
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def sample_times(self):
        return np.geomspace(self.schedule.t0, self.tf, self.samples)


def parse_config(data):
    """Validate a config mapping and build an :class:`ExperimentConfig`."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    for key in data:
        if key not in SECTIONS:
            raise ConfigError(f"unknown section {key!r}", key)
    for key in REQUIRED:
        if key not in data:
            raise ConfigError(f"missing section {key!r}", key)
    for sec, allowed in SECTIONS.items():
        block = data.get(sec, {})
        if not isinstance(block, dict):
            raise ConfigError(f"{sec}: expected a mapping", sec)
        for key in block:
            if key not in allowed:
                raise ConfigError(f"unknown key {sec}.{key}", f"{sec}.{key}")

    def get(sec, key, default=None, required=False):
        block = data.get(sec, {})
        if key not in block:
            if required:
                raise ConfigError(f"missing key {sec}.{key}", f"{sec}.{key}")
            return default
        return block[key]

    try:
        kind = get("operator", "kind", "linear")
        rho = _num(get("operator", "rho", required=True), "operator.rho")
        eta = _num(get("operator", "eta", required=True), "operator.eta")
        matrix = _mat(get("operator", "matrix", required=True), "operator.matrix")
        if kind == "linear":
            if get("operator", "offset") is not None:
                raise ConfigError("operator.offset only applies to kind 'affine'", "operator.offset")
            op = OperatorSpec.linear(matrix, rho, eta)
        elif kind == "affine":
            offset = _vec(get("operator", "offset", required=True), "operator.offset")
            op = OperatorSpec.affine(matrix, offset, rho, eta)
        else:
            raise ConfigError(f"operator.kind must be 'linear' or 'affine', got {kind!r}",
                              "operator.kind")
    except FlowError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"operator: {exc}", "operator") from exc

    skind = get("schedule", "kind", "power")
    if skind != "power":
        raise ConfigError(f"schedule.kind must be 'power', got {skind!r}", "schedule.kind")
    try:
        schedule = TikhonovSchedule.power(_num(get("schedule", "q", required=True), "schedule.q"),
                                          _num(get("schedule", "t0", 0.1), "schedule.t0"))
    except FlowError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"schedule: {exc}", "schedule") from exc

    system = get("dynamics", "system", "DS")
    try:
        system = SystemKind(system)
    except ValueError:
        raise ConfigError(f"dynamics.system must be DS or TDS, got {system!r}",
                          "dynamics.system") from None
    defaults = DynamicsParams()
    pkw = {}
    for name in ("gamma", "delta", "alpha", "beta"):
        pkw[name] = _num(get("dynamics", name, getattr(defaults, name)), f"dynamics.{name}")
    try:
        params = DynamicsParams(**pkw)
    except FlowError as exc:
        raise ConfigError(f"dynamics: {exc}", "dynamics") from exc

    x0 = _vec(get("initial", "x0", required=True), "initial.x0")
    v0 = _vec(get("initial", "v0", required=True), "initial.v0")
    for key, v in (("initial.x0", x0), ("initial.v0", v0)):
        if v.size != op.dim:
            raise ConfigError(f"{key} has length {v.size}, operator dim is {op.dim}", key)

    tf = _num(get("integration", "tf", required=True), "integration.tf")
    if not tf > schedule.t0:
        raise ConfigError("integration.tf must exceed schedule.t0", "integration.tf")
    samples = get("integration", "samples", 400)
    if not isinstance(samples, int) or isinstance(samples, bool) or samples < 2:
        raise ConfigError("integration.samples must be an integer >= 2", "integration.samples")
    ikw = {}
    for name in ("rel_tol", "abs_tol", "max_step", "initial_step"):
        value = get("integration", name)
        if value is not None:
            ikw[name] = _num(value, f"integration.{name}")
    try:
        icfg = IntegratorConfig(**ikw)
    except FlowError as exc:
        raise ConfigError(f"integration: {exc}", "integration") from exc

    x_star = get("reference", "x_star")
    if x_star is not None:
        x_star = _vec(x_star, "reference.x_star")
        if x_star.size != op.dim:
            raise ConfigError("reference.x_star must match the operator dimension",
                              "reference.x_star")

    window = _num(get("diagnostics", "rate_window", 0.5), "diagnostics.rate_window")
    if not 0.0 < window <= 1.0:
        raise ConfigError("diagnostics.rate_window must lie in (0, 1]", "diagnostics.rate_window")
    hpoints = get("diagnostics", "hypothesis_points", 200)
    if not isinstance(hpoints, int) or hpoints < 2:
        raise ConfigError("diagnostics.hypothesis_points must be an integer >= 2",
                          "diagnostics.hypothesis_points")

    out_dir = get("output", "directory", "output")
    if not isinstance(out_dir, str) or not out_dir:
        raise ConfigError("output.directory must be a non-empty string", "output.directory")
    formats = get("output", "formats", ["csv", "json"])
    if not isinstance(formats, list) or not set(formats) <= FORMATS:
        raise ConfigError(f"output.formats must be a subset of {sorted(FORMATS)}", "output.formats")

    cfg = ExperimentConfig(op, schedule, params, system, x0, v0, tf, icfg, samples, x_star,
                           window, hpoints, out_dir, tuple(formats), raw=data)
    cfg.integrator = replace(icfg, sample_times=cfg.sample_times)
    return cfg


def load_config(path):
    """Read and validate a YAML config file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    return parse_config(data)


def override(data, parameter, value):
    """Return a copy of a raw config mapping with one sweep parameter replaced."""
    import copy

    where = {"q": ("schedule", "q"), "gamma": ("dynamics", "gamma"),
             "delta": ("dynamics", "delta"), "eta": ("operator", "eta"),
             "tf": ("integration", "tf")}
    if parameter not in where:
        raise ConfigError(f"cannot sweep {parameter!r}; choose from {sorted(where)}", parameter)
    out = copy.deepcopy(data)
    sec, key = where[parameter]
    out.setdefault(sec, {})[key] = value
    return out


def bundled_config_path(name):
    """Path of a config shipped with the package (``diagonal`` etc.)."""
    from importlib import resources

    stem = name[:-5] if name.endswith(".yaml") else name
    return Path(str(resources.files("comonotone_flow") / "configs" / f"{stem}.yaml"))
