"""Scenario files: an INI schema, its parser and the resolution of ``auto`` entries.

Schema (every section except ``[model]`` is optional)::

    [model]
    name = example            ; catalog name, required
    rho = 0.2                 ; comma-separated if the parameter is a vector
    b0 = 1.0                  ; overrides the model's declared input-gain bound

    [initial]
    w0 = 1.0, 0.0             ; default: the model's w0
    z0 = 0.0, 0.0
    x0 = 0.0
    eta0 = 0.0, 0.0
    theta_hat0 = 0.0
    xi_hat0 = 0.0, 0.0
    sigma_hat0 = 0.0

    [gains]
    lambda = 1.0
    ell = 10
    kappa = 30
    G = auto                  ; or comma-separated reals
    g_last = auto
    sat_levels = auto         ; or d+1 comma-separated reals
    dz = auto                 ; or "c, a0, eps0" groups separated by ';'
    allow_unsafe = false      ; skip gain validation (negative experiments)
    level_box = 0.5           ; recipe knobs used by the auto entries
    margin = 1.0
    dz_factor = 1.5
    safety = 1.1

    [sim]
    dt = auto
    t_final = 50
    exo_warmup = 30
    record_every = auto
    engine = auto

    [thresholds]
    output_tol = 1e-2
    param_tol = 5e-2

    [checks]
    resolution = 21
    attractor_rho = -0.2, 0, 0.2
    attractor_warmup = 50
    attractor_horizon = 200
    attractor_bound = 3
    pe_points = 9
    pe_tol = 1e-6
    monotonicity_tol = 1e-10
"""
import configparser
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .models import get_model
from .nonlinearities import DeadZoneParams
from .regulator import RegulatorState
from .simulate import SimConfig, auto_dt

__all__ = ["Scenario", "load_scenario", "parse_scenario", "bundled_scenarios", "bundled_path"]

SCHEMA = {
    "model": {"name", "rho", "b0"},
    "initial": {"w0", "z0", "x0", "eta0", "theta_hat0", "xi_hat0", "sigma_hat0"},
    "gains": {"lambda", "ell", "kappa", "g", "g_last", "sat_levels", "dz", "allow_unsafe",
              "level_box", "margin", "dz_factor", "safety"},
    "sim": {"dt", "t_final", "exo_warmup", "record_every", "engine"},
    "thresholds": {"output_tol", "param_tol"},
    "checks": {"resolution", "attractor_rho", "attractor_warmup", "attractor_horizon",
               "attractor_bound", "pe_points", "pe_tol", "monotonicity_tol"},
}


def _is_auto(text):
    return text is None or text.strip().lower() == "auto"


def _floats(text, key):
    try:
        vals = tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())
    except ValueError:
        raise ConfigurationError(f"'{key}' must be a comma-separated list of numbers, got {text!r}") from None
    if not vals:
        raise ConfigurationError(f"'{key}' is empty")
    return vals


def _float(text, key):
    vals = _floats(text, key)
    if len(vals) != 1:
        raise ConfigurationError(f"'{key}' must be a single number")
    return vals[0]


@dataclass(frozen=True)
class Scenario:
    """A parsed scenario; ``None`` marks an entry to be resolved automatically."""

    model_name: str
    rho: tuple
    b0: float = None
    initial: dict = field(default_factory=dict)
    lam: float = 1.0
    ell: float = 10.0
    kappa: float = 30.0
    G: tuple = None
    g_last: float = None
    sat_levels: tuple = None
    dz: tuple = None
    allow_unsafe: bool = False
    recipe: dict = field(default_factory=dict)
    dt: float = None
    t_final: float = 50.0
    exo_warmup: float = 30.0
    record_every: int = None
    engine: str = "auto"
    output_tol: float = 1e-2
    param_tol: float = 5e-2
    checks: dict = field(default_factory=dict)
    source: str = "<string>"

    @property
    def model(self):
        return get_model(self.model_name)

    def with_overrides(self, dt=None, t_final=None):
        changes = {}
        if dt is not None:
            changes["dt"] = float(dt)
        if t_final is not None:
            changes["t_final"] = float(t_final)
        return replace(self, **changes)

    def gains(self, attractor=None):
        """Resolve the gains; returns ``(RegulatorGains, audit dict)``."""
        from .design import design_gains
        return design_gains(
            self.model, ell=self.ell, kappa=self.kappa, lam=self.lam, G=self.G, g_last=self.g_last,
            sat_levels=self.sat_levels, dz=self.dz, attractor=attractor, check=not self.allow_unsafe,
            **self.recipe)

    def sim_config(self):
        m = self.model
        ini = self.initial
        reg = RegulatorState(
            ini.get("eta0", np.zeros(m.d)), ini.get("theta_hat0", np.zeros(m.q)),
            ini.get("xi_hat0", np.zeros(m.d)), ini.get("sigma_hat0", 0.0))
        return SimConfig(
            rho=self.rho, w0=ini.get("w0"), z0=ini.get("z0"), x0=ini.get("x0", 0.0), regulator0=reg,
            dt=self.dt, t_final=self.t_final, exo_warmup=self.exo_warmup, record_every=self.record_every,
            output_tol=self.output_tol, param_tol=self.param_tol, engine=self.engine)

    def resolve(self):
        """Model, gains, simulation settings and an audit of every resolved value."""
        model = self.model
        gains, audit = self.gains()
        config = self.sim_config()
        audit["sim"] = {"dt": config.dt if config.dt is not None else auto_dt(gains),
                        "dt_source": "scenario" if config.dt is not None else "auto",
                        "t_final": config.t_final, "exo_warmup": config.exo_warmup,
                        "record_every": config.record_every}
        return model, gains, config, audit


def parse_scenario(text, source="<string>"):
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed scenario file {source}: {exc}") from None
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigurationError(f"{source}: unknown section [{sec}]; allowed: {', '.join(SCHEMA)}")
        extra = set(cp[sec]) - SCHEMA[sec]
        if extra:
            raise ConfigurationError(f"{source}: unknown key(s) in [{sec}]: {', '.join(sorted(extra))}")
    if not cp.has_option("model", "name") or not cp["model"]["name"].strip():
        raise ConfigurationError(f"{source}: [model] name is required")

    kw = {"source": source}
    msec = cp["model"]
    kw["model_name"] = msec["name"].strip()
    model = get_model(kw["model_name"])
    kw["rho"] = _floats(msec.get("rho", "0.0"), "rho")
    if len(kw["rho"]) != model.p:
        raise ConfigurationError(f"{source}: rho needs {model.p} entries")
    if "b0" in msec:
        kw["b0"] = _float(msec["b0"], "b0")

    if cp.has_section("initial"):
        ini = {}
        for key, text in cp["initial"].items():
            vals = np.array(_floats(text, key))
            ini[key] = float(vals[0]) if key in ("x0", "sigma_hat0") and vals.size == 1 else vals
        kw["initial"] = ini

    if cp.has_section("gains"):
        g = cp["gains"]
        for key, attr in (("lambda", "lam"), ("ell", "ell"), ("kappa", "kappa")):
            if key in g:
                kw[attr] = _float(g[key], key)
        if not _is_auto(g.get("g")):
            kw["G"] = _floats(g["g"], "G")
        if not _is_auto(g.get("g_last")):
            kw["g_last"] = _float(g["g_last"], "g_last")
        if not _is_auto(g.get("sat_levels")):
            kw["sat_levels"] = _floats(g["sat_levels"], "sat_levels")
        if not _is_auto(g.get("dz")):
            groups = [grp for grp in g["dz"].split(";") if grp.strip()]
            parsed = [_floats(grp, "dz") for grp in groups]
            if any(len(p) != 3 for p in parsed):
                raise ConfigurationError(f"{source}: each dz group needs 'c, a0, eps0'")
            kw["dz"] = tuple(DeadZoneParams(*p) for p in parsed)
        if "allow_unsafe" in g:
            try:
                kw["allow_unsafe"] = g.getboolean("allow_unsafe")
            except ValueError:
                raise ConfigurationError(f"{source}: allow_unsafe must be true or false") from None
        kw["recipe"] = {k: _float(g[k], k) for k in ("level_box", "margin", "dz_factor", "safety") if k in g}

    if cp.has_section("sim"):
        s = cp["sim"]
        if not _is_auto(s.get("dt")):
            kw["dt"] = _float(s["dt"], "dt")
        for key in ("t_final", "exo_warmup"):
            if key in s:
                kw[key] = _float(s[key], key)
        if not _is_auto(s.get("record_every")):
            kw["record_every"] = int(_float(s["record_every"], "record_every"))
        if "engine" in s:
            kw["engine"] = s["engine"].strip()

    if cp.has_section("thresholds"):
        for key in ("output_tol", "param_tol"):
            if key in cp["thresholds"]:
                kw[key] = _float(cp["thresholds"][key], key)

    if cp.has_section("checks"):
        c = cp["checks"]
        checks = {}
        for key in c:
            vals = _floats(c[key], key)
            checks[key] = vals if key == "attractor_rho" else vals[0]
        kw["checks"] = checks

    scen = Scenario(**kw)
    scen.sim_config()  # validate settings early
    return scen


def load_scenario(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read scenario {path}: {exc.strerror}") from None
    return parse_scenario(text, source=str(path))


def bundled_scenarios():
    """Names of the scenario files shipped with the package."""
    root = resources.files("esoreg") / "scenarios"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".ini"))


def bundled_path(name):
    """Filesystem path of a bundled scenario, by name with or without ``.ini``."""
    name = name if name.endswith(".ini") else name + ".ini"
    path = Path(str(resources.files("esoreg") / "scenarios" / name))
    if not path.is_file():
        raise ConfigurationError(f"no bundled scenario '{name}'; available: {', '.join(bundled_scenarios())}")
    return path
