"""Config-driven Monte-Carlo sweeps over the comparison schemes, emitted as CSV.

One simulation run is a grid: sweep values x schemes x channel realizations.
Channels for realization r are drawn from a seed split that depends only on
(master seed, r), so every sweep value and every scheme sees the same
realizations and the comparisons are paired.  Cells are independent, which
makes parallel execution safe; rows are sorted canonically before emission so
the output bytes do not depend on scheduling.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, replace
from multiprocessing import get_context

import numpy as np

from .channel import FadingParams, RIS_LAW, pathloss_linear, sample_geometry, synthesize
from .errors import ParseError, RangeError, ValidationError
from .optimizer import SCHEMES, run_scheme
from .sysmodel import (
    DesignConfig,
    HybridRisSpec,
    mw_to_dbm,
    ris_output_power,
    target_ris_noise,
    theorem1_bound,
    user_sinr,
)

SWEEP_VARS = ("pt", "eta", "L", "gamma")
ROW_STATUSES = ("ok", "infeasible", "fallback")

CSV_HEADER = (
    "sweep_var,sweep_value,scheme,realization,wc_illum_dbm,min_sinr_db,"
    "max_tgt_noise_dbm,pris_dbm,thm1_bound_dbm,iterations,status"
)


@dataclass(frozen=True)
class SimulationConfig:
    """Fully resolved run description.

    Power-like fields are stored in linear units (mW, linear SINR, linear
    amplitude gain); the dB/dBm convention only exists in the config file
    and in the sweep value lists, which keep the units they are plotted in.
    """

    m_antennas: int
    n_ris: int
    num_users: int
    num_targets: int
    dfbs_pos: tuple
    ris_pos: tuple
    rician_factor: float
    n_active: int
    eta: float  # linear amplitude gain
    nu2: float  # mW
    gamma: float  # linear SINR threshold
    sigma2: float  # mW
    r_max: float  # mW
    p_t: float  # mW, total transmit budget
    n_rand: int
    iterations: int
    tolerance: float
    sweep_var: str
    sweep_values: tuple
    realizations: int
    seed: int
    schemes: tuple
    output: str

    def validate(self):
        if self.m_antennas < 1:
            raise RangeError(f"antennas must be >= 1, got {self.m_antennas}")
        side = int(round(math.sqrt(self.n_ris)))
        if self.n_ris < 1 or side * side != self.n_ris:
            raise RangeError(f"ris_elements must be a positive perfect square, got {self.n_ris}")
        if self.num_users < 0 or self.num_targets < 1:
            raise RangeError("need users >= 0 and targets >= 1")
        if not 0 <= self.n_active <= self.n_ris:
            raise RangeError(f"need 0 <= active_elements <= N, got {self.n_active}")
        for name in ("rician_factor", "eta", "nu2", "gamma", "sigma2", "r_max", "p_t", "tolerance"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise RangeError(f"{name} must be finite and >= 0, got {v}")
        if self.n_active > 0 and self.sweep_var != "eta" and self.eta < 1.0:
            raise RangeError(f"gain_db must be >= 0 when active elements exist, got eta={self.eta}")
        if self.n_rand < 0 or self.iterations < 1 or self.tolerance <= 0:
            raise RangeError("bad iteration controls")
        if self.sweep_var not in SWEEP_VARS:
            raise RangeError(f"sweep variable must be one of {SWEEP_VARS}, got {self.sweep_var!r}")
        vals = self.sweep_values
        if len(vals) < 1:
            raise RangeError("sweep needs at least one value")
        if any(not math.isfinite(v) for v in vals):
            raise RangeError("sweep values must be finite")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise RangeError(f"sweep values must be strictly increasing, got {list(vals)}")
        if self.sweep_var == "L":
            for v in vals:
                if v != int(v) or not 0 <= v <= self.n_ris:
                    raise RangeError(f"L sweep values must be integers in [0, N], got {v}")
        if self.sweep_var == "eta" and any(v < 0 for v in vals):
            raise RangeError("eta sweep values are amplitude gains in dB and must be >= 0")
        if self.realizations < 1:
            raise RangeError(f"realizations must be >= 1, got {self.realizations}")
        if self.seed < 0:
            raise RangeError(f"seed must be >= 0, got {self.seed}")
        if not self.schemes:
            raise RangeError("at least one scheme is required")
        for s in self.schemes:
            if s not in SCHEMES:
                raise RangeError(f"unknown scheme {s!r}, expected one of {SCHEMES}")
        if len(set(self.schemes)) != len(self.schemes):
            raise RangeError("duplicate scheme in list")
        return self


@dataclass(frozen=True)
class SweepResult:
    sweep_var: str
    sweep_value: float
    scheme: str
    realization: int
    wc_illum_dbm: float
    min_sinr_db: float
    max_tgt_noise_dbm: float
    pris_dbm: float
    thm1_bound_dbm: float
    iterations: int
    status: str


# ---------------------------------------------------------------------------
# config file
# ---------------------------------------------------------------------------

def _parse_floats(raw):
    return tuple(float(tok) for tok in raw.replace(",", " ").split())


def _parse_vec3(raw):
    vals = _parse_floats(raw)
    if len(vals) != 3:
        raise ValueError(f"expected 3 coordinates, got {len(vals)}")
    return vals


def _parse_names(raw):
    return tuple(tok for tok in raw.replace(",", " ").split())


# (section, key) -> (raw-dict key, value parser).  Raw values stay in the
# file's units; conversion to linear happens once in _build_config.
_SCHEMA = {
    ("geometry", "antennas"): ("antennas", int),
    ("geometry", "ris_elements"): ("ris_elements", int),
    ("geometry", "users"): ("users", int),
    ("geometry", "targets"): ("targets", int),
    ("geometry", "dfbs_pos"): ("dfbs_pos", _parse_vec3),
    ("geometry", "ris_pos"): ("ris_pos", _parse_vec3),
    ("fading", "rician_factor"): ("rician_factor", float),
    ("ris", "active_elements"): ("active_elements", int),
    ("ris", "gain_db"): ("gain_db", float),
    ("ris", "noise_dbm"): ("ris_noise_dbm", float),
    ("design", "sinr_db"): ("sinr_db", float),
    ("design", "noise_dbm"): ("noise_dbm", float),
    ("design", "ris_noise_cap_dbm"): ("ris_noise_cap_dbm", float),
    ("design", "power_per_antenna_db"): ("power_per_antenna_db", float),
    ("design", "randomizations"): ("randomizations", int),
    ("design", "iterations"): ("iterations", int),
    ("design", "tolerance"): ("tolerance", float),
    ("sweep", "variable"): ("variable", str),
    ("sweep", "values"): ("values", _parse_floats),
    ("run", "realizations"): ("realizations", int),
    ("run", "seed"): ("seed", int),
    ("run", "schemes"): ("schemes", _parse_names),
    ("run", "output"): ("output", str),
}

_DEFAULTS = {
    "antennas": 16,
    "ris_elements": 100,
    "users": 2,
    "targets": 4,
    "dfbs_pos": (0.0, 0.0, 0.0),
    "ris_pos": (10.0, -8.0, 5.0),
    "rician_factor": 10.0,
    "active_elements": 20,
    "gain_db": 10.0,
    "ris_noise_dbm": -60.0,
    "sinr_db": 5.0,
    "noise_dbm": -94.0,
    "ris_noise_cap_dbm": -90.0,
    "power_per_antenna_db": 0.0,
    "randomizations": 200,
    "iterations": 10,
    "tolerance": 1e-3,
    "variable": "pt",
    "values": None,  # derived from the variable, see _default_grid
    "realizations": 100,
    "seed": 0,
    "schemes": SCHEMES,
    "output": "sweep.csv",
}

PROFILES = {
    "paper": {},
    "desk": {
        "antennas": 8,
        "ris_elements": 16,
        "users": 2,
        "targets": 2,
        "active_elements": 4,
        "realizations": 20,
        "iterations": 5,
    },
}


def _default_grid(variable, n_active):
    if variable == "pt":
        return (-10.0, -5.0, 0.0, 5.0, 10.0)
    if variable == "eta":
        return (0.0, 5.0, 10.0)
    if variable == "gamma":
        return (0.0, 5.0, 10.0, 15.0)
    if n_active == 0:
        return (0.0,)
    return (0.0, float(n_active), float(2 * n_active))


def _db(x):
    return 10.0 ** (x / 10.0)


def _build_config(raw) -> SimulationConfig:
    for key in ("sinr_db", "noise_dbm", "ris_noise_cap_dbm", "power_per_antenna_db",
                "gain_db", "ris_noise_dbm"):
        if not math.isfinite(raw[key]):
            raise RangeError(f"{key} must be finite, got {raw[key]}")
    values = raw["values"]
    if values is None:
        values = _default_grid(raw["variable"], raw["active_elements"])
    return SimulationConfig(
        m_antennas=raw["antennas"],
        n_ris=raw["ris_elements"],
        num_users=raw["users"],
        num_targets=raw["targets"],
        dfbs_pos=tuple(raw["dfbs_pos"]),
        ris_pos=tuple(raw["ris_pos"]),
        rician_factor=raw["rician_factor"],
        n_active=raw["active_elements"],
        eta=10.0 ** (raw["gain_db"] / 20.0),
        nu2=_db(raw["ris_noise_dbm"]),
        gamma=_db(raw["sinr_db"]),
        sigma2=_db(raw["noise_dbm"]),
        r_max=_db(raw["ris_noise_cap_dbm"]),
        p_t=raw["antennas"] * _db(raw["power_per_antenna_db"]),
        n_rand=raw["randomizations"],
        iterations=raw["iterations"],
        tolerance=raw["tolerance"],
        sweep_var=raw["variable"],
        sweep_values=tuple(float(v) for v in values),
        realizations=raw["realizations"],
        seed=raw["seed"],
        schemes=tuple(raw["schemes"]),
        output=raw["output"],
    ).validate()


def load_config(path, profile=None) -> SimulationConfig:
    """Parse a structured-text config file.

    An empty file yields the full default scenario; a profile name applies
    its overrides before the file's own settings.  Raises ParseError with
    file/line or field diagnostics, RangeError on invariant violations, and
    OSError when the file cannot be read.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, source=str(path), profile=profile)


def parse_config(text, source="<config>", profile=None) -> SimulationConfig:
    parser = configparser.ConfigParser(
        interpolation=None, delimiters=("=",), comment_prefixes=("#", ";")
    )
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        if line is None and getattr(exc, "errors", None):
            line = exc.errors[0][0]
        raise ParseError(str(exc.message if hasattr(exc, "message") else exc), source, line) from exc

    raw = dict(_DEFAULTS)
    if profile is not None:
        if profile not in PROFILES:
            raise RangeError(f"unknown profile {profile!r}, expected one of {sorted(PROFILES)}")
        raw.update(PROFILES[profile])

    known_sections = {sec for sec, _ in _SCHEMA}
    for section in parser.sections():
        if section not in known_sections:
            raise ParseError(f"unknown section [{section}]", source)
        for key, value in parser.items(section):
            try:
                name, cast = _SCHEMA[(section, key)]
            except KeyError:
                raise ParseError(f"unknown field {key!r} in section [{section}]", source) from None
            try:
                raw[name] = cast(value)
            except (ValueError, TypeError) as exc:
                raise ParseError(f"bad value for {section}.{key}: {value!r} ({exc})", source) from exc
    return _build_config(raw)


def default_config(profile=None) -> SimulationConfig:
    return parse_config("", profile=profile)


def with_sweep(cfg: SimulationConfig, variable, values=None) -> SimulationConfig:
    """Swap the sweep variable, deriving the stock value grid if none given."""
    if values is None:
        values = _default_grid(variable, cfg.n_active)
    out = replace(cfg, sweep_var=variable, sweep_values=tuple(float(v) for v in values))
    return out.validate()


# ---------------------------------------------------------------------------
# sweep execution
# ---------------------------------------------------------------------------

def _cell_design(cfg: SimulationConfig, value):
    """DesignConfig and RIS spec for one sweep point."""
    p_t, eta, n_active, gamma = cfg.p_t, cfg.eta, cfg.n_active, cfg.gamma
    if cfg.sweep_var == "pt":
        p_t = cfg.m_antennas * _db(value)
    elif cfg.sweep_var == "eta":
        eta = 10.0 ** (value / 20.0)
    elif cfg.sweep_var == "L":
        n_active = int(value)
    else:
        gamma = _db(value)
    design = DesignConfig(
        p_t=p_t, gamma=gamma, r_max=cfg.r_max, sigma2=cfg.sigma2,
        n_rand=cfg.n_rand, max_iterations=cfg.iterations, tolerance=cfg.tolerance,
    )
    spec = HybridRisSpec(cfg.n_ris, n_active, eta, cfg.nu2)
    return design, spec


def realization_channels(cfg: SimulationConfig, r):
    """Channels for realization r; independent of sweep value and scheme."""
    geo_ss, ch_ss = np.random.SeedSequence(cfg.seed, spawn_key=(1, r)).spawn(2)
    geom = sample_geometry(
        np.random.default_rng(geo_ss),
        cfg.m_antennas, cfg.n_ris, cfg.num_users, cfg.num_targets,
        dfbs_pos=cfg.dfbs_pos, ris_pos=cfg.ris_pos,
    )
    return synthesize(geom, FadingParams(cfg.rician_factor), ch_ss)


def _scheme_seed(cfg: SimulationConfig, r, scheme):
    return np.random.SeedSequence(cfg.seed, spawn_key=(2, r, SCHEMES.index(scheme)))


def _zeta_br(cfg: SimulationConfig):
    d = float(np.linalg.norm(np.asarray(cfg.ris_pos) - np.asarray(cfg.dfbs_pos)))
    return pathloss_linear(d, RIS_LAW)


def row_from_trace(cfg, value, scheme, r, ch, trace) -> SweepResult:
    """Metric row for one finished scheme run."""
    design, spec = _cell_design(cfg, value)
    bound_spec = spec if scheme == "hybrid" else HybridRisSpec(spec.n_elements, 0, 1.0, spec.nu2)
    thm1 = mw_to_dbm(theorem1_bound(bound_spec, _zeta_br(cfg), design.p_t,
                                    cfg.rician_factor, cfg.m_antennas))
    status = trace.status if trace.status in ROW_STATUSES else "infeasible"
    if trace.bf is None:
        nan = math.nan
        return SweepResult(cfg.sweep_var, float(value), scheme, r,
                           nan, nan, nan, nan, thm1, trace.iterations, status)
    k_users = ch.h_bu.shape[0]
    min_sinr = min((user_sinr(ch, trace.ris, trace.bf, k, design.sigma2) for k in range(k_users)),
                   default=math.inf)
    max_noise = max(target_ris_noise(ch, trace.ris, m) for m in range(ch.g_bt.shape[0]))
    return SweepResult(
        cfg.sweep_var, float(value), scheme, r,
        mw_to_dbm(trace.objective),
        10.0 * math.log10(min_sinr) if min_sinr > 0 else -math.inf,
        mw_to_dbm(max_noise),
        mw_to_dbm(ris_output_power(ch, trace.ris, trace.bf)),
        thm1,
        trace.iterations,
        status,
    )


def _run_cell(args):
    cfg, value, scheme, r = args
    try:
        ch = realization_channels(cfg, r)
        design, spec = _cell_design(cfg, value)
        trace = run_scheme(scheme, ch, design, spec, _scheme_seed(cfg, r, scheme))
        return row_from_trace(cfg, value, scheme, r, ch, trace)
    except Exception:
        # a cell must never abort the sweep; an unexpected failure is
        # indistinguishable from an unusable realization at row level
        design, spec = _cell_design(cfg, value)
        bound_spec = spec if scheme == "hybrid" else HybridRisSpec(spec.n_elements, 0, 1.0, spec.nu2)
        thm1 = mw_to_dbm(theorem1_bound(bound_spec, _zeta_br(cfg), design.p_t,
                                        cfg.rician_factor, cfg.m_antennas))
        nan = math.nan
        return SweepResult(cfg.sweep_var, float(value), scheme, r,
                           nan, nan, nan, nan, thm1, 0, "infeasible")


def run_sweep(cfg: SimulationConfig, jobs=1):
    """All (sweep value, scheme, realization) cells, canonically sorted.

    Cells are pure functions of (config, cell index), so the result list is
    identical whatever `jobs` is; failures surface as status rows.
    """
    cfg.validate()
    cells = [
        (cfg, value, scheme, r)
        for value in cfg.sweep_values
        for scheme in cfg.schemes
        for r in range(cfg.realizations)
    ]
    if jobs is not None and jobs > 1:
        with get_context("fork").Pool(jobs) as pool:
            rows = pool.map(_run_cell, cells, chunksize=1)
    else:
        rows = [_run_cell(c) for c in cells]
    rows.sort(key=lambda row: (row.sweep_value, row.scheme, row.realization))
    return rows


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------

def _fmt(x):
    return f"{x:.6f}"


def format_row(row: SweepResult) -> str:
    return ",".join([
        row.sweep_var,
        _fmt(row.sweep_value),
        row.scheme,
        str(row.realization),
        _fmt(row.wc_illum_dbm),
        _fmt(row.min_sinr_db),
        _fmt(row.max_tgt_noise_dbm),
        _fmt(row.pris_dbm),
        _fmt(row.thm1_bound_dbm),
        str(row.iterations),
        row.status,
    ])


def emit_csv(results, path):
    """Write rows under the fixed header; byte-deterministic for given rows."""
    lines = [CSV_HEADER] + [format_row(r) for r in results]
    payload = "\n".join(lines) + "\n"
    try:
        with open(path, "w", encoding="ascii", newline="") as fh:
            fh.write(payload)
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def read_csv(path):
    """Parse a file produced by emit_csv back into SweepResult rows."""
    with open(path, "r", encoding="ascii", newline="") as fh:
        lines = fh.read().split("\n")
    if not lines or lines[0] != CSV_HEADER:
        raise ParseError("header does not match the sweep CSV schema", str(path), 1)
    rows = []
    for i, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 11:
            raise ParseError(f"expected 11 fields, got {len(parts)}", str(path), i)
        try:
            rows.append(SweepResult(
                parts[0], float(parts[1]), parts[2], int(parts[3]),
                float(parts[4]), float(parts[5]), float(parts[6]),
                float(parts[7]), float(parts[8]), int(parts[9]), parts[10],
            ))
        except ValueError as exc:
            raise ParseError(f"bad field: {exc}", str(path), i) from exc
    return rows
