"""
Experiment configuration and the tabulated sweeps behind the CLI.

Every table is a list of columns plus rows of floats. Each value column
has a sibling ``<name>_err`` column holding its Monte Carlo standard
error (zero for closed forms and quadratures).
"""

from __future__ import annotations

import configparser
import csv
import dataclasses
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .crb import angle_scale_common, angle_scale_phi, crb_bracket
from .errors import ConfigError, InfiniteErgodicCrb
from .monte_carlo import mc_crb_samples, mc_rate_samples
from .rates import (
    ergodic_rate_eav,
    ergodic_rate_user_exact,
    ergodic_rate_user_ub1,
    ergodic_rate_user_ub2,
)
from .stochastic import (
    MODES,
    UNTRUNCATED_DENSITY,
    ccdf_crb_approx,
    ccdf_crb_exact,
    ccdf_crb_lower,
    ccdf_crb_phi,
    ccdf_crb_upper,
    ergodic_crb_approx,
    ergodic_crb_exact,
    ergodic_crb_lower,
    ergodic_crb_phi,
)
from .system_model import SystemParams, make_rng

__all__ = [
    "ExperimentConfig",
    "SweepTable",
    "load_config",
    "config_from_mapping",
    "parse_grid",
    "default_tau_grid",
    "default_eps_grid",
    "run_fig_a",
    "run_fig_b",
    "run_fig_c",
    "run_sweep",
]

DEFAULT_TRIALS = 10_000

# Separate stream ids so surrogate draws never reuse Monte Carlo draws.
STREAM_USER_CLT = 1_000_001
STREAM_CCDF = 1_000_002
STREAM_ERGODIC = 1_000_003

# ccdf_phi falls to 0.01 at eps = scale_phi / sin(pi/200)^2, about 4053 * scale_phi
_EPS_SPAN_PHI = 1.0 / math.sin(math.pi / 200.0) ** 2


def default_tau_grid() -> Tuple[float, ...]:
    return tuple(round(0.05 * k, 10) for k in range(1, 21))


def default_eps_grid(params: SystemParams, points: int = 40) -> Tuple[float, ...]:
    """Log-spaced thresholds from where the lower-bound CCDF leaves 1 to where the phi CCDF reaches 0.01."""
    lo = angle_scale_common(params) / crb_bracket(params, "lower")
    hi = angle_scale_phi(params) * _EPS_SPAN_PHI
    if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
        raise ConfigError("cannot build a default eps grid for this scenario")
    return tuple(np.geomspace(lo, hi, points).tolist())


@dataclass(frozen=True)
class ExperimentConfig:
    params: SystemParams = field(default_factory=SystemParams)
    tau_grid: Tuple[float, ...] = field(default_factory=default_tau_grid)
    eps_grid: Optional[Tuple[float, ...]] = None
    sweep_param: str = "tau"
    sweep_grid: Optional[Tuple[float, ...]] = None
    trials: Optional[int] = None
    samples: int = 100_000
    seed: int = 0
    mode: str = UNTRUNCATED_DENSITY
    out: Optional[str] = None
    tolerances: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.trials is not None and self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.samples < 10_000:
            raise ConfigError("samples must be at least 10000")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        for name in ("tau_grid", "eps_grid", "sweep_grid"):
            grid = getattr(self, name)
            if grid is not None:
                _check_grid(name, grid)
        if self.sweep_param not in SystemParams.field_names():
            raise ConfigError(f"unknown sweep parameter {self.sweep_param!r}")

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def mc_trials(self, default: int = DEFAULT_TRIALS) -> int:
        """Configured Monte Carlo trials, or ``default`` when unset."""
        return default if self.trials is None else self.trials

    def eps_values(self) -> Tuple[float, ...]:
        return self.eps_grid if self.eps_grid is not None else default_eps_grid(self.params)


def _check_grid(name: str, grid: Sequence[float]):
    if len(grid) == 0:
        raise ConfigError(f"{name} is empty")
    if not all(math.isfinite(g) for g in grid):
        raise ConfigError(f"{name} has non-finite entries")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError(f"{name} must be strictly increasing")


def parse_grid(text: str) -> Tuple[float, ...]:
    """``"a, b, c"`` or an inclusive range ``"start:stop:step"``."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0:
                raise ConfigError("grid step must be positive")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return tuple(round(start + k * step, 12) for k in range(count))
        return tuple(float(x) for x in text.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(f"malformed grid {text!r}") from exc


_INT_FIELDS = {"n_tx", "m_rx", "n_eav", "frame_len"}
_COMPLEX_FIELDS = {"c1", "c2", "c3", "c4"}


def _parse_param(name: str, text: str):
    try:
        if name in _INT_FIELDS:
            return int(text)
        if name in _COMPLEX_FIELDS:
            value = complex(text.replace(" ", ""))
            return value.real if value.imag == 0 else value
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {text!r}") from exc


def load_config(path) -> ExperimentConfig:
    """Read a flat ``key = value`` file (``#`` comments) into an :class:`ExperimentConfig`.

    Raises
    ------
    ConfigError
        Missing file, unknown key or malformed value.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    parser = configparser.ConfigParser(
        comment_prefixes=("#",), inline_comment_prefixes=("#",), interpolation=None
    )
    parser.optionxform = str
    try:
        parser.read_string("[config]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    entries = dict(parser["config"])
    return config_from_mapping(entries)


def config_from_mapping(entries: Dict[str, str]) -> ExperimentConfig:
    param_fields = set(SystemParams.field_names())
    params = {}
    kwargs = {}
    tolerances = {}
    for key, raw in entries.items():
        raw = raw.strip()
        if key in param_fields:
            params[key] = _parse_param(key, raw)
        elif key in ("tau_grid", "eps_grid", "sweep_grid"):
            kwargs[key] = parse_grid(raw)
        elif key in ("trials", "samples", "seed"):
            try:
                kwargs[key] = int(float(raw)) if key != "seed" else int(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {raw!r}") from exc
        elif key in ("mode", "out", "sweep_param"):
            kwargs[key] = raw
        elif key.startswith("tol_"):
            try:
                tolerances[key[4:]] = float(raw)
            except ValueError as exc:
                raise ConfigError(f"bad tolerance {key}: {raw!r}") from exc
        else:
            raise ConfigError(f"unknown config key {key!r}")
    try:
        system = SystemParams(**params)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return ExperimentConfig(params=system, tolerances=tolerances, **kwargs)


@dataclass
class SweepTable:
    """Named value columns; ``rows`` holds ``(value, err)`` pairs per column."""

    key: str
    columns: List[str]
    rows: List[Tuple[float, Dict[str, Tuple[float, float]]]] = field(default_factory=list)

    def add(self, key_value: float, **values):
        row = {}
        for name in self.columns:
            v = values[name]
            row[name] = v if isinstance(v, tuple) else (v, 0.0)
        self.rows.append((key_value, row))

    def column(self, name: str) -> np.ndarray:
        if name == self.key:
            return np.array([k for k, _ in self.rows])
        return np.array([row[name][0] for _, row in self.rows])

    def error(self, name: str) -> np.ndarray:
        return np.array([row[name][1] for _, row in self.rows])

    def header(self) -> List[str]:
        out = [self.key]
        for name in self.columns:
            out += [name, name + "_err"]
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.header())
        for key_value, row in self.rows:
            cells = [_fmt(key_value)]
            for name in self.columns:
                value, err = row[name]
                cells += [_fmt(value), _fmt(err)]
            writer.writerow(cells)
        return buf.getvalue()


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _check_tau_grid(grid, allow_zero: bool):
    for t in grid:
        if t < 0 or t > 1 or (t == 0 and not allow_zero):
            raise ConfigError(f"tau grid entry {t} outside {'[0, 1]' if allow_zero else '(0, 1]'}")


FIG_A_COLUMNS = [
    "user_rate_exact", "user_rate_mc", "user_ub1", "user_ub2",
    "eav_rate", "eav_rate_mc", "secrecy_rate",
]


def run_fig_a(config: ExperimentConfig) -> SweepTable:
    """Ergodic rates versus ``tau``. Every grid point reuses the same random streams."""
    _check_tau_grid(config.tau_grid, allow_zero=True)
    table = SweepTable("tau", FIG_A_COLUMNS)
    for tau in config.tau_grid:
        p = config.params.replace(tau=tau)
        user, user_err = ergodic_rate_user_exact(
            p, config.samples, make_rng(config.seed, STREAM_USER_CLT)
        )
        user_mc, eav_mc = mc_rate_samples(p, config.mc_trials(), seed=config.seed)
        eav = ergodic_rate_eav(p)
        table.add(
            tau,
            user_rate_exact=(user, user_err),
            user_rate_mc=user_mc.mean(),
            user_ub1=ergodic_rate_user_ub1(p),
            user_ub2=ergodic_rate_user_ub2(p),
            eav_rate=eav,
            eav_rate_mc=eav_mc.mean(),
            secrecy_rate=(max(0.0, user - eav), user_err),
        )
    return table


FIG_B_COLUMNS = [
    "ecrb_exact", "ecrb_lower", "ecrb_approx", "ecrb_phi", "ecrb_exact_mc", "ecrb_phi_mc",
]


def run_fig_b(config: ExperimentConfig) -> SweepTable:
    """Ergodic CRBs versus ``tau``; Monte Carlo columns draw angles on the truncated domain."""
    _check_tau_grid(config.tau_grid, allow_zero=False)
    table = SweepTable("tau", FIG_B_COLUMNS)
    mode = config.mode
    for tau in config.tau_grid:
        p = config.params.replace(tau=tau)
        try:
            exact = ergodic_crb_exact(p, mode)
            phi = ergodic_crb_phi(p, mode)
        except InfiniteErgodicCrb:
            exact = phi = math.inf
        approx = ergodic_crb_approx(p, config.samples, make_rng(config.seed, STREAM_ERGODIC), mode)
        exact_mc = mc_crb_samples(p, config.mc_trials(), "exact", truncate_angles=True, seed=config.seed)
        phi_mc = mc_crb_samples(p, config.mc_trials(), "eavesdropper", truncate_angles=True, seed=config.seed)
        table.add(
            tau,
            ecrb_exact=exact,
            ecrb_lower=ergodic_crb_lower(p, mode),
            ecrb_approx=approx,
            ecrb_phi=phi,
            ecrb_exact_mc=exact_mc.mean(),
            ecrb_phi_mc=phi_mc.mean(),
        )
    return table


FIG_C_COLUMNS = [
    "ccdf_lower", "ccdf_upper", "ccdf_approx", "ccdf_exact", "ccdf_phi",
    "ccdf_mc_common", "ccdf_mc_exact",
]


def run_fig_c(config: ExperimentConfig) -> SweepTable:
    """CCDFs of the CRBs at the configured ``tau``, keyed by ``10 log10(eps / 10)``."""
    p = config.params
    eps = np.asarray(config.eps_values(), dtype=float)
    if np.any(eps <= 0):
        raise ConfigError("eps grid must be positive")
    upper, upper_err = ccdf_crb_upper(p, eps, config.samples, make_rng(config.seed, STREAM_CCDF))
    approx, approx_err = ccdf_crb_approx(p, eps, config.samples, make_rng(config.seed, STREAM_CCDF))
    lower = ccdf_crb_lower(p, eps)
    exact = ccdf_crb_exact(p, eps)
    phi = ccdf_crb_phi(p, eps)
    mc_common = mc_crb_samples(p, config.mc_trials(), "common", seed=config.seed)
    mc_exact = mc_crb_samples(p, config.mc_trials(), "exact", seed=config.seed)
    common_p, common_se = mc_common.ccdf(eps)
    exact_p, exact_se = mc_exact.ccdf(eps)
    table = SweepTable("eps_db", FIG_C_COLUMNS)
    for i, e in enumerate(eps):
        table.add(
            10.0 * math.log10(e / 10.0),
            ccdf_lower=float(lower[i]),
            ccdf_upper=(float(upper[i]), float(upper_err[i])),
            ccdf_approx=(float(approx[i]), float(approx_err[i])),
            ccdf_exact=float(exact[i]),
            ccdf_phi=float(phi[i]),
            ccdf_mc_common=(float(common_p[i]), float(common_se[i])),
            ccdf_mc_exact=(float(exact_p[i]), float(exact_se[i])),
        )
    return table


SWEEP_COLUMNS = [
    "user_rate_exact", "user_ub2", "eav_rate", "secrecy_rate",
    "ecrb_exact", "ecrb_lower", "ecrb_phi",
]


def run_sweep(config: ExperimentConfig) -> SweepTable:
    """Rates and ergodic CRBs over ``sweep_grid`` of any scalar scenario parameter."""
    name = config.sweep_param
    grid = config.sweep_grid if config.sweep_grid is not None else config.tau_grid
    table = SweepTable(name, SWEEP_COLUMNS)
    for value in grid:
        cast = int(value) if name in _INT_FIELDS else value
        if name in _INT_FIELDS and cast != value:
            raise ConfigError(f"{name} grid entries must be integers")
        try:
            p = config.params.replace(**{name: cast})
        except ValueError as exc:
            raise ConfigError(f"invalid {name}={value}: {exc}") from exc
        user, user_err = ergodic_rate_user_exact(
            p, config.samples, make_rng(config.seed, STREAM_USER_CLT)
        )
        eav = ergodic_rate_eav(p)
        try:
            exact = ergodic_crb_exact(p, config.mode)
            phi = ergodic_crb_phi(p, config.mode)
        except InfiniteErgodicCrb:
            exact = phi = math.inf
        try:
            lower = ergodic_crb_lower(p, config.mode)
        except InfiniteErgodicCrb:
            lower = math.inf
        table.add(
            value,
            user_rate_exact=(user, user_err),
            user_ub2=ergodic_rate_user_ub2(p),
            eav_rate=eav,
            secrecy_rate=(max(0.0, user - eav), user_err),
            ecrb_exact=exact,
            ecrb_lower=lower,
            ecrb_phi=phi,
        )
    return table

