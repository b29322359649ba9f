"""Run configuration: an INI file of ``key = value`` sections mapped onto :class:`RunConfig`.

Section names only group keys for readability; every key names a
:class:`RunConfig` field, except keys in ``[scales]`` which override
:class:`~poprj.rjvanilla.MoveScales` fields.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from ..finite import fixture_path
from ..population.ladder import ladder_geometric
from ..rjvanilla import MoveScales
from .experiments import SYNTHETIC

__all__ = ["KINDS", "ConfigError", "RunConfig", "parse_config", "load_config"]

KINDS = (
    "mixture-vanilla",
    "mixture-population",
    "mixture-st",
    "varsel-run",
    "varsel-analyze",
    "prop1-verify",
    "theorem1-verify",
)

SECTIONS = ("run", "data", "model", "ladder", "constraints", "population", "tempering",
            "trace", "varsel", "verify", "scales")


class ConfigError(ValueError):
    """Invalid run configuration."""


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.replace(",", " ").split())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.replace(",", " ").split())


def _bands(text: str) -> tuple[tuple[int, int], ...]:
    out = []
    for item in text.replace(",", " ").split():
        lo, _, hi = item.partition("-")
        out.append((int(lo), int(hi)))
    return tuple(out)


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt(parse):
    return lambda text: None if text.strip().lower() in ("", "none") else parse(text)


@dataclass
class RunConfig:
    """Everything a run needs; defaults give a small but complete experiment."""

    kind: str
    seed: int = 0
    sweeps: int = 1000
    out: str | None = None
    burn_in: int = 0
    # mixture data: a CSV of raw points, or a synthetic generator
    data_path: str | None = None
    synthetic: str = "three_clusters"
    n_points: int = 200
    data_seed: int = 0
    preprocess_clusters: int | None = None
    preprocess_dims: int | None = None
    # mixture model
    k_max: int = 20
    dof: float = 4.0
    delta: float = 1.0
    lik_power: float = 1.0
    k_start: int = 1
    # ladder: explicit, geometric, or tuned from pilot runs
    n_chains: int = 8
    zetas: tuple[float, ...] | None = None
    varsigma: float | None = None
    varphi: float | None = None
    pilot_sweeps: int = 200
    # constrained chains
    bands: tuple[tuple[int, int], ...] = ()
    constrained_zeta: float = 0.999
    exchange_after_crossover: bool = False
    # simulated tempering pseudo-prior masses (defaults to 1/i)
    st_masses: tuple[float, ...] | None = None
    # output
    trace_stride: int = 1
    thin: int = 1
    ess_lag: int = 10
    # variable selection
    varsel_fixture: str = "varsel_bimodal.csv"
    varsel_zeta: float = 1.0
    hot_zeta: float = 0.01
    sweeps_each: int = 10
    cpu_ratio: float = 50.0
    n0_grid: tuple[int, ...] = (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000, 20000)
    tv_delta: float = 0.01
    # finite toys for the certificate checks
    toy_loglik: tuple[float, ...] = (0.0, 1.0, 2.0)
    toy_logprior: tuple[float, ...] = (0.0, 0.0, 0.0)
    toy_zeta2: float = 0.5
    toy_mh_steps: int = 2
    toy_dps: int = 50
    toy_n_max: int = 50
    scales: dict = field(default_factory=dict)
    text: str = field(default="", repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; choose from {', '.join(KINDS)}")
        if self.sweeps < 1:
            raise ConfigError("sweeps must be at least 1")
        if self.burn_in < 0 or self.trace_stride < 1 or self.thin < 1 or self.ess_lag < 1:
            raise ConfigError("burn_in >= 0, trace_stride >= 1, thin >= 1 and ess_lag >= 1 are required")
        if self.n_chains < 1:
            raise ConfigError("n_chains must be at least 1")
        if self.data_path is not None and not Path(self.data_path).exists():
            raise ConfigError(f"data file {self.data_path} does not exist")
        if (self.varsigma is None) != (self.varphi is None):
            raise ConfigError("a geometric ladder needs both varsigma and varphi")
        if self.varsigma is not None and self.zetas is None:
            try:
                ladder_geometric(self.n_chains, self.varsigma, self.varphi)
            except ValueError as exc:
                raise ConfigError(f"geometric ladder: {exc}") from exc
        if self.data_path is None and self.synthetic not in SYNTHETIC:
            raise ConfigError(f"unknown synthetic data set {self.synthetic!r}")
        unknown = set(self.scales) - {f.name for f in dataclasses.fields(MoveScales)}
        if unknown:
            raise ConfigError(f"unknown move scales: {', '.join(sorted(unknown))}")
        if self.kind.startswith("varsel") and not (Path(self.varsel_fixture).exists()
                                                    or fixture_path(self.varsel_fixture).is_file()):
            raise ConfigError(f"no variable-selection data at {self.varsel_fixture!r}")

    def resolved(self) -> dict:
        """Plain-data view of every setting, for the summary echo."""
        out = dataclasses.asdict(self)
        out.pop("text")
        return out

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return dataclasses.replace(self, **kw) if kw else self


_PARSERS = {
    "kind": str.strip, "seed": int, "sweeps": int, "out": _opt(str.strip), "burn_in": int,
    "data_path": _opt(str.strip), "synthetic": str.strip, "n_points": int, "data_seed": int,
    "preprocess_clusters": _opt(int), "preprocess_dims": _opt(int),
    "k_max": int, "dof": float, "delta": float, "lik_power": float, "k_start": int,
    "n_chains": int, "zetas": _opt(_floats), "varsigma": _opt(float), "varphi": _opt(float),
    "pilot_sweeps": int, "bands": _bands, "constrained_zeta": float,
    "exchange_after_crossover": _bool, "st_masses": _opt(_floats),
    "trace_stride": int, "thin": int, "ess_lag": int,
    "varsel_fixture": str.strip, "varsel_zeta": float, "hot_zeta": float, "sweeps_each": int,
    "cpu_ratio": float, "n0_grid": _ints, "tv_delta": float,
    "toy_loglik": _floats, "toy_logprior": _floats, "toy_zeta2": float, "toy_mh_steps": int,
    "toy_dps": int, "toy_n_max": int,
}


def parse_config(text: str, *, kind: str | None = None, base_dir: Path | None = None) -> RunConfig:
    """Parse INI text.  ``kind`` (from a CLI alias) fills in or must match the file's kind."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable configuration: {exc}") from exc
    values: dict = {}
    scales: dict = {}
    for section in cp.sections():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in cp.items(section):
            if section == "scales":
                try:
                    parsed = _floats(raw)
                except ValueError as exc:
                    raise ConfigError(f"[scales] {key}: {exc}") from exc
                scales[key] = parsed[0] if len(parsed) == 1 else list(parsed)
                continue
            if key not in _PARSERS:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            try:
                values[key] = _PARSERS[key](raw)
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key}: {exc}") from exc
    if kind is not None:
        if values.get("kind", kind) != kind:
            raise ConfigError(f"configuration is for {values['kind']!r}, not {kind!r}")
        values["kind"] = kind
    if "kind" not in values:
        raise ConfigError("the configuration must set kind (or use a kind-specific command)")
    if base_dir is not None and values.get("data_path"):
        p = Path(values["data_path"])
        values["data_path"] = str(p if p.is_absolute() else base_dir / p)
    try:
        return RunConfig(**values, scales=scales, text=text)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path, *, kind: str | None = None) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"configuration file {path} does not exist")
    return parse_config(path.read_text(), kind=kind, base_dir=path.parent)
