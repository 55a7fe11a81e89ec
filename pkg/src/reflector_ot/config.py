"""YAML run configuration with strict validation, and tabulated datasets.

A configuration file looks like::

    dataset:
      builtin: section4.2
    refinement:
      C: 1.7
      a: 1.0
      n_levels: 3
    output_dir: out
    seed: 0

Unknown keys anywhere are an error.  An external dataset replaces
``builtin`` by ``tables`` with the optical constant, aperture radii, the
anchor radius and two CSV files: ``input_table`` with columns
``mx, my, value`` (intensity per unit solid angle) and ``output_table``
with columns ``x, y, value``.
"""

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .analytic import default_dataset
from .errors import ConfigError
from .files import read_table
from .geometry import OpticalConfig
from .refine import RefinementConfig

BUILTINS = {"section4.2": default_dataset}


@dataclass
class TableSpec:
    ell: float
    cap_planar_radius: float
    disk_radius: float
    anchor_rho: float
    input_table: str
    output_table: str


@dataclass
class DatasetSpec:
    builtin: Optional[str] = "section4.2"
    tables: Optional[TableSpec] = None


@dataclass
class OracleSpec:
    h: float = 0.12


@dataclass
class SweepSpec:
    C: list = field(default_factory=lambda: [1.0, 1.3, 2.0])
    a: list = field(default_factory=lambda: [1.1])


@dataclass
class RunConfig:
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    refinement: RefinementConfig = field(default_factory=RefinementConfig)
    oracle: OracleSpec = field(default_factory=OracleSpec)
    sweep: SweepSpec = field(default_factory=SweepSpec)
    output_dir: str = "out"
    seed: int = 0


_NESTED = {
    "dataset": DatasetSpec,
    "refinement": RefinementConfig,
    "oracle": OracleSpec,
    "sweep": SweepSpec,
    "tables": TableSpec,
}
_FLOATS = {"C", "a", "h0", "ratio", "anchor_rho", "feas_tol", "act_tol", "critical_margin",
           "ell", "cap_planar_radius", "disk_radius", "h"}
_INTS = {"n_levels", "max_constraints", "seed"}


def _coerce(key, value, where):
    if value is None:
        return None
    try:
        if key == "h_sequence" or (where == "sweep" and key in ("C", "a")):
            return [float(x) for x in value]
        if key in _FLOATS:
            return float(value)
        if key in _INTS:
            if float(value) != int(float(value)):
                raise ValueError
            return int(float(value))
        if key in ("anchor_direction",):
            v = [float(x) for x in value]
            if len(v) != 3:
                raise ValueError
            return tuple(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}.{key}: bad value {value!r}") from None
    return value


def _build(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping")
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    kwargs = {}
    for k, v in data.items():
        if k in _NESTED and v is not None:
            kwargs[k] = _build(_NESTED[k], v, f"{where}.{k}" if where else k)
        else:
            kwargs[k] = _coerce(k, v, where or "config")
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_config(data):
    """Validate a decoded mapping and build a :class:`RunConfig`."""
    data = dict(data or {})
    ds_raw = data.get("dataset")
    if isinstance(ds_raw, dict) and "tables" in ds_raw and "builtin" not in ds_raw:
        data["dataset"] = {**ds_raw, "builtin": None}
    cfg = _build(RunConfig, data, "")
    ds = cfg.dataset
    if (ds.builtin is None) == (ds.tables is None):
        raise ConfigError("dataset: give exactly one of 'builtin' or 'tables'")
    if ds.builtin is not None and ds.builtin not in BUILTINS:
        raise ConfigError(f"dataset.builtin: unknown dataset {ds.builtin!r}")
    return cfg


def load_config(path):
    with open(path) as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return parse_config(data)


def _plain(v):
    if isinstance(v, tuple):
        return list(v)
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    return v


def config_to_dict(cfg):
    return _plain(asdict(cfg))


def serialize_config(cfg):
    """YAML text that :func:`parse_config` maps back to an equal config."""
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False)


@dataclass(frozen=True)
class TabulatedDataset:
    """Dataset whose intensities are interpolated from sample tables."""

    config: OpticalConfig
    cap_planar_radius: float
    disk_radius: float
    anchor_rho: float
    I: object
    L: object
    name: str = "tables"
    pair: object = None


def _table_function(path, cols):
    from .refine import PiecewiseLinear

    data = read_table(path, cols)
    f = PiecewiseLinear(data[:, :2], data[:, 2])

    def value(p):
        p = np.asarray(p, dtype=float)
        q = p[..., :2].reshape(-1, 2)
        return f(q).reshape(p.shape[:-1])

    return value


def make_dataset(spec, base_dir="."):
    """Dataset object for a :class:`DatasetSpec`; relative table paths use ``base_dir``."""
    if spec.builtin is not None:
        return BUILTINS[spec.builtin]()
    t = spec.tables
    base = Path(base_dir)
    return TabulatedDataset(
        config=OpticalConfig(t.ell),
        cap_planar_radius=t.cap_planar_radius,
        disk_radius=t.disk_radius,
        anchor_rho=t.anchor_rho,
        I=_table_function(base / t.input_table, ["mx", "my", "value"]),
        L=_table_function(base / t.output_table, ["x", "y", "value"]),
    )
