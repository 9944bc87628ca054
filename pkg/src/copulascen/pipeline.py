"""Fit / sample / validate workflows and the persisted model bundle."""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .dependence import (
    CopulaCorrelationMatrix,
    RankCorrelationMatrix,
    spearman_matrix,
    spearman_matrix_from_array,
    to_copula_matrix,
)
from .errors import ConfigError, DataError, NotPSDError
from .gaussian_copula import GaussianCopulaModel, joint_normal_transform
from .ingest import align_and_clean, load_timeseries_csv
from .io_utils import atomic_write_text, fmt_float
from .marginals import EmpiricalMarginal, cdf, fit_empirical, quantile
from .rng import SeededRng
from .vine import DVineSpec, build_dvine, dvine_from_rank_matrix, sample_dvine

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
MODEL_KINDS = ("jnt", "dvine")
PLOT_POINTS = 512


@dataclass(frozen=True)
class PowerCurve:
    cut_in: float
    rated_speed: float
    cut_out: float
    rated_power: float

    def __post_init__(self):
        vals = (self.cut_in, self.rated_speed, self.cut_out, self.rated_power)
        if not all(isinstance(v, (int, float)) and math.isfinite(v) for v in vals):
            raise ConfigError(f"power curve fields must be finite numbers: {self}")
        if not 0 <= self.cut_in < self.rated_speed < self.cut_out:
            raise ConfigError("power curve needs 0 <= cut_in < rated_speed < cut_out")
        if not self.rated_power > 0:
            raise ConfigError("power curve rated_power must be positive")


def wind_power_curve(speed, curve: PowerCurve):
    """Turbine output for wind speed(s): cubic ramp from cut-in to rated, flat to cut-out, then 0."""
    v = np.asarray(speed, dtype=float)
    if np.isnan(v).any() or (v < 0).any():
        raise DataError("wind speed must be non-negative")
    ci, vr = curve.cut_in, curve.rated_speed
    ramp = curve.rated_power * (v**3 - ci**3) / (vr**3 - ci**3)
    out = np.where(v < ci, 0.0, np.where(v < vr, ramp, curve.rated_power))
    out = np.where(v >= curve.cut_out, 0.0, out)
    return float(out) if out.ndim == 0 else out


def ks_statistic(a, b) -> float:
    """Kolmogorov-Smirnov distance.

    ``b`` may be a second sample (two-sample statistic), an
    :class:`EmpiricalMarginal` (distance to its interpolated CDF), or a
    continuous CDF callable.
    """
    a = np.sort(np.asarray(a, dtype=float).ravel())
    if a.size < 2:
        raise DataError("ks_statistic needs at least 2 values per side")
    n = a.size
    if isinstance(b, EmpiricalMarginal) or callable(b):
        if isinstance(b, EmpiricalMarginal):
            m = b
            f = np.atleast_1d(cdf(m, a))
            # the interpolated CDF jumps at the sample minimum, so compare left limits there too
            f_left = np.where(a <= m.min, 0.0, f)
        else:
            f = np.asarray(b(a), dtype=float)
            f_left = f
        # empirical CDF of a just after / just before each distinct value
        hi = np.searchsorted(a, a, side="right") / n
        lo = np.searchsorted(a, a, side="left") / n
        d = max(np.max(np.abs(hi - f)), np.max(np.abs(lo - f_left)))
        return float(min(1.0, max(0.0, d)))
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if b.size < 2:
        raise DataError("ks_statistic needs at least 2 values per side")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def uniform_cdf(x):
    return np.clip(np.asarray(x, dtype=float), 0.0, 1.0)


# ---------------------------------------------------------------- bundle


@dataclass
class ModelBundle:
    variables: tuple[str, ...]
    marginals: tuple[EmpiricalMarginal, ...]
    rank_matrix: RankCorrelationMatrix
    kind: str
    copula_matrix: CopulaCorrelationMatrix | None = None
    dvine: DVineSpec | None = None
    power_curves: dict[str, PowerCurve] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        self.variables = tuple(self.variables)
        self.marginals = tuple(self.marginals)
        if self.kind not in MODEL_KINDS:
            raise ConfigError(f"model kind must be one of {MODEL_KINDS}, got {self.kind!r}")
        if tuple(m.name for m in self.marginals) != self.variables:
            raise DataError("marginals do not match the variable list")
        if self.rank_matrix.names != self.variables:
            raise DataError("rank matrix names do not match the variable list")
        if self.kind == "jnt":
            if self.copula_matrix is None or self.copula_matrix.names != self.variables:
                raise DataError("jnt bundle needs a copula matrix over the model variables")
        else:
            if self.dvine is None or sorted(self.dvine.order) != sorted(self.variables):
                raise DataError("dvine bundle needs an ordering of the model variables")
        for name in self.power_curves:
            if name not in self.variables:
                raise ConfigError(f"power curve given for unknown variable {name!r}")

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    def marginal(self, name: str) -> EmpiricalMarginal:
        for m in self.marginals:
            if m.name == name:
                return m
        raise DataError(f"variable {name!r} not in model (have {list(self.variables)})")

    def output_columns(self) -> list[str]:
        return list(self.variables) + [f"{v}_power" for v in self.variables if v in self.power_curves]

    def to_dict(self) -> dict:
        if self.kind == "jnt":
            dep = {
                "kind": "jnt",
                "names": list(self.copula_matrix.names),
                "copula_matrix": self.copula_matrix.entries.tolist(),
                "psd_repaired": bool(self.copula_matrix.psd_repaired),
            }
        else:
            dep = {
                "kind": "dvine",
                "order": list(self.dvine.order),
                "edge_rank_corrs": [list(level) for level in self.dvine.edge_rank_corrs],
                "edges": self.dvine.edges(),
            }
        return {
            "format_version": self.format_version,
            "variables": list(self.variables),
            "marginals": [
                {"name": m.name, "sorted_values": m.sorted_values.tolist()} for m in self.marginals
            ],
            "rank_matrix": {
                "names": list(self.rank_matrix.names),
                "entries": self.rank_matrix.entries.tolist(),
            },
            "dependence": dep,
            "power_curves": {k: asdict(v) for k, v in self.power_curves.items()},
            "metadata": dict(self.metadata),
        }

    def to_json(self) -> str:
        # json writes floats with repr(), the shortest string that round-trips exactly
        return json.dumps(self.to_dict(), indent=1, allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, d: Mapping) -> "ModelBundle":
        try:
            version = d["format_version"]
            if version != FORMAT_VERSION:
                raise DataError(f"unsupported bundle format_version {version} (expected {FORMAT_VERSION})")
            variables = tuple(d["variables"])
            marginals = tuple(
                EmpiricalMarginal(m["name"], np.asarray(m["sorted_values"], dtype=float))
                for m in d["marginals"]
            )
            rm = d["rank_matrix"]
            rank = RankCorrelationMatrix(tuple(rm["names"]), np.asarray(rm["entries"], dtype=float))
            dep = d["dependence"]
            kind = dep["kind"]
            copula = dvine = None
            if kind == "jnt":
                copula = CopulaCorrelationMatrix(
                    tuple(dep["names"]),
                    np.asarray(dep["copula_matrix"], dtype=float),
                    bool(dep.get("psd_repaired", False)),
                )
            elif kind == "dvine":
                dvine = build_dvine(dep["order"], dep["edge_rank_corrs"])
            else:
                raise DataError(f"unknown dependence kind {kind!r}")
            curves = {k: PowerCurve(**v) for k, v in d.get("power_curves", {}).items()}
            return cls(
                variables, marginals, rank, kind, copula, dvine, curves, dict(d.get("metadata", {}))
            )
        except (KeyError, TypeError) as exc:
            raise DataError(f"corrupt model bundle: missing or malformed field {exc}") from exc

    @classmethod
    def load(cls, path) -> "ModelBundle":
        path = Path(path)
        if not path.is_file():
            raise DataError(f"model bundle not found: {path}")
        try:
            d = json.loads(path.read_text(encoding="utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise DataError(f"corrupt model bundle {path}: {exc}") from exc
        if not isinstance(d, dict):
            raise DataError(f"corrupt model bundle {path}: top level must be an object")
        return cls.from_dict(d)

    def save(self, path) -> None:
        atomic_write_text(path, self.to_json())

    def model_id(self) -> str:
        payload = dict(self.to_dict())
        payload.pop("metadata", None)
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


# ---------------------------------------------------------------- fit


@dataclass
class FitConfig:
    input: str
    model: str = "jnt"
    variables: list[str] | None = None
    order: list[str] | None = None
    missing_policy: str = "drop_row"
    power_curves: dict[str, PowerCurve] = field(default_factory=dict)
    output: str | None = None

    def __post_init__(self):
        if self.model not in MODEL_KINDS:
            raise ConfigError(f"config 'model' must be one of {MODEL_KINDS}, got {self.model!r}")
        if self.model == "dvine" and not self.order:
            raise ConfigError("config 'order' is required when model is 'dvine'")
        if self.missing_policy not in ("drop_row", "fail"):
            raise ConfigError(f"config 'missing_policy' must be drop_row or fail, got {self.missing_policy!r}")
        self.power_curves = {
            k: v if isinstance(v, PowerCurve) else PowerCurve(**v) for k, v in self.power_curves.items()
        }

    @classmethod
    def from_json(cls, path) -> "FitConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        known = {"input", "model", "variables", "order", "missing_policy", "power_curves", "output"}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if "input" not in raw:
            raise ConfigError("config needs an 'input' CSV path")
        try:
            cfg = cls(**raw)
        except TypeError as exc:
            raise ConfigError(f"bad config: {exc}") from None
        # relative paths are resolved against the config file's directory
        base = path.parent
        cfg.input = str(base / cfg.input)
        if cfg.output is not None:
            cfg.output = str(base / cfg.output)
        return cfg


def fit_bundle(config: FitConfig) -> ModelBundle:
    data = load_timeseries_csv(config.input)
    if config.variables:
        data = data.select(config.variables)
    data, dropped = align_and_clean(data, config.missing_policy)
    if dropped:
        log.info("dropped %d rows with missing values", dropped)
    marginals = []
    for name in data.variable_names:
        try:
            marginals.append(fit_empirical(name, data.column(name)))
        except DataError as exc:
            raise DataError(f"{config.input}: {exc}") from None
    try:
        rank = spearman_matrix(data)
    except DataError as exc:
        raise DataError(f"{config.input}: {exc}") from None

    copula = dvine = None
    if config.model == "jnt":
        copula = to_copula_matrix(rank)
        try:
            GaussianCopulaModel.from_matrix(copula)
        except NotPSDError as exc:
            raise DataError(
                f"{config.input}: copula matrix is singular, some variables are perfectly "
                f"rank-dependent ({exc})"
            ) from None
    else:
        order = [str(o) for o in config.order]
        if sorted(order) != sorted(data.variable_names):
            raise ConfigError(
                f"config 'order' {order} must be a permutation of {list(data.variable_names)}"
            )
        dvine = dvine_from_rank_matrix(rank, order)

    meta = {
        "source": str(config.input),
        "n_obs": data.n_obs,
        "rows_dropped": dropped,
        "created_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    if config.model == "dvine":
        meta["edge_correlations"] = "partial-correlation recursion on the Gaussian-copula scale"
    return ModelBundle(
        data.variable_names,
        tuple(marginals),
        rank,
        config.model,
        copula,
        dvine,
        dict(config.power_curves),
        meta,
    )


def cmd_fit(config: FitConfig | str | Path, output=None) -> ModelBundle:
    """Fit a bundle from the config's CSV and write it; returns the bundle."""
    if not isinstance(config, FitConfig):
        config = FitConfig.from_json(config)
    bundle = fit_bundle(config)
    out = output or config.output or str(Path(config.input).with_suffix(".model.json"))
    bundle.save(out)
    repaired = bundle.copula_matrix.psd_repaired if bundle.kind == "jnt" else False
    print(
        f"fitted {bundle.kind} model on {bundle.metadata['n_obs']} rows "
        f"({bundle.metadata['rows_dropped']} dropped), variables={list(bundle.variables)}, "
        f"psd_repaired={str(repaired).lower()} -> {out}"
    )
    return bundle


# ---------------------------------------------------------------- sample


@dataclass(frozen=True)
class ScenarioSet:
    variable_names: tuple[str, ...]
    values: np.ndarray
    master_seed: int
    model_id: str
    generated_at: str

    def to_csv_text(self) -> str:
        lines = [",".join(self.variable_names)]
        lines.extend(",".join(fmt_float(v) for v in row) for row in self.values)
        return "\n".join(lines) + "\n"


def sample_uniforms(bundle: ModelBundle, count: int, rng: SeededRng, threads: int = 1) -> np.ndarray:
    """Dependent uniforms with columns in ``bundle.variables`` order."""
    if bundle.kind == "jnt":
        model = GaussianCopulaModel.from_matrix(bundle.copula_matrix)
        return joint_normal_transform(model, count, rng, threads)
    u = sample_dvine(bundle.dvine, count, rng, threads)
    cols = [bundle.dvine.order.index(v) for v in bundle.variables]
    return u[:, cols]


def generate_scenarios(bundle: ModelBundle, count: int, master_seed: int, threads: int = 1) -> ScenarioSet:
    if count < 1:
        raise ConfigError("count must be >= 1")
    rng = SeededRng(master_seed, 0)
    u = sample_uniforms(bundle, count, rng, threads)
    cols = [quantile(m, u[:, j]) for j, m in enumerate(bundle.marginals)]
    for name in bundle.variables:
        if name in bundle.power_curves:
            cols.append(wind_power_curve(cols[bundle.variables.index(name)], bundle.power_curves[name]))
    return ScenarioSet(
        tuple(bundle.output_columns()),
        np.column_stack(cols),
        master_seed,
        bundle.model_id(),
        datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )


def cmd_sample(model_path, count: int, master_seed: int, out_path, threads: int = 1) -> ScenarioSet:
    """Sample scenarios to CSV. Provenance goes to ``<out_path>.meta.json``."""
    bundle = ModelBundle.load(model_path)
    scen = generate_scenarios(bundle, count, master_seed, threads)
    atomic_write_text(out_path, scen.to_csv_text())
    meta = {
        "master_seed": scen.master_seed,
        "model": str(model_path),
        "model_id": scen.model_id,
        "count": count,
        "generated_at": scen.generated_at,
    }
    atomic_write_text(f"{out_path}.meta.json", json.dumps(meta, indent=1) + "\n")
    return scen


def read_scenarios_csv(path) -> tuple[list[str], np.ndarray]:
    data = load_timeseries_csv(path)
    if data.has_missing():
        raise DataError(f"{path}: scenario file contains missing values")
    return list(data.variable_names), np.asarray(data.rows)


# ---------------------------------------------------------------- validate


@dataclass
class ValidationReport:
    variables: list[str]
    ks: dict[str, float]
    target_spearman: list[list[float]]
    recovered_spearman: list[list[float]]
    max_spearman_deviation: float
    psd_repaired: bool
    seed: int | None
    n_scenarios: int
    n_reference: dict[str, int]
    ks_max: float
    rank_max: float

    @property
    def passed(self) -> bool:
        return all(v <= self.ks_max for v in self.ks.values()) and self.max_spearman_deviation <= self.rank_max

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def validate_scenarios(
    bundle: ModelBundle,
    columns: Sequence[str],
    values: np.ndarray,
    ks_max: float = 0.05,
    rank_max: float = 0.05,
    seed: int | None = None,
) -> ValidationReport:
    columns = list(columns)
    expected = bundle.output_columns()
    if columns != expected and columns != list(bundle.variables):
        raise DataError(f"scenario columns {columns} do not match model variables {expected}")
    values = np.asarray(values, dtype=float)[:, : bundle.n_vars]
    ks = {m.name: ks_statistic(values[:, j], m.sorted_values) for j, m in enumerate(bundle.marginals)}
    if bundle.n_vars > 1:
        recovered = spearman_matrix_from_array(values, bundle.variables).entries
    else:
        recovered = np.ones((1, 1))
    target = bundle.rank_matrix.entries
    deviation = float(np.max(np.abs(recovered - target)))
    return ValidationReport(
        list(bundle.variables),
        ks,
        target.tolist(),
        recovered.tolist(),
        deviation,
        bool(bundle.kind == "jnt" and bundle.copula_matrix.psd_repaired),
        seed,
        int(values.shape[0]),
        {m.name: m.n for m in bundle.marginals},
        ks_max,
        rank_max,
    )


def cmd_validate(model_path, scenarios_path, ks_max: float = 0.05, rank_max: float = 0.05, out_path=None) -> ValidationReport:
    bundle = ModelBundle.load(model_path)
    columns, values = read_scenarios_csv(scenarios_path)
    seed = None
    meta_path = Path(f"{scenarios_path}.meta.json")
    if meta_path.is_file():
        try:
            seed = json.loads(meta_path.read_text()).get("master_seed")
        except json.JSONDecodeError:
            seed = None
    report = validate_scenarios(bundle, columns, values, ks_max, rank_max, seed)
    text = json.dumps(report.to_dict(), indent=1) + "\n"
    if out_path is not None:
        atomic_write_text(out_path, text)
    return report


# ---------------------------------------------------------------- plot data


def marginal_curve(m: EmpiricalMarginal, points: int = PLOT_POINTS) -> tuple[np.ndarray, np.ndarray]:
    x = np.linspace(m.min, m.max, points)
    return x, np.atleast_1d(cdf(m, x))


def emit_plot_data(model_path, variable: str, out_path) -> np.ndarray:
    """Write ``x,cdf`` pairs of one variable's fitted marginal for plotting."""
    bundle = ModelBundle.load(model_path)
    m = bundle.marginal(variable)
    x, u = marginal_curve(m)
    lines = ["x,cdf"] + [f"{fmt_float(a)},{fmt_float(b)}" for a, b in zip(x, u)]
    atomic_write_text(out_path, "\n".join(lines) + "\n")
    return np.column_stack([x, u])


__all__ = [
    "FitConfig",
    "ModelBundle",
    "PowerCurve",
    "ScenarioSet",
    "ValidationReport",
    "cmd_fit",
    "cmd_sample",
    "cmd_validate",
    "emit_plot_data",
    "fit_bundle",
    "generate_scenarios",
    "ks_statistic",
    "sample_uniforms",
    "uniform_cdf",
    "validate_scenarios",
    "wind_power_curve",
]
