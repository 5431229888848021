"""Run configuration: flat ``dotted.key = <json value>`` files.

Lines starting with ``#`` are comments. Values are parsed as JSON; a value
that is not valid JSON is taken as a bare string. Unset keys fall back to
the defaults of the chosen approach.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Mapping, Optional

from saetrade import fracdiff, sae
from saetrade.backtest import CostModel
from saetrade.labeling import LabelSpec, PhiParams
from saetrade.metrics import MINUTES_PER_YEAR, MetricConfig
from saetrade.walkforward import FracDiffSettings, SearchSettings, TargetSettings

APPROACHES = (1, 2, 3, 4)
PATH_KEYS = ("data.bars",)

_SAE_KEYS = tuple(f.name for f in fields(sae.SAEConfig) if f.name not in ("input_dim", "seed"))
_SAE_DEFAULTS = {f"sae.{f.name}": f.default for f in fields(sae.SAEConfig) if f.name in _SAE_KEYS}

DEFAULTS: dict[str, Any] = {
    "run.approach": 4,
    "run.seed": 0,
    "run.out": "out",
    "data.bars": [],
    "data.symbols": None,
    "data.features": {},
    "data.include_close": True,
    "data.frequency": None,
    "costs.per_side": 0.00005,
    "label.lam": 0.002,
    "label.n": 12,
    "label.lower": None,
    "label.use_high_low": False,
    "phi.delta": 20.0,
    "fracdiff.d_grid": list(fracdiff.DEFAULT_D_GRID),
    "fracdiff.alpha": 0.01,
    "fracdiff.tau": fracdiff.DEFAULT_TAU,
    "fracdiff.k_max": fracdiff.DEFAULT_K_MAX,
    "fracdiff.max_lags": 1,
    "fracdiff.lag_policy": "fixed",
    "fracdiff.enabled": True,
    **_SAE_DEFAULTS,
    "walkforward.period": None,
    "walkforward.max_train_periods": 3,
    "walkforward.initial": 1,
    "walkforward.minutes_per_day": 390,
    "search.space": {},
    "search.method": "grid",
    "search.trials": 15,
    "search.validation_fraction": 0.2,
    "metrics.periods_per_year": None,
    "metrics.market": "equity",
    "backtest.initial": 1000.0,
    "backtest.execution": None,
}

# per-approach model settings
APPROACH_DEFAULTS: dict[int, dict[str, Any]] = {
    1: {"sae.output_mode": "regression", "sae.activation": "tanh", "sae.autoencoder": False, "sae.noise_rate": 0.0},
    2: {"sae.output_mode": "binary", "sae.activation": "tanh", "sae.autoencoder": False, "sae.noise_rate": 0.0},
    3: {"sae.output_mode": "binary", "sae.activation": "swish", "sae.autoencoder": True, "sae.noise_rate": 0.05},
    4: {"sae.output_mode": "ternary", "sae.activation": "swish", "sae.autoencoder": True, "sae.noise_rate": 0.05},
}
TARGET_KIND = {1: "return", 2: "direction", 3: "direction", 4: "tbl"}
# keys that do not change results and are kept out of the digest
VOLATILE_KEYS = ("run.out",)


class ConfigError(ValueError):
    pass


def parse_text(text: str, source: str = "<config>") -> dict[str, Any]:
    values: dict[str, Any] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, rest = line.partition("=")
        if not sep:
            raise ConfigError(f"{source}:{line_no}: expected 'key = value'")
        key, rest = key.strip(), rest.strip()
        try:
            values[key] = json.loads(rest)
        except json.JSONDecodeError:
            values[key] = rest
    return values


def format_value(value: Any) -> str:
    return json.dumps(value, sort_keys=True)


@dataclass(frozen=True)
class RunConfig:
    """Effective settings for one run; ``values`` holds every key."""

    values: dict

    @classmethod
    def from_mapping(cls, overrides: Mapping[str, Any], base_dir: Optional[Path] = None) -> "RunConfig":
        unknown = sorted(set(overrides) - set(DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        approach = overrides.get("run.approach", DEFAULTS["run.approach"])
        if approach not in APPROACHES:
            raise ConfigError(f"run.approach must be one of {APPROACHES}, got {approach!r}")
        values = {**DEFAULTS, **APPROACH_DEFAULTS[approach], **overrides}
        if base_dir is not None:
            values["data.bars"] = [str((base_dir / p).resolve()) for p in values["data.bars"]]
            values["data.features"] = {k: str((base_dir / p).resolve()) for k, p in values["data.features"].items()}
        cfg = cls(values)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        return cls.from_mapping(parse_text(path.read_text(encoding="utf-8"), str(path)), path.parent)

    def with_overrides(self, overrides: Mapping[str, Any]) -> "RunConfig":
        unknown = sorted(set(overrides) - set(DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg = RunConfig({**self.values, **overrides})
        cfg.validate()
        return cfg

    def __getitem__(self, key: str):
        return self.values[key]

    @property
    def approach(self) -> int:
        return self.values["run.approach"]

    @property
    def seed(self) -> int:
        return self.values["run.seed"]

    def dumps(self) -> str:
        keys = sorted(k for k in self.values if k not in VOLATILE_KEYS)
        return "".join(f"{k} = {format_value(self.values[k])}\n" for k in keys)

    def digest(self) -> str:
        return hashlib.sha256(self.dumps().encode("utf-8")).hexdigest()

    # -- typed views ---------------------------------------------------
    def sae_config(self, input_dim: int = 1) -> sae.SAEConfig:
        kwargs = {k: self.values[f"sae.{k}"] for k in _SAE_KEYS}
        return sae.SAEConfig(input_dim=input_dim, seed=self.seed, **kwargs)

    def label_spec(self) -> LabelSpec:
        return LabelSpec(self.values["label.lam"], self.values["label.n"], self.values["label.lower"])

    def phi_params(self) -> PhiParams:
        return PhiParams(self.values["label.lam"], self.values["phi.delta"])

    def target(self) -> TargetSettings:
        kind = TARGET_KIND[self.approach]
        return TargetSettings(kind, self.label_spec() if kind == "tbl" else None, self.values["label.use_high_low"])

    def fracdiff_settings(self) -> FracDiffSettings:
        v = self.values
        return FracDiffSettings(tuple(v["fracdiff.d_grid"]), v["fracdiff.alpha"], v["fracdiff.tau"],
                                v["fracdiff.k_max"], v["fracdiff.max_lags"], v["fracdiff.lag_policy"],
                                v["fracdiff.enabled"])

    def search_settings(self) -> Optional[SearchSettings]:
        v = self.values
        if not v["search.space"]:
            return None
        return SearchSettings(dict(v["search.space"]), v["search.method"], v["search.trials"],
                              v["search.validation_fraction"])

    def cost_models(self, n_assets: int) -> list[CostModel]:
        c = self.values["costs.per_side"]
        per = c if isinstance(c, list) else [c] * n_assets
        if len(per) != n_assets:
            raise ConfigError(f"costs.per_side lists {len(per)} values for {n_assets} assets")
        return [CostModel(float(x)) for x in per]

    def metric_config(self, frequency: int) -> MetricConfig:
        ppy = self.values["metrics.periods_per_year"]
        if ppy is not None:
            return MetricConfig(float(ppy))
        return MetricConfig.for_bars(frequency, self.values["metrics.market"])

    def execution(self) -> str:
        ex = self.values["backtest.execution"]
        return ex if ex is not None else ("tbl" if self.approach == 4 else "positions")

    def validate(self) -> None:
        v = self.values
        a = v["run.approach"]
        if a not in APPROACHES:
            raise ConfigError(f"run.approach must be one of {APPROACHES}, got {a!r}")
        try:
            s = self.sae_config()
            self.fracdiff_settings()
            self.label_spec()
            self.phi_params()
            self.target()
            if v["search.space"]:
                unknown = sorted(set(v["search.space"]) - set(_SAE_KEYS))
                if unknown:
                    raise ConfigError(f"search.space holds non-model keys: {', '.join(unknown)}")
                self.search_settings().candidates(0)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        expected_mode = APPROACH_DEFAULTS[a]["sae.output_mode"]
        if s.output_mode != expected_mode:
            raise ConfigError(f"approach {a} needs sae.output_mode={expected_mode!r}, got {s.output_mode!r}")
        if a == 2 and s.noise_rate != 0:
            raise ConfigError("approach 2 trains without noise (sae.noise_rate must be 0)")
        if a in (3, 4) and not s.autoencoder:
            raise ConfigError(f"approach {a} needs sae.autoencoder=true")
        if v["backtest.execution"] not in (None, "positions", "tbl"):
            raise ConfigError("backtest.execution must be 'positions' or 'tbl'")
        if self.execution() == "tbl" and a != 4:
            raise ConfigError("barrier execution needs ternary signals (approach 4)")
        if v["metrics.market"] not in MINUTES_PER_YEAR:
            raise ConfigError(f"metrics.market must be one of {tuple(MINUTES_PER_YEAR)}")
        if not isinstance(v["data.bars"], list):
            raise ConfigError("data.bars must be a list of paths")
        syms = v["data.symbols"]
        if syms is not None and len(syms) != len(v["data.bars"]):
            raise ConfigError("data.symbols must match data.bars in length")
