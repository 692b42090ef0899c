"""YAML run configuration.

Key names follow the benchmark program's own parameters (``balancer_sel``,
``dim_reducer_sel``, ``outliers_removal_sel``, ``contamination``, ``kBest``)
so a config reads like the original settings. See README for the schema.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, fields

import yaml

from .data import numeric_schema, rain_schema
from .models import MODEL_KINDS, ModelSpec
from .preprocess import PAPER_DROP_LIST, PAPER_ONEHOT, PipelineSpec
from .samplers import BALANCER_CODES, SamplerConfig

DIM_REDUCERS = {0: "none", 1: "k_best", 3: "fwe"}
OUT_OF_SCOPE_REDUCERS = {2: "RFECV", 4: "PCA", 5: "PCA"}
OUTLIER_MODES = {0: None, 1: "iqr"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    dataset: str | None = None
    schema: str = "rain"
    target: str | None = None
    columns: list | None = None
    drop_missing_target: bool = False
    seed: int | None = None
    k_folds: int = 10
    test_fraction: float = 0.2
    out: str = "out"
    jobs: int = 1
    paper_compat_full_fit: bool = False

    drop_list: list = field(default_factory=list)
    extract_month: bool = False
    onehot_columns: list = field(default_factory=list)
    onehot_missing_indicator: bool = False
    outliers_removal_sel: int = 0
    iqr_whisker: float = 1.5
    contamination: float | None = None
    dim_reducer_sel: int = 0
    kBest: int = 50
    fwe_alpha: float = 0.05

    balancer_sel: int = 0
    balancers: list = field(default_factory=lambda: [0])
    k_neighbors: int = 5
    m_neighbors: int = 5
    enn_k: int = 3
    beta: float = 1.0

    models: list = field(default_factory=lambda: ["logistic"])
    model_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.schema not in ("rain", "rain_no_risk", "numeric"):
            raise ConfigError(f"schema must be rain, rain_no_risk or numeric, not {self.schema!r}")
        if self.dim_reducer_sel in OUT_OF_SCOPE_REDUCERS:
            raise ConfigError(
                f"dim_reducer_sel={self.dim_reducer_sel} ({OUT_OF_SCOPE_REDUCERS[self.dim_reducer_sel]}) is not supported"
            )
        if self.dim_reducer_sel not in DIM_REDUCERS:
            raise ConfigError(f"dim_reducer_sel must be one of {sorted(DIM_REDUCERS)}")
        if self.outliers_removal_sel not in OUTLIER_MODES:
            raise ConfigError(f"outliers_removal_sel must be one of {sorted(OUTLIER_MODES)}")
        for code in [self.balancer_sel, *self.balancers]:
            if code not in BALANCER_CODES:
                raise ConfigError(f"balancer code {code} not in {sorted(BALANCER_CODES)}")
        for m in self.models:
            if m not in MODEL_KINDS:
                raise ConfigError(f"unknown model {m!r}; choose from {MODEL_KINDS}")
        if self.contamination is not None:
            warnings.warn("contamination is ignored: isolation-forest outlier removal is not supported", stacklevel=2)

    # -- construction ----------------------------------------------------
    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        raw = dict(raw or {})
        preset = raw.pop("preset", None)
        base = {}
        if preset == "rain":
            base = dict(
                drop_list=list(PAPER_DROP_LIST),
                extract_month=True,
                onehot_columns=list(PAPER_ONEHOT),
                onehot_missing_indicator=True,
                models=["random_forest", "logistic"],
                balancers=list(range(8)),
                model_params={
                    "random_forest": dict(max_features="sqrt", min_samples_split=4, min_samples_leaf=2, n_estimators=300),
                    "logistic": dict(C=100.0, max_iter=2000, tol=1e-3),
                },
            )
        elif preset is not None:
            raise ConfigError(f"unknown preset {preset!r}")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        base.update(raw)
        return cls(**base)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_dict(yaml.safe_load(fh))

    # -- derived specs -------------------------------------------------
    def require_seed(self) -> int:
        if self.seed is None:
            raise ConfigError("a seed is required (config 'seed' or --seed)")
        return int(self.seed)

    def schema_columns(self, header: list[str] | None = None):
        if self.schema == "rain":
            return rain_schema(True)
        if self.schema == "rain_no_risk":
            return rain_schema(False)
        names = self.columns or header
        if not names:
            raise ConfigError("numeric schema needs 'columns' or a readable header")
        return numeric_schema(names, self.target)

    def pipeline_spec(self) -> PipelineSpec:
        selector = DIM_REDUCERS[self.dim_reducer_sel]
        return PipelineSpec(
            drop_list=tuple(self.drop_list),
            extract_month=self.extract_month,
            onehot_columns=tuple(self.onehot_columns),
            onehot_missing_indicator=self.onehot_missing_indicator,
            cap_outliers=self.iqr_whisker if OUTLIER_MODES[self.outliers_removal_sel] else None,
            selector=selector,
            k=self.kBest,
            alpha=self.fwe_alpha,
            paper_compat_full_fit=self.paper_compat_full_fit,
        )

    def sampler_config(self, code: int | None = None) -> SamplerConfig:
        return SamplerConfig.from_code(
            self.balancer_sel if code is None else code,
            k_neighbors=self.k_neighbors,
            m_neighbors=self.m_neighbors,
            enn_k=self.enn_k,
            beta=self.beta,
            seed=self.seed or 0,
        )

    def model_specs(self) -> list[ModelSpec]:
        return [
            ModelSpec(kind, seed=self.seed or 0, n_jobs=self.jobs, **self.model_params.get(kind, {}))
            for kind in self.models
        ]
