"""Data-level resampling for imbalanced binary classification."""

from .data import ColumnMeta, Dataset, class_counts, from_arrays, load_csv, rain_schema
from .evaluation import (
    ConfusionMatrix,
    Metrics,
    confusion,
    cross_validate,
    grid_search,
    metrics,
    run_experiment,
    stratified_kfold,
    stratified_split,
)
from .models import ModelSpec, fit_model, paper_models
from .neighbors import NeighborIndex
from .preprocess import FittedPipeline, PipelineSpec, fit_pipeline, paper_pipeline_spec
from .samplers import SamplerConfig, resample

__version__ = "0.1.0"
