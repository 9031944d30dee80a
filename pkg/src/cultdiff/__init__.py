"""CultDiff toolkit: culture-tagged image corpus, human-feedback surveys,
contrastive similarity-metric training, and evaluation against baselines."""

from .catalog import Catalog, CatalogTargets, Country, DEFAULT_COUNTRIES
from .config import PipelineConfig
from .encoder import EncoderSpec, ImageEncoder
from .fixtures import build_fixture
from .loss import pair_distance, weighted_margin_loss
from .pairs import build_real_pairs, build_synthetic_pairs, make_split_plan, normalize_score, split_dataset
from .pipeline import Pipeline
from .stats import fleiss_kappa, kendall_tau_b, kendall_tau_c, pearson_r, spearman_rho
from .survey import SurveyStore
from .training import TrainConfig, train

__version__ = "0.1.0"

__all__ = [
    "Catalog",
    "CatalogTargets",
    "Country",
    "DEFAULT_COUNTRIES",
    "PipelineConfig",
    "EncoderSpec",
    "ImageEncoder",
    "build_fixture",
    "pair_distance",
    "weighted_margin_loss",
    "build_real_pairs",
    "build_synthetic_pairs",
    "make_split_plan",
    "normalize_score",
    "split_dataset",
    "Pipeline",
    "fleiss_kappa",
    "kendall_tau_b",
    "kendall_tau_c",
    "pearson_r",
    "spearman_rho",
    "SurveyStore",
    "TrainConfig",
    "train",
]
