"""Random-forest fault diagnostics for a simulated wireless sensor network.

The package simulates a 110-node sensor fleet monitoring a degrading
industrial device, quantizes readings into functioning levels, trains a
from-scratch categorical random forest on the resulting feature vectors,
and reproduces three seeded batch experiments (detection delay, error rate,
and accuracy versus forest size).
"""

from .errors import (
    ArtifactError,
    ConfigurationError,
    DataFormatError,
    PartitionMismatchError,
    UndefinedImpurityError,
)
from .forest import (
    CountTuple,
    Forest,
    Tree,
    TreeNode,
    bootstrap_dates,
    diversity_level,
    entropy,
    filter_weak_trees,
    forest_diagnose,
    gain,
    gini,
    grow_tree,
    load_forest,
    save_forest,
    train_forest,
    tree_diagnose,
)
from .levels import (
    FeatureVector,
    LabeledInstance,
    ThresholdTable,
    frame_category_level,
    frame_features,
    global_level,
    label_frames,
    quantize,
    true_global_level,
)
from .pipeline import (
    DetectionRecord,
    ErrorRates,
    PipelineConfig,
    build_training_set,
    detect_failure,
    misclassification_rate,
    success_rate,
    train_pipeline_forest,
)
from .simulation import (
    ObservationFrame,
    SensorCategory,
    SensorModel,
    SensorState,
    SimulationConfig,
    draw_device_failure,
    sensor_models,
    simulate_many,
    simulate_run,
    step_sensor,
)

__version__ = "0.1.0"

_LAZY = {
    "ForestLevelClassifier": "wsnforest.estimator",
    "FrameFeaturizer": "wsnforest.estimator",
}


def __getattr__(name):
    # The sklearn wrappers import scikit-learn, which is slow; load lazily.
    if name in _LAZY:
        import importlib

        module = importlib.import_module(_LAZY[name])
        return getattr(module, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
