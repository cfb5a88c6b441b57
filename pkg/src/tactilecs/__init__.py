"""Compressed sensing for large tactile arrays.

Simulate ground-truth tactile frames, measure them with hardware-faithful
+-1 operators, reconstruct full-resolution frames by sparse recovery, and
classify objects directly from the compressed signals.
"""

from .frames import (
    FORCE_MAX,
    FORCE_MIN,
    PSNR_PERFECT,
    SensorNoiseModel,
    TactileFrame,
    add_sensor_noise,
    approx_sparsity,
    psnr,
)
from .bases import SparseBasis, analyze, dense_matrix, sparsity_table, synthesize
from .contact import (
    OverCompressionError,
    PerturbationGrid,
    SphereUnionObject,
    SubstratePose,
    TaxelArraySpec,
    TrajectorySpec,
    generate_observations,
    primitive_object,
    quasistatic_frame,
    run_trajectory,
    union_from_vertices,
)
from .datasets import ObservationDataset, load_dataset, save_dataset
from .learning import (
    CrossValResult,
    DagSvmModel,
    LinearSvmModel,
    accuracy,
    classify_batch,
    compress_dataset,
    confusion_matrix,
    cross_validate,
    dagsvm_classify,
    dagsvm_decision_path,
    dagsvm_train,
    hinge_loss,
    svm_predict,
    svm_train,
)
from .measurement import (
    SbheOperator,
    SeparableOperator,
    adjoint_apply,
    apply,
    operator_from_json,
    operator_to_json,
    rip_delta_bruteforce,
    sbhe_new,
    separable_new,
    wiring_report,
)
from .reconstruction import (
    ReconstructionConfig,
    ReconstructionState,
    calibrate_stepsize,
    default_lambda,
    fista_bpdn,
    l0_oracle,
    reconstruct_frame,
    stream_reconstruct,
)

__version__ = "0.1.0"
