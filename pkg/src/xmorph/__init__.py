"""xmorph: cross-robot transfer of implicit object-property knowledge.

A source robot's sensorimotor experience (audio, joint effort, end-effector
force features from exploratory behaviors) is projected either into a target
robot's feature space through an encoder-decoder network, or into a shared
latent space through kernel manifold alignment.  The evaluation harness
measures how much either projection accelerates the target robot's
object-property and object-identity recognition.
"""

__version__ = "0.1.0"

from .augment import BinStats, augment_trials, fit_bin_stats, sample_augmented
from .correspond import (
    CorrespondenceSet,
    identity_pairs,
    kema_inputs,
    property_pairs,
)
from .data import (
    DatasetManifest,
    ObjectDescriptor,
    RobotDescriptor,
    SensorimotorContext,
    TrialRecord,
    load_manifest,
    save_manifest,
    select_trials,
)
from .edn import (
    EdnConfig,
    EdnModel,
    edn_forward,
    gradient_check,
    load_edn,
    save_edn,
    train_edn,
)
from .eig import solve_generalized_eig
from .evaluate import (
    EvaluationReport,
    ProtocolConfig,
    accuracy,
    mean_accuracy_delta,
    run_identity_protocol,
    run_property_protocol,
    run_protocol,
    weighted_context_combination,
)
from .featurize import (
    BinnedFeature,
    RawSignal,
    mel_filter_bank,
    mel_spectrogram,
    spectro_temporal_histogram,
    temporal_bin,
)
from .kema import (
    KemaConfig,
    KemaModel,
    build_alignment_laplacians,
    fit_kema,
    load_kema,
    project_to_latent,
    rbf_kernel_matrix,
    save_kema,
)
from .svm import SvmConfig, SvmModel, decision_scores, predict, train_svm
from .synth import SynthConfig, SynthRobot, generate_synthetic_dataset
