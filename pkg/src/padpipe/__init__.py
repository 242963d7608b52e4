"""Presentation-attack detection from intrinsic image properties.

The pipeline extracts frames from a capture, aligns them at eye level,
estimates depth, illuminant, and saliency maps per frame, encodes each map
as a 2048-dimension feature vector, scores frames with per-property SVMs,
and fuses the per-property mean probabilities with a second classifier.
"""

from .classify import (
    FrameProbabilitySeries,
    ProbabilityFeatureVector,
    assemble_pfv,
    majority_vote_video,
    predict_frame_probabilities,
    train_fusion_classifier,
)
from .config import RunConfig
from .errors import ConvergenceError, DataError, ManifestError, PadError, ProtocolError
from .features import (
    FEATURE_DIM,
    ExtractorConfig,
    FeatureVector,
    extract_features,
    fallback_descriptor,
    read_feature_values,
    write_features,
)
from .maps import (
    DepthProviderConfig,
    PropertyMap,
    SuperpixelGraph,
    boundary_connectivity,
    estimate_illuminant_map,
    estimate_saliency_map,
    provide_depth_map,
    segment_superpixels,
    solve_saliency_scores,
)
from .metrics import ConfusionCounts, compute_rates, select_threshold_eer
from .model import (
    DatasetManifest,
    PropertyKind,
    ProtocolSpec,
    SampleRecord,
    load_manifest,
    resolve_protocol,
)
from .pfm import read_pfm, write_pfm
from .pipeline import PipelineRunner
from .preprocess import (
    EyeLandmarks,
    Frame,
    FrameSequence,
    align_and_crop,
    extract_frames,
)
from .protocol import EvalReport, render_report, run_protocol
from .svm import SvmModel, load_model, platt_calibrate, save_model, svm_train
from .synthgen import SynthSpec, generate_synthetic_dataset

__version__ = "0.1.0"
