"""Helical swimmer climbing a concentration field by periodic steering.

The package simulates a self-propelled body whose translational and
rotational rates are modulated by a band-pass-filtered, adaptively
normalized stimulus sampled along its own path. The fast motion is a
helix; an exact change of variables splits it into a slow mean pose and a
periodic wobble, which is what the analysis tools reason about.
"""
from .averaging import (AscentReport, alignment_angle_series, ascent_condition,
                        exactness_error, fit_gamma, transient_cutoff)
from .fields import (FieldSpec, NoiseSpec, concentration, concentration_many,
                     gradient, gradient_many, make_rng, noise_sequence,
                     sample_stimulus)
from .geometry import hat, orthonormalize, rot_exp
from .kinematics import (AveragedPose, HelixInvariants, Pose, SwimmerParams,
                         averaged_frame, averaged_frames, body_velocity,
                         feedback_coefficients, helix_invariants,
                         periodic_offset, pose_derivative)
from .signaling import (FilterParams, FilterState, filter_derivative,
                        filter_output, quasi_steady_fit, transfer_gain_phase)
from .simulate import (ArrivalMetrics, SimConfig, SimState, Trajectory,
                       arrival_metrics, run, step)
from .config import (ConfigError, canonical_json, config_digest, load_config,
                     parse_config, resolved_dict)

__version__ = "0.1.0"

__all__ = [
    "AscentReport", "alignment_angle_series", "ascent_condition",
    "exactness_error", "fit_gamma", "transient_cutoff",
    "FieldSpec", "NoiseSpec", "concentration", "concentration_many",
    "gradient", "gradient_many", "make_rng", "noise_sequence",
    "sample_stimulus",
    "hat", "orthonormalize", "rot_exp",
    "AveragedPose", "HelixInvariants", "Pose", "SwimmerParams",
    "averaged_frame", "averaged_frames", "body_velocity",
    "feedback_coefficients", "helix_invariants", "periodic_offset",
    "pose_derivative",
    "FilterParams", "FilterState", "filter_derivative", "filter_output",
    "quasi_steady_fit", "transfer_gain_phase",
    "ArrivalMetrics", "SimConfig", "SimState", "Trajectory",
    "arrival_metrics", "run", "step",
    "ConfigError", "canonical_json", "config_digest", "load_config",
    "parse_config", "resolved_dict",
    "__version__",
]
