"""UCB bandits with learning-curve calibrated exploration for ML estimators."""

from .cf_env import EnvConfig, GroundTruth, generate_ground_truth, instant_regret, sample_reward
from .cgf import (
    CgfBound,
    ConjugateBound,
    concentration_bound,
    conjugate_inverse,
    gaussian_conjugate,
    legendre_transform,
    numerical_conjugate,
    scale_by_samples,
)
from .harness import PolicyConfig, RunConfig, compare_policies, run_episode, verify_regret_bound
from .learning_curve import LearningCurve, PowerLawFit, fit_power_law, fit_stable_regime, mse_to_sigma, predict_mse
from .mf_model import MfModel, validation_mse
from .policies import MlUcbConfig, classical_ucb_score, ml_ucb_bonus, ml_ucb_select, psi_ucb_score

__version__ = "0.1.0"
