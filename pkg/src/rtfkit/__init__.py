"""RTF estimation toolkit.

Relative transfer function estimators (CS, R1, CW, their power-iteration
variants, and the external-microphone SC estimator), an online MVDR, a
synthetic diffuse-noise scene generator and evaluation metrics.
"""

__version__ = "0.1.0"

from . import kernels
from .beamforming import apply, batch_mvdr, mvdr_weights, shadow_apply
from .errors import (ConfigError, DegenerateError, GenerationError, GeometryError, InitError,
                     MixError, NotHermitianError, NotPositiveDefiniteError, RtfkitError,
                     ShapeError, SingularError)
from .estimators import (ESTIMATORS, LOCAL_ESTIMATORS, estimate_cs, estimate_cw, estimate_pm_cs,
                         estimate_pm_cw, estimate_r1, estimate_sc, normalize_rtf)
from .linalg import cholesky, hermitian_evd, power_iteration, solve_hermitian, solve_triangular
from .metrics import (MetricsReport, batch_hermitian_angle, hermitian_angle,
                      intelligibility_weighted_snr, reference_rtf, sii_band_weights)
from .scenegen import SceneOutput, SceneSpec, generate_diffuse_noise, generate_scene, mix_at_snr
from .spectral import StftConfig, analyze, read_wav, synthesize, write_wav
from .tracking import CovarianceTracker, oracle_vad, smoothing_factor
