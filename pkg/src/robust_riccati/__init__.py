"""Robust Kalman filtering with a time-varying risk-sensitivity parameter."""
from .certify import (ConvergenceCertificate, compute_certificate, lower_bound_ramp,
                      verify_certificate_empirically)
from .exceptions import (BreakdownError, CertificationError, ContractError, DomainError,
                         ModelValidationError, NonConvergenceError, NumericError,
                         RobustRiccatiError, StructuralError)
from .gamma import RiskParameter, gamma, gamma_dtheta, solve_theta
from .model import StateSpaceModel, example_model, rank_of_block_matrix, validate_model
from .nblock import (NBlockSystem, ThetaBlock, build_nblock, distorted_gramians, find_phi,
                     krein_gramian, nblock_gains, nblock_map)
from .psd import (contraction_bound, loewner_geq, spd_log, spd_sqrt, symmetrize,
                  thompson_distance)
from .riccati import (FilterTrace, filter_step, iterate_riccati, riccati_step,
                      robust_gain, robust_riccati_step, rs_riccati_step, run_filter,
                      simulate)

__version__ = "0.1.0"
