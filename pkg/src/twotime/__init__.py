"""Collapse dynamics with initial and final boundary conditions."""

from .errors import (CapacityError, CollapseError, IncompatibleBoundaryError,
                     ModelValidityError, NumericalError, ValidationError, ZeroWeightError)
from .linalg import (DEFAULT_TOL, DensityOperator, HermitianOperator, HilbertSpace, PureState,
                     Tolerances, UnitaryOperator, conjugate_in_basis, normalize_history,
                     propagator, trace_product)
from .model import (CollapseFamily, CollapseRecord, EventSchedule, OutcomeGrid, TwoTimeModel,
                    build_grw_family, build_projective_family, check_symmetry_conditions,
                    completeness_residual, reverse_record)
from .forward import (collapse_distribution, history_operator, sample_batch,
                      sample_trajectory, state_at)
from .engine import (backward_history, born_analysis, conditional_next_collapse,
                     conditional_previous_collapse, joint_record_weight, record_probability,
                     shielding_residual, time_symmetry_residual)

__version__ = "0.1.0"
