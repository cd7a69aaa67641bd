"""Newton-Raphson power flow with a fused CRS Jacobian construction."""

from .caseio import (Branch, Bus, BusType, Case, CaseFormatError, CaseValidationError, Gen,
                     load_case, parse_json_case, parse_matpower_case, scheduled_power,
                     serialize_case_json, validate_case)
from .crs import (ComplexCRS, CRSError, RealCRS, crs_block2x2, crs_from_coo, crs_from_triplets,
                  crs_matvec, crs_submatrix, crs_to_dense, crs_to_triplets)
from .derivatives import (DerivativePair, Mismatch, VoltageState, complex_injections,
                          fused_derivatives, generic_derivatives, mismatch, polar_injections)
from .jacobian import create_jacobian_direct, create_jacobian_generic
from .network import IndexSets, build_ybus, bus_index_sets
from .solver import (Init, PowerFlowResult, SingularMatrixError, SolveOptions, SolverPath,
                     lu_solve, newton_raphson)
from .synth import synth_grid

__version__ = "0.1.0"
