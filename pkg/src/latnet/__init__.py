"""Translation-invariant linear networks on the integer lattice."""

from .certify import (CertificationReport, OmegaSweep, StabilityMargin, StorageSolution,
                      StorageSpec, StorageTable, SupplySpec, check_dissipativity,
                      check_negative_imaginary, check_passivity, check_positive_real,
                      dissipation_matrix, lyapunov_stack, passivity_matrix, solve_storage,
                      supply_symbol)
from .errors import (DivergenceError, InvalidArgument, LatnetError, NumericalFailure,
                     PreconditionViolation, ResolventSingular, UnsupportedForN)
from .models import (ChainParams, PlateParams, chain_spec, collocated, damped_actuated,
                     feedthrough_only, laplacian_5pt, pinned, plate_spec, scalar_chain)
from .phonon import (HamiltonianSpec, build_hamiltonian_model, dispersion, group_velocity,
                     hamiltonian_storage, longwave_analysis, phase_velocity_sup)
from .simulate import (TruncatedNetwork, integrate, phonon_wave_check, pulse, sine,
                       spectral_integrate)
from .spectral import spectral_abscissa, transfer_function, transfer_sweep
from .stencil import (MatrixStencil, NetworkModel, TorusGrid, circulant_embed, operator_norm,
                      symbol_eval)

__version__ = "0.1.0"
