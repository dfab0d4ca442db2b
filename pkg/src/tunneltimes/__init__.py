"""Characteristic times of one-dimensional quantum tunnelling.

The scattering state is split into a transmission and a reflection
subprocess (the reflection field vanishing identically beyond the barrier
centre), and the library evaluates every standard clock on that footing:
exact and asymptotic group times, the dwell time, and the Larmor-clock
suite together with spin-precession packet simulations.
"""

__version__ = "0.1.0"

from .units import HBAR_EV_PS, KINETIC_EV_NM2, UnitSystem
from .potential import (Barrier, make_piecewise, make_rectangular,
                        make_sampled, validate_symmetry)
from .stationary import (ScatteringAmplitudes, StationaryBasis,
                         amplitudes_from_basis, rectangular_amplitudes,
                         rectangular_oracle, solve_basis, stationary_triple,
                         transfer_matrix_oracle)
from .wavepacket import PacketSet, SpectralProfile, build_profile
from .timing import (DwellResult, GroupTimeResult, asymptotic_group_time,
                     dwell_time, exact_group_time, group_time_report,
                     hartman_sweep)
from .larmor import (LarmorTimes, SpinSeries, clock_times_per_k, larmor_times,
                     perturbation_field, precession_time_extrapolated,
                     spinor_simulation)

__all__ = [
    "__version__",
    "HBAR_EV_PS", "KINETIC_EV_NM2", "UnitSystem",
    "Barrier", "make_piecewise", "make_rectangular", "make_sampled",
    "validate_symmetry",
    "ScatteringAmplitudes", "StationaryBasis", "amplitudes_from_basis",
    "rectangular_amplitudes", "rectangular_oracle", "solve_basis",
    "stationary_triple", "transfer_matrix_oracle",
    "PacketSet", "SpectralProfile", "build_profile",
    "DwellResult", "GroupTimeResult", "asymptotic_group_time", "dwell_time",
    "exact_group_time", "group_time_report", "hartman_sweep",
    "LarmorTimes", "SpinSeries", "clock_times_per_k", "larmor_times",
    "perturbation_field", "precession_time_extrapolated",
    "spinor_simulation",
]
