"""Decay of a superconducting qubit into acoustic cavity modes.

Wave propagation through Bragg mirrors and transducers, Fabry-Perot and
microring mode combs, multimode decay rates and single-excitation
dynamics, fitting of decay-rate scans, and a CSV-based command line.
"""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    DBRSpec,
    DecayCurve,
    FitResult,
    FitStatus,
    FPCavitySpec,
    IDTSpec,
    MaterialParams,
    Mode,
    ModeSet,
    QubitSpec,
    RingCavitySpec,
    ScanData,
    ValidationError,
    Violation,
    rate_to_t1,
    t1_to_rate,
    validate,
)
from .wave import (  # noqa: E402
    NumericFailure,
    bragg_frequency,
    coupling_profile,
    idt_response,
    mirror_reflectivity,
)
from .cavity import device_mode_set, fp_mode_set, fsr, ring_mode_set  # noqa: E402
from .dynamics import (  # noqa: E402
    IntegrationError,
    Regime,
    classify_regime,
    decay_scan,
    dressed_eigenvalues,
    emitted_pulse_metrics,
    evolve_single_excitation,
    multimode_decay_rate,
    phonon_emission_probability,
    purcell_factor,
)
from .estimation import (  # noqa: E402
    fit_exponential,
    fit_fp_model,
    fit_ring_model,
    tls_q_fit,
)
from .config import ConfigError, parse_config, load_config  # noqa: E402
