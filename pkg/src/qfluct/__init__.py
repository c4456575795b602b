"""qfluct: noise-mechanism identification for superconducting qubits.

Synthesizes and analyzes time records of fluctuating qubit parameters
(T1, transition frequency, resonator quality factor) to tell apart the
dielectric-loss mechanisms behind them: individual telegraph switchers,
1/f ensembles of many weak fluctuators, white (measurement) noise, and
slow drift. The pipeline is simulate -> estimate (Welch PSD + Allan
deviation) -> decompose -> classify, with a spin-locking branch that
probes the noise spectral density at the Rabi frequency.

All randomness descends from one master seed through named child
streams, so every result is reproducible bit for bit, including under
internal parallelism.
"""

from .errors import (
    AmbiguityError,
    FileFormatError,
    FitFailureError,
    InvalidInputError,
    IOFailureError,
    NumericalError,
    OutputExistsError,
    QfluctError,
    SchemaVersionError,
)
from .models import (
    AllanCurve,
    AllanTransfer,
    Drift,
    Lorentzian,
    NoiseComponent,
    NoiseModel,
    OneOverF,
    PowerSpectrum,
    TimeSeries,
    Unit,
    White,
    lorentzian_allan_peak_constant,
    model_allan,
    model_psd,
)
from .generators import (
    EnsembleSpec,
    TelegraphSpec,
    gen_ensemble_one_over_f,
    gen_observable,
    gen_telegraph,
    gen_white,
)
from .spectral import (
    allan_deviation,
    autocorr_psd_oracle,
    default_segment_length,
    default_taus,
    welch_psd,
)
from .protocols import (
    DecayCurve,
    QubitSpec,
    SpinLockPoint,
    TlsCoupling,
    fit_exponential,
    fit_ramsey,
    fit_ramsey_beats,
    invert_spinlock,
    sim_ramsey,
    sim_relaxation,
    sim_spinlock,
)
from .fitting import (
    CLASS_ENSEMBLE,
    CLASS_MIXED,
    CLASS_SINGLE,
    CLASS_WHITE,
    CLASSIFICATIONS,
    AnalysisResult,
    FitReport,
    PreparedRecord,
    analyze_timeseries,
    band_power_shares,
    classify_mechanism,
    component_band_power,
    detect_telegraph,
    drift_is_significant,
    estimate_drift,
    finalize_report,
    fit_noise_model,
    fit_spinlock_spectrum,
    prepare_record,
)
from .scenarios import (
    realize_spinlock,
    realize_timeseries,
    scenario_config,
    scenario_names,
)
from .io import (
    RunConfig,
    config_hash,
    read_allan,
    read_decay_curve,
    read_gamma_table,
    read_json,
    read_spectrum,
    read_stamp,
    read_timeseries,
    write_allan,
    write_decay_curve,
    write_gamma_table,
    write_json,
    write_spectrum,
    write_timeseries,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "QfluctError",
    "InvalidInputError",
    "NumericalError",
    "FitFailureError",
    "AmbiguityError",
    "IOFailureError",
    "FileFormatError",
    "SchemaVersionError",
    "OutputExistsError",
    # models
    "Unit",
    "TimeSeries",
    "NoiseComponent",
    "White",
    "OneOverF",
    "Lorentzian",
    "Drift",
    "NoiseModel",
    "PowerSpectrum",
    "AllanCurve",
    "model_psd",
    "model_allan",
    "AllanTransfer",
    "lorentzian_allan_peak_constant",
    # generators
    "TelegraphSpec",
    "EnsembleSpec",
    "gen_telegraph",
    "gen_ensemble_one_over_f",
    "gen_white",
    "gen_observable",
    # spectral estimators
    "welch_psd",
    "allan_deviation",
    "autocorr_psd_oracle",
    "default_segment_length",
    "default_taus",
    # protocols
    "QubitSpec",
    "TlsCoupling",
    "DecayCurve",
    "SpinLockPoint",
    "sim_relaxation",
    "sim_ramsey",
    "sim_spinlock",
    "invert_spinlock",
    "fit_exponential",
    "fit_ramsey",
    "fit_ramsey_beats",
    # fitting and classification
    "CLASS_SINGLE",
    "CLASS_ENSEMBLE",
    "CLASS_WHITE",
    "CLASS_MIXED",
    "CLASSIFICATIONS",
    "FitReport",
    "PreparedRecord",
    "AnalysisResult",
    "fit_noise_model",
    "fit_spinlock_spectrum",
    "detect_telegraph",
    "estimate_drift",
    "classify_mechanism",
    "component_band_power",
    "band_power_shares",
    "prepare_record",
    "finalize_report",
    "drift_is_significant",
    "analyze_timeseries",
    # scenarios
    "scenario_names",
    "scenario_config",
    "realize_timeseries",
    "realize_spinlock",
    # persistence
    "RunConfig",
    "read_timeseries",
    "write_timeseries",
    "read_decay_curve",
    "write_decay_curve",
    "read_spectrum",
    "write_spectrum",
    "read_allan",
    "write_allan",
    "read_gamma_table",
    "write_gamma_table",
    "read_json",
    "write_json",
    "read_stamp",
    "config_hash",
]
