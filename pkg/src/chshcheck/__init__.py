"""CHSH Bell-test simulation with trace-norm error bounds and crosstalk diagnostics."""

__version__ = "0.1.0"

from .chsh import (
    CorrelatorTable,
    EtaTable,
    SettingCorrelators,
    Verdict,
    bell_signal,
    corrected_classical_bound,
    correlators_from_state,
    eta,
    eta_table,
    max_error_bound,
    verdict,
)
from .crosstalk import (
    DeltaTable,
    asymmetry_index,
    crosstalk_parameters,
    delta_eta_bounds_check,
    rough_total_estimate,
)
from .optimizer import OptimizationConfig, bias_study, objective, optimize
from .report import AnalysisReport, analyze, report_emit
from .simulation import ChannelKind, CountsRecord, CrosstalkModel, apply_channel, run_experiment, sample_shots
from .states import (
    MeasurementAngles,
    SettingsQuad,
    canonical_settings,
    prepare_ideal_state,
    rotation_gate,
    singlet,
)
