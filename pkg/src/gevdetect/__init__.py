"""Detecting signals from sample generalized eigenvalues with an estimated noise covariance."""
from gevdetect.detector import (
    AnalyticUnavailableWarning,
    CenteringScaling,
    DetectionReport,
    Step,
    calibrate_null,
    detect,
    jacobi_centering,
    wishart_centering,
)
from gevdetect.experiments import (
    HeatmapGrid,
    experiment_cdf_compare,
    experiment_edf,
    experiment_heatmap,
    experiment_spike,
)
from gevdetect.phase import (
    PopulationSpectrum,
    TwoSourceGeometry,
    k_eff,
    lambda_of_tprime,
    lambda_threshold,
    spike_to_tprime,
    spiked_limit,
    tau_threshold,
    two_source_eigs,
    two_source_keff,
)
from gevdetect.simulate import TrialConfig, generalized_eigenvalues, simulate_trial
from gevdetect.spectra import (
    AspectRatios,
    DomainError,
    EmpiricalSpectrum,
    SingularNoiseError,
    SupportInterval,
    SystemShape,
    atom_at_zero,
    edf_and_ks,
    limit_cdf,
    limit_density,
    support_endpoints,
)
from gevdetect.stieltjes import (
    DiscreteMeasure,
    NoThresholdError,
    RealInterval,
    g_general,
    g_threshold,
    mass_at_zero,
    spike_prediction,
    support_scan,
    x_map,
)
from gevdetect.tracy_widom import OutOfTableError, TWInterpolationWarning, lookup, tw_quantile

__version__ = "0.1.0"
