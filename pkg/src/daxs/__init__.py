"""Delta-axis spectroscopy simulation and Hamiltonian parameter extraction."""

from .hamiltonian import (
    BranchLabel,
    LevelOffsets,
    ModelParams,
    TunnelCouplings,
    branch_energies,
    build_singlet_block,
    build_triplet_block,
    eigen_branches,
    raw_eigenvalues,
    sign_class_representatives,
)
from .image import AxisDescriptor, AxisSpec, SpectralImage
from .simulate import (
    LeadModel,
    LeadResonance,
    SimConfig,
    render_daxs_image,
    render_magneto_map,
    render_reservoir_sweep,
)
from .extract import (
    ExtractionConfig,
    PeakTracks,
    SeedCurve,
    SeedCurves,
    TrackPoint,
    extract_tracks,
    fit_column_peaks,
)
from .globalfit import (
    ErrorBudget,
    FitConfig,
    FitResult,
    build_error_budget,
    compare_sign_classes,
    estimate_scan_variability,
    fit_hamiltonian,
)
from .registration import (
    HyperbolaFit,
    align_images,
    average_images,
    classify_lines,
    fit_anticrossing,
)
from .smoothing import smooth_columns
from .units import LeverArms, from_energy_axes, to_energy_axes, virtualize

__version__ = "0.1.0"

__all__ = [
    "AxisDescriptor",
    "AxisSpec",
    "BranchLabel",
    "ErrorBudget",
    "ExtractionConfig",
    "FitConfig",
    "FitResult",
    "HyperbolaFit",
    "LeadModel",
    "LeadResonance",
    "LevelOffsets",
    "LeverArms",
    "ModelParams",
    "PeakTracks",
    "SeedCurve",
    "SeedCurves",
    "SimConfig",
    "SpectralImage",
    "TrackPoint",
    "TunnelCouplings",
    "align_images",
    "average_images",
    "branch_energies",
    "build_error_budget",
    "build_singlet_block",
    "build_triplet_block",
    "classify_lines",
    "compare_sign_classes",
    "eigen_branches",
    "estimate_scan_variability",
    "extract_tracks",
    "fit_anticrossing",
    "fit_column_peaks",
    "fit_hamiltonian",
    "from_energy_axes",
    "raw_eigenvalues",
    "render_daxs_image",
    "render_magneto_map",
    "render_reservoir_sweep",
    "sign_class_representatives",
    "smooth_columns",
    "to_energy_axes",
    "virtualize",
]
