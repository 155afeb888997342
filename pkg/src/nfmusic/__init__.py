"""Near-field multi-source localization with angular-domain MUSIC.

Simulation library and benchmark harness for localizing concurrent
narrowband sources in the near field of large uniform arrays: full
near-field MUSIC searches (2D over azimuth/distance for linear arrays,
3D for planar arrays), an anti-diagonal decoupled baseline, and a
sub-array angle-estimation-plus-triangulation estimator that needs no
distance search at all, with Monte-Carlo sweep tooling and CSV/figure
reporting.
"""

from .bench import (SummaryRow, SweepSpec, TrialRecord, beam_gain_sweep,
                    emit_summary_csv, emit_trials_csv, match_estimates,
                    run_sweep, summarize, time_spectrum_evaluation)
from .config import RunConfig, build_geometry, load_profile, parse_config
from .errors import ConfigError, DegenerateGeometryError
from .estimators import (CostModel, SourceEstimate, complexity_counts,
                         measured_cost, modified_music_ula,
                         modified_music_upa, music_2d_nearfield, music_3d_upa)
from .geometry import (ArrayGeometry, FieldBoundaries, Subarray, aperture,
                       bearing_from, direction, element_positions,
                       exact_distance, exact_distances, field_boundaries,
                       fresnel_distance, polar_from_position,
                       position_from_polar, steering_matrix, steering_vector,
                       subarray_split, ula, upa)
from .grids import GridSpec, axis_values
from .instrumentation import Meter, measure, projection_macs
from .subspace import (CovarianceEstimate, PeakSet, SpectrumGrid,
                       SubspaceDecomposition, decompose, evaluate_spectrum,
                       find_k_peaks, grid_peaks, music_spectrum_value,
                       sample_covariance, spectrum_to_csv, spectrum_values,
                       streaming_k_peaks)
from .synthesis import (Scenario, SnapshotSet, SourceTruth, load_snapshots,
                        sample_sources, save_snapshots, set_noise_for_snr,
                        synthesize_snapshots)
from .triangulation import (SubarrayAngleSet, TriangulationSystem,
                            association_swap, build_triangulation_system,
                            estimate_subarray_angles, proposed_localize,
                            triangulate)

__version__ = "0.1.0"
