//! Experiment orchestration.

mod designs;
mod scenario;
mod snr;

pub use designs::{
    design, far_field_angles, far_field_targets, illuminate_profile, illumination_map, near_field_targets, region_values_db, run_convergence,
    run_illumination, run_region_sweep, worst_case_db, ConvergenceRun, Design, DesignId, Illumination, IlluminationSummary,
    InitKind, SweepRow, SWEEP_DESIGNS,
};
pub use scenario::{BsSpec, ExperimentSpec, LinkBudget, MultipathSpec, RisSpec, Scenario, ScanSpec, TargetSpec, DEFAULT_SEED};
pub use snr::{
    mean_db_with_se, run_snr_vs_k, select_best_path, BenchmarkId, BestPath, LinkChannels, PathComponent, PathKind, SnrPoint,
    SnrResult, TrialChannels,
};
