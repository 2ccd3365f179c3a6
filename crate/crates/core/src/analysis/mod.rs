//! Post-processing of solved fields and proof-level sequence experiments.

mod coefficient;
mod counterexample;
mod fit;
mod improvement;
mod ratio;
mod recursion;
mod sector;
mod source_probe;

pub use coefficient::{aitken, harmonic_coefficient, harmonic_replacement_in, HarmonicCoefficients};
pub use counterexample::{
    counterexample_experiment, counterexample_min_slope, CounterexampleConfig, CounterexampleReport, ProbeSample,
};
pub use fit::{
    fit_growth, geometric_depths, local_mesh_size, sample_ray, GrowthFit, GrowthModel, FLOOR_FACTOR,
    MIN_WINDOW_RATIO,
};
pub use improvement::{interior_improvement, Improvement};
pub use ratio::{ratio_probe, ProbeRegion, RatioProbe, RatioSample, TemplateBounds};
pub use recursion::{
    ak_continuum_limit, ak_recursion, sigma_recursion, RecursionKind, RecursionTrace, SigmaMode, MAX_K_MAX, MIN_K_MAX,
};
pub use sector::{
    critical_log_barrier, sector_boundary, sector_mesh, solve_on_sector, solve_sector, OuterData, SectorGrid,
    SectorSolution,
};
pub use source_probe::{critical_source_probe, SourceProbeReport};
