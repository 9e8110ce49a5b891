//! Local hidden-variable models with no-registration outcomes.
//!
//! [`ensemble`] handles discrete microstate mixtures exactly; the rest samples
//! continuous hidden variables and tallies responses.

pub mod ensemble;
mod model;
mod sim;

pub use ensemble::{
    micro_observable_expectation, mixture_probabilities, MicrostateEnsemble, MixtureProbabilities, ProbabilityField,
};
pub use model::{
    always_detect_model, constant_model, gisin_gisin_model, model_by_name, random_local_model, DetectFn,
    HiddenVariable, MicroOutcome, MicrostateModel, PropertyFn, Sampler, SideRule, MODEL_NAMES,
};
pub use sim::{
    chsh_pairs, estimate_micro_correlation, fair_sampling_check, micro_chsh, run_experiment,
    run_experiment_with_workers, simulate_chsh, ChshSimulation, Estimate, FairSampling, SettingTally,
    SimulationSummary, CHUNK_TRIALS,
};
