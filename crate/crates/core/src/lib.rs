//! Evolutionary optimization of Euclidean TSP instances where the variation
//! operators are delegated to a pluggable backend: a chat-completions
//! language model, a replayed transcript, or a built-in permutation GA.
//!
//! Alongside the optimizer the crate carries what is needed to evaluate it:
//! seeded instance generators, exact solvers for ground-truth optima, and
//! the classical construction heuristics used as baselines.

pub mod backend;
pub mod engine;
pub mod exact;
pub mod generator;
pub mod heuristics;
pub mod population;
pub mod prompt;
pub mod runlog;
pub mod seed;
pub mod tsp;
pub mod tsplib;

pub use backend::{
    generate, BackendError, BackendReport, BackendSpec, BuiltinBackend, BuiltinConfig, Exchange,
    MutationKind, OffspringBackend, OffspringRequest, RemoteConfig,
};
pub use engine::{
    evolve, init_population, survivor_select, update_temperature, EvolveConfig, EvolveError,
    TemperatureState,
};
pub use exact::{
    branch_bound, brute_force, held_karp, solve_exact, ExactResult, Method, SolverError,
};
pub use generator::{gen_clu, gen_rue, CluParams, GenError, GenSpec};
pub use heuristics::{
    insertion, insertion_cost, nearest_neighbor, HeuristicSpec, StartRule, Variant,
};
pub use population::Population;
pub use prompt::{
    build_lmea_prompt, build_opro_prompt, parse_response, ParsedResponse, PromptBundle, PromptMode,
};
pub use runlog::{GenerationRecord, RunLog, RunStatus};
pub use tsp::{
    canonicalize, gap_percent, optimality_gap, validate_tour, GapError, Instance, InstanceKind,
    Point, ScoredTour, Tour, TourViolation, TspError, EPS,
};
pub use tsplib::{read_instance, write_instance, LoadError};
