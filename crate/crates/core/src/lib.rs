//! Deterministic access codes for framed random access with successive
//! interference cancellation: pattern algebra, decodability checks, code
//! constructions, exhaustive 3-IC search and a Monte Carlo PER simulator.

pub mod design;
pub mod pattern;
pub mod search;
pub mod sim;
pub mod verify;

pub use design::{
    BlockDesign, DesignError, busschbach_extend, enumerate_constant_weight, steiner_triple, verify_steiner,
};
pub use pattern::{Codebook, MAX_SLOTS, Pattern, PatternError, WeightProfile, parse_pattern, weight_profile};
pub use search::{Optimality, SearchError, SearchOptions, SearchOutcome, search_max_3ic, table_bounds};
pub use sim::{SimConfig, SimError, SimResult, Source, sic_decode, simulate_per};
pub use verify::{Verdict, VerifyError, is_covering_free, is_m_ic, is_superimposed, prop1_order, rc_condition};
