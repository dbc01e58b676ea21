//! Exact-computation laboratory for directional dynamics of
//! one-dimensional linear cellular automata composed with the shift map.
//!
//! The crate computes, at desk scale and wherever possible exactly:
//!
//! - join-partition entropies along index sequences and the closed-form
//!   directional sequence entropy they converge to ([`entropy`]);
//! - cone-averaged correlation deviations, the operational form of
//!   directional weak mixing, plus pointwise ergodic averages along
//!   integer directions ([`mixing`], [`orbit`]);
//! - digit frequencies of binomial-weighted digit sums, with three
//!   independent computation routes ([`binom`]).
//!
//! Probabilities are exact rationals with power-of-alphabet denominators;
//! entropies are exact rational combinations of logarithms of primes
//! ([`exact`]). Hot loops (assignment enumeration, seed batches, cone
//! sweeps) run data-parallel under the default `parallel` feature and
//! have sequential fallbacks that produce bit-identical results.

pub mod binom;
pub mod cone;
pub mod cylinder;
pub mod entropy;
pub mod error;
pub mod exact;
pub mod joint;
pub mod mixing;
pub mod orbit;
pub mod packed;
pub mod rng;
pub mod rule;
pub mod types;
pub mod window;

pub use cone::{
    make_geometric_sequence, make_syndetic_sequence, validate_sequence, AffineRational,
    CoverageFlag, DirectionCone, Rational64, SequenceReport, SequenceS,
};
pub use cylinder::{
    cylinder_measure, event_measure, event_measure_enumerated, event_measure_field,
    pullback_support, Cylinder, CylinderPartition, EventSpec,
};
pub use entropy::{
    closed_form_entropy, direction_invariance_check, independence_join_check, join_atoms,
    join_atoms_points, join_entropy, sequence_entropy_profile, verify_atom_structure,
    ClosedFormEntropy, EntropyProfile, JoinAtoms, ProfileRow, StructureReport,
};
pub use error::{Error, Result};
pub use exact::{ExactLogSum, ExactProb, Rational};
pub use rule::LocalRule;
pub use types::{ActionIndex, Interval, Modulus};
pub use window::{
    apply_action, column_trace, column_trace_generic, eval_coordinate, needed_support, step_once,
    WindowConfig,
};
