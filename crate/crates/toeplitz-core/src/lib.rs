//! Exact finite-window computation on Toeplitz subshifts.
//!
//! The crate builds Toeplitz sequences from hole words (periodic patterns
//! with deferred positions), exposes the periodic structure and the odometer
//! sitting underneath, enumerates factor languages with certified counts, and
//! constructs shift-commuting sliding-window maps: powers, roots of the
//! shift, and their compositions. Everything is computed on windows that are
//! long enough to certify the claim being made; nothing extrapolates.

pub mod alphabet;
pub mod automorphism;
pub mod blocks;
pub mod budget;
pub mod construction;
pub mod error;
pub mod holewords;
pub mod language;
pub mod numtheory;
pub mod odometer;
pub mod products;
pub mod system;
pub mod window_map;

pub use alphabet::{Alphabet, AlphabetRef, Cell};
pub use automorphism::{
    extensional_equal, make_phi, phi_odometer_image, powers_avoid_shifts, root_of_shift,
    DistinctnessReport, EquivalenceReport, PhiCertificate, RootCertificate,
};
pub use blocks::{
    balanced_arrangements, overlap_violation, AutProbeReport, BlockLevelReport, BlockMode,
    BlockSpec, BlockSystem, C1C2Report, EntropyReport, ExtensibilityReport, FrequencyRow,
    FrequencyTable, OverlapReport, OverlapWitness,
};
pub use construction::{realize_spec, ConstructionSpec};
pub use error::{Error, Result};
pub use holewords::{fill, iterate, HoleWord, SequenceWindow};
pub use language::{
    complexity_table, factor_count, factor_counts, factor_set, fit_exponent, log_spaced,
    master_window, theoretical_exponent, ComplexityTable, ExponentFit, FactorReport, MasterWindow,
};
pub use odometer::{
    Multiplicity, MultiplicityReport, OdometerElement, OrderResult, Scale, TorsionReport,
};
pub use products::{
    mixing_rejection, product_factor_commutes, realize_group, realize_group_with_primes,
    EntropyMode, MixingReport, ProductMapReport, ProductSystem, RealizeReport,
};
pub use system::{
    EssentialPeriodReport, LevelData, PerSetReport, PhaseResult, SkeletonReport, ToeplitzSystem,
};
pub use window_map::{first_disagreement, PhiRule, WindowMap};
