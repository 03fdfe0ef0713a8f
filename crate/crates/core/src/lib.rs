//! Envy-free and proportional division of layered cakes among groups.
//!
//! All arithmetic is exact ([`Rational`]). The main entry points are
//! [`fptas::solve_two_layer`], [`fptas::solve_one_layer`],
//! [`chessboard::grid_search`], [`proportional::solve_proportional`] and the
//! checks in [`verifier`].

pub mod assignment;
pub mod cake;
pub mod chessboard;
pub mod error;
pub mod field;
pub mod fptas;
pub mod generate;
pub mod proportional;
pub mod two_knife;
pub mod valuation;
pub mod verifier;

pub use assignment::{balanced_assign, brute_force_assign, tum_assign, WeightMatrix};
pub use cake::{
    check_partition, int, parse_rational, rat, sym_diff_distance, GroupAssignment, Interval, LayeredPiece,
    MultiDivision, PartitionFlags, Piece, Rational,
};
pub use error::{Error, Result};
pub use field::{PreferenceField, SimplexPoint, TargetGeometry, Vertex};
pub use fptas::{solve_one_layer, solve_two_layer, SolveOptions, Solution};
pub use proportional::{solve_proportional, ProportionalSolution};
pub use valuation::{AdditiveValuation, Agent, DensitySegment, Instance, ValuationOracle};
pub use verifier::{check_eps_envy_free_all_birthday, check_proportional, max_envy, SizeBounds};
