//! Tree-like Cantor families, finite-depth dimension certificates, Moran
//! solvers, tail moments and a box-counting cross-check.

mod boxcount;
mod builders;
mod moran;
mod tree;
mod verify;

pub use boxcount::{box_count_estimate, log_scales, sample_cantor_points, sample_uniform_points, BoxCountFit};
pub use builders::{
    admissible_distal_digits, asymptotic_threshold, build_asymptotic_tree, build_distal_tree, choose_distal_parameters, distal_digit,
    distal_separation, distal_sequence, tree_from_descriptor, DistalParameters,
};
pub use moran::{cantor_ratios, moran_solve, moran_solve_ratios, tail_moment, tail_target_width, MoranSolution, MoranSum};
pub use tree::{block_geometry, cantor_tree, BlockGeometry, CantorTreeSpec, ChildBlock, ChildRule, DigitRange, TreeDescriptor};
pub use verify::{
    replay_certificate, verify_lower_bound, verify_upper_bound, BoundKind, DimensionCertificate, DimensionError,
    SeparationSeq, ViolationKind, CERTIFICATE_SCHEMA, NODE_CAP,
};
