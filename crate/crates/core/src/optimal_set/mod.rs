//! Description, sampling and selection over the set of all solutions.

pub mod describe;
pub mod dual;
pub mod path;
pub mod sample;
pub mod select;
pub mod uniqueness;

pub use describe::{contains, describe_set, Membership, OptimalSetDescription};
pub use dual::{recover_dual, recover_dual_with, DualChoice};
pub use sample::sample_solutions;
pub use select::{max_norm_approx, min_norm, tune_over_set};
pub use uniqueness::{ggp_check, is_unique, lasso_general_position, GgpMode, GgpReport, UniquenessCertificate, Verdict};
