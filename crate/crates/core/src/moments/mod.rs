//! Multivariate moments, cumulants and cumulant-neglect closure.

mod algebra;
mod multi_index;
mod program;
mod symbolic;

pub use algebra::{
    close_moment, cumulants_to_moments, cumulants_to_moments_up_to, moments_to_cumulants,
    CumulantSet, MomentSet, MAX_CLOSURE_TARGET_ORDER,
};
pub use multi_index::{binomial, MultiIndex};
pub use program::ClosureProgram;
pub use symbolic::{closure_polynomial, MomentPolynomial, Monomial};
