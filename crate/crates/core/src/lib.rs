//! Pipe-diffuser geometry, throat blockage and meanline performance.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diffusermap;
pub mod explorer;
pub mod gasdyn;
pub mod geometry;
pub mod meanline;
