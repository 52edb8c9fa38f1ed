//! Model plug-ins for `loci-core`.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod hdreg;
pub mod multinomial;
pub mod npreg;
pub mod weibull;
