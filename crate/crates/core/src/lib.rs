//! Tests and confidence intervals that maximize a bootstrap criterion over a
//! shrinking neighborhood of a consistent estimate instead of evaluating it
//! only at the estimate.
//!
//! The geometry, optimizer, quantile and inference layers are generic over
//! [`Real`] (`f32` or `f64`); the aliases below fix the scalar type.

pub mod design;
pub mod error;
pub mod inference;
pub mod numopt;
pub mod quantile;
pub mod scalar;
pub mod streams;

pub use design::{
    build_try_design, filter_feasible, grid_design, grid_design_capped, lhd_design, lift_to_region, map_to_region,
    Constraint, DesignKind, ParamPoint, Region, TryDesign, UnitDesign,
};
pub use error::{Error, Result};
pub use inference::{
    bootstrap_ci, bootstrap_pvalue, default_m, is_ci_upper, is_objective, is_pvalue_design, is_pvalue_refined,
    m_out_of_n_ci, nb_ci, nb_pvalue, CiMethod, CiResult, ImportanceSet, Model, PValueMethod, PValueResult,
    PointQuantiles, PointValue, RefineOptions, Side,
};
pub use numopt::{multistart_max, nelder_mead, nelder_mead_bounded, OptResult};
pub use quantile::{sample_quantile, weighted_quantile};
pub use scalar::Real;
pub use streams::{mix, StreamRng, Streams};

pub type ParamPointF64 = ParamPoint<f64>;
pub type ParamPointF32 = ParamPoint<f32>;
pub type RegionF64 = Region<f64>;
pub type RegionF32 = Region<f32>;
pub type ConstraintF64 = Constraint<f64>;
pub type UnitDesignF64 = UnitDesign<f64>;
pub type TryDesignF64 = TryDesign<f64>;
pub type PValueResultF64 = PValueResult<f64>;
pub type CiResultF64 = CiResult<f64>;
pub type OptResultF64 = OptResult<f64>;
