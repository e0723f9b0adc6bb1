//! Special functions: complex log-gamma and the Mittag-Leffler family.

mod gamma;
mod mittag_leffler;

pub use gamma::{gamma, gamma_real, log_gamma, rgamma};
pub use mittag_leffler::{
    ml2, ml_multivariate, ml_multivariate_many, ml_prabhakar, ml_shift_identity, MlParams2,
    MlParamsMultivariate, MlParamsPrabhakar, SeriesEval, TruncationPolicy,
};

pub(crate) use mittag_leffler::ml2_series;
