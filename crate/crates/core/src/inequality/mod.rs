//! Constants and classifiers of the Bourgain–Guth argument and the ratio testers.

pub mod families;
pub mod params;
pub mod ratios;
pub mod weights;
pub mod zeta;

pub use families::{members, random_signs, Family, Member};
pub use params::{lambda_of_q, nu_of_q, BGParams};
pub use ratios::{
    alpert_annular_ratio, annular_decay, martingale_mc, martingale_sweep, qr_estimate, qr_sweep, rescale_identity_check,
    square_function, trilinear_norm, trilinear_ratio, AlpertSetup, MartingaleOutcome, RescaleCheck, RhsNorm,
    SquareFunctionField, TrilinearOutcome,
};
pub use weights::{classify_center, weight_field, CaseLabel, WeightField, WeightOptions};
pub use zeta::{zeta_envelope, Zeta};
