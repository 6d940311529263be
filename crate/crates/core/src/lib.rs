//! Convexity in the first Heisenberg group.
//!
//! Group arithmetic and norms live in [`heis`]; compact sets are membership
//! oracles ([`sets`]); [`convexity`] falsifies convexity of functions;
//! [`cone`] builds cone functions from dilation families of a set; [`ch`]
//! falsifies condition (C_H) for those families and checks the necessary
//! conditions for radial sets.
//!
//! Every check is a seeded sampling falsifier: a returned witness is a
//! replayable violation, while the absence of one only reports the budget.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ch;
pub mod cone;
pub mod convexity;
pub mod error;
pub mod heis;
pub mod sampling;
pub mod sets;

pub use ch::{
    ch_curve, ch_curve_case, ch_curve_cases, ch_curve_point, envelope_check, falsify_ch,
    falsify_ch_unit_tau, radial_necessary, solve_tau, ChOutcome, ChWitness, CurveCase,
    EnvelopeReport, RadialNecessityReport, TauSolution, TauSolutions,
};
pub use cone::{
    compare_closed_form, cone_bracket, cone_eval, cone_validate, family_axioms_check,
    ClosedFormComparison, ConeFunction, ConeKind,
};
pub use convexity::{
    check_hconvex_fn, check_homogeneous, check_hquasiconvex_fn, subdiff_contains,
    subdiff_properties, ConvexityWitness, FnOracle,
};
pub use error::{Error, Result};
pub use heis::{
    cone_contains, dilate, exp_h, group_inv, group_mul, horizontal_point, horizontal_reach,
    koranyi, norm, proj_pair, HVec, HorizontalLine, NormKind, Point3, Tolerances, IDENTITY,
};
pub use sets::{
    boundary_sample, check_axioms, check_hconvex_set, gallery, radial_to_oracle, AxiomReport, BBox,
    ParamMap, ParamValue, RadialProfile, SetDescriptor, SetOracle,
};
