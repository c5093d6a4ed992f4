//! Torsion points over C, resolvent polynomials and Frobenius classes for
//! certifying the mod-2^n image of an elliptic curve over Q.
pub mod curve;
pub mod error;
pub mod fp;
pub mod numerics;
pub mod resolvent;
pub mod zpoly;

pub use curve::{parse_curve, CurveModel};
pub use error::{Error, Result};
pub use numerics::{period_lattice, torsion_table, Periods, TorsionTable};
pub use resolvent::{
    build_f, build_resolvents, certify_image, frobenius_class, identify_conjugate, FrobeniusReport, ProverConfig,
    ResolventSet, Verdict,
};
pub use zpoly::{division_polynomial, ZPoly};
