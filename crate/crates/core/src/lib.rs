//! Group theory for open subgroups of GL2(Z2).

pub mod error;
pub mod density;
pub mod group;
pub mod invariants;
pub mod maximal;
pub mod reference;
pub mod residue;
pub mod signature;
pub mod subgroup;
pub mod tower;

pub use error::{Error, Result};

/// Version of the JSON formats (lattice, subgroup, flag file, reports).
pub const DATA_SCHEMA_VERSION: &str = "1";
pub use residue::{gl2_order, mat_inv, mat_mul, projective_line, MatRing, ProjectivePoint, ResidueMatrix};
pub use subgroup::{OpenSubgroup, SubgroupPredicates};
