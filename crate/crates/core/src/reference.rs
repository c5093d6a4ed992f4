//! Generator lists of named subgroups, row-major, at the stated modulus.

use crate::residue::ResidueMatrix;
use crate::subgroup::OpenSubgroup;

pub struct NamedGenerators {
    pub name: &'static str,
    pub modulus: u32,
    pub generators: &'static [[i64; 4]],
}

impl NamedGenerators {
    pub fn matrices(&self) -> Vec<ResidueMatrix> {
        self.generators
            .iter()
            .map(|&e| ResidueMatrix::new(e, self.modulus).expect("valid reference data"))
            .collect()
    }

    /// The open subgroup generated by the matrices together with Γ(modulus).
    pub fn subgroup(&self) -> OpenSubgroup {
        OpenSubgroup::from_generators_at(&self.matrices(), self.modulus).expect("valid reference data")
    }
}

pub const H57: NamedGenerators = NamedGenerators {
    name: "H57",
    modulus: 16,
    generators: &[[11, 4, 8, 3], [15, 11, 0, 1], [7, 2, 2, 1], [15, 15, 1, 0]],
};

/// Auxiliary index-4 subgroup of H57 used for the model computation.
pub const K57: NamedGenerators = NamedGenerators {
    name: "K",
    modulus: 16,
    generators: &[[13, 2, 14, 11], [1, 1, 15, 0], [1, 0, 7, 7]],
};

pub const H57A: NamedGenerators = NamedGenerators {
    name: "H57a",
    modulus: 32,
    generators: &[[10, 21, 3, 13], [15, 1, 27, 2], [7, 7, 0, 1]],
};

pub const H155: NamedGenerators = NamedGenerators {
    name: "H155",
    modulus: 16,
    generators: &[[1, 3, 0, 3], [1, 0, 2, 3], [1, 3, 12, 3], [1, 1, 12, 7]],
};

/// A row of the exceptional j-invariant table.
pub struct ExceptionalRow {
    pub j_invariant: &'static str,
    pub gens: NamedGenerators,
}

pub const EXCEPTIONAL: [ExceptionalRow; 8] = [
    ExceptionalRow {
        j_invariant: "2^11",
        gens: NamedGenerators { name: "row1", modulus: 16, generators: &[[7, 14, 0, 1], [1, 5, 6, 11], [3, 0, 0, 7]] },
    },
    ExceptionalRow {
        j_invariant: "2^4*17^3",
        gens: NamedGenerators { name: "row2", modulus: 16, generators: &[[7, 0, 0, 3], [3, 5, 14, 7], [7, 7, 2, 1]] },
    },
    ExceptionalRow {
        j_invariant: "4097^3/2^4",
        gens: NamedGenerators { name: "row3", modulus: 16, generators: &[[3, 5, 6, 3], [3, 5, 14, 7], [7, 7, 2, 1]] },
    },
    ExceptionalRow {
        j_invariant: "257^3/2^8",
        gens: NamedGenerators { name: "row4", modulus: 16, generators: &[[7, 14, 0, 1], [5, 0, 0, 1], [1, 5, 6, 3]] },
    },
    ExceptionalRow {
        j_invariant: "-857985^3/62^8",
        gens: NamedGenerators {
            name: "row5",
            modulus: 32,
            generators: &[[25, 18, 2, 7], [25, 25, 2, 7], [1, 0, 8, 1], [25, 11, 2, 7]],
        },
    },
    ExceptionalRow {
        j_invariant: "919425^3/496^4",
        gens: NamedGenerators {
            name: "row6",
            modulus: 32,
            generators: &[[29, 0, 4, 1], [31, 27, 0, 1], [1, 4, 0, 1], [31, 31, 2, 1]],
        },
    },
    ExceptionalRow {
        j_invariant: "-3*18249920^3/17^16",
        gens: NamedGenerators { name: "row7", modulus: 16, generators: &[[4, 7, 15, 12], [7, 14, 7, 9], [2, 1, 11, 9]] },
    },
    ExceptionalRow {
        j_invariant: "-7*1723187806080^3/79^16",
        gens: NamedGenerators { name: "row8", modulus: 16, generators: &[[4, 7, 15, 12], [7, 14, 7, 9], [2, 1, 11, 9]] },
    },
];

/// Curve of the second table row, used for the resolvent worked example.
pub const ROW2_CURVE: [i64; 5] = [0, 1, 0, -28, 48];

/// Genus histogram of the arithmetically maximal subgroups.
pub const GENUS_HISTOGRAM: [(u32, usize); 6] = [(0, 185), (1, 223), (2, 97), (3, 164), (5, 44), (7, 14)];

pub const X155_MODEL: &str = "y^2 = x^3 - 2x";
pub const X155_J_MAP: &str = "j(x,y) = 256(x^4 - 1)^3 / x^4";

/// Normalizer of the nonsplit Cartan mod 2^k: multiplication by units
/// a + bφ of Z2[φ], φ² = φ + 1, in the basis (1, φ), written [[a,b],[b,a+b]],
/// together with the Galois involution φ ↦ 1 − φ.
pub fn nonsplit_cartan_normalizer(k: u32) -> OpenSubgroup {
    let n = 1i64 << k;
    let mut gens = vec![ResidueMatrix::new([1, 0, 1, -1], n as u32).unwrap()];
    for a in 0..n {
        for b in 0..n {
            let m = ResidueMatrix::new([a, b, b, a + b], n as u32).unwrap();
            if m.is_unit() {
                gens.push(m);
            }
        }
    }
    OpenSubgroup::from_generators_at(&gens, n as u32).unwrap()
}

/// Same construction over the order Z2[√5] ([[a,b],[5b,a]] and
/// [[1,0],[0,-1]]). This order is not maximal, so the group is smaller than
/// the nonsplit Cartan normalizer.
pub fn sqrt5_order_normalizer(k: u32) -> OpenSubgroup {
    let n = 1i64 << k;
    let mut gens = vec![ResidueMatrix::new([1, 0, 0, -1], n as u32).unwrap()];
    for a in 0..n {
        for b in 0..n {
            let m = ResidueMatrix::new([a, b, 5 * b, a], n as u32).unwrap();
            if m.is_unit() {
                gens.push(m);
            }
        }
    }
    OpenSubgroup::from_generators_at(&gens, n as u32).unwrap()
}
