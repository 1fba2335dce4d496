//! The 24-element single-qubit Clifford group.

use num_complex::Complex64;

use crate::circuit::{u3, u3_angles};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

const TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Clifford {
    pub matrix: CMatrix,
    /// `(theta, phi, lambda)` with `matrix = e^{ia} U3(theta, phi, lambda)`.
    pub u3: (f64, f64, f64),
}

/// Elements, multiplication table and inverses. `compose(i, j)` is the
/// element equal to `C_i C_j` (apply `C_j` first).
#[derive(Debug, Clone)]
pub struct CliffordTable {
    elements: Vec<Clifford>,
    products: Vec<Vec<usize>>,
    inverses: Vec<usize>,
}

/// Equal up to global phase.
fn same_up_to_phase(a: &CMatrix, b: &CMatrix) -> bool {
    // <a, b> has modulus 2 exactly when b = e^{ia} a for 2x2 unitaries
    let mut inner = Complex64::new(0.0, 0.0);
    for r in 0..2 {
        for c in 0..2 {
            inner += a[(r, c)].conj() * b[(r, c)];
        }
    }
    (inner.norm() - 2.0).abs() < TOL
}

impl CliffordTable {
    pub const SIZE: usize = 24;

    /// Generate the group from H and S by closure and verify it.
    pub fn new() -> Result<Self> {
        let s2 = std::f64::consts::FRAC_1_SQRT_2;
        let h = CMatrix::from_rows([
            [Complex64::new(s2, 0.0), Complex64::new(s2, 0.0)],
            [Complex64::new(s2, 0.0), Complex64::new(-s2, 0.0)],
        ]);
        let s = CMatrix::from_rows([
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0)],
        ]);
        let mut mats = vec![CMatrix::identity(2)];
        let mut frontier = 0;
        while frontier < mats.len() {
            let m = mats[frontier].clone();
            for g in [&h, &s] {
                let next = g * &m;
                if !mats.iter().any(|x| same_up_to_phase(x, &next)) {
                    mats.push(next);
                }
            }
            frontier += 1;
            if mats.len() > Self::SIZE {
                return Err(Error::InvalidArgument("Clifford closure produced too many elements".into()));
            }
        }
        let elements: Vec<Clifford> = mats
            .into_iter()
            .map(|matrix| {
                let u3 = u3_angles(&matrix);
                Clifford { matrix, u3 }
            })
            .collect();
        let mut table = CliffordTable { elements, products: Vec::new(), inverses: Vec::new() };
        table.products = (0..table.len())
            .map(|i| (0..table.len()).map(|j| table.find(&(&table.elements[i].matrix * &table.elements[j].matrix))).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        table.inverses = (0..table.len())
            .map(|i| {
                table.products[i]
                    .iter()
                    .position(|&k| k == 0)
                    .ok_or_else(|| Error::InvalidArgument(format!("Clifford {i} has no inverse")))
            })
            .collect::<Result<_>>()?;
        table.verify()?;
        Ok(table)
    }

    fn find(&self, m: &CMatrix) -> Result<usize> {
        self.elements
            .iter()
            .position(|c| same_up_to_phase(&c.matrix, m))
            .ok_or_else(|| Error::InvalidArgument("Clifford table is not closed".into()))
    }

    /// Exhaustive consistency check: size, closure, identity, inverses and
    /// the U3 angles of every element.
    pub fn verify(&self) -> Result<()> {
        let fail = |what: String| Err(Error::InvalidArgument(format!("Clifford table inconsistent: {what}")));
        if self.len() != Self::SIZE {
            return fail(format!("{} elements", self.len()));
        }
        if !same_up_to_phase(&self.elements[0].matrix, &CMatrix::identity(2)) {
            return fail("element 0 is not the identity".into());
        }
        for i in 0..self.len() {
            for j in 0..self.len() {
                let prod = &self.elements[i].matrix * &self.elements[j].matrix;
                if !same_up_to_phase(&prod, &self.elements[self.products[i][j]].matrix) {
                    return fail(format!("product {i}*{j}"));
                }
            }
            if self.products[i][self.inverses[i]] != 0 || self.products[self.inverses[i]][i] != 0 {
                return fail(format!("inverse of {i}"));
            }
            let (t, p, l) = self.elements[i].u3;
            if !same_up_to_phase(&u3(t, p, l), &self.elements[i].matrix) {
                return fail(format!("U3 angles of {i}"));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn get(&self, i: usize) -> &Clifford {
        &self.elements[i]
    }

    pub fn compose(&self, i: usize, j: usize) -> usize {
        self.products[i][j]
    }

    pub fn inverse(&self, i: usize) -> usize {
        self.inverses[i]
    }

    /// Index of the product of `sequence` applied in order.
    pub fn net(&self, sequence: &[usize]) -> usize {
        sequence.iter().fold(0, |acc, &c| self.compose(c, acc))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_is_a_group() {
        let t = CliffordTable::new().unwrap();
        assert_eq!(t.len(), 24);
        // associativity over all triples
        for a in 0..24 {
            for b in 0..24 {
                for c in 0..24 {
                    assert_eq!(t.compose(t.compose(a, b), c), t.compose(a, t.compose(b, c)));
                }
            }
        }
    }

    #[test]
    fn sequence_with_inverse_is_identity() {
        let t = CliffordTable::new().unwrap();
        let seq = [3, 17, 5, 22, 9];
        let mut full = seq.to_vec();
        full.push(t.inverse(t.net(&seq)));
        assert_eq!(t.net(&full), 0);
        let m = full.iter().fold(CMatrix::identity(2), |acc, &c| &t.get(c).matrix * &acc);
        assert!(same_up_to_phase(&m, &CMatrix::identity(2)));
    }
}
