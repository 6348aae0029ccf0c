use super::ssr::SignedSqrtRational;
use super::threej::{wigner3j, ThreeJArgs};
use crate::error::Result;
use crate::precision::Fixed;

/// Every `(l1 l2 l3; m1 m2 -m1-m2)` for a fixed triple, in exact, fixed-point
/// and `f64` form, indexed by `(m1, m2)`.
#[derive(Clone, Debug)]
pub struct ThreeJTable {
    ls: [u32; 3],
    exact: Vec<SignedSqrtRational>,
    fixed: Vec<Fixed>,
    float: Vec<f64>,
}

impl ThreeJTable {
    pub fn new(l1: u32, l2: u32, l3: u32) -> Result<Self> {
        let n1 = (2 * l1 + 1) as usize;
        let n2 = (2 * l2 + 1) as usize;
        let mut exact = Vec::with_capacity(n1 * n2);
        for m1 in -(l1 as i32)..=l1 as i32 {
            for m2 in -(l2 as i32)..=l2 as i32 {
                let m3 = -m1 - m2;
                if m3.unsigned_abs() > l3 {
                    exact.push(SignedSqrtRational::zero());
                } else {
                    exact.push(wigner3j(ThreeJArgs::new([l1, l2, l3], [m1, m2, m3]))?);
                }
            }
        }
        let fixed: Vec<Fixed> = exact.iter().map(|v| v.to_fixed()).collect();
        let float = fixed.iter().map(|v| v.to_f64()).collect();
        Ok(ThreeJTable {
            ls: [l1, l2, l3],
            exact,
            fixed,
            float,
        })
    }

    pub fn ls(&self) -> [u32; 3] {
        self.ls
    }

    fn index(&self, m1: i32, m2: i32) -> Option<usize> {
        let [l1, l2, _] = self.ls;
        if m1.unsigned_abs() > l1 || m2.unsigned_abs() > l2 {
            return None;
        }
        Some((m1 + l1 as i32) as usize * (2 * l2 + 1) as usize + (m2 + l2 as i32) as usize)
    }

    pub fn exact(&self, m1: i32, m2: i32) -> Option<&SignedSqrtRational> {
        self.index(m1, m2).map(|i| &self.exact[i])
    }

    pub fn fixed(&self, m1: i32, m2: i32) -> Option<&Fixed> {
        self.index(m1, m2).map(|i| &self.fixed[i])
    }

    /// `f64` value, zero outside the projection range.
    pub fn get(&self, m1: i32, m2: i32) -> f64 {
        self.index(m1, m2).map_or(0.0, |i| self.float[i])
    }
}
