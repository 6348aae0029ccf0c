use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A sorted multipole triple `1 ≤ l1 ≤ l2 ≤ l3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "[u32; 3]", into = "[u32; 3]")]
pub struct MultipoleTriple {
    l1: u32,
    l2: u32,
    l3: u32,
}

impl MultipoleTriple {
    /// Rejects unsorted or zero multipoles.
    pub fn new(l1: u32, l2: u32, l3: u32) -> Result<Self> {
        if l1 == 0 {
            return Err(Error::InvalidArgument("multipoles must be positive".into()));
        }
        if !(l1 <= l2 && l2 <= l3) {
            return Err(Error::InvalidArgument(format!(
                "triple ({l1}, {l2}, {l3}) is not sorted"
            )));
        }
        Ok(MultipoleTriple { l1, l2, l3 })
    }

    /// Sorts the multipoles first.
    pub fn sorted(a: u32, b: u32, c: u32) -> Result<Self> {
        let mut ls = [a, b, c];
        ls.sort_unstable();
        MultipoleTriple::new(ls[0], ls[1], ls[2])
    }

    pub fn l1(&self) -> u32 {
        self.l1
    }

    pub fn l2(&self) -> u32 {
        self.l2
    }

    pub fn l3(&self) -> u32 {
        self.l3
    }

    pub fn ls(&self) -> [u32; 3] {
        [self.l1, self.l2, self.l3]
    }

    pub fn sum(&self) -> u32 {
        self.l1 + self.l2 + self.l3
    }

    pub fn parity_even(&self) -> bool {
        self.sum() % 2 == 0
    }

    pub fn triangle_ok(&self) -> bool {
        self.l3 <= self.l1 + self.l2
    }

    /// Both selection rules hold, so the bispectrum can be nonzero.
    pub fn is_valid(&self) -> bool {
        self.parity_even() && self.triangle_ok()
    }
}

impl TryFrom<[u32; 3]> for MultipoleTriple {
    type Error = Error;
    fn try_from(ls: [u32; 3]) -> Result<Self> {
        MultipoleTriple::new(ls[0], ls[1], ls[2])
    }
}

impl From<MultipoleTriple> for [u32; 3] {
    fn from(t: MultipoleTriple) -> Self {
        t.ls()
    }
}

impl fmt::Display for MultipoleTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.l1, self.l2, self.l3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_and_flags() {
        assert!(MultipoleTriple::new(3, 2, 1).is_err());
        assert!(MultipoleTriple::new(0, 1, 1).is_err());
        let t = MultipoleTriple::sorted(3, 1, 2).unwrap();
        assert_eq!(t.ls(), [1, 2, 3]);
        assert!(t.is_valid());
        assert!(!MultipoleTriple::new(1, 1, 1).unwrap().parity_even());
        assert!(!MultipoleTriple::new(1, 1, 4).unwrap().triangle_ok());
    }
}
