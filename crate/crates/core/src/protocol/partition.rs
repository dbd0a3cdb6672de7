use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Three consecutive intervals `A | B | C` of an open chain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub n: usize,
    pub a_len: usize,
    pub b_len: usize,
}

impl Partition {
    /// Requires `|A| = |B|` with `floor(n/5) <= |A| <= ceil(n/4) <= |C|`.
    pub fn new(n: usize, a_len: usize, b_len: usize) -> Result<Self> {
        if a_len == 0 {
            return Err(Error::EmptyRegion("region A is empty".into()));
        }
        if b_len == 0 {
            return Err(Error::EmptyRegion("region B is empty".into()));
        }
        if a_len + b_len >= n {
            return Err(Error::EmptyRegion("region C is empty".into()));
        }
        if a_len != b_len {
            return Err(Error::Config(format!("|A| = {a_len} differs from |B| = {b_len}")));
        }
        let c_len = n - a_len - b_len;
        let lo = n / 5;
        let hi = n.div_ceil(4);
        if a_len < lo || a_len > hi || c_len < hi {
            return Err(Error::Config(format!(
                "partition {a_len}|{b_len}|{c_len} of {n} violates {lo} <= |A| <= {hi} <= |C|"
            )));
        }
        Ok(Partition { n, a_len, b_len })
    }

    /// `|A| = |B| = floor(n/4)`.
    pub fn standard(n: usize) -> Result<Self> {
        Self::new(n, n / 4, n / 4)
    }

    pub fn a(&self) -> Range<usize> {
        0..self.a_len
    }

    pub fn b(&self) -> Range<usize> {
        self.a_len..self.a_len + self.b_len
    }

    pub fn c(&self) -> Range<usize> {
        self.a_len + self.b_len..self.n
    }

    pub fn c_len(&self) -> usize {
        self.n - self.a_len - self.b_len
    }

    pub fn ab(&self) -> Range<usize> {
        0..self.a_len + self.b_len
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_partition_of_twelve() {
        let p = Partition::standard(12).unwrap();
        assert_eq!((p.a(), p.b(), p.c()), (0..3, 3..6, 6..12));
    }

    #[test]
    fn small_chain_partitions() {
        assert!(Partition::new(6, 2, 2).is_ok());
        assert!(matches!(Partition::new(4, 2, 2), Err(Error::EmptyRegion(_))));
        assert!(Partition::new(12, 3, 2).is_err());
    }
}
