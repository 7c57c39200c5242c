//! Spin configurations on {-1,+1}^N.
//!
//! Spins are stored bit-packed: bit i set means σ_i = -1. This makes inner
//! products popcount computations and keeps enumeration states cheap.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinConfig {
    n: usize,
    /// Bit i set ⇔ σ_i = -1.
    neg: Vec<u64>,
}

impl SpinConfig {
    /// All-(+1) configuration.
    pub fn all_plus(n: usize) -> Self {
        SpinConfig {
            n,
            neg: vec![0; n.div_ceil(64)],
        }
    }

    /// Build from explicit ±1 signs.
    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        let mut cfg = SpinConfig::all_plus(signs.len());
        for (i, &s) in signs.iter().enumerate() {
            match s {
                1 => {}
                -1 => cfg.neg[i / 64] |= 1u64 << (i % 64),
                other => {
                    return Err(Error::domain(format!(
                        "spin {i} has value {other}, expected ±1"
                    )))
                }
            }
        }
        Ok(cfg)
    }

    /// Build a small configuration from a packed down-spin mask.
    pub fn from_neg_mask(n: usize, mask: u64) -> Result<Self> {
        if n > 64 {
            return Err(Error::capacity(format!("n = {n} exceeds 64-bit mask")));
        }
        if n < 64 && mask >> n != 0 {
            return Err(Error::domain("mask has bits beyond n".to_string()));
        }
        Ok(SpinConfig { n, neg: vec![mask] })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// σ_i as ±1. `i` is 0-based.
    #[inline]
    pub fn spin(&self, i: usize) -> i8 {
        debug_assert!(i < self.n);
        if self.neg[i / 64] >> (i % 64) & 1 == 1 {
            -1
        } else {
            1
        }
    }

    pub fn set_spin(&mut self, i: usize, s: i8) {
        debug_assert!(i < self.n && (s == 1 || s == -1));
        let bit = 1u64 << (i % 64);
        if s == -1 {
            self.neg[i / 64] |= bit;
        } else {
            self.neg[i / 64] &= !bit;
        }
    }

    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.n);
        self.neg[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn to_signs(&self) -> Vec<i8> {
        (0..self.n).map(|i| self.spin(i)).collect()
    }

    /// Down-spin mask for n ≤ 64.
    pub fn neg_mask(&self) -> Result<u64> {
        if self.n > 64 {
            return Err(Error::capacity(format!("n = {} exceeds 64-bit mask", self.n)));
        }
        Ok(self.neg.first().copied().unwrap_or(0))
    }

    /// Number of down spins.
    pub fn count_minus(&self) -> usize {
        self.neg.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Σ_i σ_i as an integer.
    pub fn magnetization_sum(&self) -> i64 {
        self.n as i64 - 2 * self.count_minus() as i64
    }

    /// Σ_i σ_i^1 σ_i^2 as an integer.
    pub fn dot(&self, other: &SpinConfig) -> Result<i64> {
        if self.n != other.n {
            return Err(Error::domain(format!(
                "length mismatch: {} vs {}",
                self.n, other.n
            )));
        }
        let mut disagree = 0usize;
        for (a, b) in self.neg.iter().zip(&other.neg) {
            disagree += (a ^ b).count_ones() as usize;
        }
        Ok(self.n as i64 - 2 * disagree as i64)
    }

    /// Global spin flip σ → -σ.
    pub fn flipped(&self) -> SpinConfig {
        let mut neg: Vec<u64> = self.neg.iter().map(|w| !w).collect();
        let rem = self.n % 64;
        if rem != 0 {
            if let Some(last) = neg.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
        SpinConfig { n: self.n, neg }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pack_round_trip() {
        let signs = [1i8, -1, -1, 1, -1];
        let cfg = SpinConfig::from_signs(&signs).unwrap();
        assert_eq!(cfg.to_signs(), signs);
        assert_eq!(cfg.count_minus(), 3);
        assert_eq!(cfg.magnetization_sum(), -1);
    }

    #[test]
    fn rejects_non_unit_spins() {
        assert!(SpinConfig::from_signs(&[1, 0, -1]).is_err());
    }

    #[test]
    fn dot_and_flip() {
        let a = SpinConfig::from_signs(&[1, 1, -1, -1]).unwrap();
        let b = SpinConfig::from_signs(&[1, -1, 1, -1]).unwrap();
        assert_eq!(a.dot(&b).unwrap(), 0);
        assert_eq!(a.dot(&a).unwrap(), 4);
        assert_eq!(a.dot(&a.flipped()).unwrap(), -4);
    }

    #[test]
    fn length_mismatch_is_domain_error() {
        let a = SpinConfig::all_plus(3);
        let b = SpinConfig::all_plus(4);
        assert!(a.dot(&b).is_err());
    }
}
