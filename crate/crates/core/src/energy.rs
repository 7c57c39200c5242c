//! Multilinear energy form shared by exact enumeration and annealing.
//!
//! On {-1,+1}^N every Hamiltonian in this crate reduces (using σ_i² = 1) to
//! H(σ) = Σ_S a_S Π_{i∈S} σ_i over subsets S of spins. With σ encoded by its
//! down-spin mask D, each monomial is a parity: Π_{i∈S} σ_i = (-1)^{|S∩D|}.
//! Single-spin flips then update H through the terms containing that spin,
//! which is what makes Gray-code enumeration and annealing sweeps cheap.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::spin::SpinConfig;

/// Anything that can score a configuration.
pub trait Energy {
    fn num_spins(&self) -> usize;
    fn eval(&self, sigma: &SpinConfig) -> Result<f64>;
}

#[derive(Debug, Clone)]
pub struct MultilinearEnergy {
    n: usize,
    /// (subset mask, coefficient), sorted by mask; mask 0 is the constant.
    terms: Vec<(u64, f64)>,
    /// Indices into `terms` per spin.
    per_spin: Vec<Vec<u32>>,
}

impl MultilinearEnergy {
    pub fn from_term_map(n: usize, map: HashMap<u64, f64>) -> Result<Self> {
        if n > 64 {
            return Err(Error::capacity(format!(
                "multilinear form limited to N ≤ 64, got {n}"
            )));
        }
        let mut terms: Vec<(u64, f64)> = map.into_iter().filter(|&(_, c)| c != 0.0).collect();
        terms.sort_by_key(|&(mask, _)| mask);
        let mut per_spin = vec![Vec::new(); n];
        for (idx, &(mask, _)) in terms.iter().enumerate() {
            let mut m = mask;
            while m != 0 {
                let bit = m.trailing_zeros() as usize;
                per_spin[bit].push(idx as u32);
                m &= m - 1;
            }
        }
        Ok(MultilinearEnergy { n, terms, per_spin })
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[(u64, f64)] {
        &self.terms
    }

    /// H for the configuration with down-spin mask `neg`.
    pub fn eval_mask(&self, neg: u64) -> f64 {
        let mut total = 0.0;
        for &(mask, coeff) in &self.terms {
            if (mask & neg).count_ones() % 2 == 0 {
                total += coeff;
            } else {
                total -= coeff;
            }
        }
        total
    }

    /// H(σ with spin flipped) - H(σ).
    #[inline]
    pub fn flip_delta(&self, neg: u64, spin: usize) -> f64 {
        let mut delta = 0.0;
        for &idx in &self.per_spin[spin] {
            let (mask, coeff) = self.terms[idx as usize];
            if (mask & neg).count_ones() % 2 == 0 {
                delta -= 2.0 * coeff;
            } else {
                delta += 2.0 * coeff;
            }
        }
        delta
    }

    /// Largest possible |H| change across any single flip; used for slack
    /// saturation checks.
    pub fn flip_scale(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                2.0 * self.per_spin[i]
                    .iter()
                    .map(|&idx| self.terms[idx as usize].1.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

impl Energy for MultilinearEnergy {
    fn num_spins(&self) -> usize {
        self.n
    }

    fn eval(&self, sigma: &SpinConfig) -> Result<f64> {
        if sigma.len() != self.n {
            return Err(Error::domain(format!(
                "configuration length {} ≠ {}",
                sigma.len(),
                self.n
            )));
        }
        Ok(self.eval_mask(sigma.neg_mask()?))
    }
}

/// Accumulates one clause/monomial at a time, reducing repeated indices.
#[derive(Debug, Default)]
pub struct MultilinearBuilder {
    map: HashMap<u64, f64>,
}

impl MultilinearBuilder {
    pub fn new() -> Self {
        MultilinearBuilder::default()
    }

    /// Add coeff · Π_j σ_{indices[j]} (0-based indices, repeats collapse).
    pub fn add_monomial(&mut self, indices: &[usize], coeff: f64) {
        let mut mask = 0u64;
        for &i in indices {
            mask ^= 1u64 << i;
        }
        *self.map.entry(mask).or_insert(0.0) += coeff;
    }

    /// Add coeff · Π_j (1 + J_j σ_{indices[j]}) expanded multilinearly.
    pub fn add_sat_product(&mut self, indices: &[usize], signs: &[i8], coeff: f64) {
        let k = indices.len();
        let subsets = 1u32 << k;
        for sub in 0..subsets {
            let mut c = coeff;
            let mut mask = 0u64;
            for j in 0..k {
                if sub >> j & 1 == 1 {
                    c *= signs[j] as f64;
                    // Repeated indices collapse because the mask is XORed.
                    mask ^= 1u64 << indices[j];
                }
            }
            *self.map.entry(mask).or_insert(0.0) += c;
        }
    }

    pub fn build(self, n: usize) -> Result<MultilinearEnergy> {
        MultilinearEnergy::from_term_map(n, self.map)
    }
}

impl crate::diluted::DilutedInstance {
    /// Collapse the clause list to a multilinear form (requires N ≤ 64).
    pub fn to_multilinear(&self) -> Result<MultilinearEnergy> {
        let mut b = MultilinearBuilder::new();
        let mut idx = Vec::with_capacity(self.k as usize);
        for clause in &self.clauses {
            idx.clear();
            idx.extend(clause.indices.iter().map(|&i| i as usize - 1));
            match self.model {
                crate::diluted::ClauseModel::Antiferro => b.add_monomial(&idx, -1.0),
                crate::diluted::ClauseModel::KSpin => {
                    b.add_monomial(&idx, clause.signs[0] as f64)
                }
                crate::diluted::ClauseModel::Ksat => {
                    let scale = -1.0 / (1u64 << self.k) as f64;
                    b.add_sat_product(&idx, &clause.signs, scale);
                }
            }
        }
        b.build(self.n)
    }
}
