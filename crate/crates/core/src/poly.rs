//! Dense univariate polynomials with f64 coefficients.
//!
//! Mixing functions and their correlated companions are polynomials with
//! nonnegative coefficients, so derivative and antiderivative manipulation
//! stays exact up to floating point rounding.

#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    /// coeffs[p] multiplies s^p.
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    /// Polynomial Σ_{p≥1} c_p s^p from the coefficient list (c_1, c_2, ...).
    pub fn from_power_coeffs(c: &[f64]) -> Self {
        let mut coeffs = vec![0.0];
        coeffs.extend_from_slice(c);
        Poly::new(coeffs)
    }

    pub fn zero() -> Self {
        Poly { coeffs: vec![] }
    }

    fn trim(&mut self) {
        while matches!(self.coeffs.last(), Some(&c) if c == 0.0) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeff(&self, p: usize) -> f64 {
        self.coeffs.get(p).copied().unwrap_or(0.0)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Horner evaluation.
    pub fn eval(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        Poly::new(
            self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(i, &c)| (i as f64 + 1.0) * c)
                .collect(),
        )
    }

    pub fn derivative_n(&self, order: u32) -> Poly {
        let mut p = self.clone();
        for _ in 0..order {
            p = p.derivative();
        }
        p
    }

    /// Antiderivative with zero constant term.
    pub fn antiderivative(&self) -> Poly {
        let mut coeffs = vec![0.0];
        coeffs.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(i, &c)| c / (i as f64 + 1.0)),
        );
        Poly::new(coeffs)
    }

    /// s·p(s).
    pub fn times_x(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = vec![0.0];
        coeffs.extend_from_slice(&self.coeffs);
        Poly::new(coeffs)
    }

    /// p(t·s) as a polynomial in s.
    pub fn scale_argument(&self, t: f64) -> Poly {
        let mut pow = 1.0;
        Poly::new(
            self.coeffs
                .iter()
                .map(|&c| {
                    let out = c * pow;
                    pow *= t;
                    out
                })
                .collect(),
        )
    }

    pub fn scaled(&self, a: f64) -> Poly {
        Poly::new(self.coeffs.iter().map(|&c| a * c).collect())
    }

    /// Coefficients of Σ C(k,p) s^p for p = 1..k, i.e. (1+s)^k - 1.
    pub fn binomial_minus_one(k: u32) -> Poly {
        let mut coeffs = vec![0.0; k as usize + 1];
        let mut binom = 1.0f64;
        for p in 1..=k as usize {
            binom = binom * (k as usize - p + 1) as f64 / p as f64;
            coeffs[p] = binom;
        }
        Poly::new(coeffs)
    }

    /// Monomial s^k.
    pub fn monomial(k: u32) -> Poly {
        let mut coeffs = vec![0.0; k as usize + 1];
        coeffs[k as usize] = 1.0;
        Poly::new(coeffs)
    }
}
