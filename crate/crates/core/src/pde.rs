//! Shared machinery for the PDE solvers: Gauss-Hermite quadrature, the
//! uniform x-grid with cubic interpolation, and stabilized exponential-moment
//! combines.
//!
//! The solution of both PDEs is Lipschitz-1 with |x|-like tails, so off-grid
//! queries extend linearly with slope ±1 per coordinate.

use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Gauss-Hermite rule: ∫ e^{-u²} f(u) du ≈ Σ w_i f(x_i).
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Nodes by Newton iteration on the orthonormal Hermite recurrence
    /// (asymptotic initial guesses, largest root first).
    pub fn new(order: usize) -> Result<Self> {
        if order < 2 || order > 512 {
            return Err(Error::domain(format!("GH order {order} out of range")));
        }
        let n = order;
        let mut nodes = vec![0.0f64; n];
        let mut weights = vec![0.0f64; n];
        let mut z = 0.0f64;
        for i in 0..n.div_ceil(2) {
            z = match i {
                0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * (n as f64).powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            // Newton on the orthonormal polynomial h_n.
            let mut pp = 0.0;
            for _ in 0..100 {
                let (p, dp) = Self::hermite_orthonormal(n, z);
                pp = dp;
                let dz = p / dp;
                z -= dz;
                if dz.abs() < 1e-15 * (1.0 + z.abs()) {
                    break;
                }
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            let w = 2.0 / (pp * pp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            let mid = n / 2;
            nodes[mid] = 0.0;
            let (_, dp) = Self::hermite_orthonormal(n, 0.0);
            weights[mid] = 2.0 / (dp * dp);
        }
        Ok(GaussHermite { nodes, weights })
    }

    /// (h_n(x), h_n'(x)) for the orthonormal Hermite polynomials w.r.t.
    /// e^{-x²} dx.
    fn hermite_orthonormal(n: usize, x: f64) -> (f64, f64) {
        let pi_quarter = std::f64::consts::PI.powf(-0.25);
        let mut p_prev = 0.0f64;
        let mut p = pi_quarter;
        for k in 0..n {
            let kf = k as f64;
            let p_next = x * (2.0 / (kf + 1.0)).sqrt() * p - (kf / (kf + 1.0)).sqrt() * p_prev;
            p_prev = p;
            p = p_next;
        }
        let dp = (2.0 * n as f64).sqrt() * p_prev;
        (p, dp)
    }
}

/// Uniform symmetric grid on [-X, X].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XGrid {
    pub xmin: f64,
    pub h: f64,
    /// Number of nodes (odd, so 0 is a node).
    pub n: usize,
}

impl XGrid {
    pub fn symmetric(half_width: f64, half_points: usize) -> Self {
        let h = half_width / half_points as f64;
        XGrid {
            xmin: -half_width,
            h,
            n: 2 * half_points + 1,
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        self.xmin + i as f64 * self.h
    }

    pub fn xmax(&self) -> f64 {
        self.x(self.n - 1)
    }

    pub fn center_index(&self) -> usize {
        (self.n - 1) / 2
    }

    /// 4-point Lagrange interpolation with slope-±1 linear tails.
    pub fn interp(&self, values: &[f64], x: f64) -> f64 {
        debug_assert_eq!(values.len(), self.n);
        let xmax = self.xmax();
        if x <= self.xmin {
            return values[0] + (self.xmin - x);
        }
        if x >= xmax {
            return values[self.n - 1] + (x - xmax);
        }
        let u = (x - self.xmin) / self.h;
        let j = u.floor() as usize;
        let base = j.saturating_sub(1).min(self.n - 4);
        let t = u - base as f64;
        let f0 = values[base];
        let f1 = values[base + 1];
        let f2 = values[base + 2];
        let f3 = values[base + 3];
        let t1 = t - 1.0;
        let t2 = t - 2.0;
        let t3 = t - 3.0;
        -f0 * t1 * t2 * t3 / 6.0 + f1 * t * t2 * t3 / 2.0 - f2 * t * t1 * t3 / 2.0
            + f3 * t * t1 * t2 / 6.0
    }

    /// Central-difference node derivatives; tails pinned to ±1.
    pub fn node_gradient(&self, values: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut g = vec![0.0; n];
        for i in 1..n - 1 {
            g[i] = (values[i + 1] - values[i - 1]) / (2.0 * self.h);
        }
        g[0] = -1.0;
        g[n - 1] = 1.0;
        g
    }
}

/// log Φ_N(z) for the standard normal CDF, -∞ when it underflows.
pub fn ln_normal_cdf(z: f64) -> f64 {
    let e = erfc(-z / std::f64::consts::SQRT_2);
    if e > 0.0 {
        (0.5 * e).ln()
    } else {
        f64::NEG_INFINITY
    }
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// (1/m)·log Σ exp(m·values + ln_weights), stabilized; plain weighted mean
/// when m ≈ 0.
pub fn exp_moment_combine(m: f64, values: &[f64], ln_weights: &[f64], weights: &[f64]) -> f64 {
    if m < 1e-10 {
        let mut acc = 0.0;
        for (v, w) in values.iter().zip(weights) {
            acc += v * w;
        }
        return acc;
    }
    let mut top = f64::NEG_INFINITY;
    for (v, lw) in values.iter().zip(ln_weights) {
        let t = m * v + lw;
        if t > top {
            top = t;
        }
    }
    let mut acc = 0.0;
    for (v, lw) in values.iter().zip(ln_weights) {
        acc += (m * v + lw - top).exp();
    }
    (top + acc.ln()) / m
}

/// Closed-form boundary step: Φ(x) from the |y| boundary through a Gaussian
/// of variance v, i.e. (1/m) log E e^{m|Y|} (or E|Y| at m = 0), Y ~ N(x, v).
pub fn boundary_step(m: f64, v: f64, x: f64) -> f64 {
    if v <= 0.0 {
        return x.abs();
    }
    let sd = v.sqrt();
    if m < 1e-10 {
        return 2.0 * sd * normal_pdf(x / sd) + x * (2.0 * normal_cdf(x / sd) - 1.0);
    }
    let half = 0.5 * m * m * v;
    let plus = m * x + half + ln_normal_cdf((x + m * v) / sd);
    let minus = -m * x + half + ln_normal_cdf((m * v - x) / sd);
    let top = plus.max(minus);
    (top + ((plus - top).exp() + (minus - top).exp()).ln()) / m
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gh_order_3_known_values() {
        let gh = GaussHermite::new(3).unwrap();
        let mut pairs: Vec<(f64, f64)> = gh.nodes.iter().cloned().zip(gh.weights.clone()).collect();
        pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        assert_abs_diff_eq!(pairs[0].0, 1.224_744_871_391_589, epsilon = 1e-13);
        assert_abs_diff_eq!(pairs[1].0, 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(pairs[0].1, 0.295_408_975_150_919_35, epsilon = 1e-13);
        assert_abs_diff_eq!(pairs[1].1, 1.181_635_900_603_677_4, epsilon = 1e-13);
    }

    #[test]
    fn gh_integrates_moments() {
        for order in [16usize, 64, 128] {
            let gh = GaussHermite::new(order).unwrap();
            let total: f64 = gh.weights.iter().sum();
            assert_abs_diff_eq!(total, std::f64::consts::PI.sqrt(), epsilon = 1e-12);
            let m2: f64 = gh
                .nodes
                .iter()
                .zip(&gh.weights)
                .map(|(x, w)| w * x * x)
                .sum();
            assert_abs_diff_eq!(m2, std::f64::consts::PI.sqrt() / 2.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn interp_reproduces_cubics() {
        let grid = XGrid::symmetric(4.0, 32);
        let f = |x: f64| 0.3 * x * x * x - x + 2.0;
        let values: Vec<f64> = (0..grid.n).map(|i| f(grid.x(i))).collect();
        for &x in &[-3.7, -0.05, 0.0, 1.33, 3.9] {
            assert_abs_diff_eq!(grid.interp(&values, x), f(x), epsilon = 1e-10);
        }
    }

    #[test]
    fn interp_tails_have_unit_slope() {
        let grid = XGrid::symmetric(2.0, 8);
        let values: Vec<f64> = (0..grid.n).map(|i| grid.x(i).abs()).collect();
        assert_abs_diff_eq!(grid.interp(&values, 5.0), 5.0);
        assert_abs_diff_eq!(grid.interp(&values, -7.5), 7.5);
    }

    #[test]
    fn boundary_step_zero_m_heat_kernel() {
        // E|Z|·σ at x = 0: σ√(2/π).
        let v = 2.0;
        assert_abs_diff_eq!(
            boundary_step(0.0, v, 0.0),
            (2.0 * v / std::f64::consts::PI).sqrt(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn boundary_step_matches_quadrature() {
        // Oracle: adaptive Simpson of the Gaussian integral, split at the
        // kink of |y|.
        let cases: [(f64, f64, f64); 3] = [(0.7, 1.3, 0.4), (2.5, 0.5, -1.1), (0.0, 0.8, 2.0)];
        for (m, v, x) in cases {
            let sd = v.sqrt();
            let lo = x - 12.0 * sd;
            let hi = x + 12.0 * sd;
            let integral = crate::mixing::quad::adaptive_simpson_split(
                |y: f64| (m * y.abs()).exp() * normal_pdf((y - x) / sd) / sd,
                lo,
                hi,
                1e-12,
                &[0.0],
            )
            .unwrap();
            let expect = if m == 0.0 {
                crate::mixing::quad::adaptive_simpson_split(
                    |y: f64| y.abs() * normal_pdf((y - x) / sd) / sd,
                    lo,
                    hi,
                    1e-12,
                    &[0.0],
                )
                .unwrap()
            } else {
                integral.ln() / m
            };
            assert_abs_diff_eq!(boundary_step(m, v, x), expect, epsilon = 1e-9);
        }
    }

    #[test]
    fn boundary_step_large_x_is_linear() {
        let v = 1.0;
        let m = 1.5;
        let phi = boundary_step(m, v, 30.0);
        // e^{m x + m²v/2} dominates: Φ ≈ x + m v / 2.
        assert_abs_diff_eq!(phi, 30.0 + m * v / 2.0, epsilon = 1e-9);
    }
}
