//! Fully connected mixed p-spin Hamiltonians and correlated copies.
//!
//! For a mixing ξ(s) = Σ_p c_p s^p the model is
//! H(σ) = Σ_p √(c_p / N^{p-1}) Σ_{i_1..i_p} g_{i_1..i_p} σ_{i_1}⋯σ_{i_p}
//! with i.i.d. standard Gaussian coefficients, so that
//! E H(σ¹)H(σ²) = N ξ(R_{1,2}) exactly. Correlated copies share each layer
//! with per-layer correlation ρ_p (t for the scaled covariance, t^p for the
//! argument covariance), realized coefficient-wise as
//! g² = ρ_p g¹ + √(1-ρ_p²) ḡ.
//!
//! Coefficient tensors are stored densely; the intended regime is desk scale
//! (N ≤ 16, K ≤ 4).

use rand::Rng;
use rand_distr::StandardNormal;

use crate::energy::{Energy, MultilinearBuilder, MultilinearEnergy};
use crate::error::{Error, Result};
use crate::mixing::{CorrKind, MixingPair};
use crate::rng::stream;
use crate::spin::SpinConfig;

#[derive(Debug, Clone)]
pub struct Layer {
    pub p: usize,
    /// √(c_p / N^{p-1}).
    pub weight: f64,
    /// Dense row-major tensor of N^p standard Gaussian coefficients.
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GaussianModel {
    pub n: usize,
    pub layers: Vec<Layer>,
}

#[derive(Debug, Clone)]
pub struct CorrelatedGaussianPair {
    pub first: GaussianModel,
    pub second: GaussianModel,
    /// Per-layer correlation, aligned with `first.layers`.
    pub rho: Vec<f64>,
}

const MAX_DENSE: usize = 1 << 24;

fn layer_plan(m: &MixingPair, n: usize) -> Result<Vec<(usize, f64)>> {
    let coeffs = m.xi_poly().coeffs();
    let mut plan = Vec::new();
    for (p, &c) in coeffs.iter().enumerate().skip(1) {
        if c == 0.0 {
            continue;
        }
        let size = n.checked_pow(p as u32).filter(|&s| s <= MAX_DENSE);
        if size.is_none() {
            return Err(Error::capacity(format!(
                "dense layer N^p = {n}^{p} exceeds the desk-scale budget"
            )));
        }
        plan.push((p, (c / n.pow(p as u32 - 1) as f64).sqrt()));
    }
    Ok(plan)
}

/// Sample a model with i.i.d. standard Gaussian coefficients.
pub fn sample_gaussian(m: &MixingPair, n: usize, seed: u64) -> Result<GaussianModel> {
    if n == 0 {
        return Err(Error::domain("N ≥ 1 required"));
    }
    let mut rng = stream(seed, "gaussian/model");
    let layers = layer_plan(m, n)?
        .into_iter()
        .map(|(p, weight)| Layer {
            p,
            weight,
            coeffs: (0..n.pow(p as u32))
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect(),
        })
        .collect();
    Ok(GaussianModel { n, layers })
}

/// Couple two copies with the prescribed per-layer correlations.
pub fn couple_gaussian(m: &MixingPair, n: usize, seed: u64) -> Result<CorrelatedGaussianPair> {
    let rho = per_layer_rho(m)?;
    couple_gaussian_with_rho(m, n, &rho, seed)
}

/// ρ_p for each active layer: t (scaled), t^p (argument), or the coefficient
/// ratio for custom pairs.
pub fn per_layer_rho(m: &MixingPair) -> Result<Vec<f64>> {
    let xi = m.xi_poly().coeffs();
    let xi0 = m.xi0_poly();
    let mut rho = Vec::new();
    for (p, &c) in xi.iter().enumerate().skip(1) {
        if c == 0.0 {
            if xi0.coeff(p) != 0.0 {
                return Err(Error::domain(format!(
                    "ξ0 has a degree-{p} term absent from ξ; no coefficient coupling exists"
                )));
            }
            continue;
        }
        let r = match m.corr_kind() {
            Some(CorrKind::Scaled) => m.t().unwrap(),
            Some(CorrKind::Argument) => m.t().unwrap().powi(p as i32),
            None => {
                let r = xi0.coeff(p) / c;
                if !(-1.0..=1.0).contains(&r) {
                    return Err(Error::domain(format!(
                        "custom ξ0 needs |c0_p/c_p| ≤ 1, got {r} at p = {p}"
                    )));
                }
                r
            }
        };
        rho.push(r);
    }
    Ok(rho)
}

/// Coupling with explicit per-layer correlations. The correct values come
/// from [`per_layer_rho`]; tests inject wrong ones to exercise detectors.
pub fn couple_gaussian_with_rho(
    m: &MixingPair,
    n: usize,
    rho: &[f64],
    seed: u64,
) -> Result<CorrelatedGaussianPair> {
    let first = sample_gaussian(m, n, seed)?;
    if rho.len() != first.layers.len() {
        return Err(Error::domain(format!(
            "need {} per-layer correlations, got {}",
            first.layers.len(),
            rho.len()
        )));
    }
    let mut rng = stream(seed, "gaussian/couple-fresh");
    let layers = first
        .layers
        .iter()
        .zip(rho)
        .map(|(layer, &r)| Layer {
            p: layer.p,
            weight: layer.weight,
            coeffs: layer
                .coeffs
                .iter()
                .map(|&g| {
                    r * g + (1.0 - r * r).max(0.0).sqrt() * rng.sample::<f64, _>(StandardNormal)
                })
                .collect(),
        })
        .collect();
    Ok(CorrelatedGaussianPair {
        first,
        second: GaussianModel { n, layers },
        rho: rho.to_vec(),
    })
}

/// H(σ), computed by contracting one tensor axis at a time.
pub fn gaussian_energy(model: &GaussianModel, sigma: &SpinConfig) -> Result<f64> {
    if sigma.len() != model.n {
        return Err(Error::domain(format!(
            "configuration length {} ≠ N = {}",
            sigma.len(),
            model.n
        )));
    }
    let n = model.n;
    let signs: Vec<f64> = (0..n).map(|i| sigma.spin(i) as f64).collect();
    let mut total = 0.0;
    let mut buf: Vec<f64> = Vec::new();
    let mut next: Vec<f64> = Vec::new();
    for layer in &model.layers {
        buf.clear();
        buf.extend_from_slice(&layer.coeffs);
        let mut len = buf.len();
        for _ in 0..layer.p {
            len /= n;
            next.clear();
            next.resize(len, 0.0);
            for (block, slot) in next.iter_mut().enumerate() {
                let base = block * n;
                let mut acc = 0.0;
                for (i, &s) in signs.iter().enumerate() {
                    acc += buf[base + i] * s;
                }
                *slot = acc;
            }
            std::mem::swap(&mut buf, &mut next);
        }
        total += layer.weight * buf[0];
    }
    Ok(total)
}

impl Energy for GaussianModel {
    fn num_spins(&self) -> usize {
        self.n
    }

    fn eval(&self, sigma: &SpinConfig) -> Result<f64> {
        gaussian_energy(self, sigma)
    }
}

impl GaussianModel {
    /// Fold to the multilinear subset form (σ_i² = 1 collapses repeats).
    pub fn to_multilinear(&self) -> Result<MultilinearEnergy> {
        let mut b = MultilinearBuilder::new();
        let n = self.n;
        let mut idx = Vec::new();
        for layer in &self.layers {
            for (flat, &g) in layer.coeffs.iter().enumerate() {
                idx.clear();
                let mut rem = flat;
                for _ in 0..layer.p {
                    idx.push(rem % n);
                    rem /= n;
                }
                b.add_monomial(&idx, layer.weight * g);
            }
        }
        b.build(n)
    }
}
