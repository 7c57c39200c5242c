//! Zero-temperature Parisi PDE, the Parisi functional, and its minimization
//! over k-step order parameters.
//!
//! The PDE ∂_s Φ = -(ξ''/2)(∂_xx Φ + γ (∂_x Φ)²) with boundary Φ(1,x) = |x|
//! is propagated backward exactly on each constant-γ interval [a,b):
//! with m = γ on the interval and variance v = ξ'(b) - ξ'(a),
//!
//!   Φ(a,x) = (1/m) log E_z exp(m Φ(b, x + z√v)),   z ~ N(0,1)
//!
//! (plain expectation when m = 0). The only discretization is the x-grid and
//! the Gauss-Hermite rule; the first step from the |x| boundary is done in
//! closed form through the normal CDF. The Parisi functional is
//! P(γ) = Φ_γ(0,0) - ½∫ s ξ''(s) γ(s) ds, with the correction integral exact
//! for step functions via ∫ s ξ'' ds = s ξ'(s) - ξ(s).
//!
//! Mixtures with a p = 1 layer carry a random external field: the cavity
//! variance at overlap s is ξ'(s), which does not vanish at s = 0. The root
//! of the recursion therefore averages the s = 0 solution over a Gaussian of
//! variance ξ'(0) with plain expectation, so that γ ≡ 0 yields
//! Φ(0,0) = √(2ξ'(1)/π) for every mixing (a no-op for pure models).

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mixing::{quad, MixingPair, StepGamma};
use crate::optim::{nelder_mead, NmOptions};
use crate::pde::{boundary_step, exp_moment_combine, GaussHermite, XGrid};
use crate::poly::Poly;
use crate::rng::stream;

#[derive(Debug, Clone, Copy)]
pub struct PdeGridParams {
    /// Half-width X = mult·√(ξ'(1)).
    pub half_width_mult: f64,
    /// Nodes per half-axis; spacing h = X / this.
    pub x_points_half: usize,
    pub gh_order: usize,
}

impl Default for PdeGridParams {
    fn default() -> Self {
        PdeGridParams {
            half_width_mult: 4.0,
            x_points_half: 2048,
            gh_order: 64,
        }
    }
}

impl PdeGridParams {
    /// Cheaper settings for inner optimization loops and path simulations.
    pub fn coarse() -> Self {
        PdeGridParams {
            half_width_mult: 4.0,
            x_points_half: 512,
            gh_order: 32,
        }
    }
}

#[derive(Debug, Clone)]
struct PhiLevel {
    s: f64,
    values: Vec<f64>,
    grad: Vec<f64>,
}

/// Grid representation of Φ_γ(s,·) with value and derivative queries.
#[derive(Debug, Clone)]
pub struct PhiSolution {
    pub grid: XGrid,
    gamma: StepGamma,
    xi_prime: Poly,
    /// Levels ascending in s; the last one is the boundary s = 1.
    levels: Vec<PhiLevel>,
    gh: GaussHermite,
    params: PdeGridParams,
}

fn propagate_level(
    grid: &XGrid,
    src: &[f64],
    src_is_boundary: bool,
    m: f64,
    v: f64,
    gh: &GaussHermite,
) -> Vec<f64> {
    if v <= 1e-15 {
        return src.to_vec();
    }
    if src_is_boundary {
        return (0..grid.n)
            .map(|j| boundary_step(m, v, grid.x(j)))
            .collect();
    }
    let scale = (2.0 * v).sqrt();
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let offsets: Vec<f64> = gh.nodes.iter().map(|&z| scale * z).collect();
    let weights: Vec<f64> = gh.weights.iter().map(|&w| w / sqrt_pi).collect();
    let ln_weights: Vec<f64> = weights.iter().map(|&w| w.ln()).collect();
    let mut vals = vec![0.0; offsets.len()];
    (0..grid.n)
        .map(|j| {
            let x = grid.x(j);
            for (slot, off) in vals.iter_mut().zip(&offsets) {
                *slot = grid.interp(src, x + off);
            }
            exp_moment_combine(m, &vals, &ln_weights, &weights)
        })
        .collect()
}

/// One-point version of [`propagate_level`].
fn propagate_point(
    grid: &XGrid,
    src: &[f64],
    src_is_boundary: bool,
    m: f64,
    v: f64,
    gh: &GaussHermite,
    x: f64,
) -> f64 {
    if v <= 1e-15 {
        return grid.interp(src, x);
    }
    if src_is_boundary {
        return boundary_step(m, v, x);
    }
    let scale = (2.0 * v).sqrt();
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let vals: Vec<f64> = gh.nodes.iter().map(|&z| grid.interp(src, x + scale * z)).collect();
    let weights: Vec<f64> = gh.weights.iter().map(|&w| w / sqrt_pi).collect();
    let ln_weights: Vec<f64> = weights.iter().map(|&w| w.ln()).collect();
    exp_moment_combine(m, &vals, &ln_weights, &weights)
}

/// Solve the PDE for a step γ; levels are produced at every γ breakpoint.
pub fn solve_phi(
    mixing: &MixingPair,
    gamma: &StepGamma,
    params: &PdeGridParams,
) -> Result<PhiSolution> {
    let xi_prime = mixing.xi_poly().derivative();
    let var_total = xi_prime.eval(1.0);
    if !(var_total >= 0.0) {
        return Err(Error::numeric(format!("ξ'(1) = {var_total} must be ≥ 0")));
    }
    let half_width = params.half_width_mult * var_total.max(1e-12).sqrt();
    let grid = XGrid::symmetric(half_width, params.x_points_half);
    let gh = GaussHermite::new(params.gh_order)?;

    let boundary: Vec<f64> = (0..grid.n).map(|j| grid.x(j).abs()).collect();
    let bgrad = grid.node_gradient(&boundary);
    let mut levels = vec![PhiLevel {
        s: 1.0,
        values: boundary,
        grad: bgrad,
    }];

    for (a, b, m) in gamma.intervals().into_iter().rev() {
        let top = levels.last().unwrap();
        debug_assert!((top.s - b).abs() < 1e-12);
        let v = xi_prime.eval(b) - xi_prime.eval(a);
        let values = propagate_level(&grid, &top.values, top.s == 1.0, m, v, &gh);
        let grad = grid.node_gradient(&values);
        levels.push(PhiLevel { s: a, values, grad });
    }
    levels.reverse();

    Ok(PhiSolution {
        grid,
        gamma: gamma.clone(),
        xi_prime,
        levels,
        gh,
        params: *params,
    })
}

impl PhiSolution {
    pub fn gamma(&self) -> &StepGamma {
        &self.gamma
    }

    pub fn params(&self) -> &PdeGridParams {
        &self.params
    }

    /// Variance of the root field layer, ξ'(0).
    pub fn root_variance(&self) -> f64 {
        self.xi_prime.eval(0.0)
    }

    /// The functional's Φ(0,0): the s = 0 level averaged over the root field
    /// (identity for pure mixings).
    pub fn value_at_origin(&self) -> f64 {
        let v0 = self.root_variance();
        if v0 <= 1e-15 {
            return self.levels[0].values[self.grid.center_index()];
        }
        // If no diffusion happened above s = 0 the level is still the |x|
        // boundary and the closed form applies.
        let pde_var = self.xi_prime.eval(1.0) - self.xi_prime.eval(0.0);
        propagate_point(
            &self.grid,
            &self.levels[0].values,
            pde_var <= 1e-15,
            0.0,
            v0,
            &self.gh,
            0.0,
        )
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn level_s(&self, idx: usize) -> f64 {
        self.levels[idx].s
    }

    pub fn level_values(&self, idx: usize) -> &[f64] {
        &self.levels[idx].values
    }

    fn find_level(&self, s: f64) -> Option<usize> {
        self.levels
            .iter()
            .position(|l| (l.s - s).abs() <= 1e-12)
    }

    /// Index of the stored level at s, if any (exact match).
    pub fn level_index(&self, s: f64) -> Option<usize> {
        self.find_level(s)
    }

    /// ∂_xΦ at a stored level: central-difference node gradients, cubic
    /// interpolation between nodes.
    pub fn dx_at_level(&self, idx: usize, x: f64) -> f64 {
        if x <= self.grid.xmin {
            return -1.0;
        }
        if x >= self.grid.xmax() {
            return 1.0;
        }
        self.grid.interp(&self.levels[idx].grad, x)
    }

    /// Φ at a stored level.
    pub fn value_at_level(&self, idx: usize, x: f64) -> f64 {
        self.grid.interp(&self.levels[idx].values, x)
    }

    /// Index of the first stored level with s ≥ the query (exact matches
    /// included).
    fn level_above(&self, s: f64) -> usize {
        self.levels
            .iter()
            .position(|l| l.s >= s - 1e-12)
            .unwrap_or(self.levels.len() - 1)
    }

    /// Φ(s, x). Exact at stored levels; otherwise propagated on demand from
    /// the next stored level (exact in s since γ is constant in between).
    pub fn value(&self, s: f64, x: f64) -> f64 {
        if let Some(idx) = self.find_level(s) {
            return self.grid.interp(&self.levels[idx].values, x);
        }
        let up = &self.levels[self.level_above(s)];
        let m = self.gamma.value(s);
        let v = self.xi_prime.eval(up.s) - self.xi_prime.eval(s);
        propagate_point(&self.grid, &up.values, up.s == 1.0, m, v, &self.gh, x)
    }

    /// ∂_x Φ(s, x): central differences on the grid, cubic interpolation
    /// between nodes.
    pub fn dx(&self, s: f64, x: f64) -> f64 {
        if x <= self.grid.xmin {
            return -1.0;
        }
        if x >= self.grid.xmax() {
            return 1.0;
        }
        if let Some(idx) = self.find_level(s) {
            return self.grid.interp(&self.levels[idx].grad, x);
        }
        let h = self.grid.h;
        (self.value(s, x + h) - self.value(s, x - h)) / (2.0 * h)
    }

    /// Insert stored levels at every multiple of `ds` (plus the existing
    /// breakpoints), rebuilding the backward chain with exact interval
    /// composition. Makes dense-time queries exact level lookups.
    pub fn densify(&mut self, ds: f64) -> Result<()> {
        if !(ds > 0.0) {
            return Err(Error::domain("ds must be positive"));
        }
        let mut targets: Vec<f64> = self.levels.iter().map(|l| l.s).collect();
        let mut k = 1;
        loop {
            let s = k as f64 * ds;
            if s >= 1.0 - 1e-12 {
                break;
            }
            targets.push(s);
            k += 1;
        }
        targets.sort_by(|a, b| b.partial_cmp(a).unwrap());
        targets.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);

        let boundary = self.levels.last().unwrap().clone();
        let mut levels = vec![boundary];
        for &s in targets.iter().skip(1) {
            let top = levels.last().unwrap();
            let m = self.gamma.value(s);
            let v = self.xi_prime.eval(top.s) - self.xi_prime.eval(s);
            let values =
                propagate_level(&self.grid, &top.values, top.s == 1.0, m, v, &self.gh);
            let grad = self.grid.node_gradient(&values);
            levels.push(PhiLevel { s, values, grad });
        }
        levels.reverse();
        self.levels = levels;
        Ok(())
    }
}

/// ½ ∫_0^1 s ξ''(s) γ(s) ds, exact for step γ via G(s) = s ξ'(s) - ξ(s).
pub fn parisi_correction(mixing: &MixingPair, gamma: &StepGamma) -> f64 {
    let xi_prime = mixing.xi_poly().derivative();
    let g = |s: f64| s * xi_prime.eval(s) - mixing.xi_poly().eval(s);
    0.5 * gamma
        .intervals()
        .into_iter()
        .map(|(a, b, m)| m * (g(b) - g(a)))
        .sum::<f64>()
}

/// P(γ) = Φ_γ(0,0) - ½∫ s ξ'' γ.
pub fn parisi_value(mixing: &MixingPair, gamma: &StepGamma, params: &PdeGridParams) -> Result<f64> {
    let phi = solve_phi(mixing, gamma, params)?;
    Ok(phi.value_at_origin() - parisi_correction(mixing, gamma))
}

/// |Φ(0,0) at the configured GH order - at twice the order|.
pub fn quadrature_refinement_residual(
    mixing: &MixingPair,
    gamma: &StepGamma,
    params: &PdeGridParams,
) -> Result<f64> {
    let base = solve_phi(mixing, gamma, params)?.value_at_origin();
    let doubled = PdeGridParams {
        gh_order: params.gh_order * 2,
        ..*params
    };
    let refined = solve_phi(mixing, gamma, &doubled)?.value_at_origin();
    Ok((base - refined).abs())
}

#[derive(Debug, Clone)]
pub struct MinimizeParams {
    pub k_max: usize,
    pub multistart: usize,
    pub nm: NmOptions,
    /// Cap on γ values; the class allows γ unbounded near 1, the solver does
    /// not, and reports the cap alongside the estimate.
    pub m_cap: f64,
    pub grid: PdeGridParams,
}

impl Default for MinimizeParams {
    fn default() -> Self {
        MinimizeParams {
            k_max: 6,
            multistart: 8,
            nm: NmOptions {
                max_iter: 600,
                f_tol: 1e-10,
                x_tol: 1e-7,
                init_step: 0.4,
            },
            m_cap: 100.0,
            grid: PdeGridParams::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct KBest {
    pub k: usize,
    pub value: f64,
    pub gamma: StepGamma,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct ParisiEstimate {
    pub gamma_hat: StepGamma,
    pub value: f64,
    pub k: usize,
    pub per_k: Vec<KBest>,
    pub converged: bool,
    pub m_cap: f64,
}

/// Unconstrained parameters → k-step γ: breakpoints are normalized cumulative
/// positive increments (q_k pinned to 1), values cumulative positive
/// increments capped at m_cap.
fn theta_to_gamma(theta: &[f64], k: usize, m_cap: f64) -> Option<StepGamma> {
    let inc_q: Vec<f64> = theta[..k].iter().map(|&t| t.clamp(-30.0, 30.0).exp()).collect();
    let total: f64 = inc_q.iter().sum();
    let mut qs = Vec::with_capacity(k);
    let mut acc = 0.0;
    for (i, &e) in inc_q.iter().enumerate() {
        acc += e;
        qs.push(if i + 1 == k { 1.0 } else { acc / total });
    }
    let mut ms = Vec::with_capacity(k);
    let mut m_acc = 0.0;
    for &t in &theta[k..2 * k] {
        m_acc += t.clamp(-30.0, 30.0).exp();
        ms.push(m_acc.min(m_cap));
    }
    StepGamma::new(qs, ms).ok()
}

fn gamma_to_theta(gamma: &StepGamma) -> Vec<f64> {
    let k = gamma.k();
    let mut theta = Vec::with_capacity(2 * k);
    let mut prev = 0.0;
    for &q in gamma.breakpoints() {
        theta.push((q - prev).max(1e-12).ln());
        prev = q;
    }
    let mut prev_m = 0.0;
    for &m in gamma.values() {
        theta.push((m - prev_m).max(1e-12).ln());
        prev_m = m;
    }
    theta
}

/// Refine a k-step γ to k+1 steps by splitting its widest piece (same
/// function, one redundant breakpoint).
fn split_widest(gamma: &StepGamma) -> StepGamma {
    let mut qs = gamma.breakpoints().to_vec();
    let mut ms = gamma.values().to_vec();
    let mut widest = 0;
    let mut width = -1.0;
    let mut prev = 0.0;
    for (i, &q) in qs.iter().enumerate() {
        if q - prev > width {
            width = q - prev;
            widest = i;
        }
        prev = q;
    }
    let left = if widest == 0 { 0.0 } else { qs[widest - 1] };
    let mid = 0.5 * (left + qs[widest]);
    qs.insert(widest, mid);
    ms.insert(widest, ms[widest]);
    StepGamma::new(qs, ms).expect("split preserves validity")
}

/// Minimize P over k-step γ for k = 1..k_max with multistart Nelder-Mead on
/// the unconstrained reparameterization. Each level is seeded with the
/// previous best (exactly reproduced by a redundant split), so the reported
/// value is nonincreasing in k.
pub fn minimize_parisi(
    mixing: &MixingPair,
    params: &MinimizeParams,
    master_seed: u64,
) -> Result<ParisiEstimate> {
    if params.k_max < 1 {
        return Err(Error::domain("k_max ≥ 1 required"));
    }
    let objective = |theta: &[f64], k: usize| -> f64 {
        match theta_to_gamma(theta, k, params.m_cap) {
            Some(gamma) => {
                parisi_value(mixing, &gamma, &params.grid).unwrap_or(f64::INFINITY)
            }
            None => f64::INFINITY,
        }
    };

    let mut per_k: Vec<KBest> = Vec::new();
    let mut best_gamma: Option<StepGamma> = None;
    for k in 1..=params.k_max {
        let mut starts: Vec<Vec<f64>> = Vec::new();
        if let Some(prev) = &best_gamma {
            starts.push(gamma_to_theta(&split_widest(prev)));
        }
        let mut rng = stream(master_seed, &format!("parisi/minimize/k{k}"));
        while starts.len() < params.multistart.max(1) {
            let theta: Vec<f64> = (0..2 * k)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            starts.push(theta);
        }
        let results: Vec<_> = starts
            .par_iter()
            .map(|x0| nelder_mead(|theta| objective(theta, k), x0, &params.nm))
            .collect();
        let best = results
            .iter()
            .min_by(|a, b| a.value.partial_cmp(&b.value).unwrap())
            .unwrap();
        let gamma = theta_to_gamma(&best.x, k, params.m_cap)
            .ok_or_else(|| Error::numeric("optimizer returned an invalid γ"))?;
        per_k.push(KBest {
            k,
            value: best.value,
            gamma: gamma.clone(),
            converged: best.converged,
        });
        best_gamma = Some(gamma);
    }

    let best = per_k
        .iter()
        .min_by(|a, b| a.value.partial_cmp(&b.value).unwrap())
        .unwrap()
        .clone();
    Ok(ParisiEstimate {
        gamma_hat: best.gamma,
        value: best.value,
        k: best.k,
        converged: per_k.iter().all(|kb| kb.converged),
        per_k,
        m_cap: params.m_cap,
    })
}

#[derive(Debug, Clone)]
pub struct SupportReport {
    /// inf of the set where γ̂ > 0 (1.0 when γ̂ ≡ 0).
    pub first_positive: f64,
    pub gamma_is_zero: bool,
    /// γ̂ > 0 everywhere on (first_positive, 1].
    pub positive_on_tail: bool,
    pub flagged: bool,
}

/// Diagnostic for the support of the numerical minimizer: 0 should lie in
/// its support, so a first positive point far from 0 is flagged.
pub fn gamma_support_check(gamma: &StepGamma, far_threshold: f64) -> SupportReport {
    if gamma.is_zero() {
        return SupportReport {
            first_positive: 1.0,
            gamma_is_zero: true,
            positive_on_tail: false,
            flagged: true,
        };
    }
    let mut first_positive = 0.0;
    for (a, _b, m) in gamma.intervals() {
        if m > 0.0 {
            first_positive = a;
            break;
        }
    }
    SupportReport {
        first_positive,
        gamma_is_zero: false,
        positive_on_tail: true,
        flagged: first_positive > far_threshold,
    }
}

/// Replica-symmetric value P(0) = √(2ξ'(1)/π): the γ ≡ 0 closed form.
pub fn zero_gamma_value(mixing: &MixingPair) -> f64 {
    (2.0 * mixing.xi_poly().derivative().eval(1.0) / std::f64::consts::PI).sqrt()
}

/// Independent oracle for Φ_γ(0,0): explicit finite differences on the PDE
/// itself (forward in τ = 1-s from the |x| boundary), sharing nothing with
/// the Gauss-Hermite recursion. `half_points` controls the spatial grid.
pub fn finite_difference_phi0(
    mixing: &MixingPair,
    gamma: &StepGamma,
    half_points: usize,
) -> Result<f64> {
    let xi_prime = mixing.xi_poly().derivative();
    let xi2 = mixing.xi_poly().derivative_n(2);
    let half_width = 4.0 * xi_prime.eval(1.0).max(1e-12).sqrt();
    let grid = XGrid::symmetric(half_width, half_points);
    let h = grid.h;
    let xi2_max = (0..=100)
        .map(|i| xi2.eval(i as f64 / 100.0))
        .fold(0.0f64, f64::max);
    let dtau_stable = 0.4 * h * h / xi2_max.max(1e-9);
    let steps = (1.0 / dtau_stable).ceil() as usize;
    let dtau = 1.0 / steps as f64;

    let n = grid.n;
    let mut v: Vec<f64> = (0..n).map(|j| grid.x(j).abs()).collect();
    let mut next = v.clone();
    for step in 0..steps {
        // Midpoint of the τ-step in s.
        let s = 1.0 - (step as f64 + 0.5) * dtau;
        let d = xi2.eval(s.clamp(0.0, 1.0));
        let g = gamma.value(s.clamp(0.0, 1.0));
        if d == 0.0 {
            continue;
        }
        for j in 0..n {
            let left = if j == 0 { v[0] + h } else { v[j - 1] };
            let right = if j == n - 1 { v[n - 1] + h } else { v[j + 1] };
            let d2 = (right - 2.0 * v[j] + left) / (h * h);
            let d1 = (right - left) / (2.0 * h);
            next[j] = v[j] + dtau * 0.5 * d * (d2 + g * d1 * d1);
        }
        std::mem::swap(&mut v, &mut next);
    }
    let center = (n - 1) / 2;
    let v0 = xi_prime.eval(0.0);
    if v0 <= 1e-15 {
        return Ok(v[center]);
    }
    // Root field average by direct summation against the normal density.
    let sd = v0.sqrt();
    let mut acc = 0.0;
    let mut weight = 0.0;
    for (j, &val) in v.iter().enumerate() {
        let w = crate::pde::normal_pdf(grid.x(j) / sd) / sd * h;
        acc += w * val;
        weight += w;
    }
    Ok(acc / weight)
}

/// Cross-check the step-γ correction against adaptive quadrature.
pub fn correction_quadrature(mixing: &MixingPair, gamma: &StepGamma, tol: f64) -> Result<f64> {
    let xi2 = mixing.xi_poly().derivative_n(2);
    let mut total = 0.0;
    for (a, b, m) in gamma.intervals() {
        total += m * quad::adaptive_simpson(|s| s * xi2.eval(s), a, b, tol)?;
    }
    Ok(0.5 * total)
}
