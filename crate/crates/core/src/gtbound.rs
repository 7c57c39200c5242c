//! Two-system Guerra-Talagrand machinery: the matrix diffusion T(s), the 2-D
//! PDE for Ψ_γ, the functional T_q(γ), and the chaos-gap scan.
//!
//! For a fixed overlap constraint q (ι = sign q), T(s) couples the systems
//! below |q| with off-diagonal ι·ξ0''(ιs) and is diagonal above, so
//! Ψ_γ(|q|,x1,x2) = Φ_γ(|q|,x1) + Φ_γ(|q|,x2) exactly. Below |q| each
//! constant-γ interval is one exact update through a 2-D Gaussian of
//! covariance Σ = ∫T: since both T diagonals are equal, Σ has eigenvectors
//! (1,±1)/√2 with eigenvalues ∫ξ'' ± ∫ιξ0''(ι·), and the update is two 1-D
//! Gauss-Hermite passes along those directions (exp-moment composition is
//! exact within an interval).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mixing::{GammaQ, MixingPair, Sign, StepGamma};
use crate::parisi::{parisi_correction, solve_phi, PdeGridParams, PhiSolution};
use crate::pde::{exp_moment_combine, GaussHermite, XGrid};
use crate::poly::Poly;

/// T(s) for the overlap constraint q.
pub fn t_matrix(mixing: &MixingPair, q: f64, s: f64) -> Result<[[f64; 2]; 2]> {
    if q.abs() > 1.0 {
        return Err(Error::domain(format!("|q| ≤ 1 required, got {q}")));
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::domain(format!("s ∈ [0,1] required, got {s}")));
    }
    let iota = Sign::of(q).as_f64();
    let d = mixing.xi(s, 2)?;
    let off = if s < q.abs() {
        iota * mixing.xi0(iota * s, 2)?
    } else {
        0.0
    };
    Ok([[d, off], [off, d]])
}

#[derive(Debug, Clone, Copy)]
pub struct PsiGridParams {
    pub half_width_mult: f64,
    /// Nodes per half-axis of the (square) 2-D grid.
    pub x_points_half: usize,
    pub gh_order: usize,
    /// Substeps per base interval when γ_q is not an exact step function.
    pub gamma_q_substeps: usize,
    /// Grid for the embedded 1-D solve.
    pub phi: PdeGridParams,
}

impl Default for PsiGridParams {
    fn default() -> Self {
        PsiGridParams {
            half_width_mult: 4.0,
            x_points_half: 256,
            gh_order: 64,
            gamma_q_substeps: 64,
            phi: PdeGridParams::default(),
        }
    }
}

impl PsiGridParams {
    /// Cheaper settings for path simulation and smoke tests.
    pub fn coarse() -> Self {
        PsiGridParams {
            half_width_mult: 4.0,
            x_points_half: 128,
            gh_order: 24,
            gamma_q_substeps: 32,
            phi: PdeGridParams::coarse(),
        }
    }
}

#[derive(Debug, Clone)]
struct PsiLevel {
    s: f64,
    /// Row-major n×n values: index i*n + j holds Ψ(s, x_i, x_j).
    values: Vec<f64>,
}

/// Grid representation of Ψ_γ(s,·,·) on [0,|q|], factorized above |q|.
#[derive(Debug, Clone)]
pub struct PsiSolution {
    pub grid: XGrid,
    pub q: f64,
    pub iota: Sign,
    gamma: StepGamma,
    phi: PhiSolution,
    /// 2-D levels ascending in s; last is the factorized level at s = |q|.
    levels: Vec<PsiLevel>,
    xi_prime: Poly,
    xi0_prime: Poly,
    gh: GaussHermite,
    params: PsiGridParams,
    /// Set when a covariance eigenvalue had to be clipped at 0.
    pub clipped_covariance: bool,
}

/// Bicubic interpolation on the square grid with |·|-slope tails per
/// coordinate.
fn interp2(grid: &XGrid, values: &[f64], x1: f64, x2: f64) -> f64 {
    let xmax = grid.xmax();
    let mut excess = 0.0;
    let mut cx1 = x1;
    let mut cx2 = x2;
    if cx1 < grid.xmin {
        excess += grid.xmin - cx1;
        cx1 = grid.xmin;
    } else if cx1 > xmax {
        excess += cx1 - xmax;
        cx1 = xmax;
    }
    if cx2 < grid.xmin {
        excess += grid.xmin - cx2;
        cx2 = grid.xmin;
    } else if cx2 > xmax {
        excess += cx2 - xmax;
        cx2 = xmax;
    }
    let n = grid.n;
    let u1 = (cx1 - grid.xmin) / grid.h;
    let u2 = (cx2 - grid.xmin) / grid.h;
    let b1 = (u1.floor() as usize).saturating_sub(1).min(n - 4);
    let b2 = (u2.floor() as usize).saturating_sub(1).min(n - 4);
    let t1 = u1 - b1 as f64;
    let t2 = u2 - b2 as f64;
    let w = |t: f64| {
        let ta = t - 1.0;
        let tb = t - 2.0;
        let tc = t - 3.0;
        [
            -ta * tb * tc / 6.0,
            t * tb * tc / 2.0,
            -t * ta * tc / 2.0,
            t * ta * tb / 6.0,
        ]
    };
    let w1 = w(t1);
    let w2 = w(t2);
    let mut acc = 0.0;
    for (di, wi) in w1.iter().enumerate() {
        let row = (b1 + di) * n + b2;
        let slice = &values[row..row + 4];
        let inner = w2[0] * slice[0] + w2[1] * slice[1] + w2[2] * slice[2] + w2[3] * slice[3];
        acc += wi * inner;
    }
    acc + excess
}

/// One directional Gaussian pass along the unit vector `dir`.
fn directional_pass(
    grid: &XGrid,
    values: &[f64],
    dir: (f64, f64),
    variance: f64,
    m: f64,
    gh: &GaussHermite,
) -> Vec<f64> {
    if variance <= 1e-15 {
        return values.to_vec();
    }
    let scale = (2.0 * variance).sqrt();
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let offsets: Vec<(f64, f64)> = gh
        .nodes
        .iter()
        .map(|&z| (dir.0 * scale * z, dir.1 * scale * z))
        .collect();
    let weights: Vec<f64> = gh.weights.iter().map(|&w| w / sqrt_pi).collect();
    let ln_weights: Vec<f64> = weights.iter().map(|&w| w.ln()).collect();
    let n = grid.n;
    let mut out = vec![0.0; n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let x1 = grid.x(i);
        let mut vals = vec![0.0; offsets.len()];
        for (j, slot) in row.iter_mut().enumerate() {
            let x2 = grid.x(j);
            for (v, (o1, o2)) in vals.iter_mut().zip(&offsets) {
                *v = interp2(grid, values, x1 + o1, x2 + o2);
            }
            *slot = exp_moment_combine(m, &vals, &ln_weights, &weights);
        }
    });
    out
}

const INV_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn gamma_with_breakpoint(gamma: &StepGamma, at: f64) -> Result<StepGamma> {
    if gamma.breakpoints().iter().any(|&q| (q - at).abs() <= 1e-12) || at <= 0.0 || at >= 1.0 {
        return Ok(gamma.clone());
    }
    let mut qs = Vec::new();
    let mut ms = Vec::new();
    for (&q, &m) in gamma.breakpoints().iter().zip(gamma.values()) {
        if at < q && (qs.last().copied().unwrap_or(0.0)) < at {
            qs.push(at);
            ms.push(m);
        }
        qs.push(q);
        ms.push(m);
    }
    StepGamma::new(qs, ms)
}

/// Solve the 2-D PDE. q = 0 is served purely by the diagonal factorization.
pub fn solve_psi(
    mixing: &MixingPair,
    gamma: &StepGamma,
    q: f64,
    params: &PsiGridParams,
) -> Result<PsiSolution> {
    if q.abs() > 1.0 {
        return Err(Error::domain(format!("|q| ≤ 1 required, got {q}")));
    }
    let qa = q.abs();
    let iota = Sign::of(q);
    let gamma_split = gamma_with_breakpoint(gamma, qa)?;
    let phi = solve_phi(mixing, &gamma_split, &params.phi)?;
    let xi_prime = mixing.xi_poly().derivative();
    let xi0_prime = mixing.xi0_poly().derivative();
    let gh = GaussHermite::new(params.gh_order)?;
    let half_width = params.half_width_mult * xi_prime.eval(1.0).max(1e-12).sqrt();
    let grid = XGrid::symmetric(half_width, params.x_points_half);

    let mut levels: Vec<PsiLevel> = Vec::new();
    let mut clipped = false;
    if qa > 0.0 {
        // Factorized start: Ψ(|q|, x1, x2) = Φ(|q|, x1) + Φ(|q|, x2).
        let phi_line: Vec<f64> = (0..grid.n).map(|i| phi.value(qa, grid.x(i))).collect();
        let n = grid.n;
        let mut vals = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                vals[i * n + j] = phi_line[i] + phi_line[j];
            }
        }
        levels.push(PsiLevel { s: qa, values: vals });

        let pieces: Vec<(f64, f64, f64)> = gamma_split
            .intervals()
            .into_iter()
            .filter(|&(a, _, _)| a < qa)
            .map(|(a, b, m)| (a, b.min(qa), m))
            .collect();
        for &(a, b, m) in pieces.iter().rev() {
            let top = levels.last().unwrap();
            debug_assert!((top.s - b).abs() < 1e-12);
            let dv = xi_prime.eval(b) - xi_prime.eval(a);
            let off = xi0_prime.eval(iota.as_f64() * b) - xi0_prime.eval(iota.as_f64() * a);
            let mut lam_plus = dv + off;
            let mut lam_minus = dv - off;
            if lam_plus < 0.0 {
                lam_plus = 0.0;
                clipped = true;
            }
            if lam_minus < 0.0 {
                lam_minus = 0.0;
                clipped = true;
            }
            let mid = directional_pass(
                &grid,
                &top.values,
                (INV_SQRT2, INV_SQRT2),
                lam_plus,
                m,
                &gh,
            );
            let values = directional_pass(
                &grid,
                &mid,
                (INV_SQRT2, -INV_SQRT2),
                lam_minus,
                m,
                &gh,
            );
            levels.push(PsiLevel { s: a, values });
        }
        levels.reverse();
    }

    Ok(PsiSolution {
        grid,
        q,
        iota,
        gamma: gamma_split,
        phi,
        levels,
        xi_prime,
        xi0_prime,
        gh,
        params: *params,
        clipped_covariance: clipped,
    })
}

impl PsiSolution {
    pub fn gamma(&self) -> &StepGamma {
        &self.gamma
    }

    pub fn phi(&self) -> &PhiSolution {
        &self.phi
    }

    pub fn params(&self) -> &PsiGridParams {
        &self.params
    }

    /// Root-layer covariance for the coupled pair: diag ξ'(0), off-diag
    /// ι·ξ0'(0).
    fn root_covariance(&self) -> (f64, f64) {
        (
            self.xi_prime.eval(0.0),
            self.iota.as_f64() * self.xi0_prime.eval(0.0),
        )
    }

    /// Ψ(0,0,0) including the root field layer; 2Φ(0,0) when q = 0.
    pub fn value_at_origin(&self) -> f64 {
        if self.q == 0.0 {
            return 2.0 * self.phi.value_at_origin();
        }
        let level0 = &self.levels[0];
        let (c1, c01) = self.root_covariance();
        let lam_plus = (c1 + c01).max(0.0);
        let lam_minus = (c1 - c01).max(0.0);
        if lam_plus + lam_minus <= 1e-15 {
            let c = self.grid.center_index();
            return level0.values[c * self.grid.n + c];
        }
        // Plain 2-D Gaussian average at the root (m = 0).
        let sqrt_pi = std::f64::consts::PI.sqrt();
        let sp = (2.0 * lam_plus).sqrt();
        let sm = (2.0 * lam_minus).sqrt();
        let mut acc = 0.0;
        for (&zp, &wp) in self.gh.nodes.iter().zip(&self.gh.weights) {
            for (&zm, &wm) in self.gh.nodes.iter().zip(&self.gh.weights) {
                let x1 = INV_SQRT2 * (sp * zp + sm * zm);
                let x2 = INV_SQRT2 * (sp * zp - sm * zm);
                acc += wp * wm * interp2(&self.grid, &level0.values, x1, x2);
            }
        }
        acc / (sqrt_pi * sqrt_pi)
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn level_s(&self, idx: usize) -> f64 {
        self.levels[idx].s
    }

    pub fn find_level(&self, s: f64) -> Option<usize> {
        self.levels.iter().position(|l| (l.s - s).abs() <= 1e-12)
    }

    /// Ψ(s, x1, x2) at a stored level.
    pub fn value_at_level(&self, idx: usize, x1: f64, x2: f64) -> f64 {
        interp2(&self.grid, &self.levels[idx].values, x1, x2)
    }

    /// ∇Ψ at a stored level by central differences.
    pub fn grad_at_level(&self, idx: usize, x1: f64, x2: f64) -> [f64; 2] {
        let h = self.grid.h;
        let vals = &self.levels[idx].values;
        [
            (interp2(&self.grid, vals, x1 + h, x2) - interp2(&self.grid, vals, x1 - h, x2))
                / (2.0 * h),
            (interp2(&self.grid, vals, x1, x2 + h) - interp2(&self.grid, vals, x1, x2 - h))
                / (2.0 * h),
        ]
    }

    /// Ψ(|q|, x1, x2) = Φ(|q|, x1) + Φ(|q|, x2), from the fine 1-D solution.
    pub fn terminal_value(&self, x1: f64, x2: f64) -> f64 {
        let qa = self.q.abs();
        self.phi.value(qa, x1) + self.phi.value(qa, x2)
    }

    /// Insert stored 2-D levels at multiples of `ds` within [0,|q|].
    pub fn densify(&mut self, ds: f64) -> Result<()> {
        if !(ds > 0.0) {
            return Err(Error::domain("ds must be positive"));
        }
        if self.q == 0.0 {
            return Ok(());
        }
        let qa = self.q.abs();
        let mut targets: Vec<f64> = self.levels.iter().map(|l| l.s).collect();
        let mut k = 1;
        loop {
            let s = k as f64 * ds;
            if s >= qa - 1e-12 {
                break;
            }
            targets.push(s);
            k += 1;
        }
        targets.sort_by(|a, b| b.partial_cmp(a).unwrap());
        targets.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);

        let top = self.levels.last().unwrap().clone();
        let mut levels = vec![top];
        let iota = self.iota.as_f64();
        for &s in targets.iter().skip(1) {
            let prev = levels.last().unwrap();
            let m = self.gamma.value(s);
            let dv = self.xi_prime.eval(prev.s) - self.xi_prime.eval(s);
            let off = self.xi0_prime.eval(iota * prev.s) - self.xi0_prime.eval(iota * s);
            let lam_plus = (dv + off).max(0.0);
            let lam_minus = (dv - off).max(0.0);
            let mid = directional_pass(
                &self.grid,
                &prev.values,
                (INV_SQRT2, INV_SQRT2),
                lam_plus,
                m,
                &self.gh,
            );
            let values = directional_pass(
                &self.grid,
                &mid,
                (INV_SQRT2, -INV_SQRT2),
                lam_minus,
                m,
                &self.gh,
            );
            levels.push(PsiLevel { s, values });
        }
        levels.reverse();
        self.levels = levels;
        Ok(())
    }
}

/// ∫_0^{|q|} s ξ0''(ιs) γ(s) ds, exact for step γ.
pub fn xi0_moment_integral(mixing: &MixingPair, gamma: &StepGamma, q: f64) -> f64 {
    let qa = q.abs();
    if qa == 0.0 {
        return 0.0;
    }
    let iota = Sign::of(q).as_f64();
    // Antiderivative of s·ξ0''(ιs).
    let integrand = mixing
        .xi0_poly()
        .derivative_n(2)
        .scale_argument(iota)
        .times_x();
    let anti = integrand.antiderivative();
    gamma
        .intervals()
        .into_iter()
        .filter(|&(a, _, _)| a < qa)
        .map(|(a, b, m)| m * (anti.eval(b.min(qa)) - anti.eval(a)))
        .sum::<f64>()
}

/// T_q(γ) = Ψ_γ(0,0,0) - (∫ s ξ'' γ + ∫_0^{|q|} s ξ0''(ι s) γ).
///
/// The correction counts half the weighted trace of T per system, i.e. both
/// diagonal entries: this is the normalization under which T_0(γ) = 2P(γ)
/// exactly and the exchange identity turns the two-system bound into
/// Ψ_{γ_q}(0,0,0) - 2Φ_{γ_P}(0,0) ≤ 0.
pub fn gt_value(
    mixing: &MixingPair,
    gamma: &StepGamma,
    q: f64,
    params: &PsiGridParams,
) -> Result<f64> {
    if q == 0.0 {
        return Err(Error::domain("T_q needs q ≠ 0; q = 0 is the factorized case"));
    }
    let psi = solve_psi(mixing, gamma, q, params)?;
    Ok(psi.value_at_origin()
        - 2.0 * parisi_correction(mixing, gamma)
        - xi0_moment_integral(mixing, gamma, q))
}

/// Independent oracle for Ψ_γ(0,0,0): explicit 2-D finite differences of the
/// PDE with the matrix diffusion, started from a finite-difference 1-D
/// solution at s = |q| (no Gauss-Hermite machinery anywhere on this path).
pub fn finite_difference_psi0(
    mixing: &MixingPair,
    gamma: &StepGamma,
    q: f64,
    half_points: usize,
) -> Result<f64> {
    let qa = q.abs();
    if qa == 0.0 {
        return Err(Error::domain("finite-difference Ψ oracle needs q ≠ 0"));
    }
    let iota = Sign::of(q).as_f64();
    let xi_prime = mixing.xi_poly().derivative();
    let xi2 = mixing.xi_poly().derivative_n(2);
    let xi02 = mixing.xi0_poly().derivative_n(2);
    let half_width = 4.0 * xi_prime.eval(1.0).max(1e-12).sqrt();
    let grid = XGrid::symmetric(half_width, half_points);
    let h = grid.h;
    let n = grid.n;

    // 1-D finite differences from s = 1 down to s = |q|.
    let xi2_max = (0..=100)
        .map(|i| xi2.eval(i as f64 / 100.0))
        .fold(0.0f64, f64::max);
    let dtau_1d = 0.4 * h * h / xi2_max.max(1e-9);
    let span_1d = 1.0 - qa;
    let steps_1d = (span_1d / dtau_1d).ceil().max(1.0) as usize;
    let dtau = span_1d / steps_1d as f64;
    let mut line: Vec<f64> = (0..n).map(|j| grid.x(j).abs()).collect();
    let mut line_next = line.clone();
    for step in 0..steps_1d {
        let s = 1.0 - (step as f64 + 0.5) * dtau;
        let d = xi2.eval(s);
        let g = gamma.value(s);
        for j in 0..n {
            let left = if j == 0 { line[0] + h } else { line[j - 1] };
            let right = if j == n - 1 { line[n - 1] + h } else { line[j + 1] };
            let d2 = (right - 2.0 * line[j] + left) / (h * h);
            let d1 = (right - left) / (2.0 * h);
            line_next[j] = line[j] + dtau * 0.5 * d * (d2 + g * d1 * d1);
        }
        std::mem::swap(&mut line, &mut line_next);
    }

    // Tensor start and 2-D steps down to s = 0.
    let mut v = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            v[i * n + j] = line[i] + line[j];
        }
    }
    let coupling_max = (0..=100)
        .map(|i| xi02.eval(iota * qa * i as f64 / 100.0).abs())
        .fold(0.0f64, f64::max);
    let dtau_2d = 0.35 * h * h / (2.0 * xi2_max + 2.0 * coupling_max).max(1e-9);
    let steps_2d = (qa / dtau_2d).ceil().max(1.0) as usize;
    let dtau = qa / steps_2d as f64;
    let mut next = v.clone();
    let at = |v: &[f64], i: isize, j: isize| -> f64 {
        // Ghost nodes extend with slope ±1 per coordinate.
        let mut extra = 0.0;
        let ii = if i < 0 {
            extra += h;
            0
        } else if i >= n as isize {
            extra += h;
            n - 1
        } else {
            i as usize
        };
        let jj = if j < 0 {
            extra += h;
            0
        } else if j >= n as isize {
            extra += h;
            n - 1
        } else {
            j as usize
        };
        v[ii * n + jj] + extra
    };
    for step in 0..steps_2d {
        let s = qa - (step as f64 + 0.5) * dtau;
        let d = xi2.eval(s.max(0.0));
        let o = iota * xi02.eval(iota * s.max(0.0));
        let g = gamma.value(s.max(0.0));
        next.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            let i = i as isize;
            for (ju, slot) in row.iter_mut().enumerate() {
                let j = ju as isize;
                let c = at(&v, i, j);
                let xp = at(&v, i + 1, j);
                let xm = at(&v, i - 1, j);
                let yp = at(&v, i, j + 1);
                let ym = at(&v, i, j - 1);
                let dxx = (xp - 2.0 * c + xm) / (h * h);
                let dyy = (yp - 2.0 * c + ym) / (h * h);
                let dxy = (at(&v, i + 1, j + 1) - at(&v, i + 1, j - 1) - at(&v, i - 1, j + 1)
                    + at(&v, i - 1, j - 1))
                    / (4.0 * h * h);
                let d1 = (xp - xm) / (2.0 * h);
                let d2 = (yp - ym) / (2.0 * h);
                let trace = d * (dxx + dyy) + 2.0 * o * dxy;
                let quad_form = d * (d1 * d1 + d2 * d2) + 2.0 * o * d1 * d2;
                *slot = c + dtau * 0.5 * (trace + g * quad_form);
            }
        });
        std::mem::swap(&mut v, &mut next);
    }
    let center = (n - 1) / 2;
    let c1 = xi_prime.eval(0.0);
    if c1 <= 1e-15 {
        return Ok(v[center * n + center]);
    }
    // Root average against the correlated 2-D normal density.
    let c01 = iota * mixing.xi0_poly().derivative().eval(0.0);
    let det = (c1 * c1 - c01 * c01).max(1e-12);
    let mut acc = 0.0;
    let mut weight = 0.0;
    for i in 0..n {
        let x1 = grid.x(i);
        for j in 0..n {
            let x2 = grid.x(j);
            let quad_form = (c1 * (x1 * x1 + x2 * x2) - 2.0 * c01 * x1 * x2) / det;
            let w = (-0.5 * quad_form).exp();
            acc += w * v[i * n + j];
            weight += w;
        }
    }
    Ok(acc / weight)
}

#[derive(Debug, Clone)]
pub struct GapRow {
    pub q: f64,
    pub gt_value: f64,
    pub two_parisi: f64,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct GapScan {
    pub rows: Vec<GapRow>,
    /// Measured η̂ per ε: the smallest |gap| over |q| > ε.
    pub eta_hat: Vec<(f64, f64)>,
    pub two_parisi: f64,
}

/// Scan gap(q) = T_q(γ_q) - 2P(γ̂_P) over a q grid (q = 0 entries skipped).
/// γ_q is built from γ̂_P per the exchange construction; both functionals use
/// the same 1-D discretization so the factorized part cancels exactly.
pub fn gap_scan(
    mixing: &MixingPair,
    gamma_p: &StepGamma,
    qs: &[f64],
    eps_list: &[f64],
    params: &PsiGridParams,
) -> Result<GapScan> {
    let two_parisi = 2.0
        * (solve_phi(mixing, gamma_p, &params.phi)?.value_at_origin()
            - parisi_correction(mixing, gamma_p));
    let rows: Result<Vec<GapRow>> = qs
        .iter()
        .filter(|&&q| q != 0.0)
        .map(|&q| {
            let gq = GammaQ::new(mixing, gamma_p, q)?;
            let gamma_q = gq.to_step(params.gamma_q_substeps)?;
            let gt = gt_value(mixing, &gamma_q, q, params)?;
            Ok(GapRow {
                q,
                gt_value: gt,
                two_parisi,
                gap: gt - two_parisi,
            })
        })
        .collect();
    let rows = rows?;
    let eta_hat = eps_list
        .iter()
        .map(|&eps| {
            let min_mag = rows
                .iter()
                .filter(|r| r.q.abs() > eps)
                .map(|r| -r.gap)
                .fold(f64::INFINITY, f64::min);
            (eps, min_mag)
        })
        .collect();
    Ok(GapScan {
        rows,
        eta_hat,
        two_parisi,
    })
}
