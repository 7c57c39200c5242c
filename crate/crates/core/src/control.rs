//! Monte Carlo verification of the stochastic-control representations of
//! Φ_γ and Ψ_γ.
//!
//! The 1-D representation evaluates, for an admissible control |u| ≤ 1,
//!
//!   E[Φ_γ(s, ∫_0^s ξ''γ u dw + ∫_0^s √(ξ'') dW) - ½∫_0^s ξ''γ u² dw],
//!
//! which is maximized (with value Φ_γ(0,0)) by the feedback
//! u(w) = ∂_xΦ_γ(w, X(w)). The 2-D analogue drives a pair through the matrix
//! diffusion T(w) and is maximized by v(w) = ∇Ψ_γ(w, X(w)) with value
//! Ψ_γ(0,0,0). Mixtures with a p=1 layer start paths from the root field
//! X(0) ~ N(0, ξ'(0)) (zero for pure models), matching the root average in
//! the PDE values.
//!
//! Estimators use antithetic noise pairs; standard errors are computed over
//! pair averages.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gtbound::PsiSolution;
use crate::mixing::MixingPair;
use crate::parisi::PhiSolution;
use crate::rng::stream;

#[derive(Debug, Clone, Copy)]
pub enum Policy {
    /// u(w) = ∂_xΦ(w, X(w)), clipped to [-1,1].
    OptimalFeedback,
    /// Constant control u ≡ c (must satisfy |c| ≤ 1).
    Constant(f64),
    /// A fixed random admissible feedback drawn from the given seed.
    RandomAdmissible { seed: u64 },
}

#[derive(Debug, Clone)]
pub struct ControlEstimate {
    pub value: f64,
    pub std_err: f64,
    pub paths: usize,
    pub dt: f64,
    /// Largest |u| observed before clipping for feedback policies.
    pub max_preclip: f64,
}

/// Smooth admissible feedback with randomized shape parameters.
#[derive(Debug, Clone, Copy)]
struct RandomFeedback {
    a: f64,
    b: f64,
    freq: f64,
    phase: f64,
}

impl RandomFeedback {
    fn draw(seed: u64) -> Self {
        let mut rng = stream(seed, "control/random-policy");
        RandomFeedback {
            a: rng.random_range(-1.0..1.0),
            b: rng.random_range(-1.0..1.0),
            freq: rng.random_range(0.5..3.0),
            phase: rng.random_range(0.0..std::f64::consts::TAU),
        }
    }

    fn eval(&self, w: f64, x: f64) -> f64 {
        (self.a * (std::f64::consts::TAU * self.freq * w + self.phase).sin()
            + self.b * (0.5 * x).tanh())
        .clamp(-1.0, 1.0)
    }
}

fn batch_count(paths: usize) -> usize {
    64.min(paths.div_ceil(2)).max(1)
}

fn aggregate(pair_means: Vec<f64>, paths: usize, dt: f64, max_preclip: f64) -> ControlEstimate {
    let n = pair_means.len() as f64;
    let mean = pair_means.iter().sum::<f64>() / n;
    let var = pair_means.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    ControlEstimate {
        value: mean,
        std_err: (var / n).sqrt(),
        paths,
        dt,
        max_preclip,
    }
}

/// Monte Carlo estimate of the 1-D control functional with horizon `s`.
pub fn simulate_value_1d(
    mixing: &MixingPair,
    phi: &PhiSolution,
    s: f64,
    policy: Policy,
    paths: usize,
    dt: f64,
    seed: u64,
) -> Result<ControlEstimate> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::domain(format!("horizon s ∈ (0,1] required, got {s}")));
    }
    if paths < 2 {
        return Err(Error::domain("need at least 2 paths"));
    }
    let steps = (s / dt).round() as usize;
    if steps == 0 || (steps as f64 * dt - s).abs() > 1e-9 {
        return Err(Error::domain(format!("dt = {dt} must divide the horizon {s}")));
    }
    let gamma = phi.gamma().clone();
    let xi2 = mixing.xi_poly().derivative_n(2);
    let root_sd = phi.root_variance().sqrt();

    // Per-step tables.
    let ws: Vec<f64> = (0..steps).map(|i| i as f64 * dt).collect();
    let diff_coef: Vec<f64> = ws.iter().map(|&w| (xi2.eval(w) * dt).sqrt()).collect();
    let drift_coef: Vec<f64> = ws.iter().map(|&w| xi2.eval(w) * gamma.value(w) * dt).collect();
    let cost_coef: Vec<f64> = ws
        .iter()
        .map(|&w| 0.5 * xi2.eval(w) * gamma.value(w) * dt)
        .collect();
    let level_idx: Vec<Option<usize>> = ws.iter().map(|&w| phi.level_index(w)).collect();
    let random_fb = RandomFeedback::draw(match policy {
        Policy::RandomAdmissible { seed } => seed,
        _ => 0,
    });

    let batches = batch_count(paths);
    let pairs_total = paths / 2;
    let results: Vec<(Vec<f64>, f64)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng: ChaCha12Rng = stream(seed, &format!("control/1d/batch{b}"));
            let lo = pairs_total * b / batches;
            let hi = pairs_total * (b + 1) / batches;
            let mut pair_means = Vec::with_capacity(hi - lo);
            let mut max_preclip = 0.0f64;
            let mut normals = vec![0.0f64; steps + 1];
            for _ in lo..hi {
                for z in normals.iter_mut() {
                    *z = rng.sample::<f64, _>(StandardNormal);
                }
                let mut pair_sum = 0.0;
                for &flip in &[1.0, -1.0] {
                    let mut x = root_sd * flip * normals[steps];
                    let mut cost = 0.0;
                    for i in 0..steps {
                        let u_raw = match policy {
                            Policy::OptimalFeedback => match level_idx[i] {
                                Some(idx) => phi.dx_at_level(idx, x),
                                None => phi.dx(ws[i], x),
                            },
                            Policy::Constant(c) => c,
                            Policy::RandomAdmissible { .. } => random_fb.eval(ws[i], x),
                        };
                        if u_raw.abs() > max_preclip {
                            max_preclip = u_raw.abs();
                        }
                        let u = u_raw.clamp(-1.0, 1.0);
                        cost += cost_coef[i] * u * u;
                        x += drift_coef[i] * u + diff_coef[i] * flip * normals[i];
                    }
                    pair_sum += phi.value(s, x) - cost;
                }
                pair_means.push(0.5 * pair_sum);
            }
            (pair_means, max_preclip)
        })
        .collect();

    let mut pair_means = Vec::with_capacity(pairs_total);
    let mut max_preclip = 0.0f64;
    for (means, mp) in results {
        pair_means.extend(means);
        max_preclip = max_preclip.max(mp);
    }
    Ok(aggregate(pair_means, paths, dt, max_preclip))
}

#[derive(Debug, Clone, Copy)]
pub enum Policy2 {
    OptimalFeedback,
    Constant(f64, f64),
    RandomAdmissible { seed: u64 },
}

/// 2×2 symmetric square root of [[d, o], [o, d]] via the (1,±1) eigenbasis.
fn sym_sqrt(d: f64, o: f64) -> [[f64; 2]; 2] {
    let sp = (d + o).max(0.0).sqrt();
    let sm = (d - o).max(0.0).sqrt();
    [
        [(sp + sm) / 2.0, (sp - sm) / 2.0],
        [(sp - sm) / 2.0, (sp + sm) / 2.0],
    ]
}

/// Monte Carlo estimate of the 2-D control functional with horizon s = |q|.
pub fn simulate_value_2d(
    mixing: &MixingPair,
    psi: &PsiSolution,
    policy: Policy2,
    paths: usize,
    dt: f64,
    seed: u64,
) -> Result<ControlEstimate> {
    let qa = psi.q.abs();
    if qa == 0.0 {
        return Err(Error::domain("2-D simulation needs q ≠ 0"));
    }
    if paths < 2 {
        return Err(Error::domain("need at least 2 paths"));
    }
    let steps = (qa / dt).round() as usize;
    if steps == 0 || (steps as f64 * dt - qa).abs() > 1e-9 {
        return Err(Error::domain(format!("dt = {dt} must divide |q| = {qa}")));
    }
    let gamma = psi.gamma().clone();
    let iota = psi.iota.as_f64();
    let xi2 = mixing.xi_poly().derivative_n(2);
    let xi02 = mixing.xi0_poly().derivative_n(2);
    let xi_prime = mixing.xi_poly().derivative();
    let xi0_prime = mixing.xi0_poly().derivative();

    let ws: Vec<f64> = (0..steps).map(|i| i as f64 * dt).collect();
    struct Step {
        gamma: f64,
        t11: f64,
        t12: f64,
        sqrt_dt: [[f64; 2]; 2],
        level: Option<usize>,
    }
    let step_tab: Vec<Step> = ws
        .iter()
        .map(|&w| {
            let d = xi2.eval(w);
            let o = iota * xi02.eval(iota * w);
            Step {
                gamma: gamma.value(w),
                t11: d,
                t12: o,
                sqrt_dt: sym_sqrt(d * dt, o * dt),
                level: psi.find_level(w),
            }
        })
        .collect();
    // Root field covariance (diag ξ'(0), off-diag ι ξ0'(0)).
    let root = sym_sqrt(xi_prime.eval(0.0), iota * xi0_prime.eval(0.0));
    let random_fb = RandomFeedback::draw(match policy {
        Policy2::RandomAdmissible { seed } => seed,
        _ => 0,
    });

    let batches = batch_count(paths);
    let pairs_total = paths / 2;
    let results: Vec<(Vec<f64>, f64)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng: ChaCha12Rng = stream(seed, &format!("control/2d/batch{b}"));
            let lo = pairs_total * b / batches;
            let hi = pairs_total * (b + 1) / batches;
            let mut pair_means = Vec::with_capacity(hi - lo);
            let mut max_preclip = 0.0f64;
            let mut normals = vec![(0.0f64, 0.0f64); steps + 1];
            for _ in lo..hi {
                for z in normals.iter_mut() {
                    *z = (
                        rng.sample::<f64, _>(StandardNormal),
                        rng.sample::<f64, _>(StandardNormal),
                    );
                }
                let mut pair_sum = 0.0;
                for &flip in &[1.0, -1.0] {
                    let (z1, z2) = normals[steps];
                    let mut x1 = flip * (root[0][0] * z1 + root[0][1] * z2);
                    let mut x2 = flip * (root[1][0] * z1 + root[1][1] * z2);
                    let mut cost = 0.0;
                    for (i, st) in step_tab.iter().enumerate() {
                        let (v1_raw, v2_raw) = match policy {
                            Policy2::OptimalFeedback => {
                                let g = match st.level {
                                    Some(idx) => psi.grad_at_level(idx, x1, x2),
                                    None => {
                                        return Err(Error::numeric(format!(
                                            "no stored 2-D level at w = {}; densify first",
                                            ws[i]
                                        )))
                                    }
                                };
                                (g[0], g[1])
                            }
                            Policy2::Constant(a, b) => (a, b),
                            Policy2::RandomAdmissible { .. } => (
                                random_fb.eval(ws[i], x1),
                                random_fb.eval(ws[i], x2),
                            ),
                        };
                        max_preclip = max_preclip.max(v1_raw.abs()).max(v2_raw.abs());
                        let v1 = v1_raw.clamp(-1.0, 1.0);
                        let v2 = v2_raw.clamp(-1.0, 1.0);
                        // ⟨Tv, v⟩ and T v for the symmetric 2×2 step matrix.
                        let tv1 = st.t11 * v1 + st.t12 * v2;
                        let tv2 = st.t12 * v1 + st.t11 * v2;
                        cost += 0.5 * st.gamma * (tv1 * v1 + tv2 * v2) * dt;
                        let (dz1, dz2) = normals[i];
                        x1 += st.gamma * tv1 * dt
                            + flip * (st.sqrt_dt[0][0] * dz1 + st.sqrt_dt[0][1] * dz2);
                        x2 += st.gamma * tv2 * dt
                            + flip * (st.sqrt_dt[1][0] * dz1 + st.sqrt_dt[1][1] * dz2);
                    }
                    pair_sum += psi.terminal_value(x1, x2) - cost;
                }
                pair_means.push(0.5 * pair_sum);
            }
            Ok((pair_means, max_preclip))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut pair_means = Vec::with_capacity(pairs_total);
    let mut max_preclip = 0.0f64;
    for (means, mp) in results {
        pair_means.extend(means);
        max_preclip = max_preclip.max(mp);
    }
    Ok(aggregate(pair_means, paths, dt, max_preclip))
}

#[derive(Debug, Clone)]
pub struct BcovProbe {
    pub w: f64,
    pub measured: f64,
    pub expected: f64,
    pub z_score: f64,
}

#[derive(Debug, Clone)]
pub struct Prop3Report {
    /// Time-and-path mean of (u_ℓ(w) - ∂_xΦ_{γ_P}(w, X_ℓ(w)))² per system.
    pub mean_sq_discrepancy: [f64; 2],
    pub max_abs_discrepancy: [f64; 2],
    /// Per-step checks of E((T^{1/2}ΔW)_1 - ι(T^{1/2}ΔW)_2)² = 2(ξ''-ξ0''(ιw))dt.
    pub bcov_probes: Vec<BcovProbe>,
    pub paths: usize,
    pub dt: f64,
}

/// Along optimal 2-D paths for γ_q, build the candidate 1-D maximizers
/// u_ℓ = (T v)_ℓ / (ξ'' + ξ0''(ιw)) and compare them pathwise with the true
/// 1-D feedback ∂_xΦ_{γ_P} driven by B_ℓ = ξ''^{-1/2}(T^{1/2}W)_ℓ.
/// Equality is expected only in the degenerate (decoupled) case; the
/// measured discrepancy is evidence of the strict chaos gap.
pub fn prop3_identity_check(
    mixing: &MixingPair,
    psi_gamma_q: &PsiSolution,
    phi_p: &PhiSolution,
    paths: usize,
    dt: f64,
    seed: u64,
) -> Result<Prop3Report> {
    let qa = psi_gamma_q.q.abs();
    if qa == 0.0 {
        return Err(Error::domain("needs q ≠ 0"));
    }
    let steps = (qa / dt).round() as usize;
    if steps == 0 || (steps as f64 * dt - qa).abs() > 1e-9 {
        return Err(Error::domain(format!("dt = {dt} must divide |q| = {qa}")));
    }
    let gamma_q = psi_gamma_q.gamma().clone();
    let gamma_p = phi_p.gamma().clone();
    let iota = psi_gamma_q.iota.as_f64();
    let xi2 = mixing.xi_poly().derivative_n(2);
    let xi02 = mixing.xi0_poly().derivative_n(2);

    let ws: Vec<f64> = (0..steps).map(|i| i as f64 * dt).collect();
    let probe_idx: Vec<usize> = [0, steps / 4, steps / 2, 3 * steps / 4, steps - 1]
        .into_iter()
        .collect();

    let batches = batch_count(paths);
    struct Acc {
        sq: [f64; 2],
        max_abs: [f64; 2],
        count: u64,
        probe_sum: Vec<f64>,
        probe_sq: Vec<f64>,
        probe_n: u64,
    }
    let results: Vec<Acc> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng: ChaCha12Rng = stream(seed, &format!("control/prop3/batch{b}"));
            let lo = paths * b / batches;
            let hi = paths * (b + 1) / batches;
            let mut acc = Acc {
                sq: [0.0; 2],
                max_abs: [0.0; 2],
                count: 0,
                probe_sum: vec![0.0; probe_idx.len()],
                probe_sq: vec![0.0; probe_idx.len()],
                probe_n: 0,
            };
            for _ in lo..hi {
                let mut x = [0.0f64; 2]; // 2-D optimal state
                let mut y = [0.0f64; 2]; // 1-D reference states
                acc.probe_n += 1;
                for (i, &w) in ws.iter().enumerate() {
                    let d = xi2.eval(w);
                    let o = iota * xi02.eval(iota * w);
                    let sq = sym_sqrt(d * dt, o * dt);
                    let g = match psi_gamma_q.find_level(w) {
                        Some(idx) => psi_gamma_q.grad_at_level(idx, x[0], x[1]),
                        None => {
                            return Err(Error::numeric(format!(
                                "no stored 2-D level at w = {w}; densify first"
                            )))
                        }
                    };
                    let v1 = g[0].clamp(-1.0, 1.0);
                    let v2 = g[1].clamp(-1.0, 1.0);
                    let tv1 = d * v1 + o * v2;
                    let tv2 = o * v1 + d * v2;
                    let denom = d + xi02.eval(iota * w);
                    let u1 = tv1 / denom;
                    let u2 = tv2 / denom;
                    // 1-D reference feedback at the B-driven states.
                    let phi_idx = phi_p.level_index(w);
                    let ref1 = match phi_idx {
                        Some(idx) => phi_p.dx_at_level(idx, y[0]),
                        None => phi_p.dx(w, y[0]),
                    };
                    let ref2 = match phi_idx {
                        Some(idx) => phi_p.dx_at_level(idx, y[1]),
                        None => phi_p.dx(w, y[1]),
                    };
                    let d1 = u1 - ref1;
                    let d2 = u2 - ref2;
                    acc.sq[0] += d1 * d1;
                    acc.sq[1] += d2 * d2;
                    acc.max_abs[0] = acc.max_abs[0].max(d1.abs());
                    acc.max_abs[1] = acc.max_abs[1].max(d2.abs());
                    acc.count += 1;

                    let z1: f64 = rng.sample(StandardNormal);
                    let z2: f64 = rng.sample(StandardNormal);
                    let n1 = sq[0][0] * z1 + sq[0][1] * z2; // (T^{1/2}ΔW)_1
                    let n2 = sq[1][0] * z1 + sq[1][1] * z2;
                    if let Some(p) = probe_idx.iter().position(|&pi| pi == i) {
                        let dd = n1 - iota * n2;
                        acc.probe_sum[p] += dd * dd;
                        acc.probe_sq[p] += dd * dd * dd * dd;
                    }
                    // Advance the 2-D optimal state.
                    let mq = gamma_q.value(w);
                    x[0] += mq * tv1 * dt + n1;
                    x[1] += mq * tv2 * dt + n2;
                    // Advance the 1-D states: dX = γ_P ξ'' ∂xΦ dw + √(ξ'') dB
                    // with dB_ℓ = (T^{1/2}ΔW)_ℓ/√ξ'', so the noise term is n_ℓ.
                    let mp = gamma_p.value(w);
                    y[0] += mp * d * ref1 * dt + n1;
                    y[1] += mp * d * ref2 * dt + n2;
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut sq = [0.0f64; 2];
    let mut max_abs = [0.0f64; 2];
    let mut count = 0u64;
    let mut probe_sum = vec![0.0; probe_idx.len()];
    let mut probe_sq = vec![0.0; probe_idx.len()];
    let mut probe_n = 0u64;
    for acc in results {
        sq[0] += acc.sq[0];
        sq[1] += acc.sq[1];
        max_abs[0] = max_abs[0].max(acc.max_abs[0]);
        max_abs[1] = max_abs[1].max(acc.max_abs[1]);
        count += acc.count;
        for (a, b) in probe_sum.iter_mut().zip(&acc.probe_sum) {
            *a += b;
        }
        for (a, b) in probe_sq.iter_mut().zip(&acc.probe_sq) {
            *a += b;
        }
        probe_n += acc.probe_n;
    }
    let bcov_probes = probe_idx
        .iter()
        .enumerate()
        .map(|(p, &i)| {
            let w = ws[i];
            let n = probe_n as f64;
            let mean = probe_sum[p] / n;
            let var = (probe_sq[p] / n - mean * mean).max(0.0);
            let se = (var / n).sqrt();
            let expected = 2.0 * (xi2.eval(w) - xi02.eval(iota * w)) * dt;
            BcovProbe {
                w,
                measured: mean,
                expected,
                z_score: if se > 0.0 { (mean - expected) / se } else { 0.0 },
            }
        })
        .collect();
    Ok(Prop3Report {
        mean_sq_discrepancy: [sq[0] / count as f64, sq[1] / count as f64],
        max_abs_discrepancy: max_abs,
        bcov_probes,
        paths,
        dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gtbound::{solve_psi, PsiGridParams};
    use crate::mixing::{CorrKind, StepGamma};
    use crate::parisi::{solve_phi, PdeGridParams};

    fn pure2() -> MixingPair {
        MixingPair::pure(2, 0.5, CorrKind::Scaled).unwrap()
    }

    #[test]
    fn zero_gamma_value_is_policy_independent() {
        // γ ≡ 0 kills drift and cost: every policy's value equals Φ(0,0).
        let m = pure2();
        let phi = solve_phi(&m, &StepGamma::zero(), &PdeGridParams::coarse()).unwrap();
        let expect = phi.value_at_origin();
        for policy in [
            Policy::OptimalFeedback,
            Policy::Constant(0.3),
            Policy::RandomAdmissible { seed: 5 },
        ] {
            let est = simulate_value_1d(&m, &phi, 1.0, policy, 4000, 0.01, 3).unwrap();
            assert!(
                (est.value - expect).abs() <= 3.0 * est.std_err.max(1e-4),
                "{policy:?}: {} vs {expect} (se {})",
                est.value,
                est.std_err
            );
        }
    }

    #[test]
    fn optimal_feedback_matches_pde_value() {
        let m = pure2();
        let gamma = StepGamma::constant(1.0).unwrap();
        let mut phi = solve_phi(&m, &gamma, &PdeGridParams::default()).unwrap();
        phi.densify(0.005).unwrap();
        let est =
            simulate_value_1d(&m, &phi, 1.0, Policy::OptimalFeedback, 20000, 0.005, 7).unwrap();
        let expect = phi.value_at_origin();
        assert!(
            (est.value - expect).abs() <= 3.0 * est.std_err,
            "{} vs {expect} (3se = {})",
            est.value,
            3.0 * est.std_err
        );
        // Gradient-derived policy respects the Lipschitz bound.
        assert!(est.max_preclip <= 1.0 + 1e-6, "preclip {}", est.max_preclip);
    }

    #[test]
    fn suboptimal_policies_stay_below() {
        let m = pure2();
        let gamma = StepGamma::constant(1.0).unwrap();
        let mut phi = solve_phi(&m, &gamma, &PdeGridParams::coarse()).unwrap();
        phi.densify(0.01).unwrap();
        let expect = phi.value_at_origin();
        for policy in [
            Policy::Constant(0.3),
            Policy::Constant(-0.8),
            Policy::RandomAdmissible { seed: 1 },
            Policy::RandomAdmissible { seed: 2 },
        ] {
            let est = simulate_value_1d(&m, &phi, 1.0, policy, 8000, 0.01, 11).unwrap();
            assert!(
                est.value <= expect + 3.0 * est.std_err,
                "{policy:?}: {} vs {expect}",
                est.value
            );
        }
    }

    #[test]
    fn halving_dt_is_consistent() {
        let m = pure2();
        let gamma = StepGamma::constant(0.8).unwrap();
        let mut phi = solve_phi(&m, &gamma, &PdeGridParams::coarse()).unwrap();
        phi.densify(0.005).unwrap();
        let a = simulate_value_1d(&m, &phi, 1.0, Policy::OptimalFeedback, 8000, 0.01, 13).unwrap();
        let b = simulate_value_1d(&m, &phi, 1.0, Policy::OptimalFeedback, 8000, 0.005, 14).unwrap();
        let tol = 2.0 * (a.std_err.powi(2) + b.std_err.powi(2)).sqrt();
        assert!(
            (a.value - b.value).abs() <= tol.max(2e-3),
            "{} vs {} (tol {tol})",
            a.value,
            b.value
        );
    }

    #[test]
    fn decoupled_2d_value_is_twice_1d() {
        // ξ0 ≡ 0: the pair decouples into two independent 1-D problems.
        let m = MixingPair::custom(&[0.0, 1.0], &[]).unwrap();
        let gamma = StepGamma::constant(0.7).unwrap();
        let params = PsiGridParams::coarse();
        let mut psi = solve_psi(&m, &gamma, 0.5, &params).unwrap();
        psi.densify(0.01).unwrap();
        let est =
            simulate_value_2d(&m, &psi, Policy2::OptimalFeedback, 8000, 0.01, 17).unwrap();
        let expect = psi.value_at_origin();
        assert!(
            (est.value - expect).abs() <= 3.0 * est.std_err.max(2e-3),
            "{} vs {expect} (se {})",
            est.value,
            est.std_err
        );
    }

    #[test]
    fn coupled_2d_optimal_and_suboptimal() {
        let m = pure2();
        let gamma = StepGamma::constant(1.0).unwrap();
        let params = PsiGridParams::coarse();
        let mut psi = solve_psi(&m, &gamma, 0.5, &params).unwrap();
        psi.densify(0.01).unwrap();
        let expect = psi.value_at_origin();
        let opt = simulate_value_2d(&m, &psi, Policy2::OptimalFeedback, 8000, 0.01, 19).unwrap();
        assert!(
            (opt.value - expect).abs() <= 3.0 * opt.std_err.max(2e-3),
            "{} vs {expect} (se {})",
            opt.value,
            opt.std_err
        );
        assert!(opt.max_preclip <= 1.0 + 1e-6);
        let sub =
            simulate_value_2d(&m, &psi, Policy2::RandomAdmissible { seed: 3 }, 8000, 0.01, 23)
                .unwrap();
        assert!(sub.value <= expect + 3.0 * sub.std_err);
    }

    #[test]
    fn prop3_decoupled_discrepancy_vanishes() {
        // ξ0 ≡ 0: u_ℓ = v_ℓ and B_ℓ = W_ℓ, so the 1-D reference reproduces
        // the 2-D optimal feedback pathwise up to grid error.
        let m = MixingPair::custom(&[0.0, 1.0], &[]).unwrap();
        let gamma = StepGamma::constant(0.7).unwrap();
        let params = PsiGridParams::coarse();
        let q = 0.5;
        let mut psi = solve_psi(&m, &gamma, q, &params).unwrap();
        psi.densify(0.01).unwrap();
        let mut phi = solve_phi(&m, &gamma, &params.phi).unwrap();
        phi.densify(0.01).unwrap();
        let rep = prop3_identity_check(&m, &psi, &phi, 400, 0.01, 29).unwrap();
        for l in 0..2 {
            assert!(
                rep.mean_sq_discrepancy[l] <= 1e-4,
                "msd {:?}",
                rep.mean_sq_discrepancy
            );
        }
        for probe in &rep.bcov_probes {
            assert!(probe.z_score.abs() <= 5.0, "{probe:?}");
        }
    }

    #[test]
    fn prop3_coupled_discrepancy_is_nonzero() {
        let m = pure2();
        let gamma_p = StepGamma::constant(1.0).unwrap();
        let q = 0.5;
        let gq = crate::mixing::GammaQ::new(&m, &gamma_p, q).unwrap();
        let gamma_q = gq.to_step(16).unwrap();
        let params = PsiGridParams::coarse();
        let mut psi = solve_psi(&m, &gamma_q, q, &params).unwrap();
        psi.densify(0.01).unwrap();
        let mut phi = solve_phi(&m, &gamma_p, &params.phi).unwrap();
        phi.densify(0.01).unwrap();
        let rep = prop3_identity_check(&m, &psi, &phi, 2000, 0.01, 31).unwrap();
        // Strict gap: the exchange construction cannot reproduce the 1-D
        // optimal feedback.
        assert!(
            rep.mean_sq_discrepancy[0] + rep.mean_sq_discrepancy[1] > 1e-4,
            "msd {:?}",
            rep.mean_sq_discrepancy
        );
        for probe in &rep.bcov_probes {
            assert!(probe.z_score.abs() <= 5.0, "{probe:?}");
            // Non-degenerate positive value 2(ξ'' - ξ0''(ιw))dt.
            assert!(probe.expected > 0.0);
        }
    }
}
