//! Ground-state search and near-maximizer chaos statistics.
//!
//! Exact maximization walks the hypercube in Gray-code order, updating the
//! energy through single-flip deltas of the multilinear form; candidate
//! maxima are re-evaluated from scratch so ties (e.g. the global flip for
//! even models) compare exactly. The balanced space is the fixed-magnetization
//! slice (Σσ = 0 for even N, 1 for odd N).

use rand::Rng;
use rayon::prelude::*;

use crate::diluted::{couple, ClauseModel, CoupleScheme};
use crate::energy::{Energy, MultilinearEnergy};
use crate::error::{Error, Result};
use crate::rng::stream;
use crate::spin::SpinConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Cube,
    Balanced,
}

impl Space {
    fn down_count(self, n: usize) -> Option<usize> {
        match self {
            Space::Cube => None,
            // Σσ = n - 2·down = 0 (even) or 1 (odd).
            Space::Balanced => Some(if n % 2 == 0 { n / 2 } else { (n - 1) / 2 }),
        }
    }

    fn contains(self, n: usize, mask: u64) -> bool {
        match self.down_count(n) {
            None => true,
            Some(d) => mask.count_ones() as usize == d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exact,
    Anneal,
}

#[derive(Debug, Clone)]
pub struct GroundStateResult {
    pub max_value: f64,
    /// Maximizers, capped; `total_maximizers` counts all of them.
    pub maximizers: Vec<SpinConfig>,
    pub total_maximizers: u64,
    pub capped: bool,
    pub space: Space,
    pub method: Method,
    /// Best-so-far per sweep (annealing only).
    pub best_trace: Vec<f64>,
}

const CUBE_LIMIT: usize = 26;
const BALANCED_LIMIT: usize = 28;
/// Candidates within this of the incremental max are re-evaluated exactly.
const TIE_EPS: f64 = 1e-6;

fn check_capacity(n: usize, space: Space) -> Result<()> {
    let limit = match space {
        Space::Cube => CUBE_LIMIT,
        Space::Balanced => BALANCED_LIMIT,
    };
    if n > limit {
        return Err(Error::capacity(format!(
            "exact enumeration limited to N ≤ {limit} for {space:?}, got {n}"
        )));
    }
    Ok(())
}

/// Visit every mask of the space in Gray-code order with its energy.
fn sweep(e: &MultilinearEnergy, space: Space, mut visit: impl FnMut(u64, f64)) {
    let n = e.num_spins();
    let total: u64 = 1u64 << n;
    let mut mask = 0u64;
    let mut energy = e.eval_mask(0);
    if space.contains(n, mask) {
        visit(mask, energy);
    }
    for i in 1..total {
        let spin = i.trailing_zeros() as usize;
        energy += e.flip_delta(mask, spin);
        mask ^= 1u64 << spin;
        if space.contains(n, mask) {
            visit(mask, energy);
        }
    }
}

/// Exhaustive maximization over the stated space.
pub fn exact_max(e: &MultilinearEnergy, space: Space, cap: usize) -> Result<GroundStateResult> {
    let n = e.num_spins();
    check_capacity(n, space)?;
    let mut max_val = f64::NEG_INFINITY;
    let mut members: Vec<u64> = Vec::new();
    let mut total = 0u64;
    sweep(e, space, |mask, inc| {
        if inc >= max_val - TIE_EPS {
            let exact = e.eval_mask(mask);
            if exact > max_val {
                max_val = exact;
                members.clear();
                members.push(mask);
                total = 1;
            } else if exact == max_val {
                total += 1;
                if members.len() < cap {
                    members.push(mask);
                }
            }
        }
    });
    if total == 0 {
        return Err(Error::domain(format!("space {space:?} is empty at N = {n}")));
    }
    Ok(GroundStateResult {
        max_value: max_val,
        capped: (total as usize) > members.len(),
        maximizers: members
            .into_iter()
            .map(|m| SpinConfig::from_neg_mask(n, m).unwrap())
            .collect(),
        total_maximizers: total,
        space,
        method: Method::Exact,
        best_trace: Vec::new(),
    })
}

/// All configurations with H(σ) ≥ max - N·slack, reservoir-capped.
#[derive(Debug, Clone)]
pub struct NearMaxSet {
    pub max_value: f64,
    pub threshold: f64,
    /// Down-spin masks of the members (uniform subsample if capped).
    pub members: Vec<u64>,
    pub total: u64,
    pub capped: bool,
}

pub fn near_max_set(
    e: &MultilinearEnergy,
    space: Space,
    slack: f64,
    cap: usize,
    rng: &mut impl Rng,
) -> Result<NearMaxSet> {
    if slack < 0.0 {
        return Err(Error::domain(format!("slack must be ≥ 0, got {slack}")));
    }
    let n = e.num_spins();
    let best = exact_max(e, space, 1)?;
    let threshold = best.max_value - n as f64 * slack;
    let mut members: Vec<u64> = Vec::new();
    let mut total = 0u64;
    sweep(e, space, |mask, inc| {
        let keep = if (inc - threshold).abs() <= TIE_EPS {
            e.eval_mask(mask) >= threshold
        } else {
            inc >= threshold
        };
        if keep {
            total += 1;
            if members.len() < cap {
                members.push(mask);
            } else {
                let j = rng.random_range(0..total);
                if (j as usize) < cap {
                    members[j as usize] = mask;
                }
            }
        }
    });
    Ok(NearMaxSet {
        max_value: best.max_value,
        threshold,
        capped: (total as usize) > members.len(),
        members,
        total,
    })
}

#[derive(Debug, Clone)]
pub struct AnnealSchedule {
    pub t_initial: f64,
    pub t_final: f64,
    pub sweeps: usize,
}

impl AnnealSchedule {
    pub fn new(t_initial: f64, t_final: f64, sweeps: usize) -> Result<Self> {
        if !(t_initial > t_final && t_final > 0.0) {
            return Err(Error::domain(format!(
                "schedule needs t_initial > t_final > 0, got {t_initial} / {t_final}"
            )));
        }
        if sweeps == 0 {
            return Err(Error::domain("schedule needs at least one sweep"));
        }
        Ok(AnnealSchedule {
            t_initial,
            t_final,
            sweeps,
        })
    }

    /// Geometric interpolation from t_initial down to t_final.
    fn temperature(&self, sweep: usize) -> f64 {
        if self.sweeps == 1 {
            return self.t_final;
        }
        let f = sweep as f64 / (self.sweeps - 1) as f64;
        self.t_initial * (self.t_final / self.t_initial).powf(f)
    }
}

/// Metropolis simulated annealing: single-spin flips on the cube, +/- pair
/// swaps on the balanced slice. Returns the best configuration seen.
pub fn anneal_max(
    e: &MultilinearEnergy,
    space: Space,
    schedule: &AnnealSchedule,
    rng: &mut impl Rng,
) -> Result<GroundStateResult> {
    let n = e.num_spins();
    if n == 0 {
        return Err(Error::domain("empty system"));
    }
    let mut mask: u64 = match space.down_count(n) {
        None => {
            if n == 64 {
                rng.random::<u64>()
            } else {
                rng.random_range(0..(1u64 << n))
            }
        }
        Some(d) => {
            let mut m = 0u64;
            let mut placed = 0;
            while placed < d {
                let i = rng.random_range(0..n);
                if m >> i & 1 == 0 {
                    m |= 1 << i;
                    placed += 1;
                }
            }
            m
        }
    };
    let mut energy = e.eval_mask(mask);
    let mut best_mask = mask;
    let mut best = energy;
    let mut trace = Vec::with_capacity(schedule.sweeps);
    for sweep_idx in 0..schedule.sweeps {
        let temp = schedule.temperature(sweep_idx);
        for _ in 0..n {
            match space {
                Space::Cube => {
                    let i = rng.random_range(0..n);
                    let delta = e.flip_delta(mask, i);
                    if delta >= 0.0 || rng.random::<f64>() < (delta / temp).exp() {
                        mask ^= 1 << i;
                        energy += delta;
                    }
                }
                Space::Balanced => {
                    let i = rng.random_range(0..n);
                    let j = rng.random_range(0..n);
                    if (mask >> i & 1) == (mask >> j & 1) {
                        continue;
                    }
                    let d1 = e.flip_delta(mask, i);
                    let d2 = e.flip_delta(mask ^ (1 << i), j);
                    let delta = d1 + d2;
                    if delta >= 0.0 || rng.random::<f64>() < (delta / temp).exp() {
                        mask ^= (1 << i) | (1 << j);
                        energy += delta;
                    }
                }
            }
            if energy > best {
                best_mask = mask;
                best = energy;
            }
        }
        // Periodic re-anchor kills incremental drift.
        energy = e.eval_mask(mask);
        trace.push(best);
    }
    best = e.eval_mask(best_mask);
    Ok(GroundStateResult {
        max_value: best,
        maximizers: vec![SpinConfig::from_neg_mask(n, best_mask)?],
        total_maximizers: 1,
        capped: false,
        space,
        method: Method::Anneal,
        best_trace: trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverlapMode {
    /// Maximize over |R| > ε.
    Greater,
    /// Maximize over |R| ≤ ε.
    Leq,
}

const JOINT_LIMIT: usize = 14;

/// max over pairs with the overlap constraint of H¹(σ¹) + H²(σ²), by double
/// enumeration with popcount overlaps and per-σ¹ pruning.
pub fn joint_constrained_max(
    e1: &MultilinearEnergy,
    e2: &MultilinearEnergy,
    eps: f64,
    mode: OverlapMode,
) -> Result<f64> {
    let n = e1.num_spins();
    if e2.num_spins() != n {
        return Err(Error::domain("systems must share N"));
    }
    if n > JOINT_LIMIT {
        return Err(Error::capacity(format!(
            "joint enumeration limited to N ≤ {JOINT_LIMIT}, got {n}"
        )));
    }
    let size = 1usize << n;
    let mut h1 = vec![0.0f64; size];
    let mut h2 = vec![0.0f64; size];
    sweep(e1, Space::Cube, |mask, v| h1[mask as usize] = v);
    sweep(e2, Space::Cube, |mask, v| h2[mask as usize] = v);
    let max_h2 = h2.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let mut order: Vec<u32> = (0..size as u32).collect();
    order.sort_by(|&a, &b| h1[b as usize].partial_cmp(&h1[a as usize]).unwrap());

    let nf = n as f64;
    let bound = eps * nf;
    let mut best = f64::NEG_INFINITY;
    let mut found = false;
    for &m1 in &order {
        let base = h1[m1 as usize];
        if found && base + max_h2 <= best {
            break; // sorted: no later σ¹ can beat the incumbent
        }
        for (m2, &v2) in h2.iter().enumerate() {
            let d = (m1 ^ m2 as u32).count_ones() as f64;
            let r_abs = (nf - 2.0 * d).abs();
            let ok = match mode {
                OverlapMode::Greater => r_abs > bound,
                OverlapMode::Leq => r_abs <= bound,
            };
            if ok {
                found = true;
                let v = base + v2;
                if v > best {
                    best = v;
                }
            }
        }
    }
    if !found {
        return Err(Error::EmptyConstraint(format!(
            "no pair satisfies the overlap constraint (ε = {eps}, {mode:?})"
        )));
    }
    Ok(best)
}

/// Parameters of a disorder-chaos experiment on coupled diluted instances.
#[derive(Debug, Clone)]
pub struct ChaosParams {
    pub scheme: CoupleScheme,
    pub model: ClauseModel,
    pub k: u32,
    pub n: usize,
    pub t: f64,
    pub lambdas: Vec<f64>,
    /// Near-maximizer slack is η√λ per spin.
    pub eta: f64,
    /// Reference orthogonality threshold carried into the report.
    pub epsilon: f64,
    pub replicas: usize,
    /// Per-set member cap (uniform subsample beyond it).
    pub set_cap: usize,
    /// Max number of cross pairs streamed; sets are subsampled to fit.
    pub pair_budget: u64,
}

impl ChaosParams {
    pub fn space(&self) -> Space {
        match self.model {
            ClauseModel::Antiferro => Space::Balanced,
            _ => Space::Cube,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChaosStat {
    pub lambda: f64,
    pub replica: usize,
    pub eta: f64,
    pub epsilon: f64,
    pub max_abs_overlap: f64,
    pub set1_size: u64,
    pub set2_size: u64,
    pub capped: bool,
    /// Share of streamed cross pairs with |R| > ε.
    pub frac_above_eps: f64,
    /// |R| quantiles (5%, 25%, 50%, 75%, 95%) over streamed cross pairs.
    pub quantiles: [f64; 5],
}

#[derive(Debug, Clone)]
pub struct ChaosRun {
    pub stats: Vec<ChaosStat>,
    /// (λ, median over replicas of max |R|).
    pub medians: Vec<(f64, f64)>,
}

/// Streaming maximum of |R| over the cross product of two mask sets, with
/// bit-packed dot products. Returns (max |R|, fraction above ε, quantiles).
fn cross_overlap_stats(
    n: usize,
    set1: &[u64],
    set2: &[u64],
    eps: f64,
    sample_rng: &mut impl Rng,
) -> (f64, f64, [f64; 5]) {
    let nf = n as f64;
    let mut max_abs = 0.0f64;
    let mut above = 0u64;
    let mut count = 0u64;
    const QUANT_CAP: usize = 4096;
    let mut sample: Vec<f64> = Vec::with_capacity(QUANT_CAP);
    for &m1 in set1 {
        for &m2 in set2 {
            let d = (m1 ^ m2).count_ones() as f64;
            let r_abs = (nf - 2.0 * d).abs() / nf;
            if r_abs > max_abs {
                max_abs = r_abs;
            }
            count += 1;
            if r_abs > eps {
                above += 1;
            }
            if sample.len() < QUANT_CAP {
                sample.push(r_abs);
            } else {
                let j = sample_rng.random_range(0..count);
                if (j as usize) < QUANT_CAP {
                    sample[j as usize] = r_abs;
                }
            }
        }
    }
    sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let quantile = |p: f64| -> f64 {
        if sample.is_empty() {
            return f64::NAN;
        }
        let idx = ((sample.len() - 1) as f64 * p).round() as usize;
        sample[idx]
    };
    (
        max_abs,
        above as f64 / count.max(1) as f64,
        [
            quantile(0.05),
            quantile(0.25),
            quantile(0.50),
            quantile(0.75),
            quantile(0.95),
        ],
    )
}

fn subsample_to_budget(set: &mut Vec<u64>, target: usize, rng: &mut impl Rng) {
    if set.len() <= target {
        return;
    }
    for i in 0..target {
        let j = rng.random_range(i..set.len());
        set.swap(i, j);
    }
    set.truncate(target);
}

/// One replica of the chaos experiment at a given λ.
fn chaos_replica(params: &ChaosParams, lambda: f64, seed: u64) -> Result<ChaosStat> {
    let pair = couple(
        params.scheme,
        params.t,
        params.model,
        params.k,
        params.n,
        lambda,
        seed,
    )?;
    let e1 = pair.first.to_multilinear()?;
    let e2 = pair.second.to_multilinear()?;
    let slack = params.eta * lambda.sqrt();
    let space = params.space();
    let mut rng = stream(seed, "chaos/replica-aux");
    let s1 = near_max_set(&e1, space, slack, params.set_cap, &mut rng)?;
    let s2 = near_max_set(&e2, space, slack, params.set_cap, &mut rng)?;
    let mut m1 = s1.members.clone();
    let mut m2 = s2.members.clone();
    let mut capped = s1.capped || s2.capped;
    // Keep the streamed product within budget, subsampling the larger side
    // first.
    while (m1.len() as u64) * (m2.len() as u64) > params.pair_budget {
        capped = true;
        if m1.len() >= m2.len() {
            let target = (params.pair_budget / m2.len().max(1) as u64) as usize;
            subsample_to_budget(&mut m1, target.max(1), &mut rng);
        } else {
            let target = (params.pair_budget / m1.len().max(1) as u64) as usize;
            subsample_to_budget(&mut m2, target.max(1), &mut rng);
        }
    }
    let (max_abs, frac_above, quantiles) =
        cross_overlap_stats(params.n, &m1, &m2, params.epsilon, &mut rng);
    Ok(ChaosStat {
        lambda,
        replica: 0,
        eta: params.eta,
        epsilon: params.epsilon,
        max_abs_overlap: max_abs,
        set1_size: s1.total,
        set2_size: s2.total,
        capped,
        frac_above_eps: frac_above,
        quantiles,
    })
}

/// Full experiment: replicas × λ grid, aggregated per-λ medians.
pub fn chaos_experiment(params: &ChaosParams, master_seed: u64) -> Result<ChaosRun> {
    check_capacity(params.n, params.space())?;
    let mut stats: Vec<ChaosStat> = Vec::new();
    for (li, &lambda) in params.lambdas.iter().enumerate() {
        let per_lambda: Result<Vec<ChaosStat>> = (0..params.replicas)
            .into_par_iter()
            .map(|r| {
                let seed = crate::rng::derive_seed(
                    master_seed,
                    &format!("chaos/lambda{li}/replica{r}"),
                );
                let mut stat = chaos_replica(params, lambda, seed)?;
                stat.replica = r;
                Ok(stat)
            })
            .collect();
        stats.extend(per_lambda?);
    }
    let mut medians = Vec::new();
    for &lambda in &params.lambdas {
        let mut vals: Vec<f64> = stats
            .iter()
            .filter(|s| s.lambda == lambda)
            .map(|s| s.max_abs_overlap)
            .collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = if vals.is_empty() {
            f64::NAN
        } else if vals.len() % 2 == 1 {
            vals[vals.len() / 2]
        } else {
            0.5 * (vals[vals.len() / 2 - 1] + vals[vals.len() / 2])
        };
        medians.push((lambda, median));
    }
    Ok(ChaosRun { stats, medians })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diluted::{sample_instance, Clause, DilutedInstance};
    use crate::energy::{Energy, MultilinearBuilder};
    use approx::assert_abs_diff_eq;

    fn ksat_empty(n: usize) -> MultilinearEnergy {
        MultilinearBuilder::new().build(n).unwrap()
    }

    #[test]
    fn exact_max_no_clauses_is_whole_cube() {
        let e = ksat_empty(5);
        let r = exact_max(&e, Space::Cube, 64).unwrap();
        assert_eq!(r.max_value, 0.0);
        assert_eq!(r.total_maximizers, 32);
        assert!(!r.capped);
        let r = exact_max(&e, Space::Cube, 8).unwrap();
        assert_eq!(r.total_maximizers, 32);
        assert_eq!(r.maximizers.len(), 8);
        assert!(r.capped);
    }

    #[test]
    fn exact_max_antiferro_edge_balanced() {
        let inst = DilutedInstance {
            model: ClauseModel::Antiferro,
            k: 2,
            n: 2,
            lambda: 1.0,
            seed: 0,
            clauses: vec![Clause {
                indices: vec![1, 2],
                signs: vec![1, 1],
            }],
        };
        let e = inst.to_multilinear().unwrap();
        let r = exact_max(&e, Space::Balanced, 8).unwrap();
        assert_eq!(r.max_value, 1.0);
        assert_eq!(r.total_maximizers, 2);
        let signs: Vec<Vec<i8>> = r.maximizers.iter().map(|m| m.to_signs()).collect();
        assert!(signs.contains(&vec![1, -1]) && signs.contains(&vec![-1, 1]));
    }

    #[test]
    fn exact_max_matches_naive_enumeration() {
        let inst = sample_instance(ClauseModel::KSpin, 3, 12, 2.0, 21).unwrap();
        let e = inst.to_multilinear().unwrap();
        let r = exact_max(&e, Space::Cube, 4).unwrap();
        // Independent oracle: direct clause-sum evaluation per mask.
        let mut best = f64::NEG_INFINITY;
        for mask in 0..(1u64 << 12) {
            let sigma = SpinConfig::from_neg_mask(12, mask).unwrap();
            best = best.max(crate::diluted::hamiltonian(&inst, &sigma).unwrap());
        }
        assert_abs_diff_eq!(r.max_value, best, epsilon = 1e-9);
    }

    #[test]
    fn cube_max_dominates_balanced() {
        for seed in 0..5 {
            let inst = sample_instance(ClauseModel::Ksat, 2, 10, 2.0, 100 + seed).unwrap();
            let e = inst.to_multilinear().unwrap();
            let cube = exact_max(&e, Space::Cube, 1).unwrap();
            let bal = exact_max(&e, Space::Balanced, 1).unwrap();
            assert!(cube.max_value >= bal.max_value);
        }
    }

    #[test]
    fn flip_symmetry_for_even_models() {
        let inst = sample_instance(ClauseModel::KSpin, 2, 10, 1.5, 3).unwrap();
        let e = inst.to_multilinear().unwrap();
        let r = exact_max(&e, Space::Cube, 1 << 12).unwrap();
        assert!(!r.capped);
        for m in &r.maximizers {
            let flipped = m.flipped();
            assert_abs_diff_eq!(e.eval(&flipped).unwrap(), r.max_value);
            assert!(r.maximizers.contains(&flipped));
        }
    }

    #[test]
    fn near_max_monotone_and_extremes() {
        let inst = sample_instance(ClauseModel::Ksat, 3, 10, 2.0, 8).unwrap();
        let e = inst.to_multilinear().unwrap();
        let mut rng = stream(0, "test/nms");
        let zero = near_max_set(&e, Space::Cube, 0.0, 1 << 20, &mut rng).unwrap();
        let exact = exact_max(&e, Space::Cube, 1 << 20).unwrap();
        assert_eq!(zero.total, exact.total_maximizers);

        let huge = near_max_set(&e, Space::Cube, 1e9, 1 << 20, &mut rng).unwrap();
        assert_eq!(huge.total, 1 << 10);

        let small = near_max_set(&e, Space::Cube, 0.05, 1 << 20, &mut rng).unwrap();
        let big = near_max_set(&e, Space::Cube, 0.10, 1 << 20, &mut rng).unwrap();
        assert!(small.total <= big.total);
        for m in &small.members {
            assert!(big.members.contains(m));
        }
        // Brute-force filter oracle.
        let count = (0..(1u64 << 10))
            .filter(|&mask| e.eval_mask(mask) >= small.threshold)
            .count() as u64;
        assert_eq!(small.total, count);
    }

    #[test]
    fn anneal_trivial_and_matches_exact() {
        let e = ksat_empty(8);
        let sched = AnnealSchedule::new(2.0, 0.05, 50).unwrap();
        let mut rng = stream(1, "test/anneal0");
        let r = anneal_max(&e, Space::Cube, &sched, &mut rng).unwrap();
        assert_eq!(r.max_value, 0.0);

        let inst = sample_instance(ClauseModel::KSpin, 2, 16, 3.0, 77).unwrap();
        let e = inst.to_multilinear().unwrap();
        let truth = exact_max(&e, Space::Cube, 1).unwrap();
        let sched = AnnealSchedule::new(3.0, 0.02, 400).unwrap();
        let mut hits = 0;
        let runs = 100;
        for i in 0..runs {
            let mut rng = stream(i, "test/anneal");
            let r = anneal_max(&e, Space::Cube, &sched, &mut rng).unwrap();
            assert!(r.max_value <= truth.max_value + 1e-9);
            // Monotone best-so-far trace.
            assert!(r.best_trace.windows(2).all(|w| w[1] >= w[0]));
            if (r.max_value - truth.max_value).abs() <= 1e-9 {
                hits += 1;
            }
        }
        assert!(hits >= 95, "only {hits}/{runs} annealing runs hit the max");
    }

    #[test]
    fn balanced_anneal_preserves_magnetization() {
        let inst = sample_instance(ClauseModel::Antiferro, 2, 11, 2.0, 5).unwrap();
        let e = inst.to_multilinear().unwrap();
        let sched = AnnealSchedule::new(2.0, 0.05, 60).unwrap();
        let mut rng = stream(2, "test/anneal-bal");
        let r = anneal_max(&e, Space::Balanced, &sched, &mut rng).unwrap();
        assert_eq!(r.maximizers[0].magnetization_sum(), 1);
    }

    #[test]
    fn joint_constrained_identical_systems() {
        let inst = sample_instance(ClauseModel::KSpin, 2, 8, 2.0, 13).unwrap();
        let e = inst.to_multilinear().unwrap();
        let max = exact_max(&e, Space::Cube, 1).unwrap().max_value;
        let joint = joint_constrained_max(&e, &e, 0.5, OverlapMode::Greater).unwrap();
        assert_abs_diff_eq!(joint, 2.0 * max, epsilon = 1e-9);
    }

    #[test]
    fn joint_constrained_empty_set_errors() {
        let e = ksat_empty(6);
        assert!(matches!(
            joint_constrained_max(&e, &e, 1.0, OverlapMode::Greater),
            Err(Error::EmptyConstraint(_))
        ));
    }

    #[test]
    fn joint_constrained_matches_double_loop() {
        let a = sample_instance(ClauseModel::Ksat, 2, 10, 1.5, 31).unwrap();
        let b = sample_instance(ClauseModel::Ksat, 2, 10, 1.5, 32).unwrap();
        let e1 = a.to_multilinear().unwrap();
        let e2 = b.to_multilinear().unwrap();
        for (eps, mode) in [
            (0.3, OverlapMode::Greater),
            (0.3, OverlapMode::Leq),
            (0.0, OverlapMode::Greater),
        ] {
            let fast = joint_constrained_max(&e1, &e2, eps, mode).unwrap();
            let mut naive = f64::NEG_INFINITY;
            for m1 in 0..(1u64 << 10) {
                for m2 in 0..(1u64 << 10) {
                    let r = (10.0 - 2.0 * (m1 ^ m2).count_ones() as f64).abs() / 10.0;
                    let ok = match mode {
                        OverlapMode::Greater => r > eps,
                        OverlapMode::Leq => r <= eps,
                    };
                    if ok {
                        naive = naive.max(e1.eval_mask(m1) + e2.eval_mask(m2));
                    }
                }
            }
            assert_abs_diff_eq!(fast, naive, epsilon = 1e-9);
        }
    }

    #[test]
    fn chaos_near_unit_t_shares_maximizers() {
        let params = ChaosParams {
            scheme: CoupleScheme::SignsB,
            model: ClauseModel::KSpin,
            k: 2,
            n: 12,
            t: 1.0 - 1e-9,
            lambdas: vec![2.0],
            eta: 0.05,
            epsilon: 0.5,
            replicas: 4,
            set_cap: 1 << 16,
            pair_budget: 1 << 24,
        };
        let run = chaos_experiment(&params, 99).unwrap();
        assert_eq!(run.stats.len(), 4);
        for s in &run.stats {
            assert_abs_diff_eq!(s.max_abs_overlap, 1.0);
        }
        assert_eq!(run.medians.len(), 1);
        assert_abs_diff_eq!(run.medians[0].1, 1.0);
    }

    #[test]
    fn chaos_row_shape() {
        let params = ChaosParams {
            scheme: CoupleScheme::ResampleClauses,
            model: ClauseModel::Antiferro,
            k: 2,
            n: 10,
            t: 0.5,
            lambdas: vec![1.0, 2.0, 4.0],
            eta: 0.1,
            epsilon: 0.4,
            replicas: 2,
            set_cap: 1 << 12,
            pair_budget: 1 << 20,
        };
        let run = chaos_experiment(&params, 7).unwrap();
        assert_eq!(run.stats.len(), 6);
        assert_eq!(run.medians.len(), 3);
        for s in &run.stats {
            assert!(s.max_abs_overlap >= 0.0 && s.max_abs_overlap <= 1.0);
            assert!(s.set1_size > 0 && s.set2_size > 0);
        }
    }

    #[test]
    fn near_max_threshold_boundary_uses_exact_eval() {
        let inst = sample_instance(ClauseModel::KSpin, 2, 8, 2.0, 55).unwrap();
        let e = inst.to_multilinear().unwrap();
        let mut rng = stream(3, "test/edge");
        // Slack lands the threshold exactly on an integer energy level.
        let s = near_max_set(&e, Space::Cube, 2.0 / 8.0, 1 << 16, &mut rng).unwrap();
        for &m in &s.members {
            assert!(e.eval_mask(m) >= s.threshold - 1e-12);
        }
    }
}
