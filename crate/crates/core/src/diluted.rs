//! Diluted clause models: sampling, evaluation, coupling, and the exact
//! sign-average oracles.
//!
//! An instance realizes H(σ) = Σ_{j ≤ π(λN)} θ_j(σ_{i_1,j}, …, σ_{i_K,j})
//! with Poisson(λN) clauses whose coordinate indices are uniform on
//! {1,…,N} with replacement. Three clause types are supported:
//!
//! - antiferro: θ = -σ_1⋯σ_K (non-random, K even),
//! - kspin:     θ = J σ_1⋯σ_K with a Rademacher J,
//! - ksat:      θ = -Π_k (1+J_k σ_k)/2 ∈ {-1, 0}.

use num_rational::Ratio;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::rng::stream;
use crate::spin::SpinConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClauseModel {
    Antiferro,
    KSpin,
    Ksat,
}

impl ClauseModel {
    pub fn name(self) -> &'static str {
        match self {
            ClauseModel::Antiferro => "antiferro",
            ClauseModel::KSpin => "kspin",
            ClauseModel::Ksat => "ksat",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "antiferro" => Ok(ClauseModel::Antiferro),
            "kspin" => Ok(ClauseModel::KSpin),
            "ksat" => Ok(ClauseModel::Ksat),
            other => Err(Error::parse(format!("unknown model `{other}`"))),
        }
    }
}

/// One clause: K coordinate indices (1-based, repeats allowed) and K signs.
/// Antiferro ignores the signs; kspin reads signs[0] as its J.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub indices: Vec<u32>,
    pub signs: Vec<i8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DilutedInstance {
    pub model: ClauseModel,
    pub k: u32,
    pub n: usize,
    pub lambda: f64,
    pub seed: u64,
    pub clauses: Vec<Clause>,
}

/// θ(σ_1,…,σ_K) for one clause.
pub fn theta_eval(model: ClauseModel, k: u32, signs: &[i8], spins: &[i8]) -> Result<f64> {
    if spins.len() != k as usize {
        return Err(Error::domain(format!(
            "expected {k} spins, got {}",
            spins.len()
        )));
    }
    if spins.iter().any(|&s| s != 1 && s != -1) {
        return Err(Error::domain("spins must be ±1"));
    }
    match model {
        ClauseModel::Antiferro => {
            let prod: i32 = spins.iter().map(|&s| s as i32).product();
            Ok(-prod as f64)
        }
        ClauseModel::KSpin => {
            let j = *signs.first().ok_or_else(|| Error::domain("kspin clause needs a sign"))?;
            if j != 1 && j != -1 {
                return Err(Error::domain("signs must be ±1"));
            }
            let prod: i32 = spins.iter().map(|&s| s as i32).product();
            Ok((j as i32 * prod) as f64)
        }
        ClauseModel::Ksat => {
            if signs.len() != k as usize {
                return Err(Error::domain(format!(
                    "ksat clause needs {k} signs, got {}",
                    signs.len()
                )));
            }
            if signs.iter().any(|&s| s != 1 && s != -1) {
                return Err(Error::domain("signs must be ±1"));
            }
            let mut prod = 1.0;
            for (&j, &s) in signs.iter().zip(spins) {
                prod *= (1 + j as i32 * s as i32) as f64 / 2.0;
            }
            Ok(-prod)
        }
    }
}

fn validate_params(model: ClauseModel, k: u32, n: usize, lambda: f64) -> Result<()> {
    if k < 2 {
        return Err(Error::domain(format!("K ≥ 2 required, got {k}")));
    }
    if model == ClauseModel::Antiferro && k % 2 != 0 {
        return Err(Error::domain("antiferro model requires even K"));
    }
    if n == 0 {
        return Err(Error::domain("N ≥ 1 required"));
    }
    if !(lambda > 0.0) {
        return Err(Error::domain(format!("λ > 0 required, got {lambda}")));
    }
    Ok(())
}

fn sample_clauses(
    rng: &mut impl Rng,
    count: usize,
    k: u32,
    n: usize,
) -> Vec<Clause> {
    (0..count)
        .map(|_| Clause {
            indices: (0..k).map(|_| rng.random_range(1..=n as u32)).collect(),
            signs: (0..k)
                .map(|_| if rng.random_bool(0.5) { 1 } else { -1 })
                .collect(),
        })
        .collect()
}

fn poisson_count(rng: &mut impl Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let p = Poisson::new(mean).expect("positive finite mean");
    p.sample(rng) as usize
}

/// Sample one instance. Clause count ~ Poisson(λN), indices uniform with
/// replacement, signs i.i.d. Rademacher.
pub fn sample_instance(
    model: ClauseModel,
    k: u32,
    n: usize,
    lambda: f64,
    seed: u64,
) -> Result<DilutedInstance> {
    validate_params(model, k, n, lambda)?;
    let mut rng = stream(seed, "diluted/instance");
    let count = poisson_count(&mut rng, lambda * n as f64);
    let clauses = sample_clauses(&mut rng, count, k, n);
    Ok(DilutedInstance {
        model,
        k,
        n,
        lambda,
        seed,
        clauses,
    })
}

/// H(σ) = Σ_j θ_j(σ).
pub fn hamiltonian(inst: &DilutedInstance, sigma: &SpinConfig) -> Result<f64> {
    if sigma.len() != inst.n {
        return Err(Error::domain(format!(
            "configuration length {} ≠ N = {}",
            sigma.len(),
            inst.n
        )));
    }
    let mut total = 0.0;
    let mut spins = vec![0i8; inst.k as usize];
    for clause in &inst.clauses {
        for (slot, &idx) in spins.iter_mut().zip(&clause.indices) {
            *slot = sigma.spin(idx as usize - 1);
        }
        total += theta_eval(inst.model, inst.k, &clause.signs, &spins)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoupleScheme {
    /// Poisson(tλN) shared clauses plus independent Poisson((1-t)λN) tails.
    ResampleClauses,
    /// Same clauses and indices; per clause all signs kept with probability t,
    /// otherwise the second copy's signs are resampled simultaneously.
    SignsA,
    /// Same clauses and indices; each sign kept with probability (1+t)/2 and
    /// flipped otherwise, independently, so E J¹J² = t.
    SignsB,
}

impl CoupleScheme {
    pub fn name(self) -> &'static str {
        match self {
            CoupleScheme::ResampleClauses => "resample-clauses",
            CoupleScheme::SignsA => "signs-a",
            CoupleScheme::SignsB => "signs-b",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "resample-clauses" => Ok(CoupleScheme::ResampleClauses),
            "signs-a" => Ok(CoupleScheme::SignsA),
            "signs-b" => Ok(CoupleScheme::SignsB),
            other => Err(Error::parse(format!("unknown coupling scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CoupledPair {
    pub scheme: CoupleScheme,
    pub t: f64,
    pub first: DilutedInstance,
    pub second: DilutedInstance,
    /// For resample-clauses: how many leading clauses are shared verbatim.
    pub common_len: usize,
}

/// Couple two instances. Both marginals are distributed exactly as
/// [`sample_instance`] at the full λ.
pub fn couple(
    scheme: CoupleScheme,
    t: f64,
    model: ClauseModel,
    k: u32,
    n: usize,
    lambda: f64,
    seed: u64,
) -> Result<CoupledPair> {
    validate_params(model, k, n, lambda)?;
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::domain(format!("t ∈ (0,1) required, got {t}")));
    }
    if scheme != CoupleScheme::ResampleClauses && model == ClauseModel::Antiferro {
        return Err(Error::domain(
            "antiferro clauses carry no signs; couple via resample-clauses",
        ));
    }

    let inst = |clauses: Vec<Clause>| DilutedInstance {
        model,
        k,
        n,
        lambda,
        seed,
        clauses,
    };

    match scheme {
        CoupleScheme::ResampleClauses => {
            // Separate streams keep the common block bitwise identical and
            // each part independently reproducible.
            let mut rng_c = stream(seed, "diluted/couple/common");
            let common_count = poisson_count(&mut rng_c, t * lambda * n as f64);
            let common = sample_clauses(&mut rng_c, common_count, k, n);
            let mut clauses1 = common.clone();
            let mut clauses2 = common;
            let mut rng_1 = stream(seed, "diluted/couple/private1");
            let c1 = poisson_count(&mut rng_1, (1.0 - t) * lambda * n as f64);
            clauses1.extend(sample_clauses(&mut rng_1, c1, k, n));
            let mut rng_2 = stream(seed, "diluted/couple/private2");
            let c2 = poisson_count(&mut rng_2, (1.0 - t) * lambda * n as f64);
            clauses2.extend(sample_clauses(&mut rng_2, c2, k, n));
            Ok(CoupledPair {
                scheme,
                t,
                first: inst(clauses1),
                second: inst(clauses2),
                common_len: common_count,
            })
        }
        CoupleScheme::SignsA | CoupleScheme::SignsB => {
            let mut rng = stream(seed, "diluted/couple/base");
            let count = poisson_count(&mut rng, lambda * n as f64);
            let first = sample_clauses(&mut rng, count, k, n);
            let mut rng_r = stream(seed, "diluted/couple/resample");
            let second: Vec<Clause> = first
                .iter()
                .map(|c| {
                    let signs = match scheme {
                        CoupleScheme::SignsA => {
                            if rng_r.random_bool(t) {
                                c.signs.clone()
                            } else {
                                (0..k)
                                    .map(|_| if rng_r.random_bool(0.5) { 1 } else { -1 })
                                    .collect()
                            }
                        }
                        CoupleScheme::SignsB => c
                            .signs
                            .iter()
                            .map(|&j| {
                                if rng_r.random_bool((1.0 + t) / 2.0) {
                                    j
                                } else {
                                    -j
                                }
                            })
                            .collect(),
                        CoupleScheme::ResampleClauses => unreachable!(),
                    };
                    Clause {
                        indices: c.indices.clone(),
                        signs,
                    }
                })
                .collect();
            Ok(CoupledPair {
                scheme,
                t,
                first: inst(first),
                second: inst(second),
                common_len: 0,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentCase {
    /// Both factors use the same copy of the signs.
    SameCopy,
    /// Signs resampled simultaneously with probability 1-t.
    CaseA,
    /// Each sign resampled independently with probability 1-t.
    CaseB,
}

type Rat = Ratio<i128>;

fn rademacher_products(k: u32, signs: &mut Vec<i8>, f: &mut impl FnMut(&[i8])) {
    if signs.len() == k as usize {
        f(signs);
        return;
    }
    for s in [1i8, -1] {
        signs.push(s);
        rademacher_products(k, signs, f);
        signs.pop();
    }
}

fn clause_weight(signs: &[i8], spins: &[i8]) -> Rat {
    let mut w = Rat::from_integer(1);
    for (&j, &s) in signs.iter().zip(spins) {
        w *= Rat::new((1 + j as i128 * s as i128) as i128, 2);
    }
    w
}

/// Exact average, over the sign-coupling law, of
/// Π_k (1+J¹_k σ¹_k)/2 · (1+J²_k σ²_k)/2, by exhaustive enumeration of all
/// sign assignments with rational weights.
pub fn sign_moment_enumerate_exact(
    case: MomentCase,
    k: u32,
    t: Rat,
    sigma1: &[i8],
    sigma2: &[i8],
) -> Result<Rat> {
    if sigma1.len() != k as usize || sigma2.len() != k as usize {
        return Err(Error::domain("σ tuples must have length K"));
    }
    if sigma1.iter().chain(sigma2).any(|&s| s != 1 && s != -1) {
        return Err(Error::domain("spins must be ±1"));
    }
    let half = Rat::new(1, 2);
    let mut total = Rat::from_integer(0);
    let mut j1 = Vec::with_capacity(k as usize);
    rademacher_products(k, &mut j1, &mut |j1: &[i8]| {
        let p1 = half.pow(k as i32); // uniform law of J¹
        let w1 = clause_weight(j1, sigma1);
        match case {
            MomentCase::SameCopy => {
                total += p1 * w1 * clause_weight(j1, sigma2);
            }
            MomentCase::CaseA => {
                // With probability t, J² = J¹; otherwise J² fresh uniform.
                let kept = w1.clone() * clause_weight(j1, sigma2);
                let mut fresh = Rat::from_integer(0);
                let mut j2 = Vec::with_capacity(k as usize);
                rademacher_products(k, &mut j2, &mut |j2: &[i8]| {
                    fresh += half.pow(k as i32) * clause_weight(j2, sigma2);
                });
                total += p1 * (t * kept + (Rat::from_integer(1) - t) * w1 * fresh);
            }
            MomentCase::CaseB => {
                // Independent per-sign coupling P(J²_k = J¹_k) = (1+t)/2.
                let keep = (Rat::from_integer(1) + t) * half;
                let mut prod = w1;
                for (i, &j) in j1.iter().enumerate() {
                    let s2 = sigma2[i];
                    let kept = Rat::new((1 + j as i128 * s2 as i128) as i128, 2);
                    let flipped = Rat::new((1 - j as i128 * s2 as i128) as i128, 2);
                    prod *= keep * kept + (Rat::from_integer(1) - keep) * flipped;
                }
                total += p1 * prod;
            }
        }
    });
    Ok(total)
}

/// Closed forms for the same averages:
/// same-copy → Π (1+σ¹σ²)/4, case-a → t·Π (1+σ¹σ²)/4 + (1-t)/4^K,
/// case-b → Π (1+tσ¹σ²)/4.
pub fn sign_moment_closed_form_exact(
    case: MomentCase,
    k: u32,
    t: Rat,
    sigma1: &[i8],
    sigma2: &[i8],
) -> Result<Rat> {
    if sigma1.len() != k as usize || sigma2.len() != k as usize {
        return Err(Error::domain("σ tuples must have length K"));
    }
    let mut prod_same = Rat::from_integer(1);
    let mut prod_t = Rat::from_integer(1);
    for (&a, &b) in sigma1.iter().zip(sigma2) {
        let ab = Rat::from_integer((a as i128) * (b as i128));
        prod_same *= (Rat::from_integer(1) + ab.clone()) / Rat::from_integer(4);
        prod_t *= (Rat::from_integer(1) + t * ab) / Rat::from_integer(4);
    }
    Ok(match case {
        MomentCase::SameCopy => prod_same,
        MomentCase::CaseA => {
            t * prod_same + (Rat::from_integer(1) - t) / Rat::from_integer(4).pow(k as i32)
        }
        MomentCase::CaseB => prod_t,
    })
}

/// f64 convenience wrapper around [`sign_moment_enumerate_exact`]; `t` must be
/// exactly representable as a small rational (e.g. 1/4, 1/2, 3/4).
pub fn sign_moment_oracle(
    case: MomentCase,
    k: u32,
    t: f64,
    sigma1: &[i8],
    sigma2: &[i8],
) -> Result<f64> {
    let t_rat = f64_to_ratio(t)?;
    let v = sign_moment_enumerate_exact(case, k, t_rat, sigma1, sigma2)?;
    Ok(ratio_to_f64(&v))
}

pub fn f64_to_ratio(t: f64) -> Result<Rat> {
    const DEN: i128 = 1 << 40;
    let scaled = t * DEN as f64;
    if !t.is_finite() || scaled.fract() != 0.0 || scaled.abs() >= i64::MAX as f64 {
        return Err(Error::domain(format!("t = {t} is not a small dyadic rational")));
    }
    Ok(Rat::new(scaled as i128, DEN))
}

pub fn ratio_to_f64(r: &Rat) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Project σ onto the balanced set V: magnetization 0 for even N and 1/N for
/// odd N, flipping the minimal number of majority spins (lowest indices
/// first); untouched spins are preserved.
pub fn balanced_project(sigma: &SpinConfig) -> SpinConfig {
    let n = sigma.len();
    let target: i64 = if n % 2 == 0 { 0 } else { 1 };
    let sum = sigma.magnetization_sum();
    if sum == target {
        return sigma.clone();
    }
    let mut out = sigma.clone();
    if sum > target {
        // Too many +1: flip (sum - target)/2 of them to -1.
        let mut remaining = (sum - target) / 2;
        for i in 0..n {
            if remaining == 0 {
                break;
            }
            if out.spin(i) == 1 {
                out.set_spin(i, -1);
                remaining -= 1;
            }
        }
    } else {
        let mut remaining = (target - sum) / 2;
        for i in 0..n {
            if remaining == 0 {
                break;
            }
            if out.spin(i) == -1 {
                out.set_spin(i, 1);
                remaining -= 1;
            }
        }
    }
    out
}

/// Overlap R_{1,2} = N^{-1} Σ σ¹_i σ²_i.
pub fn overlap(sigma1: &SpinConfig, sigma2: &SpinConfig) -> Result<f64> {
    Ok(sigma1.dot(sigma2)? as f64 / sigma1.len() as f64)
}

impl DilutedInstance {
    /// Line-oriented text format: header `model K N lambda seed`, then one
    /// clause per line `i_1 … i_K | s_1 … s_K`. Round-trips bit-exactly.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} {} {} {} {}\n",
            self.model.name(),
            self.k,
            self.n,
            self.lambda,
            self.seed
        );
        for c in &self.clauses {
            let idx: Vec<String> = c.indices.iter().map(|i| i.to_string()).collect();
            let sg: Vec<String> = c.signs.iter().map(|s| s.to_string()).collect();
            out.push_str(&format!("{} | {}\n", idx.join(" "), sg.join(" ")));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::parse("empty instance"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::parse(format!(
                "header needs `model K N lambda seed`, got `{header}`"
            )));
        }
        let model = ClauseModel::parse(fields[0])?;
        let k: u32 = fields[1]
            .parse()
            .map_err(|e| Error::parse(format!("bad K: {e}")))?;
        let n: usize = fields[2]
            .parse()
            .map_err(|e| Error::parse(format!("bad N: {e}")))?;
        let lambda: f64 = fields[3]
            .parse()
            .map_err(|e| Error::parse(format!("bad lambda: {e}")))?;
        let seed: u64 = fields[4]
            .parse()
            .map_err(|e| Error::parse(format!("bad seed: {e}")))?;
        let mut clauses = Vec::new();
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let (idx_part, sign_part) = line
                .split_once('|')
                .ok_or_else(|| Error::parse(format!("clause line missing `|`: `{line}`")))?;
            let indices: Vec<u32> = idx_part
                .split_whitespace()
                .map(|f| f.parse().map_err(|e| Error::parse(format!("bad index: {e}"))))
                .collect::<Result<_>>()?;
            let signs: Vec<i8> = sign_part
                .split_whitespace()
                .map(|f| f.parse().map_err(|e| Error::parse(format!("bad sign: {e}"))))
                .collect::<Result<_>>()?;
            if indices.len() != k as usize || signs.len() != k as usize {
                return Err(Error::parse(format!("clause arity mismatch: `{line}`")));
            }
            if indices.iter().any(|&i| i == 0 || i as usize > n) {
                return Err(Error::parse(format!("index out of [1,N]: `{line}`")));
            }
            if signs.iter().any(|&s| s != 1 && s != -1) {
                return Err(Error::parse(format!("signs must be ±1: `{line}`")));
            }
            clauses.push(Clause { indices, signs });
        }
        Ok(DilutedInstance {
            model,
            k,
            n,
            lambda,
            seed,
            clauses,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn theta_examples() {
        assert_eq!(
            theta_eval(ClauseModel::Antiferro, 2, &[], &[1, -1]).unwrap(),
            1.0
        );
        assert_eq!(
            theta_eval(ClauseModel::Ksat, 2, &[1, 1], &[1, 1]).unwrap(),
            -1.0
        );
        assert_eq!(
            theta_eval(ClauseModel::Ksat, 2, &[1, 1], &[-1, 1]).unwrap(),
            0.0
        );
        assert_eq!(
            theta_eval(ClauseModel::KSpin, 3, &[-1, 1, 1], &[1, -1, 1]).unwrap(),
            1.0
        );
    }

    #[test]
    fn theta_rejects_bad_spins() {
        assert!(theta_eval(ClauseModel::Antiferro, 2, &[], &[1, 0]).is_err());
        assert!(theta_eval(ClauseModel::Ksat, 2, &[1, 2], &[1, 1]).is_err());
    }

    #[test]
    fn poisson_count_matches_mean() {
        let draws = 10_000;
        let lambda = 2.0;
        let n = 100;
        let mut total = 0usize;
        for i in 0..draws {
            let inst = sample_instance(ClauseModel::KSpin, 2, n, lambda, 1000 + i).unwrap();
            total += inst.clauses.len();
        }
        let mean = total as f64 / draws as f64;
        let expect = lambda * n as f64;
        // 3 standard errors of the Poisson mean estimator.
        let se = (expect / draws as f64).sqrt();
        assert!(
            (mean - expect).abs() <= 3.0 * se,
            "mean {mean} vs {expect} (3se = {})",
            3.0 * se
        );
    }

    #[test]
    fn tiny_lambda_is_empty() {
        let inst = sample_instance(ClauseModel::Ksat, 3, 10, 1e-9, 42).unwrap();
        assert!(inst.clauses.is_empty());
    }

    #[test]
    fn sign_symmetry() {
        let inst = sample_instance(ClauseModel::Ksat, 3, 50, 20.0, 7).unwrap();
        let total: i64 = inst
            .clauses
            .iter()
            .flat_map(|c| c.signs.iter())
            .map(|&s| s as i64)
            .sum();
        let count: usize = inst.clauses.iter().map(|c| c.signs.len()).sum();
        let mean = total as f64 / count as f64;
        assert!(mean.abs() <= 3.0 / (count as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn hamiltonian_examples() {
        let inst = DilutedInstance {
            model: ClauseModel::Antiferro,
            k: 2,
            n: 3,
            lambda: 1.0,
            seed: 0,
            clauses: vec![
                Clause {
                    indices: vec![1, 2],
                    signs: vec![1, 1],
                },
                Clause {
                    indices: vec![2, 3],
                    signs: vec![1, 1],
                },
            ],
        };
        let sigma = SpinConfig::from_signs(&[1, -1, 1]).unwrap();
        assert_eq!(hamiltonian(&inst, &sigma).unwrap(), 2.0);

        let empty = DilutedInstance {
            model: ClauseModel::Ksat,
            k: 2,
            n: 4,
            lambda: 1.0,
            seed: 0,
            clauses: vec![],
        };
        assert_eq!(
            hamiltonian(&empty, &SpinConfig::all_plus(4)).unwrap(),
            0.0
        );

        let wrong = SpinConfig::all_plus(5);
        assert!(hamiltonian(&empty, &wrong).is_err());
    }

    #[test]
    fn ksat_hamiltonian_range() {
        for seed in 0..20 {
            let inst = sample_instance(ClauseModel::Ksat, 3, 12, 2.0, seed).unwrap();
            let sigma = SpinConfig::from_neg_mask(12, seed.wrapping_mul(0x9e37) & 0xfff).unwrap();
            let h = hamiltonian(&inst, &sigma).unwrap();
            assert!(h <= 0.0 && h >= -(inst.clauses.len() as f64));
        }
    }

    #[test]
    fn couple_signs_b_correlation() {
        let pair = couple(CoupleScheme::SignsB, 0.5, ClauseModel::KSpin, 2, 50, 40.0, 3).unwrap();
        let mut prod_sum = 0i64;
        let mut count = 0usize;
        for (c1, c2) in pair.first.clauses.iter().zip(&pair.second.clauses) {
            assert_eq!(c1.indices, c2.indices);
            for (&a, &b) in c1.signs.iter().zip(&c2.signs) {
                prod_sum += (a as i64) * (b as i64);
                count += 1;
            }
        }
        let corr = prod_sum as f64 / count as f64;
        let se = (1.0 - 0.25f64).sqrt() / (count as f64).sqrt();
        assert!(
            (corr - 0.5).abs() <= 4.0 * se,
            "corr {corr}, count {count}"
        );
    }

    #[test]
    fn couple_near_one_is_identical() {
        let pair = couple(
            CoupleScheme::SignsA,
            1.0 - 1e-9,
            ClauseModel::Ksat,
            3,
            30,
            5.0,
            11,
        )
        .unwrap();
        assert_eq!(pair.first, pair.second);
    }

    #[test]
    fn couple_resample_clause_counts() {
        let t = 0.3;
        let lambda = 2.0;
        let n = 50;
        let reps = 2000u64;
        let mut common = 0usize;
        let mut private = 0usize;
        for seed in 0..reps {
            let pair = couple(
                CoupleScheme::ResampleClauses,
                t,
                ClauseModel::Antiferro,
                2,
                n,
                lambda,
                seed,
            )
            .unwrap();
            common += pair.common_len;
            private += pair.first.clauses.len() - pair.common_len;
            assert_eq!(
                pair.first.clauses[..pair.common_len],
                pair.second.clauses[..pair.common_len]
            );
        }
        let mean_c = common as f64 / reps as f64;
        let mean_p = private as f64 / reps as f64;
        let expect_c = t * lambda * n as f64;
        let expect_p = (1.0 - t) * lambda * n as f64;
        assert!((mean_c - expect_c).abs() <= 4.0 * (expect_c / reps as f64).sqrt());
        assert!((mean_p - expect_p).abs() <= 4.0 * (expect_p / reps as f64).sqrt());
    }

    #[test]
    fn couple_rejects_antiferro_sign_schemes() {
        assert!(couple(CoupleScheme::SignsA, 0.5, ClauseModel::Antiferro, 2, 10, 1.0, 0).is_err());
        assert!(couple(CoupleScheme::SignsB, 0.5, ClauseModel::Antiferro, 2, 10, 1.0, 0).is_err());
    }

    #[test]
    fn sign_moment_examples() {
        // case-a, K=1-like check is out of domain here (K ≥ 1 allowed in the
        // oracle): t(2/4) + (1-t)/4 at t = 1/2 is 0.375.
        let v = sign_moment_oracle(MomentCase::CaseA, 1, 0.5, &[1], &[1]).unwrap();
        assert_abs_diff_eq!(v, 0.375);

        let v = sign_moment_oracle(MomentCase::CaseB, 2, 0.0, &[1, -1], &[-1, -1]).unwrap();
        assert_abs_diff_eq!(v, 1.0 / 16.0);

        let v = sign_moment_oracle(MomentCase::SameCopy, 2, 0.5, &[1, -1], &[1, -1]).unwrap();
        assert_abs_diff_eq!(v, 0.25);
    }

    #[test]
    fn sign_moment_matches_closed_forms_exactly() {
        let ts = [Rat::new(1, 4), Rat::new(1, 2), Rat::new(3, 4)];
        for k in 1..=4u32 {
            for case in [MomentCase::SameCopy, MomentCase::CaseA, MomentCase::CaseB] {
                for &t in &ts {
                    for mask1 in 0..(1u32 << k) {
                        for mask2 in 0..(1u32 << k) {
                            let s1: Vec<i8> =
                                (0..k).map(|i| if mask1 >> i & 1 == 1 { -1 } else { 1 }).collect();
                            let s2: Vec<i8> =
                                (0..k).map(|i| if mask2 >> i & 1 == 1 { -1 } else { 1 }).collect();
                            let lhs =
                                sign_moment_enumerate_exact(case, k, t, &s1, &s2).unwrap();
                            let rhs =
                                sign_moment_closed_form_exact(case, k, t, &s1, &s2).unwrap();
                            assert_eq!(lhs, rhs, "case {case:?} k {k} t {t}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn balanced_project_examples() {
        let sigma = SpinConfig::from_signs(&[1, 1, 1, -1]).unwrap();
        let proj = balanced_project(&sigma);
        assert_eq!(proj.magnetization_sum(), 0);
        let d = (0..4).filter(|&i| sigma.spin(i) != proj.spin(i)).count();
        assert_eq!(d, 1); // distance 1/4 = |m|/2

        let balanced = SpinConfig::from_signs(&[1, -1, 1, -1]).unwrap();
        assert_eq!(balanced_project(&balanced), balanced);

        let odd = SpinConfig::from_signs(&[1, 1, 1, 1, -1]).unwrap();
        let proj = balanced_project(&odd);
        assert_eq!(proj.magnetization_sum(), 1);
        let d = (0..5).filter(|&i| odd.spin(i) != proj.spin(i)).count();
        // Hamming fraction bound |m|/2 + 1/(2N): here exactly 1 flip.
        assert_eq!(d, 1);
    }

    #[test]
    fn overlap_examples() {
        let a = SpinConfig::from_signs(&[1, 1, -1, -1]).unwrap();
        let b = SpinConfig::from_signs(&[1, -1, 1, -1]).unwrap();
        assert_eq!(overlap(&a, &a).unwrap(), 1.0);
        assert_eq!(overlap(&a, &a.flipped()).unwrap(), -1.0);
        assert_eq!(overlap(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn serialization_round_trip_bit_exact() {
        let inst = sample_instance(ClauseModel::Ksat, 3, 17, 1.75, 99).unwrap();
        let text = inst.to_text();
        let parsed = DilutedInstance::from_text(&text).unwrap();
        assert_eq!(inst, parsed);
        assert_eq!(text, parsed.to_text());
    }
}
