//! Mixing functions ξ, correlated mixings ξ0, the ζ± ratios, step-function
//! order parameters, and the γ_q construction.
//!
//! A mixing pair bundles ξ(s) = Σ_p c_p s^p (c_p ≥ 0) with the covariance
//! ξ0 of two correlated copies, which is either t·ξ(s) (scaled) or ξ(t·s)
//! (argument). Custom pairs carry an explicit ξ0 coefficient list. Everything
//! downstream (the matrix diffusion T, γ_q, the gap corrections) is expressed
//! through ξ'', ξ0'' and their antiderivatives, which are exact polynomial
//! manipulations here.

pub mod quad;

use crate::error::{Error, Result};
use crate::poly::Poly;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrKind {
    /// ξ0(s) = t·ξ(s).
    Scaled,
    /// ξ0(s) = ξ(t·s).
    Argument,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn of(q: f64) -> Sign {
        if q >= 0.0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixingKind {
    /// ξ(s) = s^K.
    Pure { k: u32 },
    /// ξ(s) = (1+s)^K - 1 = Σ_p C(K,p) s^p.
    Ksat { k: u32 },
    /// Explicit coefficient lists for ξ and ξ0.
    Custom,
}

/// A mixing function together with the covariance of its correlated copy.
#[derive(Debug, Clone)]
pub struct MixingPair {
    kind: MixingKind,
    corr: Option<CorrKind>,
    t: Option<f64>,
    xi: Poly,
    xi0: Poly,
}

impl MixingPair {
    /// Pure K-spin mixing ξ(s) = s^K with correlation parameter t.
    ///
    /// K must be even: the two-system machinery for pure mixings is only
    /// sound for even K, and odd monomials are not convex on [-1,1].
    pub fn pure(k: u32, t: f64, corr: CorrKind) -> Result<Self> {
        if k < 2 || k % 2 != 0 {
            return Err(Error::domain(format!("pure mixing requires even K ≥ 2, got {k}")));
        }
        check_t(t)?;
        let xi = Poly::monomial(k);
        let xi0 = correlated(&xi, t, corr);
        Ok(MixingPair {
            kind: MixingKind::Pure { k },
            corr: Some(corr),
            t: Some(t),
            xi,
            xi0,
        })
    }

    /// K-sat mixture ξ(s) = (1+s)^K - 1 with correlation parameter t.
    pub fn ksat(k: u32, t: f64, corr: CorrKind) -> Result<Self> {
        if k < 2 {
            return Err(Error::domain(format!("ksat mixing requires K ≥ 2, got {k}")));
        }
        check_t(t)?;
        let xi = Poly::binomial_minus_one(k);
        let xi0 = correlated(&xi, t, corr);
        Ok(MixingPair {
            kind: MixingKind::Ksat { k },
            corr: Some(corr),
            t: Some(t),
            xi,
            xi0,
        })
    }

    /// Custom pair from coefficient lists (index 0 is the coefficient of s^1).
    ///
    /// ξ coefficients must be nonnegative; ξ0 is free-form (its admissibility
    /// is what [`MixingPair::check_conditions`] reports on).
    pub fn custom(xi_coeffs: &[f64], xi0_coeffs: &[f64]) -> Result<Self> {
        if xi_coeffs.iter().any(|&c| c < 0.0 || !c.is_finite()) {
            return Err(Error::domain("ξ coefficients must be nonnegative and finite"));
        }
        if xi_coeffs.iter().all(|&c| c == 0.0) {
            return Err(Error::domain("ξ must not vanish identically"));
        }
        if xi0_coeffs.iter().any(|&c| !c.is_finite()) {
            return Err(Error::domain("ξ0 coefficients must be finite"));
        }
        Ok(MixingPair {
            kind: MixingKind::Custom,
            corr: None,
            t: None,
            xi: Poly::from_power_coeffs(xi_coeffs),
            xi0: Poly::from_power_coeffs(xi0_coeffs),
        })
    }

    pub fn kind(&self) -> MixingKind {
        self.kind
    }

    pub fn corr_kind(&self) -> Option<CorrKind> {
        self.corr
    }

    pub fn t(&self) -> Option<f64> {
        self.t
    }

    pub fn xi_poly(&self) -> &Poly {
        &self.xi
    }

    pub fn xi0_poly(&self) -> &Poly {
        &self.xi0
    }

    /// ξ^{(order)}(s) for order ≤ 3, with |s| ≤ 1.
    pub fn xi(&self, s: f64, order: u32) -> Result<f64> {
        check_s(s)?;
        if order > 3 {
            return Err(Error::domain(format!("ξ derivative order {order} > 3")));
        }
        Ok(self.xi.derivative_n(order).eval(s))
    }

    /// ξ0^{(order)}(s) for order ≤ 2, with |s| ≤ 1.
    pub fn xi0(&self, s: f64, order: u32) -> Result<f64> {
        check_s(s)?;
        if order > 2 {
            return Err(Error::domain(format!("ξ0 derivative order {order} > 2")));
        }
        Ok(self.xi0.derivative_n(order).eval(s))
    }

    /// ζ±(s) = ξ''(s) / (ξ''(s) + ξ0''(±s)), for s ∈ (0,1].
    pub fn zeta(&self, s: f64, sign: Sign) -> Result<f64> {
        if s <= 0.0 || s > 1.0 {
            return Err(Error::domain(format!("ζ± requires s ∈ (0,1], got {s}")));
        }
        let d2 = self.xi.derivative_n(2).eval(s);
        let d20 = self.xi0.derivative_n(2).eval(sign.as_f64() * s);
        if d2 + d20 == 0.0 {
            return Ok(self.zeta_limit_at_zero(sign));
        }
        Ok(d2 / (d2 + d20))
    }

    /// lim_{s→0+} ζ±(s), from the lowest-order coefficients of ξ'' and
    /// s ↦ ξ0''(±s).
    pub fn zeta_limit_at_zero(&self, sign: Sign) -> f64 {
        let xi2 = self.xi.derivative_n(2);
        let xi02 = self.xi0.derivative_n(2);
        let lowest = |p: &Poly, flip: bool| -> Option<(usize, f64)> {
            p.coeffs().iter().enumerate().find_map(|(r, &c)| {
                if c != 0.0 {
                    let c = if flip && r % 2 == 1 { -c } else { c };
                    Some((r, c))
                } else {
                    None
                }
            })
        };
        let a = lowest(&xi2, false);
        let b = lowest(&xi02, sign == Sign::Minus);
        match (a, b) {
            (None, _) => 0.0,
            (Some(_), None) => 1.0,
            (Some((r1, _)), Some((r2, _))) if r1 < r2 => 1.0,
            (Some((r1, _)), Some((r2, _))) if r1 > r2 => 0.0,
            (Some((_, ca)), Some((_, cb))) => ca / (ca + cb),
        }
    }

    /// Grid verification of the structural conditions behind the chaos bound:
    /// ξ0''(s) < ξ''(|s|) away from 0, ζ± nondecreasing on (0,1], and
    /// convexity of both ξ and ξ0 on [-1,1].
    pub fn check_conditions(&self, grid_size: usize) -> Result<ConditionReport> {
        if grid_size < 2 {
            return Err(Error::domain("grid_size must be ≥ 2"));
        }
        let xi2 = self.xi.derivative_n(2);
        let xi02 = self.xi0.derivative_n(2);

        let mut dominance = CheckOutcome::pass();
        let mut xi_convex = CheckOutcome::pass();
        let mut xi0_convex = CheckOutcome::pass();
        for i in 0..=grid_size {
            let s = -1.0 + 2.0 * i as f64 / grid_size as f64;
            if s != 0.0 {
                let gap = xi2.eval(s.abs()) - xi02.eval(s);
                if gap <= 0.0 {
                    dominance.record(s, gap);
                }
            }
            if xi2.eval(s) < 0.0 {
                xi_convex.record(s, xi2.eval(s));
            }
            if xi02.eval(s) < 0.0 {
                xi0_convex.record(s, xi02.eval(s));
            }
        }

        let mut zeta_plus = CheckOutcome::pass();
        let mut zeta_minus = CheckOutcome::pass();
        let mut prev_p = f64::NEG_INFINITY;
        let mut prev_m = f64::NEG_INFINITY;
        for i in 1..=grid_size {
            let s = i as f64 / grid_size as f64;
            let zp = self.zeta(s, Sign::Plus)?;
            let zm = self.zeta(s, Sign::Minus)?;
            // Tiny tolerance absorbs floating-point noise on constant ζ.
            if zp < prev_p - 1e-12 {
                zeta_plus.record(s, zp - prev_p);
            }
            if zm < prev_m - 1e-12 {
                zeta_minus.record(s, zm - prev_m);
            }
            prev_p = zp;
            prev_m = zm;
        }

        Ok(ConditionReport {
            strict_dominance: dominance,
            zeta_plus_monotone: zeta_plus,
            zeta_minus_monotone: zeta_minus,
            xi_convex,
            xi0_convex,
        })
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::domain(format!("t must lie in (0,1), got {t}")));
    }
    Ok(())
}

fn check_s(s: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&s) {
        return Err(Error::domain(format!("|s| ≤ 1 required, got {s}")));
    }
    Ok(())
}

fn correlated(xi: &Poly, t: f64, corr: CorrKind) -> Poly {
    match corr {
        CorrKind::Scaled => xi.scaled(t),
        CorrKind::Argument => xi.scale_argument(t),
    }
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub pass: bool,
    /// First violating grid point and the offending residual.
    pub first_violation: Option<(f64, f64)>,
}

impl CheckOutcome {
    fn pass() -> Self {
        CheckOutcome {
            pass: true,
            first_violation: None,
        }
    }

    fn record(&mut self, s: f64, residual: f64) {
        if self.pass {
            self.pass = false;
            self.first_violation = Some((s, residual));
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConditionReport {
    pub strict_dominance: CheckOutcome,
    pub zeta_plus_monotone: CheckOutcome,
    pub zeta_minus_monotone: CheckOutcome,
    pub xi_convex: CheckOutcome,
    pub xi0_convex: CheckOutcome,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        self.strict_dominance.pass
            && self.zeta_plus_monotone.pass
            && self.zeta_minus_monotone.pass
            && self.xi_convex.pass
            && self.xi0_convex.pass
    }
}

/// Right-continuous nondecreasing step function on [0,1].
///
/// γ(s) = m_j on [q_{j-1}, q_j) with q_0 = 0, and the last value extends to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct StepGamma {
    /// Right endpoints q_1 < … < q_k ≤ 1.
    qs: Vec<f64>,
    /// Values m_1 ≤ … ≤ m_k, all ≥ 0.
    ms: Vec<f64>,
}

impl StepGamma {
    pub fn new(qs: Vec<f64>, ms: Vec<f64>) -> Result<Self> {
        if qs.len() != ms.len() || qs.is_empty() {
            return Err(Error::domain("breakpoints and values must have equal nonzero length"));
        }
        let mut prev_q = 0.0;
        for &q in &qs {
            if !(q > prev_q && q <= 1.0) {
                return Err(Error::domain(format!(
                    "breakpoints must satisfy 0 < q_1 < … < q_k ≤ 1, got {q} after {prev_q}"
                )));
            }
            prev_q = q;
        }
        let mut prev_m = 0.0;
        for &m in &ms {
            if !(m >= prev_m && m.is_finite()) {
                return Err(Error::domain(format!(
                    "values must be nonnegative nondecreasing, got {m} after {prev_m}"
                )));
            }
            prev_m = m;
        }
        Ok(StepGamma { qs, ms })
    }

    /// γ ≡ 0.
    pub fn zero() -> Self {
        StepGamma {
            qs: vec![1.0],
            ms: vec![0.0],
        }
    }

    /// γ ≡ m.
    pub fn constant(m: f64) -> Result<Self> {
        StepGamma::new(vec![1.0], vec![m])
    }

    pub fn k(&self) -> usize {
        self.qs.len()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.qs
    }

    pub fn values(&self) -> &[f64] {
        &self.ms
    }

    pub fn max_value(&self) -> f64 {
        *self.ms.last().unwrap()
    }

    pub fn is_zero(&self) -> bool {
        self.ms.iter().all(|&m| m == 0.0)
    }

    /// γ(s). Right-continuous; the last value extends through s = 1.
    pub fn value(&self, s: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&s));
        for (q, m) in self.qs.iter().zip(&self.ms) {
            if s < *q {
                return *m;
            }
        }
        *self.ms.last().unwrap()
    }

    /// Constant pieces (a, b, m) covering [0,1], with adjacent equal values
    /// merged.
    pub fn intervals(&self) -> Vec<(f64, f64, f64)> {
        let mut out: Vec<(f64, f64, f64)> = Vec::new();
        let mut a = 0.0;
        for (i, (&q, &m)) in self.qs.iter().zip(&self.ms).enumerate() {
            let b = if i + 1 == self.qs.len() { 1.0 } else { q };
            if b > a {
                match out.last_mut() {
                    Some(last) if last.2 == m => last.1 = b,
                    _ => out.push((a, b, m)),
                }
            }
            a = b;
        }
        out
    }

    /// Serialize as `k` followed by `q_j m_j` lines, 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.k());
        for (q, m) in self.qs.iter().zip(&self.ms) {
            s.push_str(&format!("{q:.16e} {m:.16e}\n"));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let k: usize = lines
            .next()
            .ok_or_else(|| Error::parse("empty γ serialization"))?
            .trim()
            .parse()
            .map_err(|e| Error::parse(format!("bad k line: {e}")))?;
        let mut qs = Vec::with_capacity(k);
        let mut ms = Vec::with_capacity(k);
        for _ in 0..k {
            let line = lines
                .next()
                .ok_or_else(|| Error::parse("truncated γ serialization"))?;
            let mut it = line.split_whitespace();
            let q: f64 = it
                .next()
                .ok_or_else(|| Error::parse("missing q"))?
                .parse()
                .map_err(|e| Error::parse(format!("bad q: {e}")))?;
            let m: f64 = it
                .next()
                .ok_or_else(|| Error::parse("missing m"))?
                .parse()
                .map_err(|e| Error::parse(format!("bad m: {e}")))?;
            qs.push(q);
            ms.push(m);
        }
        StepGamma::new(qs, ms)
    }
}

/// The order parameter γ_q built from γ_P:
/// γ_q(s) = ζ_ι(s)·γ_P(s) on [0,|q|) and γ_P(s) on [|q|,1], with ι = sign(q).
#[derive(Debug, Clone)]
pub struct GammaQ<'a> {
    mixing: &'a MixingPair,
    base: &'a StepGamma,
    q: f64,
    iota: Sign,
}

impl<'a> GammaQ<'a> {
    pub fn new(mixing: &'a MixingPair, base: &'a StepGamma, q: f64) -> Result<Self> {
        if q == 0.0 || q.abs() > 1.0 {
            return Err(Error::domain(format!("γ_q requires q ∈ [-1,1] \\ {{0}}, got {q}")));
        }
        Ok(GammaQ {
            mixing,
            base,
            q,
            iota: Sign::of(q),
        })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn iota(&self) -> Sign {
        self.iota
    }

    pub fn eval(&self, s: f64) -> f64 {
        let g = self.base.value(s);
        if s < self.q.abs() && s > 0.0 {
            self.mixing.zeta(s, self.iota).expect("s in (0,1)") * g
        } else if s == 0.0 {
            // ζ is continuous at 0+ for polynomial mixings; use the limit.
            self.mixing.zeta_limit_at_zero(self.iota) * g
        } else {
            g
        }
    }

    /// True when ζ_ι is constant in s, so γ_q is itself a step function.
    pub fn is_exact_step(&self) -> bool {
        self.mixing.corr == Some(CorrKind::Scaled)
    }

    /// Step-function representation. Exact for scaled correlation; for
    /// varying ζ each base interval below |q| is subdivided into `substeps`
    /// pieces sampled at left endpoints (right-continuity preserved).
    pub fn to_step(&self, substeps: usize) -> Result<StepGamma> {
        let qa = self.q.abs();
        let mut qs: Vec<f64> = Vec::new();
        let mut ms: Vec<f64> = Vec::new();
        let sub = if self.is_exact_step() { 1 } else { substeps.max(1) };
        for (a, b, m) in self.base.intervals() {
            if a < qa {
                let hi = b.min(qa);
                let n = if m == 0.0 { 1 } else { sub };
                for j in 0..n {
                    let lo_j = a + (hi - a) * j as f64 / n as f64;
                    let hi_j = a + (hi - a) * (j + 1) as f64 / n as f64;
                    push_piece(&mut qs, &mut ms, hi_j, self.eval(lo_j));
                }
            }
            if b > qa {
                let lo = a.max(qa);
                push_piece(&mut qs, &mut ms, b, self.base.value(lo));
            }
        }
        // Nondecreasing up to floating-point noise; clamp tiny inversions.
        for i in 1..ms.len() {
            if ms[i] < ms[i - 1] {
                if ms[i - 1] - ms[i] > 1e-10 {
                    return Err(Error::numeric(format!(
                        "γ_q not nondecreasing: {} after {}",
                        ms[i],
                        ms[i - 1]
                    )));
                }
                ms[i] = ms[i - 1];
            }
        }
        StepGamma::new(qs, ms)
    }
}

fn push_piece(qs: &mut Vec<f64>, ms: &mut Vec<f64>, right: f64, value: f64) {
    if let (Some(lq), Some(lm)) = (qs.last_mut(), ms.last()) {
        if *lm == value {
            *lq = right;
            return;
        }
    }
    qs.push(right);
    ms.push(value);
}

/// Residual |LHS - RHS| of the exchange identity
/// ∫_0^1 s ξ''(s) γ_q(s) ds + ∫_0^{|q|} s ξ0''(ιs) γ_q(s) ds
///   = ∫_0^1 s ξ''(s) γ_P(s) ds,
/// evaluated by adaptive quadrature with split points at the atoms of γ_P
/// and at |q|.
pub fn check_eq7(mixing: &MixingPair, gamma_p: &StepGamma, q: f64, tol: f64) -> Result<f64> {
    let gq = GammaQ::new(mixing, gamma_p, q)?;
    let qa = q.abs();
    let iota = gq.iota().as_f64();
    let sign = gq.iota();
    let xi2 = mixing.xi.derivative_n(2);
    let xi02 = mixing.xi0.derivative_n(2);

    // Integrate branch-resolved smooth integrands on each constant-γ piece,
    // split at |q|, so no panel straddles a jump of γ_q.
    let mut pieces: Vec<(f64, f64, f64)> = Vec::new();
    for (a, b, m) in gamma_p.intervals() {
        if a < qa && qa < b {
            pieces.push((a, qa, m));
            pieces.push((qa, b, m));
        } else {
            pieces.push((a, b, m));
        }
    }

    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for (a, b, m) in pieces {
        if m == 0.0 {
            continue;
        }
        rhs += m * quad::adaptive_simpson(|s| s * xi2.eval(s), a, b, tol)?;
        if b <= qa {
            // γ_q = ζ_ι γ_P here, and both integrands carry it.
            let zeta = |s: f64| {
                let d2 = xi2.eval(s);
                let d20 = xi02.eval(iota * s);
                if d2 + d20 == 0.0 {
                    mixing.zeta_limit_at_zero(sign)
                } else {
                    d2 / (d2 + d20)
                }
            };
            lhs += m * quad::adaptive_simpson(|s| s * xi2.eval(s) * zeta(s), a, b, tol)?;
            lhs += m * quad::adaptive_simpson(|s| s * xi02.eval(iota * s) * zeta(s), a, b, tol)?;
        } else {
            lhs += m * quad::adaptive_simpson(|s| s * xi2.eval(s), a, b, tol)?;
        }
    }
    Ok((lhs - rhs).abs())
}
