//! Experiment configuration: a flat `key = value` file, overridden by CLI
//! flags. The canonical serialization (fixed key order, 17-significant-digit
//! numbers) is what gets hashed into every output row.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub seed: u64,
    pub out: String,
    pub threads: usize,
    pub tol: f64,

    // Mixing.
    pub kind: String, // pure | ksat
    pub k: u32,
    pub t: f64,
    pub corr: String, // scaled | argument

    // Diluted model.
    pub model: String, // antiferro | kspin | ksat
    pub n: usize,
    pub lambda: f64,
    pub lambdas: Vec<f64>,

    // Experiments.
    pub scheme: String, // resample-clauses | signs-a | signs-b
    pub eta: f64,
    pub epsilon: f64,
    pub replicas: usize,
    pub k_max: usize,
    pub multistart: usize,
    pub m_cap: f64,
    pub q_points: usize,
    pub me_source: String, // exact | parisi
    pub draws: usize,
    pub set_cap: usize,
    pub pair_budget: u64,

    // Numerical grids.
    pub phi_half_points: usize,
    pub psi_half_points: usize,
    pub gh_order: usize,
    pub gamma_file: String,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 1,
            out: "out".into(),
            threads: 0,
            tol: 1e-6,
            kind: "pure".into(),
            k: 2,
            t: 0.5,
            corr: "scaled".into(),
            model: "kspin".into(),
            n: 14,
            lambda: 2.0,
            lambdas: vec![2.0, 8.0, 32.0],
            scheme: "signs-b".into(),
            eta: 0.1,
            epsilon: 0.3,
            replicas: 50,
            k_max: 6,
            multistart: 8,
            m_cap: 100.0,
            q_points: 21,
            me_source: "exact".into(),
            draws: 20_000,
            set_cap: 1 << 20,
            pair_budget: 1 << 26,
            phi_half_points: 2048,
            psi_half_points: 256,
            gh_order: 64,
            gamma_file: String::new(),
        }
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

impl Config {
    /// Canonical serialization; `from_text(to_text())` round-trips.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("seed", self.seed.to_string());
        kv("out", self.out.clone());
        kv("threads", self.threads.to_string());
        kv("tol", fmt_f64(self.tol));
        kv("kind", self.kind.clone());
        kv("k", self.k.to_string());
        kv("t", fmt_f64(self.t));
        kv("corr", self.corr.clone());
        kv("model", self.model.clone());
        kv("n", self.n.to_string());
        kv("lambda", fmt_f64(self.lambda));
        kv(
            "lambdas",
            self.lambdas
                .iter()
                .map(|&l| fmt_f64(l))
                .collect::<Vec<_>>()
                .join(","),
        );
        kv("scheme", self.scheme.clone());
        kv("eta", fmt_f64(self.eta));
        kv("epsilon", fmt_f64(self.epsilon));
        kv("replicas", self.replicas.to_string());
        kv("k_max", self.k_max.to_string());
        kv("multistart", self.multistart.to_string());
        kv("m_cap", fmt_f64(self.m_cap));
        kv("q_points", self.q_points.to_string());
        kv("me_source", self.me_source.clone());
        kv("draws", self.draws.to_string());
        kv("set_cap", self.set_cap.to_string());
        kv("pair_budget", self.pair_budget.to_string());
        kv("phi_half_points", self.phi_half_points.to_string());
        kv("psi_half_points", self.psi_half_points.to_string());
        kv("gh_order", self.gh_order.to_string());
        kv("gamma_file", self.gamma_file.clone());
        s
    }

    pub fn from_text(text: &str) -> Result<Config> {
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("line {}: expected `key = value`", lineno + 1))?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        let mut cfg = Config::default();
        cfg.apply(&map)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Config::from_text(&text)
    }

    /// Apply key/value overrides (file contents or normalized CLI flags).
    pub fn apply(&mut self, map: &BTreeMap<String, String>) -> Result<()> {
        for (key, value) in map {
            match key.as_str() {
                "seed" => self.seed = value.parse().context("seed")?,
                "out" => self.out = value.clone(),
                "threads" => self.threads = value.parse().context("threads")?,
                "tol" => self.tol = value.parse().context("tol")?,
                "kind" => self.kind = value.clone(),
                "k" => self.k = value.parse().context("k")?,
                "t" => self.t = value.parse().context("t")?,
                "corr" => self.corr = value.clone(),
                "model" => self.model = value.clone(),
                "n" => self.n = value.parse().context("n")?,
                "lambda" => self.lambda = value.parse().context("lambda")?,
                "lambdas" => {
                    self.lambdas = value
                        .split(',')
                        .map(|f| f.trim().parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .context("lambdas")?;
                }
                "scheme" => self.scheme = value.clone(),
                "eta" => self.eta = value.parse().context("eta")?,
                "epsilon" => self.epsilon = value.parse().context("epsilon")?,
                "replicas" => self.replicas = value.parse().context("replicas")?,
                "k_max" => self.k_max = value.parse().context("k_max")?,
                "multistart" => self.multistart = value.parse().context("multistart")?,
                "m_cap" => self.m_cap = value.parse().context("m_cap")?,
                "q_points" => self.q_points = value.parse().context("q_points")?,
                "me_source" => self.me_source = value.clone(),
                "draws" => self.draws = value.parse().context("draws")?,
                "set_cap" => self.set_cap = value.parse().context("set_cap")?,
                "pair_budget" => self.pair_budget = value.parse().context("pair_budget")?,
                "phi_half_points" => {
                    self.phi_half_points = value.parse().context("phi_half_points")?
                }
                "psi_half_points" => {
                    self.psi_half_points = value.parse().context("psi_half_points")?
                }
                "gh_order" => self.gh_order = value.parse().context("gh_order")?,
                "gamma_file" => self.gamma_file = value.clone(),
                other => bail!("unknown config key `{other}`"),
            }
        }
        Ok(())
    }

    /// First 16 hex characters of the SHA-256 of the canonical serialization,
    /// excluding keys that cannot affect results (output path, thread count).
    pub fn hash(&self) -> String {
        let semantic: String = self
            .to_text()
            .lines()
            .filter(|l| !l.starts_with("out =") && !l.starts_with("threads ="))
            .map(|l| format!("{l}\n"))
            .collect();
        let digest = Sha256::digest(semantic.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}
