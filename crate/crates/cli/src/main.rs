//! `spinlab`: reproducible experiment runner for the spin-glass laboratory.
//!
//! Subcommands: `verify`, `chaos`, `gap`, `parisi`, `scaling`, `sample`.
//! Every run is driven by a single master seed and a flat key = value config;
//! CLI flags override file values, and all outputs (CSV + JSON sidecar) are
//! byte-deterministic given (config, seed).

mod config;
mod output;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use config::Config;
use output::{fmt_f64, out_path, write_sidecar, CsvTable};
use spinlab_core::diluted::{sample_instance, ClauseModel, CoupleScheme};
use spinlab_core::gaussian::sample_gaussian;
use spinlab_core::groundstate::{chaos_experiment, exact_max, ChaosParams, Space};
use spinlab_core::gtbound::{gap_scan, PsiGridParams};
use spinlab_core::mixing::{CorrKind, MixingPair, StepGamma};
use spinlab_core::parisi::{
    gamma_support_check, minimize_parisi, MinimizeParams, PdeGridParams,
};
use spinlab_core::rng::derive_seed;
use spinlab_core::verify::{run_all, VerifyOptions};

#[derive(Parser)]
#[command(name = "spinlab", version, about = "Spin-glass numerical laboratory")]
struct Cli {
    /// Config file with `key = value` lines; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for all named RNG streams.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Worker threads (0 = rayon default).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Assertion tolerance where a command checks inequalities.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct CommonOverrides {
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    corr: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Comma-separated list.
    #[arg(long)]
    lambdas: Option<String>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    multistart: Option<usize>,
    #[arg(long)]
    q_points: Option<usize>,
    #[arg(long)]
    me_source: Option<String>,
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    phi_half_points: Option<usize>,
    #[arg(long)]
    psi_half_points: Option<usize>,
    #[arg(long)]
    gh_order: Option<usize>,
    #[arg(long)]
    gamma_file: Option<String>,
}

impl CommonOverrides {
    fn to_map(&self) -> BTreeMap<String, String> {
        let mut map = BTreeMap::new();
        macro_rules! put {
            ($field:ident) => {
                if let Some(v) = &self.$field {
                    map.insert(stringify!($field).to_string(), v.to_string());
                }
            };
        }
        put!(kind);
        put!(k);
        put!(t);
        put!(corr);
        put!(model);
        put!(n);
        put!(lambda);
        put!(lambdas);
        put!(scheme);
        put!(eta);
        put!(epsilon);
        put!(replicas);
        put!(k_max);
        put!(multistart);
        put!(q_points);
        put!(me_source);
        put!(draws);
        put!(phi_half_points);
        put!(psi_half_points);
        put!(gh_order);
        put!(gamma_file);
        map
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the invariant battery; exit status 0 iff every suite passes.
    Verify(CommonOverrides),
    /// Disorder-chaos experiment on coupled diluted instances.
    Chaos(CommonOverrides),
    /// Chaos-gap scan of the two-system bound against twice the Parisi value.
    Gap(CommonOverrides),
    /// Minimize the Parisi functional over k-step order parameters.
    Parisi(CommonOverrides),
    /// Scaling study of diluted maxima against the Gaussian prediction.
    Scaling(CommonOverrides),
    /// Sample one diluted instance and write its text serialization.
    Sample(CommonOverrides),
}

fn effective_config(cli: &Cli, overrides: &CommonOverrides) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let mut map = overrides.to_map();
    if let Some(seed) = cli.seed {
        map.insert("seed".into(), seed.to_string());
    }
    if let Some(out) = &cli.out {
        map.insert("out".into(), out.clone());
    }
    if let Some(threads) = cli.threads {
        map.insert("threads".into(), threads.to_string());
    }
    if let Some(tol) = cli.tol {
        map.insert("tol".into(), format!("{tol:e}"));
    }
    cfg.apply(&map)?;
    if cfg.threads > 0 {
        // Ignore the error if a pool already exists (e.g. repeated calls).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global();
    }
    Ok(cfg)
}

fn parse_model(cfg: &Config) -> Result<ClauseModel> {
    Ok(ClauseModel::parse(&cfg.model)?)
}

fn parse_scheme(cfg: &Config) -> Result<CoupleScheme> {
    Ok(CoupleScheme::parse(&cfg.scheme)?)
}

fn parse_corr(cfg: &Config) -> Result<CorrKind> {
    match cfg.corr.as_str() {
        "scaled" => Ok(CorrKind::Scaled),
        "argument" => Ok(CorrKind::Argument),
        other => bail!("unknown correlation kind `{other}`"),
    }
}

fn mixing_from(cfg: &Config) -> Result<MixingPair> {
    let corr = parse_corr(cfg)?;
    Ok(match cfg.kind.as_str() {
        "pure" => MixingPair::pure(cfg.k, cfg.t, corr)?,
        "ksat" => MixingPair::ksat(cfg.k, cfg.t, corr)?,
        other => bail!("unknown mixing kind `{other}`"),
    })
}

fn phi_params(cfg: &Config) -> PdeGridParams {
    PdeGridParams {
        half_width_mult: 4.0,
        x_points_half: cfg.phi_half_points,
        gh_order: cfg.gh_order,
    }
}

fn psi_params(cfg: &Config) -> PsiGridParams {
    PsiGridParams {
        half_width_mult: 4.0,
        x_points_half: cfg.psi_half_points,
        gh_order: cfg.gh_order,
        gamma_q_substeps: 64,
        phi: phi_params(cfg),
    }
}

fn cmd_verify(cfg: &Config) -> Result<bool> {
    let opts = VerifyOptions {
        t: cfg.t,
        seed: cfg.seed,
        covariance_draws: cfg.draws,
        rho_override: None,
        grid: 10_000,
    };
    let report = run_all(&opts)?;
    for suite in &report.suites {
        println!(
            "suite {:<16} {}  worst residual {:.3e}",
            suite.name,
            if suite.pass { "PASS" } else { "FAIL" },
            suite.worst
        );
        for d in &suite.details {
            println!("    {d}");
        }
    }
    Ok(report.all_pass())
}

fn cmd_sample(cfg: &Config) -> Result<bool> {
    let model = parse_model(cfg)?;
    let inst = sample_instance(model, cfg.k, cfg.n, cfg.lambda, cfg.seed)?;
    let path = out_path(&cfg.out, "instance.txt");
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(&path, inst.to_text())?;
    println!(
        "wrote {} ({} clauses, seed {}, config {})",
        path.display(),
        inst.clauses.len(),
        cfg.seed,
        cfg.hash()
    );
    Ok(true)
}

fn cmd_parisi(cfg: &Config) -> Result<bool> {
    let mixing = mixing_from(cfg)?;
    let params = MinimizeParams {
        k_max: cfg.k_max,
        multistart: cfg.multistart,
        m_cap: cfg.m_cap,
        grid: phi_params(cfg),
        ..MinimizeParams::default()
    };
    let est = minimize_parisi(&mixing, &params, cfg.seed)?;
    let support = gamma_support_check(&est.gamma_hat, 0.2);

    let hash = cfg.hash();
    let mut table = CsvTable::new(&["k", "value", "converged", "seed", "config_hash"]);
    for kb in &est.per_k {
        table.push(vec![
            kb.k.to_string(),
            fmt_f64(kb.value),
            kb.converged.to_string(),
            cfg.seed.to_string(),
            hash.clone(),
        ]);
    }
    table.write(&out_path(&cfg.out, "parisi.csv"))?;
    std::fs::write(out_path(&cfg.out, "gamma.txt"), est.gamma_hat.to_text())?;
    write_sidecar(
        &out_path(&cfg.out, "parisi_meta.json"),
        serde_json::json!({
            "seed": cfg.seed,
            "config_hash": hash,
            "config": cfg.to_text(),
            "value": est.value,
            "k": est.k,
            "k_max": cfg.k_max,
            "m_cap": est.m_cap,
            "converged": est.converged,
            "support": {
                "first_positive": support.first_positive,
                "flagged": support.flagged,
            },
        }),
    )?;
    println!(
        "ME estimate {:.6} at k = {} (γ̂ in {}/gamma.txt, m_cap {})",
        est.value, est.k, cfg.out, est.m_cap
    );
    Ok(est.converged)
}

fn q_grid(points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![0.5];
    }
    (0..points)
        .map(|i| -1.0 + 2.0 * i as f64 / (points - 1) as f64)
        .collect()
}

fn cmd_gap(cfg: &Config) -> Result<bool> {
    let mixing = mixing_from(cfg)?;
    let gamma_p = if cfg.gamma_file.is_empty() {
        let params = MinimizeParams {
            k_max: cfg.k_max,
            multistart: cfg.multistart,
            m_cap: cfg.m_cap,
            grid: phi_params(cfg),
            ..MinimizeParams::default()
        };
        minimize_parisi(&mixing, &params, cfg.seed)?.gamma_hat
    } else {
        StepGamma::from_text(
            &std::fs::read_to_string(&cfg.gamma_file)
                .with_context(|| format!("reading {}", cfg.gamma_file))?,
        )?
    };

    let qs = q_grid(cfg.q_points);
    let mut eps_list = vec![0.1, 0.2, 0.3, 0.5];
    if !eps_list.contains(&cfg.epsilon) {
        eps_list.push(cfg.epsilon);
        eps_list.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    let scan = gap_scan(&mixing, &gamma_p, &qs, &eps_list, &psi_params(cfg))?;

    let hash = cfg.hash();
    let mut table = CsvTable::new(&["q", "gt_value", "two_parisi", "gap", "seed", "config_hash"]);
    let mut all_ok = true;
    for row in &scan.rows {
        if row.gap > cfg.tol {
            all_ok = false;
        }
        table.push(vec![
            fmt_f64(row.q),
            fmt_f64(row.gt_value),
            fmt_f64(row.two_parisi),
            fmt_f64(row.gap),
            cfg.seed.to_string(),
            hash.clone(),
        ]);
    }
    table.write(&out_path(&cfg.out, "gap.csv"))?;
    write_sidecar(
        &out_path(&cfg.out, "gap_meta.json"),
        serde_json::json!({
            "seed": cfg.seed,
            "config_hash": hash,
            "config": cfg.to_text(),
            "tol": cfg.tol,
            "two_parisi": scan.two_parisi,
            "gamma_p": gamma_p.to_text(),
            "eta_hat": scan.eta_hat.iter()
                .map(|(e, v)| serde_json::json!({"epsilon": e, "eta": v}))
                .collect::<Vec<_>>(),
            "all_gaps_nonpositive": all_ok,
        }),
    )?;
    for (eps, eta) in &scan.eta_hat {
        println!("eta_hat(epsilon = {eps}) = {eta:.6e}");
    }
    println!(
        "gap scan: {} rows, all gaps ≤ tol: {}",
        scan.rows.len(),
        all_ok
    );
    Ok(all_ok)
}

fn cmd_chaos(cfg: &Config) -> Result<bool> {
    let params = ChaosParams {
        scheme: parse_scheme(cfg)?,
        model: parse_model(cfg)?,
        k: cfg.k,
        n: cfg.n,
        t: cfg.t,
        lambdas: cfg.lambdas.clone(),
        eta: cfg.eta,
        epsilon: cfg.epsilon,
        replicas: cfg.replicas,
        set_cap: cfg.set_cap,
        pair_budget: cfg.pair_budget,
    };
    let run = chaos_experiment(&params, cfg.seed)?;

    let hash = cfg.hash();
    let mut table = CsvTable::new(&[
        "lambda",
        "replica",
        "eta",
        "epsilon",
        "max_abs_overlap",
        "set1_size",
        "set2_size",
        "capped_flag",
        "seed",
        "config_hash",
    ]);
    for s in &run.stats {
        table.push(vec![
            fmt_f64(s.lambda),
            s.replica.to_string(),
            fmt_f64(s.eta),
            fmt_f64(s.epsilon),
            fmt_f64(s.max_abs_overlap),
            s.set1_size.to_string(),
            s.set2_size.to_string(),
            (s.capped as u8).to_string(),
            cfg.seed.to_string(),
            hash.clone(),
        ]);
    }
    table.write(&out_path(&cfg.out, "chaos.csv"))?;

    let mut summary = CsvTable::new(&["lambda", "median_max_abs_overlap", "seed", "config_hash"]);
    for (lambda, median) in &run.medians {
        summary.push(vec![
            fmt_f64(*lambda),
            fmt_f64(*median),
            cfg.seed.to_string(),
            hash.clone(),
        ]);
    }
    summary.write(&out_path(&cfg.out, "chaos_summary.csv"))?;
    write_sidecar(
        &out_path(&cfg.out, "chaos_meta.json"),
        serde_json::json!({
            "seed": cfg.seed,
            "config_hash": hash,
            "config": cfg.to_text(),
            "set_cap": cfg.set_cap,
            "pair_budget": cfg.pair_budget,
            "medians": run.medians.iter()
                .map(|(l, m)| serde_json::json!({"lambda": l, "median": m}))
                .collect::<Vec<_>>(),
        }),
    )?;
    for (lambda, median) in &run.medians {
        println!("lambda {lambda:>8}: median max|R| = {median:.4}");
    }
    Ok(true)
}

fn cmd_scaling(cfg: &Config) -> Result<bool> {
    let model = parse_model(cfg)?;
    let space = match model {
        ClauseModel::Antiferro => Space::Balanced,
        _ => Space::Cube,
    };
    // Gaussian reference mixing paired with the clause model.
    let corr = parse_corr(cfg)?;
    let ref_mixing = match model {
        ClauseModel::Ksat => MixingPair::ksat(cfg.k, cfg.t, corr)?,
        _ => MixingPair::pure(cfg.k, cfg.t, corr)?,
    };

    let (me_n, me_flag) = match cfg.me_source.as_str() {
        "exact" => {
            let mut total = 0.0;
            for r in 0..cfg.replicas {
                let seed = derive_seed(cfg.seed, &format!("scaling/gauss/{r}"));
                let model = sample_gaussian(&ref_mixing, cfg.n, seed)?;
                let e = model.to_multilinear()?;
                total += exact_max(&e, space, 1)?.max_value / cfg.n as f64;
            }
            (total / cfg.replicas as f64, "exact-gaussian-enumeration")
        }
        "parisi" => {
            let params = MinimizeParams {
                k_max: cfg.k_max,
                multistart: cfg.multistart,
                m_cap: cfg.m_cap,
                grid: phi_params(cfg),
                ..MinimizeParams::default()
            };
            (minimize_parisi(&ref_mixing, &params, cfg.seed)?.value, "parisi-estimate")
        }
        other => bail!("unknown me_source `{other}`"),
    };

    let hash = cfg.hash();
    let mut table = CsvTable::new(&[
        "lambda",
        "emax_per_n",
        "std_err",
        "prediction",
        "residual",
        "residual_over_sqrt_lambda",
        "ratio",
        "seed",
        "config_hash",
    ]);
    let two_pow_k = (1u64 << cfg.k) as f64;
    for (li, &lambda) in cfg.lambdas.iter().enumerate() {
        let mut vals = Vec::with_capacity(cfg.replicas);
        for r in 0..cfg.replicas {
            let seed = derive_seed(cfg.seed, &format!("scaling/diluted/{li}/{r}"));
            let inst = sample_instance(model, cfg.k, cfg.n, lambda, seed)?;
            let e = inst.to_multilinear()?;
            vals.push(exact_max(&e, space, 1)?.max_value / cfg.n as f64);
        }
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
            / (vals.len() as f64 - 1.0).max(1.0);
        let se = (var / vals.len() as f64).sqrt();
        let prediction = match model {
            ClauseModel::Ksat => -lambda / two_pow_k + lambda.sqrt() / two_pow_k * me_n,
            _ => lambda.sqrt() * me_n,
        };
        let residual = mean - prediction;
        table.push(vec![
            fmt_f64(lambda),
            fmt_f64(mean),
            fmt_f64(se),
            fmt_f64(prediction),
            fmt_f64(residual),
            fmt_f64(residual / lambda.sqrt()),
            fmt_f64(mean / prediction),
            cfg.seed.to_string(),
            hash.clone(),
        ]);
        println!(
            "lambda {lambda:>8}: E max/N = {mean:.5} ± {se:.5}, prediction {prediction:.5}, ratio {:.4}",
            mean / prediction
        );
    }
    table.write(&out_path(&cfg.out, "scaling.csv"))?;
    write_sidecar(
        &out_path(&cfg.out, "scaling_meta.json"),
        serde_json::json!({
            "seed": cfg.seed,
            "config_hash": hash,
            "config": cfg.to_text(),
            "me_n": me_n,
            "me_source": me_flag,
            "space": format!("{space:?}"),
        }),
    )?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cfg, result) = match &cli.command {
        Command::Verify(o) => {
            let cfg = effective_config(&cli, o);
            match cfg {
                Ok(cfg) => (Some(cfg.clone()), cmd_verify(&cfg)),
                Err(e) => (None, Err(e)),
            }
        }
        Command::Sample(o) => match effective_config(&cli, o) {
            Ok(cfg) => (Some(cfg.clone()), cmd_sample(&cfg)),
            Err(e) => (None, Err(e)),
        },
        Command::Parisi(o) => match effective_config(&cli, o) {
            Ok(cfg) => (Some(cfg.clone()), cmd_parisi(&cfg)),
            Err(e) => (None, Err(e)),
        },
        Command::Gap(o) => match effective_config(&cli, o) {
            Ok(cfg) => (Some(cfg.clone()), cmd_gap(&cfg)),
            Err(e) => (None, Err(e)),
        },
        Command::Chaos(o) => match effective_config(&cli, o) {
            Ok(cfg) => (Some(cfg.clone()), cmd_chaos(&cfg)),
            Err(e) => (None, Err(e)),
        },
        Command::Scaling(o) => match effective_config(&cli, o) {
            Ok(cfg) => (Some(cfg.clone()), cmd_scaling(&cfg)),
            Err(e) => (None, Err(e)),
        },
    };
    let _ = cfg;
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
