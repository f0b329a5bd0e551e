use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use qnetcert_core::bounds;
use qnetcert_core::certify::{
    self, fidelity_upper_bound_detailed, overall, CertReport, FidelityMode, RunOptions, SolveOpts,
    Status, Target,
};
use qnetcert_core::error::{Error, Result};
use qnetcert_core::io;
use qnetcert_core::states::sample::{sample_cqn_state, sample_iqn_state};
use qnetcert_core::states::{covariance, profile_for_state, rho_alpha, MeasurementCollection};

/// Environment variable overriding the solver feasibility tolerance.
const FEAS_TOL_ENV: &str = "QNETCERT_FEAS_TOL";

#[derive(Parser)]
#[command(
    name = "qnetcert",
    version,
    about = "Certify quantum states against network compatibility criteria"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run all applicable criteria on a state and report margins
    Certify(CertifyArgs),
    /// Print the purity-derived bound table for a state
    Bounds(BoundsArgs),
    /// Upper-bound the fidelity with any network-preparable state
    Fidelity(FidelityArgs),
    /// Draw seeded network states and certify them
    Sample(SampleArgs),
    /// CSV of Theorem-1 margins across the parity-mixture family
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Markdown,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    Iqn,
    Cqn,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Generic,
    Stabilizer,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Iqn,
    Cqn,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    state: PathBuf,
    #[arg(long)]
    measurements: PathBuf,
    /// Comma-separated criterion ids to keep
    /// (eq1, eq2, theorem1, eq7, obs3, obs4, inflation)
    #[arg(long, value_delimiter = ',')]
    criteria: Vec<String>,
    /// Externally calibrated lower bound on the state purity
    #[arg(long)]
    tau: Option<f64>,
    /// Membership claim to test
    #[arg(long, value_enum, default_value = "cqn")]
    target: TargetArg,
    /// Solver feasibility tolerance (overrides QNETCERT_FEAS_TOL)
    #[arg(long)]
    feas_tol: Option<f64>,
    /// Use the stricter main-text constant in the multi-topology bound
    #[arg(long)]
    main_text_obs4: bool,
    #[arg(long, value_enum, default_value = "markdown")]
    format: Format,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    state: PathBuf,
    #[arg(long)]
    measurements: PathBuf,
    #[arg(long, value_enum, default_value = "markdown")]
    format: Format,
}

#[derive(Args)]
struct FidelityArgs {
    #[arg(long)]
    network: PathBuf,
    /// Target state whose covariance sets the deviation program
    #[arg(long)]
    state: PathBuf,
    #[arg(long)]
    measurements: PathBuf,
    #[arg(long, value_enum, default_value = "stabilizer")]
    mode: ModeArg,
    #[arg(long)]
    feas_tol: Option<f64>,
    #[arg(long, value_enum, default_value = "markdown")]
    format: Format,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long)]
    count: usize,
    #[arg(long)]
    seed: u64,
    /// Mixture components per CQN sample
    #[arg(long, default_value_t = 3)]
    components: usize,
    /// Directory receiving state and provenance files
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    feas_tol: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 0.0)]
    from: f64,
    #[arg(long, default_value_t = 0.5)]
    to: f64,
    #[arg(long, default_value_t = 11)]
    steps: usize,
    #[arg(long)]
    feas_tol: Option<f64>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.cmd {
        Cmd::Certify(a) => cmd_certify(a),
        Cmd::Bounds(a) => cmd_bounds(a),
        Cmd::Fidelity(a) => cmd_fidelity(a),
        Cmd::Sample(a) => cmd_sample(a),
        Cmd::Sweep(a) => cmd_sweep(a),
    }
}

fn solve_opts(flag: Option<f64>) -> Result<SolveOpts> {
    let mut opts = SolveOpts::default();
    if let Ok(raw) = std::env::var(FEAS_TOL_ENV) {
        opts.feas_tol = raw
            .parse()
            .map_err(|_| Error::Invalid(format!("{FEAS_TOL_ENV}={raw} is not a number")))?;
    }
    if let Some(v) = flag {
        opts.feas_tol = v;
    }
    if !(opts.feas_tol > 0.0) {
        return Err(Error::Invalid(format!(
            "feasibility tolerance {} must be positive",
            opts.feas_tol
        )));
    }
    Ok(opts)
}

fn criterion_slug(r: &CertReport) -> &'static str {
    use qnetcert_core::certify::CriterionId::*;
    match r.criterion {
        IqnDecomposition => "eq1",
        CqnDecomposition => "theorem1",
        NormDecomposition => "eq7",
        VertexNorm => "eq2",
        MixtureNorm => "obs3",
        MultiTopology => "obs4",
        TriangleInflation => "inflation",
        SymmetricInflation => "eq11",
        KnownNoise => "noise",
    }
}

const KNOWN_SLUGS: [&str; 7] = ["eq1", "eq2", "theorem1", "eq7", "obs3", "obs4", "inflation"];

fn exit_code_for(status: Status) -> u8 {
    match status {
        Status::Compatible => 0,
        Status::Incompatible => 2,
        Status::Indeterminate => 3,
    }
}

fn print_reports(reports: &[CertReport], format: Format) {
    let status = overall(reports);
    match format {
        Format::Json => {
            let doc = json!({
                "overall": status,
                "reports": reports,
            });
            println!("{}", serde_json::to_string_pretty(&doc).unwrap());
        }
        Format::Markdown => {
            println!("| criterion | anchor | status | margin |");
            println!("|---|---|---|---|");
            for r in reports {
                println!(
                    "| {} | {} | {} | {:+.6e} |",
                    r.criterion.title(),
                    r.anchor,
                    r.status,
                    r.margin
                );
            }
            println!();
            for r in reports {
                println!("- {}: {}", r.anchor, r.details);
            }
            println!();
            println!("overall: {status}");
        }
    }
}

fn cmd_certify(a: CertifyArgs) -> Result<u8> {
    let g = io::load_network(&a.network)?;
    let state = io::load_state(&a.state)?;
    let m = io::load_measurements(&a.measurements)?;
    for slug in &a.criteria {
        if !KNOWN_SLUGS.contains(&slug.as_str()) {
            return Err(Error::Invalid(format!(
                "unknown criterion id {slug:?}; known ids: {}",
                KNOWN_SLUGS.join(", ")
            )));
        }
    }
    let options = RunOptions {
        target: match a.target {
            TargetArg::Iqn => Target::Iqn,
            TargetArg::Cqn => Target::Cqn,
        },
        solve: solve_opts(a.feas_tol)?,
        main_text_multi_topology: a.main_text_obs4,
        purity_floor: a.tau,
        ..RunOptions::default()
    };
    let mut reports = certify::run_all(&state, &m, &g, &options)?;
    if !a.criteria.is_empty() {
        for slug in &a.criteria {
            if !reports.iter().any(|r| criterion_slug(r) == slug) {
                return Err(Error::Invalid(format!(
                    "criterion {slug:?} does not apply to these inputs (target/topology)"
                )));
            }
        }
        reports.retain(|r| a.criteria.iter().any(|s| s == criterion_slug(r)));
    }
    print_reports(&reports, a.format);
    Ok(exit_code_for(overall(&reports)))
}

fn cmd_bounds(a: BoundsArgs) -> Result<u8> {
    let state = io::load_state(&a.state)?;
    let m = io::load_measurements(&a.measurements)?;
    let p = profile_for_state(&state, &m, 1e-9)?;
    let beta = bounds::beta(p.rank, p.tau)?;
    let eps = bounds::epsilon(p.rank, p.tau)?;
    let entry = bounds::gamma_c_entry_bound(&p);
    let trace = bounds::gamma_c_trace_bound(&p)?;
    let l1 = p.l1.unwrap_or(f64::NAN);
    match a.format {
        Format::Json => {
            let doc = json!({
                "rank": p.rank,
                "tau": p.tau,
                "l1": l1,
                "beta": beta,
                "epsilon": eps,
                "entry_bound": entry,
                "trace_bound": trace,
            });
            println!("{}", serde_json::to_string_pretty(&doc).unwrap());
        }
        Format::Markdown => {
            println!("| quantity | value |");
            println!("|---|---|");
            println!("| rank r | {} |", p.rank);
            println!("| purity tau | {:.12} |", p.tau);
            println!("| operator constant l1 | {l1:.12} |");
            println!("| entry cap beta | {beta:.12} |");
            println!("| mean drift epsilon | {eps:.12} |");
            println!("| classical entry bound | {entry:.12} |");
            println!("| classical trace bound | {trace:.12} |");
        }
    }
    Ok(0)
}

fn cmd_fidelity(a: FidelityArgs) -> Result<u8> {
    let g = io::load_network(&a.network)?;
    let state = io::load_state(&a.state)?;
    let m = io::load_measurements(&a.measurements)?;
    let gamma = covariance(&state, &m)?;
    let mode = match a.mode {
        ModeArg::Generic => FidelityMode::Generic,
        ModeArg::Stabilizer => FidelityMode::Stabilizer,
    };
    let r = fidelity_upper_bound_detailed(&gamma, &g, mode, &solve_opts(a.feas_tol)?)?;
    match a.format {
        Format::Json => {
            println!("{}", serde_json::to_string_pretty(&r).unwrap());
        }
        Format::Markdown => {
            println!("| quantity | value |");
            println!("|---|---|");
            println!("| mode | {:?} |", r.mode);
            println!("| deviation t0 | {:.12} |", r.t0);
            println!("| raw solver t0 | {:.12} |", r.t0_raw);
            println!("| fidelity bound | {:.12} |", r.bound);
        }
    }
    Ok(0)
}

fn cmd_sample(a: SampleArgs) -> Result<u8> {
    let g = io::load_network(&a.network)?;
    std::fs::create_dir_all(&a.out)?;
    let solve = solve_opts(a.feas_tol)?;
    let mut all_ok = true;
    let m = MeasurementCollection::z_measurements(g.n_parties());
    for i in 0..a.count {
        let sample_seed = a.seed.wrapping_add(i as u64);
        let (state, options, provenance) = match a.kind {
            KindArg::Iqn => {
                let s = sample_iqn_state(&g, true, sample_seed)?;
                let prov = json!({
                    "kind": "iqn",
                    "seed": sample_seed,
                    "slot_count": s.slot_count,
                    "purity": s.purity,
                    "rank": s.rank,
                });
                let options = RunOptions {
                    target: Target::Iqn,
                    solve,
                    ..RunOptions::default()
                };
                (s.state, options, prov)
            }
            KindArg::Cqn => {
                let s = sample_cqn_state(&g, a.components, sample_seed)?;
                let prov = json!({
                    "kind": "cqn",
                    "seed": sample_seed,
                    "components": s.decomposition.len(),
                    "weights": s.decomposition.weights(),
                });
                let options = RunOptions {
                    target: Target::Cqn,
                    solve,
                    decomposition: Some(s.decomposition),
                    ..RunOptions::default()
                };
                (s.state, options, prov)
            }
        };
        io::save_state(&a.out.join(format!("state_{i:03}.json")), &state)?;
        std::fs::write(
            a.out.join(format!("provenance_{i:03}.json")),
            serde_json::to_string_pretty(&provenance)? + "\n",
        )?;
        let reports = certify::run_all(&state, &m, &g, &options)?;
        let status = overall(&reports);
        if status != Status::Compatible {
            all_ok = false;
            let firing: Vec<_> = reports
                .iter()
                .filter(|r| r.status != Status::Compatible)
                .map(|r| r.anchor.clone())
                .collect();
            println!("sample {i:03}: {status} ({})", firing.join(", "));
        } else {
            println!("sample {i:03}: {status}");
        }
    }
    println!("samples: {}", a.count);
    println!("all compatible: {all_ok}");
    Ok(if all_ok { 0 } else { 2 })
}

fn cmd_sweep(a: SweepArgs) -> Result<u8> {
    if a.steps < 2 || !(a.from <= a.to) {
        return Err(Error::Invalid(
            "sweep needs from <= to and at least two steps".into(),
        ));
    }
    let g = qnetcert_core::network::Network::triangle();
    let m = MeasurementCollection::z_measurements(3);
    let solve = solve_opts(a.feas_tol)?;
    println!("alpha,margin,status");
    for i in 0..a.steps {
        let alpha = a.from + (a.to - a.from) * i as f64 / (a.steps - 1) as f64;
        let state = rho_alpha(alpha)?;
        let gamma = covariance(&state, &m)?;
        let p = profile_for_state(&state, &m, 1e-9)?;
        let r = certify::certify_cqn_covariance_opts(&gamma, &g, &p, &solve)?;
        println!("{alpha:.6},{:.9e},{}", r.margin, r.status);
    }
    Ok(0)
}
