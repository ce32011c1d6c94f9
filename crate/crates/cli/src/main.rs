//! `stablefam`: run the float stage, the proofs and the exports from the command line.
//!
//! Exit status: 0 verified, 2 ran cleanly but did not verify, 1 operational error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use stablefam_core::pipeline::{
    branch_from_text, branch_to_text, export_bands, export_branch, export_tube, run_approximate, run_floquet, run_prove, Certificate, ModelKind, RunConfig,
    Status,
};
use stablefam_core::{textfmt, Error};

const BRANCH_FILE: &str = "branch.txt";
const DIAGNOSTICS_FILE: &str = "diagnostics.toml";
const CERTIFICATE_FILE: &str = "certificate.toml";

#[derive(Parser, Debug)]
#[command(name = "stablefam", version, about = "Validated continuation and stability proofs for a predator-prey orbit family")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// TOML run configuration; defaults are used for missing keys
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// comma-separated weights to try, each > 1
    #[arg(long, global = true, value_delimiter = ',')]
    nu: Option<Vec<f64>>,
    /// Fourier truncation
    #[arg(long = "K", global = true)]
    k: Option<usize>,
    /// Chebyshev degree
    #[arg(long = "N", global = true)]
    n: Option<usize>,
    /// ball radius for the second-derivative bound
    #[arg(long = "R", global = true)]
    r: Option<f64>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq)]
enum Cmd {
    /// float branch at the Chebyshev nodes
    Approximate,
    /// existence proof and crossing checks
    Prove,
    /// normal-form proof and stability verdict
    Floquet,
    /// plot-ready CSV tables
    Export,
    /// all of the above
    All,
}

enum Outcome {
    Verified,
    Unverified,
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Precondition(format!("cannot read config {}: {e}", p.display())))?;
            textfmt::parse::<RunConfig>(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(v) = &cli.nu {
        cfg.nu = v.clone();
    }
    if let Some(k) = cli.k {
        cfg.k = k;
    }
    if let Some(n) = cli.n {
        cfg.n = n;
    }
    if let Some(r) = cli.r {
        cfg.big_r = r;
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.display().to_string());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, Error> {
    let dir = PathBuf::from(cfg.out.clone().unwrap_or_else(|| "out".into()));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn read(dir: &Path, name: &str) -> Result<String, Error> {
    let p = dir.join(name);
    std::fs::read_to_string(&p).map_err(|e| Error::Precondition(format!("cannot read {}: {e}", p.display())))
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), Error> {
    let p = dir.join(name);
    std::fs::write(&p, text)?;
    eprintln!("wrote {}", p.display());
    Ok(())
}

fn approximate(cfg: &RunConfig, dir: &Path) -> Result<Outcome, Error> {
    let t = Instant::now();
    let a = run_approximate(cfg)?;
    let d = a.diagnostics(cfg)?;
    eprintln!("approximate: {} nodes, max residual {:.2e}, {:.1?}", d.nodes.len(), d.residual_max, t.elapsed());
    write(dir, BRANCH_FILE, &branch_to_text(&a.chi, cfg.nu[0]))?;
    write(dir, DIAGNOSTICS_FILE, &textfmt::emit(&d)?)?;
    Ok(Outcome::Verified)
}

fn report_existence(c: &Certificate) {
    if let Some(e) = &c.existence {
        match (e.r_min(), &e.failure) {
            (Some(r), _) => {
                let nu = e.report.as_ref().map(|r| r.nu).unwrap_or(f64::NAN);
                println!("existence: verified at nu = {nu}, r_min = {r:.3e}, reported r = {:e}", e.r_reported.unwrap_or(f64::NAN));
                if let Some(w) = &e.warning {
                    println!("WARN: {w}");
                }
            }
            (None, f) => println!("existence: NOT verified ({})", f.clone().unwrap_or_default()),
        }
    }
    if let Some(x) = &c.crossings {
        match (&x.report, &x.failure) {
            (Some(r), _) => println!("crossings: kappa_hat_1 in {:?}, kappa_hat_2 in {:?}", r.kappa_hat_1, r.kappa_hat_2),
            (None, f) => println!("crossings: NOT verified ({})", f.clone().unwrap_or_default()),
        }
    }
}

fn prove(cfg: &RunConfig, dir: &Path) -> Result<Outcome, Error> {
    let t = Instant::now();
    let branch = read(dir, BRANCH_FILE)?;
    let cert = run_prove(cfg, &branch)?;
    eprintln!("prove: {:.1?}", t.elapsed());
    write(dir, CERTIFICATE_FILE, &cert.to_text()?)?;
    report_existence(&cert);
    let ok = cert.existence.as_ref().is_some_and(|e| e.verified())
        && (cfg.model == ModelKind::LinearToy || cert.crossings.as_ref().is_some_and(|c| c.report.is_some()));
    Ok(if ok { Outcome::Verified } else { Outcome::Unverified })
}

fn floquet(cfg: &RunConfig, dir: &Path) -> Result<Outcome, Error> {
    let t = Instant::now();
    let branch = read(dir, BRANCH_FILE)?;
    let cert = Certificate::from_text(&read(dir, CERTIFICATE_FILE)?)?;
    let cert = run_floquet(cfg, &branch, &cert)?;
    eprintln!("floquet: {:.1?}", t.elapsed());
    write(dir, CERTIFICATE_FILE, &cert.to_text()?)?;
    let f = cert.floquet.as_ref().unwrap();
    match f.contraction.radius() {
        Some(r) => println!("normal form: verified, r_G = {r:.3e}"),
        None => println!("normal form: NOT verified"),
    }
    match (&f.verdict, &f.failure) {
        (Some(v), _) => {
            println!("stability: stable for kappa in {:?}; non-trivial exponents in Re [{:.4}, {:.4}]", v.stable_kappa, v.omega.re_lo, v.omega.re_hi)
        }
        (None, e) => println!("stability: NOT verified ({})", e.clone().unwrap_or_default()),
    }
    Ok(if f.stable() { Outcome::Verified } else { Outcome::Unverified })
}

fn export(cfg: &RunConfig, dir: &Path) -> Result<Outcome, Error> {
    let branch = read(dir, BRANCH_FILE)?;
    let cert = Certificate::from_text(&read(dir, CERTIFICATE_FILE)?)?;
    let r = cert.existence.as_ref().and_then(|e| e.r_min()).ok_or_else(|| Error::Precondition("certificate has no verified existence proof".into()))?;
    if cfg.model != ModelKind::PredatorPrey {
        return Err(Error::Precondition("exports need the predator-prey model".into()));
    }
    let chi = branch_from_text(&branch)?;
    let p = cfg.params.parse()?;
    let e = &cfg.export;
    write(dir, "branch.csv", &export_branch(&chi, r, &p, e.samples)?)?;
    // between the two crossings when they are known
    let kappas = match cert.crossings.as_ref().and_then(|c| c.report.as_ref()) {
        Some(c) => (c.kappa_hat_1.mid(), c.kappa_hat_2.mid()),
        None => (p.kappa1.mid(), p.kappa2.mid()),
    };
    write(dir, "tube.csv", &export_tube(&chi, r, &p, kappas, e.tube_kappa, e.tube_t)?)?;
    if let Some(f) = &cert.floquet {
        write(dir, "bands.csv", &export_bands(&f.bands))?;
    }
    Ok(Outcome::Verified)
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    let cfg = load_config(cli)?;
    if let Some(t) = cfg.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| Error::Precondition(e.to_string()))?;
    }
    let dir = out_dir(&cfg)?;
    match cli.cmd {
        Cmd::Approximate => approximate(&cfg, &dir),
        Cmd::Prove => prove(&cfg, &dir),
        Cmd::Floquet => floquet(&cfg, &dir),
        Cmd::Export => export(&cfg, &dir),
        Cmd::All => {
            approximate(&cfg, &dir)?;
            prove(&cfg, &dir)?;
            if cfg.model == ModelKind::PredatorPrey {
                let cert = Certificate::from_text(&read(&dir, CERTIFICATE_FILE)?)?;
                if cert.existence.as_ref().is_some_and(|e| e.verified()) {
                    floquet(&cfg, &dir)?;
                    export(&cfg, &dir)?;
                }
            }
            let cert = Certificate::from_text(&read(&dir, CERTIFICATE_FILE)?)?;
            println!("status: {:?}", cert.status);
            Ok(if cert.status == Status::Verified { Outcome::Verified } else { Outcome::Unverified })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(Outcome::Verified) => ExitCode::SUCCESS,
        Ok(Outcome::Unverified) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
