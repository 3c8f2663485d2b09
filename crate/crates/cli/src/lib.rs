//! Command-line front end: equilibria, spectra, mode shapes, trajectories and the
//! check suite.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use anyhow::Context as _;
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use polytrope_core::discretization::make_grid;
use polytrope_core::dynamics::{evolve_mode, negative_mode_growth, DensityOperator, ModeTrajectory};
use polytrope_core::eigensolver::{solve_gsep, solve_tridiagonal, ModeSet};
use polytrope_core::equilibrium::{build_equilibrium, Equilibrium, GasLaw};
use polytrope_core::operators::{assemble_Lss, assemble_Nl, mhat_mode, RadialField};
use polytrope_core::verification::{run_all, VerificationConfig};
use polytrope_core::Error;
use serde_json::json;

/// Eigenvalues with |λ| ≤ ZERO_FRACTION·max|λ| are reported in the kernel row.
pub const ZERO_FRACTION: f64 = 1e-6;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "polytrope", version, about = "Spectra and linear dynamics of polytropic gas spheres")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub run: RunConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Flags shared by all commands.
#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Adiabatic exponent, 6/5 < gamma < 2.
    #[arg(long, global = true, default_value_t = 5.0 / 3.0)]
    pub gamma: f64,
    #[arg(long, global = true, default_value_t = 1.0)]
    pub rho_center: f64,
    /// Polytropic constant in P = A rho^gamma.
    #[arg(long = "A", global = true, default_value_t = 1.0)]
    pub a: f64,
    /// Gravitational constant.
    #[arg(long = "G", global = true, default_value_t = 1.0)]
    pub g: f64,
    /// Spherical harmonic degrees, comma separated.
    #[arg(long, global = true, value_delimiter = ',', default_value = "0")]
    pub l: Vec<usize>,
    /// Number of grid cells.
    #[arg(long, global = true, default_value_t = 400)]
    pub n: usize,
    /// Surface clustering exponent of the grid.
    #[arg(long, global = true, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, global = true, default_value_t = 5)]
    pub n_modes: usize,
    #[arg(long, global = true, default_value_t = 20240607)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the equilibrium profile.
    Equilibrium,
    /// Eigenvalues per degree and the merged spectrum.
    Spectrum,
    /// Eigenvalues with nodal eigenvectors.
    Modes,
    /// Closed-form trajectory of one mode.
    Evolve(EvolveArgs),
    /// Run the check suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct EvolveArgs {
    /// 1-based index among the nonzero eigenvalues of the first degree in --l.
    #[arg(long, default_value_t = 1)]
    pub mode: usize,
    /// Amplitude E of the density constraint div v0 = E sqrt(lambda) phi.
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    /// Scale of a solenoidal (toroidal) residue added to v0.
    #[arg(long, default_value_t = 0.0)]
    pub residue: f64,
    #[arg(long, default_value_t = 10.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 201)]
    pub samples: usize,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.3, 4.0 / 3.0, 1.5, 5.0 / 3.0])]
    pub gammas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![200, 400, 800])]
    pub ns: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0, 1, 2])]
    pub ls: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub n_random: usize,
    /// Multiplier on every tolerance; 0 makes every check fail.
    #[arg(long, default_value_t = 1.0)]
    pub tolerance_scale: f64,
    /// Run only these checks.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,
    /// Also write the JSON report here.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

/// A failure together with its exit status.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub error: anyhow::Error,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidGamma(_) | Error::InvalidParameter(_) | Error::InvalidGrid(_) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        };
        CliError { code, error: e.into() }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(error: anyhow::Error) -> Self {
        CliError { code: EXIT_FAILURE, error }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError { code: EXIT_FAILURE, error: e.into() }
    }
}

fn usage(msg: String) -> CliError {
    CliError { code: EXIT_USAGE, error: anyhow::anyhow!(msg) }
}

impl RunConfig {
    pub fn law(&self) -> Result<GasLaw, CliError> {
        Ok(GasLaw::new(self.gamma, self.a, self.g, self.rho_center)?)
    }

    fn validate(&self, command: &Command) -> Result<(), CliError> {
        self.law()?;
        let needs_grid = !matches!(command, Command::Equilibrium | Command::Verify(_));
        if needs_grid {
            if self.n < 8 {
                return Err(usage(format!("--n must be at least 8, got {}", self.n)));
            }
            if !(self.p >= 1.0) {
                return Err(usage(format!("--p must be at least 1, got {}", self.p)));
            }
            if self.l.is_empty() {
                return Err(usage("--l needs at least one degree".into()));
            }
        }
        Ok(())
    }

    fn writer(&self) -> Result<Box<dyn Write>, CliError> {
        Ok(match &self.out {
            Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
            None => Box::new(io::stdout().lock()),
        })
    }
}

/// Dispatch a parsed command line; returns the exit status.
pub fn run(cli: Cli) -> Result<i32, CliError> {
    cli.run.validate(&cli.command)?;
    match &cli.command {
        Command::Equilibrium => cmd_equilibrium(&cli.run),
        Command::Spectrum => cmd_spectrum(&cli.run, false),
        Command::Modes => cmd_spectrum(&cli.run, true),
        Command::Evolve(args) => cmd_evolve(&cli.run, args),
        Command::Verify(args) => cmd_verify(&cli.run, args),
    }
}

pub fn cmd_equilibrium(cfg: &RunConfig) -> Result<i32, CliError> {
    let eq = build_equilibrium(cfg.law()?, (cfg.n + 1).max(2))?;
    let doc = eq.to_document();
    let mut out = cfg.writer()?;
    match cfg.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &doc).context("writing equilibrium")?;
            writeln!(out)?;
        }
        Format::Csv => {
            writeln!(out, "r,rho,u,P")?;
            for s in &doc.samples {
                writeln!(out, "{},{},{},{}", s.r, s.rho, s.u, s.p)?;
            }
        }
    }
    Ok(EXIT_OK)
}

/// Spectrum of one degree: 𝓝_l, plus 𝓛ˢˢ for l = 0.
pub struct DegreeSpectrum {
    pub l: usize,
    pub nl: Result<ModeSet, Error>,
    pub lss: Option<Result<ModeSet, Error>>,
}

/// Indices of the first `k` eigenvalues outside the kernel band.
pub fn nonzero_indices(ms: &ModeSet, k: usize) -> Vec<usize> {
    let top = ms.lambdas.iter().map(|v| v.abs()).fold(0.0, f64::max);
    (0..ms.len()).filter(|&j| ms.lambdas[j].abs() > ZERO_FRACTION * top).take(k).collect()
}

pub fn compute_spectra(eq: &Equilibrium, cfg: &RunConfig) -> Result<Vec<DegreeSpectrum>, CliError> {
    let grid = make_grid(eq.radius, cfg.n, cfg.p)?;
    // one extra mode for each possible zero eigenvalue (l = 0 at 4/3, translation at l = 1)
    let want = cfg.n_modes + 2;
    let results = std::thread::scope(|s| {
        let handles: Vec<_> = cfg
            .l
            .iter()
            .map(|&l| {
                let grid = &grid;
                s.spawn(move || {
                    let nl = assemble_Nl(eq, grid, l).and_then(|f| solve_gsep(&f, Some(want)));
                    let lss = (l == 0).then(|| solve_tridiagonal(&assemble_Lss(eq, grid), want));
                    DegreeSpectrum { l, nl, lss }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("solver threads do not panic")).collect()
    });
    Ok(results)
}

/// Row of the merged spectrum.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MergedRow {
    pub lambda: f64,
    pub l: Option<usize>,
    pub multiplicity: String,
    pub unstable: bool,
}

pub fn merged_table(spectra: &[DegreeSpectrum], n_modes: usize) -> Vec<MergedRow> {
    let mut rows = Vec::new();
    for d in spectra {
        if let Ok(ms) = &d.nl {
            for j in nonzero_indices(ms, n_modes) {
                let lam = ms.lambdas[j];
                rows.push(MergedRow { lambda: lam, l: Some(d.l), multiplicity: (2 * d.l + 1).to_string(), unstable: lam < 0.0 });
            }
        }
    }
    rows.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    if n_modes > 0 {
        rows.push(MergedRow { lambda: 0.0, l: None, multiplicity: "infinite multiplicity (kernel)".into(), unstable: false });
    }
    rows
}

fn modeset_json(ms: &Result<ModeSet, Error>, k: usize, vectors: bool) -> serde_json::Value {
    match ms {
        Ok(ms) => {
            let idx = nonzero_indices(ms, k);
            let mut v = json!({
                "meta": ms.meta,
                "lambdas": idx.iter().map(|&j| ms.lambdas[j]).collect::<Vec<_>>(),
                "residuals": idx.iter().map(|&j| ms.residuals[j]).collect::<Vec<_>>(),
            });
            if vectors {
                v["vectors"] = json!(idx.iter().map(|&j| &ms.nodal[j]).collect::<Vec<_>>());
            }
            v
        }
        Err(e) => json!({ "error": e.to_string() }),
    }
}

pub fn cmd_spectrum(cfg: &RunConfig, vectors: bool) -> Result<i32, CliError> {
    let eq = build_equilibrium(cfg.law()?, 64)?;
    let spectra = compute_spectra(&eq, cfg)?;
    let rows = merged_table(&spectra, cfg.n_modes);
    let mut failed = false;
    for d in &spectra {
        if let Err(e) = &d.nl {
            eprintln!("l = {}: {e}", d.l);
            failed = true;
        }
    }
    let mut out = cfg.writer()?;
    match cfg.format {
        Format::Json => {
            let per_l: Vec<_> = spectra
                .iter()
                .map(|d| {
                    let mut v = json!({ "l": d.l, "Nl": modeset_json(&d.nl, cfg.n_modes, vectors) });
                    if let Some(lss) = &d.lss {
                        v["Lss"] = modeset_json(lss, cfg.n_modes, vectors);
                    }
                    v
                })
                .collect();
            let mut doc = json!({ "gamma": cfg.gamma, "N": cfg.n, "p": cfg.p, "per_l": per_l, "merged": rows });
            if vectors {
                let grid = make_grid(eq.radius, cfg.n, cfg.p)?;
                doc["r"] = json!(grid.nodes);
            }
            serde_json::to_writer_pretty(&mut out, &doc).context("writing spectrum")?;
            writeln!(out)?;
        }
        Format::Csv if vectors => {
            // nodal eigenvectors of the first degree, one column per mode
            let grid = make_grid(eq.radius, cfg.n, cfg.p)?;
            let d = &spectra[0];
            let idx = d.nl.as_ref().map(|ms| nonzero_indices(ms, cfg.n_modes)).unwrap_or_default();
            let header: Vec<String> = std::iter::once("r".to_string()).chain((1..=idx.len()).map(|k| format!("mode_{k}"))).collect();
            writeln!(out, "{}", header.join(","))?;
            if let Ok(ms) = &d.nl {
                for (i, r) in grid.nodes.iter().enumerate() {
                    let vals: Vec<String> = idx.iter().map(|&j| ms.nodal[j][i].to_string()).collect();
                    writeln!(out, "{r},{}", vals.join(","))?;
                }
            }
        }
        Format::Csv => {
            writeln!(out, "lambda,l,multiplicity,unstable")?;
            for r in &rows {
                let l = r.l.map(|l| l.to_string()).unwrap_or_default();
                writeln!(out, "{},{},{},{}", r.lambda, l, r.multiplicity, r.unstable)?;
            }
        }
    }
    Ok(if failed { EXIT_FAILURE } else { EXIT_OK })
}

fn trajectory(eq: &Equilibrium, cfg: &RunConfig, args: &EvolveArgs) -> Result<ModeTrajectory, CliError> {
    let l = cfg.l[0];
    let grid = make_grid(eq.radius, cfg.n, cfg.p)?;
    if args.samples < 2 || !(args.t_end > 0.0) {
        return Err(usage("--samples must be at least 2 and --t-end positive".into()));
    }
    let times: Vec<f64> = (0..args.samples).map(|i| args.t_end * i as f64 / (args.samples - 1) as f64).collect();
    let ms = solve_gsep(&assemble_Nl(eq, &grid, l)?, Some(args.mode + 2))?;
    let idx = nonzero_indices(&ms, args.mode);
    let &j = idx.get(args.mode.wrapping_sub(1)).ok_or_else(|| usage(format!("mode {} does not exist", args.mode)))?;
    if ms.lambdas[j] < 0.0 {
        if l != 0 {
            return Err(usage(format!("mode {} of degree {l} is negative", args.mode)));
        }
        let lss = solve_tridiagonal(&assemble_Lss(eq, &grid), 1)?;
        let psi = RadialField::new(&grid, lss.nodal[0].clone());
        return Ok(negative_mode_growth(eq, &grid, lss.lambdas[0], &psi, args.amplitude, &times)?);
    }
    let op = DensityOperator::new(eq, &grid, l)?;
    let (lambda, phi) = op.refine_eigenpair(ms.lambdas[j], &DVector::from_column_slice(&ms.nodal[j]))?;
    let shape = mhat_mode(eq, &grid, l, 0, &op.density(&phi));
    let mut v0 = shape.scaled(args.amplitude / lambda.sqrt());
    if args.residue != 0.0 {
        if l == 0 {
            return Err(usage("spherically symmetric modes have no solenoidal residue".into()));
        }
        let rr = eq.radius;
        v0.kappa_t = RadialField::from_fn(&grid, |r| args.residue * r * (rr - r));
    }
    Ok(evolve_mode(&op, lambda, &phi, args.amplitude, &v0, &times)?)
}

pub fn cmd_evolve(cfg: &RunConfig, args: &EvolveArgs) -> Result<i32, CliError> {
    let eq = build_equilibrium(cfg.law()?, 64)?;
    let tr = trajectory(&eq, cfg, args)?;
    let wn = polytrope_core::operators::WNorm::new(&eq, &make_grid(eq.radius, cfg.n, cfg.p)?);
    let b_norm = wn.mode(&tr.b_field);
    let mut out = cfg.writer()?;
    match cfg.format {
        Format::Csv => tr.write_csv(&mut out)?,
        Format::Json => {
            let doc = json!({
                "periodic": tr.periodic_flag,
                "growing": !tr.periodic_flag,
                "branch": tr.branch,
                "B_norm": b_norm,
                "t": tr.times,
                "norm": tr.norms,
                "component_norms": tr.component_norms,
            });
            serde_json::to_writer_pretty(&mut out, &doc).context("writing trajectory")?;
            writeln!(out)?;
        }
    }
    eprintln!("periodic={} B_norm={b_norm:e}", tr.periodic_flag);
    Ok(EXIT_OK)
}

pub fn cmd_verify(cfg: &RunConfig, args: &VerifyArgs) -> Result<i32, CliError> {
    let config = VerificationConfig {
        gammas: args.gammas.clone(),
        ls: args.ls.clone(),
        ns: args.ns.clone(),
        p: cfg.p,
        n_modes: cfg.n_modes.max(1),
        seed: cfg.seed,
        n_random: args.n_random,
        tolerance_scale: args.tolerance_scale,
        only: args.only.clone(),
    };
    let report = run_all(&config)?;
    let text = serde_json::to_string_pretty(&report).context("serializing report")?;
    if let Some(p) = &args.json {
        std::fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?;
    }
    if cfg.out.is_some() {
        let mut out = cfg.writer()?;
        match cfg.format {
            Format::Json => writeln!(out, "{text}")?,
            Format::Csv => {
                writeln!(out, "name,pass,skipped,runtime_s")?;
                for r in &report.results {
                    writeln!(out, "{},{},{},{}", r.name, r.pass, r.skipped.is_some(), r.runtime_s)?;
                }
            }
        }
    }
    print!("{}", report.table());
    Ok(if report.all_passed() { EXIT_OK } else { EXIT_FAILURE })
}
