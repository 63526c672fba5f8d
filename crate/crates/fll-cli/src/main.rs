//! fll: self-similar sets, zig-zag Hölder functions, and level-set box
//! counting from the command line.
//!
//! Exit codes: 0 success, 1 input error, 2 acceptance-gate failure
//! (`experiment --check` only). `FLL_THREADS` caps the worker pool.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use fll_core::boxdim::{counts_csv, fits_csv, spectrum, ThicknessRule};
use fll_core::descriptor::FunctionDescriptor;
use fll_core::experiments::{
    loglog_csv, run_main, run_slice_survey, run_upper_bound_audit, ExperimentConfig,
    ExperimentReport, SliceSurveyConfig,
};
use fll_core::holder::{holder_certify, phi_eval, AuxiliaryFunction, BoxSampler};
use fll_core::ifs::CoverOptions;
use fll_core::{attractor_cells, moran_dimension, GridRange, SimilaritySystem};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fll", version, about = "fractal level-set laboratory")]
struct Cli {
    /// Directory for reports and CSV files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Similarity (Moran) dimension of a system definition file.
    Dim {
        #[arg(long)]
        ifs: PathBuf,
    },
    /// Evaluate the zig-zag function φ_{n,m} at a point.
    Phi {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        depth: u32,
    },
    /// Sampled Hölder certificate of a descriptor-defined function.
    Certify {
        #[arg(long = "fn")]
        function: PathBuf,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        pairs: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Level-set dimension spectrum of a function over an attractor cover.
    Levelsets {
        #[arg(long = "fn")]
        function: PathBuf,
        #[arg(long)]
        ifs: PathBuf,
        #[arg(long)]
        kmin: u32,
        #[arg(long)]
        kmax: u32,
        #[arg(long)]
        values: usize,
        #[arg(long, default_value_t = 2)]
        base: u32,
        /// Thickening exponent; defaults to the descriptor's own exponent.
        #[arg(long)]
        alpha: Option<f64>,
        /// Thickening constant.
        #[arg(long, default_value_t = 2.0)]
        c: f64,
        #[arg(long, default_value_t = 10.0)]
        percentile: f64,
    },
    /// Hyperplane slice dimension survey over random directions.
    Slices {
        #[arg(long)]
        ifs: PathBuf,
        #[arg(long)]
        directions: usize,
        #[arg(long)]
        offsets: usize,
        #[arg(long, default_value_t = 1)]
        kmin: u32,
        #[arg(long, default_value_t = 5)]
        kmax: u32,
        #[arg(long, default_value_t = 5)]
        base: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Full main experiment from a config file; flags override file fields.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Gate the run: exit 2 when |median − predicted| > tol.
        #[arg(long)]
        check: bool,
        #[arg(long, default_value_t = 0.15)]
        tol: f64,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        kmin: Option<u32>,
        #[arg(long)]
        kmax: Option<u32>,
        #[arg(long)]
        values: Option<usize>,
        #[arg(long)]
        percentile: Option<f64>,
        #[arg(long)]
        base: Option<u32>,
    },
    /// Re-audit an experiment report against the covering upper bound.
    Audit {
        #[arg(long)]
        report: PathBuf,
    },
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("FLL_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn load_system(path: &Path) -> Result<SimilaritySystem> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let sys = SimilaritySystem::from_json(&text)
        .with_context(|| format!("parsing {}", path.display()))?;
    sys.validate()
        .with_context(|| format!("validating {}", path.display()))?;
    Ok(sys)
}

fn write_out(out_dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    let path = out_dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn write_experiment_outputs(out: &Path, report: &ExperimentReport) -> Result<()> {
    write_out(out, "report.json", &serde_json::to_string_pretty(report)?)?;
    write_out(out, "counts.csv", &counts_csv(&report.counts))?;
    write_out(out, "fits.csv", &fits_csv(&report.fits))?;
    write_out(
        out,
        "loglog.csv",
        &loglog_csv(&report.counts, &report.cover_counts),
    )?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Dim { ifs } => {
            let sys = load_system(&ifs)?;
            let s = moran_dimension(&sys, 1e-12)?;
            println!("{s:.12}");
        }

        Command::Phi { n, m, x, depth } => {
            let aux = AuxiliaryFunction::new(n, m)?;
            let (value, err) = phi_eval(&aux, x, depth);
            println!("{value}");
            eprintln!("error bound {err:e}");
        }

        Command::Certify {
            function,
            c,
            alpha,
            pairs,
            seed,
        } => {
            let text = std::fs::read_to_string(&function)
                .with_context(|| format!("reading {}", function.display()))?;
            let loaded = FunctionDescriptor::from_json(&text)?.build()?;
            let sampler = BoxSampler::new(loaded.domain.0.clone(), loaded.domain.1);
            let cert = holder_certify(loaded.field.as_ref(), &sampler, c, alpha, pairs, seed);
            write_out(&cli.out, "certificate.json", &serde_json::to_string_pretty(&cert)?)?;
            println!(
                "max_ratio {:.9} against constant {c} (exponent {alpha}, {pairs} pairs, seed {seed}): {}",
                cert.max_ratio,
                if cert.passes() { "within" } else { "exceeded" }
            );
        }

        Command::Levelsets {
            function,
            ifs,
            kmin,
            kmax,
            values,
            base,
            alpha,
            c,
            percentile,
        } => {
            let text = std::fs::read_to_string(&function)
                .with_context(|| format!("reading {}", function.display()))?;
            let loaded = FunctionDescriptor::from_json(&text)?.build()?;
            let sys = load_system(&ifs)?;
            if loaded.dim != sys.ambient_dim {
                bail!(
                    "function dimension {} does not match system dimension {}",
                    loaded.dim,
                    sys.ambient_dim
                );
            }
            let exponent = match alpha.or(loaded.default_alpha) {
                Some(a) => a,
                None => bail!("no exponent available; pass --alpha"),
            };
            let (origin, extent) = sys.natural_box()?;
            let grid = GridRange {
                base,
                k_min: kmin,
                k_max: kmax,
                origin,
                extent,
            };
            let opts = CoverOptions::default();
            let rule = ThicknessRule {
                constant: c,
                exponent,
            };

            // level values: equispaced in the central 80% of the range
            // observed over the finest cover
            let finest = grid.spec_at(kmax)?;
            let cover = attractor_cells(&sys, &finest, &opts)?;
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for idx in cover.iter() {
                let v = loaded.field.value(&finest.cell_center(&idx));
                lo = lo.min(v);
                hi = hi.max(v);
            }
            let width = hi - lo;
            let level_values: Vec<f64> = (0..values)
                .map(|i| {
                    let t = if values == 1 {
                        0.5
                    } else {
                        i as f64 / (values - 1) as f64
                    };
                    lo + width * (0.1 + 0.8 * t)
                })
                .collect();

            let outcome = spectrum(
                loaded.field.as_ref(),
                &sys,
                &grid,
                &level_values,
                &rule,
                percentile,
                &opts,
            )?;
            write_out(&cli.out, "counts.csv", &counts_csv(&outcome.counts))?;
            write_out(&cli.out, "fits.csv", &fits_csv(&outcome.fits))?;
            write_out(
                &cli.out,
                "loglog.csv",
                &loglog_csv(&outcome.counts, &outcome.cover_counts),
            )?;
            write_out(
                &cli.out,
                "levelsets_report.json",
                &serde_json::to_string_pretty(&outcome)?,
            )?;
            let dims = &outcome.estimate.dims;
            let median = fll_core::boxdim::percentile(dims, 50.0);
            println!(
                "{} values fitted (window {:?}): median dim {median:.5}, percentile-{} estimate {:.5}, {} excluded",
                dims.len(),
                outcome.fit_window,
                outcome.estimate.percentile,
                outcome.estimate.essential_inf_estimate,
                outcome.excluded.len()
            );
        }

        Command::Slices {
            ifs,
            directions,
            offsets,
            kmin,
            kmax,
            base,
            seed,
        } => {
            let sys = load_system(&ifs)?;
            let cfg = SliceSurveyConfig {
                num_directions: directions,
                offsets_per_direction: offsets,
                levels: (kmin, kmax),
                base,
                seed,
            };
            let rep = run_slice_survey(&sys, &cfg)?;
            write_out(
                &cli.out,
                "slices_report.json",
                &serde_json::to_string_pretty(&rep)?,
            )?;
            println!(
                "global median slice dim {:.5} vs s − 1 = {:.5} ({} fits, {} skipped)",
                rep.global_median,
                rep.predicted,
                rep.all_dims.len(),
                rep.total_skipped
            );
        }

        Command::Experiment {
            config,
            check,
            tol,
            alpha,
            epsilon,
            seed,
            kmin,
            kmax,
            values,
            percentile,
            base,
        } => {
            let mut cfg = ExperimentConfig::from_file(
                config
                    .to_str()
                    .with_context(|| format!("non-utf8 path {}", config.display()))?,
            )?;
            if let Some(v) = alpha {
                cfg.alpha = v;
            }
            if let Some(v) = epsilon {
                cfg.epsilon = v;
            }
            if let Some(v) = seed {
                cfg.seed = v;
            }
            if let Some(v) = kmin {
                cfg.levels.0 = v;
            }
            if let Some(v) = kmax {
                cfg.levels.1 = v;
            }
            if let Some(v) = values {
                cfg.num_level_values = v;
            }
            if let Some(v) = percentile {
                cfg.percentile = v;
            }
            if let Some(v) = base {
                cfg.base_override = Some(v);
            }
            let sys = load_system(Path::new(&cfg.system_ref))?;
            let report = run_main(&cfg, &sys)?;
            write_experiment_outputs(&cli.out, &report)?;
            let gap = (report.median_dim - report.predicted).abs();
            println!(
                "(n,m)=({},{}), s = {:.6}, predicted s − α = {:.6}, median level-set dim = {:.6} (|Δ| = {gap:.6}), {} low-confidence fits, {} bound violations",
                report.n,
                report.m,
                report.s,
                report.predicted,
                report.median_dim,
                report.low_confidence_values.len(),
                report.upper_bound_violations.len()
            );
            if check && gap > tol {
                eprintln!("check failed: |median − predicted| = {gap:.6} > tol {tol}");
                return Ok(ExitCode::from(2));
            }
        }

        Command::Audit { report } => {
            let text = std::fs::read_to_string(&report)
                .with_context(|| format!("reading {}", report.display()))?;
            let rep: ExperimentReport = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", report.display()))?;
            let audit = run_upper_bound_audit(&rep);
            write_out(&cli.out, "audit.json", &serde_json::to_string_pretty(&audit)?)?;
            println!(
                "bound s_fit − α + slack = {:.6}; {} of {} fits violate",
                audit.bound,
                audit.violations.len(),
                audit.checked
            );
            for v in &audit.violations {
                println!("  r = {:.6}: dim {:.6} > {:.6}", v.value, v.dim, v.bound);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
