use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use hsmdie::{ConfigFile, DraftSpec, ExportToggles, PipelineConfig, PipelineError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExportKind {
    Speed,
    Chi,
    Features,
    All,
}

/// Decompose a forging-die STL model into HSM machining features and
/// associate a cutting tool and a machining strategy with each.
#[derive(Debug, Parser)]
#[command(name = "hsmdie", version, about)]
struct Args {
    /// STL model, binary or ASCII, outward normals, millimetres.
    input: PathBuf,

    /// Output directory for the report and exports.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Die draft angle from vertical, degrees.
    #[arg(long, value_name = "DEG", conflicts_with = "delta_draft")]
    draft_angle: Option<f64>,

    /// Target delta of drafted walls, given directly.
    #[arg(long, value_name = "VAL")]
    delta_draft: Option<f64>,

    /// Half-width of the Horizontal band around delta = 1.
    #[arg(long, value_name = "VAL")]
    eps_h: Option<f64>,

    /// Half-width of the Draft band around the draft delta.
    #[arg(long, value_name = "VAL")]
    eps_d: Option<f64>,

    /// Half-width of the QuasiHorizontal band around delta = 1.
    #[arg(long, value_name = "VAL")]
    band_qh: Option<f64>,

    /// Half-width of the QuasiVertical band around the draft delta.
    #[arg(long, value_name = "VAL")]
    band_qv: Option<f64>,

    /// First swept direction, degrees.
    #[arg(long, value_name = "DEG", allow_negative_numbers = true)]
    sweep_start: Option<f64>,

    /// Angular range of the direction sweep, degrees.
    #[arg(long, value_name = "DEG")]
    sweep_range: Option<f64>,

    /// Angular step of the direction sweep, degrees.
    #[arg(long, value_name = "DEG")]
    sweep_step: Option<f64>,

    /// Step of a second sweep pass around the best direction, degrees.
    #[arg(long, value_name = "DEG")]
    refinement_step: Option<f64>,

    /// Largest chi still counted as aligned, degrees.
    #[arg(long, value_name = "DEG")]
    chi_tol: Option<f64>,

    /// Aligned area fraction needed for an oriented verdict.
    #[arg(long, value_name = "FRACTION")]
    oriented_threshold: Option<f64>,

    /// Speed-map regions smaller than this (mm²) are merged into a neighbour.
    #[arg(long, value_name = "MM2")]
    min_region_area: Option<f64>,

    /// Colored meshes to write; repeat or separate with commas.
    #[arg(long, value_enum, value_delimiter = ',')]
    export: Vec<ExportKind>,

    /// TOML configuration file; command-line flags take precedence.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

fn build_config(args: &Args) -> Result<PipelineConfig, hsmdie::ConfigError> {
    let mut cfg = PipelineConfig::new(&args.input, "hsmdie-out");
    if let Some(path) = &args.config {
        ConfigFile::load(path)?.apply(&mut cfg)?;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if let Some(a) = args.draft_angle {
        cfg.speed.draft = DraftSpec::AngleFromVertical(a.to_radians());
    }
    if let Some(d) = args.delta_draft {
        cfg.speed.draft = DraftSpec::Delta(d);
    }
    let set = |slot: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    set(&mut cfg.speed.eps_h, args.eps_h);
    set(&mut cfg.speed.eps_d, args.eps_d);
    set(&mut cfg.speed.qh, args.band_qh);
    set(&mut cfg.speed.qv, args.band_qv);
    let sweep = &mut cfg.sequence.sweep;
    set(&mut sweep.theta_start, args.sweep_start.map(f64::to_radians));
    set(&mut sweep.theta_range, args.sweep_range.map(f64::to_radians));
    set(&mut sweep.theta_step, args.sweep_step.map(f64::to_radians));
    set(&mut sweep.chi_alignment_tolerance, args.chi_tol.map(f64::to_radians));
    set(&mut sweep.oriented_fraction_threshold, args.oriented_threshold);
    if let Some(r) = args.refinement_step {
        sweep.refinement_step = Some(r.to_radians());
    }
    set(&mut cfg.min_region_area, args.min_region_area);
    for e in &args.export {
        match e {
            ExportKind::Speed => cfg.exports.speed = true,
            ExportKind::Chi => cfg.exports.chi = true,
            ExportKind::Features => cfg.exports.features = true,
            ExportKind::All => cfg.exports = ExportToggles::all(),
        }
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match build_config(&args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("hsmdie: error: [config] {e}");
            return ExitCode::from(PipelineError::CONFIG as u8);
        }
    };
    let outcome = std::panic::catch_unwind(|| hsmdie::run_pipeline(&cfg));
    match outcome {
        Ok(Ok(out)) => {
            println!(
                "{} facets, {} features, {} file(s) written to {}",
                out.mesh.facet_count(),
                out.features.len(),
                out.written.len(),
                cfg.output_dir.display()
            );
            for f in &out.report.features {
                println!(
                    "  #{:<3} {:<18} {:>12.3} mm²  {:<16} {}",
                    f.id,
                    f.kind.as_str(),
                    f.area,
                    f.tool.as_str(),
                    f.strategy
                );
            }
            ExitCode::SUCCESS
        }
        Ok(Err(e)) => {
            eprintln!("hsmdie: error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => {
            eprintln!("hsmdie: error: internal failure");
            ExitCode::from(PipelineError::INTERNAL as u8)
        }
    }
}
