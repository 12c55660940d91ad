use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hypnls::expcli::{classify_error, run_command, Command, ExperimentConfig};

#[derive(Parser)]
#[command(name = "hypnls", version, about = "Focusing NLS on hyperbolic space: ground states, dichotomy runs, virial and spectral checks")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Solve for Q_lambda and certify its identities.
    Groundstate(Common),
    /// Evolve alpha Q in both time directions and classify each row.
    Dichotomy(Common),
    /// Compare the virial identity with a finite-difference second moment.
    VirialCheck(Common),
    /// Scan the pointwise inequalities in extended precision.
    Inequalities {
        #[command(flatten)]
        common: Common,
        #[arg(long, hide = true)]
        inject_sign_flip: bool,
    },
    /// Mass-constrained minimization over a grid of masses.
    MassCurve(Common),
    /// Parseval, projector reconstruction and Sobolev-ratio checks (n = 3).
    SpectralCheck(Common),
    /// Reshape an output file into long format for plotting.
    Plotdata {
        #[command(flatten)]
        common: Common,
        /// diagnostics | profile | spectrum
        #[arg(long)]
        kind: String,
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` file applied before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    /// Repeatable.
    #[arg(long)]
    alpha: Vec<String>,
    #[arg(long)]
    rmax: Option<String>,
    #[arg(long)]
    points: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    /// quick | mid | production
    #[arg(long)]
    tier: Option<String>,
    /// Output directory; HYPNLS_OUT takes precedence.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv | json
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    seed: Option<String>,
}

fn build(command: Command, common: &Common, extra: &[(&str, String)]) -> hypnls::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::new(command);
    if let Some(path) = &common.config {
        cfg.apply_file(path)?;
    }
    let flags = [
        ("n", &common.n),
        ("p", &common.p),
        ("lambda", &common.lambda),
        ("rmax", &common.rmax),
        ("points", &common.points),
        ("dt", &common.dt),
        ("horizon", &common.horizon),
        ("tier", &common.tier),
        ("format", &common.format),
        ("seed", &common.seed),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    if !common.alpha.is_empty() {
        cfg.alphas.clear();
        for a in &common.alpha {
            cfg.set("alpha", a)?;
        }
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    for (key, value) in extra {
        cfg.set(key, value)?;
    }
    if let Some(out) = std::env::var_os("HYPNLS_OUT").filter(|v| !v.is_empty()) {
        cfg.out = PathBuf::from(out);
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let built = match &cli.command {
        Sub::Groundstate(c) => build(Command::GroundState, c, &[]),
        Sub::Dichotomy(c) => build(Command::Dichotomy, c, &[]),
        Sub::VirialCheck(c) => build(Command::VirialCheck, c, &[]),
        Sub::Inequalities { common, inject_sign_flip } => {
            let extra: Vec<(&str, String)> =
                if *inject_sign_flip { vec![("inject_sign_flip", "true".into())] } else { Vec::new() };
            build(Command::Inequalities, common, &extra)
        }
        Sub::MassCurve(c) => build(Command::MassCurve, c, &[]),
        Sub::SpectralCheck(c) => build(Command::SpectralCheck, c, &[]),
        Sub::Plotdata { common, kind, input } => build(
            Command::PlotData,
            common,
            &[("kind", kind.clone()), ("input", input.display().to_string())],
        ),
    };
    let cfg = match built {
        Ok(cfg) => cfg,
        Err(e) => {
            let (status, kind) = classify_error(&e);
            eprintln!("{}", serde_json::json!({ "error": kind, "reason": e.to_string() }));
            return ExitCode::from(status.code() as u8);
        }
    };
    let (status, summary) = run_command(&cfg);
    let text = serde_json::to_string_pretty(&summary).unwrap_or_default();
    if summary.get("error").is_some() {
        eprintln!("{text}");
    } else {
        println!("{text}");
    }
    ExitCode::from(status.code() as u8)
}
