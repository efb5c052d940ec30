use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use intinv::cli::{self, ConfigError, ExperimentConfig, RunError, Settings};
use intinv::pointcloud::{read_xyz, sample_domain, write_xyz};

/// Integral invariants of small neighbourhoods: sweeps, descriptors and samples.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// Configuration file with `[section]` headers and `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the CSV here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for every random draw.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Manifold id, e.g. `sphere`, `paraboloid(1,2)`, `codim2`.
    #[arg(long, global = true)]
    manifold: Option<String>,
    /// Domain kind: `sph` or `cyl`.
    #[arg(long, global = true)]
    kind: Option<String>,
    /// Comma-separated decreasing scales.
    #[arg(long, global = true)]
    eps: Option<String>,
    /// Any configuration key, as `section.key=value`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sphere-integral constants per dimension.
    Constants {
        /// Dimensions to tabulate.
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6")]
        dims: Vec<usize>,
        /// Monte-Carlo samples per dimension for the cross-check (0 skips it).
        #[arg(long, default_value_t = 0)]
        mc_samples: usize,
    },
    /// Quadrature moments at one scale next to the predictions.
    Moments,
    /// Scale sweep with residual slopes and fitted coefficients.
    Sweep,
    /// Curvature descriptors per scale.
    Descriptors,
    /// Sample a neighbourhood (or read one) and estimate its descriptors.
    Pointcloud(PointcloudArgs),
}

#[derive(Args)]
struct PointcloudArgs {
    #[arg(long)]
    n_points: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
    /// Read points from this whitespace-separated file instead of sampling.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Also write the sampled points here.
    #[arg(long)]
    points_out: Option<PathBuf>,
    /// Tangent dimension of file input (defaults to one less than the point dimension).
    #[arg(long)]
    dim: Option<usize>,
    /// Neighbourhood center for file input, comma-separated (defaults to the origin).
    #[arg(long, value_delimiter = ',')]
    center: Vec<f64>,
}

fn overrides(args: &Cli) -> Result<Settings, ConfigError> {
    let mut s = Settings::default();
    for kv in &args.set {
        let (k, v) = Settings::parse_override(kv)?;
        s.set(k, v);
    }
    if let Some(m) = &args.manifold {
        s.set("manifold.id", m.as_str());
    }
    if let Some(k) = &args.kind {
        s.set("domain.kind", k.as_str());
    }
    if let Some(e) = &args.eps {
        s.set("domain.eps", e.as_str());
    }
    if let Some(seed) = args.seed {
        s.set("pointcloud.seed", seed.to_string());
    }
    if let Command::Pointcloud(p) = &args.command {
        if let Some(n) = p.n_points {
            s.set("pointcloud.n_points", n.to_string());
        }
        if let Some(noise) = p.noise {
            s.set("pointcloud.noise", noise.to_string());
        }
    }
    Ok(s)
}

fn run(args: &Cli) -> Result<String, RunError> {
    if let Some(t) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| ConfigError(e.to_string()))?;
    }
    let cfg = ExperimentConfig::resolve(args.config.as_ref(), &overrides(args)?)?;
    match &args.command {
        Command::Constants { dims, mc_samples } => cli::constants_csv(dims, *mc_samples, cfg.pointcloud.seed),
        Command::Moments => cli::moments_csv(&cfg, cfg.eps[0]),
        Command::Sweep => {
            let report = cli::sweep(&cfg)?;
            emit(args, &report.to_csv())?;
            cli::run_sweep(&cfg).map(|_| String::new())
        }
        Command::Descriptors => {
            let table = cli::descriptors(&cfg)?;
            emit(args, &table.to_csv())?;
            cli::run_descriptors(&cfg).map(|_| String::new())
        }
        Command::Pointcloud(p) => {
            let eps = cfg.eps[0];
            let (sample, n, center) = match &p.input {
                Some(path) => {
                    let all = read_xyz(path)?;
                    let n = p.dim.unwrap_or(all.dim.saturating_sub(1));
                    let center = if p.center.is_empty() { vec![0.0; all.dim] } else { p.center.clone() };
                    (all.select(&center, eps, n, cfg.kind)?, n, center)
                }
                None => {
                    let chart = cli::load_chart(&cfg)?;
                    let spec = match cfg.kind {
                        intinv::predictions::Kind::Spherical => intinv::moments::DomainSpec::spherical(eps),
                        intinv::predictions::Kind::Cylindrical => intinv::moments::DomainSpec::cylindrical(eps),
                    };
                    let pc = &cfg.pointcloud;
                    let s = sample_domain(&chart, &spec, pc.n_points, pc.seed, pc.noise)?;
                    (s, chart.dim(), vec![0.0; chart.ambient_dim()])
                }
            };
            if let Some(path) = &p.points_out {
                write_xyz(path, &sample)?;
            }
            cli::pointcloud_csv(&cfg, &sample, &center, eps, n)
        }
    }
}

fn emit(args: &Cli, text: &str) -> Result<(), RunError> {
    match &args.out {
        Some(path) => std::fs::write(path, text).map_err(|e| RunError::from(intinv::Error::Io(e))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let result = run(&args).and_then(|text| if text.is_empty() { Ok(()) } else { emit(&args, &text) });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("intinv: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
