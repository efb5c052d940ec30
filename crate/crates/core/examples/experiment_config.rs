//! Driving a sweep from configuration text, as the `intinv` binary does.
//!
//! Run with `cargo run --release --example experiment_config`.

use intinv::cli::{run_sweep, ExperimentConfig, Settings};

const CONFIG: &str = "
[manifold]
id = codim2

[domain]
kind = cyl
eps_max = 0.25
eps_min = 0.02
eps_count = 8

[assert]
volume_slope = 3.5
tangent_slope = 4.5
";

fn main() {
    let file = Settings::parse(CONFIG).expect("valid config text");
    // command-line style override, applied last
    let mut cli = Settings::default();
    cli.set("quadrature.angular_nodes", "48");
    let cfg = ExperimentConfig::from_settings(&Settings::defaults().merge(&file).merge(&cli)).expect("valid config");
    println!("config hash {}", cfg.hash());
    match run_sweep(&cfg) {
        Ok(report) => print!("{}", report.to_csv()),
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}
