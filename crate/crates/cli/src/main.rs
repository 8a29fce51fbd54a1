use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dephasing_cli::config::{Preset, RunConfig};
use dephasing_cli::output;
use dephasing_cli::run::{self, RunError};

/// Decoherence of qubit registers in a shared bosonic reservoir.
///
/// A run is described by a flat key=value config file, or by one of the
/// compiled-in figure presets. Tables go to --out as CSV, with a JSON sidecar
/// next to it; without --out a single table is printed to stdout.
#[derive(Parser, Debug)]
#[command(name = "dephasing", version)]
struct Cli {
    /// Config file, or a sidecar from an earlier run.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// fig3, fig4-left, fig4-right, fig5 or fig6.
    #[arg(long, value_name = "NAME", conflicts_with = "config")]
    preset: Option<String>,

    /// CSV output path; figure curves get a suffix before the extension.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Relative tolerance of the frequency integrals.
    #[arg(long)]
    tolerance: Option<f64>,

    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads (default: one per core).
    #[arg(long)]
    threads: Option<usize>,

    /// Print the resolved configuration and exit.
    #[arg(long)]
    show_config: bool,
}

fn load(cli: &Cli) -> Result<RunConfig, RunError> {
    let text = match (&cli.config, &cli.preset) {
        (Some(path), _) => {
            let contents = fs::read_to_string(path).map_err(|source| RunError::Io {
                path: path.display().to_string(),
                source,
            })?;
            output::config_text(&contents)?
        }
        (None, Some(name)) => {
            let preset: Preset = name.parse().map_err(|_| RunError::UnknownPreset(name.clone()))?;
            format!("command=figure\npreset={preset}\n")
        }
        (None, None) => return Err(RunError::Usage("give --config or --preset".into())),
    };
    let mut overrides = Vec::new();
    if let Some(t) = cli.tolerance {
        overrides.push(("tolerance", t.to_string()));
    }
    if let Some(s) = cli.seed {
        overrides.push(("seed", s.to_string()));
    }
    Ok(RunConfig::parse_with_overrides(&text, &overrides)?)
}

fn show(cfg: &RunConfig) -> Result<String, RunError> {
    let mut text = cfg.to_text();
    if let Some(preset) = cfg.preset {
        for (suffix, sub) in run::preset_configs(preset, cfg.tolerance)? {
            text.push_str(&format!("\n# {preset} {suffix}\n{}", sub.to_text()));
        }
    }
    Ok(text)
}

fn real_main(cli: Cli) -> Result<(), RunError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(RunError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| RunError::Usage(e.to_string()))?;
    }
    let cfg = load(&cli)?;
    if cli.show_config {
        print!("{}", show(&cfg)?);
        return Ok(());
    }
    let result = run::execute(&cfg)?;
    match &cli.out {
        Some(base) => {
            for path in output::emit(&cfg, &result, base)? {
                eprintln!("wrote {}", path.display());
            }
        }
        None if result.outputs.len() == 1 => {
            let text = output::render_table(&result.outputs[0].table);
            io::stdout().write_all(text.as_bytes()).map_err(|source| RunError::Io {
                path: "<stdout>".into(),
                source,
            })?;
        }
        None => {
            return Err(RunError::Usage(format!(
                "this run writes {} tables; give --out",
                result.outputs.len()
            )))
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = RunError::Usage(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match real_main(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
