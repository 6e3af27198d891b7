use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sfqsim::harness::{
    compare_golden, exit, margin_sweep, parse_versioned, read_file, run_experiment, run_scenario, validate_file,
    write_file, ExperimentConfig, FileKind, HarnessError, MarginSweepSpec, WaveFormat,
};

#[derive(Parser)]
#[command(name = "sfqsim", version, about = "Pulse-level SFQ neuron simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and optionally compare it against a golden trace.
    Simulate {
        scenario: PathBuf,
        /// Golden CSV trace; a mismatch exits with status 1.
        #[arg(long)]
        golden: Option<PathBuf>,
        /// Write the trace as a new golden CSV file.
        #[arg(long)]
        write_golden: Option<PathBuf>,
        /// Waveform output file.
        #[arg(long)]
        waveform: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "vcd", requires = "waveform")]
        format: WaveFormat,
    },
    /// Timing-margin sweep over the scenarios named in a sweep spec.
    Sweep {
        spec: PathBuf,
        /// JSON report file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Threshold search on a network and dataset.
    Experiment {
        config: PathBuf,
        /// JSON report file; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and check a scenario, sweep spec or experiment config.
    Validate { file: PathBuf },
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn simulate(
    path: &Path,
    golden: Option<&Path>,
    write_golden: Option<&Path>,
    waveform: Option<(&Path, WaveFormat)>,
) -> Result<i32, HarnessError> {
    let (scenario, outcome) = run_scenario(path)?;
    let csv = outcome.trace.to_csv();
    let name = scenario.name.as_deref().unwrap_or_else(|| path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario"));
    println!("{name}: {} pulses", outcome.trace.len());
    if let Some(fires) = &outcome.fires {
        let cols: Vec<String> = fires.iter().map(u32::to_string).collect();
        println!("fires per cycle: {}", cols.join(" "));
    }
    if let Some(p) = write_golden {
        write_file(p, &csv)?;
    }
    if let Some((p, format)) = waveform {
        write_file(p, &format.render(&outcome.trace))?;
    }
    let mut code = exit::PASS;
    for f in &outcome.failures {
        println!("FAIL {f}");
        code = exit::GOLDEN_MISMATCH;
    }
    if let Some(g) = golden {
        match compare_golden(&csv, &read_file(g)?) {
            None => println!("golden: match"),
            Some((line, want, got)) => {
                println!("golden: mismatch at line {line}: expected `{want}`, got `{got}`");
                code = exit::GOLDEN_MISMATCH;
            }
        }
    }
    Ok(code)
}

fn run(cli: Cli) -> Result<i32, HarnessError> {
    match cli.command {
        Command::Simulate { scenario, golden, write_golden, waveform, format } => simulate(
            &scenario,
            golden.as_deref(),
            write_golden.as_deref(),
            waveform.as_deref().map(|p| (p, format)),
        ),
        Command::Sweep { spec, out } => {
            let parsed: MarginSweepSpec = parse_versioned(&spec, &read_file(&spec)?)?;
            let report = margin_sweep(&parsed, &spec)?;
            print!("{}", report.to_text());
            if let Some(p) = out {
                write_file(&p, &to_json(&report))?;
            }
            Ok(exit::PASS)
        }
        Command::Experiment { config, out } => {
            let parsed: ExperimentConfig = parse_versioned(&config, &read_file(&config)?)?;
            let report = run_experiment(&parsed)?;
            let json = to_json(&report);
            match out {
                Some(p) => {
                    write_file(&p, &json)?;
                    for c in &report.search.candidates {
                        match (c.accuracy, &c.error) {
                            (Some(a), _) => println!("{:?}: accuracy {:.4}, dead {}", c.thresholds, a, c.dead_count),
                            (None, Some(e)) => println!("{:?}: {e}", c.thresholds),
                            (None, None) => {}
                        }
                    }
                    if let Some(b) = report.best() {
                        println!("best: {:?}", b.thresholds);
                    }
                }
                None => print!("{json}"),
            }
            Ok(exit::PASS)
        }
        Command::Validate { file } => {
            let kind = validate_file(&file)?;
            let label = match kind {
                FileKind::Scenario => "scenario",
                FileKind::Sweep => "sweep spec",
                FileKind::Experiment => "experiment config",
            };
            println!("{}: valid {label}", file.display());
            Ok(exit::PASS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::INVALID as u8 } else { exit::PASS as u8 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
