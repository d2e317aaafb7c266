//! `riccilab`: run scenarios, re-verify traces and rescale them.
//!
//! Exit codes: 0 pass, 2 configuration error, 3 numerical event, 4 verdict failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand};
use ricci_core::flow::{dilate, DilationSpec, FlowTrace};
use ricci_core::scenario::{evaluate, preset, run_scenario, write_evaluation, ScenarioConfig, PRESETS};
use ricci_core::Error;

const CONFIG: u8 = 2;
const NUMERICAL: u8 = 3;
const VERDICT: u8 = 4;

#[derive(Parser)]
#[command(name = "riccilab", version, about = "Ricci flow and shortest-loop monotonicity laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenarios from presets and/or config files.
    Run {
        /// Built-in scenario name (repeatable).
        #[arg(long = "preset")]
        presets: Vec<String>,
        /// Scenario TOML file (repeatable).
        #[arg(long = "config")]
        configs: Vec<PathBuf>,
        /// Artifact root; each scenario writes to `<out>/<name>`.
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        /// Scenarios run concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Replaces the seed of every scenario.
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// List built-in scenarios, or print one as a full config.
    ListPresets {
        /// Print the effective config of this preset.
        #[arg(long)]
        dump: Option<String>,
    },
    /// Re-run the monitors on an existing trace.
    Verify {
        /// Trace JSON written by `run`.
        #[arg(long)]
        trace: PathBuf,
        /// Scenario config; defaults to `config.toml` next to the trace.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply a parabolic rescaling to a trace.
    Dilate {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        lambda: f64,
        /// Base time; must be a snapshot time.
        #[arg(long)]
        t_j: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn code(e: &Error) -> u8 {
    if e.is_config() {
        CONFIG
    } else {
        NUMERICAL
    }
}

fn load_config(path: &Path) -> Result<ScenarioConfig, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    ScenarioConfig::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn run(presets: &[String], configs: &[PathBuf], out: &Path, jobs: usize, seed: Option<u64>) -> u8 {
    let mut scenarios = Vec::new();
    for name in presets {
        match preset(name) {
            Ok(c) => scenarios.push(c),
            Err(e) => {
                eprintln!("error: {e}");
                return CONFIG;
            }
        }
    }
    for path in configs {
        match load_config(path) {
            Ok(c) => scenarios.push(c),
            Err(e) => {
                eprintln!("error: {e}");
                return CONFIG;
            }
        }
    }
    if scenarios.is_empty() {
        eprintln!("error: nothing to run; pass --preset or --config");
        return CONFIG;
    }
    if let Some(s) = seed {
        scenarios.iter_mut().for_each(|c| c.seed = Some(s));
    }
    let mut names: Vec<&str> = scenarios.iter().map(|c| c.name.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        eprintln!("error: scenario names must be unique within one run");
        return CONFIG;
    }

    let next = AtomicUsize::new(0);
    let codes = Mutex::new(vec![0u8; scenarios.len()]);
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, scenarios.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(cfg) = scenarios.get(i) else { break };
                let dir = out.join(&cfg.name);
                let c = match run_scenario(cfg, &dir) {
                    Ok(o) if o.evaluation.verdict.pass => {
                        println!("PASS {} -> {}", cfg.name, dir.display());
                        0
                    }
                    Ok(o) => {
                        println!("FAIL {}: {}", cfg.name, o.evaluation.verdict.failures().join(", "));
                        VERDICT
                    }
                    Err(e) => {
                        eprintln!("error: {}: {e}", cfg.name);
                        code(&e)
                    }
                };
                codes.lock().expect("no poisoned lock")[i] = c;
            });
        }
    });
    let codes = codes.into_inner().expect("no poisoned lock");
    [CONFIG, NUMERICAL, VERDICT].into_iter().find(|c| codes.contains(c)).unwrap_or(0)
}

fn verify(trace: &Path, config: Option<&Path>, out: &Path) -> Result<bool, Error> {
    let config = config.map(Path::to_path_buf).unwrap_or_else(|| trace.with_file_name("config.toml"));
    let cfg = load_config(&config)?;
    let trace = FlowTrace::read(trace)?;
    let e = evaluate(&cfg, &trace)?;
    write_evaluation(out, &e)?;
    if !e.verdict.pass {
        println!("FAIL {}: {}", cfg.name, e.verdict.failures().join(", "));
    } else {
        println!("PASS {} -> {}", cfg.name, out.display());
    }
    Ok(e.verdict.pass)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let status = match cli.command {
        Command::Run {
            presets,
            configs,
            out,
            jobs,
            seed_override,
        } => run(&presets, &configs, &out, jobs, seed_override),
        Command::ListPresets { dump: None } => {
            for (name, about) in PRESETS {
                println!("{name:<18} {about}");
            }
            0
        }
        Command::ListPresets { dump: Some(name) } => match preset(&name).and_then(|c| c.to_toml()) {
            Ok(t) => {
                print!("{t}");
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                code(&e)
            }
        },
        Command::Verify { trace, config, out } => match verify(&trace, config.as_deref(), &out) {
            Ok(true) => 0,
            Ok(false) => VERDICT,
            Err(e) => {
                eprintln!("error: {e}");
                code(&e)
            }
        },
        Command::Dilate {
            trace,
            lambda,
            t_j,
            out,
        } => {
            let r = FlowTrace::read(&trace)
                .and_then(|t| dilate(&t, &DilationSpec::new(lambda, t_j)))
                .and_then(|d| d.write(&out, "trace"));
            match r {
                Ok((json, _)) => {
                    println!("wrote {}", json.display());
                    0
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    // a bad base time or window is a usage error
                    if matches!(e, Error::DilationBase { .. } | Error::DilationWindow { .. } | Error::Serialization(_)) {
                        CONFIG
                    } else {
                        code(&e)
                    }
                }
            }
        }
    };
    ExitCode::from(status)
}
