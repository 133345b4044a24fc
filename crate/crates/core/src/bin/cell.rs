use cell_core::bus::{canonical_payload, read_dump, BusDump};
use cell_core::harness::{aggregate, load_config, run_episode_full, RunConfig, RunReport, REPORT_NOTE};
use clap::{Parser, Subcommand};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "cell", about = "Simulated PLC-orchestrated bin-picking cell")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run headless episodes and report metrics.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Overrides `episodes` from the config.
        #[arg(long)]
        episodes: Option<u32>,
        /// Write the canonical JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Record every bus frame here.
        #[arg(long)]
        busdump: Option<PathBuf>,
        /// Directory for the per-episode transition logs; next to the
        /// report by default.
        #[arg(long)]
        log_dir: Option<PathBuf>,
        /// Print only the summary line.
        #[arg(long)]
        headless: bool,
    },
    /// Serve the operator API over a live cell.
    Serve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Simulated seconds per wall-clock second.
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
    },
    /// Decode a bus dump and print one line per frame.
    Replay { busdump: PathBuf },
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("cell: {msg}");
    ExitCode::from(2)
}

fn log_name(report: Option<&Path>, seed: u64) -> String {
    let stem = report
        .and_then(|p| p.file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "cell".into());
    format!("{stem}.seed{seed}.transitions.ndjson")
}

#[allow(clippy::too_many_arguments)]
fn run(
    config: &Path,
    seed: u64,
    episodes: Option<u32>,
    report: Option<&Path>,
    busdump: Option<&Path>,
    log_dir: Option<&Path>,
    headless: bool,
) -> ExitCode {
    let cfg: RunConfig = match load_config(config) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let n = episodes.unwrap_or(cfg.episodes);
    let dir = log_dir
        .map(Path::to_path_buf)
        .or_else(|| report.and_then(|r| r.parent()).map(Path::to_path_buf));
    let mut dump = BusDump::new();
    let mut eps = Vec::new();
    for i in 0..n as u64 {
        let s = seed.wrapping_add(i);
        let mut ep = match run_episode_full(&cfg, s, busdump.is_some()) {
            Ok(ep) => ep,
            Err(e) => return fail(e),
        };
        if let Some(dir) = &dir {
            let name = log_name(report, s);
            let text: String = ep.log.iter().map(|r| r.to_ndjson_line()).collect();
            if let Err(e) = std::fs::write(dir.join(&name), text) {
                return fail(format!("{}: {e}", dir.join(&name).display()));
            }
            ep.report.transition_log = Some(name);
        }
        if let Some(d) = &ep.busdump {
            dump.extend(d);
        }
        let m = &ep.report.metrics;
        if !headless {
            println!(
                "episode seed={s} stop={:?} picks={}/{} pph={:.1} latency_max_ms={:.1} fault={}",
                ep.report.stop_reason,
                m.picks_succeeded,
                m.picks_attempted,
                m.picks_per_hour,
                m.latency.max_ms,
                ep.report.fault.as_deref().unwrap_or("none"),
            );
        }
        eps.push(ep.report);
    }
    let run = RunReport {
        note: REPORT_NOTE.into(),
        config_hash: cfg.hash(),
        summary: aggregate(eps.iter().map(|e| &e.metrics)),
        config: cfg,
        episodes: eps,
    };
    let s = &run.summary;
    println!(
        "summary episodes={n} attempted={} succeeded={} success_rate={:.3} picks_per_hour={:.1} latency_p95_ms={:.1}",
        s.picks_attempted, s.picks_succeeded, s.success_rate, s.picks_per_hour, s.latency.p95_ms
    );
    if let Some(path) = report {
        if let Err(e) = std::fs::write(path, run.to_canonical_json()) {
            return fail(format!("{}: {e}", path.display()));
        }
    }
    if let Some(path) = busdump {
        if let Err(e) = std::fs::write(path, dump.as_bytes()) {
            return fail(format!("{}: {e}", path.display()));
        }
    }
    if run.is_faulted() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn replay(path: &Path) -> ExitCode {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) => return fail(format!("{}: {e}", path.display())),
    };
    let records = match read_dump(&bytes) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let mut out = std::io::stdout().lock();
    for r in &records {
        let payload = r
            .frame
            .msg
            .payload_value()
            .map_err(|e| e.to_string())
            .and_then(|v| canonical_payload(&v).map_err(|e| e.to_string()));
        match payload {
            Ok(p) => {
                if writeln!(out, "{} {} {} {}", r.t_ms, r.frame.seq, r.frame.msg.name(), p).is_err() {
                    // reader went away
                    return ExitCode::SUCCESS;
                }
            }
            Err(e) => return fail(format!("at {} ms: {e}", r.t_ms)),
        }
    }
    eprintln!("{} frames", records.len());
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().cmd {
        Cmd::Run {
            config,
            seed,
            episodes,
            report,
            busdump,
            log_dir,
            headless,
        } => run(
            &config,
            seed,
            episodes,
            report.as_deref(),
            busdump.as_deref(),
            log_dir.as_deref(),
            headless,
        ),
        Cmd::Serve {
            config,
            port,
            seed,
            speed,
        } => {
            let cfg = match load_config(&config) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let rt = match tokio::runtime::Runtime::new() {
                Ok(rt) => rt,
                Err(e) => return fail(e),
            };
            match rt.block_on(cell_core::hmi::serve(cfg, seed, port, speed)) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(e),
            }
        }
        Cmd::Replay { busdump } => replay(&busdump),
    }
}
