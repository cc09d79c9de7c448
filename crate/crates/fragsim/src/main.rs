//! Command-line front end: single runs, parameter sweeps, the time-on-air
//! calculator, and config validation.

use clap::{Args, Parser, Subcommand};
use fragsim::config::{self, ParsedConfig};
use fragsim::phy::{self, secs, DutyCycleLimit, RadioConfig};
use fragsim::sim::{self, Scenario};
use fragsim::sweep::{self, ResultRow, SweepSpec};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fragsim", version, about = "LPWAN packet fragmentation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Scenario or sweep configuration file (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Override the base seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the replication count
    #[arg(long)]
    reps: Option<u32>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single scenario and print its aggregate metrics
    Run {
        #[command(flatten)]
        common: CommonOpts,
        /// Write a result CSV (scenario row plus its unfragmented baseline)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Dump every transmission record to a CSV file
        #[arg(long)]
        dump_log: Option<PathBuf>,
    },
    /// Run a parameter sweep and write the result table
    Sweep {
        #[command(flatten)]
        common: CommonOpts,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
    },
    /// LoRa timing calculator
    Toa {
        #[arg(long)]
        sf: u8,
        #[arg(long, default_value_t = 125_000)]
        bw: u32,
        /// Coding rate index (rate 4/(4+CR))
        #[arg(long, default_value_t = 1)]
        cr: u8,
        #[arg(long, default_value_t = 8)]
        preamble: u16,
        /// On-air bytes
        #[arg(long, default_value_t = 251)]
        payload: u32,
        /// Duty cycle percent for the off-time line
        #[arg(long, default_value_t = 1.0)]
        duty_cycle: f64,
    },
    /// Parse a config file and report problems
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

// exit codes: 0 success, 1 config error, 2 runtime error
const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { common, out, dump_log } => cmd_run(common, out, dump_log),
        Command::Sweep { common, out } => cmd_sweep(common, out),
        Command::Toa { sf, bw, cr, preamble, payload, duty_cycle } => {
            cmd_toa(sf, bw, cr, preamble, payload, duty_cycle)
        }
        Command::Validate { config } => cmd_validate(config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}

struct CliError {
    code: u8,
    message: String,
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError { code: EXIT_CONFIG, message: e.to_string() }
}

fn runtime_err(e: impl std::fmt::Display) -> CliError {
    CliError { code: EXIT_RUNTIME, message: e.to_string() }
}

fn load_config(common: &CommonOpts) -> Result<ParsedConfig, CliError> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| config_err(format!("{}: {e}", common.config.display())))?;
    let mut parsed = config::parse_scenario(&text).map_err(config_err)?;
    let (seed, reps) = (common.seed, common.reps);
    let apply = |s: &mut Scenario| {
        if let Some(seed) = seed {
            s.base_seed = seed;
        }
        if let Some(reps) = reps {
            s.n_replications = reps;
        }
    };
    match &mut parsed {
        ParsedConfig::Single(s) => apply(s),
        ParsedConfig::Sweep(spec) => apply(&mut spec.base),
    }
    Ok(parsed)
}

fn install_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(runtime_err)
}

fn cmd_run(common: CommonOpts, out: Option<PathBuf>, dump_log: Option<PathBuf>) -> Result<(), CliError> {
    let scenario = match load_config(&common)? {
        ParsedConfig::Single(s) => s,
        ParsedConfig::Sweep(_) => {
            return Err(config_err("`run` expects a single-scenario config; use `sweep`"))
        }
    };
    let pool = install_pool(common.jobs)?;

    if let Some(path) = &dump_log {
        pool.install(|| dump_records(&scenario, path))?;
    }

    // Build a one-group table: the baseline plus (when fragmented) this
    // scenario, so relative columns are always meaningful.
    let spec = SweepSpec {
        fragment_counts: if scenario.n_fragments == 1 {
            vec![1]
        } else {
            vec![1, scenario.n_fragments]
        },
        node_counts: vec![scenario.n_nodes],
        spreading_factors: vec![scenario.radio.spreading_factor],
        duty_cycles: vec![scenario.duty_cycle],
        base: scenario.clone(),
    };
    let table = pool.install(|| sweep::run_sweep(&spec)).map_err(runtime_err)?;

    print!("{}", describe_rows(&scenario, &table.rows));
    if let Some(path) = out {
        sweep::emit_csv(&table, &path).map_err(runtime_err)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn describe_rows(scenario: &Scenario, rows: &[ResultRow]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{} nodes, SF{}, {} Hz, duty cycle {}, {} reps, horizon {} s, seed {}",
        scenario.n_nodes,
        scenario.radio.spreading_factor,
        scenario.radio.bandwidth_hz,
        match scenario.duty_cycle {
            DutyCycleLimit::Unrestricted => "unrestricted".to_string(),
            DutyCycleLimit::Percent(p) => format!("{p}%"),
        },
        scenario.n_replications,
        secs(scenario.horizon_ns),
        scenario.base_seed,
    )
    .unwrap();
    for r in rows {
        let a = &r.aggregate;
        writeln!(
            out,
            "  {:>3} fragment(s): goodput {:6.2}% (sd {:.2}), throughput {:8.2} bps (sd {:.2}), \
             energy {:10.2} s, delay {}",
            r.n_fragments,
            a.goodput_percent.mean,
            a.goodput_percent.std_dev,
            a.throughput_bps.mean,
            a.throughput_bps.std_dev,
            a.energy_airtime_s.mean,
            a.mean_delay_s
                .map(|d| format!("{:.3} s", d.mean))
                .unwrap_or_else(|| "n/a".to_string()),
        )
        .unwrap();
        if r.n_fragments != 1 {
            writeln!(
                out,
                "       vs baseline: throughput {}, goodput {:+.2} pp, energy {}, delay {}",
                opt_pct(r.relative.throughput_gain_pct),
                r.relative.goodput_change_pp,
                opt_pct(r.relative.energy_overhead_pct),
                opt_pct(r.relative.delay_overhead_pct),
            )
            .unwrap();
        }
    }
    out
}

fn opt_pct(v: Option<f64>) -> String {
    v.map(|x| format!("{x:+.2}%")).unwrap_or_else(|| "n/a".to_string())
}

fn dump_records(scenario: &Scenario, path: &PathBuf) -> Result<(), CliError> {
    let logs: Vec<_> = (0..scenario.n_replications)
        .into_par_iter()
        .map(|rep| sim::run_replication(scenario, rep))
        .collect::<Result<_, _>>()
        .map_err(runtime_err)?;
    let mut out = String::from("replication,node_id,packet_id,fragment_index,start_ns,end_ns,collided\n");
    for log in &logs {
        for r in &log.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                log.replication_index, r.node_id, r.packet_id, r.fragment_index, r.start_ns, r.end_ns, r.collided
            )
            .unwrap();
        }
    }
    std::fs::write(path, out).map_err(|e| runtime_err(format!("{}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_sweep(common: CommonOpts, out: PathBuf) -> Result<(), CliError> {
    let spec = match load_config(&common)? {
        ParsedConfig::Sweep(spec) => spec,
        ParsedConfig::Single(s) => {
            // a single scenario is a 1-point grid
            SweepSpec {
                node_counts: vec![s.n_nodes],
                fragment_counts: vec![1],
                spreading_factors: vec![s.radio.spreading_factor],
                duty_cycles: vec![s.duty_cycle],
                base: s,
            }
        }
    };
    let pool = install_pool(common.jobs)?;
    let table = pool.install(|| sweep::run_sweep(&spec)).map_err(runtime_err)?;
    sweep::emit_csv(&table, &out).map_err(runtime_err)?;
    print!("{}", sweep::emit_summary(&table).map_err(runtime_err)?);
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_toa(sf: u8, bw: u32, cr: u8, preamble: u16, payload: u32, duty_cycle: f64) -> Result<(), CliError> {
    let mut cfg = RadioConfig::new(sf, bw).map_err(config_err)?;
    cfg.coding_rate_index = cr;
    cfg.preamble_symbols = preamble;
    cfg.validate().map_err(config_err)?;
    let dc = DutyCycleLimit::percent(duty_cycle).map_err(config_err)?;
    let toa = phy::time_on_air(&cfg, payload).map_err(config_err)?;
    println!("SF{sf}, {bw} Hz, CR 4/{}, preamble {preamble} symbols, LDRO {}", 4 + cr, cfg.low_data_rate_optimize);
    println!("symbol duration : {:.6} ms", phy::symbol_duration(&cfg) * 1e3);
    println!(
        "payload symbols : {} ({} on-air bytes)",
        phy::payload_symbol_count(&cfg, payload).map_err(config_err)?,
        payload
    );
    println!("time on air     : {toa:.6} s");
    println!("nominal bit rate: {:.2} bps", phy::nominal_bit_rate(&cfg).map_err(config_err)?);
    println!(
        "off time at {duty_cycle}% duty cycle: {:.6} s",
        phy::duty_cycle_off_time(toa, dc)
    );
    Ok(())
}

fn cmd_validate(config: PathBuf) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&config)
        .map_err(|e| config_err(format!("{}: {e}", config.display())))?;
    match config::parse_scenario(&text).map_err(config_err)? {
        ParsedConfig::Single(s) => {
            println!(
                "valid scenario: {} nodes, SF{}, {} fragment(s), {} reps",
                s.n_nodes, s.radio.spreading_factor, s.n_fragments, s.n_replications
            );
        }
        ParsedConfig::Sweep(spec) => {
            println!(
                "valid sweep: {} nodes x {} SFs x {} duty cycles x {} fragment counts, {} reps each",
                spec.node_counts.len(),
                spec.spreading_factors.len(),
                spec.duty_cycles.len(),
                spec.fragment_counts.len(),
                spec.base.n_replications
            );
        }
    }
    Ok(())
}
