//! `uavsim` command-line front end.
//!
//! Binds a TOML configuration to simulation campaigns and reproduces the
//! standard experiments: uplink IoT/SINR/throughput campaigns, open-loop P0
//! sweeps with gain reports, downlink geometry/outage campaigns, and the
//! coverage-extension link budget. Progress goes to stderr; data goes to
//! files and stdout only. Exit codes: 0 success, 1 usage error, 2 runtime
//! failure.

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use uavsim_core::config::SimConfig;
use uavsim_core::deployment::{build_network, DeploymentCase, DeviceClass, Scenario};
use uavsim_core::dl_engine::{run_dl_campaign, DlCampaign, DL_CHANNELS};
use uavsim_core::link_budget;
use uavsim_core::power_control::{AerialTargetMode, ClosedLoopMode, PowerControlConfig};
use uavsim_core::report::{write_cdf_plot, write_samples_csv, SampleRow, Summary, SummaryStats};
use uavsim_core::stats::{cdf, gain_report};
use uavsim_core::ul_engine::{drop_artifacts, run_ul_campaign, UlCampaign};

#[derive(Parser)]
#[command(
    name = "uavsim",
    version,
    about = "System-level simulator for mixed terrestrial/aerial LTE deployments"
)]
struct Cli {
    /// Configuration file (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Base seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "uavsim-out")]
    out: PathBuf,

    /// Scenario override: UMa-AV, RMa-AV, or UMi-AV.
    #[arg(long, global = true)]
    scenario: Option<String>,

    /// Deployment case override: case1 or case5.
    #[arg(long, global = true)]
    case: Option<String>,

    /// Experiment combination. Open loop: 1-6 select the P0 sweep values;
    /// closed loop: 1 fixed targets, 2 RSRP-conditioned aerial targets.
    #[arg(long, global = true)]
    combination: Option<usize>,

    /// Worker threads for drop-level parallelism (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an uplink snapshot campaign (IoT, SINR, throughput).
    RunUl {
        /// Number of Monte Carlo drops.
        #[arg(long)]
        drops: u64,
        /// Emit two-column CDF plot data per metric and class.
        #[arg(long)]
        plot_data: bool,
        /// Dump the first drop's coupling matrix and assignments.
        #[arg(long)]
        dump_intermediates: bool,
    },
    /// Run a downlink geometry-SINR campaign with outage evaluation.
    RunDl {
        /// Number of Monte Carlo drops.
        #[arg(long)]
        drops: u64,
        /// Emit two-column CDF plot data per class.
        #[arg(long)]
        plot_data: bool,
    },
    /// Sweep aerial P0 and report throughput gains against the first value.
    SweepP0 {
        /// Number of Monte Carlo drops per combination.
        #[arg(long)]
        drops: u64,
        /// Comma-separated P0 values in dBm (default: the config sweep list).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        p0_aerial: Option<Vec<f64>>,
    },
    /// Print the coverage-extension link budget.
    Linkbudget {
        /// Emit CSV instead of the formatted table.
        #[arg(long)]
        csv: bool,
    },
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn usage(e: impl ToString) -> Self {
        CliError::Usage(e.to_string())
    }

    fn runtime(e: impl ToString) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = resolve_config(&cli)?;

    if let Some(workers) = cli.workers {
        if workers == 0 {
            return Err(CliError::Usage("--workers must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(CliError::runtime)?;
    }

    match &cli.command {
        Command::RunUl {
            drops,
            plot_data,
            dump_intermediates,
        } => run_ul(&cfg, &cli, *drops, *plot_data, *dump_intermediates),
        Command::RunDl { drops, plot_data } => run_dl(&cfg, &cli, *drops, *plot_data),
        Command::SweepP0 { drops, p0_aerial } => {
            sweep_p0(&cfg, &cli, *drops, p0_aerial.clone())
        }
        Command::Linkbudget { csv } => linkbudget(&cli, *csv),
    }
}

// ---------------------------------------------------------------------------
// Configuration resolution
// ---------------------------------------------------------------------------

fn parse_scenario(s: &str) -> Result<Scenario, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "uma-av" | "uma" => Ok(Scenario::UmaAv),
        "rma-av" | "rma" => Ok(Scenario::RmaAv),
        "umi-av" | "umi" => Ok(Scenario::UmiAv),
        _ => Err(CliError::Usage(format!(
            "unknown scenario '{s}' (expected UMa-AV, RMa-AV, or UMi-AV)"
        ))),
    }
}

fn parse_case(s: &str) -> Result<DeploymentCase, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "case1" | "1" => Ok(DeploymentCase::Case1),
        "case5" | "5" => Ok(DeploymentCase::Case5),
        _ => Err(CliError::Usage(format!(
            "unknown case '{s}' (expected case1 or case5)"
        ))),
    }
}

/// Load the config file and apply flag overrides (flags win).
fn resolve_config(cli: &Cli) -> Result<SimConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => SimConfig::load(path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?,
        None => SimConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.scenario.seed = seed;
    }
    if let Some(s) = &cli.scenario {
        cfg.scenario.scenario = parse_scenario(s)?;
    }
    if let Some(c) = &cli.case {
        let case = parse_case(c)?;
        cfg.scenario.apply_case(case);
    }
    if let Some(k) = cli.combination {
        apply_combination(&mut cfg, k)?;
    }
    cfg.validate().map_err(CliError::usage)?;
    Ok(cfg)
}

/// Map a combination index onto the active power-control mode.
fn apply_combination(cfg: &mut SimConfig, k: usize) -> Result<(), CliError> {
    match cfg.power_control.closed_loop.mode {
        ClosedLoopMode::Off => {
            let sweep = &cfg.sweep.p0_aerial_dbm;
            if k == 0 || k > sweep.len() {
                return Err(CliError::Usage(format!(
                    "open-loop combination {k} out of range 1..={}",
                    sweep.len()
                )));
            }
            cfg.power_control.p0_aerial_dbm = sweep[k - 1];
        }
        _ => {
            cfg.power_control.closed_loop.aerial_target_mode = match k {
                1 => AerialTargetMode::Fixed,
                2 => AerialTargetMode::RsrpConditioned,
                _ => {
                    return Err(CliError::Usage(format!(
                        "closed-loop combination {k} out of range 1..=2"
                    )))
                }
            };
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Output plumbing
// ---------------------------------------------------------------------------

fn prepare_out_dir(cfg: &SimConfig, cli: &Cli, subcommand: &str, drops: u64) -> Result<PathBuf, CliError> {
    let dir = cli.out.clone();
    std::fs::create_dir_all(&dir).map_err(CliError::runtime)?;

    let echo = cfg.to_toml().map_err(CliError::runtime)?;
    std::fs::write(dir.join("config.toml"), echo).map_err(CliError::runtime)?;

    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let manifest = serde_json::json!({
        "subcommand": subcommand,
        "version": env!("CARGO_PKG_VERSION"),
        "timestamp_unix": timestamp,
        "seed": cfg.scenario.seed,
        "drops": drops,
        "scenario": cfg.scenario.scenario.to_string(),
        "case": cfg.scenario.case.to_string(),
        "config_echo": "config.toml",
    });
    let mut w = BufWriter::new(File::create(dir.join("manifest.json")).map_err(CliError::runtime)?);
    serde_json::to_writer_pretty(&mut w, &manifest).map_err(CliError::runtime)?;
    Ok(dir)
}

fn combination_label(cli: &Cli) -> String {
    match cli.combination {
        Some(k) => format!("combo-{k}"),
        None => "default".into(),
    }
}

fn class_label(class: Option<DeviceClass>) -> &'static str {
    match class {
        None => "all",
        Some(DeviceClass::Terrestrial) => "terrestrial",
        Some(DeviceClass::Aerial) => "aerial",
    }
}

/// Flatten a UL campaign into sample rows and a summary document.
fn ul_report(
    campaign: &UlCampaign,
    scenario: &str,
    combination: &str,
) -> Result<(Vec<SampleRow>, Summary), CliError> {
    let mut rows = Vec::new();
    let mut summary = Summary::default();

    let iot = campaign.cell_iot_samples();
    for v in &iot {
        rows.push(SampleRow::new("ul_iot_db", "all", scenario, combination, *v));
    }
    summary.insert_stats(
        "ul_iot_db",
        "all",
        &SummaryStats::from_samples(&iot).map_err(CliError::runtime)?,
    );

    for class in [None, Some(DeviceClass::Terrestrial), Some(DeviceClass::Aerial)] {
        let label = class_label(class);
        for (metric, samples) in [
            ("ul_sinr_db", campaign.sinr_samples(class)),
            ("ul_throughput_bps", campaign.throughput_samples(class)),
            ("ul_tx_power_dbm", campaign.tx_power_samples(class)),
        ] {
            if samples.is_empty() {
                continue;
            }
            for v in &samples {
                rows.push(SampleRow::new(metric, label, scenario, combination, *v));
            }
            summary.insert_stats(
                metric,
                label,
                &SummaryStats::from_samples(&samples).map_err(CliError::runtime)?,
            );
        }
    }

    summary.insert_value(
        "achieved_ru.mean",
        serde_json::json!(campaign.mean_achieved_ru()),
    );
    Ok((rows, summary))
}

fn write_ul_cdf_plots(
    dir: &Path,
    campaign: &UlCampaign,
) -> Result<(), CliError> {
    let emit = |metric: &str, label: &str, samples: Vec<f64>| -> Result<(), CliError> {
        if samples.is_empty() {
            return Ok(());
        }
        let c = cdf(&samples, metric, label).map_err(CliError::runtime)?;
        write_cdf_plot(&dir.join(format!("cdf_{metric}_{label}.dat")), &c)
            .map_err(CliError::runtime)
    };
    emit("ul_iot_db", "all", campaign.cell_iot_samples())?;
    for class in [Some(DeviceClass::Terrestrial), Some(DeviceClass::Aerial)] {
        let label = class_label(class);
        emit("ul_sinr_db", label, campaign.sinr_samples(class))?;
        emit("ul_throughput_bps", label, campaign.throughput_samples(class))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn run_ul(
    cfg: &SimConfig,
    cli: &Cli,
    drops: u64,
    plot_data: bool,
    dump_intermediates: bool,
) -> Result<(), CliError> {
    if drops == 0 {
        return Err(CliError::Usage("--drops must be at least 1".into()));
    }
    let dir = prepare_out_dir(cfg, cli, "run-ul", drops)?;
    let scenario = cfg.scenario.scenario.to_string();
    let combination = combination_label(cli);
    eprintln!(
        "run-ul: {scenario} {} seed {} drops {drops} -> {}",
        cfg.scenario.case, cfg.scenario.seed, dir.display()
    );

    let started = Instant::now();
    let campaign =
        run_ul_campaign(cfg, &cfg.power_control, drops).map_err(CliError::runtime)?;
    eprintln!("run-ul: campaign finished in {:?}", started.elapsed());

    let (rows, summary) = ul_report(&campaign, &scenario, &combination)?;
    write_samples_csv(&dir.join("ul_samples.csv"), &rows).map_err(CliError::runtime)?;
    summary
        .write_json(&dir.join("summary.json"))
        .map_err(CliError::runtime)?;

    if plot_data {
        write_ul_cdf_plots(&dir, &campaign)?;
    }
    if dump_intermediates {
        let layout = build_network(cfg).map_err(CliError::runtime)?;
        let (_, matrix, assignments) = drop_artifacts(&layout, cfg, 0);
        let coupling = File::create(dir.join("coupling.csv")).map_err(CliError::runtime)?;
        matrix
            .write_csv(BufWriter::new(coupling))
            .map_err(CliError::runtime)?;
        let assignments_file =
            File::create(dir.join("assignments.csv")).map_err(CliError::runtime)?;
        uavsim_core::association::write_assignments_csv(
            BufWriter::new(assignments_file),
            &assignments,
        )
        .map_err(CliError::runtime)?;
    }
    eprintln!("run-ul: wrote {} sample rows", rows.len());
    Ok(())
}

fn run_dl(cfg: &SimConfig, cli: &Cli, drops: u64, plot_data: bool) -> Result<(), CliError> {
    if drops == 0 {
        return Err(CliError::Usage("--drops must be at least 1".into()));
    }
    let dir = prepare_out_dir(cfg, cli, "run-dl", drops)?;
    let scenario = cfg.scenario.scenario.to_string();
    let combination = combination_label(cli);
    eprintln!(
        "run-dl: {scenario} {} seed {} drops {drops} -> {}",
        cfg.scenario.case, cfg.scenario.seed, dir.display()
    );

    let started = Instant::now();
    let campaign = run_dl_campaign(cfg, drops).map_err(CliError::runtime)?;
    eprintln!("run-dl: campaign finished in {:?}", started.elapsed());

    let mut rows = Vec::new();
    for v in &campaign.aerial_sinr_db {
        rows.push(SampleRow::new(
            "dl_geometry_sinr_db",
            "aerial",
            &scenario,
            &combination,
            *v,
        ));
    }
    for v in &campaign.terrestrial_sinr_db {
        rows.push(SampleRow::new(
            "dl_geometry_sinr_db",
            "terrestrial",
            &scenario,
            &combination,
            *v,
        ));
    }
    write_samples_csv(&dir.join("dl_samples.csv"), &rows).map_err(CliError::runtime)?;

    write_outage_csv(&dir.join("outage.csv"), &scenario, &campaign).map_err(CliError::runtime)?;

    let mut summary = Summary::default();
    summary.insert_stats(
        "dl_geometry_sinr_db",
        "aerial",
        &SummaryStats::from_samples(&campaign.aerial_sinr_db).map_err(CliError::runtime)?,
    );
    summary.insert_stats(
        "dl_geometry_sinr_db",
        "terrestrial",
        &SummaryStats::from_samples(&campaign.terrestrial_sinr_db).map_err(CliError::runtime)?,
    );
    summary.insert_value(
        "dl_geometry_sinr_db.aerial.min",
        serde_json::json!(campaign.min_aerial_sinr_db),
    );
    for (i, ch) in DL_CHANNELS.iter().enumerate() {
        let name = ch.label().to_ascii_lowercase().replace(' ', "_");
        summary.insert_value(
            &format!("outage.{name}.normal"),
            serde_json::json!(campaign.outage_normal[i]),
        );
        summary.insert_value(
            &format!("outage.{name}.ce"),
            serde_json::json!(campaign.outage_ce[i]),
        );
        summary.insert_value(
            &format!("thresholds.{name}.normal_db"),
            serde_json::json!(cfg.dl.required_sinr_db(*ch, false)),
        );
        summary.insert_value(
            &format!("thresholds.{name}.ce_db"),
            serde_json::json!(cfg.dl.required_sinr_db(*ch, true)),
        );
    }
    // the non-CE thresholds are simulator defaults, not measured values
    summary.insert_value(
        "thresholds.normal_coverage_source",
        serde_json::json!("simulator_defaults"),
    );
    summary
        .write_json(&dir.join("summary.json"))
        .map_err(CliError::runtime)?;

    if plot_data {
        let c = cdf(&campaign.aerial_sinr_db, "dl_geometry_sinr_db", "aerial")
            .map_err(CliError::runtime)?;
        write_cdf_plot(&dir.join("cdf_dl_geometry_sinr_db_aerial.dat"), &c)
            .map_err(CliError::runtime)?;
    }
    eprintln!("run-dl: wrote {} sample rows", rows.len());
    Ok(())
}

fn write_outage_csv(
    path: &Path,
    scenario: &str,
    campaign: &DlCampaign,
) -> uavsim_core::Result<()> {
    use std::io::Write;
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "channel,scenario,ce,outage_fraction")?;
    for (i, ch) in DL_CHANNELS.iter().enumerate() {
        writeln!(
            w,
            "{},{},without,{}",
            ch.label(),
            scenario,
            campaign.outage_normal[i]
        )?;
        writeln!(w, "{},{},with,{}", ch.label(), scenario, campaign.outage_ce[i])?;
    }
    Ok(())
}

fn sweep_p0(
    cfg: &SimConfig,
    cli: &Cli,
    drops: u64,
    p0_override: Option<Vec<f64>>,
) -> Result<(), CliError> {
    if drops == 0 {
        return Err(CliError::Usage("--drops must be at least 1".into()));
    }
    let p0_values = p0_override.unwrap_or_else(|| cfg.sweep.p0_aerial_dbm.clone());
    if p0_values.len() < 2 {
        return Err(CliError::Usage(
            "a sweep needs at least two P0 values (baseline + candidate)".into(),
        ));
    }
    let dir = prepare_out_dir(cfg, cli, "sweep-p0", drops)?;
    let scenario = cfg.scenario.scenario.to_string();
    eprintln!(
        "sweep-p0: {scenario} seed {} drops {drops} over {:?} dBm -> {}",
        cfg.scenario.seed,
        p0_values,
        dir.display()
    );

    let started = Instant::now();
    let mut campaigns: Vec<(String, PowerControlConfig, UlCampaign)> = Vec::new();
    for (i, p0) in p0_values.iter().enumerate() {
        let label = format!("combo-{}", i + 1);
        let mut policy = cfg.power_control.clone();
        policy.p0_aerial_dbm = *p0;
        let campaign = run_ul_campaign(cfg, &policy, drops).map_err(CliError::runtime)?;

        let combo_dir = dir.join(&label);
        std::fs::create_dir_all(&combo_dir).map_err(CliError::runtime)?;
        let (rows, summary) = ul_report(&campaign, &scenario, &label)?;
        write_samples_csv(&combo_dir.join("ul_samples.csv"), &rows)
            .map_err(CliError::runtime)?;
        summary
            .write_json(&combo_dir.join("summary.json"))
            .map_err(CliError::runtime)?;

        campaigns.push((label, policy, campaign));
        eprintln!("sweep-p0: finished P0_aer {p0} dBm");
    }

    // gains against the first combination
    let percentiles = [20.0, 50.0, 95.0];
    let baseline = &campaigns[0].2;
    let mut gain_rows = Vec::new();
    let mut gain_doc = Summary::default();
    for (label, policy, campaign) in &campaigns[1..] {
        for class in [Some(DeviceClass::Terrestrial), Some(DeviceClass::Aerial)] {
            let class_name = class_label(class);
            let report = gain_report(
                &baseline.throughput_samples(class),
                &campaign.throughput_samples(class),
                &percentiles,
            )
            .map_err(CliError::runtime)?;
            for (p, gain) in percentiles.iter().zip(&report.gains_pct) {
                if let Some(g) = gain {
                    gain_rows.push(SampleRow::new(
                        &format!("ul_throughput_gain_p{p:.0}_pct"),
                        class_name,
                        &scenario,
                        label,
                        *g,
                    ));
                }
            }
            if let Some(g) = report.mean_gain_pct {
                gain_rows.push(SampleRow::new(
                    "ul_throughput_gain_mean_pct",
                    class_name,
                    &scenario,
                    label,
                    g,
                ));
            }
            gain_doc.insert_value(
                &format!("{label}.p0_aerial_dbm"),
                serde_json::json!(policy.p0_aerial_dbm),
            );
            gain_doc.insert_value(
                &format!("{label}.{class_name}.gains_pct"),
                serde_json::json!(report.gains_pct),
            );
            gain_doc.insert_value(
                &format!("{label}.{class_name}.mean_gain_pct"),
                serde_json::json!(report.mean_gain_pct),
            );
        }
    }
    gain_doc.insert_value("baseline", serde_json::json!("combo-1"));
    gain_doc.insert_value("percentiles", serde_json::json!(percentiles));
    write_samples_csv(&dir.join("gains.csv"), &gain_rows).map_err(CliError::runtime)?;
    gain_doc
        .write_json(&dir.join("gain_report.json"))
        .map_err(CliError::runtime)?;
    eprintln!(
        "sweep-p0: {} combinations in {:?}",
        campaigns.len(),
        started.elapsed()
    );
    Ok(())
}

fn linkbudget(cli: &Cli, csv: bool) -> Result<(), CliError> {
    let rows = link_budget::build_ce_table();
    if csv {
        link_budget::write_csv(std::io::stdout().lock(), &rows).map_err(CliError::runtime)?;
    } else {
        print!("{}", link_budget::format_table(&rows));
    }
    // also persist when an output directory was explicitly requested
    if cli.out != Path::new("uavsim-out") {
        std::fs::create_dir_all(&cli.out).map_err(CliError::runtime)?;
        let file = File::create(cli.out.join("linkbudget.csv")).map_err(CliError::runtime)?;
        link_budget::write_csv(BufWriter::new(file), &rows).map_err(CliError::runtime)?;
    }
    Ok(())
}
