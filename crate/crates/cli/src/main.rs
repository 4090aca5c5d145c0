use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use nlconv::gate::{self, GateSettings, PresetName};
use nlconv::io::{self, QuantumObject};
use nlconv::metrics::{self, Estimate, Metric, MetricReport};
use nlconv::noise::{self, NoiseSpec};
use nlconv::pipeline::{self, ExperimentConfig, NoiseConfig, Table3Mode};
use nlconv::state::{self, ChoiProcess};
use nlconv::tomography::{self, CoincidenceDataset, MleOptions, PreparationSetting, TomographyKind};
use nlconv::{Error, Result};
use nlconv_cli::angle::{format_angle, parse_angle};
use nlconv_cli::exit_code;

#[derive(Parser)]
#[command(name = "nlconv", version, about = "Non-local conversion gate toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the 4x4 gate matrix and print its coefficients.
    Gate(GateArgs),
    /// Apply the gate to two qubits of a state.
    Convert(ConvertArgs),
    /// Simulate or reconstruct tomography data.
    #[command(subcommand)]
    Tomo(TomoCommand),
    /// Evaluate figures of merit of a state or process.
    Metrics(MetricsArgs),
    /// Regenerate one of the report tables.
    Reproduce(ReproduceArgs),
}

#[derive(Args, Serialize)]
struct SettingsArgs {
    /// Named setting: cluster-identity, ghz, dicke, bell-pair, entangler, discord-demo.
    #[arg(long, conflicts_with_all = ["theta1", "theta2"])]
    preset: Option<String>,
    /// First half-wave-plate angle, e.g. 3pi/8 or 1.178.
    #[arg(long, value_parser = parse_angle, requires = "theta2", allow_hyphen_values = true)]
    theta1: Option<f64>,
    #[arg(long, value_parser = parse_angle, requires = "theta1", allow_hyphen_values = true)]
    theta2: Option<f64>,
}

impl SettingsArgs {
    fn resolve(&self) -> Result<Option<GateSettings>> {
        match (&self.preset, self.theta1, self.theta2) {
            (Some(name), _, _) => Ok(Some(gate::preset_by_name(name)?.settings)),
            (None, Some(t1), Some(t2)) => GateSettings::new(t1, t2).map(Some),
            _ => Ok(None),
        }
    }

    fn require(&self) -> Result<GateSettings> {
        self.resolve()?
            .ok_or_else(|| Error::InvalidArgument("give --preset or both --theta1 and --theta2".into()))
    }
}

#[derive(Args, Serialize)]
struct GateArgs {
    #[command(flatten)]
    settings: SettingsArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the Choi matrix of the ideal gate as a process file.
    #[arg(long)]
    choi: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct ConvertArgs {
    #[command(flatten)]
    settings: SettingsArgs,
    /// Input state file; the linear cluster state when omitted.
    #[arg(long)]
    state_in: Option<PathBuf>,
    /// One-based qubit pair the gate acts on.
    #[arg(long, default_value = "2,3")]
    targets: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum TomoCommand {
    /// Simulate coincidence counts for a channel or a state.
    Simulate(SimulateArgs),
    /// Maximum-likelihood reconstruction from a dataset.
    Reconstruct(ReconstructArgs),
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    #[command(flatten)]
    settings: SettingsArgs,
    /// Choi file of the channel, instead of a gate setting.
    #[arg(long)]
    chi: Option<PathBuf>,
    /// State file; produces nine-basis state tomography data instead.
    #[arg(long, conflicts_with = "chi")]
    state: Option<PathBuf>,
    /// Detection probability of the state, for --state.
    #[arg(long, default_value_t = 1.0, requires = "state")]
    success_probability: f64,
    /// Noise spec file applied to the channel.
    #[arg(long)]
    noise: Option<PathBuf>,
    #[arg(long)]
    mean_counts: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct MleArgs {
    /// Stop when the log-likelihood gain drops below this.
    #[arg(long, default_value_t = MleOptions::default().tol)]
    tol: f64,
    #[arg(long, default_value_t = MleOptions::default().max_iter)]
    max_iter: usize,
}

impl MleArgs {
    fn options(&self) -> MleOptions {
        MleOptions {
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Args, Serialize)]
struct ReconstructArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long = "type", value_parser = parse_kind)]
    kind: TomographyKind,
    /// Preparation whose counts to use, e.g. "H+", for state reconstruction of process data.
    #[arg(long, allow_hyphen_values = true)]
    prep: Option<String>,
    #[command(flatten)]
    mle: MleArgs,
    #[arg(long)]
    out: PathBuf,
    /// Reconstruction report; defaults to the estimate path with a .report.json suffix.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn parse_kind(s: &str) -> std::result::Result<TomographyKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args, Serialize)]
struct MetricsArgs {
    /// Choi file to evaluate.
    #[arg(long, conflicts_with = "state", required_unless_present = "state")]
    chi: Option<PathBuf>,
    /// State file to evaluate.
    #[arg(long)]
    state: Option<PathBuf>,
    /// Reference: a file, a preset name (its ideal channel) or a named state
    /// (cluster, ghz4, dicke4_2, bell_pair_product, psi_plus, phi_plus).
    #[arg(long)]
    target: Option<String>,
    /// Metric names; a default set is used when none is given.
    #[arg(long = "metric")]
    metrics: Vec<String>,
    /// Also report the four-phase optimized process fidelity.
    #[arg(long)]
    optimize_phases: bool,
    /// Monte Carlo samples for standard deviations; needs --data.
    #[arg(long)]
    monte_carlo: Option<usize>,
    /// Dataset the estimate was reconstructed from.
    #[arg(long)]
    data: Option<PathBuf>,
    #[command(flatten)]
    mle: MleArgs,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ReproduceTarget {
    Table1,
    Table2Sim,
    Entangler,
    Discord,
    Table3,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum NoiseMode {
    /// Ideal channels.
    None,
    /// Default template scaled to each channel's reported fidelity.
    Calibrated,
}

#[derive(Args, Serialize)]
struct ReproduceArgs {
    #[arg(value_enum)]
    target: ReproduceTarget,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Full experiment configuration; the flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    mean_counts: Option<f64>,
    #[arg(long)]
    monte_carlo: Option<usize>,
    #[arg(long, value_enum)]
    noise: Option<NoiseMode>,
    /// Reconstruct the noisy channels from simulated counts in table3.
    #[arg(long)]
    table3_monte_carlo: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gate(a) => cmd_gate(a),
        Command::Convert(a) => cmd_convert(a),
        Command::Tomo(TomoCommand::Simulate(a)) => cmd_simulate(a),
        Command::Tomo(TomoCommand::Reconstruct(a)) => cmd_reconstruct(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Reproduce(a) => cmd_reproduce(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

/// The given seed, or a fresh one announced on stderr.
fn seed_or_generate(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("seed: {s}");
        s
    })
}

fn metadata(command: &str, args: &impl Serialize, seed: Option<u64>) -> Value {
    let config = serde_json::to_value(args).unwrap_or(Value::Null);
    io::run_metadata(command, config, seed)
}

#[derive(Serialize)]
struct GateFile {
    #[serde(flatten)]
    matrix: nlconv::linalg::MatrixJson,
    theta1: f64,
    theta2: f64,
    coefficients: gate::GateCoefficients,
    operator_norm: f64,
    metadata: Value,
}

fn cmd_gate(args: &GateArgs) -> Result<()> {
    let s = args.settings.require()?;
    let g = gate::build_gate(s);
    let k = gate::gate_coefficients(s);
    let norm = g.singular_values().max();
    println!("theta1 = {}  theta2 = {}", format_angle(s.theta1), format_angle(s.theta2));
    println!(
        "alpha1 = {:?}  beta1 = {:?}  alpha2 = {:?}  beta2 = {:?}  mu1 = {:?}  mu2 = {:?}",
        k.alpha1, k.beta1, k.alpha2, k.beta2, k.mu1, k.mu2
    );
    println!("operator norm = {norm:?}");
    if let Some(out) = &args.out {
        let file = GateFile {
            matrix: (&g).into(),
            theta1: s.theta1,
            theta2: s.theta2,
            coefficients: k,
            operator_norm: norm,
            metadata: metadata("gate", args, None),
        };
        io::write_json(out, &file)?;
    }
    if let Some(path) = &args.choi {
        let chi = gate::ideal_choi(s)?;
        io::write_object(path, &QuantumObject::Process(chi), Some(metadata("gate", args, None)))?;
    }
    Ok(())
}

fn parse_targets(text: &str, qubits: usize) -> Result<(usize, usize)> {
    let bad = || Error::InvalidArgument(format!("targets {text:?} must be two distinct qubits in 1..={qubits}"));
    let parts: Vec<usize> = text
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad())?;
    match parts[..] {
        [a, b] if a != b && (1..=qubits).contains(&a) && (1..=qubits).contains(&b) => Ok((a - 1, b - 1)),
        _ => Err(bad()),
    }
}

fn cmd_convert(args: &ConvertArgs) -> Result<()> {
    let s = args.settings.require()?;
    let input = match &args.state_in {
        Some(path) => io::read_object(path)?,
        None => QuantumObject::Pure(gate::cluster_state_c4()),
    };
    let (output, p) = match &input {
        QuantumObject::Pure(psi) => {
            let targets = parse_targets(&args.targets, psi.qubits())?;
            let (out, p) = gate::apply_gate_on(s, psi, targets)?;
            (QuantumObject::Pure(out), p)
        }
        QuantumObject::Density(rho) => {
            let targets = parse_targets(&args.targets, rho.qubits())?;
            let (out, p) = state::embed_two_qubit_channel(rho, &gate::ideal_choi(s)?, targets)?;
            (QuantumObject::Density(out), p)
        }
        QuantumObject::Process(_) => {
            return Err(Error::InvalidArgument("convert needs a state, not a process".into()))
        }
    };
    println!("success probability = {p}");
    if let QuantumObject::Pure(psi) = &output {
        for (idx, a) in psi.amplitudes().iter().enumerate() {
            if a.norm() > 1e-12 {
                println!("  |{:0width$b}> {:+.12} {:+.12}i", idx, a.re, a.im, width = psi.qubits());
            }
        }
    }
    if let Some(out) = &args.out {
        let mut meta = metadata("convert", args, None);
        meta["success_probability"] = json!(p);
        io::write_object(out, &output, Some(meta))?;
    }
    Ok(())
}

fn read_noise(path: &Option<PathBuf>) -> Result<NoiseSpec> {
    match path {
        Some(p) => {
            let spec: NoiseSpec = io::read_json(p)?;
            spec.validate()?;
            Ok(spec)
        }
        None => Ok(NoiseSpec::zero()),
    }
}

fn read_process(path: &Path) -> Result<ChoiProcess> {
    match io::read_object(path)? {
        QuantumObject::Process(chi) => Ok(chi),
        _ => Err(Error::InvalidArgument(format!("{} does not hold a process", path.display()))),
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let seed = seed_or_generate(args.seed);
    let spec = read_noise(&args.noise)?;
    let mut data = if let Some(path) = &args.state {
        let rho = spec.apply_to_state(&io::read_object(path)?.to_density()?)?;
        tomography::simulate_state_counts(&rho, args.success_probability, args.mean_counts, seed)?
    } else {
        let chi_th = match (&args.chi, args.settings.resolve()?) {
            (Some(path), None) => read_process(path)?,
            (None, Some(s)) => gate::ideal_choi(s)?,
            _ => {
                return Err(Error::InvalidArgument(
                    "give exactly one of --chi, --preset, --theta1/--theta2 or --state".into(),
                ))
            }
        };
        tomography::simulate_counts(&spec.apply_to_choi(&chi_th)?, args.mean_counts, seed)?
    };
    data.metadata = Some(metadata("tomo simulate", args, Some(seed)));
    io::write_json(&args.out, &data)?;
    println!("{} records, {} coincidences, seed {seed}", data.records.len(), data.total_counts());
    Ok(())
}

fn cmd_reconstruct(args: &ReconstructArgs) -> Result<()> {
    let data: CoincidenceDataset = io::read_json(&args.data)?;
    let options = args.mle.options();
    let prep = args
        .prep
        .as_deref()
        .map(str::parse::<PreparationSetting>)
        .transpose()?;
    let report = match (args.kind, prep) {
        (TomographyKind::State, prep) => tomography::mle_density_matrix(&data, prep, &options)?,
        (TomographyKind::Process, None) => tomography::mle_process_matrix(&data, &options)?,
        (TomographyKind::Process, Some(_)) => {
            return Err(Error::InvalidArgument("--prep applies to state reconstruction".into()))
        }
    };
    let summary = report.summary();
    let mut meta = metadata("tomo reconstruct", args, data.seed);
    meta["reconstruction"] = summary.clone();
    let object = match &report.estimate {
        Estimate::State(rho) => QuantumObject::Density(rho.clone()),
        Estimate::Process(chi) => QuantumObject::Process(chi.clone()),
    };
    io::write_object(&args.out, &object, Some(meta.clone()))?;
    let report_path = args.report.clone().unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".report.json");
        PathBuf::from(p)
    });
    let mut full = summary.clone();
    full["log_likelihoods"] = json!(report.log_likelihoods);
    full["metadata"] = meta;
    io::write_json(&report_path, &full)?;
    println!(
        "iterations = {}  log-likelihood = {}  converged = {}",
        report.iterations, report.final_log_likelihood, report.converged
    );
    Ok(())
}

/// A reference given as a file, a preset name or a named state.
fn resolve_target(text: &str) -> Result<Estimate> {
    let path = Path::new(text);
    if path.exists() {
        return Ok(match io::read_object(path)? {
            QuantumObject::Process(chi) => Estimate::Process(chi),
            other => Estimate::State(other.to_density()?),
        });
    }
    if let Ok(name) = text.parse::<PresetName>() {
        return Ok(Estimate::Process(gate::ideal_choi(gate::preset(name).settings)?));
    }
    if let Ok(kind) = text.parse::<gate::TargetKind>() {
        return Ok(Estimate::State(gate::target_state(kind).to_density()?));
    }
    Err(Error::InvalidArgument(format!("target {text:?} is not a file, preset or named state")))
}

fn default_metrics(estimate: &Estimate, has_target: bool, optimize: bool) -> Vec<Metric> {
    let mut list = vec![Metric::Purity];
    match estimate {
        Estimate::Process(_) => {
            if has_target {
                list.push(Metric::ProcessFidelity);
            }
        }
        Estimate::State(rho) => {
            if has_target {
                list.push(Metric::Fidelity);
            }
            if rho.qubits() == 2 {
                list.extend([Metric::Concurrence, Metric::LogNegativity]);
            }
        }
    }
    if optimize {
        list.push(Metric::ProcessFidelityOptimized);
    }
    list
}

fn cmd_metrics(args: &MetricsArgs) -> Result<()> {
    let (estimate, kind) = match (&args.chi, &args.state) {
        (Some(p), _) => (Estimate::Process(read_process(p)?), TomographyKind::Process),
        (None, Some(p)) => (Estimate::State(io::read_object(p)?.to_density()?), TomographyKind::State),
        (None, None) => return Err(Error::InvalidArgument("give --chi or --state".into())),
    };
    let reference = args.target.as_deref().map(resolve_target).transpose()?;
    let mut wanted: Vec<Metric> = args
        .metrics
        .iter()
        .map(|m| m.parse())
        .collect::<Result<_>>()?;
    if wanted.is_empty() {
        wanted = default_metrics(&estimate, reference.is_some(), args.optimize_phases);
    } else if args.optimize_phases && !wanted.contains(&Metric::ProcessFidelityOptimized) {
        wanted.push(Metric::ProcessFidelityOptimized);
    }

    let mc = match args.monte_carlo {
        Some(n) => {
            let path = args
                .data
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("--monte-carlo needs --data".into()))?;
            let data: CoincidenceDataset = io::read_json(path)?;
            Some((data, n, seed_or_generate(args.seed)))
        }
        None => None,
    };

    let mut reports = Vec::new();
    for metric in wanted {
        let value = metrics::evaluate(metric, &estimate, reference.as_ref())?;
        let mut report = MetricReport::new(metric.as_str(), value);
        if metric == Metric::ProcessFidelityOptimized {
            if let (Estimate::Process(chi), Some(Estimate::Process(th))) = (&estimate, &reference) {
                let (_, phases) = metrics::phase_optimized_fidelity(chi, th)?;
                report = report.with_meta("phases", json!(phases.phases()));
            }
        }
        if let Some((data, n, seed)) = &mc {
            let (_, std) = tomography::monte_carlo_metrics(
                data,
                kind,
                *n,
                metric,
                reference.as_ref(),
                &args.mle.options(),
                *seed,
            )?;
            report = report.with_std(std).with_meta("n_samples", *n);
        }
        match report.std {
            Some(std) => println!("{} = {:?} ± {:?}", report.name, report.value, std),
            None => println!("{} = {:?}", report.name, report.value),
        }
        reports.push(report);
    }
    if let Some(out) = &args.out {
        let seed = mc.as_ref().map(|m| m.2);
        io::write_json(
            out,
            &json!({ "metrics": reports, "metadata": metadata("metrics", args, seed) }),
        )?;
    }
    Ok(())
}

fn cmd_reproduce(args: &ReproduceArgs) -> Result<()> {
    let mut config: ExperimentConfig = match &args.config {
        Some(p) => io::read_json(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(m) = args.mean_counts {
        config.mean_counts = m;
    }
    if let Some(n) = args.monte_carlo {
        config.monte_carlo_samples = n;
    }
    match args.noise {
        Some(NoiseMode::None) => config.noise = NoiseConfig::None,
        Some(NoiseMode::Calibrated) => {
            config.noise = NoiseConfig::Calibrated {
                template: noise::default_channel_template(),
            }
        }
        None => {}
    }
    if args.table3_monte_carlo {
        config.table3_mode = Table3Mode::MonteCarlo;
    }
    let samples = match args.target {
        ReproduceTarget::Table1 => false,
        ReproduceTarget::Table3 => config.table3_mode == Table3Mode::MonteCarlo,
        _ => true,
    };
    if args.seed.is_some() || (samples && config.seed.is_none()) {
        config.seed = Some(seed_or_generate(args.seed));
    }
    let (report, stem) = match args.target {
        ReproduceTarget::Table1 => (pipeline::run_table1()?, "table1"),
        ReproduceTarget::Table2Sim => (pipeline::run_tomography_suite(&config)?, "table2-sim"),
        ReproduceTarget::Entangler => (pipeline::run_entangler_demo(&config)?, "entangler"),
        ReproduceTarget::Discord => (pipeline::run_discord_demo(&config)?, "discord"),
        ReproduceTarget::Table3 => (pipeline::run_table3(&config)?, "table3"),
    };
    for row in &report.rows {
        match row.std {
            Some(std) => println!("{}: {:?} ± {:?}", row.label, row.value, std),
            None => println!("{}: {:?}", row.label, row.value),
        }
    }
    report.write(&args.out_dir, stem)?;
    Ok(())
}
