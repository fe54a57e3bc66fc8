//! Front end of the `polar-gscl` binary.
//!
//! Exit codes: 0 on success, 1 on runtime or data failures, 2 on usage
//! errors.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::channels::{snr_to_sigma, ChannelObservation};
use crate::construction::{bec_reliabilities, construct_constrained, construct_unconstrained, ga_reliabilities};
use crate::decode::{GsclDecoder, Threshold};
use crate::error::Error;
use crate::polar::{encode, PolarCode};
use crate::selfcheck::{run_oracle_check, OracleCheckConfig};
use crate::sim::{gnuplot_script, run_sweep, ChannelKind, InfoSource, SimConfig, SimMetadata, CSV_HEADER};

pub const WORKERS_ENV: &str = "POLAR_GSCL_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "polar-gscl", version, about = "Polar codes with GSCL decoding and Forney's threshold test")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Choose a frozen set, optionally capping the mixing factor.
    Construct(ConstructArgs),
    /// Encode information bits.
    Encode(EncodeArgs),
    /// Decode one observation and apply the threshold test.
    Decode(DecodeArgs),
    /// Monte Carlo TEP/UEP sweep.
    Simulate(SimulateArgs),
    /// Compare decoders with brute-force oracles on random small codes.
    OracleCheck(OracleCheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelArg {
    Biawgn,
    Bec,
}

impl From<ChannelArg> for ChannelKind {
    fn from(c: ChannelArg) -> Self {
        match c {
            ChannelArg::Biawgn => ChannelKind::Biawgn,
            ChannelArg::Bec => ChannelKind::Bec,
        }
    }
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    /// Maximum mixing factor; unconstrained when omitted.
    #[arg(long = "gamma-star")]
    pub gamma_star: Option<usize>,
    #[arg(long, value_enum, default_value = "biawgn")]
    pub channel: ChannelArg,
    /// Design E_b/N_0 in dB (biawgn) or erasure probability (bec).
    #[arg(long = "design-param", allow_negative_numbers = true)]
    pub design_param: f64,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub code: PathBuf,
    /// Information bits as a 0/1 string.
    #[arg(long)]
    pub info: String,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[arg(long)]
    pub code: PathBuf,
    /// Text file with one channel LLR per line; `-` reads stdin.
    #[arg(long)]
    pub llrs: PathBuf,
    /// Defaults to 2^gamma.
    #[arg(long = "list-size")]
    pub list_size: Option<usize>,
    /// Threshold T; accepts `neg-inf`.
    #[arg(long = "threshold-T", default_value = "neg-inf", allow_hyphen_values = true)]
    pub threshold: Threshold,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON simulation config (or a metadata file written by a previous run).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    pub code: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub channel: Option<ChannelArg>,
    /// E_b/N_0 points in dB (or erasure probabilities), comma separated.
    #[arg(long = "snr", value_delimiter = ',', allow_hyphen_values = true)]
    pub points: Vec<f64>,
    /// Thresholds, comma separated; `neg-inf` for the complete decoder.
    #[arg(long = "T", value_delimiter = ',', allow_hyphen_values = true)]
    pub thresholds: Vec<Threshold>,
    #[arg(long)]
    pub frames: Option<u64>,
    #[arg(long = "min-errors")]
    pub min_errors: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = WORKERS_ENV)]
    pub workers: Option<usize>,
    #[arg(long = "info-source", value_parser = parse_info_source)]
    pub info_source: Option<InfoSource>,
    #[arg(long = "list-size")]
    pub list_size: Option<usize>,
    /// Output CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Metadata JSON; defaults to the CSV path with a `.json` extension.
    #[arg(long)]
    pub metadata: Option<PathBuf>,
    /// Also write a gnuplot script to this path.
    #[arg(long = "emit-gnuplot")]
    pub emit_gnuplot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleCheckArgs {
    #[arg(long = "n-max", default_value_t = 16)]
    pub n_max: usize,
    /// Observations per code.
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long = "codes-per-length", default_value_t = 20)]
    pub codes_per_length: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
    /// Negative control: perturb one path metric by this amount.
    #[arg(long = "corrupt-pm", hide = true, default_value_t = 0.0)]
    pub corrupt_pm: f64,
}

fn parse_info_source(s: &str) -> Result<InfoSource, String> {
    match s {
        "all-zero" => Ok(InfoSource::AllZero),
        "random" => Ok(InfoSource::Random),
        other => Err(format!("expected all-zero or random, got {other}")),
    }
}

/// Failure of one subcommand.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Runtime(#[from] Error),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) | CliError::Failed(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    match execute(cli.command, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("polar-gscl: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command, out: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Construct(a) => cmd_construct(a, out),
        Command::Encode(a) => cmd_encode(a, out),
        Command::Decode(a) => cmd_decode(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::OracleCheck(a) => cmd_oracle_check(a, out),
    }
}

fn require_file(path: &Path) -> CliResult<()> {
    if path.as_os_str() == "-" || path.is_file() {
        Ok(())
    } else {
        Err(CliError::Runtime(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("cannot read {}", path.display()),
        ))))
    }
}

fn require_parent(path: &Path) -> CliResult<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => {
            Err(CliError::Usage(format!("directory of {} does not exist", path.display())))
        }
        _ => Ok(()),
    }
}

fn load_code(path: &Path) -> CliResult<PolarCode> {
    require_file(path)?;
    PolarCode::load(path).map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))
}

/// JSON number, or `"-inf"`/`"inf"`/`"nan"` for non-finite values.
fn json_f64(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn bits_to_string(bits: &[u8]) -> String {
    bits.iter().map(|&b| if b == 0 { '0' } else { '1' }).collect()
}

fn parse_bits(s: &str) -> CliResult<Vec<u8>> {
    s.trim()
        .chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(CliError::Usage(format!("information bits must be 0 or 1, found {other:?}"))),
        })
        .collect()
}

fn cmd_construct(a: ConstructArgs, out: &mut dyn Write) -> CliResult<()> {
    if a.n == 0 || !a.n.is_power_of_two() {
        return Err(CliError::Usage(format!("n = {} is not a power of two", a.n)));
    }
    if a.k > a.n {
        return Err(CliError::Usage(format!("k = {} exceeds n = {}", a.k, a.n)));
    }
    if let Some(path) = &a.out {
        require_parent(path)?;
    }
    let (profile, design_key) = match a.channel {
        ChannelArg::Biawgn => {
            let sigma = snr_to_sigma(a.design_param, a.k.max(1) as f64 / a.n as f64)?;
            (ga_reliabilities(sigma, a.n)?, "design_snr_db")
        }
        ChannelArg::Bec => (bec_reliabilities(a.design_param, a.n)?, "epsilon"),
    };
    let code = match a.gamma_star {
        Some(g) => construct_constrained(a.n, a.k, g, &profile)?,
        None => construct_unconstrained(a.n, a.k, &profile)?,
    };
    let mut file = code.to_file();
    file.metadata = Some(json!({
        design_key: a.design_param,
        "design_sigma": (a.channel == ChannelArg::Biawgn).then_some(profile.design_param),
        "gamma_star": a.gamma_star,
        "metric_kind": profile.metric_kind.as_str(),
        "gamma_achieved": code.mixing_factor(),
    }));
    let text = serde_json::to_string_pretty(&file).map_err(Error::from)?;
    match &a.out {
        Some(path) => std::fs::write(path, text + "\n")?,
        None => writeln!(out, "{text}")?,
    }
    eprintln!("gamma = {}, L = {}", code.mixing_factor(), list_size_text(&code));
    Ok(())
}

fn list_size_text(code: &PolarCode) -> String {
    code.list_size_ml().map_or_else(|| format!("2^{}", code.mixing_factor()), |l| l.to_string())
}

fn cmd_encode(a: EncodeArgs, out: &mut dyn Write) -> CliResult<()> {
    let code = load_code(&a.code)?;
    let info = parse_bits(&a.info)?;
    if info.len() != code.k() {
        return Err(CliError::Usage(format!("{} information bits given, code has k = {}", info.len(), code.k())));
    }
    writeln!(out, "{}", bits_to_string(&encode(&info, &code)?))?;
    Ok(())
}

fn read_llrs(path: &Path) -> CliResult<Vec<f64>> {
    let mut text = String::new();
    if path.as_os_str() == "-" {
        std::io::stdin().read_to_string(&mut text)?;
    } else {
        text = std::fs::read_to_string(path)?;
    }
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, l)| l.parse::<f64>().map_err(|_| CliError::Failed(format!("line {}: cannot parse LLR {l:?}", i + 1))))
        .collect()
}

fn cmd_decode(a: DecodeArgs, out: &mut dyn Write) -> CliResult<()> {
    require_file(&a.llrs)?;
    let code = load_code(&a.code)?;
    let llrs = read_llrs(&a.llrs)?;
    if llrs.len() != code.n() {
        return Err(CliError::Failed(format!("{} LLRs read, code has n = {}", llrs.len(), code.n())));
    }
    let obs = ChannelObservation::from_llrs(&llrs)?;
    let mut decoder = match a.list_size {
        Some(l) => GsclDecoder::with_list_size(&code, l)?,
        None => GsclDecoder::new(&code)?,
    };
    let outcome = decoder.decode(&obs, a.threshold)?;
    let m = &outcome.metrics;
    let report = json!({
        "result": if outcome.accepted { "decision" } else { "erasure" },
        "decision": outcome.accepted.then(|| bits_to_string(&m.codeword)),
        "candidate": bits_to_string(&m.codeword),
        "input": bits_to_string(&m.input),
        "log_w_best": json_f64(m.log_w_best),
        "log_p_y": json_f64(m.log_p_y),
        "threshold_log": json_f64(outcome.threshold_log),
        "T": a.threshold.to_string(),
        "list_size": decoder.list_size(),
    });
    writeln!(out, "{}", serde_json::to_string_pretty(&report).map_err(Error::from)?)?;
    Ok(())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ConfigFile {
    Metadata(SimMetadata),
    Config(SimConfig),
}

fn simulate_config(a: &SimulateArgs) -> CliResult<SimConfig> {
    let mut config = match &a.config {
        Some(path) => {
            require_file(path)?;
            let text = std::fs::read_to_string(path)?;
            match serde_json::from_str::<ConfigFile>(&text) {
                Ok(ConfigFile::Metadata(m)) => m.config,
                Ok(ConfigFile::Config(c)) => c,
                Err(e) => return Err(CliError::Failed(format!("{}: {e}", path.display()))),
            }
        }
        None => {
            let code = load_code(a.code.as_deref().expect("clap requires --code without --config"))?;
            SimConfig {
                code,
                channel: ChannelKind::Biawgn,
                points: Vec::new(),
                thresholds: vec![Threshold::NEG_INFINITY],
                max_frames: 10_000,
                min_error_events: 100,
                master_seed: 0,
                workers: 1,
                info_source: InfoSource::Random,
                list_size: None,
            }
        }
    };
    if a.config.is_some() {
        if let Some(path) = &a.code {
            config.code = load_code(path)?;
        }
    }
    if let Some(c) = a.channel {
        config.channel = c.into();
    }
    if !a.points.is_empty() {
        config.points.clone_from(&a.points);
    }
    if !a.thresholds.is_empty() {
        config.thresholds.clone_from(&a.thresholds);
    }
    if let Some(f) = a.frames {
        config.max_frames = f;
    }
    if let Some(e) = a.min_errors {
        config.min_error_events = e;
    }
    if let Some(s) = a.seed {
        config.master_seed = s;
    }
    match a.workers {
        Some(w) => config.workers = w,
        None if a.config.is_none() => {
            config.workers = std::thread::available_parallelism().map_or(1, |n| n.get());
        }
        None => {}
    }
    if let Some(src) = a.info_source {
        config.info_source = src;
    }
    if a.list_size.is_some() {
        config.list_size = a.list_size;
    }
    if config.points.is_empty() {
        return Err(CliError::Usage("no simulation points given (--snr)".into()));
    }
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(config)
}

fn cmd_simulate(a: SimulateArgs, out: &mut dyn Write) -> CliResult<()> {
    let config = simulate_config(&a)?;
    let metadata_path = a.metadata.clone().unwrap_or_else(|| a.out.with_extension("json"));
    for path in [Some(&a.out), Some(&metadata_path), a.emit_gnuplot.as_ref()].into_iter().flatten() {
        require_parent(path)?;
    }
    let mut csv = BufWriter::new(File::create(&a.out)?);
    writeln!(csv, "{CSV_HEADER}")?;
    csv.flush()?;
    let records = run_sweep(&config, |r| {
        writeln!(csv, "{}", r.csv_row())
            .and_then(|_| csv.flush())
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("point {} T={}: {e}", r.point, r.threshold))))
    })?;
    drop(csv);
    let meta = SimMetadata { config: config.clone(), records };
    std::fs::write(&metadata_path, serde_json::to_string_pretty(&meta).map_err(Error::from)? + "\n")?;
    if let Some(path) = &a.emit_gnuplot {
        std::fs::write(path, gnuplot_script(&a.out.display().to_string(), &config))?;
    }
    writeln!(out, "wrote {} records to {}", meta.records.len(), a.out.display())?;
    Ok(())
}

fn cmd_oracle_check(a: OracleCheckArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut config = OracleCheckConfig::up_to(a.n_max).map_err(|e| CliError::Usage(e.to_string()))?;
    config.trials = a.trials;
    config.codes_per_length = a.codes_per_length;
    config.seed = a.seed;
    config.corrupt_pm = a.corrupt_pm;
    let report = run_oracle_check(&config)?;
    if a.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&report).map_err(Error::from)?)?;
    } else {
        write!(out, "{report}")?;
    }
    match report.first_failure() {
        None => Ok(()),
        Some((check, site)) => Err(CliError::Failed(format!(
            "{} failed: n = {}, frozen = {:?}, seed = {}, code {}, trial {} (deviation {:e})",
            check.kind.name(),
            site.n,
            site.frozen,
            site.seed,
            site.code_index,
            site.trial,
            site.deviation
        ))),
    }
}
