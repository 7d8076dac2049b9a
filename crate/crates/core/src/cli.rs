//! Command-line front end: argument types, option resolution and the four
//! subcommands. `main.rs` only parses and dispatches here.

use crate::baseband::{mean_power, BitStream, Complex, ModulationScheme, OfdmParams};
use crate::channel::{add_awgn, apply_cfo, apply_channel, realize_channel, ChannelModel};
use crate::cryptanalysis::{mutual_information_experiment, papr_invariance, planted_brute_force};
use crate::error::{param, Error, Result};
use crate::iqfile::{bits_to_hex, hex_to_bits, read_iq, write_iq, IqMeta};
use crate::keys::{KeyPolicy, KeySchedule, PermutationKey};
use crate::rx::{KeySource, PhaseTracking, Receiver, RxConfig};
use crate::sim::{count_bit_errors, run_sweep, to_csv, to_json, SweepSpec};
use crate::transmitter::{FrameConfig, Transmitter, Waveform};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub const DEFAULT_KEY_SECRET: &str = "shared key";
pub const DEFAULT_TRAINING_SECRET: &str = "training";

#[derive(Debug, Parser)]
#[command(
    name = "randofdm",
    version,
    about = "Keyed randomized OFDM transceiver and simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build one frame and write it as an IQ file.
    Tx(TxArgs),
    /// Decode a frame from an IQ file.
    Rx(RxArgs),
    /// Monte-Carlo BER sweep.
    Simulate(SimulateArgs),
    /// Key-search, PAPR and mutual-information experiments.
    Attack(AttackArgs),
}

#[derive(Debug, Clone, Args)]
pub struct KeyArgs {
    /// Secret the per-packet permutation is derived from.
    #[arg(long)]
    pub key_secret: Option<String>,
    /// Key file: one line of comma-separated indices.
    #[arg(long, conflicts_with = "key_secret")]
    pub key_file: Option<PathBuf>,
    #[arg(long, default_value = DEFAULT_TRAINING_SECRET)]
    pub training_secret: String,
}

impl KeyArgs {
    pub fn schedule(&self, n: usize) -> Result<KeySchedule> {
        match &self.key_file {
            Some(path) => {
                let key = PermutationKey::from_key_file(&fs::read_to_string(path)?)?;
                if key.len() != n {
                    return Err(Error::Key(format!("key has {} entries, fft size is {n}", key.len())));
                }
                Ok(KeySchedule::single(key))
            }
            None => {
                let secret = self.key_secret.as_deref().unwrap_or(DEFAULT_KEY_SECRET);
                KeySchedule::derive(secret.as_bytes(), n, 1, KeyPolicy::Fixed)
            }
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TxArgs {
    /// Output IQ file; the sidecar goes to `<out>.json`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "bpsk")]
    pub scheme: ModulationScheme,
    /// legacy or rand_ofdm.
    #[arg(long, default_value = "rand_ofdm")]
    pub mode: Waveform,
    /// Data OFDM symbols in the frame.
    #[arg(long, default_value_t = 10)]
    pub symbols: usize,
    #[command(flatten)]
    pub keys: KeyArgs,
    /// Payload as hex (MSB first); random from --seed when absent.
    #[arg(long)]
    pub payload: Option<String>,
    /// Write the payload bits as hex here.
    #[arg(long)]
    pub bits_out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Pass the frame through this channel preset before writing.
    #[arg(long)]
    pub channel: Option<ChannelModel>,
    /// Add noise at this per-subcarrier SNR (dB).
    #[arg(long)]
    pub snr: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub cfo_hz: f64,
    /// Zero samples before the frame.
    #[arg(long, default_value_t = 200)]
    pub lead: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EveKind {
    Identity,
    Random,
}

#[derive(Debug, Clone, Args)]
pub struct RxArgs {
    /// IQ file written by `tx` (sidecar next to it).
    #[arg(long = "in")]
    pub input: PathBuf,
    #[command(flatten)]
    pub keys: KeyArgs,
    /// Decode without the shared key.
    #[arg(long)]
    pub eve: Option<EveKind>,
    /// Hex file holding the transmitted bits, for the BER field.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub cfo_correction: bool,
    #[arg(long, default_value = "per-packet")]
    pub phase: PhaseArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PhaseArg {
    Off,
    PerPacket,
    PerSymbol,
}

impl From<PhaseArg> for PhaseTracking {
    fn from(p: PhaseArg) -> Self {
        match p {
            PhaseArg::Off => Self::Off,
            PhaseArg::PerPacket => Self::PerPacket,
            PhaseArg::PerSymbol => Self::PerSymbol,
        }
    }
}

/// Every flag is optional so a config file can fill the gaps.
#[derive(Debug, Clone, Default, Args)]
pub struct SimulateArgs {
    /// key=value lines using the long flag names.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// awgn, flat or indoor6.
    #[arg(long)]
    pub channel: Option<String>,
    /// Comma-separated: bpsk, qpsk, qam16, qam64.
    #[arg(long)]
    pub scheme: Option<String>,
    /// Comma-separated: legacy, oracle, training, eve-identity, eve-random, eve-oracle-csi.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub snr_start: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub snr_stop: Option<f64>,
    #[arg(long)]
    pub snr_step: Option<f64>,
    #[arg(long)]
    pub packets: Option<usize>,
    #[arg(long)]
    pub symbols: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, allow_negative_numbers = true)]
    pub cfo_hz: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub phase_offset: Option<f64>,
    /// Output path; stdout when absent or "-".
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => param(format!("unknown output format '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatePlan {
    pub spec: SweepSpec,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AttackMode {
    Brute,
    Papr,
    Mi,
}

#[derive(Debug, Clone, Args)]
pub struct AttackArgs {
    /// Permutation length.
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value = "brute")]
    pub mode: AttackMode,
    /// Planted keys (brute), (x, k) pairs (papr) or vectors (mi).
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parses `key=value` lines; `#` starts a comment. Keys may use `-` or `_`.
pub fn parse_config(text: &str) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parameter(format!("config line {}: expected key=value", i + 1)))?;
        map.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(map)
}

const SIMULATE_KEYS: [&str; 13] = [
    "channel",
    "scheme",
    "mode",
    "snr-start",
    "snr-stop",
    "snr-step",
    "packets",
    "symbols",
    "seed",
    "cfo-hz",
    "phase-offset",
    "out",
    "format",
];

fn pick<T: FromStr>(flag: Option<T>, file: &HashMap<String, String>, key: &str, default: T) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    if let Some(v) = flag {
        return Ok(v);
    }
    match file.get(key) {
        Some(s) => s.parse().map_err(|e| Error::Parameter(format!("config '{key}': {e}"))),
        None => Ok(default),
    }
}

fn parse_list<T: FromStr<Err = Error>>(s: &str) -> Result<Vec<T>> {
    s.split(',').map(|t| t.trim().parse()).collect()
}

/// Inclusive SNR grid.
pub fn snr_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step <= 0.0 || stop < start {
        return param("SNR range needs start <= stop and a positive step");
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

/// Merges flags over the config file (when given) over the defaults.
pub fn resolve_simulate(args: &SimulateArgs, config_text: Option<&str>) -> Result<SimulatePlan> {
    let file = match config_text {
        Some(t) => parse_config(t)?,
        None => HashMap::new(),
    };
    if let Some(k) = file.keys().find(|k| !SIMULATE_KEYS.contains(&k.as_str())) {
        return param(format!("unknown config key '{k}'"));
    }
    let d = SweepSpec::default();
    let channel: ChannelModel = pick(args.channel.clone(), &file, "channel", "awgn".into())?.parse()?;
    let schemes = parse_list(&pick(args.scheme.clone(), &file, "scheme", "bpsk".into())?)?;
    let modes = parse_list(&pick(args.mode.clone(), &file, "mode", "legacy,oracle".into())?)?;
    let snr_db = snr_grid(
        pick(args.snr_start, &file, "snr-start", 0.0)?,
        pick(args.snr_stop, &file, "snr-stop", 20.0)?,
        pick(args.snr_step, &file, "snr-step", 2.0)?,
    )?;
    // "-" means stdout.
    let out = args
        .out
        .clone()
        .or_else(|| file.get("out").map(PathBuf::from))
        .filter(|p| p.as_os_str() != "-");
    let spec = SweepSpec {
        snr_db,
        schemes,
        channel,
        modes,
        n_packets: pick(args.packets, &file, "packets", d.n_packets)?,
        n_data_symbols: pick(args.symbols, &file, "symbols", d.n_data_symbols)?,
        seed: pick(args.seed, &file, "seed", d.seed)?,
        cfo_hz: pick(args.cfo_hz, &file, "cfo-hz", 0.0)?,
        static_phase_rad: pick(args.phase_offset, &file, "phase-offset", 0.0)?,
        ..d
    };
    spec.validate()?;
    Ok(SimulatePlan {
        spec,
        out,
        format: pick(args.format.clone(), &file, "format", "csv".into())?.parse()?,
    })
}

#[derive(Debug, Serialize)]
struct TxSummary {
    samples: usize,
    payload_bits: usize,
    key_id: String,
    out: String,
}

#[derive(Debug, Serialize)]
pub struct RxSummary {
    pub frame_start: usize,
    pub cfo_hz: f64,
    pub theta_rad: f64,
    pub ber_if_truth_given: Option<f64>,
}

/// Runs a parsed command, writing results to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Tx(a) => run_tx(&a, out),
        Command::Rx(a) => run_rx(&a, out),
        Command::Simulate(a) => {
            let text = a.config.as_ref().map(fs::read_to_string).transpose()?;
            run_simulate(&resolve_simulate(&a, text.as_deref())?, out)
        }
        Command::Attack(a) => run_attack(&a, out),
    }
}

fn frame_config(scheme: ModulationScheme, mode: Waveform, symbols: usize, keys: &KeyArgs) -> Result<FrameConfig> {
    let params = OfdmParams::wifi();
    Ok(FrameConfig {
        schedule: keys.schedule(params.fft_size)?,
        params,
        scheme,
        n_data_symbols: symbols,
        training_secret: keys.training_secret.as_bytes().to_vec(),
        mode,
    })
}

pub fn run_tx(a: &TxArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = frame_config(a.scheme, a.mode, a.symbols, &a.keys)?;
    let tx = Transmitter::new(cfg.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let payload: BitStream = match &a.payload {
        Some(h) => hex_to_bits(h, Some(cfg.payload_len()))?,
        None => (0..cfg.payload_len()).map(|_| rng.random_range(0..2u8)).collect(),
    };
    let frame = tx.build_frame(&payload)?;
    let p = &cfg.params;
    let clean = frame.samples();
    let mut buf = vec![Complex::new(0.0, 0.0); a.lead];
    buf.extend_from_slice(&clean);
    buf.resize(buf.len() + p.symbol_len(), Complex::new(0.0, 0.0));

    let model = a.channel.clone().unwrap_or_else(ChannelModel::awgn);
    let ch = realize_channel(&model, p, rng.random())?;
    buf = apply_channel(&buf, &ch);
    if a.cfo_hz != 0.0 {
        buf = apply_cfo(&buf, a.cfo_hz, p.sample_rate, 0.0);
    }
    if let Some(snr) = a.snr {
        let es = mean_power(&clean[frame.data_offset()..]) * model.total_linear_gain() * p.fft_size as f64
            / p.used_subcarriers.len() as f64;
        buf = add_awgn(&buf, snr, es, rng.random())?;
    }

    let meta = IqMeta {
        n: p.fft_size,
        cp: p.cp_len,
        scheme: a.scheme,
        mode: a.mode,
        n_symbols: a.symbols,
        sample_rate: p.sample_rate,
    };
    write_iq(&a.out, &buf, &meta)?;
    if let Some(path) = &a.bits_out {
        fs::write(path, bits_to_hex(&payload) + "\n")?;
    }
    let summary = TxSummary {
        samples: buf.len(),
        payload_bits: payload.len(),
        key_id: cfg.schedule.key_for_symbol(0).key_id().to_string(),
        out: a.out.display().to_string(),
    };
    writeln!(out, "{}", serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}

/// Decodes an IQ file; returns the bits and the JSON summary.
pub fn decode_file(a: &RxArgs) -> Result<(BitStream, RxSummary)> {
    let (samples, meta) = read_iq(&a.input)?;
    let cfg = frame_config(meta.scheme, meta.mode, meta.n_symbols, &a.keys)?;
    if cfg.params.fft_size != meta.n || cfg.params.cp_len != meta.cp {
        return param(format!("file numerology n={} cp={} is not supported", meta.n, meta.cp));
    }
    let mut rc = RxConfig::for_frame(&cfg);
    rc.key_source = match a.eve {
        None => KeySource::SharedKey,
        Some(EveKind::Identity) => KeySource::IdentityKey,
        Some(EveKind::Random) => KeySource::RandomGuess,
    };
    rc.cfo_correction = a.cfo_correction;
    rc.phase_tracking = a.phase.into();
    rc.seed = a.seed;
    let res = Receiver::new(rc)?.receive(&samples, None)?;
    let ber = match &a.truth {
        Some(path) => {
            let truth = hex_to_bits(&fs::read_to_string(path)?, Some(res.bits.len()))?;
            Some(count_bit_errors(&res.bits, &truth) as f64 / truth.len() as f64)
        }
        None => None,
    };
    let r = res.report;
    Ok((
        res.bits,
        RxSummary {
            frame_start: r.frame_start,
            cfo_hz: r.cfo_hz,
            theta_rad: r.theta_rad,
            ber_if_truth_given: ber,
        },
    ))
}

pub fn run_rx(a: &RxArgs, out: &mut dyn Write) -> Result<()> {
    let (bits, summary) = decode_file(a)?;
    writeln!(out, "{}", bits_to_hex(&bits))?;
    writeln!(out, "{}", serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}

pub fn run_simulate(plan: &SimulatePlan, out: &mut dyn Write) -> Result<()> {
    let records = run_sweep(&plan.spec)?;
    let text = match plan.format {
        OutputFormat::Csv => to_csv(&records),
        OutputFormat::Json => to_json(&records)? + "\n",
    };
    match &plan.out {
        Some(path) => write_file(path, &text),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    Ok(fs::write(path, text)?)
}

pub fn run_attack(a: &AttackArgs, out: &mut dyn Write) -> Result<()> {
    let json = match a.mode {
        AttackMode::Brute => {
            let trials = a.trials.unwrap_or(1).max(1);
            let mut runs = Vec::with_capacity(trials);
            for t in 0..trials {
                let (key, report) = planted_brute_force(a.n, a.seed.wrapping_add(t as u64))?;
                let mut v = serde_json::to_value(&report)?;
                v["planted_key"] = serde_json::Value::String(key.to_string());
                runs.push(v);
            }
            if trials == 1 {
                runs.pop().expect("one run")
            } else {
                serde_json::Value::Array(runs)
            }
        }
        AttackMode::Papr => serde_json::to_value(papr_invariance(a.n, a.trials.unwrap_or(10_000), a.seed)?)?,
        AttackMode::Mi => serde_json::to_value(mutual_information_experiment(
            a.n,
            a.trials.unwrap_or(2000),
            32,
            a.seed,
        )?)?,
    };
    writeln!(out, "{}", serde_json::to_string_pretty(&json)?)?;
    Ok(())
}
