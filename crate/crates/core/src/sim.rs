//! Seeded, parallel Monte Carlo estimation of TEP and UEP.
//!
//! Each frame draws its randomness from its own ChaCha stream keyed by
//! `(master_seed, point index, frame index)`. Frames are processed in fixed
//! batches and their results merged in frame order, so every count is a
//! pure function of the configuration and seed, whatever the worker count.
//!
//! The total error probability counts every frame that is not a correct
//! acceptance, `TEP = (erasures + undetected) / frames`; the undetected
//! error probability counts accepted wrong codewords only.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::time::Instant;

use crate::channels::{snr_to_sigma, Channel, SnrPoint};
use crate::decode::{threshold_log, GsclDecoder, SclDecoder, Threshold};
use crate::error::{invalid, Error, Result};
use crate::polar::{polar_transform_in_place, PolarCode};

/// Frames per batch; the stopping rule is checked between batches.
pub const BATCH_FRAMES: u64 = 256;

pub const CSV_HEADER: &str =
    "channel,n,k,gamma,L,ebn0_db_or_eps,T,frames,n_correct,n_erasure,n_undetected,tep,uep,tep_ci95,uep_ci95,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelKind {
    Biawgn,
    Bec,
}

impl ChannelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ChannelKind::Biawgn => "biawgn",
            ChannelKind::Bec => "bec",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InfoSource {
    AllZero,
    #[default]
    Random,
}

fn default_min_events() -> u64 {
    100
}

fn default_workers() -> usize {
    1
}

/// A simulation campaign over one code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub code: PolarCode,
    pub channel: ChannelKind,
    /// `E_b/N_0` in dB for the biAWGN channel, ε for the BEC.
    pub points: Vec<f64>,
    pub thresholds: Vec<Threshold>,
    pub max_frames: u64,
    #[serde(default = "default_min_events")]
    pub min_error_events: u64,
    pub master_seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub info_source: InfoSource,
    /// Defaults to `2^γ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub list_size: Option<usize>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_frames == 0 {
            return invalid("max_frames must be at least 1");
        }
        if self.min_error_events == 0 {
            return invalid("min_error_events must be at least 1");
        }
        if self.workers == 0 {
            return invalid("workers must be at least 1");
        }
        for (i, _) in self.points.iter().enumerate() {
            self.channel_at(i)?;
        }
        Ok(())
    }

    pub fn list_size(&self) -> Result<usize> {
        match self.list_size {
            Some(l) => Ok(l),
            None => self
                .code
                .list_size_ml()
                .ok_or_else(|| Error::Capacity(format!("list size 2^{} does not fit", self.code.mixing_factor()))),
        }
    }

    fn channel_at(&self, point: usize) -> Result<Channel> {
        let value = self.points[point];
        match self.channel {
            ChannelKind::Biawgn => Ok(Channel::Biawgn { sigma: snr_to_sigma(value, self.code.rate())? }),
            ChannelKind::Bec if (0.0..=1.0).contains(&value) => Ok(Channel::Bec { epsilon: value }),
            ChannelKind::Bec => invalid(format!("erasure probability {value} outside [0, 1]")),
        }
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot start {} workers: {e}", self.workers)))
    }
}

/// Counts and estimates for one (point, threshold) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRecord {
    pub channel: ChannelKind,
    pub n: usize,
    pub k: usize,
    pub gamma: usize,
    pub list_size: usize,
    /// `E_b/N_0` in dB or ε.
    pub point: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr: Option<SnrPoint>,
    pub threshold: Threshold,
    pub frames: u64,
    pub n_correct: u64,
    pub n_erasure: u64,
    pub n_undetected: u64,
    pub tep: f64,
    pub uep: f64,
    pub tep_ci95: f64,
    pub uep_ci95: f64,
    pub seed: u64,
    pub wall_time_s: f64,
}

impl SimRecord {
    pub fn total_errors(&self) -> u64 {
        self.n_erasure + self.n_undetected
    }

    pub fn erasure_rate(&self) -> f64 {
        self.n_erasure as f64 / self.frames as f64
    }

    pub fn tep_interval(&self) -> (f64, f64) {
        wilson_interval(self.total_errors(), self.frames)
    }

    pub fn uep_interval(&self) -> (f64, f64) {
        wilson_interval(self.n_undetected, self.frames)
    }

    pub fn erasure_interval(&self) -> (f64, f64) {
        wilson_interval(self.n_erasure, self.frames)
    }

    /// One CSV line matching [`CSV_HEADER`], without the trailing newline.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.channel.as_str(),
            self.n,
            self.k,
            self.gamma,
            self.list_size,
            self.point,
            self.threshold,
            self.frames,
            self.n_correct,
            self.n_erasure,
            self.n_undetected,
            self.tep,
            self.uep,
            self.tep_ci95,
            self.uep_ci95,
            self.seed
        )
    }
}

/// Wilson score interval at 95% for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    const Z: f64 = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

pub fn wilson_half_width(successes: u64, trials: u64) -> f64 {
    let (lo, hi) = wilson_interval(successes, trials);
    (hi - lo) / 2.0
}

/// The random stream of one frame.
pub fn frame_stream(master_seed: u64, point: u64, frame: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&point.to_le_bytes());
    key[16..24].copy_from_slice(&frame.to_le_bytes());
    key[24..].copy_from_slice(b"gscl-sim");
    ChaCha8Rng::from_seed(key)
}

struct Frame {
    codeword: Vec<u8>,
    channel_out: crate::channels::ChannelObservation,
}

fn draw_frame(config: &SimConfig, channel: &Channel, point: usize, index: u64) -> Result<Frame> {
    let mut rng = frame_stream(config.master_seed, point as u64, index);
    let code = &config.code;
    let mut u: Vec<u8> = (0..code.n()).map(|i| code.frozen_value_at(i)).collect();
    if config.info_source == InfoSource::Random {
        for (i, slot) in u.iter_mut().enumerate() {
            if !code.is_frozen_at(i) {
                *slot = rng.random_range(0..2);
            }
        }
    }
    polar_transform_in_place(&mut u);
    let channel_out = channel.observe(&u, &mut rng)?;
    Ok(Frame { codeword: u, channel_out })
}

/// Per-frame result: whether the candidate is the transmitted codeword, and
/// `ln W(y|x̂) − ln P_Y(y)`.
#[derive(Debug, Clone, Copy)]
struct FrameMetric {
    correct: bool,
    log_ratio: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Counts {
    frames: u64,
    correct: u64,
    erasure: u64,
    undetected: u64,
}

fn decode_batch(
    config: &SimConfig,
    channel: &Channel,
    point: usize,
    range: std::ops::Range<u64>,
    decoder: &GsclDecoder,
    pool: &rayon::ThreadPool,
) -> Result<Vec<FrameMetric>> {
    pool.install(|| {
        range
            .into_par_iter()
            .map_init(
                || decoder.clone(),
                |dec, index| {
                    let frame = draw_frame(config, channel, point, index)?;
                    let m = dec.decode_metrics(&frame.channel_out)?;
                    Ok(FrameMetric { correct: m.codeword == frame.codeword, log_ratio: m.log_w_best - m.log_p_y })
                },
            )
            .collect()
    })
}

fn simulate_point(
    config: &SimConfig,
    point: usize,
    thresholds: &[Threshold],
    pool: &rayon::ThreadPool,
) -> Result<Vec<SimRecord>> {
    let channel = config.channel_at(point)?;
    let code = &config.code;
    let list = config.list_size()?;
    let decoder = GsclDecoder::with_list_size(code, list)?;
    let cutoffs: Vec<f64> = thresholds.iter().map(|&t| threshold_log(code.n(), code.k(), t)).collect();
    let started = Instant::now();
    let mut counts = vec![Counts::default(); thresholds.len()];
    let mut done = vec![false; thresholds.len()];
    let mut wall = vec![0.0; thresholds.len()];
    let mut next = 0u64;
    while done.iter().any(|d| !d) {
        let end = (next + BATCH_FRAMES).min(config.max_frames);
        let batch = decode_batch(config, &channel, point, next..end, &decoder, pool)?;
        next = end;
        for (j, t) in thresholds.iter().enumerate() {
            if done[j] {
                continue;
            }
            let c = &mut counts[j];
            for f in &batch {
                c.frames += 1;
                let accepted = t.is_neg_infinity() || f.log_ratio >= cutoffs[j];
                match (accepted, f.correct) {
                    (false, _) => c.erasure += 1,
                    (true, true) => c.correct += 1,
                    (true, false) => c.undetected += 1,
                }
            }
            let enough = c.erasure + c.undetected >= config.min_error_events && c.undetected >= config.min_error_events;
            if enough || c.frames >= config.max_frames {
                done[j] = true;
                wall[j] = started.elapsed().as_secs_f64();
            }
        }
    }
    let snr = match config.channel {
        ChannelKind::Biawgn => Some(SnrPoint::new(config.points[point], code.rate())?),
        ChannelKind::Bec => None,
    };
    Ok(thresholds
        .iter()
        .zip(counts)
        .zip(wall)
        .map(|((&threshold, c), wall_time_s)| {
            let errors = c.erasure + c.undetected;
            SimRecord {
                channel: config.channel,
                n: code.n(),
                k: code.k(),
                gamma: code.mixing_factor(),
                list_size: list,
                point: config.points[point],
                snr,
                threshold,
                frames: c.frames,
                n_correct: c.correct,
                n_erasure: c.erasure,
                n_undetected: c.undetected,
                tep: errors as f64 / c.frames as f64,
                uep: c.undetected as f64 / c.frames as f64,
                tep_ci95: wilson_half_width(errors, c.frames),
                uep_ci95: wilson_half_width(c.undetected, c.frames),
                seed: config.master_seed,
                wall_time_s,
            }
        })
        .collect())
}

/// Simulates one (point, threshold) pair. `point` indexes `config.points`.
///
/// The frames of a point are shared by every threshold, and each threshold
/// stops on its own, so the record equals the one [`run_sweep`] produces for
/// the same pair.
pub fn run_point(config: &SimConfig, point: usize, threshold: Threshold) -> Result<SimRecord> {
    config.validate()?;
    if point >= config.points.len() {
        return invalid(format!("point index {point} out of range"));
    }
    let pool = config.pool()?;
    Ok(simulate_point(config, point, &[threshold], &pool)?.remove(0))
}

/// Simulates every point against every threshold, passing each record to
/// `sink` as soon as its point finishes.
pub fn run_sweep(config: &SimConfig, mut sink: impl FnMut(&SimRecord) -> Result<()>) -> Result<Vec<SimRecord>> {
    config.validate()?;
    let mut records = Vec::with_capacity(config.points.len() * config.thresholds.len());
    if config.thresholds.is_empty() {
        return Ok(records);
    }
    let pool = config.pool()?;
    for point in 0..config.points.len() {
        for record in simulate_point(config, point, &config.thresholds, &pool)? {
            sink(&record)?;
            records.push(record);
        }
    }
    Ok(records)
}

/// Block error rate of plain SCL decoding (no threshold test).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlerRecord {
    pub point: f64,
    pub list_size: usize,
    pub frames: u64,
    pub errors: u64,
    pub bler: f64,
    pub ci95: f64,
}

/// Runs plain SCL at one point with the given list size, under the same
/// frame streams and stopping rule (on block errors) as the GSCL sweep.
pub fn run_scl_reference(config: &SimConfig, point: usize, list_size: usize) -> Result<BlerRecord> {
    config.validate()?;
    let channel = config.channel_at(point)?;
    let pool = config.pool()?;
    let decoder = SclDecoder::new(&config.code, list_size)?;
    let (mut frames, mut errors) = (0u64, 0u64);
    while frames < config.max_frames && errors < config.min_error_events {
        let end = (frames + BATCH_FRAMES).min(config.max_frames);
        let wrong: Vec<bool> = pool.install(|| {
            (frames..end)
                .into_par_iter()
                .map_init(
                    || decoder.clone(),
                    |dec, index| -> Result<bool> {
                        let frame = draw_frame(config, &channel, point, index)?;
                        let out = dec.decode(&frame.channel_out)?;
                        let mut x = out.paths[out.best].decisions.clone();
                        polar_transform_in_place(&mut x);
                        Ok(x != frame.codeword)
                    },
                )
                .collect::<Result<Vec<bool>>>()
        })?;
        errors += wrong.iter().filter(|w| **w).count() as u64;
        frames = end;
    }
    Ok(BlerRecord {
        point: config.points[point],
        list_size,
        frames,
        errors,
        bler: errors as f64 / frames as f64,
        ci95: wilson_half_width(errors, frames),
    })
}

pub fn write_csv<W: Write>(mut out: W, records: &[SimRecord]) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Metadata written next to the CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimMetadata {
    pub config: SimConfig,
    pub records: Vec<SimRecord>,
}

/// A gnuplot script drawing TEP (solid) and UEP (dashed) per threshold.
pub fn gnuplot_script(csv_path: &str, config: &SimConfig) -> String {
    let xlabel = match config.channel {
        ChannelKind::Biawgn => "E_b/N_0 [dB]",
        ChannelKind::Bec => "erasure probability",
    };
    let mut s = String::new();
    s.push_str("set datafile separator ','\nset logscale y\nset grid\nset key outside right\n");
    s.push_str(&format!("set xlabel '{xlabel}'\nset ylabel 'error probability'\n"));
    s.push_str(&format!(
        "set title '({},{}) polar code, L = {}'\n",
        config.code.n(),
        config.code.k(),
        config.list_size().unwrap_or(0)
    ));
    let mut plots = Vec::new();
    for (i, t) in config.thresholds.iter().enumerate() {
        let filter = format!("(strcol(7) eq '{t}' ? $6 : 1/0)");
        plots.push(format!(
            "'{csv_path}' every ::1 using {filter}:12 with linespoints dt 1 lc {} title 'TEP T={t}'",
            i + 1
        ));
        plots.push(format!(
            "'{csv_path}' every ::1 using {filter}:13 with linespoints dt 2 lc {} title 'UEP T={t}'",
            i + 1
        ));
    }
    s.push_str("plot ");
    s.push_str(&plots.join(", \\\n     "));
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> SimConfig {
        SimConfig {
            code: PolarCode::new(16, [1, 2, 3, 4, 5, 6, 9]).unwrap(),
            channel: ChannelKind::Biawgn,
            points: vec![1.0, 3.0],
            thresholds: vec![Threshold::NEG_INFINITY, Threshold::new(0.0).unwrap(), Threshold::new(0.1).unwrap()],
            max_frames: 2000,
            min_error_events: 20,
            master_seed: 77,
            workers: 1,
            info_source: InfoSource::Random,
            list_size: None,
        }
    }

    #[test]
    fn wilson_examples() {
        let (lo, hi) = wilson_interval(0, 100);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.03 && hi < 0.04);
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo + hi - 1.0).abs() < 1e-12);
        assert!(wilson_half_width(10, 1000) < wilson_half_width(10, 100));
    }

    #[test]
    fn sweep_shape_and_invariants() {
        let config = small_config();
        let records = run_sweep(&config, |_| Ok(())).unwrap();
        assert_eq!(records.len(), 6);
        for r in &records {
            assert_eq!(r.n_correct + r.n_erasure + r.n_undetected, r.frames);
            assert!(r.uep <= r.tep);
            assert!(r.frames <= config.max_frames);
            if r.threshold.is_neg_infinity() {
                assert_eq!(r.n_erasure, 0);
                assert_eq!(r.tep, r.uep);
            }
        }
        let mut empty = config.clone();
        empty.thresholds.clear();
        assert!(run_sweep(&empty, |_| Ok(())).unwrap().is_empty());
    }

    #[test]
    fn point_matches_sweep_record() {
        let config = small_config();
        let sweep = run_sweep(&config, |_| Ok(())).unwrap();
        let single = run_point(&config, 1, config.thresholds[2]).unwrap();
        let same = &sweep[5];
        assert_eq!((single.frames, single.n_correct, single.n_erasure), (same.frames, same.n_correct, same.n_erasure));
    }

    #[test]
    fn high_snr_is_error_free() {
        let mut config = small_config();
        config.points = vec![20.0];
        config.max_frames = 500;
        let r = run_point(&config, 0, Threshold::new(0.05).unwrap()).unwrap();
        assert_eq!(r.n_correct, r.frames);
    }

    #[test]
    fn counts_do_not_depend_on_workers() {
        let mut config = small_config();
        config.max_frames = 700;
        let one = run_sweep(&config, |_| Ok(())).unwrap();
        config.workers = 3;
        let three = run_sweep(&config, |_| Ok(())).unwrap();
        let rows = |rs: &[SimRecord]| rs.iter().map(SimRecord::csv_row).collect::<Vec<_>>();
        assert_eq!(rows(&one), rows(&three));
    }

    #[test]
    fn bec_channel_runs() {
        let mut config = small_config();
        config.channel = ChannelKind::Bec;
        config.points = vec![0.3];
        let r = run_point(&config, 0, Threshold::NEG_INFINITY).unwrap();
        assert_eq!(r.frames, r.n_correct + r.n_undetected);
        config.points = vec![1.5];
        assert!(run_point(&config, 0, Threshold::NEG_INFINITY).is_err());
    }

    #[test]
    fn invalid_configs() {
        let mut config = small_config();
        config.max_frames = 0;
        assert!(config.validate().is_err());
        let mut config = small_config();
        config.workers = 0;
        assert!(config.validate().is_err());
        let mut config = small_config();
        config.list_size = Some(1);
        assert!(run_point(&config, 0, Threshold::NEG_INFINITY).is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let config = small_config();
        let text = serde_json::to_string(&config).unwrap();
        let back: SimConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, config);
    }

    #[test]
    fn csv_and_plot_shapes() {
        let config = small_config();
        let records = run_sweep(&config, |_| Ok(())).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &records).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 16);
        assert_eq!(first[6], "-inf");
        let script = gnuplot_script("out.csv", &config);
        assert!(script.contains("dt 1") && script.contains("dt 2"));
    }
}
