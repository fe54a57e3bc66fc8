//! Randomized equivalence suite between the decoders and the brute-force
//! oracles, run by `polar-gscl oracle-check`.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt;

use crate::channels::{bec_observe, biawgn_observe, ChannelObservation};
use crate::decode::gscl::output_logprob_from_metrics;
use crate::decode::kernels::log_sum_exp;
use crate::decode::{
    path_metric_from_scratch, CodebookOracle, ForneyMode, ForneyOracleOutcome, GsclDecoder, Threshold,
};
use crate::error::{invalid, Result};
use crate::polar::{partition_subset, valid_prefixes, PolarCode};
use crate::sim::frame_stream;

const LN_2: f64 = std::f64::consts::LN_2;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheckConfig {
    pub lengths: Vec<usize>,
    pub codes_per_length: usize,
    /// Observations per code and channel.
    pub trials: usize,
    pub seed: u64,
    pub max_k: usize,
    pub max_gamma: usize,
    /// Largest `k` for which the full-codebook list (`L = 2^k`) is decoded.
    pub full_list_max_k: usize,
    /// Adds this offset to the metric of the first path at `u_s` before use.
    /// Negative control only.
    pub corrupt_pm: f64,
}

impl Default for OracleCheckConfig {
    fn default() -> Self {
        Self {
            lengths: vec![4, 8, 16],
            codes_per_length: 20,
            trials: 1000,
            seed: 1,
            max_k: 12,
            max_gamma: 6,
            full_list_max_k: 8,
            corrupt_pm: 0.0,
        }
    }
}

impl OracleCheckConfig {
    /// The default suite over every power of two from 4 up to `n_max`.
    pub fn up_to(n_max: usize) -> Result<Self> {
        if !(4..=16).contains(&n_max) || !n_max.is_power_of_two() {
            return invalid(format!("n_max must be 4, 8 or 16, got {n_max}"));
        }
        let lengths = (2..=n_max.trailing_zeros()).map(|m| 1usize << m).collect();
        Ok(Self { lengths, ..Self::default() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    /// Output density from the list at `u_s` against codebook enumeration.
    OutputDistribution,
    /// Each path at `u_s` against the sum over its partition block.
    CosetIdentity,
    /// SCL with `L = 2^γ` on the BEC against exhaustive ML likelihood.
    BecMl,
    /// SCL with `L = 2^k` against exhaustive ML on the biAWGN channel.
    FullListMl,
    /// GSCL with `L = 2^k` against the oracle threshold test on the ML word.
    Forney,
    /// Incremental path metrics against from-scratch replay.
    PmReplay,
    /// The excluded-sum and Bayesian forms of the test agree.
    ForneyForms,
}

impl CheckKind {
    pub const ALL: [CheckKind; 7] = [
        CheckKind::OutputDistribution,
        CheckKind::CosetIdentity,
        CheckKind::BecMl,
        CheckKind::FullListMl,
        CheckKind::Forney,
        CheckKind::PmReplay,
        CheckKind::ForneyForms,
    ];

    pub fn tolerance(self) -> f64 {
        match self {
            CheckKind::OutputDistribution | CheckKind::CosetIdentity | CheckKind::BecMl => 1e-9,
            CheckKind::PmReplay => 1e-10,
            CheckKind::FullListMl | CheckKind::Forney | CheckKind::ForneyForms => 0.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::OutputDistribution => "output-distribution",
            CheckKind::CosetIdentity => "coset-identity",
            CheckKind::BecMl => "bec-ml",
            CheckKind::FullListMl => "full-list-ml",
            CheckKind::Forney => "forney",
            CheckKind::PmReplay => "pm-replay",
            CheckKind::ForneyForms => "forney-forms",
        }
    }
}

/// Where a check first failed; enough to replay the trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureSite {
    pub n: usize,
    pub frozen: Vec<usize>,
    pub seed: u64,
    pub code_index: usize,
    pub trial: usize,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckStat {
    pub kind: CheckKind,
    pub evaluated: u64,
    pub failures: u64,
    /// Comparisons skipped because the test statistic sat within 1e-9 of
    /// the threshold.
    pub near_margin: u64,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub first_failure: Option<FailureSite>,
}

impl CheckStat {
    fn new(kind: CheckKind) -> Self {
        Self {
            kind,
            evaluated: 0,
            failures: 0,
            near_margin: 0,
            max_deviation: 0.0,
            tolerance: kind.tolerance(),
            first_failure: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheckReport {
    pub codes: usize,
    pub checks: Vec<CheckStat>,
}

impl OracleCheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckStat::passed)
    }

    pub fn stat(&self, kind: CheckKind) -> &CheckStat {
        self.checks.iter().find(|c| c.kind == kind).expect("every kind is tracked")
    }

    pub fn first_failure(&self) -> Option<(&CheckStat, &FailureSite)> {
        self.checks.iter().find_map(|c| c.first_failure.as_ref().map(|f| (c, f)))
    }
}

impl fmt::Display for OracleCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} codes", self.codes)?;
        for c in &self.checks {
            writeln!(
                f,
                "{:<20} {:>9} evaluated {:>6} failed {:>4} near margin  max deviation {:.3e} (tol {:.0e})",
                c.kind.name(),
                c.evaluated,
                c.failures,
                c.near_margin,
                c.max_deviation,
                c.tolerance
            )?;
        }
        Ok(())
    }
}

/// A random code of length `n` with `k ≤ max_k` and mixing factor at most
/// `max_gamma`.
pub fn random_code<R: Rng + ?Sized>(n: usize, max_k: usize, max_gamma: usize, rng: &mut R) -> Result<PolarCode> {
    let k = rng.random_range(0..=max_k.min(n));
    loop {
        let frozen: Vec<usize> = sample(rng, n, n - k).into_iter().map(|i| i + 1).collect();
        let code = PolarCode::new(n, frozen)?;
        if code.mixing_factor() <= max_gamma {
            return Ok(code);
        }
    }
}

struct Tracker<'a> {
    stats: Vec<CheckStat>,
    site: (&'a PolarCode, u64, usize, usize),
}

impl Tracker<'_> {
    fn stat(&mut self, kind: CheckKind) -> &mut CheckStat {
        let i = CheckKind::ALL.iter().position(|k| *k == kind).expect("known kind");
        &mut self.stats[i]
    }

    fn site(&self, deviation: f64) -> FailureSite {
        let (code, seed, code_index, trial) = self.site;
        FailureSite { n: code.n(), frozen: code.frozen().to_vec(), seed, code_index, trial, deviation }
    }

    /// Records a numerical comparison. NaN counts as a failure.
    fn deviation(&mut self, kind: CheckKind, deviation: f64) {
        let site = self.site(deviation);
        let s = self.stat(kind);
        s.evaluated += 1;
        let bad = deviation.is_nan() || deviation > s.tolerance;
        if deviation > s.max_deviation || deviation.is_nan() {
            s.max_deviation = deviation;
        }
        if bad {
            s.failures += 1;
            s.first_failure.get_or_insert(site);
        }
    }

    fn agreement(&mut self, kind: CheckKind, agree: bool) {
        self.deviation(kind, if agree { 0.0 } else { 1.0 });
    }

    fn near_margin(&mut self, kind: CheckKind) {
        self.stat(kind).near_margin += 1;
    }
}

fn rel_or_abs(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs()
    }
}

const MARGIN: f64 = 1e-9;

/// Runs every check of `config`. Never stops early: the report carries the
/// first failure of each check.
pub fn run_oracle_check(config: &OracleCheckConfig) -> Result<OracleCheckReport> {
    let mut stats: Vec<CheckStat> = CheckKind::ALL.iter().map(|&k| CheckStat::new(k)).collect();
    let mut codes = 0;
    if config.trials == 0 {
        return Ok(OracleCheckReport { codes, checks: stats });
    }
    for &n in &config.lengths {
        if !n.is_power_of_two() || n > 16 {
            return invalid(format!("oracle lengths must be powers of two up to 16, got {n}"));
        }
        for code_index in 0..config.codes_per_length {
            let code_id = ((n as u64) << 32) | code_index as u64;
            let mut code_rng = frame_stream(config.seed, code_id, u64::MAX);
            let code = random_code(n, config.max_k, config.max_gamma, &mut code_rng)?;
            codes += 1;
            let oracle = CodebookOracle::new(&code)?;
            let blocks: Vec<(Vec<u8>, Vec<Vec<u8>>)> = valid_prefixes(&code)?
                .into_iter()
                .map(|p| partition_subset(&code, &p).map(|words| (p, words)))
                .collect::<Result<_>>()?;
            let mut gscl = GsclDecoder::new(&code)?;
            let full = (code.k() <= config.full_list_max_k)
                .then(|| GsclDecoder::with_list_size(&code, 1 << code.k()))
                .transpose()?;
            let mut tracker = Tracker { stats, site: (&code, config.seed, code_index, 0) };
            let mut full = full;
            for trial in 0..config.trials {
                tracker.site.3 = trial;
                let mut rng: ChaCha8Rng = frame_stream(config.seed, code_id, trial as u64);
                let info: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2)).collect();
                let x = crate::polar::encode(&info, &code)?;
                let sigma = rng.random_range(0.3..1.5);
                let obs = biawgn_observe(&x, sigma, &mut rng)?;
                check_list_at_s(&mut tracker, &mut gscl, &oracle, &blocks, &code, &obs, config.corrupt_pm)?;
                if let Some(dec) = full.as_mut() {
                    let t = if rng.random_bool(0.1) {
                        Threshold::NEG_INFINITY
                    } else {
                        Threshold::new(rng.random_range(-0.3..0.5))?
                    };
                    check_full_list(&mut tracker, dec, &oracle, &obs, t)?;
                }
                let eps = rng.random_range(0.05..0.8);
                let bec = bec_observe(&x, eps, &mut rng)?;
                let out = gscl.decode_metrics(&bec)?;
                let ml = oracle.ml(&bec);
                tracker.deviation(CheckKind::BecMl, rel_or_abs(out.log_w_best, bec.log_likelihood(&ml)));
            }
            stats = tracker.stats;
        }
    }
    Ok(OracleCheckReport { codes, checks: stats })
}

fn check_list_at_s(
    tracker: &mut Tracker<'_>,
    gscl: &mut GsclDecoder,
    oracle: &CodebookOracle,
    blocks: &[(Vec<u8>, Vec<Vec<u8>>)],
    code: &PolarCode,
    obs: &ChannelObservation,
    corrupt_pm: f64,
) -> Result<()> {
    let out = gscl.decode_with_dump(obs, Threshold::NEG_INFINITY)?;
    let mut dump = out.list_dump.unwrap_or_default();
    if let Some(first) = dump.first_mut() {
        first.pm += corrupt_pm;
    }
    let pms: Vec<f64> = dump.iter().map(|p| p.pm).collect();
    let log_p_y = output_logprob_from_metrics(&pms, obs, code);
    tracker.deviation(CheckKind::OutputDistribution, rel_or_abs(log_p_y, oracle.output_dist(obs)));

    let n = code.n() as f64;
    let mut coset = if dump.len() == blocks.len() { 0.0 } else { f64::INFINITY };
    for path in &dump {
        let Some((_, words)) = blocks.iter().find(|(p, _)| *p == path.decisions) else {
            coset = f64::INFINITY;
            continue;
        };
        let exact = log_sum_exp(&words.iter().map(|w| obs.log_likelihood(w)).collect::<Vec<_>>());
        let from_pm = n * LN_2 + obs.evidence_log() - path.pm;
        coset = f64::max(coset, rel_or_abs(exact, from_pm));
        let replay = path_metric_from_scratch(obs.llrs(), &path.decisions)?;
        tracker.deviation(CheckKind::PmReplay, rel_or_abs(replay, path.pm));
    }
    tracker.deviation(CheckKind::CosetIdentity, coset);
    Ok(())
}

fn check_full_list(
    tracker: &mut Tracker<'_>,
    dec: &mut GsclDecoder,
    oracle: &CodebookOracle,
    obs: &ChannelObservation,
    t: Threshold,
) -> Result<()> {
    let out = dec.decode(obs, t)?;
    let ForneyOracleOutcome::Unique { decision, accepted, sum_excluding_margin, bayes_margin } =
        oracle.forney(obs, t, ForneyMode::Remark1)
    else {
        unreachable!("remark1 mode yields a unique decision")
    };
    tracker.agreement(CheckKind::FullListMl, out.metrics.codeword == decision);
    let statistic = out.metrics.log_w_best - out.metrics.log_p_y - out.threshold_log;
    if statistic.abs() < MARGIN || bayes_margin.abs() < MARGIN {
        tracker.near_margin(CheckKind::Forney);
    } else {
        tracker.agreement(CheckKind::Forney, out.metrics.codeword == decision && out.accepted == accepted);
    }
    if sum_excluding_margin.abs() < MARGIN || bayes_margin.abs() < MARGIN {
        tracker.near_margin(CheckKind::ForneyForms);
    } else {
        tracker.agreement(CheckKind::ForneyForms, (sum_excluding_margin >= 0.0) == (bayes_margin >= 0.0));
    }
    Ok(())
}
