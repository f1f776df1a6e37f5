//! Monte-Carlo trials and power-allocation sweeps.
//!
//! Every trial draws from its own substream derived from `(seed, trial,
//! experiment)`, so a trial's randomness does not depend on which worker
//! runs it or in which order. The same trial index is reused at every
//! alpha (common random numbers), which makes neighbouring sweep points
//! directly comparable.
//!
//! Per-trial results are collected in trial order and reduced serially,
//! so sweep output is bit-identical for any worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{self, LedParams, PdParams, RoomGeometry, UserTerminal};
use crate::error::{Error, Result};
use crate::noma::{self, NomaLink, PowerAllocation, SicMode};
use crate::rlnc::{self, CodedPacket, Decoder, SourceFrame};

/// Field size of the coding alphabet.
const FIELD_SIZE: u64 = 256;

/// How link-level BER is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fidelity {
    /// Every bit is superposed, sent through AWGN and detected.
    BitExact,
    /// Bit error probabilities from the closed-form detector error rates;
    /// packet erasures and frame recovery from their exact distributions.
    SemiAnalytic,
}

/// SIC model applied to the rate experiment and the reported SINR columns.
/// Both bit-level SIC variants are always simulated for the BER columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SicKind {
    Perfect,
    Imperfect,
}

/// Inclusive alpha grid `start, start + step, ..., <= stop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaSweep {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl AlphaSweep {
    pub fn values(&self) -> Vec<f64> {
        if !(self.step > 0.0) || self.stop < self.start {
            return vec![self.start];
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }

    pub fn single(alpha: f64) -> Self {
        AlphaSweep {
            start: alpha,
            stop: alpha,
            step: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub geometry: RoomGeometry,
    pub led: LedParams,
    pub pd: PdParams,
    pub users_per_group: usize,
    /// Noise power spectral density (W/Hz).
    pub noise_psd: f64,
    /// Modulation bandwidth (Hz).
    pub bandwidth: f64,
    /// Source packets per RLNC frame (K).
    pub generation_size: usize,
    /// Payload bytes per packet (L).
    pub payload_len: usize,
    /// Coded packets sent per frame (N).
    pub coded_packets: usize,
    pub alpha: AlphaSweep,
    pub trials: usize,
    pub seed: u64,
    pub sic: SicKind,
    /// Residual weak-group power fraction after imperfect SIC (rate path).
    pub epsilon: f64,
    pub fidelity: Fidelity,
    /// Minimum per-group multicast throughput (bit/s/Hz).
    pub min_throughput: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            geometry: RoomGeometry::default(),
            led: LedParams::default(),
            pd: PdParams::default(),
            users_per_group: 5,
            noise_psd: 1e-21,
            bandwidth: 20e6,
            generation_size: rlnc::DEFAULT_GENERATION_SIZE,
            payload_len: rlnc::DEFAULT_PAYLOAD_LEN,
            coded_packets: 12,
            alpha: AlphaSweep {
                start: 0.05,
                stop: 0.45,
                step: 0.05,
            },
            trials: 1000,
            seed: 1,
            sic: SicKind::Imperfect,
            epsilon: 0.01,
            fidelity: Fidelity::SemiAnalytic,
            min_throughput: 0.5,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.led.validate()?;
        self.pd.validate()?;
        if self.users_per_group == 0 {
            return Err(Error::invalid("users_per_group", "must be at least 1"));
        }
        if !(self.noise_psd > 0.0) {
            return Err(Error::invalid("noise_psd", "must be positive"));
        }
        if !(self.bandwidth > 0.0) {
            return Err(Error::invalid("bandwidth_hz", "must be positive"));
        }
        if self.generation_size == 0 {
            return Err(Error::invalid("packets_per_frame", "K must be at least 1"));
        }
        if self.payload_len == 0 {
            return Err(Error::invalid("payload_bytes", "L must be at least 1"));
        }
        if self.coded_packets < self.generation_size {
            return Err(Error::invalid(
                "coded_packets",
                format!("N < K ({} < {})", self.coded_packets, self.generation_size),
            ));
        }
        if !(self.alpha.step > 0.0) {
            return Err(Error::invalid("alpha_step", "must be positive"));
        }
        if self.alpha.stop < self.alpha.start {
            return Err(Error::invalid("alpha_stop", "must not be below alpha_start"));
        }
        if !(self.alpha.start > 0.0 && self.alpha.start < 0.5) {
            return Err(Error::invalid("alpha_start", "alpha values must lie in (0, 0.5)"));
        }
        if self.alpha.values().iter().any(|a| !(*a > 0.0 && *a < 0.5)) {
            return Err(Error::invalid("alpha_stop", "alpha values must lie in (0, 0.5)"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::invalid("epsilon", "must lie in [0, 1]"));
        }
        if !(self.min_throughput >= 0.0) {
            return Err(Error::invalid("min_throughput", "must be non-negative"));
        }
        Ok(())
    }

    /// SIC model used by the rate experiment.
    pub fn rate_sic(&self) -> SicMode {
        match self.sic {
            SicKind::Perfect => SicMode::Perfect,
            SicKind::Imperfect => SicMode::Imperfect {
                residual: self.epsilon,
            },
        }
    }

    pub fn noise_std(&self) -> f64 {
        channel::noise_std(self.noise_psd, self.bandwidth)
    }

    pub fn snr(&self, gain: f64) -> f64 {
        channel::link_snr(gain, self.led.power_w, &self.pd, self.noise_psd, self.bandwidth)
    }

    /// Source bits per user per frame.
    pub fn frame_bits(&self) -> u64 {
        (self.generation_size * self.payload_len * 8) as u64
    }
}

/// Independent random streams per experiment kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Ber,
    Rate,
}

impl Experiment {
    fn tag(self) -> u64 {
        match self {
            Experiment::Ber => 0x4245_525f_5452_4941,
            Experiment::Rate => 0x5241_5445_5f54_5249,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Random stream for one trial of one experiment.
///
/// The 256-bit ChaCha key holds a 64-bit mix of the inputs followed by the
/// raw inputs themselves, so distinct `(seed, trial, experiment)` triples
/// never share a key.
pub fn substream(seed: u64, trial: u64, experiment: Experiment) -> ChaCha8Rng {
    let tag = experiment.tag();
    let mix = splitmix64(splitmix64(splitmix64(seed) ^ trial) ^ tag);
    let mut key = [0u8; 32];
    for (chunk, word) in key.chunks_exact_mut(8).zip([mix, seed, trial, tag]) {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Drop `2 * users_per_group` users and split them into (weak, strong).
pub fn drop_and_group<R: Rng + ?Sized>(
    rng: &mut R,
    config: &ScenarioConfig,
) -> Result<(Vec<UserTerminal>, Vec<UserTerminal>)> {
    let users = channel::drop_users(
        rng,
        2 * config.users_per_group,
        &config.geometry,
        &config.led,
        &config.pd,
    );
    channel::form_groups(&users, &config.geometry.led_position)
}

/// Outcome of one frame at one receiver.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrameOutcome {
    /// Raw detected-bit errors over the K uncoded source packets
    /// (expected count in semi-analytic mode).
    pub plain_errors: f64,
    /// Coded packets that arrived without a bit error (expected count in
    /// semi-analytic mode).
    pub surviving_packets: f64,
    /// Source packets recovered by the decoder (expected count in
    /// semi-analytic mode).
    pub recovered: f64,
    /// Source packets left unrecovered.
    pub unrecovered: f64,
}

impl FrameOutcome {
    /// Post-decoding error weight: every unrecovered bit counts one half.
    pub fn rlnc_error_weight(&self, payload_len: usize) -> f64 {
        self.unrecovered * (payload_len * 8) as f64 / 2.0
    }
}

/// Per-receiver result of one BER trial.
#[derive(Debug, Clone, PartialEq)]
pub struct UserBerOutcome {
    pub user: UserTerminal,
    pub perfect: FrameOutcome,
    /// Identical to `perfect` for weak users, who do not run SIC.
    pub imperfect: FrameOutcome,
}

/// Error tallies of one BER trial.
#[derive(Debug, Clone, PartialEq)]
pub struct BerTrial {
    pub users: Vec<UserBerOutcome>,
    /// Source bits across all receivers.
    pub source_bits: f64,
    pub plain_perfect: f64,
    pub plain_imperfect: f64,
    pub rlnc_perfect: f64,
    pub rlnc_imperfect: f64,
}

impl BerTrial {
    fn from_users(users: Vec<UserBerOutcome>, config: &ScenarioConfig) -> Self {
        let l = config.payload_len;
        let sum = |f: &dyn Fn(&UserBerOutcome) -> f64| users.iter().map(f).sum::<f64>();
        BerTrial {
            source_bits: (users.len() as u64 * config.frame_bits()) as f64,
            plain_perfect: sum(&|u| u.perfect.plain_errors),
            plain_imperfect: sum(&|u| u.imperfect.plain_errors),
            rlnc_perfect: sum(&|u| u.perfect.rlnc_error_weight(l)),
            rlnc_imperfect: sum(&|u| u.imperfect.rlnc_error_weight(l)),
            users,
        }
    }

    /// BERs in column order: plain perfect, plain imperfect, RLNC perfect,
    /// RLNC imperfect.
    pub fn bers(&self) -> [f64; 4] {
        [
            self.plain_perfect,
            self.plain_imperfect,
            self.rlnc_perfect,
            self.rlnc_imperfect,
        ]
        .map(|w| w / self.source_bits)
    }
}

/// One BER trial: a user drop, one frame per group, transmission of the
/// uncoded frame and of N coded packets per group.
pub fn run_trial_ber<R: Rng + ?Sized>(rng: &mut R, config: &ScenarioConfig, alpha: f64) -> Result<BerTrial> {
    let alloc = PowerAllocation::new(alpha, config.led.power_w)?;
    let (weak, strong) = drop_and_group(rng, config)?;
    let users = match config.fidelity {
        Fidelity::BitExact => bit_exact_trial(rng, config, &alloc, weak, strong)?,
        Fidelity::SemiAnalytic => semi_analytic_trial(config, &alloc, weak, strong),
    };
    Ok(BerTrial::from_users(users, config))
}

/// Probability that a frame of `k` packets is decoded when each of `n` coded
/// packets is independently erased with probability `erasure`.
pub fn frame_recovery_probability(k: usize, n: usize, erasure: f64) -> f64 {
    let survive = 1.0 - erasure;
    (k..=n)
        .map(|m| {
            binomial_pmf(n, m, survive) * rlnc::full_rank_probability(k, m, FIELD_SIZE).unwrap_or(0.0)
        })
        .sum()
}

fn binomial_pmf(n: usize, k: usize, p: f64) -> f64 {
    let mut coeff = 1.0;
    for i in 0..k {
        coeff = coeff * (n - i) as f64 / (i + 1) as f64;
    }
    coeff * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

/// `1 - (1 - ber)^bits`, accurate for tiny `ber`.
pub fn packet_erasure_probability(ber: f64, bits: usize) -> f64 {
    if ber >= 1.0 {
        return 1.0;
    }
    -f64::exp_m1(bits as f64 * f64::ln_1p(-ber))
}

fn analytic_outcome(ber: f64, config: &ScenarioConfig) -> FrameOutcome {
    let (k, n) = (config.generation_size, config.coded_packets);
    let erasure = packet_erasure_probability(ber, config.payload_len * 8);
    let p_rec = frame_recovery_probability(k, n, erasure);
    FrameOutcome {
        plain_errors: ber * config.frame_bits() as f64,
        surviving_packets: n as f64 * (1.0 - erasure),
        recovered: p_rec * k as f64,
        unrecovered: (1.0 - p_rec) * k as f64,
    }
}

fn semi_analytic_trial(
    config: &ScenarioConfig,
    alloc: &PowerAllocation,
    weak: Vec<UserTerminal>,
    strong: Vec<UserTerminal>,
) -> Vec<UserBerOutcome> {
    let sigma = config.noise_std();
    let link = |u: &UserTerminal, sic| NomaLink::new(u.gain, alloc, &config.pd, sigma, sic);
    let imperfect = SicMode::Imperfect {
        residual: config.epsilon,
    };
    let mut out = Vec::with_capacity(weak.len() + strong.len());
    for user in weak {
        let o = analytic_outcome(noma::ber_weak_analytic(&link(&user, SicMode::Perfect)), config);
        out.push(UserBerOutcome {
            user,
            perfect: o,
            imperfect: o,
        });
    }
    for user in strong {
        let perfect = analytic_outcome(noma::ber_strong_perfect_analytic(&link(&user, SicMode::Perfect)), config);
        let imperfect = analytic_outcome(noma::ber_strong_imperfect_analytic(&link(&user, imperfect)), config);
        out.push(UserBerOutcome {
            user,
            perfect,
            imperfect,
        });
    }
    out
}

// Receiver-side state for one user in a bit-exact trial.
struct Receiver {
    // R h: optical amplitude to electrical signal
    scale: f64,
    link: NomaLink,
    perfect: NomaLink,
    strong: bool,
    plain_errors: [u64; 2],
    decoders: [Decoder; 2],
    survived: [usize; 2],
    rx: [Vec<u8>; 2],
}

fn bit_exact_trial<R: Rng + ?Sized>(
    rng: &mut R,
    config: &ScenarioConfig,
    alloc: &PowerAllocation,
    weak: Vec<UserTerminal>,
    strong: Vec<UserTerminal>,
) -> Result<Vec<UserBerOutcome>> {
    let (k, l) = (config.generation_size, config.payload_len);
    let sigma = config.noise_std();
    let frame1 = rlnc::make_random_frame(rng, k, l)?;
    let frame2 = rlnc::make_random_frame(rng, k, l)?;

    let users: Vec<UserTerminal> = weak.into_iter().chain(strong).collect();
    let mut receivers = users
        .iter()
        .map(|u| {
            let link = NomaLink::new(
                u.gain,
                alloc,
                &config.pd,
                sigma,
                SicMode::Imperfect {
                    residual: config.epsilon,
                },
            );
            Ok(Receiver {
                scale: config.pd.responsivity * u.gain,
                link,
                perfect: NomaLink {
                    sic: SicMode::Perfect,
                    ..link
                },
                strong: u.group == Some(channel::UserGroup::Strong),
                plain_errors: [0; 2],
                decoders: [Decoder::new(k, l)?, Decoder::new(k, l)?],
                survived: [0; 2],
                rx: [vec![0u8; l], vec![0u8; l]],
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // Uncoded frames: raw detected-bit errors.
    for i in 0..k {
        transmit(rng, alloc, frame1.packet(i), frame2.packet(i), &mut receivers);
        for r in receivers.iter_mut() {
            let sent = if r.strong { frame2.packet(i) } else { frame1.packet(i) };
            for mode in 0..2 {
                r.plain_errors[mode] += bit_errors(&r.rx[mode], sent);
            }
        }
    }

    // Coded frames: error-free packets reach the decoder, others are erased.
    for _ in 0..config.coded_packets {
        let p1 = rlnc::encode(&frame1, &rlnc::draw_coefficients(rng, k))?;
        let p2 = rlnc::encode(&frame2, &rlnc::draw_coefficients(rng, k))?;
        transmit(rng, alloc, &p1.payload, &p2.payload, &mut receivers);
        for r in receivers.iter_mut() {
            let sent = if r.strong { &p2 } else { &p1 };
            for mode in 0..2 {
                if r.rx[mode] == sent.payload {
                    let received = CodedPacket {
                        coeffs: sent.coeffs.clone(),
                        payload: r.rx[mode].clone(),
                    };
                    r.decoders[mode].receive(&received)?;
                    r.survived[mode] += 1;
                }
            }
        }
    }

    Ok(users
        .into_iter()
        .zip(receivers)
        .map(|(user, r)| {
            let frame = if r.strong { &frame2 } else { &frame1 };
            let [perfect, imperfect] = [0, 1].map(|mode| FrameOutcome {
                plain_errors: r.plain_errors[mode] as f64,
                surviving_packets: r.survived[mode] as f64,
                recovered: verified_recoveries(&r.decoders[mode], frame) as f64,
                unrecovered: (k - verified_recoveries(&r.decoders[mode], frame)) as f64,
            });
            UserBerOutcome {
                user,
                perfect,
                imperfect,
            }
        })
        .collect())
}

// Recovered packets that match the source exactly. Erasure of every packet
// with a bit error means a mismatch is impossible; anything that did not
// match would be counted as unrecovered.
fn verified_recoveries(decoder: &Decoder, frame: &SourceFrame) -> usize {
    decoder
        .recover()
        .iter()
        .filter(|(i, payload)| payload.as_slice() == frame.packet(*i))
        .count()
}

fn bit_errors(a: &[u8], b: &[u8]) -> u64 {
    a.iter().zip(b).map(|(x, y)| u64::from((x ^ y).count_ones())).sum()
}

/// Superpose two byte streams bit by bit (MSB first) and detect them at
/// every receiver. Weak receivers write the group-1 estimate into both
/// `rx` slots; strong receivers write the perfect-SIC estimate into slot 0
/// and the detect-and-subtract estimate into slot 1, from the same sample.
fn transmit<R: Rng + ?Sized>(
    rng: &mut R,
    alloc: &PowerAllocation,
    stream1: &[u8],
    stream2: &[u8],
    receivers: &mut [Receiver],
) {
    use rand_distr::StandardNormal;

    for (j, (&byte1, &byte2)) in stream1.iter().zip(stream2).enumerate() {
        for r in receivers.iter_mut() {
            r.rx[0][j] = 0;
            r.rx[1][j] = 0;
        }
        for bit in (0..8).rev() {
            let b1 = (byte1 >> bit) & 1 == 1;
            let b2 = (byte2 >> bit) & 1 == 1;
            let x = noma::superpose(b1, b2, alloc);
            for r in receivers.iter_mut() {
                let n: f64 = rng.sample(StandardNormal);
                let y = r.scale * x + r.link.sigma * n;
                let (perfect, imperfect) = if r.strong {
                    (
                        noma::sic_detect_strong(y, &r.perfect, b1).1,
                        noma::sic_detect_strong(y, &r.link, b1).1,
                    )
                } else {
                    let b = noma::detect_weak(y, &r.link);
                    (b, b)
                };
                r.rx[0][j] |= u8::from(perfect) << bit;
                r.rx[1][j] |= u8::from(imperfect) << bit;
            }
        }
    }
}

/// Rate metrics of one user drop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateTrial {
    pub group1_rate: f64,
    pub group2_rate: f64,
    pub noma_sum: f64,
    pub oma_sum: f64,
    pub feasible: bool,
    /// Mean linear SINR over each group's members.
    pub mean_sinr_g1: f64,
    pub mean_sinr_g2: f64,
}

/// Multicast NOMA/OMA rates for given per-member full-power SNRs.
pub fn rate_metrics(alpha: f64, snr_g1: &[f64], snr_g2: &[f64], residual: f64, r_min: f64) -> Result<RateTrial> {
    let sinr1: Vec<f64> = snr_g1.iter().map(|&g| noma::sinr_group1(alpha, g)).collect();
    let sinr2: Vec<f64> = snr_g2.iter().map(|&g| noma::sinr_group2(alpha, g, residual)).collect();
    let rates = |s: &[f64]| s.iter().map(|&x| noma::rate_noma(x)).collect::<Vec<_>>();
    let oma = |g: &[f64]| g.iter().map(|&x| noma::rate_oma(x)).collect::<Vec<_>>();
    let group1_rate = noma::multicast_group_rate(&rates(&sinr1))?;
    let group2_rate = noma::multicast_group_rate(&rates(&sinr2))?;
    let oma_sum = noma::multicast_group_rate(&oma(snr_g1))? + noma::multicast_group_rate(&oma(snr_g2))?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(RateTrial {
        group1_rate,
        group2_rate,
        noma_sum: group1_rate + group2_rate,
        oma_sum,
        feasible: group1_rate >= r_min && group2_rate >= r_min,
        mean_sinr_g1: mean(&sinr1),
        mean_sinr_g2: mean(&sinr2),
    })
}

/// One rate trial: a user drop and the resulting multicast rates.
pub fn run_trial_rate<R: Rng + ?Sized>(rng: &mut R, config: &ScenarioConfig, alpha: f64) -> Result<RateTrial> {
    let (weak, strong) = drop_and_group(rng, config)?;
    let snr = |g: &[UserTerminal]| g.iter().map(|u| config.snr(u.gain)).collect::<Vec<_>>();
    rate_metrics(
        alpha,
        &snr(&weak),
        &snr(&strong),
        config.rate_sic().residual(),
        config.min_throughput,
    )
}

/// Aggregated metrics at one alpha. Columns not computed by the requested
/// experiments are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub ber_noma_perfect: f64,
    pub ber_noma_imperfect: f64,
    pub ber_rlnc_perfect: f64,
    pub ber_rlnc_imperfect: f64,
    /// 95% CI half-widths of the four BER columns, same order. NaN when
    /// `trials == 1`.
    pub ci_ber: [f64; 4],
    pub rate_noma_sum: f64,
    pub rate_oma_sum: f64,
    pub ci_rate_noma: f64,
    pub ci_rate_oma: f64,
    pub sinr_g1_db: f64,
    pub sinr_g2_db: f64,
    /// Both ergodic group rates meet the minimum throughput.
    pub feasible: bool,
    /// Share of drops in which both group rates met the minimum throughput.
    pub feasible_fraction: f64,
    pub trials: usize,
}

impl SweepRow {
    pub fn bers(&self) -> [f64; 4] {
        [
            self.ber_noma_perfect,
            self.ber_noma_imperfect,
            self.ber_rlnc_perfect,
            self.ber_rlnc_imperfect,
        ]
    }
}

/// Mean and 95% CI half-width `1.96 s / sqrt(n)`; NaN half-width for n = 1.
pub fn mean_ci(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, f64::NAN);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, 1.96 * var.sqrt() / (n as f64).sqrt())
}

/// Which experiments a sweep runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Experiments {
    pub ber: bool,
    pub rate: bool,
}

impl Experiments {
    pub const ALL: Experiments = Experiments { ber: true, rate: true };
    pub const RATE_ONLY: Experiments = Experiments { ber: false, rate: true };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepOptions {
    pub experiments: Experiments,
    /// Worker threads; 0 uses rayon's default.
    pub workers: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            experiments: Experiments::ALL,
            workers: 0,
        }
    }
}

/// Run every experiment at every alpha of the configured sweep.
pub fn run_sweep(config: &ScenarioConfig) -> Result<Vec<SweepRow>> {
    run_sweep_with(config, &SweepOptions::default(), |_| {})
}

/// Like [`run_sweep`], calling `on_row` as each alpha point completes.
pub fn run_sweep_with(
    config: &ScenarioConfig,
    options: &SweepOptions,
    mut on_row: impl FnMut(&SweepRow),
) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers)
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))?;
    let mut rows = Vec::new();
    for alpha in config.alpha.values() {
        let row = pool.install(|| sweep_point(config, options.experiments, alpha))?;
        on_row(&row);
        rows.push(row);
    }
    Ok(rows)
}

/// Aggregate `config.trials` trials at a single alpha.
pub fn sweep_point(config: &ScenarioConfig, experiments: Experiments, alpha: f64) -> Result<SweepRow> {
    let trials = config.trials as u64;
    let ber: Vec<[f64; 4]> = if experiments.ber {
        (0..trials)
            .into_par_iter()
            .map(|t| run_trial_ber(&mut substream(config.seed, t, Experiment::Ber), config, alpha).map(|b| b.bers()))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let rate: Vec<RateTrial> = if experiments.rate {
        (0..trials)
            .into_par_iter()
            .map(|t| run_trial_rate(&mut substream(config.seed, t, Experiment::Rate), config, alpha))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let column = |i: usize| mean_ci(&ber.iter().map(|b| b[i]).collect::<Vec<_>>());
    let [c0, c1, c2, c3] = [0, 1, 2, 3].map(column);
    let (rate_noma_sum, ci_rate_noma) = mean_ci(&rate.iter().map(|r| r.noma_sum).collect::<Vec<_>>());
    let (rate_oma_sum, ci_rate_oma) = mean_ci(&rate.iter().map(|r| r.oma_sum).collect::<Vec<_>>());
    let (g1, _) = mean_ci(&rate.iter().map(|r| r.group1_rate).collect::<Vec<_>>());
    let (g2, _) = mean_ci(&rate.iter().map(|r| r.group2_rate).collect::<Vec<_>>());
    let (s1, _) = mean_ci(&rate.iter().map(|r| r.mean_sinr_g1).collect::<Vec<_>>());
    let (s2, _) = mean_ci(&rate.iter().map(|r| r.mean_sinr_g2).collect::<Vec<_>>());
    let feasible_fraction = if rate.is_empty() {
        f64::NAN
    } else {
        rate.iter().filter(|r| r.feasible).count() as f64 / rate.len() as f64
    };

    Ok(SweepRow {
        alpha,
        ber_noma_perfect: c0.0,
        ber_noma_imperfect: c1.0,
        ber_rlnc_perfect: c2.0,
        ber_rlnc_imperfect: c3.0,
        ci_ber: [c0.1, c1.1, c2.1, c3.1],
        rate_noma_sum,
        rate_oma_sum,
        ci_rate_noma,
        ci_rate_oma,
        sinr_g1_db: 10.0 * s1.log10(),
        sinr_g2_db: 10.0 * s2.log10(),
        feasible: g1 >= config.min_throughput && g2 >= config.min_throughput,
        feasible_fraction,
        trials: config.trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(fidelity: Fidelity) -> ScenarioConfig {
        ScenarioConfig {
            trials: 4,
            fidelity,
            payload_len: 16,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn default_config_is_valid() {
        let c = ScenarioConfig::default();
        c.validate().unwrap();
        let alphas = c.alpha.values();
        assert_eq!(alphas.len(), 9);
        assert!((alphas[0] - 0.05).abs() < 1e-12 && (alphas[8] - 0.45).abs() < 1e-12);
    }

    #[test]
    fn validation_names_the_key() {
        let bad = ScenarioConfig {
            coded_packets: 5,
            ..ScenarioConfig::default()
        };
        let err = bad.validate().unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { name: "coded_packets", .. }));
        assert!(err.to_string().contains("N < K"));

        let bad = ScenarioConfig {
            alpha: AlphaSweep { start: 0.1, stop: 0.5, step: 0.1 },
            ..ScenarioConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = ScenarioConfig { trials: 0, ..ScenarioConfig::default() };
        assert!(matches!(bad.validate(), Err(Error::InvalidParameter { name: "trials", .. })));
    }

    #[test]
    fn substreams() {
        let first = |mut r: ChaCha8Rng| (0..8).map(|_| r.gen::<u64>()).collect::<Vec<_>>();
        assert_eq!(first(substream(7, 3, Experiment::Ber)), first(substream(7, 3, Experiment::Ber)));
        let mut seen = std::collections::HashSet::new();
        for t in 0..100_000u64 {
            assert!(seen.insert(first(substream(7, t, Experiment::Ber))[0]));
        }
        for t in 0..1000u64 {
            assert_ne!(first(substream(7, t, Experiment::Ber)), first(substream(7, t, Experiment::Rate)));
        }
    }

    #[test]
    fn noiseless_channel_has_no_errors() {
        for fidelity in [Fidelity::BitExact, Fidelity::SemiAnalytic] {
            let c = ScenarioConfig {
                noise_psd: 1e-30,
                ..small(fidelity)
            };
            let t = run_trial_ber(&mut substream(1, 0, Experiment::Ber), &c, 0.25).unwrap();
            let [p, i, rp, ri] = t.bers();
            assert_eq!((p, i), (0.0, 0.0), "{fidelity:?}");
            // only a singular coefficient matrix can stop decoding
            let singular = 1.0 - rlnc::full_rank_probability(10, 12, 256).unwrap();
            assert!(singular < 1e-6);
            match fidelity {
                Fidelity::BitExact => assert_eq!((rp, ri), (0.0, 0.0)),
                Fidelity::SemiAnalytic => {
                    assert!((rp - 0.5 * singular).abs() < 1e-15);
                    assert!((ri - 0.5 * singular).abs() < 1e-15);
                }
            }
            for u in &t.users {
                assert!(u.perfect.recovered >= c.generation_size as f64 * (1.0 - singular));
                assert!(u.imperfect.recovered >= c.generation_size as f64 * (1.0 - singular));
            }
        }
    }

    #[test]
    fn bit_exact_conservation() {
        let c = ScenarioConfig {
            trials: 1,
            ..small(Fidelity::BitExact)
        };
        for t in 0..6 {
            for alpha in [0.1, 0.3, 0.45] {
                let trial = run_trial_ber(&mut substream(3, t, Experiment::Ber), &c, alpha).unwrap();
                for u in &trial.users {
                    for o in [u.perfect, u.imperfect] {
                        assert_eq!(o.recovered + o.unrecovered, c.generation_size as f64);
                        assert!(o.surviving_packets <= c.coded_packets as f64);
                        if o.surviving_packets < c.generation_size as f64 {
                            assert!(o.recovered < c.generation_size as f64);
                        }
                    }
                }
                for w in [trial.rlnc_perfect, trial.rlnc_imperfect] {
                    assert!(w <= trial.source_bits / 2.0);
                }
                let b = trial.bers();
                assert!(b.iter().all(|x| (0.0..=1.0).contains(x)));
            }
        }
    }

    #[test]
    fn erasure_free_frames_decode_when_n_equals_k() {
        // With no erasures, N = K packets decode unless the random matrix is
        // singular (probability ~ 1/255 per frame); RLNC then adds no error.
        let c = ScenarioConfig {
            noise_psd: 1e-30,
            coded_packets: 10,
            ..small(Fidelity::BitExact)
        };
        let mut failures = 0;
        for t in 0..50 {
            let trial = run_trial_ber(&mut substream(5, t, Experiment::Ber), &c, 0.2).unwrap();
            assert_eq!(trial.plain_perfect, 0.0);
            failures += trial.users.iter().filter(|u| u.perfect.unrecovered > 0.0).count();
        }
        assert!(failures <= 8, "{failures}");
    }

    #[test]
    fn packet_erasure_and_recovery() {
        assert_eq!(packet_erasure_probability(0.0, 1024), 0.0);
        assert_eq!(packet_erasure_probability(1.0, 1024), 1.0);
        assert!((packet_erasure_probability(1e-3, 8) - (1.0 - 0.999f64.powi(8))).abs() < 1e-15);
        assert!((packet_erasure_probability(1e-15, 1024) - 1.024e-12).abs() < 1e-20);

        let full = rlnc::full_rank_probability(10, 12, 256).unwrap();
        assert!((frame_recovery_probability(10, 12, 0.0) - full).abs() < 1e-15);
        assert_eq!(frame_recovery_probability(10, 12, 1.0), 0.0);
        // K = 1, N = 2: recovered iff some survivor has a nonzero coefficient
        let p: f64 = 0.3;
        let expect = 2.0 * p * (1.0 - p) * (255.0 / 256.0) + (1.0 - p).powi(2) * (1.0 - 1.0 / 65536.0);
        assert!((frame_recovery_probability(1, 2, p) - expect).abs() < 1e-15);
    }

    #[test]
    fn rate_examples() {
        let r = rate_metrics(0.2, &[100.0], &[100.0], 0.0, 0.5).unwrap();
        assert!((r.noma_sum - (13.8f64.log2() + 5f64.log2())).abs() < 1e-12);
        assert!((r.noma_sum - 6.109).abs() < 1e-3);
        assert!((r.oma_sum - 101f64.log2()).abs() < 1e-12);
        assert!((r.oma_sum - 6.658).abs() < 1e-3);
        assert!(r.feasible);
        assert!((r.group1_rate - 3.787).abs() < 1e-3 && (r.group2_rate - 2.322).abs() < 1e-3);

        let c = ScenarioConfig::default();
        let mut rng = substream(1, 0, Experiment::Rate);
        let (weak, _) = drop_and_group(&mut rng, &c).unwrap();
        let t = run_trial_rate(&mut substream(1, 0, Experiment::Rate), &c, 1e-6).unwrap();
        assert!(t.group2_rate < 1e-6);
        let g1 = weak.iter().map(|u| c.snr(u.gain)).fold(f64::MAX, f64::min);
        assert!((t.noma_sum - (1.0 + g1).log2()).abs() < 1e-4);
    }

    #[test]
    fn mean_ci_degenerate() {
        let (m, ci) = mean_ci(&[0.25]);
        assert_eq!(m, 0.25);
        assert!(ci.is_nan());
        let (m, ci) = mean_ci(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((ci - 1.96 * 2f64.sqrt() / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sweep_is_worker_count_independent() {
        let c = ScenarioConfig {
            trials: 6,
            payload_len: 8,
            alpha: AlphaSweep { start: 0.2, stop: 0.4, step: 0.1 },
            fidelity: Fidelity::BitExact,
            ..ScenarioConfig::default()
        };
        let run = |workers| {
            run_sweep_with(&c, &SweepOptions { workers, ..SweepOptions::default() }, |_| {}).unwrap()
        };
        let serial = run(1);
        let parallel = run(4);
        assert_eq!(serial.len(), 3);
        for (a, b) in serial.iter().zip(&parallel) {
            assert_eq!(format!("{a:?}"), format!("{b:?}"));
        }
    }

    #[test]
    fn single_trial_ci_is_nan() {
        let c = ScenarioConfig {
            trials: 1,
            alpha: AlphaSweep::single(0.25),
            ..ScenarioConfig::default()
        };
        let rows = run_sweep(&c).unwrap();
        assert!(rows[0].ci_ber.iter().all(|c| c.is_nan()));
        assert!(rows[0].ci_rate_noma.is_nan());
    }

    #[test]
    fn rate_only_sweep_leaves_ber_columns_nan() {
        let c = ScenarioConfig {
            trials: 20,
            ..ScenarioConfig::default()
        };
        let rows = run_sweep_with(&c, &SweepOptions { experiments: Experiments::RATE_ONLY, workers: 1 }, |_| {}).unwrap();
        assert_eq!(rows.len(), 9);
        assert!(rows.iter().all(|r| r.ber_noma_perfect.is_nan() && r.rate_noma_sum > 0.0));
        assert!(rows.windows(2).all(|w| w[0].alpha < w[1].alpha));
    }
}
