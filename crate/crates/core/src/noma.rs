//! Two-group power-domain NOMA with OOK.
//!
//! The weak group (1) gets the fraction `1 - alpha` of the average optical
//! power, the strong group (2) gets `alpha`. With OOK the "on" amplitude of
//! each stream is twice its average power, so the composite received
//! constellation is `{0, a2, a1, a1 + a2}` with `a_i = R h A_i`.
//!
//! Bit-level detection uses single thresholds at cluster midpoints. The
//! closed-form error probabilities in this module are exact for that
//! detector under equiprobable independent bits and AWGN, and serve as
//! oracles for the Monte-Carlo path.

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erfc;

use crate::channel::PdParams;
use crate::error::{Error, Result};

/// Gaussian tail probability `Q(x) = P(Z > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Fixed power split between the two multicast groups.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerAllocation {
    alpha: f64,
    total_power: f64,
}

impl PowerAllocation {
    /// `alpha` is the strong group's share and must lie strictly inside
    /// (0, 0.5) so the weak stream stays the louder one.
    pub fn new(alpha: f64, total_power: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::invalid("alpha", format!("{alpha} is outside (0, 0.5)")));
        }
        if !(total_power > 0.0) {
            return Err(Error::invalid("led_power_w", "total power must be positive"));
        }
        Ok(PowerAllocation { alpha, total_power })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn total_power(&self) -> f64 {
        self.total_power
    }

    /// OOK "on" amplitudes `(A1, A2) = (2(1-alpha)P, 2 alpha P)`.
    pub fn on_amplitudes(&self) -> (f64, f64) {
        (
            2.0 * (1.0 - self.alpha) * self.total_power,
            2.0 * self.alpha * self.total_power,
        )
    }
}

/// Successive interference cancellation model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SicMode {
    /// Genie-aided: the true weak-group symbol is subtracted.
    Perfect,
    /// Detect-and-subtract at the bit level; at the rate level a fraction
    /// `residual` of the weak-group power remains as interference.
    Imperfect { residual: f64 },
}

impl SicMode {
    pub fn residual(&self) -> f64 {
        match *self {
            SicMode::Perfect => 0.0,
            SicMode::Imperfect { residual } => residual,
        }
    }

    pub fn is_perfect(&self) -> bool {
        matches!(self, SicMode::Perfect)
    }
}

/// Physical-layer state of one receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NomaLink {
    /// Received electrical amplitude of the weak-group stream.
    pub a1: f64,
    /// Received electrical amplitude of the strong-group stream.
    pub a2: f64,
    pub sigma: f64,
    pub sic: SicMode,
}

impl NomaLink {
    pub fn new(gain: f64, alloc: &PowerAllocation, pd: &PdParams, sigma: f64, sic: SicMode) -> Self {
        let (on1, on2) = alloc.on_amplitudes();
        NomaLink {
            a1: pd.responsivity * gain * on1,
            a2: pd.responsivity * gain * on2,
            sigma,
            sic,
        }
    }

    /// Threshold between the `b1 = 0` and `b1 = 1` clusters.
    pub fn weak_threshold(&self) -> f64 {
        0.5 * (self.a1 + self.a2)
    }
}

/// Superposed optical amplitude `A1 b1 + A2 b2`.
pub fn superpose(b1: bool, b2: bool, alloc: &PowerAllocation) -> f64 {
    let (on1, on2) = alloc.on_amplitudes();
    on1 * f64::from(u8::from(b1)) + on2 * f64::from(u8::from(b2))
}

/// `R h x + n`, `n ~ N(0, sigma^2)`.
pub fn receive_sample<R: Rng + ?Sized>(rng: &mut R, x: f64, gain: f64, pd: &PdParams, sigma: f64) -> f64 {
    let n: f64 = rng.sample(StandardNormal);
    pd.responsivity * gain * x + sigma * n
}

/// Weak-group bit: strong-group signal is treated as noise.
#[inline]
pub fn detect_weak(y: f64, link: &NomaLink) -> bool {
    y > link.weak_threshold()
}

/// Strong-group receiver: cancel the weak-group symbol, then slice the
/// residual at `a2 / 2`. Returns `(b1_hat, b2_hat)`; in perfect mode
/// `b1_hat` is the true bit.
#[inline]
pub fn sic_detect_strong(y: f64, link: &NomaLink, true_b1: bool) -> (bool, bool) {
    let b1 = match link.sic {
        SicMode::Perfect => true_b1,
        SicMode::Imperfect { .. } => detect_weak(y, link),
    };
    let residual = if b1 { y - link.a1 } else { y };
    (b1, residual > 0.5 * link.a2)
}

/// Exact error rate of [`detect_weak`]:
/// `1/2 [Q((a1 - a2) / 2 sigma) + Q((a1 + a2) / 2 sigma)]`.
pub fn ber_weak_analytic(link: &NomaLink) -> f64 {
    let s2 = 2.0 * link.sigma;
    0.5 * (q_function((link.a1 - link.a2) / s2) + q_function((link.a1 + link.a2) / s2))
}

/// Strong-group error rate with genie-aided cancellation: `Q(a2 / 2 sigma)`.
pub fn ber_strong_perfect_analytic(link: &NomaLink) -> f64 {
    q_function(link.a2 / (2.0 * link.sigma))
}

/// Exact strong-group error rate with detect-and-subtract cancellation.
///
/// After the two slicing stages the decision is `b2_hat = 1` exactly when
/// `y` falls in `(a2/2, (a1+a2)/2]` or `(a1 + a2/2, inf)`, so the error
/// probability is a sum of Gaussian interval masses for each of the four
/// equiprobable transmitted points.
pub fn ber_strong_imperfect_analytic(link: &NomaLink) -> f64 {
    let (a1, a2, s) = (link.a1, link.a2, link.sigma);
    let lo = 0.5 * a2;
    let mid = 0.5 * (a1 + a2);
    let hi = a1 + 0.5 * a2;
    // P(lo' < Z <= hi') for Z ~ N(0, 1)
    let mass = |from: f64, to: f64| q_function(from) - q_function(to);
    let mut total = 0.0;
    for (b1, b2) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)] {
        let mu = a1 * b1 + a2 * b2;
        let z = |t: f64| (t - mu) / s;
        total += if b2 == 1.0 {
            // decided 0: y <= lo or mid < y <= hi
            q_function(-z(lo)) + mass(z(mid), z(hi))
        } else {
            // decided 1
            mass(z(lo), z(mid)) + q_function(z(hi))
        };
    }
    0.25 * total
}

/// Strong-group bit error rate for either SIC mode.
pub fn ber_strong_analytic(link: &NomaLink) -> f64 {
    match link.sic {
        SicMode::Perfect => ber_strong_perfect_analytic(link),
        SicMode::Imperfect { .. } => ber_strong_imperfect_analytic(link),
    }
}

/// Weak-group SINR `(1-alpha)^2 gamma / (alpha^2 gamma + 1)`.
pub fn sinr_group1(alpha: f64, snr: f64) -> f64 {
    (1.0 - alpha).powi(2) * snr / (alpha * alpha * snr + 1.0)
}

/// Strong-group SINR after SIC leaving a fraction `residual` of the
/// weak-group power: `alpha^2 gamma / (eps (1-alpha)^2 gamma + 1)`.
pub fn sinr_group2(alpha: f64, snr: f64, residual: f64) -> f64 {
    alpha * alpha * snr / (residual * (1.0 - alpha).powi(2) * snr + 1.0)
}

/// Shannon spectral efficiency `log2(1 + sinr)` in bit/s/Hz.
pub fn rate_noma(sinr: f64) -> f64 {
    sinr.ln_1p() / std::f64::consts::LN_2
}

/// Equal time sharing at full power: `1/2 log2(1 + gamma)`.
pub fn rate_oma(snr: f64) -> f64 {
    0.5 * rate_noma(snr)
}

/// A multicast stream runs at its weakest member's rate.
pub fn multicast_group_rate(member_rates: &[f64]) -> Result<f64> {
    member_rates
        .iter()
        .copied()
        .reduce(f64::min)
        .ok_or_else(|| Error::invalid("member_rates", "a multicast group needs at least one member"))
}

/// A sub-interval of `(0, 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaInterval {
    pub lo: f64,
    pub hi: f64,
}

const ALPHA_TOL: f64 = 1e-6;

/// Power splits for which both groups' weakest members reach `r_min`.
///
/// Group 1's rate falls with alpha and group 2's rises, so the feasible set
/// is an interval bounded by the two crossing points, each found by
/// bisection to `1e-6`. Returns `None` when the interval is empty.
pub fn feasible_alpha(snr1_min: f64, snr2_min: f64, residual: f64, r_min: f64) -> Option<AlphaInterval> {
    const OPEN: (f64, f64) = (0.0, 0.5);
    let target = r_min.exp2() - 1.0;
    let ok1 = |a: f64| sinr_group1(a, snr1_min) >= target;
    let ok2 = |a: f64| sinr_group2(a, snr2_min, residual) >= target;

    if r_min <= 0.0 {
        return Some(AlphaInterval { lo: OPEN.0, hi: OPEN.1 });
    }

    // Smallest alpha meeting group 2; ok2 is monotone increasing.
    let lo = if ok2(OPEN.0) {
        OPEN.0
    } else if !ok2(OPEN.1) {
        return None;
    } else {
        bisect(OPEN.0, OPEN.1, ok2)
    };
    // Largest alpha meeting group 1; ok1 is monotone decreasing.
    let hi = if ok1(OPEN.1) {
        OPEN.1
    } else if !ok1(OPEN.0) {
        return None;
    } else {
        bisect(OPEN.0, OPEN.1, |a| !ok1(a))
    };
    (lo <= hi).then_some(AlphaInterval { lo, hi })
}

// First point where `pred` flips from false to true, to ALPHA_TOL.
fn bisect(mut lo: f64, mut hi: f64, pred: impl Fn(f64) -> bool) -> f64 {
    while hi - lo > ALPHA_TOL {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
