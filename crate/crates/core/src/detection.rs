//! Photon-counting discrimination of the qubit state.
//!
//! The counters see transmitted and reflected photons. For a coherent probe
//! both counts are independent Poisson variables whose means depend on the
//! qubit state, so discrimination reduces to telling apart two products of
//! two Poisson distributions. Detector efficiency thins a Poisson process
//! into another Poisson process and is folded into the means.

use std::io::{self, Write};

use rand::Rng;
use rand_distr::{Binomial, Distribution, Geometric, Poisson};
use rayon::prelude::*;

use crate::bounds::{fln, knowledge_from_error};
use crate::rng::{self, StreamRng};
use crate::{Error, QubitState, Result};

/// Power transmission and reflection of the cavity per incident photon for
/// the dark (`t0`, `r0`) and bright (`t1`, `r1`) qubit states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityResponse {
    pub t0: f64,
    pub t1: f64,
    pub r0: f64,
    pub r1: f64,
}

impl CavityResponse {
    pub fn new(t0: f64, t1: f64, r0: f64, r1: f64) -> Result<Self> {
        for (name, v) in [("T0", t0), ("T1", t1), ("R0", r0), ("R1", r1)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(CavityResponse { t0, t1, r0, r1 })
    }

    /// Measured response of the reference cavity:
    /// T0 = 0.13, R0 = 0.42, T1 = 0.0024, R1 = 0.99.
    pub fn reference() -> Self {
        CavityResponse {
            t0: 0.13,
            t1: 0.0024,
            r0: 0.42,
            r1: 0.99,
        }
    }
}

/// Detection efficiencies of the transmission and reflection counters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Efficiencies {
    pub transmission: f64,
    pub reflection: f64,
}

impl Efficiencies {
    pub fn new(transmission: f64, reflection: f64) -> Result<Self> {
        for (name, v) in [("transmission", transmission), ("reflection", reflection)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::domain(format!("{name} efficiency must lie in (0, 1], got {v}")));
            }
        }
        Ok(Efficiencies {
            transmission,
            reflection,
        })
    }

    pub fn perfect() -> Self {
        Efficiencies {
            transmission: 1.0,
            reflection: 1.0,
        }
    }

    /// 47% in transmission, 31% in reflection.
    pub fn reference() -> Self {
        Efficiencies {
            transmission: 0.47,
            reflection: 0.31,
        }
    }
}

/// Mean detected counts per incident photon, indexed by qubit state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountDistributions {
    pub transmitted: [f64; 2],
    pub reflected: [f64; 2],
}

impl CountDistributions {
    pub fn new(response: &CavityResponse, efficiencies: &Efficiencies) -> Self {
        let et = efficiencies.transmission;
        let er = efficiencies.reflection;
        CountDistributions {
            transmitted: [et * response.t0, et * response.t1],
            reflected: [er * response.r0, er * response.r1],
        }
    }

    /// Poisson means `(μ_T, μ_R)` for `n` incident photons.
    pub fn means(&self, state: QubitState, n: f64) -> (f64, f64) {
        let i = state.index();
        (n * self.transmitted[i], n * self.reflected[i])
    }

    fn channel_pairs(&self) -> [(f64, f64); 2] {
        [
            (self.transmitted[0], self.transmitted[1]),
            (self.reflected[0], self.reflected[1]),
        ]
    }

    fn largest_mean(&self, n: f64) -> f64 {
        self.transmitted
            .iter()
            .chain(self.reflected.iter())
            .fold(0.0f64, |m, &p| m.max(p * n))
    }
}

/// Detected photons in transmission and reflection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct CountRecord {
    pub n_t: u64,
    pub n_r: u64,
}

/// `a^s b^(1-s)` with the `s ∈ (0, 1)` limit 0 when either base vanishes.
fn geometric_mix(a: f64, b: f64, s: f64) -> f64 {
    if s <= 0.0 {
        b
    } else if s >= 1.0 {
        a
    } else if a == 0.0 || b == 0.0 {
        0.0
    } else {
        (s * a.ln() + (1.0 - s) * b.ln()).exp()
    }
}

/// Chernoff exponent of a set of independent Poisson channels, each given as
/// `(mean under state 0, mean under state 1)` per unit `n`.
///
/// Returns `(ξ, s*)` where `ξ = -min_s Σ [a^s b^(1-s) − s a − (1−s) b]`.
pub(crate) fn chernoff_of_channels(channels: &[(f64, f64)]) -> (f64, f64) {
    let f = |s: f64| -> f64 {
        channels
            .iter()
            .map(|&(a, b)| geometric_mix(a, b, s) - s * a - (1.0 - s) * b)
            .sum()
    };
    // f is convex on [0, 1]; golden-section search.
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-10 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let s = 0.5 * (lo + hi);
    let value = f(s).min(0.0);
    (-value, s)
}

/// Chernoff exponent `ξ` and the minimising `s*` for photon counting with the
/// given cavity response and detector efficiencies.
pub fn chernoff_exponent(response: &CavityResponse, efficiencies: &Efficiencies) -> Result<(f64, f64)> {
    let d = CountDistributions::new(response, efficiencies);
    Ok(chernoff_of_channels(&d.channel_pairs()))
}

/// Chernoff exponent of already-thinned count distributions.
pub fn chernoff_exponent_of(d: &CountDistributions) -> (f64, f64) {
    chernoff_of_channels(&d.channel_pairs())
}

/// The `s = ½` value `(T0+T1+R0+R1)/2 − √(T0 T1) − √(R0 R1)`.
pub fn closed_form_xi_half(response: &CavityResponse) -> f64 {
    let CavityResponse { t0, t1, r0, r1 } = *response;
    0.5 * (t0 + t1 + r0 + r1) - (t0 * t1).sqrt() - (r0 * r1).sqrt()
}

/// Probability mass allowed outside the truncated count lattice.
pub const TAIL_MASS_LIMIT: f64 = 1e-9;

/// Lattice truncation `mean + 10√mean + 20` for the largest count mean.
pub fn default_truncation(d: &CountDistributions, n: f64) -> usize {
    let mu = d.largest_mean(n);
    (mu + 10.0 * mu.sqrt() + 20.0).ceil() as usize
}

/// Poisson pmf on `0..=k_max`, computed in log space.
fn poisson_pmf(mean: f64, k_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k_max + 1);
    if mean == 0.0 {
        out.push(1.0);
        out.resize(k_max + 1, 0.0);
        return out;
    }
    let ln_mean = mean.ln();
    let mut ln_p = -mean;
    out.push(ln_p.exp());
    for k in 1..=k_max {
        ln_p += ln_mean - (k as f64).ln();
        out.push(ln_p.exp());
    }
    out
}

/// `‖P0 − P1‖₁ = ½ Σ |P0(x) − P1(x)|` over the product-Poisson count lattice.
pub fn total_variation(d: &CountDistributions, n: f64, truncation: usize) -> Result<f64> {
    if !(n >= 0.0 && n.is_finite()) {
        return Err(Error::domain(format!("photon number must be >= 0, got {n}")));
    }
    let mu = d.largest_mean(n);
    let required = (mu + 10.0 * mu.sqrt()).ceil() as usize;
    let pmfs: Vec<Vec<f64>> = [d.transmitted[0], d.reflected[0], d.transmitted[1], d.reflected[1]]
        .iter()
        .map(|&p| poisson_pmf(p * n, truncation))
        .collect();
    let tail = pmfs
        .iter()
        .map(|v| (1.0 - v.iter().sum::<f64>()).max(0.0))
        .fold(0.0f64, f64::max);
    if truncation < required || tail > TAIL_MASS_LIMIT {
        return Err(Error::Truncation {
            truncation,
            required: default_truncation(d, n),
            tail,
            limit: TAIL_MASS_LIMIT,
        });
    }
    let (t0, r0, t1, r1) = (&pmfs[0], &pmfs[1], &pmfs[2], &pmfs[3]);
    let mut sum = 0.0;
    for i in 0..=truncation {
        let (a0, a1) = (t0[i], t1[i]);
        if a0 == 0.0 && a1 == 0.0 {
            continue;
        }
        for j in 0..=truncation {
            sum += (a0 * r0[j] - a1 * r1[j]).abs();
        }
    }
    Ok((0.5 * sum).min(1.0))
}

/// Exact minimal error of photon counting, `ε_D = (1 − ‖P0 − P1‖₁)/2`.
///
/// Refuses a `truncation` that would drop more than [`TAIL_MASS_LIMIT`] of
/// probability or lies below `mean + 10√mean`.
pub fn l1_error(d: &CountDistributions, n: f64, truncation: usize) -> Result<f64> {
    Ok(0.5 * (1.0 - total_variation(d, n, truncation)?))
}

/// [`l1_error`] at the [`default_truncation`].
pub fn l1_error_auto(d: &CountDistributions, n: f64) -> Result<f64> {
    l1_error(d, n, default_truncation(d, n))
}

/// Accessible knowledge `fln(ξ n)`.
pub fn accessible_knowledge(xi: f64, n: f64) -> Result<f64> {
    if !(xi >= 0.0) || !(n >= 0.0) {
        return Err(Error::domain(format!("xi and n must be >= 0, got {xi}, {n}")));
    }
    fln(xi * n)
}

/// `|‖P0 − P1‖₁ − √(1 − exp(−ξ n))|`: how far the Chernoff-coefficient
/// approximation of the counting distance is from the exact lattice value.
pub fn chernoff_vs_l1_gap(d: &CountDistributions, n: f64) -> Result<f64> {
    let tv = total_variation(d, n, default_truncation(d, n))?;
    let (xi, _) = chernoff_exponent_of(d);
    let approx = (-(-xi * n).exp_m1()).sqrt();
    Ok((tv - approx).abs())
}

/// Optical switching of the atom during the probe pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpModel {
    /// Probability per incident photon that a bright atom leaves the bright
    /// state. Afterwards it responds like the dark state.
    pub bright_to_dark_per_photon: f64,
}

impl JumpModel {
    pub fn none() -> Self {
        JumpModel {
            bright_to_dark_per_photon: 0.0,
        }
    }

    /// Depumping at 1/142 per incident photon.
    pub fn reference() -> Self {
        JumpModel {
            bright_to_dark_per_photon: 1.0 / 142.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let p = self.bright_to_dark_per_photon;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!("jump probability must lie in [0, 1], got {p}")));
        }
        Ok(())
    }
}

fn route_photons<R: Rng + ?Sized>(rng: &mut R, photons: u64, p_t: f64, p_r: f64) -> CountRecord {
    if photons == 0 {
        return CountRecord::default();
    }
    let n_t = Binomial::new(photons, p_t.min(1.0))
        .expect("valid probability")
        .sample(rng);
    let rest = photons - n_t;
    let p_r_given = if p_t >= 1.0 { 0.0 } else { (p_r / (1.0 - p_t)).min(1.0) };
    let n_r = if rest == 0 {
        0
    } else {
        Binomial::new(rest, p_r_given).expect("valid probability").sample(rng)
    };
    CountRecord { n_t, n_r }
}

pub(crate) fn sample_record<R: Rng + ?Sized>(
    rng: &mut R,
    state: QubitState,
    n: f64,
    d: &CountDistributions,
    jumps: &JumpModel,
) -> CountRecord {
    if n <= 0.0 {
        return CountRecord::default();
    }
    let incident = Poisson::new(n).expect("positive mean").sample(rng) as u64;
    let p = jumps.bright_to_dark_per_photon;
    // Photons before the jump see the bright response, the rest the dark one.
    let bright_photons = match state {
        QubitState::Dark => 0,
        QubitState::Bright if p <= 0.0 => incident,
        QubitState::Bright => Geometric::new(p).expect("valid probability").sample(rng).min(incident),
    };
    let bright = route_photons(rng, bright_photons, d.transmitted[1], d.reflected[1]);
    let dark = route_photons(rng, incident - bright_photons, d.transmitted[0], d.reflected[0]);
    CountRecord {
        n_t: bright.n_t + dark.n_t,
        n_r: bright.n_r + dark.n_r,
    }
}

/// Samples one detection record for a pulse of mean `n` incident photons.
///
/// Jumps only affect the bright state: the jump position is geometric in the
/// incident-photon ordinal with the given per-photon probability.
pub fn simulate_record(
    state: QubitState,
    n: f64,
    d: &CountDistributions,
    jumps: &JumpModel,
    seed: u64,
) -> Result<CountRecord> {
    if !(n >= 0.0 && n.is_finite()) {
        return Err(Error::domain(format!("photon number must be >= 0, got {n}")));
    }
    jumps.validate()?;
    let mut rng = rng::stream(seed, 0);
    Ok(sample_record(&mut rng, state, n, d, jumps))
}

fn log_likelihood(k: u64, mean: f64) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    k as f64 * mean.ln() - mean
}

/// Maximum-likelihood decision for a count record.
///
/// Returns the decided state and `ln L(dark) − ln L(bright)`. Ties go to the
/// bright state.
pub fn ml_classify(rec: &CountRecord, d: &CountDistributions, n: f64) -> (QubitState, f64) {
    let (t0, r0) = d.means(QubitState::Dark, n);
    let (t1, r1) = d.means(QubitState::Bright, n);
    let l0 = log_likelihood(rec.n_t, t0) + log_likelihood(rec.n_r, r0);
    let l1 = log_likelihood(rec.n_t, t1) + log_likelihood(rec.n_r, r1);
    let llr = if l0 == l1 { 0.0 } else { l0 - l1 };
    let state = if llr > 0.0 {
        QubitState::Dark
    } else {
        QubitState::Bright
    };
    (state, llr)
}

/// Monte Carlo estimate of the counting error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionErrorReport {
    pub n: f64,
    /// P(decide bright | prepared dark).
    pub epsilon_0: f64,
    /// P(decide dark | prepared bright).
    pub epsilon_1: f64,
    pub epsilon: f64,
    /// Half-width of the 68% Wilson interval on `epsilon`.
    pub ci: f64,
    /// Trials per preparation.
    pub trials: u64,
}

impl DetectionErrorReport {
    /// One standard deviation of `epsilon` from binomial statistics.
    pub fn binomial_sigma(&self) -> f64 {
        let n = self.trials as f64;
        0.5 * (self.epsilon_0 * (1.0 - self.epsilon_0) / n + self.epsilon_1 * (1.0 - self.epsilon_1) / n).sqrt()
    }

    pub fn knowledge(&self) -> f64 {
        knowledge_from_error(self.epsilon.min(0.5)).unwrap_or(f64::NAN)
    }

    /// Delta-method half-width `ci/ε` on the knowledge.
    pub fn knowledge_ci(&self) -> f64 {
        if self.epsilon == 0.0 {
            f64::INFINITY
        } else {
            self.ci / self.epsilon
        }
    }
}

/// Wilson score interval half-width for `k` successes in `n` trials at `z`.
pub fn wilson_half_width(k: u64, n: u64, z: f64) -> f64 {
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()
}

/// Shards per preparation; fixed so results do not depend on thread count.
const SHARDS: u64 = 64;

/// Misclassification counts for one preparation.
fn count_errors(
    prepared: QubitState,
    trials: u64,
    n: f64,
    d: &CountDistributions,
    jumps: &JumpModel,
    seed: u64,
) -> u64 {
    let base = prepared.index() as u64 * SHARDS;
    let sizes: Vec<(u64, u64)> = rng::shard_sizes(trials, SHARDS)
        .enumerate()
        .map(|(i, s)| (i as u64, s))
        .collect();
    sizes
        .par_iter()
        .map(|&(shard, size)| {
            let mut rng: StreamRng = rng::stream(seed, base + shard);
            (0..size)
                .filter(|_| {
                    let rec = sample_record(&mut rng, prepared, n, d, jumps);
                    ml_classify(&rec, d, n).0 != prepared
                })
                .count() as u64
        })
        .sum()
}

/// Simulates `trials` records per preparation, classifies them with
/// [`ml_classify`] and reports the errors with a 68% Wilson interval.
pub fn empirical_error(
    trials: u64,
    n: f64,
    d: &CountDistributions,
    jumps: &JumpModel,
    seed: u64,
) -> Result<DetectionErrorReport> {
    if trials == 0 {
        return Err(Error::domain("trials must be > 0"));
    }
    if !(n >= 0.0 && n.is_finite()) {
        return Err(Error::domain(format!("photon number must be >= 0, got {n}")));
    }
    jumps.validate()?;
    let (k0, k1) = rayon::join(
        || count_errors(QubitState::Dark, trials, n, d, jumps, seed),
        || count_errors(QubitState::Bright, trials, n, d, jumps, seed),
    );
    let t = trials as f64;
    Ok(DetectionErrorReport {
        n,
        epsilon_0: k0 as f64 / t,
        epsilon_1: k1 as f64 / t,
        epsilon: (k0 + k1) as f64 / (2.0 * t),
        ci: wilson_half_width(k0 + k1, 2 * trials, 1.0),
        trials,
    })
}

pub const REPORT_CSV_HEADER: &str = "n,epsilon,ci,knowledge,knowledge_ci";

/// Writes reports as CSV rows under [`REPORT_CSV_HEADER`].
pub fn write_reports_csv<W: Write>(mut w: W, reports: &[DetectionErrorReport]) -> io::Result<()> {
    writeln!(w, "{REPORT_CSV_HEADER}")?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.n,
            r.epsilon,
            r.ci,
            r.knowledge(),
            r.knowledge_ci()
        )?;
    }
    Ok(())
}
