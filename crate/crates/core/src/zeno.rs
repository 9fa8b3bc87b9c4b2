//! Measurement back action through the quantum Zeno effect.
//!
//! A resonant π-pulse drives the qubit while the probe light performs on
//! average `ñ` projective z-measurements at Poisson-distributed times. In the
//! ensemble these projections are pure transverse decay at rate `ñ/τ`, so the
//! Bloch equations below are exact for the model; [`mc_zeno_transfer`]
//! realises the same model trajectory by trajectory.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::bounds::fln;
use crate::rng;
use crate::{Error, QubitState, Result};

/// Bloch vector `(u, v, w)` with `w = +1` for the bright state.
///
/// The coherence is `ρ01 = (u + i v)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochState {
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

impl BlochState {
    pub fn basis(state: QubitState) -> Self {
        let w = match state {
            QubitState::Bright => 1.0,
            QubitState::Dark => -1.0,
        };
        BlochState { u: 0.0, v: 0.0, w }
    }

    pub fn norm(&self) -> f64 {
        (self.u * self.u + self.v * self.v + self.w * self.w).sqrt()
    }

    pub fn coherence_magnitude(&self) -> f64 {
        0.5 * (self.u * self.u + self.v * self.v).sqrt()
    }

    /// Population of `state`.
    pub fn population(&self, state: QubitState) -> f64 {
        match state {
            QubitState::Bright => 0.5 * (1.0 + self.w),
            QubitState::Dark => 0.5 * (1.0 - self.w),
        }
    }
}

/// Parameters of the Zeno experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZenoConfig {
    /// Pulse duration in μs.
    pub tau: f64,
    /// Angular Rabi frequency in rad/μs.
    pub rabi: f64,
    /// Lowest observable transfer probability.
    pub p_floor: f64,
    /// Highest observable transfer probability.
    pub p_ceiling: f64,
    pub initial: QubitState,
}

impl ZenoConfig {
    /// π-pulse of duration `tau` with the given transfer bounds.
    pub fn pi_pulse(tau: f64, p_floor: f64, p_ceiling: f64, initial: QubitState) -> Result<Self> {
        let cfg = ZenoConfig {
            tau,
            rabi: std::f64::consts::PI / tau,
            p_floor,
            p_ceiling,
            initial,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// 8.8 μs π-pulse with transfer limited to [0.02, 0.95].
    pub fn reference(initial: QubitState) -> Self {
        Self::pi_pulse(8.8, 0.02, 0.95, initial).expect("valid")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::domain(format!("tau must be > 0, got {}", self.tau)));
        }
        if !self.rabi.is_finite() {
            return Err(Error::domain("Rabi frequency must be finite"));
        }
        if !(0.0 <= self.p_floor && self.p_floor < self.p_ceiling && self.p_ceiling <= 1.0) {
            return Err(Error::domain(format!(
                "need 0 <= floor < ceiling <= 1, got {} and {}",
                self.p_floor, self.p_ceiling
            )));
        }
        Ok(())
    }
}

fn check_n_tilde(n_tilde: f64) -> Result<()> {
    if !(n_tilde >= 0.0 && n_tilde.is_finite()) {
        return Err(Error::domain(format!(
            "mean measurement number must be >= 0, got {n_tilde}"
        )));
    }
    Ok(())
}

/// Integrates the driven, dephased Bloch equations over the pulse with
/// fixed-step RK4.
///
/// The drive rotates about `u`; dephasing at rate `r = ñ/τ` damps `u` and `v`.
/// Returns the final state and the largest norm seen during integration.
pub fn integrate_bloch(cfg: &ZenoConfig, n_tilde: f64, start: BlochState) -> Result<(BlochState, f64)> {
    cfg.validate()?;
    check_n_tilde(n_tilde)?;
    let rate = n_tilde / cfg.tau;
    let omega = cfg.rabi;
    // At least 10⁴ steps, and r·dt, Ω·dt ≤ 0.05.
    let steps = 10_000usize
        .max((20.0 * n_tilde).ceil() as usize)
        .max((20.0 * omega.abs() * cfg.tau).ceil() as usize);
    let dt = cfg.tau / steps as f64;
    let deriv = |s: [f64; 3]| -> [f64; 3] {
        let [u, v, w] = s;
        [-rate * u, -rate * v - omega * w, omega * v]
    };
    let mut s = [start.u, start.v, start.w];
    let mut max_norm = start.norm();
    for _ in 0..steps {
        let k1 = deriv(s);
        let k2 = deriv(std::array::from_fn(|i| s[i] + 0.5 * dt * k1[i]));
        let k3 = deriv(std::array::from_fn(|i| s[i] + 0.5 * dt * k2[i]));
        let k4 = deriv(std::array::from_fn(|i| s[i] + dt * k3[i]));
        for i in 0..3 {
            s[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        max_norm = max_norm.max((s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt());
    }
    Ok((
        BlochState {
            u: s[0],
            v: s[1],
            w: s[2],
        },
        max_norm,
    ))
}

/// Ideal probability that the pulse transfers the qubit out of its initial
/// state when `ñ` projective measurements occur on average.
pub fn bloch_transfer(cfg: &ZenoConfig, n_tilde: f64) -> Result<f64> {
    let (end, _) = integrate_bloch(cfg, n_tilde, BlochState::basis(cfg.initial))?;
    Ok(end.population(cfg.initial.flipped()).clamp(0.0, 1.0))
}

/// Monte Carlo estimate with its one-σ binomial uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub sigma: f64,
    pub trials: u64,
}

const SHARDS: u64 = 32;

fn zeno_trajectory<R: Rng + ?Sized>(rng: &mut R, cfg: &ZenoConfig, poisson: Option<&Poisson<f64>>) -> bool {
    let k = poisson.map_or(0, |p| p.sample(rng) as usize);
    let mut times: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * cfg.tau).collect();
    times.sort_by(f64::total_cmp);
    times.push(cfg.tau);
    // After each projection the qubit is in a basis state; the drive
    // exp(-i Ω t σx / 2) then gives amplitude sin(Ω t / 2) on the other one.
    let mut flipped = false;
    let mut last = 0.0;
    for t in times {
        let p_flip = (0.5 * cfg.rabi * (t - last)).sin().powi(2);
        if rng.random::<f64>() < p_flip {
            flipped = !flipped;
        }
        last = t;
    }
    flipped
}

/// Trajectory realisation of [`bloch_transfer`]: per trial draw
/// `K ~ Poisson(ñ)` measurement times uniformly in `[0, τ]`, evolve
/// unitarily between them and project with Born probabilities, including a
/// final readout at `τ`.
pub fn mc_zeno_transfer(cfg: &ZenoConfig, n_tilde: f64, trials: u64, seed: u64) -> Result<McEstimate> {
    cfg.validate()?;
    check_n_tilde(n_tilde)?;
    if trials == 0 {
        return Err(Error::domain("trials must be > 0"));
    }
    let poisson = if n_tilde > 0.0 {
        Some(Poisson::new(n_tilde).expect("positive mean"))
    } else {
        None
    };
    let sizes: Vec<(u64, u64)> = rng::shard_sizes(trials, SHARDS)
        .enumerate()
        .map(|(i, s)| (i as u64, s))
        .collect();
    let transfers: u64 = sizes
        .par_iter()
        .map(|&(shard, size)| {
            let mut rng = rng::stream(seed, shard);
            (0..size)
                .filter(|_| zeno_trajectory(&mut rng, cfg, poisson.as_ref()))
                .count() as u64
        })
        .sum();
    let mean = transfers as f64 / trials as f64;
    Ok(McEstimate {
        mean,
        sigma: (mean * (1.0 - mean) / trials as f64).sqrt(),
        trials,
    })
}

/// Maps an ideal transfer probability onto the observable range:
/// `floor + (ceiling − floor) p`.
pub fn apply_imperfections(p_ideal: f64, cfg: &ZenoConfig) -> f64 {
    cfg.p_floor + (cfg.p_ceiling - cfg.p_floor) * p_ideal
}

/// Largest `ñ` the inversion searches.
const N_TILDE_SEARCH_CAP: f64 = 1e5;

/// Inverts [`apply_imperfections`] ∘ [`bloch_transfer`] by bisection.
pub fn infer_n_tilde(p_obs: f64, cfg: &ZenoConfig) -> Result<f64> {
    cfg.validate()?;
    if !(p_obs > cfg.p_floor && p_obs <= cfg.p_ceiling) {
        return Err(Error::OutOfModel(format!(
            "transfer {p_obs} outside ({}, {}]",
            cfg.p_floor, cfg.p_ceiling
        )));
    }
    let target = (p_obs - cfg.p_floor) / (cfg.p_ceiling - cfg.p_floor);
    let excess = |n: f64| bloch_transfer(cfg, n).map(|p| p - target);
    if excess(0.0)? <= 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while excess(hi)? > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > N_TILDE_SEARCH_CAP {
            return Err(Error::OutOfModel(format!(
                "transfer {p_obs} needs more than {N_TILDE_SEARCH_CAP} measurements"
            )));
        }
    }
    while hi - lo > 1e-8 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if excess(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One inferred point `(n, ñ, σ_ñ)` for [`fit_a0`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZenoPoint {
    pub n: f64,
    pub n_tilde: f64,
    pub sigma: f64,
}

/// Weighted least-squares slope through the origin for `ñ = a₀ n`.
///
/// Returns `(a₀, σ_a₀)` with `σ_a₀ = (Σ n²/σ²)^{-1/2}`.
pub fn fit_a0(points: &[ZenoPoint]) -> Result<(f64, f64)> {
    if points.len() < 2 {
        return Err(Error::domain("need at least two points"));
    }
    if points.iter().any(|p| !(p.sigma > 0.0)) {
        return Err(Error::domain("uncertainties must be > 0"));
    }
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(sxy, sxx), p| {
        let w = 1.0 / (p.sigma * p.sigma);
        (sxy + w * p.n * p.n_tilde, sxx + w * p.n * p.n)
    });
    if sxx == 0.0 {
        return Err(Error::domain("all photon numbers are zero"));
    }
    Ok((sxy / sxx, sxx.sqrt().recip()))
}

/// Coherence reduction `exp(-ñ)` from `ñ` projective measurements.
pub fn coherence_decay(n_tilde: f64) -> Result<f64> {
    check_n_tilde(n_tilde)?;
    Ok((-n_tilde).exp())
}

/// Maximum knowledge `fln(2ñ)` implied by the back action.
pub fn zeno_knowledge(n_tilde: f64) -> Result<f64> {
    check_n_tilde(n_tilde)?;
    fln(2.0 * n_tilde)
}
