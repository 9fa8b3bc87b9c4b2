//! Spontaneous-scattering budget.
//!
//! The bright state is depumped by spontaneous emission. Only part of the
//! emission events change the Zeeman state, so the measured depumping rate
//! per incident photon underestimates the scattering rate. This module
//! corrects for that and converts knowledge exponents per incident photon
//! into exponents per scattered photon.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Depumping parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepumpParams {
    /// Initial depumping rate per incident photon.
    pub nu: f64,
    /// Γ_P/Γ, emission into the detuned cavity mode over free-space emission.
    pub gamma_ratio: f64,
    /// Steady-state survival probability.
    pub s_inf: f64,
}

impl DepumpParams {
    pub fn new(nu: f64, gamma_ratio: f64, s_inf: f64) -> Result<Self> {
        let p = DepumpParams { nu, gamma_ratio, s_inf };
        p.validate()?;
        Ok(p)
    }

    /// ν = 1/142, Γ_P/Γ = 2.6, steady state 0.27.
    pub fn reference() -> Self {
        DepumpParams {
            nu: 1.0 / 142.0,
            gamma_ratio: 2.6,
            s_inf: 0.27,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(Error::domain(format!("nu must be >= 0, got {}", self.nu)));
        }
        if !(self.gamma_ratio >= 0.0 && self.gamma_ratio.is_finite()) {
            return Err(Error::domain(format!(
                "gamma ratio must be >= 0, got {}",
                self.gamma_ratio
            )));
        }
        if !(0.0..1.0).contains(&self.s_inf) {
            return Err(Error::domain(format!("s_inf must lie in [0, 1), got {}", self.s_inf)));
        }
        Ok(())
    }
}

/// Free-space decay from the excited m=0 level returns to the initial Zeeman
/// state with probability 3/5.
pub const FREE_SPACE_RETURN: f64 = 3.0 / 5.0;

/// Probability that one emission event leaves the bright state,
/// `(ρ + 2/5)/(ρ + 1)` with `ρ = Γ_P/Γ`. Emission into the detuned mode
/// always changes the Zeeman state.
pub fn depump_prob_per_scatter(gamma_ratio: f64) -> Result<f64> {
    if !(gamma_ratio >= 0.0) {
        return Err(Error::domain(format!("gamma ratio must be >= 0, got {gamma_ratio}")));
    }
    if gamma_ratio.is_infinite() {
        return Ok(1.0);
    }
    Ok((gamma_ratio + (1.0 - FREE_SPACE_RETURN)) / (gamma_ratio + 1.0))
}

/// Scattered photons per incident photon, `m/n = ν / P_depump`.
pub fn scatter_per_photon(nu: f64, gamma_ratio: f64) -> Result<f64> {
    if !(nu >= 0.0 && nu.is_finite()) {
        return Err(Error::domain(format!("nu must be >= 0, got {nu}")));
    }
    Ok(nu / depump_prob_per_scatter(gamma_ratio)?)
}

/// Survival in the bright state after `n` incident photons:
/// `S(n) = s∞ + (1 − s∞) exp(−λ n)` with `λ = ν/(1 − s∞)`, so the initial
/// slope is `−ν`.
pub fn survival_model(n: f64, p: &DepumpParams) -> f64 {
    let lambda = p.nu / (1.0 - p.s_inf);
    p.s_inf + (1.0 - p.s_inf) * (-lambda * n).exp()
}

/// Exponent per scattered photon from an exponent per incident photon.
pub fn knowledge_exponent_per_scatter(exponent_per_photon: f64, m_per_n: f64) -> Result<f64> {
    if !(m_per_n > 0.0) {
        return Err(Error::domain(format!("m/n must be > 0, got {m_per_n}")));
    }
    if !(exponent_per_photon >= 0.0) {
        return Err(Error::domain("exponent must be >= 0"));
    }
    Ok(exponent_per_photon / m_per_n)
}

/// One survival measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalPoint {
    pub n: f64,
    pub survival: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Weight residuals by `1/σ`. Without weights, parameter uncertainties
    /// are scaled by the residual variance.
    pub weighted: bool,
    /// Hold `s∞` at this value and fit `ν` alone.
    pub fixed_s_inf: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            weighted: true,
            fixed_s_inf: None,
        }
    }
}

/// Fitted `(s∞, ν)` with one-σ uncertainties. A held `s∞` has zero
/// uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub s_inf: f64,
    pub nu: f64,
    pub sigma_s_inf: f64,
    pub sigma_nu: f64,
    /// Residual sum of squares (weighted when the fit is weighted).
    pub rss: f64,
    pub iterations: usize,
}

const MAX_ITERATIONS: usize = 200;
const S_INF_MAX: f64 = 0.999;

struct Problem<'a> {
    data: &'a [SurvivalPoint],
    options: FitOptions,
}

impl Problem<'_> {
    fn params(&self, theta: &[f64]) -> DepumpParams {
        match self.options.fixed_s_inf {
            Some(s) => DepumpParams {
                nu: theta[0],
                gamma_ratio: 0.0,
                s_inf: s,
            },
            None => DepumpParams {
                nu: theta[1],
                gamma_ratio: 0.0,
                s_inf: theta[0],
            },
        }
    }

    fn project(&self, theta: &mut [f64]) {
        match self.options.fixed_s_inf {
            Some(_) => theta[0] = theta[0].max(0.0),
            None => {
                theta[0] = theta[0].clamp(0.0, S_INF_MAX);
                theta[1] = theta[1].max(0.0);
            }
        }
    }

    fn residuals(&self, theta: &[f64]) -> DVector<f64> {
        let p = self.params(theta);
        DVector::from_iterator(
            self.data.len(),
            self.data.iter().map(|d| {
                let r = d.survival - survival_model(d.n, &p);
                if self.options.weighted {
                    r / d.sigma
                } else {
                    r
                }
            }),
        )
    }

    fn jacobian(&self, theta: &[f64]) -> DMatrix<f64> {
        let k = theta.len();
        let mut j = DMatrix::zeros(self.data.len(), k);
        for c in 0..k {
            let h = 1e-6 * theta[c].abs().max(1e-4);
            let mut up = theta.to_vec();
            let mut down = theta.to_vec();
            up[c] += h;
            down[c] -= h;
            let col = (self.residuals(&up) - self.residuals(&down)) / (2.0 * h);
            j.set_column(c, &col);
        }
        j
    }
}

fn cost(r: &DVector<f64>) -> f64 {
    r.norm_squared()
}

fn gauss_newton(problem: &Problem, mut theta: Vec<f64>) -> Result<(Vec<f64>, f64, usize)> {
    problem.project(&mut theta);
    let mut r = problem.residuals(&theta);
    let mut c = cost(&r);
    for iter in 1..=MAX_ITERATIONS {
        let j = problem.jacobian(&theta);
        let jt = j.transpose();
        let step = (&jt * &j)
            .svd(true, true)
            .solve(&(-(&jt * &r)), 1e-12)
            .map_err(|_| Error::FitFailure { iterations: iter })?;
        // Step halving keeps the iteration descending.
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let mut trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + scale * s).collect();
            problem.project(&mut trial);
            let tr = problem.residuals(&trial);
            let tc = cost(&tr);
            if tc <= c {
                accepted = Some((trial, tr, tc));
                break;
            }
            scale *= 0.5;
        }
        let Some((next, next_r, next_c)) = accepted else {
            // No descent direction left: at a minimum up to rounding.
            return Ok((theta, c, iter));
        };
        let rel_step = next
            .iter()
            .zip(theta.iter())
            .map(|(a, b)| (a - b).abs() / b.abs().max(1e-12))
            .fold(0.0f64, f64::max);
        theta = next;
        r = next_r;
        let improvement = c - next_c;
        c = next_c;
        if rel_step < 1e-8 || improvement <= 1e-30 {
            return Ok((theta, c, iter));
        }
    }
    Err(Error::FitFailure {
        iterations: MAX_ITERATIONS,
    })
}

/// Initial-slope estimate of ν from the two smallest-`n` points.
fn slope_guess(data: &[SurvivalPoint]) -> f64 {
    let mut sorted: Vec<&SurvivalPoint> = data.iter().collect();
    sorted.sort_by(|a, b| a.n.total_cmp(&b.n).then(a.survival.total_cmp(&b.survival)));
    let (a, b) = (sorted[0], sorted[1]);
    if b.n > a.n {
        ((a.survival - b.survival) / (b.n - a.n)).max(0.0)
    } else {
        0.0
    }
}

/// Weighted nonlinear least squares for the survival curve.
///
/// Gauss-Newton with a central-difference Jacobian, restarted from
/// `s∞ ∈ {0, 0.2, 0.4}`; the lowest residual wins. Converges when the
/// relative step drops below 1e-8.
pub fn fit_survival(data: &[SurvivalPoint], options: FitOptions) -> Result<FitResult> {
    let free = if options.fixed_s_inf.is_some() { 1 } else { 2 };
    if data.len() < free + 1 {
        return Err(Error::domain(format!("need at least {} points", free + 1)));
    }
    if data.iter().any(|d| !d.n.is_finite() || !d.survival.is_finite()) {
        return Err(Error::domain("data must be finite"));
    }
    if options.weighted && data.iter().any(|d| !(d.sigma > 0.0)) {
        return Err(Error::domain("weighted fit needs sigma > 0"));
    }
    if let Some(s) = options.fixed_s_inf {
        if !(0.0..1.0).contains(&s) {
            return Err(Error::domain(format!("fixed s_inf must lie in [0, 1), got {s}")));
        }
    }
    let problem = Problem { data, options };
    let nu0 = slope_guess(data);
    let starts: Vec<Vec<f64>> = match options.fixed_s_inf {
        Some(_) => vec![vec![nu0]],
        None => [0.0, 0.2, 0.4].iter().map(|&s| vec![s, nu0]).collect(),
    };
    let mut best: Option<(Vec<f64>, f64, usize)> = None;
    let mut last_err = None;
    for start in starts {
        match gauss_newton(&problem, start) {
            Ok(sol) => {
                if best.as_ref().is_none_or(|b| sol.1 < b.1) {
                    best = Some(sol);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let (theta, rss, iterations) = match best {
        Some(b) => b,
        None => return Err(last_err.expect("at least one start")),
    };

    let j = problem.jacobian(&theta);
    let info = j.transpose() * &j;
    let mut cov = info
        .clone()
        .try_inverse()
        .unwrap_or_else(|| info.svd(true, true).pseudo_inverse(1e-12).expect("svd"));
    if !options.weighted {
        let dof = (data.len() - free).max(1) as f64;
        cov *= rss / dof;
    }
    let sd = |i: usize| cov[(i, i)].max(0.0).sqrt();
    let p = problem.params(&theta);
    let (sigma_s_inf, sigma_nu) = match options.fixed_s_inf {
        Some(_) => (0.0, sd(0)),
        None => (sd(0), sd(1)),
    };
    Ok(FitResult {
        s_inf: p.s_inf,
        nu: p.nu,
        sigma_s_inf,
        sigma_nu,
        rss,
        iterations,
    })
}
