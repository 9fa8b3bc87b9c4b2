//! Closed-form discrimination limits.
//!
//! A qubit probed by a coherent pulse of mean photon number `n` leaves the
//! light in one of two product coherent states. Their squared overlap is
//! `exp(-ζ n)`, and every limit here is a function of that exponent:
//! the Helstrom error, the knowledge `K = -ln 2ε` and its closed form
//! `fln(ζ n)`.

use crate::detection::{chernoff_exponent, CavityResponse, Efficiencies};
use crate::{Error, Result};

/// Knowledge value returned for a zero error probability.
pub const INFINITE_KNOWLEDGE: f64 = f64::INFINITY;

/// Atom-cavity rates in units of 2π·MHz.
///
/// `kappa` and `gamma` are field and dipole half-widths; the free-space
/// population decay rate is `2 gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams {
    pub g: f64,
    pub kappa: f64,
    pub gamma: f64,
}

impl CavityParams {
    pub fn new(g: f64, kappa: f64, gamma: f64) -> Result<Self> {
        let p = CavityParams { g, kappa, gamma };
        p.validate()?;
        Ok(p)
    }

    /// Fiber cavity of the reference experiment: g = 185, κ = 53, γ = 3.
    pub fn reference() -> Self {
        CavityParams {
            g: 185.0,
            kappa: 53.0,
            gamma: 3.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        // g = 0 is allowed as the uncoupled limit.
        if !(self.g >= 0.0 && self.g.is_finite()) {
            return Err(Error::domain(format!("coupling g must be >= 0, got {}", self.g)));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::domain(format!("kappa must be > 0, got {}", self.kappa)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::domain(format!("gamma must be > 0, got {}", self.gamma)));
        }
        Ok(())
    }
}

/// Single-atom cooperativity `g²/(2κγ)`.
pub fn cooperativity(p: &CavityParams) -> Result<f64> {
    p.validate()?;
    Ok(p.g * p.g / (2.0 * p.kappa * p.gamma))
}

/// `fln(x) = -ln(1 - sqrt(1 - exp(-x)))`, the knowledge carried by an
/// overlap exponent `x`. Tends to `x + ln 2` for large `x`.
pub fn fln(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::domain(format!("fln needs x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(INFINITE_KNOWLEDGE);
    }
    // 1 - sqrt(1 - e) = e / (1 + sqrt(1 - e)) avoids cancellation for small e.
    let e = (-x).exp();
    let deficit = e / (1.0 + (-(-x).exp_m1()).sqrt());
    Ok(-deficit.ln())
}

/// Minimum error for two equiprobable pure states with squared overlap
/// `overlap_sq`.
pub fn helstrom_error(overlap_sq: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&overlap_sq) {
        return Err(Error::domain(format!(
            "squared overlap must lie in [0, 1], got {overlap_sq}"
        )));
    }
    // ½(1 - sqrt(1 - o)) written as ½ o / (1 + sqrt(1 - o)).
    Ok(0.5 * overlap_sq / (1.0 + (1.0 - overlap_sq).sqrt()))
}

/// `K = -ln(2ε)`. A zero error maps to [`INFINITE_KNOWLEDGE`].
pub fn knowledge_from_error(epsilon: f64) -> Result<f64> {
    if epsilon == 0.0 {
        return Ok(INFINITE_KNOWLEDGE);
    }
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(Error::domain(format!(
            "error probability must lie in (0, 0.5], got {epsilon}"
        )));
    }
    Ok(-(2.0 * epsilon).ln())
}

/// Error probability paired with the knowledge it implies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnowledgeReport {
    pub epsilon: f64,
    pub knowledge: f64,
    /// Per-preparation errors `(ε0, ε1)` when known.
    pub per_state: Option<(f64, f64)>,
}

impl KnowledgeReport {
    pub fn from_error(epsilon: f64) -> Result<Self> {
        Ok(KnowledgeReport {
            epsilon,
            knowledge: knowledge_from_error(epsilon)?,
            per_state: None,
        })
    }

    pub fn from_state_errors(epsilon_0: f64, epsilon_1: f64) -> Result<Self> {
        let epsilon = 0.5 * (epsilon_0 + epsilon_1);
        Ok(KnowledgeReport {
            epsilon,
            knowledge: knowledge_from_error(epsilon)?,
            per_state: Some((epsilon_0, epsilon_1)),
        })
    }
}

/// Outgoing light modes: transmission, reflection and mirror loss of the
/// main (`M`) and the detuned orthogonally polarised (`D`) cavity mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    TransmittedMain,
    ReflectedMain,
    LostMain,
    TransmittedDetuned,
    ReflectedDetuned,
    LostDetuned,
}

impl Channel {
    pub const ALL: [Channel; 6] = [
        Channel::TransmittedMain,
        Channel::ReflectedMain,
        Channel::LostMain,
        Channel::TransmittedDetuned,
        Channel::ReflectedDetuned,
        Channel::LostDetuned,
    ];

    /// Channels reaching the photon counters.
    pub const DETECTABLE: [Channel; 4] = [
        Channel::TransmittedMain,
        Channel::ReflectedMain,
        Channel::TransmittedDetuned,
        Channel::ReflectedDetuned,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Real outgoing amplitudes (fractions of the incident field amplitude) for
/// each channel and qubit state. Relative phases are neglected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelAmplitudeTable {
    amplitudes: [[f64; 6]; 2],
}

/// Slack on the summed output power of one state.
const POWER_SUM_SLACK: f64 = 1e-9;

impl ChannelAmplitudeTable {
    pub fn new(dark: [f64; 6], bright: [f64; 6]) -> Result<Self> {
        for (label, row) in [("dark", &dark), ("bright", &bright)] {
            if row.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
                return Err(Error::domain(format!("{label} amplitudes must be finite and >= 0")));
            }
            let power: f64 = row.iter().map(|a| a * a).sum();
            if power > 1.0 + POWER_SUM_SLACK {
                return Err(Error::domain(format!(
                    "{label} output power {power} exceeds the incident power"
                )));
            }
        }
        Ok(ChannelAmplitudeTable {
            amplitudes: [dark, bright],
        })
    }

    /// Builds the table from power fractions.
    pub fn from_powers(dark: [f64; 6], bright: [f64; 6]) -> Result<Self> {
        if dark.iter().chain(bright.iter()).any(|p| !(*p >= 0.0)) {
            return Err(Error::domain("power fractions must be >= 0"));
        }
        Self::new(dark.map(f64::sqrt), bright.map(f64::sqrt))
    }

    /// Builds the table from rounded percentages.
    ///
    /// Rows that overshoot 100% by no more than `0.5` points (rounding of the
    /// printed table) are rescaled to unit power; larger excesses are rejected.
    pub fn from_rounded_percent(dark: [f64; 6], bright: [f64; 6]) -> Result<Self> {
        let normalise = |row: [f64; 6]| -> Result<[f64; 6]> {
            let total: f64 = row.iter().sum();
            if total > 100.5 {
                return Err(Error::domain(format!("row sums to {total}%, beyond rounding")));
            }
            let scale = if total > 100.0 { 1.0 / total } else { 0.01 };
            Ok(row.map(|p| p * scale))
        };
        Self::from_powers(normalise(dark)?, normalise(bright)?)
    }

    /// Power coupling factors of the reference fiber cavity, in percent
    /// (t_m, r_m, l_m, t_d, r_d, l_d).
    pub fn reference() -> Self {
        Self::from_rounded_percent([12.7, 41.4, 45.9, 0.0, 0.0, 0.0], [0.1, 99.0, 0.4, 0.1, 0.1, 0.4])
            .expect("reference table is valid")
    }

    /// Free-space fluorescence: the dark state transmits everything, the
    /// bright state scatters everything into a disjoint mode.
    pub fn ideal_fluorescence() -> Self {
        let mut dark = [0.0; 6];
        let mut bright = [0.0; 6];
        dark[Channel::TransmittedMain.index()] = 1.0;
        bright[Channel::LostMain.index()] = 1.0;
        Self::new(dark, bright).expect("valid")
    }

    pub fn amplitude(&self, state: crate::QubitState, channel: Channel) -> f64 {
        self.amplitudes[state.index()][channel.index()]
    }

    pub fn power(&self, state: crate::QubitState, channel: Channel) -> f64 {
        self.amplitude(state, channel).powi(2)
    }
}

/// `ζ = Σ (α0 − α1)²` over `subset`.
///
/// The full channel set gives the exponent of the maximum knowledge; the
/// detectable subset gives the exponent available to the experimenter.
pub fn zeta_from_channels(table: &ChannelAmplitudeTable, subset: &[Channel]) -> Result<f64> {
    if subset.is_empty() {
        return Err(Error::domain("channel subset must not be empty"));
    }
    let mut seen = [false; 6];
    let mut zeta = 0.0;
    for &c in subset {
        if std::mem::replace(&mut seen[c.index()], true) {
            continue;
        }
        let d = table.amplitudes[0][c.index()] - table.amplitudes[1][c.index()];
        zeta += d * d;
    }
    Ok(zeta)
}

/// Maximum knowledge `fln(ζ n)` held by the environment after `n` photons.
pub fn max_knowledge(zeta: f64, n: f64) -> Result<f64> {
    if !(zeta >= 0.0) || !(n >= 0.0) {
        return Err(Error::domain(format!("zeta and n must be >= 0, got {zeta}, {n}")));
    }
    fln(zeta * n)
}

/// Free-space single-pass bound `fln(2m)` for `m` scattered photons.
pub fn free_space_bound(m: f64) -> Result<f64> {
    if !(m >= 0.0) {
        return Err(Error::domain(format!("m must be >= 0, got {m}")));
    }
    fln(2.0 * m)
}

/// Cavity bound `fln(2Cm)` on knowledge per scattered photon count `m`.
pub fn cavity_bound_per_scatter(cooperativity: f64, m: f64) -> Result<f64> {
    if !(cooperativity >= 1.0) {
        return Err(Error::domain(format!(
            "cooperativity must be >= 1, got {cooperativity}"
        )));
    }
    if !(m >= 0.0) {
        return Err(Error::domain(format!("m must be >= 0, got {m}")));
    }
    fln(2.0 * cooperativity * m)
}

/// Single-mode transmission extinction `T1/T0 = 1/(4C²)`, capped at 1.
pub fn ideal_extinction(cooperativity: f64) -> Result<f64> {
    if !(cooperativity > 0.0) {
        return Err(Error::domain(format!("cooperativity must be > 0, got {cooperativity}")));
    }
    Ok((0.25 / (cooperativity * cooperativity)).min(1.0))
}

/// Scattered photons per incident photon for a single-mode cavity, `√T0/C`.
pub fn single_mode_scatter_ratio(t0: f64, cooperativity: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t0) {
        return Err(Error::domain(format!("T0 must lie in [0, 1], got {t0}")));
    }
    if !(cooperativity > 0.0) {
        return Err(Error::domain(format!("cooperativity must be > 0, got {cooperativity}")));
    }
    Ok(t0.sqrt() / cooperativity)
}

/// Symmetric two-mirror cavity described by the ratio of per-mirror loss to
/// per-mirror transmission.
///
/// On resonance the empty cavity has field transmission
/// `t = T_m/(T_m + L_m)` and field reflection `r = L_m/(T_m + L_m) = 1 − t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorModel {
    loss_to_transmission: f64,
}

impl MirrorModel {
    pub fn from_loss_ratio(loss_to_transmission: f64) -> Result<Self> {
        if !(loss_to_transmission >= 0.0 && loss_to_transmission.is_finite()) {
            return Err(Error::domain("mirror loss ratio must be finite and >= 0"));
        }
        Ok(MirrorModel { loss_to_transmission })
    }

    /// Calibrates the split from an empty-cavity power transmission.
    pub fn from_empty_transmission(t0: f64) -> Result<Self> {
        if !(t0 > 0.0 && t0 <= 1.0) {
            return Err(Error::domain(format!("T0 must lie in (0, 1], got {t0}")));
        }
        Self::from_loss_ratio(1.0 / t0.sqrt() - 1.0)
    }

    /// Split reproducing the reference empty-cavity triple 12.7 / 41.4 / 45.9 %.
    pub fn reference() -> Self {
        Self::from_empty_transmission(0.127).expect("valid")
    }

    pub fn loss_ratio(&self) -> f64 {
        self.loss_to_transmission
    }

    /// Same mirror transmission with the losses multiplied by `scale`.
    pub fn with_scaled_losses(&self, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::domain(format!("loss scale must be > 0, got {scale}")));
        }
        Self::from_loss_ratio(self.loss_to_transmission * scale)
    }

    pub fn field_transmission(&self) -> f64 {
        1.0 / (1.0 + self.loss_to_transmission)
    }

    pub fn empty_transmission(&self) -> f64 {
        self.field_transmission().powi(2)
    }

    pub fn empty_reflection(&self) -> f64 {
        (1.0 - self.field_transmission()).powi(2)
    }

    pub fn empty_loss(&self) -> f64 {
        1.0 - self.empty_transmission() - self.empty_reflection()
    }

    /// Linewidth of this cavity relative to `other` (same mirror transmission).
    pub fn linewidth_relative_to(&self, other: &MirrorModel) -> f64 {
        (1.0 + self.loss_to_transmission) / (1.0 + other.loss_to_transmission)
    }

    /// Response of the cavity with a resonant two-level atom of cooperativity
    /// `c`: the field amplitude inside drops by `1/(1 + 2C)`.
    pub fn single_mode_atom_response(&self, c: f64) -> (f64, f64) {
        let t1 = self.field_transmission() / (1.0 + 2.0 * c);
        (t1 * t1, (1.0 - t1).powi(2))
    }

    /// Channel table of the single-mode cavity with the given atomic
    /// cooperativity. The detuned mode carries no light.
    pub fn channel_table(&self, c: f64) -> Result<ChannelAmplitudeTable> {
        let t = self.field_transmission();
        let t1 = t / (1.0 + 2.0 * c);
        let loss = |tt: f64, rr: f64| (1.0 - tt * tt - rr * rr).max(0.0).sqrt();
        ChannelAmplitudeTable::new(
            [t, 1.0 - t, loss(t, 1.0 - t), 0.0, 0.0, 0.0],
            [t1, 1.0 - t1, loss(t1, 1.0 - t1), 0.0, 0.0, 0.0],
        )
    }
}

/// How the bright state changes the cavity response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AtomResponse {
    /// Two-level atom in a single-mode cavity, recomputed for the scenario.
    SingleMode,
    /// Fixed measured bright-state transmission and reflection.
    Measured { transmission: f64, reflection: f64 },
}

/// Everything [`improved_scenario`] keeps fixed while losses and detectors
/// change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioBase {
    pub cavity: CavityParams,
    pub mirrors: MirrorModel,
    pub atom: AtomResponse,
    /// Incident photons per scattered photon. `None` uses the single-mode
    /// value `C/√T0` of the scenario cavity.
    pub photons_per_scatter: Option<f64>,
}

impl ScenarioBase {
    /// Reference cavity with the measured bright-state response
    /// (T1 = 0.0024, R1 = 0.99) and the measured `n/m`.
    pub fn reference_measured(photons_per_scatter: Option<f64>) -> Self {
        ScenarioBase {
            cavity: CavityParams::reference(),
            mirrors: MirrorModel::reference(),
            atom: AtomResponse::Measured {
                transmission: 0.0024,
                reflection: 0.99,
            },
            photons_per_scatter,
        }
    }

    /// Reference cavity treated as an ideal single-mode system.
    pub fn reference_single_mode() -> Self {
        ScenarioBase {
            cavity: CavityParams::reference(),
            mirrors: MirrorModel::reference(),
            atom: AtomResponse::SingleMode,
            photons_per_scatter: None,
        }
    }
}

/// Result of [`improved_scenario`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioOutcome {
    pub cooperativity: f64,
    pub response: CavityResponse,
    /// Chernoff exponent per incident photon, detector efficiencies included.
    pub xi_per_photon: f64,
    pub photons_per_scatter: f64,
    /// Accessible knowledge exponent per scattered photon.
    pub exponent_per_scatter: f64,
}

/// Accessible-knowledge exponent per scattered photon after scaling the
/// mirror losses by `loss_scale` and changing the detector efficiencies.
///
/// The per-mirror transmission stays fixed, so the cavity linewidth and
/// hence the cooperativity follow the losses: `κ' = κ (1 + ℓ')/(1 + ℓ)`.
pub fn improved_scenario(loss_scale: f64, eta_t: f64, eta_r: f64, base: &ScenarioBase) -> Result<ScenarioOutcome> {
    if !(loss_scale > 0.0 && loss_scale <= 1.0) {
        return Err(Error::domain(format!(
            "loss scale must lie in (0, 1], got {loss_scale}"
        )));
    }
    let efficiencies = Efficiencies::new(eta_t, eta_r)?;
    let mirrors = base.mirrors.with_scaled_losses(loss_scale)?;
    let c = cooperativity(&base.cavity)? / mirrors.linewidth_relative_to(&base.mirrors);
    let (t1, r1) = match base.atom {
        AtomResponse::SingleMode => mirrors.single_mode_atom_response(c),
        AtomResponse::Measured {
            transmission,
            reflection,
        } => (transmission, reflection),
    };
    let response = CavityResponse::new(mirrors.empty_transmission(), t1, mirrors.empty_reflection(), r1)?;
    let (xi, _) = chernoff_exponent(&response, &efficiencies)?;
    let photons_per_scatter = match base.photons_per_scatter {
        Some(v) if v > 0.0 => v,
        Some(v) => return Err(Error::domain(format!("n/m must be > 0, got {v}"))),
        None => c / mirrors.field_transmission(),
    };
    Ok(ScenarioOutcome {
        cooperativity: c,
        response,
        xi_per_photon: xi,
        photons_per_scatter,
        exponent_per_scatter: xi * photons_per_scatter,
    })
}
