//! Atom-cavity models and the weak-probe quantities derived from them.
//!
//! Conventions: [`CavityParams`] rates are in 2π·MHz, half-width convention.
//! Hamiltonians are built in rad/μs, so every rate is multiplied by 2π. The
//! cavity field decays at κ, so its energy decays at 2κ, and the free-space
//! population decay is 2γ. Everything is written in the frame rotating at the
//! probe frequency, which is resonant with the main cavity mode and with the
//! probed atomic transition.
//!
//! The probe enters through one mirror with field coupling
//! `κ_m = κ·√T₀/2`, the value for which a symmetric cavity transmits `T₀`
//! when empty. A drive amplitude `ε` then corresponds to an incident flux
//! `ε²/(2κ_m)`.

use std::f64::consts::TAU;

use nalgebra::DVector;

use super::cg::cg_coefficient;
use super::solver::{
    evolve, stable_step, steady_state, CMatrix, CollapseOp, DecayChannel, DensityMatrix, LindbladModel, C64,
    EVOLVE_DIM_CAP,
};
use crate::bounds::CavityParams;
use crate::{Error, Result};

/// Largest empty-cavity photon number accepted as a weak probe.
pub const WEAK_DRIVE_LIMIT: f64 = 0.01;

/// Drive in units of κ. At C ≈ 100 the two-photon part of the transmitted
/// light only drops below the coherent part for drives well under 1e-3.
pub const DEFAULT_DRIVE: f64 = 2.5e-4;

const GROUND_F: i32 = 2;
const EXCITED_F: i32 = 3;
const GROUND_LEVELS: usize = 5;
const ATOM_LEVELS: usize = 12;

/// Interval (μs) over which the full model is driven before fluxes are read.
/// All coherences of the weakly driven system are damped by then, while the
/// Zeeman populations have barely moved.
const QUASI_STEADY_WINDOW: f64 = 0.2;

fn ground_index(m: i32) -> usize {
    (m + GROUND_F) as usize
}

fn excited_index(m: i32) -> usize {
    GROUND_LEVELS + (m + EXCITED_F) as usize
}

fn validate_common(drive_ratio: f64, n_max: usize, empty_transmission: f64) -> Result<()> {
    if !(drive_ratio > 0.0 && drive_ratio.is_finite()) {
        return Err(Error::domain(format!("drive must be > 0, got {drive_ratio}")));
    }
    if n_max < 1 {
        return Err(Error::domain("n_max must be >= 1"));
    }
    if !(empty_transmission > 0.0 && empty_transmission <= 1.0) {
        return Err(Error::domain(format!(
            "empty transmission must lie in (0, 1], got {empty_transmission}"
        )));
    }
    Ok(())
}

/// Two-level atom on resonance with a single cavity mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelSpec {
    pub cavity: CavityParams,
    /// Drive amplitude in units of κ; the empty cavity holds `drive_ratio²`
    /// photons.
    pub drive_ratio: f64,
    pub n_max: usize,
    pub empty_transmission: f64,
}

impl TwoLevelSpec {
    /// Lossless symmetric cavity: half the field decay leaves through each
    /// mirror.
    pub fn lossless(cavity: CavityParams, drive_ratio: f64) -> Self {
        TwoLevelSpec {
            cavity,
            drive_ratio,
            n_max: 1,
            empty_transmission: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.cavity.validate()?;
        validate_common(self.drive_ratio, self.n_max, self.empty_transmission)
    }
}

/// Full Zeeman structure of an F=2 → F'=3 transition and two orthogonally
/// polarised cavity modes.
///
/// The main mode is π-polarised and resonant. The second mode is linearly
/// polarised perpendicular to it, so it drives σ⁺ and σ⁻ with weight `1/√2`
/// each, and is detuned by `second_mode_detuning`. `cavity.g` is the
/// coupling on the probed `|2,0⟩ → |3,0⟩` transition; other transitions carry
/// their Clebsch-Gordan weight relative to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomCavitySpec {
    pub cavity: CavityParams,
    /// 2π·MHz.
    pub second_mode_detuning: f64,
    /// Second-mode single-photon coupling relative to the main mode. Both
    /// modes share one mode volume, so 1 is the geometric value.
    pub second_mode_coupling_scale: f64,
    pub drive_ratio: f64,
    pub n_max: usize,
    pub empty_transmission: f64,
}

impl AtomCavitySpec {
    pub fn reference() -> Self {
        AtomCavitySpec {
            cavity: CavityParams::reference(),
            second_mode_detuning: 540.0,
            second_mode_coupling_scale: 1.0,
            drive_ratio: DEFAULT_DRIVE,
            n_max: 1,
            empty_transmission: 0.13,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.cavity.validate()?;
        validate_common(self.drive_ratio, self.n_max, self.empty_transmission)?;
        if !self.second_mode_detuning.is_finite() {
            return Err(Error::domain("second-mode detuning must be finite"));
        }
        if !(self.second_mode_coupling_scale >= 0.0 && self.second_mode_coupling_scale.is_finite()) {
            return Err(Error::domain("second-mode coupling scale must be >= 0"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        ATOM_LEVELS * (self.n_max + 1) * (self.n_max + 1)
    }

    /// The two-level reduction on the probed transition.
    pub fn two_level(&self) -> TwoLevelSpec {
        TwoLevelSpec {
            cavity: self.cavity,
            drive_ratio: self.drive_ratio,
            n_max: self.n_max,
            empty_transmission: self.empty_transmission,
        }
    }
}

/// Bosonic annihilation operator truncated at `n_max` photons.
fn annihilation(n_max: usize) -> CMatrix {
    let d = n_max + 1;
    let mut a = CMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = C64::from((n as f64).sqrt());
    }
    a
}

fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

fn two_level_model(cavity: &CavityParams, g: f64, drive_ratio: f64, n_max: usize) -> Result<LindbladModel> {
    let f = n_max + 1;
    let kappa = TAU * cavity.kappa;
    let gamma = TAU * cavity.gamma;
    let g = TAU * g;
    let eps = drive_ratio * kappa;
    let a = kron(&identity(2), &annihilation(n_max));
    let mut sm_atom = CMatrix::zeros(2, 2);
    sm_atom[(0, 1)] = C64::from(1.0);
    let sm = kron(&sm_atom, &identity(f));
    let coupling = &a.adjoint() * &sm;
    let drive = &a + a.adjoint();
    let h = (&coupling + coupling.adjoint()) * C64::from(g) + drive * C64::from(eps);
    LindbladModel::new(
        h,
        vec![
            CollapseOp::new("cavity", DecayChannel::MainMode, a, 2.0 * kappa),
            CollapseOp::new("spontaneous", DecayChannel::FreeSpace, sm, 2.0 * gamma),
        ],
    )
}

/// Two-level atom plus one resonant mode, dimension `2(n_max+1)`.
///
/// Basis index `atom·(n_max+1) + photons` with atom 0 the ground state.
pub fn build_two_level_model(cavity: &CavityParams, drive_ratio: f64, n_max: usize) -> Result<LindbladModel> {
    cavity.validate()?;
    validate_common(drive_ratio, n_max, 1.0)?;
    two_level_model(cavity, cavity.g, drive_ratio, n_max)
}

/// Atomic operator `Σ_m w(m) |3, m+q⟩⟨2, m|` with Clebsch-Gordan weights.
fn raising(q: i32) -> CMatrix {
    let mut op = CMatrix::zeros(ATOM_LEVELS, ATOM_LEVELS);
    for m in -GROUND_F..=GROUND_F {
        let mp = m + q;
        if mp.abs() > EXCITED_F {
            continue;
        }
        op[(excited_index(mp), ground_index(m))] = C64::from(cg_coefficient(GROUND_F, m, q, EXCITED_F, mp));
    }
    op
}

/// Full model, dimension `12 (n_max+1)²`.
///
/// Basis index `(atom·(n_max+1) + main)·(n_max+1) + second`, atom levels
/// ordered `|2,−2⟩ … |2,2⟩, |3,−3⟩ … |3,3⟩`.
pub fn build_full_model(spec: &AtomCavitySpec) -> Result<LindbladModel> {
    spec.validate()?;
    let dim = spec.dim();
    if dim > EVOLVE_DIM_CAP {
        return Err(Error::DimensionCap {
            dim,
            cap: EVOLVE_DIM_CAP,
        });
    }
    let f = spec.n_max + 1;
    let kappa = TAU * spec.cavity.kappa;
    let gamma = TAU * spec.cavity.gamma;
    let delta = TAU * spec.second_mode_detuning;
    let g_unit = TAU * spec.cavity.g / cg_coefficient(GROUND_F, 0, 0, EXCITED_F, 0);
    let eps = spec.drive_ratio * kappa;

    let a1 = annihilation(spec.n_max);
    let id_atom = identity(ATOM_LEVELS);
    let id_f = identity(f);
    let a = kron(&kron(&id_atom, &a1), &id_f);
    let b = kron(&kron(&id_atom, &id_f), &a1);
    let lift = |atom: &CMatrix| kron(&kron(atom, &id_f), &id_f);

    let pi_up = lift(&raising(0));
    // Linear polarisation perpendicular to the quantisation axis.
    let perp_up = (lift(&raising(-1)) - lift(&raising(1))) * C64::from(std::f64::consts::FRAC_1_SQRT_2);

    let main = &pi_up * &a;
    let second = &perp_up * &b;
    let mut h = (&main + main.adjoint()) * C64::from(g_unit)
        + (&second + second.adjoint()) * C64::from(g_unit * spec.second_mode_coupling_scale)
        + (&a + a.adjoint()) * C64::from(eps);
    h += (b.adjoint() * &b) * C64::from(delta);

    let mut collapse = vec![
        CollapseOp::new("main mode", DecayChannel::MainMode, a, 2.0 * kappa),
        CollapseOp::new("second mode", DecayChannel::SecondMode, b, 2.0 * kappa),
    ];
    for (q, name) in [(-1, "sigma-"), (0, "pi"), (1, "sigma+")] {
        collapse.push(CollapseOp::new(
            format!("spontaneous {name}"),
            DecayChannel::FreeSpace,
            lift(&raising(q)).adjoint(),
            2.0 * gamma,
        ));
    }
    LindbladModel::new(h, collapse)
}

/// Photon fluxes (per μs) under a weak probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakDriveResponse {
    pub incident: f64,
    /// Leaving through the output mirror, both polarisations.
    pub transmitted: f64,
    pub free_space: f64,
    /// Emission into the detuned mode, through every port.
    pub second_mode: f64,
    pub main_photons: f64,
    pub second_photons: f64,
}

impl WeakDriveResponse {
    pub fn transmission(&self) -> f64 {
        self.transmitted / self.incident
    }
}

/// Scattered photons per incident photon, split by where they go.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterTally {
    pub free_space: f64,
    pub second_mode: f64,
}

impl ScatterTally {
    pub fn total(&self) -> f64 {
        self.free_space + self.second_mode
    }
}

/// A model that can report its weak-probe response with the atom in the
/// bright state and with the cavity effectively empty.
pub trait ReadoutModel {
    fn bright_response(&self) -> Result<WeakDriveResponse>;
    fn empty_response(&self) -> Result<WeakDriveResponse>;
}

fn mirror_coupling(kappa: f64, empty_transmission: f64) -> f64 {
    kappa * empty_transmission.sqrt() / 2.0
}

fn check_regime(photons: f64) -> Result<()> {
    if photons >= WEAK_DRIVE_LIMIT {
        return Err(Error::Regime {
            photons,
            limit: WEAK_DRIVE_LIMIT,
        });
    }
    Ok(())
}

fn response(
    model: &LindbladModel,
    rho: &DensityMatrix,
    main: &CMatrix,
    second: Option<&CMatrix>,
    kappa: f64,
    drive_ratio: f64,
    empty_transmission: f64,
) -> WeakDriveResponse {
    let kappa_m = mirror_coupling(kappa, empty_transmission);
    let eps = drive_ratio * kappa;
    let main_photons = rho.expectation(&(main.adjoint() * main)).re;
    let second_photons = second.map_or(0.0, |b| rho.expectation(&(b.adjoint() * b)).re);
    WeakDriveResponse {
        incident: eps * eps / (2.0 * kappa_m),
        transmitted: 2.0 * kappa_m * (main_photons + second_photons),
        free_space: model.flux(rho, DecayChannel::FreeSpace),
        second_mode: model.flux(rho, DecayChannel::SecondMode),
        main_photons,
        second_photons,
    }
}

fn two_level_response(spec: &TwoLevelSpec, g: f64) -> Result<WeakDriveResponse> {
    spec.validate()?;
    let model = two_level_model(&spec.cavity, g, spec.drive_ratio, spec.n_max)?;
    let rho = steady_state(&model)?;
    let a = kron(&identity(2), &annihilation(spec.n_max));
    let r = response(
        &model,
        &rho,
        &a,
        None,
        TAU * spec.cavity.kappa,
        spec.drive_ratio,
        spec.empty_transmission,
    );
    Ok(r)
}

impl ReadoutModel for TwoLevelSpec {
    fn bright_response(&self) -> Result<WeakDriveResponse> {
        let empty = self.empty_response()?;
        check_regime(empty.main_photons)?;
        two_level_response(self, self.cavity.g)
    }

    fn empty_response(&self) -> Result<WeakDriveResponse> {
        two_level_response(self, 0.0)
    }
}

impl ReadoutModel for AtomCavitySpec {
    /// Driven from `|2,0⟩` with both modes empty until the transients have
    /// died out.
    fn bright_response(&self) -> Result<WeakDriveResponse> {
        let empty = self.empty_response()?;
        check_regime(empty.main_photons)?;
        let model = build_full_model(self)?;
        let f = self.n_max + 1;
        let start = ground_index(0) * f * f;
        let rho0 = DensityMatrix::basis(model.dim(), start)?;
        let dt = stable_step(&model);
        let rho = evolve(&model, &rho0, QUASI_STEADY_WINDOW, dt)?;
        let id_atom = identity(ATOM_LEVELS);
        let id_f = identity(f);
        let a1 = annihilation(self.n_max);
        let a = kron(&kron(&id_atom, &a1), &id_f);
        let b = kron(&kron(&id_atom, &id_f), &a1);
        Ok(response(
            &model,
            &rho,
            &a,
            Some(&b),
            TAU * self.cavity.kappa,
            self.drive_ratio,
            self.empty_transmission,
        ))
    }

    fn empty_response(&self) -> Result<WeakDriveResponse> {
        self.validate()?;
        self.two_level().empty_response()
    }
}

/// `T₁/T₀`: transmission with the atom in the bright state over the empty
/// cavity transmission.
pub fn extinction_ratio(model: &impl ReadoutModel) -> Result<f64> {
    let bright = model.bright_response()?;
    let empty = model.empty_response()?;
    Ok(bright.transmission() / empty.transmission())
}

/// Spontaneously scattered photons per incident photon, `m/n`.
pub fn scatter_fraction(model: &impl ReadoutModel) -> Result<ScatterTally> {
    let r = model.bright_response()?;
    Ok(ScatterTally {
        free_space: r.free_space / r.incident,
        second_mode: r.second_mode / r.incident,
    })
}

/// `Γ_P/Γ`: emission into the detuned mode over free-space emission.
pub fn purcell_ratio(model: &impl ReadoutModel) -> Result<f64> {
    let r = model.bright_response()?;
    if r.free_space == 0.0 {
        return Ok(0.0);
    }
    Ok(r.second_mode / r.free_space)
}

/// Expectation of the full-model atomic projector onto `|2,0⟩`.
pub fn bright_state_population(spec: &AtomCavitySpec, rho: &DensityMatrix) -> f64 {
    let f = spec.n_max + 1;
    let mut proj = DVector::<C64>::zeros(ATOM_LEVELS);
    proj[ground_index(0)] = C64::from(1.0);
    let atom = &proj * proj.adjoint();
    rho.expectation(&kron(&kron(&atom, &identity(f)), &identity(f))).re
}
