//! Density matrices and the Lindblad master equation.
//!
//! `dρ/dt = −i[H, ρ] + Σ_k γ_k (L_k ρ L_k† − ½{L_k† L_k, ρ})`
//!
//! Operators are kept as dense matrices. The integrator converts them to
//! coordinate lists once per call, since the atom-cavity operators are mostly
//! zeros and the products dominate the cost.

use nalgebra::{Complex, DMatrix, DVector};

use crate::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

const I: C64 = C64::new(0.0, 1.0);

/// Largest dimension accepted by [`evolve`].
pub const EVOLVE_DIM_CAP: usize = 128;
/// Largest dimension accepted by [`steady_state`]; the vectorised
/// Liouvillian has `d⁴` entries.
pub const STEADY_STATE_DIM_CAP: usize = 50;

const TRACE_DRIFT_LIMIT: f64 = 1e-6;
const HERMITICITY_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-9;
const POSITIVITY_TOL: f64 = 1e-8;

/// Which physical channel a collapse operator feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecayChannel {
    FreeSpace,
    MainMode,
    SecondMode,
    Other,
}

#[derive(Debug, Clone)]
pub struct CollapseOp {
    pub label: String,
    pub channel: DecayChannel,
    /// Jump operator without the rate.
    pub op: CMatrix,
    /// Rate multiplying the dissipator, in rad/μs.
    pub rate: f64,
}

impl CollapseOp {
    pub fn new(label: impl Into<String>, channel: DecayChannel, op: CMatrix, rate: f64) -> Self {
        CollapseOp {
            label: label.into(),
            channel,
            op,
            rate,
        }
    }
}

/// Hamiltonian (rad/μs) and dissipators.
#[derive(Debug, Clone)]
pub struct LindbladModel {
    hamiltonian: CMatrix,
    collapse: Vec<CollapseOp>,
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn hermiticity_error(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

impl LindbladModel {
    pub fn new(hamiltonian: CMatrix, collapse: Vec<CollapseOp>) -> Result<Self> {
        let d = hamiltonian.nrows();
        if d == 0 || hamiltonian.ncols() != d {
            return Err(Error::domain("Hamiltonian must be square and non-empty"));
        }
        let scale = max_abs(&hamiltonian).max(1.0);
        if hermiticity_error(&hamiltonian) > 1e-12 * scale {
            return Err(Error::domain("Hamiltonian is not Hermitian"));
        }
        for c in &collapse {
            if c.op.nrows() != d || c.op.ncols() != d {
                return Err(Error::domain(format!(
                    "collapse operator {} has the wrong shape",
                    c.label
                )));
            }
            if !(c.rate >= 0.0 && c.rate.is_finite()) {
                return Err(Error::domain(format!("rate of {} must be >= 0", c.label)));
            }
        }
        Ok(LindbladModel { hamiltonian, collapse })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    pub fn collapse_ops(&self) -> &[CollapseOp] {
        &self.collapse
    }

    /// `L(ρ)` evaluated with dense products.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let h = &self.hamiltonian;
        let mut out = (h * rho - rho * h) * (-I);
        for c in &self.collapse {
            let l = &c.op;
            let ld = l.adjoint();
            let k = &ld * l;
            out += (l * rho * &ld - (&k * rho + rho * &k) * C64::from(0.5)) * C64::from(c.rate);
        }
        out
    }

    /// Photon emission rate `Σ γ_k ⟨L_k† L_k⟩` into one channel.
    pub fn flux(&self, rho: &DensityMatrix, channel: DecayChannel) -> f64 {
        self.collapse
            .iter()
            .filter(|c| c.channel == channel)
            .map(|c| c.rate * rho.expectation(&(c.op.adjoint() * &c.op)).re)
            .sum()
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    /// Validates the invariants to within the solver tolerances.
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::domain("density matrix must be square and non-empty"));
        }
        let rho = DensityMatrix(m);
        if rho.hermiticity_error() > HERMITICITY_TOL {
            return Err(Error::domain("density matrix is not Hermitian"));
        }
        if (rho.trace() - 1.0).abs() > TRACE_TOL {
            return Err(Error::domain(format!("trace is {}, not 1", rho.trace())));
        }
        if rho.min_eigenvalue() < -POSITIVITY_TOL {
            return Err(Error::domain("density matrix has a negative eigenvalue"));
        }
        Ok(rho)
    }

    /// `|ψ⟩⟨ψ|` for a normalised copy of `psi`.
    pub fn pure(psi: &DVector<C64>) -> Result<Self> {
        let norm = psi.norm();
        if !(norm > 0.0) {
            return Err(Error::domain("state vector is zero"));
        }
        let v = psi / C64::from(norm);
        Ok(DensityMatrix(&v * v.adjoint()))
    }

    /// `|k⟩⟨k|` in dimension `d`.
    pub fn basis(d: usize, k: usize) -> Result<Self> {
        if k >= d {
            return Err(Error::domain(format!("basis index {k} out of range for dimension {d}")));
        }
        let mut m = CMatrix::zeros(d, d);
        m[(k, k)] = C64::from(1.0);
        Ok(DensityMatrix(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let sym = (&self.0 + self.0.adjoint()) * C64::from(0.5);
        sym.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn population(&self, k: usize) -> f64 {
        self.0[(k, k)].re
    }

    /// `Tr(ρ A)`.
    pub fn expectation(&self, a: &CMatrix) -> C64 {
        let mut s = C64::from(0.0);
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                s += self.0[(i, j)] * a[(j, i)];
            }
        }
        s
    }

    /// Largest entry-wise distance.
    pub fn distance(&self, other: &DensityMatrix) -> f64 {
        max_abs(&(&self.0 - &other.0))
    }
}

/// Coordinate-list copy of an operator.
struct Sparse {
    entries: Vec<(usize, usize, C64)>,
}

impl Sparse {
    fn from_dense(m: &CMatrix) -> Self {
        let mut entries = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if v != C64::from(0.0) {
                    entries.push((i, j, v));
                }
            }
        }
        Sparse { entries }
    }

    /// `out += A X`.
    fn mul_left_acc(&self, x: &CMatrix, out: &mut CMatrix) {
        let n = x.ncols();
        for &(i, k, a) in &self.entries {
            for j in 0..n {
                out[(i, j)] += a * x[(k, j)];
            }
        }
    }

    /// `out += X A†`.
    fn mul_right_adj_acc(&self, x: &CMatrix, out: &mut CMatrix) {
        let n = x.nrows();
        for &(j, k, a) in &self.entries {
            let ac = a.conj();
            for i in 0..n {
                out[(i, j)] += ac * x[(i, k)];
            }
        }
    }
}

/// Pre-processed right-hand side: `H_eff = H − (i/2) Σ γ L†L` and the
/// rate-weighted jump operators.
struct Generator {
    h_eff: Sparse,
    jumps: Vec<Sparse>,
    scratch: CMatrix,
}

impl Generator {
    fn new(model: &LindbladModel) -> Self {
        let mut h_eff = model.hamiltonian.clone();
        let mut jumps = Vec::new();
        for c in &model.collapse {
            if c.rate == 0.0 {
                continue;
            }
            let l = &c.op * C64::from(c.rate.sqrt());
            h_eff -= (l.adjoint() * &l) * (I * 0.5);
            jumps.push(Sparse::from_dense(&l));
        }
        let d = model.dim();
        Generator {
            h_eff: Sparse::from_dense(&h_eff),
            jumps,
            scratch: CMatrix::zeros(d, d),
        }
    }

    /// `dρ = M + M† + Σ L ρ L†` with `M = −i H_eff ρ`, valid for Hermitian ρ.
    fn rhs(&mut self, rho: &CMatrix, out: &mut CMatrix) {
        out.fill(C64::from(0.0));
        self.h_eff.mul_left_acc(rho, out);
        *out *= -I;
        let m_adj = out.adjoint();
        *out += m_adj;
        for l in &self.jumps {
            self.scratch.fill(C64::from(0.0));
            l.mul_left_acc(rho, &mut self.scratch);
            l.mul_right_adj_acc(&self.scratch, out);
        }
    }

    /// Row-sum bound on the spectral radius of the generator.
    fn rate_bound(&self, d: usize) -> f64 {
        let mut rows = vec![0.0; d];
        for &(i, _, v) in &self.h_eff.entries {
            rows[i] += v.norm();
        }
        let h = rows.iter().copied().fold(0.0, f64::max);
        let mut jump_rows = vec![0.0; d];
        for l in &self.jumps {
            for &(i, _, v) in &l.entries {
                jump_rows[i] += v.norm_sqr();
            }
        }
        2.0 * h + jump_rows.iter().copied().fold(0.0, f64::max)
    }
}

fn hermitize(m: &mut CMatrix) {
    let adj = m.adjoint();
    *m += adj;
    *m *= C64::from(0.5);
}

fn check_dim(d: usize, cap: usize) -> Result<()> {
    if d > cap {
        return Err(Error::DimensionCap { dim: d, cap });
    }
    Ok(())
}

/// Trace error, or how far a population has left `[0, 1]`. RK4 conserves
/// the trace of a trace-preserving generator at any step size, so an
/// unstable step shows up first in the populations.
fn step_drift(rho: &CMatrix, trace0: f64) -> f64 {
    let mut drift = (rho.trace().re - trace0).abs();
    for i in 0..rho.nrows() {
        let p = rho[(i, i)].re;
        drift = drift.max(-p).max(p - trace0);
    }
    drift
}

/// Fixed-step fourth-order Runge-Kutta integration to `t_final` (μs).
///
/// The last step is shortened to land on `t_final`. The state is Hermitized
/// after every step. Fails with [`Error::StepSize`] once the trace has drifted
/// by more than 1e-6 or a population leaves `[0, 1]` by that much.
pub fn evolve(model: &LindbladModel, rho0: &DensityMatrix, t_final: f64, dt: f64) -> Result<DensityMatrix> {
    evolve_observed(model, rho0, t_final, dt, |_, _| {})
}

/// [`evolve`] with a callback receiving `(t, ρ(t))` after every step.
pub fn evolve_observed<F>(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    t_final: f64,
    dt: f64,
    mut observe: F,
) -> Result<DensityMatrix>
where
    F: FnMut(f64, &CMatrix),
{
    let d = model.dim();
    check_dim(d, EVOLVE_DIM_CAP)?;
    if rho0.dim() != d {
        return Err(Error::domain(format!(
            "state dimension {} does not match model {d}",
            rho0.dim()
        )));
    }
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::domain("t_final must be >= 0"));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::domain("dt must be > 0"));
    }
    let mut gen = Generator::new(model);
    let mut rho = rho0.0.clone();
    let trace0 = rho.trace().re;
    let mut k1 = CMatrix::zeros(d, d);
    let mut k2 = CMatrix::zeros(d, d);
    let mut k3 = CMatrix::zeros(d, d);
    let mut k4 = CMatrix::zeros(d, d);
    let steps = (t_final / dt).ceil() as usize;
    let mut t = 0.0;
    for step in 0..steps {
        let h = if step + 1 == steps { t_final - t } else { dt };
        let hc = C64::from(h);
        gen.rhs(&rho, &mut k1);
        let tmp = &rho + &k1 * (hc * 0.5);
        gen.rhs(&tmp, &mut k2);
        let tmp = &rho + &k2 * (hc * 0.5);
        gen.rhs(&tmp, &mut k3);
        let tmp = &rho + &k3 * hc;
        gen.rhs(&tmp, &mut k4);
        rho += (&k1 + &k2 * C64::from(2.0) + &k3 * C64::from(2.0) + &k4) * (hc / 6.0);
        hermitize(&mut rho);
        t += h;
        let drift = step_drift(&rho, trace0);
        if !(drift <= TRACE_DRIFT_LIMIT) {
            return Err(Error::StepSize { drift });
        }
        observe(t, &rho);
    }
    Ok(DensityMatrix(rho))
}

/// A step size inside the RK4 stability region for this model.
pub fn stable_step(model: &LindbladModel) -> f64 {
    let gen = Generator::new(model);
    let bound = gen.rate_bound(model.dim());
    if bound > 0.0 {
        1.0 / bound
    } else {
        1.0
    }
}

/// Kronecker product.
fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == C64::from(0.0) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Vectorised Liouvillian for column-stacked `vec(ρ)`, using
/// `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.
pub fn liouvillian(model: &LindbladModel) -> CMatrix {
    let d = model.dim();
    let id = CMatrix::identity(d, d);
    let h = &model.hamiltonian;
    let mut l = (kron(&id, h) - kron(&h.transpose(), &id)) * (-I);
    for c in &model.collapse {
        let op = &c.op;
        let k = op.adjoint() * op;
        let term = kron(&op.map(|z| z.conj()), op) - (kron(&id, &k) + kron(&k.transpose(), &id)) * C64::from(0.5);
        l += term * C64::from(c.rate);
    }
    l
}

/// Unique solution of `L(ρ) = 0` with unit trace.
///
/// One row of the vectorised Liouvillian is replaced by the trace condition
/// and the system is solved by LU decomposition. The result is accepted when
/// `max|L(ρ)|` is below 1e-10 relative to the largest generator entry.
pub fn steady_state(model: &LindbladModel) -> Result<DensityMatrix> {
    let d = model.dim();
    check_dim(d, STEADY_STATE_DIM_CAP)?;
    let mut l = liouvillian(model);
    let scale = max_abs(&l).max(1.0);
    for col in 0..d * d {
        l[(0, col)] = C64::from(0.0);
    }
    for i in 0..d {
        l[(0, i * d + i)] = C64::from(scale);
    }
    let mut b = DVector::<C64>::zeros(d * d);
    b[0] = C64::from(scale);
    let x = l.lu().solve(&b).ok_or(Error::MultipleSteadyStates)?;
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::MultipleSteadyStates);
    }
    let mut rho = CMatrix::from_column_slice(d, d, x.as_slice());
    hermitize(&mut rho);
    let residual = max_abs(&model.apply(&rho));
    if residual > 1e-10 * scale {
        return Err(Error::MultipleSteadyStates);
    }
    Ok(DensityMatrix(rho))
}
