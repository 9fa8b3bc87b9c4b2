//! Acceptance report: one PASS/FAIL line per criterion, non-zero exit when
//! any criterion fails.

use std::f64::consts::TAU;
use std::process::{Command as Process, ExitCode};
use std::time::{Duration, Instant};

use cavity_readout::bounds::{cooperativity, zeta_from_channels, CavityParams, Channel, ChannelAmplitudeTable};
use cavity_readout::detection::{
    chernoff_exponent, chernoff_vs_l1_gap, closed_form_xi_half, empirical_error, l1_error_auto, CavityResponse,
    CountDistributions, Efficiencies, JumpModel,
};
use cavity_readout::lindblad::solver::{evolve_observed, stable_step, CMatrix, C64};
use cavity_readout::lindblad::{
    branching_ratio, cg_coefficient, evolve, steady_state, AtomCavitySpec, CollapseOp, DecayChannel, DensityMatrix,
    LindbladModel, ReadoutModel, TwoLevelSpec, WeakDriveResponse, DEFAULT_DRIVE,
};
use cavity_readout::rng;
use cavity_readout::scattering::{knowledge_exponent_per_scatter, scatter_per_photon};
use cavity_readout::zeno::{
    apply_imperfections, bloch_transfer, coherence_decay, infer_n_tilde, integrate_bloch, mc_zeno_transfer, BlochState,
    ZenoConfig,
};
use cavity_readout::QubitState;
use cavity_readout_cli::commands::{self, zeno_a0};
use cavity_readout_cli::config::{ScenarioConfig, ScenarioName, TransferMeasurement};
use rand::Rng;
use rand_distr::{Distribution, Normal};

const ZETA_FULL: (f64, f64) = (0.612, 0.005);
const ZETA_DETECTABLE: (f64, f64) = (0.231, 0.005);
const XI_HALF: (f64, f64) = (0.109, 0.003);
const XI_EFFICIENCIES: (f64, f64) = (0.039, 0.053);
const MC_SIGMAS: f64 = 3.0;
const GAP_LIMIT: f64 = 0.02;
const COHERENCE_TOL: f64 = 1e-6;
const ROUND_TRIP_TOL: f64 = 1e-5;
const SCATTER_RATIO_REL: f64 = 1e-3;
const EXPONENT_MAX: (f64, f64) = (87.5, 0.5);
const EXPONENT_ACC: (f64, f64) = (5.44, 0.05);
const ADVANTAGE: (f64, f64) = (2.7, 0.05);
const TRACE_TOL: f64 = 1e-9;
const HERMITICITY_TOL: f64 = 1e-10;
const POSITIVITY_TOL: f64 = 1e-8;
const DECAY_TOL: f64 = 1e-6;
const CAVITY_TOL: f64 = 1e-4;
const EXTINCTION_REL: f64 = 0.05;
const SCATTER_REL: f64 = 0.10;
const PURCELL: (f64, f64) = (2.6, 0.6);
const M_PER_N_FACTOR: f64 = 1.5;
const TRUNCATION_REL: f64 = 0.05;
const SUM_RULE_TOL: f64 = 1e-12;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within((target, tol): (f64, f64), v: f64) -> bool {
    (v - target).abs() <= tol
}

fn measured_table() -> ChannelAmplitudeTable {
    ChannelAmplitudeTable::reference()
}

fn zeta_cross_check() -> Outcome {
    let table = measured_table();
    let start = Instant::now();
    let full = zeta_from_channels(&table, &Channel::ALL).unwrap();
    let detectable = zeta_from_channels(&table, &Channel::DETECTABLE).unwrap();
    let took = start.elapsed();
    check(
        within(ZETA_FULL, full) && within(ZETA_DETECTABLE, detectable) && took < Duration::from_millis(1),
        format!("zeta={full:.4} detectable={detectable:.4} in {took:?}"),
    )
}

fn chernoff_values() -> (f64, f64) {
    let r = CavityResponse::new(0.13, 0.0024, 0.42, 0.99).unwrap();
    let half = closed_form_xi_half(&r);
    let (xi, _) = chernoff_exponent(&r, &Efficiencies::new(0.47, 0.31).unwrap()).unwrap();
    (half, xi)
}

fn chernoff_exponents() -> Outcome {
    let (half, xi) = chernoff_values();
    check(
        within(XI_HALF, half) && (XI_EFFICIENCIES.0..=XI_EFFICIENCIES.1).contains(&xi),
        format!("xi(s=1/2)={half:.4} xi(efficiencies)={xi:.4}"),
    )
}

fn exponent_ordering() -> Outcome {
    let table = measured_table();
    let (xi, _) = chernoff_values();
    let acc = zeta_from_channels(&table, &Channel::DETECTABLE).unwrap();
    let full = zeta_from_channels(&table, &Channel::ALL).unwrap();
    check(xi < acc && acc < full, format!("{xi:.4} < {acc:.4} < {full:.4}"))
}

fn paper_counts() -> CountDistributions {
    CountDistributions::new(&CavityResponse::reference(), &Efficiencies::reference())
}

fn detection_mc() -> Outcome {
    let d = paper_counts();
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, n) in [5.0, 20.0, 40.0].into_iter().enumerate() {
        let report = empirical_error(100_000, n, &d, &JumpModel::none(), 1000 + i as u64).unwrap();
        let exact = l1_error_auto(&d, n).unwrap();
        let z = (report.epsilon - exact) / report.binomial_sigma();
        pass &= z.abs() <= MC_SIGMAS;
        parts.push(format!("n={n}: z={z:+.2}"));
    }
    let took = start.elapsed();
    pass &= took < Duration::from_secs(30);
    check(pass, format!("{} in {took:.2?}", parts.join(", ")))
}

fn chernoff_gap() -> Outcome {
    let d = CountDistributions::new(&CavityResponse::reference(), &Efficiencies::perfect());
    let gaps: Vec<(f64, f64)> = [1.0, 10.0, 40.0]
        .iter()
        .map(|&n| (n, chernoff_vs_l1_gap(&d, n).unwrap()))
        .collect();
    let pass = gaps.iter().all(|(_, g)| *g < GAP_LIMIT);
    let detail = gaps
        .iter()
        .map(|(n, g)| format!("n={n}: gap={g:.4}"))
        .collect::<Vec<_>>()
        .join(", ");
    check(pass, format!("{detail} (limit {GAP_LIMIT})"))
}

fn zeno_consistency() -> Outcome {
    let bright = ZenoConfig::reference(QubitState::Bright);
    let free = ZenoConfig { rabi: 0.0, ..bright };
    let start = BlochState { u: 1.0, v: 0.0, w: 0.0 };
    let mut worst_coherence: f64 = 0.0;
    for n_tilde in [0.1, 1.0, 5.0, 20.0] {
        let (end, _) = integrate_bloch(&free, n_tilde, start).unwrap();
        worst_coherence =
            worst_coherence.max((2.0 * end.coherence_magnitude() - coherence_decay(n_tilde).unwrap()).abs());
    }

    let mut worst_z: f64 = 0.0;
    for (i, n_tilde) in [0.1, 1.0, 5.0, 20.0].into_iter().enumerate() {
        let mc = mc_zeno_transfer(&bright, n_tilde, 100_000, 77 + i as u64).unwrap();
        let exact = bloch_transfer(&bright, n_tilde).unwrap();
        worst_z = worst_z.max(((mc.mean - exact) / mc.sigma.max(1e-12)).abs());
    }

    let mut worst_trip: f64 = 0.0;
    for n_tilde in [0.05, 0.5, 2.0, 8.0, 30.0] {
        let p = apply_imperfections(bloch_transfer(&bright, n_tilde).unwrap(), &bright);
        worst_trip = worst_trip.max((infer_n_tilde(p, &bright).unwrap() - n_tilde).abs());
    }

    let mut cfg = ScenarioConfig::built_in(ScenarioName::Paper).unwrap();
    let noise = Normal::new(0.0, 0.01).unwrap();
    let mut r = rng::stream(37, 0);
    cfg.zeno.measurements = [1.0, 2.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0]
        .iter()
        .map(|&n| {
            let p = apply_imperfections(bloch_transfer(&bright, 0.37 * n).unwrap(), &bright);
            TransferMeasurement {
                n,
                transfer: p + noise.sample(&mut r),
                sigma: 0.01,
            }
        })
        .collect();
    let (a0, sigma) = zeno_a0(&cfg).unwrap();
    let sigma = sigma.unwrap();
    let exponent = 2.0 * cfg.zeno.a0;

    check(
        worst_coherence <= COHERENCE_TOL
            && worst_z <= MC_SIGMAS
            && worst_trip < ROUND_TRIP_TOL
            && (a0 - 0.37).abs() <= 2.0 * sigma
            && exponent == 0.74,
        format!(
            "coherence err={worst_coherence:.1e}, MC |z|max={worst_z:.2}, round trip={worst_trip:.1e}, \
             a0={a0:.4}±{sigma:.4}, 2a0={exponent}"
        ),
    )
}

fn scattering_correction() -> Outcome {
    let m_per_n = scatter_per_photon(1.0 / 142.0, 2.6).unwrap();
    let max = knowledge_exponent_per_scatter(0.74, m_per_n).unwrap();
    let acc = knowledge_exponent_per_scatter(0.046, m_per_n).unwrap();
    let ratio = acc / 2.0;
    check(
        (m_per_n * 118.3 - 1.0).abs() <= SCATTER_RATIO_REL
            && within(EXPONENT_MAX, max)
            && within(EXPONENT_ACC, acc)
            && within(ADVANTAGE, ratio),
        format!(
            "n/m={:.2}, max={max:.2}, accessible={acc:.3}, ratio={ratio:.3}",
            1.0 / m_per_n
        ),
    )
}

fn random_matrix(r: &mut impl Rng, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |_, _| {
        C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))
    })
}

fn random_model(r: &mut impl Rng) -> (LindbladModel, DensityMatrix) {
    let d = r.random_range(2..=6);
    let a = random_matrix(r, d);
    let h = (&a + a.adjoint()) * C64::from(r.random_range(0.1..5.0));
    let jumps = (0..r.random_range(1..=3))
        .map(|k| {
            CollapseOp::new(
                format!("L{k}"),
                DecayChannel::Other,
                random_matrix(r, d),
                r.random_range(0.1..2.0),
            )
        })
        .collect();
    let psi = CMatrix::from_fn(d, 1, |_, _| {
        C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))
    });
    let m = &psi * psi.adjoint();
    let tr = m.trace().re;
    (
        LindbladModel::new(h, jumps).unwrap(),
        DensityMatrix::new(m * C64::from(1.0 / tr)).unwrap(),
    )
}

fn solver_properties() -> Outcome {
    let start = Instant::now();
    let mut r = rng::stream(2024, 0);
    let (mut trace, mut herm, mut neg, mut fixed): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..20 {
        let (model, rho0) = random_model(&mut r);
        let dt = 0.5 * stable_step(&model);
        let mut next = 0.25;
        evolve_observed(&model, &rho0, 2.0, dt, |t, m| {
            if t >= next - 1e-12 {
                next += 0.25;
                let rho = DensityMatrix::new(m.clone());
                let (tr, h, e) = match rho {
                    Ok(rho) => ((rho.trace() - 1.0).abs(), rho.hermiticity_error(), rho.min_eigenvalue()),
                    Err(_) => (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY),
                };
                trace = trace.max(tr / t.max(1.0));
                herm = herm.max(h);
                neg = neg.min(e);
            }
        })
        .unwrap();
        let ss = steady_state(&model).unwrap();
        fixed = fixed.max(evolve(&model, &ss, 1e-3, 1e-4).unwrap().distance(&ss));
    }

    let gamma = TAU * 3.0;
    let mut sm = CMatrix::zeros(2, 2);
    sm[(0, 1)] = C64::from(1.0);
    let decay = LindbladModel::new(
        CMatrix::zeros(2, 2),
        vec![CollapseOp::new("decay", DecayChannel::FreeSpace, sm, 2.0 * gamma)],
    )
    .unwrap();
    let mut decay_err: f64 = 0.0;
    evolve_observed(&decay, &DensityMatrix::basis(2, 1).unwrap(), 0.2, 1e-4, |t, m| {
        decay_err = decay_err.max((m[(1, 1)].re - (-2.0 * gamma * t).exp()).abs());
    })
    .unwrap();

    let kappa = TAU * 53.0;
    let eps = 0.5 * kappa;
    let levels = 11;
    let mut a = CMatrix::zeros(levels, levels);
    for n in 1..levels {
        a[(n - 1, n)] = C64::from((n as f64).sqrt());
    }
    let h = (&a + a.adjoint()) * C64::from(eps);
    let cavity = LindbladModel::new(
        h,
        vec![CollapseOp::new("mirror", DecayChannel::MainMode, a, 2.0 * kappa)],
    )
    .unwrap();
    let ss = steady_state(&cavity).unwrap();
    let photons: f64 = (0..levels).map(|n| n as f64 * ss.population(n)).sum();
    let cavity_err = (photons - (eps / kappa).powi(2)).abs();

    let took = start.elapsed();
    check(
        trace <= TRACE_TOL
            && herm <= HERMITICITY_TOL
            && neg >= -POSITIVITY_TOL
            && fixed < 1e-8
            && decay_err <= DECAY_TOL
            && cavity_err <= CAVITY_TOL
            && took < Duration::from_secs(60),
        format!(
            "20 models: trace {trace:.1e}, hermiticity {herm:.1e}, min eig {neg:.1e}, fixed point {fixed:.1e}; \
             decay err {decay_err:.1e}; cavity err {cavity_err:.1e}; {took:.2?}"
        ),
    )
}

struct FullSummary {
    extinction: f64,
    purcell: f64,
    m_per_n: f64,
}

fn summarise(spec: &AtomCavitySpec) -> FullSummary {
    let bright: WeakDriveResponse = spec.bright_response().unwrap();
    let empty = spec.empty_response().unwrap();
    FullSummary {
        extinction: bright.transmission() / empty.transmission(),
        purcell: bright.second_mode / bright.free_space,
        m_per_n: (bright.free_space + bright.second_mode) / bright.incident,
    }
}

fn microscopic() -> Outcome {
    let start = Instant::now();
    let p = CavityParams::reference();
    let c = cooperativity(&p).unwrap();
    let lossless = TwoLevelSpec::lossless(p, DEFAULT_DRIVE);
    let bright = lossless.bright_response().unwrap();
    let empty = lossless.empty_response().unwrap();
    let ext = bright.transmission() / empty.transmission();
    let ext_rel = ext * 4.0 * c * c - 1.0;
    let sf = (bright.free_space + bright.second_mode) / bright.incident;
    let sf_rel = sf * c - 1.0;

    let reference = AtomCavitySpec::reference();
    let finer = AtomCavitySpec { n_max: 2, ..reference };
    let (one, two) = rayon::join(|| summarise(&reference), || summarise(&finer));
    let factor = one.m_per_n * 83.0;
    let factor = factor.max(1.0 / factor);
    let trunc = [
        (two.extinction / one.extinction - 1.0).abs(),
        (two.purcell / one.purcell - 1.0).abs(),
        (two.m_per_n / one.m_per_n - 1.0).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let took = start.elapsed();

    let parts = [
        (
            ext_rel.abs() <= EXTINCTION_REL,
            format!("T1/T0·4C²={:.4}", 1.0 + ext_rel),
        ),
        (sf_rel.abs() <= SCATTER_REL, format!("m/n·C={:.4}", 1.0 + sf_rel)),
        (within(PURCELL, one.purcell), format!("Γ_P/Γ={:.3}", one.purcell)),
        (
            factor <= M_PER_N_FACTOR,
            format!("m/n=1/{:.1} (×{factor:.2} from 1/83)", 1.0 / one.m_per_n),
        ),
        (trunc < TRUNCATION_REL, format!("n_max 1→2 change {trunc:.1e}")),
        (took < Duration::from_secs(600), format!("{took:.1?}")),
    ];
    let failed: Vec<&str> = parts.iter().filter(|(ok, _)| !ok).map(|(_, s)| s.as_str()).collect();
    let detail = parts.iter().map(|(_, s)| s.as_str()).collect::<Vec<_>>().join(", ");
    let detail = if failed.is_empty() {
        detail
    } else {
        format!("{detail}; out of tolerance: {}", failed.join(", "))
    };
    check(failed.is_empty(), detail)
}

fn clebsch_gordan() -> Outcome {
    let pi = branching_ratio(3, 0, 2, 0);
    let mut worst: f64 = 0.0;
    for mp in -3..=3 {
        let emission: f64 = (-1..=1).map(|q| cg_coefficient(2, mp - q, q, 3, mp).powi(2)).sum();
        worst = worst.max((emission - 1.0).abs());
    }
    for m in -2..=2 {
        let absorption: f64 = (-1..=1).map(|q| cg_coefficient(2, m, q, 3, m + q).powi(2)).sum();
        worst = worst.max((absorption - 7.0 / 5.0).abs());
    }
    check(
        (pi - 0.6).abs() <= f64::EPSILON && worst <= SUM_RULE_TOL,
        format!("π branching={pi}, sum-rule error={worst:.1e}"),
    )
}

fn run_cli(args: &[&str]) -> std::process::Output {
    Process::new(env!("CARGO_BIN_EXE_cavity-readout"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn determinism() -> Outcome {
    let mut differing = Vec::new();
    for cmd in commands::Command::ALL
        .iter()
        .map(|c| c.name())
        .chain(["validate-config"])
    {
        let args = [cmd, "--seed", "11"];
        let a = run_cli(&args);
        let b = run_cli(&args);
        if !a.status.success() || a.stdout.is_empty() || a.stdout != b.stdout {
            differing.push(cmd);
        }
    }
    check(
        differing.is_empty(),
        if differing.is_empty() {
            "7 commands byte-identical".to_string()
        } else {
            format!("differs: {differing:?}")
        },
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("zeta cross-check", zeta_cross_check),
        ("Chernoff exponent", chernoff_exponents),
        ("exponent ordering", exponent_ordering),
        ("detection MC vs exact", detection_mc),
        ("sqrt(1-Q) approximation", chernoff_gap),
        ("Zeno consistency", zeno_consistency),
        ("scattering correction", scattering_correction),
        ("Lindblad solver properties", solver_properties),
        ("microscopic validations", microscopic),
        ("CG branching", clebsch_gordan),
        ("CLI determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = f();
        let status = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {status} {name}: {}", i + 1, outcome.detail);
        failures += usize::from(!outcome.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
