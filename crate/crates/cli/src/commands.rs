//! The figure-data commands. Each returns a [`Table`] ready for CSV output.

use cavity_readout::bounds::{
    cooperativity, fln, free_space_bound, helstrom_error, ideal_extinction, max_knowledge, single_mode_scatter_ratio,
    zeta_from_channels, Channel,
};
use cavity_readout::detection::{
    accessible_knowledge, chernoff_exponent, empirical_error, l1_error_auto, CountDistributions, Efficiencies,
    JumpModel,
};
use cavity_readout::lindblad::{ReadoutModel, WeakDriveResponse};
use cavity_readout::scattering::{fit_survival, scatter_per_photon, survival_model, FitOptions};
use cavity_readout::zeno::{apply_imperfections, bloch_transfer, fit_a0, infer_n_tilde, ZenoConfig, ZenoPoint};
use cavity_readout::QubitState;
use rayon::prelude::*;

use crate::config::ScenarioConfig;
use crate::output::{format_value, Table};
use crate::CliError;

pub const BOUNDS_COLUMNS: &[&str] = &["n", "eps_H", "I_max", "I_accessible_model"];
pub const DETECT_COLUMNS: &[&str] = &["n", "eps_mc", "ci", "eps_exact", "eps_mc_jumps"];
pub const ZENO_COLUMNS: &[&str] = &["n", "p_obs_model_state1", "p_obs_model_state0", "n_tilde"];
pub const DEPUMP_COLUMNS: &[&str] = &["n", "S_model"];
pub const LINDBLAD_COLUMNS: &[&str] = &["quantity", "value"];
pub const FIGURE4_COLUMNS: &[&str] = &[
    "m",
    "free_space_bound",
    "I_max_cavity",
    "I_acc_perfect_detectors",
    "I_acc_experiment",
];

/// Free-space knowledge exponent per scattered photon.
const FREE_SPACE_EXPONENT: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Bounds,
    Detect,
    Zeno,
    Depump,
    Lindblad,
    Figure4,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Bounds,
        Command::Detect,
        Command::Zeno,
        Command::Depump,
        Command::Lindblad,
        Command::Figure4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Bounds => "bounds",
            Command::Detect => "detect",
            Command::Zeno => "zeno",
            Command::Depump => "depump",
            Command::Lindblad => "lindblad",
            Command::Figure4 => "figure4",
        }
    }

    pub fn run(self, cfg: &ScenarioConfig) -> Result<Table, CliError> {
        match self {
            Command::Bounds => bounds(cfg),
            Command::Detect => detect(cfg),
            Command::Zeno => zeno(cfg),
            Command::Depump => depump(cfg),
            Command::Lindblad => lindblad(cfg),
            Command::Figure4 => figure4(cfg),
        }
    }
}

fn counting_exponent(cfg: &ScenarioConfig, efficiencies: &Efficiencies) -> Result<f64, CliError> {
    Ok(chernoff_exponent(&cfg.response()?, efficiencies)?.0)
}

/// Helstrom error and maximum knowledge from the channel overlap, next to the
/// knowledge accessible by photon counting.
pub fn bounds(cfg: &ScenarioConfig) -> Result<Table, CliError> {
    let table = cfg.channel_table()?;
    let zeta = zeta_from_channels(&table, &Channel::ALL)?;
    let zeta_acc = zeta_from_channels(&table, &Channel::DETECTABLE)?;
    let xi = counting_exponent(cfg, &cfg.efficiencies()?)?;
    let mut out = Table::new(BOUNDS_COLUMNS);
    out.note("zeta", zeta);
    out.note("zeta_detectable", zeta_acc);
    out.note("xi", xi);
    for n in cfg.bounds_grid() {
        out.push(&[
            n,
            helstrom_error((-zeta * n).exp())?,
            max_knowledge(zeta, n)?,
            accessible_knowledge(xi, n)?,
        ]);
    }
    Ok(out)
}

/// Monte Carlo counting error with and without depumping, next to the exact
/// error of the jump-free model.
pub fn detect(cfg: &ScenarioConfig) -> Result<Table, CliError> {
    let d = CountDistributions::new(&cfg.response()?, &cfg.efficiencies()?);
    let jumps = cfg.jump_model();
    let mut out = Table::new(DETECT_COLUMNS);
    out.note("trials", cfg.trials);
    for &n in &cfg.detection.n_values {
        let plain = empirical_error(cfg.trials, n, &d, &JumpModel::none(), cfg.seed)?;
        let jumped = empirical_error(cfg.trials, n, &d, &jumps, cfg.seed)?;
        out.push(&[n, plain.epsilon, plain.ci, l1_error_auto(&d, n)?, jumped.epsilon]);
    }
    Ok(out)
}

fn observed_transfer(z: &ZenoConfig, n_tilde: f64) -> Result<f64, CliError> {
    Ok(apply_imperfections(bloch_transfer(z, n_tilde)?, z))
}

/// `a₀` from the configured measurements, or the configured value when
/// there are none. The uncertainty is `None` in the latter case.
pub fn zeno_a0(cfg: &ScenarioConfig) -> Result<(f64, Option<f64>), CliError> {
    if cfg.zeno.measurements.is_empty() {
        return Ok((cfg.zeno.a0, None));
    }
    let z = cfg.zeno_config(QubitState::Bright)?;
    let points = cfg
        .zeno
        .measurements
        .par_iter()
        .map(|m| {
            let n_tilde = infer_n_tilde(m.transfer, &z)?;
            let h = 1e-4 * n_tilde.max(1.0);
            let lo = (n_tilde - h).max(0.0);
            let slope = (observed_transfer(&z, n_tilde + h)? - observed_transfer(&z, lo)?) / (n_tilde + h - lo);
            Ok(ZenoPoint {
                n: m.n,
                n_tilde,
                sigma: m.sigma / slope.abs(),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let (a0, sigma) = fit_a0(&points)?;
    Ok((a0, Some(sigma)))
}

/// Transfer probability of the π-pulse under measurement for both initial
/// states, assuming `ñ = a₀ n`.
pub fn zeno(cfg: &ScenarioConfig) -> Result<Table, CliError> {
    let (a0, sigma) = zeno_a0(cfg)?;
    let bright = cfg.zeno_config(QubitState::Bright)?;
    let dark = cfg.zeno_config(QubitState::Dark)?;
    let rows = cfg
        .zeno
        .n_values
        .par_iter()
        .map(|&n| {
            let n_tilde = a0 * n;
            Ok([
                n,
                observed_transfer(&bright, n_tilde)?,
                observed_transfer(&dark, n_tilde)?,
                n_tilde,
            ])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut out = Table::new(ZENO_COLUMNS);
    out.note("a0", a0);
    if let Some(s) = sigma {
        out.note("a0_sigma", s);
    }
    out.note("max_knowledge_exponent", 2.0 * a0);
    for row in rows {
        out.push(&row);
    }
    Ok(out)
}

/// Survival of the bright state versus incident photons and the implied
/// scattering budget.
pub fn depump(cfg: &ScenarioConfig) -> Result<Table, CliError> {
    let mut params = cfg.depump_params()?;
    let mut out = Table::new(DEPUMP_COLUMNS);
    if !cfg.depump.measurements.is_empty() {
        let fit = fit_survival(&cfg.survival_points(), FitOptions::default())?;
        params.nu = fit.nu;
        params.s_inf = fit.s_inf;
        out.note("nu_sigma", fit.sigma_nu);
        out.note("s_inf_sigma", fit.sigma_s_inf);
    }
    let m_per_n = scatter_per_photon(params.nu, params.gamma_ratio)?;
    out.note("nu", params.nu);
    out.note("s_inf", params.s_inf);
    out.note("m_per_n", m_per_n);
    out.note("n_per_m", 1.0 / m_per_n);
    for &n in &cfg.depump.n_values {
        out.push(&[n, survival_model(n, &params)]);
    }
    Ok(out)
}

/// Master-equation checks of the single-mode relations and the full
/// Zeeman-resolved scattering budget.
pub fn lindblad(cfg: &ScenarioConfig) -> Result<Table, CliError> {
    let spec = cfg.atom_cavity_spec()?;
    let two_level = spec.two_level();
    let c = cooperativity(&spec.cavity)?;

    type Pair = (WeakDriveResponse, WeakDriveResponse);
    let responses = |m: &dyn Fn() -> cavity_readout::Result<WeakDriveResponse>,
                     e: &dyn Fn() -> cavity_readout::Result<WeakDriveResponse>|
     -> cavity_readout::Result<Pair> { Ok((m()?, e()?)) };
    let (simple, full) = rayon::join(
        || responses(&|| two_level.bright_response(), &|| two_level.empty_response()),
        || responses(&|| spec.bright_response(), &|| spec.empty_response()),
    );
    let (tl_bright, tl_empty) = simple?;
    let (full_bright, full_empty) = full?;

    let scatter = |r: &WeakDriveResponse| (r.free_space + r.second_mode) / r.incident;
    let purcell = if full_bright.free_space == 0.0 {
        0.0
    } else {
        full_bright.second_mode / full_bright.free_space
    };
    let full_scatter = scatter(&full_bright);

    let mut out = Table::new(LINDBLAD_COLUMNS);
    let mut row = |name: &str, v: f64| out.rows.push(vec![name.to_string(), format_value(v)]);
    row("cooperativity", c);
    row("empty_transmission", tl_empty.transmission());
    row(
        "two_level_extinction",
        tl_bright.transmission() / tl_empty.transmission(),
    );
    row("ideal_extinction", ideal_extinction(c)?);
    row("two_level_m_per_n", scatter(&tl_bright));
    row(
        "single_mode_m_per_n",
        single_mode_scatter_ratio(spec.empty_transmission, c)?,
    );
    row(
        "full_extinction",
        full_bright.transmission() / full_empty.transmission(),
    );
    row("purcell_ratio", purcell);
    row("m_per_n", full_scatter);
    row("n_per_m", 1.0 / full_scatter);
    row("m_per_n_free_space", full_bright.free_space / full_bright.incident);
    row("m_per_n_second_mode", full_bright.second_mode / full_bright.incident);
    Ok(out)
}

/// Knowledge per scattered photon for free-space detection and for the
/// cavity with ideal and real counters.
pub fn figure4(cfg: &ScenarioConfig) -> Result<Table, CliError> {
    let photons_per_scatter = match cfg.figure4.photons_per_scatter {
        Some(v) => v,
        None => 1.0 / scatter_per_photon(cfg.depump.nu, cfg.depump.gamma_ratio)?,
    };
    let (a0, _) = zeno_a0(cfg)?;
    let xi_perfect = counting_exponent(cfg, &Efficiencies::perfect())?;
    let xi_experiment = match cfg.figure4.xi_experiment {
        Some(v) => v,
        None => counting_exponent(cfg, &cfg.efficiencies()?)?,
    };
    let max_exp = 2.0 * a0 * photons_per_scatter;
    let perfect_exp = xi_perfect * photons_per_scatter;
    let experiment_exp = xi_experiment * photons_per_scatter;

    let mut out = Table::new(FIGURE4_COLUMNS);
    out.note("photons_per_scatter", photons_per_scatter);
    out.note("exponent_free_space", FREE_SPACE_EXPONENT);
    out.note("exponent_max", max_exp);
    out.note("exponent_perfect_detectors", perfect_exp);
    out.note("exponent_experiment", experiment_exp);
    out.note("advantage_over_free_space", experiment_exp / FREE_SPACE_EXPONENT);
    let mut first_above = None;
    for &m in &cfg.figure4.m_values {
        let free = free_space_bound(m)?;
        let experiment = fln(experiment_exp * m)?;
        if first_above.is_none() && experiment > free {
            first_above = Some(m);
        }
        out.push(&[m, free, fln(max_exp * m)?, fln(perfect_exp * m)?, experiment]);
    }
    out.note(
        "first_m_above_free_space",
        first_above.map_or("none".to_string(), format_value),
    );
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioName;

    fn paper() -> ScenarioConfig {
        ScenarioConfig::built_in(ScenarioName::Paper).unwrap()
    }

    fn value(t: &Table, key: &str, col: &str) -> f64 {
        t.lookup(key, col).unwrap().parse().unwrap()
    }

    #[test]
    fn bounds_rows() {
        let t = bounds(&paper()).unwrap();
        assert_eq!(value(&t, "0", "eps_H"), 0.5);
        assert_eq!(value(&t, "0", "I_max"), 0.0);
        let zeta: f64 = t.notes[0].1.parse().unwrap();
        assert!((value(&t, "10", "I_max") - fln(10.0 * zeta).unwrap()).abs() < 1e-12);

        let fluo = bounds(&ScenarioConfig::built_in(ScenarioName::IdealFluorescence).unwrap()).unwrap();
        assert_eq!(fluo.notes[0], ("zeta".to_string(), "2".to_string()));
    }

    #[test]
    fn zeno_endpoints() {
        let t = zeno(&paper()).unwrap();
        assert!((value(&t, "0", "p_obs_model_state1") - 0.95).abs() < 1e-9);
        assert!((value(&t, "0", "p_obs_model_state0") - 0.95).abs() < 1e-9);
        let curve: Vec<f64> = t.rows.iter().map(|r| r[1].parse().unwrap()).collect();
        assert!(curve.windows(2).all(|w| w[1] <= w[0]));
        let z = paper().zeno_config(QubitState::Bright).unwrap();
        assert!((observed_transfer(&z, 1e4).unwrap() - 0.02).abs() < 1e-3);
    }

    #[test]
    fn zeno_refits_measurements() {
        use crate::config::TransferMeasurement;
        let mut cfg = paper();
        let z = cfg.zeno_config(QubitState::Bright).unwrap();
        cfg.zeno.measurements = [2.0, 5.0, 10.0, 20.0]
            .iter()
            .map(|&n| TransferMeasurement {
                n,
                transfer: observed_transfer(&z, 0.5 * n).unwrap(),
                sigma: 0.02,
            })
            .collect();
        let (a0, sigma) = zeno_a0(&cfg).unwrap();
        assert!((a0 - 0.5).abs() < 1e-5, "{a0}");
        assert!(sigma.unwrap() > 0.0);
    }

    #[test]
    fn depump_curve_and_budget() {
        let t = depump(&paper()).unwrap();
        assert_eq!(value(&t, "0", "S_model"), 1.0);
        let last: f64 = t.rows.last().unwrap()[1].parse().unwrap();
        assert!((last - 0.27).abs() < 0.01);
        let n_per_m: f64 = t.notes.iter().find(|(k, _)| k == "n_per_m").unwrap().1.parse().unwrap();
        assert!((n_per_m - 118.3).abs() < 0.1);
    }

    #[test]
    fn depump_refits_measurements() {
        use crate::config::SurvivalMeasurement;
        use cavity_readout::scattering::DepumpParams;
        let mut cfg = paper();
        let truth = DepumpParams::new(1.0 / 100.0, 2.6, 0.3).unwrap();
        cfg.depump.measurements = (0..8)
            .map(|i| {
                let n = 60.0 * i as f64;
                SurvivalMeasurement {
                    n,
                    survival: survival_model(n, &truth),
                    sigma: 0.01,
                }
            })
            .collect();
        cfg.validate().unwrap();
        let t = depump(&cfg).unwrap();
        let note = |k: &str| -> f64 { t.notes.iter().find(|(n, _)| n == k).unwrap().1.parse().unwrap() };
        assert!((note("nu") - 0.01).abs() < 1e-6);
        assert!((note("s_inf") - 0.3).abs() < 1e-6);

        cfg.depump.measurements.truncate(2);
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
    }

    #[test]
    fn zeno_outside_model_is_numerical() {
        use crate::config::TransferMeasurement;
        let mut cfg = paper();
        cfg.zeno.measurements = vec![
            TransferMeasurement {
                n: 1.0,
                transfer: 0.9,
                sigma: 0.02,
            },
            TransferMeasurement {
                n: 50.0,
                transfer: 0.01,
                sigma: 0.02,
            },
        ];
        cfg.validate().unwrap();
        let err = zeno(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{err}");
    }

    #[test]
    fn figure4_exponents() {
        let t = figure4(&paper()).unwrap();
        let note = |k: &str| -> f64 { t.notes.iter().find(|(n, _)| n == k).unwrap().1.parse().unwrap() };
        assert!((note("exponent_max") - 87.5).abs() < 0.5);
        assert!((note("exponent_experiment") - 5.44).abs() < 0.05);
        assert!((note("advantage_over_free_space") - 2.7).abs() < 0.05);
        assert_eq!(t.rows[0][1..], ["0", "0", "0", "0"]);
    }
}
