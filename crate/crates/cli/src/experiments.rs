//! The five experiments: each consumes the validated configuration and
//! returns a finished CSV as a string. All sweeps fan out over a worker
//! pool but assemble rows in input order, so the bytes produced depend only
//! on the configuration and seed.

use crate::config::{Config, Experiment, ExplicitPair};
use crate::output::{fmt_f64, Csv};
use ndarray::Array2;
use rayon::prelude::*;
use thermcoh::coherence::{analytic_pair_coherence, cubic_fit, l1_coherence, CoherenceError};
use thermcoh::dipolar::{
    compute_couplings, uniform_couplings, AtomGeometry, DipolarError, Liouvillian,
    LiouvillianMode, ThermalBath,
};
use thermcoh::dynamics::{evolve, steady_state_longtime, DynamicsError, IntegratorConfig};
use thermcoh::harvesting::{
    derived_rates, effective_temperature, monte_carlo_collisions, qubit_steady_state,
    CollisionParams, HarvestingError, PairState, TemperatureKind,
};
use thermcoh::qlinalg::{C64, DensityMatrix, QlinalgError};
use thiserror::Error;

/// Failures while running an experiment. Invalid pair states from the
/// config file are configuration mistakes; everything else is numerical.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("harvest pair '{label}' is not a valid density matrix: {source}")]
    InvalidPair {
        label: String,
        #[source]
        source: QlinalgError,
    },
    #[error(transparent)]
    Model(#[from] DipolarError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Coherence(#[from] CoherenceError),
    #[error(transparent)]
    Harvesting(#[from] HarvestingError),
}

impl RunError {
    /// Process exit code the failure maps to: 2 for configuration
    /// mistakes, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::InvalidPair { .. } => 2,
            _ => 3,
        }
    }
}

/// Dispatch on the selected experiment.
pub fn run(experiment: Experiment, cfg: &Config) -> Result<String, RunError> {
    match experiment {
        Experiment::PairCoherence => run_pair_coherence(cfg),
        Experiment::DipoleEffect => run_dipole_effect(cfg),
        Experiment::Scaling => run_scaling(cfg),
        Experiment::Harvest => run_harvest(cfg),
        Experiment::Couplings => run_couplings(cfg),
    }
}

fn integrator(cfg: &Config) -> IntegratorConfig {
    IntegratorConfig {
        rtol: cfg.integrator.rtol,
        atol: cfg.integrator.atol,
        ..IntegratorConfig::default()
    }
}

fn time_grid(t_max: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| t_max * k as f64 / (points - 1) as f64)
        .collect()
}

/// Fully collective pair generator: every decay rate equals γ₀ = 1 and
/// every exchange strength equals `f0` (in units of γ₀).
fn collective_pair_liouvillian(
    f0: f64,
    nbar: f64,
    mode: LiouvillianMode,
) -> Result<Liouvillian, RunError> {
    let coupling = uniform_couplings(2, f0, 1.0)?;
    Ok(Liouvillian::new(coupling, ThermalBath::new(nbar)?, mode)?)
}

/// Numeric-vs-analytic coherence growth for a collective pair, one curve
/// per photon number.
fn run_pair_coherence(cfg: &Config) -> Result<String, RunError> {
    let s = &cfg.pair_coherence;
    let icfg = integrator(cfg);
    let times = time_grid(s.t_max, s.points);
    let curves: Vec<Vec<[f64; 4]>> = s
        .nbars
        .par_iter()
        .map(|&nbar| -> Result<Vec<[f64; 4]>, RunError> {
            let l = collective_pair_liouvillian(s.f0_over_gamma0, nbar, LiouvillianMode::Dense)?;
            let states = evolve(&l, &DensityMatrix::ground(2), &times, &icfg)?;
            times
                .iter()
                .zip(&states)
                .map(|(&t, state)| {
                    let c_numeric = l1_coherence(state);
                    let c_analytic = analytic_pair_coherence(nbar, t)?;
                    Ok([t, c_numeric, c_analytic, (c_numeric - c_analytic).abs()])
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;

    let mut csv = Csv::new(
        Experiment::PairCoherence,
        cfg,
        &["t", "nbar", "c_numeric", "c_analytic", "abs_error"],
    );
    for (&nbar, curve) in s.nbars.iter().zip(&curves) {
        for [t, c_num, c_ana, err] in curve {
            csv.row(&[
                fmt_f64(*t),
                fmt_f64(nbar),
                fmt_f64(*c_num),
                fmt_f64(*c_ana),
                fmt_f64(*err),
            ]);
        }
    }
    Ok(csv.into_string())
}

/// The beam states the exchange-sensitivity scan compares: two states whose
/// coherence decay depends on f₀, and one from the insensitive family
/// (equal central populations, real central coherence).
fn beam_states() -> Vec<(&'static str, DensityMatrix)> {
    let inv = std::f64::consts::FRAC_1_SQRT_2;
    let zero = C64::new(0.0, 0.0);
    vec![
        (
            "ge_plus_i_eg",
            DensityMatrix::pure(
                2,
                &[zero, C64::new(0.0, inv), C64::new(inv, 0.0), zero],
            )
            .expect("amplitudes are normalized"),
        ),
        (
            "sqrt3_ge_plus_eg",
            DensityMatrix::pure(
                2,
                &[
                    zero,
                    C64::new(0.5, 0.0),
                    C64::new(3f64.sqrt() / 2.0, 0.0),
                    zero,
                ],
            )
            .expect("amplitudes are normalized"),
        ),
        (
            "balanced_real",
            DensityMatrix::pure(2, &[zero, C64::new(inv, 0.0), C64::new(inv, 0.0), zero])
                .expect("amplitudes are normalized"),
        ),
    ]
}

/// Coherence curves for each (initial state, f₀) combination at fixed n̄.
fn run_dipole_effect(cfg: &Config) -> Result<String, RunError> {
    let s = &cfg.dipole_effect;
    let icfg = integrator(cfg);
    let times = time_grid(s.t_max, s.points);
    let states = beam_states();
    let combos: Vec<(&'static str, &DensityMatrix, f64)> = states
        .iter()
        .flat_map(|(label, rho)| {
            s.f0s_over_gamma0.iter().map(move |&f0| (*label, rho, f0))
        })
        .collect();

    let curves: Vec<Vec<f64>> = combos
        .par_iter()
        .map(|(_, rho0, f0)| -> Result<Vec<f64>, RunError> {
            let l = collective_pair_liouvillian(*f0, s.nbar, LiouvillianMode::Dense)?;
            let states = evolve(&l, rho0, &times, &icfg)?;
            Ok(states.iter().map(l1_coherence).collect())
        })
        .collect::<Result<_, _>>()?;

    let mut csv = Csv::new(
        Experiment::DipoleEffect,
        cfg,
        &["t", "state", "f0_over_gamma0", "c_l1"],
    );
    for ((label, _, f0), curve) in combos.iter().zip(&curves) {
        for (&t, &c) in times.iter().zip(curve) {
            csv.row(&[fmt_f64(t), (*label).to_owned(), fmt_f64(*f0), fmt_f64(c)]);
        }
    }
    Ok(csv.into_string())
}

/// Long-time coherence versus cluster size, with a cubic quality-of-fit
/// summary and the two-atom row checked against the analytic plateau.
fn run_scaling(cfg: &Config) -> Result<String, RunError> {
    let s = &cfg.scaling;
    let icfg = integrator(cfg);
    let sizes: Vec<usize> = (s.n_min..=s.n_max).collect();

    enum Outcome {
        Converged { c: f64, time: f64, residual: f64 },
        NotConverged { time: f64, residual: f64 },
    }

    let outcomes: Vec<Outcome> = sizes
        .par_iter()
        .map(|&n| -> Result<Outcome, RunError> {
            let coupling = uniform_couplings(n, s.f0_over_gamma0, 1.0)?;
            let l = Liouvillian::new(
                coupling,
                ThermalBath::new(s.nbar)?,
                LiouvillianMode::MatrixFree,
            )?;
            match steady_state_longtime(&l, &DensityMatrix::ground(n), s.conv_tol, &icfg, s.max_time)
            {
                Ok(result) => Ok(Outcome::Converged {
                    c: l1_coherence(&result.state),
                    time: result.time,
                    residual: result.residual,
                }),
                Err(DynamicsError::NotConverged { time, residual }) => {
                    Ok(Outcome::NotConverged { time, residual })
                }
                Err(other) => Err(other.into()),
            }
        })
        .collect::<Result<_, _>>()?;

    let mut csv = Csv::new(
        Experiment::Scaling,
        cfg,
        &["n_atoms", "c_longtime", "relaxation_time", "residual", "converged"],
    );
    let mut fit_xs = Vec::new();
    let mut fit_ys = Vec::new();
    for (&n, outcome) in sizes.iter().zip(&outcomes) {
        match outcome {
            Outcome::Converged { c, time, residual } => {
                csv.row(&[
                    n.to_string(),
                    fmt_f64(*c),
                    fmt_f64(*time),
                    fmt_f64(*residual),
                    "1".to_owned(),
                ]);
                fit_xs.push(n as f64);
                fit_ys.push(*c);
            }
            Outcome::NotConverged { time, residual } => {
                csv.row(&[
                    n.to_string(),
                    String::new(),
                    fmt_f64(*time),
                    fmt_f64(*residual),
                    "0".to_owned(),
                ]);
            }
        }
    }

    match cubic_fit(&fit_xs, &fit_ys) {
        Ok(fit) => {
            let [c0, c1, c2, c3] = fit.coefficients;
            csv.comment(&format!("cubic_c0: {}", fmt_f64(c0)));
            csv.comment(&format!("cubic_c1: {}", fmt_f64(c1)));
            csv.comment(&format!("cubic_c2: {}", fmt_f64(c2)));
            csv.comment(&format!("cubic_c3: {}", fmt_f64(c3)));
            csv.comment(&format!("r_squared: {}", fmt_f64(fit.r_squared)));
        }
        Err(CoherenceError::TooFewPoints { got }) => {
            csv.comment(&format!(
                "cubic_fit: skipped, {got} converged points (need at least 5)"
            ));
        }
        Err(other) => return Err(other.into()),
    }

    // Cross-check the two-atom row against the analytic plateau.
    if let Some(idx) = sizes.iter().position(|&n| n == 2) {
        if let Outcome::Converged { c, .. } = &outcomes[idx] {
            let z = 3.0 * s.nbar * (s.nbar + 1.0) + 1.0;
            let plateau = s.nbar * (s.nbar + 1.0) / z;
            csv.comment(&format!("n2_plateau_analytic: {}", fmt_f64(plateau)));
            csv.comment(&format!(
                "n2_plateau_abs_error: {}",
                fmt_f64((c - plateau).abs())
            ));
        }
    }
    Ok(csv.into_string())
}

fn temperature_label(kind: TemperatureKind) -> &'static str {
    match kind {
        TemperatureKind::Positive => "positive",
        TemperatureKind::Negative => "negative",
        TemperatureKind::ZeroLimit => "zero-limit",
        TemperatureKind::Infinite => "infinite",
    }
}

/// The thermal beam pair: collective two-atom steady state at the given
/// photon number, reached by long-time relaxation from the ground state
/// (the physical preparation, which also selects the symmetric sector).
fn thermal_pair(
    nbar: f64,
    f0: f64,
    icfg: &IntegratorConfig,
) -> Result<DensityMatrix, RunError> {
    let l = collective_pair_liouvillian(f0, nbar, LiouvillianMode::MatrixFree)?;
    let relaxed = steady_state_longtime(&l, &DensityMatrix::ground(2), 1e-8, icfg, 1e6)?;
    Ok(relaxed.state)
}

/// The same pair with its central-block coherences removed — the reference
/// that isolates what the coherences contribute to the harvested heat.
fn zero_central_coherences(pair: &DensityMatrix) -> Result<DensityMatrix, RunError> {
    let mut m = pair.matrix().to_owned();
    m[[1, 2]] = C64::new(0.0, 0.0);
    m[[2, 1]] = C64::new(0.0, 0.0);
    DensityMatrix::new(2, m).map_err(|source| RunError::InvalidPair {
        label: "coherence-zeroed reference".to_owned(),
        source,
    })
}

fn explicit_pair(entry: &ExplicitPair) -> Result<DensityMatrix, RunError> {
    let mut m = Array2::<C64>::zeros((4, 4));
    for (i, &d) in entry.diagonal.iter().enumerate() {
        m[[i, i]] = C64::new(d, 0.0);
    }
    m[[1, 2]] = C64::new(entry.a23[0], entry.a23[1]);
    m[[2, 1]] = m[[1, 2]].conj();
    m[[0, 3]] = C64::new(entry.a14[0], entry.a14[1]);
    m[[3, 0]] = m[[0, 3]].conj();
    DensityMatrix::new(2, m).map_err(|source| RunError::InvalidPair {
        label: entry.label.clone(),
        source,
    })
}

/// Collisional harvesting: derived rates, effective temperature, and the
/// Monte-Carlo-vs-closed-form steady-state comparison, one row per pair.
fn run_harvest(cfg: &Config) -> Result<String, RunError> {
    let s = &cfg.harvest;
    let icfg = integrator(cfg);
    let params = CollisionParams::new(s.p, s.g, s.tau, s.omega0)?;
    if !params.coarse_graining_valid() {
        eprintln!(
            "warning: g*tau = {} exceeds {}; the coarse-grained description \
             (closed-form columns) is not reliable at this collision strength",
            params.gtau(),
            thermcoh::harvesting::GTAU_VALIDITY
        );
    }

    let thermal = thermal_pair(s.nbar, s.f0_over_gamma0, &icfg)?;
    let zeroed = zero_central_coherences(&thermal)?;
    let mut pairs: Vec<(String, DensityMatrix)> = vec![
        (format!("thermal-pair(nbar={})", s.nbar), thermal),
        (
            format!("thermal-pair(nbar={})-coherence-zeroed", s.nbar),
            zeroed,
        ),
    ];
    for entry in &s.pairs {
        pairs.push((entry.label.clone(), explicit_pair(entry)?));
    }

    let total_time = s.collisions as f64 / s.p;
    let mut csv = Csv::new(
        Experiment::Harvest,
        cfg,
        &[
            "pair",
            "r_e",
            "r_d",
            "lambda_re",
            "lambda_im",
            "epsilon_re",
            "epsilon_im",
            "t_eff_kind",
            "t_eff_value",
            "rho_ee_ss",
            "rho_ee_mc_mean",
            "rho_ee_mc_stderr",
            "mean_collisions",
            "seeds",
        ],
    );

    for (label, state) in &pairs {
        let pair = PairState::new(state.clone())?;
        let rates = derived_rates(&pair, &params);
        let (kind, value) = match effective_temperature(&rates, s.omega0) {
            Ok(t) => (
                temperature_label(t.kind).to_owned(),
                t.value.map(fmt_f64).unwrap_or_default(),
            ),
            Err(HarvestingError::DarkPair) => ("dark".to_owned(), String::new()),
            Err(other) => return Err(other.into()),
        };
        let rho_ee_ss = match qubit_steady_state(&rates) {
            Ok(ss) => fmt_f64(ss.element(0, 0).re),
            Err(HarvestingError::DarkPair) => String::new(),
            Err(other) => return Err(other.into()),
        };

        let seeds: Vec<u64> = (0..s.seeds as u64).map(|k| cfg.seed.wrapping_add(k)).collect();
        let runs: Vec<(f64, usize)> = seeds
            .par_iter()
            .map(|&seed| -> Result<(f64, usize), RunError> {
                let run = monte_carlo_collisions(
                    &DensityMatrix::ground(1),
                    &pair,
                    &params,
                    total_time,
                    seed,
                )?;
                Ok((run.terminal().element(0, 0).re, run.collisions()))
            })
            .collect::<Result<_, _>>()?;

        let n = runs.len() as f64;
        let mean = runs.iter().map(|(v, _)| v).sum::<f64>() / n;
        let stderr = if runs.len() > 1 {
            let var = runs.iter().map(|(v, _)| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        let mean_collisions =
            runs.iter().map(|(_, c)| *c as f64).sum::<f64>() / n;

        csv.row(&[
            label.clone(),
            fmt_f64(rates.r_e),
            fmt_f64(rates.r_d),
            fmt_f64(rates.lambda.re),
            fmt_f64(rates.lambda.im),
            fmt_f64(rates.epsilon.re),
            fmt_f64(rates.epsilon.im),
            kind,
            value,
            rho_ee_ss,
            fmt_f64(mean),
            fmt_f64(stderr),
            fmt_f64(mean_collisions),
            runs.len().to_string(),
        ]);
    }
    Ok(csv.into_string())
}

/// Coupling-coefficient table over a logarithmic separation grid, with the
/// near-field and far-field limiting forms alongside for comparison.
fn run_couplings(cfg: &Config) -> Result<String, RunError> {
    let s = &cfg.couplings;
    let decades = (s.xi_max / s.xi_min).log10();
    let steps = (decades * s.points_per_decade as f64).round() as usize;
    let xis: Vec<f64> = (0..=steps)
        .map(|k| s.xi_min * 10f64.powf(k as f64 / s.points_per_decade as f64))
        .filter(|&xi| xi <= s.xi_max * (1.0 + 1e-12))
        .collect();

    let mut csv = Csv::new(
        Experiment::Couplings,
        cfg,
        &[
            "xi",
            "alpha",
            "f_over_gamma0",
            "gamma_over_gamma0",
            "f_near_field",
            "f_far_field",
            "gamma_near_field",
            "gamma_far_field",
        ],
    );
    for &alpha in &s.alphas {
        let (sin_a, cos_a) = alpha.sin_cos();
        let aniso = 1.0 - 3.0 * cos_a * cos_a;
        let trans = 1.0 - cos_a * cos_a;
        for &xi in &xis {
            let geom = AtomGeometry::new(
                vec![[0.0, 0.0, 0.0], [xi, 0.0, 0.0]],
                [cos_a, sin_a, 0.0],
            )?;
            let coupling = compute_couplings(&geom, 1.0)?;
            let f = coupling.f()[[0, 1]];
            let gamma = coupling.gamma()[[0, 1]];
            // Leading small-ξ and large-ξ behavior of the two couplings.
            let f_near = 0.75 * aniso / (xi * xi * xi);
            let f_far = -0.75 * trans * xi.cos() / xi;
            let gamma_near = 1.0;
            let gamma_far = 1.5 * trans * xi.sin() / xi;
            csv.row(&[
                fmt_f64(xi),
                fmt_f64(alpha),
                fmt_f64(f),
                fmt_f64(gamma),
                fmt_f64(f_near),
                fmt_f64(f_far),
                fmt_f64(gamma_near),
                fmt_f64(gamma_far),
            ]);
        }
    }
    Ok(csv.into_string())
}
