//! Collisional harvesting of pair coherence by a single work qubit.
//!
//! Coherent atomic pairs arrive at a qubit at rate `p`, each interacting for
//! a short time τ through an excitation-exchange coupling of strength `g`.
//! Coarse-graining the repeated collisions yields a Lindblad master equation
//! whose rates are quadratic forms of the pair density matrix ([Table-1
//! combinations, [`derived_rates`]]): the populations and central-block
//! coherences set the excitation/de-excitation rates r_e and r_d, the
//! single-excitation edge coherences drive the qubit through λ, and the
//! corner coherence ε acts as a squeezed-reservoir term. The module carries
//! the master equation ([`coarse_grained_rhs`]), its Bloch form and closed
//! steady states, effective-temperature assignment, heat/power bookkeeping,
//! an exact collision unitary, and a seeded Monte-Carlo collision oracle
//! against which the coarse-grained description is validated.
//!
//! Sign conventions: energies in units of ħ, the qubit Hamiltonian is
//! ½ω₀σ_z plus the drive; heat flowing out of the qubit is negative.

use crate::dynamics::{integrate_matrix_ode, DynamicsError, IntegratorConfig};
use crate::qlinalg::{
    anticommutator, dagger, embed_site, identity, kron, matrix_exp, partial_trace, sigma_minus,
    sigma_plus, sigma_z, trace_of, C64, DensityMatrix, QlinalgError,
};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

/// Coarse-graining is trusted while gτ stays at or below this value.
pub const GTAU_VALIDITY: f64 = 0.1;

/// Errors from the collision-model machinery.
#[derive(Debug, Error)]
pub enum HarvestingError {
    #[error("expected a two-atom pair state, got {got} atoms")]
    NotAPair { got: usize },
    #[error("expected a single-qubit state, got {got} atoms")]
    NotAQubit { got: usize },
    #[error("collision parameter {name} must be positive and finite, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("duration must be nonnegative and finite, got {value}")]
    InvalidDuration { value: f64 },
    #[error("squeezed-bath parameterization is singular: r_d = r_e")]
    SingularSqueezedFrame,
    #[error("closed-form steady state is degenerate (zero denominator)")]
    DegenerateBlochSteadyState,
    #[error("dark pair: r_e = r_d = 0, the qubit never exchanges excitations")]
    DarkPair,
    #[error("inadmissible squeezing: |M|^2 = {m_sq:.6e} exceeds N(N+1) = {bound:.6e}")]
    InadmissibleSqueezing { m_sq: f64, bound: f64 },
    #[error("squeezed frame is not dissipative: gamma_eff = {gamma:.6e} <= 0")]
    NonDissipativeFrame { gamma: f64 },
    #[error("Bloch vector norm {norm:.6e} exceeds 1")]
    InvalidBlochVector { norm: f64 },
    #[error("Bloch relaxation did not converge by t = {time:.3e} (residual {residual:.3e})")]
    BlochNotConverged { time: f64, residual: f64 },
    #[error(transparent)]
    State(#[from] QlinalgError),
    #[error(transparent)]
    Integration(#[from] DynamicsError),
}

/// A two-atom state in the beam, with 1-based element access a(i, j) over
/// the basis {|ee⟩, |eg⟩, |ge⟩, |gg⟩}.
#[derive(Debug, Clone)]
pub struct PairState {
    state: DensityMatrix,
}

impl PairState {
    pub fn new(state: DensityMatrix) -> Result<Self, HarvestingError> {
        if state.n_atoms() != 2 {
            return Err(HarvestingError::NotAPair {
                got: state.n_atoms(),
            });
        }
        Ok(Self { state })
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    /// Element a_ij with 1-based indices, matching the usual labeling of the
    /// four pair levels.
    pub fn a(&self, i: usize, j: usize) -> C64 {
        self.state.element(i - 1, j - 1)
    }
}

/// Beam and coupling parameters: arrival rate `p`, interaction strength `g`,
/// interaction duration `tau`, and the qubit transition frequency `omega0`.
#[derive(Debug, Clone, Copy)]
pub struct CollisionParams {
    p: f64,
    g: f64,
    tau: f64,
    omega0: f64,
}

impl CollisionParams {
    pub fn new(p: f64, g: f64, tau: f64, omega0: f64) -> Result<Self, HarvestingError> {
        for (name, value) in [("p", p), ("g", g), ("tau", tau), ("omega0", omega0)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(HarvestingError::NonPositiveParameter { name, value });
            }
        }
        Ok(Self { p, g, tau, omega0 })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    /// The dimensionless collision strength gτ.
    pub fn gtau(&self) -> f64 {
        self.g * self.tau
    }

    /// Coarse-grained rate scale μ = p(gτ)².
    pub fn mu(&self) -> f64 {
        self.p * self.gtau() * self.gtau()
    }

    /// Drive prefactor pgτ multiplying λ in the effective Hamiltonian.
    pub fn drive_prefactor(&self) -> f64 {
        self.p * self.gtau()
    }

    /// Whether gτ is small enough for the coarse-grained description;
    /// callers should warn the user when this is false.
    pub fn coarse_graining_valid(&self) -> bool {
        self.gtau() <= GTAU_VALIDITY
    }
}

/// The quadratic-form combinations of pair elements that parameterize the
/// coarse-grained master equation.
#[derive(Debug, Clone, Copy)]
pub struct DerivedRates {
    /// Excitation rate combination 2a₁₁ + a₂₂ + a₂₃ + a₃₂ + a₃₃ (≥ 0).
    pub r_e: f64,
    /// De-excitation rate combination 2a₄₄ + a₂₂ + a₂₃ + a₃₂ + a₃₃ (≥ 0).
    pub r_d: f64,
    /// Drive amplitude a₁₂ + a₁₃ + a₂₄ + a₃₄.
    pub lambda: C64,
    /// Corner (two-excitation) coherence a₁₄, the squeezing source.
    pub epsilon: C64,
    /// Coarse-grained rate scale μ = p(gτ)².
    pub mu: f64,
}

/// Squeezed-reservoir parameterization (N, γ, Me^{iφ}), defined when
/// r_d ≠ r_e.
#[derive(Debug, Clone, Copy)]
pub struct SqueezedBathParams {
    /// Effective thermal occupation N = r_e/(r_d − r_e).
    pub n_eff: f64,
    /// Effective damping rate γ = μ(r_d − r_e); negative when the beam
    /// inverts the qubit.
    pub gamma_eff: f64,
    /// Complex squeezing Me^{iφ} = −2εμ/γ.
    pub m_complex: C64,
}

impl SqueezedBathParams {
    /// Reparameterize the rates; fails when r_d = r_e (the frame is
    /// singular there and the density-matrix form must be used instead).
    pub fn from_rates(rates: &DerivedRates) -> Result<Self, HarvestingError> {
        let diff = rates.r_d - rates.r_e;
        if diff.abs() <= 1e-12 * (rates.r_d + rates.r_e).max(1.0) {
            return Err(HarvestingError::SingularSqueezedFrame);
        }
        Ok(Self {
            n_eff: rates.r_e / diff,
            gamma_eff: rates.mu * diff,
            m_complex: -2.0 * rates.epsilon / diff,
        })
    }
}

/// Pauli expectation triple (⟨σ_x⟩, ⟨σ_y⟩, ⟨σ_z⟩).
#[derive(Debug, Clone, Copy)]
pub struct BlochVector {
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
}

impl BlochVector {
    pub fn new(sx: f64, sy: f64, sz: f64) -> Result<Self, HarvestingError> {
        let norm = (sx * sx + sy * sy + sz * sz).sqrt();
        if !(norm <= 1.0 + 1e-10) {
            return Err(HarvestingError::InvalidBlochVector { norm });
        }
        Ok(Self { sx, sy, sz })
    }

    pub fn from_density(rho: &DensityMatrix) -> Result<Self, HarvestingError> {
        if rho.n_atoms() != 1 {
            return Err(HarvestingError::NotAQubit {
                got: rho.n_atoms(),
            });
        }
        let m = rho.matrix();
        // ⟨σ⁺⟩ = ρ_ge, the (row g, column e) element.
        let sp = m[[1, 0]];
        Ok(Self {
            sx: 2.0 * sp.re,
            sy: 2.0 * sp.im,
            sz: m[[0, 0]].re - m[[1, 1]].re,
        })
    }

    pub fn to_density(&self) -> Result<DensityMatrix, HarvestingError> {
        let mut m = Array2::<C64>::zeros((2, 2));
        m[[0, 0]] = C64::new(0.5 * (1.0 + self.sz), 0.0);
        m[[1, 1]] = C64::new(0.5 * (1.0 - self.sz), 0.0);
        m[[1, 0]] = C64::new(0.5 * self.sx, 0.5 * self.sy);
        m[[0, 1]] = m[[1, 0]].conj();
        Ok(DensityMatrix::new(1, m)?)
    }

    pub fn norm(&self) -> f64 {
        (self.sx * self.sx + self.sy * self.sy + self.sz * self.sz).sqrt()
    }
}

/// Which temperature regime the steady state realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemperatureKind {
    Positive,
    /// Population inversion (r_e > r_d).
    Negative,
    /// r_e = 0: the qubit relaxes to the ground state, T → 0⁺.
    ZeroLimit,
    /// r_e = r_d: equal populations correspond to unbounded temperature.
    Infinite,
}

/// Effective temperature of the collisional steady state in the same units
/// as ω₀ (ħ = k_B = 1); `value` is absent for the infinite kind.
#[derive(Debug, Clone, Copy)]
pub struct EffectiveTemperature {
    pub kind: TemperatureKind,
    pub value: Option<f64>,
}

/// Heat current into the qubit: the authoritative adjoint-dissipator value,
/// plus the literature closed form for comparison (absent when the squeezed
/// frame is singular). The two disagree in general — see
/// [`heat_current`] — which is precisely why both are reported.
#[derive(Debug, Clone, Copy)]
pub struct HeatCurrent {
    pub definitional: f64,
    pub closed_form: Option<f64>,
}

/// Squeezed-thermal unraveling of an (N, M) reservoir: thermal occupation
/// `n_th`, squeezing amplitude `r`, phase `phi`, and the two scaled jump
/// operators for the doubled-form dissipator Σᵢ(2RᵢρRᵢ† − Rᵢ†Rᵢρ − ρRᵢ†Rᵢ).
#[derive(Debug, Clone)]
pub struct SqueezedDecomposition {
    pub n_th: f64,
    pub r: f64,
    pub phi: f64,
    pub r1: Array2<C64>,
    pub r2: Array2<C64>,
}

/// Trajectory of a seeded Monte-Carlo collision run: the qubit state after
/// each collision, starting with the initial state at t = 0.
#[derive(Debug, Clone)]
pub struct MonteCarloRun {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

impl MonteCarloRun {
    pub fn collisions(&self) -> usize {
        self.times.len() - 1
    }

    pub fn terminal(&self) -> &DensityMatrix {
        self.states.last().expect("trajectory is never empty")
    }
}

/// Evaluate the coarse-grained rate combinations for a pair state.
///
/// Tiny negative r_e/r_d produced by state-validation tolerances are clamped
/// to zero; both combinations are exact quadratic forms that are nonnegative
/// for any valid state, and r_e − r_d = 2(a₁₁ − a₄₄) identically.
pub fn derived_rates(pair: &PairState, params: &CollisionParams) -> DerivedRates {
    let central =
        pair.a(2, 2) + pair.a(2, 3) + pair.a(3, 2) + pair.a(3, 3);
    let r_e = (2.0 * pair.a(1, 1) + central).re.max(0.0);
    let r_d = (2.0 * pair.a(4, 4) + central).re.max(0.0);
    DerivedRates {
        r_e,
        r_d,
        lambda: pair.a(1, 2) + pair.a(1, 3) + pair.a(2, 4) + pair.a(3, 4),
        epsilon: pair.a(1, 4),
        mu: params.mu(),
    }
}

/// Truncation order of the collision unitary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollisionOrder {
    /// I − igτS − (gτ)²S²/2 — the analytic form the coarse-graining uses.
    Second,
    /// exp(−igτS), unitary to machine precision.
    Exact,
}

/// Excitation-exchange generator S = Σ_{i=1,2} (σ_i⁺σ₃⁻ + σ_i⁻σ₃⁺) on the
/// three-site register (pair = sites 1, 2; qubit = site 3).
fn exchange_generator() -> Array2<C64> {
    let n = 3;
    let sp3 = embed_site(&sigma_plus(), 3, n).expect("site in range");
    let sm3 = embed_site(&sigma_minus(), 3, n).expect("site in range");
    let mut s = Array2::zeros((8, 8));
    for site in 1..=2 {
        let spi = embed_site(&sigma_plus(), site, n).expect("site in range");
        let smi = embed_site(&sigma_minus(), site, n).expect("site in range");
        s = s + spi.dot(&sm3) + smi.dot(&sp3);
    }
    s
}

/// The 8×8 collision unitary on pair ⊗ qubit (pair most significant).
pub fn collision_unitary(params: &CollisionParams, order: CollisionOrder) -> Array2<C64> {
    let gtau = params.gtau();
    let s = exchange_generator();
    match order {
        CollisionOrder::Exact => matrix_exp(&s, C64::new(0.0, -gtau))
            .expect("exchange generator is Hermitian"),
        CollisionOrder::Second => {
            let s2 = s.dot(&s);
            identity(8) - &s * C64::new(0.0, gtau) - &s2 * C64::new(0.5 * gtau * gtau, 0.0)
        }
    }
}

/// Dissipative part of the coarse-grained generator (everything except the
/// coherent drive): the squeezed two-photon term plus the excitation and
/// de-excitation Lindbladians.
fn dissipative_action(m: &Array2<C64>, rates: &DerivedRates) -> Array2<C64> {
    let sp = sigma_plus();
    let sm = sigma_minus();
    let mu = rates.mu;
    // 2μ(ε σ⁺ρσ⁺ + ε* σ⁻ρσ⁻)
    let squeezed = (sp.dot(m).dot(&sp) * (rates.epsilon * 2.0 * mu))
        + (sm.dot(m).dot(&sm) * (rates.epsilon.conj() * 2.0 * mu));
    // μ(r_e/2)(2σ⁺ρσ⁻ − {σ⁻σ⁺, ρ})
    let up = (sp.dot(m).dot(&sm) * C64::new(2.0, 0.0) - anticommutator(&sm.dot(&sp), m))
        * C64::new(0.5 * mu * rates.r_e, 0.0);
    // μ(r_d/2)(2σ⁻ρσ⁺ − {σ⁺σ⁻, ρ})
    let down = (sm.dot(m).dot(&sp) * C64::new(2.0, 0.0) - anticommutator(&sp.dot(&sm), m))
        * C64::new(0.5 * mu * rates.r_d, 0.0);
    squeezed + up + down
}

/// The effective drive Hamiltonian pgτ(λσ⁺ + λ*σ⁻).
fn drive_hamiltonian(rates: &DerivedRates, params: &CollisionParams) -> Array2<C64> {
    let pp = params.drive_prefactor();
    sigma_plus() * (rates.lambda * pp) + sigma_minus() * (rates.lambda.conj() * pp)
}

/// Full coarse-grained right-hand side on a raw 2×2 matrix.
pub(crate) fn coarse_rhs_matrix(
    m: &Array2<C64>,
    rates: &DerivedRates,
    params: &CollisionParams,
) -> Array2<C64> {
    let h = drive_hamiltonian(rates, params);
    let comm = h.dot(m) - m.dot(&h);
    dissipative_action(m, rates) - comm * C64::i()
}

/// Coarse-grained master equation dρ/dt for the work qubit:
/// −i[H_eff, ρ] + 2μ(εσ⁺ρσ⁺ + ε*σ⁻ρσ⁻) + μ(r_e/2)L_e(ρ) + μ(r_d/2)L_d(ρ).
pub fn coarse_grained_rhs(
    rho_q: &DensityMatrix,
    rates: &DerivedRates,
    params: &CollisionParams,
) -> Result<Array2<C64>, HarvestingError> {
    if rho_q.n_atoms() != 1 {
        return Err(HarvestingError::NotAQubit {
            got: rho_q.n_atoms(),
        });
    }
    Ok(coarse_rhs_matrix(rho_q.matrix(), rates, params))
}

/// Integrate the coarse-grained master equation from `rho_q0`, returning the
/// qubit state at each requested time (the grid must start at 0 for the
/// first sample to be the initial state).
pub fn coarse_grained_evolve(
    rho_q0: &DensityMatrix,
    rates: &DerivedRates,
    params: &CollisionParams,
    times: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<DensityMatrix>, HarvestingError> {
    if rho_q0.n_atoms() != 1 {
        return Err(HarvestingError::NotAQubit {
            got: rho_q0.n_atoms(),
        });
    }
    let rhs = |_t: f64, m: &Array2<C64>| coarse_rhs_matrix(m, rates, params);
    let mut samples = Vec::with_capacity(times.len());
    integrate_matrix_ode(&rhs, rho_q0.matrix().to_owned(), times, cfg, |_, _, y| {
        samples.push(
            DensityMatrix::from_integration(1, y.clone()).map_err(DynamicsError::State)?,
        );
        Ok(())
    })?;
    Ok(samples)
}

fn bloch_rhs_raw(
    v: [f64; 3],
    rates: &DerivedRates,
    squeezed: &SqueezedBathParams,
    params: &CollisionParams,
) -> [f64; 3] {
    let [sx, sy, sz] = v;
    let gamma = squeezed.gamma_eff;
    let a = 2.0 * squeezed.n_eff + 1.0;
    let mr = squeezed.m_complex.re;
    let mi = squeezed.m_complex.im;
    let pp = params.drive_prefactor();
    let hx = 2.0 * pp * rates.lambda.re;
    let hy = -2.0 * pp * rates.lambda.im;
    [
        -0.5 * gamma * (a + 2.0 * mr) * sx + gamma * mi * sy + hy * sz,
        gamma * mi * sx - 0.5 * gamma * (a - 2.0 * mr) * sy - hx * sz,
        hx * sy - hy * sx - gamma * (a * sz + 1.0),
    ]
}

/// Bloch-equation form of the coarse-grained dynamics in the squeezed
/// parameterization: the time derivative (ṡ_x, ṡ_y, ṡ_z) at `v`. Equivalent
/// entrywise to [`coarse_grained_rhs`]; requires r_d ≠ r_e only because the
/// (N, γ, M) variables do.
pub fn bloch_rhs(
    v: &BlochVector,
    rates: &DerivedRates,
    squeezed: &SqueezedBathParams,
    params: &CollisionParams,
) -> [f64; 3] {
    bloch_rhs_raw([v.sx, v.sy, v.sz], rates, squeezed, params)
}

/// Closed-form steady state of the Bloch equations. With A = 2N+1,
/// P = pgτ, w = Aλ + 2Mλ*, K = A² − 4|M|², and denominator
/// D = γ²AK + 8P²(A|λ|² + 2Re[M*λ²]):
///
///   s_x = 4γP·Im(w)/D,  s_y = 4γP·Re(w)/D,  s_z = −γ²K/D.
///
/// At λ = 0 this reduces to (0, 0, −1/(2N+1)) for any admissible M.
pub fn bloch_steady_closed_form(
    rates: &DerivedRates,
    squeezed: &SqueezedBathParams,
    params: &CollisionParams,
) -> Result<BlochVector, HarvestingError> {
    let gamma = squeezed.gamma_eff;
    let a = 2.0 * squeezed.n_eff + 1.0;
    let m = squeezed.m_complex;
    let lambda = rates.lambda;
    let pp = params.drive_prefactor();
    let w = lambda * a + m * lambda.conj() * 2.0;
    let k = a * a - 4.0 * m.norm_sqr();
    let d = gamma * gamma * a * k
        + 8.0 * pp * pp * (a * lambda.norm_sqr() + 2.0 * (m.conj() * lambda * lambda).re);
    if d == 0.0 {
        return Err(HarvestingError::DegenerateBlochSteadyState);
    }
    BlochVector::new(
        4.0 * gamma * pp * w.im / d,
        4.0 * gamma * pp * w.re / d,
        -gamma * gamma * k / d,
    )
}

/// Relax the Bloch equations from `v0` until ‖ṡ‖∞ ≤ `tol`, integrating in
/// geometrically growing chunks up to `max_time`.
pub fn bloch_relax(
    v0: &BlochVector,
    rates: &DerivedRates,
    squeezed: &SqueezedBathParams,
    params: &CollisionParams,
    tol: f64,
    max_time: f64,
) -> Result<BlochVector, HarvestingError> {
    let pack = |v: [f64; 3]| {
        Array2::from_shape_vec(
            (3, 1),
            v.iter().map(|&x| C64::new(x, 0.0)).collect(),
        )
        .expect("static shape")
    };
    let unpack = |y: &Array2<C64>| [y[[0, 0]].re, y[[1, 0]].re, y[[2, 0]].re];
    let rhs =
        move |_t: f64, y: &Array2<C64>| pack(bloch_rhs_raw(unpack(y), rates, squeezed, params));

    let rate_scale = squeezed.gamma_eff.abs() * (2.0 * squeezed.n_eff.abs() + 1.0)
        + 2.0 * params.drive_prefactor() * rates.lambda.norm()
        + squeezed.gamma_eff.abs();
    let cfg = IntegratorConfig {
        rtol: 1e-10,
        atol: 1e-12,
        hermitize_every: 0,
        ..IntegratorConfig::default()
    };
    let mut y = pack([v0.sx, v0.sy, v0.sz]);
    let mut time = 0.0;
    let mut chunk = 5.0 / rate_scale.max(1e-12);
    loop {
        y = integrate_matrix_ode(&rhs, y, &[chunk], &cfg, |_, _, _| Ok(()))?;
        time += chunk;
        let v = unpack(&y);
        let dv = bloch_rhs_raw(v, rates, squeezed, params);
        let residual = dv.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        if residual <= tol {
            return BlochVector::new(v[0], v[1], v[2]);
        }
        if time >= max_time {
            return Err(HarvestingError::BlochNotConverged { time, residual });
        }
        chunk *= 2.0;
    }
}

/// Steady state of the undriven (λ = 0) master equation:
/// ρ_ss = diag(r_e, r_d)/(r_e + r_d).
pub fn qubit_steady_state(rates: &DerivedRates) -> Result<DensityMatrix, HarvestingError> {
    let total = rates.r_e + rates.r_d;
    if total <= 0.0 {
        return Err(HarvestingError::DarkPair);
    }
    let mut m = Array2::<C64>::zeros((2, 2));
    m[[0, 0]] = C64::new(rates.r_e / total, 0.0);
    m[[1, 1]] = C64::new(rates.r_d / total, 0.0);
    Ok(DensityMatrix::new(1, m)?)
}

/// The unique temperature making ρ_ss = diag(r_e, r_d)/(r_e+r_d) canonical
/// at frequency ω₀: T = −ω₀ / ln(r_e/r_d), with ħ = k_B = 1.
///
/// (A published variant prints the dimensionally inconsistent
/// T = −ω₀·ln(r_e/r_d); the Gibbs inversion used here is the form consistent
/// with the steady state itself.) Exact r_e = r_d maps to the infinite kind;
/// r_e = 0 to the zero-temperature limit; inverted rates (r_e > r_d,
/// equivalently a₁₁ > a₄₄) to negative temperature.
pub fn effective_temperature(
    rates: &DerivedRates,
    omega0: f64,
) -> Result<EffectiveTemperature, HarvestingError> {
    let (r_e, r_d) = (rates.r_e, rates.r_d);
    if r_e == 0.0 && r_d == 0.0 {
        return Err(HarvestingError::DarkPair);
    }
    if r_e == r_d {
        return Ok(EffectiveTemperature {
            kind: TemperatureKind::Infinite,
            value: None,
        });
    }
    if r_e == 0.0 {
        return Ok(EffectiveTemperature {
            kind: TemperatureKind::ZeroLimit,
            value: Some(0.0),
        });
    }
    let value = -omega0 / (r_e / r_d).ln();
    let kind = if r_e < r_d {
        TemperatureKind::Positive
    } else {
        TemperatureKind::Negative
    };
    Ok(EffectiveTemperature {
        kind,
        value: Some(value),
    })
}

/// Heat current into the qubit.
///
/// The authoritative `definitional` value applies the dissipative part of
/// the generator to ρ and takes the overlap with the total Hamiltonian
/// H_eff + ½ω₀σ_z — the adjoint-dissipator definition. The `closed_form`
/// field evaluates the literature expression
///
///   J = (γ/4)ω₀(1 − (2N+1)⟨σ_z⟩)
///       − (γ/2)pgτ·[λ*((2N+1)/2·⟨σ⁻⟩ + M⟨σ⁺⟩) + λ(M*⟨σ⁻⟩ + (2N+1)/2·⟨σ⁺⟩)]
///
/// for comparison when the squeezed frame exists. The two do not agree in
/// general: the closed form fails to vanish at the undriven steady state
/// (it evaluates to γω₀/2 there), so the definitional value is the one used
/// for energy bookkeeping.
pub fn heat_current(
    rho_q: &DensityMatrix,
    rates: &DerivedRates,
    squeezed: Option<&SqueezedBathParams>,
    params: &CollisionParams,
) -> Result<HeatCurrent, HarvestingError> {
    if rho_q.n_atoms() != 1 {
        return Err(HarvestingError::NotAQubit {
            got: rho_q.n_atoms(),
        });
    }
    let m = rho_q.matrix();
    let h_tot = drive_hamiltonian(rates, params) + sigma_z() * C64::new(0.5 * params.omega0(), 0.0);
    let definitional = trace_of(&dissipative_action(m, rates).dot(&h_tot)).re;

    let closed_form = squeezed.map(|sq| {
        let gamma = sq.gamma_eff;
        let a = 2.0 * sq.n_eff + 1.0;
        let mc = sq.m_complex;
        let sp_avg = m[[1, 0]]; // ⟨σ⁺⟩ = ρ_ge
        let sm_avg = sp_avg.conj();
        let sz_avg = m[[0, 0]].re - m[[1, 1]].re;
        let lambda = rates.lambda;
        let bracket = lambda.conj() * (sm_avg * (0.5 * a) + mc * sp_avg)
            + lambda * (mc.conj() * sm_avg + sp_avg * (0.5 * a));
        0.25 * gamma * params.omega0() * (1.0 - a * sz_avg)
            - 0.5 * gamma * params.drive_prefactor() * bracket.re
    });

    Ok(HeatCurrent {
        definitional,
        closed_form,
    })
}

/// Energy flux through the coherent drive: Tr[−i[H_eff, ρ]·½ω₀σ_z]. This is
/// the piece that closes the balance d⟨H⟩/dt = J + P + Φ on driven states;
/// it vanishes identically when λ = 0.
pub fn coherent_energy_flux(
    rho_q: &DensityMatrix,
    rates: &DerivedRates,
    params: &CollisionParams,
) -> Result<f64, HarvestingError> {
    if rho_q.n_atoms() != 1 {
        return Err(HarvestingError::NotAQubit {
            got: rho_q.n_atoms(),
        });
    }
    let m = rho_q.matrix();
    let h = drive_hamiltonian(rates, params);
    let comm = h.dot(m) - m.dot(&h);
    let flux = (comm * C64::new(0.0, -1.0)).dot(&(sigma_z() * C64::new(0.5 * params.omega0(), 0.0)));
    Ok(trace_of(&flux).re)
}

/// Power injected by parameter modulation:
/// P = ½ω̇⟨σ_z⟩ + pgτ(λ̇⟨σ⁺⟩ + λ̇*⟨σ⁻⟩). Static protocols give exactly 0.
pub fn power(
    rho_q: &DensityMatrix,
    params: &CollisionParams,
    lambda_dot: C64,
    omega_dot: f64,
) -> Result<f64, HarvestingError> {
    if rho_q.n_atoms() != 1 {
        return Err(HarvestingError::NotAQubit {
            got: rho_q.n_atoms(),
        });
    }
    let m = rho_q.matrix();
    let sz = m[[0, 0]].re - m[[1, 1]].re;
    let sp_avg = m[[1, 0]];
    Ok(0.5 * omega_dot * sz + params.drive_prefactor() * 2.0 * (lambda_dot * sp_avg).re)
}

/// Simulate the raw collision process: pairs arrive with exponential
/// inter-arrival times at rate p; each collision conjugates pair ⊗ qubit by
/// the exact unitary and traces the pair out. Deterministic for fixed seed.
pub fn monte_carlo_collisions(
    rho_q0: &DensityMatrix,
    pair: &PairState,
    params: &CollisionParams,
    total_time: f64,
    seed: u64,
) -> Result<MonteCarloRun, HarvestingError> {
    if rho_q0.n_atoms() != 1 {
        return Err(HarvestingError::NotAQubit {
            got: rho_q0.n_atoms(),
        });
    }
    if !(total_time >= 0.0 && total_time.is_finite()) {
        return Err(HarvestingError::InvalidDuration { value: total_time });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let interarrival = Exp::new(params.p()).expect("p > 0 by construction");
    let u = collision_unitary(params, CollisionOrder::Exact);
    let udag = dagger(&u);

    let mut times = vec![0.0];
    let mut states = vec![rho_q0.clone()];
    let mut q = rho_q0.matrix().to_owned();
    let mut t = 0.0;
    loop {
        t += interarrival.sample(&mut rng);
        if t > total_time {
            break;
        }
        let joint = kron(pair.state().matrix(), &q);
        let evolved = u.dot(&joint).dot(&udag);
        let joint_state = DensityMatrix::from_integration(3, evolved)?;
        let reduced = partial_trace(&joint_state, &[3])?;
        // Renormalize so roundoff cannot accumulate over long runs.
        let mut rm = reduced.into_matrix();
        let tr = trace_of(&rm);
        rm.mapv_inplace(|z| z / tr);
        q = rm;
        times.push(t);
        states.push(DensityMatrix::from_integration(1, q.clone())?);
    }
    Ok(MonteCarloRun { times, states })
}

/// Decompose an (N, γ, M) reservoir into the two squeezed-thermal jump
/// operators R₁ = √(γ(N_th+1)/2)·R and R₂ = √(γN_th/2)·R†, with
/// R = σ⁻cosh r + e^{iφ}σ⁺sinh r, via the identification
/// N = N_th cosh²r + (N_th+1) sinh²r and Me^{iφ} = −(2N_th+1) cosh r sinh r
/// e^{iφ}. Requires a dissipative frame (γ > 0) and admissible squeezing
/// |M|² ≤ N(N+1) (the boundary is accepted; excess is an error, not
/// clamped).
pub fn squeezed_decomposition(
    squeezed: &SqueezedBathParams,
) -> Result<SqueezedDecomposition, HarvestingError> {
    let gamma = squeezed.gamma_eff;
    if !(gamma > 0.0) {
        return Err(HarvestingError::NonDissipativeFrame { gamma });
    }
    let n = squeezed.n_eff;
    let m_sq = squeezed.m_complex.norm_sqr();
    let bound = n * (n + 1.0);
    if m_sq > bound + 1e-9 * (1.0 + bound) {
        return Err(HarvestingError::InadmissibleSqueezing { m_sq, bound });
    }
    let a = 2.0 * n + 1.0;
    let disc = (a * a - 4.0 * m_sq).max(0.0);
    let n_th = 0.5 * (disc.sqrt() - 1.0).max(0.0);
    let r = 0.5 * (2.0 * m_sq.sqrt() / a).atanh();
    let phi = (-squeezed.m_complex).arg();
    let base = sigma_minus() * C64::new(r.cosh(), 0.0)
        + sigma_plus() * C64::from_polar(r.sinh(), phi);
    let r1 = &base * C64::new((gamma * (n_th + 1.0) / 2.0).sqrt(), 0.0);
    let r2 = dagger(&base) * C64::new((gamma * n_th / 2.0).sqrt(), 0.0);
    Ok(SqueezedDecomposition {
        n_th,
        r,
        phi,
        r1,
        r2,
    })
}
