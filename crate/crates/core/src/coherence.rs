//! Quantifying coherence in the excitation basis.
//!
//! The measure throughout is the ℓ₁ norm of coherence — the sum of absolute
//! values of off-diagonal density-matrix elements in the fixed excitation
//! basis. For a thermally driven pair the measure obeys a closed-form law
//! ([`analytic_pair_coherence`]), for larger registers the coherence mass
//! organizes into equal-excitation blocks ([`block_report`]), and the growth
//! of the attainable plateau with register size is summarized by a cubic
//! least-squares fit ([`cubic_fit`]).

use crate::qlinalg::DensityMatrix;
use ndarray::{Array1, Array2};
use ndarray_linalg::Solve;
use thiserror::Error;

/// Below this occupation the thermal pair law is a removable 0/0 and the
/// coherence is identically zero.
pub const NBAR_FLOOR: f64 = 1e-12;

/// Errors from coherence evaluation and fitting.
#[derive(Debug, Error)]
pub enum CoherenceError {
    #[error("mean photon number must be nonnegative, got {nbar}")]
    NegativePhotonNumber { nbar: f64 },
    #[error("time must be nonnegative, got {t}")]
    NegativeTime { t: f64 },
    #[error("cubic fit needs at least 5 points for its 4 parameters, got {got}")]
    TooFewPoints { got: usize },
    #[error("coordinate lists differ in length: {xs} xs vs {ys} ys")]
    LengthMismatch { xs: usize, ys: usize },
    #[error("normal equations for the fit are singular")]
    SingularFit,
}

/// ℓ₁ coherence decomposed over equal-excitation blocks.
#[derive(Debug, Clone)]
pub struct CoherenceReport {
    /// Σ_{i≠j} |ρ_ij| over the whole matrix.
    pub total_l1: f64,
    /// Per excitation number k (atoms in |e⟩), the ℓ₁ sum restricted to
    /// index pairs within that block; every k from 0 to N is listed.
    pub per_block_l1: Vec<(usize, f64)>,
    /// Coherence mass between different excitation blocks.
    pub off_block_l1: f64,
}

/// Least-squares cubic y ≈ c₀ + c₁x + c₂x² + c₃x³.
#[derive(Debug, Clone, Copy)]
pub struct CubicFit {
    /// Coefficients ordered by ascending power: [c₀, c₁, c₂, c₃].
    pub coefficients: [f64; 4],
    /// Coefficient of determination against the mean model, in [0, 1].
    pub r_squared: f64,
}

impl CubicFit {
    /// Evaluate the fitted polynomial.
    pub fn evaluate(&self, x: f64) -> f64 {
        let [c0, c1, c2, c3] = self.coefficients;
        ((c3 * x + c2) * x + c1) * x + c0
    }
}

/// Sum of absolute values of the off-diagonal elements.
pub fn l1_coherence(rho: &DensityMatrix) -> f64 {
    let m = rho.matrix();
    let d = rho.dim();
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                acc += m[[i, j]].norm();
            }
        }
    }
    acc
}

/// Closed-form ℓ₁ coherence of a thermally driven pair (γ₀ = 1 units),
/// independent of the exchange strength:
///
/// C(t) = n̄(n̄+1)/Z − n̄ [(n̄+1)·s·cosh(bt) − n̄²·sinh(bt)] e^{−at} / (Z·s)
///
/// with Z = 3n̄(n̄+1)+1, s = √(n̄(n̄+1)), a = 2(2n̄+1), b = 2s. The hyperbolics
/// are evaluated in the overflow-safe exponential-gap form (a > b always,
/// since a² − b² = 4Z > 0). The n̄ → 0 limit is the removable 0/0 of the
/// second term and returns exactly 0.
pub fn analytic_pair_coherence(nbar: f64, t: f64) -> Result<f64, CoherenceError> {
    if !(nbar >= 0.0) {
        return Err(CoherenceError::NegativePhotonNumber { nbar });
    }
    if !(t >= 0.0) {
        return Err(CoherenceError::NegativeTime { t });
    }
    if nbar < NBAR_FLOOR {
        return Ok(0.0);
    }
    let z = 3.0 * nbar * (nbar + 1.0) + 1.0;
    let s = (nbar * (nbar + 1.0)).sqrt();
    let a = 2.0 * (2.0 * nbar + 1.0);
    let b = 2.0 * s;
    // e^{−at} cosh(bt) and e^{−at} sinh(bt) without forming huge exponents.
    let ecosh = 0.5 * ((-(a - b) * t).exp() + (-(a + b) * t).exp());
    let esinh = 0.5 * ((-(a - b) * t).exp() - (-(a + b) * t).exp());
    let c = nbar * (nbar + 1.0) / z
        - nbar * ((nbar + 1.0) * s * ecosh - nbar * nbar * esinh) / (z * s);
    // Guard rounding at t ≈ 0, where the two terms cancel exactly.
    Ok(c.max(0.0))
}

/// Decompose the ℓ₁ coherence by excitation number. Basis index bits read
/// 0 = |e⟩, 1 = |g⟩, so index `idx` hosts N − popcount(idx) excited atoms.
pub fn block_report(rho: &DensityMatrix) -> CoherenceReport {
    let n = rho.n_atoms();
    let d = rho.dim();
    let m = rho.matrix();
    let excitations: Vec<usize> = (0..d).map(|idx| n - (idx as u64).count_ones() as usize).collect();
    let mut per_block = vec![0.0f64; n + 1];
    let mut off_block = 0.0f64;
    let mut total = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            let w = m[[i, j]].norm();
            total += w;
            if excitations[i] == excitations[j] {
                per_block[excitations[i]] += w;
            } else {
                off_block += w;
            }
        }
    }
    CoherenceReport {
        total_l1: total,
        per_block_l1: per_block.into_iter().enumerate().collect(),
        off_block_l1: off_block,
    }
}

/// Least-squares cubic fit through at least five points, solved via the
/// normal equations. `r_squared` compares residuals against the mean model;
/// a zero-variance target with zero residuals reports 1 (the fit is exact),
/// avoiding the 0/0.
pub fn cubic_fit(xs: &[f64], ys: &[f64]) -> Result<CubicFit, CoherenceError> {
    if xs.len() != ys.len() {
        return Err(CoherenceError::LengthMismatch {
            xs: xs.len(),
            ys: ys.len(),
        });
    }
    if xs.len() < 5 {
        return Err(CoherenceError::TooFewPoints { got: xs.len() });
    }
    let n = xs.len();
    // Normal equations (VᵀV)c = Vᵀy for the Vandermonde V with columns
    // 1, x, x², x³.
    let mut vtv = Array2::<f64>::zeros((4, 4));
    let mut vty = Array1::<f64>::zeros(4);
    for (&x, &y) in xs.iter().zip(ys) {
        let powers = [1.0, x, x * x, x * x * x];
        for r in 0..4 {
            vty[r] += powers[r] * y;
            for c in 0..4 {
                vtv[[r, c]] += powers[r] * powers[c];
            }
        }
    }
    let coeffs = vtv
        .solve_into(vty)
        .map_err(|_| CoherenceError::SingularFit)?;
    let coefficients = [coeffs[0], coeffs[1], coeffs[2], coeffs[3]];
    let fit = CubicFit {
        coefficients,
        r_squared: 0.0,
    };
    let mean = ys.iter().sum::<f64>() / n as f64;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let r = y - fit.evaluate(x);
        ss_res += r * r;
        let d = y - mean;
        ss_tot += d * d;
    }
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else if ss_res <= 1e-24 {
        1.0
    } else {
        0.0
    };
    Ok(CubicFit {
        coefficients,
        r_squared,
    })
}
