//! The physical model: dipole-coupled two-level atoms in a thermal photon
//! bath.
//!
//! Builds geometry-dependent coupling coefficients, the exchange (dipole)
//! Hamiltonian, and the collective thermal Lindbladian
//!
//! dρ/dt = −i[H_d, ρ]
//!        + Σ_ij γ_ij (n̄+1) [σ_j⁻ ρ σ_i⁺ − ½{σ_i⁺ σ_j⁻, ρ}]
//!        + Σ_ij γ_ij n̄     [σ_j⁺ ρ σ_i⁻ − ½{σ_i⁻ σ_j⁺, ρ}]
//!
//! with H_d = Σ_{i≠j} f_ij σ_i⁺ σ_j⁻, in units ħ = 1 and time scaled by the
//! single-atom emission rate γ₀. The Liouvillian is available as a dense
//! superoperator (small registers) or as a matrix-free action whose cost is
//! O(N²·4^N) per application.

use crate::qlinalg::{
    self, embed_site, identity, kron, sigma_minus, sigma_plus, C64, DensityMatrix, QlinalgError,
};
use ndarray::Array2;
use thiserror::Error;

/// Separations below this dimensionless threshold are treated as coincident
/// atoms rather than evaluated (the coupling formulas blow up as ξ⁻³).
pub const MIN_SEPARATION: f64 = 1e-6;

/// Dense superoperators are only permitted up to this register size; a
/// 4ᴺ×4ᴺ complex matrix beyond N = 4 stops being a desk-scale object.
pub const MAX_DENSE_ATOMS: usize = 4;

/// Errors from model construction.
#[derive(Debug, Error)]
pub enum DipolarError {
    #[error("atoms {i} and {j} are coincident (separation {separation:.3e} < {MIN_SEPARATION:.0e})")]
    CoincidentAtoms { i: usize, j: usize, separation: f64 },
    #[error("dipole orientation vector has zero norm")]
    ZeroDipoleOrientation,
    #[error("at least one atom is required")]
    NoAtoms,
    #[error("mean photon number must be nonnegative, got {nbar}")]
    NegativePhotonNumber { nbar: f64 },
    #[error("temperature must be positive, got {temperature}")]
    NonPositiveTemperature { temperature: f64 },
    #[error("dense superoperator refused for {n_atoms} atoms (limit {MAX_DENSE_ATOMS}); use the matrix-free mode")]
    DenseTooLarge { n_atoms: usize },
    #[error("expected a {expected}-atom state, got {got} atoms")]
    WrongAtomCount { expected: usize, got: usize },
    #[error(transparent)]
    State(#[from] QlinalgError),
}

/// Positions of the atoms in units of 1/k₀ (so separations are directly the
/// dimensionless retardation parameter ξ) together with the common dipole
/// orientation.
#[derive(Debug, Clone)]
pub struct AtomGeometry {
    positions: Vec<[f64; 3]>,
    dipole_orientation: [f64; 3],
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

impl AtomGeometry {
    /// Validates pairwise separations and normalizes the dipole orientation.
    pub fn new(positions: Vec<[f64; 3]>, dipole_orientation: [f64; 3]) -> Result<Self, DipolarError> {
        if positions.is_empty() {
            return Err(DipolarError::NoAtoms);
        }
        let norm = norm3(dipole_orientation);
        if norm <= 0.0 {
            return Err(DipolarError::ZeroDipoleOrientation);
        }
        let dipole_orientation = [
            dipole_orientation[0] / norm,
            dipole_orientation[1] / norm,
            dipole_orientation[2] / norm,
        ];
        for i in 0..positions.len() {
            for j in (i + 1)..positions.len() {
                let sep = norm3([
                    positions[i][0] - positions[j][0],
                    positions[i][1] - positions[j][1],
                    positions[i][2] - positions[j][2],
                ]);
                if sep < MIN_SEPARATION {
                    return Err(DipolarError::CoincidentAtoms {
                        i: i + 1,
                        j: j + 1,
                        separation: sep,
                    });
                }
            }
        }
        Ok(Self {
            positions,
            dipole_orientation,
        })
    }

    /// Evenly spaced atoms along the x axis with the dipole along z, so every
    /// pair sees α = π/2.
    pub fn collinear(n_atoms: usize, spacing: f64) -> Result<Self, DipolarError> {
        let positions = (0..n_atoms)
            .map(|k| [k as f64 * spacing, 0.0, 0.0])
            .collect();
        Self::new(positions, [0.0, 0.0, 1.0])
    }

    pub fn n_atoms(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn dipole_orientation(&self) -> [f64; 3] {
        self.dipole_orientation
    }
}

/// Real symmetric coupling matrices: exchange strengths `f` (zero diagonal)
/// and dissipation/driving rates `gamma` (diagonal γ₀), both in the same
/// rate units as `gamma0`.
#[derive(Debug, Clone)]
pub struct CouplingMatrices {
    f: Array2<f64>,
    gamma: Array2<f64>,
    gamma0: f64,
}

impl CouplingMatrices {
    pub fn n_atoms(&self) -> usize {
        self.f.dim().0
    }

    pub fn f(&self) -> &Array2<f64> {
        &self.f
    }

    pub fn gamma(&self) -> &Array2<f64> {
        &self.gamma
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }
}

/// Thermal photon bath characterized by the mean occupation n̄ at the atomic
/// transition frequency.
#[derive(Debug, Clone, Copy)]
pub struct ThermalBath {
    nbar: f64,
}

impl ThermalBath {
    pub fn new(nbar: f64) -> Result<Self, DipolarError> {
        if !(nbar >= 0.0) {
            return Err(DipolarError::NegativePhotonNumber { nbar });
        }
        Ok(Self { nbar })
    }

    /// Bose–Einstein occupation n̄ = 1/(e^{1/T} − 1) for a temperature in
    /// units of ħω₀/k_B.
    pub fn from_temperature(temperature: f64) -> Result<Self, DipolarError> {
        if !(temperature > 0.0) {
            return Err(DipolarError::NonPositiveTemperature { temperature });
        }
        Ok(Self {
            nbar: (1.0 / temperature).exp_m1().recip(),
        })
    }

    pub fn nbar(&self) -> f64 {
        self.nbar
    }
}

/// Evaluate the geometry-dependent exchange strengths f_ij and decay rates
/// γ_ij for every atom pair:
///
/// f_ij = (3γ₀/4) [ (1−3cos²α)(sin ξ/ξ² + cos ξ/ξ³) − (1−cos²α) cos ξ/ξ ]
/// γ_ij = (3γ₀/2) [ (1−3cos²α)(cos ξ/ξ² − sin ξ/ξ³) + (1−cos²α) sin ξ/ξ ]
///
/// with ξ the dimensionless separation and cos α the projection of the unit
/// separation vector on the dipole orientation. Diagonals are fixed to
/// f_ii = 0 and γ_ii = γ₀.
pub fn compute_couplings(
    geom: &AtomGeometry,
    gamma0: f64,
) -> Result<CouplingMatrices, DipolarError> {
    let n = geom.n_atoms();
    let mut f = Array2::zeros((n, n));
    let mut gamma = Array2::zeros((n, n));
    for i in 0..n {
        gamma[[i, i]] = gamma0;
        for j in (i + 1)..n {
            let r = [
                geom.positions[i][0] - geom.positions[j][0],
                geom.positions[i][1] - geom.positions[j][1],
                geom.positions[i][2] - geom.positions[j][2],
            ];
            let xi = norm3(r);
            if xi < MIN_SEPARATION {
                return Err(DipolarError::CoincidentAtoms {
                    i: i + 1,
                    j: j + 1,
                    separation: xi,
                });
            }
            let d = geom.dipole_orientation;
            let cos_alpha = (r[0] * d[0] + r[1] * d[1] + r[2] * d[2]) / xi;
            let aniso = 1.0 - 3.0 * cos_alpha * cos_alpha;
            let trans = 1.0 - cos_alpha * cos_alpha;
            let (s, c) = (xi.sin(), xi.cos());
            let fij = 0.75
                * gamma0
                * (aniso * (s / (xi * xi) + c / (xi * xi * xi)) - trans * c / xi);
            let gij = 1.5
                * gamma0
                * (aniso * (c / (xi * xi) - s / (xi * xi * xi)) + trans * s / xi);
            f[[i, j]] = fij;
            f[[j, i]] = fij;
            gamma[[i, j]] = gij;
            gamma[[j, i]] = gij;
        }
    }
    Ok(CouplingMatrices { f, gamma, gamma0 })
}

/// Idealized fully collective couplings: every off-diagonal exchange strength
/// equals `f0` and every decay rate (diagonal included) equals `gamma0`.
pub fn uniform_couplings(
    n_atoms: usize,
    f0: f64,
    gamma0: f64,
) -> Result<CouplingMatrices, DipolarError> {
    if n_atoms == 0 {
        return Err(DipolarError::NoAtoms);
    }
    let mut f = Array2::from_elem((n_atoms, n_atoms), f0);
    for i in 0..n_atoms {
        f[[i, i]] = 0.0;
    }
    let gamma = Array2::from_elem((n_atoms, n_atoms), gamma0);
    Ok(CouplingMatrices {
        f,
        gamma,
        gamma0,
    })
}

/// Exchange Hamiltonian H_d = Σ_{i≠j} f_ij σ_i⁺ σ_j⁻ on the full register.
pub fn dipole_hamiltonian(coupling: &CouplingMatrices) -> Array2<C64> {
    let n = coupling.n_atoms();
    let dim = 1usize << n;
    let mut h = Array2::zeros((dim, dim));
    for i in 1..=n {
        for j in 1..=n {
            if i == j {
                continue;
            }
            let fij = coupling.f[[i - 1, j - 1]];
            if fij == 0.0 {
                continue;
            }
            let mi = 1usize << (n - i);
            let mj = 1usize << (n - j);
            // σ_i⁺σ_j⁻ sends |…g_i…e_j…⟩ to |…e_i…g_j…⟩.
            for x in 0..dim {
                if x & mi != 0 && x & mj == 0 {
                    h[[x ^ mi ^ mj, x]] += C64::new(fij, 0.0);
                }
            }
        }
    }
    h
}

/// How the Liouvillian stores and applies itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiouvillianMode {
    /// Explicit 4ᴺ×4ᴺ superoperator; only permitted for small registers.
    Dense,
    /// Bit-arithmetic action with O(N²·4ᴺ) cost per application.
    MatrixFree,
}

/// The generator of the open-system dynamics, dρ/dt = L(ρ).
#[derive(Debug, Clone)]
pub struct Liouvillian {
    coupling: CouplingMatrices,
    bath: ThermalBath,
    mode: LiouvillianMode,
    dense: Option<Array2<C64>>,
}

impl Liouvillian {
    pub fn new(
        coupling: CouplingMatrices,
        bath: ThermalBath,
        mode: LiouvillianMode,
    ) -> Result<Self, DipolarError> {
        let n = coupling.n_atoms();
        let dense = match mode {
            LiouvillianMode::Dense => {
                if n > MAX_DENSE_ATOMS {
                    return Err(DipolarError::DenseTooLarge { n_atoms: n });
                }
                Some(build_dense_superoperator(&coupling, &bath))
            }
            LiouvillianMode::MatrixFree => None,
        };
        Ok(Self {
            coupling,
            bath,
            mode,
            dense,
        })
    }

    pub fn n_atoms(&self) -> usize {
        self.coupling.n_atoms()
    }

    /// Hilbert-space dimension 2ᴺ.
    pub fn dim(&self) -> usize {
        1usize << self.n_atoms()
    }

    pub fn mode(&self) -> LiouvillianMode {
        self.mode
    }

    pub fn coupling(&self) -> &CouplingMatrices {
        &self.coupling
    }

    pub fn bath(&self) -> &ThermalBath {
        &self.bath
    }

    /// The dense superoperator in the row-major vectorization convention
    /// vec(ρ)[i·2ᴺ + j] = ρ_ij; present only in dense mode.
    pub fn superoperator(&self) -> Option<&Array2<C64>> {
        self.dense.as_ref()
    }

    /// Evaluate L(ρ). Dense handles multiply the stored superoperator with
    /// the vectorized state; matrix-free handles walk the basis with bit
    /// arithmetic. Both produce the same action (cross-checked in tests).
    pub fn apply(&self, rho: &Array2<C64>) -> Array2<C64> {
        match (&self.dense, self.mode) {
            (Some(sup), LiouvillianMode::Dense) => {
                let dim = self.dim();
                let flat = rho.to_shape(dim * dim).unwrap();
                let out = sup.dot(&flat);
                out.into_shape_with_order((dim, dim)).unwrap()
            }
            _ => self.apply_matrix_free(rho),
        }
    }

    fn apply_matrix_free(&self, rho: &Array2<C64>) -> Array2<C64> {
        let n = self.n_atoms();
        let dim = self.dim();
        let rho_std = rho.as_standard_layout();
        let rs = rho_std.as_slice().expect("standard layout");
        let mut out_vec = vec![C64::new(0.0, 0.0); dim * dim];
        let os = out_vec.as_mut_slice();
        let f = &self.coupling.f;
        let g = &self.coupling.gamma;
        let nbar = self.bath.nbar;

        for i in 1..=n {
            let mi = 1usize << (n - i);
            for j in 1..=n {
                let mj = 1usize << (n - j);

                // Unitary part: −i f_ij (σ_i⁺σ_j⁻ ρ − ρ σ_i⁺σ_j⁻), i ≠ j.
                if i != j {
                    let fij = f[[i - 1, j - 1]];
                    if fij != 0.0 {
                        let coeff = C64::new(0.0, -fij);
                        for r in 0..dim {
                            // σ_i⁺σ_j⁻ρ needs e at i and g at j in the row.
                            if r & mi == 0 && r & mj != 0 {
                                let r2 = r ^ mi ^ mj;
                                for c in 0..dim {
                                    os[r * dim + c] += coeff * rs[r2 * dim + c];
                                }
                            }
                        }
                        let coeff = C64::new(0.0, fij);
                        for c in 0..dim {
                            // ρσ_i⁺σ_j⁻ needs g at i and e at j in the column.
                            if c & mi != 0 && c & mj == 0 {
                                let c2 = c ^ mi ^ mj;
                                for r in 0..dim {
                                    os[r * dim + c] += coeff * rs[r * dim + c2];
                                }
                            }
                        }
                    }
                }

                let gij = g[[i - 1, j - 1]];
                if gij == 0.0 {
                    continue;
                }
                let down = gij * (nbar + 1.0); // emission channel rate
                let up = gij * nbar; // absorption channel rate

                // Emission jump: down · σ_j⁻ ρ σ_i⁺ — row bit j must be g,
                // column bit i must be g; sources are the bit-flipped indices.
                if down != 0.0 {
                    for r in 0..dim {
                        if r & mj != 0 {
                            let r2 = r ^ mj;
                            for c in 0..dim {
                                if c & mi != 0 {
                                    os[r * dim + c] += down * rs[r2 * dim + (c ^ mi)];
                                }
                            }
                        }
                    }
                    // −(down/2) {σ_i⁺σ_j⁻, ρ}
                    let half = 0.5 * down;
                    if i != j {
                        for r in 0..dim {
                            if r & mi == 0 && r & mj != 0 {
                                let r2 = r ^ mi ^ mj;
                                for c in 0..dim {
                                    os[r * dim + c] -= half * rs[r2 * dim + c];
                                }
                            }
                        }
                        for c in 0..dim {
                            if c & mi != 0 && c & mj == 0 {
                                let c2 = c ^ mi ^ mj;
                                for r in 0..dim {
                                    os[r * dim + c] -= half * rs[r * dim + c2];
                                }
                            }
                        }
                    } else {
                        for r in 0..dim {
                            if r & mi == 0 {
                                for c in 0..dim {
                                    os[r * dim + c] -= half * rs[r * dim + c];
                                }
                            }
                        }
                        for c in 0..dim {
                            if c & mi == 0 {
                                for r in 0..dim {
                                    os[r * dim + c] -= half * rs[r * dim + c];
                                }
                            }
                        }
                    }
                }

                // Absorption jump: up · σ_j⁺ ρ σ_i⁻ — row bit j must be e,
                // column bit i must be e.
                if up != 0.0 {
                    for r in 0..dim {
                        if r & mj == 0 {
                            let r2 = r ^ mj;
                            for c in 0..dim {
                                if c & mi == 0 {
                                    os[r * dim + c] += up * rs[r2 * dim + (c ^ mi)];
                                }
                            }
                        }
                    }
                    // −(up/2) {σ_i⁻σ_j⁺, ρ}
                    let half = 0.5 * up;
                    if i != j {
                        for r in 0..dim {
                            if r & mi != 0 && r & mj == 0 {
                                let r2 = r ^ mi ^ mj;
                                for c in 0..dim {
                                    os[r * dim + c] -= half * rs[r2 * dim + c];
                                }
                            }
                        }
                        for c in 0..dim {
                            if c & mi == 0 && c & mj != 0 {
                                let c2 = c ^ mi ^ mj;
                                for r in 0..dim {
                                    os[r * dim + c] -= half * rs[r * dim + c2];
                                }
                            }
                        }
                    } else {
                        for r in 0..dim {
                            if r & mi != 0 {
                                for c in 0..dim {
                                    os[r * dim + c] -= half * rs[r * dim + c];
                                }
                            }
                        }
                        for c in 0..dim {
                            if c & mi != 0 {
                                for r in 0..dim {
                                    os[r * dim + c] -= half * rs[r * dim + c];
                                }
                            }
                        }
                    }
                }
            }
        }
        Array2::from_shape_vec((dim, dim), out_vec).unwrap()
    }
}

/// Assemble the dense superoperator by the Kronecker route, independent of
/// the bit-arithmetic action: vec(AρB) = (A ⊗ Bᵀ)·vec(ρ) for row-major
/// vectorization.
fn build_dense_superoperator(coupling: &CouplingMatrices, bath: &ThermalBath) -> Array2<C64> {
    let n = coupling.n_atoms();
    let dim = 1usize << n;
    let sdim = dim * dim;
    let eye = identity(dim);
    let h = dipole_hamiltonian(coupling);
    let minus_i = C64::new(0.0, -1.0);
    let mut sup = kron(&h, &eye).mapv(|z| z * minus_i);
    sup = sup + kron(&eye, &h.t().to_owned()).mapv(|z| z * (-minus_i));

    let sp: Vec<Array2<C64>> = (1..=n)
        .map(|site| embed_site(&sigma_plus(), site, n).expect("valid site"))
        .collect();
    let sm: Vec<Array2<C64>> = (1..=n)
        .map(|site| embed_site(&sigma_minus(), site, n).expect("valid site"))
        .collect();

    let mut acc = Array2::<C64>::zeros((sdim, sdim));
    for i in 0..n {
        for j in 0..n {
            let gij = coupling.gamma[[i, j]];
            if gij == 0.0 {
                continue;
            }
            let down = C64::new(gij * (bath.nbar + 1.0), 0.0);
            let up = C64::new(gij * bath.nbar, 0.0);
            // Emission: σ_j⁻ ρ σ_i⁺ − ½{σ_i⁺σ_j⁻, ρ}
            let jump = kron(&sm[j], &sp[i].t().to_owned());
            let pm = sp[i].dot(&sm[j]);
            let anti = kron(&pm, &eye) + kron(&eye, &pm.t().to_owned());
            acc = acc + jump.mapv(|z| z * down) - anti.mapv(|z| z * (0.5 * down));
            // Absorption: σ_j⁺ ρ σ_i⁻ − ½{σ_i⁻σ_j⁺, ρ}
            let jump = kron(&sp[j], &sm[i].t().to_owned());
            let mp = sm[i].dot(&sp[j]);
            let anti = kron(&mp, &eye) + kron(&eye, &mp.t().to_owned());
            acc = acc + jump.mapv(|z| z * up) - anti.mapv(|z| z * (0.5 * up));
        }
    }
    sup + acc
}

/// Closed-form map for a dipole-coupled pair evolving with no dissipation
/// (γ₀ = 0) under the uniform exchange Hamiltonian f(σ₁⁺σ₂⁻ + σ₂⁺σ₁⁻).
///
/// In the basis {|ee⟩, |eg⟩, |ge⟩, |gg⟩} (1-based element labels):
/// corners ρ₁₁, ρ₁₄, ρ₄₄ are constant; the single-excitation edge coherences
/// rotate with ft; the central block mixes populations ρ₂₂, ρ₃₃ with Im ρ₂₃
/// at 2ft while Re ρ₂₃ stays frozen. States with ρ₂₂ = ρ₃₃ and real ρ₂₃ are
/// fixed points, as are states supported only on the corners.
pub fn unitary_pair_evolution(
    rho0: &DensityMatrix,
    f: f64,
    t: f64,
) -> Result<DensityMatrix, DipolarError> {
    if rho0.n_atoms() != 2 {
        return Err(DipolarError::WrongAtomCount {
            expected: 2,
            got: rho0.n_atoms(),
        });
    }
    let m = rho0.matrix();
    let i_unit = C64::i();
    let (s1, c1) = (f * t).sin_cos();
    let (s2, c2) = (2.0 * f * t).sin_cos();
    let r22 = m[[1, 1]].re;
    let r33 = m[[2, 2]].re;
    let r23 = m[[1, 2]];
    let sum = r22 + r33;
    let diff = r22 - r33;

    let mut out = Array2::<C64>::zeros((4, 4));
    out[[0, 0]] = m[[0, 0]];
    out[[3, 3]] = m[[3, 3]];
    out[[0, 3]] = m[[0, 3]];
    out[[0, 1]] = m[[0, 1]] * c1 + i_unit * m[[0, 2]] * s1;
    out[[0, 2]] = m[[0, 2]] * c1 + i_unit * m[[0, 1]] * s1;
    out[[1, 3]] = m[[1, 3]] * c1 - i_unit * m[[2, 3]] * s1;
    out[[2, 3]] = m[[2, 3]] * c1 - i_unit * m[[1, 3]] * s1;
    out[[1, 1]] = C64::new(0.5 * (sum + diff * c2 - 2.0 * r23.im * s2), 0.0);
    out[[2, 2]] = C64::new(0.5 * (sum - diff * c2 + 2.0 * r23.im * s2), 0.0);
    out[[1, 2]] = C64::new(r23.re, r23.im * c2 + 0.5 * diff * s2);
    // Hermiticity from the upper triangle.
    for r in 0..4 {
        for c in 0..r {
            out[[r, c]] = out[[c, r]].conj();
        }
    }
    Ok(DensityMatrix::new(2, out)?)
}

/// Embedded collective lowering operator Σ_i σ_i⁻ (handy for tests and for
/// building interaction Hamiltonians).
pub fn collective_lowering(n_atoms: usize) -> Array2<C64> {
    let dim = 1usize << n_atoms;
    let mut s = Array2::zeros((dim, dim));
    for site in 1..=n_atoms {
        s = s + embed_site(&sigma_minus(), site, n_atoms).expect("valid site");
    }
    s
}

/// Check L(ρ) is traceless for a valid ρ (diagnostic used by tests).
pub fn action_trace(l: &Liouvillian, rho: &DensityMatrix) -> C64 {
    qlinalg::trace_of(&l.apply(rho.matrix()))
}
