//! Operator algebra on multi-qubit Hilbert spaces.
//!
//! Everything downstream builds on the primitives here: Kronecker products,
//! single-site operator embeddings, partial traces, matrix exponentials, and
//! the validated [`DensityMatrix`] state type.
//!
//! Basis convention (used consistently across the crate): the computational
//! basis of an `n`-atom register is indexed with atom 1 as the most
//! significant bit, bit value 0 = excited |e⟩, bit value 1 = ground |g⟩.
//! Index 0 is |e…e⟩ and index 2ⁿ−1 is |g…g⟩. For a two-atom register the
//! order is {|ee⟩, |eg⟩, |ge⟩, |gg⟩}.

use ndarray::{Array1, Array2, ShapeBuilder};
use ndarray_linalg::{EigValsh, EighInto, Inverse, UPLO};
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Double-precision complex scalar used for all operators and states.
pub type C64 = Complex<f64>;

/// Errors from operator-algebra primitives and state validation.
#[derive(Debug, Error)]
pub enum QlinalgError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },
    #[error("operator must be {expected}x{expected}, got {rows}x{cols}")]
    WrongOperatorSize {
        rows: usize,
        cols: usize,
        expected: usize,
    },
    #[error("site {site} out of range for {n_atoms} atoms (sites are 1-based)")]
    SiteOutOfRange { site: usize, n_atoms: usize },
    #[error("keep set must be a nonempty subset of 1..={n_atoms}")]
    InvalidKeepSet { n_atoms: usize },
    #[error("matrix dimension {dim} does not match {n_atoms} atoms (expected {expected})")]
    DimensionMismatch {
        dim: usize,
        n_atoms: usize,
        expected: usize,
    },
    #[error("state is not Hermitian: max |rho - rho^dagger| = {deviation:.3e}")]
    NotHermitian { deviation: f64 },
    #[error("state trace deviates from one by {deviation:.3e}")]
    TraceNotOne { deviation: f64 },
    #[error("state has eigenvalue {eigenvalue:.3e} below the positivity floor")]
    NotPositive { eigenvalue: f64 },
    #[error("state vector has zero norm")]
    ZeroNorm,
    #[error("linear-algebra backend failure: {0}")]
    Backend(#[from] ndarray_linalg::error::LinalgError),
}

/// Identity matrix of the given dimension.
pub fn identity(dim: usize) -> Array2<C64> {
    Array2::eye(dim)
}

/// Single-atom raising operator σ⁺ = |e⟩⟨g|.
pub fn sigma_plus() -> Array2<C64> {
    let mut m = Array2::zeros((2, 2));
    m[[0, 1]] = C64::new(1.0, 0.0);
    m
}

/// Single-atom lowering operator σ⁻ = |g⟩⟨e|.
pub fn sigma_minus() -> Array2<C64> {
    let mut m = Array2::zeros((2, 2));
    m[[1, 0]] = C64::new(1.0, 0.0);
    m
}

/// Pauli σ_x.
pub fn sigma_x() -> Array2<C64> {
    let mut m = Array2::zeros((2, 2));
    m[[0, 1]] = C64::new(1.0, 0.0);
    m[[1, 0]] = C64::new(1.0, 0.0);
    m
}

/// Pauli σ_y.
pub fn sigma_y() -> Array2<C64> {
    let mut m = Array2::zeros((2, 2));
    m[[0, 1]] = C64::new(0.0, -1.0);
    m[[1, 0]] = C64::new(0.0, 1.0);
    m
}

/// Pauli σ_z = |e⟩⟨e| − |g⟩⟨g|.
pub fn sigma_z() -> Array2<C64> {
    let mut m = Array2::zeros((2, 2));
    m[[0, 0]] = C64::new(1.0, 0.0);
    m[[1, 1]] = C64::new(-1.0, 0.0);
    m
}

/// Conjugate transpose.
pub fn dagger(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

/// Matrix trace.
pub fn trace_of(a: &Array2<C64>) -> C64 {
    a.diag().sum()
}

/// Commutator [a, b] = ab − ba.
pub fn commutator(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    a.dot(b) - b.dot(a)
}

/// Anticommutator {a, b} = ab + ba.
pub fn anticommutator(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    a.dot(b) + b.dot(a)
}

/// Largest entrywise absolute value.
pub fn max_abs(a: &Array2<C64>) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Largest entrywise absolute difference between two equal-shaped matrices.
pub fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    debug_assert_eq!(a.dim(), b.dim());
    a.iter()
        .zip(b.iter())
        .fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

/// Frobenius norm.
pub fn frobenius_norm(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Entrywise absolute-value sum (the vectorized l1 norm).
pub fn entrywise_l1(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm()).sum()
}

/// Replace `m` by its Hermitian part (m + m†)/2.
pub fn hermitize(m: &mut Array2<C64>) {
    let h = dagger(m);
    *m += &h;
    m.mapv_inplace(|z| 0.5 * z);
}

fn hermitian_deviation(a: &Array2<C64>) -> f64 {
    let d = a.dim().0;
    let mut dev = 0.0_f64;
    for i in 0..d {
        for j in i..d {
            dev = dev.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    dev
}

/// Kronecker (tensor) product: `out = a ⊗ b`, dimensions multiply.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i1 in 0..ar {
        for j1 in 0..ac {
            let av = a[[i1, j1]];
            if av == C64::new(0.0, 0.0) {
                continue;
            }
            for i2 in 0..br {
                for j2 in 0..bc {
                    out[[i1 * br + i2, j1 * bc + j2]] = av * b[[i2, j2]];
                }
            }
        }
    }
    out
}

/// Embed a single-atom operator at `site` (1-based) of an `n_atoms` register,
/// acting as the identity on every other site. Site 1 is the most significant
/// qubit of the basis index.
pub fn embed_site(
    op: &Array2<C64>,
    site: usize,
    n_atoms: usize,
) -> Result<Array2<C64>, QlinalgError> {
    let (r, c) = op.dim();
    if r != 2 || c != 2 {
        return Err(QlinalgError::WrongOperatorSize {
            rows: r,
            cols: c,
            expected: 2,
        });
    }
    if site == 0 || site > n_atoms {
        return Err(QlinalgError::SiteOutOfRange { site, n_atoms });
    }
    let mut out = identity(1);
    for s in 1..=n_atoms {
        out = if s == site {
            kron(&out, op)
        } else {
            kron(&out, &identity(2))
        };
    }
    Ok(out)
}

/// Trace out every site not listed in `keep_sites`, returning the reduced
/// state over the kept sites (in their original relative order).
pub fn partial_trace(
    state: &DensityMatrix,
    keep_sites: &[usize],
) -> Result<DensityMatrix, QlinalgError> {
    let n = state.n_atoms();
    let mut keep = keep_sites.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.is_empty() || keep[0] == 0 || *keep.last().unwrap() > n {
        return Err(QlinalgError::InvalidKeepSet { n_atoms: n });
    }
    let k = keep.len();
    let traced: Vec<usize> = (1..=n).filter(|s| !keep.contains(s)).collect();
    let dim_keep = 1usize << k;
    let dim_traced = 1usize << traced.len();
    let m = state.matrix();
    let mut out = Array2::zeros((dim_keep, dim_keep));
    for a in 0..dim_keep {
        for b in 0..dim_keep {
            let mut base_r = 0usize;
            let mut base_c = 0usize;
            for (j, &s) in keep.iter().enumerate() {
                base_r |= ((a >> (k - 1 - j)) & 1) << (n - s);
                base_c |= ((b >> (k - 1 - j)) & 1) << (n - s);
            }
            let mut acc = C64::new(0.0, 0.0);
            for e in 0..dim_traced {
                let mut r = base_r;
                let mut c = base_c;
                for (j, &s) in traced.iter().enumerate() {
                    let bit = (e >> (traced.len() - 1 - j)) & 1;
                    r |= bit << (n - s);
                    c |= bit << (n - s);
                }
                acc += m[[r, c]];
            }
            out[[a, b]] = acc;
        }
    }
    DensityMatrix::new(k, out)
}

/// Eigendecomposition of a Hermitian matrix: eigenvalues in ascending order
/// and a unitary whose **columns** are the matching eigenvectors, so that
/// `h = V · diag(vals) · V†`.
///
/// The input is copied into column-major storage before the LAPACK call; the
/// backend transposes row-major input in place without conjugating, which
/// silently diagonalizes the complex conjugate of `h` instead of `h`. The
/// copy makes the convention independent of the caller's memory layout.
pub fn eigh_decompose(h: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>), QlinalgError> {
    let (r, c) = h.dim();
    if r != c {
        return Err(QlinalgError::NonSquare { rows: r, cols: c });
    }
    let mut hf = Array2::<C64>::zeros((r, r).f());
    hf.assign(h);
    let (vals, vecs) = hf.eigh_into(UPLO::Lower)?;
    Ok((vals, vecs))
}

/// Matrix exponential `exp(scale · a)`.
///
/// Hermitian inputs are exponentiated through their eigendecomposition (the
/// generators in this crate are Hermitian or Hermitian-up-to-scale); general
/// inputs fall back to Padé scaling-and-squaring.
pub fn matrix_exp(a: &Array2<C64>, scale: C64) -> Result<Array2<C64>, QlinalgError> {
    let (r, c) = a.dim();
    if r != c {
        return Err(QlinalgError::NonSquare { rows: r, cols: c });
    }
    if r == 0 {
        return Ok(Array2::zeros((0, 0)));
    }
    let herm_tol = 1e-12 * (1.0 + max_abs(a));
    if hermitian_deviation(a) <= herm_tol {
        let (vals, vecs) = eigh_decompose(a)?;
        let mut d = Array2::<C64>::zeros((r, r));
        for (i, &v) in vals.iter().enumerate() {
            d[[i, i]] = (scale * v).exp();
        }
        Ok(vecs.dot(&d).dot(&dagger(&vecs)))
    } else {
        pade_exp(&a.mapv(|z| z * scale))
    }
}

/// Maximum absolute column sum (induced 1-norm).
fn one_norm(a: &Array2<C64>) -> f64 {
    let (r, c) = a.dim();
    let mut best = 0.0_f64;
    for j in 0..c {
        let mut s = 0.0;
        for i in 0..r {
            s += a[[i, j]].norm();
        }
        best = best.max(s);
    }
    best
}

/// Degree-13 Padé approximation with scaling and squaring.
pub(crate) fn pade_exp(m: &Array2<C64>) -> Result<Array2<C64>, QlinalgError> {
    const THETA13: f64 = 5.371_920_351_148_152;
    const B: [f64; 14] = [
        64_764_752_532_480_000.0,
        32_382_376_266_240_000.0,
        7_771_770_303_897_600.0,
        1_187_353_796_428_800.0,
        129_060_195_264_000.0,
        10_559_470_521_600.0,
        670_442_572_800.0,
        33_522_128_640.0,
        1_323_241_920.0,
        40_840_800.0,
        960_960.0,
        16_380.0,
        182.0,
        1.0,
    ];
    let dim = m.dim().0;
    let norm = one_norm(m);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as u32
    } else {
        0
    };
    let a = m.mapv(|z| z / C64::new(2f64.powi(squarings as i32), 0.0));
    let eye = identity(dim);
    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);
    let u_inner = a6.mapv(|z| z * B[13]) + a4.mapv(|z| z * B[11]) + a2.mapv(|z| z * B[9]);
    let u = a.dot(
        &(a6.dot(&u_inner)
            + a6.mapv(|z| z * B[7])
            + a4.mapv(|z| z * B[5])
            + a2.mapv(|z| z * B[3])
            + eye.mapv(|z| z * B[1])),
    );
    let v_inner = a6.mapv(|z| z * B[12]) + a4.mapv(|z| z * B[10]) + a2.mapv(|z| z * B[8]);
    let v = a6.dot(&v_inner)
        + a6.mapv(|z| z * B[6])
        + a4.mapv(|z| z * B[4])
        + a2.mapv(|z| z * B[2])
        + eye.mapv(|z| z * B[0]);
    let denom = &v - &u;
    let numer = &v + &u;
    let mut result = denom.inv()?.dot(&numer);
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    Ok(result)
}

/// Validated density matrix of an `n_atoms`-qubit register.
///
/// Invariants enforced at construction: Hermitian (entrywise deviation at
/// most 1e-12), unit trace (within 1e-10), and positive semidefinite up to a
/// numerical floor of −1e-10 on the smallest eigenvalue. States produced by
/// numerical integration are validated with relaxed trace/positivity bounds
/// (1e-8) that reflect integration error rather than construction error.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_atoms: usize,
    matrix: Array2<C64>,
}

impl DensityMatrix {
    /// Strictly validated constructor.
    pub fn new(n_atoms: usize, matrix: Array2<C64>) -> Result<Self, QlinalgError> {
        Self::with_tolerances(n_atoms, matrix, 1e-12, 1e-10, 1e-10)
    }

    /// Constructor for integrator output: hermitizes, then validates with
    /// the relaxed trajectory tolerances (trace within 1e-8, eigenvalue
    /// floor −1e-8).
    pub(crate) fn from_integration(
        n_atoms: usize,
        mut matrix: Array2<C64>,
    ) -> Result<Self, QlinalgError> {
        hermitize(&mut matrix);
        Self::with_tolerances(n_atoms, matrix, 1e-12, 1e-8, 1e-8)
    }

    fn with_tolerances(
        n_atoms: usize,
        matrix: Array2<C64>,
        herm_tol: f64,
        trace_tol: f64,
        eig_floor: f64,
    ) -> Result<Self, QlinalgError> {
        let (r, c) = matrix.dim();
        if r != c {
            return Err(QlinalgError::NonSquare { rows: r, cols: c });
        }
        let expected = 1usize << n_atoms;
        if r != expected {
            return Err(QlinalgError::DimensionMismatch {
                dim: r,
                n_atoms,
                expected,
            });
        }
        let herm_dev = hermitian_deviation(&matrix);
        if herm_dev > herm_tol {
            return Err(QlinalgError::NotHermitian { deviation: herm_dev });
        }
        let trace_dev = (trace_of(&matrix) - C64::new(1.0, 0.0)).norm();
        if trace_dev > trace_tol {
            return Err(QlinalgError::TraceNotOne {
                deviation: trace_dev,
            });
        }
        let evals = matrix.eigvalsh(UPLO::Lower)?;
        let min_eval = evals.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eval < -eig_floor {
            return Err(QlinalgError::NotPositive {
                eigenvalue: min_eval,
            });
        }
        Ok(Self { n_atoms, matrix })
    }

    /// Pure state |ψ⟩⟨ψ| from amplitudes in the computational basis.
    /// The vector is normalized; a zero vector is rejected.
    pub fn pure(n_atoms: usize, amplitudes: &[C64]) -> Result<Self, QlinalgError> {
        let dim = 1usize << n_atoms;
        if amplitudes.len() != dim {
            return Err(QlinalgError::DimensionMismatch {
                dim: amplitudes.len(),
                n_atoms,
                expected: dim,
            });
        }
        let norm_sqr: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if norm_sqr <= 0.0 {
            return Err(QlinalgError::ZeroNorm);
        }
        let norm = norm_sqr.sqrt();
        let mut m = Array2::zeros((dim, dim));
        for (i, zi) in amplitudes.iter().enumerate() {
            for (j, zj) in amplitudes.iter().enumerate() {
                m[[i, j]] = (zi / norm) * (zj / norm).conj();
            }
        }
        Self::new(n_atoms, m)
    }

    /// All atoms in the ground state: |g…g⟩⟨g…g| (basis index 2ⁿ−1).
    pub fn ground(n_atoms: usize) -> Self {
        let dim = 1usize << n_atoms;
        let mut m = Array2::zeros((dim, dim));
        m[[dim - 1, dim - 1]] = C64::new(1.0, 0.0);
        Self { n_atoms, matrix: m }
    }

    /// All atoms in the excited state: |e…e⟩⟨e…e| (basis index 0).
    pub fn excited(n_atoms: usize) -> Self {
        let dim = 1usize << n_atoms;
        let mut m = Array2::zeros((dim, dim));
        m[[0, 0]] = C64::new(1.0, 0.0);
        Self { n_atoms, matrix: m }
    }

    /// Maximally mixed state I/2ⁿ.
    pub fn maximally_mixed(n_atoms: usize) -> Self {
        let dim = 1usize << n_atoms;
        let m = identity(dim).mapv(|z| z / dim as f64);
        Self { n_atoms, matrix: m }
    }

    /// Random full-rank state: ρ = GG†/tr(GG†) with G a complex Gaussian
    /// (Ginibre) matrix. Useful for property tests and cross-checks.
    pub fn random<R: Rng + ?Sized>(n_atoms: usize, rng: &mut R) -> Self {
        let dim = 1usize << n_atoms;
        let mut g = Array2::zeros((dim, dim));
        for i in 0..dim {
            for j in 0..dim {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                g[[i, j]] = C64::new(re, im);
            }
        }
        let mut m = g.dot(&dagger(&g));
        let tr = trace_of(&m).re;
        m.mapv_inplace(|z| z / tr);
        hermitize(&mut m);
        Self { n_atoms, matrix: m }
    }

    /// Number of atoms (qubits).
    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    /// Hilbert-space dimension 2ⁿ.
    pub fn dim(&self) -> usize {
        1usize << self.n_atoms
    }

    /// Borrow the underlying matrix.
    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    /// Consume into the underlying matrix.
    pub fn into_matrix(self) -> Array2<C64> {
        self.matrix
    }

    /// Single element ρ_ij (0-based indices).
    pub fn element(&self, i: usize, j: usize) -> C64 {
        self.matrix[[i, j]]
    }

    /// Expectation value tr(ρ · op).
    pub fn expectation(&self, op: &Array2<C64>) -> C64 {
        let d = self.dim();
        debug_assert_eq!(op.dim(), (d, d));
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                acc += self.matrix[[i, j]] * op[[j, i]];
            }
        }
        acc
    }
}
