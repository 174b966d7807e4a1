//! Finite-dimensional states and measurements.
//!
//! Matrices are small (d ≤ 16), so everything goes through dense Hermitian
//! eigendecompositions: matrix square roots clamp tiny negative eigenvalues to
//! zero, and PSD checks accept eigenvalues down to `-PSD_TOL`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::entropy::ProbVector;
use crate::{Error, Result};

pub use nalgebra::Complex;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;
pub const COMPLETENESS_TOL: f64 = 1e-10;
pub const BLOCH_TOL: f64 = 1e-12;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn hermitian_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigen(m).0.first().copied().unwrap_or(0.0)
}

/// Square root of a PSD matrix, negative eigenvalues clamped to zero.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let roots = CVector::from_iterator(values.len(), values.iter().map(|&v| c(v.max(0.0).sqrt())));
    &vectors * CMatrix::from_diagonal(&roots) * vectors.adjoint()
}

/// Trace norm ‖A‖₁ of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    hermitian_eigen(m).0.iter().map(|v| v.abs()).sum()
}

/// A d×d Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let d = matrix.nrows();
        if d == 0 || matrix.ncols() != d {
            return Err(Error::InvalidDimension(d));
        }
        let defect = hermitian_defect(&matrix);
        if defect > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (defect {defect:e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min = min_eigenvalue(&matrix);
        if min < -PSD_TOL {
            return Err(Error::NotPsd(min));
        }
        Ok(Self { matrix })
    }

    /// |ψ⟩⟨ψ| for a (not necessarily normalized) state vector.
    pub fn pure(state: &CVector) -> Result<Self> {
        let norm = state.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let psi = state / c(norm);
        let mut rho = &psi * psi.adjoint();
        symmetrize(&mut rho);
        Self::new(rho)
    }

    pub fn maximally_mixed(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension(d));
        }
        Self::new(CMatrix::identity(d, d) / c(d as f64))
    }

    /// Diagonal state Σ p_i |i⟩⟨i|.
    pub fn diagonal(p: &ProbVector) -> Result<Self> {
        let diag = CVector::from_iterator(p.len(), p.as_slice().iter().map(|&v| c(v)));
        Self::new(CMatrix::from_diagonal(&diag))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

fn symmetrize(m: &mut CMatrix) {
    let herm = (m.clone() + m.adjoint()) / c(2.0);
    *m = herm;
}

/// A d-outcome measurement on a d-dimensional space.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<CMatrix>,
}

impl Povm {
    pub fn new(elements: Vec<CMatrix>) -> Result<Self> {
        let d = elements.first().map(|e| e.nrows()).ok_or(Error::InvalidDimension(0))?;
        let mut sum = CMatrix::zeros(d, d);
        for e in &elements {
            if e.nrows() != d || e.ncols() != d {
                return Err(Error::DimensionMismatch(d, e.nrows()));
            }
            if hermitian_defect(e) > HERMITIAN_TOL {
                return Err(Error::InvalidState("POVM element is not Hermitian".into()));
            }
            let min = min_eigenvalue(e);
            if min < -PSD_TOL {
                return Err(Error::NotPsd(min));
            }
            sum += e;
        }
        let defect = (sum - CMatrix::identity(d, d)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if defect > COMPLETENESS_TOL {
            return Err(Error::InvalidState(format!(
                "POVM elements do not sum to identity (defect {defect:e})"
            )));
        }
        Ok(Self { elements })
    }

    /// Rank-1 projectors onto the columns of a unitary.
    pub fn from_basis(basis: &CMatrix) -> Result<Self> {
        let elements = basis
            .column_iter()
            .map(|col| {
                let mut p = col * col.adjoint();
                symmetrize(&mut p);
                p
            })
            .collect();
        Self::new(elements)
    }

    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Projectors |z⟩⟨z| onto the standard basis.
pub fn computational_basis_povm(d: usize) -> Result<Povm> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    Povm::from_basis(&CMatrix::identity(d, d))
}

/// The DFT basis |x⟩ = d^{-1/2} Σ_z ω^{xz} |z⟩, ω = e^{2πi/d}, as columns.
pub fn fourier_basis(d: usize) -> CMatrix {
    let norm = (d as f64).sqrt().recip();
    CMatrix::from_fn(d, d, |z, x| {
        let phase = 2.0 * PI * ((x * z) % d) as f64 / d as f64;
        C64::from_polar(norm, phase)
    })
}

/// Projectors onto the discrete Fourier basis; mutually unbiased with the
/// computational basis.
pub fn fourier_basis_povm(d: usize) -> Result<Povm> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    Povm::from_basis(&fourier_basis(d))
}

/// Qubit basis rotated by `theta` about the y axis of the Bloch sphere.
pub fn rotated_qubit_basis_povm(theta: f64) -> Result<Povm> {
    let (s, co) = (theta / 2.0).sin_cos();
    let u = CMatrix::from_row_slice(2, 2, &[c(co), c(-s), c(s), c(co)]);
    Povm::from_basis(&u)
}

/// Born probabilities Tr[N_x ρ], clamped to [0, 1] and renormalized.
pub fn born_probabilities(rho: &DensityMatrix, povm: &Povm) -> Result<ProbVector> {
    if rho.dim() != povm.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), povm.dim()));
    }
    let raw: Vec<f64> = povm
        .elements()
        .iter()
        .map(|e| (e * rho.matrix()).trace().re.clamp(0.0, 1.0))
        .collect();
    let total: f64 = raw.iter().sum();
    ProbVector::new(raw.into_iter().map(|p| p / total).collect())
}

/// Maximum overlap `c = max_{z,x} ‖√M_z √N_x‖²_∞` and incompatibility `q = log2(1/c)`.
pub fn overlap_c(a: &Povm, b: &Povm) -> Result<(f64, f64)> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    let roots_a: Vec<CMatrix> = a.elements().iter().map(psd_sqrt).collect();
    let roots_b: Vec<CMatrix> = b.elements().iter().map(psd_sqrt).collect();
    let mut best = 0.0f64;
    for ra in &roots_a {
        for rb in &roots_b {
            let product = ra * rb;
            let top = product.singular_values().iter().copied().fold(0.0, f64::max);
            best = best.max(top * top);
        }
    }
    if best <= 0.0 {
        return Err(Error::Domain("POVMs have zero overlap".into()));
    }
    Ok((best, -best.log2()))
}

/// Real Bloch vector of a qubit state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm2 = x * x + y * y + z * z;
        if !norm2.is_finite() || norm2 > 1.0 + BLOCH_TOL {
            return Err(Error::InvalidState(format!("Bloch vector norm² {norm2} exceeds 1")));
        }
        Ok(Self { x, y, z })
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

fn paulis() -> [CMatrix; 3] {
    let o = c(0.0);
    let i = C64::new(0.0, 1.0);
    [
        CMatrix::from_row_slice(2, 2, &[o, c(1.0), c(1.0), o]),
        CMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        CMatrix::from_row_slice(2, 2, &[c(1.0), o, o, c(-1.0)]),
    ]
}

/// r_i = Tr[ρ σ_i].
pub fn density_to_bloch(rho: &DensityMatrix) -> Result<BlochVector> {
    if rho.dim() != 2 {
        return Err(Error::InvalidDimension(rho.dim()));
    }
    let [sx, sy, sz] = paulis();
    let m = rho.matrix();
    BlochVector::new((m * sx).trace().re, (m * sy).trace().re, (m * sz).trace().re)
}

/// ρ = ½(𝟙 + r·σ).
pub fn bloch_to_density(r: &BlochVector) -> Result<DensityMatrix> {
    let [sx, sy, sz] = paulis();
    let m = (CMatrix::identity(2, 2) + sx * c(r.x) + sy * c(r.y) + sz * c(r.z)) * c(0.5);
    DensityMatrix::new(m)
}

/// Tr[ρ²].
pub fn purity(rho: &DensityMatrix) -> f64 {
    // ρ is Hermitian, so Tr[ρ²] = Σ |ρ_ij|².
    rho.matrix().iter().map(|z| z.norm_sqr()).sum()
}

/// Largest |r_y| compatible with a physical state given r_z and r_x.
pub fn bloch_y_bound(r_z: f64, r_x: f64) -> Result<f64> {
    let rest = 1.0 - r_z * r_z - r_x * r_x;
    if rest < 0.0 {
        return Err(Error::Domain(format!("r_z² + r_x² = {} exceeds 1", 1.0 - rest)));
    }
    Ok(rest.sqrt())
}

/// Classical-quantum state Σ_z P_z |z⟩⟨z| ⊗ ρ_E^z.
#[derive(Debug, Clone)]
pub struct CqState {
    outcomes: Vec<(f64, DensityMatrix)>,
}

impl CqState {
    pub fn new(outcomes: Vec<(f64, DensityMatrix)>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::InvalidProbabilities("no outcomes".into()));
        }
        let total: f64 = outcomes.iter().map(|(p, _)| *p).sum();
        if outcomes.iter().any(|(p, _)| !(0.0..=1.0).contains(p)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidProbabilities(format!("weights sum to {total}")));
        }
        let d = outcomes[0].1.dim();
        if let Some((_, bad)) = outcomes.iter().find(|(_, r)| r.dim() != d) {
            return Err(Error::DimensionMismatch(d, bad.dim()));
        }
        Ok(Self { outcomes })
    }

    pub fn outcomes(&self) -> &[(f64, DensityMatrix)] {
        &self.outcomes
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.outcomes.iter().map(|(p, _)| *p).collect()
    }

    /// The classical register alone: diag(P_z).
    pub fn classical_marginal(&self) -> Result<DensityMatrix> {
        DensityMatrix::diagonal(&ProbVector::new(self.probabilities())?)
    }
}

/// Optimal probability of guessing a binary Z from E:
/// ½(1 + ‖P₀ρ₀ − P₁ρ₁‖₁).
pub fn helstrom_guess(state: &CqState) -> Result<f64> {
    let [(p0, r0), (p1, r1)] = state.outcomes() else {
        return Err(Error::Unsupported(format!(
            "guessing probability needs exactly 2 outcomes, got {}",
            state.outcomes().len()
        )));
    };
    let diff = r0.matrix() * c(*p0) - r1.matrix() * c(*p1);
    Ok((0.5 * (1.0 + trace_norm_hermitian(&diff))).clamp(0.5, 1.0))
}

/// Alice measures her half of (|HH⟩+|VV⟩)/√2 in the computational basis:
/// Eve's conditional states are |0⟩⟨0| and |1⟩⟨1|.
pub fn entangled_example() -> CqState {
    let zero = DensityMatrix::diagonal(&ProbVector::new(vec![1.0, 0.0]).unwrap()).unwrap();
    let one = DensityMatrix::diagonal(&ProbVector::new(vec![0.0, 1.0]).unwrap()).unwrap();
    CqState::new(vec![(0.5, zero), (0.5, one)]).unwrap()
}

/// Ginibre-distributed random density matrix G G† / Tr[G G†].
pub fn random_density_matrix<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let mut rho = &g * g.adjoint();
    let tr = rho.trace().re;
    rho /= c(tr);
    symmetrize(&mut rho);
    DensityMatrix::new(rho).expect("Ginibre construction is a valid state")
}

/// Haar-ish random pure state (normalized complex Gaussian vector).
pub fn random_pure_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityMatrix {
    let v = CVector::from_fn(d, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    DensityMatrix::pure(&v).expect("nonzero Gaussian vector")
}
