//! Hermitian eigendecomposition and unitary time evolution.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{max_abs, CMatrix, CVector, FockBasis, HermitianOperator, QuantumState};
use crate::model::{hamiltonian, ModelKind, ModelParams};

/// Minimum midpoint steps per drive period.
pub const MIN_STEPS_PER_PERIOD: usize = 40;

const EIG_RESIDUAL_TOLERANCE: f64 = 1e-9;
const EIG_MAX_ITER: usize = 10_000;

/// Eigenvalues in ascending order and the matching eigenvectors as columns.
///
/// Each eigenvector is phased so that its largest-magnitude component (the
/// first one, on ties) is real and positive.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub energies: Vec<f64>,
    pub vectors: CMatrix,
}

pub fn eigensystem(h: &HermitianOperator) -> Result<EigenSystem> {
    eigensystem_of_matrix(h.matrix())
}

pub(crate) fn eigensystem_of_matrix(m: &CMatrix) -> Result<EigenSystem> {
    let dim = m.nrows();
    let scale = max_abs(m);
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, EIG_MAX_ITER).ok_or_else(|| {
        Error::numerical(format!(
            "Hermitian eigensolver did not converge (dim {dim}, max |H_ij| = {scale:e})"
        ))
    })?;

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let energies: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(dim, dim);
    for (col, &k) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let biggest = v.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
        let pivot = v
            .iter()
            .position(|z| z.norm() >= biggest * (1.0 - 1e-9))
            .unwrap_or(0);
        let phase = if v[pivot].norm() > 0.0 {
            v[pivot].conj() / v[pivot].norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let norm = v.norm();
        for r in 0..dim {
            vectors[(r, col)] = v[r] * phase / norm;
        }
        vectors[(pivot, col)] = Complex64::new(vectors[(pivot, col)].norm(), 0.0);
    }

    let sys = EigenSystem { energies, vectors };
    let residual = sys.residual(m);
    if residual > EIG_RESIDUAL_TOLERANCE * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::numerical(format!(
            "eigendecomposition residual {residual:e} exceeds tolerance (dim {dim}, max |H_ij| = {scale:e})"
        )));
    }
    Ok(sys)
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// `max |H V − V diag(E)|`.
    pub fn residual(&self, h: &CMatrix) -> f64 {
        let mut scaled = self.vectors.clone();
        for (c, &e) in self.energies.iter().enumerate() {
            scaled.column_mut(c).scale_mut(e);
        }
        max_abs(&(h * &self.vectors - scaled))
    }

    /// `V diag(E) V†`.
    pub fn reconstruct(&self) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (c, &e) in self.energies.iter().enumerate() {
            scaled.column_mut(c).scale_mut(e);
        }
        scaled * self.vectors.adjoint()
    }

    /// Coefficients `⟨φ_k|ψ⟩`.
    pub fn to_eigenbasis(&self, psi: &CVector) -> CVector {
        self.vectors.ad_mul(psi)
    }

    pub fn from_eigenbasis(&self, coeffs: &CVector) -> CVector {
        &self.vectors * coeffs
    }

    /// Matrix elements `⟨φ_l|A|φ_k⟩`.
    pub fn matrix_in_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        self.vectors.ad_mul(&(a * &self.vectors))
    }

    /// `exp(−iHt) ψ`; exactly `ψ` at `t = 0`.
    pub fn propagate(&self, psi: &CVector, t: f64) -> CVector {
        if t == 0.0 {
            return psi.clone();
        }
        let mut c = self.to_eigenbasis(psi);
        for (ck, &e) in c.iter_mut().zip(&self.energies) {
            *ck *= Complex64::from_polar(1.0, -e * t);
        }
        self.from_eigenbasis(&c)
    }

    /// The matrix `exp(−iHt)`.
    pub fn propagator(&self, t: f64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (c, &e) in self.energies.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, -e * t);
            for z in scaled.column_mut(c).iter_mut() {
                *z *= phase;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

fn same_basis(a: &FockBasis, b: &FockBasis) -> Result<()> {
    if a != b {
        return Err(Error::domain(format!(
            "basis mismatch: (N={}, M={}) vs (N={}, M={})",
            a.n_particles(),
            a.n_modes(),
            b.n_particles(),
            b.n_modes()
        )));
    }
    Ok(())
}

/// `exp(−iHt)|ψ₀⟩` through the eigendecomposition of `H`.
pub fn evolve_static(h: &HermitianOperator, psi0: &QuantumState, t: f64) -> Result<QuantumState> {
    same_basis(h.basis(), psi0.basis())?;
    if !(t >= 0.0) {
        return Err(Error::domain(format!("evolution time must be non-negative, got {t}")));
    }
    if t == 0.0 {
        return Ok(psi0.clone());
    }
    let eig = eigensystem(h)?;
    Ok(evolve_with(&eig, psi0, t))
}

/// Evolution with a precomputed eigensystem.
pub fn evolve_with(eig: &EigenSystem, psi0: &QuantumState, t: f64) -> QuantumState {
    if t == 0.0 {
        return psi0.clone();
    }
    QuantumState::from_unitary_image(psi0.basis().clone(), eig.propagate(psi0.amplitudes(), t))
}

/// Smallest step count accepted for a drive of frequency `omega` over `[0, t_final]`.
pub fn min_driven_steps(t_final: f64, omega: f64) -> usize {
    (t_final * omega * MIN_STEPS_PER_PERIOD as f64 / (2.0 * PI)).ceil().max(1.0) as usize
}

/// Midpoint propagation of the driven chain over `[0, t_final]` in `steps` equal steps.
pub fn evolve_driven(
    params: &ModelParams,
    basis: &Arc<FockBasis>,
    psi0: &QuantumState,
    t_final: f64,
    steps: usize,
) -> Result<QuantumState> {
    evolve_time_dependent(ModelKind::Dbh, params, basis, psi0, t_final, steps)
}

/// Piecewise-constant midpoint scheme: each step applies `exp(−i H(t_k + h/2) h)`.
pub fn evolve_time_dependent(
    kind: ModelKind,
    params: &ModelParams,
    basis: &Arc<FockBasis>,
    psi0: &QuantumState,
    t_final: f64,
    steps: usize,
) -> Result<QuantumState> {
    same_basis(basis, psi0.basis())?;
    if !(t_final >= 0.0) {
        return Err(Error::domain(format!("final time must be non-negative, got {t_final}")));
    }
    let w = params.drive_frequency();
    if w <= 0.0 {
        return Err(Error::domain(format!("drive frequency must be positive, got {w}")));
    }
    let minimum = min_driven_steps(t_final, w);
    if steps < minimum {
        return Err(Error::StepFloor {
            requested: steps,
            minimum,
        });
    }
    let h = t_final / steps as f64;
    let mut psi = psi0.amplitudes().clone();
    for k in 0..steps {
        let mid = (k as f64 + 0.5) * h;
        let eig = eigensystem(&hamiltonian(kind, params, basis, mid)?)?;
        psi = eig.propagate(&psi, h);
    }
    Ok(QuantumState::from_unitary_image(basis.clone(), psi))
}

/// Stroboscopic stepper for a periodically driven Hamiltonian.
///
/// One drive period is split into `steps_per_period` midpoint steps whose
/// propagators are cached; the state at any time `T` is the cached steps up to
/// `⌊T/h⌋ h` followed by one shorter midpoint step. The result therefore
/// depends only on `T`, not on which other times are requested.
#[derive(Debug, Clone)]
pub struct PeriodicStepper {
    kind: ModelKind,
    params: ModelParams,
    basis: Arc<FockBasis>,
    step: f64,
    unitaries: Vec<CMatrix>,
}

impl PeriodicStepper {
    pub fn new(kind: ModelKind, params: &ModelParams, basis: &Arc<FockBasis>, steps_per_period: usize) -> Result<Self> {
        if steps_per_period < MIN_STEPS_PER_PERIOD {
            return Err(Error::StepFloor {
                requested: steps_per_period,
                minimum: MIN_STEPS_PER_PERIOD,
            });
        }
        let w = params.drive_frequency();
        if w <= 0.0 {
            return Err(Error::domain(format!("drive frequency must be positive, got {w}")));
        }
        let step = 2.0 * PI / w / steps_per_period as f64;
        let unitaries = (0..steps_per_period)
            .map(|k| {
                let mid = (k as f64 + 0.5) * step;
                Ok(eigensystem(&hamiltonian(kind, params, basis, mid)?)?.propagator(step))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PeriodicStepper {
            kind,
            params: params.clone(),
            basis: basis.clone(),
            step,
            unitaries,
        })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// States at each of the ascending `times`.
    pub fn states_at(&self, psi0: &CVector, times: &[f64]) -> Result<Vec<CVector>> {
        let mut out = Vec::with_capacity(times.len());
        let mut psi = psi0.clone();
        let mut done = 0usize;
        let mut prev = f64::NEG_INFINITY;
        for &t in times {
            if !(t >= 0.0) || t < prev {
                return Err(Error::domain("sample times must be non-negative and ascending"));
            }
            prev = t;
            let whole = (t / self.step).floor() as usize;
            while done < whole {
                psi = &self.unitaries[done % self.unitaries.len()] * &psi;
                done += 1;
            }
            let rest = t - whole as f64 * self.step;
            if rest > 0.0 {
                let mid = whole as f64 * self.step + 0.5 * rest;
                let eig = eigensystem(&hamiltonian(self.kind, &self.params, &self.basis, mid)?)?;
                out.push(eig.propagate(&psi, rest));
            } else {
                out.push(psi.clone());
            }
        }
        Ok(out)
    }
}
