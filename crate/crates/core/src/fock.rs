//! Bosonic Fock basis and second-quantised operators for N particles on M sites.
//!
//! Site labels in the public API are 1-based (`1..=M`); storage is 0-based.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Occupation numbers `(n_1, …, n_M)` of one basis state.
pub type Occupation = Box<[u32]>;

pub const DEFAULT_DIM_CAP: usize = 5000;

/// Environment variable overriding [`DEFAULT_DIM_CAP`].
pub const DIM_CAP_ENV: &str = "LATTICEQFI_DIM_CAP";

/// Basis dimension cap: `LATTICEQFI_DIM_CAP` if set and parseable, else the default.
pub fn dim_cap() -> usize {
    std::env::var(DIM_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_DIM_CAP)
}

/// `C(N + M - 1, N)`, the number of ways to put N bosons on M sites.
pub fn fock_dimension(n_particles: usize, n_modes: usize) -> u128 {
    let n = n_particles as u128;
    let k = n_modes.saturating_sub(1) as u128;
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc * (n + i) / i;
        if acc > u64::MAX as u128 {
            return acc;
        }
    }
    acc
}

#[derive(Debug, Clone)]
pub struct FockBasis {
    n_particles: usize,
    n_modes: usize,
    states: Vec<Occupation>,
    index: HashMap<Occupation, usize>,
}

impl PartialEq for FockBasis {
    fn eq(&self, other: &Self) -> bool {
        self.n_particles == other.n_particles && self.n_modes == other.n_modes
    }
}

impl FockBasis {
    /// Basis for `n_particles` bosons on `n_modes` sites, subject to [`dim_cap`].
    pub fn new(n_particles: usize, n_modes: usize) -> Result<Self> {
        Self::with_cap(n_particles, n_modes, dim_cap())
    }

    pub fn with_cap(n_particles: usize, n_modes: usize, cap: usize) -> Result<Self> {
        if n_particles == 0 {
            return Err(Error::domain("particle number N must be at least 1"));
        }
        if n_modes < 2 {
            return Err(Error::domain(format!(
                "mode count M must be at least 2, got {n_modes}"
            )));
        }
        let dim = fock_dimension(n_particles, n_modes);
        if dim > cap as u128 {
            return Err(Error::DimensionCap {
                n_particles,
                n_modes,
                dim,
                cap,
            });
        }

        let mut states = Vec::with_capacity(dim as usize);
        let mut scratch = vec![0u32; n_modes];
        enumerate_descending(n_particles as u32, 0, &mut scratch, &mut states);
        debug_assert_eq!(states.len() as u128, dim);

        let index = states
            .iter()
            .enumerate()
            .map(|(k, s)| (s.clone(), k))
            .collect();
        Ok(FockBasis {
            n_particles,
            n_modes,
            states,
            index,
        })
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Occupation] {
        &self.states
    }

    pub fn state(&self, k: usize) -> &[u32] {
        &self.states[k]
    }

    pub fn index_of(&self, occupation: &[u32]) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    /// Checks a 1-based site label.
    pub fn check_site(&self, site: usize) -> Result<usize> {
        if site == 0 || site > self.n_modes {
            Err(Error::domain(format!(
                "site {site} out of range 1..={}",
                self.n_modes
            )))
        } else {
            Ok(site - 1)
        }
    }

    /// Diagonal values `f(occupation)` over the basis, as a real vector.
    pub fn diagonal<F: Fn(&[u32]) -> f64>(&self, f: F) -> Vec<f64> {
        self.states.iter().map(|s| f(s)).collect()
    }

    /// `Σ_m m n_m` for every basis state (m 1-based).
    pub fn tilt_weights(&self) -> Vec<f64> {
        self.diagonal(|s| {
            s.iter()
                .enumerate()
                .map(|(m, &n)| (m + 1) as f64 * n as f64)
                .sum()
        })
    }
}

fn enumerate_descending(remaining: u32, site: usize, scratch: &mut [u32], out: &mut Vec<Occupation>) {
    if site + 1 == scratch.len() {
        scratch[site] = remaining;
        out.push(scratch.to_vec().into_boxed_slice());
        return;
    }
    for n in (0..=remaining).rev() {
        scratch[site] = n;
        enumerate_descending(remaining - n, site + 1, scratch, out);
    }
}

/// Matrix of `a†_i a_j` (1-based sites). Hermitian only when `i == j`.
pub fn hop_operator(basis: &FockBasis, i: usize, j: usize) -> Result<CMatrix> {
    let (i0, j0) = (basis.check_site(i)?, basis.check_site(j)?);
    let dim = basis.dim();
    let mut m = CMatrix::zeros(dim, dim);
    for_each_hop(basis, i0, j0, |to, from, amp| {
        m[(to, from)] += Complex64::new(amp, 0.0);
    });
    Ok(m)
}

/// `n̂_i` for a 1-based site.
pub fn number_operator(basis: &FockBasis, i: usize) -> Result<CMatrix> {
    hop_operator(basis, i, i)
}

/// Applies `a†_i a_j` to a vector without forming the matrix.
pub fn apply_hop(basis: &FockBasis, i: usize, j: usize, v: &CVector) -> Result<CVector> {
    let (i0, j0) = (basis.check_site(i)?, basis.check_site(j)?);
    if v.len() != basis.dim() {
        return Err(Error::domain(format!(
            "vector length {} does not match basis dimension {}",
            v.len(),
            basis.dim()
        )));
    }
    let mut out = CVector::zeros(basis.dim());
    for_each_hop(basis, i0, j0, |to, from, amp| {
        out[to] += v[from] * amp;
    });
    Ok(out)
}

/// Visits every non-zero `⟨to| a†_i a_j |from⟩ = √(n_j (n_i + 1))` (0-based sites).
pub(crate) fn for_each_hop<F: FnMut(usize, usize, f64)>(basis: &FockBasis, i0: usize, j0: usize, mut f: F) {
    let mut moved = vec![0u32; basis.n_modes];
    for (from, s) in basis.states.iter().enumerate() {
        let nj = s[j0];
        if nj == 0 {
            continue;
        }
        if i0 == j0 {
            f(from, from, nj as f64);
            continue;
        }
        moved.copy_from_slice(s);
        moved[j0] -= 1;
        moved[i0] += 1;
        let to = basis.index[&moved[..]];
        f(to, from, (nj as f64 * (s[i0] as f64 + 1.0)).sqrt());
    }
}

#[derive(Debug, Clone)]
pub struct QuantumState {
    basis: Arc<FockBasis>,
    amplitudes: CVector,
}

pub const NORM_TOLERANCE: f64 = 1e-10;

impl QuantumState {
    /// Wraps amplitudes that are already unit-norm (within 1e-10).
    pub fn new(basis: Arc<FockBasis>, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::domain(format!(
                "{} amplitudes for a basis of dimension {}",
                amplitudes.len(),
                basis.dim()
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::domain(format!("state norm is {norm}, expected 1")));
        }
        Ok(QuantumState { basis, amplitudes })
    }

    /// Rescales arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(basis: Arc<FockBasis>, amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::domain("cannot normalise a zero or non-finite vector"));
        }
        Self::new(basis, amplitudes.unscale(norm))
    }

    /// Evolution outputs: unitary by construction, so the norm is not re-checked.
    pub(crate) fn from_unitary_image(basis: Arc<FockBasis>, amplitudes: CVector) -> Self {
        debug_assert_eq!(amplitudes.len(), basis.dim());
        QuantumState { basis, amplitudes }
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &QuantumState) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &QuantumState) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// `⟨ψ|A|ψ⟩` for any square matrix on the same basis.
    pub fn expectation(&self, op: &CMatrix) -> Complex64 {
        self.amplitudes.dotc(&(op * &self.amplitudes))
    }
}

/// Unit amplitude on one occupation vector.
pub fn fock_state(basis: &Arc<FockBasis>, occupations: &[u32]) -> Result<QuantumState> {
    if occupations.len() != basis.n_modes() {
        return Err(Error::domain(format!(
            "occupation vector has {} entries, basis has {} modes",
            occupations.len(),
            basis.n_modes()
        )));
    }
    let total: u64 = occupations.iter().map(|&n| n as u64).sum();
    let k = basis.index_of(occupations).ok_or_else(|| {
        Error::domain(format!(
            "occupation {occupations:?} sums to {total}, basis holds N={}",
            basis.n_particles()
        ))
    })?;
    let mut amps = CVector::zeros(basis.dim());
    amps[k] = Complex64::new(1.0, 0.0);
    QuantumState::new(basis.clone(), amps)
}

/// `|N,0,…,0⟩`, all particles on the first site.
pub fn first_site_state(basis: &Arc<FockBasis>) -> QuantumState {
    // index 0 under the descending order
    let mut amps = CVector::zeros(basis.dim());
    amps[0] = Complex64::new(1.0, 0.0);
    QuantumState::from_unitary_image(basis.clone(), amps)
}

/// Generalised NOON state `(|N,0,…,0⟩ + |0,…,0,N⟩)/√2`.
pub fn noon_state(basis: &Arc<FockBasis>) -> QuantumState {
    let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut amps = CVector::zeros(basis.dim());
    amps[0] = amp;
    amps[basis.dim() - 1] = amp;
    QuantumState::from_unitary_image(basis.clone(), amps)
}

#[derive(Debug, Clone)]
pub struct HermitianOperator {
    basis: Arc<FockBasis>,
    matrix: CMatrix,
}

/// Maximum allowed `|A - A†|` element, relative to `max(1, max|A|)`.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

/// Largest element of `A - A†` in absolute value.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let mut worst = 0.0_f64;
    for c in 0..m.ncols() {
        for r in 0..=c {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

impl HermitianOperator {
    pub fn new(basis: Arc<FockBasis>, matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != basis.dim() || matrix.ncols() != basis.dim() {
            return Err(Error::domain(format!(
                "{}x{} matrix for a basis of dimension {}",
                matrix.nrows(),
                matrix.ncols(),
                basis.dim()
            )));
        }
        let defect = hermiticity_defect(&matrix);
        if defect > HERMITIAN_TOLERANCE * max_abs(&matrix).max(1.0) {
            return Err(Error::numerical(format!(
                "operator is not Hermitian: max |A - A†| = {defect:e}"
            )));
        }
        Ok(HermitianOperator { basis, matrix })
    }

    /// Real diagonal operator.
    pub fn diagonal(basis: Arc<FockBasis>, values: &[f64]) -> Self {
        let diag = CVector::from_iterator(values.len(), values.iter().map(|&v| Complex64::new(v, 0.0)));
        HermitianOperator {
            matrix: CMatrix::from_diagonal(&diag),
            basis,
        }
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `max |A_ij|`.
    pub fn max_abs(&self) -> f64 {
        max_abs(&self.matrix)
    }
}
