//! Quantum Fisher information of pure states.
//!
//! Three routes are provided and cross-checked in tests:
//!
//! * finite differences of the evolved state over γ,
//!   `F = 4(⟨∂ψ|∂ψ⟩ − |⟨ψ|∂ψ⟩|²)`;
//! * the variance of the local generator `ĥ = ĥ^(L) + ĥ^(O)` assembled from
//!   the eigensystem of a time-independent Hamiltonian;
//! * the same generator with its oscillating part truncated to the dominant
//!   near-degenerate eigenpair.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::evolve::{eigensystem_of_matrix, EigenSystem};
use crate::fock::{hermiticity_defect, CMatrix, CVector, HermitianOperator, QuantumState};
use crate::model::{ModelKind, ModelParams};
use serde::{Deserialize, Serialize};
use crate::observe::{dominant_pair, eigenstate_overlaps, DominantPair};

/// Relative degeneracy threshold on `|E_k − E_l|`, scaled by the spectral radius.
pub const DEGENERACY_THRESHOLD: f64 = 1e-10;

/// Richardson agreement required between the `δ` and `δ/2` estimates.
pub const RICHARDSON_TOLERANCE: f64 = 1e-4;

/// Linear and oscillating parts of the local generator at time `t`, in the Fock basis.
#[derive(Debug, Clone)]
pub struct GeneratorParts {
    pub linear: CMatrix,
    pub oscillating: CMatrix,
    pub t: f64,
}

impl GeneratorParts {
    pub fn total(&self) -> CMatrix {
        &self.linear + &self.oscillating
    }
}

/// `F = 4 Var(ĥ)` and the variances of the two parts separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiComponents {
    pub qfi: f64,
    pub var_linear: f64,
    pub var_oscillating: f64,
}

/// `⟨ψ|A²|ψ⟩ − |⟨ψ|A|ψ⟩|²` for Hermitian `A`.
pub fn variance(a: &CMatrix, psi: &CVector) -> f64 {
    let a_psi = a * psi;
    let mean = psi.dotc(&a_psi);
    a_psi.norm_squared() - mean.norm_sqr()
}

/// Generator of a time-independent Hamiltonian, with `∂H/∂γ` pre-rotated into
/// its eigenbasis so that many evaluation times are cheap.
#[derive(Debug, Clone)]
pub struct LocalGenerator {
    eig: EigenSystem,
    dh_eig: CMatrix,
    degeneracy: f64,
    /// `⟨φ_l|∂H|φ_k⟩ / (i E_kl)`, zero on the diagonal and on degenerate pairs.
    scaled: CMatrix,
    /// Off-diagonal `(l, k)` pairs handled by the degenerate limit.
    degenerate: Vec<(usize, usize)>,
}

impl LocalGenerator {
    pub fn new(eig: EigenSystem, dh: &HermitianOperator) -> Result<Self> {
        if dh.dim() != eig.dim() {
            return Err(Error::domain(format!(
                "dH has dimension {}, eigensystem {}",
                dh.dim(),
                eig.dim()
            )));
        }
        let radius = eig.energies.iter().fold(0.0_f64, |a, e| a.max(e.abs()));
        let degeneracy = DEGENERACY_THRESHOLD * radius;
        let dh_eig = eig.matrix_in_eigenbasis(dh.matrix());
        let n = eig.dim();
        let e = &eig.energies;
        let mut scaled = CMatrix::zeros(n, n);
        let mut degenerate = Vec::new();
        for k in 0..n {
            for l in 0..n {
                if l == k {
                    continue;
                }
                let e_kl = e[k] - e[l];
                if e_kl.abs() <= degeneracy {
                    degenerate.push((l, k));
                } else {
                    scaled[(l, k)] = dh_eig[(l, k)] / Complex64::new(0.0, e_kl);
                }
            }
        }
        Ok(LocalGenerator {
            eig,
            dh_eig,
            degeneracy,
            scaled,
            degenerate,
        })
    }

    pub fn eigensystem(&self) -> &EigenSystem {
        &self.eig
    }

    /// `∂E_k/∂γ = ⟨φ_k|∂H/∂γ|φ_k⟩`.
    pub fn energy_slopes(&self) -> Vec<f64> {
        (0..self.eig.dim()).map(|k| self.dh_eig[(k, k)].re).collect()
    }

    /// Coefficient `2 e^{−itE_kl/2} sin(tE_kl/2) / E_kl`, or `t` for degenerate pairs.
    fn weight(&self, e_kl: f64, t: f64) -> Complex64 {
        if e_kl.abs() <= self.degeneracy {
            Complex64::new(t, 0.0)
        } else {
            let half = 0.5 * t * e_kl;
            Complex64::from_polar(2.0 * half.sin() / e_kl, -half)
        }
    }

    /// Oscillating part in the eigenbasis, element `(l, k)` being
    /// `2 e^{−itE_kl/2} sin(tE_kl/2) ⟨φ_l|∂_γ φ_k⟩`, restricted to `pairs` if given.
    fn oscillating_eig(&self, t: f64, only: Option<(usize, usize)>) -> CMatrix {
        let n = self.eig.dim();
        let e = &self.eig.energies;
        let mut osc = CMatrix::zeros(n, n);
        let mut fill = |l: usize, k: usize| {
            osc[(l, k)] = self.weight(e[k] - e[l], t) * self.dh_eig[(l, k)];
        };
        match only {
            Some((a, b)) => {
                fill(a, b);
                fill(b, a);
            }
            None => {
                for k in 0..n {
                    for l in 0..n {
                        if l != k {
                            fill(l, k);
                        }
                    }
                }
            }
        }
        osc
    }

    fn linear_eig(&self, t: f64) -> CMatrix {
        let slopes = self.energy_slopes();
        let diag = CVector::from_iterator(slopes.len(), slopes.iter().map(|s| Complex64::new(t * s, 0.0)));
        CMatrix::from_diagonal(&diag)
    }

    fn to_fock(&self, m: &CMatrix) -> CMatrix {
        &self.eig.vectors * m * self.eig.vectors.adjoint()
    }

    pub fn parts_at(&self, t: f64) -> GeneratorParts {
        GeneratorParts {
            linear: self.to_fock(&self.linear_eig(t)),
            oscillating: self.to_fock(&self.oscillating_eig(t, None)),
            t,
        }
    }

    /// Parts with the oscillating sum restricted to the eigenpair `(a, b)`.
    pub fn truncated_parts_at(&self, t: f64, a: usize, b: usize) -> GeneratorParts {
        GeneratorParts {
            linear: self.to_fock(&self.linear_eig(t)),
            oscillating: self.to_fock(&self.oscillating_eig(t, Some((a, b)))),
            t,
        }
    }

    /// QFI at time `t` for a state given by its eigenbasis coefficients.
    ///
    /// Uses `2 e^{−itE_kl/2} sin(tE_kl/2)/E_kl = (1 − u_k ū_l)/(iE_kl)` with
    /// `u_k = e^{−itE_k}`, so that `ĥ^(O) c` costs two matrix-vector products.
    pub fn qfi_at(&self, coeffs: &CVector, t: f64) -> QfiComponents {
        let u = CVector::from_iterator(self.eig.dim(), self.eig.energies.iter().map(|&e| Complex64::from_polar(1.0, -e * t)));
        let uc = u.component_mul(coeffs);
        let mut osc = &self.scaled * coeffs - (&self.scaled * uc).component_mul(&u.conjugate());
        for &(l, k) in &self.degenerate {
            osc[l] += self.dh_eig[(l, k)] * coeffs[k] * t;
        }
        let lin = CVector::from_iterator(
            coeffs.len(),
            coeffs.iter().enumerate().map(|(k, c)| c * (t * self.dh_eig[(k, k)].re)),
        );
        let var = |v: &CVector| v.norm_squared() - coeffs.dotc(v).norm_sqr();
        QfiComponents {
            qfi: 4.0 * var(&(&lin + &osc)),
            var_linear: var(&lin),
            var_oscillating: var(&osc),
        }
    }

    /// As [`qfi_at`](Self::qfi_at) with the oscillating part restricted to `(a, b)`.
    pub fn truncated_qfi_at(&self, coeffs: &CVector, t: f64, a: usize, b: usize) -> QfiComponents {
        components(&self.linear_eig(t), &self.oscillating_eig(t, Some((a, b))), coeffs)
    }
}

fn components(linear: &CMatrix, oscillating: &CMatrix, psi: &CVector) -> QfiComponents {
    let total = linear + oscillating;
    QfiComponents {
        qfi: 4.0 * variance(&total, psi),
        var_linear: variance(linear, psi),
        var_oscillating: variance(oscillating, psi),
    }
}

/// Generator parts from an eigensystem of `H` and `∂H/∂γ`.
pub fn generator_parts(eig: &EigenSystem, dh: &HermitianOperator, t: f64) -> Result<GeneratorParts> {
    Ok(LocalGenerator::new(eig.clone(), dh)?.parts_at(t))
}

/// `F = 4 Var_ψ₀(ĥ^(L) + ĥ^(O))`, with the two part variances.
pub fn qfi_from_generator(psi0: &QuantumState, parts: &GeneratorParts) -> Result<QfiComponents> {
    if parts.linear.nrows() != psi0.amplitudes().len() {
        return Err(Error::domain("generator and state dimensions differ"));
    }
    Ok(components(&parts.linear, &parts.oscillating, psi0.amplitudes()))
}

/// `(h_max − h_min)²` over the spectrum of a Hermitian generator.
pub fn optimal_qfi(h: &CMatrix) -> Result<f64> {
    let scale = crate::fock::max_abs(h).max(1.0);
    if hermiticity_defect(h) > 1e-9 * scale {
        return Err(Error::domain("generator is not Hermitian"));
    }
    let eig = eigensystem_of_matrix(h)?;
    let spread = eig.energies[eig.dim() - 1] - eig.energies[0];
    Ok(spread * spread)
}

/// `F_HL = T² (N(M−1))²`.
pub fn heisenberg_limit(n_particles: usize, n_modes: usize, t: f64) -> f64 {
    let span = (n_particles * (n_modes - 1)) as f64;
    t * t * span * span
}

/// Cramér-Rao bound `1/√(νF)`.
pub fn cramer_rao(qfi: f64, repetitions: u64) -> Result<f64> {
    if !(qfi > 0.0) {
        return Err(Error::domain(format!(
            "Fisher information {qfi} gives an unbounded uncertainty"
        )));
    }
    if repetitions == 0 {
        return Err(Error::domain("at least one repetition is required"));
    }
    Ok(1.0 / (repetitions as f64 * qfi).sqrt())
}

/// Generator with the oscillating part truncated to the eigenpair that
/// carries the two largest overlaps with the initial state.
#[derive(Debug, Clone)]
pub struct TwoLevelGenerator {
    pub parts: GeneratorParts,
    pub pair: DominantPair,
    pub omega: f64,
    /// `π/Ω`; infinite for an exactly degenerate pair.
    pub tau_estimate: f64,
}

pub fn two_level_generator(
    eig: &EigenSystem,
    psi0: &QuantumState,
    dh: &HermitianOperator,
    t: f64,
) -> Result<TwoLevelGenerator> {
    if eig.dim() < 3 {
        return Err(Error::domain("two-level truncation needs a basis of dimension at least 3"));
    }
    let overlaps = eigenstate_overlaps(psi0, eig)?;
    let pair = dominant_pair(&overlaps);
    let generator = LocalGenerator::new(eig.clone(), dh)?;
    let omega = (eig.energies[pair.first] - eig.energies[pair.second]).abs();
    Ok(TwoLevelGenerator {
        parts: generator.truncated_parts_at(t, pair.first, pair.second),
        pair,
        omega,
        tau_estimate: std::f64::consts::PI / omega,
    })
}

/// Finite-difference QFI with the `δ`/`δ/2` consistency record.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDifferenceQfi {
    /// From the Richardson-extrapolated derivative `(4D(δ/2) − D(δ))/3`.
    pub qfi: f64,
    pub coarse: f64,
    pub fine: f64,
    pub step: f64,
    pub warning: Option<String>,
}

/// Default `δγ = 1e-5 max(1, |γ|)`.
pub fn default_gamma_step(gamma: f64) -> f64 {
    1e-5 * gamma.abs().max(1.0)
}

pub(crate) fn check_gamma_step(gamma: f64, step: f64) -> Result<()> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::domain(format!("finite-difference step must be positive, got {step}")));
    }
    if step < 1e-12 * gamma.abs().max(1.0) {
        return Err(Error::StepSize(step));
    }
    Ok(())
}

fn qfi_of_derivative(psi: &CVector, d: &CVector) -> f64 {
    4.0 * (d.norm_squared() - psi.dotc(d).norm_sqr())
}

/// States evolved at `γ`, `γ ± δ` and `γ ± δ/2`.
#[derive(Debug, Clone)]
pub struct GammaStencil {
    pub center: CVector,
    pub plus: CVector,
    pub minus: CVector,
    pub plus_half: CVector,
    pub minus_half: CVector,
}

impl GammaStencil {
    /// Shifts `γ` by `0, +δ, −δ, +δ/2, −δ/2`, in that order.
    pub fn offsets(step: f64) -> [f64; 5] {
        [0.0, step, -step, 0.5 * step, -0.5 * step]
    }

    pub fn qfi(&self, step: f64) -> FiniteDifferenceQfi {
        let coarse_d = (&self.plus - &self.minus).unscale(2.0 * step);
        let fine_d = (&self.plus_half - &self.minus_half).unscale(step);
        let extrapolated = (fine_d.scale(4.0) - &coarse_d).unscale(3.0);
        let coarse = qfi_of_derivative(&self.center, &coarse_d);
        let fine = qfi_of_derivative(&self.center, &fine_d);
        let qfi = qfi_of_derivative(&self.center, &extrapolated);
        let gap = (coarse - fine).abs();
        let warning = (gap > RICHARDSON_TOLERANCE * fine.abs().max(1e-8)).then(|| {
            format!("finite-difference estimates at δ={step:e} and δ/2 differ by {gap:e} (F≈{fine:e})")
        });
        FiniteDifferenceQfi {
            qfi,
            coarse,
            fine,
            step,
            warning,
        }
    }
}

/// Finite-difference QFI of any deterministic evolution recipe.
///
/// `evolve` maps parameters (only `gamma` is varied) to the final state
/// amplitudes. `step` defaults to [`default_gamma_step`].
pub fn qfi_finite_difference<F>(evolve: F, params: &ModelParams, step: Option<f64>) -> Result<FiniteDifferenceQfi>
where
    F: Fn(&ModelParams) -> Result<CVector>,
{
    let step = step.unwrap_or_else(|| default_gamma_step(params.gamma));
    check_gamma_step(params.gamma, step)?;
    let shifted = |d: f64| evolve(&params.clone().with_gamma(params.gamma + d));
    let [c, p, m, ph, mh] = GammaStencil::offsets(step);
    let stencil = GammaStencil {
        center: shifted(c)?,
        plus: shifted(p)?,
        minus: shifted(m)?,
        plus_half: shifted(ph)?,
        minus_half: shifted(mh)?,
    };
    Ok(stencil.qfi(step))
}

/// Route used to obtain a QFI value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    FiniteDifference,
    Generator,
    GeneratorTwoLevel,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::FiniteDifference => "finite-difference",
            Method::Generator => "generator",
            Method::GeneratorTwoLevel => "generator-two-level",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// QFI along a time axis, with the generator part variances when the
/// generator route was used and `𝒢^(N)` of the evolved state.
#[derive(Debug, Clone, PartialEq)]
pub struct QfiSeries {
    pub times: Vec<f64>,
    pub qfi: Vec<f64>,
    pub qfi_over_t2: Vec<f64>,
    pub var_linear: Option<Vec<f64>>,
    pub var_oscillating: Option<Vec<f64>>,
    pub correlator: Vec<f64>,
    pub params: ModelParams,
    pub kind: ModelKind,
    pub method: Method,
    pub warnings: Vec<String>,
}

impl QfiSeries {
    /// Appends a later stretch of the same series.
    pub fn append(&mut self, other: QfiSeries) {
        fn join(a: &mut Option<Vec<f64>>, b: Option<Vec<f64>>) {
            match (a.as_mut(), b) {
                (Some(a), Some(b)) => a.extend(b),
                _ => *a = None,
            }
        }
        self.times.extend(other.times);
        self.qfi.extend(other.qfi);
        self.qfi_over_t2.extend(other.qfi_over_t2);
        join(&mut self.var_linear, other.var_linear);
        join(&mut self.var_oscillating, other.var_oscillating);
        self.correlator.extend(other.correlator);
        for w in other.warnings {
            if !self.warnings.contains(&w) {
                self.warnings.push(w);
            }
        }
    }
}

/// `F/T²`, taken as 0 at `T = 0`.
pub fn scaled_qfi(qfi: f64, t: f64) -> f64 {
    if t > 0.0 {
        qfi / (t * t)
    } else {
        0.0
    }
}
