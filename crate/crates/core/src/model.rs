//! Hamiltonians of the tilted, driven, Floquet-effective and periodically
//! forced Bose-Hubbard chains, with their analytic `∂H/∂γ`.
//!
//! Units: `ħ = 1`, energies in units of `J`, times in `1/J`. Chains have open
//! boundaries with bonds `(j, j+1)` for `j = 1 … M-1`. The drive phase on site
//! `m` is `φ_m = φ₀ − mπ`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bessel::{bessel_j_derivatives, bessel_j_orders};
use crate::error::{Error, Result};
use crate::fock::{for_each_hop, CMatrix, FockBasis, HermitianOperator};

/// Coefficient `K` of the boundary term `(K/ω) Σ_j (n̂_{j+1} − n̂_j)` in the
/// effective Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum KCoefficient {
    /// `K = J² Σ_{m≥1} (J_{m−1}(x)² − J_{m+1}(x)²)/m`, `x = 2V₀/ω`: the
    /// first-order high-frequency term of the resonantly driven chain.
    #[default]
    FirstOrder,
    Fixed(f64),
}

impl Serialize for KCoefficient {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            KCoefficient::FirstOrder => s.serialize_str("first-order"),
            KCoefficient::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for KCoefficient {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(KCoefficient::Fixed(v)),
            Raw::Str(s) if s == "first-order" => Ok(KCoefficient::FirstOrder),
            Raw::Str(s) => Err(serde::de::Error::custom(format!(
                "K must be a number or \"first-order\", got \"{s}\""
            ))),
        }
    }
}

/// Physical parameters, all energies in units of `J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    #[serde(rename = "J")]
    pub j: f64,
    /// Tilt strength γ, the estimated parameter.
    pub gamma: f64,
    #[serde(rename = "U")]
    pub u: f64,
    #[serde(rename = "V0")]
    pub v0: f64,
    pub omega: f64,
    pub theta: f64,
    pub phi0: f64,
    #[serde(rename = "K")]
    pub k: KCoefficient,
    /// Amplitude of the periodic force.
    #[serde(rename = "Gamma")]
    pub big_gamma: f64,
    #[serde(rename = "M")]
    pub n_modes: usize,
    #[serde(rename = "N")]
    pub n_particles: usize,
    /// Tie the drive frequency to the tilt (`ω = γ`) instead of freezing it.
    pub covary_omega: bool,
}

impl Default for ModelParams {
    /// `J = 1, γ = 33, V₀ = 30.4, ω = γ, θ = π, φ₀ = −π/2`, `U = 0`, `N = M = 3`.
    fn default() -> Self {
        ModelParams {
            j: 1.0,
            gamma: 33.0,
            u: 0.0,
            v0: 30.4,
            omega: 33.0,
            theta: PI,
            phi0: -PI / 2.0,
            k: KCoefficient::FirstOrder,
            big_gamma: 0.0,
            n_modes: 3,
            n_particles: 3,
            covary_omega: false,
        }
    }
}

impl ModelParams {
    /// Default drive parameters for `N` particles on `M` sites.
    pub fn chain(n_particles: usize, n_modes: usize) -> Self {
        ModelParams {
            n_particles,
            n_modes,
            ..Default::default()
        }
    }

    pub fn with_u(mut self, u: f64) -> Self {
        self.u = u;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_k(mut self, k: KCoefficient) -> Self {
        self.k = k;
        self
    }

    /// Frequency the drive actually runs at: `γ` when co-varying, else `ω`.
    pub fn drive_frequency(&self) -> f64 {
        if self.covary_omega {
            self.gamma
        } else {
            self.omega
        }
    }

    /// Site phase `φ_m = φ₀ − mπ` (m 1-based).
    pub fn site_phase(&self, m: usize) -> f64 {
        self.phi0 - m as f64 * PI
    }

    /// Drive-renormalised tunnelling `J_F = J 𝒥₁(2V₀/ω)`.
    pub fn renormalized_tunneling(&self) -> f64 {
        self.j * bessel_j_orders(1, 2.0 * self.v0 / self.drive_frequency())[1]
    }

    /// Resolved value of `K`.
    pub fn k_value(&self) -> f64 {
        match self.k {
            KCoefficient::Fixed(v) => v,
            KCoefficient::FirstOrder => first_order_k(self.j, self.v0, self.drive_frequency()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("J", self.j),
            ("gamma", self.gamma),
            ("U", self.u),
            ("V0", self.v0),
            ("omega", self.omega),
            ("theta", self.theta),
            ("phi0", self.phi0),
            ("Gamma", self.big_gamma),
        ];
        for (name, v) in named {
            if !v.is_finite() {
                return Err(Error::domain(format!("parameter {name} is not finite")));
            }
        }
        if let KCoefficient::Fixed(v) = self.k {
            if !v.is_finite() {
                return Err(Error::domain("parameter K is not finite"));
            }
        }
        if self.j < 0.0 {
            return Err(Error::domain("tunnelling J must be non-negative"));
        }
        if self.n_modes < 2 {
            return Err(Error::domain("M must be at least 2"));
        }
        if self.n_particles < 1 {
            return Err(Error::domain("N must be at least 1"));
        }
        Ok(())
    }

    fn check(&self, basis: &FockBasis) -> Result<()> {
        self.validate()?;
        if basis.n_modes() != self.n_modes || basis.n_particles() != self.n_particles {
            return Err(Error::domain(format!(
                "basis (N={}, M={}) does not match parameters (N={}, M={})",
                basis.n_particles(),
                basis.n_modes(),
                self.n_particles,
                self.n_modes
            )));
        }
        Ok(())
    }

    fn check_driven(&self, basis: &FockBasis) -> Result<f64> {
        self.check(basis)?;
        let w = self.drive_frequency();
        if w <= 0.0 {
            return Err(Error::domain(format!("drive frequency must be positive, got {w}")));
        }
        Ok(w)
    }
}

/// `K = J² Σ_{m≥1} (J_{m−1}(x)² − J_{m+1}(x)²)/m` with `x = 2V₀/ω`.
///
/// In the frame co-rotating with tilt and drive, the bond `(j, j+1)` carries
/// `e^{iγt} e^{i(−1)^j x cos(ωt+α)}`; at `ω = γ` its `m`-th harmonic has
/// weight `J J_{m−1}(x)`. The first-order term `Σ_m [H_m, H_{−m}]/(mω)`
/// reduces to `(K/ω) Σ_j (n̂_{j+1} − n̂_j)` because the adjacent-bond
/// commutators cancel for alternating site phases.
pub fn first_order_k(j: f64, v0: f64, omega: f64) -> f64 {
    let x = 2.0 * v0 / omega;
    let nmax = x.abs().ceil() as usize + 40;
    let b = bessel_j_orders(nmax + 1, x);
    let sum: f64 = (1..=nmax)
        .map(|m| (b[m - 1] * b[m - 1] - b[m + 1] * b[m + 1]) / m as f64)
        .sum();
    j * j * sum
}

/// `dK/dx` for [`first_order_k`], used when ω co-varies with γ.
fn first_order_k_dx(j: f64, x: f64) -> f64 {
    let nmax = x.abs().ceil() as usize + 40;
    let b = bessel_j_orders(nmax + 1, x);
    let d = bessel_j_derivatives(nmax + 1, x);
    let sum: f64 = (1..=nmax)
        .map(|m| 2.0 * (b[m - 1] * d[m - 1] - b[m + 1] * d[m + 1]) / m as f64)
        .sum();
    j * j * sum
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// `γ Σ m n̂_m` alone.
    Tilt,
    /// Tilted Bose-Hubbard chain.
    Tbh,
    /// Driven tilted chain (time dependent).
    Dbh,
    /// High-frequency effective Hamiltonian of the driven chain.
    Effective,
    /// Periodically forced chain (time dependent).
    PeriodicForce,
}

impl ModelKind {
    pub fn is_time_dependent(self) -> bool {
        matches!(self, ModelKind::Dbh | ModelKind::PeriodicForce)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Tilt => "tilt",
            ModelKind::Tbh => "tbh",
            ModelKind::Dbh => "dbh",
            ModelKind::Effective => "effective",
            ModelKind::PeriodicForce => "periodic-force",
        })
    }
}

fn real_diag(basis: &FockBasis, values: &[f64]) -> CMatrix {
    let mut m = CMatrix::zeros(basis.dim(), basis.dim());
    for (k, &v) in values.iter().enumerate() {
        m[(k, k)] = Complex64::new(v, 0.0);
    }
    m
}

fn add_diag(m: &mut CMatrix, values: &[f64]) {
    for (k, &v) in values.iter().enumerate() {
        m[(k, k)] += v;
    }
}

/// Adds `coupling · a†_{j+1} a_j + h.c.` for every bond, `coupling(j)` with j 1-based.
fn add_bonds<F: Fn(usize) -> Complex64>(m: &mut CMatrix, basis: &FockBasis, coupling: F) {
    for j in 1..basis.n_modes() {
        let c = coupling(j);
        // sites j+1 <- j, 0-based: j <- j-1
        for_each_hop(basis, j, j - 1, |to, from, amp| {
            m[(to, from)] += c * amp;
        });
        for_each_hop(basis, j - 1, j, |to, from, amp| {
            m[(to, from)] += c.conj() * amp;
        });
    }
}

fn interaction_diag(basis: &FockBasis, u: f64) -> Vec<f64> {
    basis.diagonal(|s| {
        0.5 * u
            * s.iter()
                .map(|&n| n as f64 * (n as f64 - 1.0))
                .sum::<f64>()
    })
}

fn wrap(basis: &Arc<FockBasis>, m: CMatrix) -> Result<HermitianOperator> {
    HermitianOperator::new(basis.clone(), m)
}

/// `γ Σ_m m n̂_m`.
pub fn tilt_hamiltonian(params: &ModelParams, basis: &Arc<FockBasis>) -> Result<HermitianOperator> {
    params.check(basis)?;
    let w: Vec<f64> = basis.tilt_weights().iter().map(|x| params.gamma * x).collect();
    Ok(HermitianOperator::diagonal(basis.clone(), &w))
}

fn tbh_matrix(params: &ModelParams, basis: &FockBasis, gamma: f64) -> CMatrix {
    let tilt = basis.tilt_weights();
    let inter = interaction_diag(basis, params.u);
    let diag: Vec<f64> = tilt.iter().zip(&inter).map(|(t, i)| gamma * t + i).collect();
    let mut m = real_diag(basis, &diag);
    let hop = Complex64::new(-params.j, 0.0);
    add_bonds(&mut m, basis, |_| hop);
    m
}

/// `−J Σ_⟨i,j⟩ a†_i a_j + γ Σ j n̂_j + (U/2) Σ n̂_j(n̂_j − 1)`.
pub fn tbh_hamiltonian(params: &ModelParams, basis: &Arc<FockBasis>) -> Result<HermitianOperator> {
    params.check(basis)?;
    wrap(basis, tbh_matrix(params, basis, params.gamma))
}

/// Per-site drive weights `sin(ωt + φ_m + θ/2)` times the occupations.
fn drive_diag(params: &ModelParams, basis: &FockBasis, w: f64, t: f64, f: fn(f64) -> f64) -> Vec<f64> {
    let phases: Vec<f64> = (1..=basis.n_modes())
        .map(|m| f(w * t + params.site_phase(m) + 0.5 * params.theta))
        .collect();
    basis.diagonal(|s| s.iter().zip(&phases).map(|(&n, p)| n as f64 * p).sum())
}

/// `H_TBH + V₀ Σ_m n̂_m sin(ωt + φ_m + θ/2)` at time `t`.
pub fn dbh_hamiltonian_at(params: &ModelParams, basis: &Arc<FockBasis>, t: f64) -> Result<HermitianOperator> {
    let w = params.check_driven(basis)?;
    let mut m = tbh_matrix(params, basis, params.gamma);
    let drive: Vec<f64> = drive_diag(params, basis, w, t, f64::sin)
        .into_iter()
        .map(|d| params.v0 * d)
        .collect();
    add_diag(&mut m, &drive);
    wrap(basis, m)
}

/// Effective Hamiltonian of the driven chain to first order in `1/ω`:
///
/// `−J_F Σ_j (a†_{j+1} a_j e^{−iφ_j} + h.c.) + (U/2) Σ n̂_j(n̂_j − 1)
///  + (K/ω) Σ_j (n̂_{j+1} − n̂_j) + (γ − ω) Σ_j j n̂_j`.
///
/// The last term is the residual tilt in the frame rotating at the drive
/// frequency; it vanishes at resonance and carries `∂/∂γ` when the drive is
/// frozen. With `covary_omega`, `ω = γ` throughout.
pub fn effective_hamiltonian(params: &ModelParams, basis: &Arc<FockBasis>) -> Result<HermitianOperator> {
    let w = params.check_driven(basis)?;
    let jf = params.renormalized_tunneling();
    let k_over_w = params.k_value() / w;
    let detuning = params.gamma - w;
    let n_modes = basis.n_modes();
    let tilt = basis.tilt_weights();
    let inter = interaction_diag(basis, params.u);
    let diag: Vec<f64> = basis
        .states()
        .iter()
        .zip(tilt.iter().zip(&inter))
        .map(|(s, (t, i))| i + k_over_w * (s[n_modes - 1] as f64 - s[0] as f64) + detuning * t)
        .collect();
    let mut m = real_diag(basis, &diag);
    add_bonds(&mut m, basis, |j| Complex64::from_polar(-jf, -params.site_phase(j)));
    wrap(basis, m)
}

/// `H₀ + Γ cos(ωt) Σ_j j n̂_j`, with `H₀` the tilted chain at `γ = 0`.
pub fn pf_hamiltonian_at(params: &ModelParams, basis: &Arc<FockBasis>, t: f64) -> Result<HermitianOperator> {
    let w = params.check_driven(basis)?;
    let mut m = tbh_matrix(params, basis, 0.0);
    let force = params.big_gamma * (w * t).cos();
    let forced: Vec<f64> = basis.tilt_weights().iter().map(|x| force * x).collect();
    add_diag(&mut m, &forced);
    wrap(basis, m)
}

/// Builds any model at time `t` (ignored for time-independent kinds).
pub fn hamiltonian(kind: ModelKind, params: &ModelParams, basis: &Arc<FockBasis>, t: f64) -> Result<HermitianOperator> {
    match kind {
        ModelKind::Tilt => tilt_hamiltonian(params, basis),
        ModelKind::Tbh => tbh_hamiltonian(params, basis),
        ModelKind::Dbh => dbh_hamiltonian_at(params, basis, t),
        ModelKind::Effective => effective_hamiltonian(params, basis),
        ModelKind::PeriodicForce => pf_hamiltonian_at(params, basis, t),
    }
}

/// Analytic `∂H/∂γ`.
///
/// With the drive frozen (default) every supported kind gives `Σ_m m n̂_m`.
/// With `covary_omega` the drive-dependent pieces are differentiated as well;
/// `t` enters only for the driven chain.
pub fn d_hamiltonian_d_gamma(
    params: &ModelParams,
    basis: &Arc<FockBasis>,
    kind: ModelKind,
    t: f64,
) -> Result<HermitianOperator> {
    params.check(basis)?;
    let tilt = basis.tilt_weights();
    match kind {
        ModelKind::Tilt | ModelKind::Tbh => Ok(HermitianOperator::diagonal(basis.clone(), &tilt)),
        ModelKind::Dbh => {
            params.check_driven(basis)?;
            if !params.covary_omega {
                return Ok(HermitianOperator::diagonal(basis.clone(), &tilt));
            }
            let cosines = drive_diag(params, basis, params.gamma, t, f64::cos);
            let diag: Vec<f64> = tilt
                .iter()
                .zip(&cosines)
                .map(|(w, c)| w + params.v0 * t * c)
                .collect();
            Ok(HermitianOperator::diagonal(basis.clone(), &diag))
        }
        ModelKind::Effective => {
            params.check_driven(basis)?;
            if !params.covary_omega {
                return Ok(HermitianOperator::diagonal(basis.clone(), &tilt));
            }
            effective_covary_derivative(params, basis)
        }
        ModelKind::PeriodicForce => Err(Error::domain(
            "the periodically forced model has no dependence on the tilt γ",
        )),
    }
}

fn effective_covary_derivative(params: &ModelParams, basis: &Arc<FockBasis>) -> Result<HermitianOperator> {
    let g = params.gamma;
    let x = 2.0 * params.v0 / g;
    let dx = -2.0 * params.v0 / (g * g);
    let d_jf = params.j * bessel_j_derivatives(1, x)[1] * dx;
    let (k, dk) = match params.k {
        KCoefficient::Fixed(v) => (v, 0.0),
        KCoefficient::FirstOrder => (first_order_k(params.j, params.v0, g), first_order_k_dx(params.j, x) * dx),
    };
    // d/dγ (K(γ)/γ)
    let d_boundary = dk / g - k / (g * g);
    let n_modes = basis.n_modes();
    let diag = basis.diagonal(|s| d_boundary * (s[n_modes - 1] as f64 - s[0] as f64));
    let mut m = real_diag(basis, &diag);
    add_bonds(&mut m, basis, |j| Complex64::from_polar(-d_jf, -params.site_phase(j)));
    wrap(basis, m)
}
