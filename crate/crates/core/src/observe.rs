//! Correlation, occupation and eigenstate-overlap diagnostics.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolve::EigenSystem;
use crate::fock::{apply_hop, QuantumState};

/// Overlaps closer than this are treated as tied.
pub const OVERLAP_TIE: f64 = 1e-12;

/// `|⟨ψ|(â†_M â_1)^N|ψ⟩| / (N!/2)`.
///
/// The normalisation is exact for NOON-type states and kept as is otherwise.
pub fn correlator(psi: &QuantumState) -> f64 {
    let basis = psi.basis();
    let n = basis.n_particles();
    let m = basis.n_modes();
    let mut v = psi.amplitudes().clone();
    for _ in 0..n {
        v = apply_hop(basis, m, 1, &v).expect("sites 1 and M always exist");
    }
    let factorial: f64 = (1..=n).map(|k| k as f64).product();
    psi.amplitudes().dotc(&v).norm() / (0.5 * factorial)
}

/// `⟨n̂_j⟩` for `j = 1..=M`.
pub fn occupations(psi: &QuantumState) -> Vec<f64> {
    let basis = psi.basis();
    let mut out = vec![0.0; basis.n_modes()];
    for (amp, s) in psi.amplitudes().iter().zip(basis.states()) {
        let p = amp.norm_sqr();
        for (o, &n) in out.iter_mut().zip(s.iter()) {
            *o += p * n as f64;
        }
    }
    out
}

/// `|⟨φ_k|ψ₀⟩|²` in ascending-energy order.
pub fn eigenstate_overlaps(psi0: &QuantumState, eig: &EigenSystem) -> Result<Vec<f64>> {
    if psi0.amplitudes().len() != eig.dim() {
        return Err(Error::domain(format!(
            "state has dimension {}, eigensystem {}",
            psi0.amplitudes().len(),
            eig.dim()
        )));
    }
    Ok(eig.to_eigenbasis(psi0.amplitudes()).iter().map(|c| c.norm_sqr()).collect())
}

/// The two eigenstates carrying the largest overlaps, `first` being the larger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DominantPair {
    pub first: usize,
    pub second: usize,
    /// A tie was broken by taking the lower energy index.
    pub tie: bool,
    /// Essentially all weight sits on `first`.
    pub concentrated: bool,
}

impl DominantPair {
    pub fn flagged(&self) -> bool {
        self.tie || self.concentrated
    }
}

/// Picks the two largest overlaps; ties resolve to the lower index.
///
/// Needs at least two entries.
pub fn dominant_pair(overlaps: &[f64]) -> DominantPair {
    assert!(overlaps.len() >= 2, "need at least two overlaps");
    let pick = |skip: Option<usize>| {
        let mut best: Option<usize> = None;
        let mut tie = false;
        for (k, &v) in overlaps.iter().enumerate() {
            if Some(k) == skip {
                continue;
            }
            match best {
                None => best = Some(k),
                Some(b) => {
                    if v > overlaps[b] + OVERLAP_TIE {
                        best = Some(k);
                        tie = false;
                    } else if (v - overlaps[b]).abs() <= OVERLAP_TIE {
                        tie = true;
                    }
                }
            }
        }
        (best.unwrap(), tie)
    };
    let (first, tie_a) = pick(None);
    let (second, tie_b) = pick(Some(first));
    DominantPair {
        first,
        second,
        tie: tie_a || tie_b,
        concentrated: overlaps[second] <= OVERLAP_TIE,
    }
}

/// Gap of the dominant pair and the half-period estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapEstimate {
    pub omega: f64,
    pub tau: f64,
    pub pair: DominantPair,
}

/// `Ω = |E_a − E_b|` for the two highest-overlap eigenstates, `τ_est = π/Ω`.
pub fn spectral_gap_tau(eig: &EigenSystem, overlaps: &[f64]) -> Result<GapEstimate> {
    if eig.dim() < 2 || overlaps.len() != eig.dim() {
        return Err(Error::domain("gap estimate needs matching overlaps of dimension at least 2"));
    }
    let pair = dominant_pair(overlaps);
    let omega = (eig.energies[pair.first] - eig.energies[pair.second]).abs();
    let scale = eig.energies.iter().fold(0.0_f64, |a, e| a.max(e.abs()));
    if omega < 1e-14 * scale || omega == 0.0 {
        return Err(Error::DegeneratePair {
            a: pair.first,
            b: pair.second,
            gap: omega,
        });
    }
    Ok(GapEstimate {
        omega,
        tau: PI / omega,
        pair,
    })
}
