//! Schmidt decomposition `L(k, k′) = Σₙ √λₙ ψₙ(k) φₙ(k′)`.
//!
//! The kernel is weighted by `√(Δk Δk′)` before the SVD and the singular
//! vectors are rescaled by `1/√Δ` afterwards, so that discrete orthonormality
//! is the same thing as `⟨ψₙ, ψₘ⟩ = δₙₘ` under the grid inner product.

use faer::complex_native::c64;
use faer::Mat;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::format::{sig_vec, Sig17};
use crate::grid::{Field1D, Field2D};
use crate::jsa::{JointAmplitude, NORM_TOL};

pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct SchmidtData {
    sqrt_lambdas: Vec<f64>,
    psi: Vec<Field1D>,
    phi: Vec<Field1D>,
    truncation_tol: f64,
    dropped_weight: f64,
}

impl SchmidtData {
    pub fn rank(&self) -> usize {
        self.sqrt_lambdas.len()
    }

    pub fn sqrt_lambdas(&self) -> &[f64] {
        &self.sqrt_lambdas
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.sqrt_lambdas.iter().map(|s| s * s).collect()
    }

    pub fn psi(&self) -> &[Field1D] {
        &self.psi
    }

    pub fn phi(&self) -> &[Field1D] {
        &self.phi
    }

    pub fn truncation_tol(&self) -> f64 {
        self.truncation_tol
    }

    /// `Σ λₙ` over the discarded modes.
    pub fn dropped_weight(&self) -> f64 {
        self.dropped_weight
    }

    pub fn grid_s(&self) -> &crate::grid::ModeGrid {
        self.psi[0].grid()
    }

    pub fn grid_i(&self) -> &crate::grid::ModeGrid {
        self.phi[0].grid()
    }

    /// Effective single-mode couplings `gain · √λₙ`.
    pub fn effective_couplings(&self, gain: f64) -> Vec<f64> {
        self.sqrt_lambdas.iter().map(|s| gain * s).collect()
    }

    /// Re-phase pair `n` as `ψₙ → e^{iθ}ψₙ`, `φₙ → e^{-iθ}φₙ`. The kernel is
    /// unchanged; this exposes the SVD gauge freedom.
    pub fn rephase_pair(&mut self, n: usize, theta: f64) -> Result<()> {
        if n >= self.rank() {
            return Err(Error::OutOfRange(format!("mode {n} ≥ rank {}", self.rank())));
        }
        let p = C64::from_polar(1.0, theta);
        self.psi[n] = self.psi[n].scaled(p);
        self.phi[n] = self.phi[n].scaled(p.conj());
        Ok(())
    }
}

/// Decompose a normalized joint amplitude. Modes with `λₙ < tol · λ₀` are
/// dropped and their weight reported.
pub fn schmidt_decompose(j: &JointAmplitude, tol: f64) -> Result<SchmidtData> {
    if !(0.0..1.0).contains(&tol) {
        return invalid(format!("truncation tolerance must lie in [0, 1), got {tol}"));
    }
    let kernel = j.kernel();
    let norm = kernel.norm_sqr();
    if (norm - 1.0).abs() > NORM_TOL {
        return invalid(format!("kernel must be normalized before decomposition (Σ|L|² = {norm})"));
    }
    let gs = *kernel.grid_s();
    let gi = *kernel.grid_i();
    let (ds, di) = (gs.spacing(), gi.spacing());
    let w = (ds * di).sqrt();
    let (n_s, n_i) = kernel.shape();
    let m = Mat::<c64>::from_fn(n_s, n_i, |a, b| {
        let v = kernel.get(a, b) * w;
        c64::new(v.re, v.im)
    });
    // nalgebra's complex SVD is unreliable for non-real input; faer's is not.
    let svd = m.svd();
    let (u, v) = (svd.u(), svd.v());
    let sv: Vec<f64> = (0..n_s.min(n_i)).map(|t| svd.s_diagonal().read(t).re).collect();
    if sv.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numeric("SVD produced non-finite singular values".into()));
    }

    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let lambda0 = sv[order[0]].powi(2);

    let mut sqrt_lambdas = Vec::new();
    let mut psi = Vec::new();
    let mut phi = Vec::new();
    let mut dropped_weight = 0.0;
    for (rank, &n) in order.iter().enumerate() {
        let lambda = sv[n].powi(2);
        if rank > 0 && (lambda < tol * lambda0 || lambda == 0.0) {
            dropped_weight += lambda;
            continue;
        }
        let mut p: Vec<C64> = (0..n_s).map(|a| {
            let x = u.read(a, n);
            C64::new(x.re, x.im) / ds.sqrt()
        }).collect();
        // φₙ = conj of the right singular vector, since L = U Σ Vᴴ
        let mut q: Vec<C64> = (0..n_i).map(|b| {
            let x = v.read(b, n);
            C64::new(x.re, -x.im) / di.sqrt()
        }).collect();
        // Gauge: largest-magnitude sample of ψ real and positive.
        let (_, peak) = p
            .iter()
            .enumerate()
            .fold((0.0, C64::new(1.0, 0.0)), |(best, z), (_, &x)| {
                if x.norm() > best { (x.norm(), x) } else { (best, z) }
            });
        let rot = peak.conj() / peak.norm();
        for x in &mut p {
            *x *= rot;
        }
        for x in &mut q {
            *x *= rot.conj();
        }
        sqrt_lambdas.push(sv[n]);
        psi.push(Field1D::new(gs, p)?);
        phi.push(Field1D::new(gi, q)?);
    }

    Ok(SchmidtData { sqrt_lambdas, psi, phi, truncation_tol: tol, dropped_weight })
}

/// `K = (Σλ)² / Σλ²`.
pub fn schmidt_number(s: &SchmidtData) -> f64 {
    schmidt_number_of(&s.lambdas())
}

pub fn schmidt_number_of(lambdas: &[f64]) -> f64 {
    let sum: f64 = lambdas.iter().sum();
    let sum_sq: f64 = lambdas.iter().map(|l| l * l).sum();
    sum * sum / sum_sq
}

/// `Σₙ<n_max √λₙ ψₙ(k) φₙ(k′)`.
pub fn reconstruct_from_schmidt(s: &SchmidtData, n_max: usize) -> Result<Field2D> {
    if n_max > s.rank() {
        return Err(Error::InvalidArgument(format!("n_max {n_max} exceeds rank {}", s.rank())));
    }
    let gs = *s.grid_s();
    let gi = *s.grid_i();
    let mut out = Field2D::zeros(gs, gi);
    let n_i = gi.len();
    for n in 0..n_max {
        let w = s.sqrt_lambdas[n];
        let p = s.psi[n].values();
        let q = s.phi[n].values();
        for (i, &pi) in p.iter().enumerate() {
            let a = pi * w;
            let row = &mut out.values_mut()[i * n_i..(i + 1) * n_i];
            for (dst, &qj) in row.iter_mut().zip(q) {
                *dst += a * qj;
            }
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct SchmidtExport<'a> {
    sqrt_lambdas: Vec<Sig17>,
    truncation_tol: Sig17,
    dropped_weight: Sig17,
    psi: &'a [Field1D],
    phi: &'a [Field1D],
}

impl Serialize for SchmidtData {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SchmidtExport {
            sqrt_lambdas: sig_vec(self.sqrt_lambdas.iter().copied()),
            truncation_tol: Sig17(self.truncation_tol),
            dropped_weight: Sig17(self.dropped_weight),
            psi: &self.psi,
            phi: &self.phi,
        }
        .serialize(s)
    }
}
