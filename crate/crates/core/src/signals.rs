//! Detection signals: direct (spectrally resolved) signal intensity and the
//! balanced-interferometer difference signal, exact in the gain and in the
//! low-gain limit.
//!
//! Seed Schmidt coefficients are `βₙ = ⟨φₙ, α⟩`, the projection of the
//! physical seed amplitude. With seed `α`, exact first moments are
//!
//! ```text
//! ⟨a_s(k)⟩ = Σₙ ψₙ(k) βₙ* sinh(g√λₙ)
//! ⟨a_i(k)⟩ = α(k) + Σₙ φₙ(k) βₙ (cosh(g√λₙ) − 1)
//! ```
//!
//! and vacuum cross-correlations between the arms vanish, so the
//! interferometer only sees the product of means.
//!
//! Interferometer phases: the seed is delayed before the crystal,
//! `α(k) → α(k) e^{-ik q_σ}`; after the crystal the idler arm picks up
//! `e^{-ik q_η}` and the signal arm `e^{-iθ}`. The difference signal is then
//! `M(θ) = 2 Re[e^{-iθ} X]` with
//!
//! ```text
//! X = Σ_k ⟨a_s(k)⟩ ⟨a_i(k)⟩* e^{ik q_η} Δk
//!   ≈ g Σ_kk′ L(k,k′) α*(k) e^{ik(q_σ+q_η)} α*(k′) e^{ik′q_σ} Δk Δk′   (g ≪ 1)
//! ```
//!
//! i.e. the complex record `S̃ = M(0) + i M(π/2) = 2X` samples the transform
//! of `L α* ⊗ α*` at signal frequency `q_σ + q_η` and idler frequency `q_σ`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{Field1D, Field2D, ModeGrid};
use crate::jsa::JointAmplitude;
use crate::schmidt::SchmidtData;

/// Coherent seed amplitude `α(k)` on the idler grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SeedProfile {
    alpha: Field1D,
}

impl SeedProfile {
    pub fn new(alpha: Field1D) -> Result<Self> {
        if alpha.values().iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return invalid("seed amplitude must be finite");
        }
        Ok(Self { alpha })
    }

    pub fn flat(grid: ModeGrid, amplitude: C64) -> Self {
        Self { alpha: Field1D::from_fn(grid, |_| amplitude) }
    }

    /// `A exp(-(k - k₀)²/(4w²))`: `w` is the rms width of `|α|²`.
    pub fn gaussian(grid: ModeGrid, center: f64, width: f64, amplitude: C64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return invalid(format!("seed width must be positive, got {width}"));
        }
        Ok(Self {
            alpha: Field1D::from_fn(grid, |k| amplitude * (-(k - center).powi(2) / (4.0 * width * width)).exp()),
        })
    }

    /// Seed occupying the single grid cell nearest `k0`, carrying
    /// `intensity` photons in total.
    pub fn single_point(grid: ModeGrid, k0: f64, intensity: f64) -> Result<Self> {
        if !(intensity >= 0.0 && intensity.is_finite()) {
            return invalid(format!("seed intensity must be ≥ 0, got {intensity}"));
        }
        let idx = grid
            .nearest_index(k0)
            .ok_or_else(|| Error::OutOfRange(format!("seed center {k0} outside the idler grid")))?;
        let mut alpha = Field1D::zeros(grid);
        alpha.values_mut()[idx] = C64::new((intensity / grid.spacing()).sqrt(), 0.0);
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> &Field1D {
        &self.alpha
    }

    pub fn grid(&self) -> &ModeGrid {
        self.alpha.grid()
    }

    /// `|α|² = Σ |α(k)|² Δk`.
    pub fn total_intensity(&self) -> f64 {
        self.alpha.norm_sqr()
    }

    pub fn max_abs(&self) -> f64 {
        self.alpha.values().iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: C64) -> SeedProfile {
        SeedProfile { alpha: self.alpha.scaled(factor) }
    }

    /// Seed after the pre-crystal delay: `α(k) e^{-ik q_σ}`.
    pub fn delayed(&self, q_sigma: f64) -> SeedProfile {
        if q_sigma == 0.0 {
            return self.clone();
        }
        let g = *self.alpha.grid();
        let values = self
            .alpha
            .values()
            .iter()
            .zip(g.points())
            .map(|(a, k)| a * C64::from_polar(1.0, -k * q_sigma))
            .collect();
        SeedProfile { alpha: Field1D::new(g, values).expect("same grid") }
    }
}

/// Delays and phase of the interferometer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InterferometerSettings {
    /// Seed-vs-pump delay, applied before the crystal.
    pub q_sigma: f64,
    /// Idler arm delay, applied after the crystal.
    pub q_eta: f64,
    /// Extra phase on the signal arm.
    #[serde(default)]
    pub theta: f64,
}

impl InterferometerSettings {
    pub fn new(q_sigma: f64, q_eta: f64, theta: f64) -> Self {
        Self { q_sigma, q_eta, theta }
    }
}

/// `2 Re[e^{-iθ} X]`.
pub fn quadrature(cross: C64, theta: f64) -> f64 {
    2.0 * (C64::from_polar(1.0, -theta) * cross).re
}

/// Complex record value from the θ = 0 and θ = π/2 quadratures.
pub fn assemble_quadratures(cross: C64) -> C64 {
    C64::new(quadrature(cross, 0.0), quadrature(cross, FRAC_PI_2))
}

fn check_gain(gain: f64) -> Result<()> {
    if gain.is_finite() && gain >= 0.0 {
        Ok(())
    } else {
        invalid(format!("gain must be finite and ≥ 0, got {gain}"))
    }
}

fn check_index(grid: &ModeGrid, k_s: usize) -> Result<()> {
    if k_s < grid.len() {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!("signal index {k_s} outside grid of {} points", grid.len())))
    }
}

/// `cosh(x) - 1` without cancellation.
fn cosh_m1(x: f64) -> f64 {
    2.0 * (0.5 * x).sinh().powi(2)
}

/// `βₙ = ⟨φₙ, α⟩`.
pub fn seed_projections(s: &SchmidtData, seed: &SeedProfile) -> Result<Vec<C64>> {
    s.grid_i().ensure_same(seed.grid(), "seed vs idler grid")?;
    let d = seed.grid().spacing();
    Ok(s.phi()
        .iter()
        .map(|phi| {
            phi.values().iter().zip(seed.alpha.values()).map(|(p, a)| p.conj() * a).sum::<C64>() * d
        })
        .collect())
}

/// Exact output means `(⟨a_s(k)⟩, ⟨a_i(k)⟩)` for a seeded idler.
pub fn exact_means(s: &SchmidtData, gain: f64, seed: &SeedProfile) -> Result<(Vec<C64>, Vec<C64>)> {
    check_gain(gain)?;
    let beta = seed_projections(s, seed)?;
    let n_s = s.grid_s().len();
    let mut a_s = vec![C64::new(0.0, 0.0); n_s];
    let mut a_i = seed.alpha.values().to_vec();
    for (n, &b) in beta.iter().enumerate() {
        let x = gain * s.sqrt_lambdas()[n];
        let cs = b.conj() * x.sinh();
        if cs != C64::new(0.0, 0.0) {
            for (dst, p) in a_s.iter_mut().zip(s.psi()[n].values()) {
                *dst += p * cs;
            }
        }
        let ci = b * cosh_m1(x);
        if ci != C64::new(0.0, 0.0) {
            for (dst, p) in a_i.iter_mut().zip(s.phi()[n].values()) {
                *dst += p * ci;
            }
        }
    }
    Ok((a_s, a_i))
}

/// Spontaneous photon density `Σₙ |ψₙ(k_s)|² sinh²(g√λₙ)` at signal index `k_s`.
pub fn spontaneous_spectrum(s: &SchmidtData, gain: f64, k_s: usize) -> Result<f64> {
    check_gain(gain)?;
    check_index(s.grid_s(), k_s)?;
    Ok(s.psi()
        .iter()
        .zip(s.sqrt_lambdas())
        .map(|(p, &sl)| p.values()[k_s].norm_sqr() * (gain * sl).sinh().powi(2))
        .sum())
}

/// Spontaneous plus seeded density `|Σₙ βₙ* ψₙ(k_s) sinh(g√λₙ)|²`.
pub fn stimulated_spectrum(s: &SchmidtData, gain: f64, seed: &SeedProfile, k_s: usize) -> Result<f64> {
    let spont = spontaneous_spectrum(s, gain, k_s)?;
    let beta = seed_projections(s, seed)?;
    let seeded: C64 = beta
        .iter()
        .zip(s.psi())
        .zip(s.sqrt_lambdas())
        .map(|((b, p), &sl)| b.conj() * p.values()[k_s] * (gain * sl).sinh())
        .sum();
    Ok(spont + seeded.norm_sqr())
}

/// Stimulated density at every signal grid point.
pub fn stimulated_spectrum_all(s: &SchmidtData, gain: f64, seed: &SeedProfile) -> Result<Vec<f64>> {
    let (a_s, _) = exact_means(s, gain, seed)?;
    (0..a_s.len())
        .map(|k| Ok(spontaneous_spectrum(s, gain, k)? + a_s[k].norm_sqr()))
        .collect()
}

/// `Σₙ sinh²(g√λₙ)(1 + |βₙ|²)`.
pub fn total_signal_photons(s: &SchmidtData, gain: f64, seed: &SeedProfile) -> Result<f64> {
    check_gain(gain)?;
    let beta = seed_projections(s, seed)?;
    Ok(beta
        .iter()
        .zip(s.sqrt_lambdas())
        .map(|(b, &sl)| (gain * sl).sinh().powi(2) * (1.0 + b.norm_sqr()))
        .sum())
}

/// `|g Σ_j L(k_s, k′_j) α*(k′_j) Δk′|²`.
pub fn lowgain_stimulated_spectrum(j: &JointAmplitude, gain: f64, seed: &SeedProfile, k_s: usize) -> Result<f64> {
    check_gain(gain)?;
    check_index(j.grid_s(), k_s)?;
    j.grid_i().ensure_same(seed.grid(), "seed vs idler grid")?;
    let d = seed.grid().spacing();
    let sum: C64 = j.kernel().row(k_s).iter().zip(seed.alpha.values()).map(|(l, a)| l * a.conj()).sum();
    Ok((sum * d * gain).norm_sqr())
}

/// Narrowband-seed limit `g² |α|² |L(k_s, k₀)|² δk′` with `δk′` the spectral
/// width of the seed; `L` is taken at the idler grid point nearest `k₀`.
pub fn sipe_limit_spectrum(
    j: &JointAmplitude,
    gain: f64,
    seed_center: f64,
    seed_intensity: f64,
    seed_width: f64,
    k_s: usize,
) -> Result<f64> {
    check_gain(gain)?;
    check_index(j.grid_s(), k_s)?;
    if !(seed_intensity >= 0.0 && seed_width > 0.0) {
        return invalid("seed intensity must be ≥ 0 and seed width > 0");
    }
    let idx = j
        .grid_i()
        .nearest_index(seed_center)
        .ok_or_else(|| Error::OutOfRange(format!("seed center {seed_center} outside idler grid")))?;
    Ok(gain * gain * seed_intensity * j.kernel().get(k_s, idx).norm_sqr() * seed_width)
}

fn check_interferometer_grids(gs: &ModeGrid, gi: &ModeGrid, seed: &SeedProfile) -> Result<()> {
    gs.ensure_same(gi, "interferometer (signal and idler grids must coincide)")?;
    gi.ensure_same(seed.grid(), "seed vs idler grid")
}

/// Exact cross term `X` (see module docs).
pub fn interferometric_cross_exact(
    s: &SchmidtData,
    gain: f64,
    seed: &SeedProfile,
    settings: &InterferometerSettings,
) -> Result<C64> {
    check_interferometer_grids(s.grid_s(), s.grid_i(), seed)?;
    let (a_s, a_i) = exact_means(s, gain, &seed.delayed(settings.q_sigma))?;
    let g = s.grid_s();
    let sum: C64 = a_s
        .iter()
        .zip(&a_i)
        .zip(g.points())
        .map(|((x, y), k)| x * y.conj() * C64::from_polar(1.0, k * settings.q_eta))
        .sum();
    Ok(sum * g.spacing())
}

/// `⟨N_A − N_B⟩` for arbitrary gain.
pub fn interferometric_signal_exact(
    s: &SchmidtData,
    gain: f64,
    seed: &SeedProfile,
    settings: &InterferometerSettings,
) -> Result<f64> {
    Ok(quadrature(interferometric_cross_exact(s, gain, seed, settings)?, settings.theta))
}

/// Low-gain cross term `X = g Σ L α*(k) e^{ik(q_σ+q_η)} α*(k′) e^{ik′q_σ} ΔkΔk′`.
pub fn interferometric_cross_lowgain(
    j: &JointAmplitude,
    gain: f64,
    seed: &SeedProfile,
    settings: &InterferometerSettings,
) -> Result<C64> {
    check_gain(gain)?;
    check_interferometer_grids(j.grid_s(), j.grid_i(), seed)?;
    Ok(LowgainMap::new(j.kernel(), gain, seed)?.cross(settings.q_sigma, settings.q_eta))
}

/// `⟨N_A − N_B⟩` to first order in the gain.
pub fn interferometric_signal_lowgain(
    j: &JointAmplitude,
    gain: f64,
    seed: &SeedProfile,
    settings: &InterferometerSettings,
) -> Result<f64> {
    Ok(quadrature(interferometric_cross_lowgain(j, gain, seed, settings)?, settings.theta))
}

/// Point evaluator for the complex record `S̃(q_σ, q_η)` of a model.
pub trait SignalMap: Sync {
    /// Cross term `X` at the given delays.
    fn cross(&self, q_sigma: f64, q_eta: f64) -> C64;

    /// `S̃ = M(θ=0) + i M(θ=π/2)`.
    fn record_value(&self, q_sigma: f64, q_eta: f64) -> C64 {
        assemble_quadratures(self.cross(q_sigma, q_eta))
    }
}

/// Low-gain forward model for an arbitrary (possibly unnormalized) kernel.
pub struct LowgainMap {
    weighted: Vec<C64>,
    n_s: usize,
    n_i: usize,
    /// First point and spacing of the signal and idler grids.
    ks: (f64, f64),
    ki: (f64, f64),
}

impl LowgainMap {
    pub fn new(kernel: &Field2D, gain: f64, seed: &SeedProfile) -> Result<Self> {
        check_gain(gain)?;
        check_interferometer_grids(kernel.grid_s(), kernel.grid_i(), seed)?;
        let a = seed.alpha.values();
        let n = a.len();
        let w = gain * kernel.cell_area();
        let mut weighted = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                weighted.push(kernel.get(i, j) * a[i].conj() * a[j].conj() * w);
            }
        }
        let (gs, gi) = (kernel.grid_s(), kernel.grid_i());
        Ok(Self {
            weighted,
            n_s: gs.len(),
            n_i: gi.len(),
            ks: (gs.point(0), gs.spacing()),
            ki: (gi.point(0), gi.spacing()),
        })
    }
}

/// `Σ a_j b_j` with four independent partial sums.
fn dot4(a: &[C64], b: &[C64]) -> C64 {
    let zero = C64::new(0.0, 0.0);
    let mut acc = [zero; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: C64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for t in 0..4 {
            acc[t] += x[t] * y[t];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

impl SignalMap for LowgainMap {
    fn cross(&self, q_sigma: f64, q_eta: f64) -> C64 {
        // Uniform grids: e^{ik_j q} = e^{ik_0 q} r^j.
        let q_s = q_sigma + q_eta;
        let r_i = C64::from_polar(1.0, self.ki.1 * q_sigma);
        let mut idler = Vec::with_capacity(self.n_i);
        let mut p = C64::new(1.0, 0.0);
        for _ in 0..self.n_i {
            idler.push(p);
            p *= r_i;
        }
        let r_s = C64::from_polar(1.0, self.ks.1 * q_s);
        let mut total = C64::new(0.0, 0.0);
        for i in (0..self.n_s).rev() {
            let row = &self.weighted[i * self.n_i..(i + 1) * self.n_i];
            total = total * r_s + dot4(row, &idler);
        }
        total * C64::from_polar(1.0, self.ks.0 * q_s + self.ki.0 * q_sigma)
    }
}

/// Exact-gain forward model.
pub struct ExactMap<'a> {
    schmidt: &'a SchmidtData,
    gain: f64,
    seed: SeedProfile,
}

impl<'a> ExactMap<'a> {
    pub fn new(schmidt: &'a SchmidtData, gain: f64, seed: &SeedProfile) -> Result<Self> {
        check_gain(gain)?;
        check_interferometer_grids(schmidt.grid_s(), schmidt.grid_i(), seed)?;
        Ok(Self { schmidt, gain, seed: seed.clone() })
    }
}

impl SignalMap for ExactMap<'_> {
    fn cross(&self, q_sigma: f64, q_eta: f64) -> C64 {
        let settings = InterferometerSettings::new(q_sigma, q_eta, 0.0);
        interferometric_cross_exact(self.schmidt, self.gain, &self.seed, &settings)
            .expect("grids validated at construction")
    }
}
