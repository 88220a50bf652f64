//! Sampling of the interferometric map, inversion back to the joint
//! amplitude, timing-jitter models and sampling requirements.
//!
//! Records are indexed `[σ][η]` and hold `S̃ = M(θ=0) + i M(θ=π/2)`, which
//! for low gain is `2g Σ L α*(k) α*(k′) e^{ik(q_σ+q_η)} e^{ik′q_σ} ΔkΔk′`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::format::{join_rows, split_rows, Sig17};
use crate::grid::{dft2, Field2D, ModeGrid, Sign};
use crate::jsa::{normalize, JointAmplitude};
use crate::schmidt::SchmidtData;
use crate::signals::{ExactMap, LowgainMap, SeedProfile, SignalMap};

pub const DEFAULT_REG_EPS: f64 = 1e-3;
pub const RNG_ALGORITHM: &str = "ChaCha8";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Exact,
    Lowgain,
    ExternalFile,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngInfo {
    pub algorithm: String,
    pub seed: u64,
}

/// Jitter variances of the two delays and Monte Carlo settings. Each delay
/// fluctuates with density `∝ exp(-δ²/Δ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub delta_eta: f64,
    pub delta_sigma: f64,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    #[serde(default)]
    pub rng_seed: u64,
}

fn default_mc_samples() -> usize {
    10_000
}

impl NoiseParams {
    pub fn new(delta_eta: f64, delta_sigma: f64, mc_samples: usize, rng_seed: u64) -> Self {
        Self { delta_eta, delta_sigma, mc_samples, rng_seed }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("delta_eta", self.delta_eta), ("delta_sigma", self.delta_sigma)] {
            if !(v.is_finite() && v >= 0.0) {
                return invalid(format!("{name} must be finite and ≥ 0, got {v}"));
            }
        }
        if self.mc_samples == 0 {
            return invalid("mc_samples must be ≥ 1");
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.delta_eta == 0.0 && self.delta_sigma == 0.0
    }
}

/// Sampled complex interferometric signal over a `(q_σ, q_η)` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementRecord {
    pub grid_sigma: ModeGrid,
    pub grid_eta: ModeGrid,
    values: Vec<C64>,
    pub gain_used: f64,
    pub provenance: Provenance,
    pub rng: Option<RngInfo>,
    pub noise: Option<NoiseParams>,
    /// Per-cell Monte Carlo standard error of the complex mean.
    pub standard_error: Option<Vec<f64>>,
}

impl MeasurementRecord {
    pub fn new(
        grid_sigma: ModeGrid,
        grid_eta: ModeGrid,
        values: Vec<C64>,
        gain_used: f64,
        provenance: Provenance,
    ) -> Result<Self> {
        if values.len() != grid_sigma.len() * grid_eta.len() {
            return invalid(format!(
                "record has {} values for a {}×{} grid",
                values.len(),
                grid_sigma.len(),
                grid_eta.len()
            ));
        }
        if !(gain_used.is_finite() && gain_used >= 0.0) {
            return invalid(format!("gain_used must be finite and ≥ 0, got {gain_used}"));
        }
        Ok(Self {
            grid_sigma,
            grid_eta,
            values,
            gain_used,
            provenance,
            rng: None,
            noise: None,
            standard_error: None,
        })
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn get(&self, m: usize, n: usize) -> C64 {
        self.values[m * self.grid_eta.len() + n]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.grid_sigma.len(), self.grid_eta.len())
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `a·self + b·other` on identical grids; metadata is taken from `self`.
    pub fn combine(&self, a: C64, other: &MeasurementRecord, b: C64) -> Result<MeasurementRecord> {
        self.grid_sigma.ensure_same(&other.grid_sigma, "record σ grid")?;
        self.grid_eta.ensure_same(&other.grid_eta, "record η grid")?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        MeasurementRecord::new(self.grid_sigma, self.grid_eta, values, self.gain_used, self.provenance)
    }
}

#[derive(Serialize, Deserialize)]
struct NoiseRepr {
    delta_eta: f64,
    delta_sigma: f64,
    mc_samples: usize,
}

#[derive(Serialize, Deserialize)]
struct RecordRepr {
    grid_sigma: ModeGrid,
    grid_eta: ModeGrid,
    re: Vec<Vec<Sig17>>,
    im: Vec<Vec<Sig17>>,
    gain_used: Sig17,
    provenance: Provenance,
    rng: Option<RngInfo>,
    noise: Option<NoiseRepr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    standard_error: Option<Vec<Vec<Sig17>>>,
}

impl Serialize for MeasurementRecord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let n_eta = self.grid_eta.len();
        let (re, im) = split_rows(&self.values, n_eta);
        RecordRepr {
            grid_sigma: self.grid_sigma,
            grid_eta: self.grid_eta,
            re,
            im,
            gain_used: Sig17(self.gain_used),
            provenance: self.provenance,
            rng: self.rng.clone(),
            noise: self.noise.map(|n| NoiseRepr {
                delta_eta: n.delta_eta,
                delta_sigma: n.delta_sigma,
                mc_samples: n.mc_samples,
            }),
            standard_error: self
                .standard_error
                .as_ref()
                .map(|se| se.chunks(n_eta).map(|r| r.iter().copied().map(Sig17).collect()).collect()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MeasurementRecord {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = RecordRepr::deserialize(d)?;
        let (ns, ne) = (r.grid_sigma.len(), r.grid_eta.len());
        let values = join_rows(&r.re, &r.im, ns, ne).map_err(D::Error::custom)?;
        let mut rec = MeasurementRecord::new(r.grid_sigma, r.grid_eta, values, r.gain_used.0, r.provenance)
            .map_err(D::Error::custom)?;
        let seed = r.rng.as_ref().map(|x| x.seed).unwrap_or(0);
        rec.rng = r.rng;
        rec.noise = r.noise.map(|n| NoiseParams::new(n.delta_eta, n.delta_sigma, n.mc_samples, seed));
        if let Some(se) = r.standard_error {
            if se.len() != ns || se.iter().any(|row| row.len() != ne) {
                return Err(D::Error::custom("standard_error shape does not match the grids"));
            }
            rec.standard_error = Some(se.into_iter().flatten().map(|x| x.0).collect());
        }
        Ok(rec)
    }
}

/// Forward model used to synthesize a record.
#[derive(Clone, Copy)]
pub enum ForwardModel<'a> {
    Exact(&'a SchmidtData),
    Lowgain(&'a JointAmplitude),
}

fn sample_map(map: &dyn SignalMap, grid_sigma: &ModeGrid, grid_eta: &ModeGrid) -> Vec<C64> {
    let qs = grid_sigma.points();
    let qe = grid_eta.points();
    let n_eta = qe.len();
    (0..qs.len() * n_eta)
        .into_par_iter()
        .map(|c| map.record_value(qs[c / n_eta], qe[c % n_eta]))
        .collect()
}

/// Sample `S̃(q_σ, q_η)` on the given grids. Deterministic.
pub fn sample_signal_map(
    model: ForwardModel<'_>,
    gain: f64,
    seed: &SeedProfile,
    grid_sigma: &ModeGrid,
    grid_eta: &ModeGrid,
) -> Result<MeasurementRecord> {
    let (values, provenance) = match model {
        ForwardModel::Exact(s) => (sample_map(&ExactMap::new(s, gain, seed)?, grid_sigma, grid_eta), Provenance::Exact),
        ForwardModel::Lowgain(j) => {
            (sample_map(&LowgainMap::new(j.kernel(), gain, seed)?, grid_sigma, grid_eta), Provenance::Lowgain)
        }
    };
    MeasurementRecord::new(*grid_sigma, *grid_eta, values, gain, provenance)
}

/// Linear part of the inversion: the masked kernel estimate before
/// normalization, and the support (`true` = kept).
pub fn deconvolution_kernel(
    record: &MeasurementRecord,
    seed: &SeedProfile,
    gain: f64,
    reg_eps: f64,
) -> Result<(Field2D, Vec<bool>)> {
    if !(gain.is_finite() && gain > 0.0) {
        return invalid(format!("inversion needs gain > 0, got {gain}"));
    }
    if !(reg_eps.is_finite() && reg_eps >= 0.0) {
        return invalid(format!("reg_eps must be ≥ 0, got {reg_eps}"));
    }
    let g = *seed.grid();
    let k = g.points();
    let nk = k.len();
    let qs = record.grid_sigma.points();
    let qe = record.grid_eta.points();
    let (d_sigma, d_eta) = (record.grid_sigma.spacing(), record.grid_eta.spacing());

    let s = DMatrix::from_row_slice(qs.len(), qe.len(), record.values());
    let a = DMatrix::from_fn(qe.len(), nk, |n, l| C64::from_polar(d_eta / (2.0 * PI), -k[l] * qe[n]));
    let mut t = s * a;
    for (m, &sig) in qs.iter().enumerate() {
        for (l, &kl) in k.iter().enumerate() {
            t[(m, l)] *= C64::from_polar(1.0, -kl * sig);
        }
    }
    let b = DMatrix::from_fn(qs.len(), nk, |m, j| C64::from_polar(d_sigma / (2.0 * PI), -k[j] * qs[m]));
    let r = t.transpose() * b;

    let alpha = seed.alpha().values();
    let amax = seed.max_abs();
    let floor = reg_eps * amax * amax;
    let (c, half_s, half_i) = (g.center(), PI / d_eta, PI / d_sigma);
    let slack = 1.0 + 1e-12;
    let mut support = vec![false; nk * nk];
    let mut values = vec![C64::new(0.0, 0.0); nk * nk];
    for i in 0..nk {
        for j in 0..nk {
            let w = alpha[i].norm() * alpha[j].norm();
            let in_window = (k[i] - c).abs() <= half_s * slack && (k[j] - c).abs() <= half_i * slack;
            if w > 0.0 && w >= floor && in_window {
                support[i * nk + j] = true;
                values[i * nk + j] = r[(i, j)] / (alpha[i].conj() * alpha[j].conj() * 2.0 * gain);
            }
        }
    }
    Ok((Field2D::new(g, g, values)?, support))
}

/// Result of [`invert_to_modal`].
#[derive(Clone, Debug)]
pub struct Inversion {
    pub amplitude: JointAmplitude,
    /// `true` where the cell was reconstructed.
    pub support: Vec<bool>,
    pub masked_fraction: f64,
    /// `‖forward(L_rec) − S̃‖ / ‖S̃‖` with `L_rec` before normalization.
    pub residual: f64,
}

/// Invert a record to the joint amplitude on the seed grid.
pub fn invert_to_modal(record: &MeasurementRecord, seed: &SeedProfile, gain: f64, reg_eps: f64) -> Result<Inversion> {
    let (raw, support) = deconvolution_kernel(record, seed, gain, reg_eps)?;
    let kept = support.iter().filter(|s| **s).count();
    if kept == 0 {
        return Err(Error::ReconstructionFailed("every cell is masked".into()));
    }
    let masked_fraction = 1.0 - kept as f64 / support.len() as f64;
    let fwd = sample_map(&LowgainMap::new(&raw, gain, seed)?, &record.grid_sigma, &record.grid_eta);
    let diff: f64 = fwd.iter().zip(record.values()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    let norm = record.norm();
    let residual = if norm > 0.0 { diff / norm } else { diff };
    let amplitude = normalize(raw).map_err(|e| match e {
        Error::DegenerateKernel(m) => Error::ReconstructionFailed(format!("reconstructed kernel is degenerate: {m}")),
        other => other,
    })?;
    Ok(Inversion { amplitude, support, masked_fraction, residual })
}

/// `|⟨A,B⟩|² / (⟨A,A⟩⟨B,B⟩)` over the supported cells.
pub fn fidelity(a: &Field2D, b: &Field2D, support: Option<&[bool]>) -> Result<f64> {
    a.ensure_same_grids(b)?;
    let n = a.values().len();
    if let Some(m) = support {
        if m.len() != n {
            return invalid(format!("support has {} cells, kernel has {n}", m.len()));
        }
        if !m.iter().any(|x| *x) {
            return invalid("fidelity over an empty support");
        }
    }
    let keep = |i: usize| support.map_or(true, |m| m[i]);
    let (mut ab, mut aa, mut bb) = (C64::new(0.0, 0.0), 0.0, 0.0);
    for (i, (x, y)) in a.values().iter().zip(b.values()).enumerate() {
        if keep(i) {
            ab += x.conj() * y;
            aa += x.norm_sqr();
            bb += y.norm_sqr();
        }
    }
    if aa == 0.0 || bb == 0.0 {
        return Err(Error::DegenerateKernel("fidelity of a kernel that vanishes on the support".into()));
    }
    Ok((ab.norm_sqr() / (aa * bb)).min(1.0))
}

/// Phase-averaging factor `exp(-(k+k′)²Δ_σ/4 − k²Δ_η/4)` at signal `k`,
/// idler `k′`.
pub fn jitter_attenuation(k: f64, kp: f64, noise: &NoiseParams) -> f64 {
    (-(k + kp).powi(2) * noise.delta_sigma / 4.0 - k * k * noise.delta_eta / 4.0).exp()
}

/// Kernel seen through jitter-averaged measurement (not normalized).
pub fn apply_jitter_analytic(kernel: &Field2D, noise: &NoiseParams) -> Result<Field2D> {
    noise.validate()?;
    if noise.is_noiseless() {
        return Ok(kernel.clone());
    }
    let ks = kernel.grid_s().points();
    let ki = kernel.grid_i().points();
    let n_i = ki.len();
    let mut out = kernel.clone();
    for (c, v) in out.values_mut().iter_mut().enumerate() {
        *v *= jitter_attenuation(ks[c / n_i], ki[c % n_i], noise);
    }
    Ok(out)
}

/// Average `map` over Gaussian jitter of both delays. Each cell draws from
/// its own ChaCha8 stream (seed from `noise`, stream = cell index), so the
/// result does not depend on scheduling.
pub fn apply_jitter_monte_carlo(
    map: &dyn SignalMap,
    noise: &NoiseParams,
    grid_sigma: &ModeGrid,
    grid_eta: &ModeGrid,
    gain: f64,
    provenance: Provenance,
) -> Result<MeasurementRecord> {
    noise.validate()?;
    let mut rec = if noise.is_noiseless() {
        let mut r = MeasurementRecord::new(*grid_sigma, *grid_eta, sample_map(map, grid_sigma, grid_eta), gain, provenance)?;
        r.standard_error = Some(vec![0.0; r.values.len()]);
        r
    } else {
        let qs = grid_sigma.points();
        let qe = grid_eta.points();
        let n_eta = qe.len();
        let n = noise.mc_samples;
        let ds = Normal::new(0.0, (noise.delta_sigma / 2.0).sqrt()).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let de = Normal::new(0.0, (noise.delta_eta / 2.0).sqrt()).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let cells: Vec<(C64, f64)> = (0..qs.len() * n_eta)
            .into_par_iter()
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(noise.rng_seed);
                rng.set_stream(c as u64);
                let (sig, eta) = (qs[c / n_eta], qe[c % n_eta]);
                // Welford accumulation in draw order.
                let mut mean = C64::new(0.0, 0.0);
                let mut m2 = 0.0;
                for t in 0..n {
                    let v = map.record_value(sig + ds.sample(&mut rng), eta + de.sample(&mut rng));
                    let delta = v - mean;
                    mean += delta / (t + 1) as f64;
                    m2 += (delta.conj() * (v - mean)).re;
                }
                let se = if n > 1 { (m2 / (n - 1) as f64 / n as f64).sqrt() } else { 0.0 };
                (mean, se)
            })
            .collect();
        let mut r = MeasurementRecord::new(*grid_sigma, *grid_eta, cells.iter().map(|c| c.0).collect(), gain, provenance)?;
        r.standard_error = Some(cells.iter().map(|c| c.1).collect());
        r
    };
    rec.rng = Some(RngInfo { algorithm: RNG_ALGORITHM.into(), seed: noise.rng_seed });
    rec.noise = Some(*noise);
    Ok(rec)
}

/// Outcome of [`nyquist_check`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NyquistReport {
    pub pass: bool,
    pub k_max_signal: f64,
    pub k_max_idler: f64,
    /// Largest admissible `Δq_η` (`π / k_max_signal`).
    pub required_dq_eta: f64,
    /// Largest admissible `Δq_σ` (`π / k_max_idler`).
    pub required_dq_sigma: f64,
    pub dq_eta: f64,
    pub dq_sigma: f64,
    pub span_ok: bool,
    /// `[min, max]` of `q_σ` and `q_η` where the transform is significant.
    pub sigma_reach: [f64; 2],
    pub eta_reach: [f64; 2],
}

const BAND_MASS: f64 = 1.0 - 1e-6;
const SPAN_LEVEL: f64 = 1e-4;

/// Half-width about the grid center holding `BAND_MASS` of `marginal`.
fn band_half_width(grid: &ModeGrid, marginal: &[f64]) -> f64 {
    let total: f64 = marginal.iter().sum();
    if total == 0.0 {
        return grid.spacing() / 2.0;
    }
    let c = grid.center();
    let mut order: Vec<(f64, f64)> = grid.points().into_iter().zip(marginal).map(|(k, &m)| ((k - c).abs(), m)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut acc = 0.0;
    let mut i = 0;
    // points at equal distance enter together
    while i < order.len() {
        let d = order[i].0;
        while i < order.len() && order[i].0 <= d * (1.0 + 1e-12) {
            acc += order[i].1;
            i += 1;
        }
        if acc >= BAND_MASS * total {
            return d + grid.spacing() / 2.0;
        }
    }
    order.last().map(|x| x.0).unwrap_or(0.0) + grid.spacing() / 2.0
}

fn covers_period(record_axis: &ModeGrid, k_grid: &ModeGrid) -> bool {
    let period = 2.0 * PI / k_grid.spacing();
    (record_axis.span() - period).abs() <= 1e-12 * period
}

/// Check that record grids resolve the seed-weighted kernel `L α* ⊗ α*`.
pub fn nyquist_check(j: &JointAmplitude, seed: &SeedProfile, grid_sigma: &ModeGrid, grid_eta: &ModeGrid) -> Result<NyquistReport> {
    let g = *j.grid_s();
    g.ensure_same(j.grid_i(), "signal vs idler grid")?;
    g.ensure_same(seed.grid(), "seed vs idler grid")?;
    let alpha = seed.alpha().values();
    let n = g.len();
    let w = Field2D::from_fn_indexed(g, g, |i, jj| j.kernel().get(i, jj) * alpha[i].conj() * alpha[jj].conj());
    let mut ms = vec![0.0; n];
    let mut mi = vec![0.0; n];
    for i in 0..n {
        for jj in 0..n {
            let v = w.get(i, jj).norm_sqr();
            ms[i] += v;
            mi[jj] += v;
        }
    }
    let k_max_signal = band_half_width(&g, &ms);
    let k_max_idler = band_half_width(&g, &mi);
    let required_dq_eta = PI / k_max_signal;
    let required_dq_sigma = PI / k_max_idler;
    let (dq_eta, dq_sigma) = (grid_eta.spacing(), grid_sigma.spacing());
    let slack = 1.0 + 1e-12;
    let sampling_ok = dq_eta <= required_dq_eta * slack && dq_sigma <= required_dq_sigma * slack;

    let wt = dft2(&w, Sign::Plus, Sign::Plus);
    let peak = wt.max_abs();
    let (qs, qi) = (wt.grid_s().points(), wt.grid_i().points());
    let mut sigma_reach = [f64::INFINITY, f64::NEG_INFINITY];
    let mut eta_reach = [f64::INFINITY, f64::NEG_INFINITY];
    for (a, &q_s) in qs.iter().enumerate() {
        for (b, &q_i) in qi.iter().enumerate() {
            if wt.get(a, b).norm() >= SPAN_LEVEL * peak {
                sigma_reach = [sigma_reach[0].min(q_i), sigma_reach[1].max(q_i)];
                let q_eta = q_s - q_i;
                eta_reach = [eta_reach[0].min(q_eta), eta_reach[1].max(q_eta)];
            }
        }
    }
    let within = |reach: [f64; 2], axis: &ModeGrid| {
        let (lo, hi) = axis.bounds();
        let tol = 1e-12 * axis.span();
        reach[0] >= lo - tol && reach[1] <= hi + tol
    };
    let span_ok = (covers_period(grid_sigma, &g) || within(sigma_reach, grid_sigma))
        && (covers_period(grid_eta, &g) || within(eta_reach, grid_eta));

    Ok(NyquistReport {
        pass: sampling_ok && span_ok,
        k_max_signal,
        k_max_idler,
        required_dq_eta,
        required_dq_sigma,
        dq_eta,
        dq_sigma,
        span_ok,
        sigma_reach,
        eta_reach,
    })
}
