//! Joint modal functions `L(k, k′)` and the coupling constant.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::format::Sig17;
use crate::grid::{Field1D, Field2D, ModeGrid};

/// Tolerance on `Σ|L|²ΔkΔk′ = 1` for a kernel to count as normalized.
pub const NORM_TOL: f64 = 1e-9;

/// Pump spectral amplitude sampled along the sum variable `k + k′`, plus a
/// quadratic spectral phase `chirp · (k + k′)²`.
#[derive(Clone, Debug)]
pub struct PumpProfile {
    samples: Field1D,
    chirp: f64,
}

impl PumpProfile {
    pub fn new(samples: Field1D, chirp: f64) -> Result<Self> {
        if !chirp.is_finite() {
            return invalid("pump chirp must be finite");
        }
        let norm = samples.norm_sqr();
        if !norm.is_finite() {
            return invalid("pump amplitude has non-finite L2 norm");
        }
        Ok(Self { samples, chirp })
    }

    /// Samples `f` on the lattice of sums `k_i + k′_j` of two grids. When the
    /// grids share a spacing the lattice is hit exactly; otherwise a grid at
    /// half the finer spacing covering the sum range is used.
    pub fn on_sum_lattice(
        grid_s: &ModeGrid,
        grid_i: &ModeGrid,
        chirp: f64,
        f: impl Fn(f64) -> C64,
    ) -> Result<Self> {
        let ds = grid_s.spacing();
        let di = grid_i.spacing();
        let center = grid_s.center() + grid_i.center();
        let grid = if (ds - di).abs() <= 1e-12 * ds.max(di) {
            let n = grid_s.len() + grid_i.len() - 1;
            ModeGrid::with_spacing(center, ds, n)?
        } else {
            let step = 0.5 * ds.min(di);
            let width = grid_s.span() + grid_i.span();
            let n = (width / step).ceil() as usize + 2;
            ModeGrid::with_spacing(center, step, n)?
        };
        PumpProfile::new(Field1D::from_fn(grid, f), chirp)
    }

    /// Constant amplitude over the sum lattice.
    pub fn flat(grid_s: &ModeGrid, grid_i: &ModeGrid) -> Result<Self> {
        Self::on_sum_lattice(grid_s, grid_i, 0.0, |_| C64::new(1.0, 0.0))
    }

    /// Gaussian amplitude `exp(-(x - x₀)²/(4σ²))` in the sum variable.
    pub fn gaussian(
        grid_s: &ModeGrid,
        grid_i: &ModeGrid,
        center: f64,
        sigma: f64,
        chirp: f64,
    ) -> Result<Self> {
        if !(sigma > 0.0) {
            return invalid(format!("pump width must be positive, got {sigma}"));
        }
        Self::on_sum_lattice(grid_s, grid_i, chirp, |x| {
            C64::new((-(x - center).powi(2) / (4.0 * sigma * sigma)).exp(), 0.0)
        })
    }

    pub fn chirp(&self) -> f64 {
        self.chirp
    }

    pub fn samples(&self) -> &Field1D {
        &self.samples
    }

    /// Linear interpolation of the sampled amplitude; edge samples extend
    /// half a cell outward. `None` outside the covered interval.
    pub fn amplitude_at(&self, x: f64) -> Option<C64> {
        let g = self.samples.grid();
        let (lo, hi) = g.bounds();
        if !(x >= lo - 1e-12 * g.span() && x <= hi + 1e-12 * g.span()) {
            return None;
        }
        let v = self.samples.values();
        let t = (x - g.point(0)) / g.spacing();
        if t <= 0.0 {
            return Some(v[0]);
        }
        let i = t.floor() as usize;
        if i >= v.len() - 1 {
            return Some(v[v.len() - 1]);
        }
        let frac = t - i as f64;
        if frac < 1e-9 {
            return Some(v[i]);
        }
        Some(v[i] * (1.0 - frac) + v[i + 1] * frac)
    }
}

/// Phase-matching kernel `S(k, k′)` on the signal × idler grids.
#[derive(Clone, Debug)]
pub struct PhaseMatchingFunction {
    values: Field2D,
}

impl PhaseMatchingFunction {
    pub fn new(values: Field2D) -> Result<Self> {
        if !values.norm_sqr().is_finite() {
            return invalid("phase-matching kernel has non-finite L2 norm");
        }
        Ok(Self { values })
    }

    pub fn from_fn(grid_s: ModeGrid, grid_i: ModeGrid, f: impl Fn(f64, f64) -> C64) -> Result<Self> {
        Self::new(Field2D::from_fn(grid_s, grid_i, f))
    }

    /// Gaussian in the difference variable, `exp(-(k - k′)²/(4σ²))`.
    pub fn gaussian_difference(grid_s: ModeGrid, grid_i: ModeGrid, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return invalid(format!("phase-matching width must be positive, got {sigma}"));
        }
        Self::from_fn(grid_s, grid_i, |k, kp| {
            C64::new((-(k - kp).powi(2) / (4.0 * sigma * sigma)).exp(), 0.0)
        })
    }

    /// `sinc(ΔK/2)` with mismatch `ΔK = (k - k′)/width`.
    pub fn sinc_difference(grid_s: ModeGrid, grid_i: ModeGrid, width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return invalid(format!("phase-matching width must be positive, got {width}"));
        }
        Self::from_fn(grid_s, grid_i, |k, kp| {
            let x = 0.5 * (k - kp) / width;
            C64::new(if x.abs() < 1e-12 { 1.0 } else { x.sin() / x }, 0.0)
        })
    }

    pub fn values(&self) -> &Field2D {
        &self.values
    }
}

/// Unit-norm joint modal function, with the norm of the kernel it was built
/// from kept as metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct JointAmplitude {
    kernel: Field2D,
    norm_factor: f64,
}

impl JointAmplitude {
    /// Wrap a kernel that is already unit norm. Fails otherwise.
    pub fn from_normalized(kernel: Field2D) -> Result<Self> {
        let n = kernel.norm_sqr();
        if (n - 1.0).abs() > NORM_TOL {
            return invalid(format!("kernel is not normalized: Σ|L|²ΔkΔk′ = {n}"));
        }
        Ok(Self { kernel, norm_factor: 1.0 })
    }

    pub fn kernel(&self) -> &Field2D {
        &self.kernel
    }

    pub fn into_kernel(self) -> Field2D {
        self.kernel
    }

    pub fn grid_s(&self) -> &ModeGrid {
        self.kernel.grid_s()
    }

    pub fn grid_i(&self) -> &ModeGrid {
        self.kernel.grid_i()
    }

    /// L2 norm of the kernel before normalization.
    pub fn norm_factor(&self) -> f64 {
        self.norm_factor
    }

    /// Factor that was applied to reach unit norm.
    pub fn scale(&self) -> f64 {
        1.0 / self.norm_factor
    }

    /// `e^{iθ} L`, used to absorb the phase of the coupling constant.
    pub fn with_global_phase(&self, theta: f64) -> JointAmplitude {
        JointAmplitude {
            kernel: self.kernel.scaled(C64::from_polar(1.0, theta)),
            norm_factor: self.norm_factor,
        }
    }
}

pub fn normalize(kernel: Field2D) -> Result<JointAmplitude> {
    let norm = kernel.norm_sqr().sqrt();
    if !norm.is_finite() {
        return Err(Error::DegenerateKernel(format!("kernel norm is {norm}")));
    }
    if norm == 0.0 {
        return Err(Error::DegenerateKernel("kernel is identically zero".into()));
    }
    let kernel = if norm == 1.0 { kernel } else { kernel.scaled(C64::new(1.0 / norm, 0.0)) };
    Ok(JointAmplitude { kernel, norm_factor: norm })
}

/// `L(k, k′) ∝ f_p(k + k′) e^{i c (k + k′)²} S(k, k′)`, normalized. The
/// reported norm factor is proportional to the device constant χ.
pub fn build_jsa_pump_phasematch(
    pump: &PumpProfile,
    pm: &PhaseMatchingFunction,
) -> Result<JointAmplitude> {
    let s = pm.values();
    let ks = s.grid_s().points();
    let ki = s.grid_i().points();
    let mut values = Vec::with_capacity(ks.len() * ki.len());
    for (i, &k) in ks.iter().enumerate() {
        for (j, &kp) in ki.iter().enumerate() {
            let x = k + kp;
            let fp = pump.amplitude_at(x).ok_or_else(|| {
                Error::InvalidArgument(format!("pump amplitude not defined at k + k′ = {x}"))
            })?;
            values.push(fp * C64::from_polar(1.0, pump.chirp * x * x) * s.get(i, j));
        }
    }
    normalize(Field2D::new(*s.grid_s(), *s.grid_i(), values)?)
}

/// Double-Gaussian fixture
/// `exp(-(k+k′)²/(4σ₊²)) exp(-(k-k′)²/(4σ₋²)) e^{i c (k+k′)²}`, normalized.
pub fn gaussian_jsa(
    sigma_plus: f64,
    sigma_minus: f64,
    chirp: f64,
    grid_s: ModeGrid,
    grid_i: ModeGrid,
) -> Result<JointAmplitude> {
    if !(sigma_plus > 0.0 && sigma_plus.is_finite()) {
        return invalid(format!("sigma_plus must be positive, got {sigma_plus}"));
    }
    if !(sigma_minus > 0.0 && sigma_minus.is_finite()) {
        return invalid(format!("sigma_minus must be positive, got {sigma_minus}"));
    }
    if !chirp.is_finite() {
        return invalid("chirp must be finite");
    }
    let kernel = Field2D::from_fn(grid_s, grid_i, |k, kp| {
        let sum = k + kp;
        let diff = k - kp;
        let env = (-sum * sum / (4.0 * sigma_plus * sigma_plus)
            - diff * diff / (4.0 * sigma_minus * sigma_minus))
            .exp();
        C64::from_polar(env, chirp * sum * sum)
    });
    normalize(kernel)
}

/// `γ = 𝒜χ`, stored as magnitude and phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    pub gain: f64,
    #[serde(default)]
    pub gain_phase: f64,
    #[serde(default)]
    pub chi: Option<f64>,
    #[serde(default)]
    pub pump_amp: Option<f64>,
}

impl CouplingParams {
    pub fn new(gain: f64, gain_phase: f64) -> Result<Self> {
        let c = CouplingParams { gain, gain_phase, chi: None, pump_amp: None };
        c.validate()?;
        Ok(c)
    }

    /// Coupling from the device constant and the pump amplitude.
    pub fn from_device(chi: f64, pump_amp: f64, gain_phase: f64) -> Result<Self> {
        let c = CouplingParams { gain: chi * pump_amp, gain_phase, chi: Some(chi), pump_amp: Some(pump_amp) };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gain.is_finite() && self.gain >= 0.0) {
            return invalid(format!("gain must be finite and ≥ 0, got {}", self.gain));
        }
        if !self.gain_phase.is_finite() {
            return invalid("gain_phase must be finite");
        }
        for (name, v) in [("chi", self.chi), ("pump_amp", self.pump_amp)] {
            if let Some(x) = v {
                if !(x.is_finite() && x >= 0.0) {
                    return invalid(format!("{name} must be finite and ≥ 0, got {x}"));
                }
            }
        }
        if let (Some(chi), Some(amp)) = (self.chi, self.pump_amp) {
            let product = chi * amp;
            if (product - self.gain).abs() > 1e-12 * product.abs().max(self.gain.abs()) {
                return invalid(format!(
                    "gain {} differs from chi·pump_amp = {product}",
                    self.gain
                ));
            }
        }
        Ok(())
    }

    /// Kernel with the coupling phase absorbed, `e^{i arg γ} L`.
    pub fn effective_kernel(&self, j: &JointAmplitude) -> JointAmplitude {
        if self.gain_phase == 0.0 {
            j.clone()
        } else {
            j.with_global_phase(self.gain_phase)
        }
    }
}

#[derive(Serialize, Deserialize)]
struct KernelMetaRepr {
    norm_factor: Sig17,
    gain: Option<Sig17>,
    gain_phase: Option<Sig17>,
    chi: Option<Sig17>,
    pump_amp: Option<Sig17>,
}

#[derive(Serialize, Deserialize)]
struct KernelFileRepr {
    #[serde(flatten)]
    kernel: crate::format::Field2DRepr,
    metadata: KernelMetaRepr,
}

/// On-disk form of a joint amplitude: the field layout plus a metadata block.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelFile {
    pub amplitude: JointAmplitude,
    pub coupling: Option<CouplingParams>,
}

impl Serialize for KernelFile {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let c = self.coupling;
        KernelFileRepr {
            kernel: (&self.amplitude.kernel).into(),
            metadata: KernelMetaRepr {
                norm_factor: Sig17(self.amplitude.norm_factor),
                gain: c.map(|c| Sig17(c.gain)),
                gain_phase: c.map(|c| Sig17(c.gain_phase)),
                chi: c.and_then(|c| c.chi).map(Sig17),
                pump_amp: c.and_then(|c| c.pump_amp).map(Sig17),
            },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for KernelFile {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = KernelFileRepr::deserialize(d)?;
        let kernel = Field2D::try_from(r.kernel).map_err(D::Error::custom)?;
        // Files may carry a kernel that was never normalized; normalize here
        // and keep the stored factor when the kernel already has unit norm.
        let mut amplitude = normalize(kernel).map_err(D::Error::custom)?;
        if (amplitude.norm_factor - 1.0).abs() <= NORM_TOL {
            amplitude.norm_factor = r.metadata.norm_factor.0;
        }
        let coupling = match r.metadata.gain {
            Some(g) => {
                let c = CouplingParams {
                    gain: g.0,
                    gain_phase: r.metadata.gain_phase.map_or(0.0, |p| p.0),
                    chi: r.metadata.chi.map(|x| x.0),
                    pump_amp: r.metadata.pump_amp.map(|x| x.0),
                };
                c.validate().map_err(D::Error::custom)?;
                Some(c)
            }
            None => None,
        };
        Ok(KernelFile { amplitude, coupling })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::{from_json_str, to_json_string};
    use crate::grid::make_grid;
    use crate::schmidt::{schmidt_decompose, schmidt_number};

    fn grid(n: usize, span: f64) -> ModeGrid {
        make_grid(0.0, span, n).unwrap()
    }

    #[test]
    fn normalize_examples() {
        let g = grid(16, 4.0);
        let j = gaussian_jsa(1.0, 2.0, 0.3, g, g).unwrap();
        let again = normalize(j.kernel().clone()).unwrap();
        assert!(again.kernel().max_abs_diff(j.kernel()).unwrap() < 1e-15);
        assert!((again.scale() - 1.0).abs() < 1e-12);

        let four = normalize(j.kernel().scaled(C64::new(4.0, 0.0))).unwrap();
        assert!((four.scale() - 0.25).abs() < 1e-12);
        assert!((four.norm_factor() - 4.0).abs() < 1e-12);

        assert!(matches!(normalize(Field2D::zeros(g, g)), Err(Error::DegenerateKernel(_))));
    }

    #[test]
    fn gaussian_jsa_is_unit_norm_and_validates() {
        let g = grid(32, 12.0);
        for (sp, sm, c) in [(1.0, 1.0, 0.0), (0.5, 2.0, 0.7), (2.0, 0.3, -1.0)] {
            let j = gaussian_jsa(sp, sm, c, g, g).unwrap();
            assert!((j.kernel().norm_sqr() - 1.0).abs() < 1e-12);
        }
        assert!(gaussian_jsa(0.0, 1.0, 0.0, g, g).is_err());
        assert!(gaussian_jsa(1.0, -1.0, 0.0, g, g).is_err());
    }

    #[test]
    fn symmetric_gaussian_is_separable() {
        let g = grid(64, 16.0);
        let j = gaussian_jsa(1.3, 1.3, 0.0, g, g).unwrap();
        let s = schmidt_decompose(&j, 1e-12).unwrap();
        assert!((schmidt_number(&s) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn flat_pump_with_separable_pm_is_separable() {
        let g = grid(48, 12.0);
        let pump = PumpProfile::flat(&g, &g).unwrap();
        let pm = PhaseMatchingFunction::from_fn(g, g, |k, kp| {
            C64::new((-k * k / 2.0).exp() * (-(kp - 0.5).powi(2) / 3.0).exp(), 0.0)
        })
        .unwrap();
        let j = build_jsa_pump_phasematch(&pump, &pm).unwrap();
        let s = schmidt_decompose(&j, 1e-12).unwrap();
        assert!((schmidt_number(&s) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn pump_times_pm_matches_double_gaussian() {
        let g = grid(64, 20.0);
        let pump = PumpProfile::gaussian(&g, &g, 0.0, 1.0, 0.4).unwrap();
        let pm = PhaseMatchingFunction::gaussian_difference(g, g, 3.0).unwrap();
        let built = build_jsa_pump_phasematch(&pump, &pm).unwrap();
        let direct = gaussian_jsa(1.0, 3.0, 0.4, g, g).unwrap();
        assert!(built.kernel().max_abs_diff(direct.kernel()).unwrap() < 1e-12);
    }

    #[test]
    fn zero_pump_is_degenerate() {
        let g = grid(8, 4.0);
        let pump = PumpProfile::on_sum_lattice(&g, &g, 0.0, |_| C64::new(0.0, 0.0)).unwrap();
        let pm = PhaseMatchingFunction::gaussian_difference(g, g, 1.0).unwrap();
        assert!(matches!(build_jsa_pump_phasematch(&pump, &pm), Err(Error::DegenerateKernel(_))));
    }

    #[test]
    fn rescaling_inputs_scales_norm_factor_only() {
        let g = grid(24, 10.0);
        let pump = PumpProfile::gaussian(&g, &g, 0.2, 0.8, 0.1).unwrap();
        let pm = PhaseMatchingFunction::sinc_difference(g, g, 0.5).unwrap();
        let base = build_jsa_pump_phasematch(&pump, &pm).unwrap();

        let pump3 = PumpProfile::new(pump.samples().scaled(C64::new(3.0, 0.0)), pump.chirp()).unwrap();
        let pm_half = PhaseMatchingFunction::new(pm.values().scaled(C64::new(0.5, 0.0))).unwrap();
        let scaled = build_jsa_pump_phasematch(&pump3, &pm_half).unwrap();
        assert!(scaled.kernel().max_abs_diff(base.kernel()).unwrap() < 1e-13);
        assert!((scaled.norm_factor() / base.norm_factor() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn mismatched_spacing_uses_interpolated_pump() {
        let gs = grid(32, 8.0);
        let gi = make_grid(0.0, 8.0, 40).unwrap();
        let pump = PumpProfile::gaussian(&gs, &gi, 0.0, 1.0, 0.0).unwrap();
        let pm = PhaseMatchingFunction::gaussian_difference(gs, gi, 2.0).unwrap();
        let built = build_jsa_pump_phasematch(&pump, &pm).unwrap();
        let direct = gaussian_jsa(1.0, 2.0, 0.0, gs, gi).unwrap();
        // linear interpolation at half the finer spacing
        assert!(built.kernel().max_abs_diff(direct.kernel()).unwrap() < 5e-3);
    }

    #[test]
    fn pump_outside_its_grid_is_rejected() {
        let g = grid(8, 4.0);
        let narrow = make_grid(0.0, 1.0, 4).unwrap();
        let pump = PumpProfile::new(Field1D::from_fn(narrow, |_| C64::new(1.0, 0.0)), 0.0).unwrap();
        let pm = PhaseMatchingFunction::gaussian_difference(g, g, 1.0).unwrap();
        assert!(matches!(build_jsa_pump_phasematch(&pump, &pm), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn coupling_invariants() {
        assert!(CouplingParams::new(-0.1, 0.0).is_err());
        let c = CouplingParams::from_device(0.01, 30.0, 0.2).unwrap();
        assert!((c.gain - 0.3).abs() < 1e-15);
        let bad = CouplingParams { gain: 1.0, gain_phase: 0.0, chi: Some(0.1), pump_amp: Some(2.0) };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn kernel_file_round_trip() {
        let g = grid(6, 3.0);
        let j = gaussian_jsa(0.7, 1.1, 0.2, g, g).unwrap();
        let file = KernelFile {
            amplitude: j,
            coupling: Some(CouplingParams::from_device(0.02, 5.0, 0.3).unwrap()),
        };
        let text = to_json_string(&file).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v["metadata"]["norm_factor"].is_number());
        assert!(v["re"].is_array());
        let back: KernelFile = from_json_str(&text).unwrap();
        assert_eq!(back, file);
    }
}
