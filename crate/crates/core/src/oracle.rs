//! Independent multimode Gaussian-state model.
//!
//! The discretized kernel `M = L √(Δk Δk′)` couples signal modes `a_i` and
//! idler modes `b_j` through the Bogoliubov transform
//!
//! ```text
//! [a_out ; b†_out] = exp([[0, gM], [gMᴴ, 0]]) [a_in ; b†_in]
//!                  = [[A, B], [C, D]] [a_in ; b†_in]
//! ```
//!
//! computed by a scaled Taylor series, with no reference to the Schmidt
//! basis. Expectations are evaluated by writing every output operator as a
//! mean plus a linear combination of input vacuum operators.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};
use crate::grid::ModeGrid;
use crate::jsa::JointAmplitude;
use crate::signals::{InterferometerSettings, SeedProfile};

/// Largest grid the oracle accepts on either axis.
pub const MAX_MODES: usize = 16;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

fn norm1(m: &DMatrix<C64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|x| x.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
pub fn expm(k: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let n = k.nrows();
    if k.ncols() != n {
        return invalid("expm needs a square matrix");
    }
    let norm = norm1(k);
    if !norm.is_finite() {
        return Err(Error::Numeric(format!("expm: generator norm is {norm}")));
    }
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let x = k * C64::new(0.5f64.powi(s), 0.0);
    let mut sum = DMatrix::<C64>::identity(n, n);
    let mut term = DMatrix::<C64>::identity(n, n);
    let mut converged = false;
    for m in 1..=60 {
        term = &term * &x * C64::new(1.0 / m as f64, 0.0);
        sum += &term;
        if norm1(&term) < 1e-17 * norm1(&sum) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numeric(format!("expm: Taylor series did not converge (‖K‖₁ = {norm:e})")));
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    if sum.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::Numeric(format!("expm: result overflowed (‖K‖₁ = {norm:e})")));
    }
    Ok(sum)
}

/// Output-mode transform `[[A, B], [C, D]]` for one kernel and gain.
#[derive(Clone, Debug)]
pub struct GaussianTransform {
    grid_s: ModeGrid,
    grid_i: ModeGrid,
    a: DMatrix<C64>,
    b: DMatrix<C64>,
    c: DMatrix<C64>,
    d: DMatrix<C64>,
}

impl GaussianTransform {
    pub fn grid_s(&self) -> &ModeGrid {
        &self.grid_s
    }

    pub fn grid_i(&self) -> &ModeGrid {
        &self.grid_i
    }

    pub fn n_modes(&self) -> usize {
        self.grid_s.len() + self.grid_i.len()
    }

    /// `‖A Aᴴ − B Bᴴ − 1‖_max`.
    pub fn symplectic_defect(&self) -> f64 {
        let n = self.grid_s.len();
        let lhs = &self.a * self.a.adjoint() - &self.b * self.b.adjoint() - DMatrix::<C64>::identity(n, n);
        lhs.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    fn check_symplectic(&self) -> Result<()> {
        let scale = self.a.iter().map(|x| x.norm_sqr()).sum::<f64>().max(1.0);
        let defect = self.symplectic_defect();
        if defect <= 1e-10 * scale {
            Ok(())
        } else {
            Err(Error::Numeric(format!("transform violates the commutation relations (defect {defect:e})")))
        }
    }
}

/// Build the transform for kernel `J` at gain `g`.
pub fn build_transform(j: &JointAmplitude, gain: f64) -> Result<GaussianTransform> {
    if !(gain.is_finite() && gain >= 0.0) {
        return invalid(format!("gain must be finite and ≥ 0, got {gain}"));
    }
    let gs = *j.grid_s();
    let gi = *j.grid_i();
    let (ns, ni) = (gs.len(), gi.len());
    if ns > MAX_MODES || ni > MAX_MODES {
        return invalid(format!("oracle supports at most {MAX_MODES} modes per arm, got {ns}×{ni}"));
    }
    let w = (gs.spacing() * gi.spacing()).sqrt() * gain;
    let mut k = DMatrix::<C64>::zeros(ns + ni, ns + ni);
    for r in 0..ns {
        for c in 0..ni {
            let m = j.kernel().get(r, c) * w;
            k[(r, ns + c)] = m;
            k[(ns + c, r)] = m.conj();
        }
    }
    let t = expm(&k)?;
    let out = GaussianTransform {
        grid_s: gs,
        grid_i: gi,
        a: t.view((0, 0), (ns, ns)).into_owned(),
        b: t.view((0, ns), (ns, ni)).into_owned(),
        c: t.view((ns, 0), (ni, ns)).into_owned(),
        d: t.view((ns, ns), (ni, ni)).into_owned(),
    };
    out.check_symplectic()?;
    Ok(out)
}

/// Displacement vector `[⟨a_in⟩ ; ⟨b_in⟩]` for a seed delayed by `q_σ`:
/// `β_j = α(k_j) e^{-ik_j q_σ} √Δk`.
pub fn seed_displacement(t: &GaussianTransform, seed: &SeedProfile, q_sigma: f64) -> Result<Vec<C64>> {
    t.grid_i.ensure_same(seed.grid(), "seed vs idler grid")?;
    let root = t.grid_i.spacing().sqrt();
    let mut out = vec![ZERO; t.grid_s.len()];
    out.extend(seed.delayed(q_sigma).alpha().values().iter().map(|a| a * root));
    Ok(out)
}

/// An operator written as `mean + Σ ann_j x_j + Σ cre_j x_j†` over the input
/// vacuum modes `x = (a_1..a_Ns, b_1..b_Ni)`.
struct LinearOp {
    mean: C64,
    ann: Vec<C64>,
    cre: Vec<C64>,
}

/// Vacuum expectation `⟨X Y⟩`; only `x_j x_j†` pairs survive.
fn expect_product(x: &LinearOp, y: &LinearOp) -> C64 {
    x.mean * y.mean + x.ann.iter().zip(&y.cre).map(|(p, q)| p * q).sum::<C64>()
}

/// Output moments for one transform and seed displacement.
pub struct OracleExpectations {
    grid_s: ModeGrid,
    a_out: Vec<LinearOp>,
    a_out_dag: Vec<LinearOp>,
    b_out: Vec<LinearOp>,
}

impl OracleExpectations {
    /// `⟨a_i† a_i⟩ / Δk` on the signal grid.
    pub fn signal_spectrum(&self) -> Vec<f64> {
        let d = self.grid_s.spacing();
        self.a_out_dag.iter().zip(&self.a_out).map(|(x, y)| expect_product(x, y).re / d).collect()
    }

    /// `Σ_i ⟨a_i† a_i⟩`.
    pub fn n_total_s(&self) -> f64 {
        self.a_out_dag.iter().zip(&self.a_out).map(|(x, y)| expect_product(x, y).re).sum()
    }

    /// `⟨a_i⟩ / √Δk`.
    pub fn signal_mean(&self) -> Vec<C64> {
        let r = self.grid_s.spacing().sqrt();
        self.a_out.iter().map(|x| x.mean / r).collect()
    }

    /// `⟨N_A − N_B⟩ = 2 Re Σ_i e^{iθ} e^{-ik_i q_η} ⟨a_i† b_i⟩`. The seed delay
    /// `q_σ` is part of the displacement and is not read here.
    pub fn n_diff_interf(&self, settings: &InterferometerSettings) -> Result<f64> {
        if self.b_out.len() != self.a_out.len() {
            return invalid("interferometer needs equal signal and idler grids");
        }
        let phase = C64::from_polar(1.0, settings.theta);
        let sum: C64 = self
            .a_out_dag
            .iter()
            .zip(&self.b_out)
            .zip(self.grid_s.points())
            .map(|((x, y), k)| expect_product(x, y) * C64::from_polar(1.0, -k * settings.q_eta))
            .sum();
        Ok(2.0 * (phase * sum).re)
    }
}

/// Moments of the output state for input displacement `[⟨a_in⟩ ; ⟨b_in⟩]`.
/// Only the idler block may be nonzero.
pub fn oracle_expectations(t: &GaussianTransform, displacement: &[C64]) -> Result<OracleExpectations> {
    let (ns, ni) = (t.grid_s.len(), t.grid_i.len());
    if displacement.len() != ns + ni {
        return invalid(format!("displacement must have {} entries, got {}", ns + ni, displacement.len()));
    }
    if displacement[..ns].iter().any(|v| *v != ZERO) {
        return invalid("signal modes must start in vacuum");
    }
    if displacement.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return invalid("displacement must be finite");
    }
    let beta_c: Vec<C64> = displacement[ns..].iter().map(|b| b.conj()).collect();
    let n = ns + ni;
    let mut a_out = Vec::with_capacity(ns);
    let mut a_out_dag = Vec::with_capacity(ns);
    for i in 0..ns {
        let mean: C64 = (0..ni).map(|j| t.b[(i, j)] * beta_c[j]).sum();
        let mut ann = vec![ZERO; n];
        let mut cre = vec![ZERO; n];
        let mut ann_d = vec![ZERO; n];
        let mut cre_d = vec![ZERO; n];
        for j in 0..ns {
            ann[j] = t.a[(i, j)];
            cre_d[j] = t.a[(i, j)].conj();
        }
        for j in 0..ni {
            cre[ns + j] = t.b[(i, j)];
            ann_d[ns + j] = t.b[(i, j)].conj();
        }
        a_out.push(LinearOp { mean, ann, cre });
        a_out_dag.push(LinearOp { mean: mean.conj(), ann: ann_d, cre: cre_d });
    }
    let mut b_out = Vec::with_capacity(ni);
    for i in 0..ni {
        let mean_dag: C64 = (0..ni).map(|j| t.d[(i, j)] * beta_c[j]).sum();
        let mut ann = vec![ZERO; n];
        let mut cre = vec![ZERO; n];
        for j in 0..ns {
            cre[j] = t.c[(i, j)].conj();
        }
        for j in 0..ni {
            ann[ns + j] = t.d[(i, j)].conj();
        }
        b_out.push(LinearOp { mean: mean_dag.conj(), ann, cre });
    }
    Ok(OracleExpectations { grid_s: t.grid_s, a_out, a_out_dag, b_out })
}

/// Interferometric difference signal from the oracle.
pub fn oracle_interferometric(
    t: &GaussianTransform,
    seed: &SeedProfile,
    settings: &InterferometerSettings,
) -> Result<f64> {
    let disp = seed_displacement(t, seed, settings.q_sigma)?;
    oracle_expectations(t, &disp)?.n_diff_interf(settings)
}
