//! Direct solution of the amplitude equation
//!
//! ```text
//! α̇(t) = −∫₀^t K(t − t′) α(t′) dt′,   K(s) = e^{iΔs} Φ(s),   Φ(s) = ∫ G(ω) e^{−iωs} dω
//! ```
//!
//! with α(0) = 1, by the trapezoidal product rule for the memory integral and
//! the trapezoidal rule in time. The unknown α_{n+1} enters the new memory
//! sum only through its own diagonal weight, so each step is solved in
//! closed form.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZenoError};
use crate::estimate::{DecayEstimate, Method};
use crate::filter::check_tau;
use crate::quad::{Tolerance, WGK, XGK};
use crate::spectra::{SpectrumModel, SystemConfig};

/// Steps per characteristic period in the default time step.
const STEPS_PER_UNIT: f64 = 20.0;
/// Largest deviation tolerated between runs at dt and dt/2.
pub const RICHARDSON_LIMIT: f64 = 1e-3;
/// Spectral weight allowed beyond the truncation frequency of the Fourier sum.
const FOURIER_TAIL: f64 = 1e-10;
/// Phase recurrences are re-anchored to a directly computed exponential this often.
const REANCHOR: usize = 256;
/// Cap on doublings of the truncation frequency past the spectral peak.
const TAIL_DOUBLINGS: usize = 6;
/// Dyadic refinements of the first Fourier panel toward ω = 0.
const ORIGIN_LEVELS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum KernelMode {
    /// Φ(t) = πD₀Λ e^{−iω₀t − Λt}: the transform of the Lorentzian extended to
    /// the whole frequency axis.
    AnalyticLorentzian,
    /// Φ(t) by quadrature over the true support [0, ∞).
    NumericFourier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub spectrum: SpectrumModel,
    pub mode: KernelMode,
}

impl KernelSpec {
    pub fn new(spectrum: SpectrumModel, mode: KernelMode) -> Result<Self> {
        if mode == KernelMode::AnalyticLorentzian && !matches!(spectrum, SpectrumModel::Lorentzian { .. }) {
            return Err(ZenoError::ModelMismatch(format!(
                "analytic kernel needs a lorentzian spectrum, got {}",
                spectrum.kind()
            )));
        }
        spectrum.validate()?;
        Ok(Self { spectrum, mode })
    }

    /// Analytic kernel for Lorentzian spectra, numeric transform otherwise.
    pub fn default_for(spectrum: &SpectrumModel) -> Self {
        let mode = match spectrum {
            SpectrumModel::Lorentzian { .. } => KernelMode::AnalyticLorentzian,
            _ => KernelMode::NumericFourier,
        };
        Self { spectrum: spectrum.clone(), mode }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct VolterraSettings {
    /// Time step; `None` picks 1/(20·max(Δ, ω_char)).
    pub dt: Option<f64>,
    /// Horizon for [`evolve_amplitude`].
    pub t_max: Option<f64>,
    /// Kernel evaluation; `None` picks [`KernelSpec::default_for`].
    pub kernel: Option<KernelMode>,
    /// Repeat the run at dt/2 and fail with STEP_TOO_COARSE if the two differ
    /// by more than [`RICHARDSON_LIMIT`].
    pub check_convergence: bool,
}

impl VolterraSettings {
    pub fn validate(&self) -> Result<()> {
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(ZenoError::InvalidConfig(format!("dt must be positive, got {dt}")));
            }
        }
        if let Some(t) = self.t_max {
            if !(t > 0.0 && t.is_finite()) {
                return Err(ZenoError::InvalidConfig(format!("t_max must be positive, got {t}")));
            }
            if self.dt.is_some_and(|dt| t < dt) {
                return Err(ZenoError::InvalidConfig("t_max must be at least dt".into()));
            }
        }
        Ok(())
    }

    fn kernel_spec(&self, spectrum: &SpectrumModel) -> Result<KernelSpec> {
        match self.kernel {
            Some(mode) => KernelSpec::new(spectrum.clone(), mode),
            None => Ok(KernelSpec::default_for(spectrum)),
        }
    }
}

/// Fastest frequency scale of the memory kernel.
fn characteristic_frequency(spectrum: &SpectrumModel) -> f64 {
    match *spectrum {
        SpectrumModel::Lorentzian { omega0, lam, .. } => omega0.abs().max(lam),
        SpectrumModel::Hydrogenlike { omega_c, .. } | SpectrumModel::PowerLaw { omega_c, .. } => omega_c,
        SpectrumModel::Tabulated(ref t) => t.spline().domain().1,
    }
}

/// Default step 1/(20·max(Δ, ω_char)).
pub fn default_dt(config: &SystemConfig) -> f64 {
    1.0 / (STEPS_PER_UNIT * config.delta.max(characteristic_frequency(&config.spectrum)))
}

/// Quadrature nodes ω_j and weights w_j·G(ω_j) for Φ(t) = Σ_j w_jG(ω_j)e^{−iω_jt},
/// plus a closed-form estimate of the part of the integral beyond the last node.
struct FourierNodes {
    omega: Vec<f64>,
    weight: Vec<f64>,
    /// truncation frequency W
    edge: f64,
    /// ∫_W^∞ G dω
    tail_weight: f64,
    /// G(W)
    tail_density: f64,
}

impl FourierNodes {
    /// Panels no wider than π/t_max (half an oscillation at the horizon) or a
    /// quarter of the spectral feature width, up to the frequency beyond which
    /// less than [`FOURIER_TAIL`] of the weight remains, or at most
    /// [`TAIL_DOUBLINGS`] doublings past the spectral peak for slowly
    /// decaying spectra.
    fn build(spectrum: &SpectrumModel, t_max: f64) -> Result<Self> {
        let tol = Tolerance::new(0.0, 1e-10);
        let (upper, tail_weight) = match spectrum {
            SpectrumModel::Tabulated(t) => (t.spline().domain().1, 0.0),
            _ => {
                let total = spectrum.integrate_segmented(|w| spectrum.value(w), 0.0, None, tol).value;
                let mut w = 2.0 * spectrum.decay_onset().max(*spectrum.breakpoints().last().unwrap_or(&1.0));
                let mut doublings = 0;
                loop {
                    let tail = spectrum.integrate_segmented(|x| spectrum.value(x), w, None, tol);
                    if !tail.converged {
                        return Err(ZenoError::NonConverged(format!("spectral tail beyond omega = {w}")));
                    }
                    if tail.value <= FOURIER_TAIL * total || doublings == TAIL_DOUBLINGS {
                        break (w, tail.value);
                    }
                    w *= 2.0;
                    doublings += 1;
                }
            }
        };
        let panel = (PI / t_max).min(0.25 * spectrum.feature_width());

        let mut edges = vec![0.0];
        edges.extend(spectrum.breakpoints().into_iter().filter(|&p| p > 0.0 && p < upper));
        edges.push(upper);
        let mut cuts = Vec::new();
        for seg in edges.windows(2) {
            let n = ((seg[1] - seg[0]) / panel).ceil().max(1.0) as usize;
            let width = (seg[1] - seg[0]) / n as f64;
            cuts.extend((0..n).map(|i| seg[0] + i as f64 * width));
        }
        cuts.push(upper);
        // resolve possible power-law behavior at the origin
        let first = cuts[1];
        let mut origin: Vec<f64> = (0..ORIGIN_LEVELS).map(|k| first / 2f64.powi((ORIGIN_LEVELS - k) as i32)).collect();
        origin.insert(0, 0.0);
        cuts.splice(0..1, origin);

        let mut nodes = FourierNodes {
            omega: Vec::new(),
            weight: Vec::new(),
            edge: upper,
            tail_weight,
            tail_density: spectrum.value(upper),
        };
        for p in cuts.windows(2) {
            let (c, h) = (0.5 * (p[0] + p[1]), 0.5 * (p[1] - p[0]));
            for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).enumerate() {
                let pts: &[f64] = if j == XGK.len() - 1 { &[0.0] } else { &[-x, x] };
                for s in pts {
                    let omega = c + s * h;
                    let g = spectrum.value(omega);
                    if g != 0.0 {
                        nodes.omega.push(omega);
                        nodes.weight.push(w * h * g);
                    }
                }
            }
        }
        Ok(nodes)
    }

    /// ∫_W^∞ G e^{−iωt} dω ≈ T e^{−iWt}/(1 + itT/G(W)): exact weight T at
    /// t = 0 and the leading integration-by-parts term G(W)e^{−iWt}/(it) for
    /// large t.
    fn tail(&self, t: f64) -> Complex64 {
        if self.tail_weight == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let ratio = self.tail_weight / self.tail_density;
        self.tail_weight * Complex64::from_polar(1.0, -self.edge * t) / Complex64::new(1.0, t * ratio)
    }

    fn at(&self, t: f64) -> Complex64 {
        let body: Complex64 =
            self.omega.iter().zip(&self.weight).map(|(&w, &g)| g * Complex64::from_polar(1.0, -w * t)).sum();
        body + self.tail(t)
    }

    /// Φ(k·h) for k = 0..=n.
    fn on_grid(&self, h: f64, n: usize) -> Vec<Complex64> {
        let mut phi: Vec<Complex64> = (0..=n).map(|k| self.tail(k as f64 * h)).collect();
        for (&w, &g) in self.omega.iter().zip(&self.weight) {
            let step = Complex64::from_polar(1.0, -w * h);
            let mut phase = Complex64::new(1.0, 0.0);
            for (k, slot) in phi.iter_mut().enumerate() {
                if k % REANCHOR == 0 {
                    phase = Complex64::from_polar(1.0, -w * h * k as f64);
                }
                *slot += g * phase;
                phase *= step;
            }
        }
        phi
    }
}

fn lorentzian_phi(spectrum: &SpectrumModel, t: f64) -> Complex64 {
    let SpectrumModel::Lorentzian { d0, omega0, lam } = *spectrum else { unreachable!() };
    PI * d0 * lam * Complex64::new(-lam * t, -omega0 * t).exp()
}

/// Bath correlation function Φ(t) for t ≥ 0.
pub fn kernel(spec: &KernelSpec, t: f64) -> Result<Complex64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(ZenoError::Domain(format!("kernel needs t >= 0, got {t}")));
    }
    match spec.mode {
        KernelMode::AnalyticLorentzian => Ok(lorentzian_phi(&spec.spectrum, t)),
        KernelMode::NumericFourier => Ok(FourierNodes::build(&spec.spectrum, t.max(1e-300))?.at(t)),
    }
}

/// K(kh) = e^{iΔkh}Φ(kh) for k = 0..=n.
fn kernel_grid(spec: &KernelSpec, delta: f64, h: f64, n: usize) -> Result<Vec<Complex64>> {
    let phi = match spec.mode {
        KernelMode::AnalyticLorentzian => (0..=n).map(|k| lorentzian_phi(&spec.spectrum, k as f64 * h)).collect(),
        KernelMode::NumericFourier => FourierNodes::build(&spec.spectrum, n as f64 * h)?.on_grid(h, n),
    };
    Ok(phi.into_iter().enumerate().map(|(k, p)| p * Complex64::from_polar(1.0, delta * h * k as f64)).collect())
}

/// α on the grid t_k = k·dt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeSeries {
    pub dt: f64,
    pub alpha: Vec<Complex64>,
}

impl AmplitudeSeries {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.alpha.len()).map(move |k| k as f64 * self.dt)
    }

    pub fn last(&self) -> Complex64 {
        *self.alpha.last().expect("series holds at least α(0)")
    }
}

/// n trapezoidal steps of size h.
fn march(k: &[Complex64], h: f64, n: usize) -> Vec<Complex64> {
    let mut alpha = Vec::with_capacity(n + 1);
    alpha.push(Complex64::new(1.0, 0.0));
    let diag = 1.0 + 0.25 * h * h * k[0];
    // memory integral at the current time
    let mut memory = Complex64::new(0.0, 0.0);
    for step in 0..n {
        let m = step + 1;
        // memory at t_m without the unknown diagonal term
        let mut partial = 0.5 * k[m] * alpha[0];
        for j in 1..m {
            partial += k[m - j] * alpha[j];
        }
        partial *= h;
        let next = (alpha[step] - 0.5 * h * memory - 0.5 * h * partial) / diag;
        memory = partial + 0.5 * h * k[0] * next;
        alpha.push(next);
    }
    alpha
}

fn run(config: &SystemConfig, horizon: f64, settings: &VolterraSettings) -> Result<AmplitudeSeries> {
    settings.validate()?;
    config.validate()?;
    let spec = settings.kernel_spec(&config.spectrum)?;
    let dt = settings.dt.unwrap_or_else(|| default_dt(config));
    let n = (horizon / dt).ceil().max(1.0) as usize;
    let h = horizon / n as f64;
    let k = kernel_grid(&spec, config.delta, h, n)?;
    let alpha = march(&k, h, n);

    if settings.check_convergence {
        let fine_k = kernel_grid(&spec, config.delta, 0.5 * h, 2 * n)?;
        let fine = march(&fine_k, 0.5 * h, 2 * n);
        let deviation = alpha.iter().zip(fine.iter().step_by(2)).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if deviation > RICHARDSON_LIMIT {
            return Err(ZenoError::StepTooCoarse { deviation, limit: RICHARDSON_LIMIT });
        }
    }
    Ok(AmplitudeSeries { dt: h, alpha })
}

/// α(t) on [0, t_max]. The step is shrunk slightly if needed so that the
/// grid ends exactly at t_max.
pub fn evolve_amplitude(config: &SystemConfig, settings: &VolterraSettings) -> Result<AmplitudeSeries> {
    let t_max = settings.t_max.ok_or_else(|| ZenoError::InvalidConfig("t_max is required".into()))?;
    run(config, t_max, settings)
}

/// Rate under repeated measurement from the survival after one interval,
/// γ(τ) = −(1/τ) ln|α(τ)|². Only [0, τ] is evolved; `t_max` is ignored.
pub fn gamma_from_survival(config: &SystemConfig, tau: f64, settings: &VolterraSettings) -> Result<DecayEstimate> {
    check_tau(tau)?;
    let series = run(config, tau, settings)?;
    let d = series.last() - 1.0;
    let modulus = series.last().norm();
    if !(modulus >= 1e-300) {
        return Err(ZenoError::AmplitudeUnderflow { magnitude: modulus });
    }
    let gamma = -(2.0 * d.re + d.norm_sqr()).ln_1p() / tau;
    Ok(DecayEstimate::new(tau, gamma, config.free_decay_rate(), Method::VolterraOracle, 0.0)
        .warn_if_impractical(config.delta))
}
