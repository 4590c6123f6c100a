//! Spectral density models G(ω) and the scalar quantities derived from a
//! spectrum alone: free decay rate, Zeno time, Lamb-shifted level spacing.
//!
//! All frequencies share one dimensionless reference unit (ħ = 1); rates use
//! the same unit and times its inverse.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZenoError};
use crate::quad::{integrate, integrate_to_infinity, QuadResult, Tolerance};
use crate::special::gamma_unchecked;
use crate::spline::CubicSpline;

/// Relative tolerance for spectrum-only integrals (Zeno time, Lamb shift, moments).
const SPECTRAL_REL_TOL: f64 = 1e-10;

/// Spectral density of the environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SpectrumModel {
    /// D₀Λ² / ((ω − ω₀)² + Λ²)
    Lorentzian { d0: f64, omega0: f64, lam: f64 },
    /// ηω / (1 + (ω/ω_c)²)⁴
    Hydrogenlike { eta: f64, omega_c: f64 },
    /// A ω_c^{1−s} ω^s e^{−ω/ω_c}
    PowerLaw { a: f64, s: f64, omega_c: f64 },
    /// Cubic-spline interpolation of sampled (ω, G) pairs, zero outside the grid.
    Tabulated(TabulatedSpectrum),
}

/// Sampled spectrum. Construct through [`TabulatedSpectrum::new`] or serde,
/// both of which validate the grid and build the spline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TabulatedPoints", into = "TabulatedPoints")]
pub struct TabulatedSpectrum {
    spline: CubicSpline,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TabulatedPoints {
    points: Vec<[f64; 2]>,
}

impl TryFrom<TabulatedPoints> for TabulatedSpectrum {
    type Error = ZenoError;
    fn try_from(raw: TabulatedPoints) -> Result<Self> {
        TabulatedSpectrum::new(raw.points.iter().map(|p| (p[0], p[1])).collect())
    }
}

impl From<TabulatedSpectrum> for TabulatedPoints {
    fn from(t: TabulatedSpectrum) -> Self {
        TabulatedPoints { points: t.points().map(|(w, g)| [w, g]).collect() }
    }
}

impl TabulatedSpectrum {
    /// Samples per knot interval used to check non-negativity of the interpolant.
    const POSITIVITY_SAMPLES: usize = 16;

    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        let (x, y): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
        if x.first().is_some_and(|&w| w < 0.0) {
            return Err(ZenoError::InvalidConfig("tabulated spectrum starts below omega = 0".into()));
        }
        if y.iter().any(|&g| g < 0.0) {
            return Err(ZenoError::InvalidConfig("tabulated spectrum has negative values".into()));
        }
        let spline = CubicSpline::new(x, y)?;
        for w in spline.knots().windows(2) {
            for k in 1..Self::POSITIVITY_SAMPLES {
                let t = w[0] + (w[1] - w[0]) * k as f64 / Self::POSITIVITY_SAMPLES as f64;
                let g = spline.eval(t).unwrap_or(0.0);
                if g < 0.0 {
                    return Err(ZenoError::InvalidConfig(format!(
                        "spline interpolant of tabulated spectrum goes negative near omega = {t}"
                    )));
                }
            }
        }
        Ok(Self { spline })
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.spline.knots().iter().copied().zip(self.spline.values().iter().copied())
    }

    pub fn spline(&self) -> &CubicSpline {
        &self.spline
    }

    fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.points().map(|(w, g)| (w, c * g)).collect())
    }
}

/// Transition frequency Δ plus the environment spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub delta: f64,
    pub spectrum: SpectrumModel,
}

impl SystemConfig {
    pub fn new(delta: f64, spectrum: SpectrumModel) -> Result<Self> {
        let config = Self { delta, spectrum };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(ZenoError::InvalidConfig(format!("delta must be positive, got {}", self.delta)));
        }
        self.spectrum.validate()
    }

    /// G(Δ).
    pub fn g_at_delta(&self) -> f64 {
        self.spectrum.value(self.delta)
    }

    /// Fermi's-golden-rule rate γ₀ = 2πG(Δ).
    pub fn free_decay_rate(&self) -> f64 {
        2.0 * PI * self.g_at_delta()
    }

    /// Detuning Ω = ω₀ − Δ for Lorentzian spectra.
    pub fn detuning(&self) -> Option<f64> {
        match self.spectrum {
            SpectrumModel::Lorentzian { omega0, .. } => Some(omega0 - self.delta),
            _ => None,
        }
    }

    /// Level spacing corrected by the counter-rotating terms,
    /// Δ₁ = Δ + ∫₀^∞ G(ω)/(ω + Δ) dω.
    pub fn lamb_shift(&self) -> Result<f64> {
        let delta = self.delta;
        let shift = self.spectrum.weighted_integral(|w| 1.0 / (w + delta), "lamb shift")?;
        Ok(delta + shift)
    }

    /// Same system with the level spacing replaced by its Lamb-shifted value.
    pub fn with_lamb_shift(&self) -> Result<Self> {
        Ok(Self { delta: self.lamb_shift()?, spectrum: self.spectrum.clone() })
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ZenoError::InvalidConfig(format!("{name} must be positive and finite, got {v}")))
    }
}

impl SpectrumModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SpectrumModel::Lorentzian { d0, omega0, lam } => {
                positive("d0", d0)?;
                positive("omega0", omega0)?;
                positive("lam", lam)
            }
            SpectrumModel::Hydrogenlike { eta, omega_c } => {
                positive("eta", eta)?;
                positive("omega_c", omega_c)
            }
            SpectrumModel::PowerLaw { a, s, omega_c } => {
                positive("a", a)?;
                positive("s", s)?;
                positive("omega_c", omega_c)
            }
            // validated on construction
            SpectrumModel::Tabulated(_) => Ok(()),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SpectrumModel::Lorentzian { .. } => "lorentzian",
            SpectrumModel::Hydrogenlike { .. } => "hydrogenlike",
            SpectrumModel::PowerLaw { .. } => "power_law",
            SpectrumModel::Tabulated(_) => "tabulated",
        }
    }

    /// G(ω), with a domain error for ω < 0.
    pub fn evaluate(&self, omega: f64) -> Result<f64> {
        if !(omega >= 0.0) {
            return Err(ZenoError::Domain(format!("spectrum evaluated at omega = {omega} < 0")));
        }
        Ok(self.value(omega))
    }

    /// Unchecked G(ω); callers guarantee ω ≥ 0. Returns 0 for ω < 0.
    pub(crate) fn value(&self, omega: f64) -> f64 {
        if omega < 0.0 {
            return 0.0;
        }
        match *self {
            SpectrumModel::Lorentzian { d0, omega0, lam } => {
                let x = omega - omega0;
                d0 * (lam * lam / (x * x + lam * lam))
            }
            SpectrumModel::Hydrogenlike { eta, omega_c } => {
                let u = omega / omega_c;
                let v = 1.0 + u * u;
                let v2 = v * v;
                eta * (omega / (v2 * v2))
            }
            SpectrumModel::PowerLaw { a, s, omega_c } => {
                if omega == 0.0 {
                    return 0.0;
                }
                a * (omega_c * (omega / omega_c).powf(s) * (-omega / omega_c).exp())
            }
            SpectrumModel::Tabulated(ref t) => t.spline.eval(omega).unwrap_or(0.0),
        }
    }

    /// Analytic G″(ω) for ω > 0 (spline curvature for tabulated data).
    pub fn second_derivative(&self, omega: f64) -> Result<f64> {
        if !(omega > 0.0) {
            return Err(ZenoError::Domain(format!("second derivative needs omega > 0, got {omega}")));
        }
        Ok(match *self {
            SpectrumModel::Lorentzian { d0, omega0, lam } => {
                let x = omega - omega0;
                let den = x * x + lam * lam;
                d0 * (2.0 * lam * lam * (3.0 * x * x - lam * lam) / (den * den * den))
            }
            SpectrumModel::Hydrogenlike { eta, omega_c } => {
                // 8ηω ω_c⁸ (7ω² − 3ω_c²) / (ω² + ω_c²)⁶, written in u = ω/ω_c
                let u = omega / omega_c;
                let v = 1.0 + u * u;
                let v3 = v * v * v;
                eta * (8.0 * u * (7.0 * u * u - 3.0) / (omega_c * v3 * v3))
            }
            SpectrumModel::PowerLaw { a, s, omega_c } => {
                let u = omega / omega_c;
                let shape = s * (s - 1.0) / (u * u) - 2.0 * s / u + 1.0;
                a * (u.powf(s) * (-u).exp() * shape / omega_c)
            }
            SpectrumModel::Tabulated(ref t) => t.spline.second_derivative(omega).unwrap_or(0.0),
        })
    }

    /// Large-cutoff form s(s−1)Aω_c^{1−s}ω^{s−2} of the power-law curvature.
    /// `None` for other models.
    pub fn large_cutoff_second_derivative(&self, omega: f64) -> Option<f64> {
        match *self {
            SpectrumModel::PowerLaw { a, s, omega_c } => {
                let u = omega / omega_c;
                Some(a * (s * (s - 1.0) * u.powf(s - 2.0) / omega_c))
            }
            _ => None,
        }
    }

    /// Cutoff frequency ω_c, where the model has one.
    pub fn cutoff(&self) -> Option<f64> {
        match *self {
            SpectrumModel::Hydrogenlike { omega_c, .. } | SpectrumModel::PowerLaw { omega_c, .. } => Some(omega_c),
            _ => None,
        }
    }

    /// Frequency beyond which G is non-increasing (zero for tabulated data past the grid).
    pub fn decay_onset(&self) -> f64 {
        match *self {
            SpectrumModel::Lorentzian { omega0, lam, .. } => omega0 + lam,
            SpectrumModel::Hydrogenlike { omega_c, .. } => omega_c,
            SpectrumModel::PowerLaw { s, omega_c, .. } => s.max(1.0) * omega_c,
            SpectrumModel::Tabulated(ref t) => t.spline.domain().1,
        }
    }

    /// Smallest frequency scale over which G changes appreciably.
    pub fn feature_width(&self) -> f64 {
        match *self {
            SpectrumModel::Lorentzian { lam, .. } => lam,
            SpectrumModel::Hydrogenlike { omega_c, .. } => omega_c / 3.0,
            SpectrumModel::PowerLaw { s, omega_c, .. } => omega_c * s.min(1.0),
            SpectrumModel::Tabulated(ref t) => {
                t.spline.knots().windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Points where the spectrum changes character, used to split quadrature domains.
    pub(crate) fn breakpoints(&self) -> Vec<f64> {
        let mut pts = match *self {
            SpectrumModel::Lorentzian { omega0, lam, .. } => vec![
                omega0 - 30.0 * lam,
                omega0 - 3.0 * lam,
                omega0 - lam,
                omega0,
                omega0 + lam,
                omega0 + 3.0 * lam,
                omega0 + 30.0 * lam,
            ],
            SpectrumModel::Hydrogenlike { omega_c, .. } => {
                vec![omega_c / 7f64.sqrt(), omega_c, 3.0 * omega_c]
            }
            SpectrumModel::PowerLaw { s, omega_c, .. } => {
                vec![0.1 * omega_c, s * omega_c, (s + 5.0) * omega_c]
            }
            SpectrumModel::Tabulated(ref t) => t.spline.knots().to_vec(),
        };
        pts.retain(|p| *p > 0.0);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// ∫₀^∞ w(ω) G(ω) dω for a smooth, non-negative weight. Fails with a
    /// divergence error for truncated tabulated data and when the numeric
    /// integral does not converge.
    pub fn weighted_integral<W: Fn(f64) -> f64>(&self, weight: W, what: &str) -> Result<f64> {
        if let SpectrumModel::Tabulated(t) = self {
            let last = t.spline.values().last().copied().unwrap_or(0.0);
            if last > 0.0 {
                return Err(ZenoError::Divergence(format!(
                    "{what}: tabulated spectrum is truncated with G = {last} at its last point"
                )));
            }
        }
        let integrand = |w: f64| weight(w) * self.value(w);
        let tol = Tolerance::new(0.0, SPECTRAL_REL_TOL * 1e-2);
        let upper = match self {
            SpectrumModel::Tabulated(t) => Some(t.spline.domain().1),
            _ => None,
        };
        let r = self.integrate_segmented(integrand, 0.0, upper, tol);
        let (total, err, ok) = (r.value, r.abs_err, r.converged);
        if !total.is_finite() || (!ok && err > SPECTRAL_REL_TOL * total.abs()) {
            return Err(ZenoError::Divergence(format!("{what}: integral did not converge (err {err:e})")));
        }
        Ok(total)
    }

    /// Integrates `f` over [a, b] (or [a, ∞) when `b` is `None`), splitting the
    /// domain at the spectrum's breakpoints.
    pub(crate) fn integrate_segmented<F: Fn(f64) -> f64>(
        &self,
        f: F,
        a: f64,
        b: Option<f64>,
        tol: Tolerance,
    ) -> QuadResult {
        let mut edges = vec![a];
        edges.extend(self.breakpoints().into_iter().filter(|&p| p > a && b.is_none_or(|b| p < b)));
        if let Some(b) = b {
            edges.push(b);
        }
        let mut out = QuadResult { value: 0.0, abs_err: 0.0, converged: true };
        let mut add = |r: QuadResult| {
            out.value += r.value;
            out.abs_err += r.abs_err;
            out.converged &= r.converged;
        };
        for w in edges.windows(2) {
            add(integrate(&f, w[0], w[1], tol));
        }
        if b.is_none() {
            let last = *edges.last().unwrap_or(&a);
            let scale = last.max(self.feature_width());
            add(integrate_to_infinity(&f, last, scale, tol));
        }
        out
    }

    /// ∫₀^∞ G(ω) dω, analytic where a closed form exists.
    pub fn total_weight(&self) -> Result<f64> {
        match *self {
            SpectrumModel::Lorentzian { d0, omega0, lam } => Ok(d0 * (lam * (0.5 * PI + (omega0 / lam).atan()))),
            SpectrumModel::Hydrogenlike { eta, omega_c } => Ok(eta * (omega_c * omega_c / 6.0)),
            SpectrumModel::PowerLaw { a, s, omega_c } => Ok(a * (omega_c * omega_c * gamma_unchecked(s + 1.0))),
            SpectrumModel::Tabulated(_) => self.weighted_integral(|_| 1.0, "zeno time"),
        }
    }

    /// Zeno time τ_Z = (∫₀^∞ G dω)^{−1/2}.
    pub fn zeno_time(&self) -> Result<f64> {
        let w = self.total_weight()?;
        if !(w > 0.0) {
            return Err(ZenoError::Divergence("zero total spectral weight: Zeno time is infinite".into()));
        }
        Ok(1.0 / w.sqrt())
    }

    /// Short-interval reference rate τ/τ_Z².
    pub fn linear_decay_rate(&self, tau: f64) -> Result<f64> {
        if !(tau > 0.0) {
            return Err(ZenoError::Domain(format!("tau must be positive, got {tau}")));
        }
        Ok(tau * self.total_weight()?)
    }

    /// Center of gravity ∫ωG/∫G. Lorentzian spectra have no finite first
    /// moment on [0, ∞); their spectral center ω₀ is returned instead.
    pub fn centroid(&self) -> Result<f64> {
        match *self {
            SpectrumModel::Lorentzian { omega0, .. } => Ok(omega0),
            SpectrumModel::Hydrogenlike { omega_c, .. } => Ok(3.0 * PI * omega_c / 16.0),
            SpectrumModel::PowerLaw { s, omega_c, .. } => Ok((s + 1.0) * omega_c),
            SpectrumModel::Tabulated(ref t) => {
                let (lo, hi) = t.spline.domain();
                let tol = Tolerance::new(0.0, SPECTRAL_REL_TOL);
                let mut first = 0.0;
                for w in t.spline.knots().windows(2) {
                    first += integrate(|x| x * self.value(x), w[0], w[1], tol).value;
                }
                let zeroth = t.spline.integral();
                if !(zeroth > 0.0) {
                    return Err(ZenoError::Divergence("tabulated spectrum has zero weight".into()));
                }
                Ok((first / zeroth).clamp(lo, hi))
            }
        }
    }

    /// Coupling parameter (D₀, η, A, or the overall table scale) multiplied by `c`.
    pub fn with_coupling_scaled(&self, c: f64) -> Result<Self> {
        positive("coupling scale", c)?;
        Ok(match *self {
            SpectrumModel::Lorentzian { d0, omega0, lam } => SpectrumModel::Lorentzian { d0: c * d0, omega0, lam },
            SpectrumModel::Hydrogenlike { eta, omega_c } => SpectrumModel::Hydrogenlike { eta: c * eta, omega_c },
            SpectrumModel::PowerLaw { a, s, omega_c } => SpectrumModel::PowerLaw { a: c * a, s, omega_c },
            SpectrumModel::Tabulated(ref t) => SpectrumModel::Tabulated(t.scaled(c)?),
        })
    }

    /// Same model with one named parameter replaced (field names as in JSON).
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<Self> {
        let mut out = self.clone();
        let slot = match (&mut out, name) {
            (SpectrumModel::Lorentzian { d0, .. }, "d0") => d0,
            (SpectrumModel::Lorentzian { omega0, .. }, "omega0") => omega0,
            (SpectrumModel::Lorentzian { lam, .. }, "lam") => lam,
            (SpectrumModel::Hydrogenlike { eta, .. }, "eta") => eta,
            (SpectrumModel::Hydrogenlike { omega_c, .. }, "omega_c") => omega_c,
            (SpectrumModel::PowerLaw { a, .. }, "a") => a,
            (SpectrumModel::PowerLaw { s, .. }, "s") => s,
            (SpectrumModel::PowerLaw { omega_c, .. }, "omega_c") => omega_c,
            _ => return Err(ZenoError::InvalidConfig(format!("{} spectrum has no parameter '{name}'", self.kind()))),
        };
        *slot = value;
        out.validate()?;
        Ok(out)
    }
}
