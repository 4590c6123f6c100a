//! Measurement filter function and the lobe-aware quadrature of the
//! measurement-modified decay rate
//!
//! ```text
//! γ_eff(τ) = 2π ∫₀^∞ G(ω) F(ω, τ) dω,   F(ω, τ) = (τ/2π) sinc²[(ω − Δ)τ/2]
//! ```
//!
//! together with its split into the free rate γ₀, the main-lobe correction
//! γ̃₁ and the minor-lobe tails γ₁^±.
//!
//! The sinc² factor vanishes at Δ ± 2πk/τ. Integration proceeds lobe by
//! lobe between consecutive zeros, which keeps every panel free of interior
//! oscillation; the far upper tail is closed with the mean-value replacement
//! sin² → 1/2.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZenoError};
use crate::estimate::{DecayEstimate, EstimateWarning, Method};
use crate::quad::{integrate, QuadResult, Tolerance};
use crate::special::upper_incomplete_gamma;
use crate::spectra::{SpectrumModel, SystemConfig};

/// Below this |(ω − Δ)τ| the sinc² factor is evaluated by its Taylor series.
const SINC_SERIES_CUTOFF: f64 = 1e-4;

/// Number of consecutive negligible lobes required before the upper lobe sum stops.
const NEGLIGIBLE_LOBE_RUN: usize = 3;

/// Minor-lobe expansions with s − 1 below this are flagged: the 1/τ term and
/// the O(τ^{−s}) remainder are no longer separated.
const NEAR_OHMIC_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailPolicy {
    /// Replace sin² by its mean 1/2 beyond the last integrated lobe.
    MeanValue,
    /// Drop everything beyond the last integrated lobe.
    Truncate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSettings {
    pub rel_tol: f64,
    /// Absolute floor, relative to γ₀, below which a lobe envelope counts as negligible.
    pub abs_tol: f64,
    pub max_lobes: usize,
    pub tail_policy: TailPolicy,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self { rel_tol: 1e-8, abs_tol: 1e-12, max_lobes: 10_000, tail_policy: TailPolicy::MeanValue }
    }
}

impl QuadratureSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(ZenoError::InvalidConfig(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        if !(self.abs_tol >= 0.0) {
            return Err(ZenoError::InvalidConfig(format!("abs_tol must be non-negative, got {}", self.abs_tol)));
        }
        if self.max_lobes < 1 {
            return Err(ZenoError::InvalidConfig("max_lobes must be at least 1".into()));
        }
        Ok(())
    }

    /// Tolerance handed to each single-lobe integration.
    fn lobe_tolerance(&self, running: f64) -> Tolerance {
        let rel = (1e-3 * self.rel_tol).max(1e-14);
        Tolerance::new(rel * running.abs(), rel)
    }
}

/// Equidistant projective measurements with interval τ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    pub tau: f64,
}

impl FilterParams {
    pub fn new(tau: f64) -> Result<Self> {
        check_tau(tau)?;
        Ok(Self { tau })
    }

    /// Half-width 2π/τ of the main lobe (and width of every minor lobe).
    pub fn lobe_width(&self) -> f64 {
        2.0 * PI / self.tau
    }

    /// τ ≥ 2π/Δ.
    pub fn is_practical(&self, delta: f64) -> bool {
        self.tau * delta >= 2.0 * PI
    }
}

pub(crate) fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(ZenoError::Domain(format!("measurement interval must be positive and finite, got {tau}")))
    }
}

/// sinc²(y) = (sin y / y)².
fn sinc_squared(y: f64) -> f64 {
    if (2.0 * y).abs() < SINC_SERIES_CUTOFF {
        let y2 = y * y;
        1.0 - y2 / 3.0 + 2.0 * y2 * y2 / 45.0
    } else {
        let s = y.sin() / y;
        s * s
    }
}

/// F(ω, τ) = (τ/2π) sinc²[(ω − Δ)τ/2].
pub fn filter_value(delta: f64, tau: f64, omega: f64) -> f64 {
    tau / (2.0 * PI) * sinc_squared(0.5 * (omega - delta) * tau)
}

/// Fraction of the filter's unit weight carried by the main lobe
/// [Δ − 2π/τ, Δ + 2π/τ].
pub fn main_lobe_fraction(tau: f64) -> Result<f64> {
    check_tau(tau)?;
    let half = 2.0 * PI / tau;
    let tol = Tolerance::new(0.0, 1e-14);
    // F depends on ω − Δ only; integrate in the offset with Δ = 0
    let left = integrate(|x| filter_value(0.0, tau, x), -half, 0.0, tol);
    let right = integrate(|x| filter_value(0.0, tau, x), 0.0, half, tol);
    Ok(left.value + right.value)
}

struct Accumulator {
    value: f64,
    err: f64,
    converged: bool,
}

impl Accumulator {
    fn add(&mut self, r: QuadResult) {
        self.value += r.value;
        self.err += r.abs_err;
        self.converged &= r.converged;
    }
}

/// (2/τ) ∫ G(ω)/(ω − Δ)² dω over [a, b] (or [a, ∞)): the lobe integral with
/// sin² replaced by its mean value.
fn mean_value_integral(config: &SystemConfig, tau: f64, a: f64, b: Option<f64>, tol: Tolerance) -> QuadResult {
    let delta = config.delta;
    let spectrum = &config.spectrum;
    let r = spectrum.integrate_segmented(
        |w| {
            let x = w - delta;
            spectrum.value(w) / (x * x)
        },
        a,
        b,
        tol,
    );
    QuadResult { value: 2.0 / tau * r.value, abs_err: 2.0 / tau * r.abs_err, converged: r.converged }
}

/// Measurement-modified decay rate by lobe-wise quadrature of G·F.
pub fn gamma_ut(config: &SystemConfig, tau: f64, settings: &QuadratureSettings) -> Result<DecayEstimate> {
    check_tau(tau)?;
    settings.validate()?;
    let delta = config.delta;
    let spectrum = &config.spectrum;
    let gamma0 = config.free_decay_rate();
    let width = FilterParams { tau }.lobe_width();
    let integrand = |w: f64| spectrum.value(w) * tau * sinc_squared(0.5 * (w - delta) * tau);

    let mut acc = Accumulator { value: 0.0, err: 0.0, converged: true };
    let main_tol = settings.lobe_tolerance(0.0);
    acc.add(integrate(integrand, (delta - width).max(0.0), delta, main_tol));
    acc.add(integrate(integrand, delta, delta + width, main_tol));

    let mut warnings = Vec::new();
    let mut tail_uncertainty = 0.0;

    // lower side: finitely many lobes down to ω = 0
    let mut hi = delta - width;
    let mut lower_lobes = 0;
    while hi > 0.0 {
        if lower_lobes >= settings.max_lobes {
            match settings.tail_policy {
                TailPolicy::MeanValue => {
                    let r = mean_value_integral(config, tau, 0.0, Some(hi), settings.lobe_tolerance(acc.value));
                    tail_uncertainty += r.value.abs();
                    acc.add(r);
                    warnings.push(EstimateWarning::LobeBudgetExhausted);
                }
                TailPolicy::Truncate => {
                    return Err(ZenoError::NonConverged(format!(
                        "lower lobes below omega = {hi} exceed max_lobes = {}",
                        settings.max_lobes
                    )));
                }
            }
            break;
        }
        let lo = (hi - width).max(0.0);
        acc.add(integrate(integrand, lo, hi, settings.lobe_tolerance(acc.value)));
        hi = lo;
        lower_lobes += 1;
    }

    // upper side: lobes until a run of negligible ones past the spectral peak
    let onset = spectrum.decay_onset();
    let support_end = match spectrum {
        SpectrumModel::Tabulated(t) => Some(t.spline().domain().1),
        _ => None,
    };
    let mut lo = delta + width;
    let mut run = 0;
    let mut finished = false;
    let mut last_lobe: Option<(f64, f64, f64)> = None;
    for _ in 0..settings.max_lobes {
        if support_end.is_some_and(|end| lo >= end) {
            finished = true;
            break;
        }
        let hi = lo + width;
        let r = integrate(integrand, lo, hi, settings.lobe_tolerance(acc.value));
        acc.add(r);
        last_lobe = Some((lo, hi, r.value));

        let x = lo - delta;
        let envelope = 2.0 / tau * spectrum.value(lo) / (x * x) * width;
        let negligible = r.value <= settings.rel_tol * acc.value || envelope <= settings.abs_tol * gamma0;
        run = if lo >= onset && negligible { run + 1 } else { 0 };
        lo = hi;
        if run >= NEGLIGIBLE_LOBE_RUN {
            finished = true;
            break;
        }
    }

    let tail_end = support_end.filter(|&end| end > lo);
    let needs_tail = support_end.is_none_or(|end| lo < end);
    if needs_tail {
        match settings.tail_policy {
            TailPolicy::MeanValue => {
                let r = mean_value_integral(config, tau, lo, tail_end, settings.lobe_tolerance(acc.value));
                // mismatch between exact and mean-value treatment of the last lobe
                let mismatch = match last_lobe {
                    Some((a, b, exact)) if exact > 0.0 => {
                        let mv = mean_value_integral(config, tau, a, Some(b), settings.lobe_tolerance(exact));
                        ((mv.value - exact) / exact).abs()
                    }
                    _ => 1.0,
                };
                tail_uncertainty += mismatch * r.value.abs();
                acc.add(r);
                if !finished {
                    warnings.push(EstimateWarning::LobeBudgetExhausted);
                    if tail_uncertainty > settings.rel_tol * acc.value {
                        return Err(ZenoError::NonConverged(format!(
                            "upper lobe sum not converged after {} lobes (tail uncertainty {tail_uncertainty:e})",
                            settings.max_lobes
                        )));
                    }
                }
            }
            TailPolicy::Truncate if !finished => {
                return Err(ZenoError::NonConverged(format!(
                    "upper lobe sum not converged after {} lobes",
                    settings.max_lobes
                )));
            }
            TailPolicy::Truncate => {}
        }
    }

    let gamma = acc.value;
    let abs_err = acc.err + tail_uncertainty;
    let rel_err = if gamma > 0.0 { abs_err / gamma } else { 0.0 };
    let mut est = DecayEstimate::new(tau, gamma, gamma0, Method::UtQuadrature, rel_err).warn_if_impractical(delta);
    for w in warnings {
        est = est.warn(w);
    }
    Ok(est)
}

/// Main-lobe correction γ̃₁ = (4π/τ²) G″(Δ).
pub fn gamma1_main_lobe(config: &SystemConfig, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok(4.0 * PI / (tau * tau) * config.spectrum.second_derivative(config.delta)?)
}

/// Minor-lobe tails γ₁^± in the mean-value approximation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinorLobes {
    /// γ₁⁺ = (2/τ) ∫_{Δ+2π/τ}^∞ [G(ω) − G(Δ)]/(ω − Δ)² dω
    pub upper: f64,
    /// γ₁⁻ = (2/τ) ∫_0^{Δ−2π/τ} [G(ω) − G(Δ)]/(ω − Δ)² dω
    pub lower: f64,
    pub abs_err: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<EstimateWarning>,
}

pub fn gamma1_minor_lobes(config: &SystemConfig, tau: f64, settings: &QuadratureSettings) -> Result<MinorLobes> {
    check_tau(tau)?;
    settings.validate()?;
    let delta = config.delta;
    let spectrum = &config.spectrum;
    let g_delta = config.g_at_delta();
    let width = 2.0 * PI / tau;
    // tolerance on the raw integrals, which carry an extra factor τ/2
    let floor = 1e-2 * settings.rel_tol * 2.0 * PI * g_delta * 0.5 * tau;
    let tol = Tolerance::new(floor, (1e-2 * settings.rel_tol).max(1e-13));
    let excess = |w: f64| {
        let x = w - delta;
        (spectrum.value(w) - g_delta) / (x * x)
    };

    let up = spectrum.integrate_segmented(excess, delta + width, None, tol);
    let mut warnings = Vec::new();
    let low = if delta - width > 0.0 {
        spectrum.integrate_segmented(excess, 0.0, Some(delta - width), tol)
    } else {
        warnings.push(EstimateWarning::PracticalRegime);
        QuadResult { value: 0.0, abs_err: 0.0, converged: true }
    };
    if !(up.converged && low.converged) {
        return Err(ZenoError::NonConverged(format!(
            "minor-lobe integrals not converged (err {:e})",
            up.abs_err + low.abs_err
        )));
    }
    Ok(MinorLobes {
        upper: 2.0 / tau * up.value,
        lower: 2.0 / tau * low.value,
        abs_err: 2.0 / tau * (up.abs_err + low.abs_err),
        warnings,
    })
}

/// How [`gamma_minor_lobe_corrected`] assembles its estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinorLobeMode {
    /// Closed form for super-Ohmic power laws, numeric composition otherwise.
    #[default]
    Auto,
    /// Incomplete-gamma closed form; power-law spectra with s > 1 only.
    ClosedForm,
    /// γ₀ + γ̃₁ + γ₁⁺ + γ₁⁻ with numerically integrated tails.
    Composite,
}

/// Decay rate including the minor-lobe contributions.
///
/// For a power law with s > 1 the upper tail is dominated by the far wing of
/// the spectrum, which gives
///
/// ```text
/// γ_eff ≈ γ₀ + (2A/τ) Γ(s − 1, 2π/(ω_c τ))
/// ```
///
/// (its τ → ∞ limit is γ₀[1 + AΓ(s−1)/(πG(Δ)τ)]). Other spectra use the
/// numeric composition γ₀ + γ̃₁ + γ₁⁺ + γ₁⁻.
pub fn gamma_minor_lobe_corrected(
    config: &SystemConfig,
    tau: f64,
    settings: &QuadratureSettings,
    mode: MinorLobeMode,
) -> Result<DecayEstimate> {
    check_tau(tau)?;
    let gamma0 = config.free_decay_rate();
    let closed = match (mode, &config.spectrum) {
        (MinorLobeMode::Composite, _) => None,
        (MinorLobeMode::Auto, SpectrumModel::PowerLaw { s, .. }) if *s > 1.0 => Some(()),
        (MinorLobeMode::Auto, _) => None,
        (MinorLobeMode::ClosedForm, SpectrumModel::PowerLaw { s, .. }) if *s > 1.0 => Some(()),
        (MinorLobeMode::ClosedForm, SpectrumModel::PowerLaw { s, .. }) => {
            return Err(ZenoError::Domain(format!("minor-lobe closed form needs s > 1, got s = {s}")))
        }
        (MinorLobeMode::ClosedForm, other) => {
            return Err(ZenoError::ModelMismatch(format!(
                "minor-lobe closed form applies to power-law spectra, not {}",
                other.kind()
            )))
        }
    };

    let est = if closed.is_some() {
        let SpectrumModel::PowerLaw { a, s, omega_c } = config.spectrum else { unreachable!() };
        let tail = upper_incomplete_gamma(s - 1.0, 2.0 * PI / (omega_c * tau))?;
        let est = DecayEstimate::new(tau, gamma0 + 2.0 * a * tail / tau, gamma0, Method::MinorLobeCorrected, 0.0);
        if s - 1.0 < NEAR_OHMIC_MARGIN {
            est.warn(EstimateWarning::NearOhmicExpansion)
        } else {
            est
        }
    } else {
        let main = gamma1_main_lobe(config, tau)?;
        let minor = gamma1_minor_lobes(config, tau, settings)?;
        let gamma = gamma0 + main + minor.upper + minor.lower;
        let rel = if gamma != 0.0 { minor.abs_err / gamma.abs() } else { 0.0 };
        let mut est = DecayEstimate::new(tau, gamma, gamma0, Method::MinorLobeCorrected, rel);
        for w in minor.warnings {
            est = est.warn(w);
        }
        est
    };
    Ok(est.warn_if_impractical(config.delta))
}
