//! Zeno / anti-Zeno classification from the sign of G″(Δ), the asymptotic
//! rate γ₀ + (4π/τ²)G″(Δ), boundary search in a model parameter, and
//! validity diagnostics for the criterion.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZenoError};
use crate::estimate::{DecayEstimate, Method};
use crate::filter::{check_tau, gamma1_main_lobe};
use crate::spectra::SystemConfig;

/// Relative width at which [`boundary_find`] stops bisecting.
pub const BOUNDARY_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Qze,
    Qaze,
    Indeterminate,
}

impl Verdict {
    /// Process exit status used by the command-line front end.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Qze => 10,
            Verdict::Qaze => 11,
            Verdict::Indeterminate => 12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Monotonicity {
    /// G″(Δ) < 0: γ_eff rises toward γ₀ as τ grows.
    IncreasingToGamma0,
    /// G″(Δ) > 0: γ_eff falls toward γ₀ as τ grows.
    DecreasingToGamma0,
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ValidityWarning {
    DeltaFarBelowCutoff,
    DeltaFarBelowCentroid,
    G2NearZero,
    StrongCouplingSuspect,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidityThresholds {
    /// DELTA_FAR_BELOW_CUTOFF below this Δ/ω_c.
    pub min_delta_over_cutoff: f64,
    /// DELTA_FAR_BELOW_CENTROID below this Δ/centroid.
    pub min_delta_over_centroid: f64,
    /// STRONG_COUPLING_SUSPECT above this γ₀/Δ.
    pub max_gamma0_over_delta: f64,
}

impl Default for ValidityThresholds {
    fn default() -> Self {
        Self { min_delta_over_cutoff: 1.0 / 12.0, min_delta_over_centroid: 0.1, max_gamma0_over_delta: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub delta_over_cutoff: Option<f64>,
    pub delta_over_centroid: Option<f64>,
    pub warnings: Vec<ValidityWarning>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZenoClassification {
    pub verdict: Verdict,
    /// G″(Δ)
    pub g2: f64,
    /// Degeneracy tolerance actually applied to `g2`.
    pub g2_eps: f64,
    pub gamma0: f64,
    pub validity: ValidityReport,
}

/// Default degeneracy tolerance 10⁻⁶·G(Δ)/Δ².
pub fn default_g2_eps(config: &SystemConfig) -> f64 {
    1e-6 * config.g_at_delta() / (config.delta * config.delta)
}

/// Tolerance applied on top of `base`: for power laws, the curvature is only
/// meaningful beyond the part contributed by the finite cutoff, measured as
/// the gap between the exact G″(Δ) and its ω_c → ∞ form. An Ohmic bath has a
/// vanishing large-cutoff curvature, so its entire G″(Δ) is cutoff-induced.
fn effective_eps(config: &SystemConfig, g2: f64, base: f64) -> f64 {
    match config.spectrum.large_cutoff_second_derivative(config.delta) {
        Some(asymptotic) => base.max((g2 - asymptotic).abs()),
        None => base,
    }
}

fn g2_at_delta(config: &SystemConfig) -> Result<f64> {
    config.spectrum.second_derivative(config.delta)
}

/// Classifies the system by the sign of G″(Δ). `g2_eps` overrides the
/// default base tolerance; see [`default_g2_eps`].
pub fn classify(config: &SystemConfig, g2_eps: Option<f64>) -> Result<ZenoClassification> {
    classify_with(config, g2_eps, &ValidityThresholds::default())
}

pub fn classify_with(
    config: &SystemConfig,
    g2_eps: Option<f64>,
    thresholds: &ValidityThresholds,
) -> Result<ZenoClassification> {
    config.validate()?;
    if let Some(eps) = g2_eps {
        if !(eps >= 0.0) {
            return Err(ZenoError::InvalidConfig(format!("g2_eps must be non-negative, got {eps}")));
        }
    }
    let g2 = g2_at_delta(config)?;
    let eps = effective_eps(config, g2, g2_eps.unwrap_or_else(|| default_g2_eps(config)));
    let verdict = if g2 < -eps {
        Verdict::Qze
    } else if g2 > eps {
        Verdict::Qaze
    } else {
        Verdict::Indeterminate
    };
    let mut validity = validity_check_with(config, thresholds);
    if verdict == Verdict::Indeterminate {
        validity.warnings.push(ValidityWarning::G2NearZero);
    }
    Ok(ZenoClassification { verdict, g2, g2_eps: eps, gamma0: config.free_decay_rate(), validity })
}

/// Asymptotic rate γ₀ + (4π/τ²)G″(Δ).
pub fn gamma_approx(config: &SystemConfig, tau: f64) -> Result<DecayEstimate> {
    check_tau(tau)?;
    let gamma0 = config.free_decay_rate();
    let gamma = gamma0 + gamma1_main_lobe(config, tau)?;
    Ok(DecayEstimate::new(tau, gamma, gamma0, Method::SecondDerivApprox, 0.0).warn_if_impractical(config.delta))
}

/// Direction in which the asymptotic rate approaches γ₀ as τ grows.
pub fn monotonicity_sign(config: &SystemConfig) -> Result<Monotonicity> {
    Ok(match classify(config, None)?.verdict {
        Verdict::Qze => Monotonicity::IncreasingToGamma0,
        Verdict::Qaze => Monotonicity::DecreasingToGamma0,
        Verdict::Indeterminate => Monotonicity::Flat,
    })
}

/// Parameter swept by [`boundary_find`]: `"delta"` or a spectrum field name.
fn with_swept(config: &SystemConfig, param: &str, value: f64) -> Result<SystemConfig> {
    if param == "delta" {
        SystemConfig::new(value, config.spectrum.clone())
    } else {
        SystemConfig::new(config.delta, config.spectrum.with_parameter(param, value)?)
    }
}

/// Root in `param` of G″(Δ) over [lo, hi] by bisection. Only a single sign
/// change is assumed; several roots in the range are not detected.
pub fn boundary_find(config: &SystemConfig, param: &str, lo: f64, hi: f64) -> Result<f64> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(ZenoError::InvalidConfig(format!("boundary range must satisfy lo < hi, got [{lo}, {hi}]")));
    }
    let g2 = |v: f64| with_swept(config, param, v).and_then(|c| g2_at_delta(&c));
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (g2(a)?, g2(b)?);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(ZenoError::NoSignChange { lo, hi });
    }
    let negative_at_a = fa < 0.0;
    while b - a > BOUNDARY_REL_TOL * a.abs().max(b.abs()) {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = g2(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if (fm < 0.0) == negative_at_a {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

pub fn validity_check(config: &SystemConfig) -> ValidityReport {
    validity_check_with(config, &ValidityThresholds::default())
}

/// Cutoff, centroid and coupling diagnostics. G2_NEAR_ZERO is added by
/// [`classify`], which owns the degeneracy tolerance.
pub fn validity_check_with(config: &SystemConfig, thresholds: &ValidityThresholds) -> ValidityReport {
    let delta = config.delta;
    let delta_over_cutoff = config.spectrum.cutoff().map(|wc| delta / wc);
    let delta_over_centroid = config.spectrum.centroid().ok().filter(|c| *c > 0.0).map(|c| delta / c);
    let mut warnings = Vec::new();
    if delta_over_cutoff.is_some_and(|r| r < thresholds.min_delta_over_cutoff) {
        warnings.push(ValidityWarning::DeltaFarBelowCutoff);
    }
    if delta_over_centroid.is_some_and(|r| r < thresholds.min_delta_over_centroid) {
        warnings.push(ValidityWarning::DeltaFarBelowCentroid);
    }
    if config.free_decay_rate() > thresholds.max_gamma0_over_delta * delta {
        warnings.push(ValidityWarning::StrongCouplingSuspect);
    }
    ValidityReport { delta_over_cutoff, delta_over_centroid, warnings }
}
