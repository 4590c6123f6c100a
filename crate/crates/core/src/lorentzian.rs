//! Exactly solvable Lorentzian environment.
//!
//! Extending the Lorentzian to the whole frequency axis turns the memory
//! kernel into a single damped exponential, and the amplitude follows from
//! two residues at the roots of
//!
//! ```text
//! a² − (Ω − iΛ) a − πD₀Λ = 0,      Ω = ω₀ − Δ
//! ```
//!
//! giving α(t) = (a₊e^{−ia₋t} − a₋e^{−ia₊t})/(a₊ − a₋).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZenoError};
use crate::estimate::{DecayEstimate, Method};
use crate::filter::check_tau;
use crate::spectra::{SpectrumModel, SystemConfig};

/// Relative root separation below which the roots count as coincident.
const DEGENERACY_TOL: f64 = 1e-12;
/// Smallest |α(τ)| for which a decay rate is reported.
const AMPLITUDE_FLOOR: f64 = 1e-300;
/// Below this max|a±|·t the amplitude is summed as a power series in t.
const SERIES_RADIUS: f64 = 0.5;

/// Lorentzian parameters together with the level spacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianSystem {
    pub d0: f64,
    pub omega0: f64,
    pub lam: f64,
    pub delta: f64,
}

impl LorentzianSystem {
    pub fn from_config(config: &SystemConfig) -> Result<Self> {
        match config.spectrum {
            SpectrumModel::Lorentzian { d0, omega0, lam } => Ok(Self { d0, omega0, lam, delta: config.delta }),
            ref other => Err(ZenoError::ModelMismatch(format!(
                "exact solution needs a lorentzian spectrum, got {}",
                other.kind()
            ))),
        }
    }

    /// Detuning Ω = ω₀ − Δ.
    pub fn detuning(&self) -> f64 {
        self.omega0 - self.delta
    }

    /// γ₀ = 2πG(Δ).
    pub fn free_decay_rate(&self) -> f64 {
        let x = self.detuning();
        2.0 * PI * (self.d0 * (self.lam * self.lam / (x * x + self.lam * self.lam)))
    }

    /// Total weight πD₀Λ of the Lorentzian over the whole axis; equals the
    /// kernel at t = 0 and the curvature −α″(0) of the exact amplitude.
    pub fn extended_weight(&self) -> f64 {
        PI * self.d0 * self.lam
    }

    /// Zeno time of the whole-axis Lorentzian, (πD₀Λ)^{−1/2}.
    pub fn extended_zeno_time(&self) -> f64 {
        1.0 / self.extended_weight().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianRoots {
    pub a_plus: Complex64,
    pub a_minus: Complex64,
    /// Ω = ω₀ − Δ
    pub omega_big: f64,
}

/// Residue roots a± = [(Ω − iΛ) ± √((Ω − iΛ)² + 4πD₀Λ)]/2, principal branch.
pub fn roots(system: &LorentzianSystem) -> Result<LorentzianRoots> {
    let LorentzianSystem { d0, lam, .. } = *system;
    if !(d0 > 0.0 && lam > 0.0) {
        return Err(ZenoError::Domain(format!("roots need d0 > 0 and lam > 0, got d0 = {d0}, lam = {lam}")));
    }
    let omega = system.detuning();
    let b = Complex64::new(omega, -lam);
    let product = Complex64::new(-system.extended_weight(), 0.0);
    let disc = b * b - 4.0 * product;
    // a −0 imaginary part would put a negative discriminant on the far side of the cut
    let sq = Complex64::new(disc.re, disc.im + 0.0).sqrt();
    // form the larger root without cancellation and recover the other from a₊a₋
    let (a_plus, a_minus) = if (b.conj() * sq).re >= 0.0 {
        let big = 0.5 * (b + sq);
        (big, product / big)
    } else {
        let big = 0.5 * (b - sq);
        (product / big, big)
    };
    let separation = (a_plus - a_minus).norm();
    if separation < DEGENERACY_TOL * (a_plus.norm() + a_minus.norm()) {
        return Err(ZenoError::DegenerateRoots { separation });
    }
    Ok(LorentzianRoots { a_plus, a_minus, omega_big: omega })
}

impl LorentzianRoots {
    /// α(t) − 1. Near t = 0 this uses
    /// α(t) − 1 = −a₊a₋ Σ_{n≥2} (−it)ⁿ h_{n−2}(a₊, a₋)/n!,
    /// with h_k the complete homogeneous polynomial, which avoids the
    /// cancellation in 1 − |α|² at short times.
    fn deviation(&self, t: f64) -> Complex64 {
        let (p, m) = (self.a_plus, self.a_minus);
        if p.norm().max(m.norm()) * t.abs() < SERIES_RADIUS {
            let minus_it = Complex64::new(0.0, -t);
            let mut h = Complex64::new(1.0, 0.0);
            let mut m_pow = Complex64::new(1.0, 0.0);
            let mut coef = minus_it * minus_it / 2.0;
            let mut sum = coef * h;
            for n in 3..60 {
                m_pow *= m;
                h = p * h + m_pow;
                coef *= minus_it / n as f64;
                let term = coef * h;
                sum += term;
                if term.norm() <= 1e-18 * sum.norm() {
                    break;
                }
            }
            -(p * m) * sum
        } else {
            self.direct(t) - 1.0
        }
    }

    fn direct(&self, t: f64) -> Complex64 {
        let (p, m) = (self.a_plus, self.a_minus);
        let i = Complex64::i();
        (p * (-i * m * t).exp() - m * (-i * p * t).exp()) / (p - m)
    }
}

/// Amplitude α(t) of the initially excited state.
pub fn amplitude(r: &LorentzianRoots, t: f64) -> Complex64 {
    1.0 + r.deviation(t)
}

/// ln|α(t)|, accurate also where |α| is close to 1.
fn ln_abs_amplitude(r: &LorentzianRoots, t: f64) -> Result<f64> {
    let d = r.deviation(t);
    let alpha = 1.0 + d;
    let modulus = alpha.norm();
    if !(modulus >= AMPLITUDE_FLOOR) {
        return Err(ZenoError::AmplitudeUnderflow { magnitude: modulus });
    }
    Ok(0.5 * (2.0 * d.re + d.norm_sqr()).ln_1p())
}

/// Exact rate under repeated measurement, γ(τ) = −(2/τ) ln|α(τ)|.
pub fn gamma_exact(config: &SystemConfig, tau: f64) -> Result<DecayEstimate> {
    check_tau(tau)?;
    let system = LorentzianSystem::from_config(config)?;
    let r = roots(&system)?;
    let gamma = -2.0 / tau * ln_abs_amplitude(&r, tau)?;
    Ok(DecayEstimate::new(tau, gamma, config.free_decay_rate(), Method::ExactLorentzian, 0.0)
        .warn_if_impractical(config.delta))
}

/// Closed-form UT rate of the whole-axis Lorentzian,
/// γ₀[1 + (sin θ − sin(θ + Ωτ)e^{−Λτ})/(Λτ)],
/// sin θ = (Ω² − Λ²)/(Ω² + Λ²), cos θ = 2ΩΛ/(Ω² + Λ²).
pub fn closed_form_lorentzian(config: &SystemConfig, tau: f64) -> Result<DecayEstimate> {
    check_tau(tau)?;
    let system = LorentzianSystem::from_config(config)?;
    let (omega, lam) = (system.detuning(), system.lam);
    let norm = omega * omega + lam * lam;
    let sin_theta = (omega * omega - lam * lam) / norm;
    let cos_theta = 2.0 * omega * lam / norm;
    let theta = sin_theta.atan2(cos_theta);
    let lt = lam * tau;
    let ratio = 1.0 + (sin_theta - (theta + omega * tau).sin() * (-lt).exp()) / lt;
    let gamma0 = config.free_decay_rate();
    Ok(DecayEstimate::new(tau, gamma0 * ratio, gamma0, Method::ClosedFormLorentzian, 0.0)
        .warn_if_impractical(config.delta))
}
