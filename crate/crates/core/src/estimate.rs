use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ZenoError;

/// Route by which an effective decay rate was obtained. Declaration order is
/// the column order of sweep output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    UtQuadrature,
    SecondDerivApprox,
    ExactLorentzian,
    ClosedFormLorentzian,
    LinearZeno,
    MinorLobeCorrected,
    VolterraOracle,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::UtQuadrature,
        Method::SecondDerivApprox,
        Method::ExactLorentzian,
        Method::ClosedFormLorentzian,
        Method::LinearZeno,
        Method::MinorLobeCorrected,
        Method::VolterraOracle,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Method::UtQuadrature => "ut_quadrature",
            Method::SecondDerivApprox => "second_deriv_approx",
            Method::ExactLorentzian => "exact_lorentzian",
            Method::ClosedFormLorentzian => "closed_form_lorentzian",
            Method::LinearZeno => "linear_zeno",
            Method::MinorLobeCorrected => "minor_lobe_corrected",
            Method::VolterraOracle => "volterra_oracle",
        }
    }

    pub fn requires_lorentzian(self) -> bool {
        matches!(self, Method::ExactLorentzian | Method::ClosedFormLorentzian)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Method {
    type Err = ZenoError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.trim().to_ascii_lowercase().replace('-', "_");
        Method::ALL
            .into_iter()
            .find(|m| m.token() == wanted)
            .ok_or_else(|| ZenoError::InvalidConfig(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EstimateWarning {
    /// τ < 2π/Δ: outside the experimentally meaningful regime.
    PracticalRegime,
    /// γ₀ = 0, so γ_eff/γ₀ is undefined.
    UndefinedRatio,
    /// Asymptotic minor-lobe expansion used with s close to 1, where the
    /// leading 1/τ term and the O(τ^{−s}) remainder are of the same order.
    NearOhmicExpansion,
    /// The lobe sum hit `max_lobes`; the remainder is a mean-value estimate.
    LobeBudgetExhausted,
}

/// Effective decay rate for one measurement interval and one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayEstimate {
    pub tau: f64,
    pub gamma_eff: f64,
    pub gamma0: f64,
    /// γ_eff/γ₀; `None` when γ₀ = 0.
    pub ratio: Option<f64>,
    pub method: Method,
    /// Relative error estimate of `gamma_eff`.
    pub err_estimate: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<EstimateWarning>,
}

impl DecayEstimate {
    pub(crate) fn new(tau: f64, gamma_eff: f64, gamma0: f64, method: Method, err_estimate: f64) -> Self {
        let mut warnings = Vec::new();
        let ratio = if gamma0 > 0.0 {
            Some(gamma_eff / gamma0)
        } else {
            warnings.push(EstimateWarning::UndefinedRatio);
            None
        };
        Self { tau, gamma_eff, gamma0, ratio, method, err_estimate, warnings }
    }

    pub(crate) fn warn(mut self, w: EstimateWarning) -> Self {
        if !self.warnings.contains(&w) {
            self.warnings.push(w);
        }
        self
    }

    pub(crate) fn warn_if_impractical(self, delta: f64) -> Self {
        if self.tau < 2.0 * std::f64::consts::PI / delta {
            self.warn(EstimateWarning::PracticalRegime)
        } else {
            self
        }
    }
}
