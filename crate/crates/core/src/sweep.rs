//! τ-sweeps across estimation methods, the JSON configuration schema, and
//! the CSV / JSON result formats.
//!
//! Configuration document:
//!
//! ```json
//! {
//!   "delta": 10.0,
//!   "spectrum": { "type": "lorentzian", "d0": 0.01, "omega0": 10.0, "lam": 1.0 },
//!   "sweep": { "tau": { "log": { "min": 1.0, "max": 50.0, "n": 64 } }, "units": "delta_tau",
//!              "methods": ["ut_quadrature", "exact_lorentzian"] },
//!   "settings": { "quadrature": { "rel_tol": 1e-8 }, "volterra": { "dt": 0.001 },
//!                 "apply_lamb_shift": false }
//! }
//! ```

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criterion::{classify, gamma_approx, ZenoClassification};
use crate::error::{Result, ZenoError};
use crate::estimate::{DecayEstimate, Method};
use crate::filter::{gamma_minor_lobe_corrected, gamma_ut, MinorLobeMode, QuadratureSettings};
use crate::lorentzian::{closed_form_lorentzian, gamma_exact};
use crate::spectra::{SpectrumModel, SystemConfig};
use crate::volterra::{gamma_from_survival, VolterraSettings};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauGrid {
    /// `n` points spaced evenly in ln τ from `min` to `max` inclusive.
    Log {
        min: f64,
        max: f64,
        n: usize,
    },
    List(Vec<f64>),
}

/// Whether grid values are τ itself or the dimensionless Δτ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauUnits {
    #[default]
    Tau,
    DeltaTau,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub config: SystemConfig,
    pub tau_grid: TauGrid,
    #[serde(default)]
    pub tau_units: TauUnits,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub quadrature: QuadratureSettings,
    #[serde(default)]
    pub volterra: VolterraSettings,
    #[serde(default)]
    pub minor_lobe_mode: MinorLobeMode,
    #[serde(default)]
    pub apply_lamb_shift: bool,
}

/// Methods applicable to a spectrum, in column order.
pub fn applicable_methods(spectrum: &SpectrumModel) -> Vec<Method> {
    let lorentzian = matches!(spectrum, SpectrumModel::Lorentzian { .. });
    Method::ALL.into_iter().filter(|m| lorentzian || !m.requires_lorentzian()).collect()
}

impl SweepSpec {
    pub fn new(config: SystemConfig, tau_grid: TauGrid, methods: Vec<Method>) -> Result<Self> {
        let spec = Self {
            config,
            tau_grid,
            tau_units: TauUnits::Tau,
            methods,
            quadrature: QuadratureSettings::default(),
            volterra: VolterraSettings::default(),
            minor_lobe_mode: MinorLobeMode::Auto,
            apply_lamb_shift: false,
        };
        spec.validate()?;
        Ok(spec.normalized())
    }

    /// Methods sorted into column order without duplicates.
    pub fn normalized(mut self) -> Self {
        self.methods.sort();
        self.methods.dedup();
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        self.quadrature.validate()?;
        self.volterra.validate()?;
        match &self.tau_grid {
            TauGrid::Log { min, max, n } => {
                if !(*min > 0.0 && max >= min && max.is_finite()) {
                    return Err(ZenoError::InvalidConfig(format!("log grid needs 0 < min <= max, got [{min}, {max}]")));
                }
                if *n < 2 {
                    return Err(ZenoError::InvalidConfig(format!("log grid needs n >= 2, got {n}")));
                }
            }
            TauGrid::List(values) => {
                if values.is_empty() {
                    return Err(ZenoError::InvalidConfig("tau list is empty".into()));
                }
                if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
                    return Err(ZenoError::InvalidConfig(format!("tau values must be positive, got {v}")));
                }
            }
        }
        if self.methods.is_empty() {
            return Err(ZenoError::InvalidConfig("no methods requested".into()));
        }
        if !matches!(self.config.spectrum, SpectrumModel::Lorentzian { .. }) {
            if let Some(m) = self.methods.iter().find(|m| m.requires_lorentzian()) {
                return Err(ZenoError::ModelMismatch(format!(
                    "{m} needs a lorentzian spectrum, got {}",
                    self.config.spectrum.kind()
                )));
            }
        }
        Ok(())
    }

    /// System actually evaluated: Δ replaced by Δ₁ when requested.
    pub fn effective_config(&self) -> Result<SystemConfig> {
        if self.apply_lamb_shift {
            self.config.with_lamb_shift()
        } else {
            Ok(self.config.clone())
        }
    }

    /// Measurement intervals in ascending order.
    pub fn taus(&self, delta: f64) -> Vec<f64> {
        let raw: Vec<f64> = match &self.tau_grid {
            TauGrid::Log { min, max, n } => {
                let (a, b) = (min.ln(), max.ln());
                (0..*n)
                    .map(|i| match i {
                        0 => *min,
                        i if i == n - 1 => *max,
                        i => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
                    })
                    .collect()
            }
            TauGrid::List(values) => values.clone(),
        };
        let mut taus: Vec<f64> = match self.tau_units {
            TauUnits::Tau => raw,
            TauUnits::DeltaTau => raw.into_iter().map(|x| x / delta).collect(),
        };
        taus.sort_by(f64::total_cmp);
        taus
    }
}

/// Evaluates one method at one interval.
pub fn estimate(
    method: Method,
    config: &SystemConfig,
    tau: f64,
    quadrature: &QuadratureSettings,
    volterra: &VolterraSettings,
    minor_lobe_mode: MinorLobeMode,
) -> Result<DecayEstimate> {
    match method {
        Method::UtQuadrature => gamma_ut(config, tau, quadrature),
        Method::SecondDerivApprox => gamma_approx(config, tau),
        Method::ExactLorentzian => gamma_exact(config, tau),
        Method::ClosedFormLorentzian => closed_form_lorentzian(config, tau),
        Method::LinearZeno => {
            let gamma = config.spectrum.linear_decay_rate(tau)?;
            Ok(DecayEstimate::new(tau, gamma, config.free_decay_rate(), Method::LinearZeno, 0.0))
        }
        Method::MinorLobeCorrected => gamma_minor_lobe_corrected(config, tau, quadrature, minor_lobe_mode),
        Method::VolterraOracle => gamma_from_survival(config, tau, volterra),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub code: String,
    pub message: String,
}

impl From<&ZenoError> for ErrorRecord {
    fn from(e: &ZenoError) -> Self {
        Self { code: e.code().to_string(), message: e.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<DecayEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tau: f64,
    pub delta_tau: f64,
    pub gamma0: f64,
    pub results: Vec<MethodOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub spec: SweepSpec,
    /// Δ used in the computation (Δ₁ with the Lamb shift applied).
    pub effective_delta: f64,
    pub version: String,
    pub classification: Option<ZenoClassification>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepError {
    pub tau: f64,
    pub method: Method,
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub metadata: SweepMetadata,
    pub rows: Vec<SweepRow>,
}

/// Runs the sweep on a pool of `threads` workers (rayon's default when
/// `None`). Output order and values do not depend on the thread count.
pub fn run(spec: &SweepSpec, threads: Option<usize>) -> Result<SweepResult> {
    spec.validate()?;
    let spec = spec.clone().normalized();
    let config = spec.effective_config()?;
    let taus = spec.taus(config.delta);
    let gamma0 = config.free_decay_rate();

    let row = |tau: f64| SweepRow {
        tau,
        delta_tau: config.delta * tau,
        gamma0,
        results: spec
            .methods
            .iter()
            .map(|&m| match estimate(m, &config, tau, &spec.quadrature, &spec.volterra, spec.minor_lobe_mode) {
                Ok(e) => MethodOutcome { method: m, estimate: Some(e), error: None },
                Err(e) => MethodOutcome { method: m, estimate: None, error: Some((&e).into()) },
            })
            .collect(),
    };

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(ZenoError::InvalidConfig("thread count must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| ZenoError::InvalidConfig(format!("thread pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| taus.par_iter().map(|&t| row(t)).collect());

    Ok(SweepResult {
        metadata: SweepMetadata {
            classification: classify(&config, None).ok(),
            effective_delta: config.delta,
            version: env!("CARGO_PKG_VERSION").to_string(),
            spec,
        },
        rows,
    })
}

/// Fixed 17-significant-digit rendering.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

impl SweepResult {
    pub fn methods(&self) -> &[Method] {
        &self.metadata.spec.methods
    }

    pub fn errors(&self) -> Vec<SweepError> {
        self.rows
            .iter()
            .flat_map(|r| {
                r.results.iter().filter_map(move |o| {
                    o.error.as_ref().map(|e| SweepError {
                        tau: r.tau,
                        method: o.method,
                        code: e.code.clone(),
                        message: e.message.clone(),
                    })
                })
            })
            .collect()
    }

    pub fn csv_header(&self) -> String {
        let mut cols = vec!["tau".to_string(), "delta_tau".into(), "gamma0".into()];
        for m in self.methods() {
            for suffix in ["gamma", "ratio", "err"] {
                cols.push(format!("{}_{suffix}", m.token()));
            }
        }
        cols.join(",")
    }

    /// Failed cells and undefined ratios are left empty.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", self.csv_header())?;
        for r in &self.rows {
            let mut cells = vec![format_number(r.tau), format_number(r.delta_tau), format_number(r.gamma0)];
            for o in &r.results {
                match &o.estimate {
                    Some(e) => {
                        cells.push(format_number(e.gamma_eff));
                        cells.push(e.ratio.map(format_number).unwrap_or_default());
                        cells.push(format_number(e.err_estimate));
                    }
                    None => cells.extend(std::iter::repeat_n(String::new(), 3)),
                }
            }
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ASCII")
    }

    /// JSON document with `metadata`, `rows` and an `errors` sidecar.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Document<'a> {
            metadata: &'a SweepMetadata,
            rows: &'a [SweepRow],
            errors: Vec<SweepError>,
        }
        let doc = Document { metadata: &self.metadata, rows: &self.rows, errors: self.errors() };
        let mut s = serde_json::to_string_pretty(&doc).expect("sweep results serialize");
        s.push('\n');
        s
    }
}

/// Top-level configuration document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub delta: f64,
    pub spectrum: SpectrumModel,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub settings: Settings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub tau: TauGrid,
    #[serde(default)]
    pub units: TauUnits,
    /// All applicable methods when absent.
    #[serde(default)]
    pub methods: Option<Vec<Method>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub quadrature: QuadratureSettings,
    pub volterra: VolterraSettings,
    pub minor_lobe_mode: MinorLobeMode,
    pub apply_lamb_shift: bool,
    /// Base degeneracy tolerance for classification.
    pub g2_eps: Option<f64>,
    pub boundary: Option<BoundarySection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySection {
    /// `"delta"` or a spectrum field name.
    pub parameter: String,
    pub range: [f64; 2],
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ConfigFile =
            serde_json::from_str(text).map_err(|e| ZenoError::InvalidConfig(format!("config: {e}")))?;
        file.system()?;
        Ok(file)
    }

    pub fn system(&self) -> Result<SystemConfig> {
        SystemConfig::new(self.delta, self.spectrum.clone())
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let section =
            self.sweep.as_ref().ok_or_else(|| ZenoError::InvalidConfig("config has no \"sweep\" section".into()))?;
        let config = self.system()?;
        let methods = section.methods.clone().unwrap_or_else(|| applicable_methods(&config.spectrum));
        let spec = SweepSpec {
            config,
            tau_grid: section.tau.clone(),
            tau_units: section.units,
            methods,
            quadrature: self.settings.quadrature,
            volterra: self.settings.volterra,
            minor_lobe_mode: self.settings.minor_lobe_mode,
            apply_lamb_shift: self.settings.apply_lamb_shift,
        };
        spec.validate()?;
        Ok(spec.normalized())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn fig2a_spec(methods: Vec<Method>) -> SweepSpec {
        let c = SystemConfig::new(10.0, SpectrumModel::Lorentzian { d0: 0.01, omega0: 10.0, lam: 1.0 }).unwrap();
        let mut s = SweepSpec::new(c, TauGrid::Log { min: 1.0, max: 50.0, n: 12 }, methods).unwrap();
        s.tau_units = TauUnits::DeltaTau;
        s
    }

    #[test]
    fn log_grid_is_ascending_and_hits_endpoints() {
        let s = fig2a_spec(vec![Method::UtQuadrature]);
        let t = s.taus(10.0);
        assert_eq!(t.len(), 12);
        assert_eq!(t[0], 0.1);
        assert_eq!(t[11], 5.0);
        assert!(t.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn csv_layout() {
        let spec = fig2a_spec(vec![Method::LinearZeno, Method::UtQuadrature]);
        let r = run(&spec, Some(2)).unwrap();
        let csv = r.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "tau,delta_tau,gamma0,ut_quadrature_gamma,ut_quadrature_ratio,ut_quadrature_err,\
             linear_zeno_gamma,linear_zeno_ratio,linear_zeno_err"
        );
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 9);
        assert_eq!(first[0], "1.0000000000000001e-1");
        assert!(csv.ends_with('\n') && !csv.contains('\r'));
    }

    #[test]
    fn failures_leave_empty_cells_and_a_sidecar() {
        // the exceptional point makes the exact solution fail on every row
        let c =
            SystemConfig::new(1.0, SpectrumModel::Lorentzian { d0: 1.0 / (4.0 * PI), omega0: 1.0, lam: 1.0 }).unwrap();
        let spec =
            SweepSpec::new(c, TauGrid::List(vec![1.0, 2.0]), vec![Method::ExactLorentzian, Method::SecondDerivApprox])
                .unwrap();
        let r = run(&spec, None).unwrap();
        let csv = r.to_csv();
        let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
        // second_deriv_approx precedes exact_lorentzian in column order
        assert!(!row[3].is_empty());
        assert_eq!(&row[6..9], &["", "", ""]);
        let errors = r.errors();
        assert_eq!(errors.len(), 2);
        assert_eq!(errors[0].code, "DEGENERATE_ROOTS");
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["errors"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let spec = fig2a_spec(vec![Method::UtQuadrature, Method::ExactLorentzian, Method::MinorLobeCorrected]);
        let one = run(&spec, Some(1)).unwrap().to_csv();
        let four = run(&spec, Some(4)).unwrap().to_csv();
        assert_eq!(one, four);
    }

    #[test]
    fn json_metadata_round_trips() {
        let mut spec = fig2a_spec(vec![Method::ClosedFormLorentzian]);
        spec.apply_lamb_shift = true;
        spec.volterra.dt = Some(1e-3);
        let r = run(&spec, None).unwrap();
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        let back: SweepSpec = serde_json::from_value(json["metadata"]["spec"].clone()).unwrap();
        assert_eq!(back, spec);
        assert!(r.metadata.effective_delta > 10.0);
        assert_eq!(r.rows[0].delta_tau, r.metadata.effective_delta * r.rows[0].tau);
    }

    #[test]
    fn lorentzian_methods_need_lorentzian_spectra() {
        let c = SystemConfig::new(1.0, SpectrumModel::Hydrogenlike { eta: 1e-3, omega_c: 4.0 }).unwrap();
        let e = SweepSpec::new(c.clone(), TauGrid::List(vec![1.0]), vec![Method::ExactLorentzian]).unwrap_err();
        assert_eq!(e.code(), "MODEL_MISMATCH");
        assert!(!applicable_methods(&c.spectrum).contains(&Method::ClosedFormLorentzian));
        assert!(
            SweepSpec::new(c.clone(), TauGrid::Log { min: 1.0, max: 2.0, n: 1 }, vec![Method::UtQuadrature]).is_err()
        );
        assert!(SweepSpec::new(c, TauGrid::List(vec![1.0]), vec![]).is_err());
    }

    #[test]
    fn config_document() {
        let text = r#"{
            "delta": 1.0,
            "spectrum": {"type": "power_law", "a": 0.01, "s": 1.5, "omega_c": 10.0},
            "sweep": {"tau": {"log": {"min": 6.283185307179586, "max": 62.83185307179586, "n": 5}},
                      "units": "delta_tau", "methods": ["linear_zeno", "ut_quadrature"]},
            "settings": {"quadrature": {"rel_tol": 1e-9}}
        }"#;
        let f = ConfigFile::from_json(text).unwrap();
        let spec = f.sweep_spec().unwrap();
        assert_eq!(spec.methods, vec![Method::UtQuadrature, Method::LinearZeno]);
        assert_eq!(spec.quadrature.rel_tol, 1e-9);
        assert_eq!(spec.quadrature.max_lobes, 10_000);
        assert!(ConfigFile::from_json(r#"{"delta": 1.0}"#).is_err());
        assert!(ConfigFile::from_json(
            r#"{"delta": -1.0, "spectrum": {"type": "hydrogenlike", "eta": 1, "omega_c": 1}}"#
        )
        .is_err());
        let no_sweep =
            ConfigFile::from_json(r#"{"delta": 1.0, "spectrum": {"type": "hydrogenlike", "eta": 1, "omega_c": 1}}"#)
                .unwrap();
        assert_eq!(no_sweep.sweep_spec().unwrap_err().code(), "INVALID_CONFIG");
    }

    #[test]
    fn linear_zeno_column_is_tau_over_zeno_time_squared() {
        let c = SystemConfig::new(1.0, SpectrumModel::Hydrogenlike { eta: 1e-3, omega_c: 4.0 }).unwrap();
        let spec = SweepSpec::new(c.clone(), TauGrid::List(vec![0.01, 0.1, 1.0]), vec![Method::LinearZeno]).unwrap();
        let r = run(&spec, None).unwrap();
        let w = c.spectrum.total_weight().unwrap();
        for row in &r.rows {
            assert_eq!(row.results[0].estimate.as_ref().unwrap().gamma_eff, row.tau * w);
        }
    }
}
