//! Acceptance gate. One line per criterion; the process fails if any line does.
//!
//! Run with `cargo test -p zeno-core --test acceptance`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use zeno_core::criterion::{boundary_find, classify, gamma_approx, Verdict};
use zeno_core::filter::{
    filter_value, gamma_minor_lobe_corrected, gamma_ut, main_lobe_fraction, MinorLobeMode, QuadratureSettings,
};
use zeno_core::lorentzian::{amplitude, closed_form_lorentzian, gamma_exact, roots, LorentzianSystem};
use zeno_core::special::upper_incomplete_gamma;
use zeno_core::sweep::{run, SweepSpec, TauGrid, TauUnits};
use zeno_core::volterra::{evolve_amplitude, gamma_from_survival, AmplitudeSeries, VolterraSettings};
use zeno_core::{Method, SpectrumModel, SystemConfig};

type Criterion = (&'static str, Duration, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn lorentzian(delta: f64) -> SystemConfig {
    SystemConfig::new(delta, SpectrumModel::Lorentzian { d0: 0.01, omega0: 10.0, lam: 1.0 }).unwrap()
}

fn hydrogen(delta: f64, omega_c: f64) -> SystemConfig {
    SystemConfig::new(delta, SpectrumModel::Hydrogenlike { eta: 1e-3, omega_c }).unwrap()
}

fn power(s: f64) -> SystemConfig {
    SystemConfig::new(1.0, SpectrumModel::PowerLaw { a: 0.01, s, omega_c: 10.0 }).unwrap()
}

/// `n` values of Δτ spread linearly over [lo, hi], converted to τ.
fn taus(c: &SystemConfig, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64) / c.delta).collect()
}

fn ut_ratio(c: &SystemConfig, tau: f64) -> f64 {
    gamma_ut(c, tau, &QuadratureSettings::default()).unwrap().ratio.unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn cross_method_lorentzian() -> Outcome {
    let c = lorentzian(10.0);
    let (mut ut_cf, mut cf_ex, mut max_ratio) = (0.0f64, 0.0f64, 0.0f64);
    let mut worst_at = 0.0;
    for tau in taus(&c, 2.0 * PI, 60.0, 60) {
        let ut = gamma_ut(&c, tau, &QuadratureSettings::default()).unwrap();
        let cf = closed_form_lorentzian(&c, tau).unwrap();
        let ex = gamma_exact(&c, tau).unwrap();
        ut_cf = ut_cf.max(rel(ut.gamma_eff, cf.gamma_eff));
        let d = rel(cf.gamma_eff, ex.gamma_eff);
        if d > cf_ex {
            cf_ex = d;
            worst_at = c.delta * tau;
        }
        for r in [ut.ratio, cf.ratio, ex.ratio] {
            max_ratio = max_ratio.max(r.unwrap());
        }
    }
    let verdict = classify(&c, None).unwrap().verdict;
    outcome(
        ut_cf < 1e-3 && cf_ex < 0.02 && max_ratio < 1.0 && verdict == Verdict::Qze,
        format!(
            "max|ut-cf|/cf = {ut_cf:.2e} (<1e-3), max|cf-exact|/exact = {cf_ex:.2e} at Δτ={worst_at:.1} (<2e-2), \
             max ratio = {max_ratio:.4}, verdict {verdict:?}"
        ),
    )
}

fn qaze_detection() -> Outcome {
    let c = lorentzian(8.0);
    let (mut ex_max, mut ut_max) = (0.0f64, 0.0f64);
    for tau in taus(&c, 2.0 * PI, 60.0, 60) {
        ex_max = ex_max.max(gamma_exact(&c, tau).unwrap().ratio.unwrap());
        ut_max = ut_max.max(ut_ratio(&c, tau));
    }
    let verdict = classify(&c, None).unwrap().verdict;
    outcome(
        ex_max > 1.0 && ut_max > 1.0 && verdict == Verdict::Qaze,
        format!("max exact ratio = {ex_max:.4}, max ut ratio = {ut_max:.4}, verdict {verdict:?}"),
    )
}

/// Ratios approach 1 from one side: all on that side, closer at the end.
fn approaches_one(ratios: &[f64], from_below: bool) -> bool {
    let side = ratios.iter().all(|&r| if from_below { r < 1.0 } else { r > 1.0 });
    side && (ratios[ratios.len() - 1] - 1.0).abs() < (ratios[0] - 1.0).abs()
}

fn hydrogenlike_boundary() -> Outcome {
    let c = hydrogen(1.0, 4.0);
    let root = boundary_find(&c, "omega_c", 1.0, 4.0).unwrap();
    let want = (7.0f64 / 3.0).sqrt();
    let root_err = rel(root, want);
    let sweep = |wc: f64| -> Vec<f64> {
        let c = hydrogen(1.0, wc);
        taus(&c, 4.0 * PI, 20.0 * PI, 17).into_iter().map(|t| ut_ratio(&c, t)).collect()
    };
    let (above_cut, below_cut) = (sweep(4.0), sweep(1.0));
    let ok = root_err < 1e-9 && approaches_one(&above_cut, true) && approaches_one(&below_cut, false);
    outcome(
        ok,
        format!(
            "root = {root:.12}Δ, rel err {root_err:.1e} (<1e-9); ωc=4Δ ratio {:.4}→{:.4}; ωc=Δ ratio {:.4}→{:.4}",
            above_cut[0], above_cut[16], below_cut[0], below_cut[16]
        ),
    )
}

fn power_law_split() -> Outcome {
    let ratios = |s: f64| -> Vec<f64> {
        let c = power(s);
        taus(&c, 2.0 * PI, 20.0 * PI, 37).into_iter().map(|t| ut_ratio(&c, t)).collect()
    };
    let (sub, sup) = (ratios(0.5), ratios(1.5));
    let sub_max = sub.iter().cloned().fold(f64::MIN, f64::max);
    let sup_min = sup.iter().cloned().fold(f64::MAX, f64::min);
    let v = [0.5, 1.5, 1.0].map(|s| classify(&power(s), None).unwrap().verdict);
    outcome(
        sub_max < 1.0 && sup_min > 1.0 && v == [Verdict::Qze, Verdict::Qaze, Verdict::Indeterminate],
        format!("s=0.5 max ratio {sub_max:.4}, s=1.5 min ratio {sup_min:.4}, verdicts {v:?}"),
    )
}

fn minor_lobe_correction() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for s in [2.5, 3.5] {
        let c = power(s);
        let tau = 4.0 * PI / c.delta;
        let q = QuadratureSettings::default();
        let ut = gamma_ut(&c, tau, &q).unwrap().gamma_eff;
        let corrected = gamma_minor_lobe_corrected(&c, tau, &q, MinorLobeMode::Auto).unwrap().gamma_eff;
        let approx = gamma_approx(&c, tau).unwrap().gamma_eff;
        let (e1, e0) = ((corrected - ut).abs(), (approx - ut).abs());
        ok &= e1 < e0;
        parts.push(format!("s={s}: |corr-ut| {e1:.2e} vs |approx-ut| {e0:.2e}"));
    }
    outcome(ok, parts.join("; "))
}

fn main_lobe() -> Outcome {
    let fr: Vec<f64> = [0.01, 1.0, 10.0].iter().map(|&t| main_lobe_fraction(t).unwrap()).collect();
    outcome(fr.iter().all(|f| (f - 0.903).abs() <= 1e-3), format!("fractions at τ = 0.01, 1, 10: {fr:.10?}"))
}

fn residue_gap(series: &AmplitudeSeries, r: &zeno_core::lorentzian::LorentzianRoots) -> f64 {
    series.times().zip(&series.alpha).map(|(t, a)| (a - amplitude(r, t)).norm()).fold(0.0, f64::max)
}

fn oracle_consistency() -> Outcome {
    let c = lorentzian(10.0);
    let r = roots(&LorentzianSystem::from_config(&c).unwrap()).unwrap();
    let s1 = VolterraSettings { dt: Some(1e-3), t_max: Some(20.0), ..Default::default() };
    let s2 = VolterraSettings { dt: Some(5e-4), ..s1 };
    let e1 = residue_gap(&evolve_amplitude(&c, &s1).unwrap(), &r);
    let e2 = residue_gap(&evolve_amplitude(&c, &s2).unwrap(), &r);
    let order = (e1 / e2).log2();

    let h = hydrogen(1.0, 4.0);
    let mut worst = 0.0f64;
    for k in [2.0, 4.0, 8.0] {
        let tau = k * PI / h.delta;
        let v = gamma_from_survival(&h, tau, &VolterraSettings::default()).unwrap().gamma_eff;
        worst = worst.max(rel(v, gamma_ut(&h, tau, &QuadratureSettings::default()).unwrap().gamma_eff));
    }
    outcome(
        e1 < 1e-4 && (order - 2.0).abs() < 0.2 && worst < 0.03,
        format!(
            "max|α-α_res| = {e1:.2e} (<1e-4), observed order {order:.3}, hydrogenlike max rel gap {worst:.2e} (<3e-2)"
        ),
    )
}

fn short_time_law() -> Outcome {
    let c = lorentzian(10.0);
    let tau_z = LorentzianSystem::from_config(&c).unwrap().extended_zeno_time();
    let tau = 1e-3;
    let x = gamma_exact(&c, tau).unwrap().gamma_eff * tau_z * tau_z / tau;
    outcome((0.99..=1.01).contains(&x), format!("γτ_Z²/τ at Λτ=1e-3: {x:.8}"))
}

fn random_spectrum(rng: &mut StdRng) -> SpectrumModel {
    match rng.gen_range(0..3) {
        0 => SpectrumModel::Lorentzian {
            d0: rng.gen_range(1e-3..1.0),
            omega0: rng.gen_range(1.0..20.0),
            lam: rng.gen_range(0.1..5.0),
        },
        1 => SpectrumModel::Hydrogenlike { eta: rng.gen_range(1e-4..1.0), omega_c: rng.gen_range(0.5..20.0) },
        _ => SpectrumModel::PowerLaw {
            a: rng.gen_range(1e-3..1.0),
            s: rng.gen_range(0.2..4.0),
            omega_c: rng.gen_range(0.5..20.0),
        },
    }
}

fn curvature_draws(rng: &mut StdRng) -> (usize, f64) {
    let (mut accepted, mut worst) = (0, 0.0f64);
    while accepted < 100 {
        let s = random_spectrum(rng);
        let w: f64 = rng.gen_range(0.2..20.0);
        let g = |x: f64| s.evaluate(x).unwrap();
        let exact = s.second_derivative(w).unwrap();
        // skip draws sitting on an inflection point
        if exact.abs() * w * w <= 1e-2 * g(w) {
            continue;
        }
        let h = 2e-3 * w.min(s.feature_width());
        let d = |h: f64| (g(w + h) - 2.0 * g(w) + g(w - h)) / (h * h);
        let fd = (4.0 * d(0.5 * h) - d(h)) / 3.0;
        worst = worst.max(rel(fd, exact));
        accepted += 1;
    }
    (accepted, worst)
}

fn normalization_error() -> f64 {
    // ∫F dω = 1 for every τ: trapezoid on a fine grid plus the 1/x² tail
    let mut worst = 0.0f64;
    for tau in [0.3, 1.0, 7.0] {
        let delta = 2.0;
        let half = 4000.0 * 2.0 * PI / tau;
        let n = 4_000_000;
        let h = 2.0 * half / n as f64;
        let mut sum = 0.0;
        for i in 0..=n {
            let w = delta - half + i as f64 * h;
            let f = filter_value(delta, tau, w);
            sum += if i == 0 || i == n { 0.5 * f } else { f };
        }
        // mean of sin² is 1/2: tail ∫ (τ/2π)(2/τ²x²)·½ dx on both sides
        let tail = 2.0 * (1.0 / (PI * tau)) / half;
        worst = worst.max((sum * h + tail - 1.0).abs());
    }
    worst
}

fn vieta_error(rng: &mut StdRng) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let lam: f64 = rng.gen_range(0.1..5.0);
        let d0: f64 = rng.gen_range(1e-3..1.0);
        let c = SystemConfig::new(
            rng.gen_range(1.0..20.0),
            SpectrumModel::Lorentzian { d0, omega0: rng.gen_range(1.0..20.0), lam },
        )
        .unwrap();
        let sys = LorentzianSystem::from_config(&c).unwrap();
        let Ok(r) = roots(&sys) else { continue };
        let sum = r.a_plus + r.a_minus - Complex64::new(r.omega_big, -lam);
        let prod = r.a_plus * r.a_minus + PI * d0 * lam;
        let scale = r.omega_big.abs() + lam;
        worst = worst.max(sum.norm() / scale).max(prod.norm() / (PI * d0 * lam));
    }
    worst
}

fn recurrence_error(rng: &mut StdRng) -> f64 {
    // Γ(s+1, x) = sΓ(s, x) + x^s e^{−x}
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let s: f64 = rng.gen_range(-0.9..6.0);
        let x: f64 = rng.gen_range(0.05..30.0);
        let lhs = upper_incomplete_gamma(s + 1.0, x).unwrap();
        let rhs = s * upper_incomplete_gamma(s, x).unwrap() + x.powf(s) * (-x).exp();
        worst = worst.max(rel(rhs, lhs));
    }
    worst
}

fn scaling_mismatches(rng: &mut StdRng) -> usize {
    let mut bad = 0;
    let q = QuadratureSettings::default();
    for _ in 0..20 {
        let c = SystemConfig::new(rng.gen_range(0.5..10.0), random_spectrum(rng)).unwrap();
        let scaled =
            SystemConfig::new(c.delta, c.spectrum.with_coupling_scaled(2f64.powi(rng.gen_range(-6..7))).unwrap())
                .unwrap();
        let tau = rng.gen_range(1.0..20.0) * PI / c.delta;
        if classify(&c, None).unwrap().verdict != classify(&scaled, None).unwrap().verdict {
            bad += 1;
        }
        let ratios = |c: &SystemConfig| {
            [
                gamma_ut(c, tau, &q).map(|e| e.ratio),
                gamma_approx(c, tau).map(|e| e.ratio),
                gamma_minor_lobe_corrected(c, tau, &q, MinorLobeMode::Auto).map(|e| e.ratio),
            ]
            .map(|r| r.ok().flatten())
        };
        if ratios(&c) != ratios(&scaled) {
            bad += 1;
        }
    }
    bad
}

fn csv_twice_identical() -> bool {
    let mut spec = SweepSpec::new(
        lorentzian(10.0),
        TauGrid::Log { min: 2.0 * PI, max: 60.0, n: 16 },
        vec![Method::UtQuadrature, Method::ExactLorentzian, Method::ClosedFormLorentzian, Method::LinearZeno],
    )
    .unwrap();
    spec.tau_units = TauUnits::DeltaTau;
    run(&spec, Some(1)).unwrap().to_csv() == run(&spec, Some(4)).unwrap().to_csv()
}

fn property_suites() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let (n, fd) = curvature_draws(&mut rng);
    let norm = normalization_error();
    let vieta = vieta_error(&mut rng);
    let rec = recurrence_error(&mut rng);
    let scale = scaling_mismatches(&mut rng);
    let csv = csv_twice_identical();
    outcome(
        fd < 1e-5 && norm < 1e-10 && vieta < 1e-12 && rec < 1e-12 && scale == 0 && csv,
        format!(
            "G″ vs FD worst {fd:.1e} over {n} draws; normalization {norm:.1e}; Vieta {vieta:.1e}; \
             Γ recurrence {rec:.1e}; scaling mismatches {scale}; csv identical {csv}"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("cross-method lorentzian agreement", Duration::from_secs(5), cross_method_lorentzian),
        ("detuned lorentzian anti-zeno", Duration::from_secs(5), qaze_detection),
        ("hydrogenlike boundary", Duration::from_secs(10), hydrogenlike_boundary),
        ("power-law sub/super-ohmic split", Duration::from_secs(10), power_law_split),
        ("minor-lobe correction quality", Duration::from_secs(10), minor_lobe_correction),
        ("main-lobe fraction", Duration::from_secs(1), main_lobe),
        ("oracle consistency", Duration::from_secs(60), oracle_consistency),
        ("short-time law", Duration::from_secs(1), short_time_law),
        ("property suites", Duration::from_secs(30), property_suites),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let elapsed = start.elapsed();
        let pass = o.pass && elapsed <= budget;
        if !pass {
            failed += 1;
        }
        println!(
            "{} [{}] {name}: {} ({:.2}s / {}s)",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
