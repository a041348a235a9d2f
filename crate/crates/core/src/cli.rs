//! Input schema, report envelopes and dispatch for the command-line front
//! end. Input files follow the profile JSON format; every report embeds the
//! seed and the calibration constants in effect.

use crate::averaging::{symmetrization_report, SphericalField};
use crate::curvature::{Calibration, CurvatureFrame};
use crate::dim::{make_dim, Dim};
use crate::error::{QcurvError, Result};
use crate::gbc::{
    f_lambda, lambda_df_dlambda, levelset_identity, levelset_kappa, multi_end_total,
    sigma2_level_integral, verify_gbc_rn, EndWindow, LevelFn, Verdict,
};
use crate::kernels::{kernel_table, verify_lemma2};
use crate::profile::{RadialProfile, Term, TermKind};
use crate::quad::QuadratureSpec;
use crate::radial::{analyze_end, decade_radii, EndLocation};
use crate::suite::run_suite;
use serde::{Deserialize, Serialize};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    pub n: usize,
    pub profile: ProfileSpec,
    #[serde(default)]
    pub field: Option<FieldSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Analytic {
        #[serde(default)]
        punctured_origin: bool,
        terms: Vec<TermSpec>,
    },
    Sampled {
        #[serde(default)]
        punctured_origin: bool,
        r: Vec<f64>,
        w: Vec<f64>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum TermSpec {
    #[serde(rename = "log1p_sq")]
    Log1pSq { c: f64, rho: f64 },
    #[serde(rename = "log")]
    Log { c: f64 },
    #[serde(rename = "power")]
    Power { c: f64, p: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    #[serde(default = "default_theta_nodes")]
    pub theta_nodes: usize,
    pub r_lo: f64,
    pub r_hi: f64,
    #[serde(default = "default_r_count")]
    pub r_count: usize,
    pub perturbations: Vec<PerturbationSpec>,
}

fn default_theta_nodes() -> usize {
    32
}
fn default_r_count() -> usize {
    50
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub cos_power: usize,
    #[serde(default)]
    pub terms: Vec<TermSpec>,
    #[serde(default)]
    pub bump: Option<BumpSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
}

impl InputSpec {
    pub fn parse(text: &str) -> Result<InputSpec> {
        serde_json::from_str(text).map_err(|e| QcurvError::Schema(e.to_string()))
    }

    pub fn dim(&self) -> Result<Dim> {
        make_dim(self.n)
    }

    pub fn profile(&self) -> Result<RadialProfile> {
        match &self.profile {
            ProfileSpec::Analytic {
                punctured_origin,
                terms,
            } => {
                let terms = terms.iter().map(term_from_spec).collect();
                RadialProfile::analytic(terms, *punctured_origin)
            }
            ProfileSpec::Sampled {
                punctured_origin,
                r,
                w,
            } => RadialProfile::from_samples(r, w, self.n, *punctured_origin),
        }
    }

    pub fn spherical_field(&self, dim: &Dim) -> Result<Option<SphericalField>> {
        let Some(fs) = &self.field else {
            return Ok(None);
        };
        let base = self.profile()?;
        let grid = decade_radii(fs.r_lo.max(1e-3), fs.r_hi, fs.r_count);
        let mut perturbations = Vec::new();
        for p in &fs.perturbations {
            let profile = if let Some(b) = &p.bump {
                // Even in r so the origin representation stays smooth.
                let (c2, w4, amp) = (b.center * b.center, b.width.powi(4), b.amplitude);
                RadialProfile::from_function(
                    &move |r: f64| amp * (-(r * r - c2) * (r * r - c2) / w4).exp(),
                    0.0,
                    fs.r_hi * 1.5,
                    self.n,
                    false,
                )?
            } else {
                RadialProfile::analytic(p.terms.iter().map(term_from_spec).collect(), false)?
            };
            perturbations.push((p.cos_power, profile));
        }
        Ok(Some(SphericalField::from_cos_powers(
            dim,
            &base,
            &perturbations,
            grid,
            fs.theta_nodes,
        )?))
    }
}

fn term_from_spec(t: &TermSpec) -> Term {
    match t {
        TermSpec::Log1pSq { c, rho } => Term {
            coeff: *c,
            kind: TermKind::Log1pSq { rho: *rho },
        },
        TermSpec::Log { c } => Term {
            coeff: *c,
            kind: TermKind::Log,
        },
        TermSpec::Power { c, p } => Term {
            coeff: *c,
            kind: TermKind::Power { p: *p },
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Envelope wrapping every JSON report with the run parameters and
/// calibration constants actually used.
#[derive(Debug, Serialize)]
pub struct Envelope<T: Serialize> {
    pub seed: u64,
    pub eps_quad: f64,
    pub r_max: f64,
    pub kappa_sigma: f64,
    pub kappa_over_cn: f64,
    pub div4_calib: f64,
    pub kappa_div: Option<f64>,
    pub kappa_levelset: Option<f64>,
    pub report: T,
}

pub struct RunConfig {
    pub seed: u64,
    pub spec: QuadratureSpec,
    pub format: OutputFormat,
}

fn envelope<T: Serialize>(cfg: &RunConfig, dim: &Dim, report: T) -> Result<Envelope<T>> {
    let calib = Calibration::compute(dim)?;
    let (kappa_div, kappa_ls) = if dim.n == 4 {
        (
            Some(crate::gbc::divergence_kappa(dim, &cfg.spec)?),
            Some(levelset_kappa(dim, &cfg.spec)?),
        )
    } else {
        (None, None)
    };
    Ok(Envelope {
        seed: cfg.seed,
        eps_quad: cfg.spec.eps_quad,
        r_max: cfg.spec.r_max,
        kappa_sigma: calib.kappa_sigma,
        kappa_over_cn: calib.kappa_over_cn,
        div4_calib: calib.div4_calib,
        kappa_div,
        kappa_levelset: kappa_ls,
        report,
    })
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| QcurvError::Schema(e.to_string()))
}

/// Exit status conventions: 0 success, 1 numerical failure or violated
/// verdict, 2 schema violation.
pub struct CommandOutput {
    pub text: String,
    pub exit_code: i32,
}

pub fn run_curvature(input: &InputSpec, cfg: &RunConfig, radii: &[f64]) -> Result<CommandOutput> {
    let dim = input.dim()?;
    let p = input.profile()?;
    let calib = Calibration::compute(&dim)?;
    let radii: Vec<f64> = if radii.is_empty() {
        let (lo, hi) = p.hull();
        let lo = lo.max(if p.punctured() { 0.05 } else { 0.0 });
        let hi = hi.min(cfg.spec.r_max);
        (0..33).map(|i| lo + (hi - lo) * i as f64 / 32.0).collect()
    } else {
        radii.to_vec()
    };
    let mut frames = Vec::with_capacity(radii.len());
    for &r in &radii {
        frames.push(CurvatureFrame::at(&p, &dim, r, &calib)?);
    }
    let text = match cfg.format {
        OutputFormat::Json => to_json(&envelope(cfg, &dim, &frames)?)?,
        OutputFormat::Csv => {
            let mut s = String::from("r,w,scalar,j,q,sigma_m,pfaff_sigma\n");
            for f in &frames {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    f.r,
                    f.w,
                    f.scalar,
                    f.j_invariant,
                    f.q,
                    f.sigma[f.sigma.len() - 1],
                    f.pfaff_sigma
                ));
            }
            s
        }
    };
    Ok(CommandOutput { text, exit_code: 0 })
}

#[derive(Serialize)]
struct KernelsReport {
    lemma2: crate::kernels::Lemma2Report,
    table_r: Vec<f64>,
    table_s: Vec<f64>,
}

pub fn run_kernels(input: &InputSpec, cfg: &RunConfig, grid_count: usize) -> Result<CommandOutput> {
    let dim = input.dim()?;
    let count = grid_count.max(4);
    let r_grid: Vec<f64> = (0..count)
        .map(|i| 0.4 + 11.6 * i as f64 / (count - 1) as f64)
        .collect();
    let s_grid: Vec<f64> = (0..count)
        .map(|i| 0.47 + 11.9 * i as f64 / (count - 1) as f64)
        .collect();
    let lemma2 = verify_lemma2(&dim, &r_grid, &s_grid, &cfg.spec)?;
    let text = match cfg.format {
        OutputFormat::Json => to_json(&envelope(
            cfg,
            &dim,
            &KernelsReport {
                lemma2,
                table_r: r_grid,
                table_s: s_grid,
            },
        )?)?,
        OutputFormat::Csv => {
            let table = kernel_table(&dim, &r_grid, &s_grid, &cfg.spec)?;
            let mut s = String::from("r,s,ii,g,log\n");
            for (i, &r) in table.r_grid.iter().enumerate() {
                for (j, &sv) in table.s_grid.iter().enumerate() {
                    s.push_str(&format!(
                        "{},{},{},{},{}\n",
                        r, sv, table.ii[i][j], table.g[i][j], table.log[i][j]
                    ));
                }
            }
            s
        }
    };
    Ok(CommandOutput { text, exit_code: 0 })
}

#[derive(Serialize)]
struct EndReport {
    location: String,
    c1: f64,
    complete: bool,
    borderline: bool,
    equality_case: bool,
}

pub fn run_ends(input: &InputSpec, cfg: &RunConfig) -> Result<CommandOutput> {
    let dim = input.dim()?;
    let p = input.profile()?;
    let mut reports = Vec::new();
    let mut locations = vec![EndLocation::Infinity];
    if p.punctured() {
        locations.push(EndLocation::Origin);
    }
    for loc in locations {
        let spec = analyze_end(&p, loc)?;
        let equality = crate::radial::equality_case_check(&p, &dim)?;
        reports.push(EndReport {
            location: match loc {
                EndLocation::Origin => "origin".into(),
                EndLocation::Infinity => "infinity".into(),
            },
            c1: spec.c1,
            complete: spec.completeness.is_complete(),
            borderline: matches!(
                spec.completeness,
                crate::radial::Completeness::BorderlineResolved { .. }
            ),
            equality_case: equality,
        });
    }
    let text = to_json(&envelope(cfg, &dim, &reports)?)?;
    Ok(CommandOutput { text, exit_code: 0 })
}

pub fn run_symmetrize(input: &InputSpec, cfg: &RunConfig) -> Result<CommandOutput> {
    let dim = input.dim()?;
    let field = input.spherical_field(&dim)?.ok_or_else(|| {
        QcurvError::Schema("symmetrize needs a \"field\" block in the input".into())
    })?;
    let (wbar, report) = symmetrization_report(&field, &dim)?;
    let text = match cfg.format {
        OutputFormat::Json => to_json(&envelope(cfg, &dim, &report)?)?,
        OutputFormat::Csv => {
            let mut s = String::from("r,ratio,w_bar\n");
            for (r, ratio) in &report.claim2_ratio {
                s.push_str(&format!("{},{},{}\n", r, ratio, wbar.value(*r)?));
            }
            s
        }
    };
    Ok(CommandOutput { text, exit_code: 0 })
}

pub fn run_gbc_verify(input: &InputSpec, cfg: &RunConfig) -> Result<CommandOutput> {
    let dim = input.dim()?;
    let p = input.profile()?;
    if p.punctured() {
        // Multi-end route: the puncture plus the end at infinity.
        let ends = vec![
            EndWindow {
                end: analyze_end(&p, EndLocation::Origin)?,
                inner: 0.8,
                outer: 1.6,
            },
            EndWindow {
                end: analyze_end(&p, EndLocation::Infinity)?,
                inner: 6.4,
                outer: 3.2,
            },
        ];
        let rep = multi_end_total(&p, &ends, &dim, &cfg.spec)?;
        let code = if rep.verdict == Verdict::Violated { 1 } else { 0 };
        let text = to_json(&envelope(cfg, &dim, &rep)?)?;
        return Ok(CommandOutput {
            text,
            exit_code: code,
        });
    }
    let mut rep = verify_gbc_rn(&p, &dim, &cfg.spec)?;
    // Surface the stronger pointwise flags alongside the basic hypotheses.
    let flags =
        crate::gbc::check_hypotheses(&p, &dim, crate::gbc::HypothesisMode::A4, &cfg.spec)?;
    rep.a4 = flags.a4;
    let code = if rep.verdict == Verdict::Violated { 1 } else { 0 };
    let text = to_json(&envelope(cfg, &dim, &rep)?)?;
    Ok(CommandOutput {
        text,
        exit_code: code,
    })
}

#[derive(Serialize)]
struct LevelSetRow {
    lambda: f64,
    r_of_lambda: f64,
    f_value: f64,
    lhs: f64,
    rhs: f64,
    defect: f64,
    lambda_df: f64,
    kappa_sigma2: f64,
}

pub fn run_levelset(input: &InputSpec, cfg: &RunConfig, lambdas: &[f64]) -> Result<CommandOutput> {
    let dim = input.dim()?;
    if dim.n != 4 {
        return Err(QcurvError::Dimension(
            "level-set checks require n = 4".into(),
        ));
    }
    let p = input.profile()?;
    let lambdas: Vec<f64> = if lambdas.is_empty() {
        vec![0.3, 0.45, 0.6, 0.75, 0.9]
    } else {
        lambdas.to_vec()
    };
    let kappa = levelset_kappa(&dim, &cfg.spec)?;
    let truncation = if p.punctured() { 0.05 } else { 0.0 };
    let mut rows = Vec::new();
    for &lam in &lambdas {
        let frame = f_lambda(&p, lam, truncation, &dim, &cfg.spec)?;
        let (lhs, rhs, defect) = levelset_identity(&p, LevelFn::Lambda, lam, &dim, &cfg.spec)?;
        let df = lambda_df_dlambda(&p, lam, truncation, &dim, &cfg.spec)?;
        let s2 = sigma2_level_integral(&p, lam, truncation, &dim, &cfg.spec)?;
        rows.push(LevelSetRow {
            lambda: lam,
            r_of_lambda: frame.r_of_lambda,
            f_value: frame.f_value,
            lhs,
            rhs,
            defect,
            lambda_df: df,
            kappa_sigma2: kappa * s2,
        });
    }
    let text = match cfg.format {
        OutputFormat::Json => to_json(&envelope(cfg, &dim, &rows)?)?,
        OutputFormat::Csv => {
            let mut s = String::from("lambda,r,f,lhs,rhs,defect,lambda_df,kappa_sigma2\n");
            for row in &rows {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    row.lambda,
                    row.r_of_lambda,
                    row.f_value,
                    row.lhs,
                    row.rhs,
                    row.defect,
                    row.lambda_df,
                    row.kappa_sigma2
                ));
            }
            s
        }
    };
    Ok(CommandOutput { text, exit_code: 0 })
}

pub fn run_suite_command(cfg: &RunConfig) -> Result<CommandOutput> {
    let report = run_suite(cfg.seed, &cfg.spec, false)?;
    // Progress lines go to stderr so stdout stays parseable JSON.
    for c in &report.criteria {
        eprintln!(
            "criterion {:2} [{}] {}: {} ({:.2}s)",
            c.id,
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail,
            c.seconds
        );
    }
    let code = if report.all_passed { 0 } else { 1 };
    let text = to_json(&report)?;
    Ok(CommandOutput {
        text,
        exit_code: code,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> RunConfig {
        RunConfig {
            seed: 7,
            spec: QuadratureSpec::default(),
            format: OutputFormat::Json,
        }
    }

    #[test]
    fn parses_spec_format() {
        let text = r#"{"n": 4, "profile": {"type": "analytic", "punctured_origin": false,
            "terms": [{"kind": "log1p_sq", "c": -0.5, "rho": 1.0}]}}"#;
        let input = InputSpec::parse(text).unwrap();
        let p = input.profile().unwrap();
        assert!((p.value(1.0).unwrap() + 0.5 * 2.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn rejects_unknown_fields() {
        let text = r#"{"n": 4, "bogus": 1, "profile": {"type": "analytic", "terms": []}}"#;
        assert!(matches!(
            InputSpec::parse(text),
            Err(QcurvError::Schema(_))
        ));
    }

    #[test]
    fn sampled_schema() {
        // Geometric grids are what the sampled-profile contract recommends.
        let r = crate::profile::recommended_grid(20.0, 120);
        let w: Vec<f64> = r.iter().map(|&x| -0.5 * (1.0 + x * x).ln()).collect();
        let text = format!(
            r#"{{"n": 4, "profile": {{"type": "sampled", "punctured_origin": false, "r": {:?}, "w": {:?}}}}}"#,
            r, w
        );
        let input = InputSpec::parse(&text).unwrap();
        let p = input.profile().unwrap();
        assert!((p.value(2.0).unwrap() + 0.5 * 5.0f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn gbc_verify_reports_equality_for_a_minus_one() {
        let text = r#"{"n": 4, "profile": {"type": "analytic",
            "terms": [{"kind": "log1p_sq", "c": -0.5, "rho": 1.0}]}}"#;
        let input = InputSpec::parse(text).unwrap();
        let out = run_gbc_verify(&input, &cfg()).unwrap();
        assert_eq!(out.exit_code, 0);
        assert!(out.text.contains("\"verdict\": \"Satisfied\""));
        assert!(out.text.contains("\"equality_observed\": true"));
    }

    #[test]
    fn curvature_flat_all_zero() {
        let text = r#"{"n": 4, "profile": {"type": "analytic", "terms": []}}"#;
        let input = InputSpec::parse(text).unwrap();
        let out = run_curvature(&input, &cfg(), &[0.5, 1.0]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out.text).unwrap();
        for frame in v["report"].as_array().unwrap() {
            assert_eq!(frame["scalar"].as_f64().unwrap(), 0.0);
            assert_eq!(frame["q"].as_f64().unwrap(), 0.0);
        }
    }

    #[test]
    fn determinism_byte_identical() {
        let text = r#"{"n": 4, "profile": {"type": "analytic",
            "terms": [{"kind": "log1p_sq", "c": -0.4, "rho": 1.3}]}}"#;
        let input = InputSpec::parse(text).unwrap();
        let a = run_gbc_verify(&input, &cfg()).unwrap();
        let b = run_gbc_verify(&input, &cfg()).unwrap();
        assert_eq!(a.text, b.text);
    }
}
