//! `deform`: convexity verdicts of deformed generators `tau^-1 o G o rho`,
//! either along the power family `tau = inverse(power(p))` or for one
//! explicit pair of mean generators.

use std::io::Write;

use expfam::deformation::{convexity_certificate, default_step, deform, deformed_divergences};
use expfam::{DeformationSpec, FamilyModel, Generator, MeanGenerator, Param, Verdict};
use serde::Serialize;

use crate::input::{parse_family, parse_param, parse_reals};
use crate::json::{self, fmt17};
use crate::output::{csv, write_atomic};
use crate::{CliError, DeformArgs, GeneratorChoice, EXIT_OK};

pub const COLUMNS: [&str; 7] = ["p", "rho", "tau", "verdict", "worst_curvature", "worst_jensen_gap", "bregman"];

#[derive(Debug, Clone, Serialize)]
pub struct DeformRow {
    pub p: Option<f64>,
    pub rho: MeanGenerator,
    pub tau: MeanGenerator,
    pub verdict: Verdict,
    pub worst_curvature: f64,
    pub worst_jensen_gap: f64,
    /// `B_g(theta1 : theta2)`, present only for convex rows.
    pub bregman: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeformReport {
    pub family: String,
    pub generator: GeneratorChoice,
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    pub grid: Vec<Vec<f64>>,
    pub rows: Vec<DeformRow>,
}

/// The spec `(identity, inverse(power(p)))`, whose deformed generator is
/// `h_p o G`.
pub fn power_spec(p: f64) -> DeformationSpec {
    DeformationSpec::new(MeanGenerator::Identity, MeanGenerator::power(p).inverse())
}

/// Inclusive arithmetic range; the last value is snapped onto `hi` when it
/// lands within rounding distance.
pub fn p_range(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(step > 0.0) || !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(CliError::usage(format!("invalid p range [{lo}, {hi}] with step {step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    if n > 100_000 {
        return Err(CliError::usage("p range has too many points"));
    }
    Ok((0..=n).map(|i| lo + step * i as f64).collect())
}

pub fn generator(model: &FamilyModel, choice: GeneratorChoice) -> Generator {
    match choice {
        GeneratorChoice::Cumulant => Generator::cumulant(model),
        GeneratorChoice::Partition => Generator::partition(model),
    }
}

pub fn deform_row(
    base: &Generator,
    spec: &DeformationSpec,
    p: Option<f64>,
    grid: &[Vec<f64>],
    theta1: &Param,
    theta2: &Param,
) -> Result<DeformRow, CliError> {
    let g = deform(base, spec);
    let inside: Vec<Vec<f64>> = grid.iter().filter(|x| g.contains(x)).cloned().collect();
    if inside.is_empty() {
        return Err(CliError::usage(format!("no grid point lies in the domain of {}", g.name())));
    }
    let cert = convexity_certificate(&g, &inside, default_step(&inside))?;
    let bregman = if cert.verdict == Verdict::Convex {
        match deformed_divergences(base, spec, theta1, theta2, 0.5) {
            Ok(d) => Some(d.bregman),
            Err(expfam::Error::NotConvex(_)) | Err(expfam::Error::Domain { .. }) => None,
            Err(e) => return Err(e.into()),
        }
    } else {
        None
    };
    Ok(DeformRow {
        p,
        rho: spec.rho.clone(),
        tau: spec.tau.clone(),
        verdict: cert.verdict,
        worst_curvature: cert.worst_curvature,
        worst_jensen_gap: cert.worst_jensen_gap,
        bregman,
    })
}

fn parse_grid(model: &FamilyModel, text: &str) -> Result<Vec<Vec<f64>>, CliError> {
    let scalar = model.order() == 1;
    if scalar && !text.contains(';') {
        return Ok(parse_reals(text)?.into_iter().map(|v| vec![v]).collect());
    }
    text.split(';').filter(|s| !s.trim().is_empty()).map(parse_reals).collect()
}

fn parse_mean(text: &str) -> Result<MeanGenerator, CliError> {
    let json = if text.trim_start().starts_with('{') {
        text.to_string()
    } else {
        format!(r#"{{"tag":"{}"}}"#, text.trim())
    };
    serde_json::from_str(&json).map_err(|e| CliError::usage(format!("mean generator '{text}': {e}")))
}

pub fn run(args: &DeformArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let fam = parse_family(&args.family.family, args.family.dim)?;
    let model = &fam.model;
    let base = generator(model, args.generator);
    let grid = match &args.grid {
        Some(g) => parse_grid(model, g)?,
        None => model.sample_grid::<f64>().iter().map(|t| t.to_f64()).collect(),
    };
    let mid = grid.len() / 2;
    let pick = |flag: &Option<String>, fallback: usize| -> Result<Param, CliError> {
        match flag {
            Some(t) => parse_param(model, t, args.family.source_param),
            None => Ok(model.param(grid[fallback].clone())?),
        }
    };
    if grid.is_empty() {
        return Err(CliError::usage("empty grid"));
    }
    let theta1 = pick(&args.theta1, mid.saturating_sub(1))?;
    let theta2 = pick(&args.theta2, mid.min(grid.len() - 1))?;

    let rows = if args.rho.is_some() || args.tau.is_some() {
        let rho = args.rho.as_deref().map(parse_mean).transpose()?.unwrap_or(MeanGenerator::Identity);
        let tau = args.tau.as_deref().map(parse_mean).transpose()?.unwrap_or(MeanGenerator::Identity);
        vec![deform_row(&base, &DeformationSpec::new(rho, tau), None, &grid, &theta1, &theta2)?]
    } else {
        p_range(args.p_min, args.p_max, args.p_step)?
            .into_iter()
            .map(|p| deform_row(&base, &power_spec(p), Some(p), &grid, &theta1, &theta2))
            .collect::<Result<Vec<_>, _>>()?
    };

    let report = DeformReport {
        family: model.name(),
        generator: args.generator,
        theta1: theta1.to_f64(),
        theta2: theta2.to_f64(),
        grid,
        rows,
    };
    match &args.output {
        None => writeln!(out, "{}", json::to_string(&report))?,
        Some(path) => {
            let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
            let text = if is_csv {
                let cells: Vec<Vec<Option<String>>> = report
                    .rows
                    .iter()
                    .map(|r| {
                        vec![
                            r.p.map(fmt17),
                            Some(r.rho.to_string()),
                            Some(r.tau.to_string()),
                            Some(r.verdict.to_string()),
                            Some(fmt17(r.worst_curvature)),
                            Some(fmt17(r.worst_jensen_gap)),
                            r.bregman.map(fmt17),
                        ]
                    })
                    .collect();
                csv(&COLUMNS, &cells)
            } else {
                json::to_string(&report) + "\n"
            };
            write_atomic(path, &text)?;
            writeln!(out, "wrote {} rows to {}", report.rows.len(), path.display())?;
        }
    }
    Ok(EXIT_OK)
}
