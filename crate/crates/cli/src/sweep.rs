//! `sweep`: scaled Jensen divergences of `F` and `Z` next to their oracle
//! counterparts across a range of α, written as CSV.

use std::io::Write;

use expfam::oracle::{self, DensityFn};
use expfam::{jensen_scaled, FamilyModel, Generator, IntegrationScheme, Param, Skew};

use crate::input::{default_scheme, parse_family, parse_param, parse_scheme, resolve_seed};
use crate::json::fmt17;
use crate::output::{csv, write_atomic};
use crate::{CliError, SweepArgs, EXIT_OK};

pub const COLUMNS: [&str; 7] = [
    "alpha",
    "jensen_F_scaled",
    "bhattacharyya_oracle",
    "jensen_Z_scaled",
    "alpha_div_oracle",
    "err_F",
    "err_Z",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub jensen_f_scaled: f64,
    pub bhattacharyya_oracle: f64,
    pub jensen_z_scaled: f64,
    pub alpha_div_oracle: f64,
}

impl SweepRow {
    pub fn err_f(&self) -> f64 {
        (self.jensen_f_scaled - self.bhattacharyya_oracle).abs()
    }

    pub fn err_z(&self) -> f64 {
        (self.jensen_z_scaled - self.alpha_div_oracle).abs()
    }

    fn cells(&self) -> Vec<Option<String>> {
        [
            self.alpha,
            self.jensen_f_scaled,
            self.bhattacharyya_oracle,
            self.jensen_z_scaled,
            self.alpha_div_oracle,
            self.err_f(),
            self.err_z(),
        ]
        .iter()
        .map(|&v| Some(fmt17(v)))
        .collect()
    }
}

/// `steps` evenly spaced values from `lo` to `hi`, both included.
pub fn alpha_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect(),
    }
}

pub fn sweep_row(
    model: &FamilyModel,
    theta1: &Param,
    theta2: &Param,
    alpha: f64,
    scheme: &IntegrationScheme,
) -> Result<SweepRow, CliError> {
    let skew = Skew::from_alpha(alpha);
    let f = Generator::cumulant(model);
    let z = Generator::partition(model);
    let p = DensityFn::normalized(model, theta1)?;
    let q = DensityFn::normalized(model, theta2)?;
    let pu = DensityFn::unnormalized(model, theta1)?;
    let qu = DensityFn::unnormalized(model, theta2)?;
    Ok(SweepRow {
        alpha,
        jensen_f_scaled: jensen_scaled(&f, theta1, theta2, skew)?,
        bhattacharyya_oracle: oracle::bhattacharyya_scaled(&p, &q, alpha, scheme)?,
        jensen_z_scaled: jensen_scaled(&z, theta1, theta2, skew)?,
        alpha_div_oracle: oracle::alpha_div(&pu, &qu, alpha, scheme)?,
    })
}

pub fn run(args: &SweepArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let fam = parse_family(&args.family.family, args.family.dim)?;
    let model = &fam.model;
    let theta1 = match (&args.theta1, fam.theta) {
        (Some(t), _) => parse_param(model, t, args.family.source_param)?,
        (None, Some(t)) => t,
        (None, None) => return Err(CliError::usage("--theta1 is required unless the family JSON carries theta")),
    };
    let theta2 = parse_param(model, &args.theta2, args.family.source_param)?;
    let ok_range = args.alpha_min > 0.0 && args.alpha_max < 1.0 && args.alpha_min <= args.alpha_max;
    if !ok_range || args.steps == 0 {
        return Err(CliError::usage(format!(
            "alpha range must satisfy 0 < min <= max < 1 with at least one step, got [{}, {}] x {}",
            args.alpha_min, args.alpha_max, args.steps
        )));
    }
    let seed = resolve_seed(args.seed)?;
    let scheme = match &args.scheme {
        Some(s) => parse_scheme(s, seed)?,
        None => default_scheme(model, seed),
    };
    let mut alphas = alpha_grid(args.alpha_min, args.alpha_max, args.steps);
    if args.endpoints {
        alphas.insert(0, 0.0);
        alphas.push(1.0);
    }
    let mut rows = Vec::with_capacity(alphas.len());
    for a in alphas {
        rows.push(sweep_row(model, &theta1, &theta2, a, &scheme)?.cells());
    }
    write_atomic(&args.output, &csv(&COLUMNS, &rows))?;
    writeln!(out, "wrote {} rows to {}", rows.len(), args.output.display())?;
    Ok(EXIT_OK)
}
