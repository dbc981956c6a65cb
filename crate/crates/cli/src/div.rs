//! `div`: one closed-form divergence, optionally compared with the
//! quadrature oracle.

use std::io::Write;

use expfam::oracle::{self, DensityFn};
use expfam::{
    bregman, duo_bregman, jensen_scaled, jensen_skewed, mixed_alpha_div, mixed_bhattacharyya, FamilyDescriptor,
    FamilyModel, Generator, IntegrationScheme, Param, SchemeKind, Skew,
};
use serde::{Deserialize, Serialize};

use crate::input::{default_scheme, parse_family, parse_param, parse_scheme, resolve_seed};
use crate::{json, CliError, DivArgs, DivKind, EXIT_FAIL, EXIT_OK};

pub const DEFAULT_TOLERANCE: f64 = 1e-6;
/// Relative tolerance used when the oracle is a Monte-Carlo estimate.
pub const MC_TOLERANCE: f64 = 2e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportVerdict {
    Pass,
    Fail,
    OracleSkipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct Request {
    pub family: FamilyDescriptor,
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    pub kind: DivKind,
    pub alpha: Option<f64>,
    pub normalized: bool,
    pub oracle: bool,
    pub scheme: Option<IntegrationScheme>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DivergenceReport {
    pub request: Request,
    pub closed_form: f64,
    pub oracle: Option<f64>,
    pub abs_err: Option<f64>,
    pub rel_err: Option<f64>,
    pub tolerance: f64,
    pub verdict: ReportVerdict,
}

/// A fully resolved divergence request.
pub struct Query<'a> {
    pub model: &'a FamilyModel,
    pub theta1: &'a Param,
    pub theta2: &'a Param,
    pub kind: DivKind,
    pub alpha: Option<f64>,
    pub normalized: bool,
}

fn need_alpha(q: &Query, default: Option<f64>) -> Result<f64, CliError> {
    let a = q.alpha.or(default).ok_or_else(|| CliError::usage(format!("--alpha is required for {:?}", q.kind)))?;
    if !(0.0..=1.0).contains(&a) {
        return Err(CliError::usage(format!("alpha {a} outside [0, 1]")));
    }
    Ok(a)
}

fn need_interior(q: &Query, a: f64) -> Result<f64, CliError> {
    if a > 0.0 && a < 1.0 {
        Ok(a)
    } else {
        Err(CliError::usage(format!("{:?} needs alpha strictly inside (0, 1), got {a}", q.kind)))
    }
}

fn require_normalized(q: &Query) -> Result<(), CliError> {
    if q.normalized {
        Ok(())
    } else {
        Err(CliError::usage(format!("{:?} is defined for normalized densities only", q.kind)))
    }
}

/// Closed-form value from the family's generators.
pub fn closed_form(q: &Query) -> Result<f64, CliError> {
    let f = Generator::cumulant(q.model);
    let z = Generator::partition(q.model);
    let (t1, t2) = (q.theta1, q.theta2);
    let v = match q.kind {
        DivKind::Kl => {
            if q.normalized {
                bregman(&f, t2, t1)?
            } else {
                bregman(&z, t2, t1)?
            }
        }
        DivKind::Alpha => {
            let a = need_alpha(q, None)?;
            let skew = Skew::from_alpha(a);
            if !q.normalized {
                jensen_scaled(&z, t1, t2, skew)?
            } else if matches!(skew, Skew::Limit0 | Skew::Limit1) {
                jensen_scaled(&f, t1, t2, skew)?
            } else {
                -(-jensen_skewed(&f, t1, t2, a)?).exp_m1() / (a * (1.0 - a))
            }
        }
        DivKind::Hellinger => {
            if q.normalized {
                -(-jensen_skewed(&f, t1, t2, 0.5)?).exp_m1()
            } else {
                jensen_skewed(&z, t1, t2, 0.5)?
            }
        }
        DivKind::Bhattacharyya => {
            let a = need_alpha(q, Some(0.5))?;
            if q.normalized {
                jensen_scaled(&f, t1, t2, Skew::from_alpha(a))?
            } else {
                let a = need_interior(q, a)?;
                -f.value(&t1.mix(t2, a))? / (a * (1.0 - a))
            }
        }
        DivKind::Renyi => {
            require_normalized(q)?;
            let a = need_interior(q, need_alpha(q, None)?)?;
            jensen_skewed(&f, t1, t2, a)? / (1.0 - a)
        }
        DivKind::BregmanF => bregman(&f, t1, t2)?,
        DivKind::BregmanZ => bregman(&z, t1, t2)?,
        DivKind::MixedAlpha => {
            let a = need_interior(q, need_alpha(q, None)?)?;
            mixed_alpha_div(q.model, t1, t2, a)?
        }
        DivKind::MixedBhattacharyya => {
            let a = need_interior(q, need_alpha(q, None)?)?;
            mixed_bhattacharyya(q.model, t1, t2, a)?
        }
        DivKind::Duo => duo_bregman(&Generator::partition_minus_one(q.model), &f, t2, t1)?,
    };
    Ok(v)
}

/// The same divergence integrated directly from the densities.
pub fn oracle_value(q: &Query, scheme: &IntegrationScheme) -> Result<f64, CliError> {
    let m = q.model;
    let (t1, t2) = (q.theta1, q.theta2);
    let dens = |t: &Param, normalized: bool| {
        if normalized {
            DensityFn::normalized(m, t)
        } else {
            DensityFn::unnormalized(m, t)
        }
    };
    let p = dens(t1, q.normalized)?;
    let r = dens(t2, q.normalized)?;
    let v = match q.kind {
        DivKind::Kl => oracle::kl_extended(&p, &r, scheme)?,
        DivKind::Alpha => oracle::alpha_div(&p, &r, need_alpha(q, None)?, scheme)?,
        DivKind::Hellinger => oracle::hellinger_sq(&p, &r, scheme)?,
        DivKind::Bhattacharyya => oracle::bhattacharyya_scaled(&p, &r, need_alpha(q, Some(0.5))?, scheme)?,
        DivKind::Renyi => {
            let a = need_interior(q, need_alpha(q, None)?)?;
            oracle::renyi_div(&p, &r, a, scheme)?
        }
        DivKind::BregmanF => oracle::kl_extended(&dens(t2, true)?, &dens(t1, true)?, scheme)?,
        DivKind::BregmanZ => oracle::kl_extended(&dens(t2, false)?, &dens(t1, false)?, scheme)?,
        DivKind::MixedAlpha => {
            let a = need_interior(q, need_alpha(q, None)?)?;
            oracle::alpha_div(&dens(t1, true)?, &dens(t2, false)?, a, scheme)?
        }
        DivKind::MixedBhattacharyya => {
            let a = need_interior(q, need_alpha(q, None)?)?;
            -oracle::bhattacharyya_coeff(&dens(t1, true)?, &dens(t2, false)?, a, scheme)?.ln()
        }
        DivKind::Duo => oracle::kl_extended(&dens(t1, true)?, &dens(t2, false)?, scheme)?,
    };
    Ok(v)
}

pub fn run(args: &DivArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let fam = parse_family(&args.family.family, args.family.dim)?;
    let model = &fam.model;
    let theta1 = match (&args.theta1, fam.theta) {
        (Some(t), _) => parse_param(model, t, args.family.source_param)?,
        (None, Some(t)) => t,
        (None, None) => return Err(CliError::usage("--theta1 is required unless the family JSON carries theta")),
    };
    let theta2 = parse_param(model, &args.theta2, args.family.source_param)?;
    let seed = resolve_seed(args.seed)?;
    let scheme = match &args.scheme {
        Some(s) => parse_scheme(s, seed)?,
        None => default_scheme(model, seed),
    };
    let q = Query {
        model,
        theta1: &theta1,
        theta2: &theta2,
        kind: args.kind,
        alpha: args.alpha,
        normalized: !args.unnormalized,
    };
    let closed = closed_form(&q)?;
    let monte_carlo = scheme.kind == SchemeKind::MonteCarlo;
    let tolerance = args.tolerance.unwrap_or(if monte_carlo { MC_TOLERANCE } else { DEFAULT_TOLERANCE });
    if !(tolerance >= 0.0) {
        return Err(CliError::usage(format!("tolerance must be non-negative, got {tolerance}")));
    }
    let (oracle, abs_err, rel_err, verdict) = if args.oracle {
        let o = oracle_value(&q, &scheme)?;
        let abs = (closed - o).abs();
        let rel = if abs == 0.0 { 0.0 } else { abs / o.abs() };
        let ok = abs <= tolerance || rel <= tolerance;
        (Some(o), Some(abs), Some(rel), if ok { ReportVerdict::Pass } else { ReportVerdict::Fail })
    } else {
        (None, None, None, ReportVerdict::OracleSkipped)
    };
    let report = DivergenceReport {
        request: Request {
            family: FamilyDescriptor::new(model, None),
            theta1: theta1.to_f64(),
            theta2: theta2.to_f64(),
            kind: args.kind,
            alpha: args.alpha,
            normalized: q.normalized,
            oracle: args.oracle,
            scheme: args.oracle.then_some(scheme),
        },
        closed_form: closed,
        oracle,
        abs_err,
        rel_err,
        tolerance,
        verdict,
    };
    writeln!(out, "{}", json::to_string(&report))?;
    Ok(if verdict == ReportVerdict::Fail { EXIT_FAIL } else { EXIT_OK })
}
