//! Parsing of family descriptors, parameters, schemes and seeds.

use std::path::Path;

use expfam::{make_family, FamilyDescriptor, FamilyKind, FamilyModel, IntegrationScheme, Param, SchemeKind};

use crate::CliError;

/// Seed used when neither `--seed` nor `EXPFAM_SEED` is given.
pub const DEFAULT_SEED: u64 = 42;

/// Monte-Carlo sample count for observation spaces above three dimensions.
pub const MC_SAMPLES: usize = 100_000;

/// A family together with the parameter carried by its descriptor, if any.
pub struct FamilyInput {
    pub model: FamilyModel,
    pub theta: Option<Param>,
}

/// Accepts a family name (`exponential`), an inline JSON descriptor, or the
/// path of a JSON descriptor file. `dim` overrides the descriptor dimension.
pub fn parse_family(spec: &str, dim: Option<usize>) -> Result<FamilyInput, CliError> {
    let trimmed = spec.trim();
    let descriptor: FamilyDescriptor = if trimmed.starts_with('{') {
        serde_json::from_str(trimmed).map_err(|e| CliError::usage(format!("family JSON: {e}")))?
    } else if let Ok(kind) = trimmed.parse::<FamilyKind>() {
        FamilyDescriptor { kind, dim: 1, theta: None }
    } else if Path::new(trimmed).is_file() {
        let text = std::fs::read_to_string(trimmed)
            .map_err(|e| CliError::usage(format!("reading {trimmed}: {e}")))?;
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("family JSON in {trimmed}: {e}")))?
    } else {
        return Err(CliError::usage(format!("unknown family '{trimmed}'")));
    };
    let descriptor = match dim {
        Some(d) => FamilyDescriptor { dim: d, ..descriptor },
        None => descriptor,
    };
    let model = descriptor.model()?;
    let theta = descriptor.param()?;
    Ok(FamilyInput { model, theta })
}

/// Comma or whitespace separated reals.
pub fn parse_reals(text: &str) -> Result<Vec<f64>, CliError> {
    let values: Result<Vec<f64>, _> = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(str::parse::<f64>)
        .collect();
    let values = values.map_err(|e| CliError::usage(format!("bad number list '{text}': {e}")))?;
    if values.is_empty() {
        return Err(CliError::usage(format!("empty number list '{text}'")));
    }
    Ok(values)
}

/// A natural parameter, or a conventional one converted when `source` is set.
pub fn parse_param(model: &FamilyModel, text: &str, source: bool) -> Result<Param, CliError> {
    let v = parse_reals(text)?;
    let p = if source { model.natural_from_source(&v)? } else { model.param(v)? };
    Ok(p)
}

pub fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("EXPFAM_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("EXPFAM_SEED is not an unsigned integer: '{v}'"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

/// The integration scheme for a family: adaptive quadrature by default and
/// Monte-Carlo when the observation space has more than three dimensions.
pub fn default_scheme(model: &FamilyModel, seed: u64) -> IntegrationScheme {
    let obs = model.support::<f64>().obs_dim();
    if obs > 3 {
        IntegrationScheme::monte_carlo(seed, MC_SAMPLES)
    } else if obs > 1 {
        IntegrationScheme { seed, ..IntegrationScheme::default() }.with_kind(SchemeKind::TensorQuadrature)
    } else {
        IntegrationScheme { seed, ..IntegrationScheme::default() }
    }
}

/// An explicit scheme as inline JSON or a JSON file; its seed is replaced by
/// the resolved seed unless the JSON sets one.
pub fn parse_scheme(text: &str, seed: u64) -> Result<IntegrationScheme, CliError> {
    let trimmed = text.trim();
    let json = if trimmed.starts_with('{') {
        trimmed.to_string()
    } else {
        std::fs::read_to_string(trimmed).map_err(|e| CliError::usage(format!("reading {trimmed}: {e}")))?
    };
    let value: serde_json::Value =
        serde_json::from_str(&json).map_err(|e| CliError::usage(format!("scheme JSON: {e}")))?;
    let has_seed = value.get("seed").is_some();
    let mut scheme: IntegrationScheme =
        serde_json::from_value(value).map_err(|e| CliError::usage(format!("scheme JSON: {e}")))?;
    if !has_seed {
        scheme.seed = seed;
    }
    scheme.validate()?;
    Ok(scheme)
}

pub fn family(kind: FamilyKind, dim: usize) -> FamilyModel {
    make_family(kind, dim).expect("built-in family dimensions are valid")
}
