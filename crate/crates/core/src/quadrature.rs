//! Numerical integration against the reference measures of the built-in
//! families.
//!
//! * one-dimensional Lebesgue supports: adaptive Gauss-Kronrod (7/15) after
//!   mapping `[0, inf)` with `x = s t/(1-t)` and `R` with `x = s t/(1-t^2)`;
//! * `R^d`, `d <= 3`: tensor Gauss-Legendre on the mapped cube, refined by
//!   doubling the node count;
//! * `R^d`, `d > 3`: importance sampling from an isotropic normal proposal;
//! * countable supports: direct summation with a geometric tail bound.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{CountingMeasure, Support};
use crate::scalar::{c, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    AdaptiveQuadrature,
    TensorQuadrature,
    MonteCarlo,
    SeriesSum,
}

/// Integration settings.
///
/// Countable supports are always summed; `kind` selects the rule for
/// continuous supports. An adaptive request on `R^d` falls back to the
/// tensor rule for `d <= 3` and to Monte-Carlo above. For Monte-Carlo,
/// `max_evals` is the sample count and the tolerances are not enforced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationScheme {
    pub kind: SchemeKind,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_evals: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_tail_cut")]
    pub tail_cut: f64,
}

fn default_seed() -> u64 {
    42
}

fn default_tail_cut() -> f64 {
    1e-12
}

impl Default for IntegrationScheme {
    fn default() -> Self {
        Self {
            kind: SchemeKind::AdaptiveQuadrature,
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_evals: 1_000_000,
            seed: default_seed(),
            tail_cut: default_tail_cut(),
        }
    }
}

impl IntegrationScheme {
    pub fn with_kind(mut self, kind: SchemeKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn monte_carlo(seed: u64, samples: usize) -> Self {
        Self {
            kind: SchemeKind::MonteCarlo,
            max_evals: samples,
            seed,
            ..Self::default()
        }
    }

    /// Derive a call-site specific seed so that independent integrals never
    /// share a random stream.
    pub fn tagged(mut self, tag: u64) -> Self {
        self.seed = splitmix64(self.seed ^ splitmix64(tag));
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.abs_tol > 0.0
            && self.rel_tol > 0.0
            && self.tail_cut > 0.0
            && self.max_evals > 0
            && self.abs_tol.is_finite()
            && self.rel_tol.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidScheme(format!("{self:?}")))
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable string tag for [`IntegrationScheme::tagged`].
pub fn tag_of(name: &str) -> u64 {
    name.bytes()
        .fold(0xcbf2_9ce4_8422_2325_u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<T> {
    pub value: T,
    pub err_estimate: T,
    pub evals: usize,
}

/// Integrate `f` against the reference measure of `support`.
pub fn integrate<T, F>(f: F, support: &Support<T>, scheme: &IntegrationScheme) -> Result<Integral<T>>
where
    T: Real,
    F: Fn(&[T]) -> T,
{
    scheme.validate()?;
    match *support {
        Support::Naturals { measure } => series_sum(&f, measure, scheme),
        Support::Binary => {
            let v = f(&[T::zero()]) + f(&[T::one()]);
            finite_or_fail(Integral { value: v, err_estimate: T::zero(), evals: 2 })
        }
        Support::HalfLine { scale } => match scheme.kind {
            SchemeKind::TensorQuadrature => tensor(&f, 1, scale, true, scheme),
            _ => adaptive_half_line(&f, scale, scheme),
        },
        Support::RealLine { scale } => match scheme.kind {
            SchemeKind::TensorQuadrature => tensor(&f, 1, scale, false, scheme),
            SchemeKind::MonteCarlo => monte_carlo(&f, 1, scale, scheme),
            _ => adaptive_real_line(&f, scale, scheme),
        },
        Support::RealSpace { dim, scale } => match scheme.kind {
            SchemeKind::MonteCarlo => monte_carlo(&f, dim, scale, scheme),
            SchemeKind::TensorQuadrature => tensor(&f, dim, scale, false, scheme),
            _ if dim == 1 => adaptive_real_line(&f, scale, scheme),
            _ if dim <= 3 => tensor(&f, dim, scale, false, scheme),
            _ => monte_carlo(&f, dim, scale, scheme),
        },
    }
}

fn finite_or_fail<T: Real>(r: Integral<T>) -> Result<Integral<T>> {
    if r.value.is_finite() && r.err_estimate.is_finite() {
        Ok(r)
    } else {
        Err(Error::Integration {
            evals: r.evals,
            estimate: r.value.as_f64(),
            error: r.err_estimate.as_f64(),
        })
    }
}

// ---------------------------------------------------------------------------
// adaptive Gauss-Kronrod

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

struct Segment<T> {
    a: T,
    b: T,
    value: T,
    err: T,
}

impl<T: Real> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<T: Real> Eq for Segment<T> {}
impl<T: Real> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.partial_cmp(&other.err).unwrap_or(Ordering::Equal)
    }
}

fn gk15<T: Real, G: Fn(T) -> T>(g: &G, a: T, b: T) -> (T, T) {
    let half = c::<T>(0.5);
    let center = half * (a + b);
    let hl = half * (b - a);
    let fc = g(center);
    let mut kron = fc * c(WGK[7]);
    let mut gauss = fc * c(WG[3]);
    for j in 0..7 {
        let dx = hl * c(XGK[j]);
        let s = g(center - dx) + g(center + dx);
        kron = kron + c::<T>(WGK[j]) * s;
        if j % 2 == 1 {
            gauss = gauss + c::<T>(WG[j / 2]) * s;
        }
    }
    (kron * hl, ((kron - gauss) * hl).abs())
}

/// Adaptive integration of `g` over the finite interval `[a, b]`.
pub fn adaptive_interval<T: Real, G: Fn(T) -> T>(
    g: &G,
    a: T,
    b: T,
    scheme: &IntegrationScheme,
) -> Result<Integral<T>> {
    const INITIAL_PIECES: usize = 8;
    let mut heap = BinaryHeap::new();
    let width = (b - a) / c(INITIAL_PIECES as f64);
    let mut total = T::zero();
    let mut total_err = T::zero();
    let mut evals = 0usize;
    for i in 0..INITIAL_PIECES {
        let lo = a + width * c(i as f64);
        let hi = if i + 1 == INITIAL_PIECES { b } else { lo + width };
        let (v, e) = gk15(g, lo, hi);
        evals += 15;
        total = total + v;
        total_err = total_err + e;
        heap.push(Segment { a: lo, b: hi, value: v, err: e });
    }
    let abs_tol = c::<T>(scheme.abs_tol);
    let rel_tol = c::<T>(scheme.rel_tol);
    loop {
        if !total.is_finite() || !total_err.is_finite() {
            return Err(Error::Integration {
                evals,
                estimate: total.as_f64(),
                error: total_err.as_f64(),
            });
        }
        if total_err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(Integral { value: total, err_estimate: total_err, evals });
        }
        if evals + 30 > scheme.max_evals {
            return Err(Error::Integration {
                evals,
                estimate: total.as_f64(),
                error: total_err.as_f64(),
            });
        }
        let worst = heap.pop().expect("non-empty segment heap");
        let mid = c::<T>(0.5) * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Interval exhausted at machine precision; nothing more to gain.
            return Err(Error::Integration {
                evals,
                estimate: total.as_f64(),
                error: total_err.as_f64(),
            });
        }
        let (v1, e1) = gk15(g, worst.a, mid);
        let (v2, e2) = gk15(g, mid, worst.b);
        evals += 30;
        total = total - worst.value + v1 + v2;
        total_err = total_err - worst.err + e1 + e2;
        heap.push(Segment { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, err: e2 });
        // Re-sum occasionally so cancellation in the running totals cannot drift.
        if evals % 3000 < 30 {
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.err).sum();
        }
    }
}

/// `h(x) * jacobian`, treating vanishing integrand values as exact zeros.
#[inline]
fn weighted<T: Real>(fx: T, jac: T) -> T {
    if fx == T::zero() || !jac.is_finite() {
        T::zero()
    } else {
        fx * jac
    }
}

fn adaptive_half_line<T: Real, F: Fn(&[T]) -> T>(
    f: &F,
    scale: T,
    scheme: &IntegrationScheme,
) -> Result<Integral<T>> {
    let g = |t: T| {
        let one_m = T::one() - t;
        let x = scale * t / one_m;
        if !x.is_finite() {
            return T::zero();
        }
        weighted(f(&[x]), scale / (one_m * one_m))
    };
    adaptive_interval(&g, T::zero(), T::one(), scheme)
}

fn real_line_map<T: Real>(t: T, scale: T) -> (T, T) {
    let d = T::one() - t * t;
    (scale * t / d, scale * (T::one() + t * t) / (d * d))
}

fn adaptive_real_line<T: Real, F: Fn(&[T]) -> T>(
    f: &F,
    scale: T,
    scheme: &IntegrationScheme,
) -> Result<Integral<T>> {
    let g = |t: T| {
        let (x, jac) = real_line_map(t, scale);
        if !x.is_finite() {
            return T::zero();
        }
        weighted(f(&[x]), jac)
    };
    adaptive_interval(&g, -T::one(), T::one(), scheme)
}

// ---------------------------------------------------------------------------
// tensor Gauss-Legendre

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0_f64, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = c(-x);
        nodes[n - 1 - i] = c(x);
        weights[i] = c(w);
        weights[n - 1 - i] = c(w);
    }
    (nodes, weights)
}

fn tensor_rule<T: Real, F: Fn(&[T]) -> T>(
    f: &F,
    dim: usize,
    scale: T,
    half_line: bool,
    n: usize,
) -> T {
    let (nodes, weights) = gauss_legendre::<T>(n);
    // Map each 1D node once.
    let mapped: Vec<(T, T)> = nodes
        .iter()
        .zip(&weights)
        .map(|(&t, &w)| {
            if half_line {
                // [-1,1] -> [0,1) -> [0, inf)
                let u = c::<T>(0.5) * (t + T::one());
                let one_m = T::one() - u;
                (scale * u / one_m, w * c::<T>(0.5) * scale / (one_m * one_m))
            } else {
                let (x, jac) = real_line_map(t, scale);
                (x, w * jac)
            }
        })
        .collect();
    let mut idx = vec![0usize; dim];
    let mut x = vec![T::zero(); dim];
    let mut total = T::zero();
    loop {
        let mut wprod = T::one();
        for k in 0..dim {
            x[k] = mapped[idx[k]].0;
            wprod = wprod * mapped[idx[k]].1;
        }
        total = total + weighted(f(&x), wprod);
        let mut k = 0;
        loop {
            if k == dim {
                return total;
            }
            idx[k] += 1;
            if idx[k] < n {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn tensor<T: Real, F: Fn(&[T]) -> T>(
    f: &F,
    dim: usize,
    scale: T,
    half_line: bool,
    scheme: &IntegrationScheme,
) -> Result<Integral<T>> {
    let abs_tol = c::<T>(scheme.abs_tol);
    let rel_tol = c::<T>(scheme.rel_tol);
    let mut n = 16usize;
    let mut evals = n.pow(dim as u32);
    let mut prev = tensor_rule(f, dim, scale, half_line, n);
    loop {
        let next_n = 2 * n;
        let cost = next_n.pow(dim as u32);
        if evals + cost > scheme.max_evals {
            return Err(Error::Integration {
                evals,
                estimate: prev.as_f64(),
                error: f64::NAN,
            });
        }
        let next = tensor_rule(f, dim, scale, half_line, next_n);
        evals += cost;
        let err = (next - prev).abs();
        if !next.is_finite() {
            return Err(Error::Integration { evals, estimate: next.as_f64(), error: f64::NAN });
        }
        if err <= abs_tol.max(rel_tol * next.abs()) {
            return Ok(Integral { value: next, err_estimate: err, evals });
        }
        prev = next;
        n = next_n;
    }
}

// ---------------------------------------------------------------------------
// Monte-Carlo

fn monte_carlo<T: Real, F: Fn(&[T]) -> T>(
    f: &F,
    dim: usize,
    scale: T,
    scheme: &IntegrationScheme,
) -> Result<Integral<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(scheme.seed);
    let n = scheme.max_evals;
    let s = scale.as_f64();
    let log_norm = -0.5 * dim as f64 * (2.0 * std::f64::consts::PI).ln() - dim as f64 * s.ln();
    let mut x = vec![T::zero(); dim];
    // Welford accumulation for mean and variance of the weights.
    let mut mean = 0.0_f64;
    let mut m2 = 0.0_f64;
    for i in 0..n {
        let mut sq = 0.0;
        for xk in x.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            sq += z * z;
            *xk = c(s * z);
        }
        let ln_q = log_norm - 0.5 * sq;
        let fx = f(&x).as_f64();
        let w = if fx == 0.0 { 0.0 } else { fx * (-ln_q).exp() };
        let delta = w - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (w - mean);
    }
    let stderr = if n > 1 { (m2 / (n - 1) as f64 / n as f64).sqrt() } else { f64::INFINITY };
    finite_or_fail(Integral { value: c(mean), err_estimate: c(stderr), evals: n })
}

// ---------------------------------------------------------------------------
// series

fn series_sum<T: Real, F: Fn(&[T]) -> T>(
    f: &F,
    measure: CountingMeasure,
    scheme: &IntegrationScheme,
) -> Result<Integral<T>> {
    const MIN_TERMS: usize = 10;
    let tail_cut = c::<T>(scheme.tail_cut);
    let half = c::<T>(0.5);
    let mut sum = T::zero();
    let mut comp = T::zero();
    let mut ln_fact = T::zero();
    let mut prev_abs: Option<T> = None;
    for k in 0..scheme.max_evals {
        let kf = c::<T>(k as f64);
        if k > 0 {
            ln_fact = ln_fact + kf.ln();
        }
        let weight = match measure {
            CountingMeasure::Unit => T::one(),
            CountingMeasure::InverseFactorial => (-ln_fact).exp(),
        };
        let fx = f(&[kf]);
        let term = if fx == T::zero() || weight == T::zero() { T::zero() } else { fx * weight };
        if !term.is_finite() {
            return Err(Error::Integration {
                evals: k + 1,
                estimate: sum.as_f64(),
                error: f64::INFINITY,
            });
        }
        // Kahan summation
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;

        let a = term.abs();
        if k + 1 >= MIN_TERMS {
            let ratio = match prev_abs {
                Some(p) if p > T::zero() => a / p,
                _ => T::zero(),
            };
            if ratio <= half {
                // Terms shrink at least geometrically from here on.
                let tail = if ratio == T::zero() { a } else { a * ratio / (T::one() - ratio) };
                if tail <= tail_cut * sum.abs() || (a == T::zero() && sum == T::zero()) {
                    return Ok(Integral { value: sum, err_estimate: tail, evals: k + 1 });
                }
            }
        }
        prev_abs = Some(a);
    }
    Err(Error::Integration {
        evals: scheme.max_evals,
        estimate: sum.as_f64(),
        error: f64::NAN,
    })
}
