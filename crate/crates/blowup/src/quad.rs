//! Adaptive quadrature primitives.
//!
//! Globally adaptive Gauss-Kronrod (G7, K15) integration with a worst-first
//! segment queue, plus Gauss-Legendre node generation for fixed angular
//! rules. The GK15 abscissae and weights are the classical QUADPACK
//! constants.

use crate::error::{Error, Result};
use std::collections::BinaryHeap;

/// Kronrod abscissae (positive half, descending), 15-point rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

/// Gauss weights for the embedded 7-point rule.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Kronrod weights for the 15-point rule.
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

/// One Gauss-Kronrod pass over `[a, b]`: returns `(integral, error_est)`.
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(center);
    let mut res_gauss = WG[3] * fc;
    let mut res_kronrod = WGK[7] * fc;
    let mut res_abs = WGK[7] * fc.abs();

    let mut fv = [0.0f64; 15];
    fv[7] = fc;
    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv[j] = f1;
        fv[14 - j] = f2;
        res_kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_gauss += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = res_kronrod * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }

    let integral = res_kronrod * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((res_kronrod - res_gauss) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * 1.0f64.min((200.0 * err / res_asc).powf(1.5));
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (integral, err)
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(std::cmp::Ordering::Equal)
    }
}

/// Result of an adaptive integration: value plus a certified-style error
/// estimate (sum of per-segment GK error estimates).
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

/// Globally adaptive GK15 on a finite interval.
///
/// Splits the worst segment until `error <= abs_tol + rel_tol * |value|`
/// or the segment budget is exhausted (which is reported as an error with
/// the best estimate embedded in the message).
pub fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain("adaptive: non-finite interval".into()));
    }
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0 });
    }
    let (v, e) = gk15(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value: v, error: e });
    let mut total_v = v;
    let mut total_e = e;
    let mut n = 1usize;
    while total_e > abs_tol + rel_tol * total_v.abs() && n < max_segments {
        let worst = heap.pop().expect("heap nonempty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval at floating-point resolution; cannot refine further
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(f, worst.a, mid);
        let (v2, e2) = gk15(f, mid, worst.b);
        total_v += v1 + v2 - worst.value;
        total_e += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
        n += 1;
    }
    // recompute totals from the heap to shed accumulated rounding
    let mut value = 0.0;
    let mut error = 0.0;
    for s in heap.iter() {
        value += s.value;
        error += s.error;
    }
    if error > abs_tol + rel_tol * value.abs() {
        return Err(Error::Quadrature(format!(
            "adaptive GK15 did not converge on [{a}, {b}]: value {value:.6e}, error {error:.3e}, \
             target {:.3e}",
            abs_tol + rel_tol * value.abs()
        )));
    }
    Ok(QuadResult { value, error })
}

/// Adaptive integration over `[a, +inf)` for integrands with an algebraic
/// decay bound `|f(t)| <= tail_bound(t)`, nonincreasing. Integrates doubling
/// panels until the analytic bound on the remainder drops below tolerance.
pub fn adaptive_to_infinity<F, B>(
    f: &F,
    a: f64,
    tail_bound: B,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
    B: Fn(f64) -> f64,
{
    let mut lo = a;
    let mut hi = if a.abs() < 1.0 { 1.0 + a.abs() } else { 2.0 * a.abs() };
    let mut value = 0.0;
    let mut error = 0.0;
    for _ in 0..64 {
        let r = adaptive(f, lo, hi, abs_tol * 0.25, rel_tol * 0.25, 2000)?;
        value += r.value;
        error += r.error;
        // remainder bound: monotone envelope integrated as a rectangle cascade
        let rem = tail_remainder(&tail_bound, hi);
        if rem <= abs_tol * 0.5 + rel_tol * 0.5 * value.abs() {
            return Ok(QuadResult { value, error: error + rem });
        }
        lo = hi;
        hi *= 2.0;
    }
    Err(Error::Quadrature(
        "adaptive_to_infinity: tail bound did not drop below tolerance within 64 doublings".into(),
    ))
}

/// Crude upper bound on `int_T^inf tail_bound` via geometric panels.
fn tail_remainder<B: Fn(f64) -> f64>(tail_bound: &B, from: f64) -> f64 {
    let mut rem = 0.0;
    let mut t = from;
    for _ in 0..200 {
        let w = t; // panel [t, 2t]
        let contrib = tail_bound(t) * w;
        rem += contrib;
        if contrib < 1e-18 * (1.0 + rem) {
            break;
        }
        t *= 2.0;
    }
    rem
}

/// Golden-section search for the maximum of a unimodal-ish function on
/// `[a, b]`; callers refine a grid candidate, so unimodality only needs to
/// hold locally.
pub fn golden_maximize<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    let xm = 0.5 * (lo + hi);
    (xm, f(xm))
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Tricomi-style initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
