use alloc::vec::Vec;

use super::Tolerance;
use crate::{Error, Result};

// 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1].
const KRONROD_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd-indexed Kronrod nodes.
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * KRONROD_WEIGHTS[7];
    let mut gauss = fc * GAUSS_WEIGHTS[3];
    for (j, (&x, &w)) in KRONROD_NODES[..7]
        .iter()
        .zip(&KRONROD_WEIGHTS[..7])
        .enumerate()
    {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += GAUSS_WEIGHTS[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Adaptive Gauss–Kronrod estimate of `∫_lower^∞ f(t) dt`.
///
/// The half line is mapped onto `[0, 1)` by `t = lower + u/(1-u)` and the
/// segment with the largest error estimate is bisected until the summed
/// error is within `max(tol.abs, tol.rel·|I|)`. `tol.max_iter` caps the
/// number of bisections. The integrand must decay at least exponentially.
pub fn integrate_tail<F: Fn(f64) -> f64>(f: F, lower: f64, tol: Tolerance) -> Result<f64> {
    if !lower.is_finite() {
        return Err(Error::Domain("integrate_tail needs a finite lower limit"));
    }
    let mapped = |u: f64| {
        let s = 1.0 - u;
        let t = lower + u / s;
        let y = f(t);
        if y == 0.0 {
            0.0
        } else {
            y / (s * s)
        }
    };

    let mut segments: Vec<Segment> = Vec::with_capacity(64);
    segments.push(kronrod(&mapped, 0.0, 1.0));
    let mut iterations = 0;
    loop {
        let (value, error) = segments
            .iter()
            .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
        if !value.is_finite() {
            return Err(Error::Divergent("integrand is not integrable on the tail"));
        }
        if error <= tol.abs.max(tol.rel * value.abs()) {
            return Ok(value);
        }
        if iterations >= tol.max_iter {
            return Err(Error::NonConvergence {
                estimate: value,
                error,
                iterations,
            });
        }
        let worst = segments
            .iter()
            .enumerate()
            .filter(|(_, s)| s.b - s.a > 64.0 * f64::EPSILON * s.b.abs().max(f64::MIN_POSITIVE))
            .max_by(|(_, x), (_, y)| x.error.total_cmp(&y.error))
            .map(|(i, _)| i);
        let Some(worst) = worst else {
            // every segment is at machine resolution
            return Ok(value);
        };
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        segments.push(kronrod(&mapped, seg.a, mid));
        segments.push(kronrod(&mapped, mid, seg.b));
        iterations += 1;
    }
}
