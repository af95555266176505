use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{check_finite, ToleranceSpec};
use crate::error::{Error, Result};

// Kronrod 15-point abscissae; odd indices are the embedded Gauss 7-point nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadEstimate {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
}

#[derive(Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Returns (kronrod value, |K - G| error estimate, integral of |f|).
fn gauss_kronrod<F>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = check_finite(center, f(center)?)?;
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut abs_sum = WGK[7] * fc.abs();
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let f1 = check_finite(center - dx, f(center - dx)?)?;
        let f2 = check_finite(center + dx, f(center + dx)?)?;
        kronrod += wk * (f1 + f2);
        abs_sum += wk * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Ok((kronrod * half, ((kronrod - gauss) * half).abs(), abs_sum * half.abs()))
}

/// Globally adaptive Gauss-Kronrod (7/15) quadrature of `f` over `[a, b]`.
///
/// The panel with the largest error estimate is bisected until the summed
/// estimate falls below `max(abs_tol, rel_tol |I|)`, floored at roundoff
/// level. `tol.max_iter` caps the number of bisections.
pub fn integrate_adaptive<F>(mut f: F, a: f64, b: f64, tol: &ToleranceSpec) -> Result<QuadEstimate>
where
    F: FnMut(f64) -> Result<f64>,
{
    tol.validate()?;
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(Error::InvalidBracket { lo: a, hi: b });
    }
    if a == b {
        return Ok(QuadEstimate {
            value: 0.0,
            error: 0.0,
            subdivisions: 0,
        });
    }

    let (value, error, abs_value) = gauss_kronrod(&mut f, a, b)?;
    let mut total = value;
    let mut total_err = error;
    let mut total_abs = abs_value;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, error });

    let target = |total: f64, total_abs: f64| {
        tol.abs_tol
            .max(tol.rel_tol * total.abs())
            .max(50.0 * f64::EPSILON * total_abs)
    };

    let mut subdivisions = 0;
    while total_err > target(total, total_abs) {
        if subdivisions >= tol.max_iter {
            return Err(Error::MaxSubdivisions {
                limit: tol.max_iter,
                error: total_err,
            });
        }
        let Some(panel) = heap.pop() else { break };
        let mid = 0.5 * (panel.a + panel.b);
        if mid <= panel.a || mid >= panel.b {
            // cannot split further in floating point; keep its estimate
            heap.push(panel);
            break;
        }
        let (v1, e1, abs1) = gauss_kronrod(&mut f, panel.a, mid)?;
        let (v2, e2, abs2) = gauss_kronrod(&mut f, mid, panel.b)?;
        total += v1 + v2 - panel.value;
        total_err += e1 + e2 - panel.error;
        total_abs += abs1 + abs2;
        heap.push(Panel {
            a: panel.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: panel.b,
            value: v2,
            error: e2,
        });
        subdivisions += 1;
    }

    // re-sum to shed the drift of the running update
    let (value, error) = heap.iter().fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
    Ok(QuadEstimate {
        value,
        error,
        subdivisions,
    })
}
