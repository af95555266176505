use super::ToleranceSpec;
use crate::error::{Error, Result};

// Dormand-Prince 5(4) tableau.
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
// fifth-order weights (also the FSAL stage)
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// fifth minus fourth order weights, 7 stages
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// When integration ends.
pub enum Stop<'a> {
    /// Land exactly on this abscissa (may lie on either side of the start).
    At(f64),
    /// Stop at the first accepted step where the predicate holds; fail with
    /// `HorizonExceeded` once `|x - x_start|` passes `horizon`.
    When {
        predicate: &'a dyn Fn(f64, &[f64]) -> bool,
        horizon: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    /// Per-step error control; `max_iter` bounds attempted steps.
    pub tol: ToleranceSpec,
    /// Optional first step size; chosen automatically otherwise.
    pub initial_step: Option<f64>,
    /// Largest allowed step.
    pub max_step: f64,
}

impl OdeOptions {
    pub fn new(tol: ToleranceSpec) -> Self {
        Self {
            tol,
            initial_step: None,
            max_step: f64::INFINITY,
        }
    }
}

/// Accepted steps of an integration, including the initial point.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub xs: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Last (x, state) pair.
    pub fn last(&self) -> (f64, &[f64]) {
        let i = self.xs.len() - 1;
        (self.xs[i], &self.states[i])
    }

    fn push(&mut self, x: f64, y: &[f64]) {
        self.xs.push(x);
        self.states.push(y.to_vec());
    }
}

fn error_ratio(err: &[f64], y: &[f64], y_new: &[f64], tol: &ToleranceSpec) -> f64 {
    let mut worst: f64 = 0.0;
    for ((&e, &a), &b) in err.iter().zip(y).zip(y_new) {
        let scale = tol.abs_tol + tol.rel_tol * a.abs().max(b.abs());
        let ratio = if scale > 0.0 {
            e.abs() / scale
        } else if e == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        worst = worst.max(ratio);
    }
    worst
}

fn rms_scaled(v: &[f64], y: &[f64], tol: &ToleranceSpec) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for (&vi, &yi) in v.iter().zip(y) {
        let scale = tol.abs_tol + tol.rel_tol * yi.abs();
        if scale > 0.0 {
            sum += (vi / scale).powi(2);
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

/// Adaptive explicit Runge-Kutta (Dormand-Prince 5(4)) integration of
/// `y' = rhs(x, y)` from `x_start`.
///
/// The returned trajectory holds every accepted step. Error control is the
/// max-norm of the embedded error estimate scaled by
/// `abs_tol + rel_tol |y|`, so pure relative control (`abs_tol = 0`) keeps
/// accuracy on exponentially decaying components.
pub fn integrate_ode<F>(mut rhs: F, x_start: f64, y0: &[f64], stop: Stop<'_>, opts: &OdeOptions) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let tol = &opts.tol;
    tol.validate()?;
    let n = y0.len();
    let mut traj = Trajectory::default();
    traj.push(x_start, y0);

    let direction = match stop {
        Stop::At(x_end) => {
            if !x_end.is_finite() {
                return Err(Error::InvalidBracket { lo: x_start, hi: x_end });
            }
            if x_end == x_start {
                return Ok(traj);
            }
            (x_end - x_start).signum()
        }
        Stop::When { predicate, horizon } => {
            if !(horizon > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "ODE horizon must be positive, got {horizon}"
                )));
            }
            if predicate(x_start, y0) {
                return Ok(traj);
            }
            1.0
        }
    };

    let mut x = x_start;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];

    rhs(x, &y, &mut k[0])?;

    let mut h = match opts.initial_step {
        Some(h) => h.abs(),
        None => {
            // Hairer-Norsett-Wanner starting step
            let d0 = rms_scaled(&y, &y, tol);
            let d1 = rms_scaled(&k[0], &y, tol);
            let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
            for i in 0..n {
                stage[i] = y[i] + direction * h0 * k[0][i];
            }
            rhs(x + direction * h0, &stage, &mut k[1])?;
            for i in 0..n {
                err[i] = (k[1][i] - k[0][i]) / h0;
            }
            let d2 = rms_scaled(&err, &y, tol);
            let h1 = if d1.max(d2) <= 1e-15 {
                (h0 * 1e-3).max(1e-6)
            } else {
                (0.01 / d1.max(d2)).powf(0.2)
            };
            (100.0 * h0).min(h1)
        }
    }
    .min(opts.max_step);

    for _ in 0..tol.max_iter {
        let mut last = false;
        if let Stop::At(x_end) = stop {
            let remaining = (x_end - x).abs();
            if h >= remaining * (1.0 - 1e-12) {
                h = remaining;
                last = true;
            }
        }
        let hs = direction * h;
        if x + hs == x {
            return Err(Error::StepUnderflow { x, h });
        }

        let tables: [&[f64]; 5] = [&A2, &A3, &A4, &A5, &A6];
        for (s, row) in tables.iter().enumerate() {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, &a) in row.iter().enumerate() {
                    acc += a * k[j][i];
                }
                stage[i] = y[i] + hs * acc;
            }
            rhs(x + C[s] * hs, &stage, &mut k[s + 1])?;
        }
        for i in 0..n {
            let mut acc = 0.0;
            for (j, &b) in B.iter().enumerate() {
                acc += b * k[j][i];
            }
            y_new[i] = y[i] + hs * acc;
        }
        let x_new = if last {
            match stop {
                Stop::At(x_end) => x_end,
                Stop::When { .. } => x + hs,
            }
        } else {
            x + hs
        };
        rhs(x_new, &y_new, &mut k[6])?;
        for i in 0..n {
            let mut acc = 0.0;
            for (j, &e) in E.iter().enumerate() {
                acc += e * k[j][i];
            }
            err[i] = hs * acc;
        }

        let ratio = error_ratio(&err, &y, &y_new, tol);
        if ratio.is_nan() {
            return Err(Error::NonFinite { x: x_new, value: ratio });
        }
        if ratio <= 1.0 {
            x = x_new;
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6);
            traj.push(x, &y);

            match stop {
                Stop::At(_) if last => return Ok(traj),
                Stop::When { predicate, horizon } => {
                    if predicate(x, &y) {
                        return Ok(traj);
                    }
                    if (x - x_start).abs() > horizon {
                        return Err(Error::HorizonExceeded { x });
                    }
                }
                _ => {}
            }
            let factor = if ratio == 0.0 {
                5.0
            } else {
                (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = (h * factor).min(opts.max_step);
        } else {
            h *= (0.9 * ratio.powf(-0.2)).clamp(0.1, 0.9);
        }
    }
    Err(Error::MaxIterExceeded(tol.max_iter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn opts() -> OdeOptions {
        OdeOptions::new(ToleranceSpec::new(1e-10, 1e-12, 100_000).unwrap())
    }

    #[test]
    fn exponential_decay_to_fixed_point() {
        let t = integrate_ode(
            |_, y, dy| {
                dy[0] = -y[0];
                Ok(())
            },
            0.0,
            &[1.0],
            Stop::At(1.0),
            &opts(),
        )
        .unwrap();
        let (x, y) = t.last();
        assert_eq!(x, 1.0);
        assert!((y[0] - (-1.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn zero_rhs_is_constant() {
        let t = integrate_ode(
            |_, _, dy| {
                dy[0] = 0.0;
                Ok(())
            },
            0.0,
            &[3.5],
            Stop::At(10.0),
            &opts(),
        )
        .unwrap();
        assert!(t.states.iter().all(|s| s[0] == 3.5));
        assert_eq!(t.last().0, 10.0);
    }

    #[test]
    fn merton_transformed_solution() {
        // W' = -(1 + gamma) W with W(x0) = r E / rho
        let (r, e, sigma0) = (0.1, 100.0, 0.3);
        let gamma = 2.0 * r / (sigma0 * sigma0);
        let rho = e * gamma / (1.0 + gamma);
        let x0 = f64::ln(rho);
        let exact = |x: f64| r * e * rho.powf(gamma) * (-(1.0 + gamma) * x).exp();
        let t = integrate_ode(
            |_, y, dy| {
                dy[0] = -(1.0 + gamma) * y[0];
                Ok(())
            },
            x0,
            &[r * e / rho],
            Stop::At(x0 + 3.0),
            &OdeOptions::new(ToleranceSpec::new(1e-12, 0.0, 100_000).unwrap()),
        )
        .unwrap();
        for (x, s) in t.xs.iter().zip(&t.states) {
            assert!((s[0] / exact(*x) - 1.0).abs() < 1e-9, "x = {x}");
        }
    }

    #[test]
    fn backward_integration() {
        let t = integrate_ode(
            |_, y, dy| {
                dy[0] = y[0];
                Ok(())
            },
            1.0,
            &[1.0],
            Stop::At(0.0),
            &opts(),
        )
        .unwrap();
        assert!((t.last().1[0] - (-1.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn predicate_and_horizon() {
        let below = |_: f64, y: &[f64]| y[0] < 1e-3;
        let t = integrate_ode(
            |_, y, dy| {
                dy[0] = -y[0];
                Ok(())
            },
            0.0,
            &[1.0],
            Stop::When {
                predicate: &below,
                horizon: 100.0,
            },
            &opts(),
        )
        .unwrap();
        let (x, y) = t.last();
        assert!(y[0] < 1e-3 && x > (1e3f64).ln());

        let never = |_: f64, _: &[f64]| false;
        let err = integrate_ode(
            |_, _, dy| {
                dy[0] = 1.0;
                Ok(())
            },
            0.0,
            &[0.0],
            Stop::When {
                predicate: &never,
                horizon: 5.0,
            },
            &opts(),
        );
        assert!(matches!(err, Err(Error::HorizonExceeded { .. })));
    }

    #[test]
    fn blow_up_reports_failure() {
        // y' = y^2 from y(0)=1 blows up at x = 1
        let err = integrate_ode(
            |_, y, dy| {
                dy[0] = y[0] * y[0];
                Ok(())
            },
            0.0,
            &[1.0],
            Stop::At(2.0),
            &opts(),
        );
        assert!(err.is_err());
    }

    #[test]
    fn rhs_errors_propagate() {
        let err = integrate_ode(
            |x, _, _| Err(Error::InversionFailed { w: x }),
            0.0,
            &[1.0],
            Stop::At(1.0),
            &opts(),
        );
        assert!(matches!(err, Err(Error::InversionFailed { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn linear_decay_matches_exponential(k in 0.05f64..1.0, span in 0.1f64..20.0, y0 in 1e-3f64..1e3) {
            let tol = ToleranceSpec::new(1e-10, 0.0, 200_000).unwrap();
            let t = integrate_ode(
                |_, y, dy| { dy[0] = -k * y[0]; Ok(()) },
                0.0,
                &[y0],
                Stop::At(span),
                &OdeOptions::new(tol),
            ).unwrap();
            for (x, s) in t.xs.iter().zip(&t.states) {
                let exact = y0 * (-k * x).exp();
                prop_assert!((s[0] - exact).abs() <= 10.0 * tol.at(exact), "x = {}, err = {:e}", x, (s[0] / exact - 1.0));
            }
        }
    }
}
