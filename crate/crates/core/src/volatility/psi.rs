use crate::error::{Error, Result};
use crate::numerics::{integrate_ode, OdeOptions, Stop, ToleranceSpec};

const X_MIN: f64 = 1e-8;
const X_MAX: f64 = 1e6;
const NODES: usize = 2000;

/// Coefficients of `Psi(x) = c t + d t^2 + e t^3 + f t^4 + O(t^5)`, `t = x^(1/3)`,
/// obtained by substituting the expansion into the Psi equation.
fn series_coefficients() -> [f64; 4] {
    let c = 1.5f64.powf(2.0 / 3.0);
    let d = 2.0 * 12f64.cbrt() / 5.0;
    let e = 72.0 / 175.0;
    let f = 344.0 * 2f64.cbrt() * 3f64.powf(2.0 / 3.0) / 7875.0;
    [c, d, e, f]
}

/// Right-hand side of `Psi'(x) = (Psi + 1) / (2 sqrt(x Psi) - x)`.
pub fn psi_derivative(x: f64, psi: f64) -> f64 {
    (psi + 1.0) / (2.0 * (x * psi).sqrt() - x)
}

/// Tabulated solution of `Psi'(x) = (Psi + 1) / (2 sqrt(x Psi) - x)`,
/// `Psi(0) = 0`, the function entering the Barles-Soner volatility.
///
/// Nodes are log-spaced on `[1e-8, 1e6]`; between nodes a cubic Hermite in
/// `(ln x, ln Psi)` uses the slopes given by the equation itself, limited
/// so the interpolant stays monotone. Below the grid the small-x series is
/// used, above it a linear continuation with the terminal slope.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiTable {
    log_x0: f64,
    step: f64,
    log_psi: Vec<f64>,
    slopes: Vec<f64>,
    series: [f64; 4],
    tail_slope: f64,
    tail_intercept: f64,
}

impl PsiTable {
    pub fn build() -> Result<Self> {
        let series = series_coefficients();
        let log_x0 = X_MIN.ln();
        let step = (X_MAX.ln() - log_x0) / (NODES - 1) as f64;
        let opts = OdeOptions::new(ToleranceSpec::new(1e-13, 0.0, 100_000)?);

        let mut psi = Vec::with_capacity(NODES);
        psi.push(series_at(&series, X_MIN));
        for i in 1..NODES {
            let s_prev = log_x0 + (i - 1) as f64 * step;
            let s_next = log_x0 + i as f64 * step;
            let traj = integrate_ode(
                |s, y, dy| {
                    let x = s.exp();
                    dy[0] = x * psi_derivative(x, y[0]);
                    Ok(())
                },
                s_prev,
                &[psi[i - 1]],
                Stop::At(s_next),
                &opts,
            )?;
            psi.push(traj.last().1[0]);
        }

        let log_psi: Vec<f64> = psi.iter().map(|p| p.ln()).collect();
        let mut slopes: Vec<f64> = psi
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let x = (log_x0 + i as f64 * step).exp();
                x * psi_derivative(x, p) / p
            })
            .collect();
        limit_slopes(&log_psi, step, &mut slopes);

        let last = *psi.last().unwrap_or(&0.0);
        let tail_slope = psi_derivative(X_MAX, last);
        Ok(Self {
            log_x0,
            step,
            log_psi,
            slopes,
            series,
            tail_slope,
            tail_intercept: last - tail_slope * X_MAX,
        })
    }

    /// Leading small-x coefficient: `Psi(x) / x^(1/3) -> c` as `x -> 0`.
    pub fn small_x_coefficient(&self) -> f64 {
        self.series[0]
    }

    pub fn x_min(&self) -> f64 {
        X_MIN
    }

    pub fn x_max(&self) -> f64 {
        X_MAX
    }

    /// Node abscissae and values.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.log_psi
            .iter()
            .enumerate()
            .map(|(i, lp)| ((self.log_x0 + i as f64 * self.step).exp(), lp.exp()))
    }

    /// Small-x series evaluated at `x`.
    pub fn series(&self, x: f64) -> f64 {
        series_at(&self.series, x)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if x < 0.0 || x.is_nan() {
            return Err(Error::NegativeArgument(x));
        }
        if x == 0.0 {
            return Ok(0.0);
        }
        if x < X_MIN {
            return Ok(self.series(x));
        }
        if x > X_MAX {
            return Ok(self.tail_slope * x + self.tail_intercept);
        }
        let s = x.ln();
        let pos = ((s - self.log_x0) / self.step).max(0.0);
        let i = (pos.floor() as usize).min(self.log_psi.len() - 2);
        let t = (pos - i as f64).clamp(0.0, 1.0);
        let (y0, y1) = (self.log_psi[i], self.log_psi[i + 1]);
        let (m0, m1) = (self.slopes[i] * self.step, self.slopes[i + 1] * self.step);
        let t2 = t * t;
        let t3 = t2 * t;
        let lp =
            (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * m1;
        Ok(lp.exp())
    }
}

fn series_at(coef: &[f64; 4], x: f64) -> f64 {
    let t = x.cbrt();
    t * (coef[0] + t * (coef[1] + t * (coef[2] + t * coef[3])))
}

/// Fritsch-Carlson limiter on node slopes of increasing data.
fn limit_slopes(values: &[f64], step: f64, slopes: &mut [f64]) {
    for i in 0..values.len() - 1 {
        let delta = (values[i + 1] - values[i]) / step;
        if delta <= 0.0 {
            slopes[i] = 0.0;
            slopes[i + 1] = 0.0;
            continue;
        }
        let alpha = slopes[i] / delta;
        let beta = slopes[i + 1] / delta;
        let norm = alpha.hypot(beta);
        if norm > 3.0 {
            let tau = 3.0 / norm;
            slopes[i] = tau * alpha * delta;
            slopes[i + 1] = tau * beta * delta;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn table() -> &'static PsiTable {
        static TABLE: OnceLock<PsiTable> = OnceLock::new();
        TABLE.get_or_init(|| PsiTable::build().unwrap())
    }

    #[test]
    fn zero_and_negative() {
        assert_eq!(table().eval(0.0).unwrap(), 0.0);
        assert_eq!(table().eval(-1.0), Err(Error::NegativeArgument(-1.0)));
    }

    #[test]
    fn coefficient_value() {
        let c = table().small_x_coefficient();
        assert!((c - 1.310_370_697_104_448).abs() < 1e-14);
        // c^(3/2) = 3/2 from matching leading orders
        assert!((c.powf(1.5) - 1.5).abs() < 1e-14);
    }

    #[test]
    fn seed_matches_series() {
        let t = table();
        let (x0, p0) = t.nodes().next().unwrap();
        assert!((p0 / t.series(x0) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn matches_high_precision_values() {
        // 30-digit integration of the Psi equation from x = 1e-14
        let reference = [
            (1e-8, 0.002_827_362_837_672_07),
            (1e-7, 0.006_101_972_888_187_01),
            (1e-6, 0.013_195_696_684_979_5),
            (1e-3, 0.140_617_771_307_204),
            (1.0, 2.757_808_584_764_08),
            (10.0, 13.614_491_137_088_5),
        ];
        for (x, expected) in reference {
            let got = table().eval(x).unwrap();
            assert!(
                (got / expected - 1.0).abs() < 1e-9,
                "Psi({x}) = {got}, expected {expected}"
            );
        }
    }

    #[test]
    fn strictly_increasing_on_nodes_and_doubling() {
        let t = table();
        let nodes: Vec<_> = t.nodes().collect();
        assert!(nodes.windows(2).all(|w| w[1].1 > w[0].1));
        assert!(nodes.iter().all(|(_, p)| *p > 0.0));
        let mut x = 1e-12;
        while x < 1e8 {
            assert!(t.eval(2.0 * x).unwrap() > t.eval(x).unwrap(), "x = {x}");
            x *= 1.7;
        }
    }

    #[test]
    fn continuous_across_grid_ends() {
        let t = table();
        let below = t.eval(X_MIN * (1.0 - 1e-12)).unwrap();
        let at = t.eval(X_MIN).unwrap();
        assert!((below / at - 1.0).abs() < 1e-9);
        let inside = t.eval(X_MAX).unwrap();
        let outside = t.eval(X_MAX * (1.0 + 1e-12)).unwrap();
        assert!((outside / inside - 1.0).abs() < 1e-9);
        // linear growth at infinity
        let ratio = t.eval(1e9).unwrap() / 1e9;
        assert!((ratio - 1.0).abs() < 0.01, "{ratio}");
    }
}
