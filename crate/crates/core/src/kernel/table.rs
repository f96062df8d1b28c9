//! Tabulated kernels on a geometric radial grid.
//!
//! The table stores `(r_i, G(r_i))` only. Interpolation is a clamped cubic
//! spline in `(ln r, ln G)` whose end slopes come from one-sided fourth-order
//! differences of the stored values, so a dumped table reloads to an
//! identical interpolant.

use std::fmt::Write as _;

use thiserror::Error;

use super::{gaussian_smoothed_green, KernelError, KernelParams, MollifierParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TableError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("invalid table request: {0}")]
    Request(String),
    #[error("table parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

const HEADER_TAG: &str = "# cpnlab-kernel-table";

#[derive(Clone, Debug, PartialEq)]
pub struct KernelTable {
    params: KernelParams,
    epsilon: Option<f64>,
    value_at_zero: Option<f64>,
    radii: Vec<f64>,
    values: Vec<f64>,
    log_r: Vec<f64>,
    log_v: Vec<f64>,
    second: Vec<f64>,
    step: f64,
}

/// Tabulate G on `n` geometric points in [r_min, r_max].
pub fn build_table(
    params: &KernelParams,
    r_min: f64,
    r_max: f64,
    n: usize,
) -> Result<KernelTable, TableError> {
    let radii = geometric_grid(r_min, r_max, n)?;
    let values: Vec<f64> = radii.iter().map(|&r| params.green(r)).collect();
    KernelTable::from_samples(*params, None, None, radii, values)
}

/// Tabulate G_ε on `n` geometric points in [r_min, r_max], plus G_ε(0).
pub fn build_mollified_table(
    params: &KernelParams,
    moll: &MollifierParams,
    r_min: f64,
    r_max: f64,
    n: usize,
) -> Result<KernelTable, TableError> {
    let radii = geometric_grid(r_min, r_max, n)?;
    let eps = moll.epsilon();
    let values = radii
        .iter()
        .map(|&r| gaussian_smoothed_green(params, eps, r).map_err(KernelError::from))
        .collect::<Result<Vec<_>, _>>()?;
    let zero = gaussian_smoothed_green(params, eps, 0.0).map_err(KernelError::from)?;
    KernelTable::from_samples(*params, Some(eps), Some(zero), radii, values)
}

fn geometric_grid(r_min: f64, r_max: f64, n: usize) -> Result<Vec<f64>, TableError> {
    if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) {
        return Err(TableError::Request(format!(
            "need 0 < r_min < r_max, got [{r_min}, {r_max}]"
        )));
    }
    if n < 8 {
        return Err(TableError::Request(format!("need at least 8 points, got {n}")));
    }
    let (a, b) = (r_min.ln(), r_max.ln());
    let h = (b - a) / (n - 1) as f64;
    let mut radii: Vec<f64> = (0..n).map(|i| (a + h * i as f64).exp()).collect();
    radii[0] = r_min;
    radii[n - 1] = r_max;
    Ok(radii)
}

impl KernelTable {
    fn from_samples(
        params: KernelParams,
        epsilon: Option<f64>,
        value_at_zero: Option<f64>,
        radii: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self, TableError> {
        let n = radii.len();
        if n < 8 || values.len() != n {
            return Err(TableError::Request("table needs at least 8 samples".into()));
        }
        if let Some(i) = values.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(TableError::Request(format!(
                "kernel value at r = {} is not positive and finite; shrink r_max",
                radii[i]
            )));
        }
        if radii.windows(2).any(|w| !(w[1] > w[0])) || radii[0] <= 0.0 {
            return Err(TableError::Request("radii must be positive and increasing".into()));
        }
        let log_r: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
        let log_v: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        let step = (log_r[n - 1] - log_r[0]) / (n - 1) as f64;
        let second = clamped_spline(&log_v, step);
        Ok(Self {
            params,
            epsilon,
            value_at_zero,
            radii,
            values,
            log_r,
            log_v,
            second,
            step,
        })
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn r_min(&self) -> f64 {
        self.radii[0]
    }

    pub fn r_max(&self) -> f64 {
        self.radii[self.radii.len() - 1]
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.radii.iter().copied().zip(self.values.iter().copied())
    }

    /// Interpolated kernel at radius r ≥ 0 (r > 0 for the bare kernel).
    pub fn eval(&self, r: f64) -> f64 {
        let n = self.radii.len();
        let r_min = self.radii[0];
        let r_max = self.radii[n - 1];
        if r < r_min {
            let v0 = self.values[0];
            return match self.value_at_zero {
                Some(z) => {
                    let s = r / r_min;
                    z + (v0 - z) * s * s
                }
                None => v0 * (r_min / r).powi(self.params.dim() as i32 - 1),
            };
        }
        if r > r_max {
            let d = self.params.dim() as f64;
            let m = self.params.mass();
            return self.values[n - 1] * (r_max / r).powf(d / 2.0) * (-m * (r - r_max)).exp();
        }
        let u = r.ln();
        let mut i = (((u - self.log_r[0]) / self.step) as usize).min(n - 2);
        while i > 0 && u < self.log_r[i] {
            i -= 1;
        }
        while i + 2 < n && u > self.log_r[i + 1] {
            i += 1;
        }
        if r == self.radii[i] {
            return self.values[i];
        }
        if r == self.radii[i + 1] {
            return self.values[i + 1];
        }
        let h = self.log_r[i + 1] - self.log_r[i];
        let a = (self.log_r[i + 1] - u) / h;
        let b = 1.0 - a;
        let y = a * self.log_v[i]
            + b * self.log_v[i + 1]
            + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * h * h
                / 6.0;
        y.exp()
    }

    /// Text form: a header line, an optional `0 G(0)` line, then `r value` rows.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        write!(
            out,
            "{HEADER_TAG} d={} m={:.16e} n_points={}",
            self.params.dim(),
            self.params.mass(),
            self.radii.len()
        )
        .unwrap();
        if let Some(e) = self.epsilon {
            write!(out, " epsilon={e:.16e}").unwrap();
        }
        out.push('\n');
        if let Some(z) = self.value_at_zero {
            writeln!(out, "{:.16e} {z:.16e}", 0.0).unwrap();
        }
        for (r, v) in self.samples() {
            writeln!(out, "{r:.16e} {v:.16e}").unwrap();
        }
        out
    }

    pub fn load(text: &str) -> Result<Self, TableError> {
        let perr = |line: usize, message: String| TableError::Parse { line, message };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| perr(1, "empty input".into()))?;
        let rest = header
            .strip_prefix(HEADER_TAG)
            .ok_or_else(|| perr(1, "missing table header".into()))?;
        let (mut dim, mut mass, mut n_points, mut epsilon) = (None, None, None, None);
        for field in rest.split_whitespace() {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| perr(1, format!("malformed header field `{field}`")))?;
            let bad = |_| perr(1, format!("bad value for `{k}`"));
            match k {
                "d" => dim = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "m" => mass = Some(v.parse::<f64>().map_err(|e| bad(e.to_string()))?),
                "n_points" => n_points = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "epsilon" => epsilon = Some(v.parse::<f64>().map_err(|e| bad(e.to_string()))?),
                _ => return Err(perr(1, format!("unknown header field `{k}`"))),
            }
        }
        let dim = dim.ok_or_else(|| perr(1, "header lacks d".into()))?;
        let mass = mass.ok_or_else(|| perr(1, "header lacks m".into()))?;
        let n_points = n_points.ok_or_else(|| perr(1, "header lacks n_points".into()))?;
        let params = KernelParams::new(dim, mass)?;
        let mut radii = Vec::with_capacity(n_points);
        let mut values = Vec::with_capacity(n_points);
        let mut value_at_zero = None;
        for (idx, line) in lines {
            let mut it = line.split_whitespace();
            let mut num = |what: &str| -> Result<f64, TableError> {
                it.next()
                    .ok_or_else(|| perr(idx + 1, format!("missing {what}")))?
                    .parse::<f64>()
                    .map_err(|e| perr(idx + 1, e.to_string()))
            };
            let r = num("radius")?;
            let v = num("value")?;
            if it.next().is_some() {
                return Err(perr(idx + 1, "expected two columns".into()));
            }
            if r == 0.0 && radii.is_empty() && value_at_zero.is_none() && epsilon.is_some() {
                value_at_zero = Some(v);
            } else {
                radii.push(r);
                values.push(v);
            }
        }
        if radii.len() != n_points {
            return Err(perr(
                1,
                format!("header announces {n_points} points, found {}", radii.len()),
            ));
        }
        if epsilon.is_some() && value_at_zero.is_none() {
            return Err(perr(2, "mollified table lacks the r = 0 row".into()));
        }
        Self::from_samples(params, epsilon, value_at_zero, radii, values)
    }
}

/// Second derivatives of a clamped cubic spline on a uniform grid.
fn clamped_spline(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let d0 = (-25.0 * y[0] + 48.0 * y[1] - 36.0 * y[2] + 16.0 * y[3] - 3.0 * y[4]) / (12.0 * h);
    let dn = (25.0 * y[n - 1] - 48.0 * y[n - 2] + 36.0 * y[n - 3] - 16.0 * y[n - 4]
        + 3.0 * y[n - 5])
        / (12.0 * h);
    let mut diag = vec![4.0; n];
    let mut rhs = vec![0.0; n];
    diag[0] = 2.0;
    diag[n - 1] = 2.0;
    rhs[0] = 6.0 / h * ((y[1] - y[0]) / h - d0);
    rhs[n - 1] = 6.0 / h * (dn - (y[n - 1] - y[n - 2]) / h);
    for i in 1..n - 1 {
        rhs[i] = 6.0 / (h * h) * (y[i + 1] - 2.0 * y[i] + y[i - 1]);
    }
    // Thomas algorithm, unit off-diagonals
    for i in 1..n {
        let w = 1.0 / diag[i - 1];
        diag[i] -= w;
        rhs[i] -= w * rhs[i - 1];
    }
    let mut m = vec![0.0; n];
    m[n - 1] = rhs[n - 1] / diag[n - 1];
    for i in (0..n - 1).rev() {
        m[i] = (rhs[i] - m[i + 1]) / diag[i];
    }
    m
}
