//! Torque magnitude models TMM(β).
//!
//! The field torque is `mu·|B|·TMM(β)·n̂` with `n̂ = (μ × B)/|μ × B|`, so a
//! positive TMM turns the moment towards B and a negative one away from it.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use super::DynamicsError;

#[derive(Debug, Clone, PartialEq)]
pub enum TorqueModel {
    /// `sin β`: one stable equilibrium at β = 0.
    Classical,
    /// `-sin β · tanh(c (β - π/2))`: stable at both β = 0 and β = π.
    SemiClassicalTanh { sharpness: f64 },
    /// Tabulated, monotone-cubic interpolated.
    Custom(TorqueTable),
}

impl Default for TorqueModel {
    fn default() -> Self {
        TorqueModel::SemiClassicalTanh { sharpness: 2.0 }
    }
}

impl TorqueModel {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        match self {
            TorqueModel::SemiClassicalTanh { sharpness } if !(*sharpness > 0.0 && sharpness.is_finite()) => {
                Err(DynamicsError::InvalidParams(format!(
                    "tanh sharpness must be positive, got {sharpness}"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// TMM(β) for β ∈ [0, π].
pub fn torque_magnitude(model: &TorqueModel, beta: f64) -> f64 {
    match model {
        TorqueModel::Classical => beta.sin(),
        TorqueModel::SemiClassicalTanh { sharpness } => {
            // exact zeros at the three equilibria
            if beta == 0.0 || beta == FRAC_PI_2 || beta == std::f64::consts::PI {
                return 0.0;
            }
            // written in u = β - π/2 so oddness about π/2 holds bit for bit
            let u = beta - FRAC_PI_2;
            -u.cos() * (sharpness * u).tanh()
        }
        TorqueModel::Custom(table) => table.eval(beta),
    }
}

/// Knot table interpolated with shape-preserving (Fritsch-Carlson) cubics.
#[derive(Debug, Clone, PartialEq)]
pub struct TorqueTable {
    beta: Vec<f64>,
    tmm: Vec<f64>,
    slopes: Vec<f64>,
}

impl TorqueTable {
    pub fn new(beta: Vec<f64>, tmm: Vec<f64>) -> Result<Self, DynamicsError> {
        let bad = |m: String| Err(DynamicsError::InvalidTorqueTable(m));
        if beta.len() != tmm.len() || beta.len() < 2 {
            return bad("need at least two (beta, tmm) knots".into());
        }
        if beta.iter().chain(&tmm).any(|v| !v.is_finite()) {
            return bad("non-finite knot".into());
        }
        if beta.windows(2).any(|w| w[1] <= w[0]) {
            return bad("beta must be strictly increasing".into());
        }
        let eps = 1e-12;
        if beta[0] > eps || *beta.last().unwrap() < std::f64::consts::PI - eps {
            return bad(format!(
                "knots must cover [0, pi], got [{}, {}]",
                beta[0],
                beta.last().unwrap()
            ));
        }
        let slopes = pchip_slopes(&beta, &tmm);
        Ok(Self { beta, tmm, slopes })
    }

    /// Parse a `beta,tmm` CSV with a header row.
    pub fn from_csv<R: std::io::Read>(r: R) -> Result<Self, DynamicsError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let headers = rdr
            .headers()
            .map_err(|e| DynamicsError::InvalidTorqueTable(e.to_string()))?
            .clone();
        if headers.len() != 2 || &headers[0] != "beta" || &headers[1] != "tmm" {
            return Err(DynamicsError::InvalidTorqueTable(
                "expected header `beta,tmm`".into(),
            ));
        }
        let (mut beta, mut tmm) = (Vec::new(), Vec::new());
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| DynamicsError::InvalidTorqueTable(e.to_string()))?;
            let parse = |i: usize| {
                rec.get(i)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| DynamicsError::InvalidTorqueTable(format!("row {}: bad number", line + 2)))
            };
            beta.push(parse(0)?);
            tmm.push(parse(1)?);
        }
        Self::new(beta, tmm)
    }

    pub fn load(path: &Path) -> Result<Self, DynamicsError> {
        let f = std::fs::File::open(path)
            .map_err(|e| DynamicsError::InvalidTorqueTable(format!("{}: {e}", path.display())))?;
        Self::from_csv(f)
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.beta.iter().copied().zip(self.tmm.iter().copied())
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.beta.len();
        let x = x.clamp(self.beta[0], self.beta[n - 1]);
        let k = match self.beta.partition_point(|&b| b <= x) {
            0 => 0,
            i => (i - 1).min(n - 2),
        };
        let h = self.beta[k + 1] - self.beta[k];
        let t = (x - self.beta[k]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.tmm[k] + h10 * h * self.slopes[k] + h01 * self.tmm[k + 1] + h11 * h * self.slopes[k + 1]
    }
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s.signum() != d0.signum() {
            0.0
        } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}
