use alloc::vec;
use alloc::vec::Vec;

use crate::real::Real;
use crate::{Error, Result};

use super::RealRhs;

/// Constant propeller forces of the quadrocopter benchmark.
pub const QUADROCOPTER_INPUTS: [f64; 4] = [0.248, 0.2475, 0.24775, 0.24775];

/// The four benchmark systems with their reference parameters, initial
/// conditions and time spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchmarkSystem {
    LotkaVolterra,
    ProteinTransduction,
    Lorenz,
    Quadrocopter,
}

impl BenchmarkSystem {
    pub const ALL: [BenchmarkSystem; 4] = [
        BenchmarkSystem::LotkaVolterra,
        BenchmarkSystem::ProteinTransduction,
        BenchmarkSystem::Lorenz,
        BenchmarkSystem::Quadrocopter,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            BenchmarkSystem::LotkaVolterra => "lotka-volterra",
            BenchmarkSystem::ProteinTransduction => "protein-transduction",
            BenchmarkSystem::Lorenz => "lorenz",
            BenchmarkSystem::Quadrocopter => "quadrocopter",
        }
    }

    /// Accepts the canonical names and the short forms `lv`, `pt`, `quad`.
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "lotka-volterra" | "lv" => BenchmarkSystem::LotkaVolterra,
            "protein-transduction" | "pt" => BenchmarkSystem::ProteinTransduction,
            "lorenz" => BenchmarkSystem::Lorenz,
            "quadrocopter" | "quad" => BenchmarkSystem::Quadrocopter,
            _ => return None,
        })
    }

    pub fn true_theta(&self) -> Vec<f64> {
        match self {
            BenchmarkSystem::LotkaVolterra => vec![2.0, 1.0, 4.0, 1.0],
            BenchmarkSystem::ProteinTransduction => vec![0.07, 0.6, 0.05, 0.3, 0.017, 0.3],
            BenchmarkSystem::Lorenz => vec![10.0, 28.0, 8.0 / 3.0],
            BenchmarkSystem::Quadrocopter => vec![0.1, 0.00062, 0.00113, 0.9, 0.114, 0.0825, 9.85],
        }
    }

    pub fn x0(&self) -> Vec<f64> {
        match self {
            BenchmarkSystem::LotkaVolterra => vec![5.0, 3.0],
            BenchmarkSystem::ProteinTransduction => vec![1.0, 0.0, 1.0, 0.0, 0.0],
            BenchmarkSystem::Lorenz => vec![1.0, 1.0, 1.0],
            BenchmarkSystem::Quadrocopter => vec![0.0; 12],
        }
    }

    pub fn time_span(&self) -> (f64, f64) {
        match self {
            BenchmarkSystem::LotkaVolterra => (0.0, 2.0),
            BenchmarkSystem::ProteinTransduction => (0.0, 50.0),
            BenchmarkSystem::Lorenz => (0.0, 1.0),
            BenchmarkSystem::Quadrocopter => (0.0, 15.0),
        }
    }
}

impl RealRhs for BenchmarkSystem {
    fn state_dim(&self) -> usize {
        match self {
            BenchmarkSystem::LotkaVolterra => 2,
            BenchmarkSystem::ProteinTransduction => 5,
            BenchmarkSystem::Lorenz => 3,
            BenchmarkSystem::Quadrocopter => 12,
        }
    }

    fn param_dim(&self) -> usize {
        match self {
            BenchmarkSystem::LotkaVolterra => 4,
            BenchmarkSystem::ProteinTransduction => 6,
            BenchmarkSystem::Lorenz => 3,
            BenchmarkSystem::Quadrocopter => 7,
        }
    }

    fn eval<T: Real>(&self, x: &[T], th: &[T], out: &mut [T]) -> Result<()> {
        let k = RealRhs::state_dim(self);
        if x.len() != k || out.len() != k {
            return Err(Error::Dimension { what: "state", expected: k, got: x.len() });
        }
        let p = RealRhs::param_dim(self);
        if th.len() != p {
            return Err(Error::Dimension { what: "theta", expected: p, got: th.len() });
        }
        match self {
            BenchmarkSystem::LotkaVolterra => {
                out[0] = th[0] * x[0] - th[1] * x[0] * x[1];
                out[1] = -th[2] * x[1] + th[3] * x[0] * x[1];
            }
            BenchmarkSystem::ProteinTransduction => {
                let (s, r, rs, rpp) = (x[0], x[2], x[3], x[4]);
                let denom = th[5] + rpp;
                if !(rpp.value() > -0.5 * th[5].value()) {
                    return Err(Error::Inadmissible {
                        reason: "R_pp must exceed -theta_6 / 2",
                    });
                }
                let mm = th[4] * rpp / denom;
                out[0] = -th[0] * s - th[1] * s * r + th[2] * rs;
                out[1] = th[0] * s;
                out[2] = -th[1] * s * r + th[2] * rs + mm;
                out[3] = th[1] * s * r - th[2] * rs - th[3] * rs;
                out[4] = th[3] * rs - mm;
            }
            BenchmarkSystem::Lorenz => {
                out[0] = th[0] * (x[1] - x[0]);
                out[1] = x[0] * (th[1] - x[2]) - x[1];
                out[2] = x[0] * x[1] - th[2] * x[2];
            }
            BenchmarkSystem::Quadrocopter => quadrocopter(x, th, out)?,
        }
        Ok(())
    }
}

fn quadrocopter<T: Real>(x: &[T], th: &[T], out: &mut [T]) -> Result<()> {
    let u = QUADROCOPTER_INPUTS.map(T::cst);
    let g = th[6];
    let (s6, c6) = (x[6].sin(), x[6].cos());
    let (s7, c7) = (x[7].sin(), x[7].cos());
    let (s8, c8) = (x[8].sin(), x[8].cos());
    if c7.value().abs() < 1e-6 {
        return Err(Error::Inadmissible {
            reason: "pitch angle at the gimbal singularity",
        });
    }
    let t7 = s7 / c7;
    let inertia = th[3] * (th[2] + th[1]);
    out[0] = -g * s7 + x[5] * x[1] - x[4] * x[2];
    out[1] = g * s6 * c7 - x[0] * x[5] + x[2] * x[3];
    out[2] = -(u[0] + u[1] + u[2] + u[3]) / th[0] + g * c6 * c7 + x[0] * x[4] - x[3] * x[1];
    out[3] = (th[5] * (-u[0] + u[1] + u[2] - u[3]) + (th[2] - inertia) * x[4] * x[5]) / th[1];
    out[4] = (th[4] * (u[0] - u[1] + u[2] - u[3]) + (inertia - th[1]) * x[3] * x[5]) / th[2];
    out[5] = (th[1] - th[2]) * x[3] * x[4] / inertia;
    out[6] = x[3] + (x[4] * s6 + x[5] * c6) * t7;
    out[7] = x[4] * c6 - x[5] * s6;
    out[8] = (x[4] * s6 + x[5] * c6) / c7;
    out[9] = c7 * c8 * x[0] + (-c6 * s8 + s6 * s7 * c8) * x[1] + (s6 * s8 + c6 * s7 * c8) * x[2];
    out[10] = c7 * s8 * x[0] + (c6 * c8 + s6 * s7 * s8) * x[1] + (c6 * s7 * s8 - s6 * c8) * x[2];
    out[11] = s7 * x[0] - s6 * c7 * x[1] - c6 * c7 * x[2];
    Ok(())
}
