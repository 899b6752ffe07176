//! Two-dimensional cross sections of an agent's Q estimates.

use std::fmt::Write as _;

use crate::agents::{Agent, AgentKind};
use crate::env::EnvSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceRow {
    pub a_i: f64,
    pub a_j: f64,
    pub q_double: f64,
    pub q_sequential: Option<f64>,
}

fn sweep_values(lo: f64, hi: f64, grid: usize, centers: bool) -> Vec<f64> {
    if centers {
        let w = (hi - lo) / grid as f64;
        (0..grid).map(|k| lo + (k as f64 + 0.5) * w).collect()
    } else {
        (0..grid)
            .map(|k| lo + (hi - lo) * k as f64 / (grid - 1) as f64)
            .collect()
    }
}

/// `grid x grid` evaluations over action dimensions `dims`, other dimensions
/// held at 0. For discretizing agents with `grid` equal to their bin count
/// the sweep visits bin centers; otherwise it spans the bounds uniformly.
pub fn export_q_surface(
    agent: &dyn Agent,
    spec: &EnvSpec,
    obs: &[f64],
    dims: (usize, usize),
    grid: usize,
) -> Result<Vec<SurfaceRow>> {
    let n = spec.action_dim;
    let (i, j) = dims;
    if i >= n || j >= n || i == j {
        return Err(Error::InvalidArgument(format!(
            "surface dimensions ({i}, {j}) must be distinct and below the action dimension {n}"
        )));
    }
    if grid < 2 {
        return Err(Error::InvalidArgument(format!(
            "surface grid must be at least 2, got {grid}"
        )));
    }
    let discretizing = !matches!(agent.kind(), AgentKind::Ddpg | AgentKind::Naf);
    let centers = discretizing && grid == agent.config().bins;
    let xs = sweep_values(spec.action_low[i], spec.action_high[i], grid, centers);
    let ys = sweep_values(spec.action_low[j], spec.action_high[j], grid, centers);
    let mut rows = Vec::with_capacity(grid * grid);
    for &x in &xs {
        for &y in &ys {
            let mut a = vec![0.0; n];
            a[i] = x;
            a[j] = y;
            let q = agent.q_estimate(obs, &a)?;
            rows.push(SurfaceRow {
                a_i: x,
                a_j: y,
                q_double: q.double,
                q_sequential: q.sequential,
            });
        }
    }
    Ok(rows)
}

/// CSV with header `a_i,a_j,q_double,q_sequential`; a missing sequential
/// value is left empty.
pub fn surface_csv(rows: &[SurfaceRow]) -> String {
    let mut out = String::from("a_i,a_j,q_double,q_sequential\n");
    for r in rows {
        let seq = r.q_sequential.map_or(String::new(), |v| v.to_string());
        writeln!(out, "{},{},{},{}", r.a_i, r.a_j, r.q_double, seq)
            .expect("writing to a String cannot fail");
    }
    out
}

/// Row with the largest double-network value; ties keep the first.
pub fn surface_argmax(rows: &[SurfaceRow]) -> Option<&SurfaceRow> {
    rows.iter()
        .fold(None, |best: Option<&SurfaceRow>, r| match best {
            Some(b) if b.q_double >= r.q_double => Some(b),
            _ => Some(r),
        })
}
