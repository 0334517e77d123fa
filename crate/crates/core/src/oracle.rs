//! Ground truth that shares no code with the solver: a brute-force
//! minimum-time search over quantized group states, and the discounted cost
//! of arriving at a known time.

use std::f64::consts::PI;

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lie::{
    dynamics_direction, exp_map, log_map, speed_bound, AlgebraVector, ControlSet, ControlValue,
    GroupElement, LieError, SystemSpec,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("target not reached within t_max = {0}")]
    Unreachable(f64),
    #[error("invalid oracle configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Lie(#[from] LieError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Duration of one search edge.
    pub dt: f64,
    /// Cell size used to deduplicate chart coordinates.
    pub quantization: f64,
    pub control_samples: usize,
    pub t_max: f64,
}

impl OracleConfig {
    /// Cells as wide as one step at full speed.
    pub fn for_system(spec: &SystemSpec, dt: f64) -> Result<Self, OracleError> {
        let b = speed_bound(spec)?;
        Ok(Self {
            dt,
            quantization: dt * b,
            control_samples: 16,
            t_max: 4.0,
        })
    }

    fn validate(&self, spec: &SystemSpec, target_radius: f64) -> Result<(), OracleError> {
        let bad = |m: String| Err(OracleError::InvalidConfig(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.quantization > 0.0) {
            return bad("quantization must be positive".into());
        }
        if self.control_samples < 2 {
            return bad("at least two control samples are required".into());
        }
        if !(self.t_max > 0.0) {
            return bad("t_max must be positive".into());
        }
        if !(target_radius > 0.0) {
            return bad("target radius must be positive".into());
        }
        let b = speed_bound(spec)?;
        if self.quantization > self.dt * b * (1.0 + 1e-12) {
            return bad(format!(
                "quantization {} is coarser than one step ({})",
                self.quantization,
                self.dt * b
            ));
        }
        if self.dt * b > target_radius {
            return bad(format!(
                "one step ({}) is longer than the target radius {target_radius}",
                self.dt * b
            ));
        }
        Ok(())
    }
}

/// Control samples for the search, built here rather than borrowed from the
/// solver so the two stay independent.
fn sample_controls(spec: &SystemSpec, n: usize) -> Vec<ControlValue> {
    let m = spec.control_dim();
    match spec.control_set {
        ControlSet::Sphere { radius } if m == 1 => {
            vec![ControlValue::new([radius]), ControlValue::new([-radius])]
        }
        ControlSet::Sphere { radius } => (0..n)
            .map(|k| {
                let phi = 2.0 * PI * k as f64 / n as f64;
                ControlValue::new([radius * phi.cos(), radius * phi.sin()])
            })
            .collect(),
        ControlSet::Hypercube { bound } => {
            let per_axis = n.max(2);
            let mut out = vec![Vec::new()];
            for _ in 0..m {
                let mut next = Vec::new();
                for prefix in &out {
                    for i in 0..per_axis {
                        let mut v: Vec<f64> = prefix.clone();
                        v.push(-bound + 2.0 * bound * i as f64 / (per_axis - 1) as f64);
                        next.push(v);
                    }
                }
                out = next;
            }
            out.into_iter().map(ControlValue).collect()
        }
    }
}

fn cell_key(p: &AlgebraVector, q: f64) -> u64 {
    let pack = |x: f64| ((x / q).round() as i64 + (1 << 20)) as u64 & 0x1f_ffff;
    pack(p.x()) << 42 | pack(p.y()) << 21 | pack(p.z())
}

/// Minimum time from `u0` to the chart ball `‖log U‖ ≤ r_T`.
///
/// Uniform-cost search where every edge is an exact constant-control flow of
/// duration `dt`; with equal edge costs the search expands level by level.
/// A state is dropped when its quantized chart cell was reached at an
/// earlier level.
pub fn brute_force_min_time(
    spec: &SystemSpec,
    u0: &GroupElement,
    target_radius: f64,
    cfg: &OracleConfig,
) -> Result<f64, OracleError> {
    cfg.validate(spec, target_radius)?;
    let start = log_map(u0)?;
    if start.norm() <= target_radius {
        return Ok(0.0);
    }
    let directions: Vec<AlgebraVector> = sample_controls(spec, cfg.control_samples)
        .iter()
        .map(|v| dynamics_direction(v, spec))
        .collect();
    let steps: Vec<GroupElement> = directions.iter().map(|d| exp_map(&(*d * cfg.dt))).collect();

    let mut seen = FxHashSet::default();
    seen.insert(cell_key(&start, cfg.quantization));
    let mut frontier = vec![*u0];
    let mut level = 0usize;
    while !frontier.is_empty() {
        level += 1;
        let t = level as f64 * cfg.dt;
        if t > cfg.t_max + 1e-12 {
            break;
        }
        // new cells reached at this cost; the representative kept per cell is
        // the arrival nearest the identity
        let mut reached: FxHashMap<u64, (f64, GroupElement)> = FxHashMap::default();
        for u in &frontier {
            for step in &steps {
                let child = GroupElement::project(&(step.matrix() * u.matrix()));
                let Ok(chart) = log_map(&child) else {
                    continue;
                };
                let r = chart.norm();
                if r <= target_radius {
                    return Ok(t);
                }
                let key = cell_key(&chart, cfg.quantization);
                if seen.contains(&key) {
                    continue;
                }
                reached
                    .entry(key)
                    .and_modify(|e| {
                        if r < e.0 {
                            *e = (r, child);
                        }
                    })
                    .or_insert((r, child));
            }
        }
        let mut next: Vec<(u64, GroupElement)> =
            reached.into_iter().map(|(k, (_, u))| (k, u)).collect();
        next.sort_unstable_by_key(|e| e.0);
        seen.extend(next.iter().map(|e| e.0));
        frontier = next.into_iter().map(|e| e.1).collect();
    }
    Err(OracleError::Unreachable(cfg.t_max))
}

/// `(1 - e^{-λT})/λ`: the discounted cost of arriving at time `T` with unit
/// running cost.
pub fn oracle_discounted_value(t: f64, lambda: f64) -> f64 {
    if t.is_infinite() {
        return 1.0 / lambda;
    }
    -(-lambda * t).exp_m1() / lambda
}

/// Chart points `θ e_a` for each axis `a` and `θ ∈ {0.4, 0.8, 1.2}`.
pub fn axis_probes() -> Vec<AlgebraVector> {
    let mut out = Vec::with_capacity(9);
    for axis in 0..3 {
        for theta in [0.4, 0.8, 1.2] {
            let mut c = [0.0; 3];
            c[axis] = theta;
            out.push(AlgebraVector::from(c));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn start_inside_target() {
        let spec = SystemSpec::eq27(0.0);
        let cfg = OracleConfig::for_system(&spec, 0.01).unwrap();
        let u = exp_map(&AlgebraVector::new(0.05, 0.0, 0.0));
        assert_eq!(brute_force_min_time(&spec, &u, 0.1, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn x_axis_rotation_takes_half_the_angle() {
        let spec = SystemSpec::eq27(0.0);
        let r_t = 0.05;
        for dt in [0.02, 0.01, 0.005] {
            let cfg = OracleConfig::for_system(&spec, dt).unwrap();
            let u = exp_map(&AlgebraVector::new(0.6, 0.0, 0.0));
            let t = brute_force_min_time(&spec, &u, r_t, &cfg).unwrap();
            assert!((t - (0.6 - r_t) / 2.0).abs() <= dt + 1e-12, "dt {dt}: {t}");
        }
    }

    #[test]
    fn farther_along_a_ray_takes_longer() {
        let spec = SystemSpec::eq27(0.0);
        let cfg = OracleConfig::for_system(&spec, 0.01).unwrap();
        for axis in [
            AlgebraVector::new(1.0, 0.0, 0.0),
            AlgebraVector::new(0.0, 0.0, 1.0),
        ] {
            let near = brute_force_min_time(&spec, &exp_map(&(axis * 0.4)), 0.2, &cfg).unwrap();
            let far = brute_force_min_time(&spec, &exp_map(&(axis * 0.8)), 0.2, &cfg).unwrap();
            assert!(far >= near);
        }
    }

    #[test]
    fn unreachable_within_horizon() {
        let spec = SystemSpec::eq27(0.0);
        let cfg = OracleConfig {
            t_max: 0.05,
            ..OracleConfig::for_system(&spec, 0.01).unwrap()
        };
        let u = exp_map(&AlgebraVector::new(1.0, 0.0, 0.0));
        assert_eq!(
            brute_force_min_time(&spec, &u, 0.2, &cfg),
            Err(OracleError::Unreachable(0.05))
        );
    }

    #[test]
    fn bad_configs() {
        let spec = SystemSpec::eq27(0.0);
        let u = GroupElement::identity();
        let base = OracleConfig::for_system(&spec, 0.01).unwrap();
        for cfg in [
            OracleConfig { dt: 0.0, ..base },
            OracleConfig {
                quantization: 0.05,
                ..base
            },
            OracleConfig {
                dt: 0.5,
                quantization: 0.5,
                ..base
            },
        ] {
            assert!(matches!(
                brute_force_min_time(&spec, &u, 0.2, &cfg),
                Err(OracleError::InvalidConfig(_))
            ));
        }
    }

    #[test]
    fn discounted_value() {
        assert_eq!(oracle_discounted_value(0.0, 0.5), 0.0);
        assert_eq!(oracle_discounted_value(f64::INFINITY, 0.5), 2.0);
        assert!((oracle_discounted_value(1e6, 0.5) - 2.0).abs() < 1e-12);
        assert!((oracle_discounted_value(1.0, 1.0) - (1.0 - (-1f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn probe_set() {
        let p = axis_probes();
        assert_eq!(p.len(), 9);
        assert_eq!(p[4], AlgebraVector::new(0.0, 0.8, 0.0));
    }
}
