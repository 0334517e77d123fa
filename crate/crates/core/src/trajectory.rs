//! Policy extraction and open-loop integration on a solved field.
//!
//! The control at a continuous state is the minimiser of the same candidate
//! the solver uses, with the foot point flowed from the state itself and the
//! field interpolated there.

use crate::lie::{
    dynamics_direction, exp_map, flow, log_map, AlgebraVector, ControlValue, GroupElement,
    SystemSpec,
};
use crate::mesh::SimplicialMesh;
use crate::solver::{discretize_controls, SolverConfig, SolverError, ValueField};

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub state: GroupElement,
    pub chart: AlgebraVector,
    /// Control applied from this sample to the next one.
    pub control: ControlValue,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub samples: Vec<TrajectorySample>,
    pub total_time: f64,
    pub reached_target: bool,
    /// Set when the next step would have left the meshed region; the record
    /// stops at the last state inside it.
    pub left_domain: bool,
}

/// The greedy policy of a solved field.
pub struct Policy<'a> {
    mesh: &'a SimplicialMesh,
    spec: &'a SystemSpec,
    field: &'a ValueField,
    controls: Vec<ControlValue>,
    steps: Vec<GroupElement>,
    lambda: f64,
    exterior: f64,
}

impl<'a> Policy<'a> {
    /// `config` is the configuration the field was solved with.
    pub fn new(
        mesh: &'a SimplicialMesh,
        spec: &'a SystemSpec,
        config: &SolverConfig,
        field: &'a ValueField,
    ) -> Result<Self, SolverError> {
        config.validate()?;
        if field.values.len() != mesh.vertex_count() {
            return Err(SolverError::InvalidConfig(format!(
                "field has {} values for a mesh of {} vertices",
                field.values.len(),
                mesh.vertex_count()
            )));
        }
        if !(field.dt > 0.0) {
            return Err(SolverError::InvalidConfig(
                "field timestep must be positive".into(),
            ));
        }
        let controls = discretize_controls(spec, config.control_samples)?;
        let steps = controls
            .iter()
            .map(|v| exp_map(&(dynamics_direction(v, spec) * field.dt)))
            .collect();
        Ok(Self {
            mesh,
            spec,
            field,
            controls,
            steps,
            lambda: config.lambda,
            exterior: config.v_cap,
        })
    }

    pub fn dt(&self) -> f64 {
        self.field.dt
    }

    pub fn controls(&self) -> &[ControlValue] {
        &self.controls
    }

    /// Interpolated field value, `v_cap` outside the mesh.
    pub fn value_at(&self, p: &AlgebraVector) -> f64 {
        match self.mesh.interpolate(&self.field.values, p) {
            Ok(v) => v,
            Err(_) => self.exterior,
        }
    }

    /// Index of the minimising control at chart point `p`; the first sample
    /// inside the target ball.
    pub fn control_index(&self, p: &AlgebraVector) -> Result<usize, SolverError> {
        self.mesh.locate(p)?;
        if p.norm() <= self.mesh.target_radius() {
            return Ok(0);
        }
        let start = exp_map(p);
        let dt = self.field.dt;
        let denom = 1.0 + self.lambda * dt;
        let mut best = (f64::INFINITY, 0);
        for (k, (v, step)) in self.controls.iter().zip(&self.steps).enumerate() {
            let foot = GroupElement::project(&(step.matrix() * start.matrix()));
            let next = match log_map(&foot) {
                Ok(q) => self.value_at(&q),
                Err(_) => self.exterior,
            };
            let cost = if self.lambda == 0.0 {
                1.0
            } else {
                self.spec.running_cost.eval(p, v)
            };
            let cand = (next + cost * dt) / denom;
            if cand < best.0 {
                best = (cand, k);
            }
        }
        Ok(best.1)
    }

    pub fn control_at(&self, p: &AlgebraVector) -> Result<ControlValue, SolverError> {
        Ok(self.controls[self.control_index(p)?].clone())
    }
}

/// The minimising control at chart point `p`.
pub fn policy_at(
    mesh: &SimplicialMesh,
    spec: &SystemSpec,
    config: &SolverConfig,
    field: &ValueField,
    p: &AlgebraVector,
) -> Result<ControlValue, SolverError> {
    Policy::new(mesh, spec, config, field)?.control_at(p)
}

/// Follows the policy from `u0` with the solver timestep until the chart
/// point is within `r_T + h` of the identity or `max_steps` steps were taken.
pub fn simulate(
    mesh: &SimplicialMesh,
    spec: &SystemSpec,
    config: &SolverConfig,
    field: &ValueField,
    u0: &GroupElement,
    max_steps: usize,
) -> Result<TrajectoryRecord, SolverError> {
    let policy = Policy::new(mesh, spec, config, field)?;
    let stop_radius = mesh.target_radius() + mesh.h();
    let dt = policy.dt();

    let mut state = *u0;
    let mut chart = log_map(&state)?;
    let mut control = policy.control_at(&chart)?;
    let mut samples = Vec::new();
    let mut reached_target = false;
    let mut left_domain = false;
    for k in 0..=max_steps {
        samples.push(TrajectorySample {
            t: k as f64 * dt,
            state,
            chart,
            control: control.clone(),
        });
        if chart.norm() <= stop_radius {
            reached_target = true;
            break;
        }
        if k == max_steps {
            break;
        }
        let next = flow(&state, &control, dt, spec);
        let next_control = log_map(&next)
            .map_err(SolverError::from)
            .and_then(|c| Ok((c, policy.control_at(&c)?)));
        match next_control {
            Ok((c, v)) => {
                state = next;
                chart = c;
                control = v;
            }
            Err(_) => {
                left_domain = true;
                break;
            }
        }
    }
    let total_time = samples.last().map_or(0.0, |s| s.t);
    Ok(TrajectoryRecord {
        samples,
        total_time,
        reached_target,
        left_domain,
    })
}

/// Per step, `V_{k+1} - ((1 + λΔt) V_k - ℓ Δt)` along the record with
/// interpolated values; nonpositive entries mean exact discrete descent.
pub fn descent_excess(
    record: &TrajectoryRecord,
    mesh: &SimplicialMesh,
    spec: &SystemSpec,
    config: &SolverConfig,
    field: &ValueField,
) -> Result<Vec<f64>, SolverError> {
    let policy = Policy::new(mesh, spec, config, field)?;
    let dt = field.dt;
    let values: Vec<f64> = record
        .samples
        .iter()
        .map(|s| policy.value_at(&s.chart))
        .collect();
    Ok(record
        .samples
        .windows(2)
        .zip(values.windows(2))
        .map(|(s, v)| {
            let cost = if config.lambda == 0.0 {
                1.0
            } else {
                spec.running_cost.eval(&s[0].chart, &s[0].control)
            };
            v[1] - ((1.0 + config.lambda * dt) * v[0] - cost * dt)
        })
        .collect())
}
