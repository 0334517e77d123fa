//! The discrete HJB fixed point.
//!
//! For a non-target vertex `x` the Bellman operator is
//!
//! ```text
//! F(V)(x) = min_v ( Σ_i w_i(x, v) V(y_i) + ℓ(x, v) Δt ) / (1 + λ Δt)
//! ```
//!
//! where `y_i`, `w_i` are the vertices and barycentric weights of the simplex
//! holding the foot point `log(exp(Δt f(v)) · exp(x))` and `Δt = h / B`. Foot
//! points that leave the mesh (or land on the antipode `-I`) are absorbed by
//! an exterior ghost state whose value is `v_cap`.
//!
//! Foot points do not depend on `V`, so [`BellmanOperator`] computes every
//! stencil once and each sweep is a sparse matrix-vector pass.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lie::{
    dynamics_direction, exp_map, log_map, speed_bound, AlgebraVector, ControlSet, ControlValue,
    GroupElement, LieError, SystemSpec,
};
use crate::mesh::{MeshError, SimplicialMesh};

/// Default number of sampled controls.
pub const DEFAULT_CONTROL_SAMPLES: usize = 16;
pub const DEFAULT_EPS_STOP: f64 = 1e-6;
pub const DEFAULT_MAX_ITERS: usize = 2000;
/// Default time cap for minimum-time solves.
pub const DEFAULT_TIME_CAP: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("value {0} outside the Kruskov range")]
    KruskovRange(f64),
}

/// Parameters of a value-iteration solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub lambda: f64,
    pub control_samples: usize,
    pub eps_stop: f64,
    pub max_iters: usize,
    /// Value of the absorbing exterior state.
    pub v_cap: f64,
    /// Starting value on non-target vertices.
    pub init_value: f64,
}

impl SolverConfig {
    /// Discounted solve starting from the super-solution `ℓ_max/λ`.
    pub fn discounted(spec: &SystemSpec, lambda: f64) -> Result<Self, SolverError> {
        if !(lambda > 0.0) {
            return Err(SolverError::InvalidConfig(
                "discounted solves need lambda > 0".into(),
            ));
        }
        let controls = discretize_controls(spec, DEFAULT_CONTROL_SAMPLES)?;
        let cap = running_cost_max(spec, &controls) / lambda;
        Ok(Self {
            lambda,
            control_samples: DEFAULT_CONTROL_SAMPLES,
            eps_stop: DEFAULT_EPS_STOP,
            max_iters: DEFAULT_MAX_ITERS,
            v_cap: cap,
            init_value: cap,
        })
    }

    /// Minimum-time solve; `v_cap` and `init_value` are times.
    pub fn min_time() -> Self {
        Self {
            lambda: 0.0,
            control_samples: DEFAULT_CONTROL_SAMPLES,
            eps_stop: DEFAULT_EPS_STOP,
            max_iters: DEFAULT_MAX_ITERS,
            v_cap: DEFAULT_TIME_CAP,
            init_value: DEFAULT_TIME_CAP,
        }
    }

    pub fn with_control_samples(mut self, n: usize) -> Self {
        self.control_samples = n;
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps_stop = eps;
        self
    }

    pub fn with_max_iters(mut self, n: usize) -> Self {
        self.max_iters = n;
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::InvalidConfig(m.to_string()));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be finite and nonnegative");
        }
        if !(self.eps_stop > 0.0) {
            return bad("eps_stop must be positive");
        }
        if self.control_samples < 2 {
            return bad("at least two control samples are required");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        if !(self.v_cap.is_finite() && self.init_value >= 0.0 && self.v_cap >= self.init_value) {
            return bad("need v_cap >= init_value >= 0");
        }
        Ok(())
    }
}

/// Per-vertex values and the history of the solve that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueField {
    pub values: Vec<f64>,
    /// `max_x |V_{k+1}(x) - V_k(x)|` for each sweep.
    pub metric_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `‖V - F(V)‖_∞` of the returned field.
    pub residual: f64,
    pub h: f64,
    pub lambda: f64,
    pub dt: f64,
}

impl ValueField {
    /// Bound on the fixed-point residual implied by the stopping rule,
    /// `eps / (1 - κ)` with `κ = 1/(1 + λΔt)`.
    pub fn residual_bound(&self, eps_stop: f64) -> f64 {
        let kappa = 1.0 / (1.0 + self.lambda * self.dt);
        eps_stop / (1.0 - kappa)
    }
}

/// Samples the control set.
///
/// Spheres (m ≤ 2) use `n` equally spaced angles; hypercubes use a tensor
/// grid with an odd number of points per axis (`n`, or `n + 1` when `n` is
/// even) so that every face and the centre are included.
pub fn discretize_controls(spec: &SystemSpec, n: usize) -> Result<Vec<ControlValue>, SolverError> {
    if n < 2 {
        return Err(SolverError::InvalidConfig(
            "at least two control samples are required".into(),
        ));
    }
    let m = spec.control_dim();
    let controls = match spec.control_set {
        ControlSet::Sphere { radius } => match m {
            1 => vec![ControlValue::new([radius]), ControlValue::new([-radius])],
            2 => (0..n)
                .map(|k| {
                    let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                    // snap the quarter points so that ±v cancel exactly
                    let (s, c) = match (4 * k) % n {
                        0 => exact_quarter(4 * k / n),
                        _ => theta.sin_cos(),
                    };
                    ControlValue::new([radius * c, radius * s])
                })
                .collect(),
            _ => {
                return Err(SolverError::InvalidConfig(
                    "sphere control sets support at most two controls".into(),
                ))
            }
        },
        ControlSet::Hypercube { bound } => {
            let per_axis = n | 1;
            let half = (per_axis / 2) as f64;
            let axis: Vec<f64> = (0..per_axis)
                .map(|i| bound * (i as f64 - half) / half)
                .collect();
            let total = per_axis.pow(m as u32);
            (0..total)
                .map(|mut idx| {
                    let mut v = vec![0.0; m];
                    for slot in v.iter_mut().rev() {
                        *slot = axis[idx % per_axis];
                        idx /= per_axis;
                    }
                    ControlValue(v)
                })
                .collect()
        }
    };
    Ok(controls)
}

fn exact_quarter(q: usize) -> (f64, f64) {
    match q % 4 {
        0 => (0.0, 1.0),
        1 => (1.0, 0.0),
        2 => (0.0, -1.0),
        _ => (-1.0, 0.0),
    }
}

fn running_cost_max(spec: &SystemSpec, controls: &[ControlValue]) -> f64 {
    let origin = AlgebraVector::zero();
    controls
        .iter()
        .map(|v| spec.running_cost.eval(&origin, v))
        .fold(0.0, f64::max)
}

/// `Δt = h / B`, constant over the mesh by right-invariance.
pub fn local_timestep(spec: &SystemSpec, h: f64) -> Result<f64, SolverError> {
    if !(h > 0.0) {
        return Err(SolverError::InvalidConfig("h must be positive".into()));
    }
    Ok(h / speed_bound(spec)?)
}

/// The simplex a foot point lands in, or absorption by the exterior.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stencil {
    pub vertices: [u32; 4],
    pub weights: [f64; 4],
}

const ABSORBED: u32 = u32::MAX;

impl Stencil {
    fn absorbed() -> Self {
        Self {
            vertices: [ABSORBED; 4],
            weights: [0.0; 4],
        }
    }

    pub fn is_absorbed(&self) -> bool {
        self.vertices[0] == ABSORBED
    }

    fn expectation(&self, values: &[f64], exterior: f64) -> f64 {
        if self.is_absorbed() {
            return exterior;
        }
        let mut acc = 0.0;
        for i in 0..4 {
            acc += self.weights[i] * values[self.vertices[i] as usize];
        }
        acc
    }
}

/// Flows `start` for `dt` under each control step and locates the result.
fn foot_stencil(mesh: &SimplicialMesh, start: &GroupElement, step: &GroupElement) -> Stencil {
    let foot = GroupElement::project(&(step.matrix() * start.matrix()));
    let Ok(p) = log_map(&foot) else {
        return Stencil::absorbed();
    };
    match mesh.locate(&p) {
        Ok(loc) => {
            let s = mesh.simplices()[loc.simplex_id];
            // clip face round-off so the weights are exact probabilities
            let mut w = loc.weights.map(|x| x.max(0.0));
            let total: f64 = w.iter().sum();
            for x in &mut w {
                *x /= total;
            }
            Stencil {
                vertices: s,
                weights: w,
            }
        }
        Err(_) => Stencil::absorbed(),
    }
}

/// The Bellman operator `F^h` on a fixed mesh, with every foot-point stencil
/// precomputed.
pub struct BellmanOperator<'a> {
    mesh: &'a SimplicialMesh,
    controls: Vec<ControlValue>,
    stencils: Vec<Stencil>,
    costs: Vec<f64>,
    lambda: f64,
    dt: f64,
    exterior: f64,
    /// When set, values are capped at the exterior value.
    cap_at_exterior: bool,
}

impl<'a> BellmanOperator<'a> {
    pub fn new(
        mesh: &'a SimplicialMesh,
        spec: &SystemSpec,
        config: &SolverConfig,
    ) -> Result<Self, SolverError> {
        config.validate()?;
        spec.validate()?;
        Self::build(
            mesh,
            spec,
            config,
            config.lambda,
            config.v_cap,
            false,
            false,
        )
    }

    fn build(
        mesh: &'a SimplicialMesh,
        spec: &SystemSpec,
        config: &SolverConfig,
        lambda: f64,
        exterior: f64,
        unit_cost: bool,
        cap_at_exterior: bool,
    ) -> Result<Self, SolverError> {
        let controls = discretize_controls(spec, config.control_samples)?;
        let dt = local_timestep(spec, mesh.h())?;
        let steps: Vec<GroupElement> = controls
            .iter()
            .map(|v| exp_map(&(dynamics_direction(v, spec) * dt)))
            .collect();
        let nc = controls.len();
        let per_vertex: Vec<(Vec<Stencil>, Vec<f64>)> = mesh
            .vertices()
            .par_iter()
            .enumerate()
            .map(|(vid, x)| {
                if mesh.is_target(vid) {
                    return (vec![Stencil::absorbed(); nc], vec![0.0; nc]);
                }
                let start = exp_map(x);
                let st = steps
                    .iter()
                    .map(|s| foot_stencil(mesh, &start, s))
                    .collect();
                let costs = controls
                    .iter()
                    .map(|v| {
                        if unit_cost {
                            1.0
                        } else {
                            spec.running_cost.eval(x, v)
                        }
                    })
                    .collect();
                (st, costs)
            })
            .collect();
        let mut stencils = Vec::with_capacity(per_vertex.len() * nc);
        let mut costs = Vec::with_capacity(per_vertex.len() * nc);
        for (s, c) in per_vertex {
            stencils.extend(s);
            costs.extend(c);
        }
        Ok(Self {
            mesh,
            controls,
            stencils,
            costs,
            lambda,
            dt,
            exterior,
            cap_at_exterior,
        })
    }

    pub fn mesh(&self) -> &SimplicialMesh {
        self.mesh
    }

    pub fn controls(&self) -> &[ControlValue] {
        &self.controls
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn exterior(&self) -> f64 {
        self.exterior
    }

    /// Contraction modulus `1/(1 + λΔt)`.
    pub fn contraction_modulus(&self) -> f64 {
        1.0 / (1.0 + self.lambda * self.dt)
    }

    /// Stencils of vertex `x`, one per control.
    pub fn stencils(&self, x: usize) -> &[Stencil] {
        let nc = self.controls.len();
        &self.stencils[x * nc..(x + 1) * nc]
    }

    /// Minimum over controls at a non-target vertex, with the lowest-index
    /// minimiser.
    pub fn update(&self, values: &[f64], x: usize) -> (f64, usize) {
        self.update_with_exterior(values, x, self.exterior)
    }

    /// Same as [`update`](Self::update) with the exterior ghost value
    /// overridden; `F(V + c)` shifts the ghost along with the field.
    pub fn update_with_exterior(&self, values: &[f64], x: usize, exterior: f64) -> (f64, usize) {
        let nc = self.controls.len();
        let denom = 1.0 + self.lambda * self.dt;
        let mut best = f64::INFINITY;
        let mut arg = 0;
        for k in 0..nc {
            let s = &self.stencils[x * nc + k];
            let cand = (s.expectation(values, exterior) + self.costs[x * nc + k] * self.dt) / denom;
            if cand < best {
                best = cand;
                arg = k;
            }
        }
        if self.cap_at_exterior && best > exterior {
            best = exterior;
        }
        (best, arg)
    }

    /// One Jacobi sweep: `F` on every non-target vertex, zero on targets.
    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        self.apply_with_exterior(values, self.exterior)
    }

    pub fn apply_with_exterior(&self, values: &[f64], exterior: f64) -> Vec<f64> {
        (0..values.len())
            .into_par_iter()
            .map(|x| {
                if self.mesh.is_target(x) {
                    0.0
                } else {
                    self.update_with_exterior(values, x, exterior).0
                }
            })
            .collect()
    }

    /// `max_x |V(x) - F(V)(x)|`.
    pub fn residual(&self, values: &[f64]) -> f64 {
        sup_distance(values, &self.apply(values))
    }

    /// Value iteration from `init` on non-target vertices.
    pub fn iterate(&self, init: f64, eps_stop: f64, max_iters: usize) -> ValueField {
        let mesh = self.mesh;
        let mut values: Vec<f64> = (0..mesh.vertex_count())
            .map(|x| if mesh.is_target(x) { 0.0 } else { init })
            .collect();
        let mut history = Vec::new();
        let mut converged = mesh
            .flags()
            .iter()
            .all(|f| *f == crate::mesh::VertexFlag::Target);
        while !converged && history.len() < max_iters {
            let next = self.apply(&values);
            let metric = sup_distance(&values, &next);
            values = next;
            history.push(metric);
            converged = metric < eps_stop;
        }
        let residual = if history.is_empty() {
            0.0
        } else {
            self.residual(&values)
        };
        ValueField {
            values,
            iterations: history.len(),
            metric_history: history,
            converged,
            residual,
            h: mesh.h(),
            lambda: self.lambda,
            dt: self.dt,
        }
    }
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// One Bellman update at vertex `x`, computing foot points directly rather
/// than through a cached operator.
pub fn bellman_update(
    mesh: &SimplicialMesh,
    spec: &SystemSpec,
    config: &SolverConfig,
    values: &[f64],
    x: usize,
) -> Result<(f64, ControlValue), SolverError> {
    config.validate()?;
    if x >= mesh.vertex_count() {
        return Err(MeshError::InvalidVertex(x).into());
    }
    let controls = discretize_controls(spec, config.control_samples)?;
    let dt = local_timestep(spec, mesh.h())?;
    let chart = mesh.vertices()[x];
    let start = exp_map(&chart);
    let denom = 1.0 + config.lambda * dt;
    let mut best = (f64::INFINITY, 0);
    for (k, v) in controls.iter().enumerate() {
        let step = exp_map(&(dynamics_direction(v, spec) * dt));
        let s = foot_stencil(mesh, &start, &step);
        let cand =
            (s.expectation(values, config.v_cap) + spec.running_cost.eval(&chart, v) * dt) / denom;
        if cand < best.0 {
            best = (cand, k);
        }
    }
    Ok((best.0, controls[best.1].clone()))
}

/// Discounted value iteration; `λ` must be positive.
pub fn value_iteration(
    mesh: &SimplicialMesh,
    spec: &SystemSpec,
    config: &SolverConfig,
) -> Result<ValueField, SolverError> {
    if !(config.lambda > 0.0) {
        return Err(SolverError::InvalidConfig(
            "value iteration needs lambda > 0; use solve_min_time for lambda = 0".into(),
        ));
    }
    let op = BellmanOperator::new(mesh, spec, config)?;
    let controls = op.controls();
    let ell_max = running_cost_max(spec, controls);
    if config.v_cap < ell_max / config.lambda * (1.0 - 1e-12) {
        return Err(SolverError::InvalidConfig(format!(
            "v_cap = {} is below the cost bound ℓ_max/λ = {}",
            config.v_cap,
            ell_max / config.lambda
        )));
    }
    Ok(op.iterate(config.init_value, config.eps_stop, config.max_iters))
}

/// `R = 1 - e^{-S}`.
pub fn kruskov(s: f64) -> Result<f64, SolverError> {
    if !(s >= 0.0) {
        return Err(SolverError::KruskovRange(s));
    }
    Ok(-(-s).exp_m1())
}

/// `S = -ln(1 - R)`.
pub fn kruskov_inverse(r: f64) -> Result<f64, SolverError> {
    if !(0.0..1.0).contains(&r) {
        return Err(SolverError::KruskovRange(r));
    }
    Ok(-(-r).ln_1p())
}

/// Builds the Bellman operator of the Kruskov-transformed minimum-time
/// problem: unit discount, unit running cost, exterior `1 - e^{-v_cap}` and
/// values capped there.
pub fn min_time_operator<'a>(
    mesh: &'a SimplicialMesh,
    spec: &SystemSpec,
    config: &SolverConfig,
) -> Result<BellmanOperator<'a>, SolverError> {
    config.validate()?;
    spec.validate()?;
    if !spec.running_cost.is_unit() {
        return Err(SolverError::InvalidConfig(
            "minimum-time solves need a unit running cost".into(),
        ));
    }
    let r_cap = kruskov(config.v_cap)?;
    BellmanOperator::build(mesh, spec, config, 1.0, r_cap, true, true)
}

/// Minimum-time values `T` via the Kruskov transform: value iteration on `R`
/// then `T = -ln(1 - R)` per vertex. `config.v_cap` and `init_value` are times.
pub fn solve_min_time(
    mesh: &SimplicialMesh,
    spec: &SystemSpec,
    config: &SolverConfig,
) -> Result<ValueField, SolverError> {
    let op = min_time_operator(mesh, spec, config)?;
    let r_init = kruskov(config.init_value)?;
    let mut field = op.iterate(r_init, config.eps_stop, config.max_iters);
    field.values = field
        .values
        .iter()
        .map(|&r| kruskov_inverse(r))
        .collect::<Result<_, _>>()?;
    field.lambda = 0.0;
    Ok(field)
}
