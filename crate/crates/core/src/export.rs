//! Plain-text exports of fields, histories, trajectories and oracle runs.
//!
//! Floats are written with Rust's shortest round-trip formatting, so parsing
//! a file back gives the exact values and identical runs give identical
//! bytes.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::lie::{AlgebraVector, SystemSpec};
use crate::mesh::SimplicialMesh;
use crate::solver::{SolverConfig, ValueField};
use crate::trajectory::TrajectoryRecord;

/// `x,y,z,value,flag`, one row per vertex.
pub fn write_values_csv<W: Write>(
    mut w: W,
    mesh: &SimplicialMesh,
    values: &[f64],
) -> io::Result<()> {
    writeln!(w, "x,y,z,value,flag")?;
    for ((p, v), f) in mesh.vertices().iter().zip(values).zip(mesh.flags()) {
        writeln!(w, "{},{},{},{},{}", p.x(), p.y(), p.z(), v, f.code())?;
    }
    Ok(())
}

/// `iter,metric`, iterations counted from 1.
pub fn write_metric_csv<W: Write>(mut w: W, history: &[f64]) -> io::Result<()> {
    writeln!(w, "iter,metric")?;
    for (k, m) in history.iter().enumerate() {
        writeln!(w, "{},{}", k + 1, m)?;
    }
    Ok(())
}

/// `t,x,y,z,v1,...,vm` with chart coordinates.
pub fn write_trajectory_csv<W: Write>(
    mut w: W,
    record: &TrajectoryRecord,
    control_dim: usize,
) -> io::Result<()> {
    write!(w, "t,x,y,z")?;
    for k in 1..=control_dim {
        write!(w, ",v{k}")?;
    }
    writeln!(w)?;
    for s in &record.samples {
        write!(w, "{},{},{},{}", s.t, s.chart.x(), s.chart.y(), s.chart.z())?;
        for v in s.control.as_slice() {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// `probe_x,probe_y,probe_z,time`; unreachable probes carry `inf`.
pub fn write_oracle_csv<W: Write>(mut w: W, rows: &[(AlgebraVector, f64)]) -> io::Result<()> {
    writeln!(w, "probe_x,probe_y,probe_z,time")?;
    for (p, t) in rows {
        writeln!(w, "{},{},{},{}", p.x(), p.y(), p.z(), t)?;
    }
    Ok(())
}

/// Mesh parameters; the triangulation is a pure function of these.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshParams {
    pub rho: f64,
    pub target_radius: f64,
    pub h: f64,
}

impl MeshParams {
    pub fn of(mesh: &SimplicialMesh) -> Self {
        Self {
            rho: mesh.rho(),
            target_radius: mesh.target_radius(),
            h: mesh.h(),
        }
    }
}

/// A field together with everything needed to rebuild its mesh and operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldBundle {
    pub system: SystemSpec,
    pub mesh: MeshParams,
    pub vertex_count: usize,
    pub simplex_count: usize,
    pub config: SolverConfig,
    pub field: ValueField,
}

pub fn write_field_json<W: Write>(w: W, bundle: &FieldBundle) -> io::Result<()> {
    serde_json::to_writer_pretty(w, bundle).map_err(io::Error::from)
}

#[derive(Serialize)]
struct MeshDump<'a> {
    #[serde(flatten)]
    params: MeshParams,
    vertices: &'a [AlgebraVector],
    simplices: &'a [[u32; 4]],
    flags: Vec<u8>,
}

/// Full mesh as JSON: parameters, vertex coordinates, simplices and flag
/// codes.
pub fn write_mesh_json<W: Write>(w: W, mesh: &SimplicialMesh) -> io::Result<()> {
    let dump = MeshDump {
        params: MeshParams::of(mesh),
        vertices: mesh.vertices(),
        simplices: mesh.simplices(),
        flags: mesh.flags().iter().map(|f| f.code()).collect(),
    };
    serde_json::to_writer(w, &dump).map_err(io::Error::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_round_trip_exactly() {
        let mesh = SimplicialMesh::triangulate_ball(0.6, 0.2, 0.2).unwrap();
        let values: Vec<f64> = (0..mesh.vertex_count())
            .map(|i| (i as f64).sqrt() / 3.0)
            .collect();
        let mut buf = Vec::new();
        write_values_csv(&mut buf, &mesh, &values).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,y,z,value,flag"));
        let back: Vec<f64> = lines
            .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
            .collect();
        assert_eq!(back, values);
    }

    #[test]
    fn oracle_rows_mark_unreachable() {
        let mut buf = Vec::new();
        write_oracle_csv(
            &mut buf,
            &[(AlgebraVector::new(1.0, 0.0, 0.0), f64::INFINITY)],
        )
        .unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "probe_x,probe_y,probe_z,time\n1,0,0,inf\n"
        );
    }

    #[test]
    fn metric_rows() {
        let mut buf = Vec::new();
        write_metric_csv(&mut buf, &[0.5, 0.25]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "iter,metric\n1,0.5\n2,0.25\n"
        );
    }
}
