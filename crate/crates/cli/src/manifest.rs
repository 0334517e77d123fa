use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use su2dp::export::MeshParams;
use su2dp::lie::{AlgebraVector, SystemSpec};
use su2dp::oracle::OracleConfig;
use su2dp::solver::SolverConfig;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRAJECTORY_MANIFEST_FILE: &str = "traj_manifest.json";
pub const ORACLE_MANIFEST_FILE: &str = "oracle_manifest.json";

/// A chart point with the label used in file names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedPoint {
    pub name: String,
    pub chart: AlgebraVector,
}

/// Everything a command needs to reproduce its outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum RunConfig {
    Solve {
        system: SystemSpec,
        mesh: MeshParams,
        solver: SolverConfig,
    },
    Trajectory {
        /// Absolute path of the solved field directory.
        field: PathBuf,
        starts: Vec<NamedPoint>,
        max_steps: usize,
    },
    Oracle {
        system: SystemSpec,
        oracle: OracleConfig,
        target_radius: f64,
        probes: Vec<NamedPoint>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    #[serde(flatten)]
    pub run: RunConfig,
    /// Command-specific outcome (convergence, arrival times, ...).
    pub summary: serde_json::Value,
    pub files: Vec<String>,
    /// Wall-clock seconds per phase.
    pub timings: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(run: RunConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            run,
            summary: serde_json::Value::Null,
            files: Vec::new(),
            timings: BTreeMap::new(),
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        serde_json::from_reader(BufReader::new(f))
            .with_context(|| format!("parsing manifest {}", path.display()))
    }

    /// Each command has its own file name so that runs sharing a directory
    /// keep their manifests apart.
    pub fn file_name(&self) -> &'static str {
        match self.run {
            RunConfig::Solve { .. } => MANIFEST_FILE,
            RunConfig::Trajectory { .. } => TRAJECTORY_MANIFEST_FILE,
            RunConfig::Oracle { .. } => ORACLE_MANIFEST_FILE,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(self.file_name());
        let mut w = BufWriter::new(
            File::create(&path).with_context(|| format!("creating {}", path.display()))?,
        );
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}
