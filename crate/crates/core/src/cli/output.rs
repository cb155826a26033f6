//! CSV and JSON writers that keep an inventory of everything written.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analysis::influence_samples;
use crate::model::Spouse;
use crate::solver::Trajectory;

pub const TRAJECTORY_HEADER: &str = "t,x1,x2,lambda1,lambda2,u1,u2";
pub const INFLUENCE_HEADER: &str = "t,partner_x,influence,control";

/// 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    /// Path relative to the output root, `/`-separated.
    pub path: String,
    pub bytes: u64,
}

/// Output root plus the list of files written below it.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, contents: &str) -> io::Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, contents)?;
        self.files.push(FileEntry {
            path: rel.to_string(),
            bytes: contents.len() as u64,
        });
        Ok(())
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    /// Writes the trajectory and both influence files under `prefix`.
    pub fn write_trajectory_set(&mut self, prefix: &str, traj: &Trajectory) -> io::Result<()> {
        self.write(&join(prefix, "trajectory.csv"), &trajectory_csv(traj))?;
        for spouse in Spouse::BOTH {
            let name = format!("influence_spouse{}.csv", spouse.index());
            self.write(&join(prefix, &name), &influence_csv(traj, spouse))?;
        }
        Ok(())
    }
}

pub fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}/{name}")
    }
}

/// Builds a CSV from a header and rows of preformatted cells.
pub fn csv<I, R>(header: &str, rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut out = String::with_capacity(4096);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        let mut first = true;
        for cell in row {
            if !first {
                out.push(',');
            }
            first = false;
            out.push_str(&cell);
        }
        out.push('\n');
    }
    out
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(traj.len() * 180);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for k in 0..traj.len() {
        let cells = [
            traj.time(k),
            traj.x1[k],
            traj.x2[k],
            traj.lam1[k],
            traj.lam2[k],
            traj.u1[k],
            traj.u2[k],
        ];
        for (i, v) in cells.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v:.16e}");
        }
        out.push('\n');
    }
    out
}

pub fn influence_csv(traj: &Trajectory, spouse: Spouse) -> String {
    csv(
        INFLUENCE_HEADER,
        influence_samples(traj, spouse)
            .into_iter()
            .map(|s| [num(s.t), num(s.partner_x), num(s.influence), num(s.control)]),
    )
}
