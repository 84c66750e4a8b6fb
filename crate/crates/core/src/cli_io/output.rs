//! Flat comma-separated tables. Floats are written with the shortest
//! representation that round-trips, so identical runs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::io::Read as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::hysteresis::LimitTrajectory;
use crate::initial::SampleTable;
use crate::kinetics::ScalingParams;
use crate::shs_sim::EpsTrajectory;

/// Round-tripping text form of a float.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Largest input file accepted by the readers.
pub const MAX_INPUT_BYTES: u64 = 1 << 28;

/// Read a UTF-8 file of at most [`MAX_INPUT_BYTES`].
pub fn read_text(path: &Path) -> Result<String> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut text = String::new();
    file.take(MAX_INPUT_BYTES + 1)
        .read_to_string(&mut text)
        .map_err(|e| Error::io(path, e))?;
    if text.len() as u64 > MAX_INPUT_BYTES {
        return Err(Error::Parse(format!("{} exceeds {MAX_INPUT_BYTES} bytes", path.display())));
    }
    Ok(text)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn grid_header(grid: &Grid, x_origin: f64, out: &mut String) {
    let cells: Vec<String> = grid.cells().iter().map(|c| c.to_string()).collect();
    let _ = writeln!(out, "grid.cells = {}", cells.join(" x "));
    let _ = writeln!(out, "grid.h = {}", fmt_f64(grid.h()));
    let _ = writeln!(out, "grid.boundary = {}", grid.boundary().name());
    let _ = writeln!(out, "grid.x_origin = {}", fmt_f64(x_origin));
}

fn coordinate_columns(grid: &Grid, x_origin: f64, idx: usize, t: f64, line: &mut String) {
    let (x, y) = grid.center(idx);
    line.push_str(&fmt_f64(t));
    line.push(',');
    line.push_str(&fmt_f64(x + x_origin));
    if grid.dim() == 2 {
        line.push(',');
        line.push_str(&fmt_f64(y));
    }
}

fn coordinate_header(grid: &Grid) -> &'static str {
    if grid.dim() == 2 {
        "t,x,y"
    } else {
        "t,x"
    }
}

fn snapshot_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("snapshot_{k:05}.csv"))
}

/// Header file plus one table per snapshot with columns `t, x, (y), u, v`.
pub fn write_eps_trajectory(traj: &EpsTrajectory, x_origin: f64, config_hash: &str, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut header = String::new();
    let _ = writeln!(header, "kind = simulate-eps");
    let _ = writeln!(header, "config_hash = {config_hash}");
    grid_header(&traj.grid, x_origin, &mut header);
    params_header(&traj.params, &mut header);
    let _ = writeln!(header, "steps = {}", traj.steps);
    let _ = writeln!(header, "halvings = {}", traj.halvings);
    let _ = writeln!(header, "snapshots = {}", traj.snapshots.len());
    let mut files = vec![dir.join("header.txt")];
    write_file(&files[0], &header)?;
    for (k, snap) in traj.snapshots.iter().enumerate() {
        let mut text = format!("{},u,v\n", coordinate_header(&traj.grid));
        for idx in 0..traj.grid.len() {
            coordinate_columns(&traj.grid, x_origin, idx, snap.t, &mut text);
            let _ = writeln!(text, ",{},{}", fmt_f64(snap.u[idx]), fmt_f64(snap.v[idx]));
        }
        let path = snapshot_path(dir, k);
        write_file(&path, &text)?;
        files.push(path);
    }
    Ok(files)
}

/// Header file plus one table per snapshot with columns `t, x, (y), u, m, chi`.
pub fn write_limit_trajectory(
    traj: &LimitTrajectory,
    x_origin: f64,
    config_hash: &str,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut header = String::new();
    let _ = writeln!(header, "kind = simulate-limit");
    let _ = writeln!(header, "config_hash = {config_hash}");
    grid_header(&traj.grid, x_origin, &mut header);
    let _ = writeln!(header, "steps = {}", traj.steps);
    let _ = writeln!(header, "chi_monotone = {}", traj.chi_monotone);
    let _ = writeln!(header, "consistency_violations = {}", traj.consistency_violations);
    let _ = writeln!(header, "snapshots = {}", traj.snapshots.len());
    let mut files = vec![dir.join("header.txt")];
    write_file(&files[0], &header)?;
    for (k, snap) in traj.snapshots.iter().enumerate() {
        let mut text = format!("{},u,m,chi\n", coordinate_header(&traj.grid));
        for idx in 0..traj.grid.len() {
            coordinate_columns(&traj.grid, x_origin, idx, snap.t, &mut text);
            let _ = writeln!(text, ",{},{},{}", fmt_f64(snap.u[idx]), fmt_f64(snap.m[idx]), snap.chi[idx]);
        }
        let path = snapshot_path(dir, k);
        write_file(&path, &text)?;
        files.push(path);
    }
    Ok(files)
}

fn params_header(p: &ScalingParams, out: &mut String) {
    let _ = writeln!(out, "kinetics.scaling = {}", p.kind.name());
    let _ = writeln!(out, "kinetics.epsilon = {}", fmt_f64(p.epsilon));
    let _ = writeln!(out, "kinetics.sigma = {}", fmt_f64(p.sigma));
    let _ = writeln!(out, "kinetics.kappa = {}", fmt_f64(p.kappa_eps));
    let _ = writeln!(out, "kinetics.theta_bar = {}", fmt_f64(p.theta_bar));
}

/// Generic numeric table writer.
pub fn write_table(path: &Path, columns: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut text = columns.join(",");
    text.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt_f64).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    write_file(path, &text)
}

/// A numeric table read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl NumericTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

/// Read a snapshot table: a header of distinct, non-empty column names
/// followed by rows of the same width holding only numbers.
pub fn read_snapshot_csv(text: &str) -> Result<NumericTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let columns: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse(format!("header: {e}")))?
        .iter()
        .map(|c| c.trim().to_owned())
        .collect();
    if columns.is_empty() || columns.iter().any(String::is_empty) {
        return Err(Error::Parse("header: empty column name".into()));
    }
    for (k, c) in columns.iter().enumerate() {
        if columns[..k].contains(c) {
            return Err(Error::Parse(format!("header: duplicate column `{c}`")));
        }
    }
    let mut rows = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let line = n + 2;
        let record = record.map_err(|e| Error::Parse(format!("line {line}: {e}")))?;
        if record.len() != columns.len() {
            return Err(Error::Parse(format!(
                "line {line}: expected {} fields, got {}",
                columns.len(),
                record.len()
            )));
        }
        let row = record
            .iter()
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("line {line}: `{f}` is not a number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(NumericTable { columns, rows })
}

pub fn read_snapshot_file(path: &Path) -> Result<NumericTable> {
    let text = read_text(path)?;
    read_snapshot_csv(&text)
}

/// Two-column `x, value` sample table. Lines starting with `#` are skipped
/// and a first line that does not parse as numbers is taken as a header.
pub fn parse_sample_table(text: &str) -> Result<SampleTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("record {}: {e}", n + 1)))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != 2 {
            return Err(Error::Parse(format!(
                "record {}: expected two fields, got {}",
                n + 1,
                record.len()
            )));
        }
        let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
        match parsed {
            (Ok(x), Ok(v)) => {
                xs.push(x);
                vs.push(v);
            }
            _ if n == 0 => continue,
            _ => {
                return Err(Error::Parse(format!(
                    "record {}: `{}`, `{}` are not numbers",
                    n + 1,
                    &record[0],
                    &record[1]
                )))
            }
        }
    }
    SampleTable::new(xs, vs)
}
