//! CSV and JSON readers and writers for realizations, bands and observables.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading
//! a file back gives bit-identical values and reruns give identical bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bands::BandFunction;
use crate::dynamics::ObservableSeries;
use crate::error::{Error, Result};
use crate::fiber::{EffectivePotential, EigenSolution};
use crate::field::{FieldRealization, FieldSpec};
use crate::grid::Grid1D;

/// Metadata stored next to a field CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSidecar {
    pub spec: FieldSpec,
    pub seed: Option<u64>,
    pub grid: Grid1D,
}

/// `field.csv` -> `field.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

fn parse_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| parse_error(path, e.to_string()))
}

/// Write `x,b` rows plus the JSON sidecar; returns the sidecar path.
pub fn write_field(field: &FieldRealization, csv_path: &Path) -> Result<PathBuf> {
    let mut w = csv::Writer::from_path(csv_path)?;
    w.write_record(["x", "b"])?;
    for (x, b) in field.grid.points().zip(&field.values) {
        w.write_record([x.to_string(), b.to_string()])?;
    }
    w.flush()?;
    let sidecar = sidecar_path(csv_path);
    write_json(
        &sidecar,
        &FieldSidecar {
            spec: field.spec.clone(),
            seed: field.seed,
            grid: field.grid,
        },
    )?;
    Ok(sidecar)
}

pub fn read_field(csv_path: &Path) -> Result<FieldRealization> {
    let meta: FieldSidecar = read_json(&sidecar_path(csv_path))?;
    let mut r = csv::Reader::from_path(csv_path)?;
    let mut values = Vec::with_capacity(meta.grid.len());
    for (i, row) in r.records().enumerate() {
        let row = row?;
        let b = row
            .get(1)
            .and_then(|s| s.trim().parse::<f64>().ok())
            .ok_or_else(|| parse_error(csv_path, format!("row {}: expected `x,b`", i + 2)))?;
        values.push(b);
    }
    FieldRealization::from_values(meta.grid, values, meta.spec, meta.seed)
}

/// Two numeric columns, e.g. a tabulated covariance `lag,value` or a
/// profile `offset,value`. A non-numeric first row is taken as a header.
pub fn read_two_column(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row?;
        if row.len() != 2 {
            return Err(parse_error(
                path,
                format!("line {}: expected 2 columns, found {}", i + 1, row.len()),
            ));
        }
        match (row[0].parse::<f64>(), row[1].parse::<f64>()) {
            (Ok(x), Ok(y)) => {
                xs.push(x);
                ys.push(y);
            }
            _ if i == 0 => continue,
            _ => return Err(parse_error(path, format!("line {}: not a number", i + 1))),
        }
    }
    if xs.is_empty() {
        return Err(parse_error(path, "no data rows"));
    }
    Ok((xs, ys))
}

/// `n,k,energy,velocity`, band-major.
pub fn write_bands_csv(funcs: &[BandFunction], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["n", "k", "energy", "velocity"])?;
    for f in funcs {
        for (j, (e, v)) in f.energies.iter().zip(&f.velocities).enumerate() {
            w.write_record([
                f.n.to_string(),
                f.kgrid.k(j).to_string(),
                e.to_string(),
                v.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `t,norm,q1_moment,q2_mean,ballistic_residual`.
pub fn write_dynamics_csv(series: &ObservableSeries, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "norm", "q1_moment", "q2_mean", "ballistic_residual"])?;
    for i in 0..series.times.len() {
        w.write_record([
            series.times[i].to_string(),
            series.norm[i].to_string(),
            series.q1_second_moment[i].to_string(),
            series.q2_mean[i].to_string(),
            series.ballistic_residual[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Debug dump of one fiber: `x,v,phi0..phiN`.
pub fn write_fiber_dump(
    sol: &EigenSolution,
    potential: &EffectivePotential,
    path: &Path,
) -> Result<()> {
    if !sol.grid.same_as(&potential.grid) {
        return Err(Error::GridMismatch(
            "fiber dump needs the eigenvectors and potential on one grid".into(),
        ));
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["x".to_string(), "v".to_string()];
    header.extend((0..sol.n_bands()).map(|n| format!("phi{n}")));
    w.write_record(&header)?;
    for (i, x) in sol.grid.points().enumerate() {
        let mut row = vec![x.to_string(), potential.values[i].to_string()];
        row.extend(sol.eigenvectors.iter().map(|phi| phi[i].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::{effective_potential, solve_at, SolverOptions};
    use crate::field::{sample_field, vector_potential, ProfileFunction};

    #[test]
    fn field_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid1D::new(-10.0, 10.0, 201).unwrap();
        let spec = FieldSpec::Poisson {
            rho: 1.5,
            profile: ProfileFunction::Bump {
                amplitude: 0.7,
                half_width: 0.4,
            },
        };
        let field = sample_field(&spec, &grid, Some(9)).unwrap();
        let path = dir.path().join("field.csv");
        write_field(&field, &path).unwrap();
        assert_eq!(read_field(&path).unwrap(), field);
    }

    #[test]
    fn two_column_with_and_without_header() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        std::fs::write(&a, "lag,value\n0,1\n0.5, 0.25\n").unwrap();
        assert_eq!(
            read_two_column(&a).unwrap(),
            (vec![0.0, 0.5], vec![1.0, 0.25])
        );
        let b = dir.path().join("b.csv");
        std::fs::write(&b, "0,1\n1,0\n").unwrap();
        assert_eq!(read_two_column(&b).unwrap().0, vec![0.0, 1.0]);
        let c = dir.path().join("c.csv");
        std::fs::write(&c, "0,1\nx,0\n").unwrap();
        assert!(matches!(read_two_column(&c), Err(Error::Parse { .. })));
    }

    #[test]
    fn fiber_dump_columns() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid1D::new(-8.0, 8.0, 161).unwrap();
        let field = sample_field(&FieldSpec::Constant { b0: 1.0 }, &grid, None).unwrap();
        let a = vector_potential(&field);
        let sol = solve_at(&a, 0.0, 2, &SolverOptions::default()).unwrap();
        let path = dir.path().join("fiber.csv");
        write_fiber_dump(&sol, &effective_potential(&a, 0.0), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x,v,phi0,phi1,phi2\n"));
        assert_eq!(text.lines().count(), 162);
    }
}
