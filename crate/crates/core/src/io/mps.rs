//! Free-format MPS export.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::milp::{MilpModel, Sense};

/// Name of the constraint row at position `i` in [`MilpModel::constraints`].
pub fn row_name(i: usize) -> String {
    format!("C{i}")
}

/// Renders `model` as free-format MPS. The objective constant is written as
/// the negated right-hand side of `OBJ`.
pub fn mps_string(model: &MilpModel) -> String {
    let vars = model.variables();
    let rows = model.constraints();
    let mut out = String::new();
    let name = if model.name.is_empty() { "emdarp" } else { &model.name };
    writeln!(out, "NAME {name}").unwrap();
    out.push_str("ROWS\n N OBJ\n");
    for (i, c) in rows.iter().enumerate() {
        let s = match c.sense {
            Sense::Le => 'L',
            Sense::Ge => 'G',
            Sense::Eq => 'E',
        };
        writeln!(out, " {s} {}", row_name(i)).unwrap();
    }

    let mut columns: Vec<Vec<(String, f64)>> = vec![Vec::new(); vars.len()];
    for &(v, a) in model.objective() {
        columns[v.0].push(("OBJ".to_string(), a));
    }
    for (i, c) in rows.iter().enumerate() {
        for &(v, a) in &c.terms {
            columns[v.0].push((row_name(i), a));
        }
    }

    out.push_str("COLUMNS\n");
    let mut marker = 0;
    let mut in_int = false;
    for (v, entries) in vars.iter().zip(&columns) {
        let integral = v.domain.is_integral();
        if integral != in_int {
            let kind = if integral { "INTORG" } else { "INTEND" };
            writeln!(out, "    M{marker} 'MARKER' '{kind}'").unwrap();
            if !integral {
                marker += 1;
            }
            in_int = integral;
        }
        if entries.is_empty() {
            writeln!(out, "    {} OBJ 0", v.name).unwrap();
        }
        for (row, a) in entries {
            writeln!(out, "    {} {row} {a}", v.name).unwrap();
        }
    }
    if in_int {
        writeln!(out, "    M{marker} 'MARKER' 'INTEND'").unwrap();
    }

    out.push_str("RHS\n");
    if model.objective_constant() != 0.0 {
        writeln!(out, "    RHS OBJ {}", -model.objective_constant()).unwrap();
    }
    for (i, c) in rows.iter().enumerate() {
        if c.rhs != 0.0 {
            writeln!(out, "    RHS {} {}", row_name(i), c.rhs).unwrap();
        }
    }

    out.push_str("BOUNDS\n");
    for v in vars {
        let (lo, up) = (v.lower, v.upper);
        if lo == up {
            writeln!(out, " FX BND {} {lo}", v.name).unwrap();
            continue;
        }
        if lo == f64::NEG_INFINITY {
            writeln!(out, " MI BND {}", v.name).unwrap();
        } else if lo != 0.0 || v.domain.is_integral() {
            writeln!(out, " LO BND {} {lo}", v.name).unwrap();
        }
        if up.is_finite() {
            writeln!(out, " UP BND {} {up}", v.name).unwrap();
        } else if v.domain.is_integral() {
            writeln!(out, " PL BND {}", v.name).unwrap();
        }
    }
    out.push_str("ENDATA\n");
    out
}

pub fn write_mps(model: &MilpModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, mps_string(model)).map_err(|e| Error::io(path, e))
}
