//! CSV reading and writing.
//!
//! Two file shapes: unit datasets (header `id,x,y,<covariate names...>`) and
//! 2x2 tables (header `cell,count` with rows `xy`, `xy_not`, `x_not_y`,
//! `x_not_y_not` and a `regime` metadata row). Loaders report malformed
//! content with the source name and line number. Writers emit floats in
//! shortest round-trip form, so identical data always serializes to
//! identical bytes.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use crate::distribution::PCDistribution;
use crate::error::{Error, Result};
use crate::model::{ContingencyTable, Regime, Unit};
use crate::pn::SweepCurve;

/// A loaded unit dataset together with its covariate schema.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitsData {
    pub units: Vec<Unit>,
    /// Covariate column names, in header order.
    pub covariate_names: Vec<String>,
}

fn parse_err(source: &str, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: source.to_string(),
        line,
        message: message.into(),
    }
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

/// Parses a unit dataset from any reader. `source` names the stream in
/// error messages.
pub fn read_units_csv<R: Read>(reader: R, source: &str) -> Result<UnitsData> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() < 3
        || headers.get(0) != Some("id")
        || headers.get(1) != Some("x")
        || headers.get(2) != Some("y")
    {
        return Err(parse_err(
            source,
            1,
            "header must begin with id,x,y followed by covariate names",
        ));
    }
    let covariate_names: Vec<String> = headers.iter().skip(3).map(str::to_string).collect();
    let mut seen_names = HashSet::new();
    for name in &covariate_names {
        if name.is_empty() {
            return Err(parse_err(source, 1, "empty covariate name in header"));
        }
        if !seen_names.insert(name.as_str()) {
            return Err(parse_err(
                source,
                1,
                format!("duplicate covariate name {name:?} in header"),
            ));
        }
    }

    let mut units = Vec::new();
    let mut seen_ids: HashSet<String> = HashSet::new();
    for record in rdr.records() {
        let record = record?;
        let line = record_line(&record);
        if record.len() != headers.len() {
            return Err(parse_err(
                source,
                line,
                format!("expected {} fields, got {}", headers.len(), record.len()),
            ));
        }
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(parse_err(source, line, "empty id"));
        }
        if !seen_ids.insert(id.clone()) {
            return Err(parse_err(source, line, format!("duplicate id {id:?}")));
        }
        let binary = |field: &'static str, raw: &str| -> Result<u8> {
            let v: u8 = raw.parse().map_err(|_| {
                parse_err(source, line, format!("cannot parse {field} value {raw:?}"))
            })?;
            if v > 1 {
                return Err(parse_err(source, line, format!("{field} must be 0 or 1, got {v}")));
            }
            Ok(v)
        };
        let x = binary("x", &record[1])?;
        let y = binary("y", &record[2])?;
        let mut covariates = Vec::with_capacity(covariate_names.len());
        for (name, raw) in covariate_names.iter().zip(record.iter().skip(3)) {
            let v: f64 = raw.parse().map_err(|_| {
                parse_err(source, line, format!("cannot parse {name} value {raw:?}"))
            })?;
            if !v.is_finite() {
                return Err(parse_err(source, line, format!("{name} must be finite, got {raw}")));
            }
            covariates.push(v);
        }
        units.push(Unit { id, x, y, covariates });
    }
    Ok(UnitsData { units, covariate_names })
}

/// Loads a unit dataset from a file.
pub fn load_units_csv<P: AsRef<Path>>(path: P) -> Result<UnitsData> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    read_units_csv(file, &path.display().to_string())
}

/// Serializes units under the given covariate names. Fails if any unit's
/// covariate vector does not match the schema length.
pub fn units_to_csv<S: AsRef<str>>(units: &[Unit], covariate_names: &[S]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["id", "x", "y"];
    header.extend(covariate_names.iter().map(AsRef::as_ref));
    w.write_record(&header)?;
    for u in units {
        if u.covariates.len() != covariate_names.len() {
            return Err(Error::CovariateArity {
                id: u.id.clone(),
                expected: covariate_names.len(),
                got: u.covariates.len(),
            });
        }
        let mut row = vec![u.id.clone(), u.x.to_string(), u.y.to_string()];
        row.extend(u.covariates.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    Ok(String::from_utf8(w.into_inner().expect("vec writer")).expect("csv is utf-8"))
}

/// Parses the one-row target file for an individual query.
///
/// Two accepted shapes: a bare covariate table whose header is exactly the
/// dataset's covariate names, or a full unit row (`id,x,y,<names...>`). The
/// target's own x and y are irrelevant to the similarity filter, so the bare
/// shape fills them with 1 (an observed case).
pub fn read_target_csv<R: Read>(
    reader: R,
    source: &str,
    covariate_names: &[String],
) -> Result<Unit> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let header_fields: Vec<&str> = headers.iter().collect();
    let expected: Vec<&str> = covariate_names.iter().map(String::as_str).collect();
    let full_schema: Vec<&str> = ["id", "x", "y"].into_iter().chain(expected.iter().copied()).collect();

    let mut records = Vec::new();
    for record in rdr.records() {
        records.push(record?);
    }
    if records.len() != 1 {
        return Err(parse_err(
            source,
            1,
            format!("target file must contain exactly one row, got {}", records.len()),
        ));
    }
    let record = &records[0];
    let line = record_line(record);

    if header_fields == full_schema {
        if record.len() != full_schema.len() {
            return Err(parse_err(
                source,
                line,
                format!("expected {} fields, got {}", full_schema.len(), record.len()),
            ));
        }
        let parse_bit = |field: &'static str, raw: &str| -> Result<u8> {
            match raw {
                "0" => Ok(0),
                "1" => Ok(1),
                _ => Err(parse_err(source, line, format!("{field} must be 0 or 1, got {raw:?}"))),
            }
        };
        let x = parse_bit("x", &record[1])?;
        let y = parse_bit("y", &record[2])?;
        let covariates = parse_target_covariates(record.iter().skip(3), &expected, source, line)?;
        return Ok(Unit {
            id: record[0].to_string(),
            x,
            y,
            covariates,
        });
    }
    if header_fields == expected {
        if record.len() != expected.len() {
            return Err(parse_err(
                source,
                line,
                format!("expected {} fields, got {}", expected.len(), record.len()),
            ));
        }
        let covariates = parse_target_covariates(record.iter(), &expected, source, line)?;
        return Ok(Unit {
            id: "target".to_string(),
            x: 1,
            y: 1,
            covariates,
        });
    }
    Err(parse_err(
        source,
        1,
        format!(
            "target header must be the dataset covariate names {expected:?}, optionally preceded by id,x,y"
        ),
    ))
}

fn parse_target_covariates<'a>(
    raw: impl Iterator<Item = &'a str>,
    names: &[&str],
    source: &str,
    line: u64,
) -> Result<Vec<f64>> {
    let mut covariates = Vec::with_capacity(names.len());
    for (name, field) in names.iter().zip(raw) {
        let v: f64 = field.parse().map_err(|_| {
            parse_err(source, line, format!("cannot parse {name} value {field:?}"))
        })?;
        if !v.is_finite() {
            return Err(parse_err(source, line, format!("{name} must be finite, got {field}")));
        }
        covariates.push(v);
    }
    Ok(covariates)
}

const CELL_ROWS: [&str; 4] = ["xy", "xy_not", "x_not_y", "x_not_y_not"];

/// Parses a 2x2 table file. All four cells and the regime row are required,
/// each exactly once, in any order.
pub fn read_table_csv<R: Read>(reader: R, source: &str) -> Result<ContingencyTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || headers.get(0) != Some("cell") || headers.get(1) != Some("count") {
        return Err(parse_err(source, 1, "header must be cell,count"));
    }
    let mut counts: [Option<u64>; 4] = [None; 4];
    let mut regime: Option<Regime> = None;
    for record in rdr.records() {
        let record = record?;
        let line = record_line(&record);
        if record.len() != 2 {
            return Err(parse_err(
                source,
                line,
                format!("expected 2 fields, got {}", record.len()),
            ));
        }
        let key = &record[0];
        let value = &record[1];
        if key == "regime" {
            if regime.is_some() {
                return Err(parse_err(source, line, "duplicate regime row"));
            }
            regime = Some(value.parse().map_err(|e| parse_err(source, line, e))?);
            continue;
        }
        let Some(slot) = CELL_ROWS.iter().position(|&c| c == key) else {
            return Err(parse_err(
                source,
                line,
                format!("unknown cell {key:?} (expected xy, xy_not, x_not_y, x_not_y_not, or regime)"),
            ));
        };
        if counts[slot].is_some() {
            return Err(parse_err(source, line, format!("duplicate cell {key:?}")));
        }
        let n: i64 = value.parse().map_err(|_| {
            parse_err(source, line, format!("cannot parse count {value:?} for cell {key:?}"))
        })?;
        if n < 0 {
            return Err(parse_err(
                source,
                line,
                format!("count for cell {key:?} must be nonnegative, got {n}"),
            ));
        }
        counts[slot] = Some(n as u64);
    }
    for (slot, name) in CELL_ROWS.iter().enumerate() {
        if counts[slot].is_none() {
            return Err(parse_err(source, 1, format!("missing row for cell {name:?}")));
        }
    }
    let Some(regime) = regime else {
        return Err(parse_err(source, 1, "missing regime row"));
    };
    ContingencyTable::new(
        counts[0].unwrap(),
        counts[1].unwrap(),
        counts[2].unwrap(),
        counts[3].unwrap(),
        regime,
    )
}

/// Loads a 2x2 table from a file.
pub fn load_table_csv<P: AsRef<Path>>(path: P) -> Result<ContingencyTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    read_table_csv(file, &path.display().to_string())
}

/// Serializes a table in canonical row order.
pub fn table_to_csv(t: &ContingencyTable) -> String {
    format!(
        "cell,count\nxy,{}\nxy_not,{}\nx_not_y,{}\nx_not_y_not,{}\nregime,{}\n",
        t.n_xy, t.n_xy_not, t.n_x_not_y, t.n_x_not_y_not, t.regime
    )
}

/// The plot-ready CSV for a sensitivity curve: one row per perturbation step.
pub fn sweep_to_csv(curve: &SweepCurve) -> String {
    let mut out = String::from("k,value\n");
    for p in &curve.points {
        out.push_str(&format!("{},{}\n", p.k, p.value));
    }
    out
}

/// The plot-ready CSV for a PC distribution: one row per successful
/// iteration. Skipped iterations appear only in the JSON report.
pub fn distribution_to_csv(d: &PCDistribution) -> String {
    let mut out = String::from("iteration,pc_raw,pc_clamped,bound_lower,bound_upper\n");
    for s in &d.samples {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            s.iteration, s.pc_raw, s.pc_clamped, s.bound_lower, s.bound_upper
        ));
    }
    out
}
