//! Reading and writing the plain-text formats used by the command line.

use std::io::{Read, Write};

use nalgebra::Point3;

use crate::curve::{BSplineCurve, ControlPoint, CurveSpec};
use crate::error::{Error, Result};

/// Points from CSV with two (`x,y`, z = 0) or three (`x,y,z`) columns.
///
/// A first row that does not parse as numbers is a header. When it names
/// `x` and `y` (and optionally `z`) columns, only those are read, so sampled
/// curve files with a leading `ts` column are accepted too.
pub fn read_points_csv<R: Read>(reader: R) -> Result<Vec<ControlPoint>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut columns: Option<Vec<usize>> = None;
    let mut points = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let values: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let values = match values {
            Ok(v) => v,
            Err(_) if line == 0 => {
                let find = |name: &str| record.iter().position(|h| h.eq_ignore_ascii_case(name));
                columns = match (find("x"), find("y"), find("z")) {
                    (Some(x), Some(y), Some(z)) => Some(vec![x, y, z]),
                    (Some(x), Some(y), None) => Some(vec![x, y]),
                    _ => None,
                };
                continue;
            }
            Err(e) => return Err(Error::Parse(format!("row {}: {e}", line + 1))),
        };
        let picked: Vec<f64> = match &columns {
            Some(cols) => cols
                .iter()
                .map(|&c| {
                    values
                        .get(c)
                        .copied()
                        .ok_or_else(|| Error::Parse(format!("row {}: missing column {}", line + 1, c + 1)))
                })
                .collect::<Result<_>>()?,
            None => values,
        };
        let p = match picked.as_slice() {
            [x, y] => Point3::new(*x, *y, 0.0),
            [x, y, z] => Point3::new(*x, *y, *z),
            _ => {
                return Err(Error::Parse(format!(
                    "row {}: expected 2 or 3 columns, got {}",
                    line + 1,
                    picked.len()
                )))
            }
        };
        if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
            return Err(Error::Parse(format!("row {}: non-finite coordinate", line + 1)));
        }
        points.push(p);
    }
    Ok(points)
}

pub fn read_curve_spec<R: Read>(reader: R) -> Result<BSplineCurve> {
    let spec: CurveSpec = serde_json::from_reader(reader)?;
    spec.try_into()
}

pub fn write_curve_spec<W: Write>(curve: &BSplineCurve, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, &CurveSpec::from(curve))?;
    writeln!(out)?;
    Ok(())
}
