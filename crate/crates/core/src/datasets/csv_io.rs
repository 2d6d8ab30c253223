//! CSV reading and writing.
//!
//! Comma separated, '.' decimal point, LF or CRLF. The first row is a header
//! iff one of its fields does not parse as a number. Rows in error messages are
//! 1-based file lines; columns are 0-based.

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;

use super::{Dataset, Normalization};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Selects the label column by header name or zero-based index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSelector {
    Index(usize),
    Name(String),
}

impl FromStr for ColumnSelector {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => Self::Index(i),
            Err(_) => Self::Name(s.to_string()),
        })
    }
}

impl fmt::Display for ColumnSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Index(i) => write!(f, "{i}"),
            Self::Name(name) => f.write_str(name),
        }
    }
}

pub fn load_csv<T: Scalar>(
    path: impl AsRef<Path>,
    label_column: Option<&ColumnSelector>,
    normalize: Normalization,
) -> Result<Dataset<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    let name = path.file_stem().map_or_else(|| "dataset".to_string(), |s| s.to_string_lossy().into_owned());
    read_csv(file, label_column, normalize, name)
}

pub fn read_csv<T: Scalar, R: Read>(
    reader: R,
    label_column: Option<&ColumnSelector>,
    normalize: Normalization,
    name: impl Into<String>,
) -> Result<Dataset<T>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(reader);

    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(records.len() + 1, |p| p.line() as usize);
        records.push((line, rec));
    }
    if records.is_empty() {
        return Err(Error::Empty);
    }

    let header_present = records[0].1.iter().any(|f| f.parse::<f64>().is_err());
    let header: Option<Vec<String>> = header_present.then(|| records[0].1.iter().map(str::to_string).collect());
    let body = &records[usize::from(header_present)..];
    if body.is_empty() {
        return Err(Error::Empty);
    }

    let arity = header.as_ref().map_or(body[0].1.len(), Vec::len);
    let label_idx = match label_column {
        None => None,
        Some(ColumnSelector::Index(i)) if *i < arity => Some(*i),
        Some(ColumnSelector::Index(i)) => {
            return Err(Error::InvalidArgument(format!("label column {i} out of range for {arity} columns")))
        }
        Some(ColumnSelector::Name(want)) => {
            let header = header.as_ref().ok_or_else(|| {
                Error::InvalidArgument(format!("label column '{want}' given by name but the file has no header"))
            })?;
            Some(
                header
                    .iter()
                    .position(|h| h == want)
                    .ok_or_else(|| Error::InvalidArgument(format!("no column named '{want}'")))?,
            )
        }
    };
    let d = arity - usize::from(label_idx.is_some());
    if d == 0 {
        return Err(Error::InvalidArgument("no feature columns".into()));
    }

    let mut flat = Vec::with_capacity(body.len() * d);
    let mut labels = label_idx.map(|_| Vec::with_capacity(body.len()));
    for (line, rec) in body {
        if rec.len() != arity {
            return Err(Error::MixedArity { row: *line, expected: arity, found: rec.len() });
        }
        for (col, field) in rec.iter().enumerate() {
            if Some(col) == label_idx {
                let label = parse_label(field).ok_or_else(|| Error::Parse {
                    row: *line,
                    column: col,
                    message: format!("label '{field}' is not an integer"),
                })?;
                labels.as_mut().expect("label vector").push(label);
                continue;
            }
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                row: *line,
                column: col,
                message: format!("'{field}' is not a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse { row: *line, column: col, message: format!("'{field}' is not finite") });
            }
            flat.push(T::of(value));
        }
    }

    let points = Array2::from_shape_vec((body.len(), d), flat).map_err(|e| Error::InvalidDataset(e.to_string()))?;
    Dataset::new(points, labels, name)?.normalized(normalize)
}

fn parse_label(field: &str) -> Option<i64> {
    field.parse::<i64>().ok().or_else(|| {
        let v: f64 = field.parse().ok()?;
        (v.fract() == 0.0 && v.abs() < 9.0e15).then_some(v as i64)
    })
}

/// Writes `x0..x{d-1}` columns plus a trailing `label` column when labels exist.
/// Values use the shortest decimal form that round-trips.
pub fn write_csv<T: Scalar, W: Write>(data: &Dataset<T>, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..data.dim()).map(|j| format!("x{j}")).collect();
    if data.labels().is_some() {
        header.push("label".into());
    }
    w.write_record(&header)?;
    for (i, row) in data.rows().enumerate() {
        let mut fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        if let Some(labels) = data.labels() {
            fields.push(labels[i].to_string());
        }
        w.write_record(&fields)?;
    }
    w.flush().map_err(|source| Error::Io { path: "<csv writer>".into(), source })
}

pub fn save_csv<T: Scalar>(data: &Dataset<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    write_csv(data, file)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str, label: Option<&str>, norm: Normalization) -> Result<Dataset<f64>> {
        let sel = label.map(|s| s.parse().unwrap());
        read_csv(text.as_bytes(), sel.as_ref(), norm, "t")
    }

    #[test]
    fn identity_load() {
        let d = read("0,0\n1,0\n0,1", None, Normalization::None).unwrap();
        assert_eq!(d.n(), 3);
        assert_eq!(d.row(1), &[1.0, 0.0]);
        assert_eq!(d.row(2), &[0.0, 1.0]);
        assert!(d.labels().is_none());
    }

    #[test]
    fn minmax_endpoints() {
        let d = read("0\n10", None, Normalization::MinMax).unwrap();
        assert_eq!(d.column(0).to_vec(), vec![0.0, 1.0]);
    }

    #[test]
    fn header_and_crlf_and_named_label() {
        let d = read("a,b,cls\r\n1.5,2,0\r\n3,4,1\r\n", Some("cls"), Normalization::None).unwrap();
        assert_eq!(d.dim(), 2);
        assert_eq!(d.row(0), &[1.5, 2.0]);
        assert_eq!(d.labels(), Some(&[0, 1][..]));
        assert_eq!(d.true_k(), Some(2));
    }

    #[test]
    fn label_by_index_without_header() {
        let d = read("-1,1,2\n0,3,4", Some("0"), Normalization::None).unwrap();
        assert_eq!(d.labels(), Some(&[-1, 0][..]));
        assert_eq!(d.row(1), &[3.0, 4.0]);
    }

    #[test]
    fn errors_carry_location() {
        match read("1,2\n3,x\n", None, Normalization::None) {
            Err(Error::Parse { row: 2, column: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match read("1,2\n3\n", None, Normalization::None) {
            Err(Error::MixedArity { row: 2, expected: 2, found: 1 }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(read("", None, Normalization::None), Err(Error::Empty)));
        assert!(matches!(read("a,b\n", None, Normalization::None), Err(Error::Empty)));
        assert!(read("1,2\n3,4\n", Some("name"), Normalization::None).is_err());
    }

    #[test]
    fn write_then_read_is_exact() {
        let d = read("0.1,-2.5e-7,3\n1e300,4,0\n", Some("2"), Normalization::None).unwrap();
        let mut buf = Vec::new();
        write_csv(&d, &mut buf).unwrap();
        let back = read(std::str::from_utf8(&buf).unwrap(), Some("label"), Normalization::None).unwrap();
        assert_eq!(back.points(), d.points());
        assert_eq!(back.labels(), d.labels());
    }
}
