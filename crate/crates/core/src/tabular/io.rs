use std::io::{Read, Write};
use std::path::Path;

use super::dataset::{Column, ColumnData, ColumnKind, Dataset, Schema};
use crate::error::{Error, Result};

/// Reads a CSV whose header must equal the schema names exactly.
/// Empty cells are missing; numeric cells use `.` as decimal point.
pub fn read_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_csv_from(file, schema)
}

pub fn read_csv_from<R: Read>(reader: R, schema: &Schema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let found: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let expected: Vec<String> = schema.iter().map(|(n, _)| n.clone()).collect();
    if found != expected {
        return Err(Error::HeaderMismatch { expected, found });
    }

    let mut cols: Vec<ColumnData> = schema
        .iter()
        .map(|(_, k)| match k {
            ColumnKind::Numeric => ColumnData::Numeric(Vec::new()),
            ColumnKind::Categorical => ColumnData::Categorical(Vec::new()),
        })
        .collect();

    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        // data rows are numbered from 1, header excluded
        let row = i + 1;
        for (j, cell) in rec.iter().enumerate() {
            match &mut cols[j] {
                ColumnData::Numeric(v) => v.push(parse_number(cell, row, &schema[j].0)?),
                ColumnData::Categorical(v) => v.push((!cell.is_empty()).then(|| cell.to_string())),
            }
        }
    }

    let columns = schema
        .iter()
        .zip(cols)
        .map(|((name, _), data)| Column { name: name.clone(), data })
        .collect();
    Dataset::new(columns)
}

fn parse_number(cell: &str, row: usize, column: &str) -> Result<Option<f64>> {
    if cell.is_empty() {
        return Ok(None);
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(Error::Parse {
            row,
            column: column.to_string(),
            value: cell.to_string(),
        }),
    }
}

pub fn write_csv<W: Write>(data: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    w.write_record(data.column_names())?;
    for i in 0..data.n_rows() {
        w.write_record(data.row_strings(i))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> Schema {
        vec![("mode".into(), ColumnKind::Categorical), ("x".into(), ColumnKind::Numeric)]
    }

    #[test]
    fn reads_rows_in_order() {
        let d = read_csv_from("mode,x\nair,1.5\nship,2\nrail,3\n".as_bytes(), &schema()).unwrap();
        assert_eq!(d.n_rows(), 3);
        assert!(d.transform_log().is_empty());
        assert_eq!(d.numeric_column("x").unwrap(), vec![1.5, 2.0, 3.0]);
    }

    #[test]
    fn empty_numeric_cell_is_missing() {
        let d = read_csv_from("mode,x\nair,\n".as_bytes(), &schema()).unwrap();
        assert_eq!(d.numeric_cells("x").unwrap(), &[None]);
    }

    #[test]
    fn comma_decimal_names_row_and_column() {
        let err = read_csv_from("mode,x\nair,1\nship,\"12,5\"\n".as_bytes(), &schema()).unwrap_err();
        match err {
            Error::Parse { row, column, value } => {
                assert_eq!((row, column.as_str(), value.as_str()), (2, "x", "12,5"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn header_must_match_exactly() {
        let err = read_csv_from("x,mode\n1,air\n".as_bytes(), &schema()).unwrap_err();
        assert!(matches!(err, Error::HeaderMismatch { .. }));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(read_csv("/nonexistent/file.csv", &schema()), Err(Error::Io(_))));
    }

    #[test]
    fn round_trip() {
        let text = "mode,x\nair,1.5\n,\n";
        let d = read_csv_from(text.as_bytes(), &schema()).unwrap();
        let mut out = Vec::new();
        write_csv(&d, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }
}
