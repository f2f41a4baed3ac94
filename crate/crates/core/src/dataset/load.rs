use std::collections::BTreeSet;
use std::path::Path;

use crate::dataset::Dataset;
use crate::error::{CalibError, Result};

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "NA" | "na" | "N/A" | "?" | "NaN" | "nan")
}

/// Read a comma-separated file with a header row. Every column other than
/// `label_column` is a numeric feature; `positive_label` maps to class 1 and
/// the other label value to class 0. Rows containing a missing cell are
/// skipped.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: &str,
    positive_label: &str,
) -> Result<Dataset> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(CalibError::MissingFile(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(CalibError::EmptyFile);
    }
    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| CalibError::MissingColumn(label_column.to_owned()))?;
    let feature_cols: Vec<usize> = (0..header.len()).filter(|&j| j != label_idx).collect();
    if feature_cols.is_empty() {
        return Err(CalibError::NoFeatureColumns);
    }

    let mut features = Vec::new();
    let mut raw_labels = Vec::new();
    let mut n_rows = 0usize;
    for (row_no, record) in reader.records().enumerate() {
        let record = record?;
        n_rows += 1;
        if record.iter().any(is_missing) {
            continue;
        }
        for &j in &feature_cols {
            let cell = &record[j];
            let v: f64 = cell.parse().map_err(|_| CalibError::NonNumeric {
                row: row_no + 1,
                column: header[j].clone(),
                value: cell.to_owned(),
            })?;
            features.push(v);
        }
        raw_labels.push(record[label_idx].to_owned());
    }
    if n_rows == 0 || raw_labels.is_empty() {
        return Err(CalibError::EmptyFile);
    }

    let distinct: BTreeSet<&str> = raw_labels.iter().map(String::as_str).collect();
    if distinct.len() != 2 {
        return Err(CalibError::NotBinary {
            found: distinct.into_iter().map(str::to_owned).collect(),
        });
    }
    if !distinct.contains(positive_label) {
        return Err(CalibError::PositiveLabelAbsent(positive_label.to_owned()));
    }
    let labels = raw_labels.iter().map(|l| u8::from(l == positive_label)).collect();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let names = feature_cols.iter().map(|&j| header[j].clone()).collect();
    Dataset::new(name, features, labels, names)
}

/// Write `ds` with a trailing `label` column holding 1 for positives and 0
/// otherwise; readable again with `load_csv(path, "label", "1")`.
pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = ds.feature_names().iter().map(String::as_str).collect();
    header.push("label");
    w.write_record(&header)?;
    for (row, y) in ds.rows().zip(ds.labels()) {
        let mut rec: Vec<String> = row.iter().map(f64::to_string).collect();
        rec.push(y.to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| CalibError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_and_maps_positive_label() {
        let f = write("a,b,y\n1,2,yes\n3,4,no\n5.5,-1e3,yes\n");
        let ds = load_csv(f.path(), "y", "yes").unwrap();
        assert_eq!(ds.n_samples(), 3);
        assert_eq!(ds.n_features(), 2);
        assert_eq!(ds.labels(), &[1, 0, 1]);
        assert_eq!(ds.row(2), &[5.5, -1000.0]);
        assert_eq!(ds.feature_names(), &["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn label_column_can_be_anywhere() {
        let f = write("y,a\n1,0.5\n0,0.25\n");
        let ds = load_csv(f.path(), "y", "1").unwrap();
        assert_eq!(ds.labels(), &[1, 0]);
        assert_eq!(ds.row(1), &[0.25]);
    }

    #[test]
    fn rows_with_missing_cells_are_skipped() {
        let f = write("a,y\n1,p\n,n\nNA,p\n2,n\n");
        let ds = load_csv(f.path(), "y", "p").unwrap();
        assert_eq!(ds.n_samples(), 2);
    }

    #[test]
    fn distinct_errors() {
        assert!(matches!(
            load_csv("/nonexistent/file.csv", "y", "1"),
            Err(CalibError::MissingFile(_))
        ));
        let f = write("y\n1\n");
        assert!(matches!(load_csv(f.path(), "y", "1"), Err(CalibError::NoFeatureColumns)));
        let f = write("a,y\n1,a\n2,b\n3,c\n");
        match load_csv(f.path(), "y", "a") {
            Err(CalibError::NotBinary { found }) => assert_eq!(found.len(), 3),
            other => panic!("unexpected {other:?}"),
        }
        let f = write("a,y\n1,a\n2,b\n");
        assert!(matches!(load_csv(f.path(), "label", "a"), Err(CalibError::MissingColumn(_))));
        let f = write("a,y\nx,a\n2,b\n");
        assert!(matches!(load_csv(f.path(), "y", "a"), Err(CalibError::NonNumeric { .. })));
        let f = write("a,y\n");
        assert!(matches!(load_csv(f.path(), "y", "a"), Err(CalibError::EmptyFile)));
        let f = write("");
        assert!(load_csv(f.path(), "y", "a").is_err());
        let f = write("a,y\n1,a\n2,b\n");
        assert!(matches!(load_csv(f.path(), "y", "c"), Err(CalibError::PositiveLabelAbsent(_))));
    }
}
