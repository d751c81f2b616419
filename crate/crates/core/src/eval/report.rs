use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Reports that flatten to a table, one row per draw or logging step.
pub trait CsvTable {
    fn header(&self) -> Vec<String>;
    fn rows(&self) -> Vec<Vec<String>>;
}

/// Hex SHA-256 of the JSON encoding of `value`.
pub fn fingerprint<T: Serialize>(value: &T) -> Result<String> {
    let bytes = serde_json::to_vec(value)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

/// Pretty-printed JSON followed by a newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_csv(path: &Path, table: &impl CsvTable) -> Result<()> {
    let to_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::InvalidArgument(format!("{}: {other:?}", path.display())),
    };
    let mut w = csv::Writer::from_path(path).map_err(to_err)?;
    w.write_record(table.header()).map_err(to_err)?;
    for row in table.rows() {
        w.write_record(row).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Two;

    impl CsvTable for Two {
        fn header(&self) -> Vec<String> {
            vec!["draw".into(), "value".into()]
        }
        fn rows(&self) -> Vec<Vec<String>> {
            vec![vec!["0".into(), "0.5".into()], vec!["1".into(), "1".into()]]
        }
    }

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_csv(&p, &Two).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "draw,value\n0,0.5\n1,1\n");
    }

    #[test]
    fn fingerprint_is_stable_hex() {
        let a = fingerprint(&(1, "x")).unwrap();
        assert_eq!(a.len(), 64);
        assert_eq!(a, fingerprint(&(1, "x")).unwrap());
        assert_ne!(a, fingerprint(&(2, "x")).unwrap());
    }
}
