//! SMILES file reading: UTF-8 text, one record per line, optional
//! tab-separated trailing id, `#` comment lines and blank lines ignored.

use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

/// One line of a SMILES file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmilesRecord {
    pub smiles: String,
    pub id: Option<String>,
}

pub fn read_smiles_lines<R: BufRead>(reader: R) -> io::Result<Vec<SmilesRecord>> {
    let mut records = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split_once('\t') {
            Some((smiles, id)) => records.push(SmilesRecord {
                smiles: smiles.to_string(),
                id: Some(id.trim().to_string()),
            }),
            None => records.push(SmilesRecord {
                smiles: line.to_string(),
                id: None,
            }),
        }
    }
    Ok(records)
}

pub fn read_smiles_file<P: AsRef<Path>>(path: P) -> io::Result<Vec<SmilesRecord>> {
    read_smiles_lines(BufReader::new(File::open(path)?))
}
