//! Curated `(domain, option)` → per-boundary pressure weight tables.
//!
//! One CSV per domain, named `factors_<domain>.csv`, with the header
//! `domain,option_key,` followed by the nine boundary codes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::boundary::{Boundary, BOUNDARY_COUNT};
use crate::item::is_token;

pub type Weights = [f64; BOUNDARY_COUNT];

#[derive(Debug, Error)]
pub enum FactorError {
    #[error("{file}: missing column `{column}`")]
    MissingColumn { file: String, column: String },
    #[error("{file}: unexpected column `{column}`")]
    UnexpectedColumn { file: String, column: String },
    #[error("{file}:{line}: weight {value} for `{boundary}` is negative")]
    NegativeWeight {
        file: String,
        line: u64,
        boundary: Boundary,
        value: f64,
    },
    #[error("{file}:{line}: `{field}` is not a finite number: `{raw}`")]
    BadNumber {
        file: String,
        line: u64,
        field: String,
        raw: String,
    },
    #[error("{file}:{line}: duplicate row ({domain}, {option_key})")]
    DuplicateRow {
        file: String,
        line: u64,
        domain: String,
        option_key: String,
    },
    #[error("{file}:{line}: `{value}` is not a lower-snake token")]
    BadToken { file: String, line: u64, value: String },
    #[error("{file}:{line}: row domain `{found}` does not match file domain `{expected}`")]
    DomainMismatch {
        file: String,
        line: u64,
        expected: String,
        found: String,
    },
    #[error("{file}: domain `{domain}` has no options")]
    EmptyDomain { file: String, domain: String },
    #[error("no factors_<domain>.csv files in {0}")]
    NoTables(PathBuf),
    #[error("{file}: {source}")]
    Csv {
        file: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// One row of a factor CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorRow {
    pub domain: String,
    pub option_key: String,
    pub weights: Weights,
}

#[derive(Clone, Debug)]
struct DomainEntry {
    options: Vec<String>,
    max_weights: Weights,
}

/// Validated, immutable factor table with a per-domain max-weight cache.
#[derive(Clone, Debug)]
pub struct FactorTable {
    rows: BTreeMap<(String, String), Weights>,
    domains: BTreeMap<String, DomainEntry>,
    version: String,
}

impl FactorTable {
    /// Builds a table from in-memory rows. `source` labels errors.
    pub fn from_rows<I>(rows: I, source: &str) -> Result<Self, FactorError>
    where
        I: IntoIterator<Item = FactorRow>,
    {
        let mut table = BTreeMap::new();
        let mut domains: BTreeMap<String, DomainEntry> = BTreeMap::new();
        for (idx, row) in rows.into_iter().enumerate() {
            let line = idx as u64 + 1;
            validate_row(&row, source, line)?;
            let key = (row.domain.clone(), row.option_key.clone());
            if table.contains_key(&key) {
                return Err(FactorError::DuplicateRow {
                    file: source.to_string(),
                    line,
                    domain: row.domain,
                    option_key: row.option_key,
                });
            }
            let entry = domains.entry(row.domain.clone()).or_insert_with(|| DomainEntry {
                options: Vec::new(),
                max_weights: [0.0; BOUNDARY_COUNT],
            });
            entry.options.push(row.option_key.clone());
            for (max, w) in entry.max_weights.iter_mut().zip(row.weights) {
                *max = max.max(w);
            }
            table.insert(key, row.weights);
        }
        let version = content_digest(&table);
        Ok(Self {
            rows: table,
            domains,
            version,
        })
    }

    pub fn weights(&self, domain: &str, option_key: &str) -> Option<&Weights> {
        self.rows.get(&(domain.to_string(), option_key.to_string()))
    }

    /// Max weight per boundary over all of `domain`'s options.
    pub fn domain_max(&self, domain: &str) -> Option<&Weights> {
        self.domains.get(domain).map(|d| &d.max_weights)
    }

    pub fn has_domain(&self, domain: &str) -> bool {
        self.domains.contains_key(domain)
    }

    pub fn domains(&self) -> impl Iterator<Item = &str> {
        self.domains.keys().map(String::as_str)
    }

    /// Options of `domain` in file order.
    pub fn options(&self, domain: &str) -> &[String] {
        self.domains
            .get(domain)
            .map(|d| d.options.as_slice())
            .unwrap_or(&[])
    }

    pub fn rows(&self) -> impl Iterator<Item = FactorRow> + '_ {
        self.rows.iter().map(|((d, o), w)| FactorRow {
            domain: d.clone(),
            option_key: o.clone(),
            weights: *w,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Short content hash, stable across load order.
    pub fn version(&self) -> &str {
        &self.version
    }
}

fn validate_row(row: &FactorRow, file: &str, line: u64) -> Result<(), FactorError> {
    for value in [&row.domain, &row.option_key] {
        if !is_token(value) {
            return Err(FactorError::BadToken {
                file: file.to_string(),
                line,
                value: value.clone(),
            });
        }
    }
    for b in Boundary::ALL {
        let value = row.weights[b.index()];
        if !value.is_finite() {
            return Err(FactorError::BadNumber {
                file: file.to_string(),
                line,
                field: b.code().to_string(),
                raw: value.to_string(),
            });
        }
        if value < 0.0 {
            return Err(FactorError::NegativeWeight {
                file: file.to_string(),
                line,
                boundary: b,
                value,
            });
        }
    }
    Ok(())
}

fn content_digest(rows: &BTreeMap<(String, String), Weights>) -> String {
    let mut hasher = Sha256::new();
    for ((domain, option), weights) in rows {
        hasher.update(domain.as_bytes());
        hasher.update([0]);
        hasher.update(option.as_bytes());
        hasher.update([0]);
        for w in weights {
            hasher.update(w.to_le_bytes());
        }
    }
    hex::encode(&hasher.finalize()[..8])
}

/// Parses one factor CSV. Line numbers in errors are 1-based file lines.
pub fn parse_factor_csv<R: Read>(
    reader: R,
    file: &str,
    expected_domain: Option<&str>,
) -> Result<Vec<FactorRow>, FactorError> {
    let csv_err = |source| FactorError::Csv {
        file: file.to_string(),
        source,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();

    let column = |name: &str| -> Result<usize, FactorError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| FactorError::MissingColumn {
                file: file.to_string(),
                column: name.to_string(),
            })
    };
    let domain_col = column("domain")?;
    let option_col = column("option_key")?;
    let mut boundary_cols = [0usize; BOUNDARY_COUNT];
    for b in Boundary::ALL {
        boundary_cols[b.index()] = column(b.code())?;
    }
    if let Some(extra) = headers
        .iter()
        .find(|h| *h != "domain" && *h != "option_key" && h.parse::<Boundary>().is_err())
    {
        return Err(FactorError::UnexpectedColumn {
            file: file.to_string(),
            column: extra.to_string(),
        });
    }

    let mut rows = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let domain = record.get(domain_col).unwrap_or_default().to_string();
        let option_key = record.get(option_col).unwrap_or_default().to_string();
        if let Some(expected) = expected_domain {
            if domain != expected {
                return Err(FactorError::DomainMismatch {
                    file: file.to_string(),
                    line,
                    expected: expected.to_string(),
                    found: domain,
                });
            }
        }
        let mut weights = [0.0; BOUNDARY_COUNT];
        for b in Boundary::ALL {
            let raw = record.get(boundary_cols[b.index()]).unwrap_or_default();
            weights[b.index()] = raw.parse::<f64>().map_err(|_| FactorError::BadNumber {
                file: file.to_string(),
                line,
                field: b.code().to_string(),
                raw: raw.to_string(),
            })?;
        }
        let row = FactorRow {
            domain,
            option_key,
            weights,
        };
        validate_row(&row, file, line)?;
        if !seen.insert((row.domain.clone(), row.option_key.clone())) {
            return Err(FactorError::DuplicateRow {
                file: file.to_string(),
                line,
                domain: row.domain,
                option_key: row.option_key,
            });
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(FactorError::EmptyDomain {
            file: file.to_string(),
            domain: expected_domain.unwrap_or("?").to_string(),
        });
    }
    Ok(rows)
}

/// `factors_<domain>.csv` files in `dir`, sorted by name.
pub fn factor_files(dir: &Path) -> Result<Vec<(String, PathBuf)>, FactorError> {
    let io_err = |source| FactorError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if let Some(domain) = name
            .strip_prefix("factors_")
            .and_then(|rest| rest.strip_suffix(".csv"))
        {
            files.push((domain.to_string(), path.clone()));
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(FactorError::NoTables(dir.to_path_buf()));
    }
    Ok(files)
}

fn read_factor_file(domain: &str, path: &Path) -> Result<Vec<FactorRow>, FactorError> {
    let file = fs::File::open(path).map_err(|source| FactorError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_factor_csv(file, &name, Some(domain))
}

/// Loads and validates every `factors_<domain>.csv` in `dir` into one table.
pub fn load_factor_tables(dir: impl AsRef<Path>) -> Result<FactorTable, FactorError> {
    let dir = dir.as_ref();
    let mut rows = Vec::new();
    for (domain, path) in factor_files(dir)? {
        rows.extend(read_factor_file(&domain, &path)?);
    }
    FactorTable::from_rows(rows, &dir.display().to_string())
}

/// Per-file validation outcome, for operator diagnostics.
#[derive(Debug)]
pub struct FileDiagnostic {
    pub file: PathBuf,
    pub outcome: Result<usize, FactorError>,
}

/// Validates each factor file independently so every broken file is reported.
pub fn diagnose_factor_dir(dir: impl AsRef<Path>) -> Result<Vec<FileDiagnostic>, FactorError> {
    let files = factor_files(dir.as_ref())?;
    Ok(files
        .into_iter()
        .map(|(domain, path)| FileDiagnostic {
            outcome: read_factor_file(&domain, &path).map(|rows| rows.len()),
            file: path,
        })
        .collect())
}
