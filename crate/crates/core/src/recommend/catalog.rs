//! Catalog of behavior-change actions.

use std::collections::{BTreeSet, HashSet};
use std::io::Read;
use std::path::Path;

use thiserror::Error;

use crate::boundary::{Boundary, BOUNDARY_COUNT};
use crate::item::is_token;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("line {line}: {message}")]
    InvalidRow { line: u64, message: String },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Action {
    pub id: String,
    pub domain: String,
    pub title: String,
    /// Pressure-reduction potential per boundary.
    pub boundary_relevance: [f64; BOUNDARY_COUNT],
    /// Empty means feasible everywhere.
    pub feasibility_tags: BTreeSet<String>,
    pub replaces_option: Option<String>,
}

impl Action {
    pub fn relevance(&self, boundary: Boundary) -> f64 {
        self.boundary_relevance[boundary.index()]
    }

    pub fn is_feasible(&self, context: &BTreeSet<String>, current_options: &BTreeSet<String>) -> bool {
        let tags_ok = self.feasibility_tags.is_empty()
            || self.feasibility_tags.iter().any(|t| context.contains(t));
        let not_current = self
            .replaces_option
            .as_ref()
            .is_none_or(|opt| !current_options.contains(opt));
        tags_ok && not_current
    }

    fn validate(&self) -> Result<(), String> {
        if !is_token(&self.id) {
            return Err(format!("action id `{}` is not a lower-snake token", self.id));
        }
        if self.id.parse::<Boundary>().is_ok() {
            return Err(format!("action id `{}` collides with a boundary code", self.id));
        }
        if !is_token(&self.domain) {
            return Err(format!("domain `{}` is not a lower-snake token", self.domain));
        }
        if self
            .boundary_relevance
            .iter()
            .any(|r| !r.is_finite() || *r < 0.0)
        {
            return Err("relevance values must be finite and non-negative".into());
        }
        if self.boundary_relevance.iter().all(|r| *r == 0.0) {
            return Err(format!("action `{}` has no positive boundary relevance", self.id));
        }
        Ok(())
    }
}

/// Validated action list in file order.
#[derive(Clone, Debug, Default)]
pub struct ActionCatalog {
    actions: Vec<Action>,
}

impl ActionCatalog {
    pub fn new(actions: Vec<Action>) -> Result<Self, CatalogError> {
        let mut seen = HashSet::new();
        for (idx, action) in actions.iter().enumerate() {
            let line = idx as u64 + 2;
            action
                .validate()
                .map_err(|message| CatalogError::InvalidRow { line, message })?;
            if !seen.insert(action.id.as_str()) {
                return Err(CatalogError::InvalidRow {
                    line,
                    message: format!("duplicate action id `{}`", action.id),
                });
            }
        }
        Ok(Self { actions })
    }

    /// Reads `id,domain,title,feasibility_tags,replaces_option,<9 boundary codes>`.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self, CatalogError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| CatalogError::MissingColumn(name.to_string()))
        };
        let id_col = col("id")?;
        let domain_col = col("domain")?;
        let title_col = col("title")?;
        let tags_col = col("feasibility_tags")?;
        let replaces_col = col("replaces_option")?;
        let mut relevance_cols = [0usize; BOUNDARY_COUNT];
        for b in Boundary::ALL {
            relevance_cols[b.index()] = col(b.code())?;
        }

        let mut actions = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let field = |i: usize| record.get(i).unwrap_or_default();
            let mut relevance = [0.0; BOUNDARY_COUNT];
            for b in Boundary::ALL {
                let raw = field(relevance_cols[b.index()]);
                relevance[b.index()] = raw.parse().map_err(|_| CatalogError::InvalidRow {
                    line,
                    message: format!("`{}` is not a number for {}", raw, b.code()),
                })?;
            }
            let replaces = field(replaces_col);
            actions.push(Action {
                id: field(id_col).to_string(),
                domain: field(domain_col).to_string(),
                title: field(title_col).to_string(),
                boundary_relevance: relevance,
                feasibility_tags: field(tags_col)
                    .split(';')
                    .map(str::trim)
                    .filter(|t| !t.is_empty())
                    .map(str::to_string)
                    .collect(),
                replaces_option: (!replaces.is_empty()).then(|| replaces.to_string()),
            });
        }
        Self::new(actions)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CatalogError> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn get(&self, id: &str) -> Option<&Action> {
        self.actions.iter().find(|a| a.id == id)
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}
