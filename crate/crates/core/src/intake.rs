//! Normalizes quiz answers, barcodes and vision labels into canonical items.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::factors::FactorTable;
use crate::item::{is_token, CanonicalItem, ItemSource};

/// Default confidence threshold for vision labels.
pub const DEFAULT_MIN_CONFIDENCE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntakeError {
    #[error("unknown quiz domain `{0}`")]
    UnknownDomain(String),
    #[error("unknown option `{option}` for domain `{domain}`")]
    UnknownOption { domain: String, option: String },
    #[error("barcode must be 8 to 14 digits")]
    MalformedBarcode,
    #[error("barcode {0} is not in the registry")]
    UnknownBarcode(String),
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("line {line}: {message}")]
    InvalidRow { line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Trim, lowercase, and turn runs of spaces or hyphens into one underscore.
pub fn normalise_option_key(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_sep = false;
    for ch in raw.trim().chars() {
        if ch.is_whitespace() || ch == '-' || ch == '_' {
            pending_sep = true;
            continue;
        }
        if pending_sep && !out.is_empty() {
            out.push('_');
        }
        pending_sep = false;
        out.extend(ch.to_lowercase());
    }
    out
}

/// One item per answered quiz domain, in domain order.
pub fn canonicalise_quiz(
    quiz: &BTreeMap<String, String>,
    table: &FactorTable,
) -> Result<Vec<CanonicalItem>, IntakeError> {
    quiz.iter()
        .map(|(domain, answer)| {
            if !table.has_domain(domain) {
                return Err(IntakeError::UnknownDomain(domain.clone()));
            }
            let option = normalise_option_key(answer);
            if table.weights(domain, &option).is_none() {
                return Err(IntakeError::UnknownOption {
                    domain: domain.clone(),
                    option,
                });
            }
            Ok(CanonicalItem::new(domain.clone(), option, ItemSource::Quiz))
        })
        .collect()
}

/// A label returned by the vision model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelledItem {
    pub domain: String,
    pub option_key: String,
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption: Option<String>,
}

impl LabelledItem {
    pub fn is_valid(&self) -> bool {
        is_token(&self.domain)
            && is_token(&self.option_key)
            && (0.0..=1.0).contains(&self.confidence)
    }
}

/// A registry row mapping a product barcode to a factor table row.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BarcodeRecord {
    pub code: String,
    pub domain: String,
    pub option_key: String,
}

pub fn is_valid_barcode(code: &str) -> bool {
    (8..=14).contains(&code.len()) && code.bytes().all(|c| c.is_ascii_digit())
}

/// Local barcode lookup table.
#[derive(Clone, Debug, Default)]
pub struct BarcodeRegistry {
    records: HashMap<String, BarcodeRecord>,
}

impl BarcodeRegistry {
    pub fn from_records<I>(records: I) -> Result<Self, RegistryError>
    where
        I: IntoIterator<Item = BarcodeRecord>,
    {
        let mut map = HashMap::new();
        for (idx, record) in records.into_iter().enumerate() {
            let line = idx as u64 + 2;
            let invalid = |message: String| RegistryError::InvalidRow { line, message };
            if !is_valid_barcode(&record.code) {
                return Err(invalid(format!("malformed barcode `{}`", record.code)));
            }
            if !is_token(&record.domain) || !is_token(&record.option_key) {
                return Err(invalid("domain and option_key must be lower-snake tokens".into()));
            }
            if map.contains_key(&record.code) {
                return Err(invalid(format!("duplicate barcode {}", record.code)));
            }
            map.insert(record.code.clone(), record);
        }
        Ok(Self { records: map })
    }

    /// Reads a `code,domain,option_key` CSV.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self, RegistryError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let records = rdr
            .deserialize::<BarcodeRecord>()
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_records(records)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RegistryError> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    pub fn get(&self, code: &str) -> Option<&BarcodeRecord> {
        self.records.get(code)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

pub fn normalise_barcode(code: &str, registry: &BarcodeRegistry) -> Result<CanonicalItem, IntakeError> {
    let code = code.trim();
    if !is_valid_barcode(code) {
        return Err(IntakeError::MalformedBarcode);
    }
    let record = registry
        .get(code)
        .ok_or_else(|| IntakeError::UnknownBarcode(code.to_string()))?;
    Ok(CanonicalItem::new(
        record.domain.clone(),
        record.option_key.clone(),
        ItemSource::Barcode,
    ))
}

/// Result of merging quiz items with vision labels.
#[derive(Clone, Debug, PartialEq)]
pub struct MergedItems {
    pub items: Vec<CanonicalItem>,
    pub dropped_low_confidence: usize,
    pub dropped_duplicates: usize,
}

/// Appends confident vision labels after the quiz items.
///
/// A label is dropped when its confidence is below `min_confidence` or when
/// a quiz item already covers the same `(domain, option_key)`.
pub fn merge_items(
    quiz_items: Vec<CanonicalItem>,
    labelled_items: &[LabelledItem],
    min_confidence: f64,
) -> MergedItems {
    let mut dropped_low_confidence = 0;
    let mut dropped_duplicates = 0;
    let mut vision = Vec::new();
    for label in labelled_items {
        if label.confidence.is_nan() || label.confidence < min_confidence {
            dropped_low_confidence += 1;
            continue;
        }
        let duplicate = quiz_items
            .iter()
            .any(|q| q.domain == label.domain && q.option_key == label.option_key);
        if duplicate {
            dropped_duplicates += 1;
            continue;
        }
        vision.push(CanonicalItem::new(
            label.domain.clone(),
            label.option_key.clone(),
            ItemSource::Vision,
        ));
    }
    let mut items = quiz_items;
    items.extend(vision);
    MergedItems {
        items,
        dropped_low_confidence,
        dropped_duplicates,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factors::FactorRow;
    use proptest::prelude::*;

    fn table() -> FactorTable {
        let row = |d: &str, o: &str| FactorRow {
            domain: d.into(),
            option_key: o.into(),
            weights: [1.0; 9],
        };
        FactorTable::from_rows(
            vec![row("food", "vegan"), row("food", "meat_heavy"), row("mobility", "car")],
            "mem",
        )
        .unwrap()
    }

    fn quiz(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn case_folding() {
        let items = canonicalise_quiz(&quiz(&[("food", "Vegan")]), &table()).unwrap();
        assert_eq!(items, vec![CanonicalItem::new("food", "vegan", ItemSource::Quiz)]);
        assert_eq!(items[0].quantity, 1.0);
    }

    #[test]
    fn unknown_option_and_domain() {
        assert_eq!(
            canonicalise_quiz(&quiz(&[("food", "deep fried unicorn")]), &table()),
            Err(IntakeError::UnknownOption {
                domain: "food".into(),
                option: "deep_fried_unicorn".into()
            })
        );
        assert_eq!(
            canonicalise_quiz(&quiz(&[("pets", "cat")]), &table()),
            Err(IntakeError::UnknownDomain("pets".into()))
        );
    }

    #[test]
    fn normalisation_rules() {
        assert_eq!(normalise_option_key("  Meat heavy "), "meat_heavy");
        assert_eq!(normalise_option_key("Fast-Fashion"), "fast_fashion");
        assert_eq!(normalise_option_key("shared  -  flat"), "shared_flat");
        assert_eq!(normalise_option_key(""), "");
    }

    #[test]
    fn barcodes() {
        let registry = BarcodeRegistry::from_records(vec![BarcodeRecord {
            code: "5000112637922".into(),
            domain: "food".into(),
            option_key: "soft_drink".into(),
        }])
        .unwrap();
        let item = normalise_barcode("5000112637922", &registry).unwrap();
        assert_eq!(item, CanonicalItem::new("food", "soft_drink", ItemSource::Barcode));
        assert_eq!(normalise_barcode("12ab", &registry), Err(IntakeError::MalformedBarcode));
        assert_eq!(normalise_barcode("1234567", &registry), Err(IntakeError::MalformedBarcode));
        assert_eq!(
            normalise_barcode("99999999", &BarcodeRegistry::default()),
            Err(IntakeError::UnknownBarcode("99999999".into()))
        );
    }

    #[test]
    fn registry_csv_validation() {
        let ok = "code,domain,option_key\n96385074,food,vegetarian\n";
        assert_eq!(BarcodeRegistry::from_reader(ok.as_bytes()).unwrap().len(), 1);
        let dup = "code,domain,option_key\n96385074,food,a\n96385074,food,b\n";
        assert!(matches!(
            BarcodeRegistry::from_reader(dup.as_bytes()),
            Err(RegistryError::InvalidRow { line: 3, .. })
        ));
        let bad = "code,domain,option_key\n123,food,a\n";
        assert!(BarcodeRegistry::from_reader(bad.as_bytes()).is_err());
    }

    fn label(d: &str, o: &str, c: f64) -> LabelledItem {
        LabelledItem {
            domain: d.into(),
            option_key: o.into(),
            confidence: c,
            caption: None,
        }
    }

    #[test]
    fn merge_examples() {
        let empty = merge_items(vec![], &[], 0.5);
        assert!(empty.items.is_empty());

        let vegan = CanonicalItem::new("food", "vegan", ItemSource::Quiz);
        let dup = merge_items(vec![vegan.clone()], &[label("food", "vegan", 0.9)], 0.5);
        assert_eq!(dup.items, vec![vegan.clone()]);
        assert_eq!(dup.dropped_duplicates, 1);

        let labels = [label("fashion", "fast_fashion", 0.8), label("fashion", "jeans", 0.3)];
        let merged = merge_items(vec![vegan.clone()], &labels, 0.5);
        assert_eq!(
            merged.items,
            vec![vegan, CanonicalItem::new("fashion", "fast_fashion", ItemSource::Vision)]
        );
        assert_eq!(merged.dropped_low_confidence, 1);
    }

    #[test]
    fn merge_drops_nan_confidence() {
        let merged = merge_items(vec![], &[label("food", "vegan", f64::NAN)], 0.0);
        assert!(merged.items.is_empty());
        assert_eq!(merged.dropped_low_confidence, 1);
    }

    fn arb_label() -> impl Strategy<Value = LabelledItem> {
        (0usize..3, 0usize..3, 0.0f64..=1.0).prop_map(|(d, o, c)| {
            label(["food", "fashion", "housing"][d], ["a", "b", "c"][o], c)
        })
    }

    proptest! {
        #[test]
        fn merge_matches_brute_force_filter(
            quiz_opts in prop::collection::vec((0usize..3, 0usize..3), 0..4),
            labels in prop::collection::vec(arb_label(), 0..12),
            threshold in 0.0f64..=1.0,
        ) {
            let quiz_items: Vec<CanonicalItem> = quiz_opts
                .iter()
                .map(|(d, o)| CanonicalItem::new(["food", "fashion", "housing"][*d], ["a", "b", "c"][*o], ItemSource::Quiz))
                .collect();
            let merged = merge_items(quiz_items.clone(), &labels, threshold);

            let mut expected = quiz_items.clone();
            for l in &labels {
                let keep = l.confidence >= threshold
                    && !quiz_items.iter().any(|q| q.domain == l.domain && q.option_key == l.option_key);
                if keep {
                    expected.push(CanonicalItem::new(l.domain.clone(), l.option_key.clone(), ItemSource::Vision));
                }
            }
            prop_assert_eq!(&merged.items, &expected);
            prop_assert!(merged.items.len() <= quiz_items.len() + labels.len());
            prop_assert_eq!(
                merged.items.len() + merged.dropped_low_confidence + merged.dropped_duplicates,
                quiz_items.len() + labels.len()
            );
        }

        #[test]
        fn normalisation_is_idempotent(raw in "[ A-Za-z_-]{0,24}") {
            let once = normalise_option_key(&raw);
            prop_assert_eq!(normalise_option_key(&once), once.clone());
        }
    }
}
