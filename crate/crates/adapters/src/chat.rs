use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ecobee_core::{Boundary, BoundaryScores};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Cards sent with one chat turn.
pub const MAX_CONTEXT_CARDS: usize = 5;
/// Lowest-scored boundaries the cards are matched against.
pub const CONTEXT_BOUNDARIES: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatTurn {
    pub role: Role,
    pub text: String,
}

impl ChatTurn {
    pub fn user(text: impl Into<String>) -> Self {
        Self { role: Role::User, text: text.into() }
    }

    pub fn assistant(text: impl Into<String>) -> Self {
        Self { role: Role::Assistant, text: text.into() }
    }
}

/// A curated campus action (event, service, scheme).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpportunityCard {
    pub id: String,
    pub title: String,
    pub description: String,
    pub campus: String,
    pub related_boundaries: Vec<Boundary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<String>,
}

#[derive(Debug, Error)]
pub enum OpportunityError {
    #[error("opportunity catalog is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("opportunity `{0}` has no related boundaries")]
    NoBoundaries(String),
    #[error("duplicate opportunity id `{0}`")]
    Duplicate(String),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Parses a JSON array of cards, keeping file order.
pub fn parse_opportunities(text: &str) -> Result<Vec<OpportunityCard>, OpportunityError> {
    let cards: Vec<OpportunityCard> = serde_json::from_str(text)?;
    let mut seen = BTreeSet::new();
    for card in &cards {
        if card.related_boundaries.is_empty() {
            return Err(OpportunityError::NoBoundaries(card.id.clone()));
        }
        if !seen.insert(card.id.as_str()) {
            return Err(OpportunityError::Duplicate(card.id.clone()));
        }
    }
    Ok(cards)
}

pub fn load_opportunities(path: impl AsRef<Path>) -> Result<Vec<OpportunityCard>, OpportunityError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| OpportunityError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_opportunities(&text)
}

/// Up to five cards touching the user's three lowest boundaries. Cards on
/// the lowest boundary come first, then the next; catalog order breaks ties.
pub fn select_opportunities(scores: &BoundaryScores, catalog: &[OpportunityCard]) -> Vec<OpportunityCard> {
    let lowest = scores.lowest(CONTEXT_BOUNDARIES);
    let mut ranked: Vec<(usize, &OpportunityCard)> = catalog
        .iter()
        .filter_map(|card| {
            lowest
                .iter()
                .position(|b| card.related_boundaries.contains(b))
                .map(|rank| (rank, card))
        })
        .collect();
    ranked.sort_by_key(|(rank, _)| *rank);
    ranked
        .into_iter()
        .take(MAX_CONTEXT_CARDS)
        .map(|(_, card)| card.clone())
        .collect()
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// The grounding block sent ahead of the conversation.
#[derive(Clone, Debug, PartialEq)]
pub struct ChatContext {
    pub scores: BoundaryScores,
    pub cards: Vec<OpportunityCard>,
    pub career_interest: Option<String>,
}

impl ChatContext {
    pub fn build(scores: &BoundaryScores, catalog: &[OpportunityCard], career_interest: Option<&str>) -> Self {
        Self {
            scores: *scores,
            cards: select_opportunities(scores, catalog),
            career_interest: career_interest.map(one_line).filter(|s| !s.is_empty()),
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::from(
            "You are a campus sustainability coach. Ground advice in the student's planetary-boundary \
             scores and, where relevant, the listed campus opportunities.\n\n",
        );
        out.push_str("Boundary scores (0-100, higher is better):\n");
        for (b, s) in self.scores.iter() {
            let _ = writeln!(out, "- {}: {s:.1}", b.label());
        }
        if !self.cards.is_empty() {
            out.push_str("\nCampus opportunities:\n");
            for card in &self.cards {
                let codes: Vec<&str> = card.related_boundaries.iter().map(|b| b.code()).collect();
                let _ = write!(
                    out,
                    "- [{}] {} ({} campus; {}): {}",
                    card.id,
                    one_line(&card.title),
                    one_line(&card.campus),
                    codes.join(", "),
                    one_line(&card.description)
                );
                if let Some(link) = &card.link {
                    let _ = write!(out, " {}", one_line(link));
                }
                out.push('\n');
            }
        }
        if let Some(interest) = &self.career_interest {
            let _ = write!(out, "\nCareer interest: {interest}\n");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn card(id: &str, boundaries: &[Boundary]) -> OpportunityCard {
        OpportunityCard {
            id: id.into(),
            title: id.to_uppercase(),
            description: "d".into(),
            campus: "north".into(),
            related_boundaries: boundaries.to_vec(),
            link: None,
        }
    }

    #[test]
    fn lowest_boundary_cards_first() {
        let mut values = [90.0; 9];
        values[Boundary::FreshwaterUse.index()] = 10.0;
        values[Boundary::ClimateChange.index()] = 20.0;
        let scores = BoundaryScores::new(values).unwrap();
        let catalog = vec![
            card("climate", &[Boundary::ClimateChange]),
            card("ozone", &[Boundary::StratosphericOzoneDepletion]),
            card("water", &[Boundary::FreshwaterUse]),
        ];
        let ids: Vec<String> = select_opportunities(&scores, &catalog).into_iter().map(|c| c.id).collect();
        assert_eq!(ids, ["water", "climate"]);
    }

    #[test]
    fn render_is_stable_and_single_line_per_field() {
        let scores = BoundaryScores::uniform(50.0).unwrap();
        let catalog = vec![card("a", &[Boundary::ClimateChange])];
        let ctx = ChatContext::build(&scores, &catalog, Some("data\nscience"));
        let text = ctx.render();
        assert_eq!(text, ctx.render());
        assert!(text.contains("Career interest: data science\n"));
        assert!(text.contains("- Climate Change: 50.0\n"));
        assert!(text.contains("[a] A"));
    }

    #[test]
    fn catalog_validation() {
        assert!(matches!(
            parse_opportunities(r#"[{"id":"x","title":"t","description":"d","campus":"c","related_boundaries":[]}]"#),
            Err(OpportunityError::NoBoundaries(_))
        ));
        assert!(matches!(
            parse_opportunities(r#"[{"id":"x","title":"t","description":"d","campus":"c","related_boundaries":["ocean"]}]"#),
            Err(OpportunityError::Json(_))
        ));
        let one = r#"{"id":"x","title":"t","description":"d","campus":"c","related_boundaries":["novel_entities"]}"#;
        assert!(matches!(
            parse_opportunities(&format!("[{one},{one}]")),
            Err(OpportunityError::Duplicate(_))
        ));
    }
}
