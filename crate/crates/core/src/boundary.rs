//! The nine planetary boundaries and boundary-indexed value types.
//!
//! Every boundary-keyed value in the system is stored as a fixed array in
//! canonical order and serialized as a JSON object keyed by boundary code.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Index};
use std::str::FromStr;

use serde::de::Error as _;
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// One of the nine planetary boundaries.
///
/// The declaration order is the canonical order used for every array,
/// CSV header, and tie-break in the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Boundary {
    ClimateChange,
    BiosphereIntegrity,
    BiogeochemicalFlows,
    LandSystemChange,
    FreshwaterUse,
    OceanAcidification,
    AtmosphericAerosolLoading,
    StratosphericOzoneDepletion,
    NovelEntities,
}

pub const BOUNDARY_COUNT: usize = 9;

impl Boundary {
    pub const ALL: [Boundary; BOUNDARY_COUNT] = [
        Boundary::ClimateChange,
        Boundary::BiosphereIntegrity,
        Boundary::BiogeochemicalFlows,
        Boundary::LandSystemChange,
        Boundary::FreshwaterUse,
        Boundary::OceanAcidification,
        Boundary::AtmosphericAerosolLoading,
        Boundary::StratosphericOzoneDepletion,
        Boundary::NovelEntities,
    ];

    /// Position in canonical order.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Stable lower-snake wire code.
    pub fn code(self) -> &'static str {
        match self {
            Boundary::ClimateChange => "climate_change",
            Boundary::BiosphereIntegrity => "biosphere_integrity",
            Boundary::BiogeochemicalFlows => "biogeochemical_flows",
            Boundary::LandSystemChange => "land_system_change",
            Boundary::FreshwaterUse => "freshwater_use",
            Boundary::OceanAcidification => "ocean_acidification",
            Boundary::AtmosphericAerosolLoading => "atmospheric_aerosol_loading",
            Boundary::StratosphericOzoneDepletion => "stratospheric_ozone_depletion",
            Boundary::NovelEntities => "novel_entities",
        }
    }

    /// Human-readable name.
    pub fn label(self) -> &'static str {
        match self {
            Boundary::ClimateChange => "Climate Change",
            Boundary::BiosphereIntegrity => "Biosphere Integrity",
            Boundary::BiogeochemicalFlows => "Biogeochemical Flows",
            Boundary::LandSystemChange => "Land-System Change",
            Boundary::FreshwaterUse => "Freshwater Use",
            Boundary::OceanAcidification => "Ocean Acidification",
            Boundary::AtmosphericAerosolLoading => "Atmospheric Aerosol Loading",
            Boundary::StratosphericOzoneDepletion => "Stratospheric Ozone Depletion",
            Boundary::NovelEntities => "Novel Entities",
        }
    }
}

/// The nine boundary codes in canonical order.
pub fn boundary_codes() -> [&'static str; BOUNDARY_COUNT] {
    Boundary::ALL.map(Boundary::code)
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundaryError {
    #[error("unknown boundary code `{0}`")]
    UnknownCode(String),
    #[error("missing value for boundary `{0}`")]
    Missing(Boundary),
    #[error("value {value} for `{boundary}` is outside [0, 100]")]
    ScoreOutOfRange { boundary: Boundary, value: f64 },
    #[error("value {value} for `{boundary}` must be finite and non-negative")]
    InvalidPressure { boundary: Boundary, value: f64 },
    #[error("duplicate value for boundary `{0}`")]
    Duplicate(Boundary),
}

impl FromStr for Boundary {
    type Err = BoundaryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Boundary::ALL
            .into_iter()
            .find(|b| b.code() == s)
            .ok_or_else(|| BoundaryError::UnknownCode(s.to_string()))
    }
}

impl Serialize for Boundary {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for Boundary {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let code = String::deserialize(deserializer)?;
        code.parse().map_err(D::Error::custom)
    }
}

/// Collects `(code, value)` pairs into a full canonical array.
fn array_from_pairs<'a, I>(pairs: I) -> Result<[f64; BOUNDARY_COUNT], BoundaryError>
where
    I: IntoIterator<Item = (&'a str, f64)>,
{
    let mut slots: [Option<f64>; BOUNDARY_COUNT] = [None; BOUNDARY_COUNT];
    for (code, value) in pairs {
        let boundary: Boundary = code.parse()?;
        if slots[boundary.index()].replace(value).is_some() {
            return Err(BoundaryError::Duplicate(boundary));
        }
    }
    let mut out = [0.0; BOUNDARY_COUNT];
    for b in Boundary::ALL {
        out[b.index()] = slots[b.index()].ok_or(BoundaryError::Missing(b))?;
    }
    Ok(out)
}

fn serialize_array<S: Serializer>(
    values: &[f64; BOUNDARY_COUNT],
    serializer: S,
) -> Result<S::Ok, S::Error> {
    let mut map = serializer.serialize_map(Some(BOUNDARY_COUNT))?;
    for b in Boundary::ALL {
        map.serialize_entry(b.code(), &values[b.index()])?;
    }
    map.end()
}

fn deserialize_array<'de, D: Deserializer<'de>>(
    deserializer: D,
) -> Result<[f64; BOUNDARY_COUNT], D::Error> {
    let raw = BTreeMap::<String, f64>::deserialize(deserializer)?;
    array_from_pairs(raw.iter().map(|(k, v)| (k.as_str(), *v))).map_err(D::Error::custom)
}

/// Accumulated, unitless pressure per boundary before normalization.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct PressureVector([f64; BOUNDARY_COUNT]);

impl PressureVector {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn new(values: [f64; BOUNDARY_COUNT]) -> Result<Self, BoundaryError> {
        for b in Boundary::ALL {
            let value = values[b.index()];
            if !value.is_finite() || value < 0.0 {
                return Err(BoundaryError::InvalidPressure { boundary: b, value });
            }
        }
        Ok(Self(values))
    }

    pub fn get(&self, boundary: Boundary) -> f64 {
        self.0[boundary.index()]
    }

    pub fn as_array(&self) -> &[f64; BOUNDARY_COUNT] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = (Boundary, f64)> + '_ {
        Boundary::ALL.into_iter().map(move |b| (b, self.0[b.index()]))
    }

    pub(crate) fn add_scaled(&mut self, weights: &[f64; BOUNDARY_COUNT], factor: f64) {
        for (slot, w) in self.0.iter_mut().zip(weights) {
            *slot += factor * w;
        }
    }
}

impl Add for PressureVector {
    type Output = PressureVector;

    fn add(mut self, rhs: Self) -> Self::Output {
        self += rhs;
        self
    }
}

impl AddAssign for PressureVector {
    fn add_assign(&mut self, rhs: Self) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
    }
}

impl Index<Boundary> for PressureVector {
    type Output = f64;

    fn index(&self, boundary: Boundary) -> &f64 {
        &self.0[boundary.index()]
    }
}

impl Serialize for PressureVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serialize_array(&self.0, serializer)
    }
}

/// Per-boundary scores on the 0–100 scale; higher is more boundary-aligned.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryScores([f64; BOUNDARY_COUNT]);

impl BoundaryScores {
    pub fn new(values: [f64; BOUNDARY_COUNT]) -> Result<Self, BoundaryError> {
        for b in Boundary::ALL {
            let value = values[b.index()];
            if !(0.0..=100.0).contains(&value) {
                return Err(BoundaryError::ScoreOutOfRange { boundary: b, value });
            }
        }
        Ok(Self(values))
    }

    /// Every boundary at the same score.
    pub fn uniform(value: f64) -> Result<Self, BoundaryError> {
        Self::new([value; BOUNDARY_COUNT])
    }

    pub fn from_pairs<'a, I>(pairs: I) -> Result<Self, BoundaryError>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        Self::new(array_from_pairs(pairs)?)
    }

    pub fn get(&self, boundary: Boundary) -> f64 {
        self.0[boundary.index()]
    }

    pub fn as_array(&self) -> &[f64; BOUNDARY_COUNT] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = (Boundary, f64)> + '_ {
        Boundary::ALL.into_iter().map(move |b| (b, self.0[b.index()]))
    }

    /// The `k` lowest-scored boundaries, ties broken by canonical order.
    pub fn lowest(&self, k: usize) -> Vec<Boundary> {
        let mut order = Boundary::ALL.to_vec();
        // sort_by is stable, so equal scores keep canonical order
        order.sort_by(|a, b| self.get(*a).total_cmp(&self.get(*b)));
        order.truncate(k);
        order
    }
}

impl Index<Boundary> for BoundaryScores {
    type Output = f64;

    fn index(&self, boundary: Boundary) -> &f64 {
        &self.0[boundary.index()]
    }
}

impl Serialize for BoundaryScores {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serialize_array(&self.0, serializer)
    }
}

impl<'de> Deserialize<'de> for BoundaryScores {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let values = deserialize_array(deserializer)?;
        BoundaryScores::new(values).map_err(D::Error::custom)
    }
}

/// Non-negative per-boundary weights, not all zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryWeights([f64; BOUNDARY_COUNT]);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeightsError {
    #[error("weight {value} for `{boundary}` must be finite and non-negative")]
    Negative { boundary: Boundary, value: f64 },
    #[error("weights must not all be zero")]
    AllZero,
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
}

impl BoundaryWeights {
    pub fn new(values: [f64; BOUNDARY_COUNT]) -> Result<Self, WeightsError> {
        for b in Boundary::ALL {
            let value = values[b.index()];
            if !value.is_finite() || value < 0.0 {
                return Err(WeightsError::Negative { boundary: b, value });
            }
        }
        if values.iter().all(|w| *w == 0.0) {
            return Err(WeightsError::AllZero);
        }
        Ok(Self(values))
    }

    pub fn equal() -> Self {
        Self([1.0; BOUNDARY_COUNT])
    }

    pub fn get(&self, boundary: Boundary) -> f64 {
        self.0[boundary.index()]
    }

    pub fn as_array(&self) -> &[f64; BOUNDARY_COUNT] {
        &self.0
    }
}

impl Default for BoundaryWeights {
    fn default() -> Self {
        Self::equal()
    }
}

impl Serialize for BoundaryWeights {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serialize_array(&self.0, serializer)
    }
}

impl<'de> Deserialize<'de> for BoundaryWeights {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let values = deserialize_array(deserializer)?;
        BoundaryWeights::new(values).map_err(D::Error::custom)
    }
}
