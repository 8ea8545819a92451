use std::fmt;
use std::str::FromStr;

use super::ExperimentError;
use crate::doc::{DocError, FlatDoc};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClaimId {
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
    C7,
    C8,
}

impl ClaimId {
    pub const ALL: [ClaimId; 8] = [
        ClaimId::C1,
        ClaimId::C2,
        ClaimId::C3,
        ClaimId::C4,
        ClaimId::C5,
        ClaimId::C6,
        ClaimId::C7,
        ClaimId::C8,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClaimId::C1 => "C1",
            ClaimId::C2 => "C2",
            ClaimId::C3 => "C3",
            ClaimId::C4 => "C4",
            ClaimId::C5 => "C5",
            ClaimId::C6 => "C6",
            ClaimId::C7 => "C7",
            ClaimId::C8 => "C8",
        }
    }
}

impl fmt::Display for ClaimId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClaimId {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ClaimId::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| ExperimentError::UnknownClaim(s.to_string()))
    }
}

/// How a claim's series are judged.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Check {
    /// Fitted exponent of the first series lies in `[lo, hi]`.
    Exponent { lo: f64, hi: f64 },
    /// `max / min` of the first series is at most `max_ratio`.
    Constant { max_ratio: f64 },
    /// Every value of the first series equals its parameter.
    EqualsParam,
    /// Exponent band on the first series, constant check on the second.
    ExponentAndConstant { lo: f64, hi: f64, max_ratio: f64 },
}

impl Check {
    pub fn name(&self) -> &'static str {
        match self {
            Check::Exponent { .. } => "exponent",
            Check::Constant { .. } => "constant",
            Check::EqualsParam => "equals-param",
            Check::ExponentAndConstant { .. } => "exponent-and-constant",
        }
    }

    pub fn band(&self) -> Option<(f64, f64)> {
        match *self {
            Check::Exponent { lo, hi } | Check::ExponentAndConstant { lo, hi, .. } => Some((lo, hi)),
            _ => None,
        }
    }

    pub fn max_ratio(&self) -> Option<f64> {
        match *self {
            Check::Constant { max_ratio } | Check::ExponentAndConstant { max_ratio, .. } => Some(max_ratio),
            _ => None,
        }
    }

    fn with_band(self, lo: f64, hi: f64) -> Self {
        match self {
            Check::Exponent { .. } => Check::Exponent { lo, hi },
            Check::ExponentAndConstant { max_ratio, .. } => Check::ExponentAndConstant { lo, hi, max_ratio },
            other => other,
        }
    }

    fn with_max_ratio(self, max_ratio: f64) -> Self {
        match self {
            Check::Constant { .. } => Check::Constant { max_ratio },
            Check::ExponentAndConstant { lo, hi, .. } => Check::ExponentAndConstant { lo, hi, max_ratio },
            other => other,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClaimEntry {
    pub id: ClaimId,
    pub statement: &'static str,
    /// What the sweep parameter is.
    pub param: &'static str,
    /// Tracked metrics, in the order `check` consumes them.
    pub metrics: &'static [&'static str],
    pub check: Check,
    pub default_points: &'static [u64],
}

/// Claim definitions and their acceptance bands. Bands can be overridden
/// from a flat document, see [`Registry::from_document`].
#[derive(Clone, Debug, PartialEq)]
pub struct Registry {
    pub entries: Vec<ClaimEntry>,
    /// Minimum sweep size for exponent checks.
    pub min_points: usize,
    /// Minimum parameter span, in decades, for exponent checks.
    pub min_span_decades: f64,
}

const LINEAR: Check = Check::Exponent { lo: 0.8, hi: 1.2 };

impl Default for Registry {
    fn default() -> Self {
        let entries = vec![
            ClaimEntry {
                id: ClaimId::C1,
                statement: "Word Count batched reduce memory grows linearly in f_MAX",
                param: "f_max",
                metrics: &["reduce_key_cx.max_memory_bytes"],
                check: LINEAR,
                default_points: &[10, 100, 1_000, 10_000],
            },
            ClaimEntry {
                id: ClaimId::C2,
                statement: "Word Count streaming reduce memory is constant in f_MAX",
                param: "f_max",
                metrics: &["reduce_key_cx.max_memory_bytes"],
                check: Check::Constant { max_ratio: 2.0 },
                default_points: &[10, 100, 1_000, 10_000],
            },
            ClaimEntry {
                id: ClaimId::C3,
                statement: "Word Count total cost grows linearly in corpus size S",
                param: "total_tokens",
                metrics: &["sequential.total_cost_units"],
                check: LINEAR,
                default_points: &[1_000, 5_000, 25_000, 125_000],
            },
            ClaimEntry {
                id: ClaimId::C4,
                statement: "PageRank batched reduce key cost grows linearly in d_MAX",
                param: "d_max",
                metrics: &["reduce_key_cx.max_cost_units"],
                check: LINEAR,
                default_points: &[10, 100, 1_000, 10_000],
            },
            ClaimEntry {
                id: ClaimId::C5,
                statement: "PageRank total cost grows linearly in edge count M",
                param: "num_edges",
                metrics: &["sequential.total_cost_units"],
                check: LINEAR,
                default_points: &[1_000, 4_000, 16_000, 64_000],
            },
            ClaimEntry {
                id: ClaimId::C6,
                statement: "combined aggregation feeds the reducer one value per mapper",
                param: "num_mappers",
                metrics: &["reduce_record_value_count"],
                check: Check::EqualsParam,
                default_points: &[2, 4, 8, 16],
            },
            ClaimEntry {
                id: ClaimId::C7,
                statement: "uncombined aggregation feeds the reducer one value per input record",
                param: "num_records",
                metrics: &["reduce_record_value_count"],
                check: Check::EqualsParam,
                default_points: &[10, 100, 1_000, 10_000],
            },
            ClaimEntry {
                id: ClaimId::C8,
                statement: "total streaming reducer memory grows linearly in reducer count while each reducer stays constant",
                param: "num_reducers",
                metrics: &["total_streaming_reducer_memory", "reduce_key_cx.max_memory_bytes"],
                check: Check::ExponentAndConstant {
                    lo: 0.8,
                    hi: 1.2,
                    max_ratio: 2.0,
                },
                default_points: &[2, 8, 32, 128],
            },
        ];
        Registry {
            entries,
            min_points: 4,
            min_span_decades: 1.5,
        }
    }
}

impl Registry {
    pub fn entry(&self, id: ClaimId) -> &ClaimEntry {
        self.entries
            .iter()
            .find(|e| e.id == id)
            .expect("every claim id is registered")
    }

    /// Band configuration as a `claim-registry` document.
    pub fn to_document(&self) -> FlatDoc {
        let mut d = FlatDoc::new("claim-registry");
        d.push("min_points", self.min_points);
        d.push("min_span_decades", self.min_span_decades);
        for e in &self.entries {
            if let Some((lo, hi)) = e.check.band() {
                d.push(format!("{}.band", e.id), format!("{lo},{hi}"));
            }
            if let Some(r) = e.check.max_ratio() {
                d.push(format!("{}.max_ratio", e.id), r);
            }
        }
        d
    }

    /// Default registry with any fields present in `d` overriding it.
    pub fn from_document(d: &FlatDoc) -> Result<Registry, DocError> {
        d.expect_kind("claim-registry")?;
        let mut reg = Registry::default();
        for (field, _) in d.fields() {
            let known = field == "kind"
                || field == "min_points"
                || field == "min_span_decades"
                || ClaimId::ALL
                    .iter()
                    .any(|c| *field == format!("{c}.band") || *field == format!("{c}.max_ratio"));
            if !known {
                return Err(d.invalid(field, "unknown registry field"));
            }
        }
        if d.get("min_points").is_ok() {
            reg.min_points = d.parse("min_points")?;
        }
        if d.get("min_span_decades").is_ok() {
            reg.min_span_decades = d.parse("min_span_decades")?;
        }
        for e in &mut reg.entries {
            let band = format!("{}.band", e.id);
            if d.get(&band).is_ok() {
                match d.parse_list::<f64>(&band)?.as_slice() {
                    &[lo, hi] if lo <= hi => e.check = e.check.with_band(lo, hi),
                    _ => return Err(d.invalid(&band, d.get(&band)?)),
                }
            }
            let ratio = format!("{}.max_ratio", e.id);
            if d.get(&ratio).is_ok() {
                e.check = e.check.with_max_ratio(d.parse(&ratio)?);
            }
        }
        Ok(reg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_claim_registered_once() {
        let reg = Registry::default();
        for id in ClaimId::ALL {
            assert_eq!(reg.entries.iter().filter(|e| e.id == id).count(), 1);
            assert!(!reg.entry(id).metrics.is_empty());
        }
    }

    #[test]
    fn claim_ids_parse() {
        assert_eq!("c6".parse::<ClaimId>().unwrap(), ClaimId::C6);
        assert!(matches!("C9".parse::<ClaimId>(), Err(ExperimentError::UnknownClaim(_))));
    }

    #[test]
    fn document_round_trip_and_override() {
        let reg = Registry::default();
        let text = reg.to_document().render();
        let back = Registry::from_document(&text.parse().unwrap()).unwrap();
        assert_eq!(back, reg);

        let custom: FlatDoc = "kind=claim-registry\nC1.band=0.9,1.1\nC8.max_ratio=1.5\n".parse().unwrap();
        let reg = Registry::from_document(&custom).unwrap();
        assert_eq!(reg.entry(ClaimId::C1).check, Check::Exponent { lo: 0.9, hi: 1.1 });
        assert_eq!(reg.entry(ClaimId::C8).check.max_ratio(), Some(1.5));

        let bad: FlatDoc = "kind=claim-registry\nC1.band=1.2,0.8\n".parse().unwrap();
        assert!(Registry::from_document(&bad).is_err());
        let unknown: FlatDoc = "kind=claim-registry\nC9.band=1,2\n".parse().unwrap();
        assert!(Registry::from_document(&unknown).is_err());
    }
}
