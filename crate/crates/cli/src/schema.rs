//! JSON documents for instances and solutions.
//!
//! Rationals travel as strings such as `"2/5"`; decimal strings and plain JSON
//! numbers are accepted on input and converted exactly. Bundles are numbered
//! from 1 in every document.

use std::collections::BTreeMap;

use layercake_core::cake::{parse_rational, Interval, LayeredPiece, MultiDivision, Piece, Rational};
use layercake_core::valuation::{Agent, AdditiveValuation, DensitySegment, Instance};
use serde::{Deserialize, Deserializer, Serialize};

/// Input-side rational: a string or a JSON number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalText(pub String);

impl<'de> Deserialize<'de> for RationalText {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(serde_json::Number),
        }
        Ok(match Raw::deserialize(d)? {
            Raw::Text(s) => RationalText(s),
            Raw::Number(n) => RationalText(n.to_string()),
        })
    }
}

impl Serialize for RationalText {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl RationalText {
    pub fn of(r: &Rational) -> Self {
        RationalText(r.to_string())
    }

    pub fn parse(&self, field: &str) -> Result<Rational, String> {
        parse_rational(&self.0).map_err(|e| format!("{field}: {e}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentDoc {
    pub from: RationalText,
    pub to: RationalText,
    pub value: RationalText,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentDoc {
    pub name: String,
    /// One list of density segments per layer.
    pub density: Vec<Vec<SegmentDoc>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub layers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub birthday: Option<usize>,
    pub agents: Vec<AgentDoc>,
}

impl InstanceDoc {
    pub fn to_instance(&self) -> Result<Instance, String> {
        let mut agents = Vec::with_capacity(self.agents.len());
        for (i, a) in self.agents.iter().enumerate() {
            if a.density.len() != self.layers {
                return Err(format!(
                    "agents[{i}].density: {} layers given, the cake has {}",
                    a.density.len(),
                    self.layers
                ));
            }
            let mut layers = Vec::with_capacity(a.density.len());
            for (l, segs) in a.density.iter().enumerate() {
                let mut out = Vec::with_capacity(segs.len());
                for (s, seg) in segs.iter().enumerate() {
                    let at = format!("agents[{i}].density[{l}][{s}]");
                    out.push(DensitySegment::new(
                        seg.from.parse(&format!("{at}.from"))?,
                        seg.to.parse(&format!("{at}.to"))?,
                        seg.value.parse(&format!("{at}.value"))?,
                    ));
                }
                layers.push(out);
            }
            let valuation = AdditiveValuation::new(layers).map_err(|e| format!("agents[{i}]: {e}"))?;
            agents.push(Agent::additive(a.name.clone(), valuation));
        }
        let instance = Instance::new(self.layers, agents).map_err(|e| e.to_string())?;
        match self.birthday {
            Some(b) => instance.with_birthday(b).map_err(|e| format!("birthday: {e}")),
            None => Ok(instance),
        }
    }

    pub fn from_instance(instance: &Instance) -> Result<Self, String> {
        let agents = instance
            .agents()
            .iter()
            .map(|a| {
                let v = a
                    .valuation
                    .as_additive()
                    .ok_or_else(|| format!("agent {} has no step-density form", a.name))?;
                let density = v
                    .layer_segments()
                    .iter()
                    .map(|segs| {
                        segs.iter()
                            .map(|s| SegmentDoc {
                                from: RationalText::of(&s.from),
                                to: RationalText::of(&s.to),
                                value: RationalText::of(&s.value),
                            })
                            .collect()
                    })
                    .collect();
                Ok(AgentDoc { name: a.name.clone(), density })
            })
            .collect::<Result<Vec<_>, String>>()?;
        Ok(InstanceDoc { layers: instance.layers(), birthday: Some(instance.birthday()), agents })
    }
}

/// Per bundle, per layer, the list of `[lo, hi]` intervals.
pub type DivisionDoc = Vec<Vec<Vec<[RationalText; 2]>>>;

pub fn division_doc(d: &MultiDivision) -> DivisionDoc {
    d.bundles()
        .iter()
        .map(|b| {
            b.layers()
                .iter()
                .map(|p| p.intervals().iter().map(|iv| [RationalText::of(iv.lo()), RationalText::of(iv.hi())]).collect())
                .collect()
        })
        .collect()
}

pub fn division_from_doc(doc: &DivisionDoc) -> Result<MultiDivision, String> {
    let mut bundles = Vec::with_capacity(doc.len());
    for (j, layers) in doc.iter().enumerate() {
        let mut pieces = Vec::with_capacity(layers.len());
        for (l, ivs) in layers.iter().enumerate() {
            let mut out = Vec::with_capacity(ivs.len());
            for (t, [lo, hi]) in ivs.iter().enumerate() {
                let at = format!("division[{j}][{l}][{t}]");
                let iv = Interval::new(lo.parse(&at)?, hi.parse(&at)?).map_err(|e| format!("{at}: {e}"))?;
                out.push(iv);
            }
            pieces.push(Piece::new(out));
        }
        bundles.push(LayeredPiece::new(pieces));
    }
    MultiDivision::new(bundles).map_err(|e| format!("division: {e}"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionDoc {
    pub complete: bool,
    pub feasible: bool,
    pub contiguous: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub epsilon: RationalText,
    pub passed: bool,
    /// Keyed like `assignments`.
    pub max_envy_per_jstar: BTreeMap<String, RationalText>,
    pub sizes: BTreeMap<String, Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proportional_slack: Option<RationalText>,
    pub partition: PartitionDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_calls: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionDoc {
    pub mode: String,
    /// Group sizes of a one-layer solve.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groups: Option<Vec<usize>>,
    pub division: DivisionDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub star_point: Option<[RationalText; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<Vec<RationalText>>>,
    /// Birthday bundle (1-based) or `"none"` mapped to the 1-based bundle of
    /// every agent.
    pub assignments: BTreeMap<String, Vec<usize>>,
    pub certificate: Certificate,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, serde_json::Value>,
}

pub const NO_BIRTHDAY: &str = "none";
