use alloc::format;
use alloc::string::String;

use serde::{Deserialize, Serialize};

use super::functions::*;
use super::threshold::{auto_threshold, AutoThreshold, ThresholdKind};
use crate::corpus::Instance;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuestionType {
    Who,
    What,
    Where,
    When,
    Why,
    How,
}

impl QuestionType {
    pub const ALL: [QuestionType; 6] = [
        QuestionType::Who,
        QuestionType::What,
        QuestionType::Where,
        QuestionType::When,
        QuestionType::Why,
        QuestionType::How,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QuestionType::Who => "who",
            QuestionType::What => "what",
            QuestionType::Where => "where",
            QuestionType::When => "when",
            QuestionType::Why => "why",
            QuestionType::How => "how",
        }
    }

    pub fn from_token(tok: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|q| q.as_str() == tok)
    }
}

/// Kind tag as written in slice configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SliceTag {
    QL,
    CL,
    QC,
    W5H1,
    QDTM,
    DLS,
    RANDOM,
}

/// A slicing function together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum SliceKind {
    /// More than `t_ql` question tokens.
    QuestionLength { t_ql: u32 },
    /// More than `t_cl` context turns.
    ContextLength { t_cl: u32 },
    QuestionCategory { category: String },
    QuestionType { qtype: QuestionType },
    /// Mean question/relevant-response term overlap below `t_qdtm`.
    TermMatch { t_qdtm: u32 },
    /// Mean top-k TF-IDF similarity to the relevant response above `t_dls`.
    ResponseSimilarity { t_dls: f64, top_k: usize },
    /// Hash-based sample of `fraction` of the instances.
    Random { fraction: f64, seed: u64 },
}

impl SliceKind {
    pub fn tag(&self) -> SliceTag {
        match self {
            SliceKind::QuestionLength { .. } => SliceTag::QL,
            SliceKind::ContextLength { .. } => SliceTag::CL,
            SliceKind::QuestionCategory { .. } => SliceTag::QC,
            SliceKind::QuestionType { .. } => SliceTag::W5H1,
            SliceKind::TermMatch { .. } => SliceTag::QDTM,
            SliceKind::ResponseSimilarity { .. } => SliceTag::DLS,
            SliceKind::Random { .. } => SliceTag::RANDOM,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SliceConfigEntry", into = "SliceConfigEntry")]
pub struct SliceSpec {
    pub name: String,
    pub kind: SliceKind,
}

impl SliceSpec {
    pub fn new(name: impl Into<String>, kind: SliceKind) -> Result<Self> {
        let spec = SliceSpec {
            name: name.into(),
            kind,
        };
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("slice `{}`: {m}", self.name)));
        if self.name.trim().is_empty() {
            return Err(Error::Config("slice name is empty".into()));
        }
        match &self.kind {
            SliceKind::ResponseSimilarity { t_dls, top_k } => {
                if !(0.0..=1.0).contains(t_dls) {
                    return bad(format!("t_dls must lie in [0, 1], got {t_dls}"));
                }
                if *top_k == 0 {
                    return bad("top_k must be at least 1".into());
                }
            }
            SliceKind::Random { fraction, .. } => {
                if !(*fraction > 0.0 && *fraction <= 1.0) {
                    return bad(format!("fraction must lie in (0, 1], got {fraction}"));
                }
            }
            SliceKind::QuestionCategory { category } if category.is_empty() => {
                return bad("category is empty".into());
            }
            _ => {}
        }
        Ok(())
    }

    /// Applies the slicing function to one instance.
    pub fn applies(&self, inst: &Instance) -> Result<bool> {
        let wrap = |e: Error| match e {
            Error::Input(message) => Error::SlicePrecondition {
                slice: self.name.clone(),
                qid: inst.qid.clone(),
                message,
            },
            other => other,
        };
        Ok(match &self.kind {
            SliceKind::QuestionLength { t_ql } => sf_question_length(inst, *t_ql),
            SliceKind::ContextLength { t_cl } => sf_context_length(inst, *t_cl),
            SliceKind::QuestionCategory { category } => sf_question_category(inst, category),
            SliceKind::QuestionType { qtype } => sf_question_type(inst, *qtype),
            SliceKind::TermMatch { t_qdtm } => sf_qdtm(inst, *t_qdtm).map_err(wrap)?,
            SliceKind::ResponseSimilarity { t_dls, top_k } => {
                sf_dls(inst, *t_dls, *top_k).map_err(wrap)?
            }
            SliceKind::Random { fraction, seed } => sf_random(inst, *fraction, *seed),
        })
    }
}

/// Flat, file-level form of a slice: `name`, `kind` and the parameters for
/// that kind. A literal threshold may be replaced by `auto_fraction`, which is
/// resolved against a training split.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceConfigEntry {
    pub name: String,
    pub kind: Option<SliceTag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_ql: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_cl: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qtype: Option<QuestionType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_qdtm: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_dls: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auto_fraction: Option<f64>,
}

/// A configuration entry after threshold resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedSlice {
    pub spec: SliceSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auto: Option<AutoThreshold>,
}

impl SliceConfigEntry {
    fn present(&self) -> [(&'static str, bool); 9] {
        [
            ("t_ql", self.t_ql.is_some()),
            ("t_cl", self.t_cl.is_some()),
            ("category", self.category.is_some()),
            ("qtype", self.qtype.is_some()),
            ("t_qdtm", self.t_qdtm.is_some()),
            ("t_dls", self.t_dls.is_some()),
            ("top_k", self.top_k.is_some()),
            ("fraction", self.fraction.is_some()),
            ("seed", self.seed.is_some()),
        ]
    }

    fn tag(&self) -> Result<SliceTag> {
        self.kind
            .ok_or_else(|| Error::Config(format!("slice `{}`: missing field `kind`", self.name)))
    }

    /// Checks that exactly the parameters belonging to `kind` are present.
    /// `threshold` names the field that `auto_fraction` may stand in for.
    fn check_fields(&self) -> Result<()> {
        let tag = self.tag()?;
        let (required, threshold): (&[&str], Option<&str>) = match tag {
            SliceTag::QL => (&["t_ql"], Some("t_ql")),
            SliceTag::CL => (&["t_cl"], Some("t_cl")),
            SliceTag::QC => (&["category"], None),
            SliceTag::W5H1 => (&["qtype"], None),
            SliceTag::QDTM => (&["t_qdtm"], Some("t_qdtm")),
            SliceTag::DLS => (&["t_dls", "top_k"], Some("t_dls")),
            SliceTag::RANDOM => (&["fraction", "seed"], None),
        };
        for (field, present) in self.present() {
            let expected = required.contains(&field);
            let auto_replaces = self.auto_fraction.is_some() && threshold == Some(field);
            if present && !expected {
                return Err(Error::Config(format!(
                    "slice `{}`: field `{field}` does not apply to kind {tag:?}",
                    self.name
                )));
            }
            if present && auto_replaces {
                return Err(Error::Config(format!(
                    "slice `{}`: give either `{field}` or `auto_fraction`, not both",
                    self.name
                )));
            }
            if !present && expected && !auto_replaces {
                return Err(Error::Config(format!(
                    "slice `{}`: missing field `{field}` for kind {tag:?}",
                    self.name
                )));
            }
        }
        if self.auto_fraction.is_some() && threshold.is_none() {
            return Err(Error::Config(format!(
                "slice `{}`: kind {tag:?} has no threshold for `auto_fraction`",
                self.name
            )));
        }
        if let Some(f) = self.auto_fraction {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::Config(format!(
                    "slice `{}`: auto_fraction must lie in (0, 1), got {f}",
                    self.name
                )));
            }
        }
        Ok(())
    }

    pub fn needs_resolution(&self) -> bool {
        self.auto_fraction.is_some()
    }

    /// Resolves `auto_fraction` against `train` and builds the spec.
    pub fn resolve(&self, train: &[Instance]) -> Result<ResolvedSlice> {
        self.check_fields()?;
        let Some(target) = self.auto_fraction else {
            return Ok(ResolvedSlice {
                spec: SliceSpec::try_from(self.clone())?,
                auto: None,
            });
        };
        let kind = match self.tag()? {
            SliceTag::QL => ThresholdKind::QuestionLength,
            SliceTag::CL => ThresholdKind::ContextLength,
            SliceTag::QDTM => ThresholdKind::TermMatch,
            SliceTag::DLS => ThresholdKind::ResponseSimilarity {
                top_k: self.top_k.unwrap_or(0),
            },
            _ => unreachable!("checked by check_fields"),
        };
        let auto = auto_threshold(train, kind, target)?;
        let mut entry = self.clone();
        entry.auto_fraction = None;
        match kind {
            ThresholdKind::QuestionLength => entry.t_ql = Some(auto.value as u32),
            ThresholdKind::ContextLength => entry.t_cl = Some(auto.value as u32),
            ThresholdKind::TermMatch => entry.t_qdtm = Some(auto.value as u32),
            ThresholdKind::ResponseSimilarity { .. } => entry.t_dls = Some(auto.value),
        }
        Ok(ResolvedSlice {
            spec: SliceSpec::try_from(entry)?,
            auto: Some(auto),
        })
    }
}

impl TryFrom<SliceConfigEntry> for SliceSpec {
    type Error = Error;

    fn try_from(e: SliceConfigEntry) -> Result<Self> {
        if e.auto_fraction.is_some() {
            return Err(Error::Config(format!(
                "slice `{}`: `auto_fraction` must be resolved against a training split first",
                e.name
            )));
        }
        e.check_fields()?;
        let kind = match e.tag()? {
            SliceTag::QL => SliceKind::QuestionLength { t_ql: e.t_ql.unwrap() },
            SliceTag::CL => SliceKind::ContextLength { t_cl: e.t_cl.unwrap() },
            SliceTag::QC => SliceKind::QuestionCategory {
                category: e.category.clone().unwrap(),
            },
            SliceTag::W5H1 => SliceKind::QuestionType {
                qtype: e.qtype.unwrap(),
            },
            SliceTag::QDTM => SliceKind::TermMatch {
                t_qdtm: e.t_qdtm.unwrap(),
            },
            SliceTag::DLS => SliceKind::ResponseSimilarity {
                t_dls: e.t_dls.unwrap(),
                top_k: e.top_k.unwrap(),
            },
            SliceTag::RANDOM => SliceKind::Random {
                fraction: e.fraction.unwrap(),
                seed: e.seed.unwrap(),
            },
        };
        SliceSpec::new(e.name, kind)
    }
}

impl From<SliceSpec> for SliceConfigEntry {
    fn from(s: SliceSpec) -> Self {
        let mut e = SliceConfigEntry {
            name: s.name,
            kind: Some(s.kind.tag()),
            ..Default::default()
        };
        match s.kind {
            SliceKind::QuestionLength { t_ql } => e.t_ql = Some(t_ql),
            SliceKind::ContextLength { t_cl } => e.t_cl = Some(t_cl),
            SliceKind::QuestionCategory { category } => e.category = Some(category),
            SliceKind::QuestionType { qtype } => e.qtype = Some(qtype),
            SliceKind::TermMatch { t_qdtm } => e.t_qdtm = Some(t_qdtm),
            SliceKind::ResponseSimilarity { t_dls, top_k } => {
                e.t_dls = Some(t_dls);
                e.top_k = Some(top_k);
            }
            SliceKind::Random { fraction, seed } => {
                e.fraction = Some(fraction);
                e.seed = Some(seed);
            }
        }
        e
    }
}
