//! Structured reports and their aligned-text renderings.

use serde::{Deserialize, Serialize};
use slicerank_core::corpus::{Split, ValidationReport};
use slicerank_core::metrics::{
    CorrelationReport, PairedTTest, SeedSummary, SliceReport,
};
use slicerank_core::slicing::{AutoThreshold, ResolvedSlice, SliceKind, SliceStats};
use slicerank_core::sram::ModelKind;
use slicerank_core::trainer::AuditReport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceStatRow {
    pub name: String,
    pub kind: String,
    pub parameters: String,
    pub size: usize,
    pub fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auto: Option<AutoThreshold>,
    pub empty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceStatsReport {
    pub split: Split,
    pub instances: usize,
    pub slices: Vec<ResolvedSlice>,
    pub rows: Vec<SliceStatRow>,
    pub overlap: Vec<Vec<usize>>,
}

fn parameters(kind: &SliceKind) -> String {
    match kind {
        SliceKind::QuestionLength { t_ql } => format!("t_ql={t_ql}"),
        SliceKind::ContextLength { t_cl } => format!("t_cl={t_cl}"),
        SliceKind::QuestionCategory { category } => format!("category={category}"),
        SliceKind::QuestionType { qtype } => format!("qtype={}", qtype.as_str()),
        SliceKind::TermMatch { t_qdtm } => format!("t_qdtm={t_qdtm}"),
        SliceKind::ResponseSimilarity { t_dls, top_k } => format!("t_dls={t_dls} top_k={top_k}"),
        SliceKind::Random { fraction, seed } => format!("fraction={fraction} seed={seed}"),
    }
}

impl SliceStatsReport {
    pub fn new(split: Split, instances: usize, slices: Vec<ResolvedSlice>, stats: &SliceStats) -> Self {
        let rows = stats
            .slice_names
            .iter()
            .enumerate()
            .map(|(j, name)| {
                let resolved = j.checked_sub(1).map(|i| &slices[i]);
                SliceStatRow {
                    name: name.clone(),
                    kind: resolved.map_or("BASE".into(), |r| format!("{:?}", r.spec.kind.tag())),
                    parameters: resolved.map_or(String::new(), |r| parameters(&r.spec.kind)),
                    size: stats.sizes[j],
                    fraction: stats.fractions[j],
                    auto: resolved.and_then(|r| r.auto.clone()),
                    empty: stats.sizes[j] == 0,
                }
            })
            .collect();
        SliceStatsReport {
            split,
            instances,
            slices,
            rows,
            overlap: stats.overlap.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedEval {
    pub seed: u64,
    pub test_map: f64,
    pub baseline_test_map: f64,
    pub slice_report: SliceReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: ModelKind,
    pub baseline: ModelKind,
    pub seeds: Vec<u64>,
    pub test_map: SeedSummary,
    pub baseline_test_map: SeedSummary,
    /// `(mean model MAP - mean baseline MAP) / mean baseline MAP`.
    pub relative_improvement: f64,
    /// Absent with a single seed.
    pub t_test: Option<PairedTTest>,
    /// Per-slice rows averaged over seeds.
    pub slice_report: SliceReport,
    pub per_seed: Vec<SeedEval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: ModelKind,
    pub test_map: SeedSummary,
    pub relative_improvement: f64,
    pub t_test: Option<PairedTTest>,
    pub avg_delta_map: Option<f64>,
    pub max_delta_map: Option<f64>,
    /// `(slice, mean membership accuracy over seeds)`.
    pub membership_accuracy: Vec<(String, Option<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub seeds: Vec<u64>,
    pub baseline_test_map: SeedSummary,
    pub models: Vec<ModelSummary>,
    /// sram over sram_random, relative; reported only.
    pub sram_vs_sram_random: Option<f64>,
}

impl ModelSummary {
    pub fn from_eval(r: &EvalReport) -> Self {
        ModelSummary {
            model: r.model,
            test_map: r.test_map.clone(),
            relative_improvement: r.relative_improvement,
            t_test: r.t_test,
            avg_delta_map: r.slice_report.avg_delta_map,
            max_delta_map: r.slice_report.max_delta_map,
            membership_accuracy: r
                .slice_report
                .slices
                .iter()
                .map(|s| (s.name.clone(), s.membership_accuracy))
                .collect(),
        }
    }
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or("-".into(), |x| format!("{x:.prec$}"))
}

fn star(t: Option<&PairedTTest>) -> &'static str {
    if t.is_some_and(|t| t.significant_at_95) {
        "*"
    } else {
        ""
    }
}

fn signed(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:+.4}"))
}

/// Left-aligns the first column and right-aligns the rest.
fn table(header: &[&str], rows: &[Vec<String>]) -> Vec<String> {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
            if i == 0 {
                s.push_str(&format!("{c:<w$}"));
            } else {
                s.push_str(&format!("  {c:>w$}"));
            }
        }
        s.trim_end().to_string()
    };
    let mut out = vec![line(header.to_vec())];
    out.push(widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  ").trim_end().to_string());
    out.extend(rows.iter().map(|r| line(r.iter().map(String::as_str).collect())));
    out
}

pub fn render_validation(r: &ValidationReport) -> Vec<String> {
    let mut out = vec![
        format!("split {}: {} instances, {} candidates, {} relevant ({:.3})",
            r.split.as_str(), r.instances, r.candidates, r.relevant, r.relevant_rate),
    ];
    let stats = [
        ("candidates/instance", &r.candidates_per_instance),
        ("relevant/instance", &r.relevant_per_instance),
        ("question length", &r.question_length),
        ("context turns", &r.context_turns),
        ("response length", &r.response_length),
    ];
    let rows: Vec<Vec<String>> = stats
        .iter()
        .map(|(n, s)| {
            vec![n.to_string(), s.min.to_string(), format!("{:.2}", s.median), format!("{:.2}", s.mean), s.max.to_string()]
        })
        .collect();
    out.extend(table(&["field", "min", "median", "mean", "max"], &rows));
    for (c, n) in &r.categories {
        out.push(format!("category {c}: {n}"));
    }
    if r.uncategorized > 0 {
        out.push(format!("uncategorized: {}", r.uncategorized));
    }
    out
}

pub fn render_slice_stats(r: &SliceStatsReport) -> Vec<String> {
    let rows: Vec<Vec<String>> = r
        .rows
        .iter()
        .map(|row| {
            vec![
                row.name.clone(),
                row.kind.clone(),
                row.parameters.clone(),
                row.size.to_string(),
                format!("{:.3}", row.fraction),
                row.auto.as_ref().map_or("-".into(), |a| {
                    format!("{:.2}{}", a.target_fraction, if a.degenerate { " (degenerate)" } else { "" })
                }),
                if row.empty { "WARNING: empty slice".into() } else { String::new() },
            ]
        })
        .collect();
    let mut out = vec![format!("split {}: {} instances", r.split.as_str(), r.instances)];
    out.extend(table(&["slice", "kind", "parameters", "size", "fraction", "auto target", ""], &rows));
    out
}

pub fn render_eval(r: &EvalReport) -> Vec<String> {
    let star = star(r.t_test.as_ref());
    let rows = vec![
        vec![
            r.baseline.as_str().to_string(),
            format!("{:.4} ({:.4})", r.baseline_test_map.mean, r.baseline_test_map.std),
            "-".into(),
            "-".into(),
        ],
        vec![
            r.model.as_str().to_string(),
            format!("{:.4} ({:.4}){star}", r.test_map.mean, r.test_map.std),
            signed(r.slice_report.avg_delta_map),
            signed(r.slice_report.max_delta_map),
        ],
    ];
    let mut out = table(&["model", "MAP (std)", "slice dMAP Avg.", "Max."], &rows);
    let test = match &r.t_test {
        Some(tt) => format!(
            "paired t-test over {} seeds: {}, p = {:.4}{}",
            r.seeds.len(),
            tt.t.map_or("degenerate".into(), |t| format!("t = {t:.3}")),
            tt.p_value,
            if tt.significant_at_95 { " (* significant at 95%)" } else { " (not significant at 95%)" }
        ),
        None => "single seed, no t-test".into(),
    };
    out.push(format!("relative improvement {:+.2}%; {test}", 100.0 * r.relative_improvement));
    out.push(String::new());
    let rows: Vec<Vec<String>> = r
        .slice_report
        .slices
        .iter()
        .map(|s| {
            vec![
                s.name.clone(),
                s.size.to_string(),
                opt(s.map_model, 4),
                opt(s.map_baseline, 4),
                signed(s.delta_map),
                opt(s.membership_accuracy, 3),
            ]
        })
        .collect();
    out.extend(table(&["slice", "size", "MAP", "baseline MAP", "dMAP", "membership acc."], &rows));
    out
}

pub fn render_correlation(r: &CorrelationReport) -> Vec<String> {
    let rows: Vec<Vec<String>> = r
        .rows
        .iter()
        .map(|row| {
            vec![
                row.property.as_str().to_string(),
                row.n.to_string(),
                opt(row.r, 4),
                opt(row.p_value, 4),
                row.note.clone().unwrap_or_default(),
            ]
        })
        .collect();
    let mut out = vec![format!("correlation with slice dMAP over {} slices", r.slices.len())];
    out.extend(table(&["property", "n", "r", "p", ""], &rows));
    out
}

pub fn render_audit(r: &AuditReport) -> Vec<String> {
    let rows: Vec<Vec<String>> = r
        .per_tensor
        .iter()
        .map(|(n, e)| vec![n.clone(), format!("{e:.3e}")])
        .collect();
    let mut out = vec![format!(
        "{}: {} parameters, worst relative error {:.3e} ({})",
        r.model.as_str(),
        r.num_params,
        r.worst_relative_error,
        r.worst_tensor
    )];
    out.extend(table(&["tensor", "max rel. error"], &rows));
    out
}

pub fn render_pipeline(s: &PipelineSummary) -> Vec<String> {
    let mut rows = vec![vec![
        "baseline".to_string(),
        format!("{:.4} ({:.4})", s.baseline_test_map.mean, s.baseline_test_map.std),
        "-".into(),
        "-".into(),
        "-".into(),
        "-".into(),
    ]];
    for m in &s.models {
        rows.push(vec![
            m.model.as_str().to_string(),
            format!("{:.4} ({:.4}){}", m.test_map.mean, m.test_map.std, star(m.t_test.as_ref())),
            format!("{:+.2}%", 100.0 * m.relative_improvement),
            opt(m.t_test.map(|t| t.p_value), 4),
            signed(m.avg_delta_map),
            signed(m.max_delta_map),
        ]);
    }
    let mut out = table(&["model", "MAP (std)", "vs baseline", "p", "slice dMAP Avg.", "Max."], &rows);
    if let Some(d) = s.sram_vs_sram_random {
        out.push(format!("sram vs sram_random: {:+.2}%", 100.0 * d));
    }
    out
}
