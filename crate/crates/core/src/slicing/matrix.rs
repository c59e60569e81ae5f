use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::spec::SliceSpec;
use crate::corpus::Instance;
use crate::{Error, Result};

/// Name of the implicit slice every instance belongs to.
pub const BASE_SLICE: &str = "BASE";

/// Instance-by-slice membership. Column 0 is the base slice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceMatrix {
    pub slice_names: Vec<String>,
    pub qids: Vec<String>,
    pub membership: Vec<Vec<bool>>,
}

impl SliceMatrix {
    /// Matrix with only the base slice.
    pub fn base_only(qids: Vec<String>) -> Self {
        let membership = vec![vec![true]; qids.len()];
        SliceMatrix {
            slice_names: vec![BASE_SLICE.into()],
            qids,
            membership,
        }
    }

    pub fn num_slices(&self) -> usize {
        self.slice_names.len()
    }

    pub fn num_instances(&self) -> usize {
        self.qids.len()
    }

    pub fn row(&self, i: usize) -> &[bool] {
        &self.membership[i]
    }

    pub fn column(&self, j: usize) -> Vec<bool> {
        self.membership.iter().map(|r| r[j]).collect()
    }

    /// Checks that rows line up with `instances` by qid.
    pub fn check_alignment(&self, instances: &[Instance]) -> Result<()> {
        if self.qids.len() != instances.len() {
            return Err(Error::Alignment(format!(
                "slice matrix has {} rows but the corpus has {} instances",
                self.qids.len(),
                instances.len()
            )));
        }
        for (row, (qid, inst)) in self.qids.iter().zip(instances).enumerate() {
            if *qid != inst.qid {
                return Err(Error::Alignment(format!(
                    "row {row}: slice matrix qid `{qid}` but corpus qid `{}`",
                    inst.qid
                )));
            }
        }
        Ok(())
    }

    /// `(qid, slice, 0/1)` triples, row-major.
    pub fn to_table(&self) -> Vec<(String, String, u8)> {
        let mut out = Vec::with_capacity(self.qids.len() * self.slice_names.len());
        for (qid, row) in self.qids.iter().zip(&self.membership) {
            for (name, &m) in self.slice_names.iter().zip(row) {
                out.push((qid.clone(), name.clone(), u8::from(m)));
            }
        }
        out
    }
}

pub fn build_slice_matrix(instances: &[Instance], sfs: &[SliceSpec]) -> Result<SliceMatrix> {
    let mut names = BTreeSet::new();
    for sf in sfs {
        if sf.name == BASE_SLICE {
            return Err(Error::Config(format!("slice name `{BASE_SLICE}` is reserved")));
        }
        if !names.insert(sf.name.as_str()) {
            return Err(Error::Config(format!("duplicate slice name `{}`", sf.name)));
        }
    }
    let mut membership = Vec::with_capacity(instances.len());
    for inst in instances {
        let mut row = Vec::with_capacity(sfs.len() + 1);
        row.push(true);
        for sf in sfs {
            row.push(sf.applies(inst)?);
        }
        membership.push(row);
    }
    let mut slice_names = vec![String::from(BASE_SLICE)];
    slice_names.extend(sfs.iter().map(|s| s.name.clone()));
    Ok(SliceMatrix {
        slice_names,
        qids: instances.iter().map(|i| i.qid.clone()).collect(),
        membership,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceStats {
    pub slice_names: Vec<String>,
    pub sizes: Vec<usize>,
    pub fractions: Vec<f64>,
    /// `overlap[i][j] = |slice_i ∩ slice_j|`.
    pub overlap: Vec<Vec<usize>>,
}

pub fn slice_report(m: &SliceMatrix) -> SliceStats {
    let k = m.num_slices();
    let mut overlap = vec![vec![0usize; k]; k];
    for row in &m.membership {
        for i in 0..k {
            if !row[i] {
                continue;
            }
            for j in 0..k {
                if row[j] {
                    overlap[i][j] += 1;
                }
            }
        }
    }
    let sizes: Vec<usize> = (0..k).map(|i| overlap[i][i]).collect();
    let n = m.num_instances();
    SliceStats {
        slice_names: m.slice_names.clone(),
        fractions: sizes
            .iter()
            .map(|&s| if n == 0 { 0.0 } else { s as f64 / n as f64 })
            .collect(),
        sizes,
        overlap,
    }
}
