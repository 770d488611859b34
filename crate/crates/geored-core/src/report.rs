//! Verdict records produced by the checkers.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::symbolic::{Equality, Point, Q};

#[cfg(feature = "serde")]
use serde::Serialize;

/// Pointwise record for one sample.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct SampleEntry {
    pub index: usize,
    pub point: BTreeMap<String, String>,
    pub ranks: BTreeMap<String, usize>,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "BTreeMap::is_empty"))]
    pub bases: BTreeMap<String, Vec<Vec<String>>>,
    pub verdict: bool,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub witness: Option<String>,
}

impl SampleEntry {
    pub fn new(index: usize, p: &Point) -> Self {
        SampleEntry { index, point: point_strings(p), verdict: true, ..Default::default() }
    }

    pub fn rank(&mut self, name: &str, r: usize) {
        self.ranks.insert(name.to_string(), r);
    }

    pub fn basis(&mut self, name: &str, vs: &[Vec<Q>]) {
        self.bases.insert(name.to_string(), vs.iter().map(|v| v.iter().map(|x| x.to_string()).collect()).collect());
    }

    /// Records a failed condition; the first witness is kept.
    pub fn fail(&mut self, witness: String) {
        if self.verdict {
            self.witness = Some(witness);
        }
        self.verdict = false;
    }
}

pub fn point_strings(p: &Point) -> BTreeMap<String, String> {
    p.0.iter().map(|(k, v)| (k.clone(), v.to_string())).collect()
}

/// A symbolic identity checked by [`crate::symbolic::expr_equal`].
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct SymbolicCheck {
    pub name: String,
    pub equal: bool,
    pub probabilistic: bool,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub residual: Option<String>,
}

/// Outcome of a structural or condition check over a sample set.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct StructureReport {
    pub check: String,
    pub verdict: bool,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub witness: Option<String>,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub seed: Option<u64>,
    pub samples: Vec<SampleEntry>,
    pub symbolic: Vec<SymbolicCheck>,
    pub notes: Vec<String>,
}

pub type ConditionReport = StructureReport;

impl StructureReport {
    pub fn new(check: &str) -> Self {
        StructureReport {
            check: check.to_string(),
            verdict: true,
            witness: None,
            seed: None,
            samples: Vec::new(),
            symbolic: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push_sample(&mut self, e: SampleEntry) {
        if !e.verdict && self.verdict {
            self.witness = e.witness.clone().map(|w| alloc::format!("sample {}: {w}", e.index));
        }
        self.verdict &= e.verdict;
        self.samples.push(e);
    }

    pub fn push_symbolic(&mut self, name: &str, eq: Equality, residual: Option<String>) {
        if !eq.equal && self.verdict {
            self.witness = Some(match &residual {
                Some(r) => alloc::format!("{name}: residual {r}"),
                None => alloc::format!("{name} fails"),
            });
        }
        self.verdict &= eq.equal;
        if eq.probabilistic {
            self.notes.push(alloc::format!("{name}: equality decided probabilistically"));
        }
        self.symbolic.push(SymbolicCheck { name: name.to_string(), equal: eq.equal, probabilistic: eq.probabilistic, residual });
    }

    /// Records a failure that is not tied to a sample or identity.
    pub fn fail(&mut self, witness: String) {
        if self.verdict {
            self.witness = Some(witness);
        }
        self.verdict = false;
    }

    pub fn note(&mut self, n: String) {
        self.notes.push(n);
    }

    /// Folds a sub-report in, prefixing its names.
    pub fn absorb(&mut self, other: StructureReport) {
        if !other.verdict && self.verdict {
            self.witness = other.witness.as_ref().map(|w| alloc::format!("{}: {w}", other.check));
        }
        self.verdict &= other.verdict;
        for mut s in other.symbolic {
            s.name = alloc::format!("{}: {}", other.check, s.name);
            self.symbolic.push(s);
        }
        for n in other.notes {
            self.notes.push(alloc::format!("{}: {n}", other.check));
        }
        if self.samples.is_empty() {
            self.samples = other.samples;
        }
    }

    /// Ranks recorded under `name`, one per sample.
    pub fn ranks(&self, name: &str) -> Vec<usize> {
        self.samples.iter().filter_map(|s| s.ranks.get(name).copied()).collect()
    }

    pub fn any_probabilistic(&self) -> bool {
        self.symbolic.iter().any(|s| s.probabilistic)
    }
}

/// Which subalgebra's orbit matches the pointwise kernel of the restricted 2-form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ProbeMatch {
    Both,
    ProjectiveIsotropy,
    Isotropy,
    Neither,
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct ProbeSample {
    pub index: usize,
    pub point: BTreeMap<String, String>,
    pub level_tangent_rank: usize,
    pub kernel_rank: usize,
    pub k_mu_orbit_rank: usize,
    pub k_bracket_orbit_rank: usize,
    pub kernel_equals_k_bracket: bool,
    pub kernel_equals_k_mu: bool,
    pub kernel_strictly_contains_k_mu: bool,
}

/// Comparison of the reduction-group candidates `k_mu` and `k_[mu]`.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct ProbeReport {
    pub matches: ProbeMatch,
    pub k_mu_dim: usize,
    pub k_bracket_dim: usize,
    /// Dimension the contact quotient would have using each candidate.
    pub quotient_dim_k_mu: Option<usize>,
    pub quotient_dim_k_bracket: Option<usize>,
    pub quotient_k_mu_odd: Option<bool>,
    pub quotient_k_bracket_odd: Option<bool>,
    pub samples: Vec<ProbeSample>,
    pub notes: Vec<String>,
}
