//! Serializable pipeline reports. Field order and BTreeMap keys make the
//! JSON output byte-deterministic; timing is attached only on request so the
//! default output of identical inputs is identical bytes.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::admissibility::AdmissibilityReport;
use crate::chain::{FiniteChainComplex, GeneratorOrigin};
use crate::homology::{HomologyGroups, MorseInequalityReport};
use crate::morse_function::MorseFunctionReport;
use crate::rays::RayDescription;

#[derive(Debug, Clone, Serialize)]
pub struct PosetSummary {
    pub kind: String,
    pub cells: usize,
    pub pattern_cells: usize,
    pub prefix_cells: usize,
    pub glue_covers: usize,
    pub max_degree: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatchingSummary {
    pub explicit_pairs: usize,
    pub selected_arcs: usize,
    pub tail_from: u64,
    pub acyclic: bool,
    pub cycle_witness: Option<Vec<String>>,
    pub rayless: Option<bool>,
    pub ray_witness: Option<RayDescription>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalSummary {
    /// degree -> cell names in the explicit region
    pub explicit: BTreeMap<usize, Vec<String>>,
    /// pattern cells critical in every row from the given one
    pub tail_critical: Vec<(String, u64)>,
    pub counts: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiraySummary {
    pub reason: String,
    pub ray: RayDescription,
    pub bypass: Option<Vec<String>>,
    pub recurrence_period: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RaysSummary {
    pub classes: Vec<RayDescription>,
    pub multiray: Option<MultiraySummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReversalEntry {
    pub class: RayDescription,
    pub new_critical: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeneratorSummary {
    pub cell: String,
    pub origin: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComplexSummary {
    /// degree -> generators
    pub generators: BTreeMap<usize, Vec<GeneratorSummary>>,
    /// degree d -> sparse triples (row, col, coefficient) of d_d: C_d -> C_{d-1}
    pub boundaries: BTreeMap<usize, Vec<(usize, usize, String)>>,
}

impl ComplexSummary {
    pub fn from_complex(c: &FiniteChainComplex) -> Self {
        let mut generators = BTreeMap::new();
        for (d, gens) in c.generators.iter().enumerate() {
            generators.insert(
                d,
                gens.iter()
                    .map(|g| GeneratorSummary {
                        cell: g.name.clone(),
                        origin: match g.origin {
                            GeneratorOrigin::CriticalCell => "critical-cell".to_string(),
                            GeneratorOrigin::RayClass(i) => format!("ray-class-{i}"),
                        },
                    })
                    .collect(),
            );
        }
        let mut boundaries = BTreeMap::new();
        for (k, m) in c.boundaries.iter().enumerate() {
            boundaries.insert(
                k + 1,
                m.triples()
                    .into_iter()
                    .map(|(i, j, v)| (i, j, v.to_string()))
                    .collect(),
            );
        }
        ComplexSummary {
            generators,
            boundaries,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HomologySummary {
    pub groups: HomologyGroups,
    pub display: Vec<String>,
}

impl HomologySummary {
    pub fn new(groups: HomologyGroups) -> Self {
        let display = groups.to_string().lines().map(|l| l.to_string()).collect();
        HomologySummary { groups, display }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MorseFunctionSummary {
    /// (cell, value, stage, stratum, raw stage-relative value)
    pub values: Vec<(String, String, usize, usize, String)>,
    pub verification: MorseFunctionReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub poset: PosetSummary,
    pub matching: MatchingSummary,
    pub critical: CriticalSummary,
    pub admissibility: Option<AdmissibilityReport>,
    pub rays: Option<RaysSummary>,
    pub reversal: Vec<ReversalEntry>,
    pub reversed_poset: Option<String>,
    pub reversed_matching: Option<String>,
    pub morse_complex: Option<ComplexSummary>,
    pub homology: Option<HomologySummary>,
    pub inequalities: Option<MorseInequalityReport>,
    pub morse_function: Option<MorseFunctionSummary>,
    pub timing_ms: Option<u128>,
    pub exit: String,
}

impl PipelineReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
