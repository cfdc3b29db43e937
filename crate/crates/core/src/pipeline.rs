//! Orchestration of the validation, ray analysis, reversal, Morse complex,
//! homology, and synthesis stages shared by the CLI and the Python bindings.
//!
//! Ray analysis runs before the admissibility checks: a graded poset that is
//! not cellular can still carry a matching whose multiray must be reported,
//! and the algebraic stages are the only ones that need incidence signs.

use std::collections::HashMap;
use std::time::Instant;

use crate::admissibility::is_h_admissible;
use crate::chain::{morse_complex, FiniteChainComplex, Generator, GeneratorOrigin};
use crate::error::{Error, Result};
use crate::homology::{morse_inequalities, Count};
use crate::incidence::compute_incidence;
use crate::io::{matching_to_string, parse_matching, parse_poset, poset_to_string};
use crate::matching::{
    critical_cells, default_budget, is_acyclic, is_rayless, AcyclicityVerdict, CriticalReport,
    MorseMatching, RaylessVerdict,
};
use crate::morse_function::{serialized_values, synthesize_morse_function, verify_morse_function};
use crate::poset::{ElementRef, Poset};
use crate::rays::{enumerate_rays, make_rayless, pm_cell_counts, RayEnumeration};
use crate::report::*;
use crate::simplicial::order_complex;

#[derive(Debug, Clone, Copy)]
pub struct PipelineOptions {
    /// extra pattern rows materialized beyond the sound minimum
    pub window: u64,
    pub budget: Option<usize>,
    /// reverse rays before synthesizing a Morse function
    pub reverse_first: bool,
    pub with_timing: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            window: 3,
            budget: None,
            reverse_first: false,
            with_timing: false,
        }
    }
}

fn poset_summary(poset: &Poset) -> PosetSummary {
    match poset {
        Poset::Finite(p) => PosetSummary {
            kind: "finite".into(),
            cells: p.len(),
            pattern_cells: 0,
            prefix_cells: 0,
            glue_covers: 0,
            max_degree: p.max_degree(),
        },
        Poset::Periodic(pp) => PosetSummary {
            kind: "periodic".into(),
            cells: pp.prefix.len(),
            pattern_cells: pp.pattern.len(),
            prefix_cells: pp.prefix.len(),
            glue_covers: pp.glue.len(),
            max_degree: pp.pattern.max_degree().max(pp.prefix.max_degree()),
        },
    }
}

fn critical_summary(poset: &Poset, crit: &CriticalReport) -> CriticalSummary {
    let explicit = crit
        .explicit
        .iter()
        .map(|(&d, cells)| {
            (
                d,
                cells
                    .iter()
                    .map(|&c| poset.display_ref(c))
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    let tail_critical = match poset {
        Poset::Periodic(pp) => crit
            .tail_critical
            .iter()
            .map(|&(q, row)| (pp.pattern.name(q).to_string(), row))
            .collect(),
        Poset::Finite(_) => Vec::new(),
    };
    let counts = crit
        .counts()
        .iter()
        .map(|c| match c {
            Count::Finite(n) => n.to_string(),
            Count::Infinite => "infinite".to_string(),
        })
        .collect();
    CriticalSummary {
        explicit,
        tail_critical,
        counts,
    }
}

fn matching_summary(
    poset: &Poset,
    matching: &MorseMatching,
    check_rays: bool,
) -> Result<(MatchingSummary, bool, bool)> {
    let acyclic_verdict = is_acyclic(poset, matching)?;
    let (acyclic, cycle_witness) = match &acyclic_verdict {
        AcyclicityVerdict::Acyclic => (true, None),
        AcyclicityVerdict::Cyclic { witness } => (
            false,
            Some(witness.iter().map(|&r| poset.display_ref(r)).collect()),
        ),
    };
    let (rayless, ray_witness) = if acyclic && check_rays {
        match is_rayless(poset, matching)? {
            RaylessVerdict::Rayless => (Some(true), None),
            RaylessVerdict::HasRay { witness } => {
                let ray = witness.into_ray();
                (Some(false), Some(ray.describe(poset, matching)))
            }
        }
    } else {
        (None, None)
    };
    let is_rayless_flag = rayless == Some(true);
    Ok((
        MatchingSummary {
            explicit_pairs: matching.pairs().len(),
            selected_arcs: matching.selected_arcs().len(),
            tail_from: matching.tail_from(),
            acyclic,
            cycle_witness,
            rayless,
            ray_witness,
        },
        acyclic,
        is_rayless_flag,
    ))
}

/// Gradedness, matching validity, acyclicity, and raylessness verdicts.
pub fn run_validate(
    poset_text: &str,
    matching_text: &str,
    opts: PipelineOptions,
) -> Result<(PipelineReport, i32)> {
    let start = Instant::now();
    let poset = parse_poset(poset_text)?;
    let matching = parse_matching(matching_text, &poset)?;
    let (summary, acyclic, _) = matching_summary(&poset, &matching, true)?;
    let crit = critical_cells(&poset, &matching);
    let report = PipelineReport {
        poset: poset_summary(&poset),
        matching: summary,
        critical: critical_summary(&poset, &crit),
        admissibility: None,
        rays: None,
        reversal: Vec::new(),
        reversed_poset: None,
        reversed_matching: None,
        morse_complex: None,
        homology: None,
        inequalities: None,
        morse_function: None,
        timing_ms: opts.with_timing.then(|| start.elapsed().as_millis()),
        exit: if acyclic {
            "ok".into()
        } else {
            "not-acyclic".into()
        },
    };
    Ok((report, 0))
}

/// Full pipeline: ray classes, reversal, Morse complex, homology, and the
/// inequalities. A multiray stops the pipeline with exit code 3.
pub fn run_analyze(
    poset_text: &str,
    matching_text: &str,
    opts: PipelineOptions,
) -> Result<(PipelineReport, i32)> {
    run_analyze_impl(poset_text, matching_text, opts, false)
}

/// Analyze plus Morse function synthesis on the rayless result.
pub fn run_synth(
    poset_text: &str,
    matching_text: &str,
    opts: PipelineOptions,
) -> Result<(PipelineReport, i32)> {
    run_analyze_impl(poset_text, matching_text, opts, true)
}

fn run_analyze_impl(
    poset_text: &str,
    matching_text: &str,
    opts: PipelineOptions,
    synth: bool,
) -> Result<(PipelineReport, i32)> {
    let start = Instant::now();
    let poset = parse_poset(poset_text)?;
    let matching = parse_matching(matching_text, &poset)?;
    let budget = opts
        .budget
        .unwrap_or_else(|| default_budget(&poset, opts.window + 8));
    let (summary, acyclic, _) = matching_summary(&poset, &matching, true)?;
    let crit_before = critical_cells(&poset, &matching);
    let mut report = PipelineReport {
        poset: poset_summary(&poset),
        matching: summary,
        critical: critical_summary(&poset, &crit_before),
        admissibility: None,
        rays: None,
        reversal: Vec::new(),
        reversed_poset: None,
        reversed_matching: None,
        morse_complex: None,
        homology: None,
        inequalities: None,
        morse_function: None,
        timing_ms: None,
        exit: "ok".into(),
    };
    let finish = |mut report: PipelineReport, exit: &str, code: i32| {
        report.exit = exit.into();
        report.timing_ms = opts.with_timing.then(|| start.elapsed().as_millis());
        Ok((report, code))
    };
    if !acyclic {
        return finish(report, "not-acyclic", 2);
    }
    // ray analysis
    let enumeration = enumerate_rays(&poset, &matching)?;
    let classes = match enumeration {
        RayEnumeration::Multiray(ev) => {
            report.rays = Some(RaysSummary {
                classes: Vec::new(),
                multiray: Some(MultiraySummary {
                    reason: format!("uncountably many ray classes (2^aleph_0): {}", ev.reason),
                    ray: ev.ray.describe(&poset, &matching),
                    bypass: ev
                        .bypass
                        .map(|b| b.path.iter().map(|&r| poset.display_ref(r)).collect()),
                    recurrence_period: ev.recurrence_period,
                }),
            });
            return finish(report, "multiray", 3);
        }
        RayEnumeration::Classes(set) => set,
    };
    report.rays = Some(RaysSummary {
        classes: classes
            .classes
            .iter()
            .map(|r| r.describe(&poset, &matching))
            .collect(),
        multiray: None,
    });
    // the inequality inputs come from the matching before reversal
    let (m_counts, r_counts, _) = pm_cell_counts(&poset, &matching)?;
    // reversal
    let (final_poset, final_matching, log) = make_rayless(&poset, &matching)?;
    report.reversal = log
        .iter()
        .map(|(desc, cell)| ReversalEntry {
            class: desc.clone(),
            new_critical: final_poset.display_ref(*cell),
        })
        .collect();
    if !log.is_empty() {
        report.reversed_poset = Some(poset_to_string(&final_poset));
        report.reversed_matching = Some(matching_to_string(&final_poset, &final_matching));
    }
    // admissibility and incidence on the final presentation
    let admissibility = is_h_admissible(&final_poset, opts.window);
    let admissible = admissibility.passed();
    report.admissibility = Some(admissibility);
    if !admissible {
        return finish(report, "not-h-admissible", 2);
    }
    let incidence = compute_incidence(&final_poset)?;
    let provenance: HashMap<ElementRef, usize> = log
        .iter()
        .enumerate()
        .map(|(i, (_, cell))| (*cell, i))
        .collect();
    let complex = morse_complex(
        &final_poset,
        &final_matching,
        &incidence,
        &provenance,
        budget,
    )?;
    report.morse_complex = Some(ComplexSummary::from_complex(&complex));
    let homology = complex.homology()?;
    let m: Vec<Count> = m_counts.iter().map(|&n| Count::Finite(n)).collect();
    let r: Vec<Count> = r_counts.iter().map(|&n| Count::Finite(n)).collect();
    report.inequalities = Some(morse_inequalities(&m, &r, &homology));
    report.homology = Some(HomologySummary::new(homology));
    if synth {
        let window_rows = synth_window(&final_poset, &final_matching, opts.window);
        let f = synthesize_morse_function(&final_poset, &final_matching, window_rows, budget)?;
        let verification = verify_morse_function(&final_poset, &final_matching, &f)?;
        let passed = verification.passed;
        report.morse_function = Some(MorseFunctionSummary {
            values: serialized_values(&final_poset, &f),
            verification,
        });
        if !passed {
            return finish(report, "morse-function-failed", 2);
        }
    }
    finish(report, "ok", 0)
}

/// Synthesis window: the requested rows past the uniform region.
fn synth_window(poset: &Poset, matching: &MorseMatching, window: u64) -> u64 {
    match poset {
        Poset::Finite(_) => 0,
        Poset::Periodic(_) => matching.uniform_from() + window.max(3),
    }
}

/// Morse function synthesis as its own entry point; refuses non-rayless
/// matchings unless `reverse_first` is set.
pub fn run_synth_only(
    poset_text: &str,
    matching_text: &str,
    opts: PipelineOptions,
) -> Result<(PipelineReport, i32)> {
    let poset = parse_poset(poset_text)?;
    let matching = parse_matching(matching_text, &poset)?;
    match is_rayless(&poset, &matching)? {
        RaylessVerdict::Rayless => {}
        RaylessVerdict::HasRay { .. } if !opts.reverse_first => {
            return Err(Error::NotRayless(
                "matching has a decreasing ray; pass --reverse-first to reverse it".into(),
            ));
        }
        _ => {}
    }
    run_synth(poset_text, matching_text, opts)
}

/// Homology of a poset's cellular chain complex (finite posets), or of a
/// truncated window's order complex (periodic posets).
pub fn run_homology(
    poset_text: &str,
    truncate: Option<u64>,
    opts: PipelineOptions,
) -> Result<(HomologySummary, HomologySummary)> {
    let poset = parse_poset(poset_text)?;
    match &poset {
        Poset::Finite(p) => {
            let admissibility = is_h_admissible(&poset, opts.window);
            if !admissibility.passed() {
                return Err(Error::NotGraded(
                    "poset is not h-admissible; its cellular chain complex is undefined".into(),
                ));
            }
            let incidence = compute_incidence(&poset)?;
            let complex = full_cellular_complex(&poset, &incidence)?;
            let cellular = complex.homology()?;
            let simplicial = crate::homology::simplicial_homology(&order_complex(p));
            Ok((
                HomologySummary::new(cellular),
                HomologySummary::new(simplicial),
            ))
        }
        Poset::Periodic(pp) => {
            let rows = truncate.unwrap_or(50);
            let window = pp.materialize(rows);
            let h = crate::homology::simplicial_homology(&order_complex(&window.poset));
            Ok((HomologySummary::new(h.clone()), HomologySummary::new(h)))
        }
    }
}

/// The cellular chain complex on every cell of a finite poset.
pub fn full_cellular_complex(
    poset: &Poset,
    incidence: &crate::incidence::IncidenceMap,
) -> Result<FiniteChainComplex> {
    let Poset::Finite(p) = poset else {
        return Err(Error::SideConditionViolated(
            "full cellular complex needs a finite poset".into(),
        ));
    };
    let max_deg = p.max_degree();
    let mut generators: Vec<Vec<Generator>> = vec![Vec::new(); max_deg + 1];
    for i in 0..p.len() as u32 {
        generators[p.degree(i)].push(Generator {
            cell: ElementRef::Finite(i),
            name: p.name(i).to_string(),
            origin: GeneratorOrigin::CriticalCell,
        });
    }
    let index: HashMap<ElementRef, (usize, usize)> = generators
        .iter()
        .enumerate()
        .flat_map(|(d, gens)| gens.iter().enumerate().map(move |(i, g)| (g.cell, (d, i))))
        .collect();
    let mut boundaries: Vec<crate::snf::IntegerMatrix> = (1..=max_deg)
        .map(|d| crate::snf::IntegerMatrix::zero(generators[d - 1].len(), generators[d].len()))
        .collect();
    for d in 1..=max_deg {
        for (j, g) in generators[d].iter().enumerate() {
            for y in poset.covered_by(g.cell)? {
                let sign = incidence.sign(poset, g.cell, y)?;
                let (dd, i) = index[&y];
                debug_assert_eq!(dd, d - 1);
                boundaries[d - 1].set(i, j, sign as i64);
            }
        }
    }
    let complex = FiniteChainComplex {
        generators,
        boundaries,
    };
    for k in 0..complex.boundaries.len().saturating_sub(1) {
        if !complex.boundaries[k]
            .mul(&complex.boundaries[k + 1])
            .is_zero()
        {
            return Err(Error::NotAComplex(format!(
                "cellular differential does not square to zero at degree {}",
                k + 2
            )));
        }
    }
    Ok(complex)
}
