//! Self-indexing discrete Morse functions from rayless matchings.
//!
//! Cells of dimension i are stratified by the longest descent length n:
//! within the stage the raw values are n + (1 - 1/2^(2n)) for the lower cell
//! of a pair and n + (1 - 1/2^(2n-1)) for its match, with critical cells at
//! zero. Raw values grow without bound in n, while the final function must
//! stay below the next dimension's critical value, so each raw value t is
//! compressed order-preservingly to t/(1+t) in [0, 1) and offset by the
//! stage. Critical n-cells get exactly n.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matching::{is_rayless, l_m, MorseMatching, RaylessVerdict, Role};
use crate::poset::{ElementRef, Poset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CellKind {
    Critical,
    /// lower cell of a matched pair
    Lower,
    /// upper cell of a matched pair
    Upper,
}

#[derive(Debug, Clone)]
pub struct CellValue {
    pub cell: ElementRef,
    pub kind: CellKind,
    /// dimension stage the value belongs to (the lower cell's dimension)
    pub stage: usize,
    /// descent stratum n within the stage
    pub stratum: usize,
    /// the uncompressed stage-relative value
    pub raw: BigRational,
    /// final function value: stage + raw/(1+raw)
    pub value: BigRational,
}

/// An exact-rational discrete Morse function on a finite set of cells.
#[derive(Debug, Clone)]
pub struct DiscreteMorseFunction {
    values: BTreeMap<ElementRef, CellValue>,
}

impl DiscreteMorseFunction {
    pub fn get(&self, cell: ElementRef) -> Option<&CellValue> {
        self.values.get(&cell)
    }

    pub fn value(&self, cell: ElementRef) -> Option<&BigRational> {
        self.values.get(&cell).map(|v| &v.value)
    }

    pub fn cells(&self) -> impl Iterator<Item = &CellValue> {
        self.values.values()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn from_values(values: Vec<CellValue>) -> Self {
        DiscreteMorseFunction {
            values: values.into_iter().map(|v| (v.cell, v)).collect(),
        }
    }
}

fn pow2(exp: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(1) << exp)
}

fn compress(raw: &BigRational) -> BigRational {
    raw / (BigRational::one() + raw)
}

/// Cells whose down-sets stay inside the window, so every face of a valued
/// cell is valued too.
fn synthesis_cells(poset: &Poset, window: u64) -> Result<Vec<ElementRef>> {
    match poset {
        Poset::Finite(p) => Ok((0..p.len() as u32).map(ElementRef::Finite).collect()),
        Poset::Periodic(pp) => {
            let mut out: Vec<ElementRef> = (0..pp.prefix.len() as u32)
                .map(ElementRef::Finite)
                .collect();
            for row in 0..=window {
                for q in 0..pp.pattern.len() as u32 {
                    let x = ElementRef::lifted(q, row);
                    let fits = pp
                        .covered_by(x)
                        .iter()
                        .all(|y| y.row().is_none_or(|r| r <= window));
                    if fits {
                        out.push(x);
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Builds the self-indexing Morse function of a rayless matching on the
/// given window. The value of a critical n-cell is exactly n.
pub fn synthesize_morse_function(
    poset: &Poset,
    matching: &MorseMatching,
    window: u64,
    budget: usize,
) -> Result<DiscreteMorseFunction> {
    match is_rayless(poset, matching)? {
        RaylessVerdict::Rayless => {}
        RaylessVerdict::HasRay { .. } => {
            return Err(Error::NotRayless(
                "the matching has a decreasing ray; reverse it first".into(),
            ))
        }
    }
    let cells = synthesis_cells(poset, window)?;
    let mut values = Vec::new();
    for &x in &cells {
        let dim = poset.degree(x);
        let cv = match matching.partner(poset, x) {
            None => CellValue {
                cell: x,
                kind: CellKind::Critical,
                stage: dim,
                stratum: 0,
                raw: BigRational::zero(),
                value: BigRational::from_integer(BigInt::from(dim)),
            },
            Some((_, Role::Lower)) => {
                // a free pair (empty M_+) still needs a positive stratum
                let n = l_m(poset, matching, x, budget)?.max(1);
                let raw = BigRational::from_integer(BigInt::from(n)) + BigRational::one()
                    - pow2(2 * n).recip();
                let value = BigRational::from_integer(BigInt::from(dim)) + compress(&raw);
                CellValue {
                    cell: x,
                    kind: CellKind::Lower,
                    stage: dim,
                    stratum: n,
                    raw,
                    value,
                }
            }
            Some((partner, Role::Upper)) => {
                let n = l_m(poset, matching, partner, budget)?.max(1);
                let raw = BigRational::from_integer(BigInt::from(n)) + BigRational::one()
                    - pow2(2 * n - 1).recip();
                let stage = dim - 1;
                let value = BigRational::from_integer(BigInt::from(stage)) + compress(&raw);
                CellValue {
                    cell: x,
                    kind: CellKind::Upper,
                    stage,
                    stratum: n,
                    raw,
                    value,
                }
            }
        };
        values.push(cv);
    }
    Ok(DiscreteMorseFunction::from_values(values))
}

#[derive(Debug, Clone, Serialize)]
pub struct MorseFunctionReport {
    pub cells_checked: usize,
    pub violations: Vec<String>,
    /// recovered matching equals the source matching on comparable cells
    pub matching_roundtrip: bool,
    pub critical_cells: Vec<String>,
    pub passed: bool,
}

/// Checks the at-most-one conditions on the sets u_f and d_f, recovers the
/// induced matching, and compares it with the source. Cells whose covers
/// leave the valued window are compared on the valued part only.
pub fn verify_morse_function(
    poset: &Poset,
    matching: &MorseMatching,
    f: &DiscreteMorseFunction,
) -> Result<MorseFunctionReport> {
    let mut violations = Vec::new();
    let mut roundtrip = true;
    let mut critical = Vec::new();
    for cv in f.cells() {
        let x = cv.cell;
        let fx = &cv.value;
        let mut up = Vec::new();
        for z in poset.covers_above(x)? {
            if let Some(fz) = f.value(z) {
                if fz <= fx {
                    up.push(z);
                }
            }
        }
        let mut down = Vec::new();
        for y in poset.covered_by(x)? {
            if let Some(fy) = f.value(y) {
                if fy >= fx {
                    down.push(y);
                }
            }
        }
        if up.len() > 1 {
            violations.push(format!("|u_f({})| = {}", poset.display_ref(x), up.len()));
        }
        if down.len() > 1 {
            violations.push(format!("|d_f({})| = {}", poset.display_ref(x), down.len()));
        }
        if !up.is_empty() && !down.is_empty() {
            violations.push(format!(
                "both u_f and d_f of {} are nonempty",
                poset.display_ref(x)
            ));
        }
        // recovered matching
        let recovered = match (up.as_slice(), down.as_slice()) {
            ([z], []) => Some(*z),
            ([], [y]) => Some(*y),
            ([], []) => None,
            _ => None,
        };
        let source = matching.partner(poset, x).map(|(o, _)| o);
        let comparable = match source {
            Some(o) => f.get(o).is_some(),
            None => true,
        };
        if comparable && recovered != source {
            roundtrip = false;
            violations.push(format!(
                "matching of {} does not round-trip",
                poset.display_ref(x)
            ));
        }
        if up.is_empty() && down.is_empty() {
            critical.push(poset.display_ref(x));
        }
    }
    critical.sort();
    let passed = violations.is_empty();
    Ok(MorseFunctionReport {
        cells_checked: f.len(),
        violations,
        matching_roundtrip: roundtrip,
        critical_cells: critical,
        passed,
    })
}

/// A function given by explicit per-cell rational values, for checking
/// externally supplied candidates.
pub fn function_from_raw_values(values: Vec<(ElementRef, BigRational)>) -> DiscreteMorseFunction {
    DiscreteMorseFunction::from_values(
        values
            .into_iter()
            .map(|(cell, value)| CellValue {
                cell,
                kind: CellKind::Critical,
                stage: 0,
                stratum: 0,
                raw: value.clone(),
                value,
            })
            .collect(),
    )
}

/// Rebuilds values keyed by display name for reports and files.
pub fn serialized_values(
    poset: &Poset,
    f: &DiscreteMorseFunction,
) -> Vec<(String, String, usize, usize, String)> {
    let mut out: Vec<(String, String, usize, usize, String)> = f
        .cells()
        .map(|cv| {
            (
                poset.display_ref(cv.cell),
                format!("{}/{}", cv.value.numer(), cv.value.denom()),
                cv.stage,
                cv.stratum,
                format!("{}/{}", cv.raw.numer(), cv.raw.denom()),
            )
        })
        .collect();
    out.sort();
    out
}
