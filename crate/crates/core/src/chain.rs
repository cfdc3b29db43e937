//! The cellular chain complex, the gradient vector field, and the Morse
//! complex on critical generators.
//!
//! The flow is phi = 1 - dV - Vd with V(y) = eps(x, y) * x on cells matched
//! upward; then (1 - dV) x is a signed sum over M_+(x) and V (1 - dV)^k x
//! vanishes once k exceeds L_M(x). Note the sign of V: with the opposite
//! convention the (1 - dV) iteration picks up a coefficient 2 on x and never
//! stabilizes.
//!
//! The Morse differential is computed twice, by flow stabilization and by
//! gradient-path enumeration, and the two must agree.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::homology::HomologyGroups;
use crate::incidence::IncidenceMap;
use crate::matching::{critical_cells, l_m, MorseMatching, Role};
use crate::poset::{ElementRef, Poset};
use crate::snf::IntegerMatrix;

/// A finitely supported integer chain, kept homogeneous by the operations
/// that build it.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IntChain {
    terms: BTreeMap<ElementRef, BigInt>,
}

impl IntChain {
    pub fn zero() -> Self {
        IntChain::default()
    }

    pub fn single(cell: ElementRef, coef: impl Into<BigInt>) -> Self {
        let mut c = IntChain::zero();
        c.add(cell, coef.into());
        c
    }

    pub fn add(&mut self, cell: ElementRef, coef: BigInt) {
        if coef.is_zero() {
            return;
        }
        let entry = self.terms.entry(cell).or_insert_with(BigInt::zero);
        *entry += coef;
        if entry.is_zero() {
            self.terms.remove(&cell);
        }
    }

    pub fn add_chain(&mut self, other: &IntChain) {
        for (cell, coef) in &other.terms {
            self.add(*cell, coef.clone());
        }
    }

    pub fn sub_chain(&mut self, other: &IntChain) {
        for (cell, coef) in &other.terms {
            self.add(*cell, -coef.clone());
        }
    }

    pub fn scaled(&self, factor: &BigInt) -> IntChain {
        let mut out = IntChain::zero();
        for (cell, coef) in &self.terms {
            out.add(*cell, coef * factor);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, cell: ElementRef) -> BigInt {
        self.terms.get(&cell).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn support(&self) -> impl Iterator<Item = (&ElementRef, &BigInt)> {
        self.terms.iter()
    }

    pub fn support_len(&self) -> usize {
        self.terms.len()
    }

    /// All supported cells must share one degree.
    pub fn degree(&self, poset: &Poset) -> Option<usize> {
        let mut deg = None;
        for cell in self.terms.keys() {
            let d = poset.degree(*cell);
            match deg {
                None => deg = Some(d),
                Some(existing) => assert_eq!(existing, d, "chain is not homogeneous"),
            }
        }
        deg
    }
}

/// Evaluates the signed cellular boundary d(x) = sum eps(x, y) y.
pub struct ChainBoundaryOracle<'a> {
    pub poset: &'a Poset,
    pub incidence: &'a IncidenceMap,
}

impl<'a> ChainBoundaryOracle<'a> {
    pub fn new(poset: &'a Poset, incidence: &'a IncidenceMap) -> Self {
        ChainBoundaryOracle { poset, incidence }
    }

    pub fn boundary_cell(&self, x: ElementRef) -> Result<IntChain> {
        let mut out = IntChain::zero();
        for y in self.poset.covered_by(x)? {
            let sign = self.incidence.sign(self.poset, x, y)?;
            out.add(y, BigInt::from(sign));
        }
        Ok(out)
    }

    pub fn boundary(&self, chain: &IntChain) -> Result<IntChain> {
        let mut out = IntChain::zero();
        for (cell, coef) in chain.support() {
            out.add_chain(&self.boundary_cell(*cell)?.scaled(coef));
        }
        Ok(out)
    }

    /// d(d(x)) must vanish; checked cell by cell.
    pub fn check_d_squared(&self, cells: &[ElementRef]) -> Result<()> {
        for &x in cells {
            let dd = self.boundary(&self.boundary_cell(x)?)?;
            if !dd.is_zero() {
                return Err(Error::NoConsistentSigns(format!(
                    "d(d({})) is nonzero",
                    self.poset.display_ref(x)
                )));
            }
        }
        Ok(())
    }
}

/// The gradient vector field V of a matching, together with the flow.
pub struct GradientField<'a> {
    pub oracle: ChainBoundaryOracle<'a>,
    pub matching: &'a MorseMatching,
}

impl<'a> GradientField<'a> {
    pub fn new(poset: &'a Poset, incidence: &'a IncidenceMap, matching: &'a MorseMatching) -> Self {
        GradientField {
            oracle: ChainBoundaryOracle::new(poset, incidence),
            matching,
        }
    }

    fn poset(&self) -> &Poset {
        self.oracle.poset
    }

    /// V(y) = eps(x, y) x when y is matched upward with x, zero otherwise.
    pub fn gradient_cell(&self, y: ElementRef) -> Result<IntChain> {
        if !self.poset().contains(y) {
            return Err(Error::UnknownElement(self.poset().display_ref(y)));
        }
        match self.matching.partner(self.poset(), y) {
            Some((x, Role::Lower)) => {
                let sign = self.oracle.incidence.sign(self.poset(), x, y)?;
                Ok(IntChain::single(x, sign))
            }
            _ => Ok(IntChain::zero()),
        }
    }

    pub fn gradient(&self, chain: &IntChain) -> Result<IntChain> {
        let mut out = IntChain::zero();
        for (cell, coef) in chain.support() {
            out.add_chain(&self.gradient_cell(*cell)?.scaled(coef));
        }
        Ok(out)
    }

    /// (1 - dV) applied to a chain.
    pub fn one_minus_dv(&self, chain: &IntChain) -> Result<IntChain> {
        let mut out = chain.clone();
        out.sub_chain(&self.oracle.boundary(&self.gradient(chain)?)?);
        Ok(out)
    }

    /// The flow phi = 1 - dV - Vd.
    pub fn flow(&self, chain: &IntChain) -> Result<IntChain> {
        let mut out = chain.clone();
        out.sub_chain(&self.oracle.boundary(&self.gradient(chain)?)?);
        out.sub_chain(&self.gradient(&self.oracle.boundary(chain)?)?);
        Ok(out)
    }

    /// Iterates the flow to its fixed point. The support is bounded by the
    /// descent-reachable region, so this terminates on rayless matchings; the
    /// budget caps both iterations and support size.
    pub fn stabilize(&self, cell: ElementRef, budget: usize) -> Result<IntChain> {
        let mut current = IntChain::single(cell, 1);
        for _ in 0..budget {
            let next = self.flow(&current)?;
            if next.support_len() > budget {
                return Err(Error::BudgetExceeded(budget));
            }
            if next == current {
                return Ok(current);
            }
            current = next;
        }
        Err(Error::BudgetExceeded(budget))
    }
}

/// Per-condition outcome of the gradient field verification.
#[derive(Debug, Clone)]
pub struct GradientReport {
    pub cells_checked: usize,
    pub v_squared_zero: bool,
    pub nilpotent: bool,
    pub failures: Vec<String>,
}

/// Checks V is a gradient vector field on the sampled cells: degree-raising
/// by construction, V^2 = 0, and V (1 - dV)^{L_M(x)+1} x = 0.
pub fn verify_gradient_field(
    field: &GradientField,
    sample: &[ElementRef],
    budget: usize,
) -> Result<GradientReport> {
    let mut report = GradientReport {
        cells_checked: sample.len(),
        v_squared_zero: true,
        nilpotent: true,
        failures: Vec::new(),
    };
    for &x in sample {
        let v = field.gradient_cell(x)?;
        let vv = field.gradient(&v)?;
        if !vv.is_zero() {
            report.v_squared_zero = false;
            report
                .failures
                .push(format!("V(V({})) is nonzero", field.poset().display_ref(x)));
        }
        let steps = l_m(field.poset(), field.matching, x, budget)? + 1;
        let mut chain = IntChain::single(x, 1);
        for _ in 0..steps {
            chain = field.one_minus_dv(&chain)?;
        }
        let residue = field.gradient(&chain)?;
        if !residue.is_zero() {
            report.nilpotent = false;
            report.failures.push(format!(
                "V(1-dV)^{} {} is nonzero",
                steps,
                field.poset().display_ref(x)
            ));
        }
    }
    Ok(report)
}

/// Origin of a Morse complex generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GeneratorOrigin {
    /// critical cell of the original matching
    CriticalCell,
    /// new critical cell created by reversing the ray class with this index
    RayClass(usize),
}

#[derive(Debug, Clone)]
pub struct Generator {
    pub cell: ElementRef,
    pub name: String,
    pub origin: GeneratorOrigin,
}

/// The Morse chain complex: free generators per degree and integer boundary
/// matrices composing to zero.
#[derive(Debug, Clone)]
pub struct FiniteChainComplex {
    pub generators: Vec<Vec<Generator>>,
    /// boundaries[k] maps degree k+1 generators to degree k generators
    pub boundaries: Vec<IntegerMatrix>,
}

impl FiniteChainComplex {
    pub fn ranks(&self) -> Vec<usize> {
        self.generators.iter().map(|g| g.len()).collect()
    }

    pub fn homology(&self) -> Result<HomologyGroups> {
        crate::homology::homology_from_boundaries(&self.ranks(), &self.boundaries)
    }
}

/// Builds the Morse complex of a rayless matching: generators are the
/// critical cells, and the differential reads the critical coefficients off
/// d applied to the stabilized flow of each generator. Verifies that the
/// result composes to zero and agrees with path counting.
pub fn morse_complex(
    poset: &Poset,
    matching: &MorseMatching,
    incidence: &IncidenceMap,
    provenance: &HashMap<ElementRef, usize>,
    budget: usize,
) -> Result<FiniteChainComplex> {
    let crit = critical_cells(poset, matching);
    if !crit.is_finite() {
        return Err(Error::InfiniteCriticalCells(
            "a pattern cell is critical in every row; the Morse complex would not be \
             finitely generated"
                .into(),
        ));
    }
    let field = GradientField::new(poset, incidence, matching);
    let max_deg = crit.explicit.keys().copied().max().unwrap_or(0);
    let mut generators: Vec<Vec<Generator>> = vec![Vec::new(); max_deg + 1];
    for (&deg, cells) in &crit.explicit {
        for &cell in cells {
            let origin = match provenance.get(&cell) {
                Some(&idx) => GeneratorOrigin::RayClass(idx),
                None => GeneratorOrigin::CriticalCell,
            };
            generators[deg].push(Generator {
                cell,
                name: poset.display_ref(cell),
                origin,
            });
        }
    }
    let index: HashMap<ElementRef, (usize, usize)> = generators
        .iter()
        .enumerate()
        .flat_map(|(d, gens)| gens.iter().enumerate().map(move |(i, g)| (g.cell, (d, i))))
        .collect();
    let mut boundaries: Vec<IntegerMatrix> = (1..=max_deg)
        .map(|d| IntegerMatrix::zero(generators[d - 1].len(), generators[d].len()))
        .collect();
    for d in 1..=max_deg {
        for (j, g) in generators[d].iter().enumerate() {
            let stable = field.stabilize(g.cell, budget)?;
            let image = field.oracle.boundary(&stable)?;
            let by_paths = morse_differential_by_paths(poset, matching, incidence, g.cell, budget)?;
            let mut seen = IntChain::zero();
            for (cell, coef) in image.support() {
                if let Some(&(dd, i)) = index.get(cell) {
                    debug_assert_eq!(dd, d - 1);
                    boundaries[d - 1][(i, j)] = coef.clone();
                    seen.add(*cell, coef.clone());
                }
            }
            if seen != by_paths {
                return Err(Error::NotAComplex(format!(
                    "flow and path differentials disagree on {}",
                    g.name
                )));
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
                "Morse differential does not square to zero at degree {}",
                k + 2
            )));
        }
    }
    Ok(complex)
}

/// Independent cross-check of the Morse differential: enumerate alternating
/// gradient paths from the faces of `c` down to critical cells, multiplying
/// the step signs -eps(z, y) eps(z, y').
pub fn morse_differential_by_paths(
    poset: &Poset,
    matching: &MorseMatching,
    incidence: &IncidenceMap,
    c: ElementRef,
    budget: usize,
) -> Result<IntChain> {
    let mut memo: HashMap<ElementRef, IntChain> = HashMap::new();
    let mut out = IntChain::zero();
    for y in poset.covered_by(c)? {
        let sign = incidence.sign(poset, c, y)?;
        let reached = paths_to_critical(poset, matching, incidence, y, &mut memo, budget)?;
        out.add_chain(&reached.scaled(&BigInt::from(sign)));
    }
    Ok(out)
}

fn paths_to_critical(
    poset: &Poset,
    matching: &MorseMatching,
    incidence: &IncidenceMap,
    y: ElementRef,
    memo: &mut HashMap<ElementRef, IntChain>,
    budget: usize,
) -> Result<IntChain> {
    if let Some(hit) = memo.get(&y) {
        return Ok(hit.clone());
    }
    if memo.len() > budget {
        return Err(Error::BudgetExceeded(budget));
    }
    let result = match matching.partner(poset, y) {
        None => IntChain::single(y, 1),
        Some((z, Role::Lower)) => {
            // step through the matched cell z to its other faces
            let sy = incidence.sign(poset, z, y)?;
            let mut acc = IntChain::zero();
            for y2 in poset.covered_by(z)? {
                if y2 == y {
                    continue;
                }
                let sy2 = incidence.sign(poset, z, y2)?;
                let weight = BigInt::from(-(sy * sy2));
                let sub = paths_to_critical(poset, matching, incidence, y2, memo, budget)?;
                acc.add_chain(&sub.scaled(&weight));
            }
            acc
        }
        Some((_, Role::Upper)) => IntChain::zero(),
    };
    memo.insert(y, result.clone());
    Ok(result)
}
