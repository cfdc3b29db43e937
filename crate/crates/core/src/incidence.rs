//! Incidence signs for the cellular boundary operator.
//!
//! A sign in {-1, +1} is attached to every cover pair so that for each x and
//! each z two degrees below it, the signed two-step paths cancel. Degree-one
//! elements additionally get opposite signs on their two vertices, which is
//! the same condition against a virtual empty cell; without it a bare cycle
//! graph would get an all-plus boundary and the wrong homology.
//!
//! Writing eps = (-1)^b, a two-term cancellation is a GF(2) relation on the
//! exponent bits. Those are solved by elimination with the pivot on the
//! latest variable, so earlier covers stay free and default to +1; the
//! outcome is deterministic in the input order. Constraints with four or more
//! terms (posets beyond the regular-CW case) are checked afterwards, with a
//! bounded search over the free variables if they fail.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::poset::{ElementRef, Poset, SeamSide};

/// Shift-invariant sign data: explicit signs on finite covers, one sign per
/// pattern arc for periodic posets.
#[derive(Debug, Clone)]
pub enum IncidenceMap {
    Finite {
        signs: HashMap<(u32, u32), i8>,
    },
    Periodic {
        prefix: HashMap<(u32, u32), i8>,
        glue: Vec<i8>,
        arcs: Vec<i8>,
    },
}

impl IncidenceMap {
    /// Sign of the cover `upper > lower`.
    pub fn sign(&self, poset: &Poset, upper: ElementRef, lower: ElementRef) -> Result<i8> {
        let missing = || {
            Error::UnknownElement(format!(
                "no incidence sign for {} > {}",
                poset.display_ref(upper),
                poset.display_ref(lower)
            ))
        };
        match (self, poset) {
            (IncidenceMap::Finite { signs }, Poset::Finite(_)) => match (upper, lower) {
                (ElementRef::Finite(u), ElementRef::Finite(l)) => {
                    signs.get(&(u, l)).copied().ok_or_else(missing)
                }
                _ => Err(missing()),
            },
            (IncidenceMap::Periodic { prefix, glue, arcs }, Poset::Periodic(pp)) => {
                match (upper, lower) {
                    (ElementRef::Finite(u), ElementRef::Finite(l)) => {
                        prefix.get(&(u, l)).copied().ok_or_else(missing)
                    }
                    (
                        ElementRef::Lifted { qcell: qu, row: ru },
                        ElementRef::Lifted { qcell: ql, row: rl },
                    ) => {
                        let shift = rl as i64 - ru as i64;
                        pp.pattern
                            .arcs()
                            .iter()
                            .position(|a| a.upper == qu && a.lower == ql && a.shift as i64 == shift)
                            .map(|k| arcs[k])
                            .ok_or_else(missing)
                    }
                    (u, l) => {
                        let side = |r: ElementRef| match r {
                            ElementRef::Finite(i) => Some(SeamSide::Prefix(i)),
                            ElementRef::Lifted { qcell, row: 0 } => Some(SeamSide::Pattern(qcell)),
                            _ => None,
                        };
                        let (us, ls) = (side(u).ok_or_else(missing)?, side(l).ok_or_else(missing)?);
                        pp.glue
                            .iter()
                            .position(|g| g.upper == us && g.lower == ls)
                            .map(|k| glue[k])
                            .ok_or_else(missing)
                    }
                }
            }
            _ => Err(missing()),
        }
    }

    /// Exhaustively rechecks the cancellation conditions on the finite poset
    /// or on a window of the periodic one (one extra row beyond the rows the
    /// solver consumed).
    pub fn verify(&self, poset: &Poset) -> Result<()> {
        for x in constraint_roots(poset, 1) {
            let deg = poset.degree(x);
            if deg == 1 {
                let mut sum = 0i64;
                for y in poset.covered_by(x)? {
                    sum += self.sign(poset, x, y)? as i64;
                }
                if sum != 0 {
                    return Err(Error::NoConsistentSigns(format!(
                        "vertex signs below {} do not cancel",
                        poset.display_ref(x)
                    )));
                }
            } else if deg >= 2 {
                let mut per_z: HashMap<ElementRef, i64> = HashMap::new();
                for y in poset.covered_by(x)? {
                    let s1 = self.sign(poset, x, y)?;
                    for z in poset.covered_by(y)? {
                        let s2 = self.sign(poset, y, z)?;
                        *per_z.entry(z).or_insert(0) += (s1 * s2) as i64;
                    }
                }
                for (z, sum) in per_z {
                    if sum != 0 {
                        return Err(Error::NoConsistentSigns(format!(
                            "two-step paths from {} to {} do not cancel",
                            poset.display_ref(x),
                            poset.display_ref(z)
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Elements whose cancellation constraints are collected. For periodic posets
/// this is the prefix plus enough rows that every constraint shape appears;
/// beyond them constraints are shift copies with identical variables.
fn constraint_roots(poset: &Poset, margin: u64) -> Vec<ElementRef> {
    match poset {
        Poset::Finite(p) => (0..p.len() as u32).map(ElementRef::Finite).collect(),
        Poset::Periodic(p) => {
            let rows = p.seam_rows().max(3) + margin;
            let mut out: Vec<ElementRef> =
                (0..p.prefix.len() as u32).map(ElementRef::Finite).collect();
            for row in 0..=rows {
                for q in 0..p.pattern.len() as u32 {
                    out.push(ElementRef::lifted(q, row));
                }
            }
            out
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Var {
    PrefixCover(u32, u32),
    Glue(u32),
    Arc(u32),
    FiniteCover(u32, u32),
}

struct VarTable {
    order: Vec<Var>,
    index: HashMap<Var, usize>,
}

impl VarTable {
    fn new(order: Vec<Var>) -> Self {
        let index = order.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        VarTable { order, index }
    }
}

fn cover_var(poset: &Poset, upper: ElementRef, lower: ElementRef) -> Var {
    match (poset, upper, lower) {
        (Poset::Finite(_), ElementRef::Finite(u), ElementRef::Finite(l)) => Var::FiniteCover(u, l),
        (Poset::Periodic(_), ElementRef::Finite(u), ElementRef::Finite(l)) => {
            Var::PrefixCover(u, l)
        }
        (
            Poset::Periodic(pp),
            ElementRef::Lifted { qcell: qu, row: ru },
            ElementRef::Lifted { qcell: ql, row: rl },
        ) => {
            let shift = rl as i64 - ru as i64;
            let k = pp
                .pattern
                .arcs()
                .iter()
                .position(|a| a.upper == qu && a.lower == ql && a.shift as i64 == shift)
                .expect("cover comes from an arc");
            Var::Arc(k as u32)
        }
        (Poset::Periodic(pp), u, l) => {
            let side = |r: ElementRef| match r {
                ElementRef::Finite(i) => SeamSide::Prefix(i),
                ElementRef::Lifted { qcell, .. } => SeamSide::Pattern(qcell),
            };
            let (us, ls) = (side(u), side(l));
            let k = pp
                .glue
                .iter()
                .position(|g| g.upper == us && g.lower == ls)
                .expect("cover comes from a glue entry");
            Var::Glue(k as u32)
        }
        _ => unreachable!("finite posets have no lifted elements"),
    }
}

/// One cancellation constraint: the +/-1 terms, each a product of one or two
/// sign variables, must sum to zero.
type Constraint = Vec<Vec<usize>>;

struct System {
    nvars: usize,
    constraints: Vec<Constraint>,
}

fn collect_system(poset: &Poset) -> Result<(VarTable, System)> {
    let order: Vec<Var> = match poset {
        Poset::Finite(p) => p.covers().map(|(u, l)| Var::FiniteCover(u, l)).collect(),
        Poset::Periodic(p) => {
            let mut order: Vec<Var> = p
                .prefix
                .covers()
                .map(|(u, l)| Var::PrefixCover(u, l))
                .collect();
            order.extend((0..p.glue.len() as u32).map(Var::Glue));
            order.extend((0..p.pattern.arcs().len() as u32).map(Var::Arc));
            order
        }
    };
    let table = VarTable::new(order);
    let mut seen: BTreeSet<Constraint> = BTreeSet::new();
    for x in constraint_roots(poset, 0) {
        let deg = poset.degree(x);
        if deg == 1 {
            let mut terms: Constraint = Vec::new();
            for y in poset.covered_by(x)? {
                terms.push(vec![table.index[&cover_var(poset, x, y)]]);
            }
            terms.sort();
            seen.insert(terms);
        } else if deg >= 2 {
            let mut per_z: HashMap<ElementRef, Constraint> = HashMap::new();
            for y in poset.covered_by(x)? {
                let v1 = table.index[&cover_var(poset, x, y)];
                for z in poset.covered_by(y)? {
                    let v2 = table.index[&cover_var(poset, y, z)];
                    let mut term = vec![v1, v2];
                    term.sort_unstable();
                    per_z.entry(z).or_default().push(term);
                }
            }
            for (_, mut terms) in per_z {
                terms.sort();
                seen.insert(terms);
            }
        }
    }
    let nvars = table.order.len();
    Ok((
        table,
        System {
            nvars,
            constraints: seen.into_iter().collect(),
        },
    ))
}

/// Solves for exponent bits. Two-term constraints become XOR equations; any
/// larger ones are checked against the XOR solution and, failing that,
/// searched over the free variables.
fn solve(system: &System) -> Result<Vec<i8>> {
    let n = system.nvars;
    let words = n.div_ceil(64);
    let mut rows: Vec<(Vec<u64>, bool)> = Vec::new();
    let mut big: Vec<&Constraint> = Vec::new();
    for c in &system.constraints {
        if c.len() % 2 != 0 {
            return Err(Error::NoConsistentSigns(format!(
                "a cancellation constraint has {} terms, an odd number",
                c.len()
            )));
        }
        if c.len() == 2 {
            let mut mask = vec![0u64; words];
            for term in c {
                for &v in term {
                    mask[v / 64] ^= 1 << (v % 64);
                }
            }
            rows.push((mask, true));
        } else if !c.is_empty() {
            big.push(c);
        }
    }
    // elimination with pivot on the highest set bit, so early covers stay free
    let mut pivots: Vec<(usize, Vec<u64>, bool)> = Vec::new();
    for (mut mask, mut rhs) in rows {
        loop {
            let top = highest_bit(&mask);
            match top {
                None => {
                    if rhs {
                        return Err(Error::NoConsistentSigns(
                            "cancellation constraints are contradictory".into(),
                        ));
                    }
                    break;
                }
                Some(t) => {
                    if let Some((_, pmask, prhs)) = pivots.iter().find(|(p, _, _)| *p == t) {
                        for w in 0..words {
                            mask[w] ^= pmask[w];
                        }
                        rhs ^= prhs;
                    } else {
                        pivots.push((t, mask, rhs));
                        break;
                    }
                }
            }
        }
    }
    pivots.sort_by_key(|(p, _, _)| *p);
    let pivot_set: BTreeSet<usize> = pivots.iter().map(|(p, _, _)| *p).collect();
    let free: Vec<usize> = (0..n).filter(|v| !pivot_set.contains(v)).collect();

    let substitute = |free_bits: &HashMap<usize, bool>| -> Vec<bool> {
        let mut bits = vec![false; n];
        for (&v, &b) in free_bits {
            bits[v] = b;
        }
        // each pivot is the highest bit of its row, so lower vars come first
        for (p, mask, rhs) in pivots.iter() {
            let mut acc = *rhs;
            for w in 0..words {
                let mut m = mask[w];
                while m != 0 {
                    let v = w * 64 + m.trailing_zeros() as usize;
                    m &= m - 1;
                    if v != *p {
                        acc ^= bits[v];
                    }
                }
            }
            bits[*p] = acc;
        }
        bits
    };
    let check_big = |bits: &[bool]| {
        big.iter().all(|c| {
            let sum: i64 = c
                .iter()
                .map(|term| {
                    let b = term.iter().fold(false, |acc, &v| acc ^ bits[v]);
                    if b {
                        -1
                    } else {
                        1
                    }
                })
                .sum();
            sum == 0
        })
    };

    let default: HashMap<usize, bool> = HashMap::new();
    let bits = substitute(&default);
    if check_big(&bits) {
        return Ok(bits.iter().map(|&b| if b { -1 } else { 1 }).collect());
    }
    // bounded search over free variables, canonical order
    let budget = 1usize << 20;
    let mut tried = 0usize;
    let mut assign: HashMap<usize, bool> = default;
    let mut depth_choices: Vec<usize> = free.clone();
    depth_choices.sort_unstable();
    fn search(
        choices: &[usize],
        at: usize,
        assign: &mut HashMap<usize, bool>,
        tried: &mut usize,
        budget: usize,
        substitute: &dyn Fn(&HashMap<usize, bool>) -> Vec<bool>,
        check_big: &dyn Fn(&[bool]) -> bool,
    ) -> Option<Vec<bool>> {
        *tried += 1;
        if *tried > budget {
            return None;
        }
        if at == choices.len() {
            let bits = substitute(assign);
            return check_big(&bits).then_some(bits);
        }
        for b in [false, true] {
            assign.insert(choices[at], b);
            if let Some(bits) = search(
                choices,
                at + 1,
                assign,
                tried,
                budget,
                substitute,
                check_big,
            ) {
                return Some(bits);
            }
        }
        assign.remove(&choices[at]);
        None
    }
    match search(
        &depth_choices,
        0,
        &mut assign,
        &mut tried,
        budget,
        &substitute,
        &check_big,
    ) {
        Some(bits) => Ok(bits.iter().map(|&b| if b { -1 } else { 1 }).collect()),
        None => Err(Error::NoConsistentSigns(
            "no sign assignment satisfies the cancellation constraints".into(),
        )),
    }
}

fn highest_bit(mask: &[u64]) -> Option<usize> {
    for (w, &m) in mask.iter().enumerate().rev() {
        if m != 0 {
            return Some(w * 64 + 63 - m.leading_zeros() as usize);
        }
    }
    None
}

/// Computes a deterministic incidence sign assignment for an h-admissible
/// poset and verifies the cancellation conditions before returning it.
pub fn compute_incidence(poset: &Poset) -> Result<IncidenceMap> {
    let (table, system) = collect_system(poset)?;
    let signs = solve(&system)?;
    let map = match poset {
        Poset::Finite(_) => {
            let mut out = HashMap::new();
            for (i, v) in table.order.iter().enumerate() {
                if let Var::FiniteCover(u, l) = v {
                    out.insert((*u, *l), signs[i]);
                }
            }
            IncidenceMap::Finite { signs: out }
        }
        Poset::Periodic(pp) => {
            let mut prefix = HashMap::new();
            let mut glue = vec![1i8; pp.glue.len()];
            let mut arcs = vec![1i8; pp.pattern.arcs().len()];
            for (i, v) in table.order.iter().enumerate() {
                match v {
                    Var::PrefixCover(u, l) => {
                        prefix.insert((*u, *l), signs[i]);
                    }
                    Var::Glue(k) => glue[*k as usize] = signs[i],
                    Var::Arc(k) => arcs[*k as usize] = signs[i],
                    Var::FiniteCover(..) => unreachable!(),
                }
            }
            IncidenceMap::Periodic { prefix, glue, arcs }
        }
    };
    map.verify(poset)?;
    Ok(map)
}
