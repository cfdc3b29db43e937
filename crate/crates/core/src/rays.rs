//! Decreasing rays in H_M: canonical lasso representatives, equivalence,
//! bypass and multiray detection, and ray reversal.
//!
//! A ray class is represented by a lasso: a finite entry path followed by the
//! lift of a positive-net quotient cycle from a fixed base row. Equivalence
//! of rays only depends on the tail, so two lassos are equivalent exactly
//! when their cycles agree up to rotation and their base rows agree modulo
//! the net shift.
//!
//! Reversal shifts the matched pairs one step along the ray, turning its
//! first element critical. When the cycle advances more than one row per
//! period the pattern is first re-blocked into super-rows of that size, which
//! makes the reversed matching arc-uniform again; rows below the ray's base
//! are absorbed into the prefix.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matching::{
    critical_cells, is_acyclic, is_rayless, LassoWitness, MorseMatching, QCycle, QuotientHm,
    RaylessVerdict, Role,
};
use crate::poset::{
    ElementRef, FiniteGradedPoset, Glue, PeriodicPoset, Poset, QuotientPattern, SeamSide,
};

/// Canonical representative of a decreasing ray class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ray {
    /// explicit elements walked before the periodic part; may be empty
    pub prefix: Vec<ElementRef>,
    /// quotient cycle followed forever, net shift >= 1
    pub cycle: QCycle,
    /// row at which the first cycle element is lifted
    pub base_row: u64,
}

impl Ray {
    pub fn start_node(&self) -> u32 {
        self.cycle.nodes[0]
    }

    pub fn net(&self) -> u64 {
        self.cycle.net as u64
    }

    /// First `count` elements of the ray.
    pub fn elements(&self, q: &QuotientHm, count: usize) -> Vec<ElementRef> {
        let mut out = self.prefix.clone();
        if out.len() >= count {
            out.truncate(count);
            return out;
        }
        let periods = (count - out.len()) / self.cycle.edges.len() + 2;
        let mut edges = Vec::new();
        for _ in 0..periods {
            edges.extend_from_slice(&self.cycle.edges);
        }
        let lift = q.lift(self.start_node(), self.base_row, &edges);
        out.extend(lift);
        out.truncate(count);
        out
    }

    /// Checks the unrolled path (prefix plus three periods) is a directed
    /// simple path in H_M and the cycle has positive net.
    pub fn validate(&self, poset: &Poset, matching: &MorseMatching) -> Result<()> {
        if self.cycle.net <= 0 {
            return Err(Error::InvalidRay("cycle net shift must be positive".into()));
        }
        let q = QuotientHm::build(poset, matching)
            .ok_or_else(|| Error::InvalidRay("rays need a periodic poset".into()))?;
        if self.cycle.nodes.is_empty()
            || self.cycle.edges.is_empty()
            || q.min_cumulative(&self.cycle.edges) + (self.base_row as i64) < 0
        {
            return Err(Error::InvalidRay("cycle lift dips below row zero".into()));
        }
        let n = self.prefix.len() + 3 * self.cycle.edges.len() + 1;
        let elements = self.elements(&q, n);
        let mut seen = BTreeSet::new();
        for w in elements.windows(2) {
            if !seen.insert(w[0]) {
                return Err(Error::InvalidRay("unrolled ray revisits an element".into()));
            }
            if !matching.modified_hasse_out(poset, w[0])?.contains(&w[1]) {
                return Err(Error::InvalidRay(format!(
                    "no H_M arrow {} -> {}",
                    poset.display_ref(w[0]),
                    poset.display_ref(w[1])
                )));
            }
        }
        Ok(())
    }

    /// Rotation-canonical key of the tail: the cycle's lexicographically
    /// least edge rotation plus the base row phase modulo the net shift.
    pub fn class_key(&self, q: &QuotientHm) -> (Vec<(u32, u32, i8, bool)>, u64) {
        let len = self.cycle.edges.len();
        let describe = |rot: usize| -> Vec<(u32, u32, i8, bool)> {
            (0..len)
                .map(|i| {
                    let e = q.edges[self.cycle.edges[(rot + i) % len] as usize];
                    (e.from, e.to, e.shift, e.reversed)
                })
                .collect()
        };
        let mut best = describe(0);
        let mut best_rot = 0;
        for rot in 1..len {
            let cand = describe(rot);
            if cand < best {
                best = cand;
                best_rot = rot;
            }
        }
        // row of the anchor (rotation start) in this lift
        let mut row = self.base_row as i64;
        for i in 0..best_rot {
            row += q.edges[self.cycle.edges[i] as usize].shift as i64;
        }
        let s = self.cycle.net;
        let phase = row.rem_euclid(s) as u64;
        (best, phase)
    }

    pub fn describe(&self, poset: &Poset, matching: &MorseMatching) -> RayDescription {
        let q = QuotientHm::build(poset, matching).expect("periodic poset");
        let n = self.prefix.len() + 3 * self.cycle.edges.len() + 1;
        RayDescription {
            degree: ray_degree(poset, matching, self)
                .map(|d| d.degree)
                .unwrap_or(0),
            prefix: self.prefix.iter().map(|&r| poset.display_ref(r)).collect(),
            cycle: self
                .cycle
                .edges
                .iter()
                .map(|&e| {
                    let edge = q.edges[e as usize];
                    format!(
                        "{}@{}{}",
                        match poset {
                            Poset::Periodic(pp) => pp.pattern.name(edge.from).to_string(),
                            _ => edge.from.to_string(),
                        },
                        if edge.shift >= 0 { "+" } else { "" },
                        edge.shift
                    )
                })
                .collect(),
            base_row: self.base_row,
            net_shift: self.cycle.net,
            unrolled: self
                .elements(&q, n)
                .into_iter()
                .map(|r| poset.display_ref(r))
                .collect(),
        }
    }
}

/// Serializable view of a ray for reports; the unrolled field carries the
/// three-period witness for external audit.
#[derive(Debug, Clone, Serialize)]
pub struct RayDescription {
    pub degree: usize,
    pub prefix: Vec<String>,
    pub cycle: Vec<String>,
    pub base_row: u64,
    pub net_shift: i64,
    pub unrolled: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RayDegree {
    pub degree: usize,
    /// index of the first element attaining the minimal degree
    pub first_index: usize,
}

/// Minimal degree attained along the ray and where it is first attained.
/// The tail alternates between two degrees, so one prefix-plus-period window
/// suffices.
pub fn ray_degree(poset: &Poset, matching: &MorseMatching, ray: &Ray) -> Result<RayDegree> {
    let q = QuotientHm::build(poset, matching)
        .ok_or_else(|| Error::InvalidRay("rays need a periodic poset".into()))?;
    let n = ray.prefix.len() + ray.cycle.edges.len() + 1;
    let elements = ray.elements(&q, n);
    let mut degree = usize::MAX;
    let mut first_index = 0;
    for (i, &e) in elements.iter().enumerate() {
        let d = poset.degree(e);
        if d < degree {
            degree = d;
            first_index = i;
        }
    }
    Ok(RayDegree {
        degree,
        first_index,
    })
}

/// Drops the part of the ray before the first element of minimal degree, so
/// that the matched pairs along it are (r_{2k}, r_{2k+1}).
pub fn normalize_ray(poset: &Poset, matching: &MorseMatching, ray: &Ray) -> Result<Ray> {
    let q = QuotientHm::build(poset, matching)
        .ok_or_else(|| Error::InvalidRay("rays need a periodic poset".into()))?;
    let info = ray_degree(poset, matching, ray)?;
    let j = info.first_index;
    if j < ray.prefix.len() {
        return Ok(Ray {
            prefix: ray.prefix[j..].to_vec(),
            cycle: ray.cycle.clone(),
            base_row: ray.base_row,
        });
    }
    // rotate the cycle so the lift starts at the minimum
    let into_cycle = j - ray.prefix.len();
    let len = ray.cycle.edges.len();
    let rot = into_cycle % len;
    let skipped_periods = (into_cycle / len) as i64;
    let mut row = ray.base_row as i64 + skipped_periods * ray.cycle.net;
    for i in 0..rot {
        row += q.edges[ray.cycle.edges[i] as usize].shift as i64;
    }
    let edges: Vec<u32> = (0..len).map(|i| ray.cycle.edges[(rot + i) % len]).collect();
    let nodes: Vec<u32> = {
        let mut nodes = Vec::with_capacity(len);
        let mut at = q.edges[edges[0] as usize].from;
        nodes.push(at);
        for &e in &edges[..len - 1] {
            at = q.edges[e as usize].to;
            nodes.push(at);
        }
        nodes
    };
    Ok(Ray {
        prefix: Vec::new(),
        cycle: QCycle {
            edges,
            nodes,
            net: ray.cycle.net,
        },
        base_row: row as u64,
    })
}

impl LassoWitness {
    pub fn into_ray(self) -> Ray {
        Ray {
            prefix: Vec::new(),
            cycle: self.cycle,
            base_row: self.base_row,
        }
    }
}

/// True iff the two rays' tails eventually coincide. Decided by comparing
/// cycles up to rotation and base rows modulo the net shift, then double
/// checked by an explicit tail merge within prefix lengths plus two periods.
pub fn are_equivalent(poset: &Poset, matching: &MorseMatching, r: &Ray, s: &Ray) -> Result<bool> {
    r.validate(poset, matching)?;
    s.validate(poset, matching)?;
    let q = QuotientHm::build(poset, matching).unwrap();
    if r.class_key(&q) != s.class_key(&q) {
        return Ok(false);
    }
    // tails share a cycle rotation and phase; exhibit the merge explicitly
    let lr = r.cycle.edges.len();
    let ls = s.cycle.edges.len();
    let lcm = lr * ls / gcd(lr, ls);
    let span = r.prefix.len() + s.prefix.len() + 2 * lcm + 2;
    let er = r.elements(&q, span + lcm);
    let es = s.elements(&q, span + lcm);
    for a in 0..span {
        for b in 0..span {
            if er[a] == es[b] {
                let ok = (0..lcm).all(|t| er[a + t] == es[b + t]);
                if ok {
                    return Ok(true);
                }
            }
        }
    }
    Ok(false)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl Ray {
    /// Unrolls the ray against the matching it was enumerated under. The
    /// cycle's edge indices refer to that matching's H_M quotient, so do not
    /// mix matchings here.
    pub fn unroll(&self, poset: &Poset, matching: &MorseMatching, count: usize) -> Vec<ElementRef> {
        let q = QuotientHm::build(poset, matching).expect("rays need a periodic poset");
        self.elements(&q, count)
    }
}

/// True iff two unrolled element sequences share a run of `window`
/// consecutive equal positions; for eventually periodic rays with periods
/// dividing `window` this exhibits that the tails coincide. Useful for
/// comparing rays enumerated under different matchings, where the edge-level
/// class keys are not comparable.
pub fn tails_merge(a: &[ElementRef], b: &[ElementRef], window: usize) -> bool {
    for i in 0..a.len().saturating_sub(window) {
        for j in 0..b.len().saturating_sub(window) {
            if a[i] == b[j] && (0..window).all(|t| a[i + t] == b[j + t]) {
                return true;
            }
        }
    }
    false
}

/// The family of ray classes, canonical representatives sorted by degree and
/// class key.
#[derive(Debug, Clone)]
pub struct RayClassSet {
    pub classes: Vec<Ray>,
}

impl RayClassSet {
    pub fn degree_counts(&self, poset: &Poset, matching: &MorseMatching) -> Vec<usize> {
        let mut counts = Vec::new();
        for ray in &self.classes {
            let d = ray_degree(poset, matching, ray)
                .map(|i| i.degree)
                .unwrap_or(0);
            if counts.len() <= d {
                counts.resize(d + 1, 0);
            }
            counts[d] += 1;
        }
        counts
    }
}

/// A simple H_M path from one ray element to a later one, leaving the ray in
/// between.
#[derive(Debug, Clone)]
pub struct Bypass {
    pub start_index: usize,
    pub end_index: usize,
    pub path: Vec<ElementRef>,
}

/// Evidence that the class set is uncountable: either an explicitly
/// recurring bypass, or two distinct positive cycles sharing a strongly
/// connected component.
#[derive(Debug, Clone)]
pub struct MultirayEvidence {
    pub ray: Ray,
    pub bypass: Option<Bypass>,
    pub recurrence_period: Option<u64>,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub enum RayEnumeration {
    Classes(RayClassSet),
    Multiray(MultirayEvidence),
}

/// Enumerates ray classes of an acyclic matching, or detects a multiray.
///
/// Positive-net simple cycles of the quotient are the tails; each contributes
/// one class per residue of the base row modulo its net shift. Two distinct
/// cycles inside one strongly connected component (necessarily both positive
/// when H_M is acyclic) let bypasses recur forever, and splicing an infinite
/// subset of them into the ray produces uncountably many classes.
pub fn enumerate_rays(poset: &Poset, matching: &MorseMatching) -> Result<RayEnumeration> {
    if poset.is_finite() {
        return Ok(RayEnumeration::Classes(RayClassSet {
            classes: Vec::new(),
        }));
    }
    match is_acyclic(poset, matching)? {
        crate::matching::AcyclicityVerdict::Acyclic => {}
        crate::matching::AcyclicityVerdict::Cyclic { witness } => {
            return Err(Error::NotAcyclic(format!(
                "H_M has a directed cycle through {}",
                poset.display_ref(witness[0])
            )))
        }
    }
    let q = QuotientHm::build(poset, matching).unwrap();
    let cycles = q.simple_cycles();
    let positive: Vec<&QCycle> = cycles.iter().filter(|c| c.net > 0).collect();
    if positive.is_empty() {
        return Ok(RayEnumeration::Classes(RayClassSet {
            classes: Vec::new(),
        }));
    }
    // multiray screen: any SCC with two or more distinct cycles
    let comp = q.scc_ids();
    let mut per_scc: BTreeMap<usize, Vec<&QCycle>> = BTreeMap::new();
    for c in &cycles {
        per_scc
            .entry(comp[c.nodes[0] as usize])
            .or_default()
            .push(c);
    }
    for scc_cycles in per_scc.values() {
        if scc_cycles.len() >= 2 && scc_cycles.iter().any(|c| c.net > 0) {
            let cycle = scc_cycles.iter().find(|c| c.net > 0).unwrap();
            let base = matching.uniform_from() + 1 + (-q.min_cumulative(&cycle.edges)) as u64;
            let ray = Ray {
                prefix: Vec::new(),
                cycle: (*cycle).clone(),
                base_row: base,
            };
            let confirmed = is_multiray(poset, matching, &ray)?;
            let reason = "two distinct cycles share a strongly connected component of the \
                          H_M quotient, so bypasses recur in every period"
                .to_string();
            return Ok(RayEnumeration::Multiray(match confirmed {
                Some((bypass, period)) => MultirayEvidence {
                    ray,
                    bypass: Some(bypass),
                    recurrence_period: Some(period),
                    reason,
                },
                None => MultirayEvidence {
                    ray,
                    bypass: None,
                    recurrence_period: None,
                    reason,
                },
            }));
        }
    }
    // one cycle per component: finitely many classes, one per phase
    let mut classes = Vec::new();
    for cycle in positive {
        let dip = (-q.min_cumulative(&cycle.edges)) as u64;
        for phase in 0..cycle.net as u64 {
            let base = matching.uniform_from() + 1 + dip + phase;
            let bare = Ray {
                prefix: Vec::new(),
                cycle: cycle.clone(),
                base_row: base,
            };
            let extended = extend_prefix(poset, matching, &q, bare)?;
            classes.push(extended);
        }
    }
    let mut keyed: Vec<((usize, Vec<(u32, u32, i8, bool)>, u64), Ray)> = classes
        .into_iter()
        .map(|ray| {
            let key = ray.class_key(&q);
            let deg = ray_degree(poset, matching, &ray)
                .map(|d| d.degree)
                .unwrap_or(0);
            ((deg, key.0, key.1), ray)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    keyed.dedup_by(|a, b| a.0 == b.0);
    Ok(RayEnumeration::Classes(RayClassSet {
        classes: keyed.into_iter().map(|(_, r)| r).collect(),
    }))
}

/// Extends the ray backwards through H_M while a predecessor exists, choosing
/// the canonically least one, up to a deterministic cap. This only changes
/// the reported representative, never the class.
fn extend_prefix(poset: &Poset, matching: &MorseMatching, q: &QuotientHm, ray: Ray) -> Result<Ray> {
    let cap = match poset {
        Poset::Periodic(pp) => {
            (ray.base_row as usize + 2) * (pp.pattern.len() + 2)
                + pp.prefix.len()
                + 2 * ray.cycle.edges.len()
        }
        Poset::Finite(_) => 0,
    };
    let forward: BTreeSet<ElementRef> = ray
        .elements(q, ray.prefix.len() + 3 * ray.cycle.edges.len() + 2)
        .into_iter()
        .collect();
    let mut prefix: Vec<ElementRef> = ray.prefix.clone();
    let mut used: BTreeSet<ElementRef> = forward;
    let mut head = *prefix
        .first()
        .unwrap_or(&ElementRef::lifted(ray.start_node(), ray.base_row));
    for _ in 0..cap {
        let candidates: Vec<ElementRef> = matching
            .modified_hasse_in(poset, head)?
            .into_iter()
            .filter(|c| !used.contains(c))
            .collect();
        let Some(&next) = candidates.first() else {
            break;
        };
        prefix.insert(0, next);
        used.insert(next);
        head = next;
    }
    Ok(Ray { prefix, ..ray })
}

/// Searches for a bypass with start index below `horizon`. Off-ray excursions
/// are explored depth-first; hitting the ray strictly later yields a bypass.
pub fn find_bypass(
    poset: &Poset,
    matching: &MorseMatching,
    ray: &Ray,
    horizon: usize,
) -> Result<Option<Bypass>> {
    find_bypass_in_range(poset, matching, ray, 0, horizon)
}

fn find_bypass_in_range(
    poset: &Poset,
    matching: &MorseMatching,
    ray: &Ray,
    start_from: usize,
    horizon: usize,
) -> Result<Option<Bypass>> {
    ray.validate(poset, matching)?;
    let q = QuotientHm::build(poset, matching).unwrap();
    let span = horizon + 2 * ray.cycle.edges.len() + 2;
    let elements = ray.elements(&q, span);
    let index: HashMap<ElementRef, usize> =
        elements.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let budget = 100_000usize;
    for n in start_from..horizon.min(elements.len().saturating_sub(1)) {
        let start = elements[n];
        for w in matching.modified_hasse_out(poset, start)? {
            if w == elements[n + 1] {
                continue;
            }
            if let Some(&m) = index.get(&w) {
                if m > n {
                    return Ok(Some(Bypass {
                        start_index: n,
                        end_index: m,
                        path: vec![start, w],
                    }));
                }
                continue;
            }
            // depth-first through off-ray elements
            let mut stack = vec![(w, vec![start, w])];
            let mut visited: BTreeSet<ElementRef> = BTreeSet::from([w]);
            let mut steps = 0usize;
            while let Some((at, path)) = stack.pop() {
                steps += 1;
                if steps > budget {
                    return Err(Error::BudgetExceeded(budget));
                }
                for next in matching.modified_hasse_out(poset, at)? {
                    if let Some(&m) = index.get(&next) {
                        if m > n {
                            let mut full = path.clone();
                            full.push(next);
                            return Ok(Some(Bypass {
                                start_index: n,
                                end_index: m,
                                path: full,
                            }));
                        }
                        continue;
                    }
                    if visited.insert(next) {
                        let mut full = path.clone();
                        full.push(next);
                        stack.push((next, full));
                    }
                }
            }
        }
    }
    Ok(None)
}

/// A bypass whose start and end sit in the uniform region recurs in every
/// later period by shift invariance; two explicit occurrences one period
/// apart certify it.
pub fn is_multiray(
    poset: &Poset,
    matching: &MorseMatching,
    ray: &Ray,
) -> Result<Option<(Bypass, u64)>> {
    if poset.is_finite() {
        return Ok(None);
    }
    ray.validate(poset, matching)?;
    let period_steps = ray.cycle.edges.len();
    let horizon = ray.prefix.len() + 4 * period_steps + 4;
    let Some(bypass) = find_bypass(poset, matching, ray, horizon)? else {
        return Ok(None);
    };
    // try to see the same bypass one period later
    let shift = ray.net();
    let shifted: Option<Vec<ElementRef>> = bypass
        .path
        .iter()
        .map(|&e| match e {
            ElementRef::Lifted { qcell, row } => Some(ElementRef::lifted(qcell, row + shift)),
            ElementRef::Finite(_) => None,
        })
        .collect();
    if let Some(shifted) = shifted {
        let mut genuine = true;
        for w in shifted.windows(2) {
            if !matching.modified_hasse_out(poset, w[0])?.contains(&w[1]) {
                genuine = false;
                break;
            }
        }
        if genuine {
            return Ok(Some((bypass, shift)));
        }
    }
    // fall back: a second bypass strictly further out
    let deeper = find_bypass_in_range(
        poset,
        matching,
        ray,
        bypass.end_index,
        horizon + 4 * period_steps,
    )?;
    Ok(deeper.map(|b| (b, shift)))
}

// ---------------------------------------------------------------------------
// reversal
// ---------------------------------------------------------------------------

/// Renames element references between a poset presentation and its re-blocked
/// form.
#[derive(Debug, Clone, Default)]
pub struct Relabeling {
    map: HashMap<ElementRef, ElementRef>,
    /// block size and base row of the re-blocking, for lifted cells beyond
    /// the explicit map
    block: Option<(u64, u64, HashMap<u32, Vec<u32>>)>,
}

impl Relabeling {
    pub fn apply(&self, r: ElementRef) -> ElementRef {
        if let Some(&mapped) = self.map.get(&r) {
            return mapped;
        }
        if let (Some((s, base, phases)), ElementRef::Lifted { qcell, row }) = (&self.block, r) {
            if row >= *base {
                let t = row - base;
                let new_q = phases[&qcell][(t % s) as usize];
                return ElementRef::lifted(new_q, t / s);
            }
        }
        r
    }
}

#[derive(Debug)]
pub struct ReversalOutcome {
    pub poset: Poset,
    pub matching: MorseMatching,
    pub new_critical: ElementRef,
    pub relabel: Option<Relabeling>,
}

/// Regroups rows into super-rows of size `s`, starting at `base`; rows below
/// `base` are materialized into the prefix. The result presents the same
/// poset with all arcs advancing at most one super-row.
fn re_block(pp: &PeriodicPoset, s: u64, base: u64) -> Result<(PeriodicPoset, Relabeling)> {
    assert!(s >= 2);
    let pat = &pp.pattern;
    let mut names = Vec::new();
    let mut qdeg = Vec::new();
    let mut phases: HashMap<u32, Vec<u32>> = HashMap::new();
    for q in 0..pat.len() as u32 {
        let mut ids = Vec::new();
        for phi in 0..s {
            ids.push(names.len() as u32);
            names.push(format!("{}#{}", pat.name(q), phi));
            qdeg.push(pat.degree(q));
        }
        phases.insert(q, ids);
    }
    let mut arcs: Vec<(String, String, i8)> = Vec::new();
    for arc in pat.arcs() {
        for phi in 0..s as i64 {
            let target = phi + arc.shift as i64;
            let (tphi, dshift) = if target < 0 {
                (target + s as i64, -1)
            } else if target >= s as i64 {
                (target - s as i64, 1)
            } else {
                (target, 0)
            };
            arcs.push((
                format!("{}#{}", pat.name(arc.upper), phi),
                format!("{}#{}", pat.name(arc.lower), tphi),
                dshift,
            ));
        }
    }
    let new_pattern = QuotientPattern::new(names, qdeg, arcs)?;

    // prefix: old prefix plus materialized rows 0..base
    let mut pnames: Vec<String> = pp.prefix.names().to_vec();
    let mut pdeg: Vec<usize> = (0..pp.prefix.len() as u32)
        .map(|i| pp.prefix.degree(i))
        .collect();
    let mut index: HashMap<String, u32> = pnames
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), i as u32))
        .collect();
    for row in 0..base {
        for q in 0..pat.len() as u32 {
            index.insert(format!("{}@{row}", pat.name(q)), pnames.len() as u32);
            pnames.push(format!("{}@{row}", pat.name(q)));
            pdeg.push(pat.degree(q));
        }
    }
    let mut pcovers: Vec<(u32, u32)> = pp.prefix.covers().collect();
    let mut glue: Vec<Glue> = Vec::new();
    // old glue: between prefix and old row 0
    for g in &pp.glue {
        if base == 0 {
            let map_side = |side: SeamSide| match side {
                SeamSide::Prefix(i) => SeamSide::Prefix(i),
                SeamSide::Pattern(q) => SeamSide::Pattern(phases[&q][0]),
            };
            glue.push(Glue {
                upper: map_side(g.upper),
                lower: map_side(g.lower),
            });
        } else {
            let map_side = |side: &SeamSide| match side {
                SeamSide::Prefix(i) => *i,
                SeamSide::Pattern(q) => index[&format!("{}@0", pat.name(*q))],
            };
            pcovers.push((map_side(&g.upper), map_side(&g.lower)));
        }
    }
    // old arcs with both endpoints below base become prefix covers; those
    // crossing the boundary become glue
    for arc in pat.arcs() {
        for row in 0..base {
            let target = row as i64 + arc.shift as i64;
            if target < 0 {
                continue;
            }
            let upper_name = format!("{}@{row}", pat.name(arc.upper));
            if (target as u64) < base {
                let lower_name = format!("{}@{target}", pat.name(arc.lower));
                pcovers.push((index[&upper_name], index[&lower_name]));
            } else {
                // target lands in the new pattern at row (target - base)
                let t = target as u64 - base;
                glue.push(Glue {
                    upper: SeamSide::Prefix(index[&upper_name]),
                    lower: SeamSide::Pattern(phases[&arc.lower][(t % s) as usize]),
                });
                debug_assert_eq!(t / s, 0, "arc shifts are within one row");
            }
        }
        // arcs from new row 0 down into the prefix
        if base > 0 && arc.shift == -1 {
            let lower_name = format!("{}@{}", pat.name(arc.lower), base - 1);
            glue.push(Glue {
                upper: SeamSide::Pattern(phases[&arc.upper][0]),
                lower: SeamSide::Prefix(index[&lower_name]),
            });
        }
    }
    let new_prefix = FiniteGradedPoset::assemble(pnames, pdeg, pcovers)?;
    let new_poset = PeriodicPoset::new(new_pattern, new_prefix, glue)?;
    let mut relabel = Relabeling {
        map: HashMap::new(),
        block: Some((s, base, phases)),
    };
    // old prefix cells keep their names; old lifted cells below base become
    // prefix cells
    for i in 0..pp.prefix.len() as u32 {
        let name = pp.prefix.name(i).to_string();
        let new_i = new_poset.prefix.lookup(&name).unwrap();
        relabel
            .map
            .insert(ElementRef::Finite(i), ElementRef::Finite(new_i));
    }
    for row in 0..base {
        for q in 0..pat.len() as u32 {
            let name = format!("{}@{row}", pat.name(q));
            let new_i = new_poset.prefix.lookup(&name).unwrap();
            relabel
                .map
                .insert(ElementRef::lifted(q, row), ElementRef::Finite(new_i));
        }
    }
    Ok((new_poset, relabel))
}

/// Carries a matching across a re-blocking: arc selections become selections
/// of every phase copy, and instances whose upper row fell below the base are
/// frozen into explicit pairs.
fn relabel_matching(
    old_poset: &Poset,
    new_poset: &Poset,
    matching: &MorseMatching,
    relabel: &Relabeling,
    s: u64,
    base: u64,
) -> Result<MorseMatching> {
    let Poset::Periodic(opp) = old_poset else {
        unreachable!()
    };
    let Poset::Periodic(npp) = new_poset else {
        unreachable!()
    };
    let mut pairs: Vec<(ElementRef, ElementRef)> = matching
        .pairs()
        .iter()
        .map(|&(u, l)| (relabel.apply(u), relabel.apply(l)))
        .collect();
    // freeze arc instances whose upper row is below base (or whose pair
    // crosses the boundary)
    for &k in matching.selected_arcs() {
        let arc = opp.pattern.arc(k);
        for row in matching.tail_from()..base {
            let lower = row as i64 + arc.shift as i64;
            if lower < 0 {
                continue;
            }
            pairs.push((
                relabel.apply(ElementRef::lifted(arc.upper, row)),
                relabel.apply(ElementRef::lifted(arc.lower, lower as u64)),
            ));
        }
        // the instance whose upper row is the first pattern row but whose
        // lower cell fell into the prefix is not expressible by the new arcs
        if arc.shift == -1 && base >= 1 && base >= matching.tail_from() {
            pairs.push((
                relabel.apply(ElementRef::lifted(arc.upper, base)),
                relabel.apply(ElementRef::lifted(arc.lower, base - 1)),
            ));
        }
    }
    // arc selection: all phase copies
    let mut selection = Vec::new();
    for &k in matching.selected_arcs() {
        let arc = opp.pattern.arc(k);
        for phi in 0..s {
            let upper_name = format!("{}#{}", opp.pattern.name(arc.upper), phi);
            let uq = npp.pattern.lookup(&upper_name).unwrap();
            let target = phi as i64 + arc.shift as i64;
            let (tphi, dshift) = if target < 0 {
                (target + s as i64, -1i8)
            } else if target >= s as i64 {
                (target - s as i64, 1)
            } else {
                (target, 0)
            };
            let lower_name = format!("{}#{}", opp.pattern.name(arc.lower), tphi);
            let lq = npp.pattern.lookup(&lower_name).unwrap();
            let idx = npp
                .pattern
                .arcs()
                .iter()
                .position(|a| a.upper == uq && a.lower == lq && a.shift == dshift)
                .unwrap();
            selection.push(idx as u32);
        }
    }
    // pairs frozen above may duplicate what the new arcs cover from row 0 on;
    // drop any pair that the new selection already matches
    let probe = MorseMatching::build(new_poset, Vec::new(), selection.clone(), 0)?;
    pairs.retain(|&(u, l)| !probe.is_matched_pair(new_poset, u, l));
    MorseMatching::build(new_poset, pairs, selection, 0)
}

/// Reverses the matched pairs one step along a normalized, bypass-free ray,
/// making its first element critical and removing its class.
pub fn reverse_ray(poset: &Poset, matching: &MorseMatching, ray: &Ray) -> Result<ReversalOutcome> {
    ray.validate(poset, matching)?;
    let info = ray_degree(poset, matching, ray)?;
    if info.first_index != 0 {
        return Err(Error::NotNormalized(format!(
            "minimal degree is first attained at index {}",
            info.first_index
        )));
    }
    let horizon = ray.prefix.len() + 3 * ray.cycle.edges.len() + 3;
    if let Some(b) = find_bypass(poset, matching, ray, horizon)? {
        return Err(Error::HasBypass(b.start_index));
    }
    let Poset::Periodic(pp) = poset else {
        return Err(Error::InvalidRay("finite posets have no rays".into()));
    };

    let s = ray.net();
    let (work_poset, work_matching, work_ray, relabel) = if s >= 2 {
        // block from the lowest row the cycle lift touches, so the whole
        // periodic part stays inside the new pattern
        let q_pre = QuotientHm::build(poset, matching).unwrap();
        let dip = (-q_pre.min_cumulative(&ray.cycle.edges)) as u64;
        let base = ray.base_row - dip;
        if base <= matching.uniform_from() {
            return Err(Error::InvalidRay(format!(
                "ray base row {} sits inside the explicit region; re-base the ray one \
                 period up",
                ray.base_row
            )));
        }
        let (new_pp, relabel) = re_block(pp, s, base)?;
        let new_poset = Poset::Periodic(new_pp);
        let new_matching = relabel_matching(poset, &new_poset, matching, &relabel, s, base)?;
        // the ray's cycle now advances one super-row per period from row 0
        let new_prefix: Vec<ElementRef> = ray.prefix.iter().map(|&r| relabel.apply(r)).collect();
        let q_old = QuotientHm::build(poset, matching).unwrap();
        let old_lift = {
            let mut edges = Vec::new();
            for _ in 0..2 {
                edges.extend_from_slice(&ray.cycle.edges);
            }
            q_old.lift(ray.start_node(), ray.base_row, &edges)
        };
        let new_elements: Vec<ElementRef> = old_lift.iter().map(|&r| relabel.apply(r)).collect();
        let q_new = QuotientHm::build(&new_poset, &new_matching).unwrap();
        let new_cycle = cycle_from_elements(&q_new, &new_elements, ray.cycle.edges.len())?;
        let work_ray = Ray {
            prefix: new_prefix,
            cycle: new_cycle,
            base_row: new_elements[0].row().unwrap(),
        };
        work_ray.validate(&new_poset, &new_matching)?;
        (new_poset, new_matching, work_ray, Some(relabel))
    } else {
        (poset.clone(), matching.clone(), ray.clone(), None)
    };

    let outcome = reverse_unit_ray(&work_poset, &work_matching, &work_ray)?;
    // contract checks: acyclicity kept, critical set grows by exactly the
    // ray start
    match is_acyclic(&work_poset, &outcome.0)? {
        crate::matching::AcyclicityVerdict::Acyclic => {}
        crate::matching::AcyclicityVerdict::Cyclic { witness } => {
            return Err(Error::AcyclicityLost(format!(
                "cycle through {}",
                work_poset.display_ref(witness[0])
            )))
        }
    }
    let old_crit = critical_cells(&work_poset, &work_matching);
    let new_crit = critical_cells(&work_poset, &outcome.0);
    let rows = old_crit.horizon.max(new_crit.horizon) + 2;
    let mut probe_elements: Vec<ElementRef> = Vec::new();
    if let Poset::Periodic(wpp) = &work_poset {
        probe_elements.extend((0..wpp.prefix.len() as u32).map(ElementRef::Finite));
        for row in 0..rows {
            for qc in 0..wpp.pattern.len() as u32 {
                probe_elements.push(ElementRef::lifted(qc, row));
            }
        }
    }
    for &x in &probe_elements {
        let was = work_matching.is_critical(&work_poset, x);
        let now = outcome.0.is_critical(&work_poset, x);
        let expected_flip = x == outcome.1;
        if (was != now) != expected_flip {
            return Err(Error::AcyclicityLost(format!(
                "critical status of {} changed unexpectedly",
                work_poset.display_ref(x)
            )));
        }
    }
    Ok(ReversalOutcome {
        poset: work_poset,
        matching: outcome.0,
        new_critical: outcome.1,
        relabel,
    })
}

/// Reads the quotient cycle off a lifted element path (net shift one per
/// period).
fn cycle_from_elements(q: &QuotientHm, elements: &[ElementRef], len: usize) -> Result<QCycle> {
    let mut edges = Vec::with_capacity(len);
    let mut nodes = Vec::with_capacity(len);
    for w in elements.windows(2).take(len) {
        let (ElementRef::Lifted { qcell: a, row: ra }, ElementRef::Lifted { qcell: b, row: rb }) =
            (w[0], w[1])
        else {
            return Err(Error::InvalidRay(
                "re-blocked cycle left the pattern".into(),
            ));
        };
        let shift = rb as i64 - ra as i64;
        let e = q
            .edges
            .iter()
            .position(|e| e.from == a && e.to == b && e.shift as i64 == shift)
            .ok_or_else(|| Error::InvalidRay("missing quotient edge after re-block".into()))?;
        nodes.push(a);
        edges.push(e as u32);
    }
    let net = edges
        .iter()
        .map(|&e| q.edges[e as usize].shift as i64)
        .sum();
    Ok(QCycle { edges, nodes, net })
}

/// The actual pair swap for a net-shift-one ray: pairs with upper row below
/// the cut become explicit (shifted one step along the ray), the tail is
/// re-expressed by swapping the arc selection along the cycle.
fn reverse_unit_ray(
    poset: &Poset,
    matching: &MorseMatching,
    ray: &Ray,
) -> Result<(MorseMatching, ElementRef)> {
    let Poset::Periodic(pp) = poset else {
        unreachable!()
    };
    let q = QuotientHm::build(poset, matching).unwrap();
    let span = {
        let mut cum = 0i64;
        let mut max = 0i64;
        let mut min = 0i64;
        for &e in &ray.cycle.edges {
            cum += q.edges[e as usize].shift as i64;
            max = max.max(cum);
            min = min.min(cum);
        }
        (max - min) as u64 + 1
    };
    let cut = matching.uniform_from().max(ray.base_row) + span + 1;

    // swapped arc selection along the cycle: drop the reversed (matched)
    // edges' arcs, select the following unmatched cover's arc
    let len = ray.cycle.edges.len();
    let mut selection: BTreeSet<u32> = matching.selected_arcs().iter().copied().collect();
    for i in 0..len {
        let e = q.edges[ray.cycle.edges[i] as usize];
        if e.reversed {
            let follow = q.edges[ray.cycle.edges[(i + 1) % len] as usize];
            if follow.reversed {
                return Err(Error::InvalidRay(
                    "ray cycle has consecutive matched arrows".into(),
                ));
            }
            selection.remove(&e.arc);
            selection.insert(follow.arc);
        }
    }

    // explicit pairs: freeze every old arc instance below the cut, then swap
    // the ray pairs among them
    let mut pairs: BTreeSet<(ElementRef, ElementRef)> = matching.pairs().iter().copied().collect();
    for &k in matching.selected_arcs() {
        let arc = pp.pattern.arc(k);
        for row in matching.tail_from()..cut {
            let lower = row as i64 + arc.shift as i64;
            if lower < 0 {
                continue;
            }
            pairs.insert((
                ElementRef::lifted(arc.upper, row),
                ElementRef::lifted(arc.lower, lower as u64),
            ));
        }
    }
    // Walk enough ray pairs that everything below the cut is certainly seen;
    // rows along a period are not monotone, so walk past the cut by a full
    // extra span before stopping.
    let count = ray.prefix.len() + (len + 2) * ((cut - ray.base_row) as usize + span as usize + 4);
    let elements = ray.elements(&q, count);
    let mut k = 0;
    while k + 2 < elements.len() {
        let lower = elements[k];
        let upper = elements[k + 1];
        if matching.partner(poset, lower) != Some((upper, Role::Lower)) {
            return Err(Error::NotNormalized(format!(
                "{} is not matched with {}",
                poset.display_ref(lower),
                poset.display_ref(upper)
            )));
        }
        if upper.row().is_none_or(|r| r < cut) {
            if !pairs.remove(&(upper, lower)) {
                return Err(Error::NotNormalized(format!(
                    "expected explicit pair ({}, {})",
                    poset.display_ref(upper),
                    poset.display_ref(lower)
                )));
            }
            pairs.insert((upper, elements[k + 2]));
        } else if upper.row().unwrap() >= cut + span + 2 {
            // every later pair sits above the cut for good
            break;
        }
        k += 2;
    }
    // drop pairs that the swapped arc selection now covers
    let selection: Vec<u32> = selection.into_iter().collect();
    let probe = MorseMatching::build(poset, Vec::new(), selection.clone(), cut)?;
    let pairs: Vec<(ElementRef, ElementRef)> = pairs
        .into_iter()
        .filter(|&(u, l)| !probe.is_matched_pair(poset, u, l))
        .collect();
    let new_matching = MorseMatching::build(poset, pairs, selection, cut)?;
    Ok((new_matching, elements[0]))
}

/// Reverses every ray class, producing a rayless matching and the map from
/// class keys to their new critical cells. Classes are re-enumerated after
/// each reversal.
pub fn make_rayless(
    poset: &Poset,
    matching: &MorseMatching,
) -> Result<(Poset, MorseMatching, Vec<(RayDescription, ElementRef)>)> {
    let mut cur_poset = poset.clone();
    let mut cur_matching = matching.clone();
    let mut log: Vec<(RayDescription, ElementRef)> = Vec::new();
    let mut last_count = usize::MAX;
    loop {
        let classes = match enumerate_rays(&cur_poset, &cur_matching)? {
            RayEnumeration::Multiray(ev) => {
                return Err(Error::MultirayPresent(ev.reason));
            }
            RayEnumeration::Classes(set) => set.classes,
        };
        if classes.is_empty() {
            break;
        }
        if classes.len() >= last_count {
            return Err(Error::AcyclicityLost(
                "reversal did not reduce the number of ray classes".into(),
            ));
        }
        last_count = classes.len();
        let ray = normalize_ray(&cur_poset, &cur_matching, &classes[0])?;
        let description = ray.describe(&cur_poset, &cur_matching);
        let outcome = reverse_ray(&cur_poset, &cur_matching, &ray)?;
        if let Some(relabel) = &outcome.relabel {
            for (_, cell) in log.iter_mut() {
                *cell = relabel.apply(*cell);
            }
        }
        log.push((description, outcome.new_critical));
        cur_poset = outcome.poset;
        cur_matching = outcome.matching;
    }
    match is_rayless(&cur_poset, &cur_matching)? {
        RaylessVerdict::Rayless => {}
        RaylessVerdict::HasRay { .. } => {
            return Err(Error::AcyclicityLost("result still has a ray".into()))
        }
    }
    Ok((cur_poset, cur_matching, log))
}

/// Critical cell counts per degree after reversal: explicit criticals plus
/// one cell per ray class.
pub fn pm_cell_counts(
    poset: &Poset,
    matching: &MorseMatching,
) -> Result<(Vec<usize>, Vec<usize>, i64)> {
    let enumeration = enumerate_rays(poset, matching)?;
    let classes = match enumeration {
        RayEnumeration::Multiray(ev) => return Err(Error::MultirayPresent(ev.reason)),
        RayEnumeration::Classes(set) => set,
    };
    let crit = critical_cells(poset, matching);
    if !crit.is_finite() {
        return Err(Error::InfiniteCriticalCells(
            "a pattern cell is critical in every row".into(),
        ));
    }
    let m: Vec<usize> = crit
        .counts()
        .iter()
        .map(|c| match c {
            crate::homology::Count::Finite(n) => *n,
            crate::homology::Count::Infinite => unreachable!(),
        })
        .collect();
    let r = classes.degree_counts(poset, matching);
    let len = m.len().max(r.len());
    let mut euler = 0i64;
    for i in 0..len {
        let total = (m.get(i).copied().unwrap_or(0) + r.get(i).copied().unwrap_or(0)) as i64;
        euler += if i % 2 == 0 { total } else { -total };
    }
    Ok((m, r, euler))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_line() -> Poset {
        let pattern = QuotientPattern::new(
            vec!["v".into(), "e".into()],
            vec![0, 1],
            vec![("e".into(), "v".into(), 0), ("e".into(), "v".into(), 1)],
        )
        .unwrap();
        Poset::Periodic(
            PeriodicPoset::new(pattern, FiniteGradedPoset::empty(), Vec::new()).unwrap(),
        )
    }

    fn classes_of(poset: &Poset, matching: &MorseMatching) -> Vec<Ray> {
        match enumerate_rays(poset, matching).unwrap() {
            RayEnumeration::Classes(set) => set.classes,
            RayEnumeration::Multiray(ev) => panic!("unexpected multiray: {}", ev.reason),
        }
    }

    #[test]
    fn half_line_one_class_degree_zero() {
        let p = half_line();
        let m = MorseMatching::build(&p, Vec::new(), vec![0], 0).unwrap();
        let classes = classes_of(&p, &m);
        assert_eq!(classes.len(), 1);
        let ray = &classes[0];
        ray.validate(&p, &m).unwrap();
        let deg = ray_degree(&p, &m, ray).unwrap();
        assert_eq!(deg.degree, 0);
        // the maximal prefix extension reaches the bottom of the half-line
        assert_eq!(ray.prefix.first(), Some(&ElementRef::lifted(0, 0)));
    }

    #[test]
    fn finite_poset_no_classes() {
        let p = Poset::Finite(
            FiniteGradedPoset::from_covers(
                vec!["a".into(), "b".into(), "e".into()],
                vec![("e".into(), "a".into()), ("e".into(), "b".into())],
            )
            .unwrap(),
        );
        let m = MorseMatching::empty(&p);
        assert!(classes_of(&p, &m).is_empty());
    }

    fn two_half_lines() -> (Poset, MorseMatching) {
        let pattern = QuotientPattern::new(
            vec!["va".into(), "ea".into(), "vb".into(), "eb".into()],
            vec![0, 1, 0, 1],
            vec![
                ("ea".into(), "va".into(), 0),
                ("ea".into(), "va".into(), 1),
                ("eb".into(), "vb".into(), 0),
                ("eb".into(), "vb".into(), 1),
            ],
        )
        .unwrap();
        let p = Poset::Periodic(
            PeriodicPoset::new(pattern, FiniteGradedPoset::empty(), Vec::new()).unwrap(),
        );
        let m = MorseMatching::build(&p, Vec::new(), vec![0, 2], 0).unwrap();
        (p, m)
    }

    #[test]
    fn parallel_half_lines_two_classes() {
        let (p, m) = two_half_lines();
        let classes = classes_of(&p, &m);
        assert_eq!(classes.len(), 2);
        assert!(!are_equivalent(&p, &m, &classes[0], &classes[1]).unwrap());
        // extending a prefix by one step keeps the class
        let r = &classes[0];
        let shorter = Ray {
            prefix: r.prefix[1..].to_vec(),
            cycle: r.cycle.clone(),
            base_row: r.base_row,
        };
        assert!(are_equivalent(&p, &m, r, &shorter).unwrap());
    }

    #[test]
    fn parallel_half_lines_reverse_one() {
        let (p, m) = two_half_lines();
        let classes = classes_of(&p, &m);
        let ray = normalize_ray(&p, &m, &classes[0]).unwrap();
        let out = reverse_ray(&p, &m, &ray).unwrap();
        assert!(out.relabel.is_none());
        let rest = classes_of(&out.poset, &out.matching);
        assert_eq!(rest.len(), 1);
        // the surviving class is the other one
        let old_other = &classes[1];
        assert!(are_equivalent(&out.poset, &out.matching, &rest[0], old_other).unwrap());
        assert!(out.matching.is_critical(&out.poset, out.new_critical));
    }

    #[test]
    fn shift_two_phases() {
        // a@i matched with f@(i+1); the ray advances two rows per period
        let pattern = QuotientPattern::new(
            vec!["a".into(), "f".into()],
            vec![0, 1],
            vec![("f".into(), "a".into(), -1), ("f".into(), "a".into(), 1)],
        )
        .unwrap();
        let p = Poset::Periodic(
            PeriodicPoset::new(pattern, FiniteGradedPoset::empty(), Vec::new()).unwrap(),
        );
        let m = MorseMatching::build(&p, Vec::new(), vec![0], 0).unwrap();
        assert!(crate::matching::is_acyclic(&p, &m).unwrap().is_acyclic());
        let classes = classes_of(&p, &m);
        assert_eq!(classes.len(), 2);
        assert!(!are_equivalent(&p, &m, &classes[0], &classes[1]).unwrap());
        // reversal re-blocks the pattern
        let ray = normalize_ray(&p, &m, &classes[0]).unwrap();
        let out = reverse_ray(&p, &m, &ray).unwrap();
        assert!(out.relabel.is_some());
        let rest = classes_of(&out.poset, &out.matching);
        assert_eq!(rest.len(), 1);
        assert!(out.matching.is_critical(&out.poset, out.new_critical));
    }

    #[test]
    fn shift_two_reblock_with_prefix_and_glue() {
        // same two-row climb, but hanging off an explicit prefix vertex
        let pattern = QuotientPattern::new(
            vec!["a".into(), "f".into()],
            vec![0, 1],
            vec![("f".into(), "a".into(), -1), ("f".into(), "a".into(), 1)],
        )
        .unwrap();
        let prefix = FiniteGradedPoset::from_covers(vec!["p0".into()], vec![]).unwrap();
        let glue = vec![crate::poset::Glue {
            upper: crate::poset::SeamSide::Pattern(1),
            lower: crate::poset::SeamSide::Prefix(0),
        }];
        let p = Poset::Periodic(PeriodicPoset::new(pattern, prefix, glue).unwrap());
        let m = MorseMatching::build(&p, Vec::new(), vec![0], 0).unwrap();
        assert!(crate::matching::is_acyclic(&p, &m).unwrap().is_acyclic());
        let classes = classes_of(&p, &m);
        assert_eq!(classes.len(), 2);
        let ray = normalize_ray(&p, &m, &classes[0]).unwrap();
        let out = reverse_ray(&p, &m, &ray).unwrap();
        assert!(out.relabel.is_some());
        // the re-blocked presentation absorbed the glue into its prefix and
        // still has one surviving class
        let rest = classes_of(&out.poset, &out.matching);
        assert_eq!(rest.len(), 1);
        assert!(out.matching.is_critical(&out.poset, out.new_critical));
        if let Poset::Periodic(pp) = &out.poset {
            assert!(pp.prefix.lookup("p0").is_some());
        } else {
            panic!("still periodic");
        }
        // and the whole thing reverses to rayless
        let (p3, m3, _) = make_rayless(&out.poset, &out.matching).unwrap();
        assert!(crate::matching::is_rayless(&p3, &m3).unwrap().is_rayless());
    }

    #[test]
    fn half_line_no_bypass() {
        let p = half_line();
        let m = MorseMatching::build(&p, Vec::new(), vec![0], 0).unwrap();
        let classes = classes_of(&p, &m);
        assert!(find_bypass(&p, &m, &classes[0], 20).unwrap().is_none());
        assert!(find_bypass(&p, &m, &classes[0], 0).unwrap().is_none());
        assert!(is_multiray(&p, &m, &classes[0]).unwrap().is_none());
    }

    pub(crate) fn bypass_ladder() -> (Poset, MorseMatching) {
        let pattern = QuotientPattern::new(
            vec!["z".into(), "g".into(), "h".into(), "A".into(), "B".into()],
            vec![0, 1, 1, 2, 2],
            vec![
                ("g".into(), "z".into(), 0),
                ("h".into(), "z".into(), 0),
                ("A".into(), "g".into(), 0),
                ("A".into(), "g".into(), 1),
                ("A".into(), "h".into(), 0),
                ("B".into(), "h".into(), 0),
                ("B".into(), "g".into(), 1),
            ],
        )
        .unwrap();
        let p = Poset::Periodic(
            PeriodicPoset::new(pattern, FiniteGradedPoset::empty(), Vec::new()).unwrap(),
        );
        // match A with g (same row) and B with h (same row)
        let m = MorseMatching::build(&p, Vec::new(), vec![2, 5], 0).unwrap();
        (p, m)
    }

    #[test]
    fn ladder_has_recurring_bypass() {
        let (p, m) = bypass_ladder();
        assert!(crate::matching::is_acyclic(&p, &m).unwrap().is_acyclic());
        match enumerate_rays(&p, &m).unwrap() {
            RayEnumeration::Multiray(ev) => {
                let bypass = ev.bypass.expect("recurring bypass certificate");
                assert!(bypass.end_index > bypass.start_index);
                assert!(ev.recurrence_period.is_some());
            }
            RayEnumeration::Classes(_) => panic!("expected multiray"),
        }
        let err = make_rayless(&p, &m).unwrap_err();
        assert!(matches!(err, Error::MultirayPresent(_)));
    }

    #[test]
    fn reversing_a_bypassed_ray_is_refused() {
        let (p, m) = bypass_ladder();
        // the main ray alternates g and A with net shift one
        let q = QuotientHm::build(&p, &m).unwrap();
        let cycles: Vec<QCycle> = q
            .simple_cycles()
            .into_iter()
            .filter(|c| c.net > 0 && c.edges.len() == 2)
            .collect();
        let cycle = cycles.into_iter().next().unwrap();
        let ray = Ray {
            prefix: Vec::new(),
            cycle,
            base_row: 2,
        };
        let ray = normalize_ray(&p, &m, &ray).unwrap();
        let err = reverse_ray(&p, &m, &ray).unwrap_err();
        assert!(matches!(err, Error::HasBypass(_)));
    }

    #[test]
    fn unnormalized_ray_is_refused() {
        let p = half_line();
        let m = MorseMatching::build(&p, Vec::new(), vec![0], 0).unwrap();
        let classes = classes_of(&p, &m);
        // chop the representative so it starts on a degree-1 element
        let full = &classes[0];
        let start = full
            .prefix
            .iter()
            .position(|r| p.degree(*r) == 1)
            .expect("prefix passes through an edge");
        let crooked = Ray {
            prefix: full.prefix[start..].to_vec(),
            cycle: full.cycle.clone(),
            base_row: full.base_row,
        };
        let err = reverse_ray(&p, &m, &crooked).unwrap_err();
        assert!(matches!(err, Error::NotNormalized(_)));
    }

    #[test]
    fn half_line_reversal_contract() {
        let p = half_line();
        let m = MorseMatching::build(&p, Vec::new(), vec![0], 0).unwrap();
        let (p2, m2, log) = make_rayless(&p, &m).unwrap();
        assert_eq!(log.len(), 1);
        assert_eq!(log[0].1, ElementRef::lifted(0, 0));
        assert!(crate::matching::is_rayless(&p2, &m2).unwrap().is_rayless());
        let crit = critical_cells(&p2, &m2);
        assert_eq!(crit.total_explicit(), 1);
        assert_eq!(crit.all_explicit(), vec![ElementRef::lifted(0, 0)]);
        assert!(crit.is_finite());
        // the reversed matching pairs e@n with v@(n+1), same as selecting the
        // shifted arc directly
        let direct = MorseMatching::build(&p2, Vec::new(), vec![1], 0).unwrap();
        for row in 0..12u64 {
            for q in 0..2u32 {
                let x = ElementRef::lifted(q, row);
                assert_eq!(
                    m2.partner(&p2, x).map(|(o, _)| o),
                    direct.partner(&p2, x).map(|(o, _)| o),
                    "partner mismatch at {q}@{row}"
                );
            }
        }
    }

    #[test]
    fn already_rayless_unchanged() {
        let p = half_line();
        let m = MorseMatching::build(&p, Vec::new(), vec![1], 0).unwrap();
        let (_, m2, log) = make_rayless(&p, &m).unwrap();
        assert!(log.is_empty());
        assert_eq!(m2.pairs().len(), m.pairs().len());
        assert_eq!(m2.selected_arcs(), m.selected_arcs());
    }

    #[test]
    fn pm_counts_half_line() {
        let p = half_line();
        let m = MorseMatching::build(&p, Vec::new(), vec![0], 0).unwrap();
        let (mc, rc, euler) = pm_cell_counts(&p, &m).unwrap();
        assert!(mc.iter().all(|&c| c == 0));
        assert_eq!(rc, vec![1]);
        assert_eq!(euler, 1);
    }

    #[test]
    fn equivalence_is_an_equivalence_on_samples() {
        let (p, m) = two_half_lines();
        let classes = classes_of(&p, &m);
        for a in &classes {
            assert!(are_equivalent(&p, &m, a, a).unwrap());
            for b in &classes {
                let ab = are_equivalent(&p, &m, a, b).unwrap();
                let ba = are_equivalent(&p, &m, b, a).unwrap();
                assert_eq!(ab, ba);
                if ab {
                    // equivalent rays share their degree
                    assert_eq!(
                        ray_degree(&p, &m, a).unwrap().degree,
                        ray_degree(&p, &m, b).unwrap().degree
                    );
                }
            }
        }
    }
}
