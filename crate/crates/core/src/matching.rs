//! Morse matchings and the modified Hasse digraph H_M.
//!
//! A matching pairs cover relations; reversing the matched arrows of the
//! Hasse diagram gives H_M. On a periodic poset the matching is an arc
//! selection on the pattern (one lifted pair per row) together with finitely
//! many explicit pairs near the prefix. Acyclicity and raylessness reduce to
//! closed-walk analysis of a shift-labeled quotient of H_M:
//!
//! * H_M has a directed cycle iff the quotient has a closed walk of net shift
//!   zero (equivalently, some strongly connected component carries a simple
//!   cycle of net zero or simple cycles of both signs), or an explicit cycle
//!   through the finite region.
//! * H_M has a decreasing ray iff the quotient has a simple cycle of positive
//!   net shift; rows are bounded below, so negative drift cannot continue
//!   forever.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::homology::Count;
use crate::poset::{ElementRef, Poset};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Upper,
    Lower,
}

/// A validated Morse matching: explicit cover pairs plus, for periodic
/// posets, a shift-uniform arc selection applying to all rows with upper row
/// at least `tail_from`.
#[derive(Debug, Clone)]
pub struct MorseMatching {
    pairs: Vec<(ElementRef, ElementRef)>,
    by_element: HashMap<ElementRef, (usize, Role)>,
    selected_arcs: Vec<u32>,
    arc_of_qcell: Vec<Option<u32>>,
    tail_from: u64,
}

impl MorseMatching {
    /// Every explicit pair must be a cover pair, no element may be matched
    /// twice, and on the pattern each cell may be an endpoint of at most one
    /// selected arc. Explicit pairs on lifted cells must not collide with arc
    /// instances.
    pub fn build(
        poset: &Poset,
        pairs: Vec<(ElementRef, ElementRef)>,
        arc_selection: Vec<u32>,
        tail_from: u64,
    ) -> Result<MorseMatching> {
        let mut arc_of_qcell = Vec::new();
        let mut selected_arcs = arc_selection;
        selected_arcs.sort_unstable();
        selected_arcs.dedup();
        if let Poset::Periodic(pp) = poset {
            arc_of_qcell = vec![None; pp.pattern.len()];
            for &k in &selected_arcs {
                let arc = pp
                    .pattern
                    .arcs()
                    .get(k as usize)
                    .copied()
                    .ok_or_else(|| Error::NotACover(format!("no pattern arc #{k}")))?;
                for q in [arc.upper, arc.lower] {
                    if let Some(prev) = arc_of_qcell[q as usize] {
                        if prev != k {
                            return Err(Error::Overlap(format!(
                                "pattern cell {} is an endpoint of two selected arcs",
                                pp.pattern.name(q)
                            )));
                        }
                    }
                    arc_of_qcell[q as usize] = Some(k);
                }
            }
        } else if !selected_arcs.is_empty() {
            return Err(Error::NotACover("arc selection on a finite poset".into()));
        }

        let mut pairs = pairs;
        pairs.sort();
        pairs.dedup();
        let mut matching = MorseMatching {
            pairs: Vec::new(),
            by_element: HashMap::new(),
            selected_arcs,
            arc_of_qcell,
            tail_from,
        };
        for (i, &(upper, lower)) in pairs.iter().enumerate() {
            if !poset.is_cover(upper, lower) {
                return Err(Error::NotACover(format!(
                    "{} does not cover {}",
                    poset.display_ref(upper),
                    poset.display_ref(lower)
                )));
            }
            for (x, role) in [(upper, Role::Upper), (lower, Role::Lower)] {
                if matching.by_element.insert(x, (i, role)).is_some() {
                    return Err(Error::Overlap(poset.display_ref(x)));
                }
                let arc_hit = match poset {
                    Poset::Periodic(pp) => Self::arc_partner_impl(
                        &matching.arc_of_qcell,
                        tail_from,
                        pp.pattern.arcs(),
                        x,
                    )
                    .is_some(),
                    Poset::Finite(_) => false,
                };
                if arc_hit {
                    return Err(Error::Overlap(format!(
                        "{} is matched both explicitly and by a selected arc",
                        poset.display_ref(x)
                    )));
                }
            }
        }
        matching.pairs = pairs;
        Ok(matching)
    }

    pub fn empty(poset: &Poset) -> MorseMatching {
        Self::build(poset, Vec::new(), Vec::new(), 0).expect("empty matching is valid")
    }

    pub fn pairs(&self) -> &[(ElementRef, ElementRef)] {
        &self.pairs
    }

    pub fn selected_arcs(&self) -> &[u32] {
        &self.selected_arcs
    }

    pub fn tail_from(&self) -> u64 {
        self.tail_from
    }

    fn arc_partner_impl(
        arc_of_qcell: &[Option<u32>],
        tail_from: u64,
        poset_arcs: &[crate::poset::Arc],
        x: ElementRef,
    ) -> Option<(ElementRef, Role)> {
        let ElementRef::Lifted { qcell, row } = x else {
            return None;
        };
        let k = (*arc_of_qcell.get(qcell as usize)?)?;
        let arc = poset_arcs[k as usize];
        if arc.upper == qcell {
            let lower_row = row as i64 + arc.shift as i64;
            if row >= tail_from && lower_row >= 0 {
                return Some((ElementRef::lifted(arc.lower, lower_row as u64), Role::Upper));
            }
        } else {
            let upper_row = row as i64 - arc.shift as i64;
            if upper_row >= 0 && upper_row as u64 >= tail_from {
                return Some((ElementRef::lifted(arc.upper, upper_row as u64), Role::Lower));
            }
        }
        None
    }

    /// The matched partner of `x` and the role `x` plays in the pair.
    pub fn partner(&self, poset: &Poset, x: ElementRef) -> Option<(ElementRef, Role)> {
        if let Some(&(i, role)) = self.by_element.get(&x) {
            let (u, l) = self.pairs[i];
            let other = match role {
                Role::Upper => l,
                Role::Lower => u,
            };
            return Some((other, role));
        }
        if let Poset::Periodic(pp) = poset {
            return Self::arc_partner_impl(
                &self.arc_of_qcell,
                self.tail_from,
                pp.pattern.arcs(),
                x,
            );
        }
        None
    }

    pub fn is_matched_pair(&self, poset: &Poset, upper: ElementRef, lower: ElementRef) -> bool {
        self.partner(poset, upper) == Some((lower, Role::Upper))
    }

    pub fn is_critical(&self, poset: &Poset, x: ElementRef) -> bool {
        self.partner(poset, x).is_none()
    }

    /// First row from which the matching is purely arc-uniform: no explicit
    /// pair touches a lifted cell at this row or beyond.
    pub fn uniform_from(&self) -> u64 {
        let explicit_max = self
            .pairs
            .iter()
            .flat_map(|&(u, l)| [u, l])
            .filter_map(|r| r.row())
            .max()
            .map(|r| r + 1)
            .unwrap_or(0);
        self.tail_from.max(explicit_max)
    }

    /// Out-neighbors of `x` in H_M: unmatched covers point down, the matched
    /// cover of `x` (if `x` is the lower cell) points up.
    pub fn modified_hasse_out(&self, poset: &Poset, x: ElementRef) -> Result<Vec<ElementRef>> {
        let mut out = Vec::new();
        if let Some((z, Role::Lower)) = self.partner(poset, x) {
            out.push(z);
        }
        for y in poset.covered_by(x)? {
            if !self.is_matched_pair(poset, x, y) {
                out.push(y);
            }
        }
        out.sort();
        Ok(out)
    }

    /// In-neighbors of `x` in H_M.
    pub fn modified_hasse_in(&self, poset: &Poset, x: ElementRef) -> Result<Vec<ElementRef>> {
        let mut inn = Vec::new();
        if let Some((w, Role::Upper)) = self.partner(poset, x) {
            inn.push(w);
        }
        for z in poset.covers_above(x)? {
            if !self.is_matched_pair(poset, z, x) {
                inn.push(z);
            }
        }
        inn.sort();
        Ok(inn)
    }

    /// M_+(x): if x is matched with z one degree up, the faces of z other
    /// than x; empty otherwise.
    pub fn m_plus(&self, poset: &Poset, x: ElementRef) -> Result<Vec<ElementRef>> {
        if !poset.contains(x) {
            return Err(Error::UnknownElement(poset.display_ref(x)));
        }
        match self.partner(poset, x) {
            Some((z, Role::Lower)) => {
                let mut out: Vec<ElementRef> = poset
                    .covered_by(z)?
                    .into_iter()
                    .filter(|&y| y != x)
                    .collect();
                out.sort();
                Ok(out)
            }
            _ => Ok(Vec::new()),
        }
    }
}

/// Critical cells, stratified by degree. Periodic posets list the finite
/// region explicitly plus a marker per pattern cell that stays critical in
/// every row from `horizon` on.
#[derive(Debug, Clone)]
pub struct CriticalReport {
    pub explicit: BTreeMap<usize, Vec<ElementRef>>,
    /// (qcell, first row) pairs critical in every row from there on
    pub tail_critical: Vec<(u32, u64)>,
    pub horizon: u64,
}

impl CriticalReport {
    pub fn is_finite(&self) -> bool {
        self.tail_critical.is_empty()
    }

    pub fn counts(&self) -> Vec<Count> {
        let max_deg = self.explicit.keys().copied().max().unwrap_or(0);
        let mut out = vec![Count::Finite(0); max_deg + 1];
        for (&d, cells) in &self.explicit {
            out[d] = Count::Finite(cells.len());
        }
        out
    }

    pub fn all_explicit(&self) -> Vec<ElementRef> {
        let mut out: Vec<ElementRef> = self
            .explicit
            .values()
            .flat_map(|v| v.iter().copied())
            .collect();
        out.sort();
        out
    }

    pub fn total_explicit(&self) -> usize {
        self.explicit.values().map(|v| v.len()).sum()
    }
}

/// Exact stratified report of critical cells.
pub fn critical_cells(poset: &Poset, matching: &MorseMatching) -> CriticalReport {
    match poset {
        Poset::Finite(p) => {
            let mut explicit: BTreeMap<usize, Vec<ElementRef>> = BTreeMap::new();
            for i in 0..p.len() as u32 {
                let x = ElementRef::Finite(i);
                if matching.is_critical(poset, x) {
                    explicit.entry(p.degree(i)).or_default().push(x);
                }
            }
            CriticalReport {
                explicit,
                tail_critical: Vec::new(),
                horizon: 0,
            }
        }
        Poset::Periodic(pp) => {
            let horizon = matching.uniform_from() + 1;
            let mut explicit: BTreeMap<usize, Vec<ElementRef>> = BTreeMap::new();
            for i in 0..pp.prefix.len() as u32 {
                let x = ElementRef::Finite(i);
                if matching.is_critical(poset, x) {
                    explicit.entry(pp.prefix.degree(i)).or_default().push(x);
                }
            }
            let mut tail_critical = Vec::new();
            for q in 0..pp.pattern.len() as u32 {
                for row in 0..horizon {
                    let x = ElementRef::lifted(q, row);
                    if matching.is_critical(poset, x) {
                        explicit.entry(pp.pattern.degree(q)).or_default().push(x);
                    }
                }
                if matching.arc_of_qcell[q as usize].is_none() {
                    tail_critical.push((q, horizon));
                }
            }
            for v in explicit.values_mut() {
                v.sort();
            }
            CriticalReport {
                explicit,
                tail_critical,
                horizon,
            }
        }
    }
}

/// The descent digraph D_M(x): BFS closure of x under M_+.
#[derive(Debug, Clone)]
pub struct DescentDigraph {
    pub root: ElementRef,
    pub vertices: Vec<ElementRef>,
    pub arrows: Vec<(ElementRef, ElementRef)>,
}

pub fn descent_digraph(
    poset: &Poset,
    matching: &MorseMatching,
    x: ElementRef,
    step_budget: usize,
) -> Result<DescentDigraph> {
    if !poset.contains(x) {
        return Err(Error::UnknownElement(poset.display_ref(x)));
    }
    let mut vertices = vec![x];
    let mut seen: BTreeSet<ElementRef> = BTreeSet::from([x]);
    let mut arrows = Vec::new();
    let mut queue = VecDeque::from([x]);
    while let Some(y) = queue.pop_front() {
        for z in matching.m_plus(poset, y)? {
            arrows.push((y, z));
            if seen.insert(z) {
                vertices.push(z);
                if vertices.len() > step_budget {
                    return Err(Error::BudgetExceeded(step_budget));
                }
                queue.push_back(z);
            }
        }
    }
    vertices.sort();
    arrows.sort();
    Ok(DescentDigraph {
        root: x,
        vertices,
        arrows,
    })
}

/// Length of the longest directed simple path in D_M(x). Zero exactly when
/// M_+(x) is empty.
pub fn l_m(
    poset: &Poset,
    matching: &MorseMatching,
    x: ElementRef,
    step_budget: usize,
) -> Result<usize> {
    let d = descent_digraph(poset, matching, x, step_budget)?;
    longest_path(&d)
}

pub fn longest_path(d: &DescentDigraph) -> Result<usize> {
    let index: HashMap<ElementRef, usize> = d
        .vertices
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, i))
        .collect();
    let n = d.vertices.len();
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for &(a, b) in &d.arrows {
        out[index[&a]].push(index[&b]);
        indeg[index[&b]] += 1;
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut longest = vec![0usize; n];
    let mut seen = 0;
    let mut best = 0;
    while let Some(u) = queue.pop_front() {
        seen += 1;
        best = best.max(longest[u]);
        for &v in &out[u] {
            longest[v] = longest[v].max(longest[u] + 1);
            indeg[v] -= 1;
            if indeg[v] == 0 {
                queue.push_back(v);
            }
        }
    }
    if seen != n {
        return Err(Error::NotAcyclic("descent digraph contains a cycle".into()));
    }
    Ok(best)
}

/// Default step budget: ten times the window volume.
pub fn default_budget(poset: &Poset, window_rows: u64) -> usize {
    match poset {
        Poset::Finite(p) => (10 * p.len()).max(1000),
        Poset::Periodic(p) => {
            (10 * (window_rows as usize + p.prefix.len()) * p.pattern.len()).max(1000)
        }
    }
}

// ---------------------------------------------------------------------------
// quotient of H_M with shift labels
// ---------------------------------------------------------------------------

/// An arrow of the H_M quotient. `reversed` marks a matched arc traversed
/// upward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QEdge {
    pub from: u32,
    pub to: u32,
    pub shift: i8,
    pub arc: u32,
    pub reversed: bool,
}

#[derive(Debug, Clone)]
pub struct QuotientHm {
    pub nodes: usize,
    pub edges: Vec<QEdge>,
    pub out: Vec<Vec<u32>>,
}

/// A simple cycle of the quotient, as an edge sequence.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct QCycle {
    pub edges: Vec<u32>,
    pub nodes: Vec<u32>,
    pub net: i64,
}

impl QuotientHm {
    pub fn build(poset: &Poset, matching: &MorseMatching) -> Option<QuotientHm> {
        let Poset::Periodic(pp) = poset else {
            return None;
        };
        let mut edges = Vec::new();
        for (k, arc) in pp.pattern.arcs().iter().enumerate() {
            let selected = matching.selected_arcs.binary_search(&(k as u32)).is_ok();
            if selected {
                edges.push(QEdge {
                    from: arc.lower,
                    to: arc.upper,
                    shift: -arc.shift,
                    arc: k as u32,
                    reversed: true,
                });
            } else {
                edges.push(QEdge {
                    from: arc.upper,
                    to: arc.lower,
                    shift: arc.shift,
                    arc: k as u32,
                    reversed: false,
                });
            }
        }
        let mut out = vec![Vec::new(); pp.pattern.len()];
        for (i, e) in edges.iter().enumerate() {
            out[e.from as usize].push(i as u32);
        }
        Some(QuotientHm {
            nodes: pp.pattern.len(),
            edges,
            out,
        })
    }

    /// All elementary cycles (node-simple, parallel edges distinguished).
    pub fn simple_cycles(&self) -> Vec<QCycle> {
        let mut cycles = Vec::new();
        for start in 0..self.nodes as u32 {
            let mut path_edges: Vec<u32> = Vec::new();
            let mut path_nodes: Vec<u32> = vec![start];
            let mut on_path = vec![false; self.nodes];
            on_path[start as usize] = true;
            self.cycle_dfs(
                start,
                start,
                &mut path_edges,
                &mut path_nodes,
                &mut on_path,
                &mut cycles,
            );
        }
        cycles.sort();
        cycles
    }

    fn cycle_dfs(
        &self,
        start: u32,
        at: u32,
        path_edges: &mut Vec<u32>,
        path_nodes: &mut Vec<u32>,
        on_path: &mut Vec<bool>,
        cycles: &mut Vec<QCycle>,
    ) {
        for &e in &self.out[at as usize] {
            let edge = self.edges[e as usize];
            if edge.to == start {
                let mut edges = path_edges.clone();
                edges.push(e);
                let net = edges
                    .iter()
                    .map(|&i| self.edges[i as usize].shift as i64)
                    .sum();
                cycles.push(QCycle {
                    edges,
                    nodes: path_nodes.clone(),
                    net,
                });
            } else if edge.to > start && !on_path[edge.to as usize] {
                on_path[edge.to as usize] = true;
                path_edges.push(e);
                path_nodes.push(edge.to);
                self.cycle_dfs(start, edge.to, path_edges, path_nodes, on_path, cycles);
                path_nodes.pop();
                path_edges.pop();
                on_path[edge.to as usize] = false;
            }
        }
    }

    /// Strongly connected component id per node.
    pub fn scc_ids(&self) -> Vec<usize> {
        let n = self.nodes;
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        for s in 0..n {
            if seen[s] {
                continue;
            }
            // iterative post-order
            let mut stack = vec![(s, 0usize)];
            seen[s] = true;
            while let Some(&mut (u, ref mut ei)) = stack.last_mut() {
                if *ei < self.out[u].len() {
                    let e = self.out[u][*ei];
                    *ei += 1;
                    let v = self.edges[e as usize].to as usize;
                    if !seen[v] {
                        seen[v] = true;
                        stack.push((v, 0));
                    }
                } else {
                    order.push(u);
                    stack.pop();
                }
            }
        }
        let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
        for e in &self.edges {
            rev[e.to as usize].push(e.from as usize);
        }
        let mut comp = vec![usize::MAX; n];
        let mut c = 0;
        for &s in order.iter().rev() {
            if comp[s] != usize::MAX {
                continue;
            }
            let mut stack = vec![s];
            comp[s] = c;
            while let Some(u) = stack.pop() {
                for &v in &rev[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = c;
                        stack.push(v);
                    }
                }
            }
            c += 1;
        }
        comp
    }

    /// Lifts an edge path starting at `(start_node, base_row)` to explicit
    /// elements; returns the element sequence (one longer than the path).
    pub fn lift(&self, start: u32, base_row: u64, edges: &[u32]) -> Vec<ElementRef> {
        let mut out = vec![ElementRef::lifted(start, base_row)];
        let mut node = start;
        let mut row = base_row as i64;
        for &e in edges {
            let edge = self.edges[e as usize];
            assert_eq!(edge.from, node);
            row += edge.shift as i64;
            node = edge.to;
            assert!(row >= 0, "lift dipped below row zero");
            out.push(ElementRef::lifted(node, row as u64));
        }
        out
    }

    /// Smallest cumulative shift along the path (non-positive).
    pub fn min_cumulative(&self, edges: &[u32]) -> i64 {
        let mut cum = 0i64;
        let mut min = 0i64;
        for &e in edges {
            cum += self.edges[e as usize].shift as i64;
            min = min.min(cum);
        }
        min
    }
}

// ---------------------------------------------------------------------------
// acyclicity
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub enum AcyclicityVerdict {
    Acyclic,
    /// Elements of a directed cycle in H_M (closed: the last points to the first).
    Cyclic {
        witness: Vec<ElementRef>,
    },
}

impl AcyclicityVerdict {
    pub fn is_acyclic(&self) -> bool {
        matches!(self, AcyclicityVerdict::Acyclic)
    }
}

/// Cycle detection by DFS over a finite element set, arrows restricted to the
/// set itself.
fn finite_cycle_search(
    poset: &Poset,
    matching: &MorseMatching,
    elements: &[ElementRef],
) -> Result<Option<Vec<ElementRef>>> {
    let index: HashMap<ElementRef, usize> =
        elements.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let n = elements.len();
    // 0 = white, 1 = on stack, 2 = done
    let mut color = vec![0u8; n];
    for s in 0..n {
        if color[s] != 0 {
            continue;
        }
        let mut stack: Vec<(usize, Vec<usize>, usize)> = Vec::new();
        let succ = |u: usize| -> Result<Vec<usize>> {
            Ok(matching
                .modified_hasse_out(poset, elements[u])?
                .into_iter()
                .filter_map(|r| index.get(&r).copied())
                .collect())
        };
        color[s] = 1;
        stack.push((s, succ(s)?, 0));
        let mut trail = vec![s];
        while let Some((u, succs, at)) = stack.last_mut() {
            if *at < succs.len() {
                let v = succs[*at];
                *at += 1;
                match color[v] {
                    0 => {
                        color[v] = 1;
                        trail.push(v);
                        let sv = succ(v)?;
                        stack.push((v, sv, 0));
                    }
                    1 => {
                        let pos = trail.iter().position(|&t| t == v).unwrap();
                        let witness = trail[pos..]
                            .iter()
                            .map(|&t| elements[t])
                            .collect::<Vec<_>>();
                        return Ok(Some(witness));
                    }
                    _ => {}
                }
            } else {
                color[*u] = 2;
                trail.pop();
                stack.pop();
            }
        }
    }
    Ok(None)
}

fn window_elements(poset: &Poset, rows: u64) -> Vec<ElementRef> {
    match poset {
        Poset::Finite(p) => (0..p.len() as u32).map(ElementRef::Finite).collect(),
        Poset::Periodic(pp) => {
            let mut out: Vec<ElementRef> = (0..pp.prefix.len() as u32)
                .map(ElementRef::Finite)
                .collect();
            for row in 0..rows {
                for q in 0..pp.pattern.len() as u32 {
                    out.push(ElementRef::lifted(q, row));
                }
            }
            out
        }
    }
}

/// Verifies H_M is acyclic. Finite posets get a DFS; periodic posets combine
/// quotient-level closed-walk analysis with an explicit check of the finite
/// region. The explicit window is sized so that any cycle through the prefix
/// whose tail excursion combines a climbing and a descending quotient cycle
/// still fits (net shifts of simple cycles are bounded by the pattern size).
pub fn is_acyclic(poset: &Poset, matching: &MorseMatching) -> Result<AcyclicityVerdict> {
    match poset {
        Poset::Finite(_) => {
            let elements = window_elements(poset, 0);
            Ok(match finite_cycle_search(poset, matching, &elements)? {
                Some(witness) => AcyclicityVerdict::Cyclic { witness },
                None => AcyclicityVerdict::Acyclic,
            })
        }
        Poset::Periodic(pp) => {
            let q = QuotientHm::build(poset, matching).unwrap();
            let cycles = q.simple_cycles();
            let uniform = matching.uniform_from();
            for c in &cycles {
                if c.net == 0 {
                    let base = uniform + 1 + (-q.min_cumulative(&c.edges)) as u64;
                    let mut witness = q.lift(c.nodes[0], base, &c.edges);
                    witness.pop(); // closed: last element equals the first
                    return Ok(AcyclicityVerdict::Cyclic { witness });
                }
            }
            // mixed signs inside one SCC allow a zero-net closed walk
            let comp = q.scc_ids();
            let mut signs: HashMap<usize, (bool, bool)> = HashMap::new();
            for c in &cycles {
                let id = comp[c.nodes[0] as usize];
                let entry = signs.entry(id).or_insert((false, false));
                if c.net > 0 {
                    entry.0 = true;
                }
                if c.net < 0 {
                    entry.1 = true;
                }
            }
            for (&id, &(pos, neg)) in &signs {
                if pos && neg {
                    let witness = mixed_sign_witness(&q, &comp, id, uniform)
                        .expect("mixed-sign component always yields a zero-net walk");
                    return Ok(AcyclicityVerdict::Cyclic { witness });
                }
            }
            // explicit finite region: prefix, overrides, and the seam
            let n = pp.pattern.len() as u64;
            let rows = uniform + n * n + 2 * n + 4;
            let elements = window_elements(poset, rows);
            Ok(match finite_cycle_search(poset, matching, &elements)? {
                Some(witness) => AcyclicityVerdict::Cyclic { witness },
                None => AcyclicityVerdict::Acyclic,
            })
        }
    }
}

/// Searches the product graph (node, row offset) for a closed walk of net
/// zero inside a mixed-sign SCC, then lifts it high enough to be explicit.
fn mixed_sign_witness(
    q: &QuotientHm,
    comp: &[usize],
    id: usize,
    uniform: u64,
) -> Option<Vec<ElementRef>> {
    let n = q.nodes as i64;
    let bound = n * n + 4 * n + 4;
    let width = (2 * bound + 1) as usize;
    let start = (0..q.nodes).find(|&v| comp[v] == id)?;
    // BFS from (start, 0) back to (start, 0)
    let enc = |node: usize, off: i64| node * width + (off + bound) as usize;
    let mut prev: Vec<Option<(usize, u32)>> = vec![None; q.nodes * width];
    let mut queue = VecDeque::new();
    let s = enc(start, 0);
    queue.push_back(s);
    let mut found: Option<u32> = None;
    'bfs: while let Some(cur) = queue.pop_front() {
        let node = cur / width;
        let off = (cur % width) as i64 - bound;
        for &e in &q.out[node] {
            let edge = q.edges[e as usize];
            if comp[edge.to as usize] != id {
                continue;
            }
            let noff = off + edge.shift as i64;
            if noff.abs() > bound {
                continue;
            }
            let nxt = enc(edge.to as usize, noff);
            if nxt == s {
                found = Some(e);
                prev[nxt] = Some((cur, e));
                break 'bfs;
            }
            if prev[nxt].is_none() {
                prev[nxt] = Some((cur, e));
                queue.push_back(nxt);
            }
        }
    }
    found?;
    // reconstruct edge path ending back at s
    let mut edges_rev = Vec::new();
    let mut cur = s;
    loop {
        let (p, e) = prev[cur]?;
        edges_rev.push(e);
        cur = p;
        if cur == s {
            break;
        }
    }
    edges_rev.reverse();
    let base = uniform + 1 + (-q.min_cumulative(&edges_rev)) as u64;
    let mut witness = q.lift(start as u32, base, &edges_rev);
    witness.pop();
    Some(witness)
}

// ---------------------------------------------------------------------------
// raylessness
// ---------------------------------------------------------------------------

/// A decreasing ray witness in lasso form: an entry path in the finite
/// region (possibly empty) followed by the lift of a positive-net quotient
/// cycle from `base_row` on.
#[derive(Debug, Clone)]
pub struct LassoWitness {
    pub cycle: QCycle,
    pub start_node: u32,
    pub base_row: u64,
}

#[derive(Debug, Clone)]
pub enum RaylessVerdict {
    Rayless,
    HasRay { witness: LassoWitness },
}

impl RaylessVerdict {
    pub fn is_rayless(&self) -> bool {
        matches!(self, RaylessVerdict::Rayless)
    }
}

/// Rayless iff no positive-net simple cycle exists in the quotient of H_M.
/// Rows are bounded below, so a ray must drift upward forever, and its tail
/// eventually follows one strongly connected component's cycles. Finite
/// posets are always rayless.
pub fn is_rayless(poset: &Poset, matching: &MorseMatching) -> Result<RaylessVerdict> {
    match poset {
        Poset::Finite(_) => Ok(RaylessVerdict::Rayless),
        Poset::Periodic(_) => {
            let q = QuotientHm::build(poset, matching).unwrap();
            let mut cycles: Vec<QCycle> = q
                .simple_cycles()
                .into_iter()
                .filter(|c| c.net > 0)
                .collect();
            cycles.sort();
            match cycles.into_iter().next() {
                Some(cycle) => {
                    let base =
                        matching.uniform_from() + 1 + (-q.min_cumulative(&cycle.edges)) as u64;
                    let start_node = cycle.nodes[0];
                    Ok(RaylessVerdict::HasRay {
                        witness: LassoWitness {
                            cycle,
                            start_node,
                            base_row: base,
                        },
                    })
                }
                None => Ok(RaylessVerdict::Rayless),
            }
        }
    }
}

/// Unrolls a lasso witness three periods and checks it is a genuine directed
/// simple path in H_M.
pub fn verify_lasso(
    poset: &Poset,
    matching: &MorseMatching,
    witness: &LassoWitness,
) -> Result<Vec<ElementRef>> {
    let q = QuotientHm::build(poset, matching)
        .ok_or_else(|| Error::InvalidRay("lasso witness on a finite poset".into()))?;
    let mut edges = Vec::new();
    for _ in 0..3 {
        edges.extend_from_slice(&witness.cycle.edges);
    }
    let path = q.lift(witness.start_node, witness.base_row, &edges);
    let mut seen = BTreeSet::new();
    for w in path.windows(2) {
        if !seen.insert(w[0]) {
            return Err(Error::InvalidRay(
                "unrolled lasso revisits an element".into(),
            ));
        }
        let out = matching.modified_hasse_out(poset, w[0])?;
        if !out.contains(&w[1]) {
            return Err(Error::InvalidRay(format!(
                "no H_M arrow {} -> {}",
                poset.display_ref(w[0]),
                poset.display_ref(w[1])
            )));
        }
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::{FiniteGradedPoset, QuotientPattern};

    pub(crate) fn half_line() -> Poset {
        let pattern = QuotientPattern::new(
            vec!["v".into(), "e".into()],
            vec![0, 1],
            vec![("e".into(), "v".into(), 0), ("e".into(), "v".into(), 1)],
        )
        .unwrap();
        Poset::Periodic(
            crate::poset::PeriodicPoset::new(pattern, FiniteGradedPoset::empty(), Vec::new())
                .unwrap(),
        )
    }

    pub(crate) fn ray_matching(p: &Poset) -> MorseMatching {
        // pairs (e_n, v_n): arc (e, v, 0) is arc index 0
        MorseMatching::build(p, Vec::new(), vec![0], 0).unwrap()
    }

    pub(crate) fn rayless_matching(p: &Poset) -> MorseMatching {
        // pairs (e_n, v_{n+1}): arc (e, v, +1) is arc index 1
        MorseMatching::build(p, Vec::new(), vec![1], 0).unwrap()
    }

    #[test]
    fn empty_matching_all_critical() {
        let p = Poset::Finite(
            crate::poset::FiniteGradedPoset::from_covers(
                vec!["a".into(), "b".into(), "ab".into()],
                vec![("ab".into(), "a".into()), ("ab".into(), "b".into())],
            )
            .unwrap(),
        );
        let m = MorseMatching::empty(&p);
        let crit = critical_cells(&p, &m);
        assert_eq!(crit.total_explicit(), 3);
        assert!(is_acyclic(&p, &m).unwrap().is_acyclic());
    }

    #[test]
    fn overlap_rejected() {
        let p = Poset::Finite(
            crate::poset::FiniteGradedPoset::from_covers(
                vec!["v".into(), "w".into(), "e".into()],
                vec![("e".into(), "v".into()), ("e".into(), "w".into())],
            )
            .unwrap(),
        );
        let e = p.parse_ref("e").unwrap();
        let v = p.parse_ref("v").unwrap();
        let w = p.parse_ref("w").unwrap();
        let err = MorseMatching::build(&p, vec![(e, v), (e, w)], Vec::new(), 0).unwrap_err();
        assert!(matches!(err, Error::Overlap(_)));
    }

    #[test]
    fn not_a_cover_rejected() {
        let p = Poset::Finite(
            crate::poset::FiniteGradedPoset::from_covers(
                vec!["v".into(), "w".into(), "e".into()],
                vec![("e".into(), "v".into()), ("e".into(), "w".into())],
            )
            .unwrap(),
        );
        let v = p.parse_ref("v").unwrap();
        let w = p.parse_ref("w").unwrap();
        let err = MorseMatching::build(&p, vec![(v, w)], Vec::new(), 0).unwrap_err();
        assert!(matches!(err, Error::NotACover(_)));
    }

    #[test]
    fn half_line_ray_matching_critical_cells() {
        let p = half_line();
        let m = ray_matching(&p);
        let crit = critical_cells(&p, &m);
        assert_eq!(crit.total_explicit(), 0);
        assert!(crit.is_finite());
        let m2 = rayless_matching(&p);
        let crit2 = critical_cells(&p, &m2);
        assert_eq!(crit2.total_explicit(), 1);
        assert_eq!(crit2.all_explicit(), vec![ElementRef::lifted(0, 0)]);
    }

    #[test]
    fn half_line_modified_hasse() {
        let p = half_line();
        let m = ray_matching(&p);
        // v1 -> e1 (reversed matched arrow)
        let v1 = p.parse_ref("v@1").unwrap();
        let e1 = p.parse_ref("e@1").unwrap();
        assert_eq!(m.modified_hasse_out(&p, v1).unwrap(), vec![e1]);
        // e1 -> v2 (remaining unmatched cover)
        let v2 = p.parse_ref("v@2").unwrap();
        assert_eq!(m.modified_hasse_out(&p, e1).unwrap(), vec![v2]);
    }

    #[test]
    fn four_cycle_graph_cyclic_matching() {
        // v1..v4, e_i joining v_i and v_{i+1}; matching (e_i, v_i)
        let mut names: Vec<String> = (1..=4).map(|i| format!("v{i}")).collect();
        names.extend((1..=4).map(|i| format!("e{i}")));
        let mut covers = Vec::new();
        for i in 1..=4u32 {
            let j = i % 4 + 1;
            covers.push((format!("e{i}"), format!("v{i}")));
            covers.push((format!("e{i}"), format!("v{j}")));
        }
        let p = Poset::Finite(FiniteGradedPoset::from_covers(names, covers).unwrap());
        let pairs: Vec<_> = (1..=4)
            .map(|i| {
                (
                    p.parse_ref(&format!("e{i}")).unwrap(),
                    p.parse_ref(&format!("v{i}")).unwrap(),
                )
            })
            .collect();
        let m = MorseMatching::build(&p, pairs, Vec::new(), 0).unwrap();
        let verdict = is_acyclic(&p, &m).unwrap();
        match verdict {
            AcyclicityVerdict::Cyclic { witness } => assert_eq!(witness.len(), 8),
            AcyclicityVerdict::Acyclic => panic!("expected a cycle"),
        }
    }

    #[test]
    fn half_line_acyclicity_and_rays() {
        let p = half_line();
        let up = ray_matching(&p);
        assert!(is_acyclic(&p, &up).unwrap().is_acyclic());
        match is_rayless(&p, &up).unwrap() {
            RaylessVerdict::HasRay { witness } => {
                assert_eq!(witness.cycle.net, 1);
                let path = verify_lasso(&p, &up, &witness).unwrap();
                assert_eq!(path.len(), 7); // 3 periods of a 2-cycle, plus start
            }
            RaylessVerdict::Rayless => panic!("expected a ray"),
        }
        let down = rayless_matching(&p);
        assert!(is_acyclic(&p, &down).unwrap().is_acyclic());
        assert!(is_rayless(&p, &down).unwrap().is_rayless());
    }

    #[test]
    fn descent_and_longest_path() {
        let p = half_line();
        let down = rayless_matching(&p);
        let v5 = p.parse_ref("v@5").unwrap();
        let d = descent_digraph(&p, &down, v5, 1000).unwrap();
        assert_eq!(d.vertices.len(), 6); // v5 down to v0
        assert_eq!(l_m(&p, &down, v5, 1000).unwrap(), 5);
        // critical element: singleton, length zero
        let v0 = p.parse_ref("v@0").unwrap();
        assert_eq!(l_m(&p, &down, v0, 1000).unwrap(), 0);

        let up = ray_matching(&p);
        let err = descent_digraph(&p, &up, p.parse_ref("v@0").unwrap(), 100).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded(_)));
    }

    #[test]
    fn m_plus_examples() {
        let p = half_line();
        let down = rayless_matching(&p);
        // v5 is matched with e4 whose other face is v4
        let v5 = p.parse_ref("v@5").unwrap();
        let v4 = p.parse_ref("v@4").unwrap();
        assert_eq!(down.m_plus(&p, v5).unwrap(), vec![v4]);
        // critical cell: empty
        let v0 = p.parse_ref("v@0").unwrap();
        assert!(down.m_plus(&p, v0).unwrap().is_empty());
        // monotonicity: L(v5) = L(v4) + 1
        assert_eq!(
            l_m(&p, &down, v5, 1000).unwrap(),
            l_m(&p, &down, v4, 1000).unwrap() + 1
        );
    }
}
