//! Abstract simplicial complexes, order complexes, and face posets.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::poset::FiniteGradedPoset;
use crate::snf::IntegerMatrix;

/// An abstract simplicial complex on labeled vertices, stored with every
/// simplex (not just facets) grouped by dimension. Vertex lists are sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplicialComplex {
    labels: Vec<String>,
    /// simplices[k] = sorted list of k-simplices, each a sorted vertex list
    simplices: Vec<Vec<Vec<u32>>>,
}

impl SimplicialComplex {
    pub fn empty() -> Self {
        SimplicialComplex {
            labels: Vec::new(),
            simplices: Vec::new(),
        }
    }

    /// Builds the downward closure of the given facets.
    pub fn from_facets(labels: Vec<String>, facets: Vec<Vec<u32>>) -> Result<Self> {
        let n = labels.len() as u32;
        let mut all: BTreeSet<Vec<u32>> = BTreeSet::new();
        for f in &facets {
            let mut f = f.clone();
            f.sort_unstable();
            f.dedup();
            if f.iter().any(|&v| v >= n) {
                return Err(Error::UnknownElement(format!(
                    "vertex {:?} out of range",
                    f
                )));
            }
            if f.is_empty() {
                continue;
            }
            // all nonempty subsets
            let k = f.len();
            for mask in 1u64..(1u64 << k) {
                let face: Vec<u32> = (0..k)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| f[i])
                    .collect();
                all.insert(face);
            }
        }
        let dim = all.iter().map(|s| s.len()).max().unwrap_or(0);
        let mut simplices = vec![Vec::new(); dim];
        for s in all {
            simplices[s.len() - 1].push(s);
        }
        Ok(SimplicialComplex { labels, simplices })
    }

    pub fn vertex_labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dim(&self) -> Option<usize> {
        if self.simplices.is_empty() {
            None
        } else {
            Some(self.simplices.len() - 1)
        }
    }

    pub fn k_simplices(&self, k: usize) -> &[Vec<u32>] {
        self.simplices.get(k).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn simplex_count(&self) -> usize {
        self.simplices.iter().map(|s| s.len()).sum()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.simplices.iter().map(|s| s.len()).collect()
    }

    /// Standard simplicial boundary matrices with the lexicographic vertex
    /// orientation; entry (i, j) is the sign of the i-th (k-1)-simplex in the
    /// boundary of the j-th k-simplex. Index k-1 of the result maps C_k to
    /// C_{k-1}.
    pub fn boundary_matrices(&self) -> Vec<IntegerMatrix> {
        let mut out = Vec::new();
        for k in 1..self.simplices.len() {
            let lower = &self.simplices[k - 1];
            let upper = &self.simplices[k];
            let index: HashMap<&[u32], usize> = lower
                .iter()
                .enumerate()
                .map(|(i, s)| (s.as_slice(), i))
                .collect();
            let mut m = IntegerMatrix::zero(lower.len(), upper.len());
            for (j, s) in upper.iter().enumerate() {
                for (drop, _) in s.iter().enumerate() {
                    let face: Vec<u32> = s
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| *i != drop)
                        .map(|(_, &v)| v)
                        .collect();
                    let i = index[face.as_slice()];
                    let sign = if drop % 2 == 0 { 1 } else { -1 };
                    m.set(i, j, sign);
                }
            }
            out.push(m);
        }
        out
    }

    /// The face poset: elements are simplices, degree is dimension, covers are
    /// codimension-one containments.
    pub fn face_poset(&self) -> FiniteGradedPoset {
        let name = |s: &[u32]| {
            s.iter()
                .map(|&v| self.labels[v as usize].clone())
                .collect::<Vec<_>>()
                .join("-")
        };
        let mut names = Vec::new();
        let mut covers = Vec::new();
        for dim_s in &self.simplices {
            for s in dim_s {
                names.push(name(s));
            }
        }
        for k in 1..self.simplices.len() {
            for s in &self.simplices[k] {
                for drop in 0..s.len() {
                    let face: Vec<u32> = s
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| *i != drop)
                        .map(|(_, &v)| v)
                        .collect();
                    covers.push((name(s), name(&face)));
                }
            }
        }
        FiniteGradedPoset::from_covers(names, covers)
            .expect("face posets of simplicial complexes are graded")
    }
}

/// The order complex of a finite poset: k-simplices are its (k+1)-chains.
pub fn order_complex(p: &FiniteGradedPoset) -> SimplicialComplex {
    let n = p.len();
    // strictly-below sets via the cover relation
    let mut below: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n];
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_by_key(|&i| p.degree(i));
    for &x in &order {
        for &y in p.covered_by(x) {
            below[x as usize].insert(y);
            let lower = below[y as usize].clone();
            below[x as usize].extend(lower);
        }
    }
    let labels: Vec<String> = p.names().to_vec();
    let mut simplices: Vec<Vec<Vec<u32>>> = Vec::new();
    // chains in descending order: extend by anything strictly below the last
    let mut stack: Vec<Vec<u32>> = (0..n as u32).map(|i| vec![i]).collect();
    while let Some(chain) = stack.pop() {
        let k = chain.len() - 1;
        if simplices.len() <= k {
            simplices.resize(k + 1, Vec::new());
        }
        let mut sorted = chain.clone();
        sorted.sort_unstable();
        simplices[k].push(sorted);
        let last = *chain.last().unwrap();
        for &y in &below[last as usize] {
            let mut ext = chain.clone();
            ext.push(y);
            stack.push(ext);
        }
    }
    for level in simplices.iter_mut() {
        level.sort();
        level.dedup();
    }
    SimplicialComplex { labels, simplices }
}

/// Number of (k+1)-element chains of the face poset of `sc`, counted directly
/// by enumeration over simplex containment. Independent oracle for the
/// barycentric-subdivision property of `order_complex`.
pub fn chain_counts_by_containment(sc: &SimplicialComplex) -> Vec<usize> {
    let poset = sc.face_poset();
    let n = poset.len();
    let mut below: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n];
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_by_key(|&i| poset.degree(i));
    for &x in &order {
        for &y in poset.covered_by(x) {
            below[x as usize].insert(y);
            let lower = below[y as usize].clone();
            below[x as usize].extend(lower);
        }
    }
    let mut counts: Vec<usize> = Vec::new();
    let mut stack: Vec<(u32, usize)> = (0..n as u32).map(|i| (i, 0)).collect();
    while let Some((last, k)) = stack.pop() {
        if counts.len() <= k {
            counts.resize(k + 1, 0);
        }
        counts[k] += 1;
        for &y in &below[last as usize] {
            stack.push((y, k + 1));
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("v{i}")).collect()
    }

    #[test]
    fn antichain_order_complex() {
        let p = FiniteGradedPoset::from_covers(vec!["a".into(), "b".into(), "c".into()], vec![])
            .unwrap();
        let k = order_complex(&p);
        assert_eq!(k.counts(), vec![3]);
    }

    #[test]
    fn chain_order_complex() {
        let p = FiniteGradedPoset::from_covers(
            vec!["a".into(), "b".into(), "c".into()],
            vec![("b".into(), "a".into()), ("c".into(), "b".into())],
        )
        .unwrap();
        let k = order_complex(&p);
        assert_eq!(k.counts(), vec![3, 3, 1]);
    }

    #[test]
    fn triangle_boundary_subdivision_is_hexagon() {
        let sc =
            SimplicialComplex::from_facets(labels(3), vec![vec![0, 1], vec![1, 2], vec![0, 2]])
                .unwrap();
        let k = order_complex(&sc.face_poset());
        assert_eq!(k.counts(), vec![6, 6]);
    }

    #[test]
    fn face_poset_of_edge() {
        let sc = SimplicialComplex::from_facets(labels(2), vec![vec![0, 1]]).unwrap();
        let p = sc.face_poset();
        assert_eq!(p.len(), 3);
        assert_eq!(p.cover_count(), 2);
    }

    #[test]
    fn face_poset_of_empty() {
        let sc = SimplicialComplex::from_facets(labels(0), vec![]).unwrap();
        assert_eq!(sc.face_poset().len(), 0);
    }

    #[test]
    fn barycentric_counts_match_chain_enumeration() {
        let sc = SimplicialComplex::from_facets(
            labels(5),
            vec![vec![0, 1, 2], vec![1, 2, 3], vec![3, 4], vec![0, 4]],
        )
        .unwrap();
        let subdivision = order_complex(&sc.face_poset());
        assert_eq!(subdivision.counts(), chain_counts_by_containment(&sc));
    }
}
