//! Integer homology via Smith normal form, plus the Morse inequalities.

use std::fmt;

use num_bigint::BigInt;
use num_traits::One;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::simplicial::SimplicialComplex;
use crate::snf::{smith_normal_form_opts, IntegerMatrix};

/// Homology groups per degree: a free rank and torsion coefficients, each
/// dividing the next.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HomologyGroups {
    pub groups: Vec<HomologyGroup>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HomologyGroup {
    pub betti: usize,
    /// torsion coefficients as decimal strings, each >= 2, each dividing the next
    pub torsion: Vec<String>,
}

impl HomologyGroups {
    pub fn betti(&self, n: usize) -> usize {
        self.groups.get(n).map(|g| g.betti).unwrap_or(0)
    }

    pub fn betti_vector(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.groups.iter().map(|g| g.betti).collect();
        while v.last() == Some(&0) {
            v.pop();
        }
        v
    }

    pub fn torsion(&self, n: usize) -> Vec<String> {
        self.groups
            .get(n)
            .map(|g| g.torsion.clone())
            .unwrap_or_default()
    }

    /// Equality up to trailing zero groups.
    pub fn same_groups(&self, other: &HomologyGroups) -> bool {
        let len = self.groups.len().max(other.groups.len());
        for n in 0..len {
            if self.betti(n) != other.betti(n) || self.torsion(n) != other.torsion(n) {
                return false;
            }
        }
        true
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.groups
            .iter()
            .enumerate()
            .map(|(n, g)| {
                if n % 2 == 0 {
                    g.betti as i64
                } else {
                    -(g.betti as i64)
                }
            })
            .sum()
    }
}

impl fmt::Display for HomologyGroups {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, g) in self.groups.iter().enumerate() {
            let mut parts = Vec::new();
            match g.betti {
                0 => {}
                1 => parts.push("Z".to_string()),
                b => parts.push(format!("Z^{b}")),
            }
            for t in &g.torsion {
                parts.push(format!("Z/{t}"));
            }
            if parts.is_empty() {
                parts.push("0".to_string());
            }
            writeln!(f, "H_{n} = {}", parts.join(" + "))?;
        }
        Ok(())
    }
}

/// Homology of a chain complex given by free ranks per degree and boundary
/// matrices `d[k]: C_{k+1} -> C_k`. Verifies `d*d = 0` first.
pub fn homology_from_boundaries(
    ranks: &[usize],
    boundaries: &[IntegerMatrix],
) -> Result<HomologyGroups> {
    let dim = ranks.len();
    for (k, m) in boundaries.iter().enumerate() {
        let (lower, upper) = (ranks[k], ranks[k + 1]);
        if m.rows != lower || m.cols != upper {
            return Err(Error::NotAComplex(format!(
                "boundary {k} has shape {}x{}, expected {lower}x{upper}",
                m.rows, m.cols
            )));
        }
    }
    for k in 0..boundaries.len().saturating_sub(1) {
        if !boundaries[k].mul(&boundaries[k + 1]).is_zero() {
            return Err(Error::NotAComplex(format!(
                "d_{} composed with d_{} is nonzero",
                k + 1,
                k + 2
            )));
        }
    }
    let mut groups = Vec::with_capacity(dim);
    let one = BigInt::one();
    for n in 0..dim {
        let rank_out = if n == 0 {
            0
        } else {
            boundaries.get(n - 1).map(crate::snf::rank).unwrap_or(0)
        };
        let (rank_in, torsion) = match boundaries.get(n) {
            Some(m) => {
                let snf = smith_normal_form_opts(m, false);
                let divisors = snf.divisors();
                let rank = divisors.len();
                let torsion: Vec<String> = divisors
                    .into_iter()
                    .filter(|d| *d > one)
                    .map(|d| d.to_string())
                    .collect();
                (rank, torsion)
            }
            None => (0, Vec::new()),
        };
        let betti = ranks[n] - rank_out - rank_in;
        groups.push(HomologyGroup { betti, torsion });
    }
    Ok(HomologyGroups { groups })
}

/// Simplicial homology with integer coefficients, reduced from the standard
/// lexicographically oriented boundary matrices. Independent of the cellular
/// route through incidence signs.
pub fn simplicial_homology(sc: &SimplicialComplex) -> HomologyGroups {
    let ranks = sc.counts();
    if ranks.is_empty() {
        return HomologyGroups { groups: Vec::new() };
    }
    let boundaries = sc.boundary_matrices();
    homology_from_boundaries(&ranks, &boundaries).expect("simplicial boundaries compose to zero")
}

/// A cell count that may be infinite (periodic tails can leave a pattern cell
/// critical in every row).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Count {
    Finite(usize),
    Infinite,
}

impl Count {
    fn finite(&self) -> Option<usize> {
        match self {
            Count::Finite(n) => Some(*n),
            Count::Infinite => None,
        }
    }
}

/// Verdicts for the weak, strong, and Euler forms of the Morse inequalities,
/// with side-condition tracking per form.
#[derive(Debug, Clone, Serialize)]
pub struct MorseInequalityReport {
    pub m: Vec<Count>,
    pub r: Vec<Count>,
    pub b: Vec<usize>,
    /// weak[n]: b_n <= m_n + r_n
    pub weak: Vec<bool>,
    /// strong[n]: alternating partial sums; None when a side condition fails
    pub strong: Vec<Option<bool>>,
    /// Euler identity; None when a side condition fails
    pub euler: Option<bool>,
    pub all_pass: bool,
}

pub fn morse_inequalities(m: &[Count], r: &[Count], b: &HomologyGroups) -> MorseInequalityReport {
    let len = m.len().max(r.len()).max(b.groups.len());
    let get = |v: &[Count], i: usize| v.get(i).copied().unwrap_or(Count::Finite(0));
    let betti: Vec<usize> = (0..len).map(|i| b.betti(i)).collect();
    let mut weak = Vec::new();
    let mut strong = Vec::new();
    for upper in 0..len {
        let w = match (get(m, upper).finite(), get(r, upper).finite()) {
            (Some(mn), Some(rn)) => betti[upper] <= mn + rn,
            _ => true,
        };
        weak.push(w);
        let finite_prefix =
            (0..=upper).all(|i| get(m, i).finite().is_some() && get(r, i).finite().is_some());
        if !finite_prefix {
            strong.push(None);
            continue;
        }
        let mut lhs: i64 = 0;
        let mut rhs: i64 = 0;
        for i in 0..=upper {
            let sign = if (upper - i) % 2 == 0 { 1 } else { -1 };
            lhs += sign * (get(m, i).finite().unwrap() + get(r, i).finite().unwrap()) as i64;
            rhs += sign * betti[i] as i64;
        }
        strong.push(Some(lhs >= rhs));
    }
    let all_finite = (0..len).all(|i| get(m, i).finite().is_some() && get(r, i).finite().is_some());
    let euler = if all_finite {
        let lhs: i64 = (0..len)
            .map(|i| {
                let sign = if i % 2 == 0 { 1 } else { -1 };
                sign * (get(m, i).finite().unwrap() + get(r, i).finite().unwrap()) as i64
            })
            .sum();
        let rhs: i64 = (0..len)
            .map(|i| {
                let sign = if i % 2 == 0 { 1 } else { -1 };
                sign * betti[i] as i64
            })
            .sum();
        Some(lhs == rhs)
    } else {
        None
    };
    let all_pass = weak.iter().all(|&w| w)
        && strong.iter().all(|s| s.unwrap_or(true))
        && euler.unwrap_or(true);
    MorseInequalityReport {
        m: m.to_vec(),
        r: r.to_vec(),
        b: betti,
        weak,
        strong,
        euler,
        all_pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplicial::order_complex;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("v{i}")).collect()
    }

    pub(crate) fn rp2_complex() -> SimplicialComplex {
        SimplicialComplex::from_facets(
            labels(6),
            vec![
                vec![0, 1, 4],
                vec![0, 1, 5],
                vec![0, 2, 3],
                vec![0, 2, 5],
                vec![0, 3, 4],
                vec![1, 2, 3],
                vec![1, 2, 4],
                vec![1, 3, 5],
                vec![2, 4, 5],
                vec![3, 4, 5],
            ],
        )
        .unwrap()
    }

    pub(crate) fn torus7_complex() -> SimplicialComplex {
        let mut facets = Vec::new();
        for i in 0..7u32 {
            facets.push(vec![i, (i + 1) % 7, (i + 3) % 7]);
            facets.push(vec![i, (i + 2) % 7, (i + 3) % 7]);
        }
        SimplicialComplex::from_facets(labels(7), facets).unwrap()
    }

    #[test]
    fn single_vertex() {
        let sc = SimplicialComplex::from_facets(labels(1), vec![vec![0]]).unwrap();
        let h = simplicial_homology(&sc);
        assert_eq!(h.betti_vector(), vec![1]);
        assert!(h.torsion(0).is_empty());
    }

    #[test]
    fn tetrahedron_boundary_is_sphere() {
        let sc = SimplicialComplex::from_facets(
            labels(4),
            vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 2, 3], vec![1, 2, 3]],
        )
        .unwrap();
        let h = simplicial_homology(&sc);
        assert_eq!(h.betti_vector(), vec![1, 0, 1]);
        assert!(h.groups.iter().all(|g| g.torsion.is_empty()));
    }

    #[test]
    fn rp2_has_two_torsion() {
        let sc = rp2_complex();
        assert_eq!(sc.counts(), vec![6, 15, 10]);
        let h = simplicial_homology(&sc);
        assert_eq!(h.betti_vector(), vec![1]);
        assert_eq!(h.torsion(1), vec!["2".to_string()]);
        assert!(h.torsion(2).is_empty());
        assert_eq!(h.betti(2), 0);
    }

    #[test]
    fn torus7_homology() {
        let sc = torus7_complex();
        assert_eq!(sc.counts(), vec![7, 21, 14]);
        let h = simplicial_homology(&sc);
        assert_eq!(h.betti_vector(), vec![1, 2, 1]);
        assert!(h.groups.iter().all(|g| g.torsion.is_empty()));
    }

    #[test]
    fn rp2_barycentric_subdivision_same_homology() {
        let sc = rp2_complex();
        let sub = order_complex(&sc.face_poset());
        let h = simplicial_homology(&sub);
        assert_eq!(h.betti_vector(), vec![1]);
        assert_eq!(h.torsion(1), vec!["2".to_string()]);
    }

    #[test]
    fn zero_complex_point() {
        let h = homology_from_boundaries(&[1], &[]).unwrap();
        assert_eq!(h.betti_vector(), vec![1]);
    }

    #[test]
    fn non_complex_rejected() {
        let d1 = IntegerMatrix::from_triples(1, 1, &[(0, 0, 1)]);
        let d2 = IntegerMatrix::from_triples(1, 1, &[(0, 0, 1)]);
        let err = homology_from_boundaries(&[1, 1, 1], &[d1, d2]).unwrap_err();
        assert!(matches!(err, Error::NotAComplex(_)));
    }

    #[test]
    fn inequalities_point() {
        let h = homology_from_boundaries(&[1], &[]).unwrap();
        let rep = morse_inequalities(
            &[Count::Finite(1), Count::Finite(0)],
            &[Count::Finite(0), Count::Finite(0)],
            &h,
        );
        assert!(rep.all_pass);
    }

    #[test]
    fn inequalities_torus_tight() {
        let sc = torus7_complex();
        let h = simplicial_homology(&sc);
        let m = [Count::Finite(1), Count::Finite(2), Count::Finite(1)];
        let r = [Count::Finite(0), Count::Finite(0), Count::Finite(0)];
        let rep = morse_inequalities(&m, &r, &h);
        assert!(rep.all_pass);
        assert!(rep.weak.iter().all(|&w| w));
        assert_eq!(rep.euler, Some(true));
    }

    #[test]
    fn inequalities_flag_inconsistent_input() {
        let h = homology_from_boundaries(&[1], &[]).unwrap();
        let rep = morse_inequalities(&[Count::Finite(1)], &[Count::Finite(1)], &h);
        // weak and strong pass, Euler 2 != 1 is flagged
        assert!(rep.weak.iter().all(|&w| w));
        assert!(rep.strong.iter().all(|s| s.unwrap()));
        assert_eq!(rep.euler, Some(false));
        assert!(!rep.all_pass);
    }

    #[test]
    fn infinite_counts_skip_euler() {
        let h = homology_from_boundaries(&[1], &[]).unwrap();
        let rep = morse_inequalities(&[Count::Infinite], &[Count::Finite(0)], &h);
        assert_eq!(rep.euler, None);
        assert_eq!(rep.strong[0], None);
        assert!(rep.weak[0]);
    }
}
