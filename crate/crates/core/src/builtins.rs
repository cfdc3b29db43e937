//! Built-in example complexes and matchings.
//!
//! Each example fixes a poset file, a matching file, and the documented
//! expectations the acceptance suite checks against.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::poset::FiniteGradedPoset;
use crate::simplicial::SimplicialComplex;

/// Documented outcomes for an example, written alongside the generated files.
#[derive(Debug, Clone, Serialize)]
pub struct ExpectedSummary {
    pub name: String,
    pub acyclic: bool,
    pub rayless: bool,
    pub ray_classes: usize,
    pub multiray: bool,
    /// critical cells per degree before any reversal (explicit region)
    pub critical_before: Vec<usize>,
    /// critical cells per degree after make_rayless (when defined)
    pub critical_after: Option<Vec<usize>>,
    /// Betti numbers of the Morse homology (when the pipeline completes)
    pub betti: Option<Vec<usize>>,
    /// torsion coefficients per degree
    pub torsion: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone)]
pub struct BuiltinExample {
    pub poset_text: String,
    pub matching_text: String,
    pub expected: ExpectedSummary,
}

pub const EXAMPLE_NAMES: [&str; 9] = [
    "halfline_ray",
    "halfline_rayless",
    "line_two_ends",
    "cylinder",
    "bypass_ladder",
    "rp2",
    "torus7",
    "s2_tetra",
    "delta2_cone",
];

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("v{i}")).collect()
}

pub fn rp2_complex() -> SimplicialComplex {
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

pub fn torus7_complex() -> SimplicialComplex {
    let mut facets = Vec::new();
    for i in 0..7u32 {
        facets.push(vec![i, (i + 1) % 7, (i + 3) % 7]);
        facets.push(vec![i, (i + 2) % 7, (i + 3) % 7]);
    }
    SimplicialComplex::from_facets(labels(7), facets).unwrap()
}

pub fn tetrahedron_boundary() -> SimplicialComplex {
    SimplicialComplex::from_facets(
        labels(4),
        vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 2, 3], vec![1, 2, 3]],
    )
    .unwrap()
}

/// Greedy collapse matching on a finite graded poset: make one top cell
/// critical, repeatedly match free pairs from the top dimension down, and
/// finish the leftover graph along a spanning tree. On a closed surface this
/// yields the minimal critical vector.
pub fn greedy_collapse_matching(p: &FiniteGradedPoset) -> Vec<(String, String)> {
    let n = p.len();
    let mut remaining = vec![true; n];
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    let top = p.max_degree();
    if let Some(first_top) = (0..n as u32).find(|&i| p.degree(i) == top) {
        if top >= 2 {
            remaining[first_top as usize] = false;
        }
    }
    for d in (2..=top).rev() {
        loop {
            let mut progressed = false;
            for e in 0..n as u32 {
                if !remaining[e as usize] || p.degree(e) != d - 1 {
                    continue;
                }
                let ups: Vec<u32> = p
                    .covers_above(e)
                    .iter()
                    .copied()
                    .filter(|&t| remaining[t as usize] && p.degree(t) == d)
                    .collect();
                if ups.len() == 1 {
                    pairs.push((ups[0], e));
                    remaining[ups[0] as usize] = false;
                    remaining[e as usize] = false;
                    progressed = true;
                }
            }
            if !progressed {
                break;
            }
        }
    }
    // leftover graph: spanning forest, each non-root vertex matched with its
    // parent edge
    let vertices: Vec<u32> = (0..n as u32)
        .filter(|&i| remaining[i as usize] && p.degree(i) == 0)
        .collect();
    let mut parent_edge: Vec<Option<u32>> = vec![None; n];
    let mut seen = vec![false; n];
    for &root in &vertices {
        if seen[root as usize] {
            continue;
        }
        seen[root as usize] = true;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &e in p.covers_above(v) {
                if !remaining[e as usize] || p.degree(e) != 1 {
                    continue;
                }
                for &w in p.covered_by(e) {
                    if !seen[w as usize] && remaining[w as usize] {
                        seen[w as usize] = true;
                        parent_edge[w as usize] = Some(e);
                        queue.push_back(w);
                    }
                }
            }
        }
    }
    let mut used_edges = std::collections::HashSet::new();
    for v in 0..n as u32 {
        if let Some(e) = parent_edge[v as usize] {
            if used_edges.insert(e) {
                pairs.push((e, v));
            }
        }
    }
    pairs
        .into_iter()
        .map(|(u, l)| (p.name(u).to_string(), p.name(l).to_string()))
        .collect()
}

fn finite_example(sc: &SimplicialComplex, matching: Vec<(String, String)>) -> (String, String) {
    let poset = sc.face_poset();
    let poset_text = crate::io::poset_to_string(&crate::poset::Poset::Finite(poset));
    let matching_text = matching
        .iter()
        .map(|(u, l)| format!("match {u} {l}\n"))
        .collect::<String>();
    (poset_text, matching_text)
}

/// Generates a built-in example by name.
pub fn generate(name: &str) -> Result<BuiltinExample> {
    match name {
        "halfline_ray" => Ok(BuiltinExample {
            poset_text: "periodic\ncell v 0\ncell e 1\narc e v 0\narc e v 1\n".into(),
            matching_text: "matcharc e v 0\n".into(),
            expected: ExpectedSummary {
                name: name.into(),
                acyclic: true,
                rayless: false,
                ray_classes: 1,
                multiray: false,
                critical_before: vec![],
                critical_after: Some(vec![1]),
                betti: Some(vec![1]),
                torsion: Some(vec![vec![]]),
            },
        }),
        "halfline_rayless" => Ok(BuiltinExample {
            poset_text: "periodic\ncell v 0\ncell e 1\narc e v 0\narc e v 1\n".into(),
            matching_text: "matcharc e v 1\n".into(),
            expected: ExpectedSummary {
                name: name.into(),
                acyclic: true,
                rayless: true,
                ray_classes: 0,
                multiray: false,
                critical_before: vec![1],
                critical_after: Some(vec![1]),
                betti: Some(vec![1]),
                torsion: Some(vec![vec![]]),
            },
        }),
        "line_two_ends" => Ok(BuiltinExample {
            poset_text: "periodic\n\
                         cell vL 0\ncell eL 1\ncell vR 0\ncell eR 1\n\
                         arc eL vL 0\narc eL vL 1\narc eR vR 0\narc eR vR 1\n\
                         prefixcell v0 0\nprefixcell eplus 1\nprefixcell eminus 1\n\
                         prefixcover eplus v0\nprefixcover eminus v0\n\
                         glue eplus vR\nglue eminus vL\n"
                .into(),
            matching_text: "match eplus v0\nmatcharc eR vR 0\nmatcharc eL vL 0\n".into(),
            expected: ExpectedSummary {
                name: name.into(),
                acyclic: true,
                rayless: false,
                ray_classes: 2,
                multiray: false,
                critical_before: vec![0, 1],
                critical_after: Some(vec![2, 1]),
                betti: Some(vec![1]),
                torsion: Some(vec![vec![]]),
            },
        }),
        "cylinder" => Ok(BuiltinExample {
            poset_text: "periodic\n\
                         cell va 0\ncell vb 0\ncell ha 1\ncell hb 1\ncell ua 1\ncell ub 1\n\
                         cell fa 2\ncell fb 2\n\
                         arc ha va 0\narc ha vb 0\narc hb vb 0\narc hb va 0\n\
                         arc ua va 0\narc ua va 1\narc ub vb 0\narc ub vb 1\n\
                         arc fa ha 0\narc fa ha 1\narc fa ua 0\narc fa ub 0\n\
                         arc fb hb 0\narc fb hb 1\narc fb ub 0\narc fb ua 0\n"
                .into(),
            matching_text:
                "matcharc ua va 1\nmatcharc ub vb 1\nmatcharc fa ha 1\nmatcharc fb hb 1\n".into(),
            expected: ExpectedSummary {
                name: name.into(),
                acyclic: true,
                rayless: true,
                ray_classes: 0,
                multiray: false,
                critical_before: vec![2, 2],
                critical_after: Some(vec![2, 2]),
                betti: Some(vec![1, 1]),
                torsion: Some(vec![vec![], vec![]]),
            },
        }),
        "bypass_ladder" => Ok(BuiltinExample {
            poset_text: "periodic\n\
                         cell z 0\ncell g 1\ncell h 1\ncell A 2\ncell B 2\n\
                         arc g z 0\narc h z 0\n\
                         arc A g 0\narc A g 1\narc A h 0\n\
                         arc B h 0\narc B g 1\n"
                .into(),
            matching_text: "matcharc A g 0\nmatcharc B h 0\n".into(),
            expected: ExpectedSummary {
                name: name.into(),
                acyclic: true,
                rayless: false,
                ray_classes: 0,
                multiray: true,
                critical_before: vec![0],
                critical_after: None,
                betti: None,
                torsion: None,
            },
        }),
        "rp2" => {
            let sc = rp2_complex();
            let matching = greedy_collapse_matching(&sc.face_poset());
            let (poset_text, matching_text) = finite_example(&sc, matching);
            Ok(BuiltinExample {
                poset_text,
                matching_text,
                expected: ExpectedSummary {
                    name: name.into(),
                    acyclic: true,
                    rayless: true,
                    ray_classes: 0,
                    multiray: false,
                    critical_before: vec![1, 1, 1],
                    critical_after: Some(vec![1, 1, 1]),
                    betti: Some(vec![1, 0, 0]),
                    torsion: Some(vec![vec![], vec!["2".into()], vec![]]),
                },
            })
        }
        "torus7" => {
            let sc = torus7_complex();
            let matching = greedy_collapse_matching(&sc.face_poset());
            let (poset_text, matching_text) = finite_example(&sc, matching);
            Ok(BuiltinExample {
                poset_text,
                matching_text,
                expected: ExpectedSummary {
                    name: name.into(),
                    acyclic: true,
                    rayless: true,
                    ray_classes: 0,
                    multiray: false,
                    critical_before: vec![1, 2, 1],
                    critical_after: Some(vec![1, 2, 1]),
                    betti: Some(vec![1, 2, 1]),
                    torsion: Some(vec![vec![], vec![], vec![]]),
                },
            })
        }
        "s2_tetra" => {
            let sc = tetrahedron_boundary();
            let matching = greedy_collapse_matching(&sc.face_poset());
            let (poset_text, matching_text) = finite_example(&sc, matching);
            Ok(BuiltinExample {
                poset_text,
                matching_text,
                expected: ExpectedSummary {
                    name: name.into(),
                    acyclic: true,
                    rayless: true,
                    ray_classes: 0,
                    multiray: false,
                    critical_before: vec![1, 0, 1],
                    critical_after: Some(vec![1, 0, 1]),
                    betti: Some(vec![1, 0, 1]),
                    torsion: Some(vec![vec![], vec![], vec![]]),
                },
            })
        }
        "delta2_cone" => {
            let sc = SimplicialComplex::from_facets(
                vec!["a".into(), "b".into(), "c".into()],
                vec![vec![0, 1, 2]],
            )
            .unwrap();
            let matching = vec![
                ("a-b".to_string(), "b".to_string()),
                ("a-c".to_string(), "c".to_string()),
                ("a-b-c".to_string(), "b-c".to_string()),
            ];
            let (poset_text, matching_text) = finite_example(&sc, matching);
            Ok(BuiltinExample {
                poset_text,
                matching_text,
                expected: ExpectedSummary {
                    name: name.into(),
                    acyclic: true,
                    rayless: true,
                    ray_classes: 0,
                    multiray: false,
                    critical_before: vec![1],
                    critical_after: Some(vec![1]),
                    betti: Some(vec![1]),
                    torsion: Some(vec![vec![]]),
                },
            })
        }
        other => Err(Error::UnknownExample(other.to_string())),
    }
}
