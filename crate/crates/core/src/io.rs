//! Line-oriented text formats for posets, matchings, and rays.
//!
//! Poset files start with `finite` or `periodic`. Finite posets use
//! `cell <id> <degree>` and `cover <upper> <lower>`. Periodic posets describe
//! the pattern with `cell` and `arc <upper> <lower> <shift>` (shift in
//! -1..=1), the prefix with `prefixcell`/`prefixcover`, and the seam with
//! `glue <upper> <lower>` joining a prefix element and a pattern cell at row
//! zero. Lifted cells are written `name@row`. `#` starts a comment.
//!
//! Matching files use `match <upper> <lower>`, `matcharc <upper> <lower>
//! <shift>`, and an optional `tailfrom <row>`. Rays are single lines
//! `ray prefix <id>...; cycle <qcell@shift>...; phase <row>`.

use crate::error::{Error, Result};
use crate::matching::{MorseMatching, QuotientHm};
use crate::poset::{
    ElementRef, FiniteGradedPoset, Glue, PeriodicPoset, Poset, QuotientPattern, SeamSide,
};
use crate::rays::Ray;

fn tokens(line: &str) -> Vec<(usize, &str)> {
    let without_comment = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut out = Vec::new();
    let mut col = 0;
    for part in without_comment.split_whitespace() {
        let at = without_comment[col..].find(part).unwrap() + col;
        out.push((at + 1, part));
        col = at + part.len();
    }
    out
}

fn parse_usize(lineno: usize, col: usize, s: &str, what: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::parse(lineno, col, format!("expected {what}, found {s:?}")))
}

fn parse_shift(lineno: usize, col: usize, s: &str) -> Result<i8> {
    let v: i64 = s
        .parse()
        .map_err(|_| Error::parse(lineno, col, format!("expected shift, found {s:?}")))?;
    if !(-1..=1).contains(&v) {
        return Err(Error::parse(
            lineno,
            col,
            format!("shift {v} outside -1..=1"),
        ));
    }
    Ok(v as i8)
}

/// Parses a poset file.
pub fn parse_poset(text: &str) -> Result<Poset> {
    let mut kind: Option<&str> = None;
    let mut cells: Vec<(String, usize)> = Vec::new();
    let mut covers: Vec<(String, String)> = Vec::new();
    let mut arcs: Vec<(String, String, i8)> = Vec::new();
    let mut prefix_cells: Vec<(String, usize)> = Vec::new();
    let mut prefix_covers: Vec<(String, String)> = Vec::new();
    let mut glue: Vec<(usize, String, String)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let toks = tokens(line);
        if toks.is_empty() {
            continue;
        }
        let (col0, head) = toks[0];
        let expect = |n: usize| -> Result<()> {
            if toks.len() != n + 1 {
                return Err(Error::parse(
                    lineno,
                    col0,
                    format!("{head} takes {n} arguments, found {}", toks.len() - 1),
                ));
            }
            Ok(())
        };
        match head {
            "finite" | "periodic" => {
                if kind.is_some() {
                    return Err(Error::parse(lineno, col0, "duplicate header"));
                }
                kind = Some(head);
            }
            "cell" => {
                expect(2)?;
                let deg = parse_usize(lineno, toks[2].0, toks[2].1, "degree")?;
                cells.push((toks[1].1.to_string(), deg));
            }
            "cover" => {
                expect(2)?;
                covers.push((toks[1].1.to_string(), toks[2].1.to_string()));
            }
            "arc" => {
                expect(3)?;
                let shift = parse_shift(lineno, toks[3].0, toks[3].1)?;
                arcs.push((toks[1].1.to_string(), toks[2].1.to_string(), shift));
            }
            "prefixcell" => {
                expect(2)?;
                let deg = parse_usize(lineno, toks[2].0, toks[2].1, "degree")?;
                prefix_cells.push((toks[1].1.to_string(), deg));
            }
            "prefixcover" => {
                expect(2)?;
                prefix_covers.push((toks[1].1.to_string(), toks[2].1.to_string()));
            }
            "glue" => {
                expect(2)?;
                glue.push((lineno, toks[1].1.to_string(), toks[2].1.to_string()));
            }
            other => {
                return Err(Error::parse(
                    lineno,
                    col0,
                    format!("unknown directive {other:?}"),
                ));
            }
        }
    }
    match kind {
        Some("finite") => {
            if !arcs.is_empty() || !prefix_cells.is_empty() || !glue.is_empty() {
                return Err(Error::parse(1, 1, "finite poset with periodic directives"));
            }
            let names: Vec<String> = cells.iter().map(|(n, _)| n.clone()).collect();
            let degrees: Vec<usize> = cells.iter().map(|(_, d)| *d).collect();
            let poset = FiniteGradedPoset::from_covers_with_declared(names, degrees, covers)?;
            Ok(Poset::Finite(poset))
        }
        Some("periodic") => {
            if !covers.is_empty() {
                return Err(Error::parse(
                    1,
                    1,
                    "periodic poset uses arc/prefixcover, not cover",
                ));
            }
            let names: Vec<String> = cells.iter().map(|(n, _)| n.clone()).collect();
            let degrees: Vec<usize> = cells.iter().map(|(_, d)| *d).collect();
            let pattern = QuotientPattern::new(names, degrees, arcs)?;
            for (name, declared) in &cells {
                let q = pattern.lookup(name).unwrap();
                if pattern.degree(q) != *declared {
                    return Err(Error::NotGraded(format!(
                        "declared degree of pattern cell {name} disagrees with arcs"
                    )));
                }
            }
            let pnames: Vec<String> = prefix_cells.iter().map(|(n, _)| n.clone()).collect();
            let pdegrees: Vec<usize> = prefix_cells.iter().map(|(_, d)| *d).collect();
            let prefix = if pnames.is_empty() {
                FiniteGradedPoset::empty()
            } else {
                FiniteGradedPoset::from_covers_with_declared(pnames, pdegrees, prefix_covers)?
            };
            let mut resolved_glue = Vec::new();
            for (lineno, upper, lower) in glue {
                let side = |name: &str| -> Result<SeamSide> {
                    if let Some(i) = prefix.lookup(name) {
                        Ok(SeamSide::Prefix(i))
                    } else if let Some(q) = pattern.lookup(name) {
                        Ok(SeamSide::Pattern(q))
                    } else {
                        Err(Error::DanglingGlue(format!("{name} (line {lineno})")))
                    }
                };
                resolved_glue.push(Glue {
                    upper: side(&upper)?,
                    lower: side(&lower)?,
                });
            }
            Ok(Poset::Periodic(PeriodicPoset::new(
                pattern,
                prefix,
                resolved_glue,
            )?))
        }
        _ => Err(Error::parse(1, 1, "missing `finite` or `periodic` header")),
    }
}

/// Parses a matching file against its poset.
pub fn parse_matching(text: &str, poset: &Poset) -> Result<MorseMatching> {
    let mut pairs = Vec::new();
    let mut selection = Vec::new();
    let mut tail_from = 0u64;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let toks = tokens(line);
        if toks.is_empty() {
            continue;
        }
        let (col0, head) = toks[0];
        match head {
            "match" => {
                if toks.len() != 3 {
                    return Err(Error::parse(lineno, col0, "match takes 2 arguments"));
                }
                let upper = poset
                    .parse_ref(toks[1].1)
                    .map_err(|e| relocate(e, lineno, toks[1].0))?;
                let lower = poset
                    .parse_ref(toks[2].1)
                    .map_err(|e| relocate(e, lineno, toks[2].0))?;
                pairs.push((upper, lower));
            }
            "matcharc" => {
                if toks.len() != 4 {
                    return Err(Error::parse(lineno, col0, "matcharc takes 3 arguments"));
                }
                let Poset::Periodic(pp) = poset else {
                    return Err(Error::parse(
                        lineno,
                        col0,
                        "matcharc needs a periodic poset",
                    ));
                };
                let shift = parse_shift(lineno, toks[3].0, toks[3].1)?;
                let upper = pp
                    .pattern
                    .lookup(toks[1].1)
                    .ok_or_else(|| Error::parse(lineno, toks[1].0, "unknown pattern cell"))?;
                let lower = pp
                    .pattern
                    .lookup(toks[2].1)
                    .ok_or_else(|| Error::parse(lineno, toks[2].0, "unknown pattern cell"))?;
                let idx = pp
                    .pattern
                    .arcs()
                    .iter()
                    .position(|a| a.upper == upper && a.lower == lower && a.shift == shift)
                    .ok_or_else(|| Error::parse(lineno, col0, "no such arc"))?;
                selection.push(idx as u32);
            }
            "tailfrom" => {
                if toks.len() != 2 {
                    return Err(Error::parse(lineno, col0, "tailfrom takes 1 argument"));
                }
                tail_from = parse_usize(lineno, toks[1].0, toks[1].1, "row")? as u64;
            }
            other => {
                return Err(Error::parse(
                    lineno,
                    col0,
                    format!("unknown directive {other:?}"),
                ));
            }
        }
    }
    MorseMatching::build(poset, pairs, selection, tail_from)
}

fn relocate(e: Error, line: usize, col: usize) -> Error {
    match e {
        Error::UnknownElement(what) => Error::parse(line, col, format!("unknown element {what}")),
        other => other,
    }
}

/// Parses a one-line ray description.
pub fn parse_ray(text: &str, poset: &Poset, matching: &MorseMatching) -> Result<Ray> {
    let q = QuotientHm::build(poset, matching)
        .ok_or_else(|| Error::InvalidRay("rays need a periodic poset".into()))?;
    let Poset::Periodic(pp) = poset else {
        unreachable!()
    };
    let mut ray_line = None;
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.split('#').next().unwrap_or("").trim();
        if trimmed.is_empty() {
            continue;
        }
        if ray_line.is_some() {
            return Err(Error::parse(i + 1, 1, "more than one ray line"));
        }
        ray_line = Some((i + 1, trimmed.to_string()));
    }
    let (lineno, line) = ray_line.ok_or_else(|| Error::parse(1, 1, "missing ray line"))?;
    let body = line
        .strip_prefix("ray")
        .ok_or_else(|| Error::parse(lineno, 1, "ray line must start with `ray`"))?;
    let mut prefix: Vec<ElementRef> = Vec::new();
    let mut steps: Vec<(u32, i8)> = Vec::new();
    let mut phase: Option<u64> = None;
    for section in body.split(';') {
        let toks: Vec<&str> = section.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        match toks[0] {
            "prefix" => {
                for t in &toks[1..] {
                    prefix.push(poset.parse_ref(t).map_err(|e| relocate(e, lineno, 1))?);
                }
            }
            "cycle" => {
                for t in &toks[1..] {
                    let (name, shift) = t.rsplit_once('@').ok_or_else(|| {
                        Error::parse(lineno, 1, format!("cycle item {t:?} is not qcell@shift"))
                    })?;
                    let qc = pp
                        .pattern
                        .lookup(name)
                        .ok_or_else(|| Error::parse(lineno, 1, "unknown pattern cell"))?;
                    let s: i8 = shift
                        .parse()
                        .map_err(|_| Error::parse(lineno, 1, "bad shift"))?;
                    steps.push((qc, s));
                }
            }
            "phase" => {
                if toks.len() != 2 {
                    return Err(Error::parse(lineno, 1, "phase takes 1 argument"));
                }
                phase = Some(
                    toks[1]
                        .parse()
                        .map_err(|_| Error::parse(lineno, 1, "bad phase row"))?,
                );
            }
            other => {
                return Err(Error::parse(
                    lineno,
                    1,
                    format!("unknown ray section {other:?}"),
                ));
            }
        }
    }
    if steps.is_empty() {
        return Err(Error::parse(lineno, 1, "ray needs a cycle section"));
    }
    let base_row = phase.ok_or_else(|| Error::parse(lineno, 1, "ray needs a phase section"))?;
    // resolve steps to quotient edges
    let mut edges = Vec::new();
    let mut nodes = Vec::new();
    for (i, &(from, shift)) in steps.iter().enumerate() {
        let to = steps[(i + 1) % steps.len()].0;
        let e = q
            .edges
            .iter()
            .position(|e| e.from == from && e.to == to && e.shift == shift)
            .ok_or_else(|| {
                Error::InvalidRay(format!(
                    "no H_M quotient arrow {} -> {} with shift {shift}",
                    pp.pattern.name(from),
                    pp.pattern.name(to)
                ))
            })?;
        nodes.push(from);
        edges.push(e as u32);
    }
    let net = edges
        .iter()
        .map(|&e| q.edges[e as usize].shift as i64)
        .sum();
    let ray = Ray {
        prefix,
        cycle: crate::matching::QCycle { edges, nodes, net },
        base_row,
    };
    ray.validate(poset, matching)?;
    Ok(ray)
}

/// Serializes a poset in the file format; parsing the result reproduces it.
pub fn poset_to_string(poset: &Poset) -> String {
    let mut out = String::new();
    match poset {
        Poset::Finite(p) => {
            out.push_str("finite\n");
            for i in 0..p.len() as u32 {
                out.push_str(&format!("cell {} {}\n", p.name(i), p.degree(i)));
            }
            for (u, l) in p.covers() {
                out.push_str(&format!("cover {} {}\n", p.name(u), p.name(l)));
            }
        }
        Poset::Periodic(pp) => {
            out.push_str("periodic\n");
            for q in 0..pp.pattern.len() as u32 {
                out.push_str(&format!(
                    "cell {} {}\n",
                    pp.pattern.name(q),
                    pp.pattern.degree(q)
                ));
            }
            for a in pp.pattern.arcs() {
                out.push_str(&format!(
                    "arc {} {} {}\n",
                    pp.pattern.name(a.upper),
                    pp.pattern.name(a.lower),
                    a.shift
                ));
            }
            for i in 0..pp.prefix.len() as u32 {
                out.push_str(&format!(
                    "prefixcell {} {}\n",
                    pp.prefix.name(i),
                    pp.prefix.degree(i)
                ));
            }
            for (u, l) in pp.prefix.covers() {
                out.push_str(&format!(
                    "prefixcover {} {}\n",
                    pp.prefix.name(u),
                    pp.prefix.name(l)
                ));
            }
            let side = |s: SeamSide| match s {
                SeamSide::Prefix(i) => pp.prefix.name(i).to_string(),
                SeamSide::Pattern(q) => pp.pattern.name(q).to_string(),
            };
            for g in &pp.glue {
                out.push_str(&format!("glue {} {}\n", side(g.upper), side(g.lower)));
            }
        }
    }
    out
}

pub fn matching_to_string(poset: &Poset, matching: &MorseMatching) -> String {
    let mut out = String::new();
    for &(u, l) in matching.pairs() {
        out.push_str(&format!(
            "match {} {}\n",
            poset.display_ref(u),
            poset.display_ref(l)
        ));
    }
    if let Poset::Periodic(pp) = poset {
        for &k in matching.selected_arcs() {
            let a = pp.pattern.arc(k);
            out.push_str(&format!(
                "matcharc {} {} {}\n",
                pp.pattern.name(a.upper),
                pp.pattern.name(a.lower),
                a.shift
            ));
        }
        if matching.tail_from() != 0 {
            out.push_str(&format!("tailfrom {}\n", matching.tail_from()));
        }
    }
    out
}

pub fn ray_to_string(poset: &Poset, matching: &MorseMatching, ray: &Ray) -> String {
    let q = QuotientHm::build(poset, matching).expect("periodic poset");
    let Poset::Periodic(pp) = poset else {
        unreachable!()
    };
    let prefix = ray
        .prefix
        .iter()
        .map(|&r| poset.display_ref(r))
        .collect::<Vec<_>>()
        .join(" ");
    let cycle = ray
        .cycle
        .edges
        .iter()
        .map(|&e| {
            let edge = q.edges[e as usize];
            format!("{}@{}", pp.pattern.name(edge.from), edge.shift)
        })
        .collect::<Vec<_>>()
        .join(" ");
    format!(
        "ray prefix {prefix} ; cycle {cycle} ; phase {}\n",
        ray.base_row
    )
}
