//! Python bindings: the poset and matching types plus the pipeline entry
//! points, returning JSON reports as strings.

use std::collections::HashMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use rayless::chain::morse_complex;
use rayless::incidence::compute_incidence;
use rayless::io::{matching_to_string, parse_matching, parse_poset, poset_to_string};
use rayless::matching::{critical_cells, is_acyclic, is_rayless, MorseMatching};
use rayless::pipeline::{run_analyze, run_homology, run_synth_only, run_validate, PipelineOptions};
use rayless::rays::{enumerate_rays, make_rayless, RayEnumeration};

fn err(e: rayless::Error) -> PyErr {
    PyValueError::new_err(format!("{e} (exit {})", e.exit_code()))
}

fn options(window: u64, budget: Option<usize>, reverse_first: bool) -> PipelineOptions {
    PipelineOptions {
        window,
        budget,
        reverse_first,
        with_timing: false,
    }
}

/// A finite or periodic graded poset.
#[pyclass(name = "Poset", from_py_object)]
#[derive(Clone)]
struct PyPoset {
    inner: rayless::poset::Poset,
}

#[pymethods]
impl PyPoset {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(PyPoset {
            inner: parse_poset(text).map_err(err)?,
        })
    }

    fn kind(&self) -> &'static str {
        match self.inner {
            rayless::poset::Poset::Finite(_) => "finite",
            rayless::poset::Poset::Periodic(_) => "periodic",
        }
    }

    fn degree(&self, cell: &str) -> PyResult<usize> {
        let r = self.inner.parse_ref(cell).map_err(err)?;
        Ok(self.inner.degree(r))
    }

    fn covered_by(&self, cell: &str) -> PyResult<Vec<String>> {
        let r = self.inner.parse_ref(cell).map_err(err)?;
        Ok(self
            .inner
            .covered_by(r)
            .map_err(err)?
            .into_iter()
            .map(|x| self.inner.display_ref(x))
            .collect())
    }

    fn down_set_size(&self, cell: &str) -> PyResult<usize> {
        let r = self.inner.parse_ref(cell).map_err(err)?;
        Ok(self.inner.down_set(r).map_err(err)?.len())
    }

    fn is_h_admissible(&self, window: u64) -> bool {
        rayless::admissibility::is_h_admissible(&self.inner, window).passed()
    }

    fn to_text(&self) -> String {
        poset_to_string(&self.inner)
    }
}

/// A Morse matching on a poset.
#[pyclass(name = "Matching", from_py_object)]
#[derive(Clone)]
struct PyMatching {
    poset: rayless::poset::Poset,
    inner: MorseMatching,
}

#[pymethods]
impl PyMatching {
    #[staticmethod]
    fn parse(poset: &PyPoset, text: &str) -> PyResult<Self> {
        let inner = parse_matching(text, &poset.inner).map_err(err)?;
        Ok(PyMatching {
            poset: poset.inner.clone(),
            inner,
        })
    }

    fn is_acyclic(&self) -> PyResult<bool> {
        Ok(is_acyclic(&self.poset, &self.inner)
            .map_err(err)?
            .is_acyclic())
    }

    fn is_rayless(&self) -> PyResult<bool> {
        Ok(is_rayless(&self.poset, &self.inner)
            .map_err(err)?
            .is_rayless())
    }

    fn critical_counts(&self) -> Vec<String> {
        critical_cells(&self.poset, &self.inner)
            .counts()
            .iter()
            .map(|c| match c {
                rayless::homology::Count::Finite(n) => n.to_string(),
                rayless::homology::Count::Infinite => "infinite".to_string(),
            })
            .collect()
    }

    fn ray_class_count(&self) -> PyResult<usize> {
        match enumerate_rays(&self.poset, &self.inner).map_err(err)? {
            RayEnumeration::Classes(set) => Ok(set.classes.len()),
            RayEnumeration::Multiray(ev) => Err(PyValueError::new_err(format!(
                "uncountably many ray classes: {}",
                ev.reason
            ))),
        }
    }

    /// Reverses every ray class; returns the rayless matching on its possibly
    /// re-blocked poset and the new critical cells.
    fn make_rayless(&self) -> PyResult<(PyPoset, PyMatching, Vec<String>)> {
        let (p, m, log) = make_rayless(&self.poset, &self.inner).map_err(err)?;
        let new_criticals = log.iter().map(|(_, c)| p.display_ref(*c)).collect();
        Ok((
            PyPoset { inner: p.clone() },
            PyMatching { poset: p, inner: m },
            new_criticals,
        ))
    }

    /// Betti numbers and torsion coefficients of the Morse complex,
    /// per degree.
    fn morse_homology(&self, budget: usize) -> PyResult<Vec<(usize, Vec<String>)>> {
        let incidence = compute_incidence(&self.poset).map_err(err)?;
        let complex = morse_complex(
            &self.poset,
            &self.inner,
            &incidence,
            &HashMap::new(),
            budget,
        )
        .map_err(err)?;
        let h = complex.homology().map_err(err)?;
        Ok(h.groups.into_iter().map(|g| (g.betti, g.torsion)).collect())
    }

    fn to_text(&self) -> String {
        matching_to_string(&self.poset, &self.inner)
    }
}

/// Validation verdicts as a JSON report string plus the exit code.
#[pyfunction]
#[pyo3(signature = (poset_text, matching_text, window=3, budget=None))]
fn validate(
    poset_text: &str,
    matching_text: &str,
    window: u64,
    budget: Option<usize>,
) -> PyResult<(String, i32)> {
    let (report, code) =
        run_validate(poset_text, matching_text, options(window, budget, false)).map_err(err)?;
    Ok((report.to_json(), code))
}

/// The full pipeline; exit code 3 signals a multiray.
#[pyfunction]
#[pyo3(signature = (poset_text, matching_text, window=3, budget=None))]
fn analyze(
    poset_text: &str,
    matching_text: &str,
    window: u64,
    budget: Option<usize>,
) -> PyResult<(String, i32)> {
    let (report, code) =
        run_analyze(poset_text, matching_text, options(window, budget, false)).map_err(err)?;
    Ok((report.to_json(), code))
}

/// Morse function synthesis; refuses non-rayless input unless reverse_first.
#[pyfunction]
#[pyo3(signature = (poset_text, matching_text, window=3, budget=None, reverse_first=false))]
fn synthesize(
    poset_text: &str,
    matching_text: &str,
    window: u64,
    budget: Option<usize>,
    reverse_first: bool,
) -> PyResult<(String, i32)> {
    let (report, code) = run_synth_only(
        poset_text,
        matching_text,
        options(window, budget, reverse_first),
    )
    .map_err(err)?;
    Ok((report.to_json(), code))
}

/// Cellular and order-complex homology of a poset file; periodic posets are
/// truncated to `truncate` rows (default 50).
#[pyfunction]
#[pyo3(signature = (poset_text, truncate=None))]
fn homology_of(poset_text: &str, truncate: Option<u64>) -> PyResult<String> {
    let (cellular, simplicial) =
        run_homology(poset_text, truncate, PipelineOptions::default()).map_err(err)?;
    serde_json::to_string_pretty(&serde_json::json!({
        "cellular": cellular,
        "simplicial_order_complex": simplicial,
    }))
    .map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Built-in example files: returns (poset_text, matching_text, expected_json).
#[pyfunction]
fn example(name: &str) -> PyResult<(String, String, String)> {
    let ex = rayless::builtins::generate(name).map_err(err)?;
    let expected = serde_json::to_string_pretty(&ex.expected)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok((ex.poset_text, ex.matching_text, expected))
}

#[pyfunction]
fn example_names() -> Vec<String> {
    rayless::builtins::EXAMPLE_NAMES
        .iter()
        .map(|s| s.to_string())
        .collect()
}

#[pymodule]
fn rayless_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPoset>()?;
    m.add_class::<PyMatching>()?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(homology_of, m)?)?;
    m.add_function(wrap_pyfunction!(example, m)?)?;
    m.add_function(wrap_pyfunction!(example_names, m)?)?;
    Ok(())
}
