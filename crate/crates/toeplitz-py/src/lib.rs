//! Python bindings. Reports come back as plain dicts and lists shaped like
//! the CLI's JSON output; exact integers cross the boundary as decimal
//! strings when they can exceed machine range.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::{json, Value};

use toeplitz_core::{
    complexity_table, extensional_equal, make_phi, realize_spec, root_of_shift, BlockSpec,
    BlockSystem, ConstructionSpec, EntropyMode, Error, OrderResult, Scale as CoreScale,
    SequenceWindow, ToeplitzSystem, WindowMap,
};

fn err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py(py: Python<'_>, v: &Value) -> PyObject {
    match v {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_py(py),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_py(py)
            } else if let Some(u) = n.as_u64() {
                u.into_py(py)
            } else {
                n.as_f64().expect("finite").into_py(py)
            }
        }
        Value::String(s) => s.into_py(py),
        Value::Array(items) => {
            let list = PyList::empty_bound(py);
            for item in items {
                list.append(to_py(py, item)).expect("append");
            }
            list.into_py(py)
        }
        Value::Object(map) => {
            let dict = PyDict::new_bound(py);
            for (k, item) in map {
                dict.set_item(k, to_py(py, item)).expect("set");
            }
            dict.into_py(py)
        }
    }
}

/// A Toeplitz system: the point, its period ladder, and the certified
/// operations on them.
#[pyclass(frozen)]
struct System {
    inner: ToeplitzSystem,
}

#[pymethods]
impl System {
    /// System of a single hole word, e.g. "a?b?c".
    #[new]
    fn new(word: &str) -> PyResult<Self> {
        Ok(System {
            inner: ToeplitzSystem::constant_word(word).map_err(err)?,
        })
    }

    /// System with one hole word per level; the last level stays unfilled.
    #[staticmethod]
    fn per_level(words: Vec<String>) -> PyResult<Self> {
        let refs: Vec<&str> = words.iter().map(|w| w.as_str()).collect();
        Ok(System {
            inner: ToeplitzSystem::per_level(&refs).map_err(err)?,
        })
    }

    /// System from a construction spec JSON document.
    #[staticmethod]
    fn from_spec(text: &str) -> PyResult<Self> {
        Ok(System {
            inner: ConstructionSpec::from_json(text).map_err(err)?.build().map_err(err)?,
        })
    }

    fn label(&self) -> String {
        self.inner.label()
    }

    fn alphabet(&self) -> Vec<String> {
        let a = self.inner.alphabet();
        (0..a.len() as u8)
            .map(|i| a.label(toeplitz_core::Cell::letter(i)).to_string())
            .collect()
    }

    /// The point on [start, end), rendered; holes print as '?'.
    fn window(&self, start: i64, end: i64) -> PyResult<String> {
        let win = self.inner.window(start, end).map_err(err)?;
        Ok(self.inner.alphabet().render(win.cells()))
    }

    fn ladder_depth(&self) -> usize {
        self.inner.ladder_depth()
    }

    fn ladder_period(&self, n: u32) -> PyResult<i64> {
        self.inner.ladder_period(n).map_err(err)
    }

    /// Level-n structure on [start, end): the periodic letters with holes at
    /// the not-yet-determined classes, plus exactness of the certification.
    fn skeleton(&self, py: Python<'_>, n: u32, start: i64, end: i64) -> PyResult<PyObject> {
        let rep = self.inner.skeleton(n, start, end).map_err(err)?;
        Ok(to_py(
            py,
            &json!({
                "exact": rep.exact,
                "horizon": rep.horizon,
                "level": rep.level,
                "period": rep.period,
                "unresolved": rep.unresolved,
                "window": self.inner.alphabet().render(rep.window.cells()),
            }),
        ))
    }

    /// Per level: (level, period, certified-essential).
    fn essential_periods(&self, depth: u32) -> PyResult<Vec<(u32, i64, bool)>> {
        Ok(self
            .inner
            .essential_periods(depth)
            .map_err(err)?
            .iter()
            .map(|r| (r.level, r.period, r.certified))
            .collect())
    }

    /// Distinct factor counts: [(length, count, certified), ...].
    fn complexity(&self, lens: Vec<usize>) -> PyResult<Vec<(usize, u64, bool)>> {
        let table = complexity_table(&self.inner, &lens).map_err(err)?;
        Ok(table.rows.iter().map(|r| (r.len, r.count, r.certified)).collect())
    }

    /// Recover the phase of a rendered hole-free window at level n.
    fn phase(&self, text: &str, n: u32) -> PyResult<i64> {
        let alphabet = self.inner.alphabet();
        let cells = text
            .chars()
            .map(|c| alphabet.cell_of(&c.to_string()))
            .collect::<toeplitz_core::Result<Vec<_>>>()
            .map_err(err)?;
        let window = SequenceWindow::new(0, cells);
        Ok(self.inner.phase(&window, n).map_err(err)?.phase)
    }

    /// Certificate of the level-n transport map (the hole-content shift).
    fn phi_certificate(&self, py: Python<'_>, n: u32) -> PyResult<PyObject> {
        let (_, cert) = make_phi(&self.inner, n).map_err(err)?;
        Ok(to_py(
            py,
            &json!({
                "certification": cert.certification,
                "factors_tested": cert.factors_tested,
                "identity_cells": cert.identity_cells,
                "identity_checked": cert.identity_checked,
                "level": cert.level,
                "period": cert.period,
                "phase_len": cert.phase_len,
                "radius": cert.radius,
            }),
        ))
    }

    /// Does the q_n-th power of the transport map equal the p_n-shift,
    /// extensionally on a certified window?
    fn phi_power_equals_shift(&self, n: u32) -> PyResult<bool> {
        let core = self.inner.structural_core(n).map_err(err)?;
        let holes = u32::try_from(core.hole_count())
            .map_err(|_| PyValueError::new_err("power exponent out of range"))?;
        let (map, _) = make_phi(&self.inner, n).map_err(err)?;
        let eq = extensional_equal(
            &self.inner,
            &map.pow(holes),
            &WindowMap::shift(core.period()),
        )
        .map_err(err)?;
        Ok(eq.equal)
    }

    /// Certificate of the degree-q_n root of the shift at level n.
    fn root_certificate(&self, py: Python<'_>, n: u32) -> PyResult<PyObject> {
        let (_, cert) = root_of_shift(&self.inner, n).map_err(err)?;
        Ok(to_py(
            py,
            &json!({
                "a": cert.a,
                "b": cert.b,
                "certification": cert.equivalence.certification,
                "degree": cert.degree,
                "level": cert.level,
                "verified": cert.verified,
            }),
        ))
    }

    fn __repr__(&self) -> String {
        format!("System({})", self.inner.label())
    }
}

/// The period ladder of a Toeplitz system, as a group: the inverse limit of
/// Z / p_n Z along the divisibility chain.
#[pyclass(frozen)]
struct Scale {
    inner: CoreScale,
}

#[pymethods]
impl Scale {
    /// Ladder from explicit periods, each dividing the next.
    #[new]
    fn new(periods: Vec<u64>) -> PyResult<Self> {
        Ok(Scale {
            inner: CoreScale::from_u64(&periods).map_err(err)?,
        })
    }

    /// Geometric ladder base, base^2, ..., base^depth.
    #[staticmethod]
    fn powers(base: u64, depth: usize) -> PyResult<Self> {
        Ok(Scale {
            inner: CoreScale::powers(base, depth).map_err(err)?,
        })
    }

    #[staticmethod]
    fn factorial(depth: usize) -> PyResult<Self> {
        Ok(Scale {
            inner: CoreScale::factorial(depth).map_err(err)?,
        })
    }

    #[staticmethod]
    fn primorial(depth: usize) -> PyResult<Self> {
        Ok(Scale {
            inner: CoreScale::primorial(depth).map_err(err)?,
        })
    }

    /// Periods as decimal strings, shallowest first.
    fn periods(&self) -> Vec<String> {
        self.inner.periods().iter().map(|p| p.to_string()).collect()
    }

    /// Torsion of the quotient by the integers: cyclic factors for primes
    /// with stabilized multiplicity, unresolved primes listed separately.
    fn torsion(&self, py: Python<'_>) -> PyObject {
        let t = self.inner.torsion_structure();
        to_py(
            py,
            &json!({
                "factors": t.factors.iter()
                    .map(|(p, o)| json!([p.to_string(), o.to_string()]))
                    .collect::<Vec<_>>(),
                "torsion_free_certified": t.is_torsion_free_certified(),
                "unresolved": t.unresolved.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
            }),
        )
    }

    /// Is translation by the integer m minimal on this ladder?
    fn is_minimal_translation(&self, m: i64) -> bool {
        self.inner.is_minimal_translation(&m.into())
    }

    /// Smallest multiple of the integer element k landing within
    /// `shift_bound` of an integer, walked up to `cap` multiples. Returns
    /// (order, shift) or None when unresolved at the cap.
    #[pyo3(signature = (k, shift_bound = 0, cap = 4096))]
    fn order_of(&self, k: i64, shift_bound: u64, cap: u64) -> Option<(u64, String)> {
        let element = self.inner.integer_element(&k.into());
        match element.order_mod_integers(&shift_bound.into(), cap) {
            OrderResult::Finite { order, shift } => Some((order, shift.to_string())),
            OrderResult::UnresolvedAtDepth { .. } => None,
        }
    }

    fn __repr__(&self) -> String {
        format!("Scale({:?})", self.periods())
    }
}

/// A block tower construction: nested blocks with pinned prefixes and
/// suffixes, materialized letter-exactly as far as the scale allows.
#[pyclass(frozen)]
struct BlockTower {
    spec: BlockSpec,
    inner: BlockSystem,
}

#[pymethods]
impl BlockTower {
    /// The small tower: counts double each level on the minimal scale.
    #[staticmethod]
    fn toy(k1: u64, levels: u32) -> PyResult<Self> {
        let spec = BlockSpec::toy(k1, levels);
        Ok(BlockTower {
            inner: BlockSystem::new(spec.clone()).map_err(err)?,
            spec,
        })
    }

    /// The growth-rule tower: k_{n+1} >= k_n^(1 + d0/p_n) block counts.
    #[staticmethod]
    fn faithful(k1: u64, d0: u64, levels: u32) -> PyResult<Self> {
        let spec = BlockSpec::faithful(k1, d0, levels);
        Ok(BlockTower {
            inner: BlockSystem::new(spec.clone()).map_err(err)?,
            spec,
        })
    }

    fn label(&self) -> String {
        self.inner.label()
    }

    fn scale(&self) -> Vec<String> {
        self.inner.block_scale().iter().map(|p| p.to_string()).collect()
    }

    /// Block counts per level, None where only bounds are known.
    fn block_counts(&self) -> Vec<Option<String>> {
        self.inner
            .level_reports()
            .iter()
            .map(|r| r.k.as_ref().map(|k| k.to_string()))
            .collect()
    }

    /// Level-n blocks never overlap themselves or each other nontrivially.
    fn overlap_ok(&self, n: u32) -> PyResult<bool> {
        Ok(self.inner.check_trivial_overlap(n).map_err(err)?.ok)
    }

    /// Letter-exact recount of the inheritance rules at level n.
    fn inheritance_ok(&self, n: u32) -> PyResult<bool> {
        let c = self.inner.verify_c1_c2(n).map_err(err)?;
        Ok(c.affixes_ok && c.initial_absent_ok && c.multiplicities_ok != Some(false))
    }

    /// Block frequencies at level n over a window of `window_len` cells:
    /// {"exact": bool | None, "rows": [(index, empirical, predicted)]}.
    fn frequencies(&self, py: Python<'_>, n: u32, window_len: i64) -> PyResult<PyObject> {
        let t = self.inner.frequencies(n, window_len).map_err(err)?;
        Ok(to_py(
            py,
            &json!({
                "exact": t.exact,
                "rows": t.rows.iter().map(|r| json!([
                    r.index,
                    r.empirical.to_string(),
                    r.predicted.as_ref().map(|p| p.to_string()),
                ])).collect::<Vec<_>>(),
            }),
        ))
    }

    /// Density floor log k_n / p_n per level and its maximum.
    fn entropy_lower_bound(&self, py: Python<'_>, depth: u32) -> PyResult<PyObject> {
        let e = self.inner.entropy_lower_bound(depth).map_err(err)?;
        Ok(to_py(
            py,
            &json!({
                "chain": e.chain,
                "max_density": e.max_density,
                "per_level": e.per_level,
            }),
        ))
    }

    /// The tower as a system, for windows and complexity.
    fn system(&self) -> PyResult<System> {
        // Construction is deterministic, so the rebuilt tower is
        // extensionally the same point.
        Ok(System {
            inner: ToeplitzSystem::blocks(self.spec.clone()).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!("BlockTower({})", self.inner.label())
    }
}

/// Build a construction spec whose automorphism group is Z^d (+ Z/a for
/// a > 1), with the requested entropy regime ("zero" or "positive").
/// Returns (spec_json, primes, expected_group).
#[pyfunction]
#[pyo3(signature = (d, a = 1, entropy = "zero"))]
fn realize(d: u64, a: u64, entropy: &str) -> PyResult<(String, Vec<u64>, String)> {
    let mode = match entropy {
        "zero" => EntropyMode::Zero,
        "positive" => EntropyMode::Positive,
        other => {
            return Err(PyValueError::new_err(format!(
                "entropy must be \"zero\" or \"positive\", got {other:?}"
            )))
        }
    };
    let (spec, report) = realize_spec(d, a, mode).map_err(err)?;
    Ok((spec.to_json_pretty(), report.primes, report.expected_group))
}

#[pymodule]
fn toeplitz_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<System>()?;
    m.add_class::<Scale>()?;
    m.add_class::<BlockTower>()?;
    m.add_function(wrap_pyfunction!(realize, m)?)?;
    Ok(())
}
