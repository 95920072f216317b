//! Python bindings for the ancestor-statistics library: dislocation
//! models with their regime predictions and continuum estimators, tree
//! generation with exact ancestor counts, the Karlin urn engine, and the
//! replicated experiment runner with its scaling fits.
//!
//! The module mirrors the Rust API closely; every stochastic entry point
//! takes an explicit `seed` and derives its stream with the same keying
//! as the Rust harness, so Python-side results are reproducible and, for
//! the experiment runner, bit-identical to the CLI's.

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use fragtree::generate::{self, GroupingPolicy};
use fragtree::harness::{
    self, fit_scaling, multiplicity_ratio_report, run_experiment, run_urn_experiment,
    ExperimentConfig, RunRow, TreeModel, UrnExperimentConfig,
};
use fragtree::model::DislocationModel;
use fragtree::subordinator;
use fragtree::theory::{self, Regime, RegimePrediction};
use fragtree::tree::{self, NO_PARENT};
use fragtree::urn;

fn err(e: fragtree::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    harness::replica_rng(seed, 0, 0)
}

fn parse_policy(policy: &str) -> PyResult<GroupingPolicy> {
    policy.parse().map_err(err)
}

// ---------------------------------------------------------------------------
// Regime predictions
// ---------------------------------------------------------------------------

/// Closed-form growth prediction for N_n(k): regime, exponent, the limit
/// constant, and the per-multiplicity constants/ratios.
#[pyclass(frozen, name = "Prediction")]
struct Prediction {
    inner: RegimePrediction,
}

#[pymethods]
impl Prediction {
    /// "subcritical", "critical", or "supercritical".
    #[getter]
    fn regime(&self) -> &'static str {
        match self.inner.regime {
            Regime::Subcritical => "subcritical",
            Regime::Critical => "critical",
            Regime::Supercritical => "supercritical",
        }
    }

    /// Exponent e in N_n ≍ n^e (up to the critical log factor).
    #[getter]
    fn exponent(&self) -> f64 {
        self.inner.exponent
    }

    /// True when the normalization carries an extra log n.
    #[getter]
    fn log_factor(&self) -> bool {
        self.inner.log_factor
    }

    /// True when the scaling limit is random (supercritical regime);
    /// the constant is then the limit's mean.
    #[getter]
    fn random_limit(&self) -> bool {
        self.inner.limit == theory::Limit::RandomWithMean
    }

    /// Limit of N_n / (n^e log^δ n).
    #[getter]
    fn constant(&self) -> f64 {
        self.inner.constant
    }

    /// Corresponding limits for N_{n,r}, r = 1..=4.
    #[getter]
    fn constant_r(&self) -> Vec<f64> {
        self.inner.constant_r.to_vec()
    }

    /// Predicted ratios N_{n,r}/N_n.
    #[getter]
    fn ratio_r(&self) -> Vec<f64> {
        self.inner.ratio_r.to_vec()
    }

    fn __repr__(&self) -> String {
        format!(
            "Prediction(regime='{}', exponent={}, log_factor={}, constant={})",
            self.regime(),
            self.inner.exponent,
            self.inner.log_factor,
            self.inner.constant
        )
    }
}

// ---------------------------------------------------------------------------
// Dislocation models
// ---------------------------------------------------------------------------

/// A binary dislocation measure: Dirichlet-type, Ford alpha, stable, or
/// Beta-type, with the theory constants and continuum estimators.
#[pyclass(frozen, name = "Model", skip_from_py_object)]
#[derive(Clone)]
struct Model {
    inner: DislocationModel,
}

#[pymethods]
impl Model {
    /// DirichletBinary(a, b), a, b > 0.
    #[staticmethod]
    fn dirichlet(a: f64, b: f64) -> PyResult<Self> {
        Ok(Model {
            inner: DislocationModel::dirichlet_binary(a, b).map_err(err)?,
        })
    }

    /// Ford alpha-model measure, a in (0, 1).
    #[staticmethod]
    fn ford(a: f64) -> PyResult<Self> {
        Ok(Model {
            inner: DislocationModel::ford_alpha(a).map_err(err)?,
        })
    }

    /// Stable measure, beta in (1, 2]; beta = 2 is the Brownian case.
    #[staticmethod]
    fn stable(beta: f64) -> PyResult<Self> {
        Ok(Model {
            inner: DislocationModel::stable(beta).map_err(err)?,
        })
    }

    /// Beta-type measure with exponents a, b > -1 (negative values give
    /// an infinite measure with power tail index -min(a, b, 0)).
    #[staticmethod]
    fn beta_type(a: f64, b: f64) -> PyResult<Self> {
        Ok(Model {
            inner: DislocationModel::beta_type(a, b).map_err(err)?,
        })
    }

    /// The same measure scaled to λν (a time change; regime constants
    /// are invariant).
    fn with_scale(&self, scale: f64) -> PyResult<Self> {
        Ok(Model {
            inner: self.inner.clone().with_scale(scale).map_err(err)?,
        })
    }

    /// Tail index γ of ν(s₁ ≤ 1−x) ~ c_ν x^{−γ}.
    #[getter]
    fn gamma_index(&self) -> f64 {
        self.inner.gamma_index()
    }

    /// Tail constant c_ν, or None for the logarithmic-tail boundary.
    #[getter]
    fn c_nu(&self) -> Option<f64> {
        self.inner.c_nu()
    }

    /// Laplace exponent φ(q) in closed form.
    fn phi(&self, q: f64) -> PyResult<f64> {
        theory::phi(&self.inner, q).map_err(err)
    }

    /// φ(q) by quadrature of the s₁-density (independent of the closed
    /// form; unavailable for stable beta < 2).
    fn phi_quadrature(&self, q: f64) -> PyResult<f64> {
        theory::phi_quadrature(&self.inner, q).map_err(err)
    }

    /// φ′(0+) = ∫ Σ s_i |log s_i| ν(ds).
    fn phi_prime0(&self) -> PyResult<f64> {
        theory::phi_prime0(&self.inner).map_err(err)
    }

    /// Regime prediction for group size k.
    fn classify(&self, k: u32) -> PyResult<Prediction> {
        Ok(Prediction {
            inner: theory::classify(&self.inner, k).map_err(err)?,
        })
    }

    /// One simulated tagged-leaf depth (kγ > 1); `tol` is the mass below
    /// which the path closes with its exact conditional-mean tail.
    #[pyo3(signature = (k, seed, tol = 1e-6))]
    fn leaf_depth(&self, k: u32, seed: u64, tol: f64) -> PyResult<f64> {
        subordinator::leaf_depth(&self.inner, k, tol, &mut rng(seed)).map_err(err)
    }

    /// Monte Carlo estimate (mean, stderr) of the area variable
    /// A_k = c_ν × tagged depth, whose mean is c_ν/φ(kγ−1).
    fn area_estimate(&self, k: u32, replicas: u64, seed: u64) -> PyResult<(f64, Option<f64>)> {
        let est = subordinator::area_estimate(&self.inner, k, replicas, &mut rng(seed))
            .map_err(err)?;
        Ok((est.mean, est.stderr))
    }

    /// Monte Carlo estimate (mean, stderr) of the urn-expectation
    /// function g_k(x).
    fn gk_estimate(
        &self,
        k: u32,
        x: f64,
        replicas: u64,
        seed: u64,
    ) -> PyResult<(f64, Option<f64>)> {
        let est = subordinator::gk_estimate(&self.inner, k, x, replicas, &mut rng(seed))
            .map_err(err)?;
        Ok((est.mean, est.stderr))
    }

    fn __repr__(&self) -> String {
        format!("Model({:?})", self.inner.family())
    }
}

// ---------------------------------------------------------------------------
// Trees and ancestor statistics
// ---------------------------------------------------------------------------

/// Exact ancestor counts of n sampled k-groups on one tree.
#[pyclass(frozen, name = "AncestorStats")]
struct AncestorStatsPy {
    inner: tree::AncestorStats,
}

#[pymethods]
impl AncestorStatsPy {
    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k
    }

    /// N: number of distinct group MRCAs.
    #[getter]
    fn distinct(&self) -> usize {
        self.inner.distinct
    }

    /// histogram[r] = N_{n,r} (index 0 unused).
    #[getter]
    fn histogram(&self) -> Vec<usize> {
        self.inner.histogram.clone()
    }

    /// {ancestor node: number of groups whose MRCA it is}.
    #[getter]
    fn per_ancestor(&self) -> std::collections::HashMap<u32, usize> {
        self.inner.per_ancestor.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "AncestorStats(n={}, k={}, distinct={})",
            self.inner.n, self.inner.k, self.inner.distinct
        )
    }
}

/// A rooted arena tree with O(1) LCA queries and the exact MRCA law.
#[pyclass(frozen, name = "Tree")]
struct Tree {
    inner: tree::Tree,
}

#[pymethods]
impl Tree {
    /// Uniform leaf-labeled binary tree (Rémy's chain), planted.
    #[staticmethod]
    fn remy(n_leaves: usize, seed: u64) -> PyResult<Self> {
        Ok(Tree {
            inner: generate::remy(n_leaves, &mut rng(seed)).map_err(err)?,
        })
    }

    /// Ford alpha-model growth chain.
    #[staticmethod]
    fn ford(a: f64, n_leaves: usize, seed: u64) -> PyResult<Self> {
        Ok(Tree {
            inner: generate::ford(a, n_leaves, &mut rng(seed)).map_err(err)?,
        })
    }

    /// Aldous beta-splitting Markov-branching tree, beta > -2.
    #[staticmethod]
    fn beta_splitting(beta: f64, n_leaves: usize, seed: u64) -> PyResult<Self> {
        Ok(Tree {
            inner: generate::beta_splitting(beta, n_leaves, &mut rng(seed)).map_err(err)?,
        })
    }

    /// Conditioned stable Galton–Watson proxy, beta in (1, 2).
    #[staticmethod]
    fn gw_stable(beta: f64, n_leaves: usize, seed: u64) -> PyResult<Self> {
        Ok(Tree {
            inner: generate::gw_stable_tree(beta, n_leaves, &mut rng(seed)).map_err(err)?,
        })
    }

    /// Build from a parent list; exactly one entry must be None (root).
    #[staticmethod]
    fn from_parents(parents: Vec<Option<u32>>) -> PyResult<Self> {
        let raw: Vec<u32> = parents.into_iter().map(|p| p.unwrap_or(NO_PARENT)).collect();
        Ok(Tree {
            inner: tree::build_tree(&raw).map_err(err)?,
        })
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn leaf_count(&self) -> usize {
        self.inner.leaf_count()
    }

    #[getter]
    fn root(&self) -> u32 {
        self.inner.root()
    }

    fn parent(&self, v: u32) -> Option<u32> {
        self.inner.parent(v)
    }

    fn children(&self, v: u32) -> Vec<u32> {
        self.inner.children(v).to_vec()
    }

    fn depth(&self, v: u32) -> u32 {
        self.inner.depth(v)
    }

    fn is_leaf(&self, v: u32) -> bool {
        self.inner.is_leaf(v)
    }

    fn leaves(&self) -> Vec<u32> {
        self.inner.leaves().to_vec()
    }

    /// Lowest common ancestor of two nodes.
    fn lca(&self, u: u32, v: u32) -> PyResult<u32> {
        self.inner.lca(u, v).map_err(err)
    }

    /// Exact MRCA law of k distinct uniform leaves, as (node, prob)
    /// pairs sorted by descending probability.
    fn mrca_distribution(&self, k: usize) -> PyResult<Vec<(u32, f64)>> {
        tree::mrca_distribution(&self.inner, k).map_err(err)
    }

    /// Sample n k-groups of leaves under a policy ("consecutive" or
    /// "random_disjoint") and count their MRCAs exactly.
    #[pyo3(signature = (k, n, seed, policy = "consecutive"))]
    fn ancestor_stats(
        &self,
        k: usize,
        n: usize,
        seed: u64,
        policy: &str,
    ) -> PyResult<AncestorStatsPy> {
        let policy = parse_policy(policy)?;
        let grouping =
            generate::group_leaves(&self.inner, k, policy, &mut rng(seed)).map_err(err)?;
        Ok(AncestorStatsPy {
            inner: tree::ancestor_stats(&self.inner, &grouping).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Tree(nodes={}, leaves={})",
            self.inner.node_count(),
            self.inner.leaf_count()
        )
    }
}

// ---------------------------------------------------------------------------
// Urn laws
// ---------------------------------------------------------------------------

/// An infinite-urn sampling law (Karlin occupancy scheme).
#[pyclass(frozen, name = "UrnLaw")]
struct UrnLawPy {
    inner: urn::UrnLaw,
}

#[pymethods]
impl UrnLawPy {
    /// Zipf law p_j ∝ j^{−s}, s > 1.
    #[staticmethod]
    fn zipf(s: f64) -> PyResult<Self> {
        Ok(UrnLawPy {
            inner: urn::UrnLaw::zipf(s).map_err(err)?,
        })
    }

    /// Zipf law truncated to j ≤ j_cap (finite support).
    #[staticmethod]
    fn zipf_capped(s: f64, j_cap: u64) -> PyResult<Self> {
        Ok(UrnLawPy {
            inner: urn::UrnLaw::zipf_with_cap(s, j_cap).map_err(err)?,
        })
    }

    /// Geometric law p_j ∝ q^j, 0 < q < 1.
    #[staticmethod]
    fn geometric(q: f64) -> PyResult<Self> {
        Ok(UrnLawPy {
            inner: urn::UrnLaw::geometric(q).map_err(err)?,
        })
    }

    /// Finite law from a nonincreasing probability vector summing to 1.
    #[staticmethod]
    fn explicit(probs: Vec<f64>) -> PyResult<Self> {
        Ok(UrnLawPy {
            inner: urn::UrnLaw::explicit(&probs).map_err(err)?,
        })
    }

    /// Probability of urn j (1-based).
    fn p(&self, j: u64) -> f64 {
        self.inner.p(j)
    }

    /// Urn distribution function S_x = #{j : p_j ≥ x}.
    fn distribution_function(&self, x: f64) -> PyResult<u64> {
        urn::urn_distribution_function(&self.inner, x).map_err(err)
    }

    /// Exact occupancy expectations (mean_N, [mean_N_r], remainder).
    fn expected_counts(&self, n: usize) -> PyResult<(f64, Vec<f64>, f64)> {
        let ex = urn::expected_counts(&self.inner, n).map_err(err)?;
        Ok((ex.mean_n, ex.mean_nr.to_vec(), ex.remainder))
    }

    /// One simulated occupancy: (distinct, histogram) with histogram[r]
    /// the number of urns holding exactly r of the n draws.
    fn simulate(&self, n: usize, seed: u64) -> PyResult<(usize, Vec<usize>)> {
        let oc = urn::simulate_occupancy(&self.inner, n, &mut rng(seed)).map_err(err)?;
        Ok((oc.distinct, oc.histogram))
    }

    fn __repr__(&self) -> String {
        "UrnLaw(...)".into()
    }
}

/// Karlin limit prediction for the Zipf(s) urn: exponent 1/s and the
/// occupancy constants Γ(1−1/s)L, with L = ζ(s)^{−1/s}.
#[pyfunction]
fn zipf_karlin_prediction(s: f64) -> PyResult<Prediction> {
    Ok(Prediction {
        inner: harness::zipf_karlin_prediction(s).map_err(err)?,
    })
}

// ---------------------------------------------------------------------------
// Experiment runner
// ---------------------------------------------------------------------------

fn rows_to_pylist<'py>(py: Python<'py>, rows: &[RunRow]) -> PyResult<Bound<'py, PyList>> {
    let out = PyList::empty(py);
    for row in rows {
        let d = PyDict::new(py);
        d.set_item("model", &row.model)?;
        d.set_item("params", &row.params)?;
        d.set_item("k", row.k)?;
        d.set_item("n", row.n)?;
        d.set_item("replicas", row.replicas)?;
        d.set_item("mean_N", row.mean_n)?;
        d.set_item("var_N", row.var_n)?;
        d.set_item("mean_Nr", row.mean_nr.to_vec())?;
        d.set_item("seed", row.seed)?;
        out.append(d)?;
    }
    Ok(out)
}

/// Replicated growth/cascade experiment with its regime prediction:
/// rows per grid point, the scaling fit, and multiplicity ratios.
#[pyclass(frozen, name = "Experiment")]
struct Experiment {
    rows: Vec<RunRow>,
    prediction: RegimePrediction,
}

#[pymethods]
impl Experiment {
    /// One dict per grid point (same fields and order as the CSV).
    fn rows<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyList>> {
        rows_to_pylist(py, &self.rows)
    }

    /// The regime prediction the fit is judged against.
    fn prediction(&self) -> Prediction {
        Prediction {
            inner: self.prediction,
        }
    }

    /// CSV with the runner's canonical header.
    fn to_csv(&self) -> PyResult<String> {
        let mut buf: Vec<u8> = Vec::new();
        harness::write_csv(&mut buf, &self.rows).map_err(err)?;
        String::from_utf8(buf).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// Weighted scaling fit against the prediction, as a dict.
    fn fit<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let fit = fit_scaling(&self.rows, &self.prediction).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("critical", fit.critical)?;
        d.set_item("exponent", fit.exponent)?;
        d.set_item("exponent_se", fit.exponent_se)?;
        d.set_item("constant", fit.constant)?;
        d.set_item("constant_se", fit.constant_se)?;
        d.set_item("predicted_exponent", fit.predicted_exponent)?;
        d.set_item("predicted_constant", fit.predicted_constant)?;
        d.set_item("constant_rel_dev", fit.constant_rel_dev)?;
        d.set_item("exponent_z", fit.exponent_z)?;
        d.set_item("constant_z", fit.constant_z)?;
        Ok(d)
    }

    /// Empirical N_{n,r}/N_n against the predicted ratios, one dict per
    /// (grid point, r).
    fn multiplicity_ratios<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyList>> {
        let out = PyList::empty(py);
        for row in multiplicity_ratio_report(&self.rows, &self.prediction) {
            let d = PyDict::new(py);
            d.set_item("n", row.n)?;
            d.set_item("r", row.r)?;
            d.set_item("empirical", row.empirical)?;
            d.set_item("predicted", row.predicted)?;
            d.set_item("deviation", row.deviation)?;
            out.append(d)?;
        }
        Ok(out)
    }

    fn __repr__(&self) -> String {
        format!("Experiment(rows={})", self.rows.len())
    }
}

/// Run a replicated ancestor-counting experiment over an n-grid.
///
/// `model` is a chain or cascade name (remy, ford, beta-split,
/// gw-stable, dirichlet, beta-type), `params` its numeric parameters
/// (e.g. {"a": 1.0, "b": 1.0}).
#[pyfunction]
#[pyo3(signature = (model, n_grid, k = 2, params = None, replicas = 100, seed = 1,
                    policy = "consecutive", generator = None, workers = 0))]
#[allow(clippy::too_many_arguments)]
fn run_growth_experiment(
    model: &str,
    n_grid: Vec<usize>,
    k: usize,
    params: Option<BTreeMap<String, f64>>,
    replicas: usize,
    seed: u64,
    policy: &str,
    generator: Option<&str>,
    workers: usize,
) -> PyResult<Experiment> {
    let params = params.unwrap_or_default();
    let tree_model = TreeModel::from_config(model, &params, generator).map_err(err)?;
    let prediction = tree_model.prediction(k as u32).map_err(err)?;
    let config = ExperimentConfig {
        model: tree_model,
        k,
        n_grid,
        replicas,
        seed,
        policy: parse_policy(policy)?,
        workers,
        out: None,
    };
    config.validate().map_err(err)?;
    let rows = run_experiment(&config).map_err(err)?;
    Ok(Experiment { rows, prediction })
}

/// Run a replicated urn occupancy experiment over an n-grid and return
/// one dict per grid point.
#[pyfunction]
#[pyo3(signature = (law, n_grid, replicas = 100, seed = 1, workers = 0, label = "explicit"))]
fn run_urn_occupancy<'py>(
    py: Python<'py>,
    law: &UrnLawPy,
    n_grid: Vec<usize>,
    replicas: usize,
    seed: u64,
    workers: usize,
    label: &str,
) -> PyResult<Bound<'py, PyList>> {
    let config = UrnExperimentConfig {
        law: law.inner.clone(),
        model_label: label.to_string(),
        params_label: "-".to_string(),
        n_grid,
        replicas,
        seed,
        workers,
        out: None,
    };
    config.validate().map_err(err)?;
    let rows = run_urn_experiment(&config).map_err(err)?;
    rows_to_pylist(py, &rows)
}

#[pymodule]
fn fragtree_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Model>()?;
    m.add_class::<Prediction>()?;
    m.add_class::<Tree>()?;
    m.add_class::<AncestorStatsPy>()?;
    m.add_class::<UrnLawPy>()?;
    m.add_class::<Experiment>()?;
    m.add_function(wrap_pyfunction!(zipf_karlin_prediction, m)?)?;
    m.add_function(wrap_pyfunction!(run_growth_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(run_urn_occupancy, m)?)?;
    Ok(())
}
