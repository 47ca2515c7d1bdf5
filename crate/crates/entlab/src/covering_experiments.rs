//! Covering numbers of sum and quadratic-form images of dyadic point sets
//! along a graph `G ⊆ A × A`.
//!
//! Covering numbers count touched dyadic cells at the level of `delta`.
//! This is within a factor 2 of the optimal interval covering and exact in
//! integer arithmetic: points are `k 2^-L` and form values are reduced
//! to integer numerators over one denominator.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::pushforward::QuadForm;
use crate::random::rng;
use crate::{Error, Result};

/// Note attached to every result.
pub const COVERING_CONVENTION: &str = "touched dyadic cells; within factor 2 of interval covering";

/// Retry budget for random sets and graphs.
pub const MAX_RETRIES: u32 = 64;

/// Finite set of points `k 2^-level`, sorted and deduplicated.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointSet {
    pub level: u32,
    pub cells: Vec<i64>,
}

impl PointSet {
    pub fn new(level: u32, cells: impl IntoIterator<Item = i64>) -> Self {
        let set: BTreeSet<i64> = cells.into_iter().collect();
        PointSet {
            level,
            cells: set.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        let w = (-(self.level as f64)).exp2();
        self.cells.iter().map(|&k| k as f64 * w).collect()
    }

    /// Points at least `2^-n` apart.
    pub fn is_separated(&self, n: u32) -> bool {
        if n > self.level {
            return false;
        }
        let gap = 1i64 << (self.level - n);
        self.cells.windows(2).all(|w| w[1] - w[0] >= gap)
    }
}

/// Touched level-`n` cells of a finite real set.
pub fn covering_number(points: &[f64], n: u32) -> usize {
    let scale = (n as f64).exp2();
    points.iter().map(|&x| (x * scale).floor() as i64).collect::<BTreeSet<_>>().len()
}

/// Index pairs into a [`PointSet`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn full(vertices: usize) -> Self {
        let edges = (0..vertices).flat_map(|i| (0..vertices).map(move |j| (i, j))).collect();
        Graph { vertices, edges }
    }

    pub fn diagonal(vertices: usize) -> Self {
        Graph {
            vertices,
            edges: (0..vertices).map(|i| (i, i)).collect(),
        }
    }

    /// `B × B` for vertex indices `B`.
    pub fn square(vertices: usize, subset: &[usize]) -> Self {
        let edges = subset.iter().flat_map(|&i| subset.iter().map(move |&j| (i, j))).collect();
        Graph { vertices, edges }
    }

    pub fn min_degree(&self) -> usize {
        let mut deg = vec![0usize; self.vertices];
        for &(i, _) in &self.edges {
            deg[i] += 1;
        }
        deg.into_iter().min().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Operation {
    Sum,
    Difference,
    Form { form: QuadForm },
}

/// Image values `num / (den 2^shift)` with exact integer numerators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    pub numerators: Vec<i128>,
    pub denominator: i128,
    pub shift: u32,
}

impl Image {
    pub fn values(&self) -> Vec<f64> {
        let scale = self.denominator as f64 * (self.shift as f64).exp2();
        self.numerators.iter().map(|&v| v as f64 / scale).collect()
    }

    /// Touched level-`n` cells.
    pub fn covering_number(&self, n: u32) -> Result<usize> {
        let mut cells = BTreeSet::new();
        for &v in &self.numerators {
            cells.insert(floor_cell(v, self.denominator, self.shift, n)?);
        }
        Ok(cells.len())
    }
}

fn floor_cell(num: i128, den: i128, shift: u32, n: u32) -> Result<i128> {
    if n >= shift {
        let f = 1i128.checked_shl(n - shift).ok_or(Error::Overflow)?;
        Ok(num.checked_mul(f).ok_or(Error::Overflow)?.div_euclid(den))
    } else {
        let d = den.checked_mul(1i128 << (shift - n)).ok_or(Error::Overflow)?;
        Ok(num.div_euclid(d))
    }
}

fn form_numerators(form: &QuadForm) -> Result<([i128; 3], i128)> {
    let coeffs = [&form.a1, &form.a2, &form.a3];
    let t = crate::rational::common_denominator(coeffs.iter().copied());
    let tq = num::BigRational::from_integer(t.clone());
    let mut nums = [0i128; 3];
    for (slot, c) in nums.iter_mut().zip(coeffs) {
        *slot = num::ToPrimitive::to_i128(&(c * &tq).to_integer()).ok_or(Error::Overflow)?;
    }
    Ok((nums, num::ToPrimitive::to_i128(&t).ok_or(Error::Overflow)?))
}

/// `{x op y : (x, y) ∈ G}`, exactly, as sorted distinct numerators.
pub fn graph_image(a: &PointSet, g: &Graph, op: &Operation) -> Result<Image> {
    if g.vertices != a.len() || g.edges.iter().any(|&(i, j)| i >= a.len() || j >= a.len()) {
        return Err(Error::Precondition("graph is not a subset of A x A".into()));
    }
    let pairs = g.edges.iter().map(|&(i, j)| (a.cells[i] as i128, a.cells[j] as i128));
    let (set, denominator, shift): (BTreeSet<i128>, i128, u32) = match op {
        Operation::Sum => (pairs.map(|(x, y)| x + y).collect(), 1, a.level),
        Operation::Difference => (pairs.map(|(x, y)| x - y).collect(), 1, a.level),
        Operation::Form { form } => {
            let ([c1, c2, c3], t) = form_numerators(form)?;
            let mut set = BTreeSet::new();
            for (x, y) in pairs {
                let v = [c1.checked_mul(x * x), c2.checked_mul(x * y), c3.checked_mul(y * y)]
                    .into_iter()
                    .try_fold(0i128, |acc, term| term.and_then(|t| t.checked_add(acc)))
                    .ok_or(Error::Overflow)?;
                set.insert(v);
            }
            (set, t, 2 * a.level)
        }
    };
    Ok(Image {
        numerators: set.into_iter().collect(),
        denominator,
        shift,
    })
}

/// `sup #(A ∩ I) / (|I|^s #A)` over intervals `I` of length at least
/// `2^-n` made of whole level-`n` cells. Optimal windows start and end at
/// points, so the sup runs over point pairs.
pub fn non_concentration_constant(a: &PointSet, s: f64, n: u32) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::Precondition("empty point set".into()));
    }
    if !a.is_separated(n) {
        return Err(Error::Precondition(format!("points are not 2^-{n}-separated")));
    }
    let shift = a.level - n;
    let cells: Vec<i64> = a.cells.iter().map(|&k| k >> shift).collect();
    let (w, total) = ((-(n as f64)).exp2(), a.len() as f64);
    let mut best = 0.0f64;
    for i in 0..cells.len() {
        for j in i..cells.len() {
            let len = (cells[j] - cells[i] + 1) as f64 * w;
            best = best.max((j - i + 1) as f64 / (len.powf(s) * total));
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum SetSource {
    /// Left endpoints of the `ex1(m, l)` blocks.
    Ex1 { m: u32, l: u32 },
    /// The `x` values of the diagonal construction at level `2m`.
    Ex2Dependent { m: u32 },
    /// `ceil(delta^-s)` random distinct level-`n` cells, resampled until the
    /// non-concentration constant is at most `target_c`.
    Random { target_c: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "graph", rename_all = "snake_case")]
pub enum GraphSpec {
    Full,
    Diagonal,
    /// Each pair kept with probability `delta^eps`.
    DenseRandom { eps: f64 },
    /// Each vertex joined to `ceil(delta^eps #A)` random vertices.
    MinDegree { eps: f64 },
    /// `B × B` for a random `B` with `#B = ceil(delta^eps #A)`.
    Subset { eps: f64 },
}

fn default_first() -> Operation {
    Operation::Sum
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// `delta = 2^-n`.
    pub n: u32,
    pub s: f64,
    pub set: SetSource,
    pub graph: GraphSpec,
    /// Linear operation of the first term; usually the sum.
    #[serde(default = "default_first")]
    pub first: Operation,
    pub form: QuadForm,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub set: usize,
    pub first: usize,
    pub form: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub size: usize,
    pub edges: usize,
    pub counts: Counts,
    /// `log2(max(first, form) / #A) / n`.
    pub exponent_hat: f64,
    pub exponent_first: f64,
    pub exponent_form: f64,
    pub nonconc_c: f64,
    pub convention: String,
}

/// The point set of a config. Checks separation and `|#A - delta^-s| <= 1`.
pub fn build_set(cfg: &ExperimentConfig) -> Result<PointSet> {
    let n = cfg.n;
    let target = (cfg.s * n as f64).exp2();
    let a = match cfg.set {
        SetSource::Ex1 { m, l } => PointSet::new(m + l, (0..1i64 << m).map(|j| j << l)),
        SetSource::Ex2Dependent { m } => PointSet::new(2 * m, (0..1i64 << m).map(|j| j << m)),
        SetSource::Random { target_c } => {
            if n > 24 {
                return Err(Error::InvalidParameter(format!("level {n} is beyond desk scale")));
            }
            let size = target.ceil() as usize;
            if size == 0 || size > 1usize << n {
                return Err(Error::InvalidParameter(format!("cannot place {size} points at level {n}")));
            }
            let mut r = rng(cfg.seed);
            let mut found = None;
            for _ in 0..MAX_RETRIES {
                let a = PointSet::new(n, sample(&mut r, 1usize << n, size).into_iter().map(|k| k as i64));
                if non_concentration_constant(&a, cfg.s, n)? <= target_c {
                    found = Some(a);
                    break;
                }
            }
            found.ok_or_else(|| {
                Error::Precondition(format!("no set met non-concentration target {target_c} in {MAX_RETRIES} tries"))
            })?
        }
    };
    if !a.is_separated(n) {
        return Err(Error::Precondition(format!("set is not 2^-{n}-separated")));
    }
    if (a.len() as f64 - target).abs() > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "#A = {} but delta^-s = {target:.3}",
            a.len()
        )));
    }
    Ok(a)
}

fn density(n: u32, eps: f64) -> Result<f64> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    Ok((-(eps * n as f64)).exp2())
}

/// The graph of a config on `size` vertices.
pub fn build_graph<R: Rng>(spec: &GraphSpec, size: usize, n: u32, r: &mut R) -> Result<Graph> {
    Ok(match *spec {
        GraphSpec::Full => Graph::full(size),
        GraphSpec::Diagonal => Graph::diagonal(size),
        GraphSpec::DenseRandom { eps } => {
            let p = density(n, eps)?;
            let need = p * (size * size) as f64 / 2.0;
            let mut found = None;
            for _ in 0..MAX_RETRIES {
                let edges: Vec<(usize, usize)> = (0..size)
                    .flat_map(|i| (0..size).map(move |j| (i, j)))
                    .filter(|_| r.random_bool(p))
                    .collect();
                if !edges.is_empty() && edges.len() as f64 >= need {
                    found = Some(Graph { vertices: size, edges });
                    break;
                }
            }
            found.ok_or_else(|| Error::Precondition("random graph missed its density".into()))?
        }
        GraphSpec::MinDegree { eps } => {
            let k = ((density(n, eps)? * size as f64).ceil() as usize).clamp(1, size);
            let mut edges = Vec::with_capacity(size * k);
            for i in 0..size {
                let mut nbrs = sample(r, size, k).into_vec();
                nbrs.sort_unstable();
                edges.extend(nbrs.into_iter().map(|j| (i, j)));
            }
            Graph { vertices: size, edges }
        }
        GraphSpec::Subset { eps } => {
            let k = ((density(n, eps)? * size as f64).ceil() as usize).clamp(1, size);
            let mut b = sample(r, size, k).into_vec();
            b.sort_unstable();
            Graph::square(size, &b)
        }
    })
}

/// Counts and exponents for a set and graph.
pub fn measure(a: &PointSet, g: &Graph, first: &Operation, form: &QuadForm, n: u32, s: f64) -> Result<ExperimentResult> {
    if g.edges.is_empty() {
        return Err(Error::Precondition("graph has no edges".into()));
    }
    let counts = Counts {
        set: covering_of_set(a, n),
        first: graph_image(a, g, first)?.covering_number(n)?,
        form: graph_image(a, g, &Operation::Form { form: form.clone() })?.covering_number(n)?,
    };
    let size = a.len() as f64;
    let exponent = |c: usize| (c as f64 / size).log2() / n as f64;
    Ok(ExperimentResult {
        size: a.len(),
        edges: g.edges.len(),
        exponent_hat: exponent(counts.first.max(counts.form)),
        exponent_first: exponent(counts.first),
        exponent_form: exponent(counts.form),
        counts,
        nonconc_c: non_concentration_constant(a, s, n)?,
        convention: COVERING_CONVENTION.into(),
    })
}

fn covering_of_set(a: &PointSet, n: u32) -> usize {
    let cells: BTreeSet<i64> = if n >= a.level {
        a.cells.iter().copied().collect()
    } else {
        a.cells.iter().map(|&k| k >> (a.level - n)).collect()
    };
    cells.len()
}

/// Deterministic given the seed: the set and the graph draw from separate
/// streams of the same seed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    if matches!(cfg.first, Operation::Form { .. }) {
        return Err(Error::InvalidParameter("first operation must be sum or difference".into()));
    }
    let a = build_set(cfg)?;
    let mut r = rng(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    let g = build_graph(&cfg.graph, a.len(), cfg.n, &mut r)?;
    measure(&a, &g, &cfg.first, &cfg.form, cfg.n, cfg.s)
}

/// Runs configs in parallel; results keep config order.
pub fn run_experiments(cfgs: &[ExperimentConfig]) -> Vec<Result<ExperimentResult>> {
    cfgs.par_iter().map(run_experiment).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covering_examples() {
        assert_eq!(covering_number(&[0.0, 0.5], 2), 2);
        let w = (-10f64).exp2();
        assert_eq!(covering_number(&[0.0, 0.5 * w, 0.9 * w], 10), 1);
        let a = PointSet::new(5, (0..8).map(|j| j << 2));
        assert_eq!(covering_of_set(&a, 5), 8);
    }

    #[test]
    fn diagonal_sum_is_doubling() {
        let a = PointSet::new(4, [1, 3, 8]);
        let img = graph_image(&a, &Graph::diagonal(3), &Operation::Sum).unwrap();
        assert_eq!(img.numerators, vec![2, 6, 16]);
        assert!(graph_image(&a, &Graph { vertices: 3, edges: vec![(0, 5)] }, &Operation::Sum).is_err());
    }

    #[test]
    fn form_image_matches_float_evaluation() {
        let a = PointSet::new(4, [1, 3, 8, 11]);
        let form = QuadForm::new(crate::rational::q(1, 3), crate::rational::int(0), crate::rational::int(-2));
        let img = graph_image(&a, &Graph::full(4), &Operation::Form { form: form.clone() }).unwrap();
        let mut expected: Vec<f64> = Vec::new();
        for x in a.values() {
            for y in a.values() {
                expected.push(form.eval_f64(x, y));
            }
        }
        expected.sort_by(f64::total_cmp);
        expected.dedup_by(|u, v| (*u - *v).abs() < 1e-12);
        let got = img.values();
        assert_eq!(got.len(), expected.len());
        for (u, v) in got.iter().zip(&expected) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn non_concentration_examples() {
        let full = PointSet::new(6, 0..64);
        assert!((non_concentration_constant(&full, 1.0, 6).unwrap() - 1.0).abs() < 1e-12);
        let cluster = PointSet::new(10, 0..32);
        assert!(non_concentration_constant(&cluster, 1.0, 10).unwrap() > 30.0);
        let ex1 = PointSet::new(6, (0..8).map(|j| j << 3));
        assert!(non_concentration_constant(&ex1, 0.5, 6).unwrap() <= 2.0);
    }

    #[test]
    fn dependent_difference_collapses() {
        let cfg = ExperimentConfig {
            n: 8,
            s: 0.5,
            set: SetSource::Ex2Dependent { m: 4 },
            graph: GraphSpec::Diagonal,
            first: Operation::Difference,
            form: QuadForm::from_ints(1, 0, -1),
            seed: 0,
        };
        let r = run_experiment(&cfg).unwrap();
        assert_eq!(r.counts.first, 1);
        assert_eq!(r.counts.form, 1);
        let sum = run_experiment(&ExperimentConfig { first: Operation::Sum, ..cfg }).unwrap();
        assert_eq!(sum.counts.first, 16);
    }

    #[test]
    fn random_regimes_are_deterministic() {
        for graph in [
            GraphSpec::DenseRandom { eps: 0.1 },
            GraphSpec::MinDegree { eps: 0.1 },
            GraphSpec::Subset { eps: 0.1 },
        ] {
            let cfg = ExperimentConfig {
                n: 8,
                s: 0.5,
                set: SetSource::Random { target_c: 4.0 },
                graph,
                first: Operation::Sum,
                form: QuadForm::from_ints(1, 0, 1),
                seed: 7,
            };
            let a = run_experiment(&cfg).unwrap();
            assert_eq!(a, run_experiment(&cfg).unwrap());
            assert_eq!(a.size, 16);
            assert!(a.nonconc_c <= 4.0);
        }
    }

    #[test]
    fn min_degree_regime_meets_its_degree() {
        let mut r = rng(3);
        let g = build_graph(&GraphSpec::MinDegree { eps: 0.25 }, 16, 8, &mut r).unwrap();
        assert!(g.min_degree() >= 4);
    }
}
