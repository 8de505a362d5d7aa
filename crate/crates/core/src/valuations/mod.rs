//! Concrete M♮-concave families: separable concave resource allocation,
//! bipartite transportation (OXS on `{0,1}^V`), matroid-distance functions,
//! plus explicit tables and affine rescaling.

pub mod flow;
mod instance;

use std::collections::VecDeque;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::{Bounds, Point, SharedValuation, Valuation, Value};
use crate::matroid::Matroid;

pub use instance::{FamilySpec, InstanceDoc};

const CONCAVITY_TOL: f64 = 1e-12;

/// Per-coordinate concave tables `f_i(0..=hi_i)` and a budget `K`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparableConcaveSpec {
    pub tables: Vec<Vec<f64>>,
    pub budget: i64,
}

/// `f(x) = Σ f_i(x_i)` for `x >= 0`, `x(V) <= K`.
#[derive(Clone, Debug)]
pub struct SeparableConcave {
    tables: Vec<Vec<f64>>,
    budget: i64,
    bounds: Bounds,
}

pub fn separable_concave(spec: SeparableConcaveSpec) -> Result<SeparableConcave> {
    if spec.tables.is_empty() {
        return Err(Error::InvalidInstance("at least one table required".into()));
    }
    if spec.budget < 0 {
        return Err(Error::InvalidInstance("budget must be nonnegative".into()));
    }
    for (item, t) in spec.tables.iter().enumerate() {
        if t.is_empty() || t.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInstance(format!("table {item} must be non-empty and finite")));
        }
        for z in 2..t.len() {
            if t[z] - t[z - 1] > t[z - 1] - t[z - 2] + CONCAVITY_TOL {
                return Err(Error::NonConcaveTable { item, at: z - 1 });
            }
        }
    }
    let bounds = Bounds::upto(spec.tables.iter().map(|t| t.len() as i64 - 1).collect())?;
    Ok(SeparableConcave { tables: spec.tables, budget: spec.budget, bounds })
}

impl SeparableConcave {
    /// Tables `f_i(z) = c_i (1 - 2^-z)` for `z = 0..=hi`.
    pub fn geometric(coeffs: &[f64], hi: usize, budget: i64) -> Result<Self> {
        let tables = coeffs.iter().map(|&c| (0..=hi).map(|z| c * (1.0 - 0.5f64.powi(z as i32))).collect()).collect();
        separable_concave(SeparableConcaveSpec { tables, budget })
    }

    pub fn tables(&self) -> &[Vec<f64>] {
        &self.tables
    }

    pub fn budget(&self) -> i64 {
        self.budget
    }
}

impl Valuation for SeparableConcave {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn value(&self, x: &Point) -> Value {
        if !self.bounds.contains(x) || x.sum() > self.budget {
            return Value::NegInf;
        }
        Value::Finite(self.tables.iter().zip(x.coords()).map(|(t, &z)| t[z as usize]).sum())
    }

    fn name(&self) -> &str {
        "separable"
    }
}

/// Bipartite graph `(V, W; E)` with weights and left caps `hi_i`. Right
/// vertices absorb any amount unless `right_caps` is given; unit right caps
/// give the unit-demand (matching) model.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteFlowSpec {
    pub left: usize,
    pub right: usize,
    pub edges: Vec<flow::Edge>,
    pub caps: Vec<i64>,
    pub right_caps: Option<Vec<i64>>,
}

#[derive(Clone, Debug)]
pub struct OxsFlow {
    spec: BipartiteFlowSpec,
    right_caps: Vec<i64>,
    bounds: Bounds,
}

pub fn oxs_maxflow(spec: BipartiteFlowSpec) -> Result<OxsFlow> {
    if spec.left == 0 {
        return Err(Error::InvalidInstance("at least one left vertex required".into()));
    }
    if spec.caps.len() != spec.left {
        return Err(Error::DimensionMismatch { expected: spec.left, got: spec.caps.len() });
    }
    if let Some(rc) = &spec.right_caps {
        if rc.len() != spec.right {
            return Err(Error::DimensionMismatch { expected: spec.right, got: rc.len() });
        }
    }
    if spec.caps.iter().chain(spec.right_caps.iter().flatten()).any(|&c| c < 0) {
        return Err(Error::InvalidInstance("capacities must be nonnegative".into()));
    }
    for &(i, j, w) in &spec.edges {
        if i >= spec.left || j >= spec.right || !w.is_finite() {
            return Err(Error::InvalidInstance(format!("bad edge ({i}, {j}, {w})")));
        }
    }
    let bounds = Bounds::upto(spec.caps.clone())?;
    let unbounded = spec.caps.iter().sum::<i64>();
    let right_caps = spec.right_caps.clone().unwrap_or_else(|| vec![unbounded; spec.right]);
    Ok(OxsFlow { spec, right_caps, bounds })
}

impl OxsFlow {
    pub fn spec(&self) -> &BipartiteFlowSpec {
        &self.spec
    }
}

impl Valuation for OxsFlow {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn value(&self, x: &Point) -> Value {
        if !self.bounds.contains(x) {
            return Value::NegInf;
        }
        flow::max_weight_flow(x.coords(), &self.right_caps, &self.spec.edges).map_or(Value::NegInf, Value::Finite)
    }

    fn name(&self) -> &str {
        "oxs"
    }
}

/// `min_B ||x - 1_B||_1` by scanning the base list. `x` must be a 0/1 point.
pub fn tau(matroid: &Matroid, x: &Point) -> Result<usize> {
    if x.dim() != matroid.ground_size() {
        return Err(Error::DimensionMismatch { expected: matroid.ground_size(), got: x.dim() });
    }
    let mask = x.to_mask().ok_or_else(|| Error::InvalidInstance(format!("{x} is not a 0/1 point")))?;
    Ok(tau_scan(matroid, mask))
}

fn tau_scan(matroid: &Matroid, mask: u64) -> usize {
    matroid.bases().iter().map(|&b| (b ^ mask).count_ones() as usize).min().expect("base family is non-empty")
}

/// Above this ground-set size the distance table is not precomputed.
const TAU_TABLE_MAX_N: usize = 20;

/// `f(x) = 1 - τ(x)/N` on `{0,1}^V`.
#[derive(Clone, Debug)]
pub struct MatroidDistance {
    matroid: Arc<Matroid>,
    bounds: Bounds,
    table: Option<Vec<u8>>,
}

pub fn matroid_distance(matroid: Arc<Matroid>) -> MatroidDistance {
    let n = matroid.ground_size();
    let table = (n <= TAU_TABLE_MAX_N).then(|| hypercube_distance_table(&matroid));
    MatroidDistance { bounds: Bounds::hypercube(n), matroid, table }
}

/// Hamming distance from every vertex of `{0,1}^N` to the nearest base,
/// by multi-source breadth-first search over the hypercube graph.
fn hypercube_distance_table(matroid: &Matroid) -> Vec<u8> {
    let n = matroid.ground_size();
    let mut dist = vec![u8::MAX; 1 << n];
    let mut queue = VecDeque::new();
    for &b in matroid.bases() {
        dist[b as usize] = 0;
        queue.push_back(b as usize);
    }
    while let Some(v) = queue.pop_front() {
        for i in 0..n {
            let w = v ^ (1 << i);
            if dist[w] == u8::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

impl MatroidDistance {
    pub fn matroid(&self) -> &Arc<Matroid> {
        &self.matroid
    }

    /// Exact integer distance, `None` outside `{0,1}^V`.
    pub fn tau(&self, x: &Point) -> Option<usize> {
        if x.dim() != self.matroid.ground_size() {
            return None;
        }
        let mask = x.to_mask()?;
        Some(match &self.table {
            Some(t) => t[mask as usize] as usize,
            None => tau_scan(&self.matroid, mask),
        })
    }

    /// [`MatroidDistance::tau`] on a subset bitmask.
    pub fn tau_mask(&self, mask: u64) -> usize {
        match &self.table {
            Some(t) => t[mask as usize] as usize,
            None => tau_scan(&self.matroid, mask),
        }
    }
}

impl Valuation for MatroidDistance {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn value(&self, x: &Point) -> Value {
        match self.tau(x) {
            Some(t) => Value::Finite(1.0 - t as f64 / self.matroid.ground_size() as f64),
            None => Value::NegInf,
        }
    }

    fn name(&self) -> &str {
        "matroid_distance"
    }
}

/// `0` on base indicators, `NegInf` elsewhere. Test fixture only: `0` is
/// generally not in its domain.
#[derive(Clone, Debug)]
pub struct MatroidIndicator {
    matroid: Arc<Matroid>,
    bounds: Bounds,
}

pub fn matroid_indicator(matroid: Arc<Matroid>) -> MatroidIndicator {
    MatroidIndicator { bounds: Bounds::hypercube(matroid.ground_size()), matroid }
}

impl Valuation for MatroidIndicator {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn value(&self, x: &Point) -> Value {
        if self.matroid.is_base_point(x) {
            Value::Finite(0.0)
        } else {
            Value::NegInf
        }
    }

    fn name(&self) -> &str {
        "matroid_indicator"
    }
}

/// An explicit value table over `[0, hi]`, lexicographic order, `NegInf`
/// entries allowed. Makes no concavity promise.
#[derive(Clone, Debug)]
pub struct TableValuation {
    bounds: Bounds,
    values: Vec<Value>,
}

impl TableValuation {
    pub fn new(hi: Vec<i64>, values: Vec<Value>) -> Result<Self> {
        let bounds = Bounds::upto(hi)?;
        let volume = bounds.volume().unwrap_or(u128::MAX);
        if volume != values.len() as u128 {
            return Err(Error::InvalidInstance(format!("table needs {volume} values, got {}", values.len())));
        }
        if values.iter().any(|v| v.finite().is_some_and(|f| !f.is_finite())) {
            return Err(Error::InvalidInstance("table values must be finite or null".into()));
        }
        Ok(TableValuation { bounds, values })
    }

    /// The strictly supermodular set function on `{0,1}^2`:
    /// `f(∅) = f({1}) = f({2}) = 0`, `f({1,2}) = 1`. Not M♮-concave.
    pub fn supermodular_pair() -> Self {
        let v = |x: f64| Value::Finite(x);
        TableValuation::new(vec![1, 1], vec![v(0.0), v(0.0), v(0.0), v(1.0)]).expect("static fixture")
    }
}

impl Valuation for TableValuation {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn value(&self, x: &Point) -> Value {
        self.bounds.index_of(x).map_or(Value::NegInf, |i| self.values[i])
    }

    fn name(&self) -> &str {
        "table"
    }
}

/// `(f(x) - lo) / (hi - lo)`: maps a declared range `[lo, hi]` onto `[0, 1]`.
pub struct Rescaled {
    inner: SharedValuation,
    offset: f64,
    scale: f64,
    name: String,
}

pub fn rescale(inner: SharedValuation, lo: f64, hi: f64) -> Result<Rescaled> {
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::InvalidInstance(format!("bad rescale range [{lo}, {hi}]")));
    }
    let name = format!("{}~[{lo},{hi}]", inner.name());
    Ok(Rescaled { inner, offset: lo, scale: hi - lo, name })
}

impl Rescaled {
    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

impl Valuation for Rescaled {
    fn bounds(&self) -> &Bounds {
        self.inner.bounds()
    }

    fn value(&self, x: &Point) -> Value {
        match self.inner.value(x) {
            Value::Finite(v) => Value::Finite((v - self.offset) / self.scale),
            Value::NegInf => Value::NegInf,
        }
    }

    fn name(&self) -> &str {
        &self.name
    }
}

/// Random separable instance with geometric tables; values stay in `[0, 1)`.
pub fn random_separable<R: Rng + ?Sized>(rng: &mut R, n: usize, hi: usize, budget: i64) -> SeparableConcave {
    let coeffs: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0) / n as f64).collect();
    SeparableConcave::geometric(&coeffs, hi, budget).expect("geometric tables are concave")
}

/// Random bipartite instance with weights in `[0, 1)`, left caps `hi` and
/// right capacities in `{1, 2}` (or uncapacitated when `capacitated` is false).
pub fn random_oxs<R: Rng + ?Sized>(rng: &mut R, left: usize, right: usize, hi: i64, capacitated: bool) -> OxsFlow {
    let mut edges = Vec::new();
    for i in 0..left {
        for j in 0..right {
            if rng.random_bool(0.6) {
                edges.push((i, j, rng.random_range(0.0..1.0)));
            }
        }
    }
    let right_caps = capacitated.then(|| (0..right).map(|_| rng.random_range(1..=2)).collect());
    oxs_maxflow(BipartiteFlowSpec { left, right, edges, caps: vec![hi; left], right_caps }).expect("well-formed")
}

/// Random uniform or partition matroid on `n` elements.
pub fn random_matroid<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Matroid {
    if rng.random_bool(0.5) {
        Matroid::uniform(n, rng.random_range(0..=n)).expect("r <= n")
    } else {
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for e in 0..n {
            if blocks.is_empty() || rng.random_bool(0.5) {
                blocks.push(vec![e]);
            } else {
                let b = rng.random_range(0..blocks.len());
                blocks[b].push(e);
            }
        }
        let caps: Vec<usize> = blocks.iter().map(|b| rng.random_range(0..=b.len())).collect();
        Matroid::partition(&blocks, &caps).expect("valid partition")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[i64]) -> Point {
        Point::new(v.to_vec())
    }

    fn fin(v: Value) -> f64 {
        v.finite().expect("finite")
    }

    #[test]
    fn separable_examples() {
        let f = separable_concave(SeparableConcaveSpec {
            tables: vec![vec![0.0, 1.0, 1.5], vec![0.0, 0.8, 1.0]],
            budget: 2,
        })
        .unwrap();
        assert!((fin(f.value(&p(&[1, 1]))) - 1.8).abs() < 1e-12);
        assert_eq!(f.value(&p(&[2, 1])), Value::NegInf);
        assert_eq!(f.value(&p(&[-1, 0])), Value::NegInf);
        let zero = separable_concave(SeparableConcaveSpec { tables: vec![vec![0.0; 3]; 3], budget: 4 }).unwrap();
        for x in zero.bounds().points().filter(|x| x.sum() <= 4) {
            assert_eq!(zero.value(&x), Value::Finite(0.0));
        }
    }

    #[test]
    fn separable_rejects_convex_table() {
        let err = separable_concave(SeparableConcaveSpec { tables: vec![vec![0.0, 0.1, 1.0]], budget: 2 }).unwrap_err();
        assert_eq!(err, Error::NonConcaveTable { item: 0, at: 1 });
    }

    #[test]
    fn oxs_examples() {
        let spec = BipartiteFlowSpec {
            left: 2,
            right: 2,
            edges: vec![(0, 0, 0.3), (0, 1, 0.1), (1, 0, 0.2), (1, 1, 0.2)],
            caps: vec![1, 1],
            right_caps: None,
        };
        for right_caps in [None, Some(vec![1, 1])] {
            let f = oxs_maxflow(BipartiteFlowSpec { right_caps, ..spec.clone() }).unwrap();
            assert_eq!(f.value(&p(&[0, 0])), Value::Finite(0.0));
            assert!((fin(f.value(&p(&[1, 1]))) - 0.5).abs() < 1e-12);
            assert!((fin(f.value(&p(&[1, 0]))) - 0.3).abs() < 1e-12);
            assert_eq!(f.value(&p(&[2, 0])), Value::NegInf);
        }
        // a unit-demand agent cannot take both items
        let single = oxs_maxflow(BipartiteFlowSpec {
            left: 2,
            right: 1,
            edges: vec![(0, 0, 0.3), (1, 0, 0.2)],
            caps: vec![1, 1],
            right_caps: Some(vec![1]),
        })
        .unwrap();
        assert_eq!(single.value(&p(&[1, 1])), Value::NegInf);
    }

    #[test]
    fn matroid_distance_uniform_2_3() {
        let m = Arc::new(Matroid::uniform(3, 2).unwrap());
        let f = matroid_distance(m.clone());
        assert_eq!(f.value(&p(&[1, 1, 0])), Value::Finite(1.0));
        assert!((fin(f.value(&p(&[0, 0, 0]))) - 1.0 / 3.0).abs() < 1e-12);
        assert!((fin(f.value(&p(&[1, 1, 1]))) - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(f.value(&p(&[2, 0, 0])), Value::NegInf);
        assert_eq!(tau(&m, &p(&[0, 0, 0])).unwrap(), 2);
        assert_eq!(tau(&m, &p(&[1, 0, 1])).unwrap(), 0);
    }

    #[test]
    fn tau_partition_example() {
        // bases {1,3} and {2,3} are both at Hamming distance 2 from (1,1,0)
        let m = Matroid::partition(&[vec![0, 1], vec![2]], &[1, 1]).unwrap();
        assert_eq!(tau(&m, &p(&[1, 1, 0])).unwrap(), 2);
        assert_eq!(tau(&m, &p(&[1, 0, 0])).unwrap(), 1);
        assert!(tau(&m, &p(&[2, 0, 0])).is_err());
        assert!(tau(&m, &p(&[1, 0])).is_err());
    }

    #[test]
    fn bfs_table_matches_scan() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        use rand::SeedableRng;
        for _ in 0..30 {
            let n = rng.random_range(1..9);
            let m = Arc::new(random_matroid(&mut rng, n));
            let f = matroid_distance(m.clone());
            for x in f.bounds().points() {
                assert_eq!(f.tau(&x).unwrap(), tau(&m, &x).unwrap());
            }
        }
    }

    #[test]
    fn indicator_values() {
        let f = matroid_indicator(Arc::new(Matroid::uniform(3, 2).unwrap()));
        assert_eq!(f.value(&p(&[1, 0, 1])), Value::Finite(0.0));
        assert_eq!(f.value(&p(&[1, 0, 0])), Value::NegInf);
        assert_eq!(f.value(&p(&[1, 1, 1])), Value::NegInf);
    }

    #[test]
    fn rescale_maps_range() {
        let f: SharedValuation =
            Arc::new(TableValuation::new(vec![1], vec![Value::Finite(2.0), Value::Finite(4.0)]).unwrap());
        let g = rescale(f, 2.0, 4.0).unwrap();
        assert_eq!(g.value(&p(&[0])), Value::Finite(0.0));
        assert_eq!(g.value(&p(&[1])), Value::Finite(1.0));
        assert_eq!(g.value(&p(&[2])), Value::NegInf);
        assert_eq!(g.scale(), 2.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn bits() -> impl Strategy<Value = (usize, u64, u64)> {
            (1usize..7).prop_flat_map(|n| (Just(n), 0..(1u64 << n), 0..(1u64 << n)))
        }

        proptest! {
            #[test]
            fn tau_is_one_lipschitz((n, a, b) in bits(), r in 0usize..7) {
                let m = Matroid::uniform(n, r.min(n)).unwrap();
                let (x, y) = (Point::from_mask(a, n), Point::from_mask(b, n));
                let (tx, ty) = (tau(&m, &x).unwrap() as i64, tau(&m, &y).unwrap() as i64);
                prop_assert!((tx - ty).abs() <= x.l1_distance(&y));
            }

            #[test]
            fn distance_value_levels((n, a, _) in bits(), r in 0usize..7) {
                let m = Arc::new(Matroid::uniform(n, r.min(n)).unwrap());
                let f = matroid_distance(m.clone());
                let x = Point::from_mask(a, n);
                let v = fin(f.value(&x));
                prop_assert!((0.0..=1.0).contains(&v));
                if m.is_base(a) {
                    prop_assert_eq!(v, 1.0);
                } else {
                    prop_assert!(v <= 1.0 - 1.0 / n as f64 + 1e-12);
                }
            }

            #[test]
            fn oxs_monotone_on_domain(seed in 0u64..500) {
                use rand::SeedableRng;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let f = random_oxs(&mut rng, 3, 2, 2, false);
                for x in f.bounds().points() {
                    let Some(vx) = f.value(&x).finite() else { continue };
                    for i in 0..3 {
                        let y = x.step(crate::lattice::Direction::of_item(i));
                        if let Some(vy) = f.value(&y).finite() {
                            prop_assert!(vy >= vx - 1e-12);
                        }
                    }
                }
            }
        }
    }
}
