//! Finitely supported measures on a group and distributions on one of its orbits.
//!
//! The walk is a left walk: `μ⁽ⁿ⁾·x` is obtained by applying [`step`] `n` times
//! to `δ_x`, so the newest increment acts last. Convolution follows the same
//! order: `pushforward(μ ∗ ν, x)` is `μ` pushed through `ν·x`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::groups::GroupAction;
use crate::numerics::{total, ExactWeight, Weight};

/// Default float-mode prune threshold.
pub const DEFAULT_PRUNE: f64 = 1e-15;

/// Mass tolerance accepted for float-mode measures.
pub const FLOAT_MASS_TOLERANCE: f64 = 1e-12;

/// Number of support entries handled by one parallel task in [`step_with`].
pub const STEP_CHUNK: usize = 512;

fn check_mass<W: Weight>(mass: &W) -> Result<()> {
    if W::EXACT {
        if mass.abs_diff(&W::one()).is_zero() {
            return Ok(());
        }
    } else if (mass.to_f64() - 1.0).abs() <= FLOAT_MASS_TOLERANCE {
        return Ok(());
    }
    Err(Error::InvalidWeight(format!("total mass {mass} is not 1")))
}

fn check_entry<W: Weight>(w: &W) -> Result<()> {
    let f = w.to_f64();
    if !W::EXACT && !(f.is_finite() && f >= 0.0) {
        return Err(Error::InvalidWeight(format!("{w}")));
    }
    Ok(())
}

/// Probability measure with finite support on group elements, keyed by the
/// canonical form of each element.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupMeasure<E: Ord, W> {
    weights: BTreeMap<E, W>,
}

impl<E: Ord + Clone, W: Weight> GroupMeasure<E, W> {
    /// Builds a measure from weighted elements, merging repeated elements.
    /// Zero weights are dropped; total mass must be one.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (E, W)>) -> Result<Self> {
        let mut weights: BTreeMap<E, W> = BTreeMap::new();
        for (e, w) in pairs {
            check_entry(&w)?;
            if w.is_zero() {
                continue;
            }
            match weights.get_mut(&e) {
                Some(acc) => acc.add_assign(&w),
                None => {
                    weights.insert(e, w);
                }
            }
        }
        check_mass(&total(weights.values()))?;
        Ok(GroupMeasure { weights })
    }

    pub fn dirac(e: E) -> Self {
        GroupMeasure { weights: BTreeMap::from([(e, W::one())]) }
    }

    /// Uniform measure on a list; repeated entries receive proportionally more mass.
    pub fn uniform(elems: impl IntoIterator<Item = E>) -> Result<Self> {
        let elems: Vec<E> = elems.into_iter().collect();
        if elems.is_empty() {
            return Err(Error::InvalidWeight("uniform measure on an empty set".into()));
        }
        let w = W::from_ratio(1, elems.len() as u64);
        Self::from_pairs(elems.into_iter().map(|e| (e, w.clone())))
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, e: &E) -> W {
        self.weights.get(e).cloned().unwrap_or_else(W::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&E, &W)> {
        self.weights.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &E> {
        self.weights.keys()
    }

    pub fn mass(&self) -> W {
        total(self.weights.values())
    }

    /// Convex combination `Σ cᵢ μᵢ`.
    pub fn mixture(parts: &[(W, &GroupMeasure<E, W>)]) -> Result<Self> {
        let mut pairs = Vec::new();
        for (c, mu) in parts {
            for (e, w) in mu.iter() {
                pairs.push((e.clone(), c.mul(w)));
            }
        }
        Self::from_pairs(pairs)
    }
}

impl<E: Ord + Clone> GroupMeasure<E, ExactWeight> {
    pub fn to_float(&self) -> GroupMeasure<E, f64> {
        GroupMeasure { weights: self.weights.iter().map(|(e, w)| (e.clone(), w.to_f64())).collect() }
    }
}

/// Finitely supported distribution on orbit points, with the mass removed by
/// pruning tracked separately.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitDist<P: Ord, W> {
    weights: BTreeMap<P, W>,
    pruned: f64,
}

impl<P: Ord + Clone, W: Weight> OrbitDist<P, W> {
    pub fn dirac(x: P) -> Self {
        OrbitDist { weights: BTreeMap::from([(x, W::one())]), pruned: 0.0 }
    }

    /// Distribution from weighted points; repeated points are merged.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (P, W)>) -> Result<Self> {
        let mut weights: BTreeMap<P, W> = BTreeMap::new();
        for (p, w) in pairs {
            check_entry(&w)?;
            if w.is_zero() {
                continue;
            }
            match weights.get_mut(&p) {
                Some(acc) => acc.add_assign(&w),
                None => {
                    weights.insert(p, w);
                }
            }
        }
        Ok(OrbitDist { weights, pruned: 0.0 })
    }

    pub fn uniform(points: impl IntoIterator<Item = P>) -> Result<Self> {
        let points: Vec<P> = points.into_iter().collect();
        if points.is_empty() {
            return Err(Error::InvalidWeight("uniform distribution on an empty set".into()));
        }
        let w = W::from_ratio(1, points.len() as u64);
        Self::from_pairs(points.into_iter().map(|p| (p, w.clone())))
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn get(&self, p: &P) -> W {
        self.weights.get(p).cloned().unwrap_or_else(W::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&P, &W)> {
        self.weights.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &P> {
        self.weights.keys()
    }

    pub fn mass(&self) -> W {
        total(self.weights.values())
    }

    /// Total mass removed by pruning so far.
    pub fn pruned(&self) -> f64 {
        self.pruned
    }

    /// `self − other`, for `other ≤ self` pointwise; entries of `other` missing
    /// from `self` are ignored.
    pub fn excess_over(&self, other: &OrbitDist<P, W>) -> OrbitDist<P, W> {
        let mut weights = BTreeMap::new();
        for (p, w) in &self.weights {
            let d = match other.weights.get(p) {
                Some(o) => w.abs_diff(o),
                None => w.clone(),
            };
            if !d.is_zero() {
                weights.insert(p.clone(), d);
            }
        }
        OrbitDist { weights, pruned: self.pruned }
    }

    /// Removes entries strictly below `threshold` and adds their mass to the deficit.
    pub fn prune(&mut self, threshold: f64) {
        if threshold <= 0.0 {
            return;
        }
        let mut removed = 0.0;
        self.weights.retain(|_, w| {
            let f = w.to_f64();
            if f < threshold {
                removed += f;
                false
            } else {
                true
            }
        });
        self.pruned += removed;
    }
}

/// Step measure prepared for repeated use: explicit atoms plus, optionally,
/// uniform windows `{hᵏ : |k| ≤ n}` applied by iterating `h` and `h⁻¹`.
#[derive(Clone, Debug)]
pub struct Kernel<E, W> {
    atoms: Vec<(E, W)>,
    windows: Vec<PowerWindow<E, W>>,
}

#[derive(Clone, Debug)]
struct PowerWindow<E, W> {
    h: E,
    h_inv: E,
    half_width: u64,
    each: W,
}

impl<E: Ord + Clone, W: Weight> Kernel<E, W> {
    pub fn from_measure(mu: &GroupMeasure<E, W>) -> Self {
        Kernel { atoms: mu.iter().map(|(e, w)| (e.clone(), w.clone())).collect(), windows: Vec::new() }
    }

    pub fn empty() -> Self {
        Kernel { atoms: Vec::new(), windows: Vec::new() }
    }

    /// Adds `c · μ`.
    pub fn add_measure(&mut self, c: &W, mu: &GroupMeasure<E, W>) {
        self.atoms.extend(mu.iter().map(|(e, w)| (e.clone(), c.mul(w))));
    }

    /// Adds `c · uniform{hᵏ : |k| ≤ half_width}`.
    pub fn add_window(&mut self, c: &W, h: E, h_inv: E, half_width: u64) {
        let each = c.mul(&W::from_ratio(1, 2 * half_width + 1));
        self.windows.push(PowerWindow { h, h_inv, half_width, each });
    }

    pub fn mass(&self) -> W {
        let mut m = total(self.atoms.iter().map(|(_, w)| w));
        for win in &self.windows {
            m.add_assign(&win.each.mul(&W::from_ratio(2 * win.half_width + 1, 1)));
        }
        m
    }

    /// Calls `f(g·x, weight)` for every transition out of `x`.
    pub fn for_each_transition<A>(&self, action: &A, x: &A::Point, mut f: impl FnMut(A::Point, &W)) -> Result<()>
    where
        A: GroupAction<Elem = E>,
    {
        for (g, w) in &self.atoms {
            f(action.act(g, x)?, w);
        }
        for win in &self.windows {
            f(x.clone(), &win.each);
            for g in [&win.h, &win.h_inv] {
                let mut y = x.clone();
                for _ in 0..win.half_width {
                    y = action.act(g, &y)?;
                    f(y.clone(), &win.each);
                }
            }
        }
        Ok(())
    }
}

/// Runtime knobs for [`step_with`].
#[derive(Clone, Copy, Debug)]
pub struct StepOptions {
    /// Float mode only; entries below this are dropped after each step.
    pub prune: f64,
    /// Maximum support size of the output.
    pub support_limit: usize,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions { prune: DEFAULT_PRUNE, support_limit: usize::MAX }
    }
}

/// `(μ·x)(y) = Σ_g 1{g·x = y} μ(g)`.
pub fn pushforward<A, W>(mu: &GroupMeasure<A::Elem, W>, x: &A::Point, action: &A) -> Result<OrbitDist<A::Point, W>>
where
    A: GroupAction,
    W: Weight,
{
    let mut pairs = Vec::with_capacity(mu.len());
    for (g, w) in mu.iter() {
        pairs.push((action.act(g, x)?, w.clone()));
    }
    OrbitDist::from_pairs(pairs)
}

/// One application of `P_μ` with default options.
pub fn step<A, W>(dist: &OrbitDist<A::Point, W>, mu: &GroupMeasure<A::Elem, W>, action: &A) -> Result<OrbitDist<A::Point, W>>
where
    A: GroupAction,
    W: Weight,
{
    step_with(dist, &Kernel::from_measure(mu), action, &StepOptions::default())
}

/// One application of the kernel. The support is split into fixed-size chunks
/// processed in parallel and merged in key order, so the result does not depend
/// on the number of worker threads.
pub fn step_with<A, W>(
    dist: &OrbitDist<A::Point, W>,
    kernel: &Kernel<A::Elem, W>,
    action: &A,
    opts: &StepOptions,
) -> Result<OrbitDist<A::Point, W>>
where
    A: GroupAction,
    W: Weight,
{
    let entries: Vec<(&A::Point, &W)> = dist.weights.iter().collect();
    let partials: Vec<Result<HashMap<A::Point, W>>> = entries
        .par_chunks(STEP_CHUNK)
        .map(|chunk| {
            let mut acc: HashMap<A::Point, W> = HashMap::new();
            for (x, wx) in chunk {
                kernel.for_each_transition(action, x, |y, w| {
                    let mass = wx.mul(w);
                    match acc.get_mut(&y) {
                        Some(a) => a.add_assign(&mass),
                        None => {
                            acc.insert(y, mass);
                        }
                    }
                })?;
            }
            Ok(acc)
        })
        .collect();
    let mut out: BTreeMap<A::Point, W> = BTreeMap::new();
    for part in partials {
        // sort each partial so float sums are accumulated in a fixed order
        let mut part: Vec<(A::Point, W)> = part?.into_iter().collect();
        part.sort_by(|a, b| a.0.cmp(&b.0));
        for (y, w) in part {
            match out.get_mut(&y) {
                Some(a) => a.add_assign(&w),
                None => {
                    out.insert(y, w);
                }
            }
        }
        if out.len() > opts.support_limit {
            return Err(Error::SupportLimit { size: out.len(), limit: opts.support_limit });
        }
    }
    out.retain(|_, w| !w.is_zero());
    let mut next = OrbitDist { weights: out, pruned: dist.pruned };
    if !W::EXACT {
        next.prune(opts.prune);
    }
    Ok(next)
}

/// Runs `f` on a dedicated pool with `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// `(μ ∗ ν)(g) = Σ_{ab = g} μ(a) ν(b)`, with `b` acting first.
pub fn convolve<A, W>(
    mu: &GroupMeasure<A::Elem, W>,
    nu: &GroupMeasure<A::Elem, W>,
    action: &A,
    support_limit: usize,
) -> Result<GroupMeasure<A::Elem, W>>
where
    A: GroupAction,
    W: Weight,
{
    let mut weights: BTreeMap<A::Elem, W> = BTreeMap::new();
    for (a, wa) in mu.iter() {
        for (b, wb) in nu.iter() {
            let ab = action.compose(a, b)?;
            let w = wa.mul(wb);
            match weights.get_mut(&ab) {
                Some(acc) => acc.add_assign(&w),
                None => {
                    weights.insert(ab, w);
                    if weights.len() > support_limit {
                        return Err(Error::SupportLimit { size: weights.len(), limit: support_limit });
                    }
                }
            }
        }
    }
    weights.retain(|_, w| !w.is_zero());
    Ok(GroupMeasure { weights })
}

/// `(1 − α)·δ_e + α·μ`.
pub fn lazify<A, W>(mu: &GroupMeasure<A::Elem, W>, alpha: &W, action: &A) -> Result<GroupMeasure<A::Elem, W>>
where
    A: GroupAction,
    W: Weight,
{
    if !(*alpha > W::zero() && *alpha < W::one()) {
        return Err(Error::InvalidWeight(format!("laziness parameter {alpha} must lie in (0, 1)")));
    }
    let stay = W::one().abs_diff(alpha);
    let id = GroupMeasure::dirac(action.identity());
    GroupMeasure::mixture(&[(stay, &id), (alpha.clone(), mu)])
}

/// True iff `μ(g) = μ(g⁻¹)` for every `g`.
pub fn symmetrize_check<A, W>(mu: &GroupMeasure<A::Elem, W>, action: &A) -> bool
where
    A: GroupAction,
    W: Weight,
{
    mu.iter().all(|(g, w)| {
        let other = mu.weight(&action.invert(g));
        w.abs_diff(&other).is_zero()
    })
}

/// `Σ_x |d₁(x) − d₂(x)|`, in `[0, 2]`.
pub fn tv<P: Ord + Clone, W: Weight>(d1: &OrbitDist<P, W>, d2: &OrbitDist<P, W>) -> W {
    let mut acc = W::zero();
    let mut a = d1.weights.iter().peekable();
    let mut b = d2.weights.iter().peekable();
    loop {
        match (a.peek(), b.peek()) {
            (Some((ka, wa)), Some((kb, wb))) => match ka.cmp(kb) {
                std::cmp::Ordering::Less => {
                    acc.add_assign(wa);
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    acc.add_assign(wb);
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    acc.add_assign(&wa.abs_diff(wb));
                    a.next();
                    b.next();
                }
            },
            (Some((_, wa)), None) => {
                acc.add_assign(wa);
                a.next();
            }
            (None, Some((_, wb))) => {
                acc.add_assign(wb);
                b.next();
            }
            (None, None) => break,
        }
    }
    acc
}

/// `f(x) − Σ_y P_μ(x, y) f(y)` at every point of `interior`.
///
/// `f` must be defined on the whole `μ`-neighborhood of each interior point;
/// otherwise the computation reports an escape.
pub fn harmonic_defect<A>(
    f: &BTreeMap<A::Point, BigRational>,
    interior: &[A::Point],
    mu: &GroupMeasure<A::Elem, ExactWeight>,
    action: &A,
) -> Result<BTreeMap<A::Point, BigRational>>
where
    A: GroupAction,
{
    let mut out = BTreeMap::new();
    for x in interior {
        let fx = f.get(x).ok_or_else(|| Error::EscapedBall(x.to_string()))?;
        let mut mean = BigRational::zero();
        for (g, w) in mu.iter() {
            let y = action.act(g, x)?;
            let fy = f.get(&y).ok_or_else(|| Error::EscapedBall(y.to_string()))?;
            mean += fy * exact_to_rational(w);
        }
        out.insert(x.clone(), fx - mean);
    }
    Ok(out)
}

pub fn exact_to_rational(w: &ExactWeight) -> BigRational {
    BigRational::new(BigInt::from(w.numer().clone()), BigInt::from(w.denom().clone()))
}

/// Indicator function of a point over a set of points.
pub fn indicator<P: Ord + Clone>(points: &[P], at: &P) -> BTreeMap<P, BigRational> {
    points
        .iter()
        .map(|p| (p.clone(), if p == at { BigRational::one() } else { BigRational::zero() }))
        .collect()
}

fn split_row(line: &str) -> Result<(&str, &str)> {
    line.rsplit_once(',').ok_or_else(|| Error::Parse(format!("expected `key,weight`: {line:?}")))
}

/// CSV with header `element,weight`.
pub fn measure_to_csv<E: Ord + std::fmt::Display, W: Weight>(mu: &GroupMeasure<E, W>) -> String {
    let mut s = String::from("element,weight\n");
    for (e, w) in &mu.weights {
        let _ = writeln!(s, "{e},{}", w.to_csv());
    }
    s
}

pub fn measure_from_csv<A: GroupAction>(text: &str, action: &A) -> Result<GroupMeasure<A::Elem, ExactWeight>> {
    let mut pairs = Vec::new();
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let (e, w) = split_row(line)?;
        pairs.push((action.parse_elem(e)?, w.trim().parse::<ExactWeight>()?));
    }
    GroupMeasure::from_pairs(pairs)
}

/// CSV with header `point,weight`.
pub fn dist_to_csv<P: Ord + std::fmt::Display, W: Weight>(d: &OrbitDist<P, W>) -> String {
    let mut s = String::from("point,weight\n");
    for (p, w) in &d.weights {
        let _ = writeln!(s, "{p},{}", w.to_csv());
    }
    s
}

pub fn dist_from_csv<A: GroupAction>(text: &str, action: &A) -> Result<OrbitDist<A::Point, ExactWeight>> {
    let mut pairs = Vec::new();
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let (p, w) = split_row(line)?;
        pairs.push((action.parse_point(p)?, w.trim().parse::<ExactWeight>()?));
    }
    OrbitDist::from_pairs(pairs)
}
