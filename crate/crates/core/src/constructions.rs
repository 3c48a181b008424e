//! Concrete coupling families.
//!
//! Thompson's group: a finite set `K` is pushed deep into the hair by a single
//! element `g`, where `x₀` translates it; the conjugated powers `g⁻¹x₀ᵏg` with
//! `|k| ≤ n` then move every point of `K` along `2n + 1` consecutive hair sites.
//!
//! Lamplighter actions: the uniform measure on the finite lamp subgroup over a
//! base ball moves any two configurations supported in that ball onto the same
//! coset, so neighboring points are coupled exactly.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::groups::{GroupAction, LampConfig, Lamplighter, WreathElem};
use crate::liouville::{Assembled, BoundCheck, BoundReport, CouplingFamily, DecayRow, FamilyScales, Schedule, StepMeasure};
use crate::measures::{exact_to_rational, pushforward, step_with, tv, GroupMeasure, Kernel, OrbitDist, StepOptions};
use crate::numerics::{Dyadic, ExactWeight, Weight};
use crate::schreier::{distances_to, orbit_ball, SchreierBall};
use crate::thompson::{hair_position, map_tuple, x0, PLMap, ThompsonAction};

/// `ν₀`: uniform on `S ∪ S⁻¹`.
pub fn base_measure<A: GroupAction>(action: &A) -> Result<GroupMeasure<A::Elem, ExactWeight>> {
    GroupMeasure::uniform(action.symmetric_generators().into_iter().map(|(_, g)| g))
}

/// Result of an exhaustive neighbor check.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    /// Largest `tv(ν·x, ν·y)` over neighbor pairs inside `K`.
    pub worst: ExactWeight,
    pub pairs: usize,
    /// Distances between points sent to consecutive hair sites, in order.
    pub consecutive: Vec<ExactWeight>,
}

/// One member of the Thompson family.
#[derive(Clone, Debug)]
pub struct ThompsonEntry {
    /// Sorted points of `K`.
    pub points: Vec<Dyadic>,
    pub window: u64,
    /// `M`: `K[i]` is sent to hair site `M + i + 1`.
    pub depth: u32,
    pub conjugator: PLMap,
    /// `g⁻¹ x₀ g`.
    pub generator: PLMap,
    pub eps: ExactWeight,
}

/// `2(|K| − 1) / (2n + 1)`.
pub fn thompson_eps(points: usize, window: u64) -> ExactWeight {
    ExactWeight::ratio(2 * (points as u64).saturating_sub(1), 2 * window + 1)
}

/// Builds `ν_n = uniform{g⁻¹x₀ᵏg : |k| ≤ n}` for the point set `K`, where `g`
/// sends the sorted points of `K` to hair sites `n + 2, n + 3, …`.
pub fn thompson_family(window: u64, points: &[Dyadic]) -> Result<ThompsonEntry> {
    let mut pts = points.to_vec();
    pts.sort();
    pts.dedup();
    if pts.is_empty() {
        return Err(Error::Config("empty point set".into()));
    }
    if pts.iter().any(|p| !p.is_interior()) {
        return Err(Error::NotIncreasing("points must lie in (0, 1)".into()));
    }
    if window < pts.len() as u64 {
        return Err(Error::DepthUnsafe { n: window as usize });
    }
    let depth = u32::try_from(window + 1).map_err(|_| Error::DepthUnsafe { n: window as usize })?;
    let targets = (1..=pts.len() as u32).map(|i| Dyadic::one_minus_pow2(depth + i)).collect::<Result<Vec<_>>>()?;
    let conjugator = map_tuple(&pts, &targets)?;
    for (i, p) in pts.iter().enumerate() {
        let site = hair_position(&conjugator.eval(p)?);
        if site != Some(depth + i as u32 + 1) {
            return Err(Error::Certificate(format!("{p} is not sent to hair site {}", depth + i as u32 + 1)));
        }
    }
    // lowest site reached by x₀ᵏ, k ≤ n
    if depth + 1 < window as u32 + 2 {
        return Err(Error::DepthUnsafe { n: window as usize });
    }
    let generator = conjugator.conjugate(&x0())?;
    Ok(ThompsonEntry { eps: thompson_eps(pts.len(), window), points: pts, window, depth, conjugator, generator })
}

impl ThompsonEntry {
    pub fn measure(&self) -> StepMeasure<PLMap> {
        StepMeasure::Window { h: self.generator.clone(), h_inv: self.generator.inverse(), half_width: self.window }
    }

    pub fn kernel(&self) -> Kernel<PLMap, ExactWeight> {
        let mut k = Kernel::empty();
        k.add_window(&ExactWeight::one(), self.generator.clone(), self.generator.inverse(), self.window);
        k
    }

    /// `ν·x`.
    pub fn orbit(&self, action: &ThompsonAction, x: &Dyadic) -> Result<OrbitDist<Dyadic, ExactWeight>> {
        let opts = StepOptions::default();
        step_with(&OrbitDist::dirac(x.clone()), &self.kernel(), action, &opts)
    }

    /// Hair sites visited by `x₀ᵏ g·x` for `|k| ≤ n`, in order of `k`.
    pub fn hair_sites(&self, x: &Dyadic) -> Result<Vec<u32>> {
        let x0 = x0();
        let x0_inv = x0.inverse();
        let start = self.conjugator.eval(x)?;
        let mut sites = Vec::with_capacity(2 * self.window as usize + 1);
        let mut up = start.clone();
        let mut down = start.clone();
        let mut lower = Vec::new();
        for _ in 0..self.window {
            down = x0_inv.eval(&down)?;
            lower.push(down.clone());
            up = x0.eval(&up)?;
            sites.push(up.clone());
        }
        let mut all: Vec<Dyadic> = lower.into_iter().rev().collect();
        all.push(start);
        all.extend(sites);
        all.iter()
            .map(|t| hair_position(t).ok_or_else(|| Error::Certificate(format!("{t} left the hair"))))
            .collect()
    }

    /// Exhaustive neighbor check over `K`; fails if any distance exceeds `eps`.
    pub fn certify(&self, action: &ThompsonAction) -> Result<Certificate> {
        let orbits: Vec<OrbitDist<Dyadic, ExactWeight>> =
            self.points.par_iter().map(|p| self.orbit(action, p)).collect::<Result<Vec<_>>>()?;
        let index: BTreeMap<&Dyadic, usize> = self.points.iter().enumerate().map(|(i, p)| (p, i)).collect();
        let gens = action.symmetric_generators();
        let mut pairs = BTreeSet::new();
        for (i, p) in self.points.iter().enumerate() {
            for (_, s) in &gens {
                if let Some(&j) = index.get(&action.act(s, p)?) {
                    if i != j {
                        pairs.insert((i.min(j), i.max(j)));
                    }
                }
            }
        }
        let mut worst = ExactWeight::zero();
        for &(i, j) in &pairs {
            let d = tv(&orbits[i], &orbits[j]);
            if d > worst {
                worst = d;
            }
        }
        let consecutive = orbits.windows(2).map(|w| tv(&w[0], &w[1])).collect();
        if worst > self.eps {
            return Err(Error::Certificate(format!("neighbor distance {worst} exceeds {}", self.eps)));
        }
        Ok(Certificate { worst, pairs: pairs.len(), consecutive })
    }

    /// `max d(x, hᵏ·x)` over `x ∈ K` and `|k| ≤ n`, by BFS to depth `cap`.
    pub fn displacement(&self, action: &ThompsonAction, cap: u32) -> Result<u64> {
        let h_inv = self.generator.inverse();
        let per_point: Vec<u32> = self
            .points
            .par_iter()
            .map(|x| {
                let mut targets = Vec::with_capacity(2 * self.window as usize);
                for g in [&self.generator, &h_inv] {
                    let mut y = x.clone();
                    for _ in 0..self.window {
                        y = g.eval(&y)?;
                        targets.push(y.clone());
                    }
                }
                Ok(distances_to(action, x, &targets, cap)?.into_iter().max().unwrap_or(0))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(per_point.into_iter().max().unwrap_or(0) as u64)
    }
}

pub const DEFAULT_THOMPSON_RADIUS: u32 = 20;
pub const DEFAULT_DISPLACEMENT_CAP: u32 = 24;

/// `K_n = B(1/2, n)` with window `n·|K_n|`, so `ε_n < 1/n`; index `0` is `ν₀`.
pub struct ThompsonFamily {
    action: ThompsonAction,
    ball: SchreierBall<Dyadic>,
    displacement_cap: u32,
    entries: Mutex<BTreeMap<usize, Arc<ThompsonEntry>>>,
    radii: Mutex<BTreeMap<usize, u64>>,
}

impl ThompsonFamily {
    pub fn new(max_radius: u32) -> Result<Self> {
        let action = ThompsonAction::new();
        let ball = orbit_ball(&action, &ThompsonAction::half(), max_radius)?;
        Ok(ThompsonFamily {
            action,
            ball,
            displacement_cap: DEFAULT_DISPLACEMENT_CAP,
            entries: Mutex::new(BTreeMap::new()),
            radii: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn with_displacement_cap(mut self, cap: u32) -> Self {
        self.displacement_cap = cap;
        self
    }

    pub fn ball(&self) -> &SchreierBall<Dyadic> {
        &self.ball
    }

    pub fn size(&self, n: usize) -> usize {
        self.ball.vertices().iter().filter(|p| self.ball.distance(p).is_some_and(|d| d as usize <= n)).count()
    }

    /// Sorted points of `K_n`.
    pub fn points(&self, n: usize) -> Vec<Dyadic> {
        let mut k: Vec<Dyadic> = self.ball.shell_union(n as u32).into_iter().collect();
        k.sort();
        k
    }

    pub fn window(&self, n: usize) -> u64 {
        n as u64 * self.size(n) as u64
    }

    fn check_index(&self, n: usize) -> Result<()> {
        if n >= self.len() {
            return Err(Error::FamilyExhausted { j: n });
        }
        Ok(())
    }

    pub fn entry(&self, n: usize) -> Result<Arc<ThompsonEntry>> {
        if n == 0 {
            return Err(Error::Config("index 0 is the generator measure".into()));
        }
        self.check_index(n)?;
        if let Some(e) = self.entries.lock().expect("entry cache").get(&n) {
            return Ok(e.clone());
        }
        let e = Arc::new(thompson_family(self.window(n), &self.points(n))?);
        self.entries.lock().expect("entry cache").insert(n, e.clone());
        Ok(e)
    }
}

impl FamilyScales for ThompsonFamily {
    fn len(&self) -> usize {
        self.ball.radius() as usize + 1
    }

    fn inradius(&self, n: usize) -> Result<u64> {
        self.check_index(n)?;
        Ok(n as u64)
    }

    fn eps(&self, n: usize) -> Result<ExactWeight> {
        self.check_index(n)?;
        if n == 0 {
            return Ok(ExactWeight::ratio(2, 1));
        }
        Ok(thompson_eps(self.size(n), self.window(n)))
    }

    fn radius(&self, n: usize) -> Result<u64> {
        if n == 0 {
            return Ok(1);
        }
        if let Some(&r) = self.radii.lock().expect("radius cache").get(&n) {
            return Ok(r);
        }
        let r = self.entry(n)?.displacement(&self.action, self.displacement_cap)?;
        self.radii.lock().expect("radius cache").insert(n, r);
        Ok(r)
    }
}

impl CouplingFamily for ThompsonFamily {
    type Action = ThompsonAction;

    fn action(&self) -> &ThompsonAction {
        &self.action
    }

    fn basepoint(&self) -> Dyadic {
        ThompsonAction::half()
    }

    fn measure(&self, n: usize) -> Result<StepMeasure<PLMap>> {
        if n == 0 {
            return Ok(StepMeasure::Explicit(base_measure(&self.action)?));
        }
        Ok(self.entry(n)?.measure())
    }

    fn contains(&self, n: usize, x: &Dyadic) -> Result<bool> {
        Ok(self.ball.distance(x).is_some_and(|d| d as usize <= n))
    }

    fn certify(&self, n: usize) -> Result<ExactWeight> {
        if n == 0 {
            return Ok(ExactWeight::zero());
        }
        Ok(self.entry(n)?.certify(&self.action)?.worst)
    }
}

/// Largest lamp ball certified by explicit enumeration of `K_n`.
pub const EXPLICIT_CERTIFICATE_SITES: usize = 8;

/// Default cap on `2^|B(o, n)|` for materialized lamp measures.
pub const DEFAULT_LAMP_SUPPORT_LIMIT: usize = 1 << 16;

/// `K_n` = configurations supported in `B(o, n)`, `ν_n` uniform on `⊕_{B(o,n)} Z/2`.
pub struct LamplighterFamily<B: GroupAction> {
    action: Lamplighter<B>,
    base_ball: SchreierBall<B::Point>,
    support_limit: usize,
}

/// One member of the lamplighter family.
#[derive(Clone)]
pub struct LampEntry<E: Ord, P: Ord> {
    pub sites: Vec<P>,
    pub measure: GroupMeasure<WreathElem<E, P>, ExactWeight>,
    pub radius: u64,
}

impl<B: GroupAction + Clone> LamplighterFamily<B> {
    pub fn new(base: B, origin: B::Point, max_n: u32) -> Result<Self> {
        let base_ball = orbit_ball(&base, &origin, max_n)?;
        Ok(LamplighterFamily { action: Lamplighter::new(base, origin), base_ball, support_limit: DEFAULT_LAMP_SUPPORT_LIMIT })
    }

    pub fn with_support_limit(mut self, limit: usize) -> Self {
        self.support_limit = limit;
        self
    }

    pub fn lamplighter(&self) -> &Lamplighter<B> {
        &self.action
    }

    /// Sites of `B(o, n)` in the base Schreier graph, sorted.
    pub fn sites(&self, n: usize) -> Vec<B::Point> {
        let mut s: Vec<B::Point> = self.base_ball.shell_union(n as u32).into_iter().collect();
        s.sort();
        s
    }

    fn involutions(&self, n: usize) -> Vec<WreathElem<B::Elem, B::Point>> {
        self.sites(n).into_iter().map(|p| self.action.lamp_elem(LampConfig::single(p))).collect()
    }

    /// `ν_n` as an explicit measure on the `2^|B(o,n)|` lamp elements.
    pub fn entry(&self, n: usize) -> Result<LampEntry<B::Elem, B::Point>> {
        if n == 0 || n >= self.len() {
            return Err(Error::Config(format!("lamp index {n} outside 1..{}", self.len())));
        }
        let sites = self.sites(n);
        let cube = StepMeasure::Cube { involutions: self.involutions(n) };
        let measure = cube.materialize(&self.action, self.support_limit)?;
        Ok(LampEntry { radius: self.radius(n)?, sites, measure })
    }

    /// All of `K_n`, when small enough to list.
    pub fn configurations(&self, n: usize) -> Result<Vec<LampConfig<B::Point>>> {
        let sites = self.sites(n);
        if sites.len() >= usize::BITS as usize || (1usize << sites.len()) > self.support_limit {
            return Err(Error::SupportLimit { size: usize::MAX, limit: self.support_limit });
        }
        Ok((0..1usize << sites.len())
            .map(|mask| LampConfig::from_sites(sites.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, p)| p.clone())))
            .collect())
    }

    fn explicit_certificate(&self, n: usize) -> Result<ExactWeight> {
        let nu = self.entry(n)?.measure;
        let configs = self.configurations(n)?;
        let members: HashSet<&LampConfig<B::Point>> = configs.iter().collect();
        let gens = self.action.symmetric_generators();
        let mut worst = ExactWeight::zero();
        for x in &configs {
            let nx = pushforward(&nu, x, &self.action)?;
            for (_, s) in &gens {
                let y = self.action.act(s, x)?;
                if y == *x || !members.contains(&y) {
                    continue;
                }
                let d = tv(&nx, &pushforward(&nu, &y, &self.action)?);
                if d > worst {
                    worst = d;
                }
            }
        }
        Ok(worst)
    }

    // ν_n is uniform on the subgroup generated by the single-site lamps over
    // B(o, n); two configurations supported in B(o, n) differ by one of its
    // elements, so their orbits coincide.
    fn coset_certificate(&self, n: usize) -> Result<ExactWeight> {
        let id = self.action.base().identity();
        let sites: BTreeSet<B::Point> = self.sites(n).into_iter().collect();
        let mut covered = BTreeSet::new();
        for inv in self.involutions(n) {
            if inv.base != id || inv.lamps.len() != 1 {
                return Err(Error::Certificate(format!("{inv} is not a single lamp")));
            }
            if self.action.compose(&inv, &inv)? != self.action.identity() {
                return Err(Error::Certificate(format!("{inv} is not an involution")));
            }
            covered.insert(inv.lamps.sites()[0].clone());
        }
        if covered != sites {
            return Err(Error::Certificate("lamp sites do not match the base ball".into()));
        }
        Ok(ExactWeight::zero())
    }
}

impl<B: GroupAction + Clone> FamilyScales for LamplighterFamily<B> {
    fn len(&self) -> usize {
        self.base_ball.radius() as usize + 1
    }

    fn inradius(&self, n: usize) -> Result<u64> {
        Ok(if n == 0 { 0 } else { n as u64 + 1 })
    }

    fn eps(&self, n: usize) -> Result<ExactWeight> {
        Ok(if n == 0 { ExactWeight::ratio(2, 1) } else { ExactWeight::zero() })
    }

    /// Word length of the full lamp element over `B(o, n)`: a closed tour of a
    /// spanning tree plus one flip per site.
    fn radius(&self, n: usize) -> Result<u64> {
        if n == 0 {
            return Ok(1);
        }
        Ok(3 * self.sites(n).len() as u64 - 2)
    }
}

impl<B: GroupAction + Clone> CouplingFamily for LamplighterFamily<B> {
    type Action = Lamplighter<B>;

    fn action(&self) -> &Lamplighter<B> {
        &self.action
    }

    fn basepoint(&self) -> LampConfig<B::Point> {
        LampConfig::empty()
    }

    fn measure(&self, n: usize) -> Result<StepMeasure<WreathElem<B::Elem, B::Point>>> {
        if n == 0 {
            return Ok(StepMeasure::Explicit(base_measure(&self.action)?));
        }
        Ok(StepMeasure::Cube { involutions: self.involutions(n) })
    }

    fn contains(&self, n: usize, x: &LampConfig<B::Point>) -> Result<bool> {
        Ok(x.sites().iter().all(|p| self.base_ball.distance(p).is_some_and(|d| d as usize <= n)))
    }

    fn certify(&self, n: usize) -> Result<ExactWeight> {
        if n == 0 {
            return Ok(ExactWeight::zero());
        }
        if self.sites(n).len() <= EXPLICIT_CERTIFICATE_SITES {
            self.explicit_certificate(n)
        } else {
            self.coset_certificate(n)
        }
    }
}

/// Uniform distribution on `fixed + ⊕_{free} Z/2`, with `fixed ∩ free = ∅`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cylinder<P: Ord> {
    pub fixed: LampConfig<P>,
    pub free: LampConfig<P>,
}

enum CylinderPart<E, P> {
    Atom(E, ExactWeight),
    Cube(LampConfig<P>, ExactWeight),
}

fn without<P: Ord + Clone>(a: &LampConfig<P>, b: &LampConfig<P>) -> LampConfig<P> {
    LampConfig::from_sites(a.sites().iter().filter(|p| !b.contains(p)).cloned())
}

fn union<P: Ord + Clone>(a: &LampConfig<P>, b: &LampConfig<P>) -> LampConfig<P> {
    let mut all: Vec<P> = a.sites().iter().chain(b.sites()).cloned().collect();
    all.sort();
    all.dedup();
    LampConfig::from_sites(all)
}

fn cylinder_parts<B: GroupAction>(
    assembled: &Assembled<WreathElem<B::Elem, B::Point>>,
    upto: usize,
) -> Result<Vec<CylinderPart<WreathElem<B::Elem, B::Point>, B::Point>>> {
    let mut parts = Vec::new();
    for (c, part) in assembled.parts.iter().take(upto) {
        match part {
            StepMeasure::Explicit(mu) => {
                for (g, w) in mu.iter() {
                    parts.push(CylinderPart::Atom(g.clone(), c.mul(w)));
                }
            }
            StepMeasure::Cube { involutions } => {
                let mut sites = Vec::with_capacity(involutions.len());
                for inv in involutions {
                    if inv.lamps.len() != 1 {
                        return Err(Error::Config(format!("{inv} is not a single lamp")));
                    }
                    sites.push(inv.lamps.sites()[0].clone());
                }
                parts.push(CylinderPart::Cube(LampConfig::from_sites(sites), c.clone()));
            }
            StepMeasure::Window { .. } => {
                return Err(Error::Config("power windows have no cylinder form".into()));
            }
        }
    }
    Ok(parts)
}

/// Image of the free set and the lamp update for one step, shared by coupled walks.
enum Move<P: Ord> {
    Atom { free: LampConfig<P>, elem_index: usize },
    Cube { free: LampConfig<P>, sites: LampConfig<P> },
}

fn plan_move<B: GroupAction>(
    ll: &Lamplighter<B>,
    parts: &[CylinderPart<WreathElem<B::Elem, B::Point>, B::Point>],
    idx: usize,
    free: &LampConfig<B::Point>,
) -> Result<Move<B::Point>> {
    Ok(match &parts[idx] {
        CylinderPart::Atom(g, _) => Move::Atom { free: ll.permute(&g.base, free)?, elem_index: idx },
        CylinderPart::Cube(sites, _) => Move::Cube { free: union(free, sites), sites: sites.clone() },
    })
}

fn apply_fixed<B: GroupAction>(
    ll: &Lamplighter<B>,
    parts: &[CylinderPart<WreathElem<B::Elem, B::Point>, B::Point>],
    mv: &Move<B::Point>,
    fixed: &LampConfig<B::Point>,
) -> Result<LampConfig<B::Point>> {
    Ok(match mv {
        Move::Atom { free, elem_index } => {
            let CylinderPart::Atom(g, _) = &parts[*elem_index] else { unreachable!() };
            without(&ll.act(g, fixed)?, free)
        }
        Move::Cube { sites, .. } => without(fixed, sites),
    })
}

fn part_weight<E, P>(p: &CylinderPart<E, P>) -> &ExactWeight {
    match p {
        CylinderPart::Atom(_, w) | CylinderPart::Cube(_, w) => w,
    }
}

/// Exact `ℓ¹` norm of `Σ w · uniform(cylinder)` with signed weights.
pub fn cylinder_l1<P: Ord + Clone>(terms: Vec<(Cylinder<P>, BigRational)>) -> BigRational {
    let mut merged: BTreeMap<Cylinder<P>, BigRational> = BTreeMap::new();
    for (c, w) in terms {
        *merged.entry(c).or_insert_with(BigRational::zero) += w;
    }
    merged.retain(|_, w| !w.is_zero());
    if merged.is_empty() {
        return BigRational::zero();
    }
    let positive = merged.values().all(|w| w.is_positive());
    let negative = merged.values().all(|w| w.is_negative());
    if positive || negative {
        return merged.values().fold(BigRational::zero(), |a, w| a + w).abs();
    }
    let mut counts: BTreeMap<&P, usize> = BTreeMap::new();
    for c in merged.keys() {
        for p in c.free.sites() {
            *counts.entry(p).or_default() += 1;
        }
    }
    let split = counts.iter().find(|(_, &k)| k < merged.len()).map(|(p, _)| (*p).clone());
    let Some(v) = split else {
        // every cylinder frees the same sites; distinct fixed parts are disjoint
        let mut by_fixed: BTreeMap<&LampConfig<P>, BigRational> = BTreeMap::new();
        for (c, w) in &merged {
            *by_fixed.entry(&c.fixed).or_insert_with(BigRational::zero) += w;
        }
        return by_fixed.values().fold(BigRational::zero(), |a, w| a + w.abs());
    };
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    let single = LampConfig::single(v.clone());
    let mut off = Vec::new();
    let mut on = Vec::new();
    for (c, w) in merged {
        if c.free.contains(&v) {
            let free = without(&c.free, &single);
            let hw = &w * &half;
            on.push((Cylinder { fixed: union(&c.fixed, &single), free: free.clone() }, hw.clone()));
            off.push((Cylinder { fixed: c.fixed, free }, hw));
        } else if c.fixed.contains(&v) {
            on.push((c, w));
        } else {
            off.push((c, w));
        }
    }
    cylinder_l1(off) + cylinder_l1(on)
}

fn rational_to_weight(r: &BigRational) -> Result<ExactWeight> {
    let (n, d) = (r.numer().to_biguint(), r.denom().to_biguint());
    match (n, d) {
        (Some(n), Some(d)) => ExactWeight::new(n, d),
        _ => Err(Error::InvalidWeight(format!("negative distance {r}"))),
    }
}

fn cylinders_contained<B: GroupAction + Clone>(
    family: &LamplighterFamily<B>,
    parts: &[CylinderPart<WreathElem<B::Elem, B::Point>, B::Point>],
    start: &LampConfig<B::Point>,
    steps: u32,
    n: usize,
) -> Result<bool> {
    let ll = family.lamplighter();
    let mut states: BTreeSet<Cylinder<B::Point>> = BTreeSet::from([Cylinder { fixed: start.clone(), free: LampConfig::empty() }]);
    for _ in 0..steps {
        for c in &states {
            if !family.contains(n, &c.fixed)? || !family.contains(n, &c.free)? {
                return Ok(false);
            }
        }
        let mut next = BTreeSet::new();
        for c in &states {
            for idx in 0..parts.len() {
                let mv = plan_move(ll, parts, idx, &c.free)?;
                let fixed = apply_fixed(ll, parts, &mv, &c.fixed)?;
                let free = match mv {
                    Move::Atom { free, .. } | Move::Cube { free, .. } => free,
                };
                next.insert(Cylinder { fixed, free });
            }
        }
        states = next;
    }
    Ok(true)
}

type CoupledKey<P> = (LampConfig<P>, LampConfig<P>, LampConfig<P>);
type CoupledStates<P> = BTreeMap<CoupledKey<P>, ExactWeight>;

/// Walks from `x` and `y` with shared increments, keeping only the cylinder pairs
/// that have not merged. `visit` sees the states after every step, from step 0.
fn coupled_walk<B: GroupAction>(
    ll: &Lamplighter<B>,
    parts: &[CylinderPart<WreathElem<B::Elem, B::Point>, B::Point>],
    x: &LampConfig<B::Point>,
    y: &LampConfig<B::Point>,
    steps: u32,
    mut visit: impl FnMut(u32, &CoupledStates<B::Point>) -> Result<()>,
) -> Result<CoupledStates<B::Point>> {
    let mut states: CoupledStates<B::Point> = BTreeMap::new();
    if x != y {
        states.insert((x.clone(), y.clone(), LampConfig::empty()), ExactWeight::one());
    }
    visit(0, &states)?;
    for t in 1..=steps {
        let mut next: CoupledStates<B::Point> = BTreeMap::new();
        for ((fx, fy, free), w) in &states {
            for idx in 0..parts.len() {
                let mv = plan_move(ll, parts, idx, free)?;
                let nx = apply_fixed(ll, parts, &mv, fx)?;
                let ny = apply_fixed(ll, parts, &mv, fy)?;
                if nx == ny {
                    continue;
                }
                let nfree = match mv {
                    Move::Atom { free, .. } | Move::Cube { free, .. } => free,
                };
                let mass = w.mul(part_weight(&parts[idx]));
                match next.get_mut(&(nx.clone(), ny.clone(), nfree.clone())) {
                    Some(acc) => acc.add_assign(&mass),
                    None => {
                        next.insert((nx, ny, nfree), mass);
                    }
                }
            }
        }
        states = next;
        visit(t, &states)?;
    }
    Ok(states)
}

fn push_terms<P: Ord + Clone>(states: &CoupledStates<P>, negate: bool, terms: &mut Vec<(Cylinder<P>, BigRational)>) {
    for ((fx, fy, free), w) in states {
        let r = exact_to_rational(w);
        let r = if negate { -r } else { r };
        terms.push((Cylinder { fixed: fx.clone(), free: free.clone() }, r.clone()));
        terms.push((Cylinder { fixed: fy.clone(), free: free.clone() }, -r));
    }
}

/// Exact version of [`crate::liouville::verify_bound`] for lamplighter families.
///
/// The walks from `x` and from each neighbor `y` are run with shared increments.
/// Lamp measures randomize whole site sets at once, so each path of the coupled
/// walk carries a pair of cylinders with a common free set. Pairs whose fixed
/// parts agree describe the same distribution and cancel; the rest are summed
/// exactly. `support_x` and `support_y` report the number of uncancelled pairs.
pub fn cylinder_verify<B: GroupAction + Clone>(
    assembled: &Assembled<WreathElem<B::Elem, B::Point>>,
    schedule: &Schedule,
    family: &LamplighterFamily<B>,
    x: &LampConfig<B::Point>,
) -> Result<BoundReport<ExactWeight>> {
    let ll = family.lamplighter();
    let parts = cylinder_parts::<B>(assembled, assembled.parts.len())?;
    let horizon = schedule.rows.iter().map(|r| r.m).max().unwrap_or(0);
    let mut checks = Vec::new();
    let mut decay = Vec::new();
    for y in crate::liouville::neighbors(ll, x)? {
        let key = y.to_string();
        let mut kept: BTreeMap<u32, (CoupledStates<B::Point>, ExactWeight)> = BTreeMap::new();
        coupled_walk(ll, &parts, x, &y, horizon, |t, states| {
            let mut terms = Vec::with_capacity(2 * states.len());
            push_terms(states, false, &mut terms);
            let d = rational_to_weight(&cylinder_l1(terms))?;
            decay.push(DecayRow { m: t, neighbor: key.clone(), tv: d.clone(), support_x: states.len(), support_y: states.len(), pruned: 0.0 });
            if schedule.rows.iter().any(|r| r.m == t) {
                kept.insert(t, (states.clone(), d));
            }
            Ok(())
        })?;
        for row in &schedule.rows {
            let low_parts = cylinder_parts::<B>(assembled, row.j)?;
            let contained = cylinders_contained(family, &low_parts, x, row.m, row.n)?
                && cylinders_contained(family, &low_parts, &y, row.m, row.n)?;
            let low = coupled_walk(ll, &low_parts, x, &y, row.m, |_, _| Ok(()))?;
            let (full, d) = &kept[&row.m];
            let mut terms = Vec::new();
            push_terms(full, false, &mut terms);
            push_terms(&low, true, &mut terms);
            checks.push(BoundCheck {
                j: row.j,
                m: row.m,
                neighbor: key.clone(),
                tv: d.clone(),
                coupled_tv: rational_to_weight(&cylinder_l1(terms))?,
                pruned: 0.0,
                bound: row.bound.clone(),
                nominal: row.nominal.clone(),
                contained,
            });
        }
    }
    Ok(BoundReport { checks, decay })
}
