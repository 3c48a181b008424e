//! Thompson's group `F` as piecewise-linear homeomorphisms of `[0, 1]`.
//!
//! Elements are stored as their minimal breakpoint list; all breakpoints are
//! dyadic and all slopes are powers of two, so evaluation is exact.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};
use crate::groups::GroupAction;
use crate::numerics::{Dyadic, SignedDyadic};

#[derive(Clone)]
struct Segment {
    slope_log2: i64,
    offset: SignedDyadic,
}

/// Element of `F` in canonical form: breakpoints from `(0,0)` to `(1,1)`, strictly
/// increasing in both coordinates, power-of-two slopes, no collinear interior points.
#[derive(Clone)]
pub struct PLMap {
    points: Vec<(Dyadic, Dyadic)>,
    segments: Vec<Segment>,
}

impl PartialEq for PLMap {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points
    }
}

impl Eq for PLMap {}

impl Hash for PLMap {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.points.hash(state);
    }
}

impl Ord for PLMap {
    fn cmp(&self, other: &Self) -> Ordering {
        self.points.cmp(&other.points)
    }
}

impl PartialOrd for PLMap {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn segment_between(p: &(Dyadic, Dyadic), q: &(Dyadic, Dyadic)) -> Result<Segment> {
    let dx = q.0.sub(&p.0)?;
    let dy = q.1.sub(&p.1)?;
    // dy / dx must be 2^a; both are positive dyadics
    let (nx, ex) = (dx.num(), dx.exp() as i64);
    let (ny, ey) = (dy.num(), dy.exp() as i64);
    let tx = nx.trailing_zeros().unwrap_or(0);
    let ty = ny.trailing_zeros().unwrap_or(0);
    let ox = nx >> tx;
    let oy = ny >> ty;
    if ox != oy {
        return Err(Error::Parse(format!("slope between {p:?} and {q:?} is not a power of two")));
    }
    let slope_log2 = (ty as i64 - ey) - (tx as i64 - ex);
    let offset = p.1.to_signed().sub(&p.0.to_signed().mul_pow2(slope_log2)?)?;
    Ok(Segment { slope_log2, offset })
}

impl PLMap {
    pub fn identity() -> Self {
        PLMap::from_breakpoints(vec![(Dyadic::zero(), Dyadic::zero()), (Dyadic::one(), Dyadic::one())])
            .expect("identity is valid")
    }

    /// Validates and canonicalizes a breakpoint list.
    pub fn from_breakpoints(points: Vec<(Dyadic, Dyadic)>) -> Result<Self> {
        let bad = |msg: &str| Error::Parse(format!("invalid PL map: {msg}"));
        if points.len() < 2 {
            return Err(bad("needs at least two breakpoints"));
        }
        let first = &points[0];
        let last = &points[points.len() - 1];
        if !first.0.is_zero() || !first.1.is_zero() || !last.0.is_one() || !last.1.is_one() {
            return Err(bad("must start at (0,0) and end at (1,1)"));
        }
        for w in points.windows(2) {
            if w[0].0 >= w[1].0 || w[0].1 >= w[1].1 {
                return Err(bad("coordinates must be strictly increasing"));
            }
        }
        let mut kept: Vec<(Dyadic, Dyadic)> = Vec::with_capacity(points.len());
        let mut segments: Vec<Segment> = Vec::with_capacity(points.len());
        for p in points {
            if let Some(prev) = kept.last() {
                let seg = segment_between(prev, &p)?;
                if let Some(last_seg) = segments.last() {
                    if last_seg.slope_log2 == seg.slope_log2 {
                        // collinear: drop the previous interior breakpoint
                        kept.pop();
                        segments.pop();
                        let seg = segment_between(kept.last().expect("origin kept"), &p)?;
                        segments.push(seg);
                        kept.push(p);
                        continue;
                    }
                }
                segments.push(seg);
            }
            kept.push(p);
        }
        Ok(PLMap { points: kept, segments })
    }

    pub fn breakpoints(&self) -> &[(Dyadic, Dyadic)] {
        &self.points
    }

    pub fn is_identity(&self) -> bool {
        self.points.len() == 2
    }

    /// Slopes as base-two logarithms, one per segment.
    pub fn slopes_log2(&self) -> Vec<i64> {
        self.segments.iter().map(|s| s.slope_log2).collect()
    }

    pub fn eval(&self, t: &Dyadic) -> Result<Dyadic> {
        // first breakpoint with x > t, then step back to the segment start
        let idx = self.points.partition_point(|(x, _)| x <= t);
        if idx == 0 {
            return Err(Error::OutOfRange(t.to_string()));
        }
        if idx == self.points.len() {
            return if t.is_one() { Ok(Dyadic::one()) } else { Err(Error::OutOfRange(t.to_string())) };
        }
        let seg = &self.segments[idx - 1];
        t.affine(seg.slope_log2, &seg.offset)
    }

    pub fn inverse(&self) -> PLMap {
        let points = self.points.iter().map(|(x, y)| (y.clone(), x.clone())).collect();
        PLMap::from_breakpoints(points).expect("inverse of a valid map is valid")
    }

    /// `self ∘ other` (`other` acts first).
    pub fn compose(&self, other: &PLMap) -> Result<PLMap> {
        let other_inv = other.inverse();
        let mut xs: Vec<Dyadic> = other.points.iter().map(|(x, _)| x.clone()).collect();
        for (x, _) in &self.points {
            xs.push(other_inv.eval(x)?);
        }
        xs.sort();
        xs.dedup();
        let points = xs
            .into_iter()
            .map(|x| {
                let y = self.eval(&other.eval(&x)?)?;
                Ok((x, y))
            })
            .collect::<Result<Vec<_>>>()?;
        PLMap::from_breakpoints(points)
    }

    pub fn pow(&self, k: i64) -> Result<PLMap> {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut acc = PLMap::identity();
        for _ in 0..k.unsigned_abs() {
            acc = base.compose(&acc)?;
        }
        Ok(acc)
    }

    /// `self⁻¹ ∘ h ∘ self`.
    pub fn conjugate(&self, h: &PLMap) -> Result<PLMap> {
        self.inverse().compose(&h.compose(self)?)
    }
}

impl fmt::Display for PLMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (x, y)) in self.points.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{x}:{y}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for PLMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PLMap({self})")
    }
}

impl std::str::FromStr for PLMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let points = s
            .split(';')
            .filter(|p| !p.trim().is_empty())
            .map(|pair| {
                let (x, y) = pair
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("breakpoint needs `x:y`: {pair:?}")))?;
                Ok((x.parse()?, y.parse()?))
            })
            .collect::<Result<Vec<_>>>()?;
        PLMap::from_breakpoints(points)
    }
}

pub fn pl_eval(g: &PLMap, t: &Dyadic) -> Result<Dyadic> {
    g.eval(t)
}

pub fn pl_compose(g: &PLMap, h: &PLMap) -> Result<PLMap> {
    g.compose(h)
}

pub fn pl_invert(g: &PLMap) -> PLMap {
    g.inverse()
}

fn d(num: u64, exp: u32) -> Dyadic {
    Dyadic::from_u64(num, exp)
}

/// `x₀`: `t/2` on `[0,1/2]`, `t − 1/4` on `[1/2,3/4]`, `2t − 1` on `[3/4,1]`.
pub fn x0() -> PLMap {
    PLMap::from_breakpoints(vec![(d(0, 0), d(0, 0)), (d(1, 1), d(1, 2)), (d(3, 2), d(1, 1)), (d(1, 0), d(1, 0))])
        .expect("x0 is valid")
}

/// `x₁`: identity on `[0,1/2]`, a half-scale copy of `x₀` on `[1/2,1]`.
pub fn x1() -> PLMap {
    PLMap::from_breakpoints(vec![
        (d(0, 0), d(0, 0)),
        (d(1, 1), d(1, 1)),
        (d(3, 2), d(5, 3)),
        (d(7, 3), d(3, 2)),
        (d(1, 0), d(1, 0)),
    ])
    .expect("x1 is valid")
}

/// `Some(m)` when `t = 1 − 2^(−m)` with `m ≥ 2`.
pub fn hair_position(t: &Dyadic) -> Option<u32> {
    let m = t.exp();
    (m >= 2 && t.num().count_ones() == m as u64).then_some(m)
}

/// Greedy decomposition of `[a, b]` into maximal standard dyadic intervals.
/// Returns `(start, log2 length)` pairs; lengths are `2^(-q)`.
fn standard_partition(a: &Dyadic, b: &Dyadic) -> Result<Vec<(Dyadic, u32)>> {
    let mut leaves = Vec::new();
    let mut p = a.clone();
    while p < *b {
        // p = u/2^e with u odd allows lengths 2^(-q) for q >= e
        let mut q = p.exp();
        loop {
            let end = p.to_signed().add(&SignedDyadic::new(1, q)?)?;
            if end <= b.to_signed() {
                leaves.push((p.clone(), q));
                p = end.to_unit()?;
                break;
            }
            q += 1;
        }
    }
    Ok(leaves)
}

/// Split the leftmost largest leaf until `leaves.len() == count`.
fn split_to(leaves: &mut Vec<(Dyadic, u32)>, count: usize) -> Result<()> {
    while leaves.len() < count {
        let (idx, _) = leaves
            .iter()
            .enumerate()
            .min_by_key(|(i, (_, q))| (*q, *i))
            .expect("nonempty partition");
        let (start, q) = leaves[idx].clone();
        let mid = start.to_signed().add(&SignedDyadic::new(1, q + 1)?)?.to_unit()?;
        leaves[idx] = (start, q + 1);
        leaves.insert(idx + 1, (mid, q + 1));
    }
    Ok(())
}

/// Constructive strong transitivity: an element of `F` sending `sources[i]` to `targets[i]`.
pub fn map_tuple(sources: &[Dyadic], targets: &[Dyadic]) -> Result<PLMap> {
    if sources.len() != targets.len() {
        return Err(Error::LengthMismatch { sources: sources.len(), targets: targets.len() });
    }
    for list in [sources, targets] {
        let ok = list.iter().all(Dyadic::is_interior) && list.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            let text: Vec<String> = list.iter().map(ToString::to_string).collect();
            return Err(Error::NotIncreasing(text.join(", ")));
        }
    }
    let with_ends = |list: &[Dyadic]| {
        let mut v = Vec::with_capacity(list.len() + 2);
        v.push(Dyadic::zero());
        v.extend_from_slice(list);
        v.push(Dyadic::one());
        v
    };
    let src = with_ends(sources);
    let dst = with_ends(targets);
    let mut points = vec![(Dyadic::zero(), Dyadic::zero())];
    for i in 0..src.len() - 1 {
        let mut left = standard_partition(&src[i], &src[i + 1])?;
        let mut right = standard_partition(&dst[i], &dst[i + 1])?;
        let count = left.len().max(right.len());
        split_to(&mut left, count)?;
        split_to(&mut right, count)?;
        for (l, r) in left.iter().zip(&right).skip(1) {
            points.push((l.0.clone(), r.0.clone()));
        }
        points.push((src[i + 1].clone(), dst[i + 1].clone()));
    }
    PLMap::from_breakpoints(points)
}

/// `F = ⟨x₀, x₁⟩` acting on dyadic rationals of `[0, 1]`.
#[derive(Clone, Debug)]
pub struct ThompsonAction {
    x0: PLMap,
    x1: PLMap,
}

impl Default for ThompsonAction {
    fn default() -> Self {
        ThompsonAction { x0: x0(), x1: x1() }
    }
}

impl ThompsonAction {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn x0(&self) -> &PLMap {
        &self.x0
    }

    pub fn x1(&self) -> &PLMap {
        &self.x1
    }

    /// The orbit basepoint `1/2`.
    pub fn half() -> Dyadic {
        Dyadic::from_u64(1, 1)
    }
}

impl GroupAction for ThompsonAction {
    type Elem = PLMap;
    type Point = Dyadic;

    fn name(&self) -> String {
        "thompson".into()
    }
    fn identity(&self) -> PLMap {
        PLMap::identity()
    }
    fn generators(&self) -> Vec<(String, PLMap)> {
        vec![("x0".into(), self.x0.clone()), ("x1".into(), self.x1.clone())]
    }
    fn compose(&self, g: &PLMap, h: &PLMap) -> Result<PLMap> {
        g.compose(h)
    }
    fn invert(&self, g: &PLMap) -> PLMap {
        g.inverse()
    }
    fn act(&self, g: &PLMap, x: &Dyadic) -> Result<Dyadic> {
        g.eval(x)
    }
    fn parse_elem(&self, s: &str) -> Result<PLMap> {
        s.parse()
    }
    fn parse_point(&self, s: &str) -> Result<Dyadic> {
        s.parse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Dyadic {
        s.parse().unwrap()
    }

    #[test]
    fn generator_values() {
        assert_eq!(pl_eval(&x0(), &q("1/2")).unwrap(), q("1/4"));
        assert_eq!(pl_eval(&x1(), &q("1/4")).unwrap(), q("1/4"));
        assert_eq!(pl_eval(&x0(), &q("31/32")).unwrap(), q("15/16"));
        assert_eq!(pl_eval(&x1(), &q("3/4")).unwrap(), q("5/8"));
        assert_eq!(x0().slopes_log2(), vec![-1, 0, 1]);
        assert_eq!(x1().slopes_log2(), vec![0, -1, 0, 1]);
    }

    #[test]
    fn compose_examples() {
        assert!(pl_compose(&x0(), &pl_invert(&x0())).unwrap().is_identity());
        let sq = pl_compose(&x0(), &x0()).unwrap();
        assert_eq!(pl_eval(&sq, &q("7/8")).unwrap(), q("1/2"));
        assert_eq!(pl_compose(&PLMap::identity(), &x1()).unwrap(), x1());
    }

    #[test]
    fn invert_examples() {
        assert!(pl_invert(&PLMap::identity()).is_identity());
        assert_eq!(pl_eval(&pl_invert(&x0()), &q("1/4")).unwrap(), q("1/2"));
        assert_eq!(pl_invert(&pl_invert(&x1())), x1());
    }

    #[test]
    fn text_form_round_trips() {
        let text = "0/1:0/1; 1/2:1/4; 3/4:1/2; 1/1:1/1";
        assert_eq!(x0().to_string(), text);
        assert_eq!(text.parse::<PLMap>().unwrap(), x0());
    }

    #[test]
    fn collinear_points_are_removed() {
        let g: PLMap = "0/1:0/1; 1/4:1/4; 1/2:1/2; 1/1:1/1".parse().unwrap();
        assert!(g.is_identity());
    }

    #[test]
    fn invalid_maps_are_rejected() {
        assert!("0/1:0/1; 1/2:3/8; 1/1:1/1".parse::<PLMap>().is_err());
        assert!("0/1:0/1; 1/2:1/2".parse::<PLMap>().is_err());
        assert!("0/1:0/1; 1/2:1/1; 1/1:1/1".parse::<PLMap>().is_err());
    }

    #[test]
    fn map_tuple_examples() {
        assert!(map_tuple(&[q("1/2")], &[q("1/2")]).unwrap().is_identity());
        assert_eq!(map_tuple(&[q("1/2")], &[q("1/4")]).unwrap(), x0());
        let g = map_tuple(&[q("1/4"), q("1/2")], &[q("1/2"), q("3/4")]).unwrap();
        assert_eq!(pl_eval(&g, &q("1/4")).unwrap(), q("1/2"));
        assert_eq!(pl_eval(&g, &q("1/2")).unwrap(), q("3/4"));
        let y = pl_eval(&g, &q("3/4")).unwrap();
        assert!(y > q("3/4") && y < Dyadic::one());
    }

    #[test]
    fn map_tuple_errors() {
        assert!(matches!(map_tuple(&[q("1/2")], &[]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(map_tuple(&[q("1/2"), q("1/4")], &[q("1/4"), q("1/2")]), Err(Error::NotIncreasing(_))));
        assert!(matches!(map_tuple(&[Dyadic::zero()], &[q("1/2")]), Err(Error::NotIncreasing(_))));
    }

    #[test]
    fn standard_partition_is_minimal() {
        let leaves = standard_partition(&q("1/4"), &Dyadic::one()).unwrap();
        assert_eq!(leaves, vec![(q("1/4"), 2), (q("1/2"), 1)]);
        let leaves = standard_partition(&q("3/8"), &q("7/8")).unwrap();
        assert_eq!(leaves, vec![(q("3/8"), 3), (q("1/2"), 2), (q("3/4"), 3)]);
    }

    #[test]
    fn hair_positions() {
        assert_eq!(hair_position(&q("3/4")), Some(2));
        assert_eq!(hair_position(&q("15/16")), Some(4));
        assert_eq!(hair_position(&q("5/8")), None);
        assert_eq!(hair_position(&q("1/2")), None);
    }

    #[test]
    fn x0_translates_the_hair() {
        for m in 2..=40u32 {
            let t = Dyadic::one_minus_pow2(m).unwrap();
            let image = pl_eval(&x0(), &t).unwrap();
            assert_eq!(image, Dyadic::one_minus_pow2(m - 1).unwrap());
        }
    }
}
