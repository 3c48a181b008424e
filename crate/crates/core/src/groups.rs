//! Groups acting on countable sets.
//!
//! [`GroupAction`] is the contract every walk, ball and measure in this crate is
//! written against. Elements and points are kept in canonical form, so their
//! derived `Eq`/`Ord`/`Hash` and their `Display` text serve as canonical keys.

use std::fmt;
use std::hash::Hash;

use crate::error::{Error, Result};

/// A group `G` with a finite generating set acting on the left on a set `X`.
///
/// Laws: `act(compose(g, h), x) == act(g, act(h, x))` and `act(identity, x) == x`.
pub trait GroupAction: Send + Sync {
    type Elem: Clone + Ord + Hash + Send + Sync + fmt::Debug + fmt::Display;
    type Point: Clone + Ord + Hash + Send + Sync + fmt::Debug + fmt::Display;

    fn name(&self) -> String;

    fn identity(&self) -> Self::Elem;

    /// The generating set `S` with labels. Inverses are formal: see [`Self::symmetric_generators`].
    fn generators(&self) -> Vec<(String, Self::Elem)>;

    /// `g ∘ h`; `h` acts first.
    fn compose(&self, g: &Self::Elem, h: &Self::Elem) -> Result<Self::Elem>;

    fn invert(&self, g: &Self::Elem) -> Self::Elem;

    fn act(&self, g: &Self::Elem, x: &Self::Point) -> Result<Self::Point>;

    fn parse_elem(&self, s: &str) -> Result<Self::Elem>;

    fn parse_point(&self, s: &str) -> Result<Self::Point>;

    fn inverse_label(&self, label: &str) -> String {
        format!("{label}^-1")
    }

    /// `S ∪ S⁻¹` without repeated elements, generators first.
    fn symmetric_generators(&self) -> Vec<(String, Self::Elem)> {
        let gens = self.generators();
        let mut out: Vec<(String, Self::Elem)> = Vec::with_capacity(2 * gens.len());
        for (label, g) in &gens {
            if !out.iter().any(|(_, h)| h == g) {
                out.push((label.clone(), g.clone()));
            }
        }
        for (label, g) in &gens {
            let inv = self.invert(g);
            if !out.iter().any(|(_, h)| *h == inv) {
                out.push((self.inverse_label(label), inv));
            }
        }
        out
    }

    fn elem_key(&self, g: &Self::Elem) -> String {
        g.to_string()
    }

    fn point_key(&self, x: &Self::Point) -> String {
        x.to_string()
    }
}

/// Compose a word given as a list of elements, rightmost acting first.
pub fn compose_all<A: GroupAction + ?Sized>(action: &A, word: &[A::Elem]) -> Result<A::Elem> {
    let mut acc = action.identity();
    for g in word {
        acc = action.compose(&acc, g)?;
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Free group of rank two
// ---------------------------------------------------------------------------

/// Letter of `F₂`: `1 = a`, `2 = b`, negative values are inverses.
pub type Letter = i8;

/// Freely reduced word over `{a, b, a⁻¹, b⁻¹}`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FreeWord(Vec<Letter>);

impl FreeWord {
    pub fn empty() -> Self {
        FreeWord(Vec::new())
    }

    /// Reduces the given letters.
    pub fn from_letters(letters: impl IntoIterator<Item = Letter>) -> Result<Self> {
        let mut out: Vec<Letter> = Vec::new();
        for l in letters {
            if !matches!(l, 1 | 2 | -1 | -2) {
                return Err(Error::Parse(format!("invalid free-group letter {l}")));
            }
            if out.last() == Some(&-l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Ok(FreeWord(out))
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> FreeWord {
        FreeWord(self.0.iter().rev().map(|l| -l).collect())
    }
}

/// Reduced concatenation `u·v`.
pub fn free_multiply(u: &FreeWord, v: &FreeWord) -> FreeWord {
    let mut out = u.0.clone();
    let mut rest = v.0.as_slice();
    while let (Some(&last), Some(&first)) = (out.last(), rest.first()) {
        if last != -first {
            break;
        }
        out.pop();
        rest = &rest[1..];
    }
    out.extend_from_slice(rest);
    FreeWord(out)
}

/// `|B(e, r)|` in the 4-regular tree.
pub fn ball_count_free(r: u32) -> u128 {
    2 * 3u128.pow(r) - 1
}

impl fmt::Display for FreeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("e");
        }
        for l in &self.0 {
            let c = match l {
                1 => 'a',
                2 => 'b',
                -1 => 'A',
                _ => 'B',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for FreeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl std::str::FromStr for FreeWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "e" || s.is_empty() {
            return Ok(FreeWord::empty());
        }
        let letters = s
            .chars()
            .map(|c| match c {
                'a' => Ok(1),
                'b' => Ok(2),
                'A' => Ok(-1),
                'B' => Ok(-2),
                _ => Err(Error::Parse(format!("invalid letter {c:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        FreeWord::from_letters(letters)
    }
}

/// `F₂` acting on itself by left multiplication; the Schreier graph is the Cayley graph.
#[derive(Clone, Debug, Default)]
pub struct FreeGroupAction;

impl GroupAction for FreeGroupAction {
    type Elem = FreeWord;
    type Point = FreeWord;

    fn name(&self) -> String {
        "free-group".into()
    }
    fn identity(&self) -> FreeWord {
        FreeWord::empty()
    }
    fn generators(&self) -> Vec<(String, FreeWord)> {
        vec![("a".into(), FreeWord(vec![1])), ("b".into(), FreeWord(vec![2]))]
    }
    fn compose(&self, g: &FreeWord, h: &FreeWord) -> Result<FreeWord> {
        Ok(free_multiply(g, h))
    }
    fn invert(&self, g: &FreeWord) -> FreeWord {
        g.inverse()
    }
    fn act(&self, g: &FreeWord, x: &FreeWord) -> Result<FreeWord> {
        Ok(free_multiply(g, x))
    }
    fn parse_elem(&self, s: &str) -> Result<FreeWord> {
        s.parse()
    }
    fn parse_point(&self, s: &str) -> Result<FreeWord> {
        s.parse()
    }
    fn inverse_label(&self, label: &str) -> String {
        label.to_uppercase()
    }
}

// ---------------------------------------------------------------------------
// Integers acting on themselves
// ---------------------------------------------------------------------------

/// `Z` acting on `Z` by translation, generated by `t = +1`.
#[derive(Clone, Debug, Default)]
pub struct IntegerAction;

impl GroupAction for IntegerAction {
    type Elem = i64;
    type Point = i64;

    fn name(&self) -> String {
        "integers".into()
    }
    fn identity(&self) -> i64 {
        0
    }
    fn generators(&self) -> Vec<(String, i64)> {
        vec![("t".into(), 1)]
    }
    fn compose(&self, g: &i64, h: &i64) -> Result<i64> {
        Ok(g + h)
    }
    fn invert(&self, g: &i64) -> i64 {
        -g
    }
    fn act(&self, g: &i64, x: &i64) -> Result<i64> {
        Ok(g + x)
    }
    fn parse_elem(&self, s: &str) -> Result<i64> {
        s.trim().parse().map_err(|_| Error::Parse(format!("bad integer {s:?}")))
    }
    fn parse_point(&self, s: &str) -> Result<i64> {
        self.parse_elem(s)
    }
}

// ---------------------------------------------------------------------------
// Lamplighter ⊕_X Z/2 ⋊ G acting on ⊕_X Z/2
// ---------------------------------------------------------------------------

/// Finite set of lit sites, sorted and duplicate free.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LampConfig<P>(Vec<P>);

impl<P: Ord + Clone> LampConfig<P> {
    pub fn empty() -> Self {
        LampConfig(Vec::new())
    }

    /// Sites listed more than once cancel in pairs (sum in `Z/2`).
    pub fn from_sites(sites: impl IntoIterator<Item = P>) -> Self {
        let mut v: Vec<P> = sites.into_iter().collect();
        v.sort();
        let mut out: Vec<P> = Vec::with_capacity(v.len());
        for p in v {
            if out.last() == Some(&p) {
                out.pop();
            } else {
                out.push(p);
            }
        }
        LampConfig(out)
    }

    pub fn single(p: P) -> Self {
        LampConfig(vec![p])
    }

    pub fn sites(&self) -> &[P] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, p: &P) -> bool {
        self.0.binary_search(p).is_ok()
    }

    /// Sum in `⊕ Z/2`.
    pub fn sym_diff(&self, other: &Self) -> Self {
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        LampConfig(out)
    }

    pub fn is_subset_of(&self, pred: impl Fn(&P) -> bool) -> bool {
        self.0.iter().all(pred)
    }
}

impl<P: fmt::Display> fmt::Display for LampConfig<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str("]")
    }
}

impl<P: fmt::Display> fmt::Debug for LampConfig<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Element `(g, a)` of `⊕_X Z/2 ⋊ G`, acting by `x ↦ a + g·x`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WreathElem<E, P> {
    pub base: E,
    pub lamps: LampConfig<P>,
}

impl<E: fmt::Display, P: fmt::Display> fmt::Display for WreathElem<E, P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({};{})", self.base, self.lamps)
    }
}

impl<E: fmt::Display, P: fmt::Display> fmt::Debug for WreathElem<E, P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// The lamplighter action over a base action `G ↷ X` with a marked site `o`.
///
/// Generators are `(s, 0)` for `s ∈ S_G` and `(e, δ_o)`.
#[derive(Clone, Debug)]
pub struct Lamplighter<B: GroupAction> {
    base: B,
    origin: B::Point,
}

impl<B: GroupAction> Lamplighter<B> {
    pub fn new(base: B, origin: B::Point) -> Self {
        Lamplighter { base, origin }
    }

    pub fn base(&self) -> &B {
        &self.base
    }

    pub fn origin(&self) -> &B::Point {
        &self.origin
    }

    /// `g·a`: permute lamp sites by a base element.
    pub fn permute(&self, g: &B::Elem, a: &LampConfig<B::Point>) -> Result<LampConfig<B::Point>> {
        let moved = a.sites().iter().map(|p| self.base.act(g, p)).collect::<Result<Vec<_>>>()?;
        Ok(LampConfig::from_sites(moved))
    }

    /// Pure lamp element `(e, a)`.
    pub fn lamp_elem(&self, a: LampConfig<B::Point>) -> WreathElem<B::Elem, B::Point> {
        WreathElem { base: self.base.identity(), lamps: a }
    }

    fn parse_config(&self, s: &str) -> Result<LampConfig<B::Point>> {
        let s = s.trim();
        let inner = s
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| Error::Parse(format!("lamp config must be bracketed: {s:?}")))?;
        let sites = inner
            .split([' ', ','])
            .filter(|t| !t.trim().is_empty())
            .map(|t| self.base.parse_point(t))
            .collect::<Result<Vec<_>>>()?;
        Ok(LampConfig::from_sites(sites))
    }
}

/// `(g, a)·x = a + g·x`.
pub fn wreath_act<B: GroupAction>(
    lamplighter: &Lamplighter<B>,
    elem: &WreathElem<B::Elem, B::Point>,
    x: &LampConfig<B::Point>,
) -> Result<LampConfig<B::Point>> {
    Ok(elem.lamps.sym_diff(&lamplighter.permute(&elem.base, x)?))
}

impl<B: GroupAction> GroupAction for Lamplighter<B> {
    type Elem = WreathElem<B::Elem, B::Point>;
    type Point = LampConfig<B::Point>;

    fn name(&self) -> String {
        format!("lamplighter-{}", self.base.name())
    }

    fn identity(&self) -> Self::Elem {
        WreathElem { base: self.base.identity(), lamps: LampConfig::empty() }
    }

    fn generators(&self) -> Vec<(String, Self::Elem)> {
        let mut gens: Vec<(String, Self::Elem)> = self
            .base
            .generators()
            .into_iter()
            .map(|(l, s)| (l, WreathElem { base: s, lamps: LampConfig::empty() }))
            .collect();
        gens.push(("flip".into(), self.lamp_elem(LampConfig::single(self.origin.clone()))));
        gens
    }

    // (g,a)(h,b) = (gh, a + g·b)
    fn compose(&self, g: &Self::Elem, h: &Self::Elem) -> Result<Self::Elem> {
        Ok(WreathElem {
            base: self.base.compose(&g.base, &h.base)?,
            lamps: g.lamps.sym_diff(&self.permute(&g.base, &h.lamps)?),
        })
    }

    // (g,a)⁻¹ = (g⁻¹, g⁻¹·a)
    fn invert(&self, g: &Self::Elem) -> Self::Elem {
        let inv = self.base.invert(&g.base);
        let lamps = self.permute(&inv, &g.lamps).expect("base action on lamp sites");
        WreathElem { base: inv, lamps }
    }

    fn act(&self, g: &Self::Elem, x: &Self::Point) -> Result<Self::Point> {
        wreath_act(self, g, x)
    }

    fn parse_elem(&self, s: &str) -> Result<Self::Elem> {
        let s = s.trim();
        let inner = s
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::Parse(format!("wreath element must be parenthesized: {s:?}")))?;
        let (g, a) = inner
            .split_once(';')
            .ok_or_else(|| Error::Parse(format!("wreath element needs `g;[...]`: {s:?}")))?;
        Ok(WreathElem { base: self.base.parse_elem(g)?, lamps: self.parse_config(a)? })
    }

    fn parse_point(&self, s: &str) -> Result<Self::Point> {
        self.parse_config(s)
    }

    fn inverse_label(&self, label: &str) -> String {
        self.base.inverse_label(label)
    }
}
