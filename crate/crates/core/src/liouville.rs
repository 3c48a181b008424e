//! Scheduling and assembly of the infinitely supported step measure from a
//! coupling family, and verification of its total-variation bound at finite
//! truncation level.
//!
//! Index `0` of every family is the base measure `ν₀`, uniform on `S ∪ S⁻¹`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::One;

use crate::error::{Error, Result};
use crate::groups::GroupAction;
use crate::measures::{step_with, tv, GroupMeasure, Kernel, OrbitDist, StepOptions};
use crate::numerics::{ExactWeight, Weight};

/// `c_j = (1 − ρ) ρ^j` for `j = 0..count`.
pub fn geometric_weights(ratio: &ExactWeight, count: usize) -> Result<Vec<ExactWeight>> {
    if ratio.is_zero() || ratio.as_ratio() >= &num_rational::Ratio::one() {
        return Err(Error::InvalidWeight(format!("geometric ratio {ratio} must lie in (0, 1)")));
    }
    let head = ratio.complement()?;
    Ok((0..count).map(|j| head.mul(&ratio.pow(j as u32))).collect())
}

fn partial_sum(c: &[ExactWeight], upto: usize) -> ExactWeight {
    let mut s = ExactWeight::zero();
    for w in &c[..upto] {
        s.add_assign(w);
    }
    s
}

/// Smallest `m ≥ 1` with `(c₀ + … + c_{j−1})^m ≤ 1/j`.
pub fn select_m(c: &[ExactWeight], j: usize) -> Result<u32> {
    if j == 0 || j > c.len() {
        return Err(Error::Config(format!("scale {j} needs weights c_0..c_{}", j.saturating_sub(1))));
    }
    let s = partial_sum(c, j);
    if s >= ExactWeight::one() {
        return Err(Error::InvalidWeight(format!("partial sum {s} is not below 1")));
    }
    let target = ExactWeight::ratio(1, j as u64);
    let mut power = s.clone();
    let mut m = 1u32;
    while power > target {
        power = power.mul(&s);
        m += 1;
    }
    Ok(m)
}

/// The numeric data a schedule needs from a coupling family.
pub trait FamilyScales {
    /// Indices `0..len()` are available.
    fn len(&self) -> usize;
    /// `r_n`: radius of the largest basepoint ball inside `K_n`.
    fn inradius(&self, n: usize) -> Result<u64>;
    fn eps(&self, n: usize) -> Result<ExactWeight>;
    /// Displacement bound of one `ν_n` step.
    fn radius(&self, n: usize) -> Result<u64>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Least `n > prev_n` with `m·R ≤ r_n` and `m·R·ε_n ≤ 1/j`, where `R = prev_radius`.
pub fn select_n<F: FamilyScales + ?Sized>(family: &F, m: u32, prev_radius: u64, prev_n: usize, j: usize) -> Result<usize> {
    let reach = m as u64 * prev_radius;
    let limit = ExactWeight::ratio(1, j as u64);
    let scale = ExactWeight::ratio(reach, 1);
    for n in prev_n + 1..family.len() {
        if family.inradius(n)? < reach {
            continue;
        }
        if scale.mul(&family.eps(n)?) <= limit {
            return Ok(n);
        }
    }
    Err(Error::FamilyExhausted { j })
}

/// One scale of a schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaleRow {
    pub j: usize,
    pub n: usize,
    pub m: u32,
    pub c: ExactWeight,
    pub c_renorm: ExactWeight,
    pub eps: ExactWeight,
    /// Displacement bound of the previous scale.
    pub prev_radius: u64,
    pub inradius: u64,
    /// `2 (Σ_{i<j} c'_i)^m + 2 (m − 1) R ε`.
    pub bound: ExactWeight,
    /// `3 / j`, for comparison.
    pub nominal: ExactWeight,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    /// `c_0..c_J`.
    pub weights: Vec<ExactWeight>,
    /// `c'_j = c_j / Σ_{i≤J} c_i`.
    pub renormalized: Vec<ExactWeight>,
    pub rows: Vec<ScaleRow>,
}

impl Schedule {
    pub fn truncation(&self) -> usize {
        self.rows.len()
    }

    /// Family indices `n_0 = 0, n_1, …, n_J`.
    pub fn indices(&self) -> Vec<usize> {
        std::iter::once(0).chain(self.rows.iter().map(|r| r.n)).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("j,n_j,m_j,c_j,c'_j,eps_n_j,radius_n_prev,r_n_j,bound,nominal\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                r.j, r.n, r.m, r.c, r.c_renorm, r.eps, r.prev_radius, r.inradius, r.bound, r.nominal
            );
        }
        s
    }
}

pub fn renormalize(weights: &[ExactWeight]) -> Result<Vec<ExactWeight>> {
    let sum = partial_sum(weights, weights.len());
    if sum.is_zero() {
        return Err(Error::InvalidWeight("weights sum to zero".into()));
    }
    weights.iter().map(|w| w.div(&sum)).collect()
}

/// `2 (Σ_{i<j} c'_i)^m + 2 (m − 1) R ε`.
pub fn scale_bound(renormalized: &[ExactWeight], j: usize, m: u32, prev_radius: u64, eps: &ExactWeight) -> ExactWeight {
    let head = partial_sum(renormalized, j).pow(m);
    let two = ExactWeight::ratio(2, 1);
    let tail = ExactWeight::ratio(2 * (m as u64 - 1) * prev_radius, 1).mul(eps);
    two.mul(&head).add(&tail)
}

/// Schedule with prescribed indices `n_1..n_J`; powers come from [`select_m`].
pub fn schedule_with_indices<F: FamilyScales + ?Sized>(
    family: &F,
    weights: &[ExactWeight],
    indices: &[usize],
) -> Result<Schedule> {
    let truncation = indices.len();
    if weights.len() < truncation + 1 {
        return Err(Error::Config(format!("need {} weights, got {}", truncation + 1, weights.len())));
    }
    let weights = weights[..=truncation].to_vec();
    let renormalized = renormalize(&weights)?;
    let mut rows = Vec::with_capacity(truncation);
    let mut prev_n = 0;
    let mut prev_m = 0;
    for (idx, &n) in indices.iter().enumerate() {
        let j = idx + 1;
        if n <= prev_n {
            return Err(Error::Config(format!("indices must increase strictly: n_{j} = {n}")));
        }
        let m = select_m(&weights, j)?;
        debug_assert!(m >= prev_m);
        let prev_radius = family.radius(prev_n)?;
        let eps = family.eps(n)?;
        rows.push(ScaleRow {
            j,
            n,
            m,
            c: weights[j].clone(),
            c_renorm: renormalized[j].clone(),
            bound: scale_bound(&renormalized, j, m, prev_radius, &eps),
            eps,
            prev_radius,
            inradius: family.inradius(n)?,
            nominal: ExactWeight::ratio(3, j as u64),
        });
        prev_n = n;
        prev_m = m;
    }
    Ok(Schedule { weights, renormalized, rows })
}

/// Selects `m_j` and `n_j` for `j = 1..=truncation`.
pub fn build_schedule<F: FamilyScales + ?Sized>(family: &F, weights: &[ExactWeight], truncation: usize) -> Result<Schedule> {
    if weights.len() < truncation + 1 {
        return Err(Error::Config(format!("need {} weights, got {}", truncation + 1, weights.len())));
    }
    let mut indices = Vec::with_capacity(truncation);
    let mut prev_n = 0;
    for j in 1..=truncation {
        let m = select_m(weights, j)?;
        let n = select_n(family, m, family.radius(prev_n)?, prev_n, j)?;
        indices.push(n);
        prev_n = n;
    }
    schedule_with_indices(family, weights, &indices)
}

/// A scale whose index could not be selected.
#[derive(Clone, Debug, PartialEq)]
pub struct PendingScale {
    pub j: usize,
    pub m: u32,
    pub c: ExactWeight,
}

/// The schedulable prefix of a requested truncation, with the scales left over.
#[derive(Clone, Debug)]
pub struct SchedulePlan {
    pub requested: usize,
    /// Renormalized over the schedulable prefix only.
    pub schedule: Schedule,
    pub pending: Vec<PendingScale>,
    pub failure: Option<String>,
}

impl SchedulePlan {
    pub fn is_complete(&self) -> bool {
        self.pending.is_empty()
    }

    /// Schedule rows followed by pending scales with their index-dependent fields empty.
    pub fn to_csv(&self) -> String {
        let mut s = self.schedule.to_csv();
        for p in &self.pending {
            let _ = writeln!(s, "{},,{},{},,,,,,{}", p.j, p.m, p.c, ExactWeight::ratio(3, p.j as u64));
        }
        s
    }
}

/// Like [`build_schedule`], but stops at the first scale the family cannot serve
/// and records why.
pub fn plan_schedule<F: FamilyScales + ?Sized>(family: &F, weights: &[ExactWeight], truncation: usize) -> Result<SchedulePlan> {
    if weights.len() < truncation + 1 {
        return Err(Error::Config(format!("need {} weights, got {}", truncation + 1, weights.len())));
    }
    let mut indices = Vec::new();
    let mut failure = None;
    let mut prev_n = 0;
    for j in 1..=truncation {
        let m = select_m(weights, j)?;
        let attempt = family.radius(prev_n).and_then(|r| select_n(family, m, r, prev_n, j).map(|n| (n, r)));
        match attempt {
            Ok((n, _)) => {
                indices.push(n);
                prev_n = n;
            }
            Err(e) => {
                let detail = match (&e, family.radius(prev_n)) {
                    (Error::FamilyExhausted { .. }, Ok(r)) => format!(
                        "scale {j}: needs r_n >= {reach} and eps_n <= 1/{limit} beyond the largest index {last}",
                        reach = m as u64 * r,
                        limit = j as u64 * m as u64 * r,
                        last = family.len().saturating_sub(1)
                    ),
                    _ => format!("scale {j}: {e}"),
                };
                failure = Some(detail);
                break;
            }
        }
    }
    let schedule = schedule_with_indices(family, weights, &indices)?;
    let pending = (indices.len() + 1..=truncation)
        .map(|j| Ok(PendingScale { j, m: select_m(weights, j)?, c: weights[j].clone() }))
        .collect::<Result<Vec<_>>>()?;
    Ok(SchedulePlan { requested: truncation, schedule, pending, failure })
}

/// A family step measure in a form suited to its size.
#[derive(Clone, Debug)]
pub enum StepMeasure<E: Ord> {
    Explicit(GroupMeasure<E, ExactWeight>),
    /// Uniform on `{hᵏ : |k| ≤ half_width}`.
    Window { h: E, h_inv: E, half_width: u64 },
    /// Uniform on all `2^len` products of the given commuting involutions.
    Cube { involutions: Vec<E> },
}

impl<E: Ord + Clone> StepMeasure<E> {
    /// Number of group elements in the support, saturating.
    pub fn support_len(&self) -> u128 {
        match self {
            StepMeasure::Explicit(mu) => mu.len() as u128,
            StepMeasure::Window { half_width, .. } => 2 * *half_width as u128 + 1,
            StepMeasure::Cube { involutions } => 1u128.checked_shl(involutions.len() as u32).unwrap_or(u128::MAX),
        }
    }

    pub fn materialize<A>(&self, action: &A, support_limit: usize) -> Result<GroupMeasure<E, ExactWeight>>
    where
        A: GroupAction<Elem = E>,
    {
        let len = self.support_len();
        if len > support_limit as u128 {
            return Err(Error::SupportLimit { size: len.min(usize::MAX as u128) as usize, limit: support_limit });
        }
        match self {
            StepMeasure::Explicit(mu) => Ok(mu.clone()),
            StepMeasure::Window { h, h_inv, half_width } => {
                let mut elems = vec![action.identity()];
                for g in [h, h_inv] {
                    let mut p = action.identity();
                    for _ in 0..*half_width {
                        p = action.compose(g, &p)?;
                        elems.push(p.clone());
                    }
                }
                GroupMeasure::uniform(elems)
            }
            StepMeasure::Cube { involutions } => {
                let mut elems = vec![action.identity()];
                for s in involutions {
                    let more = elems.iter().map(|e| action.compose(s, e)).collect::<Result<Vec<_>>>()?;
                    elems.extend(more);
                }
                GroupMeasure::uniform(elems)
            }
        }
    }

    fn add_to_kernel<A, W>(&self, kernel: &mut Kernel<E, W>, c: &ExactWeight, action: &A, support_limit: usize) -> Result<()>
    where
        A: GroupAction<Elem = E>,
        W: Weight,
    {
        let c = W::from_exact(c);
        match self {
            StepMeasure::Window { h, h_inv, half_width } => kernel.add_window(&c, h.clone(), h_inv.clone(), *half_width),
            other => {
                let mu = other.materialize(action, support_limit)?;
                let mu = GroupMeasure::from_pairs(mu.iter().map(|(e, w)| (e.clone(), W::from_exact(w))))?;
                kernel.add_measure(&c, &mu);
            }
        }
        Ok(())
    }
}

/// Everything an assembled measure needs from its family.
pub trait CouplingFamily: FamilyScales {
    type Action: GroupAction;

    fn action(&self) -> &Self::Action;
    fn basepoint(&self) -> <Self::Action as GroupAction>::Point;
    fn measure(&self, n: usize) -> Result<StepMeasure<<Self::Action as GroupAction>::Elem>>;
    /// Membership in `K_n`.
    fn contains(&self, n: usize, x: &<Self::Action as GroupAction>::Point) -> Result<bool>;
    /// Recomputes the largest neighbor distance `tv(ν_n·x, ν_n·y)` over `K_n`.
    fn certify(&self, n: usize) -> Result<ExactWeight>;
}

/// `Σ_{j≤J} c'_j ζ_j` kept as its components.
#[derive(Clone, Debug)]
pub struct Assembled<E: Ord> {
    pub parts: Vec<(ExactWeight, StepMeasure<E>)>,
}

impl<E: Ord + Clone> Assembled<E> {
    /// Kernel of `Σ_{j<upto} c'_j ζ_j`; sub-stochastic when `upto` is below the truncation.
    pub fn kernel<A, W>(&self, action: &A, upto: usize, support_limit: usize) -> Result<Kernel<E, W>>
    where
        A: GroupAction<Elem = E>,
        W: Weight,
    {
        let mut k = Kernel::empty();
        for (c, part) in self.parts.iter().take(upto) {
            part.add_to_kernel(&mut k, c, action, support_limit)?;
        }
        Ok(k)
    }

    pub fn materialize<A>(&self, action: &A, support_limit: usize) -> Result<GroupMeasure<E, ExactWeight>>
    where
        A: GroupAction<Elem = E>,
    {
        let parts = self
            .parts
            .iter()
            .map(|(c, p)| Ok((c.clone(), p.materialize(action, support_limit)?)))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<(ExactWeight, &GroupMeasure<E, ExactWeight>)> = parts.iter().map(|(c, m)| (c.clone(), m)).collect();
        let mu = GroupMeasure::mixture(&refs)?;
        if mu.len() > support_limit {
            return Err(Error::SupportLimit { size: mu.len(), limit: support_limit });
        }
        Ok(mu)
    }
}

/// Re-verifies each scheduled certificate and collects `c'_j ζ_j`.
pub fn assemble<F: CouplingFamily>(schedule: &Schedule, family: &F) -> Result<Assembled<<F::Action as GroupAction>::Elem>> {
    let mut parts = vec![(schedule.renormalized[0].clone(), family.measure(0)?)];
    for row in &schedule.rows {
        let worst = family.certify(row.n)?;
        if worst > row.eps {
            return Err(Error::Certificate(format!(
                "index {}: neighbor distance {worst} exceeds eps {}",
                row.n, row.eps
            )));
        }
        parts.push((row.c_renorm.clone(), family.measure(row.n)?));
    }
    Ok(Assembled { parts })
}

/// Distinct points `s·x ≠ x` for `s ∈ S ∪ S⁻¹`, sorted.
pub fn neighbors<A: GroupAction>(action: &A, x: &A::Point) -> Result<Vec<A::Point>> {
    let mut out = Vec::new();
    for (_, s) in action.symmetric_generators() {
        let y = action.act(&s, x)?;
        if &y != x {
            out.push(y);
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// One neighbor at one checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundCheck<W> {
    pub j: usize,
    pub m: u32,
    pub neighbor: String,
    pub tv: W,
    /// Distance carried by paths with at least one step from scale `j` or later.
    pub coupled_tv: W,
    /// Pruned mass of the two walks combined.
    pub pruned: f64,
    pub bound: ExactWeight,
    pub nominal: ExactWeight,
    /// The walks restricted to earlier scales stayed inside `K_{n_j}` at every step
    /// where a scale-`j` increment could still occur.
    pub contained: bool,
}

impl<W: Weight> BoundCheck<W> {
    /// `tv ≤ bound`, widened by twice the larger pruned mass in float mode.
    pub fn holds(&self) -> bool {
        if W::EXACT {
            self.tv <= W::from_exact(&self.bound)
        } else {
            self.tv.to_f64() <= self.bound.to_f64() + 2.0 * self.pruned
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayRow<W> {
    pub m: u32,
    pub neighbor: String,
    pub tv: W,
    pub support_x: usize,
    pub support_y: usize,
    pub pruned: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport<W> {
    pub checks: Vec<BoundCheck<W>>,
    /// Distance after every step, per neighbor, starting at step 0.
    pub decay: Vec<DecayRow<W>>,
}

impl<W: Weight> BoundReport<W> {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds() && c.contained)
    }

    /// Distances never increase from one step to the next, up to the pruned mass.
    pub fn contraction_holds(&self) -> bool {
        self.decay.windows(2).all(|w| {
            if w[0].neighbor != w[1].neighbor {
                return true;
            }
            if W::EXACT {
                w[1].tv <= w[0].tv
            } else {
                w[1].tv.to_f64() <= w[0].tv.to_f64() + w[1].pruned + 1e-12
            }
        })
    }

    /// Checkpoint distances are non-increasing in `j` for every neighbor.
    pub fn checkpoints_monotone(&self) -> bool {
        self.checks.windows(2).all(|w| {
            w[0].neighbor != w[1].neighbor || w[1].tv.to_f64() <= w[0].tv.to_f64() + w[1].pruned + 1e-12
        })
    }

    pub fn ensure(&self) -> Result<()> {
        for c in &self.checks {
            if !c.contained {
                return Err(Error::Containment { j: c.j, detail: format!("walks near {} leave K", c.neighbor) });
            }
            if !c.holds() {
                return Err(Error::BoundViolation {
                    j: c.j,
                    detail: format!("tv {} to {} exceeds {}", c.tv, c.neighbor, c.bound),
                });
            }
        }
        Ok(())
    }

    pub fn decay_csv(&self) -> String {
        let mut s = String::from("m,neighbor_key,tv,support_x,support_y,pruned_mass\n");
        for r in &self.decay {
            let _ = writeln!(s, "{},{},{},{},{},{:e}", r.m, r.neighbor, r.tv.to_csv(), r.support_x, r.support_y, r.pruned);
        }
        s
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub step: StepOptions,
    /// Cap on materialized family measures.
    pub measure_limit: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { step: StepOptions::default(), measure_limit: 1 << 16 }
    }
}

/// Walk of a sub-stochastic kernel; reports whether the supports before each step
/// stayed inside `K_n`.
fn low_walk<F, W>(
    family: &F,
    kernel: &Kernel<<F::Action as GroupAction>::Elem, W>,
    start: &<F::Action as GroupAction>::Point,
    steps: u32,
    n: usize,
    opts: &StepOptions,
) -> Result<(OrbitDist<<F::Action as GroupAction>::Point, W>, bool)>
where
    F: CouplingFamily,
    W: Weight,
{
    let mut d: OrbitDist<_, W> = OrbitDist::dirac(start.clone());
    let mut contained = true;
    for _ in 0..steps {
        for p in d.support() {
            if !family.contains(n, p)? {
                contained = false;
            }
        }
        d = step_with(&d, kernel, family.action(), opts)?;
    }
    Ok((d, contained))
}

/// Runs `μ^{(m_j)}·x` against `μ^{(m_j)}·y` for every neighbor `y` of `x` and
/// compares with the scale bounds.
///
/// The walks restricted to `ζ_0..ζ_{j−1}` are checked to stay inside `K_{n_j}`;
/// what remains of the full walks after removing them is the part carried by
/// paths with at least one step from scale `j` or later.
pub fn verify_bound<F, W>(
    assembled: &Assembled<<F::Action as GroupAction>::Elem>,
    schedule: &Schedule,
    family: &F,
    x: &<F::Action as GroupAction>::Point,
    opts: &VerifyOptions,
) -> Result<BoundReport<W>>
where
    F: CouplingFamily,
    W: Weight,
{
    let action = family.action();
    let full: Kernel<_, W> = assembled.kernel(action, assembled.parts.len(), opts.measure_limit)?;
    let horizon = schedule.rows.iter().map(|r| r.m).max().unwrap_or(0);
    let mut checks = Vec::new();
    let mut decay = Vec::new();
    for y in neighbors(action, x)? {
        let key = y.to_string();
        let mut dx: OrbitDist<_, W> = OrbitDist::dirac(x.clone());
        let mut dy: OrbitDist<_, W> = OrbitDist::dirac(y.clone());
        let mut kept = BTreeMap::new();
        for t in 0..=horizon {
            if t > 0 {
                dx = step_with(&dx, &full, action, &opts.step)?;
                dy = step_with(&dy, &full, action, &opts.step)?;
            }
            decay.push(DecayRow {
                m: t,
                neighbor: key.clone(),
                tv: tv(&dx, &dy),
                support_x: dx.len(),
                support_y: dy.len(),
                pruned: dx.pruned() + dy.pruned(),
            });
            if schedule.rows.iter().any(|r| r.m == t) {
                kept.insert(t, (dx.clone(), dy.clone()));
            }
        }
        for row in &schedule.rows {
            let low: Kernel<_, W> = assembled.kernel(action, row.j, opts.measure_limit)?;
            let (lx, cx) = low_walk(family, &low, x, row.m, row.n, &opts.step)?;
            let (ly, cy) = low_walk(family, &low, &y, row.m, row.n, &opts.step)?;
            let (fx, fy) = &kept[&row.m];
            checks.push(BoundCheck {
                j: row.j,
                m: row.m,
                neighbor: key.clone(),
                tv: tv(fx, fy),
                coupled_tv: tv(&fx.excess_over(&lx), &fy.excess_over(&ly)),
                pruned: fx.pruned() + fy.pruned(),
                bound: row.bound.clone(),
                nominal: row.nominal.clone(),
                contained: cx && cy,
            });
        }
    }
    Ok(BoundReport { checks, decay })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: u64, d: u64) -> ExactWeight {
        ExactWeight::ratio(n, d)
    }

    struct Synthetic {
        len: usize,
    }

    impl FamilyScales for Synthetic {
        fn len(&self) -> usize {
            self.len
        }
        fn inradius(&self, n: usize) -> Result<u64> {
            Ok(n as u64)
        }
        fn eps(&self, n: usize) -> Result<ExactWeight> {
            Ok(if n == 0 { q(2, 1) } else { q(1, n as u64) })
        }
        fn radius(&self, n: usize) -> Result<u64> {
            Ok(n as u64 + 1)
        }
    }

    struct ZeroEps;

    impl FamilyScales for ZeroEps {
        fn len(&self) -> usize {
            5000
        }
        fn inradius(&self, n: usize) -> Result<u64> {
            Ok(n as u64 + 1)
        }
        fn eps(&self, _: usize) -> Result<ExactWeight> {
            Ok(ExactWeight::zero())
        }
        fn radius(&self, n: usize) -> Result<u64> {
            Ok(6 * n as u64 + 1)
        }
    }

    // brute force straight from the definition, with floats far from the threshold
    fn brute_m(c: &[f64], j: usize) -> u32 {
        let s: f64 = c[..j].iter().sum();
        (1..200).find(|&m| s.powi(m as i32) <= 1.0 / j as f64).unwrap()
    }

    #[test]
    fn select_m_geometric() {
        let c = geometric_weights(&q(1, 2), 6).unwrap();
        assert_eq!(c[0], q(1, 2));
        assert_eq!(c[1], q(1, 4));
        let ms: Vec<u32> = (1..=3).map(|j| select_m(&c, j).unwrap()).collect();
        assert_eq!(ms, vec![1, 3, 9]);
        let cf: Vec<f64> = (0..6).map(|j| 0.5f64.powi(j + 1)).collect();
        for j in 1..=5 {
            assert_eq!(select_m(&c, j).unwrap(), brute_m(&cf, j));
        }
    }

    #[test]
    fn select_m_errors() {
        let c = vec![q(1, 1), q(0, 1)];
        assert!(select_m(&c, 1).is_err());
        assert!(select_m(&c, 0).is_err());
        assert!(select_m(&c, 5).is_err());
    }

    #[test]
    fn select_n_examples() {
        let fam = Synthetic { len: 100 };
        // m·R = 10, j = 2: least n ≥ 10 with 10/n ≤ 1/2
        assert_eq!(select_n(&fam, 2, 5, 3, 2).unwrap(), 20);
        assert_eq!(select_n(&fam, 1, 1, 4, 1).unwrap(), 5);
        assert!(matches!(select_n(&Synthetic { len: 15 }, 2, 5, 3, 2), Err(Error::FamilyExhausted { j: 2 })));
        assert_eq!(select_n(&ZeroEps, 3, 7, 1, 2).unwrap(), 20);
    }

    #[test]
    fn zero_eps_schedule() {
        let c = geometric_weights(&q(1, 2), 4).unwrap();
        let s = build_schedule(&ZeroEps, &c, 3).unwrap();
        assert_eq!(s.indices(), vec![0, 1, 20, 1088]);
        let ms: Vec<u32> = s.rows.iter().map(|r| r.m).collect();
        assert_eq!(ms, vec![1, 3, 9]);
        assert_eq!(s.renormalized, vec![q(8, 15), q(4, 15), q(2, 15), q(1, 15)]);
        // second term vanishes when eps = 0
        assert_eq!(s.rows[1].bound, q(2, 1).mul(&q(12, 15).pow(3)));
        assert_eq!(s.rows[0].bound, q(16, 15));
        let total = s.renormalized.iter().fold(ExactWeight::zero(), |a, w| a.add(w));
        assert_eq!(total, ExactWeight::one());
        assert!(s.to_csv().starts_with("j,n_j,m_j"));
        assert_eq!(s.to_csv().lines().nth(1).unwrap(), "1,1,1,1/4,4/15,0/1,1,2,16/15,3/1");
    }

    #[test]
    fn plan_reports_pending_scales() {
        let c = geometric_weights(&q(1, 2), 4).unwrap();
        let plan = plan_schedule(&Synthetic { len: 10 }, &c, 3).unwrap();
        assert_eq!(plan.schedule.truncation(), 1);
        assert_eq!(plan.pending.iter().map(|p| p.m).collect::<Vec<_>>(), vec![3, 9]);
        assert!(plan.failure.as_deref().unwrap().starts_with("scale 2"));
        let csv = plan.to_csv();
        assert_eq!(csv.lines().count(), 4);
        assert_eq!(csv.lines().nth(2).unwrap(), "2,,3,1/8,,,,,,3/2");
        let full = plan_schedule(&ZeroEps, &c, 3).unwrap();
        assert!(full.is_complete());
        assert_eq!(full.schedule, build_schedule(&ZeroEps, &c, 3).unwrap());
    }

    #[test]
    fn bound_second_term() {
        let c = vec![q(1, 2), q(1, 4), q(1, 8)];
        let r = renormalize(&c).unwrap();
        let b = scale_bound(&r, 2, 3, 5, &q(1, 100));
        let head = q(6, 7).pow(3);
        assert_eq!(b, q(2, 1).mul(&head).add(&q(20, 100)));
    }
}
