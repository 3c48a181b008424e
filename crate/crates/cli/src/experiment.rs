//! Experiment runs: schedule, assembled walk, bound checks and artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use schreier_liouville::constructions::{base_measure, cylinder_verify, LamplighterFamily, ThompsonFamily};
use schreier_liouville::groups::{FreeGroupAction, FreeWord, GroupAction, IntegerAction, LampConfig, Lamplighter};
use schreier_liouville::liouville::{
    assemble, geometric_weights, verify_bound, BoundCheck, neighbors, plan_schedule, select_m, BoundReport, CouplingFamily, DecayRow, FamilyScales,
    PendingScale, SchedulePlan, VerifyOptions,
};
use schreier_liouville::measures::{lazify, step_with, tv, with_workers, Kernel, OrbitDist, StepOptions};
use schreier_liouville::numerics::{ExactWeight, Weight};
use schreier_liouville::schreier::{cheeger, orbit_ball};
use schreier_liouville::thompson::ThompsonAction;
use schreier_liouville::{Error, Result};

use crate::config::{Config, GroupKind, Mode, Preset};
use crate::svg;

/// Band tolerance used in `cheeger.csv`.
pub const CHEEGER_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct Outcome {
    /// Every scheduled bound held and every walk stayed contained.
    pub bounds_hold: bool,
    /// All requested scales were scheduled.
    pub complete: bool,
    /// Report-only run; nothing asserted.
    pub report_only: bool,
    pub summary: String,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.report_only || (self.bounds_hold && self.complete)
    }
}

/// Runs the configured experiment and writes its artifacts into `out`.
pub fn run(cfg: &Config, out: &Path) -> Result<Outcome> {
    fs::create_dir_all(out)?;
    fs::write(out.join("manifest.txt"), cfg.manifest())?;
    let cfg = cfg.clone();
    let out = out.to_path_buf();
    with_workers(cfg.workers, move || run_inner(&cfg, &out))?
}

fn run_inner(cfg: &Config, out: &Path) -> Result<Outcome> {
    let outcome = match (cfg.preset, cfg.group) {
        (Preset::Contrast, GroupKind::Thompson) => contrast(cfg, &ThompsonAction::new(), ThompsonAction::half(), out)?,
        (Preset::Contrast, GroupKind::LamplighterZ) => {
            contrast(cfg, &Lamplighter::new(IntegerAction, 0), LampConfig::empty(), out)?
        }
        (Preset::Contrast, GroupKind::LamplighterF2) => {
            contrast(cfg, &Lamplighter::new(FreeGroupAction, FreeWord::empty()), LampConfig::empty(), out)?
        }
        (Preset::Standard, GroupKind::Thompson) => thompson(cfg, out)?,
        (Preset::Standard, GroupKind::LamplighterZ) => {
            let family = LamplighterFamily::new(IntegerAction, 0, cfg.n_grid)?;
            lamplighter(cfg, &family, out)?
        }
        (Preset::Standard, GroupKind::LamplighterF2) => {
            let family = LamplighterFamily::new(FreeGroupAction, FreeWord::empty(), cfg.n_grid)?;
            lamplighter(cfg, &family, out)?
        }
    };
    fs::write(out.join("report.txt"), &outcome.summary)?;
    Ok(outcome)
}

/// Schedules as many scales as the family and the horizon allow.
pub fn plan<F: FamilyScales>(cfg: &Config, family: &F) -> Result<SchedulePlan> {
    if cfg.truncation == 0 {
        return Err(Error::Config("J must be at least 1".into()));
    }
    let weights = geometric_weights(&cfg.ratio, cfg.truncation + 1)?;
    let mut within = cfg.truncation;
    for j in 1..=cfg.truncation {
        if select_m(&weights, j)? > cfg.horizon {
            within = j - 1;
            break;
        }
    }
    let mut plan = plan_schedule(family, &weights, within)?;
    if within < cfg.truncation {
        for j in within + 1..=cfg.truncation {
            plan.pending.push(PendingScale { j, m: select_m(&weights, j)?, c: weights[j].clone() });
        }
        if plan.failure.is_none() {
            plan.failure = Some(format!("scale {}: m_j exceeds the horizon {}", within + 1, cfg.horizon));
        }
        plan.requested = cfg.truncation;
    }
    Ok(plan)
}

fn parse_basepoint<A: GroupAction>(cfg: &Config, action: &A, default: A::Point) -> Result<A::Point> {
    match &cfg.basepoint {
        Some(s) => action.parse_point(s).map_err(|e| Error::Config(format!("basepoint: {e}"))),
        None => Ok(default),
    }
}

fn thompson(cfg: &Config, out: &Path) -> Result<Outcome> {
    let family = ThompsonFamily::new(cfg.n_grid)?;
    let x = parse_basepoint(cfg, family.action(), family.basepoint())?;
    let plan = plan(cfg, &family)?;
    let opts = VerifyOptions {
        step: StepOptions { prune: cfg.prune, ..StepOptions::default() },
        ..VerifyOptions::default()
    };
    let assembled = assemble(&plan.schedule, &family)?;
    let (checks, decay_csv, series) = match cfg.mode {
        Mode::Exact => {
            let r = verify_bound::<_, ExactWeight>(&assembled, &plan.schedule, &family, &x, &opts)?;
            (check_lines(&r), r.decay_csv(), series(&r.decay))
        }
        Mode::Float => {
            let r = verify_bound::<_, f64>(&assembled, &plan.schedule, &family, &x, &opts)?;
            (check_lines(&r), r.decay_csv(), series(&r.decay))
        }
    };
    finish(cfg, out, family.action(), &x, &plan, checks, decay_csv, series)
}

fn lamplighter<B>(cfg: &Config, family: &LamplighterFamily<B>, out: &Path) -> Result<Outcome>
where
    B: GroupAction + Clone,
{
    let x = parse_basepoint(cfg, family.action(), family.basepoint())?;
    let plan = plan(cfg, family)?;
    let assembled = assemble(&plan.schedule, family)?;
    let exact = cylinder_verify(&assembled, &plan.schedule, family, &x)?;
    let (checks, decay_csv, series) = match cfg.mode {
        Mode::Exact => (check_lines(&exact), exact.decay_csv(), series(&exact.decay)),
        Mode::Float => {
            let r = to_float(&exact);
            (check_lines(&r), r.decay_csv(), series(&r.decay))
        }
    };
    finish(cfg, out, family.action(), &x, &plan, checks, decay_csv, series)
}

fn to_float(r: &BoundReport<ExactWeight>) -> BoundReport<f64> {
    BoundReport {
        checks: r
            .checks
            .iter()
            .map(|c| BoundCheck {
                j: c.j,
                m: c.m,
                neighbor: c.neighbor.clone(),
                tv: c.tv.to_f64(),
                coupled_tv: c.coupled_tv.to_f64(),
                pruned: c.pruned,
                bound: c.bound.clone(),
                nominal: c.nominal.clone(),
                contained: c.contained,
            })
            .collect(),
        decay: r
            .decay
            .iter()
            .map(|d| DecayRow {
                m: d.m,
                neighbor: d.neighbor.clone(),
                tv: d.tv.to_f64(),
                support_x: d.support_x,
                support_y: d.support_y,
                pruned: d.pruned,
            })
            .collect(),
    }
}

struct Checks {
    lines: String,
    hold: bool,
    contraction: bool,
}

fn check_lines<W: Weight>(r: &BoundReport<W>) -> Checks {
    let mut lines = String::new();
    for c in &r.checks {
        let _ = writeln!(
            lines,
            "j={} m={} neighbor={} tv={} coupled_tv={} bound={} nominal={} pruned={:e} contained={} holds={}",
            c.j,
            c.m,
            c.neighbor,
            c.tv.to_csv(),
            c.coupled_tv.to_csv(),
            c.bound,
            c.nominal,
            c.pruned,
            c.contained,
            c.holds()
        );
    }
    Checks { lines, hold: r.all_hold(), contraction: r.contraction_holds() && r.checkpoints_monotone() }
}

fn series<W: Weight>(decay: &[DecayRow<W>]) -> Vec<(String, Vec<(f64, f64)>)> {
    let mut out: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for d in decay {
        match out.last_mut() {
            Some((k, pts)) if *k == d.neighbor => pts.push((d.m as f64, d.tv.to_f64())),
            _ => out.push((d.neighbor.clone(), vec![(d.m as f64, d.tv.to_f64())])),
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn finish<A: GroupAction>(
    cfg: &Config,
    out: &Path,
    action: &A,
    x: &A::Point,
    plan: &SchedulePlan,
    checks: Checks,
    decay_csv: String,
    series: Vec<(String, Vec<(f64, f64)>)>,
) -> Result<Outcome> {
    fs::write(out.join("schedule.csv"), plan.to_csv())?;
    fs::write(out.join("tv_decay.csv"), decay_csv)?;
    fs::write(out.join("cheeger.csv"), cheeger_csv(action, x, cfg.cheeger_radius)?)?;
    if cfg.svg {
        fs::write(out.join("decay.svg"), svg::line_chart("tv distance by step", &series))?;
    }
    let mut summary = String::new();
    let _ = writeln!(summary, "group: {}", cfg.group.as_str());
    let _ = writeln!(summary, "scheduled: {} of {}", plan.schedule.truncation(), plan.requested);
    if let Some(f) = &plan.failure {
        let _ = writeln!(summary, "incomplete: {f}");
    }
    summary.push_str(&checks.lines);
    let _ = writeln!(summary, "bounds hold: {}", checks.hold);
    let _ = writeln!(summary, "contraction: {}", checks.contraction);
    Ok(Outcome { bounds_hold: checks.hold && checks.contraction, complete: plan.is_complete(), report_only: false, summary })
}

/// Lazy uniform walk on `S ∪ S⁻¹` for `horizon` steps from the basepoint and each neighbor.
fn contrast<A: GroupAction>(cfg: &Config, action: &A, default: A::Point, out: &Path) -> Result<Outcome> {
    let x = parse_basepoint(cfg, action, default)?;
    let nu = base_measure(action)?;
    let step = StepOptions { prune: cfg.prune, ..StepOptions::default() };
    let (decay_csv, series) = match cfg.mode {
        Mode::Exact => {
            let lazy = lazify(&nu, &ExactWeight::ratio(1, 2), action)?;
            let rows = lazy_decay(action, &Kernel::from_measure(&lazy), &x, cfg.horizon, &step)?;
            let r = BoundReport { checks: Vec::new(), decay: rows };
            (r.decay_csv(), series(&r.decay))
        }
        Mode::Float => {
            let lazy = lazify(&nu.to_float(), &0.5, action)?;
            let rows = lazy_decay(action, &Kernel::from_measure(&lazy), &x, cfg.horizon, &step)?;
            let r = BoundReport { checks: Vec::new(), decay: rows };
            (r.decay_csv(), series(&r.decay))
        }
    };
    fs::write(out.join("schedule.csv"), "j,n_j,m_j,c_j,c'_j,eps_n_j,radius_n_prev,r_n_j,bound,nominal\n")?;
    fs::write(out.join("tv_decay.csv"), decay_csv)?;
    fs::write(out.join("cheeger.csv"), cheeger_csv(action, &x, cfg.cheeger_radius)?)?;
    if cfg.svg {
        fs::write(out.join("decay.svg"), svg::line_chart("lazy walk tv distance by step", &series))?;
    }
    let summary = format!("group: {}\npreset: contrast\nsteps: {}\nreport only\n", cfg.group.as_str(), cfg.horizon);
    Ok(Outcome { bounds_hold: true, complete: true, report_only: true, summary })
}

fn lazy_decay<A: GroupAction, W: Weight>(
    action: &A,
    kernel: &Kernel<A::Elem, W>,
    x: &A::Point,
    steps: u32,
    opts: &StepOptions,
) -> Result<Vec<DecayRow<W>>> {
    let mut rows = Vec::new();
    for y in neighbors(action, x)? {
        let key = y.to_string();
        let mut dx: OrbitDist<A::Point, W> = OrbitDist::dirac(x.clone());
        let mut dy: OrbitDist<A::Point, W> = OrbitDist::dirac(y);
        for t in 0..=steps {
            if t > 0 {
                dx = step_with(&dx, kernel, action, opts)?;
                dy = step_with(&dy, kernel, action, opts)?;
            }
            rows.push(DecayRow {
                m: t,
                neighbor: key.clone(),
                tv: tv(&dx, &dy),
                support_x: dx.len(),
                support_y: dy.len(),
                pruned: dx.pruned() + dy.pruned(),
            });
        }
    }
    Ok(rows)
}

pub const CHEEGER_HEADER: &str = "graph,radius,vertices,degree_bound,exact_h,lambda1,spectral_lower,spectral_upper,band_holds\n";

/// Isoperimetric data of the balls `B(x, r)`, `r = 1..=radius`.
pub fn cheeger_csv<A: GroupAction>(action: &A, x: &A::Point, radius: u32) -> Result<String> {
    let mut s = String::from(CHEEGER_HEADER);
    for r in 1..=radius {
        let ball = orbit_ball(action, x, r)?;
        let rep = cheeger(&ball)?;
        let exact = rep.exact.map(|(b, k)| ExactWeight::ratio(b, k).to_string()).unwrap_or_default();
        let band = rep.band_holds(CHEEGER_TOLERANCE).map(|b| b.to_string()).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{:.12e},{:.12e},{:.12e},{}",
            action.name(),
            r,
            rep.vertices,
            rep.degree_bound,
            exact,
            rep.lambda1,
            rep.spectral_lower_bound(),
            rep.spectral_upper_bound(),
            band
        );
    }
    Ok(s)
}
