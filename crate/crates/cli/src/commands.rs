//! Subcommands other than `run` and `compare`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use schreier_liouville::constructions::{LamplighterFamily, ThompsonFamily};
use schreier_liouville::groups::{FreeGroupAction, FreeWord, GroupAction, IntegerAction, LampConfig, Lamplighter};
use schreier_liouville::liouville::CouplingFamily;
use schreier_liouville::measures::measure_to_csv;
use schreier_liouville::numerics::ExactWeight;
use schreier_liouville::schreier::{cheeger_graph, orbit_ball, SimpleGraph};
use schreier_liouville::thompson::ThompsonAction;
use schreier_liouville::{Error, Result};

use crate::config::Config;
use crate::experiment::{self, cheeger_csv, CHEEGER_HEADER, CHEEGER_TOLERANCE};

/// Family measures up to this support size are written out in full.
pub const MEASURE_EXPORT_LIMIT: usize = 4096;

/// Groups accepted by the graph subcommands.
pub const GRAPH_GROUPS: &str = "thompson, lamplighter-z, lamplighter-f2, free-group, integers";

fn point<A: GroupAction>(action: &A, basepoint: Option<&str>, default: A::Point) -> Result<A::Point> {
    basepoint.map_or(Ok(default), |s| action.parse_point(s).map_err(|e| Error::Config(format!("basepoint: {e}"))))
}

macro_rules! with_action {
    ($group:expr, $basepoint:expr, |$a:ident, $x:ident| $body:expr) => {
        match $group {
            "thompson" => {
                let $a = ThompsonAction::new();
                let $x = point(&$a, $basepoint, ThompsonAction::half())?;
                $body
            }
            "lamplighter-z" => {
                let $a = Lamplighter::new(IntegerAction, 0);
                let $x = point(&$a, $basepoint, LampConfig::empty())?;
                $body
            }
            "lamplighter-f2" => {
                let $a = Lamplighter::new(FreeGroupAction, FreeWord::empty());
                let $x = point(&$a, $basepoint, LampConfig::empty())?;
                $body
            }
            "free-group" => {
                let $a = FreeGroupAction;
                let $x = point(&$a, $basepoint, FreeWord::empty())?;
                $body
            }
            "integers" => {
                let $a = IntegerAction;
                let $x = point(&$a, $basepoint, 0)?;
                $body
            }
            g => Err(Error::Config(format!("unknown group {g:?}; expected one of {GRAPH_GROUPS}"))),
        }
    };
}

/// Writes `vertices.csv` and `edges.csv` for the Schreier ball `B(x, radius)`.
pub fn build_graph(group: &str, basepoint: Option<&str>, radius: u32, out: &Path) -> Result<usize> {
    fs::create_dir_all(out)?;
    with_action!(group, basepoint, |a, x| {
        let ball = orbit_ball(&a, &x, radius)?;
        let (edges, vertices) = ball.to_csv();
        fs::write(out.join("vertices.csv"), vertices)?;
        fs::write(out.join("edges.csv"), edges)?;
        Ok(ball.len())
    })
}

/// Writes `cheeger.csv`. Besides the groups, `cycle:N` and `complete:N` name the
/// cycle and complete graphs on `N` vertices.
pub fn cheeger_cmd(graph: &str, basepoint: Option<&str>, radius: u32, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    let named = |prefix: &str| graph.strip_prefix(prefix).map(|n| n.parse::<usize>());
    let text = if let Some(n) = named("cycle:") {
        let n = n.map_err(|_| Error::Config(format!("bad graph {graph:?}")))?;
        small_graph_csv(graph, &SimpleGraph::cycle(n))?
    } else if let Some(n) = named("complete:") {
        let n = n.map_err(|_| Error::Config(format!("bad graph {graph:?}")))?;
        small_graph_csv(graph, &SimpleGraph::complete(n))?
    } else {
        with_action!(graph, basepoint, |a, x| cheeger_csv(&a, &x, radius))?
    };
    fs::write(out.join("cheeger.csv"), text)?;
    Ok(())
}

fn small_graph_csv(name: &str, g: &SimpleGraph) -> Result<String> {
    let rep = cheeger_graph(g)?;
    let mut s = String::from(CHEEGER_HEADER);
    let _ = writeln!(
        s,
        "{},,{},{},{},{:.12e},{:.12e},{:.12e},{}",
        name,
        rep.vertices,
        rep.degree_bound,
        rep.exact.map(|(b, k)| ExactWeight::ratio(b, k).to_string()).unwrap_or_default(),
        rep.lambda1,
        rep.spectral_lower_bound(),
        rep.spectral_upper_bound(),
        rep.band_holds(CHEEGER_TOLERANCE).map(|b| b.to_string()).unwrap_or_default()
    );
    Ok(s)
}

/// Writes `family.csv` for indices `0..=upto`, with `measure_<n>.csv` for every
/// measure small enough to list.
/// Thompson displacements that escape `displacement_cap` are written as `>cap`.
pub fn make_family(group: &str, upto: usize, displacement_cap: u32, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    let grid = u32::try_from(upto).map_err(|_| Error::Config(format!("index {upto} too large")))?;
    match group {
        "thompson" => {
            let family = ThompsonFamily::new(grid)?.with_displacement_cap(displacement_cap);
            family_files(&family, upto, out, displacement_cap)
        }
        "lamplighter-z" => family_files(&LamplighterFamily::new(IntegerAction, 0, grid)?, upto, out, displacement_cap),
        "lamplighter-f2" => {
            family_files(&LamplighterFamily::new(FreeGroupAction, FreeWord::empty(), grid)?, upto, out, displacement_cap)
        }
        g => Err(Error::Config(format!("unknown family group {g:?}"))),
    }
}

fn family_files<F: CouplingFamily>(family: &F, upto: usize, out: &Path, cap: u32) -> Result<()> {
    let mut s = String::from("index,support_len,eps,radius,inradius,certificate\n");
    for n in 0..=upto {
        let measure = family.measure(n)?;
        let radius = match family.radius(n) {
            Ok(r) => r.to_string(),
            Err(Error::EscapedBall(_)) => format!(">{cap}"),
            Err(e) => return Err(e),
        };
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            n,
            measure.support_len(),
            family.eps(n)?,
            radius,
            family.inradius(n)?,
            family.certify(n)?
        );
        if measure.support_len() <= MEASURE_EXPORT_LIMIT as u128 {
            let mu = measure.materialize(family.action(), MEASURE_EXPORT_LIMIT)?;
            fs::write(out.join(format!("measure_{n}.csv")), measure_to_csv(&mu))?;
        }
    }
    fs::write(out.join("family.csv"), s)?;
    Ok(())
}

/// Writes `schedule.csv` for a config; returns whether every scale was scheduled.
pub fn schedule_cmd(cfg: &Config, out: &Path) -> Result<(bool, Option<String>)> {
    fs::create_dir_all(out)?;
    let plan = match cfg.group {
        crate::config::GroupKind::Thompson => experiment::plan(cfg, &ThompsonFamily::new(cfg.n_grid)?)?,
        crate::config::GroupKind::LamplighterZ => experiment::plan(cfg, &LamplighterFamily::new(IntegerAction, 0, cfg.n_grid)?)?,
        crate::config::GroupKind::LamplighterF2 => {
            experiment::plan(cfg, &LamplighterFamily::new(FreeGroupAction, FreeWord::empty(), cfg.n_grid)?)?
        }
    };
    fs::write(out.join("schedule.csv"), plan.to_csv())?;
    Ok((plan.is_complete(), plan.failure))
}
