//! Finite truncations of Schreier graphs and isoperimetric diagnostics.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::groups::GroupAction;

/// Ball `B(o, r)` in the Schreier graph of `S ∪ S⁻¹`, discovered by BFS.
///
/// Vertices are listed shell by shell, each shell sorted by canonical key, so
/// identical inputs produce identical vertex orders.
#[derive(Clone, Debug)]
pub struct SchreierBall<P> {
    basepoint: P,
    radius: u32,
    vertices: Vec<P>,
    index: HashMap<P, usize>,
    dist: Vec<u32>,
    labels: Vec<String>,
    edges: Vec<(usize, usize, usize)>,
}

/// BFS closure of `o` to depth `r`. Edges are recorded for every vertex, including
/// the outer shell, whenever the image lies inside the ball.
pub fn orbit_ball<A: GroupAction>(action: &A, o: &A::Point, r: u32) -> Result<SchreierBall<A::Point>> {
    let gens = action.symmetric_generators();
    let labels: Vec<String> = gens.iter().map(|(l, _)| l.clone()).collect();
    let mut vertices = vec![o.clone()];
    let mut index: HashMap<A::Point, usize> = HashMap::from([(o.clone(), 0)]);
    let mut dist = vec![0u32];
    let mut images: Vec<Vec<A::Point>> = Vec::new();
    let mut shell_start = 0;
    for d in 0..=r {
        let shell_end = vertices.len();
        let mut next: BTreeSet<A::Point> = BTreeSet::new();
        for v in shell_start..shell_end {
            let imgs = gens.iter().map(|(_, g)| action.act(g, &vertices[v])).collect::<Result<Vec<_>>>()?;
            if d < r {
                for y in &imgs {
                    if !index.contains_key(y) {
                        next.insert(y.clone());
                    }
                }
            }
            images.push(imgs);
        }
        for y in next {
            index.insert(y.clone(), vertices.len());
            vertices.push(y);
            dist.push(d + 1);
        }
        shell_start = shell_end;
    }
    let mut edges = Vec::new();
    for (v, imgs) in images.iter().enumerate() {
        for (label, y) in imgs.iter().enumerate() {
            if let Some(&w) = index.get(y) {
                edges.push((v, label, w));
            }
        }
    }
    Ok(SchreierBall { basepoint: o.clone(), radius: r, vertices, index, dist, labels, edges })
}

impl<P: Clone + Eq + Hash + std::fmt::Display> SchreierBall<P> {
    pub fn basepoint(&self) -> &P {
        &self.basepoint
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[P] {
        &self.vertices
    }

    pub fn contains(&self, p: &P) -> bool {
        self.index.contains_key(p)
    }

    pub fn index_of(&self, p: &P) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn distance(&self, p: &P) -> Option<u32> {
        self.index.get(p).map(|&i| self.dist[i])
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Labeled directed edges `(src, label index, dst)`, both endpoints in the ball.
    pub fn edges(&self) -> &[(usize, usize, usize)] {
        &self.edges
    }

    /// The sub-ball `B(o, s)` for `s ≤ radius`, as a vertex set.
    pub fn shell_union(&self, s: u32) -> HashSet<P> {
        self.vertices.iter().zip(&self.dist).filter(|(_, &d)| d <= s).map(|(v, _)| v.clone()).collect()
    }

    /// Vertices at exactly distance `s`.
    pub fn shell(&self, s: u32) -> Vec<P> {
        self.vertices.iter().zip(&self.dist).filter(|(_, &d)| d == s).map(|(v, _)| v.clone()).collect()
    }

    /// Undirected multigraph on the ball; loops dropped, padding degree `|S ∪ S⁻¹|`.
    pub fn to_graph(&self) -> SimpleGraph {
        let edges = self.edges.iter().filter(|(u, _, w)| u < w).map(|&(u, _, w)| (u, w)).collect();
        SimpleGraph { n: self.vertices.len(), edges, degree_bound: self.labels.len() }
    }

    /// Edge table `src,generator,dst` and vertex table `key,distance`.
    pub fn to_csv(&self) -> (String, String) {
        let mut e = String::from("src,generator,dst\n");
        for &(u, l, w) in &self.edges {
            let _ = writeln!(e, "{},{},{}", self.vertices[u], self.labels[l], self.vertices[w]);
        }
        let mut v = String::from("key,distance\n");
        for (p, d) in self.vertices.iter().zip(&self.dist) {
            let _ = writeln!(v, "{p},{d}");
        }
        (e, v)
    }
}

/// Largest `r` with `B(o, r) ⊆ K`, read off the ball's shells.
///
/// If `K` contains the whole ball the ball radius is returned; callers must supply a
/// ball large enough to witness the first violated shell.
pub fn inradius<P: Clone + Eq + Hash + std::fmt::Display>(ball: &SchreierBall<P>, k: &HashSet<P>) -> Result<u32> {
    if !k.contains(ball.basepoint()) {
        return Err(Error::BasepointMissing);
    }
    let first_missing = ball
        .vertices
        .iter()
        .zip(&ball.dist)
        .filter(|(v, _)| !k.contains(*v))
        .map(|(_, &d)| d)
        .min();
    Ok(match first_missing {
        Some(d) => d - 1,
        None => ball.radius,
    })
}

/// Schreier distances from `from` to each target, by BFS to depth at most `cap`.
pub fn distances_to<A: GroupAction>(action: &A, from: &A::Point, targets: &[A::Point], cap: u32) -> Result<Vec<u32>> {
    let gens: Vec<A::Elem> = action.symmetric_generators().into_iter().map(|(_, g)| g).collect();
    let mut found: HashMap<A::Point, u32> = HashMap::new();
    let mut seen: HashSet<A::Point> = HashSet::from([from.clone()]);
    let mut frontier = vec![from.clone()];
    let mut missing: HashSet<&A::Point> = targets.iter().collect();
    let mut d = 0;
    loop {
        for p in &frontier {
            if missing.remove(p) {
                found.insert(p.clone(), d);
            }
        }
        if missing.is_empty() {
            break;
        }
        if d == cap {
            let p = missing.iter().next().expect("nonempty");
            return Err(Error::EscapedBall(format!("{p} is farther than {cap} from {from}")));
        }
        let mut next = Vec::new();
        for p in &frontier {
            for g in &gens {
                let y = action.act(g, p)?;
                if seen.insert(y.clone()) {
                    next.push(y);
                }
            }
        }
        frontier = next;
        d += 1;
    }
    Ok(targets.iter().map(|t| found[t]).collect())
}

/// Undirected multigraph with an explicit degree bound used to pad every vertex
/// to a regular graph with loops.
#[derive(Clone, Debug)]
pub struct SimpleGraph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub degree_bound: usize,
}

impl SimpleGraph {
    /// Plain graph; the degree bound is the maximum degree.
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut deg = vec![0usize; n];
        for &(u, w) in &edges {
            if u != w {
                deg[u] += 1;
                deg[w] += 1;
            }
        }
        let degree_bound = deg.into_iter().max().unwrap_or(0);
        SimpleGraph { n, edges, degree_bound }
    }

    pub fn cycle(n: usize) -> Self {
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n)).collect())
    }

    pub fn complete(n: usize) -> Self {
        Self::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect())
    }

    fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.n];
        for &(u, w) in &self.edges {
            if u != w {
                deg[u] += 1;
                deg[w] += 1;
            }
        }
        deg
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return false;
        }
        let mut adj = vec![Vec::new(); self.n];
        for &(u, w) in &self.edges {
            adj[u].push(w);
            adj[w].push(u);
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &w in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// `y = L x` for the combinatorial Laplacian (loops contribute nothing).
    fn laplacian_apply(&self, deg: &[usize], x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            y[i] = deg[i] as f64 * x[i];
        }
        for &(u, w) in &self.edges {
            if u != w {
                y[u] -= x[w];
                y[w] -= x[u];
            }
        }
    }
}

/// Exhaustive search is used up to this many vertices.
pub const EXACT_CHEEGER_MAX_VERTICES: usize = 20;

/// Power-iteration stopping tolerance on the eigen-residual.
pub const SPECTRAL_TOLERANCE: f64 = 1e-8;

const MAX_POWER_ITERATIONS: usize = 2_000_000;

/// Isoperimetric report. `h` is the edge expansion `min |∂S|/|S|` over `|S| ≤ |V|/2`;
/// `lambda1` is the second eigenvalue of the normalized Laplacian `L / d` of the graph
/// padded with loops to degree `d`.
#[derive(Clone, Debug)]
pub struct CheegerReport {
    pub vertices: usize,
    pub degree_bound: usize,
    /// `(|∂S|, |S|)` of a minimizing set, when computed exhaustively.
    pub exact: Option<(u64, u64)>,
    pub lambda1: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl CheegerReport {
    pub fn exact_value(&self) -> Option<f64> {
        self.exact.map(|(b, s)| b as f64 / s as f64)
    }

    /// Spectral lower bound on the edge expansion: `d·λ₁/2`.
    pub fn spectral_lower_bound(&self) -> f64 {
        self.degree_bound as f64 * self.lambda1 / 2.0
    }

    /// Spectral upper bound on the edge expansion: `d·sqrt(2λ₁)`.
    pub fn spectral_upper_bound(&self) -> f64 {
        self.degree_bound as f64 * (2.0 * self.lambda1).sqrt()
    }

    /// `λ₁/2 ≤ h/d ≤ sqrt(2λ₁)` within `tol`; `None` when `h` was not computed.
    pub fn band_holds(&self, tol: f64) -> Option<bool> {
        let h = self.exact_value()? / self.degree_bound as f64;
        Some(self.lambda1 / 2.0 <= h + tol && h <= (2.0 * self.lambda1).sqrt() + tol)
    }
}

fn exact_edge_expansion(g: &SimpleGraph) -> (u64, u64) {
    let n = g.n;
    let edges: Vec<(usize, usize)> = g.edges.iter().copied().filter(|(u, w)| u != w).collect();
    let mut best = (u64::MAX, 1u64);
    for mask in 1u32..(1u32 << n) {
        let size = mask.count_ones() as u64;
        if 2 * size > n as u64 {
            continue;
        }
        let boundary = edges.iter().filter(|&&(u, w)| ((mask >> u) ^ (mask >> w)) & 1 == 1).count() as u64;
        // boundary/size < best.0/best.1
        if (boundary as u128) * (best.1 as u128) < (best.0 as u128) * (size as u128) {
            best = (boundary, size);
        }
    }
    best
}

/// Second-smallest eigenvalue of `L / d` by deflated power iteration on `I − L/(2d)`.
fn spectral_gap(g: &SimpleGraph) -> (f64, bool, usize) {
    let n = g.n;
    if n < 2 {
        return (0.0, true, 0);
    }
    let d = g.degree_bound.max(1) as f64;
    let deg = g.degrees();
    let project = |v: &mut [f64]| {
        let mean = v.iter().sum::<f64>() / n as f64;
        v.iter_mut().for_each(|x| *x -= mean);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
    };
    // fixed pseudo-random start, not orthogonal to any eigenvector in practice
    let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect();
    project(&mut v);
    let mut lv = vec![0.0; n];
    let mut rho = 0.0;
    for it in 1..=MAX_POWER_ITERATIONS {
        g.laplacian_apply(&deg, &v, &mut lv);
        // w = M v with M = I − L/(2d)
        let w: Vec<f64> = v.iter().zip(&lv).map(|(x, l)| x - l / (2.0 * d)).collect();
        rho = v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        let residual = w.iter().zip(&v).map(|(a, b)| (a - rho * b).powi(2)).sum::<f64>().sqrt();
        if residual < SPECTRAL_TOLERANCE {
            return (2.0 * (1.0 - rho), true, it);
        }
        v = w;
        project(&mut v);
    }
    (2.0 * (1.0 - rho), false, MAX_POWER_ITERATIONS)
}

/// Cheeger diagnostics of a connected graph.
pub fn cheeger_graph(g: &SimpleGraph) -> Result<CheegerReport> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let exact = (g.n >= 2 && g.n <= EXACT_CHEEGER_MAX_VERTICES).then(|| exact_edge_expansion(g));
    let (lambda1, converged, iterations) = spectral_gap(g);
    Ok(CheegerReport { vertices: g.n, degree_bound: g.degree_bound, exact, lambda1, converged, iterations })
}

/// Cheeger diagnostics of the subgraph induced on a Schreier ball.
pub fn cheeger<P: Clone + Eq + Hash + std::fmt::Display>(ball: &SchreierBall<P>) -> Result<CheegerReport> {
    cheeger_graph(&ball.to_graph())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{FreeGroupAction, FreeWord, IntegerAction};
    use crate::numerics::Dyadic;
    use crate::thompson::ThompsonAction;

    fn q(s: &str) -> Dyadic {
        s.parse().unwrap()
    }

    #[test]
    fn thompson_small_balls() {
        let t = ThompsonAction::new();
        let b0 = orbit_ball(&t, &q("1/2"), 0).unwrap();
        assert_eq!(b0.vertices(), &[q("1/2")]);
        let b1 = orbit_ball(&t, &q("1/2"), 1).unwrap();
        let mut v = b1.vertices().to_vec();
        v.sort();
        assert_eq!(v, vec![q("1/4"), q("1/2"), q("3/4")]);
    }

    #[test]
    fn free_ball_sizes() {
        let b = orbit_ball(&FreeGroupAction, &FreeWord::empty(), 3).unwrap();
        assert_eq!(b.len(), 53);
    }

    #[test]
    fn inradius_examples() {
        let b = orbit_ball(&FreeGroupAction, &FreeWord::empty(), 6).unwrap();
        let k5 = b.shell_union(5);
        assert_eq!(inradius(&b, &k5).unwrap(), 5);
        let mut holed = k5.clone();
        let victim = b.shell(3)[0].clone();
        holed.remove(&victim);
        assert_eq!(inradius(&b, &holed).unwrap(), 2);
        let just_o: HashSet<FreeWord> = [FreeWord::empty()].into();
        assert_eq!(inradius(&b, &just_o).unwrap(), 0);
        let missing: HashSet<FreeWord> = ["a".parse().unwrap()].into();
        assert!(matches!(inradius(&b, &missing), Err(Error::BasepointMissing)));
    }

    #[test]
    fn distances_in_free_group() {
        let w = |s: &str| -> FreeWord { s.parse().unwrap() };
        let d = distances_to(&FreeGroupAction, &w("a"), &[w("b"), w("ba"), w("a"), w("AB")], 5).unwrap();
        assert_eq!(d, vec![2, 1, 0, 3]);
        assert!(matches!(distances_to(&FreeGroupAction, &w("a"), &[w("bbbb")], 3), Err(Error::EscapedBall(_))));
    }

    #[test]
    fn cheeger_examples() {
        let c4 = cheeger_graph(&SimpleGraph::cycle(4)).unwrap();
        assert_eq!(c4.exact, Some((2, 2)));
        let edge = cheeger_graph(&SimpleGraph::new(2, vec![(0, 1)])).unwrap();
        assert_eq!(edge.exact_value(), Some(1.0));
        let k4 = cheeger_graph(&SimpleGraph::complete(4)).unwrap();
        assert_eq!(k4.exact_value(), Some(2.0));
        assert!((c4.lambda1 - 1.0).abs() < 1e-6);
        assert!((k4.lambda1 - 4.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let g = SimpleGraph::new(4, vec![(0, 1), (2, 3)]);
        assert!(matches!(cheeger_graph(&g), Err(Error::Disconnected)));
    }

    #[test]
    fn ball_csv_export() {
        let b = orbit_ball(&IntegerAction, &0, 1).unwrap();
        let (edges, verts) = b.to_csv();
        assert_eq!(verts, "key,distance\n0,0\n-1,1\n1,1\n");
        assert!(edges.starts_with("src,generator,dst\n0,t,1\n0,t^-1,-1\n"));
    }

    #[test]
    fn bfs_is_deterministic() {
        let t = ThompsonAction::new();
        let a = orbit_ball(&t, &q("1/2"), 5).unwrap();
        let b = orbit_ball(&t, &q("1/2"), 5).unwrap();
        assert_eq!(a.vertices(), b.vertices());
        assert_eq!(a.edges(), b.edges());
    }
}
