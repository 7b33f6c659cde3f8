use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::dp::budget::PrivacyBudget;
use crate::dp::release::{global_sensitivity_release, SMOOTH_NOISE_MULTIPLIER};
use crate::error::{invalid, Error, Result};
use crate::hajek::{private_mean_local_hajek, HajekParams, ProjectionSource};
use crate::report::{BottomReason, EstimateReport, Outcome};
use crate::scalar::Real;
use crate::ustat::{binomial, FamilyKind, Kernel, Regularity, Tail};

pub type Point3 = [f64; 3];

/// Undirected simple graph stored as adjacency bitsets, optionally with the
/// latent sphere positions that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricGraph {
    n: usize,
    r: Option<f64>,
    latent: Option<Vec<Point3>>,
    words: usize,
    bits: Vec<u64>,
}

impl GeometricGraph {
    pub fn empty(n: usize) -> Self {
        let words = n.div_ceil(64);
        Self { n, r: None, latent: None, words, bits: vec![0; n * words] }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::empty(n);
        for i in 0..n {
            for j in i + 1..n {
                g.set_edge(i, j);
            }
        }
        g
    }

    /// Connect every pair of points at Euclidean distance at most `r`.
    pub fn from_latent(latent: Vec<Point3>, r: f64) -> Self {
        let mut g = Self::empty(latent.len());
        for i in 0..latent.len() {
            for j in i + 1..latent.len() {
                if r >= 2.0 || distance(&latent[i], &latent[j]) <= r {
                    g.set_edge(i, j);
                }
            }
        }
        g.r = Some(r);
        g.latent = Some(latent);
        g
    }

    /// Edges given as 0-based pairs.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n);
        for &(i, j) in edges {
            if i >= n || j >= n || i == j {
                return Err(invalid(format!("bad edge ({}, {}) for {n} nodes", i + 1, j + 1)));
            }
            g.set_edge(i, j);
        }
        Ok(g)
    }

    fn set_edge(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
        self.bits[j * self.words + i / 64] |= 1 << (i % 64);
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> Option<f64> {
        self.r
    }

    pub fn latent(&self) -> Option<&[Point3]> {
        self.latent.as_deref()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.row(i)[j / 64] >> (j % 64) & 1 == 1
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n).map(|i| self.degree(i)).sum::<usize>() / 2
    }

    /// `sum A_ij / C(n, 2)`.
    pub fn edge_density(&self) -> f64 {
        self.edge_count() as f64 / (self.n * (self.n - 1) / 2) as f64
    }

    /// Common neighbours of `i` and `j` with index above `above`.
    fn common_above(&self, i: usize, j: usize, above: usize) -> impl Iterator<Item = usize> + '_ {
        let (ri, rj) = (self.row(i), self.row(j));
        (above / 64..self.words).flat_map(move |w| {
            let mut m = ri[w] & rj[w];
            if w == above / 64 {
                m &= if above % 64 == 63 { 0 } else { !0u64 << (above % 64 + 1) };
            }
            std::iter::from_fn(move || {
                if m == 0 {
                    return None;
                }
                let b = m.trailing_zeros() as usize;
                m &= m - 1;
                Some(w * 64 + b)
            })
        })
    }

    /// Every triangle `(i, j, k)` with `i < j < k`, in lexicographic order.
    pub fn triangles(&self) -> Vec<[u32; 3]> {
        (0..self.n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let mut out = Vec::new();
                for j in self.common_above(i, i, i).collect::<Vec<_>>() {
                    for k in self.common_above(i, j, j) {
                        out.push([i as u32, j as u32, k as u32]);
                    }
                }
                out
            })
            .collect()
    }

    /// Number of triangles through each node.
    pub fn triangles_per_node(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.n];
        for t in self.triangles() {
            for &v in &t {
                counts[v as usize] += 1;
            }
        }
        counts
    }

    /// One `i j` pair per line, 1-based, each edge once.
    pub fn to_edge_lines(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.has_edge(i, j) {
                    let _ = writeln!(out, "{} {}", i + 1, j + 1);
                }
            }
        }
        out
    }

    /// Parse an edge list. Without `n`, the node count is the largest index seen.
    pub fn parse_edge_lines(text: &str, n: Option<usize>) -> Result<Self> {
        let mut edges = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |message: String| Error::Parse { line: no + 1, message };
            let nums: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse::<usize>().map_err(|_| bad(format!("cannot parse {t:?}"))))
                .collect::<Result<_>>()?;
            match nums[..] {
                [i, j] if i >= 1 && j >= 1 && i != j => edges.push((i - 1, j - 1)),
                _ => return Err(bad(format!("expected two distinct 1-based node ids, got {line:?}"))),
            }
        }
        let seen = edges.iter().map(|&(i, j)| i.max(j) + 1).max().unwrap_or(0);
        let n = n.unwrap_or(seen);
        if seen > n {
            return Err(invalid(format!("edge list mentions node {seen} but n = {n}")));
        }
        Self::from_edges(n, &edges)
    }
}

fn distance(a: &Point3, b: &Point3) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Uniform point on the unit sphere in three dimensions.
pub fn sphere_point<R: Rng + ?Sized>(rng: &mut R) -> Point3 {
    loop {
        let p: Point3 = [StandardNormal.sample(rng), StandardNormal.sample(rng), StandardNormal.sample(rng)];
        let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        if norm > 0.0 {
            return [p[0] / norm, p[1] / norm, p[2] / norm];
        }
    }
}

pub fn sample_rgg<R: Rng + ?Sized>(n: usize, r: f64, rng: &mut R) -> Result<GeometricGraph> {
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, available: n });
    }
    if !(r > 0.0 && r <= 2.0) {
        return Err(invalid(format!("radius must lie in (0, 2], got {r}")));
    }
    Ok(GeometricGraph::from_latent((0..n).map(|_| sphere_point(rng)).collect(), r))
}

/// Triangle indicator on latent positions: all three pairwise distances at most `r`.
#[derive(Debug, Clone, Copy)]
pub struct LatentTriangle {
    pub r: f64,
}

impl<T: Real> Kernel<Point3, T> for LatentTriangle {
    fn degree(&self) -> usize {
        3
    }

    fn tail(&self) -> Tail<T> {
        Tail::Bounded { range: T::one() }
    }

    fn eval(&self, a: &[&Point3]) -> T {
        let hit = distance(a[0], a[1]) <= self.r && distance(a[0], a[2]) <= self.r && distance(a[1], a[2]) <= self.r;
        if hit {
            T::one()
        } else {
            T::zero()
        }
    }
}

/// Triangle indicator over node ids of a fixed graph.
#[derive(Debug, Clone, Copy)]
pub struct TriangleKernel<'a> {
    pub graph: &'a GeometricGraph,
}

impl<T: Real> Kernel<u32, T> for TriangleKernel<'_> {
    fn degree(&self) -> usize {
        3
    }

    fn tail(&self) -> Tail<T> {
        Tail::Bounded { range: T::one() }
    }

    fn eval(&self, a: &[&u32]) -> T {
        let (i, j, k) = (*a[0] as usize, *a[1] as usize, *a[2] as usize);
        if self.graph.has_edge(i, j) && self.graph.has_edge(i, k) && self.graph.has_edge(j, k) {
            T::one()
        } else {
            T::zero()
        }
    }
}

/// Triangle kernel over all node triples, computed from the triangle list.
#[derive(Debug, Clone)]
pub struct TriangleSource<T> {
    n: usize,
    triangles: Vec<[u32; 3]>,
    per_node: Vec<u64>,
    _scalar: std::marker::PhantomData<T>,
}

impl<T: Real> TriangleSource<T> {
    pub fn new(g: &GeometricGraph) -> Result<Self> {
        if g.n() < 3 {
            return Err(Error::InsufficientData { needed: 3, available: g.n() });
        }
        let triangles = g.triangles();
        let mut per_node = vec![0u64; g.n()];
        for t in &triangles {
            for &v in t {
                per_node[v as usize] += 1;
            }
        }
        Ok(Self { n: g.n(), triangles, per_node, _scalar: Default::default() })
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    fn choose(n: usize, k: usize) -> T {
        T::lit(binomial(n as u64, k as u64).expect("small binomial") as f64)
    }
}

impl<T: Real> ProjectionSource<T> for TriangleSource<T> {
    fn n(&self) -> usize {
        self.n
    }

    fn degree(&self) -> usize {
        3
    }

    fn kind(&self) -> FamilyKind {
        FamilyKind::AllTuples
    }

    fn regularity(&self) -> Regularity {
        Regularity::Regular
    }

    fn mean(&self) -> T {
        T::from_count(self.triangles.len()) / Self::choose(self.n, 3)
    }

    fn projections(&self) -> Vec<T> {
        let per = Self::choose(self.n - 1, 2);
        self.per_node.iter().map(|&t| T::lit(t as f64) / per).collect()
    }

    fn reweighted_mean(&self, weights: &[T], a_n: T) -> T {
        let min3 =
            |t: &[u32; 3]| t.iter().map(|&v| weights[v as usize]).fold(T::one(), |a, b| if b < a { b } else { a });
        let on_triangles = self.triangles.iter().fold(T::zero(), |acc, t| acc + min3(t));
        // Sum of min weights over every triple: the weight at ascending rank
        // i is the minimum of C(n-1-i, 2) triples.
        let mut sorted = weights.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite weights"));
        let all = sorted.iter().enumerate().fold(T::zero(), |acc, (i, &w)| acc + w * Self::choose(self.n - 1 - i, 2));
        a_n + (on_triangles * (T::one() - a_n) - a_n * (all - on_triangles)) / Self::choose(self.n, 3)
    }
}

/// Concentration radius of triangle projections given a private edge density `nu`.
pub fn triangle_xi(nu: f64, n: usize, gamma: f64) -> f64 {
    let n_f = n as f64;
    let log = (2.0 * n_f / gamma).ln();
    18.0 * nu * (2.0 / n_f * log).sqrt() + 16.0 / (3.0 * n_f) * log + 9.0 * nu / n_f * (2.0 / gamma).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleConfig {
    pub gamma: f64,
    /// Global sensitivity of the edge density times `n`.
    pub nu_scale: f64,
    pub noise_multiplier: f64,
}

impl Default for TriangleConfig {
    fn default() -> Self {
        Self { gamma: 0.01, nu_scale: 2.0, noise_multiplier: SMOOTH_NOISE_MULTIPLIER }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleOutcome<T> {
    /// Private edge density.
    pub nu: f64,
    /// Concentration radius derived from `nu`; absent when `nu < 0`.
    pub xi: Option<f64>,
    pub result: Outcome<EstimateReport<T>>,
}

/// Private triangle density with the default configuration. Spends `2 eps`:
/// `eps` on the edge density and `eps` on the triangle release.
pub fn private_triangle_density<T: Real, R: Rng + ?Sized>(
    g: &GeometricGraph,
    eps: f64,
    budget: &mut PrivacyBudget,
    rng: &mut R,
) -> Result<TriangleOutcome<T>> {
    private_triangle_density_with(g, eps, &TriangleConfig::default(), budget, rng)
}

pub fn private_triangle_density_with<T: Real, R: Rng + ?Sized>(
    g: &GeometricGraph,
    eps: f64,
    cfg: &TriangleConfig,
    budget: &mut PrivacyBudget,
    rng: &mut R,
) -> Result<TriangleOutcome<T>> {
    let n = g.n();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, available: n });
    }
    let nu = global_sensitivity_release(g.edge_density(), cfg.nu_scale / n as f64, eps, budget, "edge density", rng)?;
    if nu < 0.0 {
        budget.spend("triangle release (skipped)", eps)?;
        return Ok(TriangleOutcome {
            nu,
            xi: None,
            result: Outcome::Bottom(BottomReason::NegativeDensityProxy { nu }),
        });
    }
    let xi = triangle_xi(nu, n, cfg.gamma);
    let src = TriangleSource::<T>::new(g)?;
    let mut params = HajekParams::new(eps, T::one(), T::lit(xi));
    params.noise_multiplier = cfg.noise_multiplier;
    let result = private_mean_local_hajek(&src, &params, budget, rng)?;
    Ok(TriangleOutcome { nu, xi: Some(xi), result })
}
