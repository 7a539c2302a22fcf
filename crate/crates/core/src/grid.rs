//! Dyadic geometry of the base domain: tilings, triple classes, ν-disjoint
//! triples and the ball-center lattice.

use serde::{Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::extension::phi;

/// Default cap on tiling depth.
pub const DEFAULT_MAX_LEVEL: u32 = 8;

/// Axis-aligned rectangle `[x0, x0+w) × [y0, y0+h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub w: f64,
    pub h: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, w: f64, h: f64) -> Self {
        Self { x0, y0, w, h }
    }
    pub fn x1(&self) -> f64 {
        self.x0 + self.w
    }
    pub fn y1(&self) -> f64 {
        self.y0 + self.h
    }
    pub fn area(&self) -> f64 {
        self.w * self.h
    }
    pub fn center(&self) -> [f64; 2] {
        [self.x0 + 0.5 * self.w, self.y0 + 0.5 * self.h]
    }
    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x0 && p[0] < self.x1() && p[1] >= self.y0 && p[1] < self.y1()
    }
    /// Containment with a relative slack, used for cell/square alignment tests.
    pub fn contains_rect(&self, o: &Rect, tol: f64) -> bool {
        o.x0 >= self.x0 - tol && o.x1() <= self.x1() + tol && o.y0 >= self.y0 - tol && o.y1() <= self.y1() + tol
    }
    /// Interiors are disjoint (touching edges allowed).
    pub fn interior_disjoint(&self, o: &Rect, tol: f64) -> bool {
        o.x0 >= self.x1() - tol || o.x1() <= self.x0 + tol || o.y0 >= self.y1() - tol || o.y1() <= self.y0 + tol
    }
    pub fn intersect(&self, o: &Rect) -> Option<Rect> {
        let x0 = self.x0.max(o.x0);
        let y0 = self.y0.max(o.y0);
        let x1 = self.x1().min(o.x1());
        let y1 = self.y1().min(o.y1());
        (x1 > x0 && y1 > y0).then(|| Rect::new(x0, y0, x1 - x0, y1 - y0))
    }
    /// Largest distance from the origin over the closed rectangle.
    pub fn max_radius(&self) -> f64 {
        let fx = self.x0.abs().max(self.x1().abs());
        let fy = self.y0.abs().max(self.y1().abs());
        fx.hypot(fy)
    }
    /// Rectangle dilated about its center by `factor`.
    pub fn dilate(&self, factor: f64) -> Rect {
        let c = self.center();
        let (w, h) = (self.w * factor, self.h * factor);
        Rect::new(c[0] - 0.5 * w, c[1] - 0.5 * h, w, h)
    }
}

/// Base domain `U = origin + [0, side)²`, optionally with an interior grandchild `U₀`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaseDomain {
    pub origin: [f64; 2],
    pub side: f64,
    /// Index `(i, j)` of `U₀` among the 16 grandchildren of `U`.
    pub interior_grandchild_offset: Option<[u32; 2]>,
}

impl BaseDomain {
    pub fn new(origin: [f64; 2], side: f64) -> Result<Self> {
        if !(side > 0.0 && side <= 1.0) || side.log2().fract() != 0.0 {
            return invalid(format!("domain side {side} is not a power of two in (0, 1]"));
        }
        Ok(Self { origin, side, interior_grandchild_offset: None })
    }

    /// `[−side/2, side/2)²`.
    pub fn centered(side: f64) -> Result<Self> {
        Self::new([-0.5 * side, -0.5 * side], side)
    }

    pub fn unit() -> Self {
        Self::new([0.0, 0.0], 1.0).unwrap()
    }

    pub fn with_grandchild(mut self, offset: [u32; 2]) -> Result<Self> {
        if !(1..=2).contains(&offset[0]) || !(1..=2).contains(&offset[1]) {
            return invalid("U₀ must be one of the four interior grandchildren (offsets 1 or 2)");
        }
        self.interior_grandchild_offset = Some(offset);
        Ok(self)
    }

    pub fn rect(&self) -> Rect {
        Rect::new(self.origin[0], self.origin[1], self.side, self.side)
    }

    pub fn root(&self) -> DyadicSquare {
        DyadicSquare::root(self)
    }

    /// `U₀` as a level-2 square, when set.
    pub fn interior_grandchild(&self) -> Option<DyadicSquare> {
        self.interior_grandchild_offset
            .map(|o| DyadicSquare::new(self, 2, [o[0] as i64, o[1] as i64]))
    }

    /// `U ⊂ B(0, 1/2)` for the closed square.
    pub fn within_half_ball(&self) -> bool {
        self.rect().max_radius() <= 0.5 + 1e-15
    }
}

/// Dyadic square of a base domain: level `s`, index `(i, j)` relative to the domain origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DyadicSquare {
    pub level: u32,
    pub index: [i64; 2],
    pub origin: [f64; 2],
    pub root_side: f64,
}

impl DyadicSquare {
    pub fn new(domain: &BaseDomain, level: u32, index: [i64; 2]) -> Self {
        Self { level, index, origin: domain.origin, root_side: domain.side }
    }

    pub fn root(domain: &BaseDomain) -> Self {
        Self::new(domain, 0, [0, 0])
    }

    pub fn side(&self) -> f64 {
        self.root_side * (-(self.level as f64)).exp2()
    }

    pub fn lower_left(&self) -> [f64; 2] {
        let l = self.side();
        [self.origin[0] + self.index[0] as f64 * l, self.origin[1] + self.index[1] as f64 * l]
    }

    pub fn center(&self) -> [f64; 2] {
        let l = self.side();
        [
            self.origin[0] + (self.index[0] as f64 + 0.5) * l,
            self.origin[1] + (self.index[1] as f64 + 0.5) * l,
        ]
    }

    pub fn rect(&self) -> Rect {
        let p = self.lower_left();
        let l = self.side();
        Rect::new(p[0], p[1], l, l)
    }

    /// The four children in lexicographic order `(0,0), (0,1), (1,0), (1,1)` of `(di, dj)`.
    pub fn children(&self) -> [DyadicSquare; 4] {
        let mk = |di: i64, dj: i64| DyadicSquare {
            level: self.level + 1,
            index: [2 * self.index[0] + di, 2 * self.index[1] + dj],
            ..*self
        };
        [mk(0, 0), mk(0, 1), mk(1, 0), mk(1, 1)]
    }

    pub fn parent(&self) -> Option<DyadicSquare> {
        (self.level > 0).then(|| DyadicSquare {
            level: self.level - 1,
            index: [self.index[0].div_euclid(2), self.index[1].div_euclid(2)],
            ..*self
        })
    }

    /// Ancestor at `level` (or `self` when equal).
    pub fn ancestor(&self, level: u32) -> Option<DyadicSquare> {
        if level > self.level {
            return None;
        }
        let k = self.level - level;
        Some(DyadicSquare {
            level,
            index: [self.index[0] >> k, self.index[1] >> k],
            ..*self
        })
    }

    /// All descendants at `level` in row-major order (index 0 outer).
    pub fn descendants(&self, level: u32) -> Vec<DyadicSquare> {
        if level < self.level {
            return Vec::new();
        }
        let k = 1i64 << (level - self.level);
        let mut out = Vec::with_capacity((k * k) as usize);
        for i in 0..k {
            for j in 0..k {
                out.push(DyadicSquare {
                    level,
                    index: [self.index[0] * k + i, self.index[1] * k + j],
                    ..*self
                });
            }
        }
        out
    }

    pub fn contains_point(&self, p: [f64; 2]) -> bool {
        self.rect().contains(p)
    }

    /// Whether `other` lies inside `self` (same root geometry).
    pub fn contains_square(&self, other: &DyadicSquare) -> bool {
        other.level >= self.level && other.ancestor(self.level).map(|a| a.index) == Some(self.index)
    }

    /// Closed squares intersect (shared edge or corner counts). Same level assumed.
    pub fn touches(&self, other: &DyadicSquare) -> bool {
        (self.index[0] - other.index[0]).abs() <= 1 && (self.index[1] - other.index[1]).abs() <= 1
    }
}

impl Serialize for DyadicSquare {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SquareRecord::from(self).serialize(s)
    }
}

/// JSON record for a square.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SquareRecord {
    pub level: u32,
    pub index: [i64; 2],
    pub center: [f64; 2],
    pub side: f64,
}

impl From<&DyadicSquare> for SquareRecord {
    fn from(q: &DyadicSquare) -> Self {
        Self { level: q.level, index: q.index, center: q.center(), side: q.side() }
    }
}

/// The tiling `G_λ[U]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    pub domain: BaseDomain,
    pub level: u32,
    pub squares: Vec<DyadicSquare>,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.squares.len()
    }
    pub fn is_empty(&self) -> bool {
        self.squares.is_empty()
    }
    /// Square containing `p`, if any.
    pub fn locate(&self, p: [f64; 2]) -> Option<&DyadicSquare> {
        let l = self.domain.side * (-(self.level as f64)).exp2();
        let k = 1i64 << self.level;
        let i = ((p[0] - self.domain.origin[0]) / l).floor() as i64;
        let j = ((p[1] - self.domain.origin[1]) / l).floor() as i64;
        (0..k).contains(&i).then_some(())?;
        (0..k).contains(&j).then_some(())?;
        self.squares.get((i * k + j) as usize)
    }
}

/// Tile `domain` by squares of side `2^{−λ}·side`, row-major by index.
pub fn build_grid(domain: &BaseDomain, level: u32) -> Result<Grid> {
    build_grid_capped(domain, level, DEFAULT_MAX_LEVEL)
}

pub fn build_grid_capped(domain: &BaseDomain, level: u32, max_level: u32) -> Result<Grid> {
    if level > max_level {
        return Err(Error::Capacity(format!("grid level {level} exceeds the configured maximum {max_level}")));
    }
    let squares = DyadicSquare::root(domain).descendants(level);
    Ok(Grid { domain: domain.clone(), level, squares })
}

/// Classes of ordered triples of same-level squares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TripleClass {
    /// No pair touches.
    Gamma1,
    /// Exactly one pair touches.
    Gamma2,
    /// At least two pairs touch.
    Gamma3,
}

pub fn classify_triple(t: &[DyadicSquare; 3]) -> Result<TripleClass> {
    if t[0].level != t[1].level || t[1].level != t[2].level {
        return invalid("triple squares must share one level");
    }
    let touching = [(0, 1), (0, 2), (1, 2)]
        .iter()
        .filter(|&&(a, b)| t[a].touches(&t[b]))
        .count();
    Ok(match touching {
        0 => TripleClass::Gamma1,
        1 => TripleClass::Gamma2,
        _ => TripleClass::Gamma3,
    })
}

/// Boundary samples of `Φ(Q)` (16 per side by default).
pub fn phi_boundary(q: &Rect, per_side: usize) -> Vec<[f64; 3]> {
    let mut out = Vec::with_capacity(4 * per_side);
    for k in 0..per_side {
        let t = k as f64 / per_side as f64;
        out.push(phi([q.x0 + t * q.w, q.y0]));
        out.push(phi([q.x1(), q.y0 + t * q.h]));
        out.push(phi([q.x1() - t * q.w, q.y1()]));
        out.push(phi([q.x0, q.y1() - t * q.h]));
    }
    out
}

fn dist3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Diameter of the sampled boundary of `Φ(Q)`. `Φ` restricted to a square
/// attains its diameter on the boundary since `|Φ(x)−Φ(y)|` is convex along segments.
pub fn phi_diameter(q: &Rect, per_side: usize) -> f64 {
    let pts = phi_boundary(q, per_side);
    let mut d: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            d = d.max(dist3(&pts[i], &pts[j]));
        }
    }
    d
}

/// Sampled distance between `Φ(Q₁)` and `Φ(Q₂)`; zero if the squares overlap.
pub fn phi_distance(a: &Rect, b: &Rect, per_side: usize) -> f64 {
    if !a.interior_disjoint(b, 0.0) {
        return 0.0;
    }
    let pa = phi_boundary(a, per_side);
    let pb = phi_boundary(b, per_side);
    let mut d = f64::INFINITY;
    for x in &pa {
        for y in &pb {
            d = d.min(dist3(x, y));
        }
    }
    d
}

/// Boundary samples per side used by the ν-disjoint tests.
pub const PHI_SAMPLES_PER_SIDE: usize = 16;

/// `ν/2 ≤ diam Φ(Q) ≤ 2ν`.
pub fn diameter_matches(q: &DyadicSquare, nu: f64) -> bool {
    let d = phi_diameter(&q.rect(), PHI_SAMPLES_PER_SIDE);
    d >= 0.5 * nu && d <= 2.0 * nu
}

/// Re-check of the ν-disjoint condition for one ordered triple.
pub fn is_nu_disjoint(t: &[DyadicSquare; 3], nu: f64) -> bool {
    t.iter().all(|q| diameter_matches(q, nu))
        && [(0, 1), (0, 2), (1, 2)].iter().all(|&(i, j)| {
            phi_distance(&t[i].rect(), &t[j].rect(), PHI_SAMPLES_PER_SIDE) >= nu
        })
}

/// All ordered triples `(U₁, U₂, U₃)` with `Uₖ ∈ gₖ` satisfying the ν-disjoint condition.
pub fn nu_disjoint_triples(
    g1: &[DyadicSquare],
    g2: &[DyadicSquare],
    g3: &[DyadicSquare],
    nu: f64,
) -> Result<Vec<[DyadicSquare; 3]>> {
    if !(nu > 0.0) {
        return invalid("ν must be positive");
    }
    let keep = |g: &[DyadicSquare]| -> Vec<DyadicSquare> {
        g.iter().copied().filter(|q| diameter_matches(q, nu)).collect()
    };
    let (a, b, c) = (keep(g1), keep(g2), keep(g3));
    let far = |x: &DyadicSquare, y: &DyadicSquare| {
        phi_distance(&x.rect(), &y.rect(), PHI_SAMPLES_PER_SIDE) >= nu
    };
    let mut out = Vec::new();
    for x in &a {
        for y in b.iter().filter(|y| far(x, y)) {
            for z in c.iter().filter(|z| far(x, z) && far(y, z)) {
                out.push([*x, *y, *z]);
            }
        }
    }
    Ok(out)
}

/// Keep one representative (the first seen) of each unordered triple.
pub fn dedup_unordered(triples: &[[DyadicSquare; 3]]) -> Vec<[DyadicSquare; 3]> {
    let key = |t: &[DyadicSquare; 3]| {
        let mut k: Vec<(u32, i64, i64)> = t.iter().map(|q| (q.level, q.index[0], q.index[1])).collect();
        k.sort_unstable();
        k
    };
    let mut seen = std::collections::BTreeSet::new();
    triples.iter().filter(|t| seen.insert(key(t))).copied().collect()
}

/// `Γ_λ(R) = 2^λ Z³ ∩ B(0, R)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallLattice {
    pub spacing: f64,
    pub radius: f64,
    pub centers: Vec<[f64; 3]>,
    /// Set when the spacing exceeds the radius; only the origin remains.
    pub warning: bool,
}

pub fn ball_lattice(lambda: u32, radius: f64) -> BallLattice {
    let spacing = (lambda as f64).exp2();
    let k = (radius / spacing).floor() as i64;
    let mut centers = Vec::new();
    for i in -k..=k {
        for j in -k..=k {
            for l in -k..=k {
                let p = [i as f64 * spacing, j as f64 * spacing, l as f64 * spacing];
                if (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() <= radius {
                    centers.push(p);
                }
            }
        }
    }
    BallLattice { spacing, radius, centers, warning: spacing > radius }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_tilings() {
        let g = build_grid(&BaseDomain::unit(), 0).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.squares[0].center(), [0.5, 0.5]);
        assert_eq!(g.squares[0].side(), 1.0);
        let g = build_grid(&BaseDomain::unit(), 2).unwrap();
        assert_eq!(g.len(), 16);
        assert!(g.squares.iter().all(|q| q.side() == 0.25));
    }

    #[test]
    fn small_domain_centers_match_independent_loop() {
        let d = BaseDomain::new([0.0, 0.0], 0.25).unwrap();
        let g = build_grid(&d, 3).unwrap();
        assert_eq!(g.len(), 64);
        let mut expected = Vec::new();
        let mut x = 1.0 / 64.0;
        while x < 0.25 {
            let mut y = 1.0 / 64.0;
            while y < 0.25 {
                expected.push([x, y]);
                y += 1.0 / 32.0;
            }
            x += 1.0 / 32.0;
        }
        for (q, e) in g.squares.iter().zip(&expected) {
            assert_eq!(q.side(), 1.0 / 32.0);
            assert!((q.center()[0] - e[0]).abs() < 1e-15 && (q.center()[1] - e[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn level_cap_is_capacity_error() {
        assert!(matches!(build_grid(&BaseDomain::unit(), 9), Err(Error::Capacity(_))));
    }

    #[test]
    fn triple_classes() {
        let d = BaseDomain::unit();
        let q = |i, j| DyadicSquare::new(&d, 3, [i, j]);
        assert_eq!(classify_triple(&[q(1, 1), q(1, 1), q(1, 1)]).unwrap(), TripleClass::Gamma3);
        assert_eq!(classify_triple(&[q(0, 0), q(2, 0), q(4, 0)]).unwrap(), TripleClass::Gamma1);
        assert_eq!(classify_triple(&[q(0, 0), q(1, 1), q(5, 5)]).unwrap(), TripleClass::Gamma2);
        assert!(classify_triple(&[q(0, 0), q(1, 1), DyadicSquare::new(&d, 2, [0, 0])]).is_err());
    }

    #[test]
    fn lattice_examples() {
        let l = ball_lattice(0, 1.5);
        assert_eq!(l.centers.len(), 19);
        let l = ball_lattice(3, 8.0);
        assert!(l.centers.contains(&[0.0, 0.0, 0.0]));
        assert!(l.centers.contains(&[8.0, 0.0, 0.0]) && l.centers.contains(&[-8.0, 0.0, 0.0]));
        let l = ball_lattice(1, 1.0);
        assert_eq!(l.centers, vec![[0.0, 0.0, 0.0]]);
        assert!(l.warning);
    }

    #[test]
    fn nu_too_large_gives_nothing() {
        let d = BaseDomain::centered(1.0).unwrap();
        let g = build_grid(&d, 0).unwrap();
        let diam = phi_diameter(&d.rect(), 16);
        assert!(nu_disjoint_triples(&g.squares, &g.squares, &g.squares, 3.0 * diam).unwrap().is_empty());
    }

    #[test]
    fn corner_triple_found_at_matching_scale() {
        let d = BaseDomain::centered(1.0).unwrap();
        let g = build_grid(&d, 3).unwrap();
        // corner images are stretched by |∇|x|²| ≈ √2, so ν sits a bit above 2^{-3}
        let nu = 0.1875;
        let t = nu_disjoint_triples(&g.squares, &g.squares, &g.squares, nu).unwrap();
        assert!(!t.is_empty());
        let corners = [[0i64, 0i64], [7, 0], [0, 7]];
        assert!(t.iter().any(|x| (0..3).all(|k| x[k].index == corners[k])));
    }

    #[test]
    fn dedup_keeps_one_per_set() {
        let d = BaseDomain::unit();
        let q = |i| DyadicSquare::new(&d, 2, [i, 0]);
        let t = vec![[q(0), q(1), q(2)], [q(2), q(1), q(0)], [q(0), q(1), q(3)]];
        assert_eq!(dedup_unordered(&t).len(), 2);
    }
}
