//! Exact `(1/p, 1/q)` boundedness regions in the unit square.
//!
//! A region is a disjunction of conjunctions of rational linear constraints,
//! so strict and non-strict boundaries are decided without rounding.
//! Polygons are only built for export.

use std::fmt;

use num_rational::Rational64;
use num_traits::{One, Signed, Zero};

use crate::error::{domain, Result};

pub type Q = Rational64;

fn q(n: i64, d: i64) -> Q {
    Q::new(n, d)
}

/// `(u, v) = (1/p, 1/q)` in the closed unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RegionPoint {
    pub u: Q,
    pub v: Q,
}

impl RegionPoint {
    pub fn new(u: Q, v: Q) -> Result<Self> {
        let unit = |x: Q| x >= Q::zero() && x <= Q::one();
        if !unit(u) || !unit(v) {
            return domain(format!("point ({u}, {v}) outside the unit square"));
        }
        Ok(Self { u, v })
    }

    /// The point for exponents `p, q ≥ 1`, given as rationals (`0` for `∞`).
    pub fn from_reciprocals(u: Q, v: Q) -> Result<Self> {
        Self::new(u, v)
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (to_f64(self.u), to_f64(self.v))
    }
}

impl fmt::Display for RegionPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.u, self.v)
    }
}

pub fn to_f64(x: Q) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rel {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl Rel {
    fn holds(self, lhs: Q, rhs: Q) -> bool {
        match self {
            Rel::Lt => lhs < rhs,
            Rel::Le => lhs <= rhs,
            Rel::Eq => lhs == rhs,
            Rel::Ge => lhs >= rhs,
            Rel::Gt => lhs > rhs,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Eq => "=",
            Rel::Ge => ">=",
            Rel::Gt => ">",
        }
    }
}

/// `a·u + b·v rel c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub a: Q,
    pub b: Q,
    pub rel: Rel,
    pub c: Q,
}

impl Constraint {
    pub fn new(a: Q, b: Q, rel: Rel, c: Q) -> Self {
        Self { a, b, rel, c }
    }

    pub fn holds(&self, p: RegionPoint) -> bool {
        self.rel.holds(self.a * p.u + self.b * p.v, self.c)
    }

    fn lhs(&self, (u, v): (Q, Q)) -> Q {
        self.a * u + self.b * v - self.c
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*u + {}*v {} {}", self.a, self.b, self.rel.symbol(), self.c)
    }
}

fn square() -> Vec<Constraint> {
    let (z, o) = (Q::zero(), Q::one());
    vec![
        Constraint::new(o, z, Rel::Ge, z),
        Constraint::new(o, z, Rel::Le, o),
        Constraint::new(z, o, Rel::Ge, z),
        Constraint::new(z, o, Rel::Le, o),
    ]
}

/// Disjunction of conjunctions; each clause already includes the square.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundednessRegion {
    clauses: Vec<Vec<Constraint>>,
    label: String,
}

/// A line removed from a region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Line {
    U(Q),
    V(Q),
}

/// An edge of the closure polygon with its membership status.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub from: RegionPoint,
    pub to: RegionPoint,
    pub edge_included: bool,
    pub from_included: bool,
    pub to_included: bool,
}

impl BoundednessRegion {
    pub fn full_square() -> Self {
        Self {
            clauses: vec![square()],
            label: "square".into(),
        }
    }

    pub fn from_clauses(clauses: Vec<Vec<Constraint>>, label: impl Into<String>) -> Self {
        let clauses = clauses
            .into_iter()
            .map(|mut c| {
                c.extend(square());
                dedup(c)
            })
            .collect();
        Self {
            clauses,
            label: label.into(),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn clauses(&self) -> &[Vec<Constraint>] {
        &self.clauses
    }

    pub fn contains(&self, p: RegionPoint) -> bool {
        self.clauses.iter().any(|c| c.iter().all(|k| k.holds(p)))
    }

    pub fn is_empty_on_lattice(&self, denom: i64) -> bool {
        !lattice(denom).any(|p| self.contains(p))
    }

    /// `R \ line`, splitting every clause into the two open sides.
    pub fn minus_line(&self, line: Line) -> Self {
        let (a, b, c) = match line {
            Line::U(c) => (Q::one(), Q::zero(), c),
            Line::V(c) => (Q::zero(), Q::one(), c),
        };
        let mut clauses = Vec::new();
        for clause in &self.clauses {
            for rel in [Rel::Lt, Rel::Gt] {
                let mut k = clause.clone();
                k.push(Constraint::new(a, b, rel, c));
                if !clip(&k).is_empty() {
                    clauses.push(k);
                }
            }
        }
        let name = match line {
            Line::U(c) => format!("{} \\ {{u={c}}}", self.label),
            Line::V(c) => format!("{} \\ {{v={c}}}", self.label),
        };
        Self { clauses, label: name }
    }

    /// Vertices of the convex hull of the closure, counter-clockwise from
    /// the lowest-then-leftmost vertex.
    pub fn closure_vertices(&self) -> Vec<RegionPoint> {
        let pts: Vec<(Q, Q)> = self.clauses.iter().flat_map(|c| clip(c)).collect();
        convex_hull(pts)
            .into_iter()
            .map(|(u, v)| RegionPoint { u, v })
            .collect()
    }

    /// Closure edges, each tagged by whether its relative interior and its
    /// endpoints belong to the region.
    pub fn boundary(&self) -> Vec<BoundaryEdge> {
        let vs = self.closure_vertices();
        let n = vs.len();
        if n < 2 {
            return Vec::new();
        }
        (0..n)
            .map(|i| {
                let (from, to) = (vs[i], vs[(i + 1) % n]);
                let half = q(1, 2);
                let mid = RegionPoint {
                    u: (from.u + to.u) * half,
                    v: (from.v + to.v) * half,
                };
                BoundaryEdge {
                    from,
                    to,
                    edge_included: self.contains(mid),
                    from_included: self.contains(from),
                    to_included: self.contains(to),
                }
            })
            .collect()
    }

    /// `u,v,inside` rows on the lattice with spacing `1/denom`.
    pub fn to_csv(&self, denom: i64) -> String {
        let mut s = String::from("u,v,inside\n");
        for p in lattice(denom) {
            let (u, v) = p.to_f64();
            s.push_str(&format!("{u},{v},{}\n", u8::from(self.contains(p))));
        }
        s
    }

    /// Shaded closure, solid included edges, dashed excluded ones, hollow
    /// markers on excluded vertices.
    pub fn to_svg(&self) -> String {
        const S: f64 = 400.0;
        const M: f64 = 40.0;
        let xy = |p: RegionPoint| {
            let (u, v) = p.to_f64();
            (M + u * S, M + (1.0 - v) * S)
        };
        let mut out = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{w}\" viewBox=\"0 0 {w} {w}\">\n",
            w = S + 2.0 * M
        );
        out.push_str(&format!(
            "<rect x=\"{M}\" y=\"{M}\" width=\"{S}\" height=\"{S}\" fill=\"none\" stroke=\"#888\"/>\n"
        ));
        for clause in &self.clauses {
            let poly = convex_hull(clip(clause));
            if poly.len() < 3 {
                continue;
            }
            let pts: Vec<String> = poly
                .iter()
                .map(|&(u, v)| {
                    let (x, y) = xy(RegionPoint { u, v });
                    format!("{x},{y}")
                })
                .collect();
            out.push_str(&format!(
                "<polygon points=\"{}\" fill=\"#9ecae1\" stroke=\"none\"/>\n",
                pts.join(" ")
            ));
        }
        for e in self.boundary() {
            let ((x1, y1), (x2, y2)) = (xy(e.from), xy(e.to));
            let (color, dash) = if e.edge_included {
                ("#1f4e9c", "")
            } else {
                ("#c0392b", " stroke-dasharray=\"6 4\"")
            };
            out.push_str(&format!(
                "<line x1=\"{x1}\" y1=\"{y1}\" x2=\"{x2}\" y2=\"{y2}\" stroke=\"{color}\" stroke-width=\"2\"{dash}/>\n"
            ));
        }
        for v in self.closure_vertices() {
            let (x, y) = xy(v);
            let fill = if self.contains(v) { "#1f4e9c" } else { "white" };
            out.push_str(&format!(
                "<circle cx=\"{x}\" cy=\"{y}\" r=\"4\" fill=\"{fill}\" stroke=\"#1f4e9c\"/>\n"
            ));
        }
        out.push_str("</svg>\n");
        out
    }
}

fn dedup(mut c: Vec<Constraint>) -> Vec<Constraint> {
    let mut seen = Vec::with_capacity(c.len());
    c.retain(|k| {
        if seen.contains(k) {
            false
        } else {
            seen.push(*k);
            true
        }
    });
    c
}

/// Lattice points `(i/denom, j/denom)` of the unit square.
pub fn lattice(denom: i64) -> impl Iterator<Item = RegionPoint> {
    (0..=denom).flat_map(move |j| {
        (0..=denom).map(move |i| RegionPoint {
            u: q(i, denom),
            v: q(j, denom),
        })
    })
}

/// Closure of a clause: the square clipped by every constraint's closed
/// half-plane (both sides for equalities).
fn clip(clause: &[Constraint]) -> Vec<(Q, Q)> {
    let (z, o) = (Q::zero(), Q::one());
    let mut poly = vec![(z, z), (o, z), (o, o), (z, o)];
    for k in clause {
        match k.rel {
            Rel::Lt | Rel::Le => poly = clip_half(&poly, |p| -k.lhs(p)),
            Rel::Gt | Rel::Ge => poly = clip_half(&poly, |p| k.lhs(p)),
            Rel::Eq => {
                poly = clip_half(&poly, |p| k.lhs(p));
                poly = clip_half(&poly, |p| -k.lhs(p));
            }
        }
        if poly.is_empty() {
            break;
        }
    }
    // strict constraints that collapse the closure to their own boundary
    // leave an empty region
    for k in clause {
        if matches!(k.rel, Rel::Lt | Rel::Gt) && !poly.is_empty() && poly.iter().all(|&p| k.lhs(p).is_zero()) {
            return Vec::new();
        }
    }
    poly
}

/// Keeps the part of `poly` where `side >= 0`.
fn clip_half<F: Fn((Q, Q)) -> Q>(poly: &[(Q, Q)], side: F) -> Vec<(Q, Q)> {
    let n = poly.len();
    let mut out = Vec::new();
    for i in 0..n {
        let (p, r) = (poly[i], poly[(i + 1) % n]);
        let (sp, sr) = (side(p), side(r));
        if sp >= Q::zero() {
            out.push(p);
        }
        if (sp > Q::zero() && sr < Q::zero()) || (sp < Q::zero() && sr > Q::zero()) {
            let t = sp / (sp - sr);
            out.push((p.0 + t * (r.0 - p.0), p.1 + t * (r.1 - p.1)));
        }
    }
    out.dedup();
    if out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    out
}

fn cross(o: (Q, Q), a: (Q, Q), b: (Q, Q)) -> Q {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Andrew's monotone chain without collinear points, starting from the
/// lowest-then-leftmost point.
fn convex_hull(mut pts: Vec<(Q, Q)>) -> Vec<(Q, Q)> {
    pts.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut sorted = pts.clone();
    sorted.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut lower: Vec<(Q, Q)> = Vec::new();
    for &p in &sorted {
        while lower.len() >= 2 && !cross(lower[lower.len() - 2], lower[lower.len() - 1], p).is_positive() {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(Q, Q)> = Vec::new();
    for &p in sorted.iter().rev() {
        while upper.len() >= 2 && !cross(upper[upper.len() - 2], upper[upper.len() - 1], p).is_positive() {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    let mut hull = lower;
    hull.extend(upper);
    let start = hull
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.1.cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    hull.rotate_left(start);
    hull
}

fn check_positive(name: &str, x: Q) -> Result<()> {
    if x <= Q::zero() {
        return domain(format!("{name} must be positive, got {x}"));
    }
    Ok(())
}

fn diagonal(d1: Q, d2: Q, alpha: Q, beta: Q) -> Constraint {
    // v <= (d1/d2) u - (d1 - α - β)/d2, scaled by d2 > 0
    Constraint::new(-d1, d2, Rel::Le, -(d1 - alpha - beta))
}

fn u_bound(rel: Rel, c: Q) -> Constraint {
    Constraint::new(Q::one(), Q::zero(), rel, c)
}

/// Strong-type region of `R₁`: the kernel `x^{-α} y^{-β}` restricted to `y ≥ x`
/// (`0 < β ≤ d₁`, `α > 0`).
pub fn region_d(d1: Q, d2: Q, alpha: Q, beta: Q) -> Result<BoundednessRegion> {
    check_positive("d1", d1)?;
    check_positive("d2", d2)?;
    check_positive("alpha", alpha)?;
    check_positive("beta", beta)?;
    if beta > d1 {
        return domain(format!("beta = {beta} exceeds d1 = {d1}"));
    }
    Ok(BoundednessRegion::from_clauses(
        vec![vec![
            diagonal(d1, d2, alpha, beta),
            u_bound(Rel::Gt, (d1 - beta) / d1),
            u_bound(Rel::Le, Q::one()),
        ]],
        format!("D[{d1},{d2}; {alpha},{beta}]"),
    ))
}

/// Strong-type region of `R₂`: the kernel `x^{-α} y^{-β}` restricted to `y < x`
/// (`0 < α ≤ d₂`, `β > 0`).
pub fn region_f(d1: Q, d2: Q, alpha: Q, beta: Q) -> Result<BoundednessRegion> {
    check_positive("d1", d1)?;
    check_positive("d2", d2)?;
    check_positive("alpha", alpha)?;
    check_positive("beta", beta)?;
    if alpha > d2 {
        return domain(format!("alpha = {alpha} exceeds d2 = {d2}"));
    }
    let corner = (d1 - beta) / d1;
    Ok(BoundednessRegion::from_clauses(
        vec![
            vec![
                diagonal(d1, d2, alpha, beta),
                u_bound(Rel::Ge, (d1 - alpha - beta) / d1),
                u_bound(Rel::Lt, corner),
            ],
            vec![
                Constraint::new(Q::zero(), Q::one(), Rel::Lt, alpha / d2),
                u_bound(Rel::Ge, corner),
                u_bound(Rel::Le, Q::one()),
            ],
        ],
        format!("F[{d1},{d2}; {alpha},{beta}]"),
    ))
}

/// Parameters `(d₁, d₂, α, β)` of the dual region: `(d₂, d₁, β, α)`.
pub fn dual_parameters(d1: Q, d2: Q, alpha: Q, beta: Q) -> (Q, Q, Q, Q) {
    (d2, d1, beta, alpha)
}

/// Clause product of the regions; the empty list gives the full square.
pub fn intersect(regions: &[BoundednessRegion]) -> BoundednessRegion {
    let mut acc = BoundednessRegion::full_square();
    for r in regions {
        let mut clauses = Vec::new();
        for a in &acc.clauses {
            for b in &r.clauses {
                let mut c = a.clone();
                c.extend(b.iter().copied());
                let c = dedup(c);
                if !clip(&c).is_empty() && !clauses.contains(&c) {
                    clauses.push(c);
                }
            }
        }
        acc = BoundednessRegion {
            clauses,
            label: if acc.label == "square" {
                r.label.clone()
            } else {
                format!("{} & {}", acc.label, r.label)
            },
        };
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Composite {
    T3,
    T4,
}

/// Pairwise intersection over all ends `(i, j)` with the removed line.
pub fn composite_region(ends: &[i64], which: Composite) -> Result<BoundednessRegion> {
    if ends.len() < 2 || ends.iter().any(|&n| n < 3) {
        return domain(format!("need at least two ends of dimension >= 3, got {ends:?}"));
    }
    let mut parts = Vec::new();
    for &ni in ends {
        for &nj in ends {
            let (ni, nj) = (Q::from(ni), Q::from(nj));
            parts.push(match which {
                Composite::T3 => region_d(nj, ni, ni - 1, nj - 1)?,
                Composite::T4 => region_f(nj, ni, ni, nj - 2)?,
            });
        }
    }
    let r = intersect(&parts);
    Ok(match which {
        Composite::T3 => r.minus_line(Line::V(Q::one())),
        Composite::T4 => r.minus_line(Line::U(Q::zero())),
    })
}

/// Point on the segment between two restricted weak-type points.
pub fn interpolate_rw(pt0: RegionPoint, pt1: RegionPoint, theta: Q) -> Result<RegionPoint> {
    if theta <= Q::zero() || theta >= Q::one() {
        return domain(format!("theta must lie in (0, 1), got {theta}"));
    }
    if pt0.u == pt1.u || pt0.v == pt1.v {
        return domain(format!("degenerate interpolation between {pt0} and {pt1}"));
    }
    let s = Q::one() - theta;
    RegionPoint::new(s * pt0.u + theta * pt1.u, s * pt0.v + theta * pt1.v)
}
