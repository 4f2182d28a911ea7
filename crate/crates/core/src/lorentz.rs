//! Distribution functions, decreasing rearrangements and Lorentz quasi-norms.
//!
//! Everything here works on a [`Layout`]: a multiset of constant pieces
//! `(value, mass)` plus continuous power pieces `c·r^e` on an interval of a
//! power measure. Piecewise-constant data is handled exactly (sort and
//! accumulate, correctly rounded); power pieces are inverted analytically and
//! the Lorentz integral over them is a one-dimensional Stieltjes integral in
//! the level variable.

use crate::error::{domain, Result};
use crate::measure_grid::{cell_measures, GridFunction, PowerMeasure};
use crate::quad;
use crate::sum::{fsum, ExactSum};

/// Lorentz exponents `(p, q)`, each in `(0, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzIndex {
    pub p: f64,
    pub q: f64,
}

impl LorentzIndex {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p > 0.0) || !(q > 0.0) {
            return domain(format!("Lorentz index needs p, q > 0, got ({p}, {q})"));
        }
        Ok(Self { p, q })
    }

    /// Hölder conjugate pair `(p', q')`.
    pub fn conjugate(&self) -> Self {
        Self {
            p: conjugate_exponent(self.p),
            q: conjugate_exponent(self.q),
        }
    }
}

/// `p' = p/(p-1)`, with `1' = ∞` and `∞' = 1`.
pub fn conjugate_exponent(p: f64) -> f64 {
    if p.is_infinite() {
        1.0
    } else if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

/// `|c|·r^e` on `[lo, hi]` of the measure `r^{d-1}dr`, `e != 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousPart {
    pub coeff: f64,
    pub exponent: f64,
    pub lo: f64,
    pub hi: f64,
    pub dim: f64,
}

impl ContinuousPart {
    fn measure(&self) -> PowerMeasure {
        if self.dim == 0.0 {
            PowerMeasure::haar()
        } else {
            PowerMeasure::new(self.dim, 0.0).expect("valid dimension")
        }
    }

    fn value_at(&self, r: f64) -> f64 {
        if r == 0.0 {
            return if self.exponent < 0.0 { f64::INFINITY } else { 0.0 };
        }
        if r.is_infinite() {
            return if self.exponent < 0.0 { 0.0 } else { f64::INFINITY };
        }
        self.coeff * r.powf(self.exponent)
    }

    /// Infimum and supremum of the values taken.
    fn range(&self) -> (f64, f64) {
        let (a, b) = (self.value_at(self.lo), self.value_at(self.hi));
        (a.min(b), a.max(b))
    }

    /// Radius where the part crosses level `s`.
    fn radius(&self, s: f64) -> f64 {
        (s / self.coeff).powf(1.0 / self.exponent)
    }

    /// `μ{r ∈ [lo, hi] : c r^e > s}`.
    fn dist(&self, s: f64) -> f64 {
        let (inf, sup) = self.range();
        if s >= sup {
            return 0.0;
        }
        let mu = self.measure();
        if s < inf {
            return mu.mass(self.lo, self.hi);
        }
        let r = self.radius(s);
        if self.exponent < 0.0 {
            mu.mass(self.lo, r.min(self.hi))
        } else {
            mu.mass(r.max(self.lo), self.hi)
        }
    }

    /// `-dD/ds` inside the value range.
    fn dist_slope(&self, s: f64) -> f64 {
        let (inf, sup) = self.range();
        if s <= inf || s >= sup {
            return 0.0;
        }
        let r = self.radius(s);
        r.powf(self.dim) / (self.exponent.abs() * s)
    }

    /// Level `s` with `dist(s) = m`, for `0 < m < total mass`.
    fn invert(&self, m: f64) -> f64 {
        let d = self.dim;
        let r = if self.exponent < 0.0 {
            if d == 0.0 {
                self.lo * m.exp()
            } else {
                (self.lo.powf(d) + d * m).powf(1.0 / d)
            }
        } else if d == 0.0 {
            self.hi * (-m).exp()
        } else {
            (self.hi.powf(d) - d * m).max(0.0).powf(1.0 / d)
        };
        self.value_at(r)
    }
}

/// Abstract measure-space description of `|f|`: constant atoms and power pieces.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Layout {
    cells: Vec<(f64, f64)>,
    parts: Vec<ContinuousPart>,
}

impl Layout {
    pub fn new() -> Self {
        Self::default()
    }

    /// `|f|` on the cells of its grid plus its power ends, under `μ`.
    pub fn from_grid(f: &GridFunction, mu: &PowerMeasure) -> Self {
        let mut l = Self::new();
        l.extend_grid(f, mu);
        l
    }

    pub fn extend_grid(&mut self, f: &GridFunction, mu: &PowerMeasure) {
        let masses = cell_measures(f.grid(), mu);
        for (v, m) in f.values().iter().zip(masses) {
            self.push_cell(v.abs(), m);
        }
        for (part, lo, hi) in f.parts(mu) {
            self.push_power(part.coeff, part.exponent, lo, hi, mu.dim());
        }
    }

    /// A constant piece of value `|value|` on a set of measure `mass`.
    pub fn push_cell(&mut self, value: f64, mass: f64) {
        self.cells.push((value.abs(), mass));
    }

    pub fn push_power(&mut self, coeff: f64, exponent: f64, lo: f64, hi: f64, dim: f64) {
        if coeff == 0.0 || hi <= lo {
            return;
        }
        if exponent == 0.0 {
            let mu = if dim == 0.0 { PowerMeasure::haar() } else { PowerMeasure::new(dim, 0.0).expect("dim") };
            self.push_cell(coeff, mu.mass(lo, hi));
            return;
        }
        self.parts.push(ContinuousPart {
            coeff: coeff.abs(),
            exponent,
            lo,
            hi,
            dim,
        });
    }

    /// `μ{|f| > s}`; may be `+∞`.
    pub fn dist(&self, s: f64) -> f64 {
        let mut acc = ExactSum::new();
        for &(v, m) in &self.cells {
            if v > s {
                acc.add(m);
            }
        }
        for p in &self.parts {
            acc.add(p.dist(s));
        }
        acc.value()
    }

    fn dist_parts(&self, s: f64) -> f64 {
        fsum(self.parts.iter().map(|p| p.dist(s)))
    }

    fn slope_parts(&self, s: f64) -> f64 {
        self.parts.iter().map(|p| p.dist_slope(s)).sum()
    }

    fn parts_range(&self) -> Option<(f64, f64)> {
        self.parts.iter().map(|p| p.range()).fold(None, |acc, (a, b)| match acc {
            None => Some((a, b)),
            Some((x, y)) => Some((x.min(a), y.max(b))),
        })
    }
}

/// One monotone piece of `f*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Piece {
    /// `f* = value` on `[t0, t1)`.
    Step { value: f64, t0: f64, t1: f64 },
    /// `f*(t)` solves `offset + D_c(f*) = t` for levels in `(s_lo, s_hi)`,
    /// where `D_c` is the distribution of the power pieces.
    Continuous {
        s_hi: f64,
        s_lo: f64,
        t0: f64,
        t1: f64,
        offset: f64,
    },
}

impl Piece {
    pub fn t0(&self) -> f64 {
        match *self {
            Piece::Step { t0, .. } | Piece::Continuous { t0, .. } => t0,
        }
    }

    pub fn t1(&self) -> f64 {
        match *self {
            Piece::Step { t1, .. } | Piece::Continuous { t1, .. } => t1,
        }
    }
}

/// The nonincreasing, right-continuous function `f*` on `[0, ∞)`, zero past
/// the last piece.
#[derive(Debug, Clone, PartialEq)]
pub struct RearrangedFunction {
    pieces: Vec<Piece>,
    layout: Layout,
}

impl RearrangedFunction {
    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Breakpoints `t0` of every piece, then the final `t1`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.pieces.iter().map(Piece::t0).collect();
        if let Some(last) = self.pieces.last() {
            b.push(last.t1());
        } else {
            b.push(0.0);
        }
        b
    }

    /// Values of the step pieces in order (exact rearrangement of cells).
    pub fn step_values(&self) -> Vec<f64> {
        self.pieces
            .iter()
            .filter_map(|p| match p {
                Piece::Step { value, .. } => Some(*value),
                _ => None,
            })
            .collect()
    }

    pub fn is_step(&self) -> bool {
        self.pieces.iter().all(|p| matches!(p, Piece::Step { .. }))
    }

    /// Measure of the support, `μ{|f| > 0}`.
    pub fn support_measure(&self) -> f64 {
        self.pieces.last().map_or(0.0, Piece::t1)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let idx = self.pieces.partition_point(|p| p.t0() <= t);
        if idx == 0 {
            return self.pieces.first().map_or(0.0, |_| f64::INFINITY);
        }
        let piece = self.pieces[idx - 1];
        if t >= piece.t1() {
            return 0.0;
        }
        match piece {
            Piece::Step { value, .. } => value,
            Piece::Continuous { s_hi, s_lo, offset, .. } => self.level_for(t - offset, s_lo, s_hi),
        }
    }

    /// Inverts `D_c(s) = m` on `(s_lo, s_hi)`.
    fn level_for(&self, m: f64, s_lo: f64, s_hi: f64) -> f64 {
        if let [p] = self.layout.parts.as_slice() {
            return p.invert(m).clamp(s_lo, s_hi);
        }
        let mut lo = if s_lo > 0.0 { s_lo.ln() } else { s_hi.min(1.0).ln() - 1.0 };
        let mut hi = if s_hi.is_finite() { s_hi.ln() } else { lo + 1.0 };
        while self.layout.dist_parts(lo.exp()) < m && s_lo == 0.0 {
            lo -= 8.0;
        }
        while self.layout.dist_parts(hi.exp()) > m && s_hi.is_infinite() {
            hi += 8.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.layout.dist_parts(mid.exp()) > m {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (0.5 * (lo + hi)).exp()
    }

    /// `∫_0^∞ f*(t) g*(t) dt`.
    pub fn pair(&self, other: &Self) -> f64 {
        let mut cuts: Vec<f64> = self.breakpoints();
        cuts.extend(other.breakpoints());
        cuts.retain(|t| t.is_finite());
        cuts.push(0.0);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();
        let end = self.support_measure().min(other.support_measure());
        let mut total = ExactSum::new();
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a >= end {
                break;
            }
            let b = b.min(end);
            let mid = 0.5 * (a + b);
            match (self.piece_at(mid), other.piece_at(mid)) {
                (Some(Piece::Step { value: x, .. }), Some(Piece::Step { value: y, .. })) => {
                    total.add(x * y * (b - a))
                }
                _ => total.add(quad::integrate(|t| self.eval(t) * other.eval(t), a, b)),
            }
        }
        let last = *cuts.last().unwrap();
        if end > last {
            let a = last.max(f64::MIN_POSITIVE);
            if end.is_infinite() {
                if !(self.tail_rate() + other.tail_rate() < -1.0) {
                    return f64::INFINITY;
                }
                total.add(quad::integrate_log_to_inf(|t| self.eval(t) * other.eval(t), a));
            } else {
                total.add(quad::integrate(|t| self.eval(t) * other.eval(t), last, end));
            }
        }
        total.value()
    }

    /// Exponent `γ` with `f*(t) ~ t^γ` as `t → ∞`; `-∞` for compact support.
    pub fn tail_rate(&self) -> f64 {
        match self.pieces.last() {
            Some(p) if p.t1().is_infinite() => match p {
                Piece::Step { .. } => 0.0,
                Piece::Continuous { .. } => self
                    .layout
                    .parts
                    .iter()
                    .filter(|pt| pt.hi.is_infinite())
                    .map(|pt| if pt.dim == 0.0 { f64::NEG_INFINITY } else { part_rate(pt) })
                    .fold(f64::NEG_INFINITY, f64::max),
            },
            _ => f64::NEG_INFINITY,
        }
    }

    fn piece_at(&self, t: f64) -> Option<Piece> {
        let idx = self.pieces.partition_point(|p| p.t0() <= t);
        if idx == 0 {
            return None;
        }
        let p = self.pieces[idx - 1];
        (t < p.t1()).then_some(p)
    }

    /// `t0,t1,value_start,value_end,kind` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t0,t1,value_start,value_end,kind\n");
        for p in &self.pieces {
            match *p {
                Piece::Step { value, t0, t1 } => s.push_str(&format!("{t0},{t1},{value},{value},step\n")),
                Piece::Continuous { s_hi, s_lo, t0, t1, .. } => {
                    s.push_str(&format!("{t0},{t1},{s_hi},{s_lo},power\n"))
                }
            }
        }
        s
    }
}

/// `μ{|f| > s}` for a grid function.
pub fn distribution_function(f: &GridFunction, mu: &PowerMeasure, s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return domain(format!("level must be >= 0, got {s}"));
    }
    Ok(Layout::from_grid(f, mu).dist(s))
}

pub fn decreasing_rearrangement(f: &GridFunction, mu: &PowerMeasure) -> RearrangedFunction {
    rearrange(&Layout::from_grid(f, mu))
}

/// Rearrangement of an arbitrary layout. Equal cell values are merged into a
/// single step, so the result does not depend on cell order.
pub fn rearrange(layout: &Layout) -> RearrangedFunction {
    let mut cells: Vec<(f64, f64)> = layout
        .cells
        .iter()
        .copied()
        .filter(|&(v, m)| v > 0.0 && m > 0.0)
        .collect();
    cells.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    // (value, range of cells) so prefix masses are rounded once from the raw cell masses
    let mut groups: Vec<(f64, std::ops::Range<usize>)> = Vec::new();
    let mut i = 0;
    while i < cells.len() {
        let v = cells[i].0;
        let start = i;
        while i < cells.len() && cells[i].0 == v {
            i += 1;
        }
        groups.push((v, start..i));
    }

    let layout = Layout {
        cells: layout.cells.clone(),
        parts: layout.parts.clone(),
    };
    let range = layout.parts_range();
    let mut pieces = Vec::new();
    let mut above = ExactSum::new();
    let mut upper = f64::INFINITY;
    for k in 0..=groups.len() {
        let lower = groups.get(k).map_or(0.0, |g| g.0);
        let offset = above.value();
        if offset.is_infinite() {
            break;
        }
        if let Some((inf, sup)) = range {
            let s_hi = upper.min(sup);
            let s_lo = lower.max(inf);
            if s_hi > s_lo {
                let t0 = offset + layout.dist_parts(s_hi);
                let t1 = offset + layout.dist_parts(s_lo);
                if t1 > t0 {
                    pieces.push(Piece::Continuous { s_hi, s_lo, t0, t1, offset });
                }
                if t1.is_infinite() {
                    break;
                }
            }
        }
        if let Some((v, members)) = groups.get(k) {
            let v = *v;
            let cont = if range.is_some() { layout.dist_parts(v) } else { 0.0 };
            let t0 = offset + cont;
            for c in &cells[members.clone()] {
                above.add(c.1);
            }
            let t1 = above.value() + cont;
            pieces.push(Piece::Step { value: v, t0, t1 });
            if t1.is_infinite() {
                break;
            }
            upper = v;
        }
    }
    RearrangedFunction { pieces, layout }
}

/// `‖f‖_{(p,q)}` of a grid function; `+∞` is a legal result.
pub fn lorentz_norm(f: &GridFunction, mu: &PowerMeasure, idx: LorentzIndex) -> f64 {
    lorentz_norm_of(&decreasing_rearrangement(f, mu), idx)
}

/// `‖f‖_{(p,q)}` from a rearrangement.
pub fn lorentz_norm_of(fs: &RearrangedFunction, idx: LorentzIndex) -> f64 {
    let LorentzIndex { p, q } = idx;
    if fs.pieces.is_empty() {
        return 0.0;
    }
    if p.is_infinite() {
        let top = fs.eval(0.0);
        return if q.is_infinite() { top } else { f64::INFINITY };
    }
    if q.is_infinite() {
        return weak_norm(fs, p);
    }
    let a = q / p;
    let mut total = ExactSum::new();
    for piece in &fs.pieces {
        match *piece {
            Piece::Step { value, t0, t1 } => {
                if t1.is_infinite() {
                    return f64::INFINITY;
                }
                total.add(value.powf(q) * (t1.powf(a) - t0.powf(a)) / a);
            }
            Piece::Continuous { s_hi, s_lo, t1, offset, .. } => {
                let v = continuous_lorentz_integral(fs, p, q, s_hi, s_lo, t1, offset);
                if v.is_infinite() {
                    return f64::INFINITY;
                }
                total.add(v);
            }
        }
    }
    total.value().powf(1.0 / q)
}

/// Exponent `γ` with `f*(t) ~ t^γ` as `t → ∞` (tails) or `t → 0` (heads).
fn part_rate(part: &ContinuousPart) -> f64 {
    part.exponent / part.dim
}

fn continuous_lorentz_integral(
    fs: &RearrangedFunction,
    p: f64,
    q: f64,
    s_hi: f64,
    s_lo: f64,
    t1: f64,
    offset: f64,
) -> f64 {
    let layout = &fs.layout;
    if t1.is_infinite() {
        // f*(t) ~ t^{e/d} at infinity from parts reaching r = ∞
        let worst = layout
            .parts
            .iter()
            .filter(|pt| pt.hi.is_infinite() || (pt.lo == 0.0 && pt.dim == 0.0))
            .map(|pt| if pt.dim == 0.0 { f64::INFINITY } else { part_rate(pt) })
            .fold(f64::NEG_INFINITY, f64::max);
        if !(1.0 / p + worst < 0.0) {
            return f64::INFINITY;
        }
    }
    if s_hi.is_infinite() {
        let worst = layout
            .parts
            .iter()
            .filter(|pt| pt.lo == 0.0 && pt.exponent < 0.0)
            .map(|pt| if pt.dim == 0.0 { f64::NEG_INFINITY } else { part_rate(pt) })
            .fold(f64::INFINITY, f64::min);
        if !(1.0 / p + worst > 0.0) {
            return f64::INFINITY;
        }
    }
    let a = q / p;
    let phi = |s: f64| -> f64 {
        let t = offset + layout.dist_parts(s);
        if t <= 0.0 {
            return 0.0;
        }
        t.powf(a - 1.0) * s.powf(q) * layout.slope_parts(s)
    };
    match (s_lo > 0.0, s_hi.is_finite()) {
        (true, true) => quad::integrate_log(phi, s_lo, s_hi),
        (true, false) => quad::integrate_log_to_inf(phi, s_lo),
        (false, true) => quad::integrate_log_to_inf(|w| phi(1.0 / w) / (w * w), 1.0 / s_hi),
        (false, false) => {
            quad::integrate_log_to_inf(phi, 1.0)
                + quad::integrate_log_to_inf(|w| phi(1.0 / w) / (w * w), 1.0)
        }
    }
}

/// `sup_t t^{1/p} f*(t)`.
fn weak_norm(fs: &RearrangedFunction, p: f64) -> f64 {
    let layout = &fs.layout;
    let mut best = 0.0f64;
    for piece in &fs.pieces {
        match *piece {
            Piece::Step { value, t1, .. } => best = best.max(value * t1.powf(1.0 / p)),
            Piece::Continuous { s_hi, s_lo, t0, t1, offset } => {
                let score = |sigma: f64| -> f64 {
                    let s = sigma.exp();
                    s * (offset + layout.dist_parts(s)).powf(1.0 / p)
                };
                if s_hi.is_finite() {
                    best = best.max(s_hi * t0.powf(1.0 / p));
                } else {
                    let rate = layout
                        .parts
                        .iter()
                        .filter(|pt| pt.lo == 0.0 && pt.exponent < 0.0)
                        .map(part_rate)
                        .fold(f64::INFINITY, f64::min);
                    if 1.0 / p + rate < 0.0 {
                        return f64::INFINITY;
                    }
                }
                if s_lo > 0.0 {
                    best = best.max(s_lo * t1.powf(1.0 / p));
                } else if t1.is_infinite() {
                    let rate = layout
                        .parts
                        .iter()
                        .filter(|pt| pt.hi.is_infinite())
                        .map(part_rate)
                        .fold(f64::NEG_INFINITY, f64::max);
                    if 1.0 / p + rate > 0.0 {
                        return f64::INFINITY;
                    }
                }
                let hi = if s_hi.is_finite() { s_hi.ln() } else { s_lo.max(1e-300).ln() + 80.0 };
                let lo = if s_lo > 0.0 { s_lo.ln() } else { hi - 80.0 };
                best = best.max(golden_max(&score, lo, hi));
            }
        }
    }
    best
}

/// Maximum of `f` on `[lo, hi]`: dense scan, then golden-section refinement.
fn golden_max<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> f64 {
    const N: usize = 256;
    let h = (hi - lo) / N as f64;
    let (mut arg, mut val) = (lo, f(lo));
    for k in 1..=N {
        let x = lo + k as f64 * h;
        let v = f(x);
        if v > val {
            arg = x;
            val = v;
        }
    }
    let (mut a, mut b) = ((arg - h).max(lo), (arg + h).min(hi));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        if (b - a).abs() < 1e-14 * (1.0 + a.abs()) {
            break;
        }
    }
    val.max(fc).max(fd)
}

/// `sup_α α · d_f(α)^{1/p}` over the jump levels of a step layout.
pub fn weak_norm_by_distribution(layout: &Layout, p: f64) -> f64 {
    let mut levels: Vec<f64> = layout.cells.iter().map(|c| c.0).filter(|v| *v > 0.0).collect();
    levels.sort_by(|a, b| b.partial_cmp(a).unwrap());
    levels.dedup();
    levels
        .iter()
        .map(|&v| {
            // d_f(α) for α just below v: every cell with value >= v
            let m = fsum(layout.cells.iter().filter(|c| c.0 >= v).map(|c| c.1));
            v * m.powf(1.0 / p)
        })
        .fold(0.0, f64::max)
}

/// Both sides of the Hardy-Littlewood inequality and the Lorentz-Hölder
/// majorant `‖f‖_{(p,q)} ‖g‖_{(p',q')}` when an index is requested.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HlPairing {
    pub lhs: f64,
    pub rhs: f64,
    pub majorant: Option<f64>,
}

pub fn hl_pairing(
    f: &GridFunction,
    g: &GridFunction,
    mu: &PowerMeasure,
    idx: Option<LorentzIndex>,
) -> Result<HlPairing> {
    let lhs = crate::measure_grid::integrate(&f.mul(g)?, mu)?.abs();
    let fs = decreasing_rearrangement(f, mu);
    let gs = decreasing_rearrangement(g, mu);
    let rhs = fs.pair(&gs);
    let majorant = idx.map(|i| lorentz_norm_of(&fs, i) * lorentz_norm_of(&gs, i.conjugate()));
    Ok(HlPairing { lhs, rhs, majorant })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure_grid::{LogGrid, PowerPart};
    use approx::assert_relative_eq;

    fn mu(d: f64, lo: f64) -> PowerMeasure {
        PowerMeasure::new(d, lo).unwrap()
    }

    fn inverse_square(x_max: f64) -> GridFunction {
        // r^{-2} on [1, ∞) with an exact tail; cells hold exact averages
        GridFunction::power(LogGrid::new(1.0, x_max, 1).unwrap(), &mu(3.0, 1.0), 1.0, -2.0, true).unwrap()
    }

    #[test]
    fn distribution_of_indicator() {
        let f = GridFunction::new(LogGrid::new(1.0, 2.0, 1).unwrap(), vec![1.0]).unwrap();
        let m = mu(3.0, 1.0);
        assert_relative_eq!(distribution_function(&f, &m, 0.5).unwrap(), 7.0 / 3.0);
        assert_eq!(distribution_function(&f, &m, 1.0).unwrap(), 0.0);
        assert!(distribution_function(&f, &m, -1.0).is_err());
    }

    #[test]
    fn distribution_of_power_tail() {
        // pure tail: zero cell, r^{-2} beyond x_max = 1 + tiny
        let g = LogGrid::new(1.0, 1.0 + 1e-12, 1).unwrap();
        let f = GridFunction::new(g, vec![1.0]).unwrap().with_tail(PowerPart::new(1.0, -2.0));
        let d = distribution_function(&f, &mu(3.0, 1.0), 0.25).unwrap();
        assert_relative_eq!(d, 7.0 / 3.0, max_relative = 1e-10);
    }

    #[test]
    fn distribution_of_far_field_profile() {
        // g(r') = r'^{-2} on (2, ∞), d = 3: (α^{-3/2} - 8)/3 below 1/4
        let m = mu(3.0, 1.0);
        let g = GridFunction::zeros(LogGrid::new(1.0, 2.0, 1).unwrap()).with_tail(PowerPart::new(1.0, -2.0));
        for alpha in [0.01f64, 0.1, 0.2] {
            let expect = (alpha.powf(-1.5) - 8.0) / 3.0;
            assert_relative_eq!(distribution_function(&g, &m, alpha).unwrap(), expect, max_relative = 1e-12);
        }
        assert_eq!(distribution_function(&g, &m, 0.25).unwrap(), 0.0);
        assert_eq!(distribution_function(&g, &m, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn rearrangement_sorts_with_masses() {
        let f = GridFunction::new(LogGrid::new(1.0, 4.0, 2).unwrap(), vec![2.0, 5.0]).unwrap();
        let fs = decreasing_rearrangement(&f, &mu(1.0, 1.0));
        assert_eq!(fs.step_values(), vec![5.0, 2.0]);
        assert_relative_eq!(fs.eval(1.0), 5.0);
        assert_relative_eq!(fs.eval(2.5), 2.0);
        assert_eq!(fs.eval(3.5), 0.0);
        assert_relative_eq!(fs.support_measure(), 3.0, max_relative = 1e-15);
    }

    #[test]
    fn ties_merge_into_one_step() {
        let g = LogGrid::new(1.0, 16.0, 4).unwrap();
        let f = GridFunction::new(g, vec![1.0, 3.0, 1.0, 3.0]).unwrap();
        let fs = decreasing_rearrangement(&f, &mu(2.0, 1.0));
        assert_eq!(fs.pieces().len(), 2);
    }

    #[test]
    fn rearrangement_of_inverse_square() {
        let fs = decreasing_rearrangement(&inverse_square(1.0 + 1e-12), &mu(3.0, 1.0));
        for t in [0.01, 0.5, 1.0, 7.0, 100.0] {
            assert_relative_eq!(fs.eval(t), (3.0 * t + 1.0).powf(-2.0 / 3.0), max_relative = 1e-9);
        }
    }

    #[test]
    fn indicator_norms() {
        // mass 8 under d = 1
        let f = GridFunction::new(LogGrid::new(1.0, 9.0, 1).unwrap(), vec![1.0]).unwrap();
        let m = mu(1.0, 1.0);
        assert_relative_eq!(lorentz_norm(&f, &m, LorentzIndex::new(3.0, 1.0).unwrap()), 6.0, max_relative = 1e-14);
        assert_relative_eq!(lorentz_norm(&f, &m, LorentzIndex::new(3.0, f64::INFINITY).unwrap()), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn weak_norm_of_inverse_square() {
        let n = lorentz_norm(&inverse_square(1.0 + 1e-12), &mu(3.0, 1.0), LorentzIndex::new(3.0, f64::INFINITY).unwrap());
        assert_relative_eq!(n, 12f64.powf(-1.0 / 3.0), max_relative = 1e-9);
    }

    #[test]
    fn strong_norm_of_power_tail_matches_lp() {
        // (p, p) norm equals the L^p norm: r^{-2} in L^3(r^2 dr) on [1, ∞) is (1/3)^{1/3}
        let f = inverse_square(1.0 + 1e-12);
        let m = mu(3.0, 1.0);
        let l = lorentz_norm(&f, &m, LorentzIndex::new(3.0, 3.0).unwrap());
        assert_relative_eq!(l, f.lp_norm(&m, 3.0).unwrap(), max_relative = 1e-9);
        assert_relative_eq!(l, (1.0f64 / 3.0).powf(1.0 / 3.0), max_relative = 1e-9);
    }

    #[test]
    fn non_decaying_tail_is_infinite() {
        // r^{-1} with d = 3 is not in L^{3,1}
        let g = LogGrid::new(1.0, 2.0, 1).unwrap();
        let f = GridFunction::new(g, vec![0.7]).unwrap().with_tail(PowerPart::new(1.0, -1.0));
        assert!(lorentz_norm(&f, &mu(3.0, 1.0), LorentzIndex::new(3.0, 1.0).unwrap()).is_infinite());
        assert!(lorentz_norm(&f, &mu(3.0, 1.0), LorentzIndex::new(3.0, f64::INFINITY).unwrap()).is_finite());
    }

    #[test]
    fn pairing_equality_and_disjoint() {
        let g = LogGrid::new(1.0, 4.0, 2).unwrap();
        let m = mu(2.0, 1.0);
        let a = GridFunction::new(g.clone(), vec![1.0, 0.0]).unwrap();
        let r = hl_pairing(&a, &a, &m, None).unwrap();
        assert_relative_eq!(r.lhs, 1.5, max_relative = 1e-15);
        assert_relative_eq!(r.rhs, 1.5, max_relative = 1e-15);
        let b = GridFunction::new(g, vec![0.0, 2.0]).unwrap();
        let r = hl_pairing(&a, &b, &m, Some(LorentzIndex::new(2.0, 2.0).unwrap())).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.rhs > 0.0);
        assert!(r.rhs <= r.majorant.unwrap());
    }

    #[test]
    fn pairing_with_continuous_parts() {
        // f = g = r^{-2}: ∫ f* g* dt = ∫ r^{-4} r^2 dr over [1, ∞) = 1
        let f = inverse_square(1.0 + 1e-12);
        let r = hl_pairing(&f, &f, &mu(3.0, 1.0), None).unwrap();
        assert_relative_eq!(r.rhs, 1.0, max_relative = 1e-6);
        assert_relative_eq!(r.lhs, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn two_tails_bisection() {
        // head r^{1} on (0,1) and tail r^{-3} on (2, ∞), d = 1: compare eval with d_f
        let g = LogGrid::new(1.0, 2.0, 1).unwrap();
        let f = GridFunction::new(g, vec![0.3])
            .unwrap()
            .with_head(PowerPart::new(1.0, 1.0))
            .with_tail(PowerPart::new(4.0, -3.0));
        let m = mu(1.0, 0.0);
        let fs = decreasing_rearrangement(&f, &m);
        for t in [0.1, 0.4, 0.9, 1.3, 1.9] {
            let s = fs.eval(t);
            // d_f(s) <= t < d_f(s - ε)
            let d = distribution_function(&f, &m, s * (1.0 + 1e-9)).unwrap();
            let d_minus = distribution_function(&f, &m, s * (1.0 - 1e-9)).unwrap();
            assert!(d <= t + 1e-7 && t <= d_minus + 1e-7, "t={t} s={s} d={d} d-={d_minus}");
        }
    }

    #[test]
    fn weak_norm_identity_on_steps() {
        let f = GridFunction::new(LogGrid::new(1.0, 32.0, 5).unwrap(), vec![0.5, 4.0, 1.0, 4.0, 0.1]).unwrap();
        let m = mu(3.0, 1.0);
        let via_t = lorentz_norm(&f, &m, LorentzIndex::new(2.5, f64::INFINITY).unwrap());
        let via_alpha = weak_norm_by_distribution(&Layout::from_grid(&f, &m), 2.5);
        assert_relative_eq!(via_t, via_alpha, max_relative = 1e-14);
    }

    #[test]
    fn rearranged_csv_has_header() {
        let f = GridFunction::new(LogGrid::new(1.0, 4.0, 2).unwrap(), vec![2.0, 5.0]).unwrap();
        let csv = decreasing_rearrangement(&f, &mu(1.0, 1.0)).to_csv();
        assert!(csv.starts_with("t0,t1,value_start,value_end,kind\n"));
        assert_eq!(csv.lines().count(), 3);
    }
}
