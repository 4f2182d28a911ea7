//! Power-weighted half-line measures, geometric grids and piecewise-constant
//! functions with analytic power-law ends.
//!
//! A [`GridFunction`] is constant on each cell of a [`LogGrid`]. Outside the
//! grid it is either zero or a declared power `c·r^e` (the *head* below
//! `x_min`, the *tail* above `x_max`). Integrals against a [`PowerMeasure`]
//! are exact for the cells and closed-form for the power ends; a non-integrable
//! end is reported as [`Error::Divergent`], never truncated.

use crate::error::{domain, DivergenceSign, Error, Result};
use crate::quad;
use crate::sum::ExactSum;

/// The measure `r^{d-1} dr` on `[lower, ∞)`.
///
/// `dim == 0` is the Haar measure `dr/r` of the multiplicative group, built
/// with [`PowerMeasure::haar`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerMeasure {
    dim: f64,
    lower: f64,
}

impl PowerMeasure {
    pub fn new(dim: f64, lower: f64) -> Result<Self> {
        if !(dim.is_finite() && dim >= 1.0) {
            return domain(format!("measure dimension must be >= 1, got {dim}"));
        }
        if lower != 0.0 && lower != 1.0 {
            return domain(format!("lower endpoint must be 0 or 1, got {lower}"));
        }
        Ok(Self { dim, lower })
    }

    /// `dx/x` on `(0, ∞)`.
    pub fn haar() -> Self {
        Self {
            dim: 0.0,
            lower: 0.0,
        }
    }

    pub fn dim(&self) -> f64 {
        self.dim
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    /// Mass of `[a, b]`; `b` may be infinite.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        if self.dim == 0.0 {
            if a <= 0.0 || b.is_infinite() {
                return f64::INFINITY;
            }
            return (b / a).ln();
        }
        if b.is_infinite() {
            return f64::INFINITY;
        }
        if self.dim == 1.0 {
            return b - a;
        }
        (b.powf(self.dim) - a.powf(self.dim)) / self.dim
    }

    /// `∫_a^b r^e dμ(r)`, `b` possibly infinite.
    pub fn power_moment(&self, exponent: f64, a: f64, b: f64) -> Result<f64> {
        power_integral(exponent + self.dim - 1.0, a, b)
    }
}

/// `∫_a^b y^g dy` in closed form, `0 <= a <= b <= ∞`.
pub fn power_integral(g: f64, a: f64, b: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let k = g + 1.0;
    if b.is_infinite() && k >= 0.0 {
        return Err(Error::Divergent {
            what: format!("∫ y^{g} dy up to ∞"),
            exponent: g,
            sign: DivergenceSign::Positive,
        });
    }
    if a == 0.0 && k <= 0.0 {
        return Err(Error::Divergent {
            what: format!("∫ y^{g} dy down to 0"),
            exponent: g,
            sign: DivergenceSign::Positive,
        });
    }
    if k == 0.0 {
        return Ok((b / a).ln());
    }
    let hi = if b.is_infinite() { 0.0 } else { b.powf(k) };
    let lo = if a == 0.0 { 0.0 } else { a.powf(k) };
    Ok((hi - lo) / k)
}

/// Geometrically spaced cell boundaries `x_min · ρ^i`, `i = 0..=n_cells`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogGrid {
    x_min: f64,
    x_max: f64,
    n_cells: usize,
}

impl LogGrid {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize) -> Result<Self> {
        if !(x_min > 0.0 && x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return domain(format!("grid needs 0 < x_min < x_max, got [{x_min}, {x_max}]"));
        }
        if n_cells == 0 {
            return domain("grid needs at least one cell");
        }
        Ok(Self {
            x_min,
            x_max,
            n_cells,
        })
    }

    /// Grid with (at least) `per_decade` cells per factor of ten.
    pub fn per_decade(x_min: f64, x_max: f64, per_decade: usize) -> Result<Self> {
        let decades = (x_max / x_min).log10();
        let n = ((decades * per_decade as f64) - 1e-9).ceil().max(1.0) as usize;
        Self::new(x_min, x_max, n)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn log_step(&self) -> f64 {
        (self.x_max / self.x_min).ln() / self.n_cells as f64
    }

    pub fn ratio(&self) -> f64 {
        self.log_step().exp()
    }

    pub fn boundary(&self, i: usize) -> f64 {
        if i == 0 {
            self.x_min
        } else if i >= self.n_cells {
            self.x_max
        } else {
            self.x_min * (i as f64 * self.log_step()).exp()
        }
    }

    pub fn boundaries(&self) -> Vec<f64> {
        (0..=self.n_cells).map(|i| self.boundary(i)).collect()
    }

    pub fn cell(&self, i: usize) -> (f64, f64) {
        (self.boundary(i), self.boundary(i + 1))
    }

    /// Geometric midpoint of cell `i`.
    pub fn midpoint(&self, i: usize) -> f64 {
        let (a, b) = self.cell(i);
        (a * b).sqrt()
    }

    /// Index of the cell `[a, b)` containing `x`.
    pub fn locate(&self, x: f64) -> Option<usize> {
        if !(x >= self.x_min && x < self.x_max) {
            return None;
        }
        let guess = ((x / self.x_min).ln() / self.log_step()).floor() as usize;
        let mut i = guess.min(self.n_cells - 1);
        while i > 0 && x < self.boundary(i) {
            i -= 1;
        }
        while i + 1 < self.n_cells && x >= self.boundary(i + 1) {
            i += 1;
        }
        Some(i)
    }

    /// Same range, every cell split in two.
    pub fn refined(&self) -> Self {
        Self {
            n_cells: 2 * self.n_cells,
            ..self.clone()
        }
    }
}

/// A power `coeff · r^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPart {
    pub coeff: f64,
    pub exponent: f64,
}

impl PowerPart {
    pub fn new(coeff: f64, exponent: f64) -> Self {
        Self { coeff, exponent }
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.coeff * r.powf(self.exponent)
    }
}

/// Piecewise-constant function on a [`LogGrid`] with optional power ends.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: LogGrid,
    values: Vec<f64>,
    head: Option<PowerPart>,
    tail: Option<PowerPart>,
}

impl GridFunction {
    pub fn new(grid: LogGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return domain(format!(
                "{} values for a grid of {} cells",
                values.len(),
                grid.n_cells()
            ));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return domain(format!("non-finite cell value {v}"));
        }
        Ok(Self {
            grid,
            values,
            head: None,
            tail: None,
        })
    }

    pub fn zeros(grid: LogGrid) -> Self {
        let n = grid.n_cells();
        Self {
            grid,
            values: vec![0.0; n],
            head: None,
            tail: None,
        }
    }

    /// Continues the function as `coeff · r^exponent` beyond `x_max`.
    pub fn with_tail(mut self, tail: PowerPart) -> Self {
        self.tail = Some(tail);
        self
    }

    /// Continues the function as `coeff · r^exponent` below `x_min`.
    pub fn with_head(mut self, head: PowerPart) -> Self {
        self.head = Some(head);
        self
    }

    /// Cell values are the `μ`-weighted averages of `f`, so integrals of the
    /// result against `μ` agree with those of `f` up to quadrature error.
    pub fn from_fn_average<F: Fn(f64) -> f64>(grid: LogGrid, mu: &PowerMeasure, f: F) -> Self {
        let d = mu.dim();
        let values = (0..grid.n_cells())
            .map(|i| {
                let (a, b) = grid.cell(i);
                let m = mu.mass(a, b);
                quad::integrate(|r| f(r) * r.powf(d - 1.0), a, b) / m
            })
            .collect();
        Self {
            grid,
            values,
            head: None,
            tail: None,
        }
    }

    /// Cell values are `f` at the geometric cell midpoints.
    pub fn from_fn_midpoint<F: Fn(f64) -> f64>(grid: LogGrid, f: F) -> Self {
        let values = (0..grid.n_cells()).map(|i| f(grid.midpoint(i))).collect();
        Self {
            grid,
            values,
            head: None,
            tail: None,
        }
    }

    /// `coeff · r^exponent` as exact `μ`-averages on the cells, optionally
    /// continued analytically past `x_max`.
    pub fn power(grid: LogGrid, mu: &PowerMeasure, coeff: f64, exponent: f64, with_tail: bool) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.n_cells());
        for i in 0..grid.n_cells() {
            let (a, b) = grid.cell(i);
            values.push(coeff * mu.power_moment(exponent, a, b)? / mu.mass(a, b));
        }
        let mut f = Self::new(grid, values)?;
        if with_tail {
            f.tail = Some(PowerPart::new(coeff, exponent));
        }
        Ok(f)
    }

    /// Indicator of the union of cells lying inside `[a, b]`.
    pub fn indicator(grid: LogGrid, a: f64, b: f64) -> Self {
        let values = (0..grid.n_cells())
            .map(|i| {
                let (lo, hi) = grid.cell(i);
                if lo >= a * (1.0 - 1e-12) && hi <= b * (1.0 + 1e-12) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        Self {
            grid,
            values,
            head: None,
            tail: None,
        }
    }

    pub fn grid(&self) -> &LogGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn head(&self) -> Option<PowerPart> {
        self.head
    }

    pub fn tail(&self) -> Option<PowerPart> {
        self.tail
    }

    pub fn tail_exponent(&self) -> Option<f64> {
        self.tail.map(|t| t.exponent)
    }

    /// True when the function vanishes outside the grid.
    pub fn is_compact(&self) -> bool {
        self.head.is_none_or(|h| h.coeff == 0.0) && self.tail.is_none_or(|t| t.coeff == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < self.grid.x_min() {
            return self.head.map_or(0.0, |h| h.eval(x));
        }
        if x >= self.grid.x_max() {
            return self.tail.map_or(0.0, |t| t.eval(x));
        }
        self.values[self.grid.locate(x).expect("x inside grid")]
    }

    pub fn scale(&self, lambda: f64) -> Self {
        let sc = |p: PowerPart| PowerPart::new(p.coeff * lambda, p.exponent);
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * lambda).collect(),
            head: self.head.map(sc),
            tail: self.tail.map(sc),
        }
    }

    /// Pointwise `|f|^p`.
    pub fn abs_pow(&self, p: f64) -> Self {
        let pw = |q: PowerPart| PowerPart::new(q.coeff.abs().powf(p), q.exponent * p);
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.abs().powf(p)).collect(),
            head: self.head.map(pw),
            tail: self.tail.map(pw),
        }
    }

    /// Pointwise product with another function on the same grid.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return domain("pointwise product needs identical grids");
        }
        let both = |a: Option<PowerPart>, b: Option<PowerPart>| match (a, b) {
            (Some(a), Some(b)) => Some(PowerPart::new(a.coeff * b.coeff, a.exponent + b.exponent)),
            _ => None,
        };
        Ok(Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
            head: both(self.head, other.head),
            tail: both(self.tail, other.tail),
        })
    }

    /// Linear combination `a·self + b·other` on a shared grid. Power ends must
    /// share exponents (or be absent on one side).
    pub fn lin_comb(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.grid != other.grid {
            return domain("linear combination needs identical grids");
        }
        let comb = |x: Option<PowerPart>, y: Option<PowerPart>| -> Result<Option<PowerPart>> {
            Ok(match (x, y) {
                (None, None) => None,
                (Some(x), None) => Some(PowerPart::new(a * x.coeff, x.exponent)),
                (None, Some(y)) => Some(PowerPart::new(b * y.coeff, y.exponent)),
                (Some(x), Some(y)) if x.exponent == y.exponent => {
                    Some(PowerPart::new(a * x.coeff + b * y.coeff, x.exponent))
                }
                _ => return domain("power ends with different exponents"),
            })
        };
        Ok(Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
            head: comb(self.head, other.head)?,
            tail: comb(self.tail, other.tail)?,
        })
    }

    /// Same function on the grid with every cell split in two.
    pub fn refined(&self) -> Self {
        Self {
            grid: self.grid.refined(),
            values: self.values.iter().flat_map(|&v| [v, v]).collect(),
            head: self.head,
            tail: self.tail,
        }
    }

    /// `‖f‖_{L^p(μ)}`, `p = ∞` allowed.
    pub fn lp_norm(&self, mu: &PowerMeasure, p: f64) -> Result<f64> {
        if p.is_infinite() {
            let mut m = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (part, lo, hi) in self.parts(mu) {
                let a = part.eval(lo.max(f64::MIN_POSITIVE)).abs();
                let b = if hi.is_infinite() {
                    if part.exponent > 0.0 { f64::INFINITY } else if part.exponent == 0.0 { part.coeff.abs() } else { 0.0 }
                } else {
                    part.eval(hi).abs()
                };
                m = m.max(a).max(b);
            }
            return Ok(m);
        }
        Ok(integrate(&self.abs_pow(p), mu)?.powf(1.0 / p))
    }

    /// Power ends together with the interval each one covers under `μ`.
    pub(crate) fn parts(&self, mu: &PowerMeasure) -> Vec<(PowerPart, f64, f64)> {
        let mut out = Vec::new();
        if let Some(h) = self.head {
            if h.coeff != 0.0 && mu.lower() < self.grid.x_min() {
                out.push((h, mu.lower(), self.grid.x_min()));
            }
        }
        if let Some(t) = self.tail {
            if t.coeff != 0.0 {
                out.push((t, self.grid.x_max(), f64::INFINITY));
            }
        }
        out
    }

    /// Writes the CSV exchange format: a `# grid x_min x_max n_cells
    /// tail_exponent [tail_coeff]` header then one cell value per line.
    pub fn to_csv(&self) -> Result<String> {
        if self.head.is_some_and(|h| h.coeff != 0.0) {
            return Err(Error::Unsupported("CSV format has no head power".into()));
        }
        let tail = match self.tail {
            None => "none".to_string(),
            Some(t) => format!("{} {}", t.exponent, t.coeff),
        };
        let mut s = format!(
            "# grid {} {} {} {}\n",
            self.grid.x_min(),
            self.grid.x_max(),
            self.grid.n_cells(),
            tail
        );
        for v in &self.values {
            s.push_str(&format!("{v}\n"));
        }
        Ok(s)
    }

    /// Parses the CSV exchange format. Without an explicit `tail_coeff` the
    /// tail continues the last cell value at `x_max`.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty input".into()))?;
        let fields: Vec<&str> = header
            .strip_prefix('#')
            .ok_or_else(|| Error::Parse("missing '# grid' header".into()))?
            .split_whitespace()
            .collect();
        if fields.len() < 5 || fields.len() > 6 || fields[0] != "grid" {
            return Err(Error::Parse(format!("bad header '{header}'")));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| Error::Parse(format!("'{s}': {e}")))
        };
        let x_min = num(fields[1])?;
        let x_max = num(fields[2])?;
        let n: usize = fields[3]
            .parse()
            .map_err(|e| Error::Parse(format!("n_cells '{}': {e}", fields[3])))?;
        let grid = LogGrid::new(x_min, x_max, n)?;
        let values = lines.map(num).collect::<Result<Vec<_>>>()?;
        let mut f = Self::new(grid, values)?;
        if fields[4] != "none" {
            let e = num(fields[4])?;
            let c = match fields.get(5) {
                Some(c) => num(c)?,
                None => f.values[n - 1] / x_max.powf(e),
            };
            f.tail = Some(PowerPart::new(c, e));
        }
        Ok(f)
    }
}

/// Mass of every cell of `grid` under `μ`.
pub fn cell_measures(grid: &LogGrid, mu: &PowerMeasure) -> Vec<f64> {
    (0..grid.n_cells())
        .map(|i| {
            let (a, b) = grid.cell(i);
            mu.mass(a, b)
        })
        .collect()
}

/// `∫_{x_max}^∞ r^exponent dμ(r)`.
pub fn tail_complete(exponent: f64, x_max: f64, mu: &PowerMeasure) -> Result<f64> {
    if exponent + mu.dim() >= 0.0 {
        return Err(Error::Divergent {
            what: format!("power tail r^{exponent} against r^{}dr", mu.dim() - 1.0),
            exponent,
            sign: DivergenceSign::Positive,
        });
    }
    mu.power_moment(exponent, x_max, f64::INFINITY)
}

/// `∫ f dμ`: exact over the cells, closed form over the power ends.
pub fn integrate(f: &GridFunction, mu: &PowerMeasure) -> Result<f64> {
    if f.grid.x_min() < mu.lower() {
        return domain(format!(
            "grid starts at {} below the measure support [{}, ∞)",
            f.grid.x_min(),
            mu.lower()
        ));
    }
    let masses = cell_measures(&f.grid, mu);
    let mut total = ExactSum::new();
    total.extend(f.values.iter().zip(&masses).map(|(v, m)| v * m));
    for (part, lo, hi) in f.parts(mu) {
        let sign = if part.coeff > 0.0 {
            DivergenceSign::Positive
        } else {
            DivergenceSign::Negative
        };
        let v = if hi.is_infinite() {
            tail_complete(part.exponent, lo, mu)
        } else {
            mu.power_moment(part.exponent, lo, hi)
        };
        match v {
            Ok(v) => total.add(part.coeff * v),
            Err(Error::Divergent { what, exponent, .. }) => {
                return Err(Error::Divergent { what, exponent, sign })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(total.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m(d: f64, lo: f64) -> PowerMeasure {
        PowerMeasure::new(d, lo).unwrap()
    }

    #[test]
    fn indicator_of_unit_interval() {
        let g = LogGrid::new(1.0, 2.0, 1).unwrap();
        let f = GridFunction::new(g, vec![1.0]).unwrap();
        assert_relative_eq!(integrate(&f, &m(3.0, 1.0)).unwrap(), 7.0 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn zero_function() {
        let f = GridFunction::zeros(LogGrid::new(1.0, 10.0, 7).unwrap());
        assert_eq!(integrate(&f, &m(3.0, 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn power_with_tail_is_exact() {
        let mu = m(3.0, 1.0);
        let f = GridFunction::power(LogGrid::new(1.0, 50.0, 40).unwrap(), &mu, 1.0, -4.0, true).unwrap();
        assert_relative_eq!(integrate(&f, &mu).unwrap(), 1.0, max_relative = 1e-13);
    }

    #[test]
    fn cell_mass_examples() {
        assert_eq!(cell_measures(&LogGrid::new(1.0, 2.0, 1).unwrap(), &m(3.0, 1.0)), vec![7.0 / 3.0]);
        assert_eq!(cell_measures(&LogGrid::new(1.0, 2.0, 1).unwrap(), &m(1.0, 1.0)), vec![1.0]);
        let two = cell_measures(&LogGrid::new(1.0, 4.0, 2).unwrap(), &m(1.0, 1.0));
        assert_relative_eq!(two[0], 1.0, max_relative = 1e-15);
        assert_relative_eq!(two[1], 2.0, max_relative = 1e-15);
    }

    #[test]
    fn tail_examples() {
        assert_relative_eq!(tail_complete(-4.0, 2.0, &m(3.0, 1.0)).unwrap(), 0.5, max_relative = 1e-15);
        assert_relative_eq!(tail_complete(-2.0, 1.0, &m(1.0, 1.0)).unwrap(), 1.0, max_relative = 1e-15);
        assert!(matches!(
            tail_complete(-1.0, 1.0, &m(1.0, 1.0)),
            Err(Error::Divergent { .. })
        ));
    }

    #[test]
    fn divergent_tail_carries_sign() {
        let f = GridFunction::zeros(LogGrid::new(1.0, 2.0, 1).unwrap()).with_tail(PowerPart::new(-2.0, -1.0));
        match integrate(&f, &m(1.0, 1.0)) {
            Err(Error::Divergent { sign, .. }) => assert_eq!(sign, DivergenceSign::Negative),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn head_on_zero_based_measure() {
        // r^{-1} on (0, 1) against r^2 dr: ∫ r dr = 1/2
        let mu = m(3.0, 0.0);
        let f = GridFunction::zeros(LogGrid::new(1.0, 2.0, 1).unwrap()).with_head(PowerPart::new(1.0, -1.0));
        assert_relative_eq!(integrate(&f, &mu).unwrap(), 0.5, max_relative = 1e-15);
    }

    #[test]
    fn grid_below_support_rejected() {
        let f = GridFunction::zeros(LogGrid::new(0.5, 2.0, 3).unwrap());
        assert!(integrate(&f, &m(2.0, 1.0)).is_err());
    }

    #[test]
    fn geometric_boundaries() {
        let g = LogGrid::new(1.0, 1000.0, 3).unwrap();
        let b = g.boundaries();
        assert_relative_eq!(b[1], 10.0, max_relative = 1e-14);
        assert_relative_eq!(b[2], 100.0, max_relative = 1e-14);
        assert_eq!(b[3], 1000.0);
        assert_eq!(g.locate(10.0 + 1e-9), Some(1));
        assert_eq!(g.locate(1000.0), None);
    }

    #[test]
    fn csv_round_trip() {
        let mu = m(3.0, 1.0);
        let f = GridFunction::power(LogGrid::new(1.0, 8.0, 3).unwrap(), &mu, 2.0, -4.0, true).unwrap();
        let back = GridFunction::from_csv(&f.to_csv().unwrap()).unwrap();
        assert_eq!(back, f);
        let plain = GridFunction::from_csv("# grid 1 2 2 none\n1\n0.5\n").unwrap();
        assert_eq!(plain.values(), &[1.0, 0.5]);
        assert!(GridFunction::from_csv("1\n2\n").is_err());
    }
}
