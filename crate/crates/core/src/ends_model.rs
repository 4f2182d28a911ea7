//! Radial model of a manifold with a compact core and Euclidean-like ends,
//! and the kernel majorants of the low-energy Riesz transform pieces on it.
//!
//! Every end `E_i` is `[1, ∞)` with measure `r^{n_i - 1} dr`; the core is a
//! single atom of mass `core_mass`. Unspecified constants are set to 1.

use crate::error::{domain, Error, Result};
use crate::hh_operators::{piecewise_apply, Part, PiecewisePowerKernel};
use crate::lorentz::{conjugate_exponent, lorentz_norm_of, rearrange, Layout, LorentzIndex};
use crate::measure_grid::{GridFunction, LogGrid, PowerMeasure, PowerPart};
use crate::sum::ExactSum;

#[derive(Debug, Clone, PartialEq)]
pub struct EndsModel {
    ends: Vec<u32>,
    big_n: u32,
    core_mass: f64,
}

impl EndsModel {
    pub fn new(ends: Vec<u32>, big_n: u32, core_mass: f64) -> Result<Self> {
        if ends.len() < 2 {
            return domain(format!("need at least two ends, got {}", ends.len()));
        }
        if let Some(n) = ends.iter().find(|&&n| n < 3) {
            return domain(format!("end dimension {n} is below 3"));
        }
        let top = *ends.iter().max().expect("nonempty");
        if big_n < top {
            return domain(format!("N = {big_n} is below max n_i = {top}"));
        }
        if !(core_mass > 0.0 && core_mass.is_finite()) {
            return domain(format!("core mass must be positive, got {core_mass}"));
        }
        Ok(Self { ends, big_n, core_mass })
    }

    /// Model with `N = max n_i` and unit core mass.
    pub fn with_ends(ends: &[u32]) -> Result<Self> {
        let top = ends.iter().copied().max().unwrap_or(0);
        Self::new(ends.to_vec(), top, 1.0)
    }

    pub fn ends(&self) -> &[u32] {
        &self.ends
    }

    pub fn n_ends(&self) -> usize {
        self.ends.len()
    }

    pub fn big_n(&self) -> u32 {
        self.big_n
    }

    pub fn core_mass(&self) -> f64 {
        self.core_mass
    }

    pub fn n_star(&self) -> u32 {
        *self.ends.iter().min().expect("nonempty")
    }

    pub fn dim(&self, i: usize) -> f64 {
        self.ends[i] as f64
    }

    pub fn measure(&self, i: usize) -> PowerMeasure {
        PowerMeasure::new(self.dim(i), 1.0).expect("n_i >= 3")
    }

    fn check_end(&self, i: usize) -> Result<()> {
        if i >= self.ends.len() {
            return domain(format!("end index {i} out of range for {} ends", self.ends.len()));
        }
        Ok(())
    }
}

/// A function on the model: constant on the core, radial on each end.
#[derive(Debug, Clone, PartialEq)]
pub struct EndsFunction {
    pub core_value: f64,
    pub ends: Vec<GridFunction>,
}

impl EndsFunction {
    pub fn new(m: &EndsModel, core_value: f64, ends: Vec<GridFunction>) -> Result<Self> {
        if ends.len() != m.n_ends() {
            return domain(format!("{} end functions for {} ends", ends.len(), m.n_ends()));
        }
        if !core_value.is_finite() {
            return domain("core value must be finite");
        }
        for (i, g) in ends.iter().enumerate() {
            if g.grid().x_min() < 1.0 {
                return domain(format!("end {i} grid starts below r = 1"));
            }
            if g.values().iter().any(|v| !v.is_finite()) {
                return domain(format!("end {i} has non-finite values"));
            }
        }
        Ok(Self { core_value, ends })
    }

    pub fn zero(m: &EndsModel, grid: &LogGrid) -> Self {
        Self {
            core_value: 0.0,
            ends: vec![GridFunction::zeros(grid.clone()); m.n_ends()],
        }
    }

    pub fn core_indicator(m: &EndsModel, grid: &LogGrid) -> Self {
        Self {
            core_value: 1.0,
            ..Self::zero(m, grid)
        }
    }

    /// `g` on end `i`, zero on the core and on the other ends.
    pub fn on_end(m: &EndsModel, i: usize, g: GridFunction) -> Result<Self> {
        m.check_end(i)?;
        let mut ends = vec![GridFunction::zeros(g.grid().clone()); m.n_ends()];
        ends[i] = g;
        Self::new(m, 0.0, ends)
    }

    /// Layout of `|f|` over the whole model.
    pub fn layout(&self, m: &EndsModel) -> Layout {
        let mut l = Layout::new();
        l.push_cell(self.core_value, m.core_mass());
        for (i, g) in self.ends.iter().enumerate() {
            l.extend_grid(g, &m.measure(i));
        }
        l
    }

    pub fn lorentz_norm(&self, m: &EndsModel, idx: LorentzIndex) -> f64 {
        lorentz_norm_of(&rearrange(&self.layout(m)), idx)
    }

    /// Pointwise value at radius `r` on end `i`.
    pub fn eval_end(&self, i: usize, r: f64) -> f64 {
        self.ends[i].eval(r)
    }

    pub fn is_zero(&self) -> bool {
        self.core_value == 0.0
            && self
                .ends
                .iter()
                .all(|g| g.values().iter().all(|&v| v == 0.0) && g.tail().is_none_or(|t| t.coeff == 0.0))
    }
}

/// `∫ |f| r^e dμ` over one end, exact on cells and tail.
pub fn end_pairing(f: &GridFunction, mu: &PowerMeasure, e: f64) -> Result<f64> {
    let grid = f.grid();
    let mut acc = ExactSum::new();
    for (i, &v) in f.values().iter().enumerate() {
        if v != 0.0 {
            let (a, b) = grid.cell(i);
            acc.add(v.abs() * mu.power_moment(e, a, b)?);
        }
    }
    if let Some(t) = f.tail().filter(|t| t.coeff != 0.0) {
        acc.add(t.coeff.abs() * mu.power_moment(e + t.exponent, grid.x_max(), f64::INFINITY)?);
    }
    Ok(acc.value())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Table {
    T3,
    T4,
}

impl Table {
    /// End-to-end majorant from end `j` (dimension `nj`) to end `i`.
    fn kernel(self, ni: f64, nj: f64) -> Result<PiecewisePowerKernel> {
        match self {
            // min(r^{-n_i} r'^{2-n_j}, r^{1-n_i} r'^{1-n_j})
            Table::T3 => PiecewisePowerKernel::new(ni - 1.0, nj - 1.0, ni, nj - 2.0),
            // min(r^{-n_i} r'^{1-n_j}, r^{1-n_i} r'^{-n_j})
            Table::T4 => PiecewisePowerKernel::new(ni - 1.0, nj, ni, nj - 1.0),
        }
    }

    /// Exponent of `r'` in the core row.
    fn core_row_exponent(self, nj: f64) -> f64 {
        match self {
            Table::T3 => 1.0 - nj,
            Table::T4 => -nj,
        }
    }
}

fn locate_err(e: Error, from: &str, to: &str) -> Error {
    match e {
        Error::Divergent { what, exponent, sign } => Error::Divergent {
            what: format!("{from} -> {to}: {what}"),
            exponent,
            sign,
        },
        other => other,
    }
}

fn check_out(out: &LogGrid) -> Result<()> {
    if out.x_min() != 1.0 {
        return domain("output grid must start at r = 1");
    }
    Ok(())
}

/// Accumulates end outputs as `μ`-cell averages plus a common `r^{-n}` tail.
struct EndAccumulator {
    values: Vec<f64>,
    tail: Option<f64>,
}

impl EndAccumulator {
    fn new(out: &LogGrid) -> Self {
        Self {
            values: vec![0.0; out.n_cells()],
            tail: Some(0.0),
        }
    }

    fn add(&mut self, g: &GridFunction, tail_exponent: f64) {
        for (a, b) in self.values.iter_mut().zip(g.values()) {
            *a += b;
        }
        self.tail = match (self.tail, g.tail()) {
            (Some(c), Some(t)) if t.exponent == tail_exponent || t.coeff == 0.0 => Some(c + t.coeff),
            _ => None,
        };
    }

    /// Adds `c · r^{-n}` exactly.
    fn add_power(&mut self, out: &LogGrid, mu: &PowerMeasure, c: f64) -> Result<()> {
        if c == 0.0 {
            return Ok(());
        }
        let g = GridFunction::power(out.clone(), mu, c, -mu.dim(), true)?;
        self.add(&g, -mu.dim());
        Ok(())
    }

    fn finish(self, out: &LogGrid, n: f64) -> Result<GridFunction> {
        let g = GridFunction::new(out.clone(), self.values)?;
        Ok(match self.tail {
            Some(c) if c != 0.0 => g.with_tail(PowerPart::new(c, -n)),
            _ => g,
        })
    }
}

fn apply_table(m: &EndsModel, f: &EndsFunction, out: &LogGrid, table: Table) -> Result<EndsFunction> {
    check_out(out)?;
    let core_mass_term = m.core_mass() * f.core_value.abs();
    let mut core = ExactSum::new();
    core.add(core_mass_term);
    for (j, g) in f.ends.iter().enumerate() {
        let nj = m.dim(j);
        core.add(end_pairing(g, &m.measure(j), table.core_row_exponent(nj)).map_err(|e| locate_err(e, &format!("end {j}"), "core"))?);
    }
    let mut ends = Vec::with_capacity(m.n_ends());
    for i in 0..m.n_ends() {
        let ni = m.dim(i);
        let mu_i = m.measure(i);
        let mut acc = EndAccumulator::new(out);
        // core -> end i: r^{-n_i}
        acc.add_power(out, &mu_i, core_mass_term)?;
        for (j, g) in f.ends.iter().enumerate() {
            if g.is_compact() && g.values().iter().all(|&v| v == 0.0) {
                continue;
            }
            let k = table.kernel(ni, m.dim(j))?;
            let h = piecewise_apply(k, &g.abs_pow(1.0), &m.measure(j), &mu_i, Part::Full, out)
                .map_err(|e| locate_err(e, &format!("end {j}"), &format!("end {i}")))?;
            acc.add(&h, -ni);
        }
        ends.push(acc.finish(out, ni)?);
    }
    Ok(EndsFunction {
        core_value: core.value(),
        ends,
    })
}

/// Applies the printed majorant table of `T₃` (constants 1) to `|f|`, with
/// end outputs as cell averages on `out`.
pub fn t3_bound_apply(m: &EndsModel, f: &EndsFunction, out: &LogGrid) -> Result<EndsFunction> {
    apply_table(m, f, out, Table::T3)
}

/// As [`t3_bound_apply`] with the `T₄` exponents.
pub fn t4_bound_apply(m: &EndsModel, f: &EndsFunction, out: &LogGrid) -> Result<EndsFunction> {
    apply_table(m, f, out, Table::T4)
}

/// Pointwise majorant values at radius `r` on end `i` and on the core, for
/// checking the row structure without cell averaging.
pub fn t3_bound_at(m: &EndsModel, f: &EndsFunction, i: usize, r: f64) -> Result<f64> {
    table_at(m, f, i, r, Table::T3)
}

pub fn t4_bound_at(m: &EndsModel, f: &EndsFunction, i: usize, r: f64) -> Result<f64> {
    table_at(m, f, i, r, Table::T4)
}

fn table_at(m: &EndsModel, f: &EndsFunction, i: usize, r: f64, table: Table) -> Result<f64> {
    m.check_end(i)?;
    let ni = m.dim(i);
    let mut acc = ExactSum::new();
    acc.add(r.powf(-ni) * m.core_mass() * f.core_value.abs());
    for (j, g) in f.ends.iter().enumerate() {
        let k = table.kernel(ni, m.dim(j))?;
        let app = crate::hh_operators::PiecewiseApplication::new(k, &g.abs_pow(1.0), &m.measure(j), &m.measure(i))?;
        acc.add(app.eval(r, Part::Full)?);
    }
    Ok(acc.value())
}

/// Kernel of `S` for input on end `i` and output on end `j`:
/// `(r')^{1-n_i} r^{1-n_j}` for `r' > r`, `(r')^{2-n_i} r^{-n_j}` for `r' ≤ r`.
fn s_kernel(ni: f64, nj: f64) -> Result<PiecewisePowerKernel> {
    PiecewisePowerKernel::new(nj - 1.0, ni - 1.0, nj, ni - 2.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SEnvelopeReport {
    /// `‖f‖_{(n*,1)}` over the whole model.
    pub lorentz_norm: f64,
    /// Smallest `C` with `|Sf| ≤ C ‖f‖ (χ_core + Σ_j r^{2-n_j-n_i/n*})` at
    /// the sample points.
    pub fitted_const: f64,
    /// Largest ratio of `|Sf|` to the Lorentz-Hölder bound
    /// `‖f‖_{(n*,1)} ‖G(z, ·)‖_{((n*)',∞)}`; at most 1 up to rounding.
    pub max_holder_ratio: f64,
    pub points_checked: usize,
}

fn s_row_weak_norm(ni: f64, nj: f64, r: Option<f64>, p_conj: f64) -> f64 {
    let mut l = Layout::new();
    match r {
        None => l.push_power(1.0, 1.0 - ni, 1.0, f64::INFINITY, ni),
        Some(r) => {
            l.push_power(r.powf(-nj), 2.0 - ni, 1.0, r, ni);
            l.push_power(r.powf(1.0 - nj), 1.0 - ni, r, f64::INFINITY, ni);
        }
    }
    lorentz_norm_of(&rearrange(&l), LorentzIndex { p: p_conj, q: f64::INFINITY })
}

/// `Sf` for input supported on end `i` (other components are ignored),
/// together with the envelope report. Core output is `∫ (r')^{1-n_i}|f| dμ_i`.
pub fn s_bound_apply(m: &EndsModel, i: usize, f: &EndsFunction, out: &LogGrid) -> Result<(EndsFunction, SEnvelopeReport)> {
    m.check_end(i)?;
    check_out(out)?;
    let ni = m.dim(i);
    let g = f.ends[i].abs_pow(1.0);
    let mu_i = m.measure(i);
    let core_value = end_pairing(&g, &mu_i, 1.0 - ni).map_err(|e| locate_err(e, &format!("end {i}"), "core"))?;
    let mut ends = Vec::with_capacity(m.n_ends());
    for j in 0..m.n_ends() {
        let nj = m.dim(j);
        let h = piecewise_apply(s_kernel(ni, nj)?, &g, &mu_i, &m.measure(j), Part::Full, out)
            .map_err(|e| locate_err(e, &format!("end {i}"), &format!("end {j}")))?;
        ends.push(h);
    }
    let sf = EndsFunction { core_value, ends };

    let n_star = m.n_star() as f64;
    let input = EndsFunction::on_end(m, i, g.clone())?;
    let norm = input.lorentz_norm(m, LorentzIndex { p: n_star, q: 1.0 });
    let p_conj = conjugate_exponent(n_star);
    let mut fitted: f64 = 0.0;
    let mut holder: f64 = 0.0;
    let mut count = 0;
    let mut record = |value: f64, shape: f64, row: f64| {
        if norm > 0.0 {
            fitted = fitted.max(value / (norm * shape));
            holder = holder.max(value / (norm * row));
        }
        count += 1;
    };
    record(core_value, 1.0, s_row_weak_norm(ni, 0.0, None, p_conj));
    for j in 0..m.n_ends() {
        let nj = m.dim(j);
        let app = crate::hh_operators::PiecewiseApplication::new(s_kernel(ni, nj)?, &g, &mu_i, &m.measure(j))?;
        for c in 0..out.n_cells() {
            let r = out.midpoint(c);
            let v = app.eval(r, Part::Full)?;
            record(v, r.powf(2.0 - nj - ni / n_star), s_row_weak_norm(ni, nj, Some(r), p_conj));
        }
    }
    let report = SEnvelopeReport {
        lorentz_norm: norm,
        fitted_const: fitted,
        max_holder_ratio: holder,
        points_checked: count,
    };
    Ok((sf, report))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PBound {
    /// `∫₀^ε s^{1-N} s^{N-1} ds`.
    pub schur_row: f64,
    /// `sup_α α d_g(α)^{1/(n*)'}` for `g(s) = s^{1-n_i}` on `s > ε`.
    pub far_weak_sup: f64,
    /// The scaling `ε^{1 - n_i/n*}`.
    pub envelope: f64,
    /// `far_weak_sup · ‖f‖_{(n*,1)}`.
    pub far_pointwise: f64,
}

/// Near/far split of the `P` kernel on end `i` at distance `ε`.
pub fn p_bound_apply(m: &EndsModel, i: usize, eps: f64, f: &EndsFunction) -> Result<PBound> {
    m.check_end(i)?;
    if !(eps > 0.0 && eps.is_finite()) {
        return domain(format!("epsilon must be positive, got {eps}"));
    }
    let big_n = m.big_n() as f64;
    let schur_row = PowerMeasure::new(big_n, 0.0)?.power_moment(1.0 - big_n, 0.0, eps)?;
    let ni = m.dim(i);
    let n_star = m.n_star() as f64;
    let mut l = Layout::new();
    l.push_power(1.0, 1.0 - ni, eps, f64::INFINITY, ni);
    let far_weak_sup = lorentz_norm_of(&rearrange(&l), LorentzIndex { p: conjugate_exponent(n_star), q: f64::INFINITY });
    let norm = f.lorentz_norm(m, LorentzIndex { p: n_star, q: 1.0 });
    Ok(PBound {
        schur_row,
        far_weak_sup,
        envelope: eps.powf(1.0 - ni / n_star),
        far_pointwise: far_weak_sup * norm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CounterexampleKind {
    /// `y^{β-d₁} (1 + log y)^{-1}`.
    LogDampedPower { beta: f64 },
    /// `y^{-(d₁+δ)/p}`.
    PurePower { delta: f64, p: f64 },
    /// `r^{-1} (1 + log r)^{-β}`, `1/p < β ≤ 1`.
    LogDecay { beta: f64, p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterexampleSpec {
    pub kind: CounterexampleKind,
    /// Truncation radius; the family vanishes beyond it.
    pub truncation: f64,
}

impl CounterexampleSpec {
    pub fn new(kind: CounterexampleKind, truncation: f64) -> Result<Self> {
        if !(truncation > 1.0) {
            return domain(format!("truncation must exceed 1, got {truncation}"));
        }
        match kind {
            CounterexampleKind::LogDampedPower { beta } if !(beta > 0.0) => {
                return domain(format!("beta must be positive, got {beta}"));
            }
            CounterexampleKind::PurePower { delta, p } if !(delta > 0.0 && p >= 1.0) => {
                return domain(format!("need delta > 0 and p >= 1, got ({delta}, {p})"));
            }
            CounterexampleKind::LogDecay { beta, p } if !(p > 1.0 && beta > 1.0 / p && beta <= 1.0) => {
                return domain(format!("need 1/p < beta <= 1, got beta = {beta}, p = {p}"));
            }
            _ => {}
        }
        Ok(Self { kind, truncation })
    }

    pub fn with_truncation(&self, truncation: f64) -> Result<Self> {
        Self::new(self.kind, truncation)
    }

    /// The untruncated profile.
    pub fn profile(&self, d1: f64) -> impl Fn(f64) -> f64 {
        let kind = self.kind;
        move |y: f64| match kind {
            CounterexampleKind::LogDampedPower { beta } => y.powf(beta - d1) / (1.0 + y.ln()),
            CounterexampleKind::PurePower { delta, p } => y.powf(-(d1 + delta) / p),
            CounterexampleKind::LogDecay { beta, .. } => (1.0 + y.ln()).powf(-beta) / y,
        }
    }
}

/// The family member on `[1, T]` as `r^{d₁-1}dr`-averages, zero beyond `T`.
pub fn counterexample_family(spec: &CounterexampleSpec, d1: f64, cells_per_decade: usize) -> Result<GridFunction> {
    let spec = CounterexampleSpec::new(spec.kind, spec.truncation)?;
    if let CounterexampleKind::LogDampedPower { beta } = spec.kind {
        if beta > d1 {
            return domain(format!("beta = {beta} exceeds d1 = {d1}"));
        }
    }
    let grid = LogGrid::per_decade(1.0, spec.truncation, cells_per_decade)?;
    let mu = PowerMeasure::new(d1, 1.0)?;
    Ok(GridFunction::from_fn_average(grid, &mu, spec.profile(d1)))
}

/// Largest admissible `δ` of the pure power family for `(p, q)`.
pub fn pure_power_delta_max(p: f64, q: f64, d1: f64, d2: f64, alpha: f64, beta: f64) -> f64 {
    p / q * d2 - d1 + p * (d1 - alpha - beta)
}

/// Operator whose growth along a truncation ladder is measured.
#[derive(Debug, Clone, PartialEq)]
pub enum StudyOperator {
    /// `R₁f(x)` at one point; input size `‖f‖_p`.
    R1Point { alpha: f64, beta: f64, d1: f64, d2: f64, x: f64, p: f64 },
    /// `‖R₁f‖_{L^q(μ₂)} / ‖f‖_{L^p(μ₁)}`.
    R1Norm { alpha: f64, beta: f64, d1: f64, d2: f64, p: f64, q: f64 },
    /// `∫ (r')^{1-n} f dμ` against `‖f‖_{(n,p)}`.
    Pairing { n: f64, p: f64 },
    /// `‖Tf‖_{idx} / ‖f‖_{idx}` with `f` on end 0 (T3) or on the input end (S).
    Endpoint { model: EndsModel, op: EndpointOperator, idx: LorentzIndex },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyRow {
    pub truncation: f64,
    pub input_norm: f64,
    pub output: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyTable {
    pub rows: Vec<StudyRow>,
}

impl StudyTable {
    pub fn strictly_increasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].ratio > w[0].ratio)
    }

    /// Relative change of the ratio between the last two rows.
    pub fn last_drift(&self) -> f64 {
        match self.rows.as_slice() {
            [.., a, b] => (b.ratio / a.ratio - 1.0).abs(),
            _ => 0.0,
        }
    }

    /// CSV with header `T,input_norm,<output_label>,ratio`.
    pub fn to_csv(&self, output_label: &str) -> String {
        let mut s = format!("T,input_norm,{output_label},ratio\n");
        for r in &self.rows {
            s.push_str(&format!("{:e},{:e},{:e},{:e}\n", r.truncation, r.input_norm, r.output, r.ratio));
        }
        s
    }
}

/// Runs `op` on the family truncated at each `T` in `truncations`.
pub fn divergence_study(
    op: &StudyOperator,
    spec: &CounterexampleSpec,
    truncations: &[f64],
    cells_per_decade: usize,
) -> Result<StudyTable> {
    if truncations.windows(2).any(|w| w[1] <= w[0]) {
        return domain("truncations must be increasing");
    }
    let mut rows = Vec::with_capacity(truncations.len());
    for &t in truncations {
        let s = spec.with_truncation(t)?;
        let row = match op {
            StudyOperator::R1Point { alpha, beta, d1, d2, x, p } => {
                let f = counterexample_family(&s, *d1, cells_per_decade)?;
                let mu1 = PowerMeasure::new(*d1, 1.0)?;
                let mu2 = PowerMeasure::new(*d2, 1.0)?;
                let app = crate::hh_operators::PiecewiseApplication::new(PiecewisePowerKernel::r1(*alpha, *beta)?, &f, &mu1, &mu2)?;
                let out = app.eval(*x, Part::R1)?;
                let inp = f.lp_norm(&mu1, *p)?;
                (inp, out)
            }
            StudyOperator::R1Norm { alpha, beta, d1, d2, p, q } => {
                let f = counterexample_family(&s, *d1, cells_per_decade)?;
                let mu1 = PowerMeasure::new(*d1, 1.0)?;
                let mu2 = PowerMeasure::new(*d2, 1.0)?;
                let out_grid = f.grid().clone();
                let g = piecewise_apply(PiecewisePowerKernel::r1(*alpha, *beta)?, &f, &mu1, &mu2, Part::R1, &out_grid)?;
                (f.lp_norm(&mu1, *p)?, g.lp_norm(&mu2, *q)?)
            }
            StudyOperator::Pairing { n, p } => {
                let f = counterexample_family(&s, *n, cells_per_decade)?;
                let mu = PowerMeasure::new(*n, 1.0)?;
                let norm = lorentz_norm_of(&rearrange(&Layout::from_grid(&f, &mu)), LorentzIndex::new(*n, *p)?);
                (norm, end_pairing(&f, &mu, 1.0 - n)?)
            }
            StudyOperator::Endpoint { model, op, idx } => {
                let end = match op {
                    EndpointOperator::T3 => 0,
                    EndpointOperator::S { end } => *end,
                };
                let f = counterexample_family(&s, model.dim(end), cells_per_decade)?;
                let out = f.grid().clone();
                let input = EndsFunction::on_end(model, end, f)?;
                let tf = match op {
                    EndpointOperator::T3 => t3_bound_apply(model, &input, &out)?,
                    EndpointOperator::S { end } => s_bound_apply(model, *end, &input, &out)?.0,
                };
                (input.lorentz_norm(model, *idx), tf.lorentz_norm(model, *idx))
            }
        };
        let (input_norm, output) = row;
        rows.push(StudyRow {
            truncation: t,
            input_norm,
            output,
            ratio: output / input_norm,
        });
    }
    Ok(StudyTable { rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndpointOperator {
    T3,
    S { end: usize },
}

/// Indicators of the dyadic annuli `[2^k, 2^{k+1}]`, `k < k_max`, on every
/// end, plus the core indicator. The grid has a whole number of cells per
/// octave, at least `cells_per_decade · log₁₀ 2`, so every annulus is exact.
pub fn dyadic_corpus(m: &EndsModel, k_max: u32, cells_per_decade: usize) -> Result<Vec<EndsFunction>> {
    let per_octave = (cells_per_decade as f64 * 2f64.log10()).ceil().max(1.0) as usize;
    let grid = LogGrid::new(1.0, 2f64.powi(k_max as i32), per_octave * k_max as usize)?;
    let mut out = vec![EndsFunction::core_indicator(m, &grid)];
    for i in 0..m.n_ends() {
        for k in 0..k_max {
            let a = 2f64.powi(k as i32);
            out.push(EndsFunction::on_end(m, i, GridFunction::indicator(grid.clone(), a, 2.0 * a))?);
        }
    }
    Ok(out)
}

/// `max ‖Tf‖_idx / ‖f‖_idx` over the nonzero members of `corpus` and the
/// index of the witness.
pub fn endpoint_ratio(
    m: &EndsModel,
    op: EndpointOperator,
    corpus: &[EndsFunction],
    idx: LorentzIndex,
    out: &LogGrid,
) -> Result<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for (w, f) in corpus.iter().enumerate() {
        let norm = f.lorentz_norm(m, idx);
        if f.is_zero() || norm == 0.0 {
            continue;
        }
        let tf = match op {
            EndpointOperator::T3 => t3_bound_apply(m, f, out)?,
            EndpointOperator::S { end } => s_bound_apply(m, end, f, out)?.0,
        };
        let ratio = tf.lorentz_norm(m, idx) / norm;
        if best.is_none_or(|(b, _)| ratio > b) {
            best = Some((ratio, w));
        }
    }
    best.ok_or_else(|| Error::Domain("corpus has no nonzero member".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn model33() -> EndsModel {
        EndsModel::with_ends(&[3, 3]).unwrap()
    }

    fn grid(x_max: f64) -> LogGrid {
        LogGrid::per_decade(1.0, x_max, 32).unwrap()
    }

    #[test]
    fn model_invariants() {
        assert!(EndsModel::with_ends(&[3]).is_err());
        assert!(EndsModel::with_ends(&[2, 3]).is_err());
        assert!(EndsModel::new(vec![3, 5], 4, 1.0).is_err());
        assert!(EndsModel::new(vec![3, 3], 3, 0.0).is_err());
        assert_eq!(EndsModel::new(vec![4, 3, 5], 6, 2.0).unwrap().n_star(), 3);
    }

    #[test]
    fn zero_maps_to_zero() {
        let m = model33();
        let g = grid(100.0);
        let z = EndsFunction::zero(&m, &g);
        for out in [t3_bound_apply(&m, &z, &g).unwrap(), t4_bound_apply(&m, &z, &g).unwrap()] {
            assert!(out.is_zero());
        }
    }

    #[test]
    fn core_indicator_decays_like_r_to_minus_n() {
        let m = EndsModel::new(vec![3, 4], 4, 2.5).unwrap();
        let g = grid(100.0);
        let f = EndsFunction::core_indicator(&m, &g);
        let out = t3_bound_apply(&m, &f, &g).unwrap();
        assert_relative_eq!(out.core_value, 2.5);
        for (i, n) in [(0usize, 3.0), (1, 4.0)] {
            for r in [1.5f64, 7.0, 40.0] {
                assert_relative_eq!(t3_bound_at(&m, &f, i, r).unwrap(), 2.5 * r.powf(-n), max_relative = 1e-14);
            }
            let tail = out.ends[i].tail().unwrap();
            assert_relative_eq!(tail.coeff, 2.5);
            assert_eq!(tail.exponent, -n);
        }
    }

    #[test]
    fn end_to_end_rows() {
        let m = model33();
        let g = LogGrid::new(1.0, 16.0, 4).unwrap();
        let f = EndsFunction::on_end(&m, 1, GridFunction::indicator(g.clone(), 2.0, 4.0)).unwrap();
        // r' <= r branch only
        assert_relative_eq!(t3_bound_at(&m, &f, 0, 8.0).unwrap(), 6.0 / 512.0, max_relative = 1e-13);
        assert_relative_eq!(t4_bound_at(&m, &f, 0, 8.0).unwrap(), 2.0 / 512.0, max_relative = 1e-13);
        // r' > r branch only: r^{-2} ∫₂⁴ r'^{-2} r'^2 dr'
        assert_relative_eq!(t3_bound_at(&m, &f, 0, 1.5).unwrap(), 2.0 / 2.25, max_relative = 1e-13);
        // T4: r^{-2} ∫₂⁴ r'^{-3} r'^2 dr' = r^{-2} log 2
        assert_relative_eq!(t4_bound_at(&m, &f, 0, 1.5).unwrap(), 2f64.ln() / 2.25, max_relative = 1e-13);
    }

    #[test]
    fn core_rows() {
        let m = model33();
        let g = LogGrid::new(1.0, 4.0, 2).unwrap();
        let f = EndsFunction::on_end(&m, 0, GridFunction::indicator(g.clone(), 1.0, 2.0)).unwrap();
        assert_relative_eq!(t4_bound_apply(&m, &f, &g).unwrap().core_value, 2f64.ln(), max_relative = 1e-14);
        // T3: ∫₁² r'^{-2} r'^2 dr' = 1
        assert_relative_eq!(t3_bound_apply(&m, &f, &g).unwrap().core_value, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn cell_averages_match_pointwise_rows() {
        let m = EndsModel::with_ends(&[3, 4]).unwrap();
        let g = grid(1e3);
        let mu = m.measure(0);
        let f = EndsFunction::new(
            &m,
            0.5,
            vec![GridFunction::from_fn_average(g.clone(), &mu, |r| r.powf(-2.5)), GridFunction::indicator(g.clone(), 3.0, 30.0)],
        )
        .unwrap();
        let out = t3_bound_apply(&m, &f, &g).unwrap();
        for i in 0..2 {
            let mu_i = m.measure(i);
            for c in [0usize, 17, 60, 95] {
                let (a, b) = g.cell(c);
                let avg = crate::quad::integrate(|r| t3_bound_at(&m, &f, i, r).unwrap() * r.powf(mu_i.dim() - 1.0), a, b) / mu_i.mass(a, b);
                assert_relative_eq!(out.ends[i].values()[c], avg, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn divergent_input_reports_location() {
        let m = model33();
        let g = LogGrid::new(1.0, 2.0, 1).unwrap();
        let bad = GridFunction::zeros(g.clone()).with_tail(PowerPart::new(1.0, -1.0));
        let f = EndsFunction::on_end(&m, 1, bad).unwrap();
        match t3_bound_apply(&m, &f, &g) {
            Err(Error::Divergent { what, .. }) => assert!(what.contains("end 1"), "{what}"),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn s_branch_value_and_envelope() {
        let m = model33();
        let g = LogGrid::new(1.0, 64.0, 6).unwrap();
        let f = EndsFunction::on_end(&m, 0, GridFunction::indicator(g.clone(), 1.0, 2.0)).unwrap();
        let (sf, rep) = s_bound_apply(&m, 0, &f, &g).unwrap();
        let app = crate::hh_operators::PiecewiseApplication::new(s_kernel(3.0, 3.0).unwrap(), &f.ends[0], &m.measure(0), &m.measure(1)).unwrap();
        assert_relative_eq!(app.eval(4.0, Part::Full).unwrap(), 1.5 / 64.0, max_relative = 1e-13);
        // core output ∫₁² r'^{-2} r'^2 dr' = 1
        assert_relative_eq!(sf.core_value, 1.0, max_relative = 1e-14);
        assert!(rep.max_holder_ratio <= 1.0 + 1e-9, "{rep:?}");
        assert!(rep.fitted_const.is_finite() && rep.fitted_const > 0.0);
        assert_eq!(rep.points_checked, 1 + 2 * g.n_cells());
    }

    #[test]
    fn s_envelope_exponent() {
        let m = model33();
        let ni = 3.0;
        let nj = 3.0;
        assert_eq!(2.0 - nj - ni / m.n_star() as f64, -2.0);
    }

    #[test]
    fn p_bound_scaling() {
        let m = EndsModel::new(vec![3, 4], 5, 1.0).unwrap();
        let g = grid(10.0);
        let f = EndsFunction::core_indicator(&m, &g);
        let eps_list = [0.125, 0.5, 2.0];
        for eps in eps_list {
            let b = p_bound_apply(&m, 0, eps, &f).unwrap();
            assert_relative_eq!(b.schur_row, eps, max_relative = 1e-14);
            // n_i = n* = 3: ε-independent, equal to 3^{-2/3}
            assert_relative_eq!(b.far_weak_sup, 3f64.powf(-2.0 / 3.0), max_relative = 1e-9);
            assert_eq!(b.envelope, 1.0);
        }
        // n_i = 4 > n*: sup scales exactly like ε^{1-4/3}
        let r: Vec<f64> = eps_list
            .iter()
            .map(|&e| {
                let b = p_bound_apply(&m, 1, e, &f).unwrap();
                b.far_weak_sup / b.envelope
            })
            .collect();
        assert_relative_eq!(r[0], r[1], max_relative = 1e-8);
        assert_relative_eq!(r[1], r[2], max_relative = 1e-8);
        assert!(p_bound_apply(&m, 0, 0.0, &f).is_err());
    }

    #[test]
    fn far_field_distribution_tail() {
        // d_g(α) = (α^{-3/2} - ε³)/3 below ε^{-2}, zero above
        let eps = 0.5f64;
        let mut l = Layout::new();
        l.push_power(1.0, -2.0, eps, f64::INFINITY, 3.0);
        for a in [0.1f64, 1.0, 3.9] {
            assert_relative_eq!(l.dist(a), (a.powf(-1.5) - eps.powi(3)) / 3.0, max_relative = 1e-12);
        }
        assert_eq!(l.dist(4.0), 0.0);
        assert_eq!(l.dist(5.0), 0.0);
    }

    #[test]
    fn spec_validation() {
        use CounterexampleKind::*;
        assert!(CounterexampleSpec::new(LogDecay { beta: 0.4, p: 2.0 }, 10.0).is_err());
        assert!(CounterexampleSpec::new(LogDecay { beta: 1.2, p: 2.0 }, 10.0).is_err());
        assert!(CounterexampleSpec::new(LogDecay { beta: 0.6, p: 2.0 }, 1.0).is_err());
        assert!(CounterexampleSpec::new(PurePower { delta: 0.0, p: 2.0 }, 10.0).is_err());
        let s = CounterexampleSpec::new(LogDampedPower { beta: 4.0 }, 10.0).unwrap();
        assert!(counterexample_family(&s, 3.0, 8).is_err());
    }

    #[test]
    fn log_damped_at_beta_equal_d1_is_bounded_by_one() {
        let s = CounterexampleSpec::new(CounterexampleKind::LogDampedPower { beta: 3.0 }, 1e6).unwrap();
        let f = counterexample_family(&s, 3.0, 16).unwrap();
        assert!(f.values().iter().all(|&v| v <= 1.0 && v > 0.0));
        assert!(f.is_compact());
    }

    #[test]
    fn log_damped_lp_norm_matches_oracle() {
        // ‖f‖_p^p = ∫₀^{log T} e^{-cx} (1+x)^{-p} dx, c = p(d₁-β) - d₁
        let (d1, beta, p) = (3.0, 1.5, 3.0);
        let c = p * (d1 - beta) - d1;
        let mu = PowerMeasure::new(d1, 1.0).unwrap();
        for t in [1e4, 1e8] {
            let s = CounterexampleSpec::new(CounterexampleKind::LogDampedPower { beta }, t).unwrap();
            let f = counterexample_family(&s, d1, 64).unwrap();
            let oracle = crate::quad::integrate(|x: f64| (-c * x).exp() * (1.0 + x).powf(-p), 0.0, t.ln());
            assert_relative_eq!(f.lp_norm(&mu, p).unwrap().powf(p), oracle, max_relative = 5e-3);
        }
    }

    #[test]
    fn log_decay_rearrangement_envelope() {
        let s = CounterexampleSpec::new(CounterexampleKind::LogDecay { beta: 0.6, p: 2.0 }, 1e8).unwrap();
        let f = counterexample_family(&s, 3.0, 32).unwrap();
        let fs = rearrange(&Layout::from_grid(&f, &PowerMeasure::new(3.0, 1.0).unwrap()));
        let total = fs.support_measure();
        let mut worst: f64 = 0.0;
        for k in 0..200 {
            let t = 1e-3 * (total / 1e-3).powf(k as f64 / 200.0);
            let env = t.powf(-1.0 / 3.0) * (1.0 + t.ln().abs() / 3.0).powf(-0.6);
            worst = worst.max(fs.eval(t) / env);
        }
        assert!(worst < 3.0, "{worst}");
    }

    #[test]
    fn pairing_grows_like_the_oracle() {
        let beta = 0.6;
        let spec = CounterexampleSpec::new(CounterexampleKind::LogDecay { beta, p: 2.0 }, 1e3).unwrap();
        let table = divergence_study(&StudyOperator::Pairing { n: 3.0, p: 2.0 }, &spec, &[1e3, 1e6], 32).unwrap();
        for row in &table.rows {
            let oracle = ((1.0 + row.truncation.ln()).powf(1.0 - beta) - 1.0) / (1.0 - beta);
            assert_relative_eq!(row.output, oracle, max_relative = 5e-3);
        }
        assert!(table.strictly_increasing());
    }

    #[test]
    fn dyadic_endpoint_ratio_is_finite() {
        let m = model33();
        let corpus = dyadic_corpus(&m, 4, 16).unwrap();
        let out = corpus[0].ends[0].grid().clone();
        let idx = LorentzIndex::new(3.0, 1.0).unwrap();
        let (r, w) = endpoint_ratio(&m, EndpointOperator::S { end: 0 }, &corpus, idx, &out).unwrap();
        assert!(r.is_finite() && r > 0.0);
        assert!(w >= 1);
        let zeros = vec![EndsFunction::zero(&m, &out)];
        assert!(endpoint_ratio(&m, EndpointOperator::T3, &zeros, idx, &out).is_err());
    }
}
