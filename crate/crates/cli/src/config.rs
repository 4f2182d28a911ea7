use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lhh_core::ends_model::{divergence_study, dyadic_corpus, endpoint_ratio, EndpointOperator, StudyOperator};
use lhh_core::hh_operators::{hh_constant, norm_probe};
use lhh_core::regions::{composite_region, region_d, region_f, Composite, Q};
use lhh_core::special_kernels::{resolvent_bound_eval, ResolventQuery};
use lhh_core::{CounterexampleKind, CounterexampleSpec, EndsModel, LogGrid, LorentzIndex, RegionPoint};
use serde::Deserialize;

use crate::parse::{self, KernelSpec};
use crate::report::{self, ResultRow};

/// Invalid configuration; reported with exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(ConfigError(msg.into()).into())
}

trait AtField<T> {
    fn at(self, field: &str) -> Result<T>;
}

impl<T, E: std::fmt::Display> AtField<T> for std::result::Result<T, E> {
    fn at(self, field: &str) -> Result<T> {
        self.map_err(|e| ConfigError(format!("{field}: {e}")).into())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Relative paths are taken from the config file's directory.
    #[serde(default = "default_dir")]
    pub output_dir: PathBuf,
    /// Recorded with the parameters; every experiment is deterministic.
    #[serde(default)]
    pub seed: u64,
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub svg: bool,
    pub experiment: Experiment,
}

fn default_dir() -> PathBuf {
    PathBuf::from(".")
}

fn default_lattice() -> i64 {
    60
}

fn default_cpd() -> usize {
    64
}

fn default_c() -> f64 {
    1.0
}

fn default_k_max() -> u32 {
    10
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Rat {
    Int(i64),
    Text(String),
}

impl Rat {
    fn get(&self, field: &str) -> Result<Q> {
        match self {
            Rat::Int(n) => Ok(Q::from(*n)),
            Rat::Text(s) => parse::rational(s).at(field),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum RegionType {
    D,
    F,
    T3,
    T4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expect {
    Diverges,
    Bounded,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilyConfig {
    LogDecay { beta: f64, p: f64 },
    LogDampedPower { beta: f64 },
    PurePower { delta: f64, p: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorConfig {
    Pairing { n: f64, p: f64 },
    R1Point { alpha: f64, beta: f64, d1: f64, d2: f64, x: f64, p: f64 },
    R1Norm { alpha: f64, beta: f64, d1: f64, d2: f64, p: f64, q: f64 },
    T3 { ends: Vec<u32>, p: f64 },
    S { ends: Vec<u32>, #[serde(default)] end: usize, p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EndpointOp {
    T3,
    S,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    Region {
        #[serde(rename = "type")]
        region: RegionType,
        d1: Option<Rat>,
        d2: Option<Rat>,
        alpha: Option<Rat>,
        beta: Option<Rat>,
        ends: Option<Vec<i64>>,
        #[serde(default = "default_lattice")]
        lattice: i64,
        /// `"u,v"` pairs, rational coordinates.
        vertices: Option<Vec<String>>,
    },
    Divergence {
        family: FamilyConfig,
        operator: OperatorConfig,
        truncations: Vec<f64>,
        #[serde(default = "default_cpd")]
        cells_per_decade: usize,
        expect: Expect,
    },
    Endpoint {
        ends: Vec<u32>,
        op: EndpointOp,
        #[serde(default)]
        end: usize,
        p: f64,
        q: f64,
        #[serde(default = "default_k_max")]
        octaves: u32,
        #[serde(default = "default_cpd")]
        cells_per_decade: usize,
    },
    NormProbe {
        kernel: String,
        p: f64,
        d1: f64,
        d2: f64,
        eps: Vec<f64>,
    },
    Resolvent {
        n_i: u32,
        big_n: u32,
        k: f64,
        #[serde(default = "default_c")]
        c: f64,
        radii: String,
    },
}

/// Files written by one run and the claims it checked.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub artifacts: Vec<PathBuf>,
    pub rows: Vec<ResultRow>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

pub fn load(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
    if cfg.name.is_empty() || cfg.name.contains(['/', '\\']) {
        return invalid(format!("name: '{}' must be a nonempty file stem", cfg.name));
    }
    if let Some(t) = cfg.tolerance {
        if !(t >= 0.0) {
            return invalid(format!("tolerance: must be >= 0, got {t}"));
        }
    }
    Ok(cfg)
}

/// `LHH_TOL`, then the config value, then the experiment default.
pub fn tolerance(cfg: &ExperimentConfig, default: f64) -> Result<f64> {
    match std::env::var("LHH_TOL") {
        Ok(s) => match s.trim().parse::<f64>() {
            Ok(t) if t >= 0.0 => Ok(t),
            _ => invalid(format!("LHH_TOL: '{s}' is not a nonnegative number")),
        },
        Err(_) => Ok(cfg.tolerance.unwrap_or(default)),
    }
}

fn family_kind(f: &FamilyConfig) -> CounterexampleKind {
    match *f {
        FamilyConfig::LogDecay { beta, p } => CounterexampleKind::LogDecay { beta, p },
        FamilyConfig::LogDampedPower { beta } => CounterexampleKind::LogDampedPower { beta },
        FamilyConfig::PurePower { delta, p } => CounterexampleKind::PurePower { delta, p },
    }
}

fn ends_model(ends: &[u32], field: &str) -> Result<EndsModel> {
    EndsModel::with_ends(ends).at(field)
}

fn check_r1(alpha: f64, beta: f64, d1: f64, d2: f64) -> Result<()> {
    let f = "experiment.operator";
    if !(d1 > 0.0 && d2 > 0.0) {
        return invalid(format!("{f}: need d1 > 0 and d2 > 0, got d1 = {d1}, d2 = {d2}"));
    }
    if !(alpha > 0.0) {
        return invalid(format!("{f}.alpha = {alpha} violates alpha > 0"));
    }
    if !(beta > 0.0 && beta <= d1) {
        return invalid(format!("{f}.beta = {beta} violates 0 < beta <= d1 = {d1}"));
    }
    Ok(())
}

/// Builds the study operator and the dimension the family lives in.
fn study_operator(op: &OperatorConfig) -> Result<(StudyOperator, f64, &'static str)> {
    let f = "experiment.operator";
    Ok(match op {
        OperatorConfig::Pairing { n, p } => {
            LorentzIndex::new(*n, *p).at(f)?;
            (StudyOperator::Pairing { n: *n, p: *p }, *n, "pairing")
        }
        &OperatorConfig::R1Point { alpha, beta, d1, d2, x, p } => {
            check_r1(alpha, beta, d1, d2)?;
            if !(x >= 1.0) {
                return invalid(format!("{f}.x = {x} violates x >= 1"));
            }
            (StudyOperator::R1Point { alpha, beta, d1, d2, x, p }, d1, "output")
        }
        &OperatorConfig::R1Norm { alpha, beta, d1, d2, p, q } => {
            check_r1(alpha, beta, d1, d2)?;
            (StudyOperator::R1Norm { alpha, beta, d1, d2, p, q }, d1, "output")
        }
        OperatorConfig::T3 { ends, p } => {
            let model = ends_model(ends, &format!("{f}.ends"))?;
            let idx = LorentzIndex::new(model.n_star() as f64, *p).at(&format!("{f}.p"))?;
            let d = model.dim(0);
            (StudyOperator::Endpoint { model, op: EndpointOperator::T3, idx }, d, "output")
        }
        OperatorConfig::S { ends, end, p } => {
            let model = ends_model(ends, &format!("{f}.ends"))?;
            if *end >= model.n_ends() {
                return invalid(format!("{f}.end = {end} but the model has {} ends", model.n_ends()));
            }
            let idx = LorentzIndex::new(model.n_star() as f64, *p).at(&format!("{f}.p"))?;
            let d = model.dim(*end);
            (StudyOperator::Endpoint { model, op: EndpointOperator::S { end: *end }, idx }, d, "output")
        }
    })
}

fn write_artifact(dir: &Path, file: String, body: &str, out: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(file);
    std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    out.push(path);
    Ok(())
}

fn row(cfg: &ExperimentConfig, parameters: String, claim: &str, measured: f64, tolerance: f64, pass: bool) -> ResultRow {
    ResultRow {
        experiment: cfg.name.clone(),
        parameters: format!("{parameters} seed={}", cfg.seed),
        claim: claim.to_string(),
        measured,
        tolerance,
        pass,
    }
}

fn region_vertex(s: &str) -> Result<RegionPoint> {
    let field = "experiment.vertices";
    let Some((u, v)) = s.split_once(',') else {
        return invalid(format!("{field}: '{s}' is not a 'u,v' pair"));
    };
    RegionPoint::new(parse::rational(u).at(field)?, parse::rational(v).at(field)?).at(field)
}

/// Validates `cfg`, writes `<name>.csv` (plus `<name>.svg` for regions when
/// asked) and `<name>.result.csv` under the output directory.
pub fn run_experiment(cfg: &ExperimentConfig, base: &Path) -> Result<RunOutcome> {
    let dir = if cfg.output_dir.is_absolute() { cfg.output_dir.clone() } else { base.join(&cfg.output_dir) };
    let mut artifacts = Vec::new();
    let mut rows = Vec::new();
    let name = &cfg.name;
    match &cfg.experiment {
        Experiment::Region { region, d1, d2, alpha, beta, ends, lattice, vertices } => {
            if *lattice < 1 {
                return invalid(format!("experiment.lattice: must be >= 1, got {lattice}"));
            }
            let (r, params) = match region {
                RegionType::D | RegionType::F => {
                    let need = |v: &Option<Rat>, k: &str| -> Result<Q> {
                        match v {
                            Some(v) => v.get(&format!("experiment.{k}")),
                            None => invalid(format!("experiment.{k}: required for region type {region:?}")),
                        }
                    };
                    let (d1, d2, a, b) = (need(d1, "d1")?, need(d2, "d2")?, need(alpha, "alpha")?, need(beta, "beta")?);
                    let r = if *region == RegionType::D { region_d(d1, d2, a, b) } else { region_f(d1, d2, a, b) };
                    (r.at("experiment")?, format!("type={region:?} d1={d1} d2={d2} alpha={a} beta={b}"))
                }
                RegionType::T3 | RegionType::T4 => {
                    let Some(e) = ends else {
                        return invalid(format!("experiment.ends: required for region type {region:?}"));
                    };
                    let which = if *region == RegionType::T3 { Composite::T3 } else { Composite::T4 };
                    let joined = e.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(";");
                    (composite_region(e, which).at("experiment.ends")?, format!("type={region:?} ends={joined}"))
                }
            };
            let expected = match vertices {
                Some(v) => Some(v.iter().map(|s| region_vertex(s)).collect::<Result<Vec<_>>>()?),
                None => None,
            };
            let csv = r.to_csv(*lattice);
            let inside = csv.lines().skip(1).filter(|l| l.ends_with(",1")).count();
            write_artifact(&dir, format!("{name}.csv"), &csv, &mut artifacts)?;
            if cfg.svg {
                write_artifact(&dir, format!("{name}.svg"), &r.to_svg(), &mut artifacts)?;
            }
            rows.push(row(cfg, params.clone(), "region has lattice points", inside as f64, 0.0, inside > 0));
            if let Some(want) = expected {
                let got = r.closure_vertices();
                let missing = want.iter().filter(|p| !got.contains(p)).count();
                let extra = got.iter().filter(|p| !want.contains(p)).count();
                rows.push(row(cfg, params, "closure vertices match", (missing + extra) as f64, 0.0, missing + extra == 0));
            }
        }
        Experiment::Divergence { family, operator, truncations, cells_per_decade, expect } => {
            let (op, dim, label) = study_operator(operator)?;
            if truncations.len() < 2 {
                return invalid("experiment.truncations: need at least two values");
            }
            if truncations.windows(2).any(|w| w[1] <= w[0]) || !(truncations[0] > 1.0) {
                return invalid("experiment.truncations: must be increasing and exceed 1");
            }
            if *cells_per_decade == 0 {
                return invalid("experiment.cells_per_decade: must be positive");
            }
            let kind = family_kind(family);
            let spec = CounterexampleSpec::new(kind, truncations[0]).at("experiment.family")?;
            if let CounterexampleKind::LogDampedPower { beta } = kind {
                if beta > dim {
                    return invalid(format!("experiment.family.beta = {beta} violates beta <= d1 = {dim}"));
                }
            }
            let table = divergence_study(&op, &spec, truncations, *cells_per_decade)?;
            write_artifact(&dir, format!("{name}.csv"), &table.to_csv(label), &mut artifacts)?;
            let params = format!("family={family:?} operator={operator:?} cpd={cells_per_decade}");
            let (first, last) = (table.rows[0].ratio, table.rows[table.rows.len() - 1].ratio);
            match expect {
                Expect::Diverges => {
                    let pass = table.strictly_increasing() && last.is_finite();
                    rows.push(row(cfg, params, "ratio strictly increasing in T", last / first, 0.0, pass));
                }
                Expect::Bounded => {
                    let tol = tolerance(cfg, 0.05)?;
                    let drift = table.last_drift();
                    rows.push(row(cfg, params, "ratio drift between last two T <= tol", drift, tol, drift <= tol));
                }
            }
        }
        Experiment::Endpoint { ends, op, end, p, q, octaves, cells_per_decade } => {
            let m = ends_model(ends, "experiment.ends")?;
            if *end >= m.n_ends() {
                return invalid(format!("experiment.end = {end} but the model has {} ends", m.n_ends()));
            }
            if *octaves == 0 || *cells_per_decade == 0 {
                return invalid("experiment: octaves and cells_per_decade must be positive");
            }
            let idx = LorentzIndex::new(*p, *q).at("experiment.p/q")?;
            let eop = match op {
                EndpointOp::T3 => EndpointOperator::T3,
                EndpointOp::S => EndpointOperator::S { end: *end },
            };
            let mut csv = String::from("cells_per_decade,sup_ratio,witness\n");
            let mut sups = Vec::new();
            for cpd in [*cells_per_decade, 2 * cells_per_decade] {
                let corpus = dyadic_corpus(&m, *octaves, cpd)?;
                let out = corpus[0].ends[0].grid().clone();
                let (s, w) = endpoint_ratio(&m, eop, &corpus, idx, &out)?;
                let _ = writeln!(csv, "{cpd},{s:e},{w}");
                sups.push(s);
            }
            write_artifact(&dir, format!("{name}.csv"), &csv, &mut artifacts)?;
            let params = format!("ends={ends:?} op={op:?} end={end} p={p} q={q} octaves={octaves}");
            let tol = tolerance(cfg, 0.05)?;
            let drift = (sups[1] / sups[0] - 1.0).abs();
            rows.push(row(cfg, params.clone(), "sup ratio finite", sups[0], 0.0, sups[0].is_finite()));
            rows.push(row(cfg, params, "sup ratio stable under refinement", drift, tol, drift <= tol));
        }
        Experiment::NormProbe { kernel, p, d1, d2, eps } => {
            let k = match parse::kernel(kernel).at("experiment.kernel")? {
                KernelSpec::Homogeneous(k) => k,
                KernelSpec::Piecewise(_) => return invalid("experiment.kernel: norm probe needs a hom: kernel"),
            };
            if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0)) {
                return invalid("experiment.eps: need a nonempty list of positive values");
            }
            hh_constant(&k, *p, *d1, *d2).at("experiment")?;
            let (in_grid, out) = probe_grids()?;
            let est = norm_probe(&k, *p, *d1, *d2, eps, &in_grid, &out)?;
            let mut csv = String::from("eps,ratio\n");
            for (e, r) in &est.ratios {
                let _ = writeln!(csv, "{e:e},{r:e}");
            }
            write_artifact(&dir, format!("{name}.csv"), &csv, &mut artifacts)?;
            let tol = tolerance(cfg, 1e-3)?;
            let ratio = est.empirical_lower / est.analytic_upper;
            let params = format!("kernel={kernel} p={p} d1={d1} d2={d2}");
            let finite = est.ratios.iter().all(|r| r.1.is_finite());
            rows.push(row(cfg, params, "empirical ratio <= analytic constant", ratio, tol, finite && ratio <= 1.0 + tol));
        }
        Experiment::Resolvent { n_i, big_n, k, c, radii } => {
            let radii = parse::points(radii).at("experiment.radii")?;
            let mut csv = String::from("r,closed_form,quadrature,rel_err\n");
            let mut worst: f64 = 0.0;
            for &r in &radii {
                let q = ResolventQuery::new(*n_i, *big_n, *k, r, *c).at("experiment")?;
                let v = resolvent_bound_eval(&q)?;
                let err = (v.quadrature / v.closed_form - 1.0).abs();
                worst = worst.max(err);
                let _ = writeln!(csv, "{r:e},{:e},{:e},{err:e}", v.closed_form, v.quadrature);
            }
            write_artifact(&dir, format!("{name}.csv"), &csv, &mut artifacts)?;
            let tol = tolerance(cfg, 1e-8)?;
            let params = format!("n_i={n_i} N={big_n} k={k} c={c}");
            rows.push(row(cfg, params, "closed form matches quadrature", worst, tol, worst <= tol));
        }
    }
    write_artifact(&dir, format!("{name}.result.csv"), &report::to_csv(&rows), &mut artifacts)?;
    Ok(RunOutcome { artifacts, rows })
}

/// Input and output grids used by every norm probe.
pub fn probe_grids() -> Result<(LogGrid, LogGrid)> {
    Ok((LogGrid::per_decade(1.0, 10.0, 16)?, LogGrid::per_decade(1e-6, 1e14, 8)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    const REGION: &str = r#"
name = "d33"
svg = true
[experiment]
kind = "region"
type = "D"
d1 = 3
d2 = 3
alpha = 2
beta = 2
"#;

    #[test]
    fn parses_region_config() {
        let cfg = parse_config(REGION).unwrap();
        assert!(cfg.svg);
        assert!(matches!(cfg.experiment, Experiment::Region { region: RegionType::D, lattice: 60, .. }));
    }

    #[test]
    fn rejects_unknown_keys() {
        for extra in ["colour = 1\n", "[experiment]\n"] {
            let text = format!("{extra}{REGION}");
            assert!(parse_config(&text).is_err(), "{extra}");
        }
        let nested = REGION.replace("beta = 2", "beta = 2\ngamma = 1");
        let e = parse_config(&nested).unwrap_err();
        assert!(e.to_string().contains("gamma"), "{e}");
    }

    #[test]
    fn rational_parameters() {
        let text = REGION.replace("alpha = 2", "alpha = \"3/2\"");
        let cfg = parse_config(&text).unwrap();
        let Experiment::Region { alpha: Some(a), .. } = cfg.experiment else { panic!() };
        assert_eq!(a.get("alpha").unwrap(), Q::new(3, 2));
    }
}
