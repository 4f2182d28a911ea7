mod config;
mod parse;
mod report;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lhh_core::ends_model::{
    divergence_study, dyadic_corpus, endpoint_ratio, EndpointOperator, StudyOperator,
};
use lhh_core::hh_operators::{hh_apply, norm_probe, piecewise_apply, Part, Via};
use lhh_core::lorentz::{decreasing_rearrangement, lorentz_norm};
use lhh_core::regions::{composite_region, region_d, region_f, Composite};
use lhh_core::special_kernels::{bessel_k, resolvent_bound_eval, ResolventQuery};
use lhh_core::{CounterexampleKind, CounterexampleSpec, EndsModel, GridFunction, LorentzIndex, PowerMeasure};

use config::ConfigError;
use parse::KernelSpec;

#[derive(Parser)]
#[command(name = "lhh", version, about = "Lorentz norms, homogeneous kernels, boundedness regions and ends-model experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lorentz quasi-norm of a grid function; prints the value or "inf".
    LorentzNorm {
        #[arg(long)]
        func: PathBuf,
        /// `d=<dim>[,lo=<lower>]` or `haar`.
        #[arg(long)]
        measure: String,
        #[arg(long)]
        p: f64,
        /// A number or `inf`.
        #[arg(long)]
        q: String,
    },
    /// Decreasing rearrangement as CSV.
    Rearrange {
        #[arg(long)]
        func: PathBuf,
        #[arg(long)]
        measure: String,
    },
    #[command(subcommand)]
    Op(OpCommand),
    /// Boundedness region on a lattice of the unit square.
    Region(RegionArgs),
    #[command(subcommand)]
    Special(SpecialCommand),
    #[command(subcommand)]
    Ends(EndsCommand),
    /// Runs experiment configs; exit 1 if any asserted claim fails.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
    /// Merges `*.result.csv` files into one summary table.
    Report {
        results: Vec<PathBuf>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum OpCommand {
    /// Applies a kernel operator to a grid function.
    Apply {
        /// `pp:a=..,b=..[,a2=..,b2=..]` or `hom:sum=λ|max|hardy-upper|hardy-lower`.
        #[arg(long)]
        kernel: String,
        #[arg(long)]
        d1: f64,
        #[arg(long)]
        d2: f64,
        #[arg(long, value_enum, default_value = "full")]
        part: PartArg,
        #[arg(long)]
        func: PathBuf,
        /// Output grid `a:b:n`; defaults to the input grid.
        #[arg(long)]
        out_grid: Option<String>,
        /// Evaluate homogeneous kernels through the Mellin convolution at this `p`.
        #[arg(long)]
        conv_p: Option<f64>,
    },
    /// `‖Kf_ε‖_p / ‖f_ε‖_p` along the extremal family; CSV `eps,ratio`.
    NormProbe {
        #[arg(long)]
        kernel: String,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 1.0)]
        d1: f64,
        #[arg(long, default_value_t = 1.0)]
        d2: f64,
        #[arg(long, value_enum, default_value = "extremal")]
        family: ProbeFamily,
        #[arg(long)]
        eps_list: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PartArg {
    R1,
    R2,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProbeFamily {
    Extremal,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RegionKind {
    #[value(name = "D")]
    D,
    #[value(name = "F")]
    F,
    #[value(name = "T3")]
    T3,
    #[value(name = "T4")]
    T4,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Csv,
    Svg,
}

#[derive(Args)]
struct RegionArgs {
    #[arg(long = "type", value_enum)]
    kind: RegionKind,
    #[arg(long)]
    d1: Option<String>,
    #[arg(long)]
    d2: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    /// End dimensions for T3/T4, e.g. `3,3`.
    #[arg(long)]
    ends: Option<String>,
    #[arg(long, value_enum, default_value = "csv")]
    emit: Emit,
    #[arg(long, default_value_t = 60)]
    lattice: i64,
}

#[derive(Subcommand)]
enum SpecialCommand {
    /// Modified Bessel function `K_ν(r)`.
    Bessel {
        #[arg(long)]
        nu: f64,
        #[arg(long)]
        r: f64,
    },
    /// Resolvent envelope, closed form against quadrature.
    Resolvent {
        #[arg(long)]
        ni: u32,
        #[arg(long = "N")]
        big_n: u32,
        #[arg(long)]
        k: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// `a:b:n` geometric radii.
        #[arg(long)]
        r_grid: String,
        #[arg(long, value_enum, default_value = "csv")]
        emit: Emit,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProbeOp {
    T3,
    S,
    Pairing,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    LogDecay,
    LogDampedPower,
    PurePower,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CorpusArg {
    Standard,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EndpointArg {
    T3,
    S,
}

#[derive(Subcommand)]
enum EndsCommand {
    /// Truncation ladder of a counterexample family; CSV `T,input_norm,<output>,ratio`.
    Probe {
        #[arg(long)]
        ends: String,
        #[arg(long, value_enum)]
        op: ProbeOp,
        #[arg(long, alias = "experiment", value_enum)]
        family: FamilyArg,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        /// Input end of S.
        #[arg(long, default_value_t = 0)]
        end: usize,
        #[arg(long = "T")]
        truncations: String,
        #[arg(long, default_value_t = 64)]
        cells_per_decade: usize,
        #[arg(long, value_enum, default_value = "csv")]
        emit: Emit,
    },
    /// Largest `‖Tf‖ / ‖f‖` over a dyadic corpus.
    Endpoint {
        #[arg(long)]
        ends: String,
        /// Lorentz index `p,q`.
        #[arg(long)]
        idx: String,
        #[arg(long, value_enum, default_value = "standard")]
        corpus: CorpusArg,
        #[arg(long, value_enum, default_value = "s")]
        op: EndpointArg,
        #[arg(long, default_value_t = 0)]
        end: usize,
    },
}

fn read_func(path: &Path) -> Result<GridFunction> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    GridFunction::from_csv(&text).with_context(|| format!("parsing {}", path.display()))
}

fn q_value(s: &str) -> Result<f64> {
    match s {
        "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
        _ => s.parse::<f64>().with_context(|| format!("q: '{s}' is not a number or inf")),
    }
}

fn fmt_value(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        format!("{v:e}")
    }
}

/// Drops any head so the result fits the CSV exchange format.
fn exchangeable(g: GridFunction) -> Result<GridFunction> {
    let out = GridFunction::new(g.grid().clone(), g.values().to_vec())?;
    Ok(match g.tail() {
        Some(t) => out.with_tail(t),
        None => out,
    })
}

fn cmd_op(cmd: OpCommand) -> Result<String> {
    match cmd {
        OpCommand::Apply { kernel, d1, d2, part, func, out_grid, conv_p } => {
            let f = read_func(&func)?;
            let out = match out_grid {
                Some(s) => parse::grid(&s)?,
                None => f.grid().clone(),
            };
            let g = match parse::kernel(&kernel)? {
                KernelSpec::Piecewise(k) => {
                    let part = match part {
                        PartArg::R1 => Part::R1,
                        PartArg::R2 => Part::R2,
                        PartArg::Full => Part::Full,
                    };
                    piecewise_apply(k, &f, &PowerMeasure::new(d1, 1.0)?, &PowerMeasure::new(d2, 1.0)?, part, &out)?
                }
                KernelSpec::Homogeneous(k) => {
                    if !matches!(part, PartArg::Full) {
                        bail!("--part applies to pp: kernels only");
                    }
                    let via = conv_p.map_or(Via::Direct, |p| Via::Convolution { p });
                    hh_apply(&k, &f, &PowerMeasure::new(d1, 0.0)?, &out, via)?
                }
            };
            Ok(exchangeable(g)?.to_csv()?)
        }
        OpCommand::NormProbe { kernel, p, d1, d2, family: ProbeFamily::Extremal, eps_list } => {
            let KernelSpec::Homogeneous(k) = parse::kernel(&kernel)? else {
                bail!("norm-probe needs a hom: kernel");
            };
            let eps = parse::f64_list(&eps_list)?;
            let (in_grid, out) = config::probe_grids()?;
            let est = norm_probe(&k, p, d1, d2, &eps, &in_grid, &out)?;
            let mut s = String::from("eps,ratio\n");
            for (e, r) in est.ratios {
                let _ = writeln!(s, "{e:e},{r:e}");
            }
            Ok(s)
        }
    }
}

fn cmd_region(a: RegionArgs) -> Result<String> {
    let r = match a.kind {
        RegionKind::D | RegionKind::F => {
            let need = |v: &Option<String>, k: &str| match v {
                Some(s) => parse::rational(s),
                None => bail!("--{k} is required for region types D and F"),
            };
            let (d1, d2, al, be) = (need(&a.d1, "d1")?, need(&a.d2, "d2")?, need(&a.alpha, "alpha")?, need(&a.beta, "beta")?);
            if a.kind == RegionKind::D {
                region_d(d1, d2, al, be)?
            } else {
                region_f(d1, d2, al, be)?
            }
        }
        RegionKind::T3 | RegionKind::T4 => {
            let Some(e) = a.ends else {
                bail!("--ends is required for region types T3 and T4");
            };
            let ends: Vec<i64> = parse::u32_list(&e)?.into_iter().map(i64::from).collect();
            composite_region(&ends, if a.kind == RegionKind::T3 { Composite::T3 } else { Composite::T4 })?
        }
    };
    if a.lattice < 1 {
        bail!("--lattice must be >= 1");
    }
    Ok(match a.emit {
        Emit::Csv => r.to_csv(a.lattice),
        Emit::Svg => r.to_svg(),
    })
}

fn cmd_special(cmd: SpecialCommand) -> Result<String> {
    match cmd {
        SpecialCommand::Bessel { nu, r } => Ok(format!("{:e}\n", bessel_k(nu, r)?)),
        SpecialCommand::Resolvent { ni, big_n, k, c, r_grid, emit } => {
            if emit != Emit::Csv {
                bail!("resolvent output is CSV only");
            }
            let mut s = String::from("r,closed_form,quadrature\n");
            for r in parse::points(&r_grid)? {
                let v = resolvent_bound_eval(&ResolventQuery::new(ni, big_n, k, r, c)?)?;
                let _ = writeln!(s, "{r:e},{:e},{:e}", v.closed_form, v.quadrature);
            }
            Ok(s)
        }
    }
}

fn cmd_ends(cmd: EndsCommand) -> Result<String> {
    match cmd {
        EndsCommand::Probe { ends, op, family, p, beta, delta, end, truncations, cells_per_decade, emit } => {
            if emit != Emit::Csv {
                bail!("probe output is CSV only");
            }
            let m = EndsModel::with_ends(&parse::u32_list(&ends)?)?;
            if end >= m.n_ends() {
                bail!("--end {end} is out of range for {} ends", m.n_ends());
            }
            let need = |v: Option<f64>, k: &str| v.with_context(|| format!("--{k} is required for this family"));
            let kind = match family {
                FamilyArg::LogDecay => CounterexampleKind::LogDecay { beta: need(beta, "beta")?, p },
                FamilyArg::LogDampedPower => CounterexampleKind::LogDampedPower { beta: need(beta, "beta")? },
                FamilyArg::PurePower => CounterexampleKind::PurePower { delta: need(delta, "delta")?, p },
            };
            let ts = parse::f64_list(&truncations)?;
            let Some(&t0) = ts.first() else {
                bail!("--T needs at least one truncation");
            };
            let spec = CounterexampleSpec::new(kind, t0)?;
            let idx = LorentzIndex::new(m.n_star() as f64, p)?;
            let (study, label) = match op {
                ProbeOp::Pairing => (StudyOperator::Pairing { n: m.dim(end), p }, "pairing"),
                ProbeOp::T3 => (StudyOperator::Endpoint { model: m, op: EndpointOperator::T3, idx }, "output"),
                ProbeOp::S => (StudyOperator::Endpoint { model: m, op: EndpointOperator::S { end }, idx }, "output"),
            };
            Ok(divergence_study(&study, &spec, &ts, cells_per_decade)?.to_csv(label))
        }
        EndsCommand::Endpoint { ends, idx, corpus: CorpusArg::Standard, op, end } => {
            let m = EndsModel::with_ends(&parse::u32_list(&ends)?)?;
            let pq = parse::f64_list(&idx)?;
            let [p, q] = pq.as_slice() else {
                bail!("--idx must be p,q");
            };
            let idx = LorentzIndex::new(*p, *q)?;
            if end >= m.n_ends() {
                bail!("--end {end} is out of range for {} ends", m.n_ends());
            }
            let op = match op {
                EndpointArg::T3 => EndpointOperator::T3,
                EndpointArg::S => EndpointOperator::S { end },
            };
            let corpus = dyadic_corpus(&m, 10, 64)?;
            let out = corpus[0].ends[0].grid().clone();
            let (s, w) = endpoint_ratio(&m, op, &corpus, idx, &out)?;
            Ok(format!("sup_ratio,witness\n{s:e},{w}\n"))
        }
    }
}

fn cmd_run(configs: &[PathBuf]) -> Result<(String, bool)> {
    let mut out = String::new();
    let mut all = true;
    for path in configs {
        let cfg = config::load(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let outcome = config::run_experiment(&cfg, base)?;
        for a in &outcome.artifacts {
            let _ = writeln!(out, "wrote {}", a.display());
        }
        for r in &outcome.rows {
            let _ = writeln!(out, "{} {}: {} (measured {:e}, tolerance {:e})", r.status(), r.experiment, r.claim, r.measured, r.tolerance);
        }
        all &= outcome.passed();
    }
    Ok((out, all))
}

fn execute(cmd: Command) -> Result<(String, bool)> {
    let ok = |s: String| Ok((s, true));
    match cmd {
        Command::LorentzNorm { func, measure, p, q } => {
            let f = read_func(&func)?;
            let idx = LorentzIndex::new(p, q_value(&q)?)?;
            ok(format!("{}\n", fmt_value(lorentz_norm(&f, &parse::measure(&measure)?, idx))))
        }
        Command::Rearrange { func, measure } => {
            let f = read_func(&func)?;
            ok(decreasing_rearrangement(&f, &parse::measure(&measure)?).to_csv())
        }
        Command::Op(c) => ok(cmd_op(c)?),
        Command::Region(a) => ok(cmd_region(a)?),
        Command::Special(c) => ok(cmd_special(c)?),
        Command::Ends(c) => ok(cmd_ends(c)?),
        Command::Run { configs } => cmd_run(&configs),
        Command::Report { results, output } => {
            let rows = report::emit_report(&results)?;
            let csv = report::to_csv(&rows);
            let pass = rows.iter().all(|r| r.pass);
            match output {
                Some(path) => {
                    std::fs::write(&path, &csv).with_context(|| format!("writing {}", path.display()))?;
                    Ok((String::new(), pass))
                }
                None => Ok((csv, pass)),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok((out, pass)) => {
            print!("{out}");
            if pass {
                ExitCode::SUCCESS
            } else {
                eprintln!("assertion failed: at least one claim did not hold");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            if e.downcast_ref::<ConfigError>().is_some() {
                eprintln!("{e:#}");
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(2)
        }
    }
}
