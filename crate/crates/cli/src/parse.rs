use anyhow::{anyhow, bail, Context, Result};
use lhh_core::regions::Q;
use lhh_core::{HomogeneousKernel, LogGrid, PiecewisePowerKernel, PowerMeasure};

#[derive(Debug, Clone)]
pub enum KernelSpec {
    Piecewise(PiecewisePowerKernel),
    Homogeneous(HomogeneousKernel),
}

fn key_values(s: &str) -> Result<Vec<(&str, &str)>> {
    s.split(',')
        .filter(|p| !p.is_empty())
        .map(|p| p.split_once('=').ok_or_else(|| anyhow!("expected key=value, got '{p}'")))
        .collect()
}

fn number(key: &str, v: &str) -> Result<f64> {
    v.trim().parse::<f64>().with_context(|| format!("{key}: '{v}' is not a number"))
}

/// `pp:a=..,b=..[,a2=..,b2=..]`, `hom:sum=λ`, `hom:max`, `hom:hardy-upper`, `hom:hardy-lower`.
pub fn kernel(s: &str) -> Result<KernelSpec> {
    let (family, rest) = s.split_once(':').unwrap_or((s, ""));
    match family {
        "pp" => {
            let (mut a, mut b, mut a2, mut b2) = (None, None, None, None);
            for (k, v) in key_values(rest)? {
                let x = number(k, v)?;
                match k {
                    "a" => a = Some(x),
                    "b" => b = Some(x),
                    "a2" => a2 = Some(x),
                    "b2" => b2 = Some(x),
                    _ => bail!("unknown pp kernel key '{k}' (expected a, b, a2, b2)"),
                }
            }
            let a = a.ok_or_else(|| anyhow!("pp kernel needs a="))?;
            let b = b.ok_or_else(|| anyhow!("pp kernel needs b="))?;
            Ok(KernelSpec::Piecewise(PiecewisePowerKernel::new(a, b, a2.unwrap_or(a), b2.unwrap_or(b))?))
        }
        "hom" => {
            let rest = rest.trim_end_matches(':');
            let k = match rest {
                "max" => HomogeneousKernel::max_kernel(),
                "hardy-upper" => HomogeneousKernel::hardy_upper(),
                "hardy-lower" => HomogeneousKernel::hardy_lower(),
                _ => match rest.split_once('=') {
                    Some(("sum", v)) => {
                        let l = number("sum", v)?;
                        if !(l > 0.0) {
                            bail!("sum kernel needs λ > 0, got {l}");
                        }
                        HomogeneousKernel::sum_power(l)
                    }
                    _ => bail!("unknown homogeneous kernel '{rest}' (expected sum=λ, max, hardy-upper, hardy-lower)"),
                },
            };
            Ok(KernelSpec::Homogeneous(k))
        }
        _ => bail!("unknown kernel family '{family}' (expected pp or hom)"),
    }
}

/// `haar` or `d=..[,lo=..]`.
pub fn measure(s: &str) -> Result<PowerMeasure> {
    if s == "haar" {
        return Ok(PowerMeasure::haar());
    }
    let (mut d, mut lo) = (None, 0.0);
    for (k, v) in key_values(s)? {
        match k {
            "d" => d = Some(number(k, v)?),
            "lo" => lo = number(k, v)?,
            _ => bail!("unknown measure key '{k}' (expected d, lo)"),
        }
    }
    Ok(PowerMeasure::new(d.ok_or_else(|| anyhow!("measure needs d="))?, lo)?)
}

pub fn f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|v| number("list", v)).collect()
}

pub fn u32_list(s: &str) -> Result<Vec<u32>> {
    s.split(',')
        .map(|v| v.trim().parse::<u32>().with_context(|| format!("'{v}' is not a nonnegative integer")))
        .collect()
}

/// `a:b:n` as a geometric grid with `n` cells.
pub fn grid(s: &str) -> Result<LogGrid> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        bail!("grid must be a:b:n, got '{s}'");
    };
    let n = n.parse::<usize>().with_context(|| format!("cell count '{n}'"))?;
    Ok(LogGrid::new(number("grid", a)?, number("grid", b)?, n)?)
}

/// `a:b:n` as `n` geometrically spaced points from `a` to `b`.
pub fn points(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        bail!("range must be a:b:n, got '{s}'");
    };
    let (a, b) = (number("range", a)?, number("range", b)?);
    let n = n.parse::<usize>().with_context(|| format!("point count '{n}'"))?;
    if !(a > 0.0 && b > a) || n < 2 {
        bail!("range needs 0 < a < b and n >= 2, got {a}:{b}:{n}");
    }
    let h = (b / a).ln() / (n - 1) as f64;
    Ok((0..n).map(|i| if i == n - 1 { b } else { a * (h * i as f64).exp() }).collect())
}

/// Integer or `p/q`.
pub fn rational(s: &str) -> Result<Q> {
    s.trim().parse::<Q>().map_err(|e| anyhow!("'{s}' is not a rational number: {e}"))
}
