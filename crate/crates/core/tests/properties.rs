use lhh_core::hh_operators::{hh_apply, hh_constant_pq, integrate_against, radial_reduce, HomogeneousKernel, Part, PiecewiseApplication, PiecewisePowerKernel, Via};
use lhh_core::lorentz::{decreasing_rearrangement, Piece, distribution_function, hl_pairing, lorentz_norm};
use lhh_core::quad;
use lhh_core::regions::{interpolate_rw, lattice, region_d, region_f, Line, Q};
use lhh_core::{GridFunction, LogGrid, LorentzIndex, PowerMeasure, RegionPoint};
use proptest::prelude::*;

fn step(x_min: f64, x_max: f64, values: Vec<f64>) -> GridFunction {
    let n = values.len();
    GridFunction::new(LogGrid::new(x_min, x_max, n).unwrap(), values).unwrap()
}

fn step_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), -5.0..5.0f64], 1..n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn diagonal_lorentz_norm_is_lp_norm(values in step_strategy(24), d in 1u32..4, p in 1.0..6.0f64) {
        let f = step(1.0, 50.0, values);
        let mu = PowerMeasure::new(d as f64, 1.0).unwrap();
        let a = lorentz_norm(&f, &mu, LorentzIndex::new(p, p).unwrap());
        let b = f.lp_norm(&mu, p).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * b.max(1e-300), "{} vs {}", a, b);
    }

    #[test]
    fn weak_norm_below_strong(values in step_strategy(24), p in 1.0..5.0f64, q in 0.5..8.0f64) {
        let f = step(1.0, 20.0, values);
        let mu = PowerMeasure::new(2.0, 1.0).unwrap();
        let weak = lorentz_norm(&f, &mu, LorentzIndex::new(p, f64::INFINITY).unwrap());
        let strong = lorentz_norm(&f, &mu, LorentzIndex::new(p, q).unwrap());
        prop_assert!(weak <= (q / p).powf(1.0 / q) * strong * (1.0 + 1e-12));
    }

    #[test]
    fn rearrangement_is_equimeasurable(values in step_strategy(16), s in 0.0..5.0f64) {
        let f = step(1.0, 10.0, values);
        let mu = PowerMeasure::new(3.0, 1.0).unwrap();
        let fs = decreasing_rearrangement(&f, &mu);
        let df = distribution_function(&f, &mu, s).unwrap();
        let level: f64 = fs
            .pieces()
            .iter()
            .map(|p| match *p {
                Piece::Step { value, t0, t1 } if value > s => t1 - t0,
                _ => 0.0,
            })
            .sum();
        prop_assert!((df - level).abs() <= 1e-9 * df.max(1.0));
    }

    #[test]
    fn hardy_littlewood_holds(a in step_strategy(12), b in step_strategy(12)) {
        let n = a.len().min(b.len());
        let f = step(1.0, 8.0, a[..n].to_vec());
        let g = step(1.0, 8.0, b[..n].to_vec());
        let mu = PowerMeasure::new(2.0, 1.0).unwrap();
        let h = hl_pairing(&f, &g, &mu, None).unwrap();
        prop_assert!(h.lhs <= h.rhs * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn region_d_is_convex(i in 0usize..3721, j in 0usize..3721, t in 1i64..10) {
        let d = region_d(Q::from(3), Q::from(3), Q::from(2), Q::from(2)).unwrap();
        let pts: Vec<RegionPoint> = lattice(60).collect();
        let (a, b) = (pts[i], pts[j]);
        prop_assume!(d.contains(a) && d.contains(b));
        if let Ok(c) = interpolate_rw(a, b, Q::new(t, 10)) {
            prop_assert!(d.contains(c));
        }
    }

    #[test]
    fn removing_a_line_only_affects_that_line(i in 0usize..3721, k in 0i64..=12) {
        let f = region_f(Q::from(3), Q::from(3), Q::from(2), Q::from(2)).unwrap();
        let line = Q::new(k, 12);
        let g = f.minus_line(Line::V(line));
        let p = lattice(60).nth(i).unwrap();
        if p.v == line {
            prop_assert!(!g.contains(p));
        } else {
            prop_assert_eq!(g.contains(p), f.contains(p));
        }
    }

    #[test]
    fn piecewise_adjoint_identity(
        a in prop::collection::vec(0.0..3.0f64, 6),
        b in prop::collection::vec(0.0..3.0f64, 6),
        alpha in 0.5..2.5f64,
        beta in 0.5..2.5f64,
        shift in -0.4..0.4f64,
    ) {
        // ∫ (Rf) g dμ₂ = ∫ f (R*g) dμ₁
        let (d1, d2) = (3.0, 2.5);
        let k = PiecewisePowerKernel::new(alpha, beta.min(d1), (alpha + shift).clamp(0.1, d2), beta.min(d1) + alpha - (alpha + shift).clamp(0.1, d2));
        prop_assume!(k.is_ok());
        let k = k.unwrap();
        let mu1 = PowerMeasure::new(d1, 1.0).unwrap();
        let mu2 = PowerMeasure::new(d2, 1.0).unwrap();
        let f = step(1.0, 30.0, a);
        let g = step(1.0, 30.0, b);
        let rf = PiecewiseApplication::new(k, &f, &mu1, &mu2);
        let rg = PiecewiseApplication::new(k.adjoint(), &g, &mu2, &mu1);
        prop_assume!(rf.is_ok() && rg.is_ok());
        let (rf, rg) = (rf.unwrap(), rg.unwrap());
        let lhs = integrate_against(|x| rf.eval(x, Part::Full).unwrap(), &g, &mu2);
        let rhs = integrate_against(|y| rg.eval(y, Part::Full).unwrap(), &f, &mu1);
        prop_assert!((lhs - rhs).abs() <= 1e-8 * lhs.abs().max(1e-12), "{} vs {}", lhs, rhs);
    }
}

#[test]
fn radial_reduction_matches_planar_quadrature() {
    // ℝ²: ∫ K₀(|x|, |y|) f(|y|) dy at x = (s, 0) by iterated Cartesian quadrature
    let k0 = |s: f64, t: f64| (1.0 + s + t).powi(-4);
    let grid = LogGrid::new(0.5, 2.0, 2).unwrap();
    let f = GridFunction::new(grid.clone(), vec![1.0, 0.5]).unwrap();
    let out = LogGrid::new(0.3, 3.0, 3).unwrap();
    let red = radial_reduce(k0, &f, 2.0, &out).unwrap();
    let radii = grid.boundaries();
    for (c, &v) in red.profile.values().iter().enumerate() {
        let s = out.midpoint(c);
        let inner = |y1: f64| {
            let mut cuts: Vec<f64> = radii.iter().filter(|&&r| r > y1.abs()).map(|&r| (r * r - y1 * y1).sqrt()).collect();
            cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let g = |y2: f64| {
                let t = y1.hypot(y2);
                k0(s, t) * f.eval(t)
            };
            2.0 * cuts.windows(2).map(|w| quad::integrate(g, w[0], w[1])).sum::<f64>()
                + if cuts.is_empty() { 0.0 } else { 2.0 * quad::integrate(g, 0.0, cuts[0]) }
        };
        let mut cuts: Vec<f64> = radii.iter().flat_map(|&r| [-r, r]).collect();
        cuts.push(0.0);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let planar: f64 = cuts.windows(2).map(|w| quad::integrate(inner, w[0], w[1])).sum();
        let radial = red.sphere_area * v;
        assert!((planar - radial).abs() <= 1e-6 * radial, "s = {s}: {planar} vs {radial}");
    }
}

#[test]
fn lebesgue_pq_bound_instance() {
    // (x + y)^{-3/4}: degree -(1/2 + 1/4) for p = 2, q = 4, d₁ = d₂ = 1
    let k = HomogeneousKernel::sum_power(0.75);
    let (kk, r) = hh_constant_pq(&k, 2.0, 4.0, 1.0, 1.0).unwrap();
    assert!((r - 4.0 / 3.0).abs() < 1e-12);
    let mu = PowerMeasure::new(1.0, 0.0).unwrap();
    let out = LogGrid::per_decade(1e-4, 1e4, 24).unwrap();
    for seed in 0..8u64 {
        let values: Vec<f64> = (0..12).map(|i| ((seed * 31 + i * 17) % 11) as f64 / 10.0).collect();
        let f = step(0.1, 10.0, values);
        let kf = hh_apply(&k, &f, &mu, &out, Via::Direct).unwrap();
        let lhs = kf.lp_norm(&mu, 4.0).unwrap();
        let rhs = kk.powf(1.0 / r) * f.lp_norm(&mu, 2.0).unwrap();
        assert!(lhs <= rhs * (1.0 + 1e-3), "seed {seed}: {lhs} > {rhs}");
    }
}
