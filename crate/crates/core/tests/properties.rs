use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use anilap_core::energy::{energy_form, Domain};
use anilap_core::geometry::{metric_dist, scale_map};
use anilap_core::harness::harnack::harnack_terms;
use anilap_core::harness::holder::theory_delta;
use anilap_core::harness::supersolution::{log_moment_check, moser_table};
use anilap_core::kernels::{comparability_estimate, density_eval, tail_mass};
use anilap_core::numerics::ks_two_sample;
use anilap_core::operator::DiscreteOperator;
use anilap_core::solver::{make_supersolution, solve_dirichlet, DirichletProblem};
use anilap_core::stable_mc::{sample_stable, simulate_exit, StablePathConfig};
use anilap_core::{AnisoRect, AnisotropyIndices, BoxRegion, ExteriorBox, ExteriorPolicy, GridFunction, KernelFamily, KernelQuery, TensorGrid};

fn indices(d: usize) -> impl Strategy<Value = AnisotropyIndices> {
    prop::collection::vec(0.2..1.9f64, d).prop_map(|a| AnisotropyIndices::new(a).unwrap())
}

fn bump(x: &[f64], c: &[f64], w: f64) -> f64 {
    x.iter()
        .zip(c)
        .map(|(a, b)| (1.0 - ((a - b) / w).powi(2)).max(0.0).powi(3))
        .product()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_is_below_euclidean_power(idx in indices(2), p in prop::collection::vec(-0.5..0.5f64, 4)) {
        let (x, y) = (&p[..2], &p[2..]);
        let half = AnisoRect::new(&idx, &[0.0, 0.0], 0.5).unwrap();
        prop_assume!(half.contains(x) && half.contains(y));
        let e = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
        let bound = e.powf(idx.alpha_min() / idx.alpha_max());
        prop_assert!(metric_dist(&idx, x, y) <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn rectangle_membership_matches_metric_ball(idx in indices(3), r in 0.01..1.0f64, p in prop::collection::vec(-1.0..1.0f64, 6)) {
        let (x, y) = (&p[..3], &p[3..]);
        let d = metric_dist(&idx, x, y);
        prop_assume!((d - r).abs() > 1e-12);
        prop_assert_eq!(AnisoRect::new(&idx, x, r).unwrap().contains(y), d < r);
    }

    #[test]
    fn volume_doubling_has_exact_exponent(idx in indices(3), r in 0.01..10.0f64, lambda in 1.01..8.0f64) {
        let a = AnisoRect::new(&idx, &[0.0; 3], r).unwrap().volume();
        let b = AnisoRect::new(&idx, &[0.0; 3], lambda * r).unwrap().volume();
        prop_assert!(rel(b / a, lambda.powf(idx.alpha_max() * idx.beta())) < 1e-12);
    }

    #[test]
    fn scale_maps_compose(idx in indices(3), l1 in 0.1..10.0f64, l2 in 0.1..10.0f64) {
        let c = scale_map(&idx, l1).unwrap().compose(&scale_map(&idx, l2).unwrap());
        let direct = scale_map(&idx, l1 * l2).unwrap();
        for (a, b) in c.diagonal().iter().zip(direct.diagonal()) {
            prop_assert!(rel(*a, *b) < 1e-13);
        }
    }

    #[test]
    fn axes_density_is_even(idx in indices(2), axis in 0usize..2, h in 0.01..3.0f64) {
        let k = KernelFamily::Axes(idx);
        let x = [0.2, -0.1];
        let a = density_eval(&k, &x, &KernelQuery::Axis { axis, offset: h }).unwrap();
        let b = density_eval(&k, &x, &KernelQuery::Axis { axis, offset: -h }).unwrap();
        prop_assert!(a > 0.0);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn scaled_tail_mass_is_radius_free(idx in indices(2), r in 0.05..1.0f64) {
        let k = KernelFamily::Axes(idx.clone());
        let m = |r: f64| {
            let rect = AnisoRect::new(&idx, &[0.0, 0.0], r).unwrap();
            r.powf(idx.alpha_max()) * tail_mass(&k, &[0.0, 0.0], &rect).unwrap()
        };
        prop_assert!(rel(m(r), m(1.0)) < 1e-8);
    }

    #[test]
    fn discrete_operator_scales_with_psi(idx in indices(2), lambda in 0.3..3.0f64) {
        // same node values on a grid shrunk by Psi(lambda)^{-1}
        let k = KernelFamily::Axes(idx.clone());
        let hw = idx.half_widths(1.0);
        let grid = |s: f64| {
            let w: Vec<f64> = (0..2).map(|j| hw[j] * s.powf(-idx.axis_exponent(j))).collect();
            TensorGrid::covering(&BoxRegion::new(vec![-w[0], -w[1]], w.clone()).unwrap(), &[15, 15]).unwrap()
        };
        let (g, gl) = (grid(1.0), grid(lambda));
        let values: Vec<f64> = (0..g.len())
            .map(|i| {
                let x = g.coord(i);
                bump(&[x[0] / hw[0], x[1] / hw[1]], &[0.1, -0.05], 0.6)
            })
            .collect();
        let a = DiscreteOperator::new(&k, &g).unwrap().apply_homogeneous(&values);
        let b = DiscreteOperator::new(&k, &gl).unwrap().apply_homogeneous(&values);
        let s = lambda.powf(idx.alpha_max());
        let scale = a.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((y - s * x).abs() <= 1e-10 * s * scale);
        }
    }

    #[test]
    fn energy_scales_with_psi(idx in indices(2), lambda in 0.3..3.0f64) {
        let k = KernelFamily::Axes(idx.clone());
        let grid = |s: f64| {
            let w: Vec<f64> = (0..2).map(|j| s.powf(-idx.axis_exponent(j))).collect();
            TensorGrid::covering(&BoxRegion::new(vec![-w[0], -w[1]], w.clone()).unwrap(), &[12, 12]).unwrap()
        };
        let (g, gl) = (grid(1.0), grid(lambda));
        let u = GridFunction::from_fn(&g, |x| bump(x, &[0.1, 0.0], 0.7), ExteriorPolicy::Zero);
        let ul = GridFunction::new(gl, u.values.clone(), ExteriorPolicy::Zero).unwrap();
        let e = energy_form(&k, Domain::Whole, &u, &u).unwrap();
        let el = energy_form(&k, Domain::Whole, &ul, &ul).unwrap();
        let factor = lambda.powf(idx.alpha_max() - idx.alpha_max() * idx.beta());
        prop_assert!(rel(el, factor * e) < 1e-10, "{} vs {}", el, factor * e);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operator_is_symmetric_and_negative(idx in indices(2), seed in any::<u64>()) {
        use rand::Rng;
        let k = KernelFamily::Axes(idx.clone());
        let g = TensorGrid::covering(&BoxRegion::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap(), &[9, 11]).unwrap();
        let op = DiscreteOperator::new(&k, &g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let (lu, lv) = (op.apply_homogeneous(&u), op.apply_homogeneous(&v));
        let scale = dot(&lu, &lu).sqrt() * dot(&v, &v).sqrt();
        prop_assert!((dot(&lu, &v) - dot(&u, &lv)).abs() <= 1e-12 * scale);
        prop_assert!(dot(&lu, &u) <= 0.0);
    }

    #[test]
    fn axes_operator_splits_over_axes(idx in indices(2), c in prop::collection::vec(-0.2..0.2f64, 2)) {
        let k = KernelFamily::Axes(idx.clone());
        let (n0, n1) = (13, 17);
        let g = TensorGrid::covering(&BoxRegion::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap(), &[n0, n1]).unwrap();
        let a = |t: f64| (1.0 - ((t - c[0]) / 0.7).powi(2)).max(0.0).powi(3);
        let b = |t: f64| (1.0 - ((t - c[1]) / 0.6).powi(2)).max(0.0).powi(3);
        let u: Vec<f64> = (0..g.len()).map(|i| { let x = g.coord(i); a(x[0]) * b(x[1]) }).collect();
        let lu = DiscreteOperator::new(&k, &g).unwrap().apply_homogeneous(&u);
        let line = |axis: usize, n: usize, f: &dyn Fn(f64) -> f64| {
            let k1 = KernelFamily::Axes(AnisotropyIndices::new(vec![idx.alpha(axis)]).unwrap());
            let g1 = TensorGrid::covering(&BoxRegion::new(vec![-1.0], vec![1.0]).unwrap(), &[n]).unwrap();
            let vals: Vec<f64> = (0..n).map(|i| f(g1.coord(i)[0])).collect();
            (vals.clone(), DiscreteOperator::new(&k1, &g1).unwrap().apply_homogeneous(&vals))
        };
        let (av, la) = line(0, n0, &a);
        let (bv, lb) = line(1, n1, &b);
        let scale = lu.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for i in 0..g.len() {
            let (p, q) = (g.axis_index(i, 0), g.axis_index(i, 1));
            let expect = la[p] * bv[q] + av[p] * lb[q];
            prop_assert!((lu[i] - expect).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn energy_satisfies_cauchy_schwarz(idx in indices(2), c in prop::collection::vec(-0.5..0.5f64, 4)) {
        let k = KernelFamily::Axes(idx);
        let g = TensorGrid::covering(&BoxRegion::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap(), &[10, 10]).unwrap();
        let u = GridFunction::from_fn(&g, |x| bump(x, &c[..2], 0.8), ExteriorPolicy::Zero);
        let v = GridFunction::from_fn(&g, |x| x[0] * bump(x, &c[2..], 0.9), ExteriorPolicy::Zero);
        let uv = energy_form(&k, Domain::Whole, &u, &v).unwrap();
        let uu = energy_form(&k, Domain::Whole, &u, &u).unwrap();
        let vv = energy_form(&k, Domain::Whole, &v, &v).unwrap();
        prop_assert!(uv * uv <= uu * vv * (1.0 + 1e-12));
    }

    #[test]
    fn axes_kernel_is_comparable_to_itself(idx in indices(2)) {
        let k = KernelFamily::Axes(idx.clone());
        let rect = AnisoRect::new(&idx, &[0.0, 0.0], 1.0).unwrap();
        let g = TensorGrid::on_rect(&rect, &[8, 8]).unwrap();
        let trials = vec![
            GridFunction::from_fn(&g, |x| x[0] + 2.0 * x[1], ExteriorPolicy::Zero),
            GridFunction::from_fn(&g, |x| (3.0 * x[0]).sin(), ExteriorPolicy::Zero),
        ];
        let c = comparability_estimate(&k, &rect, &trials).unwrap();
        prop_assert!((c.lower - 1.0).abs() < 1e-12 && (c.upper - 1.0).abs() < 1e-12);
    }

    #[test]
    fn theory_delta_satisfies_its_identity(c_a in 0.5..20.0f64, p in 0.01..2.0f64, theta in 1.01..50.0f64) {
        let (kappa, delta) = theory_delta(c_a, p, theta).unwrap();
        prop_assert!(((1.0 - 0.5 * kappa) - theta.powf(-delta)).abs() < 1e-14);
    }

    #[test]
    fn moser_sequence_is_constant_for_constants(c in 0.01..100.0f64, p0 in 0.01..0.9f64) {
        let idx = AnisotropyIndices::new(vec![1.5, 0.5]).unwrap();
        let k = KernelFamily::Axes(idx.clone());
        let rect = AnisoRect::new(&idx, &[0.0, 0.0], 1.0).unwrap();
        let g = TensorGrid::on_rect(&rect, &[16, 64]).unwrap();
        let t = moser_table(&k, &GridFunction::constant(&g, c), &[0.0, 0.0], 0.5, p0, 5).unwrap();
        for row in &t.rows {
            prop_assert!(rel(row.a_n, c) < 1e-13);
        }
    }
}

fn problem(idx: &AnisotropyIndices, f: f64, g: ExteriorPolicy) -> DirichletProblem {
    let rect = AnisoRect::new(idx, &[0.0, 0.0], 1.0).unwrap();
    DirichletProblem::new(&KernelFamily::Axes(idx.clone()), &rect, &[12, 12], move |_| f, g).unwrap()
}

fn outer_box(lo: f64, value: f64) -> ExteriorPolicy {
    ExteriorPolicy::Boxes(vec![ExteriorBox {
        region: BoxRegion::new(vec![lo, -1.0], vec![lo + 1.0, 1.0]).unwrap(),
        value,
    }])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn solutions_are_linear_in_the_data(idx in indices(2), f1 in -2.0..2.0f64, f2 in -2.0..2.0f64, b1 in -1.0..1.0f64, b2 in -1.0..1.0f64) {
        let tol = 1e-10;
        let boxes = |v1: f64, v2: f64| ExteriorPolicy::Boxes(vec![
            ExteriorBox { region: BoxRegion::new(vec![1.5, -1.0], vec![2.5, 1.0]).unwrap(), value: v1 },
            ExteriorBox { region: BoxRegion::new(vec![-3.0, -0.5], vec![-2.0, 2.0]).unwrap(), value: v2 },
        ]);
        let s1 = solve_dirichlet(&problem(&idx, f1, boxes(b1, 0.0)), tol).unwrap();
        let s2 = solve_dirichlet(&problem(&idx, f2, boxes(0.0, b2)), tol).unwrap();
        let s = solve_dirichlet(&problem(&idx, f1 + f2, boxes(b1, b2)), tol).unwrap();
        let scale = s.u.values.iter().map(|v| v.abs()).fold(1.0, f64::max);
        for i in 0..s.u.values.len() {
            prop_assert!((s.u.values[i] - s1.u.values[i] - s2.u.values[i]).abs() <= 10.0 * tol * scale);
        }
    }

    #[test]
    fn solutions_are_ordered_by_the_data(idx in indices(2), f in -2.0..2.0f64, df in 0.0..1.0f64, g in -1.0..1.0f64, dg in 0.0..1.0f64) {
        let tol = 1e-10;
        let lo = solve_dirichlet(&problem(&idx, f, ExteriorPolicy::Constant(g)), tol).unwrap();
        let hi = solve_dirichlet(&problem(&idx, f + df, ExteriorPolicy::Constant(g + dg)), tol).unwrap();
        let scale = hi.u.values.iter().map(|v| v.abs()).fold(1.0, f64::max);
        for (a, b) in lo.u.values.iter().zip(&hi.u.values) {
            prop_assert!(*a <= b + 10.0 * tol * scale);
        }
    }

    #[test]
    fn log_moment_ignores_positive_scaling(c in 0.01..100.0f64, level in 0.2..2.0f64) {
        let idx = AnisotropyIndices::new(vec![1.5, 0.5]).unwrap();
        let k = KernelFamily::Axes(idx.clone());
        let sup = make_supersolution(&problem(&idx, 0.0, ExteriorPolicy::Constant(level)), 0.5, 1e-10).unwrap();
        let inner = AnisoRect::new(&idx, &[0.0, 0.0], 0.5).unwrap();
        let eps = sup.solution.u.min();
        let a = log_moment_check(&k, &sup, &inner, 2.0, 3.0, eps).unwrap();
        let mut scaled = sup.clone();
        scaled.solution.u = sup.solution.u.map(|v| c * v);
        scaled.f = sup.f.iter().map(|v| c * v).collect();
        let b = log_moment_check(&k, &scaled, &inner, 2.0, 3.0, c * eps).unwrap();
        prop_assert!(rel(b.lhs, a.lhs) < 1e-10);
    }

    #[test]
    fn harnack_deficit_is_monotone(extra_f in 0.0..2.0f64, neg in 0.0..1.0f64, more in 0.0..1.0f64) {
        // u held fixed; only the forcing and the exterior negative part change
        let idx = AnisotropyIndices::new(vec![1.5, 0.5]).unwrap();
        let k = KernelFamily::Axes(idx.clone());
        let rect = AnisoRect::new(&idx, &[0.0, 0.0], 1.0).unwrap();
        let p = DirichletProblem::new(&k, &rect, &[16, 64], |_| 0.0, ExteriorPolicy::Constant(1.0)).unwrap();
        let base = make_supersolution(&p, 0.0, 1e-10).unwrap();
        let with = |df: f64, g: f64| {
            let mut s = base.clone();
            s.f = s.f.iter().map(|v| v + df).collect();
            s.solution.u.exterior = outer_box(2.0, -g);
            harnack_terms(&k, &s, &rect, &[0.1], 3.0).unwrap()
        };
        let (a, b) = (with(0.0, neg), with(extra_f, neg + more));
        prop_assert!(b.deficit(0.5, 0) <= a.deficit(0.5, 0) + 1e-14);
        prop_assert!(b.critical_c(0) >= a.critical_c(0) - 1e-14);
    }
}

#[test]
fn increments_are_uncorrelated_across_axes() {
    let idx = AnisotropyIndices::new(vec![1.5, 0.5]).unwrap();
    let cfg = StablePathConfig::new(&idx, 1e-3, 3, 10).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 100_000;
    let mut inc = [0.0; 2];
    let mut s = 0.0;
    for _ in 0..n {
        cfg.step(&mut rng, &mut inc);
        s += inc[0].signum() * inc[1].signum();
    }
    // sign correlation; the increments themselves have no variance
    assert!((s / n as f64).abs() <= 3.0 / (n as f64).sqrt());
}

#[test]
fn paths_do_not_depend_on_thread_count() {
    let idx = AnisotropyIndices::new(vec![1.5, 0.5]).unwrap();
    let cfg = StablePathConfig::new(&idx, 1e-3, 17, 100_000).unwrap();
    let rect = AnisoRect::new(&idx, &[0.0, 0.0], 0.25).unwrap().as_box();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate_exit(&cfg, &[0.0, 0.0], &rect, 2000).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.positions, b.positions);
    assert_eq!(a.times, b.times);
}

#[test]
fn exit_positions_are_self_similar() {
    let idx = AnisotropyIndices::new(vec![1.5, 0.5]).unwrap();
    let r = 0.25;
    let dt = 1e-3;
    let n = 4000;
    let base = {
        let cfg = StablePathConfig::new(&idx, dt, 1, 1_000_000).unwrap();
        let rect = AnisoRect::new(&idx, &[0.0, 0.0], r).unwrap().as_box();
        simulate_exit(&cfg, &[0.0, 0.0], &rect, n).unwrap()
    };
    for (lambda, seed) in [(2.0, 2), (0.5, 3)] {
        let cfg = StablePathConfig::new(&idx, dt * f64::powf(lambda, idx.alpha_max()), seed, 1_000_000).unwrap();
        let rect = AnisoRect::new(&idx, &[0.0, 0.0], lambda * r).unwrap().as_box();
        let s = simulate_exit(&cfg, &[0.0, 0.0], &rect, n).unwrap();
        let psi = scale_map(&idx, lambda).unwrap();
        for axis in 0..2 {
            let a: Vec<f64> = base.positions.iter().map(|p| p[axis]).collect();
            let b: Vec<f64> = s.positions.iter().map(|p| p[axis] / psi.diagonal()[axis]).collect();
            let (_, pval) = ks_two_sample(&a, &b);
            assert!(pval > 0.01, "lambda {lambda}, axis {axis}: p = {pval}");
        }
    }
}

#[test]
fn hill_estimate_recovers_small_index() {
    let mut x: Vec<f64> = sample_stable(0.5, 1_000_000, 8).unwrap().iter().map(|v| v.abs()).collect();
    x.sort_by(|a, b| b.total_cmp(a));
    let k = x.len() / 100;
    let hill = k as f64 / x[..k].iter().map(|v| (v / x[k]).ln()).sum::<f64>();
    assert!((hill - 0.5).abs() < 0.05, "{hill}");
}

#[test]
fn solutions_settle_under_refinement() {
    let idx = AnisotropyIndices::new(vec![1.2]).unwrap();
    let k = KernelFamily::Axes(idx.clone());
    let rect = AnisoRect::new(&idx, &[0.0], 1.0).unwrap();
    let solve = |n| {
        let p = DirichletProblem::new(&k, &rect, &[n], |x| (1.0 - x[0] * x[0]).max(0.0), ExteriorPolicy::Zero).unwrap();
        solve_dirichlet(&p, 1e-12).unwrap().u
    };
    let probes: Vec<f64> = (-8..=8).map(|i| i as f64 / 10.0).collect();
    let levels: Vec<GridFunction> = [32, 64, 128, 256].into_iter().map(solve).collect();
    let gaps: Vec<f64> = levels
        .windows(2)
        .map(|w| {
            probes
                .iter()
                .map(|&t| (w[0].interpolate(&[t]).unwrap() - w[1].interpolate(&[t]).unwrap()).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(gaps.windows(2).all(|g| g[1] < g[0]), "{gaps:?}");
}
