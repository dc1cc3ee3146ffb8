use approx::assert_relative_eq;
use proptest::prelude::*;

use confront::csd::{csd_profile, CsdGrid};
use confront::fronts::{find_speed, kpp_bracket, kpp_theta_norm, one_d_bistable_speed, Normalization, SlabProblem};
use confront::geometry::{Layout, Potential, SlabGrid, TransverseGrid};
use confront::nonlinearity::{CsdMedium, Heterogeneity, Reaction};
use confront::parabolic::ImexStepper;
use confront::profiles::{bump, energy, energy_gradient, solve_profile_kpp, tail_rate};
use confront::spectral::principal_eigen;

const NX: usize = 41;
const NY: usize = 25;

fn small_slab() -> SlabGrid {
    SlabGrid::new(4.0, NX, TransverseGrid::new(Layout::Line, 3.0, NY).unwrap()).unwrap()
}

fn media() -> [(Heterogeneity, Reaction); 2] {
    [
        (Heterogeneity::confined(0.5, Potential::Quadratic), Reaction::kpp(1.0).unwrap()),
        (
            Heterogeneity::Csd(CsdMedium::new(1.0, 2.0, 1.0).unwrap()),
            Reaction::bistable(1.0, 0.3).unwrap(),
        ),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn imex_steps_preserve_order(
        base in proptest::collection::vec(0.0..1.0f64, NX * NY),
        gap in proptest::collection::vec(0.0..0.5f64, NX * NY),
        which in 0usize..2,
        dt in 0.01..0.2f64,
    ) {
        let g = small_slab();
        let (het, f) = &media()[which];
        let dt = dt.min(0.9 / f.lipschitz());
        let mut u: Vec<f64> = base.iter().map(|v| v * 0.6).collect();
        let mut v: Vec<f64> = u.iter().zip(&gap).map(|(a, b)| (a + b).min(1.0)).collect();
        for i in [0, NX - 1] {
            for j in 0..NY {
                u[g.index(i, j)] = 0.0;
                v[g.index(i, j)] = 0.0;
            }
        }
        for j in [0, NY - 1] {
            for i in 0..NX {
                u[g.index(i, j)] = 0.0;
                v[g.index(i, j)] = 0.0;
            }
        }
        let mut stepper = ImexStepper::new(&g, het, f, dt).unwrap();
        for _ in 0..5 {
            stepper.step(&mut u);
            stepper.step(&mut v);
        }
        let worst = u.iter().zip(&v).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(worst <= 1e-12, "ordering lost by {worst:e}");
    }
}

#[test]
fn converged_fronts_are_monotone_in_x1() {
    let f = Reaction::kpp(1.0).unwrap();
    let alpha = 1.0;
    let tg = TransverseGrid::new(Layout::Radial(1), 5.0, 26).unwrap();
    let lambda = principal_eigen(&tg, &Potential::Quadratic, alpha, 1.0).unwrap().lambda;
    let v = solve_profile_kpp(&tg, alpha, &Potential::Quadratic, &f, Default::default())
        .unwrap()
        .outcome
        .into_profile()
        .unwrap()
        .values;
    let slab = SlabGrid::with_spacing(8.0, 0.25, tg).unwrap();
    let het = Heterogeneity::confined(alpha, Potential::Quadratic);
    let problem = SlabProblem::new(&slab, &het, &f, &v).unwrap();
    let norm = Normalization::Point {
        level: kpp_theta_norm(&f, lambda).unwrap(),
    };
    let search = find_speed(&problem, norm, kpp_bracket(lambda), None).unwrap();
    assert!(search.state.max_x1_increase <= 1e-10, "{}", search.state.max_x1_increase);
    assert!(search.history_monotone());

    let one_d = one_d_bistable_speed(10.0, 0.1, &Reaction::bistable(1.0, 0.3).unwrap()).unwrap();
    assert!(one_d.z.windows(2).all(|w| w[1] <= w[0] + 1e-10));
}

#[test]
fn tail_rate_grows_with_confinement_and_absorption() {
    let f = Reaction::kpp(1.0).unwrap();
    let tg = TransverseGrid::new(Layout::Radial(1), 6.0, 121).unwrap();
    let rates: Vec<f64> = [0.1, 0.2, 0.4]
        .iter()
        .map(|&a| {
            let p = solve_profile_kpp(&tg, a, &Potential::Quadratic, &f, Default::default())
                .unwrap()
                .outcome
                .into_profile()
                .unwrap();
            tail_rate(&tg, &p.values)
        })
        .collect();
    assert!(rates.windows(2).all(|w| w[1] > w[0]), "{rates:?}");

    let cubic = Reaction::bistable(1.0, 0.25).unwrap();
    let grid = CsdGrid::default();
    let mut prev = 0.0;
    for m in [0.5, 1.0, 2.0] {
        let tg = grid.transverse(6.0, m, grid.hy).unwrap();
        let p = csd_profile(6.0, 6.0, m, &cubic, &tg, Default::default())
            .unwrap()
            .into_profile()
            .unwrap();
        let rate = tail_rate(&tg, &p.values);
        assert!(rate >= m.sqrt() * (1.0 - 1e-3), "m = {m}: rate {rate}");
        assert!(rate > prev);
        prev = rate;
    }
}

#[test]
fn csd_energy_gradient_matches_finite_differences() {
    let tg = TransverseGrid::new(Layout::Line, 8.0, 161).unwrap();
    let f = Reaction::bistable(1.0, 0.25).unwrap();
    for het in [
        Heterogeneity::Csd(CsdMedium::new(2.0, 2.0, 1.0).unwrap()),
        Heterogeneity::Csd(CsdMedium::new(1.5, 3.0, 2.0).unwrap()),
        Heterogeneity::confined(0.2, Potential::plateau(1.0).unwrap()),
    ] {
        let w = bump(&tg, 0.9, 5.0);
        let grad = energy_gradient(&tg, &het, &f, &w);
        for k in [20usize, 60, 80, 100, 150] {
            let eps = 1e-6;
            let mut plus = w.clone();
            let mut minus = w.clone();
            plus[k] += eps;
            minus[k] -= eps;
            let fd = (energy(&tg, &het, &f, &plus).value - energy(&tg, &het, &f, &minus).value) / (2.0 * eps);
            let exact = grad[k];
            assert!(
                (fd - exact).abs() <= 1e-5 * exact.abs().max(1.0),
                "node {k}: fd {fd} vs {exact}"
            );
        }
    }
}

#[test]
fn energy_is_invariant_under_reflection() {
    let tg = TransverseGrid::new(Layout::Line, 5.0, 101).unwrap();
    let f = Reaction::bistable(1.0, 0.2).unwrap();
    let het = Heterogeneity::Csd(CsdMedium::new(1.0, 2.0, 1.0).unwrap());
    let w: Vec<f64> = tg.coords().iter().map(|&y| (0.8 * (-(y - 0.7).powi(2)).exp()).max(0.0)).collect();
    let mut r = w.clone();
    r.reverse();
    assert_relative_eq!(energy(&tg, &het, &f, &w).value, energy(&tg, &het, &f, &r).value, max_relative = 1e-12);
}

#[test]
fn stronger_absorption_does_not_lower_upper_radius() {
    use confront::csd::{csd_thresholds, ThresholdMode};
    let f = Reaction::bistable(1.0, 0.25).unwrap();
    let grid = CsdGrid::default();
    let mut prev = 0.0;
    for m in [0.5, 1.0, 2.0] {
        let th = csd_thresholds(m, &f, &grid, ThresholdMode::Tie, 1e-2, Default::default()).unwrap();
        assert!(th.l_lower > 0.0 && th.l_lower <= th.l_upper);
        assert!(th.l_upper >= prev - 1e-2, "m = {m}: {} after {prev}", th.l_upper);
        prev = th.l_upper;
    }
    let ratio = csd_thresholds(1.0, &f, &grid, ThresholdMode::Ratio { ratio: 2.0 }, 1e-2, Default::default()).unwrap();
    assert!(ratio.l_lower <= ratio.l_upper);
}
