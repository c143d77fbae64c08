use proptest::prelude::*;
use rayon::prelude::*;

use qew_core::bound::{objective, supremum, CROSSOVER_GAP};
use qew_core::disorder::{ObstacleDistribution, QuenchedField};
use qew_core::dynamics::{integrate, SimConfig, Simulation};
use qew_core::lattice::{
    boundary_flux, compositions, laplacian_sum, ring_size, Cube, Domain, HeightField,
};
use qew_core::oracle::{
    count_admissible, enumerate_admissible, extension_count_bound, is_admissible, min_avg_velocity,
    y_statistic, ExtensionPlan, FrozenDisorder, DEFAULT_BUDGET,
};

fn distribution() -> impl Strategy<Value = ObstacleDistribution> {
    prop_oneof![
        Just(ObstacleDistribution::Zero),
        (0.0..5.0f64).prop_map(|strength| ObstacleDistribution::Constant { strength }),
        (0.0..3.0f64, 0.0..3.0f64)
            .prop_map(|(low, w)| ObstacleDistribution::Uniform { low, high: low + w }),
        (1.5..6.0f64).prop_map(|rate| ObstacleDistribution::Exponential { rate }),
        (0.0..=1.0f64, 0.0..4.0f64).prop_map(|(probability, strength)| {
            ObstacleDistribution::BernoulliScaled {
                probability,
                strength,
            }
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn strengths_do_not_depend_on_evaluation_order(
        seed in any::<u64>(),
        keys in prop::collection::vec((-1000i64..1000, -1000i64..1000, 1i64..100_000), 1..200),
    ) {
        let field = QuenchedField::new(seed, 2, ObstacleDistribution::Exponential { rate: 2.0 }).unwrap();
        let forward: Vec<u64> = keys.iter().map(|&(x, y, h)| field.strength(&[x, y], h).to_bits()).collect();
        let mut backward: Vec<u64> = keys.iter().rev().map(|&(x, y, h)| field.strength(&[x, y], h).to_bits()).collect();
        backward.reverse();
        let parallel: Vec<u64> = keys.par_iter().map(|&(x, y, h)| field.strength(&[x, y], h).to_bits()).collect();
        prop_assert_eq!(&forward, &backward);
        prop_assert_eq!(&forward, &parallel);
    }

    #[test]
    fn window_supremum_is_the_strength(seed in any::<u64>(), x in -500i64..500, j in 1i64..10_000) {
        let field = QuenchedField::new(seed, 1, ObstacleDistribution::Exponential { rate: 2.0 }).unwrap();
        let points = 10_000;
        let sup = (0..=points)
            .map(|i| field.force(&[x], j as f64 - 0.5 + i as f64 / points as f64))
            .fold(0.0, f64::max);
        prop_assert!((sup - field.strength(&[x], j)).abs() <= 1e-12);
    }

    #[test]
    fn force_vanishes_between_obstacles(seed in any::<u64>(), x in -500i64..500, j in -100i64..10_000) {
        let field = QuenchedField::new(seed, 1, ObstacleDistribution::Exponential { rate: 2.0 }).unwrap();
        prop_assert_eq!(field.force(&[x], j as f64 + 0.5), 0.0);
    }

    #[test]
    fn beta_is_at_least_one(d in distribution(), lambda in 0.05..1.4f64) {
        prop_assert!(d.beta(lambda).unwrap() >= 1.0);
    }

    #[test]
    fn divergence_identity(
        dimension in 1usize..=3,
        radius in 1usize..=3,
        seed in any::<u64>(),
    ) {
        let support = Cube::new(radius + 1, dimension).unwrap();
        let mut state = seed;
        let values = (0..support.len())
            .map(|_| {
                state = qew_core::rng::mix64(state.wrapping_add(1));
                (state % 2001) as i64 - 1000
            })
            .collect();
        let field = HeightField::new(Domain::Cube(support), values).unwrap();
        prop_assert_eq!(boundary_flux(&field, radius).unwrap(), laplacian_sum(&field, radius).unwrap());
    }

    #[test]
    fn bound_is_monotone_and_non_negative(lambda in 0.1..3.0f64, log_beta in 0.0..5.0f64) {
        let beta = log_beta.exp();
        let mut previous = 0.0;
        for g in -6..=100 {
            let v = supremum(lambda, beta, g).value;
            prop_assert!(v >= 0.0);
            prop_assert!(v >= previous - 1e-12, "G = {}: {} < {}", g, v, previous);
            previous = v;
        }
    }

    #[test]
    fn branches_meet_at_the_crossover(lambda in 0.1..3.0f64, log_beta in 0.0..5.0f64, g in 0i64..200) {
        let beta = log_beta.exp();
        let mu = lambda + CROSSOVER_GAP;
        let below = objective(lambda, beta, mu * (1.0 - 1e-12), g).unwrap();
        let above = objective(lambda, beta, mu * (1.0 + 1e-12), g).unwrap();
        prop_assert!((below - above).abs() < 1e-9);
    }

    #[test]
    fn larger_beta_lowers_a_positive_bound(lambda in 0.1..3.0f64, log_beta in 0.0..5.0f64, g in 1i64..200) {
        let beta = log_beta.exp();
        let v = supremum(lambda, beta, g).value;
        let w = supremum(lambda, beta * 1.5, g).value;
        if v > 0.0 {
            prop_assert!(w < v);
        } else {
            prop_assert_eq!(w, 0.0);
        }
    }
}

/// Objective on the `mu` grid `lambda + 1e-4 * n`, `n = 1..=500_000`.
fn grid_supremum(lambda: f64, beta: f64, g: i64) -> f64 {
    (1..=500_000)
        .map(|n| objective(lambda, beta, lambda + 1e-4 * n as f64, g).unwrap())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn golden_section_matches_fine_grid(lambda in 0.1..3.0f64, log_beta in 0.0..4.0f64, g in 0i64..500) {
        let beta = log_beta.exp();
        let exact = supremum(lambda, beta, g).value;
        let grid = grid_supremum(lambda, beta, g);
        prop_assert!(exact >= grid - 1e-12);
        prop_assert!((exact - grid).abs() < 1e-3, "{} vs {}", exact, grid);
    }
}

fn small_run(seed: u64, force: f64) -> SimConfig {
    SimConfig {
        dimension: 1,
        side: 16,
        force,
        dt: 0.01,
        final_time: 2.0,
        record_interval: 0.1,
        seed,
        distribution: ObstacleDistribution::Exponential { rate: 2.0 },
        tracked_site: vec![0],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn velocities_stay_non_negative_and_heights_squeezed(seed in any::<u64>(), force in 0.0..6.0f64) {
        let config = small_run(seed, force);
        let field = config.field().unwrap();
        let mut sim = Simulation::new(&config, &field).unwrap();
        while let Some(r) = sim.advance_to_next_record().unwrap() {
            prop_assert!(r.min_velocity >= -1e-10);
            for &u in sim.state().heights.values() {
                prop_assert!(u >= 0.0 && u <= force * r.time + 1e-8);
            }
        }
    }

    #[test]
    fn ordered_starts_stay_ordered(
        seed in any::<u64>(),
        force in 0.5..6.0f64,
        base in prop::collection::vec(0.0..2.0f64, 16),
        bump in prop::collection::vec(0.0..0.5f64, 16),
    ) {
        let config = small_run(seed, force);
        let field = config.field().unwrap();
        let upper: Vec<f64> = base.iter().zip(&bump).map(|(a, b)| a + b).collect();
        let mut low = Simulation::with_initial(&config, &field, base).unwrap();
        let mut high = Simulation::with_initial(&config, &field, upper).unwrap();
        while low.advance_to_next_record().unwrap().is_some() {
            high.advance_to_next_record().unwrap();
            let lo = low.state().heights.values();
            let hi = high.state().heights.values();
            prop_assert!(lo.iter().zip(hi).all(|(a, b)| a <= b));
        }
    }

    #[test]
    fn y_forms_agree(
        dimension in 1usize..=2,
        radius in 1usize..=2,
        cap in 0i64..=2,
        force in 0i64..=3,
        seed in any::<u64>(),
        lambda in 0.2..2.0f64,
        gap in 0.05..3.0f64,
    ) {
        prop_assume!(dimension == 1 || radius == 1 || cap <= 1);
        let field = QuenchedField::new(seed, dimension, ObstacleDistribution::Exponential { rate: 2.0 }).unwrap();
        let disorder = FrozenDisorder::from_field(&field, radius, cap).unwrap();
        let y = y_statistic(radius, dimension, cap, &disorder, force, lambda, lambda + gap, DEFAULT_BUDGET).unwrap();
        prop_assert!(y.relative_gap() <= 1e-12);
        prop_assert!(y.profiles >= 1);
    }

    #[test]
    fn admissible_count_monotone_in_force_and_disorder(
        radius in 1usize..=2,
        cap in 1i64..=2,
        force in 0i64..=3,
        seed in any::<u64>(),
        entry in any::<prop::sample::Index>(),
    ) {
        let field = QuenchedField::new(seed, 1, ObstacleDistribution::Exponential { rate: 1.0 }).unwrap();
        let base = FrozenDisorder::from_field(&field, radius, cap).unwrap();
        let n = count_admissible(radius, 1, cap, &base, force, DEFAULT_BUDGET).unwrap();
        let more = count_admissible(radius, 1, cap, &base, force + 1, DEFAULT_BUDGET).unwrap();
        prop_assert!(more >= n);
        // raise one entry of the table by one
        let rows = base.cube().len();
        let pick = entry.index(rows * cap as usize);
        let (row, h) = (pick / cap as usize, pick % cap as usize + 1);
        let site = base.cube().site(row);
        let harder = FrozenDisorder::from_fn(radius, 1, cap, |s, height| {
            base.get(s, height).unwrap() + i64::from(s == site.as_slice() && height == h as i64)
        })
        .unwrap();
        prop_assert!(count_admissible(radius, 1, cap, &harder, force, DEFAULT_BUDGET).unwrap() <= n);
    }

    #[test]
    fn min_average_velocity_shifts_by_at_most_one(
        dimension in 1usize..=2,
        cap in 0i64..=2,
        force in 1i64..=4,
        seed in any::<u64>(),
    ) {
        let radius = if dimension == 1 { 2 } else { 1 };
        let field = QuenchedField::new(seed, dimension, ObstacleDistribution::Exponential { rate: 1.5 }).unwrap();
        let disorder = FrozenDisorder::from_field(&field, radius, cap).unwrap();
        let at = min_avg_velocity(radius, dimension, cap, &disorder, force, DEFAULT_BUDGET).unwrap();
        let below = min_avg_velocity(radius, dimension, cap, &disorder, force - 1, DEFAULT_BUDGET).unwrap();
        let (m, m_below) = (at.value.to_f64(), below.value.to_f64());
        prop_assert!(m >= 0.0 && m_below >= 0.0);
        prop_assert!(m <= m_below + 1.0 + 1e-12);
        let floor = (force - 2 * dimension as i64 * cap - disorder.max_value()) as f64;
        prop_assert!(m >= floor);
        // the shift is exactly one whenever the minimiser at F survives at F - 1
        if is_admissible(&at.argmin, &disorder, force - 1).unwrap() {
            prop_assert_eq!(at.value.numerator, below.value.numerator + at.value.denominator);
        }
    }

    #[test]
    fn line_extensions_respect_the_counting_bound(
        radius in 1usize..=3,
        cap in 1i64..=3,
        force in 0i64..=3,
        seed in any::<u64>(),
    ) {
        let field = QuenchedField::new(seed, 1, ObstacleDistribution::Exponential { rate: 1.0 }).unwrap();
        let disorder = FrozenDisorder::from_field(&field, radius + 1, cap).unwrap();
        let plan = ExtensionPlan::new(radius, 1, cap, DEFAULT_BUDGET).unwrap();
        for w in enumerate_admissible(radius, 1, cap, &disorder, force, DEFAULT_BUDGET).unwrap() {
            for (j, count) in plan.velocity_histogram(&w, &disorder, force).unwrap() {
                prop_assert!(j >= 0);
                prop_assert!(u128::from(count) <= extension_count_bound(radius, 1, cap, j as u64).unwrap());
            }
        }
    }
}

#[test]
fn beta_monte_carlo_agrees_with_closed_form() {
    let laws = [
        ObstacleDistribution::Zero,
        ObstacleDistribution::Constant { strength: 1.3 },
        ObstacleDistribution::Uniform {
            low: 0.2,
            high: 2.7,
        },
        ObstacleDistribution::Exponential { rate: 2.0 },
        ObstacleDistribution::BernoulliScaled {
            probability: 0.3,
            strength: 2.5,
        },
    ];
    for (i, law) in laws.into_iter().enumerate() {
        let field = QuenchedField::new(1000 + i as u64, 1, law).unwrap();
        for lambda in [0.5, 1.0] {
            let exact = law.beta(lambda).unwrap();
            let mc = field.beta_mc(lambda, 200_000).unwrap();
            // summing 2e5 identical terms still drifts in the last bits
            let tol = 4.0 * mc.standard_error + 1e-9 * exact;
            assert!(
                (mc.mean - exact).abs() <= tol,
                "{law:?} lambda {lambda}: {} vs {exact}",
                mc.mean
            );
        }
    }
}

#[test]
fn ring_sizes_match_enumeration_and_telescope() {
    for d in 1..=3u32 {
        let mut total = 0;
        for k in 1..=5u64 {
            let cube = Cube::new(k as usize, d as usize).unwrap();
            assert_eq!(cube.ring().len() as u64, ring_size(k, d));
            total += ring_size(k, d);
            assert_eq!(total, (2 * k + 1).pow(d) - 1);
        }
    }
}

#[test]
fn compositions_match_brute_force_and_tail_bound() {
    fn brute(m: u64, j: u64) -> u128 {
        if m == 1 {
            return 1;
        }
        (0..=j).map(|first| brute(m - 1, j - first)).sum()
    }
    for m in 1..=5 {
        for j in 0..=10 {
            assert_eq!(compositions(m, j).unwrap(), brute(m, j), "m = {m}, j = {j}");
        }
    }
    for m in 2..=6u64 {
        let fact: f64 = (1..m).map(|i| i as f64).product();
        for j in 0..=20u64 {
            let n = compositions(m, j).unwrap() as f64;
            let bound = 2f64.powi(m as i32 - 2) / fact
                * ((j as f64).powi(m as i32 - 1) + ((m - 1) as f64).powi(m as i32 - 1));
            assert!(n <= bound, "m = {m}, j = {j}: {n} > {bound}");
        }
    }
}

#[test]
fn trajectories_identical_across_worker_counts() {
    let config = SimConfig {
        dimension: 2,
        side: 24,
        ..small_run(77, 4.0)
    };
    let config = SimConfig {
        tracked_site: vec![3, 5],
        ..config
    };
    let field = config.field().unwrap();
    let run = |workers: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .unwrap()
            .install(|| integrate(&config, &field).unwrap())
    };
    let one = run(1);
    for workers in [2, 8] {
        let other = run(workers);
        assert_eq!(one.records, other.records);
        assert_eq!(
            one.window_velocity.to_bits(),
            other.window_velocity.to_bits()
        );
        assert_eq!(one.final_state.heights, other.final_state.heights);
    }
}
