//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line. Run with `cargo test --test acceptance -- --nocapture` to see
//! the lines.

use std::time::Instant;

use nalgebra::DMatrix;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qmitm_core::adversary::{
    adv_value, all_delta_masks, enumerate_inputs, enumerate_or2, lift_cf_to_ke2,
    verify_lift, verify_query_reduction, AdversaryMatrix, InputEnumeration, Problem,
};
use qmitm_core::attacks::{dissect_4, exhaustive_search, mitm_2, mitm_4};
use qmitm_core::cost::{claw_walk_params, gain, gain_table, ke2_quantum_cost, ke4_quantum_cost};
use qmitm_core::experiment::{
    fit_power_law, run_scaling, ExperimentConfig, MRule, ScalingAlgorithm, CONFIG_SCHEMA_VERSION,
};
use qmitm_core::oracle::{generate_family, plant_instance, Instance};
use qmitm_core::simulator::{
    build_johnson_walk, grover_closed_form, grover_simulate, johnson_chain_spectral_gap,
    szegedy_walk_simulate, walk_norm_after,
};

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "criterion {}: {} — {}",
        criterion,
        if pass { "PASS" } else { "FAIL" },
        detail
    );
}

/// Test-local enumeration oracle: every key tuple consistent with all
/// pairs, found by walking the tables directly.
fn all_consistent_tuples(instance: &Instance) -> Vec<Vec<usize>> {
    let n = instance.n_keys();
    let depth = instance.depth();
    let mut found = Vec::new();
    for mut idx in 0..n.pow(depth as u32) {
        let mut keys = vec![0usize; depth];
        for slot in (0..depth).rev() {
            keys[slot] = idx % n;
            idx /= n;
        }
        if instance
            .pairs()
            .iter()
            .all(|&(p, c)| instance.chain_forward(&keys, p) == c)
        {
            found.push(keys);
        }
    }
    found
}

/// Plants an instance whose solution is unique (the problems carry a
/// uniqueness promise; rare impostor draws are resampled).
fn plant_unique(seed: u64, n: usize, m: usize, depth: usize, pairs: usize) -> (Instance, u64) {
    for retry in 0..64u64 {
        let resamples = retry;
        let attempt = seed ^ retry.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let family = generate_family(attempt, n, m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(attempt ^ 0xfeed);
        let keys: Vec<usize> = (0..depth).map(|_| rng.gen_range(0..n)).collect();
        let mut plaintexts: Vec<u32> = Vec::new();
        while plaintexts.len() < pairs {
            let p = rng.gen_range(0..m as u32);
            if !plaintexts.contains(&p) {
                plaintexts.push(p);
            }
        }
        let instance = plant_instance(family, depth, &keys, &plaintexts).unwrap();
        if all_consistent_tuples(&instance).len() == 1 {
            return (instance, resamples);
        }
    }
    panic!("could not plant a unique instance at N = {}, M = {}", n, m);
}

#[test]
fn criterion_1_key_recovery_correctness() {
    let start = Instant::now();
    let mut instances = 0u64;
    let mut resamples = 0u64;

    // depth 2: mitm_2 against the enumeration oracle
    for &n in &[4usize, 8, 16] {
        let m = n * n * n;
        for trial in 0..34u64 {
            let seed = 0x0100_0000 + (n as u64) * 1000 + trial;
            let (instance, re) = plant_unique(seed, n, m, 2, 2);
            resamples += re;
            instances += 1;
            let oracle = &all_consistent_tuples(&instance)[0];
            let ex = exhaustive_search(&instance).unwrap().recovered_keys;
            assert_eq!(&ex, oracle, "exhaustive disagrees with enumeration oracle");
            let got = mitm_2(&instance).unwrap().recovered_keys;
            assert_eq!(&got, oracle, "mitm_2 at N = {}, trial {}", n, trial);
        }
    }

    // depth 4: mitm_4 and dissect_4
    for &n in &[4usize, 6, 8] {
        let m = n * n;
        for trial in 0..34u64 {
            let seed = 0x0200_0000 + (n as u64) * 1000 + trial;
            let (instance, re) = plant_unique(seed, n, m, 4, 4);
            resamples += re;
            instances += 1;
            let oracle = &all_consistent_tuples(&instance)[0];
            let ex = exhaustive_search(&instance).unwrap().recovered_keys;
            assert_eq!(&ex, oracle);
            assert_eq!(&mitm_4(&instance).unwrap().recovered_keys, oracle);
            assert_eq!(&dissect_4(&instance).unwrap().recovered_keys, oracle);
        }
    }

    let elapsed = start.elapsed();
    let pass = instances >= 200 && elapsed.as_secs() < 60;
    report(
        "1",
        pass,
        &format!(
            "{} instances ({} promise resamples), all attacks match the enumeration oracle, {:.2} s",
            instances,
            resamples,
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

fn scaling_exponents(
    algorithm: ScalingAlgorithm,
    seed: u64,
    trials: usize,
    measures: &[&str],
) -> Vec<f64> {
    let config = ExperimentConfig {
        schema_version: CONFIG_SCHEMA_VERSION,
        seed,
        algorithm,
        sizes: (6..=12).map(|l| 1usize << l).collect(),
        m_rule: MRule::N,
        trials,
        pairs: 4,
    };
    let report = run_scaling(&config).unwrap();
    measures
        .iter()
        .map(|m| report.series_named(m).unwrap().fitted_exponent.unwrap())
        .collect()
}

#[test]
fn criterion_2_classical_resource_scaling() {
    let exhaustive_time = scaling_exponents(ScalingAlgorithm::Exhaustive, 21, 9, &["time_units"])[0];
    let mitm2 = scaling_exponents(
        ScalingAlgorithm::Mitm2,
        22,
        3,
        &["queries", "peak_memory_units"],
    );
    let (mitm2_queries, mitm2_memory) = (mitm2[0], mitm2[1]);
    // dissection cost concentrates hard around its mean (r^2 > 0.9999
    // on every seed tried); a single trial per size keeps the sweep
    // affordable on one core
    let dissect = scaling_exponents(
        ScalingAlgorithm::Dissect4,
        23,
        1,
        &["time_units", "peak_memory_units"],
    );
    let (dissect_time, dissect_memory) = (dissect[0], dissect[1]);

    let checks = [
        ("exhaustive d2 time", exhaustive_time, 2.0, 0.1),
        ("mitm2 queries", mitm2_queries, 1.0, 0.05),
        ("mitm2 memory", mitm2_memory, 1.0, 0.05),
        ("dissect4 time", dissect_time, 2.0, 0.1),
        ("dissect4 memory", dissect_memory, 1.0, 0.1),
    ];
    let mut pass = true;
    let mut details = Vec::new();
    for (name, got, want, tol) in checks {
        let ok = (got - want).abs() <= tol;
        pass &= ok;
        details.push(format!("{} {:.3} (want {} +- {})", name, got, want, tol));
    }
    report("2", pass, &details.join(", "));
    assert!(pass, "{}", details.join(", "));
}

#[test]
fn criterion_3_gain_tables() {
    let r = |n: i64, d: i64| Ratio::<i64>::new(n, d);
    let depth2: Vec<(Ratio<i64>, Ratio<i64>)> = gain_table(2)
        .unwrap()
        .iter()
        .map(|g| (g.time_gain, g.ts_gain))
        .collect();
    let depth4: Vec<(Ratio<i64>, Ratio<i64>)> = gain_table(4)
        .unwrap()
        .iter()
        .map(|g| (g.time_gain, g.ts_gain))
        .collect();

    let want2 = vec![(r(2, 1), r(2, 1)), (r(3, 2), r(3, 2)), (r(4, 3), r(8, 5))];
    let want4 = vec![(r(2, 1), r(2, 1)), (r(3, 2), r(3, 2)), (r(12, 7), r(18, 11))];

    // the rows must emerge from exponent pairs via gain(), not literals
    let rows = gain_table(4).unwrap();
    let recomputed = gain(rows[2].classical_time_exp, rows[2].quantum_time_exp).unwrap();
    let derived_ok = recomputed == rows[2].time_gain
        && rows[2].classical_ts_exp == rows[2].classical_time_exp + r(1, 1)
        && rows[2].quantum_ts_exp == r(7, 6) + r(2, 3);

    let pass = depth2 == want2 && depth4 == want4 && derived_ok;
    report(
        "3",
        pass,
        &format!("depth2 {:?}, depth4 {:?}", depth2, depth4),
    );
    assert!(pass);
}

#[test]
fn criterion_4_cost_model_exponents() {
    let sizes: Vec<(usize, f64)> = (8..=16)
        .map(|l| {
            let n = 1usize << l;
            (n, ke2_quantum_cost(n).unwrap().time_units)
        })
        .collect();
    let (ke2_exp, _) = fit_power_law(&sizes).unwrap();
    let ke2_ts = ke2_quantum_cost(1 << 10).unwrap().time_space_exponent();

    let sizes4: Vec<(usize, f64)> = (8..=16)
        .map(|l| {
            let n = 1usize << l;
            (n, ke4_quantum_cost(n, n).unwrap().time_units)
        })
        .collect();
    let (ke4_exp, _) = fit_power_law(&sizes4).unwrap();
    let ke4_ts = ke4_quantum_cost(1 << 10, 1 << 10).unwrap().time_space_exponent();

    let pass = (ke2_exp - 2.0 / 3.0).abs() <= 0.02
        && ke2_ts == Ratio::new(4, 3)
        && (ke4_exp - 7.0 / 6.0).abs() <= 0.02
        && ke4_ts == Ratio::new(11, 6);
    report(
        "4",
        pass,
        &format!(
            "ke2 time {:.4} (want 2/3 +- 0.02), ts {} (want 4/3); ke4 time {:.4} (want 7/6 +- 0.02), ts {} (want 11/6)",
            ke2_exp, ke2_ts, ke4_exp, ke4_ts
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_5_grover_exactness() {
    let mut max_dev = 0.0f64;
    for m in 1..=64usize {
        for t in 1..=m {
            let marked: Vec<usize> = (0..t).collect();
            let run = grover_simulate(m, &marked, 20).unwrap();
            for (k, &p) in run.marked_mass_by_step.iter().enumerate() {
                let dev = (p - grover_closed_form(m, t, k)).abs();
                max_dev = max_dev.max(dev);
            }
        }
    }
    let special = grover_simulate(4, &[0], 1).unwrap().marked_probability;
    let special_dev = (special - 1.0).abs();

    let pass = max_dev < 1e-9 && special_dev < 1e-12;
    report(
        "5",
        pass,
        &format!(
            "grid max deviation {:.2e} (tol 1e-9); (M=4, t=1, k=1) deviation {:.2e} (tol 1e-12)",
            max_dev, special_dev
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_6_walk_validation() {
    let mut failures = Vec::new();
    for &(n, r) in &[(6usize, 2usize), (8, 2), (8, 4), (10, 3)] {
        let spec = claw_walk_params(n, r).unwrap();
        let closed_gap = n as f64 / (r * (n - r)) as f64;
        let numeric_gap = johnson_chain_spectral_gap(n, r).unwrap();
        if (numeric_gap - closed_gap).abs() >= 1e-9 {
            failures.push(format!(
                "J({},{}) gap {} vs {}",
                n, r, numeric_gap, closed_gap
            ));
        }

        let op = build_johnson_walk(n, r, (0, 1)).unwrap();
        let steps = (3.0 / (spec.spectral_gap * spec.marked_fraction).sqrt()).ceil() as usize;
        let run = szegedy_walk_simulate(&op, steps);
        let peak = run
            .marked_mass_by_step
            .iter()
            .cloned()
            .fold(0.0f64, f64::max);
        let bound = 5.0 * run.stationary_marked_mass;
        if peak < bound {
            // at J(8,4) the stationary marked mass is 15/70, so the
            // 5x bound demands probability 15/14 > 1: unsatisfiable by
            // any walk; recorded here as an honest failure
            failures.push(format!(
                "J({},{}) peak {:.4} < 5 x stationary = {:.4}{}",
                n,
                r,
                peak,
                bound,
                if bound > 1.0 {
                    " (bound exceeds total probability mass 1)"
                } else {
                    ""
                }
            ));
        }

        let drift = (walk_norm_after(&op, 200) - 1.0).abs();
        if drift >= 1e-9 {
            failures.push(format!("J({},{}) norm drift {:.2e}", n, r, drift));
        }
    }
    let pass = failures.is_empty();
    let detail = if pass {
        "gap, amplification, unitarity on all four (N, r)".to_string()
    } else {
        failures.join("; ")
    };
    report("6", pass, &detail);
    assert!(pass, "{}", detail);
}

#[test]
fn criterion_7_lemma_structure() {
    let mut details = Vec::new();
    let mut pass = true;
    // P != C keeps yes-inputs inside the constant-fiber sector; at
    // M = 3 with P = C the promise set has no yes-inputs at all
    for &(n, m) in &[(2usize, 3usize), (2, 4)] {
        let (p, c) = (0u32, 1u32);
        let cf = enumerate_inputs(Problem::DCf, n, m, p, c).unwrap();
        let ke2 = enumerate_inputs(Problem::DKe2, n, m, p, c).unwrap();
        let gamma_cf = AdversaryMatrix::uniform(&cf);
        let gamma_ke2 = lift_cf_to_ke2(&gamma_cf, &cf, &ke2).unwrap();
        let lift = verify_lift(&gamma_cf, &cf, &gamma_ke2, &ke2).unwrap();
        let reduction = verify_query_reduction(&gamma_ke2, &ke2, &gamma_cf, &cf).unwrap();

        let ok = lift.fibers_constant
            && lift.norm_relation_dev < 1e-6
            && lift.tensor_max_dev < 1e-6
            && (reduction.max_over_all - reduction.max_after_conjugation).abs() < 1e-6
            && reduction.tensor_retained;
        pass &= ok;
        details.push(format!(
            "N={} M={}: D={}, |G_KE2|={:.6} = D|G_CF|={:.6} (dev {:.1e}), tensor dev {:.1e}, reduction dev {:.1e}",
            n,
            m,
            lift.fiber_size,
            lift.norm_ke2,
            lift.fiber_size as f64 * lift.norm_cf,
            lift.norm_relation_dev,
            lift.tensor_max_dev,
            (reduction.max_over_all - reduction.max_after_conjugation).abs()
        ));
    }
    report("7", pass, &details.join("; "));
    assert!(pass);
}

fn eigensolve_norm(matrix: &DMatrix<f64>) -> f64 {
    matrix
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max)
}

fn random_gamma(enumeration: &InputEnumeration, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let dim = enumeration.len();
    let mut gamma = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..i {
            if enumeration.labels[i] != enumeration.labels[j] {
                let w = rng.gen_range(-2.0..2.0);
                gamma[(i, j)] = w;
                gamma[(j, i)] = w;
            }
        }
    }
    gamma
}

fn permuted_enumeration(enumeration: &InputEnumeration, order: &[usize]) -> InputEnumeration {
    let mut out = enumeration.clone();
    out.inputs = order.iter().map(|&i| enumeration.inputs[i].clone()).collect();
    out.labels = order.iter().map(|&i| enumeration.labels[i]).collect();
    out.projection_keys = enumeration
        .projection_keys
        .as_ref()
        .map(|keys| order.iter().map(|&i| keys[i]).collect());
    out
}

#[test]
fn criterion_8_adv_sanity() {
    // 2-bit OR star matrix, power iteration vs the eigensolve oracle
    let or2 = enumerate_or2();
    let mut star = DMatrix::<f64>::zeros(4, 4);
    for &(i, j) in &[(0usize, 1usize), (0, 2)] {
        star[(i, j)] = 1.0;
        star[(j, i)] = 1.0;
    }
    let gamma = AdversaryMatrix::new(star.clone(), &or2).unwrap();
    let masks = all_delta_masks(&or2).unwrap();
    let value = adv_value(&gamma, &masks).unwrap();
    let or2_dev = (value - 2f64.sqrt()).abs();

    let oracle = {
        let full = eigensolve_norm(&star);
        masks
            .iter()
            .map(|m| eigensolve_norm(&star.component_mul(&m.mask)))
            .filter(|&v| v > 0.0)
            .map(|v| full / v)
            .fold(f64::INFINITY, f64::min)
    };
    let oracle_dev = (value - oracle).abs();

    // scaling and relabeling invariance over 50 random matrices
    let cf = enumerate_inputs(Problem::DCf, 2, 3, 0, 1).unwrap();
    let cf_masks = all_delta_masks(&cf).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let mut max_invariance_dev = 0.0f64;
    for trial in 0..50 {
        let (enumeration, base_masks): (&InputEnumeration, &[_]) = if trial % 2 == 0 {
            (&or2, &masks)
        } else {
            (&cf, &cf_masks)
        };
        let matrix = random_gamma(enumeration, &mut rng);
        if matrix.iter().all(|&v| v == 0.0) {
            continue;
        }
        let gamma = AdversaryMatrix::new(matrix.clone(), enumeration).unwrap();
        let base = adv_value(&gamma, base_masks).unwrap();

        // positive scaling leaves the value unchanged
        let scale = rng.gen_range(0.1..10.0);
        let scaled = AdversaryMatrix::new(&matrix * scale, enumeration).unwrap();
        max_invariance_dev =
            max_invariance_dev.max((adv_value(&scaled, base_masks).unwrap() - base).abs());

        // simultaneous relabeling of inputs leaves it unchanged
        let mut order: Vec<usize> = (0..enumeration.len()).collect();
        for i in (1..order.len()).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        let relabeled_enum = permuted_enumeration(enumeration, &order);
        let relabeled_matrix = DMatrix::<f64>::from_fn(order.len(), order.len(), |i, j| {
            matrix[(order[i], order[j])]
        });
        let relabeled = AdversaryMatrix::new(relabeled_matrix, &relabeled_enum).unwrap();
        let relabeled_masks = all_delta_masks(&relabeled_enum).unwrap();
        max_invariance_dev =
            max_invariance_dev.max((adv_value(&relabeled, &relabeled_masks).unwrap() - base).abs());
    }

    let pass = or2_dev < 1e-6 && oracle_dev < 1e-8 && max_invariance_dev < 1e-8;
    report(
        "8",
        pass,
        &format!(
            "OR2 value {:.9} (dev {:.1e} from sqrt 2, {:.1e} from eigensolve oracle); invariance max dev {:.1e} over 50 random matrices",
            value, or2_dev, oracle_dev, max_invariance_dev
        ),
    );
    assert!(pass);
}
