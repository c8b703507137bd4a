//! Cross-module invariants beyond the numbered acceptance criteria: the
//! finite-size variance identity against simulation, and the per-level
//! projection pattern of the row-heterogeneity kernel under its null.

use rce_ustat::asymptotics::{finite_variance, v_table, StatName, VBudget};
use rce_ustat::decomp::projection_second_moment;
use rce_ustat::experiments::{
    exponent_for_f2, run_qq, ExperimentConfig, ExperimentKind, CONFIG_SCHEMA,
};
use rce_ustat::graph::enumerate_gamma;
use rce_ustat::kernels::builtin;
use rce_ustat::models::{sample, DegreeFunction, ModelSpec};
use rce_ustat::stats;
use rce_ustat::ustat::u_fast;

fn power(a: f64) -> DegreeFunction {
    DegreeFunction::power(a).unwrap()
}

/// `V[U_{m,n}] = sum (m-r)!/m! (n-c)!/n! V^{(r,c)}` against the empirical
/// variance over replicates at (30, 30), for the three running models.
#[test]
fn finite_variance_matches_simulation_at_30x30() {
    let configs: [(&str, ModelSpec); 3] = [
        ("h1", ModelSpec::GaussianIid),
        (
            "h3",
            ModelSpec::poisson_bedd(1.0, DegreeFunction::Constant, power(1.0 + 2f64.sqrt()))
                .unwrap(),
        ),
        (
            "h6",
            ModelSpec::overdispersed(1.0, power(1.0), power(1.0), 0.0).unwrap(),
        ),
    ];
    for (kernel_name, model) in configs {
        let kernel = builtin(kernel_name).unwrap();
        let vt = v_table(
            &model,
            &kernel,
            &VBudget {
                samples_per_class: 60_000,
                seed: 314,
            },
        )
        .unwrap();
        let (m, n) = (30usize, 30usize);
        let predicted = finite_variance(&vt, m, n).unwrap();
        // Propagate the Monte Carlo error of the table through the same
        // factorial weights.
        let mut pred_var = 0.0;
        for (&(r, c), e) in vt.entries() {
            let mut w = 1.0;
            for i in 0..r {
                w /= (m - i) as f64;
            }
            for j in 0..c {
                w /= (n - j) as f64;
            }
            pred_var += (w * e.std_error).powi(2);
        }

        let reps = 2_000usize;
        let us: Vec<f64> = (0..reps)
            .map(|t| {
                let s = sample(&model, m, n, 40_000 + t as u64).unwrap();
                u_fast(kernel_name, &s.y).unwrap().value
            })
            .collect();
        let (_, emp) = stats::mean_var(&us);
        let emp_se = stats::std_error_of_variance(&us);
        let tol = 3.0 * (pred_var + emp_se * emp_se).sqrt();
        assert!(
            (predicted - emp).abs() <= tol,
            "{kernel_name}: predicted {predicted:.3e}, empirical {emp:.3e}, tol {tol:.3e}"
        );
    }
}

fn qq_config(model: ModelSpec, stat: StatName, dir: &std::path::Path, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        schema: CONFIG_SCHEMA,
        experiment: ExperimentKind::Qq,
        model,
        statistic: Some(stat),
        kernel: None,
        sizes: vec![256],
        pairs: vec![],
        replicates: 500,
        seed,
        out_dir: dir.to_path_buf(),
        rho: 0.5,
        nominal_level: 0.05,
        envelope_level: 0.99,
        deviations: vec![],
    }
}

/// Under the null the Q-Q points sit inside the 99% envelope (almost all of
/// them); under a row-heterogeneity alternative the drifting statistic
/// bursts through it.
#[test]
fn qq_envelope_null_vs_alternative() {
    let dir = tempfile::tempdir().unwrap();
    let null = run_qq(&qq_config(ModelSpec::GaussianIid, StatName::ZA, dir.path(), 17)).unwrap();
    let inside = 1.0 - null.per_size[0].outside_envelope as f64 / null.per_size[0].points as f64;
    assert!(inside >= 0.97, "null coverage {inside}");

    let alt_model = ModelSpec::poisson_bedd(
        1.0,
        DegreeFunction::power(exponent_for_f2(1.2).unwrap()).unwrap(),
        power(1.0 + 2f64.sqrt()),
    )
    .unwrap();
    let dir2 = tempfile::tempdir().unwrap();
    let alt = run_qq(&qq_config(alt_model, StatName::ZB, dir2.path(), 18)).unwrap();
    let outside = alt.per_size[0].outside_envelope;
    assert!(
        outside > 50,
        "alternative should burst the envelope, got {outside}/500 outside"
    );
}

/// Under `f == 1`, every class with up to two nodes projects h3 to zero and
/// exactly one of the six three-node classes (the full `K_{1,2}`) survives.
#[test]
fn h3_null_level_scan_pattern() {
    let h3 = builtin("h3").unwrap();
    let model =
        ModelSpec::poisson_bedd(1.0, DegreeFunction::Constant, power(1.0 + 2f64.sqrt())).unwrap();
    let mut level2: Vec<_> = enumerate_gamma(2, 0).unwrap();
    level2.extend(enumerate_gamma(0, 2).unwrap());
    level2.extend(enumerate_gamma(1, 1).unwrap());
    for class in &level2 {
        let est = projection_second_moment(&model, &h3, class, 30_000, 271).unwrap();
        assert!(
            est.value.abs() <= 3.0 * est.std_error.max(1e-12),
            "level-2 class {}x{}:{:x} should vanish: {est:?}",
            class.representative.rows(),
            class.representative.cols(),
            class.representative.edges()
        );
    }
    let mut level3: Vec<_> = enumerate_gamma(2, 1).unwrap();
    level3.extend(enumerate_gamma(1, 2).unwrap());
    assert_eq!(level3.len(), 6);
    for class in &level3 {
        let est = projection_second_moment(&model, &h3, class, 30_000, 272).unwrap();
        let rep = &class.representative;
        if rep.rows() == 1 && rep.cols() == 2 && rep.edge_count() == 2 {
            assert!(
                (est.value - 0.25).abs() <= 3.0 * est.std_error,
                "K12 should give 1/4: {est:?}"
            );
        } else {
            assert!(
                est.value.abs() <= 3.0 * est.std_error.max(1e-12),
                "class {}x{}:{:x} should vanish: {est:?}",
                rep.rows(),
                rep.cols(),
                rep.edges()
            );
        }
    }
}
