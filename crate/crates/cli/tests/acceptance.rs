//! Release acceptance suite. One test per criterion; each prints a single
//! `[criterion N] PASS/FAIL` summary line with the measured numbers and then
//! asserts, so a red criterion is visible both in the line and in the test
//! outcome. Tolerances and runtime budgets are pinned in the constants below.

use std::sync::Arc;
use std::time::Instant;

use metric_kernels::embedding::{
    self, apply_isometry_prefix, auto_q, prefix_len_for_tail, q_upper_limit, split_series,
    EmbeddingConfig, SequenceContext, SequenceKind,
};
use metric_kernels::fixtures;
use metric_kernels::scalar::TaylorKind;
use metric_kernels::util::kahan_sum;
use metric_kernels::{
    approximation_sweep, greedy_cover, krr_fit, mmd, psd_check, EmpiricalMeasure,
    FiniteMetricSpace, KernelModel, ScalarKernel, ScalarKernelSpec, SweepGrid,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The four scalar kernel specs the suite exercises everywhere.
fn suite_specs() -> Vec<(&'static str, ScalarKernelSpec)> {
    vec![
        (
            "radial-gauss",
            ScalarKernelSpec::Radial {
                atoms: vec![(1.0, 1.0)],
            },
        ),
        (
            "radial-mix",
            ScalarKernelSpec::Radial {
                atoms: vec![(0.5, 0.3), (2.0, 0.7)],
            },
        ),
        (
            "taylor-exp",
            ScalarKernelSpec::Taylor {
                kind: TaylorKind::Exponential { scale: 1.0 },
            },
        ),
        (
            "taylor-custom",
            ScalarKernelSpec::Taylor {
                kind: TaylorKind::Custom {
                    coeffs: vec![1.0, 0.5, 0.25],
                },
            },
        ),
    ]
}

/// Inline JSON mirrors of [`suite_specs`] for driving the command line.
fn suite_spec_json() -> Vec<(&'static str, &'static str)> {
    vec![
        ("radial-gauss", r#"{"type":"radial","atoms":[[1.0,1.0]]}"#),
        (
            "radial-mix",
            r#"{"type":"radial","atoms":[[0.5,0.3],[2.0,0.7]]}"#,
        ),
        (
            "taylor-exp",
            r#"{"type":"taylor","kind":"exponential","scale":1.0}"#,
        ),
        (
            "taylor-custom",
            r#"{"type":"taylor","kind":"custom","coeffs":[1.0,0.5,0.25]}"#,
        ),
    ]
}

fn covering_model(
    space: &Arc<FiniteMetricSpace>,
    spec: &ScalarKernelSpec,
    eta: f64,
) -> KernelModel {
    let covering = greedy_cover(space, eta).expect("eta within (0, diameter]");
    let q = auto_q(covering.center_count());
    KernelModel::new_covering(Arc::clone(space), spec, covering, q).expect("valid covering model")
}

fn truncation_model(
    space: &Arc<FiniteMetricSpace>,
    spec: &ScalarKernelSpec,
    q: f64,
    len: usize,
) -> KernelModel {
    KernelModel::new_truncation(Arc::clone(space), spec, q, len).expect("valid truncation model")
}

/// Records a deviation-style check; `fails` collects human-readable misses.
fn close(label: &str, got: f64, want: f64, tol: f64, fails: &mut Vec<String>) {
    if !((got - want).abs() <= tol) {
        fails.push(format!("{label}: got {got:.12e}, want {want:.12e} +-{tol:.1e}"));
    }
}

#[test]
fn criterion_1_psd_suite() {
    let start = Instant::now();
    let mut worst_margin = f64::INFINITY;
    let mut worst_label = String::new();
    let mut all_pass = true;
    for (fixture, space) in fixtures::all() {
        let d = space.diameter();
        let every_point: Vec<usize> = (0..space.size()).collect();
        for (kname, spec) in suite_specs() {
            let models = [
                ("covering", covering_model(&space, &spec, d / 4.0)),
                ("truncation", truncation_model(&space, &spec, 2.0, 8)),
            ];
            for (mode, model) in models {
                let gram = model.gram(&every_point).expect("gram over all points");
                let report = psd_check(&gram);
                let margin = report.min_eigenvalue + report.tolerance;
                if margin < worst_margin {
                    worst_margin = margin;
                    worst_label = format!("{fixture}/{kname}/{mode}");
                }
                all_pass &= report.pass;
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let verdict = if all_pass { "PASS" } else { "FAIL" };
    println!(
        "[criterion 1] {verdict}: 32 Gram matrices PSD-checked, tightest margin \
         {worst_margin:.3e} at {worst_label}, {elapsed:.2}s"
    );
    assert!(all_pass, "a Gram matrix failed the PSD check ({worst_label})");
    assert!(elapsed < 10.0, "PSD suite exceeded 10s: {elapsed:.2}s");
}

#[test]
fn criterion_2_isometry_suite() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut trials = 0usize;
    for &j in &[1usize, 2, 5, 17] {
        let shares = vec![1.0 / j as f64; j];
        for _ in 0..1000 {
            let q = if j == 1 {
                rng.gen_range(1.05..2.95)
            } else {
                let upper = q_upper_limit(j);
                1.0 + rng.gen_range(0.15..0.85) * (upper - 1.0)
            };
            let u: Vec<f64> = (0..j).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..j).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let max_u = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let max_v = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let mass = q * q / (q * q - 1.0) * j as f64 * max_u * max_v;
            let n = prefix_len_for_tail(mass, q, 1e-8).max(1);
            let beta = if j == 1 {
                vec![0usize; n]
            } else {
                split_series(j, q * q, &shares, n)
                    .expect("admissible split")
                    .assignment()
                    .to_vec()
            };
            let config = EmbeddingConfig::new(q, j, n).expect("admissible config");
            let bu = apply_isometry_prefix(&u, &beta, &config).expect("prefix image");
            let bv = apply_isometry_prefix(&v, &beta, &config).expect("prefix image");
            let prefix_dot: f64 = bu.iter().zip(&bv).map(|(a, b)| a * b).sum();
            let exact_dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
            worst = worst.max((prefix_dot - exact_dot).abs());
            trials += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst < 1e-6;
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!(
        "[criterion 2] {verdict}: {trials} prefix isometry trials, worst inner-product \
         deviation {worst:.3e} (< 1e-6), {elapsed:.2}s"
    );
    assert!(pass, "isometry deviation {worst:.3e} reached 1e-6");
    assert!(elapsed < 5.0, "isometry suite exceeded 5s: {elapsed:.2}s");
}

#[test]
fn criterion_3_split_suite() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n_terms = 64usize;
    let mut worst_sum = 0.0f64;
    let mut worst_deficit = 0.0f64;
    let mut strict_ok = true;
    for _ in 0..200 {
        let j = rng.gen_range(2usize..=8);
        // the strict walk is exactly representable in f64 only while the
        // terms clear the rounding resolution of the running sums; sample the
        // admissible interval restricted to that regime (only large q at
        // J = 2 ever falls outside it within 64 terms)
        let q = loop {
            let cand = 1.0 + rng.gen_range(0.25..0.85) / (j as f64 - 1.0);
            if cand.powi(-(n_terms as i32 - 1)) > 1e-12 * cand / (cand - 1.0) {
                break cand;
            }
        };
        let mut lambdas: Vec<f64> = (0..j).map(|_| rng.gen_range(0.2..1.0)).collect();
        let total: f64 = lambdas.iter().sum();
        for l in lambdas.iter_mut() {
            *l /= total;
        }
        let head: f64 = lambdas[..j - 1].iter().sum();
        lambdas[j - 1] = 1.0 - head;

        let split = split_series(j, q, &lambdas, n_terms).expect("admissible split");

        // replay the strict greedy walk in plain f64 and demand bitwise
        // agreement: first part whose sum would stay strictly under target
        let s = q / (q - 1.0);
        let targets: Vec<f64> = lambdas.iter().map(|&l| l * s).collect();
        let mut partial = vec![0.0f64; j];
        for step in 0..n_terms {
            let term = q.powi(-(step as i32));
            let chosen = (0..j).find(|&p| partial[p] + term < targets[p]);
            match chosen {
                Some(p) => {
                    if split.assignment()[step] != p {
                        strict_ok = false;
                    }
                    partial[p] += term;
                }
                None => strict_ok = false,
            }
        }

        let sum_parts = kahan_sum(split.partial_sums().iter().copied());
        let sum_terms = kahan_sum((0..n_terms).map(|n| q.powi(-(n as i32))));
        worst_sum = worst_sum.max((sum_parts - sum_terms).abs());

        let deficit = kahan_sum(
            split
                .targets()
                .iter()
                .zip(split.partial_sums())
                .map(|(t, p)| t - p),
        );
        let expected_deficit = q.powi(-(n_terms as i32)) * s;
        worst_deficit = worst_deficit.max((deficit - expected_deficit).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = strict_ok && worst_sum < 1e-12 && worst_deficit < 1e-12;
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!(
        "[criterion 3] {verdict}: 200 random splits, strict walk replay {}, worst \
         partition defect {worst_sum:.3e}, worst deficit defect {worst_deficit:.3e} \
         (< 1e-12), {elapsed:.2}s",
        if strict_ok { "exact" } else { "DIVERGED" }
    );
    assert!(strict_ok, "strict greedy walk diverged from replay");
    assert!(worst_sum < 1e-12, "partition defect {worst_sum:.3e}");
    assert!(worst_deficit < 1e-12, "deficit defect {worst_deficit:.3e}");
    assert!(elapsed < 2.0, "split suite exceeded 2s: {elapsed:.2}s");
}

#[test]
fn criterion_4_embedding_bound_suite() {
    let start = Instant::now();
    let mut worst_cover_slack = f64::NEG_INFINITY;
    let mut worst_trunc_slack = f64::NEG_INFINITY;
    let mut points = 0usize;
    for (_, space) in fixtures::all() {
        let d = space.diameter();
        for factor in [1.0, 0.5, 0.25] {
            let eta = d * factor;
            let covering = greedy_cover(&space, eta).expect("eta within (0, diameter]");
            let q = auto_q(covering.center_count());
            let prefix = embedding::default_prefix_len(d, q).max(2);
            let ctx = SequenceContext::for_covering(&space, &covering, q, prefix)
                .expect("covering context");
            for x in 0..space.size() {
                let gap = ctx
                    .gap_sq(SequenceKind::CoveredProfile, x)
                    .expect("certified gap");
                let upper = gap.upper().max(0.0).sqrt();
                worst_cover_slack = worst_cover_slack.max(upper - eta);
                points += 1;
            }
        }
        for len in [2usize, 8, 16] {
            let ctx = SequenceContext::for_truncation(&space, 2.0, len + 40)
                .expect("truncation context");
            let budget = d * 2.0f64.powi(-(len as i32));
            for x in 0..space.size() {
                let gap = ctx
                    .gap_sq(SequenceKind::TruncatedProfile { len }, x)
                    .expect("certified gap");
                let upper = gap.upper().max(0.0).sqrt();
                worst_trunc_slack = worst_trunc_slack.max(upper - budget);
                points += 1;
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst_cover_slack <= 1e-9 && worst_trunc_slack <= 1e-9;
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!(
        "[criterion 4] {verdict}: {points} certified gaps, covering slack max \
         {worst_cover_slack:.3e}, truncation slack max {worst_trunc_slack:.3e} \
         (<= 1e-9), {elapsed:.2}s"
    );
    assert!(
        worst_cover_slack <= 1e-9,
        "covering gap exceeded eta by {worst_cover_slack:.3e}"
    );
    assert!(
        worst_trunc_slack <= 1e-9,
        "truncation gap exceeded budget by {worst_trunc_slack:.3e}"
    );
    assert!(elapsed < 30.0, "embedding suite exceeded 30s: {elapsed:.2}s");
}

#[test]
fn criterion_5_certification_exit_codes() {
    let start = Instant::now();
    let out = tempfile::tempdir().expect("temp out dir");
    let mut failures: Vec<String> = Vec::new();
    let mut runs = 0usize;
    for (fixture, space) in fixtures::all() {
        let d = space.diameter();
        let space_arg = format!("fixture:{fixture}");
        for (kname, kjson) in suite_spec_json() {
            let mut configs: Vec<(String, Vec<String>)> = Vec::new();
            for factor in [1.0, 0.5, 0.25] {
                configs.push((
                    format!("covering eta=D*{factor}"),
                    vec![
                        "--mode".into(),
                        "covering".into(),
                        "--eta".into(),
                        format!("{:.17e}", d * factor),
                    ],
                ));
            }
            for n in [2usize, 8, 16] {
                configs.push((
                    format!("truncation N={n}"),
                    vec!["--mode".into(), "truncation".into(), "--N".into(), n.to_string()],
                ));
            }
            for (cname, extra) in configs {
                let out_dir = out.path().join(format!("run{runs}"));
                let mut args: Vec<String> = vec![
                    "mkern".into(),
                    "certify".into(),
                    "--space".into(),
                    space_arg.clone(),
                    "--kernel".into(),
                    kjson.into(),
                    "--out".into(),
                    out_dir.to_string_lossy().into_owned(),
                ];
                args.extend(extra);
                let code = metric_kernels_cli::run_from(args);
                if code != 0 {
                    failures.push(format!("{fixture}/{kname}/{cname} -> exit {code}"));
                }
                runs += 1;
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = failures.is_empty();
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!(
        "[criterion 5] {verdict}: certify exited 0 on {}/{runs} fixture x kernel x mode \
         configurations, {elapsed:.2}s",
        runs - failures.len()
    );
    assert!(pass, "certification failures: {failures:?}");
    assert!(elapsed < 60.0, "certification suite exceeded 60s: {elapsed:.2}s");
}

#[test]
fn criterion_6_circle_sweep_trend() {
    let start = Instant::now();
    let space = fixtures::circle200();
    let d = space.diameter();
    let spec = ScalarKernelSpec::Radial {
        atoms: vec![(4.0, 1.0)],
    };
    let grid = SweepGrid::Eta(vec![d, d / 2.0, d / 4.0, d / 8.0, d / 16.0]);
    let targets: Vec<f64> = fixtures::circle200_angles()
        .iter()
        .map(|t| t.sin().abs())
        .collect();
    let report = approximation_sweep(
        &space,
        &spec,
        &grid,
        &targets,
        None,
        1e-6,
        7,
        "fixture:circle200",
    )
    .expect("sweep runs");
    // rows come back ascending in eta; the trend reads coarse to fine
    let coarse_to_fine: Vec<_> = report.rows.iter().rev().collect();
    let sups: Vec<f64> = coarse_to_fine.iter().map(|r| r.sup_err).collect();
    let js: Vec<usize> = coarse_to_fine.iter().map(|r| r.j).collect();
    let strictly_better = sups[4] < sups[0];
    let mut monotone_20 = true;
    for k in 0..4 {
        if sups[k + 1] > 1.2 * sups[k] {
            monotone_20 = false;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = strictly_better && monotone_20;
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!(
        "[criterion 6] {verdict}: sup errors coarse->fine {:?} at J {:?}; finest < coarsest: \
         {strictly_better}, nonincreasing within 20%: {monotone_20}, {elapsed:.2}s",
        sups.iter().map(|s| format!("{s:.3e}")).collect::<Vec<_>>(),
        js
    );
    assert!(
        strictly_better,
        "sup error at the finest level {:.3e} is not below the coarsest {:.3e}",
        sups[4], sups[0]
    );
    assert!(
        monotone_20,
        "sup error sequence {sups:?} violates the 20% monotonicity allowance"
    );
    assert!(elapsed < 60.0, "sweep trend exceeded 60s: {elapsed:.2}s");
}

#[test]
fn criterion_7_mmd_pseudometric_suite() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let spec = ScalarKernelSpec::Radial {
        atoms: vec![(1.0, 1.0)],
    };
    let mut worst_sym = 0.0f64;
    let mut worst_self = 0.0f64;
    let mut worst_triangle = f64::NEG_INFINITY;
    let mut triples = 0usize;
    for (_, space) in fixtures::all() {
        let d = space.diameter();
        let model = covering_model(&space, &spec, d / 2.0);
        let m = space.size();
        let sample_measure = |rng: &mut ChaCha8Rng| {
            let k = rng.gen_range(1usize..=m.min(6));
            let support: Vec<usize> = (0..k).map(|_| rng.gen_range(0..m)).collect();
            let mut weights: Vec<f64> = (0..k).map(|_| rng.gen_range(0.01..1.0)).collect();
            let total: f64 = weights.iter().sum();
            for w in weights.iter_mut() {
                *w /= total;
            }
            let head: f64 = weights[..k - 1].iter().sum();
            weights[k - 1] = 1.0 - head;
            EmpiricalMeasure::new(support, weights).expect("valid random measure")
        };
        for _ in 0..100 {
            let a = sample_measure(&mut rng);
            let b = sample_measure(&mut rng);
            let c = sample_measure(&mut rng);
            let ab = mmd(&model, &a, &b).expect("mmd");
            let ba = mmd(&model, &b, &a).expect("mmd");
            let bc = mmd(&model, &b, &c).expect("mmd");
            let ac = mmd(&model, &a, &c).expect("mmd");
            let aa = mmd(&model, &a, &a).expect("mmd");
            assert!(ab >= 0.0 && bc >= 0.0 && ac >= 0.0, "negative mmd");
            worst_sym = worst_sym.max((ab - ba).abs());
            worst_self = worst_self.max(aa);
            worst_triangle = worst_triangle.max(ac - (ab + bc));
            triples += 1;
        }
    }
    // closed form on the two-point fixture: both points are centers, the
    // feature gap is exactly 1, so MMD(d0, d1) = sqrt(2 - 2/e)
    let two = fixtures::two_point();
    let model = covering_model(&two, &spec, 0.5);
    let closed = mmd(
        &model,
        &EmpiricalMeasure::dirac(0),
        &EmpiricalMeasure::dirac(1),
    )
    .expect("mmd");
    let want = (2.0 - 2.0 * (-1.0f64).exp()).sqrt();
    let closed_err = (closed - want).abs();
    let elapsed = start.elapsed().as_secs_f64();
    let pass =
        worst_sym <= 1e-12 && worst_self <= 1e-12 && worst_triangle <= 1e-9 && closed_err <= 1e-9;
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!(
        "[criterion 7] {verdict}: {triples} random triples; symmetry gap {worst_sym:.3e}, \
         self-distance {worst_self:.3e}, triangle excess {worst_triangle:.3e}, two-point \
         closed form off by {closed_err:.3e}, {elapsed:.2}s"
    );
    assert!(worst_sym <= 1e-12, "symmetry gap {worst_sym:.3e}");
    assert!(worst_self <= 1e-12, "self distance {worst_self:.3e}");
    assert!(worst_triangle <= 1e-9, "triangle excess {worst_triangle:.3e}");
    assert!(closed_err <= 1e-9, "closed form off by {closed_err:.3e}");
    assert!(elapsed < 10.0, "mmd suite exceeded 10s: {elapsed:.2}s");
}

#[test]
fn criterion_8_worked_examples() {
    let start = Instant::now();
    let mut fails: Vec<String> = Vec::new();
    let mut checks = 0usize;
    let mut run = |f: &mut dyn FnMut(&mut Vec<String>)| {
        f(&mut fails);
        checks += 1;
    };

    // graph metric: parallel edge (0,2,5) loses to the two-hop path
    run(&mut |fails| {
        let space = FiniteMetricSpace::from_graph(&[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 5.0)])
            .expect("triangle graph");
        close("graph shortest path", space.dist(0, 2), 2.0, 0.0, fails);
    });

    // greedy covering on the 1-D cloud {0,1,2}
    run(&mut |fails| {
        let line = fixtures::line3();
        let cov = greedy_cover(&line, 1.0).expect("eta = 1");
        if cov.centers() != [0, 2] {
            fails.push(format!("line3 greedy centers: got {:?}", cov.centers()));
        }
        let budget = metric_kernels::cover_with_budget(&line, 2).expect("two centers");
        if budget.centers() != [0, 2] {
            fails.push(format!("line3 budget centers: got {:?}", budget.centers()));
        }
        close(
            "line3 budget radius",
            budget.achieved_radius(&line),
            1.0,
            0.0,
            fails,
        );
    });

    // scalar evaluations and derivative bounds in closed form
    run(&mut |fails| {
        let exp_spec = ScalarKernelSpec::Taylor {
            kind: TaylorKind::Exponential { scale: 1.0 },
        };
        let k = ScalarKernel::from_spec(&exp_spec, 4.0).expect("exp kernel");
        close("exp eval at 1", k.eval(1.0).unwrap(), 1f64.exp(), 1e-12, fails);
        let half = ScalarKernel::from_spec(&exp_spec, 1.0).expect("exp kernel, domain 1");
        close(
            "exp derivative bound, diameter 1/2",
            half.derivative_bound().expect("finite bound"),
            1f64.exp(),
            1e-12,
            fails,
        );
        let mix = ScalarKernel::from_spec(
            &ScalarKernelSpec::Radial {
                atoms: vec![(0.5, 0.3), (2.0, 0.7)],
            },
            4.0,
        )
        .expect("radial mix");
        close(
            "radial mix derivative bound",
            mix.derivative_bound().expect("finite bound"),
            0.5 * 0.3 + 2.0 * 0.7,
            1e-12,
            fails,
        );
    });

    // greedy split, hand-executed: q = 3/2, equal shares, five terms
    run(&mut |fails| {
        let split = split_series(2, 1.5, &[0.5, 0.5], 5).expect("split");
        if split.assignment() != [0, 1, 0, 1, 1] {
            fails.push(format!("split assignment: got {:?}", split.assignment()));
        }
        close(
            "split partial 0",
            split.partial_sums()[0],
            13.0 / 9.0,
            1e-12,
            fails,
        );
        close(
            "split partial 1",
            split.partial_sums()[1],
            94.0 / 81.0,
            1e-12,
            fails,
        );
        close("split target", split.targets()[0], 1.5, 1e-12, fails);
    });

    // adapted region sequence delegates to the split of q^(-2n)
    run(&mut |fails| {
        let two = fixtures::two_point();
        let cov = greedy_cover(&two, 0.5).expect("both points become centers");
        let beta = embedding::adapted_assignment(&cov, 1.1, 4).expect("adapted");
        let oracle = split_series(2, 1.1 * 1.1, &[0.5, 0.5], 4).expect("split");
        if beta != oracle.assignment() {
            fails.push(format!(
                "adapted assignment: got {beta:?}, want {:?}",
                oracle.assignment()
            ));
        }
    });

    // center profile and prefix embedding on the two-point space
    run(&mut |fails| {
        let two = fixtures::two_point();
        let cov = greedy_cover(&two, 0.5).expect("both centers");
        let profile = embedding::phi_hat(&two, &cov, 0).expect("profile");
        close("phi_hat entry 0", profile[0], 0.0, 0.0, fails);
        close(
            "phi_hat entry 1",
            profile[1],
            1.0 / 2.0f64.sqrt(),
            1e-15,
            fails,
        );

        let config = EmbeddingConfig::new(2.0, 1, 4).expect("q = 2");
        let basis = embedding::BasisPrefix::cyclic(2, 4);
        let phi = embedding::phi_prefix(&two, &basis, &config, 0).expect("prefix");
        let c_phi = 3.0f64.sqrt() / 2.0;
        for (n, want) in [(0usize, 0.0), (1, c_phi / 2.0), (2, 0.0), (3, c_phi / 8.0)] {
            close(&format!("phi entry {n}"), phi[n], want, 1e-15, fails);
        }

        let iso = apply_isometry_prefix(&[1.0], &[0, 0, 0], &EmbeddingConfig::new(2.0, 1, 3).unwrap())
            .expect("isometry prefix");
        for (n, scale) in [(0usize, 1.0), (1, 0.5), (2, 0.25)] {
            close(&format!("B entry {n}"), iso[n], c_phi * scale, 1e-15, fails);
        }
    });

    // certified inner product tail width: unit diameter, q = 2, ten terms
    run(&mut |fails| {
        let two = fixtures::two_point();
        let ctx = SequenceContext::for_truncation(&two, 2.0, 10).expect("context");
        let ip = ctx
            .inner_product_bounded(SequenceKind::Profile, 0, SequenceKind::Profile, 0)
            .expect("bounded inner product");
        close(
            "tail half width",
            ip.half_width,
            2.0f64.powi(-20),
            1e-18,
            fails,
        );
    });

    // kernel values in closed form on the two-point space
    run(&mut |fails| {
        let two = fixtures::two_point();
        let gauss = ScalarKernelSpec::Radial {
            atoms: vec![(1.0, 1.0)],
        };
        let exp_spec = ScalarKernelSpec::Taylor {
            kind: TaylorKind::Exponential { scale: 1.0 },
        };
        let radial = covering_model(&two, &gauss, 0.5);
        close(
            "covering radial value",
            radial.evaluate(0, 1).unwrap(),
            (-1.0f64).exp(),
            1e-9,
            fails,
        );
        let taylor = covering_model(&two, &exp_spec, 0.5);
        close("covering taylor cross", taylor.evaluate(0, 1).unwrap(), 1.0, 1e-9, fails);
        close(
            "covering taylor diagonal",
            taylor.evaluate(0, 0).unwrap(),
            0.5f64.exp(),
            1e-9,
            fails,
        );
        let trunc = truncation_model(&two, &gauss, 2.0, 2);
        close(
            "truncated radial value",
            trunc.evaluate(0, 1).unwrap(),
            (-15.0f64 / 16.0).exp(),
            1e-9,
            fails,
        );
    });

    // far-apart points with a narrow kernel: diagonally dominant Gram
    run(&mut |fails| {
        let cloud: Vec<Vec<f64>> = (0..5).map(|i| vec![10.0 * i as f64]).collect();
        let space = Arc::new(FiniteMetricSpace::from_point_cloud(&cloud).expect("cloud"));
        let spec = ScalarKernelSpec::Radial {
            atoms: vec![(4.0, 1.0)],
        };
        let model = truncation_model(&space, &spec, 2.0, 8);
        let gram = model.gram(&[0, 1, 2, 3, 4]).expect("gram");
        let min_eig = gram.min_eigenvalue();
        if min_eig <= 0.9 {
            fails.push(format!("diagonally dominant Gram min eig {min_eig:.3e}"));
        }
    });

    // certification end to end: fine and coarse coverings both certify
    run(&mut |fails| {
        let line = fixtures::line3();
        let gauss = ScalarKernelSpec::Radial {
            atoms: vec![(1.0, 1.0)],
        };
        let fine = covering_model(&line, &gauss, 0.5);
        let fine_report = fine.certify_all(500_000).expect("certify");
        if fine_report.points.len() != 3 || !fine_report.all_pass {
            fails.push("fine covering failed certification".into());
        }
        let coarse = covering_model(&line, &gauss, line.diameter());
        let coarse_report = coarse.certify_all(500_000).expect("certify");
        if !coarse_report.all_pass {
            fails.push("coarse covering failed certification".into());
        }

        // hand value: single center on the two-point space at q = 2 leaves a
        // feature gap of 1/5, so the radial terms give 2 - 2 exp(-1/5)
        let two = fixtures::two_point();
        let single = covering_model(&two, &gauss, 1.0);
        let fd = single.feature_distance_sq(1, 500_000).expect("certified gap");
        close(
            "single-center feature distance",
            fd.value,
            2.0 - 2.0 * (-0.2f64).exp(),
            1e-6,
            fails,
        );
    });

    // error radii in closed form
    run(&mut |fails| {
        let two = fixtures::two_point();
        let gauss = ScalarKernelSpec::Radial {
            atoms: vec![(1.0, 1.0)],
        };
        let rho0 = covering_model(&two, &gauss, 0.1);
        close("covering radius", rho0.rho(), 0.1 * 2.0f64.sqrt(), 1e-12, fails);
        let rho_t = truncation_model(&two, &gauss, 2.0, 10);
        close(
            "truncation radius",
            rho_t.rho(),
            2.0f64.sqrt() / 1024.0,
            1e-12,
            fails,
        );
    });

    // mmd of point masses in closed form
    run(&mut |fails| {
        let two = fixtures::two_point();
        let gauss = ScalarKernelSpec::Radial {
            atoms: vec![(1.0, 1.0)],
        };
        let model = covering_model(&two, &gauss, 0.5);
        let d01 = mmd(
            &model,
            &EmpiricalMeasure::dirac(0),
            &EmpiricalMeasure::dirac(1),
        )
        .expect("mmd");
        let want_sq = 2.0 - 2.0 * (-1.0f64).exp();
        close("point-mass mmd squared", d01 * d01, want_sq, 1e-9, fails);
        close("point-mass mmd", d01, want_sq.sqrt(), 1e-9, fails);
    });

    // ridge regression residual identity, recomputed directly from the Gram
    run(&mut |fails| {
        let space = fixtures::graph50();
        let gauss = ScalarKernelSpec::Radial {
            atoms: vec![(1.0, 1.0)],
        };
        let model = covering_model(&space, &gauss, space.diameter() / 2.0);
        let train: Vec<usize> = (0..25).collect();
        let targets: Vec<f64> = train.iter().map(|&i| (i as f64).sin() * 0.3 + 0.5).collect();
        let ridge = 1e-6;
        let fit = krr_fit(&model, &train, &targets, ridge).expect("fit");
        let c = fit.coeffs();
        let mut worst = 0.0f64;
        for (row, &i) in train.iter().enumerate() {
            let mut pred = 0.0;
            for (col, &jj) in train.iter().enumerate() {
                pred += model.evaluate(i, jj).unwrap() * c[col];
            }
            worst = worst.max((pred - targets[row]).abs());
        }
        let c_inf = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if worst > ridge * c_inf * 1.001 + 1e-15 {
            fails.push(format!(
                "residual {worst:.3e} exceeds ridge bound {:.3e}",
                ridge * c_inf
            ));
        }
    });

    // constant targets stay at the ridge floor across a whole sweep
    run(&mut |fails| {
        let space = fixtures::graph50();
        let d = space.diameter();
        let spec = ScalarKernelSpec::Radial {
            atoms: vec![(1e-8, 1.0)],
        };
        let grid = SweepGrid::Eta(vec![d, d / 2.0, d / 4.0]);
        let targets = vec![1.0; space.size()];
        let report = approximation_sweep(
            &space,
            &spec,
            &grid,
            &targets,
            None,
            1e-6,
            0,
            "fixture:graph50",
        )
        .expect("sweep");
        for row in &report.rows {
            if row.sup_err > 1e-4 {
                fails.push(format!(
                    "constant-target sup error {:.3e} at eta {:.3e}",
                    row.sup_err, row.param
                ));
            }
        }
    });

    let elapsed = start.elapsed().as_secs_f64();
    let pass = fails.is_empty();
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!(
        "[criterion 8] {verdict}: {checks} worked-example groups repinned against closed \
         forms, {} misses, {elapsed:.2}s",
        fails.len()
    );
    assert!(pass, "worked-example regressions: {fails:?}");
}
