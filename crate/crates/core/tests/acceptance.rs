//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured quantities (visible with `cargo test -- --nocapture`).

mod common;

use std::time::Instant;

use common::{rk_step_linear, NonlinearSplitOde, XorShift64};
use mrimex::advdiff::{advective_rhs, diffusive_rhs, make_system, Grid1D};
use mrimex::harness::{build_map, build_scheme, convergence_rates, preset, reproduce_fig2};
use mrimex::linalg::{lu_factor, Matrix};
use mrimex::stability::{r_numeric, ZTriple};
use mrimex::stepper::{integrate, step, IntegrateOptions, StepperState, Verdict};
use mrimex::system::{LinearSplitSystem, PartitionMap, Region};
use mrimex::tableau::{build_fast, build_slow, ImplicitVariant, MultirateScheme, Tableau};
use mrimex::{r_implicit_closed_form, Complex64, SolverConfig};

fn base() -> Tableau {
    Tableau::explicit_trapezoidal()
}

fn scheme(m: usize, variant: Option<ImplicitVariant>) -> MultirateScheme {
    let s = MultirateScheme::new(base(), m).unwrap();
    match variant {
        Some(v) => s.augment_implicit(v).unwrap(),
        None => s,
    }
}

#[test]
fn criterion_01_tableau_golden_values() {
    let start = Instant::now();

    let slow = build_slow(&base(), 2).unwrap();
    let fast = build_fast(&base(), 2).unwrap();
    let expected_slow: [[f64; 4]; 4] = [
        [0.0, 0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
    ];
    let expected_fast: [[f64; 4]; 4] = [
        [0.0, 0.0, 0.0, 0.0],
        [0.5, 0.0, 0.0, 0.0],
        [0.25, 0.25, 0.0, 0.0],
        [0.25, 0.25, 0.5, 0.0],
    ];
    for i in 0..4 {
        assert_eq!(slow.a_row(i), &expected_slow[i]);
        assert_eq!(fast.a_row(i), &expected_fast[i]);
    }
    assert_eq!(slow.b(), &[0.25; 4]);
    assert_eq!(fast.b(), &[0.25; 4]);
    assert_eq!(slow.c(), &[0.0, 1.0, 0.0, 1.0]);
    assert_eq!(fast.c(), &[0.0, 0.5, 0.5, 1.0]);

    let astable = scheme(2, Some(ImplicitVariant::AStable2));
    let aug = astable.implicit.as_ref().unwrap();
    assert_eq!(aug.a_tilde().row(3), &[0.5; 4]);
    assert_eq!(aug.c_tilde(), &[0.0, 0.0, 0.0, 2.0]);
    let base_aug = astable.base_implicit.as_ref().unwrap();
    assert_eq!(base_aug.a_tilde().row(1), &[0.5, 0.5]);
    assert_eq!(base_aug.c_tilde(), &[0.0, 1.0]);

    let lstable = scheme(2, Some(ImplicitVariant::LStable1));
    let aug = lstable.implicit.as_ref().unwrap();
    assert_eq!(aug.a_tilde().row(3), &[1.0; 4]);
    assert_eq!(aug.c_tilde(), &[0.0, 0.0, 0.0, 4.0]);
    let base_aug = lstable.base_implicit.as_ref().unwrap();
    assert_eq!(base_aug.a_tilde().row(1), &[1.0, 1.0]);
    assert_eq!(base_aug.c_tilde(), &[0.0, 2.0]);

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0);
    println!("PASS criterion 1: slow/fast/implicit tableaux exact in {elapsed:?}");
}

#[test]
fn criterion_02_order_conditions_exact() {
    let dot = |b: &[f64], c: &[f64]| -> f64 { b.iter().zip(c).map(|(x, y)| x * y).sum() };
    for m in [2usize, 4] {
        let s = scheme(m, None);
        assert_eq!(s.b().iter().sum::<f64>(), 1.0, "sum b, m={m}");
        assert_eq!(dot(s.b(), s.fast.c()), 0.5, "b.cF, m={m}");
        assert_eq!(dot(s.b(), s.slow.c()), 0.5, "b.cS, m={m}");

        let astable = scheme(m, Some(ImplicitVariant::AStable2));
        let ct = astable.implicit.as_ref().unwrap().c_tilde().to_vec();
        assert_eq!(dot(astable.b(), &ct), 0.5, "b.c~ astable, m={m}");
        let report = astable.check_order_conditions();
        assert_eq!(report.achieved_order_explicit, 2);
        assert_eq!(report.achieved_order_implicit, Some(2));

        let lstable = scheme(m, Some(ImplicitVariant::LStable1));
        let ct = lstable.implicit.as_ref().unwrap().c_tilde().to_vec();
        assert_eq!(dot(lstable.b(), &ct), 1.0, "b.c~ lstable, m={m}");
        let report = lstable.check_order_conditions();
        assert_eq!(report.achieved_order_explicit, 2);
        assert_eq!(report.achieved_order_implicit, Some(1));
    }
    println!("PASS criterion 2: order conditions hold exactly for m in {{2, 4}}");
}

#[test]
fn criterion_03_stability_function_oracle() {
    let mut rng = XorShift64::new(0x5EED_0003);
    let mut worst = 0.0_f64;
    for variant in [ImplicitVariant::AStable2, ImplicitVariant::LStable1] {
        let s = scheme(2, Some(variant));
        for _ in 0..50 {
            let z = Complex64::new(rng.range(-50.0, 0.0), rng.range(-25.0, 25.0));
            let numeric = r_numeric(
                &s,
                ZTriple {
                    fast: Complex64::ZERO,
                    slow: Complex64::ZERO,
                    stiff: z,
                },
            )
            .unwrap();
            let exact = r_implicit_closed_form(variant, z).unwrap();
            let err = (numeric - exact).norm();
            worst = worst.max(err);
            assert!(err <= 1e-12, "{variant:?} at z={z}: err={err:.3e}");
        }
    }

    let probe = |variant| {
        let s = scheme(2, Some(variant));
        r_numeric(
            &s,
            ZTriple {
                fast: Complex64::ZERO,
                slow: Complex64::ZERO,
                stiff: Complex64::new(-1e9, 0.0),
            },
        )
        .unwrap()
        .norm()
    };
    let astable_inf = probe(ImplicitVariant::AStable2);
    let lstable_inf = probe(ImplicitVariant::LStable1);
    assert!(
        (astable_inf - 1.0).abs() <= 1e-6,
        "|R(-1e9)| = {astable_inf}"
    );
    assert!(lstable_inf <= 1e-6, "|R(-1e9)| = {lstable_inf}");

    println!(
        "PASS criterion 3: closed-form oracle matched at 50 z per variant \
         (worst {worst:.2e}); |R(-1e9)| = {astable_inf:.8} / {lstable_inf:.2e}"
    );
}

/// One-step matrix of the scheme on the linear split system
/// f = P_F F + P_S F (masked), g = G, assembled purely from tableau algebra.
fn one_step_matrix(
    s: &MultirateScheme,
    f: &Matrix,
    g: Option<&Matrix>,
    map: &PartitionMap,
    dt: f64,
) -> Matrix {
    let n = f.rows();
    let stages = s.stages();
    let p_fast = common::projector(&map.fast_mask());
    let p_slow = common::projector(&map.slow_mask());
    let pf_f = p_fast.matmul(f);
    let ps_f = p_slow.matmul(f);

    let mut stage_maps: Vec<Matrix> = Vec::with_capacity(stages);
    for i in 0..stages {
        let mut acc = Matrix::identity(n);
        for (j, sj) in stage_maps.iter().enumerate() {
            let af = s.fast.a(i, j);
            if af != 0.0 {
                acc = acc.add_scaled(dt * af, &pf_f.matmul(sj));
            }
            let asl = s.slow.a(i, j);
            if asl != 0.0 {
                acc = acc.add_scaled(dt * asl, &ps_f.matmul(sj));
            }
        }
        if i == stages - 1 {
            if let (Some(aug), Some(gm)) = (&s.implicit, g) {
                let gamma = aug.gamma();
                for sj in stage_maps.iter() {
                    acc = acc.add_scaled(dt * gamma, &gm.matmul(sj));
                }
                // (I - dt*gamma*G) S_s = acc
                let lhs = Matrix::identity(n).add_scaled(-dt * gamma, gm);
                acc = lu_factor(&lhs, "oracle implicit stage")
                    .unwrap()
                    .solve_matrix(&acc);
            }
        }
        stage_maps.push(acc);
    }

    let mut total = f.clone();
    if let Some(gm) = g {
        if s.is_augmented() {
            total = total.add_scaled(1.0, gm);
        }
    }
    let mut m = Matrix::identity(n);
    for (i, si) in stage_maps.iter().enumerate() {
        m = m.add_scaled(dt * s.b()[i], &total.matmul(si));
    }
    m
}

#[test]
fn criterion_04_one_step_matrix_oracle() {
    let mut rng = XorShift64::new(0x5EED_0004);
    let n = 6;
    let mut worst = 0.0_f64;
    for trial in 0..20 {
        let f = rng.matrix(n, 1.0);
        let g = rng.matrix(n, 1.0);
        let map = rng.partition(n);
        let dt = rng.range(0.05, 0.25);
        let variant = match trial % 3 {
            0 => Some(ImplicitVariant::AStable2),
            1 => Some(ImplicitVariant::LStable1),
            _ => None,
        };
        let m_ratio = if trial % 2 == 0 { 2 } else { 4 };
        let sch = scheme(m_ratio, variant);

        let g_used = variant.map(|_| g.clone());
        let sys = LinearSplitSystem::new(f.clone(), g_used.clone()).unwrap();
        let oracle = one_step_matrix(&sch, &f, g_used.as_ref(), &map, dt);

        // extract the stepper's matrix by stepping the basis
        let cfg = SolverConfig {
            tolerance: 1e-14,
            ..SolverConfig::default()
        };
        for col in 0..n {
            let mut e = vec![0.0; n];
            e[col] = 1.0;
            let state = StepperState::new(0.0, e);
            let next = step(&sch, &sys, &map, &state, dt, &cfg).unwrap();
            for row in 0..n {
                let dev = (next.y[row] - oracle[(row, col)]).abs();
                worst = worst.max(dev);
                assert!(
                    dev <= 1e-12,
                    "trial {trial} entry ({row},{col}): {} vs {}",
                    next.y[row],
                    oracle[(row, col)]
                );
            }
        }
    }
    println!("PASS criterion 4: 20 random 6-dim systems, worst entry deviation {worst:.2e}");
}

#[test]
fn criterion_05_composition_and_telescoping() {
    let mut rng = XorShift64::new(0x5EED_0005);
    let n = 4;
    let mut worst = 0.0_f64;
    for m in [2usize, 3, 4] {
        let fast = build_fast(&base(), m).unwrap();
        for _ in 0..5 {
            let l = rng.matrix(n, 1.0);
            let y0 = rng.vector(n, -1.0, 1.0);
            let dt = rng.range(0.05, 0.3);
            let one = rk_step_linear(&fast, &l, &y0, dt);
            let mut sub = y0.clone();
            for _ in 0..m {
                sub = rk_step_linear(&base(), &l, &sub, dt / m as f64);
            }
            let scale = sub.iter().fold(1.0_f64, |s, v| s.max(v.abs()));
            for k in 0..n {
                let rel = (one[k] - sub[k]).abs() / scale;
                worst = worst.max(rel);
                assert!(
                    rel <= 1e-13,
                    "m={m} component {k}: {} vs {}",
                    one[k],
                    sub[k]
                );
            }
        }
    }

    // telescoping one level from m=2 equals the direct m=4 composition
    let telescoped = MultirateScheme::new(base(), 2)
        .unwrap()
        .telescope(1)
        .unwrap();
    let direct = build_fast(&base(), 4).unwrap();
    let l = rng.matrix(n, 1.0);
    let y0 = rng.vector(n, -1.0, 1.0);
    let a = rk_step_linear(&telescoped.fast, &l, &y0, 0.2);
    let b = rk_step_linear(&direct, &l, &y0, 0.2);
    for k in 0..n {
        assert!((a[k] - b[k]).abs() <= 1e-13);
    }
    assert_eq!(telescoped.fast.stages(), 8);

    println!(
        "PASS criterion 5: sub-step composition (worst rel {worst:.2e}) and telescoping match"
    );
}

#[test]
fn criterion_06_convergence_rates() {
    let start = Instant::now();
    let map = PartitionMap::new(vec![Region::Fast, Region::Slow]);
    let y0 = [0.8, 0.6];
    let (t0, t_final, dt0, halvings) = (0.0, 1.6, 0.2, 4);

    let measure = |variant: ImplicitVariant, g_scale: f64| -> f64 {
        let sch = scheme(2, Some(variant));
        let sys = NonlinearSplitOde { g_scale };
        let table = convergence_rates(&sch, &sys, &map, &y0, t0, t_final, dt0, halvings).unwrap();
        assert!(table.monotone, "{variant:?} g_scale={g_scale}:\n{table}");
        table.final_rate().unwrap()
    };

    let astable = measure(ImplicitVariant::AStable2, 1.0);
    assert!(
        (astable - 2.0).abs() <= 0.15,
        "A-stable full scheme rate {astable}"
    );

    let lstable = measure(ImplicitVariant::LStable1, 1.0);
    assert!(lstable >= 0.9, "L-stable rate {lstable}");
    assert!(
        lstable <= 1.6,
        "L-stable rate {lstable} above the first-order band"
    );

    let astable_nog = measure(ImplicitVariant::AStable2, 0.0);
    let lstable_nog = measure(ImplicitVariant::LStable1, 0.0);
    assert!(
        (astable_nog - 2.0).abs() <= 0.15,
        "A-stable g==0 rate {astable_nog}"
    );
    assert!(
        (lstable_nog - 2.0).abs() <= 0.15,
        "L-stable g==0 rate {lstable_nog}"
    );

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!(
        "PASS criterion 6: orders astable={astable:.3} lstable={lstable:.3} \
         (g=0: {astable_nog:.3}/{lstable_nog:.3}) in {elapsed:?}"
    );
}

#[test]
fn criterion_07_conservation_on_stable_presets() {
    for name in ["fig2c", "fig2e", "fig2f"] {
        let config = preset(name).unwrap();
        let grid = config.grid().unwrap();
        let sch = build_scheme(&config).unwrap();
        let map = build_map(&config).unwrap();
        let sys = make_system(&config).unwrap();
        let y0 = config.ic.evaluate(&grid);
        let opts = IntegrateOptions {
            mass_weight: grid.dx(),
            ..IntegrateOptions::default()
        };
        let report =
            integrate(&sch, &sys, &map, y0, 0.0, config.t_final, config.dt, &opts).unwrap();
        assert_eq!(report.verdict, Verdict::Stable, "{name}");
        let loss = report.mass_loss();
        assert!(loss <= 1e-10, "{name}: mass loss {loss:.3e}");
        println!("PASS criterion 7 ({name}): mass loss {loss:.3e} <= 1e-10");
    }
}

#[test]
fn criterion_08_six_panel_reproduction() {
    let start = Instant::now();
    let out = std::env::temp_dir().join(format!("mrimex-acceptance-{}", std::process::id()));
    let table = reproduce_fig2(&out).unwrap();
    let elapsed = start.elapsed();

    let verdict = |name: &str| {
        let row = table
            .row(name)
            .unwrap_or_else(|| panic!("missing row {name}"));
        assert!(row.failure.is_none(), "{name} failed: {:?}", row.failure);
        row.verdict.unwrap()
    };

    assert_eq!(verdict("fig2a"), Verdict::Diverged);
    let a = table.row("fig2a").unwrap();
    assert!(a.final_max_norm.unwrap() > 1e10, "fig2a blowup magnitude");
    assert_ne!(verdict("fig2b"), Verdict::Stable);
    assert_eq!(verdict("fig2c"), Verdict::Stable);
    assert!(matches!(
        verdict("fig2d"),
        Verdict::Oscillatory | Verdict::Diverged
    ));
    assert_eq!(verdict("fig2e"), Verdict::Stable);
    assert_eq!(verdict("fig2f"), Verdict::Stable);

    // the stable panel keeps its amplitude bounded
    let c = table.row("fig2c").unwrap();
    assert!(c.final_max_norm.unwrap() <= 1.2, "fig2c max-norm");
    // the single-rate run stays conservative while unstable
    let b = table.row("fig2b").unwrap();
    assert!(b.mass_loss.unwrap() <= 1e-10, "fig2b mass loss");

    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    let _ = std::fs::remove_dir_all(&out);
    println!(
        "PASS criterion 8: verdict pattern [Diverged, {}, Stable, {}, Stable, Stable] in {elapsed:?}",
        verdict("fig2b"),
        verdict("fig2d")
    );
}

#[test]
fn criterion_09_single_implicit_solve() {
    let mut rng = XorShift64::new(0x5EED_0009);
    let n = 4;
    let f = rng.matrix(n, 0.5);
    let g = rng.zero_column_sum_matrix(n, 2.0);
    let sys = LinearSplitSystem::new(f, Some(g)).unwrap();
    let map = PartitionMap::new(vec![
        Region::Fast,
        Region::Fast,
        Region::Buffer,
        Region::Slow,
    ]);

    for m in [2usize, 4] {
        for levels in [1usize, 2] {
            for variant in [ImplicitVariant::AStable2, ImplicitVariant::LStable1] {
                let mut sch = MultirateScheme::new(base(), m).unwrap();
                if levels > 1 {
                    sch = sch.telescope(levels - 1).unwrap();
                }
                let sch = sch.augment_implicit(variant).unwrap();
                assert_eq!(sch.stages(), m.pow(levels as u32) * 2);

                let steps = 4;
                let mut state = StepperState::new(0.0, vec![1.0, -0.5, 0.25, 0.4]);
                for _ in 0..steps {
                    state = step(&sch, &sys, &map, &state, 0.05, &SolverConfig::default()).unwrap();
                }
                assert_eq!(
                    state.newton.solves, steps,
                    "m={m} levels={levels} {variant:?}"
                );
            }
        }
    }
    println!(
        "PASS criterion 9: exactly one implicit solve per step for m in {{2,4}}, levels in {{1,2}}"
    );
}

#[test]
fn criterion_10_stencil_oracles() {
    let grid = Grid1D::new(81).unwrap();
    let n = grid.cells();
    let config = preset("fig2c").unwrap();
    let omega = config.profile().unwrap().sample(&grid);
    let delta = config.delta;

    let mode: Vec<f64> = (0..n)
        .map(|k| (2.0 * std::f64::consts::PI * grid.x(k)).sin())
        .collect();
    let mut impulse = vec![0.0; n];
    impulse[40] = 1.0;

    for u in [&mode, &impulse] {
        let umax = u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));

        // advective: expanded interface-flux difference as a direct stencil on q
        let mut adv = vec![0.0; n];
        advective_rhs(u, &grid, &omega, &mut adv);
        for k in 0..n {
            let q = |j: isize| {
                let idx = ((k as isize + j).rem_euclid(n as isize)) as usize;
                omega[idx] * u[idx]
            };
            let direct = (-q(-2) + 6.0 * q(-1) - 3.0 * q(0) - 2.0 * q(1)) / (6.0 * grid.dx());
            assert!((adv[k] - direct).abs() <= 1e-12, "advective cell {k}");
        }
        let adv_sum: f64 = adv.iter().sum();
        assert!(
            adv_sum.abs() <= 1e-13 * umax * n as f64,
            "advective sum {adv_sum:.3e}"
        );

        // diffusive: second-difference stencil
        let mut dif = vec![0.0; n];
        diffusive_rhs(u, &grid, delta, &mut dif);
        let coeff = delta / (grid.dx() * grid.dx());
        for k in 0..n {
            let direct = coeff * (u[(k + n - 1) % n] - 2.0 * u[k] + u[(k + 1) % n]);
            assert!((dif[k] - direct).abs() <= 1e-12, "diffusive cell {k}");
        }
        let dif_sum: f64 = dif.iter().sum();
        assert!(
            dif_sum.abs() <= 1e-13 * umax * n as f64,
            "diffusive sum {dif_sum:.3e}"
        );
    }
    println!(
        "PASS criterion 10: stencil oracles and telescoping sums hold at 1e-12 / 1e-13 scales"
    );
}
