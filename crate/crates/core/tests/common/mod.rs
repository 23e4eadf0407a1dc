//! Property checks shared by the invariant suite and the acceptance harness.

#![allow(dead_code)]

use beamupdate::data::{default_truth, synth_measured, SynthNoise};
use beamupdate::guyan::reduce_matrices;
use beamupdate::modal::{rigid_mode_count, solve_modes};
use beamupdate::objective::{log_likelihood, log_prior, residual_matrix, PriorSpec, ResidualForm};
use beamupdate::{assemble, mac, reduce, BeamGeometry, BeamPosterior, LogDensity, UpdatingParameters};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

pub type Property = fn(u32) -> Result<(), String>;

pub const PROPERTIES: &[(&str, Property)] = &[
    ("assembled matrices are symmetric", symmetry),
    ("mass is positive definite, stiffness has two rigid modes", definiteness),
    ("stiffness and mass are linear in their scales", linearity),
    ("full and reduced systems keep two rigid-body modes", rigid_body_count),
    ("solved modes are orthonormal and satisfy the pencil", orthogonality),
    ("reduced stiffness equals the Schur complement", schur_complement),
    ("MAC lies in [0, 1] and ignores scaling", mac_bounds_and_scale),
    ("log-likelihood is non-positive, zero only without error", likelihood_sign),
    ("log-prior is non-positive, zero only at the reference", prior_sign),
    ("noiseless truth maximizes the likelihood", argmax_consistency),
    ("posterior gradient is continuous at the nominal point", gradient_continuity),
    ("first frequency converges to the closed form", mesh_convergence),
];

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

fn run<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

fn params_strategy(element_count: usize) -> impl Strategy<Value = UpdatingParameters> {
    prop::collection::vec(0.5f64..1.5, element_count + 2).prop_map(|v| UpdatingParameters::from_slice(&v).unwrap())
}

fn beam_case() -> impl Strategy<Value = (BeamGeometry, UpdatingParameters)> {
    (1usize..=16).prop_flat_map(|n| {
        let g = BeamGeometry {
            element_count: n,
            ..BeamGeometry::default()
        };
        (Just(g), params_strategy(n))
    })
}

fn rel_asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax() / m.amax()
}

pub fn symmetry(cases: u32) -> Result<(), String> {
    run(cases, beam_case(), |(g, p)| {
        let s = assemble(&g, &p).unwrap();
        prop_assert!(rel_asymmetry(&s.stiffness) <= 1e-12);
        prop_assert!(rel_asymmetry(&s.mass) <= 1e-12);
        Ok(())
    })
}

pub fn definiteness(cases: u32) -> Result<(), String> {
    run(cases, beam_case(), |(g, p)| {
        let s = assemble(&g, &p).unwrap();
        prop_assert!(s.mass.clone().cholesky().is_some());
        let m_eig = SymmetricEigen::new(s.mass.clone()).eigenvalues;
        prop_assert!(m_eig.min() > 0.0);
        let k_eig = SymmetricEigen::new(s.stiffness.clone()).eigenvalues;
        let scale = s.stiffness.norm();
        let tol = 1e-9 * scale;
        prop_assert!(k_eig.min() >= -tol, "min eigenvalue {}", k_eig.min());
        prop_assert_eq!(k_eig.iter().filter(|&&l| l < tol).count(), 2);
        Ok(())
    })
}

pub fn linearity(cases: u32) -> Result<(), String> {
    let strategy = (params_strategy(12), 0usize..14, 0.3f64..0.9, 1.0f64..1.8);
    run(cases, strategy, |(p, idx, a, c)| {
        let g = BeamGeometry::default();
        let b = 0.5 * (a + c);
        let at = |v: f64| {
            let mut x = p.to_vec();
            x[idx] = v;
            assemble(&g, &UpdatingParameters::from_slice(&x).unwrap()).unwrap()
        };
        let (sa, sb, sc) = (at(a), at(b), at(c));
        // midpoint of a linear map is the mean of its end values
        let k_dev = (&sb.stiffness - (&sa.stiffness + &sc.stiffness) * 0.5).amax() / sc.stiffness.amax();
        let m_dev = (&sb.mass - (&sa.mass + &sc.mass) * 0.5).amax() / sc.mass.amax();
        prop_assert!(k_dev < 1e-12, "stiffness deviation {k_dev}");
        prop_assert!(m_dev < 1e-12, "mass deviation {m_dev}");
        // density leaves stiffness untouched, modulus leaves mass untouched
        if idx == 0 {
            prop_assert_eq!(&sa.stiffness, &sc.stiffness);
        }
        if idx == 1 {
            prop_assert_eq!(&sa.mass, &sc.mass);
        }
        Ok(())
    })
}

pub fn rigid_body_count(cases: u32) -> Result<(), String> {
    run(cases, params_strategy(12), |p| {
        let g = BeamGeometry::default();
        let full = assemble(&g, &p).unwrap();
        prop_assert_eq!(rigid_mode_count(&full).unwrap(), 2);
        let red = reduce(&full, &g.translation_dofs()).unwrap();
        prop_assert_eq!(rigid_mode_count(&red).unwrap(), 2);
        Ok(())
    })
}

pub fn orthogonality(cases: u32) -> Result<(), String> {
    run(cases, params_strategy(12), |p| {
        let full = assemble(&BeamGeometry::default(), &p).unwrap();
        let modes = solve_modes(&full, 8, true).unwrap();
        let phi = &modes.shapes;
        let mm = phi.transpose() * &full.mass * phi;
        let kk = phi.transpose() * &full.stiffness * phi;
        for i in 0..8 {
            let w2 = (2.0 * std::f64::consts::PI * modes.frequencies_hz[i]).powi(2);
            for j in 0..8 {
                let delta = if i == j { 1.0 } else { 0.0 };
                prop_assert!((mm[(i, j)] - delta).abs() < 1e-8);
                let kd = if i == j { w2 } else { 0.0 };
                prop_assert!((kk[(i, j)] - kd).abs() < 1e-6 * w2.max(kk[(j, j)]));
            }
            let v = phi.column(i);
            let r = (&full.stiffness * v - &full.mass * v * w2).norm() / (w2 * (&full.mass * v).norm());
            prop_assert!(r < 1e-8, "residual {r}");
        }
        Ok(())
    })
}

pub fn schur_complement(cases: u32) -> Result<(), String> {
    let strategy = (params_strategy(12), prop::collection::btree_set(0usize..26, 3..20));
    run(cases, strategy, |(p, masters)| {
        let full = assemble(&BeamGeometry::default(), &p).unwrap();
        let masters: Vec<usize> = masters.into_iter().collect();
        let Ok(red) = reduce_matrices(&full.stiffness, &full.mass, &masters) else {
            return Ok(());
        };
        let slaves: Vec<usize> = (0..26).filter(|i| !masters.contains(i)).collect();
        let pick = |rows: &[usize], cols: &[usize]| DMatrix::from_fn(rows.len(), cols.len(), |r, c| full.stiffness[(rows[r], cols[c])]);
        let kss = pick(&slaves, &slaves);
        let schur = pick(&masters, &masters) - pick(&masters, &slaves) * kss.lu().solve(&pick(&slaves, &masters)).unwrap();
        let scale = schur.amax().max(full.stiffness.amax());
        prop_assert!((&red.stiffness - &schur).amax() / scale < 1e-10);
        prop_assert!(rel_asymmetry(&red.stiffness) <= 1e-12);
        prop_assert!(rel_asymmetry(&red.mass) <= 1e-12);
        Ok(())
    })
}

fn nonzero() -> impl Strategy<Value = f64> {
    prop_oneof![-1e3f64..-1e-3, 1e-3f64..1e3]
}

pub fn mac_bounds_and_scale(cases: u32) -> Result<(), String> {
    let strategy = (1usize..20).prop_flat_map(|n| {
        (
            prop::collection::vec(-10.0f64..10.0, n),
            prop::collection::vec(-10.0f64..10.0, n),
            nonzero(),
        )
    });
    run(cases, strategy, |(a, b, c)| {
        prop_assume!(a.iter().any(|x| x.abs() > 1e-6) && b.iter().any(|x| x.abs() > 1e-6));
        let m = mac(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&m));
        let scaled: Vec<f64> = a.iter().map(|x| c * x).collect();
        prop_assert!((mac(&scaled, &b).unwrap() - m).abs() <= 1e-12);
        prop_assert!((mac(&a, &a).unwrap() - 1.0).abs() <= 1e-12);
        Ok(())
    })
}

pub fn likelihood_sign(cases: u32) -> Result<(), String> {
    let strategy = (1usize..8, 1usize..8).prop_flat_map(|(r, c)| {
        (prop::collection::vec(prop_oneof![Just(0.0), -5.0f64..5.0], r * c), Just(r), Just(c), 1e-3f64..1e3)
    });
    run(cases, strategy, |(v, r, c, beta)| {
        let e = DMatrix::from_vec(r, c, v);
        let ll = log_likelihood(&e, beta);
        prop_assert!(ll <= 0.0);
        prop_assert_eq!(ll == 0.0, e.iter().all(|x| *x == 0.0));
        Ok(())
    })
}

pub fn prior_sign(cases: u32) -> Result<(), String> {
    let spec = PriorSpec::beam_default(12);
    run(cases, prop::collection::vec(prop_oneof![Just(1.0), 0.5f64..1.5], 14), |x| {
        let lp = log_prior(&x, &spec);
        prop_assert!(lp <= 0.0);
        prop_assert_eq!(lp == 0.0, x == spec.reference);
        Ok(())
    })
}

pub fn argmax_consistency(cases: u32) -> Result<(), String> {
    let g = BeamGeometry::default();
    let truth = default_truth(12);
    let noiseless = SynthNoise {
        freq_rel: 0.0,
        shape_rel: 0.0,
    };
    let data = synth_measured(&truth, &g, &g.translation_dofs(), 5, noiseless, 0).unwrap();
    let mut results = Vec::new();
    for form in [ResidualForm::Modal, ResidualForm::Nodal] {
        let at = |p: &UpdatingParameters| log_likelihood(&residual_matrix(form, p, &g, &data).unwrap(), 1.0);
        let best = at(&truth);
        let n = cases.max(1000);
        results.push(run(n, prop::collection::vec(-0.2f64..0.2, 14), |d| {
            let x: Vec<f64> = truth.to_vec().iter().zip(&d).map(|(t, e)| t * (1.0 + e)).collect();
            let ll = at(&UpdatingParameters::from_slice(&x).unwrap());
            prop_assert!(best >= ll, "{best} < {ll}");
            Ok(())
        }));
    }
    results.into_iter().collect()
}

/// Central-difference gradient component of `f` at `x`.
fn partial(f: &impl LogDensity, x: &[f64], i: usize, h: f64) -> f64 {
    let mut a = x.to_vec();
    let mut b = x.to_vec();
    a[i] += h;
    b[i] -= h;
    (f.log_density(&a) - f.log_density(&b)) / (2.0 * h)
}

pub fn gradient_continuity(cases: u32) -> Result<(), String> {
    let g = BeamGeometry::default();
    let data = synth_measured(&default_truth(12), &g, &g.translation_dofs(), 5, SynthNoise::default(), 1).unwrap();
    let post = BeamPosterior::new(g, data, PriorSpec::beam_default(12), 1.0, ResidualForm::Modal).unwrap();
    let x0 = UpdatingParameters::nominal(12).to_vec();
    run(cases, (0usize..14, 1e-3f64..1e-2), |(i, delta)| {
        let h = 1e-5;
        let g0 = partial(&post, &x0, i, h);
        let mut up = x0.clone();
        up[i] += delta;
        let mut dn = x0.clone();
        dn[i] -= delta;
        let gp = partial(&post, &up, i, h);
        let gm = partial(&post, &dn, i, h);
        // a smooth gradient sits halfway between its neighbours up to O(δ²)
        let scale = g0.abs().max((gp - gm).abs()).max(1.0);
        prop_assert!((0.5 * (gp + gm) - g0).abs() < 0.05 * scale, "{gm} {g0} {gp}");
        Ok(())
    })
}

pub fn mesh_convergence(_cases: u32) -> Result<(), String> {
    let g = BeamGeometry::default();
    let full = assemble(&g, &UpdatingParameters::nominal(12)).map_err(|e| e.to_string())?;
    let f1 = solve_modes(&full, 1, true).map_err(|e| e.to_string())?.frequencies_hz[0];
    let ei = g.nominal_modulus * g.second_moment();
    let rho_a = g.nominal_density * g.area();
    let exact = 4.730041f64.powi(2) / (2.0 * std::f64::consts::PI) * (ei / rho_a).sqrt() / g.length.powi(2);
    let rel = (f1 - exact).abs() / exact;
    if rel < 0.005 {
        Ok(())
    } else {
        Err(format!("first frequency {f1} vs closed form {exact} ({rel:.2e})"))
    }
}
