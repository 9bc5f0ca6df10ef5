use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tracegn::dcres::{
    prolong, read_grid, restrict, solve_pde, synthesize, write_grid, DcResistivity, Grid2D, PdeOperator, PdeSolver,
    SourceReceiverLayout, SynthesisConfig, SyntheticExperiment, Transfer, TrueModel,
};
use tracegn::nls::{full_misfit, gauss_newton_step, Dataset, ForwardModel, Probes, Weighting};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng.random_range(-1.0..1.0)).collect()
}

fn rough_conductivity(g: Grid2D, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..g.cells()).map(|_| 10f64.powf(rng.random_range(-2.0..0.0))).collect()
}

fn dense(op: &PdeOperator) -> DMatrix<f64> {
    let n = op.grid().cells();
    let mut a = DMatrix::zeros(n, n);
    for c in 0..n {
        let mut e = vec![0.0; n];
        e[c] = 1.0;
        for (r, v) in op.apply(&e).into_iter().enumerate() {
            a[(r, c)] = v;
        }
    }
    a
}

fn model(layout: SourceReceiverLayout, seed: u64) -> (DcResistivity, Vec<f64>) {
    let mu = rough_conductivity(layout.grid(), seed);
    let tr = Transfer::from_reference(&mu).unwrap();
    let m = mu.iter().map(|&v| tr.inverse(v).unwrap()).collect();
    (DcResistivity::new(layout, tr, PdeSolver::Direct), m)
}

#[test]
fn direct_solve_matches_dense_reference() {
    let g = Grid2D::square(8).unwrap();
    let op = PdeOperator::from_conductivity(g, rough_conductivity(g, 1)).unwrap();
    let a = dense(&op);
    assert!((&a - a.transpose()).amax() < 1e-12 * a.amax());
    let layout = SourceReceiverLayout::new(g, 3).unwrap();
    let direct = op.factor().unwrap();
    for k in 0..layout.num_sources() {
        let q = layout.source(k);
        let want = a.clone().lu().solve(&DVector::from_vec(q.clone())).unwrap();
        let got = direct.solve(&q);
        let err = (DVector::from_vec(got) - &want).amax();
        assert!(err <= 1e-8 * want.amax(), "source {k}: {err}");
    }
}

#[test]
fn iterative_and_direct_agree() {
    let g = Grid2D::square(12).unwrap();
    let op = PdeOperator::from_conductivity(g, rough_conductivity(g, 2)).unwrap();
    let q = SourceReceiverLayout::new(g, 4).unwrap().source(5);
    let a = op.factor().unwrap().solve(&q);
    let b = solve_pde(&op, &q, 1e-12, 10_000).unwrap();
    let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    assert!(norm(&diff) <= 1e-8 * norm(&a));
}

#[test]
fn forward_model_matches_dense_reference() {
    let g = Grid2D::square(8).unwrap();
    let layout = SourceReceiverLayout::new(g, 2).unwrap();
    let (fm, m) = model(layout.clone(), 3);
    let a = dense(&PdeOperator::from_conductivity(g, fm.conductivity(&m)).unwrap());
    for k in 0..4 {
        let q = layout.source(k);
        let u = a.clone().lu().solve(&DVector::from_vec(q.clone())).unwrap();
        let want = layout.project(u.as_slice());
        let got = fm.predict(&m, &q).unwrap();
        for (x, y) in got.iter().zip(&want) {
            assert!((x - y).abs() <= 1e-8 * norm(&want));
        }
    }
}

#[test]
fn jacobian_adjoint_pairs() {
    let layout = SourceReceiverLayout::new(Grid2D::square(16).unwrap(), 4).unwrap();
    let (fm, m) = model(layout.clone(), 4);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for t in 0..10 {
        let q = layout.source(t % layout.num_sources());
        let v = random_vec(&mut rng, fm.model_len(), 1.0);
        let y = random_vec(&mut rng, fm.data_len(), 1.0);
        let lhs = dot(&fm.jacobian_apply(&m, &q, &v).unwrap(), &y);
        let rhs = dot(&v, &fm.jacobian_adjoint_apply(&m, &q, &y).unwrap());
        assert!((lhs - rhs).abs() <= 1e-6 * lhs.abs().max(rhs.abs()), "pair {t}: {lhs} vs {rhs}");
    }
}

#[test]
fn jacobian_matches_finite_differences() {
    let layout = SourceReceiverLayout::new(Grid2D::square(10).unwrap(), 3).unwrap();
    let (fm, m) = model(layout.clone(), 6);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let v = random_vec(&mut rng, fm.model_len(), 1.0);
    let q = layout.source(4);
    let jv = fm.jacobian_apply(&m, &q, &v).unwrap();
    let f0 = fm.predict(&m, &q).unwrap();
    let err = |h: f64| {
        let mh: Vec<f64> = m.iter().zip(&v).map(|(a, b)| a + h * b).collect();
        let fh = fm.predict(&mh, &q).unwrap();
        let d: Vec<f64> = fh.iter().zip(&f0).zip(&jv).map(|((a, b), c)| (a - b) / h - c).collect();
        norm(&d)
    };
    let (e1, e2, e3) = (err(1e-3), err(1e-4), err(1e-5));
    assert!((e1 / e2).log10() > 0.9 && (e2 / e3).log10() > 0.9, "{e1} {e2} {e3}");
    assert!(e3 <= 1e-4 * norm(&jv));
}

#[test]
fn misfit_gradient_matches_finite_differences() {
    let g = Grid2D::square(8).unwrap();
    let layout = SourceReceiverLayout::new(g, 2).unwrap();
    let (fm, m_true) = model(layout.clone(), 8);
    let data = layout.sources().iter().map(|q| fm.predict(&m_true, q).unwrap()).collect();
    let ds = Dataset::new(layout.sources(), data, Weighting::Plain).unwrap();
    let m: Vec<f64> = m_true.iter().enumerate().map(|(i, v)| v + 0.3 * (i as f64).sin()).collect();
    let grad = gauss_newton_step(&fm, &ds, &m, &Probes::Identity, 1, 1e-3).unwrap().gradient;
    let h = 1e-5;
    let fd: Vec<f64> = (0..m.len())
        .map(|i| {
            let mut a = m.clone();
            let mut b = m.clone();
            a[i] += h;
            b[i] -= h;
            (full_misfit(&fm, &ds, &a).unwrap() - full_misfit(&fm, &ds, &b).unwrap()) / (2.0 * h)
        })
        .collect();
    let diff: Vec<f64> = grad.iter().zip(&fd).map(|(a, b)| a - b).collect();
    assert!(norm(&diff) <= 1e-4 * norm(&fd), "{} vs {}", norm(&diff), norm(&fd));
}

/// `u = cos(pi x) cos(pi y)` with `mu = 1 + sin(pi x) sin(pi y) / 2`.
fn manufactured_error(n: usize) -> f64 {
    let g = Grid2D::square(n).unwrap();
    let mu = g.sample(|x, y| 1.0 + 0.5 * (PI * x).sin() * (PI * y).sin());
    let exact = g.sample(|x, y| (PI * x).cos() * (PI * y).cos());
    let q = g.sample(|x, y| {
        let mu = 1.0 + 0.5 * (PI * x).sin() * (PI * y).sin();
        let u = (PI * x).cos() * (PI * y).cos();
        2.0 * PI * PI * mu * u + PI * PI * (PI * x).sin() * (PI * x).cos() * (PI * y).sin() * (PI * y).cos()
    });
    let qm = q.iter().sum::<f64>() / q.len() as f64;
    let q: Vec<f64> = q.iter().map(|v| v - qm).collect();
    let u = PdeOperator::from_conductivity(g, mu).unwrap().factor().unwrap().solve(&q);
    let (um, em) = (u.iter().sum::<f64>() / u.len() as f64, exact.iter().sum::<f64>() / u.len() as f64);
    let sq: f64 = u.iter().zip(&exact).map(|(a, b)| (a - um - (b - em)).powi(2)).sum();
    (sq / u.len() as f64).sqrt()
}

#[test]
fn second_order_convergence() {
    let e: Vec<f64> = [16, 32, 64].iter().map(|&n| manufactured_error(n)).collect();
    let orders: Vec<f64> = e.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    assert!(orders.iter().all(|&p| p >= 1.8), "errors {e:?}, orders {orders:?}");
}

#[test]
fn reciprocity() {
    let g = Grid2D::square(12).unwrap();
    let d = PdeOperator::from_conductivity(g, rough_conductivity(g, 9)).unwrap().factor().unwrap();
    let layout = SourceReceiverLayout::new(g, 4).unwrap();
    let (q1, q2) = (layout.source(1), layout.source(11));
    let a = dot(&q2, &d.solve(&q1));
    let b = dot(&q1, &d.solve(&q2));
    assert!((a - b).abs() <= 1e-10 * a.abs());
}

#[test]
fn charge_is_conserved() {
    let g = Grid2D::square(12).unwrap();
    let op = PdeOperator::from_conductivity(g, rough_conductivity(g, 10)).unwrap();
    let q = SourceReceiverLayout::new(g, 4).unwrap().source(6);
    let u = op.factor().unwrap().solve(&q);
    let lu = op.apply_unpinned(&u);
    let scale: f64 = q.iter().map(|v| v.abs()).sum();
    assert!(lu.iter().sum::<f64>().abs() <= 1e-10 * scale);
    let defect: Vec<f64> = lu.iter().zip(&q).map(|(a, b)| a - b).collect();
    assert!(norm(&defect) <= 1e-9 * norm(&q));
    assert!(u.iter().sum::<f64>().abs() <= 1e-10 * u.iter().map(|v| v.abs()).sum::<f64>());
}

#[test]
fn linear_in_the_source() {
    let layout = SourceReceiverLayout::new(Grid2D::square(12).unwrap(), 3).unwrap();
    let (fm, m) = model(layout.clone(), 11);
    let (q1, q2) = (layout.source(0), layout.source(7));
    let comb: Vec<f64> = q1.iter().zip(&q2).map(|(a, b)| 2.5 * a - 0.75 * b).collect();
    let lhs = fm.predict(&m, &comb).unwrap();
    let (f1, f2) = (fm.predict(&m, &q1).unwrap(), fm.predict(&m, &q2).unwrap());
    for ((l, a), b) in lhs.iter().zip(&f1).zip(&f2) {
        assert!((l - (2.5 * a - 0.75 * b)).abs() <= 1e-10 * norm(&lhs));
    }
}

#[test]
fn mirror_antisymmetry() {
    // A dipole between equal rows in a homogeneous medium is odd under x -> 1 - x.
    let g = Grid2D::square(16).unwrap();
    let layout = SourceReceiverLayout::new(g, 4).unwrap();
    let d = PdeOperator::from_conductivity(g, vec![0.3; g.cells()]).unwrap().factor().unwrap();
    for i in 0..4 {
        let u = d.solve(&layout.source(i * 4 + i));
        for j in 0..g.ny() {
            for x in 0..g.nx() {
                let a = u[g.index(x, j)];
                let b = u[g.index(g.nx() - 1 - x, j)];
                assert!((a + b).abs() <= 1e-10 * norm(&u));
            }
        }
    }
}

#[test]
fn solve_counts() {
    let layout = SourceReceiverLayout::new(Grid2D::square(8).unwrap(), 2).unwrap();
    let (fm, m) = model(layout.clone(), 12);
    let q = layout.source(1);
    fm.predict(&m, &q).unwrap();
    assert_eq!(fm.solve_count(), 1);
    // The field is cached; the Jacobian product adds one solve.
    fm.jacobian_apply(&m, &q, &vec![1.0; 64]).unwrap();
    assert_eq!(fm.solve_count(), 2);
    fm.jacobian_adjoint_apply(&m, &q, &vec![1.0; fm.data_len()]).unwrap();
    assert_eq!(fm.solve_count(), 3);
}

#[test]
fn synthesis_without_noise_is_clean() {
    let cfg = SynthesisConfig { noise_pct: 0.0, ..SynthesisConfig::desk(TrueModel::E1, 1) };
    let cfg = SynthesisConfig { grid: Grid2D::square(16).unwrap(), p: 6, ..cfg };
    let ex = synthesize(&cfg).unwrap();
    assert_eq!(ex.data, ex.clean_data);
    assert_eq!(ex.sigma, 0.0);
    assert_eq!(ex.synthesis_solves, 36);
    assert_eq!(ex.num_experiments(), 36);
}

#[test]
fn synthesis_noise_level() {
    let cfg = SynthesisConfig { grid: Grid2D::square(16).unwrap(), p: 8, ..SynthesisConfig::desk(TrueModel::E2, 3) };
    let ex = synthesize(&cfg).unwrap();
    let clean: Vec<f64> = ex.clean_data.iter().flatten().copied().collect();
    let noise: Vec<f64> = ex.data.iter().flatten().zip(&clean).map(|(a, b)| a - b).collect();
    let rel = norm(&noise) / norm(&clean);
    assert!((rel - 0.02).abs() <= 0.1 * 0.02, "relative noise {rel}");
    let sl = (ex.num_experiments() * ex.num_receivers()) as f64;
    assert!((ex.rho - 1.2 * ex.sigma * ex.sigma * sl).abs() <= 1e-12 * ex.rho);
    let again = synthesize(&cfg).unwrap();
    assert_eq!(ex, again);
    assert_eq!(SyntheticExperiment::from_json(&ex.to_json()).unwrap(), ex);
}

#[test]
fn fine_grid_synthesis_agrees_with_coarse_truth() {
    // Refining the synthesis grid only perturbs the data slightly.
    let cfg = SynthesisConfig {
        grid: Grid2D::square(16).unwrap(),
        p: 4,
        noise_pct: 0.0,
        ..SynthesisConfig::desk(TrueModel::E1, 0)
    };
    let ex = synthesize(&cfg).unwrap();
    let fm = ex.forward_model(PdeSolver::Direct);
    let m: Vec<f64> = ex.true_conductivity_coarse().iter().map(|&v| ex.transfer.inverse(v).unwrap()).collect();
    let ds = ex.dataset().unwrap();
    let phi = full_misfit(&fm, &ds, &m).unwrap();
    let total: f64 = ex.clean_data.iter().flatten().map(|v| v * v).sum();
    assert!(phi <= 0.05 * total, "{phi} vs {total}");
}

#[test]
fn prolong_then_restrict_is_identity() {
    let g = Grid2D::new(6, 5).unwrap();
    let v: Vec<f64> = (0..30).map(|i| i as f64 * 0.1).collect();
    let back = restrict(g, 3, &prolong(g, 3, &v).unwrap()).unwrap();
    assert!(back.iter().zip(&v).all(|(a, b)| (a - b).abs() <= 1e-14 * b.abs().max(1.0)));
}

#[test]
fn layout_limits() {
    let g = Grid2D::square(8).unwrap();
    assert!(SourceReceiverLayout::new(g, 6).is_ok());
    assert!(SourceReceiverLayout::new(g, 7).is_err());
    let l = SourceReceiverLayout::new(g, 3).unwrap();
    assert_eq!(l.num_sources(), 9);
    assert_eq!(l.num_receivers(), 12);
    for k in 0..9 {
        let q = l.source(k);
        assert!(q.iter().sum::<f64>().abs() < 1e-12);
    }
}

#[test]
fn grid_files_round_trip() {
    let g = Grid2D::new(7, 5).unwrap();
    let v = TrueModel::E2.conductivity(g);
    assert_eq!(read_grid(&write_grid(g, &v).unwrap()).unwrap(), (g, v));
}

#[test]
fn true_models() {
    let g = Grid2D::square(16).unwrap();
    let e1 = TrueModel::E1.conductivity(g);
    assert_eq!(e1[g.index(8, 8)], 1.0);
    assert_eq!(e1[g.index(0, 0)], TrueModel::BACKGROUND);
    let e2 = TrueModel::E2.conductivity(g);
    assert!(e2.contains(&0.01) && e2.contains(&1.0));
    assert!(TrueModel::parse("e3").is_err());
}
