mod common;

use rand::Rng;

use common::{rng, vertex_enumeration, LpRowSpec};
use storymin::lp::{DualSimplex, LpStatus, RelaxationBackend, Sense};

fn random_row<R: Rng>(r: &mut R, n: usize) -> LpRowSpec {
    let mut coeffs = Vec::new();
    for j in 0..n {
        if r.gen_bool(0.7) {
            coeffs.push((j, r.gen_range(-3..=3) as f64 + r.gen_range(0..4) as f64 * 0.25));
        }
    }
    let sense = match r.gen_range(0..5) {
        0 => Sense::Ge,
        1 => Sense::Eq,
        _ => Sense::Le,
    };
    LpRowSpec {
        coeffs,
        sense,
        rhs: r.gen_range(-4..=6) as f64 * 0.5,
    }
}

fn check(lp: &mut DualSimplex, cost: &[f64], lower: &[f64], upper: &[f64], rows: &[LpRowSpec]) -> bool {
    let status = lp.solve();
    let expected = vertex_enumeration(cost, lower, upper, rows);
    match (status, expected) {
        (LpStatus::Optimal, Some(z)) => (lp.objective() - z).abs() <= 1e-6,
        (LpStatus::Infeasible, None) => true,
        _ => false,
    }
}

#[test]
fn fifty_random_lps_agree_with_vertex_enumeration() {
    let mut r = rng(2024);
    let mut agree = 0;
    for case in 0..50 {
        let n = r.gen_range(2..=5);
        let m = r.gen_range(1..=5);
        let cost: Vec<f64> = (0..n).map(|_| r.gen_range(-5..=5) as f64).collect();
        let lower: Vec<f64> = (0..n).map(|_| if r.gen_bool(0.8) { 0.0 } else { -1.0 }).collect();
        let upper: Vec<f64> = (0..n).map(|_| if r.gen_bool(0.8) { 1.0 } else { 2.0 }).collect();
        let rows: Vec<LpRowSpec> = (0..m).map(|_| random_row(&mut r, n)).collect();
        let mut lp = DualSimplex::new();
        lp.load(&cost, &lower, &upper);
        for row in &rows {
            lp.add_row(&row.coeffs, row.sense, row.rhs);
        }
        assert!(check(&mut lp, &cost, &lower, &upper, &rows), "case {case}");
        agree += 1;
    }
    assert_eq!(agree, 50);
}

#[test]
fn incremental_changes_match_fresh_solves() {
    let mut r = rng(99);
    for case in 0..60 {
        let n = r.gen_range(2..=4);
        let cost: Vec<f64> = (0..n).map(|_| r.gen_range(-4..=4) as f64).collect();
        let mut lower = vec![0.0; n];
        let mut upper = vec![1.0; n];
        let mut lp = DualSimplex::new();
        lp.load(&cost, &lower, &upper);
        let mut rows: Vec<(usize, LpRowSpec)> = Vec::new();
        for step in 0..8 {
            match r.gen_range(0..4) {
                0 | 1 => {
                    let row = random_row(&mut r, n);
                    let id = lp.add_row(&row.coeffs, row.sense, row.rhs);
                    rows.push((id, row));
                }
                2 if !rows.is_empty() => {
                    let k = r.gen_range(0..rows.len());
                    let (id, _) = rows.remove(k);
                    lp.remove_rows(&[id]);
                }
                _ => {
                    let j = r.gen_range(0..n);
                    let (l, u) = match r.gen_range(0..3) {
                        0 => (0.0, 0.0),
                        1 => (1.0, 1.0),
                        _ => (0.0, 1.0),
                    };
                    lower[j] = l;
                    upper[j] = u;
                    lp.set_bounds(j, l, u);
                }
            }
            let specs: Vec<LpRowSpec> = rows
                .iter()
                .map(|(_, s)| LpRowSpec {
                    coeffs: s.coeffs.clone(),
                    sense: s.sense,
                    rhs: s.rhs,
                })
                .collect();
            assert!(check(&mut lp, &cost, &lower, &upper, &specs), "case {case} step {step}");
            for (id, spec) in &rows {
                if lp.num_rows() > 0 {
                    let act = lp.row_activity(*id).unwrap();
                    let expect: f64 = spec.coeffs.iter().map(|&(j, a)| a * lp.primal()[j]).sum();
                    assert!((act - expect).abs() < 1e-9);
                }
            }
        }
    }
}

#[test]
fn maximize_zero_over_box() {
    let mut lp = DualSimplex::new();
    lp.load(&[0.0; 6], &[0.0; 6], &[1.0; 6]);
    assert_eq!(lp.solve(), LpStatus::Optimal);
    assert_eq!(lp.objective(), 0.0);
}
