//! Hit-and-run over the coefficient polytope `{ alpha >= 0 : G alpha = y_hat }`.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::FullSvd;
use crate::problem::Weights;

use super::describe::OptimalSetDescription;

const BURN_IN: usize = 10;

/// Relative-interior starting point: the mean of the probe vertices and the described solution.
fn start_point(desc: &OptimalSetDescription) -> DVector<f64> {
    let mut acc = desc.base_alpha.clone();
    for v in &desc.probe_vertices {
        acc += v;
    }
    acc / (desc.probe_vertices.len() + 1) as f64
}

/// `count` seeded samples from the optimal set.
pub fn sample_solutions(desc: &OptimalSetDescription, count: usize, seed: u64) -> Vec<Weights> {
    let k = desc.support.len();
    if k == 0 {
        return vec![desc.weights_from_alpha(&DVector::zeros(0)); count];
    }
    let null = FullSvd::new(&desc.generators).null_space();
    if null.ncols() == 0 {
        return vec![desc.weights_from_alpha(&desc.base_alpha); count];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = start_point(desc);
    let mut out = Vec::with_capacity(count);
    let mut step = 0usize;
    while out.len() < count {
        let xi = DVector::from_fn(null.ncols(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let dir = &null * xi;
        let dn = dir.norm();
        if dn > 0.0 {
            let dir = dir / dn;
            let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
            for i in 0..k {
                if dir[i] > 1e-14 {
                    lo = lo.max(-a[i] / dir[i]);
                } else if dir[i] < -1e-14 {
                    hi = hi.min(-a[i] / dir[i]);
                }
            }
            // The polytope is bounded, so both ends are finite whenever the direction is nonzero.
            if lo.is_finite() && hi.is_finite() && hi > lo {
                let t = rng.random_range(lo..=hi);
                a += &dir * t;
                a.iter_mut().for_each(|v| *v = v.max(0.0));
            }
        }
        step += 1;
        if step > BURN_IN {
            out.push(desc.weights_from_alpha(&a));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimal_set::describe::describe_set;
    use crate::problem::{kkt_report, objective, BlockPartition, CglProblem, DualCertificate};
    use nalgebra::DMatrix;

    #[test]
    fn duplicate_samples_stay_on_the_segment() {
        let x = DMatrix::from_element(2, 2, 1.0);
        let y = DVector::from_vec(vec![2.0, 2.0]);
        let p = CglProblem::unconstrained(x, y, BlockPartition::singletons(2), 1.0).unwrap();
        let w = Weights::new(DVector::from_vec(vec![0.75, 0.75]));
        let rho = DualCertificate::zeros(&p);
        let d = describe_set(&p, &w, &rho).unwrap();
        let f0 = objective(&p, &w).unwrap();
        let s = sample_solutions(&d, 100, 7);
        assert_eq!(s.len(), 100);
        for wi in &s {
            assert!((wi.w[0] + wi.w[1] - 1.5).abs() < 1e-8);
            assert!(wi.w.min() >= 0.0);
            assert!((objective(&p, wi).unwrap() - f0).abs() < 1e-8);
            assert!(kkt_report(&p, wi, &rho, 1e-6).unwrap().satisfied);
        }
        assert_eq!(s, sample_solutions(&d, 100, 7));
        assert!(s.iter().any(|wi| (wi.w[0] - 0.75).abs() > 1e-3));
    }

    #[test]
    fn singleton_set_repeats_the_solution() {
        let x = DMatrix::<f64>::identity(2, 2);
        let y = DVector::from_vec(vec![3.0, -2.0]);
        let p = CglProblem::unconstrained(x, y, BlockPartition::singletons(2), 1.0).unwrap();
        let w = Weights::new(DVector::from_vec(vec![2.0, -1.0]));
        let d = describe_set(&p, &w, &DualCertificate::zeros(&p)).unwrap();
        for wi in sample_solutions(&d, 5, 1) {
            assert!((&wi.w - &w.w).norm() < 1e-12);
        }
    }
}
