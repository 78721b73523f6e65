use proptest::prelude::*;
use rotsmooth::homog_dist::{pair_qinv, pair_xplus, RadialTestFunction, TestFunction};
use rotsmooth::rotations::{sample_haar, HaarSampler, Rotation};
use rotsmooth::smoothing::multiplier;
use rotsmooth::sphere::{restrict_symbol, ChartAtlas, PartitionOfUnity};
use rotsmooth::symbols::HomogeneousSymbol;
use rotsmooth::C64;

fn builtin() -> Vec<HomogeneousSymbol> {
    vec![
        HomogeneousSymbol::riesz(1, 0.25),
        HomogeneousSymbol::riesz(1, 1.0),
        HomogeneousSymbol::riesz(2, 0.5),
        HomogeneousSymbol::riesz(2, 1.75),
        HomogeneousSymbol::cauchy(),
        HomogeneousSymbol::transport(),
    ]
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / r).collect()
}

fn direction(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, dim).prop_filter("away from 0", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-4).prop_map(unit)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symbols_are_homogeneous(idx in 0usize..6, lambda in 0.1f64..10.0, th in direction(2)) {
        let sym = &builtin()[idx];
        let theta = &th[..sym.k];
        let a = sym.eval(&theta.iter().map(|x| lambda * x).collect::<Vec<_>>());
        let b = sym.eval(theta) * lambda.powf(sym.alpha);
        prop_assert!((a - b).norm() <= 1e-12 * b.norm());
    }

    #[test]
    fn quaternion_rotations_are_orthogonal(q in prop::collection::vec(-1.0f64..1.0, 4)) {
        prop_assume!(q.iter().map(|x| x * x).sum::<f64>() > 1e-6);
        let q = unit(q);
        let r = Rotation::from_quaternion([q[0], q[1], q[2], q[3]]);
        prop_assert!(r.orthogonality_defect() < 1e-12);
        prop_assert!((r.det() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn haar_samples_are_rotations(n in 2usize..=3, seed in any::<u64>()) {
        let mut s = HaarSampler::new(n, seed).unwrap();
        for r in sample_haar(&mut s, 256) {
            prop_assert!(r.orthogonality_defect() < 1e-12);
            prop_assert!((r.det() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn partition_sums_to_one(n in 2usize..=3, v in prop::collection::vec(-1.0f64..1.0, 3)) {
        prop_assume!(v[..n].iter().map(|x| x * x).sum::<f64>() > 1e-4);
        let theta = unit(v[..n].to_vec());
        let pou = PartitionOfUnity::new(ChartAtlas::new(n));
        let w = pou.weights(&theta);
        prop_assert!(w.iter().all(|&x| x >= 0.0));
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn multiplier_reduces_to_restriction(
        idx in 0usize..4,
        seed in any::<u64>(),
        xi in direction(3),
        scale in 0.1f64..10.0,
    ) {
        let sym = [
            HomogeneousSymbol::riesz(1, 0.25),
            HomogeneousSymbol::riesz(2, 0.5),
            HomogeneousSymbol::riesz(2, 1.75),
            HomogeneousSymbol::cauchy(),
        ][idx].clone();
        let n = 3;
        let q = sample_haar(&mut HaarSampler::new(n, seed).unwrap(), 1).remove(0);
        let x: Vec<f64> = xi.iter().map(|v| v * scale).collect();
        let theta = q.apply_transpose(&xi);
        prop_assume!(theta[..sym.k].iter().map(|v| v * v).sum::<f64>() > 1e-6);
        let m = multiplier(&sym, &x, &q).unwrap();
        let r = restrict_symbol(&sym, n).unwrap().try_eval(&theta).unwrap();
        prop_assert!((m - r).norm() <= 1e-10 * r.norm());
    }

    #[test]
    fn xplus_recursion(a in -0.95f64..-0.05, center in -1.0f64..1.0, scale in 0.5f64..2.0, c1 in -1.0f64..1.0) {
        let psi = RadialTestFunction { poly: vec![C64::new(1.0, 0.0), C64::new(c1, 0.3)], center, scale };
        let lhs = pair_xplus(a, &psi).unwrap().value;
        let rhs = pair_xplus(a + 1.0, &psi.derivative()).unwrap().value * (-1.0 / (a + 1.0));
        prop_assert!((lhs - rhs).norm() <= 1e-8 * lhs.norm().max(1e-3));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn compliant_pairings_dilate(
        idx in 0usize..4,
        lambda in prop::sample::select(vec![0.25, 0.5, 2.0, 4.0]),
        c0 in -0.5f64..0.5,
        c1 in -0.5f64..0.5,
        scale in 0.8f64..1.5,
    ) {
        let sym = [
            HomogeneousSymbol::riesz(1, 0.25),
            HomogeneousSymbol::riesz(2, 1.5),
            HomogeneousSymbol::cauchy(),
            HomogeneousSymbol::transport(),
        ][idx].clone();
        let center = vec![c0, c1][..sym.k].to_vec();
        let phi = TestFunction::gaussian(center, scale, C64::new(1.0, 0.0));
        let base = pair_qinv(&sym, &phi).unwrap().value;
        let scaled = pair_qinv(&sym, &phi.dilate(lambda)).unwrap().value * lambda.powf(-sym.alpha);
        prop_assert!((base - scaled).norm() <= 1e-6 * base.norm(), "{} λ={lambda}: {base} vs {scaled}", sym.name());
    }
}
