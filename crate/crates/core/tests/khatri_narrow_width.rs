//! When `m < d` the Khatri-Rao rank can fall below
//! `min{md, n, C(k+d, k+1)}`. For `k = 1` the columns are
//! `(I (x) A)(b_j (x) b_j)`, and `S -> S A^T` on symmetric `S` kills `u u^T`
//! for `A u = 0`. These tests pin that gap with an explicit kernel vector.

use genrank::combinat::SupportFilter;
use genrank::decomp::{target_khatri_poly, target_khatri_power};
use genrank::generic_rank::{predicted_rank, sample_generic_pair, RankLaw, SampledPair};
use genrank::linalg::{rank_exact, Matrix, Rational, Scalar};
use genrank::Sampler;

fn exact_pair(m: usize, n: usize, d: usize, seed: u64) -> (Matrix<Rational>, Matrix<Rational>) {
    match sample_generic_pair(m, n, d, Sampler::Integer(1_000_000), seed).unwrap() {
        SampledPair::Exact(a, b) => (a, b),
        SampledPair::Float(..) => unreachable!(),
    }
}

/// Null vector of a 2x3 matrix: the cross product of its rows.
fn null_vector(a: &Matrix<Rational>) -> [Rational; 3] {
    let r = |i: usize, j: usize| a.get(i, j).clone();
    [
        r(0, 1) * r(1, 2) - r(0, 2) * r(1, 1),
        r(0, 2) * r(1, 0) - r(0, 0) * r(1, 2),
        r(0, 0) * r(1, 1) - r(0, 1) * r(1, 0),
    ]
}

#[test]
fn power_law_overstates_rank_for_d3_m2() {
    let law = RankLaw::KhatriPower { d: 3, k: 1 };
    assert_eq!(predicted_rank(&law, 2, 8).unwrap(), 6);
    for seed in 0..20 {
        let (a, b) = exact_pair(2, 8, 3, seed);
        let t = target_khatri_power(&a, &b, 1).unwrap();
        assert_eq!(rank_exact(&t).rank, 5, "seed {seed}");

        let u = null_vector(&a);
        assert!((0..2).all(|i| (0..3).fold(Rational::from_i64(0), |s, l| s + a.get(i, l).clone() * u[l].clone()) == Rational::from_i64(0)));
        // (I (x) A) vec(u u^T) = 0
        for l in 0..3 {
            for i in 0..2 {
                let v = (0..3).fold(Rational::from_i64(0), |s, t| s + u[l].clone() * u[t].clone() * a.get(i, t).clone());
                assert!(v == Rational::from_i64(0));
            }
        }
    }
}

#[test]
fn poly_law_overstates_rank_for_d3_m3() {
    let c = SupportFilter::from_i64(&[1, 1]);
    let law = RankLaw::KhatriPoly { d: 3, coeffs: c.clone() };
    assert_eq!(predicted_rank(&law, 3, 10).unwrap(), 9);
    for seed in 0..20 {
        let (a, b) = exact_pair(3, 10, 3, seed);
        let t = target_khatri_poly(&a, &b, &c).unwrap();
        assert_eq!(rank_exact(&t).rank, 8, "seed {seed}");
    }
}

#[test]
fn law_holds_once_width_reaches_dimension() {
    for (d, k, m) in [(3, 1, 3), (3, 2, 2), (2, 1, 2), (3, 1, 4)] {
        let law = RankLaw::KhatriPower { d, k };
        let n = 12;
        let want = predicted_rank(&law, m, n).unwrap();
        for seed in 0..10 {
            let (a, b) = exact_pair(m, n, d, seed);
            let t = target_khatri_power(&a, &b, k as u32).unwrap();
            assert_eq!(rank_exact(&t).rank, want, "d={d} k={k} m={m} seed {seed}");
        }
    }
}
