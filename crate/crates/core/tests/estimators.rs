use pcqm::estimators::*;
use pcqm::model::{CsrModel, NbdModel};
use pcqm::simulate::{sample_csr_distances, sample_nbd_distances};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::rel_err;

fn random_censored_sample(rng: &mut ChaCha8Rng, ell: u32) -> DistanceSample<f64> {
    loop {
        let lambda = 10f64.powf(rng.random_range(-3.0..0.0));
        let n = rng.random_range(5..60);
        let model = CsrModel::new(lambda, 4, ell).unwrap();
        let draws = sample_csr_distances(&model, 4 * n, rng.random());
        let mut sorted = draws.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let c = sorted[rng.random_range(sorted.len() / 4..sorted.len() - 1)];
        let s = DistanceSample::from_distances(&draws, 4, ell, c).unwrap();
        if s.n0() > 0 && s.n0() < s.nq() {
            return s;
        }
    }
}

#[test]
fn warde_petran_equals_censored_cottam_at_first_neighbor() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let s = random_censored_sample(&mut rng, 1);
        let wp = warde_petran(&s).unwrap().lambda_hat;
        let cc = cottam_censored(&s).unwrap().lambda_hat;
        assert!(rel_err(wp, cc) < 1e-10, "{wp} vs {cc} (p0 = {})", s.p0());
    }
}

#[test]
fn censored_estimators_reduce_to_complete_counterparts() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for trial in 0..200 {
        let ell = 1 + trial % 3;
        let k = [0.8, 2.0, 10.0][trial as usize % 3];
        let model = NbdModel::new(0.05, k, 4, ell).unwrap();
        let n = rng.random_range(10..50);
        let draws = sample_nbd_distances(&model, 4 * n, rng.random());
        let max = draws.iter().cloned().fold(0.0, f64::max);
        let finite = DistanceSample::from_distances(&draws, 4, ell, 2.0 * max).unwrap();
        let infinite = DistanceSample::complete(&draws, 4, ell).unwrap();
        let pairs: Vec<(f64, f64)> = vec![
            (cottam_censored(&finite).unwrap().lambda_hat, cottam(&infinite).unwrap().lambda_hat),
            (pollard_censored(&finite).unwrap().lambda_hat, pollard(&infinite).unwrap().lambda_hat),
            (csr_mle_censored(&finite).unwrap().lambda_hat, csr_mle_complete(&infinite).unwrap().lambda_hat),
            (shen_censored(&finite, None).unwrap().lambda_hat, shen(&infinite).unwrap().lambda_hat),
        ];
        for (i, (c, u)) in pairs.into_iter().enumerate() {
            assert!(rel_err(c, u) < 1e-10, "trial {trial} pair {i}: {c} vs {u}");
        }
        if ell == 1 {
            let base = cottam(&infinite).unwrap().lambda_hat;
            assert!(rel_err(warde_petran(&finite).unwrap().lambda_hat, base) < 1e-10);
            assert!(rel_err(dahdouh_koedam(&finite).unwrap().lambda_hat, base) < 1e-10);
        } else {
            let c = morisita_censored(&finite, None).unwrap().lambda_hat;
            assert!(rel_err(c, morisita_m1(&infinite).unwrap().lambda_hat) < 1e-10);
        }
        if trial % 10 == 0 {
            let c = nbd_mle_censored(&infinite).unwrap();
            let u = nbd_mle_complete(&infinite).unwrap();
            assert_eq!(c.lambda_hat, u.lambda_hat);
            assert_eq!(c.k_hat, u.k_hat);
        }
    }
}

#[test]
fn csr_mle_numeric_path_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let s = random_censored_sample(&mut rng, 1);
        let closed = csr_mle_censored(&s).unwrap().lambda_hat;
        let numeric = csr_mle_censored_numeric(&s).unwrap().lambda_hat;
        assert!(rel_err(numeric, closed) < 1e-6, "{numeric} vs {closed}");
    }
}

#[test]
fn csr_mle_maximizes_the_likelihood_for_higher_orders() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for ell in [2, 3] {
        for _ in 0..20 {
            let s = random_censored_sample(&mut rng, ell);
            let lam = csr_mle_censored(&s).unwrap().lambda_hat;
            let ll = csr_log_likelihood(&s, lam).unwrap();
            for f in [0.999, 1.001] {
                assert!(csr_log_likelihood(&s, lam * f).unwrap() < ll);
            }
        }
    }
}

#[test]
fn dispatcher_matches_direct_calls() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s = random_censored_sample(&mut rng, 2);
    for id in EstimatorId::CENSORED_SET {
        let via = estimate(id, &s, None);
        let direct = match id {
            EstimatorId::DahdouhKoedam => dahdouh_koedam(&s),
            EstimatorId::CottamCensored => cottam_censored(&s),
            EstimatorId::PollardCensored => pollard_censored(&s),
            EstimatorId::CsrMleCensored => csr_mle_censored(&s),
            EstimatorId::MorisitaCensored => morisita_censored(&s, None),
            EstimatorId::ShenCensored => shen_censored(&s, None),
            EstimatorId::NbdMleCensored => nbd_mle_censored(&s),
            _ => unreachable!(),
        };
        assert_eq!(via.map(|e| e.lambda_hat), direct.map(|e| e.lambda_hat));
    }
    for id in EstimatorId::ALL {
        assert_eq!(id.name().parse::<EstimatorId>().unwrap(), id);
    }
}

#[test]
fn single_precision_estimators() {
    let d: Vec<f32> = vec![1.0, 2.0, 3.0, 4.0, 1.5, 2.5, 3.5, 4.5];
    let s = pcqm::DistanceSampleF32::complete(&d, 4, 1).unwrap();
    let s64 = DistanceSample::complete(&d.iter().map(|&x| x as f64).collect::<Vec<_>>(), 4, 1).unwrap();
    for id in [EstimatorId::Cottam, EstimatorId::Pollard, EstimatorId::CsrMle] {
        let a = estimate(id, &s, None).unwrap().lambda_hat as f64;
        let b = estimate(id, &s64, None).unwrap().lambda_hat;
        assert!(rel_err(a, b) < 1e-5);
    }
}

fn arb_sample() -> impl Strategy<Value = (Vec<f64>, u32, f64)> {
    (1u32..4, 2usize..20).prop_flat_map(|(ell, n)| {
        (
            proptest::collection::vec(0.05f64..30.0, 4 * n),
            Just(ell),
            5.0f64..40.0,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn estimators_scale_as_inverse_area((d, ell, c) in arb_sample(), factor in 0.1f64..10.0) {
        let s = DistanceSample::from_distances(&d, 4, ell, c).unwrap();
        prop_assume!(s.n0() < s.nq());
        let scaled = s.scaled(factor).unwrap();
        let ids = [
            EstimatorId::CottamCensored,
            EstimatorId::PollardCensored,
            EstimatorId::CsrMleCensored,
            EstimatorId::ShenCensored,
            EstimatorId::MorisitaCensored,
        ];
        for id in ids {
            match (estimate(id, &s, None), estimate(id, &scaled, None)) {
                (Ok(a), Ok(b)) => {
                    let expect = a.lambda_hat / (factor * factor);
                    prop_assert!(rel_err(b.lambda_hat, expect) < 1e-6, "{}: {} vs {}", id, b.lambda_hat, expect);
                }
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "{} disagreed: {:?} / {:?}", id, a, b),
            }
        }
    }

    #[test]
    fn zeroth_moment_is_one((d, ell, c) in arb_sample(), lambda in 0.001f64..1.0) {
        let s = DistanceSample::from_distances(&d, 4, ell, c).unwrap();
        prop_assert_eq!(adjusted_moment_poisson(&s, 0.0).unwrap().value, 1.0);
        prop_assert_eq!(adjusted_moment_nbd(&s, 0.0, lambda).unwrap().value, 1.0);
    }

    #[test]
    fn uncensored_adjustment_is_the_sample_moment(d in proptest::collection::vec(0.05f64..30.0, 8..40), u in -2.0f64..3.0) {
        let d = &d[..d.len() / 4 * 4];
        let s = DistanceSample::from_distances(d, 4, 1, 100.0).unwrap();
        let m = adjusted_moment_poisson(&s, u).unwrap().value;
        let direct = d.iter().map(|r| r.powf(u)).sum::<f64>() / d.len() as f64;
        prop_assert!(rel_err(m, direct) < 1e-12);
    }

    #[test]
    fn csr_mle_is_positive_whenever_something_is_observed((d, ell, c) in arb_sample()) {
        let s = DistanceSample::from_distances(&d, 4, ell, c).unwrap();
        prop_assume!(s.n0() < s.nq());
        let est = csr_mle_censored(&s).unwrap();
        prop_assert!(est.lambda_hat > 0.0 && est.lambda_hat.is_finite());
    }
}
