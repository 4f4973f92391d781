use pcqm::estimators::{nbd_log_likelihood, nbd_mle_censored, DistanceSample};
use pcqm::model::NbdModel;
use pcqm::simulate::sample_nbd_distances;

fn quantile(model: &NbdModel<f64>, p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1e4);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if model.cdf(mid).unwrap() < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn censored_nbd_mle_recovers_parameters() {
    let model = NbdModel::new(0.05, 2.0, 4, 1).unwrap();
    let c = quantile(&model, 0.8);
    let draws = sample_nbd_distances(&model, 100_000, 2024);
    let s = DistanceSample::from_distances(&draws, 4, 1, c).unwrap();
    assert!((s.p0() - 0.2).abs() < 0.01);

    let est = nbd_mle_censored(&s).unwrap();
    let k = est.k_hat.unwrap();
    assert!((est.lambda_hat / 0.05 - 1.0).abs() < 0.03, "lambda_hat = {}", est.lambda_hat);
    assert!((k / 2.0 - 1.0).abs() < 0.08, "k_hat = {k}");

    let ll = |x: f64, y: f64| nbd_log_likelihood(&s, x.exp(), y.exp()).unwrap();
    let (x, y) = (est.lambda_hat.ln(), k.ln());
    let h = 1e-5;
    let gx = (ll(x + h, y) - ll(x - h, y)) / (2.0 * h);
    let gy = (ll(x, y + h) - ll(x, y - h)) / (2.0 * h);
    let norm = gx.hypot(gy);
    assert!(norm <= 1e-4, "gradient norm {norm}");
}
