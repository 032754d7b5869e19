use meanclt::bounds::{rate_fit, three_moment};
use meanclt::processes::transfer;
use meanclt::wasserstein::{w1_sample_gauss, w1_sample_sample};
use meanclt::{Fourier, ProcessSpec, Sample};
use proptest::prelude::*;

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 1..5)
}

fn sample() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, 1..60)
}

proptest! {
    #[test]
    fn three_moment_matches(b2 in 0.1f64..10.0, b3 in -10.0f64..10.0) {
        let d = three_moment(b2, b3).unwrap();
        let (m1, m2, m3) = d.moments();
        prop_assert!(m1.abs() < 1e-10);
        prop_assert!((m2 - b2).abs() < 1e-10);
        prop_assert!((m3 - b3).abs() < 1e-10);
        prop_assert!(d.t > 0.0 && d.t < 1.0);
    }

    #[test]
    fn w1_gauss_scales(xs in sample(), sigma in 0.2f64..3.0, c in 0.1f64..10.0) {
        let s = Sample::new(xs).unwrap();
        let a = w1_sample_gauss(&s, sigma).unwrap();
        let b = w1_sample_gauss(&s.scaled(c).unwrap(), c * sigma).unwrap();
        prop_assert!((b - c * a).abs() <= 1e-9 * (1.0 + c * a), "{} {}", b, c * a);
    }

    #[test]
    fn w1_sample_metric(xs in sample(), ys in sample(), zs in sample()) {
        let (x, y, z) = (Sample::new(xs).unwrap(), Sample::new(ys).unwrap(), Sample::new(zs).unwrap());
        let xy = w1_sample_sample(&x, &y);
        prop_assert!((xy - w1_sample_sample(&y, &x)).abs() < 1e-12);
        prop_assert!(w1_sample_sample(&x, &x) == 0.0);
        prop_assert!(xy <= w1_sample_sample(&x, &z) + w1_sample_sample(&z, &y) + 1e-12);
    }

    #[test]
    fn power_law_slope(c in 0.01f64..100.0, gamma in -2.0f64..1.0) {
        let pts: Vec<(f64, f64)> = (4..12).map(|k| {
            let n = (1u64 << k) as f64;
            (n, c * n.powf(gamma))
        }).collect();
        let fit = rate_fit(&pts).unwrap();
        prop_assert!((fit.slope - gamma).abs() < 1e-10);
        prop_assert!((fit.intercept.exp() - c).abs() < 1e-8 * c);
    }

    #[test]
    fn product_is_pointwise(a in coeffs(), b in coeffs(), c in coeffs(), d in coeffs(), x in 0.0f64..1.0) {
        let f = Fourier::new(0.1, a, b);
        let g = Fourier::new(-0.3, c, d);
        let h = f.mul(&g);
        prop_assert!((h.eval(x) - f.eval(x) * g.eval(x)).abs() < 1e-12);
    }

    #[test]
    fn doubling_transfer_is_pointwise(a in coeffs(), b in coeffs(), x in 0.0f64..1.0) {
        let f = Fourier::new(0.0, a, b);
        let kf = transfer(&ProcessSpec::DoublingMap, &f, 1).unwrap();
        let want = 0.5 * (f.eval(x / 2.0) + f.eval((x + 1.0) / 2.0));
        prop_assert!((kf.eval(x) - want).abs() < 1e-12);
    }
}
