use proptest::prelude::*;

use heavytail::backtest::{arima_residuals, kupiec_test, percentile_ranks, return_level_transform, ArimaCoeffs};
use heavytail::mc_study::{abias_rmse, Estimator};
use heavytail::*;

fn positive_series() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-3f64..1e6, 10..400)
}

fn kernel() -> impl Strategy<Value = Kernel> {
    prop_oneof![
        (0.0f64..4.0).prop_map(|nu| Kernel::power(nu).unwrap()),
        (0.0f64..4.0).prop_map(|nu| Kernel::log_weight(nu).unwrap()),
        (-3.0f64..-0.05).prop_map(|r| Kernel::second_order(r).unwrap()),
        (-3.0f64..-0.05).prop_map(|r| Kernel::optimal_mixture(r).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hill_is_the_constant_kernel(xs in positive_series(), frac in 0.01f64..0.99) {
        let k = ((xs.len() as f64 * frac) as usize).clamp(1, xs.len() - 1);
        let s = build_tail_sample(&xs, k).unwrap();
        let a = gamma_kernel(&s, &Kernel::HILL).unwrap().gamma_hat;
        let b = hill(&s).gamma_hat;
        prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300));
    }

    #[test]
    fn weights_sum_to_kernel_at_one(kern in kernel(), k in 1usize..600) {
        let s: f64 = kern.weights(k).unwrap().iter().sum();
        let k1 = kern.eval(1.0).unwrap();
        prop_assert!((s - k1).abs() <= 1e-12 * k1.abs().max(1.0));
    }

    #[test]
    fn mixture_linearity(xs in positive_series(), rho in -3.0f64..-0.05) {
        let k = xs.len() / 2;
        let s = build_tail_sample(&xs, k).unwrap();
        let direct = gamma_optimal_unbiased(&s, rho).unwrap().gamma_hat;
        let d = mixture_weight(rho);
        let k2 = gamma_kernel(&s, &Kernel::second_order(rho).unwrap()).unwrap().gamma_hat;
        let mix = d * hill(&s).gamma_hat + (1.0 - d) * k2;
        prop_assert!((direct - mix).abs() <= 1e-12 * (d.abs() + 1.0) * mix.abs().max(1.0));
    }

    #[test]
    fn scale_equivariance(xs in positive_series(), c in 1e-3f64..1e3, rho in -2.0f64..-0.2) {
        let k = (xs.len() / 3).max(2);
        let p = 0.5 * k as f64 / xs.len() as f64 / 10.0;
        let ys: Vec<f64> = xs.iter().map(|x| x * c).collect();
        let (a, b) = (build_tail_sample(&xs, k).unwrap(), build_tail_sample(&ys, k).unwrap());
        let ga = gamma_optimal_unbiased(&a, rho).unwrap().gamma_hat;
        let gb = gamma_optimal_unbiased(&b, rho).unwrap().gamma_hat;
        prop_assert!((ga - gb).abs() <= 1e-9 * ga.abs().max(1.0));
        for est in Estimator::ALL {
            if let (Ok(qa), Ok(qb)) = (est.quantile(&a, p, rho), est.quantile(&b, p, rho)) {
                prop_assert!((qb.x_hat - c * qa.x_hat).abs() <= 1e-10 * (c * qa.x_hat).abs().max(1e-300));
            }
        }
    }

    #[test]
    fn valid_rho_hat_is_negative(s in 0.5f64..0.9) {
        if let Some(r) = rho_from_s(s) {
            prop_assert!(r < 0.0);
            prop_assert!(s > 2.0 / 3.0 && s < 0.75);
        }
    }

    #[test]
    fn covariance_symmetric_monotone(
        theta in 0.01f64..0.99, gamma in 0.2f64..3.0,
        x in 0.0f64..1.2, y in 0.0f64..1.2, dy in 0.0f64..0.3, ar in any::<bool>()
    ) {
        let m = if ar { Dependence::Ar1 { theta } } else { Dependence::Ma1 { theta } };
        let rxy = covariance_r(m, gamma, x, y).unwrap();
        prop_assert!((rxy - covariance_r(m, gamma, y, x).unwrap()).abs() <= 1e-12 * rxy.max(1.0));
        prop_assert!(covariance_r(m, gamma, x, y + dy).unwrap() >= rxy - 1e-12);
    }

    #[test]
    fn variance_ordering(theta in 0.01f64..0.99, gamma in 0.2f64..3.0, rho in -3.0f64..-0.1, ar in any::<bool>()) {
        let m = if ar { Dependence::Ar1 { theta } } else { Dependence::Ma1 { theta } };
        let v = av_dependent_optimal(m, gamma, rho).unwrap();
        prop_assert!(v.optimal <= v.competitor * (1.0 + 1e-12));
    }

    #[test]
    fn kupiec_bounds(n in 1usize..5000, frac in 0.0f64..1.0, p in 0.001f64..0.5) {
        let x = (n as f64 * frac) as usize;
        let k = kupiec_test(n, x, p).unwrap();
        prop_assert!(k.lr >= 0.0);
        prop_assert!((0.0..=1.0).contains(&k.pvalue));
    }

    #[test]
    fn arima_inverts(xs in prop::collection::vec(-100.0f64..100.0, 3..200), phi in -1.5f64..1.5, theta in -1.5f64..1.5) {
        let c = ArimaCoeffs { phi1: phi, theta1: theta };
        let e = arima_residuals(&xs, c).unwrap();
        prop_assert_eq!(e.len(), xs.len() - 2);
        for j in 0..e.len() {
            let e_prev = if j == 0 { 0.0 } else { e[j - 1] };
            let back = return_level_transform(e[j], e_prev, xs[j + 1], xs[j], c);
            let scale = xs[j + 2].abs().max(e[j].abs()).max(1.0);
            prop_assert!((back - xs[j + 2]).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn percentile_ranks_ordered(b in 2usize..5000, level in 0.5f64..0.999) {
        let (lo, hi) = percentile_ranks(b, level);
        prop_assert!(1 <= lo && lo <= hi && hi <= b);
    }

    #[test]
    fn rmse_dominates_abias(ratios in prop::collection::vec(0.0f64..5.0, 1..300)) {
        let (a, r) = abias_rmse(&ratios).unwrap();
        prop_assert!(r >= a && a >= 0.0);
    }
}
