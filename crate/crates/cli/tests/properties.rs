use layersolve::Branch;
use layersolve_cli::config::{parse_pairs, Pair};
use layersolve_cli::fit_exponent;
use layersolve_cli::sweep::spread;
use proptest::prelude::*;

proptest! {
    #[test]
    fn fit_recovers_power_laws(slope in -2.0f64..2.0, c in 1e-3f64..1e3, start in 0.0f64..4.0, n in 4usize..12) {
        let pts: Vec<(f64, f64)> = (0..n).map(|i| {
            let a = 10f64.powf(start + 0.5 * i as f64);
            (a, c * a.powf(slope))
        }).collect();
        let f = fit_exponent(&pts).unwrap();
        prop_assert!((f.slope - slope).abs() < 1e-9);
        prop_assert!((f.constant() / c - 1.0).abs() < 1e-8);
        prop_assert!(f.r_squared > 1.0 - 1e-9);
    }

    #[test]
    fn fit_r_squared_in_unit_interval(values in prop::collection::vec(1e-3f64..1e3, 4..10)) {
        let pts: Vec<(f64, f64)> = values.iter().enumerate().map(|(i, &v)| (10f64.powi(i as i32 + 1), v)).collect();
        let f = fit_exponent(&pts).unwrap();
        prop_assert!((0.0..=1.0).contains(&f.r_squared));
    }

    #[test]
    fn spread_is_scale_invariant(values in prop::collection::vec(1e-3f64..1e3, 1..10), scale in 1e-3f64..1e3) {
        let scaled: Vec<f64> = values.iter().map(|v| v * scale).collect();
        let (a, b) = (spread(&values), spread(&scaled));
        prop_assert!(a >= 1.0);
        prop_assert!((a / b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pair_labels_round_trip(left in any::<bool>(), right in any::<bool>()) {
        let b = |p: bool| if p { Branch::Plus } else { Branch::Minus };
        let pair = Pair(b(left), b(right));
        prop_assert_eq!(pair.to_string().parse::<Pair>().unwrap(), pair);
        prop_assert_eq!(parse_pairs(&pair.to_string().to_lowercase()).unwrap(), vec![pair]);
        prop_assert_eq!(pair.mirrored().mirrored(), pair);
    }
}
