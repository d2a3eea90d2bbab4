use proptest::prelude::*;
use pumpdown::io::{generate_synthetic, SyntheticCorpusSpec};
use pumpdown::physics::{effective_speed, pressure_at, reconstruct_curve, ChamberSpec};

proptest! {
    #[test]
    fn pressure_falls_strictly_while_above_ultimate(
        v in 0.5f64..50.0,
        s in 0.01f64..10.0,
        p0 in 1.0f64..2000.0,
        q_frac in 0.0f64..0.9,
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
    ) {
        let q = q_frac * p0 * s;
        let chamber = ChamberSpec::new(v, q, 0.0).unwrap();
        // stay where the exponential term is still resolvable
        let horizon = 20.0 * v / s;
        let (t1, t2) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(t2 - t1 > 1e-3);
        let p1 = pressure_at(&chamber, p0, s, t1 * horizon).unwrap();
        let p2 = pressure_at(&chamber, p0, s, t2 * horizon).unwrap();
        prop_assert!(p2 < p1, "p({}) = {p1} !> p({}) = {p2}", t1 * horizon, t2 * horizon);
    }

    #[test]
    fn pressure_reaches_ultimate(
        v in 0.5f64..50.0,
        s in 0.01f64..10.0,
        p0 in 1.0f64..2000.0,
        q_frac in 0.0f64..0.9,
    ) {
        let q = q_frac * p0 * s;
        let chamber = ChamberSpec::new(v, 0.3 * q, 0.7 * q).unwrap();
        let p = pressure_at(&chamber, p0, s, 1e6 * v / s).unwrap();
        prop_assert!((p - q / s).abs() < 1e-6 * p0);
    }

    #[test]
    fn reconstruction_stays_positive(
        p0 in 1e-3f64..2000.0,
        dt in 0.01f64..5.0,
        profile in prop::collection::vec(0.0f64..50.0, 1..200),
    ) {
        let chamber = ChamberSpec::sealed(0.5).unwrap();
        let curve = reconstruct_curve("c", &chamber, p0, &profile, dt).unwrap();
        prop_assert!(curve.pressures_mbar.iter().all(|&p| p > 0.0));
        prop_assert!(curve.pressures_mbar.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn speed_inverts_pressure(
        v in 0.5f64..50.0,
        s in 0.01f64..10.0,
        p0 in 1.0f64..2000.0,
        t in 0.1f64..600.0,
    ) {
        // beyond e^-100 the pressure is no longer a normal float worth inverting
        prop_assume!(t * s / v < 100.0);
        let chamber = ChamberSpec::sealed(v).unwrap();
        let p = pressure_at(&chamber, p0, s, t).unwrap();
        prop_assume!(p < p0);
        let back = effective_speed(&chamber, p0, p, t).unwrap();
        prop_assert!(((back - s) / s).abs() < 1e-9);
    }
}

#[test]
fn reconstruct_from_extracted_speeds_is_identity() {
    let spec = SyntheticCorpusSpec {
        n_events: 25,
        noise_rel: 0.0,
        seed: 11,
        ..Default::default()
    };
    let gt = generate_synthetic(&spec).unwrap();
    for curve in &gt.curves {
        let speeds: Vec<f64> = curve
            .times_s
            .windows(2)
            .zip(curve.pressures_mbar.windows(2))
            .map(|(t, p)| effective_speed(&curve.chamber, p[0], p[1], t[1] - t[0]).unwrap())
            .collect();
        let dt = curve.times_s[1] - curve.times_s[0];
        let back = reconstruct_curve("r", &curve.chamber, curve.initial_pressure(), &speeds, dt).unwrap();
        for (a, b) in back.pressures_mbar.iter().zip(&curve.pressures_mbar) {
            assert!(((a - b) / b).abs() < 1e-9, "{a} vs {b}");
        }
    }
}
