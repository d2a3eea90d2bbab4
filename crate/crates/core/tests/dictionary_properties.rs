use proptest::prelude::*;
use pumpdown::decomposition::{extract_speed_vector, learn_dictionary, SpeedVector};
use pumpdown::physics::{reconstruct_curve, ChamberSpec};

/// Vectors drawn from a few random directions, so some are exact repeats or
/// mixtures of others.
fn corpus() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..5, 1usize..15).prop_flat_map(|(rank, n)| {
        let dims = 8;
        (
            prop::collection::vec(prop::collection::vec(0.0f64..2.0, dims), rank),
            prop::collection::vec(prop::collection::vec(0.0f64..1.0, rank), n),
            prop::collection::vec(prop::collection::vec(0.0f64..1e-2, dims), n),
        )
            .prop_map(|(dirs, mixes, noise)| {
                mixes
                    .iter()
                    .zip(&noise)
                    .map(|(w, e)| {
                        (0..dirs[0].len())
                            .map(|j| e[j] + dirs.iter().zip(w).map(|(d, w)| w * d[j]).sum::<f64>())
                            .collect()
                    })
                    .collect()
            })
    })
}

fn speeds(raw: &[Vec<f64>]) -> Vec<SpeedVector> {
    raw.iter().map(|v| SpeedVector::new(v.clone()).unwrap()).collect()
}

proptest! {
    #[test]
    fn learning_terminates_and_covers(raw in corpus(), eps in 1e-4f64..0.5) {
        let s = speeds(&raw);
        let d = learn_dictionary(&s, eps).unwrap();
        prop_assert!(d.atom_count() >= 1 && d.atom_count() <= s.len());
        prop_assert!(d.max_residual_history.len() <= s.len() + 1);
        prop_assert!(d.max_residual_history.windows(2).all(|w| w[1] <= w[0]));
        let largest = s.iter().map(SpeedVector::norm).fold(0.0, f64::max);
        let bound = eps.max(1e-11 * largest) + 1e-12 * largest;
        for v in &s {
            let r = d.residual_norm(&v.values).unwrap();
            prop_assert!(r <= bound, "residual {r} > {bound}");
        }
        let first = s.iter().map(SpeedVector::norm).fold(0.0, f64::max);
        prop_assert_eq!(d.atoms[0].norm(), first);
    }

    #[test]
    fn learning_on_atoms_is_idempotent(raw in corpus(), eps in 1e-4f64..0.5) {
        let d = learn_dictionary(&speeds(&raw), eps).unwrap();
        let again = learn_dictionary(&d.atoms, eps).unwrap();
        prop_assert_eq!(again.atoms, d.atoms);
    }
}

#[test]
fn speed_vector_ignores_sampling_cadence() {
    // linear speed profile sampled every 1 s and every 0.5 s over 300 s
    let chamber = ChamberSpec::sealed(10.0).unwrap();
    let speed = |t: f64| 0.25 - 0.0005 * t;
    let curve = |dt: f64| {
        let steps = (300.0 / dt) as usize;
        let profile: Vec<f64> = (0..steps).map(|k| speed((k as f64 + 0.5) * dt)).collect();
        reconstruct_curve("lin", &chamber, 1000.0, &profile, dt).unwrap()
    };
    let a = extract_speed_vector(&curve(1.0), 500).unwrap();
    let b = extract_speed_vector(&curve(0.5), 500).unwrap();
    for (j, (x, y)) in a.values.iter().zip(&b.values).enumerate() {
        assert!((x - y).abs() < 1e-6, "grid point {j}: {x} vs {y}");
    }
}
