use proptest::prelude::*;
use trapnoise::analysis::{effective_cutoff_in, expected_min_rate, CutoffRegime};
use trapnoise::charfn::{chi_exponential, chi_uniform_rate};
use trapnoise::dist::{detrap_pdf, detrap_survival, RateModel, TrappingModel};
use trapnoise::exec::stream_rng;
use trapnoise::export::{read_sampled_binary, read_spectrum_csv, write_sampled_binary, write_spectrum_csv};
use trapnoise::sim::{simulate_path, superpose, SampledSignal, SimConfig};
use trapnoise::spectra::{average_spectra, Estimator, SpectrumEstimate};

fn rate_range() -> impl Strategy<Value = (f64, f64)> {
    (-4.0f64..2.0, 0.0f64..6.0).prop_map(|(lo, span)| (10f64.powf(lo), 10f64.powf(lo + span)))
}

fn config(gmin: f64, gmax: f64, horizon: f64, realizations: usize) -> SimConfig {
    SimConfig {
        rate_model: RateModel::uniform(gmin, gmax).unwrap(),
        trapping: TrappingModel::new(1.0).unwrap(),
        amplitude: 1.0,
        horizon,
        carriers: 1,
        realizations,
        dt: None,
        seed: 0,
    }
}

proptest! {
    #[test]
    fn char_fn_is_bounded_and_causal((gmin, gmax) in rate_range(), lf in -5.0f64..5.0) {
        let f = 10f64.powf(lf);
        let c = chi_uniform_rate(f, gmin, gmax);
        prop_assert!(c.norm() <= 1.0 + 1e-12);
        prop_assert!(c.im >= 0.0);
        prop_assert_eq!(chi_uniform_rate(0.0, gmin, gmax).re, 1.0);
        let e = chi_exponential(f, gmax);
        prop_assert!(e.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn density_and_survival_are_proper((gmin, gmax) in rate_range(), lt in -8.0f64..6.0) {
        let m = RateModel::uniform(gmin, gmax).unwrap();
        let t = 10f64.powf(lt);
        let p = detrap_pdf(t, &m).unwrap();
        let s = detrap_survival(t, &m).unwrap();
        let s2 = detrap_survival(t * 1.1, &m).unwrap();
        prop_assert!(p >= 0.0 && p.is_finite());
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert!(s2 <= s);
    }

    #[test]
    fn expected_min_falls_with_count((gmin, gmax) in rate_range(), k in 1u64..1_000_000) {
        let a = expected_min_rate(gmin, gmax, k).unwrap();
        let b = expected_min_rate(gmin, gmax, k + 1).unwrap();
        prop_assert!(b <= a && b >= gmin);
    }

    #[test]
    fn cutoff_is_nonincreasing_in_time_and_repeats(
        (gmin, gmax) in rate_range(),
        lt in 1.0f64..8.0,
        r in 1usize..10_000,
    ) {
        let t = 10f64.powf(lt);
        for regime in CutoffRegime::ALL {
            let base = effective_cutoff_in(&config(gmin, gmax, t, r), regime);
            let longer = effective_cutoff_in(&config(gmin, gmax, 2.0 * t, r), regime);
            let more = effective_cutoff_in(&config(gmin, gmax, t, 2 * r), regime);
            if let (Ok(b), Ok(l), Ok(m)) = (base, longer, more) {
                prop_assert!(l.gamma_min_eff <= b.gamma_min_eff * (1.0 + 1e-12), "{regime:?} T");
                prop_assert!(m.gamma_min_eff <= b.gamma_min_eff * (1.0 + 1e-12), "{regime:?} R");
                prop_assert!(b.gamma_min_eff >= gmin && b.gamma_min_eff >= 1.0 / t);
            }
        }
    }

    #[test]
    fn paths_tile_the_horizon(seed in any::<u64>(), lt in 0.0f64..3.0) {
        let horizon = 10f64.powf(lt);
        let m = RateModel::uniform(0.0, 50.0).unwrap();
        let p = simulate_path(&m, &TrappingModel::new(2.0).unwrap(), horizon, &mut stream_rng(seed, 0, 0));
        let total: f64 = p.durations().iter().sum();
        prop_assert!((total - horizon).abs() <= 1e-9 * horizon);
        prop_assert!(p.durations().iter().all(|&d| d > 0.0));
        let free = p.free_fraction();
        prop_assert!((0.0..=1.0).contains(&free));
        let s = superpose(std::slice::from_ref(&p), 1.0, horizon / 64.0).unwrap();
        prop_assert!(s.counts.iter().all(|&c| c <= 1));
    }

    #[test]
    fn sampled_binary_round_trips(counts in prop::collection::vec(any::<u32>(), 0..200), dt in 1e-9f64..1e3, seed in any::<u64>()) {
        let s = SampledSignal { dt, counts, carriers: 7, amplitude: 0.5 };
        let mut buf = Vec::new();
        write_sampled_binary(&mut buf, &s, seed).unwrap();
        let (back, seed_back) = read_sampled_binary(&buf[..]).unwrap();
        prop_assert_eq!(back, s);
        prop_assert_eq!(seed_back, seed);
    }

    #[test]
    fn spectrum_csv_round_trips(values in prop::collection::vec(0.0f64..1e30, 1..50), r in 1usize..1000) {
        let freqs: Vec<f64> = (1..=values.len()).map(|k| k as f64 / 7.0).collect();
        let est = SpectrumEstimate { freqs, values, realizations: r, estimator: Estimator::EventExact, horizon: 7.0, config: None };
        let mut buf = Vec::new();
        write_spectrum_csv(&mut buf, &est).unwrap();
        prop_assert_eq!(read_spectrum_csv(&buf[..]).unwrap(), est);
    }

    #[test]
    fn averaging_is_associative(a in prop::collection::vec(0.0f64..10.0, 5), b in prop::collection::vec(0.0f64..10.0, 5), c in prop::collection::vec(0.0f64..10.0, 5), ra in 1usize..5, rb in 1usize..5, rc in 1usize..5) {
        let freqs = vec![0.1, 0.2, 0.3, 0.4, 0.5];
        let mk = |v: &Vec<f64>, r| SpectrumEstimate { freqs: freqs.clone(), values: v.clone(), realizations: r, estimator: Estimator::EventExact, horizon: 10.0, config: None };
        let (x, y, z) = (mk(&a, ra), mk(&b, rb), mk(&c, rc));
        let left = average_spectra(&[average_spectra(&[x.clone(), y.clone()]).unwrap(), z.clone()]).unwrap();
        let flat = average_spectra(&[x, y, z]).unwrap();
        prop_assert_eq!(left.realizations, flat.realizations);
        for (l, f) in left.values.iter().zip(&flat.values) {
            prop_assert!((l - f).abs() <= 1e-12 * f.abs().max(1.0));
        }
    }
}
