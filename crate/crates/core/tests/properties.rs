use proptest::prelude::*;

use sfqsim::network::{LayerConfig, LayerSim, SynapseMatrix};
use sfqsim::neuron::{tau_transition, Control, CycleStep, NeuronConfig, NeuronSim, TauSignal, TauState};
use sfqsim::SimTime;

fn layer(weights: Vec<Vec<u32>>, group: bool) -> LayerSim {
    let mut c = LayerConfig::new(NeuronConfig::new(4), SynapseMatrix::new(weights).unwrap());
    c.group_wired = group;
    LayerSim::new(c).unwrap()
}

fn weights(max_neurons: usize, max_fan_in: usize) -> impl Strategy<Value = Vec<Vec<u32>>> {
    (1..=max_neurons, 1..=max_fan_in).prop_flat_map(|(m, k)| prop::collection::vec(prop::collection::vec(0u32..=3, k), m))
}

fn control() -> impl Strategy<Value = Control> {
    prop_oneof![Just(Control::Increment), Just(Control::Decrement)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lowering_threshold_never_reduces_fires(
        w in weights(3, 3),
        samples in prop::collection::vec(prop::collection::vec(0u32..=3, 3), 1..4),
        t_hi in 1u32..=4,
        drop in 0u32..=3,
    ) {
        let t_lo = t_hi.saturating_sub(drop).max(1);
        let k = w[0].len();
        let mut hi = layer(w.clone(), true);
        let mut lo = layer(w, true);
        hi.set_layer_threshold(t_hi).unwrap();
        lo.set_layer_threshold(t_lo).unwrap();
        for x in &samples {
            let a = hi.forward(&x[..k]).unwrap();
            let b = lo.forward(&x[..k]).unwrap();
            for (h, l) in a.iter().zip(&b) {
                prop_assert!(l >= h);
            }
        }
    }

    #[test]
    fn group_members_always_agree(n in 1usize..=4, deltas in prop::collection::vec(-4i64..=4, 1..6)) {
        let mut l = layer(vec![vec![1]; n], true);
        for d in deltas {
            let before = l.thresholds();
            let cycles = l.cycles_run();
            match l.adjust_layer_threshold(d) {
                Ok(()) => prop_assert_eq!(l.thresholds(), vec![(i64::from(before[0]) - d) as u32; n]),
                Err(_) => {
                    prop_assert_eq!(l.thresholds(), before);
                    prop_assert_eq!(l.cycles_run(), cycles);
                }
            }
            let t = l.thresholds();
            prop_assert!(t.iter().all(|&v| v == t[0]));
        }
    }

    #[test]
    fn weighted_sum_decides_fire(w in weights(4, 4), x in prop::collection::vec(0u32..=3, 4), t in 1u32..=4) {
        let k = w[0].len();
        let mut l = layer(w.clone(), true);
        l.set_layer_threshold(t).unwrap();
        let counts = l.forward(&x[..k]).unwrap();
        for (row, c) in w.iter().zip(counts) {
            let s: u32 = row.iter().zip(&x).map(|(a, b)| a * b).sum();
            prop_assert_eq!(c > 0, s >= t);
            prop_assert_eq!(c, (4 - t + s) / 4);
        }
    }

    #[test]
    fn dead_neuron_can_be_revived(w in prop::collection::vec(0u32..=1, 1..=3)) {
        let max_input = w.iter().sum::<u32>() * 3;
        prop_assume!(max_input > 0 && max_input < 4);
        let k = w.len();
        let mut l = layer(vec![w], true);
        let full = vec![3; k];
        prop_assert_eq!(l.forward(&full).unwrap(), vec![0]);
        l.adjust_layer_threshold(i64::from(4 - max_input)).unwrap();
        prop_assert_eq!(l.thresholds(), vec![max_input]);
        prop_assert!(l.forward(&full).unwrap()[0] > 0);
    }

    #[test]
    fn neuron_tracks_tau_model(
        t_max in prop::sample::select(vec![2u32, 4, 6, 8]),
        steps in prop::collection::vec((prop::collection::vec(control(), 0..=3), 0u32..=12), 1..8),
    ) {
        let config = NeuronConfig::new(t_max).with_period(SimTime::from_ps(1500));
        let mut sim = NeuronSim::new(config).unwrap();
        let mut tau = TauState::IDLE;
        for (controls, n) in steps {
            for c in &controls {
                let s = match c {
                    Control::Increment => TauSignal::Increment,
                    Control::Decrement => TauSignal::Decrement,
                };
                tau = tau_transition(tau, s, 3).0;
            }
            let (_, load) = tau_transition(tau, TauSignal::Clock, 3);
            let got = sim.run_cycle(&CycleStep { controls, inputs: n }).unwrap();
            prop_assert_eq!(got, (load + n) / t_max);
            prop_assert_eq!(sim.tau_state(), tau);
        }
    }

    #[test]
    fn repeated_runs_are_identical(steps in prop::collection::vec((0usize..=2, 0u32..=8), 1..6)) {
        let run = || {
            let mut sim = NeuronSim::new(NeuronConfig::new(4)).unwrap();
            for &(incr, n) in &steps {
                sim.run_cycle(&CycleStep::inputs(n).with_controls(Control::Increment, incr)).unwrap();
            }
            sim.simulator().trace().to_csv()
        };
        prop_assert_eq!(run(), run());
    }
}
