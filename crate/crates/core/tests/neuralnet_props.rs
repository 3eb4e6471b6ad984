use lexpost::neuralnet::{gradient_check, train_epochs, Activation, Hyperparams, Network, TrainingExample};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_input(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(-2.0..2.0) }).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn softmax_output_is_a_distribution(seed in any::<u64>(), inputs in 1usize..20, hidden in 1usize..12, outputs in 1usize..8) {
        let net = Network::new(inputs, &[hidden], outputs, Activation::Sigmoid, seed).unwrap();
        let x = random_input(&mut ChaCha8Rng::seed_from_u64(seed), inputs);
        let y = net.forward(&x).unwrap();
        prop_assert_eq!(y.len(), outputs);
        prop_assert!(y.iter().all(|&p| (0.0..=1.0).contains(&p)));
        prop_assert!((y.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn positive_logit_scaling_keeps_prediction(seed in any::<u64>(), scale in 0.01f64..50.0) {
        let mut net = Network::new(6, &[5], 4, Activation::Relu, seed).unwrap();
        let x = random_input(&mut ChaCha8Rng::seed_from_u64(seed ^ 1), 6);
        let before = net.predict(&x).unwrap();
        let last = net.layers.last_mut().unwrap();
        last.weights.iter_mut().for_each(|w| *w *= scale);
        last.biases.iter_mut().for_each(|b| *b *= scale);
        prop_assert_eq!(net.predict(&x).unwrap(), before);
    }

    #[test]
    fn gradient_check_passes(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = Network::new(5, &[4, 3], 3, Activation::Sigmoid, seed).unwrap();
        let ex = TrainingExample { input: random_input(&mut rng, 5), label: rng.gen_range(0..3) };
        prop_assert!(gradient_check(&net, &ex, 1e-5).unwrap() < 1e-5);
    }
}

#[test]
fn training_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let data: Vec<TrainingExample> =
        (0..40).map(|i| TrainingExample { input: random_input(&mut rng, 8), label: i % 3 }).collect();
    let hyper = Hyperparams { epochs: 5, hidden: vec![6], ..Hyperparams::default() };
    let run = || {
        let net = Network::new(8, &hyper.hidden, 3, hyper.activation, hyper.seed).unwrap();
        let (net, curve) = train_epochs(net, &data, &hyper).unwrap();
        (net.to_bytes(), curve)
    };
    assert_eq!(run(), run());
}

#[test]
fn saved_network_reloads() {
    let net = Network::new(4, &[3], 2, Activation::Relu, 9).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.bin");
    net.save(&path).unwrap();
    assert_eq!(Network::load(&path).unwrap(), net);
    std::fs::write(&path, b"LXNNjunk").unwrap();
    assert!(Network::load(&path).is_err());
}
