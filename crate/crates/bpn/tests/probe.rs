// temporary diagnostic, deleted before release
use bpn::harness::presets;
use bpn::methods::{train_task, wrong_key_probe, EwcState, PspKeySet};
use bpn::net::{mlp_layers, BiasBank, NetworkState};
use bpn::numerics::rng::{RngStream, StreamDomain};
use bpn::tasks::{gen_clusters, HeadMode};
use bpn::Real;

#[test]
fn probe_per_seed() {
    for (mi, name) in [(1usize, "GD_EWC"), (2usize, "BD_EWC")] {
        for seed in 1..=5u64 {
            let cfg = presets::toy2d("/tmp/probe".into());
            let mcfg = cfg.methods[mi].clone();
            let exp = gen_clusters::<Real>(seed);
            let seq = exp.into_sequence().unwrap();
            let (t1, t2) = (seq.task(0), seq.task(1));

            let mut rng = RngStream::for_domain(seed, StreamDomain::WeightInit, 0, 0);
            let mut net =
                NetworkState::<Real>::init_uniform(mlp_layers(2, &cfg.net.hidden, 2), &mut rng)
                    .unwrap();
            let mut bank = BiasBank::new();
            let mut ewc = EwcState::new(&net, mcfg.lambda.unwrap() as Real);
            let mut keys = PspKeySet::new(seed);

            let out1 = train_task(&mcfg, &mut net, &mut bank, &mut ewc, &mut keys, &t1, HeadMode::MultiHead, seed).unwrap();
            let fmax = ewc
                .fisher()
                .w
                .iter()
                .flat_map(|m| m.data())
                .chain(ewc.fisher().b.iter().flatten())
                .fold(0.0f32, |a, &v| a.max(v));
            train_task(&mcfg, &mut net, &mut bank, &mut ewc, &mut keys, &t2, HeadMode::MultiHead, seed).unwrap();

            let b1 = bank.get(1).unwrap();
            let with_bias = wrong_key_probe(&net, Some(b1), None, &t1, HeadMode::MultiHead).unwrap();
            let plain = wrong_key_probe(&net, None, None, &t1, HeadMode::MultiHead).unwrap();
            let bias_norm: f32 = (0..b1.n_layers())
                .map(|l| b1.layer(l).iter().fold(0.0f32, |a, &v| a.max(v.abs())))
                .fold(0.0, f32::max);
            println!(
                "{name} seed {seed}: t1 loss {:.4} | F_max {fmax:.3e} | bias inf {bias_norm:.3} | after t2: bias {:.3} plain {:.3}",
                out1.epoch_log.last().unwrap().mean_loss,
                with_bias.accuracy,
                plain.accuracy
            );
        }
    }
}
