//! Throwaway diagnostic; not part of CI.

use lddim_autodiff::{AdamConfig, Tape, Tensor};
use lddim_prior::{diffusion_loss, make_schedule, noise_like, sample_latent, UNet, UNetConfig};

#[test]
#[ignore]
fn ddim_recovers_gaussian_stats() {
    let cfg = UNetConfig {
        latent_channels: 4,
        latent_h: 8,
        latent_w: 8,
        base_channels: 12,
    };
    let sched = make_schedule(1000).unwrap();
    let mut rng = lddim_autodiff::rng::stream(1, "toy");
    let data: Vec<Tensor> = (0..256)
        .map(|_| {
            let z = noise_like(&[1, 4, 8, 8], &mut rng);
            let d = z.data().iter().map(|v| -0.5 + 0.8 * v).collect();
            Tensor::new(vec![1, 4, 8, 8], d).unwrap()
        })
        .collect();
    let mut unet = UNet::new(cfg, 7).unwrap();
    let adam = AdamConfig::default();
    for epoch in 0..120 {
        let mut tot = 0.0;
        for chunk in data.chunks(16) {
            let tape = Tape::new();
            let bound = unet.params.bind(&tape);
            let loss = diffusion_loss(&tape, chunk, &sched, &mut rng, |z, t| {
                unet.predict(z, t, &bound)
            })
            .unwrap();
            tot += loss.value().data()[0];
            let grads = tape.backward(&loss).unwrap();
            let g = unet.params.collect_grads(&grads, &bound);
            unet.params.adam_step(&g, &adam).unwrap();
        }
        if epoch % 20 == 0 {
            println!("epoch {epoch} loss {:.3}", tot / 16.0);
        }
    }
    let mut all = Vec::new();
    for _ in 0..64 {
        let z = noise_like(&[1, 4, 8, 8], &mut rng);
        let tape = Tape::new();
        let up = unet.params.bind(&tape);
        let z0 = sample_latent(&tape.leaf(z), &unet, &up, &sched, 50).unwrap();
        all.extend(z0.value().data().to_vec());
    }
    let m = all.iter().sum::<f64>() / all.len() as f64;
    let v = all.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / all.len() as f64;
    println!("sampled mean {m:.4} std {:.4} (target -0.5 / 0.8)", v.sqrt());
}
