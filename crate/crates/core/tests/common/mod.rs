use netputsim_core::netput::Exogenous;
use netputsim_core::{IndustryId, IndustrySpec, ParameterSet, PriceVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_params(id: IndustryId, seed: u64) -> ParameterSet {
    let spec = IndustrySpec::standard(id);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = ParameterSet::zeros(&spec);
    let (n, k, c) = (p.n_netputs(), p.n_fixed(), p.n_controls());
    for i in 0..n {
        p.a[i] = rng.random_range(-5.0..5.0);
        for j in 0..=i {
            p.set_c(i, j, rng.random_range(-2.0..2.0));
        }
        for f in 0..k {
            p.alpha[i][f] = rng.random_range(-0.5..0.5);
        }
        for g in 0..c {
            p.gamma[i][g] = rng.random_range(-0.5..0.5);
        }
    }
    for f in 0..k {
        p.b[f] = rng.random_range(-1.0..1.0);
        for l in 0..=f {
            p.set_d(f, l, rng.random_range(-0.2..0.2));
        }
    }
    for g in 0..c {
        p.gamma_m[g] = rng.random_range(-0.5..0.5);
    }
    p.a_m = rng.random_range(-5.0..5.0);
    p
}

pub fn random_point(p: &ParameterSet, seed: u64) -> (PriceVector, Exogenous) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let raw = (0..p.n_netputs()).map(|_| rng.random_range(0.2..5.0)).collect();
    let prices = PriceVector::new(raw, rng.random_range(0.5..2.0)).unwrap();
    let fixed = (0..p.n_fixed()).map(|_| rng.random_range(0.0..3.0)).collect();
    let controls = (0..p.n_controls()).map(|_| rng.random_range(-1.0..1.0)).collect();
    (prices, Exogenous::new(fixed, controls))
}
