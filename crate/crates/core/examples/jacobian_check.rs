//! Compares one element of the generalized Jacobian with central finite
//! differences of the Fischer-Burmeister residual at random points.

use mesoc::generate::generate_planted;
use mesoc::solver::{fb_residual, generalized_jacobian, NewtonConfig};
use mesoc::ReformPoint;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> mesoc::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let config = NewtonConfig::default();
    for seed in 0..8 {
        let planted = generate_planted(2 + seed as usize % 4, 1 + seed as usize % 3, seed)?;
        let inst = &planted.instance;
        let dims = inst.dims();
        let n = dims.n();
        let z = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let pt = ReformPoint::from_vector(&z, dims)?;
        let element = generalized_jacobian(inst, &pt, &config)?;

        let h = 1e-6;
        let mut fd = DMatrix::zeros(n, n);
        for k in 0..n {
            let mut plus = z.clone();
            let mut minus = z.clone();
            plus[k] += h;
            minus[k] -= h;
            let fp = fb_residual(inst, &ReformPoint::from_vector(&plus, dims)?)?.phi;
            let fm = fb_residual(inst, &ReformPoint::from_vector(&minus, dims)?)?.phi;
            fd.set_column(k, &((fp - fm) / (2.0 * h)));
        }
        let rel = (&element.matrix - &fd).amax() / element.matrix.amax().max(1.0);
        println!(
            "p={} q={}  kinks {}  relative error {rel:.2e}",
            dims.p(),
            dims.q(),
            element.kink_count()
        );
    }
    Ok(())
}
