//! Membership, duality and complementarity-case classification on small
//! hand-made points.

use mesoc::cone::{dual_contains, mesoc_contains, monotone_nonneg_contains, shift_to_monotone};
use mesoc::generate::complementary_pair;
use mesoc::{classify_pair, CaseTag, ConeDims, ConePoint};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> mesoc::Result<()> {
    let z = ConePoint::from_slices(&[3.0, 2.0, 1.0], &[1.0, 0.0]);
    let s = ConePoint::from_slices(&[1.0, -0.5, 0.2], &[0.5, 0.2]);
    println!("z in L: {}", mesoc_contains(&z, 0.0)?);
    println!("s in M: {}", dual_contains(&s, 0.0)?);
    println!("<z, s> = {:.3} (nonnegative for any pair from L x M)", z.dot(&s));
    println!(
        "shifted x - ||u|| e = {:?}, monotone nonnegative: {}",
        shift_to_monotone(&z).as_slice(),
        monotone_nonneg_contains(&shift_to_monotone(&z), 0.0)
    );

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let dims = ConeDims::new(4, 2)?;
    for case in [CaseTag::BothZero, CaseTag::UZero, CaseTag::VZero, CaseTag::Generic] {
        let (z, s, lambda) = complementary_pair(dims, case, &mut rng);
        let cert = classify_pair(&z, &s, 1e-10)?;
        println!(
            "\n{:<9} accepted {}  lambda {:?} (planted {:?})",
            cert.case_tag.as_str(),
            cert.accepted(),
            cert.lambda,
            lambda
        );
        for (k, v) in &cert.residuals {
            println!("  {k:<22} {v:+.3e}");
        }
    }
    Ok(())
}
