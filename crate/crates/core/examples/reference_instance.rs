//! Solves the bundled 3 + 2 instance, certifies the result, and contrasts it
//! with the closed-form point printed alongside the instance.

use mesoc::fixtures::{published_point, reference_instance};
use mesoc::solver::{fb_residual, stationarity_check};
use mesoc::{classify_pair, solve, SolveOptions};

fn main() -> mesoc::Result<()> {
    let inst = reference_instance();
    let sol = solve(&inst, &SolveOptions::default())?;
    println!("status        {}", sol.status.as_str());
    println!("x             {:?}", sol.z.x.as_slice());
    println!("u             {:?}", sol.z.u.as_slice());
    println!("Tz + r        {:?} | {:?}", sol.s.x.as_slice(), sol.s.u.as_slice());
    println!("case          {}", sol.certificate.case_tag.as_str());
    println!("lambda        {:?}", sol.certificate.lambda);
    println!("<z, Tz + r>   {:.3e}", sol.z.dot(&sol.s));
    println!(
        "starts        {} certified, {} spurious of {}",
        sol.summary.certified, sol.summary.spurious, sol.summary.starts
    );

    let rep = stationarity_check(&inst, &sol.point, 1e-8)?;
    println!("grad Psi      {:.3e}", rep.gradient_inf);
    println!("cond A~, D~   {:.3e}, {:.3e}", rep.a_tilde_condition, rep.d_tilde_condition);

    println!("\nprinted closed-form point:");
    let claimed = published_point();
    let phi = fb_residual(&inst, &claimed)?;
    println!("H             {:?}", phi.equality_part().as_slice());
    let z = claimed.to_cone_point();
    let s = inst.affine_image(&z)?;
    let cert = classify_pair(&z, &s, 1e-8)?;
    let g = inst.g_tilde(&claimed)?;
    println!("<w, G>        {:.5}", claimed.w_hat.dot(&g));
    println!("accepted      {}", cert.accepted());

    println!("\nbest run trace:\n{}", sol.trace.to_lines());
    Ok(())
}
