//! Closed-form conic MAD weights for the bundled returns panel, with both
//! roots of the beta quadratic and their KKT residuals.

use mesoc::portfolio::{parse_f_spec, select_jstar, solve_portfolio, JstarMode, MadModel, ReturnsPanel};

fn main() -> mesoc::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample_returns.csv");
    let panel = ReturnsPanel::from_csv(std::fs::File::open(path)?)?;
    let f = parse_f_spec("linear:0.1", panel.n_periods())?;
    let c0 = 2.0;

    let sel = select_jstar(&panel, &JstarMode::FixedPoint { c0, f: f.clone(), start: 0 })?;
    println!(
        "j* = {} after {} rounds (stable: {:?})",
        sel.index + 1,
        sel.iterations,
        sel.converged
    );
    let model = MadModel::new(&panel, c0, f, sel.index)?;
    println!("theta = {:?}", model.theta().as_slice());
    println!("K     = {:.3e}", model.k_constant());

    let report = solve_portfolio(&model, &panel)?;
    for c in &report.candidates {
        println!("\nbeta = {:.6}  quadratic residual {:.1e}  accepted {}", c.beta, c.quadratic_residual, c.accepted);
        if let Some(sol) = &c.solution {
            for (label, w) in panel.labels.iter().zip(sol.w.iter()) {
                println!("  {label:<8} {w:>9.5}");
            }
            for (k, v) in &sol.kkt_residuals {
                println!("  {k:<20} {v:.2e}");
            }
        }
    }
    match &report.best {
        Some(sol) => println!("\nchosen beta {:.6}, sum of weights {:.15}", sol.beta, sol.w.sum()),
        None => println!("\nno root satisfies the KKT system"),
    }
    Ok(())
}
