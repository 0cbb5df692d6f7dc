//! Runs a small ensemble with the default configuration and prints the
//! aggregated report: event fractions, the localized moment estimate and
//! per-path classifications.
//!
//! ```bash
//! cargo run --release -p stefan-lab --example ensemble_report
//! ```

use stefan_lab::config::RunConfig;
use stefan_lab::harness::run_ensemble;

fn main() -> stefan_lab::Result<()> {
    let mut config = RunConfig::parse(
        "[grid]\n\
         nx = 32\n\
         nt = 256\n\
         horizon = 0.25\n\
         \n\
         [sigma]\n\
         profile = sine\n\
         amplitude = 0.5\n\
         \n\
         [run]\n\
         ensemble_size = 50\n\
         outputs = classification,moments,holder\n",
    )?;
    config.base_seed = 11;
    let report = run_ensemble(&config, None)?;
    print!("{}", report.text_table());
    println!("provenance hash: {}", report.provenance.config_hash);
    println!("first five paths:");
    for rec in report.paths.iter().take(5) {
        let c = rec.classification.as_ref().unwrap();
        println!(
            "  seed {}: tau_M = {}, sup ||u||_H = {:.3}, in Omega_M^n = {}",
            rec.seed, c.tau_m, c.sup_h_norm, c.in_omega_m_n
        );
    }
    Ok(())
}
