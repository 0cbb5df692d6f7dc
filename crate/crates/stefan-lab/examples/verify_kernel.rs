//! Machine verification of the Dirichlet heat-kernel bounds: the measured
//! constants of the Gaussian sup/integral bounds over a time ladder, the
//! Chapman-Kolmogorov identity, boundary mass loss, and the `p < 3`
//! integrability threshold of the kernel's p-th power.
//!
//! ```bash
//! cargo run --release -p stefan-lab --example verify_kernel
//! ```

use stefan_lab::harness::run_verify_kernel;

fn main() -> stefan_lab::Result<()> {
    let report = run_verify_kernel(1.0, 1.0, None)?;
    println!("kernel bound constants over decreasing times {:?}:", report.bounds.times);
    println!("  sup G sqrt(t):        {:?}", report.bounds.sup_constant);
    println!("  Gaussian integral:    {:?}", report.bounds.gaussian_constant);
    println!("  grad L1 sqrt(t):      {:?}", report.bounds.grad_constant);
    println!("  tail growth ratios:   {:?}", report.bounds.tail_growth);
    println!("Chapman-Kolmogorov residual: {:.3e}", report.chapman_kolmogorov_residual);
    println!("late-time mass (must be < 1): {:.6}", report.late_time_mass);
    println!("small-time mass error:        {:.3e}", report.small_time_mass_error);
    for p in &report.power_integrals {
        println!(
            "int_0^t int G^p dy ds at p = {}: {:.4} (fitted space-integral power {:.3}, Gaussian bound predicts {:.3})",
            p.p,
            p.value,
            p.fitted_power,
            (1.0 - p.p) / 2.0
        );
    }
    println!("passed: {}", report.passed);
    Ok(())
}
