//! Levenberg-Marquardt fits of the three lineshapes to synthetic data with a
//! little deterministic noise.
//!
//! cargo run --example lineshape_fit

use dichroic_filter::fitting::{fit_gaussian_sum2, fit_lorentzian, FitModel, GaussianSum2, Lorentzian};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> dichroic_filter::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let xs: Vec<f64> = (0..=200).map(|i| -200.0 + 2.0 * i as f64).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| Lorentzian.eval(&[3.0, 80.0, 0.146, 1e-5], x) + rng.gen_range(-1e-3..1e-3))
        .collect();
    let fit = fit_lorentzian(&xs, &ys)?;
    println!("Lorentzian: {:?}", fit.params);
    println!("  ± {:?}, {} iterations, rms {:.2e}", fit.param_errors, fit.iterations, fit.residual_rms);

    let xs: Vec<f64> = (0..=96).map(|i| -600.0 + 25.0 * i as f64).collect();
    let truth = [0.0, 226.0, 0.146, 814.5, 226.0, 0.05, 0.0];
    let ys: Vec<f64> = xs.iter().map(|&x| GaussianSum2.eval(&truth, x) + rng.gen_range(-1e-3..1e-3)).collect();
    let fit = fit_gaussian_sum2(&xs, &ys, Some(814.5))?;
    println!("two Gaussians: {:?}", fit.params);
    println!("  separation {:.1} MHz, converged {}", fit.params[3] - fit.params[0], fit.converged);
    Ok(())
}
