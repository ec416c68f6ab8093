//! Large-L critical correlators and QFI from the free-fermion solution.
use critsense::fermion::{fit_power_law, qfi_scaling_tfim, solve_tfim_fermion, ChainSize};
use critsense::models::Boundary;

fn main() -> critsense::Result<()> {
    let t = solve_tfim_fermion(ChainSize::Thermodynamic { max_separation: 64 }, 1.0, 1.0, Boundary::Periodic)?;
    let rs: Vec<f64> = (8..=64).map(|r| r as f64).collect();
    let c: Vec<f64> = (8..=64).map(|r| t.zz_correlator(r)).collect::<Result<_, _>>()?;
    println!("⟨Z0 Zr⟩ decay exponent: {:.4}", -fit_power_law(&rs, &c, None)?.exponent);
    let s = qfi_scaling_tfim(&[32, 64, 128, 256], 1.0, 1.0)?;
    for (l, f) in s.sizes.iter().zip(&s.qfi) {
        println!("L = {l:>4}: F_Q = {f:.3}");
    }
    println!("fitted exponent {:.4}", s.fit.exponent);
    Ok(())
}
