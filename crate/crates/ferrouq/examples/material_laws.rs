//! The three monotone material-law families and their derivative data.
//!
//! Prints `f`, the reluctivity `nu = f(s)/s`, slope bounds, and a 2x2
//! differential reluctivity tensor for each family.

use ferrouq::material::{MaterialLaw, MeasuredBhTable};

fn describe(name: &str, law: &MaterialLaw) -> ferrouq::Result<()> {
    let bounds = law.bounds();
    println!("{name}:  slope bounds alpha = {:.4}, beta = {:.4}", bounds.alpha, bounds.beta);
    println!("     s        f(s)        nu(s)      f'(s)");
    for s in [0.0, 0.5, 1.0, 1.25, 1.55, 2.0] {
        println!("  {s:5.2}  {:10.3}  {:10.3}  {:10.3}", law.f(s), law.nu(s), law.f_prime(s));
    }
    let tensor = law.diff_reluctivity(&[1.0, 0.5])?;
    println!(
        "  nu_d at r=(1, 0.5): [[{:.3}, {:.3}], [{:.3}, {:.3}]]\n",
        tensor.entry(0, 0),
        tensor.entry(0, 1),
        tensor.entry(1, 0),
        tensor.entry(1, 1)
    );
    Ok(())
}

fn main() -> ferrouq::Result<()> {
    // Saturating rational reluctivity with machine-steel reference constants.
    let rational = MaterialLaw::rational(1.78, 14.0, 6000.0, 245.0)?;
    describe("rational", &rational)?;

    // Power law s^(p-2); the nonlinearity of the p-Laplace benchmark.
    let power = MaterialLaw::power(4.0)?;
    describe("power p=4", &power)?;

    // Monotone spline through the mean of a measured table.
    let table = MeasuredBhTable::synthetic(14, 28, 42);
    let spline = MaterialLaw::from_monotone_table(table.locations(), &table.mean_values())?;
    describe("spline (table mean)", &spline)?;

    // The flux map r -> nu(|r|) r and its directional derivative contracted
    // against k directions (the building block of Newton assembly).
    let r = [1.2, 0.3];
    let flux = rational.flux(&r);
    println!("rational flux at r=(1.2, 0.3): ({:.3}, {:.3})", flux[0], flux[1]);
    let d1 = [1.0, 0.0];
    let jac = rational.flux_jacobian(&r, &[&d1])?;
    println!("d/dt nu(|r+t d|)(r+t d) at t=0, d=e1: ({:.3}, {:.3})", jac[0], jac[1]);
    Ok(())
}
