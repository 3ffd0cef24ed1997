//! Convergence of the Alpert log-corrected rule against the plain trapezoid
//! rule on a periodic integrand with a logarithmic singularity.

use std::f64::consts::PI;

use vesicle2d::quadrature::AlpertRule;

fn main() -> vesicle2d::Result<()> {
    // ∫₀^{2π} log|2 sin(t/2)| (1 + cos t) dt = −π
    let f = |t: f64| (2.0 * (0.5 * t).sin()).abs().ln() * (1.0 + t.cos());
    let exact = -PI;
    println!("{:>5} {:>12} {:>12}", "N", "alpert", "trapezoid");
    for n in [16, 32, 64, 128, 256] {
        let rule = AlpertRule::new(n)?;
        let h = 2.0 * PI / n as f64;
        // the trapezoid rule has to skip the singular node
        let trap: f64 = (1..n).map(|k| h * f(k as f64 * h)).sum();
        println!("{n:>5} {:>12.3e} {:>12.3e}", (rule.integrate(f, 0.0) - exact).abs(), (trap - exact).abs());
    }
    Ok(())
}
