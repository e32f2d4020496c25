//! A spin-1/2 pointer model built by hand: the coupling swaps the pointer's
//! ready state with "plus" or "minus" according to the z spin. The extracted
//! effects are the spin projectors, and the neutral effect vanishes. The POVM
//! is written in the plain-text format and read back.
//!
//!     cargo run --release --example stern_gerlach_povm

use qcp::born::{build_povm, outcome_probability, MeasurementModel, Povm, NEUTRAL};
use qcp::hilbert::{network, ModeSpace, C64};

fn main() -> qcp::Result<()> {
    let spin = ModeSpace::new(&["up", "down"])?;
    let pointer = ModeSpace::new(&["ready", "plus", "minus"])?;
    // basis index = 3 * spin + pointer; spin s trades ready for pointer s + 1
    let coupling = network::from_basis_map(6, |j| {
        let (s, p) = (j / 3, j % 3);
        let q = match p {
            0 => s + 1,
            x if x == s + 1 => 0,
            x => x,
        };
        vec![(3 * s + q, C64::new(1.0, 0.0))]
    });
    let model = MeasurementModel::new(&spin, &pointer, coupling, &["+", "-"], |label| {
        match label.split(',').nth(1) {
            Some("plus") => Some("+".into()),
            Some("minus") => Some("-".into()),
            _ => None,
        }
    })?;
    let ready = [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
    let povm = build_povm(&model, &ready)?;
    for o in ["+", "-"] {
        println!("O({o}) =\n{}", povm.atom(o)?.map(|z| z.re));
    }
    println!("completeness residual {:e}, min eigenvalue {:e}", povm.completeness_residual(), povm.min_eigenvalue());

    let theta = 1.0f64;
    let phi = [C64::new((theta / 2.0).cos(), 0.0), C64::new((theta / 2.0).sin(), 0.0)];
    for set in [vec!["+"], vec!["-"], vec![NEUTRAL]] {
        let p = outcome_probability(&povm, &set, &phi)?;
        let direct = model.direct_probability(&set, &phi, &ready)?;
        println!("P({}) = {p:.15}  (pointer positions: {direct:.15})", set[0]);
    }

    let mut text = Vec::new();
    povm.write_text(&mut text)?;
    let back = Povm::read_text(&text[..])?;
    println!("\n{}", String::from_utf8_lossy(&text).lines().take(4).collect::<Vec<_>>().join("\n"));
    println!("...\nround trip equal: {}", back == povm);
    Ok(())
}
