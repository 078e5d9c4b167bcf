//! Finite-difference check of every head and loss combination.

use unimodal_ordinal::bench::verify::gradient_check;

fn main() -> unimodal_ordinal::Result<()> {
    for r in gradient_check(50, 1)? {
        println!("{:<32} {:>3} probes, {} failures, {}", r.name, r.checked, r.failures, r.detail);
    }
    Ok(())
}
