//! Transport distances between class distributions: the point-mass closed
//! form, the cumulative form, and the exact plan from the small solver.

use unimodal_ordinal::transport::{ot_cmf_l1, ot_dirac, ot_lp_oracle, GroundCost};
use unimodal_ordinal::ProbVector;

fn main() -> unimodal_ordinal::Result<()> {
    let p = ProbVector::new(vec![0.1, 0.6, 0.2, 0.1])?;
    let q = ProbVector::new(vec![0.4, 0.1, 0.1, 0.4])?;
    for m in [1.0, 2.0] {
        let cost = GroundCost::new(m, 4)?;
        for j in 1..=4 {
            println!("m = {m}: cost of p to class {j} = {:.4}", ot_dirac(&p, j, &cost)?);
        }
        let (d, plan) = ot_lp_oracle(&p, &q, &cost)?;
        println!("m = {m}: exact distance p -> q = {d:.4}, plan:");
        for row in plan.gamma() {
            println!("    {:?}", row.iter().map(|g| format!("{g:.2}")).collect::<Vec<_>>());
        }
    }
    println!("cumulative form (m = 1): {:.4}", ot_cmf_l1(&p, &q)?);
    Ok(())
}
