//! Class probabilities of the binned location-scale head for a few
//! locations and scales, with the unimodality check.

use unimodal_ordinal::unimodal::{head_probs, BinGrid, Family, LocationScale};

fn main() -> unimodal_ordinal::Result<()> {
    let grid = BinGrid::new(6)?;
    println!("thresholds {:?}", grid.thresholds());
    for family in Family::ALL {
        for (mu, sigma) in [(-0.9, 0.05), (0.1, 0.3), (0.5, 2.0), (3.0, 0.01)] {
            let p = head_probs(&grid, &LocationScale::new(family, mu, sigma)?);
            let cells: Vec<String> = p.as_slice().iter().map(|v| format!("{v:.4}")).collect();
            println!(
                "{:<8} mu {mu:>5} sigma {sigma:>5}  [{}]  mode {} unimodal {}",
                family.name(),
                cells.join(" "),
                p.argmax_class(),
                p.is_unimodal()
            );
        }
    }
    Ok(())
}
