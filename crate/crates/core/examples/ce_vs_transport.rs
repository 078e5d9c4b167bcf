//! Two predictions with the same probability on the true class: cross
//! entropy cannot tell them apart, the transport loss can.

use unimodal_ordinal::nn::{loss, LossKind, Output, Target};
use unimodal_ordinal::ProbVector;

fn main() -> unimodal_ordinal::Result<()> {
    let near = Output::Distribution(ProbVector::new(vec![0.5, 0.3, 0.2])?);
    let far = Output::Distribution(ProbVector::new(vec![0.5, 0.2, 0.3])?);
    let y = Target::Class(1);
    let ot = LossKind::OptimalTransport { m: 1.0 };
    for (name, out) in [("near", &near), ("far", &far)] {
        println!(
            "{name}: {:?}  cross entropy {:.6}  transport {:.6}",
            out.probs().map(|p| p.as_slice()),
            loss(&LossKind::CrossEntropy, out, &y)?,
            loss(&ot, out, &y)?
        );
    }
    Ok(())
}
