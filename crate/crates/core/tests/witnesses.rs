//! Archived outputs that are not unimodal: one from a proportional odds
//! model and one from a randomly initialized softmax network. Set
//! `REGENERATE_FIXTURES=1` to rewrite the file from the searches.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use unimodal_ordinal::bench::verify::{find_non_unimodal_softmax, SoftmaxWitness};
use unimodal_ordinal::nn::{Mlp, Output};
use unimodal_ordinal::pom::{find_non_unimodal_pom, pom_class_probs, PomWitness};
use unimodal_ordinal::prob::is_unimodal;

#[derive(Debug, Serialize, Deserialize)]
struct Witnesses {
    pom: PomWitness,
    softmax: SoftmaxWitness,
}

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/non_unimodal_witnesses.json")
}

fn search() -> Witnesses {
    Witnesses {
        pom: find_non_unimodal_pom(5, 100_000, 1).unwrap().expect("pom witness"),
        softmax: find_non_unimodal_softmax(5, 100_000, 1).unwrap().expect("softmax witness"),
    }
}

#[test]
fn archived_witnesses_replay() {
    if std::env::var_os("REGENERATE_FIXTURES").is_some() {
        std::fs::write(fixture(), serde_json::to_string_pretty(&search()).unwrap()).unwrap();
    }
    let w: Witnesses = serde_json::from_str(&std::fs::read_to_string(fixture()).unwrap()).unwrap();

    assert!(w.pom.params.k() >= 4);
    let p = pom_class_probs(&w.pom.params, &w.pom.x).unwrap();
    assert_eq!(p, w.pom.probs);
    assert!(!is_unimodal(p.as_slice()), "{:?}", p.as_slice());

    let net = Mlp::new(w.softmax.spec.clone()).unwrap();
    let Output::Distribution(q) = net.forward(&w.softmax.x).unwrap() else { panic!("softmax head") };
    assert_eq!(q.as_slice(), &w.softmax.probs[..]);
    assert!(!is_unimodal(q.as_slice()), "{:?}", q.as_slice());
}

#[test]
fn searches_are_deterministic() {
    let (a, b) = (search(), search());
    assert_eq!(a.pom, b.pom);
    assert_eq!(a.softmax, b.softmax);
}
