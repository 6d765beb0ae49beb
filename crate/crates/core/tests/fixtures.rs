use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smess_core::assembly::{assemble, structure_check};
use smess_core::scenario::parse_scenario;

const IEEE33: &str = include_str!("../data/ieee33.json");

/// Priority weights of the 33-node fixture: node 1 has weight 1, the
/// remaining nodes draw uniformly from {1..5} in node order.
fn seeded_weights() -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    std::iter::once(1.0).chain((2..=33).map(|_| rng.gen_range(1..=5) as f64)).collect()
}

#[test]
fn committed_weights_match_seeded_generator() {
    let s = parse_scenario(IEEE33).unwrap();
    let got: Vec<f64> = s.network.nodes.iter().map(|n| n.weight).collect();
    assert_eq!(got, seeded_weights(), "weights {:?}", seeded_weights());
}

#[test]
fn fixture_passes_structural_check() {
    let s = parse_scenario(IEEE33).unwrap();
    let a = assemble(&s).unwrap();
    let check = structure_check(&a.scenario, &a.counts).unwrap();
    assert!(check.pass(), "{}", check.render());
}
