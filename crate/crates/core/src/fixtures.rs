//! Small hand-built instances shared by tests, examples and the CLI docs.

use crate::model::{Actor, EdgeSpec, Instance, RawInstance, Side};
use crate::utility::UtilitySpec;

fn actor(id: &str, side: Side, endowment: f64, utility: UtilitySpec) -> Actor {
    Actor {
        id: id.into(),
        side,
        endowment,
        utility,
    }
}

fn edge(buyer: &str, seller: &str, capacity: f64) -> EdgeSpec {
    EdgeSpec {
        buyer: buyer.into(),
        seller: seller.into(),
        capacity,
    }
}

fn build(raw: RawInstance) -> Instance {
    Instance::from_raw(raw).expect("fixture is valid").0
}

/// One buyer and one seller with `sqrt(own) + sqrt(other)`, unit endowments
/// and unit capacity.
pub fn sqrt_single_edge_raw() -> RawInstance {
    RawInstance {
        actors: vec![
            actor("b1", Side::Buyer, 1.0, UtilitySpec::SQRT_ADDITIVE),
            actor("s1", Side::Seller, 1.0, UtilitySpec::SQRT_ADDITIVE),
        ],
        edges: vec![edge("b1", "s1", 1.0)],
        ..Default::default()
    }
}

pub fn sqrt_single_edge() -> Instance {
    build(sqrt_single_edge_raw())
}

/// Two identical sqrt buyers competing for one sqrt seller.
pub fn two_buyers_one_seller_raw() -> RawInstance {
    RawInstance {
        actors: vec![
            actor("b1", Side::Buyer, 1.0, UtilitySpec::SQRT_ADDITIVE),
            actor("b2", Side::Buyer, 1.0, UtilitySpec::SQRT_ADDITIVE),
            actor("s1", Side::Seller, 1.0, UtilitySpec::SQRT_ADDITIVE),
        ],
        edges: vec![edge("b1", "s1", 1.0), edge("b2", "s1", 1.0)],
        ..Default::default()
    }
}

pub fn two_buyers_one_seller() -> Instance {
    build(two_buyers_one_seller_raw())
}

/// Asymmetric pair: additive-power buyer against a CES seller.
pub fn asymmetric_pair() -> Instance {
    build(RawInstance {
        actors: vec![
            actor("b1", Side::Buyer, 1.5, UtilitySpec::AdditivePower { alpha: 0.3, beta: 0.6, c: 1.5 }),
            actor("s1", Side::Seller, 0.8, UtilitySpec::Ces { rho: 0.4, w: 0.6 }),
        ],
        edges: vec![edge("b1", "s1", 1.2)],
        ..Default::default()
    })
}

/// Shifted Cobb-Douglas buyer against an additive-power seller; the capacity
/// is tighter than either endowment.
pub fn cobb_douglas_pair() -> Instance {
    build(RawInstance {
        actors: vec![
            actor(
                "b1",
                Side::Buyer,
                2.0,
                UtilitySpec::ShiftedCobbDouglas { a: 0.5, b: 0.3, theta: 0.4 },
            ),
            actor("s1", Side::Seller, 1.0, UtilitySpec::AdditivePower { alpha: 0.5, beta: 0.7, c: 0.8 }),
        ],
        edges: vec![edge("b1", "s1", 0.9)],
        ..Default::default()
    })
}

/// A buyer and a seller with no exchange opportunity.
pub fn no_edges() -> Instance {
    build(RawInstance {
        actors: vec![
            actor("b1", Side::Buyer, 1.0, UtilitySpec::SQRT_ADDITIVE),
            actor("s1", Side::Seller, 1.0, UtilitySpec::SQRT_ADDITIVE),
        ],
        edges: vec![],
        ..Default::default()
    })
}

/// The single-edge fixtures used for frontier checks.
pub fn frontier_fixtures() -> Vec<(&'static str, Instance)> {
    vec![
        ("sqrt", sqrt_single_edge()),
        ("asymmetric", asymmetric_pair()),
        ("cobb_douglas", cobb_douglas_pair()),
    ]
}
