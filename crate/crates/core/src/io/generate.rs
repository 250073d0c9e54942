//! Seeded random instances.
//!
//! All draws come from one `ChaCha8Rng` seeded with the 64-bit seed, in a
//! fixed order: actors (buyers then sellers), then candidate edges in
//! `(buyer, seller)` order. The same arguments therefore always produce the
//! same instance on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::frontier::FrontierMap;
use crate::model::{Actor, ActorId, EdgeSpec, Instance, NumericConfig, RawInstance, Side};
use crate::utility::UtilitySpec;

/// Which utility families generated actors use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyMix {
    AdditivePower,
    Ces,
    ShiftedCobbDouglas,
    /// Each actor draws its family uniformly.
    Mixed,
    /// `sqrt(own) + sqrt(other)` with unit endowments and capacities.
    SqrtAdditive,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerateError {
    #[error("need at least one buyer and one seller (got {n_buyers} and {n_sellers})")]
    EmptySide { n_buyers: usize, n_sellers: usize },
    #[error("edge density {0} not in (0, 1]")]
    Density(f64),
}

const ENDOWMENT: (f64, f64) = (0.5, 2.0);
/// Capacity redraws before an edge without gains from trade is skipped.
const MAX_EDGE_DRAWS: usize = 100;

fn draw_utility(rng: &mut ChaCha8Rng, mix: FamilyMix) -> UtilitySpec {
    let family = match mix {
        FamilyMix::Mixed => match rng.gen_range(0..3) {
            0 => FamilyMix::AdditivePower,
            1 => FamilyMix::Ces,
            _ => FamilyMix::ShiftedCobbDouglas,
        },
        other => other,
    };
    match family {
        FamilyMix::AdditivePower => UtilitySpec::AdditivePower {
            alpha: rng.gen_range(0.2..0.8),
            beta: rng.gen_range(0.2..0.8),
            c: rng.gen_range(0.5..2.0),
        },
        FamilyMix::Ces => UtilitySpec::Ces {
            rho: rng.gen_range(0.2..0.8),
            w: rng.gen_range(0.2..0.8),
        },
        FamilyMix::ShiftedCobbDouglas => UtilitySpec::ShiftedCobbDouglas {
            a: rng.gen_range(0.1..1.0),
            b: rng.gen_range(0.1..1.0),
            theta: rng.gen_range(0.2..0.8),
        },
        FamilyMix::SqrtAdditive | FamilyMix::Mixed => UtilitySpec::SQRT_ADDITIVE,
    }
}

fn ids(prefix: char, n: usize) -> Vec<ActorId> {
    let width = n.to_string().len();
    (1..=n).map(|k| ActorId(format!("{prefix}{k:0width$}"))).collect()
}

/// The unvalidated document behind [`generate_instance`].
pub fn generate_raw(
    n_buyers: usize,
    n_sellers: usize,
    edge_density: f64,
    mix: FamilyMix,
    seed: u64,
) -> Result<RawInstance, GenerateError> {
    if n_buyers == 0 || n_sellers == 0 {
        return Err(GenerateError::EmptySide { n_buyers, n_sellers });
    }
    if !(edge_density > 0.0 && edge_density <= 1.0) {
        return Err(GenerateError::Density(edge_density));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fixed = mix == FamilyMix::SqrtAdditive;

    let actor = |id: ActorId, side: Side, rng: &mut ChaCha8Rng| Actor {
        id,
        side,
        endowment: if fixed { 1.0 } else { rng.gen_range(ENDOWMENT.0..=ENDOWMENT.1) },
        utility: draw_utility(rng, mix),
    };
    let buyers: Vec<Actor> = ids('b', n_buyers).into_iter().map(|id| actor(id, Side::Buyer, &mut rng)).collect();
    let sellers: Vec<Actor> = ids('s', n_sellers).into_iter().map(|id| actor(id, Side::Seller, &mut rng)).collect();

    let numeric = NumericConfig::default();
    let mut edges = Vec::new();
    for b in &buyers {
        for s in &sellers {
            if !rng.gen_bool(edge_density) {
                continue;
            }
            let lo = 0.5 * b.endowment.min(s.endowment);
            let hi = b.endowment + s.endowment;
            for _ in 0..MAX_EDGE_DRAWS {
                let capacity = if fixed { 1.0 } else { rng.gen_range(lo..=hi) };
                let rx = FrontierMap::new(b, s, capacity, numeric).rx_bounds();
                if rx.v_max_i > numeric.degenerate_payoff && rx.v_max_j > numeric.degenerate_payoff {
                    edges.push(EdgeSpec {
                        buyer: b.id.clone(),
                        seller: s.id.clone(),
                        capacity,
                    });
                    break;
                }
                if fixed {
                    break;
                }
            }
        }
    }

    Ok(RawInstance {
        actors: buyers.into_iter().chain(sellers).collect(),
        edges,
        numeric,
    })
}

/// A random validated instance.
///
/// Endowments are uniform on `[0.5, 2]`, capacities on
/// `[0.5 min(M_i, M_j), M_i + M_j]`, and each buyer-seller pair is an edge
/// with probability `edge_density`.
pub fn generate_instance(
    n_buyers: usize,
    n_sellers: usize,
    edge_density: f64,
    mix: FamilyMix,
    seed: u64,
) -> Result<Instance, GenerateError> {
    let raw = generate_raw(n_buyers, n_sellers, edge_density, mix, seed)?;
    Ok(Instance::from_raw(raw).expect("generated instances are valid").0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn deterministic() {
        let a = generate_raw(2, 2, 1.0, FamilyMix::AdditivePower, 42).unwrap();
        let b = generate_raw(2, 2, 1.0, FamilyMix::AdditivePower, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.edges.len(), 4);
        assert_ne!(a, generate_raw(2, 2, 1.0, FamilyMix::AdditivePower, 43).unwrap());
    }

    #[test]
    fn mixed_instances_are_valid() {
        let inst = generate_instance(3, 3, 0.5, FamilyMix::Mixed, 7).unwrap();
        for e in inst.edges() {
            assert_eq!(inst.actor(e.buyer).side, Side::Buyer);
            assert_eq!(inst.actor(e.seller).side, Side::Seller);
            let a = inst.actor(e.buyer).endowment.min(inst.actor(e.seller).endowment);
            assert!(e.capacity >= 0.5 * a);
        }
        for a in inst.actors() {
            assert!((0.5..=2.0).contains(&a.endowment));
        }
    }

    #[test]
    fn canonical_single_edge() {
        let raw = generate_raw(1, 1, 1.0, FamilyMix::SqrtAdditive, 0).unwrap();
        assert_eq!(raw, fixtures::sqrt_single_edge_raw());
    }

    #[test]
    fn padded_ids() {
        let raw = generate_raw(10, 2, 0.3, FamilyMix::Ces, 1).unwrap();
        assert_eq!(raw.actors[0].id.as_str(), "b01");
        assert_eq!(raw.actors[9].id.as_str(), "b10");
        assert_eq!(raw.actors[10].id.as_str(), "s1");
    }

    #[test]
    fn arguments_are_checked() {
        assert!(generate_raw(0, 1, 1.0, FamilyMix::Ces, 0).is_err());
        assert!(generate_raw(1, 1, 0.0, FamilyMix::Ces, 0).is_err());
        assert!(generate_raw(1, 1, 1.5, FamilyMix::Ces, 0).is_err());
    }
}
