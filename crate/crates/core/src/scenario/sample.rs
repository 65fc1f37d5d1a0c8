//! Random valid scenarios, used for seed corpora and property tests.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::Rng;

use super::model::{EgoSpec, NpcAction, NpcSpec, PedSpec, Scenario, ScheduleItem, TimeOfDay, WeatherKind, MAX_NPCS};
use super::vocab::ValueKind;
use crate::road::{LaneRole, LightProgram, RoadStructure};

/// Draws a scenario satisfying every invariant on `road`. With `quantized`,
/// every continuous value lies on the vocabulary bin grid so tokenization is
/// lossless.
pub fn sample_scenario<R: Rng + ?Sized>(road: &RoadStructure, rng: &mut R, quantized: bool) -> Scenario {
    let q = |kind: ValueKind, v: f64| if quantized { kind.bins().quantize(v).expect("sampled within range") } else { v };
    let incoming: Vec<&str> =
        road.lanes.iter().filter(|l| l.role == LaneRole::Incoming).map(|l| l.id.as_str()).collect();

    let time = TimeOfDay { hour: rng.random_range(0..24), minute: rng.random_range(0..60) };
    let mut weather = BTreeMap::new();
    for kind in WeatherKind::ALL {
        if rng.random_bool(0.4) {
            weather.insert(kind, q(ValueKind::Intensity, rng.random_range(0.0..=1.0)));
        }
    }

    let lane = *incoming.choose(rng).expect("every road has an approach");
    let dests: Vec<&str> = road.connectors_from(lane).map(|c| c.to.as_str()).collect();
    let ego = EgoSpec {
        lane: lane.to_string(),
        offset: q(ValueKind::Offset, rng.random_range(0.0..60.0)),
        speed: q(ValueKind::Speed, rng.random_range(0.0..15.0)),
        dest: dests.choose(rng).expect("approaches lead somewhere").to_string(),
    };

    let mut lights = BTreeMap::new();
    for l in road.lanes.iter().filter(|l| l.signalized) {
        if rng.random_bool(0.5) {
            let prog = LightProgram {
                green: q(ValueKind::Time, rng.random_range(5.0..30.0)),
                yellow: q(ValueKind::Time, rng.random_range(2.0..5.0)),
                red: q(ValueKind::Time, rng.random_range(5.0..40.0)),
                offset: q(ValueKind::Time, rng.random_range(0.0..30.0)),
            };
            lights.insert(l.id.clone(), prog);
        }
    }

    let mut peds = Vec::new();
    for _ in 0..rng.random_range(0..=2) {
        let start = q(ValueKind::Time, rng.random_range(0.0..20.0));
        let end = q(ValueKind::Time, start + rng.random_range(1.0..15.0));
        let cw = road.crosswalks.choose(rng).expect("roads have crosswalks");
        peds.push(PedSpec { crosswalk: cw.id.clone(), start, end });
    }

    let mut npcs = Vec::new();
    for k in 1..=rng.random_range(0..=MAX_NPCS) {
        let lane = road.lanes.choose(rng).expect("roads have lanes");
        let mut schedule = Vec::new();
        let mut t = 0.0;
        for _ in 0..rng.random_range(0..=2) {
            t = q(ValueKind::Time, t + rng.random_range(0.5..10.0));
            let targets: Vec<&str> = road.connectors_from(&lane.id).map(|c| c.to.as_str()).collect();
            let action = if !targets.is_empty() && rng.random_bool(0.3) {
                NpcAction::Goto(targets.choose(rng).unwrap().to_string())
            } else {
                NpcAction::Speed(q(ValueKind::Speed, rng.random_range(0.0..15.0)))
            };
            schedule.push(ScheduleItem { at: t, action });
        }
        npcs.push(NpcSpec {
            id: format!("npc{k}"),
            lane: lane.id.clone(),
            offset: q(ValueKind::Offset, rng.random_range(0.0..70.0)),
            speed: q(ValueKind::Speed, rng.random_range(0.0..15.0)),
            schedule,
        });
    }

    Scenario { road: road.tag, time, weather, ego, lights, peds, npcs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::road::RoadTag;
    use crate::scenario::{decode, encode, Vocabulary};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest! {
        #[test]
        fn samples_are_valid_and_round_trip(seed in any::<u64>(), road in 0usize..4, quantized in any::<bool>()) {
            let road = RoadStructure::load(RoadTag::ALL[road]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = sample_scenario(&road, &mut rng, quantized);
            prop_assert!(s.validate(&road).is_ok(), "{:?}", s.validate(&road));
            let seq = encode(&s);
            prop_assert_eq!(&decode(&seq, &road).unwrap(), &s);
            let vocab = Vocabulary::standard();
            let q = vocab.quantize(&seq).unwrap();
            if quantized {
                prop_assert_eq!(&q, &seq);
            }
            prop_assert_eq!(vocab.quantize(&q).unwrap(), q.clone());
            prop_assert!(decode(&q, &road).is_ok());
        }
    }
}
