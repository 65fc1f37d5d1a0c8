//! Hand-built scenarios, each steering the stand-in ego into a specific law
//! violation.

use lawgen_core::scenario::Scenario;

const FILES: [(&str, &str); 9] = [
    ("overspeed", include_str!("../data/adversarial/overspeed.json")),
    ("fog", include_str!("../data/adversarial/fog.json")),
    ("dusk", include_str!("../data/adversarial/dusk.json")),
    ("left_turn", include_str!("../data/adversarial/left_turn.json")),
    ("tailgate", include_str!("../data/adversarial/tailgate.json")),
    ("red_light", include_str!("../data/adversarial/red_light.json")),
    ("late_pedestrian", include_str!("../data/adversarial/late_pedestrian.json")),
    ("blocked_junction", include_str!("../data/adversarial/blocked_junction.json")),
    ("right_on_red", include_str!("../data/adversarial/right_on_red.json")),
];

/// The bundled adversarial scenarios with their ids, all on road S3.
pub fn adversarial_scenarios() -> Vec<(String, Scenario)> {
    FILES
        .iter()
        .map(|(id, text)| (id.to_string(), Scenario::from_json(text).expect("bundled scenario parses")))
        .collect()
}
