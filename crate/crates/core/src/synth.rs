//! Seeded template-based corpus generator. The real garment corpus is
//! private, so end-to-end runs and the acceptance benchmark target
//! synthetic descriptions with known gold labels.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::DescriptionRecord;
use crate::vocabulary::Lexicons;

const ADJECTIVES: &[&str] = &[
    "elegant",
    "plain",
    "fitted",
    "long",
    "short",
    "formal",
    "embroidered",
    "pleated",
];

const MATERIALS: &[&str] = &[
    "cotton", "silk", "wool", "velvet", "linen", "taffeta", "organza", "satin",
];

/// (surface form used in the text, gold work-type label)
const WORK_TYPES: &[(&str, &str)] = &[
    ("dress", "dress"),
    ("coat", "coats"),
    ("cape", "cape"),
    ("jacket", "jacket"),
    ("blouse", "blouses"),
    ("shirt", "shirt"),
    ("shorts", "shorts"),
    ("suit", "suit"),
    ("sweater", "sweater"),
    ("kimono", "kimono"),
];

const DETAIL_TEMPLATES: &[&str] = &[
    "the hem is trimmed in {color} ribbon",
    "the collar is lined with {color} braid",
    "cuffs are edged in {color} piping",
    "the bodice carries {color} beadwork",
];

const PLAIN_DETAILS: &[&str] = &[
    "the hem is trimmed in matching ribbon",
    "the collar is lined with soft braid",
    "cuffs are edged in delicate piping",
    "the bodice carries fine beadwork",
];

const NEUTRAL_SENTENCES: &[&str] = &[
    "worn at the spring exhibition",
    "donated by the estate many years ago",
    "shows light wear along the seams",
    "stored folded in acid free tissue",
    "acquired from a private collection",
    "the lining has been replaced once",
];

/// Generates `count` templated descriptions:
/// `<adjective> <color> <material> <work type>. <detail, optionally with a
/// secondary color>. <neutral sentence>.`
pub fn generate_corpus(lexicons: &Lexicons, count: usize, seed: u64) -> Vec<DescriptionRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let color_terms: Vec<(String, String)> = lexicons
        .color
        .terms()
        .map(|(t, g)| (t.to_string(), g.to_string()))
        .collect();
    let mut records = Vec::with_capacity(count);
    for i in 0..count {
        let (color_term, color_group) = color_terms.choose(&mut rng).unwrap().clone();
        let (wt_surface, wt_label) = *WORK_TYPES.choose(&mut rng).unwrap();
        let adjective = ADJECTIVES.choose(&mut rng).unwrap();
        let material = MATERIALS.choose(&mut rng).unwrap();

        let lead = format!("{adjective} {color_term} {material} {wt_surface}.");

        // secondary color from a different group, most of the time
        let detail = if rng.gen_bool(0.6) {
            let secondary = loop {
                let (term, group) = color_terms.choose(&mut rng).unwrap();
                if group != &color_group {
                    break term.clone();
                }
            };
            DETAIL_TEMPLATES
                .choose(&mut rng)
                .unwrap()
                .replace("{color}", &secondary)
        } else {
            PLAIN_DETAILS.choose(&mut rng).unwrap().to_string()
        };

        let neutral = NEUTRAL_SENTENCES.choose(&mut rng).unwrap();

        records.push(DescriptionRecord {
            id: format!("synth-{i:04}"),
            text: format!("{lead} {detail}. {neutral}."),
            color: color_term,
            work_type: wt_label.to_string(),
            gold_color_group: color_group,
        });
    }
    records
}
