//! Appending `<c> <TAG>` gender hints to MT input, with training-time noise.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classify::Prediction;
use crate::corpus::GenderLabel;
use crate::error::{Error, Result};

pub const CONTEXT_TOKEN: &str = "<c>";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InjectMode {
    Train,
    #[default]
    Infer,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InjectOptions {
    pub flip_rate: f64,
    pub random_tag_rate: f64,
    /// Whether a flip may add a random tag to a sentence without a slot, not
    /// only omit the tag from one that has a slot.
    pub flip_adds_tag: bool,
    pub seed: u64,
}

impl Default for InjectOptions {
    fn default() -> Self {
        InjectOptions { flip_rate: 0.02, random_tag_rate: 0.05, flip_adds_tag: true, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InjectOutcome {
    pub text: String,
    pub tag: Option<GenderLabel>,
    pub flipped: bool,
    /// The emitted tag was drawn at random instead of copied.
    pub random_tag: bool,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream for one sentence, so results do not depend on order.
pub fn sentence_rng(seed: u64, sent_id: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(sent_id)))
}

/// Tags `sentence` when it has a target pronoun. In train mode the indicator
/// is flipped with `flip_rate` and the tag replaced by a uniform random label
/// with `random_tag_rate`. Infer mode is noise free.
pub fn inject_tag(
    sentence: &str,
    sent_id: u64,
    has_slot: bool,
    prediction: Option<&Prediction>,
    mode: InjectMode,
    opts: &InjectOptions,
) -> Result<InjectOutcome> {
    if has_slot && mode == InjectMode::Infer && prediction.is_none() {
        return Err(Error::Invalid(format!("sentence {sent_id}: slot without a prediction")));
    }
    let mut rng = sentence_rng(opts.seed, sent_id);
    // Draw everything up front so the stream layout is fixed.
    let flip_draw: f64 = rng.random();
    let tag_draw: f64 = rng.random();
    let random_label = if rng.random::<bool>() { GenderLabel::Fem } else { GenderLabel::Masc };

    let train = mode == InjectMode::Train;
    let flipped = train && flip_draw < opts.flip_rate && (has_slot || opts.flip_adds_tag);
    let indicator = has_slot != flipped;
    let mut random_tag = false;
    let tag = if !indicator {
        None
    } else if !has_slot {
        random_tag = true;
        Some(random_label)
    } else {
        match prediction.and_then(Prediction::label) {
            None => None,
            Some(_) if train && tag_draw < opts.random_tag_rate => {
                random_tag = true;
                Some(random_label)
            }
            Some(l) => Some(l),
        }
    };
    let text = match tag {
        Some(t) => format!("{sentence} {CONTEXT_TOKEN} {}", t.tag()),
        None => sentence.to_string(),
    };
    Ok(InjectOutcome { text, tag, flipped, random_tag })
}

/// Removes a trailing ` <c> <TAG>`, returning the original sentence and tag.
pub fn strip_tag(s: &str) -> (&str, Option<GenderLabel>) {
    for g in GenderLabel::ALL {
        let suffix = format!(" {CONTEXT_TOKEN} {}", g.tag());
        if let Some(rest) = s.strip_suffix(&suffix) {
            return (rest, Some(g));
        }
    }
    (s, None)
}

/// One line of a labels file: empty for no slot, `-` for a slot whose
/// classifier abstained, otherwise a gender label.
pub fn parse_label_line(line: &str, sent_id: u64, source: &str) -> Result<(bool, Option<Prediction>)> {
    match line.trim() {
        "" => Ok((false, None)),
        "-" => Ok((true, Some(Prediction::abstain(source)))),
        l => {
            let g: GenderLabel =
                l.parse().map_err(|_| Error::Record { record: sent_id as usize, msg: format!("bad label {l:?}") })?;
            Ok((true, Some(Prediction::new(g, 1.0, source))))
        }
    }
}

/// Tags a one-sentence-per-line stream. Sentence ids are 1-based line numbers.
pub fn inject_lines<R: BufRead, L: BufRead, W: Write>(
    sentences: R,
    labels: L,
    mode: InjectMode,
    opts: &InjectOptions,
    mut out: W,
) -> Result<Vec<InjectOutcome>> {
    let mut labels = labels.lines();
    let mut outcomes = Vec::new();
    for (i, line) in sentences.lines().enumerate() {
        let line = line?;
        let id = i as u64 + 1;
        let label_line = labels.next().transpose()?.unwrap_or_default();
        let (has_slot, pred) = parse_label_line(&label_line, id, "labels")?;
        let o = inject_tag(&line, id, has_slot, pred.as_ref(), mode, opts)?;
        writeln!(out, "{}", o.text)?;
        outcomes.push(o);
    }
    Ok(outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EXAMPLE: &str =
        "Adquirió fama durante su niñez al participar en el programa de televisión The Mickey Mouse Club (1992).";

    fn fem() -> Prediction {
        Prediction::new(GenderLabel::Fem, 0.9, "test")
    }

    #[test]
    fn tag_follows_the_sentence() {
        let o = inject_tag(EXAMPLE, 1, true, Some(&fem()), InjectMode::Infer, &InjectOptions::default()).unwrap();
        assert_eq!(o.text, format!("{EXAMPLE} <c> <FEM>"));
    }

    #[test]
    fn no_slot_is_unchanged_at_inference() {
        let o = inject_tag(EXAMPLE, 1, false, None, InjectMode::Infer, &InjectOptions::default()).unwrap();
        assert_eq!(o.text, EXAMPLE);
    }

    #[test]
    fn missing_prediction_is_rejected_at_inference() {
        assert!(inject_tag(EXAMPLE, 1, true, None, InjectMode::Infer, &InjectOptions::default()).is_err());
    }

    #[test]
    fn zero_rates_copy_the_prediction() {
        let opts = InjectOptions { flip_rate: 0.0, random_tag_rate: 0.0, ..Default::default() };
        for id in 0..200 {
            let o = inject_tag(EXAMPLE, id, true, Some(&fem()), InjectMode::Train, &opts).unwrap();
            assert_eq!(o.tag, Some(GenderLabel::Fem));
            let o = inject_tag(EXAMPLE, id, false, None, InjectMode::Train, &opts).unwrap();
            assert_eq!(o.text, EXAMPLE);
        }
    }

    #[test]
    fn add_direction_can_be_disabled() {
        let opts = InjectOptions { flip_rate: 1.0, flip_adds_tag: false, ..Default::default() };
        let o = inject_tag(EXAMPLE, 3, false, None, InjectMode::Train, &opts).unwrap();
        assert_eq!(o.text, EXAMPLE);
        let opts = InjectOptions { flip_rate: 1.0, ..Default::default() };
        let o = inject_tag(EXAMPLE, 3, false, None, InjectMode::Train, &opts).unwrap();
        assert!(o.flipped && o.tag.is_some());
    }

    #[test]
    fn lines_round_trip() {
        let sents = "Uno.\nDos.\nTres.\n";
        let labels = "FEM\n\n-\n";
        let mut out = Vec::new();
        inject_lines(sents.as_bytes(), labels.as_bytes(), InjectMode::Infer, &InjectOptions::default(), &mut out)
            .unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "Uno. <c> <FEM>\nDos.\nTres.\n");
    }

    proptest! {
        #[test]
        fn one_final_tag_and_exact_strip(s in "[a-záéíóúñ ,.()0-9]{0,40}", id in any::<u64>(), seed in any::<u64>(), slot in any::<bool>()) {
            let opts = InjectOptions { seed, flip_rate: 0.3, random_tag_rate: 0.3, ..Default::default() };
            let o = inject_tag(&s, id, slot, Some(&fem()), InjectMode::Train, &opts).unwrap();
            let n = o.text.matches(CONTEXT_TOKEN).count();
            prop_assert!(n <= 1);
            let (orig, tag) = strip_tag(&o.text);
            prop_assert_eq!(orig, s.as_str());
            prop_assert_eq!(tag, o.tag);
            prop_assert_eq!(n == 1, o.tag.is_some());
        }

        #[test]
        fn order_independent(ids in proptest::collection::vec(any::<u64>(), 1..20), seed in any::<u64>()) {
            let opts = InjectOptions { seed, flip_rate: 0.5, random_tag_rate: 0.5, ..Default::default() };
            let fwd: Vec<_> = ids.iter().map(|&i| inject_tag("x", i, true, Some(&fem()), InjectMode::Train, &opts).unwrap()).collect();
            let rev: Vec<_> = ids.iter().rev().map(|&i| inject_tag("x", i, true, Some(&fem()), InjectMode::Train, &opts).unwrap()).collect();
            let rev: Vec<_> = rev.into_iter().rev().collect();
            prop_assert_eq!(fwd, rev);
        }
    }
}
