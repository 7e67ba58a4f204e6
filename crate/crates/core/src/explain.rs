//! Local linear surrogates of a classifier around one example, fit on
//! token-deletion perturbations.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::classify::{Classifier, Prediction};
use crate::corpus::{GenderLabel, Token};
use crate::error::{Error, Result};
use crate::extract::PronounExample;
use crate::text;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExplainOptions {
    pub n_samples: usize,
    pub ridge_lambda: f64,
    /// Kernel width as a multiple of `sqrt(feature count)`.
    pub kernel_width: f64,
    pub seed: u64,
}

impl Default for ExplainOptions {
    fn default() -> Self {
        ExplainOptions { n_samples: 1000, ridge_lambda: 1e-3, kernel_width: 0.75, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Explanation {
    pub predicted_class: GenderLabel,
    /// Sorted by absolute weight, largest first.
    pub token_weights: Vec<(String, f64)>,
    pub intercept: f64,
    pub n_samples: usize,
}

/// Keep-masks over `n_features`. Sample 0 keeps everything; the rest keep
/// each feature independently with probability 1/2.
pub fn sample_masks(n_features: usize, n_samples: usize, rng: &mut impl Rng) -> Result<Vec<Vec<bool>>> {
    if n_features == 0 {
        return Err(Error::Invalid("nothing to perturb: no tokens".into()));
    }
    if n_samples == 0 {
        return Err(Error::Invalid("n_samples must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(n_samples);
    out.push(vec![true; n_features]);
    for _ in 1..n_samples {
        out.push((0..n_features).map(|_| rng.random::<bool>()).collect());
    }
    Ok(out)
}

/// Masks paired with the text left after dropping the masked-out tokens.
pub fn perturb<S: AsRef<str>>(tokens: &[S], n_samples: usize, rng: &mut impl Rng) -> Result<Vec<(Vec<bool>, String)>> {
    let masks = sample_masks(tokens.len(), n_samples, rng)?;
    Ok(masks
        .into_iter()
        .map(|m| {
            let kept: Vec<&str> = tokens.iter().zip(&m).filter(|(_, k)| **k).map(|(t, _)| t.as_ref()).collect();
            let s = text::join_tokens(&kept);
            (m, s)
        })
        .collect())
}

/// `exp(-d^2 / sigma^2)` with `d` the number of dropped features.
pub fn kernel_weights(masks: &[Vec<bool>], sigma: f64) -> Vec<f64> {
    masks
        .iter()
        .map(|m| {
            let d = m.iter().filter(|k| !**k).count() as f64;
            (-(d * d) / (sigma * sigma)).exp()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub weights: Vec<f64>,
}

/// Weighted ridge regression with an unpenalized intercept: centers by the
/// weighted means, then solves `(Xc' W Xc + lambda I) b = Xc' W yc`.
pub fn fit_local_linear(
    masks: &[Vec<bool>],
    responses: &[f64],
    sample_weights: &[f64],
    lambda: f64,
) -> Result<LinearFit> {
    let (n, d) = (masks.len(), masks.first().map_or(0, Vec::len));
    if n == 0 || responses.len() != n || sample_weights.len() != n {
        return Err(Error::Invalid(format!(
            "{n} masks, {} responses, {} weights",
            responses.len(),
            sample_weights.len()
        )));
    }
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::Invalid(format!("ridge lambda must be positive, got {lambda}")));
    }
    let wsum: f64 = sample_weights.iter().sum();
    if wsum.is_nan() || wsum <= 0.0 {
        return Err(Error::Invalid("sample weights sum to zero".into()));
    }
    let x = DMatrix::from_fn(n, d, |i, j| if masks[i][j] { 1.0 } else { 0.0 });
    let w = DVector::from_column_slice(sample_weights);
    let y = DVector::from_column_slice(responses);
    let x_mean = (x.transpose() * &w) / wsum;
    let y_mean = w.dot(&y) / wsum;
    let mut xc = x.clone();
    for j in 0..d {
        xc.column_mut(j).add_scalar_mut(-x_mean[j]);
    }
    let yc = y.add_scalar(-y_mean);
    let mut xw = xc.clone();
    for i in 0..n {
        xw.row_mut(i).scale_mut(w[i]);
    }
    let a = xc.transpose() * &xw + DMatrix::identity(d, d) * lambda;
    let b = xw.transpose() * yc;
    let beta = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Invalid("normal equations are not positive definite".into()))?
        .solve(&b);
    let intercept = y_mean - x_mean.dot(&beta);
    Ok(LinearFit { intercept, weights: beta.iter().copied().collect() })
}

/// Residual max-norm of the normal equations for a fit, for diagnostics.
pub fn normal_equation_residual(
    masks: &[Vec<bool>],
    responses: &[f64],
    sample_weights: &[f64],
    lambda: f64,
    fit: &LinearFit,
) -> f64 {
    let d = fit.weights.len();
    let mut worst: f64 = 0.0;
    // Gradient of the penalized weighted loss in the centered variables.
    let wsum: f64 = sample_weights.iter().sum();
    let xm: Vec<f64> = (0..d)
        .map(|j| masks.iter().zip(sample_weights).map(|(m, w)| w * f64::from(u8::from(m[j]))).sum::<f64>() / wsum)
        .collect();
    for j in 0..d {
        let mut g = lambda * fit.weights[j];
        for ((m, &y), &w) in masks.iter().zip(responses).zip(sample_weights) {
            let pred = fit.intercept + (0..d).map(|k| fit.weights[k] * f64::from(u8::from(m[k]))).sum::<f64>();
            g -= w * (f64::from(u8::from(m[j])) - xm[j]) * (y - pred);
        }
        worst = worst.max(g.abs());
    }
    worst
}

/// Fits a surrogate to `score` over seeded masks of `features`. Returns the
/// fit and the masks used.
pub fn explain_with<F>(n_features: usize, opts: &ExplainOptions, score: F) -> Result<(LinearFit, Vec<Vec<bool>>)>
where
    F: Fn(&[bool]) -> Result<f64> + Sync,
{
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let masks = sample_masks(n_features, opts.n_samples, &mut rng)?;
    let responses: Vec<f64> = masks.par_iter().map(|m| score(m)).collect::<Result<_>>()?;
    let sigma = opts.kernel_width * (n_features as f64).sqrt();
    let weights = kernel_weights(&masks, sigma);
    let fit = fit_local_linear(&masks, &responses, &weights, opts.ridge_lambda)?;
    Ok((fit, masks))
}

/// Where a feature token sits: context sentence `seg` (or the target when
/// `seg == context_sentences.len()`), token `idx` within it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Feature {
    seg: usize,
    idx: usize,
}

struct Segments {
    texts: Vec<String>,
    tokens: Vec<Vec<Token>>,
    features: Vec<Feature>,
}

fn segments(example: &PronounExample) -> Segments {
    let mut texts = example.context_sentences.clone();
    texts.push(example.target_sentence.clone());
    let tokens: Vec<Vec<Token>> = texts.iter().map(|t| text::tokenize(t)).collect();
    let target = texts.len() - 1;
    let features = tokens
        .iter()
        .enumerate()
        .flat_map(|(seg, toks)| {
            toks.iter()
                .enumerate()
                .filter(move |(idx, t)| {
                    !(seg == target && *idx == example.anchor_index) && !text::is_punct_token(&t.surface)
                })
                .map(move |(idx, _)| Feature { seg, idx })
        })
        .collect();
    Segments { texts, tokens, features }
}

/// Rebuilds `text` from the kept tokens, with a space before each one that
/// followed whitespace in the original.
fn rebuild(text: &str, tokens: &[Token], keep: &[bool]) -> (String, Vec<Option<usize>>) {
    let mut out = String::new();
    let mut map = vec![None; tokens.len()];
    let mut n = 0;
    for (i, t) in tokens.iter().enumerate() {
        if !keep[i] {
            continue;
        }
        if n > 0 && text[..t.char_span.start].ends_with(char::is_whitespace) {
            out.push(' ');
        }
        out.push_str(&text[t.char_span.start..t.char_span.end]);
        map[i] = Some(n);
        n += 1;
    }
    (out, map)
}

fn perturbed_example(example: &PronounExample, segs: &Segments, mask: &[bool]) -> PronounExample {
    if mask.iter().all(|k| *k) {
        return example.clone();
    }
    let mut keep: Vec<Vec<bool>> = segs.tokens.iter().map(|t| vec![true; t.len()]).collect();
    for (f, &k) in segs.features.iter().zip(mask) {
        keep[f.seg][f.idx] = k;
    }
    let target = segs.texts.len() - 1;
    let mut context = Vec::new();
    let mut out = example.clone();
    for (seg, kept) in keep.iter().enumerate() {
        let (s, map) = rebuild(&segs.texts[seg], &segs.tokens[seg], kept);
        if seg == target {
            out.target_sentence = s;
            out.anchor_index = map[example.anchor_index].expect("anchor is never masked");
        } else if !s.is_empty() {
            context.push(s);
        }
    }
    out.context_sentences = context;
    out
}

fn response(pred: &Prediction, class: GenderLabel) -> f64 {
    match (pred.label(), pred.confidence()) {
        (Some(l), Some(c)) if l == class => c,
        (Some(_), Some(c)) => 1.0 - c,
        _ => 0.5,
    }
}

/// Explains `classifier`'s decision on `example` with one weight per
/// non-punctuation token other than the anchor.
pub fn explain(classifier: &dyn Classifier, example: &PronounExample, opts: &ExplainOptions) -> Result<Explanation> {
    let base = classifier.classify(example)?;
    let class = base.label().ok_or(Error::NothingToExplain)?;
    let segs = segments(example);
    let (fit, _) = explain_with(segs.features.len(), opts, |mask| {
        let p = classifier.classify(&perturbed_example(example, &segs, mask))?;
        Ok(response(&p, class))
    })?;
    let mut token_weights: Vec<(String, f64)> =
        segs.features.iter().zip(&fit.weights).map(|(f, &w)| (segs.tokens[f.seg][f.idx].surface.clone(), w)).collect();
    token_weights.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
    Ok(Explanation { predicted_class: class, token_weights, intercept: fit.intercept, n_samples: opts.n_samples })
}

impl Explanation {
    /// `{"predicted_class": ..., "weights": [[token, weight], ...]}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "predicted_class": self.predicted_class,
            "weights": self.token_weights.iter().map(|(t, w)| serde_json::json!([t, w])).collect::<Vec<_>>(),
        })
    }
}
