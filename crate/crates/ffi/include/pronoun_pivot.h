#ifndef PRONOUN_PIVOT_H
#define PRONOUN_PIVOT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stdint.h>

// Status codes returned by every fallible function.
typedef enum PpStatus {
  PP_STATUS_OK = 0,
  PP_STATUS_NULL_POINTER = 1,
  PP_STATUS_INVALID_UTF8 = 2,
  PP_STATUS_PARSE = 3,
  PP_STATUS_IO = 4,
  PP_STATUS_INVALID_ARGUMENT = 5,
  PP_STATUS_EMPTY_CORPUS = 6,
  PP_STATUS_REMOTE = 7,
  PP_STATUS_PANIC = 8,
} PpStatus;

// Gender label for `pp_inject_tag`.
typedef enum PpLabel {
  // No prediction, or the classifier abstained.
  PP_LABEL_NONE = 0,
  PP_LABEL_MASC = 1,
  PP_LABEL_FEM = 2,
} PpLabel;

// Word-by-word dictionary translator.
typedef struct PpDictionaryTranslator PpDictionaryTranslator;

// Nearest-gendered-word classifier.
typedef struct PpHeuristicClassifier PpHeuristicClassifier;

// IBM Model 1 translation table.
typedef struct PpTranslationTable PpTranslationTable;

// Noise settings for `pp_inject_tag`; see `pp_inject_options_default`.
typedef struct PpInjectOptions {
  double flip_rate;
  double random_tag_rate;
  bool flip_adds_tag;
  uint64_t seed;
} PpInjectOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version, static storage.
const char *pp_version(void);

// Message for the last failed call on this thread, or NULL. Valid until the
// next call into the library on this thread.
const char *pp_last_error(void);

// Releases a string returned by this library. NULL is ignored.
void pp_string_free(char *s);

// Trains `t(target | source)` with EM. `corpus_json` is an array of
// `[source_sentence, target_sentence]` pairs; both sides are tokenized and
// lowercased.
enum PpStatus pp_ttable_train(const char *corpus_json,
                              uint32_t iterations,
                              struct PpTranslationTable **out);

// Reads a table written by `pp_ttable_save` or the CLI.
enum PpStatus pp_ttable_load(const char *path, struct PpTranslationTable **out);

enum PpStatus pp_ttable_save(const struct PpTranslationTable *table, const char *path);

// `t(target | source)`, floored for unseen pairs.
enum PpStatus pp_ttable_prob(const struct PpTranslationTable *table,
                             const char *source,
                             const char *target,
                             double *out);

// Most probable target word for `source`; `*out` is NULL for unknown words.
enum PpStatus pp_ttable_best_target(const struct PpTranslationTable *table,
                                    const char *source,
                                    char **out);

void pp_ttable_free(struct PpTranslationTable *table);

// Intersected Viterbi links between a Spanish and an English sentence, as a
// JSON array of `[es_index, en_index]` over their tokens. `fwd` holds
// `t(en | es)`, `rev` holds `t(es | en)`.
enum PpStatus pp_align_tokens(const struct PpTranslationTable *fwd,
                              const struct PpTranslationTable *rev,
                              const char *es_sentence,
                              const char *en_sentence,
                              char **out);

// Loads an `es<TAB>en` dictionary file.
enum PpStatus pp_dictionary_load(const char *path, struct PpDictionaryTranslator **out);

// Parses `es<TAB>en` lines held in memory.
enum PpStatus pp_dictionary_parse(const char *tsv, struct PpDictionaryTranslator **out);

enum PpStatus pp_dictionary_translate(const struct PpDictionaryTranslator *dict,
                                      const char *sentence,
                                      char **out);

void pp_dictionary_free(struct PpDictionaryTranslator *dict);

// Builds the heuristic classifier from a `word<TAB>MASC|FEM` lexicon file,
// or from the bundled lexicon when `lexicon_path` is NULL.
enum PpStatus pp_heuristic_new(const char *lexicon_path, struct PpHeuristicClassifier **out);

// Classifies one example given as JSON (the `examples.jsonl` record
// format). Writes the prediction as JSON: `{"label", "confidence", "source"}`.
enum PpStatus pp_heuristic_classify(const struct PpHeuristicClassifier *classifier,
                                    const char *example_json,
                                    char **out);

void pp_heuristic_free(struct PpHeuristicClassifier *classifier);

// Decodes masked-LM fills (`[[token, score], ...]`, best first) into a
// prediction JSON.
enum PpStatus pp_decode_mask_fills(const char *fills_json,
                                   uint32_t top_k,
                                   bool ignore_diacritics,
                                   char **out);

// Pronoun slots in a plain Spanish sentence, annotated with the bundled
// lexicons. JSON array of `{"sent_id", "kind", "anchor"}`.
enum PpStatus pp_detect_pronouns(const char *sentence, char **out);

// Defaults matching the library: flip 0.02, random tag 0.05.
struct PpInjectOptions pp_inject_options_default(void);

// Appends `<c> <TAG>` to `sentence` when it has a slot. `train` enables the
// seeded noise in `options` (NULL for defaults).
enum PpStatus pp_inject_tag(const char *sentence,
                            uint64_t sent_id,
                            bool has_slot,
                            enum PpLabel label,
                            bool train,
                            const struct PpInjectOptions *options,
                            char **out);

// Corpus BLEU (0..100) of whitespace-tokenized hypotheses against one
// reference each; both arguments are JSON arrays of strings.
enum PpStatus pp_bleu(const char *hypotheses_json, const char *references_json, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PRONOUN_PIVOT_H */
