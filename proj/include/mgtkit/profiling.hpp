#ifndef MGTKIT_PROFILING_HPP
#define MGTKIT_PROFILING_HPP

#include "mgtkit/conllu.hpp"
#include "mgtkit/features.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace mgtkit {

// Full linguistic profile of a document over the canonical registry.
// Pure and deterministic; undefined features are masked, never errors.
FeatureVector profile_document(const Document& doc);

// Partial extractors. Each fills only its own registry slice of `out`.
void raw_text_features(const Document& doc, FeatureVector& out);
void ttr_features(const Document& doc, FeatureVector& out);
void morphosyntax_features(const Document& doc, FeatureVector& out);
void syntax_features(const Document& doc, FeatureVector& out);

// Mean of per-chunk distinct/N ratios over consecutive full chunks of size n;
// documents shorter than n get a single whole-document ratio.
double chunked_ttr(std::span<const std::string> stream, std::size_t n);

struct ProfiledCorpus {
    std::vector<std::string> doc_ids;       // corpus document order
    std::vector<std::string> prompt_ids;
    std::vector<SourceLabel> labels;
    std::vector<FeatureVector> rows;

    std::size_t index_of(std::string_view doc_id) const;   // throws SchemaError
    const FeatureVector& row(std::string_view doc_id) const;

    bool operator==(const ProfiledCorpus&) const = default;
};

ProfiledCorpus profile_corpus(const Corpus& corpus);

// CSV form: header 'doc_id,<canonical feature names...>', one row per
// document, empty cell = masked.
std::string profiled_to_csv(const ProfiledCorpus& pc);
ProfiledCorpus profiled_from_csv(std::string_view csv);

// JSON-lines form: one object per document with masked features omitted.
std::string profiled_to_jsonl(const ProfiledCorpus& pc);
ProfiledCorpus profiled_from_jsonl(std::string_view jsonl);

// Rows whose label matches, in corpus order.
ProfiledCorpus slice_by_label(const ProfiledCorpus& pc, SourceLabel label);

// Defined values of one feature across all rows.
std::vector<double> feature_column(const ProfiledCorpus& pc, std::size_t feature);

} // namespace mgtkit

#endif
