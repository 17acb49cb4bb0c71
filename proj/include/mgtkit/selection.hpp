#ifndef MGTKIT_SELECTION_HPP
#define MGTKIT_SELECTION_HPP

#include "mgtkit/conllu.hpp"
#include "mgtkit/profiling.hpp"
#include "mgtkit/svm.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace mgtkit {

enum class DatasetPreset { xsum, arxiv_abstracts, custom };
const char* to_string(DatasetPreset p);
std::optional<DatasetPreset> preset_from_string(std::string_view s);

struct SelectionConfig {
    int k = 1000;                       // pairs per feature
    double epsilon = 0.1;               // iteration >= 2 distance filter
    int n_features = 10;
    std::uint64_t seed = 0;
    std::optional<std::size_t> target_size;
    bool raw_distances = false;         // distances on raw values instead of z-scores

    bool operator==(const SelectionConfig&) const = default;
};

SelectionConfig config_for_preset(DatasetPreset p);

struct LedgerEntry {
    int iteration = 0;
    std::set<std::string> prompt_ids;
    std::set<std::string> features;

    bool operator==(const LedgerEntry&) const = default;
};

// Per-strategy record of consumed prompts and features. Commits are
// all-or-nothing; prompt and feature sets stay pairwise disjoint across
// iterations.
class SelectionLedger {
public:
    const std::vector<LedgerEntry>& entries() const { return entries_; }
    bool has_iteration(int iteration) const;
    int max_iteration() const;   // 0 when empty
    std::set<std::string> used_prompts() const;
    std::set<std::string> used_features() const;
    const LedgerEntry* entry_for(int iteration) const;

    void commit(LedgerEntry entry);
    void remove_iteration(int iteration);

    bool operator==(const SelectionLedger&) const = default;

private:
    std::vector<LedgerEntry> entries_;
};

struct PairMeta {
    std::optional<std::string> driving_feature;
    double distance = 0.0;
    int iteration = 0;
    Strategy strategy = Strategy::dpo;
    bool flipped = false;
    std::string prompt_id;
    std::string generator;

    bool operator==(const PairMeta&) const = default;
};

struct PreferencePair {
    std::string title;
    std::string chosen;
    std::string rejected;
    PairMeta meta;

    bool operator==(const PreferencePair&) const = default;
};

struct PreferenceDataset {
    std::vector<PreferencePair> pairs;
    std::string generator;
    int iteration = 0;
    Strategy strategy = Strategy::dpo;
    SelectionConfig config;
};

// Random strategy: uniform seeded sample without replacement from pairs with
// unused prompts (one pair per prompt); HWT is always the chosen text.
PreferenceDataset select_dpo_random(std::span<const DocPair> pairs, const ProfiledCorpus& profiled,
                                    SelectionLedger& ledger, const SelectionConfig& cfg,
                                    int iteration);

// Linguistically informed strategy: top-k pairs per top-ranked SVM feature by
// standardized feature distance, with the iteration >= 2 epsilon filter on
// the previous feature set, cross-feature de-duplication, and the
// misclassification label flip.
PreferenceDataset select_dpo_ling(std::span<const DocPair> pairs, const ProfiledCorpus& profiled,
                                  const LinearModel& model, SelectionLedger& ledger,
                                  const SelectionConfig& cfg, int iteration,
                                  const std::set<std::string>& prev_features,
                                  bool prev_feature_epsilon_filter);

struct PromptTemplates {
    std::string user_template;                          // contains '{title}'
    std::map<std::string, std::string> system_prompts;  // generator -> system prompt
};

PromptTemplates templates_for_preset(DatasetPreset p);
std::string render_prompt(const PromptTemplates& templates, const std::string& generator,
                          const std::string& title);

// JSON-lines with one {prompt, chosen, rejected, meta...} record per pair;
// byte-stable for fixed inputs.
std::string export_preference_jsonl(const PreferenceDataset& ds, const PromptTemplates& templates);
PreferenceDataset import_preference_jsonl(std::string_view jsonl);

// Opaque trainer-facing config: hyperparameter grid, adapter metadata and the
// dataset path. No training happens here.
std::string emit_training_stub(const PreferenceDataset& ds, const std::string& dataset_path,
                               const std::vector<double>& betas = {0.1, 0.5, 1.0},
                               const std::vector<double>& learning_rates = {5e-7, 5e-6});

// Full-fidelity dataset artifact (pairs plus provenance and config).
std::string dataset_to_json(const PreferenceDataset& ds);
PreferenceDataset dataset_from_json(std::string_view text);

std::string ledger_to_json(const SelectionLedger& dpo, const SelectionLedger& dpo_ling);
void ledger_from_json(std::string_view text, SelectionLedger& dpo, SelectionLedger& dpo_ling);

} // namespace mgtkit

#endif
