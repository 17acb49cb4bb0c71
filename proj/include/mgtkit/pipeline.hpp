#ifndef MGTKIT_PIPELINE_HPP
#define MGTKIT_PIPELINE_HPP

#include "mgtkit/divergence.hpp"
#include "mgtkit/selection.hpp"
#include "mgtkit/svm.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mgtkit {

// Resolved configuration for a pipeline iteration. The seed is mandatory and
// feeds both the detector and the selection unless they set their own.
struct PipelineOptions {
    std::filesystem::path hwt_conllu;
    std::filesystem::path hwt_sidecar;
    std::filesystem::path mgt_conllu;
    std::filesystem::path mgt_sidecar;
    DatasetPreset preset = DatasetPreset::custom;
    SelectionConfig selection;
    SvmHyper svm;
    HistogramSpec histogram;
    std::optional<std::uint64_t> seed;
    int iteration = 1;
    bool force = false;
};

PipelineOptions options_from_config_file(const std::filesystem::path& path);

// Every command stages its outputs in a hidden sibling directory and renames
// it over the target on success, so failures leave nothing behind. The
// manifest lists the resolved config plus a SHA-256 digest per input and
// artifact.
class ArtifactStore {
public:
    ArtifactStore(std::filesystem::path target, std::string command);
    ~ArtifactStore();
    ArtifactStore(const ArtifactStore&) = delete;
    ArtifactStore& operator=(const ArtifactStore&) = delete;

    void add(const std::string& rel_path, std::string_view content);
    void add_input(const std::filesystem::path& path);
    void set_config(std::string config_json);

    // Writes manifest.json and renames the staging directory over the target.
    std::filesystem::path commit(bool overwrite = true);

private:
    std::filesystem::path target_;
    std::filesystem::path staging_;
    std::string command_;
    std::string config_json_;
    std::vector<std::pair<std::string, std::string>> inputs_;      // path, digest
    std::vector<std::pair<std::string, std::string>> artifacts_;   // rel path, digest
    bool committed_ = false;
};

// Exclusive per-directory lock (O_EXCL lock file, removed on destruction).
class DirLock {
public:
    explicit DirLock(const std::filesystem::path& lock_path);
    ~DirLock();
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    std::filesystem::path path_;
};

// ---- commands (each returns the committed output directory) ----

std::filesystem::path cmd_ingest(const std::filesystem::path& conllu,
                                 const std::filesystem::path& sidecar,
                                 const std::filesystem::path& out);

std::filesystem::path cmd_profile(const std::filesystem::path& conllu,
                                  const std::filesystem::path& sidecar,
                                  const std::filesystem::path& out);

std::filesystem::path cmd_train_detector(const std::vector<std::filesystem::path>& features_csvs,
                                         const SvmHyper& hyper, const std::filesystem::path& out);

std::filesystem::path cmd_rank_features(const std::filesystem::path& model_json, std::size_t top_n,
                                        const std::filesystem::path& out);

std::filesystem::path cmd_evaluate(const std::filesystem::path& scores_tsv,
                                   const std::filesystem::path& sidecar,
                                   const std::vector<double>& fpr_targets, double threshold,
                                   const std::filesystem::path& out);

std::filesystem::path cmd_select_pairs(const PipelineOptions& opts,
                                       const std::filesystem::path& model_json,
                                       const std::filesystem::path& ledger_path,
                                       const std::filesystem::path& out);

std::filesystem::path cmd_export_dpo(const std::filesystem::path& dataset_json, DatasetPreset preset,
                                     const std::filesystem::path& out);

std::filesystem::path cmd_prompts(const std::filesystem::path& titles_file, DatasetPreset preset,
                                  const std::vector<std::string>& generators,
                                  const std::filesystem::path& out);

std::filesystem::path cmd_analyze_js(const std::filesystem::path& hwt_csv,
                                     const std::filesystem::path& mgt_csv,
                                     const std::vector<std::string>& features,
                                     const HistogramSpec& spec, const std::filesystem::path& out);

std::filesystem::path cmd_manova(const std::filesystem::path& features_csv,
                                 const std::vector<std::string>& features,
                                 const std::filesystem::path& out);

std::filesystem::path cmd_human_eval(const std::filesystem::path& ratings_csv,
                                     const std::filesystem::path& out);

struct ReportInputs {
    std::optional<std::filesystem::path> hwt_csv;
    std::vector<std::pair<std::string, std::filesystem::path>> variants;   // name, features csv
    std::vector<std::string> features;
    std::vector<std::filesystem::path> eval_jsons;
    std::vector<std::pair<std::string, std::filesystem::path>> tables;     // name, metric-table csv
    HistogramSpec spec;
};

std::filesystem::path cmd_report(const ReportInputs& inputs, const std::filesystem::path& out);

// Algorithm steps 4-6 over files: profile both corpora, train and evaluate
// the SVM, rank features, build both preference datasets, export them, update
// the ledger. Artifacts land in <out_root>/iter-<N>/.
std::filesystem::path cmd_run_iteration(const PipelineOptions& opts,
                                        const std::filesystem::path& out_root);

} // namespace mgtkit

#endif
