#ifndef MGTKIT_METRICS_HPP
#define MGTKIT_METRICS_HPP

#include "mgtkit/conllu.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mgtkit {

// One detector score for one document; higher score = more machine-like.
// Machine is the positive class throughout.
struct ScoredPrediction {
    std::string doc_id;
    SourceLabel truth = SourceLabel::human;
    double score = 0.0;
    std::optional<SourceLabel> predicted;   // derived from threshold when absent
    std::string detector_id;
};

struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

ConfusionCounts confusion(std::span<const ScoredPrediction> preds, double threshold = 0.0);

// Unweighted mean of per-class F1 (empty predicted class scores 0).
double macro_f1(std::span<const ScoredPrediction> preds, double threshold = 0.0);
double accuracy(std::span<const ScoredPrediction> preds, double threshold = 0.0);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

// Monotone staircase from (0,0) to (1,1); equal scores collapse into one
// threshold.
std::vector<RocPoint> roc_points(std::span<const ScoredPrediction> preds);

double roc_auc(std::span<const RocPoint> points);

// For each target, the TPR at the threshold with the largest FPR <= target
// (no interpolation).
std::map<double, double> tpr_at_fpr(std::span<const ScoredPrediction> preds,
                                    const std::vector<double>& fpr_targets);

struct DetectorEval {
    std::string detector_id;
    ConfusionCounts counts;
    double macro_f1 = 0.0;
    double accuracy = 0.0;
    std::vector<RocPoint> roc;
    std::map<double, double> tpr_at_fpr;
};

DetectorEval evaluate_detector(std::span<const ScoredPrediction> preds,
                               const std::vector<double>& fpr_targets = {0.01, 0.05},
                               double threshold = 0.0);

// Score file interface for external detectors: TSV with header
// 'doc_id<TAB>detector_id<TAB>score[<TAB>predicted_label]'. Truth labels are
// joined from the given map.
std::vector<ScoredPrediction> parse_score_tsv(std::string_view tsv,
                                              const std::map<std::string, SourceLabel>& truth);
std::string score_tsv(std::span<const ScoredPrediction> preds);

// ----- human evaluation -----

struct RatingChoice {
    std::string rater_id;
    char choice = 'A';   // 'A' or 'B'
};

struct RatingItem {
    std::string pair_id;
    std::vector<RatingChoice> choices;
    char gold = 'A';
};

struct RatingSet {
    std::vector<RatingItem> items;
};

struct RatingReport {
    std::vector<std::pair<std::string, double>> per_rater_accuracy;   // sorted by rater_id
    double majority_accuracy = 0.0;   // ties count as incorrect
    double fleiss_kappa = 0.0;
    std::size_t n_items = 0;
    std::size_t raters_per_item = 0;
};

RatingReport aggregate_ratings(const RatingSet& ratings);

// CSV with header 'pair_id,rater_id,choice,gold'.
RatingSet parse_ratings_csv(std::string_view csv);

} // namespace mgtkit

#endif
