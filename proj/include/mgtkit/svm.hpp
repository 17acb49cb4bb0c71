#ifndef MGTKIT_SVM_HPP
#define MGTKIT_SVM_HPP

#include "mgtkit/features.hpp"
#include "mgtkit/profiling.hpp"

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace mgtkit {

struct SvmHyper {
    double c = 1.0;                 // inverse regularization strength
    int epochs = 200;
    std::uint64_t seed = 0;
    double max_class_ratio = 10.0;  // imbalance guard
    bool allow_imbalance = false;

    bool operator==(const SvmHyper&) const = default;
};

// Frozen z-scoring fitted on the training split. Masked features impute to
// the training mean, i.e. z = 0.
struct Standardizer {
    std::vector<std::size_t> retained;    // registry indices, ascending
    std::vector<double> mean;             // per retained feature
    std::vector<double> stddev;
    std::vector<std::string> dropped;     // zero-variance feature names

    std::vector<double> transform(const FeatureVector& x) const;

    bool operator==(const Standardizer&) const = default;
};

Standardizer fit_standardizer(const ProfiledCorpus& train, const std::set<std::string>& exclude = {});

struct LinearModel {
    Standardizer standardizer;
    std::vector<double> weights;   // aligned with standardizer.retained
    double bias = 0.0;
    SvmHyper hyper;
    std::string corpus_hash;
    double objective = 0.0;        // final primal objective on the training set
    double train_accuracy = 0.0;

    // decision(x) = sum_f w_f * z_f(x) + bias; > 0 means machine.
    double decision(const FeatureVector& x) const;
    double weight_of(std::string_view feature_name) const;   // 0 when not retained

    bool operator==(const LinearModel&) const = default;
};

struct Prediction {
    SourceLabel label;
    double decision;
};

// L2-regularized hinge-loss linear classifier on z-scored features,
// deterministic seeded sub-gradient descent with averaged iterates
// (Pegasos step schedule eta_t = 1/(lambda t), lambda = 1/(C n)).
LinearModel fit_svm(const ProfiledCorpus& train, const SvmHyper& hyper);

Prediction predict(const LinearModel& model, const FeatureVector& x);

struct FeatureRanking {
    // (feature name, |weight|), descending; ties broken by canonical order.
    std::vector<std::pair<std::string, double>> entries;

    std::vector<std::string> top(std::size_t n) const;
};

FeatureRanking rank_features(const LinearModel& model);

struct AblationResult {
    LinearModel model;
    double accuracy_before = 0.0;
    double accuracy_after = 0.0;
    double delta = 0.0;            // after - before
};

// Refit with `drop` removed from the feature set (same hyperparameters and
// seed) and compare accuracy on the evaluation split.
AblationResult ablate_and_refit(const ProfiledCorpus& train, const LinearModel& model,
                                const std::set<std::string>& drop, const ProfiledCorpus& eval);

double model_accuracy(const LinearModel& model, const ProfiledCorpus& data);

std::string model_to_json(const LinearModel& model);
LinearModel model_from_json(std::string_view json_text);

} // namespace mgtkit

#endif
