#include "mgtkit/svm.hpp"
#include "mgtkit/errors.hpp"
#include "mgtkit/util.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

namespace mgtkit {

namespace {

const FeatureRegistry& reg() { return FeatureRegistry::instance(); }

constexpr int kModelSchemaVersion = 1;

} // namespace

std::vector<double> Standardizer::transform(const FeatureVector& x) const {
    if (x.size() != reg().size())
        throw SchemaError("feature vector size " + std::to_string(x.size()) +
                          " does not match registry size " + std::to_string(reg().size()));
    std::vector<double> z(retained.size(), 0.0);
    for (std::size_t j = 0; j < retained.size(); ++j) {
        std::size_t f = retained[j];
        if (!x.defined(f)) continue;   // imputed to the mean -> z stays 0
        z[j] = (x.value(f) - mean[j]) / stddev[j];
    }
    return z;
}

Standardizer fit_standardizer(const ProfiledCorpus& train, const std::set<std::string>& exclude) {
    Standardizer s;
    for (std::size_t f = 0; f < reg().size(); ++f) {
        if (exclude.count(reg().name(f))) continue;
        double sum = 0.0;
        std::size_t n = 0;
        for (const FeatureVector& row : train.rows) {
            if (!row.defined(f)) continue;
            sum += row.value(f);
            ++n;
        }
        if (n == 0) {
            s.dropped.push_back(reg().name(f));
            continue;
        }
        double mean = sum / static_cast<double>(n);
        double var = 0.0;
        for (const FeatureVector& row : train.rows) {
            if (!row.defined(f)) continue;
            double d = row.value(f) - mean;
            var += d * d;
        }
        var /= static_cast<double>(n);   // population variance
        if (var <= 0.0) {
            s.dropped.push_back(reg().name(f));
            continue;
        }
        s.retained.push_back(f);
        s.mean.push_back(mean);
        s.stddev.push_back(std::sqrt(var));
    }
    return s;
}

double LinearModel::decision(const FeatureVector& x) const {
    std::vector<double> z = standardizer.transform(x);
    double d = bias;
    for (std::size_t j = 0; j < weights.size(); ++j) d += weights[j] * z[j];
    return d;
}

double LinearModel::weight_of(std::string_view feature_name) const {
    auto idx = reg().index_of(feature_name);
    if (!idx) return 0.0;
    for (std::size_t j = 0; j < standardizer.retained.size(); ++j)
        if (standardizer.retained[j] == *idx) return weights[j];
    return 0.0;
}

namespace {

LinearModel fit_svm_excluding(const ProfiledCorpus& train, const SvmHyper& hyper,
                              const std::set<std::string>& exclude) {
    std::size_t n = train.rows.size();
    std::size_t n_machine = 0;
    for (SourceLabel l : train.labels)
        if (l == SourceLabel::machine) ++n_machine;
    std::size_t n_human = n - n_machine;
    if (n_human == 0 || n_machine == 0)
        throw TrainingError("training set must contain both classes (human=" +
                            std::to_string(n_human) + ", machine=" + std::to_string(n_machine) + ")");
    double ratio = static_cast<double>(std::max(n_human, n_machine)) /
                   static_cast<double>(std::min(n_human, n_machine));
    if (ratio > hyper.max_class_ratio && !hyper.allow_imbalance)
        throw TrainingError("class imbalance " + fmt_double(ratio) + " exceeds " +
                            fmt_double(hyper.max_class_ratio) + "; pass the imbalance override to proceed");
    if (hyper.c <= 0.0) throw ConfigError("svm: C must be > 0");
    if (hyper.epochs <= 0) throw ConfigError("svm: epochs must be > 0");

    LinearModel model;
    model.hyper = hyper;
    model.standardizer = fit_standardizer(train, exclude);
    const Standardizer& std_ = model.standardizer;
    std::size_t p = std_.retained.size();
    if (p == 0) throw TrainingError("all features have zero variance; nothing to train on");

    std::vector<std::vector<double>> z(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        z[i] = std_.transform(train.rows[i]);
        y[i] = train.labels[i] == SourceLabel::machine ? 1.0 : -1.0;
    }

    // objective: (lambda/2)||w||^2 + mean hinge, lambda = 1/C. Tying lambda to
    // C alone (not to n) keeps the optimum invariant under duplication of the
    // training set, which the ranking-stability contract relies on.
    double lambda = 1.0 / hyper.c;
    std::vector<double> w(p, 0.0), w_avg(p, 0.0);
    double b = 0.0, b_avg = 0.0;
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    DetRng rng(hyper.seed);
    std::uint64_t t = 0;
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t idx : order) {
            ++t;
            double eta = 1.0 / (lambda * static_cast<double>(t));
            const std::vector<double>& x = z[idx];
            double margin = b;
            for (std::size_t j = 0; j < p; ++j) margin += w[j] * x[j];
            margin *= y[idx];
            double shrink = 1.0 - eta * lambda;
            if (margin < 1.0) {
                for (std::size_t j = 0; j < p; ++j) w[j] = shrink * w[j] + eta * y[idx] * x[j];
                b += eta * y[idx];
            } else {
                for (std::size_t j = 0; j < p; ++j) w[j] *= shrink;
            }
            for (std::size_t j = 0; j < p; ++j) w_avg[j] += (w[j] - w_avg[j]) / static_cast<double>(t);
            b_avg += (b - b_avg) / static_cast<double>(t);
        }
    }

    model.weights = std::move(w_avg);
    model.bias = b_avg;

    double hinge = 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = model.bias;
        for (std::size_t j = 0; j < p; ++j) d += model.weights[j] * z[i][j];
        hinge += std::max(0.0, 1.0 - y[i] * d);
        bool machine = d > 0.0;
        if (machine == (train.labels[i] == SourceLabel::machine)) ++correct;
    }
    double w_norm2 = 0.0;
    for (double wj : model.weights) w_norm2 += wj * wj;
    model.objective = 0.5 * lambda * w_norm2 + hinge / static_cast<double>(n);
    model.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);

    std::string hash_input;
    for (std::size_t i = 0; i < n; ++i) {
        hash_input += train.doc_ids[i];
        hash_input += train.labels[i] == SourceLabel::machine ? "\tm" : "\th";
        for (std::size_t f = 0; f < reg().size(); ++f) {
            hash_input += '\t';
            if (train.rows[i].defined(f)) hash_input += fmt_double(train.rows[i].value(f));
        }
        hash_input += '\n';
    }
    model.corpus_hash = sha256_hex(hash_input);
    return model;
}

} // namespace

LinearModel fit_svm(const ProfiledCorpus& train, const SvmHyper& hyper) {
    return fit_svm_excluding(train, hyper, {});
}

Prediction predict(const LinearModel& model, const FeatureVector& x) {
    double d = model.decision(x);
    return Prediction{d > 0.0 ? SourceLabel::machine : SourceLabel::human, d};
}

std::vector<std::string> FeatureRanking::top(std::size_t n) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < entries.size() && i < n; ++i) out.push_back(entries[i].first);
    return out;
}

FeatureRanking rank_features(const LinearModel& model) {
    FeatureRanking ranking;
    for (std::size_t j = 0; j < model.standardizer.retained.size(); ++j)
        ranking.entries.emplace_back(reg().name(model.standardizer.retained[j]),
                                     std::fabs(model.weights[j]));
    // |weight| descending; canonical name order breaks ties (retained indices
    // are ascending, so stable_sort keeps registry order for equal weights)
    std::stable_sort(ranking.entries.begin(), ranking.entries.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    return ranking;
}

double model_accuracy(const LinearModel& model, const ProfiledCorpus& data) {
    if (data.rows.empty()) throw MetricError("cannot compute accuracy on an empty corpus");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.rows.size(); ++i)
        if (predict(model, data.rows[i]).label == data.labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(data.rows.size());
}

AblationResult ablate_and_refit(const ProfiledCorpus& train, const LinearModel& model,
                                const std::set<std::string>& drop, const ProfiledCorpus& eval) {
    std::set<std::string> retained_names;
    for (std::size_t f : model.standardizer.retained) retained_names.insert(reg().name(f));
    for (const std::string& name : drop)
        if (!retained_names.count(name))
            throw ConfigError("ablation: feature '" + name + "' is not retained by the model");
    if (drop.size() == retained_names.size())
        throw TrainingError("ablation would remove every retained feature");

    AblationResult result;
    result.model = fit_svm_excluding(train, model.hyper, drop);
    result.accuracy_before = model_accuracy(model, eval);
    result.accuracy_after = model_accuracy(result.model, eval);
    result.delta = result.accuracy_after - result.accuracy_before;
    return result;
}

std::string model_to_json(const LinearModel& model) {
    nlohmann::json j;
    j["format"] = {{"kind", "linear_model"}, {"version", kModelSchemaVersion}};
    j["registry"] = reg().names();
    nlohmann::json retained = nlohmann::json::array();
    for (std::size_t i = 0; i < model.standardizer.retained.size(); ++i) {
        retained.push_back({{"feature", reg().name(model.standardizer.retained[i])},
                            {"mean", model.standardizer.mean[i]},
                            {"std", model.standardizer.stddev[i]},
                            {"weight", model.weights[i]}});
    }
    j["retained"] = std::move(retained);
    j["dropped"] = model.standardizer.dropped;
    j["bias"] = model.bias;
    j["hyper"] = {{"c", model.hyper.c},
                  {"epochs", model.hyper.epochs},
                  {"seed", model.hyper.seed},
                  {"max_class_ratio", model.hyper.max_class_ratio},
                  {"allow_imbalance", model.hyper.allow_imbalance}};
    j["corpus_hash"] = model.corpus_hash;
    j["objective"] = model.objective;
    j["train_accuracy"] = model.train_accuracy;
    return j.dump(2) + "\n";
}

LinearModel model_from_json(std::string_view json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text, nullptr, false);
    if (j.is_discarded()) throw ParseError("model file: invalid JSON");
    if (!j.contains("format") || j["format"].value("kind", "") != "linear_model")
        throw SchemaError("model file: not a linear_model artifact");
    if (j["format"].value("version", -1) != kModelSchemaVersion)
        throw SchemaError("model file: unsupported schema version");
    std::vector<std::string> registry = j.at("registry").get<std::vector<std::string>>();
    if (registry != reg().names())
        throw SchemaError("model file: feature registry does not match this build");

    LinearModel model;
    for (const auto& entry : j.at("retained")) {
        auto idx = reg().index_of(entry.at("feature").get<std::string>());
        if (!idx) throw SchemaError("model file: unknown retained feature");
        model.standardizer.retained.push_back(*idx);
        model.standardizer.mean.push_back(entry.at("mean").get<double>());
        model.standardizer.stddev.push_back(entry.at("std").get<double>());
        model.weights.push_back(entry.at("weight").get<double>());
    }
    model.standardizer.dropped = j.at("dropped").get<std::vector<std::string>>();
    model.bias = j.at("bias").get<double>();
    model.hyper.c = j.at("hyper").at("c").get<double>();
    model.hyper.epochs = j.at("hyper").at("epochs").get<int>();
    model.hyper.seed = j.at("hyper").at("seed").get<std::uint64_t>();
    model.hyper.max_class_ratio = j.at("hyper").at("max_class_ratio").get<double>();
    model.hyper.allow_imbalance = j.at("hyper").at("allow_imbalance").get<bool>();
    model.corpus_hash = j.at("corpus_hash").get<std::string>();
    model.objective = j.at("objective").get<double>();
    model.train_accuracy = j.at("train_accuracy").get<double>();
    return model;
}

} // namespace mgtkit
