// Shared selection fixture and the exhaustive-enumeration oracle used by both
// the unit suite and the acceptance suite. The oracle is written directly from
// the documented selection procedure, independent of the library path.
#ifndef MGTKIT_TESTS_SELECTION_ORACLE_HPP
#define MGTKIT_TESTS_SELECTION_ORACLE_HPP

#include "mgtkit/selection.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace testutil {

using namespace mgtkit;

// Self-contained selection fixture: documents, pairs, a profiled matrix with
// hand-set values on the first `n` registry features, and a unit-standardizer
// model with hand-set weights.
struct SelectionFixture {
    std::vector<Document> docs;   // stable storage for the pair pointers
    std::vector<DocPair> pairs;
    ProfiledCorpus profiled;
    LinearModel model;

    SelectionFixture(std::size_t n_pairs, const std::vector<double>& weights,
                     const std::vector<std::vector<double>>& human_vals,
                     const std::vector<std::vector<double>>& machine_vals, double bias = 0.0) {
        const FeatureRegistry& reg = FeatureRegistry::instance();
        std::size_t nf = weights.size();
        docs.reserve(n_pairs * 2);
        for (std::size_t i = 0; i < n_pairs; ++i) {
            std::string prompt = "p" + std::to_string(10 + i);   // sortable
            for (int side = 0; side < 2; ++side) {
                Document d;
                d.doc_id = (side ? "m-" : "h-") + prompt;
                d.prompt_id = prompt;
                d.title = "Title " + prompt;
                d.source_label = side ? SourceLabel::machine : SourceLabel::human;
                d.lineage = {side ? "llama" : "human", side ? 1 : 0, Strategy::base};
                d.raw_text = (side ? "machine text " : "human text ") + prompt;
                docs.push_back(std::move(d));
            }
        }
        for (std::size_t i = 0; i < n_pairs; ++i)
            pairs.push_back(DocPair{&docs[2 * i], &docs[2 * i + 1]});
        for (std::size_t i = 0; i < n_pairs; ++i) {
            for (int side = 0; side < 2; ++side) {
                const Document& d = docs[2 * i + side];
                FeatureVector fv(reg.size());
                const auto& vals = side ? machine_vals[i] : human_vals[i];
                for (std::size_t f = 0; f < nf; ++f) fv.set(f, vals[f]);
                profiled.doc_ids.push_back(d.doc_id);
                profiled.prompt_ids.push_back(d.prompt_id);
                profiled.labels.push_back(d.source_label);
                profiled.rows.push_back(std::move(fv));
            }
        }
        for (std::size_t f = 0; f < nf; ++f) {
            model.standardizer.retained.push_back(f);
            model.standardizer.mean.push_back(0.0);
            model.standardizer.stddev.push_back(1.0);
            model.weights.push_back(weights[f]);
        }
        model.bias = bias;
    }
};

// Enumerates all (pair, feature) distances and applies the documented
// selection rules; returns the expected prompt sequence (and optionally the
// driving feature per emitted pair).
inline std::vector<std::string> enumerate_ling_selection(
    const SelectionFixture& fx, const SelectionConfig& cfg,
    const std::set<std::string>& used_prompts, const std::set<std::string>& used_features,
    const std::set<std::string>& prev_features, bool filter,
    std::vector<std::string>* driving = nullptr) {
    const FeatureRegistry& reg = FeatureRegistry::instance();

    std::vector<std::pair<double, std::string>> ranked;
    for (std::size_t j = 0; j < fx.model.standardizer.retained.size(); ++j)
        ranked.push_back({std::fabs(fx.model.weights[j]),
                          reg.name(fx.model.standardizer.retained[j])});
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<std::string> features;
    for (const auto& [w, name] : ranked) {
        if (used_features.count(name)) continue;
        features.push_back(name);
        if (static_cast<int>(features.size()) == cfg.n_features) break;
    }

    auto zdist = [&](const DocPair& p, const std::string& feature) {
        auto f = reg.index_of(feature);
        const FeatureVector& h = fx.profiled.row(p.human->doc_id);
        const FeatureVector& m = fx.profiled.row(p.machine->doc_id);
        for (std::size_t j = 0; j < fx.model.standardizer.retained.size(); ++j) {
            if (fx.model.standardizer.retained[j] != *f) continue;
            double zh = h.defined(*f) ? (h.value(*f) - fx.model.standardizer.mean[j]) /
                                            fx.model.standardizer.stddev[j]
                                      : 0.0;
            double zm = m.defined(*f) ? (m.value(*f) - fx.model.standardizer.mean[j]) /
                                            fx.model.standardizer.stddev[j]
                                      : 0.0;
            return std::fabs(zh - zm);
        }
        return 0.0;
    };

    std::vector<const DocPair*> pool;
    for (const DocPair& p : fx.pairs) {
        if (used_prompts.count(p.human->prompt_id)) continue;
        if (filter) {
            bool ok = true;
            for (const std::string& prev : prev_features)
                if (zdist(p, prev) > cfg.epsilon) {
                    ok = false;
                    break;
                }
            if (!ok) continue;
        }
        pool.push_back(&p);
    }

    struct Hit {
        const DocPair* pair;
        std::size_t fpos, rank;
        double dist;
    };
    std::map<std::string, Hit> best;
    for (std::size_t fpos = 0; fpos < features.size(); ++fpos) {
        std::vector<std::pair<double, const DocPair*>> scored;
        for (const DocPair* p : pool) scored.push_back({zdist(*p, features[fpos]), p});
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second->human->prompt_id < b.second->human->prompt_id;
        });
        for (std::size_t r = 0; r < scored.size() && r < static_cast<std::size_t>(cfg.k); ++r) {
            const std::string& prompt = scored[r].second->human->prompt_id;
            auto it = best.find(prompt);
            if (it == best.end() || r < it->second.rank ||
                (r == it->second.rank && fpos < it->second.fpos))
                best[prompt] = Hit{scored[r].second, fpos, r, scored[r].first};
        }
    }
    std::vector<Hit> hits;
    for (const auto& [prompt, hit] : best) hits.push_back(hit);
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
        if (a.dist != b.dist) return a.dist > b.dist;
        return a.pair->human->prompt_id < b.pair->human->prompt_id;
    });
    if (cfg.target_size && hits.size() > *cfg.target_size) hits.resize(*cfg.target_size);
    std::vector<std::string> prompts;
    for (const Hit& h : hits) {
        prompts.push_back(h.pair->human->prompt_id);
        if (driving) driving->push_back(features[h.fpos]);
    }
    return prompts;
}

} // namespace testutil

#endif
