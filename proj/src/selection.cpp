#include "mgtkit/selection.hpp"
#include "mgtkit/errors.hpp"
#include "mgtkit/util.hpp"

#include <algorithm>
#include <json.hpp>

namespace mgtkit {

const char* to_string(DatasetPreset p) {
    switch (p) {
        case DatasetPreset::xsum: return "xsum";
        case DatasetPreset::arxiv_abstracts: return "arxiv_abstracts";
        case DatasetPreset::custom: return "custom";
    }
    return "custom";
}

std::optional<DatasetPreset> preset_from_string(std::string_view s) {
    if (s == "xsum") return DatasetPreset::xsum;
    if (s == "arxiv_abstracts" || s == "arxiv") return DatasetPreset::arxiv_abstracts;
    if (s == "custom") return DatasetPreset::custom;
    return std::nullopt;
}

SelectionConfig config_for_preset(DatasetPreset p) {
    SelectionConfig cfg;
    cfg.k = 1000;
    cfg.n_features = 10;
    cfg.epsilon = p == DatasetPreset::arxiv_abstracts ? 0.2 : 0.1;
    return cfg;
}

bool SelectionLedger::has_iteration(int iteration) const {
    return entry_for(iteration) != nullptr;
}

int SelectionLedger::max_iteration() const {
    int best = 0;
    for (const LedgerEntry& e : entries_) best = std::max(best, e.iteration);
    return best;
}

std::set<std::string> SelectionLedger::used_prompts() const {
    std::set<std::string> out;
    for (const LedgerEntry& e : entries_) out.insert(e.prompt_ids.begin(), e.prompt_ids.end());
    return out;
}

std::set<std::string> SelectionLedger::used_features() const {
    std::set<std::string> out;
    for (const LedgerEntry& e : entries_) out.insert(e.features.begin(), e.features.end());
    return out;
}

const LedgerEntry* SelectionLedger::entry_for(int iteration) const {
    for (const LedgerEntry& e : entries_)
        if (e.iteration == iteration) return &e;
    return nullptr;
}

void SelectionLedger::commit(LedgerEntry entry) {
    if (has_iteration(entry.iteration))
        throw ConflictError("ledger already has iteration " + std::to_string(entry.iteration));
    std::set<std::string> prompts = used_prompts();
    for (const std::string& p : entry.prompt_ids)
        if (prompts.count(p))
            throw ConflictError("ledger: prompt '" + p + "' already consumed by an earlier iteration");
    std::set<std::string> features = used_features();
    for (const std::string& f : entry.features)
        if (features.count(f))
            throw ConflictError("ledger: feature '" + f + "' already consumed by an earlier iteration");
    entries_.push_back(std::move(entry));
    std::sort(entries_.begin(), entries_.end(),
              [](const LedgerEntry& a, const LedgerEntry& b) { return a.iteration < b.iteration; });
}

void SelectionLedger::remove_iteration(int iteration) {
    entries_.erase(std::remove_if(entries_.begin(), entries_.end(),
                                  [&](const LedgerEntry& e) { return e.iteration == iteration; }),
                   entries_.end());
}

namespace {

const FeatureRegistry& reg() { return FeatureRegistry::instance(); }

std::string dataset_generator(std::span<const DocPair> pairs) {
    std::string generator;
    for (const DocPair& p : pairs) {
        if (generator.empty())
            generator = p.machine->lineage.generator;
        else if (generator != p.machine->lineage.generator)
            return "mixed";
    }
    return generator;
}

// Candidate pair with its standardized (or raw) per-feature distances.
struct Candidate {
    const DocPair* pair = nullptr;
    std::vector<double> z_human, z_machine;   // retained-feature space
};

double candidate_distance(const Candidate& c, const LinearModel& model, std::size_t feature_idx,
                          const ProfiledCorpus& profiled, const SelectionConfig& cfg) {
    if (cfg.raw_distances) {
        const FeatureVector& h = profiled.row(c.pair->human->doc_id);
        const FeatureVector& m = profiled.row(c.pair->machine->doc_id);
        if (!h.defined(feature_idx) || !m.defined(feature_idx)) return 0.0;
        return std::fabs(h.value(feature_idx) - m.value(feature_idx));
    }
    const auto& retained = model.standardizer.retained;
    for (std::size_t j = 0; j < retained.size(); ++j)
        if (retained[j] == feature_idx) return std::fabs(c.z_human[j] - c.z_machine[j]);
    return 0.0;   // feature dropped as zero-variance: all values coincide
}

} // namespace

PreferenceDataset select_dpo_random(std::span<const DocPair> pairs, const ProfiledCorpus& profiled,
                                    SelectionLedger& ledger, const SelectionConfig& cfg,
                                    int iteration) {
    (void)profiled;
    if (!cfg.target_size)
        throw ConfigError("dpo random selection requires target_size");
    std::set<std::string> used = ledger.used_prompts();
    std::vector<const DocPair*> pool;
    std::set<std::string> available_prompts;
    for (const DocPair& p : pairs) {
        if (used.count(p.human->prompt_id)) continue;
        pool.push_back(&p);
        available_prompts.insert(p.human->prompt_id);
    }
    if (*cfg.target_size > available_prompts.size())
        throw CapacityError("dpo random selection: requested " + std::to_string(*cfg.target_size) +
                            " pairs but only " + std::to_string(available_prompts.size()) +
                            " unused prompts remain (shortfall " +
                            std::to_string(*cfg.target_size - available_prompts.size()) + ")");

    DetRng rng(cfg.seed);
    rng.shuffle(pool);

    PreferenceDataset ds;
    ds.iteration = iteration;
    ds.strategy = Strategy::dpo;
    ds.config = cfg;
    ds.generator = dataset_generator(pairs);
    LedgerEntry entry;
    entry.iteration = iteration;
    std::set<std::string> taken;
    for (const DocPair* p : pool) {
        if (ds.pairs.size() == *cfg.target_size) break;
        if (taken.count(p->human->prompt_id)) continue;   // one pair per prompt
        taken.insert(p->human->prompt_id);
        PreferencePair pp;
        pp.title = p->human->title;
        pp.chosen = p->human->raw_text;
        pp.rejected = p->machine->raw_text;
        pp.meta.iteration = iteration;
        pp.meta.strategy = Strategy::dpo;
        pp.meta.flipped = false;
        pp.meta.prompt_id = p->human->prompt_id;
        pp.meta.generator = p->machine->lineage.generator;
        ds.pairs.push_back(std::move(pp));
    }
    entry.prompt_ids = std::move(taken);
    ledger.commit(std::move(entry));
    return ds;
}

PreferenceDataset select_dpo_ling(std::span<const DocPair> pairs, const ProfiledCorpus& profiled,
                                  const LinearModel& model, SelectionLedger& ledger,
                                  const SelectionConfig& cfg, int iteration,
                                  const std::set<std::string>& prev_features,
                                  bool prev_feature_epsilon_filter) {
    if (cfg.k <= 0) throw ConfigError("selection: k must be > 0");
    if (cfg.n_features <= 0) throw ConfigError("selection: n_features must be > 0");
    if (cfg.epsilon < 0.0) throw ConfigError("selection: epsilon must be >= 0");

    // 1. top-ranked features not yet consumed
    std::set<std::string> used_features = ledger.used_features();
    FeatureRanking ranking = rank_features(model);
    std::vector<std::string> features;
    for (const auto& [name, weight] : ranking.entries) {
        if (used_features.count(name)) continue;
        features.push_back(name);
        if (features.size() == static_cast<std::size_t>(cfg.n_features)) break;
    }
    if (features.size() < static_cast<std::size_t>(cfg.n_features))
        throw SelectionError("feature exhaustion: only " + std::to_string(features.size()) +
                             " unused ranked features remain, need " + std::to_string(cfg.n_features));
    std::vector<std::size_t> feature_idx;
    for (const std::string& name : features) feature_idx.push_back(*reg().index_of(name));

    // 2. candidate pool: unused prompts, then the previous-iteration filter
    std::set<std::string> used_prompts = ledger.used_prompts();
    std::vector<Candidate> candidates;
    std::size_t pool_before_filter = 0;
    for (const DocPair& p : pairs) {
        if (used_prompts.count(p.human->prompt_id)) continue;
        ++pool_before_filter;
        Candidate c;
        c.pair = &p;
        c.z_human = model.standardizer.transform(profiled.row(p.human->doc_id));
        c.z_machine = model.standardizer.transform(profiled.row(p.machine->doc_id));
        if (prev_feature_epsilon_filter) {
            bool keep = true;
            for (const std::string& prev : prev_features) {
                auto idx = reg().resolve(prev);
                if (!idx) throw SchemaError("epsilon filter: unknown feature '" + prev + "'");
                // boundary is inclusive: |distance| = epsilon is retained
                if (candidate_distance(c, model, *idx, profiled, cfg) > cfg.epsilon) {
                    keep = false;
                    break;
                }
            }
            if (!keep) continue;
        }
        candidates.push_back(std::move(c));
    }
    if (candidates.empty())
        throw SelectionError("epsilon filter too strict: 0 of " + std::to_string(pool_before_filter) +
                             " unused pairs satisfy |distance| <= " + fmt_double(cfg.epsilon) +
                             " on the previous feature set");

    // 3.-4. per-feature top-k by distance, then cross-feature de-duplication.
    // A pair (and its prompt) is emitted once, attributed to the feature where
    // it ranked best; rank ties resolve to the higher-ranked feature.
    struct Selected {
        const DocPair* pair;
        std::size_t feature_pos;   // position in `features`
        std::size_t rank;          // 0-based rank within that feature's top-k
        double distance;
    };
    std::map<std::string, Selected> by_prompt;   // prompt_id -> best selection
    for (std::size_t fpos = 0; fpos < features.size(); ++fpos) {
        std::vector<std::pair<double, const Candidate*>> scored;
        scored.reserve(candidates.size());
        for (const Candidate& c : candidates)
            scored.emplace_back(candidate_distance(c, model, feature_idx[fpos], profiled, cfg), &c);
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second->pair->human->prompt_id < b.second->pair->human->prompt_id;
        });
        std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(cfg.k), scored.size());
        for (std::size_t r = 0; r < take; ++r) {
            const auto& [distance, cand] = scored[r];
            const std::string& prompt = cand->pair->human->prompt_id;
            auto it = by_prompt.find(prompt);
            bool better = it == by_prompt.end() || r < it->second.rank ||
                          (r == it->second.rank && fpos < it->second.feature_pos);
            if (better) by_prompt[prompt] = Selected{cand->pair, fpos, r, distance};
        }
    }

    std::vector<Selected> selected;
    selected.reserve(by_prompt.size());
    for (const auto& [prompt, sel] : by_prompt) selected.push_back(sel);
    // output order and truncation: distance descending, prompt_id ascending
    std::sort(selected.begin(), selected.end(), [](const Selected& a, const Selected& b) {
        if (a.distance != b.distance) return a.distance > b.distance;
        return a.pair->human->prompt_id < b.pair->human->prompt_id;
    });
    if (cfg.target_size && selected.size() > *cfg.target_size)
        selected.resize(*cfg.target_size);

    // 5. preference labels with the two-sided misclassification flip
    PreferenceDataset ds;
    ds.iteration = iteration;
    ds.strategy = Strategy::dpo_ling;
    ds.config = cfg;
    ds.generator = dataset_generator(pairs);
    LedgerEntry entry;
    entry.iteration = iteration;
    entry.features.insert(features.begin(), features.end());
    for (const Selected& sel : selected) {
        const Document* human = sel.pair->human;
        const Document* machine = sel.pair->machine;
        bool flip = predict(model, profiled.row(machine->doc_id)).label == SourceLabel::human &&
                    predict(model, profiled.row(human->doc_id)).label == SourceLabel::machine;
        PreferencePair pp;
        pp.title = human->title;
        pp.chosen = flip ? machine->raw_text : human->raw_text;
        pp.rejected = flip ? human->raw_text : machine->raw_text;
        pp.meta.driving_feature = features[sel.feature_pos];
        pp.meta.distance = sel.distance;
        pp.meta.iteration = iteration;
        pp.meta.strategy = Strategy::dpo_ling;
        pp.meta.flipped = flip;
        pp.meta.prompt_id = human->prompt_id;
        pp.meta.generator = machine->lineage.generator;
        ds.pairs.push_back(std::move(pp));
        entry.prompt_ids.insert(human->prompt_id);
    }
    ledger.commit(std::move(entry));
    return ds;
}

PromptTemplates templates_for_preset(DatasetPreset p) {
    PromptTemplates t;
    switch (p) {
        case DatasetPreset::xsum:
        case DatasetPreset::custom:
            t.user_template =
                "Write a piece of news, that will appear in a national newspapers in the UK and "
                "that has the following title: {title}. In writing avoid any kind of formatting, "
                "do not repeat the title and keep the text informative and not vague. You don't "
                "have to add the date of the event but you can, use at most 500 words.";
            t.system_prompts["llama"] =
                "You are a journalist from the United Kingdom writing for a national newspaper on "
                "a broad range of topics.";
            break;
        case DatasetPreset::arxiv_abstracts:
            t.user_template =
                "Write an abstract for a scientific paper that has the following title: {title}. "
                "Don't use any formatting and do not repeat the title and use at most 500 words.";
            t.system_prompts["llama"] = "You are a university professor working in the academic field.";
            break;
    }
    // gemma runs without a system prompt
    return t;
}

std::string render_prompt(const PromptTemplates& templates, const std::string& generator,
                          const std::string& title) {
    if (title.empty()) throw TemplateError("cannot render a prompt for an empty title");
    const std::string placeholder = "{title}";
    std::size_t pos = templates.user_template.find(placeholder);
    if (pos == std::string::npos)
        throw TemplateError("user template has no '{title}' placeholder");
    std::string user = templates.user_template;
    while (pos != std::string::npos) {
        user.replace(pos, placeholder.size(), title);
        pos = user.find(placeholder, pos + title.size());
    }
    auto it = templates.system_prompts.find(generator);
    if (it == templates.system_prompts.end() || it->second.empty()) return user;
    return it->second + "\n\n" + user;
}

std::string export_preference_jsonl(const PreferenceDataset& ds, const PromptTemplates& templates) {
    std::string out;
    for (const PreferencePair& pp : ds.pairs) {
        nlohmann::json j;
        j["prompt"] = render_prompt(templates, pp.meta.generator, pp.title);
        j["chosen"] = pp.chosen;
        j["rejected"] = pp.rejected;
        nlohmann::json meta;
        meta["title"] = pp.title;
        meta["prompt_id"] = pp.meta.prompt_id;
        meta["iteration"] = pp.meta.iteration;
        meta["strategy"] = to_string(pp.meta.strategy);
        meta["flipped"] = pp.meta.flipped;
        meta["distance"] = pp.meta.distance;
        meta["generator"] = pp.meta.generator;
        if (pp.meta.driving_feature) meta["driving_feature"] = *pp.meta.driving_feature;
        j["meta"] = std::move(meta);
        out += j.dump();
        out += '\n';
    }
    return out;
}

PreferenceDataset import_preference_jsonl(std::string_view jsonl) {
    PreferenceDataset ds;
    std::size_t ln = 0;
    for (const std::string& raw : split(jsonl, '\n')) {
        ++ln;
        if (trim(raw).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(raw, nullptr, false);
        if (j.is_discarded())
            throw ParseError("preference JSONL line " + std::to_string(ln) + ": invalid JSON");
        PreferencePair pp;
        pp.chosen = j.at("chosen").get<std::string>();
        pp.rejected = j.at("rejected").get<std::string>();
        const nlohmann::json& meta = j.at("meta");
        pp.title = meta.at("title").get<std::string>();
        pp.meta.prompt_id = meta.at("prompt_id").get<std::string>();
        pp.meta.iteration = meta.at("iteration").get<int>();
        auto strategy = strategy_from_string(meta.at("strategy").get<std::string>());
        if (!strategy)
            throw ParseError("preference JSONL line " + std::to_string(ln) + ": bad strategy");
        pp.meta.strategy = *strategy;
        pp.meta.flipped = meta.at("flipped").get<bool>();
        pp.meta.distance = meta.at("distance").get<double>();
        pp.meta.generator = meta.at("generator").get<std::string>();
        if (meta.contains("driving_feature"))
            pp.meta.driving_feature = meta["driving_feature"].get<std::string>();
        ds.pairs.push_back(std::move(pp));
    }
    if (!ds.pairs.empty()) {
        ds.iteration = ds.pairs[0].meta.iteration;
        ds.strategy = ds.pairs[0].meta.strategy;
        std::set<std::string> generators;
        for (const PreferencePair& pp : ds.pairs) generators.insert(pp.meta.generator);
        ds.generator = generators.size() == 1 ? *generators.begin() : "mixed";
    }
    return ds;
}

std::string emit_training_stub(const PreferenceDataset& ds, const std::string& dataset_path,
                               const std::vector<double>& betas,
                               const std::vector<double>& learning_rates) {
    nlohmann::json j;
    j["format"] = {{"kind", "dpo_training_stub"}, {"version", 1}};
    j["dataset_path"] = dataset_path;
    j["n_pairs"] = ds.pairs.size();
    j["strategy"] = to_string(ds.strategy);
    j["iteration"] = ds.iteration;
    j["generator"] = ds.generator;
    nlohmann::json grid = nlohmann::json::array();
    for (double beta : betas)
        for (double lr : learning_rates) grid.push_back({{"beta", beta}, {"learning_rate", lr}});
    j["grid"] = std::move(grid);
    j["lora"] = {{"r", 32},
                 {"lora_alpha", 16},
                 {"lora_dropout", 0.05},
                 {"bias", "none"},
                 {"task_type", "CAUSAL_LM"},
                 {"target_modules",
                  {"q_proj", "k_proj", "v_proj", "o_proj", "gate_proj", "up_proj", "down_proj"}}};
    return j.dump(2) + "\n";
}

namespace {

nlohmann::json config_to_json(const SelectionConfig& cfg) {
    nlohmann::json j;
    j["k"] = cfg.k;
    j["epsilon"] = cfg.epsilon;
    j["n_features"] = cfg.n_features;
    j["seed"] = cfg.seed;
    if (cfg.target_size) j["target_size"] = *cfg.target_size;
    j["raw_distances"] = cfg.raw_distances;
    return j;
}

SelectionConfig config_from_json(const nlohmann::json& j) {
    SelectionConfig cfg;
    cfg.k = j.at("k").get<int>();
    cfg.epsilon = j.at("epsilon").get<double>();
    cfg.n_features = j.at("n_features").get<int>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("target_size")) cfg.target_size = j["target_size"].get<std::size_t>();
    cfg.raw_distances = j.at("raw_distances").get<bool>();
    return cfg;
}

} // namespace

std::string dataset_to_json(const PreferenceDataset& ds) {
    nlohmann::json j;
    j["format"] = {{"kind", "preference_dataset"}, {"version", 1}};
    j["generator"] = ds.generator;
    j["iteration"] = ds.iteration;
    j["strategy"] = to_string(ds.strategy);
    j["config"] = config_to_json(ds.config);
    nlohmann::json pairs = nlohmann::json::array();
    for (const PreferencePair& pp : ds.pairs) {
        nlohmann::json p;
        p["title"] = pp.title;
        p["chosen"] = pp.chosen;
        p["rejected"] = pp.rejected;
        p["prompt_id"] = pp.meta.prompt_id;
        p["distance"] = pp.meta.distance;
        p["flipped"] = pp.meta.flipped;
        p["generator"] = pp.meta.generator;
        if (pp.meta.driving_feature) p["driving_feature"] = *pp.meta.driving_feature;
        pairs.push_back(std::move(p));
    }
    j["pairs"] = std::move(pairs);
    return j.dump(2) + "\n";
}

PreferenceDataset dataset_from_json(std::string_view text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ParseError("dataset file: invalid JSON");
    if (!j.contains("format") || j["format"].value("kind", "") != "preference_dataset")
        throw SchemaError("dataset file: not a preference_dataset artifact");
    if (j["format"].value("version", -1) != 1)
        throw SchemaError("dataset file: unsupported schema version");
    PreferenceDataset ds;
    ds.generator = j.at("generator").get<std::string>();
    ds.iteration = j.at("iteration").get<int>();
    auto strategy = strategy_from_string(j.at("strategy").get<std::string>());
    if (!strategy) throw ParseError("dataset file: bad strategy");
    ds.strategy = *strategy;
    ds.config = config_from_json(j.at("config"));
    for (const auto& p : j.at("pairs")) {
        PreferencePair pp;
        pp.title = p.at("title").get<std::string>();
        pp.chosen = p.at("chosen").get<std::string>();
        pp.rejected = p.at("rejected").get<std::string>();
        pp.meta.prompt_id = p.at("prompt_id").get<std::string>();
        pp.meta.distance = p.at("distance").get<double>();
        pp.meta.flipped = p.at("flipped").get<bool>();
        pp.meta.generator = p.at("generator").get<std::string>();
        if (p.contains("driving_feature")) pp.meta.driving_feature = p["driving_feature"].get<std::string>();
        pp.meta.iteration = ds.iteration;
        pp.meta.strategy = ds.strategy;
        ds.pairs.push_back(std::move(pp));
    }
    return ds;
}

std::string ledger_to_json(const SelectionLedger& dpo, const SelectionLedger& dpo_ling) {
    auto dump = [](const SelectionLedger& ledger) {
        nlohmann::json arr = nlohmann::json::array();
        for (const LedgerEntry& e : ledger.entries()) {
            nlohmann::json j;
            j["iteration"] = e.iteration;
            j["prompt_ids"] = e.prompt_ids;
            j["features"] = e.features;
            arr.push_back(std::move(j));
        }
        return arr;
    };
    nlohmann::json j;
    j["format"] = {{"kind", "selection_ledger"}, {"version", 1}};
    j["dpo"] = dump(dpo);
    j["dpo_ling"] = dump(dpo_ling);
    return j.dump(2) + "\n";
}

void ledger_from_json(std::string_view text, SelectionLedger& dpo, SelectionLedger& dpo_ling) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ParseError("ledger file: invalid JSON");
    if (!j.contains("format") || j["format"].value("kind", "") != "selection_ledger")
        throw SchemaError("ledger file: not a selection_ledger artifact");
    auto load = [](const nlohmann::json& arr) {
        SelectionLedger ledger;
        for (const auto& item : arr) {
            LedgerEntry e;
            e.iteration = item.at("iteration").get<int>();
            for (const auto& p : item.at("prompt_ids")) e.prompt_ids.insert(p.get<std::string>());
            for (const auto& f : item.at("features")) e.features.insert(f.get<std::string>());
            ledger.commit(std::move(e));
        }
        return ledger;
    };
    dpo = load(j.at("dpo"));
    dpo_ling = load(j.at("dpo_ling"));
}

} // namespace mgtkit
