#include "mgtkit/pipeline.hpp"
#include "mgtkit/errors.hpp"
#include "mgtkit/manova.hpp"
#include "mgtkit/metrics.hpp"
#include "mgtkit/report.hpp"
#include "mgtkit/util.hpp"

#include <algorithm>
#include <fcntl.h>
#include <json.hpp>
#include <unistd.h>

namespace mgtkit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kManifestVersion = 1;

json hyper_to_json(const SvmHyper& h) {
    return {{"c", h.c},
            {"epochs", h.epochs},
            {"seed", h.seed},
            {"max_class_ratio", h.max_class_ratio},
            {"allow_imbalance", h.allow_imbalance}};
}

json selection_to_json(const SelectionConfig& c) {
    json j{{"k", c.k},
           {"epsilon", c.epsilon},
           {"n_features", c.n_features},
           {"seed", c.seed},
           {"raw_distances", c.raw_distances}};
    if (c.target_size) j["target_size"] = *c.target_size;
    return j;
}

json histogram_to_json(const HistogramSpec& h) {
    return {{"bins", h.bins}, {"alpha", h.alpha}, {"log2_base", h.log2_base}};
}

json options_to_json(const PipelineOptions& o) {
    json j;
    j["inputs"] = {{"hwt_conllu", o.hwt_conllu.string()},
                   {"hwt_sidecar", o.hwt_sidecar.string()},
                   {"mgt_conllu", o.mgt_conllu.string()},
                   {"mgt_sidecar", o.mgt_sidecar.string()}};
    j["preset"] = to_string(o.preset);
    j["selection"] = selection_to_json(o.selection);
    j["svm"] = hyper_to_json(o.svm);
    j["histogram"] = histogram_to_json(o.histogram);
    if (o.seed) j["seed"] = *o.seed;
    j["iteration"] = o.iteration;
    return j;
}

Corpus load_corpus(const fs::path& conllu, const fs::path& sidecar) {
    return parse_conllu(read_file(conllu), parse_sidecar(read_file(sidecar)));
}

Corpus merge_corpora(Corpus a, const Corpus& b) {
    for (const Document& d : b.documents) {
        if (a.find(d.doc_id))
            throw StructuralError("doc_id '" + d.doc_id + "' appears in both corpora");
        a.documents.push_back(d);
    }
    a.index.clear();
    for (const Document& d : a.documents) {
        PromptIndexEntry& entry = a.index[d.prompt_id];
        if (d.source_label == SourceLabel::human) {
            if (entry.human_doc_id)
                throw StructuralError("prompt '" + d.prompt_id + "' has more than one human document");
            entry.human_doc_id = d.doc_id;
        } else {
            entry.machine_doc_ids.push_back(d.doc_id);
        }
    }
    for (auto& [prompt, entry] : a.index)
        std::sort(entry.machine_doc_ids.begin(), entry.machine_doc_ids.end());
    return a;
}

json eval_to_json(const DetectorEval& eval) {
    json j;
    j["format"] = {{"kind", "eval_report"}, {"version", 1}};
    j["detector_id"] = eval.detector_id;
    j["confusion"] = {{"tp", eval.counts.tp}, {"fp", eval.counts.fp},
                      {"fn", eval.counts.fn}, {"tn", eval.counts.tn}};
    j["macro_f1"] = eval.macro_f1;
    j["accuracy"] = eval.accuracy;
    json roc = json::array();
    for (const RocPoint& p : eval.roc) roc.push_back({{"fpr", p.fpr}, {"tpr", p.tpr}});
    j["roc"] = std::move(roc);
    json tpr = json::object();
    for (const auto& [target, value] : eval.tpr_at_fpr) tpr[fmt_double(target)] = value;
    j["tpr_at_fpr"] = std::move(tpr);
    return j;
}

json ranking_to_json(const FeatureRanking& ranking, std::size_t top_n) {
    json j;
    j["format"] = {{"kind", "feature_ranking"}, {"version", 1}};
    json entries = json::array();
    for (const auto& [name, weight] : ranking.entries)
        entries.push_back({{"feature", name}, {"abs_weight", weight}});
    j["entries"] = std::move(entries);
    j["top"] = ranking.top(top_n);
    return j;
}

std::map<std::string, SourceLabel> truth_from_sidecar(const fs::path& sidecar_path) {
    std::map<std::string, SourceLabel> truth;
    for (const auto& [doc_id, rec] : parse_sidecar(read_file(sidecar_path)))
        truth[doc_id] = rec.source_label;
    return truth;
}

void check_artifact_version(const json& j, const std::string& kind, const fs::path& path) {
    if (!j.contains("format") || j["format"].value("kind", "") != kind ||
        j["format"].value("version", -1) != 1)
        throw SchemaError("artifact '" + path.string() + "' is not a supported " + kind +
                          " (schema version mismatch)");
}

} // namespace

PipelineOptions options_from_config_file(const fs::path& path) {
    json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) throw ConfigError("config file: invalid JSON");
    PipelineOptions o;
    if (j.contains("preset")) {
        auto p = preset_from_string(j["preset"].get<std::string>());
        if (!p) throw ConfigError("config: unknown preset '" + j["preset"].get<std::string>() + "'");
        o.preset = *p;
        o.selection = config_for_preset(*p);
    }
    if (j.contains("inputs")) {
        const json& in = j["inputs"];
        if (in.contains("hwt_conllu")) o.hwt_conllu = in["hwt_conllu"].get<std::string>();
        if (in.contains("hwt_sidecar")) o.hwt_sidecar = in["hwt_sidecar"].get<std::string>();
        if (in.contains("mgt_conllu")) o.mgt_conllu = in["mgt_conllu"].get<std::string>();
        if (in.contains("mgt_sidecar")) o.mgt_sidecar = in["mgt_sidecar"].get<std::string>();
    }
    if (j.contains("selection")) {
        const json& s = j["selection"];
        if (s.contains("k")) o.selection.k = s["k"].get<int>();
        if (s.contains("epsilon")) o.selection.epsilon = s["epsilon"].get<double>();
        if (s.contains("n_features")) o.selection.n_features = s["n_features"].get<int>();
        if (s.contains("target_size")) o.selection.target_size = s["target_size"].get<std::size_t>();
        if (s.contains("raw_distances")) o.selection.raw_distances = s["raw_distances"].get<bool>();
    }
    if (j.contains("svm")) {
        const json& s = j["svm"];
        if (s.contains("c")) o.svm.c = s["c"].get<double>();
        if (s.contains("epochs")) o.svm.epochs = s["epochs"].get<int>();
        if (s.contains("max_class_ratio")) o.svm.max_class_ratio = s["max_class_ratio"].get<double>();
        if (s.contains("allow_imbalance")) o.svm.allow_imbalance = s["allow_imbalance"].get<bool>();
    }
    if (j.contains("histogram")) {
        const json& h = j["histogram"];
        if (h.contains("bins")) o.histogram.bins = h["bins"].get<int>();
        if (h.contains("alpha")) o.histogram.alpha = h["alpha"].get<double>();
        if (h.contains("log2_base")) o.histogram.log2_base = h["log2_base"].get<bool>();
    }
    if (j.contains("seed")) o.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("iteration")) o.iteration = j["iteration"].get<int>();
    return o;
}

// ---------------------------------------------------------------------------
// ArtifactStore / DirLock

ArtifactStore::ArtifactStore(fs::path target, std::string command)
    : target_(std::move(target)), command_(std::move(command)) {
    if (target_.filename().empty()) target_ = target_.parent_path();
    staging_ = target_.parent_path() / (".stage-" + target_.filename().string());
    std::error_code ec;
    fs::remove_all(staging_, ec);
    fs::create_directories(staging_);
}

ArtifactStore::~ArtifactStore() {
    if (!committed_) {
        std::error_code ec;
        fs::remove_all(staging_, ec);
    }
}

void ArtifactStore::add(const std::string& rel_path, std::string_view content) {
    for (const auto& [existing, digest] : artifacts_)
        if (existing == rel_path)
            throw ConfigError("artifact name collision: '" + rel_path + "' emitted twice");
    fs::path dest = staging_ / rel_path;
    fs::create_directories(dest.parent_path());
    write_file(dest, content);
    artifacts_.emplace_back(rel_path, sha256_hex(content));
}

void ArtifactStore::add_input(const fs::path& path) {
    inputs_.emplace_back(path.string(), sha256_file_hex(path));
}

void ArtifactStore::set_config(std::string config_json) { config_json_ = std::move(config_json); }

fs::path ArtifactStore::commit(bool overwrite) {
    json manifest;
    manifest["format"] = {{"kind", "manifest"}, {"version", kManifestVersion}};
    manifest["command"] = command_;
    manifest["config"] = config_json_.empty() ? json::object() : json::parse(config_json_);
    json inputs = json::array();
    for (const auto& [path, digest] : inputs_) inputs.push_back({{"path", path}, {"sha256", digest}});
    manifest["inputs"] = std::move(inputs);
    std::sort(artifacts_.begin(), artifacts_.end());
    json artifacts = json::array();
    for (const auto& [path, digest] : artifacts_)
        artifacts.push_back({{"path", path}, {"sha256", digest}});
    manifest["artifacts"] = std::move(artifacts);
    write_file(staging_ / "manifest.json", manifest.dump(2) + "\n");

    if (fs::exists(target_)) {
        if (!overwrite)
            throw ConflictError("output directory '" + target_.string() + "' already exists");
        fs::remove_all(target_);
    }
    fs::rename(staging_, target_);
    committed_ = true;
    return target_;
}

DirLock::DirLock(const fs::path& lock_path) : path_(lock_path) {
    fs::create_directories(lock_path.parent_path());
    int fd = ::open(lock_path.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0)
        throw ConflictError("another command holds the lock '" + lock_path.string() + "'");
    ::close(fd);
}

DirLock::~DirLock() {
    std::error_code ec;
    fs::remove(path_, ec);
}

// ---------------------------------------------------------------------------
// commands

fs::path cmd_ingest(const fs::path& conllu, const fs::path& sidecar, const fs::path& out) {
    Corpus corpus = load_corpus(conllu, sidecar);
    ArtifactStore store(out, "ingest");
    store.add_input(conllu);
    store.add_input(sidecar);
    store.set_config(json{{"conllu", conllu.string()}, {"sidecar", sidecar.string()}}.dump());

    std::size_t sentences = 0, tokens = 0;
    for (const Document& d : corpus.documents)
        for (const Sentence& s : d.sentences) {
            ++sentences;
            tokens += s.tokens.size();
        }
    json report;
    report["format"] = {{"kind", "corpus_report"}, {"version", 1}};
    report["documents"] = corpus.documents.size();
    report["sentences"] = sentences;
    report["tokens"] = tokens;
    report["prompts"] = corpus.index.size();
    report["parallel"] = corpus.is_parallel();
    store.add("corpus_report.json", report.dump(2) + "\n");
    store.add("corpus.conllu", to_conllu(corpus));
    store.add("sidecar.jsonl", sidecar_to_jsonl(corpus));
    return store.commit();
}

fs::path cmd_profile(const fs::path& conllu, const fs::path& sidecar, const fs::path& out) {
    Corpus corpus = load_corpus(conllu, sidecar);
    ProfiledCorpus pc = profile_corpus(corpus);
    ArtifactStore store(out, "profile");
    store.add_input(conllu);
    store.add_input(sidecar);
    store.set_config(json{{"conllu", conllu.string()}, {"sidecar", sidecar.string()}}.dump());
    store.add("features.csv", profiled_to_csv(pc));
    store.add("features.jsonl", profiled_to_jsonl(pc));
    return store.commit();
}

fs::path cmd_train_detector(const std::vector<fs::path>& features_csvs, const SvmHyper& hyper,
                            const fs::path& out) {
    ProfiledCorpus all;
    for (const fs::path& path : features_csvs) {
        ProfiledCorpus pc = profiled_from_csv(read_file(path));
        all.doc_ids.insert(all.doc_ids.end(), pc.doc_ids.begin(), pc.doc_ids.end());
        all.prompt_ids.insert(all.prompt_ids.end(), pc.prompt_ids.begin(), pc.prompt_ids.end());
        all.labels.insert(all.labels.end(), pc.labels.begin(), pc.labels.end());
        all.rows.insert(all.rows.end(), pc.rows.begin(), pc.rows.end());
    }
    LinearModel model = fit_svm(all, hyper);
    ArtifactStore store(out, "train-detector");
    for (const fs::path& path : features_csvs) store.add_input(path);
    store.set_config(json{{"svm", hyper_to_json(hyper)}}.dump());
    store.add("model.json", model_to_json(model));
    store.add("ranking.json", ranking_to_json(rank_features(model), 10).dump(2) + "\n");
    return store.commit();
}

fs::path cmd_rank_features(const fs::path& model_json, std::size_t top_n, const fs::path& out) {
    LinearModel model = model_from_json(read_file(model_json));
    FeatureRanking ranking = rank_features(model);
    ArtifactStore store(out, "rank-features");
    store.add_input(model_json);
    store.set_config(json{{"model", model_json.string()}, {"top_n", top_n}}.dump());
    store.add("ranking.json", ranking_to_json(ranking, top_n).dump(2) + "\n");
    std::string csv = "feature,abs_weight\n";
    for (const auto& [name, weight] : ranking.entries)
        csv += name + "," + fmt_double(weight) + "\n";
    store.add("ranking.csv", csv);
    return store.commit();
}

fs::path cmd_evaluate(const fs::path& scores_tsv, const fs::path& sidecar,
                      const std::vector<double>& fpr_targets, double threshold, const fs::path& out) {
    std::map<std::string, SourceLabel> truth = truth_from_sidecar(sidecar);
    std::vector<ScoredPrediction> preds = parse_score_tsv(read_file(scores_tsv), truth);
    // evaluate per detector_id
    std::map<std::string, std::vector<ScoredPrediction>> by_detector;
    for (const ScoredPrediction& p : preds) by_detector[p.detector_id].push_back(p);
    ArtifactStore store(out, "evaluate");
    store.add_input(scores_tsv);
    store.add_input(sidecar);
    store.set_config(json{{"fpr_targets", fpr_targets}, {"threshold", threshold}}.dump());
    json all = json::array();
    for (const auto& [detector, dpreds] : by_detector) {
        DetectorEval eval = evaluate_detector(dpreds, fpr_targets, threshold);
        eval.detector_id = detector;
        all.push_back(eval_to_json(eval));
    }
    json bundle;
    bundle["format"] = {{"kind", "eval_bundle"}, {"version", 1}};
    bundle["detectors"] = std::move(all);
    store.add("eval.json", bundle.dump(2) + "\n");
    return store.commit();
}

fs::path cmd_select_pairs(const PipelineOptions& opts, const fs::path& model_json,
                          const fs::path& ledger_path, const fs::path& out) {
    if (!opts.seed) throw ConfigError("select-pairs: seed is mandatory");
    Corpus corpus = merge_corpora(load_corpus(opts.hwt_conllu, opts.hwt_sidecar),
                                  load_corpus(opts.mgt_conllu, opts.mgt_sidecar));
    ProfiledCorpus profiled = profile_corpus(corpus);
    std::vector<DocPair> pairs = pair_corpus(corpus);
    LinearModel model = model_from_json(read_file(model_json));

    SelectionLedger dpo_ledger, ling_ledger;
    if (fs::exists(ledger_path)) ledger_from_json(read_file(ledger_path), dpo_ledger, ling_ledger);
    int iteration = opts.iteration;
    if (iteration >= 2 && !ling_ledger.has_iteration(iteration - 1))
        throw ConfigError("iteration " + std::to_string(iteration) + " requires a committed iteration " +
                          std::to_string(iteration - 1) + " in the ledger");
    if (dpo_ledger.has_iteration(iteration) || ling_ledger.has_iteration(iteration)) {
        if (!opts.force)
            throw ConflictError("iteration " + std::to_string(iteration) +
                                " is already committed; use --force to redo it");
        dpo_ledger.remove_iteration(iteration);
        ling_ledger.remove_iteration(iteration);
    }

    SelectionConfig ling_cfg = opts.selection;
    ling_cfg.seed = *opts.seed;
    std::set<std::string> prev_features;
    if (iteration >= 2) prev_features = ling_ledger.entry_for(iteration - 1)->features;
    PreferenceDataset ling = select_dpo_ling(pairs, profiled, model, ling_ledger, ling_cfg,
                                             iteration, prev_features, iteration >= 2);
    SelectionConfig dpo_cfg = ling_cfg;
    dpo_cfg.target_size = ling.pairs.size();   // keep both datasets the same size
    PreferenceDataset dpo = select_dpo_random(pairs, profiled, dpo_ledger, dpo_cfg, iteration);

    ArtifactStore store(out, "select-pairs");
    store.add_input(opts.hwt_conllu);
    store.add_input(opts.hwt_sidecar);
    store.add_input(opts.mgt_conllu);
    store.add_input(opts.mgt_sidecar);
    store.add_input(model_json);
    store.set_config(options_to_json(opts).dump());
    store.add("dpo_dataset.json", dataset_to_json(dpo));
    store.add("dpo_ling_dataset.json", dataset_to_json(ling));
    store.add("ledger.json", ledger_to_json(dpo_ledger, ling_ledger));
    fs::path committed = store.commit();
    write_file_atomic(ledger_path, ledger_to_json(dpo_ledger, ling_ledger));
    return committed;
}

fs::path cmd_export_dpo(const fs::path& dataset_json, DatasetPreset preset, const fs::path& out) {
    PreferenceDataset ds = dataset_from_json(read_file(dataset_json));
    PromptTemplates templates = templates_for_preset(preset);
    std::string name = ds.strategy == Strategy::dpo_ling ? "dpo_ling" : "dpo";
    ArtifactStore store(out, "export-dpo");
    store.add_input(dataset_json);
    store.set_config(json{{"dataset", dataset_json.string()}, {"preset", to_string(preset)}}.dump());
    store.add(name + ".jsonl", export_preference_jsonl(ds, templates));
    store.add("training_stub.json", emit_training_stub(ds, name + ".jsonl"));
    return store.commit();
}

fs::path cmd_prompts(const fs::path& titles_file, DatasetPreset preset,
                     const std::vector<std::string>& generators, const fs::path& out) {
    PromptTemplates templates = templates_for_preset(preset);
    std::vector<std::string> lines = split(read_file(titles_file), '\n');
    std::string jsonl;
    std::size_t ln = 0;
    for (const std::string& raw : lines) {
        ++ln;
        if (raw.empty() && ln == lines.size()) break;   // trailing newline
        std::string title(trim(raw));
        if (title.empty())
            throw TemplateError("titles file line " + std::to_string(ln) + ": empty title");
        json record;
        record["title"] = title;
        json per_gen = json::object();
        for (const std::string& generator : generators) {
            auto it = templates.system_prompts.find(generator);
            std::string system = it == templates.system_prompts.end() ? "" : it->second;
            per_gen[generator] = {{"system", system},
                                  {"user", render_prompt(PromptTemplates{templates.user_template, {}},
                                                         generator, title)}};
        }
        record["generators"] = std::move(per_gen);
        jsonl += record.dump();
        jsonl += '\n';
    }
    ArtifactStore store(out, "prompts");
    store.add_input(titles_file);
    store.set_config(json{{"preset", to_string(preset)}, {"generators", generators}}.dump());
    store.add("prompts.jsonl", jsonl);
    return store.commit();
}

namespace {

MetricTable js_table_from_reports(const std::vector<std::pair<std::string, DivergenceReport>>& rows,
                                  const std::vector<std::string>& features) {
    MetricTable table;
    table.corner = "model";
    table.columns = features;
    for (const auto& [name, report] : rows) {
        MetricTable::Row row;
        row.block = "all";
        row.label = name;
        for (const DivergenceCell& cell : report.cells)
            row.values.push_back(cell.defined ? std::optional<double>(cell.js) : std::nullopt);
        table.rows.push_back(std::move(row));
    }
    return table;
}

} // namespace

fs::path cmd_analyze_js(const fs::path& hwt_csv, const fs::path& mgt_csv,
                        const std::vector<std::string>& features, const HistogramSpec& spec,
                        const fs::path& out) {
    ProfiledCorpus hwt = profiled_from_csv(read_file(hwt_csv));
    ProfiledCorpus mgt = profiled_from_csv(read_file(mgt_csv));
    DivergenceReport report = divergence_report(hwt, mgt, features, spec);

    ArtifactStore store(out, "analyze-js");
    store.add_input(hwt_csv);
    store.add_input(mgt_csv);
    store.set_config(json{{"features", features}, {"histogram", histogram_to_json(spec)}}.dump());
    std::string csv = "feature,js,n_hwt,n_mgt,degenerate\n";
    for (const DivergenceCell& cell : report.cells) {
        csv += cell.feature + ",";
        if (cell.defined) csv += fmt_double(cell.js);
        csv += "," + std::to_string(cell.n_a) + "," + std::to_string(cell.n_b) + "," +
               (cell.degenerate ? "true" : "false") + "\n";
    }
    store.add("js.csv", csv);
    MetricTable table = js_table_from_reports({{"mgt", report}}, features);
    store.add("js.md", render_markdown(table));
    return store.commit();
}

fs::path cmd_manova(const fs::path& features_csv, const std::vector<std::string>& features,
                    const fs::path& out) {
    ProfiledCorpus pc = profiled_from_csv(read_file(features_csv));
    std::vector<GroupMatrix> groups = groups_from_profiled(pc, features);
    ManovaResult result = manova_pillai(groups, features);

    ArtifactStore store(out, "manova");
    store.add_input(features_csv);
    store.set_config(json{{"features", features}}.dump());
    json j;
    j["format"] = {{"kind", "manova_result"}, {"version", 1}};
    j["pillai"] = result.pillai;
    j["f_stat"] = result.f_stat;
    j["df1"] = result.df1;
    j["df2"] = result.df2;
    j["p_value"] = result.p_value;
    j["group_sizes"] = result.group_sizes;
    j["p_used"] = result.p_used;
    j["dropped"] = result.dropped;
    j["condition_warning"] = result.condition_warning;
    store.add("manova.json", j.dump(2) + "\n");
    return store.commit();
}

fs::path cmd_human_eval(const fs::path& ratings_csv, const fs::path& out) {
    RatingSet ratings = parse_ratings_csv(read_file(ratings_csv));
    RatingReport report = aggregate_ratings(ratings);
    ArtifactStore store(out, "human-eval");
    store.add_input(ratings_csv);
    store.set_config(json{{"ratings", ratings_csv.string()}}.dump());
    json j;
    j["format"] = {{"kind", "human_eval_report"}, {"version", 1}};
    j["n_items"] = report.n_items;
    j["raters_per_item"] = report.raters_per_item;
    j["majority_accuracy"] = report.majority_accuracy;
    j["fleiss_kappa"] = report.fleiss_kappa;
    json per_rater = json::array();
    for (const auto& [rater, acc] : report.per_rater_accuracy)
        per_rater.push_back({{"rater_id", rater}, {"accuracy", acc}});
    j["per_rater_accuracy"] = std::move(per_rater);
    store.add("human_eval.json", j.dump(2) + "\n");
    return store.commit();
}

fs::path cmd_report(const ReportInputs& inputs, const fs::path& out) {
    ArtifactStore store(out, "report");
    json config;
    config["features"] = inputs.features;
    config["histogram"] = histogram_to_json(inputs.spec);
    store.set_config(config.dump());

    if (inputs.hwt_csv && !inputs.variants.empty()) {
        ProfiledCorpus hwt = profiled_from_csv(read_file(*inputs.hwt_csv));
        store.add_input(*inputs.hwt_csv);
        std::vector<std::pair<std::string, ProfiledCorpus>> variants;
        for (const auto& [name, path] : inputs.variants) {
            store.add_input(path);
            variants.emplace_back(name, profiled_from_csv(read_file(path)));
        }
        std::vector<std::string> features = inputs.features;
        if (features.empty())
            throw ConfigError("report: a feature list is required when rendering JS tables");

        // JS table: one row per variant
        std::vector<std::pair<std::string, DivergenceReport>> reports;
        for (const auto& [name, pc] : variants)
            reports.emplace_back(name, divergence_report(hwt, pc, features, inputs.spec));
        MetricTable js_table = js_table_from_reports(reports, features);
        store.add("js_table.csv", render_csv(js_table));
        store.add("js_table.md", render_markdown(js_table));

        // MANOVA per variant against HWT
        json manova_rows = json::array();
        MetricTable manova_table;
        manova_table.corner = "comparison";
        manova_table.columns = {"pillai", "p_value"};
        for (const auto& [name, pc] : variants) {
            ProfiledCorpus merged = hwt;
            merged.doc_ids.insert(merged.doc_ids.end(), pc.doc_ids.begin(), pc.doc_ids.end());
            merged.prompt_ids.insert(merged.prompt_ids.end(), pc.prompt_ids.begin(), pc.prompt_ids.end());
            merged.labels.insert(merged.labels.end(), pc.labels.begin(), pc.labels.end());
            merged.rows.insert(merged.rows.end(), pc.rows.begin(), pc.rows.end());
            ManovaResult res = manova_pillai(groups_from_profiled(merged, features), features);
            manova_rows.push_back({{"comparison", "hwt_vs_" + name},
                                   {"pillai", res.pillai},
                                   {"p_value", res.p_value},
                                   {"df1", res.df1},
                                   {"df2", res.df2},
                                   {"dropped", res.dropped}});
            MetricTable::Row row;
            row.block = "all";
            row.label = "hwt_vs_" + name;
            row.values = {res.pillai, res.p_value};
            manova_table.rows.push_back(std::move(row));
        }
        json manova_bundle;
        manova_bundle["format"] = {{"kind", "manova_table"}, {"version", 1}};
        manova_bundle["rows"] = std::move(manova_rows);
        store.add("manova_table.json", manova_bundle.dump(2) + "\n");
        manova_table.precision = 4;
        store.add("manova_table.md", render_markdown(manova_table, false));

        // per-feature histogram data over the pooled range of all variants
        std::string hist_csv = "feature,variant,bin_lo,bin_hi,density\n";
        for (const std::string& fname : features) {
            auto idx = FeatureRegistry::instance().resolve(fname);
            if (!idx) throw SchemaError("report: unknown feature '" + fname + "'");
            std::vector<std::pair<std::string, std::vector<double>>> samples;
            samples.emplace_back("hwt", feature_column(hwt, *idx));
            for (const auto& [name, pc] : variants) samples.emplace_back(name, feature_column(pc, *idx));
            double lo = 0, hi = 0;
            bool first = true;
            for (const auto& [name, values] : samples)
                for (double v : values) {
                    if (first) {
                        lo = hi = v;
                        first = false;
                    }
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
            if (first || !(hi > lo)) continue;   // no data or degenerate range
            for (const auto& [name, values] : samples) {
                HistogramData hist = histogram_data(values, inputs.spec.bins, lo, hi);
                double width = (hi - lo) / inputs.spec.bins;
                for (std::size_t b = 0; b < hist.densities.size(); ++b) {
                    hist_csv += fname + "," + name + "," + fmt_double(lo + width * b) + "," +
                                fmt_double(lo + width * (b + 1)) + "," + fmt_double(hist.densities[b]) +
                                "\n";
                }
            }
        }
        store.add("histograms.csv", hist_csv);
    }

    // detector evaluation summaries
    if (!inputs.eval_jsons.empty()) {
        std::string csv = "detector,macro_f1,accuracy,tpr_at_0.01,tpr_at_0.05\n";
        for (const fs::path& path : inputs.eval_jsons) {
            json j = json::parse(read_file(path), nullptr, false);
            if (j.is_discarded()) throw ParseError("eval artifact '" + path.string() + "': invalid JSON");
            check_artifact_version(j, "eval_bundle", path);
            store.add_input(path);
            for (const json& det : j["detectors"]) {
                csv += det.value("detector_id", "") + "," + fmt_double(det.value("macro_f1", 0.0)) +
                       "," + fmt_double(det.value("accuracy", 0.0));
                for (const char* key : {"0.01", "0.05"}) {
                    csv += ",";
                    if (det.contains("tpr_at_fpr") && det["tpr_at_fpr"].contains(key))
                        csv += fmt_double(det["tpr_at_fpr"][key].get<double>());
                }
                csv += "\n";
            }
        }
        store.add("detectors.csv", csv);
    }

    // fixture metric tables rendered with the block-minimum convention
    for (const auto& [name, path] : inputs.tables) {
        MetricTable table = table_from_csv(read_file(path));
        store.add_input(path);
        if (name.rfind("f1", 0) == 0) table.precision = 2;
        store.add("table_" + name + ".md", render_markdown(table));
        store.add("table_" + name + ".csv", render_csv(table));
    }

    return store.commit();
}

fs::path cmd_run_iteration(const PipelineOptions& opts, const fs::path& out_root) {
    if (!opts.seed) throw ConfigError("run-iteration: seed is mandatory");
    fs::create_directories(out_root);
    DirLock lock(out_root / ".lock");

    fs::path ledger_path = out_root / "ledger.json";
    SelectionLedger dpo_ledger, ling_ledger;
    if (fs::exists(ledger_path)) ledger_from_json(read_file(ledger_path), dpo_ledger, ling_ledger);

    int iteration = opts.iteration;
    fs::path iter_dir = out_root / ("iter-" + std::to_string(iteration));
    if (iteration >= 2 && !ling_ledger.has_iteration(iteration - 1))
        throw ConfigError("iteration " + std::to_string(iteration) + " requires a committed iteration " +
                          std::to_string(iteration - 1) + " in the ledger");
    if (dpo_ledger.has_iteration(iteration) || ling_ledger.has_iteration(iteration) ||
        fs::exists(iter_dir)) {
        if (!opts.force)
            throw ConflictError("iteration " + std::to_string(iteration) +
                                " is already committed; use --force to redo it");
        dpo_ledger.remove_iteration(iteration);
        ling_ledger.remove_iteration(iteration);
    }

    Corpus corpus = merge_corpora(load_corpus(opts.hwt_conllu, opts.hwt_sidecar),
                                  load_corpus(opts.mgt_conllu, opts.mgt_sidecar));
    ProfiledCorpus profiled = profile_corpus(corpus);
    std::vector<DocPair> pairs = pair_corpus(corpus);

    SvmHyper hyper = opts.svm;
    hyper.seed = *opts.seed;
    LinearModel model = fit_svm(profiled, hyper);
    FeatureRanking ranking = rank_features(model);

    std::vector<ScoredPrediction> preds;
    for (std::size_t i = 0; i < profiled.rows.size(); ++i) {
        Prediction p = predict(model, profiled.rows[i]);
        preds.push_back(ScoredPrediction{profiled.doc_ids[i], profiled.labels[i], p.decision,
                                         p.label, "svm"});
    }
    DetectorEval eval = evaluate_detector(preds, {0.01, 0.05});

    SelectionConfig ling_cfg = opts.selection;
    ling_cfg.seed = *opts.seed;
    std::set<std::string> prev_features;
    if (iteration >= 2) prev_features = ling_ledger.entry_for(iteration - 1)->features;
    PreferenceDataset ling = select_dpo_ling(pairs, profiled, model, ling_ledger, ling_cfg,
                                             iteration, prev_features, iteration >= 2);
    SelectionConfig dpo_cfg = ling_cfg;
    dpo_cfg.target_size = ling.pairs.size();
    PreferenceDataset dpo = select_dpo_random(pairs, profiled, dpo_ledger, dpo_cfg, iteration);

    PromptTemplates templates = templates_for_preset(opts.preset);

    ArtifactStore store(iter_dir, "run-iteration");
    store.add_input(opts.hwt_conllu);
    store.add_input(opts.hwt_sidecar);
    store.add_input(opts.mgt_conllu);
    store.add_input(opts.mgt_sidecar);
    store.set_config(options_to_json(opts).dump());
    store.add("profiled_hwt.csv", profiled_to_csv(slice_by_label(profiled, SourceLabel::human)));
    store.add("profiled_mgt.csv", profiled_to_csv(slice_by_label(profiled, SourceLabel::machine)));
    store.add("model.json", model_to_json(model));
    store.add("ranking.json", ranking_to_json(ranking, ling_cfg.n_features).dump(2) + "\n");
    json eval_bundle;
    eval_bundle["format"] = {{"kind", "eval_bundle"}, {"version", 1}};
    eval_bundle["detectors"] = json::array({eval_to_json(eval)});
    store.add("eval.json", eval_bundle.dump(2) + "\n");
    store.add("dpo.jsonl", export_preference_jsonl(dpo, templates));
    store.add("dpo_ling.jsonl", export_preference_jsonl(ling, templates));
    json stubs;
    stubs["format"] = {{"kind", "dpo_training_stub_bundle"}, {"version", 1}};
    stubs["configs"] = json::array({json::parse(emit_training_stub(dpo, "dpo.jsonl")),
                                    json::parse(emit_training_stub(ling, "dpo_ling.jsonl"))});
    store.add("training_stub.json", stubs.dump(2) + "\n");
    store.add("ledger.json", ledger_to_json(dpo_ledger, ling_ledger));
    fs::path committed = store.commit();
    write_file_atomic(ledger_path, ledger_to_json(dpo_ledger, ling_ledger));
    return committed;
}

} // namespace mgtkit
