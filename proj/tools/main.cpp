#include "mgtkit/errors.hpp"
#include "mgtkit/pipeline.hpp"

#include <CLI11.hpp>
#include <iostream>

namespace {

using namespace mgtkit;

DatasetPreset parse_preset(const std::string& s) {
    auto p = preset_from_string(s);
    if (!p) throw ConfigError("unknown preset '" + s + "' (xsum, arxiv_abstracts, custom)");
    return *p;
}

// flags override config-file values; only flags the user passed are applied
struct IterationCli {
    std::string config_file;
    std::string hwt_conllu, hwt_sidecar, mgt_conllu, mgt_sidecar;
    std::string preset;
    std::string out;
    std::uint64_t seed = 0;
    int iteration = 0;
    int k = 0;
    double epsilon = -1.0;
    int n_features = 0;
    std::int64_t target_size = -1;
    double svm_c = 0.0;
    int svm_epochs = 0;
    bool allow_imbalance = false;
    bool force = false;

    void register_common(CLI::App* cmd) {
        cmd->add_option("--config", config_file, "JSON config file; flags override its values");
        cmd->add_option("--hwt-conllu", hwt_conllu, "human corpus (CoNLL-U)");
        cmd->add_option("--hwt-sidecar", hwt_sidecar, "human metadata sidecar (JSONL)");
        cmd->add_option("--mgt-conllu", mgt_conllu, "machine corpus (CoNLL-U)");
        cmd->add_option("--mgt-sidecar", mgt_sidecar, "machine metadata sidecar (JSONL)");
        cmd->add_option("--preset", preset, "dataset preset: xsum, arxiv_abstracts, custom");
        cmd->add_option("--seed", seed, "run seed (mandatory)");
        cmd->add_option("--iteration", iteration, "pipeline iteration number (1-based)");
        cmd->add_option("--k", k, "pairs per feature for dpo-ling");
        cmd->add_option("--epsilon", epsilon, "iteration >= 2 distance filter bound");
        cmd->add_option("--n-features", n_features, "features per dpo-ling iteration");
        cmd->add_option("--target-size", target_size, "dataset size cap");
        cmd->add_option("--svm-c", svm_c, "SVM inverse regularization strength");
        cmd->add_option("--svm-epochs", svm_epochs, "SVM training epochs");
        cmd->add_flag("--allow-imbalance", allow_imbalance, "lift the class-imbalance guard");
        cmd->add_flag("--force", force, "redo an already committed iteration");
        cmd->add_option("--out", out, "output directory")->required();
    }

    PipelineOptions resolve(const CLI::App* cmd) const {
        PipelineOptions opts;
        if (!config_file.empty()) opts = options_from_config_file(config_file);
        if (cmd->count("--preset")) {
            opts.preset = parse_preset(preset);
            SelectionConfig preset_cfg = config_for_preset(opts.preset);
            if (!cmd->count("--epsilon")) opts.selection.epsilon = preset_cfg.epsilon;
        }
        if (cmd->count("--hwt-conllu")) opts.hwt_conllu = hwt_conllu;
        if (cmd->count("--hwt-sidecar")) opts.hwt_sidecar = hwt_sidecar;
        if (cmd->count("--mgt-conllu")) opts.mgt_conllu = mgt_conllu;
        if (cmd->count("--mgt-sidecar")) opts.mgt_sidecar = mgt_sidecar;
        if (cmd->count("--seed")) opts.seed = seed;
        if (cmd->count("--iteration")) opts.iteration = iteration;
        if (cmd->count("--k")) opts.selection.k = k;
        if (cmd->count("--epsilon")) opts.selection.epsilon = epsilon;
        if (cmd->count("--n-features")) opts.selection.n_features = n_features;
        if (cmd->count("--target-size")) {
            if (target_size < 0) throw ConfigError("--target-size must be >= 0");
            opts.selection.target_size = static_cast<std::size_t>(target_size);
        }
        if (cmd->count("--svm-c")) opts.svm.c = svm_c;
        if (cmd->count("--svm-epochs")) opts.svm.epochs = svm_epochs;
        if (allow_imbalance) opts.svm.allow_imbalance = true;
        opts.force = force;
        if (opts.hwt_conllu.empty() || opts.hwt_sidecar.empty() || opts.mgt_conllu.empty() ||
            opts.mgt_sidecar.empty())
            throw ConfigError("all four corpus inputs are required "
                              "(--hwt-conllu/--hwt-sidecar/--mgt-conllu/--mgt-sidecar)");
        if (!opts.seed) throw ConfigError("--seed is mandatory");
        if (opts.iteration < 1) throw ConfigError("--iteration must be >= 1");
        return opts;
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"corpus profiling, detector training and DPO dataset construction"};
    app.require_subcommand(1);

    std::string conllu, sidecar, out, model, scores, dataset, titles, ratings;
    std::string hwt_csv, mgt_csv, preset_str = "custom";
    std::vector<std::string> features_csvs, feature_names, generators, variants, eval_jsons, tables;
    std::uint64_t seed = 0;
    double svm_c = 1.0, threshold = 0.0, epsilon = -1;
    int epochs = 200, bins = 30, top_n = 10;
    bool allow_imbalance = false;
    std::vector<double> fpr_targets{0.01, 0.05};

    auto* ingest = app.add_subcommand("ingest", "validate a corpus and write its canonical form");
    ingest->add_option("--conllu", conllu)->required();
    ingest->add_option("--sidecar", sidecar)->required();
    ingest->add_option("--out", out)->required();

    auto* profile = app.add_subcommand("profile", "extract linguistic feature vectors");
    profile->add_option("--conllu", conllu)->required();
    profile->add_option("--sidecar", sidecar)->required();
    profile->add_option("--out", out)->required();

    auto* train = app.add_subcommand("train-detector", "fit the linear SVM detector");
    train->add_option("--features", features_csvs, "profiled feature CSVs")->required();
    train->add_option("--seed", seed)->required();
    train->add_option("--svm-c", svm_c);
    train->add_option("--epochs", epochs);
    train->add_flag("--allow-imbalance", allow_imbalance);
    train->add_option("--out", out)->required();

    auto* rank = app.add_subcommand("rank-features", "rank features by |SVM weight|");
    rank->add_option("--model", model)->required();
    rank->add_option("--top", top_n);
    rank->add_option("--out", out)->required();

    auto* evaluate = app.add_subcommand("evaluate", "score detector predictions from a TSV file");
    evaluate->add_option("--scores", scores)->required();
    evaluate->add_option("--sidecar", sidecar, "sidecar with truth labels")->required();
    evaluate->add_option("--fpr", fpr_targets, "TPR@FPR targets");
    evaluate->add_option("--threshold", threshold);
    evaluate->add_option("--out", out)->required();

    IterationCli select_cli;
    auto* select = app.add_subcommand("select-pairs", "build dpo and dpo-ling preference datasets");
    select_cli.register_common(select);
    select->add_option("--model", model, "trained model JSON")->required();
    std::string ledger = "ledger.json";
    select->add_option("--ledger", ledger, "ledger file path")->required();

    auto* export_dpo = app.add_subcommand("export-dpo", "render a dataset to preference JSONL");
    export_dpo->add_option("--dataset", dataset)->required();
    export_dpo->add_option("--preset", preset_str);
    export_dpo->add_option("--out", out)->required();

    auto* prompts = app.add_subcommand("prompts", "emit generation prompts for a titles file");
    prompts->add_option("--titles", titles)->required();
    prompts->add_option("--preset", preset_str);
    prompts->add_option("--generator", generators, "generator presets (default: llama, gemma)");
    prompts->add_option("--out", out)->required();

    auto* analyze = app.add_subcommand("analyze-js", "per-feature JS divergence between two corpora");
    analyze->add_option("--hwt", hwt_csv)->required();
    analyze->add_option("--mgt", mgt_csv)->required();
    analyze->add_option("--feature", feature_names)->required();
    analyze->add_option("--bins", bins);
    analyze->add_option("--out", out)->required();

    auto* manova = app.add_subcommand("manova", "Pillai's trace between human and machine rows");
    manova->add_option("--features-csv", hwt_csv)->required();
    manova->add_option("--feature", feature_names)->required();
    manova->add_option("--out", out)->required();

    auto* human = app.add_subcommand("human-eval", "aggregate human rater choices");
    human->add_option("--ratings", ratings)->required();
    human->add_option("--out", out)->required();

    auto* report = app.add_subcommand("report", "render JS/MANOVA/detector tables and histograms");
    report->add_option("--hwt", hwt_csv);
    report->add_option("--variant", variants, "name=features.csv");
    report->add_option("--feature", feature_names);
    report->add_option("--eval", eval_jsons, "eval.json artifacts");
    report->add_option("--table", tables, "name=metric-table.csv fixtures");
    report->add_option("--bins", bins);
    report->add_option("--out", out)->required();

    IterationCli run_cli;
    auto* run = app.add_subcommand("run-iteration", "profile, train, evaluate, select and export");
    run_cli.register_common(run);

    CLI11_PARSE(app, argc, argv);

    try {
        using std::filesystem::path;
        if (*ingest) cmd_ingest(conllu, sidecar, out);
        if (*profile) cmd_profile(conllu, sidecar, out);
        if (*train) {
            SvmHyper hyper;
            hyper.c = svm_c;
            hyper.epochs = epochs;
            hyper.seed = seed;
            hyper.allow_imbalance = allow_imbalance;
            std::vector<path> paths(features_csvs.begin(), features_csvs.end());
            cmd_train_detector(paths, hyper, out);
        }
        if (*rank) cmd_rank_features(model, static_cast<std::size_t>(top_n), out);
        if (*evaluate) cmd_evaluate(scores, sidecar, fpr_targets, threshold, out);
        if (*select) {
            PipelineOptions opts = select_cli.resolve(select);
            cmd_select_pairs(opts, model, ledger, select_cli.out);
        }
        if (*export_dpo) cmd_export_dpo(dataset, parse_preset(preset_str), out);
        if (*prompts) {
            if (generators.empty()) generators = {"llama", "gemma"};
            cmd_prompts(titles, parse_preset(preset_str), generators, out);
        }
        if (*analyze) {
            HistogramSpec spec;
            spec.bins = bins;
            cmd_analyze_js(hwt_csv, mgt_csv, feature_names, spec, out);
        }
        if (*manova) cmd_manova(hwt_csv, feature_names, out);
        if (*human) cmd_human_eval(ratings, out);
        if (*report) {
            ReportInputs inputs;
            if (!hwt_csv.empty()) inputs.hwt_csv = hwt_csv;
            auto parse_named = [](const std::string& s) {
                auto eq = s.find('=');
                if (eq == std::string::npos)
                    throw ConfigError("expected name=path, got '" + s + "'");
                return std::pair<std::string, path>(s.substr(0, eq), s.substr(eq + 1));
            };
            for (const std::string& v : variants) inputs.variants.push_back(parse_named(v));
            for (const std::string& t : tables) inputs.tables.push_back(parse_named(t));
            for (const std::string& e : eval_jsons) inputs.eval_jsons.emplace_back(e);
            inputs.features = feature_names;
            inputs.spec.bins = bins;
            cmd_report(inputs, out);
        }
        if (*run) {
            PipelineOptions opts = run_cli.resolve(run);
            cmd_run_iteration(opts, run_cli.out);
        }
    } catch (const ToolError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
