#include "mgtkit/metrics.hpp"
#include "mgtkit/errors.hpp"
#include "mgtkit/util.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace mgtkit {

namespace {

void require_both_classes(std::span<const ScoredPrediction> preds) {
    bool has_human = false, has_machine = false;
    for (const ScoredPrediction& p : preds) {
        if (p.truth == SourceLabel::human) has_human = true;
        else has_machine = true;
    }
    if (!has_human || !has_machine)
        throw MetricError("evaluation requires both classes in the true labels");
}

SourceLabel effective_prediction(const ScoredPrediction& p, double threshold) {
    if (p.predicted) return *p.predicted;
    return p.score > threshold ? SourceLabel::machine : SourceLabel::human;
}

double f1_from_counts(double tp, double fp, double fn) {
    double denom = 2.0 * tp + fp + fn;
    return denom == 0.0 ? 0.0 : 2.0 * tp / denom;
}

} // namespace

ConfusionCounts confusion(std::span<const ScoredPrediction> preds, double threshold) {
    ConfusionCounts c;
    for (const ScoredPrediction& p : preds) {
        bool pred_machine = effective_prediction(p, threshold) == SourceLabel::machine;
        bool true_machine = p.truth == SourceLabel::machine;
        if (pred_machine && true_machine) ++c.tp;
        else if (pred_machine && !true_machine) ++c.fp;
        else if (!pred_machine && true_machine) ++c.fn;
        else ++c.tn;
    }
    return c;
}

double macro_f1(std::span<const ScoredPrediction> preds, double threshold) {
    require_both_classes(preds);
    ConfusionCounts c = confusion(preds, threshold);
    double f1_machine = f1_from_counts(static_cast<double>(c.tp), static_cast<double>(c.fp),
                                       static_cast<double>(c.fn));
    // human as positive: tn/fn/fp swap roles
    double f1_human = f1_from_counts(static_cast<double>(c.tn), static_cast<double>(c.fn),
                                     static_cast<double>(c.fp));
    return 0.5 * (f1_machine + f1_human);
}

double accuracy(std::span<const ScoredPrediction> preds, double threshold) {
    require_both_classes(preds);
    ConfusionCounts c = confusion(preds, threshold);
    return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.tp + c.tn + c.fp + c.fn);
}

std::vector<RocPoint> roc_points(std::span<const ScoredPrediction> preds) {
    require_both_classes(preds);
    std::vector<std::pair<double, bool>> scored;   // (score, is_machine)
    std::size_t pos = 0, neg = 0;
    for (const ScoredPrediction& p : preds) {
        if (!std::isfinite(p.score)) throw MetricError("non-finite score for doc '" + p.doc_id + "'");
        bool machine = p.truth == SourceLabel::machine;
        scored.emplace_back(p.score, machine);
        (machine ? pos : neg)++;
    }
    std::sort(scored.begin(), scored.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

    std::vector<RocPoint> points{{0.0, 0.0}};
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < scored.size()) {
        double score = scored[i].first;
        while (i < scored.size() && scored[i].first == score) {
            (scored[i].second ? tp : fp)++;
            ++i;
        }
        points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                          static_cast<double>(tp) / static_cast<double>(pos)});
    }
    return points;
}

double roc_auc(std::span<const RocPoint> points) {
    double auc = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i)
        auc += (points[i].fpr - points[i - 1].fpr) * 0.5 * (points[i].tpr + points[i - 1].tpr);
    return auc;
}

std::map<double, double> tpr_at_fpr(std::span<const ScoredPrediction> preds,
                                    const std::vector<double>& fpr_targets) {
    std::vector<RocPoint> points = roc_points(preds);
    std::map<double, double> out;
    for (double target : fpr_targets) {
        // largest achievable FPR not exceeding the target; at equal FPR the
        // staircase's best TPR applies
        double best_tpr = 0.0;
        for (const RocPoint& pt : points)
            if (pt.fpr <= target) best_tpr = std::max(best_tpr, pt.tpr);
        out[target] = best_tpr;
    }
    return out;
}

DetectorEval evaluate_detector(std::span<const ScoredPrediction> preds,
                               const std::vector<double>& fpr_targets, double threshold) {
    DetectorEval eval;
    if (!preds.empty()) eval.detector_id = preds[0].detector_id;
    eval.counts = confusion(preds, threshold);
    eval.macro_f1 = macro_f1(preds, threshold);
    eval.accuracy = accuracy(preds, threshold);
    eval.roc = roc_points(preds);
    eval.tpr_at_fpr = tpr_at_fpr(preds, fpr_targets);
    return eval;
}

std::vector<ScoredPrediction> parse_score_tsv(std::string_view tsv,
                                              const std::map<std::string, SourceLabel>& truth) {
    std::vector<std::string> lines = split(tsv, '\n');
    if (lines.empty()) throw ParseError("score TSV: empty input");
    std::vector<std::string> header = split(trim(lines[0]), '\t');
    bool has_predicted = header.size() == 4 && header[3] == "predicted_label";
    if (!(header.size() == 3 || has_predicted) || header[0] != "doc_id" ||
        header[1] != "detector_id" || header[2] != "score")
        throw SchemaError("score TSV: expected header 'doc_id\\tdetector_id\\tscore[\\tpredicted_label]'");

    std::vector<ScoredPrediction> out;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (trim(lines[ln]).empty()) continue;
        std::vector<std::string> cells = split(lines[ln], '\t');
        if (cells.size() != header.size())
            throw ParseError("score TSV line " + std::to_string(ln + 1) + ": wrong column count");
        ScoredPrediction p;
        p.doc_id = cells[0];
        p.detector_id = cells[1];
        p.score = parse_double(cells[2], "score TSV line " + std::to_string(ln + 1));
        if (has_predicted && !cells[3].empty()) {
            auto label = source_label_from_string(cells[3]);
            if (!label)
                throw ParseError("score TSV line " + std::to_string(ln + 1) + ": bad predicted_label");
            p.predicted = *label;
        }
        auto it = truth.find(p.doc_id);
        if (it == truth.end())
            throw MetadataError("score TSV: doc_id '" + p.doc_id + "' has no truth label");
        p.truth = it->second;
        out.push_back(std::move(p));
    }
    return out;
}

std::string score_tsv(std::span<const ScoredPrediction> preds) {
    std::string out = "doc_id\tdetector_id\tscore\tpredicted_label\n";
    for (const ScoredPrediction& p : preds) {
        out += p.doc_id;
        out += '\t';
        out += p.detector_id;
        out += '\t';
        out += fmt_double(p.score);
        out += '\t';
        if (p.predicted) out += to_string(*p.predicted);
        out += '\n';
    }
    return out;
}

RatingReport aggregate_ratings(const RatingSet& ratings) {
    if (ratings.items.empty()) throw MetricError("ratings: no items");
    std::size_t n_raters = ratings.items[0].choices.size();
    if (n_raters < 2) throw MetricError("ratings: need at least 2 raters per item");
    for (const RatingItem& item : ratings.items) {
        if (item.choices.size() != n_raters)
            throw MetricError("ratings: item '" + item.pair_id + "' has " +
                              std::to_string(item.choices.size()) + " raters, expected " +
                              std::to_string(n_raters));
        if (item.gold != 'A' && item.gold != 'B')
            throw MetricError("ratings: item '" + item.pair_id + "' has invalid gold choice");
        for (const RatingChoice& c : item.choices)
            if (c.choice != 'A' && c.choice != 'B')
                throw MetricError("ratings: invalid choice for rater '" + c.rater_id + "'");
    }

    RatingReport report;
    report.n_items = ratings.items.size();
    report.raters_per_item = n_raters;

    std::map<std::string, std::pair<std::size_t, std::size_t>> rater_stats;   // correct, total
    std::size_t majority_correct = 0;
    double pbar_sum = 0.0;
    std::size_t count_a = 0, total_choices = 0;

    for (const RatingItem& item : ratings.items) {
        std::size_t a = 0;
        for (const RatingChoice& c : item.choices) {
            if (c.choice == 'A') ++a;
            auto& st = rater_stats[c.rater_id];
            if (c.choice == item.gold) ++st.first;
            ++st.second;
        }
        std::size_t b = n_raters - a;
        count_a += a;
        total_choices += n_raters;
        // strict majority; ties count as incorrect
        char majority = a > b ? 'A' : (b > a ? 'B' : '\0');
        if (majority == item.gold) ++majority_correct;
        double n = static_cast<double>(n_raters);
        pbar_sum += (static_cast<double>(a) * (a - 1.0) + static_cast<double>(b) * (b - 1.0)) /
                    (n * (n - 1.0));
    }

    report.majority_accuracy =
        static_cast<double>(majority_correct) / static_cast<double>(ratings.items.size());
    for (const auto& [rater, st] : rater_stats)
        report.per_rater_accuracy.emplace_back(
            rater, static_cast<double>(st.first) / static_cast<double>(st.second));

    double p_bar = pbar_sum / static_cast<double>(ratings.items.size());
    double pa = static_cast<double>(count_a) / static_cast<double>(total_choices);
    double pe = pa * pa + (1.0 - pa) * (1.0 - pa);
    if (1.0 - pe < 1e-12)
        report.fleiss_kappa = p_bar >= 1.0 ? 1.0 : 0.0;   // single-category degenerate case
    else
        report.fleiss_kappa = (p_bar - pe) / (1.0 - pe);
    return report;
}

RatingSet parse_ratings_csv(std::string_view csv) {
    std::vector<std::string> lines = split(csv, '\n');
    if (lines.empty()) throw ParseError("ratings CSV: empty input");
    std::vector<std::string> header = split(trim(lines[0]), ',');
    if (header != std::vector<std::string>{"pair_id", "rater_id", "choice", "gold"})
        throw SchemaError("ratings CSV: expected header 'pair_id,rater_id,choice,gold'");

    std::map<std::string, RatingItem> items;   // keyed by pair_id, insertion-sorted
    std::vector<std::string> order;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (trim(lines[ln]).empty()) continue;
        std::vector<std::string> cells = split(std::string(trim(lines[ln])), ',');
        if (cells.size() != 4)
            throw ParseError("ratings CSV line " + std::to_string(ln + 1) + ": expected 4 cells");
        if (cells[2].size() != 1 || cells[3].size() != 1)
            throw ParseError("ratings CSV line " + std::to_string(ln + 1) + ": choices must be 'A' or 'B'");
        auto [it, inserted] = items.try_emplace(cells[0]);
        if (inserted) {
            it->second.pair_id = cells[0];
            it->second.gold = cells[3][0];
            order.push_back(cells[0]);
        } else if (it->second.gold != cells[3][0]) {
            throw ParseError("ratings CSV: conflicting gold for pair '" + cells[0] + "'");
        }
        it->second.choices.push_back(RatingChoice{cells[1], cells[2][0]});
    }
    RatingSet out;
    for (const std::string& pair_id : order) out.items.push_back(std::move(items[pair_id]));
    return out;
}

} // namespace mgtkit
