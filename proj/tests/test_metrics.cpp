#include "mgtkit/metrics.hpp"
#include "mgtkit/errors.hpp"
#include "mgtkit/util.hpp"

#include "helpers.hpp"

#include <cmath>
#include <cstring>
#include <doctest.h>
#include <set>

using namespace mgtkit;

namespace {

std::vector<ScoredPrediction> from_scores(const std::vector<std::pair<double, SourceLabel>>& rows) {
    std::vector<ScoredPrediction> out;
    int i = 0;
    for (const auto& [score, truth] : rows) {
        out.push_back(ScoredPrediction{"d" + std::to_string(i++), truth, score, std::nullopt, "t"});
    }
    return out;
}

// exhaustive threshold sweep used as the oracle for roc/tpr
struct SweepPoint {
    double fpr, tpr;
};

std::vector<SweepPoint> brute_force_sweep(const std::vector<ScoredPrediction>& preds) {
    std::set<double> thresholds;
    for (const ScoredPrediction& p : preds) thresholds.insert(p.score);
    double pos = 0, neg = 0;
    for (const ScoredPrediction& p : preds)
        (p.truth == SourceLabel::machine ? pos : neg) += 1;
    std::vector<SweepPoint> points{{0.0, 0.0}};   // threshold above every score
    for (auto it = thresholds.rbegin(); it != thresholds.rend(); ++it) {
        double tp = 0, fp = 0;
        for (const ScoredPrediction& p : preds) {
            if (p.score >= *it) (p.truth == SourceLabel::machine ? tp : fp) += 1;
        }
        points.push_back({fp / neg, tp / pos});
    }
    return points;
}

double brute_force_tpr_at(const std::vector<ScoredPrediction>& preds, double target) {
    double best = 0.0;
    for (const SweepPoint& pt : brute_force_sweep(preds))
        if (pt.fpr <= target) best = std::max(best, pt.tpr);
    return best;
}

} // namespace

TEST_CASE("macro F1") {
    SUBCASE("perfect predictions") {
        auto preds = from_scores({{1.0, SourceLabel::machine},
                                  {0.9, SourceLabel::machine},
                                  {-1.0, SourceLabel::human},
                                  {-0.5, SourceLabel::human}});
        CHECK(macro_f1(preds) == 1.0);
        CHECK(accuracy(preds) == 1.0);
    }
    SUBCASE("all predicted machine on a balanced set gives 1/3") {
        auto preds = from_scores({{1.0, SourceLabel::machine},
                                  {1.0, SourceLabel::machine},
                                  {1.0, SourceLabel::human},
                                  {1.0, SourceLabel::human}});
        CHECK(macro_f1(preds) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }
    SUBCASE("hand-worked confusion TP=3 FP=1 FN=2 TN=4") {
        std::vector<ScoredPrediction> preds;
        auto add = [&](int n, SourceLabel truth, SourceLabel predicted) {
            for (int i = 0; i < n; ++i)
                preds.push_back(ScoredPrediction{"d" + std::to_string(preds.size()), truth, 0.0,
                                                 predicted, "t"});
        };
        add(3, SourceLabel::machine, SourceLabel::machine);
        add(1, SourceLabel::human, SourceLabel::machine);
        add(2, SourceLabel::machine, SourceLabel::human);
        add(4, SourceLabel::human, SourceLabel::human);
        // machine F1 = 6/9, human F1 = 8/11, macro = 0.69697
        double expected = 0.5 * (6.0 / 9.0 + 8.0 / 11.0);
        CHECK(macro_f1(preds) == doctest::Approx(expected).epsilon(1e-12));
        CHECK(macro_f1(preds) == doctest::Approx(0.697).epsilon(1e-3));
        ConfusionCounts c = confusion(preds);
        CHECK(c.tp == 3);
        CHECK(c.fp == 1);
        CHECK(c.fn == 2);
        CHECK(c.tn == 4);
    }
    SUBCASE("single-class truth is a metric error") {
        auto preds = from_scores({{1.0, SourceLabel::machine}, {0.0, SourceLabel::machine}});
        CHECK_THROWS_AS(macro_f1(preds), MetricError);
    }
    SUBCASE("class-swap symmetry") {
        DetRng rng(3);
        std::vector<ScoredPrediction> preds;
        for (int i = 0; i < 40; ++i) {
            SourceLabel truth = rng.next_below(2) ? SourceLabel::machine : SourceLabel::human;
            SourceLabel predicted = rng.next_below(2) ? SourceLabel::machine : SourceLabel::human;
            preds.push_back(ScoredPrediction{"d" + std::to_string(i), truth, 0.0, predicted, "t"});
        }
        std::vector<ScoredPrediction> swapped = preds;
        for (ScoredPrediction& p : swapped) {
            p.truth = p.truth == SourceLabel::machine ? SourceLabel::human : SourceLabel::machine;
            p.predicted = *p.predicted == SourceLabel::machine ? SourceLabel::human
                                                               : SourceLabel::machine;
        }
        CHECK(macro_f1(preds) == doctest::Approx(macro_f1(swapped)).epsilon(1e-12));
    }
}

TEST_CASE("roc points") {
    SUBCASE("monotone staircase from (0,0) to (1,1)") {
        DetRng rng(5);
        std::vector<std::pair<double, SourceLabel>> rows;
        for (int i = 0; i < 50; ++i)
            rows.push_back({rng.next_gaussian(),
                            rng.next_below(2) ? SourceLabel::machine : SourceLabel::human});
        auto preds = from_scores(rows);
        std::vector<RocPoint> pts = roc_points(preds);
        CHECK(pts.front().fpr == 0.0);
        CHECK(pts.front().tpr == 0.0);
        CHECK(pts.back().fpr == 1.0);
        CHECK(pts.back().tpr == 1.0);
        for (std::size_t i = 1; i < pts.size(); ++i) {
            CHECK(pts[i].fpr >= pts[i - 1].fpr);
            CHECK(pts[i].tpr >= pts[i - 1].tpr);
        }
    }
    SUBCASE("perfect scores have unit area") {
        auto preds = from_scores({{2.0, SourceLabel::machine},
                                  {1.5, SourceLabel::machine},
                                  {0.5, SourceLabel::human},
                                  {0.1, SourceLabel::human}});
        CHECK(roc_auc(roc_points(preds)) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("equals the brute-force enumeration on small fixtures") {
        DetRng rng(7);
        for (int trial = 0; trial < 30; ++trial) {
            std::vector<std::pair<double, SourceLabel>> rows;
            std::size_t n = 4 + rng.next_below(17);
            bool machine_seen = false, human_seen = false;
            for (std::size_t i = 0; i < n; ++i) {
                SourceLabel l = rng.next_below(2) ? SourceLabel::machine : SourceLabel::human;
                (l == SourceLabel::machine ? machine_seen : human_seen) = true;
                // coarse scores force plenty of ties
                rows.push_back({std::floor(rng.next_gaussian() * 2.0) / 2.0, l});
            }
            if (!machine_seen || !human_seen) continue;
            auto preds = from_scores(rows);
            std::vector<RocPoint> pts = roc_points(preds);
            std::vector<SweepPoint> expected = brute_force_sweep(preds);
            REQUIRE(pts.size() == expected.size());
            for (std::size_t i = 0; i < pts.size(); ++i) {
                CHECK(pts[i].fpr == doctest::Approx(expected[i].fpr).epsilon(1e-12));
                CHECK(pts[i].tpr == doctest::Approx(expected[i].tpr).epsilon(1e-12));
            }
        }
    }
    SUBCASE("non-finite scores are rejected") {
        auto preds = from_scores({{std::nan(""), SourceLabel::machine}, {0.0, SourceLabel::human}});
        CHECK_THROWS_AS(roc_points(preds), MetricError);
    }
}

TEST_CASE("tpr at fixed fpr") {
    SUBCASE("perfect separation reaches 1.0 at every target") {
        auto preds = from_scores({{2.0, SourceLabel::machine},
                                  {1.5, SourceLabel::machine},
                                  {0.5, SourceLabel::human},
                                  {0.1, SourceLabel::human}});
        auto result = tpr_at_fpr(preds, {0.01, 0.05, 0.5});
        CHECK(result.at(0.01) == 1.0);
        CHECK(result.at(0.05) == 1.0);
        CHECK(result.at(0.5) == 1.0);
    }
    SUBCASE("anti-correlated scores give 0 at small targets") {
        auto preds = from_scores({{-2.0, SourceLabel::machine},
                                  {-1.5, SourceLabel::machine},
                                  {1.5, SourceLabel::human},
                                  {2.0, SourceLabel::human}});
        CHECK(tpr_at_fpr(preds, {0.01}).at(0.01) == 0.0);
    }
    SUBCASE("10-point hand-built list matches the brute-force sweep") {
        auto preds = from_scores({{0.9, SourceLabel::machine},
                                  {0.8, SourceLabel::machine},
                                  {0.8, SourceLabel::human},
                                  {0.7, SourceLabel::machine},
                                  {0.6, SourceLabel::human},
                                  {0.5, SourceLabel::machine},
                                  {0.4, SourceLabel::human},
                                  {0.3, SourceLabel::machine},
                                  {0.2, SourceLabel::human},
                                  {0.1, SourceLabel::human}});
        for (double target : {0.0, 0.01, 0.2, 0.4, 0.6, 1.0}) {
            INFO("target " << target);
            CHECK(tpr_at_fpr(preds, {target}).at(target) ==
                  doctest::Approx(brute_force_tpr_at(preds, target)).epsilon(1e-12));
        }
        // at FPR <= 0.2 exactly one human (0.8) may slip in: threshold 0.7
        CHECK(tpr_at_fpr(preds, {0.2}).at(0.2) == doctest::Approx(0.6).epsilon(1e-12));
    }
    SUBCASE("randomized fixtures up to 20 points match the oracle") {
        DetRng rng(13);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<std::pair<double, SourceLabel>> rows;
            std::size_t n = 4 + rng.next_below(17);
            bool m = false, h = false;
            for (std::size_t i = 0; i < n; ++i) {
                SourceLabel l = rng.next_below(2) ? SourceLabel::machine : SourceLabel::human;
                (l == SourceLabel::machine ? m : h) = true;
                rows.push_back({std::floor(rng.next_gaussian() * 3.0) / 3.0, l});
            }
            if (!m || !h) continue;
            auto preds = from_scores(rows);
            for (double target : {0.01, 0.05, 0.25, 0.75}) {
                CHECK(tpr_at_fpr(preds, {target}).at(target) ==
                      doctest::Approx(brute_force_tpr_at(preds, target)).epsilon(1e-12));
            }
        }
    }
    SUBCASE("tpr is non-decreasing in the target") {
        DetRng rng(17);
        std::vector<std::pair<double, SourceLabel>> rows;
        for (int i = 0; i < 60; ++i)
            rows.push_back({rng.next_gaussian() + (i % 2 ? 0.8 : 0.0),
                            i % 2 ? SourceLabel::machine : SourceLabel::human});
        auto preds = from_scores(rows);
        auto result = tpr_at_fpr(preds, {0.01, 0.05, 0.1, 0.3, 0.7, 1.0});
        double last = 0.0;
        for (const auto& [target, tpr] : result) {
            CHECK(tpr >= last);
            last = tpr;
        }
    }
}

TEST_CASE("score TSV round trip preserves evaluation bit for bit") {
    DetRng rng(19);
    std::vector<ScoredPrediction> preds;
    std::map<std::string, SourceLabel> truth;
    for (int i = 0; i < 40; ++i) {
        SourceLabel l = i % 2 ? SourceLabel::machine : SourceLabel::human;
        double score = rng.next_gaussian() + (l == SourceLabel::machine ? 0.4 : 0.0);
        std::string id = "doc" + std::to_string(i);
        preds.push_back(ScoredPrediction{id, l, score, std::nullopt, "svm"});
        truth[id] = l;
    }
    std::string tsv = score_tsv(preds);
    std::vector<ScoredPrediction> back = parse_score_tsv(tsv, truth);
    REQUIRE(back.size() == preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i)
        CHECK(std::memcmp(&back[i].score, &preds[i].score, sizeof(double)) == 0);
    CHECK(macro_f1(back) == macro_f1(preds));
    auto a = tpr_at_fpr(preds, {0.01, 0.05});
    auto b = tpr_at_fpr(back, {0.01, 0.05});
    CHECK(a == b);

    SUBCASE("unknown doc is a metadata error") {
        CHECK_THROWS_AS(parse_score_tsv("doc_id\tdetector_id\tscore\nghost\tsvm\t0.5\n", truth),
                        MetadataError);
    }
    SUBCASE("bad header is a schema error") {
        CHECK_THROWS_AS(parse_score_tsv("a\tb\tc\n", truth), SchemaError);
    }
}

TEST_CASE("rating aggregation") {
    SUBCASE("unanimous correct raters: accuracy 1.0 and kappa 1.0") {
        RatingSet rs;
        for (int i = 0; i < 10; ++i) {
            RatingItem item;
            item.pair_id = "pair" + std::to_string(i);
            item.gold = i % 2 ? 'A' : 'B';   // both categories occur
            for (int r = 0; r < 5; ++r)
                item.choices.push_back({"rater" + std::to_string(r), item.gold});
            rs.items.push_back(std::move(item));
        }
        RatingReport report = aggregate_ratings(rs);
        CHECK(report.majority_accuracy == 1.0);
        CHECK(report.fleiss_kappa == doctest::Approx(1.0).epsilon(1e-12));
        for (const auto& [rater, acc] : report.per_rater_accuracy) CHECK(acc == 1.0);
    }
    SUBCASE("worked 3-item, 5-rater table matches hand arithmetic") {
        // counts per item (A, B): (5,0), (3,2), (1,4)
        // P_i = (20, 8, 12)/20 -> P_bar = 2/3; p_A = 9/15, p_B = 6/15
        // P_e = 0.36 + 0.16 = 0.52; kappa = (2/3 - 0.52)/0.48 = 11/36
        RatingSet rs;
        auto item = [&](const char* id, int a_count, char gold) {
            RatingItem it;
            it.pair_id = id;
            it.gold = gold;
            for (int r = 0; r < 5; ++r)
                it.choices.push_back({"rater" + std::to_string(r), r < a_count ? 'A' : 'B'});
            return it;
        };
        rs.items.push_back(item("i1", 5, 'A'));
        rs.items.push_back(item("i2", 3, 'A'));
        rs.items.push_back(item("i3", 1, 'B'));
        RatingReport report = aggregate_ratings(rs);
        CHECK(report.fleiss_kappa == doctest::Approx(11.0 / 36.0).epsilon(1e-9));
        // majorities: A (correct), A (correct), B (correct)
        CHECK(report.majority_accuracy == 1.0);
        // rater0 chose A,A,A -> 2/3 correct
        CHECK(report.per_rater_accuracy[0].second == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    }
    SUBCASE("random raters land near zero kappa") {
        DetRng rng(23);
        RatingSet rs;
        for (int i = 0; i < 200; ++i) {
            RatingItem item;
            item.pair_id = "pair" + std::to_string(i);
            item.gold = 'A';
            for (int r = 0; r < 5; ++r)
                item.choices.push_back({"rater" + std::to_string(r),
                                        rng.next_below(2) ? 'A' : 'B'});
            rs.items.push_back(std::move(item));
        }
        RatingReport report = aggregate_ratings(rs);
        CHECK(std::fabs(report.fleiss_kappa) < 0.05);
    }
    SUBCASE("inconsistent rater counts are a shape error") {
        RatingSet rs;
        RatingItem a{"p1", {{"r1", 'A'}, {"r2", 'B'}}, 'A'};
        RatingItem b{"p2", {{"r1", 'A'}}, 'A'};
        rs.items = {a, b};
        CHECK_THROWS_AS(aggregate_ratings(rs), MetricError);
    }
    SUBCASE("even rater count: ties count as incorrect") {
        RatingSet rs;
        RatingItem t{"p1", {{"r1", 'A'}, {"r2", 'B'}, {"r3", 'A'}, {"r4", 'B'}}, 'A'};
        RatingItem u{"p2", {{"r1", 'A'}, {"r2", 'A'}, {"r3", 'A'}, {"r4", 'B'}}, 'A'};
        rs.items = {t, u};
        RatingReport report = aggregate_ratings(rs);
        CHECK(report.majority_accuracy == 0.5);
    }
}

TEST_CASE("ratings CSV parsing") {
    std::string csv = "pair_id,rater_id,choice,gold\n"
                      "p1,r1,A,A\n"
                      "p1,r2,B,A\n"
                      "p2,r1,B,B\n"
                      "p2,r2,B,B\n";
    RatingSet rs = parse_ratings_csv(csv);
    REQUIRE(rs.items.size() == 2);
    CHECK(rs.items[0].pair_id == "p1");
    CHECK(rs.items[0].choices.size() == 2);
    CHECK(rs.items[1].gold == 'B');
    RatingReport report = aggregate_ratings(rs);
    CHECK(report.raters_per_item == 2);

    CHECK_THROWS_AS(parse_ratings_csv("wrong,header\n"), SchemaError);
    CHECK_THROWS_AS(parse_ratings_csv("pair_id,rater_id,choice,gold\np1,r1,AB,A\n"), ParseError);
    CHECK_THROWS_AS(parse_ratings_csv("pair_id,rater_id,choice,gold\np1,r1,A,A\np1,r2,A,B\n"),
                    ParseError);
}

TEST_CASE("evaluate_detector bundles the metrics") {
    auto preds = from_scores({{2.0, SourceLabel::machine},
                              {1.5, SourceLabel::machine},
                              {-0.5, SourceLabel::human},
                              {-0.9, SourceLabel::human}});
    DetectorEval eval = evaluate_detector(preds);
    CHECK(eval.macro_f1 == 1.0);
    CHECK(eval.accuracy == 1.0);
    CHECK(eval.tpr_at_fpr.at(0.01) == 1.0);
    CHECK(eval.counts.tp == 2);
    CHECK(eval.counts.tn == 2);
}
