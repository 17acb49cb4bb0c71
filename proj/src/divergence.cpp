#include "mgtkit/divergence.hpp"
#include "mgtkit/errors.hpp"

#include <algorithm>
#include <cmath>

namespace mgtkit {

namespace {

double xlogx_ratio(double p, double m, bool log2_base) {
    if (p <= 0.0) return 0.0;
    double v = p * std::log(p / m);
    return log2_base ? v / std::log(2.0) : v;
}

std::vector<double> smoothed_histogram(std::span<const double> values, int bins, double lo,
                                       double hi, double alpha) {
    std::vector<double> counts(static_cast<std::size_t>(bins), alpha);
    double width = (hi - lo) / bins;
    for (double v : values) {
        int idx = static_cast<int>((v - lo) / width);
        idx = std::clamp(idx, 0, bins - 1);
        counts[static_cast<std::size_t>(idx)] += 1.0;
    }
    double total = 0.0;
    for (double c : counts) total += c;
    for (double& c : counts) c /= total;
    return counts;
}

} // namespace

double jsd_discrete(std::span<const double> p, std::span<const double> q, bool log2_base) {
    if (p.size() != q.size()) throw MetricError("jsd: distributions differ in length");
    double kl_pm = 0.0, kl_qm = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double m = 0.5 * (p[i] + q[i]);
        if (m <= 0.0) continue;
        kl_pm += xlogx_ratio(p[i], m, log2_base);
        kl_qm += xlogx_ratio(q[i], m, log2_base);
    }
    double js = 0.5 * kl_pm + 0.5 * kl_qm;
    // numerical noise can push the value a hair outside [0,1]
    double upper = log2_base ? 1.0 : std::log(2.0);
    return std::clamp(js, 0.0, upper);
}

JsResult js_divergence(std::span<const double> a, std::span<const double> b,
                       const HistogramSpec& spec) {
    if (a.size() < 2 || b.size() < 2)
        throw MetricError("js_divergence: each sample needs at least 2 values (got " +
                          std::to_string(a.size()) + " and " + std::to_string(b.size()) + ")");
    if (spec.bins < 2) throw ConfigError("histogram spec: bins must be >= 2");
    if (spec.alpha <= 0.0) throw ConfigError("histogram spec: alpha must be > 0");

    double lo = a[0], hi = a[0];
    for (double v : a) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (double v : b) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(hi > lo)) return JsResult{0.0, true};

    std::vector<double> pa = smoothed_histogram(a, spec.bins, lo, hi, spec.alpha);
    std::vector<double> pb = smoothed_histogram(b, spec.bins, lo, hi, spec.alpha);
    return JsResult{jsd_discrete(pa, pb, spec.log2_base), false};
}

DivergenceReport divergence_report(const ProfiledCorpus& a, const ProfiledCorpus& b,
                                   const std::vector<std::string>& features,
                                   const HistogramSpec& spec) {
    const FeatureRegistry& reg = FeatureRegistry::instance();
    DivergenceReport report;
    report.spec = spec;
    for (const std::string& name : features) {
        auto idx = reg.resolve(name);
        if (!idx) throw SchemaError("divergence report: unknown feature '" + name + "'");
        DivergenceCell cell;
        cell.feature = reg.name(*idx);
        std::vector<double> va = feature_column(a, *idx);
        std::vector<double> vb = feature_column(b, *idx);
        cell.n_a = va.size();
        cell.n_b = vb.size();
        if (va.size() < 2 || vb.size() < 2) {
            cell.defined = false;
        } else {
            JsResult r = js_divergence(va, vb, spec);
            cell.js = r.value;
            cell.degenerate = r.degenerate;
        }
        report.cells.push_back(std::move(cell));
    }
    return report;
}

HistogramData histogram_data(std::span<const double> values, int bins, double lo, double hi) {
    if (bins < 2) throw ConfigError("histogram spec: bins must be >= 2");
    HistogramData data;
    data.lo = lo;
    data.hi = hi;
    data.densities.assign(static_cast<std::size_t>(bins), 0.0);
    if (values.empty() || !(hi > lo)) return data;
    double width = (hi - lo) / bins;
    for (double v : values) {
        int idx = static_cast<int>((v - lo) / width);
        idx = std::clamp(idx, 0, bins - 1);
        data.densities[static_cast<std::size_t>(idx)] += 1.0;
    }
    for (double& d : data.densities) d /= static_cast<double>(values.size()) * width;
    return data;
}

} // namespace mgtkit
