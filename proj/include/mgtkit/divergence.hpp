#ifndef MGTKIT_DIVERGENCE_HPP
#define MGTKIT_DIVERGENCE_HPP

#include "mgtkit/profiling.hpp"

#include <span>
#include <string>
#include <vector>

namespace mgtkit {

struct HistogramSpec {
    int bins = 30;
    double alpha = 1e-10;    // additive smoothing per bin
    bool log2_base = true;   // false = natural log

    bool operator==(const HistogramSpec&) const = default;
};

struct JsResult {
    double value = 0.0;
    bool degenerate = false;   // all values equal in both samples
};

// Jensen-Shannon divergence of two normalized discrete distributions,
// JSD(P,Q) = 0.5 KL(P||M) + 0.5 KL(Q||M) with M = (P+Q)/2. Base-2 logarithm
// bounds the result to [0,1].
double jsd_discrete(std::span<const double> p, std::span<const double> q, bool log2_base = true);

// Equal-width histograms over the pooled min/max of both samples,
// alpha-smoothed and normalized, then jsd_discrete. Requires >= 2 values per
// sample. A degenerate pooled range yields 0 with the flag set.
JsResult js_divergence(std::span<const double> a, std::span<const double> b,
                       const HistogramSpec& spec = {});

struct DivergenceCell {
    std::string feature;
    double js = 0.0;
    bool degenerate = false;
    bool defined = true;     // false when either side has < 2 defined values
    std::size_t n_a = 0;
    std::size_t n_b = 0;
};

struct DivergenceReport {
    std::vector<DivergenceCell> cells;   // one per requested feature
    HistogramSpec spec;
};

// Per-feature JS divergence between two corpus slices (defined values only).
DivergenceReport divergence_report(const ProfiledCorpus& a, const ProfiledCorpus& b,
                                   const std::vector<std::string>& features,
                                   const HistogramSpec& spec = {});

// Normalized densities for plotting: densities sum to 1/binwidth so that
// sum(density * binwidth) = 1.
struct HistogramData {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<double> densities;
};

HistogramData histogram_data(std::span<const double> values, int bins, double lo, double hi);

} // namespace mgtkit

#endif
