#ifndef MGTKIT_MANOVA_HPP
#define MGTKIT_MANOVA_HPP

#include "mgtkit/profiling.hpp"

#include <string>
#include <vector>

namespace mgtkit {

struct GroupMatrix {
    std::string label;
    std::vector<std::vector<double>> rows;   // complete observations, same width
};

struct ManovaResult {
    double pillai = 0.0;
    double f_stat = 0.0;
    int df1 = 0;
    int df2 = 0;
    double p_value = 1.0;
    std::vector<std::size_t> group_sizes;
    std::size_t p_used = 0;                  // features kept after dropping
    std::vector<std::string> dropped;        // zero-variance / collinear features
    bool condition_warning = false;          // (H+E) condition estimate above 1e12
};

// One-way MANOVA with Pillai's trace V = tr(H (H+E)^-1) over between-group
// (H) and within-group (E) SSCP matrices, with the standard F approximation
// and a p-value from the regularized incomplete beta function.
ManovaResult manova_pillai(const std::vector<GroupMatrix>& groups,
                           const std::vector<std::string>& feature_names);

// Build complete group matrices from a profiled corpus: one group per source
// label, masked cells imputed with the pooled mean of defined values.
std::vector<GroupMatrix> groups_from_profiled(const ProfiledCorpus& pc,
                                              const std::vector<std::string>& features);

// Regularized incomplete beta function I_x(a, b), accurate to ~1e-12.
double regularized_incomplete_beta(double a, double b, double x);

// Upper tail of the F distribution, P(F_{df1,df2} > f).
double f_survival(double f, double df1, double df2);

} // namespace mgtkit

#endif
