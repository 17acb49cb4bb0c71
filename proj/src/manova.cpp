#include "mgtkit/manova.hpp"
#include "mgtkit/errors.hpp"
#include "mgtkit/util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mgtkit {

namespace {

using Matrix = std::vector<std::vector<double>>;

Matrix zeros(std::size_t n) { return Matrix(n, std::vector<double>(n, 0.0)); }

// Gauss-Jordan inverse with partial pivoting. Reports the ratio of the
// largest to smallest pivot magnitude as a cheap condition estimate; returns
// false when a pivot vanishes.
bool invert(Matrix m, Matrix& inv, double& condition_estimate) {
    std::size_t n = m.size();
    inv = zeros(n);
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
    double scale = 0.0;
    for (const auto& row : m)
        for (double v : row) scale = std::max(scale, std::fabs(v));
    if (scale == 0.0) return false;
    double min_pivot = std::numeric_limits<double>::max(), max_pivot = 0.0;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(m[r][col]) > std::fabs(m[pivot][col])) pivot = r;
        if (std::fabs(m[pivot][col]) < 1e-13 * scale) return false;
        std::swap(m[pivot], m[col]);
        std::swap(inv[pivot], inv[col]);
        double pv = m[col][col];
        min_pivot = std::min(min_pivot, std::fabs(pv));
        max_pivot = std::max(max_pivot, std::fabs(pv));
        for (std::size_t c = 0; c < n; ++c) {
            m[col][c] /= pv;
            inv[col][c] /= pv;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            double factor = m[r][col];
            if (factor == 0.0) continue;
            for (std::size_t c = 0; c < n; ++c) {
                m[r][c] -= factor * m[col][c];
                inv[r][c] -= factor * inv[col][c];
            }
        }
    }
    condition_estimate = max_pivot / min_pivot;
    return true;
}

double betacf(double a, double b, double x) {
    // continued fraction for the incomplete beta (modified Lentz)
    const int max_iter = 300;
    const double eps = 1e-15, fpmin = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

} // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                   b * std::log1p(-x);
    double bt = std::exp(ln_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

double f_survival(double f, double df1, double df2) {
    if (f <= 0.0) return 1.0;
    if (std::isinf(f)) return 0.0;
    return regularized_incomplete_beta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f));
}

std::vector<GroupMatrix> groups_from_profiled(const ProfiledCorpus& pc,
                                              const std::vector<std::string>& features) {
    const FeatureRegistry& reg = FeatureRegistry::instance();
    std::vector<std::size_t> idx;
    for (const std::string& name : features) {
        auto i = reg.resolve(name);
        if (!i) throw SchemaError("manova: unknown feature '" + name + "'");
        idx.push_back(*i);
    }
    std::vector<double> pooled_mean(idx.size(), 0.0);
    for (std::size_t j = 0; j < idx.size(); ++j) {
        std::vector<double> col = feature_column(pc, idx[j]);
        double sum = 0.0;
        for (double v : col) sum += v;
        pooled_mean[j] = col.empty() ? 0.0 : sum / static_cast<double>(col.size());
    }
    GroupMatrix human{"human", {}}, machine{"machine", {}};
    for (std::size_t r = 0; r < pc.rows.size(); ++r) {
        std::vector<double> row(idx.size());
        for (std::size_t j = 0; j < idx.size(); ++j)
            row[j] = pc.rows[r].defined(idx[j]) ? pc.rows[r].value(idx[j]) : pooled_mean[j];
        (pc.labels[r] == SourceLabel::human ? human : machine).rows.push_back(std::move(row));
    }
    return {std::move(human), std::move(machine)};
}

ManovaResult manova_pillai(const std::vector<GroupMatrix>& groups,
                           const std::vector<std::string>& feature_names) {
    if (groups.size() < 2) throw ConfigError("manova: need at least 2 groups");
    std::size_t p0 = feature_names.size();
    for (const GroupMatrix& g : groups) {
        if (g.rows.empty()) throw MetricError("manova: group '" + g.label + "' is empty");
        for (const auto& row : g.rows)
            if (row.size() != p0)
                throw SchemaError("manova: row width mismatch in group '" + g.label + "'");
    }

    ManovaResult result;
    std::size_t total_n = 0;
    for (const GroupMatrix& g : groups) {
        result.group_sizes.push_back(g.rows.size());
        total_n += g.rows.size();
    }

    // column bookkeeping over the original feature set
    std::vector<std::size_t> kept(p0);
    for (std::size_t j = 0; j < p0; ++j) kept[j] = j;

    auto column = [&](std::size_t j) {
        std::vector<double> col;
        col.reserve(total_n);
        for (const GroupMatrix& g : groups)
            for (const auto& row : g.rows) col.push_back(row[j]);
        return col;
    };

    // drop zero-variance features
    {
        std::vector<std::size_t> next;
        for (std::size_t j : kept) {
            std::vector<double> col = column(j);
            double mean = 0.0;
            for (double v : col) mean += v;
            mean /= static_cast<double>(col.size());
            double var = 0.0;
            for (double v : col) var += (v - mean) * (v - mean);
            if (var <= 0.0)
                result.dropped.push_back(feature_names[j]);
            else
                next.push_back(j);
        }
        kept = std::move(next);
    }

    auto pearson = [&](std::size_t a, std::size_t b) {
        std::vector<double> x = column(a), y = column(b);
        double mx = 0.0, my = 0.0;
        for (double v : x) mx += v;
        for (double v : y) my += v;
        mx /= static_cast<double>(x.size());
        my /= static_cast<double>(y.size());
        double sxy = 0.0, sxx = 0.0, syy = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            sxy += (x[i] - mx) * (y[i] - my);
            sxx += (x[i] - mx) * (x[i] - mx);
            syy += (y[i] - my) * (y[i] - my);
        }
        return sxy / std::sqrt(sxx * syy);
    };

    // drop the later member of near-perfectly correlated pairs (the registry
    // contains exact complements like subj_pre / subj_post)
    {
        bool changed = true;
        while (changed) {
            changed = false;
            for (std::size_t a = 0; a < kept.size() && !changed; ++a) {
                for (std::size_t b = a + 1; b < kept.size() && !changed; ++b) {
                    if (std::fabs(pearson(kept[a], kept[b])) > 0.9999) {
                        result.dropped.push_back(feature_names[kept[b]]);
                        kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(b));
                        changed = true;
                    }
                }
            }
        }
    }

    std::size_t g = groups.size();
    auto compute = [&](const std::vector<std::size_t>& cols, Matrix& h, Matrix& e) {
        std::size_t p = cols.size();
        std::vector<double> grand(p, 0.0);
        std::vector<std::vector<double>> group_means(g, std::vector<double>(p, 0.0));
        for (std::size_t gi = 0; gi < g; ++gi) {
            for (const auto& row : groups[gi].rows)
                for (std::size_t j = 0; j < p; ++j) group_means[gi][j] += row[cols[j]];
            for (std::size_t j = 0; j < p; ++j) {
                grand[j] += group_means[gi][j];
                group_means[gi][j] /= static_cast<double>(groups[gi].rows.size());
            }
        }
        for (std::size_t j = 0; j < p; ++j) grand[j] /= static_cast<double>(total_n);

        h = zeros(p);
        e = zeros(p);
        for (std::size_t gi = 0; gi < g; ++gi) {
            double ng = static_cast<double>(groups[gi].rows.size());
            for (std::size_t a = 0; a < p; ++a)
                for (std::size_t b = 0; b < p; ++b)
                    h[a][b] += ng * (group_means[gi][a] - grand[a]) * (group_means[gi][b] - grand[b]);
            for (const auto& row : groups[gi].rows)
                for (std::size_t a = 0; a < p; ++a)
                    for (std::size_t b = 0; b < p; ++b)
                        e[a][b] += (row[cols[a]] - group_means[gi][a]) * (row[cols[b]] - group_means[gi][b]);
        }
    };

    Matrix h, e, t_inv;
    double cond = 0.0;
    while (true) {
        if (kept.empty())
            throw SingularityError("manova: no features left after dropping (dropped: " +
                                   join(result.dropped, ", ") + ")");
        compute(kept, h, e);
        Matrix t = zeros(kept.size());
        for (std::size_t a = 0; a < kept.size(); ++a)
            for (std::size_t b = 0; b < kept.size(); ++b) t[a][b] = h[a][b] + e[a][b];
        if (invert(std::move(t), t_inv, cond)) break;
        // still singular: peel off the most correlated remaining pair
        double best = 0.0;
        std::size_t best_b = kept.size();
        for (std::size_t a = 0; a < kept.size(); ++a) {
            for (std::size_t b = a + 1; b < kept.size(); ++b) {
                double r = std::fabs(pearson(kept[a], kept[b]));
                if (r > best) {
                    best = r;
                    best_b = b;
                }
            }
        }
        if (best_b == kept.size() || kept.size() == 1)
            throw SingularityError("manova: (H+E) singular; remaining features: " + [&] {
                std::vector<std::string> names;
                for (std::size_t j : kept) names.push_back(feature_names[j]);
                return join(names, ", ");
            }());
        result.dropped.push_back(feature_names[kept[best_b]]);
        kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(best_b));
    }

    std::size_t p = kept.size();
    result.p_used = p;
    result.condition_warning = cond > 1e12;
    for (std::size_t gi = 0; gi < g; ++gi)
        if (groups[gi].rows.size() < p + 2)
            throw MetricError("manova: group '" + groups[gi].label + "' has " +
                              std::to_string(groups[gi].rows.size()) + " rows, needs >= " +
                              std::to_string(p + 2));

    double v = 0.0;
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < p; ++b) v += h[a][b] * t_inv[b][a];
    result.pillai = v;

    // Pillai F approximation: s = min(p, g-1), m = (|p-g+1|-1)/2,
    // n = (N-g-p-1)/2, F = ((2n+s+1)/(2m+s+1)) * (V/s)/(1-V/s)
    double s = std::min(static_cast<double>(p), static_cast<double>(g) - 1.0);
    double m = (std::fabs(static_cast<double>(p) - static_cast<double>(g) + 1.0) - 1.0) / 2.0;
    double nn = (static_cast<double>(total_n) - static_cast<double>(g) - static_cast<double>(p) - 1.0) / 2.0;
    result.df1 = static_cast<int>(s * (2.0 * m + s + 1.0));
    result.df2 = static_cast<int>(s * (2.0 * nn + s + 1.0));
    if (result.df2 <= 0)
        throw MetricError("manova: non-positive error degrees of freedom (n too small for p)");
    double ratio = v / s;
    if (ratio >= 1.0) {
        result.f_stat = std::numeric_limits<double>::infinity();
        result.p_value = 0.0;
    } else {
        result.f_stat = ((2.0 * nn + s + 1.0) / (2.0 * m + s + 1.0)) * ratio / (1.0 - ratio);
        result.p_value = f_survival(result.f_stat, result.df1, result.df2);
    }
    return result;
}

} // namespace mgtkit
