#ifndef MGTKIT_FEATURES_HPP
#define MGTKIT_FEATURES_HPP

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mgtkit {

// Closed registry of linguistic-profiling features. Canonical names are
// snake_case; defining formulas live in docs/features.md. The registry order
// is the canonical column order everywhere (CSV export, model files, reports).
class FeatureRegistry {
public:
    static const FeatureRegistry& instance();

    std::size_t size() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }
    const std::string& name(std::size_t i) const { return names_[i]; }

    std::optional<std::size_t> index_of(std::string_view canonical) const;

    // Accepts canonical names, hyphenated spelling variants
    // (ttr-form-chunks-100) and a small table of legacy aliases.
    std::optional<std::size_t> resolve(std::string_view name) const;

    // Families whose defined members must sum to 1 (upos_dist_*, dep_dist_*,
    // verbs_form_dist_*, ...). Each family is a list of registry indices.
    const std::vector<std::vector<std::size_t>>& distribution_families() const {
        return families_;
    }

    // Features constrained to [0,1].
    const std::vector<std::size_t>& ratio_features() const { return ratio_; }

private:
    FeatureRegistry();
    std::vector<std::string> names_;
    std::map<std::string, std::size_t, std::less<>> by_name_;
    std::map<std::string, std::string, std::less<>> aliases_;
    std::vector<std::vector<std::size_t>> families_;
    std::vector<std::size_t> ratio_;
};

// Dense feature vector over the registry; defined() is false where the
// feature has an empty denominator for the document.
class FeatureVector {
public:
    FeatureVector() : FeatureVector(FeatureRegistry::instance().size()) {}
    explicit FeatureVector(std::size_t n) : values_(n, 0.0), defined_(n, 0) {}

    std::size_t size() const { return values_.size(); }
    bool defined(std::size_t i) const { return defined_[i] != 0; }
    double value(std::size_t i) const { return values_[i]; }

    void set(std::size_t i, double v) {
        values_[i] = v;
        defined_[i] = 1;
    }
    void mask(std::size_t i) {
        values_[i] = 0.0;
        defined_[i] = 0;
    }

    bool operator==(const FeatureVector&) const = default;

private:
    std::vector<double> values_;
    std::vector<std::uint8_t> defined_;
};

} // namespace mgtkit

#endif
