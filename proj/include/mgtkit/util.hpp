#ifndef MGTKIT_UTIL_HPP
#define MGTKIT_UTIL_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mgtkit {

std::vector<std::string> split(std::string_view s, char delim);
std::string_view trim(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// UTF-8 code point count (continuation bytes not counted).
std::size_t codepoint_count(std::string_view s);

// Shortest decimal form that round-trips the exact double (std::to_chars).
std::string fmt_double(double v);
double parse_double(std::string_view s, std::string_view context);
long parse_long(std::string_view s, std::string_view context);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);
// Write to a temp file in the same directory, then rename over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string sha256_hex(std::string_view data);
std::string sha256_file_hex(const std::filesystem::path& path);

// Deterministic RNG with a fully specified output sequence (splitmix64 core),
// so seeded runs produce identical bytes on every platform and standard
// library. std::shuffle / std::*_distribution are not portable.
class DetRng {
public:
    explicit DetRng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, n), rejection-sampled to remove modulo bias.
    std::uint64_t next_below(std::uint64_t n);

    // Uniform in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller (cached spare).
    double next_gaussian();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
    std::optional<double> spare_;
};

} // namespace mgtkit

#endif
