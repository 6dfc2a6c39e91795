#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace satopf {

/// SplitMix64 finalizer; bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Derive an independent stream seed from a base seed and a stream tag.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return mix64(mix64(seed) + stream);
}

/// Counter-based uniform draw in (0, 1), keyed by (seed, scenario, component).
/// Identical regardless of evaluation order or thread schedule.
inline double counter_uniform(std::uint64_t seed, std::uint64_t scenario, std::uint64_t component) {
    const std::uint64_t h = mix64(mix64(mix64(seed) + scenario) + component);
    return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

/// Inverse standard normal CDF, accurate to near machine precision
/// (Acklam's rational approximation refined by one Halley step).
double inv_normal_cdf(double p);

/// Standard normal CDF via erfc.
double normal_cdf(double x);

/// Counter-based standard normal draw (inverse-CDF transform of counter_uniform).
inline double counter_normal(std::uint64_t seed, std::uint64_t scenario, std::uint64_t component) {
    return inv_normal_cdf(counter_uniform(seed, scenario, component));
}

/// Pairwise (cascade) summation. Deterministic and exactly additive under
/// concatenation of a block with itself, unlike sequential accumulation.
double pairwise_sum(std::span<const double> values);

inline double mean_of(std::span<const double> values) {
    return values.empty() ? 0.0 : pairwise_sum(values) / static_cast<double>(values.size());
}

/// n logarithmically spaced points between 10^a and 10^b, both inclusive.
std::vector<double> logspace(double a, double b, int n);

/// FNV-1a over raw bytes; used for manifests and scenario-set logging.
std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xCBF29CE484222325ull);
std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xCBF29CE484222325ull);
std::uint64_t hash_doubles(std::span<const double> values, std::uint64_t h = 0xCBF29CE484222325ull);

/// Process-wide default worker count for parallel_for (1 = serial).
int default_threads();
void set_default_threads(int n);

/// Static block-partitioned parallel loop over [0, n). Results must be written
/// to per-index slots; reductions are done by the caller in index order so the
/// outcome is independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, int threads = 0);

}  // namespace satopf
