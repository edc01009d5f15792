#pragma once

#include <cstdint>
#include <random>

namespace elearn {

// Splittable counter-based seeding. Streams are keyed on
// (master seed, replication index, worker index), so draws are identical
// under any execution order or thread count.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t h = splitmix64(master ^ 0x6a09e667f3bcc908ULL);
    h = splitmix64(h ^ splitmix64(a ^ 0xbb67ae8584caa73bULL));
    h = splitmix64(h ^ splitmix64(b ^ 0x3c6ef372fe94f82bULL));
    return h;
}

class Stream {
  public:
    explicit Stream(std::uint64_t seed) : gen_(seed) {}
    Stream(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0)
        : gen_(derive_seed(master, a, b)) {}

    double uniform() { return unif_(gen_); }
    double normal() { return norm_(gen_); }
    double normal(double mean, double sd) { return mean + sd * norm_(gen_); }
    std::uint64_t next_u64() { return gen_(); }
    std::mt19937_64& engine() { return gen_; }

  private:
    std::mt19937_64 gen_;
    std::uniform_real_distribution<double> unif_{0.0, 1.0};
    std::normal_distribution<double> norm_{0.0, 1.0};
};

}  // namespace elearn
