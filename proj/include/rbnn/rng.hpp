#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace rbnn {

// splitmix64 finalizer; decorrelates (seed, stream) pairs into engine seeds
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
    return mix64(mix64(seed) ^ mix64(stream + 0x51ul));
}

// Deterministic RNG stream. Independent streams for the same seed are
// obtained by varying `stream`; results do not depend on evaluation order
// across streams, which keeps parallel sampling reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(mix64(seed)) {}
    Rng(std::uint64_t seed, std::uint64_t stream) : gen_(stream_seed(seed, stream)) {}

    double normal() { return normal_(gen_); }
    double uniform() { return uniform_(gen_); }

    Eigen::VectorXd normal_vec(Eigen::Index n) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
        return v;
    }

    template <typename T>
    void shuffle(std::vector<T>& xs) {
        std::shuffle(xs.begin(), xs.end(), gen_);
    }

    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace rbnn
