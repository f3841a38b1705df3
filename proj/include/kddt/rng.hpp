#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

namespace kddt {

// Seeded mt19937 wrapper; the single source of randomness so that runs with
// equal seeds are bit-identical.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(static_cast<std::mt19937::result_type>(seed)) {}

    float uniform(float lo, float hi) {
        std::uniform_real_distribution<float> d(lo, hi);
        return d(gen_);
    }

    double uniform_double(double lo, double hi) {
        std::uniform_real_distribution<double> d(lo, hi);
        return d(gen_);
    }

    // Inclusive bounds.
    int uniform_int(int lo, int hi) {
        std::uniform_int_distribution<int> d(lo, hi);
        return d(gen_);
    }

    float normal() {
        std::normal_distribution<float> d(0.0f, 1.0f);
        return d(gen_);
    }

    std::vector<float> normal_vec(std::size_t n) {
        std::vector<float> v(n);
        for (auto& x : v) x = normal();
        return v;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        std::shuffle(v.begin(), v.end(), gen_);
    }

    std::mt19937& engine() { return gen_; }

private:
    std::mt19937 gen_;
};

}  // namespace kddt
