#ifndef BUBBLESIM_RNG_HPP
#define BUBBLESIM_RNG_HPP

#include <cstdint>
#include <vector>

namespace bubblesim {

// splitmix64 step; used both as a stream-derivation hash and to expand seeds.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// xoshiro256** with hand-rolled uniform/bernoulli/shuffle so that every draw
// is bit-stable across platforms and standard libraries.
class Rng {
  public:
    Rng() : Rng(0, 0) {}

    // Stream for trajectory `index` under base seed `seed`: the state is the
    // first four splitmix64 outputs of seed ^ (index+1)*GOLDEN, with an
    // optional substream tag for components that need independent draws
    // within one trajectory. Distinct (index, substream) pairs give unrelated
    // streams; the derivation is pure, so trajectories can be generated in
    // any order by any worker.
    Rng(uint64_t seed, uint64_t index, uint64_t substream = 0) {
        uint64_t s = seed ^ ((index + 1) * 0x9E3779B97F4A7C15ull) ^
                     (substream * 0xBF58476D1CE4E5B9ull);
        for (auto& w : state_) w = splitmix64(s);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    // Uniform integer in [0, n). Rejection sampling on the top bits keeps the
    // law exact for any n.
    uint64_t bounded(uint64_t n) {
        if (n <= 1) return 0;
        const uint64_t threshold = (0 - n) % n;
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // Samples an index from an unnormalized-free probability row p[0..n-1]
    // that sums to 1; the last index absorbs rounding slack.
    int sample_row(const double* p, int n) {
        double u = uniform();
        double acc = 0.0;
        for (int i = 0; i + 1 < n; ++i) {
            acc += p[i];
            if (u < acc) return i;
        }
        return n - 1;
    }

    template <typename T>
    void shuffle(std::vector<T>& xs) {
        for (size_t i = xs.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(bounded(i));
            std::swap(xs[i - 1], xs[j]);
        }
    }

  private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t state_[4];
};

// Deterministic per-trajectory stream derivation (documented in the README):
// trajectory i under base seed s uses Rng(s, i, substream).
struct SeedScheme {
    uint64_t base = 0;
    Rng stream(uint64_t index, uint64_t substream = 0) const {
        return Rng(base, index, substream);
    }
};

} // namespace bubblesim

#endif
