#ifndef BUBBLESIM_COMMON_HPP
#define BUBBLESIM_COMMON_HPP

#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace bubblesim {

// Tolerances for the exact identities checked throughout. The recursions are
// exactly mass-preserving in real arithmetic; floating point is not, so every
// check takes an explicit tolerance instead of comparing for equality.
struct Tol {
    static constexpr double normalization = 1e-12;  // distribution mass
    static constexpr double table = 1e-10;          // row sums, detailed balance
    static constexpr double negative_clamp = 1e-15; // entries in [-clamp, 0) -> 0
};

// Dense row-major matrix of doubles. Small (K <= a few dozen for the finance
// models), so no linear-algebra library is warranted.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Mat() = default;
    Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), v(static_cast<size_t>(r) * c, fill) {}

    void assign(int r, int c, double fill = 0.0) {
        rows = r;
        cols = c;
        v.assign(static_cast<size_t>(r) * c, fill);
    }

    double& operator()(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
};

// Formats with 17 significant digits: parses back to the identical double,
// satisfying every ">= 15 significant digits" output contract in one place.
inline std::string fmt_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::string cat_index(const std::string& base, int i) {
    return base + "[" + std::to_string(i) + "]";
}

} // namespace bubblesim

#endif
