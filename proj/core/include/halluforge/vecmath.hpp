#pragma once

#include <cmath>
#include <vector>

#include "halluforge/errors.hpp"

namespace halluforge {

inline double euclidean_sq(const std::vector<double>& a, const std::vector<double>& b) {
    require(a.size() == b.size(), ErrorCode::precondition, "vector dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
    return std::sqrt(euclidean_sq(a, b));
}

/// 1 - cosine similarity, in [0, 2]. Zero-norm input is a numeric error
/// because the ratio is undefined, not because the pair is close or far.
inline double cosine_distance(const std::vector<double>& a, const std::vector<double>& b) {
    require(a.size() == b.size(), ErrorCode::precondition, "vector dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    require(na > 0.0 && nb > 0.0, ErrorCode::numeric, "zero-norm embedding");
    return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace halluforge
