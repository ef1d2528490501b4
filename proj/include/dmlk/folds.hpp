#pragma once

#include <string>
#include <vector>

#include "dmlk/errors.hpp"
#include "dmlk/rng.hpp"

namespace dmlk {

// Balanced random partition into k folds. assignment[i] is the fold of
// observation i, in 0..k-1; fold sizes differ by at most one.
struct FoldMap {
    std::vector<int> assignment;
    int k = 0;

    int n() const { return static_cast<int>(assignment.size()); }

    std::vector<int> fold_sizes() const {
        std::vector<int> sizes(static_cast<std::size_t>(k), 0);
        for (int f : assignment) ++sizes[static_cast<std::size_t>(f)];
        return sizes;
    }
};

inline FoldMap make_folds(int n, int k, SeededStream stream) {
    if (k < 2) throw ValidationError("make_folds: need at least 2 folds, got " + std::to_string(k));
    if (k > n) throw ValidationError("make_folds: more folds than observations (k = " + std::to_string(k) +
                                     ", n = " + std::to_string(n) + ")");
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i) {
        const auto j = static_cast<int>(stream.uniform_below(static_cast<std::uint64_t>(i) + 1));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    FoldMap map;
    map.k = k;
    map.assignment.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) map.assignment[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = i % k;
    return map;
}

}  // namespace dmlk
