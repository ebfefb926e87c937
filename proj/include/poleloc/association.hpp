#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "poleloc/extraction.hpp"
#include "poleloc/map.hpp"

namespace poleloc {

/// Injective observation -> map pole mapping. NONE (-1) marks an
/// observation left unmatched; total_loss sums only matched residuals.
struct Assignment {
    static constexpr std::int64_t kNone = -1;
    std::vector<std::int64_t> pole_ids;       // per observation, kNone if unmatched
    std::vector<int> projection_indices;      // same, index into the projection list
    double total_loss = 0.0;                  // pixels, matched pairs only
};

namespace detail {

/// Shortest-augmenting-path solver for the rectangular min-cost
/// assignment problem (rows <= cols, every row assigned). Returns the
/// column index per row.
inline std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost) {
    const int n = int(cost.size());
    const int m = n ? int(cost[0].size()) : 0;
    constexpr double kInf = std::numeric_limits<double>::infinity();

    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<int> match(m + 1, 0);  // 1-based row matched to each column
    for (int i = 1; i <= n; ++i) {
        std::vector<double> dist(m + 1, kInf);
        std::vector<int> from(m + 1, 0);
        std::vector<bool> used(m + 1, false);
        match[0] = i;
        int j0 = 0;
        do {
            used[j0] = true;
            const int i0 = match[j0];
            double best = kInf;
            int j1 = 0;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double reduced = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (reduced < dist[j]) {
                    dist[j] = reduced;
                    from[j] = j0;
                }
                if (dist[j] < best) {
                    best = dist[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[match[j]] += best;
                    v[j] -= best;
                } else {
                    dist[j] -= best;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        for (; j0 != 0;) {
            const int j1 = from[j0];
            match[j0] = match[j1];
            j0 = j1;
        }
    }

    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= m; ++j)
        if (match[j] > 0) row_to_col[match[j] - 1] = j - 1;
    return row_to_col;
}

}  // namespace detail

/// Optimal data association between image observations and map-pole
/// projections: minimizes the summed pixel distance over an injective
/// mapping, with exact label matching and a per-pair gate. Leaving an
/// observation unmatched costs gate_px, realized as one dedicated
/// augmentation column per observation.
inline Assignment associate(const std::vector<Observation>& observations,
                            const std::vector<Projection>& projections, double gate_px) {
    const int n = int(observations.size());
    const int m = int(projections.size());
    Assignment result;
    result.pole_ids.assign(std::size_t(n), Assignment::kNone);
    result.projection_indices.assign(std::size_t(n), -1);
    if (n == 0) return result;

    // Finite sentinel keeps the dual potentials well-behaved; it is large
    // enough that no optimal solution ever uses a forbidden edge.
    const double kForbidden = 1e12;
    std::vector<std::vector<double>> cost(std::size_t(n),
                                          std::vector<double>(std::size_t(m + n), kForbidden));
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < m; ++k) {
            if (observations[i].label != projections[k].label) continue;
            const double e = std::abs(observations[i].u - projections[k].u);
            if (e > gate_px) continue;
            cost[i][k] = e;
        }
        cost[i][m + i] = gate_px;  // the NONE option for observation i
    }

    const auto row_to_col = detail::solve_assignment(cost);
    for (int i = 0; i < n; ++i) {
        const int k = row_to_col[i];
        if (k < 0 || k >= m || cost[i][k] >= kForbidden) continue;
        result.pole_ids[i] = projections[k].pole_id;
        result.projection_indices[i] = k;
        result.total_loss += cost[i][k];
    }
    return result;
}

}  // namespace poleloc
