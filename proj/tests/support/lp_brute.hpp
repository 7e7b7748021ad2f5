#pragma once

// Brute-force LP oracle: enumerates every basis choice and every assignment
// of nonbasic variables to their finite bounds, keeps the feasible ones, and
// returns the best objective. Exponential and proud of it; only for the tiny
// instances the dispatch tests use.

#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "carbontrace/simplex.hpp"

namespace carbontrace::testing {

inline std::optional<double> brute_force_lp_objective(const lp::Problem& p,
                                                      double feas_tol = 1e-7) {
    const int m = static_cast<int>(p.A.rows());
    const int n = static_cast<int>(p.A.cols());

    std::vector<int> must_basic;   // no finite bound to rest at
    std::vector<int> boundable;    // may be nonbasic
    for (int j = 0; j < n; ++j) {
        if (std::isfinite(p.lower[j]) || std::isfinite(p.upper[j]))
            boundable.push_back(j);
        else
            must_basic.push_back(j);
    }
    const int slots = m - static_cast<int>(must_basic.size());
    if (slots < 0 || slots > static_cast<int>(boundable.size())) return std::nullopt;

    std::optional<double> best;
    std::vector<int> pick(slots);
    for (int i = 0; i < slots; ++i) pick[i] = i;

    auto try_basis = [&](const std::vector<int>& basis, const std::vector<int>& nonbasic) {
        Eigen::MatrixXd b_mat(m, m);
        for (size_t i = 0; i < basis.size(); ++i) b_mat.col(static_cast<int>(i)) = p.A.col(basis[i]);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(b_mat);
        if (!lu.isInvertible()) return;

        // Every nonbasic sits at a finite bound; two-sided ones get both tries.
        std::vector<int> choices(nonbasic.size(), 1);
        for (size_t i = 0; i < nonbasic.size(); ++i) {
            int j = nonbasic[i];
            if (std::isfinite(p.lower[j]) && std::isfinite(p.upper[j]) &&
                p.lower[j] != p.upper[j])
                choices[i] = 2;
        }
        std::vector<int> sel(nonbasic.size(), 0);
        while (true) {
            Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
            for (size_t i = 0; i < nonbasic.size(); ++i) {
                int j = nonbasic[i];
                bool at_upper = sel[i] == 1 || !std::isfinite(p.lower[j]);
                x[j] = at_upper ? p.upper[j] : p.lower[j];
            }
            Eigen::VectorXd rhs = p.b;
            for (size_t i = 0; i < nonbasic.size(); ++i)
                if (x[nonbasic[i]] != 0.0) rhs -= p.A.col(nonbasic[i]) * x[nonbasic[i]];
            Eigen::VectorXd xb = lu.solve(rhs);
            bool ok = xb.allFinite();
            for (size_t i = 0; i < basis.size() && ok; ++i) {
                x[basis[i]] = xb[static_cast<int>(i)];
                ok = x[basis[i]] >= p.lower[basis[i]] - feas_tol &&
                     x[basis[i]] <= p.upper[basis[i]] + feas_tol;
            }
            if (ok) {
                double obj = p.c.dot(x);
                if (!best || obj < *best) best = obj;
            }
            // next bound assignment
            size_t d = 0;
            while (d < sel.size()) {
                if (++sel[d] < choices[d]) break;
                sel[d] = 0;
                ++d;
            }
            if (d == sel.size()) break;
            if (sel.empty()) break;
        }
    };

    while (true) {
        std::vector<int> basis = must_basic;
        std::vector<char> in_basis(n, 0);
        for (int j : must_basic) in_basis[j] = 1;
        for (int i = 0; i < slots; ++i) {
            basis.push_back(boundable[pick[i]]);
            in_basis[boundable[pick[i]]] = 1;
        }
        std::vector<int> nonbasic;
        for (int j = 0; j < n; ++j)
            if (!in_basis[j]) nonbasic.push_back(j);
        try_basis(basis, nonbasic);

        // next combination of `slots` indexes into boundable
        if (slots == 0) break;
        int i = slots - 1;
        while (i >= 0 && pick[i] == static_cast<int>(boundable.size()) - slots + i) --i;
        if (i < 0) break;
        ++pick[i];
        for (int j = i + 1; j < slots; ++j) pick[j] = pick[j - 1] + 1;
    }
    return best;
}

}  // namespace carbontrace::testing
