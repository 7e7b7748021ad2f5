#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "carbontrace/errors.hpp"

namespace carbontrace::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// minimize c'x  subject to  A x = b,  lower <= x <= upper.
// Entries of lower/upper may be -inf/+inf.
struct Problem {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

enum class Status { Optimal, Infeasible, Unbounded };

struct Solution {
    Status status = Status::Infeasible;
    Eigen::VectorXd x;
    double objective = 0.0;
    // True when some nonbasic variable has a vanishing reduced cost at the
    // optimum, i.e. other optimal vertices may exist.
    bool alternate_optima = false;
    // Rows whose artificial stayed positive after phase 1 (infeasible only).
    std::vector<int> infeasible_rows;
    int iterations = 0;
};

// Dense bounded-variable two-phase simplex. Nonbasic variables rest at a
// finite bound (free ones at zero), the basis inverse is kept explicitly and
// rebuilt from an LU factorization every few dozen pivots. Entering variables
// follow Bland's smallest-index rule; the leaving choice also falls back to
// Bland on degenerate steps, which rules out cycling. Sized for desk-scale
// problems (hundreds of variables), not production LPs.
class SimplexSolver {
public:
    explicit SimplexSolver(const Problem& p)
        : m_(static_cast<int>(p.A.rows())),
          n_(static_cast<int>(p.A.cols())),
          total_(n_ + m_),
          cols_(m_, n_ + m_),
          b_(p.b),
          cost_(p.c),
          lb_(total_),
          ub_(total_),
          values_(Eigen::VectorXd::Zero(total_)),
          vstat_(total_, VStat::AtLower),
          basic_(m_, -1),
          binv_(Eigen::MatrixXd::Identity(m_, m_)) {
        cols_.leftCols(n_) = p.A;
        cols_.rightCols(m_).setZero();
        lb_.head(n_) = p.lower;
        ub_.head(n_) = p.upper;
        lb_.tail(m_).setZero();
        ub_.tail(m_).setConstant(kInf);
    }

    Solution run() {
        Solution sol;
        init_basis();

        // Phase 1: minimize the artificial total.
        Eigen::VectorXd phase1_cost = Eigen::VectorXd::Zero(total_);
        phase1_cost.tail(m_).setOnes();
        if (!iterate(phase1_cost, sol)) return sol;  // unbounded cannot happen here

        double infeas = 0.0;
        for (int j = n_; j < total_; ++j) infeas += values_[j];
        if (infeas > kPhase1Tol) {
            sol.status = Status::Infeasible;
            for (int i = 0; i < m_; ++i)
                if (basic_[i] >= n_ && values_[basic_[i]] > kPhase1Tol)
                    sol.infeasible_rows.push_back(i);
            return sol;
        }
        drive_out_artificials();
        for (int j = n_; j < total_; ++j) ub_[j] = 0.0;  // forbid re-entry

        // Phase 2: the real objective.
        Eigen::VectorXd phase2_cost = Eigen::VectorXd::Zero(total_);
        phase2_cost.head(n_) = cost_;
        if (!iterate(phase2_cost, sol)) return sol;

        polish();
        sol.status = Status::Optimal;
        sol.x = values_.head(n_);
        sol.objective = cost_.dot(sol.x);
        sol.alternate_optima = has_alternate_optima(phase2_cost);
        return sol;
    }

private:
    enum class VStat { Basic, AtLower, AtUpper, Free };

    static constexpr double kDualTol = 1e-9;
    static constexpr double kPivotTol = 1e-9;
    static constexpr double kPhase1Tol = 1e-7;
    static constexpr double kDegenerateStep = 1e-12;
    static constexpr int kRefactorPeriod = 60;

    void init_basis() {
        for (int j = 0; j < n_; ++j) {
            if (std::isfinite(lb_[j])) {
                vstat_[j] = VStat::AtLower;
                values_[j] = lb_[j];
            } else if (std::isfinite(ub_[j])) {
                vstat_[j] = VStat::AtUpper;
                values_[j] = ub_[j];
            } else {
                vstat_[j] = VStat::Free;
                values_[j] = 0.0;
            }
        }
        Eigen::VectorXd residual = b_;
        for (int j = 0; j < n_; ++j)
            if (values_[j] != 0.0) residual -= cols_.col(j) * values_[j];
        for (int i = 0; i < m_; ++i) {
            double sign = residual[i] >= 0.0 ? 1.0 : -1.0;
            cols_(i, n_ + i) = sign;
            basic_[i] = n_ + i;
            vstat_[n_ + i] = VStat::Basic;
            values_[n_ + i] = std::abs(residual[i]);
        }
        binv_.setIdentity();
        for (int i = 0; i < m_; ++i) binv_(i, i) = cols_(i, n_ + i);  // diag of +-1
    }

    // Core loop; returns false and fills sol on unbounded rays.
    bool iterate(const Eigen::VectorXd& cost, Solution& sol) {
        const int max_iters = 2000 + 200 * total_;
        int since_refactor = 0;
        for (int iter = 0; iter < max_iters; ++iter, ++sol.iterations) {
            if (++since_refactor > kRefactorPeriod) {
                refactorize();
                since_refactor = 0;
            }
            Eigen::VectorXd cb(m_);
            for (int i = 0; i < m_; ++i) cb[i] = cost[basic_[i]];
            Eigen::VectorXd y = binv_.transpose() * cb;

            int q = -1;
            double dq = 0.0;
            for (int j = 0; j < total_; ++j) {
                if (vstat_[j] == VStat::Basic || lb_[j] == ub_[j]) continue;
                double d = cost[j] - cols_.col(j).dot(y);
                bool improves = (vstat_[j] == VStat::AtLower && d < -kDualTol) ||
                                (vstat_[j] == VStat::AtUpper && d > kDualTol) ||
                                (vstat_[j] == VStat::Free && std::abs(d) > kDualTol);
                if (improves) {
                    q = j;
                    dq = d;
                    break;  // Bland: smallest index
                }
            }
            if (q < 0) return true;  // optimal for this phase

            double dir = (vstat_[q] == VStat::AtUpper || (vstat_[q] == VStat::Free && dq > 0.0))
                             ? -1.0
                             : 1.0;
            Eigen::VectorXd w = binv_ * cols_.col(q);

            // Ratio test: how far can x_q move before something hits a bound?
            double best_t = kInf;
            int leave_row = -1;   // -1 with finite best_t means a bound flip on q
            double leave_pivot = 0.0;
            if (vstat_[q] != VStat::Free && std::isfinite(lb_[q]) && std::isfinite(ub_[q]))
                best_t = ub_[q] - lb_[q];
            for (int i = 0; i < m_; ++i) {
                double wi = dir * w[i];
                int bj = basic_[i];
                double t;
                if (wi > kPivotTol) {
                    if (!std::isfinite(lb_[bj])) continue;
                    t = (values_[bj] - lb_[bj]) / wi;
                } else if (wi < -kPivotTol) {
                    if (!std::isfinite(ub_[bj])) continue;
                    t = (values_[bj] - ub_[bj]) / wi;
                } else {
                    continue;
                }
                if (t < 0.0) t = 0.0;
                if (t < best_t - 1e-12) {
                    best_t = t;
                    leave_row = i;
                    leave_pivot = std::abs(wi);
                } else if (leave_row >= 0 && t <= best_t + 1e-12) {
                    // Tie. Degenerate steps use Bland's index rule; otherwise
                    // prefer the numerically larger pivot.
                    bool take = best_t <= kDegenerateStep ? bj < basic_[leave_row]
                                                          : std::abs(wi) > leave_pivot;
                    if (take) {
                        leave_row = i;
                        leave_pivot = std::abs(wi);
                    }
                }
            }
            if (!std::isfinite(best_t)) {
                sol.status = Status::Unbounded;
                return false;
            }

            apply_step(q, dir, best_t, w, leave_row);
        }
        throw InternalError("simplex: iteration limit reached");
    }

    void apply_step(int q, double dir, double t, const Eigen::VectorXd& w, int leave_row) {
        double delta = dir * t;
        if (delta != 0.0) {
            for (int i = 0; i < m_; ++i) values_[basic_[i]] -= delta * w[i];
            values_[q] += delta;
        }
        if (leave_row < 0) {
            // Bound flip: q traversed its whole range and stays nonbasic.
            vstat_[q] = vstat_[q] == VStat::AtLower ? VStat::AtUpper : VStat::AtLower;
            values_[q] = vstat_[q] == VStat::AtLower ? lb_[q] : ub_[q];
            return;
        }
        int lv = basic_[leave_row];
        bool hit_lower = dir * w[leave_row] > 0.0;
        values_[lv] = hit_lower ? lb_[lv] : ub_[lv];
        vstat_[lv] = hit_lower ? VStat::AtLower : VStat::AtUpper;
        if (lv >= n_) ub_[lv] = 0.0;  // artificial never comes back
        basic_[leave_row] = q;
        vstat_[q] = VStat::Basic;
        update_inverse(w, leave_row);
    }

    // Gauss-Jordan update of the explicit inverse after a basis change.
    void update_inverse(const Eigen::VectorXd& w, int r) {
        double piv = w[r];
        if (std::abs(piv) < 1e-13) throw InternalError("simplex: vanishing pivot");
        binv_.row(r) /= piv;
        for (int i = 0; i < m_; ++i) {
            if (i == r) continue;
            double f = w[i];
            if (f != 0.0) binv_.row(i) -= f * binv_.row(r);
        }
    }

    void refactorize() {
        Eigen::MatrixXd basis(m_, m_);
        for (int i = 0; i < m_; ++i) basis.col(i) = cols_.col(basic_[i]);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(basis);
        binv_ = lu.solve(Eigen::MatrixXd::Identity(m_, m_));
        recompute_basic_values();
        if (!values_.allFinite()) throw InternalError("simplex: basis became singular");
    }

    void recompute_basic_values() {
        Eigen::VectorXd rhs = b_;
        for (int j = 0; j < total_; ++j)
            if (vstat_[j] != VStat::Basic && values_[j] != 0.0)
                rhs -= cols_.col(j) * values_[j];
        Eigen::VectorXd xb = binv_ * rhs;
        for (int i = 0; i < m_; ++i) values_[basic_[i]] = xb[i];
    }

    // Kick zero-valued artificials out of the basis where a structural column
    // can replace them; rows admitting no replacement are redundant and keep
    // their artificial pinned at zero.
    void drive_out_artificials() {
        for (int i = 0; i < m_; ++i) {
            if (basic_[i] < n_) continue;
            Eigen::RowVectorXd row = binv_.row(i);
            int found = -1;
            Eigen::VectorXd w;
            for (int j = 0; j < n_; ++j) {
                if (vstat_[j] == VStat::Basic || lb_[j] == ub_[j]) continue;
                if (std::abs(row.dot(cols_.col(j))) > 1e-7) {
                    found = j;
                    break;
                }
            }
            if (found < 0) continue;
            w = binv_ * cols_.col(found);
            apply_step(found, 1.0, 0.0, w, i);
        }
    }

    // Final cleanup: fresh factorization plus two rounds of residual
    // refinement so downstream balance identities see ~1e-12 MW residuals.
    void polish() {
        refactorize();
        for (int pass = 0; pass < 2; ++pass) {
            Eigen::VectorXd residual = b_;
            for (int j = 0; j < total_; ++j)
                if (values_[j] != 0.0) residual -= cols_.col(j) * values_[j];
            Eigen::VectorXd correction = binv_ * residual;
            for (int i = 0; i < m_; ++i) values_[basic_[i]] += correction[i];
        }
    }

    bool has_alternate_optima(const Eigen::VectorXd& cost) const {
        Eigen::VectorXd cb(m_);
        for (int i = 0; i < m_; ++i) cb[i] = cost[basic_[i]];
        Eigen::VectorXd y = binv_.transpose() * cb;
        for (int j = 0; j < n_; ++j) {
            if (vstat_[j] == VStat::Basic || lb_[j] == ub_[j]) continue;
            if (std::abs(cost[j] - cols_.col(j).dot(y)) <= kDualTol) return true;
        }
        return false;
    }

    int m_, n_, total_;
    Eigen::MatrixXd cols_;
    Eigen::VectorXd b_, cost_, lb_, ub_, values_;
    std::vector<VStat> vstat_;
    std::vector<int> basic_;
    Eigen::MatrixXd binv_;
};

inline Solution solve(const Problem& p) { return SimplexSolver(p).run(); }

}  // namespace carbontrace::lp
