#pragma once

// Constrained weight learning at tree nodes. Two convex objectives over the
// discretized weight coefficients (w0, w):
//
//   logistic:      sum_i [softplus(eta_i) - y_i eta_i] + lambda*h*|w|^2
//   least squares: sum_i (y_i - eta_i)^2              + lambda*h*|w|^2
//
// with eta_i = w0 + h * <x_i, w>, subject to one of three constraint sets:
// mean(w) = 1 (SignFree), mean(w) = 1 and w >= 0 (NonNegative), or
// mean(w) = -1 and w <= 0 (NonPositive). The intercept w0 is neither
// penalized nor constrained.
//
// Sign-constrained problems use a primal log-barrier with Newton inner
// steps; the equality constraint is handled inside each Newton KKT system.
// The SignFree least-squares case is solved exactly from its KKT linear
// system.

#include <Eigen/Dense>
#include <limits>
#include <span>

#include "fdata.hpp"

namespace mucart {

enum class ConstraintKind { SignFree, NonNegative, NonPositive };

struct SolverConfig {
    double lambda = 1.0;          // ridge strength, must be > 0
    double tol = 1e-8;            // KKT residual tolerance
    int max_newton_iters = 100;   // total Newton iterations per solve
    double barrier_init = 1.0;
    double barrier_shrink = 0.1;
    double barrier_min = 1e-10;

    void validate() const {
        if (!(lambda > 0.0)) throw std::invalid_argument("SolverConfig: lambda must be > 0");
        if (!(tol > 0.0)) throw std::invalid_argument("SolverConfig: tol must be > 0");
    }
};

enum class SolverStatus { Converged, MaxIters, Infeasible };

struct SolverResult {
    std::vector<double> w;
    double intercept = 0.0;
    SolverStatus status = SolverStatus::MaxIters;
    double kkt_residual = std::numeric_limits<double>::infinity();
    double objective = std::numeric_limits<double>::infinity();
};

struct SingleClassError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct ConstantTargetError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

enum class WeightLoss { Logistic, LeastSquares };

// Read-only view of one weight-learning instance, used for objective and
// KKT residual evaluation.
struct WeightProblem {
    WeightLoss loss;
    std::span<const double> curves;  // M x p row-major, standardized
    std::span<const double> y;       // binary 0/1 labels or real targets
    Grid grid;
    ConstraintKind constraint;
    double lambda;

    std::size_t m() const { return y.size(); }
};

namespace optim_detail {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<const RowMat>;

inline double softplus(double v) {
    return v > 30.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
}
inline double sigmoid(double v) {
    return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
}

inline double eq_target(ConstraintKind c) {
    return c == ConstraintKind::NonPositive ? -1.0 : 1.0;
}
inline int sign_of(ConstraintKind c) {
    switch (c) {
        case ConstraintKind::NonNegative: return 1;
        case ConstraintKind::NonPositive: return -1;
        default: return 0;
    }
}

// Original objective (no barrier term).
inline double objective(const WeightProblem& pb, double w0, const Eigen::VectorXd& w) {
    MapMat x(pb.curves.data(), pb.m(), pb.grid.p);
    const double h = pb.grid.h();
    Eigen::VectorXd eta = (h * (x * w)).array() + w0;
    double f = 0.0;
    if (pb.loss == WeightLoss::Logistic) {
        for (std::size_t i = 0; i < pb.m(); ++i)
            f += softplus(eta[static_cast<Eigen::Index>(i)]) -
                 pb.y[i] * eta[static_cast<Eigen::Index>(i)];
    } else {
        for (std::size_t i = 0; i < pb.m(); ++i) {
            const double r = pb.y[i] - eta[static_cast<Eigen::Index>(i)];
            f += r * r;
        }
    }
    return f + pb.lambda * h * w.squaredNorm();
}

// Gradient of the original objective with respect to (w0, w).
inline void gradient(const WeightProblem& pb, double w0, const Eigen::VectorXd& w, double& g0,
                     Eigen::VectorXd& gw) {
    MapMat x(pb.curves.data(), pb.m(), pb.grid.p);
    const double h = pb.grid.h();
    Eigen::VectorXd eta = (h * (x * w)).array() + w0;
    Eigen::VectorXd r(eta.size());
    if (pb.loss == WeightLoss::Logistic) {
        for (Eigen::Index i = 0; i < eta.size(); ++i)
            r[i] = sigmoid(eta[i]) - pb.y[static_cast<std::size_t>(i)];
        g0 = r.sum();
        gw = h * (x.transpose() * r) + 2.0 * pb.lambda * h * w;
    } else {
        for (Eigen::Index i = 0; i < eta.size(); ++i)
            r[i] = eta[i] - pb.y[static_cast<std::size_t>(i)];
        g0 = 2.0 * r.sum();
        gw = 2.0 * h * (x.transpose() * r) + 2.0 * pb.lambda * h * w;
    }
}

// Hessian of the original objective over z = (w0, w), size (p+1)^2.
inline void hessian(const WeightProblem& pb, double w0, const Eigen::VectorXd& w,
                    Eigen::MatrixXd& hess) {
    MapMat x(pb.curves.data(), pb.m(), pb.grid.p);
    const double h = pb.grid.h();
    const auto p = static_cast<Eigen::Index>(pb.grid.p);
    hess.resize(p + 1, p + 1);
    if (pb.loss == WeightLoss::Logistic) {
        Eigen::VectorXd eta = (h * (x * w)).array() + w0;
        Eigen::VectorXd s(eta.size());
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            const double sg = sigmoid(eta[i]);
            s[i] = sg * (1.0 - sg);
        }
        hess(0, 0) = s.sum();
        Eigen::VectorXd xs = x.transpose() * s;
        hess.block(0, 1, 1, p) = (h * xs).transpose();
        hess.block(1, 0, p, 1) = h * xs;
        hess.block(1, 1, p, p) = h * h * (x.transpose() * s.asDiagonal() * x);
        hess.block(1, 1, p, p).diagonal().array() += 2.0 * pb.lambda * h;
    } else {
        hess(0, 0) = 2.0 * static_cast<double>(pb.m());
        Eigen::VectorXd colsum = x.colwise().sum();
        hess.block(0, 1, 1, p) = (2.0 * h * colsum).transpose();
        hess.block(1, 0, p, 1) = 2.0 * h * colsum;
        hess.block(1, 1, p, p) = 2.0 * h * h * (x.transpose() * x);
        hess.block(1, 1, p, p).diagonal().array() += 2.0 * pb.lambda * h;
    }
}

struct KktPieces {
    double stationarity = 0.0;
    double primal = 0.0;
    double complementarity = 0.0;
    double max() const { return std::max({stationarity, primal, complementarity}); }
};

inline KktPieces kkt_pieces(const WeightProblem& pb, double w0, const Eigen::VectorXd& w) {
    const auto p = static_cast<double>(pb.grid.p);
    const double tau = eq_target(pb.constraint);
    const int sgn = sign_of(pb.constraint);

    double g0 = 0.0;
    Eigen::VectorXd gw;
    gradient(pb, w0, w, g0, gw);

    KktPieces out;
    out.primal = std::abs(w.sum() / p - tau);

    if (sgn == 0) {
        const double nu = -gw.mean();
        out.stationarity = std::max(std::abs(g0), (gw.array() + nu).abs().maxCoeff());
        return out;
    }
    // Multiplier estimate weighted by |w_j|: inactive coordinates dominate.
    const Eigen::ArrayXd aw = w.array().abs();
    const double denom = aw.sum();
    const double nu = denom > 0.0 ? -(aw * gw.array()).sum() / denom : -gw.mean();
    double stat = std::abs(g0);
    double comp = 0.0;
    double feas = 0.0;
    for (Eigen::Index j = 0; j < w.size(); ++j) {
        // Stationarity: gw_j + nu - sgn*dual_j = 0 with dual_j >= 0.
        const double r = gw[j] + nu;
        const double dual = std::max(0.0, sgn * r);
        stat = std::max(stat, std::abs(r - sgn * dual));
        comp = std::max(comp, std::abs(dual * w[j]));
        feas = std::max(feas, -sgn * w[j]);  // sign-constraint violation
    }
    out.primal = std::max(out.primal, feas);
    out.stationarity = stat;
    out.complementarity = comp;
    return out;
}

// Equality-constrained (damped) Newton minimization of
//   f(z) + barrier_mu * B(w), with B the log barrier when sgn != 0,
// starting from a strictly feasible z. Returns iterations used.
inline int newton_equality(const WeightProblem& pb, double& w0, Eigen::VectorXd& w,
                           double barrier_mu, double inner_tol, int max_iters,
                           const Eigen::MatrixXd* const_hess) {
    const auto p = static_cast<Eigen::Index>(pb.grid.p);
    const int sgn = sign_of(pb.constraint);

    auto phi = [&](double z0, const Eigen::VectorXd& zw) {
        double v = objective(pb, z0, zw);
        if (sgn != 0) {
            for (Eigen::Index j = 0; j < p; ++j) {
                const double sw = sgn * zw[j];
                if (sw <= 0.0) return std::numeric_limits<double>::infinity();
                v -= barrier_mu * std::log(sw);
            }
        }
        return v;
    };

    Eigen::MatrixXd hess;
    Eigen::VectorXd g(p + 1), u(p + 1), v(p + 1), step(p + 1);
    int iters = 0;
    for (; iters < max_iters; ++iters) {
        double g0;
        Eigen::VectorXd gw;
        gradient(pb, w0, w, g0, gw);
        if (sgn != 0) gw.array() -= barrier_mu / w.array();
        g[0] = g0;
        g.tail(p) = gw;

        if (const_hess) {
            hess = *const_hess;
        } else {
            hessian(pb, w0, w, hess);
        }
        if (sgn != 0)
            hess.block(1, 1, p, p).diagonal().array() += barrier_mu / w.array().square();

        Eigen::LLT<Eigen::MatrixXd> llt(hess);
        if (llt.info() != Eigen::Success) {
            hess.diagonal().array() += 1e-10 * (1.0 + hess.diagonal().array().abs());
            llt.compute(hess);
            if (llt.info() != Eigen::Success) return max_iters;  // give up, caller reports
        }
        u = llt.solve(g);
        Eigen::VectorXd e = Eigen::VectorXd::Ones(p + 1);
        e[0] = 0.0;
        v = llt.solve(e);
        const double nu = -u.tail(p).sum() / v.tail(p).sum();
        step = -u - nu * v;

        // Stationarity of the (barrier) Lagrangian at the current iterate.
        const double stat = (g + nu * e).cwiseAbs().maxCoeff();
        if (stat <= inner_tol) break;

        double t = 1.0;
        if (sgn != 0) {
            for (Eigen::Index j = 0; j < p; ++j) {
                const double dj = step[j + 1];
                if (sgn * (w[j] + t * dj) <= 0.0) {
                    const double lim = -w[j] / dj;  // boundary crossing fraction
                    t = std::min(t, 0.99 * lim);
                }
            }
            t = std::max(t, 0.0);
        }
        const double f0 = phi(w0, w);
        const double slope = g.dot(step);
        double t_used = t;
        for (int ls = 0; ls < 60; ++ls) {
            Eigen::VectorXd wn = w + t_used * step.tail(p);
            const double fn = phi(w0 + t_used * step[0], wn);
            if (fn <= f0 + 1e-4 * t_used * slope) break;
            t_used *= 0.5;
        }
        w0 += t_used * step[0];
        w += t_used * step.tail(p);
    }
    return iters;
}

inline SolverResult finish(const WeightProblem& pb, double w0, const Eigen::VectorXd& w,
                           const SolverConfig& cfg, bool iter_budget_ok) {
    SolverResult res;
    res.intercept = w0;
    res.w.assign(w.data(), w.data() + w.size());
    res.objective = objective(pb, w0, w);
    const auto pieces = kkt_pieces(pb, w0, w);
    res.kkt_residual = pieces.max();
    res.status = (iter_budget_ok && res.kkt_residual <= cfg.tol) ? SolverStatus::Converged
                                                                 : SolverStatus::MaxIters;
    return res;
}

// Exact solve of the SignFree least-squares KKT system, size (p+2).
inline SolverResult solve_ls_signfree(const WeightProblem& pb, const SolverConfig& cfg) {
    const auto p = static_cast<Eigen::Index>(pb.grid.p);
    Eigen::MatrixXd hess;
    hessian(pb, 0.0, Eigen::VectorXd::Zero(p), hess);  // quadratic: Hessian is constant

    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(p + 2, p + 2);
    kkt.topLeftCorner(p + 1, p + 1) = hess;
    for (Eigen::Index j = 1; j <= p; ++j) {
        kkt(j, p + 1) = 1.0;
        kkt(p + 1, j) = 1.0;
    }
    // rhs: -gradient at zero gives the linear term of the quadratic.
    double g0;
    Eigen::VectorXd gw;
    gradient(pb, 0.0, Eigen::VectorXd::Zero(p), g0, gw);
    Eigen::VectorXd rhs(p + 2);
    rhs[0] = -g0;
    rhs.segment(1, p) = -gw;
    rhs[p + 1] = static_cast<double>(p) * eq_target(pb.constraint);

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(kkt);
    Eigen::VectorXd sol = lu.solve(rhs);
    Eigen::VectorXd w = sol.segment(1, p);
    return finish(pb, sol[0], w, cfg, true);
}

inline SolverResult solve(const WeightProblem& pb, const SolverConfig& cfg) {
    cfg.validate();
    if (pb.curves.size() != pb.m() * pb.grid.p)
        throw DimensionError("solve_weights: curves shape mismatch");
    const auto p = static_cast<Eigen::Index>(pb.grid.p);
    const int sgn = sign_of(pb.constraint);

    if (pb.loss == WeightLoss::LeastSquares && sgn == 0) return solve_ls_signfree(pb, cfg);

    double w0 = 0.0;
    Eigen::VectorXd w = Eigen::VectorXd::Constant(p, eq_target(pb.constraint));

    // Constant Hessian shortcut for quadratic objectives.
    Eigen::MatrixXd const_hess;
    const Eigen::MatrixXd* chp = nullptr;
    if (pb.loss == WeightLoss::LeastSquares) {
        hessian(pb, w0, w, const_hess);
        chp = &const_hess;
    }

    // max_newton_iters caps each Newton run (one per barrier stage).
    if (sgn == 0) {
        const int used = newton_equality(pb, w0, w, 0.0, cfg.tol * 0.5, cfg.max_newton_iters, chp);
        return finish(pb, w0, w, cfg, used < cfg.max_newton_iters);
    }
    bool ok = true;
    for (double mu = cfg.barrier_init; mu >= cfg.barrier_min; mu *= cfg.barrier_shrink) {
        const bool last = mu * cfg.barrier_shrink < cfg.barrier_min;
        const double inner_tol = last ? cfg.tol * 0.5 : std::max(cfg.tol * 0.5, mu * 1e-2);
        const int used = newton_equality(pb, w0, w, mu, inner_tol, cfg.max_newton_iters, chp);
        // The true KKT residual can reach tolerance before the barrier
        // weight bottoms out; stop early instead of grinding through the
        // ill-conditioned final stages.
        if (kkt_pieces(pb, w0, w).max() <= cfg.tol) break;
        if (last && used >= cfg.max_newton_iters) ok = false;
    }
    return finish(pb, w0, w, cfg, ok);
}

}  // namespace optim_detail

inline double constraint_violation(std::span<const double> w, ConstraintKind c) {
    double sum = 0.0;
    double sign_viol = 0.0;
    for (double v : w) {
        sum += v;
        if (c == ConstraintKind::NonNegative) sign_viol = std::max(sign_viol, -v);
        if (c == ConstraintKind::NonPositive) sign_viol = std::max(sign_viol, v);
    }
    const double tau = optim_detail::eq_target(c);
    const double eq_viol = std::abs(sum / static_cast<double>(w.size()) - tau);
    return std::max(eq_viol, sign_viol);
}

// Max-norm of stationarity + primal feasibility + complementary slackness.
inline double kkt_residual(const WeightProblem& pb, double intercept, std::span<const double> w) {
    if (w.size() != pb.grid.p) throw DimensionError("kkt_residual: weight length mismatch");
    Eigen::Map<const Eigen::VectorXd> wv(w.data(), static_cast<Eigen::Index>(w.size()));
    return optim_detail::kkt_pieces(pb, intercept, wv).max();
}

inline double objective_value(const WeightProblem& pb, double intercept, std::span<const double> w) {
    Eigen::Map<const Eigen::VectorXd> wv(w.data(), static_cast<Eigen::Index>(w.size()));
    return optim_detail::objective(pb, intercept, wv);
}

// Constrained logistic weight learning. Labels must contain both classes;
// curves are expected to be standardized already.
inline SolverResult solve_logistic_weights(std::span<const double> curves,
                                           std::span<const double> labels, const Grid& grid,
                                           ConstraintKind constraint, const SolverConfig& cfg) {
    if (labels.size() < 2) throw std::invalid_argument("solve_logistic_weights: need M >= 2");
    bool has0 = false, has1 = false;
    for (double y : labels) {
        if (y == 0.0) has0 = true;
        else if (y == 1.0) has1 = true;
        else throw std::invalid_argument("solve_logistic_weights: labels must be 0/1");
    }
    if (!has0 || !has1) throw SingleClassError("solve_logistic_weights: single-class input");
    WeightProblem pb{WeightLoss::Logistic, curves, labels, grid, constraint, cfg.lambda};
    return optim_detail::solve(pb, cfg);
}

// Constrained least-squares weight learning.
inline SolverResult solve_ls_weights(std::span<const double> curves,
                                     std::span<const double> targets, const Grid& grid,
                                     ConstraintKind constraint, const SolverConfig& cfg) {
    if (targets.size() < 2) throw std::invalid_argument("solve_ls_weights: need M >= 2");
    bool varies = false;
    for (double y : targets)
        if (y != targets[0]) varies = true;
    if (!varies) throw ConstantTargetError("solve_ls_weights: constant targets");
    WeightProblem pb{WeightLoss::LeastSquares, curves, targets, grid, constraint, cfg.lambda};
    return optim_detail::solve(pb, cfg);
}

}  // namespace mucart
