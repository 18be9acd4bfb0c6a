#include "mggm/group_lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mggm::grouplasso {

namespace {

/// Minimizes sum_l (a_l/2) u_l^2 - g_l u_l + gamma ||u|| over u in R^m.
/// Writes the minimizer into `u`.
void group_update(const Vector& g, const Vector& a, double gamma, Vector& u) {
    const double gnorm = g.norm();
    if (gnorm <= gamma) {
        u.setZero();
        return;
    }
    if (gamma == 0.0) {
        u = g.cwiseQuotient(a);
        return;
    }
    // u_l = g_l s / (a_l s + gamma) where s = ||u|| solves
    // h(s) = sum_l g_l^2 / (a_l s + gamma)^2 - 1 = 0, decreasing and convex.
    double lo = (gnorm - gamma) / a.maxCoeff();
    double hi = (gnorm - gamma) / a.minCoeff();
    double s = lo;
    if (hi - lo > 1e-12 * hi) {
        for (int it = 0; it < 200; ++it) {
            double h = -1.0;
            double dh = 0.0;
            for (Index l = 0; l < g.size(); ++l) {
                const double den = a[l] * s + gamma;
                h += g[l] * g[l] / (den * den);
                dh -= 2.0 * a[l] * g[l] * g[l] / (den * den * den);
            }
            if (h > 0.0) {
                lo = s;
            } else {
                hi = s;
            }
            if (h == 0.0 || hi - lo <= 1e-12 * hi) {
                break;
            }
            double next = s - h / dh;
            if (!(next > lo && next < hi)) {
                next = 0.5 * (lo + hi);
            }
            if (std::abs(next - s) <= 1e-12 * std::max(s, 1e-300)) {
                s = next;
                break;
            }
            s = next;
        }
    }
    for (Index l = 0; l < g.size(); ++l) {
        u[l] = g[l] * s / (a[l] * s + gamma);
    }
}

/// Standardized gradient of the loss for group j, given the current
/// residual correlations corr(l, j) = X_l[:, j]^T r_l.
void group_gradient(const Matrix& corr, const Matrix& w, double n0p, Index j, Vector& grad) {
    for (Index l = 0; l < corr.rows(); ++l) {
        grad[l] = -corr(l, j) / (w(l, j) * n0p);
    }
}

/// corr(l, :) = G_l[:, i] - G_l b_l, recomputed from scratch.
Matrix residual_correlations(const SessionGrams& grams, Index target, const Matrix& coef) {
    const Index m = static_cast<Index>(grams.sessions());
    Matrix corr(m, grams.q());
    for (Index l = 0; l < m; ++l) {
        const Matrix& g = grams.gram[static_cast<std::size_t>(l)];
        corr.row(l) = (g.col(target) - g * coef.row(l).transpose()).transpose();
    }
    return corr;
}

void check_problem(const GroupLassoProblem& problem) {
    if (problem.grams == nullptr || problem.grams->sessions() == 0) {
        fail(ErrorCode::InvalidArgument, "group lasso problem has no sessions");
    }
    if (problem.target < 0 || problem.target >= problem.grams->q()) {
        fail(ErrorCode::InvalidArgument, "target node out of range");
    }
    if (!(problem.gamma >= 0.0) || !std::isfinite(problem.gamma)) {
        fail(ErrorCode::InvalidArgument, "gamma must be finite and non-negative");
    }
}

} // namespace

SessionGrams SessionGrams::from_dataset(const MultiSessionDataset& ds) {
    std::vector<std::vector<std::size_t>> all(ds.dims().m());
    for (std::size_t l = 0; l < all.size(); ++l) {
        all[l].resize(ds.dims().n[l]);
        for (std::size_t k = 0; k < all[l].size(); ++k) {
            all[l][k] = k;
        }
    }
    return from_trials(ds, all);
}

SessionGrams SessionGrams::from_designs(std::span<const Matrix> designs) {
    SessionGrams out;
    for (const Matrix& x : designs) {
        Matrix g = Matrix::Zero(x.cols(), x.cols());
        g.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
        out.gram.push_back(g.selfadjointView<Eigen::Lower>());
        out.rows.push_back(static_cast<double>(x.rows()));
    }
    return out;
}

SessionGrams SessionGrams::from_trials(const MultiSessionDataset& ds,
                                       const std::vector<std::vector<std::size_t>>& trials) {
    const auto q = static_cast<Index>(ds.dims().q);
    SessionGrams out;
    for (std::size_t l = 0; l < trials.size(); ++l) {
        Matrix g = Matrix::Zero(q, q);
        for (std::size_t k : trials[l]) {
            g.selfadjointView<Eigen::Lower>().rankUpdate(ds.session(l).at(k).transpose());
        }
        out.gram.push_back(g.selfadjointView<Eigen::Lower>());
        out.rows.push_back(static_cast<double>(trials[l].size() * ds.dims().p));
    }
    return out;
}

double SessionGrams::min_rows() const {
    return *std::min_element(rows.begin(), rows.end());
}

double SessionGrams::column_rms(Index i) const {
    double ss = 0.0;
    double total = 0.0;
    for (std::size_t l = 0; l < gram.size(); ++l) {
        ss += gram[l](i, i);
        total += rows[l];
    }
    return std::sqrt(ss / total);
}

double default_gamma(const Dimensions& dims, double c0) {
    const double m = static_cast<double>(dims.m());
    const double n0 = static_cast<double>(dims.n0());
    const double p = static_cast<double>(dims.p);
    const double q = static_cast<double>(dims.q);
    return c0 * std::sqrt((m + std::log(m * n0 * p * q)) / (n0 * p));
}

Matrix column_weights(const SessionGrams& grams, Index target) {
    const Index m = static_cast<Index>(grams.sessions());
    const Index q = grams.q();
    Matrix w(m, q);
    for (Index l = 0; l < m; ++l) {
        const auto lu = static_cast<std::size_t>(l);
        for (Index j = 0; j < q; ++j) {
            w(l, j) = std::sqrt(grams.gram[lu](j, j) / grams.rows[lu]);
            if (j != target && !(w(l, j) > 0.0)) {
                std::ostringstream os;
                os << "column " << j << " of session " << l << " has zero variance";
                fail(ErrorCode::ZeroVarianceColumn, os.str());
            }
        }
    }
    return w;
}

double objective(const GroupLassoProblem& problem, const Matrix& coef) {
    check_problem(problem);
    const SessionGrams& grams = *problem.grams;
    const Index i = problem.target;
    const Matrix w = column_weights(grams, i);
    const double n0p = grams.min_rows();
    double loss = 0.0;
    for (std::size_t l = 0; l < grams.sessions(); ++l) {
        const Matrix& g = grams.gram[l];
        const Vector b = coef.row(static_cast<Index>(l)).transpose();
        loss += g(i, i) - 2.0 * b.dot(g.col(i)) + b.dot(g * b);
    }
    double penalty = 0.0;
    for (Index j = 0; j < grams.q(); ++j) {
        if (j != i) {
            penalty += w.col(j).cwiseProduct(coef.col(j)).norm();
        }
    }
    return loss / (2.0 * n0p) + problem.gamma * penalty;
}

double kkt_residual(const GroupLassoProblem& problem, const Matrix& coef) {
    check_problem(problem);
    const SessionGrams& grams = *problem.grams;
    const Index i = problem.target;
    const Index m = static_cast<Index>(grams.sessions());
    const Matrix w = column_weights(grams, i);
    const Matrix corr = residual_correlations(grams, i, coef);
    const double n0p = grams.min_rows();
    double worst = 0.0;
    Vector grad(m);
    for (Index j = 0; j < grams.q(); ++j) {
        if (j == i) {
            continue;
        }
        group_gradient(corr, w, n0p, j, grad);
        const Vector u = w.col(j).cwiseProduct(coef.col(j));
        const double unorm = u.norm();
        if (unorm > 0.0) {
            worst = std::max(worst, (grad + problem.gamma * u / unorm).norm());
        } else {
            worst = std::max(worst, grad.norm() - problem.gamma);
        }
    }
    return worst;
}

double null_gamma(const GroupLassoProblem& problem) {
    check_problem(problem);
    const SessionGrams& grams = *problem.grams;
    const Index i = problem.target;
    const Index m = static_cast<Index>(grams.sessions());
    const Matrix w = column_weights(grams, i);
    const double n0p = grams.min_rows();
    double best = 0.0;
    for (Index j = 0; j < grams.q(); ++j) {
        if (j == i) {
            continue;
        }
        double ss = 0.0;
        for (Index l = 0; l < m; ++l) {
            const double v = grams.gram[static_cast<std::size_t>(l)](j, i) / (w(l, j) * n0p);
            ss += v * v;
        }
        best = std::max(best, std::sqrt(ss));
    }
    return best;
}

GroupLassoSolution solve(const GroupLassoProblem& problem, const SolverOptions& options) {
    check_problem(problem);
    if (options.max_iter <= 0 || !(options.tol > 0.0) || !(options.kkt_tol > 0.0)) {
        fail(ErrorCode::InvalidArgument, "solver options must be positive");
    }
    const SessionGrams& grams = *problem.grams;
    const Index i = problem.target;
    const Index m = static_cast<Index>(grams.sessions());
    const Index q = grams.q();
    const double n0p = grams.min_rows();
    const Matrix w = column_weights(grams, i);

    // Curvature of the loss in standardized coordinates: n_l p / (n0 p).
    Vector curvature(m);
    for (Index l = 0; l < m; ++l) {
        curvature[l] = grams.rows[static_cast<std::size_t>(l)] / n0p;
    }

    GroupLassoSolution sol;
    sol.coef = Matrix::Zero(m, q);
    Matrix corr = residual_correlations(grams, i, sol.coef);
    sol.objective_history.push_back(objective(problem, sol.coef));

    Vector g(m);
    Vector u(m);
    for (int sweep = 0; sweep < options.max_iter; ++sweep) {
        double max_change = 0.0;
        for (Index j = 0; j < q; ++j) {
            if (j == i) {
                continue;
            }
            for (Index l = 0; l < m; ++l) {
                const auto lu = static_cast<std::size_t>(l);
                const double partial = corr(l, j) + grams.gram[lu](j, j) * sol.coef(l, j);
                g[l] = partial / (w(l, j) * n0p);
            }
            group_update(g, curvature, problem.gamma, u);
            for (Index l = 0; l < m; ++l) {
                const double next = u[l] / w(l, j);
                const double delta = next - sol.coef(l, j);
                if (delta != 0.0) {
                    corr.row(l) -= delta * grams.gram[static_cast<std::size_t>(l)].col(j).transpose();
                    sol.coef(l, j) = next;
                    max_change = std::max(max_change, std::abs(delta));
                }
            }
        }
        sol.iterations = sweep + 1;
        sol.max_change = max_change;
        sol.objective_history.push_back(objective(problem, sol.coef));
        if (max_change < options.tol) {
            break;
        }
        // Refresh accumulated rounding in the running correlations.
        if (sweep % 50 == 49) {
            corr = residual_correlations(grams, i, sol.coef);
        }
    }
    sol.kkt_residual = kkt_residual(problem, sol.coef);
    sol.converged = sol.max_change < options.tol && sol.kkt_residual <= options.kkt_tol;
    return sol;
}

std::vector<NodeFit> fit_all_nodes(const SessionGrams& grams, const std::vector<double>& gammas,
                                   const SolverOptions& options) {
    const Index q = grams.q();
    if (static_cast<Index>(gammas.size()) != q) {
        fail(ErrorCode::InvalidArgument, "need one gamma per node");
    }
    std::vector<NodeFit> fits(static_cast<std::size_t>(q));
#pragma omp parallel for schedule(dynamic)
    for (Index i = 0; i < q; ++i) {
        auto& fit = fits[static_cast<std::size_t>(i)];
        try {
            fit.solution = solve({&grams, i, gammas[static_cast<std::size_t>(i)]}, options);
        } catch (const std::exception& e) {
            fit.ok = false;
            fit.error = e.what();
        }
    }
    return fits;
}

std::vector<double> theory_gammas(const SessionGrams& grams, const Dimensions& dims, double c0) {
    const double base = default_gamma(dims, c0);
    std::vector<double> out(static_cast<std::size_t>(grams.q()));
    for (Index i = 0; i < grams.q(); ++i) {
        out[static_cast<std::size_t>(i)] = base * grams.column_rms(i);
    }
    return out;
}

std::vector<double> log_grid(double lo, double hi, std::size_t count) {
    if (count == 0 || !(lo > 0.0) || !(hi >= lo)) {
        fail(ErrorCode::InvalidArgument, "bad log grid");
    }
    std::vector<double> grid(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double f = count == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(count - 1);
        grid[k] = std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo)));
    }
    return grid;
}

CrossValidationResult cross_validate(const MultiSessionDataset& ds,
                                     const std::vector<double>& multipliers, std::size_t folds,
                                     double c0, const SolverOptions& options) {
    const Dimensions& d = ds.dims();
    if (multipliers.empty()) {
        fail(ErrorCode::InvalidArgument, "cross-validation grid is empty");
    }
    const std::size_t k_folds = std::min(folds, d.n0());
    if (k_folds < 2) {
        fail(ErrorCode::InvalidArgument, "cross-validation needs at least 2 trials per session");
    }
    const SessionGrams full = SessionGrams::from_dataset(ds);
    const std::vector<double> base = theory_gammas(full, d, c0);

    CrossValidationResult out;
    out.multipliers = multipliers;
    out.losses.assign(multipliers.size(), 0.0);
    for (std::size_t f = 0; f < k_folds; ++f) {
        std::vector<std::vector<std::size_t>> train(d.m());
        std::vector<std::vector<std::size_t>> test(d.m());
        for (std::size_t l = 0; l < d.m(); ++l) {
            for (std::size_t k = 0; k < d.n[l]; ++k) {
                (k % k_folds == f ? test : train)[l].push_back(k);
            }
        }
        const SessionGrams train_g = SessionGrams::from_trials(ds, train);
        const SessionGrams test_g = SessionGrams::from_trials(ds, test);
        double test_rows = 0.0;
        for (double r : test_g.rows) {
            test_rows += r;
        }
        for (std::size_t g = 0; g < multipliers.size(); ++g) {
            std::vector<double> gammas(base);
            for (double& v : gammas) {
                v *= multipliers[g];
            }
            const auto fits = fit_all_nodes(train_g, gammas, options);
            double loss = 0.0;
            for (std::size_t i = 0; i < fits.size(); ++i) {
                if (!fits[i].ok) {
                    fail(ErrorCode::InvalidArgument, "cross-validation fit failed: " + fits[i].error);
                }
                const Matrix& coef = fits[i].solution.coef;
                const auto ii = static_cast<Index>(i);
                for (std::size_t l = 0; l < d.m(); ++l) {
                    const Matrix& gm = test_g.gram[l];
                    const Vector b = coef.row(static_cast<Index>(l)).transpose();
                    loss += gm(ii, ii) - 2.0 * b.dot(gm.col(ii)) + b.dot(gm * b);
                }
            }
            out.losses[g] += loss / test_rows;
        }
    }
    const auto best = std::min_element(out.losses.begin(), out.losses.end()) - out.losses.begin();
    out.best_multiplier = multipliers[static_cast<std::size_t>(best)];
    out.gammas = base;
    for (double& v : out.gammas) {
        v *= out.best_multiplier;
    }
    return out;
}

} // namespace mggm::grouplasso
