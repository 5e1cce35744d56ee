#include "symco/lpca.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace symco::lpca {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

void require_finite(const MatrixXd& theta) {
    if (!theta.allFinite()) {
        for (Index j = 0; j < theta.cols(); ++j) {
            for (Index i = 0; i < theta.rows(); ++i) {
                if (std::isnan(theta(i, j))) {
                    throw std::domain_error("natural parameter (" + std::to_string(i) + ", " + std::to_string(j) +
                                            ") is NaN");
                }
            }
        }
    }
}

void check_shape(const BinaryMatrix& x, const MatrixXd& theta) {
    if (static_cast<std::size_t>(theta.rows()) != x.rows() || static_cast<std::size_t>(theta.cols()) != x.cols()) {
        throw std::invalid_argument("natural-parameter matrix does not match the data shape");
    }
}

double logit_clipped(double mean) {
    if (mean <= 0.0) return -kOffsetClip;
    if (mean >= 1.0) return kOffsetClip;
    return std::clamp(std::log(mean / (1.0 - mean)), -kOffsetClip, kOffsetClip);
}

VectorXd null_offsets(const kernels::WeightedRows& d) {
    const VectorXd observed = d.w.transpose() * d.count;
    const VectorXd present = d.x.transpose() * d.count;
    VectorXd mu(d.cols());
    for (Index a = 0; a < d.cols(); ++a) {
        if (observed(a) <= 0.0) {
            throw std::domain_error("column " + std::to_string(a) + " has no observed entries");
        }
        mu(a) = logit_clipped(present(a) / observed(a));
    }
    return mu;
}

double null_deviance_weighted(const kernels::WeightedRows& d, kernels::Backend backend) {
    const VectorXd mu = null_offsets(d);
    const MatrixXd theta = MatrixXd::Ones(d.patterns(), 1) * mu.transpose();
    return kernels::majorize(d, theta, nullptr, backend);
}

/// Eigenvectors of the k largest eigenvalues, largest first.
MatrixXd top_eigenvectors(const MatrixXd& sym, int k) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym);
    if (es.info() != Eigen::Success) throw std::runtime_error("symmetric eigen-decomposition failed");
    const Index p = sym.rows();
    MatrixXd u(p, k);
    for (int j = 0; j < k; ++j) u.col(j) = es.eigenvectors().col(p - 1 - j);
    return u;
}

MatrixXd random_orthonormal(Index p, int k, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    MatrixXd g(p, k);
    for (Index j = 0; j < k; ++j) {
        for (Index i = 0; i < p; ++i) g(i, j) = normal(rng);
    }
    Eigen::HouseholderQR<MatrixXd> qr(g);
    return qr.householderQ() * MatrixXd::Identity(p, k);
}

constexpr double kOverRelaxGrowth = 1.5;

kernels::WeightedRows with_counts(const kernels::WeightedRows& d, VectorXd counts) {
    kernels::WeightedRows out = d;
    out.count = std::move(counts);
    return out;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

double deviance(const BinaryMatrix& x, const MatrixXd& theta) {
    check_shape(x, theta);
    require_finite(theta);
    double total = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t a = 0; a < x.cols(); ++a) {
            const Obs o = x(i, a);
            if (o == Obs::missing) continue;
            const double t = theta(static_cast<Index>(i), static_cast<Index>(a));
            total += 2.0 * kernels::softplus(o == Obs::present ? -t : t);
        }
    }
    return total;
}

MatrixXd deviance_gradient(const BinaryMatrix& x, const MatrixXd& theta) {
    check_shape(x, theta);
    require_finite(theta);
    MatrixXd g = MatrixXd::Zero(theta.rows(), theta.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t a = 0; a < x.cols(); ++a) {
            const Obs o = x(i, a);
            if (o == Obs::missing) continue;
            const auto r = static_cast<Index>(i), c = static_cast<Index>(a);
            g(r, c) = 2.0 * (kernels::sigmoid(theta(r, c)) - (o == Obs::present ? 1.0 : 0.0));
        }
    }
    return g;
}

VectorXd null_model(const BinaryMatrix& x) { return null_offsets(kernels::compress_rows(x)); }

double null_deviance(const BinaryMatrix& x) {
    return null_deviance_weighted(kernels::compress_rows(x), kernels::Backend::serial);
}

MatrixXd LpcaModel::natural_parameters(const BinaryMatrix& x) const {
    if (static_cast<Index>(x.cols()) != offsets.size()) throw std::invalid_argument("model and data differ in p");
    MatrixXd q(static_cast<Index>(x.rows()), offsets.size());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t a = 0; a < x.cols(); ++a) {
            const Obs o = x(i, a);
            q(static_cast<Index>(i), static_cast<Index>(a)) = o == Obs::missing ? 0.0 : (o == Obs::present ? 1.0 : -1.0);
        }
    }
    const MatrixXd centered = (m * q).rowwise() - offsets.transpose();
    MatrixXd theta = centered * loadings * loadings.transpose();
    theta.rowwise() += offsets.transpose();
    return theta;
}

void normalize_signs(MatrixXd& loadings) {
    for (Index j = 0; j < loadings.cols(); ++j) {
        Index arg = 0;
        for (Index i = 1; i < loadings.rows(); ++i) {
            if (std::abs(loadings(i, j)) > std::abs(loadings(arg, j))) arg = i;
        }
        if (loadings(arg, j) < 0) loadings.col(j) *= -1.0;
    }
}

LpcaModel fit_weighted(const kernels::WeightedRows& data, int k, double m, double null_dev, const FitOptions& opts) {
    const Index p = data.cols();
    if (k < 0 || k > p) throw std::invalid_argument("component count must lie in [0, p]");
    if (!(m > 0.0)) throw std::invalid_argument("saturation magnitude m must be positive");

    LpcaModel model;
    model.m = m;
    model.k = k;
    model.null_deviance = null_dev;
    if (k == 0) {
        model.offsets = null_offsets(data);
        model.loadings = MatrixXd::Zero(p, 0);
        model.fit_deviance = null_deviance_weighted(data, opts.backend);
        model.trace = {model.fit_deviance};
        model.converged = true;
        return model;
    }

    const VectorXd& c = data.count;
    const double total = c.sum();
    if (!(total > 0.0)) throw std::invalid_argument("no rows to fit");
    const MatrixXd sat = m * data.q;
    const VectorXd sat_sum = sat.transpose() * c;
    const MatrixXd sat_gram = kernels::weighted_crossprod(sat, c, sat, opts.backend);

    // A^T C A for A = sat - 1 mu^T.
    auto centered_gram = [&](const VectorXd& mu) -> MatrixXd {
        return sat_gram - sat_sum * mu.transpose() - mu * sat_sum.transpose() + total * mu * mu.transpose();
    };

    VectorXd mu;
    MatrixXd u;
    if (opts.warm_start) {
        if (opts.warm_start->k != k || opts.warm_start->offsets.size() != p) {
            throw std::invalid_argument("warm start has a different shape");
        }
        mu = opts.warm_start->offsets;
        u = opts.warm_start->loadings;
    } else {
        mu = sat_sum / total;
        u = opts.random_init ? random_orthonormal(p, k, opts.seed) : top_eigenvectors(centered_gram(mu), k);
    }

    auto fitted = [&](const VectorXd& offs, const MatrixXd& load) -> MatrixXd {
        MatrixXd theta = ((sat.rowwise() - offs.transpose()) * load) * load.transpose();
        theta.rowwise() += offs.transpose();
        return theta;
    };

    // One MM update from (mu, u) given the working response z at that point.
    auto mm_step = [&](const MatrixXd& z, VectorXd& offs, MatrixXd& load) {
        const VectorXd z_sum = z.transpose() * c;
        offs = (z_sum - load * (load.transpose() * sat_sum)) / total;
        const MatrixXd sat_z = kernels::weighted_crossprod(sat, c, z, opts.backend);
        const MatrixXd cross =
            sat_z - sat_sum * offs.transpose() - offs * z_sum.transpose() + total * offs * offs.transpose();
        const MatrixXd target = cross + cross.transpose() - centered_gram(offs);
        load = top_eigenvectors(0.5 * (target + target.transpose()), k);
    };

    MatrixXd z;
    double dev = kernels::majorize(data, fitted(mu, u), &z, opts.backend);
    if (!std::isfinite(dev)) throw std::runtime_error("deviance is non-finite at the starting point");
    model.trace.push_back(dev);

    // Adaptive over-relaxation: extrapolate (mu, U U^T) along the MM step by
    // omega and keep the result only if the deviance still decreases;
    // otherwise take the plain MM step and reset omega.
    double omega = 1.0;
    int iter = 0;
    while (true) {
        if (iter >= opts.max_iter) break;
        ++iter;
        VectorXd mu_mm = mu;
        MatrixXd u_mm = u;
        mm_step(z, mu_mm, u_mm);

        double next = std::numeric_limits<double>::infinity();
        bool plain = false;
        MatrixXd z_next;
        if (opts.accelerate && omega > 1.0) {
            const VectorXd mu_w = mu + omega * (mu_mm - mu);
            const MatrixXd proj = u * u.transpose();
            const MatrixXd proj_w = proj + omega * (u_mm * u_mm.transpose() - proj);
            const MatrixXd u_w = top_eigenvectors(0.5 * (proj_w + proj_w.transpose()), k);
            const double dev_w = kernels::majorize(data, fitted(mu_w, u_w), &z_next, opts.backend);
            if (std::isfinite(dev_w) && dev_w <= dev) {
                next = dev_w;
                mu = mu_w;
                u = u_w;
                omega *= kOverRelaxGrowth;
            } else {
                omega = 1.0;
            }
        }
        if (!std::isfinite(next)) {
            next = kernels::majorize(data, fitted(mu_mm, u_mm), &z_next, opts.backend);
            if (!std::isfinite(next)) throw std::runtime_error("deviance became non-finite during the fit");
            mu = std::move(mu_mm);
            u = std::move(u_mm);
            plain = true;
            if (opts.accelerate) omega = kOverRelaxGrowth;
        }
        z = std::move(z_next);
        const double prev = dev;
        dev = next;
        model.trace.push_back(dev);
        // Convergence is judged on plain MM steps only.
        if (plain && prev - dev <= opts.tol * std::max(prev, 1e-300)) {
            model.converged = true;
            break;
        }
    }
    model.iterations = iter;
    model.fit_deviance = dev;

    normalize_signs(u);
    model.loadings = std::move(u);
    model.offsets = std::move(mu);
    return model;
}

LpcaModel fit(const BinaryMatrix& x, int k, double m, const FitOptions& opts) {
    const auto data = kernels::compress_rows(x);
    return fit_weighted(data, k, m, null_deviance_weighted(data, opts.backend), opts);
}

MatrixXd project(const LpcaModel& model, const BinaryMatrix& x) {
    const Index p = model.offsets.size();
    if (static_cast<Index>(x.cols()) != p) throw std::invalid_argument("model and data differ in p");
    MatrixXd scores(static_cast<Index>(x.rows()), model.loadings.cols());
    VectorXd centered(p);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        Index observed = 0;
        for (Index a = 0; a < p; ++a) {
            const Obs o = x(i, static_cast<std::size_t>(a));
            if (o == Obs::missing) {
                centered(a) = 0.0;
                continue;
            }
            ++observed;
            centered(a) = model.m * (o == Obs::present ? 1.0 : -1.0) - model.offsets(a);
        }
        if (observed == 0) throw std::domain_error("row " + std::to_string(i) + " has no observed entries");
        const double scale = static_cast<double>(p) / static_cast<double>(observed);
        scores.row(static_cast<Index>(i)) = scale * (centered.transpose() * model.loadings);
    }
    return scores;
}

double heldout_deviance(const LpcaModel& model, const kernels::WeightedRows& rows) {
    MatrixXd theta = ((model.m * rows.q).rowwise() - model.offsets.transpose()) * model.loadings *
                     model.loadings.transpose();
    theta.rowwise() += model.offsets.transpose();
    return kernels::majorize(rows, theta, nullptr, kernels::Backend::serial);
}

std::vector<double> DevianceScan::explained() const {
    std::vector<double> out{0.0};
    for (const auto& r : records) out.push_back(r.explained);
    return out;
}

std::vector<double> DevianceScan::marginal() const {
    std::vector<double> out;
    for (const auto& r : records) out.push_back(r.marginal);
    return out;
}

namespace {

struct Fold {
    VectorXd train;  // per-pattern training counts
    VectorXd test;   // per-pattern held-out counts
};

std::vector<Fold> make_folds(const kernels::WeightedRows& data, const std::vector<std::size_t>& row_pattern,
                             const ScanOptions& opts, int& n_folds) {
    const auto u = data.patterns();
    std::vector<Fold> folds;
    if (row_pattern.size() <= opts.loo_max_rows) {
        // Exact leave-one-out: every row of a pattern gives the same held-out
        // fit, so one fold per pattern weighted by its multiplicity.
        n_folds = 0;
        for (Index r = 0; r < u; ++r) {
            Fold f{data.count, VectorXd::Zero(u)};
            f.train(r) -= 1.0;
            f.test(r) = data.count(r);
            folds.push_back(std::move(f));
        }
        return folds;
    }
    n_folds = opts.cv_folds;
    if (n_folds < 2) throw std::invalid_argument("cross-validation needs at least two folds");
    std::vector<std::size_t> order(row_pattern.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(opts.seed);
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng() % i]);
    }
    folds.assign(static_cast<std::size_t>(n_folds), Fold{data.count, VectorXd::Zero(u)});
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        auto& f = folds[pos % static_cast<std::size_t>(n_folds)];
        const auto r = static_cast<Index>(row_pattern[order[pos]]);
        f.train(r) -= 1.0;
        f.test(r) += 1.0;
    }
    return folds;
}

template <class Task>
void run_tasks(std::size_t n, Task&& task) {
    std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t t = 0; t < static_cast<std::int64_t>(n); ++t) {
        try {
            task(static_cast<std::size_t>(t));
        } catch (...) {
            errors[static_cast<std::size_t>(t)] = std::current_exception();
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace

DevianceScan scan(const BinaryMatrix& x, const ScanOptions& opts) {
    const int p = static_cast<int>(x.cols());
    if (opts.k_max < 1 || opts.k_max > p) throw std::invalid_argument("k_max must lie in [1, p]");
    if (opts.m_grid.empty()) throw std::invalid_argument("m grid is empty");
    for (double m : opts.m_grid) {
        if (!(m > 0.0)) throw std::invalid_argument("m grid values must be positive");
    }

    std::vector<std::size_t> row_pattern;
    const auto data = kernels::compress_rows(x, &row_pattern);

    DevianceScan out;
    out.m_grid = opts.m_grid;
    out.null_deviance = null_deviance_weighted(data, opts.fit.backend);

    int n_folds = 0;
    auto folds = make_folds(data, row_pattern, opts, n_folds);
    out.folds = n_folds;

    std::vector<bool> usable(folds.size(), true);
    for (std::size_t f = 0; f < folds.size(); ++f) {
        const VectorXd observed = data.w.transpose() * folds[f].train;
        if ((observed.array() <= 0.0).any()) {
            usable[f] = false;
            out.warnings.push_back("fold " + std::to_string(f) +
                                   " skipped: a column has no observed training entries");
        }
    }

    const std::size_t n_k = static_cast<std::size_t>(opts.k_max);
    const std::size_t n_m = opts.m_grid.size();

    // Full-data fits for every (k, m); these also seed the fold fits.
    std::vector<LpcaModel> full(n_k * n_m);
    run_tasks(full.size(), [&](std::size_t t) {
        const int k = static_cast<int>(t / n_m) + 1;
        const double m = opts.m_grid[t % n_m];
        FitOptions fo = opts.fit;
        fo.warm_start = nullptr;
        full[t] = fit_weighted(data, k, m, out.null_deviance, fo);
    });

    const std::size_t n_f = folds.size();
    std::vector<double> heldout(n_k * n_m * n_f, 0.0);
    run_tasks(heldout.size(), [&](std::size_t t) {
        const std::size_t f = t % n_f;
        const std::size_t km = t / n_f;
        if (!usable[f]) return;
        FitOptions fo = opts.fit;
        fo.warm_start = &full[km];
        fo.tol = opts.cv_tol;
        const auto train = with_counts(data, folds[f].train);
        const auto model = fit_weighted(train, full[km].k, full[km].m, 0.0, fo);
        heldout[t] = heldout_deviance(model, with_counts(data, folds[f].test));
    });

    double prev_explained = 0.0;
    for (std::size_t ki = 0; ki < n_k; ++ki) {
        ScanRecord rec;
        rec.k = static_cast<int>(ki) + 1;
        std::size_t best = 0;
        for (std::size_t mi = 0; mi < n_m; ++mi) {
            double cv = 0.0;
            for (std::size_t f = 0; f < n_f; ++f) cv += heldout[(ki * n_m + mi) * n_f + f];
            rec.cv_by_m.push_back(cv);
            if (cv < rec.cv_by_m[best]) best = mi;
        }
        const auto& model = full[ki * n_m + best];
        rec.m = opts.m_grid[best];
        rec.cv_deviance = rec.cv_by_m[best];
        rec.fit_deviance = model.fit_deviance;
        rec.converged = model.converged;
        rec.explained = model.explained();
        rec.marginal = rec.explained - prev_explained;
        prev_explained = rec.explained;
        out.records.push_back(rec);
        out.models.push_back(model);
    }
    return out;
}

DevianceScan scan_from_explained(const std::vector<double>& explained) {
    DevianceScan out;
    double prev = 0.0;
    for (std::size_t i = 0; i < explained.size(); ++i) {
        ScanRecord r;
        r.k = static_cast<int>(i) + 1;
        r.explained = explained[i];
        r.marginal = explained[i] - prev;
        prev = explained[i];
        out.records.push_back(r);
    }
    return out;
}

KSelection select_k(const DevianceScan& scan, const SelectOptions& opts) {
    const auto& recs = scan.records;
    if (recs.size() < 3) throw std::invalid_argument("select_k needs a scan with at least three components");

    KSelection sel;
    std::ostringstream why;
    for (std::size_t i = 0; i + 1 < recs.size(); ++i) {
        std::vector<double> tail;
        for (std::size_t j = i + 1; j < recs.size(); ++j) tail.push_back(recs[j].marginal);
        const double med = median(tail);
        if (recs[i].explained > opts.max_explained) continue;
        if (recs[i].marginal >= opts.drop_ratio * med) sel.candidates.push_back(recs[i].k);
    }

    if (sel.candidates.empty()) {
        sel.k = 2;
        sel.ambiguous = true;
        why << "no k has M(k) >= " << opts.drop_ratio << " x median of later marginals; defaulting to 2";
    } else {
        sel.k = sel.candidates.back();
        why << "largest k with M(k) >= " << opts.drop_ratio << " x median of later marginals is " << sel.k;
        if (sel.k == 1 && opts.prefer_two_when_ambiguous) {
            sel.k = 2;
            sel.ambiguous = true;
            why << "; between 1 and 2, taking 2";
        }
    }
    sel.rationale = why.str();
    return sel;
}

}  // namespace symco::lpca
