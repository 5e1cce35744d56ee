#include "symco/umap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "layout.hpp"

namespace symco::umap {

namespace {

constexpr double kSigmaTolerance = 1e-5;
constexpr int kSigmaIterations = 64;
constexpr double kMinSigmaScale = 1e-3;
constexpr double kGradClip = 4.0;

double clip(double v) { return std::clamp(v, -kGradClip, kGradClip); }

}  // namespace

bool FuzzyGraph::connected() const {
    if (p == 0) return false;
    std::vector<bool> seen(p, false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    std::size_t reached = 1;
    while (!stack.empty()) {
        const auto v = stack.back();
        stack.pop_back();
        for (std::size_t u = 0; u < p; ++u) {
            if (!seen[u] && weights[v * p + u] > 0.0) {
                seen[u] = true;
                ++reached;
                stack.push_back(u);
            }
        }
    }
    return reached == p;
}

FuzzyGraph FuzzyGraph::from_weights(std::size_t p, std::vector<double> weights) {
    if (weights.size() != p * p) throw std::invalid_argument("weight matrix must be p x p");
    for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t b = 0; b < p; ++b) {
            const double w = weights[a * p + b];
            if (!(w >= 0.0 && w <= 1.0) || w != weights[b * p + a]) {
                throw std::invalid_argument("graph weights must be symmetric and lie in [0, 1]");
            }
        }
    }
    FuzzyGraph g;
    g.p = p;
    g.directed = weights;
    g.weights = std::move(weights);
    g.rho.assign(p, 0.0);
    g.sigma.assign(p, 1.0);
    return g;
}

FuzzyGraph fuzzy_graph(const DistanceMatrix& d, int n_neighbours) {
    const std::size_t p = d.size();
    if (n_neighbours < 2 || static_cast<std::size_t>(n_neighbours) >= p) {
        throw std::invalid_argument("n_neighbours must satisfy 2 <= n_neighbours < p (p = " + std::to_string(p) +
                                    ")");
    }
    if (!d.fully_defined()) throw std::domain_error("distance matrix has undefined entries; cannot embed");

    FuzzyGraph g;
    g.p = p;
    g.n_neighbours = n_neighbours;
    g.directed.assign(p * p, 0.0);
    g.weights.assign(p * p, 0.0);
    g.rho.assign(p, 0.0);
    g.sigma.assign(p, 0.0);

    const auto others = static_cast<std::size_t>(n_neighbours - 1);
    const double target = std::log2(static_cast<double>(n_neighbours));
    double mean_all = 0.0;
    for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t b = 0; b < p; ++b) mean_all += a == b ? 0.0 : d.value(a, b);
    }
    mean_all /= static_cast<double>(p * (p - 1));

    for (std::size_t i = 0; i < p; ++i) {
        std::vector<std::size_t> order;
        for (std::size_t j = 0; j < p; ++j) {
            if (j != i) order.push_back(j);
        }
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t x, std::size_t y) { return d.value(i, x) < d.value(i, y); });
        order.resize(others);

        const double rho = d.value(i, order.front());
        auto mass = [&](double sigma) {
            double s = 0.0;
            for (auto j : order) s += std::exp(-std::max(0.0, d.value(i, j) - rho) / sigma);
            return s;
        };

        double lo = 0.0, hi = std::numeric_limits<double>::infinity(), mid = 1.0;
        for (int it = 0; it < kSigmaIterations; ++it) {
            const double s = mass(mid);
            if (std::abs(s - target) < kSigmaTolerance) break;
            if (s > target) {
                hi = mid;
                mid = 0.5 * (lo + hi);
            } else {
                lo = mid;
                mid = std::isinf(hi) ? mid * 2.0 : 0.5 * (lo + hi);
            }
        }
        double mean_near = 0.0;
        for (auto j : order) mean_near += d.value(i, j);
        mean_near /= static_cast<double>(order.size());
        const double floor = kMinSigmaScale * (rho > 0.0 ? mean_near : mean_all);
        if (mid < floor) mid = floor;
        if (!(mid > 0.0)) mid = kMinSigmaScale;
        if (std::abs(mass(mid) - target) > kSigmaTolerance) {
            g.warnings.push_back("node " + std::to_string(i) + " (" + d.labels()[i] +
                                 "): tied neighbour distances; bandwidth floored at " + std::to_string(mid));
        }
        g.rho[i] = rho;
        g.sigma[i] = mid;
        for (auto j : order) g.directed[i * p + j] = std::exp(-std::max(0.0, d.value(i, j) - rho) / mid);
    }

    for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t b = 0; b < p; ++b) {
            const double u = g.directed[a * p + b];
            const double v = g.directed[b * p + a];
            g.weights[a * p + b] = u + v - u * v;
        }
    }
    return g;
}

EmbedParams EmbedParams::tight() {
    EmbedParams p;
    p.n_neighbours = 2;
    p.preset = "tight";
    return p;
}

EmbedParams EmbedParams::loose() {
    EmbedParams p;
    p.n_neighbours = 4;
    p.preset = "loose";
    return p;
}

EmbedParams EmbedParams::from_preset(const std::string& name) {
    if (name == "tight") return tight();
    if (name == "loose") return loose();
    throw std::invalid_argument("unknown preset '" + name + "' (expected tight or loose)");
}

Curve fit_curve(double min_dist, double spread) {
    if (!(min_dist > 0.0) || !(spread > 0.0) || min_dist >= 3.0 * spread) {
        throw std::invalid_argument("min_dist and spread must be positive with min_dist < 3 * spread");
    }
    constexpr int kPoints = 300;
    std::vector<double> xs, ys;
    for (int i = 0; i < kPoints; ++i) {
        const double x = 3.0 * spread * i / (kPoints - 1);
        xs.push_back(x);
        ys.push_back(x < min_dist ? 1.0 : std::exp(-(x - min_dist) / spread));
    }
    auto residuals = [&](double a, double b, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
        r.resize(kPoints);
        if (jac) jac->resize(kPoints, 2);
        for (int i = 0; i < kPoints; ++i) {
            const double x = xs[static_cast<std::size_t>(i)];
            const double xp = x > 0.0 ? std::pow(x, 2.0 * b) : 0.0;
            const double f = 1.0 / (1.0 + a * xp);
            r(i) = f - ys[static_cast<std::size_t>(i)];
            if (jac) {
                const double f2 = f * f;
                (*jac)(i, 0) = -xp * f2;
                (*jac)(i, 1) = x > 0.0 ? -a * xp * 2.0 * std::log(x) * f2 : 0.0;
            }
        }
    };

    // Levenberg-Marquardt from (1, 1).
    double a = 1.0, b = 1.0, lambda = 1e-3;
    Eigen::VectorXd r;
    Eigen::MatrixXd jac;
    residuals(a, b, r, &jac);
    double cost = r.squaredNorm();
    for (int it = 0; it < 500; ++it) {
        const Eigen::Matrix2d jtj = jac.transpose() * jac;
        const Eigen::Vector2d jtr = jac.transpose() * r;
        Eigen::Matrix2d lhs = jtj;
        lhs.diagonal() += lambda * jtj.diagonal();
        const Eigen::Vector2d step = lhs.ldlt().solve(-jtr);
        const double na = a + step(0), nb = b + step(1);
        if (!(na > 0.0) || !(nb > 0.0)) {
            lambda *= 10.0;
            continue;
        }
        Eigen::VectorXd nr;
        residuals(na, nb, nr, nullptr);
        const double ncost = nr.squaredNorm();
        if (ncost < cost) {
            const bool done = cost - ncost < 1e-15 * std::max(cost, 1e-300) && step.norm() < 1e-12;
            a = na;
            b = nb;
            cost = ncost;
            residuals(a, b, r, &jac);
            lambda = std::max(lambda / 10.0, 1e-12);
            if (done || step.norm() < 1e-14) break;
        } else {
            lambda *= 10.0;
            if (lambda > 1e12) break;
        }
    }
    return {a, b};
}

double Embedding::diameter() const {
    double best = 0.0;
    for (Eigen::Index i = 0; i < coords.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < coords.rows(); ++j) {
            best = std::max(best, (coords.row(i) - coords.row(j)).norm());
        }
    }
    return best;
}

namespace detail {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

LayoutOptimizer::LayoutOptimizer(const FuzzyGraph& g, const EmbedParams& params, Eigen::MatrixXd init)
    : curve_(fit_curve(params.min_dist, params.spread)),
      gamma_(params.repulsion_strength),
      initial_alpha_(params.learning_rate),
      alpha_(params.learning_rate),
      n_epochs_(params.n_epochs),
      rng_(params.seed),
      y_(std::move(init)) {
    if (n_epochs_ < 1) throw std::invalid_argument("n_epochs must be positive");
    if (!(initial_alpha_ > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (params.negative_sample_rate < 0) throw std::invalid_argument("negative sample rate must be non-negative");
    if (y_.rows() != static_cast<Eigen::Index>(g.p) || y_.cols() != 2) {
        throw std::invalid_argument("initial layout must be p x 2");
    }
    const double w_max = *std::max_element(g.weights.begin(), g.weights.end());
    if (!(w_max > 0.0)) throw std::invalid_argument("graph has no edges");
    const double cutoff = w_max / n_epochs_;
    for (std::size_t a = 0; a < g.p; ++a) {
        for (std::size_t b = 0; b < g.p; ++b) {
            const double w = g.weights[a * g.p + b];
            if (a == b || w <= 0.0 || w < cutoff) continue;
            head_.push_back(a);
            tail_.push_back(b);
            const double eps = w_max / w;  // n_epochs / (n_epochs * w / w_max)
            per_sample_.push_back(eps);
            per_negative_.push_back(params.negative_sample_rate > 0 ? eps / params.negative_sample_rate
                                                                    : std::numeric_limits<double>::infinity());
        }
    }
    next_sample_ = per_sample_;
    next_negative_ = per_negative_;
}

void LayoutOptimizer::epoch(int n) {
    const auto p = static_cast<std::uint64_t>(y_.rows());
    const double a = curve_.a, b = curve_.b;
    for (std::size_t e = 0; e < head_.size(); ++e) {
        if (next_sample_[e] > n) continue;
        const auto j = static_cast<Eigen::Index>(head_[e]);
        const auto k = static_cast<Eigen::Index>(tail_[e]);
        double dx = y_(j, 0) - y_(k, 0), dy = y_(j, 1) - y_(k, 1);
        double d2 = dx * dx + dy * dy;
        double coeff = 0.0;
        if (d2 > 0.0) coeff = -2.0 * a * b * std::pow(d2, b - 1.0) / (a * std::pow(d2, b) + 1.0);
        if (!std::isfinite(coeff)) {
            throw std::runtime_error("non-finite attractive gradient at epoch " + std::to_string(n) + ", edge " +
                                     std::to_string(head_[e]) + "-" + std::to_string(tail_[e]));
        }
        const double gx = clip(coeff * dx), gy = clip(coeff * dy);
        y_(j, 0) += gx * alpha_;
        y_(j, 1) += gy * alpha_;
        y_(k, 0) -= gx * alpha_;
        y_(k, 1) -= gy * alpha_;
        next_sample_[e] += per_sample_[e];

        const int n_neg = std::isinf(per_negative_[e])
                              ? 0
                              : static_cast<int>((n - next_negative_[e]) / per_negative_[e]);
        for (int s = 0; s < n_neg; ++s) {
            const auto o = static_cast<Eigen::Index>(rng_() % p);
            dx = y_(j, 0) - y_(o, 0);
            dy = y_(j, 1) - y_(o, 1);
            d2 = dx * dx + dy * dy;
            if (d2 > 0.0) {
                coeff = 2.0 * gamma_ * b / ((0.001 + d2) * (a * std::pow(d2, b) + 1.0));
            } else if (o == j) {
                continue;
            } else {
                coeff = 0.0;
            }
            if (!std::isfinite(coeff)) {
                throw std::runtime_error("non-finite repulsive gradient at epoch " + std::to_string(n) + ", edge " +
                                         std::to_string(head_[e]) + "-" + std::to_string(tail_[e]));
            }
            if (coeff > 0.0) {
                y_(j, 0) += clip(coeff * dx) * alpha_;
                y_(j, 1) += clip(coeff * dy) * alpha_;
            }
        }
        next_negative_[e] += n_neg * per_negative_[e];
    }
    alpha_ = initial_alpha_ * (1.0 - static_cast<double>(n) / n_epochs_);
}

}  // namespace detail

Eigen::MatrixXd initial_layout(const FuzzyGraph& g, std::uint64_t seed, bool* spectral) {
    const auto p = static_cast<Eigen::Index>(g.p);
    Eigen::MatrixXd y;
    bool ok = false;
    if (g.p >= 3 && g.connected()) {
        Eigen::MatrixXd w(p, p);
        for (Eigen::Index a = 0; a < p; ++a) {
            for (Eigen::Index b = 0; b < p; ++b) w(a, b) = a == b ? 0.0 : g.weight(a, b);
        }
        const Eigen::VectorXd inv_sqrt = w.rowwise().sum().cwiseSqrt().cwiseInverse();
        Eigen::MatrixXd lap = -(inv_sqrt.asDiagonal() * w * inv_sqrt.asDiagonal());
        lap.diagonal().array() += 1.0;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lap);
        if (es.info() == Eigen::Success) {
            y = es.eigenvectors().middleCols(1, 2);
            ok = true;
            for (Eigen::Index c = 0; c < 2; ++c) {
                Eigen::Index arg = 0;
                for (Eigen::Index i = 1; i < p; ++i) {
                    if (std::abs(y(i, c)) > std::abs(y(arg, c))) arg = i;
                }
                if (y(arg, c) < 0) y.col(c) *= -1.0;
                if (!(y.col(c).maxCoeff() - y.col(c).minCoeff() > 1e-12)) ok = false;
            }
        }
    }
    if (!ok) {
        std::mt19937_64 rng(detail::splitmix64(seed));
        std::uniform_real_distribution<double> unif(-10.0, 10.0);
        y.resize(p, 2);
        for (Eigen::Index i = 0; i < p; ++i) {
            y(i, 0) = unif(rng);
            y(i, 1) = unif(rng);
        }
    }
    for (Eigen::Index c = 0; c < 2; ++c) {
        const double lo = y.col(c).minCoeff(), hi = y.col(c).maxCoeff();
        const double range = hi - lo > 0.0 ? hi - lo : 1.0;
        y.col(c) = (10.0 * (y.col(c).array() - lo) / range).matrix();
    }
    if (spectral) *spectral = ok;
    return y;
}

Embedding embed(const FuzzyGraph& g, const std::vector<std::string>& labels, const EmbedParams& params) {
    if (labels.size() != g.p) throw std::invalid_argument("label count does not match the graph");
    bool spectral = false;
    detail::LayoutOptimizer opt(g, params, initial_layout(g, params.seed, &spectral));
    for (int n = 0; n < opt.n_epochs(); ++n) opt.epoch(n);

    Embedding out;
    out.labels = labels;
    out.coords = opt.coords();
    out.params = params;
    out.init = spectral ? "spectral" : "random";
    out.warnings = g.warnings;
    if (!spectral) out.warnings.push_back("graph is disconnected or degenerate; random initial layout used");
    return out;
}

Embedding embed(const DistanceMatrix& d, const EmbedParams& params) {
    return embed(fuzzy_graph(d, params.n_neighbours), d.labels(), params);
}

}  // namespace symco::umap
