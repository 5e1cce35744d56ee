#include "symco/kernels.hpp"

#include <bit>
#include <cmath>
#include <string>
#include <unordered_map>

#include <omp.h>

namespace symco::kernels {

PairCounts pair_counts_serial(const BinaryMatrix& x) {
    const std::size_t p = x.cols();
    PairCounts out{p, std::vector<std::uint64_t>(p * p), std::vector<std::uint64_t>(p * p),
                   std::vector<std::uint64_t>(p * p)};
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t a = 0; a < p; ++a) {
            const Obs oa = x(i, a);
            if (oa == Obs::missing) continue;
            for (std::size_t b = 0; b < p; ++b) {
                const Obs ob = x(i, b);
                if (ob == Obs::missing) continue;
                const auto k = out.index(a, b);
                ++out.support[k];
                if (oa == Obs::present && ob == Obs::present) ++out.both[k];
                if (oa == Obs::present || ob == Obs::present) ++out.either[k];
            }
        }
    }
    return out;
}

namespace {

struct PackedColumns {
    std::size_t words = 0;
    std::vector<std::uint64_t> observed;  // column-major: a * words + w
    std::vector<std::uint64_t> present;
};

PackedColumns pack(const BinaryMatrix& x) {
    PackedColumns pc;
    pc.words = (x.rows() + 63) / 64;
    pc.observed.assign(pc.words * x.cols(), 0);
    pc.present.assign(pc.words * x.cols(), 0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const std::uint64_t bit = std::uint64_t{1} << (i % 64);
        const std::size_t w = i / 64;
        for (std::size_t a = 0; a < x.cols(); ++a) {
            const Obs o = x(i, a);
            if (o == Obs::missing) continue;
            pc.observed[a * pc.words + w] |= bit;
            if (o == Obs::present) pc.present[a * pc.words + w] |= bit;
        }
    }
    return pc;
}

}  // namespace

PairCounts pair_counts_parallel(const BinaryMatrix& x) {
    const std::size_t p = x.cols();
    PairCounts out{p, std::vector<std::uint64_t>(p * p), std::vector<std::uint64_t>(p * p),
                   std::vector<std::uint64_t>(p * p)};
    const PackedColumns pc = pack(x);
    const auto n_pairs = static_cast<std::int64_t>(p * p);

#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < n_pairs; ++k) {
        const std::size_t a = static_cast<std::size_t>(k) / p;
        const std::size_t b = static_cast<std::size_t>(k) % p;
        if (b < a) continue;
        const std::uint64_t* oa = &pc.observed[a * pc.words];
        const std::uint64_t* ob = &pc.observed[b * pc.words];
        const std::uint64_t* pa = &pc.present[a * pc.words];
        const std::uint64_t* pb = &pc.present[b * pc.words];
        std::uint64_t both = 0, either = 0, support = 0;
        for (std::size_t w = 0; w < pc.words; ++w) {
            const std::uint64_t joint = oa[w] & ob[w];
            support += static_cast<std::uint64_t>(std::popcount(joint));
            both += static_cast<std::uint64_t>(std::popcount(joint & pa[w] & pb[w]));
            either += static_cast<std::uint64_t>(std::popcount(joint & (pa[w] | pb[w])));
        }
        out.both[a * p + b] = out.both[b * p + a] = both;
        out.either[a * p + b] = out.either[b * p + a] = either;
        out.support[a * p + b] = out.support[b * p + a] = support;
    }
    return out;
}

PairCounts pair_counts(const BinaryMatrix& x, Backend backend) {
    return backend == Backend::serial ? pair_counts_serial(x) : pair_counts_parallel(x);
}

WeightedRows compress_rows(const BinaryMatrix& x, std::vector<std::size_t>* row_pattern) {
    const std::size_t p = x.cols();
    std::unordered_map<std::string, std::size_t> index;
    std::vector<std::size_t> first_row;
    std::vector<double> counts;
    if (row_pattern) row_pattern->assign(x.rows(), 0);

    std::string key(p, '\0');
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto r = x.row(i);
        for (std::size_t a = 0; a < p; ++a) key[a] = static_cast<char>(r[a]);
        auto [it, inserted] = index.try_emplace(key, first_row.size());
        if (inserted) {
            first_row.push_back(i);
            counts.push_back(0.0);
        }
        counts[it->second] += 1.0;
        if (row_pattern) (*row_pattern)[i] = it->second;
    }

    const auto u = static_cast<Eigen::Index>(first_row.size());
    const auto cols = static_cast<Eigen::Index>(p);
    WeightedRows out{Eigen::MatrixXd::Zero(u, cols), Eigen::MatrixXd::Zero(u, cols),
                     Eigen::MatrixXd::Zero(u, cols), Eigen::VectorXd(u)};
    for (Eigen::Index r = 0; r < u; ++r) {
        out.count(r) = counts[static_cast<std::size_t>(r)];
        auto row = x.row(first_row[static_cast<std::size_t>(r)]);
        for (Eigen::Index a = 0; a < cols; ++a) {
            const Obs o = row[static_cast<std::size_t>(a)];
            if (o == Obs::missing) continue;
            out.w(r, a) = 1.0;
            out.x(r, a) = o == Obs::present ? 1.0 : 0.0;
            out.q(r, a) = o == Obs::present ? 1.0 : -1.0;
        }
    }
    return out;
}

double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

double sigmoid(double t) {
    if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

namespace {

// Deviance over rows [begin, end), column-major traversal.
double majorize_rows(const WeightedRows& d, const Eigen::MatrixXd& theta, Eigen::MatrixXd* z, Eigen::Index begin,
                     Eigen::Index end) {
    double total = 0.0;
    for (Eigen::Index a = 0; a < theta.cols(); ++a) {
        for (Eigen::Index r = begin; r < end; ++r) {
            const double t = theta(r, a);
            if (d.w(r, a) == 0.0) {
                if (z) (*z)(r, a) = t;
                continue;
            }
            const double x = d.x(r, a);
            // One exponential serves both the softplus and the sigmoid.
            const double e = std::exp(-std::abs(t));
            const double s = x > 0.5 ? -t : t;
            total += d.count(r) * 2.0 * (std::max(s, 0.0) + std::log1p(e));
            if (z) (*z)(r, a) = t + 4.0 * (x - (t >= 0 ? 1.0 : e) / (1.0 + e));
        }
    }
    return total;
}

void check_shapes(const WeightedRows& d, const Eigen::MatrixXd& theta) {
    if (theta.rows() != d.patterns() || theta.cols() != d.cols()) {
        throw std::invalid_argument("natural-parameter matrix does not match the data shape");
    }
}

}  // namespace

double majorize_serial(const WeightedRows& data, const Eigen::MatrixXd& theta, Eigen::MatrixXd* z) {
    check_shapes(data, theta);
    if (z) z->resize(theta.rows(), theta.cols());
    return majorize_rows(data, theta, z, 0, theta.rows());
}

double majorize_parallel(const WeightedRows& data, const Eigen::MatrixXd& theta, Eigen::MatrixXd* z) {
    check_shapes(data, theta);
    if (z) z->resize(theta.rows(), theta.cols());
    const Eigen::Index n = theta.rows();
    const Eigen::Index blocks = (n + kBlockRows - 1) / kBlockRows;
    std::vector<double> partial(static_cast<std::size_t>(blocks), 0.0);

#pragma omp parallel for schedule(static) if (blocks > 1)
    for (Eigen::Index b = 0; b < blocks; ++b) {
        const Eigen::Index begin = b * kBlockRows;
        const Eigen::Index end = std::min(n, begin + kBlockRows);
        partial[static_cast<std::size_t>(b)] = majorize_rows(data, theta, z, begin, end);
    }
    double total = 0.0;
    for (double v : partial) total += v;
    return total;
}

double majorize(const WeightedRows& data, const Eigen::MatrixXd& theta, Eigen::MatrixXd* z, Backend backend) {
    return backend == Backend::serial ? majorize_serial(data, theta, z) : majorize_parallel(data, theta, z);
}

Eigen::MatrixXd weighted_crossprod_serial(const Eigen::MatrixXd& a, const Eigen::VectorXd& c,
                                          const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.cols(), b.cols());
    for (Eigen::Index i = 0; i < a.cols(); ++i) {
        for (Eigen::Index j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (Eigen::Index r = 0; r < a.rows(); ++r) s += a(r, i) * c(r) * b(r, j);
            out(i, j) = s;
        }
    }
    return out;
}

Eigen::MatrixXd weighted_crossprod_parallel(const Eigen::MatrixXd& a, const Eigen::VectorXd& c,
                                            const Eigen::MatrixXd& b) {
    const Eigen::Index n = a.rows();
    const Eigen::Index blocks = (n + kBlockRows - 1) / kBlockRows;
    std::vector<Eigen::MatrixXd> partial(static_cast<std::size_t>(blocks));

#pragma omp parallel for schedule(static) if (blocks > 1)
    for (Eigen::Index blk = 0; blk < blocks; ++blk) {
        const Eigen::Index begin = blk * kBlockRows;
        const Eigen::Index len = std::min(n, begin + kBlockRows) - begin;
        partial[static_cast<std::size_t>(blk)].noalias() =
            a.middleRows(begin, len).transpose() * (c.segment(begin, len).asDiagonal() * b.middleRows(begin, len));
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.cols(), b.cols());
    for (const auto& m : partial) out += m;
    return out;
}

Eigen::MatrixXd weighted_crossprod(const Eigen::MatrixXd& a, const Eigen::VectorXd& c, const Eigen::MatrixXd& b,
                                   Backend backend) {
    return backend == Backend::serial ? weighted_crossprod_serial(a, c, b) : weighted_crossprod_parallel(a, c, b);
}

}  // namespace symco::kernels
