#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "symco/umap.hpp"

namespace symco::umap::detail {

/// Edge-sampling SGD over one graph, advanced one epoch at a time so several
/// layouts can be stepped in lockstep.
class LayoutOptimizer {
public:
    LayoutOptimizer(const FuzzyGraph& g, const EmbedParams& params, Eigen::MatrixXd init);

    /// Runs epoch `n` and then decays the learning rate.
    void epoch(int n);
    double alpha() const { return alpha_; }
    int n_epochs() const { return n_epochs_; }
    Eigen::MatrixXd& coords() { return y_; }
    const Eigen::MatrixXd& coords() const { return y_; }

private:
    Curve curve_;
    double gamma_;
    double initial_alpha_;
    double alpha_;
    int n_epochs_;
    std::vector<std::size_t> head_, tail_;
    std::vector<double> per_sample_, next_sample_, per_negative_, next_negative_;
    std::mt19937_64 rng_;
    Eigen::MatrixXd y_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace symco::umap::detail
