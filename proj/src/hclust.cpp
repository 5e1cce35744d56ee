#include "symco/hclust.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace symco {

Dendrogram::Dendrogram(std::vector<std::string> leaves, std::vector<Merge> merges)
    : leaves_(std::move(leaves)), merges_(std::move(merges)) {
    const std::size_t p = leaves_.size();
    if (p < 2 || merges_.size() != p - 1) throw std::invalid_argument("dendrogram needs p >= 2 leaves and p-1 merges");
    std::vector<int> used(2 * p - 1, 0);
    for (std::size_t s = 0; s < merges_.size(); ++s) {
        const auto& m = merges_[s];
        if (m.left >= p + s || m.right >= p + s || m.left == m.right) {
            throw std::invalid_argument("merge " + std::to_string(s) + " refers to a node that does not exist yet");
        }
        if (used[m.left]++ || used[m.right]++) {
            throw std::invalid_argument("node merged twice at step " + std::to_string(s));
        }
    }
}

double Dendrogram::height(std::size_t node) const {
    return is_leaf(node) ? 0.0 : merges_.at(node - n_leaves()).height;
}

std::vector<std::size_t> Dendrogram::members(std::size_t node) const {
    std::vector<std::size_t> out;
    std::vector<std::size_t> stack{node};
    while (!stack.empty()) {
        const auto v = stack.back();
        stack.pop_back();
        if (is_leaf(v)) {
            out.push_back(v);
            continue;
        }
        const auto& m = merges_[v - n_leaves()];
        stack.push_back(m.right);
        stack.push_back(m.left);
    }
    return out;
}

Dendrogram complete_linkage(const DistanceMatrix& d) {
    const std::size_t p = d.size();
    if (p < 2) throw std::invalid_argument("complete_linkage needs at least two items");
    if (!d.fully_defined()) throw std::domain_error("complete_linkage: distance matrix has undefined entries");

    // Active clusters, their node ids and smallest leaf. `link` holds the
    // current complete-linkage distance between active clusters (indexed by slot).
    std::vector<std::size_t> node(p), min_leaf(p), size(p, 1);
    std::iota(node.begin(), node.end(), 0);
    std::iota(min_leaf.begin(), min_leaf.end(), 0);
    std::vector<bool> active(p, true);
    std::vector<double> link(p * p);
    for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t b = 0; b < p; ++b) link[a * p + b] = d.value(a, b);
    }

    std::vector<Merge> merges;
    merges.reserve(p - 1);
    for (std::size_t step = 0; step + 1 < p; ++step) {
        std::size_t best_a = p, best_b = p;
        double best = std::numeric_limits<double>::infinity();
        auto key = [&](std::size_t a, std::size_t b) {
            return std::pair{std::min(node[a], node[b]), std::max(node[a], node[b])};
        };
        for (std::size_t a = 0; a < p; ++a) {
            if (!active[a]) continue;
            for (std::size_t b = a + 1; b < p; ++b) {
                if (!active[b]) continue;
                const double v = link[a * p + b];
                if (best_a == p || v < best || (v == best && key(a, b) < key(best_a, best_b))) {
                    best = v;
                    best_a = a;
                    best_b = b;
                }
            }
        }

        const bool a_first = min_leaf[best_a] < min_leaf[best_b];
        const std::size_t l = a_first ? best_a : best_b;
        const std::size_t r = a_first ? best_b : best_a;
        merges.push_back({node[l], node[r], best, size[l] + size[r]});

        // Reuse slot best_a for the merged cluster.
        for (std::size_t c = 0; c < p; ++c) {
            if (!active[c] || c == best_a || c == best_b) continue;
            const double v = std::max(link[best_a * p + c], link[best_b * p + c]);
            link[best_a * p + c] = link[c * p + best_a] = v;
        }
        active[best_b] = false;
        node[best_a] = p + step;
        min_leaf[best_a] = std::min(min_leaf[best_a], min_leaf[best_b]);
        size[best_a] += size[best_b];
    }
    return Dendrogram(d.labels(), std::move(merges));
}

Partition cut(const Dendrogram& d, double height) {
    if (height < 0 || std::isnan(height)) throw std::invalid_argument("cut height must be non-negative");
    const std::size_t p = d.n_leaves();
    std::vector<std::size_t> parent(2 * p - 1);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t v) {
        while (parent[v] != v) v = parent[v] = parent[parent[v]];
        return v;
    };
    for (std::size_t s = 0; s < d.merges().size(); ++s) {
        const auto& m = d.merges()[s];
        if (m.height > height) continue;
        parent[find(m.left)] = p + s;
        parent[find(m.right)] = p + s;
    }

    Partition out;
    out.assignment.assign(p, 0);
    std::vector<std::size_t> cluster_of_root(2 * p - 1, p);
    for (std::size_t leaf = 0; leaf < p; ++leaf) {
        const auto root = find(leaf);
        if (cluster_of_root[root] == p) {
            cluster_of_root[root] = out.clusters.size();
            out.clusters.emplace_back();
        }
        out.assignment[leaf] = cluster_of_root[root];
        out.clusters[cluster_of_root[root]].push_back(leaf);
    }
    return out;
}

std::vector<std::size_t> leaf_order(const Dendrogram& d) { return d.members(d.root()); }

namespace {

std::string newick_label(const std::string& s) {
    if (s.find_first_of(" ,:;()[]'") == std::string::npos) return s;
    std::string out = "'";
    for (char c : s) {
        out += c;
        if (c == '\'') out += '\'';
    }
    return out + "'";
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

void write_newick(const Dendrogram& d, std::size_t node, std::ostringstream& out) {
    if (d.is_leaf(node)) {
        out << newick_label(d.leaves()[node]);
        return;
    }
    const auto& m = d.merges()[node - d.n_leaves()];
    out << '(';
    write_newick(d, m.left, out);
    out << ':' << fmt(m.height - d.height(m.left)) << ',';
    write_newick(d, m.right, out);
    out << ':' << fmt(m.height - d.height(m.right)) << ')';
}

}  // namespace

std::string to_newick(const Dendrogram& d) {
    std::ostringstream out;
    write_newick(d, d.root(), out);
    out << ';';
    return out.str();
}

}  // namespace symco
