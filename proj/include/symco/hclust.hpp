#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "symco/distance.hpp"

namespace symco {

/// One agglomeration step. Node ids: leaves are 0..p-1, the merge at step s
/// creates node p+s. `left` is the child whose smallest leaf index is lower.
struct Merge {
    std::size_t left = 0;
    std::size_t right = 0;
    double height = 0.0;
    std::size_t size = 0;  ///< leaves under the new node
};

class Dendrogram {
public:
    Dendrogram(std::vector<std::string> leaves, std::vector<Merge> merges);

    std::size_t n_leaves() const { return leaves_.size(); }
    const std::vector<std::string>& leaves() const { return leaves_; }
    const std::vector<Merge>& merges() const { return merges_; }
    std::size_t root() const { return 2 * n_leaves() - 2; }
    bool is_leaf(std::size_t node) const { return node < n_leaves(); }
    /// Height of a node; 0 for leaves.
    double height(std::size_t node) const;
    /// Leaf indices under a node, in left-to-right order.
    std::vector<std::size_t> members(std::size_t node) const;

private:
    std::vector<std::string> leaves_;
    std::vector<Merge> merges_;
};

/// Naive O(p^3) complete-linkage agglomeration. Among pairs at the minimal
/// linkage distance the pair with the lowest (smaller node id, larger node id)
/// merges first.
Dendrogram complete_linkage(const DistanceMatrix& d);

struct Partition {
    std::vector<std::vector<std::size_t>> clusters;  ///< ordered by smallest member
    std::vector<std::size_t> assignment;             ///< leaf -> cluster index
};

/// Connected components after removing merges strictly above `height`.
Partition cut(const Dendrogram& d, double height);

/// In-order traversal, left child first.
std::vector<std::size_t> leaf_order(const Dendrogram& d);

/// Newick with branch lengths equal to height differences.
std::string to_newick(const Dendrogram& d);

}  // namespace symco
