#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <queue>
#include <span>
#include <utility>
#include <vector>

namespace leakbench {

/// A (squared distance, index) pair. Ordering is lexicographic, so among
/// equidistant points the lowest index wins.
struct Neighbor {
    double distance2 = 0.0;
    std::size_t index = 0;

    friend bool operator<(const Neighbor& a, const Neighbor& b) {
        return a.distance2 < b.distance2 || (a.distance2 == b.distance2 && a.index < b.index);
    }
    bool operator==(const Neighbor&) const = default;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        d += diff * diff;
    }
    return d;
}

/// Exact k-nearest-neighbour index over a fixed row-major point set.
/// Small sets are scanned directly; larger ones use a kd-tree. Both paths
/// return identical results, including tie order.
class NeighborIndex {
public:
    NeighborIndex() = default;

    NeighborIndex(std::vector<double> points, std::size_t dims) : points_(std::move(points)), dims_(dims) {
        n_ = dims_ ? points_.size() / dims_ : 0;
        if (n_ > kBruteForceLimit && dims_ > 0) build();
    }

    std::size_t size() const { return n_; }
    std::size_t dims() const { return dims_; }
    std::span<const double> point(std::size_t i) const { return {points_.data() + i * dims_, dims_}; }

    /// The k nearest points to `query`, ascending. `exclude` (an index into
    /// the set) is skipped, which gives leave-self-out queries.
    std::vector<Neighbor> query(std::span<const double> query, std::size_t k,
                                std::size_t exclude = std::numeric_limits<std::size_t>::max()) const {
        std::vector<Neighbor> heap; // max-heap on Neighbor ordering
        heap.reserve(k + 1);
        if (k == 0 || n_ == 0) return heap;
        auto offer = [&](std::size_t i) {
            if (i == exclude) return;
            const Neighbor cand{squared_distance(query, point(i)), i};
            if (heap.size() < k) {
                heap.push_back(cand);
                std::push_heap(heap.begin(), heap.end());
            } else if (cand < heap.front()) {
                std::pop_heap(heap.begin(), heap.end());
                heap.back() = cand;
                std::push_heap(heap.begin(), heap.end());
            }
        };
        if (nodes_.empty()) {
            for (std::size_t i = 0; i < n_; ++i) offer(i);
        } else {
            search(0, query, k, heap, offer);
        }
        std::sort_heap(heap.begin(), heap.end());
        return heap;
    }

private:
    static constexpr std::size_t kBruteForceLimit = 64;
    static constexpr std::size_t kLeafSize = 16;

    struct Node {
        std::size_t begin = 0, end = 0; // range into order_
        std::size_t left = 0, right = 0; // child node ids; 0 = leaf
        std::size_t axis = 0;
        double split = 0.0;
    };

    void build() {
        order_.resize(n_);
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        nodes_.reserve(2 * n_ / kLeafSize + 2);
        build_node(0, n_);
    }

    std::size_t build_node(std::size_t begin, std::size_t end) {
        const std::size_t id = nodes_.size();
        nodes_.push_back({begin, end});
        if (end - begin <= kLeafSize) return id;
        // Split on the widest axis at the median.
        std::size_t axis = 0;
        double widest = -1.0;
        for (std::size_t d = 0; d < dims_; ++d) {
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (std::size_t i = begin; i < end; ++i) {
                const double v = points_[order_[i] * dims_ + d];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            if (hi - lo > widest) {
                widest = hi - lo;
                axis = d;
            }
        }
        if (widest <= 0.0) return id;
        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin), order_.begin() + static_cast<std::ptrdiff_t>(mid),
                         order_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t a, std::size_t b) {
                             return points_[a * dims_ + axis] < points_[b * dims_ + axis];
                         });
        const double split = points_[order_[mid] * dims_ + axis];
        const std::size_t left = build_node(begin, mid);
        const std::size_t right = build_node(mid, end);
        nodes_[id].left = left;
        nodes_[id].right = right;
        nodes_[id].axis = axis;
        nodes_[id].split = split;
        return id;
    }

    template <typename Offer>
    void search(std::size_t id, std::span<const double> query, std::size_t k, const std::vector<Neighbor>& heap,
                Offer& offer) const {
        const Node& node = nodes_[id];
        if (node.left == 0) {
            for (std::size_t i = node.begin; i < node.end; ++i) offer(order_[i]);
            return;
        }
        // Left child holds values <= split, right child values >= split.
        const double diff = query[node.axis] - node.split;
        const std::size_t near = diff <= 0.0 ? node.left : node.right;
        const std::size_t far = diff <= 0.0 ? node.right : node.left;
        search(near, query, k, heap, offer);
        // Equal distance may still win on index, so only strictly farther slabs are pruned.
        if (heap.size() < k || diff * diff <= heap.front().distance2) search(far, query, k, heap, offer);
    }

    std::vector<double> points_;
    std::size_t dims_ = 0;
    std::size_t n_ = 0;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
};

} // namespace leakbench
