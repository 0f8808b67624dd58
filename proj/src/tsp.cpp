#include "roomnav/tsp.hpp"

#include <algorithm>

namespace roomnav {

double open_tour_cost(const Eigen::MatrixXd& d, int start, const std::vector<int>& order) {
    double cost = 0.0;
    int prev = start;
    for (int s : order) {
        cost += d(prev, s);
        prev = s;
    }
    return cost;
}

Tour nearest_neighbor_tour(const Eigen::MatrixXd& d, int start, const std::vector<int>& sites, int first) {
    Tour tour;
    std::vector<int> left = sites;
    int cur = start;
    if (first >= 0) {
        auto it = std::find(left.begin(), left.end(), first);
        if (it != left.end()) {
            tour.order.push_back(first);
            left.erase(it);
            cur = first;
        }
    }
    while (!left.empty()) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < left.size(); ++k)
            if (d(cur, left[k]) < d(cur, left[best])) best = k;
        cur = left[best];
        tour.order.push_back(cur);
        left.erase(left.begin() + static_cast<std::ptrdiff_t>(best));
    }
    tour.cost = open_tour_cost(d, start, tour.order);
    return tour;
}

namespace {

/// Gain of reversing order[i..j] (positive = shorter).
double reversal_gain(const Eigen::MatrixXd& d, int start, const std::vector<int>& o, std::size_t i, std::size_t j) {
    const int before = i == 0 ? start : o[i - 1];
    double removed = d(before, o[i]);
    double added = d(before, o[j]);
    if (j + 1 < o.size()) {
        removed += d(o[j], o[j + 1]);
        added += d(o[i], o[j + 1]);
    }
    return removed - added;
}

}  // namespace

void two_opt(const Eigen::MatrixXd& d, int start, Tour& tour) {
    auto& o = tour.order;
    bool improved = true;
    while (improved) {
        improved = false;
        for (std::size_t i = 0; i + 1 < o.size(); ++i)
            for (std::size_t j = i + 1; j < o.size(); ++j)
                if (reversal_gain(d, start, o, i, j) > 1e-12) {
                    std::reverse(o.begin() + static_cast<std::ptrdiff_t>(i), o.begin() + static_cast<std::ptrdiff_t>(j) + 1);
                    improved = true;
                }
    }
    tour.cost = open_tour_cost(d, start, o);
}

bool has_improving_two_swap(const Eigen::MatrixXd& d, int start, const std::vector<int>& order, double tol) {
    for (std::size_t i = 0; i + 1 < order.size(); ++i)
        for (std::size_t j = i + 1; j < order.size(); ++j)
            if (reversal_gain(d, start, order, i, j) > tol) return true;
    return false;
}

Tour solve_open_tour(const Eigen::MatrixXd& d, int start, const std::vector<int>& sites, int restarts,
                     std::uint64_t seed) {
    Tour best;
    best.cost = kInf;
    if (sites.empty()) {
        best.cost = 0.0;
        return best;
    }
    const int n = static_cast<int>(sites.size());
    for (int k = 0; k < std::max(1, restarts); ++k) {
        Tour t;
        if (k == 0) {
            t = nearest_neighbor_tour(d, start, sites);
        } else if (k <= n) {
            t = nearest_neighbor_tour(d, start, sites, sites[static_cast<std::size_t>(k - 1)]);
        } else {
            Rng rng = make_rng(seed, static_cast<std::uint64_t>(k));
            t.order = sites;
            for (int i = n - 1; i > 0; --i) std::swap(t.order[static_cast<std::size_t>(i)], t.order[static_cast<std::size_t>(uniform_int(rng, 0, i))]);
        }
        two_opt(d, start, t);
        if (t.cost < best.cost - 1e-12) best = std::move(t);
    }
    return best;
}

Tour brute_force_open_tour(const Eigen::MatrixXd& d, int start, const std::vector<int>& sites) {
    std::vector<int> perm = sites;
    std::sort(perm.begin(), perm.end());
    Tour best;
    best.cost = kInf;
    do {
        const double c = open_tour_cost(d, start, perm);
        if (c < best.cost) {
            best.cost = c;
            best.order = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace roomnav
