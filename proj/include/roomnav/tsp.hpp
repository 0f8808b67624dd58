#pragma once

#include "roomnav/core.hpp"

#include <Eigen/Core>

#include <vector>

namespace roomnav {

/// Open tour over node indices of a symmetric distance matrix, starting at a
/// fixed node that is not part of `order`.
struct Tour {
    std::vector<int> order;
    double cost = 0.0;
};

double open_tour_cost(const Eigen::MatrixXd& d, int start, const std::vector<int>& order);

/// Greedy nearest neighbour. `first` forces the first hop when >= 0.
Tour nearest_neighbor_tour(const Eigen::MatrixXd& d, int start, const std::vector<int>& sites, int first = -1);

/// Segment-reversal local search until no reversal improves by more than 1e-12.
void two_opt(const Eigen::MatrixXd& d, int start, Tour& tour);

/// True if some segment reversal shortens the tour by more than `tol`.
bool has_improving_two_swap(const Eigen::MatrixXd& d, int start, const std::vector<int>& order, double tol = 1e-9);

/// Restart 0 is plain nearest neighbour, restarts 1..n force each possible first
/// hop, later restarts start from random permutations. Every restart is followed
/// by 2-opt and the cheapest tour wins (ties to the earliest restart).
Tour solve_open_tour(const Eigen::MatrixXd& d, int start, const std::vector<int>& sites, int restarts,
                     std::uint64_t seed);

/// Exhaustive optimum, for small instances.
Tour brute_force_open_tour(const Eigen::MatrixXd& d, int start, const std::vector<int>& sites);

}  // namespace roomnav
