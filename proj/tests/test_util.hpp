#pragma once

// Shared fixtures for the unit suites: small meshes that keep FEM solves
// fast while still covering every electrode with the 4 mm default discs
// (node spacing must stay below ~2.8 mm for that, hence 15 divisions).

#include <array>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "rct/rct.hpp"

namespace testutil {

inline rct::ElectrodeLayout default_layout() { return {4, 4.0, 15.0}; }

// 60x60x10 volume at 4 mm spacing: every electrode covers exactly one node.
inline rct::Mesh small_volume(double sigma_low = 1.0, double sigma_up = 1.0) {
    rct::GradientSpec grad{sigma_low, sigma_up, 0.0, 0.0};
    return rct::build_volume_mesh(60.0, 60.0, 10.0, {15, 15, 3}, grad, default_layout());
}

// Paper-scale 60x60x10 volume (2 mm cubes).
inline rct::Mesh paper_volume(double sigma_low = 1.0, double sigma_up = 1.0) {
    rct::GradientSpec grad{sigma_low, sigma_up, 0.0, 0.0};
    return rct::build_volume_mesh(60.0, 60.0, 10.0, {30, 30, 5}, grad, default_layout());
}

// Coarse shell for Jacobian oracles; 6 mm spacing needs 6 mm electrode discs.
inline rct::Mesh oracle_shell(int divisions = 10) {
    rct::ElectrodeLayout layout{4, 6.0, 15.0};
    return rct::build_shell_mesh(60.0, 60.0, divisions, layout, 1.0);
}

inline rct::Mesh small_shell(int divisions = 15) {
    return rct::build_shell_mesh(60.0, 60.0, divisions, default_layout(), 1.0);
}

// The eight symmetries of the square acting on plane coordinates.
inline std::vector<std::function<std::pair<double, double>(double, double)>> dihedral_ops() {
    return {
        [](double x, double y) { return std::make_pair(x, y); },
        [](double x, double y) { return std::make_pair(-x, y); },
        [](double x, double y) { return std::make_pair(x, -y); },
        [](double x, double y) { return std::make_pair(-x, -y); },
        [](double x, double y) { return std::make_pair(y, x); },
        [](double x, double y) { return std::make_pair(-y, x); },
        [](double x, double y) { return std::make_pair(y, -x); },
        [](double x, double y) { return std::make_pair(-y, -x); },
    };
}

// Electrode relabeling induced by a plane symmetry.
inline std::vector<int> electrode_permutation(
    const rct::ElectrodeLayout& layout,
    const std::function<std::pair<double, double>(double, double)>& op) {
    auto centers = rct::electrode_centers(layout);
    std::vector<int> perm(centers.size(), -1);
    for (std::size_t e = 0; e < centers.size(); ++e) {
        auto [tx, ty] = op(centers[e][0], centers[e][1]);
        for (std::size_t f = 0; f < centers.size(); ++f) {
            if (std::abs(centers[f][0] - tx) < 1e-9 && std::abs(centers[f][1] - ty) < 1e-9) {
                perm[e] = static_cast<int>(f);
                break;
            }
        }
    }
    return perm;
}

}  // namespace testutil
