#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "common.hpp"
#include "mesh.hpp"

namespace rct {

struct DirichletSet {
    std::vector<std::pair<int, double>> entries;  // (node id, potential V)
};

struct StiffnessSystem {
    Eigen::SparseMatrix<double> matrix;  // full symmetric operator, no BCs applied
};

struct FieldSolution {
    Eigen::VectorXd phi;      // nodal potentials, V
    double residual = 0.0;    // relative backward residual of the reduced solve
};

namespace detail {

// Element stiffness of a trilinear hexahedron, 2x2x2 Gauss (exact for
// axis-aligned boxes).
inline Eigen::Matrix<double, 8, 8> hex_stiffness(const Mesh& mesh, int e) {
    static const double gp = 1.0 / std::sqrt(3.0);
    const auto& h = mesh.hexes[static_cast<std::size_t>(e)];
    Eigen::Matrix<double, 8, 3> coords;
    for (int i = 0; i < 8; ++i)
        for (int k = 0; k < 3; ++k) coords(i, k) = mesh.nodes[static_cast<std::size_t>(h[static_cast<std::size_t>(i)])][static_cast<std::size_t>(k)];

    static const int sign[8][3] = {{-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1},
                                   {-1, -1, 1},  {1, -1, 1},  {1, 1, 1},  {-1, 1, 1}};
    Eigen::Matrix<double, 8, 8> ke = Eigen::Matrix<double, 8, 8>::Zero();
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            for (int c = 0; c < 2; ++c) {
                double xi = (a ? gp : -gp), eta = (b ? gp : -gp), zeta = (c ? gp : -gp);
                Eigen::Matrix<double, 8, 3> dref;  // dN/d(xi,eta,zeta)
                for (int i = 0; i < 8; ++i) {
                    double sx = sign[i][0], sy = sign[i][1], sz = sign[i][2];
                    dref(i, 0) = 0.125 * sx * (1 + sy * eta) * (1 + sz * zeta);
                    dref(i, 1) = 0.125 * sy * (1 + sx * xi) * (1 + sz * zeta);
                    dref(i, 2) = 0.125 * sz * (1 + sx * xi) * (1 + sy * eta);
                }
                Eigen::Matrix3d jac = dref.transpose() * coords;
                double det = jac.determinant();
                if (!(det > 0.0))
                    throw_numerical("degenerate element " + std::to_string(e) +
                                    " (non-positive Jacobian " + fmt9(det) + ")");
                Eigen::Matrix<double, 8, 3> dphys = dref * jac.inverse().transpose();
                ke += det * (dphys * dphys.transpose());
            }
        }
    }
    return ke * mesh.sigma[static_cast<std::size_t>(e)];
}

inline Eigen::Matrix3d tri_stiffness(const Mesh& mesh, int e) {
    double area = mesh.tri_area(e);
    if (!(area > 1e-14))
        throw_numerical("degenerate element " + std::to_string(e) + " (area " + fmt9(area) + ")");
    const auto& t = mesh.tris[static_cast<std::size_t>(e)];
    const auto& p0 = mesh.nodes[static_cast<std::size_t>(t[0])];
    const auto& p1 = mesh.nodes[static_cast<std::size_t>(t[1])];
    const auto& p2 = mesh.nodes[static_cast<std::size_t>(t[2])];
    // Barycentric gradients.
    double b[3] = {p1[1] - p2[1], p2[1] - p0[1], p0[1] - p1[1]};
    double c[3] = {p2[0] - p1[0], p0[0] - p2[0], p1[0] - p0[0]};
    Eigen::Matrix3d ke;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) ke(i, j) = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
    return ke * mesh.sigma[static_cast<std::size_t>(e)];
}

}  // namespace detail

// Assembles the conductance operator for div(sigma grad phi) = 0. The raw
// matrix is singular (constants in the nullspace); boundary conditions are
// applied by ReducedSystem.
inline StiffnessSystem assemble(const Mesh& mesh) {
    std::vector<Eigen::Triplet<double>> trips;
    if (mesh.flavor == MeshFlavor::shell2d) {
        trips.reserve(mesh.tris.size() * 9);
        for (int e = 0; e < mesh.element_count(); ++e) {
            auto ke = detail::tri_stiffness(mesh, e);
            const auto& t = mesh.tris[static_cast<std::size_t>(e)];
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    trips.emplace_back(t[static_cast<std::size_t>(i)], t[static_cast<std::size_t>(j)], ke(i, j));
        }
    } else {
        trips.reserve(mesh.hexes.size() * 64);
        for (int e = 0; e < mesh.element_count(); ++e) {
            auto ke = detail::hex_stiffness(mesh, e);
            const auto& h = mesh.hexes[static_cast<std::size_t>(e)];
            for (int i = 0; i < 8; ++i)
                for (int j = 0; j < 8; ++j)
                    trips.emplace_back(h[static_cast<std::size_t>(i)], h[static_cast<std::size_t>(j)], ke(i, j));
        }
    }
    StiffnessSystem sys;
    sys.matrix.resize(mesh.node_count(), mesh.node_count());
    sys.matrix.setFromTriplets(trips.begin(), trips.end());
    return sys;
}

// Dirichlet elimination that keeps the reduced block symmetric positive
// definite; the factorization is reusable across right-hand sides, which is
// what the grounding cycle and the Jacobian build lean on.
class ReducedSystem {
public:
    ReducedSystem(const StiffnessSystem& sys, std::vector<int> constrained_nodes)
        : constrained_(std::move(constrained_nodes)) {
        const auto& K = sys.matrix;
        int n = static_cast<int>(K.rows());
        std::sort(constrained_.begin(), constrained_.end());
        constrained_.erase(std::unique(constrained_.begin(), constrained_.end()), constrained_.end());
        if (constrained_.empty()) throw_contract("Dirichlet set must contain at least one node");
        if (constrained_.front() < 0 || constrained_.back() >= n)
            throw_contract("Dirichlet node id out of range");

        free_of_full_.assign(static_cast<std::size_t>(n), -1);
        cons_of_full_.assign(static_cast<std::size_t>(n), -1);
        for (std::size_t i = 0; i < constrained_.size(); ++i)
            cons_of_full_[static_cast<std::size_t>(constrained_[i])] = static_cast<int>(i);
        int nf = 0;
        for (int i = 0; i < n; ++i)
            if (cons_of_full_[static_cast<std::size_t>(i)] < 0) free_of_full_[static_cast<std::size_t>(i)] = nf++;
        n_free_ = nf;
        full_of_free_.resize(static_cast<std::size_t>(nf));
        for (int i = 0; i < n; ++i)
            if (free_of_full_[static_cast<std::size_t>(i)] >= 0)
                full_of_free_[static_cast<std::size_t>(free_of_full_[static_cast<std::size_t>(i)])] = i;

        std::vector<Eigen::Triplet<double>> ff, fc;
        for (int col = 0; col < K.outerSize(); ++col) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(K, col); it; ++it) {
                int fi = free_of_full_[static_cast<std::size_t>(it.row())];
                if (fi < 0) continue;
                int fj = free_of_full_[static_cast<std::size_t>(it.col())];
                if (fj >= 0)
                    ff.emplace_back(fi, fj, it.value());
                else
                    fc.emplace_back(fi, cons_of_full_[static_cast<std::size_t>(it.col())], it.value());
            }
        }
        k_ff_.resize(nf, nf);
        k_ff_.setFromTriplets(ff.begin(), ff.end());
        k_fc_.resize(nf, static_cast<int>(constrained_.size()));
        k_fc_.setFromTriplets(fc.begin(), fc.end());

        if (nf > 0) {
            solver_.compute(k_ff_);
            if (solver_.info() != Eigen::Success)
                throw_numerical("reduced system factorization failed (" + std::to_string(nf) +
                                " free nodes); the system is singular or indefinite");
        }
    }

    const std::vector<int>& constrained_nodes() const { return constrained_; }
    int free_count() const { return n_free_; }

    // Solve with per-constrained-node values (aligned with constrained_nodes())
    // and an optional full-length source vector.
    FieldSolution solve(const std::vector<double>& values,
                        const Eigen::VectorXd* source = nullptr) const {
        if (values.size() != constrained_.size())
            throw_contract("Dirichlet value count does not match the constrained set");
        Eigen::VectorXd uc = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
        Eigen::VectorXd rhs = -(k_fc_ * uc);
        if (source) {
            for (int f = 0; f < n_free_; ++f)
                rhs[f] += (*source)[full_of_free_[static_cast<std::size_t>(f)]];
        }

        FieldSolution out;
        out.phi.resize(static_cast<Eigen::Index>(free_of_full_.size()));
        Eigen::VectorXd uf;
        if (n_free_ > 0) {
            uf = solver_.solve(rhs);
            if (solver_.info() != Eigen::Success || !uf.allFinite())
                throw_numerical("reduced solve failed; singular system (free nodes " +
                                std::to_string(n_free_) + ")");
            double rhs_norm = rhs.norm();
            double res = (k_ff_ * uf - rhs).norm();
            out.residual = res / std::max(rhs_norm, 1e-300);
            if (rhs_norm > 0.0 && out.residual > 1e-10)
                throw_numerical("reduced solve residual " + fmt9(out.residual) +
                                " exceeds tolerance 1e-10");
        }
        for (std::size_t i = 0; i < constrained_.size(); ++i)
            out.phi[constrained_[i]] = uc[static_cast<Eigen::Index>(i)];
        for (int f = 0; f < n_free_; ++f) out.phi[full_of_free_[static_cast<std::size_t>(f)]] = uf[f];
        return out;
    }

    // Pure interior-source solve with all constrained values at zero.
    FieldSolution solve_source(const Eigen::VectorXd& source) const {
        return solve(std::vector<double>(constrained_.size(), 0.0), &source);
    }

private:
    std::vector<int> constrained_;
    std::vector<int> free_of_full_, cons_of_full_, full_of_free_;
    int n_free_ = 0;
    Eigen::SparseMatrix<double> k_ff_, k_fc_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
};

// Source-free Dirichlet solve with the discrete maximum principle asserted:
// on these structured meshes every potential must sit inside the range of the
// boundary values.
inline FieldSolution solve(const StiffnessSystem& sys, const DirichletSet& bc) {
    if (bc.entries.empty()) throw_contract("Dirichlet set must be non-empty");
    std::vector<int> nodes;
    nodes.reserve(bc.entries.size());
    for (const auto& [n, v] : bc.entries) nodes.push_back(n);
    {
        std::vector<int> check = nodes;
        std::sort(check.begin(), check.end());
        if (std::adjacent_find(check.begin(), check.end()) != check.end())
            throw_contract("Dirichlet node ids must be unique");
    }
    ReducedSystem reduced(sys, nodes);
    std::vector<double> values(reduced.constrained_nodes().size());
    for (const auto& [n, v] : bc.entries) {
        auto it = std::lower_bound(reduced.constrained_nodes().begin(), reduced.constrained_nodes().end(), n);
        values[static_cast<std::size_t>(it - reduced.constrained_nodes().begin())] = v;
    }
    FieldSolution sol = reduced.solve(values);

    double lo = 1e300, hi = -1e300;
    for (const auto& [n, v] : bc.entries) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    double tol = 1e-9 * std::max({1.0, std::abs(lo), std::abs(hi)});
    double mn = sol.phi.minCoeff(), mx = sol.phi.maxCoeff();
    if (mn < lo - tol || mx > hi + tol)
        throw_numerical("discrete maximum principle violated: potentials [" + fmt9(mn) + ", " +
                        fmt9(mx) + "] vs boundary [" + fmt9(lo) + ", " + fmt9(hi) + "]");
    return sol;
}

// Total current and peak density crossing a tagged element layer, in SI units
// (the mesh is in mm). Current counts positive downward (+z toward -z).
inline std::pair<double, double> interface_current(const Mesh& mesh, const Eigen::VectorXd& phi,
                                                   const std::vector<int>& layer) {
    if (mesh.flavor != MeshFlavor::volume3d) throw_contract("interface_current needs a volume mesh");
    if (layer.empty()) throw_contract("interface_current: empty element layer");
    double total = 0.0, peak = 0.0;
    for (int e : layer) {
        const auto& h = mesh.hexes[static_cast<std::size_t>(e)];
        double bottom = 0.0, top = 0.0;
        for (int k = 0; k < 4; ++k) bottom += phi[h[static_cast<std::size_t>(k)]] / 4.0;
        for (int k = 4; k < 8; ++k) top += phi[h[static_cast<std::size_t>(k)]] / 4.0;
        const auto& a = mesh.nodes[static_cast<std::size_t>(h[0])];
        const auto& g = mesh.nodes[static_cast<std::size_t>(h[6])];
        double area_m2 = (g[0] - a[0]) * (g[1] - a[1]) * 1e-6;
        double height_m = (g[2] - a[2]) * 1e-3;
        double density = mesh.sigma[static_cast<std::size_t>(e)] * (top - bottom) / height_m;  // A/m^2
        total += density * area_m2;
        peak = std::max(peak, std::abs(density));
    }
    return {total, peak};
}

// Debug CSV of nodal potentials.
inline void dump_solution_csv(const Mesh& mesh, const Eigen::VectorXd& phi, std::ostream& os) {
    for (int n = 0; n < mesh.node_count(); ++n) {
        const auto& p = mesh.nodes[static_cast<std::size_t>(n)];
        os << n << ',' << fmt9(p[0]) << ',' << fmt9(p[1]) << ',' << fmt9(p[2]) << ',' << fmt9(phi[n])
           << '\n';
    }
}

}  // namespace rct
