#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "common.hpp"
#include "fem.hpp"
#include "mesh.hpp"
#include "protocol.hpp"

namespace rct {

// Dense sensitivity of the frame vector to per-element contact coupling on
// the thin-shell model. A coupling perturbation dk at element e injects a
// current dk * A_e * v_cc into the shell, split equally over the element's
// nodes, so column e holds the 256 electrode responses per unit coupling.
struct JacobianMatrix {
    int n_e = 0;
    Eigen::MatrixXd m;  // (n_e^2) x element_count, V per unit coupling
    double v_cc = 0.0;
    std::uint64_t shell_fp = 0;   // fingerprint of the shell mesh that built it
    std::uint64_t compat_fp = 0;  // shared-surface fingerprint (see protocol.hpp)

    int rows() const { return static_cast<int>(m.rows()); }
    int cols() const { return static_cast<int>(m.cols()); }
};

// Builds the Jacobian by reciprocity: per ground electrode one factorization
// and one adjoint solve per measuring electrode, then cheap dot products
// against each element's nodal injection weights.
inline JacobianMatrix build_jacobian(const Mesh& shell, double v_cc, int threads = 1,
                                     std::uint64_t compat_fp = 0) {
    if (shell.flavor != MeshFlavor::shell2d)
        throw_contract("build_jacobian: a thin-shell mesh is required");
    if (shell.electrodes.size() < 2) throw_contract("build_jacobian: electrodes missing");
    double smin = 1e300, smax = -1e300;
    for (double s : shell.sigma) {
        smin = std::min(smin, s);
        smax = std::max(smax, s);
    }
    if (smax - smin > 1e-12 * std::max(1.0, smax))
        throw_contract("build_jacobian: shell conductivity must be uniform (got range " +
                       fmt9(smin) + " .. " + fmt9(smax) + ")");

    int n_e = static_cast<int>(shell.electrodes.size());
    int n_el = shell.element_count();
    StiffnessSystem sys = assemble(shell);

    JacobianMatrix jac;
    jac.n_e = n_e;
    jac.v_cc = v_cc;
    jac.shell_fp = shell.fingerprint();
    jac.compat_fp = compat_fp;
    jac.m = Eigen::MatrixXd::Zero(n_e * n_e, n_el);

    parallel_for(n_e, threads, [&](int g) {
        ReducedSystem reduced(sys, shell.electrodes[static_cast<std::size_t>(g)]);
        for (int meas = 0; meas < n_e; ++meas) {
            if (meas == g) continue;  // grounded pad reads exactly zero
            const auto& pad = shell.electrodes[static_cast<std::size_t>(meas)];
            Eigen::VectorXd rhs = Eigen::VectorXd::Zero(shell.node_count());
            for (int n : pad) rhs[n] = 1.0 / static_cast<double>(pad.size());
            FieldSolution adj = reduced.solve_source(rhs);
            int row = g * n_e + meas;
            for (int e = 0; e < n_el; ++e) {
                const auto& t = shell.tris[static_cast<std::size_t>(e)];
                double w = adj.phi[t[0]] + adj.phi[t[1]] + adj.phi[t[2]];
                jac.m(row, e) = v_cc * shell.tri_area(e) * w / 3.0;
            }
        }
    });
    return jac;
}

// Frame predicted by the thin-shell model for a per-element coupling vector.
inline Eigen::VectorXd shell_forward_frame(const JacobianMatrix& jac, const Eigen::VectorXd& coupling) {
    if (coupling.size() != jac.m.cols()) throw_contract("coupling length does not match Jacobian");
    return jac.m * coupling;
}

// ---- binary dump ---------------------------------------------------------
// Layout: magic "RCTJAC1\n", u64 rows, u64 cols, u64 n_e, f64 v_cc,
// u64 shell fingerprint, u64 compat fingerprint, then row-major f64 entries
// (native little-endian).

inline void save_jacobian(const JacobianMatrix& jac, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw_config("cannot open " + path + " for writing");
    const char magic[8] = {'R', 'C', 'T', 'J', 'A', 'C', '1', '\n'};
    os.write(magic, 8);
    auto put_u64 = [&](std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); };
    auto put_f64 = [&](double v) { os.write(reinterpret_cast<const char*>(&v), 8); };
    put_u64(static_cast<std::uint64_t>(jac.rows()));
    put_u64(static_cast<std::uint64_t>(jac.cols()));
    put_u64(static_cast<std::uint64_t>(jac.n_e));
    put_f64(jac.v_cc);
    put_u64(jac.shell_fp);
    put_u64(jac.compat_fp);
    for (int r = 0; r < jac.rows(); ++r)
        for (int c = 0; c < jac.cols(); ++c) put_f64(jac.m(r, c));
    if (!os) throw_config("short write while saving Jacobian to " + path);
}

inline JacobianMatrix load_jacobian(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw_config("cannot open Jacobian file " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::string(magic, 8) != "RCTJAC1\n")
        throw_config(path + " is not an rct Jacobian dump");
    auto get_u64 = [&]() {
        std::uint64_t v = 0;
        is.read(reinterpret_cast<char*>(&v), 8);
        return v;
    };
    auto get_f64 = [&]() {
        double v = 0;
        is.read(reinterpret_cast<char*>(&v), 8);
        return v;
    };
    JacobianMatrix jac;
    std::uint64_t rows = get_u64(), cols = get_u64();
    jac.n_e = static_cast<int>(get_u64());
    jac.v_cc = get_f64();
    jac.shell_fp = get_u64();
    jac.compat_fp = get_u64();
    if (!is || rows == 0 || cols == 0 || rows > (1u << 20) || cols > (1u << 24))
        throw_config(path + ": corrupt Jacobian header");
    jac.m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::uint64_t r = 0; r < rows; ++r)
        for (std::uint64_t c = 0; c < cols; ++c) jac.m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = get_f64();
    if (!is) throw_config(path + ": truncated Jacobian payload");
    return jac;
}

// Text export for inspection.
inline void export_jacobian_csv(const JacobianMatrix& jac, std::ostream& os) {
    os << "# rows " << jac.rows() << " cols " << jac.cols() << " n_e " << jac.n_e << " v_cc "
       << fmt9(jac.v_cc) << " shell " << hex16(jac.shell_fp) << " compat " << hex16(jac.compat_fp)
       << '\n';
    for (int r = 0; r < jac.rows(); ++r) {
        for (int c = 0; c < jac.cols(); ++c) {
            if (c) os << ',';
            os << fmt9(jac.m(r, c));
        }
        os << '\n';
    }
}

}  // namespace rct
