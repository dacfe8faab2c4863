#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "common.hpp"
#include "jacobian.hpp"
#include "mesh.hpp"

namespace rct {

struct ReconConfig {
    double lambda_sq = 5000.0;  // Tikhonov weight, calibrated for 2 V drive frames
    int raster = 64;            // raster grid size

    void validate() const {
        if (!(lambda_sq > 0.0)) throw_config("recon: lambda_sq must be positive");
        if (raster < 8) throw_config("recon: raster grid must be at least 8");
    }
};

// Per-element reconstruction plus its raster over the sensor plane. Raster
// row 0 is the +y edge; cell (r, c) is centered at cell_center(r, c).
struct ReconstructedImage {
    Eigen::VectorXd element_values;
    Eigen::MatrixXd raster;  // raster x raster, row-major top-down
    double width = 0.0, depth = 0.0;

    double cell_w() const { return width / static_cast<double>(raster.cols()); }
    double cell_h() const { return depth / static_cast<double>(raster.rows()); }
    std::pair<double, double> cell_center(int r, int c) const {
        return {-width / 2.0 + (c + 0.5) * cell_w(), depth / 2.0 - (r + 0.5) * cell_h()};
    }
};

// Ridge-regularized solve x = (J^T J + lambda^2 I)^-1 J^T v. Implemented
// through the algebraically identical dual form x = J^T (J J^T + lambda^2 I)^-1 v,
// whose SPD normal matrix is only n_e^2 square; the factorization is cached
// so frame streams and sweeps reuse it.
class TikhonovSolver {
public:
    TikhonovSolver(const JacobianMatrix& jac, double lambda_sq) : jac_(&jac), lambda_sq_(lambda_sq) {
        if (!(lambda_sq > 0.0)) throw_config("TikhonovSolver: lambda_sq must be positive");
        Eigen::MatrixXd gram = jac.m * jac.m.transpose();
        gram.diagonal().array() += lambda_sq;
        llt_.compute(gram);
        if (llt_.info() != Eigen::Success)
            throw_numerical("Tikhonov normal matrix factorization failed");
    }

    Eigen::VectorXd solve_values(const Eigen::VectorXd& frame_values) const {
        if (frame_values.size() != jac_->m.rows())
            throw_contract("frame length " + std::to_string(frame_values.size()) +
                           " does not match Jacobian rows " + std::to_string(jac_->m.rows()));
        return jac_->m.transpose() * llt_.solve(frame_values);
    }

    double lambda_sq() const { return lambda_sq_; }

private:
    const JacobianMatrix* jac_;
    double lambda_sq_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
};

// Nearest-element resampling of per-element shell values onto a uniform
// lattice. Uses the structured grid directly: the containing cell and the
// diagonal test pick the triangle.
inline Eigen::MatrixXd rasterize_shell(const Mesh& shell, const Eigen::VectorXd& values, int n) {
    if (shell.flavor != MeshFlavor::shell2d) throw_contract("rasterize: shell mesh required");
    if (values.size() != shell.element_count())
        throw_contract("rasterize: value count does not match shell elements");
    Eigen::MatrixXd grid(n, n);
    double cw = shell.width / n, ch = shell.depth / n;
    double dx = shell.width / shell.nx, dy = shell.depth / shell.ny;
    for (int r = 0; r < n; ++r) {
        double y = shell.depth / 2.0 - (r + 0.5) * ch;
        for (int c = 0; c < n; ++c) {
            double x = -shell.width / 2.0 + (c + 0.5) * cw;
            int kx = std::clamp(static_cast<int>((x + shell.width / 2.0) / dx), 0, shell.nx - 1);
            int ky = std::clamp(static_cast<int>((y + shell.depth / 2.0) / dy), 0, shell.ny - 1);
            double fx = (x + shell.width / 2.0) / dx - kx;
            double fy = (y + shell.depth / 2.0) / dy - ky;
            int e = 2 * (ky * shell.nx + kx) + (fx >= fy ? 0 : 1);
            grid(r, c) = values[e];
        }
    }
    return grid;
}

inline ReconstructedImage tikhonov_reconstruct(const JacobianMatrix& jac,
                                               const PotentialFrame& frame,
                                               const ReconConfig& cfg, const Mesh& shell) {
    cfg.validate();
    if (frame.compat_fp != 0 && jac.compat_fp != 0 && frame.compat_fp != jac.compat_fp)
        throw_contract("frame/Jacobian fingerprints differ: frame " + hex16(frame.compat_fp) +
                       " vs jacobian " + hex16(jac.compat_fp));
    TikhonovSolver solver(jac, cfg.lambda_sq);
    ReconstructedImage img;
    img.element_values = solver.solve_values(frame.values);
    img.raster = rasterize_shell(shell, img.element_values, cfg.raster);
    img.width = shell.width;
    img.depth = shell.depth;
    return img;
}

inline ReconstructedImage make_image(const Mesh& shell, const Eigen::VectorXd& element_values,
                                     const ReconConfig& cfg) {
    cfg.validate();
    ReconstructedImage img;
    img.element_values = element_values;
    img.raster = rasterize_shell(shell, element_values, cfg.raster);
    img.width = shell.width;
    img.depth = shell.depth;
    return img;
}

// Value-weighted centroid of the raster; negative values carry no weight.
inline std::pair<double, double> centroid(const ReconstructedImage& image) {
    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (int r = 0; r < image.raster.rows(); ++r) {
        for (int c = 0; c < image.raster.cols(); ++c) {
            double w = image.raster(r, c);
            if (w <= 0.0) continue;
            auto [x, y] = image.cell_center(r, c);
            sw += w;
            sx += w * x;
            sy += w * y;
        }
    }
    if (sw <= 0.0) throw_contract("centroid undefined: image has no positive values");
    return {sx / sw, sy / sw};
}

// Full width at half maximum realized as twice the largest distance from
// `center` to any raster cell at or above 50% of the (positive) peak. A
// single-cell support floors at the cell diagonal.
inline double half_max_extent(const ReconstructedImage& image, std::pair<double, double> center) {
    double vmax = 0.0;
    for (int r = 0; r < image.raster.rows(); ++r)
        for (int c = 0; c < image.raster.cols(); ++c) vmax = std::max(vmax, image.raster(r, c));
    if (!(vmax > 0.0)) throw_contract("half_max_extent: image has no positive maximum");
    double half = 0.5 * vmax;
    double dmax = 0.0;
    for (int r = 0; r < image.raster.rows(); ++r) {
        for (int c = 0; c < image.raster.cols(); ++c) {
            if (image.raster(r, c) < half) continue;
            auto [x, y] = image.cell_center(r, c);
            double dx = x - center.first, dy = y - center.second;
            dmax = std::max(dmax, std::sqrt(dx * dx + dy * dy));
        }
    }
    double diag = std::hypot(image.cell_w(), image.cell_h());
    return std::max(2.0 * dmax, diag);
}

// ---- exports ---------------------------------------------------------

inline void write_raster_csv(const Eigen::MatrixXd& raster, std::ostream& os) {
    for (int r = 0; r < raster.rows(); ++r) {
        for (int c = 0; c < raster.cols(); ++c) {
            if (c) os << ',';
            os << fmt9(raster(r, c));
        }
        os << '\n';
    }
}

inline void write_raster_line(const Eigen::MatrixXd& raster, std::ostream& os) {
    bool first = true;
    for (int r = 0; r < raster.rows(); ++r) {
        for (int c = 0; c < raster.cols(); ++c) {
            if (!first) os << ',';
            os << fmt9(raster(r, c));
            first = false;
        }
    }
    os << '\n';
}

// 8-bit min-max scaled grayscale heatmap (ASCII PGM).
inline void write_pgm(const Eigen::MatrixXd& raster, std::ostream& os) {
    double lo = raster.minCoeff(), hi = raster.maxCoeff();
    double span = hi - lo;
    os << "P2\n" << raster.cols() << ' ' << raster.rows() << "\n255\n";
    for (int r = 0; r < raster.rows(); ++r) {
        for (int c = 0; c < raster.cols(); ++c) {
            int v = span > 0.0 ? static_cast<int>(std::lround((raster(r, c) - lo) / span * 255.0)) : 0;
            os << v << (c + 1 < raster.cols() ? ' ' : '\n');
        }
    }
}

inline void write_pgm(const Eigen::MatrixXd& raster, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw_config("cannot open " + path + " for writing");
    write_pgm(raster, os);
}

}  // namespace rct
