#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "common.hpp"
#include "reconstruction.hpp"

namespace rct {

// Hertzian contact of a sphere on an elastic plate.
struct HertzParams {
    double r = 2.5e-3;    // contactor curvature radius, m
    double nu = 0.49;     // Poisson ratio
    double e_mod = 0.35e6;  // Young's modulus, Pa
};

// Electromechanical divider model: phi = V * R0 s a F^g / (l + R0 s a F^g).
struct ContactModelParams {
    double alpha = 1.0;   // contact-area power-law coefficient, m^2 / N^gamma
    double gamma = 2.0 / 3.0;
    double sigma = 1.0;   // surface-layer conductivity, S/m
    double l = 1e-3;      // surface-layer thickness, m
    double r0 = 1.0;      // detector volume resistance, Ohm
    double v_cc = 2.0;    // drive voltage, V
};

// Saturation model phi(F) = p1 / (F^p3 + p2) fitted to measured outputs.
struct FitParams {
    double p1 = 0.0, p2 = 0.0, p3 = 0.0;
    double residual = 0.0;  // final residual norm
    bool converged = false;
};

struct PerformanceRecord {
    int i_low = 0, i_up = 0;          // condition tag on the sweep grid
    double sigma_low = 0.0, sigma_up = 0.0;
    double p1 = 0.0, p2 = 0.0, p3 = 0.0;
    bool converged = false;
    double sens = 0.0, fmax = 0.0, sr = 0.0, pa = 0.0;
    double sens_n = 0.0, fmax_n = 0.0, sr_n = 0.0, pa_n = 0.0;
};

// Contact-area power law S_c = alpha * F^gamma from Hertz theory.
inline std::pair<double, double> hertz_power_law(const HertzParams& h) {
    if (!(h.r > 0.0)) throw_config("hertz: radius must be positive");
    if (!(h.nu >= 0.0 && h.nu < 0.5)) throw_config("hertz: Poisson ratio must be in [0, 0.5)");
    if (!(h.e_mod > 0.0)) throw_config("hertz: Young's modulus must be positive");
    double gamma = 2.0 / 3.0;
    double alpha = std::numbers::pi * std::pow(3.0 * h.r * (1.0 - h.nu * h.nu) / (4.0 * h.e_mod), gamma);
    return {alpha, gamma};
}

inline double analytic_output(double force, const ContactModelParams& p) {
    if (force < 0.0) throw_contract("analytic_output: force must be >= 0");
    if (force == 0.0) return 0.0;
    double coupling = p.r0 * p.sigma * p.alpha * std::pow(force, p.gamma);
    return p.v_cc * coupling / (p.l + coupling);
}

namespace detail {

struct LmState {
    Eigen::Vector3d q;  // (log p1, log p2, p3)
    double cost = 0.0;
    bool converged = false;
};

inline Eigen::Vector3d clamp_params(Eigen::Vector3d q) {
    const double log_lo = std::log(1e-12), log_hi = std::log(1e12);
    q[0] = std::clamp(q[0], log_lo, log_hi);
    q[1] = std::clamp(q[1], log_lo, log_hi);
    q[2] = std::clamp(q[2], -8.0, -1e-6);
    return q;
}

inline double saturation_model(double f, const Eigen::Vector3d& q) {
    return std::exp(q[0]) / (std::pow(f, q[2]) + std::exp(q[1]));
}

// Damped Gauss-Newton on the 3-parameter saturation model with box clamping.
inline LmState levenberg_marquardt(const std::vector<std::pair<double, double>>& samples,
                                   Eigen::Vector3d q0) {
    auto cost_of = [&](const Eigen::Vector3d& q) {
        double c = 0.0;
        for (const auto& [f, phi] : samples) {
            double r = saturation_model(f, q) - phi;
            c += r * r;
        }
        return 0.5 * c;
    };

    LmState st;
    st.q = clamp_params(q0);
    st.cost = cost_of(st.q);
    double mu = 1e-3;

    for (int iter = 0; iter < 300; ++iter) {
        Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
        Eigen::Vector3d g = Eigen::Vector3d::Zero();
        double p2 = std::exp(st.q[1]);
        for (const auto& [f, phi] : samples) {
            double fp3 = std::pow(f, st.q[2]);
            double denom = fp3 + p2;
            double m = std::exp(st.q[0]) / denom;
            double r = m - phi;
            Eigen::Vector3d jrow(m, -m * p2 / denom, -m * fp3 * std::log(f) / denom);
            a += jrow * jrow.transpose();
            g += jrow * r;
        }

        bool stepped = false;
        for (int tries = 0; tries < 40 && !stepped; ++tries) {
            Eigen::Matrix3d damped = a;
            for (int k = 0; k < 3; ++k) damped(k, k) += mu * std::max(a(k, k), 1e-12);
            Eigen::Vector3d delta = damped.ldlt().solve(-g);
            Eigen::Vector3d trial = clamp_params(st.q + delta);
            double trial_cost = cost_of(trial);
            if (std::isfinite(trial_cost) && trial_cost <= st.cost) {
                double step = (trial - st.q).norm() / std::max(st.q.norm(), 1e-12);
                double drop = (st.cost - trial_cost) / std::max(st.cost, 1e-300);
                st.q = trial;
                st.cost = trial_cost;
                mu = std::max(mu / 3.0, 1e-12);
                stepped = true;
                if (step < 1e-10 || drop < 1e-12) {
                    st.converged = true;
                    return st;
                }
            } else {
                mu *= 3.0;
            }
        }
        if (!stepped) {
            // No downhill step found at any damping: stationary point.
            st.converged = g.norm() < 1e-8 * std::max(1.0, st.cost);
            return st;
        }
    }
    return st;
}

}  // namespace detail

// Least-squares fit of phi(F) = p1/(F^p3 + p2) by Levenberg-Marquardt with a
// three-start strategy; flat or non-converging data is returned flagged
// rather than thrown.
inline FitParams fit_output_model(const std::vector<std::pair<double, double>>& samples,
                                  std::uint64_t seed = 1) {
    if (samples.size() < 4) throw_contract("fit_output_model: need at least 4 samples");
    {
        std::vector<double> forces;
        for (const auto& [f, phi] : samples) {
            if (!(f > 0.0)) throw_contract("fit_output_model: forces must be positive");
            forces.push_back(f);
        }
        std::sort(forces.begin(), forces.end());
        if (std::adjacent_find(forces.begin(), forces.end()) != forces.end())
            throw_contract("fit_output_model: force values must be distinct");
    }

    double phi_max = 0.0, phi_min = 1e300;
    for (const auto& [f, phi] : samples) {
        phi_max = std::max(phi_max, phi);
        phi_min = std::min(phi_min, phi);
    }
    FitParams out;
    if (!(phi_max > 0.0) || phi_max - phi_min <= 1e-12 * std::max(1.0, std::abs(phi_max))) {
        // Flat or non-positive data: p3 unidentifiable.
        out.p1 = phi_max > 0.0 ? 2.0 * phi_max : 1.0;
        out.p2 = 1.0;
        out.p3 = -1.0;
        out.converged = false;
        double c = 0.0;
        for (const auto& [f, phi] : samples) {
            double r = out.p1 / (std::pow(f, out.p3) + out.p2) - phi;
            c += r * r;
        }
        out.residual = std::sqrt(c);
        return out;
    }

    Eigen::Vector3d base(std::log(2.0 * phi_max), 0.0, -1.0);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.75, 0.75);

    detail::LmState best;
    best.cost = 1e300;
    for (int start = 0; start < 3; ++start) {
        Eigen::Vector3d q = base;
        if (start > 0) {
            q[0] += jitter(rng);
            q[1] += jitter(rng);
            q[2] += jitter(rng) * 0.5;
        }
        auto st = detail::levenberg_marquardt(samples, q);
        if (st.cost < best.cost) best = st;
    }

    out.p1 = std::exp(best.q[0]);
    out.p2 = std::exp(best.q[1]);
    out.p3 = best.q[2];
    out.residual = std::sqrt(2.0 * best.cost);
    out.converged = best.converged;
    return out;
}

inline double saturation_output(const FitParams& p, double force) {
    return p.p1 / (std::pow(force, p.p3) + p.p2);
}

// Sensitivity: slope of the fitted model at the half-maximum force.
inline double sensitivity_metric(const FitParams& p, double f_h) {
    if (!p.converged) throw_contract("sensitivity_metric: fit did not converge");
    if (!(f_h > 0.0)) throw_contract("sensitivity_metric: F_h must be positive");
    double fp3 = std::pow(f_h, p.p3);
    return -p.p3 * p.p1 * std::pow(f_h, p.p3 - 1.0) / ((fp3 + p.p2) * (fp3 + p.p2));
}

// Maximum force: the force whose output reaches 90% of the saturation value
// p1/p2. The closed form is verified against the defining identity.
inline double fmax_metric(const FitParams& p) {
    if (!p.converged) throw_contract("fmax_metric: fit did not converge");
    if (!(p.p3 < 0.0)) throw_numerical("fmax_metric: p3 >= 0, output does not saturate");
    double fmax = std::pow(p.p2 / 9.0, 1.0 / p.p3);
    double target = 0.9 * p.p1 / p.p2;
    double got = saturation_output(p, fmax);
    if (std::abs(got - target) > 1e-9 * std::max(std::abs(target), 1e-300))
        throw_numerical("fmax_metric: defining identity failed (phi(FMAX) = " + fmt9(got) +
                        ", expected " + fmt9(target) + ")");
    return fmax;
}

// Spatial resolution: 1 - FWHM/WIDTH, FWHM measured from the image centroid.
inline double spatial_resolution_metric(const ReconstructedImage& image) {
    auto c = centroid(image);
    double fwhm = half_max_extent(image, c);
    return 1.0 - fwhm / image.width;
}

// Position accuracy: 1 - |centroid - true| / WIDTH.
inline double position_accuracy_metric(const ReconstructedImage& image,
                                       std::pair<double, double> true_pos) {
    auto c = centroid(image);
    double dx = c.first - true_pos.first, dy = c.second - true_pos.second;
    return 1.0 - std::sqrt(dx * dx + dy * dy) / image.width;
}

}  // namespace rct
