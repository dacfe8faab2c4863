#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "common.hpp"
#include "fem.hpp"
#include "jacobian.hpp"
#include "mesh.hpp"
#include "metrics.hpp"
#include "protocol.hpp"
#include "reconstruction.hpp"

namespace rct {

// Axes and probing points of the conductivity design-space sweep.
struct SweepGrid {
    std::vector<double> sigma_low_axis;  // S/m, strictly increasing
    std::vector<double> sigma_up_axis;
    std::vector<double> contact_axis;    // force-proxy sweep, S/m
    std::vector<std::pair<double, double>> pa_positions;  // mm
    double sr_sigma = 0.1;  // contact conductivity for SR/PA reconstructions
    double f_h = 0.1;       // half-maximum force proxy for SENS

    void validate() const {
        auto increasing = [](const std::vector<double>& a) {
            for (std::size_t i = 1; i < a.size(); ++i)
                if (!(a[i] > a[i - 1])) return false;
            return true;
        };
        if (sigma_low_axis.size() < 2 || sigma_up_axis.size() < 2)
            throw_config("sweep grid: conductivity axes need at least 2 points");
        if (contact_axis.size() < 4) throw_config("sweep grid: contact axis needs at least 4 points");
        if (!increasing(sigma_low_axis) || !increasing(sigma_up_axis) || !increasing(contact_axis))
            throw_config("sweep grid: axes must be strictly increasing");
        if (pa_positions.empty()) throw_config("sweep grid: no position-accuracy contact positions");
    }
};

inline std::vector<double> make_log_axis(double lo, double hi, int n) {
    if (!(lo > 0.0) || !(hi > lo) || n < 2) throw_config("log axis: need hi > lo > 0 and n >= 2");
    std::vector<double> axis(static_cast<std::size_t>(n));
    double llo = std::log10(lo), lhi = std::log10(hi);
    for (int i = 0; i < n; ++i) axis[static_cast<std::size_t>(i)] = std::pow(10.0, llo + (lhi - llo) * i / (n - 1));
    axis.front() = lo;
    axis.back() = hi;
    return axis;
}

inline SweepGrid make_sweep_grid(int n_sigma, double sigma_min, double sigma_max, int n_contact,
                                 double contact_min, double contact_max,
                                 std::vector<std::pair<double, double>> positions) {
    SweepGrid grid;
    grid.sigma_low_axis = make_log_axis(sigma_min, sigma_max, n_sigma);
    grid.sigma_up_axis = grid.sigma_low_axis;
    grid.contact_axis = make_log_axis(contact_min, contact_max, n_contact);
    grid.pa_positions = std::move(positions);
    grid.f_h = std::sqrt(contact_min * contact_max);
    grid.sr_sigma = grid.f_h;
    grid.validate();
    return grid;
}

inline std::vector<std::pair<double, double>> default_pa_positions() {
    std::vector<std::pair<double, double>> out;
    for (double y : {-20.0, 0.0, 20.0})
        for (double x : {-20.0, 0.0, 20.0}) out.emplace_back(x, y);
    return out;
}

// Everything a study needs to build meshes and reconstruct frames.
struct StudySetup {
    double width = 60.0, depth = 60.0, height = 10.0;  // mm
    ElectrodeLayout layout;
    double v_cc = 2.0;
    double contact_diameter = 4.0;  // mm
    std::array<int, 3> vol_div{30, 30, 5};
    int shell_div = 45;
    double shell_sigma = 1.0;
    ReconConfig recon;
    int threads = 1;
    std::uint64_t seed = 1;

    std::uint64_t compat() const { return compat_fingerprint(width, depth, layout, v_cc); }
};

// Shared reconstruction state reused across every condition of a sweep.
struct ReconContext {
    Mesh shell;
    JacobianMatrix jacobian;
    TikhonovSolver solver;

    ReconContext(const StudySetup& setup)
        : shell(build_shell_mesh(setup.width, setup.depth, setup.shell_div, setup.layout,
                                 setup.shell_sigma)),
          jacobian(build_jacobian(shell, setup.v_cc, setup.threads, setup.compat())),
          solver(jacobian, setup.recon.lambda_sq) {}

    ReconstructedImage reconstruct(const PotentialFrame& frame, const ReconConfig& cfg) const {
        ReconstructedImage img;
        img.element_values = solver.solve_values(frame.values);
        img.raster = rasterize_shell(shell, img.element_values, cfg.raster);
        img.width = shell.width;
        img.depth = shell.depth;
        return img;
    }
};

struct SweepResult {
    int n_low = 0, n_up = 0;
    std::vector<PerformanceRecord> records;  // index i_low * n_up + i_up
    double sens_min = 0, sens_max = 0, fmax_min = 0, fmax_max = 0;
    double sr_min = 0, sr_max = 0, pa_min = 0, pa_max = 0;
    std::vector<std::string> failures;
    double elapsed_s = 0.0;

    const PerformanceRecord& at(int i_low, int i_up) const {
        return records[static_cast<std::size_t>(i_low * n_up + i_up)];
    }
};

namespace detail {

inline double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }

// One sweep condition: fit the force-proxy curve for SENS/FMAX, reconstruct
// at the mid-range contact conductivity for SR, and average PA over the
// probe positions.
inline PerformanceRecord evaluate_condition(const Mesh& base_mesh, const SweepGrid& grid,
                                            const StudySetup& setup, const ReconContext& recon) {
    PerformanceRecord rec;
    std::vector<std::pair<double, double>> samples;
    for (double c : grid.contact_axis) {
        ContactSpec contact{0.0, 0.0, setup.contact_diameter, c};
        Mesh mesh = apply_regions(base_mesh, contact);
        PotentialFrame frame = acquire_frame(mesh, setup.v_cc);
        samples.emplace_back(c, frame.values.maxCoeff());
    }
    FitParams fit = fit_output_model(samples, setup.seed);
    rec.p1 = fit.p1;
    rec.p2 = fit.p2;
    rec.p3 = fit.p3;
    rec.converged = fit.converged;
    if (fit.converged) {
        rec.sens = sensitivity_metric(fit, grid.f_h);
        rec.fmax = fmax_metric(fit);
    } else {
        rec.sens = nan_value();
        rec.fmax = nan_value();
    }

    double pa_sum = 0.0;
    for (const auto& pos : grid.pa_positions) {
        ContactSpec contact{pos.first, pos.second, setup.contact_diameter, grid.sr_sigma};
        Mesh mesh = apply_regions(base_mesh, contact);
        PotentialFrame frame = acquire_frame(mesh, setup.v_cc);
        ReconstructedImage img = recon.reconstruct(frame, setup.recon);
        pa_sum += position_accuracy_metric(img, pos);
        if (pos.first == 0.0 && pos.second == 0.0) rec.sr = spatial_resolution_metric(img);
    }
    rec.pa = pa_sum / static_cast<double>(grid.pa_positions.size());

    bool has_center = std::any_of(grid.pa_positions.begin(), grid.pa_positions.end(),
                                  [](const auto& p) { return p.first == 0.0 && p.second == 0.0; });
    if (!has_center) {
        ContactSpec contact{0.0, 0.0, setup.contact_diameter, grid.sr_sigma};
        Mesh mesh = apply_regions(base_mesh, contact);
        PotentialFrame frame = acquire_frame(mesh, setup.v_cc);
        rec.sr = spatial_resolution_metric(recon.reconstruct(frame, setup.recon));
    }
    return rec;
}

inline void minmax_finite(const std::vector<PerformanceRecord>& recs, double PerformanceRecord::*f,
                          double& lo, double& hi) {
    lo = 1e300;
    hi = -1e300;
    for (const auto& r : recs) {
        double v = r.*f;
        if (!std::isfinite(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (lo > hi) {
        lo = 0.0;
        hi = 0.0;
    }
}

inline double normalize(double v, double lo, double hi) {
    if (!std::isfinite(v)) return v;
    if (!(hi > lo)) return 0.0;
    return (v - lo) / (hi - lo);
}

}  // namespace detail

// The 121-condition (by default) conductivity performance map.
inline SweepResult run_performance_map(const SweepGrid& grid, const StudySetup& setup) {
    grid.validate();
    auto t0 = std::chrono::steady_clock::now();
    ReconContext recon(setup);

    SweepResult result;
    result.n_low = static_cast<int>(grid.sigma_low_axis.size());
    result.n_up = static_cast<int>(grid.sigma_up_axis.size());
    int cells = result.n_low * result.n_up;
    result.records.assign(static_cast<std::size_t>(cells), {});
    std::vector<std::string> failures(static_cast<std::size_t>(cells));

    parallel_for(cells, setup.threads, [&](int idx) {
        int i_low = idx / result.n_up, i_up = idx % result.n_up;
        PerformanceRecord& rec = result.records[static_cast<std::size_t>(idx)];
        rec.i_low = i_low;
        rec.i_up = i_up;
        rec.sigma_low = grid.sigma_low_axis[static_cast<std::size_t>(i_low)];
        rec.sigma_up = grid.sigma_up_axis[static_cast<std::size_t>(i_up)];
        try {
            GradientSpec grad{rec.sigma_low, rec.sigma_up, 0.0, 0.0};
            Mesh base = build_volume_mesh(setup.width, setup.depth, setup.height, setup.vol_div,
                                          grad, setup.layout);
            PerformanceRecord computed = detail::evaluate_condition(base, grid, setup, recon);
            computed.i_low = i_low;
            computed.i_up = i_up;
            computed.sigma_low = rec.sigma_low;
            computed.sigma_up = rec.sigma_up;
            rec = computed;
        } catch (const std::exception& err) {
            rec.converged = false;
            rec.sens = rec.fmax = rec.sr = rec.pa = detail::nan_value();
            failures[static_cast<std::size_t>(idx)] =
                "condition (" + fmt9(rec.sigma_low) + ", " + fmt9(rec.sigma_up) + "): " + err.what();
        }
    });

    for (auto& f : failures)
        if (!f.empty()) result.failures.push_back(f);
    if (static_cast<double>(result.failures.size()) > 0.2 * cells) {
        std::string summary = "performance map aborted: " + std::to_string(result.failures.size()) +
                              "/" + std::to_string(cells) + " conditions failed;";
        for (const auto& f : result.failures) summary += "\n  " + f;
        throw_numerical(summary);
    }

    detail::minmax_finite(result.records, &PerformanceRecord::sens, result.sens_min, result.sens_max);
    detail::minmax_finite(result.records, &PerformanceRecord::fmax, result.fmax_min, result.fmax_max);
    detail::minmax_finite(result.records, &PerformanceRecord::sr, result.sr_min, result.sr_max);
    detail::minmax_finite(result.records, &PerformanceRecord::pa, result.pa_min, result.pa_max);
    for (auto& r : result.records) {
        r.sens_n = detail::normalize(r.sens, result.sens_min, result.sens_max);
        r.fmax_n = detail::normalize(r.fmax, result.fmax_min, result.fmax_max);
        r.sr_n = detail::normalize(r.sr, result.sr_min, result.sr_max);
        r.pa_n = detail::normalize(r.pa, result.pa_min, result.pa_max);
    }
    result.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

// Product of the four normalized metrics; the map study uses it to locate the
// best-balanced uniform conductivity.
inline double balanced_score(const PerformanceRecord& r) {
    return r.sens_n * r.fmax_n * r.sr_n * r.pa_n;
}

inline double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size() || a.size() < 2) throw_contract("pearson: size mismatch");
    double ma = a.mean(), mb = b.mean();
    Eigen::VectorXd da = a.array() - ma, db = b.array() - mb;
    double denom = da.norm() * db.norm();
    if (denom == 0.0) throw_numerical("pearson: zero variance input");
    return da.dot(db) / denom;
}

// Spearman rank correlation (average ranks on ties).
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<int> order(v.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int i, int j) { return v[static_cast<std::size_t>(i)] < v[static_cast<std::size_t>(j)]; });
        std::vector<double> r(v.size());
        std::size_t i = 0;
        while (i < order.size()) {
            std::size_t j = i;
            while (j + 1 < order.size() &&
                   v[static_cast<std::size_t>(order[j + 1])] == v[static_cast<std::size_t>(order[i])])
                ++j;
            double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0;
            for (std::size_t k = i; k <= j; ++k) r[static_cast<std::size_t>(order[k])] = avg;
            i = j + 1;
        }
        return r;
    };
    auto ra = ranks(a), rb = ranks(b);
    Eigen::VectorXd va = Eigen::Map<Eigen::VectorXd>(ra.data(), static_cast<Eigen::Index>(ra.size()));
    Eigen::VectorXd vb = Eigen::Map<Eigen::VectorXd>(rb.data(), static_cast<Eigen::Index>(rb.size()));
    return pearson(va, vb);
}

// ---- thickness-fidelity study -----------------------------------------

struct ThicknessRow {
    double thickness = 0.0;     // mm
    double correlation = 0.0;   // Pearson vs thin-shell reference frame
    double max_potential = 0.0; // V
    double mae = 0.0;           // mean abs error of max-normalized vectors
};

inline double normalized_mae(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw_contract("normalized_mae: size mismatch");
    double amax = a.maxCoeff(), bmax = b.maxCoeff();
    if (!(amax > 0.0) || !(bmax > 0.0)) throw_numerical("normalized_mae: degenerate frame");
    return ((a / amax) - (b / bmax)).cwiseAbs().mean();
}

// Thin-shell reference frame for a centered contact: the Jacobian applied to
// a unit coupling over the contact footprint.
inline Eigen::VectorXd shell_reference_frame(const ReconContext& recon, const StudySetup& setup) {
    ContactSpec contact{0.0, 0.0, setup.contact_diameter, 1.0};
    Mesh tagged = apply_regions(recon.shell, contact);
    Eigen::VectorXd coupling = Eigen::VectorXd::Zero(recon.shell.element_count());
    for (int e : tagged.contact_elements) coupling[e] = 1.0;
    return shell_forward_frame(recon.jacobian, coupling);
}

inline std::vector<ThicknessRow> run_thickness_study(const std::vector<double>& thicknesses,
                                                     const StudySetup& setup) {
    if (thicknesses.empty()) throw_config("thickness study: empty thickness list");
    for (double t : thicknesses)
        if (!(t > 0.0)) throw_config("thickness study: thicknesses must be positive");

    ReconContext recon(setup);
    Eigen::VectorXd ref = shell_reference_frame(recon, setup);
    if (!(ref.maxCoeff() > 0.0)) throw_numerical("thickness study: degenerate shell reference");

    double el_h = setup.height / setup.vol_div[2];
    std::vector<ThicknessRow> rows(thicknesses.size());
    parallel_for(static_cast<int>(thicknesses.size()), setup.threads, [&](int i) {
        double t = thicknesses[static_cast<std::size_t>(i)];
        int nz = std::max(1, static_cast<int>(std::lround(t / el_h)));
        GradientSpec uniform{1.0, 1.0, 0.0, 0.0};
        Mesh base = build_volume_mesh(setup.width, setup.depth, t,
                                      {setup.vol_div[0], setup.vol_div[1], nz}, uniform, setup.layout);
        ContactSpec contact{0.0, 0.0, setup.contact_diameter, 1.0};
        Mesh mesh = apply_regions(base, contact);
        PotentialFrame frame = acquire_frame(mesh, setup.v_cc);
        if (!(frame.values.maxCoeff() > 0.0))
            throw_numerical("thickness study: degenerate frame at thickness " + fmt9(t));
        ThicknessRow row;
        row.thickness = t;
        row.correlation = pearson(frame.values, ref);
        row.max_potential = frame.values.maxCoeff();
        row.mae = normalized_mae(frame.values, ref);
        rows[static_cast<std::size_t>(i)] = row;
    });
    return rows;
}

// ---- anisotropic dot-adhesion study ------------------------------------

struct AdhesionConfig {
    std::vector<int> dot_grids{5, 7};
    std::vector<double> diameters{2.0, 4.0, 6.0, 7.22, 9.0, 12.0};  // mm; full-coverage appended per grid
    std::vector<double> position_diameters;  // study-A override; empty = use `diameters`
    double in_dot_sigma = 1.0;
    double out_dot_sigma = 1e-9;
    double layer_sigma = 1.0;
    double contact_sigma = 1.0;
    double block_voltage = 1.0;  // V across the block for the current study
};

struct AdhesionPositionRow {
    int dots_per_side = 0;
    double diameter = 0.0;       // mm
    double mean_error = 0.0;     // mm
};

struct AdhesionCurrentRow {
    double diameter = 0.0;      // mm
    double total_current = 0.0; // A
    double peak_density = 0.0;  // A/m^2
};

struct AdhesionResult {
    std::vector<AdhesionPositionRow> position_rows;
    std::vector<AdhesionCurrentRow> current_rows;
    std::vector<std::string> warnings;
};

inline double full_coverage_diameter(double width, int dots_per_side) {
    return width / dots_per_side * std::sqrt(2.0);
}

inline AdhesionResult run_adhesion_study(const AdhesionConfig& cfg, const StudySetup& setup,
                                         const std::vector<std::pair<double, double>>& positions) {
    if (cfg.dot_grids.empty()) throw_config("adhesion study: no dot grids");
    if (positions.empty()) throw_config("adhesion study: no contact positions");
    ReconContext recon(setup);
    AdhesionResult result;

    GradientSpec uniform{cfg.layer_sigma, cfg.layer_sigma, 0.0, 0.0};
    Mesh base = build_volume_mesh(setup.width, setup.depth, setup.height, setup.vol_div, uniform,
                                  setup.layout);

    // Study A: mean centroid error over the probe positions per (n, diameter).
    struct Task {
        int n;
        double d;
    };
    std::vector<Task> tasks;
    for (int n : cfg.dot_grids) {
        double dmax = full_coverage_diameter(setup.width, n);
        std::vector<double> ds = cfg.position_diameters.empty() ? cfg.diameters : cfg.position_diameters;
        ds.push_back(dmax);
        std::sort(ds.begin(), ds.end());
        ds.erase(std::unique(ds.begin(), ds.end()), ds.end());
        for (double d : ds) {
            if (d <= 0.0 || d > dmax + 1e-9) continue;
            tasks.push_back({n, d});
        }
    }
    std::vector<AdhesionPositionRow> rows(tasks.size());
    std::vector<std::string> warnings(tasks.size());
    parallel_for(static_cast<int>(tasks.size()), setup.threads, [&](int ti) {
        const Task& task = tasks[static_cast<std::size_t>(ti)];
        AdhesionSpec ad{task.n, task.d, cfg.in_dot_sigma, cfg.out_dot_sigma};
        Mesh masked = apply_adhesion(base, ad);
        if (masked.in_dot_elements.empty()) {
            warnings[static_cast<std::size_t>(ti)] = "skipped empty dot mask: n=" + std::to_string(task.n) +
                                                     " d=" + fmt9(task.d);
            rows[static_cast<std::size_t>(ti)].dots_per_side = 0;
            return;
        }
        double err_sum = 0.0;
        for (const auto& pos : positions) {
            ContactSpec contact{pos.first, pos.second, setup.contact_diameter, cfg.contact_sigma};
            Mesh mesh = apply_regions(masked, contact);
            PotentialFrame frame = acquire_frame(mesh, setup.v_cc);
            ReconstructedImage img = recon.reconstruct(frame, setup.recon);
            auto c = centroid(img);
            err_sum += std::hypot(c.first - pos.first, c.second - pos.second);
        }
        rows[static_cast<std::size_t>(ti)] = {task.n, task.d,
                                              err_sum / static_cast<double>(positions.size())};
    });
    for (auto& r : rows)
        if (r.dots_per_side > 0) result.position_rows.push_back(r);
    for (auto& w : warnings)
        if (!w.empty()) result.warnings.push_back(w);

    // Study B: uniform block, full top/bottom Dirichlet, current through the
    // dot mask. Uses the first configured dot grid.
    int nb = cfg.dot_grids.front();
    double dmax = full_coverage_diameter(setup.width, nb);
    std::vector<double> ds = cfg.diameters;
    ds.push_back(dmax);
    std::sort(ds.begin(), ds.end());
    ds.erase(std::unique(ds.begin(), ds.end()), ds.end());
    Mesh block = build_volume_mesh(setup.width, setup.depth, setup.height, setup.vol_div, uniform);
    for (double d : ds) {
        if (d <= 0.0 || d > dmax + 1e-9) continue;
        AdhesionSpec ad{nb, d, cfg.in_dot_sigma, cfg.out_dot_sigma};
        Mesh masked = apply_adhesion(block, ad);
        if (masked.in_dot_elements.empty()) {
            result.warnings.push_back("skipped empty dot mask in current study: d=" + fmt9(d));
            continue;
        }
        StiffnessSystem sys = assemble(masked);
        DirichletSet bc;
        for (int n = 0; n < masked.node_count(); ++n) {
            double z = masked.nodes[static_cast<std::size_t>(n)][2];
            if (z == 0.0) bc.entries.emplace_back(n, 0.0);
            else if (z == masked.height) bc.entries.emplace_back(n, cfg.block_voltage);
        }
        FieldSolution sol = solve(sys, bc);
        auto [total, peak] = interface_current(masked, sol.phi, masked.interface_elements);
        result.current_rows.push_back({d, total, peak});
    }
    return result;
}

// ---- material positioning ----------------------------------------------

struct MaterialPoint {
    std::string label;
    double sigma_low = 0.0, sigma_up = 0.0;  // S/m
};

struct PositioningRow {
    std::string label;
    double sr_n = 0.0, fmax_n = 0.0, pa_n = 0.0, sens_n = 0.0;
    bool on_diagonal_trace = false;
};

// Bilinear interpolation of the raw metrics in (log sigma_low, log sigma_up);
// coordinates are clamped to the grid.
inline PerformanceRecord interpolate_record(const SweepResult& sweep, const SweepGrid& grid,
                                            double sigma_low, double sigma_up) {
    if (!(sigma_low > 0.0) || !(sigma_up > 0.0))
        throw_config("interpolate_record: conductivities must be positive");
    auto locate = [](const std::vector<double>& axis, double v) {
        double u = std::log10(v);
        double lo = std::log10(axis.front()), hi = std::log10(axis.back());
        u = std::clamp(u, lo, hi);
        std::size_t i = 0;
        while (i + 2 < axis.size() && u > std::log10(axis[i + 1])) ++i;
        double ui = std::log10(axis[i]), uj = std::log10(axis[i + 1]);
        return std::make_pair(i, (u - ui) / (uj - ui));
    };
    auto [il, tl] = locate(grid.sigma_low_axis, sigma_low);
    auto [iu, tu] = locate(grid.sigma_up_axis, sigma_up);

    auto lerp_field = [&](double PerformanceRecord::*f) {
        double v00 = sweep.at(static_cast<int>(il), static_cast<int>(iu)).*f;
        double v10 = sweep.at(static_cast<int>(il) + 1, static_cast<int>(iu)).*f;
        double v01 = sweep.at(static_cast<int>(il), static_cast<int>(iu) + 1).*f;
        double v11 = sweep.at(static_cast<int>(il) + 1, static_cast<int>(iu) + 1).*f;
        return (1 - tl) * ((1 - tu) * v00 + tu * v01) + tl * ((1 - tu) * v10 + tu * v11);
    };
    PerformanceRecord rec;
    rec.sigma_low = sigma_low;
    rec.sigma_up = sigma_up;
    rec.sens = lerp_field(&PerformanceRecord::sens);
    rec.fmax = lerp_field(&PerformanceRecord::fmax);
    rec.sr = lerp_field(&PerformanceRecord::sr);
    rec.pa = lerp_field(&PerformanceRecord::pa);
    rec.converged = std::isfinite(rec.sens) && std::isfinite(rec.fmax);
    return rec;
}

struct PositioningResult {
    std::vector<PositioningRow> rows;
    std::vector<std::string> warnings;
};

// Normalized scatter-plot rows for labeled records plus the
// uniform-conductivity diagonal trace.
inline PositioningResult material_positioning(
    const std::vector<std::pair<std::string, PerformanceRecord>>& records, const SweepResult& sweep) {
    PositioningResult out;
    auto normalize_clamped = [&](double v, double lo, double hi, const std::string& label) {
        double n = detail::normalize(v, lo, hi);
        if (std::isfinite(n) && (n < 0.0 || n > 1.0)) {
            out.warnings.push_back("record " + label + " outside normalization range; clamped");
            n = std::clamp(n, 0.0, 1.0);
        }
        return n;
    };
    for (const auto& [label, rec] : records) {
        PositioningRow row;
        row.label = label;
        row.sens_n = normalize_clamped(rec.sens, sweep.sens_min, sweep.sens_max, label);
        row.fmax_n = normalize_clamped(rec.fmax, sweep.fmax_min, sweep.fmax_max, label);
        row.sr_n = normalize_clamped(rec.sr, sweep.sr_min, sweep.sr_max, label);
        row.pa_n = normalize_clamped(rec.pa, sweep.pa_min, sweep.pa_max, label);
        out.rows.push_back(row);
    }
    // Diagonal trace (requires matching axes, which make_sweep_grid guarantees).
    int n_diag = std::min(sweep.n_low, sweep.n_up);
    for (int i = 0; i < n_diag; ++i) {
        const auto& rec = sweep.at(i, i);
        PositioningRow row;
        row.label = "uniform_" + fmt9(rec.sigma_low);
        row.sens_n = rec.sens_n;
        row.fmax_n = rec.fmax_n;
        row.sr_n = rec.sr_n;
        row.pa_n = rec.pa_n;
        row.on_diagonal_trace = true;
        out.rows.push_back(row);
    }
    return out;
}

// ---- CSV / PGM writers ---------------------------------------------------

inline void write_perfmap_csv(const SweepResult& sweep, std::ostream& os) {
    os << "i_low,i_up,sigma_low,sigma_up,p1,p2,p3,converged,sens,fmax,sr,pa,"
          "sens_norm,fmax_norm,sr_norm,pa_norm\n";
    for (const auto& r : sweep.records) {
        os << r.i_low << ',' << r.i_up << ',' << fmt9(r.sigma_low) << ',' << fmt9(r.sigma_up) << ','
           << fmt9(r.p1) << ',' << fmt9(r.p2) << ',' << fmt9(r.p3) << ',' << (r.converged ? 1 : 0)
           << ',' << fmt9(r.sens) << ',' << fmt9(r.fmax) << ',' << fmt9(r.sr) << ',' << fmt9(r.pa)
           << ',' << fmt9(r.sens_n) << ',' << fmt9(r.fmax_n) << ',' << fmt9(r.sr_n) << ','
           << fmt9(r.pa_n) << '\n';
    }
}

inline void write_thickness_csv(const std::vector<ThicknessRow>& rows, std::ostream& os) {
    os << "thickness_mm,correlation,max_potential,mae\n";
    for (const auto& r : rows)
        os << fmt9(r.thickness) << ',' << fmt9(r.correlation) << ',' << fmt9(r.max_potential) << ','
           << fmt9(r.mae) << '\n';
}

inline void write_adhesion_position_csv(const std::vector<AdhesionPositionRow>& rows,
                                        std::ostream& os) {
    os << "dots_per_side,dot_diameter_mm,mean_position_error_mm\n";
    for (const auto& r : rows)
        os << r.dots_per_side << ',' << fmt9(r.diameter) << ',' << fmt9(r.mean_error) << '\n';
}

inline void write_adhesion_current_csv(const std::vector<AdhesionCurrentRow>& rows,
                                       std::ostream& os) {
    os << "dot_diameter_mm,total_current_a,peak_density_a_per_m2\n";
    for (const auto& r : rows)
        os << fmt9(r.diameter) << ',' << fmt9(r.total_current) << ',' << fmt9(r.peak_density) << '\n';
}

inline void write_positioning_csv(const PositioningResult& result, std::ostream& os) {
    os << "label,sr_norm,fmax_norm,pa_norm,sens_norm,diagonal_trace\n";
    for (const auto& r : result.rows)
        os << r.label << ',' << fmt9(r.sr_n) << ',' << fmt9(r.fmax_n) << ',' << fmt9(r.pa_n) << ','
           << fmt9(r.sens_n) << ',' << (r.on_diagonal_trace ? 1 : 0) << '\n';
}

// Normalized metric map as a heatmap; rows run from the highest sigma_up down
// so the image reads like the published contour maps.
inline Eigen::MatrixXd metric_map(const SweepResult& sweep, double PerformanceRecord::*field) {
    Eigen::MatrixXd m(sweep.n_up, sweep.n_low);
    for (int iu = 0; iu < sweep.n_up; ++iu)
        for (int il = 0; il < sweep.n_low; ++il) {
            double v = sweep.at(il, iu).*field;
            m(sweep.n_up - 1 - iu, il) = std::isfinite(v) ? v : 0.0;
        }
    return m;
}

}  // namespace rct
