#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "rct/rct.hpp"

using namespace rct;

namespace {

std::vector<std::pair<double, double>> synth_samples(double p1, double p2, double p3,
                                                     double f_lo = 0.1, double f_hi = 10.0,
                                                     int n = 9) {
    std::vector<std::pair<double, double>> out;
    for (int i = 0; i < n; ++i) {
        double f = f_lo * std::pow(f_hi / f_lo, static_cast<double>(i) / (n - 1));
        out.emplace_back(f, p1 / (std::pow(f, p3) + p2));
    }
    return out;
}

}  // namespace

TEST_CASE("Hertz power law: exponent, limits, scaling, numeric cross-check") {
    HertzParams h{2.5e-3, 0.49, 0.35e6};
    auto [alpha, gamma] = hertz_power_law(h);
    CHECK(gamma == Catch::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(alpha > 0.0);

    // Vanishing contactor radius kills the contact area.
    HertzParams tiny = h;
    tiny.r = 1e-12;
    CHECK(hertz_power_law(tiny).first < 1e-8 * alpha);

    // Doubling E scales alpha by 2^(-2/3).
    HertzParams stiff = h;
    stiff.e_mod *= 2.0;
    CHECK(hertz_power_law(stiff).first == Catch::Approx(alpha * std::pow(2.0, -2.0 / 3.0)).epsilon(1e-12));

    // Independent route at F = 1 N: contact radius a^3 = 3 F r / (4 E*),
    // area = pi a^2 must equal alpha * F^gamma.
    double e_star = h.e_mod / (1.0 - h.nu * h.nu);
    double a_cubed = 3.0 * 1.0 * h.r / (4.0 * e_star);
    double area = std::numbers::pi * std::pow(a_cubed, 2.0 / 3.0);
    CHECK(alpha * std::pow(1.0, gamma) == Catch::Approx(area).epsilon(1e-10));
}

TEST_CASE("analytic output model: limits, balance point, monotonicity") {
    ContactModelParams p;
    p.alpha = 1e-6;
    p.sigma = 1.0;
    p.l = 1e-3;
    p.r0 = 100.0;
    p.v_cc = 2.0;

    CHECK(analytic_output(0.0, p) == 0.0);
    CHECK(analytic_output(1e15, p) == Catch::Approx(p.v_cc).epsilon(1e-4));

    // Coupling equals l at the divider balance point: phi = v_cc / 2.
    double f_star = std::pow(p.l / (p.r0 * p.sigma * p.alpha), 1.0 / p.gamma);
    CHECK(analytic_output(f_star, p) == Catch::Approx(p.v_cc / 2.0).epsilon(1e-12));

    double prev = -1.0;
    for (double f = 0.0; f <= 50.0; f += 0.5) {
        double phi = analytic_output(f, p);
        CHECK(phi > prev);
        CHECK(phi < p.v_cc);
        prev = phi;
    }

    CHECK_THROWS_AS(analytic_output(-1.0, p), Error);
}

TEST_CASE("higher surface conductivity means higher pre-saturation sensitivity") {
    ContactModelParams lo;
    lo.alpha = 1e-9;  // deep pre-saturation at these forces
    lo.sigma = 1.0;
    lo.l = 1e-3;
    lo.r0 = 10.0;
    ContactModelParams hi = lo;
    hi.sigma = 2.0;
    for (double f : {0.5, 1.0, 2.0, 4.0}) {
        double h = 1e-6;
        double slope_lo = (analytic_output(f + h, lo) - analytic_output(f - h, lo)) / (2 * h);
        double slope_hi = (analytic_output(f + h, hi) - analytic_output(f - h, hi)) / (2 * h);
        CHECK(slope_hi > slope_lo);
    }
}

TEST_CASE("LM fit recovers synthetic parameters") {
    auto samples = synth_samples(2.0, 1.0, -1.0);
    FitParams fit = fit_output_model(samples);
    REQUIRE(fit.converged);
    CHECK(fit.p1 == Catch::Approx(2.0).epsilon(1e-4));
    CHECK(fit.p2 == Catch::Approx(1.0).epsilon(1e-4));
    CHECK(fit.p3 == Catch::Approx(-1.0).epsilon(1e-4));
    CHECK(fit.residual < 1e-6);
}

TEST_CASE("LM fit matches a dense grid-search oracle") {
    auto samples = synth_samples(2.0, 1.0, -1.0);
    FitParams fit = fit_output_model(samples);
    REQUIRE(fit.converged);

    // Exhaustive search over (log p1, log p2, p3).
    double best_cost = 1e300, best_q1 = 0, best_q2 = 0, best_q3 = 0;
    const double step = 0.04;
    for (double q1 = std::log(0.5); q1 <= std::log(8.0); q1 += step) {
        for (double q2 = std::log(0.25); q2 <= std::log(4.0); q2 += step) {
            for (double q3 = -2.0; q3 <= -0.4; q3 += step) {
                double cost = 0.0;
                for (const auto& [f, phi] : samples) {
                    double r = std::exp(q1) / (std::pow(f, q3) + std::exp(q2)) - phi;
                    cost += r * r;
                }
                if (cost < best_cost) {
                    best_cost = cost;
                    best_q1 = q1;
                    best_q2 = q2;
                    best_q3 = q3;
                }
            }
        }
    }
    CHECK(std::abs(std::log(fit.p1) - best_q1) <= step);
    CHECK(std::abs(std::log(fit.p2) - best_q2) <= step);
    CHECK(std::abs(fit.p3 - best_q3) <= step);
}

TEST_CASE("flat data is flagged degenerate") {
    std::vector<std::pair<double, double>> flat;
    for (double f : {0.5, 1.0, 2.0, 4.0, 8.0}) flat.emplace_back(f, 0.7);
    FitParams fit = fit_output_model(flat);
    CHECK(!fit.converged);
}

TEST_CASE("fit preconditions: sample count and distinct positive forces") {
    std::vector<std::pair<double, double>> three{{1, 1}, {2, 1.5}, {3, 1.7}};
    CHECK_THROWS_AS(fit_output_model(three), Error);
    std::vector<std::pair<double, double>> dup{{1, 1}, {2, 1.5}, {2, 1.6}, {3, 1.7}};
    CHECK_THROWS_AS(fit_output_model(dup), Error);
    std::vector<std::pair<double, double>> nonpos{{0.0, 1}, {2, 1.5}, {3, 1.6}, {4, 1.7}};
    CHECK_THROWS_AS(fit_output_model(nonpos), Error);
}

TEST_CASE("refitting a fit's own curve is idempotent") {
    auto samples = synth_samples(1.7, 0.6, -1.4);
    FitParams first = fit_output_model(samples);
    REQUIRE(first.converged);
    std::vector<std::pair<double, double>> regen;
    for (const auto& [f, phi] : samples) regen.emplace_back(f, saturation_output(first, f));
    FitParams second = fit_output_model(regen);
    REQUIRE(second.converged);
    CHECK(second.p1 == Catch::Approx(first.p1).epsilon(1e-8));
    CHECK(second.p2 == Catch::Approx(first.p2).epsilon(1e-8));
    CHECK(second.p3 == Catch::Approx(first.p3).margin(1e-8));
}

TEST_CASE("sensitivity closed form") {
    FitParams p{2.0, 1.0, -1.0, 0.0, true};
    CHECK(sensitivity_metric(p, 2.5) == Catch::Approx(0.16327).margin(1e-5));
    // Exact value: 2 * 2.5^-2 / (2.5^-1 + 1)^2 = 0.163265...
    CHECK(sensitivity_metric(p, 2.5) == Catch::Approx(0.16 / 0.98).epsilon(1e-12));

    FitParams nearly_flat{2.0, 1.0, -1e-9, 0.0, true};
    CHECK(std::abs(sensitivity_metric(nearly_flat, 2.5)) < 1e-8);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> up(0.1, 5.0), un(-3.0, -0.2);
    for (int i = 0; i < 100; ++i) {
        FitParams q{up(rng), up(rng), un(rng), 0.0, true};
        CHECK(sensitivity_metric(q, up(rng)) > 0.0);
    }
}

TEST_CASE("maximum-force closed form and its defining identity") {
    FitParams p{2.0, 1.0, -1.0, 0.0, true};
    double fmax = fmax_metric(p);
    CHECK(fmax == Catch::Approx(9.0).margin(1e-6));
    CHECK(saturation_output(p, fmax) == Catch::Approx(0.9 * p.p1 / p.p2).epsilon(1e-12));

    // phi(FMAX) = 0.9 p1/p2 for random valid parameters.
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> up(0.1, 5.0), un(-3.0, -0.2);
    for (int i = 0; i < 100; ++i) {
        FitParams q{up(rng), up(rng), un(rng), 0.0, true};
        double fm = fmax_metric(q);
        CHECK(saturation_output(q, fm) == Catch::Approx(0.9 * q.p1 / q.p2).epsilon(1e-9));
    }

    // FMAX does not depend on p1.
    FitParams scaled = p;
    scaled.p1 *= 13.0;
    CHECK(fmax_metric(scaled) == fmax);

    FitParams rising{2.0, 1.0, 0.5, 0.0, true};
    try {
        fmax_metric(rising);
        FAIL("expected numerical error for non-saturating fit");
    } catch (const Error& err) {
        CHECK(err.kind() == Error::Kind::numerical);
    }
}

TEST_CASE("spatial resolution from the Gaussian image") {
    int n = 64;
    ReconstructedImage img;
    img.width = img.depth = 60.0;
    img.raster = Eigen::MatrixXd::Zero(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            auto [x, y] = img.cell_center(r, c);
            img.raster(r, c) = std::exp(-(x * x + y * y) / 50.0);
        }
    double sr = spatial_resolution_metric(img);
    CHECK(sr == Catch::Approx(0.80377).margin(img.cell_w() / 60.0 + 1e-6));

    SECTION("point image attains the best resolution") {
        ReconstructedImage point;
        point.width = point.depth = 60.0;
        point.raster = Eigen::MatrixXd::Zero(n, n);
        point.raster(31, 31) = 1.0;
        double diag = std::hypot(point.cell_w(), point.cell_h());
        CHECK(spatial_resolution_metric(point) == Catch::Approx(1.0 - diag / 60.0).margin(1e-9));
    }
    SECTION("full-support image sits at the worst-case bound") {
        ReconstructedImage flat;
        flat.width = flat.depth = 60.0;
        flat.raster = Eigen::MatrixXd::Constant(n, n, 0.5);
        double sr_flat = spatial_resolution_metric(flat);
        double diag = std::hypot(60.0, 60.0);
        CHECK(sr_flat >= 1.0 - diag / 60.0 - 1e-9);
        CHECK(sr_flat <= 1.0 - (diag - 2.0 * std::numbers::sqrt2 * flat.cell_w()) / 60.0);
    }
}

TEST_CASE("position accuracy closed forms") {
    ReconstructedImage img;
    img.width = img.depth = 60.0;
    img.raster = Eigen::MatrixXd::Zero(64, 64);
    img.raster(20, 40) = 1.0;
    auto [cx, cy] = centroid(img);

    CHECK(position_accuracy_metric(img, {cx, cy}) == Catch::Approx(1.0).margin(1e-12));
    // Offset (2, 4): PA = 1 - sqrt(20)/60 = 0.92546.
    CHECK(position_accuracy_metric(img, {cx - 2.0, cy - 4.0}) ==
          Catch::Approx(0.92546).margin(1e-5));
    // Error equal to the sensor width nulls the score.
    CHECK(position_accuracy_metric(img, {cx + 60.0, cy}) == Catch::Approx(0.0).margin(1e-12));
}
