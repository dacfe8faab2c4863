// Fits the saturation output model to the analytical electromechanical
// model and prints the two force-domain metrics.

#include <iostream>
#include <vector>

#include "rct/rct.hpp"

int main() {
    rct::HertzParams hertz{2.5e-3, 0.49, 0.35e6};  // 5 mm ball on a soft detector
    auto [alpha, gamma] = rct::hertz_power_law(hertz);

    rct::ContactModelParams model;
    model.alpha = alpha;
    model.gamma = gamma;
    model.sigma = 0.2273;  // S/m
    model.l = 1e-3;
    model.r0 = 500.0;
    model.v_cc = 2.0;

    std::vector<std::pair<double, double>> samples;
    for (double f = 0.25; f <= 5.0; f += 0.25)
        samples.emplace_back(f, rct::analytic_output(f, model));

    rct::FitParams fit = rct::fit_output_model(samples);
    std::cout << "fit: p1=" << rct::fmt9(fit.p1) << " p2=" << rct::fmt9(fit.p2)
              << " p3=" << rct::fmt9(fit.p3) << " converged=" << fit.converged << '\n';
    double f_h = 2.5;  // half of the 5 N maximum load
    std::cout << "SENS(F_h=2.5) = " << rct::fmt9(rct::sensitivity_metric(fit, f_h)) << " V/N\n";
    std::cout << "FMAX = " << rct::fmt9(rct::fmax_metric(fit)) << " N\n";
    return 0;
}
