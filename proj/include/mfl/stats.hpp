#pragma once

#include <span>

namespace mfl {

/// Ordinary least squares y = intercept + slope x with classical standard errors.
struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double intercept_se = 0.0;
    int n = 0;
};

LinearFit fit_line(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> v);
/// Standard error of the mean (sample std / sqrt(n)); 0 for n < 2.
double standard_error(std::span<const double> v);

}  // namespace mfl
