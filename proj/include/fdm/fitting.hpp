#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace fdm {

// Thrown when an iterative fit fails to converge; message carries diagnostics.
struct FitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Histogram {
    std::vector<double> edges;   // size bins + 1, uniform
    std::vector<double> counts;  // size bins

    static Histogram build(const std::vector<double>& values, std::size_t bins,
                           double lo, double hi);
    double center(std::size_t i) const { return 0.5 * (edges[i] + edges[i + 1]); }
    double width() const { return edges[1] - edges[0]; }
    std::size_t bins() const { return counts.size(); }
};

struct GaussParams {
    double amp = 0.0;
    double mu = 0.0;
    double sigma = 0.0;
    double amp_err = 0.0;
    double mu_err = 0.0;
    double sigma_err = 0.0;

    double fwhm() const { return 2.354820045030949 * sigma; }
    double fwhm_err() const { return 2.354820045030949 * sigma_err; }
};

struct GaussFit {
    GaussParams g;
    double chi2 = 0.0;
    std::size_t dof = 0;
    bool converged = false;
    // Fitted counts under the Gaussian, in events (area / bin width).
    double area(double bin_width) const;
    double area_err(double bin_width) const;
};

struct Gauss2Fit {
    GaussParams lo;   // component with the smaller mu
    GaussParams hi;   // component with the larger mu
    double chi2 = 0.0;
    std::size_t dof = 0;
    bool converged = false;
};

// Least-squares single-Gaussian fit to histogram counts vs bin centers
// (Levenberg-Marquardt, analytic Jacobian). Parameter uncertainties are the
// usual scaled-covariance estimates sqrt(chi2/dof * (J^T J)^-1_ii).
// Throws FitError on non-convergence or degenerate input.
GaussFit fit_gauss1(const Histogram& h);

// Two-Gaussian mixture fit. Components are seeded from the two dominant
// local maxima of a 3-bin boxcar smoothing of the counts (the second seed is
// the tallest bin at least `separation_bins` away from the first) and
// reported sorted by mu.
Gauss2Fit fit_gauss2(const Histogram& h, std::size_t separation_bins = 15);

// Sample mean / standard deviation (n-1 normalization for n > 1).
struct Moments {
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t n = 0;
};
Moments moments(const std::vector<double>& v);

}  // namespace fdm
