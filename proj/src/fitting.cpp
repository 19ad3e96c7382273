#include "fdm/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace fdm {

Histogram Histogram::build(const std::vector<double>& values, std::size_t bins,
                           double lo, double hi) {
    if (bins == 0 || !(hi > lo))
        throw std::invalid_argument("histogram needs bins > 0 and hi > lo");
    Histogram h;
    h.edges.resize(bins + 1);
    const double w = (hi - lo) / static_cast<double>(bins);
    for (std::size_t i = 0; i <= bins; ++i)
        h.edges[i] = lo + w * static_cast<double>(i);
    h.counts.assign(bins, 0.0);
    for (double v : values) {
        if (v < lo || v > hi) continue;
        std::size_t idx = (v == hi) ? bins - 1
                                    : static_cast<std::size_t>((v - lo) / w);
        if (idx >= bins) idx = bins - 1;
        h.counts[idx] += 1.0;
    }
    return h;
}

Moments moments(const std::vector<double>& v) {
    Moments m;
    m.n = v.size();
    if (v.empty()) return m;
    double s = 0.0;
    for (double x : v) s += x;
    m.mean = s / static_cast<double>(v.size());
    if (v.size() < 2) return m;
    double q = 0.0;
    for (double x : v) q += (x - m.mean) * (x - m.mean);
    m.stddev = std::sqrt(q / static_cast<double>(v.size() - 1));
    return m;
}

namespace {

// model(x, p) and its gradient; p has np entries.
using ModelFn = std::function<double(double x, const double* p, double* grad)>;

bool solve_linear(std::vector<double>& a, std::vector<double>& b, std::size_t m) {
    // Gaussian elimination with partial pivoting on an m x m system.
    for (std::size_t col = 0; col < m; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < m; ++r)
            if (std::abs(a[r * m + col]) > std::abs(a[piv * m + col])) piv = r;
        if (std::abs(a[piv * m + col]) < 1e-300) return false;
        if (piv != col) {
            for (std::size_t c = 0; c < m; ++c) std::swap(a[col * m + c], a[piv * m + c]);
            std::swap(b[col], b[piv]);
        }
        for (std::size_t r = col + 1; r < m; ++r) {
            const double f = a[r * m + col] / a[col * m + col];
            for (std::size_t c = col; c < m; ++c) a[r * m + c] -= f * a[col * m + c];
            b[r] -= f * b[col];
        }
    }
    for (std::size_t ri = m; ri-- > 0;) {
        double s = b[ri];
        for (std::size_t c = ri + 1; c < m; ++c) s -= a[ri * m + c] * b[c];
        b[ri] = s / a[ri * m + ri];
    }
    return true;
}

bool invert_matrix(std::vector<double> a, std::vector<double>& inv, std::size_t m) {
    inv.assign(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i) inv[i * m + i] = 1.0;
    // Gauss-Jordan with partial pivoting.
    for (std::size_t col = 0; col < m; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < m; ++r)
            if (std::abs(a[r * m + col]) > std::abs(a[piv * m + col])) piv = r;
        if (std::abs(a[piv * m + col]) < 1e-300) return false;
        if (piv != col)
            for (std::size_t c = 0; c < m; ++c) {
                std::swap(a[col * m + c], a[piv * m + c]);
                std::swap(inv[col * m + c], inv[piv * m + c]);
            }
        const double d = a[col * m + col];
        for (std::size_t c = 0; c < m; ++c) {
            a[col * m + c] /= d;
            inv[col * m + c] /= d;
        }
        for (std::size_t r = 0; r < m; ++r) {
            if (r == col) continue;
            const double f = a[r * m + col];
            if (f == 0.0) continue;
            for (std::size_t c = 0; c < m; ++c) {
                a[r * m + c] -= f * a[col * m + c];
                inv[r * m + c] -= f * inv[col * m + c];
            }
        }
    }
    return true;
}

struct LmResult {
    std::vector<double> p;
    std::vector<double> perr;
    double chi2 = 0.0;
    std::size_t dof = 0;
    bool converged = false;
};

// Unweighted least squares on (x_i, y_i) with a Levenberg-Marquardt loop.
// `lower`, when non-null, gives per-parameter lower bounds; trial steps that
// cross a bound are rejected like cost increases (keeps Gaussian amplitudes
// from flipping sign and cancelling each other in mixture fits).
LmResult lm_fit(const std::vector<double>& xs, const std::vector<double>& ys,
                std::vector<double> p, const ModelFn& model,
                const std::vector<double>* lower = nullptr) {
    const std::size_t n = xs.size();
    const std::size_t m = p.size();
    std::vector<double> grad(m);

    auto cost_of = [&](const std::vector<double>& pp) {
        double c = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = model(xs[i], pp.data(), nullptr) - ys[i];
            c += r * r;
        }
        return c;
    };

    double lambda = 1e-3;
    double cost = cost_of(p);
    bool converged = false;
    for (int iter = 0; iter < 300 && !converged; ++iter) {
        // Accumulate normal equations.
        std::vector<double> jtj(m * m, 0.0), jtr(m, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double r = model(xs[i], p.data(), grad.data()) - ys[i];
            for (std::size_t a = 0; a < m; ++a) {
                jtr[a] += grad[a] * r;
                for (std::size_t b = a; b < m; ++b) jtj[a * m + b] += grad[a] * grad[b];
            }
        }
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < a; ++b) jtj[a * m + b] = jtj[b * m + a];

        bool accepted = false;
        for (int tries = 0; tries < 12 && !accepted; ++tries) {
            std::vector<double> a_damped = jtj;
            for (std::size_t d = 0; d < m; ++d) {
                const double diag = jtj[d * m + d];
                a_damped[d * m + d] = diag + lambda * (diag > 0 ? diag : 1.0);
            }
            std::vector<double> step(m);
            for (std::size_t d = 0; d < m; ++d) step[d] = -jtr[d];
            if (!solve_linear(a_damped, step, m)) {
                lambda *= 10.0;
                continue;
            }
            std::vector<double> trial(m);
            for (std::size_t d = 0; d < m; ++d) trial[d] = p[d] + step[d];
            bool in_bounds = true;
            if (lower)
                for (std::size_t d = 0; d < m; ++d)
                    if (trial[d] < (*lower)[d]) in_bounds = false;
            if (!in_bounds) {
                lambda *= 4.0;
                continue;
            }
            const double trial_cost = cost_of(trial);
            if (trial_cost <= cost) {
                double rel_step = 0.0;
                for (std::size_t d = 0; d < m; ++d)
                    rel_step = std::max(rel_step,
                                        std::abs(step[d]) /
                                            (std::abs(p[d]) + 1e-12));
                const double rel_drop = (cost - trial_cost) / (cost + 1e-300);
                p = trial;
                cost = trial_cost;
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
                if (rel_step < 1e-10 || rel_drop < 1e-12) converged = true;
            } else {
                lambda *= 4.0;
            }
        }
        if (!accepted) break;  // stuck: lambda climbed without progress
    }

    LmResult res;
    res.p = p;
    res.chi2 = cost;
    res.dof = (n > m) ? n - m : 0;
    res.converged = converged;
    res.perr.assign(m, 0.0);
    // Scaled covariance sqrt(chi2/dof * (J^T J)^-1_aa) at the solution.
    std::vector<double> jtj(m * m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        model(xs[i], p.data(), grad.data());
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b) jtj[a * m + b] += grad[a] * grad[b];
    }
    std::vector<double> cov;
    if (res.dof > 0 && invert_matrix(jtj, cov, m)) {
        const double s2 = cost / static_cast<double>(res.dof);
        for (std::size_t a = 0; a < m; ++a) {
            const double v = s2 * cov[a * m + a];
            res.perr[a] = (v > 0.0) ? std::sqrt(v) : 0.0;
        }
    }
    return res;
}

std::vector<double> bin_centers(const Histogram& h) {
    std::vector<double> xs(h.bins());
    for (std::size_t i = 0; i < h.bins(); ++i) xs[i] = h.center(i);
    return xs;
}

double gauss_model(double x, const double* p, double* grad) {
    const double a = p[0], mu = p[1], sigma = p[2];
    if (sigma == 0.0) {
        if (grad) grad[0] = grad[1] = grad[2] = 0.0;
        return 0.0;
    }
    const double z = (x - mu) / sigma;
    const double e = std::exp(-0.5 * z * z);
    if (grad) {
        grad[0] = e;
        grad[1] = a * e * z / sigma;
        grad[2] = a * e * z * z / sigma;
    }
    return a * e;
}

double gauss2_model(double x, const double* p, double* grad) {
    double g1[3], g2[3];
    const double v = gauss_model(x, p, grad ? g1 : nullptr) +
                     gauss_model(x, p + 3, grad ? g2 : nullptr);
    if (grad)
        for (int i = 0; i < 3; ++i) {
            grad[i] = g1[i];
            grad[3 + i] = g2[i];
        }
    return v;
}

}  // namespace

double GaussFit::area(double bin_width) const {
    return g.amp * std::abs(g.sigma) * std::sqrt(2.0 * M_PI) / bin_width;
}

double GaussFit::area_err(double bin_width) const {
    const double area_v = area(bin_width);
    if (g.amp == 0.0 || g.sigma == 0.0) return 0.0;
    const double ra = g.amp_err / std::abs(g.amp);
    const double rs = g.sigma_err / std::abs(g.sigma);
    return area_v * std::sqrt(ra * ra + rs * rs);
}

GaussFit fit_gauss1(const Histogram& h) {
    const auto xs = bin_centers(h);
    const auto& ys = h.counts;
    double total = 0.0, peak = 0.0;
    std::size_t ipk = 0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
        total += ys[i];
        if (ys[i] > peak) {
            peak = ys[i];
            ipk = i;
        }
    }
    if (total <= 0.0) throw FitError("single-peak fit: histogram is empty");

    // Moment-based width seed around the tallest bin.
    double wsum = 0.0, mu0 = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
        wsum += ys[i];
        mu0 += ys[i] * xs[i];
    }
    mu0 /= wsum;
    double var0 = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i)
        var0 += ys[i] * (xs[i] - mu0) * (xs[i] - mu0);
    var0 /= wsum;
    double sigma0 = std::sqrt(std::max(var0, h.width() * h.width()));

    LmResult r = lm_fit(xs, ys, {peak, xs[ipk], sigma0}, gauss_model);
    if (!r.converged)
        throw FitError("single-peak fit did not converge (chi2=" +
                       std::to_string(r.chi2) + ")");
    GaussFit out;
    out.g = {r.p[0], r.p[1], std::abs(r.p[2]), r.perr[0], r.perr[1], r.perr[2]};
    out.chi2 = r.chi2;
    out.dof = r.dof;
    out.converged = true;
    return out;
}

Gauss2Fit fit_gauss2(const Histogram& h, std::size_t separation_bins) {
    const auto xs = bin_centers(h);
    const std::size_t nb = h.bins();
    if (nb < 8) throw FitError("two-peak fit: too few bins");

    // 3-bin boxcar smoothing for seeding.
    std::vector<double> sm(nb);
    double total = 0.0;
    for (std::size_t i = 0; i < nb; ++i) {
        total += h.counts[i];
        double s = h.counts[i], w = 1.0;
        if (i > 0) {
            s += h.counts[i - 1];
            w += 1.0;
        }
        if (i + 1 < nb) {
            s += h.counts[i + 1];
            w += 1.0;
        }
        sm[i] = s / w;
    }
    if (total <= 0.0) throw FitError("two-peak fit: histogram is empty");

    std::size_t i1 = 0;
    for (std::size_t i = 1; i < nb; ++i)
        if (sm[i] > sm[i1]) i1 = i;

    // Width of a peak in a (possibly residual) smoothed curve, from the
    // half-height span around the given bin.
    auto half_width_sigma = [&](const std::vector<double>& curve, std::size_t ipk) {
        const double half = curve[ipk] * 0.5;
        std::size_t l = ipk, rgt = ipk;
        while (l > 0 && curve[l - 1] > half) --l;
        while (rgt + 1 < nb && curve[rgt + 1] > half) ++rgt;
        const double hwhm = 0.5 * static_cast<double>(rgt - l) * h.width();
        return std::max(hwhm / 1.1774, h.width());
    };
    auto second_candidate = [&](const std::vector<double>& curve) {
        std::size_t i2 = nb;  // sentinel
        double best = 0.0;
        for (std::size_t i = 0; i < nb; ++i) {
            const std::size_t d = (i > i1) ? i - i1 : i1 - i;
            if (d < separation_bins) continue;
            if (curve[i] > best) {
                best = curve[i];
                i2 = i;
            }
        }
        return i2;
    };

    const double range = h.edges.back() - h.edges.front();
    const double sigma1 = half_width_sigma(sm, i1);
    std::vector<std::vector<double>> seeds;

    // Primary seed: subtract the main peak's estimated Gaussian so a tall
    // shoulder of peak 1 cannot masquerade as the second component.
    std::vector<double> resid(nb);
    for (std::size_t i = 0; i < nb; ++i) {
        const double z = (xs[i] - xs[i1]) / sigma1;
        resid[i] = std::max(0.0, sm[i] - sm[i1] * std::exp(-0.5 * z * z));
    }
    if (std::size_t i2 = second_candidate(resid); i2 != nb)
        seeds.push_back({sm[i1], xs[i1], sigma1, std::max(resid[i2], sm[i2]), xs[i2],
                         half_width_sigma(resid, i2)});

    // Fallback 1: tallest smoothed bin at least separation_bins away.
    if (std::size_t i2 = second_candidate(sm); i2 != nb)
        seeds.push_back({sm[i1], xs[i1], range / 40.0, sm[i2], xs[i2], range / 40.0});

    // Fallback 2: count-weighted quartiles, structure-free.
    {
        double cum = 0.0;
        std::size_t q1 = 0, q3 = nb - 1;
        bool got1 = false;
        for (std::size_t i = 0; i < nb; ++i) {
            cum += h.counts[i];
            if (!got1 && cum >= 0.25 * total) {
                q1 = i;
                got1 = true;
            }
            if (cum >= 0.75 * total) {
                q3 = i;
                break;
            }
        }
        if (q3 > q1)
            seeds.push_back({sm[q1], xs[q1], range / 10.0, sm[q3], xs[q3], range / 10.0});
    }
    if (seeds.empty()) throw FitError("two-peak fit: no second component candidate");

    // Amplitudes and widths must stay non-negative; without the bound the
    // optimizer can fall into a diverging +A/-A cancellation pair.
    const std::vector<double> lower = {0.0, -HUGE_VAL, 0.0, 0.0, -HUGE_VAL, 0.0};
    std::string last_error = "two-peak fit did not converge";
    for (const auto& p0 : seeds) {
        LmResult r = lm_fit(xs, h.counts, p0, gauss2_model, &lower);
        if (!r.converged) {
            last_error = "two-peak fit did not converge (chi2=" +
                         std::to_string(r.chi2) + ")";
            continue;
        }
        GaussParams a{r.p[0], r.p[1], std::abs(r.p[2]), r.perr[0], r.perr[1], r.perr[2]};
        GaussParams b{r.p[3], r.p[4], std::abs(r.p[5]), r.perr[3], r.perr[4], r.perr[5]};
        if (a.mu > b.mu) std::swap(a, b);
        if (std::abs(b.mu - a.mu) < h.width()) {
            last_error = "two-peak fit: components collapsed onto one peak";
            continue;
        }
        const double amp_hi = std::max(a.amp, b.amp);
        if (amp_hi <= 0.0 || std::min(a.amp, b.amp) < 1e-4 * amp_hi) {
            last_error = "two-peak fit: one component degenerated to zero";
            continue;
        }
        Gauss2Fit out;
        out.lo = a;
        out.hi = b;
        out.chi2 = r.chi2;
        out.dof = r.dof;
        out.converged = true;
        return out;
    }
    throw FitError(last_error);
}

}  // namespace fdm
