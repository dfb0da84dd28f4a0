#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library's numerical code paths.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "mcid/data.hpp"

namespace oracle {

inline double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa, double fm,
                          double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) return left + right + (left + right - whole) / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

/// Adaptive Simpson on [a, b].
inline double simpson(const std::function<double(double)>& f, double a, double b, double tol = 1e-12) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    return simpson_rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50);
}

/// Integral over [a, b] split into unit panels, which keeps the recursion shallow for wide ranges.
inline double simpson_panels(const std::function<double(double)>& f, double a, double b, double tol = 1e-13) {
    double s = 0.0;
    for (double lo = a; lo < b; lo += 1.0) s += simpson(f, lo, std::min(lo + 1.0, b), tol);
    return s;
}

inline double central_diff(const std::function<double(double)>& f, double x, double h = 1e-6) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline std::vector<double> gradient_fd(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h = 1e-6) {
    std::vector<double> g(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double x0 = x[j];
        x[j] = x0 + h;
        const double fp = f(x);
        x[j] = x0 - h;
        const double fm = f(x);
        x[j] = x0;
        g[j] = (fp - fm) / (2.0 * h);
    }
    return g;
}

/// argmin of f over a uniform grid on [lo, hi].
inline double grid_argmin(const std::function<double(double)>& f, double lo, double hi, double step) {
    double best = lo, fbest = f(lo);
    const auto n = static_cast<long>(std::floor((hi - lo) / step));
    for (long i = 1; i <= n; ++i) {
        const double t = lo + static_cast<double>(i) * step;
        const double v = f(t);
        if (v < fbest) {
            fbest = v;
            best = t;
        }
    }
    return best;
}

/// Random labeled batch with normal covariates and labels from sign(x - theta^T z) flipped with prob `flip`.
inline mcid::LabeledBatch random_batch(std::mt19937_64& rng, std::size_t n, std::size_t d, double flip = 0.2,
                                       std::size_t total = 0) {
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud;
    std::vector<double> theta(d);
    for (auto& t : theta) t = 0.5 * nd(rng);
    mcid::LabeledBatch b = mcid::LabeledBatch::empty_over(d, total == 0 ? n : total);
    std::vector<double> z(d);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& v : z) v = nd(rng);
        const double e = nd(rng);
        double x = e;
        for (std::size_t j = 0; j < d; ++j) x += theta[j] * z[j];
        int y = e >= 0 ? 1 : -1;
        if (ud(rng) < flip) y = -y;
        b.push_back(x, z, y, i);
    }
    return b;
}

}  // namespace oracle

#include "mcid/datagen.hpp"

namespace oracle {

struct RiskPoint {
    double t;
    double risk;
    double se;
};

/// Monte-Carlo weighted 0-1 risk of theta* + t e_j over a grid of t, with gamma from the
/// sample class frequencies. Rows come from the model's own generator.
inline std::vector<RiskPoint> perturbation_profile(const mcid::TruthSpec& truth, std::uint64_t key, std::size_t n,
                                                   std::size_t j, const std::vector<double>& ts) {
    std::vector<double> margin, zj;
    std::vector<int> y;
    margin.reserve(n);
    zj.reserve(n);
    y.reserve(n);
    mcid::generate_rows(truth, key, 0, n, [&](double x, std::span<const double> z, int yi) {
        double lin = 0.0;
        for (std::size_t k = 0; k < z.size(); ++k) lin += truth.theta_star[k] * z[k];
        margin.push_back(x - lin);
        zj.push_back(z[j]);
        y.push_back(yi);
    });
    double pos = 0.0;
    for (int v : y) pos += v > 0;
    const double p = pos / static_cast<double>(n);
    const double wp = 1.0 / p, wm = 1.0 / (1.0 - p);
    std::vector<RiskPoint> out;
    for (double t : ts) {
        double s = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double m = margin[i] - t * zj[i];
            const int pred = m >= 0.0 ? 1 : -1;
            const double l = pred != y[i] ? (y[i] > 0 ? wp : wm) : 0.0;
            s += l;
            s2 += l * l;
        }
        const double mean = s / static_cast<double>(n);
        const double var = s2 / static_cast<double>(n) - mean * mean;
        out.push_back({t, mean, std::sqrt(std::max(var, 0.0) / static_cast<double>(n))});
    }
    return out;
}

/// risk(t = 0) <= risk(t) + 2 SE at every grid point, for three coordinates (two in the support, one outside).
inline bool theta_star_locally_minimal(const mcid::TruthSpec& truth, std::uint64_t key, std::size_t n,
                                       std::string* why = nullptr) {
    std::vector<double> ts;
    for (int i = -10; i <= 10; ++i) ts.push_back(0.05 * i);
    std::vector<std::size_t> coords;
    for (std::size_t k = 0; k < truth.d && coords.size() < 2; ++k) {
        if (truth.theta_star[k] != 0.0) coords.push_back(k);
    }
    for (std::size_t k = 0; k < truth.d; ++k) {
        if (truth.theta_star[k] == 0.0) {
            coords.push_back(k);
            break;
        }
    }
    for (std::size_t j : coords) {
        const auto prof = perturbation_profile(truth, key, n, j, ts);
        const double r0 = prof[10].risk;
        for (const auto& rp : prof) {
            if (r0 > rp.risk + 2.0 * rp.se) {
                if (why) *why = "coordinate " + std::to_string(j) + " t=" + std::to_string(rp.t);
                return false;
            }
        }
    }
    return true;
}

}  // namespace oracle
