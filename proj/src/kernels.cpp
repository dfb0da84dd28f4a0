#include "mcid/kernels.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "mcid/errors.hpp"

namespace mcid {
namespace {

// E[t^{2r}] for t ~ N(0, 1), i.e. (2r - 1)!!.
double gaussian_even_moment(int r) {
    double m = 1.0;
    for (int k = 1; k <= r; ++k) m *= static_cast<double>(2 * k - 1);
    return m;
}

// Coefficients of P(t^2) with int P(t^2) phi = 1 and int t^{2j} P(t^2) phi = 0, 1 <= 2j <= order.
std::vector<double> solve_moment_system(int order) {
    const int m = order / 2;
    const int size = m + 1;
    std::vector<double> a(static_cast<std::size_t>(size * size));
    std::vector<double> rhs(static_cast<std::size_t>(size), 0.0);
    rhs[0] = 1.0;
    for (int j = 0; j < size; ++j) {
        for (int k = 0; k < size; ++k) a[static_cast<std::size_t>(j * size + k)] = gaussian_even_moment(j + k);
    }
    // Gaussian elimination with partial pivoting; the system is at most a handful of rows.
    for (int col = 0; col < size; ++col) {
        int pivot = col;
        for (int r = col + 1; r < size; ++r) {
            if (std::abs(a[static_cast<std::size_t>(r * size + col)]) >
                std::abs(a[static_cast<std::size_t>(pivot * size + col)])) {
                pivot = r;
            }
        }
        if (pivot != col) {
            for (int k = 0; k < size; ++k) {
                std::swap(a[static_cast<std::size_t>(col * size + k)], a[static_cast<std::size_t>(pivot * size + k)]);
            }
            std::swap(rhs[static_cast<std::size_t>(col)], rhs[static_cast<std::size_t>(pivot)]);
        }
        const double diag = a[static_cast<std::size_t>(col * size + col)];
        for (int r = col + 1; r < size; ++r) {
            const double f = a[static_cast<std::size_t>(r * size + col)] / diag;
            for (int k = col; k < size; ++k) {
                a[static_cast<std::size_t>(r * size + k)] -= f * a[static_cast<std::size_t>(col * size + k)];
            }
            rhs[static_cast<std::size_t>(r)] -= f * rhs[static_cast<std::size_t>(col)];
        }
    }
    std::vector<double> coef(static_cast<std::size_t>(size));
    for (int r = size - 1; r >= 0; --r) {
        double s = rhs[static_cast<std::size_t>(r)];
        for (int k = r + 1; k < size; ++k) s -= a[static_cast<std::size_t>(r * size + k)] * coef[static_cast<std::size_t>(k)];
        coef[static_cast<std::size_t>(r)] = s / a[static_cast<std::size_t>(r * size + r)];
    }
    return coef;
}

double default_gaussian_tail_coefficient() { return std::sqrt(std::log(2000.0)); }

void check_delta(double delta) {
    if (!(delta > 0.0)) throw ArgumentError("bandwidth delta must be positive");
}

}  // namespace

KernelSpec::KernelSpec(KernelFamily family, int order, std::vector<double> poly, double tail_coefficient)
    : family_(family), order_(order), poly_(std::move(poly)), tail_coefficient_(tail_coefficient) {}

KernelSpec KernelSpec::gaussian() {
    return KernelSpec(KernelFamily::gaussian, 1, {1.0}, default_gaussian_tail_coefficient());
}

KernelSpec KernelSpec::epanechnikov() { return KernelSpec(KernelFamily::epanechnikov, 1, {}, 2.0); }

KernelSpec KernelSpec::higher_order(int order) {
    if (order < 1) throw ArgumentError("kernel order must be a positive integer");
    if (order > 12) throw ArgumentError("kernel order above 12 is not supported");
    if (order == 1) return gaussian();
    return KernelSpec(KernelFamily::higher_order, order, solve_moment_system(order),
                      default_gaussian_tail_coefficient());
}

KernelSpec KernelSpec::from_name(std::string_view name, int order) {
    if (name == "gaussian") return gaussian();
    if (name == "epanechnikov") return epanechnikov();
    if (name == "higher_order") return higher_order(order);
    throw ArgumentError("unknown kernel '" + std::string(name) + "' (expected gaussian, epanechnikov, higher_order)");
}

KernelSpec KernelSpec::with_tail_coefficient(double c) const {
    if (!(c > 0.0)) throw ArgumentError("tail coefficient must be positive");
    KernelSpec out = *this;
    out.tail_coefficient_ = c;
    return out;
}

std::string KernelSpec::name() const {
    switch (family_) {
        case KernelFamily::gaussian: return "gaussian";
        case KernelFamily::epanechnikov: return "epanechnikov";
        case KernelFamily::higher_order: return "higher_order(" + std::to_string(order_) + ")";
    }
    return "unknown";
}

double KernelSpec::upper_tail(double t) const noexcept {
    switch (family_) {
        case KernelFamily::gaussian:
            return 0.5 * std::erfc(t * 0.70710678118654752440);
        case KernelFamily::epanechnikov:
            if (t <= -1.0) return 1.0;
            if (t >= 1.0) return 0.0;
            return 0.5 - 0.75 * t + 0.25 * t * t * t;
        case KernelFamily::higher_order: {
            // I_0 = Q(t), I_k = t^{2k-1} phi(t) + (2k-1) I_{k-1}  where I_k = int_t^inf s^{2k} phi(s) ds.
            const double phi = kInvSqrt2Pi * std::exp(-0.5 * t * t);
            double ik = 0.5 * std::erfc(t * 0.70710678118654752440);
            double tpow = t;  // t^{2k-1}
            double sum = poly_[0] * ik;
            for (std::size_t k = 1; k < poly_.size(); ++k) {
                ik = tpow * phi + static_cast<double>(2 * k - 1) * ik;
                sum += poly_[k] * ik;
                tpow *= t * t;
            }
            return sum;
        }
    }
    return 0.0;
}

double surrogate_loss(double u, double delta, const KernelSpec& kernel) {
    check_delta(delta);
    return kernel.upper_tail(u / delta);
}

double surrogate_loss_deriv(double u, double delta, const KernelSpec& kernel) {
    check_delta(delta);
    return -kernel.density(u / delta) / delta;
}

double KernelReport::max_residual() const {
    double r = mass.residual();
    for (const auto& m : moments) r = std::max(r, m.residual());
    return r;
}

KernelReport verify_kernel(const KernelSpec& kernel) {
    using Integrator = boost::math::quadrature::gauss_kronrod<double, 61>;
    constexpr double kTol = 1e-13;
    constexpr unsigned kDepth = 20;
    const double lo = kernel.bounded() ? kernel.support_lo() : -40.0;
    const double hi = kernel.bounded() ? kernel.support_hi() : 40.0;

    // Split at zero so each piece is smooth (the Epanechnikov kernel is smooth on its support anyway).
    auto integrate = [&](auto&& f, double a, double b) {
        if (a < 0.0 && b > 0.0) {
            return Integrator::integrate(f, a, 0.0, kDepth, kTol) + Integrator::integrate(f, 0.0, b, kDepth, kTol);
        }
        return Integrator::integrate(f, a, b, kDepth, kTol);
    };

    KernelReport report;
    report.kernel = kernel.name();
    report.mass = {0, integrate([&](double t) { return kernel.density(t); }, lo, hi), 1.0};
    for (int j = 1; j <= kernel.order(); ++j) {
        const double v = integrate([&](double t) { return std::pow(t, j) * kernel.density(t); }, lo, hi);
        report.moments.push_back({j, v, 0.0});
    }
    report.l2_norm_sq = integrate([&](double t) { const double k = kernel.density(t); return k * k; }, lo, hi);

    const double tail_start = kernel.tail_coefficient() / 2.0;
    report.tail_mass = tail_start >= hi ? 0.0
                                        : integrate([&](double t) { return std::abs(kernel.density(t)); },
                                                    std::max(tail_start, lo), hi);

    double sup = std::abs(kernel.density(0.0));
    for (double t = -12.0; t <= 12.0; t += 1e-3) sup = std::max(sup, std::abs(kernel.density(t)));
    report.sup_abs = sup;
    return report;
}

}  // namespace mcid
