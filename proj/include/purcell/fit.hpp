#ifndef PURCELL_FIT_HPP
#define PURCELL_FIT_HPP

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace purcell {

struct FitResult {
    std::vector<double> params;        // model-specific order, see fit_* docs
    std::vector<double> uncertainties; // 1-sigma from the Jacobian, nonnegative
    Eigen::MatrixXd covariance;
    double residual_norm = 0.0;
    bool converged = false;
    int iterations = 0;
};

namespace detail {

// Damped Gauss-Newton on pre-normalized data (callers scale x and y to O(1)
// first; raw lab units put 1e-9 s next to 1e8 counts/s and J^T J becomes
// numerically singular). Levenberg damping on the identity, gradient
// convergence test relative to the current cost.
template <class Model, class Jac>
struct GaussNewton {
    Eigen::VectorXd p;
    bool converged = false;
    int iterations = 0;
    double cost = 0.0;
    Eigen::MatrixXd jtj;

    GaussNewton(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                Eigen::VectorXd p0, Model model, Jac jac,
                int max_iter = 200, double gtol = 1e-10) {
        p = std::move(p0);
        const int n = static_cast<int>(p.size());
        Eigen::VectorXd r = y - model(x, p);
        cost = r.squaredNorm();
        double lambda = 1e-3;
        Eigen::MatrixXd J;
        for (iterations = 0; iterations < max_iter; ++iterations) {
            J = jac(x, p);
            jtj = J.transpose() * J;
            Eigen::VectorXd grad = J.transpose() * r;
            if (grad.cwiseAbs().maxCoeff() <= gtol * std::max(1.0, cost)) {
                converged = true;
                return;
            }
            bool stepped = false;
            for (int attempt = 0; attempt < 40; ++attempt) {
                Eigen::MatrixXd damped = jtj + lambda * Eigen::MatrixXd::Identity(n, n);
                Eigen::VectorXd dp = damped.ldlt().solve(grad);
                if (!dp.allFinite()) { lambda *= 10.0; continue; }
                Eigen::VectorXd pn = p + dp;
                Eigen::VectorXd rn = y - model(x, pn);
                double cn = rn.squaredNorm();
                if (std::isfinite(cn) && cn < cost) {
                    p = pn;
                    r = rn;
                    cost = cn;
                    lambda = std::max(lambda * 0.3, 1e-14);
                    stepped = true;
                    break;
                }
                lambda *= 10.0;
            }
            if (!stepped) return; // stuck: report non-convergence honestly
        }
    }
};

inline void check_xy(const std::vector<double>& x, const std::vector<double>& y,
                     std::size_t min_samples, const char* who) {
    if (x.size() != y.size())
        throw std::invalid_argument(std::string(who) + ": x and y lengths differ");
    if (x.size() < min_samples)
        throw std::invalid_argument(std::string(who) + ": need at least " +
                                    std::to_string(min_samples) + " samples");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
            throw std::invalid_argument(std::string(who) + ": non-finite sample");
}

// covariance in original units from the scaled-space J^T J
inline void finish_result(FitResult& out, const Eigen::MatrixXd& jtj, double cost,
                          std::size_t m, const std::vector<double>& scales) {
    const int n = static_cast<int>(scales.size());
    out.covariance = Eigen::MatrixXd::Zero(n, n);
    out.uncertainties.assign(n, 0.0);
    if (m > static_cast<std::size_t>(n)) {
        double sigma2 = cost / static_cast<double>(m - n);
        Eigen::MatrixXd inv = jtj.ldlt().solve(Eigen::MatrixXd::Identity(n, n));
        if (inv.allFinite()) {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    out.covariance(i, j) = sigma2 * inv(i, j) * scales[i] * scales[j];
            for (int i = 0; i < n; ++i)
                out.uncertainties[i] = std::sqrt(std::max(0.0, out.covariance(i, i)));
        }
    }
}

} // namespace detail

// y = A exp(-x/T) + B, params ordered {A, T, B}. Samples with
// x < window_start are dropped before fitting so a non-exponential transient
// at the start of a decay record can be excluded.
inline FitResult fit_exponential(const std::vector<double>& x_in,
                                 const std::vector<double>& y_in,
                                 double window_start = -std::numeric_limits<double>::infinity()) {
    detail::check_xy(x_in, y_in, 1, "fit_exponential");
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < x_in.size(); ++i) {
        if (x_in[i] >= window_start) {
            xs.push_back(x_in[i]);
            ys.push_back(y_in[i]);
        }
    }
    if (xs.size() < 4)
        throw std::invalid_argument("fit_exponential: need at least 4 samples after window_start");

    const std::size_t m = xs.size();
    double xmin = xs[0], xmax = xs[0], ymax = 0.0, ylo = ys[0], yhi = ys[0];
    for (std::size_t i = 0; i < m; ++i) {
        xmin = std::min(xmin, xs[i]);
        xmax = std::max(xmax, xs[i]);
        ymax = std::max(ymax, std::abs(ys[i]));
        ylo = std::min(ylo, ys[i]);
        yhi = std::max(yhi, ys[i]);
    }
    if (ymax == 0.0 || yhi - ylo <= 1e-14 * std::max(1.0, ymax))
        throw std::invalid_argument("fit_exponential: degenerate data (y is constant)");
    const double sx = xmax - xmin;
    if (sx <= 0.0)
        throw std::invalid_argument("fit_exponential: x has zero span");
    const double sy = ymax;

    Eigen::VectorXd xn(m), yn(m);
    for (std::size_t i = 0; i < m; ++i) {
        xn[i] = (xs[i] - xmin) / sx;
        yn[i] = ys[i] / sy;
    }

    // init: baseline from the smallest sample, then log-linear regression on
    // the subtracted tail (points within 0.1% of the baseline carry no slope
    // information and would dominate the logs, so they are skipped)
    double b0 = yn.minCoeff();
    double smax = (yn.array() - b0).maxCoeff();
    double sxx = 0, sxy = 0, sx1 = 0, sy1 = 0;
    int cnt = 0;
    for (std::size_t i = 0; i < m; ++i) {
        double s = yn[i] - b0;
        if (s > 1e-3 * smax) {
            double ly = std::log(s);
            sx1 += xn[i]; sy1 += ly; sxx += xn[i] * xn[i]; sxy += xn[i] * ly;
            ++cnt;
        }
    }
    double t0 = 1.0, a0 = yn[0] - b0;
    if (cnt >= 2) {
        double denom = cnt * sxx - sx1 * sx1;
        if (denom != 0.0) {
            double slope = (cnt * sxy - sx1 * sy1) / denom;
            double inter = (sy1 - slope * sx1) / cnt;
            if (slope < 0.0) {
                t0 = -1.0 / slope;
                a0 = std::exp(inter);
            }
        }
    }

    auto model = [](const Eigen::VectorXd& x, const Eigen::VectorXd& p) {
        return (p[0] * (-x.array() / p[1]).exp() + p[2]).matrix().eval();
    };
    auto jac = [](const Eigen::VectorXd& x, const Eigen::VectorXd& p) {
        Eigen::MatrixXd J(x.size(), 3);
        Eigen::ArrayXd e = (-x.array() / p[1]).exp();
        J.col(0) = e.matrix();
        J.col(1) = (p[0] * e * x.array() / (p[1] * p[1])).matrix();
        J.col(2) = Eigen::VectorXd::Ones(x.size());
        return J;
    };

    Eigen::VectorXd p0(3);
    p0 << a0, t0, b0;
    detail::GaussNewton gn(xn, yn, p0, model, jac);

    FitResult out;
    out.converged = gn.converged;
    out.iterations = gn.iterations;
    out.residual_norm = std::sqrt(gn.cost) * sy;
    // un-shift: A' exp(-(x - xmin)/T) = [A' exp(xmin/T)] exp(-x/T)
    double t_fit = gn.p[1] * sx;
    double shift = std::exp(std::min(xmin / t_fit, 700.0));
    double a_fit = gn.p[0] * sy * shift;
    out.params = {a_fit, t_fit, gn.p[2] * sy};
    detail::finish_result(out, gn.jtj, gn.cost, m, {sy * shift, sx, sy});
    return out;
}

// y = A (w/2)^2 / ((x - x0)^2 + (w/2)^2) + B, params ordered {A, x0, w, B}.
// The peak must sit inside the grid and both half-maximum crossings must be
// sampled; otherwise the initial width is meaningless and the routine throws
// instead of returning a quietly wrong line.
inline FitResult fit_lorentzian(const std::vector<double>& x_in,
                                const std::vector<double>& y_in) {
    detail::check_xy(x_in, y_in, 5, "fit_lorentzian");
    const std::size_t m = x_in.size();

    double ymax = 0.0, ylo = y_in[0], yhi = y_in[0];
    std::size_t imax = 0;
    for (std::size_t i = 0; i < m; ++i) {
        ymax = std::max(ymax, std::abs(y_in[i]));
        ylo = std::min(ylo, y_in[i]);
        if (y_in[i] > yhi) { yhi = y_in[i]; imax = i; }
    }
    if (ymax == 0.0 || yhi - ylo <= 1e-14 * std::max(1.0, ymax))
        throw std::invalid_argument("fit_lorentzian: degenerate data (y is constant)");
    if (imax == 0 || imax == m - 1)
        throw std::runtime_error("fit_lorentzian: peak is not interior to the grid");

    const double half = ylo + 0.5 * (yhi - ylo);
    auto cross = [&](std::ptrdiff_t from, std::ptrdiff_t step) -> double {
        for (std::ptrdiff_t i = from; i + step >= 0 && i + step < static_cast<std::ptrdiff_t>(m); i += step) {
            double ya = y_in[i], yb = y_in[i + step];
            if ((ya - half) * (yb - half) <= 0.0 && ya != yb) {
                double f = (ya - half) / (ya - yb);
                return x_in[i] + f * (x_in[i + step] - x_in[i]);
            }
        }
        return std::numeric_limits<double>::quiet_NaN();
    };
    double xr = cross(static_cast<std::ptrdiff_t>(imax), +1);
    double xl = cross(static_cast<std::ptrdiff_t>(imax), -1);
    if (!std::isfinite(xl) || !std::isfinite(xr) || xr <= xl)
        throw std::runtime_error("fit_lorentzian: grid does not span the peak's half maximum");

    const double x0_init = x_in[imax];
    const double sx = xr - xl; // FWHM-scale normalization
    const double sy = ymax;

    Eigen::VectorXd xn(m), yn(m);
    for (std::size_t i = 0; i < m; ++i) {
        xn[i] = (x_in[i] - x0_init) / sx;
        yn[i] = y_in[i] / sy;
    }

    auto model = [](const Eigen::VectorXd& x, const Eigen::VectorXd& p) {
        double h = 0.25 * p[2] * p[2];
        return (p[0] * h / ((x.array() - p[1]).square() + h) + p[3]).matrix().eval();
    };
    auto jac = [](const Eigen::VectorXd& x, const Eigen::VectorXd& p) {
        Eigen::MatrixXd J(x.size(), 4);
        double h = 0.25 * p[2] * p[2];
        Eigen::ArrayXd dx = x.array() - p[1];
        Eigen::ArrayXd D = dx.square() + h;
        J.col(0) = (h / D).matrix();
        J.col(1) = (p[0] * h * 2.0 * dx / D.square()).matrix();
        J.col(2) = (p[0] * 0.5 * p[2] * dx.square() / D.square()).matrix();
        J.col(3) = Eigen::VectorXd::Ones(x.size());
        return J;
    };

    Eigen::VectorXd p0(4);
    p0 << (yhi - ylo) / sy, 0.0, 1.0, ylo / sy;
    detail::GaussNewton gn(xn, yn, p0, model, jac);

    FitResult out;
    out.converged = gn.converged;
    out.iterations = gn.iterations;
    out.residual_norm = std::sqrt(gn.cost) * sy;
    out.params = {gn.p[0] * sy, x0_init + gn.p[1] * sx, std::abs(gn.p[2]) * sx, gn.p[3] * sy};
    detail::finish_result(out, gn.jtj, gn.cost, m, {sy, sx, sx, sy});
    return out;
}

} // namespace purcell

#endif
