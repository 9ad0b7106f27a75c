/**
 * @file analysis.hpp
 * @brief Least-squares fits of the Rabi, Ramsey, Lorentzian and exponential
 * models, and a spectral frequency estimator.
 *
 * Decay constants are fitted as rates (1/T) so that "no decay" is an
 * interior point; results report T = 1/rate with sigma_T = sigma_rate/rate^2.
 */
#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>
#include <unsupported/Eigen/LevenbergMarquardt>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "singletsim/errors.hpp"

namespace singletsim {

inline constexpr int kFitIterationCap = 200;
inline constexpr double kFitTolerance = 1e-12;

// ============================================================================
// Results
// ============================================================================

struct FitParameter {
    std::string name;
    double value = 0.0;
    double sigma = 0.0;
    bool fixed = false;
};

struct FitResult {
    std::string model;
    std::vector<FitParameter> params;
    double rss = 0.0;
    double reduced_chi2 = 0.0;
    int dof = 0;
    bool converged = false;
    bool flat = false;
    int iterations = 0;
    std::string message;
    Eigen::MatrixXd covariance;  ///< over the internal (rate) parameterization

    [[nodiscard]] const FitParameter& param(const std::string& name) const {
        for (const auto& p : params) {
            if (p.name == name) return p;
        }
        throw InputError("fit has no parameter named " + name);
    }
    [[nodiscard]] double value(const std::string& name) const { return param(name).value; }
    [[nodiscard]] double sigma(const std::string& name) const { return param(name).sigma; }
};

/// Optional controls: known noise level for chi-square, fixed parameters
/// (by reported name, with their values), and starting values.
struct FitOptions {
    std::optional<double> noise_sigma;
    std::vector<std::pair<std::string, double>> fixed;
    std::vector<std::pair<std::string, double>> initial;
};

enum class RabiMode { sin2, cos2 };
enum class RamseySign { plus, minus };

// ============================================================================
// Model functions
// ============================================================================

/// A [sin^2(pi f t) + c] exp(-t/T), or cos^2 in place of sin^2.
[[nodiscard]] inline double rabi_model(double t, double a, double f, double c, double t_rabi,
                                       RabiMode mode) {
    const double s = std::sin(std::numbers::pi * f * t);
    const double osc = mode == RabiMode::sin2 ? s * s : 1.0 - s * s;
    return a * (osc + c) * std::exp(-t / t_rabi);
}

/// A [+-cos(2 pi f t - phi) exp(-t/T2) + c] exp(-t/TS).
[[nodiscard]] inline double ramsey_model(double t, double a, double f, double phi, double c,
                                         double t2, double ts, RamseySign sign) {
    const double sg = sign == RamseySign::plus ? 1.0 : -1.0;
    return a * (sg * std::cos(2.0 * std::numbers::pi * f * t - phi) * std::exp(-t / t2) + c) *
           std::exp(-t / ts);
}

/// h (w/2)^2 / ((x - x0)^2 + (w/2)^2) + b.
[[nodiscard]] inline double lorentzian_model(double x, double x0, double fwhm, double h, double b) {
    const double q = 0.25 * fwhm * fwhm;
    return h * q / ((x - x0) * (x - x0) + q) + b;
}

/// A exp(-t/T) + c.
[[nodiscard]] inline double exponential_model(double t, double a, double tau, double c) {
    return a * std::exp(-t / tau) + c;
}

// ============================================================================
// Spectral frequency estimate
// ============================================================================

struct FrequencyEstimate {
    double frequency_hz = 0.0;
    double peak_magnitude = 0.0;
    double bin_width_hz = 0.0;  ///< natural resolution 1/(N dt)
};

[[nodiscard]] inline double uniform_spacing(const std::vector<double>& t) {
    if (t.size() < 2) throw InputError("need at least two samples");
    const double dt = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
    if (!(dt > 0.0)) throw InputError("samples must be strictly increasing");
    for (std::size_t k = 1; k < t.size(); ++k) {
        if (std::abs((t[k] - t[k - 1]) - dt) > 1e-6 * dt) {
            throw InputError("samples must be uniformly spaced");
        }
    }
    return dt;
}

/**
 * Dominant nonzero frequency of uniformly sampled data: mean removed, 8x
 * zero-padded FFT, parabolic interpolation of the magnitude peak. The peak is
 * located on the spectrum weighted by |2 sin(pi f dt)| (the first-difference
 * response), which suppresses decay envelopes, then refined on the plain
 * magnitude. Empty when the data carry no resolvable oscillation (flat, or
 * peak below half a cycle over the record).
 */
[[nodiscard]] inline std::optional<FrequencyEstimate> estimate_frequency(
    const std::vector<double>& t, const std::vector<double>& y) {
    if (t.size() != y.size()) throw InputError("time and value lengths differ");
    if (t.size() < 8) throw InputError("frequency estimate needs at least 8 samples");
    const double dt = uniform_spacing(t);
    const std::size_t n = y.size();

    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : y) var += (v - mean) * (v - mean);
    const double rms = std::sqrt(var / static_cast<double>(n));
    if (rms <= 1e-12 * std::max(1.0, std::abs(mean))) return std::nullopt;

    std::size_t padded = 1;
    while (padded < 8 * n) padded <<= 1;
    std::vector<double> buf(padded, 0.0);
    for (std::size_t k = 0; k < n; ++k) buf[k] = y[k] - mean;
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, buf);

    const std::size_t half = padded / 2;
    std::vector<double> mag(half + 1);
    for (std::size_t k = 0; k <= half; ++k) mag[k] = std::abs(spec[k]);
    const double df = 1.0 / (static_cast<double>(padded) * dt);
    std::size_t peak = 1;
    double best = -1.0;
    for (std::size_t k = 1; k < half; ++k) {
        const double w = mag[k] * std::sin(std::numbers::pi * static_cast<double>(k) * df * dt);
        if (w > best) {
            best = w;
            peak = k;
        }
    }
    while (peak > 1 && mag[peak - 1] > mag[peak]) --peak;
    while (peak + 1 < half && mag[peak + 1] > mag[peak]) ++peak;
    double offset = 0.0;
    if (peak > 0 && peak < half) {
        const double a = mag[peak - 1], b = mag[peak], c = mag[peak + 1];
        const double den = a - 2.0 * b + c;
        if (den < 0.0) offset = 0.5 * (a - c) / den;
    }
    const double span = static_cast<double>(n) * dt;
    FrequencyEstimate est{(static_cast<double>(peak) + offset) * df, mag[peak], 1.0 / span};
    if (est.frequency_hz < 0.5 / span) return std::nullopt;
    return est;
}

// ============================================================================
// Generic damped least squares
// ============================================================================

namespace detail {

/// Model over an internal parameter vector with analytic Jacobian.
struct ModelSpec {
    std::string name;
    std::vector<std::string> internal_names;
    std::function<double(double, const Eigen::VectorXd&)> value;
    std::function<void(double, const Eigen::VectorXd&, Eigen::Ref<Eigen::RowVectorXd>)> gradient;
};

struct LmFunctor : Eigen::DenseFunctor<double> {
    const ModelSpec& spec;
    const std::vector<double>& x;
    const std::vector<double>& y;
    Eigen::VectorXd full;           // all parameters, fixed ones preset
    std::vector<int> free_index;    // internal index of each free parameter

    LmFunctor(const ModelSpec& s, const std::vector<double>& xs, const std::vector<double>& ys,
              Eigen::VectorXd start, std::vector<int> free)
        : DenseFunctor<double>(static_cast<int>(free.size()), static_cast<int>(xs.size())),
          spec(s), x(xs), y(ys), full(std::move(start)), free_index(std::move(free)) {}

    [[nodiscard]] Eigen::VectorXd expand(const Eigen::VectorXd& p) const {
        Eigen::VectorXd out = full;
        for (std::size_t k = 0; k < free_index.size(); ++k) {
            out(free_index[k]) = p(static_cast<Eigen::Index>(k));
        }
        return out;
    }

    int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& r) const {
        const Eigen::VectorXd q = expand(p);
        for (std::size_t i = 0; i < x.size(); ++i) {
            r(static_cast<Eigen::Index>(i)) = spec.value(x[i], q) - y[i];
        }
        return 0;
    }

    int df(const Eigen::VectorXd& p, Eigen::MatrixXd& jac) const {
        const Eigen::VectorXd q = expand(p);
        Eigen::RowVectorXd g(q.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            spec.gradient(x[i], q, g);
            for (std::size_t k = 0; k < free_index.size(); ++k) {
                jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = g(free_index[k]);
            }
        }
        return 0;
    }
};

struct RawFit {
    Eigen::VectorXd params;
    Eigen::MatrixXd covariance;  // internal, zero rows/cols for fixed
    double rss = 0.0;
    int dof = 0;
    bool converged = false;
    int iterations = 0;
    std::string message;
};

[[nodiscard]] inline double rss_of(const ModelSpec& spec, const std::vector<double>& x,
                                   const std::vector<double>& y, const Eigen::VectorXd& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = spec.value(x[i], p) - y[i];
        s += r * r;
    }
    return s;
}

inline RawFit levenberg_marquardt(const ModelSpec& spec, const std::vector<double>& x,
                                  const std::vector<double>& y, const Eigen::VectorXd& start,
                                  const std::vector<bool>& fixed) {
    std::vector<int> free;
    for (int k = 0; k < static_cast<int>(start.size()); ++k) {
        if (!fixed[static_cast<std::size_t>(k)]) free.push_back(k);
    }
    const int n_free = static_cast<int>(free.size());
    RawFit out;
    out.dof = static_cast<int>(x.size()) - n_free;
    if (out.dof < 1) throw InputError("not enough samples for the number of free parameters");

    LmFunctor functor(spec, x, y, start, free);
    Eigen::VectorXd p(n_free);
    for (int k = 0; k < n_free; ++k) p(k) = start(free[static_cast<std::size_t>(k)]);

    Eigen::LevenbergMarquardt<LmFunctor> lm(functor);
    lm.setFtol(kFitTolerance);
    lm.setXtol(kFitTolerance);
    lm.setGtol(0.0);
    lm.setMaxfev(100 * kFitIterationCap);

    const double y_scale = std::max(1e-300, Eigen::Map<const Eigen::VectorXd>(
                                                y.data(), static_cast<Eigen::Index>(y.size()))
                                                .cwiseAbs()
                                                .maxCoeff());
    using Status = Eigen::LevenbergMarquardtSpace::Status;
    Status status = lm.minimizeInit(p);
    int iter = 0;
    if (status == Status::ImproperInputParameters) {
        out.message = "invalid least-squares setup";
    } else if (lm.fnorm() <= 1e-15 * y_scale) {
        status = Status::RelativeErrorTooSmall;
    } else {
        while (iter < kFitIterationCap) {
            status = lm.minimizeOneStep(p);
            ++iter;
            if (status != Status::Running) break;
            if (lm.fnorm() <= 1e-15 * y_scale) {  // exact fit
                status = Status::RelativeErrorTooSmall;
                break;
            }
        }
    }
    out.iterations = iter;
    switch (status) {
        case Status::RelativeReductionTooSmall:
        case Status::RelativeErrorTooSmall:
        case Status::RelativeErrorAndReductionTooSmall:
        case Status::CosinusTooSmall:
        case Status::FtolTooSmall:
        case Status::XtolTooSmall:
        case Status::GtolTooSmall:
            out.converged = true;
            out.message = "converged";
            break;
        case Status::Running:
            out.message = "iteration cap of " + std::to_string(kFitIterationCap) + " reached";
            break;
        case Status::TooManyFunctionEvaluation:
            out.message = "too many function evaluations";
            break;
        default:
            if (out.message.empty()) out.message = "least-squares solver failed";
            break;
    }

    out.params = functor.expand(p);
    out.rss = rss_of(spec, x, y, out.params);
    for (Eigen::Index k = 0; k < out.params.size(); ++k) {
        if (!std::isfinite(out.params(k))) {
            out.converged = false;
            out.message = "non-finite parameter estimate";
        }
    }

    Eigen::MatrixXd jac(static_cast<Eigen::Index>(x.size()), n_free);
    functor.df(p, jac);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(jtj);
    Eigen::MatrixXd cov_free;
    const double s2 = out.rss / static_cast<double>(out.dof);
    if (cod.rank() == n_free) {
        cov_free = cod.pseudoInverse() * s2;
    } else {
        cov_free = Eigen::MatrixXd::Constant(n_free, n_free,
                                             std::numeric_limits<double>::infinity());
    }
    out.covariance = Eigen::MatrixXd::Zero(start.size(), start.size());
    for (int a = 0; a < n_free; ++a) {
        for (int b = 0; b < n_free; ++b) {
            out.covariance(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]) =
                cov_free(a, b);
        }
    }
    return out;
}

/// Least squares for y ~ sum_k a_k basis_k(x); returns coefficients and RSS.
inline std::pair<Eigen::VectorXd, double> linear_fit(const Eigen::MatrixXd& basis,
                                                     const Eigen::VectorXd& y) {
    const Eigen::MatrixXd gram = basis.transpose() * basis;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    Eigen::VectorXd coef;
    if (ldlt.info() == Eigen::Success && ldlt.rcond() > 1e-13) {
        coef = ldlt.solve(basis.transpose() * y);
    } else {
        coef = basis.completeOrthogonalDecomposition().solve(y);
    }
    const double rss = (basis * coef - y).squaredNorm();
    return {coef, rss};
}

inline void check_series(const std::vector<double>& x, const std::vector<double>& y,
                         std::size_t min_samples, const std::string& model) {
    if (x.size() != y.size()) throw InputError(model + " fit: x and y lengths differ");
    if (x.size() < min_samples) {
        throw InputError(model + " fit needs at least " + std::to_string(min_samples) + " samples");
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
            throw InputError(model + " fit: non-finite input");
        }
    }
}

[[nodiscard]] inline bool is_flat(const std::vector<double>& y) {
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    return (*hi - *lo) <= 1e-12 * std::max(1.0, std::max(std::abs(*hi), std::abs(*lo)));
}

[[nodiscard]] inline double mean_of(const std::vector<double>& y) {
    double s = 0.0;
    for (double v : y) s += v;
    return s / static_cast<double>(y.size());
}

/// Decay rates tried when seeding: 0 plus a log grid over [0.1, 30]/span.
[[nodiscard]] inline std::vector<double> rate_grid(double span, int n = 16) {
    std::vector<double> g{0.0};
    for (int k = 0; k < n; ++k) g.push_back(0.1 / span * std::pow(300.0, k / (n - 1.0)));
    return g;
}

/// Frequencies tried when seeding: spectral estimate (if any) plus a log grid.
[[nodiscard]] inline std::vector<double> frequency_grid(const std::vector<double>& t,
                                                        const std::vector<double>& y,
                                                        double span, int n = 60) {
    std::vector<double> fs;
    const double dt = span / static_cast<double>(t.size() - 1);
    try {
        if (auto est = estimate_frequency(t, y)) {
            for (double r : {0.96, 0.98, 1.0, 1.02, 1.04}) fs.push_back(r * est->frequency_hz);
        }
    } catch (const InputError&) {
        // non-uniform sampling: grid only
    }
    const double f_lo = 0.05 / span;
    const double f_hi = 0.25 / dt;
    for (int k = 0; k < n; ++k) fs.push_back(f_lo * std::pow(f_hi / f_lo, k / (n - 1.0)));
    return fs;
}

/// Name-based override of internal start values and fixed flags. Decay
/// constants given as T are converted to rates.
inline void apply_options(const FitOptions& opt, const std::vector<std::string>& reported,
                          const std::vector<bool>& is_time_constant, Eigen::VectorXd& start,
                          std::vector<bool>& fixed, bool seeds_only) {
    auto lookup = [&](const std::string& name) -> int {
        for (std::size_t k = 0; k < reported.size(); ++k) {
            if (reported[k] == name) return static_cast<int>(k);
        }
        throw InputError("unknown fit parameter " + name);
    };
    auto to_internal = [&](int k, double v) {
        if (!is_time_constant[static_cast<std::size_t>(k)]) return v;
        if (std::isinf(v)) return 0.0;
        if (!(v != 0.0)) throw InputError("time constants must be nonzero");
        return 1.0 / v;
    };
    for (const auto& [name, v] : opt.initial) {
        const int k = lookup(name);
        start(k) = to_internal(k, v);
    }
    if (seeds_only) return;
    for (const auto& [name, v] : opt.fixed) {
        const int k = lookup(name);
        start(k) = to_internal(k, v);
        fixed[static_cast<std::size_t>(k)] = true;
    }
}

inline FitResult finish(const ModelSpec& spec, const RawFit& raw,
                        const std::vector<std::string>& reported,
                        const std::vector<bool>& is_time_constant, const std::vector<bool>& fixed,
                        const FitOptions& opt) {
    FitResult r;
    r.model = spec.name;
    r.rss = raw.rss;
    r.dof = raw.dof;
    r.converged = raw.converged;
    r.iterations = raw.iterations;
    r.message = raw.message;
    r.covariance = raw.covariance;
    const double s2 = opt.noise_sigma ? (*opt.noise_sigma) * (*opt.noise_sigma) : 1.0;
    r.reduced_chi2 = raw.rss / (static_cast<double>(raw.dof) * s2);
    for (std::size_t k = 0; k < reported.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        const double v = raw.params(i);
        const double var = raw.covariance(i, i);
        double sigma = std::isfinite(var) ? std::sqrt(std::max(0.0, var))
                                          : std::numeric_limits<double>::infinity();
        double value = v;
        if (is_time_constant[k]) {
            value = v == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / v;
            sigma = v == 0.0 ? std::numeric_limits<double>::infinity() : sigma / (v * v);
        }
        r.params.push_back({reported[k], value, fixed[k] ? 0.0 : sigma, fixed[k]});
    }
    return r;
}

inline FitResult flat_result(const std::string& model, const std::vector<std::string>& names,
                             const std::vector<double>& values, int dof) {
    FitResult r;
    r.model = model;
    r.flat = true;
    r.converged = true;
    r.dof = dof;
    r.message = "flat data: zero-amplitude fit";
    for (std::size_t k = 0; k < names.size(); ++k) r.params.push_back({names[k], values[k], 0.0});
    r.covariance = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(names.size()),
                                         static_cast<Eigen::Index>(names.size()));
    return r;
}

}  // namespace detail

// ============================================================================
// Rabi: A [sin^2(pi f t) + c] exp(-t/T_Rabi)
// ============================================================================

[[nodiscard]] inline detail::ModelSpec rabi_spec(RabiMode mode) {
    const double sg = mode == RabiMode::sin2 ? 1.0 : -1.0;
    detail::ModelSpec s;
    s.name = mode == RabiMode::sin2 ? "rabi_sin2" : "rabi_cos2";
    s.internal_names = {"A", "f_hz", "c", "rate"};
    s.value = [mode](double t, const Eigen::VectorXd& p) {
        const double sn = std::sin(std::numbers::pi * p(1) * t);
        const double osc = mode == RabiMode::sin2 ? sn * sn : 1.0 - sn * sn;
        return p(0) * (osc + p(2)) * std::exp(-p(3) * t);
    };
    s.gradient = [mode, sg](double t, const Eigen::VectorXd& p, Eigen::Ref<Eigen::RowVectorXd> g) {
        const double sn = std::sin(std::numbers::pi * p(1) * t);
        const double osc = mode == RabiMode::sin2 ? sn * sn : 1.0 - sn * sn;
        const double e = std::exp(-p(3) * t);
        g(0) = (osc + p(2)) * e;
        g(1) = p(0) * e * sg * std::numbers::pi * t * std::sin(2.0 * std::numbers::pi * p(1) * t);
        g(2) = p(0) * e;
        g(3) = -t * p(0) * (osc + p(2)) * e;
    };
    return s;
}

/**
 * Fit A [sin^2(pi f t) + c] exp(-t/T_Rabi) (or cos^2). Reported parameters:
 * A, f_hz, c, T_rabi_s.
 */
[[nodiscard]] inline FitResult fit_rabi(const std::vector<double>& t, const std::vector<double>& y,
                                        RabiMode mode = RabiMode::sin2,
                                        const FitOptions& opt = {}) {
    detail::check_series(t, y, 8, "rabi");
    const std::vector<std::string> names{"A", "f_hz", "c", "T_rabi_s"};
    const std::vector<bool> is_tc{false, false, false, true};
    const auto spec = rabi_spec(mode);
    if (detail::is_flat(y)) {
        return detail::flat_result(spec.name, names,
                                   {0.0, 0.0, detail::mean_of(y),
                                    std::numeric_limits<double>::infinity()},
                                   static_cast<int>(t.size()) - 4);
    }
    const double span = t.back() - t.front();
    if (!(span > 0.0)) throw InputError("rabi fit: samples must span a nonzero interval");

    // seed by variable projection: for each (f, rate) the model is linear in
    // (A, A c)
    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
    Eigen::VectorXd best(4);
    double best_rss = std::numeric_limits<double>::infinity();
    Eigen::MatrixXd basis(static_cast<Eigen::Index>(t.size()), 2);
    for (double f : detail::frequency_grid(t, y, span)) {
        for (double g : detail::rate_grid(span)) {
            for (std::size_t i = 0; i < t.size(); ++i) {
                const double sn = std::sin(std::numbers::pi * f * t[i]);
                const double osc = mode == RabiMode::sin2 ? sn * sn : 1.0 - sn * sn;
                const double e = std::exp(-g * t[i]);
                basis(static_cast<Eigen::Index>(i), 0) = osc * e;
                basis(static_cast<Eigen::Index>(i), 1) = e;
            }
            auto [coef, rss] = detail::linear_fit(basis, yv);
            if (rss < best_rss && std::abs(coef(0)) > 0.0) {
                best_rss = rss;
                best << coef(0), f, coef(1) / coef(0), g;
            }
        }
    }
    if (!std::isfinite(best_rss)) {
        best << (yv.maxCoeff() - yv.minCoeff()), 1.0 / span, 0.0, 0.0;
    }
    std::vector<bool> fixed(4, false);
    detail::apply_options(opt, names, is_tc, best, fixed, false);
    auto raw = detail::levenberg_marquardt(spec, t, y, best, fixed);
    if (raw.params(1) < 0.0) raw.params(1) = -raw.params(1);  // sin^2 is even in f
    return detail::finish(spec, raw, names, is_tc, fixed, opt);
}

// ============================================================================
// Ramsey: A [+-cos(2 pi f t - phi) exp(-t/T_2S*) + c] exp(-t/T_S)
// ============================================================================

[[nodiscard]] inline detail::ModelSpec ramsey_spec(RamseySign sign) {
    const double sg = sign == RamseySign::plus ? 1.0 : -1.0;
    detail::ModelSpec s;
    s.name = sign == RamseySign::plus ? "ramsey_plus" : "ramsey_minus";
    s.internal_names = {"A", "f_hz", "phi_rad", "c", "rate2", "rate_s"};
    s.value = [sg](double t, const Eigen::VectorXd& p) {
        return p(0) *
               (sg * std::cos(2.0 * std::numbers::pi * p(1) * t - p(2)) * std::exp(-p(4) * t) +
                p(3)) *
               std::exp(-p(5) * t);
    };
    s.gradient = [sg](double t, const Eigen::VectorXd& p, Eigen::Ref<Eigen::RowVectorXd> g) {
        const double arg = 2.0 * std::numbers::pi * p(1) * t - p(2);
        const double e2 = std::exp(-p(4) * t);
        const double es = std::exp(-p(5) * t);
        const double osc = sg * std::cos(arg) * e2;
        g(0) = (osc + p(3)) * es;
        g(1) = -p(0) * es * e2 * sg * std::sin(arg) * 2.0 * std::numbers::pi * t;
        g(2) = p(0) * es * e2 * sg * std::sin(arg);
        g(3) = p(0) * es;
        g(4) = -t * p(0) * osc * es;
        g(5) = -t * p(0) * (osc + p(3)) * es;
    };
    return s;
}

/**
 * Fit A [+-cos(2 pi f t - phi) exp(-t/T_2S*) + c] exp(-t/T_S). Reported
 * parameters: A, f_hz, phi_rad, c, T2s_s, Ts_s. The two decay constants are
 * often strongly correlated; see the covariance matrix.
 */
[[nodiscard]] inline FitResult fit_ramsey(const std::vector<double>& t, const std::vector<double>& y,
                                          RamseySign sign = RamseySign::plus,
                                          const FitOptions& opt = {}) {
    detail::check_series(t, y, 12, "ramsey");
    const std::vector<std::string> names{"A", "f_hz", "phi_rad", "c", "T2s_s", "Ts_s"};
    const std::vector<bool> is_tc{false, false, false, false, true, true};
    const auto spec = ramsey_spec(sign);
    const double inf = std::numeric_limits<double>::infinity();
    if (detail::is_flat(y)) {
        return detail::flat_result(spec.name, names, {0.0, 0.0, 0.0, detail::mean_of(y), inf, inf},
                                   static_cast<int>(t.size()) - 6);
    }
    const double span = t.back() - t.front();
    if (!(span > 0.0)) throw InputError("ramsey fit: samples must span a nonzero interval");
    const double sg = sign == RamseySign::plus ? 1.0 : -1.0;

    // model = es [u cos(wt) e2 + v sin(wt) e2 + w]: linear in (u, v, w) for
    // fixed (f, rate2, rate_s)
    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
    Eigen::VectorXd best(6);
    double best_rss = inf;
    Eigen::MatrixXd basis(static_cast<Eigen::Index>(t.size()), 3);
    const auto rates = detail::rate_grid(span, 8);
    for (double f : detail::frequency_grid(t, y, span, 40)) {
        for (double g2 : rates) {
            for (double gs : rates) {
                for (std::size_t i = 0; i < t.size(); ++i) {
                    const auto r = static_cast<Eigen::Index>(i);
                    const double w = 2.0 * std::numbers::pi * f * t[i];
                    const double es = std::exp(-gs * t[i]);
                    const double e2 = std::exp(-g2 * t[i]) * es;
                    basis(r, 0) = std::cos(w) * e2;
                    basis(r, 1) = std::sin(w) * e2;
                    basis(r, 2) = es;
                }
                auto [coef, rss] = detail::linear_fit(basis, yv);
                if (rss < best_rss) {
                    // sg A cos(wt - phi) = sg A (cos wt cos phi + sin wt sin phi)
                    const double amp = std::hypot(coef(0), coef(1));
                    if (amp == 0.0) continue;
                    best_rss = rss;
                    const double phi = std::atan2(sg * coef(1), sg * coef(0));
                    best << amp, f, phi, coef(2) / amp, g2, gs;
                }
            }
        }
    }
    if (!std::isfinite(best_rss)) {
        best << 0.5 * (yv.maxCoeff() - yv.minCoeff()), 1.0 / span, 0.0, 0.0, 0.0, 0.0;
    }
    std::vector<bool> fixed(6, false);
    detail::apply_options(opt, names, is_tc, best, fixed, false);
    auto raw = detail::levenberg_marquardt(spec, t, y, best, fixed);
    // canonical branch: A > 0, f > 0, phi in (-pi, pi]
    if (raw.params(0) < 0.0 && !fixed[0] && !fixed[2]) {
        raw.params(0) = -raw.params(0);
        raw.params(3) = -raw.params(3);
        raw.params(2) += std::numbers::pi;
    }
    if (raw.params(1) < 0.0 && !fixed[1] && !fixed[2]) {
        raw.params(1) = -raw.params(1);
        raw.params(2) = -raw.params(2);
    }
    raw.params(2) = std::remainder(raw.params(2), 2.0 * std::numbers::pi);
    return detail::finish(spec, raw, names, is_tc, fixed, opt);
}

// ============================================================================
// Lorentzian: h (w/2)^2 / ((x - x0)^2 + (w/2)^2) + b
// ============================================================================

[[nodiscard]] inline detail::ModelSpec lorentzian_spec() {
    detail::ModelSpec s;
    s.name = "lorentzian";
    s.internal_names = {"center", "fwhm", "height", "baseline"};
    s.value = [](double x, const Eigen::VectorXd& p) {
        return lorentzian_model(x, p(0), p(1), p(2), p(3));
    };
    s.gradient = [](double x, const Eigen::VectorXd& p, Eigen::Ref<Eigen::RowVectorXd> g) {
        const double q = 0.25 * p(1) * p(1);
        const double dx = x - p(0);
        const double d = dx * dx + q;
        g(0) = p(2) * q * 2.0 * dx / (d * d);
        g(1) = p(2) * 0.5 * p(1) * dx * dx / (d * d);
        g(2) = q / d;
        g(3) = 1.0;
    };
    return s;
}

/// Reported parameters: center, fwhm, height, baseline.
[[nodiscard]] inline FitResult fit_lorentzian(const std::vector<double>& x,
                                              const std::vector<double>& y,
                                              const FitOptions& opt = {}) {
    detail::check_series(x, y, 5, "lorentzian");
    const std::vector<std::string> names{"center", "fwhm", "height", "baseline"};
    const std::vector<bool> is_tc(4, false);
    const auto spec = lorentzian_spec();
    const auto [xlo, xhi] = std::minmax_element(x.begin(), x.end());
    if (detail::is_flat(y)) {
        return detail::flat_result(spec.name, names,
                                   {0.5 * (*xlo + *xhi), 0.0, 0.0, detail::mean_of(y)},
                                   static_cast<int>(x.size()) - 4);
    }
    const double range = *xhi - *xlo;
    if (!(range > 0.0)) throw InputError("lorentzian fit: x values must not all coincide");

    // seed: for each (center, width) on a grid the model is linear in (h, b)
    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
    Eigen::VectorXd best(4);
    double best_rss = std::numeric_limits<double>::infinity();
    Eigen::MatrixXd basis(static_cast<Eigen::Index>(x.size()), 2);
    for (int ic = 0; ic <= 40; ++ic) {
        const double x0 = *xlo - 0.25 * range + 1.5 * range * ic / 40.0;
        for (int iw = 0; iw < 30; ++iw) {
            const double w = 0.02 * range * std::pow(300.0, iw / 29.0);
            for (std::size_t i = 0; i < x.size(); ++i) {
                basis(static_cast<Eigen::Index>(i), 0) = lorentzian_model(x[i], x0, w, 1.0, 0.0);
                basis(static_cast<Eigen::Index>(i), 1) = 1.0;
            }
            auto [coef, rss] = detail::linear_fit(basis, yv);
            if (rss < best_rss) {
                best_rss = rss;
                best << x0, w, coef(0), coef(1);
            }
        }
    }
    std::vector<bool> fixed(4, false);
    detail::apply_options(opt, names, is_tc, best, fixed, false);
    auto raw = detail::levenberg_marquardt(spec, x, y, best, fixed);
    raw.params(1) = std::abs(raw.params(1));
    return detail::finish(spec, raw, names, is_tc, fixed, opt);
}

// ============================================================================
// Exponential: A exp(-t/T) + c
// ============================================================================

[[nodiscard]] inline detail::ModelSpec exponential_spec() {
    detail::ModelSpec s;
    s.name = "exponential";
    s.internal_names = {"A", "rate", "c"};
    s.value = [](double t, const Eigen::VectorXd& p) { return p(0) * std::exp(-p(1) * t) + p(2); };
    s.gradient = [](double t, const Eigen::VectorXd& p, Eigen::Ref<Eigen::RowVectorXd> g) {
        const double e = std::exp(-p(1) * t);
        g(0) = e;
        g(1) = -t * p(0) * e;
        g(2) = 1.0;
    };
    return s;
}

/// Reported parameters: A, T_s, c.
[[nodiscard]] inline FitResult fit_exponential(const std::vector<double>& t,
                                               const std::vector<double>& y,
                                               const FitOptions& opt = {}) {
    detail::check_series(t, y, 5, "exponential");
    const std::vector<std::string> names{"A", "T_s", "c"};
    const std::vector<bool> is_tc{false, true, false};
    const auto spec = exponential_spec();
    if (detail::is_flat(y)) {
        return detail::flat_result(spec.name, names,
                                   {0.0, std::numeric_limits<double>::infinity(),
                                    detail::mean_of(y)},
                                   static_cast<int>(t.size()) - 3);
    }
    const auto [tlo, thi] = std::minmax_element(t.begin(), t.end());
    const double span = *thi - *tlo;
    if (!(span > 0.0)) throw InputError("exponential fit: samples must span a nonzero interval");

    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
    Eigen::VectorXd best(3);
    double best_rss = std::numeric_limits<double>::infinity();
    Eigen::MatrixXd basis(static_cast<Eigen::Index>(t.size()), 2);
    for (int k = 0; k < 80; ++k) {
        const double g = 0.02 / span * std::pow(5000.0, k / 79.0);
        for (std::size_t i = 0; i < t.size(); ++i) {
            basis(static_cast<Eigen::Index>(i), 0) = std::exp(-g * t[i]);
            basis(static_cast<Eigen::Index>(i), 1) = 1.0;
        }
        auto [coef, rss] = detail::linear_fit(basis, yv);
        if (rss < best_rss) {
            best_rss = rss;
            best << coef(0), g, coef(1);
        }
    }
    std::vector<bool> fixed(3, false);
    detail::apply_options(opt, names, is_tc, best, fixed, false);
    auto raw = detail::levenberg_marquardt(spec, t, y, best, fixed);
    return detail::finish(spec, raw, names, is_tc, fixed, opt);
}

}  // namespace singletsim
