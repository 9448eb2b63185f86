#pragma once

// Angle-domain processing of a vibration record: resampling to a fixed
// number of points per shaft revolution, synchronous averaging, removal of
// mesh harmonics and sidebands, envelope, and statistical indicators.

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "gearsim/errors.hpp"
#include "gearsim/fft.hpp"

namespace gearsim {

struct RecordedSignal {
    Eigen::VectorXd samples;   // m/s^2
    double rate = 0.0;         // samples/s
    std::vector<double> tach;  // fractional sample positions, one per tracked-shaft revolution
    std::string shaft_label = "input";

    void validate() const {
        if (!(rate > 0.0)) throw ConfigError("signal rate must be > 0");
        if (tach.size() < 2) throw ConfigError("at least two tach pulses are required");
        const double last = static_cast<double>(samples.size() - 1);
        for (std::size_t i = 0; i < tach.size(); ++i) {
            if (!(tach[i] >= 0.0 && tach[i] <= last)) throw ConfigError("tach pulse outside the sample range");
            if (i && !(tach[i] > tach[i - 1])) throw ConfigError("tach pulses must be strictly increasing");
        }
    }
};

// Rows are consecutive revolutions, columns the P angular points.
using CycleSegments = Eigen::MatrixXd;

struct SyncAverage {
    Eigen::VectorXd cycle_signal;
    int points_per_rev = 0;
    int n_cycles_averaged = 0;
};

struct DifferenceSignal {
    Eigen::VectorXd cycle_signal;
    std::vector<int> removed_orders;  // ascending, includes order 0
};

namespace detail {

// Cubic (Catmull-Rom) interpolation at fractional index pos; exact at
// integer positions.
inline double interpolate_at(const Eigen::VectorXd& x, double pos) {
    const Eigen::Index n = x.size();
    const auto i = static_cast<Eigen::Index>(std::floor(pos));
    const double t = pos - static_cast<double>(i);
    auto at = [&](Eigen::Index k) { return x(std::clamp<Eigen::Index>(k, 0, n - 1)); };
    if (t == 0.0) return at(i);
    const double p0 = at(i - 1), p1 = at(i), p2 = at(i + 1), p3 = at(i + 2);
    return p1 + 0.5 * t * (p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + t * (3.0 * (p1 - p2) + p3 - p0)));
}

}  // namespace detail

// Resample every complete revolution of the target shaft to P points. The
// tach tracks one shaft; the target shaft turns `ratio` revolutions per tach
// revolution, with angle linear in sample position between pulses.
inline CycleSegments angular_resample(const RecordedSignal& sig, int points_per_rev, double ratio = 1.0) {
    sig.validate();
    if (points_per_rev < 2) throw ConfigError("points_per_rev must be >= 2");
    if (!(ratio > 0.0)) throw ConfigError("shaft ratio must be > 0");
    const double tach_revs = static_cast<double>(sig.tach.size() - 1);
    // Tolerance absorbs round-off when ratio * tach_revs is integral.
    const auto revs = static_cast<Eigen::Index>(std::floor(ratio * tach_revs * (1.0 + 1e-12)));
    if (revs < 1) throw ConfigError("fewer than one full revolution in the record");
    CycleSegments out(revs, points_per_rev);
    const auto last_interval = static_cast<std::size_t>(sig.tach.size() - 2);
    for (Eigen::Index m = 0; m < revs; ++m)
        for (int j = 0; j < points_per_rev; ++j) {
            const double c = (static_cast<double>(m) + static_cast<double>(j) / points_per_rev) / ratio;
            auto k = std::min(static_cast<std::size_t>(std::floor(c)), last_interval);
            const double f = c - static_cast<double>(k);
            const double pos = sig.tach[k] + f * (sig.tach[k + 1] - sig.tach[k]);
            out(m, j) = detail::interpolate_at(sig.samples, pos);
        }
    return out;
}

inline SyncAverage synchronous_average(const CycleSegments& segments) {
    if (segments.rows() < 1 || segments.cols() < 1) throw ConfigError("no segments to average");
    SyncAverage sa;
    sa.cycle_signal = segments.colwise().mean().transpose();
    sa.points_per_rev = static_cast<int>(segments.cols());
    sa.n_cycles_averaged = static_cast<int>(segments.rows());
    return sa;
}

struct DifferenceOptions {
    int mesh_order = 0;  // teeth on the averaged shaft; 0 removes only the mean
    int harmonics = -1;  // negative: every harmonic whose sidebands stay below Nyquist
    int sidebands = 2;   // pairs per harmonic
};

// Orders removed for a P-point cycle. Explicit requests beyond Nyquist are
// rejected.
inline std::vector<int> removed_orders(int points_per_rev, const DifferenceOptions& o) {
    if (o.mesh_order < 0 || o.sidebands < 0) throw ConfigError("mesh_order and sidebands must be >= 0");
    const int nyquist = points_per_rev / 2;
    std::set<int> orders{0};
    if (o.mesh_order > 0) {
        int k_max = o.harmonics;
        if (k_max < 0) {
            k_max = 0;
            while (2 * ((k_max + 1) * o.mesh_order + o.sidebands) < points_per_rev) ++k_max;
        }
        for (int k = 1; k <= k_max; ++k)
            for (int s = -o.sidebands; s <= o.sidebands; ++s) orders.insert(k * o.mesh_order + s);
    }
    const int top = *orders.rbegin();
    if (!(2 * top < points_per_rev))
        throw ConfigError("removed order " + std::to_string(top) + " is not below the Nyquist order " +
                          std::to_string(nyquist));
    return {orders.begin(), orders.end()};
}

inline DifferenceSignal difference_signal(const SyncAverage& avg, const DifferenceOptions& o) {
    const int p = static_cast<int>(avg.cycle_signal.size());
    if (p < 2) throw ConfigError("synchronous average too short");
    DifferenceSignal d;
    d.removed_orders = removed_orders(p, o);
    fft::Spectrum s = fft::rfft(avg.cycle_signal);
    for (int k : d.removed_orders) s(k) = 0.0;
    d.cycle_signal = fft::irfft(s, p);
    return d;
}

// Magnitude of the analytic signal.
inline Eigen::VectorXd envelope(const Eigen::VectorXd& x) {
    const Eigen::Index n = x.size();
    if (n == 0) throw ConfigError("empty signal");
    const fft::Spectrum half = fft::rfft(x);
    fft::Spectrum full = fft::Spectrum::Zero(n);
    full(0) = half(0);
    for (Eigen::Index k = 1; k < half.size(); ++k) full(k) = 2.0 * half(k);
    if (n % 2 == 0) full(n / 2) = half(n / 2);
    const fft::Spectrum z = fft::dft(full, FFTW_BACKWARD);
    return z.cwiseAbs() / static_cast<double>(n);
}

inline Eigen::VectorXd envelope(const DifferenceSignal& d) { return envelope(d.cycle_signal); }

struct Moments {
    double rms = 0.0;
    double skewness = 0.0;
    double kurtosis = 0.0;  // non-excess
};

inline Moments moments(const Eigen::VectorXd& x) {
    if (x.size() == 0) throw ConfigError("empty signal");
    const double n = static_cast<double>(x.size());
    Moments m;
    m.rms = std::sqrt(x.squaredNorm() / n);
    const Eigen::ArrayXd c = x.array() - x.mean();
    const double m2 = c.square().sum() / n;
    if (!(m2 > 0.0)) throw NumericalError("zero-variance signal has no standardized moments");
    m.skewness = c.cube().sum() / n / std::pow(m2, 1.5);
    m.kurtosis = c.square().square().sum() / n / (m2 * m2);
    return m;
}

struct ConditionIndicatorSet {
    Moments diff;
    Moments env;

    static constexpr std::array<const char*, 6> names = {"diff_rms",     "diff_skewness", "diff_kurtosis",
                                                         "env_rms",      "env_skewness",  "env_kurtosis"};
    std::array<double, 6> values() const {
        return {diff.rms, diff.skewness, diff.kurtosis, env.rms, env.skewness, env.kurtosis};
    }
    // rms and kurtosis are stored as logarithms; skewness as is.
    std::array<double, 6> log_values() const {
        return {std::log(diff.rms), diff.skewness, std::log(diff.kurtosis),
                std::log(env.rms),  env.skewness,  std::log(env.kurtosis)};
    }
    static constexpr std::array<const char*, 6> log_names = {
        "log_diff_rms", "diff_skewness", "log_diff_kurtosis", "log_env_rms", "env_skewness", "log_env_kurtosis"};
};

inline ConditionIndicatorSet condition_indicators(const Eigen::VectorXd& diff, const Eigen::VectorXd& env) {
    if (diff.size() < 8) throw ConfigError("condition indicators need at least 8 points");
    if (env.size() != diff.size()) throw ConfigError("envelope length mismatch");
    return {moments(diff), moments(env)};
}

inline ConditionIndicatorSet condition_indicators(const Eigen::VectorXd& diff) {
    return condition_indicators(diff, envelope(diff));
}

inline double rms(const Eigen::VectorXd& x) {
    if (x.size() == 0) throw ConfigError("empty signal");
    return std::sqrt(x.squaredNorm() / static_cast<double>(x.size()));
}

inline double mean_rms(const std::vector<Eigen::VectorXd>& signals) {
    if (signals.empty()) throw ConfigError("no signals");
    double s = 0.0;
    for (const auto& x : signals) s += rms(x);
    return s / static_cast<double>(signals.size());
}

inline std::vector<Eigen::VectorXd> normalize_by_healthy(std::vector<Eigen::VectorXd> signals,
                                                         double healthy_rms_mean) {
    if (!(healthy_rms_mean > 0.0) || !std::isfinite(healthy_rms_mean))
        throw ConfigError("healthy mean rms must be > 0");
    for (auto& x : signals) x /= healthy_rms_mean;
    return signals;
}

struct ProcessingConfig {
    int points_per_rev = 1024;
    double shaft_ratio = 1.0;  // averaged-shaft revolutions per tach revolution
    DifferenceOptions difference;

    void validate() const {
        if (points_per_rev < 8) throw ConfigError("points_per_rev must be >= 8");
        if (!(shaft_ratio > 0.0)) throw ConfigError("shaft_ratio must be > 0");
        removed_orders(points_per_rev, difference);
    }
};

struct ProcessedSignal {
    SyncAverage average;
    DifferenceSignal difference;
};

inline ProcessedSignal process_signal(const RecordedSignal& sig, const ProcessingConfig& cfg) {
    cfg.validate();
    ProcessedSignal out;
    out.average = synchronous_average(angular_resample(sig, cfg.points_per_rev, cfg.shaft_ratio));
    out.difference = difference_signal(out.average, cfg.difference);
    return out;
}

}  // namespace gearsim
