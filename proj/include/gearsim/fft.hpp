#pragma once

// Thin FFTW wrappers. Plans are created per call with FFTW_ESTIMATE, which
// is deterministic; plan creation is serialized because the FFTW planner
// is not thread-safe.

#include <fftw3.h>

#include <Eigen/Core>
#include <complex>
#include <memory>
#include <mutex>
#include <vector>

#include "gearsim/errors.hpp"

namespace gearsim::fft {

using Complex = std::complex<double>;
using Spectrum = Eigen::VectorXcd;

namespace detail {

inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct PlanDeleter {
    void operator()(fftw_plan_s* p) const {
        const std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(p);
    }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

template <class Make>
Plan make_plan(Make&& make) {
    const std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_plan p = make();
    if (!p) throw NumericalError("FFTW plan creation failed");
    return Plan(p);
}

}  // namespace detail

// Half spectrum X[0..n/2] of a real signal (unnormalized forward transform).
inline Spectrum rfft(const Eigen::VectorXd& x) {
    const int n = static_cast<int>(x.size());
    if (n == 0) return {};
    std::vector<double> in(x.data(), x.data() + n);
    Spectrum out(n / 2 + 1);
    auto* o = reinterpret_cast<fftw_complex*>(out.data());
    const auto plan = detail::make_plan([&] { return fftw_plan_dft_r2c_1d(n, in.data(), o, FFTW_ESTIMATE); });
    fftw_execute_dft_r2c(plan.get(), in.data(), o);
    return out;
}

// Inverse of rfft for a signal of length n (normalized by 1/n).
inline Eigen::VectorXd irfft(const Spectrum& half, int n) {
    if (half.size() != n / 2 + 1) throw ConfigError("half spectrum size does not match the signal length");
    Spectrum in = half;  // c2r overwrites its input
    Eigen::VectorXd out(n);
    auto* i = reinterpret_cast<fftw_complex*>(in.data());
    const auto plan = detail::make_plan([&] { return fftw_plan_dft_c2r_1d(n, i, out.data(), FFTW_ESTIMATE); });
    fftw_execute_dft_c2r(plan.get(), i, out.data());
    out /= static_cast<double>(n);
    return out;
}

// Complex transform; sign is FFTW_FORWARD or FFTW_BACKWARD (unnormalized).
inline Spectrum dft(const Spectrum& x, int sign) {
    const int n = static_cast<int>(x.size());
    if (n == 0) return {};
    Spectrum in = x;
    Spectrum out(n);
    auto* i = reinterpret_cast<fftw_complex*>(in.data());
    auto* o = reinterpret_cast<fftw_complex*>(out.data());
    const auto plan = detail::make_plan([&] { return fftw_plan_dft_1d(n, i, o, sign, FFTW_ESTIMATE); });
    fftw_execute_dft(plan.get(), i, o);
    return out;
}

// One-sided amplitude spectrum |X_k| * 2 / n (DC and Nyquist not doubled).
inline Eigen::VectorXd amplitude_spectrum(const Eigen::VectorXd& x) {
    const Spectrum s = rfft(x);
    const double n = static_cast<double>(x.size());
    Eigen::VectorXd a = s.cwiseAbs() * (2.0 / n);
    if (a.size()) a(0) *= 0.5;
    if (x.size() % 2 == 0 && a.size() > 1) a(a.size() - 1) *= 0.5;
    return a;
}

}  // namespace gearsim::fft
