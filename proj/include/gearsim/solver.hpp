#pragma once

// Newmark time integration of M a + C v + K(t) u = F(t), refined by
// Newton-Raphson iterations on the step residual. K(t) is periodic and
// tabulated over one cycle; a step uses the entry of its cycle index, and the
// Newton matrix of every cycle point is factorized once and reused.

#include <Eigen/Core>
#include <Eigen/LU>
#include <cmath>
#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gearsim/errors.hpp"

namespace gearsim {

struct SolverSettings {
    double newmark_beta = 0.25;
    double newmark_gamma = 0.5;
    double dt = 1.0 / 25000.0;  // s
    double nr_rel_tol = 1e-8;
    int nr_max_iter = 20;
    Eigen::VectorXd initial_displacement;  // empty means zero
    Eigen::VectorXd initial_velocity;
    bool cache_jacobians = true;

    void validate() const {
        if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
        if (!(newmark_gamma >= 0.5 && 2.0 * newmark_beta >= newmark_gamma))
            throw ConfigError("Newmark parameters must satisfy 2 beta >= gamma >= 0.5");
        if (!(nr_rel_tol > 0.0) || nr_max_iter < 1) throw ConfigError("invalid Newton-Raphson settings");
    }
};

// Linear system with a periodic stiffness table. The stiffness at time t is
// the table entry nearest to its cycle position.
struct TimeVaryingSystem {
    Eigen::MatrixXd mass;
    Eigen::MatrixXd damping;
    std::vector<Eigen::MatrixXd> stiffness_cycle;
    double cycle_duration = 1.0;  // s per cycle
    double cycle_offset = 0.0;    // cycles elapsed at t = 0
    std::function<void(double t, Eigen::VectorXd& f)> force;

    Eigen::Index dofs() const { return mass.rows(); }
    std::size_t cycle_points() const { return stiffness_cycle.size(); }

    // Position inside the table: integer index and fraction toward the next.
    std::pair<std::size_t, double> cycle_position(double t) const {
        const double n = static_cast<double>(stiffness_cycle.size());
        double c = (cycle_offset + t / cycle_duration);
        c -= std::floor(c);
        double pos = c * n;
        auto i = static_cast<std::size_t>(pos);
        if (i >= stiffness_cycle.size()) i = 0;
        return {i, pos - std::floor(pos)};
    }
    std::size_t nearest_cycle_index(double t) const {
        const auto [i, w] = cycle_position(t);
        return w < 0.5 ? i : (i + 1) % stiffness_cycle.size();
    }
    const Eigen::MatrixXd& stiffness_at(double t) const { return stiffness_cycle[nearest_cycle_index(t)]; }
    void validate() const {
        const Eigen::Index n = mass.rows();
        if (n == 0 || mass.cols() != n || damping.rows() != n || damping.cols() != n)
            throw ConfigError("mass and damping must be square and of equal size");
        if (stiffness_cycle.empty()) throw ConfigError("empty stiffness table");
        for (const auto& k : stiffness_cycle)
            if (k.rows() != n || k.cols() != n) throw ConfigError("stiffness table size mismatch");
        if (!(cycle_duration > 0.0)) throw ConfigError("cycle_duration must be > 0");
        if (!force) throw ConfigError("no force function");
    }
};

inline Eigen::MatrixXd effective_matrix(const TimeVaryingSystem& sys, const Eigen::MatrixXd& k,
                                        const SolverSettings& s) {
    const double b = s.newmark_beta, g = s.newmark_gamma, dt = s.dt;
    return sys.mass / (b * dt * dt) + sys.damping * (g / (b * dt)) + k;
}

namespace detail {

inline Eigen::MatrixXd checked_inverse(const Eigen::MatrixXd& a, const std::string& where) {
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible()) throw NumericalError("singular effective matrix at " + where);
    return lu.inverse();
}

// Pulls a matrix into cache ahead of use; the table is too large to stay resident.
inline void prefetch(const Eigen::MatrixXd& m) {
    const char* p = reinterpret_cast<const char*>(m.data());
    const std::size_t bytes = static_cast<std::size_t>(m.size()) * sizeof(double);
    for (std::size_t off = 0; off < bytes; off += 64) __builtin_prefetch(p + off);
}

}  // namespace detail

struct CycleJacobianCache {
    std::vector<Eigen::MatrixXd> effective;  // per cycle point
    std::vector<Eigen::MatrixXd> inverse;    // of effective
    std::size_t size() const { return inverse.size(); }
};

inline CycleJacobianCache precompute_cycle_jacobians(const TimeVaryingSystem& sys, const SolverSettings& s) {
    sys.validate();
    s.validate();
    CycleJacobianCache cache;
    cache.effective.reserve(sys.cycle_points());
    cache.inverse.reserve(sys.cycle_points());
    for (std::size_t i = 0; i < sys.cycle_points(); ++i) {
        cache.effective.push_back(effective_matrix(sys, sys.stiffness_cycle[i], s));
        cache.inverse.push_back(detail::checked_inverse(cache.effective.back(), "cycle index " + std::to_string(i)));
    }
    return cache;
}

struct NewmarkState {
    double t = 0.0;
    Eigen::VectorXd u, v, a;
};

struct SolverStats {
    long steps = 0;
    long fallbacks = 0;
    std::map<int, long> iteration_histogram;  // iterations -> step count
};

// Scratch buffers reused across steps.
struct StepWorkspace {
    Eigen::MatrixXd keff, jinv;
    Eigen::VectorXd f, r, du, u, v, a, ma, ku, kdu;
    std::vector<double> history;
};

// Initial state: the given displacement and velocity, with the acceleration
// that balances the equation of motion at t = 0.
inline NewmarkState initial_state(const TimeVaryingSystem& sys, const SolverSettings& s) {
    const Eigen::Index n = sys.dofs();
    NewmarkState st;
    st.u = s.initial_displacement.size() ? s.initial_displacement : Eigen::VectorXd::Zero(n);
    st.v = s.initial_velocity.size() ? s.initial_velocity : Eigen::VectorXd::Zero(n);
    if (st.u.size() != n || st.v.size() != n) throw ConfigError("initial condition size mismatch");
    Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
    sys.force(0.0, f);
    st.a = sys.mass.lu().solve(f - sys.damping * st.v - sys.stiffness_at(0.0) * st.u);
    return st;
}

inline constexpr double kIncrementFloor = 64.0 * std::numeric_limits<double>::epsilon();

// Advance one step of size s.dt. Returns the Newton iteration count.
inline int newmark_nr_step(NewmarkState& st, const CycleJacobianCache* cache, const TimeVaryingSystem& sys,
                           const SolverSettings& s, StepWorkspace& w, SolverStats* stats = nullptr) {
    const double b = s.newmark_beta, g = s.newmark_gamma, dt = s.dt;
    const double t1 = st.t + dt;
    const Eigen::Index n = sys.dofs();
    if (w.f.size() != n) w.f = Eigen::VectorXd::Zero(n);
    w.f.setZero();
    sys.force(t1, w.f);
    const std::size_t cycle_index = sys.nearest_cycle_index(t1);
    const Eigen::MatrixXd& k = sys.stiffness_cycle[cycle_index];
    const std::size_t next_index = sys.nearest_cycle_index(t1 + dt);
    detail::prefetch(sys.stiffness_cycle[next_index]);

    const double c0 = 1.0 / (b * dt * dt), c1 = 1.0 / (b * dt), c2 = 1.0 / (2.0 * b) - 1.0;
    // Predictor: constant-acceleration extrapolation.
    w.u = st.u + dt * st.v + (0.5 * dt * dt) * st.a;

    // Full residual at the predictor; the residual is affine in u with slope
    // keff, so each correction du updates it by -keff * du.
    w.a = c0 * (w.u - st.u) - c1 * st.v - c2 * st.a;
    w.v = st.v + dt * ((1.0 - g) * st.a + g * w.a);
    w.ma.noalias() = sys.mass * w.a;
    w.ku.noalias() = k * w.u;
    w.r.noalias() = sys.damping * w.v;
    w.r += w.ma + w.ku - w.f;
    const double scale = std::max({w.f.norm(), w.ku.norm(), w.ma.norm()});
    auto relative = [&]() {
        const double rn = w.r.norm();
        if (!std::isfinite(rn)) return std::numeric_limits<double>::infinity();
        return scale > 0.0 ? rn / scale : 0.0;
    };

    const Eigen::MatrixXd* keff = nullptr;
    const Eigen::MatrixXd* jinv = nullptr;
    auto factorize_here = [&]() {
        w.keff = effective_matrix(sys, k, s);
        w.jinv = detail::checked_inverse(w.keff, "t = " + std::to_string(t1));
        keff = &w.keff;
        jinv = &w.jinv;
    };
    if (cache) {
        if (cache->effective.size() != sys.cycle_points() || cache->inverse.size() != sys.cycle_points())
            throw ConfigError("Jacobian cache does not match the stiffness table");
        keff = &cache->effective[cycle_index];
        jinv = &cache->inverse[cycle_index];
        detail::prefetch(cache->effective[next_index]);
        detail::prefetch(cache->inverse[next_index]);
    } else {
        factorize_here();
    }

    w.history.clear();
    bool fresh = cache == nullptr;
    int iter = 0;
    double rel = relative();
    while (true) {
        if (!std::isfinite(rel)) {
            std::ostringstream os;
            os << "divergence at t = " << t1 << " s (non-finite residual)";
            throw NumericalError(os.str());
        }
        if (rel < s.nr_rel_tol) break;
        if (iter >= s.nr_max_iter * (fresh && cache ? 2 : 1)) {
            if (!fresh) {
                // One retry with the exact Newton matrix of this instant.
                fresh = true;
                factorize_here();
                if (stats) ++stats->fallbacks;
                continue;
            }
            std::ostringstream os;
            os << "Newton-Raphson did not converge at t = " << t1 << " s after " << iter
               << " iterations; relative residuals:";
            for (double h : w.history) os << ' ' << h;
            throw NumericalError(os.str());
        }
        w.du.noalias() = *jinv * w.r;
        w.u -= w.du;
        w.kdu.noalias() = *keff * w.du;
        w.r -= w.kdu;
        ++iter;
        rel = relative();
        w.history.push_back(rel);
        // Correction at rounding level: the residual cannot shrink further.
        if (w.du.norm() <= kIncrementFloor * w.u.norm()) break;
    }
    w.a = c0 * (w.u - st.u) - c1 * st.v - c2 * st.a;
    w.v = st.v + dt * ((1.0 - g) * st.a + g * w.a);
    st.t = t1;
    st.u = w.u;
    st.v = w.v;
    st.a = w.a;
    if (!st.u.allFinite()) throw NumericalError("divergence at t = " + std::to_string(t1) + " s");
    if (stats) {
        ++stats->steps;
        ++stats->iteration_histogram[iter];
    }
    return iter;
}

// March `steps` steps, calling observer(step_index, state) after each one
// (step 0 is the initial state).
template <class Observer>
SolverStats integrate_states(const TimeVaryingSystem& sys, const SolverSettings& s, long steps, Observer&& observer) {
    sys.validate();
    s.validate();
    CycleJacobianCache cache;
    if (s.cache_jacobians) cache = precompute_cycle_jacobians(sys, s);
    NewmarkState st = initial_state(sys, s);
    StepWorkspace w;
    SolverStats stats;
    observer(0L, st);
    for (long i = 1; i <= steps; ++i) {
        try {
            newmark_nr_step(st, s.cache_jacobians ? &cache : nullptr, sys, s, w, &stats);
        } catch (const NumericalError& e) {
            throw NumericalError(std::string("step ") + std::to_string(i) + ": " + e.what());
        }
        observer(i, st);
    }
    return stats;
}

}  // namespace gearsim
