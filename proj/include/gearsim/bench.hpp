#pragma once

// Naive-versus-fast timing of the three accelerated kernels. Each case
// checks numerical equivalence first and refuses to time on a mismatch.

#include <Eigen/Core>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "gearsim/dynamics.hpp"
#include "gearsim/errors.hpp"
#include "gearsim/geometry.hpp"
#include "gearsim/model.hpp"
#include "gearsim/solver.hpp"
#include "gearsim/strain_energy.hpp"

namespace gearsim {

struct BenchRow {
    std::string kernel;
    long size = 0;
    double naive_s = 0.0;
    double fast_s = 0.0;
    double max_rel_diff = 0.0;
    double tolerance = 0.0;
    bool asserted = false;  // speedup floor applies at this size
    double ratio_limit = 0.1;

    double ratio() const { return fast_s / naive_s; }
    bool equivalent() const { return max_rel_diff <= tolerance; }
    bool pass() const { return equivalent() && (!asserted || ratio() <= ratio_limit); }
};

class EquivalenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

namespace detail {

template <class F>
double seconds(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Best of `reps` runs, at least one.
template <class F>
double best_seconds(int reps, F&& f) {
    double best = seconds(f);
    for (int i = 1; i < reps; ++i) best = std::min(best, seconds(f));
    return best;
}

inline double max_rel_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double scale = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
    return scale > 0.0 ? (a - b).cwiseAbs().maxCoeff() / scale : 0.0;
}

inline void require_equivalent(const BenchRow& row) {
    if (!row.equivalent())
        throw EquivalenceError(row.kernel + " at size " + std::to_string(row.size) +
                               ": naive and fast results differ (max relative difference " +
                               std::to_string(row.max_rel_diff) + " > " + std::to_string(row.tolerance) + ")");
}

}  // namespace detail

// Smooth random cantilever profile with n points (positive sections).
inline ToothProfile random_profile(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ToothProfile p;
    const double length = 4e-3 + 4e-3 * u(rng);
    const double root = 2e-3 + 2e-3 * u(rng), tip = 0.3e-3 + 0.8e-3 * u(rng);
    const double bulge = 0.3e-3 * (u(rng) - 0.5);
    p.face_width = 0.01 + 0.02 * u(rng);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n - 1);
        // Strictly increasing, mildly non-uniform abscissae.
        p.x.push_back(length * (t + 0.05 * std::sin(pi * t) * t));
        p.half_thickness.push_back(root + (tip - root) * t + bulge * std::sin(pi * t));
        p.radius.push_back(0.02 + p.x.back());
    }
    p.axis_origin = 0.02;
    p.update_sections();
    return p;
}

inline LoadDecomposition random_load(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double a = -0.2 + 0.9 * u(rng);
    return {std::sin(a), std::cos(a), static_cast<std::size_t>(u(rng) * static_cast<double>(n - 1))};
}

// Strain energies: per-point direct integration against cumulative sums.
inline BenchRow bench_strain_energy(std::size_t n, int reps = 1, std::uint64_t seed = 1) {
    std::mt19937_64 rng(seed);
    const ToothProfile p = random_profile(n, rng);
    const LoadDecomposition load = random_load(n, rng);
    const Material mat;
    BenchRow row{"strain_energy", static_cast<long>(n)};
    row.tolerance = 1e-10;
    row.asserted = n >= 1000;
    const Eigen::VectorXd bn = bending_energy_naive(p, mat.young_modulus, load);
    const Eigen::VectorXd bf = bending_energy_fast(p, mat.young_modulus, load);
    const auto [an, sn] = axial_shear_energies_naive(p, mat, load);
    const auto [af, sf] = axial_shear_energies(p, mat, load);
    row.max_rel_diff =
        std::max({detail::max_rel_diff(bn, bf), detail::max_rel_diff(an, af), detail::max_rel_diff(sn, sf)});
    detail::require_equivalent(row);
    double sink = 0.0;
    row.naive_s = detail::best_seconds(reps, [&] {
        sink += bending_energy_naive(p, mat.young_modulus, load).sum();
        sink += axial_shear_energies_naive(p, mat, load).first.sum();
    });
    row.fast_s = detail::best_seconds(reps, [&] {
        sink += bending_energy_fast(p, mat.young_modulus, load).sum();
        sink += axial_shear_energies(p, mat, load).first.sum();
    });
    if (!std::isfinite(sink)) throw NumericalError("non-finite strain energy");
    return row;
}

inline double frobenius_rel_diff(const std::vector<Eigen::MatrixXd>& a, const std::vector<Eigen::MatrixXd>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]).squaredNorm();
        den += a[i].squaredNorm();
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

// Stiffness cycle: z-grid summation against the analytic expectation.
inline BenchRow bench_assembly(const GearPair& pair, int n_cyc, int m, int reps = 1) {
    const StructuralParameters sp;
    const Eigen::MatrixXd k_const = assemble_k_const(sp);
    const GeomCoefficients geom = mesh_geometry(pair, sp);
    Eigen::VectorXd gms(n_cyc);
    for (int i = 0; i < n_cyc; ++i) gms(i) = 3.5e8 + 1e8 * std::cos(2.0 * pi * i / n_cyc);
    BenchRow row{"stiffness_assembly", static_cast<long>(n_cyc) * m};
    // Midpoint quadrature over the face width: error falls as 1/M^2.
    row.tolerance = std::max(1e-8, 1e-5 / (static_cast<double>(m) * m));
    row.asserted = n_cyc * static_cast<long>(m) >= 10000;
    row.max_rel_diff = frobenius_rel_diff(assemble_stiffness_cycle_naive(k_const, gms, geom, m),
                                          assemble_stiffness_cycle_fast(k_const, gms, geom));
    detail::require_equivalent(row);
    double sink = 0.0;
    row.naive_s =
        detail::best_seconds(reps, [&] { sink += assemble_stiffness_cycle_naive(k_const, gms, geom, m).back()(0, 0); });
    row.fast_s =
        detail::best_seconds(reps, [&] { sink += assemble_stiffness_cycle_fast(k_const, gms, geom).back()(0, 0); });
    if (!std::isfinite(sink)) throw NumericalError("non-finite stiffness");
    return row;
}

// Time stepping with cached cycle Jacobians against a fresh factorization
// every step. `mesh_cycles` stiffness periods of the given configuration.
// Times the step loop only; the cache is built once beforehand.
inline BenchRow bench_jacobian(RunConfig cfg, double mesh_cycles, int reps = 3) {
    const AssembledModel am = assemble_model(cfg);
    const TimeVaryingSystem& sys = am.system;
    const SolverSettings s = solver_settings(cfg);
    sys.validate();
    s.validate();
    const long steps = static_cast<long>(std::llround(mesh_cycles / am.mesh_frequency / s.dt));
    BenchRow row{"cached_jacobian", steps};
    row.tolerance = 1e-8;
    row.asserted = steps >= 50;
    row.ratio_limit = 0.2;  // at least 5x
    const CycleJacobianCache cache = precompute_cycle_jacobians(sys, s);
    Eigen::MatrixXd cached(sys.dofs(), steps + 1), fresh(sys.dofs(), steps + 1);
    auto march = [&](const CycleJacobianCache* c, Eigen::MatrixXd& out) {
        NewmarkState st = initial_state(sys, s);
        StepWorkspace w;
        out.col(0) = st.u;
        for (long i = 1; i <= steps; ++i) {
            newmark_nr_step(st, c, sys, s, w);
            out.col(i) = st.u;
        }
    };
    row.fast_s = detail::best_seconds(reps, [&] { march(&cache, cached); });
    row.naive_s = detail::best_seconds(reps, [&] { march(nullptr, fresh); });
    const double scale = fresh.cwiseAbs().maxCoeff();
    row.max_rel_diff = scale > 0.0 ? (cached - fresh).cwiseAbs().maxCoeff() / scale : 0.0;
    detail::require_equivalent(row);
    return row;
}

inline void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows) {
    os << "kernel,size,naive_s,fast_s,ratio,max_rel_diff,tolerance,asserted,ratio_limit,pass\n";
    for (const auto& r : rows)
        os << r.kernel << ',' << r.size << ',' << r.naive_s << ',' << r.fast_s << ',' << r.ratio() << ','
           << r.max_rel_diff << ',' << r.tolerance << ',' << (r.asserted ? 1 : 0) << ',' << r.ratio_limit << ','
           << (r.pass() ? 1 : 0) << '\n';
}

}  // namespace gearsim
