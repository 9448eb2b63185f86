#include <gtest/gtest.h>

#include "gearsim/model.hpp"
#include "gearsim/sigproc.hpp"
#include "gearsim/solver.hpp"
#include "test_support.hpp"

using namespace gearsim;
using gearsim::testing::rel_diff;

namespace {

TimeVaryingSystem sdof(double m, double k, double c, std::function<void(double, Eigen::VectorXd&)> force) {
    TimeVaryingSystem sys;
    sys.mass = Eigen::MatrixXd::Constant(1, 1, m);
    sys.damping = Eigen::MatrixXd::Constant(1, 1, c);
    sys.stiffness_cycle = {Eigen::MatrixXd::Constant(1, 1, k)};
    sys.force = std::move(force);
    return sys;
}

auto no_force = [](double, Eigen::VectorXd& f) { f.setZero(); };

// Max |u - cos(w t)| over [0, t_end] for unit initial displacement.
double free_vibration_error(double dt, double t_end) {
    const double w = 2.0 * pi;
    const auto sys = sdof(1.0, w * w, 0.0, no_force);
    SolverSettings s;
    s.dt = dt;
    s.nr_rel_tol = 1e-12;
    s.initial_displacement = Eigen::VectorXd::Ones(1);
    double err = 0.0;
    integrate_states(sys, s, std::lround(t_end / dt),
                     [&](long, const NewmarkState& st) { err = std::max(err, std::abs(st.u(0) - std::cos(w * st.t))); });
    return err;
}

RunConfig short_rig_run(double duration, const FaultSpec& fault = Healthy{}) {
    RunConfig cfg;
    cfg.transmission = gearsim::testing::rig_pair();
    cfg.conditions.duration_s = duration;
    cfg.fault = fault;
    cfg.seed = 7;
    return cfg;
}

}  // namespace

TEST(Newmark, ZeroStateStaysZero) {
    const auto sys = sdof(2.0, 50.0, 0.3, no_force);
    SolverSettings s;
    s.dt = 0.01;
    SolverStats stats = integrate_states(sys, s, 200, [](long, const NewmarkState& st) {
        EXPECT_EQ(st.u(0), 0.0);
        EXPECT_EQ(st.v(0), 0.0);
        EXPECT_EQ(st.a(0), 0.0);
    });
    EXPECT_EQ(stats.steps, 200);
}

TEST(Newmark, LinearProblemConvergesInOneIteration) {
    const auto sys = sdof(1.0, 400.0, 0.5, [](double t, Eigen::VectorXd& f) { f(0) = std::sin(13.0 * t); });
    for (bool cache : {true, false}) {
        SolverSettings s;
        s.dt = 1e-3;
        s.cache_jacobians = cache;
        const SolverStats stats = integrate_states(sys, s, 500, [](long, const NewmarkState&) {});
        ASSERT_EQ(stats.iteration_histogram.size(), 1u);
        EXPECT_EQ(stats.iteration_histogram.begin()->first, 1);
        EXPECT_EQ(stats.fallbacks, 0);
    }
}

TEST(Newmark, ForcedDampedSteadyStateAmplitude) {
    const double m = 1.3, wn = 2.0 * pi * 10.0, zeta = 0.05, w = 2.0 * pi * 7.0, f0 = 2.0;
    const double k = m * wn * wn, c = 2.0 * zeta * wn * m;
    const auto sys = sdof(m, k, c, [&](double t, Eigen::VectorXd& f) { f(0) = f0 * std::sin(w * t); });
    const double exact = f0 / std::hypot(k - m * w * w, c * w);
    SolverSettings s;
    s.dt = (2.0 * pi / w) / 400.0;
    const double t_end = 6.0, t_measure = 5.0;
    double amp = 0.0;
    integrate_states(sys, s, std::lround(t_end / s.dt), [&](long, const NewmarkState& st) {
        if (st.t >= t_measure) amp = std::max(amp, std::abs(st.u(0)));
    });
    EXPECT_LT(rel_diff(amp, exact), 0.005);
}

TEST(Newmark, UndampedEnergyDrift) {
    const double m = 0.7, w = 2.0 * pi * 3.0, k = m * w * w;
    const auto sys = sdof(m, k, 0.0, no_force);
    SolverSettings s;
    s.dt = (2.0 * pi / w) / 100.0;
    s.initial_displacement = Eigen::VectorXd::Constant(1, 0.01);
    s.initial_velocity = Eigen::VectorXd::Constant(1, -0.3);
    const double e0 = 0.5 * k * 1e-4 + 0.5 * m * 0.09;
    double worst = 0.0;
    integrate_states(sys, s, 100 * 100, [&](long, const NewmarkState& st) {
        const double e = 0.5 * k * st.u(0) * st.u(0) + 0.5 * m * st.v(0) * st.v(0);
        worst = std::max(worst, std::abs(e - e0) / e0);
    });
    EXPECT_LT(worst, 1e-3);
}

TEST(Newmark, SecondOrderConvergence) {
    const double e1 = free_vibration_error(1.0 / 50.0, 2.0);
    const double e2 = free_vibration_error(1.0 / 100.0, 2.0);
    const double e3 = free_vibration_error(1.0 / 200.0, 2.0);
    EXPECT_GE(e1 / e2, 3.4);
    EXPECT_LE(e1 / e2, 4.6);
    EXPECT_GE(e2 / e3, 3.4);
    EXPECT_LE(e2 / e3, 4.6);
}

TEST(Newmark, MatchesClassicalLinearNewmark) {
    // Two coupled DOFs with a constant stiffness: the iterated step must
    // reproduce the closed-form linear update.
    TimeVaryingSystem sys;
    sys.mass = Eigen::Vector2d(1.0, 2.0).asDiagonal();
    Eigen::Matrix2d k;
    k << 300.0, -100.0, -100.0, 250.0;
    sys.stiffness_cycle = {k, k, k};
    sys.damping = 0.01 * k + 0.2 * sys.mass;
    sys.force = [](double t, Eigen::VectorXd& f) { f = Eigen::Vector2d(std::sin(5.0 * t), std::cos(3.0 * t)); };
    SolverSettings s;
    s.dt = 2e-3;
    s.nr_rel_tol = 1e-12;
    const long steps = 2000;
    std::vector<Eigen::VectorXd> iterated;
    integrate_states(sys, s, steps, [&](long, const NewmarkState& st) { iterated.push_back(st.u); });

    const double b = s.newmark_beta, g = s.newmark_gamma, dt = s.dt;
    const Eigen::MatrixXd a_eff = sys.mass / (b * dt * dt) + sys.damping * (g / (b * dt)) + k;
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a_eff);
    NewmarkState st = initial_state(sys, s);
    double worst = 0.0;
    for (long i = 1; i <= steps; ++i) {
        Eigen::VectorXd f(2);
        sys.force(i * dt, f);
        const Eigen::VectorXd rhs = f + sys.mass * (st.u / (b * dt * dt) + st.v / (b * dt) + (0.5 / b - 1.0) * st.a) +
                                    sys.damping * (g / (b * dt) * st.u + (g / b - 1.0) * st.v +
                                                   dt * (0.5 * g / b - 1.0) * st.a);
        const Eigen::VectorXd u = lu.solve(rhs);
        const Eigen::VectorXd a = (u - st.u) / (b * dt * dt) - st.v / (b * dt) - (0.5 / b - 1.0) * st.a;
        st.v = st.v + dt * ((1.0 - g) * st.a + g * a);
        st.a = a;
        st.u = u;
        worst = std::max(worst, (iterated[static_cast<std::size_t>(i)] - u).norm() / u.norm());
    }
    EXPECT_LT(worst, 1e-10);
}

TEST(Newmark, RejectsInvalidParameters) {
    SolverSettings s;
    s.newmark_beta = 0.1;
    EXPECT_THROW(s.validate(), ConfigError);
    s = SolverSettings{};
    s.dt = 0.0;
    EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Newmark, ReportsNonConvergenceWithHistory) {
    // A stale cached inverse forces the fallback; an unreachable tolerance
    // then exhausts the iteration budget.
    TimeVaryingSystem sys;
    sys.mass = Eigen::Vector3d(1.1, 0.7, 2.3).asDiagonal();
    Eigen::Matrix3d k;
    k << 130.7, -41.3, 0.0, -41.3, 97.1, -13.9, 0.0, -13.9, 55.3;
    sys.stiffness_cycle = {k};
    sys.damping = 0.013 * k;
    sys.force = [](double t, Eigen::VectorXd& f) { f = Eigen::Vector3d(1.0 + t, std::sin(3.1 * t), 0.3); };
    SolverSettings s;
    s.dt = 1e-2;
    s.nr_rel_tol = 1e-300;
    s.nr_max_iter = 1;
    CycleJacobianCache stale;
    stale.effective = {effective_matrix(sys, k, s)};
    stale.inverse = {1e-9 * Eigen::MatrixXd::Identity(3, 3)};
    NewmarkState st = initial_state(sys, s);
    StepWorkspace w;
    SolverStats stats;
    try {
        newmark_nr_step(st, &stale, sys, s, w, &stats);
        FAIL() << "expected a convergence failure";
    } catch (const NumericalError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("did not converge"), std::string::npos) << msg;
        EXPECT_NE(msg.find("relative residuals"), std::string::npos) << msg;
    }
    EXPECT_EQ(stats.fallbacks, 1);
}

TEST(Newmark, StaleCacheFallsBackToExactMatrix) {
    const auto sys = sdof(1.0, 100.0, 0.0, [](double t, Eigen::VectorXd& f) { f(0) = 1.0 + t; });
    SolverSettings s;
    s.dt = 1e-2;
    s.nr_max_iter = 2;
    CycleJacobianCache stale;
    stale.effective = {effective_matrix(sys, sys.stiffness_cycle[0], s)};
    stale.inverse = {Eigen::MatrixXd::Constant(1, 1, 1e-9)};
    NewmarkState st = initial_state(sys, s);
    StepWorkspace w;
    SolverStats stats;
    newmark_nr_step(st, &stale, sys, s, w, &stats);
    EXPECT_EQ(stats.fallbacks, 1);
    EXPECT_TRUE(st.u.allFinite());
}

TEST(Newmark, ReportsDivergence) {
    const auto sys = sdof(1.0, 100.0, 0.0, [](double t, Eigen::VectorXd& f) { f(0) = t > 0.05 ? NAN : 0.0; });
    SolverSettings s;
    s.dt = 1e-2;
    EXPECT_THROW(integrate_states(sys, s, 10, [](long, const NewmarkState&) {}), NumericalError);
}

TEST(JacobianCache, SingularMatrixNamesCycleIndex) {
    auto sys = sdof(1.0, 1.0, 0.0, no_force);
    sys.mass.setZero();
    sys.stiffness_cycle = {Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Zero(1, 1)};
    try {
        precompute_cycle_jacobians(sys, SolverSettings{});
        FAIL() << "expected a singular matrix";
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("cycle index 1"), std::string::npos) << e.what();
    }
}

TEST(JacobianCache, ConstantStiffnessGivesEqualEntries) {
    auto sys = sdof(1.0, 9.0, 0.1, no_force);
    sys.stiffness_cycle.assign(8, Eigen::MatrixXd::Constant(1, 1, 9.0));
    const auto cache = precompute_cycle_jacobians(sys, SolverSettings{});
    for (const auto& j : cache.inverse) EXPECT_EQ(j, cache.inverse.front());
}

TEST(JacobianCache, InvertsEffectiveMatrices) {
    RunConfig cfg = short_rig_run(0.2, ToothBreakage{0.25, 3});
    cfg.numerics.cycle_points = 64;
    const AssembledModel am = assemble_model(cfg);
    const SolverSettings s = solver_settings(cfg);
    const auto cache = precompute_cycle_jacobians(am.system, s);
    ASSERT_EQ(cache.size(), am.system.cycle_points());
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(kDofCount, kDofCount);
    for (std::size_t i = 0; i < cache.size(); i += 97) {
        const Eigen::MatrixXd prod = cache.inverse[i] * effective_matrix(am.system, am.system.stiffness_cycle[i], s);
        EXPECT_LT((prod - id).cwiseAbs().maxCoeff(), 1e-10) << "cycle index " << i;
    }
}

TEST(JacobianCache, CachedTrajectoryMatchesFreshFactorization) {
    RunConfig cfg = short_rig_run(0.2, ToothBreakage{0.5, 3});
    cfg.numerics.nr_rel_tol = 1e-12;
    const AssembledModel am = assemble_model(cfg);
    SolverSettings s = solver_settings(cfg);
    const long steps = 400;
    std::vector<Eigen::VectorXd> cached, fresh;
    s.cache_jacobians = true;
    integrate_states(am.system, s, steps, [&](long, const NewmarkState& st) { cached.push_back(st.u); });
    s.cache_jacobians = false;
    integrate_states(am.system, s, steps, [&](long, const NewmarkState& st) { fresh.push_back(st.u); });
    double scale = 0.0, diff = 0.0;
    for (std::size_t i = 0; i < fresh.size(); ++i) {
        scale = std::max(scale, fresh[i].cwiseAbs().maxCoeff());
        diff = std::max(diff, (cached[i] - fresh[i]).cwiseAbs().maxCoeff());
    }
    EXPECT_LT(diff / scale, 1e-8);
}

TEST(Simulate, DeterministicForEqualSeeds) {
    const RunConfig cfg = short_rig_run(0.2);
    const SimulationResult a = simulate(cfg), b = simulate(cfg);
    EXPECT_EQ(a.accel_y, b.accel_y);
    EXPECT_EQ(a.shaft_angle, b.shaft_angle);
    EXPECT_EQ(a.tach_pulses, b.tach_pulses);
    RunConfig other = cfg;
    other.seed = 8;
    EXPECT_NE(simulate(other).accel_y, a.accel_y);
}

TEST(Simulate, DiscardsFirstOutputRevolution) {
    const RunConfig cfg = short_rig_run(0.2);
    const SimulationResult r = simulate(cfg);
    EXPECT_GE(r.time(0), 1.0 / cfg.output_speed_hz() - 1e-12);
    EXPECT_NEAR(r.time(r.size() - 1), 0.2, 1e-12);
    ASSERT_GE(r.tach_pulses.size(), 2u);
    // Pulses one input revolution apart.
    EXPECT_NEAR((r.tach_pulses[1] - r.tach_pulses[0]) / r.sampling_rate_hz, 1.0 / 40.0, 1e-4);
}

TEST(Simulate, RejectsTooShortDuration) {
    EXPECT_THROW(simulate(short_rig_run(0.05)), ConfigError);
}

TEST(Simulate, FaultedToothWindowCarriesTheImpulse) {
    const FaultSpec fault = ToothBreakage{0.5, 11};
    const RunConfig cfg = short_rig_run(1.5, fault);
    const SimulationResult r = simulate(cfg);
    const AssembledModel am = assemble_model(cfg);
    const int zg = 38, per_mesh = 32;
    RecordedSignal sig{r.accel_y, r.sampling_rate_hz, tach_from_angle(r.gear_angle), "output"};
    const SyncAverage sa = synchronous_average(angular_resample(sig, zg * per_mesh));
    // Short-time mean square over one mesh period, centred, circular.
    const Eigen::Index p = sa.cycle_signal.size();
    Eigen::VectorXd msq(p);
    for (Eigen::Index i = 0; i < p; ++i) {
        double acc = 0.0;
        for (int k = -per_mesh / 2; k < per_mesh / 2; ++k) {
            const double v = sa.cycle_signal((i + k + p) % p);
            acc += v * v;
        }
        msq(i) = acc;
    }
    Eigen::Index peak;
    msq.maxCoeff(&peak);
    // Pair n meshes gear tooth n mod z_g over mesh positions [n, n + eps].
    const double eps = contact_properties(cfg.transmission.pinion, cfg.transmission.gear).contact_ratio;
    const double centre = std::fmod(11.0 + 0.5 * eps - am.hunting_offset + 10.0 * zg, zg);
    double dist = std::abs(static_cast<double>(peak) / per_mesh - centre);
    dist = std::min(dist, zg - dist);
    EXPECT_LT(dist, 1.5) << "peak at mesh position " << static_cast<double>(peak) / per_mesh << ", tooth window centre "
                         << centre;
}
