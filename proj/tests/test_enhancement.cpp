#include <gtest/gtest.h>

#include <cmath>

#include "gearsim/enhancement.hpp"
#include "test_support.hpp"

using namespace gearsim;
using gearsim::testing::gaussian_noise;
using gearsim::testing::synthetic_set;

namespace {

LabeledSignals as_labeled(const gearsim::testing::SyntheticSet& s) { return {s.labels, s.signals}; }

Eigen::VectorXd pulse(Eigen::Index p, double center, double width) {
    Eigen::VectorXd x(p);
    for (Eigen::Index i = 0; i < p; ++i) {
        const double d = (static_cast<double>(i) - center) / width;
        x(i) = std::exp(-0.5 * d * d);
    }
    return x;
}

// Number of samples at or above half the maximum.
int half_max_width(const Eigen::VectorXd& x) {
    const double h = 0.5 * x.maxCoeff();
    int n = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) n += x(i) >= h;
    return n;
}

double step_of(const std::vector<double>& axis) { return axis.size() > 1 ? axis[1] - axis[0] : 0.0; }

}  // namespace

TEST(Width, UnitRatioIsIdentity) {
    const Eigen::VectorXd x = gaussian_noise(256, 3);
    EXPECT_EQ(modify_width(x, 1.0), x);
    EXPECT_EQ(modify_width_about(x, 1.0, 17.3), x);
}

TEST(Width, HalfRatioHalvesPulseWidth) {
    const Eigen::VectorXd x = pulse(1024, 400.0, 20.0);
    const Eigen::VectorXd y = modify_width(x, 0.5);
    const int w0 = half_max_width(x), w1 = half_max_width(y);
    EXPECT_NEAR(static_cast<double>(w1), 0.5 * w0, 2.0);
    EXPECT_NEAR(energy_centroid(y), energy_centroid(x), 0.5);
    EXPECT_NEAR(y.maxCoeff(), 1.0, 1e-3);
}

TEST(Width, CompressionZeroPadsOutsideWindow) {
    const Eigen::VectorXd x = Eigen::VectorXd::Ones(400);
    const Eigen::VectorXd y = modify_width_about(x, 0.25, 200.0);
    EXPECT_EQ(y(0), 0.0);
    EXPECT_EQ(y(399), 0.0);
    EXPECT_DOUBLE_EQ(y(200), 1.0);
    EXPECT_NEAR(y.sum(), 100.0, 2.0);
}

TEST(Width, RoundTripPreservesInterior) {
    const Eigen::VectorXd x = pulse(1024, 512.0, 30.0) + 0.3 * pulse(1024, 450.0, 12.0);
    const double c = energy_centroid(x);
    const Eigen::VectorXd back = modify_width_about(modify_width_about(x, 0.5, c), 2.0, c);
    double num = 0.0, den = 0.0;
    for (Eigen::Index i = 256; i < 768; ++i) {
        num += (back(i) - x(i)) * (back(i) - x(i));
        den += x(i) * x(i);
    }
    EXPECT_LT(std::sqrt(num / den), 0.05);
}

TEST(Width, RatioTooSmallRejected) {
    const Eigen::VectorXd x = gaussian_noise(64, 1);
    EXPECT_THROW(modify_width(x, 0.05), ConfigError);
    EXPECT_NO_THROW(modify_width(x, 0.0625));
    EXPECT_THROW(modify_width(x, 0.0), ConfigError);
}

TEST(Width, CentroidOfZeroSignalIsZero) { EXPECT_EQ(energy_centroid(Eigen::VectorXd::Zero(32)), 0.0); }

TEST(Mix, LimitsAndLinearity) {
    const Eigen::VectorXd d = gaussian_noise(128, 1), h = gaussian_noise(128, 2);
    EXPECT_EQ(mix_fault_harmonics(d, h, 1.0), d);
    EXPECT_EQ(mix_fault_harmonics(d, h, 0.0), h);
    EXPECT_LT((mix_fault_harmonics(d, h, 2.25) - (2.25 * d - 1.25 * h)).norm(), 1e-12);
    const Eigen::VectorXd d2 = gaussian_noise(128, 3);
    const Eigen::VectorXd lhs = mix_fault_harmonics(d + d2, h, 0.7);
    const Eigen::VectorXd rhs = mix_fault_harmonics(d, h, 0.7) + 0.7 * d2;
    EXPECT_LT((lhs - rhs).norm(), 1e-12);
}

TEST(Mix, LengthMismatchRejected) {
    EXPECT_THROW(mix_fault_harmonics(Eigen::VectorXd::Zero(8), Eigen::VectorXd::Zero(9), 1.0), ConfigError);
}

TEST(Noise, ZeroLevelCopies) {
    const Eigen::VectorXd x = gaussian_noise(64, 5);
    const auto out = inject_noise(x, 0.0, 11, 3);
    ASSERT_EQ(out.size(), 3u);
    for (const auto& y : out) EXPECT_EQ(y, x);
}

TEST(Noise, Deterministic) {
    const Eigen::VectorXd x = gaussian_noise(64, 5);
    const auto a = inject_noise(x, 0.5, 11, 2), b = inject_noise(x, 0.5, 11, 2), c = inject_noise(x, 0.5, 12, 2);
    EXPECT_EQ(a[0], b[0]);
    EXPECT_EQ(a[1], b[1]);
    EXPECT_NE(a[0], a[1]);
    EXPECT_NE(a[0], c[0]);
}

TEST(Noise, VarianceAndBias) {
    const Eigen::Index p = 20000;
    const Eigen::VectorXd x = pulse(p, 5000.0, 300.0);
    const double level = 0.8;
    const int n = 8;
    const auto out = inject_noise(x, level, 7, n);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
    for (const auto& y : out) {
        const Eigen::VectorXd e = y - x;
        const double var = e.squaredNorm() / static_cast<double>(p) - std::pow(e.mean(), 2);
        EXPECT_NEAR(var, level * level, 0.05 * level * level);
        mean += y / n;
    }
    const double bias_rms = std::sqrt((mean - x).squaredNorm() / static_cast<double>(p));
    EXPECT_LT(bias_rms, 1.5 * level / std::sqrt(static_cast<double>(n)));
}

TEST(Noise, InvalidArgumentsRejected) {
    const Eigen::VectorXd x = Eigen::VectorXd::Zero(8);
    EXPECT_THROW(inject_noise(x, -0.1, 1, 1), ConfigError);
    EXPECT_THROW(inject_noise(x, 0.1, 1, 0), ConfigError);
}

TEST(CiTable, HealthyRmsNormalizedToOne) {
    const auto data = as_labeled(synthetic_set(512, 4, 2));
    const CiTable t = ci_table(data, {"log_diff_rms", "diff_skewness"});
    double m = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (data.labels[i] == kHealthyLabel) m += std::exp(t.values(static_cast<Eigen::Index>(i), 0)) / 4.0;
    EXPECT_NEAR(m, 1.0, 1e-12);
    EXPECT_NEAR(t.values(0, 1), moments(data.signals[0]).skewness, 1e-12);
}

TEST(CiTable, UnknownColumnAndMissingHealthyRejected) {
    auto data = as_labeled(synthetic_set(128, 2, 2));
    EXPECT_THROW(ci_table(data, {"no_such_ci"}), ConfigError);
    for (auto& l : data.labels) l = "fault";
    EXPECT_THROW(ci_table(data), ConfigError);
}

TEST(CiError, IdenticalTablesScoreZero) {
    const CiTable t = ci_table(as_labeled(synthetic_set(512, 4, 2)));
    const CiErrorCell cell = ci_error(t, t);
    EXPECT_EQ(cell.score, 0.0);
    EXPECT_EQ(cell.states, (std::vector<std::string>{"fault", "healthy"}));
}

TEST(CiError, OffsetBySigmaScoresOne) {
    const CiTable exp = ci_table(as_labeled(synthetic_set(512, 4, 2)));
    const Eigen::VectorXd s = ci_sigma(exp);
    CiTable sim = exp;
    sim.values.rowwise() += s.transpose();
    const CiErrorCell cell = ci_error(sim, exp);
    EXPECT_NEAR(cell.score, 1.0, 1e-12);
    EXPECT_NEAR(cell.state_errors.maxCoeff(), 1.0, 1e-12);
    EXPECT_NEAR(cell.state_errors.minCoeff(), 1.0, 1e-12);
}

TEST(CiError, AffineInvariant) {
    const CiTable exp = ci_table(as_labeled(synthetic_set(512, 4, 2)));
    const CiTable sim = ci_table(as_labeled(synthetic_set(512, 3, 9, 4.0)));
    const double base = ci_error(sim, exp).score;
    CiTable exp2 = exp, sim2 = sim;
    const Eigen::RowVector2d a(3.0, 0.25), b(-1.0, 7.0);
    for (CiTable* t : {&exp2, &sim2}) {
        t->values.array().rowwise() *= a.array();
        t->values.rowwise() += b;
    }
    EXPECT_NEAR(ci_error(sim2, exp2).score, base, 1e-10 * base);
}

TEST(CiError, ZeroSpreadRejected) {
    CiTable exp;
    exp.labels = {"healthy", "healthy"};
    exp.columns = default_error_columns();
    exp.values = Eigen::MatrixXd::Ones(2, 2);
    exp.values(1, 0) = 2.0;
    EXPECT_THROW(ci_error(exp, exp), ConfigError);
    exp.values.resize(1, 2);
    EXPECT_THROW(ci_sigma(exp), ConfigError);
}

TEST(CiError, MissingSimulatedStateRejected) {
    const CiTable exp = ci_table(as_labeled(synthetic_set(256, 3, 2)));
    CiTable sim = exp;
    for (auto& l : sim.labels) l = kHealthyLabel;
    EXPECT_THROW(ci_error(sim, exp), ConfigError);
}

TEST(Grid, DefaultGridShape) {
    const GridSpec g = default_grid();
    EXPECT_EQ(g.width_ratios.size(), 22u);
    EXPECT_EQ(g.fault_to_harmonics.size(), 61u);
    EXPECT_EQ(g.noise_levels.size(), 51u);
    EXPECT_DOUBLE_EQ(g.width_ratios.front(), 0.1);
    EXPECT_DOUBLE_EQ(g.width_ratios[18], 1.0);
    EXPECT_DOUBLE_EQ(g.fault_to_harmonics.back(), 3.0);
    EXPECT_DOUBLE_EQ(g.noise_levels.back(), 2.5);
    const EnhancementParams p = g.at(g.size() - 1);
    EXPECT_EQ(p.width_ratio, 2.0);
    EXPECT_EQ(p.noise_level, 2.5);
}

TEST(Tune, SelfMatchIsOptimal) {
    const auto sim = as_labeled(synthetic_set(512, 4, 3));
    GridSpec g;
    g.width_ratios = {0.5, 1.0, 1.5};
    g.fault_to_harmonics = {0.0, 1.0, 2.0};
    g.noise_levels = {0.0, 0.5};
    g.seed = 4;
    const TuneResult r = tune(sim, sim, g);
    EXPECT_EQ(r.best.width_ratio, 1.0);
    EXPECT_EQ(r.best.fault_to_harmonics, 1.0);
    EXPECT_EQ(r.best.noise_level, 0.0);
    EXPECT_LT(r.best_score, 1e-12);
    for (const auto& row : r.table.rows) EXPECT_GE(row.score, r.best_score);
    EXPECT_EQ(r.table.rows.size(), g.size());
}

class TuneRecovery : public ::testing::Test {
protected:
    void SetUp() override {
        sim = as_labeled(synthetic_set(1024, 6, 5));
        truth = {0.5, 1.5, 0.4};
        const Enhancer gen(sim, 6, 777);
        exp = gen.cis(gen.apply(truth));
        grid.width_ratios = linspace_step(0.3, 0.8, 0.1);
        grid.fault_to_harmonics = linspace_step(0.5, 2.5, 0.25);
        grid.noise_levels = linspace_step(0.0, 0.8, 0.2);
        grid.n_noise = 6;
        grid.seed = 31;
    }
    LabeledSignals sim;
    EnhancementParams truth;
    CiTable exp;
    GridSpec grid;
};

TEST_F(TuneRecovery, RecoversTruthWithinOneStep) {
    const TuneResult r = tune(sim, exp, grid);
    EXPECT_LE(std::abs(r.best.width_ratio - truth.width_ratio), step_of(grid.width_ratios) + 1e-9);
    EXPECT_LE(std::abs(r.best.fault_to_harmonics - truth.fault_to_harmonics),
              step_of(grid.fault_to_harmonics) + 1e-9);
    EXPECT_LE(std::abs(r.best.noise_level - truth.noise_level), step_of(grid.noise_levels) + 1e-9);
}

TEST_F(TuneRecovery, BestIsTableMinimumAndFirst) {
    const TuneResult r = tune(sim, exp, grid);
    for (std::size_t k = 0; k < r.table.rows.size(); ++k) {
        if (k < r.best_index) {
            EXPECT_GT(r.table.rows[k].score, r.best_score);
        }
        EXPECT_GE(r.table.rows[k].score, r.best_score);
    }
    EXPECT_EQ(r.table.rows[r.best_index].params.width_ratio, r.best.width_ratio);
    // Stored CIs reproduce the best score.
    EXPECT_NEAR(ci_error(r.best_sim_cis, exp, ci_sigma(exp)).score, r.best_score, 1e-12);
}

TEST_F(TuneRecovery, IndependentOfJobCount) {
    const TuneResult a = tune(sim, exp, grid, 1), b = tune(sim, exp, grid, 3);
    ASSERT_EQ(a.table.rows.size(), b.table.rows.size());
    for (std::size_t k = 0; k < a.table.rows.size(); ++k) EXPECT_EQ(a.table.rows[k].score, b.table.rows[k].score);
    EXPECT_EQ(a.best_index, b.best_index);
    EXPECT_EQ(a.table.states, b.table.states);
}

TEST(Tune, InvalidInputsRejected) {
    const auto sim = as_labeled(synthetic_set(256, 3, 3));
    GridSpec g;
    g.width_ratios = {1.0};
    g.fault_to_harmonics = {};
    g.noise_levels = {0.0};
    EXPECT_THROW(tune(sim, sim, g), ConfigError);
    g.fault_to_harmonics = {1.0};
    auto no_healthy = sim;
    for (auto& l : no_healthy.labels) l = "fault";
    EXPECT_THROW(tune(no_healthy, sim, g), ConfigError);
    EXPECT_THROW(tune(sim, no_healthy, g), ConfigError);
    g.width_ratios = {0.01};
    EXPECT_THROW(tune(sim, sim, g), ConfigError);
}

TEST(Enhancer, NoiseFreeApplyKeepsOneRowPerSignal) {
    const auto sim = as_labeled(synthetic_set(256, 3, 3));
    const Enhancer e(sim, 4, 1);
    EXPECT_EQ(e.apply({1.0, 1.0, 0.0}).size(), sim.size());
    EXPECT_EQ(e.apply({1.0, 1.0, 0.3}).size(), 4 * sim.size());
}

TEST(Enhancer, NoisyHealthyMeanRmsIsOne) {
    const auto sim = as_labeled(synthetic_set(256, 3, 3));
    const Enhancer e(sim, 4, 1);
    const LabeledSignals out = e.apply({0.7, 1.3, 0.9});
    std::vector<Eigen::VectorXd> healthy;
    for (std::size_t i = 0; i < out.size(); ++i)
        if (out.labels[i] == kHealthyLabel) healthy.push_back(out.signals[i]);
    EXPECT_NEAR(mean_rms(healthy), 1.0, 1e-12);
}

TEST(Enhancer, HealthySignalsOnlyReceiveNoise) {
    const auto sim = as_labeled(synthetic_set(256, 3, 3));
    const Enhancer e(sim, 1, 1);
    const LabeledSignals a = e.apply({0.5, 2.0, 0.0}), b = e.apply({1.0, 1.0, 0.0});
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.labels[i] == kHealthyLabel) {
            EXPECT_EQ(a.signals[i], b.signals[i]);
        } else {
            EXPECT_GT((a.signals[i] - b.signals[i]).norm(), 1e-3);
        }
    }
}
