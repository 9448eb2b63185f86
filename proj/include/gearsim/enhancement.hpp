#pragma once

// Calibration of simulated difference signals against measured condition
// indicators: width modification of the fault signature, fault-to-harmonics
// mixing, additive white noise, and an exhaustive grid search on the
// normalized indicator error.

#include <Eigen/Core>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <exception>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "gearsim/errors.hpp"
#include "gearsim/geometry.hpp"
#include "gearsim/rng.hpp"
#include "gearsim/sigproc.hpp"

namespace gearsim {

inline constexpr const char* kHealthyLabel = "healthy";

struct EnhancementParams {
    double width_ratio = 1.0;
    double fault_to_harmonics = 1.0;
    double noise_level = 0.0;

    void validate() const {
        if (!(width_ratio > 0.0)) throw ConfigError("width_ratio must be > 0");
        if (!(fault_to_harmonics >= 0.0)) throw ConfigError("fault_to_harmonics must be >= 0");
        if (!(noise_level >= 0.0)) throw ConfigError("noise_level must be >= 0");
    }
};

namespace detail {

inline double periodic_at(const Eigen::VectorXd& x, double pos) {
    const auto n = static_cast<double>(x.size());
    pos -= std::floor(pos / n) * n;
    const auto i = static_cast<Eigen::Index>(std::floor(pos));
    const double t = pos - static_cast<double>(i);
    const Eigen::Index p = x.size();
    auto at = [&](Eigen::Index k) { return x(((k % p) + p) % p); };
    if (t == 0.0) return at(i);
    const double p0 = at(i - 1), p1 = at(i), p2 = at(i + 1), p3 = at(i + 2);
    return p1 + 0.5 * t * (p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + t * (3.0 * (p1 - p2) + p3 - p0)));
}

}  // namespace detail

// Circular mean position of x^2 over the cycle, in samples; 0 for a zero
// signal.
inline double energy_centroid(const Eigen::VectorXd& x) {
    const auto n = static_cast<double>(x.size());
    double c = 0.0, s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double w = x(i) * x(i), a = 2.0 * pi * static_cast<double>(i) / n;
        c += w * std::cos(a);
        s += w * std::sin(a);
    }
    if (c == 0.0 && s == 0.0) return 0.0;
    double pos = std::atan2(s, c) * n / (2.0 * pi);
    if (pos < 0.0) pos += n;
    return pos;
}

// Scale the angular width of x by r about `center`, keeping the length.
// r < 1 compresses the whole cycle into r*P points and zero-pads the rest;
// r > 1 stretches the centered P/r window over the full cycle.
inline Eigen::VectorXd modify_width_about(const Eigen::VectorXd& x, double r, double center) {
    if (!(r > 0.0)) throw ConfigError("width ratio must be > 0");
    const auto p = static_cast<double>(x.size());
    if (r * p < 4.0) throw ConfigError("width ratio too small for the cycle length");
    if (r == 1.0) return x;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        double d = static_cast<double>(j) - center;
        d -= std::round(d / p) * p;  // circular offset in [-P/2, P/2]
        const double src = d / r;
        if (std::abs(src) > 0.5 * p) continue;
        out(j) = detail::periodic_at(x, center + src);
    }
    return out;
}

inline Eigen::VectorXd modify_width(const Eigen::VectorXd& x, double r) {
    return modify_width_about(x, r, energy_centroid(x));
}

inline Eigen::VectorXd mix_fault_harmonics(const Eigen::VectorXd& diff, const Eigen::VectorXd& diff_healthy,
                                           double alpha) {
    if (diff.size() != diff_healthy.size()) throw ConfigError("signal length mismatch");
    return alpha * diff + (1.0 - alpha) * diff_healthy;
}

inline std::vector<Eigen::VectorXd> inject_noise(const Eigen::VectorXd& x, double noise_level, std::uint64_t seed,
                                                 int n_realizations) {
    if (!(noise_level >= 0.0)) throw ConfigError("noise_level must be >= 0");
    if (n_realizations < 1) throw ConfigError("n_realizations must be >= 1");
    std::vector<Eigen::VectorXd> out;
    for (int q = 0; q < n_realizations; ++q) {
        Eigen::VectorXd y = x;
        if (noise_level > 0.0) {
            std::mt19937_64 rng(derive_seed(seed, {static_cast<std::uint64_t>(q)}));
            std::normal_distribution<double> normal(0.0, 1.0);
            for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += noise_level * normal(rng);
        }
        out.push_back(std::move(y));
    }
    return out;
}

// Difference signals with health-state labels, all on the same shaft and P.
struct LabeledSignals {
    std::vector<std::string> labels;
    std::vector<Eigen::VectorXd> signals;

    std::size_t size() const { return signals.size(); }
    void validate() const {
        if (labels.size() != signals.size()) throw ConfigError("label count does not match signal count");
        if (signals.empty()) throw ConfigError("empty dataset");
        for (const auto& s : signals)
            if (s.size() != signals.front().size()) throw ConfigError("signals differ in length");
    }
    bool has_healthy() const { return std::count(labels.begin(), labels.end(), kHealthyLabel) > 0; }
};

// Rows are signals, columns are condition indicators (log rms, log kurtosis).
struct CiTable {
    std::vector<std::string> labels;
    std::vector<std::string> columns;
    Eigen::MatrixXd values;
};

inline const std::vector<std::string>& default_error_columns() {
    static const std::vector<std::string> c{"log_diff_rms", "log_diff_kurtosis"};
    return c;
}

inline std::size_t ci_column_index(const std::string& name) {
    const auto& names = ConditionIndicatorSet::log_names;
    for (std::size_t i = 0; i < names.size(); ++i)
        if (name == names[i]) return i;
    throw ConfigError("unknown condition indicator column: " + name);
}

namespace detail {

inline bool needs_envelope(const std::vector<std::size_t>& cols) {
    return std::any_of(cols.begin(), cols.end(), [](std::size_t c) { return c >= 3; });
}

inline void selected_cis(const Eigen::VectorXd& x, const std::vector<std::size_t>& cols, bool env, double* out) {
    ConditionIndicatorSet ci;
    ci.diff = moments(x);
    if (env) ci.env = moments(envelope(x));
    else ci.env = {1.0, 0.0, 1.0};
    const auto v = ci.log_values();
    for (std::size_t j = 0; j < cols.size(); ++j) out[j] = v[cols[j]];
}

inline std::vector<std::size_t> column_indices(const std::vector<std::string>& names) {
    if (names.empty()) throw ConfigError("no condition indicator columns selected");
    std::vector<std::size_t> cols;
    for (const auto& n : names) cols.push_back(ci_column_index(n));
    return cols;
}

}  // namespace detail

// CI table of a dataset normalized by the mean rms of its own healthy subset.
inline CiTable ci_table(const LabeledSignals& data, const std::vector<std::string>& columns = default_error_columns()) {
    data.validate();
    if (!data.has_healthy()) throw ConfigError("dataset has no healthy subset");
    const auto cols = detail::column_indices(columns);
    std::vector<Eigen::VectorXd> healthy;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (data.labels[i] == kHealthyLabel) healthy.push_back(data.signals[i]);
    const auto normalized = normalize_by_healthy(data.signals, mean_rms(healthy));
    CiTable t;
    t.labels = data.labels;
    t.columns = columns;
    t.values.resize(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(cols.size()));
    const bool env = detail::needs_envelope(cols);
    std::vector<double> row(cols.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        detail::selected_cis(normalized[i], cols, env, row.data());
        for (std::size_t j = 0; j < cols.size(); ++j)
            t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    }
    return t;
}

// Sample standard deviation of every column over all rows.
inline Eigen::VectorXd ci_sigma(const CiTable& exp) {
    const Eigen::Index n = exp.values.rows();
    if (n < 2) throw ConfigError("at least two experimental signals are needed for the CI spread");
    const Eigen::RowVectorXd mean = exp.values.colwise().mean();
    Eigen::VectorXd s(exp.values.cols());
    for (Eigen::Index j = 0; j < s.size(); ++j)
        s(j) = std::sqrt((exp.values.col(j).array() - mean(j)).square().sum() / static_cast<double>(n - 1));
    return s;
}

// Normalized absolute CI error of every simulated row against the mean of
// the experimental rows of the same state.
struct CiErrorCell {
    std::vector<std::string> states;  // sorted
    Eigen::MatrixXd state_errors;      // states x CIs, |mean sim - mean exp| / sigma
    Eigen::MatrixXd signal_errors;     // sim rows x CIs, |sim - mean exp| / sigma
    double score = 0.0;                // mean of state_errors
};

namespace detail {

inline std::map<std::string, Eigen::RowVectorXd> state_means(const std::vector<std::string>& labels,
                                                             const Eigen::MatrixXd& values) {
    std::map<std::string, Eigen::RowVectorXd> sum;
    std::map<std::string, int> count;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto [it, fresh] = sum.try_emplace(labels[i], Eigen::RowVectorXd::Zero(values.cols()));
        it->second += values.row(static_cast<Eigen::Index>(i));
        ++count[labels[i]];
    }
    for (auto& [k, v] : sum) v /= static_cast<double>(count[k]);
    return sum;
}

}  // namespace detail

inline CiErrorCell ci_error(const CiTable& sim, const CiTable& exp, const Eigen::VectorXd& sigma) {
    if (sim.columns != exp.columns) throw ConfigError("simulated and experimental CI columns differ");
    if (sigma.size() != exp.values.cols()) throw ConfigError("sigma size mismatch");
    for (Eigen::Index j = 0; j < sigma.size(); ++j)
        if (!(sigma(j) > 0.0)) throw ConfigError("zero experimental spread for CI " + exp.columns[j]);
    const auto exp_mean = detail::state_means(exp.labels, exp.values);
    const auto sim_mean = detail::state_means(sim.labels, sim.values);
    CiErrorCell cell;
    for (const auto& [state, m] : exp_mean) {
        if (!sim_mean.count(state)) throw ConfigError("no simulated signals for state " + state);
        cell.states.push_back(state);
    }
    const auto ns = static_cast<Eigen::Index>(cell.states.size());
    cell.state_errors.resize(ns, sigma.size());
    for (Eigen::Index s = 0; s < ns; ++s) {
        const auto& st = cell.states[static_cast<std::size_t>(s)];
        cell.state_errors.row(s) =
            ((sim_mean.at(st) - exp_mean.at(st)).array().abs() / sigma.transpose().array()).matrix();
    }
    cell.signal_errors = Eigen::MatrixXd::Constant(sim.values.rows(), sigma.size(),
                                                   std::numeric_limits<double>::quiet_NaN());
    for (Eigen::Index i = 0; i < sim.values.rows(); ++i) {
        const auto it = exp_mean.find(sim.labels[static_cast<std::size_t>(i)]);
        if (it == exp_mean.end()) continue;
        cell.signal_errors.row(i) = ((sim.values.row(i) - it->second).array().abs() / sigma.transpose().array()).matrix();
    }
    cell.score = cell.state_errors.mean();
    return cell;
}

inline CiErrorCell ci_error(const CiTable& sim, const CiTable& exp) { return ci_error(sim, exp, ci_sigma(exp)); }

struct GridSpec {
    std::vector<double> width_ratios;
    std::vector<double> fault_to_harmonics;
    std::vector<double> noise_levels;
    int n_noise = 4;
    std::uint64_t seed = 0;

    std::size_t size() const { return width_ratios.size() * fault_to_harmonics.size() * noise_levels.size(); }
    EnhancementParams at(std::size_t k) const {
        const std::size_t na = fault_to_harmonics.size(), nn = noise_levels.size();
        return {width_ratios[k / (na * nn)], fault_to_harmonics[(k / nn) % na], noise_levels[k % nn]};
    }
    void validate() const {
        if (width_ratios.empty() || fault_to_harmonics.empty() || noise_levels.empty())
            throw ConfigError("every grid axis needs at least one value");
        if (n_noise < 1) throw ConfigError("n_noise must be >= 1");
        for (double r : width_ratios) EnhancementParams{r, 0.0, 0.0}.validate();
        for (double a : fault_to_harmonics) EnhancementParams{1.0, a, 0.0}.validate();
        for (double n : noise_levels) EnhancementParams{1.0, 0.0, n}.validate();
    }
};

// Values lo, lo + step, ... up to hi inclusive (within round-off).
inline std::vector<double> linspace_step(double lo, double hi, double step) {
    std::vector<double> v;
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long i = 0; i <= n; ++i) v.push_back(std::round((lo + static_cast<double>(i) * step) * 1e12) / 1e12);
    return v;
}

inline GridSpec default_grid() {
    GridSpec g;
    g.width_ratios = linspace_step(0.1, 1.0, 0.05);
    for (double r : {1.25, 1.5, 2.0}) g.width_ratios.push_back(r);
    g.fault_to_harmonics = linspace_step(0.0, 3.0, 0.05);
    g.noise_levels = linspace_step(0.0, 2.5, 0.05);
    return g;
}

struct ErrorTableRow {
    EnhancementParams params;
    double score = 0.0;
    Eigen::MatrixXd state_errors;
};

struct ErrorTable {
    std::vector<std::string> states;
    std::vector<std::string> columns;
    std::vector<ErrorTableRow> rows;  // grid order
};

struct TuneResult {
    EnhancementParams best;
    double best_score = 0.0;
    std::size_t best_index = 0;
    ErrorTable table;
    CiTable best_sim_cis;  // one row per simulated signal and noise realization
};

// Applies enhancement parameters to a simulated dataset. Signals are
// normalized by the simulated healthy mean rms; faulty signals are widened
// about their own energy centroid together with the healthy mean signal and
// mixed; every signal receives n_noise noise realizations; the result is
// renormalized by the mean rms of the noisy healthy set.
class Enhancer {
public:
    Enhancer(const LabeledSignals& sim, int n_noise, std::uint64_t seed,
             const std::vector<std::string>& columns = default_error_columns())
        : labels_(sim.labels), columns_(columns), cols_(detail::column_indices(columns)) {
        sim.validate();
        if (!sim.has_healthy()) throw ConfigError("simulated dataset has no healthy subset");
        if (n_noise < 1) throw ConfigError("n_noise must be >= 1");
        std::vector<Eigen::VectorXd> healthy;
        for (std::size_t i = 0; i < sim.size(); ++i)
            if (sim.labels[i] == kHealthyLabel) healthy.push_back(sim.signals[i]);
        normalized_ = normalize_by_healthy(sim.signals, mean_rms(healthy));
        healthy_mean_ = Eigen::VectorXd::Zero(sim.signals.front().size());
        for (std::size_t i = 0; i < sim.size(); ++i) {
            healthy_.push_back(sim.labels[i] == kHealthyLabel);
            if (healthy_.back()) healthy_mean_ += normalized_[i];
        }
        healthy_mean_ /= static_cast<double>(healthy.size());
        for (const auto& x : normalized_) centroid_.push_back(energy_centroid(x));
        // Common random numbers: realization q of signal i uses the same
        // unit noise at every grid point.
        for (std::size_t i = 0; i < sim.size(); ++i)
            for (int q = 0; q < n_noise; ++q) {
                std::mt19937_64 rng(derive_seed(seed, {static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(q)}));
                std::normal_distribution<double> normal(0.0, 1.0);
                Eigen::VectorXd e(normalized_[i].size());
                for (Eigen::Index k = 0; k < e.size(); ++k) e(k) = normal(rng);
                unit_noise_.push_back(std::move(e));
            }
        n_noise_ = n_noise;
    }

    const std::vector<std::string>& columns() const { return columns_; }
    std::size_t size() const { return normalized_.size(); }

    // Widened signal and widened healthy reference of signal i.
    struct Widened {
        std::vector<Eigen::VectorXd> signal, healthy;
    };
    Widened widen(double r) const {
        Widened w;
        for (std::size_t i = 0; i < size(); ++i) {
            if (healthy_[i]) {
                w.signal.push_back(normalized_[i]);
                w.healthy.emplace_back();
            } else {
                w.signal.push_back(modify_width_about(normalized_[i], r, centroid_[i]));
                w.healthy.push_back(modify_width_about(healthy_mean_, r, centroid_[i]));
            }
        }
        return w;
    }

    // Enhanced signals, n_noise per simulated signal (one without noise),
    // with their labels.
    LabeledSignals apply(const Widened& w, double alpha, double noise) const {
        LabeledSignals out;
        for (std::size_t i = 0; i < size(); ++i) {
            const Eigen::VectorXd base =
                healthy_[i] ? w.signal[i] : mix_fault_harmonics(w.signal[i], w.healthy[i], alpha);
            // Noise-free realizations coincide; one copy keeps group means exact.
            for (int q = 0; q < (noise > 0.0 ? n_noise_ : 1); ++q) {
                out.labels.push_back(labels_[i]);
                if (noise > 0.0) out.signals.push_back(base + noise * unit_noise_[i * n_noise_ + q]);
                else out.signals.push_back(base);
            }
        }
        if (noise > 0.0) {
            std::vector<Eigen::VectorXd> healthy;
            for (std::size_t k = 0; k < out.size(); ++k)
                if (out.labels[k] == kHealthyLabel) healthy.push_back(out.signals[k]);
            out.signals = normalize_by_healthy(std::move(out.signals), mean_rms(healthy));
        }
        return out;
    }
    LabeledSignals apply(const EnhancementParams& p) const {
        p.validate();
        return apply(widen(p.width_ratio), p.fault_to_harmonics, p.noise_level);
    }

    // CI table of already normalized enhanced signals.
    CiTable cis(const LabeledSignals& enhanced) const {
        CiTable t;
        t.labels = enhanced.labels;
        t.columns = columns_;
        t.values.resize(static_cast<Eigen::Index>(enhanced.size()), static_cast<Eigen::Index>(cols_.size()));
        const bool env = detail::needs_envelope(cols_);
        std::vector<double> row(cols_.size());
        for (std::size_t i = 0; i < enhanced.size(); ++i) {
            detail::selected_cis(enhanced.signals[i], cols_, env, row.data());
            for (std::size_t j = 0; j < cols_.size(); ++j)
                t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
        }
        return t;
    }

private:
    std::vector<std::string> labels_;
    std::vector<std::string> columns_;
    std::vector<std::size_t> cols_;
    std::vector<Eigen::VectorXd> normalized_;
    std::vector<bool> healthy_;
    Eigen::VectorXd healthy_mean_;
    std::vector<double> centroid_;
    std::vector<Eigen::VectorXd> unit_noise_;
    int n_noise_ = 1;
};

// Exhaustive grid search. Results do not depend on `jobs`.
inline TuneResult tune(const LabeledSignals& sim, const CiTable& exp, const GridSpec& grid, int jobs = 1) {
    grid.validate();
    if (std::count(exp.labels.begin(), exp.labels.end(), kHealthyLabel) == 0)
        throw ConfigError("experimental dataset has no healthy subset");
    const Enhancer enh(sim, grid.n_noise, grid.seed, exp.columns);
    const Eigen::VectorXd sigma = ci_sigma(exp);
    for (double r : grid.width_ratios)
        if (r * static_cast<double>(sim.signals.front().size()) < 4.0)
            throw ConfigError("width ratio too small for the cycle length");

    TuneResult res;
    res.table.columns = exp.columns;
    res.table.rows.resize(grid.size());
    const std::size_t per_r = grid.fault_to_harmonics.size() * grid.noise_levels.size();
    std::atomic<std::size_t> next{0};
    std::vector<std::string> states;
    std::mutex states_mutex;
    auto worker = [&] {
        for (std::size_t ri; (ri = next.fetch_add(1)) < grid.width_ratios.size();) {
            const auto w = enh.widen(grid.width_ratios[ri]);
            for (std::size_t k = ri * per_r; k < (ri + 1) * per_r; ++k) {
                const EnhancementParams p = grid.at(k);
                const CiErrorCell cell = ci_error(enh.cis(enh.apply(w, p.fault_to_harmonics, p.noise_level)), exp, sigma);
                res.table.rows[k] = {p, cell.score, cell.state_errors};
                if (k == 0) {
                    const std::lock_guard<std::mutex> lock(states_mutex);
                    states = cell.states;
                }
            }
        }
    };
    const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(grid.width_ratios.size())));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        std::exception_ptr failure;
        std::mutex failure_mutex;
        for (int t = 0; t < n_threads; ++t)
            pool.emplace_back([&] {
                try {
                    worker();
                } catch (...) {
                    const std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = grid.width_ratios.size();
                }
            });
        for (auto& th : pool) th.join();
        if (failure) std::rethrow_exception(failure);
    }
    res.table.states = states;
    // First minimum in grid order.
    res.best_index = 0;
    for (std::size_t k = 1; k < res.table.rows.size(); ++k)
        if (res.table.rows[k].score < res.table.rows[res.best_index].score) res.best_index = k;
    res.best = res.table.rows[res.best_index].params;
    res.best_score = res.table.rows[res.best_index].score;
    res.best_sim_cis = enh.cis(enh.apply(res.best));
    return res;
}

inline TuneResult tune(const LabeledSignals& sim, const LabeledSignals& exp, const GridSpec& grid,
                       const std::vector<std::string>& columns = default_error_columns(), int jobs = 1) {
    return tune(sim, ci_table(exp, columns), grid, jobs);
}

}  // namespace gearsim
