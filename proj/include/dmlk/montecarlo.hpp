#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "dmlk/dgp.hpp"
#include "dmlk/dml.hpp"
#include "dmlk/errors.hpp"
#include "dmlk/learners.hpp"
#include "dmlk/rng.hpp"

namespace dmlk {

// One (design, n, overlap, learner) Monte Carlo cell.
struct CellConfig {
    Design design = Design::LowDim;
    int n = 0;
    int p = 10;
    double rho = 0.5;
    double r2_target = 0.0;
    LearnerSpec learner;
    int b_reps = 0;
    int k_folds = 5;
    double alpha = 0.05;
    std::uint64_t base_seed = 1;
    int cell_index = 0;  // position in the experiment grid, part of the seed rule
};

struct RepRecord {
    // cell identity
    Design design = Design::LowDim;
    int n = 0;
    int p = 0;
    double r2_target = 0.0;
    LearnerKind learner = LearnerKind::LIN;
    int b_reps = 0;
    // replication
    int rep = 0;
    std::uint64_t seed = 0;
    double theta_hat = 0.0;
    double kappa = 0.0;
    double se = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    bool covered = false;
    double bias = 0.0;
    double sq_error = 0.0;
    double sample_r2 = 0.0;
};

struct CellFailure {
    int rep = 0;
    std::string message;
};

struct CellResult {
    std::vector<RepRecord> records;    // replication order
    std::vector<CellFailure> failures; // excluded from aggregates, counted
};

// Worker count for replication-level parallelism. DMLK_THREADS overrides the
// hardware default; the thread count never changes results.
inline int worker_count() {
    if (const char* env = std::getenv("DMLK_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

// Runs all replications of one cell. Replication r draws everything from the
// derived seed (base_seed, cell_index, r), so output is a pure function of
// the configuration no matter how many workers execute it.
inline CellResult run_cell(const CellConfig& cfg) {
    if (cfg.b_reps < 1) throw ValidationError("run_cell: b_reps must be >= 1");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ValidationError("run_cell: alpha must lie in (0, 1)");
    const DgpSpec spec = make_spec(cfg.design, cfg.p, cfg.rho, cfg.r2_target);
    if (cfg.n < 2 * cfg.k_folds) throw ValidationError("run_cell: need n >= 2 k_folds");

    std::vector<std::optional<RepRecord>> slots(static_cast<std::size_t>(cfg.b_reps));
    std::vector<CellFailure> failures;
    std::mutex failure_mutex;
    std::atomic<int> next{0};

    auto work = [&] {
        for (;;) {
            const int r = next.fetch_add(1);
            if (r >= cfg.b_reps) return;
            const std::uint64_t seed =
                derive_seed(cfg.base_seed, static_cast<std::uint64_t>(cfg.cell_index), static_cast<std::uint64_t>(r));
            try {
                SeededStream root(seed);
                SeededStream gen_stream = root.fork(1);
                const Dataset ds = gen_sample(spec, cfg.n, gen_stream);
                const DmlFit fit = run_dml(ds, cfg.learner, cfg.k_folds, cfg.alpha, root.fork(2));

                RepRecord rec;
                rec.design = cfg.design;
                rec.n = cfg.n;
                rec.p = cfg.p;
                rec.r2_target = cfg.r2_target;
                rec.learner = cfg.learner.kind;
                rec.b_reps = cfg.b_reps;
                rec.rep = r;
                rec.seed = seed;
                rec.theta_hat = fit.theta_hat;
                rec.kappa = fit.kappa;
                rec.se = fit.se;
                rec.ci_lo = fit.ci_lo;
                rec.ci_hi = fit.ci_hi;
                rec.covered = (fit.ci_lo <= spec.theta0 && spec.theta0 <= fit.ci_hi);
                rec.bias = fit.theta_hat - spec.theta0;
                rec.sq_error = rec.bias * rec.bias;
                rec.sample_r2 = realized_r2(ds);
                slots[static_cast<std::size_t>(r)] = rec;
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                failures.push_back({r, e.what()});
            }
        }
    };

    const int workers = std::clamp(worker_count(), 1, cfg.b_reps);
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    CellResult result;
    result.records.reserve(slots.size());
    for (auto& s : slots)
        if (s) result.records.push_back(*s);
    std::sort(failures.begin(), failures.end(), [](const CellFailure& a, const CellFailure& b) { return a.rep < b.rep; });
    result.failures = std::move(failures);
    return result;
}

struct CellSummary {
    Design design = Design::LowDim;
    int n = 0;
    int p = 0;
    double r2_target = 0.0;
    LearnerKind learner = LearnerKind::LIN;
    int b_reps = 0;
    int n_ok = 0;
    int failures = 0;
    double median_kappa = 0.0;
    double mean_kappa = 0.0;
    double sd_kappa = 0.0;
    double coverage = 0.0;
    double avg_ci_length = 0.0;
    double mean_bias = 0.0;
    double rmse = 0.0;
    RegimeLabel regime = RegimeLabel::WellConditioned;
};

// Median with the midpoint-of-two convention for even counts.
inline double median_of(Vector v) {
    if (v.empty()) throw ValidationError("median_of: empty input");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline CellSummary aggregate_cell(const std::vector<RepRecord>& records, int failures = 0) {
    if (records.empty()) throw ValidationError("aggregate_cell: no records");
    CellSummary s;
    const RepRecord& head = records.front();
    s.design = head.design;
    s.n = head.n;
    s.p = head.p;
    s.r2_target = head.r2_target;
    s.learner = head.learner;
    s.b_reps = head.b_reps;
    s.n_ok = static_cast<int>(records.size());
    s.failures = failures;

    Vector kappas;
    kappas.reserve(records.size());
    double cov = 0.0, len = 0.0, bias = 0.0, sq = 0.0;
    for (const RepRecord& r : records) {
        kappas.push_back(r.kappa);
        cov += r.covered ? 1.0 : 0.0;
        len += r.ci_hi - r.ci_lo;
        bias += r.bias;
        sq += r.sq_error;
    }
    const double m = static_cast<double>(records.size());
    s.median_kappa = median_of(kappas);
    s.mean_kappa = mean(kappas);
    s.sd_kappa = sample_sd(kappas);
    s.coverage = cov / m;
    s.avg_ci_length = len / m;
    s.mean_bias = bias / m;
    s.rmse = std::sqrt(sq / m);
    s.regime = classify_regime(s.median_kappa).label;
    return s;
}

using CellKey = std::tuple<int, int, int, double, int>;  // design, n, p, r2, learner

inline CellKey cell_key(Design design, int n, int p, double r2, LearnerKind learner) {
    return {static_cast<int>(design), n, p, r2, static_cast<int>(learner)};
}

struct RegimeRow {
    RegimeLabel regime = RegimeLabel::WellConditioned;
    LearnerKind learner = LearnerKind::LIN;
    int n_cells = 0;
    long n_reps = 0;
    double coverage = 0.0;
    double avg_ci_length = 0.0;
    double mean_bias = 0.0;
    double rmse = 0.0;
};

// Cells grouped by (regime of the cell's median kappa, learner); coverage,
// length, bias and rmse pool the member cells' replications directly, so
// larger cells weigh more.
inline std::vector<RegimeRow> regime_table(const std::vector<CellSummary>& summaries,
                                           const std::vector<RepRecord>& records) {
    std::map<CellKey, RegimeLabel> cell_regime;
    for (const CellSummary& s : summaries)
        cell_regime[cell_key(s.design, s.n, s.p, s.r2_target, s.learner)] = s.regime;

    struct Accum {
        int n_cells = 0;
        long n = 0;
        double cov = 0, len = 0, bias = 0, sq = 0;
    };
    std::map<std::pair<int, int>, Accum> groups;  // (regime, learner)
    for (const CellSummary& s : summaries) {
        auto& g = groups[{static_cast<int>(s.regime), static_cast<int>(s.learner)}];
        ++g.n_cells;
    }
    for (const RepRecord& r : records) {
        const auto it = cell_regime.find(cell_key(r.design, r.n, r.p, r.r2_target, r.learner));
        if (it == cell_regime.end()) throw ValidationError("regime_table: record without a matching cell summary");
        auto& g = groups[{static_cast<int>(it->second), static_cast<int>(r.learner)}];
        ++g.n;
        g.cov += r.covered ? 1.0 : 0.0;
        g.len += r.ci_hi - r.ci_lo;
        g.bias += r.bias;
        g.sq += r.sq_error;
    }

    std::vector<RegimeRow> rows;
    for (const auto& [key, g] : groups) {
        if (g.n == 0) continue;
        RegimeRow row;
        row.regime = static_cast<RegimeLabel>(key.first);
        row.learner = static_cast<LearnerKind>(key.second);
        row.n_cells = g.n_cells;
        row.n_reps = g.n;
        const double m = static_cast<double>(g.n);
        row.coverage = g.cov / m;
        row.avg_ci_length = g.len / m;
        row.mean_bias = g.bias / m;
        row.rmse = std::sqrt(g.sq / m);
        rows.push_back(row);
    }
    return rows;  // map order: by regime severity, then learner
}

struct DesignRow {
    double r2_target = 0.0;
    long n_reps = 0;
    double median_kappa = 0.0;
    double mean_kappa = 0.0;
    double sd_kappa = 0.0;
    std::vector<int> n_values;
    std::vector<LearnerKind> learners;
};

// Per-overlap conditioning summary pooled over sample sizes and learners at
// the replication level.
inline std::vector<DesignRow> design_table(const std::vector<RepRecord>& records) {
    std::map<double, std::vector<const RepRecord*>> by_r2;
    for (const RepRecord& r : records) by_r2[r.r2_target].push_back(&r);

    std::vector<DesignRow> rows;
    for (const auto& [r2, recs] : by_r2) {
        DesignRow row;
        row.r2_target = r2;
        row.n_reps = static_cast<long>(recs.size());
        Vector kappas;
        kappas.reserve(recs.size());
        std::map<int, bool> ns;
        std::map<int, bool> ls;
        for (const RepRecord* r : recs) {
            kappas.push_back(r->kappa);
            ns[r->n] = true;
            ls[static_cast<int>(r->learner)] = true;
        }
        row.median_kappa = median_of(kappas);
        row.mean_kappa = mean(kappas);
        row.sd_kappa = sample_sd(kappas);
        for (const auto& [n, _] : ns) row.n_values.push_back(n);
        for (const auto& [l, _] : ls) row.learners.push_back(static_cast<LearnerKind>(l));
        rows.push_back(row);
    }
    return rows;
}

// Rebuilds per-cell summaries from bare replication records, cells in first
// appearance order. Failures are inferred as b_reps minus the rows present,
// so re-aggregation of an emitted record set reproduces the original run.
inline std::vector<CellSummary> summarize_records(const std::vector<RepRecord>& records) {
    std::vector<CellKey> order;
    std::map<CellKey, std::vector<RepRecord>> groups;
    for (const RepRecord& r : records) {
        const CellKey key = cell_key(r.design, r.n, r.p, r.r2_target, r.learner);
        if (groups.find(key) == groups.end()) order.push_back(key);
        groups[key].push_back(r);
    }
    std::vector<CellSummary> out;
    out.reserve(order.size());
    for (const CellKey& key : order) {
        const auto& recs = groups[key];
        out.push_back(aggregate_cell(recs, recs.front().b_reps - static_cast<int>(recs.size())));
    }
    return out;
}

struct GridResult {
    std::vector<RepRecord> records;      // grid order, replications ascending
    std::vector<CellSummary> summaries;  // one per cell, grid order
    long total_failures = 0;
};

inline GridResult run_grid(const std::vector<CellConfig>& cells) {
    GridResult out;
    for (const CellConfig& cfg : cells) {
        CellResult cell = run_cell(cfg);
        if (!cell.records.empty())
            out.summaries.push_back(aggregate_cell(cell.records, static_cast<int>(cell.failures.size())));
        out.total_failures += static_cast<long>(cell.failures.size());
        out.records.insert(out.records.end(), cell.records.begin(), cell.records.end());
    }
    return out;
}

// The p > n sensitivity study: one lasso cell per overlap level.
inline GridResult run_highdim_study(int p, int n, const Vector& r2_grid, int b_reps, int k_folds, double alpha,
                                    std::uint64_t base_seed) {
    std::vector<CellConfig> cells;
    int index = 0;
    for (double r2 : r2_grid) {
        CellConfig cfg;
        cfg.design = Design::HighDim;
        cfg.p = p;
        cfg.n = n;
        cfg.r2_target = r2;
        cfg.learner.kind = LearnerKind::LAS;
        cfg.b_reps = b_reps;
        cfg.k_folds = k_folds;
        cfg.alpha = alpha;
        cfg.base_seed = base_seed;
        cfg.cell_index = index++;
        cells.push_back(cfg);
    }
    return run_grid(cells);
}

}  // namespace dmlk
