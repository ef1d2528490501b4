#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include "dmlk/csv.hpp"
#include "dmlk/montecarlo.hpp"

namespace dmlk {

namespace report_detail {

inline std::string fixed(double v, int digits) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

}  // namespace report_detail

// Human-readable markdown companion to the CSV artifacts: conditioning by
// overlap, the cell-level grid, regime-level pooling, and the p > n table
// when high-dimensional cells are present.
inline std::string render_report_markdown(const std::vector<CellSummary>& summaries,
                                          const std::vector<RegimeRow>& regimes,
                                          const std::vector<DesignRow>& design_rows) {
    using report_detail::fixed;
    std::string md;
    md += "# Simulation report\n\n";

    md += "## Conditioning by overlap level\n\n";
    md += "| R2(D|X) target | Median kappa | Mean kappa | SD kappa | n values | Learners |\n";
    md += "|---:|---:|---:|---:|:--|:--|\n";
    for (const DesignRow& r : design_rows) {
        md += "| " + format_double(r.r2_target) + " | " + fixed(r.median_kappa, 4) + " | " + fixed(r.mean_kappa, 4) +
              " | " + fixed(r.sd_kappa, 4) + " | ";
        for (std::size_t i = 0; i < r.n_values.size(); ++i) md += (i ? ", " : "") + std::to_string(r.n_values[i]);
        md += " | ";
        for (std::size_t i = 0; i < r.learners.size(); ++i)
            md += (i ? ", " : "") + std::string(learner_name(r.learners[i]));
        md += " |\n";
    }
    md += "\n";

    md += "## Cell-level summary\n\n";
    md += "| n | R2 target | Learner | Median kappa | Mean kappa | Coverage | Avg CI length | Mean bias | RMSE | "
          "Regime |\n";
    md += "|---:|---:|:--|---:|---:|---:|---:|---:|---:|:--|\n";
    std::vector<CellSummary> ordered = summaries;
    std::sort(ordered.begin(), ordered.end(), [](const CellSummary& a, const CellSummary& b) {
        if (a.r2_target != b.r2_target) return a.r2_target < b.r2_target;
        if (a.n != b.n) return a.n < b.n;
        return std::string(learner_name(a.learner)) < learner_name(b.learner);
    });
    for (const CellSummary& s : ordered) {
        md += "| " + std::to_string(s.n) + " | " + format_double(s.r2_target) + " | " + learner_name(s.learner) +
              " | " + fixed(s.median_kappa, 4) + " | " + fixed(s.mean_kappa, 4) + " | " + fixed(s.coverage, 3) +
              " | " + fixed(s.avg_ci_length, 3) + " | " + fixed(s.mean_bias, 3) + " | " + fixed(s.rmse, 4) + " | " +
              regime_display(s.regime) + " |\n";
    }
    md += "\n";

    md += "## Coverage by conditioning regime and learner\n\n";
    md += "| Regime | Learner | Cells | Reps | Coverage (%) | Avg CI length | Bias | RMSE |\n";
    md += "|:--|:--|---:|---:|---:|---:|---:|---:|\n";
    for (const RegimeRow& r : regimes) {
        md += "| " + std::string(regime_display(r.regime)) + " | " + learner_name(r.learner) + " | " +
              std::to_string(r.n_cells) + " | " + std::to_string(r.n_reps) + " | " + fixed(100.0 * r.coverage, 1) +
              " | " + fixed(r.avg_ci_length, 3) + " | " + fixed(r.mean_bias, 3) + " | " + fixed(r.rmse, 3) + " |\n";
    }
    md += "\n";

    const bool any_highdim = std::any_of(summaries.begin(), summaries.end(),
                                         [](const CellSummary& s) { return s.design == Design::HighDim; });
    if (any_highdim) {
        md += "## High-dimensional study (p > n)\n\n";
        md += "| R2(D|X) target | Median kappa | Coverage (%) | Avg CI length | RMSE | Regime |\n";
        md += "|---:|---:|---:|---:|---:|:--|\n";
        for (const CellSummary& s : ordered) {
            if (s.design != Design::HighDim) continue;
            md += "| " + format_double(s.r2_target) + " | " + fixed(s.median_kappa, 2) + " | " +
                  fixed(100.0 * s.coverage, 1) + " | " + fixed(s.avg_ci_length, 3) + " | " + fixed(s.rmse, 3) +
                  " | " + regime_display(s.regime) + " |\n";
        }
        md += "\n";
    }
    return md;
}

}  // namespace dmlk
