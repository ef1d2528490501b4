#pragma once

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "dmlk/csv.hpp"
#include "dmlk/dgp.hpp"
#include "dmlk/dml.hpp"

namespace dmlk {

// Point estimate plus the conditioning diagnostic, the unit of the
// "report kappa alongside the estimate" workflow.
struct DiagnoseReport {
    double theta_hat = 0.0;
    double se = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double kappa = 0.0;
    Regime regime;
    int n = 0;
    int p = 0;
    LearnerKind learner = LearnerKind::LAS;
    int k_folds = 0;
    double alpha = 0.0;
    std::vector<std::string> warnings;  // non-empty whenever the regime is not well-conditioned
};

inline DiagnoseReport diagnose(const Dataset& ds, const LearnerSpec& learner, int k_folds, double alpha,
                               std::uint64_t seed) {
    const DmlFit fit = run_dml(ds, learner, k_folds, alpha, SeededStream(seed));
    DiagnoseReport rep;
    rep.theta_hat = fit.theta_hat;
    rep.se = fit.se;
    rep.ci_lo = fit.ci_lo;
    rep.ci_hi = fit.ci_hi;
    rep.kappa = fit.kappa;
    rep.regime = classify_regime(fit.kappa);
    rep.n = ds.n();
    rep.p = ds.p();
    rep.learner = learner.kind;
    rep.k_folds = k_folds;
    rep.alpha = alpha;
    switch (rep.regime.label) {
        case RegimeLabel::WellConditioned:
            break;
        case RegimeLabel::ModeratelyIll:
            rep.warnings.push_back(
                "moderately ill-conditioned score (1 <= kappa < 2): intervals widen and nuisance bias is "
                "amplified; results warrant scrutiny");
            break;
        case RegimeLabel::SeverelyIll:
            rep.warnings.push_back(
                "severely ill-conditioned score (kappa >= 2): residual treatment variation is weak, intervals "
                "may be wide or badly centered; results warrant particular scrutiny");
            break;
    }
    return rep;
}

inline std::string guidance_sentence(RegimeLabel label) {
    switch (label) {
        case RegimeLabel::WellConditioned:
            return "score conditioning is healthy; the standard interval is trustworthy at this sample size";
        case RegimeLabel::ModeratelyIll:
            return "moderate ill-conditioning; estimates remain consistent but converge slowly and results "
                   "warrant scrutiny";
        default:
            return "severe ill-conditioning; treat the interval as a diagnostic summary, results warrant "
                   "particular scrutiny";
    }
}

inline std::string render_diagnose_text(const DiagnoseReport& r) {
    std::ostringstream out;
    out << "dml diagnosis (n = " << r.n << ", p = " << r.p << ", learner = " << learner_name(r.learner)
        << ", folds = " << r.k_folds << ")\n";
    out << "  theta_hat : " << format_double(r.theta_hat) << "\n";
    out << "  se        : " << format_double(r.se) << "\n";
    out << "  " << format_double(100.0 * (1.0 - r.alpha)) << "% CI    : [" << format_double(r.ci_lo) << ", "
        << format_double(r.ci_hi) << "]\n";
    out << "  kappa     : " << format_double(r.kappa) << "\n";
    out << "  regime    : " << regime_token(r.regime.label) << " (" << regime_display(r.regime.label) << ")\n";
    out << "  guidance  : " << guidance_sentence(r.regime.label) << "\n";
    for (const auto& w : r.warnings) out << "  warning   : " << w << "\n";
    return out.str();
}

}  // namespace dmlk
