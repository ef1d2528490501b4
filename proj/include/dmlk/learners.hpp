#pragma once

#include <string>

#include "dmlk/errors.hpp"
#include "dmlk/forest.hpp"
#include "dmlk/lasso.hpp"
#include "dmlk/mat.hpp"
#include "dmlk/ols.hpp"
#include "dmlk/rng.hpp"

namespace dmlk {

enum class LearnerKind { LIN, LAS, RF };

inline const char* learner_name(LearnerKind k) {
    switch (k) {
        case LearnerKind::LIN: return "lin";
        case LearnerKind::LAS: return "las";
        default: return "rf";
    }
}

inline LearnerKind learner_from_name(const std::string& s) {
    if (s == "lin") return LearnerKind::LIN;
    if (s == "las") return LearnerKind::LAS;
    if (s == "rf") return LearnerKind::RF;
    throw ValidationError("unknown learner '" + s + "', expected lin, las or rf");
}

// One nuisance regressor choice plus its hyperparameters. Only the branch
// matching `kind` is consulted.
struct LearnerSpec {
    LearnerKind kind = LearnerKind::LIN;
    LassoParams lasso;
    RfParams rf;
};

// Immutable fitted state; safe to share across concurrent predict calls.
struct FittedRegressor {
    LearnerKind kind = LearnerKind::LIN;
    int p = 0;
    LinearModel linear;  // LIN and LAS
    ForestModel forest;  // RF

    double predict_row(const double* row) const {
        return kind == LearnerKind::RF ? forest.predict_row(row) : linear.predict_row(row);
    }
};

inline FittedRegressor fit(const LearnerSpec& spec, const Matrix& x, const Vector& y, SeededStream stream) {
    const int n = x.rows();
    if (static_cast<int>(y.size()) != n) throw ValidationError("fit: response length does not match design rows");
    const int required = (spec.kind == LearnerKind::LAS) ? std::max(2, spec.lasso.cv_folds) : 2;
    if (n < required)
        throw ValidationError("fit: need at least " + std::to_string(required) + " observations, got " +
                              std::to_string(n));
    if (!all_finite(x) || !all_finite(y)) throw ValidationError("fit: non-finite values in training data");

    FittedRegressor model;
    model.kind = spec.kind;
    model.p = x.cols();
    switch (spec.kind) {
        case LearnerKind::LIN: model.linear = fit_ols(x, y); break;
        case LearnerKind::LAS: model.linear = fit_lasso(spec.lasso, x, y, stream); break;
        case LearnerKind::RF: model.forest = fit_forest(spec.rf, x, y, stream); break;
    }
    return model;
}

inline Vector predict(const FittedRegressor& model, const Matrix& x) {
    if (x.cols() != model.p)
        throw ValidationError("predict: matrix has " + std::to_string(x.cols()) + " columns, model was trained on " +
                              std::to_string(model.p));
    Vector out(static_cast<std::size_t>(x.rows()));
    for (int i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = model.predict_row(x.row(i));
    return out;
}

}  // namespace dmlk
