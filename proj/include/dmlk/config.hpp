#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dmlk/dgp.hpp"
#include "dmlk/errors.hpp"
#include "dmlk/learners.hpp"
#include "dmlk/montecarlo.hpp"

namespace dmlk {

// Experiment grid description. The file format is flat `key = value` lines,
// lists comma-separated, '#' starts a comment:
//
//   design    = lowdim          # lowdim | highdim
//   n         = 500, 2000
//   r2        = 0.75, 0.90, 0.97
//   learners  = las, lin, rf
//   p         = 10              # optional for lowdim (fixed at 10)
//   rho       = 0.5             # optional, default 0.5
//   b_reps    = 200
//   k_folds   = 5               # optional, default 5
//   alpha     = 0.05            # optional, default 0.05
//   base_seed = 1               # optional, default 1
//
// Unknown or duplicate keys are rejected.
struct ExperimentConfig {
    Design design = Design::LowDim;
    std::vector<int> n_values;
    Vector r2_targets;
    std::vector<LearnerKind> learners;
    int p = 10;
    double rho = 0.5;
    int b_reps = 0;
    int k_folds = 5;
    double alpha = 0.05;
    std::uint64_t base_seed = 1;

    // Cells in grid order: n outermost, then overlap, then learner. The cell
    // index feeds the replication seed rule, so this order is part of the
    // reproducibility contract.
    std::vector<CellConfig> cells() const {
        std::vector<CellConfig> out;
        int index = 0;
        for (int n : n_values)
            for (double r2 : r2_targets)
                for (LearnerKind kind : learners) {
                    CellConfig cfg;
                    cfg.design = design;
                    cfg.n = n;
                    cfg.p = p;
                    cfg.rho = rho;
                    cfg.r2_target = r2;
                    cfg.learner.kind = kind;
                    cfg.b_reps = b_reps;
                    cfg.k_folds = k_folds;
                    cfg.alpha = alpha;
                    cfg.base_seed = base_seed;
                    cfg.cell_index = index++;
                    out.push_back(cfg);
                }
        return out;
    }
};

namespace config_detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    std::size_t e = s.find_last_not_of(" \t");
    return (b == std::string::npos) ? std::string() : s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(s);
    while (std::getline(ss, cur, ',')) {
        const std::string t = trim(cur);
        if (t.empty()) throw ValidationError("config: empty list element in '" + s + "'");
        out.push_back(t);
    }
    if (out.empty()) throw ValidationError("config: empty list");
    return out;
}

inline double to_double(const std::string& key, const std::string& s) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("config: field '" + key + "': cannot parse '" + s + "' as a number");
    }
}

inline long long to_int(const std::string& key, const std::string& s) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("config: field '" + key + "': cannot parse '" + s + "' as an integer");
    }
}

}  // namespace config_detail

inline void validate_config(const ExperimentConfig& cfg) {
    if (cfg.n_values.empty()) throw ValidationError("config: field 'n' is required");
    if (cfg.r2_targets.empty()) throw ValidationError("config: field 'r2' is required");
    if (cfg.learners.empty()) throw ValidationError("config: field 'learners' is required");
    if (cfg.b_reps < 1) throw ValidationError("config: field 'b_reps' must be >= 1");
    if (cfg.k_folds < 2) throw ValidationError("config: field 'k_folds' must be >= 2");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ValidationError("config: field 'alpha' must lie in (0, 1)");
    if (!(cfg.rho >= 0.0 && cfg.rho < 1.0)) throw ValidationError("config: field 'rho' must lie in [0, 1)");
    if (cfg.design == Design::LowDim && cfg.p != 10)
        throw ValidationError("config: the lowdim design fixes p = 10");
    if (cfg.p < 1) throw ValidationError("config: field 'p' must be >= 1");
    for (int n : cfg.n_values)
        if (n < 2 * cfg.k_folds)
            throw ValidationError("config: field 'n': need n >= 2 k_folds, got n = " + std::to_string(n));
    for (double r2 : cfg.r2_targets)
        if (!(r2 > 0.0 && r2 < 1.0)) throw ValidationError("config: field 'r2': targets must lie in (0, 1)");
    if (cfg.design == Design::HighDim)
        for (LearnerKind k : cfg.learners)
            if (k != LearnerKind::LAS)
                throw ValidationError("config: the highdim design supports the las learner only");
    for (std::size_t i = 0; i < cfg.learners.size(); ++i)
        for (std::size_t j = i + 1; j < cfg.learners.size(); ++j)
            if (cfg.learners[i] == cfg.learners[j]) throw ValidationError("config: duplicate learner in 'learners'");
}

inline ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::map<std::string, bool> seen;
    bool p_given = false;

    std::stringstream ss(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(ss, raw)) {
        ++line_no;
        std::string line = raw;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = config_detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config: line " + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key = config_detail::trim(line.substr(0, eq));
        const std::string value = config_detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ValidationError("config: line " + std::to_string(line_no) + ": expected 'key = value'");
        if (seen[key]) throw ValidationError("config: duplicate field '" + key + "'");
        seen[key] = true;

        if (key == "design") {
            if (value == "lowdim")
                cfg.design = Design::LowDim;
            else if (value == "highdim")
                cfg.design = Design::HighDim;
            else
                throw ValidationError("config: field 'design' must be lowdim or highdim, got '" + value + "'");
        } else if (key == "n") {
            for (const auto& s : config_detail::split_list(value))
                cfg.n_values.push_back(static_cast<int>(config_detail::to_int(key, s)));
        } else if (key == "r2") {
            for (const auto& s : config_detail::split_list(value)) cfg.r2_targets.push_back(config_detail::to_double(key, s));
        } else if (key == "learners") {
            for (const auto& s : config_detail::split_list(value)) cfg.learners.push_back(learner_from_name(s));
        } else if (key == "p") {
            cfg.p = static_cast<int>(config_detail::to_int(key, value));
            p_given = true;
        } else if (key == "rho") {
            cfg.rho = config_detail::to_double(key, value);
        } else if (key == "b_reps") {
            cfg.b_reps = static_cast<int>(config_detail::to_int(key, value));
        } else if (key == "k_folds") {
            cfg.k_folds = static_cast<int>(config_detail::to_int(key, value));
        } else if (key == "alpha") {
            cfg.alpha = config_detail::to_double(key, value);
        } else if (key == "base_seed") {
            const long long v = config_detail::to_int(key, value);
            if (v < 0) throw ValidationError("config: field 'base_seed' must be >= 0");
            cfg.base_seed = static_cast<std::uint64_t>(v);
        } else {
            throw ValidationError("config: unknown field '" + key + "'");
        }
    }
    if (cfg.design == Design::HighDim && !p_given)
        throw ValidationError("config: field 'p' is required for the highdim design");
    validate_config(cfg);
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("config: cannot read '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

}  // namespace dmlk
