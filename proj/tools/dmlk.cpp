// Command-line driver: run-sim executes an experiment grid and writes the CSV
// artifacts, diagnose runs one cross-fitted DML fit on a CSV dataset and
// reports the score condition number, report re-aggregates an existing
// replication file without re-simulating.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dmlk/config.hpp"
#include "dmlk/csv.hpp"
#include "dmlk/diagnose.hpp"
#include "dmlk/dmlk.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

namespace fs = std::filesystem;

// Writes the aggregate artifacts; on failure removes everything written so
// far so a broken run leaves no partial output behind.
class ArtifactWriter {
public:
    explicit ArtifactWriter(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    template <typename Fn>
    void emit(const std::string& name, Fn&& write_fn) {
        const std::string p = path(name);
        try {
            write_fn(p);
            written_.push_back(p);
        } catch (...) {
            cleanup();
            throw;
        }
    }

    void cleanup() {
        for (const auto& p : written_) {
            std::error_code ec;
            fs::remove(p, ec);
        }
        written_.clear();
    }

private:
    fs::path dir_;
    std::vector<std::string> written_;
};

void write_aggregates(ArtifactWriter& writer, const std::vector<dmlk::CellSummary>& summaries,
                      const std::vector<dmlk::RepRecord>& records) {
    const auto regimes = dmlk::regime_table(summaries, records);
    const auto design_rows = dmlk::design_table(records);
    writer.emit("cells.csv", [&](const std::string& p) { dmlk::write_cells_csv(p, summaries); });
    writer.emit("regimes.csv", [&](const std::string& p) { dmlk::write_regimes_csv(p, regimes); });
    writer.emit("design.csv", [&](const std::string& p) { dmlk::write_design_csv(p, design_rows); });
    writer.emit("report.md", [&](const std::string& p) {
        std::ofstream out(p, std::ios::binary);
        if (!out) throw dmlk::DataError("cannot open '" + p + "' for writing");
        out << dmlk::render_report_markdown(summaries, regimes, design_rows);
    });
}

int cmd_run_sim(const std::string& config_path, const std::string& out_dir) {
    const dmlk::ExperimentConfig cfg = dmlk::load_config(config_path);
    const auto cells = cfg.cells();
    std::cerr << "running " << cells.size() << " cells x " << cfg.b_reps << " replications (threads: "
              << dmlk::worker_count() << ")\n";
    const dmlk::GridResult grid = dmlk::run_grid(cells);
    if (grid.records.empty()) throw dmlk::NumericError("run-sim: every replication failed");

    ArtifactWriter writer{fs::path(out_dir)};
    writer.emit("reps.csv", [&](const std::string& p) { dmlk::write_reps_csv(p, grid.records); });
    write_aggregates(writer, grid.summaries, grid.records);

    std::cout << "wrote " << grid.records.size() << " replication rows over " << grid.summaries.size()
              << " cells to " << out_dir;
    if (grid.total_failures > 0) std::cout << " (" << grid.total_failures << " failed replications excluded)";
    std::cout << "\n";
    return kExitOk;
}

int cmd_report(const std::string& reps_path, const std::string& out_dir) {
    const auto records = dmlk::read_reps_csv(reps_path);
    const auto summaries = dmlk::summarize_records(records);
    ArtifactWriter writer{fs::path(out_dir)};
    write_aggregates(writer, summaries, records);
    std::cout << "re-aggregated " << records.size() << " replication rows into " << summaries.size()
              << " cells under " << out_dir << "\n";
    return kExitOk;
}

int cmd_diagnose(const std::string& data_path, const std::string& learner, int folds, double alpha,
                 std::uint64_t seed, const std::string& json_path) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw dmlk::ValidationError("diagnose: alpha must lie in (0, 1)");
    if (folds < 2) throw dmlk::ValidationError("diagnose: folds must be >= 2");
    dmlk::LearnerSpec spec;
    spec.kind = dmlk::learner_from_name(learner);

    const dmlk::Dataset ds = dmlk::read_dataset_csv(data_path);
    if (ds.n() < 2 * folds)
        throw dmlk::ValidationError("diagnose: need n >= 2 folds, got n = " + std::to_string(ds.n()) +
                                    " with folds = " + std::to_string(folds));

    const dmlk::DiagnoseReport rep = dmlk::diagnose(ds, spec, folds, alpha, seed);
    std::cout << dmlk::render_diagnose_text(rep);

    if (!json_path.empty()) {
        nlohmann::json j;
        j["theta_hat"] = rep.theta_hat;
        j["se"] = rep.se;
        j["ci"] = {{"lo", rep.ci_lo}, {"hi", rep.ci_hi}};
        j["kappa"] = rep.kappa;
        j["regime"] = dmlk::regime_token(rep.regime.label);
        j["n"] = rep.n;
        j["p"] = rep.p;
        j["learner"] = dmlk::learner_name(rep.learner);
        j["k_folds"] = rep.k_folds;
        j["alpha"] = rep.alpha;
        j["warnings"] = rep.warnings;
        std::ofstream out(json_path, std::ios::binary);
        if (!out) throw dmlk::DataError("cannot open '" + json_path + "' for writing");
        out << j.dump(2) << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cross-fitted DML for partially linear regression with score-conditioning diagnostics"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    auto* run_sim = app.add_subcommand("run-sim", "run an experiment grid and write CSV artifacts");
    run_sim->add_option("--config", config_path, "experiment configuration file")->required();
    run_sim->add_option("--out", out_dir, "output directory");

    std::string data_path, learner = "las", json_path;
    int folds = 5;
    double alpha = 0.05;
    std::uint64_t seed = 1;
    auto* diagnose = app.add_subcommand("diagnose", "run DML on a CSV dataset and report conditioning");
    diagnose->add_option("--data", data_path, "CSV file with header y,d,x1,...,xp")->required();
    diagnose->add_option("--learner", learner, "nuisance learner: lin, las or rf (default las)");
    diagnose->add_option("--folds", folds, "cross-fitting folds (default 5)");
    diagnose->add_option("--alpha", alpha, "interval level (default 0.05)");
    diagnose->add_option("--seed", seed, "stream seed (default 1)");
    diagnose->add_option("--json", json_path, "also write the report as JSON to this path");

    std::string reps_path, report_out = "out";
    auto* report = app.add_subcommand("report", "re-aggregate a reps.csv into cell/regime/design tables");
    report->add_option("--reps", reps_path, "replication file from a previous run-sim")->required();
    report->add_option("--out", report_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (run_sim->parsed()) return cmd_run_sim(config_path, out_dir);
        if (diagnose->parsed()) return cmd_diagnose(data_path, learner, folds, alpha, seed, json_path);
        if (report->parsed()) return cmd_report(reps_path, report_out);
        std::cerr << "no subcommand given\n";
        return kExitValidation;
    } catch (const dmlk::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}
