#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "dmlk/dgp.hpp"
#include "dmlk/errors.hpp"
#include "dmlk/montecarlo.hpp"

namespace dmlk {

// Shortest round-trip decimal representation.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace csv_detail {

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_double(const std::string& s, int row, int col) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw DataError("row " + std::to_string(row) + ", column " + std::to_string(col) +
                        ": cannot parse '" + s + "' as a number");
    return v;
}

inline long long parse_int(const std::string& s, int row, int col) {
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw DataError("row " + std::to_string(row) + ", column " + std::to_string(col) +
                        ": cannot parse '" + s + "' as an integer");
    return v;
}

inline std::uint64_t parse_u64(const std::string& s, int row, int col) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw DataError("row " + std::to_string(row) + ", column " + std::to_string(col) +
                        ": cannot parse '" + s + "' as an unsigned integer");
    return v;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    return out;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "' for reading");
    return in;
}

}  // namespace csv_detail

// Dataset export: header y,d,x1,...,xp with optional oracle_m, oracle_l,
// oracle_eps columns for synthetic data.
inline void write_dataset_csv(const std::string& path, const Dataset& ds, bool include_oracle = false) {
    auto out = csv_detail::open_out(path);
    out << "y,d";
    for (int j = 1; j <= ds.p(); ++j) out << ",x" << j;
    if (include_oracle && ds.oracle) out << ",oracle_m,oracle_l,oracle_eps";
    out << "\n";
    for (int i = 0; i < ds.n(); ++i) {
        const auto iu = static_cast<std::size_t>(i);
        out << format_double(ds.y[iu]) << ',' << format_double(ds.d[iu]);
        for (int j = 0; j < ds.p(); ++j) out << ',' << format_double(ds.x(i, j));
        if (include_oracle && ds.oracle)
            out << ',' << format_double(ds.oracle->true_m[iu]) << ',' << format_double(ds.oracle->true_l[iu]) << ','
                << format_double(ds.oracle->eps[iu]);
        out << "\n";
    }
}

// Reads y,d,x1..xp. Trailing oracle_* columns are ignored; any other column
// name is an error.
inline Dataset read_dataset_csv(const std::string& path) {
    auto in = csv_detail::open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("'" + path + "': empty file, expected a header row");
    const auto header = csv_detail::split_line(line);
    if (header.size() < 3 || header[0] != "y" || header[1] != "d")
        throw DataError("'" + path + "': header must start with y,d,x1,...");
    int p = 0;
    std::size_t col = 2;
    for (; col < header.size(); ++col) {
        if (header[col] == "x" + std::to_string(p + 1)) {
            ++p;
        } else {
            break;
        }
    }
    if (p == 0) throw DataError("'" + path + "': no covariate columns x1,... found");
    for (; col < header.size(); ++col)
        if (header[col].rfind("oracle_", 0) != 0)
            throw DataError("'" + path + "': unexpected column '" + header[col] + "'");
    const std::size_t ncols = header.size();

    std::vector<Vector> rows;
    int row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (line.empty()) continue;
        const auto fields = csv_detail::split_line(line);
        if (fields.size() != ncols)
            throw DataError("'" + path + "': row " + std::to_string(row_no) + " has " +
                            std::to_string(fields.size()) + " fields, expected " + std::to_string(ncols));
        Vector vals(static_cast<std::size_t>(p) + 2);
        for (std::size_t c = 0; c < vals.size(); ++c) vals[c] = csv_detail::parse_double(fields[c], row_no, static_cast<int>(c + 1));
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw DataError("'" + path + "': no data rows");

    Dataset ds;
    const int n = static_cast<int>(rows.size());
    ds.y.resize(static_cast<std::size_t>(n));
    ds.d.resize(static_cast<std::size_t>(n));
    ds.x = Matrix(n, p);
    for (int i = 0; i < n; ++i) {
        const auto& vals = rows[static_cast<std::size_t>(i)];
        ds.y[static_cast<std::size_t>(i)] = vals[0];
        ds.d[static_cast<std::size_t>(i)] = vals[1];
        for (int j = 0; j < p; ++j) ds.x(i, j) = vals[static_cast<std::size_t>(j) + 2];
    }
    if (!all_finite(ds.x) || !all_finite(ds.y) || !all_finite(ds.d))
        throw DataError("'" + path + "': non-finite values in data");
    return ds;
}

inline const std::string kRepsHeader =
    "design,n,p,r2_target,learner,b_reps,rep,seed,theta_hat,kappa,se,ci_lo,ci_hi,covered,bias,sq_error,sample_r2";

inline void write_reps_csv(const std::string& path, const std::vector<RepRecord>& records) {
    auto out = csv_detail::open_out(path);
    out << kRepsHeader << "\n";
    for (const RepRecord& r : records) {
        out << design_name(r.design) << ',' << r.n << ',' << r.p << ',' << format_double(r.r2_target) << ','
            << learner_name(r.learner) << ',' << r.b_reps << ',' << r.rep << ',' << r.seed << ','
            << format_double(r.theta_hat) << ',' << format_double(r.kappa) << ',' << format_double(r.se) << ','
            << format_double(r.ci_lo) << ',' << format_double(r.ci_hi) << ',' << (r.covered ? 1 : 0) << ','
            << format_double(r.bias) << ',' << format_double(r.sq_error) << ',' << format_double(r.sample_r2)
            << "\n";
    }
}

inline std::vector<RepRecord> read_reps_csv(const std::string& path) {
    auto in = csv_detail::open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("'" + path + "': empty file, expected a header row");
    {
        auto first = line;
        if (!first.empty() && first.back() == '\r') first.pop_back();
        if (first != kRepsHeader)
            throw DataError("'" + path + "': header does not match the replication schema");
    }
    std::vector<RepRecord> records;
    int row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (line.empty()) continue;
        const auto f = csv_detail::split_line(line);
        if (f.size() != 17)
            throw DataError("'" + path + "': row " + std::to_string(row_no) + " has " + std::to_string(f.size()) +
                            " fields, expected 17");
        RepRecord r;
        if (f[0] == "lowdim")
            r.design = Design::LowDim;
        else if (f[0] == "highdim")
            r.design = Design::HighDim;
        else
            throw DataError("row " + std::to_string(row_no) + ": unknown design '" + f[0] + "'");
        r.n = static_cast<int>(csv_detail::parse_int(f[1], row_no, 2));
        r.p = static_cast<int>(csv_detail::parse_int(f[2], row_no, 3));
        r.r2_target = csv_detail::parse_double(f[3], row_no, 4);
        try {
            r.learner = learner_from_name(f[4]);
        } catch (const ValidationError& e) {
            throw DataError("row " + std::to_string(row_no) + ": " + e.what());
        }
        r.b_reps = static_cast<int>(csv_detail::parse_int(f[5], row_no, 6));
        r.rep = static_cast<int>(csv_detail::parse_int(f[6], row_no, 7));
        r.seed = csv_detail::parse_u64(f[7], row_no, 8);
        r.theta_hat = csv_detail::parse_double(f[8], row_no, 9);
        r.kappa = csv_detail::parse_double(f[9], row_no, 10);
        r.se = csv_detail::parse_double(f[10], row_no, 11);
        r.ci_lo = csv_detail::parse_double(f[11], row_no, 12);
        r.ci_hi = csv_detail::parse_double(f[12], row_no, 13);
        const long long cov = csv_detail::parse_int(f[13], row_no, 14);
        if (cov != 0 && cov != 1) throw DataError("row " + std::to_string(row_no) + ": covered must be 0 or 1");
        r.covered = cov == 1;
        r.bias = csv_detail::parse_double(f[14], row_no, 15);
        r.sq_error = csv_detail::parse_double(f[15], row_no, 16);
        r.sample_r2 = csv_detail::parse_double(f[16], row_no, 17);
        records.push_back(r);
    }
    if (records.empty()) throw DataError("'" + path + "': no replication rows");
    return records;
}

inline void write_cells_csv(const std::string& path, const std::vector<CellSummary>& summaries) {
    auto out = csv_detail::open_out(path);
    out << "design,n,p,r2_target,learner,b_reps,n_ok,failures,median_kappa,mean_kappa,sd_kappa,coverage,"
           "avg_ci_length,mean_bias,rmse,regime\n";
    for (const CellSummary& s : summaries) {
        out << design_name(s.design) << ',' << s.n << ',' << s.p << ',' << format_double(s.r2_target) << ','
            << learner_name(s.learner) << ',' << s.b_reps << ',' << s.n_ok << ',' << s.failures << ','
            << format_double(s.median_kappa) << ',' << format_double(s.mean_kappa) << ','
            << format_double(s.sd_kappa) << ',' << format_double(s.coverage) << ','
            << format_double(s.avg_ci_length) << ',' << format_double(s.mean_bias) << ',' << format_double(s.rmse)
            << ',' << regime_token(s.regime) << "\n";
    }
}

inline void write_regimes_csv(const std::string& path, const std::vector<RegimeRow>& rows) {
    auto out = csv_detail::open_out(path);
    out << "regime,learner,n_cells,n_reps,coverage,avg_ci_length,mean_bias,rmse\n";
    for (const RegimeRow& r : rows) {
        out << regime_token(r.regime) << ',' << learner_name(r.learner) << ',' << r.n_cells << ',' << r.n_reps << ','
            << format_double(r.coverage) << ',' << format_double(r.avg_ci_length) << ','
            << format_double(r.mean_bias) << ',' << format_double(r.rmse) << "\n";
    }
}

inline void write_design_csv(const std::string& path, const std::vector<DesignRow>& rows) {
    auto out = csv_detail::open_out(path);
    out << "r2_target,n_reps,median_kappa,mean_kappa,sd_kappa,n_values,learners\n";
    for (const DesignRow& r : rows) {
        out << format_double(r.r2_target) << ',' << r.n_reps << ',' << format_double(r.median_kappa) << ','
            << format_double(r.mean_kappa) << ',' << format_double(r.sd_kappa) << ',';
        for (std::size_t i = 0; i < r.n_values.size(); ++i) out << (i ? "|" : "") << r.n_values[i];
        out << ',';
        for (std::size_t i = 0; i < r.learners.size(); ++i) out << (i ? "|" : "") << learner_name(r.learners[i]);
        out << "\n";
    }
}

}  // namespace dmlk
