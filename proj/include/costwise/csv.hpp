#pragma once

#include "costwise/error.hpp"
#include "costwise/measures.hpp"

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace costwise {

/// One trial of a convergence experiment. wall_time stays the last column so
/// byte comparisons can drop it.
struct ExperimentRecord {
    std::string experiment;
    std::size_t n = 0;
    std::size_t m = 0;
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    double l2_error = 0.0;
    double linf_error = 0.0;
    double best_approx_l2_error = 0.0;
    double cond = 0.0;
    double sigma_min = 0.0;
    double total_cost = 0.0;
    double expected_cost = 0.0;
    double wall_time = 0.0;
};

inline constexpr std::string_view experiment_header =
    "experiment,n,m,trial,seed,l2_error,linf_error,best_approx_l2_error,cond,sigma_min,total_cost,expected_cost,"
    "wall_time";

namespace csv {

/// Shortest round-trip text; "inf" / "-inf" / "nan" for non-finite values.
inline std::string number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return detail::format_real(v);
}

/// Quotes a field only when it needs it.
inline std::string field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + '"';
}

/// Splits one line; handles quoted fields. Throws config_error on an
/// unterminated quote.
inline std::vector<std::string> split(std::string_view line, std::size_t line_no) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (quoted) throw config_error("line " + std::to_string(line_no) + ": unterminated quoted field");
    out.push_back(std::move(cur));
    return out;
}

inline double parse_number(std::string_view s, std::size_t line_no, std::string_view column) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw config_error("line " + std::to_string(line_no) + ": column '" + std::string(column) +
                           "' is not a number: '" + std::string(s) + "'");
    return v;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;

    std::size_t column(std::string_view name) const {
        for (std::size_t k = 0; k < header.size(); ++k)
            if (header[k] == name) return k;
        throw config_error("CSV has no column '" + std::string(name) + "'");
    }
};

inline Table read(std::istream& in) {
    Table t;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split(line, line_no);
        if (t.header.empty()) {
            t.header = std::move(fields);
            continue;
        }
        if (fields.size() != t.header.size())
            throw config_error("line " + std::to_string(line_no) + ": expected " + std::to_string(t.header.size()) +
                               " fields, found " + std::to_string(fields.size()));
        t.rows.push_back(std::move(fields));
        t.line_numbers.push_back(line_no);
    }
    if (t.header.empty()) throw config_error("CSV input is empty");
    return t;
}

} // namespace csv

inline void write_records(std::ostream& out, const std::vector<ExperimentRecord>& records) {
    out << experiment_header << '\n';
    for (const auto& r : records) {
        out << csv::field(r.experiment) << ',' << r.n << ',' << r.m << ',' << r.trial << ',' << r.seed << ','
            << csv::number(r.l2_error) << ',' << csv::number(r.linf_error) << ','
            << csv::number(r.best_approx_l2_error) << ',' << csv::number(r.cond) << ','
            << csv::number(r.sigma_min) << ',' << csv::number(r.total_cost) << ','
            << csv::number(r.expected_cost) << ',' << csv::number(r.wall_time) << '\n';
    }
}

/// Geometric mean and population geometric standard deviation of the
/// positive entries; zeros and negatives are counted in `excluded`.
struct GeometricSummary {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double std = std::numeric_limits<double>::quiet_NaN();
    std::size_t used = 0;
    std::size_t excluded = 0;
};

inline GeometricSummary geometric_summary(const std::vector<double>& values) {
    GeometricSummary s;
    std::vector<double> logs;
    for (double v : values) {
        if (v > 0.0) logs.push_back(std::log(v));
        else ++s.excluded;
    }
    s.used = logs.size();
    if (logs.empty()) return s;
    double sum = 0.0;
    for (double l : logs) sum += l;
    const double mu = sum / static_cast<double>(logs.size());
    if (std::isinf(mu)) {
        s.mean = s.std = std::numeric_limits<double>::infinity();
        return s;
    }
    double ss = 0.0;
    for (double l : logs) ss += (l - mu) * (l - mu);
    s.mean = std::exp(mu);
    s.std = std::exp(std::sqrt(ss / static_cast<double>(logs.size())));
    return s;
}

/// Columns never aggregated.
inline bool is_bookkeeping_column(std::string_view name) {
    return name == "experiment" || name == "trial" || name == "seed" || name == "wall_time";
}

/// Groups rows by `keys` (in order of first appearance) and writes, per
/// group, count plus <metric>_geo_mean, <metric>_geo_std, <metric>_excluded
/// for every other numeric column.
inline void summarize(std::istream& in, const std::vector<std::string>& keys, std::ostream& out) {
    const csv::Table t = csv::read(in);
    if (keys.empty()) throw config_error("summarize: at least one group key is required");
    std::vector<std::size_t> key_cols;
    for (const auto& k : keys) key_cols.push_back(t.column(k));
    std::vector<std::size_t> metric_cols;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
        bool is_key = false;
        for (std::size_t kc : key_cols) is_key = is_key || kc == c;
        if (!is_key && !is_bookkeeping_column(t.header[c])) metric_cols.push_back(c);
    }

    std::vector<std::vector<std::string>> group_keys;
    std::map<std::vector<std::string>, std::size_t> index;
    std::vector<std::vector<std::vector<double>>> values; // group -> metric -> samples
    std::vector<std::size_t> counts;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        std::vector<std::string> key;
        for (std::size_t kc : key_cols) key.push_back(t.rows[r][kc]);
        auto [it, inserted] = index.emplace(key, group_keys.size());
        if (inserted) {
            group_keys.push_back(key);
            values.emplace_back(metric_cols.size());
            counts.push_back(0);
        }
        ++counts[it->second];
        for (std::size_t k = 0; k < metric_cols.size(); ++k) {
            const std::size_t c = metric_cols[k];
            values[it->second][k].push_back(csv::parse_number(t.rows[r][c], t.line_numbers[r], t.header[c]));
        }
    }

    for (std::size_t k = 0; k < keys.size(); ++k) out << (k ? "," : "") << csv::field(keys[k]);
    out << ",count";
    for (std::size_t c : metric_cols)
        out << ',' << t.header[c] << "_geo_mean," << t.header[c] << "_geo_std," << t.header[c] << "_excluded";
    out << '\n';
    for (std::size_t g = 0; g < group_keys.size(); ++g) {
        for (std::size_t k = 0; k < keys.size(); ++k) out << (k ? "," : "") << csv::field(group_keys[g][k]);
        out << ',' << counts[g];
        for (const auto& v : values[g]) {
            const GeometricSummary s = geometric_summary(v);
            out << ',' << csv::number(s.mean) << ',' << csv::number(s.std) << ',' << s.excluded;
        }
        out << '\n';
    }
}

} // namespace costwise
