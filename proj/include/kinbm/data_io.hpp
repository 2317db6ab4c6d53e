// Portfolio CSV ingestion, covariate coding, and synthetic portfolio
// generation from the frequency/severity generative model.
//
// CSV schema (header mandatory, UTF-8, "." decimal point):
//   policy_id,gender,age_class,price_class,area_class,year,count,severities
// severities are ";"-joined positive decimals whose cardinality equals count.
#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "kinbm/distributions.hpp"
#include "kinbm/regression.hpp"
#include "kinbm/rng.hpp"

namespace kinbm {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct YearRecord {
    int year = 0;
    int count = 0;
    std::vector<double> severities;
};

struct PolicyRecord {
    std::string policy_id;
    int gender = 0;      // 0 woman, 1 man
    int age_class = 1;   // 1..4
    int price_class = 1; // 1..4
    int area_class = 1;  // 1..4
    std::vector<YearRecord> years;
};

inline constexpr const char* portfolio_header =
    "policy_id,gender,age_class,price_class,area_class,year,count,severities";

// (1, gender, age_class, price_class, area_class): the class codes enter as
// numeric levels, one coefficient per covariate.
inline Eigen::RowVectorXd encode_design_row(const PolicyRecord& record) {
    Eigen::RowVectorXd x(5);
    x << 1.0, record.gender, record.age_class, record.price_class, record.area_class;
    return x;
}

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

inline int parse_int(const std::string& s, std::size_t line_no, const char* what) {
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ParseError("line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
    return v;
}

inline double parse_double(const std::string& s, std::size_t line_no, const char* what) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ParseError("line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
    return v;
}

inline void check_class_range(int v, int lo, int hi, std::size_t line_no, const char* what) {
    if (v < lo || v > hi)
        throw ParseError("line " + std::to_string(line_no) + ": " + what + " out of range [" +
                         std::to_string(lo) + "," + std::to_string(hi) + "]");
}

// shortest exact decimal rendering, so write -> parse is bit-level identity
inline std::string render_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace detail

// Parse a portfolio CSV into records grouped by policy id, years in file order
// sorted by year. Errors carry 1-based line numbers.
inline std::vector<PolicyRecord> parse_portfolio(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open portfolio file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty portfolio file '" + path + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != portfolio_header)
        throw ParseError("line 1: header mismatch, expected '" + std::string(portfolio_header) +
                         "'");
    std::vector<PolicyRecord> records;
    std::unordered_map<std::string, std::size_t> first_row;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = detail::split(line, ',');
        if (fields.size() != 8)
            throw ParseError("line " + std::to_string(line_no) + ": expected 8 fields, got " +
                             std::to_string(fields.size()));
        PolicyRecord rec;
        rec.policy_id = fields[0];
        rec.gender = detail::parse_int(fields[1], line_no, "gender");
        detail::check_class_range(rec.gender, 0, 1, line_no, "gender");
        rec.age_class = detail::parse_int(fields[2], line_no, "age_class");
        detail::check_class_range(rec.age_class, 1, 4, line_no, "age_class");
        rec.price_class = detail::parse_int(fields[3], line_no, "price_class");
        detail::check_class_range(rec.price_class, 1, 4, line_no, "price_class");
        rec.area_class = detail::parse_int(fields[4], line_no, "area_class");
        detail::check_class_range(rec.area_class, 1, 4, line_no, "area_class");
        YearRecord yr;
        yr.year = detail::parse_int(fields[5], line_no, "year");
        yr.count = detail::parse_int(fields[6], line_no, "count");
        if (yr.count < 0) throw ParseError("line " + std::to_string(line_no) + ": negative count");
        if (!fields[7].empty())
            for (const auto& tok : detail::split(fields[7], ';')) {
                const double z = detail::parse_double(tok, line_no, "severity");
                if (!(z > 0.0))
                    throw ParseError("line " + std::to_string(line_no) +
                                     ": severities must be positive");
                yr.severities.push_back(z);
            }
        if (static_cast<int>(yr.severities.size()) != yr.count)
            throw ParseError("line " + std::to_string(line_no) + ": " +
                             std::to_string(yr.severities.size()) + " severities for count " +
                             std::to_string(yr.count));
        auto found = first_row.find(rec.policy_id);
        if (found == first_row.end()) {
            first_row.emplace(rec.policy_id, records.size());
            records.push_back(rec);
            records.back().years.push_back(std::move(yr));
        } else {
            PolicyRecord& existing = records[found->second];
            if (existing.gender != rec.gender || existing.age_class != rec.age_class ||
                existing.price_class != rec.price_class || existing.area_class != rec.area_class)
                throw ParseError("line " + std::to_string(line_no) +
                                 ": covariates changed within policy '" + rec.policy_id + "'");
            existing.years.push_back(std::move(yr));
        }
    }
    for (auto& rec : records)
        std::stable_sort(rec.years.begin(), rec.years.end(),
                         [](const YearRecord& a, const YearRecord& b) { return a.year < b.year; });
    return records;
}

inline void write_portfolio(const std::string& path, const std::vector<PolicyRecord>& records) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write portfolio file '" + path + "'");
    out << portfolio_header << '\n';
    for (const auto& rec : records)
        for (const auto& yr : rec.years) {
            out << rec.policy_id << ',' << rec.gender << ',' << rec.age_class << ','
                << rec.price_class << ',' << rec.area_class << ',' << yr.year << ',' << yr.count
                << ',';
            for (std::size_t s = 0; s < yr.severities.size(); ++s) {
                if (s > 0) out << ';';
                out << detail::render_double(yr.severities[s]);
            }
            out << '\n';
        }
    if (!out) throw ParseError("write failed for '" + path + "'");
}

// policyholder-year observations for the count regression
inline CountData count_data_from_portfolio(const std::vector<PolicyRecord>& records) {
    std::size_t rows = 0;
    for (const auto& rec : records) rows += rec.years.size();
    CountData data;
    data.X.resize(static_cast<Eigen::Index>(rows), 5);
    data.y.resize(static_cast<Eigen::Index>(rows));
    Eigen::Index r = 0;
    for (const auto& rec : records) {
        const Eigen::RowVectorXd x = encode_design_row(rec);
        for (const auto& yr : rec.years) {
            data.X.row(r) = x;
            data.y[r] = yr.count;
            ++r;
        }
    }
    return data;
}

// per-claim observations for the severity regression
inline SeverityData severity_data_from_portfolio(const std::vector<PolicyRecord>& records) {
    std::size_t rows = 0;
    for (const auto& rec : records)
        for (const auto& yr : rec.years) rows += yr.severities.size();
    SeverityData data;
    data.W.resize(static_cast<Eigen::Index>(rows), 5);
    data.z.resize(static_cast<Eigen::Index>(rows));
    Eigen::Index r = 0;
    for (const auto& rec : records) {
        const Eigen::RowVectorXd w = encode_design_row(rec);
        for (const auto& yr : rec.years)
            for (double z : yr.severities) {
                data.W.row(r) = w;
                data.z[r] = z;
                ++r;
            }
    }
    return data;
}

inline std::vector<int> counts_from_portfolio(const std::vector<PolicyRecord>& records) {
    std::vector<int> y;
    for (const auto& rec : records)
        for (const auto& yr : rec.years) y.push_back(yr.count);
    return y;
}

// Categorical covariate law for simulation; probabilities per class level.
struct CovariateLaw {
    std::vector<double> gender{0.5, 0.5};          // classes 0, 1
    std::vector<double> age{0.25, 0.25, 0.25, 0.25};
    std::vector<double> price{0.25, 0.25, 0.25, 0.25};
    std::vector<double> area{0.25, 0.25, 0.25, 0.25};
};

namespace detail {

inline int draw_class(const std::vector<double>& probs, int first_level, Rng& rng) {
    const double u = rng.uniform();
    double cum = 0.0;
    for (std::size_t c = 0; c < probs.size(); ++c) {
        cum += probs[c];
        if (u <= cum) return first_level + static_cast<int>(c);
    }
    return first_level + static_cast<int>(probs.size()) - 1;
}

} // namespace detail

struct SimulationSpec {
    std::size_t n_policyholders = 1000;
    int years = 1;
    KinbmRegParams frequency;
    ParetoRegParams severity;
    CovariateLaw covariate_law;
};

// Generative model: each policyholder gets covariates, one frequency mixture
// component with a shared gamma multiplier u (unit mean), and one severity
// component with a shared inverse-gamma multiplier. Per year, the count is the
// inflation point with the model's atom probability, otherwise Poisson with
// mean exp(x B_j) u; claim sizes are exponential with the scale exp(w D_j) u'.
inline std::vector<PolicyRecord> simulate_portfolio(const SimulationSpec& spec,
                                                    std::uint64_t seed) {
    const KinbmRegParams& freq = spec.frequency;
    const ParetoRegParams& sev = spec.severity;
    const std::vector<double> freq_weights = freq.weights();
    const int offset = freq.inflated ? 1 : 0;
    const double p_atom = freq.inflated ? freq_weights[0] : 0.0;
    std::vector<PolicyRecord> records(spec.n_policyholders);
    for (std::size_t i = 0; i < spec.n_policyholders; ++i) {
        Rng rng(seed, i);
        PolicyRecord& rec = records[i];
        rec.policy_id = "P" + std::to_string(i + 1);
        rec.gender = detail::draw_class(spec.covariate_law.gender, 0, rng);
        rec.age_class = detail::draw_class(spec.covariate_law.age, 1, rng);
        rec.price_class = detail::draw_class(spec.covariate_law.price, 1, rng);
        rec.area_class = detail::draw_class(spec.covariate_law.area, 1, rng);
        const Eigen::RowVectorXd x = encode_design_row(rec);

        // frequency component and shared multiplier
        double cum = 0.0;
        const double su = rng.uniform() * (1.0 - p_atom);
        int comp = freq.nb_components() - 1;
        for (int j = 0; j < freq.nb_components(); ++j) {
            cum += freq_weights[j + offset];
            if (su <= cum) {
                comp = j;
                break;
            }
        }
        const double u = rng.gamma(freq.shapes[comp], freq.shapes[comp]);
        const double mu = std::exp(x.dot(freq.coef.row(comp))) * u;

        // severity component and shared multiplier
        double cum_s = 0.0;
        const double ss = rng.uniform();
        int scomp = sev.component_count() - 1;
        for (int j = 0; j < sev.component_count(); ++j) {
            cum_s += sev.weights[j];
            if (ss <= cum_s) {
                scomp = j;
                break;
            }
        }
        const double eta = sev.tail_indices[scomp];
        const double u_sev = 1.0 / rng.gamma(eta, eta - 1.0);
        const double theta = std::exp(x.dot(sev.coef.row(scomp))) * u_sev;

        rec.years.resize(spec.years);
        for (int l = 0; l < spec.years; ++l) {
            YearRecord& yr = rec.years[l];
            yr.year = l + 1;
            const bool inflate = freq.inflated && rng.uniform() <= p_atom;
            yr.count = inflate ? freq.k : rng.poisson(mu);
            yr.severities.resize(yr.count);
            for (int c = 0; c < yr.count; ++c) yr.severities[c] = rng.exponential(theta);
        }
    }
    return records;
}

} // namespace kinbm
