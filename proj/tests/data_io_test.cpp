#include <catch2/catch.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "kinbm/data_io.hpp"
#include "kinbm/distributions.hpp"

using namespace kinbm;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("kinbm_test_" + std::to_string(Rng(::getpid(), 0).next_u64() % 1000000));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

KinbmRegParams test_frequency_model(double atom_logit = 1.6) {
    Eigen::MatrixXd B(1, 5);
    B << 0.3, 0.0, -0.12, -0.19, 0.0;
    return KinbmRegParams(1, true, {atom_logit}, {1.4}, B);
}

ParetoRegParams test_severity_model() {
    Eigen::MatrixXd D(1, 5);
    D << std::log(100.0), 0.0, 0.0, 0.0, 0.0;
    return ParetoRegParams({1.0}, {3.0}, D);
}

} // namespace

TEST_CASE("covariate coding", "[data_io]") {
    PolicyRecord a2{"x", 1, 1, 2, 4, {}};
    Eigen::RowVectorXd row = encode_design_row(a2);
    CHECK(row(0) == 1.0);
    CHECK(row(1) == 1.0);
    CHECK(row(2) == 1.0);
    CHECK(row(3) == 2.0);
    CHECK(row(4) == 4.0);

    PolicyRecord a3{"y", 0, 4, 1, 1, {}};
    row = encode_design_row(a3);
    CHECK(row(1) == 0.0);
    CHECK(row(2) == 4.0);
    CHECK(row(3) == 1.0);
    CHECK(row(4) == 1.0);

    PolicyRecord minimal{"z", 0, 1, 1, 1, {}};
    row = encode_design_row(minimal);
    CHECK(row == (Eigen::RowVectorXd(5) << 1, 0, 1, 1, 1).finished());
}

TEST_CASE("parse: header-only file, simple row, grouping by policy", "[data_io]") {
    TempDir dir;
    {
        std::ofstream out(dir.file("empty.csv"));
        out << portfolio_header << "\n";
    }
    CHECK(parse_portfolio(dir.file("empty.csv")).empty());

    {
        std::ofstream out(dir.file("one.csv"));
        out << portfolio_header << "\n";
        out << "P1,0,2,3,1,2011,2,100.5;3.2\n";
    }
    const auto records = parse_portfolio(dir.file("one.csv"));
    REQUIRE(records.size() == 1);
    CHECK(records[0].policy_id == "P1");
    CHECK(records[0].years.size() == 1);
    CHECK(records[0].years[0].count == 2);
    CHECK(records[0].years[0].severities == std::vector<double>{100.5, 3.2});

    {
        std::ofstream out(dir.file("grouped.csv"));
        out << portfolio_header << "\n";
        out << "P1,0,2,3,1,2012,0,\n";
        out << "P2,1,1,1,1,2011,1,50\n";
        out << "P1,0,2,3,1,2011,1,7.25\n";
    }
    const auto grouped = parse_portfolio(dir.file("grouped.csv"));
    REQUIRE(grouped.size() == 2);
    CHECK(grouped[0].policy_id == "P1");
    REQUIRE(grouped[0].years.size() == 2);
    CHECK(grouped[0].years[0].year == 2011); // sorted by year within policy
    CHECK(grouped[0].years[1].year == 2012);
}

TEST_CASE("parse errors carry line numbers", "[data_io]") {
    TempDir dir;
    auto write_and_expect = [&](const std::string& body, const std::string& needle) {
        const std::string path = dir.file("bad.csv");
        std::ofstream out(path);
        out << portfolio_header << "\n" << body;
        out.close();
        try {
            parse_portfolio(path);
            FAIL("expected a parse error for: " + body);
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    write_and_expect("P1,0,2,3,1,2011,2,100.5\n", "line 2");           // cardinality
    write_and_expect("P1,0,9,3,1,2011,0,\n", "age_class");             // class range
    write_and_expect("P1,0,2,3,1,2011,1,-4\n", "positive");            // bad severity
    write_and_expect("P1,0,2,3,1,2011,x,\n", "count");                 // bad integer
    write_and_expect("P1,0,2,3,1,2011,0\n", "8 fields");               // missing column

    const std::string path = dir.file("badheader.csv");
    std::ofstream out(path);
    out << "policy,count\n";
    out.close();
    CHECK_THROWS_AS(parse_portfolio(path), ParseError);
    CHECK_THROWS_AS(parse_portfolio(dir.file("missing.csv")), ParseError);
}

TEST_CASE("write -> parse round trip is exact on a synthetic portfolio", "[data_io]") {
    SimulationSpec spec;
    spec.n_policyholders = 1000;
    spec.years = 2;
    spec.frequency = test_frequency_model();
    spec.severity = test_severity_model();
    const auto records = simulate_portfolio(spec, 2027);

    TempDir dir;
    write_portfolio(dir.file("a.csv"), records);
    const auto parsed = parse_portfolio(dir.file("a.csv"));
    REQUIRE(parsed.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(parsed[i].policy_id == records[i].policy_id);
        CHECK(parsed[i].gender == records[i].gender);
        CHECK(parsed[i].age_class == records[i].age_class);
        REQUIRE(parsed[i].years.size() == records[i].years.size());
        for (std::size_t l = 0; l < records[i].years.size(); ++l) {
            CHECK(parsed[i].years[l].count == records[i].years[l].count);
            CHECK(parsed[i].years[l].severities == records[i].years[l].severities); // bit-level
        }
    }

    // writing the parsed records again is byte-identical
    write_portfolio(dir.file("b.csv"), parsed);
    CHECK(slurp(dir.file("a.csv")) == slurp(dir.file("b.csv")));
}

TEST_CASE("simulation determinism and the pure-inflation limit", "[data_io][simulate]") {
    SimulationSpec spec;
    spec.n_policyholders = 300;
    spec.years = 2;
    spec.frequency = test_frequency_model();
    spec.severity = test_severity_model();
    const auto a = simulate_portfolio(spec, 11);
    const auto b = simulate_portfolio(spec, 11);
    TempDir dir;
    write_portfolio(dir.file("a.csv"), a);
    write_portfolio(dir.file("b.csv"), b);
    CHECK(slurp(dir.file("a.csv")) == slurp(dir.file("b.csv")));

    SimulationSpec atom = spec;
    atom.frequency = test_frequency_model(-80.0); // atom weight ~ 1
    for (const auto& rec : simulate_portfolio(atom, 5))
        for (const auto& yr : rec.years) CHECK(yr.count == 1);
}

TEST_CASE("simulated moments match the generative law", "[data_io][simulate]") {
    SimulationSpec spec;
    spec.n_policyholders = 100000;
    spec.years = 1;
    spec.frequency = test_frequency_model();
    spec.severity = test_severity_model();
    const auto records = simulate_portfolio(spec, 303);

    const auto weights = spec.frequency.weights();
    const double p_atom = weights[0];
    // E[exp(x B)] over the uniform covariate law by enumeration
    double mean_mu = 0.0;
    for (int g = 0; g <= 1; ++g)
        for (int a = 1; a <= 4; ++a)
            for (int pr = 1; pr <= 4; ++pr)
                for (int ar = 1; ar <= 4; ++ar) {
                    Eigen::RowVectorXd x(5);
                    x << 1.0, g, a, pr, ar;
                    mean_mu += std::exp(x.dot(spec.frequency.coef.row(0))) / (2.0 * 4 * 4 * 4);
                }
    const double expected_mean = p_atom * 1.0 + (1.0 - p_atom) * mean_mu;

    double count_sum = 0.0, claims = 0.0, severity_sum = 0.0;
    for (const auto& rec : records)
        for (const auto& yr : rec.years) {
            count_sum += yr.count;
            claims += yr.count;
            for (double z : yr.severities) severity_sum += z;
        }
    const double mean_count = count_sum / spec.n_policyholders;
    CHECK(mean_count == Approx(expected_mean).epsilon(0.02));

    // unit-mean inverse gamma multiplier, intercept-only scale of 100
    CHECK(severity_sum / claims == Approx(100.0).epsilon(0.02));
}

TEST_CASE("portfolio to fitting-layout conversions", "[data_io]") {
    SimulationSpec spec;
    spec.n_policyholders = 50;
    spec.years = 3;
    spec.frequency = test_frequency_model();
    spec.severity = test_severity_model();
    const auto records = simulate_portfolio(spec, 7);

    const CountData counts = count_data_from_portfolio(records);
    CHECK(counts.n() == 150);
    counts.validate();
    const auto y_flat = counts_from_portfolio(records);
    CHECK(static_cast<int>(y_flat.size()) == counts.n());

    const SeverityData sev = severity_data_from_portfolio(records);
    int total_claims = 0;
    for (const auto& rec : records)
        for (const auto& yr : rec.years) total_claims += yr.count;
    CHECK(sev.n() == total_claims);
    if (sev.n() > 0) sev.validate();
}
