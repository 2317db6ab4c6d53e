// kinbm: frequency/severity modeling toolkit for experience-rated pricing.
//
// Subcommands run the full study pipeline over CSV portfolios:
//   simulate  draw a synthetic portfolio from generating parameters
//   fit       maximum likelihood fit of a count or severity family by EM
//   compare   information criteria, Vuong/LR tests, replicate-MSE tables
//   price     rate / pure premium tables and per-history quotes
//
// Every run is driven by a JSON config (--config), with command-line
// overrides for the common knobs; the effective config is echoed for
// provenance. All randomness flows from the configured seed.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kinbm/kinbm.hpp"

using nlohmann::json;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("bad JSON in '" + path + "': " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << text;
}

// ---------------------------------------------------------------------------
// run configuration
// ---------------------------------------------------------------------------

struct RunConfig {
    json doc = json::object();
    std::string out_dir = ".";
    std::uint64_t seed = kinbm::default_seed;
    int threads = 1;
    std::string format = "text";

    const json& section(const std::string& name) const {
        static const json empty = json::object();
        if (!doc.contains(name)) return empty;
        if (!doc.at(name).is_object())
            throw ConfigError("config key '" + name + "' must be an object");
        return doc.at(name);
    }

    std::filesystem::path out_path(const std::string& name) const {
        return std::filesystem::path(out_dir) / name;
    }
};

template <class T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type");
    }
}

kinbm::FitConfig fit_config_from(const json& section, const RunConfig& run) {
    kinbm::FitConfig cfg;
    cfg.max_iter = get_or(section, "max_iter", cfg.max_iter);
    cfg.loglik_tol = get_or(section, "loglik_tol", cfg.loglik_tol);
    cfg.irls_max_inner = get_or(section, "irls_max_inner", cfg.irls_max_inner);
    cfg.irls_step_damping = get_or(section, "irls_step_damping", cfg.irls_step_damping);
    cfg.n_restarts = get_or(section, "n_restarts", cfg.n_restarts);
    const std::string init = get_or<std::string>(section, "init", "moment_split");
    if (init == "moment_split")
        cfg.init_strategy = kinbm::FitConfig::Init::moment_split;
    else if (init == "random_responsibilities")
        cfg.init_strategy = kinbm::FitConfig::Init::random_responsibilities;
    else
        throw ConfigError("fit.init must be moment_split or random_responsibilities");
    cfg.seed = run.seed;
    cfg.threads = run.threads;
    cfg.validate();
    return cfg;
}

kinbm::QuadratureConfig quadrature_config_from(const json& section) {
    kinbm::QuadratureConfig quad;
    quad.node_count = get_or(section, "quad_node_count", quad.node_count);
    quad.rel_tol = get_or(section, "quad_rel_tol", quad.rel_tol);
    quad.max_subdivisions = get_or(section, "quad_max_subdivisions", quad.max_subdivisions);
    if (get_or<std::string>(section, "quad_method", "gauss_laguerre") == "adaptive")
        quad.method = kinbm::QuadratureConfig::Method::adaptive;
    quad.validate();
    return quad;
}

void echo_effective_config(const RunConfig& run, const std::string& command) {
    json effective = run.doc;
    effective["command"] = command;
    effective["seed"] = run.seed;
    effective["threads"] = run.threads;
    effective["format"] = run.format;
    effective["out"] = run.out_dir;
    std::cout << "# effective config\n" << effective.dump(2) << "\n";
    std::filesystem::create_directories(run.out_dir);
    write_text_file(run.out_path("run_config.json").string(), effective.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// table rendering
// ---------------------------------------------------------------------------

std::string render_csv(const kinbm::TableDoc& table) {
    std::ostringstream os;
    for (std::size_t c = 0; c < table.columns.size(); ++c)
        os << table.columns[c] << (c + 1 < table.columns.size() ? "," : "\n");
    for (const auto& row : table.rows)
        for (std::size_t c = 0; c < row.size(); ++c)
            os << row[c] << (c + 1 < row.size() ? "," : "\n");
    return os.str();
}

std::string render_text(const kinbm::TableDoc& table) {
    std::vector<std::size_t> width(table.columns.size());
    for (std::size_t c = 0; c < table.columns.size(); ++c) width[c] = table.columns[c].size();
    for (const auto& row : table.rows)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    std::ostringstream os;
    os << table.title << "\n";
    auto emit = [&](const std::vector<std::string>& row) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            os << row[c];
            if (c + 1 < row.size()) os << std::string(width[c] - row[c].size() + 2, ' ');
        }
        os << "\n";
    };
    emit(table.columns);
    for (const auto& row : table.rows) emit(row);
    return os.str();
}

json table_to_json(const kinbm::TableDoc& table) {
    return {{"title", table.title}, {"columns", table.columns}, {"rows", table.rows}};
}

void emit_table(const kinbm::TableDoc& table, const RunConfig& run, const std::string& stem) {
    write_text_file(run.out_path(stem + ".csv").string(), render_csv(table));
    write_text_file(run.out_path(stem + ".txt").string(), render_text(table));
    if (run.format == "csv")
        std::cout << render_csv(table);
    else if (run.format == "json")
        std::cout << table_to_json(table).dump(2) << "\n";
    else
        std::cout << render_text(table);
}

// ---------------------------------------------------------------------------
// parameter / fit loading
// ---------------------------------------------------------------------------

json params_json_of(const json& doc) {
    if (doc.value("version", "") == kinbm::fit_version_tag) return doc.at("params");
    return doc;
}

kinbm::KinbmRegParams load_kinbm_reg(const std::string& path) {
    const json p = params_json_of(load_json_file(path));
    if (p.value("type", "") != "kinbm_reg")
        throw ConfigError("'" + path + "' does not hold count regression parameters");
    return p.get<kinbm::KinbmRegParams>();
}

kinbm::KinbmParams load_kinbm_dist(const std::string& path) {
    const json p = params_json_of(load_json_file(path));
    if (p.value("type", "") != "kinbm")
        throw ConfigError("'" + path + "' does not hold count distribution parameters");
    return p.get<kinbm::KinbmParams>();
}

kinbm::ParetoRegParams load_pareto_reg(const std::string& path) {
    const json p = params_json_of(load_json_file(path));
    if (p.value("type", "") != "pareto_reg")
        throw ConfigError("'" + path + "' does not hold severity regression parameters");
    return p.get<kinbm::ParetoRegParams>();
}

kinbm::ParetoMixParams load_pareto_dist(const std::string& path) {
    const json p = params_json_of(load_json_file(path));
    if (p.value("type", "") != "pareto_mix")
        throw ConfigError("'" + path + "' does not hold severity distribution parameters");
    return p.get<kinbm::ParetoMixParams>();
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int cmd_simulate(const RunConfig& run) {
    const json& cfg = run.section("simulate");
    kinbm::SimulationSpec spec;
    spec.n_policyholders = get_or<std::size_t>(cfg, "n", 1000);
    spec.years = get_or(cfg, "years", 1);
    if (spec.years < 1 || spec.n_policyholders < 1)
        throw ConfigError("simulate.n and simulate.years must be positive");

    if (cfg.contains("frequency"))
        spec.frequency = cfg.at("frequency").get<kinbm::KinbmRegParams>();
    else if (cfg.contains("frequency_file"))
        spec.frequency = load_kinbm_reg(cfg.at("frequency_file").get<std::string>());
    else
        throw ConfigError("simulate needs 'frequency' parameters (inline or frequency_file)");

    if (cfg.contains("severity"))
        spec.severity = cfg.at("severity").get<kinbm::ParetoRegParams>();
    else if (cfg.contains("severity_file"))
        spec.severity = load_pareto_reg(cfg.at("severity_file").get<std::string>());
    else
        throw ConfigError("simulate needs 'severity' parameters (inline or severity_file)");

    if (cfg.contains("covariate_law")) {
        const json& law = cfg.at("covariate_law");
        spec.covariate_law.gender = get_or(law, "gender", spec.covariate_law.gender);
        spec.covariate_law.age = get_or(law, "age", spec.covariate_law.age);
        spec.covariate_law.price = get_or(law, "price", spec.covariate_law.price);
        spec.covariate_law.area = get_or(law, "area", spec.covariate_law.area);
    }

    const auto records = kinbm::simulate_portfolio(spec, run.seed);
    const std::string portfolio_out =
        run.out_path(get_or<std::string>(cfg, "portfolio_out", "portfolio.csv")).string();
    kinbm::write_portfolio(portfolio_out, records);

    json params_doc = {{"seed", run.seed},
                       {"n", spec.n_policyholders},
                       {"years", spec.years},
                       {"frequency", spec.frequency},
                       {"severity", spec.severity}};
    const std::string params_out =
        run.out_path(get_or<std::string>(cfg, "params_out", "generating_params.json")).string();
    write_text_file(params_out, params_doc.dump(2) + "\n");

    std::size_t n_rows = 0;
    for (const auto& rec : records) n_rows += rec.years.size();
    std::cout << "simulate: wrote " << records.size() << " policyholders (" << n_rows
              << " policy-years) to " << portfolio_out << "\n";
    std::cout << "simulate: generating parameters at " << params_out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

std::string fit_summary(const kinbm::FitResult& fit) {
    std::ostringstream os;
    os << "family:     " << fit.family << "\n"
       << "n_obs:      " << fit.n_obs << "\n"
       << "df:         " << fit.df << "\n"
       << "loglik:     " << fit.loglik() << "\n"
       << "AIC:        " << kinbm::aic(fit) << "\n"
       << "SBIC:       " << kinbm::sbic(fit) << "\n"
       << "iterations: " << fit.iterations << (fit.converged ? " (converged)" : " (not converged)")
       << "\n";
    if (!fit.degenerate_components.empty()) {
        os << "degenerate components:";
        for (int c : fit.degenerate_components) os << ' ' << c;
        os << "\n";
    }
    std::visit([&os](const auto& p) { os << "params:     " << json(p).dump() << "\n"; },
               fit.params);
    return os.str();
}

int cmd_fit(const RunConfig& run, std::string family, int m, int k, std::string portfolio) {
    const json& cfg = run.section("fit");
    if (family.empty()) family = get_or<std::string>(cfg, "family", "");
    if (portfolio.empty()) portfolio = get_or<std::string>(cfg, "portfolio", "");
    if (m == 0) m = get_or(cfg, "m", 0);
    if (k < 0) k = get_or(cfg, "k", 1);
    if (family.empty()) throw ConfigError("fit.family is required");
    if (portfolio.empty()) throw ConfigError("fit.portfolio is required");

    const auto records = kinbm::parse_portfolio(portfolio);
    const kinbm::FitConfig fit_cfg = fit_config_from(cfg, run);

    kinbm::FitResult fit;
    if (family == "kinbm_dist") {
        fit = kinbm::em_fit_kinbm_dist(kinbm::counts_from_portfolio(records), m == 0 ? 2 : m, k,
                                       fit_cfg);
    } else if (family == "kinbm_reg") {
        fit = kinbm::em_fit_kinbm_reg(kinbm::count_data_from_portfolio(records), m == 0 ? 2 : m,
                                      k, fit_cfg);
    } else if (family == "nbm" || family == "nbm_dist") {
        fit = kinbm::em_fit_nbm_dist(kinbm::counts_from_portfolio(records), m == 0 ? 1 : m,
                                     fit_cfg);
    } else if (family == "nbm_reg") {
        fit = kinbm::em_fit_nbm_reg(kinbm::count_data_from_portfolio(records), m == 0 ? 1 : m,
                                    fit_cfg);
    } else if (family == "pareto_dist") {
        const kinbm::SeverityData sev = kinbm::severity_data_from_portfolio(records);
        std::vector<double> z(sev.z.data(), sev.z.data() + sev.n());
        fit = kinbm::em_fit_pareto_dist(z, m == 0 ? 1 : m, fit_cfg);
    } else if (family == "pareto_reg") {
        fit = kinbm::em_fit_pareto_reg(kinbm::severity_data_from_portfolio(records),
                                       m == 0 ? 1 : m, fit_cfg);
    } else {
        throw ConfigError("unknown fit.family '" + family +
                          "' (kinbm_dist|kinbm_reg|nbm|nbm_reg|pareto_dist|pareto_reg)");
    }

    const std::string fit_out =
        run.out_path(get_or<std::string>(cfg, "fit_out", "fit.json")).string();
    write_text_file(fit_out, json(fit).dump(2) + "\n");
    const std::string summary = fit_summary(fit);
    write_text_file(
        run.out_path(get_or<std::string>(cfg, "summary_out", "fit_summary.txt")).string(),
        summary);
    std::cout << summary << "fit: wrote " << fit_out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

bool is_count_family(const std::string& family) {
    return family == "kinbm_dist" || family == "kinbm_reg" || family == "nbm_dist" ||
           family == "nbm_reg";
}

std::vector<double> per_observation_loglik(const kinbm::FitResult& fit,
                                           const std::vector<kinbm::PolicyRecord>& records) {
    std::vector<double> ll;
    if (fit.family == "kinbm_dist" || fit.family == "nbm_dist") {
        const auto& p = std::get<kinbm::KinbmParams>(fit.params);
        for (int y : kinbm::counts_from_portfolio(records))
            ll.push_back(kinbm::kinbm_log_pmf(y, p));
    } else if (fit.family == "kinbm_reg" || fit.family == "nbm_reg") {
        const auto& p = std::get<kinbm::KinbmRegParams>(fit.params);
        const kinbm::CountData data = kinbm::count_data_from_portfolio(records);
        for (int i = 0; i < data.n(); ++i)
            ll.push_back(kinbm::kinbm_reg_log_pmf(data.y[i], data.X.row(i), p));
    } else if (fit.family == "pareto_reg") {
        const auto& p = std::get<kinbm::ParetoRegParams>(fit.params);
        const kinbm::SeverityData data = kinbm::severity_data_from_portfolio(records);
        for (int i = 0; i < data.n(); ++i)
            ll.push_back(kinbm::pareto_reg_log_pdf(data.z[i], data.W.row(i), p));
    } else if (fit.family == "pareto_dist") {
        const auto& p = std::get<kinbm::ParetoMixParams>(fit.params);
        const kinbm::SeverityData data = kinbm::severity_data_from_portfolio(records);
        for (int i = 0; i < data.n(); ++i)
            ll.push_back(std::log(kinbm::pareto_mix_pdf(data.z[i], p)));
    }
    return ll;
}

// nested when one family is a restriction of the other on the same data form:
// same family and inflation point with fewer components, or the no-atom family
// against the inflated one; both sit on parameter-space boundaries
bool nested_pair(const kinbm::FitResult& a, const kinbm::FitResult& b, bool& boundary) {
    const bool both_reg = (a.family == "kinbm_reg" || a.family == "nbm_reg") &&
                          (b.family == "kinbm_reg" || b.family == "nbm_reg");
    const bool both_dist = (a.family == "kinbm_dist" || a.family == "nbm_dist") &&
                           (b.family == "kinbm_dist" || b.family == "nbm_dist");
    if (!both_reg && !both_dist) return false;
    if (a.df == b.df) return false;
    auto inflation_point = [](const kinbm::FitResult& f) -> std::optional<int> {
        if (f.family.rfind("nbm", 0) == 0) return std::nullopt;
        if (std::holds_alternative<kinbm::KinbmParams>(f.params))
            return std::get<kinbm::KinbmParams>(f.params).k;
        return std::get<kinbm::KinbmRegParams>(f.params).k;
    };
    const auto ka = inflation_point(a), kb = inflation_point(b);
    if (ka && kb && *ka != *kb) return false; // different atoms: not nested
    boundary = true;                          // component counts / atom mass on the boundary
    return true;
}

int cmd_compare(const RunConfig& run, std::string portfolio, std::vector<std::string> fit_paths) {
    const json& cfg = run.section("compare");
    if (portfolio.empty()) portfolio = get_or<std::string>(cfg, "portfolio", "");
    if (fit_paths.empty()) fit_paths = get_or(cfg, "fits", std::vector<std::string>{});
    if (portfolio.empty()) throw ConfigError("compare.portfolio is required");
    if (fit_paths.size() < 2) throw ConfigError("compare needs at least two fit files");

    const auto records = kinbm::parse_portfolio(portfolio);
    std::vector<kinbm::FitResult> fits;
    std::vector<std::string> names;
    for (const auto& path : fit_paths) {
        fits.push_back(load_json_file(path).get<kinbm::FitResult>());
        // label by file stem; generic "fit.json" falls back to the directory name
        std::filesystem::path p(path);
        std::string name = p.stem().string();
        if (name == "fit" && p.has_parent_path()) name = p.parent_path().filename().string();
        if (name.empty()) name = p.stem().string();
        names.push_back(name);
    }

    // information criteria table
    kinbm::TableDoc criteria;
    criteria.title = "information criteria";
    criteria.columns = {"fit", "family", "df", "n", "loglik", "AIC", "SBIC"};
    for (std::size_t i = 0; i < fits.size(); ++i) {
        std::ostringstream ll, aic_s, sbic_s;
        ll.precision(10);
        aic_s.precision(10);
        sbic_s.precision(10);
        ll << fits[i].loglik();
        aic_s << kinbm::aic(fits[i]);
        sbic_s << kinbm::sbic(fits[i]);
        criteria.rows.push_back({names[i], fits[i].family, std::to_string(fits[i].df),
                                 std::to_string(fits[i].n_obs), ll.str(), aic_s.str(),
                                 sbic_s.str()});
    }
    emit_table(criteria, run, "comparison_criteria");

    // pairwise tests
    kinbm::TableDoc tests;
    tests.title = "pairwise tests (LR for nested pairs, Vuong otherwise)";
    tests.columns = {"model1", "model2", "test", "statistic", "p_value", "winner", "caveat"};
    for (std::size_t i = 0; i < fits.size(); ++i)
        for (std::size_t j = i + 1; j < fits.size(); ++j) {
            const bool count_i = is_count_family(fits[i].family);
            if (count_i != is_count_family(fits[j].family)) continue; // different data domains
            kinbm::ComparisonReport report;
            bool boundary = false;
            if (nested_pair(fits[i], fits[j], boundary)) {
                const bool i_nested = fits[i].df < fits[j].df;
                const auto& nested = i_nested ? fits[i] : fits[j];
                const auto& full = i_nested ? fits[j] : fits[i];
                report = kinbm::lr_test(nested, full, boundary);
                report.model1 = i_nested ? names[i] : names[j];
                report.model2 = i_nested ? names[j] : names[i];
                report.winner = (report.p_value < 0.05) ? report.model2 : report.model1;
            } else {
                const auto ll1 = per_observation_loglik(fits[i], records);
                const auto ll2 = per_observation_loglik(fits[j], records);
                if (ll1.size() != ll2.size() || ll1.empty()) continue;
                report = kinbm::vuong_test(ll1, ll2, names[i], names[j]);
            }
            std::ostringstream stat, pv;
            stat.precision(6);
            pv.precision(6);
            stat << report.statistic;
            pv << report.p_value;
            tests.rows.push_back({report.model1, report.model2, report.test_kind, stat.str(),
                                  pv.str(), report.winner,
                                  report.boundary_caveat ? "boundary" : ""});
        }
    emit_table(tests, run, "comparison_tests");

    // replicate-simulation MSE for distribution-form count fits
    const int reps = get_or(cfg, "mse_reps", 200);
    const auto observed_counts = kinbm::counts_from_portfolio(records);
    const auto observed = kinbm::FrequencyTable::from_counts(observed_counts);
    kinbm::TableDoc mse;
    mse.title = "replicate mean (MSE) of simulated frequencies, " + std::to_string(reps) +
                " replicates";
    mse.columns = {"count"};
    std::vector<std::vector<kinbm::SimulationMseCell>> mse_cells;
    for (std::size_t i = 0; i < fits.size(); ++i) {
        if (fits[i].family != "kinbm_dist" && fits[i].family != "nbm_dist") continue;
        const auto params = std::get<kinbm::KinbmParams>(fits[i].params);
        auto sampler = [params](std::size_t n, std::uint64_t seed) {
            return kinbm::kinbm_sample(n, params, seed);
        };
        mse_cells.push_back(kinbm::simulation_mse(sampler, observed, reps,
                                                  observed_counts.size(), run.seed, run.threads));
        mse.columns.push_back(names[i]);
    }
    if (!mse_cells.empty()) {
        for (int cell = 0; cell < kinbm::FrequencyTable::cell_count; ++cell) {
            std::vector<std::string> row{kinbm::FrequencyTable::cell_label(cell) + "(" +
                                         std::to_string(observed.cells[cell]) + ")"};
            for (const auto& cells : mse_cells) {
                std::ostringstream os;
                os.precision(6);
                os << cells[cell].mean << " (" << cells[cell].mse << ")";
                row.push_back(os.str());
            }
            mse.rows.push_back(std::move(row));
        }
        emit_table(mse, run, "comparison_mse");
    }
    return 0;
}

// ---------------------------------------------------------------------------
// price
// ---------------------------------------------------------------------------

std::vector<kinbm::ScenarioCategory> categories_from(const json& cfg) {
    std::vector<kinbm::ScenarioCategory> cats;
    if (!cfg.contains("categories")) {
        cats.push_back({"A1", std::nullopt});
        cats.push_back({"A2", kinbm::fixtures::category_a2_row()});
        cats.push_back({"A3", kinbm::fixtures::category_a3_row()});
        return cats;
    }
    for (const auto& c : cfg.at("categories")) {
        kinbm::ScenarioCategory cat;
        cat.label = c.at("label").get<std::string>();
        if (c.contains("covariates")) {
            const auto v = c.at("covariates").get<std::vector<double>>();
            Eigen::RowVectorXd row(v.size() + 1);
            row[0] = 1.0;
            for (std::size_t i = 0; i < v.size(); ++i) row[i + 1] = v[i];
            cat.covariates = row;
        }
        cats.push_back(std::move(cat));
    }
    return cats;
}

int cmd_price(const RunConfig& run) {
    const json& cfg = run.section("price");
    const kinbm::QuadratureConfig quad = quadrature_config_from(cfg);

    std::vector<kinbm::FrequencyModel> models;
    if (!cfg.contains("frequency_models")) throw ConfigError("price.frequency_models is required");
    for (const auto& m : cfg.at("frequency_models")) {
        kinbm::FrequencyModel model;
        model.id = m.at("id").get<std::string>();
        if (m.contains("dist_fit"))
            model.dist = load_kinbm_dist(m.at("dist_fit").get<std::string>());
        if (m.contains("reg_fit")) model.reg = load_kinbm_reg(m.at("reg_fit").get<std::string>());
        if (!model.dist && !model.reg)
            throw ConfigError("price model '" + model.id + "' has neither dist_fit nor reg_fit");
        models.push_back(std::move(model));
    }

    std::optional<kinbm::SeverityModel> severity;
    if (cfg.contains("severity_model")) {
        const json& s = cfg.at("severity_model");
        kinbm::SeverityModel model;
        model.id = get_or<std::string>(s, "id", "severity");
        if (s.contains("dist_fit"))
            model.dist = load_pareto_dist(s.at("dist_fit").get<std::string>());
        if (s.contains("reg_fit")) model.reg = load_pareto_reg(s.at("reg_fit").get<std::string>());
        severity = std::move(model);
    }

    const auto categories = categories_from(cfg);
    const std::string pattern_kind = get_or<std::string>(cfg, "patterns", "exact");
    std::vector<kinbm::ClaimPattern> patterns;
    if (pattern_kind == "exact")
        patterns = kinbm::exact_claim_patterns(get_or(cfg, "max_claims", 4),
                                               get_or(cfg, "pair_max", 2));
    else if (pattern_kind == "cumulated")
        patterns = kinbm::cumulated_claim_patterns(get_or(cfg, "max_years", 2),
                                                   get_or(cfg, "max_claims", 4));
    else
        throw ConfigError("price.patterns must be 'exact' or 'cumulated'");

    const kinbm::TableDoc rate_table =
        kinbm::rate_premium_table(models, categories, patterns, quad);
    emit_table(rate_table, run, "rate_premiums_" + pattern_kind);

    for (double total : get_or(cfg, "severity_totals", std::vector<double>{})) {
        if (!severity)
            throw ConfigError("price.severity_model is required for pure premium tables");
        const kinbm::TableDoc pure =
            kinbm::pure_premium_table(models, *severity, categories, patterns, total, quad);
        std::ostringstream stem;
        stem << "pure_premiums_" << pattern_kind << "_" << total;
        emit_table(pure, run, stem.str());
    }

    // optional per-history quotes
    if (cfg.contains("histories")) {
        json quotes = json::array();
        for (const auto& h : cfg.at("histories")) {
            kinbm::ClaimHistory history;
            history.counts = h.at("counts").get<std::vector<int>>();
            if (h.contains("severities"))
                history.severities = h.at("severities").get<std::vector<std::vector<double>>>();
            const std::string cat_label = get_or<std::string>(h, "category", "A1");
            const kinbm::ScenarioCategory* category = nullptr;
            for (const auto& c : categories)
                if (c.label == cat_label) category = &c;
            if (category == nullptr)
                throw ConfigError("history references unknown category '" + cat_label + "'");
            for (const auto& model : models) {
                const auto rate = kinbm::detail::scenario_rate(model, *category, history, quad);
                json q = {{"model", model.id},        {"category", category->label},
                          {"counts", history.counts}, {"rate", rate.reported},
                          {"rate_raw", rate.raw},     {"rate_method", rate.method}};
                if (severity && !history.severities.empty()) {
                    const double base = kinbm::detail::scenario_base(*severity, *category, history);
                    const kinbm::PremiumQuote quote =
                        kinbm::pure_premium(rate.reported, base, rate.method, "closed-form");
                    q["base"] = quote.base;
                    q["pure"] = quote.pure;
                }
                quotes.push_back(std::move(q));
            }
        }
        write_text_file(run.out_path("quotes.json").string(), quotes.dump(2) + "\n");
        if (run.format == "json") std::cout << quotes.dump(2) << "\n";
        std::cout << "price: wrote " << quotes.size() << " quotes to "
                  << run.out_path("quotes.json").string() << "\n";
    }
    return 0;
}

constexpr const char* config_key_reference = R"(Config file keys (JSON; command-line flags override):
  seed, threads, format, out
  simulate.n, simulate.years, simulate.frequency, simulate.frequency_file,
  simulate.severity, simulate.severity_file, simulate.covariate_law.gender,
  simulate.covariate_law.age, simulate.covariate_law.price,
  simulate.covariate_law.area, simulate.portfolio_out, simulate.params_out
  fit.portfolio, fit.family, fit.m, fit.k, fit.max_iter, fit.loglik_tol,
  fit.irls_max_inner, fit.irls_step_damping, fit.init, fit.n_restarts,
  fit.fit_out, fit.summary_out
  compare.portfolio, compare.fits, compare.mse_reps
  price.frequency_models[].id, price.frequency_models[].dist_fit,
  price.frequency_models[].reg_fit, price.severity_model.dist_fit,
  price.severity_model.reg_fit, price.categories[].label,
  price.categories[].covariates, price.patterns, price.max_years,
  price.max_claims, price.pair_max, price.severity_totals, price.histories,
  price.quad_node_count, price.quad_rel_tol, price.quad_max_subdivisions,
  price.quad_method
Environment: KINBM_LOG = silent|info|debug controls log verbosity.)";

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"kinbm: count/severity mixture modeling and experience-rated premiums"};
    app.footer(config_key_reference);

    std::string config_path, out_dir, format;
    std::uint64_t seed = 0;
    int threads = 0;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--out", out_dir, "output directory (default '.')");
    auto* seed_opt = app.add_option("--seed", seed, "random seed (default fixed constant)");
    app.add_option("--threads", threads, "worker thread bound (default 1)");
    app.add_option("--format", format, "stdout table format: text|csv|json")
        ->check(CLI::IsMember({"text", "csv", "json"}));

    auto* sim = app.add_subcommand("simulate", "draw a synthetic portfolio");
    std::size_t cli_n = 0;
    int cli_years = 0;
    sim->add_option("--n", cli_n, "number of policyholders");
    sim->add_option("--years", cli_years, "years per policyholder");

    auto* fit = app.add_subcommand("fit", "fit a model family by EM");
    std::string cli_family, cli_portfolio;
    int cli_m = 0, cli_k = -1;
    fit->add_option("--family", cli_family,
                    "kinbm_dist|kinbm_reg|nbm|nbm_reg|pareto_dist|pareto_reg");
    fit->add_option("--m", cli_m, "mixture components (total, including any inflation atom)");
    fit->add_option("--k", cli_k, "inflation point");
    fit->add_option("--portfolio", cli_portfolio, "portfolio CSV path");

    auto* cmp = app.add_subcommand("compare", "criteria tables and pairwise tests");
    std::string cmp_portfolio;
    std::vector<std::string> cmp_fits;
    cmp->add_option("--portfolio", cmp_portfolio, "portfolio CSV path");
    cmp->add_option("--fits", cmp_fits, "two or more fit JSON files");

    auto* price = app.add_subcommand("price", "premium tables and quotes");

    // global flags may follow the subcommand
    for (CLI::App* sub : {sim, fit, cmp, price}) sub->fallthrough();
    app.require_subcommand(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        RunConfig run;
        if (!config_path.empty()) run.doc = load_json_file(config_path);
        run.seed = seed_opt->count() > 0 ? seed
                                         : get_or<std::uint64_t>(run.doc, "seed",
                                                                 kinbm::default_seed);
        run.threads = threads > 0 ? threads : get_or(run.doc, "threads", 1);
        run.format = !format.empty() ? format : get_or<std::string>(run.doc, "format", "text");
        run.out_dir = !out_dir.empty() ? out_dir : get_or<std::string>(run.doc, "out", ".");
        if (run.threads < 1) throw ConfigError("threads must be positive");

        if (sim->parsed()) {
            if (cli_n > 0) run.doc["simulate"]["n"] = cli_n;
            if (cli_years > 0) run.doc["simulate"]["years"] = cli_years;
            echo_effective_config(run, "simulate");
            return cmd_simulate(run);
        }
        if (fit->parsed()) {
            echo_effective_config(run, "fit");
            return cmd_fit(run, cli_family, cli_m, cli_k, cli_portfolio);
        }
        if (cmp->parsed()) {
            echo_effective_config(run, "compare");
            return cmd_compare(run, cmp_portfolio, cmp_fits);
        }
        if (price->parsed()) {
            echo_effective_config(run, "price");
            return cmd_price(run);
        }
        throw ConfigError("no subcommand");
    } catch (const ConfigError& e) {
        std::cerr << "error: config_invalid: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: io_error: " << e.what() << "\n";
        return 3;
    } catch (const kinbm::ParseError& e) {
        std::cerr << "error: data_error: " << e.what() << "\n";
        return 4;
    } catch (const kinbm::DataTooSmallError& e) {
        std::cerr << "error: data_error: " << e.what() << "\n";
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: config_invalid: " << e.what() << "\n";
        return 2;
    } catch (const std::logic_error& e) {
        std::cerr << "error: config_invalid: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: numeric_error: " << e.what() << "\n";
        return 5;
    }
}
