#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "qrm/cauchy_data.hpp"
#include "qrm/csv.hpp"
#include "qrm/error.hpp"
#include "qrm/forward.hpp"
#include "qrm/grid.hpp"
#include "qrm/noise.hpp"
#include "qrm/projection.hpp"
#include "qrm/quasi_reversibility.hpp"
#include "qrm/reconstruction.hpp"
#include "qrm/sources.hpp"
#include "qrm/time_basis.hpp"

namespace qrm {

inline constexpr const char* library_version = "1.0.0";

struct ExperimentConfig {
    int test = 1;
    double R = 2.0;
    int N_x = 80;
    double T = 4.0;
    int N_T = 250;
    int N = 30;
    double epsilon = 1e-7;
    std::vector<double> deltas;
    bool deltas_set = false;  // false: the command's default list is used
    std::uint64_t seed = 1;
    SolverKind solver = SolverKind::direct;
    double solver_tolerance = 1e-9;
    bool inverse_crime = false;
    double extension = 6.0;  // forward half-width in units of R
    int substeps = 1;        // backward Euler steps per data interval
    double neumann_scale = 1.0;
    TimeQuadrature quadrature = TimeQuadrature::span_exact;
    std::vector<int> truncation_orders{10, 20, 30};
    bool dump_intermediate = false;
    std::string out = "qrm_out";

    void set(const std::string& key, const std::string& value);
    /// Canonical key=value pairs; feeding them back through set() gives the same config.
    std::vector<std::pair<std::string, std::string>> entries() const;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    require(used > 0 && used == v.size(), "config", "bad number for " + key + ": '" + v + "'");
    return out;
}

inline long long parse_int(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    long long out = 0;
    try {
        out = std::stoll(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    require(used > 0 && used == v.size(), "config", "bad integer for " + key + ": '" + v + "'");
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw Error("config", "bad boolean for " + key + ": '" + v + "'");
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline std::string join_doubles(const std::vector<double>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + fmt_double(v[k]);
    return s;
}

} // namespace detail

inline SolverKind parse_solver(const std::string& v) {
    if (v == "direct") return SolverKind::direct;
    if (v == "iterative") return SolverKind::iterative;
    throw Error("config", "unknown solver '" + v + "' (expected direct or iterative)");
}

inline TimeQuadrature parse_quadrature(const std::string& v) {
    if (v == "span_exact") return TimeQuadrature::span_exact;
    if (v == "trapezoid") return TimeQuadrature::trapezoid;
    if (v == "uniform") return TimeQuadrature::uniform;
    throw Error("config", "unknown quadrature '" + v + "'");
}

inline void ExperimentConfig::set(const std::string& key_in, const std::string& value_in) {
    const std::string key = detail::trim(key_in), v = detail::trim(value_in);
    if (key == "test") {
        test = static_cast<int>(detail::parse_int(key, v));
        require(test >= 1 && test <= 4, "config", "test must be 1, 2, 3 or 4");
    } else if (key == "R") {
        R = detail::parse_double(key, v);
    } else if (key == "nx") {
        N_x = static_cast<int>(detail::parse_int(key, v));
    } else if (key == "T") {
        T = detail::parse_double(key, v);
    } else if (key == "nt") {
        N_T = static_cast<int>(detail::parse_int(key, v));
    } else if (key == "n_basis") {
        N = static_cast<int>(detail::parse_int(key, v));
    } else if (key == "epsilon") {
        epsilon = detail::parse_double(key, v);
    } else if (key == "deltas") {
        deltas.clear();
        for (const auto& item : detail::split_list(v)) deltas.push_back(detail::parse_double(key, item));
        deltas_set = true;
    } else if (key == "seed") {
        const long long s = detail::parse_int(key, v);
        require(s >= 0, "config", "seed must be non-negative");
        seed = static_cast<std::uint64_t>(s);
    } else if (key == "solver") {
        solver = parse_solver(v);
    } else if (key == "solver_tolerance") {
        solver_tolerance = detail::parse_double(key, v);
    } else if (key == "inverse_crime") {
        inverse_crime = detail::parse_bool(key, v);
    } else if (key == "extension") {
        extension = detail::parse_double(key, v);
    } else if (key == "substeps") {
        substeps = static_cast<int>(detail::parse_int(key, v));
    } else if (key == "neumann_scale") {
        neumann_scale = detail::parse_double(key, v);
    } else if (key == "quadrature") {
        quadrature = parse_quadrature(v);
    } else if (key == "truncation_orders") {
        truncation_orders.clear();
        for (const auto& item : detail::split_list(v))
            truncation_orders.push_back(static_cast<int>(detail::parse_int(key, item)));
    } else if (key == "dump_intermediate") {
        dump_intermediate = detail::parse_bool(key, v);
    } else if (key == "out") {
        out = v;
    } else if (key.rfind("result.", 0) == 0) {
        // Outcome records written into manifests; not part of the configuration.
    } else {
        throw Error("config", "unknown key '" + key + "'");
    }
}

inline std::vector<std::pair<std::string, std::string>> ExperimentConfig::entries() const {
    std::string orders;
    for (std::size_t k = 0; k < truncation_orders.size(); ++k)
        orders += (k ? "," : "") + std::to_string(truncation_orders[k]);
    return {
        {"test", std::to_string(test)},
        {"R", fmt_double(R)},
        {"nx", std::to_string(N_x)},
        {"T", fmt_double(T)},
        {"nt", std::to_string(N_T)},
        {"n_basis", std::to_string(N)},
        {"epsilon", fmt_double(epsilon)},
        {"deltas", detail::join_doubles(deltas)},
        {"seed", std::to_string(seed)},
        {"solver", to_string(solver)},
        {"solver_tolerance", fmt_double(solver_tolerance)},
        {"inverse_crime", inverse_crime ? "true" : "false"},
        {"extension", fmt_double(extension)},
        {"substeps", std::to_string(substeps)},
        {"neumann_scale", fmt_double(neumann_scale)},
        {"quadrature", to_string(quadrature)},
        {"truncation_orders", orders},
        {"dump_intermediate", dump_intermediate ? "true" : "false"},
        {"out", out},
    };
}

/// Reads key=value lines; blank lines and lines starting with '#' are skipped.
inline void load_config(ExperimentConfig& cfg, const std::string& path) {
    std::ifstream is(path);
    require(static_cast<bool>(is), "config", "cannot open config file " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        require(eq != std::string::npos, "config",
                path + ":" + std::to_string(lineno) + ": expected key=value");
        cfg.set(t.substr(0, eq), t.substr(eq + 1));
    }
}

/// Everything for one (delta, seed) data set.
struct CaseResult {
    double delta = 0.0;
    std::uint64_t seed = 0;
    std::string checksum;
    std::vector<MetricsRow> rows;
    GridField f_comp;
    SolverReport report;
    ResidualNorms residuals;
};

/// Data-independent state of an experiment: grids, basis, forward data and the
/// constraint operator. Cases with different noise share the factorization.
class Experiment {
public:
    explicit Experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr)
        : cfg_(cfg), log_(log), solver_(SolverOptions{cfg.solver, cfg.solver_tolerance, 100000}) {
        using clock = std::chrono::steady_clock;
        auto t = clock::now();
        grid_ = build_grid(cfg.R, cfg.N_x);
        part_ = build_partition(cfg.T, cfg.N_T);
        basis_ = std::make_unique<TimeBasis>(build_basis(cfg.N, part_, cfg.quadrature));
        S_ = coupling_matrix(*basis_);
        note("basis", t);

        t = clock::now();
        spec_ = test_source(cfg.test);
        f_true_ = sample_source(spec_, grid_);
        forward_grid_ = cfg.inverse_crime ? grid_ : extended_grid(grid_, cfg.extension);
        const GridField f0 = GridField::sample(forward_grid_, spec_);
        const GridField c_fwd = GridField::sample(forward_grid_, peaks_coefficient);
        forward_ = solve_forward(forward_grid_, c_fwd, f0, part_, grid_, cfg.substeps);
        clean_ = extract_cauchy(forward_.field, grid_);
        note("forward", t);

        t = clock::now();
        const GridField c = GridField::sample(grid_, peaks_coefficient);
        system_ = assemble(grid_, c, S_, cfg.epsilon);
        op_ = build_constraint_operator(system_, cfg.neumann_scale);
        note("assemble", t);
    }

    const ExperimentConfig& config() const { return cfg_; }
    const SpatialGrid& grid() const { return grid_; }
    const SpatialGrid& forward_grid() const { return forward_grid_; }
    const TimeBasis& basis() const { return *basis_; }
    const Eigen::MatrixXd& coupling() const { return S_; }
    const SourceSpec& source() const { return spec_; }
    const GridField& f_true() const { return f_true_; }
    const ForwardSolution& forward() const { return forward_; }
    const CauchyData& clean_data() const { return clean_; }
    const CoefficientSystem& system() const { return system_; }
    const std::shared_ptr<const ConstraintOperator>& constraint_operator() const { return op_; }

    CaseResult run_case(double delta, std::uint64_t seed) {
        const auto t = std::chrono::steady_clock::now();
        CaseResult r;
        r.delta = delta;
        r.seed = seed;
        const CauchyData noisy = add_noise(clean_, NoiseSpec{delta, seed});
        r.checksum = data_checksum(noisy);
        const IndirectData ind = project(noisy, *basis_);
        if (cfg_.dump_intermediate) {
            const std::string tag = delta_tag(delta);
            noisy.write_csv(path("cauchy_delta" + tag + ".csv"));
            ind.write_csv(path("projection_delta" + tag + ".csv"));
        }
        const QrmSolution sol = solver_.solve(apply_constraints(op_, ind));
        r.report = sol.report;
        r.residuals = sol.residuals;
        r.f_comp = reconstruct(sol, *basis_).f_comp;
        r.rows = metrics(r.f_comp, f_true_, spec_);
        for (auto& row : r.rows) row.noise_level = delta;
        note("case delta=" + fmt_double(delta) + " seed=" + std::to_string(seed), t);
        return r;
    }

    std::string path(const std::string& name) const {
        return (std::filesystem::path(cfg_.out) / name).string();
    }

    static std::string delta_tag(double delta) { return fmt_double(delta, 6); }

private:
    void note(const std::string& what, std::chrono::steady_clock::time_point since) const {
        if (!log_) return;
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
        *log_ << "[qrm] " << what << ": " << fmt_double(s, 3) << " s\n";
    }

    ExperimentConfig cfg_;
    std::ostream* log_;
    SpatialGrid grid_;
    SpatialGrid forward_grid_;
    TimePartition part_;
    std::unique_ptr<TimeBasis> basis_;
    Eigen::MatrixXd S_;
    SourceSpec spec_;
    GridField f_true_;
    ForwardSolution forward_;
    CauchyData clean_;
    CoefficientSystem system_;
    std::shared_ptr<const ConstraintOperator> op_;
    QrmSolver solver_;
};

/// key=value run record: the configuration, then result.* lines.
class Manifest {
public:
    explicit Manifest(const ExperimentConfig& cfg) {
        add("result.version", library_version);
        add("result.command", "");
        for (const auto& [k, v] : cfg.entries()) config_.emplace_back(k, v);
    }
    void add(const std::string& key, const std::string& value) {
        for (auto& kv : results_)
            if (kv.first == key) {
                kv.second = value;
                return;
            }
        results_.emplace_back(key, value);
    }
    void artifact(const std::string& name) { artifacts_ += (artifacts_.empty() ? "" : ",") + name; }
    void write(const std::string& path) const {
        std::ofstream os(path);
        require(static_cast<bool>(os), "io", "cannot open " + path);
        os << "# qrm run manifest\n";
        for (const auto& [k, v] : config_) os << k << '=' << v << '\n';
        for (const auto& [k, v] : results_) os << k << '=' << v << '\n';
        os << "result.artifacts=" << artifacts_ << '\n';
    }

private:
    std::vector<std::pair<std::string, std::string>> config_, results_;
    std::string artifacts_;
};

inline std::vector<double> resolve_deltas(const ExperimentConfig& cfg, const std::vector<double>& fallback) {
    const std::vector<double> d = cfg.deltas_set ? cfg.deltas : fallback;
    require(!d.empty(), "harness", "no noise levels requested");
    for (double v : d) require(v >= 0.0, "harness", "noise levels must be non-negative");
    return d;
}

/// Runs the full pipeline for every noise level and writes metrics.csv,
/// f_true.csv, f_comp_delta<d>.csv and manifest.txt under cfg.out. On failure
/// the manifest records the failing stage and the artifacts already written,
/// then the error is rethrown.
inline std::vector<CaseResult> run_experiment(ExperimentConfig cfg, const std::string& command,
                                              const std::vector<double>& default_deltas,
                                              std::ostream* log = nullptr) {
    cfg.deltas = resolve_deltas(cfg, default_deltas);
    cfg.deltas_set = true;
    std::filesystem::create_directories(cfg.out);
    Manifest manifest(cfg);
    manifest.add("result.command", command);
    const std::string manifest_path = (std::filesystem::path(cfg.out) / "manifest.txt").string();
    std::vector<CaseResult> results;
    try {
        Experiment ex(cfg, log);
        manifest.add("result.forward_grid_nx", std::to_string(ex.forward_grid().N_x));
        manifest.add("result.forward_grid_R", fmt_double(ex.forward_grid().R));
        manifest.add("result.clean_checksum", data_checksum(ex.clean_data()));
        write_field_csv(ex.f_true(), ex.path("f_true.csv"));
        manifest.artifact("f_true.csv");
        if (cfg.dump_intermediate) {
            ex.basis().write_csv(ex.path("basis.csv"));
            write_matrix_market(ex.constraint_operator()->A, ex.path("qrm_matrix.mtx"));
            manifest.artifact("basis.csv");
            manifest.artifact("qrm_matrix.mtx");
        }
        std::vector<MetricsRow> rows;
        for (std::size_t c = 0; c < cfg.deltas.size(); ++c) {
            const double delta = cfg.deltas[c];
            CaseResult r = ex.run_case(delta, cfg.seed);
            const std::string tag = Experiment::delta_tag(delta);
            const std::string field_name = "f_comp_delta" + tag + ".csv";
            write_field_csv(r.f_comp, ex.path(field_name));
            manifest.artifact(field_name);
            if (cfg.dump_intermediate) {
                manifest.artifact("cauchy_delta" + tag + ".csv");
                manifest.artifact("projection_delta" + tag + ".csv");
            }
            const std::string key = "result.case" + std::to_string(c + 1);
            manifest.add(key + ".delta", fmt_double(delta));
            manifest.add(key + ".data_checksum", r.checksum);
            manifest.add(key + ".solver_method", r.report.method);
            rows.insert(rows.end(), r.rows.begin(), r.rows.end());
            results.push_back(std::move(r));
        }
        write_metrics_csv(rows, ex.path("metrics.csv"));
        manifest.artifact("metrics.csv");
        manifest.add("result.status", "complete");
    } catch (const Error& e) {
        manifest.add("result.status", "failed");
        manifest.add("result.failed_stage", e.stage());
        manifest.add("result.error", e.what());
        manifest.add("result.partial_artifacts", "true");
        manifest.write(manifest_path);
        throw;
    }
    manifest.write(manifest_path);
    return results;
}

inline std::vector<CaseResult> run(const ExperimentConfig& cfg, std::ostream* log = nullptr) {
    return run_experiment(cfg, "run", {0.0}, log);
}

inline std::vector<CaseResult> sweep(const ExperimentConfig& cfg, std::ostream* log = nullptr) {
    return run_experiment(cfg, "sweep", {0.0, 0.25, 0.5, 0.75, 1.0}, log);
}

/// Forward-solves the configured test and writes truncation.csv plus one error
/// field per order.
inline std::vector<TruncationRow> truncation(const ExperimentConfig& cfg, std::ostream* log = nullptr) {
    require(!cfg.truncation_orders.empty(), "harness", "no truncation orders requested");
    std::filesystem::create_directories(cfg.out);
    const auto grid = build_grid(cfg.R, cfg.N_x);
    const auto part = build_partition(cfg.T, cfg.N_T);
    const auto spec = test_source(cfg.test);
    validate_support(spec, grid);
    const auto fwd_grid = cfg.inverse_crime ? grid : extended_grid(grid, cfg.extension);
    const auto t = std::chrono::steady_clock::now();
    const auto fwd = solve_forward(fwd_grid, GridField::sample(fwd_grid, peaks_coefficient),
                                   GridField::sample(fwd_grid, spec), part, grid, cfg.substeps);
    if (log)
        *log << "[qrm] forward: "
             << fmt_double(std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count(), 3)
             << " s\n";
    const auto rows = truncation_report(fwd.field, cfg.truncation_orders, cfg.quadrature);
    const std::filesystem::path out(cfg.out);
    write_truncation_csv(rows, (out / "truncation.csv").string());
    Manifest manifest(cfg);
    manifest.add("result.command", "truncation-report");
    manifest.artifact("truncation.csv");
    for (const auto& r : rows) {
        const std::string name = "truncation_error_N" + std::to_string(r.N) + ".csv";
        write_field_csv(r.error, (out / name).string());
        manifest.artifact(name);
    }
    manifest.add("result.status", "complete");
    manifest.write((out / "manifest.txt").string());
    return rows;
}

} // namespace qrm
