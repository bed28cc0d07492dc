// qrm: reconstruct the initial heat source from lateral Cauchy data.
//
//   qrm run               --test 1 --delta 0 --delta 0.25 --out out/t1
//   qrm sweep             --test 2 --seed 7 --out out/t2
//   qrm truncation-report --test 4 --out out/trunc

#include <algorithm>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qrm/qrm.hpp"

namespace {

struct Flags {
    std::string config;
    std::map<std::string, std::string> values;  // config key -> raw flag value
    std::vector<std::string> deltas;
    bool inverse_crime = false;
    bool dump = false;
    bool quiet = false;
};

void add_flags(CLI::App* cmd, Flags& f) {
    const auto value = [&](const std::string& flag, const std::string& key, const std::string& help) {
        cmd->add_option_function<std::string>(
            flag, [&f, key](const std::string& v) { f.values[key] = v; }, help);
    };
    cmd->add_option("--config", f.config, "key=value configuration file; flags override it");
    value("--test", "test", "experiment 1 (bump), 2 (two bumps), 3 (letter Y), 4 (letter lambda)");
    cmd->add_option("--delta", f.deltas, "noise level as a fraction, repeatable (0.5 = 50%)");
    value("--seed", "seed", "noise seed");
    value("--epsilon", "epsilon", "regularization parameter");
    value("--nx", "nx", "spatial cells per axis");
    value("--nt", "nt", "time steps");
    value("--n-basis", "n_basis", "number of time basis functions N");
    value("--solver", "solver", "direct or iterative");
    cmd->add_flag("--inverse-crime", f.inverse_crime, "generate data on the inversion grid itself");
    value("--out", "out", "output directory");
    value("--R", "R", "half-width of the measurement square");
    value("--T", "T", "final time");
    value("--extension", "extension", "forward domain half-width in units of R");
    value("--substeps", "substeps", "backward Euler steps per data interval");
    value("--neumann-scale", "neumann_scale", "multiplier on the Neumann row weight d_x");
    value("--quadrature", "quadrature", "span_exact, trapezoid or uniform");
    value("--orders", "truncation_orders", "comma-separated N values for truncation-report");
    cmd->add_flag("--dump-intermediate", f.dump, "also write basis, Cauchy, projection and matrix dumps");
    cmd->add_flag("--quiet", f.quiet, "no progress output");
}

qrm::ExperimentConfig make_config(const Flags& f) {
    qrm::ExperimentConfig cfg;
    if (!f.config.empty()) qrm::load_config(cfg, f.config);
    for (const auto& [k, v] : f.values) cfg.set(k, v);
    if (!f.deltas.empty()) {
        std::string joined;
        for (const auto& d : f.deltas) joined += (joined.empty() ? "" : ",") + d;
        cfg.set("deltas", joined);
    }
    if (f.inverse_crime) cfg.inverse_crime = true;
    if (f.dump) cfg.dump_intermediate = true;
    return cfg;
}

void print_rows(const std::vector<qrm::CaseResult>& results) {
    std::cout << qrm::metrics_header() << '\n';
    for (const auto& r : results)
        for (const auto& row : r.rows) std::cout << qrm::metrics_line(row) << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quasi-reversibility reconstruction of an initial heat source"};
    app.require_subcommand(1);
    Flags run_flags, sweep_flags, trunc_flags;
    auto* run_cmd = app.add_subcommand("run", "run the pipeline for the given noise levels (default 0)");
    auto* sweep_cmd = app.add_subcommand("sweep", "run the noise sweep (default 0, 0.25, 0.5, 0.75, 1)");
    auto* trunc_cmd = app.add_subcommand("truncation-report", "time truncation error of the forward field at t = 0");
    add_flags(run_cmd, run_flags);
    add_flags(sweep_cmd, sweep_flags);
    add_flags(trunc_cmd, trunc_flags);
    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed() || sweep_cmd->parsed()) {
            const Flags& f = run_cmd->parsed() ? run_flags : sweep_flags;
            const auto cfg = make_config(f);
            std::ostream* log = f.quiet ? nullptr : &std::cerr;
            print_rows(run_cmd->parsed() ? qrm::run(cfg, log) : qrm::sweep(cfg, log));
        } else {
            const auto cfg = make_config(trunc_flags);
            const auto rows = qrm::truncation(cfg, trunc_flags.quiet ? nullptr : &std::cerr);
            std::cout << "N,rel_l2,rel_max\n";
            for (const auto& r : rows)
                std::cout << r.N << ',' << qrm::fmt_double(r.rel_l2) << ',' << qrm::fmt_double(r.rel_max) << '\n';
        }
    } catch (const qrm::Error& e) {
        std::string msg = e.what();
        msg = msg.substr(std::min(msg.size(), e.stage().size() + 2));
        std::cerr << "qrm: " << e.stage() << " stage failed: " << msg << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "qrm: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
