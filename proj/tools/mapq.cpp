// Command-line front end: model validation, analytic transient computation,
// Monte Carlo simulation, analytic-vs-simulation comparison, and raw
// transform evaluation. Exit codes: 0 success, 1 input error, 2 numerical
// failure, 3 comparison failure.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <map>

#include "mapq/loss_idle.hpp"
#include "mapq/model_io.hpp"
#include "mapq/report.hpp"
#include "mapq/sim.hpp"

using namespace mapq;

namespace {

std::vector<double> parse_tgrid(const std::string& s) {
    std::vector<double> out;
    if (s.empty()) return out;
    if (s.find(':') != std::string::npos) {
        double a, b, step;
        char c1, c2;
        std::istringstream is(s);
        if (!(is >> a >> c1 >> b >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0)
            throw InputError("bad time grid '" + s + "' (expected A:B:STEP)");
        for (double t = a; t <= b + 1e-12; t += step) out.push_back(t);
        return out;
    }
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

std::vector<MetricRequest> parse_metrics(const std::string& s, const std::string& functionals) {
    std::vector<MetricRequest> out;
    auto add = [&](const std::string& tok) {
        if (tok == "mean") out.push_back({Metric::Mean});
        else if (tok == "var") out.push_back({Metric::Variance});
        else if (tok == "p_empty") out.push_back({Metric::PEmpty});
        else if (tok == "p_full") out.push_back({Metric::PFull});
        else if (tok == "idle") out.push_back({Metric::Idle});
        else if (tok == "lost") out.push_back({Metric::Lost});
        else if (tok.rfind("cdf:", 0) == 0) out.push_back({Metric::Cdf, std::stod(tok.substr(4))});
        else throw InputError("unknown metric '" + tok + "'");
    };
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) add(tok);
    if (!functionals.empty()) {
        std::istringstream fs(functionals);
        while (std::getline(fs, tok, ',')) add(tok);
    }
    if (out.empty()) throw InputError("no metrics requested");
    return out;
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << content;
}

int state_index(const ModelSpec& m, const std::string& label) {
    for (int i = 0; i < m.d; ++i)
        if (m.labels[i] == label) return i;
    throw InputError("unknown state label '" + label + "'");
}

struct SimGrid {
    GridEstimates est;
    int state;
};

std::string sim_to_csv(const ModelSpec& m, double x, const std::vector<SimGrid>& runs,
                       const std::vector<std::string>& metrics) {
    std::ostringstream os;
    os << csv_header() << ",se_value\n";
    os.precision(12);
    for (const auto& run : runs) {
        for (std::size_t k = 0; k < run.est.t.size(); ++k) {
            auto emit = [&](const std::string& name, const Estimate& e) {
                os << run.est.t[k] << "," << x << "," << m.labels[run.state] << "," << name << ","
                   << e.mean << "," << e.se << "," << e.se << "\n";
            };
            for (const auto& name : metrics) {
                if (name == "mean") emit("mean", run.est.mean[k]);
                else if (name == "var") emit("var", run.est.variance[k]);
                else if (name == "p_empty") emit("p_empty", run.est.p_empty[k]);
                else if (name == "p_full") emit("p_full", run.est.p_full[k]);
                else if (name == "idle") emit("idle", run.est.idle[k]);
                else if (name == "lost") emit("lost", run.est.lost[k]);
            }
        }
    }
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transient analysis of finite-capacity queues with Markov additive input"};
    app.require_subcommand(1);

    std::string model_path, out_path, analytic_path, tspec, metrics = "mean,var,p_empty,p_full";
    std::string state_label, functionals;
    double x = 0.0, alpha = 0.0, beta = 1.0, alpha2 = 0.0, alpha3 = 0.0, dt = 1e-3;
    long paths = 100000;
    std::uint64_t seed = 1;
    int inv_terms = 18;
    double inv_shift = 0.0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--model", model_path, "model JSON file")->required();
    };

    auto* vcmd = app.add_subcommand("validate", "validate a model file and print its canonical form");
    add_common(vcmd);

    auto* tcmd = app.add_subcommand("transient", "analytic time-domain metrics as CSV");
    add_common(tcmd);
    tcmd->add_option("--x", x, "initial workload");
    tcmd->add_option("--state", state_label, "restrict output to one initial state label");
    tcmd->add_option("--t", tspec, "time grid A:B:STEP or comma list")->required();
    tcmd->add_option("--metrics", metrics, "comma list: mean,var,p_empty,p_full,cdf:Y");
    tcmd->add_option("--functionals", functionals, "extra functionals: idle,lost");
    tcmd->add_option("--inv-terms", inv_terms, "Euler averaging terms");
    tcmd->add_option("--inv-shift", inv_shift, "Bromwich contour shift");
    tcmd->add_option("--out", out_path, "output CSV path (default stdout)");

    auto* scmd = app.add_subcommand("simulate", "Monte Carlo estimates on a time grid as CSV");
    add_common(scmd);
    scmd->add_option("--x", x, "initial workload");
    scmd->add_option("--state", state_label, "restrict to one initial state label");
    scmd->add_option("--t", tspec, "time grid A:B:STEP or comma list")->required();
    scmd->add_option("--metrics", metrics, "comma list: mean,var,p_empty,p_full,idle,lost");
    scmd->add_option("--paths", paths, "number of paths");
    scmd->add_option("--seed", seed, "RNG seed");
    scmd->add_option("--dt", dt, "Euler step for Brownian states");
    scmd->add_option("--out", out_path, "output CSV path (default stdout)");

    auto* ccmd = app.add_subcommand("compare", "compare an analytic CSV against fresh simulation");
    add_common(ccmd);
    ccmd->add_option("--analytic", analytic_path, "analytic CSV from 'transient'")->required();
    ccmd->add_option("--paths", paths, "number of paths");
    ccmd->add_option("--seed", seed, "RNG seed");
    ccmd->add_option("--dt", dt, "Euler step for Brownian states");
    ccmd->add_option("--out", out_path, "verdict table path (default stdout)");

    auto* lcmd = app.add_subcommand("lst", "print the workload transform matrix at (x, alpha, beta)");
    add_common(lcmd);
    lcmd->add_option("--x", x, "initial workload");
    lcmd->add_option("--alpha", alpha, "workload transform argument");
    lcmd->add_option("--beta", beta, "killing rate")->required();
    lcmd->add_option("--alpha2", alpha2, "idle-time argument (loss/idle transform)");
    lcmd->add_option("--alpha3", alpha3, "lost-work argument (loss/idle transform)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        ModelSpec m = load_model(model_path);
        OrderedModel om = validate(m);

        if (vcmd->parsed()) {
            int dminus = om.d_minus;
            std::cout << canonical_model_string(m);
            std::cerr << "valid: d = " << m.d << ", non-subordinator states = " << dminus
                      << ", subordinator states = " << (m.d - dminus) << "\n";
            return 0;
        }

        if (tcmd->parsed()) {
            auto tgrid = parse_tgrid(tspec);
            if (tgrid.empty()) throw InputError("time grid is empty");
            auto mreq = parse_metrics(metrics, functionals);
            InversionConfig cfg;
            cfg.terms = inv_terms;
            cfg.shift = inv_shift;
            TransientReport rep = invert_time_metrics(om, x, tgrid, mreq, cfg);
            if (!state_label.empty()) {
                TransientReport filtered;
                filtered.warnings = rep.warnings;
                for (auto& r : rep.rows)
                    if (r.state == state_label) filtered.rows.push_back(r);
                rep = filtered;
            }
            std::stable_sort(rep.rows.begin(), rep.rows.end(), [](const ReportRow& a, const ReportRow& b) {
                return std::tie(a.t, a.state, a.metric) < std::tie(b.t, b.state, b.metric);
            });
            for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
            write_output(out_path, to_csv(rep));
            return 0;
        }

        if (scmd->parsed() || ccmd->parsed()) {
            SimConfig cfg;
            cfg.paths = paths;
            cfg.seed = seed;
            cfg.dt = dt;

            if (scmd->parsed()) {
                auto tgrid = parse_tgrid(tspec);
                if (tgrid.empty()) throw InputError("time grid is empty");
                std::vector<std::string> names;
                for (auto& mr : parse_metrics(metrics, functionals)) names.push_back(mr.name());
                std::vector<SimGrid> runs;
                for (int i = 0; i < m.d; ++i) {
                    if (!state_label.empty() && m.labels[i] != state_label) continue;
                    runs.push_back({simulate_reflected_grid(m, x, i, tgrid, cfg), i});
                }
                write_output(out_path, sim_to_csv(m, x, runs, names));
                return 0;
            }

            // compare: rebuild the grid from the analytic CSV and simulate it
            std::ifstream in(analytic_path);
            if (!in) throw InputError("cannot open analytic CSV '" + analytic_path + "'");
            auto rows = parse_csv(in);
            if (rows.empty()) throw InputError("analytic CSV is empty");
            double x_csv = rows.front().x;
            std::set<double> tset;
            std::set<std::string> states;
            for (const auto& r : rows) {
                if (std::abs(r.x - x_csv) > 1e-12) throw InputError("analytic CSV mixes initial workloads");
                tset.insert(r.t);
                states.insert(r.state);
            }
            std::vector<double> tgrid(tset.begin(), tset.end());
            std::map<std::string, GridEstimates> ests;
            for (const auto& s : states) ests[s] = simulate_reflected_grid(m, x_csv, state_index(m, s), tgrid, cfg);

            std::ostringstream os;
            os << "t,state,metric,analytic,mc,se,z,verdict\n";
            os.precision(10);
            bool all_pass = true;
            for (const auto& r : rows) {
                const auto& e = ests.at(r.state);
                std::size_t k = std::lower_bound(tgrid.begin(), tgrid.end(), r.t - 1e-12) - tgrid.begin();
                const Estimate* est = nullptr;
                if (r.metric == "mean") est = &e.mean[k];
                else if (r.metric == "var") est = &e.variance[k];
                else if (r.metric == "p_empty") est = &e.p_empty[k];
                else if (r.metric == "p_full") est = &e.p_full[k];
                else if (r.metric == "idle") est = &e.idle[k];
                else if (r.metric == "lost") est = &e.lost[k];
                if (!est) continue;  // metrics the simulator does not produce
                double diff = r.value - est->mean;
                double z = est->se > 0 ? diff / est->se : (diff == 0 ? 0 : 1e99);
                bool pass = std::abs(z) <= 3.0 || std::abs(diff) <= 5e-3;
                all_pass &= pass;
                os << r.t << "," << r.state << "," << r.metric << "," << r.value << "," << est->mean
                   << "," << est->se << "," << z << "," << (pass ? "PASS" : "FAIL") << "\n";
            }
            write_output(out_path, os.str());
            return all_pass ? 0 : 3;
        }

        if (lcmd->parsed()) {
            TransientContext ctx(om, beta);
            ComplexMatrix c;
            if (alpha2 != 0.0 || alpha3 != 0.0) {
                LossIdleContext li(ctx);
                c = om.to_user(li.chi_tilde(x, alpha, alpha2, alpha3).chi_x);
            } else {
                c = om.to_user(ctx.chi(x, alpha).chi_x);
            }
            std::cout.precision(12);
            std::cout << "i,j,re,im\n";
            for (int i = 0; i < m.d; ++i)
                for (int j = 0; j < m.d; ++j)
                    std::cout << m.labels[i] << "," << m.labels[j] << "," << c(i, j).real() << ","
                              << c(i, j).imag() << "\n";
            return 0;
        }
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
