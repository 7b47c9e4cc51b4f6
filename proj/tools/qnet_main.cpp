// qnet: configuration-driven sweeps and protocol runs emitting figure-ready
// datasets (CSV or JSON). Exit codes: 0 success, 2 config error,
// 3 numerical-convergence failure.

#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qnet/circuit.hpp"
#include "qnet/dynamics.hpp"
#include "qnet/gue.hpp"
#include "qnet/protocols.hpp"
#include "qnet/scatter.hpp"
#include "qnet/slh.hpp"

using json = nlohmann::json;
using namespace qnet;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    json metadata = json::object();
};

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_table(const Table& table, const std::string& out_path,
                 const std::string& format, const std::string& command) {
    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw ConfigError("cannot open output file: " + out_path);
        os = &file;
    }
    if (format == "csv") {
        *os << "# qnet-csv v1 command=" << command << "\n";
        for (size_t c = 0; c < table.columns.size(); ++c) {
            *os << table.columns[c] << (c + 1 < table.columns.size() ? "," : "\n");
        }
        for (const auto& row : table.rows) {
            for (size_t c = 0; c < row.size(); ++c) {
                *os << format_double(row[c]) << (c + 1 < row.size() ? "," : "\n");
            }
        }
    } else {
        json doc;
        doc["schema_version"] = 1;
        doc["command"] = command;
        doc["columns"] = table.columns;
        doc["rows"] = json::array();
        for (const auto& row : table.rows) doc["rows"].push_back(row);
        if (!table.metadata.empty()) doc["metadata"] = table.metadata;
        *os << doc.dump(2) << "\n";
    }
}

void require_keys(const json& config, const std::vector<std::string>& allowed) {
    for (const auto& [key, value] : config.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError("unknown config key: '" + key + "'");
        }
    }
}

double get_num(const json& config, const std::string& key) {
    if (!config.contains(key) || !config[key].is_number()) {
        throw ConfigError("missing numeric config key: '" + key + "'");
    }
    return config[key].get<double>();
}

double get_num(const json& config, const std::string& key, double fallback) {
    if (!config.contains(key)) return fallback;
    if (!config[key].is_number()) throw ConfigError("key '" + key + "' must be numeric");
    return config[key].get<double>();
}

int get_int(const json& config, const std::string& key, std::optional<int> fallback = {}) {
    if (!config.contains(key)) {
        if (fallback) return *fallback;
        throw ConfigError("missing integer config key: '" + key + "'");
    }
    if (!config[key].is_number_integer()) {
        throw ConfigError("key '" + key + "' must be an integer");
    }
    return config[key].get<int>();
}

std::string get_str(const json& config, const std::string& key,
                    std::optional<std::string> fallback = {}) {
    if (!config.contains(key)) {
        if (fallback) return *fallback;
        throw ConfigError("missing string config key: '" + key + "'");
    }
    return config[key].get<std::string>();
}

std::vector<double> get_vec(const json& config, const std::string& key) {
    if (!config.contains(key) || !config[key].is_array()) {
        throw ConfigError("missing array config key: '" + key + "'");
    }
    std::vector<double> out;
    for (const auto& v : config[key]) out.push_back(v.get<double>());
    return out;
}

std::vector<double> linspace(double lo, double hi, int count) {
    std::vector<double> xs(count);
    for (int i = 0; i < count; ++i) {
        xs[i] = count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
    }
    return xs;
}

Backend parse_backend(const json& config) {
    const std::string b = get_str(config, "backend", std::string("ideal"));
    if (b == "ideal") return Backend::Ideal;
    if (b == "general") return Backend::General;
    throw ConfigError("backend must be 'ideal' or 'general'");
}

void parallel_for(int count, int jobs, const std::function<void(int)>& body) {
    if (jobs <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (int t = 0; t < jobs; ++t) {
        pool.emplace_back([&] {
            while (true) {
                const int i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------

Table cmd_directionality(const json& config, std::uint64_t seed, int jobs) {
    const std::string mode = get_str(config, "mode");
    Table table;
    if (mode == "grid") {
        require_keys(config, {"mode", "r", "gamma", "delta", "j_min", "j_max", "j_count",
                              "phi_min", "phi_max", "phi_count"});
        const double r = get_num(config, "r"), gamma = get_num(config, "gamma");
        const double delta = get_num(config, "delta", 0.0);
        const auto js = linspace(get_num(config, "j_min"), get_num(config, "j_max"),
                                 get_int(config, "j_count"));
        const auto phis = linspace(get_num(config, "phi_min"), get_num(config, "phi_max"),
                                   get_int(config, "phi_count"));
        table.columns = {"j_over_gamma", "phi", "beta_dir"};
        const int count = static_cast<int>(js.size() * phis.size());
        table.rows.resize(count);
        parallel_for(count, jobs, [&](int idx) {
            const double j = js[idx / phis.size()];
            const double phi = phis[idx % phis.size()];
            GueParams p;
            p.r1 = p.r2 = r;
            p.gamma1 = p.gamma2 = gamma;
            p.delta1 = p.delta2 = delta;
            p.j_hop = j * gamma;
            p.phi = phi;
            table.rows[idx] = {j, phi, directionality(p)};
        });
        return table;
    }
    if (mode == "monte_carlo") {
        require_keys(config, {"mode", "mean_r", "mean_gamma", "sd_r_values",
                              "sd_gamma_values", "samples"});
        const double mean_r = get_num(config, "mean_r");
        const double mean_gamma = get_num(config, "mean_gamma");
        const auto sd_rs = get_vec(config, "sd_r_values");
        const auto sd_gammas = get_vec(config, "sd_gamma_values");
        const int samples = get_int(config, "samples");
        table.columns = {"sd_r", "sd_gamma", "beta_mean", "beta_sem"};
        const int count = static_cast<int>(sd_rs.size() * sd_gammas.size());
        table.rows.resize(count);
        parallel_for(count, jobs, [&](int idx) {
            const double sd_r = sd_rs[idx / sd_gammas.size()];
            const double sd_g = sd_gammas[idx % sd_gammas.size()];
            const auto avg =
                averaged_directionality(mean_r, mean_gamma, sd_r, sd_g, samples, seed);
            table.rows[idx] = {sd_r, sd_g, avg.mean, avg.standard_error};
        });
        return table;
    }
    throw ConfigError("directionality mode must be 'grid' or 'monte_carlo'");
}

// ---------------------------------------------------------------------------

namespace dyn {

struct SingleGueSetup {
    MasterEquation me;
    Operator flux_right, flux_left;
};

SingleGueSetup single_gue_setup(double r, double gamma, double chi, double u,
                                double omega, const NoiseSpec& noise, int n_max,
                                double delta) {
    GueParams p = GueParams::unidirectional(r, gamma, 0.0, n_max, u, chi);
    p.delta1 = p.delta2 = delta;
    const Operator h = build_hamiltonian(p);
    const CouplingOps ops = build_coupling_ops(p);
    const double gr = optimal_params(r, gamma).gamma_r;
    SingleGueSetup s{make_master_equation(h, ops.l_right, ops.l_left,
                                          DriveSpec::constant_rabi(omega), noise, gr),
                     {h.space, ops.l_right.mat.adjoint() * ops.l_right.mat},
                     {h.space, ops.l_left.mat.adjoint() * ops.l_left.mat}};
    return s;
}

}  // namespace dyn

Table cmd_dynamics(const json& config, std::uint64_t, int jobs) {
    const std::string mode = get_str(config, "mode");
    Table table;
    if (mode == "steady_map") {
        // Fig.-4(a)-style flux-ratio maps for one driven emitter.
        require_keys(config, {"mode", "r", "gamma", "chi", "u", "gamma_nr", "delta",
                              "omega_values", "gamma_phi_values", "n_max",
                              "convergence_check"});
        const double r = get_num(config, "r"), gamma = get_num(config, "gamma");
        const double chi = get_num(config, "chi"), u = get_num(config, "u");
        const double gamma_nr = get_num(config, "gamma_nr", 0.0);
        const double delta = get_num(config, "delta", 0.0);
        const int n_max = get_int(config, "n_max", 3);
        const bool check = config.value("convergence_check", false);
        const auto omegas = get_vec(config, "omega_values");
        const auto phis = get_vec(config, "gamma_phi_values");
        table.columns = {"omega", "gamma_phi", "flux_ratio", "flux_right"};
        if (check) table.columns.push_back("flux_ratio_shift");
        const int count = static_cast<int>(omegas.size() * phis.size());
        table.rows.resize(count);
        parallel_for(count, jobs, [&](int idx) {
            const double omega = omegas[idx / phis.size()];
            const double gphi = phis[idx % phis.size()];
            auto ratio_at = [&](int cutoff) {
                const auto setup = dyn::single_gue_setup(
                    r, gamma, chi, u, omega, NoiseSpec{gphi, gamma_nr}, cutoff, delta);
                const DensityMatrix rho =
                    steady_state(setup.me, {.null_space_max_dim = 16});
                const double right = expectation(setup.flux_right, rho).real();
                const double left = expectation(setup.flux_left, rho).real();
                return std::pair<double, double>{left / right, right};
            };
            const auto [ratio, right] = ratio_at(n_max);
            std::vector<double> row{omega, gphi, ratio, right};
            if (check) {
                row.push_back(ratio_at(n_max + 1).first - ratio);
            }
            table.rows[idx] = row;
        });
        return table;
    }
    if (mode == "trajectory") {
        // Cascaded two-level chain: scattered flux, dark-state overlap and
        // purities along the drive (Fig. 4(c) observables).
        require_keys(config, {"mode", "n_emitters", "omega", "delta", "gamma_r",
                              "gamma_phi", "gamma_nr", "t_max", "t_count"});
        TwoLevelChain chain;
        chain.n_emitters = get_int(config, "n_emitters", 2);
        chain.omega_rabi = get_num(config, "omega");
        chain.delta = get_num(config, "delta", 0.0);
        chain.gamma_r = get_num(config, "gamma_r", 1.0);
        const double gphi = get_num(config, "gamma_phi", 0.0);
        const double gnr = get_num(config, "gamma_nr", 0.0);
        const CascadedModel model = cascaded_two_level(chain);
        const std::vector<Matrix> extra =
            noise_jumps(model.space, NoiseSpec{gphi, gnr});

        const int n = chain.n_emitters;
        const int d = model.space->total_dim();
        Vector dark = Vector::Zero(d);
        {
            const Vector d2 = dimer_state(chain.omega_rabi, chain.gamma_r).amps;
            for (int i = 0; i < d; ++i) {
                Complex amp = 1.0;
                for (int pair = 0; pair < n / 2; ++pair) {
                    const int shift = 2 * (n / 2 - 1 - pair);
                    amp *= d2((i >> shift) & 3);
                }
                dark(i) = n % 2 == 0 ? amp : (i < d / 2 ? 0.0 : amp);
            }
            if (n % 2 != 0) dark.setZero();  // odd chains have no pure dimer target
        }

        const auto ts = linspace(0.0, get_num(config, "t_max"),
                                 get_int(config, "t_count", 101));
        table.columns = {"t", "flux_right", "dark_overlap", "purity",
                         "purity_first_emitter", "excited_population"};
        Matrix rho = Matrix::Zero(d, d);
        rho(0, 0) = 1.0;
        const Matrix lr = model.l_right.mat;
        Matrix number = Matrix::Zero(d, d);
        for (int q = 0; q < n; ++q) {
            Matrix nq = Matrix::Zero(2, 2);
            nq(1, 1) = 1.0;
            number += embed_matrix(nq, *model.space, {q});
        }
        double t = 0.0;
        for (double target_t : ts) {
            if (target_t > t) {
                auto rhs = [&](double, const Vector& y) {
                    const Eigen::Map<const Matrix> r(y.data(), d, d);
                    Matrix dr = cascaded_rhs(model, r, extra);
                    return Vector(Eigen::Map<Vector>(dr.data(), d * d));
                };
                Vector y = Eigen::Map<const Vector>(rho.data(), d * d);
                y = integrate_ode(rhs, y, t, target_t, {.rtol = 1e-8, .atol = 1e-10});
                rho = Eigen::Map<const Matrix>(y.data(), d, d);
                t = target_t;
            }
            const double flux = ((lr.adjoint() * lr * rho).trace()).real();
            const double overlap =
                dark.size() && dark.norm() > 0 ? (dark.adjoint() * rho * dark).value().real()
                                               : 0.0;
            const double purity = (rho * rho).trace().real();
            const Matrix rho1 = partial_trace(rho, *model.space, {0});
            const double purity1 = (rho1 * rho1).trace().real();
            const double excited = (number * rho).trace().real() / n;
            table.rows.push_back({t, flux, overlap, purity, purity1, excited});
        }
        return table;
    }
    if (mode == "dark_state_scaling") {
        // Fig.-4(d)-inset: steady dark-state infidelity of the two-level
        // chain against drive and dephasing.
        require_keys(config, {"mode", "n_emitters", "gamma_r", "omega_values",
                              "gamma_phi_values", "gamma_nr_equals_phi"});
        TwoLevelChain chain;
        chain.n_emitters = get_int(config, "n_emitters", 2);
        chain.gamma_r = get_num(config, "gamma_r", 1.0);
        const bool nr_equal = config.value("gamma_nr_equals_phi", true);
        const auto omegas = get_vec(config, "omega_values");
        const auto phis = get_vec(config, "gamma_phi_values");
        table.columns = {"omega", "gamma_phi", "dark_infidelity"};
        const int count = static_cast<int>(omegas.size() * phis.size());
        table.rows.resize(count);
        parallel_for(count, jobs, [&](int idx) {
            TwoLevelChain c = chain;
            c.omega_rabi = omegas[idx / phis.size()];
            const double gphi = phis[idx % phis.size()];
            const CascadedModel model = cascaded_two_level(c);
            const auto extra =
                noise_jumps(model.space, NoiseSpec{gphi, nr_equal ? gphi : 0.0});
            const DensityMatrix rho = cascaded_steady_state(model, extra);
            const Vector dark = dimer_state(c.omega_rabi, c.gamma_r).amps;
            Vector full = dark;
            for (int pair = 1; pair < c.n_emitters / 2; ++pair) {
                Vector next(full.size() * 4);
                for (int i = 0; i < full.size(); ++i) {
                    for (int j = 0; j < 4; ++j) next(i * 4 + j) = full(i) * dark(j);
                }
                full = next;
            }
            const double overlap = (full.adjoint() * rho.mat * full).value().real();
            table.rows[idx] = {c.omega_rabi, gphi, 1.0 - overlap};
        });
        return table;
    }
    throw ConfigError("dynamics mode must be 'steady_map', 'trajectory' or 'dark_state_scaling'");
}

// ---------------------------------------------------------------------------

Table cmd_scatter(const json& config, std::uint64_t seed, int jobs) {
    const std::string mode = get_str(config, "mode");
    Table table;
    if (mode == "fidelity_vs_delta") {
        require_keys(config, {"mode", "n_g", "delta_values", "backend", "r", "gamma"});
        const int n_g = get_int(config, "n_g", 4);
        const auto deltas = get_vec(config, "delta_values");
        const Backend backend = parse_backend(config);
        ProtocolNetworkOptions opts;
        opts.r = get_num(config, "r", 0.0);
        opts.gamma = get_num(config, "gamma", 1.0);
        std::vector<int> subset(n_g);
        for (int q = 0; q < n_g; ++q) subset[q] = q;
        const double gr = optimal_params(opts.r, opts.gamma).gamma_r;
        table.columns = {"delta_over_gamma_r", "f_z", "infidelity"};
        table.rows.resize(deltas.size());
        parallel_for(static_cast<int>(deltas.size()), jobs, [&](int i) {
            const double f =
                parity_fidelity_ideal_setup(n_g, subset, deltas[i] * gr, backend, opts);
            table.rows[i] = {deltas[i], f, 1.0 - f};
        });
        return table;
    }
    if (mode == "fidelity_vs_v") {
        require_keys(config, {"mode", "n_g", "v_values", "delta_p", "backend"});
        const int n_g = get_int(config, "n_g", 4);
        const auto vs = get_vec(config, "v_values");
        const double delta_p = get_num(config, "delta_p", 0.0);
        const Backend backend = parse_backend(config);
        std::vector<int> subset(n_g);
        for (int q = 0; q < n_g; ++q) subset[q] = q;
        table.columns = {"v_over_gamma_r", "f_z", "infidelity"};
        table.rows.resize(vs.size());
        parallel_for(static_cast<int>(vs.size()), jobs, [&](int i) {
            ProtocolNetworkOptions opts;
            opts.v_over_gamma_r = vs[i];
            const double gr = optimal_params(0.0, 1.0).gamma_r;
            const double f =
                parity_fidelity_ideal_setup(n_g, subset, delta_p * gr, backend, opts);
            table.rows[i] = {vs[i], f, 1.0 - f};
        });
        return table;
    }
    if (mode == "fidelity_vs_j") {
        require_keys(config, {"mode", "n_g", "j_scale_values", "delta_p"});
        const int n_g = get_int(config, "n_g", 4);
        const auto scales = get_vec(config, "j_scale_values");
        const double delta_p = get_num(config, "delta_p", 0.0);
        std::vector<int> subset(n_g);
        for (int q = 0; q < n_g; ++q) subset[q] = q;
        table.columns = {"j_over_j_opt", "f_z", "infidelity"};
        table.rows.resize(scales.size());
        parallel_for(static_cast<int>(scales.size()), jobs, [&](int i) {
            ProtocolNetwork net = make_protocol_network(n_g, subset, {});
            for (NodeParams& node : net.spec.nodes) {
                node.gue.j_hop *= scales[i];
            }
            const double f =
                parity_fidelity(net, subset, delta_p * net.gamma_r, Backend::General);
            table.rows[i] = {scales[i], f, 1.0 - f};
        });
        return table;
    }
    if (mode == "amplitude_single") {
        require_keys(config, {"mode", "delta_n_over_gamma_r", "v_over_gamma_r",
                              "delta_values", "r", "gamma"});
        const double r = get_num(config, "r", 0.0);
        const double gamma = get_num(config, "gamma", 1.0);
        const double gr = optimal_params(r, gamma).gamma_r;
        const NodeParams node = NodeParams::unidirectional(
            get_num(config, "delta_n_over_gamma_r") * gr, r, gamma,
            get_num(config, "v_over_gamma_r", 1.0) * gr);
        table.columns = {"delta_over_gamma_r", "re_t0", "im_t0", "re_t1", "im_t1",
                         "abs_r0", "unitarity_defect"};
        for (double d : get_vec(config, "delta_values")) {
            const NodeAmplitudes amps = node_amplitudes(node, d * gr);
            const double defect =
                std::abs(std::norm(amps.t0) + std::norm(amps.r0) - 1.0);
            table.rows.push_back({d, amps.t0.real(), amps.t0.imag(), amps.t1.real(),
                                  amps.t1.imag(), std::abs(amps.r0), defect});
        }
        return table;
    }
    if (mode == "backend_diff") {
        require_keys(config, {"mode", "n_nodes", "trials", "delta_p"});
        const int n_nodes = get_int(config, "n_nodes", 3);
        const int trials = get_int(config, "trials", 20);
        const double delta_p = get_num(config, "delta_p", 0.1);
        table.columns = {"trial", "max_abs_diff", "unitarity_defect"};
        table.rows.resize(trials);
        parallel_for(trials, jobs, [&](int trial) {
            std::uint64_t stream = seed ^ (0x9E3779B97F4A7C15ULL * (trial + 1));
            auto angle = [&] { return 2.0 * kPi * (splitmix64(stream) >> 11) * 0x1.0p-53; };
            NetworkSpec spec;
            const double gr = optimal_params(0.1, 1.0).gamma_r;
            for (int k = 0; k < n_nodes; ++k) {
                spec.nodes.push_back(NodeParams::unidirectional(angle() - kPi, 0.1, 1.0, gr));
            }
            for (int k = 0; k <= n_nodes; ++k) {
                const double theta = angle(), phase = angle();
                Matrix2 u;
                u << std::cos(theta), std::sin(theta) * std::exp(kImag * phase),
                    -std::sin(theta) * std::exp(-kImag * phase), std::cos(theta);
                spec.beamsplitters.push_back(u);
            }
            spec.phi_tilde = angle();
            const ScatteringResult a = ideal_scattering(spec, delta_p);
            const ScatteringResult b = general_scattering(spec, delta_p);
            double diff = 0.0;
            for (int s = 0; s < a.n_bitstrings(); ++s) {
                diff = std::max(diff, (a.right[s] - b.right[s]).cwiseAbs().maxCoeff());
                diff = std::max(diff, b.left[s].cwiseAbs().maxCoeff());
            }
            table.rows[trial] = {static_cast<double>(trial), diff, b.unitarity_defect()};
        });
        return table;
    }
    throw ConfigError("unknown scatter mode");
}

// ---------------------------------------------------------------------------

Table cmd_protocol(const json& config, std::uint64_t seed, int jobs) {
    const std::string protocol = get_str(config, "protocol");
    Table table;
    if (protocol == "qst") {
        require_keys(config, {"protocol", "delta_values", "c0_re", "c0_im", "c1_re",
                              "c1_im"});
        const double gr = optimal_params(0.0, 1.0).gamma_r;
        table.columns = {"delta_over_gamma_r", "fidelity_entanglement", "closed_form"};
        for (double d : get_vec(config, "delta_values")) {
            const double sim = qst_entanglement_fidelity(d * gr);
            table.rows.push_back({d, sim, qst_fidelity_closed_form(d * gr, gr)});
        }
        return table;
    }
    if (protocol == "qst_retry") {
        require_keys(config, {"protocol", "loss_probability", "runs", "c0_re", "c0_im",
                              "c1_re", "c1_im"});
        const double pd = get_num(config, "loss_probability");
        const int runs = get_int(config, "runs", 1000);
        const Complex c0(get_num(config, "c0_re", 1.0), get_num(config, "c0_im", 0.0));
        const Complex c1(get_num(config, "c1_re", 0.0), get_num(config, "c1_im", 0.0));
        table.columns = {"run", "trials", "fidelity"};
        table.rows.resize(runs);
        parallel_for(runs, jobs, [&](int i) {
            const RetryResult r = run_heralded_retry(pd, c0, c1, seed + i);
            table.rows[i] = {static_cast<double>(i), static_cast<double>(r.trials),
                             r.fidelity};
        });
        double mean = 0.0;
        for (const auto& row : table.rows) mean += row[1];
        table.metadata["mean_trials"] = mean / runs;
        table.metadata["expected_trials"] = 1.0 / (1.0 - pd);
        return table;
    }
    if (protocol == "parity") {
        require_keys(config, {"protocol", "n_g_values", "delta_scale", "backend"});
        const auto ngs = get_vec(config, "n_g_values");
        const double dscale = get_num(config, "delta_scale", 0.05);
        const Backend backend = parse_backend(config);
        const double gr = optimal_params(0.0, 1.0).gamma_r;
        table.columns = {"n_g", "delta_over_gamma_r", "infidelity",
                         "scaled_infidelity"};
        for (double ngd : ngs) {
            const int ng = static_cast<int>(ngd);
            std::vector<int> subset(ng);
            for (int q = 0; q < ng; ++q) subset[q] = q;
            const double delta = dscale * gr / ng;
            const double f = parity_fidelity_ideal_setup(ng, subset, delta, backend);
            table.rows.push_back(
                {ngd, delta / gr, 1.0 - f, (1.0 - f) / std::pow(ng * delta / gr, 2)});
        }
        return table;
    }
    if (protocol == "ghz" || protocol == "cluster") {
        require_keys(config, {"protocol", "n_qubits", "delta_values", "backend"});
        const int n = get_int(config, "n_qubits", 4);
        const Backend backend = parse_backend(config);
        const double gr = optimal_params(0.0, 1.0).gamma_r;
        table.columns = {"delta_over_gamma_r", "fidelity_up", "fidelity_down"};
        for (double d : get_vec(config, "delta_values")) {
            const PreparationResult r = protocol == "ghz"
                                            ? prepare_ghz(n, d * gr, backend)
                                            : prepare_cluster_1d(n, d * gr, backend);
            table.rows.push_back({d, r.fidelity_up, r.fidelity_down});
        }
        return table;
    }
    if (protocol == "toric") {
        require_keys(config, {"protocol", "n_side", "enumerate", "delta_p"});
        const int n_side = get_int(config, "n_side", 2);
        const bool enumerate_all = config.value("enumerate", true);
        const ToricLattice lat = ToricLattice::square(n_side);
        const ToricGenerateResult gen =
            toric_generate(lat, seed, get_num(config, "delta_p", 0.0), enumerate_all);
        table.columns = {"branch", "probability", "min_plaquette", "min_vertex"};
        int idx = 0;
        for (const Branch& b : gen.outcome.branches) {
            double min_p = 1.0, min_v = 1.0;
            for (const auto& p : lat.plaquettes) {
                PauliString ap;
                ap.z_mask = edge_mask(p);
                min_p = std::min(min_p, string_expectation(b.state, ap).real());
            }
            for (const auto& v : lat.vertices) {
                PauliString bv;
                bv.x_mask = edge_mask(v);
                min_v = std::min(min_v, string_expectation(b.state, bv).real());
            }
            table.rows.push_back({static_cast<double>(idx++), b.probability, min_p, min_v});
        }
        table.metadata["n_qubits"] = lat.n_qubits();
        table.metadata["branches"] = gen.outcome.branches.size();
        return table;
    }
    if (protocol == "detector") {
        require_keys(config, {"protocol", "gamma_r", "delta_values"});
        const double gr = get_num(config, "gamma_r", 1.0);
        table.columns = {"delta_over_gamma_r", "p_det", "p_noclick", "sum"};
        for (double d : get_vec(config, "delta_values")) {
            const DetectorResponse det = photon_detector(d * gr, gr);
            const double pn = std::norm(det.noclick_factor);
            table.rows.push_back({d, det.p_det, pn, det.p_det + pn});
        }
        return table;
    }
    if (protocol == "pulse_average") {
        require_keys(config, {"protocol", "gamma_r_mhz", "duration_ns", "sigma_scan_ns",
                              "n_g"});
        const double gr = 2.0 * kPi * get_num(config, "gamma_r_mhz", 50.0) * 1e6;
        const double t_ns = get_num(config, "duration_ns", 400.0);
        const auto sigmas = get_vec(config, "sigma_scan_ns");
        const int n_g = get_int(config, "n_g", 4);
        std::vector<int> subset(n_g);
        for (int q = 0; q < n_g; ++q) subset[q] = q;
        ProtocolNetworkOptions opts;
        auto fz = [&](double delta) {
            return parity_fidelity_ideal_setup(n_g, subset, delta, Backend::Ideal, opts);
        };
        table.columns = {"sigma_t_ns", "f_bar"};
        table.rows.resize(sigmas.size());
        parallel_for(static_cast<int>(sigmas.size()), jobs, [&](int i) {
            const PulseSpec pulse =
                PulseSpec::truncated_gaussian(sigmas[i] * 1e-9, t_ns * 1e-9);
            table.rows[i] = {sigmas[i], pulse_average(fz, pulse, gr)};
        });
        return table;
    }
    throw ConfigError("unknown protocol '" + protocol + "'");
}

// ---------------------------------------------------------------------------

Table cmd_circuit(const json& config, std::uint64_t, int jobs) {
    const std::string mode = get_str(config, "mode");
    const double tau = 2.0 * kPi;
    Table table;
    auto circuit_from = [&](const json& c) {
        CircuitParams cp;
        cp.ej1 = tau * 1e9 * get_num(c, "ej1_ghz");
        cp.ej2 = tau * 1e9 * get_num(c, "ej2_ghz");
        cp.ejc = tau * 1e9 * get_num(c, "ejc_ghz", 0.0);
        cp.c1 = 1e-15 * get_num(c, "c1_ff");
        cp.c2 = 1e-15 * get_num(c, "c2_ff");
        cp.cc = 1e-15 * get_num(c, "cc_ff", 0.0);
        cp.cp1 = 1e-15 * get_num(c, "cp1_ff", 0.0);
        cp.cp2 = 1e-15 * get_num(c, "cp2_ff", 0.0);
        cp.z0 = get_num(c, "z0_ohm", 50.0);
        cp.omega0 = tau * 1e9 * get_num(c, "omega0_ghz");
        return cp;
    };
    if (mode == "effective") {
        require_keys(config, {"mode", "ej1_ghz", "ej2_ghz", "ejc_ghz", "c1_ff", "c2_ff",
                              "cc_ff", "cp1_ff", "cp2_ff", "z0_ohm", "omega0_ghz"});
        const CircuitParams cp = circuit_from(config);
        const EffectiveModel m = effective_model(cp);
        table.columns = {"quantity", "rad_per_s", "over_2pi_mhz"};
        table.metadata["weak_coupling"] = m.weak_coupling;
        const std::vector<std::pair<std::string, double>> vals = {
            {"omega1", m.omega1}, {"omega2", m.omega2}, {"u1", m.u1},   {"u2", m.u2},
            {"j_c", m.j_c},       {"j_i", m.j_i},       {"j", m.j_hop()},
            {"chi", m.chi},       {"gamma1", m.gamma1}, {"gamma2", m.gamma2},
            {"r1", m.r1},         {"r2", m.r2}};
        int idx = 0;
        for (const auto& [name, v] : vals) {
            table.metadata["names"].push_back(name);
            table.rows.push_back({static_cast<double>(idx++), v, v / tau / 1e6});
        }
        return table;
    }
    if (mode == "interface") {
        require_keys(config, {"mode", "ej1_ghz", "ej2_ghz", "ejc_ghz", "c1_ff", "c2_ff",
                              "cc_ff", "cp1_ff", "cp2_ff", "z0_ohm", "omega0_ghz",
                              "ejq_ghz", "cq_ff", "ejc1_ghz", "ejc2_ghz", "ccc1_ff",
                              "ccc2_ff", "omega_q_ghz", "phase_qd"});
        const CircuitParams cp = circuit_from(config);
        InterfaceParams ip;
        ip.ejq = tau * 1e9 * get_num(config, "ejq_ghz");
        ip.cq = 1e-15 * get_num(config, "cq_ff");
        ip.ejc1 = tau * 1e9 * get_num(config, "ejc1_ghz");
        ip.ejc2 = tau * 1e9 * get_num(config, "ejc2_ghz");
        ip.ccc1 = 1e-15 * get_num(config, "ccc1_ff");
        ip.ccc2 = 1e-15 * get_num(config, "ccc2_ff");
        ip.omega_q = tau * 1e9 * get_num(config, "omega_q_ghz");
        ip.phase_qd = get_num(config, "phase_qd", kPi);
        const InterfaceModel m = interface_model(ip, cp);
        const EffectiveModel em = effective_model(cp);
        const double g1 = effective_qubit_rate(m.gamma_q1, em.gamma1, m.jc1, m.ji1,
                                               cp.omega0, ip.omega_q);
        const double g2 = effective_qubit_rate(m.gamma_q2, em.gamma2, m.jc2, m.ji2,
                                               cp.omega0, ip.omega_q);
        const Subradiance sub = subradiance(ip.phase_qd, g1, g2);
        table.columns = {"quantity", "rad_per_s", "over_2pi_mhz"};
        const std::vector<std::pair<std::string, double>> vals = {
            {"v1", m.v1},           {"v2", m.v2},           {"jc1", m.jc1},
            {"jc2", m.jc2},         {"ji1", m.ji1},         {"ji2", m.ji2},
            {"gamma_q1", m.gamma_q1}, {"gamma_q2", m.gamma_q2},
            {"balance1", m.balance1}, {"balance2", m.balance2},
            {"gamma_q1_eff", g1},   {"gamma_q2_eff", g2},
            {"delta_q", sub.delta_q}, {"gamma_q", sub.gamma_q}};
        int idx = 0;
        for (const auto& [name, v] : vals) {
            table.metadata["names"].push_back(name);
            table.rows.push_back({static_cast<double>(idx++), v, v / tau / 1e6});
        }
        return table;
    }
    if (mode == "subradiance") {
        require_keys(config, {"mode", "phase_values", "geff1", "geff2"});
        const double g1 = get_num(config, "geff1"), g2 = get_num(config, "geff2");
        table.columns = {"phase", "delta_q", "gamma_q"};
        for (double phase : get_vec(config, "phase_values")) {
            const Subradiance s = subradiance(phase, g1, g2);
            table.rows.push_back({phase, s.delta_q, s.gamma_q});
        }
        return table;
    }
    if (mode == "renorm_sweep") {
        require_keys(config, {"mode", "c_values_ff", "cc_ff", "cc_scan_ff", "cp_ff",
                              "omega0_ghz", "z0_ohm", "n_max"});
        const auto cs = get_vec(config, "c_values_ff");
        std::vector<double> cc_scan;
        if (config.contains("cc_scan_ff")) {
            cc_scan = get_vec(config, "cc_scan_ff");
        } else {
            cc_scan = {get_num(config, "cc_ff")};
        }
        const double cp_line = 1e-15 * get_num(config, "cp_ff");
        const double omega0 = tau * 1e9 * get_num(config, "omega0_ghz");
        const double z0 = get_num(config, "z0_ohm", 50.0);
        const int n_max = get_int(config, "n_max", 6);
        table.columns = {"c_ff", "cc_ff", "ej_ratio", "chi_over_2pi_mhz",
                         "u_over_2pi_mhz", "r"};
        table.rows.resize(cs.size());
        parallel_for(static_cast<int>(cs.size()), jobs, [&](int i) {
            // With several coupler capacitances, keep the chi-maximizing one.
            double best_chi = 0.0, best_cc = 0.0, best_ratio = 0.0, best_u = 0.0,
                   best_r = 0.0;
            for (double cc_ff : cc_scan) {
                CircuitParams cp;
                cp.c1 = cp.c2 = 1e-15 * cs[i];
                cp.cc = 1e-15 * cc_ff;
                cp.cp1 = cp.cp2 = cp_line;
                cp.z0 = z0;
                cp.omega0 = omega0;
                const double ec = charging_energy(cp.c1 + cp.cc + cp.cp1);
                cp.ej1 = cp.ej2 = omega0 * omega0 / (8.0 * ec);
                cp.ejc = 0.02 * cp.ej1;
                try {
                    const CircuitParams tuned = tune_josephson_energies(cp, n_max);
                    const RenormalizedModel m = renormalized_hamiltonian(tuned, n_max);
                    const EffectiveModel em = effective_model(tuned);
                    if (m.chi > best_chi) {
                        best_chi = m.chi;
                        best_cc = cc_ff;
                        best_ratio = (tuned.ej1 + tuned.ejc) / em.ec1;
                        best_u = m.u1;
                        best_r = em.r1;
                    }
                } catch (const ConvergenceError&) {
                    // strongly coupled corner: level assignment breaks down
                }
            }
            table.rows[i] = {cs[i],           best_cc, best_ratio,
                             best_chi / tau / 1e6, best_u / tau / 1e6, best_r};
        });
        return table;
    }
    throw ConfigError("unknown circuit mode");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cascaded unidirectional-emitter network simulator"};
    app.require_subcommand(1);

    std::string config_path, out_path, format = "csv";
    std::uint64_t seed = 0;
    int jobs = 1;
    app.add_option("--out", out_path, "Output file (default: stdout)");
    app.add_option("--format", format, "Output format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--seed", seed, "Random seed");
    app.add_option("--jobs", jobs, "Parallel workers")->check(CLI::PositiveNumber);

    std::vector<std::string> commands = {"directionality", "dynamics", "scatter",
                                         "protocol", "circuit"};
    for (const std::string& name : commands) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON config file")->required();
    }

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        std::ifstream in(config_path);
        if (!in) throw ConfigError("cannot open config file: " + config_path);
        json config;
        try {
            config = json::parse(in);
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config parse error: ") + e.what());
        }

        Table table;
        if (command == "directionality") {
            table = cmd_directionality(config, seed, jobs);
        } else if (command == "dynamics") {
            table = cmd_dynamics(config, seed, jobs);
        } else if (command == "scatter") {
            table = cmd_scatter(config, seed, jobs);
        } else if (command == "protocol") {
            table = cmd_protocol(config, seed, jobs);
        } else {
            table = cmd_circuit(config, seed, jobs);
        }
        write_table(table, out_path, format, command);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ConvergenceError& e) {
        std::cerr << "convergence failure: " << e.what() << "\n";
        return 3;
    } catch (const MultiplicityError& e) {
        std::cerr << "convergence failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
