#include "qnet/protocols.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iostream>
#include <map>
#include <queue>

namespace qnet {

namespace {

int popcount64(std::uint64_t x) { return std::popcount(x); }

Matrix2 hadamard_gate() {
    Matrix2 h;
    h << 1.0, 1.0, 1.0, -1.0;
    return h / std::sqrt(2.0);
}

Matrix2 sigma_z_gate() {
    Matrix2 z;
    z << 1.0, 0.0, 0.0, -1.0;
    return z;
}

Matrix2 sigma_x_gate() {
    Matrix2 x;
    x << 0.0, 1.0, 1.0, 0.0;
    return x;
}

}  // namespace

Vector plus_state(int n_qubits) {
    const int dim = 1 << n_qubits;
    return Vector::Constant(dim, std::pow(2.0, -0.5 * n_qubits));
}

Vector apply_single_qubit(const Vector& psi, int qubit, const Matrix2& u) {
    const auto dim = psi.size();
    const std::uint64_t bit = 1ULL << qubit;
    Vector out(dim);
    for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(dim); ++i) {
        if (i & bit) continue;
        const Complex a0 = psi(i), a1 = psi(i | bit);
        out(i) = u(0, 0) * a0 + u(0, 1) * a1;
        out(i | bit) = u(1, 0) * a0 + u(1, 1) * a1;
    }
    return out;
}

double state_fidelity(const Vector& a, const Vector& b) { return std::norm(a.dot(b)); }

Vector apply_string(const Vector& psi, const PauliString& s) {
    const auto dim = psi.size();
    Vector out = Vector::Zero(dim);
    for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(dim); ++i) {
        const double sign = (popcount64(i & s.z_mask) & 1) ? -1.0 : 1.0;
        out(i ^ s.x_mask) += sign * psi(i);
    }
    return out;
}

Complex string_expectation(const Vector& psi, const PauliString& s) {
    return psi.dot(apply_string(psi, s));
}

double ScatterBranches::probability(int direction, int line) const {
    return amp[direction][line].squaredNorm();
}

ScatterBranches apply_scattering(const ScatteringResult& sc, int input_line,
                                 const std::vector<int>& node_qubits,
                                 const Vector& psi) {
    if (static_cast<int>(node_qubits.size()) != sc.n_nodes) {
        throw DimensionError("apply_scattering: node count mismatch");
    }
    const auto dim = psi.size();
    ScatterBranches out;
    for (auto& row : out.amp) {
        for (auto& v : row) v = Vector::Zero(dim);
    }
    for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(dim); ++i) {
        if (psi(i) == Complex(0.0, 0.0)) continue;
        int s = 0;
        for (int k = 0; k < sc.n_nodes; ++k) {
            if (i & (1ULL << node_qubits[k])) s |= 1 << k;
        }
        for (int line = 0; line < 2; ++line) {
            out.amp[0][line](i) += sc.right[s](line, input_line) * psi(i);
            out.amp[1][line](i) += sc.left[s](line, input_line) * psi(i);
        }
    }
    return out;
}

double ProtocolOutcome::probability_sum() const {
    double p = 0.0;
    for (const Branch& b : branches) p += b.probability;
    return p;
}

ProtocolNetwork make_protocol_network(int n_qubits, const std::vector<int>& resonant,
                                      const ProtocolNetworkOptions& opts) {
    ProtocolNetwork net;
    net.n_qubits = n_qubits;
    const OptimalParams opt = optimal_params(opts.r, opts.gamma);
    net.gamma_r = opt.gamma_r;
    const double v = opts.v_over_gamma_r * opt.gamma_r;

    std::vector<int> sorted = resonant;
    std::sort(sorted.begin(), sorted.end());
    auto is_resonant = [&](int q) {
        return std::binary_search(sorted.begin(), sorted.end(), q);
    };

    if (opts.drop_spectators) {
        net.node_qubits = sorted;
    } else {
        net.node_qubits.resize(n_qubits);
        for (int q = 0; q < n_qubits; ++q) net.node_qubits[q] = q;
    }
    for (int q : net.node_qubits) {
        const double delta_n =
            is_resonant(q) ? -0.5 * net.gamma_r : opts.far_detuning_factor * net.gamma_r;
        net.spec.nodes.push_back(NodeParams::unidirectional(delta_n, opts.r, opts.gamma, v));
    }
    const int n = static_cast<int>(net.spec.nodes.size());
    net.spec.phi_tilde = opts.phi_tilde;
    net.spec.beamsplitters.assign(n + 1, identity_splitter());
    net.spec.beamsplitters.front() = hadamard_splitter();
    net.spec.beamsplitters.back() = hadamard_splitter();
    if (opts.hadamard_everywhere) {
        net.spec.beamsplitters.assign(n + 1, hadamard_splitter());
    }
    if (opts.compensate_phase) {
        // Each resonant node contributes sigma^n(0) = i sigma_z; a phase
        // plate after the node absorbs the i, leaving exact controlled-Z.
        // The closing pi plate redefines the output phase so that the up
        // line collects the +1 parity eigenspace.
        for (int k = 0; k < n; ++k) {
            if (is_resonant(net.node_qubits[k])) {
                net.spec.beamsplitters[k + 1] =
                    net.spec.beamsplitters[k + 1] * up_phase_plate(opts.node_plate);
            }
        }
        if (opts.up_line_pi_plate) {
            net.spec.beamsplitters[n] = net.spec.beamsplitters[n] * up_phase_plate(-1.0);
        }
    }
    return net;
}

ScatteringResult scatter_network(const ProtocolNetwork& net, double delta_p,
                                 Backend backend) {
    return backend == Backend::Ideal ? ideal_scattering(net.spec, delta_p)
                                     : general_scattering(net.spec, delta_p);
}

double parity_fidelity(const ProtocolNetwork& net, const std::vector<int>& subset,
                       double delta_p, Backend backend) {
    const Vector psi = plus_state(net.n_qubits);
    PauliString parity;
    for (int q : subset) parity.z_mask |= 1ULL << q;
    const Vector flipped = apply_string(psi, parity);
    const Vector ideal_up = (psi + flipped) / std::sqrt(2.0);
    const Vector ideal_down = (psi - flipped) / std::sqrt(2.0);

    const ScatteringResult sc = scatter_network(net, delta_p, backend);
    const ScatterBranches br = apply_scattering(sc, 0, net.node_qubits, psi);
    return state_fidelity(ideal_up, br.amp[0][1]) +
           state_fidelity(ideal_down, br.amp[0][0]);
}

double parity_fidelity_ideal_setup(int n_qubits, const std::vector<int>& subset,
                                   double delta_p, Backend backend,
                                   const ProtocolNetworkOptions& opts) {
    if (subset.empty()) {
        return 1.0;  // no resonant node: the photon exits line down unchanged
    }
    const ProtocolNetwork net = make_protocol_network(n_qubits, subset, opts);
    return parity_fidelity(net, subset, delta_p, backend);
}

ProtocolOutcome measure_string(const Vector& psi, int n_qubits, const PauliString& s,
                               double delta_p, Backend backend,
                               const ProtocolNetworkOptions& opts) {
    std::vector<int> support;
    for (int q = 0; q < n_qubits; ++q) {
        if (s.support() & (1ULL << q)) support.push_back(q);
    }
    if (support.empty()) {
        throw std::invalid_argument("measure_string: empty operator");
    }
    Vector rotated = psi;
    for (int q = 0; q < n_qubits; ++q) {
        if (s.x_mask & (1ULL << q)) rotated = apply_single_qubit(rotated, q, hadamard_gate());
    }
    const ProtocolNetwork net = make_protocol_network(n_qubits, support, opts);
    const ScatteringResult sc = scatter_network(net, delta_p, backend);
    const ScatterBranches br = apply_scattering(sc, 0, net.node_qubits, rotated);

    ProtocolOutcome out;
    const char* line_name[2] = {"down", "up"};
    for (int line = 0; line < 2; ++line) {
        const double p = br.probability(0, line);
        if (p < 1e-300) continue;
        Vector state = br.amp[0][line] / std::sqrt(p);
        for (int q = 0; q < n_qubits; ++q) {
            if (s.x_mask & (1ULL << q)) state = apply_single_qubit(state, q, hadamard_gate());
        }
        Branch b;
        b.photon = line_name[line];
        b.direction = 'R';
        b.qubit_outcomes = {line == 1 ? +1 : -1};  // up <-> +1 eigenspace
        b.probability = p;
        b.state = std::move(state);
        out.branches.push_back(std::move(b));
    }
    for (int line = 0; line < 2; ++line) {
        const double p = br.probability(1, line);
        if (p < 1e-12) continue;
        Branch b;
        b.photon = "lost";
        b.direction = 'L';
        b.probability = p;
        b.state = br.amp[1][line] / std::sqrt(p);
        out.branches.push_back(std::move(b));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Quantum state transfer.

namespace {

// Product register state: sender carries (c0, c1), receiver |+>, rest |0>.
Vector qst_initial_state(int n_qubits, Complex c0, Complex c1) {
    const int dim = 1 << n_qubits;
    const int recv = n_qubits - 1;
    Vector psi = Vector::Zero(dim);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int rbit = 0; rbit < 2; ++rbit) {
        psi(0 | (rbit << recv)) = c0 * inv_sqrt2;
        psi(1 | (rbit << recv)) = c1 * inv_sqrt2;
    }
    return psi;
}

struct MeasuredBranch {
    int outcome;
    double probability;
    Vector state;  // normalized, measured qubit collapsed
};

std::vector<MeasuredBranch> measure_qubit(const Vector& psi, int qubit) {
    const auto dim = psi.size();
    const std::uint64_t bit = 1ULL << qubit;
    std::vector<MeasuredBranch> out;
    for (int m = 0; m < 2; ++m) {
        Vector proj = Vector::Zero(dim);
        for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(dim); ++i) {
            if (((i & bit) != 0) == (m == 1)) proj(i) = psi(i);
        }
        const double p = proj.squaredNorm();
        if (p > 1e-300) {
            out.push_back({m, p, proj / std::sqrt(p)});
        }
    }
    return out;
}

}  // namespace

double qst_fidelity_closed_form(double delta_p, double gamma_r) {
    if (gamma_r <= 0.0) {
        throw std::invalid_argument("qst_fidelity_closed_form: gamma_r must be > 0");
    }
    const double g = gamma_r, d = delta_p;
    const double num = std::pow(g, 8) - 2.0 * std::pow(g, 6) * d * d -
                       2.0 * std::pow(g, 5) * d * d * d +
                       3.0 * std::pow(g, 4) * std::pow(d, 4) +
                       2.0 * std::pow(g, 3) * std::pow(d, 5) + 4.0 * std::pow(d, 8);
    const double den = std::pow(std::pow(g, 4) + 4.0 * std::pow(d, 4), 2);
    return num / den;
}

QstResult run_state_transfer(Complex c0, Complex c1, double delta_p,
                             const QstOptions& opts) {
    const double norm = std::norm(c0) + std::norm(c1);
    if (std::abs(norm - 1.0) > 1e-9) {
        throw std::invalid_argument("run_state_transfer: input state not normalized");
    }
    const int n = opts.n_qubits;
    if (n < 2) throw std::invalid_argument("run_state_transfer: need at least 2 qubits");
    const int sender = 0, recv = n - 1;

    ProtocolNetworkOptions nopts = opts.network;
    nopts.hadamard_everywhere = true;  // Fig.-7 wiring: H at every splitter
    nopts.node_plate = Complex(0.0, 1.0);
    nopts.up_line_pi_plate = false;
    const ProtocolNetwork net = make_protocol_network(n, {sender, recv}, nopts);
    const ScatteringResult sc = scatter_network(net, delta_p, opts.backend);
    const Vector psi0 = qst_initial_state(n, c0, c1);
    const ScatterBranches br = apply_scattering(sc, 0, net.node_qubits, psi0);

    Vector target = Vector::Zero(2);
    target << c0, c1;

    QstResult res;
    res.fidelity = 0.0;
    const char* line_name[2] = {"down", "up"};
    for (int line = 0; line < 2; ++line) {
        const double p_line = br.probability(0, line);
        if (p_line < 1e-300) continue;
        Vector state = apply_single_qubit(br.amp[0][line], sender, hadamard_gate());
        for (const MeasuredBranch& mb : measure_qubit(state, sender)) {
            Branch b;
            b.photon = line_name[line];
            b.qubit_outcomes = {mb.outcome};
            b.probability = mb.probability;
            Vector final_state = apply_single_qubit(mb.state, recv, hadamard_gate());
            final_state = apply_single_qubit(final_state, recv, sigma_x_gate());
            b.corrections.push_back("H(receiver)");
            b.corrections.push_back("X(receiver)");
            if ((mb.outcome == 1) == (line == 1)) {
                final_state = apply_single_qubit(final_state, recv, sigma_z_gate());
                b.corrections.push_back("Z(receiver)");
            }
            // Receiver state conditioned on every measured qubit.
            Vector recv_state = Vector::Zero(2);
            for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(final_state.size());
                 ++i) {
                const std::uint64_t others = i & ~(1ULL << recv);
                const std::uint64_t expect = mb.outcome == 1 ? 1ULL << sender : 0ULL;
                if (others == expect) {
                    recv_state((i >> recv) & 1) += final_state(i);
                }
            }
            b.state = final_state;
            res.fidelity += b.probability * std::norm(target.dot(recv_state));
            res.outcome.branches.push_back(std::move(b));
        }
    }
    return res;
}

double qst_entanglement_fidelity(double delta_p, const QstOptions& opts) {
    const int n = opts.n_qubits;
    const int sender = 0, recv = n - 1, ancilla = n;
    ProtocolNetworkOptions nopts = opts.network;
    nopts.hadamard_everywhere = true;
    nopts.node_plate = Complex(0.0, 1.0);
    nopts.up_line_pi_plate = false;
    const ProtocolNetwork net = make_protocol_network(n + 1, {sender, recv}, nopts);
    // The builder never makes the ancilla a node: restrict to sender/recv.
    const ScatteringResult sc = scatter_network(net, delta_p, opts.backend);

    // (|00> + |11>)_{sender,ancilla}/sqrt(2) x |+>_recv, rest |0>.
    const int dim = 1 << (n + 1);
    Vector psi = Vector::Zero(dim);
    const double a = 0.5;  // 1/sqrt(2) x 1/sqrt(2)
    for (int rbit = 0; rbit < 2; ++rbit) {
        psi(0 | (rbit << recv)) += a;
        psi((1 | (1 << ancilla)) | (rbit << recv)) += a;
    }

    const ScatterBranches br = apply_scattering(sc, 0, net.node_qubits, psi);
    double fidelity = 0.0;
    for (int line = 0; line < 2; ++line) {
        Vector state = apply_single_qubit(br.amp[0][line], sender, hadamard_gate());
        for (const MeasuredBranch& mb : measure_qubit(state, sender)) {
            Vector final_state = apply_single_qubit(mb.state, recv, hadamard_gate());
            final_state = apply_single_qubit(final_state, recv, sigma_x_gate());
            if ((mb.outcome == 1) == (line == 1)) {
                final_state = apply_single_qubit(final_state, recv, sigma_z_gate());
            }
            // Overlap with (|00> + |11>)_{recv,ancilla}/sqrt(2).
            Complex overlap = 0.0;
            const std::uint64_t sender_bits = mb.outcome == 1 ? 1ULL : 0ULL;
            overlap += final_state(sender_bits) / std::sqrt(2.0);
            overlap += final_state(sender_bits | (1ULL << recv) | (1ULL << ancilla)) /
                       std::sqrt(2.0);
            fidelity += mb.probability * std::norm(overlap);
        }
    }
    return fidelity;
}

RetryResult run_heralded_retry(double loss_probability, Complex c0, Complex c1,
                               std::uint64_t seed, double delta_p) {
    if (loss_probability < 0.0 || loss_probability >= 1.0) {
        throw std::invalid_argument("run_heralded_retry: need 0 <= P_d < 1");
    }
    const double norm = std::norm(c0) + std::norm(c1);
    if (std::abs(norm - 1.0) > 1e-9) {
        throw std::invalid_argument("run_heralded_retry: input state not normalized");
    }
    // Register: sender 0, receiver 1, backup 2.
    const int sender = 0, recv = 1, backup = 2;
    ProtocolNetworkOptions nopts;
    nopts.hadamard_everywhere = true;
    nopts.node_plate = Complex(0.0, 1.0);
    nopts.up_line_pi_plate = false;
    const ProtocolNetwork net = make_protocol_network(3, {sender, recv}, nopts);
    const ScatteringResult sc = scatter_network(net, delta_p, Backend::Ideal);

    auto entangled_register = [&](Complex d0, Complex d1) {
        // [d0 (|0>_s |1>_b + |1>_s |0>_b) + d1 (|1>_s |1>_b + |0>_s |0>_b)]
        //   / sqrt(2) x |+>_recv
        Vector psi = Vector::Zero(8);
        const double h = 0.5;  // 1/sqrt(2) entangling x 1/sqrt(2) receiver
        for (int rbit = 0; rbit < 2; ++rbit) {
            const std::uint64_t r = static_cast<std::uint64_t>(rbit) << recv;
            psi((0ULL | (1ULL << backup)) | r) += d0 * h;
            psi((1ULL | 0ULL) | r) += d0 * h;
            psi((1ULL | (1ULL << backup)) | r) += d1 * h;
            psi((0ULL | 0ULL) | r) += d1 * h;
        }
        return psi;
    };

    std::uint64_t rng_state = seed;
    auto uniform = [&]() {
        return static_cast<double>(splitmix64(rng_state) >> 11) * 0x1.0p-53;
    };

    RetryResult res;
    res.trials = 0;
    Complex d0 = c0, d1 = c1;
    Vector target = Vector::Zero(2);
    target << c0, c1;

    while (true) {
        ++res.trials;
        Vector psi = entangled_register(d0, d1);
        const ScatterBranches br = apply_scattering(sc, 0, net.node_qubits, psi);
        const bool detected = uniform() >= loss_probability;
        if (!detected) {
            // No line record: measure the sender; the scattering is diagonal
            // in the computational basis, so the backup stays pure and the
            // logical amplitudes survive up to a known bit flip.
            double p0 = 0.0;
            for (int line = 0; line < 2; ++line) {
                for (const MeasuredBranch& mb : measure_qubit(br.amp[0][line], sender)) {
                    if (mb.outcome == 0) p0 += mb.probability;
                }
            }
            const int m = uniform() < p0 ? 0 : 1;
            Branch b;
            b.photon = "lost";
            b.qubit_outcomes = {m};
            b.probability = 1.0;
            if (m == 0) {
                b.corrections.push_back("X(backup)");  // restores the logical state
            }
            res.outcome.branches.push_back(std::move(b));
            continue;
        }
        // Photon detected in line j with probability p_j.
        const double p_up = br.probability(0, 1);
        const double p_down = br.probability(0, 0);
        const int line = uniform() < p_up / (p_up + p_down) ? 1 : 0;
        Vector state = br.amp[0][line] / std::sqrt(line == 1 ? p_up : p_down);
        state = apply_single_qubit(state, sender, hadamard_gate());
        const auto sender_branches = measure_qubit(state, sender);
        const double pm0 = sender_branches.front().outcome == 0
                               ? sender_branches.front().probability
                               : 0.0;
        const int m = uniform() < pm0 ? 0 : 1;
        Vector post;
        for (const MeasuredBranch& mb : sender_branches) {
            if (mb.outcome == m) post = mb.state;
        }
        post = apply_single_qubit(post, recv, hadamard_gate());
        post = apply_single_qubit(post, recv, sigma_x_gate());
        Branch b;
        b.photon = line == 1 ? "up" : "down";
        b.qubit_outcomes = {m};
        b.probability = 1.0;
        b.corrections.push_back("H(receiver)");
        b.corrections.push_back("X(receiver)");
        if ((m == 1) == (line == 1)) {
            post = apply_single_qubit(post, recv, sigma_z_gate());
            b.corrections.push_back("Z(receiver)");
        }
        // Hand the entanglement from the backup to the receiver.
        const auto backup_branches = measure_qubit(post, backup);
        const double pb1 = [&] {
            for (const MeasuredBranch& mb : backup_branches) {
                if (mb.outcome == 1) return mb.probability;
            }
            return 0.0;
        }();
        const int mb_out = uniform() < pb1 ? 1 : 0;
        for (const MeasuredBranch& mb : backup_branches) {
            if (mb.outcome == mb_out) post = mb.state;
        }
        b.qubit_outcomes.push_back(mb_out);
        if (mb_out == 0) {
            post = apply_single_qubit(post, recv, sigma_x_gate());
            b.corrections.push_back("X(receiver)");
        }
        // Receiver state: all other qubits are collapsed.
        Vector recv_state = Vector::Zero(2);
        for (std::uint64_t i = 0; i < 8; ++i) {
            recv_state((i >> recv) & 1) += post(i);
        }
        const double rn = recv_state.norm();
        recv_state /= rn;
        b.state = post;
        res.fidelity = std::norm(target.dot(recv_state));
        res.outcome.branches.push_back(std::move(b));
        return res;
    }
}

DetectorResponse photon_detector(double delta_p, double gamma_r) {
    if (gamma_r <= 0.0) {
        throw std::invalid_argument("photon_detector: gamma_r must be > 0");
    }
    const Complex t0 = transmission_phase(delta_p - 0.5 * gamma_r, gamma_r);
    const Complex t1 = transmission_phase(delta_p + 0.5 * gamma_r, gamma_r);
    DetectorResponse r;
    r.click_factor = 0.5 * (t1 - t0);    // <-| sigma(delta) |+>
    r.noclick_factor = 0.5 * (t0 + t1);  // <+| sigma(delta) |+>
    r.p_det = std::norm(r.click_factor);
    return r;
}

// ---------------------------------------------------------------------------
// Pulse averaging.

void PulseSpec::validate() const {
    if (sampled()) {
        if (deltas.size() != amplitudes.size() || deltas.size() < 2) {
            throw std::invalid_argument("PulseSpec: sampled grid sizes mismatch");
        }
        if (!std::is_sorted(deltas.begin(), deltas.end())) {
            throw std::invalid_argument("PulseSpec: sampled deltas must increase");
        }
        double norm = 0.0;
        for (size_t i = 0; i + 1 < deltas.size(); ++i) {
            const double w = deltas[i + 1] - deltas[i];
            norm += 0.5 * w * (amplitudes[i] * amplitudes[i] +
                               amplitudes[i + 1] * amplitudes[i + 1]);
        }
        if (std::abs(norm - 1.0) > 1e-10) {
            throw std::invalid_argument("PulseSpec: sampled pulse not normalized");
        }
        return;
    }
    if (sigma_t <= 0.0 || duration <= 0.0) {
        throw std::invalid_argument("PulseSpec: need sigma_t > 0 and duration > 0");
    }
}

PulseSpec PulseSpec::truncated_gaussian(double sigma_t, double duration) {
    PulseSpec p;
    p.sigma_t = sigma_t;
    p.duration = duration;
    p.validate();
    return p;
}

PulseSpec PulseSpec::sampled(std::vector<double> deltas, std::vector<double> amps) {
    PulseSpec p;
    p.deltas = std::move(deltas);
    p.amplitudes = std::move(amps);
    p.validate();
    return p;
}

namespace {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.resize(n);
    weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
    }
}

}  // namespace

double pulse_average(const std::function<double(double)>& fidelity,
                     const PulseSpec& pulse, double gamma_r, double rel_tol) {
    pulse.validate();
    if (pulse.sampled()) {
        double num = 0.0, den = 0.0;
        for (size_t i = 0; i + 1 < pulse.deltas.size(); ++i) {
            const double w = pulse.deltas[i + 1] - pulse.deltas[i];
            const double f0 = pulse.amplitudes[i] * pulse.amplitudes[i];
            const double f1 = pulse.amplitudes[i + 1] * pulse.amplitudes[i + 1];
            num += 0.5 * w *
                   (f0 * fidelity(pulse.deltas[i]) + f1 * fidelity(pulse.deltas[i + 1]));
            den += 0.5 * w * (f0 + f1);
        }
        return num / den;
    }

    const double half_t = 0.5 * pulse.duration;
    // Spectral amplitude of the truncated Gaussian (real and even).
    std::vector<double> tn, tw;
    auto f_amp_maker = [&](double w_max) {
        const int n_t =
            std::min(6000, 128 + 8 * static_cast<int>(half_t * w_max / kPi));
        gauss_legendre(n_t, tn, tw);
        return [&, half_t](double delta) {
            double acc = 0.0;
            for (size_t i = 0; i < tn.size(); ++i) {
                const double t = half_t * tn[i];
                acc += tw[i] * std::exp(-t * t / (4.0 * pulse.sigma_t * pulse.sigma_t)) *
                       std::cos(delta * t);
            }
            return acc * half_t;  // un-normalized; the ratio cancels A
        };
    };

    double w_lim = std::max(8.0 * gamma_r, 16.0 / pulse.sigma_t);
    double previous = 0.0;
    for (int round = 0; round < 8; ++round) {
        auto f_amp = f_amp_maker(w_lim);
        int n_nodes = 256;
        double value = 0.0, last = 0.0;
        for (int refine = 0; refine < 6; ++refine) {
            std::vector<double> xn, xw;
            gauss_legendre(n_nodes, xn, xw);
            double num = 0.0, den = 0.0;
            for (int i = 0; i < n_nodes; ++i) {
                const double d = w_lim * xn[i];
                const double f2 = std::pow(f_amp(d), 2);
                num += xw[i] * f2 * fidelity(d);
                den += xw[i] * f2;
            }
            value = num / den;
            if (refine > 0 && std::abs(value - last) <= rel_tol * std::abs(value)) break;
            last = value;
            n_nodes *= 2;
        }
        if (round > 0 && std::abs(value - previous) <= rel_tol * std::abs(value)) {
            return value;
        }
        previous = value;
        w_lim *= 2.0;
    }
    return previous;
}

// ---------------------------------------------------------------------------
// GHZ and 1D cluster states.

Vector ghz_state(int n_qubits) {
    PauliString all_z;
    all_z.z_mask = (1ULL << n_qubits) - 1;
    const Vector psi = plus_state(n_qubits);
    Vector out = (psi + apply_string(psi, all_z)) / std::sqrt(2.0);
    return out;
}

Vector cluster_state_1d(int n_qubits) {
    Vector psi = plus_state(n_qubits);
    for (std::uint64_t i = 0; i < psi.size(); ++i) {
        int sign = 0;
        for (int q = 0; q + 1 < n_qubits; ++q) {
            if ((i & (1ULL << q)) && (i & (1ULL << (q + 1)))) ++sign;
        }
        if (sign & 1) psi(i) = -psi(i);
    }
    return psi;
}

PreparationResult prepare_ghz(int n_qubits, double delta_p, Backend backend,
                              const ProtocolNetworkOptions& opts) {
    std::vector<int> all(n_qubits);
    for (int q = 0; q < n_qubits; ++q) all[q] = q;
    const ProtocolNetwork net = make_protocol_network(n_qubits, all, opts);
    const ScatteringResult sc = scatter_network(net, delta_p, backend);
    const ScatterBranches br = apply_scattering(sc, 0, net.node_qubits,
                                                plus_state(n_qubits));
    const Vector target = ghz_state(n_qubits);

    PreparationResult res;
    res.fidelity_up = 0.0;
    res.fidelity_down = 0.0;
    for (int line = 0; line < 2; ++line) {
        const double p = br.probability(0, line);
        if (p < 1e-300) continue;
        Vector state = br.amp[0][line] / std::sqrt(p);
        Branch b;
        b.photon = line == 1 ? "up" : "down";
        b.probability = p;
        if (line == 0) {
            state = apply_single_qubit(state, 0, sigma_x_gate());
            b.corrections.push_back("X(q0)");
        }
        const double f = state_fidelity(target, state);
        (line == 1 ? res.fidelity_up : res.fidelity_down) = f;
        b.state = std::move(state);
        res.outcome.branches.push_back(std::move(b));
    }
    return res;
}

PreparationResult prepare_cluster_1d(int n_qubits, double delta_p, Backend backend,
                                     const ProtocolNetworkOptions& opts) {
    std::vector<int> all(n_qubits);
    for (int q = 0; q < n_qubits; ++q) all[q] = q;
    ProtocolNetworkOptions copts = opts;
    copts.hadamard_everywhere = true;
    copts.up_line_pi_plate = false;
    const ProtocolNetwork net = make_protocol_network(n_qubits, all, copts);
    const ScatteringResult sc = scatter_network(net, delta_p, backend);
    const ScatterBranches br = apply_scattering(sc, 0, net.node_qubits,
                                                plus_state(n_qubits));
    const Vector target = cluster_state_1d(n_qubits);
    // Branch states are (H on all qubits)(sigma_z on the last)^j |C_1D>.
    const Matrix2 zh = sigma_z_gate() * hadamard_gate();

    PreparationResult res;
    res.fidelity_up = 0.0;
    res.fidelity_down = 0.0;
    for (int line = 0; line < 2; ++line) {
        const double p = br.probability(0, line);
        if (p < 1e-300) continue;
        Vector state = br.amp[0][line] / std::sqrt(p);
        Branch b;
        b.photon = line == 1 ? "up" : "down";
        b.probability = p;
        for (int q = 0; q < n_qubits; ++q) {
            const bool last = q == n_qubits - 1;
            const Matrix2 u = (line == 1 && last) ? zh : hadamard_gate();
            state = apply_single_qubit(state, q, u);
        }
        b.corrections.push_back(line == 1 ? "H(all), extra Z(last)" : "H(all)");
        const double f = state_fidelity(target, state);
        (line == 1 ? res.fidelity_up : res.fidelity_down) = f;
        b.state = std::move(state);
        res.outcome.branches.push_back(std::move(b));
    }
    return res;
}

// ---------------------------------------------------------------------------
// Toric code.

int ToricLattice::h_edge(int x, int y) const {
    return 2 * (((y % n_side + n_side) % n_side) * n_side + ((x % n_side + n_side) % n_side));
}

int ToricLattice::v_edge(int x, int y) const { return h_edge(x, y) + 1; }

ToricLattice ToricLattice::square(int n_side) {
    if (n_side < 2) throw std::invalid_argument("ToricLattice: n_side must be >= 2");
    ToricLattice lat;
    lat.n_side = n_side;
    for (int y = 0; y < n_side; ++y) {
        for (int x = 0; x < n_side; ++x) {
            lat.plaquettes.push_back(
                {lat.h_edge(x, y), lat.h_edge(x, y + 1), lat.v_edge(x, y), lat.v_edge(x + 1, y)});
            lat.vertices.push_back(
                {lat.h_edge(x, y), lat.h_edge(x - 1, y), lat.v_edge(x, y), lat.v_edge(x, y - 1)});
        }
    }
    for (int x = 0; x < n_side; ++x) {
        lat.logical_z1.push_back(lat.h_edge(x, 0));  // horizontal site cycle
        lat.logical_x2.push_back(lat.v_edge(x, 0));  // horizontal dual cycle
    }
    for (int y = 0; y < n_side; ++y) {
        lat.logical_z2.push_back(lat.v_edge(0, y));  // vertical site cycle
        lat.logical_x1.push_back(lat.h_edge(0, y));  // vertical dual cycle
    }
    lat.validate();
    return lat;
}

std::uint64_t edge_mask(const std::vector<int>& edges) {
    std::uint64_t m = 0;
    for (int e : edges) m |= 1ULL << e;
    return m;
}

namespace {

int gf2_rank(std::vector<std::uint64_t> rows) {
    int rank = 0;
    for (int bit = 63; bit >= 0; --bit) {
        const std::uint64_t mask = 1ULL << bit;
        size_t pivot = rows.size();
        for (size_t r = rank; r < rows.size(); ++r) {
            if (rows[r] & mask) {
                pivot = r;
                break;
            }
        }
        if (pivot == rows.size()) continue;
        std::swap(rows[rank], rows[pivot]);
        for (size_t r = 0; r < rows.size(); ++r) {
            if (r != static_cast<size_t>(rank) && (rows[r] & mask)) rows[r] ^= rows[rank];
        }
        ++rank;
    }
    return rank;
}

}  // namespace

void ToricLattice::validate() const {
    const int n = n_qubits();
    if (n > 62) throw SizeError("ToricLattice: register too large");
    std::vector<int> plaquette_count(n, 0), vertex_count(n, 0);
    std::uint64_t all_p = 0, all_v = 0;
    std::vector<std::uint64_t> p_rows, v_rows;
    for (const auto& p : plaquettes) {
        if (p.size() != 4) throw std::invalid_argument("ToricLattice: plaquette size != 4");
        for (int e : p) ++plaquette_count[e];
        all_p ^= edge_mask(p);
        p_rows.push_back(edge_mask(p));
    }
    for (const auto& v : vertices) {
        if (v.size() != 4) throw std::invalid_argument("ToricLattice: vertex size != 4");
        for (int e : v) ++vertex_count[e];
        all_v ^= edge_mask(v);
        v_rows.push_back(edge_mask(v));
    }
    for (int e = 0; e < n; ++e) {
        if (plaquette_count[e] != 2 || vertex_count[e] != 2) {
            throw std::invalid_argument("ToricLattice: edge incidence broken");
        }
    }
    if (all_p != 0 || all_v != 0) {
        throw std::invalid_argument("ToricLattice: stabilizer products are not identity");
    }
    const int expected = n_side * n_side - 1;
    if (gf2_rank(p_rows) != expected || gf2_rank(v_rows) != expected) {
        throw std::invalid_argument("ToricLattice: wrong independent stabilizer count");
    }
    // Logical anticommutation pattern.
    auto overlap = [](const std::vector<int>& a, const std::vector<int>& b) {
        return popcount64(edge_mask(a) & edge_mask(b));
    };
    if (overlap(logical_z1, logical_x1) % 2 != 1 ||
        overlap(logical_z2, logical_x2) % 2 != 1 ||
        overlap(logical_z1, logical_x2) % 2 != 0 ||
        overlap(logical_z2, logical_x1) % 2 != 0) {
        throw std::invalid_argument("ToricLattice: logical operators miswired");
    }
}

Vector toric_code_state(const ToricLattice& lat) {
    Vector psi = plus_state(lat.n_qubits());
    for (const auto& p : lat.plaquettes) {
        PauliString ap;
        ap.z_mask = edge_mask(p);
        psi = 0.5 * (psi + apply_string(psi, ap));
    }
    psi.normalize();
    return psi;
}

PauliString logical_string(const ToricLattice& lat, LogicalOp op) {
    PauliString s;
    switch (op) {
        case LogicalOp::Z1: s.z_mask = edge_mask(lat.logical_z1); break;
        case LogicalOp::Z2: s.z_mask = edge_mask(lat.logical_z2); break;
        case LogicalOp::X1: s.x_mask = edge_mask(lat.logical_x1); break;
        case LogicalOp::X2: s.x_mask = edge_mask(lat.logical_x2); break;
    }
    return s;
}

Vector toric_apply_logical(const ToricLattice& lat, const Vector& psi, LogicalOp op) {
    return apply_string(psi, logical_string(lat, op));
}

double code_space_overlap(const ToricLattice& lat, const Vector& psi) {
    const Vector phi1 = toric_code_state(lat);
    const Vector phi2 = toric_apply_logical(lat, phi1, LogicalOp::Z1);
    const Vector phi3 = toric_apply_logical(lat, phi1, LogicalOp::Z2);
    const Vector phi4 = toric_apply_logical(lat, phi2, LogicalOp::Z2);
    return state_fidelity(phi1, psi) + state_fidelity(phi2, psi) +
           state_fidelity(phi3, psi) + state_fidelity(phi4, psi);
}

namespace {

// sigma_x correction pattern flipping exactly the -1 plaquettes: pair them
// and connect each pair by a path in the dual lattice.
std::vector<int> toric_correction_edges(const ToricLattice& lat,
                                        const std::vector<int>& outcomes) {
    const int n = lat.n_side;
    std::vector<int> minus;
    for (size_t p = 0; p < outcomes.size(); ++p) {
        if (outcomes[p] == -1) minus.push_back(static_cast<int>(p));
    }
    if (minus.size() % 2 != 0) {
        throw ConvergenceError("toric_correction_edges: odd defect count");
    }
    std::uint64_t flip = 0;
    for (size_t k = 0; k + 1 < minus.size(); k += 2) {
        int x = minus[k] % n, y = minus[k] / n;
        const int tx = minus[k + 1] % n, ty = minus[k + 1] / n;
        // March in x then in y; each dual step crosses one edge.
        while (x != tx) {
            flip ^= 1ULL << lat.v_edge(x + 1, y);  // shared with p(x+1, y)
            x = (x + 1) % n;
        }
        while (y != ty) {
            flip ^= 1ULL << lat.h_edge(x, y + 1);  // shared with p(x, y+1)
            y = (y + 1) % n;
        }
    }
    std::vector<int> edges;
    for (int e = 0; e < lat.n_qubits(); ++e) {
        if (flip & (1ULL << e)) edges.push_back(e);
    }
    return edges;
}

}  // namespace

ToricGenerateResult toric_generate(const ToricLattice& lat, std::uint64_t seed,
                                   double delta_p, bool enumerate_all,
                                   Backend backend) {
    const int n = lat.n_qubits();
    struct Path {
        Vector state;
        double probability;
        std::vector<int> record;
    };
    std::vector<Path> paths{{plus_state(n), 1.0, {}}};
    std::uint64_t rng_state = seed;
    auto uniform = [&]() {
        return static_cast<double>(splitmix64(rng_state) >> 11) * 0x1.0p-53;
    };

    for (const auto& p : lat.plaquettes) {
        PauliString ap;
        ap.z_mask = edge_mask(p);
        std::vector<Path> next;
        for (const Path& path : paths) {
            const ProtocolOutcome mo =
                measure_string(path.state, n, ap, delta_p, backend);
            if (enumerate_all) {
                for (const Branch& b : mo.branches) {
                    if (b.photon == "lost") continue;
                    Path np;
                    np.state = b.state;
                    np.probability = path.probability * b.probability;
                    np.record = path.record;
                    np.record.push_back(b.qubit_outcomes[0]);
                    next.push_back(std::move(np));
                }
            } else {
                std::vector<const Branch*> candidates;
                for (const Branch& b : mo.branches) {
                    if (b.photon != "lost") candidates.push_back(&b);
                }
                const double u = uniform();
                double acc = 0.0;
                const Branch* picked = candidates.back();
                for (const Branch* b : candidates) {
                    acc += b->probability;
                    if (u < acc) {
                        picked = b;
                        break;
                    }
                }
                Path np;
                np.state = picked->state;
                np.probability = path.probability * picked->probability;
                np.record = path.record;
                np.record.push_back(picked->qubit_outcomes[0]);
                next.push_back(std::move(np));
            }
        }
        paths = std::move(next);
    }

    ToricGenerateResult res;
    for (Path& path : paths) {
        const std::vector<int> edges = toric_correction_edges(lat, path.record);
        PauliString corr;
        corr.x_mask = edge_mask(edges);
        Vector corrected = corr.x_mask ? apply_string(path.state, corr) : path.state;
        Branch b;
        b.photon = "sequence";
        b.probability = path.probability;
        b.qubit_outcomes = path.record;
        for (int e : edges) b.corrections.push_back("X(q" + std::to_string(e) + ")");
        b.state = std::move(corrected);
        res.plaquette_records.push_back(path.record);
        res.correction_edges.push_back(edges);
        res.outcome.branches.push_back(std::move(b));
    }
    return res;
}

ProtocolOutcome toric_measure_logical(const ToricLattice& lat, const Vector& psi,
                                      LogicalOp op, double delta_p, Backend backend) {
    const double overlap = code_space_overlap(lat, psi);
    if (overlap < 1.0 - 1e-8) {
        std::cerr << "toric_measure_logical: state leaves the code space "
                  << "(overlap " << overlap << ")\n";
    }
    return measure_string(psi, lat.n_qubits(), logical_string(lat, op), delta_p,
                          backend);
}

ProtocolOutcome exp_string(const Vector& psi, int n_qubits, const PauliString& s,
                           double phi, double delta_p, Backend backend) {
    const int anc = n_qubits;
    const int dim = 1 << n_qubits;
    // Extend the register with the ancilla in |+>.
    Vector ext = Vector::Zero(2 * dim);
    for (int i = 0; i < dim; ++i) {
        ext(i) = psi(i) / std::sqrt(2.0);
        ext(i | dim) = psi(i) / std::sqrt(2.0);
    }
    PauliString joint = s;
    joint.z_mask |= 1ULL << anc;
    const ProtocolOutcome parity =
        measure_string(ext, n_qubits + 1, joint, delta_p, backend);

    ProtocolOutcome out;
    for (const Branch& pb : parity.branches) {
        if (pb.photon == "lost") {
            out.branches.push_back(pb);
            continue;
        }
        const int outcome = pb.qubit_outcomes[0];
        // Ancilla basis adapted to the parity branch; the second outcome
        // needs the string itself as correction.
        const Complex ep = std::exp(kImag * phi);
        const Complex em = std::conj(ep);
        const Complex a0 = outcome == 1 ? em : ep;
        const Complex a1 = outcome == 1 ? ep : em;
        for (int k = 0; k < 2; ++k) {
            const Complex b0 = std::conj(a0) / std::sqrt(2.0);
            const Complex b1 = (k == 0 ? 1.0 : -1.0) * std::conj(a1) / std::sqrt(2.0);
            Vector reduced(dim);
            for (int i = 0; i < dim; ++i) {
                reduced(i) = b0 * pb.state(i) + b1 * pb.state(i | dim);
            }
            const double p = reduced.squaredNorm();
            if (p < 1e-300) continue;
            reduced /= std::sqrt(p);
            Branch b;
            b.photon = pb.photon;
            b.qubit_outcomes = {outcome, k};
            b.probability = pb.probability * p;
            if (k == 1) {
                reduced = apply_string(reduced, s);
                b.corrections.push_back("S(string)");
            }
            b.state = std::move(reduced);
            out.branches.push_back(std::move(b));
        }
    }
    return out;
}

WriteInResult toric_write_in(const ToricLattice& lat, Complex c0, Complex c1,
                             double delta_p) {
    const double norm = std::norm(c0) + std::norm(c1);
    if (std::abs(norm - 1.0) > 1e-9) {
        throw std::invalid_argument("toric_write_in: input state not normalized");
    }
    const int n = lat.n_qubits();
    const int anc = n;
    const int dim = 1 << n;
    const PauliString logical_z = logical_string(lat, LogicalOp::X1);  // diag on code
    const PauliString logical_x = logical_string(lat, LogicalOp::Z1);  // flips code

    // Memory in |Phi_1>, then projected onto the +1 eigenspace of the
    // logical X (the Z_1 string) so it starts in |+_L>.
    Vector memory = toric_code_state(lat);
    WriteInResult res;
    res.fidelity = 0.0;

    const ProtocolOutcome prep =
        measure_string(memory, n, logical_x, delta_p, Backend::Ideal);
    const Vector phi1 = toric_code_state(lat);
    const Vector phi2 = toric_apply_logical(lat, phi1, LogicalOp::Z1);
    Vector target = c0 * phi1 + c1 * phi2;

    double total_prob = 0.0;
    for (const Branch& prep_branch : prep.branches) {
        if (prep_branch.photon == "lost") continue;
        Vector plus_l = prep_branch.state;
        std::vector<std::string> prep_corr;
        if (prep_branch.qubit_outcomes[0] == -1) {
            plus_l = apply_string(plus_l, logical_z);  // X_1 flips the -1 sector
            prep_corr.push_back("X1(prep)");
        }
        // Ancilla in (c0, c1); joint parity of sigma_z(anc) x logical Z.
        Vector ext = Vector::Zero(2 * dim);
        for (int i = 0; i < dim; ++i) {
            ext(i) = c0 * plus_l(i);
            ext(i | dim) = c1 * plus_l(i);
        }
        PauliString joint = logical_z;
        joint.z_mask |= 1ULL << anc;
        const ProtocolOutcome parity =
            measure_string(ext, n + 1, joint, delta_p, Backend::Ideal);
        for (const Branch& pb : parity.branches) {
            if (pb.photon == "lost") continue;
            // Hadamard on the ancilla, then measure it.
            Vector state = apply_single_qubit(pb.state, anc, hadamard_gate());
            for (const MeasuredBranch& mb : measure_qubit(state, anc)) {
                Vector mem(dim);
                for (int i = 0; i < dim; ++i) {
                    mem(i) = mb.state(i | (mb.outcome == 1 ? dim : 0));
                }
                Branch b;
                b.photon = pb.photon;
                b.qubit_outcomes = {prep_branch.qubit_outcomes[0], pb.qubit_outcomes[0],
                                    mb.outcome};
                b.probability = prep_branch.probability * pb.probability * mb.probability;
                b.corrections = prep_corr;
                if (pb.photon == "down") {
                    mem = apply_string(mem, logical_x);
                    b.corrections.push_back("Z1(logical X)");
                }
                if (mb.outcome == 1) {
                    mem = apply_string(mem, logical_z);
                    b.corrections.push_back("X1(logical Z)");
                }
                const double f = state_fidelity(target, mem);
                res.fidelity += b.probability * f;
                total_prob += b.probability;
                b.state = mem;
                res.outcome.branches.push_back(std::move(b));
                res.memory_state = std::move(mem);
            }
        }
    }
    res.fidelity /= total_prob;
    return res;
}

ReadOutResult toric_read_out(const ToricLattice& lat, const Vector& memory,
                             Complex c0, Complex c1, double delta_p) {
    const int n = lat.n_qubits();
    const int anc = n;
    const int dim = 1 << n;
    const PauliString logical_z = logical_string(lat, LogicalOp::X1);
    const PauliString logical_x = logical_string(lat, LogicalOp::Z1);

    // Ancilla in |+>; joint parity with the logical Z through the inverted
    // (left-propagating) interferometer.
    Vector ext = Vector::Zero(2 * dim);
    for (int i = 0; i < dim; ++i) {
        ext(i) = memory(i) / std::sqrt(2.0);
        ext(i | dim) = memory(i) / std::sqrt(2.0);
    }
    PauliString joint = logical_z;
    joint.z_mask |= 1ULL << anc;
    const ProtocolOutcome parity =
        measure_string(ext, n + 1, joint, delta_p, Backend::Ideal);

    Vector target = Vector::Zero(2);
    target << c0, c1;

    ReadOutResult res;
    res.fidelity = 0.0;
    double total_prob = 0.0;
    for (const Branch& pb : parity.branches) {
        if (pb.photon == "lost") continue;
        // Measure the memory in the logical X basis (second photon).
        const ProtocolOutcome logical =
            measure_string(pb.state, n + 1, logical_x, delta_p, Backend::Ideal);
        for (const Branch& lb : logical.branches) {
            if (lb.photon == "lost") continue;
            Branch b;
            b.photon = pb.photon;
            b.direction = 'L';  // inverted setup: photons travel leftwards
            b.qubit_outcomes = {pb.qubit_outcomes[0], lb.qubit_outcomes[0]};
            b.probability = pb.probability * lb.probability;
            Vector state = lb.state;
            if (pb.photon == "down") {
                state = apply_single_qubit(state, anc, sigma_x_gate());
                b.corrections.push_back("X(ancilla)");
            }
            if (lb.qubit_outcomes[0] == -1) {
                state = apply_single_qubit(state, anc, sigma_z_gate());
                b.corrections.push_back("Z(ancilla)");
            }
            // Reduced ancilla state.
            Matrix rho = Matrix::Zero(2, 2);
            for (int i = 0; i < dim; ++i) {
                Vector2 col;
                col << state(i), state(i | dim);
                rho += col * col.adjoint();
            }
            const double f = (target.adjoint() * rho * target).value().real();
            res.fidelity += b.probability * f;
            total_prob += b.probability;
            b.state = std::move(state);
            res.outcome.branches.push_back(std::move(b));
        }
    }
    res.fidelity /= total_prob;
    return res;
}

}  // namespace qnet
