#ifndef QNET_PROTOCOLS_HPP
#define QNET_PROTOCOLS_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qnet/scatter.hpp"
#include "qnet/types.hpp"

namespace qnet {

enum class Backend { Ideal, General };

// ---------------------------------------------------------------------------
// Qubit-register helpers. Registers are state vectors over n qubits with
// qubit k stored in bit k of the index; scattering-network node k acts on
// the register qubit node_qubits[k].

Vector plus_state(int n_qubits);
Vector apply_single_qubit(const Vector& psi, int qubit, const Matrix2& u);
double state_fidelity(const Vector& a, const Vector& b);  // |<a|b>|^2

// Pauli string: product of sigma_z over z_mask and sigma_x over x_mask
// (disjoint supports here; y components are never needed).
struct PauliString {
    std::uint64_t z_mask = 0;
    std::uint64_t x_mask = 0;

    std::uint64_t support() const { return z_mask | x_mask; }
};

Vector apply_string(const Vector& psi, const PauliString& s);
Complex string_expectation(const Vector& psi, const PauliString& s);

// Post-scattering register amplitudes per (direction, output line), for a
// photon injected in `input_line`; unnormalized (norms give probabilities).
struct ScatterBranches {
    std::array<std::array<Vector, 2>, 2> amp;  // [direction R=0,L=1][line]

    double probability(int direction, int line) const;
};

ScatterBranches apply_scattering(const ScatteringResult& sc, int input_line,
                                 const std::vector<int>& node_qubits,
                                 const Vector& psi);

// ---------------------------------------------------------------------------
// Protocol bookkeeping (spec'd outcome record).

struct Branch {
    std::string photon;  // "up", "down" or "lost"
    char direction = 'R';
    std::vector<int> qubit_outcomes;
    double probability = 0.0;
    Vector state;
    std::vector<std::string> corrections;
};

struct ProtocolOutcome {
    std::vector<Branch> branches;

    double probability_sum() const;
};

// ---------------------------------------------------------------------------
// Network builders. All protocol networks put Hadamard splitters at the
// ends and compensate the i^|I| of the resonant sigma^n = i sigma_z gates
// with a phase plate in line "up", so that a resonant photon implements
// exact controlled-Z gates.

struct ProtocolNetworkOptions {
    double r = 0.0;
    double gamma = 1.0;
    double v_over_gamma_r = 1.0;
    double phi_tilde = 0.0;
    bool drop_spectators = true;       // remove far-detuned nodes exactly
    double far_detuning_factor = 1e3;  // used when spectators are kept
    bool compensate_phase = true;
    Complex node_plate{0.0, -1.0};     // up-line plate after each resonant node
    bool up_line_pi_plate = true;      // output-phase redefinition: up <-> +1
    bool hadamard_everywhere = false;  // cluster/state-transfer wiring
};

struct ProtocolNetwork {
    NetworkSpec spec;
    std::vector<int> node_qubits;
    int n_qubits = 0;
    double gamma_r = 0.0;
};

ProtocolNetwork make_protocol_network(int n_qubits, const std::vector<int>& resonant,
                                      const ProtocolNetworkOptions& opts = {});

ScatteringResult scatter_network(const ProtocolNetwork& net, double delta_p,
                                 Backend backend);

// ---------------------------------------------------------------------------
// Parity / stabilizer measurement (photon in line "down", Hadamard ends).

double parity_fidelity(const ProtocolNetwork& net, const std::vector<int>& subset,
                       double delta_p, Backend backend);

// Convenience: n_G resonant qubits out of n_qubits with ideal parameters.
double parity_fidelity_ideal_setup(int n_qubits, const std::vector<int>& subset,
                                   double delta_p, Backend backend,
                                   const ProtocolNetworkOptions& opts = {});

// Projective string measurement of a +-1 Pauli observable via one photon,
// with basis rotations on the x-support. Each branch carries the photon
// line, the outcome (+1/-1) in qubit_outcomes[0], and the projected state.
ProtocolOutcome measure_string(const Vector& psi, int n_qubits, const PauliString& s,
                               double delta_p, Backend backend,
                               const ProtocolNetworkOptions& opts = {});

// ---------------------------------------------------------------------------
// Quantum state transfer (Fig.-7 circuit) and the heralded-retry variant.

struct QstOptions {
    int n_qubits = 2;  // sender = qubit 0, receiver = qubit n-1
    Backend backend = Backend::Ideal;
    ProtocolNetworkOptions network = {};
};

struct QstResult {
    double fidelity;  // average over branches against the sent state
    ProtocolOutcome outcome;
};

QstResult run_state_transfer(Complex c0, Complex c1, double delta_p,
                             const QstOptions& opts = {});

// SM closed form F_QST(delta_p).
double qst_fidelity_closed_form(double delta_p, double gamma_r);

// Entanglement fidelity of the transfer channel (maximally entangled
// ancilla construction); equals the closed form for the two-node circuit.
double qst_entanglement_fidelity(double delta_p, const QstOptions& opts = {});

struct RetryResult {
    double fidelity;
    int trials;
    ProtocolOutcome outcome;  // the successful branch path
};

// Loss-tolerant transfer with a backup qubit: on photon loss the sender is
// measured, the entangled pair is rebuilt, and the protocol retries.
RetryResult run_heralded_retry(double loss_probability, Complex c0, Complex c1,
                               std::uint64_t seed, double delta_p = 0.0);

// ---------------------------------------------------------------------------
// Photon detector (Ramsey scheme at Delta^n = -gamma_r/2, V = gamma_r).

struct DetectorResponse {
    double p_det;
    Complex click_factor;    // spectral amplitude factor upon detection
    Complex noclick_factor;  // and upon a failed detection
};

DetectorResponse photon_detector(double delta_p, double gamma_r);

// ---------------------------------------------------------------------------
// Pulse-averaged fidelities.

struct PulseSpec {
    double sigma_t = 0.0;
    double duration = 0.0;            // truncated-Gaussian temporal extent T
    std::vector<double> deltas;       // or sampled spectral amplitudes
    std::vector<double> amplitudes;

    bool sampled() const { return !deltas.empty(); }
    void validate() const;

    static PulseSpec truncated_gaussian(double sigma_t, double duration);
    static PulseSpec sampled(std::vector<double> deltas, std::vector<double> amps);
};

// integral |f(delta)|^2 F(delta) d delta with f the Fourier transform of
// the pulse; normalized so a flat F integrates to itself exactly.
double pulse_average(const std::function<double(double)>& fidelity,
                     const PulseSpec& pulse, double gamma_r, double rel_tol = 1e-7);

// ---------------------------------------------------------------------------
// GHZ / 1D cluster preparation.

struct PreparationResult {
    double fidelity_up;
    double fidelity_down;
    ProtocolOutcome outcome;
};

PreparationResult prepare_ghz(int n_qubits, double delta_p,
                              Backend backend = Backend::Ideal,
                              const ProtocolNetworkOptions& opts = {});

PreparationResult prepare_cluster_1d(int n_qubits, double delta_p,
                                     Backend backend = Backend::Ideal,
                                     const ProtocolNetworkOptions& opts = {});

Vector ghz_state(int n_qubits);
Vector cluster_state_1d(int n_qubits);

// ---------------------------------------------------------------------------
// Toric code.

struct ToricLattice {
    int n_side = 2;
    std::vector<std::vector<int>> plaquettes;  // 4 edge qubits each
    std::vector<std::vector<int>> vertices;
    std::vector<int> logical_z1, logical_z2;   // sigma_z strings (site paths)
    std::vector<int> logical_x1, logical_x2;   // sigma_x strings (dual paths)

    int n_qubits() const { return 2 * n_side * n_side; }
    int h_edge(int x, int y) const;
    int v_edge(int x, int y) const;
    void validate() const;

    static ToricLattice square(int n_side);
};

std::uint64_t edge_mask(const std::vector<int>& edges);

// Reference code state |Phi_1> (all stabilizers +1, logical Z_1 = Z_2 = +1
// sector built from projectors on the all-plus state).
Vector toric_code_state(const ToricLattice& lat);

struct ToricGenerateResult {
    ProtocolOutcome outcome;  // one branch per measurement record
    std::vector<std::vector<int>> plaquette_records;
    std::vector<std::vector<int>> correction_edges;
};

// Sequential A_p measurements from the all-plus state with sigma_x
// corrections; `enumerate_all` follows every outcome branch, otherwise one
// branch is sampled with the seed.
ToricGenerateResult toric_generate(const ToricLattice& lat, std::uint64_t seed,
                                   double delta_p, bool enumerate_all = true,
                                   Backend backend = Backend::Ideal);

enum class LogicalOp { Z1, Z2, X1, X2 };

PauliString logical_string(const ToricLattice& lat, LogicalOp op);
Vector toric_apply_logical(const ToricLattice& lat, const Vector& psi, LogicalOp op);

// Joint code-space overlap sum_beta |<Phi_beta|psi>|^2.
double code_space_overlap(const ToricLattice& lat, const Vector& psi);

ProtocolOutcome toric_measure_logical(const ToricLattice& lat, const Vector& psi,
                                      LogicalOp op, double delta_p,
                                      Backend backend = Backend::Ideal);

// e^{i phi S} on the register via an ancilla node (register qubit index
// n_qubits) and one photon scattering; all four branches end in the same
// state up to a global phase.
ProtocolOutcome exp_string(const Vector& psi, int n_qubits, const PauliString& s,
                           double phi, double delta_p,
                           Backend backend = Backend::Ideal);

struct WriteInResult {
    double fidelity;  // against c0 |Phi_1> + c1 |Phi_2>
    ProtocolOutcome outcome;
    Vector memory_state;
};

WriteInResult toric_write_in(const ToricLattice& lat, Complex c0, Complex c1,
                             double delta_p);

struct ReadOutResult {
    double fidelity;  // ancilla against the encoded (c0, c1)
    ProtocolOutcome outcome;
};

// Inverse of write-in: the logical superposition is carried back to the
// ancilla with a left-propagating photon through the mirrored setup.
ReadOutResult toric_read_out(const ToricLattice& lat, const Vector& memory,
                             Complex c0, Complex c1, double delta_p);

}  // namespace qnet

#endif
