#ifndef QNET_SCATTER_HPP
#define QNET_SCATTER_HPP

#include <cstdint>
#include <vector>

#include "qnet/network.hpp"
#include "qnet/types.hpp"

namespace qnet {

// t(x) = (2ix + gamma_r) / (2ix - gamma_r), the unit-modulus transmission
// phase of a unidirectional node.
Complex transmission_phase(double x, double gamma_r);

struct NodeAmplitudes {
    Complex r0, t0, r1, t1;  // reflection/transmission per qubit state
};

// Closed-form single-node amplitudes; requires symmetric couplings
// (gamma_1 = gamma_2, r_1 = r_2). Asymmetric nodes go through
// general_scattering.
NodeAmplitudes node_amplitudes(const NodeParams& node, double delta_p);

// Diagonal qubit operator t(Delta_n + delta_p)|0><0| + t(Delta_n + delta_p
// + V)|1><1| of the unidirectional node.
Matrix2 ideal_phase_gate(const NodeParams& node, double delta_p);

// Frequency-resolved scattering amplitudes of the two-line network at one
// photon detuning, diagonal in the qubit bitstrings. Entry (j, i) of
// right[s] is the amplitude for input line i -> right-moving output line j
// with the qubits in bitstring s (bit k = qubit of node k+1). The
// e^{i phi_tilde N} bookkeeping phase is stored separately.
struct ScatteringResult {
    double delta_p = 0.0;
    int n_nodes = 0;
    Complex global_phase{1.0, 0.0};
    std::vector<Matrix2> right;
    std::vector<Matrix2> left;

    int n_bitstrings() const { return 1 << n_nodes; }
    // max over (input line, bitstring) of |total outgoing probability - 1|
    double unitarity_defect() const;
};

// Factorized form: per-node phase gates threaded through the beamsplitters.
// Every node must satisfy the unidirectional conditions.
ScatteringResult ideal_scattering(const NetworkSpec& spec, double delta_p);

// Resolvent form valid for arbitrary node parameters: per qubit bitstring,
// the 2N-dimensional single-excitation system (i delta_p + F)^{-1} is solved
// with the interferometer's collective input/output vectors.
ScatteringResult general_scattering(const NetworkSpec& spec, double delta_p);

}  // namespace qnet

#endif
