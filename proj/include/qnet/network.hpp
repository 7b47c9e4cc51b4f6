#ifndef QNET_NETWORK_HPP
#define QNET_NETWORK_HPP

#include <vector>

#include "qnet/gue.hpp"
#include "qnet/types.hpp"

namespace qnet {

// One node of the Fig.-6-style interferometer: a stationary qubit coupled to
// its emitter through cross-Kerr shifts V_k. The anharmonicities in `gue`
// are irrelevant for single-photon scattering and left at zero.
struct NodeParams {
    GueParams gue;
    double v1 = 0.0;
    double v2 = 0.0;
    double delta_n = 0.0;  // node detuning entering t(Delta_n + delta_p)

    void validate() const;
    bool symmetric_couplings(double tol = 1e-12) const;
    bool is_unidirectional(double tol = 1e-9) const;
    double gamma_r() const;

    // Node at the unidirectional working point with Delta_k set per the
    // eigenstate condition and V_1 = V_2 = v.
    static NodeParams unidirectional(double delta_n, double r, double gamma, double v,
                                     int n_max = 2);
};

// Two-line network: nodes couple to line "up"; beamsplitters U_0..U_N mix
// the lines between scattering regions. Photon-line basis order is
// (down, up) everywhere.
struct NetworkSpec {
    std::vector<NodeParams> nodes;
    std::vector<Matrix2> beamsplitters;
    double phi_tilde = 0.0;

    int n_nodes() const { return static_cast<int>(nodes.size()); }
    void validate(double tol = 1e-12) const;
};

Matrix2 hadamard_splitter();
Matrix2 identity_splitter();
Matrix2 up_phase_plate(Complex phase);

}  // namespace qnet

#endif
