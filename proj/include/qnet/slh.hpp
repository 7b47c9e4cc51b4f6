#ifndef QNET_SLH_HPP
#define QNET_SLH_HPP

#include <vector>

#include "qnet/gue.hpp"
#include "qnet/network.hpp"
#include "qnet/qops.hpp"
#include "qnet/types.hpp"

namespace qnet {

// Input-output network element (S, L, H): scalar unitary scattering matrix,
// one coupling operator per channel, and the element Hamiltonian. All
// operators live on one shared space; compositions auto-embed elements
// defined on disjoint subsystems.
struct SlhTriplet {
    Eigen::MatrixXcd s;
    std::vector<Operator> couplings;
    Operator hamiltonian;

    int channels() const { return static_cast<int>(s.rows()); }
    void validate(double tol = 1e-12) const;
};

SlhTriplet identity_triplet(int channels = 1);
SlhTriplet phase_triplet(double phi, int channels = 1);
SlhTriplet scattering_triplet(const Eigen::MatrixXcd& s);
SlhTriplet emitter_triplet(const Operator& coupling, const Operator& hamiltonian);

// Series product G2 ◁ G1 (the output of G1 feeds G2):
// (S2 S1, S2 L1 + L2, H1 + H2 - (i/2)(L2† S2 L1 - h.c.)).
SlhTriplet series(const SlhTriplet& g2, const SlhTriplet& g1);

// Concatenation product G2 ⊞ G1: channels of G2 stacked before G1.
SlhTriplet concatenate(const SlhTriplet& g2, const SlhTriplet& g1);

// N emitters on one waveguide, channels (R, L). Couplings interfere with
// phases e^{i phi_tilde (N-n)} (right) and e^{i phi_tilde (n-1)} (left); the
// Hamiltonian acquires the photon-mediated exchange terms.
SlhTriplet compose_gue_chain(const std::vector<GueParams>& gues, double phi_tilde);

struct InterferometerSlh {
    SlhTriplet right;  // 2 channels (down, up), right-propagating modes
    SlhTriplet left;   // 2 channels (down, up), left-propagating modes
};

// Two-line interferometer of nodes and beamsplitters; nodes sit in line
// "up" with half propagation phases on either side. The left chain runs
// through the transposed beamsplitters in reversed order.
InterferometerSlh compose_interferometer(const NetworkSpec& spec);

}  // namespace qnet

#endif
