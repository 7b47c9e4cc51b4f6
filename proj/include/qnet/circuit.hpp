#ifndef QNET_CIRCUIT_HPP
#define QNET_CIRCUIT_HPP

#include "qnet/qops.hpp"
#include "qnet/types.hpp"

namespace qnet {

inline constexpr double kElementaryCharge = 1.602176634e-19;  // C
inline constexpr double kHBar = 1.054571817e-34;              // J s

// Lumped-element parameters of the two-transmon emitter circuit. Energies
// are stored as angular frequencies (hbar = 1), capacitances in farad.
struct CircuitParams {
    double ej1 = 0.0;  // transmon Josephson energies, rad/s
    double ej2 = 0.0;
    double ejc = 0.0;  // coupler SQUID Josephson energy, rad/s
    double c1 = 0.0;   // transmon capacitances, F
    double c2 = 0.0;
    double cc = 0.0;   // coupler capacitance, F
    double cp1 = 0.0;  // coupling capacitances to the line, F
    double cp2 = 0.0;
    double z0 = 50.0;      // line impedance, Ohm
    double omega0 = 0.0;   // reference frequency, rad/s

    void validate() const;
    bool weak_coupling() const;  // cc << c_k and ejc << ej_k
};

// Charging energy e^2 / (2 C hbar) as an angular frequency.
double charging_energy(double capacitance_f);

struct EffectiveModel {
    double omega1, omega2;    // transition frequencies, rad/s
    double u1, u2;            // anharmonicities
    double j_c, j_i;          // capacitive and inductive hopping parts
    double chi;               // cross-Kerr
    double gamma1, gamma2;    // waveguide coupling rates
    double r1, r2;            // cross-coupling coefficients
    double ec1, ec2;          // charging energies
    bool weak_coupling;

    double j_hop() const { return j_c - j_i; }
};

// Leading-order mapping from circuit to model parameters.
EffectiveModel effective_model(const CircuitParams& cp);

struct RenormalizedModel {
    Operator h2;  // number-conserving effective Hamiltonian on (n_max)^2
    double omega1, omega2;
    double u1, u2;
    double j_hop;
    double chi;
    double min_overlap;  // worst eigenvector overlap used in level assignment
};

// Quartic cosine expansion of the circuit Hamiltonian with counter-rotating
// terms folded in by second-order perturbation theory; model parameters are
// read off the eigenvalues of the low excitation sectors.
RenormalizedModel renormalized_hamiltonian(const CircuitParams& cp, int n_max);

// Adjusts ej1 = ej2 and ejc so that the extracted frequencies equal omega0
// and the extracted hopping equals J_opt for the circuit's r, gamma.
CircuitParams tune_josephson_energies(CircuitParams cp, int n_max,
                                      double rel_tol = 1e-9);

struct InterfaceParams {
    double ejq = 0.0;     // qubit Josephson energy, rad/s
    double cq = 0.0;      // qubit capacitance, F
    double ejc1 = 0.0;    // coupling SQUID energies, rad/s
    double ejc2 = 0.0;
    double ccc1 = 0.0;    // coupling SQUID capacitances, F
    double ccc2 = 0.0;
    double omega_q = 0.0;    // qubit frequency, rad/s
    double phase_qd = kPi;   // omega_q d / v_g

    void validate() const;
};

struct InterfaceModel {
    double v1, v2;          // qubit-GUE cross-Kerr rates
    double jc1, jc2;        // capacitive exchange parts
    double ji1, ji2;        // inductive exchange parts
    double gamma_q1, gamma_q2;  // direct qubit-line rates
    double ecq;
    double balance1, balance2;  // J_C,k - J_I,k residuals
};

InterfaceModel interface_model(const InterfaceParams& ip, const CircuitParams& cp);

// Coupling SQUID energy required for a target cross-Kerr V_k.
double ejc_for_target_v(double v_target, double ec_k, double ec_q, double ej_k,
                        double ej_q);

// gamma_q,k^eff = gamma_q,k + gamma_k ((J_C,k - J_I,k)/(omega0 - omega_q))^2
double effective_qubit_rate(double gamma_qk, double gamma_k, double jck, double jik,
                            double omega0, double omega_q);

struct Subradiance {
    double delta_q;  // 2 sqrt(g1 g2) sin(phase)
    double gamma_q;  // g1 + g2 + 2 sqrt(g1 g2) cos(phase)
};

Subradiance subradiance(double omega_q_phase, double geff1, double geff2);

}  // namespace qnet

#endif
