#ifndef QNET_GUE_HPP
#define QNET_GUE_HPP

#include <cstdint>
#include <utility>

#include "qnet/qops.hpp"
#include "qnet/types.hpp"

namespace qnet {

// Physical parameters of one giant unidirectional emitter: two anharmonic
// modes coupled to each other (J, chi) and to a waveguide at two points
// (gamma_k, r_k) separated by the propagation phase phi.
struct GueParams {
    double delta1 = 0.0;  // detunings Delta_k = omega_0 - omega_k, rad/s
    double delta2 = 0.0;
    double u1 = 0.0;  // anharmonicities, rad/s
    double u2 = 0.0;
    double j_hop = 0.0;  // exchange rate J, rad/s
    double chi = 0.0;    // cross-Kerr, rad/s
    double gamma1 = 1.0;  // coupling rates, rad/s
    double gamma2 = 1.0;
    double r1 = 0.0;  // dimensionless cross-couplings
    double r2 = 0.0;
    double phi = kPi / 2;  // propagation phase between the coupling points
    int n_max = 3;         // Fock cutoff per mode

    void validate() const;

    // Symmetric emitter with J, phi and Delta_k at their unidirectional
    // values for the given r and gamma; `delta` is the remaining common
    // detuning of the R/L transitions.
    static GueParams unidirectional(double r, double gamma, double delta = 0.0,
                                    int n_max = 3, double u = 0.0, double chi = 0.0);
};

struct OptimalParams {
    double phi_opt;      // pi/2 + 2 arctan(r)
    double j_opt;        // -gamma (1 + r^2) sin(phi_opt)
    double gamma_r;      // 2 gamma (1 + 2 r cos(phi_opt) + r^2)
    double delta_shift;  // 2 r gamma sin(phi_opt)
};

OptimalParams optimal_params(double r, double gamma);

struct CouplingOps {
    Operator l1, l2, l_right, l_left;
};

// H_eff in the frame rotating at omega_0, on the n_max (x) n_max space with
// subsystem labels "t1", "t2".
Operator build_hamiltonian(const GueParams& p);
CouplingOps build_coupling_ops(const GueParams& p);

// Single-excitation blocks in the basis (a1†|G>, a2†|G>). These close under
// the non-Hermitian evolution and are shared with the scattering module.
Matrix2 single_excitation_hamiltonian(const GueParams& p);
RowVector2 coupling_row_right(const GueParams& p);
RowVector2 coupling_row_left(const GueParams& p);

struct DirectionalityResult {
    double beta_right;
    double beta_left;
    double survival;  // |psi(T_max)|^2, must be negligible
};

DirectionalityResult directionality_detail(const GueParams& p);

// Probability that the photon emitted from |R> propagates to the right.
double directionality(const GueParams& p);

struct AveragedDirectionality {
    double mean;
    double standard_error;
};

// Monte-Carlo average over uniform draws of (r_1, r_2, gamma_1, gamma_2)
// with the given means and standard deviations; J and phi are held at the
// optimum of the mean parameters, Delta_k = 0.
AveragedDirectionality averaged_directionality(double mean_r, double mean_gamma,
                                               double sd_r, double sd_gamma,
                                               int samples, std::uint64_t seed);

// Uniform variate on [mean - sqrt(3) sd, mean + sqrt(3) sd] from one 64-bit
// word; used instead of std::uniform_real_distribution so that sweeps are
// reproducible across standard libraries.
double uniform_from_bits(std::uint64_t bits, double mean, double sd);
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace qnet

#endif
