#ifndef QNET_DYNAMICS_HPP
#define QNET_DYNAMICS_HPP

#include <functional>
#include <vector>

#include "qnet/gue.hpp"
#include "qnet/ode.hpp"
#include "qnet/qops.hpp"
#include "qnet/types.hpp"

namespace qnet {

// Coherent drive of the rightward channel. Either a constant Rabi frequency
// Omega, or a sampled amplitude table alpha(t) with Omega(t) = sqrt(gamma_r)
// alpha(t); the table is linearly interpolated and zero outside its range.
struct DriveSpec {
    double omega_rabi = 0.0;
    std::vector<double> times;
    std::vector<double> alphas;

    bool sampled() const { return !times.empty(); }
    bool constant() const { return times.empty(); }
    double alpha(double t, double gamma_r) const;

    static DriveSpec constant_rabi(double omega) {
        DriveSpec d;
        d.omega_rabi = omega;
        return d;
    }
    static DriveSpec sampled_alpha(std::vector<double> ts, std::vector<double> amps);
};

struct NoiseSpec {
    double gamma_phi = 0.0;  // dephasing rate, enters as 2 gamma_phi D[a†a]
    double gamma_nr = 0.0;   // non-radiative decay, gamma_nr D[a]

    void validate() const;
};

// Assembled right-hand side of the driven master equation. `jumps` holds
// every jump operator pre-scaled by the square root of its rate; h_nh0 is
// the drive-free non-Hermitian Hamiltonian h0 - (i/2) sum J†J.
struct MasterEquation {
    SpacePtr space;
    Matrix h0;
    Matrix l_right;
    std::vector<Matrix> jumps;
    DriveSpec drive;
    double gamma_r = 0.0;
    Matrix h_nh0;

    int dim() const { return static_cast<int>(h0.rows()); }
    void finalize();
    Matrix rhs(const Matrix& rho, double t) const;
};

// Per-subsystem noise jump operators: sqrt(2 gamma_phi) a†a and
// sqrt(gamma_nr) a on every subsystem of `space`.
std::vector<Matrix> noise_jumps(const SpacePtr& space, const NoiseSpec& noise);

MasterEquation make_master_equation(const Operator& h_eff, const Operator& l_right,
                                    const Operator& l_left, const DriveSpec& drive,
                                    const NoiseSpec& noise, double gamma_r);

// One evaluation of d rho / dt for the Eq.-of-motion with drive and noise;
// jump_ops are the radiative channels (L_R, L_L).
Matrix liouvillian_apply(const Operator& h_eff, const std::vector<Operator>& jump_ops,
                         const DriveSpec& drive, const NoiseSpec& noise,
                         const DensityMatrix& rho, const Operator& l_right,
                         double gamma_r, double t = 0.0);

struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<Complex>> observables;  // [sample][observable]
    double max_trace_drift = 0.0;
    DensityMatrix final_state;
};

Trajectory evolve(const MasterEquation& me, const DensityMatrix& rho0,
                  const std::vector<double>& t_grid,
                  const std::vector<Operator>& observables,
                  const OdeOptions& opts = {.rtol = 1e-8, .atol = 1e-10});

struct SteadyStateOptions {
    int null_space_max_dim = 12;
    double residual_tol = 1e-9;
    double horizon_factor = 200.0;
    double max_horizon_factor = 1600.0;
};

// Stationary state of a time-independent generator: null-space solve of the
// vectorized Liouvillian for small dimensions, long-time integration with a
// residual re-check otherwise.
DensityMatrix steady_state(const MasterEquation& me, const SteadyStateOptions& opts = {});

// vec(rho) is column-major; L[rho] = -i (H_nh rho - rho H_nh†) + sum J rho J†.
Matrix liouvillian_superoperator(const Matrix& h_nh, const std::vector<Matrix>& jumps);

Matrix null_space_density(const Matrix& superop, int dim, double* gap = nullptr);

// Reduced two-level chain of N unidirectional emitters, expressed in the
// dressed frame where sigma_+^n = e^{i phi_tilde n} |R><G| absorbs the
// propagation phases.
struct TwoLevelChain {
    int n_emitters = 1;
    double omega_rabi = 0.0;
    double delta = 0.0;
    double gamma_r = 1.0;
    double phi_tilde = 0.0;

    void validate() const;
};

struct CascadedModel {
    SpacePtr space;
    Operator h_nh;     // includes the -(i/2) L_R† L_R damping
    Operator l_right;  // sqrt(gamma_r) sum_n sigma_-^n
};

CascadedModel cascaded_two_level(const TwoLevelChain& chain);

Matrix cascaded_rhs(const CascadedModel& m, const Matrix& rho,
                    const std::vector<Matrix>& extra_jumps = {});

DensityMatrix cascaded_steady_state(const CascadedModel& m,
                                    const std::vector<Matrix>& extra_jumps = {},
                                    const SteadyStateOptions& opts = {
                                        .null_space_max_dim = 32,
                                    });

// |D> ∝ |GG> - 2 sqrt(2) (Omega/gamma_r) |S>, the driven-dimer dark state.
StateVector dimer_state(double omega_rabi, double gamma_r);

}  // namespace qnet

#endif
