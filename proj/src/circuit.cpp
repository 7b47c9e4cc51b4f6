#include "qnet/circuit.hpp"

#include <cmath>
#include <functional>

#include "qnet/gue.hpp"

namespace qnet {

void CircuitParams::validate() const {
    if (ej1 <= 0.0 || ej2 <= 0.0 || c1 <= 0.0 || c2 <= 0.0 || omega0 <= 0.0 ||
        z0 <= 0.0) {
        throw std::invalid_argument("CircuitParams: energies and capacitances must be positive");
    }
    if (ejc < 0.0 || cc < 0.0 || cp1 < 0.0 || cp2 < 0.0) {
        throw std::invalid_argument("CircuitParams: coupler values must be >= 0");
    }
}

bool CircuitParams::weak_coupling() const {
    return cc < 0.1 * std::min(c1, c2) && ejc < 0.1 * std::min(ej1, ej2);
}

double charging_energy(double capacitance_f) {
    return kElementaryCharge * kElementaryCharge / (2.0 * capacitance_f * kHBar);
}

EffectiveModel effective_model(const CircuitParams& cp) {
    cp.validate();
    EffectiveModel m;
    const double c1eff = cp.c1 + cp.cp1 + cp.cc;
    const double c2eff = cp.c2 + cp.cp2 + cp.cc;
    m.ec1 = charging_energy(c1eff);
    m.ec2 = charging_energy(c2eff);
    m.omega1 = std::sqrt(8.0 * cp.ej1 * m.ec1);
    m.omega2 = std::sqrt(8.0 * cp.ej2 * m.ec2);
    m.u1 = m.ec1;
    m.u2 = m.ec2;
    m.j_c = cp.omega0 * cp.cc / (2.0 * std::sqrt(c1eff * c2eff));
    m.j_i = cp.omega0 * cp.ejc / (2.0 * std::sqrt(cp.ej1 * cp.ej2));
    m.chi = 2.0 * cp.ejc * std::sqrt(m.ec1 * m.ec2 / (cp.ej1 * cp.ej2));
    const double ez = kElementaryCharge * kElementaryCharge * cp.z0 / kHBar;
    m.gamma1 = std::pow(cp.cp1 / c1eff, 2) * cp.omega0 * ez * std::sqrt(cp.ej1 / (8.0 * m.ec1));
    m.gamma2 = std::pow(cp.cp2 / c2eff, 2) * cp.omega0 * ez * std::sqrt(cp.ej2 / (8.0 * m.ec2));
    m.r1 = cp.cc / c1eff;
    m.r2 = cp.cc / c2eff;
    m.weak_coupling = cp.weak_coupling();
    return m;
}

namespace {

// Quartic expansion of the circuit Hamiltonian on the (n_max)^2 Fock space.
Matrix circuit_hamiltonian(const CircuitParams& cp, int n_max) {
    const SpacePtr space = make_space({{"t1", n_max}, {"t2", n_max}});
    const Operator a_local = truncated_boson(n_max);
    const Matrix a1 = embed_matrix(a_local.mat, *space, {0});
    const Matrix a2 = embed_matrix(a_local.mat, *space, {1});
    const int d = space->total_dim();
    const Matrix id = Matrix::Identity(d, d);

    // Exact 2x2 inverse of the transmon capacitance block.
    const double c11 = cp.c1 + cp.cc + cp.cp1;
    const double c22 = cp.c2 + cp.cc + cp.cp2;
    const double det = c11 * c22 - cp.cc * cp.cc;
    const double inv11 = c22 / det, inv22 = c11 / det, inv12 = cp.cc / det;
    const double ec1 = kElementaryCharge * kElementaryCharge * inv11 / (2.0 * kHBar);
    const double ec2 = kElementaryCharge * kElementaryCharge * inv22 / (2.0 * kHBar);
    const double ec12 = kElementaryCharge * kElementaryCharge * inv12 / (2.0 * kHBar);

    const double eta1 = std::pow(2.0 * ec1 / cp.ej1, 0.25);
    const double eta2 = std::pow(2.0 * ec2 / cp.ej2, 0.25);

    const Matrix x1 = a1 + a1.adjoint();
    const Matrix x2 = a2 + a2.adjoint();
    const Matrix p1 = a1.adjoint() - a1;  // Q_k up to 2ei (E_J/32E_C)^(1/4)
    const Matrix p2 = a2.adjoint() - a2;

    Matrix h = Matrix::Zero(d, d);
    // Charging: (1/2) Q_k^2 (C^-1)_kk -> -sqrt(E_J E_C / 2) (a† - a)^2
    h += -std::sqrt(cp.ej1 * ec1 / 2.0) * p1 * p1;
    h += -std::sqrt(cp.ej2 * ec2 / 2.0) * p2 * p2;
    // Cross charging: Q_1 Q_2 (C^-1)_12
    const double q_cross = -2.0 * ec12 / std::sqrt(2.0) *
                           std::pow(cp.ej1 * cp.ej2 / (ec1 * ec2), 0.25);
    h += q_cross * p1 * p2;

    // Josephson cosines through fourth order.
    auto cos4 = [&](const Matrix& x, double prefactor) -> Matrix {
        const Matrix x2m = x * x;
        return prefactor * (id - 0.5 * x2m + (1.0 / 24.0) * x2m * x2m);
    };
    h -= cos4(eta1 * x1, cp.ej1);
    h -= cos4(eta2 * x2, cp.ej2);
    if (cp.ejc > 0.0) {
        h -= cos4(eta2 * x2 - eta1 * x1, cp.ejc);
    }
    return h;
}

int excitation_of(int index, int n_max) { return index / n_max + index % n_max; }

// Bracketed secant with forced bisection every other step; converges on
// |f| <= f_tol and returns the best point seen.
double bracketed_root(const std::function<double(double)>& f, double a, double b,
                      double f_tol) {
    double fa = f(a), fb = f(b);
    if (fa * fb > 0.0) {
        throw ConvergenceError("bracketed_root: root not bracketed");
    }
    double best_x = std::abs(fa) < std::abs(fb) ? a : b;
    double best_f = std::min(std::abs(fa), std::abs(fb));
    for (int it = 0; it < 200; ++it) {
        if (best_f <= f_tol) return best_x;
        double m = 0.5 * (a + b);
        if (it % 2 == 0 && std::abs(fb - fa) > 1e-300) {
            const double s = b - fb * (b - a) / (fb - fa);
            if (s > std::min(a, b) && s < std::max(a, b)) m = s;
        }
        const double fm = f(m);
        if (std::abs(fm) < best_f) {
            best_f = std::abs(fm);
            best_x = m;
        }
        if (fa * fm <= 0.0) {
            b = m;
            fb = fm;
        } else {
            a = m;
            fa = fm;
        }
    }
    return best_x;
}

}  // namespace

RenormalizedModel renormalized_hamiltonian(const CircuitParams& cp, int n_max) {
    cp.validate();
    if (n_max < 4) {
        throw DimensionError("renormalized_hamiltonian: n_max must be >= 4");
    }
    const Matrix h = circuit_hamiltonian(cp, n_max);
    const int d = n_max * n_max;

    // Split by total excitation number and fold the non-conserving blocks in
    // at second order; the effective Hamiltonian keeps only the conserving
    // part, which makes sector-wise eigenvalue extraction well defined.
    const int max_exc = 2 * (n_max - 1);
    std::vector<Matrix> proj(max_exc + 1, Matrix::Zero(d, d));
    for (int i = 0; i < d; ++i) {
        proj[excitation_of(i, n_max)](i, i) = 1.0;
    }
    Matrix h2 = Matrix::Zero(d, d);
    for (int ne = 0; ne <= max_exc; ++ne) {
        h2 += proj[ne] * h * proj[ne];
    }
    // The quartic expansion couples sectors at most four excitations apart.
    for (int ne = 0; ne <= max_exc; ++ne) {
        for (int np = std::max(0, ne - 4); np <= std::min(max_exc, ne + 4); ++np) {
            if (np == ne) continue;
            const Matrix hop = proj[ne] * h * proj[np];
            h2 -= hop * hop.adjoint() / (cp.omega0 * (np - ne));
        }
    }

    // Eigenvalues per sector, labels assigned by eigenvector overlap with
    // the bare Fock states. Within a sector each eigenvector is used at most
    // once, so degenerate transmons (symmetric/antisymmetric pairs with
    // equal overlaps) still get both levels.
    auto label_index = [&](int i1, int i2) { return i1 * n_max + i2; };
    struct Level {
        double energy = 0.0;
        double overlap = -1.0;
    };
    auto assign_sector = [&](int ne, const std::vector<std::pair<int, int>>& labels) {
        std::vector<int> members;
        for (int i = 0; i < d; ++i) {
            if (excitation_of(i, n_max) == ne) members.push_back(i);
        }
        const int m = static_cast<int>(members.size());
        Matrix block(m, m);
        for (int r = 0; r < m; ++r) {
            for (int c = 0; c < m; ++c) {
                block(r, c) = h2(members[r], members[c]);
            }
        }
        Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (block + block.adjoint()));
        std::vector<int> rows(labels.size());
        for (size_t l = 0; l < labels.size(); ++l) {
            const int target = label_index(labels[l].first, labels[l].second);
            for (int r = 0; r < m; ++r) {
                if (members[r] == target) rows[l] = r;
            }
        }
        std::vector<Level> out(labels.size());
        // Ambiguity flag: some eigenvector must resemble each label.
        for (size_t l = 0; l < labels.size(); ++l) {
            for (int k = 0; k < m; ++k) {
                out[l].overlap =
                    std::max(out[l].overlap, std::abs(es.eigenvectors()(rows[l], k)));
            }
        }
        std::vector<bool> used_vec(m, false), used_label(labels.size(), false);
        for (size_t pick = 0; pick < labels.size(); ++pick) {
            double best = -1.0;
            int best_l = -1, best_k = -1;
            for (size_t l = 0; l < labels.size(); ++l) {
                if (used_label[l]) continue;
                for (int k = 0; k < m; ++k) {
                    if (used_vec[k]) continue;
                    const double ov = std::abs(es.eigenvectors()(rows[l], k));
                    if (ov > best) {
                        best = ov;
                        best_l = static_cast<int>(l);
                        best_k = k;
                    }
                }
            }
            used_label[best_l] = true;
            used_vec[best_k] = true;
            out[best_l].energy = es.eigenvalues()(best_k);
        }
        return out;
    };

    const Level e00 = assign_sector(0, {{0, 0}})[0];
    const auto sector2 = assign_sector(2, {{2, 0}, {1, 1}, {0, 2}});
    const Level e20 = sector2[0], e11 = sector2[1], e02 = sector2[2];

    // One-excitation quantities come from the bare-basis block directly:
    // for degenerate transmons the sector eigenvalues only determine the
    // pair up to +-J, while the model coefficients are the matrix elements.
    // The pair sum d10 + d01 equals the sector trace, so the cross-Kerr
    // formula below is the eigenvalue combination as well.
    const double d00 = h2(label_index(0, 0), label_index(0, 0)).real();
    const double d10 = h2(label_index(1, 0), label_index(1, 0)).real();
    const double d01 = h2(label_index(0, 1), label_index(0, 1)).real();

    RenormalizedModel out;
    out.h2 = {make_space({{"t1", n_max}, {"t2", n_max}}), h2};
    out.omega1 = d10 - d00;
    out.omega2 = d01 - d00;
    out.u1 = 2.0 * d10 - e20.energy - d00;
    out.u2 = 2.0 * d01 - e02.energy - d00;
    out.chi = d10 + d01 - e11.energy - d00;
    out.j_hop = h2(label_index(1, 0), label_index(0, 1)).real();
    out.min_overlap = std::min({e00.overlap, e11.overlap, e20.overlap, e02.overlap});
    if (out.min_overlap < 0.7) {
        throw ConvergenceError(
            "renormalized_hamiltonian: level assignment ambiguous (overlap " +
            std::to_string(out.min_overlap) + ")");
    }
    return out;
}

CircuitParams tune_josephson_energies(CircuitParams cp, int n_max, double rel_tol) {
    cp.validate();
    const double ec_est = charging_energy(cp.c1 + cp.cp1 + cp.cc);
    double ej = cp.omega0 * cp.omega0 / (8.0 * ec_est);  // harmonic estimate

    for (int round = 0; round < 40; ++round) {
        // Frequency condition at fixed coupler energy.
        auto omega_err = [&](double e) {
            CircuitParams trial = cp;
            trial.ej1 = trial.ej2 = e;
            return renormalized_hamiltonian(trial, n_max).omega1 - cp.omega0;
        };
        ej = bracketed_root(omega_err, 0.5 * ej, 3.0 * ej, 0.02 * rel_tol * cp.omega0);
        cp.ej1 = cp.ej2 = ej;

        // Hopping condition at fixed transmon energy; the target J_opt moves
        // with gamma(E_J), so it is re-evaluated each round.
        const EffectiveModel em = effective_model(cp);
        const double j_target =
            optimal_params(0.5 * (em.r1 + em.r2), 0.5 * (em.gamma1 + em.gamma2)).j_opt;
        auto j_err = [&](double e) {
            CircuitParams trial = cp;
            trial.ejc = e;
            return renormalized_hamiltonian(trial, n_max).j_hop - j_target;
        };
        cp.ejc = bracketed_root(j_err, 0.0, 0.8 * ej,
                                0.02 * rel_tol * std::abs(j_target));

        const RenormalizedModel check = renormalized_hamiltonian(cp, n_max);
        const double res_w = std::abs(check.omega1 - cp.omega0) / cp.omega0;
        const double res_j = std::abs(check.j_hop - j_target) /
                             std::max(std::abs(j_target), 1e-12 * cp.omega0);
        if (res_w < rel_tol && res_j < rel_tol) {
            return cp;
        }
    }
    throw ConvergenceError("tune_josephson_energies: joint tolerance not reached");
}

void InterfaceParams::validate() const {
    if (ejq <= 0.0 || cq <= 0.0 || omega_q <= 0.0) {
        throw std::invalid_argument("InterfaceParams: qubit values must be positive");
    }
    if (ejc1 < 0.0 || ejc2 < 0.0 || ccc1 < 0.0 || ccc2 < 0.0) {
        throw std::invalid_argument("InterfaceParams: coupler values must be >= 0");
    }
}

InterfaceModel interface_model(const InterfaceParams& ip, const CircuitParams& cp) {
    ip.validate();
    const EffectiveModel em = effective_model(cp);
    const double cqeff = ip.cq + ip.ccc1 + ip.ccc2;
    const double c1eff = cp.c1 + cp.cp1 + cp.cc;
    const double c2eff = cp.c2 + cp.cp2 + cp.cc;

    InterfaceModel m;
    m.ecq = charging_energy(cqeff);
    m.v1 = 2.0 * ip.ejc1 * std::sqrt(em.ec1 * m.ecq / (cp.ej1 * ip.ejq));
    m.v2 = 2.0 * ip.ejc2 * std::sqrt(em.ec2 * m.ecq / (cp.ej2 * ip.ejq));
    const double wq = std::sqrt(cp.omega0 * ip.omega_q) / 2.0;
    m.jc1 = wq * ip.ccc1 / std::sqrt(cqeff * c1eff);
    m.jc2 = wq * ip.ccc2 / std::sqrt(cqeff * c2eff);
    m.ji1 = wq * ip.ejc1 / std::sqrt(ip.ejq * cp.ej1);
    m.ji2 = wq * ip.ejc2 / std::sqrt(ip.ejq * cp.ej2);
    m.gamma_q1 = em.gamma1 * (ip.omega_q / cp.omega0) *
                 std::sqrt(em.ec1 * ip.ejq / (cp.ej1 * m.ecq)) *
                 std::pow(ip.ccc1 / ip.cq, 2);
    m.gamma_q2 = em.gamma2 * (ip.omega_q / cp.omega0) *
                 std::sqrt(em.ec2 * ip.ejq / (cp.ej2 * m.ecq)) *
                 std::pow(ip.ccc2 / ip.cq, 2);
    m.balance1 = m.jc1 - m.ji1;
    m.balance2 = m.jc2 - m.ji2;
    return m;
}

double ejc_for_target_v(double v_target, double ec_k, double ec_q, double ej_k,
                        double ej_q) {
    return v_target / (2.0 * std::sqrt(ec_k * ec_q / (ej_k * ej_q)));
}

double effective_qubit_rate(double gamma_qk, double gamma_k, double jck, double jik,
                            double omega0, double omega_q) {
    const double ratio = (jck - jik) / (omega0 - omega_q);
    return gamma_qk + gamma_k * ratio * ratio;
}

Subradiance subradiance(double omega_q_phase, double geff1, double geff2) {
    if (geff1 < 0.0 || geff2 < 0.0) {
        throw std::invalid_argument("subradiance: rates must be >= 0");
    }
    const double g = 2.0 * std::sqrt(geff1 * geff2);
    return {g * std::sin(omega_q_phase), geff1 + geff2 + g * std::cos(omega_q_phase)};
}

}  // namespace qnet
