#include "qnet/gue.hpp"

#include <cmath>

#include "qnet/ode.hpp"

namespace qnet {

void GueParams::validate() const {
    if (gamma1 < 0.0 || gamma2 < 0.0) {
        throw std::invalid_argument("GueParams: gamma_k must be >= 0");
    }
    if (u1 < 0.0 || u2 < 0.0 || chi < 0.0) {
        throw std::invalid_argument("GueParams: u_k and chi must be >= 0");
    }
    if (n_max < 2) {
        throw DimensionError("GueParams: n_max must be >= 2");
    }
    if (std::abs(r1) >= 1.0 || std::abs(r2) >= 1.0) {
        throw std::invalid_argument("GueParams: |r_k| must be < 1");
    }
}

GueParams GueParams::unidirectional(double r, double gamma, double delta, int n_max,
                                    double u, double chi) {
    const OptimalParams opt = optimal_params(r, gamma);
    GueParams p;
    p.delta1 = p.delta2 = delta + opt.delta_shift;
    p.u1 = p.u2 = u;
    p.chi = chi;
    p.j_hop = opt.j_opt;
    p.gamma1 = p.gamma2 = gamma;
    p.r1 = p.r2 = r;
    p.phi = opt.phi_opt;
    p.n_max = n_max;
    return p;
}

OptimalParams optimal_params(double r, double gamma) {
    if (std::abs(r) >= 1.0 || gamma <= 0.0) {
        throw std::invalid_argument("optimal_params: require |r| < 1 and gamma > 0");
    }
    OptimalParams o;
    o.phi_opt = kPi / 2 + 2.0 * std::atan(r);
    o.j_opt = -gamma * (1.0 + r * r) * std::sin(o.phi_opt);
    o.gamma_r = 2.0 * gamma * (1.0 + 2.0 * r * std::cos(o.phi_opt) + r * r);
    o.delta_shift = 2.0 * r * gamma * std::sin(o.phi_opt);
    return o;
}

Operator build_hamiltonian(const GueParams& p) {
    p.validate();
    const SpacePtr space = make_space({{"t1", p.n_max}, {"t2", p.n_max}});
    const Operator a_local = truncated_boson(p.n_max);
    const Operator a1 = embed(a_local, space, "t1");
    const Operator a2 = embed(a_local, space, "t2");
    const Matrix n1 = a1.mat.adjoint() * a1.mat;
    const Matrix n2 = a2.mat.adjoint() * a2.mat;

    Matrix h = -p.delta1 * n1 - p.delta2 * n2;
    h -= 0.5 * p.u1 * a1.mat.adjoint() * a1.mat.adjoint() * a1.mat * a1.mat;
    h -= 0.5 * p.u2 * a2.mat.adjoint() * a2.mat.adjoint() * a2.mat * a2.mat;
    h -= p.chi * n1 * n2;
    h += p.j_hop * (a1.mat.adjoint() * a2.mat + a2.mat.adjoint() * a1.mat);

    const Matrix l1 = std::sqrt(p.gamma1) * (a1.mat + p.r2 * a2.mat);
    const Matrix l2 = std::sqrt(p.gamma2) * (a2.mat + p.r1 * a1.mat);
    h += std::sin(p.phi) * (l2.adjoint() * l1 + l1.adjoint() * l2);
    return {space, h};
}

CouplingOps build_coupling_ops(const GueParams& p) {
    p.validate();
    const SpacePtr space = make_space({{"t1", p.n_max}, {"t2", p.n_max}});
    const Operator a_local = truncated_boson(p.n_max);
    const Operator a1 = embed(a_local, space, "t1");
    const Operator a2 = embed(a_local, space, "t2");
    const Complex phase = std::exp(kImag * p.phi);
    Operator l1{space, std::sqrt(p.gamma1) * (a1.mat + p.r2 * a2.mat)};
    Operator l2{space, std::sqrt(p.gamma2) * (a2.mat + p.r1 * a1.mat)};
    Operator lr{space, phase * l1.mat + l2.mat};
    Operator ll{space, l1.mat + phase * l2.mat};
    return {l1, l2, lr, ll};
}

Matrix2 single_excitation_hamiltonian(const GueParams& p) {
    Matrix2 h;
    h << -p.delta1, p.j_hop, p.j_hop, -p.delta2;
    const double g12 = std::sqrt(p.gamma1 * p.gamma2);
    const double s = std::sin(p.phi);
    Matrix2 exch;
    exch << 2.0 * p.r1, 1.0 + p.r1 * p.r2, 1.0 + p.r1 * p.r2, 2.0 * p.r2;
    h += s * g12 * exch;
    return h;
}

RowVector2 coupling_row_right(const GueParams& p) {
    const Complex phase = std::exp(kImag * p.phi);
    RowVector2 row;
    row << phase * std::sqrt(p.gamma1) + p.r1 * std::sqrt(p.gamma2),
        phase * p.r2 * std::sqrt(p.gamma1) + std::sqrt(p.gamma2);
    return row;
}

RowVector2 coupling_row_left(const GueParams& p) {
    const Complex phase = std::exp(kImag * p.phi);
    RowVector2 row;
    row << std::sqrt(p.gamma1) + phase * p.r1 * std::sqrt(p.gamma2),
        p.r2 * std::sqrt(p.gamma1) + phase * std::sqrt(p.gamma2);
    return row;
}

DirectionalityResult directionality_detail(const GueParams& p) {
    p.validate();
    const Matrix2 h = single_excitation_hamiltonian(p);
    const RowVector2 lr = coupling_row_right(p);
    const RowVector2 ll = coupling_row_left(p);
    Matrix2 gen = -kImag * h;
    gen -= 0.5 * (lr.adjoint() * lr + ll.adjoint() * ll);

    // y = (psi_1, psi_2, B_R, B_L); the emitted-flux integrals ride along in
    // the adaptive step so the quadrature inherits the integrator tolerance.
    Vector y0(4);
    y0 << Complex(0.0, -1.0) / std::sqrt(2.0), Complex(1.0, 0.0) / std::sqrt(2.0), 0.0,
        0.0;
    auto rhs = [&](double, const Vector& y) {
        Vector dy(4);
        const Vector2 psi = y.head<2>();
        const Vector2 dpsi = gen * psi;
        dy(0) = dpsi(0);
        dy(1) = dpsi(1);
        dy(2) = std::norm((lr * psi).value());
        dy(3) = std::norm((ll * psi).value());
        return dy;
    };

    const double t_max = 50.0 / std::min(p.gamma1, p.gamma2);
    OdeOptions opts;
    opts.rtol = 1e-10;
    opts.atol = 1e-10;
    const Vector y = integrate_ode(rhs, y0, 0.0, t_max, opts);
    DirectionalityResult res;
    res.beta_right = y(2).real();
    res.beta_left = y(3).real();
    res.survival = std::norm(y(0)) + std::norm(y(1));
    if (res.survival > 1e-8) {
        throw ConvergenceError("directionality: excitation has not decayed at T_max");
    }
    return res;
}

double directionality(const GueParams& p) { return directionality_detail(p).beta_right; }

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double uniform_from_bits(std::uint64_t bits, double mean, double sd) {
    const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
    return mean + sd * std::sqrt(3.0) * (2.0 * u - 1.0);
}

AveragedDirectionality averaged_directionality(double mean_r, double mean_gamma,
                                               double sd_r, double sd_gamma, int samples,
                                               std::uint64_t seed) {
    if (sd_r < 0.0 || sd_gamma < 0.0 || samples < 1) {
        throw std::invalid_argument("averaged_directionality: bad sd or sample count");
    }
    const OptimalParams opt = optimal_params(mean_r, mean_gamma);
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < samples; ++i) {
        std::uint64_t stream = seed ^ (0xD1B54A32D192ED03ULL * (static_cast<std::uint64_t>(i) + 1));
        GueParams p;
        p.r1 = uniform_from_bits(splitmix64(stream), mean_r, sd_r);
        p.r2 = uniform_from_bits(splitmix64(stream), mean_r, sd_r);
        p.gamma1 = uniform_from_bits(splitmix64(stream), mean_gamma, sd_gamma);
        p.gamma2 = uniform_from_bits(splitmix64(stream), mean_gamma, sd_gamma);
        p.j_hop = opt.j_opt;
        p.phi = opt.phi_opt;
        const double beta = directionality(p);
        sum += beta;
        sum_sq += beta * beta;
    }
    const double mean = sum / samples;
    AveragedDirectionality out{mean, 0.0};
    if (samples > 1) {
        const double var = (sum_sq - samples * mean * mean) / (samples - 1);
        out.standard_error = std::sqrt(std::max(var, 0.0) / samples);
    }
    return out;
}

}  // namespace qnet
