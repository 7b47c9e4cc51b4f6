#include "qnet/network.hpp"

#include <cmath>

namespace qnet {

void NodeParams::validate() const {
    gue.validate();
    if (v1 < 0.0 || v2 < 0.0) {
        throw std::invalid_argument("NodeParams: cross-Kerr rates must be >= 0");
    }
}

bool NodeParams::symmetric_couplings(double tol) const {
    const double scale = std::max(gue.gamma1, gue.gamma2);
    return std::abs(gue.r1 - gue.r2) <= tol &&
           std::abs(gue.gamma1 - gue.gamma2) <= tol * std::max(1.0, scale);
}

bool NodeParams::is_unidirectional(double tol) const {
    if (!symmetric_couplings(tol)) return false;
    const double g = gue.gamma1;
    const OptimalParams opt = optimal_params(gue.r1, g);
    const double rate_tol = tol * std::max(1.0, g);
    return std::abs(gue.phi - opt.phi_opt) <= tol &&
           std::abs(gue.j_hop - opt.j_opt) <= rate_tol &&
           std::abs(gue.delta1 - gue.delta2) <= rate_tol &&
           std::abs(gue.delta1 - (delta_n + opt.delta_shift)) <=
               tol * std::max({1.0, g, std::abs(delta_n)}) &&
           std::abs(v1 - v2) <= tol * std::max({1.0, g, v1, v2});
}

double NodeParams::gamma_r() const {
    if (!symmetric_couplings()) {
        throw std::invalid_argument("NodeParams: gamma_r requires symmetric couplings");
    }
    return optimal_params(gue.r1, gue.gamma1).gamma_r;
}

NodeParams NodeParams::unidirectional(double delta_n, double r, double gamma, double v,
                                      int n_max) {
    NodeParams node;
    node.gue = GueParams::unidirectional(r, gamma, delta_n, n_max);
    node.v1 = node.v2 = v;
    node.delta_n = delta_n;
    return node;
}

void NetworkSpec::validate(double tol) const {
    if (nodes.empty()) {
        throw std::invalid_argument("NetworkSpec: need at least one node");
    }
    if (beamsplitters.size() != nodes.size() + 1) {
        throw DimensionError("NetworkSpec: need N+1 beamsplitters for N nodes");
    }
    for (const Matrix2& u : beamsplitters) {
        if ((u.adjoint() * u - Matrix2::Identity()).cwiseAbs().maxCoeff() > tol) {
            throw std::invalid_argument("NetworkSpec: beamsplitter is not unitary");
        }
    }
    for (const NodeParams& n : nodes) n.validate();
}

Matrix2 hadamard_splitter() {
    Matrix2 h;
    h << 1.0, 1.0, 1.0, -1.0;
    return h / std::sqrt(2.0);
}

Matrix2 identity_splitter() { return Matrix2::Identity(); }

Matrix2 up_phase_plate(Complex phase) {
    Matrix2 u = Matrix2::Identity();
    u(1, 1) = phase;
    return u;
}

}  // namespace qnet
