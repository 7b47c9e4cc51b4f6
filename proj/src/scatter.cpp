#include "qnet/scatter.hpp"

#include <cmath>

namespace qnet {

Complex transmission_phase(double x, double gamma_r) {
    return (2.0 * kImag * x + gamma_r) / (2.0 * kImag * x - gamma_r);
}

double ScatteringResult::unitarity_defect() const {
    double defect = 0.0;
    for (int s = 0; s < n_bitstrings(); ++s) {
        for (int i = 0; i < 2; ++i) {
            double total = 0.0;
            for (int j = 0; j < 2; ++j) {
                total += std::norm(right[s](j, i)) + std::norm(left[s](j, i));
            }
            defect = std::max(defect, std::abs(total - 1.0));
        }
    }
    return defect;
}

namespace {

// Single-node 2x2 resolvent in the (a_1, a_2) basis; shared by the
// closed-form amplitudes below.
struct SingleNode {
    Matrix2 f0, f1;  // -iH - (1/2)(l_R† l_R + l_L† l_L) per qubit state
    RowVector2 l_r, l_l;
};

SingleNode make_single_node(const NodeParams& node) {
    SingleNode sn;
    sn.l_r = coupling_row_right(node.gue);
    sn.l_l = coupling_row_left(node.gue);
    const Matrix2 damping = 0.5 * (sn.l_r.adjoint() * sn.l_r + sn.l_l.adjoint() * sn.l_l);
    const Matrix2 h0 = single_excitation_hamiltonian(node.gue);
    Matrix2 shift = Matrix2::Zero();
    shift(0, 0) = -node.v1;
    shift(1, 1) = -node.v2;
    sn.f0 = -kImag * h0 - damping;
    sn.f1 = -kImag * (h0 + shift) - damping;
    return sn;
}

}  // namespace

NodeAmplitudes node_amplitudes(const NodeParams& node, double delta_p) {
    node.validate();
    if (!node.symmetric_couplings()) {
        throw std::invalid_argument(
            "node_amplitudes: closed form requires symmetric couplings; "
            "use general_scattering");
    }
    const SingleNode sn = make_single_node(node);
    auto solve = [&](const Matrix2& f) {
        const Matrix2 m = kImag * delta_p * Matrix2::Identity() + f;
        const Vector2 x = m.partialPivLu().solve(sn.l_r.conjugate().transpose());
        return std::pair<Complex, Complex>{1.0 + (sn.l_r * x).value(),
                                           (sn.l_l * x).value()};
    };
    const auto [t0, r0] = solve(sn.f0);
    const auto [t1, r1] = solve(sn.f1);
    return {r0, t0, r1, t1};
}

Matrix2 ideal_phase_gate(const NodeParams& node, double delta_p) {
    const double gr = node.gamma_r();
    Matrix2 gate = Matrix2::Zero();
    gate(0, 0) = transmission_phase(node.delta_n + delta_p, gr);
    gate(1, 1) = transmission_phase(node.delta_n + delta_p + 0.5 * (node.v1 + node.v2), gr);
    return gate;
}

ScatteringResult ideal_scattering(const NetworkSpec& spec, double delta_p) {
    spec.validate();
    const int n = spec.n_nodes();
    for (const NodeParams& node : spec.nodes) {
        if (!node.is_unidirectional()) {
            throw std::invalid_argument(
                "ideal_scattering: node violates the unidirectional conditions");
        }
    }
    ScatteringResult res;
    res.delta_p = delta_p;
    res.n_nodes = n;
    res.global_phase = std::exp(kImag * spec.phi_tilde * static_cast<double>(n));
    res.right.resize(res.n_bitstrings());
    res.left.assign(res.n_bitstrings(), Matrix2::Zero());

    std::vector<Complex> t0(n), t1(n);
    for (int k = 0; k < n; ++k) {
        const Matrix2 gate = ideal_phase_gate(spec.nodes[k], delta_p);
        t0[k] = gate(0, 0);
        t1[k] = gate(1, 1);
    }
    for (int s = 0; s < res.n_bitstrings(); ++s) {
        Matrix2 m = spec.beamsplitters[0];
        for (int k = 0; k < n; ++k) {
            Matrix2 node_gate = Matrix2::Identity();
            node_gate(1, 1) = ((s >> k) & 1) ? t1[k] : t0[k];
            m = spec.beamsplitters[k + 1] * node_gate * m;
        }
        res.right[s] = m;
    }
    return res;
}

ScatteringResult general_scattering(const NetworkSpec& spec, double delta_p) {
    spec.validate();
    const int n = spec.n_nodes();
    const int dim = 2 * n;

    // Ordered beamsplitter products: range_prod(a, b) = U_b ... U_a.
    auto range_prod = [&](int a, int b) {
        Matrix2 p = Matrix2::Identity();
        for (int m = a; m <= b; ++m) {
            p = spec.beamsplitters[m] * p;
        }
        return p;
    };

    std::vector<RowVector2> l_r(n), l_l(n);
    std::vector<Matrix2> h_node(n);
    for (int k = 0; k < n; ++k) {
        l_r[k] = coupling_row_right(spec.nodes[k].gue);
        l_l[k] = coupling_row_left(spec.nodes[k].gue);
        h_node[k] = single_excitation_hamiltonian(spec.nodes[k].gue);
    }

    auto phase = [&](double x) { return std::exp(kImag * spec.phi_tilde * x); };

    // Collective coupling rows of the four output channels (direction, line).
    Matrix rows_r = Matrix::Zero(2, dim);  // right-moving, row j = line
    Matrix rows_l = Matrix::Zero(2, dim);
    for (int k = 0; k < n; ++k) {
        const int node_idx = k + 1;  // 1-based along the waveguide
        const Matrix2 after = range_prod(node_idx, n);    // U_N ... U_n
        const Matrix2 before = range_prod(0, node_idx - 1);  // U_{n-1} ... U_0
        for (int j = 0; j < 2; ++j) {
            rows_r.block(j, 2 * k, 1, 2) +=
                phase(n - node_idx + 0.5) * after(j, 1) * l_r[k];
            rows_l.block(j, 2 * k, 1, 2) +=
                phase(node_idx - 0.5) * before(1, j) * l_l[k];
        }
    }

    // Absorption vectors per input line.
    Matrix b_in = Matrix::Zero(dim, 2);
    for (int k = 0; k < n; ++k) {
        const int node_idx = k + 1;
        const Matrix2 before = range_prod(0, node_idx - 1);
        for (int i = 0; i < 2; ++i) {
            b_in.block(2 * k, i, 2, 1) +=
                phase(node_idx - 0.5) * before(1, i) * l_r[k].conjugate().transpose();
        }
    }

    Matrix damping = Matrix::Zero(dim, dim);
    for (int j = 0; j < 2; ++j) {
        damping += 0.5 * rows_r.row(j).adjoint() * rows_r.row(j);
        damping += 0.5 * rows_l.row(j).adjoint() * rows_l.row(j);
    }

    // Photon-mediated exchange terms between nodes (n2 > n1: rightward,
    // n1 > n2 ... leftward via the transposed splitters).
    Matrix h_exchange = Matrix::Zero(dim, dim);
    for (int n2 = 1; n2 <= n; ++n2) {
        for (int n1 = 1; n1 < n2; ++n1) {
            const Complex c_r = phase(n2 - n1) * range_prod(n1, n2 - 1)(1, 1);
            const Matrix block =
                -0.5 * kImag * c_r *
                (l_r[n2 - 1].adjoint() * l_r[n1 - 1]);
            h_exchange.block(2 * (n2 - 1), 2 * (n1 - 1), 2, 2) += block;
            h_exchange.block(2 * (n1 - 1), 2 * (n2 - 1), 2, 2) += block.adjoint();

            const Complex c_l = phase(n2 - n1) * range_prod(n1, n2 - 1)(1, 1);
            const Matrix block_l =
                -0.5 * kImag * c_l *
                (l_l[n1 - 1].adjoint() * l_l[n2 - 1]);
            h_exchange.block(2 * (n1 - 1), 2 * (n2 - 1), 2, 2) += block_l;
            h_exchange.block(2 * (n2 - 1), 2 * (n1 - 1), 2, 2) += block_l.adjoint();
        }
    }

    const Matrix2 s_direct = range_prod(0, n);  // without the global phase

    ScatteringResult res;
    res.delta_p = delta_p;
    res.n_nodes = n;
    res.global_phase = phase(n);
    res.right.resize(res.n_bitstrings());
    res.left.resize(res.n_bitstrings());

    for (int s = 0; s < res.n_bitstrings(); ++s) {
        Matrix h = h_exchange;
        for (int k = 0; k < n; ++k) {
            Matrix2 hk = h_node[k];
            if ((s >> k) & 1) {
                hk(0, 0) -= spec.nodes[k].v1;
                hk(1, 1) -= spec.nodes[k].v2;
            }
            h.block(2 * k, 2 * k, 2, 2) += hk;
        }
        Matrix f = -kImag * h - damping;
        f += kImag * delta_p * Matrix::Identity(dim, dim);
        const Matrix x = f.partialPivLu().solve(b_in);  // dim x 2

        // Stored amplitudes have the e^{i phi_tilde N} bookkeeping phase
        // stripped; the resolvent term carries it inside the b vectors.
        const Complex strip = std::conj(res.global_phase);
        res.right[s] = s_direct + strip * (rows_r * x).eval();
        res.left[s] = strip * (rows_l * x).eval();
    }
    return res;
}

}  // namespace qnet
