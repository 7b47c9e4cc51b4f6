#include "qnet/slh.hpp"

#include <cmath>

namespace qnet {

namespace {

Operator embed_into(const Operator& op, const SpacePtr& big) {
    if (*op.space == *big) return op;
    std::vector<int> positions;
    positions.reserve(op.space->size());
    for (const auto& sub : op.space->subsystems()) {
        positions.push_back(big->position_of(sub.label));
    }
    return {big, embed_matrix(op.mat, *big, positions)};
}

Operator zero_operator(const SpacePtr& space) {
    const int d = space->total_dim();
    return {space, Matrix::Zero(d, d)};
}

}  // namespace

void SlhTriplet::validate(double tol) const {
    if (s.rows() != s.cols()) {
        throw DimensionError("SlhTriplet: scattering matrix must be square");
    }
    if (static_cast<int>(couplings.size()) != channels()) {
        throw DimensionError("SlhTriplet: one coupling operator per channel required");
    }
    const Eigen::MatrixXcd gram = s.adjoint() * s;
    if ((gram - Eigen::MatrixXcd::Identity(s.rows(), s.cols())).cwiseAbs().maxCoeff() >
        tol) {
        throw std::invalid_argument("SlhTriplet: scattering matrix is not unitary");
    }
    for (const Operator& l : couplings) {
        if (!(*l.space == *hamiltonian.space)) {
            throw DimensionError("SlhTriplet: operators live on different spaces");
        }
    }
    if (!hamiltonian.is_hermitian(tol * std::max(1.0, hamiltonian.mat.norm()))) {
        throw std::invalid_argument("SlhTriplet: Hamiltonian is not Hermitian");
    }
}

SlhTriplet identity_triplet(int channels) {
    SlhTriplet g;
    g.s = Eigen::MatrixXcd::Identity(channels, channels);
    g.hamiltonian = zero_operator(scalar_space());
    g.couplings.assign(channels, zero_operator(scalar_space()));
    return g;
}

SlhTriplet phase_triplet(double phi, int channels) {
    SlhTriplet g = identity_triplet(channels);
    g.s *= std::exp(kImag * phi);
    return g;
}

SlhTriplet scattering_triplet(const Eigen::MatrixXcd& s) {
    SlhTriplet g;
    g.s = s;
    g.hamiltonian = zero_operator(scalar_space());
    g.couplings.assign(s.rows(), zero_operator(scalar_space()));
    return g;
}

SlhTriplet emitter_triplet(const Operator& coupling, const Operator& hamiltonian) {
    SlhTriplet g;
    g.s = Eigen::MatrixXcd::Identity(1, 1);
    g.couplings = {coupling};
    g.hamiltonian = hamiltonian;
    return g;
}

SlhTriplet series(const SlhTriplet& g2, const SlhTriplet& g1) {
    if (g2.channels() != g1.channels()) {
        throw DimensionError("series: channel counts differ");
    }
    const int nc = g1.channels();
    const SpacePtr space = merge_spaces(g1.hamiltonian.space, g2.hamiltonian.space);
    const int d = space->total_dim();

    std::vector<Matrix> l1(nc), l2(nc);
    for (int i = 0; i < nc; ++i) {
        l1[i] = embed_into(g1.couplings[i], space).mat;
        l2[i] = embed_into(g2.couplings[i], space).mat;
    }

    SlhTriplet out;
    out.s = g2.s * g1.s;
    out.couplings.reserve(nc);
    for (int j = 0; j < nc; ++j) {
        Matrix lj = l2[j];
        for (int i = 0; i < nc; ++i) {
            if (g2.s(j, i) != Complex(0.0, 0.0)) lj += g2.s(j, i) * l1[i];
        }
        out.couplings.push_back({space, std::move(lj)});
    }

    Matrix h = embed_into(g1.hamiltonian, space).mat + embed_into(g2.hamiltonian, space).mat;
    Matrix cross = Matrix::Zero(d, d);
    for (int j = 0; j < nc; ++j) {
        for (int i = 0; i < nc; ++i) {
            if (g2.s(j, i) != Complex(0.0, 0.0)) {
                cross += g2.s(j, i) * (l2[j].adjoint() * l1[i]);
            }
        }
    }
    h += -0.5 * kImag * (cross - cross.adjoint());
    out.hamiltonian = {space, std::move(h)};
    return out;
}

SlhTriplet concatenate(const SlhTriplet& g2, const SlhTriplet& g1) {
    const SpacePtr space = merge_spaces(g1.hamiltonian.space, g2.hamiltonian.space);
    const int n2 = g2.channels(), n1 = g1.channels();
    SlhTriplet out;
    out.s = Eigen::MatrixXcd::Zero(n2 + n1, n2 + n1);
    out.s.topLeftCorner(n2, n2) = g2.s;
    out.s.bottomRightCorner(n1, n1) = g1.s;
    for (int j = 0; j < n2; ++j) out.couplings.push_back(embed_into(g2.couplings[j], space));
    for (int j = 0; j < n1; ++j) out.couplings.push_back(embed_into(g1.couplings[j], space));
    out.hamiltonian = {space, embed_into(g1.hamiltonian, space).mat +
                                  embed_into(g2.hamiltonian, space).mat};
    return out;
}

SlhTriplet compose_gue_chain(const std::vector<GueParams>& gues, double phi_tilde) {
    const int n = static_cast<int>(gues.size());
    if (n < 1) throw std::invalid_argument("compose_gue_chain: need at least one emitter");

    std::vector<SlhTriplet> right(n), left(n);
    for (int k = 0; k < n; ++k) {
        const GueParams& p = gues[k];
        const std::string tag = "g" + std::to_string(k + 1);
        const SpacePtr local = make_space({{tag + "t1", p.n_max}, {tag + "t2", p.n_max}});
        const Operator h = build_hamiltonian(p);
        const CouplingOps ops = build_coupling_ops(p);
        right[k] = emitter_triplet({local, ops.l_right.mat}, {local, h.mat});
        left[k] = emitter_triplet({local, ops.l_left.mat}, {local, Matrix::Zero(h.dim(), h.dim())});
    }

    SlhTriplet g_right = right[0];
    for (int k = 1; k < n; ++k) {
        g_right = series(right[k], series(phase_triplet(phi_tilde), g_right));
    }
    SlhTriplet g_left = left[n - 1];
    for (int k = n - 2; k >= 0; --k) {
        g_left = series(left[k], series(phase_triplet(phi_tilde), g_left));
    }
    return concatenate(g_right, g_left);
}

InterferometerSlh compose_interferometer(const NetworkSpec& spec) {
    spec.validate();
    const int n = spec.n_nodes();

    // Per-node triplets on local (qubit, t1, t2) spaces; the series products
    // then tensor the node spaces together in order.
    std::vector<SlhTriplet> node_r(n), node_l(n);
    for (int k = 0; k < n; ++k) {
        const NodeParams& node = spec.nodes[k];
        node.validate();
        const GueParams& p = node.gue;
        const std::string tag = std::to_string(k + 1);
        const SpacePtr local = make_space(
            {{"q" + tag, 2}, {"g" + tag + "t1", p.n_max}, {"g" + tag + "t2", p.n_max}});
        const Operator a_local = truncated_boson(p.n_max);
        const Matrix a1 = embed_matrix(a_local.mat, *local, {1});
        const Matrix a2 = embed_matrix(a_local.mat, *local, {2});
        Matrix proj1 = Matrix::Zero(2, 2);
        proj1(1, 1) = 1.0;
        const Matrix p1q = embed_matrix(proj1, *local, {0});

        Matrix h = embed_matrix(build_hamiltonian(p).mat, *local, {1, 2});
        h -= p1q * (node.v1 * a1.adjoint() * a1 + node.v2 * a2.adjoint() * a2);
        const CouplingOps ops = build_coupling_ops(p);
        const Matrix lr = embed_matrix(ops.l_right.mat, *local, {1, 2});
        const Matrix ll = embed_matrix(ops.l_left.mat, *local, {1, 2});

        node_r[k] = emitter_triplet({local, lr}, {local, h});
        node_l[k] = emitter_triplet({local, ll}, {local, Matrix::Zero(h.rows(), h.cols())});
    }

    const double half = spec.phi_tilde / 2.0;
    auto block = [&](const SlhTriplet& node) {
        // Node in line "up" flanked by half phases; full phase in line "down".
        const SlhTriplet dressed =
            series(phase_triplet(half), series(node, phase_triplet(half)));
        return concatenate(phase_triplet(spec.phi_tilde), dressed);
    };

    InterferometerSlh out;
    SlhTriplet g_r = scattering_triplet(spec.beamsplitters[0]);
    for (int k = 0; k < n; ++k) {
        g_r = series(block(node_r[k]), g_r);
        g_r = series(scattering_triplet(spec.beamsplitters[k + 1]), g_r);
    }
    out.right = g_r;

    SlhTriplet g_l = scattering_triplet(spec.beamsplitters[n].transpose());
    for (int k = n - 1; k >= 0; --k) {
        g_l = series(block(node_l[k]), g_l);
        g_l = series(scattering_triplet(spec.beamsplitters[k].transpose()), g_l);
    }
    out.left = g_l;
    return out;
}

}  // namespace qnet
