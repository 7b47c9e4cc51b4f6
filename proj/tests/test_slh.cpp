#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "qnet/slh.hpp"

using namespace qnet;

namespace {

Operator random_operator(const SpacePtr& space, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix m(space->total_dim(), space->total_dim());
    for (int r = 0; r < m.rows(); ++r) {
        for (int c = 0; c < m.cols(); ++c) m(r, c) = Complex(u(rng), u(rng));
    }
    return {space, m};
}

SlhTriplet random_emitter(const std::string& label, std::mt19937_64& rng) {
    const SpacePtr space = single_mode_space(label, 2);
    const Operator l = random_operator(space, rng);
    Operator h = random_operator(space, rng);
    h.mat = (h.mat + h.mat.adjoint()).eval();
    return emitter_triplet(l, h);
}

double max_diff(const Matrix& a, const Matrix& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

// Closed-form chain operators: embedded couplings, interference sums and
// the photon-mediated exchange Hamiltonian, assembled directly.
struct ChainOracle {
    SpacePtr space;
    std::vector<Matrix> l_right, l_left;
    Matrix h_local, h_right, h_left, l_right_sum, l_left_sum;
};

ChainOracle chain_oracle(const std::vector<GueParams>& gues, double phi) {
    ChainOracle o;
    const int n = static_cast<int>(gues.size());
    std::vector<HilbertSpace::Subsystem> subs;
    for (int k = 1; k <= n; ++k) {
        subs.push_back({"g" + std::to_string(k) + "t1", gues[k - 1].n_max});
        subs.push_back({"g" + std::to_string(k) + "t2", gues[k - 1].n_max});
    }
    o.space = make_space(subs);
    const int d = o.space->total_dim();
    o.h_local = Matrix::Zero(d, d);
    o.l_right_sum = Matrix::Zero(d, d);
    o.l_left_sum = Matrix::Zero(d, d);
    for (int k = 0; k < n; ++k) {
        const CouplingOps ops = build_coupling_ops(gues[k]);
        o.l_right.push_back(embed_matrix(ops.l_right.mat, *o.space, {2 * k, 2 * k + 1}));
        o.l_left.push_back(embed_matrix(ops.l_left.mat, *o.space, {2 * k, 2 * k + 1}));
        o.h_local += embed_matrix(build_hamiltonian(gues[k]).mat, *o.space,
                                  {2 * k, 2 * k + 1});
        o.l_right_sum +=
            std::exp(kImag * phi * static_cast<double>(n - (k + 1))) * o.l_right[k];
        o.l_left_sum += std::exp(kImag * phi * static_cast<double>(k)) * o.l_left[k];
    }
    o.h_right = Matrix::Zero(d, d);
    o.h_left = Matrix::Zero(d, d);
    for (int nn = 0; nn < n; ++nn) {
        for (int m = 0; m < nn; ++m) {
            const Complex c = std::exp(kImag * phi * static_cast<double>(nn - m));
            const Matrix term = c * (o.l_right[nn].adjoint() * o.l_right[m]);
            o.h_right += -0.5 * kImag * (term - term.adjoint());
            const Matrix term_l = c * (o.l_left[m].adjoint() * o.l_left[nn]);
            o.h_left += -0.5 * kImag * (term_l - term_l.adjoint());
        }
    }
    return o;
}

}  // namespace

TEST_CASE("series product") {
    std::mt19937_64 rng(11);
    SUBCASE("identity element") {
        const SlhTriplet g1 = random_emitter("a", rng);
        const SlhTriplet out = series(identity_triplet(1), g1);
        CHECK(max_diff(out.s, g1.s) == 0.0);
        CHECK(max_diff(out.couplings[0].mat, g1.couplings[0].mat) <= 1e-14);
        CHECK(max_diff(out.hamiltonian.mat, g1.hamiltonian.mat) <= 1e-14);
    }
    SUBCASE("phases compose additively") {
        const SlhTriplet out = series(phase_triplet(0.4), phase_triplet(1.1));
        CHECK(std::abs(out.s(0, 0) - std::exp(kImag * 1.5)) <= 1e-15);
    }
    SUBCASE("cascade of two emitters produces the exchange Hamiltonian") {
        const SlhTriplet g1 = random_emitter("a", rng);
        const SlhTriplet g2 = random_emitter("b", rng);
        const SlhTriplet out = series(g2, g1);
        out.validate();
        const SpacePtr space = out.hamiltonian.space;
        const Matrix l1 = embed_matrix(g1.couplings[0].mat, *space, {0});
        const Matrix l2 = embed_matrix(g2.couplings[0].mat, *space, {1});
        const Matrix h1 = embed_matrix(g1.hamiltonian.mat, *space, {0});
        const Matrix h2 = embed_matrix(g2.hamiltonian.mat, *space, {1});
        const Matrix cross = l2.adjoint() * l1;
        const Matrix expected =
            h1 + h2 - 0.5 * kImag * (cross - cross.adjoint());
        CHECK(max_diff(out.hamiltonian.mat, expected) <= 1e-12);
        CHECK(max_diff(out.couplings[0].mat, l1 + l2) <= 1e-12);
    }
    SUBCASE("associativity") {
        const SlhTriplet a = random_emitter("a", rng);
        const SlhTriplet b = random_emitter("b", rng);
        const SlhTriplet c = random_emitter("c", rng);
        const SlhTriplet lhs = series(a, series(b, c));
        const SlhTriplet rhs = series(series(a, b), c);
        CHECK(max_diff(lhs.hamiltonian.mat, rhs.hamiltonian.mat) <= 1e-12);
        CHECK(max_diff(lhs.couplings[0].mat, rhs.couplings[0].mat) <= 1e-12);
        CHECK(max_diff(lhs.s, rhs.s) <= 1e-14);
    }
    SUBCASE("channel mismatch rejected") {
        CHECK_THROWS_AS(series(identity_triplet(2), identity_triplet(1)),
                        DimensionError);
    }
}

TEST_CASE("concatenation product") {
    std::mt19937_64 rng(23);
    SUBCASE("two identities give a two-channel identity") {
        const SlhTriplet out = concatenate(identity_triplet(1), identity_triplet(1));
        CHECK(out.channels() == 2);
        CHECK(max_diff(out.s, Eigen::MatrixXcd::Identity(2, 2)) == 0.0);
    }
    SUBCASE("channel stacking order") {
        const GueParams p = GueParams::unidirectional(0.1, 1.0, 0.0, 2);
        const CouplingOps ops = build_coupling_ops(p);
        const SlhTriplet right = emitter_triplet(ops.l_right, build_hamiltonian(p));
        const SlhTriplet left =
            emitter_triplet(ops.l_left, {ops.l_left.space,
                                         Matrix::Zero(ops.l_left.dim(), ops.l_left.dim())});
        const SlhTriplet out = concatenate(right, left);
        CHECK(max_diff(out.couplings[0].mat, ops.l_right.mat) <= 1e-14);
        CHECK(max_diff(out.couplings[1].mat, ops.l_left.mat) <= 1e-14);
    }
    SUBCASE("composed scattering matrices stay unitary") {
        for (int trial = 0; trial < 5; ++trial) {
            const SlhTriplet a = series(phase_triplet(0.3), random_emitter("a", rng));
            const SlhTriplet b = random_emitter("b", rng);
            const SlhTriplet out = concatenate(a, b);
            const Eigen::MatrixXcd gram = out.s.adjoint() * out.s;
            CHECK(max_diff(gram, Eigen::MatrixXcd::Identity(2, 2)) <= 1e-14);
        }
    }
}

TEST_CASE("emitter chain composition") {
    SUBCASE("single emitter chain is the bare triplet") {
        const GueParams p = GueParams::unidirectional(0.15, 1.0, 0.0, 2);
        const SlhTriplet chain = compose_gue_chain({p}, 0.7);
        const CouplingOps ops = build_coupling_ops(p);
        CHECK(chain.channels() == 2);
        CHECK(max_diff(chain.couplings[0].mat, ops.l_right.mat) <= 1e-13);
        CHECK(max_diff(chain.couplings[1].mat, ops.l_left.mat) <= 1e-13);
        CHECK(max_diff(chain.hamiltonian.mat, build_hamiltonian(p).mat) <= 1e-13);
    }
    SUBCASE("two-emitter exchange coefficients at zero phase") {
        GueParams p1 = GueParams::unidirectional(0.1, 1.0, 0.0, 2);
        GueParams p2 = GueParams::unidirectional(0.1, 1.3, 0.2, 2);
        const SlhTriplet chain = compose_gue_chain({p1, p2}, 0.0);
        const ChainOracle o = chain_oracle({p1, p2}, 0.0);
        const Matrix expected = o.h_local + o.h_right + o.h_left;
        CHECK(max_diff(chain.hamiltonian.mat, expected) <= 1e-12);
    }
    SUBCASE("three-emitter chain matches the closed form") {
        GueParams p1 = GueParams::unidirectional(0.2, 1.0, 0.0, 2);
        GueParams p2 = GueParams::unidirectional(0.1, 0.8, 0.3, 2);
        GueParams p3 = GueParams::unidirectional(0.05, 1.2, -0.2, 2);
        const double phi = 0.9;
        const SlhTriplet chain = compose_gue_chain({p1, p2, p3}, phi);
        const ChainOracle o = chain_oracle({p1, p2, p3}, phi);
        CHECK(max_diff(chain.hamiltonian.mat, o.h_local + o.h_right + o.h_left) <=
              1e-12);
        CHECK(max_diff(chain.couplings[0].mat, o.l_right_sum) <= 1e-12);
        CHECK(max_diff(chain.couplings[1].mat, o.l_left_sum) <= 1e-12);
        const Complex s_expected = std::exp(kImag * phi * 2.0);
        CHECK(std::abs(chain.s(0, 0) - s_expected) <= 1e-14);
        CHECK(std::abs(chain.s(1, 1) - s_expected) <= 1e-14);
        chain.validate();
    }
    SUBCASE("left-mediated exchange vanishes on rightward excitations") {
        const GueParams p = GueParams::unidirectional(0.2, 1.0, 0.0, 2);
        const std::vector<GueParams> gues{p, p, p};
        const double phi = 0.4;
        const SlhTriplet chain = compose_gue_chain(gues, phi);
        const ChainOracle o = chain_oracle(gues, phi);
        const Matrix h_left_part = chain.hamiltonian.mat - o.h_local - o.h_right;
        const int n = 3;
        const int d = o.space->total_dim();
        auto right_state = [&](int node) {
            Vector v = Vector::Zero(d);
            // |R_k> = (-i |1 0> + |0 1>)/sqrt(2) on emitter k's pair.
            const int stride1 = 1 << (2 * (n - node) - 1);
            const int stride2 = 1 << (2 * (n - node) - 2);
            v(stride1) = Complex(0.0, -1.0) / std::sqrt(2.0);
            v(stride2) = 1.0 / std::sqrt(2.0);
            return v;
        };
        for (int a = 1; a <= n; ++a) {
            for (int b = 1; b <= n; ++b) {
                const Complex elem = right_state(a).dot(h_left_part * right_state(b));
                CHECK(std::abs(elem) <= 1e-12);
            }
        }
    }
}

TEST_CASE("interferometer composition") {
    SUBCASE("single node with trivial optics") {
        NetworkSpec spec;
        spec.nodes = {NodeParams::unidirectional(-0.5, 0.1, 1.0, 1.0)};
        spec.beamsplitters = {identity_splitter(), identity_splitter()};
        spec.phi_tilde = 0.3;
        const InterferometerSlh net = compose_interferometer(spec);
        net.right.validate();
        net.left.validate();
        // Line down carries no coupling; line up carries the node one.
        CHECK(net.right.couplings[0].mat.cwiseAbs().maxCoeff() <= 1e-14);
        const CouplingOps ops = build_coupling_ops(spec.nodes[0].gue);
        const Matrix lr =
            embed_matrix(ops.l_right.mat, *net.right.hamiltonian.space, {1, 2});
        CHECK((net.right.couplings[1].mat - std::exp(kImag * 0.15) * lr)
                  .cwiseAbs()
                  .maxCoeff() <= 1e-13);
        const Complex s_diag = std::exp(kImag * 0.3);
        CHECK(std::abs(net.right.s(0, 0) - s_diag) <= 1e-14);
        CHECK(std::abs(net.right.s(1, 1) - s_diag) <= 1e-14);
    }
    SUBCASE("hadamard ends cancel in the scattering matrix") {
        NetworkSpec spec;
        spec.nodes = {NodeParams::unidirectional(-0.5, 0.0, 1.0, 1.0)};
        spec.beamsplitters = {hadamard_splitter(), hadamard_splitter()};
        spec.phi_tilde = 0.8;
        const InterferometerSlh net = compose_interferometer(spec);
        const Eigen::MatrixXcd expected =
            std::exp(kImag * 0.8) * Eigen::MatrixXcd::Identity(2, 2);
        CHECK((net.right.s - expected).cwiseAbs().maxCoeff() <= 1e-14);
    }
    SUBCASE("two random nodes match the closed forms") {
        std::mt19937_64 rng(31);
        std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
        auto random_unitary = [&] {
            const double theta = u(rng) / 4.0, phase = u(rng);
            Matrix2 m;
            m << std::cos(theta), std::sin(theta) * std::exp(kImag * phase),
                -std::sin(theta) * std::exp(-kImag * phase), std::cos(theta);
            return m;
        };
        NetworkSpec spec;
        spec.nodes = {NodeParams::unidirectional(-0.5, 0.1, 1.0, 1.0),
                      NodeParams::unidirectional(0.4, 0.1, 1.0, 0.7)};
        spec.beamsplitters = {random_unitary(), random_unitary(), random_unitary()};
        spec.phi_tilde = u(rng);
        const double phi = spec.phi_tilde;
        const InterferometerSlh net = compose_interferometer(spec);
        const SpacePtr space = net.right.hamiltonian.space;

        // S_R = e^{2 i phi} U_2 U_1 U_0 and the coupling rows carry the
        // partial beamsplitter products.
        const Matrix2 s_expected = std::exp(kImag * 2.0 * phi) * spec.beamsplitters[2] *
                                   spec.beamsplitters[1] * spec.beamsplitters[0];
        CHECK((net.right.s - s_expected).cwiseAbs().maxCoeff() <= 1e-13);

        std::vector<Matrix> lr(2), ll(2), hv(2);
        for (int k = 0; k < 2; ++k) {
            const CouplingOps ops = build_coupling_ops(spec.nodes[k].gue);
            lr[k] = embed_matrix(ops.l_right.mat, *space, {3 * k + 1, 3 * k + 2});
            ll[k] = embed_matrix(ops.l_left.mat, *space, {3 * k + 1, 3 * k + 2});
        }
        for (int j = 0; j < 2; ++j) {
            Matrix row = std::exp(kImag * phi * 1.5) *
                             (spec.beamsplitters[2] * spec.beamsplitters[1])(j, 1) * lr[0] +
                         std::exp(kImag * phi * 0.5) * spec.beamsplitters[2](j, 1) * lr[1];
            CHECK((net.right.couplings[j].mat - row).cwiseAbs().maxCoeff() <= 1e-12);
            Matrix row_l = std::exp(kImag * phi * 0.5) * spec.beamsplitters[0](1, j) * ll[0] +
                           std::exp(kImag * phi * 1.5) *
                               (spec.beamsplitters[0].transpose() *
                                spec.beamsplitters[1].transpose())(j, 1) *
                               ll[1];
            CHECK((net.left.couplings[j].mat - row_l).cwiseAbs().maxCoeff() <= 1e-12);
        }

        // Exchange Hamiltonian coefficient between the two nodes.
        Matrix h_v = Matrix::Zero(space->total_dim(), space->total_dim());
        for (int k = 0; k < 2; ++k) {
            Matrix proj1 = Matrix::Zero(2, 2);
            proj1(1, 1) = 1.0;
            const Matrix p1q = embed_matrix(proj1, *space, {3 * k});
            const Operator a_local = truncated_boson(2);
            const Matrix a1 = embed_matrix(a_local.mat, *space, {3 * k + 1});
            const Matrix a2 = embed_matrix(a_local.mat, *space, {3 * k + 2});
            h_v -= p1q * (spec.nodes[k].v1 * a1.adjoint() * a1 +
                          spec.nodes[k].v2 * a2.adjoint() * a2);
            h_v += embed_matrix(build_hamiltonian(spec.nodes[k].gue).mat, *space,
                                {3 * k + 1, 3 * k + 2});
        }
        const Complex c_r = std::exp(kImag * phi) * spec.beamsplitters[1](1, 1);
        const Matrix term_r = c_r * (lr[1].adjoint() * lr[0]);
        const Complex c_l = std::exp(kImag * phi) * spec.beamsplitters[1](1, 1);
        const Matrix term_l = c_l * (ll[0].adjoint() * ll[1]);
        const Matrix expected_h = h_v - 0.5 * kImag * (term_r - term_r.adjoint()) -
                                  0.5 * kImag * (term_l - term_l.adjoint());
        CHECK((net.right.hamiltonian.mat + net.left.hamiltonian.mat - expected_h)
                  .cwiseAbs()
                  .maxCoeff() <= 1e-12);
    }
}
