#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "qnet/qops.hpp"

using namespace qnet;

namespace {

Matrix random_matrix(int dim, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix m(dim, dim);
    for (int r = 0; r < dim; ++r) {
        for (int c = 0; c < dim; ++c) m(r, c) = Complex(u(rng), u(rng));
    }
    return m;
}

Matrix random_density(int dim, std::mt19937_64& rng) {
    const Matrix a = random_matrix(dim, rng);
    Matrix rho = a * a.adjoint();
    return rho / rho.trace().real();
}

// Independent Kronecker-product oracle.
Matrix kron_oracle(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

}  // namespace

TEST_CASE("hilbert space bookkeeping") {
    const SpacePtr space = make_space({{"a", 2}, {"b", 3}, {"c", 4}});
    CHECK(space->total_dim() == 24);
    CHECK(space->position_of("b") == 1);
    CHECK_THROWS_AS((void)space->position_of("missing"), std::invalid_argument);
    CHECK_THROWS_AS(make_space({{"a", 2}, {"a", 2}}), std::invalid_argument);
    CHECK_THROWS_AS(make_space({{"a", 0}}), DimensionError);
}

TEST_CASE("truncated boson ladder") {
    SUBCASE("two levels has a single unit entry") {
        const Operator a = truncated_boson(2);
        CHECK(a.mat(0, 1) == Complex(1.0, 0.0));
        CHECK(a.mat.cwiseAbs().sum() == doctest::Approx(1.0));
    }
    SUBCASE("number operator diagonal") {
        const Operator a = truncated_boson(3);
        const Matrix n = a.mat.adjoint() * a.mat;
        CHECK(n(0, 0).real() == doctest::Approx(0.0));
        CHECK(n(1, 1).real() == doctest::Approx(1.0));
        CHECK(n(2, 2).real() == doctest::Approx(2.0));
    }
    SUBCASE("commutator is the identity below the cutoff") {
        const Operator a = truncated_boson(4);
        const Matrix comm = a.mat * a.mat.adjoint() - a.mat.adjoint() * a.mat;
        CHECK((comm.topLeftCorner(3, 3) - Matrix::Identity(3, 3)).norm() == 0.0);
    }
    CHECK_THROWS_AS(truncated_boson(1), DimensionError);
}

TEST_CASE("embed") {
    Matrix sz(2, 2);
    sz << 1, 0, 0, -1;
    SUBCASE("sigma_z on first qubit of a pair") {
        const SpacePtr space = make_space({{"q1", 2}, {"q2", 2}});
        const Operator embedded = embed({single_mode_space("x", 2), sz}, space, "q1");
        CHECK((embedded.mat - kron_oracle(sz, Matrix::Identity(2, 2))).norm() == 0.0);
    }
    SUBCASE("identity embeds to identity") {
        const SpacePtr space = make_space({{"q1", 2}, {"q2", 3}});
        const Operator id2 = identity_operator(single_mode_space("q2", 3));
        const Operator embedded = embed(id2, space, "q2");
        CHECK((embedded.mat - Matrix::Identity(6, 6)).norm() == 0.0);
    }
    SUBCASE("lowering operator at the second slot, Kronecker oracle") {
        const SpacePtr space = make_space({{"m1", 3}, {"m2", 3}});
        const Operator a = truncated_boson(3);
        const Operator embedded = embed(a, space, "m2");
        CHECK((embedded.mat - kron_oracle(Matrix::Identity(3, 3), a.mat)).norm() <=
              1e-15);
    }
    SUBCASE("dimension mismatch rejected") {
        const SpacePtr space = make_space({{"q1", 2}, {"q2", 3}});
        CHECK_THROWS_AS(embed(truncated_boson(3), space, "q1"), DimensionError);
    }
    SUBCASE("embedding is a homomorphism") {
        std::mt19937_64 rng(1234);
        const SpacePtr space = make_space({{"u", 2}, {"v", 3}, {"w", 2}});
        for (int trial = 0; trial < 10; ++trial) {
            const Matrix a = random_matrix(3, rng);
            const Matrix b = random_matrix(3, rng);
            const SpacePtr local = single_mode_space("v", 3);
            const Matrix lhs = embed({local, a * b}, space, "v").mat;
            const Matrix rhs =
                embed({local, a}, space, "v").mat * embed({local, b}, space, "v").mat;
            CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
}

TEST_CASE("dissipator") {
    SUBCASE("decay of the excited state") {
        const Operator a = truncated_boson(2);
        Matrix rho = Matrix::Zero(2, 2);
        rho(1, 1) = 1.0;
        const Matrix out = dissipator_apply(a.mat, rho);
        Matrix expected(2, 2);
        expected << 1, 0, 0, -1;
        CHECK((out - expected).cwiseAbs().maxCoeff() <= 1e-15);
    }
    SUBCASE("dephasing fixed point") {
        Matrix sz(2, 2);
        sz << 1, 0, 0, -1;
        const Matrix rho = 0.5 * Matrix::Identity(2, 2);
        CHECK(dissipator_apply(sz, rho).cwiseAbs().maxCoeff() <= 1e-15);
    }
    SUBCASE("trace identity and hermiticity on random inputs") {
        std::mt19937_64 rng(99);
        for (int trial = 0; trial < 20; ++trial) {
            const Matrix l = random_matrix(5, rng);
            const Matrix rho = random_density(5, rng);
            const Matrix out = dissipator_apply(l, rho);
            CHECK(std::abs(out.trace()) <= 1e-12 * rho.rows());
            CHECK((out - out.adjoint()).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
}

TEST_CASE("expectation values") {
    const SpacePtr qubit = single_mode_space("q", 2);
    Matrix sz(2, 2);
    sz << 1, 0, 0, -1;
    SUBCASE("ground state of sigma_z") {
        const StateVector zero = basis_state(qubit, 0);
        CHECK(expectation({qubit, sz}, zero).real() == doctest::Approx(1.0));
    }
    SUBCASE("unit trace against the identity") {
        std::mt19937_64 rng(5);
        const DensityMatrix rho{qubit, random_density(2, rng)};
        CHECK(expectation(identity_operator(qubit), rho).real() ==
              doctest::Approx(1.0));
    }
    SUBCASE("delocalized right mode carries one excitation") {
        // |R> = (i a1† + ... ) built explicitly: (i|10> + |01>)/sqrt(2),
        // a_R = (i a1 + a2)/sqrt(2).
        const SpacePtr pair = make_space({{"m1", 2}, {"m2", 2}});
        const Operator a1 = embed(truncated_boson(2), pair, "m1");
        const Operator a2 = embed(truncated_boson(2), pair, "m2");
        const Matrix ar = (kImag * a1.mat + a2.mat) / std::sqrt(2.0);
        Vector amps = Vector::Zero(4);
        amps(2) = kImag / std::sqrt(2.0);  // |10>
        amps(1) = 1.0 / std::sqrt(2.0);    // |01>
        const StateVector right{pair, amps};
        CHECK(right.is_normalized());
        const Operator number{pair, ar.adjoint() * ar};
        CHECK(expectation(number, right).real() == doctest::Approx(1.0));
    }
}

TEST_CASE("partial trace") {
    const SpacePtr space = make_space({{"a", 2}, {"b", 3}});
    std::mt19937_64 rng(7);
    const Matrix rho_a = random_density(2, rng);
    const Matrix rho_b = random_density(3, rng);
    const Matrix joint = kron_oracle(rho_a, rho_b);
    CHECK((partial_trace(joint, *space, {0}) - rho_a).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((partial_trace(joint, *space, {1}) - rho_b).cwiseAbs().maxCoeff() <= 1e-12);
}
