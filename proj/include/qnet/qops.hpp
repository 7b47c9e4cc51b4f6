#ifndef QNET_QOPS_HPP
#define QNET_QOPS_HPP

#include <memory>
#include <string>
#include <vector>

#include "qnet/types.hpp"

namespace qnet {

// Ordered tensor factorization of a finite Hilbert space. The declaration
// order of the subsystems fixes the Kronecker convention for every operator
// living on the space.
class HilbertSpace {
  public:
    struct Subsystem {
        std::string label;
        int dim;
    };

    HilbertSpace() = default;
    explicit HilbertSpace(std::vector<Subsystem> subsystems);

    const std::vector<Subsystem>& subsystems() const { return subsystems_; }
    int size() const { return static_cast<int>(subsystems_.size()); }
    int total_dim() const { return total_dim_; }
    int position_of(const std::string& label) const;
    bool has_label(const std::string& label) const;
    bool operator==(const HilbertSpace& other) const;

  private:
    std::vector<Subsystem> subsystems_;
    int total_dim_ = 1;
};

using SpacePtr = std::shared_ptr<const HilbertSpace>;

SpacePtr make_space(std::vector<HilbertSpace::Subsystem> subsystems);
SpacePtr single_mode_space(const std::string& label, int dim);
SpacePtr scalar_space();

// Merge keeps the subsystems of `a` in order and appends the subsystems of
// `b` that `a` does not contain. Shared labels must agree on the dimension.
SpacePtr merge_spaces(const SpacePtr& a, const SpacePtr& b);

struct Operator {
    SpacePtr space;
    Matrix mat;

    int dim() const { return static_cast<int>(mat.rows()); }
    Operator dag() const { return {space, mat.adjoint()}; }
    bool is_hermitian(double tol = 1e-12) const;
};

struct StateVector {
    SpacePtr space;
    Vector amps;

    bool is_normalized(double tol = 1e-12) const;
};

struct DensityMatrix {
    SpacePtr space;
    Matrix mat;

    double trace_real() const { return mat.trace().real(); }
    bool is_hermitian(double tol = 1e-10) const;
};

Operator operator+(const Operator& a, const Operator& b);
Operator operator-(const Operator& a, const Operator& b);
Operator operator*(const Operator& a, const Operator& b);
Operator operator*(Complex scalar, const Operator& a);

Operator identity_operator(const SpacePtr& space);

// Lowering operator on an n_max-level truncated Fock space,
// entries (a)_{n-1,n} = sqrt(n). Throws DimensionError for n_max < 2.
Operator truncated_boson(int n_max, const std::string& label = "mode");

// Places `mat` (given on the subsystems at `positions` of `space`, in that
// order) into the full space, identity on all other subsystems.
Matrix embed_matrix(const Matrix& mat, const HilbertSpace& space,
                    const std::vector<int>& positions);

// op ⊗ identities in the canonical subsystem order of `space`.
Operator embed(const Operator& op, const SpacePtr& space,
               const std::string& target_label);

DensityMatrix pure_density(const StateVector& psi);
StateVector basis_state(const SpacePtr& space, int index);

// D[L]rho = L rho L† − ½{L†L, rho}
Matrix dissipator_apply(const Operator& lindblad, const DensityMatrix& rho);
Matrix dissipator_apply(const Matrix& lindblad, const Matrix& rho);

Complex expectation(const Operator& op, const StateVector& psi);
Complex expectation(const Operator& op, const DensityMatrix& rho);

Matrix partial_trace(const Matrix& rho, const HilbertSpace& space,
                     const std::vector<int>& keep_positions);

}  // namespace qnet

#endif
