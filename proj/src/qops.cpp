#include "qnet/qops.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace qnet {

HilbertSpace::HilbertSpace(std::vector<Subsystem> subsystems)
    : subsystems_(std::move(subsystems)) {
    std::set<std::string> seen;
    for (const auto& s : subsystems_) {
        if (s.dim < 1) {
            throw DimensionError("HilbertSpace: subsystem dimension must be >= 1");
        }
        if (!seen.insert(s.label).second) {
            throw std::invalid_argument("HilbertSpace: duplicate label '" + s.label + "'");
        }
        total_dim_ *= s.dim;
    }
}

int HilbertSpace::position_of(const std::string& label) const {
    for (int i = 0; i < size(); ++i) {
        if (subsystems_[i].label == label) return i;
    }
    throw std::invalid_argument("HilbertSpace: unknown label '" + label + "'");
}

bool HilbertSpace::has_label(const std::string& label) const {
    return std::any_of(subsystems_.begin(), subsystems_.end(),
                       [&](const Subsystem& s) { return s.label == label; });
}

bool HilbertSpace::operator==(const HilbertSpace& other) const {
    if (size() != other.size()) return false;
    for (int i = 0; i < size(); ++i) {
        if (subsystems_[i].label != other.subsystems_[i].label ||
            subsystems_[i].dim != other.subsystems_[i].dim) {
            return false;
        }
    }
    return true;
}

SpacePtr make_space(std::vector<HilbertSpace::Subsystem> subsystems) {
    return std::make_shared<HilbertSpace>(std::move(subsystems));
}

SpacePtr single_mode_space(const std::string& label, int dim) {
    return make_space({{label, dim}});
}

SpacePtr scalar_space() {
    static const SpacePtr space = std::make_shared<HilbertSpace>();
    return space;
}

SpacePtr merge_spaces(const SpacePtr& a, const SpacePtr& b) {
    if (!a || a->size() == 0) return b ? b : scalar_space();
    if (!b || b->size() == 0) return a;
    if (*a == *b) return a;
    std::vector<HilbertSpace::Subsystem> merged = a->subsystems();
    for (const auto& s : b->subsystems()) {
        if (a->has_label(s.label)) {
            if (a->subsystems()[a->position_of(s.label)].dim != s.dim) {
                throw DimensionError("merge_spaces: label '" + s.label +
                                     "' has conflicting dimensions");
            }
        } else {
            merged.push_back(s);
        }
    }
    return make_space(std::move(merged));
}

namespace {

void require_same_space(const Operator& a, const Operator& b) {
    if (!(*a.space == *b.space)) {
        throw DimensionError("operator spaces do not match");
    }
}

}  // namespace

bool Operator::is_hermitian(double tol) const {
    return (mat - mat.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

bool StateVector::is_normalized(double tol) const {
    return std::abs(amps.norm() - 1.0) <= tol;
}

bool DensityMatrix::is_hermitian(double tol) const {
    return (mat - mat.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

Operator operator+(const Operator& a, const Operator& b) {
    require_same_space(a, b);
    return {a.space, a.mat + b.mat};
}

Operator operator-(const Operator& a, const Operator& b) {
    require_same_space(a, b);
    return {a.space, a.mat - b.mat};
}

Operator operator*(const Operator& a, const Operator& b) {
    require_same_space(a, b);
    return {a.space, a.mat * b.mat};
}

Operator operator*(Complex scalar, const Operator& a) {
    return {a.space, scalar * a.mat};
}

Operator identity_operator(const SpacePtr& space) {
    const int d = space->total_dim();
    return {space, Matrix::Identity(d, d)};
}

Operator truncated_boson(int n_max, const std::string& label) {
    if (n_max < 2) {
        throw DimensionError("truncated_boson: n_max must be >= 2");
    }
    Matrix a = Matrix::Zero(n_max, n_max);
    for (int n = 1; n < n_max; ++n) {
        a(n - 1, n) = std::sqrt(static_cast<double>(n));
    }
    return {single_mode_space(label, n_max), a};
}

Matrix embed_matrix(const Matrix& mat, const HilbertSpace& space,
                    const std::vector<int>& positions) {
    const int n_sub = space.size();
    for (size_t i = 0; i < positions.size(); ++i) {
        for (size_t j = i + 1; j < positions.size(); ++j) {
            if (positions[i] == positions[j]) {
                throw std::invalid_argument("embed_matrix: duplicate position");
            }
        }
    }
    int op_dim = 1;
    for (int p : positions) {
        if (p < 0 || p >= n_sub) {
            throw std::invalid_argument("embed_matrix: position out of range");
        }
        op_dim *= space.subsystems()[p].dim;
    }
    if (mat.rows() != op_dim || mat.cols() != op_dim) {
        throw DimensionError("embed_matrix: matrix dimension does not match target subsystems");
    }

    // Strides of each subsystem index in the flattened row/column index,
    // with the first declared subsystem varying slowest.
    std::vector<int> stride(n_sub, 1);
    for (int i = n_sub - 2; i >= 0; --i) {
        stride[i] = stride[i + 1] * space.subsystems()[i + 1].dim;
    }
    std::vector<int> op_stride(positions.size(), 1);
    for (int i = static_cast<int>(positions.size()) - 2; i >= 0; --i) {
        op_stride[i] = op_stride[i + 1] * space.subsystems()[positions[i + 1]].dim;
    }

    std::vector<int> rest;
    for (int i = 0; i < n_sub; ++i) {
        if (std::find(positions.begin(), positions.end(), i) == positions.end()) {
            rest.push_back(i);
        }
    }
    int rest_dim = 1;
    for (int p : rest) rest_dim *= space.subsystems()[p].dim;

    const int total = space.total_dim();
    Matrix out = Matrix::Zero(total, total);
    for (int rest_idx = 0; rest_idx < rest_dim; ++rest_idx) {
        int base = 0;
        int rem = rest_idx;
        for (int i = static_cast<int>(rest.size()) - 1; i >= 0; --i) {
            const int d = space.subsystems()[rest[i]].dim;
            base += (rem % d) * stride[rest[i]];
            rem /= d;
        }
        for (int r = 0; r < op_dim; ++r) {
            int row = base;
            int rr = r;
            for (int i = static_cast<int>(positions.size()) - 1; i >= 0; --i) {
                const int d = space.subsystems()[positions[i]].dim;
                row += (rr % d) * stride[positions[i]];
                rr /= d;
            }
            for (int c = 0; c < op_dim; ++c) {
                const Complex v = mat(r, c);
                if (v == Complex(0.0, 0.0)) continue;
                int col = base;
                int cc = c;
                for (int i = static_cast<int>(positions.size()) - 1; i >= 0; --i) {
                    const int d = space.subsystems()[positions[i]].dim;
                    col += (cc % d) * stride[positions[i]];
                    cc /= d;
                }
                out(row, col) = v;
            }
        }
    }
    return out;
}

Operator embed(const Operator& op, const SpacePtr& space,
               const std::string& target_label) {
    const int pos = space->position_of(target_label);
    const int local_dim = space->subsystems()[pos].dim;
    if (op.dim() != local_dim) {
        throw DimensionError("embed: operator dimension does not match subsystem '" +
                             target_label + "'");
    }
    return {space, embed_matrix(op.mat, *space, {pos})};
}

DensityMatrix pure_density(const StateVector& psi) {
    return {psi.space, psi.amps * psi.amps.adjoint()};
}

StateVector basis_state(const SpacePtr& space, int index) {
    Vector v = Vector::Zero(space->total_dim());
    v(index) = 1.0;
    return {space, v};
}

Matrix dissipator_apply(const Matrix& lindblad, const Matrix& rho) {
    if (lindblad.rows() != rho.rows()) {
        throw DimensionError("dissipator_apply: dimension mismatch");
    }
    const Matrix ldl = lindblad.adjoint() * lindblad;
    return lindblad * rho * lindblad.adjoint() - 0.5 * (ldl * rho + rho * ldl);
}

Matrix dissipator_apply(const Operator& lindblad, const DensityMatrix& rho) {
    return dissipator_apply(lindblad.mat, rho.mat);
}

Complex expectation(const Operator& op, const StateVector& psi) {
    if (op.dim() != psi.amps.size()) {
        throw DimensionError("expectation: dimension mismatch");
    }
    return psi.amps.dot(op.mat * psi.amps);
}

Complex expectation(const Operator& op, const DensityMatrix& rho) {
    if (op.dim() != rho.mat.rows()) {
        throw DimensionError("expectation: dimension mismatch");
    }
    return (op.mat * rho.mat).trace();
}

Matrix partial_trace(const Matrix& rho, const HilbertSpace& space,
                     const std::vector<int>& keep_positions) {
    const int n_sub = space.size();
    std::vector<int> stride(n_sub, 1);
    for (int i = n_sub - 2; i >= 0; --i) {
        stride[i] = stride[i + 1] * space.subsystems()[i + 1].dim;
    }
    std::vector<int> rest;
    for (int i = 0; i < n_sub; ++i) {
        if (std::find(keep_positions.begin(), keep_positions.end(), i) ==
            keep_positions.end()) {
            rest.push_back(i);
        }
    }
    int keep_dim = 1;
    for (int p : keep_positions) keep_dim *= space.subsystems()[p].dim;
    int rest_dim = 1;
    for (int p : rest) rest_dim *= space.subsystems()[p].dim;

    auto full_index = [&](int keep_idx, int rest_idx) {
        int idx = 0;
        int rem = keep_idx;
        for (int i = static_cast<int>(keep_positions.size()) - 1; i >= 0; --i) {
            const int d = space.subsystems()[keep_positions[i]].dim;
            idx += (rem % d) * stride[keep_positions[i]];
            rem /= d;
        }
        rem = rest_idx;
        for (int i = static_cast<int>(rest.size()) - 1; i >= 0; --i) {
            const int d = space.subsystems()[rest[i]].dim;
            idx += (rem % d) * stride[rest[i]];
            rem /= d;
        }
        return idx;
    };

    Matrix out = Matrix::Zero(keep_dim, keep_dim);
    for (int r = 0; r < keep_dim; ++r) {
        for (int c = 0; c < keep_dim; ++c) {
            Complex sum = 0.0;
            for (int t = 0; t < rest_dim; ++t) {
                sum += rho(full_index(r, t), full_index(c, t));
            }
            out(r, c) = sum;
        }
    }
    return out;
}

}  // namespace qnet
