#ifndef QNET_TYPES_HPP
#define QNET_TYPES_HPP

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qnet {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Matrix2 = Eigen::Matrix2cd;
using Vector2 = Eigen::Vector2cd;
using RowVector2 = Eigen::RowVector2cd;

inline constexpr Complex kImag{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StiffnessError : ConvergenceError {
    using ConvergenceError::ConvergenceError;
};

struct MultiplicityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SizeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace qnet

#endif
