#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <stdexcept>
#include <string>

namespace framedn {

using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
using Index = Eigen::Index;

/// Base class for every error thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error { using Error::Error; };
struct RankDeficient : Error { using Error::Error; };
struct InvalidLattice : Error { using Error::Error; };
struct NotOrthonormal : Error { using Error::Error; };
struct InvalidLength : Error { using Error::Error; };
struct UnknownSignal : Error { using Error::Error; };
struct DegenerateSignal : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct UnsupportedFormat : Error { using Error::Error; };
struct OutOfRange : Error { using Error::Error; };
struct SolveFailure : Error { using Error::Error; };
struct InvalidN : Error { using Error::Error; };
struct WeightSumViolation : Error { using Error::Error; };
struct DegenerateQuadratic : Error { using Error::Error; };
struct AllZeroPrior : Error { using Error::Error; };
struct GradientMissing : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

}  // namespace framedn
