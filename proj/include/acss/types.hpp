#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace acss {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

// Every stochastic routine draws from one of these; never share one across threads.
using Rng = std::mt19937_64;

// Parameter outside the model's open domain, or a malformed model/penalty.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Design matrix (or its restriction) lacks full column rank.
class SingularError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace acss
