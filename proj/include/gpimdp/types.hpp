#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace gpimdp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

using ActionId = int;
using StateId = int;

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace gpimdp
