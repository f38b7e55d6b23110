#ifndef GPH_TYPES_HPP
#define GPH_TYPES_HPP

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace gph {

/// Feature storage is row-major so a data point is a contiguous span.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

using ItemId = std::uint64_t;
using Index = Eigen::Index;

} // namespace gph

#endif // GPH_TYPES_HPP
