#ifndef KP_TYPES_HPP
#define KP_TYPES_HPP

#include <Eigen/Dense>

#include <complex>

namespace kp {

template <typename Scalar>
using RealArray = Eigen::ArrayX<Scalar>;

template <typename Scalar>
using ComplexArray = Eigen::ArrayX<std::complex<Scalar>>;

using RealArrayd = RealArray<double>;
using ComplexArrayd = ComplexArray<double>;

} // namespace kp

#endif // KP_TYPES_HPP
