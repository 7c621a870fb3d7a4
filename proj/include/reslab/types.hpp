#pragma once

#include <complex>

#include <Eigen/Dense>

namespace reslab {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};

// Axis-aligned closed rectangle in the complex plane.
struct Rect {
  double re_lo = 0.0;
  double re_hi = 0.0;
  double im_lo = 0.0;
  double im_hi = 0.0;

  bool contains(Complex z) const {
    return z.real() >= re_lo && z.real() <= re_hi && z.imag() >= im_lo &&
           z.imag() <= im_hi;
  }
  double width() const { return re_hi - re_lo; }
  double height() const { return im_hi - im_lo; }
  Complex center() const {
    return {0.5 * (re_lo + re_hi), 0.5 * (im_lo + im_hi)};
  }
};

bool is_hermitian(const CMatrix& m, double tol);

}  // namespace reslab
