#pragma once

#include <complex>
#include <string>

#include <gmpxx.h>

namespace wpd {

using Rational = mpq_class;
using Complex = std::complex<double>;

/// Exact complex number with rational real and imaginary parts.
class GaussRational {
public:
  GaussRational() = default;
  GaussRational(long v) : re_(v), im_(0) {}  // NOLINT(implicit)
  GaussRational(Rational re, Rational im = 0) : re_(std::move(re)), im_(std::move(im)) {
    re_.canonicalize();
    im_.canonicalize();
  }

  static GaussRational imaginary_unit() { return {Rational(0), Rational(1)}; }

  const Rational& re() const { return re_; }
  const Rational& im() const { return im_; }

  bool is_zero() const { return sgn(re_) == 0 && sgn(im_) == 0; }
  bool is_one() const { return re_ == 1 && sgn(im_) == 0; }
  bool is_real() const { return sgn(im_) == 0; }
  bool is_integer() const { return is_real() && re_.get_den() == 1; }

  GaussRational conj() const { return {re_, -im_}; }
  /// Throws std::domain_error on zero.
  GaussRational inverse() const;
  GaussRational pow(long n) const;

  Complex to_complex() const { return {re_.get_d(), im_.get_d()}; }

  friend GaussRational operator+(const GaussRational& a, const GaussRational& b) {
    return {a.re_ + b.re_, a.im_ + b.im_};
  }
  friend GaussRational operator-(const GaussRational& a, const GaussRational& b) {
    return {a.re_ - b.re_, a.im_ - b.im_};
  }
  friend GaussRational operator*(const GaussRational& a, const GaussRational& b) {
    return {a.re_ * b.re_ - a.im_ * b.im_, a.re_ * b.im_ + a.im_ * b.re_};
  }
  friend GaussRational operator/(const GaussRational& a, const GaussRational& b) {
    return a * b.inverse();
  }
  GaussRational operator-() const { return {-re_, -im_}; }
  GaussRational& operator+=(const GaussRational& o) { return *this = *this + o; }
  GaussRational& operator*=(const GaussRational& o) { return *this = *this * o; }

  friend bool operator==(const GaussRational& a, const GaussRational& b) {
    return a.re_ == b.re_ && a.im_ == b.im_;
  }

  /// Stable textual key, "re,im" with each part as p/q.
  std::string key() const;

private:
  Rational re_{0};
  Rational im_{0};
};

std::string rational_to_string(const Rational& q);

/// Exact k-th root of a non-negative rational when it exists.
bool exact_root(const Rational& value, unsigned long k, Rational& out);

}  // namespace wpd
