#include "wpd/scalar.hpp"

#include <stdexcept>

namespace wpd {

GaussRational GaussRational::inverse() const {
  if (is_zero()) throw std::domain_error("division by exact zero");
  Rational norm = re_ * re_ + im_ * im_;
  return {re_ / norm, -im_ / norm};
}

GaussRational GaussRational::pow(long n) const {
  if (n < 0) return inverse().pow(-n);
  GaussRational result(1);
  GaussRational base = *this;
  while (n > 0) {
    if (n & 1) result = result * base;
    base = base * base;
    n >>= 1;
  }
  return result;
}

std::string rational_to_string(const Rational& q) {
  if (q.get_den() == 1) return q.get_num().get_str();
  return q.get_num().get_str() + "/" + q.get_den().get_str();
}

std::string GaussRational::key() const {
  return rational_to_string(re_) + "," + rational_to_string(im_);
}

namespace {

bool exact_int_root(const mpz_class& v, unsigned long k, mpz_class& out) {
  if (sgn(v) < 0) return false;
  return mpz_root(out.get_mpz_t(), v.get_mpz_t(), k) != 0;
}

}  // namespace

bool exact_root(const Rational& value, unsigned long k, Rational& out) {
  mpz_class num, den;
  if (!exact_int_root(value.get_num(), k, num)) return false;
  if (!exact_int_root(value.get_den(), k, den)) return false;
  out = Rational(num, den);
  out.canonicalize();
  return true;
}

}  // namespace wpd
