#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

namespace damsim {

struct PolynomialError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Real polynomial, coefficients in ascending powers of s.
class Polynomial {
  public:
    Polynomial() = default;
    explicit Polynomial(std::vector<double> coeffs) : c_(std::move(coeffs)) { trim(); }

    static Polynomial one() { return Polynomial({1.0}); }

    const std::vector<double>& coeffs() const { return c_; }
    int degree() const { return static_cast<int>(c_.size()) - 1; }
    bool empty() const { return c_.empty(); }

    std::complex<double> eval(std::complex<double> s) const;
    double eval(double s) const;
    Polynomial derivative() const;
    // p(s) with s = scale * z, expressed in z (used to condition root finding)
    Polynomial scaled_argument(double scale) const;

    Polynomial operator*(const Polynomial& o) const;
    Polynomial operator*(double k) const;
    Polynomial operator+(const Polynomial& o) const;

    void trim(double rel_tol = 0.0);

  private:
    std::vector<double> c_;
};

// Roots via balanced companion-matrix eigenvalues plus one Newton polish step
// in the original variable. Leading coefficient must be nonzero.
std::vector<std::complex<double>> polynomial_roots(const Polynomial& p);

struct RationalTransfer {
    Polynomial num;
    Polynomial den;

    std::complex<double> eval(std::complex<double> s) const {
        return num.eval(s) / den.eval(s);
    }
};

}  // namespace damsim
