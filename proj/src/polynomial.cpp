#include "damsim/polynomial.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace damsim {

std::complex<double> Polynomial::eval(std::complex<double> s) const {
    std::complex<double> acc = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * s + *it;
    return acc;
}

double Polynomial::eval(double s) const {
    double acc = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * s + *it;
    return acc;
}

Polynomial Polynomial::derivative() const {
    if (c_.size() <= 1) return Polynomial({0.0});
    std::vector<double> d(c_.size() - 1);
    for (size_t i = 1; i < c_.size(); ++i) d[i - 1] = c_[i] * static_cast<double>(i);
    return Polynomial(std::move(d));
}

Polynomial Polynomial::scaled_argument(double scale) const {
    std::vector<double> d = c_;
    double f = 1.0;
    for (size_t i = 0; i < d.size(); ++i) {
        d[i] *= f;
        f *= scale;
    }
    return Polynomial(std::move(d));
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
    if (c_.empty() || o.c_.empty()) return Polynomial();
    std::vector<double> d(c_.size() + o.c_.size() - 1, 0.0);
    for (size_t i = 0; i < c_.size(); ++i)
        for (size_t j = 0; j < o.c_.size(); ++j) d[i + j] += c_[i] * o.c_[j];
    return Polynomial(std::move(d));
}

Polynomial Polynomial::operator*(double k) const {
    std::vector<double> d = c_;
    for (auto& x : d) x *= k;
    return Polynomial(std::move(d));
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
    std::vector<double> d(std::max(c_.size(), o.c_.size()), 0.0);
    for (size_t i = 0; i < c_.size(); ++i) d[i] += c_[i];
    for (size_t i = 0; i < o.c_.size(); ++i) d[i] += o.c_[i];
    return Polynomial(std::move(d));
}

void Polynomial::trim(double rel_tol) {
    double maxc = 0.0;
    for (double x : c_) maxc = std::max(maxc, std::abs(x));
    while (c_.size() > 1 && std::abs(c_.back()) <= rel_tol * maxc) c_.pop_back();
}

std::vector<std::complex<double>> polynomial_roots(const Polynomial& p) {
    std::vector<double> c = p.coeffs();
    while (c.size() > 1 && c.back() == 0.0) c.pop_back();
    if (c.size() <= 1) throw PolynomialError("constant polynomial has no roots");
    const int n = static_cast<int>(c.size()) - 1;

    // condition the companion matrix by rescaling the variable so coefficient
    // magnitudes are balanced
    double scale = std::pow(std::abs(c.front() / c.back()), 1.0 / n);
    if (!(scale > 0.0) || !std::isfinite(scale)) scale = 1.0;
    Polynomial ps = p.scaled_argument(scale);
    std::vector<double> cs = ps.coeffs();
    while (cs.size() > 1 && cs.back() == 0.0) cs.pop_back();
    if (static_cast<int>(cs.size()) - 1 != n) {
        scale = 1.0;
        cs = c;
    }

    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i) companion(i, n - 1) = -cs[i] / cs[n];
    Eigen::EigenSolver<Eigen::MatrixXd> es(companion, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
        throw PolynomialError("companion eigenvalue iteration failed");

    Polynomial dp = p.derivative();
    std::vector<std::complex<double>> roots;
    roots.reserve(n);
    for (int i = 0; i < n; ++i) {
        std::complex<double> r = es.eigenvalues()(i) * scale;
        // one Newton step in the original variable
        std::complex<double> f = p.eval(r), df = dp.eval(r);
        if (std::abs(df) > 0.0) {
            std::complex<double> r2 = r - f / df;
            if (std::abs(p.eval(r2)) < std::abs(f)) r = r2;
        }
        roots.push_back(r);
    }
    std::sort(roots.begin(), roots.end(), [](auto a, auto b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    return roots;
}

}  // namespace damsim
