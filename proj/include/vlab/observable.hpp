#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <utility>

#include "vlab/hermite.hpp"

namespace vlab {

// Named scalar observable G on R^n. Built-ins cover the configuration
// surface: Hermite polynomials, monomial tables, the Hermite generating
// function and sin/cos composites.
struct Observable {
  std::string name;
  int dim = 1;  // minimal input dimension
  std::function<double(const Eigen::VectorXd&)> fn;

  double operator()(const Eigen::VectorXd& y) const { return fn(y); }

  static Observable hermite(MultiIndex l) {
    Observable o;
    o.name = "hermite";
    o.dim = std::max(l.dim(), 1);
    o.fn = [l = std::move(l)](const Eigen::VectorXd& y) {
      return hermite_multi(l, y.head(l.dim()));
    };
    return o;
  }

  // sum over the table of c * prod_i y_i^{l_i}
  static Observable polynomial(std::map<MultiIndex, double> monomials) {
    Observable o;
    o.name = "polynomial";
    for (const auto& [l, c] : monomials) o.dim = std::max(o.dim, l.dim());
    o.fn = [m = std::move(monomials)](const Eigen::VectorXd& y) {
      double s = 0.0;
      for (const auto& [l, c] : m) {
        double p = c;
        for (int i = 0; i < l.dim(); ++i)
          for (int k = 0; k < l.entries[i]; ++k) p *= y(i);
        s += p;
      }
      return s;
    };
    return o;
  }

  // exp(a y_axis - a^2/2), whose Hermite coefficients are a^m / m!
  static Observable generating(double a, int axis = 0) {
    Observable o;
    o.name = "generating";
    o.dim = axis + 1;
    o.fn = [a, axis](const Eigen::VectorXd& y) {
      return std::exp(a * y(axis) - 0.5 * a * a);
    };
    return o;
  }

  static Observable sine(double freq = 1.0, int axis = 0) {
    Observable o;
    o.name = "sin";
    o.dim = axis + 1;
    o.fn = [freq, axis](const Eigen::VectorXd& y) {
      return std::sin(freq * y(axis));
    };
    return o;
  }

  static Observable cosine(double freq = 1.0, int axis = 0) {
    Observable o;
    o.name = "cos";
    o.dim = axis + 1;
    o.fn = [freq, axis](const Eigen::VectorXd& y) {
      return std::cos(freq * y(axis));
    };
    return o;
  }

  static Observable zero() {
    Observable o;
    o.name = "zero";
    o.fn = [](const Eigen::VectorXd&) { return 0.0; };
    return o;
  }
};

}  // namespace vlab
