#include "reslab/multiset_space.hpp"

#include <algorithm>
#include <cmath>

#include "reslab/assignment.hpp"
#include "reslab/errors.hpp"

namespace reslab {

namespace {

bool complex_less(Complex a, Complex b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

}  // namespace

double phi_norm(std::span<const double> values, PNorm p) {
  if (values.empty()) return 0.0;
  std::vector<double> v(values.begin(), values.end());
  for (double x : v)
    if (!(x >= 0.0)) throw RejectedInput("phi_norm: values must be >= 0");
  // Summing in ascending order keeps the result independent of input
  // ordering, so independently computed matchings agree bit for bit.
  std::sort(v.begin(), v.end());
  switch (p) {
    case PNorm::One: {
      double s = 0.0;
      for (double x : v) s += x;
      return s;
    }
    case PNorm::Two: {
      double s = 0.0;
      for (double x : v) s += x * x;
      return std::sqrt(s);
    }
    case PNorm::Inf:
      return v.back();
  }
  return 0.0;
}

BasedMultiset::BasedMultiset(std::vector<std::pair<Complex, int>> support) {
  for (const auto& [value, mult] : support) {
    if (value == Complex{0.0, 0.0})
      throw RejectedInput("multiset: support values must be nonzero");
    if (mult < 1) throw RejectedInput("multiset: multiplicities must be >= 1");
  }
  std::sort(support.begin(), support.end(),
            [](const auto& a, const auto& b) {
              return complex_less(a.first, b.first);
            });
  for (const auto& [value, mult] : support) {
    if (!support_.empty() && support_.back().first == value)
      support_.back().second += mult;
    else
      support_.emplace_back(value, mult);
  }
}

BasedMultiset BasedMultiset::from_values(std::span<const Complex> values,
                                         double base_tol) {
  std::vector<std::pair<Complex, int>> support;
  for (Complex v : values) {
    if (std::abs(v) <= base_tol) continue;
    support.emplace_back(v, 1);
  }
  return BasedMultiset(std::move(support));
}

std::vector<Complex> BasedMultiset::expanded() const {
  std::vector<Complex> out;
  for (const auto& [value, mult] : support_)
    out.insert(out.end(), mult, value);
  return out;
}

int BasedMultiset::total_mult() const {
  int n = 0;
  for (const auto& [value, mult] : support_) n += mult;
  return n;
}

double multiset_distance(const BasedMultiset& s, const BasedMultiset& t,
                         PNorm p) {
  const std::vector<Complex> a = s.expanded();
  const std::vector<Complex> b = t.expanded();
  const int m = static_cast<int>(a.size());
  const int n = static_cast<int>(b.size());
  const int size = m + n;
  if (size == 0) return 0.0;

  // Rows: m support points of s then n base copies. Columns: n support
  // points of t then m base copies. Base pairs cost nothing, so padding to
  // a common size never distorts the optimum.
  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(size, size);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      const Complex from = i < m ? a[i] : Complex{0.0, 0.0};
      const Complex to = j < n ? b[j] : Complex{0.0, 0.0};
      dist(i, j) = std::abs(from - to);
    }
  }

  if (p == PNorm::Inf) return bottleneck_value(dist);

  Eigen::MatrixXd cost = dist;
  if (p == PNorm::Two) cost = dist.array().square();
  const Assignment best = solve_assignment(cost);
  std::vector<double> matched;
  matched.reserve(size);
  for (int i = 0; i < size; ++i) matched.push_back(dist(i, best.match[i]));
  return phi_norm(matched, p);
}

}  // namespace reslab
