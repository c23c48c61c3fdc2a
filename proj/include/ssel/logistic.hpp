#pragma once

#include <span>
#include <vector>

#include "ssel/binary_io.hpp"
#include "ssel/gbdt.hpp"

namespace ssel {

struct LogisticParams {
  double l2 = 1e-3;
  std::uint32_t max_iter = 50;
  double tolerance = 1e-10;
};

// L2-regularized logistic regression over sign-preserving log1p transformed,
// standardized features. A default-constructed classifier has zero weights and
// answers 0.5 everywhere.
class SurgeClassifier {
 public:
  SurgeClassifier();

  static SurgeClassifier fit(std::span<const FeatureRow> x, const std::vector<bool>& labels,
                             const LogisticParams& params = {});

  double probability(const FeatureRow& x) const;

  // weights()[0] is the bias, then one weight per feature.
  const std::vector<double>& weights() const { return weights_; }

  void write(ByteWriter& w) const;
  static SurgeClassifier read(ByteReader& r);

  bool operator==(const SurgeClassifier&) const = default;

 private:
  std::vector<double> transform(const FeatureRow& x) const;

  std::vector<double> weights_;
  std::vector<double> mean_;
  std::vector<double> scale_;
};

// Solves the symmetric positive definite system a x = b in place (Cholesky).
// Returns false when the matrix is not positive definite.
bool solve_spd(std::vector<double>& a, std::vector<double>& b, std::size_t n);

}  // namespace ssel
