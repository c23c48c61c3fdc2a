#include "ssel/logistic.hpp"

#include <algorithm>
#include <cmath>

namespace ssel {

namespace {

double squash(double v) { return std::copysign(std::log1p(std::abs(v)), v); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

SurgeClassifier::SurgeClassifier()
    : weights_(kFeatureCount + 1, 0.0), mean_(kFeatureCount, 0.0), scale_(kFeatureCount, 1.0) {}

std::vector<double> SurgeClassifier::transform(const FeatureRow& x) const {
  std::vector<double> z(kFeatureCount + 1);
  z[0] = 1.0;
  for (std::size_t f = 0; f < kFeatureCount; ++f) z[f + 1] = (squash(x[f]) - mean_[f]) / scale_[f];
  return z;
}

double SurgeClassifier::probability(const FeatureRow& x) const {
  const auto z = transform(x);
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += weights_[i] * z[i];
  // Keep strictly inside (0,1) even for extreme inputs.
  return std::clamp(sigmoid(s), 1e-12, 1.0 - 1e-12);
}

bool solve_spd(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0)) return false;
    d = std::sqrt(d);
    a[j * n + j] = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / d;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
    b[i] = s / a[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[k * n + i] * b[k];
    b[i] = s / a[i * n + i];
  }
  return true;
}

SurgeClassifier SurgeClassifier::fit(std::span<const FeatureRow> x, const std::vector<bool>& labels,
                                     const LogisticParams& params) {
  if (x.size() != labels.size()) throw Error(ErrorCode::InvalidConfig, "feature and label lengths differ");
  if (x.empty()) throw Error(ErrorCode::EmptyInput, "cannot fit a classifier on no samples");
  SurgeClassifier model;
  const std::size_t n = x.size();
  const double count = static_cast<double>(n);
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    double s = 0.0, ss = 0.0;
    for (const auto& row : x) {
      const double v = squash(row[f]);
      s += v;
      ss += v * v;
    }
    const double mean = s / count;
    const double var = std::max(0.0, ss / count - mean * mean);
    model.mean_[f] = mean;
    model.scale_[f] = var > 1e-18 ? std::sqrt(var) : 1.0;
  }

  std::vector<std::vector<double>> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = model.transform(x[i]);
  const std::size_t d = kFeatureCount + 1;
  auto& beta = model.weights_;

  // Newton-Raphson (IRLS) on the penalized log-likelihood; the bias is not penalized.
  for (std::uint32_t it = 0; it < params.max_iter; ++it) {
    std::vector<double> h(d * d, 0.0), g(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += beta[k] * z[i][k];
      const double p = sigmoid(s);
      const double wgt = std::max(p * (1.0 - p), 1e-12);
      const double err = (labels[i] ? 1.0 : 0.0) - p;
      for (std::size_t a = 0; a < d; ++a) {
        g[a] += err * z[i][a];
        const double za = wgt * z[i][a];
        for (std::size_t b = 0; b <= a; ++b) h[a * d + b] += za * z[i][b];
      }
    }
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b < a; ++b) h[b * d + a] = h[a * d + b];
    }
    const double penalty = params.l2 * count;
    for (std::size_t a = 1; a < d; ++a) {
      g[a] -= penalty * beta[a];
      h[a * d + a] += penalty;
    }
    h[0] += 1e-9 * count;
    if (!solve_spd(h, g, d)) break;
    double step = 0.0;
    for (std::size_t a = 0; a < d; ++a) step = std::max(step, std::abs(g[a]));
    // Damp long Newton steps on nearly separable data.
    const double damp = step > 4.0 ? 4.0 / step : 1.0;
    for (std::size_t a = 0; a < d; ++a) beta[a] += damp * g[a];
    if (step < params.tolerance) break;
  }
  return model;
}

void SurgeClassifier::write(ByteWriter& w) const {
  w.u32(static_cast<std::uint32_t>(weights_.size()));
  for (double v : weights_) w.f64(v);
  for (double v : mean_) w.f64(v);
  for (double v : scale_) w.f64(v);
}

SurgeClassifier SurgeClassifier::read(ByteReader& r) {
  SurgeClassifier m;
  const auto d = r.u32();
  if (d != kFeatureCount + 1) r.fail("classifier dimension does not match feature count");
  for (auto& v : m.weights_) v = r.f64();
  for (auto& v : m.mean_) v = r.f64();
  for (auto& v : m.scale_) v = r.f64();
  return m;
}

}  // namespace ssel
