#include "eigenlocus/gaussian_lab.hpp"

#include <cmath>
#include <numbers>

namespace eigenlocus {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

NormalStream::NormalStream(std::uint64_t seed, Stream stream)
    : engine_(splitmix64(splitmix64(seed) ^ (static_cast<std::uint64_t>(stream) + 1))) {}

double NormalStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double NormalStream::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(angle);
  has_spare_ = true;
  return r * std::cos(angle);
}

void validate(const GaussianClassSpec& spec) {
  const Index d = spec.mean.size();
  if (d == 0) throw InvalidInput("class mean is empty");
  if (spec.covariance.rows() != d || spec.covariance.cols() != d)
    throw DimensionMismatch("covariance shape does not match the mean");
  if (!spec.covariance.isApprox(spec.covariance.transpose(), 1e-12))
    throw InvalidInput("covariance is not symmetric");
}

Eigen::MatrixXd cholesky_factor(const GaussianClassSpec& spec) {
  validate(spec);
  Eigen::LLT<Eigen::MatrixXd> llt(spec.covariance);
  if (llt.info() != Eigen::Success) throw InvalidInput("covariance is not positive definite");
  return llt.matrixL();
}

Dataset sample_dataset(const GaussianClassSpec& spec1, const GaussianClassSpec& spec2, Index n1,
                       Index n2, std::uint64_t seed, Stream stream) {
  if (spec1.mean.size() != spec2.mean.size())
    throw DimensionMismatch("class specs differ in dimension");
  if (n1 < 0 || n2 < 0) throw InvalidInput("sample counts must be nonnegative");
  const Eigen::MatrixXd l1 = cholesky_factor(spec1);
  const Eigen::MatrixXd l2 = cholesky_factor(spec2);
  const Index d = spec1.mean.size();

  Dataset ds;
  ds.seed = seed;
  ds.n1 = n1;
  ds.n2 = n2;
  ds.samples.points.resize(n1 + n2, d);
  ds.samples.labels.resize(n1 + n2);
  NormalStream normal(seed, stream);
  Eigen::VectorXd z(d);
  for (Index i = 0; i < n1 + n2; ++i) {
    for (Index k = 0; k < d; ++k) z(k) = normal.next();
    const bool first = i < n1;
    const auto& spec = first ? spec1 : spec2;
    ds.samples.points.row(i) = (spec.mean + (first ? l1 : l2) * z).transpose();
    ds.samples.labels(i) = first ? 1.0 : -1.0;
  }
  return ds;
}

Dataset sample_test_set(const GaussianClassSpec& spec1, const GaussianClassSpec& spec2,
                        Index n_test, std::uint64_t seed) {
  return sample_dataset(spec1, spec2, (n_test + 1) / 2, n_test / 2, seed, Stream::test);
}

namespace {

struct Inverse {
  Eigen::MatrixXd inv;
  double logdet = 0;
};

Inverse invert(const GaussianClassSpec& spec) {
  validate(spec);
  Eigen::LLT<Eigen::MatrixXd> llt(spec.covariance);
  if (llt.info() != Eigen::Success) throw InvalidInput("covariance is singular or not positive definite");
  Inverse out;
  const Index d = spec.mean.size();
  out.inv = llt.solve(Eigen::MatrixXd::Identity(d, d));
  out.inv = 0.5 * (out.inv + out.inv.transpose()).eval();
  const Eigen::MatrixXd l = llt.matrixL();
  for (Index k = 0; k < d; ++k) out.logdet += 2.0 * std::log(l(k, k));
  return out;
}

}  // namespace

BayesOracle::BayesOracle(const GaussianClassSpec& spec1, const GaussianClassSpec& spec2) {
  if (spec1.mean.size() != spec2.mean.size())
    throw DimensionMismatch("class specs differ in dimension");
  const Inverse a = invert(spec1);
  const Inverse b = invert(spec2);
  dim_ = spec1.mean.size();
  inv1_ = a.inv;
  inv2_ = b.inv;
  mean1_ = spec1.mean;
  mean2_ = spec2.mean;
  logdet_gap_ = a.logdet - b.logdet;
  quad_ = a.inv - b.inv;
  lin_ = 2.0 * (a.inv * spec1.mean - b.inv * spec2.mean);
  const_ = spec1.mean.dot(a.inv * spec1.mean) - spec2.mean.dot(b.inv * spec2.mean) + logdet_gap_;
}

double BayesOracle::discriminant(const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw DimensionMismatch("oracle input has the wrong dimension");
  // Centred form keeps the two quadratic forms separate, which cancels exactly for
  // identical classes.
  const Eigen::VectorXd u = x - mean1_;
  const Eigen::VectorXd v = x - mean2_;
  return u.dot(inv1_ * u) - v.dot(inv2_ * v) + logdet_gap_;
}

BayesOracle::Decomposition BayesOracle::decompose(const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw DimensionMismatch("oracle input has the wrong dimension");
  Decomposition dcmp;
  dcmp.quadratic = x.dot(quad_ * x);
  dcmp.linear = lin_.dot(x);
  dcmp.constant = const_;
  return dcmp;
}

double bayes_discriminant(const GaussianClassSpec& spec1, const GaussianClassSpec& spec2,
                          const Eigen::VectorXd& x) {
  return BayesOracle(spec1, spec2).discriminant(x);
}

}  // namespace eigenlocus
