#pragma once

#include <cstdint>
#include <random>

#include "eigenlocus/model.hpp"

namespace eigenlocus {

struct GaussianClassSpec {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

struct Dataset {
  SampleSetd samples;
  std::uint64_t seed = 0;
  Index n1 = 0;
  Index n2 = 0;
};

/// Substream identifiers. Training and test draws never share a generator.
enum class Stream : std::uint64_t { train = 0, test = 1 };

/// SplitMix64 finalizer, used to turn (seed, stream) into an engine seed.
std::uint64_t splitmix64(std::uint64_t x);

/// Standard normals from mt19937_64 through the Box-Muller transform. Both the engine
/// and the transform are fixed, so draws are identical across standard libraries.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, Stream stream);
  double next();

 private:
  double uniform();  // in [0, 1), 53 bits
  std::mt19937_64 engine_;
  double spare_ = 0;
  bool has_spare_ = false;
};

/// Lower Cholesky factor; throws InvalidInput if the covariance is not symmetric PD.
Eigen::MatrixXd cholesky_factor(const GaussianClassSpec& spec);

void validate(const GaussianClassSpec& spec);

/// n1 draws of class one (+1) followed by n2 draws of class two (-1).
Dataset sample_dataset(const GaussianClassSpec& spec1, const GaussianClassSpec& spec2, Index n1,
                       Index n2, std::uint64_t seed, Stream stream = Stream::train);

/// The quadratic log-likelihood-ratio discriminant of two Gaussian classes:
///   d(x) = (x-m1)' S1^-1 (x-m1) - (x-m2)' S2^-1 (x-m2) + ln|S1| - ln|S2|
/// Class one is decided when d(x) <= 0.
class BayesOracle {
 public:
  BayesOracle(const GaussianClassSpec& spec1, const GaussianClassSpec& spec2);

  struct Decomposition {
    double quadratic = 0;  // x' (S1^-1 - S2^-1) x
    double linear = 0;     // 2 (S1^-1 m1 - S2^-1 m2)' x
    double constant = 0;   // m1'S1^-1 m1 - m2'S2^-1 m2 + ln|S1| - ln|S2|
    double value() const { return quadratic - linear + constant; }
  };

  double discriminant(const Eigen::VectorXd& x) const;
  Decomposition decompose(const Eigen::VectorXd& x) const;
  int classify(const Eigen::VectorXd& x) const { return discriminant(x) <= 0 ? 1 : -1; }
  Index dimension() const { return dim_; }

 private:
  Index dim_;
  Eigen::MatrixXd quad_;
  Eigen::VectorXd lin_;
  double const_;
  Eigen::MatrixXd inv1_, inv2_;
  Eigen::VectorXd mean1_, mean2_;
  double logdet_gap_;
};

double bayes_discriminant(const GaussianClassSpec& spec1, const GaussianClassSpec& spec2,
                          const Eigen::VectorXd& x);

struct ErrorEstimate {
  double rate = 0;
  double std = 0;  // binomial: sqrt(r (1 - r) / n)
  Index n = 0;
};

/// Balanced test draw: ceil(n/2) from class one, floor(n/2) from class two, on the
/// test substream of `seed`.
Dataset sample_test_set(const GaussianClassSpec& spec1, const GaussianClassSpec& spec2,
                        Index n_test, std::uint64_t seed);

template <typename Classifier>
ErrorEstimate error_rate_on(const Classifier& classify, const SampleSetd& test) {
  Index wrong = 0;
  Eigen::VectorXd x(test.dimension());
  for (Index i = 0; i < test.size(); ++i) {
    x = test.points.row(i).transpose();
    const int label = classify(x);
    if (label != (test.labels(i) > 0 ? 1 : -1)) ++wrong;
  }
  ErrorEstimate e;
  e.n = test.size();
  e.rate = e.n > 0 ? double(wrong) / double(e.n) : 0.0;
  e.std = e.n > 0 ? std::sqrt(e.rate * (1.0 - e.rate) / double(e.n)) : 0.0;
  return e;
}

/// Misclassification fraction of `classify` (feature vector -> +1/-1) on a fresh test draw.
template <typename Classifier>
ErrorEstimate estimate_error_rate(const Classifier& classify, const GaussianClassSpec& spec1,
                                  const GaussianClassSpec& spec2, Index n_test,
                                  std::uint64_t seed) {
  if (n_test < 1000) throw InvalidInput("estimate_error_rate: n_test must be at least 1000");
  return error_rate_on(classify, sample_test_set(spec1, spec2, n_test, seed).samples);
}

template <typename Scalar>
double extreme_fraction(const Eigenlocus<Scalar>& m, Index n_train) {
  if (n_train <= 0) throw InvalidInput("extreme_fraction: n_train must be positive");
  return double(m.size()) / double(n_train);
}

}  // namespace eigenlocus
