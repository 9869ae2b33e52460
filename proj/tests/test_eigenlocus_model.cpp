#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>

#include "eigenlocus/gaussian_lab.hpp"
#include "eigenlocus/io.hpp"
#include "eigenlocus/level_sets.hpp"
#include "eigenlocus/model.hpp"
#include "oracles.hpp"

using namespace eigenlocus;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;
namespace fs = std::filesystem;

namespace {

SampleSetd two_point() {
  SampleSetd s;
  s.points.resize(2, 2);
  s.points << 1, 0, -1, 0;
  s.labels.resize(2);
  s.labels << 1, -1;
  return s;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "eigenlocus_model_tests";
  fs::create_directories(dir);
  return dir / name;
}

MatrixXd probes(oracle::Rng& rng, Index count, Index d, double span = 3) {
  MatrixXd p(count, d);
  for (Index i = 0; i < count; ++i) p.row(i) = rng.vector(d, -span, span).transpose();
  return p;
}

// Quadratic part of a poly2 discriminant: sum_i y_i psi_i x_i x_i'.
MatrixXd poly2_quadratic_part(const Eigenlocusd& m) {
  MatrixXd a = MatrixXd::Zero(m.dimension(), m.dimension());
  for (Index i = 0; i < m.size(); ++i) {
    const VectorXd x = m.extreme_points.row(i).transpose();
    a += m.labels(i) * m.psi(i) * x * x.transpose();
  }
  return a;
}

}  // namespace

TEST_CASE("two-point model") {
  const auto m = train(two_point(), KernelSpec::linear(), infinity<double>());
  CHECK(m.size() == 2);
  CHECK(m.l1 == 1);
  CHECK(m.l2 == 1);
  CHECK(std::abs(m.kappa0) < 1e-14);
  CHECK(compute_locus_offset(m) == doctest::Approx(m.kappa0));
  // effective normal of the linear kernel: sum y psi x = (1, 0)
  const VectorXd normal = (m.extreme_points.transpose() * m.labels.cwiseProduct(m.psi));
  CHECK((normal - Vector2d(1, 0)).norm() < 1e-12);
  CHECK(discriminant_value(m, Vector2d(2, 0)) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(classify(m, Vector2d(3, 0)) == 1);
  CHECK(classify(m, Vector2d(-3, 0)) == -1);
  CHECK(discriminant_value(m, Vector2d(0, 5)) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(discriminant_value(m, Eigen::Vector3d(1, 0, 0)), DimensionMismatch);
}

TEST_CASE("a discriminant of exactly zero goes to the first class") {
  Eigenlocusd m;
  m.kernel = KernelSpec::linear();
  m.extreme_points.resize(2, 1);
  m.extreme_points << 1, -1;
  m.labels.resize(2);
  m.labels << 1, -1;
  m.psi = VectorXd::Constant(2, 0.5);
  m.xi = VectorXd::Zero(2);
  m.l1 = m.l2 = 1;
  VectorXd s(1);
  s << 0.0;
  CHECK(discriminant_value(m, s) == 0.0);
  CHECK(classify(m, s) == 1);
}

TEST_CASE("assemble_eigenaxis rejects a one-sided or empty extreme set") {
  const auto s = two_point();
  auto p = make_dual_problem(build_gram(s, KernelSpec::linear(), 0.0));
  auto sol = solve_dual(p);
  sol.psi *= 0.0;
  const auto e = extract_extreme_set(sol, s.labels);
  CHECK_THROWS_AS(assemble_eigenaxis(s, sol, e, KernelSpec::linear(), infinity<double>()),
                  InvalidInput);
  sol.psi << 1.0, 0.0;
  CHECK_THROWS_AS(assemble_eigenaxis(s, sol, extract_extreme_set(sol, s.labels),
                                     KernelSpec::linear(), infinity<double>()),
                  InvalidInput);
}

TEST_CASE("offset vanishes on centrally symmetric data") {
  oracle::Rng rng(21);
  for (int t = 0; t < 10; ++t) {
    const Index half = rng.integer(3, 12);
    SampleSetd s;
    s.points.resize(2 * half, 2);
    s.labels.resize(2 * half);
    for (Index i = 0; i < half; ++i) {
      const Vector2d x(rng.uniform(0.5, 2.0), rng.uniform(-2, 2));
      s.points.row(i) = x.transpose();
      s.points.row(half + i) = -x.transpose();
      s.labels(i) = 1;
      s.labels(half + i) = -1;
    }
    for (double C : {50.0, infinity<double>()}) {
      const auto m = train(s, KernelSpec::linear(), C);
      // with a ridge the dual optimum is unique, hence mirror symmetric
      if (std::isfinite(C)) CHECK(m.l1 == m.l2);
      CHECK(std::abs(m.kappa0) < 1e-7);
    }
  }
}

TEST_CASE("active extreme points sit on their KKT borders") {
  oracle::Rng rng(22);
  for (int t = 0; t < 24; ++t) {
    const auto family = static_cast<KernelFamily>(t % 3);
    const bool hard = (t / 3) % 2 == 0;
    const auto n = rng.integer(6, 30), d = rng.integer(1, 4);
    auto inst = hard ? oracle::separable_instance(rng, family, n, d)
                     : oracle::noisy_instance(rng, family, n, d);
    const auto tr = train_detailed(inst.samples, inst.kernel, hard ? infinity<double>() : 50.0);
    REQUIRE(tr.solution.converged);
    const double scale = std::max(1.0, tr.model.psi.sum());
    for (Index a = 0; a < tr.model.size(); ++a) {
      const double d_a = discriminant_value(tr.model, tr.model.extreme_points.row(a));
      CAPTURE(t);
      CHECK(std::abs(tr.model.labels(a) * d_a - (1 - tr.model.xi(a))) <= 1e-8 * scale);
      if (hard) CHECK(tr.model.labels(a) * d_a == doctest::Approx(1.0).epsilon(1e-7));
    }
  }
}

TEST_CASE("the two written forms of the discriminant coincide") {
  oracle::Rng rng(23);
  for (int t = 0; t < 12; ++t) {
    auto inst = oracle::noisy_instance(rng, static_cast<KernelFamily>(t % 3), 24, 3);
    const auto m = train(inst.samples, inst.kernel, 50.0);
    const auto stats = locus_statistics(m);
    const MatrixXd pr = probes(rng, 50, 3);
    for (Index i = 0; i < pr.rows(); ++i) {
      const double a = discriminant_value(m, pr.row(i));
      const double b = discriminant_value_centered(m, pr.row(i), stats);
      CHECK(std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(a)));
    }
  }
}

TEST_CASE("negating the labels negates the discriminant") {
  oracle::Rng rng(24);
  for (int t = 0; t < 12; ++t) {
    auto inst = oracle::noisy_instance(rng, static_cast<KernelFamily>(t % 3), 30, 2);
    const auto m = train(inst.samples, inst.kernel, 50.0);
    auto flipped = inst.samples;
    flipped.labels = -flipped.labels;
    const auto mf = train(flipped, inst.kernel, 50.0);
    const MatrixXd pr = probes(rng, 50, 2);
    // both fits are solved independently, so agreement is to solver tolerance times the mass
    const double scale = std::max(1.0, m.psi.sum());
    for (Index i = 0; i < pr.rows(); ++i)
      CHECK(std::abs(discriminant_value(m, pr.row(i)) + discriminant_value(mf, pr.row(i))) <= 1e-8 * scale);
  }
}

TEST_CASE("duplicating every training point leaves the decision rule unchanged") {
  oracle::Rng rng(25);
  for (int t = 0; t < 6; ++t) {
    const auto family = static_cast<KernelFamily>(t % 3);
    auto inst = oracle::separable_instance(rng, family, 5, 2, 0.3);
    const auto m = train(inst.samples, inst.kernel, infinity<double>());
    SampleSetd twice;
    twice.points.resize(10, 2);
    twice.points << inst.samples.points, inst.samples.points;
    twice.labels.resize(10);
    twice.labels << inst.samples.labels, inst.samples.labels;
    const auto m2 = train(twice, inst.kernel, infinity<double>());
    // independent reference: brute-force dual of the original set, offset from one active point
    const auto q = oracle::joint_matrix(inst.kernel, inst.samples.points, inst.samples.labels, 0.0);
    const auto bf = oracle::brute_force_dual(q, inst.samples.labels);
    REQUIRE(bf.found);
    auto d_ref = [&](const VectorXd& s) {
      double v = 0;
      for (Index i = 0; i < 5; ++i)
        v += inst.samples.labels(i) * bf.psi(i) *
             oracle::kernel_value(inst.kernel, inst.samples.points.row(i).transpose(), s);
      return v;
    };
    Index top = 0;
    bf.psi.maxCoeff(&top);
    const double offset = inst.samples.labels(top) - d_ref(inst.samples.points.row(top).transpose());
    Index agree = 0, total = 0;
    for (int i = 0; i <= 40; ++i)
      for (int j = 0; j <= 40; ++j) {
        const Vector2d s(-2 + 0.1 * i, -2 + 0.1 * j);
        const double a = discriminant_value(m, s), b = discriminant_value(m2, s);
        const double ref = d_ref(s) + offset;
        CHECK(std::abs(a - ref) <= 1e-6 * std::max(1.0, std::abs(ref)));
        CHECK(std::abs(b - ref) <= 1e-6 * std::max(1.0, std::abs(ref)));
        agree += classify(m, s) == classify(m2, s) || std::abs(a) < 1e-9;
        ++total;
      }
    CHECK(agree == total);
  }
}

TEST_CASE("level sets of the two-point model") {
  const auto m = train(two_point(), KernelSpec::linear(), infinity<double>());
  GridSpec g{-2, 2, -2, 2, 64};
  const auto traces = trace_level_sets(m, g);
  REQUIRE(traces.size() == 3);
  CHECK(traces[0].level == -1.0);
  CHECK(traces[1].level == 0.0);
  CHECK(traces[2].level == 1.0);
  for (const auto& tr : traces) {
    REQUIRE_FALSE(tr.empty());
    CHECK(tr.polylines.size() == 1);
    for (const auto& line : tr.polylines)
      for (const auto& v : line) {
        CHECK(std::abs(v.x - tr.level) < 1e-9);
        CHECK(std::abs(discriminant_value(m, Vector2d(v.x, v.y)) - tr.level) <= tr.tolerance + 1e-12);
      }
    // spans the grid top to bottom
    double ymin = 1e9, ymax = -1e9;
    for (const auto& v : tr.polylines.front()) {
      ymin = std::min(ymin, v.y);
      ymax = std::max(ymax, v.y);
    }
    CHECK(ymin == doctest::Approx(-2.0));
    CHECK(ymax == doctest::Approx(2.0));
  }
}

TEST_CASE("level sets far from the data are empty") {
  auto m = train(two_point(), KernelSpec::linear(), infinity<double>());
  m.kappa0 += 10;
  for (const auto& tr : trace_level_sets(m, GridSpec{-2, 2, -2, 2, 32})) {
    CHECK(tr.empty());
    CHECK(tr.vertex_count() == 0);
  }
}

TEST_CASE("level set preconditions") {
  const auto m = train(two_point(), KernelSpec::linear(), infinity<double>());
  CHECK_THROWS_AS(trace_level_sets(m, GridSpec{-2, 2, -2, 2, 8}), InvalidInput);
  SampleSetd s3;
  s3.points.resize(2, 3);
  s3.points << 1, 0, 0, -1, 0, 0;
  s3.labels = two_point().labels;
  const auto m3 = train(s3, KernelSpec::linear(), infinity<double>());
  CHECK_THROWS_AS(trace_level_sets(m3, GridSpec{-2, 2, -2, 2, 32}), DimensionMismatch);
}

TEST_CASE("traced vertices satisfy the grid tolerance on random models") {
  oracle::Rng rng(26);
  for (int t = 0; t < 9; ++t) {
    auto inst = oracle::noisy_instance(rng, static_cast<KernelFamily>(t % 3), 40, 2);
    const auto m = train(inst.samples, inst.kernel, 50.0);
    const auto g = default_grid(inst.samples.points, 48);
    // largest change of d across one grid edge, from an independent sampling of the grid
    const Index nodes = g.resolution + 1;
    double edge_bound = 0;
    auto d_at = [&](Index i, Index j) {
      return discriminant_value(m, Vector2d(g.xmin + g.dx() * double(i), g.ymin + g.dy() * double(j)));
    };
    for (Index j = 0; j < nodes; ++j)
      for (Index i = 0; i < nodes; ++i) {
        if (i + 1 < nodes) edge_bound = std::max(edge_bound, std::abs(d_at(i + 1, j) - d_at(i, j)));
        if (j + 1 < nodes) edge_bound = std::max(edge_bound, std::abs(d_at(i, j + 1) - d_at(i, j)));
      }
    for (const auto& tr : trace_level_sets(m, g)) {
      CHECK(tr.tolerance <= edge_bound);
      for (const auto& line : tr.polylines)
        for (const auto& v : line)
          CHECK(std::abs(discriminant_value(m, Vector2d(v.x, v.y)) - tr.level) <=
                tr.tolerance + 1e-12);
    }
  }
}

TEST_CASE("unequal diagonal covariances give a hyperbolic poly2 boundary") {
  GaussianClassSpec c1{Vector2d(3, 1), Eigen::Vector2d(25, 2).asDiagonal()};
  GaussianClassSpec c2{Vector2d(3, -1), Eigen::Vector2d(2, 25).asDiagonal()};
  const auto data = sample_dataset(c1, c2, 100, 100, 7);
  const auto m = train(data.samples, KernelSpec::poly2(), 50.0);
  const MatrixXd a = poly2_quadratic_part(m);
  CHECK(a.determinant() < 0);  // indefinite quadratic part
  const auto traces = trace_level_sets(m, default_grid(data.samples.points, 64));
  CHECK_FALSE(traces[1].empty());
}

TEST_CASE("multiclass with two classes reduces to the binary model") {
  oracle::Rng rng(27);
  auto inst = oracle::noisy_instance(rng, KernelFamily::poly2, 40, 2);
  std::vector<int> labels;
  for (Index i = 0; i < inst.samples.size(); ++i) labels.push_back(inst.samples.labels(i) > 0 ? 1 : 2);
  const auto mc = train_multiclass(inst.samples.points, labels, inst.kernel, 50.0);
  CHECK(mc.class_count() == 2);
  const auto m = train(inst.samples, inst.kernel, 50.0);
  const MatrixXd pr = probes(rng, 200, 2);
  for (Index i = 0; i < pr.rows(); ++i) {
    const double d = discriminant_value(m, pr.row(i));
    if (std::abs(d) < 1e-6) continue;
    CHECK(classify_multiclass(mc, pr.row(i)) == (classify(m, pr.row(i)) > 0 ? 1 : 2));
  }
}

TEST_CASE("three separated Gaussian clouds are learned without training error") {
  const Vector2d centres[3] = {Vector2d(0, 0), Vector2d(6, 0), Vector2d(3, 5)};
  GaussianClassSpec unused{Vector2d::Zero(), MatrixXd::Identity(2, 2)};
  MatrixXd points(90, 2);
  std::vector<int> labels;
  for (int c = 0; c < 3; ++c) {
    GaussianClassSpec spec{centres[c], 0.3 * MatrixXd::Identity(2, 2)};
    const auto d = sample_dataset(spec, unused, 30, 0, 100 + c);
    points.middleRows(30 * c, 30) = d.samples.points;
    for (int i = 0; i < 30; ++i) labels.push_back(c + 1);
  }
  for (auto kernel : {KernelSpec::linear(), KernelSpec::poly2()}) {
    const auto mc = train_multiclass(points, labels, kernel, 50.0);
    int wrong = 0;
    for (Index i = 0; i < points.rows(); ++i)
      wrong += classify_multiclass(mc, points.row(i)) != labels[static_cast<std::size_t>(i)];
    CHECK(wrong == 0);

    // relabel 1 -> 3 -> 2 -> 1: predictions follow the permutation
    const int perm[4] = {0, 3, 1, 2};
    std::vector<int> permuted;
    for (int l : labels) permuted.push_back(perm[l]);
    const auto mp = train_multiclass(points, permuted, kernel, 50.0);
    oracle::Rng rng(28);
    const MatrixXd pr = probes(rng, 100, 2, 6);
    for (Index i = 0; i < pr.rows(); ++i)
      CHECK(classify_multiclass(mp, pr.row(i)) == perm[classify_multiclass(mc, pr.row(i))]);
  }
}

TEST_CASE("multiclass needs every class present") {
  MatrixXd points(4, 1);
  points << 0, 1, 2, 3;
  CHECK_THROWS_AS(train_multiclass(points, {1, 1, 3, 3}, KernelSpec::linear(), 50.0), InvalidInput);
  CHECK_THROWS_AS(train_multiclass(points, {1, 1, 1, 1}, KernelSpec::linear(), 50.0), InvalidInput);
}

TEST_CASE("model file round trip reproduces the discriminant bitwise") {
  oracle::Rng rng(29);
  for (double C : {50.0, infinity<double>()}) {
    const auto m = train(two_point(), KernelSpec::linear(), C);
    const auto path = scratch("two_point.json");
    save_model(m, path);
    const auto back = load_model(path);
    CHECK(back.C == m.C);
    CHECK(back.kernel == m.kernel);
    const MatrixXd pr = probes(rng, 100, 2);
    for (Index i = 0; i < pr.rows(); ++i)
      CHECK(discriminant_value(back, pr.row(i)) == discriminant_value(m, pr.row(i)));
  }
  auto inst = oracle::noisy_instance(rng, KernelFamily::gaussian, 30, 3);
  inst.kernel.gamma = 0.0731234567891234;
  const auto m = train(inst.samples, inst.kernel, 50.0);
  const auto path = scratch("gaussian.json");
  save_model(m, path);
  const auto back = load_model(path);
  CHECK(back.kernel.gamma == inst.kernel.gamma);
  const MatrixXd pr = probes(rng, 100, 3);
  for (Index i = 0; i < pr.rows(); ++i)
    CHECK(discriminant_value(back, pr.row(i)) == discriminant_value(m, pr.row(i)));
}

TEST_CASE("malformed model files give structured errors") {
  const auto m = train(two_point(), KernelSpec::linear(), 50.0);
  const auto path = scratch("full.json");
  save_model(m, path);
  std::ifstream in(path);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto truncated = scratch("truncated.json");
  std::ofstream(truncated) << text.substr(0, text.size() / 2);
  CHECK_THROWS_AS(load_model(truncated), ParseError);

  auto j = model_to_json(m);
  j["version"] = 99;
  CHECK_THROWS_AS(model_from_json(j), VersionMismatch);
  j = model_to_json(m);
  j.erase("psi");
  CHECK_THROWS_AS(model_from_json(j), ParseError);
  CHECK_THROWS_AS(load_model(scratch("does_not_exist.json")), Error);
}

TEST_CASE("a 1000-point model round-trips in under 100 ms") {
  oracle::Rng rng(30);
  Eigenlocusd m;
  m.kernel = KernelSpec::gaussian(0.05);
  m.C = 50;
  m.extreme_points = probes(rng, 1000, 5);
  m.labels.resize(1000);
  m.psi.resize(1000);
  for (Index i = 0; i < 1000; ++i) {
    m.labels(i) = i % 2 ? -1 : 1;
    m.psi(i) = rng.uniform(0.01, 2);
  }
  m.xi = m.psi / m.C;
  m.l1 = m.l2 = 500;
  m.kappa0 = -0.123456789;
  const auto path = scratch("big.json");
  const auto start = std::chrono::steady_clock::now();
  save_model(m, path);
  const auto back = load_model(path);
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  MESSAGE("1000-point round trip: " << ms << " ms");
  CHECK(ms < 100.0);
  CHECK(back.extreme_points == m.extreme_points);
  CHECK(back.psi == m.psi);
  CHECK(back.kappa0 == m.kappa0);
}
