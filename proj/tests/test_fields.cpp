#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "presstopo/fields.hpp"

using namespace presstopo;

namespace {

MaterialSet two_materials() { return MaterialSet::make({40e6, 100e6}, 0.4, 0.001); }

// Eq. for H written out as a dense double loop.
MatrixXd dense_filter(const Mesh& m, double r) {
  const int n = m.num_elements();
  const auto c = element_centroids(m);
  MatrixXd h = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double denom = 0.0;
    for (int j = 0; j < n; ++j) {
      const double w = std::max(0.0, 1.0 - (c[i] - c[j]).norm() / r);
      h(i, j) = polygon_area(m.element_vertices(j)) * w;
      denom += h(i, j);
    }
    h.row(i) /= denom;
  }
  return h;
}

}  // namespace

TEST(Interpolation, PureMaterialTwo) {
  const auto mat = two_materials();
  const double row[] = {1.0, 1.0};
  EXPECT_DOUBLE_EQ(interpolate_modulus(row, mat), 100e6);
}

TEST(Interpolation, VoidGivesEmin) {
  const auto mat = two_materials();
  for (double r2 : {0.0, 0.3, 1.0}) {
    const double row[] = {0.0, r2};
    EXPECT_DOUBLE_EQ(interpolate_modulus(row, mat), mat.e_min);
  }
  EXPECT_DOUBLE_EQ(mat.e_min, 40.0);
}

TEST(Interpolation, HandEvaluation) {
  const auto mat = two_materials();
  const double row[] = {0.5, 0.5};
  const double expected = 0.875 * 40.0 + 0.125 * (0.875 * 40e6 + 0.125 * 100e6);
  EXPECT_NEAR(interpolate_modulus(row, mat), expected, 1e-6);
  EXPECT_NEAR(expected, 5.9375e6, 40.0);
}

TEST(Interpolation, ThreeMaterialCorners) {
  const auto mat = MaterialSet::make({10e6, 40e6, 100e6}, 0.4, 0.001);
  const double m1[] = {1.0, 0.0, 0.7};
  const double m2[] = {1.0, 1.0, 0.0};
  const double m3[] = {1.0, 1.0, 1.0};
  EXPECT_DOUBLE_EQ(interpolate_modulus(m1, mat), 10e6);
  EXPECT_DOUBLE_EQ(interpolate_modulus(m2, mat), 40e6);
  EXPECT_DOUBLE_EQ(interpolate_modulus(m3, mat), 100e6);
}

TEST(Interpolation, RejectsOutOfRange) {
  const auto mat = two_materials();
  const double bad[] = {1.2, 0.5};
  EXPECT_THROW(interpolate_modulus(bad, mat), InvalidArgument);
  const double shortrow[] = {0.5};
  EXPECT_THROW(interpolate_modulus(shortrow, mat), InvalidArgument);
  EXPECT_THROW(MaterialSet::make({100e6, 40e6}, 0.4, 0.001), InvalidArgument);
}

TEST(Interpolation, MonotoneInTopologyVariable) {
  const auto mat = two_materials();
  for (double r2 : {0.0, 0.4, 1.0}) {
    double prev = -1.0;
    for (int k = 0; k <= 50; ++k) {
      const double row[] = {k / 50.0, r2};
      const double e = interpolate_modulus(row, mat);
      EXPECT_GE(e, prev);
      prev = e;
    }
  }
}

TEST(ModulusDerivatives, ClosedForms) {
  const auto mat = two_materials();
  const double voidrow[] = {0.0, 0.6};
  EXPECT_EQ(modulus_derivatives(voidrow, mat)[1], 0.0);
  const double solid[] = {1.0, 0.4};
  EXPECT_NEAR(modulus_derivatives(solid, mat)[1], 3.0 * 0.16 * (100e6 - 40e6), 1e-6);
}

TEST(ModulusDerivatives, FiniteDifferenceOracle) {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  const double h = 1e-7;
  for (const auto& mat : {two_materials(), MaterialSet::make({10e6, 40e6, 100e6}, 0.4, 0.001)}) {
    const int m = mat.num_variables();
    for (int s = 0; s < 1000; ++s) {
      std::vector<double> r(m);
      for (double& x : r) x = u(rng);
      const auto d = modulus_derivatives(r, mat);
      for (int k = 0; k < m; ++k) {
        auto rp = r, rm = r;
        rp[k] += h;
        rm[k] -= h;
        const double fd = (interpolate_modulus(rp, mat) - interpolate_modulus(rm, mat)) / (2.0 * h);
        // Cancellation noise of the difference quotient is about 1e-16 * E / h.
        EXPECT_LT(std::abs(fd - d[k]), 1e-6 * std::max(std::abs(d[k]), 1e-2 * mat.youngs.back()))
            << "k=" << k;
      }
    }
  }
}

TEST(Filter, SmallRadiusIsIdentity) {
  const Mesh m = generate_mesh(5, 4, 0.5, 0.4);
  const auto f = build_filter(m, 0.01);
  EXPECT_TRUE(f.is_identity);
  const MatrixXd dense = MatrixXd(f.h);
  EXPECT_LT((dense - MatrixXd::Identity(20, 20)).cwiseAbs().maxCoeff(), 1e-15);
  VectorXd s = VectorXd::LinSpaced(20, -1.0, 2.0);
  EXPECT_EQ(chain_filter(f, s), s);
}

TEST(Filter, RowsSumToOneAndSupport) {
  const Mesh m = generate_mesh(12, 8, 0.2, 0.1);
  const double r = 2.5 * m.element_width();
  const auto f = build_filter(m, r);
  const auto c = element_centroids(m);
  for (int i = 0; i < f.size(); ++i) {
    double s = 0.0;
    for (decltype(f.h)::InnerIterator it(f.h, i); it; ++it) {
      s += it.value();
      EXPECT_LT((c[i] - c[it.col()]).norm(), r);
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  for (double v : {0.0, 1.0, 0.37}) {
    const VectorXd out = apply_filter(f, VectorXd::Constant(f.size(), v));
    EXPECT_LT((out.array() - v).abs().maxCoeff(), 1e-12 + 0.0 * v);
  }
  EXPECT_EQ(apply_filter(f, VectorXd::Zero(f.size())), VectorXd::Zero(f.size()));
}

TEST(Filter, SpikeMatchesBruteForce) {
  const Mesh m = generate_mesh(3, 3, 0.3, 0.3);
  const double r = 1.6 * m.element_width();
  const auto f = build_filter(m, r);
  const MatrixXd dense = dense_filter(m, r);
  VectorXd spike = VectorXd::Zero(9);
  spike[4] = 1.0;
  EXPECT_LT((apply_filter(f, spike) - dense * spike).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_FALSE(f.is_identity);
}

TEST(Filter, RandomVectorsMatchDenseOracle) {
  const Mesh m = generate_mesh(12, 8, 0.2, 0.1);
  const double r = 3.0 * m.element_width();
  const auto f = build_filter(m, r);
  const MatrixXd dense = dense_filter(m, r);
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  VectorXd x(f.size());
  for (int i = 0; i < x.size(); ++i) x[i] = u(rng);
  EXPECT_LT((apply_filter(f, x) - dense * x).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LT((chain_filter(f, x) - dense.transpose() * x).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_NEAR(chain_filter(f, x).sum(), x.sum(), 1e-12);
  EXPECT_THROW(apply_filter(f, VectorXd::Zero(3)), InvalidArgument);
  EXPECT_THROW(chain_filter(f, VectorXd::Zero(3)), InvalidArgument);
}

TEST(VolumeMeasures, UniformFields) {
  const Mesh m = generate_mesh(6, 4, 0.2, 0.1);
  const auto mat = two_materials();
  const auto f = build_filter(m, 2.0 * m.element_width());
  const double zero[] = {0.0, 0.5};
  EXPECT_DOUBLE_EQ(volume_measures(DesignField::uniform(m, mat, f, zero))[0], 0.0);
  const double full[] = {1.0, 0.1};
  const VectorXd g = volume_measures(DesignField::uniform(m, mat, f, full));
  EXPECT_NEAR(g[0], 1.0, 1e-13);
  EXPECT_NEAR(g[1], 0.1, 1e-13);
}

TEST(VolumeMeasures, RandomFieldAndLinearity) {
  const Mesh m = generate_mesh(10, 6, 0.2, 0.1, RowLayout::mirror_symmetric);
  const auto mat = two_materials();
  const auto f = build_filter(m, 2.0 * m.element_width());
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MatrixXd a(m.num_elements(), 2), b(m.num_elements(), 2);
  for (int i = 0; i < a.size(); ++i) {
    a.data()[i] = u(rng);
    b.data()[i] = u(rng);
  }
  const auto da = DesignField::from_raw(m, mat, f, a);
  const auto db = DesignField::from_raw(m, mat, f, b);
  for (int k = 0; k < 2; ++k) {
    double num = 0.0, den = 0.0;
    for (int e = 0; e < m.num_elements(); ++e) {
      const double v = polygon_area(m.element_vertices(e)) * mat.thickness;
      num += v * da.filtered(e, k);
      den += v;
    }
    EXPECT_NEAR(volume_measures(da)[k], num / den, 1e-13);
  }
  const auto dab = DesignField::from_raw(m, mat, f, 0.3 * a + 0.7 * b);
  const VectorXd lin = 0.3 * volume_measures(da) + 0.7 * volume_measures(db);
  EXPECT_LT((volume_measures(dab) - lin).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(DesignField, FilteredEqualsHTimesRaw) {
  const Mesh m = generate_mesh(8, 6, 0.2, 0.1);
  const auto mat = two_materials();
  const auto f = build_filter(m, 2.2 * m.element_width());
  MatrixXd raw = MatrixXd::Zero(m.num_elements(), 2);
  raw(5, 0) = 1.0;
  raw(17, 1) = 0.4;
  const auto d = DesignField::from_raw(m, mat, f, raw);
  for (int k = 0; k < 2; ++k) EXPECT_EQ(d.filtered.col(k), VectorXd(f.h * raw.col(k)));
  raw(0, 0) = 1.5;
  EXPECT_THROW(DesignField::from_raw(m, mat, f, raw), InvalidArgument);
}
