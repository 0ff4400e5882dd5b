#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "presstopo/elasticity.hpp"

using namespace presstopo;

namespace {

Hexagon regular_hexagon() {
  Hexagon v;
  for (int a = 0; a < 6; ++a) {
    const double t = -M_PI / 2.0 + a * M_PI / 3.0;
    v[a] = Vec2(std::cos(t), std::sin(t));
  }
  return v;
}

MaterialSet two_materials() { return MaterialSet::make({40e6, 100e6}, 0.4, 0.001); }

VectorXd random_vector(int n, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = u(rng);
  return x;
}

}  // namespace

TEST(ElementStiffness, SymmetryAndRigidModes) {
  const Mesh m = generate_mesh(5, 4, 0.2, 0.1);
  for (int e = 0; e < m.num_elements(); e += 3) {
    const Matrix12 k = element_stiffness(m.element_vertices(e), 70e6, 0.4, 0.001);
    EXPECT_LT((k - k.transpose()).cwiseAbs().maxCoeff(), 1e-12 * k.cwiseAbs().maxCoeff());
    Eigen::Matrix<double, 12, 1> tx, ty;
    for (int a = 0; a < 6; ++a) {
      tx.segment<2>(2 * a) << 1.0, 0.0;
      ty.segment<2>(2 * a) << 0.0, 1.0;
    }
    EXPECT_LT((k * tx).cwiseAbs().maxCoeff(), 1e-9 * k.cwiseAbs().maxCoeff());
    EXPECT_LT((k * ty).cwiseAbs().maxCoeff(), 1e-9 * k.cwiseAbs().maxCoeff());
    const Eigen::SelfAdjointEigenSolver<Matrix12> eig(k);
    const double top = eig.eigenvalues().maxCoeff();
    int zero = 0;
    for (int i = 0; i < 12; ++i) zero += std::abs(eig.eigenvalues()[i]) < 1e-9 * top;
    EXPECT_EQ(zero, 3);
  }
}

TEST(ElementStiffness, LinearInModulus) {
  const Hexagon v = regular_hexagon();
  const Matrix12 k1 = element_stiffness(v, 3.0, 0.3, 0.01);
  const Matrix12 k2 = element_stiffness(v, 6.0, 0.3, 0.01);
  EXPECT_LT((k2 - 2.0 * k1).cwiseAbs().maxCoeff(), 1e-15 * k2.cwiseAbs().maxCoeff());
}

TEST(ElementStiffness, UniaxialStrainEnergy) {
  const Hexagon v = regular_hexagon();
  const double t = 0.01;
  const double eps = 1e-3;
  const Matrix12 k = element_stiffness(v, 1.0, 0.0, t);
  Eigen::Matrix<double, 12, 1> u = Eigen::Matrix<double, 12, 1>::Zero();
  for (int a = 0; a < 6; ++a) u[2 * a] = eps * v[a].x();
  const double energy = 0.5 * u.dot(k * u);
  const double exact = 0.5 * eps * eps * polygon_area(v) * t;
  EXPECT_NEAR(energy, exact, 1e-6 * exact);
}

TEST(ElementStiffness, RejectsBadInput) {
  EXPECT_THROW(element_stiffness(regular_hexagon(), 0.0, 0.3, 1.0), InvalidArgument);
  EXPECT_THROW(element_stiffness(regular_hexagon(), 1.0, 0.5, 1.0), InvalidArgument);
  Hexagon flat;
  for (int a = 0; a < 6; ++a) flat[a] = Vec2(a, 0.0);
  EXPECT_THROW(element_stiffness(flat, 1.0, 0.3, 1.0), GeometryError);
}

TEST(AssembleStiffness, EnergyEqualsElementSum) {
  const Mesh m = generate_mesh(8, 6, 0.2, 0.1);
  const FeModel model(m, 0.4, 0.001);
  const auto mat = two_materials();
  const auto f = build_filter(m, 2.0 * m.element_width());
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MatrixXd raw(m.num_elements(), 2);
  for (int i = 0; i < raw.size(); ++i) raw(i) = u(rng);
  const auto design = DesignField::from_raw(m, mat, f, raw);
  const SparseMatrix k = assemble_stiffness(model, design, mat);
  const VectorXd x = random_vector(2 * m.num_nodes(), rng);
  double sum = 0.0;
  for (int e = 0; e < m.num_elements(); ++e) {
    const auto xe = model.gather_dofs(e, x);
    const Matrix12 ke = element_stiffness(m.element_vertices(e),
                                          interpolate_modulus(design.filtered_row(e), mat), 0.4, 0.001);
    sum += xe.dot(ke * xe);
  }
  const double energy = x.dot(k * x);
  EXPECT_NEAR(energy, sum, 1e-12 * std::abs(sum));
  const MatrixXd dense = MatrixXd(k);
  EXPECT_LT((dense - dense.transpose()).cwiseAbs().maxCoeff(), 1e-12 * dense.cwiseAbs().maxCoeff());
}

TEST(AssembleStiffness, UniformSolidEqualsConstantModulus) {
  const Mesh m = generate_mesh(4, 3, 0.2, 0.1);
  const FeModel model(m, 0.4, 0.001);
  const auto mat = MaterialSet::make({40e6}, 0.4, 0.001);
  const auto f = build_filter(m, 1.5 * m.element_width());
  const double one[] = {1.0};
  const SparseMatrix k = assemble_stiffness(model, DesignField::uniform(m, mat, f, one), mat);
  const SparseMatrix k1 = model.dof_pattern().assemble(
      [&](int e) -> Matrix12 { return 40e6 * model.element(e).unit_stiffness; });
  EXPECT_LT(MatrixXd(k - k1).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(AssembleStiffness, MaterialMismatchRejected) {
  const Mesh m = generate_mesh(3, 2, 0.2, 0.1);
  const FeModel model(m, 0.4, 0.001);
  const auto mat = MaterialSet::make({40e6}, 0.3, 0.001);
  const auto f = build_filter(m, 0.1 * m.element_width());
  const double one[] = {1.0};
  EXPECT_THROW(assemble_stiffness(model, DesignField::uniform(m, mat, f, one), mat), InvalidArgument);
}

TEST(SolveDisplacements, PatchTest) {
  const Mesh m = generate_mesh(6, 5, 0.3, 0.2);
  const FeModel model(m, 0.3, 0.001);
  const SparseMatrix k = model.dof_pattern().assemble(
      [&](int e) -> Matrix12 { return 2e9 * model.element(e).unit_stiffness; });
  const int nn = m.num_nodes();
  auto field = [](const Vec2& p) { return Vec2(1e-3 + 2e-3 * p.x() - 1e-3 * p.y(), -5e-4 + 3e-3 * p.x() + 1.5e-3 * p.y()); };

  // Boundary nodes carry the exact field; interior nodes are solved for.
  std::vector<bool> boundary(nn, false);
  for (const char* side : {"left", "right", "bottom", "top"})
    for (int n : m.boundary(side)) boundary[n] = true;
  // Zigzag boundary nodes not on the bounding box: nodes belonging to fewer than 3 elements.
  std::vector<int> valence(nn, 0);
  for (const auto& el : m.elements)
    for (int n : el) ++valence[n];
  std::vector<bool> fixed(2 * nn, false);
  VectorXd prescribed = VectorXd::Zero(2 * nn);
  for (int n = 0; n < nn; ++n) {
    if (boundary[n] || valence[n] < 3) {
      fixed[2 * n] = fixed[2 * n + 1] = true;
      prescribed.segment<2>(2 * n) = field(m.nodes[n]);
    }
  }
  ReducedSystem sys(model.dof_pattern().pattern(), fixed);
  sys.factorize(k);
  const auto r = sys.solve(k, VectorXd::Zero(2 * nn), prescribed);
  double err = 0.0, scale = 0.0;
  for (int n = 0; n < nn; ++n) {
    err = std::max(err, (r.x.segment<2>(2 * n) - field(m.nodes[n])).norm());
    scale = std::max(scale, field(m.nodes[n]).norm());
  }
  EXPECT_LT(err, 1e-8 * scale);
}

TEST(SolveDisplacements, ZeroLoadAndLinearity) {
  const Mesh m = generate_mesh(6, 4, 0.2, 0.1);
  const FeModel model(m, 0.4, 0.001);
  const auto mat = two_materials();
  const auto f = build_filter(m, 1.5 * m.element_width());
  const double init[] = {0.6, 0.3};
  const auto design = DesignField::uniform(m, mat, f, init);
  const auto fixed = node_dofs(m.boundary("bottom"), 2);
  const int ndof = 2 * m.num_nodes();

  auto s0 = solve_displacements(model, assemble_stiffness(model, design, mat), VectorXd::Zero(ndof), fixed);
  EXPECT_EQ(s0.u, VectorXd::Zero(ndof));
  EXPECT_EQ(s0.compliance, 0.0);

  std::mt19937 rng(2);
  const VectorXd load = random_vector(ndof, rng);
  const SparseMatrix k = assemble_stiffness(model, design, mat);
  auto s1 = solve_displacements(model, k, load, fixed);
  auto s2 = solve_displacements(model, SparseMatrix(2.0 * k), load, fixed, s1.system);
  EXPECT_LT((s2.u - 0.5 * s1.u).cwiseAbs().maxCoeff(), 1e-10 * s1.u.cwiseAbs().maxCoeff());
  EXPECT_NEAR(s2.compliance, 0.5 * s1.compliance, 1e-10 * s1.compliance);
  EXPECT_GT(s1.compliance, 0.0);
  EXPECT_NEAR(s1.compliance, s1.u.dot(k * s1.u), 1e-9 * s1.compliance);
  EXPECT_LT(s1.relative_residual, 1e-9);
}

TEST(SolveDisplacements, SingleElementDenseOracle) {
  const Mesh m = generate_mesh(1, 1, 0.01, 0.01);
  const FeModel model(m, 0.4, 0.001);
  const Matrix12 ke = 1e8 * model.element(0).unit_stiffness;
  const SparseMatrix k = model.dof_pattern().assemble([&](int) -> const Matrix12& { return ke; });
  // Fix the bottom edge: the lowest vertex and its right neighbour.
  std::vector<int> nodes = {m.elements[0][0], m.elements[0][1]};
  const auto fixed = node_dofs(nodes, 2);
  VectorXd load = VectorXd::Zero(12);
  load[2 * m.elements[0][3] + 0] = 1.0;
  const auto s = solve_displacements(model, k, load, fixed);

  std::vector<int> free;
  for (int d = 0; d < 12; ++d)
    if (std::find(fixed.begin(), fixed.end(), d) == fixed.end()) free.push_back(d);
  MatrixXd kff(free.size(), free.size());
  VectorXd ff(free.size());
  for (std::size_t i = 0; i < free.size(); ++i) {
    ff[i] = load[free[i]];
    for (std::size_t j = 0; j < free.size(); ++j) kff(i, j) = MatrixXd(k)(free[i], free[j]);
  }
  const VectorXd uf = kff.ldlt().solve(ff);
  for (std::size_t i = 0; i < free.size(); ++i) {
    EXPECT_NEAR(s.u[free[i]], uf[i], 1e-10 * uf.cwiseAbs().maxCoeff());
  }
}

TEST(SolveDisplacements, InsufficientSupportsNameTheMode) {
  const Mesh m = generate_mesh(4, 3, 0.2, 0.1);
  const FeModel model(m, 0.4, 0.001);
  const auto mat = two_materials();
  const auto f = build_filter(m, 0.1 * m.element_width());
  const double init[] = {1.0, 1.0};
  const SparseMatrix k = assemble_stiffness(model, DesignField::uniform(m, mat, f, init), mat);
  const VectorXd load = VectorXd::Ones(2 * m.num_nodes());
  auto message = [&](const std::vector<int>& fixed) {
    try {
      solve_displacements(model, k, load, fixed);
    } catch (const SolverError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message(node_dofs(m.boundary("left"), 1)).find("x-translation"), std::string::npos);
  EXPECT_NE(message(node_dofs(m.boundary("left"), 0)).find("y-translation"), std::string::npos);
  const std::vector<int> one_node = {m.boundary("bottom").front()};
  EXPECT_NE(message(node_dofs(one_node, 2)).find("rotation"), std::string::npos);
  EXPECT_THROW(solve_displacements(model, k, load, {}), InvalidArgument);
}

TEST(SolveDisplacements, ComplianceDecreasesWithDensity) {
  const Mesh m = generate_mesh(3, 3, 0.1, 0.1);
  const FeModel model(m, 0.4, 0.001);
  const auto mat = MaterialSet::make({100e6}, 0.4, 0.001);
  const auto f = build_filter(m, 0.1 * m.element_width());
  const auto fixed = node_dofs(m.boundary("bottom"), 2);
  VectorXd load = VectorXd::Zero(2 * m.num_nodes());
  for (int n : m.boundary("top")) load[2 * n + 1] = -1.0;
  MatrixXd raw = MatrixXd::Constant(m.num_elements(), 1, 0.5);
  auto compliance = [&](const MatrixXd& r) {
    const auto d = DesignField::from_raw(m, mat, f, r);
    return solve_displacements(model, assemble_stiffness(model, d, mat), load, fixed).compliance;
  };
  const double base = compliance(raw);
  for (int e = 0; e < m.num_elements(); ++e) {
    MatrixXd r = raw;
    r(e, 0) = 0.8;
    EXPECT_LT(compliance(r), base);
  }
}
