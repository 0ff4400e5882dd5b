#pragma once

// Result files: convergence.csv, design.csv, final.vtk, final.svg.

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "presstopo/driver.hpp"
#include "presstopo/errors.hpp"
#include "presstopo/honeymesh.hpp"

namespace presstopo {

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  return out;
}

inline void finish_output(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline void write_convergence_csv(const std::filesystem::path& path, const RunLog& log) {
  auto out = detail::open_output(path);
  out << "iter,compliance";
  for (int j = 0; j < log.num_constraints; ++j) out << ",g" << j + 1;
  out << ",max_dx\n";
  for (const auto& r : log.records) {
    out << r.iteration << ',' << r.compliance;
    for (int j = 0; j < r.g.size(); ++j) out << ',' << r.g[j];
    out << ',' << r.max_dx << '\n';
  }
  detail::finish_output(out, path);
}

/// Raw design variables, one row per element.
inline void write_design_csv(const std::filesystem::path& path, const MatrixXd& raw) {
  auto out = detail::open_output(path);
  out << "element";
  for (int k = 0; k < raw.cols(); ++k) out << ",rho" << k + 1;
  out << '\n';
  for (int e = 0; e < raw.rows(); ++e) {
    out << e;
    for (int k = 0; k < raw.cols(); ++k) out << ',' << raw(e, k);
    out << '\n';
  }
  detail::finish_output(out, path);
}

inline MatrixXd read_design_csv(const std::filesystem::path& path, int num_elements, int num_variables) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open design file '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError("design file '" + path.string() + "' is empty");
  MatrixXd raw = MatrixXd::Constant(num_elements, num_variables, std::numeric_limits<double>::quiet_NaN());
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    try {
      while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": not a number");
    }
    if (static_cast<int>(v.size()) != num_variables + 1) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                    std::to_string(num_variables + 1) + " columns");
    }
    const int e = static_cast<int>(v[0]);
    if (e < 0 || e >= num_elements) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": element id out of range");
    }
    for (int k = 0; k < num_variables; ++k) raw(e, k) = v[k + 1];
  }
  if (raw.hasNaN()) throw IoError("design file '" + path.string() + "' does not cover every element");
  return raw;
}

// ---------------------------------------------------------------------------
// Material densities
// ---------------------------------------------------------------------------

/// Column j holds the density of material j+1: the product of the first j+1
/// filtered variables times (1 - next variable) when there is one.
inline MatrixXd material_densities(const MatrixXd& filtered) {
  const int m = static_cast<int>(filtered.cols());
  MatrixXd out(filtered.rows(), m);
  for (int e = 0; e < filtered.rows(); ++e) {
    double prod = 1.0;
    for (int j = 0; j < m; ++j) {
      prod *= filtered(e, j);
      out(e, j) = j + 1 < m ? prod * (1.0 - filtered(e, j + 1)) : prod;
    }
  }
  return out;
}

/// 0 for void, j for material j (1-based): the largest of 1 - rho1 and the
/// material densities.
inline std::vector<int> dominant_material(const MatrixXd& filtered) {
  const MatrixXd d = material_densities(filtered);
  std::vector<int> out(filtered.rows(), 0);
  for (int e = 0; e < filtered.rows(); ++e) {
    double best = 1.0 - filtered(e, 0);
    for (int j = 0; j < d.cols(); ++j) {
      if (d(e, j) > best) {
        best = d(e, j);
        out[e] = j + 1;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Legacy VTK
// ---------------------------------------------------------------------------

/// Polygon mesh with cell data rho1_filtered, material<j>, and point data
/// pressure (scalar) and displacement (vector). `p` and `u` may be empty.
inline void write_vtk(const std::filesystem::path& path, const Mesh& mesh, const MatrixXd& filtered,
                      const VectorXd& p, const VectorXd& u, const std::string& title = "presstopo") {
  if (filtered.rows() != mesh.num_elements()) throw InvalidArgument("cell data size mismatch");
  auto out = detail::open_output(path);
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET POLYDATA\n";
  out << "POINTS " << mesh.num_nodes() << " double\n";
  for (const auto& x : mesh.nodes) out << x.x() << ' ' << x.y() << " 0\n";
  out << "POLYGONS " << mesh.num_elements() << ' ' << mesh.num_elements() * 7 << '\n';
  for (const auto& el : mesh.elements) {
    out << 6;
    for (int n : el) out << ' ' << n;
    out << '\n';
  }
  auto scalars = [&](const std::string& name, auto&& value, int count) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (int i = 0; i < count; ++i) out << value(i) << '\n';
  };
  out << "CELL_DATA " << mesh.num_elements() << '\n';
  scalars("rho1_filtered", [&](int e) { return filtered(e, 0); }, mesh.num_elements());
  const MatrixXd dens = material_densities(filtered);
  for (int j = 0; j < dens.cols(); ++j) {
    scalars("material" + std::to_string(j + 1), [&](int e) { return dens(e, j); }, mesh.num_elements());
  }
  if (p.size() > 0 || u.size() > 0) {
    out << "POINT_DATA " << mesh.num_nodes() << '\n';
    if (p.size() == mesh.num_nodes()) scalars("pressure", [&](int i) { return p[i]; }, mesh.num_nodes());
    if (u.size() == 2 * mesh.num_nodes()) {
      out << "VECTORS displacement double\n";
      for (int i = 0; i < mesh.num_nodes(); ++i) out << u[2 * i] << ' ' << u[2 * i + 1] << " 0\n";
    }
  }
  detail::finish_output(out, path);
}

struct VtkPolyData {
  std::vector<std::array<double, 3>> points;
  std::vector<std::vector<int>> polygons;
  std::map<std::string, std::vector<double>> cell_scalars;
  std::map<std::string, std::vector<double>> point_scalars;
  std::map<std::string, std::vector<std::array<double, 3>>> point_vectors;
};

/// Reads the ASCII subset produced by write_vtk.
inline VtkPolyData read_vtk(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  for (int i = 0; i < 4; ++i) {
    if (!std::getline(in, line)) throw IoError("truncated VTK header");
    if (i == 2 && line.rfind("ASCII", 0) != 0) throw IoError("only ASCII VTK is supported");
    if (i == 3 && line.find("POLYDATA") == std::string::npos) throw IoError("not a POLYDATA file");
  }
  VtkPolyData d;
  enum class Section { none, cells, points } section = Section::none;
  int n_cells = 0, n_points = 0;
  std::string word;
  auto fail = [&](const std::string& what) { throw IoError("malformed VTK: " + what); };
  while (in >> word) {
    if (word == "POINTS") {
      std::string type;
      in >> n_points >> type;
      d.points.resize(n_points);
      for (auto& x : d.points)
        if (!(in >> x[0] >> x[1] >> x[2])) fail("points");
    } else if (word == "POLYGONS") {
      int n = 0, total = 0;
      in >> n >> total;
      d.polygons.resize(n);
      for (auto& poly : d.polygons) {
        int k = 0;
        if (!(in >> k)) fail("polygons");
        poly.resize(k);
        for (int& v : poly)
          if (!(in >> v)) fail("polygons");
      }
    } else if (word == "CELL_DATA") {
      in >> n_cells;
      section = Section::cells;
    } else if (word == "POINT_DATA") {
      in >> n_points;
      section = Section::points;
    } else if (word == "SCALARS") {
      std::string name, type, lut, table;
      int comps = 1;
      in >> name >> type;
      std::getline(in, line);
      std::istringstream rest(line);
      if (rest >> comps && comps != 1) fail("multi-component scalars");
      in >> lut >> table;
      if (lut != "LOOKUP_TABLE") fail("missing lookup table");
      const int count = section == Section::cells ? n_cells : n_points;
      std::vector<double> v(count);
      for (double& x : v)
        if (!(in >> x)) fail("scalars " + name);
      (section == Section::cells ? d.cell_scalars : d.point_scalars)[name] = std::move(v);
    } else if (word == "VECTORS") {
      std::string name, type;
      in >> name >> type;
      if (section != Section::points) fail("cell vectors are not supported");
      std::vector<std::array<double, 3>> v(n_points);
      for (auto& x : v)
        if (!(in >> x[0] >> x[1] >> x[2])) fail("vectors " + name);
      d.point_vectors[name] = std::move(v);
    } else {
      fail("unexpected keyword '" + word + "'");
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------------

/// Fill colour per material index (0 = void): the stiffest material is
/// black, the next one orange, a third (softest of three) gold.
inline std::string material_colour(int material, int num_materials) {
  if (material == 0) return "#ffffff";
  switch (num_materials - material) {
    case 0: return "#000000";
    case 1: return "#ff8c00";
    default: return "#ffd700";
  }
}

namespace detail {

// Level-set segments of a linear field on each centroid-fan triangle.
inline void isoline_segments(const Mesh& mesh, const VectorXd& p, double level,
                             std::vector<std::array<Vec2, 2>>& out) {
  for (const auto& el : mesh.elements) {
    Vec2 xc = Vec2::Zero();
    double pc = 0.0;
    for (int n : el) {
      xc += mesh.nodes[n];
      pc += p[n];
    }
    xc /= 6.0;
    pc /= 6.0;
    for (int a = 0; a < 6; ++a) {
      const int i = el[a], j = el[(a + 1) % 6];
      const std::array<Vec2, 3> x = {mesh.nodes[i], mesh.nodes[j], xc};
      const std::array<double, 3> v = {p[i] - level, p[j] - level, pc - level};
      std::vector<Vec2> hits;
      for (int s = 0; s < 3; ++s) {
        const int t = (s + 1) % 3;
        if ((v[s] < 0.0) != (v[t] < 0.0)) {
          const double w = v[s] / (v[s] - v[t]);
          hits.push_back(x[s] + w * (x[t] - x[s]));
        }
      }
      if (hits.size() == 2) out.push_back({hits[0], hits[1]});
    }
  }
}

}  // namespace detail

/// Hexagons filled by dominant material. With `p` given and `isolines` > 0,
/// pressure levels evenly spaced strictly between min and max are overlaid.
inline void write_svg(const std::filesystem::path& path, const Mesh& mesh, const MatrixXd& filtered,
                      const VectorXd& p = {}, int isolines = 0, double width_px = 800.0) {
  if (filtered.rows() != mesh.num_elements()) throw InvalidArgument("cell data size mismatch");
  const double s = width_px / mesh.lx;
  const double height_px = mesh.ly * s;
  auto out = detail::open_output(path);
  out << std::setprecision(6);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_px << "\" height=\"" << height_px
      << "\" viewBox=\"0 0 " << width_px << ' ' << height_px << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  const auto dom = dominant_material(filtered);
  const int m = static_cast<int>(filtered.cols());
  out << "<g stroke-width=\"0.3\">\n";
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const std::string c = material_colour(dom[e], m);
    out << "<polygon points=\"";
    for (int a = 0; a < 6; ++a) {
      const Vec2& x = mesh.nodes[mesh.elements[e][a]];
      out << (a ? " " : "") << x.x() * s << ',' << height_px - x.y() * s;
    }
    out << "\" fill=\"" << c << "\" stroke=\"" << c << "\"/>\n";
  }
  out << "</g>\n";
  if (isolines > 0 && p.size() == mesh.num_nodes() && p.maxCoeff() > p.minCoeff()) {
    const double lo = p.minCoeff(), hi = p.maxCoeff();
    out << "<g stroke=\"#1f5fbf\" stroke-width=\"1\" fill=\"none\">\n";
    for (int i = 1; i <= isolines; ++i) {
      std::vector<std::array<Vec2, 2>> segs;
      detail::isoline_segments(mesh, p, lo + (hi - lo) * i / (isolines + 1), segs);
      if (segs.empty()) continue;
      out << "<path d=\"";
      for (const auto& sg : segs) {
        out << 'M' << sg[0].x() * s << ',' << height_px - sg[0].y() * s << 'L' << sg[1].x() * s << ','
            << height_px - sg[1].y() * s;
      }
      out << "\"/>\n";
    }
    out << "</g>\n";
  }
  out << "</svg>\n";
  detail::finish_output(out, path);
}

// ---------------------------------------------------------------------------

struct OutputOptions {
  bool vtk = true;
  bool svg = true;
  int isolines = 8;
};

/// Writes convergence.csv and design.csv, plus final.vtk / final.svg when
/// requested and the run evaluated at least one design.
inline std::vector<std::filesystem::path> write_outputs(const std::filesystem::path& dir,
                                                        const Problem& problem, const RunResult& run,
                                                        const OutputOptions& opt) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory '" + dir.string() + "'");
  }
  std::vector<std::filesystem::path> written = {dir / "convergence.csv", dir / "design.csv"};
  write_convergence_csv(written[0], run.log);
  write_design_csv(written[1], run.design.raw);
  const VectorXd p = run.evaluated ? run.evaluation.pressure.p : VectorXd();
  const VectorXd u = run.evaluated ? run.evaluation.elastic.u : VectorXd();
  if (opt.vtk) {
    written.push_back(dir / "final.vtk");
    write_vtk(written.back(), problem.mesh(), run.design.filtered, p, u, problem.config().name);
  }
  if (opt.svg) {
    written.push_back(dir / "final.svg");
    write_svg(written.back(), problem.mesh(), run.design.filtered, p, opt.isolines);
  }
  return written;
}

}  // namespace presstopo
