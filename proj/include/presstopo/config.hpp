#pragma once

// Problem description read from an INI file.
//
//   [problem]    name
//   [domain]     lx, ly, nex, ney, layout = staggered | mirror_symmetric
//   [materials]  youngs = E1, E2[, E3] (Pa, ascending), nu, thickness, penalty
//   [volume]     fractions = vf1, vf2[, vf3]
//   [pressure]   <edge> = value (Pa), edges from top, bottom, left, right, symmetry
//   [supports]   fixed = edge:from:to, ...   (segments as fractions of the edge)
//                symmetry_edge = left        (rollers normal to that edge)
//   [flow]       kv, contrast, eta_k, beta_k, eta_d, beta_d,
//                drainage_remainder, penetration_elements, ds (optional override)
//   [filter]     radius_factor               (radius = factor * lx / nex)
//   [optimizer]  max_iters, move_limit, asymptote_init/incr/decr, stop_tol
//   [output]     directory, write_vtk, write_svg, log_every, isolines
//   [initial]    design = path to a design.csv (optional)

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "presstopo/errors.hpp"
#include "presstopo/honeymesh.hpp"

namespace presstopo {

struct SupportSegment {
  std::string edge;
  double from = 0.0;  // fraction of the edge length
  double to = 1.0;
};

struct ProblemConfig {
  std::string name = "problem";
  // domain
  double lx = 0.0;
  double ly = 0.0;
  int nex = 0;
  int ney = 0;
  RowLayout layout = RowLayout::staggered;
  // materials
  std::vector<double> youngs;
  double nu = 0.4;
  double thickness = 0.001;
  double penalty = 3.0;
  std::vector<double> volume_fractions;
  // boundary conditions
  std::map<std::string, double> pressure;
  std::vector<SupportSegment> fixed;
  std::string symmetry_edge;  // empty when the full domain is modelled
  // flow
  double kv = 1.0;
  double contrast = 1e-7;
  double eta_k = 0.2;
  double beta_k = 10.0;
  double eta_d = 0.2;
  double beta_d = 10.0;
  double drainage_remainder = 0.1;
  double penetration_elements = 2.0;
  std::optional<double> ds;
  // filter
  double radius_factor = 3.0;
  // optimizer
  int max_iters = 100;
  double move_limit = 0.1;
  double asymptote_init = 0.5;
  double asymptote_incr = 1.2;
  double asymptote_decr = 0.7;
  double stop_tol = 0.0;  // 0 disables the early stop
  // output
  std::string output_dir = "out";
  bool write_vtk = true;
  bool write_svg = true;
  int log_every = 1;
  int isolines = 8;
  std::string initial_design;

  int num_materials() const { return static_cast<int>(youngs.size()); }
  double filter_radius() const { return radius_factor * lx / nex; }

  /// Upper bound on each volume measure: g_j <= sum_{k >= j} vf_k.
  std::vector<double> volume_bounds() const {
    std::vector<double> b(volume_fractions.size());
    double s = 0.0;
    for (int k = static_cast<int>(b.size()) - 1; k >= 0; --k) b[k] = (s += volume_fractions[k]);
    return b;
  }

  /// Uniform starting design: the topology variable at the total fraction,
  /// each selection variable at its share of what remains.
  std::vector<double> initial_values() const {
    const auto b = volume_bounds();
    std::vector<double> v(b.size());
    v[0] = b[0];
    for (std::size_t k = 1; k < b.size(); ++k) v[k] = b[k] / b[k - 1];
    return v;
  }

  /// Resolves "symmetry" to the configured symmetry edge.
  std::string resolve_edge(const std::string& edge) const {
    if (edge == "symmetry") {
      if (symmetry_edge.empty()) throw ConfigError("edge 'symmetry' used but no symmetry_edge is set");
      return symmetry_edge;
    }
    return edge;
  }

  void validate() const;
};

namespace detail {

inline bool is_edge_name(const std::string& e) {
  return e == "top" || e == "bottom" || e == "left" || e == "right" || e == "symmetry";
}

inline std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (trim(text.substr(used)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("'" + key + "': expected a number, got '" + text + "'");
}

inline int parse_int(const std::string& key, const std::string& text) {
  const double v = parse_double(key, text);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError("'" + key + "': expected an integer");
  return static_cast<int>(v);
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError("'" + key + "': expected true or false, got '" + text + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_double(key, item));
  return out;
}

class IniReader {
 public:
  explicit IniReader(const boost::property_tree::ptree& tree) : tree_(tree) {}

  std::optional<std::string> get(const std::string& section, const std::string& key) const {
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    const auto v = sec->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return trim(*v);
  }

  std::string require(const std::string& section, const std::string& key) const {
    const auto v = get(section, key);
    if (!v || v->empty()) throw ConfigError("missing required key [" + section + "] " + key);
    return *v;
  }

  void number(const std::string& section, const std::string& key, double& out) const {
    if (const auto v = get(section, key)) out = parse_double(section + "." + key, *v);
  }
  void integer(const std::string& section, const std::string& key, int& out) const {
    if (const auto v = get(section, key)) out = parse_int(section + "." + key, *v);
  }
  void boolean(const std::string& section, const std::string& key, bool& out) const {
    if (const auto v = get(section, key)) out = parse_bool(section + "." + key, *v);
  }

 private:
  const boost::property_tree::ptree& tree_;
};

}  // namespace detail

inline void ProblemConfig::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(what) + " must be positive");
  };
  positive(lx, "domain.lx");
  positive(ly, "domain.ly");
  if (nex < 1 || ney < 1) throw ConfigError("domain.nex and domain.ney must be at least 1");
  if (layout == RowLayout::mirror_symmetric && nex < 2) {
    throw ConfigError("mirror_symmetric layout needs nex >= 2");
  }
  if (youngs.empty() || youngs.size() > 3) throw ConfigError("materials.youngs needs 1 to 3 moduli");
  for (std::size_t k = 0; k < youngs.size(); ++k) {
    positive(youngs[k], "materials.youngs entries");
    if (k > 0 && !(youngs[k] > youngs[k - 1])) {
      throw ConfigError("materials.youngs must be strictly ascending");
    }
  }
  if (!(nu >= 0.0 && nu < 0.5)) throw ConfigError("materials.nu must lie in [0, 0.5)");
  positive(thickness, "materials.thickness");
  if (!(penalty >= 1.0)) throw ConfigError("materials.penalty must be at least 1");
  if (volume_fractions.size() != youngs.size()) {
    throw ConfigError("volume.fractions needs one entry per material");
  }
  double total = 0.0;
  for (double v : volume_fractions) {
    positive(v, "volume.fractions entries");
    total += v;
  }
  if (total > 1.0 + 1e-12) throw ConfigError("volume fractions sum to more than 1");
  if (pressure.empty()) throw ConfigError("[pressure] needs at least one edge");
  if (!symmetry_edge.empty() && !(symmetry_edge == "left" || symmetry_edge == "right" ||
                                  symmetry_edge == "top" || symmetry_edge == "bottom")) {
    throw ConfigError("supports.symmetry_edge must be one of top, bottom, left, right");
  }
  for (const auto& [edge, value] : pressure) {
    if (!detail::is_edge_name(edge)) throw ConfigError("unknown pressure edge '" + edge + "'");
    resolve_edge(edge);
    if (!std::isfinite(value)) throw ConfigError("pressure values must be finite");
  }
  if (fixed.empty()) throw ConfigError("[supports] fixed needs at least one segment");
  for (const auto& s : fixed) {
    if (!detail::is_edge_name(s.edge)) throw ConfigError("unknown support edge '" + s.edge + "'");
    resolve_edge(s.edge);
    if (!(s.from >= 0.0 && s.to <= 1.0 && s.from <= s.to)) {
      throw ConfigError("support segment on '" + s.edge + "' must satisfy 0 <= from <= to <= 1");
    }
  }
  positive(kv, "flow.kv");
  if (!(contrast > 0.0 && contrast < 1.0)) throw ConfigError("flow.contrast must lie in (0, 1)");
  if (!(eta_k > 0.0 && eta_k < 1.0) || !(eta_d > 0.0 && eta_d < 1.0)) {
    throw ConfigError("flow.eta_k and flow.eta_d must lie in (0, 1)");
  }
  positive(beta_k, "flow.beta_k");
  positive(beta_d, "flow.beta_d");
  if (!(drainage_remainder > 0.0 && drainage_remainder < 1.0)) {
    throw ConfigError("flow.drainage_remainder must lie in (0, 1)");
  }
  positive(penetration_elements, "flow.penetration_elements");
  if (ds && !(*ds >= 0.0)) throw ConfigError("flow.ds must be non-negative");
  positive(radius_factor, "filter.radius_factor");
  if (max_iters < 0) throw ConfigError("optimizer.max_iters must be non-negative");
  if (!(move_limit > 0.0 && move_limit <= 1.0)) throw ConfigError("optimizer.move_limit must lie in (0, 1]");
  positive(asymptote_init, "optimizer.asymptote_init");
  if (!(asymptote_incr >= 1.0)) throw ConfigError("optimizer.asymptote_incr must be at least 1");
  if (!(asymptote_decr > 0.0 && asymptote_decr <= 1.0)) {
    throw ConfigError("optimizer.asymptote_decr must lie in (0, 1]");
  }
  if (!(stop_tol >= 0.0)) throw ConfigError("optimizer.stop_tol must be non-negative");
  if (log_every < 0) throw ConfigError("output.log_every must be non-negative");
  if (isolines < 0) throw ConfigError("output.isolines must be non-negative");
}

/// Parses INI text. Relative paths are resolved against `base_dir`.
inline ProblemConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {}) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.message() + " at line " +
                      std::to_string(e.line()));
  }
  const detail::IniReader ini(tree);
  ProblemConfig c;
  if (const auto v = ini.get("problem", "name")) c.name = *v;

  c.lx = detail::parse_double("domain.lx", ini.require("domain", "lx"));
  c.ly = detail::parse_double("domain.ly", ini.require("domain", "ly"));
  c.nex = detail::parse_int("domain.nex", ini.require("domain", "nex"));
  c.ney = detail::parse_int("domain.ney", ini.require("domain", "ney"));
  if (const auto v = ini.get("domain", "layout")) {
    if (*v == "staggered") c.layout = RowLayout::staggered;
    else if (*v == "mirror_symmetric") c.layout = RowLayout::mirror_symmetric;
    else throw ConfigError("domain.layout must be staggered or mirror_symmetric");
  }

  c.youngs = detail::parse_list("materials.youngs", ini.require("materials", "youngs"));
  ini.number("materials", "nu", c.nu);
  ini.number("materials", "thickness", c.thickness);
  ini.number("materials", "penalty", c.penalty);
  c.volume_fractions = detail::parse_list("volume.fractions", ini.require("volume", "fractions"));

  if (const auto sec = tree.get_child_optional("pressure")) {
    for (const auto& [key, node] : *sec) {
      c.pressure[detail::trim(key)] =
          detail::parse_double("pressure." + key, detail::trim(node.get_value<std::string>()));
    }
  }

  if (const auto v = ini.get("supports", "symmetry_edge")) c.symmetry_edge = *v;
  for (const auto& item : detail::split(ini.require("supports", "fixed"), ',')) {
    const auto parts = detail::split(item, ':');
    SupportSegment s;
    if (parts.size() == 1) {
      s.edge = parts[0];
    } else if (parts.size() == 3) {
      s.edge = parts[0];
      s.from = detail::parse_double("supports.fixed", parts[1]);
      s.to = detail::parse_double("supports.fixed", parts[2]);
    } else {
      throw ConfigError("supports.fixed entries must be 'edge' or 'edge:from:to', got '" + item + "'");
    }
    c.fixed.push_back(s);
  }

  ini.number("flow", "kv", c.kv);
  ini.number("flow", "contrast", c.contrast);
  ini.number("flow", "eta_k", c.eta_k);
  ini.number("flow", "beta_k", c.beta_k);
  ini.number("flow", "eta_d", c.eta_d);
  ini.number("flow", "beta_d", c.beta_d);
  ini.number("flow", "drainage_remainder", c.drainage_remainder);
  ini.number("flow", "penetration_elements", c.penetration_elements);
  if (const auto v = ini.get("flow", "ds")) c.ds = detail::parse_double("flow.ds", *v);

  ini.number("filter", "radius_factor", c.radius_factor);

  ini.integer("optimizer", "max_iters", c.max_iters);
  ini.number("optimizer", "move_limit", c.move_limit);
  ini.number("optimizer", "asymptote_init", c.asymptote_init);
  ini.number("optimizer", "asymptote_incr", c.asymptote_incr);
  ini.number("optimizer", "asymptote_decr", c.asymptote_decr);
  ini.number("optimizer", "stop_tol", c.stop_tol);

  if (const auto v = ini.get("output", "directory")) c.output_dir = *v;
  ini.boolean("output", "write_vtk", c.write_vtk);
  ini.boolean("output", "write_svg", c.write_svg);
  ini.integer("output", "log_every", c.log_every);
  ini.integer("output", "isolines", c.isolines);

  if (const auto v = ini.get("initial", "design"); v && !v->empty()) {
    std::filesystem::path p(*v);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    c.initial_design = p.string();
  }
  c.validate();
  return c;
}

inline ProblemConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  return parse_config(in, path.parent_path());
}

}  // namespace presstopo
