#include "cornerpml/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "cornerpml/error.hpp"

namespace cpml {
namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"geometry", {"preset", "R", "polygon", "corners", "labels", "rho"}},
      {"material", {"eps_d", "mu_d", "mu_m", "omega", "omega_p", "gamma", "eps_m", "k0", "c"}},
      {"discretization",
       {"h", "h_int", "theta_intervals", "dz", "layer_points_per_wavelength", "n_fourier", "grading",
        "mirror"}},
      {"pml", {"enabled", "theta", "clip", "tau1", "tau2"}},
      {"run", {"alpha_inc", "alpha_sweep", "alpha_unit", "boundary", "output", "refine", "dual"}},
  };
  return s;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, const char* seps) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t next = s.find_first_of(seps, pos);
    const std::string tok = trim(std::string_view(s).substr(pos, next == std::string::npos ? std::string::npos : next - pos));
    if (!tok.empty()) out.push_back(tok);
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}

class Reader {
 public:
  Reader(std::string section, std::string key, std::string value)
      : where_("[" + std::move(section) + "] " + std::move(key)), value_(std::move(value)) {}

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(where_ + ": " + what); }

  const std::string& text() const { return value_; }

  // Decimal number, optionally multiplied by pi and divided by a number:
  // "0.5", "-pi/12", "2*pi/25", "1e-8".
  double number(const std::string& tok) const {
    std::string s = tok;
    double sign = 1.0;
    if (!s.empty() && (s[0] == '-' || s[0] == '+') && s.find("pi") != std::string::npos) {
      if (s[0] == '-') sign = -1.0;
      s = s.substr(1);
    }
    double den = 1.0;
    if (const auto slash = s.find('/'); slash != std::string::npos) {
      den = plain(s.substr(slash + 1), tok);
      s = s.substr(0, slash);
    }
    double num;
    if (s == "pi") {
      num = std::numbers::pi;
    } else if (s.size() > 3 && s.ends_with("*pi")) {
      num = plain(s.substr(0, s.size() - 3), tok) * std::numbers::pi;
    } else {
      num = plain(s, tok);
    }
    if (den == 0.0) fail("division by zero in '" + tok + "'");
    return sign * num / den;
  }

  double number() const { return number(value_); }

  int integer() const {
    int v = 0;
    const auto r = std::from_chars(value_.data(), value_.data() + value_.size(), v);
    if (r.ec != std::errc() || r.ptr != value_.data() + value_.size()) fail("expected an integer, got '" + value_ + "'");
    return v;
  }

  bool boolean() const {
    if (value_ == "true" || value_ == "yes" || value_ == "on") return true;
    if (value_ == "false" || value_ == "no" || value_ == "off") return false;
    fail("expected true or false, got '" + value_ + "'");
  }

  std::vector<std::string> list() const { return split(value_, " \t,"); }

  std::vector<double> numbers() const {
    std::vector<double> out;
    for (const auto& t : list()) out.push_back(number(t));
    if (out.empty()) fail("expected at least one number");
    return out;
  }

  std::vector<int> integers() const {
    std::vector<int> out;
    for (const auto& t : list()) {
      int v = 0;
      const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
      if (r.ec != std::errc() || r.ptr != t.data() + t.size()) fail("expected integers, got '" + t + "'");
      out.push_back(v);
    }
    return out;
  }

 private:
  double plain(const std::string& s, const std::string& tok) const {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v)) {
      fail("expected a number, got '" + tok + "'");
    }
    return v;
  }

  std::string where_;
  std::string value_;
};

pt::ptree read_tree(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(e.message(), static_cast<int>(e.line()));
  }
  for (const auto& [name, section] : tree) {
    const auto it = schema().find(name);
    if (it == schema().end()) {
      if (section.empty()) throw ParseError("key '" + name + "' outside any section");
      throw ParseError("unknown section [" + name + "]");
    }
    for (const auto& [key, value] : section) {
      if (!it->second.contains(key)) throw ParseError("[" + name + "]: unknown key '" + key + "'");
    }
  }
  return tree;
}

std::optional<Reader> get(const pt::ptree& tree, const std::string& section, const std::string& key) {
  const auto s = tree.get_child_optional(section);
  if (!s) return std::nullopt;
  const auto v = s->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
  if (!v) return std::nullopt;
  return Reader(section, key, trim(*v));
}

void apply_geometry(const pt::ptree& t, GeometryConfig& g) {
  if (auto r = get(t, "geometry", "R")) g.R = r->number();
  if (auto r = get(t, "geometry", "polygon")) {
    g.polygon.clear();
    for (const auto& pair : split(r->text(), ",")) {
      const auto xy = split(pair, " \t");
      if (xy.size() != 2) r->fail("vertices are 'x y' pairs separated by commas");
      g.polygon.push_back({r->number(xy[0]), r->number(xy[1])});
    }
    if (g.polygon.size() < 3) r->fail("a polygon needs at least three vertices");
    // Corner data of a preset refers to its own polygon.
    if (!get(t, "geometry", "corners")) g.corner_vertices.clear();
    if (!get(t, "geometry", "labels")) g.corner_labels.clear();
  }
  if (auto r = get(t, "geometry", "corners")) {
    g.corner_vertices = r->integers();
    for (int v : g.corner_vertices) {
      if (v < 0 || v >= static_cast<int>(g.polygon.size())) r->fail("vertex index out of range");
    }
  }
  if (auto r = get(t, "geometry", "labels")) g.corner_labels = r->list();
  if (auto r = get(t, "geometry", "rho")) g.rho = r->numbers();
}

void apply_material(const pt::ptree& t, MaterialConfig& m) {
  if (auto r = get(t, "material", "eps_d")) m.eps_d = r->number();
  if (auto r = get(t, "material", "mu_d")) m.mu_d = r->number();
  if (auto r = get(t, "material", "mu_m")) m.mu_m = r->number();
  if (auto r = get(t, "material", "omega")) m.omega = r->number();
  if (auto r = get(t, "material", "c")) m.c = r->number();
  if (auto r = get(t, "material", "k0")) m.k0_override = r->number();
  if (auto r = get(t, "material", "omega_p")) {
    m.drude = DrudeParams{r->number(), m.drude ? m.drude->gamma : 0.0};
  }
  if (auto r = get(t, "material", "gamma")) {
    if (!m.drude) r->fail("gamma needs omega_p");
    m.drude->gamma = r->number();
  }
  if (auto r = get(t, "material", "eps_m")) {
    const auto v = r->numbers();
    if (v.size() > 2) r->fail("expected 're' or 're im'");
    m.eps_m = cplx(v[0], v.size() == 2 ? v[1] : 0.0);
  }
}

void apply_discretization(const pt::ptree& t, DiscretizationConfig& d) {
  if (auto r = get(t, "discretization", "h")) d.h = r->number();
  if (auto r = get(t, "discretization", "h_int")) d.h_int = r->number();
  if (auto r = get(t, "discretization", "theta_intervals")) d.theta_intervals = r->integer();
  if (auto r = get(t, "discretization", "dz")) d.dz = r->number();
  if (auto r = get(t, "discretization", "layer_points_per_wavelength")) d.layer_points_per_wavelength = r->number();
  if (auto r = get(t, "discretization", "n_fourier")) d.n_fourier = r->integer();
  if (auto r = get(t, "discretization", "grading")) d.grading = r->number();
  if (auto r = get(t, "discretization", "mirror")) {
    if (r->text() == "auto") {
      d.mirror.reset();
    } else {
      d.mirror = r->boolean();
    }
  }
}

void apply_pml(const pt::ptree& t, PmlConfig& p) {
  if (auto r = get(t, "pml", "enabled")) p.enabled = r->boolean();
  if (auto r = get(t, "pml", "theta")) {
    p.theta.clear();
    for (const auto& tok : r->list()) {
      if (tok == "auto") {
        p.theta.emplace_back();
      } else {
        p.theta.emplace_back(r->number(tok));
      }
    }
    if (p.theta.empty()) r->fail("expected 'auto' or one angle per corner");
  }
  if (auto r = get(t, "pml", "clip")) p.clip = r->number();
  if (auto r = get(t, "pml", "tau1")) p.tol.tau1 = r->number();
  if (auto r = get(t, "pml", "tau2")) p.tol.tau2 = r->number();
}

void apply_run(const pt::ptree& t, RunConfig& c) {
  double unit = 1.0;
  if (auto r = get(t, "run", "alpha_unit")) {
    if (r->text() == "deg") {
      unit = std::numbers::pi / 180.0;
    } else if (r->text() != "rad") {
      r->fail("expected rad or deg");
    }
  }
  const auto list = get(t, "run", "alpha_inc");
  const auto sweep = get(t, "run", "alpha_sweep");
  if (list && sweep) sweep->fail("give either alpha_inc or alpha_sweep");
  if (list) {
    c.alpha_inc.clear();
    for (double a : list->numbers()) c.alpha_inc.push_back(a * unit);
  }
  if (sweep) {
    const int n = sweep->integer();
    if (n < 1) sweep->fail("sweep needs at least one incidence");
    c.alpha_inc.clear();
    for (int j = 0; j < n; ++j) c.alpha_inc.push_back(2.0 * std::numbers::pi * j / n);
  }
  if (auto r = get(t, "run", "boundary")) {
    if (r->text() == "dtn") {
      c.boundary = BoundaryMode::dtn;
    } else if (r->text() == "abc") {
      c.boundary = BoundaryMode::abc;
    } else {
      r->fail("expected dtn or abc");
    }
  }
  if (auto r = get(t, "run", "output")) c.output_dir = r->text();
  if (auto r = get(t, "run", "refine")) {
    c.refine = r->integer();
    if (c.refine < 0) r->fail("refine must be non-negative");
  }
  if (auto r = get(t, "run", "dual")) c.dual = r->boolean();
}

// Shortest text that reads back to the same double.
std::string num(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  const pt::ptree tree = read_tree(text);
  RunConfig c;
  if (auto r = get(tree, "geometry", "preset")) {
    if (r->text() != "paper-triangle") r->fail("unknown preset '" + r->text() + "'");
    const auto omega = get(tree, "material", "omega");
    c = paper_triangle_config(omega ? omega->number() : 9.0);
  }
  apply_geometry(tree, c.geometry);
  apply_material(tree, c.material);
  apply_discretization(tree, c.discretization);
  apply_pml(tree, c.pml);
  apply_run(tree, c);
  if (c.geometry.corner_labels.size() > 0 && !c.geometry.corner_vertices.empty() &&
      c.geometry.corner_labels.size() != c.geometry.corner_vertices.size()) {
    throw ConfigError("geometry: labels and corners differ in length");
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const RunConfig& c) {
  std::ostringstream os;
  const auto join = [](const auto& v, auto f, const char* sep) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + f(v[i]);
    return s;
  };
  const GeometryConfig& g = c.geometry;
  os << "[geometry]\n";
  os << "R = " << num(g.R) << "\n";
  os << "polygon = " << join(g.polygon, [](const Vec2& p) { return num(p.x) + " " + num(p.y); }, ", ") << "\n";
  if (!g.corner_vertices.empty()) {
    os << "corners = " << join(g.corner_vertices, [](int v) { return std::to_string(v); }, " ") << "\n";
  }
  if (!g.corner_labels.empty()) {
    os << "labels = " << join(g.corner_labels, [](const std::string& s) { return s; }, " ") << "\n";
  }
  if (!g.rho.empty()) os << "rho = " << join(g.rho, num, " ") << "\n";

  const MaterialConfig& m = c.material;
  os << "\n[material]\n";
  os << "eps_d = " << num(m.eps_d) << "\nmu_d = " << num(m.mu_d) << "\nmu_m = " << num(m.mu_m) << "\n";
  os << "omega = " << num(m.omega) << "\nc = " << num(m.c) << "\n";
  if (m.drude) os << "omega_p = " << num(m.drude->omega_p) << "\ngamma = " << num(m.drude->gamma) << "\n";
  if (m.eps_m) os << "eps_m = " << num(m.eps_m->real()) << " " << num(m.eps_m->imag()) << "\n";
  if (m.k0_override) os << "k0 = " << num(*m.k0_override) << "\n";

  const DiscretizationConfig& d = c.discretization;
  os << "\n[discretization]\n";
  os << "h = " << num(d.h) << "\nh_int = " << num(d.h_int) << "\ntheta_intervals = " << d.theta_intervals
     << "\ndz = " << num(d.dz) << "\nlayer_points_per_wavelength = " << num(d.layer_points_per_wavelength)
     << "\nn_fourier = " << d.n_fourier << "\ngrading = " << num(d.grading) << "\nmirror = "
     << (d.mirror ? (*d.mirror ? "true" : "false") : "auto") << "\n";

  const PmlConfig& p = c.pml;
  os << "\n[pml]\n";
  os << "enabled = " << (p.enabled ? "true" : "false") << "\n";
  os << "theta = "
     << (p.theta.empty() ? std::string("auto")
                         : join(p.theta, [](const std::optional<double>& t) { return t ? num(*t) : std::string("auto"); },
                                " "))
     << "\n";
  os << "clip = " << num(p.clip) << "\ntau1 = " << num(p.tol.tau1) << "\ntau2 = " << num(p.tol.tau2) << "\n";

  os << "\n[run]\n";
  if (!c.alpha_inc.empty()) os << "alpha_inc = " << join(c.alpha_inc, num, " ") << "\nalpha_unit = rad\n";
  os << "boundary = " << (c.boundary == BoundaryMode::dtn ? "dtn" : "abc") << "\n";
  os << "output = " << c.output_dir << "\nrefine = " << c.refine << "\ndual = " << (c.dual ? "true" : "false")
     << "\n";
  return os.str();
}

}  // namespace cpml
