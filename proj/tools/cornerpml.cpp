// Command-line driver: modes, mesh, solve, sweep and dual subcommands.

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "cornerpml/config.hpp"
#include "cornerpml/corner_modes.hpp"
#include "cornerpml/error.hpp"
#include "cornerpml/materials.hpp"
#include "cornerpml/mesh.hpp"
#include "cornerpml/mesh_io.hpp"
#include "cornerpml/pipeline.hpp"
#include "cornerpml/pml.hpp"

namespace fs = std::filesystem;
using namespace cpml;
using nlohmann::json;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<int> refine;
  bool no_pml = false;
  std::optional<std::string> boundary;
};

std::string num(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

RunConfig resolve(const Options& o) {
  RunConfig c = load_config(o.config);
  if (o.refine) c.refine = *o.refine;
  if (o.no_pml) c.pml.enabled = false;
  if (o.boundary) c.boundary = *o.boundary == "abc" ? BoundaryMode::abc : BoundaryMode::dtn;
  if (!o.out.empty()) c.output_dir = o.out;
  return c;
}

fs::path prepare_output(const RunConfig& c) {
  const fs::path dir(c.output_dir);
  fs::create_directories(dir);
  std::ofstream(dir / "config.ini") << format_config(c);
  return dir;
}

void write_json(const fs::path& path, const json& j) { std::ofstream(path) << j.dump(2) << "\n"; }

void write_fields(const fs::path& dir, const std::string& stem, const Scene& sc, const LinearSystem& sys,
                  const VectorC& x) {
  export_vtk(sc.problem.disk, (dir / (stem + "_disk.vtk")).string(), disk_values(sys, x));
  for (std::size_t n = 0; n < sc.corners.size(); ++n) {
    export_vtk(sc.problem.strips[n], (dir / (stem + "_strip_" + sc.corners[n].label + ".vtk")).string(),
               strip_values(sys, x, n));
  }
}

json scene_report(const Scene& sc, const Runner* runner) {
  json j = scene_json(sc, runner ? static_cast<std::size_t>(runner->system().A.rows()) : 0);
  j["config"] = format_config(sc.config);
  return j;
}

void require_incidences(const RunConfig& c) {
  if (c.alpha_inc.empty()) throw ConfigError("run: alpha_inc or alpha_sweep is required");
}

int cmd_modes(const RunConfig& c) {
  const fs::path dir = prepare_output(c);
  c.material.validate();
  const double kappa = c.material.contrast().real();
  std::ofstream csv(dir / "modes.csv");
  csv << "corner,vertex,aperture,kappa,kind,re_lambda,im_lambda,parity,residual,eta,flux_sign,theta_lo,theta_hi\n";
  const std::vector<CornerSpec> corners = polygon_corners(c.geometry.polygon);
  std::vector<int> vertices = c.geometry.corner_vertices;
  if (vertices.empty()) {
    for (int i = 0; i < static_cast<int>(corners.size()); ++i) vertices.push_back(i);
  }
  for (std::size_t n = 0; n < vertices.size(); ++n) {
    const CornerSpec& cs = corners.at(static_cast<std::size_t>(vertices[n]));
    const std::string label = n < c.geometry.corner_labels.size() ? c.geometry.corner_labels[n] : "corner" + std::to_string(n + 1);
    const SingularExponentSet set = singular_exponents(cs.aperture, kappa);
    std::string eta, sign, lo, hi;
    if (set.imaginary) {
      const OutgoingMode out = select_outgoing(cs.aperture, kappa, *set.imaginary);
      std::vector<cplx> roots;
      for (const Exponent& e : set.roots) roots.push_back(e.lambda);
      const ThetaInterval iv = admissible_theta(roots, out.lambda);
      eta = num(set.imaginary->eta);
      sign = flux_integral(out.eta, cs.aperture, kappa, out.parity, c.material.eps_d) > 0.0 ? "+" : "-";
      lo = num(iv.lo);
      hi = num(iv.hi);
    }
    const std::string head = label + "," + std::to_string(vertices[n]) + "," + num(cs.aperture) + "," + num(kappa) + ",";
    const std::string tail = "," + eta + "," + sign + "," + lo + "," + hi + "\n";
    if (set.imaginary) {
      for (double s : {1.0, -1.0}) {
        csv << head << "imaginary,0," << num(s * set.imaginary->eta) << "," << to_string(set.imaginary->parity)
            << ",0" << tail;
      }
    }
    for (const Exponent& e : set.roots) {
      csv << head << (e.pole_point ? "pole" : "root") << "," << num(e.lambda.real()) << "," << num(e.lambda.imag())
          << "," << to_string(e.parity) << "," << num(e.residual) << tail;
    }
  }
  return 0;
}

int cmd_mesh(const RunConfig& c) {
  const fs::path dir = prepare_output(c);
  const Scene sc = build_scene(c);
  export_msh(sc.problem.disk, (dir / "disk.msh").string());
  export_vtk(sc.problem.disk, (dir / "disk.vtk").string());
  for (std::size_t n = 0; n < sc.corners.size(); ++n) {
    export_vtk(sc.problem.strips[n], (dir / ("strip_" + sc.corners[n].label + ".vtk")).string());
  }
  write_json(dir / "mesh.json", scene_report(sc, nullptr));
  for (const std::string& w : sc.warnings) std::cerr << "warning: " << w << "\n";
  return 0;
}

int cmd_solve(const RunConfig& c) {
  require_incidences(c);
  const fs::path dir = prepare_output(c);
  const Scene sc = build_scene(c);
  for (const std::string& w : sc.warnings) std::cerr << "warning: " << w << "\n";
  Runner runner(sc);
  json report = scene_report(sc, &runner);
  json results = json::array();
  for (std::size_t i = 0; i < c.alpha_inc.size(); ++i) {
    const RunResult r = runner.solve(c.alpha_inc[i], c.dual);
    write_fields(dir, "field_" + std::to_string(i), sc, runner.system(), r.x);
    results.push_back(result_json(r));
  }
  report["results"] = results;
  write_json(dir / "report.json", report);
  return 0;
}

int cmd_sweep(const RunConfig& c) {
  require_incidences(c);
  const fs::path dir = prepare_output(c);
  const Scene sc = build_scene(c);
  for (const std::string& w : sc.warnings) std::cerr << "warning: " << w << "\n";
  Runner runner(sc);
  std::vector<RunResult> rows;
  for (double a : c.alpha_inc) rows.push_back(runner.solve(a, c.dual));
  std::stable_sort(rows.begin(), rows.end(), [](const RunResult& a, const RunResult& b) { return a.alpha_inc < b.alpha_inc; });
  std::ofstream csv(dir / "sweep.csv");
  csv << "alpha_inc,J_ext";
  for (const CornerInfo& ci : sc.corners) csv << ",J_" << ci.label;
  csv << ",mismatch\n";
  json report = scene_report(sc, &runner);
  json results = json::array();
  for (const RunResult& r : rows) {
    csv << num(r.alpha_inc) << "," << num(r.energy.J_ext);
    for (const CornerReport& cr : r.energy.corners) csv << "," << num(cr.J);
    csv << "," << num(r.energy.mismatch) << "\n";
    results.push_back(result_json(r));
  }
  report["results"] = results;
  write_json(dir / "report.json", report);
  return 0;
}

// Second cutoff used for the robustness column.
Cutoff alternate_cutoff(double rho) { return {0.5 * rho, 0.95 * rho}; }

int cmd_dual(const RunConfig& c) {
  require_incidences(c);
  const fs::path dir = prepare_output(c);
  const Scene sc = build_scene(c);
  if (sc.corners.empty()) throw ConfigError("dual: the scene has no corner strips");
  Runner runner(sc);
  std::vector<VectorC> alternate;
  for (std::size_t n = 0; n < sc.corners.size(); ++n) {
    const CornerInfo& ci = sc.corners[n];
    const VectorC& w = runner.dual_solution(n);
    write_fields(dir, "dual_" + ci.label, sc, runner.system(), w);
    const VectorC G = assemble_dual_source(sc.problem, runner.system(), n, -ci.mode.lambda_out, ci.mode.mode,
                                           alternate_cutoff(ci.spec.rho));
    alternate.push_back(runner.solver().solve(G));
  }
  std::ofstream csv(dir / "dual.csv");
  csv << "alpha_inc,corner,b_overlap_re,b_overlap_im,b_dual_re,b_dual_im,rel_diff,b_dual_alt_re,b_dual_alt_im,"
         "rel_diff_cutoff\n";
  json report = scene_report(sc, &runner);
  json results = json::array();
  for (double a : c.alpha_inc) {
    const RunResult r = runner.solve(a, true);
    const VectorC rhs = assemble_rhs(sc.problem, runner.system(), a);
    double bmax = 0.0;
    for (const CornerReport& cr : r.energy.corners) bmax = std::max(bmax, std::abs(cr.b));
    for (std::size_t n = 0; n < sc.corners.size(); ++n) {
      const CornerReport& cr = r.energy.corners[n];
      const cplx alt = dual_coefficient(alternate[n], rhs, sc.corners[n].mode);
      const double denom = std::max(bmax, 1e-300);
      csv << num(a) << "," << sc.corners[n].label << "," << num(cr.b.real()) << "," << num(cr.b.imag()) << ","
          << num(cr.b_dual->real()) << "," << num(cr.b_dual->imag()) << "," << num(std::abs(*cr.b_dual - cr.b) / denom)
          << "," << num(alt.real()) << "," << num(alt.imag()) << "," << num(std::abs(alt - *cr.b_dual) / denom) << "\n";
    }
    results.push_back(result_json(r));
  }
  report["results"] = results;
  write_json(dir / "report.json", report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Corner PMLs for scattering by negative-permittivity polygons"};
  app.require_subcommand(1);
  Options o;
  const auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "Configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "Output directory (overrides [run] output)");
    sub->add_option("--refine", o.refine, "Uniform refinement count")->check(CLI::NonNegativeNumber);
    sub->add_flag("--no-pml", o.no_pml, "Disable corner PMLs");
    sub->add_option("--boundary", o.boundary, "Outer boundary condition")->check(CLI::IsMember({"dtn", "abc"}));
  };
  struct Command {
    const char* name;
    const char* help;
    int (*run)(const RunConfig&);
  };
  const Command commands[] = {
      {"modes", "Singular exponents, outgoing modes and admissible PML angles per corner", cmd_modes},
      {"mesh", "Build and export the disk and strip meshes", cmd_mesh},
      {"solve", "Solve for each incidence and write fields and the energy report", cmd_solve},
      {"sweep", "Energy fluxes over the incidence list", cmd_sweep},
      {"dual", "Dual solutions and the coefficient extraction comparison", cmd_dual},
  };
  int (*selected)(const RunConfig&) = nullptr;
  for (const Command& cmd : commands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    add_common(sub);
    sub->callback([&selected, run = cmd.run] { selected = run; });
  }
  CLI11_PARSE(app, argc, argv);
  try {
    return selected(resolve(o));
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
