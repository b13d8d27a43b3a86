// kropina: command-line front end for Kropina navigation spaces.
//
//   kropina convert  --from ab|nav --space FILE [--kappa EXPR] --out FILE
//   kropina geodesic --space SPEC --point P --dir Y --tmax T [--steps N] --out FILE
//   kropina distance --space SPEC --from P --to Q [--cover] [--oracle] [--format text|json]
//   kropina cutlocus --space SPEC --point P [--samples N] [--cover] --out FILE
//   kropina check    --space SPEC [--killing] [--projective] [--closedform]
//
// Exit status: 0 success, 1 validation error, 2 numerical failure.

#include "kropina/dsl.hpp"
#include "kropina/errors.hpp"
#include "kropina/geodesic.hpp"
#include "kropina/model_spaces.hpp"
#include "kropina/projective.hpp"
#include "kropina/separation.hpp"
#include "kropina/space_spec.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace kropina;

namespace {

std::string num(double v, const char* fmt = "%.17g") {
  char buf[40];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string join(const Vec& v, const char* fmt = "%.17g") {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v[i], fmt);
  return s;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << content;
  if (!out) throw ValidationError("failed writing '" + path + "'");
}

std::string csv_sibling(const std::string& path) {
  const size_t dot = path.find_last_of('.');
  const size_t slash = path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + ".csv";
  return path.substr(0, dot) + ".csv";
}

Vec checked_point(const SpaceDefinition& space, const std::string& text, const char* what) {
  const Vec p = parse_vector(text);
  if (p.size() != space.dim()) {
    throw ValidationError(std::string(what) + " needs " + std::to_string(space.dim()) + " coordinates");
  }
  if (space.constrain && std::abs(p.norm() - 1.0) > 1e-9) {
    throw ValidationError(std::string(what) + " must lie on the unit sphere");
  }
  if (space.chart_box && !space.chart_box->contains(p)) {
    throw ValidationError(std::string(what) + " lies outside the chart box");
  }
  return p;
}

// ---------------------------------------------------------------------------
// SVG

struct Series {
  std::vector<double> x, y;
  std::string color;
};

std::string render_svg(const std::vector<Series>& series, double period_x, double period_y, const std::string& title) {
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const Series& s : series) {
    for (size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (xmin > xmax) xmin = ymin = -1.0, xmax = ymax = 1.0;
  const double pad = 0.05 * std::max({xmax - xmin, ymax - ymin, 1e-9});
  xmin -= pad, xmax += pad, ymin -= pad, ymax += pad;
  const double W = 640.0, H = 640.0;
  const double sx = W / (xmax - xmin), sy = H / (ymax - ymin);
  const double sc = std::min(sx, sy);
  auto px = [&](double x) { return num((x - xmin) * sc, "%.3f"); };
  auto py = [&](double y) { return num(H - (y - ymin) * sc, "%.3f"); };
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  o << "<title>" << title << "</title>\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (period_x > 0.0) {
    for (double g = std::ceil(xmin / period_x) * period_x; g <= xmax; g += period_x) {
      o << "<line x1=\"" << px(g) << "\" y1=\"0\" x2=\"" << px(g) << "\" y2=\"" << H
        << "\" stroke=\"#bbb\" stroke-dasharray=\"4 4\"/>\n";
    }
  }
  if (period_y > 0.0) {
    for (double g = std::ceil(ymin / period_y) * period_y; g <= ymax; g += period_y) {
      o << "<line x1=\"0\" y1=\"" << py(g) << "\" x2=\"" << W << "\" y2=\"" << py(g)
        << "\" stroke=\"#bbb\" stroke-dasharray=\"4 4\"/>\n";
    }
  }
  for (const Series& s : series) {
    if (s.x.size() == 1) {
      o << "<circle cx=\"" << px(s.x[0]) << "\" cy=\"" << py(s.y[0]) << "\" r=\"4\" fill=\"" << s.color << "\"/>\n";
      continue;
    }
    o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < s.x.size(); ++i) o << (i ? " " : "") << px(s.x[i]) << "," << py(s.y[i]);
    o << "\"/>\n";
  }
  o << "</svg>\n";
  return o.str();
}

double period_of(const SpaceDefinition& space, int axis) {
  if (axis >= static_cast<int>(space.topology.size())) return 0.0;
  const CoordinateTag& t = space.topology[static_cast<size_t>(axis)];
  return t.periodic ? t.period : 0.0;
}

std::pair<int, int> parse_plane(const std::string& text, int dim) {
  const Vec v = parse_vector(text);
  if (v.size() != 2) throw ValidationError("--plane expects two coordinate indices i,j");
  const int i = static_cast<int>(v[0]) - 1, j = static_cast<int>(v[1]) - 1;
  if (i < 0 || j < 0 || i >= dim || j >= dim || i == j || v[0] != i + 1 || v[1] != j + 1) {
    throw ValidationError("--plane indices must be distinct integers in 1.." + std::to_string(dim));
  }
  return {i, j};
}

// ---------------------------------------------------------------------------
// Subcommands

struct ConvertArgs {
  std::string from, space, kappa = "0", out;
};

int run_convert(const ConvertArgs& a) {
  const std::string text = read_text_file(a.space);
  std::string result;
  if (a.from == "ab") {
    const SpaceDocument nav = alpha_beta_to_navigation(parse_alpha_beta_document(text));
    load_space(nav);
    result = dump_space_document(nav);
  } else {
    const AlphaBetaDocument ab = navigation_to_alpha_beta(parse_space_document(text), a.kappa);
    load_alpha_beta(ab);
    result = dump_alpha_beta_document(ab);
  }
  write_file(a.out, result);
  std::cout << "wrote " << a.out << "\n";
  return 0;
}

struct GeodesicArgs {
  std::string space, point, dir, out, format = "csv", plane = "1,2";
  double tmax = 0.0;
  int steps = kDefaultSteps;
  bool cover = false;
};

int run_geodesic(const GeodesicArgs& a) {
  const SpaceDefinition space = resolve_space(a.space, a.cover);
  const Vec p = checked_point(space, a.point, "--point");
  const Vec y = parse_vector(a.dir);
  if (y.size() != space.dim()) throw ValidationError("--dir needs " + std::to_string(space.dim()) + " components");
  if (!(a.tmax > 0.0)) throw ValidationError("--tmax must be positive");
  if (a.steps < 16) throw ValidationError("--steps must be at least 16");
  const PathSample path = kropina_geodesic(space, Tangent(ChartPoint(p), y), a.tmax, a.steps);
  for (const std::string& w : path.warnings) std::cerr << "warning: " << w << "\n";

  const int n = space.dim();
  std::ostringstream csv;
  csv << "t";
  for (int i = 1; i <= n; ++i) csv << ",x" << i;
  for (int i = 1; i <= n; ++i) csv << ",v" << i;
  csv << ",F\n";
  for (size_t k = 0; k < path.size(); ++k) {
    csv << num(path.params[k]) << "," << join(path.points[k]) << "," << join(path.velocities[k]) << ","
        << (path.admissible[k] ? num(path.f_values[k]) : std::string("nan")) << "\n";
  }
  if (a.format == "json") {
    nlohmann::ordered_json j;
    j["space"] = space.name;
    j["samples"] = nlohmann::ordered_json::array();
    for (size_t k = 0; k < path.size(); ++k) {
      const Vec& x = path.points[k];
      const Vec& v = path.velocities[k];
      j["samples"].push_back({{"t", path.params[k]},
                              {"x", std::vector<double>(x.data(), x.data() + x.size())},
                              {"v", std::vector<double>(v.data(), v.data() + v.size())},
                              {"F", path.f_values[k]}});
    }
    j["truncated"] = path.truncated;
    write_file(a.out, j.dump(2) + "\n");
  } else if (a.format == "svg") {
    const auto [i, jx] = parse_plane(a.plane, n);
    Series s{{}, {}, "#1f4e9c"};
    for (const Vec& x : path.points) {
      s.x.push_back(x[i]);
      s.y.push_back(x[jx]);
    }
    write_file(a.out, render_svg({s}, period_of(space, i), period_of(space, jx), "Kropina geodesic"));
    write_file(csv_sibling(a.out), csv.str());
  } else {
    write_file(a.out, csv.str());
  }
  std::cout << "wrote " << path.size() << " samples to " << a.out << (path.truncated ? " (truncated)" : "") << "\n";
  return 0;
}

struct DistanceArgs {
  std::string space, from, to, format = "text";
  bool cover = false, oracle = false;
  int segments = 16, restarts = 8;
  std::uint64_t seed = 0;
};

int run_distance(const DistanceArgs& a) {
  const SpaceDefinition space = resolve_space(a.space, a.cover);
  const Vec p = checked_point(space, a.from, "--from");
  const Vec q = checked_point(space, a.to, "--to");
  const SeparationResult r = separation(space, p, q);
  std::optional<double> oracle;
  if (a.oracle) oracle = polyline_oracle(space, p, q, a.segments, a.restarts, a.seed);
  const bool finite = r.status != SeparationStatus::unreachable;

  if (a.format == "json") {
    nlohmann::ordered_json j;
    j["status"] = to_string(r.status);
    j["value"] = finite ? nlohmann::ordered_json(r.value) : nlohmann::ordered_json(nullptr);
    j["tau_star"] = finite ? nlohmann::ordered_json(r.tau_star) : nlohmann::ordered_json(nullptr);
    if (finite) {
      const Vec& y = r.initial_direction.components();
      j["initial_direction"] = std::vector<double>(y.data(), y.data() + y.size());
      j["minimizing_directions"] = nlohmann::ordered_json::array();
      for (const Tangent& t : r.minimizing_directions) {
        const Vec& c = t.components();
        j["minimizing_directions"].push_back(std::vector<double>(c.data(), c.data() + c.size()));
      }
    }
    j["evaluations"] = r.evaluations;
    j["capped"] = r.capped;
    if (a.oracle) j["oracle"] = oracle ? nlohmann::ordered_json(*oracle) : nlohmann::ordered_json("UNREACHABLE");
    std::cout << j.dump() << "\n";
    return 0;
  }
  if (finite) {
    std::cout << to_string(r.status) << " " << num(r.value, "%.10g") << "\n";
    std::cout << "tau_star " << num(r.tau_star, "%.12g") << "\n";
    std::cout << "initial_direction " << join(r.initial_direction.components(), "%.10g") << "\n";
    if (r.minimizing_directions.size() > 1) {
      std::cout << "minimizing_directions " << r.minimizing_directions.size() << "\n";
    }
  } else {
    std::cout << "UNREACHABLE" << (r.capped ? " (capped)" : "") << "\n";
  }
  std::cout << "evaluations " << r.evaluations << "\n";
  if (a.oracle) std::cout << "oracle " << (oracle ? num(*oracle, "%.10g") : std::string("UNREACHABLE")) << "\n";
  return 0;
}

struct CutLocusArgs {
  std::string space, point, out, format = "csv", plane = "1,2";
  int samples = 257;
  bool cover = false;
};

int run_cutlocus(const CutLocusArgs& a) {
  const SpaceDefinition space = resolve_space(a.space, a.cover);
  const Vec p = checked_point(space, a.point, "--point");
  if (a.samples < 2) throw ValidationError("--samples must be at least 2");
  const CutLocusCurve curve = cut_locus(space, p, a.samples);
  if (curve.experimental) std::cerr << "note: quotient-mode cut locus is experimental\n";
  const int n = space.dim();
  std::ostringstream csv;
  csv << "param";
  for (int i = 1; i <= n; ++i) csv << ",x" << i;
  csv << "\n";
  for (size_t k = 0; k < curve.samples.size(); ++k) {
    csv << num(curve.parameter[k]) << "," << join(curve.samples[k].coords()) << "\n";
  }
  if (a.format == "svg") {
    const auto [i, j] = parse_plane(a.plane, n);
    std::vector<Series> series;
    for (size_t k = 0; k < curve.samples.size(); ++k) {
      if (k == 0 || curve.branch[k] != curve.branch[k - 1]) series.push_back({{}, {}, series.empty() ? "#b22222" : "#2e8b57"});
      series.back().x.push_back(curve.samples[k].coords()[i]);
      series.back().y.push_back(curve.samples[k].coords()[j]);
    }
    series.push_back({{p[i]}, {p[j]}, "black"});
    write_file(a.out, render_svg(series, period_of(space, i), period_of(space, j), "F-cut locus"));
    write_file(csv_sibling(a.out), csv.str());
  } else {
    write_file(a.out, csv.str());
  }
  std::cout << "wrote " << curve.samples.size() << " cut points to " << a.out << "\n";
  return 0;
}

struct CheckArgs {
  std::string space, kappa = "0";
  bool killing = false, projective = false, closedform = false, cover = false;
};

int run_check(const CheckArgs& a) {
  LoadReport load;
  const SpaceDefinition space = resolve_space(a.space, a.cover, &load);
  const bool all = !a.killing && !a.projective && !a.closedform;
  const std::vector<ChartPoint> probes = space.probe_points(load.probes > 0 ? load.probes : 27);
  std::cout << "space " << space.name << "\n";
  std::cout << "dim " << space.dim() << "\n";
  const FieldDiagnostics d = field_diagnostics(space.nav.h, space.nav.wind, probes);
  if (all || a.killing) {
    std::cout << "probes " << probes.size() << "\n";
    std::cout << "unit_deviation " << num(d.unit_deviation, "%.3e") << "\n";
    std::cout << "killing_residual " << num(d.killing_residual, "%.3e") << "\n";
  }
  if (all) {
    std::cout << "parallel_residual " << num(d.parallel_residual, "%.3e") << "\n";
    std::cout << "closedness_residual " << num(d.closedness_residual, "%.3e") << "\n";
  }
  if (a.killing) {
    std::cout << "strong " << (d.killing_residual <= kTolLoadKilling ? "true" : "false") << "\n";
  }
  if (a.projective) {
    // The embedded sphere chart is not intrinsic; use the stereographic Hopf chart.
    NavigationData nav = space.model == ModelKind::sphere && space.dim() == 4 ? hopf_stereographic_navigation() : space.nav;
    std::vector<ChartPoint> samples = probes;
    if (space.model == ModelKind::sphere) samples = halton_grid(Vec::Constant(3, -1.0), Vec::Constant(3, 1.0), 27);
    if (space.model == ModelKind::sphere && space.dim() != 4) {
      throw ValidationError("--projective supports sphere:3 only");
    }
    std::map<std::string, double> none;
    CompiledExpr kappa(*parse_expression(a.kappa, {nav.dim(), {}}), nav.dim(), none);
    const ScalarField kf = [kappa](const Vec& x) { return kappa(x); };
    const AlphaBetaData ab = to_alpha_beta(nav, kf);
    const ProjectiveVerdict v = projective_equivalence_verdict(ab, samples);
    const NavDerivativeReport r = navigation_parallel_residual(nav, kf, samples);
    std::cout << "projective " << (v.equivalent ? "true" : "false") << "\n";
    std::cout << "beta_residual " << num(v.max_residual, "%.3e") << "\n";
    std::cout << "spray_correction " << num(v.max_spray_correction, "%.3e") << "\n";
    std::cout << "W_residual " << num(r.max_W_residual, "%.3e") << "\n";
    std::cout << "kappa_gradient " << num(r.max_kappa_grad, "%.3e") << "\n";
    std::cout << "r_identity_residual " << num(r.r_identity_residual, "%.3e") << "\n";
    std::cout << "s_identity_residual " << num(r.s_identity_residual, "%.3e") << "\n";
  }
  if (a.closedform) {
    if (space.model == ModelKind::generic) throw ValidationError("--closedform needs a model space");
    double worst = 0.0;
    int compared = 0;
    for (size_t k = 0; k + 1 < probes.size() && compared < 8; k += 2) {
      const Vec& p = probes[k].coords();
      const Vec& q = probes[k + 1].coords();
      const auto expected = closed_form_distance(space, p, q);
      const SeparationResult r = separation(space, p, q);
      if (!expected || r.status != SeparationStatus::finite) continue;
      worst = std::max(worst, std::abs(r.value - *expected));
      ++compared;
    }
    std::cout << "closedform_pairs " << compared << "\n";
    std::cout << "closedform_max_deviation " << num(worst, "%.3e") << "\n";
  }
  return 0;
}

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kropina navigation spaces: geodesics, separations and cut loci"};
  app.require_subcommand(1);

  ConvertArgs conv;
  auto* c = app.add_subcommand("convert", "Convert between alpha-beta and navigation documents");
  c->add_option("--from", conv.from, "Representation of the input document")->required()->check(CLI::IsMember({"ab", "nav"}));
  c->add_option("--space", conv.space, "Input JSON document")->required();
  c->add_option("--kappa", conv.kappa, "Conformal factor expression (nav -> ab)");
  c->add_option("--out", conv.out, "Output JSON document")->required();

  GeodesicArgs geo;
  auto* g = app.add_subcommand("geodesic", "Trace a Kropina geodesic");
  g->add_option("--space", geo.space, "Space spec or JSON document")->required();
  g->add_option("--point", geo.point, "Initial point x1,...,xn")->required();
  g->add_option("--dir", geo.dir, "Initial direction (rescaled to F = 1)")->required();
  g->add_option("--tmax", geo.tmax, "Final parameter")->required();
  g->add_option("--steps", geo.steps, "RK4 steps");
  g->add_option("--out", geo.out, "Output file")->required();
  g->add_option("--format", geo.format, "csv, json or svg")->check(CLI::IsMember({"csv", "json", "svg"}));
  g->add_option("--plane", geo.plane, "Coordinate plane for SVG, e.g. 1,2");
  g->add_flag("--cover", geo.cover, "Ignore periodic identifications");

  DistanceArgs dist;
  auto* d = app.add_subcommand("distance", "Separation d_F(p, q)");
  d->add_option("--space", dist.space, "Space spec or JSON document")->required();
  d->add_option("--from", dist.from, "Point p")->required();
  d->add_option("--to", dist.to, "Point q")->required();
  d->add_flag("--cover", dist.cover, "Ignore periodic identifications");
  d->add_flag("--oracle", dist.oracle, "Also run the polyline oracle");
  d->add_option("--segments", dist.segments, "Oracle polyline segments")->check(CLI::Range(2, 4096));
  d->add_option("--restarts", dist.restarts, "Oracle restarts")->check(CLI::Range(1, 4096));
  d->add_option("--seed", dist.seed, "Oracle seed");
  d->add_option("--format", dist.format, "text or json")->check(CLI::IsMember({"text", "json"}));

  CutLocusArgs cut;
  auto* k = app.add_subcommand("cutlocus", "Analytic F-cut locus of a model space");
  k->add_option("--space", cut.space, "Model space spec")->required();
  k->add_option("--point", cut.point, "Base point")->required();
  k->add_option("--samples", cut.samples, "Samples per branch");
  k->add_flag("--cover", cut.cover, "Universal cover");
  k->add_option("--out", cut.out, "Output file")->required();
  k->add_option("--format", cut.format, "csv or svg")->check(CLI::IsMember({"csv", "svg"}));
  k->add_option("--plane", cut.plane, "Coordinate plane for SVG, e.g. 1,2");

  CheckArgs chk;
  auto* h = app.add_subcommand("check", "Diagnostics report");
  h->add_option("--space", chk.space, "Space spec or JSON document")->required();
  h->add_flag("--killing", chk.killing, "Killing and unit residuals");
  h->add_flag("--projective", chk.projective, "Projective-equivalence criterion");
  h->add_flag("--closedform", chk.closedform, "Solver against closed-form distances");
  h->add_option("--kappa", chk.kappa, "Conformal factor for --projective");
  h->add_flag("--cover", chk.cover, "Universal cover");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "validation_error: " << one_line(e.what()) << "\n";
    return 1;
  }

  try {
    if (*c) return run_convert(conv);
    if (*g) return run_geodesic(geo);
    if (*d) return run_distance(dist);
    if (*k) return run_cutlocus(cut);
    if (*h) return run_check(chk);
  } catch (const ValidationError& e) {
    std::cerr << "validation_error: " << one_line(e.what()) << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical_error: " << one_line(e.what()) << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical_error: " << one_line(e.what()) << "\n";
    return 2;
  }
  return 1;
}
