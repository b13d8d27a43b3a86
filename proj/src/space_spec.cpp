#include "kropina/space_spec.hpp"

#include "kropina/model_spaces.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <filesystem>

namespace kropina {

namespace {

double parse_real(const std::string& s) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
    throw ValidationError("malformed number '" + s + "'");
  }
  return v;
}

int parse_int(const std::string& s) {
  const double v = parse_real(s);
  if (v != std::trunc(v) || v < 1 || v > 1e6) throw ValidationError("expected a positive integer, got '" + s + "'");
  return static_cast<int>(v);
}

}  // namespace

Vec parse_vector(const std::string& text) {
  std::vector<double> values;
  size_t start = 0;
  while (true) {
    const size_t comma = text.find(',', start);
    std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    while (!item.empty() && item.front() == ' ') item.erase(item.begin());
    while (!item.empty() && item.back() == ' ') item.pop_back();
    values.push_back(parse_real(item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return Eigen::Map<Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
}

SpaceDefinition resolve_space(const std::string& spec, bool cover, LoadReport* report) {
  SpaceDefinition s;
  if (spec.rfind("euclidean:", 0) == 0) {
    const std::string rest = spec.substr(10);
    const size_t colon = rest.find(':');
    if (colon == std::string::npos) throw ValidationError("expected euclidean:n:c1,...,cn");
    const int n = parse_int(rest.substr(0, colon));
    const Vec w = parse_vector(rest.substr(colon + 1));
    if (w.size() != n) throw ValidationError("euclidean wind needs " + std::to_string(n) + " components");
    s = euclidean_space(n, w);
  } else if (spec.rfind("sphere:", 0) == 0) {
    s = sphere_space(parse_int(spec.substr(7)));
  } else if (spec.rfind("cylinder:", 0) == 0) {
    const Vec ab = parse_vector(spec.substr(9));
    if (ab.size() != 2) throw ValidationError("expected cylinder:A,B");
    s = cylinder_space(ab[0], ab[1]);
  } else if (spec == "torus") {
    s = torus_space();
  } else if (std::filesystem::exists(spec)) {
    s = load_space(parse_space_document(read_text_file(spec)), report);
  } else {
    throw ValidationError("unknown space '" + spec + "'");
  }
  s.cover_mode = cover;
  return s;
}

}  // namespace kropina
