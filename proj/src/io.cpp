#include "tconv/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace tconv {

using nlohmann::json;

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool is_header(const std::vector<std::string>& cells) {
  for (std::size_t k = 0; k < cells.size(); ++k)
    if (cells[k] != "x" + std::to_string(k)) return false;
  return !cells.empty();
}

}  // namespace

PointCloud read_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  long lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto cells = split_commas(body);
    if (first && is_header(cells)) {
      first = false;
      continue;
    }
    first = false;
    std::vector<double> row;
    for (const auto& cell : cells) {
      errno = 0;
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size() || errno == ERANGE || !std::isfinite(v))
        throw ParseError("row " + std::to_string(lineno) + ": bad number '" + cell + "'", lineno);
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError("row " + std::to_string(lineno) + ": expected " + std::to_string(rows.front().size()) +
                           " columns, got " + std::to_string(row.size()),
                       lineno);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("no points in input", 0);
  return PointCloud::from_rows(rows);
}

PointCloud read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open " + path);
  return read_csv(in);
}

void write_csv(std::ostream& out, const PointCloud& cloud, bool header) {
  if (header) {
    for (int k = 0; k < cloud.dim(); ++k) out << (k ? ",x" : "x") << k;
    out << '\n';
  }
  for (Index i = 0; i < cloud.size(); ++i) {
    for (int k = 0; k < cloud.dim(); ++k) {
      if (k) out << ',';
      out << format_double(cloud.matrix()(k, i));
    }
    out << '\n';
  }
}

namespace {

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

json to_json(const DefectProfile& profile) {
  return {{"kind", to_string(profile.kind)},
          {"horizon", finite_or_null(profile.horizon)},
          {"breakpoints", profile.breakpoints},
          {"values", profile.values}};
}

DefectProfile profile_from_json(const json& j) {
  DefectProfile p;
  p.kind = profile_kind_from_string(j.at("kind").get<std::string>());
  p.horizon = j.at("horizon").is_null() ? std::numeric_limits<double>::infinity() : j.at("horizon").get<double>();
  p.breakpoints = j.at("breakpoints").get<std::vector<double>>();
  p.values = j.at("values").get<std::vector<double>>();
  if (p.breakpoints.size() != p.values.size()) throw ArgumentError("profile: breakpoints and values differ in length");
  return p;
}

json to_json(const SelectionResult& result, bool with_profile) {
  json trace = json::array();
  for (const auto& e : result.k_trace)
    trace.push_back({{"K", e.k}, {"ellK", finite_or_null(e.ell_k)}, {"saturated", e.saturated},
                     {"jump_found", e.jump_found}});
  json j = {{"lambda_grid", result.lambda_grid},
            {"g_values", result.g_values},
            {"jump_index", result.jump_index ? json(*result.jump_index) : json(nullptr)},
            {"lambda_choice", result.lambda_choice},
            {"t_sel", result.t_sel},
            {"converged", result.converged},
            {"K_trace", trace}};
  if (with_profile) j["profile"] = to_json(result.profile);
  return j;
}

json to_json(const SimplicialComplex& complex) {
  json simplices = json::object();
  for (int k = 0; k < complex.dimension_count(); ++k) {
    const SimplexList& list = complex.simplices(k);
    json arr = json::array();
    for (std::size_t s = 0; s < list.size(); ++s) {
      const auto v = list.vertices(s);
      arr.push_back(std::vector<Index>(v.begin(), v.end()));
    }
    simplices[std::to_string(k)] = std::move(arr);
  }
  return {{"t", complex.scale()}, {"d_cap", complex.d_cap()}, {"simplices", simplices}};
}

SimplicialComplex complex_from_json(const json& j) {
  SimplicialComplex complex(j.at("t").get<double>(), j.at("d_cap").get<int>());
  for (int k = 0; k < complex.dimension_count(); ++k) {
    const auto key = std::to_string(k);
    if (!j.at("simplices").contains(key)) continue;
    for (const auto& s : j.at("simplices").at(key)) {
      const auto v = s.get<std::vector<Index>>();
      complex.simplices(k).push(v, std::numeric_limits<double>::quiet_NaN());
    }
  }
  return complex;
}

std::string fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot write " + path);
  out << text;
  out.close();
  if (!out) throw ArgumentError("write failed for " + path);
  return fnv1a64(text);
}

}  // namespace tconv
