#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "tconv/common.hpp"
#include "tconv/defect.hpp"
#include "tconv/estimate.hpp"
#include "tconv/select.hpp"

namespace tconv {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, long row) : std::runtime_error(what), row_(row) {}
  long row() const { return row_; }  // 1-based line number, 0 when not tied to a line

 private:
  long row_;
};

/// "%.17g".
std::string format_double(double x);

/// One row per point.  A first line of the form x0,...,x{D-1} is skipped.
PointCloud read_csv(std::istream& in);
PointCloud read_csv_file(const std::string& path);
void write_csv(std::ostream& out, const PointCloud& cloud, bool header = false);

nlohmann::json to_json(const DefectProfile& profile);
DefectProfile profile_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SelectionResult& result, bool with_profile = true);
nlohmann::json to_json(const SimplicialComplex& complex);
SimplicialComplex complex_from_json(const nlohmann::json& j);

/// FNV-1a 64-bit, as 16 lowercase hex digits.
std::string fnv1a64(const std::string& bytes);
std::string read_file(const std::string& path);
/// Writes `text` and returns its digest.
std::string write_file(const std::string& path, const std::string& text);

}  // namespace tconv
